"""
networks.py

Tiny dense networks with exact forward and reverse-mode passes, sparse
feature dictionaries attached to a layer, compilation into a causal
graph, and the JSON network and dataset formats.

A network is viewed as a sequence of stages: the input, then one stage
per layer, with a feature stage inserted after the layer a dictionary is
attached to. Every neuron and every feature is a named node.
"""
import json
import logging
import numpy as np
from dataclasses import dataclass
from pathlib import Path
from typing import (TYPE_CHECKING, Any, Dict, Iterator, List, Mapping,
                    Optional, Sequence, Tuple, Union)
from . import activations
from .errors import (NumericError, ShapeMismatchError, UnknownNodeError,
                     ValidationError)
from .expressions import Binary, Call, Const, Expr, StructuralEquation, Var
from .scm import CausalGraph, Domain, Variable, build_graph
from .seeds import named_generator

if TYPE_CHECKING:
    from .interventions import TargetMetric

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

NodeRef = Union[str, Tuple[int, int]]


def _frozen(array: Any, ndim: int, what: str) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    if array.ndim != ndim:
        raise ShapeMismatchError("%s must be %d-dimensional, got shape %s"
                                 % (what, ndim, array.shape))
    array.flags.writeable = False
    return array


def _affine(weights: np.ndarray, bias: np.ndarray,
            values: np.ndarray) -> np.ndarray:
    # left-to-right fold; compiled equations repeat these operations
    total = weights[:, 0]*values[0]
    for j in range(1, weights.shape[1]):
        total = total + weights[:, j]*values[j]
    return total + bias


def _affine_expression(row: np.ndarray, bias: float,
                       inputs: Sequence[Expr]) -> Expr:
    total: Expr = Binary("*", Const(float(row[0])), inputs[0])
    for j in range(1, len(inputs)):
        total = Binary("+", total, Binary("*", Const(float(row[j])),
                                          inputs[j]))
    return Binary("+", total, Const(float(bias)))


@dataclass(frozen=True)
class Layer:
    """
    One dense layer: post = activation(weights @ input + bias).
    weights has shape (out, in).
    """
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights",
                           _frozen(self.weights, 2, "weights"))
        object.__setattr__(self, "bias", _frozen(self.bias, 1, "bias"))
        activations.get_activation(self.activation)
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeMismatchError("layer has %d rows but %d biases" % (
                self.weights.shape[0], self.bias.shape[0]))
        if self.weights.shape[0] == 0 or self.weights.shape[1] == 0:
            raise ShapeMismatchError("layer widths must be positive")

    @property
    def in_width(self) -> int:
        return self.weights.shape[1]

    @property
    def out_width(self) -> int:
        return self.weights.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights))
                    and np.all(np.isfinite(self.bias)))


@dataclass(frozen=True)
class FeatureDictionary:
    """
    A sparse feature dictionary read off the output of one stage:

        f = relu(W_e (x - b_d) + b_e),   x_hat = W_d f + b_d

    Attributes:
    attach_point [int]: neuron stage the dictionary reads (0 is the input,
                        l is the output of layer l).
    encoder_weights [np.ndarray]: W_e, features x width.
    encoder_bias [np.ndarray]: b_e, one per feature.
    decoder_bias [np.ndarray]: b_d, one per neuron of the attach stage.
    decoder_weights [np.ndarray]: W_d, width x features.
    """
    attach_point: int
    encoder_weights: np.ndarray
    encoder_bias: np.ndarray
    decoder_bias: np.ndarray
    decoder_weights: np.ndarray

    def __post_init__(self) -> None:
        for field, ndim in (("encoder_weights", 2), ("encoder_bias", 1),
                            ("decoder_bias", 1), ("decoder_weights", 2)):
            object.__setattr__(self, field,
                               _frozen(getattr(self, field), ndim, field))
        n, width = self.encoder_weights.shape
        if (self.encoder_bias.shape != (n,)
                or self.decoder_bias.shape != (width,)
                or self.decoder_weights.shape != (width, n)):
            raise ShapeMismatchError(
                "dictionary shapes disagree: W_e %s, b_e %s, b_d %s, W_d %s"
                % (self.encoder_weights.shape, self.encoder_bias.shape,
                   self.decoder_bias.shape, self.decoder_weights.shape))

    @property
    def n_features(self) -> int:
        return self.encoder_weights.shape[0]

    @property
    def width(self) -> int:
        return self.encoder_weights.shape[1]

    @classmethod
    def identity(cls, attach_point: int, width: int) -> "FeatureDictionary":
        """
        One feature per neuron; features equal nonnegative activations.
        """
        eye = np.eye(width)
        return cls(attach_point, eye, np.zeros(width), np.zeros(width), eye)

    @classmethod
    def invertible(cls, attach_point: int,
                   basis: np.ndarray) -> "FeatureDictionary":
        """
        An overcomplete dictionary with 2n features, reading the positive
        and negative parts of `basis @ x`. Decoding reconstructs every x,
        up to rounding, provided the square `basis` is invertible.
        """
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise ShapeMismatchError("basis must be square")
        try:
            inverse = np.linalg.inv(basis)
        except np.linalg.LinAlgError:
            raise ValidationError("basis is singular") from None
        width = basis.shape[0]
        return cls(attach_point, np.vstack([basis, -basis]),
                   np.zeros(2*width), np.zeros(width),
                   np.hstack([inverse, -inverse]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "attach_point": self.attach_point,
            "encoder_weights": self.encoder_weights.tolist(),
            "encoder_bias": self.encoder_bias.tolist(),
            "decoder_bias": self.decoder_bias.tolist(),
            "decoder_weights": self.decoder_weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeatureDictionary":
        return cls(int(data["attach_point"]), data["encoder_weights"],
                   data["encoder_bias"], data["decoder_bias"],
                   data["decoder_weights"])


def encode_features(dictionary: FeatureDictionary,
                    layer_output: np.ndarray) -> np.ndarray:
    """
    >>> d = FeatureDictionary.identity(1, 2)
    >>> encode_features(d, np.array([0.5, 2.0])).tolist()
    [0.5, 2.0]
    """
    layer_output = np.asarray(layer_output, dtype=np.float64)
    if layer_output.shape != (dictionary.width,):
        raise ShapeMismatchError("dictionary reads width %d, got shape %s"
                                 % (dictionary.width, layer_output.shape))
    return activations.relu(_affine(dictionary.encoder_weights,
                                    dictionary.encoder_bias,
                                    layer_output - dictionary.decoder_bias))


def decode_features(dictionary: FeatureDictionary,
                    features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (dictionary.n_features,):
        raise ShapeMismatchError("dictionary has %d features, got shape %s"
                                 % (dictionary.n_features, features.shape))
    return _affine(dictionary.decoder_weights, dictionary.decoder_bias,
                   features)


@dataclass(frozen=True)
class Stage:
    """
    kind is 'input', 'layer' or 'features'; layer is the 1-based layer
    index of a 'layer' stage (0 otherwise).
    """
    kind: str
    layer: int
    names: Tuple[str, ...]


class NeuralNetwork:
    """
    A layered dense network with named nodes.

    Attributes:
    layers [Tuple[Layer, ...]]: the dense layers, input to output.
    names [Tuple[Tuple[str, ...], ...]]: node names of the input and of
                                         every layer.
    dictionary [Optional[FeatureDictionary]]: an attached dictionary.
    stages [Tuple[Stage, ...]]: input, layers and the feature stage in
                                evaluation order.
    """

    def __init__(self, layers: Sequence[Layer],
                 names: Optional[Sequence[Sequence[str]]] = None,
                 dictionary: Optional[FeatureDictionary] = None,
                 feature_names: Optional[Sequence[str]] = None) -> None:
        self.layers = tuple(layers)
        if not self.layers:
            raise ValidationError("a network needs at least one layer")
        for i in range(1, len(self.layers)):
            if self.layers[i].in_width != self.layers[i - 1].out_width:
                raise ShapeMismatchError(
                    "layer %d expects width %d, layer %d gives %d" % (
                        i + 1, self.layers[i].in_width, i,
                        self.layers[i - 1].out_width))
        widths = self.widths
        if names is None:
            names = default_names(widths)
        self.names = tuple(tuple(str(n) for n in layer) for layer in names)
        if [len(n) for n in self.names] != widths:
            raise ShapeMismatchError("node names %s do not fit widths %s" % (
                [len(n) for n in self.names], widths))
        self.dictionary = dictionary
        stages = [Stage("input", 0, self.names[0])]
        if dictionary is not None:
            if not 0 <= dictionary.attach_point < len(self.layers):
                raise ValidationError("dictionary attach point %d must be "
                                      "below the output layer"
                                      % dictionary.attach_point)
            if dictionary.width != widths[dictionary.attach_point]:
                raise ShapeMismatchError(
                    "dictionary reads width %d, stage %d has width %d" % (
                        dictionary.width, dictionary.attach_point,
                        widths[dictionary.attach_point]))
            if feature_names is None:
                feature_names = ["f%d_%d" % (dictionary.attach_point, k)
                                 for k in range(dictionary.n_features)]
            feature_names = tuple(str(n) for n in feature_names)
            if len(feature_names) != dictionary.n_features:
                raise ShapeMismatchError("%d feature names for %d features"
                                         % (len(feature_names),
                                            dictionary.n_features))
        self.feature_names = tuple(feature_names or ())
        if dictionary is not None and dictionary.attach_point == 0:
            stages.append(Stage("features", 0, self.feature_names))
        for l in range(1, len(self.layers) + 1):
            stages.append(Stage("layer", l, self.names[l]))
            if dictionary is not None and dictionary.attach_point == l:
                stages.append(Stage("features", 0, self.feature_names))
        self.stages = tuple(stages)
        self._index: Dict[str, Tuple[int, int]] = {}
        for s, stage in enumerate(self.stages):
            for i, name in enumerate(stage.names):
                if name in self._index:
                    raise ValidationError("node name '%s' used twice" % name)
                self._index[name] = (s, i)
        self._finite = all(layer.is_finite() for layer in self.layers)

    @property
    def widths(self) -> List[int]:
        return [self.layers[0].in_width] + [l.out_width for l in self.layers]

    @property
    def input_width(self) -> int:
        return self.layers[0].in_width

    @property
    def output_width(self) -> int:
        return self.layers[-1].out_width

    @property
    def input_names(self) -> Tuple[str, ...]:
        return self.names[0]

    @property
    def output_names(self) -> Tuple[str, ...]:
        return self.names[-1]

    def is_finite(self) -> bool:
        return self._finite

    def nodes(self) -> List[str]:
        """
        Every node name, in stage order.
        """
        return [name for stage in self.stages for name in stage.names]

    def locate(self, node: NodeRef) -> Tuple[int, int]:
        """
        The (stage, index) position of a node given by name or position.
        """
        if isinstance(node, tuple):
            s, i = node
            if 0 <= s < len(self.stages) and 0 <= i < len(self.stages[s].names):
                return int(s), int(i)
            raise UnknownNodeError(str(node))
        try:
            return self._index[node]
        except KeyError:
            raise UnknownNodeError(str(node)) from None

    def node_name(self, node: NodeRef) -> str:
        s, i = self.locate(node)
        return self.stages[s].names[i]

    def upstream_of(self, node: NodeRef) -> List[str]:
        """
        Nodes in earlier stages than `node`, in stage order.
        """
        stage, _ = self.locate(node)
        return [n for s in range(stage) for n in self.stages[s].names]

    def with_dictionary(self, dictionary: Optional[FeatureDictionary],
                        feature_names: Optional[Sequence[str]] = None
                        ) -> "NeuralNetwork":
        return NeuralNetwork(self.layers, self.names, dictionary,
                             feature_names)

    def with_layers(self, layers: Sequence[Layer]) -> "NeuralNetwork":
        return NeuralNetwork(layers, self.names, self.dictionary,
                             self.feature_names or None)

    def same_parameters(self, other: "NeuralNetwork") -> bool:
        """
        True when every weight and bias is bit-identical.
        """
        return len(self.layers) == len(other.layers) and all(
            np.array_equal(a.weights, b.weights)
            and np.array_equal(a.bias, b.bias)
            and a.activation == b.activation
            for a, b in zip(self.layers, other.layers))

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "names": [list(n) for n in self.names],
            "layers": [{"weights": l.weights.tolist(),
                        "bias": l.bias.tolist(),
                        "activation": l.activation} for l in self.layers],
        }
        if self.dictionary is not None:
            data["dictionary"] = self.dictionary.to_dict()
            data["feature_names"] = list(self.feature_names)
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "NeuralNetwork":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise ValidationError("unsupported network format_version %r"
                                  % version)
        try:
            layers = [Layer(l["weights"], l["bias"], l["activation"])
                      for l in data["layers"]]
        except KeyError as e:
            raise ValidationError("layer is missing %s" % e) from None
        dictionary = None
        if "dictionary" in data:
            dictionary = FeatureDictionary.from_dict(data["dictionary"])
        return cls(layers, data.get("names"), dictionary,
                   data.get("feature_names"))

    def __repr__(self) -> str:
        return "NeuralNetwork(widths=%s, activations=%s%s)" % (
            self.widths, [l.activation for l in self.layers],
            ", dictionary@%d" % self.dictionary.attach_point
            if self.dictionary is not None else "")


def default_names(widths: Sequence[int]) -> List[List[str]]:
    """
    x0.. for inputs, y0.. for outputs and h<layer>_<index> in between.

    >>> default_names([2, 1, 1])
    [['x0', 'x1'], ['h1_0'], ['y0']]
    """
    names = [["x%d" % i for i in range(widths[0])]]
    for l in range(1, len(widths) - 1):
        names.append(["h%d_%d" % (l, i) for i in range(widths[l])])
    names.append(["y%d" % i for i in range(widths[-1])])
    return names


def init_network(widths: Sequence[int], activation_names: Sequence[str],
                 seed: int, names: Optional[Sequence[Sequence[str]]] = None
                 ) -> NeuralNetwork:
    """
    Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
    """
    if len(activation_names) != len(widths) - 1:
        raise ValidationError("%d activations for %d layers" % (
            len(activation_names), len(widths) - 1))
    rng = named_generator(seed, "init")
    layers = []
    for fan_in, fan_out, activation in zip(widths[:-1], widths[1:],
                                           activation_names):
        bound = 1.0/np.sqrt(fan_in)
        layers.append(Layer(rng.uniform(-bound, bound, (fan_out, fan_in)),
                            np.zeros(fan_out), activation))
    return NeuralNetwork(layers, names)


class ActivationTrace:
    """
    Pre- and post-activation vectors of every stage for one input.
    Input stages have pre equal to post.
    """

    def __init__(self, network: NeuralNetwork, pre: Sequence[np.ndarray],
                 post: Sequence[np.ndarray]) -> None:
        self.network = network
        self.pre = tuple(pre)
        self.post = tuple(post)

    @property
    def input(self) -> np.ndarray:
        return self.post[0]

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]

    def __getitem__(self, node: NodeRef) -> float:
        s, i = self.network.locate(node)
        return float(self.post[s][i])

    def as_dict(self) -> Dict[str, float]:
        return {name: float(self.post[s][i])
                for s, stage in enumerate(self.network.stages)
                for i, name in enumerate(stage.names)}

    def flat(self) -> np.ndarray:
        """
        All post-activations in node order.
        """
        return np.concatenate(self.post)

    def equals(self, other: "ActivationTrace") -> bool:
        return (len(self.post) == len(other.post)
                and all(np.array_equal(a, b)
                        for a, b in zip(self.post, other.post))
                and all(np.array_equal(a, b)
                        for a, b in zip(self.pre, other.pre)))


class GradientMap:
    """
    Partial derivatives of a scalar metric with respect to the
    post-activation of every node, shaped like the trace.
    """

    def __init__(self, network: NeuralNetwork,
                 grads: Sequence[np.ndarray]) -> None:
        self.network = network
        self.grads = tuple(grads)

    def __getitem__(self, node: NodeRef) -> float:
        s, i = self.network.locate(node)
        return float(self.grads[s][i])

    def as_dict(self) -> Dict[str, float]:
        return {name: float(self.grads[s][i])
                for s, stage in enumerate(self.network.stages)
                for i, name in enumerate(stage.names)}

    def flat(self) -> np.ndarray:
        return np.concatenate(self.grads)


Overrides = Mapping[NodeRef, float]


def _resolve_overrides(network: NeuralNetwork, overrides: Optional[Overrides]
                       ) -> Dict[int, Dict[int, float]]:
    by_stage: Dict[int, Dict[int, float]] = {}
    for node, value in (overrides or {}).items():
        s, i = network.locate(node)
        value = float(value)
        if not np.isfinite(value):
            raise NumericError("non-finite replacement %r for node '%s'"
                               % (value, network.node_name((s, i))))
        by_stage.setdefault(s, {})[i] = value
    return by_stage


def _check_input(network: NeuralNetwork, x: Any) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    if x.shape != (network.input_width,):
        raise ShapeMismatchError("network expects input width %d, got "
                                 "shape %s" % (network.input_width, x.shape))
    return x


def forward(network: NeuralNetwork, x: Any,
            overrides: Optional[Overrides] = None) -> ActivationTrace:
    """
    Run the network on one input.

    Parameters:
    network: the network.
    x: input vector of the network's input width.
    overrides: node -> value; the node's post-activation is replaced
               before anything downstream reads it.

    Returns:
    The activation trace. The output is trace.output.

    >>> net = NeuralNetwork([Layer([[6.0, 6.0]], [-3.0], "logistic")])
    >>> float(forward(net, [1.0, 1.0]).output[0]) == float(
    ...     activations.logistic(9.0))
    True
    """
    if not network.is_finite():
        raise NumericError("network has a non-finite parameter")
    x = _check_input(network, x)
    replace = _resolve_overrides(network, overrides)
    dictionary = network.dictionary
    pre: List[np.ndarray] = []
    post: List[np.ndarray] = []
    for s, stage in enumerate(network.stages):
        if stage.kind == "input":
            a = x.copy()
            z = x.copy()
        elif stage.kind == "features":
            z = _affine(dictionary.encoder_weights, dictionary.encoder_bias,
                        post[-1] - dictionary.decoder_bias)
            a = activations.relu(z)
        else:
            layer = network.layers[stage.layer - 1]
            source = post[-1]
            if network.stages[s - 1].kind == "features":
                source = _affine(dictionary.decoder_weights,
                                 dictionary.decoder_bias, source)
            z = _affine(layer.weights, layer.bias, source)
            a = np.asarray(activations.ACTIVATIONS[layer.activation](z),
                           dtype=np.float64)
        if s in replace:
            a = a.copy()
            for i, value in replace[s].items():
                a[i] = value
        pre.append(z)
        post.append(a)
    return ActivationTrace(network, pre, post)


def backward(network: NeuralNetwork, x: Any, metric: "TargetMetric",
             overrides: Optional[Overrides] = None,
             trace: Optional[ActivationTrace] = None) -> GradientMap:
    """
    Reverse-mode derivatives of a scalar metric with respect to every
    node's post-activation. An overridden node is a constant to the
    nodes upstream of it; the relu derivative at 0 is 0.

    Parameters:
    metric: a TargetMetric (see causal_probe.interventions).
    trace: the forward trace for (x, overrides) when already computed.
    """
    if trace is None:
        trace = forward(network, x, overrides)
    replace = _resolve_overrides(network, overrides)
    grads = [np.zeros_like(a) for a in trace.post]
    for s, seed in metric.gradient(trace).items():
        grads[s] = grads[s] + seed
    dictionary = network.dictionary
    for s in range(len(network.stages) - 1, 0, -1):
        stage = network.stages[s]
        if stage.kind == "features":
            delta = grads[s]*activations.d_relu(trace.pre[s], trace.post[s])
            weights = dictionary.encoder_weights
        else:
            layer = network.layers[stage.layer - 1]
            derivative = activations.DERIVATIVES[layer.activation]
            delta = grads[s]*derivative(trace.pre[s], trace.post[s])
            weights = layer.weights
        for i in replace.get(s, {}):
            delta[i] = 0.0
        upstream = weights.T @ delta
        if stage.kind == "layer" and network.stages[s - 1].kind == "features":
            upstream = dictionary.decoder_weights.T @ upstream
        grads[s - 1] = grads[s - 1] + upstream
    return GradientMap(network, grads)


def compile_to_graph(network: NeuralNetwork,
                     dictionary: Optional[FeatureDictionary] = None
                     ) -> CausalGraph:
    """
    A causal graph with one real variable per node. Inputs are exogenous;
    every other node gets the equation its forward pass computes, built
    from the same operations in the same order, so evaluating the graph
    reproduces forward exactly.
    """
    if dictionary is not None:
        network = network.with_dictionary(dictionary)
    real = Domain.interval()
    variables = [Variable(name, real) for name in network.nodes()]
    equations = []
    d = network.dictionary
    previous: List[Expr] = []
    for s, stage in enumerate(network.stages):
        if stage.kind == "input":
            previous = [Var(n) for n in stage.names]
            continue
        if stage.kind == "features":
            centered = [Binary("-", v, Const(float(b)))
                        for v, b in zip(previous, d.decoder_bias)]
            bodies = [Call("relu", (_affine_expression(
                d.encoder_weights[k], d.encoder_bias[k], centered),))
                      for k in range(d.n_features)]
        else:
            layer = network.layers[stage.layer - 1]
            source = previous
            if network.stages[s - 1].kind == "features":
                source = [_affine_expression(d.decoder_weights[i],
                                             d.decoder_bias[i], previous)
                          for i in range(d.width)]
            bodies = []
            for i in range(layer.out_width):
                body = _affine_expression(layer.weights[i], layer.bias[i],
                                          source)
                if layer.activation != "identity":
                    body = Call(layer.activation, (body,))
                bodies.append(body)
        for name, body in zip(stage.names, bodies):
            equations.append(StructuralEquation(body, name))
        previous = [Var(n) for n in stage.names]
    graph = build_graph(variables, equations)
    logger.debug("compiled %r into %d variables", network, len(graph))
    return graph


@dataclass(frozen=True)
class Dataset:
    """
    Inputs (n x width) with optional integer labels.
    """
    inputs: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        inputs = np.array(self.inputs, dtype=np.float64)
        if inputs.ndim == 1:
            inputs = inputs.reshape(1, -1)
        if inputs.ndim != 2:
            raise ShapeMismatchError("dataset inputs must be a matrix")
        inputs.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64)
            if labels.shape != (inputs.shape[0],):
                raise ShapeMismatchError("%d labels for %d inputs" % (
                    labels.size, inputs.shape[0]))
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.inputs)

    @property
    def width(self) -> int:
        return self.inputs.shape[1]

    def subset(self, mask: Any) -> "Dataset":
        labels = None if self.labels is None else self.labels[mask]
        return Dataset(self.inputs[mask], labels)

    def to_list(self) -> List[Dict[str, Any]]:
        rows = []
        for i, x in enumerate(self.inputs):
            row: Dict[str, Any] = {"input": x.tolist()}
            if self.labels is not None:
                row["label"] = int(self.labels[i])
            rows.append(row)
        return rows

    @classmethod
    def from_list(cls, rows: Sequence[Mapping]) -> "Dataset":
        if len(rows) == 0:
            raise ValidationError("dataset is empty")
        try:
            inputs = [row["input"] for row in rows]
        except (KeyError, TypeError):
            raise ValidationError("every dataset row needs an 'input'"
                                  ) from None
        if len({len(x) for x in inputs}) != 1:
            raise ShapeMismatchError("dataset rows have different widths")
        has_label = ["label" in row for row in rows]
        if any(has_label) and not all(has_label):
            raise ValidationError("either every row has a label or none")
        labels = [row["label"] for row in rows] if all(has_label) else None
        return cls(np.array(inputs, dtype=np.float64), labels)


def accuracy(network: NeuralNetwork, dataset: Dataset) -> float:
    """
    Fraction of examples whose largest output is the label.
    """
    if dataset.labels is None:
        raise ValidationError("accuracy needs a labelled dataset")
    hits = sum(int(np.argmax(forward(network, x).output)) == int(label)
               for x, label in zip(dataset.inputs, dataset.labels))
    return hits/len(dataset)


def save_network(network: NeuralNetwork, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(network.to_dict(), indent=1) + "\n",
                          encoding="utf-8")


def load_network(path: Union[str, Path]) -> NeuralNetwork:
    return NeuralNetwork.from_dict(read_json(path))


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(dataset.to_list()) + "\n",
                          encoding="utf-8")


def load_dataset(path: Union[str, Path]) -> Dataset:
    return Dataset.from_list(read_json(path))


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError("%s:%d:%d: %s" % (path, e.lineno, e.colno,
                                                e.msg)) from None
    except UnicodeDecodeError as e:
        raise ValidationError("%s: not UTF-8 (byte %d)" % (path, e.start)
                              ) from None
    except OSError as e:
        raise ValidationError("%s: %s" % (path, e.strerror)) from None
