"""
interventions.py

Ablation kinds, target metrics and the indirect-effect estimators:
exact re-evaluation, the first-order (attribution patching) estimate and
its integrated-gradients refinement.
"""
import json
import logging
import warnings
import numpy as np
import pandas as pd
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union
from . import activations
from .errors import (CausalProbeError, RuntimeLimitError, ShapeMismatchError,
                     UndefinedMetricError, ValidationError,
                     ZeroAblationWarning)
from .networks import (ActivationTrace, Dataset, NeuralNetwork, NodeRef,
                       backward, forward)
from .seeds import named_generator

logger = logging.getLogger(__name__)

ABLATION_KINDS = ("zero", "mean", "resample", "patch", "inject")


@dataclass(frozen=True, eq=False)
class AblationKind:
    """
    How a node's activation is replaced.

    zero: 0. mean: the node's mean activation over `reference`.
    resample: the node's activation on one example drawn from `reference`
    with `seed`. patch: the node's activation on `x_patch`. inject: `value`.
    """
    kind: str
    reference: Optional[Dataset] = None
    seed: int = 0
    x_patch: Optional[np.ndarray] = None
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ABLATION_KINDS:
            raise ValidationError("unknown ablation kind '%s'" % self.kind)
        if self.kind in ("mean", "resample") and (
                self.reference is None or len(self.reference) == 0):
            raise ValidationError("%s ablation needs a non-empty reference "
                                  "dataset" % self.kind)
        if self.kind == "patch" and self.x_patch is None:
            raise ValidationError("patch ablation needs x_patch")
        if self.kind == "inject" and not np.isfinite(self.value):
            raise ValidationError("inject value must be finite")

    @classmethod
    def zero(cls) -> "AblationKind":
        return cls("zero")

    @classmethod
    def mean(cls, reference: Dataset) -> "AblationKind":
        return cls("mean", reference=reference)

    @classmethod
    def resample(cls, reference: Dataset, seed: int) -> "AblationKind":
        return cls("resample", reference=reference, seed=seed)

    @classmethod
    def patch(cls, x_patch: Any) -> "AblationKind":
        return cls("patch", x_patch=np.array(x_patch, dtype=np.float64))

    @classmethod
    def inject(cls, value: float) -> "AblationKind":
        return cls("inject", value=float(value))

    def describe(self) -> str:
        if self.kind == "resample":
            return "resample(seed=%d)" % self.seed
        if self.kind == "inject":
            return "inject(%r)" % self.value
        return self.kind


@dataclass(frozen=True)
class TargetMetric:
    """
    The scalar y whose change measures an effect.

    logit_difference: output[correct] - output[incorrect].
    negative_log_probability: -log softmax(output)[target].
    node_activation: sign * activation of `node`; the default sign -1
    makes causes that raise the node carry positive effects.
    """
    kind: str
    correct: int = 0
    incorrect: int = 1
    target: int = 0
    node: Optional[NodeRef] = None
    sign: float = -1.0

    @classmethod
    def logit_difference(cls, correct: int, incorrect: int) -> "TargetMetric":
        return cls("logit_difference", correct=correct, incorrect=incorrect)

    @classmethod
    def negative_log_probability(cls, target: int) -> "TargetMetric":
        return cls("negative_log_probability", target=target)

    @classmethod
    def node_activation(cls, node: NodeRef,
                        sign: float = -1.0) -> "TargetMetric":
        return cls("node_activation", node=node, sign=float(sign))

    def validate(self, network: NeuralNetwork) -> None:
        width = network.output_width
        if self.kind == "logit_difference":
            for index in (self.correct, self.incorrect):
                if not 0 <= index < width:
                    raise ValidationError("logit index %d outside output "
                                          "width %d" % (index, width))
        elif self.kind == "negative_log_probability":
            if not 0 <= self.target < width:
                raise ValidationError("target index %d outside output "
                                      "width %d" % (self.target, width))
        elif self.kind == "node_activation":
            network.locate(self.node)
        else:
            raise ValidationError("unknown metric '%s'" % self.kind)

    def value(self, trace: ActivationTrace) -> float:
        out = trace.output
        if self.kind == "logit_difference":
            return float(out[self.correct] - out[self.incorrect])
        if self.kind == "negative_log_probability":
            result = float(-activations.log_softmax(out)[self.target])
            if not np.isfinite(result):
                raise UndefinedMetricError("log-probability of output %d is "
                                           "not finite" % self.target)
            return result
        return self.sign*trace[self.node]

    def gradient(self, trace: ActivationTrace) -> Dict[int, np.ndarray]:
        """
        d(metric)/d(post-activation), keyed by stage.
        """
        last = len(trace.post) - 1
        seed = np.zeros_like(trace.output)
        if self.kind == "logit_difference":
            seed[self.correct] += 1.0
            seed[self.incorrect] -= 1.0
            return {last: seed}
        if self.kind == "negative_log_probability":
            seed = activations.softmax(trace.output)
            if not np.all(np.isfinite(seed)):
                raise UndefinedMetricError("softmax of the output is not "
                                           "finite")
            seed[self.target] -= 1.0
            return {last: seed}
        s, i = trace.network.locate(self.node)
        seed = np.zeros_like(trace.post[s])
        seed[i] = self.sign
        return {s: seed}

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "logit_difference":
            return {"kind": self.kind, "correct": self.correct,
                    "incorrect": self.incorrect}
        if self.kind == "negative_log_probability":
            return {"kind": self.kind, "target": self.target}
        node = list(self.node) if isinstance(self.node, tuple) else self.node
        return {"kind": self.kind, "node": node, "sign": self.sign}

    @classmethod
    def from_dict(cls, data: Mapping) -> "TargetMetric":
        try:
            kind = data["kind"]
            if kind == "logit_difference":
                return cls.logit_difference(int(data["correct"]),
                                            int(data["incorrect"]))
            if kind == "negative_log_probability":
                return cls.negative_log_probability(int(data["target"]))
            if kind == "node_activation":
                node = data["node"]
                return cls.node_activation(
                    tuple(node) if isinstance(node, list) else node,
                    float(data.get("sign", -1.0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError("bad metric description: %s" % e) from None
        raise ValidationError("unknown metric '%s'" % kind)

    def describe(self) -> str:
        if self.kind == "logit_difference":
            return "logit_difference(%d, %d)" % (self.correct, self.incorrect)
        if self.kind == "negative_log_probability":
            return "negative_log_probability(%d)" % self.target
        return "node_activation(%s, sign=%+g)" % (self.node, self.sign)


@dataclass(frozen=True)
class Estimator:
    """
    method is 'exact', 'linear' or 'ig'; steps applies to 'ig'.

    >>> Estimator.parse("ig:16").tag
    'integrated-gradients(16)'
    """
    method: str = "exact"
    steps: int = 64

    def __post_init__(self) -> None:
        if self.method not in ("exact", "linear", "ig"):
            raise ValidationError("unknown estimator '%s'" % self.method)
        if self.method == "ig" and self.steps < 1:
            raise ValidationError("integrated gradients needs steps >= 1")

    @classmethod
    def parse(cls, text: str) -> "Estimator":
        """
        'exact', 'linear', 'ig' or 'ig:<steps>'.
        """
        method, _, steps = text.partition(":")
        if method == "ig" and steps:
            try:
                return cls("ig", int(steps))
            except ValueError:
                raise ValidationError("bad step count in '%s'" % text
                                      ) from None
        if steps:
            raise ValidationError("unknown estimator '%s'" % text)
        return cls(method)

    @property
    def tag(self) -> str:
        if self.method == "ig":
            return "integrated-gradients(%d)" % self.steps
        return self.method

    @property
    def spec(self) -> str:
        """
        The parse() form of this estimator.
        """
        if self.method == "ig":
            return "ig:%d" % self.steps
        return self.method


@dataclass
class EffectTable:
    """
    Per-node indirect-effect estimates.

    Attributes:
    nodes [List[str]]: node names, in network order.
    estimates [np.ndarray]: one estimate per node.
    method [str]: exact, linear or integrated-gradients(steps).
    context [str]: what the estimates were computed on.
    variances [Optional[np.ndarray]]: per-node variance over a dataset.
    """
    nodes: List[str]
    estimates: np.ndarray
    method: str
    context: str = ""
    variances: Optional[np.ndarray] = None
    notes: Dict[str, str] = field(default_factory=dict)

    def __getitem__(self, node: str) -> float:
        try:
            return float(self.estimates[self.nodes.index(node)])
        except ValueError:
            raise ValidationError("node '%s' is not in the table" % node
                                  ) from None

    def __len__(self) -> int:
        return len(self.nodes)

    def as_dict(self) -> Dict[str, float]:
        return {n: float(e) for n, e in zip(self.nodes, self.estimates)}

    def largest(self, k: int) -> List[str]:
        """
        The k nodes of largest |estimate|; ties keep network order.
        """
        order = np.argsort(-np.abs(self.estimates), kind="stable")
        return [self.nodes[i] for i in order[:k]]

    def to_frame(self) -> pd.DataFrame:
        variances = (self.variances if self.variances is not None
                     else np.full(len(self.nodes), np.nan))
        return pd.DataFrame({"node": self.nodes,
                             "estimate": self.estimates,
                             "variance": variances,
                             "method": self.method})

    def to_csv(self, path: Optional[str] = None) -> Optional[str]:
        return self.to_frame().to_csv(path, index=False,
                                      float_format="%.17g")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "method": self.method,
            "context": self.context,
            "nodes": list(self.nodes),
            "estimates": [float(e) for e in self.estimates],
        }
        if self.variances is not None:
            data["variances"] = [float(v) for v in self.variances]
        if self.notes:
            data["notes"] = dict(self.notes)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def mediators(network: NeuralNetwork, granularity: str = "all") -> List[str]:
    """
    Node names considered as mediators: 'all', 'neurons' or 'features'.
    """
    if granularity == "all":
        return network.nodes()
    if granularity not in ("neurons", "features"):
        raise ValidationError("unknown granularity '%s'" % granularity)
    wanted = (lambda kind: kind == "features") if granularity == "features" \
        else (lambda kind: kind != "features")
    return [n for stage in network.stages if wanted(stage.kind)
            for n in stage.names]


def _is_feature(network: NeuralNetwork, node: NodeRef) -> bool:
    s, _ = network.locate(node)
    return network.stages[s].kind == "features"


def warn_zero_ablation(network: NeuralNetwork, kind: AblationKind,
                       nodes: Sequence[NodeRef]) -> None:
    if kind.kind == "zero" and any(not _is_feature(network, n)
                                   for n in nodes):
        warnings.warn("zero ablation of raw neurons", ZeroAblationWarning,
                      stacklevel=3)


def replacement_values(network: NeuralNetwork, x: Any,
                       kind: AblationKind) -> List[np.ndarray]:
    """
    The replacement activation of every node under `kind`, shaped like
    trace.post.
    """
    if kind.kind == "zero":
        return [np.zeros(len(stage.names)) for stage in network.stages]
    if kind.kind == "inject":
        return [np.full(len(stage.names), kind.value)
                for stage in network.stages]
    if kind.kind == "patch":
        x_patch = np.asarray(kind.x_patch, dtype=np.float64)
        if x_patch.shape != np.shape(x):
            raise ShapeMismatchError("patch input has shape %s, original %s"
                                     % (x_patch.shape, np.shape(x)))
        return list(forward(network, x_patch).post)
    if kind.reference.width != network.input_width:
        raise ShapeMismatchError("reference dataset width %d, network input "
                                 "width %d" % (kind.reference.width,
                                               network.input_width))
    if kind.kind == "resample":
        index = int(named_generator(kind.seed, "resample").integers(
            len(kind.reference)))
        return list(forward(network, kind.reference.inputs[index]).post)
    traces = [forward(network, r).post for r in kind.reference.inputs]
    return [np.mean([t[s] for t in traces], axis=0)
            for s in range(len(network.stages))]


def apply_ablation(network: NeuralNetwork, x: Any, node: NodeRef,
                   kind: AblationKind) -> ActivationTrace:
    """
    Forward pass with the node's post-activation replaced under `kind`.
    Nodes upstream of and parallel to `node` are untouched.
    """
    warn_zero_ablation(network, kind, [node])
    s, i = network.locate(node)
    replacement = replacement_values(network, x, kind)
    return forward(network, x, {(s, i): replacement[s][i]})


def indirect_effect_exact(network: NeuralNetwork, x: Any, node: NodeRef,
                          kind: AblationKind, metric: TargetMetric) -> float:
    """
    metric(ablated run) - metric(original run).
    """
    metric.validate(network)
    original = metric.value(forward(network, x))
    return metric.value(apply_ablation(network, x, node, kind)) - original


def _exact_table(network: NeuralNetwork, x: Any, kind: AblationKind,
                 metric: TargetMetric, nodes: Sequence[str]) -> np.ndarray:
    base = metric.value(forward(network, x))
    replacement = replacement_values(network, x, kind)
    estimates = np.zeros(len(nodes))
    for k, node in enumerate(nodes):
        s, i = network.locate(node)
        trace = forward(network, x, {(s, i): replacement[s][i]})
        estimates[k] = metric.value(trace) - base
    return estimates


def _linear_table(network: NeuralNetwork, x: Any, kind: AblationKind,
                  metric: TargetMetric, nodes: Sequence[str]) -> np.ndarray:
    trace = forward(network, x)
    grads = backward(network, x, metric, trace=trace)
    replacement = replacement_values(network, x, kind)
    estimates = np.zeros(len(nodes))
    for k, node in enumerate(nodes):
        s, i = network.locate(node)
        estimates[k] = grads.grads[s][i]*(replacement[s][i]
                                          - trace.post[s][i])
    return estimates


def _ig_table(network: NeuralNetwork, x: Any, kind: AblationKind,
              metric: TargetMetric, nodes: Sequence[str],
              steps: int) -> np.ndarray:
    trace = forward(network, x)
    base_grads = backward(network, x, metric, trace=trace)
    replacement = replacement_values(network, x, kind)
    estimates = np.zeros(len(nodes))
    for k, node in enumerate(nodes):
        s, i = network.locate(node)
        original = trace.post[s][i]
        delta = replacement[s][i] - original
        total = base_grads.grads[s][i]
        for step in range(1, steps):
            point = original + (step/steps)*delta
            grads = backward(network, x, metric, {(s, i): point})
            total = total + grads.grads[s][i]
        estimates[k] = delta*(total/steps)
    return estimates


def _node_list(network: NeuralNetwork,
               nodes: Optional[Sequence[NodeRef]]) -> List[str]:
    if nodes is None:
        return network.nodes()
    return [network.node_name(n) for n in nodes]


def attribution_patching(network: NeuralNetwork, x: Any,
                         kind: Union[AblationKind, Any],
                         metric: TargetMetric,
                         nodes: Optional[Sequence[NodeRef]] = None
                         ) -> EffectTable:
    """
    First-order estimates for all nodes at once:
    d(metric)/d(a) at the original run, times (replacement - original).

    Parameters:
    kind: an AblationKind, or a patch input array.
    nodes: restrict the table to these nodes (default: every node).
    """
    kind = _as_kind(kind)
    metric.validate(network)
    nodes = _node_list(network, nodes)
    warn_zero_ablation(network, kind, nodes)
    return EffectTable(nodes, _linear_table(network, x, kind, metric, nodes),
                       "linear", kind.describe())


def integrated_gradients_ie(network: NeuralNetwork, x: Any,
                            kind: Union[AblationKind, Any],
                            metric: TargetMetric, steps: int = 64,
                            nodes: Optional[Sequence[NodeRef]] = None
                            ) -> EffectTable:
    """
    Per node, the mean gradient at the left endpoints of `steps` equal
    subintervals of the segment from the original to the replacement
    activation (only that node moves; downstream is recomputed), times
    the activation delta. steps=1 reproduces attribution_patching.
    """
    if steps < 1:
        raise ValidationError("integrated gradients needs steps >= 1")
    kind = _as_kind(kind)
    metric.validate(network)
    nodes = _node_list(network, nodes)
    warn_zero_ablation(network, kind, nodes)
    table = EffectTable(nodes, _ig_table(network, x, kind, metric, nodes,
                                         steps),
                        Estimator("ig", steps).tag, kind.describe())
    table.notes["discretisation"] = "left endpoints, activation space"
    return table


def effect_table(network: NeuralNetwork, x: Any, kind: AblationKind,
                 metric: TargetMetric, estimator: Estimator = Estimator(),
                 nodes: Optional[Sequence[NodeRef]] = None) -> EffectTable:
    """
    One-context table with the chosen estimator.
    """
    kind = _as_kind(kind)
    metric.validate(network)
    nodes = _node_list(network, nodes)
    warn_zero_ablation(network, kind, nodes)
    if estimator.method == "exact":
        estimates = _exact_table(network, x, kind, metric, nodes)
    elif estimator.method == "linear":
        estimates = _linear_table(network, x, kind, metric, nodes)
    else:
        estimates = _ig_table(network, x, kind, metric, nodes,
                              estimator.steps)
    return EffectTable(nodes, estimates, estimator.tag, kind.describe())


def effect_sweep(network: NeuralNetwork, dataset: Dataset,
                 kind: AblationKind, metric: TargetMetric,
                 estimator: Estimator = Estimator(),
                 nodes: Optional[Sequence[NodeRef]] = None) -> EffectTable:
    """
    Per-node mean and variance of an estimator over a dataset.
    """
    if len(dataset) == 0:
        raise ValidationError("effect sweep needs a non-empty dataset")
    kind = _as_kind(kind)
    metric.validate(network)
    nodes = _node_list(network, nodes)
    warn_zero_ablation(network, kind, nodes)
    rows = []
    for index, x in enumerate(dataset.inputs):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ZeroAblationWarning)
                rows.append(effect_table(network, x, kind, metric, estimator,
                                         nodes).estimates)
        except CausalProbeError as e:
            category = (RuntimeLimitError if isinstance(e, RuntimeLimitError)
                        else ValidationError)
            raise category("example %d: %s" % (index, e)) from e
    rows = np.array(rows)
    logger.debug("effect sweep over %d examples, %d nodes", len(rows),
                 len(nodes))
    return EffectTable(nodes, rows.mean(axis=0), estimator.tag,
                       "%s over %d examples" % (kind.describe(), len(rows)),
                       variances=rows.var(axis=0))


def compare_estimators(network: NeuralNetwork, x: Any, kind: AblationKind,
                       metric: TargetMetric, steps: int = 64
                       ) -> pd.DataFrame:
    """
    Exact, linear and integrated-gradients estimates side by side, with
    the absolute error of each approximation.
    """
    kind = _as_kind(kind)
    nodes = network.nodes()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroAblationWarning)
        exact = effect_table(network, x, kind, metric, Estimator("exact"))
        linear = attribution_patching(network, x, kind, metric)
        ig = integrated_gradients_ie(network, x, kind, metric, steps)
    warn_zero_ablation(network, kind, nodes)
    return pd.DataFrame({
        "node": nodes,
        "exact": exact.estimates,
        "linear": linear.estimates,
        ig.method: ig.estimates,
        "linear_error": np.abs(linear.estimates - exact.estimates),
        "ig_error": np.abs(ig.estimates - exact.estimates),
    })


def _as_kind(kind: Union[AblationKind, Any]) -> AblationKind:
    if isinstance(kind, AblationKind):
        return kind
    return AblationKind.patch(kind)
