"""
training.py

Plain gradient descent on softmax cross-entropy. Training runs on whole
batches with matrix products; the per-example forward pass used for
analysis is not needed here.
"""
import logging
import numpy as np
from dataclasses import dataclass
from typing import List, Optional, Tuple
from . import activations
from .errors import NumericError, ShapeMismatchError, ValidationError
from .networks import Dataset, Layer, NeuralNetwork
from .seeds import named_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingResult:
    network: NeuralNetwork
    final_loss: float
    steps: int


def _batch_forward(layers: List[Tuple[np.ndarray, np.ndarray, str]],
                   inputs: np.ndarray
                   ) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    pre, post = [inputs], [inputs]
    for weights, bias, name in layers:
        z = post[-1] @ weights.T + bias
        pre.append(z)
        post.append(np.asarray(activations.ACTIVATIONS[name](z)))
    return pre, post


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """
    Mean negative log-probability of the labels.
    """
    log_p = activations.log_softmax(logits)
    return float(-np.mean(log_p[np.arange(len(labels)), labels]))


def train(network: NeuralNetwork, dataset: Dataset, steps: int,
          learning_rate: float, seed: int,
          batch_size: Optional[int] = None) -> TrainingResult:
    """
    Minimise cross-entropy of the network outputs (read as logits).

    Parameters:
    network: the starting network; it is not modified.
    dataset: labelled examples.
    steps: number of updates; 0 returns the network unchanged.
    learning_rate: gradient step size.
    seed: seeds the minibatch order when batch_size is given.
    batch_size: examples per update; None uses the whole dataset.

    Returns:
    The trained network and the loss on the full dataset after the last
    step.
    """
    if len(dataset) == 0 or dataset.labels is None:
        raise ValidationError("training needs a non-empty labelled dataset")
    if steps < 0:
        raise ValidationError("steps must be >= 0")
    if dataset.width != network.input_width:
        raise ShapeMismatchError("dataset width %d, network input width %d"
                                 % (dataset.width, network.input_width))
    if network.dictionary is not None:
        raise ValidationError("networks with an attached dictionary are "
                              "not trained")
    if int(np.max(dataset.labels)) >= network.output_width:
        raise ShapeMismatchError("label %d outside output width %d" % (
            int(np.max(dataset.labels)), network.output_width))
    if steps == 0:
        return TrainingResult(network, _loss(network, dataset), 0)

    params = [(l.weights.copy(), l.bias.copy(), l.activation)
              for l in network.layers]
    rng = named_generator(seed, "train")
    n = len(dataset)
    order = np.arange(n)
    cursor = n
    for step in range(steps):
        if batch_size is None or batch_size >= n:
            batch = order
        else:
            if cursor + batch_size > n:
                order = rng.permutation(n)
                cursor = 0
            batch = order[cursor:cursor + batch_size]
            cursor += batch_size
        inputs, labels = dataset.inputs[batch], dataset.labels[batch]
        pre, post = _batch_forward(params, inputs)
        loss = cross_entropy(post[-1], labels)
        if not np.isfinite(loss):
            raise NumericError("training loss is not finite", step)
        delta_post = activations.softmax(post[-1])
        delta_post[np.arange(len(labels)), labels] -= 1.0
        delta_post /= len(labels)
        updated = []
        for l in range(len(params) - 1, -1, -1):
            weights, bias, name = params[l]
            delta = delta_post*activations.DERIVATIVES[name](pre[l + 1],
                                                            post[l + 1])
            delta_post = delta @ weights
            updated.append((weights - learning_rate*(delta.T @ post[l]),
                            bias - learning_rate*delta.sum(axis=0), name))
        params = updated[::-1]
        if step % 1000 == 0:
            logger.debug("step %d: loss %.6f", step, loss)

    trained = network.with_layers([Layer(w, b, a) for w, b, a in params])
    if not trained.is_finite():
        raise NumericError("training produced a non-finite parameter", steps)
    final_loss = _loss(trained, dataset)
    logger.info("trained %d steps, final loss %.6f", steps, final_loss)
    return TrainingResult(trained, final_loss, steps)


def _loss(network: NeuralNetwork, dataset: Dataset) -> float:
    params = [(l.weights, l.bias, l.activation) for l in network.layers]
    _, post = _batch_forward(params, dataset.inputs)
    return cross_entropy(post[-1], dataset.labels)
