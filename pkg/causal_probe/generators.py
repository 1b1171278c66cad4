"""
generators.py

Toy models with the pathologies of counterfactual discovery planted by
construction: overdetermination through a saturating unit, preemption
through a backup path, and non-transitivity through a bypass. Also the
small logical scenarios (hiker, rocks, billiards, Suzy-first, diamond)
and the succession task.
"""
import itertools
import logging
import numpy as np
from typing import Callable, Dict, List, Tuple
from .errors import UnknownGeneratorError
from .expressions import parse_equation
from .networks import Dataset, Layer, NeuralNetwork
from .scm import CausalGraph, Domain, Variable, build_graph
from .seeds import named_generator

logger = logging.getLogger(__name__)

ToyModel = Tuple[NeuralNetwork, Dataset]

SUCCESSION_DIGITS = 10
SUCCESSION_LENGTH = 3


def make_overdetermined_net() -> ToyModel:
    """
    Two inputs, each sufficient on its own, feeding a saturating unit:

        B = logistic(6*A1 + 6*A2 - 3),   y = B

    With A1 = A2 = 1 the unit sits at logistic(9). Removing one input moves
    it to logistic(3), removing both to logistic(-3).
    """
    network = NeuralNetwork(
        [Layer([[6.0, 6.0]], [-3.0], "logistic"),
         Layer([[1.0]], [0.0], "identity")],
        [["A1", "A2"], ["B"], ["y"]])
    return network, Dataset(np.array([[1.0, 1.0]]))


def make_preemption_net(backup_strength: float = 0.5) -> ToyModel:
    """
    A primary cause that silences a backup cause:

        SH = relu(A1)            BT = relu(A2)
        S  = relu(SH)            BH = relu(BT - SH)
        y  = S + backup_strength*BH

    BH is the product-free form of "A2 and not SH" on {0, 1} inputs.
    With A1 = A2 = 1 the backup is silent (BH = 0). Ablating A1 lets the
    backup fire: with backup_strength 1 the output is fully restored, so
    ablating A1 alone leaves y unchanged. With the default 0.5 ablating A1
    moves y by 0.5, so A1 is found first and A2 only once A1 is removed.
    """
    network = NeuralNetwork(
        [Layer([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], "relu"),
         Layer([[1.0, 0.0], [-1.0, 1.0]], [0.0, 0.0], "relu"),
         Layer([[1.0, float(backup_strength)]], [0.0], "identity")],
        [["A1", "A2"], ["SH", "BT"], ["S", "BH"], ["y"]])
    return network, Dataset(np.array([[1.0, 1.0]]))


def make_rocks_net() -> ToyModel:
    """
    The two-rock bottle as a network: B = 1 - relu(1 - A1 - A2), which is
    A1 or A2 on {0, 1} inputs.
    """
    network = NeuralNetwork(
        [Layer([[-1.0, -1.0]], [1.0], "relu"),
         Layer([[-1.0]], [1.0], "identity")],
        [["A1", "A2"], ["R"], ["B"]])
    return network, Dataset(np.array([[1.0, 1.0]]))


def make_nontransitive_net() -> ToyModel:
    """
    A differentiable hiker: B copies A and y computes (not A) or B.

        B = A            NA = 1 - A
        Z = relu(0.5 - B - NA)
        y = 1 - 2*Z

    y depends on B and B depends on A, but y does not depend on A.
    """
    network = NeuralNetwork(
        [Layer([[1.0], [-1.0]], [0.0, 1.0], "identity"),
         Layer([[-1.0, -1.0]], [0.5], "relu"),
         Layer([[-2.0]], [1.0], "identity")],
        [["A"], ["B", "NA"], ["Z"], ["y"]])
    return network, Dataset(np.array([[1.0]]))


def succession_sequences() -> List[Tuple[int, ...]]:
    """
    Strictly increasing digit triples whose last digit has a successor.
    """
    return [seq for seq in itertools.combinations(range(SUCCESSION_DIGITS),
                                                  SUCCESSION_LENGTH)
            if seq[-1] < SUCCESSION_DIGITS - 1]


def encode_sequence(sequence: Tuple[int, ...]) -> np.ndarray:
    """
    >>> encode_sequence((1, 2, 3)).nonzero()[0].tolist()
    [1, 12, 23]
    """
    x = np.zeros(SUCCESSION_DIGITS*len(sequence))
    for position, digit in enumerate(sequence):
        x[position*SUCCESSION_DIGITS + digit] = 1.0
    return x


def make_succession_task(seed: int) -> Dataset:
    """
    Every increasing digit triple, one-hot encoded position by position,
    labelled with the successor of its last digit; example order is a
    permutation drawn from `seed`.
    """
    sequences = succession_sequences()
    order = named_generator(seed, "succession").permutation(len(sequences))
    inputs = np.array([encode_sequence(sequences[i]) for i in order])
    labels = np.array([sequences[i][-1] + 1 for i in order])
    logger.debug("succession task: %d examples (seed %d)", len(order), seed)
    return Dataset(inputs, labels)


def succession_names(hidden_width: int) -> List[List[str]]:
    inputs = ["p%d_d%d" % (p, d) for p in range(SUCCESSION_LENGTH)
              for d in range(SUCCESSION_DIGITS)]
    hidden = ["h%d" % i for i in range(hidden_width)]
    outputs = ["next%d" % d for d in range(SUCCESSION_DIGITS)]
    return [inputs, hidden, outputs]


def _boolean_graph(names: List[str], equations: Dict[str, str]
                   ) -> CausalGraph:
    variables = [Variable(n, Domain.boolean()) for n in names]
    return build_graph(variables, [parse_equation(text, target)
                                   for target, text in equations.items()])


def hiker_graph() -> CausalGraph:
    """
    A boulder falls (A), the hiker ducks (B := A), the hiker lives
    (C := not A or B).
    """
    return _boolean_graph(["A", "B", "C"],
                          {"B": "A", "C": "or(not(A), B)"})


def rocks_graph() -> CausalGraph:
    """
    Two throws (A1, A2), either of which breaks the bottle (B).
    """
    return _boolean_graph(["A1", "A2", "B"], {"B": "or(A1, A2)"})


def billiards_graph() -> CausalGraph:
    return _boolean_graph(["A", "B", "C"], {"B": "A", "C": "B"})


def suzy_graph() -> CausalGraph:
    """
    Suzy's rock hits first (SH := A1); Billy's hits only if Suzy's did not
    (BH := A2 and not SH); the bottle breaks if either hits.
    """
    return _boolean_graph(["A1", "A2", "SH", "BH", "B"],
                          {"SH": "A1", "BH": "and(A2, not(SH))",
                           "B": "or(SH, BH)"})


def diamond_graph() -> CausalGraph:
    return _boolean_graph(["A", "B1", "B2", "C"],
                          {"B1": "A", "B2": "A", "C": "or(B1, B2)"})


SCENARIOS: Dict[str, Tuple[Callable[[], CausalGraph], Dict[str, bool]]] = {
    "hiker": (hiker_graph, {"A": True}),
    "rocks": (rocks_graph, {"A1": True, "A2": True}),
    "billiards": (billiards_graph, {"A": True}),
    "suzy": (suzy_graph, {"A1": True, "A2": True}),
    "diamond": (diamond_graph, {"A": True}),
}

NETWORKS: Dict[str, Callable[[], ToyModel]] = {
    "overdetermined": make_overdetermined_net,
    "preemption": make_preemption_net,
    "nontransitive": make_nontransitive_net,
    "rocks-net": make_rocks_net,
}

GENERATORS = tuple(NETWORKS) + ("succession",) + tuple(SCENARIOS)


def scenario(name: str) -> Tuple[CausalGraph, Dict[str, bool]]:
    """
    A named logical scenario and its canonical context.
    """
    try:
        builder, context = SCENARIOS[name]
    except KeyError:
        raise UnknownGeneratorError(name, sorted(SCENARIOS)) from None
    return builder(), dict(context)


def toy_network(name: str) -> ToyModel:
    try:
        return NETWORKS[name]()
    except KeyError:
        raise UnknownGeneratorError(name, sorted(NETWORKS)) from None
