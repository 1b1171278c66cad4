"""
circuits.py

Threshold-based discovery of causal subgraphs against a target metric.
Nodes are kept when their mean indirect effect clears the node threshold;
edges between kept nodes are scored by treating the downstream node's
activation as the metric. Nodes can also be admitted through ablation-set
search, preemption rounds, or one level of local expansion around an
anchor, and each admitted node records how it got in.
"""
import contextlib
import logging
import warnings
import networkx as nx
import numpy as np
import pandas as pd
from dataclasses import dataclass, field, replace
from typing import (Any, Dict, FrozenSet, Iterator, List, Mapping, Optional,
                    Sequence, Tuple)
from .counterfactuals import (AblationProblem, detect_preemption,
                              find_minimal_ablation_sets)
from .errors import (OrderingError, UndefinedMetricError, ValidationError,
                     ZeroAblationWarning)
from .interventions import (AblationKind, Estimator, TargetMetric,
                            effect_sweep, effect_table, replacement_values,
                            warn_zero_ablation)
from .networks import Dataset, NeuralNetwork, NodeRef, forward

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

NODE_THRESHOLD = 0.4
EDGE_THRESHOLD = 0.04

THRESHOLD = "threshold"
SET = "set"
EXPANSION = "expansion"
PREEMPTED = "preempted"
PROVENANCES = (THRESHOLD, SET, EXPANSION, PREEMPTED)


@dataclass(frozen=True)
class LocalExpansionMark:
    node: str
    anchor: str


@dataclass(frozen=True)
class CircuitNode:
    """
    A kept node. score is the node's effect on the circuit metric, except
    for expansion nodes (effect on the anchor's activation), set nodes
    (joint effect of the set) and preempted nodes (effect in the round
    that found them).
    """
    name: str
    score: float
    provenance: str = THRESHOLD
    ablation_set: Tuple[str, ...] = ()
    anchor: Optional[str] = None
    round: Optional[int] = None

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValidationError("unknown provenance '%s'"
                                  % self.provenance)
        if self.provenance == EXPANSION and self.anchor is None:
            raise ValidationError("expansion node '%s' has no anchor"
                                  % self.name)

    def annotation(self) -> str:
        if self.provenance == SET:
            return "set {%s}" % ", ".join(self.ablation_set)
        if self.provenance == EXPANSION:
            return "expanded from %s" % self.anchor
        if self.provenance == PREEMPTED:
            return "preempted, round %d" % self.round
        return ""

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name, "score": self.score,
                                "provenance": self.provenance}
        if self.provenance == SET:
            data["set"] = list(self.ablation_set)
        elif self.provenance == EXPANSION:
            data["anchor"] = self.anchor
        elif self.provenance == PREEMPTED:
            data["round"] = self.round
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "CircuitNode":
        return cls(str(data["name"]), float(data["score"]),
                   data.get("provenance", THRESHOLD),
                   tuple(data.get("set", ())), data.get("anchor"),
                   data.get("round"))


@dataclass(frozen=True)
class CircuitEdge:
    upstream: str
    downstream: str
    score: float

    def to_dict(self) -> Dict[str, Any]:
        return {"upstream": self.upstream, "downstream": self.downstream,
                "score": self.score}


@dataclass(frozen=True)
class Circuit:
    """
    Attributes:
    nodes [Tuple[CircuitNode, ...]]: kept nodes, in network order.
    edges [Tuple[CircuitEdge, ...]]: kept edges, ordered by upstream and
                                     then downstream position.
    metric [TargetMetric]: what node scores are effects on.
    node_threshold [float]: T_N.
    edge_threshold [float]: T_E.
    estimator [Estimator]: used for every node and edge score.
    signed [bool]: keep only effects above the threshold, not |effects|.
    ablation [str]: description of the ablation kind.
    """
    nodes: Tuple[CircuitNode, ...]
    edges: Tuple[CircuitEdge, ...]
    metric: TargetMetric
    node_threshold: float = NODE_THRESHOLD
    edge_threshold: float = EDGE_THRESHOLD
    estimator: Estimator = Estimator()
    signed: bool = False
    ablation: str = "zero"
    _index: Dict[str, CircuitNode] = field(init=False, repr=False,
                                           compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "node_threshold", float(self.node_threshold))
        object.__setattr__(self, "edge_threshold", float(self.edge_threshold))
        object.__setattr__(self, "_index", {n.name: n for n in self.nodes})
        if len(self._index) != len(self.nodes):
            raise ValidationError("circuit lists a node twice")

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def method(self) -> str:
        return self.estimator.tag

    def names(self) -> List[str]:
        return [n.name for n in self.nodes]

    def node(self, name: str) -> CircuitNode:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError("'%s' is not a circuit node" % name
                                  ) from None

    def edge_pairs(self) -> List[Tuple[str, str]]:
        return [(e.upstream, e.downstream) for e in self.edges]

    def expansion_marks(self) -> List[LocalExpansionMark]:
        return [LocalExpansionMark(n.name, n.anchor) for n in self.nodes
                if n.provenance == EXPANSION]

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for n in self.nodes:
            graph.add_node(n.name, score=n.score, provenance=n.provenance)
        for e in self.edges:
            graph.add_edge(e.upstream, e.downstream, score=e.score)
        return graph

    def validate(self) -> None:
        """
        Raise ValidationError unless the circuit is a DAG over its nodes
        whose scores clear the thresholds (expansion nodes excepted).
        """
        for n in self.nodes:
            if n.provenance != EXPANSION and \
                    not abs(n.score) > self.node_threshold:
                raise ValidationError("node '%s' scores %g, below T_N = %g"
                                      % (n.name, n.score,
                                         self.node_threshold))
            if n.provenance == EXPANSION and n.anchor not in self:
                raise ValidationError("anchor '%s' of '%s' is not a circuit "
                                      "node" % (n.anchor, n.name))
        for e in self.edges:
            for end in (e.upstream, e.downstream):
                if end not in self:
                    raise ValidationError("edge endpoint '%s' is not a "
                                          "circuit node" % end)
            if not abs(e.score) > self.edge_threshold:
                raise ValidationError("edge %s -> %s scores %g, below T_E = "
                                      "%g" % (e.upstream, e.downstream,
                                              e.score, self.edge_threshold))
        if not nx.is_directed_acyclic_graph(self.to_networkx()):
            raise ValidationError("circuit has a cycle")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "metric": self.metric.to_dict(),
            "estimator": self.estimator.spec,
            "method": self.method,
            "ablation": self.ablation,
            "signed": self.signed,
            "thresholds": {"node": self.node_threshold,
                           "edge": self.edge_threshold},
            "nodes": [n.to_dict() for n in self.nodes],
            "edges": [e.to_dict() for e in self.edges],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Circuit":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise ValidationError("unsupported circuit format_version %r"
                                  % version)
        try:
            circuit = cls(
                tuple(CircuitNode.from_dict(n) for n in data["nodes"]),
                tuple(CircuitEdge(str(e["upstream"]), str(e["downstream"]),
                                  float(e["score"])) for e in data["edges"]),
                TargetMetric.from_dict(data["metric"]),
                float(data["thresholds"]["node"]),
                float(data["thresholds"]["edge"]),
                Estimator.parse(data["estimator"]),
                bool(data.get("signed", False)),
                str(data.get("ablation", "zero")))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError("bad circuit description: %s" % e
                                  ) from None
        circuit.validate()
        return circuit


def _admits(score: float, threshold: float, signed: bool) -> bool:
    return score > threshold if signed else abs(score) > threshold


def _check_thresholds(*thresholds: float) -> None:
    for t in thresholds:
        if not t >= 0.0:
            raise ValidationError("thresholds must be >= 0, got %r" % t)


@contextlib.contextmanager
def _quiet() -> Iterator[None]:
    # callers warn once up front
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroAblationWarning)
        yield


def _network_order(network: NeuralNetwork) -> Dict[str, int]:
    return {n: k for k, n in enumerate(network.nodes())}


def _sorted_nodes(network: NeuralNetwork,
                  nodes: Sequence[CircuitNode]) -> Tuple[CircuitNode, ...]:
    order = _network_order(network)
    return tuple(sorted(nodes, key=lambda n: order[n.name]))


def _sorted_edges(network: NeuralNetwork,
                  edges: Sequence[CircuitEdge]) -> Tuple[CircuitEdge, ...]:
    order = _network_order(network)
    return tuple(sorted(edges, key=lambda e: (order[e.upstream],
                                              order[e.downstream])))


def _score_edges(network: NeuralNetwork, dataset: Dataset,
                 names: Sequence[str], kind: AblationKind,
                 estimator: Estimator, edge_threshold: float,
                 signed: bool) -> List[CircuitEdge]:
    stage = {n: network.locate(n)[0] for n in names}
    edges = []
    for down in names:
        ups = [u for u in names if stage[u] < stage[down]]
        if not ups:
            continue
        table = effect_sweep(network, dataset, kind,
                             TargetMetric.node_activation(down), estimator,
                             ups)
        for up in ups:
            if _admits(table[up], edge_threshold, signed):
                edges.append(CircuitEdge(up, down, table[up]))
    return edges


def _threshold_nodes(network: NeuralNetwork, dataset: Dataset,
                     metric: TargetMetric, node_threshold: float,
                     estimator: Estimator, kind: AblationKind, signed: bool,
                     nodes: Optional[Sequence[NodeRef]]
                     ) -> List[CircuitNode]:
    table = effect_sweep(network, dataset, kind, metric, estimator, nodes)
    return [CircuitNode(n, table[n]) for n in table.nodes
            if _admits(table[n], node_threshold, signed)]


def _prepare(network: NeuralNetwork, dataset: Dataset, metric: TargetMetric,
             kind: AblationKind, node_threshold: float,
             edge_threshold: float) -> None:
    _check_thresholds(node_threshold, edge_threshold)
    if len(dataset) == 0:
        raise ValidationError("circuit discovery needs a non-empty dataset")
    metric.validate(network)
    warn_zero_ablation(network, kind, network.nodes())


def discover_circuit(network: NeuralNetwork, dataset: Dataset,
                     metric: TargetMetric,
                     node_threshold: float = NODE_THRESHOLD,
                     edge_threshold: float = EDGE_THRESHOLD,
                     estimator: Estimator = Estimator(),
                     kind: AblationKind = AblationKind.zero(),
                     signed: bool = False,
                     nodes: Optional[Sequence[NodeRef]] = None) -> Circuit:
    """
    Keep every node whose mean effect on `metric` over the dataset clears
    node_threshold, then every edge between kept nodes whose mean
    attribution clears edge_threshold.

    Parameters:
    signed: compare signed effects with the thresholds instead of their
            magnitudes.
    nodes: restrict the candidates (default: every node).
    """
    _prepare(network, dataset, metric, kind, node_threshold, edge_threshold)
    with _quiet():
        kept = _threshold_nodes(network, dataset, metric, node_threshold,
                                estimator, kind, signed, nodes)
        edges = _score_edges(network, dataset, [n.name for n in kept], kind,
                             estimator, edge_threshold, signed)
    logger.info("circuit: %d node(s), %d edge(s) at T_N=%g, T_E=%g",
                len(kept), len(edges), node_threshold, edge_threshold)
    return Circuit(_sorted_nodes(network, kept), _sorted_edges(network, edges),
                   metric, node_threshold, edge_threshold, estimator, signed,
                   kind.describe())


def edge_attribution(network: NeuralNetwork, x: Any, upstream: NodeRef,
                     downstream: NodeRef,
                     estimator: Estimator = Estimator(),
                     kind: AblationKind = AblationKind.zero()) -> float:
    """
    Effect of ablating `upstream` on the activation of `downstream`
    (metric node_activation(downstream)).
    """
    up_stage, _ = network.locate(upstream)
    down_stage, _ = network.locate(downstream)
    if up_stage >= down_stage:
        raise OrderingError("'%s' does not precede '%s'" % (
            network.node_name(upstream), network.node_name(downstream)))
    table = effect_table(network, x, kind,
                         TargetMetric.node_activation(downstream), estimator,
                         [upstream])
    return float(table.estimates[0])


def expand_local_dependencies(network: NeuralNetwork, circuit: Circuit,
                              anchor: NodeRef, dataset: Dataset,
                              node_threshold: Optional[float] = None,
                              estimator: Optional[Estimator] = None,
                              kind: AblationKind = AblationKind.zero()
                              ) -> Circuit:
    """
    One level of local expansion: score every node upstream of the anchor
    against the anchor's activation and merge those clearing the node
    threshold (default: the circuit's) into the circuit, marked with the
    anchor, together with their edge into the anchor. Nodes already in the
    circuit keep their provenance. Repeating the call changes nothing.
    """
    anchor = network.node_name(anchor)
    if anchor not in circuit:
        raise ValidationError("anchor '%s' is not a circuit node" % anchor)
    if estimator is not None and estimator != circuit.estimator:
        raise ValidationError("circuit is scored with %s; cannot expand "
                              "with %s" % (circuit.method, estimator.tag))
    if kind.describe() != circuit.ablation:
        raise ValidationError("circuit uses %s ablation; cannot expand with "
                              "%s" % (circuit.ablation, kind.describe()))
    threshold = circuit.node_threshold if node_threshold is None \
        else node_threshold
    _check_thresholds(threshold)
    if len(dataset) == 0:
        raise ValidationError("expansion needs a non-empty dataset")
    upstream = network.upstream_of(anchor)
    if not upstream:
        return circuit
    warn_zero_ablation(network, kind, upstream)
    with _quiet():
        table = effect_sweep(network, dataset, kind,
                             TargetMetric.node_activation(anchor),
                             circuit.estimator, upstream)
    nodes = {n.name: n for n in circuit.nodes}
    edges = {(e.upstream, e.downstream): e for e in circuit.edges}
    for name in upstream:
        score = table[name]
        if not _admits(score, threshold, circuit.signed):
            continue
        if name not in nodes:
            nodes[name] = CircuitNode(name, score, EXPANSION, anchor=anchor)
            logger.debug("expansion at %s admits %s (%g)", anchor, name,
                         score)
        if (name, anchor) not in edges and _admits(
                score, circuit.edge_threshold, circuit.signed):
            edges[(name, anchor)] = CircuitEdge(name, anchor, score)
    return replace(circuit,
                   nodes=_sorted_nodes(network, list(nodes.values())),
                   edges=_sorted_edges(network, list(edges.values())))


def dataset_problem(network: NeuralNetwork, dataset: Dataset,
                    metric: TargetMetric,
                    candidates: Optional[Sequence[NodeRef]] = None,
                    kind: AblationKind = AblationKind.zero()
                    ) -> AblationProblem:
    """
    An ablation problem whose value is the metric averaged over the
    dataset. Candidates default to every non-output node.
    """
    if candidates is None:
        outputs = set(network.output_names)
        candidates = [n for n in network.nodes() if n not in outputs]
    candidates = [network.node_name(c) for c in candidates]
    metric.validate(network)
    positions = {c: network.locate(c) for c in candidates}
    replacements = [replacement_values(network, x, kind)
                    for x in dataset.inputs]

    def measure(ablated: FrozenSet[str]) -> float:
        values = []
        for x, replacement in zip(dataset.inputs, replacements):
            overrides = {positions[c]: replacement[positions[c][0]][
                positions[c][1]] for c in candidates if c in ablated}
            values.append(metric.value(forward(network, x, overrides)))
        return float(np.mean(values))

    return AblationProblem(candidates, measure, metric.describe())


def discover_with_set_search(network: NeuralNetwork, dataset: Dataset,
                             metric: TargetMetric,
                             node_threshold: float = NODE_THRESHOLD,
                             k_max: int = 2,
                             edge_threshold: float = EDGE_THRESHOLD,
                             estimator: Estimator = Estimator(),
                             kind: AblationKind = AblationKind.zero(),
                             signed: bool = False,
                             preemption_rounds: int = 0,
                             candidates: Optional[Sequence[NodeRef]] = None,
                             mode: str = "exhaustive") -> Circuit:
    """
    discover_circuit, plus the members of every minimal ablation set of
    two or more candidates whose joint effect clears node_threshold, and,
    when preemption_rounds > 0, every candidate that becomes significant
    in a later preemption round (at most preemption_rounds rounds).
    Edges are scored over the final node set.

    With k_max = 1 and no preemption rounds this is discover_circuit.
    """
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    if preemption_rounds < 0:
        raise ValidationError("preemption_rounds must be >= 0")
    _prepare(network, dataset, metric, kind, node_threshold, edge_threshold)
    with _quiet():
        kept = {n.name: n for n in _threshold_nodes(
            network, dataset, metric, node_threshold, estimator, kind, signed,
            None)}
        problem = dataset_problem(network, dataset, metric, candidates, kind)
        if k_max > 1:
            report = find_minimal_ablation_sets(
                problem, node_threshold, min(k_max, len(problem.candidates)),
                mode)
            for found in report.minimal_sets:
                if len(found.members) < 2 or not _admits(
                        found.effect_delta, node_threshold, signed):
                    continue
                for name in found.members:
                    if name not in kept:
                        kept[name] = CircuitNode(name, found.effect_delta,
                                                 SET, found.members)
        if preemption_rounds > 0:
            rounds = detect_preemption(problem, node_threshold,
                                       preemption_rounds)
            for k, r in enumerate(rounds.rounds[1:], start=2):
                for name in r.discovered:
                    if name not in kept and _admits(r.effects[name],
                                                    node_threshold, signed):
                        kept[name] = CircuitNode(name, r.effects[name],
                                                 PREEMPTED, round=k)
        nodes = _sorted_nodes(network, list(kept.values()))
        edges = _score_edges(network, dataset, [n.name for n in nodes], kind,
                             estimator, edge_threshold, signed)
    logger.info("set-search circuit: %d node(s) (%d by set, %d preempted)",
                len(nodes), sum(n.provenance == SET for n in nodes),
                sum(n.provenance == PREEMPTED for n in nodes))
    return Circuit(nodes, _sorted_edges(network, edges), metric,
                   node_threshold, edge_threshold, estimator, signed,
                   kind.describe())


@dataclass(frozen=True)
class Faithfulness:
    """
    retention is raw_ratio clamped to [0, 1].
    """
    retention: float
    raw_ratio: float
    full_metric: float
    circuit_metric: float

    def to_dict(self) -> Dict[str, float]:
        return {"retention": self.retention, "raw_ratio": self.raw_ratio,
                "full_metric": self.full_metric,
                "circuit_metric": self.circuit_metric}


def circuit_faithfulness(network: NeuralNetwork, circuit: Circuit,
                         dataset: Dataset,
                         metric: Optional[TargetMetric] = None,
                         kind: AblationKind = AblationKind.zero()
                         ) -> Faithfulness:
    """
    Ablate every non-output node outside the circuit and compare the mean
    metric with that of the full network.
    """
    metric = circuit.metric if metric is None else metric
    metric.validate(network)
    if len(dataset) == 0:
        raise ValidationError("faithfulness needs a non-empty dataset")
    for name in circuit.names():
        network.locate(name)
    outputs = set(network.output_names)
    ablated = [n for n in network.nodes()
               if n not in circuit and n not in outputs]
    warn_zero_ablation(network, kind, ablated)
    positions = [network.locate(n) for n in ablated]
    full, kept = [], []
    for x in dataset.inputs:
        replacement = replacement_values(network, x, kind)
        full.append(metric.value(forward(network, x)))
        overrides = {(s, i): replacement[s][i] for s, i in positions}
        kept.append(metric.value(forward(network, x, overrides)))
    full_metric, circuit_metric = float(np.mean(full)), float(np.mean(kept))
    if abs(full_metric) < 1e-12:
        raise UndefinedMetricError("full-network metric is zero; retention "
                                   "is undefined")
    ratio = circuit_metric/full_metric
    return Faithfulness(float(np.clip(ratio, 0.0, 1.0)), ratio, full_metric,
                        circuit_metric)


def circuit_tables(circuit: Circuit) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Node and edge tables for spreadsheets.
    """
    nodes = pd.DataFrame({
        "node": [n.name for n in circuit.nodes],
        "score": [n.score for n in circuit.nodes],
        "provenance": [n.provenance for n in circuit.nodes],
        "annotation": [n.annotation() for n in circuit.nodes],
    })
    edges = pd.DataFrame({
        "upstream": [e.upstream for e in circuit.edges],
        "downstream": [e.downstream for e in circuit.edges],
        "score": [e.score for e in circuit.edges],
    })
    return nodes, edges
