"""
counterfactuals.py

Counterfactual dependence between events, causal chains, and the
discovery of overdetermined and preempted causes by single- and
multi-component ablation.
"""
import itertools
import json
import logging
import math
import warnings
import numpy as np
from collections import deque
from dataclasses import dataclass, field
from scipy.special import comb
from typing import (Any, Callable, Dict, FrozenSet, Iterable, List, Mapping,
                    Optional, Sequence, Tuple)
from .errors import (InterventionError, NumericError, SearchCapExceededError,
                     SearchClampWarning, ShapeMismatchError, ValidationError)
from .expressions import Value
from .interventions import (AblationKind, TargetMetric, replacement_values,
                            warn_zero_ablation)
from .networks import NeuralNetwork, forward
from .scm import TOLERANCE, CausalGraph, InterventionSpec, evaluate

logger = logging.getLogger(__name__)

SEARCH_CAP = 2**20
DEFAULT_EPSILON = 0.1
INJECT_SAFETY_FACTOR = 2.0

_COMPARE: Dict[str, Callable[[float, float], bool]] = {
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
}


@dataclass(frozen=True)
class Event:
    """
    A variable taking a value, or for real variables a threshold
    predicate `variable op bound`.

    >>> Event("C", True)
    C=1
    >>> Event.threshold("y", ">", 0.5)
    y>0.5
    """
    variable: str
    value: Optional[Value] = None
    op: Optional[str] = None
    bound: Optional[float] = None

    def __post_init__(self) -> None:
        if self.op is not None:
            if self.op not in _COMPARE:
                raise ValidationError("unknown event comparison '%s'"
                                      % self.op)
            if self.bound is None or not math.isfinite(self.bound):
                raise ValidationError("real events need a finite bound")
        elif self.value is None:
            raise ValidationError("event on '%s' has neither a value nor a "
                                  "bound" % self.variable)

    @classmethod
    def threshold(cls, variable: str, op: str, bound: float) -> "Event":
        return cls(variable, op=op, bound=float(bound))

    def holds(self, world: Mapping[str, Value]) -> bool:
        actual = world[self.variable]
        if self.op is not None:
            return _COMPARE[self.op](float(actual), self.bound)
        if isinstance(actual, float) and not isinstance(self.value, str):
            return abs(actual - float(self.value)) <= TOLERANCE
        return actual == self.value

    def __repr__(self) -> str:
        if self.op is not None:
            return "%s%s%g" % (self.variable, self.op, self.bound)
        value = int(self.value) if isinstance(self.value, bool) \
            else self.value
        return "%s=%s" % (self.variable, value)


def _numeric(value: Value, reference: Value) -> float:
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, str):
        return 1.0 if value == reference else 0.0
    return float(value)


def default_alternate(graph: CausalGraph, variable: str, actual: Value,
                      alternates: Optional[Mapping[str, Value]] = None
                      ) -> Value:
    """
    The "had not occurred" value of a variable: the negation of a boolean,
    0 for a real, and for a labelled domain whatever the caller supplies.
    """
    domain = graph.domain(variable)
    if alternates and variable in alternates:
        alternate = domain.coerce(alternates[variable])
    elif domain.kind == "bool":
        alternate = not actual
    elif domain.kind == "real":
        alternate = domain.coerce(0.0)
    else:
        raise InterventionError("'%s' has a labelled domain; supply an "
                                "alternate value" % variable)
    if alternate == actual:
        raise InterventionError("alternate value of '%s' equals its actual "
                                "value %r" % (variable, actual))
    return alternate


@dataclass(frozen=True)
class DependenceVerdict:
    """
    holds = condition_i and condition_ii.
    """
    cause: Event
    effect: Event
    alternate: Value
    condition_i: bool
    condition_ii: bool
    effect_delta: float

    @property
    def holds(self) -> bool:
        return self.condition_i and self.condition_ii

    def to_dict(self) -> Dict[str, Any]:
        return {"cause": repr(self.cause), "effect": repr(self.effect),
                "alternate": self.alternate, "holds": self.holds,
                "condition_i": self.condition_i,
                "condition_ii": self.condition_ii,
                "effect_delta": self.effect_delta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def causal_dependence(graph: CausalGraph, exogenous: Mapping,
                      cause: Event, effect: Event,
                      epsilon: Optional[float] = None,
                      alternate: Optional[Value] = None
                      ) -> DependenceVerdict:
    """
    Does `effect` counterfactually depend on `cause` in this context?

    Condition (i) checks the effect in the factual world. Condition (ii)
    evaluates under do(cause = alternate) and checks that a discrete
    effect no longer holds, or that a real effect variable moved by more
    than epsilon (default: 0.1 of its factual magnitude).

    >>> from causal_probe.generators import hiker_graph
    >>> causal_dependence(hiker_graph(), {"A": True}, Event("B", True),
    ...                   Event("C", True)).holds
    True
    """
    factual = evaluate(graph, exogenous)
    if not cause.holds(factual):
        raise InterventionError("cause %r contradicts the factual world "
                                "(%s=%r)" % (cause, cause.variable,
                                             factual[cause.variable]))
    actual = factual[cause.variable]
    if alternate is None:
        alternate = default_alternate(graph, cause.variable, actual)
    else:
        alternate = default_alternate(graph, cause.variable, actual,
                                      {cause.variable: alternate})
    counterfactual = evaluate(graph, exogenous,
                              InterventionSpec({cause.variable: alternate}))
    before = factual[effect.variable]
    after = counterfactual[effect.variable]
    delta = _numeric(after, before) - _numeric(before, before)
    condition_i = effect.holds(factual)
    if graph.domain(effect.variable).kind == "real":
        if epsilon is None:
            epsilon = DEFAULT_EPSILON*abs(float(before))
        condition_ii = abs(delta) > epsilon
    else:
        condition_ii = not effect.holds(counterfactual)
    verdict = DependenceVerdict(cause, effect, alternate, condition_i,
                                condition_ii, delta)
    logger.debug("dependence of %r on %r: %s", effect, cause, verdict.holds)
    return verdict


def causal_chain(graph: CausalGraph, exogenous: Mapping, source: Event,
                 target: Event, epsilon: Optional[float] = None,
                 alternates: Optional[Mapping[str, Value]] = None
                 ) -> Optional[List[Event]]:
    """
    The shortest path v0..vn along graph edges from `source` to `target`
    whose every step is a counterfactual dependence, intermediate events
    being the factual values; ties go to the lexicographically smallest
    path. None when no such path exists.
    """
    if source.variable == target.variable:
        raise ValidationError("chain endpoints must differ")
    graph.variable(source.variable)
    graph.variable(target.variable)
    factual = evaluate(graph, exogenous)
    alternates = dict(alternates or {})

    def event_of(name: str) -> Event:
        if name == source.variable:
            return source
        if name == target.variable:
            return target
        return Event(name, factual[name])

    def depends(upstream: str, downstream: str) -> bool:
        verdict = causal_dependence(
            graph, exogenous, event_of(upstream), event_of(downstream),
            epsilon, alternates.get(upstream))
        return verdict.holds

    parent: Dict[str, Optional[str]] = {source.variable: None}
    queue = deque([source.variable])
    while queue:
        current = queue.popleft()
        for child in sorted(graph.children(current)):
            if child in parent or not depends(current, child):
                continue
            parent[child] = current
            if child == target.variable:
                path = [child]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return [event_of(n) for n in reversed(path)]
            queue.append(child)
    return None


@dataclass(frozen=True)
class InfluenceReport:
    cause: str
    effect: str
    outcomes: Tuple[Tuple[Value, Value], ...]

    @property
    def distinct_effects(self) -> List[Value]:
        seen: List[Value] = []
        for _, value in self.outcomes:
            if value not in seen:
                seen.append(value)
        return seen

    @property
    def holds(self) -> bool:
        return len(self.distinct_effects) > 1

    def to_dict(self) -> Dict[str, Any]:
        return {"cause": self.cause, "effect": self.effect,
                "outcomes": [list(o) for o in self.outcomes],
                "holds": self.holds}


def causal_influence(graph: CausalGraph, exogenous: Mapping, cause: str,
                     effect: str,
                     alternates: Optional[Sequence[Value]] = None
                     ) -> InfluenceReport:
    """
    Evaluate `effect` under do(cause = v) for each alternate v (by default
    every value of a finite domain). The cause influences the effect when
    the effect takes more than one value.
    """
    domain = graph.domain(cause)
    if alternates is None:
        if not domain.is_finite:
            raise ValidationError("'%s' is real-valued; supply alternates"
                                  % cause)
        alternates = domain.values()
    outcomes = []
    for value in alternates:
        world = evaluate(graph, exogenous, InterventionSpec({cause: value}))
        outcomes.append((world[cause], world[effect]))
    return InfluenceReport(cause, effect, tuple(outcomes))


class AblationProblem:
    """
    A context, a candidate list and a scalar effect metric: the common
    ground of set search and preemption rounds. value(S) is the metric
    with every candidate in S ablated; results are cached.
    """

    def __init__(self, candidates: Sequence[str],
                 measure: Callable[[FrozenSet[str]], float],
                 description: str = "") -> None:
        if len(candidates) == 0:
            raise ValidationError("candidate list is empty")
        if len(set(candidates)) != len(candidates):
            raise ValidationError("candidate listed twice")
        self.candidates = tuple(candidates)
        self.description = description
        self._measure = measure
        self._cache: Dict[FrozenSet[str], float] = {}
        self.evaluations = 0

    def value(self, ablated: Iterable[str]) -> float:
        key = frozenset(ablated)
        if key not in self._cache:
            self._cache[key] = self._measure(key)
            self.evaluations += 1
        return self._cache[key]

    def effect(self, ablated: Iterable[str],
               already: Iterable[str] = ()) -> float:
        """
        Metric change from ablating `ablated` on top of `already`.
        """
        already = frozenset(already)
        return self.value(already | frozenset(ablated)) - self.value(already)


def graph_problem(graph: CausalGraph, exogenous: Mapping,
                  candidates: Sequence[str], effect: str,
                  alternates: Optional[Mapping[str, Value]] = None
                  ) -> AblationProblem:
    """
    Ablate graph variables by do(variable = alternate); the metric is the
    effect variable (booleans as 0/1, labels as 1 when unchanged).
    """
    factual = evaluate(graph, exogenous)
    graph.variable(effect)
    forced = {c: default_alternate(graph, c, factual[c], alternates)
              for c in candidates}
    reference = factual[effect]

    def measure(ablated: FrozenSet[str]) -> float:
        spec = InterventionSpec([(c, forced[c]) for c in candidates
                                 if c in ablated])
        return _numeric(evaluate(graph, exogenous, spec)[effect], reference)

    return AblationProblem(candidates, measure, "effect %s" % effect)


def network_problem(network: NeuralNetwork, x: Any,
                    candidates: Optional[Sequence[str]] = None,
                    metric: Optional[TargetMetric] = None,
                    kind: AblationKind = AblationKind.zero()
                    ) -> AblationProblem:
    """
    Ablate network nodes with `kind`. Candidates default to every
    non-output node; the metric defaults to the (positive) activation of
    the first output.
    """
    if candidates is None:
        outputs = set(network.output_names)
        candidates = [n for n in network.nodes() if n not in outputs]
    candidates = [network.node_name(c) for c in candidates]
    if metric is None:
        metric = TargetMetric.node_activation(network.output_names[0], 1.0)
    metric.validate(network)
    warn_zero_ablation(network, kind, candidates)
    replacement = replacement_values(network, x, kind)
    positions = {c: network.locate(c) for c in candidates}

    def measure(ablated: FrozenSet[str]) -> float:
        overrides = {positions[c]: replacement[positions[c][0]][
            positions[c][1]] for c in candidates if c in ablated}
        return metric.value(forward(network, x, overrides))

    return AblationProblem(candidates, measure, metric.describe())


@dataclass(frozen=True)
class AblationSet:
    members: Tuple[str, ...]
    effect_delta: float


@dataclass
class OverdeterminationReport:
    """
    Attributes:
    candidates [Tuple[str, ...]]: nodes searched over.
    minimal_sets [List[AblationSet]]: sets whose joint ablation moves the
                                      metric by more than epsilon.
    singleton_effects [Dict[str, float]]: effect of each lone ablation.
    search_mode [str]: exhaustive or greedy.
    """
    candidates: Tuple[str, ...]
    minimal_sets: List[AblationSet]
    singleton_effects: Dict[str, float]
    search_mode: str
    epsilon: float
    k_max: int
    evaluated: int = 0

    def sets(self) -> List[FrozenSet[str]]:
        return [frozenset(s.members) for s in self.minimal_sets]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "search_mode": self.search_mode,
            "epsilon": self.epsilon,
            "k_max": self.k_max,
            "candidates": list(self.candidates),
            "singleton_effects": dict(self.singleton_effects),
            "minimal_sets": [{"members": list(s.members),
                              "effect_delta": s.effect_delta}
                             for s in self.minimal_sets],
            "evaluated": self.evaluated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def subset_count(n: int, k_max: int) -> int:
    """
    Number of non-empty subsets of size <= k_max of n candidates.

    >>> subset_count(4, 2)
    10
    """
    return int(sum(comb(n, k, exact=True) for k in range(1, k_max + 1)))


def find_minimal_ablation_sets(problem: AblationProblem, epsilon: float,
                               k_max: int = 2, mode: str = "exhaustive"
                               ) -> OverdeterminationReport:
    """
    Search for sets of candidates whose joint ablation moves the metric by
    more than epsilon.

    Parameters:
    problem: see graph_problem and network_problem.
    epsilon: significance threshold on |metric change|.
    k_max: largest set size considered.
    mode: 'exhaustive' tests every subset of size <= k_max by increasing
          size and reports the inclusion-minimal significant ones; 'greedy'
          grows one set by the locally best addition (lowest candidate
          index on ties) until it is significant or has k_max members.

    Returns:
    The report, with sets in canonical order (size, then candidate order).
    """
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    if mode not in ("exhaustive", "greedy"):
        raise ValidationError("unknown search mode '%s'" % mode)
    candidates = problem.candidates
    if k_max > len(candidates):
        warnings.warn("k_max %d clamped to %d candidates"
                      % (k_max, len(candidates)), SearchClampWarning,
                      stacklevel=2)
        k_max = len(candidates)
    singles = {c: problem.effect([c]) for c in candidates}
    found: List[AblationSet] = []
    if mode == "exhaustive":
        total = subset_count(len(candidates), k_max)
        if total > SEARCH_CAP:
            raise SearchCapExceededError(total, SEARCH_CAP)
        for size in range(1, k_max + 1):
            for subset in itertools.combinations(candidates, size):
                members = frozenset(subset)
                if any(frozenset(s.members) <= members for s in found):
                    continue
                delta = problem.effect(subset)
                if abs(delta) > epsilon:
                    found.append(AblationSet(subset, delta))
    else:
        chosen: List[str] = []
        while len(chosen) < k_max:
            best, best_delta = None, 0.0
            for c in candidates:
                if c in chosen:
                    continue
                delta = problem.effect(chosen + [c])
                if best is None or abs(delta) > abs(best_delta):
                    best, best_delta = c, delta
            chosen.append(best)
            if abs(best_delta) > epsilon:
                order = {c: i for i, c in enumerate(candidates)}
                found.append(AblationSet(
                    tuple(sorted(chosen, key=order.get)), best_delta))
                break
    logger.info("%s search (k_max=%d): %d set(s), %d evaluations", mode,
                k_max, len(found), problem.evaluations)
    return OverdeterminationReport(candidates, found, singles, mode, epsilon,
                                   k_max, problem.evaluations)


@dataclass(frozen=True)
class PreemptionRound:
    ablated: Tuple[str, ...]
    discovered: Tuple[str, ...]
    effects: Dict[str, float] = field(hash=False, compare=False)


@dataclass
class PreemptionReport:
    """
    rounds[k] lists what was ablated before round k+1 and which nodes
    became significant in it. The last round is empty when a fixpoint
    was reached. unablated_effects holds the lone effect of every node
    found after the first round, measured with nothing ablated.
    """
    rounds: List[PreemptionRound]
    epsilon: float
    unablated_effects: Dict[str, float]

    @property
    def fixpoint(self) -> bool:
        return bool(self.rounds) and not self.rounds[-1].discovered

    def discovered(self) -> List[Tuple[str, ...]]:
        return [r.discovered for r in self.rounds]

    def round_of(self, node: str) -> Optional[int]:
        for k, r in enumerate(self.rounds, start=1):
            if node in r.discovered:
                return k
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "fixpoint": self.fixpoint,
            "rounds": [{"round": k, "ablated": list(r.ablated),
                        "discovered": list(r.discovered),
                        "effects": dict(r.effects)}
                       for k, r in enumerate(self.rounds, start=1)],
            "unablated_effects": dict(self.unablated_effects),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def detect_preemption(problem: AblationProblem, epsilon: float,
                      max_rounds: int = 5) -> PreemptionReport:
    """
    Round 1 reports every candidate whose lone ablation moves the metric
    by more than epsilon. Each later round keeps everything found so far
    ablated and repeats the singleton search over the rest. Stops at a
    round that finds nothing, or after max_rounds.
    """
    if max_rounds < 1:
        raise ValidationError("max_rounds must be >= 1")
    found: List[str] = []
    rounds: List[PreemptionRound] = []
    for _ in range(max_rounds):
        effects = {c: problem.effect([c], found)
                   for c in problem.candidates if c not in found}
        new = tuple(c for c, e in effects.items() if abs(e) > epsilon)
        rounds.append(PreemptionRound(tuple(found), new, effects))
        logger.debug("round %d: ablated %s, found %s", len(rounds), found,
                     list(new))
        if not new:
            break
        found.extend(new)
    later = [c for r in rounds[1:] for c in r.discovered]
    unablated = {c: problem.effect([c]) for c in later}
    for node, effect in unablated.items():
        if abs(effect) > epsilon:
            raise NumericError("node '%s' found after round 1 has lone "
                               "effect %g > epsilon" % (node, effect))
    return PreemptionReport(rounds, epsilon, unablated)


@dataclass(frozen=True)
class BidirectionalResult:
    node: str
    noising_delta: float
    denoising_delta: float
    epsilon: float

    @property
    def causal(self) -> bool:
        return (abs(self.noising_delta) > self.epsilon
                or abs(self.denoising_delta) > self.epsilon)


def bidirectional_test(network: NeuralNetwork, x_original: Any,
                       x_patch: Any, node: str, metric: TargetMetric,
                       epsilon: float = DEFAULT_EPSILON
                       ) -> BidirectionalResult:
    """
    Noising patches the node's activation from the patch run into the
    original run; denoising patches the original activation into the
    patch run. Each delta is measured against its own unpatched run.
    """
    x_original = np.asarray(x_original, dtype=np.float64)
    x_patch = np.asarray(x_patch, dtype=np.float64)
    if x_original.shape != x_patch.shape:
        raise ShapeMismatchError("original input has shape %s, patch %s"
                                 % (x_original.shape, x_patch.shape))
    metric.validate(network)
    position = network.locate(node)
    clean = forward(network, x_original)
    corrupt = forward(network, x_patch)
    noised = forward(network, x_original, {position: corrupt[position]})
    denoised = forward(network, x_patch, {position: clean[position]})
    return BidirectionalResult(
        network.node_name(node),
        metric.value(noised) - metric.value(clean),
        metric.value(denoised) - metric.value(corrupt), epsilon)


@dataclass(frozen=True)
class PositiveNegativeResult:
    node: str
    ablation_delta: float
    injection_delta: float
    epsilon: float

    @property
    def candidate(self) -> bool:
        return (abs(self.ablation_delta) > self.epsilon
                or abs(self.injection_delta) > self.epsilon)


def injection_range(network: NeuralNetwork, node: str,
                    reference: Sequence[Any],
                    safety_factor: float = INJECT_SAFETY_FACTOR
                    ) -> Tuple[float, float]:
    """
    The sanctioned interval for injected values: the node's observed
    range [lo, hi] over the reference inputs, widened on both sides by
    safety_factor * max(|lo|, |hi|, 1).
    """
    observed = [forward(network, x)[node] for x in reference]
    lo, hi = min(observed), max(observed)
    margin = safety_factor*max(abs(lo), abs(hi), 1.0)
    return lo - margin, hi + margin


def positive_negative_counterfactual(network: NeuralNetwork, x: Any,
                                     node: str, inject_value: float,
                                     metric: TargetMetric,
                                     kind: AblationKind = AblationKind.zero(),
                                     reference: Optional[Sequence[Any]] = None,
                                     epsilon: float = DEFAULT_EPSILON,
                                     safety_factor: float =
                                     INJECT_SAFETY_FACTOR
                                     ) -> PositiveNegativeResult:
    """
    Null the node (negative counterfactual) and force it to inject_value
    (positive counterfactual); report both metric changes.

    Parameters:
    reference: inputs whose activations bound the injection range
               (default: x alone).
    """
    metric.validate(network)
    position = network.locate(node)
    lo, hi = injection_range(network, node,
                             [x] if reference is None else reference,
                             safety_factor)
    if not lo <= inject_value <= hi:
        raise InterventionError("inject value %g outside the sanctioned "
                                "range [%g, %g] for '%s'" % (
                                    inject_value, lo, hi,
                                    network.node_name(node)))
    base = metric.value(forward(network, x))
    warn_zero_ablation(network, kind, [node])
    replacement = replacement_values(network, x, kind)
    ablated = forward(network, x, {position: replacement[position[0]][
        position[1]]})
    injected = forward(network, x, {position: inject_value})
    return PositiveNegativeResult(network.node_name(node),
                                  metric.value(ablated) - base,
                                  metric.value(injected) - base, epsilon)
