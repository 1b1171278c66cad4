"""
transitivity.py

When does C depending on B and B depending on A make C depend on A?
Checks the five interventional conditions for a given witness, searches
for a witness, checks the surjectivity + bottleneck sufficient pair, and
enumerates causal paths.
"""
import itertools
import json
import logging
import networkx as nx
from dataclasses import dataclass
from tabulate import tabulate
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union
from .errors import (EnumerationError, PathOverflowError, UnknownNodeError,
                     ValidationError)
from .expressions import Value
from .scm import (CausalGraph, InterventionSpec, evaluate,
                  exogenous_contexts)

logger = logging.getLogger(__name__)

PATH_CAP = 10**6

TRANSITIVE = "transitive"
NOT_ESTABLISHED = "not-established"


@dataclass(frozen=True)
class TransitivityWitness:
    a1: Value
    a2: Value
    b1: Value
    b2: Value
    c1: Value
    c2: Value

    def astuple(self) -> Tuple[Value, ...]:
        return (self.a1, self.a2, self.b1, self.b2, self.c1, self.c2)

    def __str__(self) -> str:
        return "(%s)" % ", ".join(_show(v) for v in self.astuple())


@dataclass
class ConditionReport:
    """
    Attributes:
    conditions [List[Tuple[str, bool]]]: each checked condition with its
                                          outcome, in order.
    verdict [str]: 'transitive' when every condition holds, else
                   'not-established'.
    witness [Optional[TransitivityWitness]]: the values checked, if any.
    """
    conditions: List[Tuple[str, bool]]
    witness: Optional[TransitivityWitness] = None

    @property
    def verdict(self) -> str:
        if self.conditions and all(ok for _, ok in self.conditions):
            return TRANSITIVE
        return NOT_ESTABLISHED

    @property
    def results(self) -> List[bool]:
        return [ok for _, ok in self.conditions]

    def failing(self) -> List[int]:
        """
        1-based numbers of the conditions that failed.
        """
        return [k for k, (_, ok) in enumerate(self.conditions, start=1)
                if not ok]

    def table(self) -> str:
        return tabulate([[k, text, "yes" if ok else "NO"]
                         for k, (text, ok) in enumerate(self.conditions,
                                                        start=1)],
                        headers=["#", "condition", "holds"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "conditions": [{"condition": text, "holds": ok}
                           for text, ok in self.conditions],
            "witness": None if self.witness is None
            else list(self.witness.astuple()),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _show(value: Value) -> str:
    return str(int(value)) if isinstance(value, bool) else str(value)


def _check_distinct(graph: CausalGraph, names: Sequence[str]) -> None:
    for name in names:
        graph.variable(name)
    if len(set(names)) != len(names):
        raise ValidationError("variables %s must be distinct"
                              % ", ".join(names))


def _contexts(graph: CausalGraph, context: Optional[Mapping]
              ) -> List[Mapping]:
    if context is not None:
        return [context]
    return exogenous_contexts(graph)


def _entails(graph: CausalGraph, contexts: Sequence[Mapping],
             forced: Mapping[str, Value], variable: str,
             value: Value) -> bool:
    # interventional implication: in every context, doing `forced`
    # yields variable = value
    spec = InterventionSpec(forced)
    return all(evaluate(graph, ctx, spec)[variable] == value
               for ctx in contexts)


def check_halpern_conditions(graph: CausalGraph, a: str, b: str, c: str,
                             witness: TransitivityWitness,
                             context: Optional[Mapping] = None
                             ) -> ConditionReport:
    """
    Check, by intervention, the five conditions under which C depends
    transitively on A:

        1. do(A=a1) => B=b1          2. do(B=b1) => C=c1
        3. c1 != c2                  4. do(A=a2) => B=b2
        5. do(A=a2, B=b2) => C=c2

    "=>" holds when the consequent follows in every combination of
    exogenous values (or in `context` alone when one is given).

    >>> from causal_probe.generators import billiards_graph
    >>> w = TransitivityWitness(True, False, True, False, True, False)
    >>> check_halpern_conditions(billiards_graph(), "A", "B", "C", w).verdict
    'transitive'
    """
    _check_distinct(graph, [a, b, c])
    a1, a2 = graph.domain(a).coerce(witness.a1), graph.domain(a).coerce(
        witness.a2)
    b1, b2 = graph.domain(b).coerce(witness.b1), graph.domain(b).coerce(
        witness.b2)
    c1, c2 = graph.domain(c).coerce(witness.c1), graph.domain(c).coerce(
        witness.c2)
    witness = TransitivityWitness(a1, a2, b1, b2, c1, c2)
    contexts = _contexts(graph, context)
    conditions = [
        ("do(%s=%s) => %s=%s" % (a, _show(a1), b, _show(b1)),
         _entails(graph, contexts, {a: a1}, b, b1)),
        ("do(%s=%s) => %s=%s" % (b, _show(b1), c, _show(c1)),
         _entails(graph, contexts, {b: b1}, c, c1)),
        ("%s != %s" % (_show(c1), _show(c2)), c1 != c2),
        ("do(%s=%s) => %s=%s" % (a, _show(a2), b, _show(b2)),
         _entails(graph, contexts, {a: a2}, b, b2)),
        ("do(%s=%s, %s=%s) => %s=%s" % (a, _show(a2), b, _show(b2), c,
                                        _show(c2)),
         _entails(graph, contexts, {a: a2, b: b2}, c, c2)),
    ]
    return ConditionReport(conditions, witness)


def _finite_values(graph: CausalGraph, name: str) -> Tuple[Value, ...]:
    domain = graph.domain(name)
    if not domain.is_finite:
        raise EnumerationError("'%s' is real-valued" % name)
    return domain.values()


def find_transitivity_witness(graph: CausalGraph, a: str, b: str, c: str,
                              context: Optional[Mapping] = None
                              ) -> Optional[TransitivityWitness]:
    """
    The lexicographically first (a1, a2, b1, b2, c1, c2), in domain order,
    passing all five conditions; None when there is none.
    """
    _check_distinct(graph, [a, b, c])
    a_values = _finite_values(graph, a)
    b_values = _finite_values(graph, b)
    c_values = _finite_values(graph, c)
    contexts = _contexts(graph, context)
    cache: Dict[Tuple, bool] = {}

    def entails(forced: Tuple[Tuple[str, Value], ...], variable: str,
                value: Value) -> bool:
        key = (forced, variable, value)
        if key not in cache:
            cache[key] = _entails(graph, contexts, dict(forced), variable,
                                  value)
        return cache[key]

    for a1, a2, b1, b2, c1, c2 in itertools.product(
            a_values, a_values, b_values, b_values, c_values, c_values):
        if (c1 != c2
                and entails(((a, a1),), b, b1)
                and entails(((b, b1),), c, c1)
                and entails(((a, a2),), b, b2)
                and entails(((a, a2), (b, b2)), c, c2)):
            witness = TransitivityWitness(a1, a2, b1, b2, c1, c2)
            logger.debug("witness %s for %s -> %s -> %s", witness, a, b, c)
            return witness
    return None


def check_sufficient_conditions(graph: CausalGraph, a: str, b: str, c: str,
                                context: Optional[Mapping] = None
                                ) -> ConditionReport:
    """
    1. every value of B is reached by some do(A=a);
    2. B lies on every directed path from A to C.
    """
    _check_distinct(graph, [a, b, c])
    a_values = _finite_values(graph, a)
    b_values = _finite_values(graph, b)
    contexts = _contexts(graph, context)
    surjective = all(any(_entails(graph, contexts, {a: av}, b, bv)
                         for av in a_values)
                     for bv in b_values)
    return ConditionReport([
        ("every value of %s is reached by some do(%s=.)" % (b, a),
         surjective),
        ("%s is on every path from %s to %s" % (b, a, c),
         is_causal_bottleneck(graph, b, a, c)),
    ])


GraphLike = Union[CausalGraph, nx.DiGraph]


def _digraph(graph: GraphLike) -> nx.DiGraph:
    if isinstance(graph, CausalGraph):
        return graph.to_networkx()
    return graph


def _require(digraph: nx.DiGraph, *names: str) -> None:
    for name in names:
        if name not in digraph:
            raise UnknownNodeError(name)


def enumerate_paths(graph: GraphLike, source: str, target: str,
                    cap: int = PATH_CAP) -> List[List[str]]:
    """
    Every simple directed path from source to target, in lexicographic
    order. More than `cap` paths is an error, never a truncation.

    >>> g = nx.DiGraph([("A", "B1"), ("A", "B2"), ("B1", "C"), ("B2", "C")])
    >>> enumerate_paths(g, "A", "C")
    [['A', 'B1', 'C'], ['A', 'B2', 'C']]
    """
    digraph = _digraph(graph)
    _require(digraph, source, target)
    if source == target:
        raise ValidationError("path endpoints must differ")
    paths = []
    for path in nx.all_simple_paths(digraph, source, target):
        paths.append(list(path))
        if len(paths) > cap:
            raise PathOverflowError(cap)
    paths.sort()
    logger.debug("%d paths from %s to %s", len(paths), source, target)
    return paths


def is_causal_bottleneck(graph: GraphLike, b: str, a: str, c: str) -> bool:
    """
    True iff at least one directed path leads from a to c and every such
    path passes through b.
    """
    digraph = _digraph(graph)
    _require(digraph, a, b, c)
    if len({a, b, c}) != 3:
        raise ValidationError("bottleneck endpoints must be distinct")
    if not nx.has_path(digraph, a, c):
        return False
    without = digraph.copy()
    without.remove_node(b)
    return not nx.has_path(without, a, c)
