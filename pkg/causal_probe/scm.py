"""
scm.py

Finite structural causal models: typed variables, structural equations,
validated acyclic graphs, evaluation under do-interventions, brute-force
world enumeration and the JSON scenario format.
"""
import itertools
import json
import logging
import math
import networkx as nx
import numpy as np
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from tabulate import tabulate
from typing import (Any, Dict, Iterable, Iterator, List, Optional, Sequence,
                    Tuple, Union)
from . import expressions
from .errors import (CycleError, DomainError, DuplicateEquationError,
                     EnumerationError, InterventionError,
                     MissingExogenousError, TypeMismatchError,
                     UndeclaredVariableError, ValidationError)
from .expressions import StructuralEquation, Value

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9


@dataclass(frozen=True)
class Domain:
    """
    The set of values a variable can take.

    Attributes:
    kind [str]: 'bool', 'set' or 'real'.
    members [Tuple]: the labelled values of a 'set' domain, in order.
    low, high [float]: bounds of a 'real' domain.
    """
    kind: str
    members: Tuple[Value, ...] = ()
    low: float = -math.inf
    high: float = math.inf

    def __post_init__(self) -> None:
        if self.kind not in ("bool", "set", "real"):
            raise DomainError("unknown domain kind '%s'" % self.kind)
        if self.kind == "set" and len(self.members) == 0:
            raise DomainError("finite domain is empty")
        if self.kind == "set" and len(set(self.members)) != len(self.members):
            raise DomainError("finite domain lists a value twice")
        if self.kind == "real" and not self.low <= self.high:
            raise DomainError("real interval has lower > upper")

    @classmethod
    def boolean(cls) -> "Domain":
        return cls("bool")

    @classmethod
    def labels(cls, members: Iterable[Value]) -> "Domain":
        return cls("set", tuple(members))

    @classmethod
    def interval(cls, low: float = -math.inf,
                 high: float = math.inf) -> "Domain":
        return cls("real", low=float(low), high=float(high))

    @property
    def is_finite(self) -> bool:
        return self.kind != "real"

    def values(self) -> Tuple[Value, ...]:
        """
        All values of a finite domain, in domain order.
        """
        if self.kind == "bool":
            return (False, True)
        if self.kind == "set":
            return self.members
        raise EnumerationError("a real interval cannot be enumerated")

    @property
    def expression_type(self) -> str:
        if self.kind == "bool":
            return expressions.BOOL
        if self.kind == "real":
            return expressions.REAL
        if any(isinstance(m, str) for m in self.members):
            return expressions.LABEL
        return expressions.REAL

    def coerce(self, value: Any) -> Value:
        """
        Return the canonical form of a value of this domain.

        >>> Domain.boolean().coerce(1)
        True
        >>> Domain.interval(0, 1).coerce(2.0)
        Traceback (most recent call last):
        ...
        causal_probe.errors.DomainError: 2.0 is outside [0.0, 1.0]
        """
        if self.kind == "bool":
            if isinstance(value, (bool, np.bool_)):
                return bool(value)
            if isinstance(value, str) and value.lower() in (
                    "true", "false", "1", "0"):
                return value.lower() in ("true", "1")
            if (isinstance(value, (int, float, np.number))
                    and float(value) in (0.0, 1.0)):
                return float(value) == 1.0
            raise DomainError("%r is not a boolean" % (value,))
        if self.kind == "set":
            for member in self.members:
                if _same_label(member, value):
                    return member
            raise DomainError("%r is not one of %s" % (
                value, list(self.members)))
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise DomainError("%r is not a real number" % value) from None
        if isinstance(value, (bool, np.bool_)):
            value = 1.0 if value else 0.0
        value = float(value)
        if math.isnan(value) or not (self.low - TOLERANCE <= value
                                     <= self.high + TOLERANCE):
            raise DomainError("%r is outside [%r, %r]" % (
                value, self.low, self.high))
        return value

    def to_json(self) -> Any:
        if self.kind == "bool":
            return "bool"
        if self.kind == "set":
            return {"set": list(self.members)}
        return {"real": [_json_float(self.low), _json_float(self.high)]}

    @classmethod
    def from_json(cls, data: Any) -> "Domain":
        if data == "bool":
            return cls.boolean()
        if isinstance(data, dict) and list(data) == ["set"]:
            return cls.labels(data["set"])
        if isinstance(data, dict) and list(data) == ["real"]:
            bounds = data["real"]
            if not isinstance(bounds, list) or len(bounds) != 2:
                raise DomainError("real domain needs [low, high], got %r"
                                  % (bounds,))
            return cls.interval(_parse_float(bounds[0]),
                                _parse_float(bounds[1]))
        raise DomainError("unrecognised domain %r" % (data,))

    def __str__(self) -> str:
        if self.kind == "bool":
            return "bool"
        if self.kind == "set":
            return "{%s}" % ", ".join(str(m) for m in self.members)
        return "[%g, %g]" % (self.low, self.high)


def _same_label(member: Value, value: Any) -> bool:
    if isinstance(member, str) or isinstance(value, str):
        return str(member) == str(value)
    try:
        return float(member) == float(value)
    except (TypeError, ValueError):
        return False


def _json_float(x: float) -> Union[float, str]:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _parse_float(x: Union[float, str]) -> float:
    try:
        return float(x)
    except (TypeError, ValueError):
        raise DomainError("%r is not a real number" % (x,)) from None


@dataclass(frozen=True)
class Variable:
    name: str
    domain: Domain

    def __post_init__(self) -> None:
        if not self.name.isidentifier() or self.name in expressions.KEYWORDS:
            raise ValidationError("invalid variable name '%s'" % self.name)


class InterventionSpec:
    """
    A set of do-operations: each named variable is forced to a value and
    its equation is not consulted.

    >>> spec = InterventionSpec({"B": 0})
    >>> spec.items()
    (('B', 0),)
    """

    def __init__(self, forced: Union[Mapping, Iterable[Tuple[str, Value]],
                                     None] = None) -> None:
        pairs = list(forced.items() if isinstance(forced, Mapping)
                     else (forced or []))
        names = [name for name, _ in pairs]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise InterventionError("variable(s) intervened on twice: %s"
                                    % ", ".join(duplicates))
        self._items = tuple((str(name), value) for name, value in pairs)

    def items(self) -> Tuple[Tuple[str, Value], ...]:
        return self._items

    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self._items)

    def as_dict(self) -> Dict[str, Value]:
        return dict(self._items)

    def combine(self, other: "InterventionSpec") -> "InterventionSpec":
        """
        Union of two specifications over disjoint variables.
        Overlapping specifications are rejected, never merged.
        """
        overlap = set(self.names()) & set(other.names())
        if overlap:
            raise InterventionError("conflicting interventions on %s"
                                    % ", ".join(sorted(overlap)))
        return InterventionSpec(self._items + other.items())

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, InterventionSpec)
                and dict(self._items) == dict(other.items()))

    def __hash__(self) -> int:
        return hash(frozenset(self._items))

    def __repr__(self) -> str:
        return "do(%s)" % ", ".join("%s=%r" % item for item in self._items)


class Assignment(Mapping):
    """
    An immutable valuation of graph variables (a "world").
    """

    def __init__(self, values: Union[Mapping, Iterable[Tuple[str, Value]]]
                 ) -> None:
        self._values = dict(values)

    def __getitem__(self, name: str) -> Value:
        return self._values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self) -> str:
        return "Assignment(%s)" % ", ".join(
            "%s=%s" % (k, _show(v)) for k, v in self._values.items())

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._values.items(), key=lambda i: i[0])))

    def to_dict(self) -> Dict[str, Value]:
        return dict(self._values)


def _show(value: Value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    return str(value)


class CausalGraph:
    """
    A validated acyclic structural causal model. Build it with build_graph.

    Attributes:
    variables [Dict[str, Variable]]: declared variables, in declaration order.
    equations [Dict[str, StructuralEquation]]: one per endogenous variable.
    exogenous [Tuple[str, ...]]: variables without an equation.
    order [Tuple[str, ...]]: cached topological order.
    """

    def __init__(self, variables: Dict[str, Variable],
                 equations: Dict[str, StructuralEquation],
                 digraph: nx.DiGraph, order: Sequence[str]) -> None:
        self.variables = variables
        self.equations = equations
        self.exogenous = tuple(n for n in variables if n not in equations)
        self.endogenous = tuple(n for n in variables if n in equations)
        self.order = tuple(order)
        self._digraph = digraph

    def __contains__(self, name: str) -> bool:
        return name in self.variables

    def __len__(self) -> int:
        return len(self.variables)

    def domain(self, name: str) -> Domain:
        return self.variable(name).domain

    def variable(self, name: str) -> Variable:
        try:
            return self.variables[name]
        except KeyError:
            raise UndeclaredVariableError(name) from None

    def parents(self, name: str) -> Tuple[str, ...]:
        self.variable(name)
        if name in self.equations:
            return self.equations[name].parents
        return ()

    def children(self, name: str) -> Tuple[str, ...]:
        self.variable(name)
        return tuple(sorted(self._digraph.successors(name),
                            key=self.order.index))

    def edges(self) -> List[Tuple[str, str]]:
        return [(p, c) for c in self.order for p in self.parents(c)]

    def ancestors(self, name: str) -> set:
        return nx.ancestors(self._digraph, name)

    def descendants(self, name: str) -> set:
        return nx.descendants(self._digraph, name)

    def to_networkx(self) -> nx.DiGraph:
        """
        A copy of the parent -> child relation as a networkx DiGraph.
        """
        return self._digraph.copy()

    def __str__(self) -> str:
        rows = []
        for name in self.order:
            equation = self.equations.get(name)
            rows.append([name, str(self.variables[name].domain),
                         ", ".join(self.parents(name)),
                         str(equation) if equation else "(exogenous)"])
        return tabulate(rows, headers=["variable", "domain", "parents",
                                       "equation"])


def build_graph(variables: Iterable[Variable],
                equations: Iterable[StructuralEquation]) -> CausalGraph:
    """
    Validate variables and equations and build an acyclic graph.

    Parameters:
    variables: declared variables; names must be unique.
    equations: structural equations with their targets set.

    Returns:
    The validated graph with a cached topological order (ties broken by
    declaration order).

    >>> from causal_probe.expressions import parse_equation
    >>> g = build_graph([Variable(n, Domain.boolean()) for n in "ABC"],
    ...                 [parse_equation("A", "B"),
    ...                  parse_equation("or(not(A), B)", "C")])
    >>> g.order
    ('A', 'B', 'C')
    """
    declared: Dict[str, Variable] = {}
    for variable in variables:
        if variable.name in declared:
            raise ValidationError("variable '%s' declared twice"
                                  % variable.name)
        declared[variable.name] = variable
    by_target: Dict[str, StructuralEquation] = {}
    for equation in equations:
        if equation.target is None:
            raise ValidationError("equation %s has no target" % equation)
        if equation.target not in declared:
            raise UndeclaredVariableError(equation.target)
        if equation.target in by_target:
            raise DuplicateEquationError(equation.target)
        by_target[equation.target] = equation
    types = {n: v.domain.expression_type for n, v in declared.items()}
    for target, equation in by_target.items():
        for parent in equation.parents:
            if parent not in declared:
                raise UndeclaredVariableError(parent, "equation for '%s'"
                                              % target)
        _check_equation_type(equation, declared[target].domain, types)

    index = {name: i for i, name in enumerate(declared)}
    digraph = nx.DiGraph()
    digraph.add_nodes_from(declared)
    for target in declared:
        if target in by_target:
            for parent in by_target[target].parents:
                digraph.add_edge(parent, target)
    try:
        cycle = nx.find_cycle(digraph)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle is not None:
        raise CycleError([u for u, _ in cycle] + [cycle[0][0]])
    order = list(nx.lexicographical_topological_sort(
        digraph, key=lambda n: index[n]))
    equations_in_order = {n: by_target[n] for n in declared if n in by_target}
    logger.debug("built graph with %d variables, order %s",
                 len(declared), order)
    return CausalGraph(declared, equations_in_order, digraph, order)


def _check_equation_type(equation: StructuralEquation, domain: Domain,
                         types: Dict[str, str]) -> None:
    kind = expressions.infer_type(equation.body, types)
    target_type = domain.expression_type
    if kind == expressions.ANY or kind == target_type:
        return
    if target_type == expressions.REAL and kind == expressions.BOOL:
        return
    raise TypeMismatchError("equation for '%s' yields %s but the variable "
                            "is %s" % (equation.target, kind, target_type))


def evaluate(graph: CausalGraph, exogenous_values: Mapping,
             spec: Optional[InterventionSpec] = None) -> Assignment:
    """
    Evaluate every variable in topological order. A variable named in
    the intervention takes its forced value and its equation is skipped.

    Parameters:
    graph: the causal graph.
    exogenous_values: a value for every exogenous variable that is not
                      intervened on.
    spec: the do-operations to apply.

    Returns:
    The total world, keyed in declaration order.

    >>> from causal_probe.generators import hiker_graph
    >>> evaluate(hiker_graph(), {"A": 1}, InterventionSpec({"B": 0}))
    Assignment(A=1, B=0, C=0)
    """
    spec = spec or InterventionSpec()
    forced = {}
    for name, value in spec.items():
        forced[name] = graph.domain(name).coerce(value)
    for name in exogenous_values:
        if name not in graph:
            raise UndeclaredVariableError(name)
        if name in graph.equations:
            raise InterventionError("'%s' is endogenous; force it with an "
                                    "intervention instead" % name)
    missing = [n for n in graph.exogenous
               if n not in exogenous_values and n not in forced]
    if missing:
        raise MissingExogenousError(missing)
    values: Dict[str, Value] = {}
    for name in graph.order:
        domain = graph.variables[name].domain
        if name in forced:
            values[name] = forced[name]
        elif name in graph.equations:
            result = graph.equations[name](values)
            try:
                values[name] = domain.coerce(result)
            except DomainError as e:
                raise DomainError("equation for '%s': %s" % (name, e)) from e
        else:
            values[name] = domain.coerce(exogenous_values[name])
    return Assignment((n, values[n]) for n in graph.variables)


def evaluate_batch(graph: CausalGraph,
                   contexts: Sequence[Tuple[Mapping,
                                            Optional[InterventionSpec]]]
                   ) -> List[Assignment]:
    """
    Evaluate many (exogenous values, intervention) pairs; output order
    follows input order.
    """
    return [evaluate(graph, exo, spec) for exo, spec in contexts]


def enumerate_worlds(graph: CausalGraph) -> List[Assignment]:
    """
    One evaluated world per combination of exogenous values, in
    lexicographic domain order.

    >>> from causal_probe.generators import rocks_graph
    >>> len(enumerate_worlds(rocks_graph()))
    4
    """
    domains = []
    for name in graph.exogenous:
        domain = graph.domain(name)
        if not domain.is_finite:
            raise EnumerationError("exogenous variable '%s' is real-valued"
                                   % name)
        domains.append(domain.values())
    worlds = []
    for combination in itertools.product(*domains):
        worlds.append(evaluate(graph, dict(zip(graph.exogenous, combination))))
    return worlds


def exogenous_contexts(graph: CausalGraph, exclude: Iterable[str] = ()
                       ) -> List[Dict[str, Value]]:
    """
    Every combination of values of the finite exogenous variables not in
    `exclude`, in lexicographic domain order.
    """
    exclude = set(exclude)
    names = [n for n in graph.exogenous if n not in exclude]
    domains = []
    for name in names:
        if not graph.domain(name).is_finite:
            raise EnumerationError("exogenous variable '%s' is real-valued"
                                   % name)
        domains.append(graph.domain(name).values())
    return [dict(zip(names, combo)) for combo in itertools.product(*domains)]


def graph_from_dict(data: Mapping, source: str = "<scenario>"
                    ) -> CausalGraph:
    """
    Build a graph from the JSON scenario structure
    {"variables": [...], "equations": [...]}.
    """
    try:
        raw_variables = data["variables"]
        raw_equations = data.get("equations", [])
    except (KeyError, TypeError, AttributeError):
        raise ValidationError("%s: expected an object with 'variables' and "
                              "'equations'" % source) from None
    variables = []
    for i, entry in enumerate(raw_variables):
        try:
            variables.append(Variable(entry["name"],
                                      Domain.from_json(entry["domain"])))
        except (KeyError, TypeError) as e:
            raise ValidationError("%s: /variables/%d: missing %s"
                                  % (source, i, e)) from None
        except ValidationError as e:
            raise ValidationError("%s: /variables/%d: %s"
                                  % (source, i, e)) from e
    equations = []
    for i, entry in enumerate(raw_equations):
        try:
            equations.append(expressions.parse_equation(entry["expr"],
                                                        entry["target"]))
        except (KeyError, TypeError) as e:
            raise ValidationError("%s: /equations/%d: missing %s"
                                  % (source, i, e)) from None
        except ValidationError as e:
            raise ValidationError("%s: /equations/%d/expr: %s"
                                  % (source, i, e)) from e
    try:
        return build_graph(variables, equations)
    except ValidationError as e:
        raise ValidationError("%s: %s" % (source, e)) from e


def graph_to_dict(graph: CausalGraph) -> Dict[str, Any]:
    return {
        "variables": [{"name": v.name, "domain": v.domain.to_json()}
                      for v in graph.variables.values()],
        "equations": [{"target": t, "expr": str(e)}
                      for t, e in graph.equations.items()],
    }


def load_scenario(path: Union[str, Path]) -> Tuple[CausalGraph,
                                                   Dict[str, Value]]:
    """
    Read a scenario file.

    Returns:
    The graph and the scenario's optional default context (the
    "context" object of exogenous values, empty when absent).
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError("%s:%d:%d: %s" % (path, e.lineno, e.colno,
                                                e.msg)) from None
    except UnicodeDecodeError as e:
        raise ValidationError("%s: not UTF-8 (byte %d)" % (path, e.start)
                              ) from None
    except OSError as e:
        raise ValidationError("%s: %s" % (path, e.strerror)) from None
    graph = graph_from_dict(data, str(path))
    context = dict(data.get("context", {}))
    logger.info("loaded scenario %s (%d variables)", path, len(graph))
    return graph, context


def save_scenario(graph: CausalGraph, path: Union[str, Path],
                  context: Optional[Mapping] = None) -> None:
    data = graph_to_dict(graph)
    if context:
        data["context"] = {k: v for k, v in context.items()}
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
