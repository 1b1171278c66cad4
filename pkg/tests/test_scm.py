import math
from pathlib import Path
import pytest
from causal_probe.errors import (CycleError, DomainError,
                                 DuplicateEquationError, EnumerationError,
                                 InterventionError, MissingExogenousError,
                                 TypeMismatchError, UndeclaredVariableError,
                                 ValidationError)
from causal_probe.expressions import parse_equation
from causal_probe.generators import hiker_graph, rocks_graph
from causal_probe.scm import (Domain, InterventionSpec, Variable, build_graph,
                              enumerate_worlds, evaluate, evaluate_batch,
                              exogenous_contexts, graph_from_dict,
                              graph_to_dict, load_scenario, save_scenario)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def booleans(*names):
    return [Variable(n, Domain.boolean()) for n in names]


@pytest.mark.parametrize("domain, raw, expected", [
    (Domain.boolean(), 1, True),
    (Domain.boolean(), 0.0, False),
    (Domain.boolean(), "true", True),
    (Domain.boolean(), "0", False),
    (Domain.labels(["eco", "comfort"]), "comfort", "comfort"),
    (Domain.labels([0, 1, 2]), "2", 2),
    (Domain.interval(0, 1), "0.25", 0.25),
    (Domain.interval(0, 1), True, 1.0),
])
def test_coerce(domain, raw, expected):
    assert domain.coerce(raw) == expected


@pytest.mark.parametrize("domain, raw", [
    (Domain.boolean(), "yes"),
    (Domain.boolean(), 0.5),
    (Domain.labels(["eco", "comfort"]), "hot"),
    (Domain.interval(0, 1), 1.5),
    (Domain.interval(), math.nan),
    (Domain.interval(), "warm"),
])
def test_coerce_rejects(domain, raw):
    with pytest.raises(DomainError):
        domain.coerce(raw)


@pytest.mark.parametrize("build", [
    lambda: Domain.labels([]),
    lambda: Domain.labels(["a", "a"]),
    lambda: Domain.interval(1, 0),
    lambda: Domain("complex"),
])
def test_malformed_domains(build):
    with pytest.raises(DomainError):
        build()


def test_domain_json():
    for domain in (Domain.boolean(), Domain.labels(["x", "y"]),
                   Domain.interval(), Domain.interval(-1, 2)):
        assert Domain.from_json(domain.to_json()) == domain
    assert Domain.interval().to_json() == {"real": ["-inf", "inf"]}


@pytest.mark.parametrize("data", [
    {"real": [0]},
    {"real": [0, 1, 2]},
    {"real": 3},
    {"real": [0, "abc"]},
])
def test_malformed_real_bounds(data):
    with pytest.raises(DomainError):
        Domain.from_json(data)


@pytest.mark.parametrize("name", ["and", "1x", "a-b", ""])
def test_invalid_variable_names(name):
    with pytest.raises(ValidationError):
        Variable(name, Domain.boolean())


def test_topological_order_follows_declaration():
    graph = build_graph(booleans("B2", "B1", "C", "A"),
                        [parse_equation("A", "B1"), parse_equation("A", "B2"),
                         parse_equation("or(B1, B2)", "C")])
    assert graph.order == ("A", "B2", "B1", "C")
    assert graph.exogenous == ("A",)
    assert graph.children("A") == ("B2", "B1")
    assert graph.parents("C") == ("B1", "B2")
    assert graph.ancestors("C") == {"A", "B1", "B2"}


def test_cycle_is_reported():
    with pytest.raises(CycleError) as caught:
        build_graph(booleans("A", "B"),
                    [parse_equation("B", "A"), parse_equation("A", "B")])
    cycle = caught.value.cycle
    assert cycle[0] == cycle[-1]
    assert set(cycle) == {"A", "B"}
    assert str(caught.value).startswith("cycle detected: ")


def test_self_loop_is_a_cycle():
    with pytest.raises(CycleError):
        build_graph(booleans("A"), [parse_equation("not A", "A")])


def test_duplicate_equation():
    with pytest.raises(DuplicateEquationError):
        build_graph(booleans("A", "B"),
                    [parse_equation("A", "B"), parse_equation("not A", "B")])


def test_undeclared_parent():
    with pytest.raises(UndeclaredVariableError) as caught:
        build_graph(booleans("A", "B"), [parse_equation("A and Z", "B")])
    assert caught.value.name == "Z"


def test_equation_type_must_fit_domain():
    variables = [Variable("x", Domain.interval()),
                 Variable("B", Domain.boolean())]
    with pytest.raises(TypeMismatchError):
        build_graph(variables, [parse_equation("x + 1", "B")])
    # booleans are accepted by real variables
    build_graph([Variable("A", Domain.boolean()),
                 Variable("y", Domain.interval())],
                [parse_equation("A", "y")])


def test_evaluate_under_intervention():
    graph = hiker_graph()
    assert evaluate(graph, {"A": True}).to_dict() == {
        "A": True, "B": True, "C": True}
    world = evaluate(graph, {"A": True}, InterventionSpec({"B": False}))
    assert world.to_dict() == {"A": True, "B": False, "C": False}
    forced_exogenous = evaluate(graph, {"A": True},
                                InterventionSpec({"A": False}))
    assert forced_exogenous["C"] is True


def test_evaluate_errors():
    graph = hiker_graph()
    with pytest.raises(MissingExogenousError) as caught:
        evaluate(graph, {})
    assert caught.value.names == ["A"]
    with pytest.raises(InterventionError):
        evaluate(graph, {"A": True, "B": True})
    with pytest.raises(UndeclaredVariableError):
        evaluate(graph, {"A": True, "Q": True})


def test_equation_result_outside_domain():
    graph = build_graph([Variable("x", Domain.interval()),
                         Variable("y", Domain.interval(0, 1))],
                        [parse_equation("x + 1", "y")])
    assert evaluate(graph, {"x": -0.5})["y"] == 0.5
    with pytest.raises(DomainError, match="equation for 'y'"):
        evaluate(graph, {"x": 0.5})


def test_intervention_specs():
    with pytest.raises(InterventionError):
        InterventionSpec([("A", True), ("A", False)])
    left = InterventionSpec({"A": True})
    assert left.combine(InterventionSpec({"B": False})).as_dict() == {
        "A": True, "B": False}
    with pytest.raises(InterventionError):
        left.combine(InterventionSpec({"A": False}))
    assert InterventionSpec({"A": 1, "B": 0}) == InterventionSpec(
        [("B", 0), ("A", 1)])


def test_enumerate_worlds():
    worlds = enumerate_worlds(rocks_graph())
    assert [(w["A1"], w["A2"], w["B"]) for w in worlds] == [
        (False, False, False), (False, True, True),
        (True, False, True), (True, True, True)]
    assert exogenous_contexts(rocks_graph(), exclude=["A1"]) == [
        {"A2": False}, {"A2": True}]


def test_enumeration_needs_finite_domains():
    graph = build_graph([Variable("x", Domain.interval())], [])
    with pytest.raises(EnumerationError):
        enumerate_worlds(graph)


def test_evaluate_batch_keeps_order():
    graph = hiker_graph()
    worlds = evaluate_batch(graph, [({"A": False}, None),
                                    ({"A": True},
                                     InterventionSpec({"B": False}))])
    assert [w["C"] for w in worlds] == [True, False]


def test_thermostat_scenario():
    graph, context = load_scenario(SCENARIOS / "thermostat.json")
    world = evaluate(graph, context)
    assert world["heating"] is True
    assert world["inside"] == 22.5
    eco = evaluate(graph, context, InterventionSpec({"setting": "eco"}))
    assert eco["inside"] == 10.5


@pytest.mark.parametrize("name", ["hiker", "rocks", "billiards", "suzy",
                                  "diamond", "thermostat"])
def test_bundled_scenarios_load(name):
    graph, context = load_scenario(SCENARIOS / ("%s.json" % name))
    evaluate(graph, context)


def test_scenario_file_round_trip(tmp_path):
    path = tmp_path / "hiker.json"
    save_scenario(hiker_graph(), path, {"A": True})
    graph, context = load_scenario(path)
    assert graph_to_dict(graph) == graph_to_dict(hiker_graph())
    assert context == {"A": True}


def test_scenario_errors_name_the_location(tmp_path):
    data = {"variables": [{"name": "A", "domain": "bool"},
                          {"name": "B", "domain": "bool"}],
            "equations": [{"target": "B", "expr": "relu("}]}
    with pytest.raises(ValidationError, match="/equations/0/expr"):
        graph_from_dict(data, "broken.json")
    with pytest.raises(ValidationError, match="/variables/0"):
        graph_from_dict({"variables": [{"name": "A"}]}, "broken.json")
    path = tmp_path / "bad.json"
    path.write_text("{\"variables\": [")
    with pytest.raises(ValidationError, match="bad.json:1:"):
        load_scenario(path)
    path.write_bytes(b"\xff\xfe{}")
    with pytest.raises(ValidationError, match="not UTF-8"):
        load_scenario(path)


def test_graph_table_lists_exogenous():
    assert "(exogenous)" in str(hiker_graph())
