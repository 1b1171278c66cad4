import itertools
import networkx as nx
import pytest
from causal_probe.errors import (EnumerationError, PathOverflowError,
                                 UndeclaredVariableError, UnknownNodeError,
                                 ValidationError)
from causal_probe.expressions import parse_equation
from causal_probe.generators import (billiards_graph, diamond_graph,
                                     hiker_graph)
from causal_probe.scm import Domain, Variable, build_graph
from causal_probe.transitivity import (NOT_ESTABLISHED, TRANSITIVE,
                                       TransitivityWitness,
                                       check_halpern_conditions,
                                       check_sufficient_conditions,
                                       enumerate_paths,
                                       find_transitivity_witness,
                                       is_causal_bottleneck)


def test_billiards_witness():
    graph = billiards_graph()
    witness = find_transitivity_witness(graph, "A", "B", "C")
    assert witness.astuple() == (False, True, False, True, False, True)
    assert str(witness) == "(0, 1, 0, 1, 0, 1)"
    report = check_halpern_conditions(graph, "A", "B", "C", witness)
    assert report.results == [True]*5
    assert report.verdict == TRANSITIVE
    assert report.failing() == []


def test_hiker_has_no_witness():
    graph = hiker_graph()
    assert find_transitivity_witness(graph, "A", "B", "C") is None


def test_a_fixed_context_can_admit_a_witness():
    witness = find_transitivity_witness(hiker_graph(), "A", "B", "C",
                                        context={"A": True})
    assert witness.astuple() == (False, False, False, False, False, True)


def test_hiker_always_fails_the_last_condition():
    graph = hiker_graph()
    first_four = 0
    for values in itertools.product([False, True], repeat=6):
        report = check_halpern_conditions(graph, "A", "B", "C",
                                          TransitivityWitness(*values))
        assert report.verdict == NOT_ESTABLISHED
        if all(report.results[:4]):
            first_four += 1
            assert report.failing() == [5]
    assert first_four > 0


def test_condition_report_output():
    report = check_halpern_conditions(
        hiker_graph(), "A", "B", "C",
        TransitivityWitness(True, False, True, False, True, False))
    assert report.conditions[4][0] == "do(A=0, B=0) => C=0"
    assert "NO" in report.table()
    data = report.to_dict()
    assert data["verdict"] == NOT_ESTABLISHED
    assert data["witness"] == [True, False, True, False, True, False]


def test_witness_values_are_coerced():
    report = check_halpern_conditions(
        billiards_graph(), "A", "B", "C",
        TransitivityWitness(0, 1, 0, 1, 0, 1))
    assert report.verdict == TRANSITIVE
    assert report.witness.a2 is True


def test_sufficient_conditions():
    billiards = check_sufficient_conditions(billiards_graph(), "A", "B", "C")
    assert billiards.verdict == TRANSITIVE
    hiker = check_sufficient_conditions(hiker_graph(), "A", "B", "C")
    assert hiker.results == [True, False]
    diamond = check_sufficient_conditions(diamond_graph(), "A", "B1", "C")
    assert diamond.failing() == [2]


def test_argument_checks():
    graph = hiker_graph()
    with pytest.raises(ValidationError):
        find_transitivity_witness(graph, "A", "A", "C")
    with pytest.raises(UndeclaredVariableError):
        check_sufficient_conditions(graph, "A", "Q", "C")
    real = build_graph([Variable(n, Domain.interval()) for n in "XYZ"],
                       [parse_equation("X", "Y"), parse_equation("Y", "Z")])
    with pytest.raises(EnumerationError):
        find_transitivity_witness(real, "X", "Y", "Z")


def test_enumerate_paths():
    assert enumerate_paths(diamond_graph(), "A", "C") == [
        ["A", "B1", "C"], ["A", "B2", "C"]]
    assert enumerate_paths(hiker_graph(), "A", "C") == [["A", "B", "C"],
                                                        ["A", "C"]]
    assert enumerate_paths(billiards_graph(), "C", "A") == []
    with pytest.raises(PathOverflowError):
        enumerate_paths(diamond_graph(), "A", "C", cap=1)
    with pytest.raises(UnknownNodeError):
        enumerate_paths(diamond_graph(), "A", "Q")
    with pytest.raises(ValidationError):
        enumerate_paths(diamond_graph(), "A", "A")


def test_path_count_in_a_layered_graph():
    layers = [["s"], ["a0", "a1", "a2"], ["b0", "b1", "b2"], ["t"]]
    digraph = nx.DiGraph([(u, v) for upper, lower in zip(layers, layers[1:])
                          for u in upper for v in lower])
    paths = enumerate_paths(digraph, "s", "t")
    assert len(paths) == 9
    assert paths == sorted(paths)


def test_bottleneck():
    assert is_causal_bottleneck(billiards_graph(), "B", "A", "C")
    assert not is_causal_bottleneck(hiker_graph(), "B", "A", "C")
    assert not is_causal_bottleneck(diamond_graph(), "B1", "A", "C")
    assert not is_causal_bottleneck(billiards_graph(), "B", "C", "A")
    with pytest.raises(ValidationError):
        is_causal_bottleneck(billiards_graph(), "B", "B", "C")
