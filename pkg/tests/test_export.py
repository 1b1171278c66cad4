import pytest
from matplotlib import colormaps
from matplotlib.colors import to_hex
from causal_probe.circuits import (Circuit, discover_circuit,
                                   discover_with_set_search,
                                   expand_local_dependencies)
from causal_probe.errors import ValidationError
from causal_probe.export import (circuit_from_json, circuit_to_dot,
                                 circuit_to_json, effect_colour,
                                 export_circuit, load_circuit, save_circuit)
from causal_probe.generators import (make_nontransitive_net,
                                     make_overdetermined_net,
                                     make_preemption_net)
from causal_probe.interventions import TargetMetric

RAISED = TargetMetric.node_activation("y", 1.0)


@pytest.fixture
def set_circuit():
    network, dataset = make_overdetermined_net()
    return discover_with_set_search(network, dataset, RAISED, k_max=2)


def node_line(dot, name):
    return next(line for line in dot.splitlines()
                if line.strip().startswith('"%s" [' % name))


def test_json_load_dump_is_byte_identical(set_circuit):
    text = circuit_to_json(set_circuit)
    assert text.endswith("}\n")
    assert circuit_to_json(circuit_from_json(text)) == text
    assert circuit_from_json(text) == set_circuit


def test_negative_scores_are_red(set_circuit):
    dot = circuit_to_dot(set_circuit)
    darkest_red = to_hex(colormaps["Reds"](0.9))
    assert 'fillcolor="%s"' % darkest_red in node_line(dot, "B")
    assert effect_colour(0.5, 1.0) == to_hex(colormaps["Blues"](0.55))
    assert effect_colour(3.0, 0.0) == to_hex(colormaps["Blues"](0.2))


def test_provenance_styles(set_circuit):
    dot = circuit_to_dot(set_circuit)
    assert 'style="rounded,filled,dashed"' in node_line(dot, "A1")
    assert 'tooltip="set {A1, A2}"' in node_line(dot, "A1")
    assert 'style="rounded,filled"' in node_line(dot, "B")
    network, dataset = make_nontransitive_net()
    expanded = expand_local_dependencies(
        network, discover_circuit(network, dataset, RAISED), "B", dataset)
    dot = circuit_to_dot(expanded)
    assert 'style="rounded,filled,dotted"' in node_line(dot, "A")
    assert 'tooltip="expanded from B"' in node_line(dot, "A")
    network, dataset = make_preemption_net()
    preempted = discover_with_set_search(
        network, dataset, RAISED, k_max=1, preemption_rounds=3,
        candidates=["A1", "A2", "SH", "BT", "S", "BH"])
    dot = circuit_to_dot(preempted)
    assert 'style="rounded,filled,bold"' in node_line(dot, "BH")
    assert 'tooltip="preempted, round 2"' in node_line(dot, "BH")


def test_edges_are_drawn(set_circuit):
    dot = circuit_to_dot(set_circuit)
    assert dot.count(" -> ") == 5
    assert '"B" -> "y"' in dot


def test_empty_circuit_is_a_valid_digraph():
    dot = circuit_to_dot(Circuit((), (), RAISED))
    assert dot.startswith("digraph circuit {\n")
    assert dot.endswith("}\n")
    assert "->" not in dot
    assert dot.count("{") == dot.count("}")


def test_export_formats(set_circuit):
    assert export_circuit(set_circuit, "dot") == circuit_to_dot(set_circuit)
    assert export_circuit(set_circuit) == circuit_to_json(set_circuit)
    with pytest.raises(ValidationError):
        export_circuit(set_circuit, "svg")


def test_save_and_load(set_circuit, tmp_path):
    written = save_circuit(set_circuit, tmp_path / "out" / "circuit")
    assert sorted(p.name for p in written) == [
        "circuit.dot", "circuit.json", "circuit_edges.csv",
        "circuit_nodes.csv"]
    assert load_circuit(tmp_path / "out" / "circuit.json") == set_circuit
    nodes_csv = (tmp_path / "out" / "circuit_nodes.csv").read_text()
    assert nodes_csv.splitlines()[0] == "node,score,provenance,annotation"


def test_load_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{\n  \"nodes\": [\n")
    with pytest.raises(ValidationError) as caught:
        load_circuit(broken)
    assert "broken.json" in str(caught.value)
    with pytest.raises(ValidationError):
        load_circuit(tmp_path / "missing.json")
