import itertools
import numpy as np
import pytest
from scipy.special import expit
from causal_probe.errors import UnknownGeneratorError
from causal_probe.generators import (GENERATORS, NETWORKS, SCENARIOS,
                                     encode_sequence, make_nontransitive_net,
                                     make_overdetermined_net,
                                     make_preemption_net, make_rocks_net,
                                     make_succession_task, scenario,
                                     succession_sequences, toy_network)
from causal_probe.networks import forward
from causal_probe.scm import InterventionSpec, evaluate


def test_overdetermined_net_saturates():
    network, dataset = make_overdetermined_net()
    x = dataset.inputs[0]
    assert forward(network, x)["y"] == pytest.approx(expit(9.0), abs=1e-12)
    assert forward(network, x, {"A1": 0.0})["y"] == pytest.approx(
        expit(3.0), abs=1e-12)
    assert forward(network, x, {"A1": 0.0, "A2": 0.0})["y"] == \
        pytest.approx(expit(-3.0), abs=1e-12)


@pytest.mark.parametrize("strength, restored", [(0.5, 0.5), (1.0, 1.0)])
def test_preemption_net_backup(strength, restored):
    network, dataset = make_preemption_net(strength)
    x = dataset.inputs[0]
    clean = forward(network, x)
    assert clean["y"] == 1.0
    assert clean["BH"] == 0.0
    without_primary = forward(network, x, {"A1": 0.0})
    assert without_primary["BH"] == 1.0
    assert without_primary["y"] == restored
    assert forward(network, x, {"A1": 0.0, "A2": 0.0})["y"] == 0.0


@pytest.mark.parametrize("a1, a2", itertools.product([0.0, 1.0], repeat=2))
def test_rocks_net_is_a_disjunction(a1, a2):
    network, _ = make_rocks_net()
    assert forward(network, [a1, a2])["B"] == float(a1 or a2)


@pytest.mark.parametrize("a, b", itertools.product([0.0, 1.0], repeat=2))
def test_nontransitive_net_computes_not_a_or_b(a, b):
    network, _ = make_nontransitive_net()
    y = forward(network, [a], {"B": b})["y"]
    assert y == float((not a) or b)


def test_nontransitive_output_ignores_its_input():
    network, _ = make_nontransitive_net()
    assert forward(network, [1.0])["y"] == forward(network, [0.0])["y"] == 1.0


def test_succession_task():
    sequences = succession_sequences()
    assert len(sequences) == 84
    assert all(a < b < c < 9 for a, b, c in sequences)
    dataset = make_succession_task(3)
    assert dataset.inputs.shape == (84, 30)
    assert np.all(dataset.inputs.sum(axis=1) == 3)
    for x, label in zip(dataset.inputs, dataset.labels):
        last = int(np.argmax(x[20:]))
        assert label == last + 1
    again = make_succession_task(3)
    assert np.array_equal(again.inputs, dataset.inputs)
    other = make_succession_task(4)
    assert not np.array_equal(other.inputs, dataset.inputs)
    assert sorted(map(tuple, other.inputs)) == sorted(map(tuple,
                                                          dataset.inputs))


def test_encode_sequence():
    assert encode_sequence((0, 5, 9)).nonzero()[0].tolist() == [0, 15, 29]


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenarios_evaluate_in_their_context(name):
    graph, context = scenario(name)
    world = evaluate(graph, context)
    assert all(world[v] in (False, True) for v in graph.variables)


def test_suzy_scenario_preempts_billy():
    graph, context = scenario("suzy")
    world = evaluate(graph, context)
    assert (world["SH"], world["BH"], world["B"]) == (True, False, True)
    without_suzy = evaluate(graph, context, InterventionSpec({"A1": False}))
    assert (without_suzy["BH"], without_suzy["B"]) == (True, True)


def test_generator_names():
    assert set(GENERATORS) == set(NETWORKS) | set(SCENARIOS) | {"succession"}
    for name in NETWORKS:
        network, dataset = toy_network(name)
        assert dataset.width == network.input_width


def test_unknown_generators():
    with pytest.raises(UnknownGeneratorError) as caught:
        toy_network("hydra")
    assert "overdetermined" in str(caught.value)
    with pytest.raises(UnknownGeneratorError):
        scenario("hydra")
