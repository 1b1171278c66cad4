import itertools
import numpy as np
import pytest
from scipy.special import expit
from causal_probe.counterfactuals import (AblationProblem, Event,
                                          bidirectional_test, causal_chain,
                                          causal_dependence, causal_influence,
                                          default_alternate,
                                          detect_preemption,
                                          find_minimal_ablation_sets,
                                          graph_problem, injection_range,
                                          network_problem,
                                          positive_negative_counterfactual,
                                          subset_count)
from causal_probe.errors import (InterventionError, SearchCapExceededError,
                                 SearchClampWarning, ShapeMismatchError,
                                 ValidationError)
from causal_probe.expressions import parse_equation
from causal_probe.generators import (hiker_graph, make_nontransitive_net,
                                     make_overdetermined_net,
                                     make_preemption_net, rocks_graph,
                                     scenario)
from causal_probe.interventions import TargetMetric
from causal_probe.scm import (Domain, InterventionSpec, Variable, build_graph,
                              evaluate)

PREEMPTION_CANDIDATES = ["A1", "A2", "SH", "BT", "S", "BH"]


def doubling_graph():
    return build_graph([Variable("X", Domain.interval()),
                        Variable("Y", Domain.interval())],
                       [parse_equation("2*X", "Y")])


def test_hiker_dependence_is_not_transitive():
    graph, context = scenario("hiker")
    assert causal_dependence(graph, context, Event("B", True),
                             Event("C", True)).holds
    assert causal_dependence(graph, context, Event("A", True),
                             Event("B", True)).holds
    verdict = causal_dependence(graph, context, Event("A", True),
                                Event("C", True))
    assert verdict.condition_i
    assert not verdict.condition_ii
    assert not verdict.holds
    assert verdict.effect_delta == 0.0


def test_cause_must_hold_in_the_factual_world():
    graph, context = scenario("hiker")
    with pytest.raises(InterventionError):
        causal_dependence(graph, context, Event("B", False), Event("C", True))


def test_real_valued_dependence():
    graph = doubling_graph()
    verdict = causal_dependence(graph, {"X": 1.0}, Event("X", 1.0),
                                Event.threshold("Y", ">", 1.0))
    assert verdict.holds
    assert verdict.effect_delta == -2.0
    small = causal_dependence(graph, {"X": 1.0}, Event("X", 1.0),
                              Event.threshold("Y", ">", 1.0), epsilon=5.0,
                              alternate=0.5)
    assert small.effect_delta == -1.0
    assert not small.condition_ii


def test_event_checks():
    with pytest.raises(ValidationError):
        Event("y", op="!=", bound=1.0)
    with pytest.raises(ValidationError):
        Event.threshold("y", ">", float("nan"))
    with pytest.raises(ValidationError):
        Event("y")
    assert repr(Event("C", False)) == "C=0"


def test_default_alternates():
    graph = build_graph([Variable("L", Domain.labels(["red", "green"]))], [])
    with pytest.raises(InterventionError):
        default_alternate(graph, "L", "red")
    assert default_alternate(graph, "L", "red", {"L": "green"}) == "green"
    with pytest.raises(InterventionError):
        default_alternate(graph, "L", "red", {"L": "red"})
    assert default_alternate(doubling_graph(), "X", 3.0) == 0.0
    assert default_alternate(hiker_graph(), "A", True) is False


def test_causal_chain():
    graph, context = scenario("hiker")
    chain = causal_chain(graph, context, Event("A", True), Event("C", True))
    assert [repr(e) for e in chain] == ["A=1", "B=1", "C=1"]
    rocks, rocks_context = scenario("rocks")
    assert causal_chain(rocks, rocks_context, Event("A1", True),
                        Event("B", True)) is None
    with pytest.raises(ValidationError):
        causal_chain(graph, context, Event("A", True), Event("A", True))


def test_causal_influence():
    graph, context = scenario("hiker")
    report = causal_influence(graph, context, "B", "C")
    assert report.holds
    assert report.outcomes == ((False, False), (True, True))
    assert not causal_influence(graph, context, "A", "C").holds
    with pytest.raises(ValidationError):
        causal_influence(doubling_graph(), {"X": 1.0}, "X", "Y")
    assert causal_influence(doubling_graph(), {"X": 1.0}, "X", "Y",
                            [0.0, 1.0]).distinct_effects == [0.0, 2.0]


def test_rocks_need_a_joint_ablation():
    graph, context = scenario("rocks")
    problem = graph_problem(graph, context, ["A1", "A2"], "B")
    report = find_minimal_ablation_sets(problem, 0.5, k_max=2)
    assert report.singleton_effects == {"A1": 0.0, "A2": 0.0}
    assert report.sets() == [frozenset({"A1", "A2"})]
    assert report.minimal_sets[0].effect_delta == -1.0


def test_greedy_search_on_the_rocks():
    graph, context = scenario("rocks")
    problem = graph_problem(graph, context, ["A1", "A2"], "B")
    report = find_minimal_ablation_sets(problem, 0.5, 2, "greedy")
    assert report.search_mode == "greedy"
    assert report.minimal_sets[0].members == ("A1", "A2")


def test_suzy_sets_and_rounds():
    graph, context = scenario("suzy")
    candidates = ["A1", "A2", "SH", "BH"]
    report = find_minimal_ablation_sets(
        graph_problem(graph, context, candidates, "B"), 0.5, 2)
    assert report.sets() == [frozenset({"A1", "A2"}),
                             frozenset({"A2", "SH"})]
    rounds = detect_preemption(graph_problem(graph, context, candidates, "B"),
                               0.5)
    assert rounds.discovered() == [()]
    assert rounds.fixpoint


def test_overdetermined_network_sets():
    network, dataset = make_overdetermined_net()
    problem = network_problem(network, dataset.inputs[0])
    assert problem.candidates == ("A1", "A2", "B")
    report = find_minimal_ablation_sets(problem, 0.1, 2)
    assert report.sets() == [frozenset({"B"}), frozenset({"A1", "A2"})]
    assert report.singleton_effects["A1"] == pytest.approx(
        expit(3.0) - expit(9.0), abs=1e-12)
    assert report.minimal_sets[1].effect_delta == pytest.approx(
        expit(-3.0) - expit(9.0), abs=1e-12)
    assert report.evaluated == problem.evaluations


def test_preemption_rounds():
    network, dataset = make_preemption_net()
    problem = network_problem(network, dataset.inputs[0],
                              PREEMPTION_CANDIDATES)
    report = detect_preemption(problem, 0.4)
    assert report.discovered() == [("A1", "SH", "S"), ("A2", "BT", "BH"), ()]
    assert report.fixpoint
    first = report.rounds[0].effects
    assert (first["A1"], first["SH"], first["S"]) == (-0.5, -0.5, -1.0)
    assert all(report.rounds[1].effects[n] == -0.5
               for n in ("A2", "BT", "BH"))
    assert report.unablated_effects == {"A2": 0.0, "BT": 0.0, "BH": 0.0}
    assert report.round_of("BT") == 2
    assert report.round_of("y") is None
    assert report.to_dict()["rounds"][1]["ablated"] == ["A1", "SH", "S"]


def test_preemption_round_limit():
    network, dataset = make_preemption_net()
    problem = network_problem(network, dataset.inputs[0],
                              PREEMPTION_CANDIDATES)
    report = detect_preemption(problem, 0.4, max_rounds=1)
    assert report.discovered() == [("A1", "SH", "S")]
    assert not report.fixpoint
    with pytest.raises(ValidationError):
        detect_preemption(problem, 0.4, max_rounds=0)


def test_search_limits():
    names = ["n%d" % i for i in range(25)]
    problem = AblationProblem(names, lambda ablated: 0.0)
    with pytest.raises(SearchCapExceededError):
        find_minimal_ablation_sets(problem, 0.1, k_max=25)
    graph, context = scenario("rocks")
    rocks = graph_problem(graph, context, ["A1", "A2"], "B")
    with pytest.warns(SearchClampWarning):
        report = find_minimal_ablation_sets(rocks, 0.5, k_max=5)
    assert report.k_max == 2
    with pytest.raises(ValidationError):
        find_minimal_ablation_sets(rocks, 0.5, k_max=0)
    with pytest.raises(ValidationError):
        find_minimal_ablation_sets(rocks, 0.5, mode="random")
    with pytest.raises(ValidationError):
        AblationProblem([], lambda ablated: 0.0)
    with pytest.raises(ValidationError):
        AblationProblem(["a", "a"], lambda ablated: 0.0)
    assert subset_count(20, 20) == 2**20 - 1


def random_boolean_scm(rng, size=8, roots=3):
    names = ["V%d" % i for i in range(size)]
    equations = []
    for i in range(roots, size):
        parents = rng.choice(i, size=min(i, int(rng.integers(1, 3))),
                             replace=False)
        terms = [names[p] if rng.random() < 0.6 else "not(%s)" % names[p]
                 for p in parents]
        if len(terms) == 1:
            text = terms[0]
        else:
            text = "%s(%s)" % (rng.choice(["and", "or"]), ", ".join(terms))
        equations.append(parse_equation(text, names[i]))
    graph = build_graph([Variable(n, Domain.boolean()) for n in names],
                        equations)
    context = {n: bool(rng.integers(2)) for n in names[:roots]}
    return graph, context


@pytest.mark.parametrize("seed", range(50))
def test_set_search_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    graph, context = random_boolean_scm(rng)
    effect = graph.endogenous[-1]
    candidates = [n for n in graph.variables if n != effect]
    factual = evaluate(graph, context)
    base = float(factual[effect])

    def delta(subset):
        spec = InterventionSpec({c: not factual[c] for c in subset})
        return float(evaluate(graph, context, spec)[effect]) - base

    significant = [frozenset(s) for k in range(1, 4)
                   for s in itertools.combinations(candidates, k)
                   if abs(delta(s)) > 0.5]
    minimal = {s for s in significant
               if not any(t < s for t in significant)}
    report = find_minimal_ablation_sets(
        graph_problem(graph, context, candidates, effect), 0.5, 3)
    assert set(report.sets()) == minimal
    sizes = [len(s.members) for s in report.minimal_sets]
    assert sizes == sorted(sizes)


def test_bidirectional_patching():
    network, _ = make_nontransitive_net()
    metric = TargetMetric.node_activation("y", 1.0)
    result = bidirectional_test(network, [1.0], [0.0], "B", metric)
    assert (result.noising_delta, result.denoising_delta) == (-1.0, 0.0)
    assert result.causal
    assert not bidirectional_test(network, [1.0], [0.0], "A", metric).causal
    with pytest.raises(ShapeMismatchError):
        bidirectional_test(network, [1.0], [0.0, 1.0], "B", metric)


def test_injection_range():
    network, _ = make_overdetermined_net()
    lo, hi = injection_range(network, "B", [[1.0, 1.0], [0.0, 0.0]])
    assert lo == pytest.approx(expit(-3.0) - 2.0)
    assert hi == pytest.approx(expit(9.0) + 2.0)


def test_positive_counterfactual_reveals_the_silent_backup():
    network, dataset = make_preemption_net()
    metric = TargetMetric.node_activation("y", 1.0)
    result = positive_negative_counterfactual(network, dataset.inputs[0],
                                              "BH", 1.0, metric,
                                              epsilon=0.4)
    assert result.ablation_delta == 0.0
    assert result.injection_delta == 0.5
    assert result.candidate
    with pytest.raises(InterventionError):
        positive_negative_counterfactual(network, dataset.inputs[0], "BH",
                                         5.0, metric)


def test_negative_counterfactual_on_the_saturating_unit():
    network, dataset = make_overdetermined_net()
    metric = TargetMetric.node_activation("y", 1.0)
    result = positive_negative_counterfactual(network, dataset.inputs[0],
                                              "B", 0.5, metric)
    assert result.ablation_delta == pytest.approx(-expit(9.0), abs=1e-12)
    assert result.injection_delta == pytest.approx(0.5 - expit(9.0),
                                                   abs=1e-12)
