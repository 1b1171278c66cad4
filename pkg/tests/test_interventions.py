import warnings
import numpy as np
import pytest
from scipy.special import expit
from causal_probe.errors import (ShapeMismatchError, UnknownNodeError,
                                 ValidationError, ZeroAblationWarning)
from causal_probe.generators import (make_nontransitive_net,
                                     make_overdetermined_net)
from causal_probe.interventions import (AblationKind, EffectTable, Estimator,
                                        TargetMetric, apply_ablation,
                                        attribution_patching,
                                        compare_estimators, effect_sweep,
                                        effect_table, indirect_effect_exact,
                                        integrated_gradients_ie, mediators,
                                        replacement_values,
                                        warn_zero_ablation)
from causal_probe.networks import (Dataset, FeatureDictionary, Layer,
                                   NeuralNetwork, forward, init_network)

Y = TargetMetric.node_activation("y", 1.0)


def identity_network(rng):
    depth = int(rng.integers(1, 4))
    widths = [int(w) for w in rng.integers(2, 7, depth + 1)]
    return NeuralNetwork([Layer(rng.normal(size=(o, i)), rng.normal(size=o))
                          for i, o in zip(widths[:-1], widths[1:])])


def test_ablation_kind_checks():
    with pytest.raises(ValidationError):
        AblationKind("shuffle")
    with pytest.raises(ValidationError):
        AblationKind("mean")
    with pytest.raises(ValidationError):
        AblationKind.mean(Dataset(np.zeros((0, 2))))
    with pytest.raises(ValidationError):
        AblationKind("patch")
    with pytest.raises(ValidationError):
        AblationKind.inject(np.nan)
    assert AblationKind.resample(Dataset([[1.0]]), 3).describe() == \
        "resample(seed=3)"


@pytest.mark.parametrize("text, method, steps", [
    ("exact", "exact", 64),
    ("linear", "linear", 64),
    ("ig", "ig", 64),
    ("ig:16", "ig", 16),
])
def test_estimator_parse(text, method, steps):
    estimator = Estimator.parse(text)
    assert (estimator.method, estimator.steps) == (method, steps)
    assert Estimator.parse(estimator.spec) == estimator


@pytest.mark.parametrize("text", ["ig:x", "ig:0", "linear:3", "taylor"])
def test_estimator_parse_rejects(text):
    with pytest.raises(ValidationError):
        Estimator.parse(text)


def test_metric_validation():
    network, _ = make_overdetermined_net()
    with pytest.raises(ValidationError):
        TargetMetric.logit_difference(0, 1).validate(network)
    with pytest.raises(ValidationError):
        TargetMetric.negative_log_probability(2).validate(network)
    with pytest.raises(UnknownNodeError):
        TargetMetric.node_activation("Q").validate(network)
    with pytest.raises(ValidationError):
        TargetMetric("accuracy").validate(network)


@pytest.mark.parametrize("metric", [
    TargetMetric.logit_difference(3, 1),
    TargetMetric.negative_log_probability(2),
    TargetMetric.node_activation("h1_0", 1.0),
    TargetMetric.node_activation((1, 2)),
])
def test_metric_description_survives_json(metric):
    assert TargetMetric.from_dict(metric.to_dict()) == metric


def test_metric_values():
    network = NeuralNetwork([Layer(np.eye(3), np.zeros(3))])
    trace = forward(network, [2.0, 0.5, 0.5])
    assert TargetMetric.logit_difference(0, 1).value(trace) == 1.5
    log_p = 2.0 - np.log(np.exp(2.0) + 2*np.exp(0.5))
    assert TargetMetric.negative_log_probability(0).value(trace) == \
        pytest.approx(-log_p)
    assert TargetMetric.node_activation("y2").value(trace) == -0.5


def test_exact_effect_on_the_saturating_unit():
    network, dataset = make_overdetermined_net()
    x = dataset.inputs[0]
    effect = indirect_effect_exact(network, x, "A1", AblationKind.zero(), Y)
    assert effect == pytest.approx(expit(3.0) - expit(9.0), abs=1e-12)
    assert indirect_effect_exact(network, x, "B", AblationKind.zero(), Y) == \
        pytest.approx(-expit(9.0), abs=1e-12)


def test_ablation_is_local():
    network = init_network([3, 4, 4, 2], ["relu", "logistic", "identity"], 8)
    x = np.array([1.0, -0.5, 0.25])
    clean = forward(network, x)
    ablated = apply_ablation(network, x, "h1_2", AblationKind.inject(3.0))
    assert np.array_equal(ablated.post[0], clean.post[0])
    for i in (0, 1, 3):
        assert ablated.post[1][i] == clean.post[1][i]
    assert ablated["h1_2"] == 3.0


def test_replacement_values():
    network, _ = make_nontransitive_net()
    reference = Dataset([[0.0], [1.0]])
    mean = replacement_values(network, [1.0], AblationKind.mean(reference))
    assert mean[1].tolist() == [0.5, 0.5]
    patch = replacement_values(network, [1.0], AblationKind.patch([0.0]))
    assert patch[1].tolist() == [0.0, 1.0]
    with pytest.raises(ShapeMismatchError):
        replacement_values(network, [1.0], AblationKind.patch([0.0, 1.0]))
    first = replacement_values(network, [1.0],
                               AblationKind.resample(reference, 5))
    second = replacement_values(network, [1.0],
                                AblationKind.resample(reference, 5))
    assert all(np.array_equal(a, b) for a, b in zip(first, second))
    with pytest.raises(ShapeMismatchError):
        replacement_values(network, [1.0], AblationKind.mean(
            Dataset([[0.0, 1.0]])))


@pytest.mark.parametrize("seed", range(20))
def test_linear_estimate_is_exact_on_linear_networks(seed):
    rng = np.random.default_rng(seed)
    network = identity_network(rng)
    x = rng.normal(size=network.input_width)
    metric = TargetMetric.logit_difference(0, 1)
    for kind in (AblationKind.zero(),
                 AblationKind.patch(rng.normal(size=network.input_width)),
                 AblationKind.inject(0.7)):
        linear = attribution_patching(network, x, kind, metric)
        exact = effect_table(network, x, kind, metric, Estimator("exact"))
        np.testing.assert_allclose(linear.estimates, exact.estimates,
                                   rtol=0.0, atol=1e-12)


def test_single_step_integrated_gradients_is_linear():
    network, dataset = make_overdetermined_net()
    x = dataset.inputs[0]
    linear = attribution_patching(network, x, AblationKind.zero(), Y)
    ig = integrated_gradients_ie(network, x, AblationKind.zero(), Y, 1)
    np.testing.assert_allclose(ig.estimates, linear.estimates, rtol=0.0,
                               atol=1e-15)
    assert ig.method == "integrated-gradients(1)"


def test_integrated_gradients_error_shrinks_with_steps():
    network, dataset = make_overdetermined_net()
    x = dataset.inputs[0]
    kind = AblationKind.zero()
    exact = effect_table(network, x, kind, Y).estimates
    errors = []
    for steps in (1, 2, 4, 8, 16, 32, 64, 128):
        ig = integrated_gradients_ie(network, x, kind, Y, steps).estimates
        errors.append(float(np.max(np.abs(ig - exact))))
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= coarse + 1e-12
    a1 = ["A1", "A2", "B", "y"].index("A1")
    ig1 = integrated_gradients_ie(network, x, kind, Y, 1).estimates[a1]
    ig64 = integrated_gradients_ie(network, x, kind, Y, 64).estimates[a1]
    assert abs(ig64 - exact[a1]) < abs(ig1 - exact[a1])


def test_linear_sign_matches_exact_on_a_single_path():
    network = NeuralNetwork([Layer([[2.0]], [-1.0], "logistic"),
                             Layer([[3.0]], [0.0], "identity")])
    metric = TargetMetric.node_activation("y0", 1.0)
    for x in (0.5, 1.0, 2.0):
        linear = attribution_patching(network, [x], AblationKind.zero(),
                                      metric)
        exact = effect_table(network, [x], AblationKind.zero(), metric)
        assert np.array_equal(np.sign(linear.estimates),
                              np.sign(exact.estimates))


def test_effect_sweep_averages():
    network, _ = make_nontransitive_net()
    dataset = Dataset([[1.0], [0.0]])
    table = effect_sweep(network, dataset, AblationKind.zero(), Y,
                         nodes=["B"])
    assert table["B"] == -0.5
    assert table.variances.tolist() == [0.25]
    assert "2 examples" in table.context
    with pytest.raises(ValidationError):
        effect_sweep(network, Dataset(np.zeros((0, 1))), AblationKind.zero(),
                     Y)


def test_effect_table_helpers():
    network, dataset = make_overdetermined_net()
    table = effect_table(network, dataset.inputs[0], AblationKind.zero(), Y)
    assert table.nodes == ["A1", "A2", "B", "y"]
    assert table.largest(2) == ["B", "y"]
    assert list(table.to_frame().columns) == ["node", "estimate", "variance",
                                              "method"]
    assert table.to_csv().splitlines()[0] == "node,estimate,variance,method"
    assert table.to_dict()["method"] == "exact"
    with pytest.raises(ValidationError):
        table["Q"]
    assert len(EffectTable(["a"], np.array([1.0]), "exact")) == 1


def test_compare_estimators_columns():
    network, dataset = make_overdetermined_net()
    frame = compare_estimators(network, dataset.inputs[0],
                               AblationKind.zero(), Y, steps=8)
    assert list(frame.columns) == ["node", "exact", "linear",
                                   "integrated-gradients(8)", "linear_error",
                                   "ig_error"]
    row = frame.set_index("node").loc["A1"]
    assert row["ig_error"] < row["linear_error"]


def test_zero_ablation_warning_only_for_raw_neurons():
    network = init_network([2, 2, 1], ["relu", "identity"], 0).with_dictionary(
        FeatureDictionary.identity(1, 2))
    with pytest.warns(ZeroAblationWarning):
        warn_zero_ablation(network, AblationKind.zero(), ["h1_0"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        warn_zero_ablation(network, AblationKind.zero(), ["f1_0", "f1_1"])
        warn_zero_ablation(network, AblationKind.inject(1.0), ["h1_0"])
    assert not [w for w in caught
                if issubclass(w.category, ZeroAblationWarning)]
    assert mediators(network, "features") == ["f1_0", "f1_1"]
    assert "f1_0" not in mediators(network, "neurons")
    with pytest.raises(ValidationError):
        mediators(network, "heads")
