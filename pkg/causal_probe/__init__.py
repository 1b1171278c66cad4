from .errors import CausalProbeError, RuntimeLimitError, ValidationError
from .scm import (Assignment, CausalGraph, Domain, InterventionSpec, Variable,
                  build_graph, evaluate, load_scenario)
from .expressions import parse_equation
from .networks import (Dataset, FeatureDictionary, Layer, NeuralNetwork,
                       backward, compile_to_graph, forward)
from .interventions import (AblationKind, Estimator, TargetMetric,
                            attribution_patching, effect_table,
                            indirect_effect_exact, integrated_gradients_ie)
from .counterfactuals import (Event, causal_dependence, detect_preemption,
                              find_minimal_ablation_sets, graph_problem,
                              network_problem)
from .transitivity import (TransitivityWitness, check_halpern_conditions,
                           find_transitivity_witness, is_causal_bottleneck)
from .circuits import (Circuit, circuit_faithfulness, discover_circuit,
                       discover_with_set_search, expand_local_dependencies)
from .export import export_circuit


def test():
    import doctest
    from . import (activations, counterfactuals, export, expressions,
                   generators, interventions, networks, scm, seeds,
                   transitivity)
    failed = 0
    for module in (activations, expressions, scm, seeds, networks,
                   generators, interventions, counterfactuals, transitivity,
                   export):
        failed += doctest.testmod(module).failed
    return failed
