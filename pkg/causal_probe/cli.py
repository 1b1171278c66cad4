"""
cli.py

The causalprobe command line: every analysis of the package bound to
scenario, network, dataset and circuit files.

Exit codes: 0 when the analysis completed (whatever its verdict),
1 for usage and validation errors, 2 for runtime caps and numeric
failures.
"""
import argparse
import json
import logging
import os
import sys
import pandas as pd
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from tabulate import tabulate
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple
from . import circuits, counterfactuals, export, generators, transitivity
from .errors import (RuntimeLimitError, UndefinedMetricError,
                     UnknownGeneratorError, ValidationError)
from .expressions import Value
from .interventions import (AblationKind, Estimator, TargetMetric,
                            compare_estimators)
from .networks import (Dataset, NeuralNetwork, compile_to_graph, init_network,
                       load_dataset, load_network, read_json, save_dataset,
                       save_network)
from .scm import (CausalGraph, InterventionSpec, evaluate, graph_from_dict,
                  save_scenario)
from .seeds import materialize_seed
from .training import train

logger = logging.getLogger(__name__)

PROG = "causalprobe"
FORMATS = ("text", "json", "csv", "dot")

_GREEN, _RED, _RESET = "\033[32m", "\033[31m", "\033[0m"


@dataclass(frozen=True)
class RunConfig:
    """
    The fully resolved parameters of one run, embedded in its report.
    """
    command: str
    inputs: Tuple[str, ...]
    seed: int
    format: str = "text"
    output: Optional[str] = None
    node_threshold: Optional[float] = None
    edge_threshold: Optional[float] = None
    epsilon: Optional[float] = None
    estimator: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict, hash=False)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["inputs"] = list(self.inputs)
        return data


class _Parser(argparse.ArgumentParser):

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def use_colour(stream: TextIO) -> bool:
    """
    CAUSALPROBE_COLOR=always|never|auto, then NO_COLOR, then whether the
    stream is a terminal.
    """
    setting = os.environ.get("CAUSALPROBE_COLOR", "auto").lower()
    if setting == "always":
        return True
    if setting == "never" or "NO_COLOR" in os.environ:
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _verdict(holds: bool, stream: Optional[TextIO] = None) -> str:
    text = "holds" if holds else "fails"
    if use_colour(sys.stdout if stream is None else stream):
        return (_GREEN if holds else _RED) + text + _RESET
    return text


def _show(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    return str(value)


def _literal(text: str) -> Value:
    lowered = text.strip().lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text.strip()


def _assignments(items: Optional[Sequence[str]]) -> Dict[str, Value]:
    values: Dict[str, Value] = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ValidationError("expected NAME=VALUE, got '%s'" % item)
        values[name.strip()] = _literal(value)
    return values


def _coerced(graph: CausalGraph, values: Dict[str, Value]
             ) -> Dict[str, Value]:
    return {name: graph.domain(name).coerce(v) for name, v in values.items()}


def _vector(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError("expected comma-separated numbers, got '%s'"
                              % text) from None


def _names(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [n.strip() for n in text.split(",") if n.strip()]


def _event(graph: CausalGraph, text: str,
           factual: Dict[str, Value]) -> counterfactuals.Event:
    """
    NAME (its factual value), NAME=VALUE, or NAME<op>BOUND for reals.
    """
    for op in (">=", "<=", ">", "<"):
        name, sep, bound = text.partition(op)
        if sep:
            graph.variable(name.strip())
            try:
                limit = float(bound)
            except ValueError:
                raise ValidationError("bad bound in event '%s'" % text
                                      ) from None
            return counterfactuals.Event.threshold(name.strip(), op, limit)
    name, sep, value = text.partition("=")
    name = name.strip()
    graph.variable(name)
    if not sep:
        return counterfactuals.Event(name, factual[name])
    return counterfactuals.Event(name, graph.domain(name).coerce(
        _literal(value)))


def parse_metric(text: Optional[str], network: NeuralNetwork
                 ) -> TargetMetric:
    """
    'logit:C,I', 'nll:T', 'node:NAME' or 'node:NAME:SIGN'; the default is
    the positive activation of the first output.
    """
    if text is None:
        return TargetMetric.node_activation(network.output_names[0], 1.0)
    kind, _, rest = text.partition(":")
    try:
        if kind == "logit":
            correct, incorrect = rest.split(",")
            metric = TargetMetric.logit_difference(int(correct),
                                                   int(incorrect))
        elif kind == "nll":
            metric = TargetMetric.negative_log_probability(int(rest))
        elif kind == "node":
            node, _, sign = rest.partition(":")
            metric = TargetMetric.node_activation(
                node, float(sign) if sign else -1.0)
        else:
            raise ValidationError("unknown metric '%s'" % text)
    except ValueError:
        raise ValidationError("bad metric '%s'" % text) from None
    metric.validate(network)
    return metric


def _load_model(path: str) -> Tuple[Optional[CausalGraph],
                                    Optional[NeuralNetwork],
                                    Dict[str, Value]]:
    data = read_json(path)
    if isinstance(data, dict) and "layers" in data:
        return None, NeuralNetwork.from_dict(data), {}
    graph = graph_from_dict(data, path)
    return graph, None, dict(data.get("context", {}))


def _network_input(args: argparse.Namespace) -> List[float]:
    if args.input is not None:
        return _vector(args.input)
    if args.dataset is not None:
        dataset = load_dataset(args.dataset)
        if not 0 <= args.index < len(dataset):
            raise ValidationError("--index %d outside a dataset of %d "
                                  "examples" % (args.index, len(dataset)))
        return dataset.inputs[args.index].tolist()
    raise ValidationError("network analyses need --input or --dataset")


def _context(graph: CausalGraph, args: argparse.Namespace,
             default: Dict[str, Value]) -> Dict[str, Value]:
    values = dict(default)
    values.update(_assignments(getattr(args, "set", None)))
    return _coerced(graph, values)


class Report:
    """
    What a subcommand produced: a JSON-able result plus optional text,
    table and DOT renderings.
    """

    def __init__(self, result: Dict[str, Any], text: str = "",
                 table: Optional[List[Dict[str, Any]]] = None,
                 dot: Optional[str] = None) -> None:
        self.result = result
        self.text = text
        self.table = table
        self.dot = dot

    def render(self, config: RunConfig, timestamp: bool) -> str:
        fmt = config.format
        if fmt == "json":
            envelope: Dict[str, Any] = {"config": config.to_dict()}
            if timestamp:
                envelope["timestamp"] = datetime.now(timezone.utc).isoformat()
            envelope["result"] = self.result
            return json.dumps(envelope, indent=2, default=_jsonable) + "\n"
        if fmt == "csv":
            if self.table is None:
                raise ValidationError("%s has no csv output" % config.command)
            return pd.DataFrame(self.table).to_csv(index=False,
                                                   float_format="%.17g")
        if fmt == "dot":
            if self.dot is None:
                raise ValidationError("%s has no dot output" % config.command)
            return self.dot
        return self.text.rstrip("\n") + "\n"


def _jsonable(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    return str(value)


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> Report:
    graph, _, default = _load_model(args.scenario)
    if graph is None:
        raise ValidationError("eval needs a scenario file")
    context = _context(graph, args, default)
    spec = InterventionSpec(_coerced(graph, _assignments(args.do)))
    world = evaluate(graph, context, spec)
    rows = [{"variable": name, "value": _show(world[name]),
             "role": "forced" if name in spec.names() else
             ("exogenous" if name in graph.exogenous else "endogenous")}
            for name in graph.order]
    return Report({"interventions": repr(spec), "world": world.to_dict()},
                  tabulate([[r["variable"], r["value"], r["role"]]
                            for r in rows],
                           headers=["variable", "value", ""]),
                  rows)


def cmd_depend(args: argparse.Namespace, config: RunConfig) -> Report:
    graph, network, default = _load_model(args.scenario)
    if graph is None:
        graph = compile_to_graph(network)
        default = dict(zip(network.input_names, _network_input(args)))
    context = _context(graph, args, default)
    factual = evaluate(graph, context)
    cause = _event(graph, args.cause, factual)
    effect = _event(graph, args.effect, factual)
    alternate = None if args.alternate is None else _literal(args.alternate)
    verdict = counterfactuals.causal_dependence(graph, context, cause, effect,
                                                args.epsilon, alternate)
    text = "\n".join([
        "%r depends on %r: %s" % (effect, cause, _verdict(verdict.holds)),
        "  (i)  effect holds in the actual world: %s"
        % _show(verdict.condition_i),
        "  (ii) effect changes under do(%s=%s): %s"
        % (cause.variable, _show(verdict.alternate),
           _show(verdict.condition_ii)),
    ])
    if args.chain:
        chain = counterfactuals.causal_chain(graph, context, cause, effect,
                                             args.epsilon)
        text += "\nchain: %s" % ("none" if chain is None
                                 else " -> ".join(map(repr, chain)))
    return Report(verdict.to_dict(), text)


def _problem(args: argparse.Namespace) -> counterfactuals.AblationProblem:
    graph, network, default = _load_model(args.model)
    candidates = _names(args.candidates)
    if graph is not None:
        if args.effect is None:
            raise ValidationError("scenario analyses need --effect")
        context = _context(graph, args, default)
        if candidates is None:
            candidates = [v for v in graph.order
                          if v != args.effect
                          and args.effect in graph.descendants(v)]
        return counterfactuals.graph_problem(graph, context, candidates,
                                             args.effect)
    x = _network_input(args)
    metric = parse_metric(args.metric, network)
    return counterfactuals.network_problem(network, x, candidates, metric)


def cmd_overdet(args: argparse.Namespace, config: RunConfig) -> Report:
    problem = _problem(args)
    report = counterfactuals.find_minimal_ablation_sets(
        problem, config.epsilon, args.kmax, args.mode)
    rows = [{"set": "{%s}" % ", ".join(s.members),
             "effect_delta": s.effect_delta} for s in report.minimal_sets]
    singles = tabulate(sorted(report.singleton_effects.items(),
                              key=lambda kv: problem.candidates.index(kv[0])),
                       headers=["candidate", "lone effect"])
    sets = tabulate([[r["set"], r["effect_delta"]] for r in rows],
                    headers=["minimal set", "joint effect"]) if rows \
        else "no set moves the metric by more than %g" % config.epsilon
    return Report(report.to_dict(), singles + "\n\n" + sets, rows)


def cmd_preempt(args: argparse.Namespace, config: RunConfig) -> Report:
    problem = _problem(args)
    report = counterfactuals.detect_preemption(problem, config.epsilon,
                                               args.rounds)
    rows = [{"round": k, "ablated": " ".join(r.ablated),
             "discovered": " ".join(r.discovered)}
            for k, r in enumerate(report.rounds, start=1)]
    text = tabulate([[r["round"], "{%s}" % r["discovered"].replace(" ", ", ")]
                     for r in rows], headers=["round", "discovered"])
    text += "\nfixpoint: %s" % ("yes" if report.fixpoint else "no")
    return Report(report.to_dict(), text, rows)


def cmd_transitivity(args: argparse.Namespace, config: RunConfig) -> Report:
    graph, _, _ = _load_model(args.scenario)
    if graph is None:
        raise ValidationError("transitivity needs a scenario file")
    context = _context(graph, args, {}) if args.set else None
    result: Dict[str, Any] = {}
    lines = []
    witness = None
    if args.witness is not None:
        values = [_literal(v) for v in args.witness.split(",")]
        if len(values) != 6:
            raise ValidationError("a witness has six values a1,a2,b1,b2,c1,c2")
        witness = transitivity.TransitivityWitness(*values)
    elif args.search:
        witness = transitivity.find_transitivity_witness(
            graph, args.a, args.b, args.c, context)
        result["witness_found"] = witness is not None
        lines.append("witness: %s" % ("none" if witness is None
                                      else str(witness)))
    if witness is not None:
        report = transitivity.check_halpern_conditions(
            graph, args.a, args.b, args.c, witness, context)
        result["conditions"] = report.to_dict()
        lines += [report.table(), "verdict: %s" % report.verdict]
    if args.sufficient or witness is None:
        report = transitivity.check_sufficient_conditions(
            graph, args.a, args.b, args.c, context)
        result["sufficient"] = report.to_dict()
        lines += [report.table(), "sufficient conditions: %s"
                  % report.verdict]
    paths = transitivity.enumerate_paths(graph, args.a, args.c)
    result["paths"] = paths
    lines.append("paths %s -> %s: %s" % (args.a, args.c, "; ".join(
        " -> ".join(p) for p in paths) or "none"))
    return Report(result, "\n".join(lines))


def _kind(args: argparse.Namespace, config: RunConfig,
          dataset: Optional[Dataset]) -> AblationKind:
    if args.ablation == "zero":
        return AblationKind.zero()
    if dataset is None:
        raise ValidationError("%s ablation needs a dataset" % args.ablation)
    if args.ablation == "mean":
        return AblationKind.mean(dataset)
    return AblationKind.resample(dataset, config.seed)


def cmd_circuit(args: argparse.Namespace, config: RunConfig) -> Report:
    network = load_network(args.network)
    dataset = load_dataset(args.dataset)
    metric = parse_metric(args.metric, network)
    estimator = Estimator.parse(config.estimator)
    kind = _kind(args, config, dataset)
    if args.set_search or args.preempt_rounds:
        circuit = circuits.discover_with_set_search(
            network, dataset, metric, config.node_threshold,
            args.set_search or 1, config.edge_threshold, estimator, kind,
            args.signed, args.preempt_rounds)
    else:
        circuit = circuits.discover_circuit(
            network, dataset, metric, config.node_threshold,
            config.edge_threshold, estimator, kind, args.signed)
    for anchor in args.expand or ():
        circuit = circuits.expand_local_dependencies(
            network, circuit, anchor, dataset, kind=kind)
    try:
        faithfulness = circuits.circuit_faithfulness(network, circuit,
                                                     dataset, kind=kind)
        summary = "faithfulness: %.4f (raw ratio %.4f)" % (
            faithfulness.retention, faithfulness.raw_ratio)
        faithful: Optional[Dict[str, float]] = faithfulness.to_dict()
    except UndefinedMetricError as e:
        summary = "faithfulness: undefined (%s)" % e
        faithful = None
    if config.output is not None and config.format == "text":
        export.save_circuit(circuit, config.output)
    nodes, _ = circuits.circuit_tables(circuit)
    text = "\n".join([
        tabulate(nodes.values.tolist(), headers=list(nodes.columns)),
        "%d edge(s): %s" % (len(circuit.edges), ", ".join(
            "%s->%s" % pair for pair in circuit.edge_pairs())),
        summary,
    ])
    return Report({"circuit": circuit.to_dict(), "faithfulness": faithful},
                  text, nodes.to_dict("records"),
                  export.circuit_to_dot(circuit))


def cmd_ie_compare(args: argparse.Namespace, config: RunConfig) -> Report:
    network = load_network(args.network)
    x = _network_input(args)
    metric = parse_metric(args.metric, network)
    if args.patch is not None:
        kind = AblationKind.patch(_vector(args.patch))
    else:
        dataset = load_dataset(args.dataset) if args.dataset else None
        kind = _kind(args, config, dataset)
    frame = compare_estimators(network, x, kind, metric, args.steps)
    return Report({"kind": kind.describe(), "metric": metric.describe(),
                   "rows": frame.to_dict("records")},
                  tabulate(frame.values.tolist(), headers=list(frame.columns),
                           floatfmt=".6g"),
                  frame.to_dict("records"))


def cmd_gen(args: argparse.Namespace, config: RunConfig) -> Report:
    if args.name not in generators.GENERATORS:
        raise UnknownGeneratorError(args.name, generators.GENERATORS)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    if args.name in generators.SCENARIOS:
        graph, context = generators.scenario(args.name)
        path = out / ("%s.json" % args.name)
        save_scenario(graph, path, context)
        written.append(path)
    elif args.name == "succession":
        dataset = generators.make_succession_task(config.seed)
        path = out / "succession_data.json"
        save_dataset(dataset, path)
        written.append(path)
        if args.train_steps > 0:
            widths = [dataset.width, args.hidden,
                      generators.SUCCESSION_DIGITS]
            network = init_network(widths, ["relu", "identity"], config.seed,
                                   generators.succession_names(args.hidden))
            result = train(network, dataset, args.train_steps,
                           args.learning_rate, config.seed)
            path = out / "succession_net.json"
            save_network(result.network, path)
            written.append(path)
    else:
        network, dataset = generators.toy_network(args.name)
        for path, save, item in (
                (out / ("%s_net.json" % args.name), save_network, network),
                (out / ("%s_data.json" % args.name), save_dataset, dataset)):
            save(item, path)
            written.append(path)
    logger.info("wrote %s", ", ".join(map(str, written)))
    return Report({"generator": args.name, "files": [str(p) for p in written]},
                  "\n".join(str(p) for p in written))


class _Verbatim(Report):

    def __init__(self, text: str) -> None:
        super().__init__({}, text)

    def render(self, config: RunConfig, timestamp: bool) -> str:
        return self.text


def cmd_export(args: argparse.Namespace, config: RunConfig) -> Report:
    circuit = export.load_circuit(args.circuit)
    if config.format == "json":
        return _Verbatim(export.circuit_to_json(circuit))
    nodes, _ = circuits.circuit_tables(circuit)
    return Report(circuit.to_dict(),
                  tabulate(nodes.values.tolist(), headers=list(nodes.columns)),
                  nodes.to_dict("records"), export.circuit_to_dot(circuit))


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], Report]] = {
    "eval": cmd_eval,
    "depend": cmd_depend,
    "overdet": cmd_overdet,
    "preempt": cmd_preempt,
    "transitivity": cmd_transitivity,
    "circuit": cmd_circuit,
    "ie-compare": cmd_ie_compare,
    "gen": cmd_gen,
    "export": cmd_export,
}


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true",
                        help="log at DEBUG level")
    common.add_argument("-q", "--quiet", action="store_true",
                        help="log warnings only")
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--out", help="write the output here instead of "
                                      "stdout (circuit: file stem)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--no-timestamp", action="store_true",
                        help="leave the timestamp out of JSON reports")
    return common


def _network_inputs(parser: argparse.ArgumentParser,
                    metric: bool = True) -> None:
    parser.add_argument("--input", help="comma-separated input vector")
    parser.add_argument("--dataset", help="dataset file; --index selects "
                                          "the example")
    parser.add_argument("--index", type=int, default=0)
    if metric:
        parser.add_argument("--metric", help="logit:C,I | nll:T | "
                                             "node:NAME[:SIGN]")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog=PROG, description="Counterfactual causal analysis "
                     "of structural causal models and small networks.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("eval", parents=[common],
                       help="evaluate a scenario")
    p.add_argument("scenario")
    p.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="exogenous value, over the scenario context")
    p.add_argument("--do", action="append", metavar="NAME=VALUE",
                   help="intervention")

    p = sub.add_parser("depend", parents=[common],
                       help="counterfactual dependence of two events")
    p.add_argument("scenario", help="scenario or network file")
    p.add_argument("--cause", required=True, help="NAME or NAME=VALUE")
    p.add_argument("--effect", required=True,
                   help="NAME, NAME=VALUE or NAME>BOUND")
    p.add_argument("--alternate", help="value the cause is forced to")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--chain", action="store_true",
                   help="also search a stepwise dependence chain")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    _network_inputs(p, metric=False)

    for name, help_text in (("overdet", "minimal ablation sets"),
                            ("preempt", "preemption rounds")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("model", help="scenario or network file")
        p.add_argument("--effect", help="effect variable (scenarios)")
        p.add_argument("--candidates", help="comma-separated names")
        p.add_argument("--epsilon", type=float,
                       default=counterfactuals.DEFAULT_EPSILON)
        p.add_argument("--set", action="append", metavar="NAME=VALUE")
        _network_inputs(p)
        if name == "overdet":
            p.add_argument("--kmax", type=int, default=2)
            p.add_argument("--mode", choices=("exhaustive", "greedy"),
                           default="exhaustive")
        else:
            p.add_argument("--rounds", type=int, default=5)

    p = sub.add_parser("transitivity", parents=[common],
                       help="transitivity conditions for A -> B -> C")
    p.add_argument("scenario")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--witness", help="a1,a2,b1,b2,c1,c2")
    p.add_argument("--search", action="store_true",
                   help="search for a witness")
    p.add_argument("--sufficient", action="store_true",
                   help="check surjectivity and the bottleneck")
    p.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="fix a context (default: every context)")

    for name, help_text in (("circuit", "discover a circuit"),
                            ("ie-compare", "exact, linear and integrated-"
                                           "gradients effects per node")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("network")
        p.add_argument("--ablation", choices=("zero", "mean", "resample"),
                       default="zero")
        if name == "circuit":
            p.add_argument("dataset")
            p.add_argument("--metric", help="logit:C,I | nll:T | "
                                            "node:NAME[:SIGN]")
            p.add_argument("--tn", type=float,
                           default=circuits.NODE_THRESHOLD)
            p.add_argument("--te", type=float,
                           default=circuits.EDGE_THRESHOLD)
            p.add_argument("--estimator", default="exact",
                           help="exact | linear | ig[:STEPS]")
            p.add_argument("--expand", action="append", metavar="ANCHOR")
            p.add_argument("--set-search", type=int, default=0,
                           metavar="K")
            p.add_argument("--preempt-rounds", type=int, default=0)
            p.add_argument("--signed", action="store_true")
        else:
            _network_inputs(p)
            p.add_argument("--patch", help="patch input vector")
            p.add_argument("--steps", type=int, default=64)

    p = sub.add_parser("gen", parents=[common],
                       help="write a toy model or scenario")
    p.add_argument("name")
    p.add_argument("outdir")
    p.add_argument("--train-steps", type=int, default=4000)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--hidden", type=int, default=32)

    p = sub.add_parser("export", parents=[common],
                       help="convert a circuit file")
    p.add_argument("circuit")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    inputs = tuple(str(getattr(args, k)) for k in (
        "scenario", "model", "network", "dataset", "circuit", "name")
        if getattr(args, k, None) is not None)
    skip = {"command", "verbose", "quiet", "format", "out", "seed",
            "no_timestamp", "scenario", "model", "network", "dataset",
            "circuit", "name", "tn", "te", "epsilon", "estimator"}
    options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return RunConfig(
        command=args.command, inputs=inputs,
        seed=materialize_seed(args.seed), format=args.format,
        output=args.out, node_threshold=getattr(args, "tn", None),
        edge_threshold=getattr(args, "te", None),
        epsilon=getattr(args, "epsilon", None),
        estimator=getattr(args, "estimator", None), options=options)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else (
        logging.WARNING if args.quiet else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: "
                                            "%(message)s")
    try:
        config = resolve_config(args)
        logger.debug("config %s", config)
        report = COMMANDS[args.command](args, config)
        text = report.render(config, not args.no_timestamp)
        if config.output is not None and not (
                args.command == "circuit" and config.format == "text"):
            Path(config.output).write_text(text, encoding="utf-8")
            logger.info("wrote %s", config.output)
        else:
            sys.stdout.write(text)
    except ValidationError as e:
        print("%s: error: %s" % (PROG, e), file=sys.stderr)
        return 1
    except RuntimeLimitError as e:
        print("%s: error: %s" % (PROG, e), file=sys.stderr)
        return 2
    return 0
