"""
export.py

Circuit files.

JSON: the Circuit.to_dict() layout with sorted keys and a trailing
newline, so that load -> dump reproduces the file byte for byte. The
"format_version" field is checked on load.

DOT: one Graphviz node per circuit node and one edge per circuit edge.
Fill colours encode the score: the "Blues" colormap for scores >= 0 and
"Reds" for negative scores, darker for larger magnitudes relative to the
largest node magnitude in the circuit (edges use the largest edge
magnitude). Node styles encode provenance:

    threshold   rounded,filled
    set         rounded,filled,dashed   (tooltip names the set)
    expansion   rounded,filled,dotted   (tooltip names the anchor)
    preempted   rounded,filled,bold     (tooltip names the round)
"""
import json
import logging
from matplotlib import colormaps
from matplotlib.colors import to_hex
from pathlib import Path
from typing import Iterable, List, Union
from .circuits import (EXPANSION, PREEMPTED, SET, THRESHOLD, Circuit,
                       circuit_tables)
from .errors import ValidationError

logger = logging.getLogger(__name__)

EXPORT_FORMATS = ("dot", "json")

NODE_STYLES = {
    THRESHOLD: "rounded,filled",
    SET: "rounded,filled,dashed",
    EXPANSION: "rounded,filled,dotted",
    PREEMPTED: "rounded,filled,bold",
}

# colormap positions for zero and for the largest magnitude
_LIGHTEST, _DARKEST = 0.2, 0.9


def effect_colour(score: float, scale: float) -> str:
    """
    Hex colour for an effect: blue scale for positive, red scale for
    negative.

    >>> effect_colour(-1.0, 1.0) == effect_colour(-2.0, 2.0)
    True
    """
    cmap = colormaps["Reds" if score < 0 else "Blues"]
    fraction = min(abs(score)/scale, 1.0) if scale > 0 else 0.0
    return to_hex(cmap(_LIGHTEST + (_DARKEST - _LIGHTEST)*fraction))


def _font_colour(score: float, scale: float) -> str:
    fraction = min(abs(score)/scale, 1.0) if scale > 0 else 0.0
    return "white" if fraction > 0.6 else "black"


def _quote(text: str) -> str:
    return '"%s"' % text.replace("\\", "\\\\").replace('"', '\\"')


def _scale(scores: Iterable[float]) -> float:
    return max((abs(s) for s in scores), default=0.0)


def circuit_to_dot(circuit: Circuit) -> str:
    node_scale = _scale(n.score for n in circuit.nodes)
    edge_scale = _scale(e.score for e in circuit.edges)
    lines: List[str] = [
        "digraph circuit {",
        "  // format_version %d" % circuit.to_dict()["format_version"],
        "  // metric %s, %s, T_N=%g, T_E=%g" % (
            circuit.metric.describe(), circuit.method,
            circuit.node_threshold, circuit.edge_threshold),
        "  rankdir=BT;",
        '  node [shape=box, fontname="Helvetica"];',
    ]
    for n in circuit.nodes:
        attributes = [
            "label=%s" % _quote("%s\\n%.4g" % (n.name, n.score)),
            'style="%s"' % NODE_STYLES[n.provenance],
            'fillcolor="%s"' % effect_colour(n.score, node_scale),
            'fontcolor="%s"' % _font_colour(n.score, node_scale),
        ]
        if n.annotation():
            attributes.append("tooltip=%s" % _quote(n.annotation()))
        lines.append("  %s [%s];" % (_quote(n.name), ", ".join(attributes)))
    for e in circuit.edges:
        width = 1.0 + 3.0*(abs(e.score)/edge_scale if edge_scale > 0 else 0)
        lines.append('  %s -> %s [label="%.3g", color="%s", penwidth=%.2f];'
                     % (_quote(e.upstream), _quote(e.downstream), e.score,
                        effect_colour(e.score, edge_scale), width))
    lines.append("}")
    return "\n".join(lines) + "\n"


def circuit_to_json(circuit: Circuit) -> str:
    return json.dumps(circuit.to_dict(), indent=2, sort_keys=True) + "\n"


def circuit_from_json(text: str) -> Circuit:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError("circuit file: line %d column %d: %s"
                              % (e.lineno, e.colno, e.msg)) from None
    return Circuit.from_dict(data)


def export_circuit(circuit: Circuit, fmt: str = "json") -> str:
    """
    Render a circuit as 'dot' or 'json' text.
    """
    if fmt == "dot":
        return circuit_to_dot(circuit)
    if fmt == "json":
        return circuit_to_json(circuit)
    raise ValidationError("unknown circuit format '%s' (expected one of %s)"
                          % (fmt, ", ".join(EXPORT_FORMATS)))


def save_circuit(circuit: Circuit, stem: Union[str, Path]) -> List[Path]:
    """
    Write <stem>.json, <stem>.dot, <stem>_nodes.csv and <stem>_edges.csv.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in EXPORT_FORMATS:
        path = stem.with_name(stem.name + "." + fmt)
        path.write_text(export_circuit(circuit, fmt))
        written.append(path)
    nodes, edges = circuit_tables(circuit)
    for suffix, frame in (("_nodes.csv", nodes), ("_edges.csv", edges)):
        path = stem.with_name(stem.name + suffix)
        frame.to_csv(path, index=False, float_format="%.17g")
        written.append(path)
    logger.info("wrote %s", ", ".join(str(p) for p in written))
    return written


def load_circuit(path: Union[str, Path]) -> Circuit:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ValidationError("%s: %s" % (path, e.strerror)) from None
    try:
        return circuit_from_json(text)
    except ValidationError as e:
        raise ValidationError("%s: %s" % (path, e)) from None
