"""Machine-readable exports: run reports, attribution tables, graph files.

Every writer here is deterministic for identical inputs: JSON keeps
insertion order and full float precision (shortest round-trip repr), CSV and
DOT are templated with fixed formatting. The run report is the one artifact
that is *not* byte-stable across reruns, because it records wall-clock
timing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .dataset import Dataset
from .pgm import ExplanationGraph
from .shapley import AttributionVector, GlobalRanking


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json_text(obj), encoding="utf-8")


# -- explanation graph ---------------------------------------------------------


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(g: ExplanationGraph) -> str:
    """DOT digraph: one edge per explanation node pointing at the target,
    edge weight as a %.4f attribute, pen width proportional to weight,
    selected nodes drawn bold."""
    lines = ["digraph explanation {", "  rankdir=LR;"]
    lines.append(f"  {_dot_quote(g.target)} [shape=doublecircle];")
    for node in g.nodes:
        style = ', style=bold' if node.selected else ""
        lines.append(f"  {_dot_quote(node.name)} [label={_dot_quote(node.name)}{style}];")
    for node in g.nodes:
        pen = 0.5 + 4.0 * node.weight
        lines.append(
            f"  {_dot_quote(node.name)} -> {_dot_quote(g.target)} "
            f'[weight="{node.weight:.4f}", penwidth={pen:.2f}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_graph(g: ExplanationGraph, json_path: str | Path | None = None,
                dot_path: str | Path | None = None) -> list[str]:
    written = []
    if json_path is not None:
        write_json(g.to_dict(), json_path)
        written.append(str(json_path))
    if dot_path is not None:
        Path(dot_path).write_text(graph_to_dot(g), encoding="utf-8")
        written.append(str(dot_path))
    return written


# -- attribution exports -----------------------------------------------------


def attributions_to_csv(attributions: Iterable[AttributionVector], d: Dataset,
                        path: str | Path) -> None:
    """Long-form per-instance table, enough to render a beeswarm externally:
    instance, feature, phi, original feature value, base value."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance", "feature", "phi", "feature_value", "base_value"])
        for att in attributions:
            rec = d.record(int(att.instance_id))
            for name, phi in zip(att.feature_names, att.phi):
                writer.writerow([att.instance_id, name, repr(float(phi)),
                                 rec[name], repr(att.base_value)])


def ranking_to_json_obj(ranking: GlobalRanking, top_k: int | None = None) -> list[dict]:
    entries = ranking.entries if top_k is None else ranking.top(top_k)
    return [{"feature": name, "importance": imp} for name, imp in entries]


# -- run report ---------------------------------------------------------------


@dataclass
class RunReport:
    """Echo of one CLI invocation: resolved config, seed, timing, artifacts.

    The config echo plus the seed reproduces the run exactly; timing is
    informational and excluded from any byte-identity guarantees.
    """

    command: str
    config: dict
    seed: int | None
    timing_seconds: float = 0.0
    outputs: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "timing_seconds": self.timing_seconds,
            "outputs": list(self.outputs),
            "warnings": list(self.warnings),
        }

    def write(self, path: str | Path) -> None:
        write_json(self.to_dict(), path)
