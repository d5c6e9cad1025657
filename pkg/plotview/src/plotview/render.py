"""Figure generation from simulator CSVs.

Strictly a consumer of the CSV contracts: values are plotted exactly as
parsed (no smoothing or resampling), and the arrays that went into each
curve are returned for verification.  Rendering is deterministic: fixed
style, fixed size and dpi, Agg backend.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

from .csvio import CsvError, read_table, require_columns  # noqa: E402

KINDS = ("inversion", "populations", "density-snapshots", "sweep-summary")

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
}


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: input CSV path(s), plot kind, output image path."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CsvError(f"unknown plot kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise CsvError("at least one input CSV is required")

    @classmethod
    def from_file(cls, path: str) -> "PlotSpec":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise CsvError(f"{path}: {exc}")
        except json.JSONDecodeError as exc:
            raise CsvError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
        if not isinstance(raw, dict):
            raise CsvError(f"{path}: spec must be a JSON object")
        inputs = raw.get("in", [])
        if isinstance(inputs, str):
            inputs = [inputs]
        try:
            return cls(
                kind=raw.get("kind", ""),
                inputs=tuple(inputs),
                output=raw.get("out", ""),
                title=raw.get("title"),
                xlabel=raw.get("xlabel"),
                ylabel=raw.get("ylabel"),
            )
        except TypeError:
            raise CsvError(f"{path}: malformed plot spec")


@dataclass
class RenderResult:
    """Written image path plus the exact arrays behind every curve."""

    path: str
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    y_limits: tuple[float, float] | None = None


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def render(spec: PlotSpec) -> RenderResult:
    """Draw ``spec`` and write the figure; raises CsvError on bad input."""
    if not spec.output:
        raise CsvError("output image path is required")
    result = RenderResult(path=spec.output)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            if spec.kind == "inversion":
                _draw_inversion(spec, ax, result)
            elif spec.kind == "populations":
                _draw_populations(spec, ax, result)
            elif spec.kind == "density-snapshots":
                _draw_densities(spec, ax, result)
            else:
                _draw_sweep(spec, ax, result)
            if spec.title:
                ax.set_title(spec.title)
            if spec.xlabel:
                ax.set_xlabel(spec.xlabel)
            if spec.ylabel:
                ax.set_ylabel(spec.ylabel)
            if len(result.curves) > 1:
                ax.legend(loc="best")
            result.y_limits = tuple(ax.get_ylim())
            fig.savefig(spec.output)
        finally:
            plt.close(fig)
    return result


def _draw_inversion(spec: PlotSpec, ax, result: RenderResult) -> None:
    multiple = len(spec.inputs) > 1
    for path in spec.inputs:
        table = read_table(path)
        require_columns(table, ["t", "W"], path)
        label = f"{_stem(path)}: W" if multiple else "W"
        ax.plot(table["t"], table["W"], label=label)
        result.curves[label] = (table["t"], table["W"])
    ax.set_ylim(-1.0, 1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("inversion W")


def _draw_populations(spec: PlotSpec, ax, result: RenderResult) -> None:
    multiple = len(spec.inputs) > 1
    for path in spec.inputs:
        table = read_table(path)
        require_columns(table, ["t", "pop_plus", "pop_minus"], path)
        prefix = f"{_stem(path)}: " if multiple else ""
        for column in ("pop_plus", "pop_minus"):
            label = prefix + column
            ax.plot(table["t"], table[column], label=label)
            result.curves[label] = (table["t"], table[column])
    ax.set_xlabel("t")
    ax.set_ylabel("branch population")


def _draw_densities(spec: PlotSpec, ax, result: RenderResult) -> None:
    multiple = len(spec.inputs) > 1
    for path in spec.inputs:
        table = read_table(path)
        require_columns(table, ["z"], path)
        value_columns = [name for name in table if name != "z"]
        if not value_columns:
            raise CsvError(f"{path}: no density columns next to 'z'")
        prefix = f"{_stem(path)}: " if multiple else ""
        for column in value_columns:
            label = prefix + column
            ax.plot(table["z"], table[column], label=label)
            result.curves[label] = (table["z"], table[column])
    ax.set_xlabel("z")
    ax.set_ylabel("probability density")


def _draw_sweep(spec: PlotSpec, ax, result: RenderResult) -> None:
    multiple = len(spec.inputs) > 1
    for path in spec.inputs:
        table = read_table(path)
        names = list(table)
        if len(names) < 2:
            raise CsvError(f"{path}: a sweep table needs the axis plus one value column")
        axis = names[0]
        prefix = f"{_stem(path)}: " if multiple else ""
        for column in names[1:]:
            label = prefix + column
            ax.plot(table[axis], table[column], marker="o", label=label)
            result.curves[label] = (table[axis], table[column])
        ax.set_xlabel(axis)
    ax.set_ylabel("value")
