#!/usr/bin/env python3
"""CSV-to-image renderer for the search-experiment figure tables.

Each figure id has a fixed recipe: the columns its CSV must carry, axis
labels and scales, and how rows group into series. The renderer performs
no numerical work beyond the nats-to-bits display conversion; every
plotted coordinate is a value read from the CSV, and render_figure hands
those coordinates back so callers can verify the join.

Usage: render.py --figure f5 --in f5_ddim.csv --out f5.png
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_LN2 = math.log(2.0)


class RenderError(Exception):
    """Unusable input: unknown figure, bad CSV shape, missing columns."""


@dataclass(frozen=True)
class FigureRecipe:
    """Everything needed to turn one figure's CSV into an image."""

    figure_id: str
    in_path: str
    out_path: str
    columns: tuple[str, ...]
    x_label: str
    y_label: str
    x_scale: str = "linear"
    y_scale: str = "linear"
    y2_label: str | None = None
    styles: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RenderResult:
    """The exact coordinates handed to the plotting backend.

    `lines` and `points` map a series label to (x, y); `bars` maps a label
    to (x, y, low, high) drawn on the secondary axis when the recipe has
    one. All values are floats parsed from the CSV (bits conversion
    applied where the recipe's y axis is in bits but the CSV in nats).
    """

    figure_id: str
    out_path: str
    lines: dict[str, tuple[list[float], list[float]]]
    points: dict[str, tuple[list[float], list[float]]]
    bars: dict[str, tuple[list[float], list[float], list[float], list[float]]]


_LINE = {"linewidth": 1.6}
_POINT = {"marker": "o", "linestyle": "none", "markersize": 4}
_BAR = {"fmt": "none", "capsize": 3, "alpha": 0.7}

_SPECS = {
    "f1_phase": dict(
        columns=("kind", "rate", "n", "prob"),
        x_label="number of queries n", y_label="excess probability"),
    "f2_bscC": dict(
        columns=("param", "q", "mean_nats"),
        x_label="query-size fraction q", y_label="mean information density (bits)"),
    "f3_becC": dict(
        columns=("param", "q", "mean_nats"),
        x_label="query-size fraction q", y_label="mean information density (bits)"),
    "f4_gain": dict(
        columns=("channel", "param", "n", "gain_nats"),
        x_label="number of queries n", y_label="adaptivity gain (bits)",
        x_scale="log"),
    "f4z_gain": dict(
        columns=("channel", "param", "n", "gain_nats"),
        x_label="number of queries n", y_label="adaptivity gain (bits)",
        x_scale="log"),
    "f5_ddim": dict(
        columns=("d", "n", "theory_bits", "sim_bits", "sim_rate",
                 "wilson_low", "wilson_high"),
        x_label="number of queries n", y_label="resolution (bits)",
        y2_label="excess rate"),
    "f6_separate": dict(
        columns=("mode", "n", "M", "theory_bits", "sim_bits", "sim_rate",
                 "wilson_low", "wilson_high"),
        x_label="number of queries n", y_label="resolution (bits)",
        y2_label="excess rate"),
}

ALIASES = {"f1": "f1_phase", "f2": "f2_bscC", "f3": "f3_becC", "f4": "f4_gain",
           "f4z": "f4z_gain", "f5": "f5_ddim", "f6": "f6_separate"}

FIGURE_IDS = tuple(_SPECS)


def recipe_for(figure: str, in_path: str, out_path: str) -> FigureRecipe:
    figure_id = ALIASES.get(figure, figure)
    if figure_id not in _SPECS:
        known = ", ".join(list(ALIASES) + list(FIGURE_IDS))
        raise RenderError(f"unknown figure {figure!r}; known: {known}")
    return FigureRecipe(figure_id=figure_id, in_path=in_path, out_path=out_path,
                        styles={"line": _LINE, "point": _POINT, "bar": _BAR},
                        **_SPECS[figure_id])


def load_rows(recipe: FigureRecipe) -> list[dict[str, str]]:
    """CSV rows as raw string dicts, validated against the recipe columns."""
    try:
        with open(recipe.in_path, newline="") as fh:
            reader = csv.reader(fh)
            table = [row for row in reader if row]
    except OSError as e:
        raise RenderError(f"cannot read {recipe.in_path!r}: {e}") from None
    if not table:
        raise RenderError(f"empty CSV: {recipe.in_path}")
    header, data = table[0], table[1:]
    for name in recipe.columns:
        if name not in header:
            raise RenderError(f"missing column {name}")
    if not data:
        raise RenderError(f"empty CSV: {recipe.in_path} has a header but no rows")
    idx = {name: header.index(name) for name in recipe.columns}
    return [{name: row[idx[name]] for name in recipe.columns} for row in data]


def _grouped(rows, key_cols, x_col, y_col, label, to_bits=False):
    """Ordered series map: label -> (x, y) with CSV row order preserved."""
    out: dict[str, tuple[list[float], list[float]]] = {}
    for row in rows:
        name = label(*(row[c] for c in key_cols))
        xs, ys = out.setdefault(name, ([], []))
        xs.append(float(row[x_col]))
        y = float(row[y_col])
        ys.append(y / _LN2 if to_bits else y)
    return out


def _series(recipe: FigureRecipe, rows):
    fid = recipe.figure_id
    if fid == "f1_phase":
        lines = _grouped(rows, ("kind", "rate"), "n", "prob",
                         lambda kind, rate: f"{kind} rate={rate}")
        return lines, {}, {}
    if fid in ("f2_bscC", "f3_becC"):
        lines = _grouped(rows, ("param",), "q", "mean_nats",
                         lambda prm: f"param={prm}", to_bits=True)
        return lines, {}, {}
    if fid in ("f4_gain", "f4z_gain"):
        lines = _grouped(rows, ("channel", "param"), "n", "gain_nats",
                         lambda ch, prm: f"{ch} param={prm}", to_bits=True)
        return lines, {}, {}
    key = "d" if fid == "f5_ddim" else "mode"
    label = (lambda v: f"d={v}") if fid == "f5_ddim" else (lambda v: v)
    lines = _grouped(rows, (key,), "n", "theory_bits",
                     lambda v: f"theory {label(v)}")
    points = _grouped(rows, (key,), "n", "sim_bits",
                      lambda v: f"simulated {label(v)}")
    bars: dict[str, tuple[list, list, list, list]] = {}
    for row in rows:
        name = f"excess rate {label(row[key])}"
        xs, ys, lo, hi = bars.setdefault(name, ([], [], [], []))
        xs.append(float(row["n"]))
        ys.append(float(row["sim_rate"]))
        lo.append(float(row["wilson_low"]))
        hi.append(float(row["wilson_high"]))
    return lines, points, bars


def render_figure(recipe: FigureRecipe) -> RenderResult:
    """Write the image for `recipe` and return the plotted coordinates."""
    rows = load_rows(recipe)
    lines, points, bars = _series(recipe, rows)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        for name, (xs, ys) in lines.items():
            ax.plot(xs, ys, label=name, **recipe.styles.get("line", {}))
        for name, (xs, ys) in points.items():
            ax.plot(xs, ys, label=name, **recipe.styles.get("point", {}))
        ax.set_xscale(recipe.x_scale)
        ax.set_yscale(recipe.y_scale)
        ax.set_xlabel(recipe.x_label)
        ax.set_ylabel(recipe.y_label)
        handles, labels = ax.get_legend_handles_labels()
        if bars:
            ax2 = ax.twinx()
            ax2.set_ylabel(recipe.y2_label)
            for name, (xs, ys, lo, hi) in bars.items():
                yerr = [[y - l for y, l in zip(ys, lo)],
                        [h - y for y, h in zip(ys, hi)]]
                ax2.errorbar(xs, ys, yerr=yerr, label=name,
                             **recipe.styles.get("bar", {}))
            more, more_labels = ax2.get_legend_handles_labels()
            handles += more
            labels += more_labels
        ax.legend(handles, labels, fontsize=7, loc="best")
        fig.tight_layout()
        fig.savefig(recipe.out_path, dpi=150)
    finally:
        plt.close(fig)
    return RenderResult(figure_id=recipe.figure_id, out_path=recipe.out_path,
                        lines=lines, points=points, bars=bars)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render one figure table (CSV) to an image.")
    parser.add_argument("--figure", required=True,
                        help=f"figure id or alias ({', '.join(ALIASES)})")
    parser.add_argument("--in", dest="in_path", required=True, help="input CSV")
    parser.add_argument("--out", dest="out_path", required=True, help="output image")
    args = parser.parse_args(argv)
    try:
        recipe = recipe_for(args.figure, args.in_path, args.out_path)
        result = render_figure(recipe)
    except RenderError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    sys.stdout.write(f"{result.out_path}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
