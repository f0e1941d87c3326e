#!/usr/bin/env python3
"""Render cagecalc CSV/JSON outputs as figures.

Usage: render.py <figure-spec.json>

A figure spec is a JSON object:
  kind     KSweep | DeltaSweep | FieldMap | PeakTracking
  csv      input CSV written by the tool (paths are relative to this JSON file)
  summary  optional JSON summary written next to a sweep CSV
  columns  optional list of value columns to draw (default: every value column)
  markers  optional {"unperturbed": [...] | "auto", "shifted": [...] | "auto"}
  output   image path (.png or .svg)

Exit status 2 means an input or a referenced column is missing.
"""

import csv
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# black = numerical, blue = thin, green = thick, red = resonant
COLOURS = {
    "discrete": "black",
    "thin": "tab:blue",
    "thick": "tab:green",
    "resonance": "tab:red",
    "neumann-shell": "tab:purple",
}
KINDS = ("KSweep", "DeltaSweep", "FieldMap", "PeakTracking")


class InputError(Exception):
    pass


def read_csv(path):
    """Header and columns (as lists of strings) of a tool CSV, skipping '#' lines."""
    if not os.path.exists(path):
        raise InputError(f"missing input file: {path}")
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(line for line in f if not line.startswith("#"))]
    if not rows:
        raise InputError(f"empty CSV: {path}")
    header, body = rows[0], rows[1:]
    cols = {name: [r[i] for r in body] for i, name in enumerate(header)}
    return header, cols


def require(cols, name):
    if name not in cols:
        raise InputError(f"missing column: {name}")
    return cols[name]


def numbers(values):
    return np.array([float(v) for v in values])


def masked_series(cols, column):
    """Values of a model column with regime-flagged rows set to NaN so lines break there."""
    y = numbers(require(cols, column))
    model = column.split(".", 1)[0]
    flags = cols.get(model + ".flag")
    if flags is not None:
        y = np.where(np.array(flags) == "ok", y, np.nan)
    return y


def value_columns(header):
    return [h for h in header[1:] if not h.endswith(".flag")]


def resolve_markers(spec, summary):
    markers = spec.get("markers", {})
    out = {}
    for key in ("unperturbed", "shifted"):
        v = markers.get(key, [])
        if v == "auto":
            if summary is None:
                raise InputError(f"markers.{key} = auto needs a summary file")
            if key == "unperturbed":
                v = [r["kStar"] for r in summary.get("unperturbedResonances", [])]
            else:
                v = [r["kPeakFirstOrder"] for r in summary.get("resonanceReports", [])]
        out[key] = [float(x) for x in v]
    return out


def draw_markers(ax, markers):
    for k in markers["unperturbed"]:
        ax.axvline(k, color="grey", linestyle="--", linewidth=0.8)
    for k in markers["shifted"]:
        ax.axvline(k, color="red", linestyle="--", linewidth=0.8)


def sweep_figure(spec, base, log_x):
    header, cols = read_csv(os.path.join(base, spec["csv"]))
    summary = None
    if "summary" in spec:
        path = os.path.join(base, spec["summary"])
        if not os.path.exists(path):
            raise InputError(f"missing input file: {path}")
        with open(path) as f:
            summary = json.load(f)
    columns = spec.get("columns") or value_columns(header)
    x = numbers(cols[header[0]])
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in columns:
        y = masked_series(cols, c)
        model = c.split(".", 1)[0]
        ax.plot(x, y, color=COLOURS.get(model, None), linewidth=1.0, label=c)
    draw_markers(ax, resolve_markers(spec, summary))
    ax.set_yscale("log")
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel(header[0])
    ax.set_ylabel("amplitude")
    ax.legend(fontsize=7)
    return fig


def field_figure(spec, base):
    _, cols = read_csv(os.path.join(base, spec["csv"]))
    column = (spec.get("columns") or ["discrete.re"])[0]
    x, y, v = numbers(require(cols, "x")), numbers(require(cols, "y")), numbers(require(cols, column))
    xs, ys = np.unique(x), np.unique(y)
    grid = v.reshape(len(ys), len(xs))
    fig, ax = plt.subplots(figsize=(5, 4.5))
    lim = np.nanmax(np.abs(grid)) if np.isfinite(grid).any() else 1.0
    mesh = ax.pcolormesh(xs, ys, np.ma.masked_invalid(grid), cmap="RdBu_r", vmin=-lim, vmax=lim, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=column)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return fig


def peak_figure(spec, base):
    _, cols = read_csv(os.path.join(base, spec["csv"]))
    delta = numbers(require(cols, "delta"))
    eps = numbers(require(cols, "epsilon"))
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))
    for d in sorted(set(delta)):
        sel = delta == d
        order = np.argsort(eps[sel])
        e = eps[sel][order]
        a1.plot(e, numbers(require(cols, "discrete.k_peak"))[sel][order], "o-", color="black", label=f"discrete, delta={d:g}")
        a1.plot(e, numbers(require(cols, "resonance.k_peak"))[sel][order], "--", color="red")
        a2.plot(e, numbers(require(cols, "discrete.peak"))[sel][order], "o-", color="black")
    a1.set_xlabel("epsilon")
    a1.set_ylabel("k of peak")
    a1.legend(fontsize=7)
    a2.set_xscale("log")
    a2.set_yscale("log")
    a2.set_xlabel("epsilon")
    a2.set_ylabel("peak |phi(0)|")
    return fig


def render(spec_path):
    with open(spec_path) as f:
        spec = json.load(f)
    base = os.path.dirname(os.path.abspath(spec_path))
    kind = spec.get("kind")
    if kind not in KINDS:
        raise InputError(f"unknown figure kind: {kind}")
    if kind == "KSweep":
        fig = sweep_figure(spec, base, log_x=False)
    elif kind == "DeltaSweep":
        fig = sweep_figure(spec, base, log_x=True)
    elif kind == "FieldMap":
        fig = field_figure(spec, base)
    else:
        fig = peak_figure(spec, base)
    out = os.path.join(base, spec["output"])
    fmt = os.path.splitext(out)[1].lstrip(".") or "png"
    # strip the timestamp/version metadata so the bytes depend only on the inputs
    meta = {"Software": None} if fmt == "png" else {"Date": None, "Creator": None}
    fig.savefig(out, format=fmt, dpi=120, metadata=meta)
    plt.close(fig)
    return out


def main(argv):
    if len(argv) != 2:
        print("usage: render.py <figure-spec.json>", file=sys.stderr)
        return 2
    try:
        render(argv[1])
    except InputError as e:
        print(str(e), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
