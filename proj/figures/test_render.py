#!/usr/bin/env python3
"""End-to-end checks of render.py on fresh tool output.

Usage: test_render.py <cagecalc binary> <work dir>
"""

import csv
import hashlib
import json
import math
import os
import shutil
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
RENDER = os.path.join(HERE, "render.py")

KSWEEP = """[cage]
M = 30
delta = 0.1

[source]
equation = helmholtz
z0 = 2

[sweep]
variable = k
from = 2.2
to = 2.6
count = 41
models = discrete,thin,thick,resonance
probes = 0

[output]
name = ksweep
"""

DSWEEP = """[cage]
M = 12
delta = 0.1

[source]
equation = laplace
z0 = 2

[sweep]
variable = delta
from = 0.01
to = 0.3
count = 8
spacing = log
models = discrete,thin,thick
probes = 0

[output]
name = dsweep
"""

EMPTY_GRID = """[cage]
M = 0
delta = 0.1

[source]
equation = helmholtz
k = 2
z0 = 0.5

[grid]
xmin = -1.5
xmax = 2.5
ymin = -2
ymax = 2
nx = 41
ny = 41

[output]
name = freefield
"""

PEAKS = """[cage]
M = 30
delta = 0.1

[source]
equation = helmholtz
z0 = 2

[peaks]
deltas = 0.1
M = 30
mode = 0,1
window = 0.03
samples = 15

[output]
name = peaks
"""

failures = []


def check(cond, what):
    print(("PASS " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def run_tool(tool, work, command, text, name):
    path = os.path.join(work, name + ".ini")
    with open(path, "w") as f:
        f.write(text)
    r = subprocess.run([tool, "--quiet", "--threads", "1", "--out", work, command, path], capture_output=True, text=True)
    if r.returncode != 0:
        sys.exit(f"tool failed on {name}: {r.stderr}")


def render(work, spec, name):
    path = os.path.join(work, name + ".json")
    with open(path, "w") as f:
        json.dump(spec, f)
    return subprocess.run([sys.executable, RENDER, path], capture_output=True, text=True)


def digest(path):
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def main(argv):
    tool, work = argv[1], argv[2]
    shutil.rmtree(work, ignore_errors=True)
    os.makedirs(work)

    run_tool(tool, work, "sweep", KSWEEP, "ksweep")
    spec = {"kind": "KSweep", "csv": "ksweep.csv", "summary": "ksweep.json",
            "markers": {"unperturbed": "auto", "shifted": "auto"}, "output": "ksweep.png"}
    r1 = render(work, spec, "fig_ksweep")
    first = digest(os.path.join(work, "ksweep.png")) if r1.returncode == 0 else None
    r2 = render(work, spec, "fig_ksweep")
    check(r1.returncode == 0 and r2.returncode == 0, "k sweep renders")
    check(first is not None and first == digest(os.path.join(work, "ksweep.png")), "re-render gives an identical checksum")

    spec_empty = dict(spec, markers={}, output="ksweep_nomarkers.png")
    check(render(work, spec_empty, "fig_nomarkers").returncode == 0, "empty marker list renders")

    bad = dict(spec, columns=["discrete.z=9.abs"], output="bad.png")
    r = render(work, bad, "fig_bad")
    check(r.returncode == 2 and "discrete.z=9.abs" in r.stderr, "missing column exits 2 and names the column")

    check(render(work, dict(spec, csv="nowhere.csv"), "fig_nofile").returncode == 2, "missing input exits 2")

    run_tool(tool, work, "sweep", DSWEEP, "dsweep")
    d = {"kind": "DeltaSweep", "csv": "dsweep.csv", "output": "dsweep.png"}
    check(render(work, d, "fig_dsweep").returncode == 0, "delta sweep renders")

    run_tool(tool, work, "grid", EMPTY_GRID, "freefield")
    with open(os.path.join(work, "freefield_grid.csv"), newline="") as f:
        rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
    # with no wires |phi| depends only on the distance to the source
    by_r = {}
    for row in rows:
        a = float(row["discrete.abs"])
        if math.isfinite(a):
            rr = round(math.hypot(float(row["x"]) - 0.5, float(row["y"])), 9)
            by_r.setdefault(rr, []).append(a)
    spread = max(max(v) - min(v) for v in by_r.values())
    check(spread < 1e-12, f"empty-cage field is radially symmetric (spread {spread:.1e})")
    fm = {"kind": "FieldMap", "csv": "freefield_grid.csv", "output": "freefield.png"}
    check(render(work, fm, "fig_field").returncode == 0, "field map of the empty cage renders")

    run_tool(tool, work, "sweep", PEAKS, "peaks")
    pk = {"kind": "PeakTracking", "csv": "peaks_peaks.csv", "output": "peaks.png"}
    check(render(work, pk, "fig_peaks").returncode == 0, "peak tracking renders")

    for png in ("ksweep.png", "ksweep_nomarkers.png", "dsweep.png", "freefield.png", "peaks.png"):
        p = os.path.join(work, png)
        check(os.path.exists(p) and os.path.getsize(p) > 1000, f"{png} written")

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
