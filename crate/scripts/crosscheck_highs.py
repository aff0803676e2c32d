#!/usr/bin/env python3
"""Solve the reference instances with HiGHS and compare against qkdnet.

Every instance is exported with `qkdnet export-lp`, solved by HiGHS, and
compared with the bound reported by `qkdnet bound`. Needs `pip install highspy`.

    python3 scripts/crosscheck_highs.py [path/to/qkdnet]
"""
import subprocess
import sys
import tempfile
from pathlib import Path

import highspy

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "data"
QKDNET = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "target" / "debug" / "qkdnet")

CASES = [("secoqc.topo", "25000", [], "none")]
CASES += [("secoqc.topo", "25000", ["--add-system", f"e{i}"], f"+e{i}") for i in range(1, 9)]
for sel in ["", "v8", "v10", "v12", "v8,v10", "v8,v12", "v10,v12", "v8,v10,v12"]:
    CASES.append(("nsfnet.topo", "15000", ["--select", sel], sel or "none"))


def qkdnet(*args):
    return subprocess.run([QKDNET, *args], check=True, capture_output=True, text=True).stdout


def main():
    worst = 0.0
    with tempfile.TemporaryDirectory() as tmp:
        for i, (topo, demand, extra, label) in enumerate(CASES):
            common = ["--topology", str(DATA / topo), "--demand", demand, *extra]
            lp = Path(tmp) / f"case{i}.lp"
            qkdnet("export-lp", *common, "--output", str(lp))
            ours = float(qkdnet("bound", *common, "--format", "csv").splitlines()[-1].split(",")[-1])

            h = highspy.Highs()
            h.setOptionValue("output_flag", False)
            h.readModel(str(lp))
            h.run()
            status = h.modelStatusToString(h.getModelStatus())
            theirs = h.getInfo().objective_function_value
            diff = abs(ours - theirs)
            worst = max(worst, diff)
            print(f"{topo:12} {label:10} qkdnet={ours:.6f} highs={theirs:.6f} ({status})")
    print(f"max difference {worst:.2e}")
    return 0 if worst <= 1e-6 else 1


if __name__ == "__main__":
    sys.exit(main())
