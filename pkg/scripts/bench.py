"""Time the analysis of generated contracts of growing size.

Each size is a ``perf-large``-style contract with N methods; the output is
one CSV row per size with SSA size, fact counts and per-stage seconds.

    python3 scripts/bench.py --sizes 10 25 50 100 --repeat 3
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
from dataclasses import dataclass

from build_fixtures import PerfConfig, perf_source
from evmsec.asm import assemble
from evmsec.report import analyze

STAGES = ("decompile", "facts", "infer", "classify", "total")


@dataclass(frozen=True)
class BenchConfig:
    sizes: tuple[int, ...] = (10, 25, 50, 100)
    repeat: int = 3
    budget_s: float = 30.0


def run(cfg: BenchConfig):
    for n in cfg.sizes:
        code = assemble(perf_source(PerfConfig(methods=n))).hex
        runs = [analyze(code) for _ in range(cfg.repeat)]
        st = runs[0].stats
        row = {"methods": n, "ssa_instructions": st["ssa_instructions"],
               "base_facts": st["base_facts"], "derived_facts": st["derived_facts"]}
        for s in STAGES:
            row[s] = round(statistics.median(r.timing[s] for r in runs), 4)
        row["within_budget"] = row["total"] < cfg.budget_s
        yield row


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=list(BenchConfig.sizes))
    ap.add_argument("--repeat", type=int, default=BenchConfig.repeat)
    a = ap.parse_args(argv)
    cfg = BenchConfig(tuple(a.sizes), a.repeat)
    w = None
    for row in run(cfg):
        if w is None:
            w = csv.DictWriter(sys.stdout, fieldnames=list(row))
            w.writeheader()
        w.writerow(row)
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
