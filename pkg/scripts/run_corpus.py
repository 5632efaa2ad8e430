"""Run the fixture corpus and print a PASS/FAIL table plus a verdict matrix.

    python3 scripts/run_corpus.py [--fixtures DIR] [--json OUT]
"""

from __future__ import annotations

import argparse
import json
from collections import Counter
from dataclasses import dataclass

from evmsec.corpus import format_table, run_corpus
from evmsec.properties import BUILTIN_ORDER


@dataclass(frozen=True)
class CorpusConfig:
    fixtures: str | None = None
    json_out: str | None = None


def verdict_matrix(results) -> str:
    names = list(BUILTIN_ORDER)
    width = max(len(r.fixture.name) for r in results)
    rows = [" " * width + "  " + " ".join(f"{n:>2}" for n in names)]
    cover = {n: Counter() for n in names}
    for r in results:
        cells = []
        for n in names:
            p = r.report.property(n) if r.report else None
            v = p.verdict[0].upper() if p else "-"
            cover[n][v] += 1
            cells.append(f"{v:>2}")
        rows.append(f"{r.fixture.name:<{width}}  " + " ".join(cells))
    rows.append("")
    for n in names:
        rows.append(f"{n}: " + ", ".join(f"{k}={cover[n][k]}" for k in "VCW"))
    return "\n".join(rows) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixtures")
    ap.add_argument("--json", dest="json_out")
    a = ap.parse_args(argv)
    cfg = CorpusConfig(a.fixtures, a.json_out)
    results = run_corpus(cfg.fixtures)
    print(format_table(results))
    print(verdict_matrix(results))
    if cfg.json_out:
        doc = {r.fixture.name: r.report.to_dict() for r in results if r.report}
        with open(cfg.json_out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    return 0 if all(r.ok for r in results) else 1


if __name__ == "__main__":
    raise SystemExit(main())
