"""The fixture corpus, and the experiment scripts that maintain and run it."""

import sys
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from evmsec.corpus import check_fixture, load_fixtures
from evmsec.decompiler import decompile
from evmsec.properties import BUILTIN_ORDER

from support import assemble_hex

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))

import bench  # noqa: E402
import build_fixtures  # noqa: E402
import run_corpus  # noqa: E402

FIXTURES = load_fixtures()


@pytest.fixture(scope="module")
def results():
    return {fx.name: check_fixture(fx) for fx in FIXTURES}


def test_every_fixture_has_its_files():
    for fx in FIXTURES:
        for f in ("code.hex", "expect.toml", "notes.md"):
            assert (fx.path / f).is_file(), f"{fx.name}/{f}"
        assert fx.expect.get("description")
        assert set(fx.properties) == set(BUILTIN_ORDER), fx.name


@pytest.mark.parametrize("fx", FIXTURES, ids=lambda f: f.name)
def test_fixture_matches_expectations(fx, results):
    assert results[fx.name].ok, results[fx.name].mismatches


def test_coverage_of_verdicts(results):
    """Every property has a violating and a compliant fixture; all but TT have a warning one."""
    cover = {n: Counter() for n in BUILTIN_ORDER}
    for r in results.values():
        for p in r.report.properties:
            cover[p.name][p.verdict] += 1
    for n, c in cover.items():
        assert c["violation"] and c["compliant"], n
        if n != "TT":  # its compliance pattern is the exact negation of its violation
            assert c["warning"], n


def test_nw_warning_fixture(results):
    rep = results["nw-branch-join"].report
    assert rep.property("NW").verdict == "warning"


def test_no_fixture_matches_both_patterns(results):
    for r in results.values():
        for p in r.report.properties:
            assert not p.diagnostics, (r.fixture.name, p.name, p.diagnostics)


def test_hex_files_are_up_to_date(capsys):
    assert build_fixtures.main(["--check"]) == 0


def test_run_corpus_script(capsys, tmp_path):
    out = tmp_path / "corpus.json"
    assert run_corpus.main(["--json", str(out)]) == 0
    text = capsys.readouterr().out
    assert "RW: V=" in text
    assert out.is_file()


def test_verdict_matrix_counts(results):
    table = run_corpus.verdict_matrix(list(results.values()))
    line = next(l for l in table.splitlines() if l.startswith("RW:"))
    n = sum(int(part.split("=")[1]) for part in line[4:].split(", "))
    assert n == len(results)


@settings(max_examples=8)
@given(st.integers(1, 12))
def test_perf_generator_yields_one_method_per_selector(methods):
    cfg = build_fixtures.PerfConfig(methods=methods)
    cfg_ir = decompile(assemble_hex(build_fixtures.perf_source(cfg)))
    assert len(cfg_ir.methods.selectors) == methods
    assert "malformed-dispatcher" not in cfg_ir.flags


def test_bench_rows():
    rows = list(bench.run(bench.BenchConfig(sizes=(2, 4), repeat=1)))
    assert [r["methods"] for r in rows] == [2, 4]
    assert rows[0]["ssa_instructions"] < rows[1]["ssa_instructions"]
    assert all(r["within_budget"] for r in rows)
