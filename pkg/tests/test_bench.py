import csv
import io
import json
import math

import pytest

from lfconstrain.bench import (
    CSV_COLUMNS, BenchConfig, BenchReport, emit_report, parse_strategies, run_bench, speedup,
)
from lfconstrain.decode import DEFAULT_STRATEGIES, Gather, Strategy
from lfconstrain.vocab import VocabSpec


@pytest.fixture(scope="module")
def small_report(mid_vocab, mid_dfa):
    cfg = BenchConfig(vocab_spec=VocabSpec.scaled(5000), d=32, n_queries=12, n_runs=3, max_len=48)
    seqs = {}
    report = run_bench(cfg, vocab=mid_vocab, dfa=mid_dfa, sequences=seqs)
    return report, seqs


def test_rows_and_identical_sequences(small_report):
    report, seqs = small_report
    assert [r.model for r in report.rows] == [s.name for s in DEFAULT_STRATEGIES]
    ref = seqs["NSP"]
    assert len(ref) == 12
    for name, got in seqs.items():
        assert got == ref, name


def test_full_baseline_width_is_vocab(small_report):
    report, _ = small_report
    assert report.row("NSP").avg_permissible_tokens == 5000
    assert report.row("NSP").cached_states == 0


def test_g_and_gc_widths_match(small_report):
    report, _ = small_report
    for t in ("500", "10^4", "all"):
        g, gc = report.row(f"NSP-G({t})"), report.row(f"NSP-GC({t})")
        assert g.avg_permissible_tokens == gc.avg_permissible_tokens
        assert g.avg_output_len == gc.avg_output_len
    assert report.row("NSP-G(all)").avg_permissible_tokens < 5000
    assert report.row("NSP-GC(all)").cached_rows > report.row("NSP-GC(500)").cached_rows


def test_std_over_runs(small_report):
    report, _ = small_report
    for r in report.rows:
        assert len(r.run_means) == 3
        assert r.std_query_seconds >= 0
        assert r.mean_query_seconds == pytest.approx(sum(r.run_means) / 3)


def test_single_run_has_zero_std(mid_vocab, mid_dfa):
    cfg = BenchConfig(d=8, n_queries=2, n_runs=1, max_len=16, strategies=(Strategy(Gather.OnTheFly),))
    (row,) = run_bench(cfg, vocab=mid_vocab, dfa=mid_dfa).rows
    assert row.std_query_seconds == 0.0


def test_bad_configs():
    for kw in ({"n_runs": 0}, {"n_queries": 0}, {"d": 0}, {"strategies": ()}):
        with pytest.raises(ValueError):
            BenchConfig(**kw)


def test_text_report(small_report):
    report, _ = small_report
    text = emit_report(report, "text").decode()
    lines = text.splitlines()
    assert lines[1].split(" | ")[0].strip() == "Model"
    assert "Avg time" in lines[1] and "Avg tokens" in lines[1]
    body = [ln for ln in lines[3:] if not ln.startswith("#")]
    assert len(body) == 7
    assert body[0].startswith("NSP ") and body[0].rstrip().endswith("5000")


def test_csv_report(small_report):
    report, _ = small_report
    rows = list(csv.reader(io.StringIO(emit_report(report, "csv").decode())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert all(len(r) == 5 for r in rows)
    assert len(rows) == 8
    assert float(rows[1][1]) == report.rows[0].mean_query_seconds


def test_json_round_trip_is_byte_stable(small_report):
    report, _ = small_report
    raw = emit_report(report, "json")
    back = BenchReport.from_dict(json.loads(raw))
    assert emit_report(back, "json") == raw
    assert back.non_timing() == report.non_timing()


def test_non_timing_drops_timing(small_report):
    report, _ = small_report
    nt = report.non_timing()
    assert "timer" not in nt["environment"]
    assert all("mean_query_seconds" not in r and "run_means" not in r for r in nt["rows"])
    assert all("avg_permissible_tokens" in r for r in nt["rows"])


def test_unknown_format(small_report):
    with pytest.raises(ValueError):
        emit_report(small_report[0], "xml")


def test_parse_strategies():
    assert parse_strategies("default") == DEFAULT_STRATEGIES
    assert [s.name for s in parse_strategies("NSP, G(500),GC(all)")] == ["NSP", "NSP-G(500)", "NSP-GC(all)"]
    assert parse_strategies("GC", threshold=10) == (Strategy(Gather.Cached, 10),)
    with pytest.raises(ValueError):
        parse_strategies("NSP,bogus")


def test_speedup(small_report):
    report, _ = small_report
    assert speedup(report, "NSP") == 0.0
    s = speedup(report, "NSP-GC(all)")
    assert not math.isnan(s) and s < 1


def test_plots(small_report, tmp_path):
    from lfconstrain.plotting import plot_report

    paths = plot_report(small_report[0], tmp_path / "figs")
    assert [p.name for p in paths] == ["bench_time.png", "bench_tokens.png"]
    for p in paths:
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
