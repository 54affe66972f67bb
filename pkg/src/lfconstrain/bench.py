"""Prediction-time benchmark over gather strategies.

For each strategy the automaton, layer and (if needed) state cache are built
once outside the timed region; each run then decodes every query
sequentially and records wall-clock time per query.  Reported spread is the
population standard deviation of the per-run mean query times.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import statistics
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .automata import Dfa, build_m_lf
from .decode import (
    DEFAULT_STRATEGIES, Gather, PredictionLayer, Strategy, build_cache, greedy_decode,
    init_layer, parse_strategy,
)
from .scorer import init_provider
from .vocab import EOS, Vocab, VocabSpec, build_synthetic_vocab

log = logging.getLogger(__name__)

CSV_COLUMNS = ("model", "mean_s", "std_s", "avg_tokens", "avg_len")
TIMING_FIELDS = ("mean_query_seconds", "std_query_seconds", "run_means", "cache_build_seconds")


@dataclass
class BenchConfig:
    vocab_spec: VocabSpec = field(default_factory=VocabSpec)
    d: int = 300
    n_queries: int = 331
    n_runs: int = 5
    max_len: int = 128
    strategies: tuple[Strategy, ...] = DEFAULT_STRATEGIES
    seed: int = 13

    def __post_init__(self):
        if self.n_runs < 1 or self.n_queries < 1 or self.d < 1 or self.max_len < 1:
            raise ValueError("n_runs, n_queries, d and max_len must be >= 1")
        if not self.strategies:
            raise ValueError("no strategies to benchmark")


@dataclass
class StrategyResult:
    model: str
    mean_query_seconds: float
    std_query_seconds: float
    run_means: list[float]
    avg_permissible_tokens: float
    avg_output_len: float
    truncated: int
    cache_build_seconds: float = 0.0
    cached_states: int = 0
    cached_rows: int = 0


@dataclass
class BenchReport:
    rows: list[StrategyResult]
    environment: dict

    def to_dict(self) -> dict:
        return {"environment": self.environment, "rows": [asdict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, obj: dict) -> "BenchReport":
        return cls([StrategyResult(**r) for r in obj["rows"]], obj["environment"])

    def non_timing(self) -> dict:
        """Everything that must be reproducible run to run."""
        d = self.to_dict()
        for r in d["rows"]:
            for k in TIMING_FIELDS:
                r.pop(k)
        env = dict(d["environment"])
        env.pop("timer", None)
        d["environment"] = env
        return d

    def row(self, model: str) -> StrategyResult:
        for r in self.rows:
            if r.model == model:
                return r
        raise KeyError(model)


def run_bench(
    config: BenchConfig,
    *,
    vocab: Vocab | None = None,
    dfa: Dfa | None = None,
    layer: PredictionLayer | None = None,
    sequences: dict | None = None,
) -> BenchReport:
    """Time greedy decoding of ``n_queries`` queries for each strategy.

    If ``sequences`` is a dict it receives, per strategy name, the decoded
    token tuples of the first run.
    """
    vocab = vocab or build_synthetic_vocab(config.vocab_spec)
    dfa = dfa or build_m_lf(vocab)
    layer = layer or init_layer(len(vocab), config.d, config.seed)
    if layer.vocab_size != len(vocab) or dfa.vocab_size != len(vocab):
        raise ValueError("vocab, automaton and layer sizes disagree")
    eos = vocab.id(EOS)
    V, d = len(vocab), layer.d

    timer = time.get_clock_info("perf_counter")
    rows = []
    for strategy in config.strategies:
        cache = None
        if strategy.gather is Gather.Cached:
            cache = build_cache(layer, dfa, strategy.threshold)
        run_means = []
        widths: list[int] = []
        lengths: list[int] = []
        truncated = 0
        for run in range(config.n_runs):
            times = []
            for q in range(config.n_queries):
                provider = init_provider(V, d, config.seed, q)
                t0 = time.perf_counter()
                trace = greedy_decode(
                    dfa, layer, provider, strategy, config.max_len, eos=eos, cache=cache
                )
                times.append(time.perf_counter() - t0)
                if run == 0:
                    widths.extend(trace.widths)
                    lengths.append(len(trace.tokens))
                    truncated += trace.truncated
                    if sequences is not None:
                        sequences.setdefault(strategy.name, []).append(tuple(trace.tokens))
            run_means.append(statistics.fmean(times))
            log.info("%s run %d: %.4f s/query", strategy.name, run, run_means[-1])
        mean = statistics.fmean(run_means)
        if mean < 100 * timer.resolution:
            warnings.warn(f"{strategy.name}: per-query time {mean:.3g}s is near timer resolution")
        rows.append(StrategyResult(
            model=strategy.name,
            mean_query_seconds=mean,
            std_query_seconds=statistics.pstdev(run_means),
            run_means=run_means,
            avg_permissible_tokens=float(np.mean(widths)),
            avg_output_len=float(np.mean(lengths)),
            truncated=truncated,
            cache_build_seconds=cache.build_seconds if cache else 0.0,
            cached_states=len(cache.entries) if cache else 0,
            cached_rows=cache.unique_rows if cache else 0,
        ))
        del cache

    env = {
        "timer": f"time.perf_counter ({timer.implementation}, resolution {timer.resolution:g}s)",
        "vocab_size": V,
        "d": d,
        "dfa_states": dfa.n_states,
        "n_queries": config.n_queries,
        "n_runs": config.n_runs,
        "max_len": config.max_len,
        "seed": config.seed,
        "std": "population std over per-run mean query times",
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    return BenchReport(rows, env)


def _fmt_tokens(x: float) -> str:
    return f"{x:.0f}" if x >= 100 else f"{x:.1f}"


def format_text(report: BenchReport) -> str:
    env = report.environment
    lines = [
        f"# |V|={env['vocab_size']} d={env['d']} queries={env['n_queries']} runs={env['n_runs']}"
        f" ({env['std']})",
    ]
    table = [("Model", "Avg time", "Avg tokens")]
    for r in report.rows:
        table.append((
            r.model,
            f"{r.mean_query_seconds:.3f} ± {r.std_query_seconds:.3f}",
            _fmt_tokens(r.avg_permissible_tokens),
        ))
    widths = [max(len(row[i]) for row in table) for i in range(3)]
    for i, row in enumerate(table):
        lines.append(" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    trunc = [f"{r.model}={r.truncated}" for r in report.rows if r.truncated]
    if trunc:
        lines.append(f"# truncated decodes (max_len={env['max_len']}): " + ", ".join(trunc))
    return "\n".join(lines) + "\n"


def format_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([
            r.model, repr(r.mean_query_seconds), repr(r.std_query_seconds),
            repr(r.avg_permissible_tokens), repr(r.avg_output_len),
        ])
    return buf.getvalue()


def format_json(report: BenchReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


FORMATS = {"text": format_text, "csv": format_csv, "json": format_json}


def emit_report(report: BenchReport, fmt: str = "text") -> bytes:
    try:
        render = FORMATS[fmt]
    except KeyError:
        raise ValueError(f"unknown report format {fmt!r}; choose from {sorted(FORMATS)}") from None
    return render(report).encode("utf-8")


def parse_strategies(text: str, threshold=None) -> tuple[Strategy, ...]:
    """Comma-separated strategy names; ``default`` expands to the seven standard rows."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if part.lower() == "default":
            out.extend(DEFAULT_STRATEGIES)
        elif part:
            out.append(parse_strategy(part, threshold))
    return tuple(out)


def speedup(report: BenchReport, fast: str, slow: str = "NSP") -> float:
    """Fractional time reduction of ``fast`` relative to ``slow``."""
    a, b = report.row(fast).mean_query_seconds, report.row(slow).mean_query_seconds
    return 1.0 - a / b if b > 0 else math.nan
