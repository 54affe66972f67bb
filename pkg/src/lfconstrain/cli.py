"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 validation reject, 3 resource error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import _lcg
from .automata import DEFAULT_STATE_CAP, AutomatonSizeError, build_m_lf
from .bench import FORMATS, BenchConfig, emit_report, parse_strategies, run_bench
from .decode import Gather, build_cache, greedy_decode, init_layer, parse_strategy
from .grammar import format_lf, sample_lf, split_lfs, tokenize, validate_lf
from .scorer import init_provider
from .vocab import EOS, UnknownTokenError, Vocab, VocabError, VocabSpec, build_synthetic_vocab, eqs_sample_vocab

EXIT_OK, EXIT_USAGE, EXIT_REJECT, EXIT_RESOURCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _UsageError(Exception):
    pass


def _vocab_args(p, default):
    g = p.add_argument_group("vocabulary")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--vocab", metavar="FILE", help="vocabulary file (token<TAB>class<TAB>kind)")
    src.add_argument("--synthetic", action="store_true", help="generated EQS-scale vocabulary")
    src.add_argument("--sample-vocab", action="store_true", help="small named EQS vocabulary")
    g.add_argument("--vocab-size-total", type=int, metavar="N",
                   help="size of the synthetic vocabulary (default 56209)")
    p.set_defaults(vocab_default=default)


def _model_args(p):
    p.add_argument("--dim", type=int, default=300, help="hidden dimension d (default 300)")
    p.add_argument("--seed", type=int, default=13, help="layer/provider seed (default 13)")
    p.add_argument("--max-len", type=int, default=128, help="decode length cap (default 128)")
    p.add_argument("--threshold", type=float, default=None,
                   help="cache/restriction threshold for bare G/GC strategies")


def _load_vocab(args) -> Vocab:
    if args.vocab:
        return Vocab.read(args.vocab)
    if args.sample_vocab or (not args.synthetic and args.vocab_default == "sample"
                             and args.vocab_size_total is None):
        return eqs_sample_vocab()
    spec = VocabSpec.scaled(args.vocab_size_total) if args.vocab_size_total else VocabSpec()
    return build_synthetic_vocab(spec)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lfconstrain", description="Grammar-constrained LF decoding toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build-automaton", help="build the LF automaton and report its size")
    _vocab_args(b, "synthetic")
    b.add_argument("--dump", metavar="FILE", help="write the DFA in text dump format")
    b.add_argument("--out", metavar="FILE", help="write the vocabulary file")
    b.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)

    v = sub.add_parser("validate", help="check LFs with the grammar and with the automaton")
    _vocab_args(v, "sample")
    v.add_argument("--lf", metavar="FILE", required=True, help="LF text file ('-' for stdin)")

    s = sub.add_parser("sample", help="draw random valid LFs")
    _vocab_args(s, "sample")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--depth", type=int, default=3)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--out", metavar="FILE")

    d = sub.add_parser("decode", help="greedy-decode one synthetic query")
    _vocab_args(d, "synthetic")
    _model_args(d)
    d.add_argument("--strategy", default="GC(all)")
    d.add_argument("--query", type=int, default=0)
    d.add_argument("--out", metavar="FILE", help="write the trace JSON here instead of stdout")

    r = sub.add_parser("bench", help="time decoding across gather strategies")
    _vocab_args(r, "synthetic")
    _model_args(r)
    r.add_argument("--queries", type=int, default=331)
    r.add_argument("--runs", type=int, default=5)
    r.add_argument("--strategies", default="default",
                   help="comma-separated, e.g. NSP,G(500),GC(all); 'default' = seven standard rows")
    r.add_argument("--format", default="text", choices=sorted(FORMATS))
    r.add_argument("--out", metavar="DIR", help="write report.{txt,csv,json} and figures here")
    return p


def _cmd_build(args, out, err):
    vocab = _load_vocab(args)
    dfa = build_m_lf(vocab, state_cap=args.state_cap)
    sizes = [len(x) for x in dfa.next_lists]
    print(f"|V|={len(vocab)} states={dfa.n_states} finals={len(dfa.finals)} "
          f"start_next={sizes[dfa.start]} max_next={max(sizes)}", file=out)
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as f:
            f.writelines(dfa.dump_lines(vocab))
    if args.out:
        vocab.write(args.out)
    return EXIT_OK


def _cmd_validate(args, out, err):
    vocab = _load_vocab(args)
    text = sys.stdin.read() if args.lf == "-" else Path(args.lf).read_text(encoding="utf-8")
    chunks = split_lfs(tokenize(text))
    if not chunks:
        raise _UsageError(f"no LF found in {args.lf}")
    dfa = build_m_lf(vocab)
    eos = vocab.id(EOS)
    status = EXIT_OK
    for toks in chunks:
        try:
            seq = vocab.encode(toks)
        except UnknownTokenError as e:
            print(f"{' '.join(toks)}\n  error: {e}", file=out)
            status = EXIT_REJECT
            continue
        cfg = validate_lf(vocab, seq)
        aut = dfa.accepts(seq + [eos])
        cfg_s = "accept" if cfg else f"reject at {cfg.position}"
        print(format_lf(vocab, seq), file=out)
        print(f"  CFG: {cfg_s}, M_LF: {'accept' if aut else 'reject'}", file=out)
        if not (cfg and aut):
            status = EXIT_REJECT
    return status


def _cmd_sample(args, out, err):
    if args.depth < 1 or args.count < 0:
        raise _UsageError("--depth must be >= 1 and --count >= 0")
    vocab = _load_vocab(args)
    lines = [format_lf(vocab, sample_lf(vocab, _lcg.derive(args.seed, i), args.depth)) + "\n"
             for i in range(args.count)]
    if args.out:
        Path(args.out).write_text("".join(lines), encoding="utf-8")
    else:
        out.writelines(lines)
    return EXIT_OK


def _strategy(text, threshold):
    try:
        return parse_strategy(text, threshold)
    except ValueError as e:
        raise _UsageError(str(e)) from None


def _cmd_decode(args, out, err):
    strategy = _strategy(args.strategy, args.threshold)
    vocab = _load_vocab(args)
    dfa = build_m_lf(vocab)
    layer = init_layer(len(vocab), args.dim, args.seed)
    cache = build_cache(layer, dfa, strategy.threshold) if strategy.gather is Gather.Cached else None
    provider = init_provider(len(vocab), args.dim, args.seed, args.query)
    trace = greedy_decode(dfa, layer, provider, strategy, args.max_len, eos=vocab.id(EOS), cache=cache)
    payload = json.dumps(trace.to_json(vocab), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        out.write(payload)
    print(format_lf(vocab, trace.tokens) + (" [truncated]" if trace.truncated else ""), file=err)
    return EXIT_OK


def _cmd_bench(args, out, err):
    try:
        strategies = parse_strategies(args.strategies, args.threshold)
    except ValueError as e:
        raise _UsageError(str(e)) from None
    vocab = _load_vocab(args)
    try:
        config = BenchConfig(
            n_queries=args.queries, n_runs=args.runs, d=args.dim, max_len=args.max_len,
            strategies=strategies, seed=args.seed,
        )
    except ValueError as e:
        raise _UsageError(str(e)) from None
    report = run_bench(config, vocab=vocab)
    out.write(emit_report(report, args.format).decode("utf-8"))
    if args.out:
        from .plotting import plot_report

        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for fmt, ext in (("text", "txt"), ("csv", "csv"), ("json", "json")):
            (outdir / f"report.{ext}").write_bytes(emit_report(report, fmt))
        for path in plot_report(report, outdir):
            print(f"wrote {path}", file=err)
    return EXIT_OK


_COMMANDS = {
    "build-automaton": _cmd_build,
    "validate": _cmd_validate,
    "sample": _cmd_sample,
    "decode": _cmd_decode,
    "bench": _cmd_bench,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, out, err)
    except (_UsageError, VocabError, UnknownTokenError, FileNotFoundError) as e:
        print(f"lfconstrain {args.command}: error: {e}", file=err)
        return EXIT_USAGE
    except (AutomatonSizeError, MemoryError) as e:
        print(f"lfconstrain {args.command}: resource error: {e}", file=err)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
