"""Prediction layer and grammar-constrained greedy decoding.

All score computations go through ``np.einsum("ij,j->i", ...)``: unlike
BLAS gemv, its per-row reduction order depends only on ``d``, so scoring a
gathered subset of rows gives bit-for-bit the same numbers as scoring the
full matrix and indexing.
"""

from __future__ import annotations

import enum
import math
import re
import time
from dataclasses import dataclass, field

import numpy as np

from . import _lcg
from .automata import Dfa
from .scorer import HiddenProvider
from .vocab import Vocab


@dataclass(frozen=True, eq=False)
class PredictionLayer:
    W: np.ndarray  # |V| x d
    b: np.ndarray  # |V|

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"bad shapes W{self.W.shape} b{self.b.shape}")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ValueError("non-finite weights")

    @property
    def vocab_size(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]


def init_layer(vocab_size: int, d: int, seed: int) -> PredictionLayer:
    """Uniform [-0.1, 0.1] weights and bias from the seeded LCG."""
    if vocab_size < 1 or d < 1:
        raise ValueError("vocab_size and d must be positive")
    g = _lcg.Lcg64(_lcg.derive(seed, _lcg.LAYER))
    W = g.uniform(-0.1, 0.1, (vocab_size, d))
    b = g.uniform(-0.1, 0.1, vocab_size)
    return PredictionLayer(W, b)


def _matvec(M, h):
    return np.einsum("ij,j->i", M, h)


def score_full(layer: PredictionLayer, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (layer.d,):
        raise ValueError(f"hidden vector of shape {h.shape}, expected ({layer.d},)")
    return _matvec(layer.W, h) + layer.b


@dataclass(frozen=True)
class RestrictedScores:
    l_c: np.ndarray
    scores: np.ndarray

    @property
    def k(self) -> int:
        return len(self.l_c)

    def argmax(self) -> int:
        """Token id of the best score; ties go to the lowest id."""
        return int(self.l_c[np.argmax(self.scores)])


@dataclass(frozen=True, eq=False)
class CacheEntry:
    l_c: np.ndarray
    W: np.ndarray
    b: np.ndarray


def score_restricted(
    layer: PredictionLayer, h: np.ndarray, l_c, entry: CacheEntry | None = None
) -> RestrictedScores:
    """Scores for the tokens in ``l_c`` only.

    Without a cache entry the k rows are copied out of ``W`` first, which is
    the on-the-fly construction; with one, the prebuilt matrix is used.
    """
    l_c = np.asarray(l_c)
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (layer.d,):
        raise ValueError(f"hidden vector of shape {h.shape}, expected ({layer.d},)")
    if l_c.ndim != 1 or len(l_c) == 0:
        raise ValueError("l_c must be a non-empty 1-d index list")
    if l_c[0] < 0 or l_c[-1] >= layer.vocab_size or (len(l_c) > 1 and not (np.diff(l_c) > 0).all()):
        raise ValueError("l_c must be strictly increasing and within the vocabulary")
    if entry is not None:
        if not np.array_equal(entry.l_c, l_c):
            raise ValueError("cache entry does not match l_c")
        return RestrictedScores(l_c, _matvec(entry.W, h) + entry.b)
    return RestrictedScores(l_c, _matvec(layer.W[l_c], h) + layer.b[l_c])


def softmax(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0 or not np.isfinite(s).all():
        raise ValueError("softmax needs a non-empty finite score vector")
    e = np.exp(s - s.max())
    return e / e.sum()


def softmax_restricted(rs: RestrictedScores) -> np.ndarray:
    return softmax(rs.scores)


# -- strategies and cache ----------------------------------------------------


class Gather(enum.Enum):
    FullBaseline = "NSP"
    OnTheFly = "NSP-G"
    Cached = "NSP-GC"


@dataclass(frozen=True)
class Strategy:
    """How the prediction layer uses the permissible-token list.

    Grammar restriction applies only at steps with fewer than ``threshold``
    permissible tokens; other steps score the whole vocabulary and mask.
    """

    gather: Gather
    threshold: float = math.inf

    @property
    def name(self) -> str:
        if self.gather is Gather.FullBaseline:
            return "NSP"
        t = "all" if math.isinf(self.threshold) else _fmt_threshold(self.threshold)
        return f"{self.gather.value}({t})"

    def __str__(self):
        return self.name


def _fmt_threshold(t) -> str:
    t = int(t)
    if t >= 1000 and 10 ** round(math.log10(t)) == t:
        return f"10^{round(math.log10(t))}"
    return str(t)


_STRATEGY = re.compile(r"^(?:NSP-?)?(G|GC)?(?:\((.+)\))?$", re.IGNORECASE)


def parse_strategy(text: str, threshold=None) -> Strategy:
    """Parse names like ``NSP``, ``G(500)``, ``NSP-GC(10^4)``, ``GC(all)``, ``GC``.

    A bare ``G``/``GC`` takes ``threshold`` (default: all).
    """
    m = _STRATEGY.match(text.strip())
    if not text.strip() or not m or (m.group(1) is None and m.group(2)):
        raise ValueError(f"unknown strategy {text!r}")
    if m.group(1) is None:
        return Strategy(Gather.FullBaseline)
    arg = m.group(2)
    if arg is None:
        t = math.inf if threshold is None else float(threshold)
    elif arg.lower() in ("all", "inf"):
        t = math.inf
    else:
        try:
            t = float(arg.replace("10^", "1e"))
        except ValueError:
            raise ValueError(f"bad threshold in {text!r}") from None
    gather = Gather.Cached if m.group(1).upper() == "GC" else Gather.OnTheFly
    return Strategy(gather, t)


DEFAULT_STRATEGIES = tuple(
    [Strategy(Gather.FullBaseline)]
    + [Strategy(g, t) for g in (Gather.OnTheFly, Gather.Cached) for t in (500, 10**4, math.inf)]
)


@dataclass
class StateCache:
    threshold: float
    entries: dict[int, CacheEntry] = field(default_factory=dict)
    build_seconds: float = 0.0

    @property
    def total_rows(self) -> int:
        return sum(len(e.l_c) for e in self.entries.values())

    @property
    def unique_rows(self) -> int:
        """Rows actually held in memory; states with equal lists share one matrix."""
        return sum(len(e.l_c) for e in {id(e): e for e in self.entries.values()}.values())


def build_cache(layer: PredictionLayer, dfa: Dfa, threshold: float) -> StateCache:
    """Reduced matrices for every state with 1 <= k < threshold.

    States whose permissible lists are identical share one entry.
    """
    if dfa.vocab_size != layer.vocab_size:
        raise ValueError("layer and automaton disagree on vocabulary size")
    t0 = time.perf_counter()
    cache = StateCache(threshold)
    shared: dict[int, CacheEntry] = {}
    for q, l_c in enumerate(dfa.next_lists):
        if 0 < len(l_c) < threshold:
            e = shared.get(id(l_c))
            if e is None:
                e = shared[id(l_c)] = CacheEntry(l_c, layer.W[l_c], layer.b[l_c])
            cache.entries[q] = e
    cache.build_seconds = time.perf_counter() - t0
    return cache


# -- decoding ----------------------------------------------------------------


@dataclass
class DecodeTrace:
    """Emitted tokens (EOS included) with per-step state, softmax width and time.

    ``widths[i]`` is the number of tokens the softmax ran over at step i:
    the permissible count on restricted steps and |V| on full steps.
    """

    tokens: list[int] = field(default_factory=list)
    states: list[int] = field(default_factory=list)
    widths: list[int] = field(default_factory=list)
    ns: list[int] = field(default_factory=list)
    truncated: bool = False

    def to_json(self, vocab: Vocab) -> dict:
        return {
            "tokens": vocab.decode(self.tokens),
            "truncated": self.truncated,
            "steps": [{"state": q, "k": k, "ns": n} for q, k, n in zip(self.states, self.widths, self.ns)],
        }

    @classmethod
    def from_json(cls, obj: dict, vocab: Vocab) -> "DecodeTrace":
        steps = obj["steps"]
        return cls(
            vocab.encode(obj["tokens"]),
            [s["state"] for s in steps],
            [s["k"] for s in steps],
            [s["ns"] for s in steps],
            obj["truncated"],
        )


def greedy_decode(
    dfa: Dfa,
    layer: PredictionLayer,
    provider: HiddenProvider,
    strategy: Strategy,
    max_len: int,
    *,
    eos: int,
    cache: StateCache | None = None,
) -> DecodeTrace:
    """Greedy decoding restricted to the automaton's permissible tokens.

    Every step scores, normalizes and takes the argmax (lowest id on ties),
    then advances the automaton.  Stops after EOS or ``max_len`` tokens; the
    latter sets ``truncated``.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    gather, threshold = strategy.gather, strategy.threshold
    if gather is Gather.FullBaseline:
        threshold = 0
    entries = None
    if gather is Gather.Cached:
        if cache is None or cache.threshold != strategy.threshold:
            raise ValueError(f"{strategy.name} needs a cache built with the same threshold")
        entries = cache.entries

    W, b = layer.W, layer.b
    V = layer.vocab_size
    next_lists = dfa.next_lists
    clock = time.perf_counter_ns
    trace = DecodeTrace()
    state, prev = dfa.start, None
    for _ in range(max_len):
        t0 = clock()
        h = provider.step(prev)
        l_c = next_lists[state]
        k = len(l_c)
        if k == 0:
            raise RuntimeError(f"decoder reached dead state {state}")
        if k >= threshold:
            scores = _matvec(W, h) + b
            softmax(scores)
            tok = int(l_c[np.argmax(scores[l_c])])
            width = V
        else:
            e = entries.get(state) if entries is not None else None
            if e is not None:
                scores = _matvec(e.W, h) + e.b
            else:
                scores = _matvec(W[l_c], h) + b[l_c]
            softmax(scores)
            tok = int(l_c[np.argmax(scores)])
            width = k
        nxt = dfa.pass_token(state, tok)
        trace.ns.append(clock() - t0)
        trace.tokens.append(tok)
        trace.states.append(state)
        trace.widths.append(width)
        state, prev = nxt, tok
        if tok == eos:
            break
    else:
        trace.truncated = True
    return trace
