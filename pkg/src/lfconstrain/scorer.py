"""Deterministic stand-in for the decoder RNN.

``h <- tanh(A h + E[prev])`` gives each "query" a reproducible sequence of
hidden vectors that depends on the tokens emitted so far, at O(d^2) per step
regardless of vocabulary size.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from . import _lcg


class HiddenProvider:
    """One decoding session's hidden state.

    ``E`` has one row per vocabulary token plus a final reserved row used
    for the start-of-sequence step.
    """

    def __init__(self, A: np.ndarray, E: np.ndarray, h0: np.ndarray):
        A, E, h0 = (np.asarray(x, dtype=np.float64) for x in (A, E, h0))
        d = h0.shape[0]
        if A.shape != (d, d) or E.ndim != 2 or E.shape[1] != d:
            raise ValueError(f"inconsistent shapes A{A.shape} E{E.shape} h{h0.shape}")
        self.A, self.E = A, E
        self.h = h0.copy()
        self.vocab_size = E.shape[0] - 1

    @property
    def d(self) -> int:
        return self.h.shape[0]

    def step(self, prev_token: int | None) -> np.ndarray:
        """Advance on the previously emitted token (None for the first step)."""
        if prev_token is None:
            row = self.vocab_size
        else:
            row = int(prev_token)
            if not 0 <= row < self.vocab_size:
                raise IndexError(f"token {prev_token} out of range")
        self.h = np.tanh(self.A @ self.h + self.E[row])
        return self.h


@functools.lru_cache(maxsize=4)
def _recurrence(vocab_size: int, d: int, seed: int):
    g = _lcg.Lcg64(_lcg.derive(seed, _lcg.PROVIDER))
    # Gain ~1.3 puts the tanh recurrence in its chaotic regime: trajectories
    # keep depending on the query's h0 and do not settle into short token
    # cycles (which otherwise trap greedy decoding inside digit loops).
    s = 1.3 * math.sqrt(3.0 / d)
    A = g.uniform(-s, s, (d, d))
    E = g.uniform(-0.25, 0.25, (vocab_size + 1, d))
    A.flags.writeable = False
    E.flags.writeable = False
    return A, E


def init_provider(vocab_size: int, d: int, seed: int, query_id: int) -> HiddenProvider:
    if vocab_size < 1 or d < 1:
        raise ValueError("vocab_size and d must be positive")
    A, E = _recurrence(vocab_size, d, seed)
    g = _lcg.Lcg64(_lcg.derive(seed, _lcg.QUERY, query_id))
    h0 = np.tanh(g.uniform(-2.0, 2.0, d))
    return HiddenProvider(A, E, h0)
