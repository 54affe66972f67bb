"""Grammar-constrained greedy decoding over a finite-state LF superset."""

from .automata import Dfa, Nfa, TransitionError, build_m_lf, determinize, union
from .decode import (
    DEFAULT_STRATEGIES, Gather, PredictionLayer, StateCache, Strategy, build_cache,
    greedy_decode, init_layer, parse_strategy, score_full, score_restricted, softmax_restricted,
)
from .grammar import enumerate_lfs, format_lf, parse_lf, sample_lf, validate_lf
from .scorer import HiddenProvider, init_provider
from .vocab import FieldKind, TokenClass, Vocab, VocabSpec, build_synthetic_vocab, field_kind, lookup

__version__ = "0.1.0"
