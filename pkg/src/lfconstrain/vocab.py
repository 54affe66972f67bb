"""LF token inventory.

A :class:`Vocab` is an immutable, dense table of token strings with a token
class per entry and a :class:`FieldKind` per field token.  Ids are row
indices of the prediction layer, so they are contiguous from zero.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

# Ids are stored in int32 arrays throughout (next-token lists, caches).
MAX_VOCAB_SIZE = 2**31 - 1


class TokenClass(enum.Enum):
    Structural = "Structural"
    Operator = "Operator"
    NumField = "NumField"
    EnumField = "EnumField"
    EnumValue = "EnumValue"
    Digit = "Digit"
    Special = "Special"


class FieldKind(enum.Enum):
    Numeric = "Numeric"
    EnumOrdered = "EnumOrdered"
    EnumUnordered = "EnumUnordered"


LPAREN = "("
RPAREN = ")"
AND = "AND"
OR = "OR"
NOT = "NOT"
DISPLAY = "display"
ENUM_VALUE = "enumValue"
DOT = "."
EOS = "EOS"

STRUCTURAL = (LPAREN, RPAREN, AND, OR, NOT, DISPLAY, ENUM_VALUE, DOT, EOS)
OPERATORS = ("EQ", "NEQ", "LS", "GR", "LE", "GE")
DIGITS = tuple("0123456789")
SPECIALS = ("<pad>", "<unk>")

FIXED_TOKENS = (
    [(s, TokenClass.Structural) for s in STRUCTURAL]
    + [(s, TokenClass.Operator) for s in OPERATORS]
    + [(s, TokenClass.Digit) for s in DIGITS]
    + [(s, TokenClass.Special) for s in SPECIALS]
)
N_FIXED = len(FIXED_TOKENS)  # 27


class VocabError(ValueError):
    pass


class UnknownTokenError(KeyError):
    """Raised for a token string or id that is not in the vocabulary."""

    def __init__(self, key):
        super().__init__(key)
        self.key = key

    def __str__(self):
        return f"unknown token: {self.key!r}"


class NotAFieldError(VocabError):
    def __init__(self, token_id, cls):
        super().__init__(f"token {token_id} is {cls.value}, not a field")
        self.token_id = token_id


class TokenInfo(NamedTuple):
    id: int
    string: str
    cls: TokenClass


@dataclass(frozen=True)
class VocabSpec:
    """Size parameters for :func:`build_synthetic_vocab`."""

    n_num_fields: int = 300
    n_enum_fields: int = 700
    n_enum_values_total: int = 55182
    ordered_enum_fraction: float = 0.3
    seed: int = 7

    @property
    def total(self) -> int:
        return N_FIXED + self.n_num_fields + self.n_enum_fields + self.n_enum_values_total

    @classmethod
    def scaled(cls, total: int, seed: int = 7, ordered_enum_fraction: float = 0.3) -> "VocabSpec":
        """Spec with the default field/value proportions and the given |V|."""
        if total < N_FIXED:
            raise VocabError(f"total {total} is below the {N_FIXED} fixed tokens")
        base = cls()
        free = total - N_FIXED
        base_free = base.total - N_FIXED
        n_num = round(base.n_num_fields * free / base_free)
        n_enum = round(base.n_enum_fields * free / base_free)
        return cls(n_num, n_enum, free - n_num - n_enum, ordered_enum_fraction, seed)


@dataclass(frozen=True, eq=False)
class Vocab:
    """Immutable token table.

    ``field_values`` records which enum values were generated for which enum
    field; it is informational (used by the sampler) and is not persisted by
    :meth:`write`.
    """

    tokens: tuple[tuple[str, TokenClass], ...]
    field_meta: dict[int, FieldKind]
    field_values: dict[int, tuple[int, ...]] = field(default_factory=dict)
    _index: dict[str, int] = field(init=False, repr=False)
    _by_class: dict[TokenClass, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.tokens) > MAX_VOCAB_SIZE:
            raise VocabError(f"vocabulary of {len(self.tokens)} tokens overflows the id domain")
        index = {}
        for i, (s, _) in enumerate(self.tokens):
            if s in index:
                raise VocabError(f"duplicate token string {s!r}")
            if not s or any(c.isspace() for c in s):
                raise VocabError(f"token string {s!r} is empty or contains whitespace")
            index[s] = i
        for s, cls in FIXED_TOKENS:
            if s in index and self.tokens[index[s]][1] is not cls:
                raise VocabError(f"fixed token {s!r} must have class {cls.value}")
        by_class = {c: [] for c in TokenClass}
        for i, (_, cls) in enumerate(self.tokens):
            by_class[cls].append(i)
            if cls is TokenClass.NumField:
                if self.field_meta.get(i) is not FieldKind.Numeric:
                    raise VocabError(f"num field {i} must map to Numeric")
            elif cls is TokenClass.EnumField:
                if self.field_meta.get(i) not in (FieldKind.EnumOrdered, FieldKind.EnumUnordered):
                    raise VocabError(f"enum field {i} needs an enum FieldKind")
            elif i in self.field_meta:
                raise VocabError(f"token {i} is not a field but has a FieldKind")
        object.__setattr__(self, "_index", index)
        object.__setattr__(
            self, "_by_class", {c: np.asarray(v, dtype=np.int64) for c, v in by_class.items()}
        )

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, key):
        return key in self._index

    def __eq__(self, other):
        if not isinstance(other, Vocab):
            return NotImplemented
        return self.tokens == other.tokens and self.field_meta == other.field_meta

    __hash__ = object.__hash__

    def id(self, s: str) -> int:
        try:
            return self._index[s]
        except KeyError:
            raise UnknownTokenError(s) from None

    def get(self, s: str) -> int | None:
        """Id of ``s``, or None when the vocabulary lacks it (micro vocabularies)."""
        return self._index.get(s)

    def string(self, i: int) -> str:
        if not 0 <= i < len(self.tokens):
            raise UnknownTokenError(i)
        return self.tokens[i][0]

    def token_class(self, i: int) -> TokenClass:
        if not 0 <= i < len(self.tokens):
            raise UnknownTokenError(i)
        return self.tokens[i][1]

    def ids_of(self, cls: TokenClass) -> np.ndarray:
        return self._by_class[cls]

    def fields(self, *kinds: FieldKind) -> list[int]:
        """Field ids, optionally restricted to the given kinds, ascending."""
        if not kinds:
            return sorted(self.field_meta)
        return sorted(i for i, k in self.field_meta.items() if k in kinds)

    def encode(self, strings: Iterable[str]) -> list[int]:
        return [self.id(s) for s in strings]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.string(int(i)) for i in ids]

    # -- file format -------------------------------------------------------

    def dumps(self) -> str:
        lines = []
        for i, (s, cls) in enumerate(self.tokens):
            kind = self.field_meta.get(i)
            lines.append(f"{s}\t{cls.value}\t{kind.value if kind else '-'}\n")
        return "".join(lines)

    @classmethod
    def loads(cls, text: str) -> "Vocab":
        tokens, meta = [], {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            parts = line.split("\t")
            if len(parts) != 3:
                raise VocabError(f"line {lineno}: expected 3 tab-separated columns")
            s, c, k = parts
            try:
                tokens.append((s, TokenClass(c)))
                if k != "-":
                    meta[len(tokens) - 1] = FieldKind(k)
            except ValueError as e:
                raise VocabError(f"line {lineno}: {e}") from None
        return cls(tuple(tokens), meta)

    def write(self, path) -> None:
        Path(path).write_bytes(self.dumps().encode("utf-8"))

    @classmethod
    def read(cls, path) -> "Vocab":
        return cls.loads(Path(path).read_bytes().decode("utf-8"))


def lookup(vocab: Vocab, key: str | int) -> TokenInfo:
    """Resolve a token string or id to ``(id, string, class)``."""
    if isinstance(key, str):
        i = vocab.id(key)
    else:
        i = int(key)
    return TokenInfo(i, vocab.string(i), vocab.token_class(i))


def field_kind(vocab: Vocab, token: int) -> FieldKind:
    cls = vocab.token_class(token)
    if cls not in (TokenClass.NumField, TokenClass.EnumField):
        raise NotAFieldError(token, cls)
    return vocab.field_meta[token]


def build_synthetic_vocab(spec: VocabSpec) -> Vocab:
    """Generate a vocabulary of ``spec.total`` tokens.

    Layout: the fixed tokens, then numeric fields, enum fields and enum
    values.  Value ``i`` belongs to enum field ``i % n_enum_fields``.
    Exactly ``round(ordered_enum_fraction * n_enum_fields)`` enum fields are
    ordered, chosen by a ``random.Random(seed)`` draw.
    """
    counts = (spec.n_num_fields, spec.n_enum_fields, spec.n_enum_values_total)
    if any(c < 0 for c in counts):
        raise VocabError(f"negative counts in {spec}")
    if not 0.0 <= spec.ordered_enum_fraction <= 1.0:
        raise VocabError("ordered_enum_fraction must lie in [0, 1]")
    if spec.total > MAX_VOCAB_SIZE:
        raise VocabError(f"{spec.total} tokens overflow the id domain")
    if spec.n_enum_values_total and not spec.n_enum_fields:
        raise VocabError("enum values need at least one enum field")

    rng = random.Random(spec.seed)
    n_ordered = round(spec.ordered_enum_fraction * spec.n_enum_fields)
    ordered = set(rng.sample(range(spec.n_enum_fields), n_ordered))

    tokens = list(FIXED_TOKENS)
    meta: dict[int, FieldKind] = {}
    for i in range(spec.n_num_fields):
        meta[len(tokens)] = FieldKind.Numeric
        tokens.append((f"FLD_NUM_{i}", TokenClass.NumField))
    enum_ids = []
    for i in range(spec.n_enum_fields):
        kind = FieldKind.EnumOrdered if i in ordered else FieldKind.EnumUnordered
        meta[len(tokens)] = kind
        enum_ids.append(len(tokens))
        tokens.append((f"FLD_ENUM_{i}", TokenClass.EnumField))
    values: dict[int, list[int]] = {f: [] for f in enum_ids}
    for i in range(spec.n_enum_values_total):
        values[enum_ids[i % spec.n_enum_fields]].append(len(tokens))
        tokens.append((f"VAL_{i}", TokenClass.EnumValue))
    return Vocab(tuple(tokens), meta, {f: tuple(v) for f, v in values.items()})


# Field and value names taken from the EQS examples; small enough to read
# automaton dumps and sampled LFs by eye.
_SAMPLE_FIELDS = {
    "FLD_INDEX": (FieldKind.EnumUnordered, ["IDX_SP500", "IDX_FTSE100", "IDX_DAX"]),
    "FLD_DOMICILE": (
        FieldKind.EnumUnordered,
        ["COU_GERMANY", "COU_FRANCE", "COU_WESTERN_EUROPE", "COU_NORTH_AMERICA"],
    ),
    "FLD_EQS_SECTOR": (FieldKind.EnumUnordered, ["SEC_GICS_STEEL", "SEC_GICS_TECH", "SEC_GICS_AUTO"]),
    "FLD_EXCHANGE": (FieldKind.EnumUnordered, ["EXC_LSE", "EXC_OSLO", "EXC_NYSE"]),
    "FLD_RATING_FITCH_LT": (FieldKind.EnumOrdered, ["RTG_AAA", "RTG_AA", "RTG_B_PLUS"]),
    "FLD_RETURN_ON_CAP": (FieldKind.Numeric, []),
    "FLD_MKT_CAP": (FieldKind.Numeric, []),
    "FLD_SALES_REV_TURN": (FieldKind.Numeric, []),
    "FLD_PRICE": (FieldKind.Numeric, []),
    "FLD_PB_RATIO": (FieldKind.Numeric, []),
}


def eqs_sample_vocab() -> Vocab:
    """A small hand-named vocabulary with realistic EQS field and value names."""
    tokens = list(FIXED_TOKENS)
    meta, values = {}, {}
    pending = []
    for name, (kind, vals) in _SAMPLE_FIELDS.items():
        meta[len(tokens)] = kind
        cls = TokenClass.NumField if kind is FieldKind.Numeric else TokenClass.EnumField
        if vals:
            pending.append((len(tokens), vals))
        tokens.append((name, cls))
    for fid, vals in pending:
        values[fid] = tuple(range(len(tokens), len(tokens) + len(vals)))
        tokens.extend((v, TokenClass.EnumValue) for v in vals)
    return Vocab(tuple(tokens), meta, values)


def micro_vocab(strings: Iterable[str], kinds: dict[str, FieldKind] | None = None) -> Vocab:
    """Build a vocabulary from bare strings.

    Fixed tokens get their usual classes; names listed in ``kinds`` become
    fields; every other string is an enum value.
    """
    kinds = kinds or {}
    fixed = dict(FIXED_TOKENS)
    tokens, meta = [], {}
    for s in strings:
        if s in fixed:
            tokens.append((s, fixed[s]))
        elif s in kinds:
            meta[len(tokens)] = kinds[s]
            num = kinds[s] is FieldKind.Numeric
            tokens.append((s, TokenClass.NumField if num else TokenClass.EnumField))
        else:
            tokens.append((s, TokenClass.EnumValue))
    return Vocab(tuple(tokens), meta)
