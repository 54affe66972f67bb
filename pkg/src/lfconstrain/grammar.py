"""Ground-truth grammar of the LF language.

The grammar, with terminals resolved against a :class:`~lfconstrain.vocab.Vocab`::

    LF         -> Constraint
    Constraint -> RelAtomic | Display | Not | And | Or
    RelAtomic  -> "(" UnorderedEnumField "EQ" EnumVal ")"
                | "(" OrderedEnumField Op EnumVal ")"
                | "(" NumField Op Number ")"
    Op         -> EQ | NEQ | LS | GR | LE | GE
    EnumVal    -> "enumValue" "(" EnumValueToken ")"
    Number     -> Digit+ ("." Digit+)?
    Display    -> "(" "display" Field ")"
    Not        -> "(" "NOT" Constraint ")"
    And        -> "(" "AND" Constraint Constraint+ ")"
    Or         -> "(" "OR" Constraint Constraint ")"

Every "(" is followed by a token that selects the production, so a single
left-to-right pass decides membership and finds the first bad token.
Field/value compatibility is not checked here.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

from .vocab import (
    AND, DISPLAY, DOT, ENUM_VALUE, EOS, LPAREN, NOT, OPERATORS, OR, RPAREN,
    FieldKind, TokenClass, Vocab,
)

DEFAULT_ENUMERATION_CAP = 2 * 10**9
MAX_DIGITS = 6


@dataclass(frozen=True)
class ValidationResult:
    accepted: bool
    depth: int | None = None  # constraint nesting depth when accepted
    position: int | None = None  # first offending index when rejected

    def __bool__(self):
        return self.accepted


class _Reject(Exception):
    def __init__(self, pos):
        self.pos = pos


class _Parser:
    def __init__(self, vocab: Vocab, seq: Sequence[int]):
        self.v = vocab
        self.seq = seq
        self.pos = 0
        g = vocab.get
        self.lp, self.rp = g(LPAREN), g(RPAREN)
        self.and_, self.or_, self.not_ = g(AND), g(OR), g(NOT)
        self.display, self.enum_value, self.dot = g(DISPLAY), g(ENUM_VALUE), g(DOT)
        self.eq = g("EQ")
        self.ops = {g(o) for o in OPERATORS} - {None}

    def peek(self):
        return self.seq[self.pos] if self.pos < len(self.seq) else None

    def cls(self, t):
        return self.v.tokens[t][1] if t is not None else None

    def expect(self, ok):
        t = self.peek()
        if t is None or not ok(t):
            raise _Reject(self.pos)
        self.pos += 1
        return t

    def constraint(self) -> int:
        self.expect(lambda t: t == self.lp)
        head = self.expect(lambda t: (
            t in (self.and_, self.or_, self.not_, self.display)
            or self.cls(t) in (TokenClass.NumField, TokenClass.EnumField)
        ))
        if head == self.not_:
            depth = 1 + self.constraint()
        elif head == self.or_:
            depth = 1 + max(self.constraint(), self.constraint())
        elif head == self.and_:
            depth = max(self.constraint(), self.constraint())
            while self.peek() == self.lp:
                depth = max(depth, self.constraint())
            depth += 1
        elif head == self.display:
            self.expect(lambda t: self.cls(t) in (TokenClass.NumField, TokenClass.EnumField))
            depth = 1
        else:
            kind = self.v.field_meta[head]
            if kind is FieldKind.EnumUnordered:
                self.expect(lambda t: t == self.eq)
            else:
                self.expect(lambda t: t in self.ops)
            if kind is FieldKind.Numeric:
                self.number()
            else:
                self.expect(lambda t: t == self.enum_value)
                self.expect(lambda t: t == self.lp)
                self.expect(lambda t: self.cls(t) is TokenClass.EnumValue)
                self.expect(lambda t: t == self.rp)
            depth = 1
        self.expect(lambda t: t == self.rp)
        return depth

    def number(self):
        digit = lambda t: self.cls(t) is TokenClass.Digit  # noqa: E731
        self.expect(digit)
        while self.peek() is not None and digit(self.peek()):
            self.pos += 1
        if self.peek() is not None and self.peek() == self.dot:
            self.pos += 1
            self.expect(digit)
            while self.peek() is not None and digit(self.peek()):
                self.pos += 1


def validate_lf(vocab: Vocab, seq: Sequence[int]) -> ValidationResult:
    """Decide whether ``seq`` (without EOS) is a well-formed LF.

    On rejection ``position`` is the index of the first token that no valid
    LF could have there; it equals ``len(seq)`` when ``seq`` is a proper
    prefix of some valid LF.
    """
    p = _Parser(vocab, seq)
    try:
        depth = p.constraint()
        if p.pos != len(seq):
            raise _Reject(p.pos)
    except _Reject as r:
        return ValidationResult(False, position=r.pos)
    except RecursionError:
        return ValidationResult(False, position=p.pos)
    return ValidationResult(True, depth=depth)


# -- sampling ----------------------------------------------------------------


class _Sampler:
    def __init__(self, vocab: Vocab, rng: random.Random):
        self.v, self.rng = vocab, rng
        self.fields = vocab.fields()
        self.values = [int(i) for i in vocab.ids_of(TokenClass.EnumValue)]
        self.digits = [int(i) for i in vocab.ids_of(TokenClass.Digit)]
        # fields that can head a relational atom in this vocabulary
        self.rel_fields = [
            f for f in self.fields
            if (vocab.field_meta[f] is FieldKind.Numeric and self.digits)
            or (vocab.field_meta[f] is not FieldKind.Numeric and self.values)
        ]
        self.ops = [vocab.id(o) for o in OPERATORS if o in vocab]
        self.id = vocab.id

    def constraint(self, depth: int) -> list[int]:
        r = self.rng
        if depth > 1 and r.random() < 0.5:
            op = r.choice((NOT, AND, OR))
            if op == NOT:
                n = 1
            elif op == OR:
                n = 2
            else:
                n = 2 + min(int(r.expovariate(1.0)), 2)
            out = [self.id(LPAREN), self.id(op)]
            for _ in range(n):
                out += self.constraint(r.randint(1, depth - 1))
            return out + [self.id(RPAREN)]
        if not self.rel_fields or r.random() < 0.2:
            return [self.id(LPAREN), self.id(DISPLAY), r.choice(self.fields), self.id(RPAREN)]
        f = r.choice(self.rel_fields)
        kind = self.v.field_meta[f]
        op = self.id("EQ") if kind is FieldKind.EnumUnordered else r.choice(self.ops)
        out = [self.id(LPAREN), f, op]
        if kind is FieldKind.Numeric:
            out += [r.choice(self.digits) for _ in range(r.randint(1, MAX_DIGITS))]
            if DOT in self.v and r.random() < 0.5:
                out.append(self.id(DOT))
                out += [r.choice(self.digits) for _ in range(r.randint(1, MAX_DIGITS))]
        else:
            vals = self.v.field_values.get(f) or self.values
            out += [self.id(ENUM_VALUE), self.id(LPAREN), r.choice(vals), self.id(RPAREN)]
        return out + [self.id(RPAREN)]


def sample_lf(vocab: Vocab, rng_seed: int, max_depth: int) -> list[int]:
    """Draw a random valid LF of nesting depth at most ``max_depth``."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if not vocab.fields():
        raise ValueError("vocabulary has no fields to build constraints from")
    return _Sampler(vocab, random.Random(rng_seed)).constraint(max_depth)


# -- enumeration -------------------------------------------------------------


def enumerate_lfs(
    vocab: Vocab, max_len: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[list[int]]:
    """Yield every accepted sequence of length <= ``max_len``.

    The search covers the full product space over all non-EOS tokens but
    skips extensions of prefixes that :func:`validate_lf` has already
    rejected before their last token; such extensions are rejected at the
    same position, so nothing accepted is lost.
    """
    alphabet = [i for i, (s, _) in enumerate(vocab.tokens) if s != EOS]
    budget = sum(len(alphabet) ** n for n in range(max_len + 1))
    if budget > cap:
        raise ValueError(f"enumeration space {budget} exceeds cap {cap}")

    def walk(prefix):
        for t in alphabet:
            seq = prefix + [t]
            r = validate_lf(vocab, seq)
            if r.accepted:
                yield seq
            elif r.position < len(seq):
                continue
            if len(seq) < max_len:
                yield from walk(seq)

    if max_len >= 1:
        yield from walk([])


def enumerate_lfs_naive(vocab: Vocab, max_len: int) -> Iterator[list[int]]:
    """Filter the whole product space; only for very small budgets."""
    alphabet = [i for i, (s, _) in enumerate(vocab.tokens) if s != EOS]
    for n in range(1, max_len + 1):
        for seq in product(alphabet, repeat=n):
            if validate_lf(vocab, seq).accepted:
                yield list(seq)


# -- text format -------------------------------------------------------------

_CHUNK = re.compile(r"[()]|[^\s()]+")
_NUMERIC = re.compile(r"[0-9.]+")


def tokenize(text: str) -> list[str]:
    """Split LF text into token strings.

    Parentheses are always separate tokens, so ``enumValue(IDX_SP500)`` and
    ``enumValue ( IDX_SP500 )`` read the same.  Bare numerals such as
    ``3.14`` split into per-character digit and dot tokens.
    """
    out = []
    for chunk in _CHUNK.findall(text):
        if _NUMERIC.fullmatch(chunk):
            out.extend(chunk)
        else:
            out.append(chunk)
    return out


def parse_lf(vocab: Vocab, text: str) -> list[int]:
    return vocab.encode(tokenize(text))


def format_lf(vocab: Vocab, seq: Sequence[int]) -> str:
    return " ".join(vocab.decode(seq))


def split_lfs(tokens: Sequence[str]) -> list[list[str]]:
    """Cut a token stream into top-level expressions at balanced parentheses."""
    out, cur, depth = [], [], 0
    for t in tokens:
        cur.append(t)
        if t == LPAREN:
            depth += 1
        elif t == RPAREN:
            depth -= 1
        if depth <= 0:
            out.append(cur)
            cur, depth = [], 0
    if cur:
        out.append(cur)
    return out
