"""Finite-state superset of the LF language.

Machines are NFAs whose arcs carry *sets* of token ids (or ``None`` for an
epsilon arc), which keeps arcs such as "any enum value" to one arc rather
than tens of thousands.  Submachines are inlined and wired in with epsilon
arcs.  :func:`determinize` partitions the vocabulary into atoms, maximal
groups of tokens that appear on exactly the same arc labels, and runs the
subset construction over atoms instead of individual tokens.

The runtime side is :class:`Dfa`: ``next_tokens`` returns a precomputed
read-only array and ``pass_token`` is two indexed lookups.
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .vocab import (
    AND, DISPLAY, DOT, ENUM_VALUE, EOS, LPAREN, NOT, OPERATORS, OR, RPAREN,
    FieldKind, TokenClass, Vocab,
)

DEFAULT_STATE_CAP = 10**6

Label = frozenset  # of token ids; None marks an epsilon arc


class AutomatonSizeError(RuntimeError):
    """Subset construction exceeded the configured state cap."""


class TransitionError(ValueError):
    def __init__(self, state, token):
        super().__init__(f"no arc for token {token} from state {state}")
        self.state = state
        self.token = token


class Nfa:
    def __init__(self):
        self.arcs: list[list[tuple[frozenset | None, int]]] = []
        self.start = 0
        self.finals: set[int] = set()

    def __len__(self):
        return len(self.arcs)

    def add_state(self, final=False) -> int:
        self.arcs.append([])
        q = len(self.arcs) - 1
        if final:
            self.finals.add(q)
        return q

    def add_arc(self, src: int, label: Iterable[int] | None, dst: int) -> None:
        if label is not None:
            label = label if isinstance(label, frozenset) else frozenset(label)
            if not label:
                return
        self.arcs[src].append((label, dst))

    def embed(self, sub: "Nfa", src: int, dst: int) -> int:
        """Inline a copy of ``sub`` between ``src`` and ``dst``; returns the state offset."""
        off = len(self.arcs)
        for arcs in sub.arcs:
            self.arcs.append([(lab, d + off) for lab, d in arcs])
        self.add_arc(src, None, sub.start + off)
        for f in sub.finals:
            self.add_arc(f + off, None, dst)
        return off

    def closure(self, states: Iterable[int]) -> frozenset:
        seen = set(states)
        stack = list(seen)
        while stack:
            q = stack.pop()
            for lab, d in self.arcs[q]:
                if lab is None and d not in seen:
                    seen.add(d)
                    stack.append(d)
        return frozenset(seen)

    def accepts(self, seq: Sequence[int]) -> bool:
        cur = self.closure([self.start])
        for t in seq:
            cur = self.closure(d for q in cur for lab, d in self.arcs[q] if lab is not None and t in lab)
            if not cur:
                return False
        return bool(cur & self.finals)


@dataclass(frozen=True)
class _Labels:
    lparen: frozenset
    rparen: frozenset
    eq: frozenset
    ops: frozenset
    unordered: frozenset
    ordered: frozenset
    numeric: frozenset
    fields: frozenset
    display: frozenset
    enum_value: frozenset
    values: frozenset
    digits: frozenset
    dot: frozenset
    logical: frozenset
    sigma: frozenset
    by_op: dict


@functools.lru_cache(maxsize=8)
def _labels(vocab: Vocab) -> _Labels:
    def ids(*strings):
        return frozenset(vocab.id(s) for s in strings if s in vocab)

    def cls(c):
        return frozenset(int(i) for i in vocab.ids_of(c))

    special = cls(TokenClass.Special) | ids(EOS)
    return _Labels(
        lparen=ids(LPAREN),
        rparen=ids(RPAREN),
        eq=ids("EQ"),
        ops=ids(*OPERATORS),
        unordered=frozenset(vocab.fields(FieldKind.EnumUnordered)),
        ordered=frozenset(vocab.fields(FieldKind.EnumOrdered)),
        numeric=frozenset(vocab.fields(FieldKind.Numeric)),
        fields=frozenset(vocab.fields()),
        display=ids(DISPLAY),
        enum_value=ids(ENUM_VALUE),
        values=cls(TokenClass.EnumValue),
        digits=cls(TokenClass.Digit),
        dot=ids(DOT),
        logical=ids(AND, OR, NOT),
        sigma=frozenset(range(len(vocab))) - special,
        by_op={op: ids(op) for op in (AND, OR, NOT)},
    )


def build_fpnm(vocab: Vocab) -> Nfa:
    """Digit+ ("." Digit+)?"""
    L = _labels(vocab)
    m = Nfa()
    s0, s1, s2, s3 = m.add_state(), m.add_state(True), m.add_state(), m.add_state(True)
    m.add_arc(s0, L.digits, s1)
    m.add_arc(s1, L.digits, s1)
    m.add_arc(s1, L.dot, s2)
    m.add_arc(s2, L.digits, s3)
    m.add_arc(s3, L.digits, s3)
    return m


def build_rcm(vocab: Vocab) -> Nfa:
    """Relational atoms ``( field op value )``.

    Unordered enum fields only admit EQ; ordered enum and numeric fields take
    any operator.  Enum values are ``enumValue ( V )`` for any value token V.
    """
    L = _labels(vocab)
    m = Nfa()
    start = m.add_state()
    after_paren = m.add_state()
    unord, ordd, num = m.add_state(), m.add_state(), m.add_state()
    enum_op, num_op = m.add_state(), m.add_state()
    ev, ev_paren, ev_val, value_done = (m.add_state() for _ in range(4))
    final = m.add_state(True)

    m.add_arc(start, L.lparen, after_paren)
    m.add_arc(after_paren, L.unordered, unord)
    m.add_arc(after_paren, L.ordered, ordd)
    m.add_arc(after_paren, L.numeric, num)
    m.add_arc(unord, L.eq, enum_op)
    m.add_arc(ordd, L.ops, enum_op)
    m.add_arc(enum_op, L.enum_value, ev)
    m.add_arc(ev, L.lparen, ev_paren)
    m.add_arc(ev_paren, L.values, ev_val)
    m.add_arc(ev_val, L.rparen, value_done)
    m.add_arc(num, L.ops, num_op)
    m.embed(build_fpnm(vocab), num_op, value_done)
    m.add_arc(value_done, L.rparen, final)
    return m


def build_display(vocab: Vocab) -> Nfa:
    L = _labels(vocab)
    m = Nfa()
    s = [m.add_state() for _ in range(4)] + [m.add_state(True)]
    m.add_arc(s[0], L.lparen, s[1])
    m.add_arc(s[1], L.display, s[2])
    m.add_arc(s[2], L.fields, s[3])
    m.add_arc(s[3], L.rparen, s[4])
    return m


def build_complex_slot(vocab: Vocab) -> Nfa:
    """``( {AND,OR,NOT} Sigma* )``: a loose stand-in for any complex constraint.

    Sigma is every LF token except EOS and the special tokens.
    """
    L = _labels(vocab)
    m = Nfa()
    s0, s1, loop, s3 = m.add_state(), m.add_state(), m.add_state(), m.add_state(True)
    m.add_arc(s0, L.lparen, s1)
    m.add_arc(s1, L.logical, loop)
    m.add_arc(loop, L.sigma, loop)
    m.add_arc(loop, L.rparen, s3)
    return m


def union(machines: Sequence[Nfa]) -> Nfa:
    if not machines:
        raise ValueError("union of no machines")
    m = Nfa()
    m.start = m.add_state()
    for sub in machines:
        off = len(m)
        for arcs in sub.arcs:
            m.arcs.append([(lab, d + off) for lab, d in arcs])
        m.add_arc(m.start, None, sub.start + off)
        m.finals.update(f + off for f in sub.finals)
    return m


def build_slot(vocab: Vocab) -> Nfa:
    return union([build_rcm(vocab), build_display(vocab), build_complex_slot(vocab)])


def build_logical_approx(op: str, vocab: Vocab) -> Nfa:
    """Approximation machine for one logical operator.

    NOT takes one slot, OR two, AND two or more (loop back after the second
    slot).  A slot is an atom or a complex-slot approximation, so nesting is
    only followed one level deep.
    """
    if op not in (AND, OR, NOT):
        raise ValueError(f"not a logical operator: {op!r}")
    L = _labels(vocab)
    m = Nfa()
    s0, s1, s2 = m.add_state(), m.add_state(), m.add_state()
    m.add_arc(s0, L.lparen, s1)
    m.add_arc(s1, L.by_op[op], s2)
    n_slots = {NOT: 1, OR: 2, AND: 2}[op]
    prev = s2
    for _ in range(n_slots):
        nxt = m.add_state()
        m.embed(build_slot(vocab), prev, nxt)
        before_last, prev = prev, nxt
    if op == AND:
        m.add_arc(prev, None, before_last)
    final = m.add_state(True)
    m.add_arc(prev, L.rparen, final)
    return m


def _atomize(nfa: Nfa, vocab_size: int):
    """Partition tokens into atoms; returns (atom_of, atom_tokens, label->atoms)."""
    labels: dict[frozenset, int] = {}
    for arcs in nfa.arcs:
        for lab, _ in arcs:
            if lab is not None and lab not in labels:
                labels[lab] = len(labels)
    sig = [0] * vocab_size
    for lab, bit in labels.items():
        mask = 1 << bit
        for t in lab:
            sig[t] |= mask
    atom_index: dict[int, int] = {}
    atom_of = [-1] * vocab_size
    members: list[list[int]] = []
    for t, s in enumerate(sig):
        if s:
            a = atom_index.get(s)
            if a is None:
                a = atom_index[s] = len(members)
                members.append([])
            atom_of[t] = a
            members[a].append(t)
    sigs = list(atom_index)  # insertion order == atom id
    label_atoms = {
        lab: frozenset(a for a, s in enumerate(sigs) if s >> bit & 1) for lab, bit in labels.items()
    }
    atom_tokens = [np.asarray(m, dtype=np.int64) for m in members]
    return atom_of, atom_tokens, label_atoms


def determinize(nfa: Nfa, vocab_size: int, state_cap: int = DEFAULT_STATE_CAP) -> "Dfa":
    """Subset construction; only subsets reachable from the start are built."""
    atom_of, atom_tokens, label_atoms = _atomize(nfa, vocab_size)
    arcs = [[(label_atoms[lab] if lab is not None else None, d) for lab, d in row] for row in nfa.arcs]

    closures: dict[frozenset, frozenset] = {}

    def closure(states):
        key = frozenset(states)
        c = closures.get(key)
        if c is None:
            c = closures[key] = nfa.closure(key)
        return c

    start = closure([nfa.start])
    ids = {start: 0}
    subsets = [start]
    trans: list[dict[int, int]] = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        moves: dict[int, set] = {}
        for q in cur:
            for atoms, d in arcs[q]:
                if atoms is None:
                    continue
                for a in atoms:
                    moves.setdefault(a, set()).add(d)
        row = {}
        for a in sorted(moves):
            tgt = closure(moves[a])
            j = ids.get(tgt)
            if j is None:
                if len(subsets) >= state_cap:
                    raise AutomatonSizeError(f"more than {state_cap} DFA states")
                j = ids[tgt] = len(subsets)
                subsets.append(tgt)
                queue.append(tgt)
            row[a] = j
        trans.append(row)
    finals = frozenset(i for i, s in enumerate(subsets) if s & nfa.finals)
    return Dfa(atom_of, atom_tokens, trans, finals)


class Dfa:
    """Deterministic automaton over token atoms.

    ``trans[q]`` maps atom ids to destination states; ``atom_of[t]`` is the
    atom of token ``t`` (-1 for tokens on no arc).  The start state is 0.
    """

    def __init__(self, atom_of, atom_tokens, trans, finals, start=0):
        self._atom_of = list(atom_of)
        self._atom_tokens = list(atom_tokens)
        self._trans = [dict(r) for r in trans]
        self.finals = frozenset(finals)
        self.start = start
        self.vocab_size = len(self._atom_of)
        shared: dict[bytes, np.ndarray] = {}
        lists = []
        for row in self._trans:
            if row:
                arr = np.sort(np.concatenate([self._atom_tokens[a] for a in row]))
            else:
                arr = np.empty(0, dtype=np.int64)
            arr = shared.setdefault(arr.tobytes(), arr)
            arr.flags.writeable = False
            lists.append(arr)
        self.next_lists: list[np.ndarray] = lists

    @property
    def n_states(self) -> int:
        return len(self._trans)

    def next_tokens(self, state: int) -> np.ndarray:
        return self.next_lists[state]

    def pass_token(self, state: int, token: int) -> int:
        if token < 0:
            raise TransitionError(state, token)
        try:
            return self._trans[state][self._atom_of[token]]
        except (KeyError, IndexError):
            raise TransitionError(state, token) from None

    def run(self, seq: Iterable[int], state: int | None = None) -> int:
        q = self.start if state is None else state
        for t in seq:
            q = self.pass_token(q, t)
        return q

    def accepts(self, seq: Iterable[int]) -> bool:
        try:
            return self.run(seq) in self.finals
        except TransitionError:
            return False

    def transitions(self, state: int) -> dict[int, int]:
        """Token-level view of one state's arcs."""
        out = {}
        for a, d in self._trans[state].items():
            out.update(dict.fromkeys(self._atom_tokens[a].tolist(), d))
        return out

    def augment_eos(self, eos: int) -> "Dfa":
        """Add a fresh accept sink reached by ``eos`` from every final state."""
        if self._atom_of[eos] != -1:
            raise ValueError("EOS already labels an arc")
        atom_of = list(self._atom_of)
        atom_of[eos] = len(self._atom_tokens)
        atom_tokens = self._atom_tokens + [np.asarray([eos], dtype=np.int64)]
        sink = len(self._trans)
        trans = [dict(r) for r in self._trans] + [{}]
        for q in self.finals:
            trans[q][atom_of[eos]] = sink
        return Dfa(atom_of, atom_tokens, trans, {sink}, self.start)

    @classmethod
    def from_token_maps(cls, maps: Sequence[dict[int, int]], finals, vocab_size: int, start=0) -> "Dfa":
        sigs: list[list] = [[] for _ in range(vocab_size)]
        for q, m in enumerate(maps):
            for t, d in m.items():
                sigs[t].append((q, d))
        atom_index: dict[tuple, int] = {}
        atom_of = [-1] * vocab_size
        members: list[list[int]] = []
        for t, s in enumerate(sigs):
            if s:
                a = atom_index.setdefault(tuple(s), len(members))
                if a == len(members):
                    members.append([])
                atom_of[t] = a
                members[a].append(t)
        trans = [{atom_of[t]: d for t, d in m.items()} for m in maps]
        atom_tokens = [np.asarray(m, dtype=np.int64) for m in members]
        return cls(atom_of, atom_tokens, trans, finals, start)

    # -- dump format -------------------------------------------------------

    def dump_lines(self, vocab: Vocab) -> Iterable[str]:
        for q in range(self.n_states):
            yield f"state {q}{' final' if q in self.finals else ''}\n"
            for t, d in sorted(self.transitions(q).items()):
                yield f"  {vocab.string(t)} -> {d}\n"

    def dumps(self, vocab: Vocab) -> str:
        return "".join(self.dump_lines(vocab))

    @classmethod
    def loads(cls, text: str, vocab: Vocab) -> "Dfa":
        maps: list[dict[int, int]] = []
        finals = set()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if line.startswith("state "):
                parts = line.split()
                if int(parts[1]) != len(maps) or parts[2:] not in ([], ["final"]):
                    raise ValueError(f"line {lineno}: malformed state header")
                if parts[2:]:
                    finals.add(len(maps))
                maps.append({})
            elif line.startswith("  ") and maps:
                tok, arrow, dst = line.split()
                if arrow != "->":
                    raise ValueError(f"line {lineno}: malformed arc")
                maps[-1][vocab.id(tok)] = int(dst)
            elif line.strip():
                raise ValueError(f"line {lineno}: unexpected content")
        return cls.from_token_maps(maps, finals, len(vocab))


def build_m_lf(vocab: Vocab, state_cap: int = DEFAULT_STATE_CAP) -> Dfa:
    """The full LF machine: atoms plus the three approximation machines, with EOS."""
    nfa = build_m_lf_nfa(vocab)
    return determinize(nfa, len(vocab), state_cap).augment_eos(vocab.id(EOS))


def build_m_lf_nfa(vocab: Vocab) -> Nfa:
    return union([
        build_rcm(vocab),
        build_display(vocab),
        build_logical_approx(NOT, vocab),
        build_logical_approx(AND, vocab),
        build_logical_approx(OR, vocab),
    ])
