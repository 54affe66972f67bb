"""Reference checkers that share no code with the package's parsers."""

from lfconstrain.vocab import FieldKind, TokenClass

_OPS = {"EQ", "NEQ", "LS", "GR", "LE", "GE"}


def _category(vocab, t):
    s, cls = vocab.tokens[t]
    if cls is TokenClass.Digit:
        return "D"
    if cls is TokenClass.EnumValue:
        return "VAL"
    if cls is TokenClass.Operator:
        return "EQ" if s == "EQ" else "OP"
    if cls in (TokenClass.NumField, TokenClass.EnumField):
        return {FieldKind.Numeric: "NF", FieldKind.EnumOrdered: "OF",
                FieldKind.EnumUnordered: "UF"}[vocab.field_meta[t]]
    return s


def _rewrite(cats, pattern, repl):
    """Replace every occurrence of a fixed-length pattern, left to right."""
    out, i, changed = [], 0, False
    n = len(pattern)
    while i < len(cats):
        window = cats[i:i + n]
        if len(window) == n and all(c in p for c, p in zip(window, pattern)):
            out.append(repl)
            i += n
            changed = True
        else:
            out.append(cats[i])
            i += 1
    return out, changed


def reduce_accepts(vocab, seq) -> bool:
    """Bottom-up reduction: collapse innermost constructs until one constraint is left."""
    cats = [_category(vocab, t) for t in seq]
    # numbers: D+ (. D+)?
    out, i = [], 0
    while i < len(cats):
        if cats[i] == "D":
            j = i
            while j < len(cats) and cats[j] == "D":
                j += 1
            if j + 1 < len(cats) and cats[j] == "." and cats[j + 1] == "D":
                j += 1
                while j < len(cats) and cats[j] == "D":
                    j += 1
            out.append("NUM")
            i = j
        else:
            out.append(cats[i])
            i += 1
    cats, _ = _rewrite(out, [{"enumValue"}, {"("}, {"VAL"}, {")"}], "E")
    fields = {"NF", "OF", "UF"}
    atoms = [
        [{"("}, {"UF"}, {"EQ"}, {"E"}, {")"}],
        [{"("}, {"OF"}, {"EQ", "OP"}, {"E"}, {")"}],
        [{"("}, {"NF"}, {"EQ", "OP"}, {"NUM"}, {")"}],
        [{"("}, {"display"}, fields, {")"}],
    ]
    for pat in atoms:
        cats, _ = _rewrite(cats, pat, "C")
    changed = True
    while changed:
        changed = False
        for pat in ([{"("}, {"NOT"}, {"C"}, {")"}], [{"("}, {"OR"}, {"C"}, {"C"}, {")"}]):
            cats, ch = _rewrite(cats, pat, "C")
            changed |= ch
        # ( AND C C C* )
        out, i = [], 0
        while i < len(cats):
            if cats[i:i + 4] == ["(", "AND", "C", "C"]:
                j = i + 4
                while j < len(cats) and cats[j] == "C":
                    j += 1
                if j < len(cats) and cats[j] == ")":
                    out.append("C")
                    i = j + 1
                    changed = True
                    continue
            out.append(cats[i])
            i += 1
        cats = out
    return cats == ["C"]


def lockstep_disagreements(nfa, dfa, alphabet, max_len):
    """Compare NFA and DFA acceptance on every sequence over ``alphabet`` up to ``max_len``.

    Walks both machines together; once the NFA subset is empty and the DFA
    has no arc, every extension is rejected by both, so the branch is cut.
    NFA steps are memoized per (subset, token).  Returns (disagreements,
    number of live prefixes visited).
    """
    step_cache = {}

    def nfa_step(cur, t):
        key = (cur, t)
        nxt = step_cache.get(key)
        if nxt is None:
            nxt = step_cache[key] = nfa.closure(
                d for q in cur for lab, d in nfa.arcs[q] if lab is not None and t in lab
            )
        return nxt

    bad = []
    visited = 0
    stack = [((), nfa.closure([nfa.start]), dfa.start)]
    while stack:
        seq, cur, q = stack.pop()
        visited += 1
        n_acc = bool(cur & nfa.finals)
        d_acc = q is not None and q in dfa.finals
        if n_acc != d_acc or (not cur) != (q is None):
            bad.append(seq)
        if len(seq) == max_len or (not cur and q is None):
            continue
        for t in alphabet:
            nxt = nfa_step(cur, t)
            try:
                q2 = dfa.pass_token(q, t) if q is not None else None
            except Exception:
                q2 = None
            if nxt or q2 is not None:
                stack.append((seq + (t,), nxt, q2))
            # both dead: every extension rejected by both machines
    return bad, visited
