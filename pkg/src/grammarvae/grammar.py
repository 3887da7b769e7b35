"""Context-free grammars: loading, tokenization, parsing, rule sequences, masks.

A grammar is an ordered list of productions; the order defines the rule
indexing used everywhere else (one-hot rows, logit columns, mask vectors).
A synthetic "no-op" padding rule is appended as the last rule under the
reserved pseudo-nonterminal ``<pad>`` so that padded timesteps participate
in masking uniformly.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

TERMINAL = "terminal"
NONTERMINAL = "nonterminal"
PAD_LHS = "<pad>"


class GrammarError(ValueError):
    """Malformed grammar text."""


class ParseError(ValueError):
    """String is not in the grammar's language."""


class TokenizeError(ParseError):
    """No terminal lexeme matches at some position."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class DerivationError(ValueError):
    """Rule sequence does not replay to a complete derivation."""


@dataclass(frozen=True)
class Symbol:
    kind: str
    text: str

    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    def __repr__(self) -> str:
        return f"'{self.text}'" if self.kind == TERMINAL else self.text


def terminal(text: str) -> Symbol:
    return Symbol(TERMINAL, text)


def nonterminal(name: str) -> Symbol:
    return Symbol(NONTERMINAL, name)


@dataclass(frozen=True)
class Production:
    index: int
    lhs: Symbol
    rhs: tuple[Symbol, ...]

    def __repr__(self) -> str:
        rhs = " ".join(repr(s) for s in self.rhs) if self.rhs else "<no-op>"
        return f"[{self.index}] {self.lhs.text} -> {rhs}"


@dataclass
class ParseTree:
    symbol: Symbol
    production: int | None = None  # None for terminal leaves
    children: list["ParseTree"] = field(default_factory=list)

    def leaves(self) -> str:
        if self.symbol.is_terminal():
            return self.symbol.text
        return "".join(c.leaves() for c in self.children)


class Grammar:
    """Ordered production rules plus derived lookup tables."""

    def __init__(self, rules: list[Production], start: Symbol):
        if not rules or rules[-1].lhs.text != PAD_LHS or rules[-1].rhs:
            raise GrammarError("grammar must end with the empty padding rule")
        if any(r.lhs.text == PAD_LHS for r in rules[:-1]):
            raise GrammarError("duplicate padding rule")
        for pos, r in enumerate(rules):
            if r.index != pos:
                raise GrammarError(f"rule index {r.index} out of order at {pos}")
            if r is not rules[-1] and not r.rhs:
                raise GrammarError(f"rule {pos}: empty right-hand side")
        self.rules = rules
        self.start = start
        self.padding_rule_index = len(rules) - 1
        self.nonterminals = {r.lhs for r in rules}
        self.terminals = {s for r in rules for s in r.rhs if s.is_terminal()}

        self.rules_by_lhs: dict[str, tuple[int, ...]] = {}
        for r in rules:
            got = self.rules_by_lhs.setdefault(r.lhs.text, ())
            self.rules_by_lhs[r.lhs.text] = got + (r.index,)
        referenced = {s.text for r in rules for s in r.rhs if not s.is_terminal()}
        missing = referenced - set(self.rules_by_lhs)
        if missing:
            raise GrammarError(
                "undefined nonterminal(s) referenced: " + ", ".join(sorted(missing))
            )

        # greedy longest-match tables: lexemes grouped by first char, longest first
        self._lex_by_first: dict[str, list[str]] = {}
        for t in sorted({s.text for s in self.terminals}, key=lambda x: (-len(x), x)):
            self._lex_by_first.setdefault(t[0], []).append(t)

        # integer encoding for the parser
        seen: dict[str, int] = {}
        for r in rules:
            if r.lhs.text not in seen:
                seen[r.lhs.text] = len(seen)
        self._nt_id = seen
        self._start_id = seen[start.text]
        # rhs as tuples of (is_nonterminal, id-or-lexeme)
        self._rhs_enc: list[tuple[tuple[bool, object], ...]] = []
        for r in rules:
            enc = tuple(
                (True, seen[s.text]) if not s.is_terminal() else (False, s.text)
                for s in r.rhs
            )
            self._rhs_enc.append(enc)
        self._rules_by_lhs_id: dict[int, tuple[int, ...]] = {
            seen[name]: idxs for name, idxs in self.rules_by_lhs.items()
        }

    @property
    def K(self) -> int:
        return len(self.rules)

    def lhs_name(self, rule_index: int) -> str:
        return self.rules[rule_index].lhs.text

    def __repr__(self) -> str:
        return f"Grammar(start={self.start.text}, K={self.K})"


def _lex_line(line: str, lineno: int) -> list[tuple[str, str]]:
    """Tokenize one grammar line into (kind, value) pairs.

    Kinds: name, quoted, arrow, pipe.  A ``#`` outside quotes starts a comment.
    """
    out: list[tuple[str, str]] = []
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        if c in " \t":
            i += 1
        elif c == "#":
            break
        elif c == "'":
            j = i + 1
            buf: list[str] = []
            while True:
                if j >= n:
                    raise GrammarError(f"line {lineno}: unterminated terminal quote")
                cj = line[j]
                if cj == "\\":
                    if j + 1 >= n or line[j + 1] not in ("\\", "'"):
                        raise GrammarError(f"line {lineno}: bad escape in terminal")
                    buf.append(line[j + 1])
                    j += 2
                elif cj == "'":
                    break
                else:
                    buf.append(cj)
                    j += 1
            if not buf:
                raise GrammarError(f"line {lineno}: empty terminal")
            out.append(("quoted", "".join(buf)))
            i = j + 1
        elif line.startswith("->", i):
            out.append(("arrow", "->"))
            i += 2
        elif c == "|":
            out.append(("pipe", "|"))
            i += 1
        else:
            j = i
            while j < n and line[j] not in " \t#|'" and not line.startswith("->", j):
                j += 1
            if j == i:
                raise GrammarError(f"line {lineno}: unexpected character {c!r}")
            out.append(("name", line[i:j]))
            i = j
    return out


def load_grammar(text: str) -> Grammar:
    """Parse grammar text into a Grammar; the first rule's lhs is the start."""
    raw_rules: list[tuple[str, tuple[Symbol, ...], int]] = []
    start_name: str | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = _lex_line(line, lineno)
        if not toks:
            continue
        if len(toks) < 2 or toks[0][0] != "name" or toks[1][0] != "arrow":
            raise GrammarError(f"line {lineno}: expected `Lhs -> alternatives`")
        lhs = toks[0][1]
        if start_name is None:
            start_name = lhs
        alts: list[list[Symbol]] = [[]]
        for kind, value in toks[2:]:
            if kind == "pipe":
                alts.append([])
            elif kind == "name":
                alts[-1].append(nonterminal(value))
            elif kind == "quoted":
                alts[-1].append(terminal(value))
            else:
                raise GrammarError(f"line {lineno}: unexpected `{value}`")
        for alt in alts:
            if not alt:
                raise GrammarError(f"line {lineno}: empty alternative")
            raw_rules.append((lhs, tuple(alt), lineno))
    if start_name is None:
        raise GrammarError("no rules found")
    rules = [
        Production(i, nonterminal(lhs), rhs)
        for i, (lhs, rhs, _) in enumerate(raw_rules)
    ]
    rules.append(Production(len(rules), nonterminal(PAD_LHS), ()))
    return Grammar(rules, nonterminal(start_name))


def load_grammar_file(path: str) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return load_grammar(fh.read())


def builtin_grammar_path(name: str) -> str:
    from importlib import resources

    ref = resources.files("grammarvae") / "grammars" / f"{name}.bnf"
    if not ref.is_file():
        raise GrammarError(f"no builtin grammar named {name!r}")
    return str(ref)


def builtin_grammar(name: str) -> Grammar:
    return load_grammar_file(builtin_grammar_path(name))


def tokenize(s: str, g: Grammar) -> list[Symbol]:
    """Greedy longest-match split of s into terminal symbols."""
    by_first = g._lex_by_first
    out: list[Symbol] = []
    i, n = 0, len(s)
    while i < n:
        for lex in by_first.get(s[i], ()):
            if s.startswith(lex, i):
                out.append(Symbol(TERMINAL, lex))
                i += len(lex)
                break
        else:
            offset = len(s[:i].encode("utf-8"))
            raise TokenizeError(
                f"no terminal matches at byte offset {offset}: {s[i:i + 12]!r}", offset
            )
    return out


def parse(s: str, g: Grammar) -> ParseTree:
    """Earley parse; deterministic tree with lowest-rule-index tie-breaking."""
    tokens = [t.text for t in tokenize(s, g)]
    n = len(tokens)
    rhs_enc = g._rhs_enc
    rules_by_lhs = g._rules_by_lhs_id
    start_id = g._start_id

    # chart[i]: worklist of (rule, dot, origin); wait[i][nt_id]: items paused on nt
    worklists: list[list[tuple[int, int, int]]] = [[] for _ in range(n + 1)]
    seen: list[set[tuple[int, int, int]]] = [set() for _ in range(n + 1)]
    waiting: list[dict[int, list[tuple[int, int, int]]]] = [{} for _ in range(n + 1)]
    completed: dict[tuple[int, int, int], list[int]] = {}
    spans: dict[tuple[int, int], set[int]] = {}

    def push(pos: int, item: tuple[int, int, int]) -> None:
        if item not in seen[pos]:
            seen[pos].add(item)
            worklists[pos].append(item)

    for ridx in rules_by_lhs[start_id]:
        push(0, (ridx, 0, 0))

    for i in range(n + 1):
        wl = worklists[i]
        predicted: set[int] = set()
        k = 0
        while k < len(wl):
            ridx, dot, origin = wl[k]
            k += 1
            rhs = rhs_enc[ridx]
            if dot < len(rhs):
                is_nt, val = rhs[dot]
                if is_nt:
                    waiting[i].setdefault(val, []).append((ridx, dot, origin))
                    if val not in predicted:
                        predicted.add(val)
                        for r2 in rules_by_lhs[val]:
                            push(i, (r2, 0, i))
                elif i < n and tokens[i] == val:
                    push(i + 1, (ridx, dot + 1, origin))
            else:
                lhs_id = g._nt_id[g.rules[ridx].lhs.text]
                key = (lhs_id, origin, i)
                if key not in completed:
                    completed[key] = []
                    spans.setdefault((lhs_id, origin), set()).add(i)
                    for ridx2, dot2, origin2 in waiting[origin].get(lhs_id, ()):
                        push(i, (ridx2, dot2 + 1, origin2))
                completed[key].append(ridx)

    if (start_id, 0, n) not in completed:
        raise ParseError(f"not in the language: {s!r}")

    for key in completed:
        completed[key].sort()

    # top-down reconstruction over the chart; lowest rule index first, then
    # shortest child span; the active set guards same-span derivation cycles
    limit = max(sys.getrecursionlimit(), 50 * n + 1000)
    sys.setrecursionlimit(limit)
    memo: dict[tuple[int, int, int], ParseTree] = {}
    active: set[tuple[int, int, int]] = set()
    sorted_spans: dict[tuple[int, int], list[int]] = {
        k2: sorted(v) for k2, v in spans.items()
    }

    def build(nt_id: int, i: int, j: int) -> ParseTree | None:
        key = (nt_id, i, j)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if key in active:
            return None
        active.add(key)
        try:
            for ridx in completed.get(key, ()):
                children = match_rhs(rhs_enc[ridx], 0, i, j)
                if children is not None:
                    tree = ParseTree(g.rules[ridx].lhs, ridx, children)
                    memo[key] = tree
                    return tree
            return None
        finally:
            active.discard(key)

    def match_rhs(rhs, k: int, p: int, j: int) -> list[ParseTree] | None:
        if k == len(rhs):
            return [] if p == j else None
        is_nt, val = rhs[k]
        remaining = len(rhs) - k - 1
        if not is_nt:
            if p < j and tokens[p] == val:
                rest = match_rhs(rhs, k + 1, p + 1, j)
                if rest is not None:
                    return [ParseTree(Symbol(TERMINAL, val))] + rest
            return None
        for e in sorted_spans.get((val, p), ()):
            if e > j - remaining:
                break
            sub = build(val, p, e)
            if sub is None:
                continue
            rest = match_rhs(rhs, k + 1, e, j)
            if rest is not None:
                return [sub] + rest
        return None

    tree = build(start_id, 0, n)
    if tree is None:  # unreachable for a sound chart; defensive
        raise ParseError(f"not in the language: {s!r}")
    return tree


def tree_to_rules(t: ParseTree) -> list[int]:
    """Pre-order production indices (node before children, left to right)."""
    out: list[int] = []
    stack = [t]
    while stack:
        node = stack.pop()
        if node.symbol.is_terminal():
            continue
        if node.production is None:
            raise DerivationError("incomplete parse tree node")
        out.append(node.production)
        stack.extend(reversed(node.children))
    return out


def rules_to_string(r: list[int], g: Grammar) -> str:
    """Replay a rule sequence on a stack of nonterminals, emitting terminals."""
    out: list[str] = []
    stack: list[tuple[bool, object]] = [(True, g._start_id)]
    nt_names = {v: k for k, v in g._nt_id.items()}
    for step, ridx in enumerate(r):
        if ridx == g.padding_rule_index:
            raise DerivationError(f"step {step}: padding rule inside a derivation")
        # emit any terminals sitting on top before the next expansion
        while stack and not stack[-1][0]:
            out.append(stack.pop()[1])
        if not stack:
            raise DerivationError(f"step {step}: surplus rule after completion")
        top_id = stack.pop()[1]
        rule = g.rules[ridx]
        if g._nt_id[rule.lhs.text] != top_id:
            raise DerivationError(
                f"step {step}: rule {ridx} has lhs {rule.lhs.text}, "
                f"stack top is {nt_names[top_id]}"
            )
        stack.extend(reversed(g._rhs_enc[ridx]))
    while stack and not stack[-1][0]:
        out.append(stack.pop()[1])
    if stack:
        raise DerivationError("incomplete derivation: stack not empty")
    return "".join(out)


@dataclass(frozen=True)
class MaskTable:
    """Per-nonterminal binary vectors over rule indices (lhs membership)."""

    names: tuple[str, ...]
    matrix: np.ndarray  # bool, shape (len(names), K)
    index: dict[str, int]

    @property
    def K(self) -> int:
        return self.matrix.shape[1]

    def mask(self, lhs_name: str) -> np.ndarray:
        return self.matrix[self.index[lhs_name]]

    def row(self, lhs_name: str) -> int:
        return self.index[lhs_name]


def build_masks(g: Grammar) -> MaskTable:
    names: list[str] = []
    for r in g.rules:
        if r.lhs.text not in names:
            names.append(r.lhs.text)
    index = {name: i for i, name in enumerate(names)}
    matrix = np.zeros((len(names), g.K), dtype=bool)
    for r in g.rules:
        matrix[index[r.lhs.text], r.index] = True
    matrix.setflags(write=False)
    return MaskTable(tuple(names), matrix, index)


@dataclass(frozen=True)
class OneHotMatrix:
    matrix: np.ndarray  # float64, shape (t_max, K), rows one-hot
    true_length: int


def encode_onehot(r: list[int], g: Grammar, t_max: int) -> OneHotMatrix:
    if len(r) > t_max:
        raise ValueError(f"sequence length {len(r)} exceeds t_max {t_max}")
    m = np.zeros((t_max, g.K))
    m[np.arange(len(r)), r] = 1.0
    m[len(r):, g.padding_rule_index] = 1.0
    return OneHotMatrix(m, len(r))


def decode_onehot(m: OneHotMatrix | np.ndarray) -> list[int]:
    mat = m.matrix if isinstance(m, OneHotMatrix) else np.asarray(m)
    ones = mat == 1.0
    if not np.array_equal(ones.sum(axis=1), np.ones(mat.shape[0])) or not np.array_equal(
        mat, ones.astype(mat.dtype)
    ):
        raise ValueError("rows must be exactly one-hot")
    idx = np.argmax(ones, axis=1)
    pad = mat.shape[1] - 1
    end = mat.shape[0]
    while end > 0 and idx[end - 1] == pad:
        end -= 1
    return idx[:end].tolist()


def random_derivation(g: Grammar, rng, max_rules: int) -> list[int] | None:
    """One uniform random derivation, or None if it exceeds max_rules."""
    stack = [g._start_id]
    out: list[int] = []
    while stack:
        if len(out) >= max_rules:
            return None
        top = stack.pop()
        choices = g._rules_by_lhs_id[top]
        ridx = choices[rng.integers(len(choices))] if len(choices) > 1 else choices[0]
        out.append(ridx)
        for is_nt, val in reversed(g._rhs_enc[ridx]):
            if is_nt:
                stack.append(val)
    return out
