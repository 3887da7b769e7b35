"""Stack-constrained decoding: logit matrix -> syntactically valid rule sequence.

The decoder state is a pushdown automaton: a stack of nonterminals starting
at the grammar's start symbol. At each timestep the top nonterminal is
popped, a rule is chosen from the masked softmax over that nonterminal's
rules, and the rule's right-hand-side nonterminals are pushed right to left.
An empty stack means a complete derivation; hitting the last timestep with
symbols still on the stack marks the sequence invalid (no repair pass).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grammar import Grammar, MaskTable, build_masks, rules_to_string


class DecodeStatus(Enum):
    COMPLETE = "complete"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class DecodeResult:
    rules: list[int]
    status: DecodeStatus

    @property
    def complete(self) -> bool:
        return self.status is DecodeStatus.COMPLETE


def masked_distribution(f_t: np.ndarray, m_alpha: np.ndarray) -> np.ndarray:
    """p_k = m_k exp(f_k) / sum_j m_j exp(f_j), max-shifted over unmasked entries."""
    m = np.asarray(m_alpha, dtype=bool)
    if not m.any():
        raise ValueError("all-zero mask")
    f = np.asarray(f_t, dtype=np.float64)
    hi = f[m].max()
    w = np.where(m, np.exp(f - hi), 0.0)
    return w / w.sum()


def _run(F: np.ndarray, g: Grammar, masks: MaskTable, choose) -> DecodeResult:
    t_max = F.shape[0]
    stack = [g.start.text]
    out: list[int] = []
    t = 0
    while stack and t < t_max:
        alpha = stack.pop()
        p = masked_distribution(F[t], masks.mask(alpha))
        ridx = choose(p)
        out.append(ridx)
        for sym in reversed(g.rules[ridx].rhs):
            if not sym.is_terminal():
                stack.append(sym.text)
        t += 1
    status = DecodeStatus.COMPLETE if not stack else DecodeStatus.EXHAUSTED
    return DecodeResult(out, status)


def sample_sequence(F: np.ndarray, g: Grammar, rng,
                    masks: MaskTable | None = None) -> DecodeResult:
    masks = masks if masks is not None else build_masks(g)

    def choose(p: np.ndarray) -> int:
        c = np.cumsum(p)
        return int(np.searchsorted(c, rng.random() * c[-1], side="right").clip(max=p.size - 1))

    return _run(F, g, masks, choose)


def argmax_sequence(F: np.ndarray, g: Grammar,
                    masks: MaskTable | None = None) -> DecodeResult:
    # np.argmax takes the lowest index on ties
    masks = masks if masks is not None else build_masks(g)
    return _run(F, g, masks, lambda p: int(np.argmax(p)))


def decode_to_string(F: np.ndarray, g: Grammar, rng=None,
                     masks: MaskTable | None = None) -> tuple[str | None, DecodeResult]:
    """Decode and render; None for exhausted (invalid) sequences."""
    if rng is None:
        result = argmax_sequence(F, g, masks)
    else:
        result = sample_sequence(F, g, rng, masks)
    if not result.complete:
        return None, result
    return rules_to_string(result.rules, g), result


@dataclass(frozen=True)
class EnumerationResult:
    outcomes: list[tuple[tuple[int, ...], float]]
    exhausted_mass: float

    def probability_of(self, rules: list[int]) -> float:
        key = tuple(rules)
        for seq, p in self.outcomes:
            if seq == key:
                return p
        return 0.0


def enumerate_support(F: np.ndarray, g: Grammar, max_len: int,
                      masks: MaskTable | None = None,
                      state_limit: int = 10 ** 6) -> EnumerationResult:
    """Exhaustive distribution over derivations of length <= max_len.

    Completed-derivation probabilities plus the exhausted mass sum to one;
    sequences still holding stack symbols at max_len contribute to the
    exhausted mass, mirroring sample_sequence's invalid outcome.
    """
    masks = masks if masks is not None else build_masks(g)
    if max_len > F.shape[0]:
        raise ValueError(f"max_len {max_len} exceeds logit rows {F.shape[0]}")
    outcomes: list[tuple[tuple[int, ...], float]] = []
    exhausted = 0.0
    # frontier entries: (stack tuple, emitted tuple, probability)
    frontier: list[tuple[tuple[str, ...], tuple[int, ...], float]] = [
        ((g.start.text,), (), 1.0)
    ]
    states = 0
    for t in range(max_len):
        nxt: list[tuple[tuple[str, ...], tuple[int, ...], float]] = []
        for stack, emitted, prob in frontier:
            alpha = stack[-1]
            rest = stack[:-1]
            p = masked_distribution(F[t], masks.mask(alpha))
            for ridx in np.flatnonzero(p > 0.0):
                states += 1
                if states > state_limit:
                    raise RuntimeError(
                        f"enumeration exceeded {state_limit} states"
                    )
                pushed = tuple(
                    sym.text for sym in g.rules[ridx].rhs if not sym.is_terminal()
                )
                new_stack = rest + pushed[::-1]
                new_emitted = emitted + (int(ridx),)
                new_prob = prob * p[ridx]
                if not new_stack:
                    outcomes.append((new_emitted, new_prob))
                else:
                    nxt.append((new_stack, new_emitted, new_prob))
        frontier = nxt
        if not frontier:
            break
    exhausted = sum(prob for _, _, prob in frontier)
    return EnumerationResult(outcomes, exhausted)
