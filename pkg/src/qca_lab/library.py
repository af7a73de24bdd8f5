"""Small catalogue of named rules used by tests, the CLI and the docs."""

from __future__ import annotations

from .core import Alphabet, Rule

BINARY = Alphabet(("0", "1"), "0")
TERNARY = Alphabet(("0", "1", "2"), "0")


def xor() -> Rule:
    """Sum modulo 2 over the neighborhood {0, 1}."""
    table = {a + b: str((int(a) + int(b)) % 2) for a in "01" for b in "01"}
    return Rule(BINARY, (0, 1), table, "xor")


def identity() -> Rule:
    return Rule(BINARY, (0,), {"0": "0", "1": "1"}, "identity")


def shift() -> Rule:
    """``F(x)[i] = x[i + 1]``."""
    return Rule(BINARY, (1,), {"0": "0", "1": "1"}, "shift")


def negated_shift() -> Rule:
    """Shift composed with the swap 1 <-> 2 on a ternary alphabet.

    Negating a binary cell would move the quiescent symbol, so the
    "negation" permutes only the non-quiescent symbols.
    """
    return Rule(TERNARY, (1,), {"0": "0", "1": "2", "2": "1"}, "negated-shift")


def and_rule() -> Rule:
    """Two-to-one rule: ``F(x)[i] = x[i] and x[i + 1]``."""
    table = {a + b: str(int(a) & int(b)) for a in "01" for b in "01"}
    return Rule(BINARY, (0, 1), table, "and")


def from_number(number: int, neighborhood: tuple[int, ...], alphabet: Alphabet = BINARY,
                name: str | None = None) -> Rule:
    """Rule whose table is the base-|alphabet| digits of ``number``.

    Digit ``i`` (least significant first) is the output for the ``i``-th
    neighborhood word in lexicographic alphabet order, as in Wolfram's
    numbering of elementary rules.
    """
    k = len(alphabet)
    words = list(alphabet.words(len(neighborhood)))
    table = {}
    n = number
    for w in words:
        table[w] = alphabet.symbols[n % k]
        n //= k
    if n:
        raise ValueError(f"rule number {number} out of range")
    return Rule(alphabet, tuple(neighborhood), table, name or f"n{len(neighborhood)}-{number}")


def to_number(rule: Rule) -> int:
    k = len(rule.alphabet)
    total = 0
    for i, w in enumerate(rule.alphabet.words(len(rule.neighborhood))):
        total += rule.alphabet.index(rule.table[w]) * k ** i
    return total


NAMED = {
    "xor": xor,
    "identity": identity,
    "shift": shift,
    "negated-shift": negated_shift,
    "and": and_rule,
}
