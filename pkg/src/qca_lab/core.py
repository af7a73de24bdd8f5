"""One-dimensional cellular automata on finite configurations.

A configuration is stored as ``(offset, word)``: ``word[0]`` sits on cell
``offset`` and every cell outside the word holds the quiescent symbol.
Words are plain strings of single-character symbols.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    DuplicateSymbol,
    EmptyNeighborhood,
    InputError,
    MissingTableEntry,
    QuiescenceViolation,
    RuleError,
)

__all__ = [
    "Alphabet",
    "Config",
    "Rule",
    "canonicalize",
    "parse_config",
    "parse_rule",
    "rule_from_dict",
    "rule_to_dict",
    "shift_config",
    "step",
    "iterate",
    "minkowski",
    "EMPTY",
]


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]
    quiescent: str

    def __post_init__(self):
        if not self.symbols:
            raise RuleError("alphabet is empty")
        for s in self.symbols:
            if not isinstance(s, str) or len(s) != 1 or s == "|":
                raise RuleError(f"symbol {s!r} is not a single character")
        if len(set(self.symbols)) != len(self.symbols):
            raise DuplicateSymbol(f"duplicate symbol in {list(self.symbols)}")
        if self.quiescent not in self.symbols:
            raise RuleError(f"quiescent {self.quiescent!r} not in alphabet")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self.symbols.index(symbol)

    def words(self, length: int) -> Iterator[str]:
        """All words of ``length`` in lexicographic alphabet order."""
        for t in itertools.product(self.symbols, repeat=length):
            yield "".join(t)

    def config_key(self, c: "Config") -> tuple:
        """Total order on configs: (support length, offset, word by alphabet order)."""
        return (len(c.word), c.offset, tuple(self.symbols.index(s) for s in c.word))

    def check_word(self, word: str) -> None:
        bad = set(word) - set(self.symbols)
        if bad:
            raise InputError(f"symbols {sorted(bad)} not in alphabet {list(self.symbols)}")


@dataclass(frozen=True)
class Config:
    """Finite configuration in canonical (trimmed) form.

    Build instances through :func:`canonicalize` unless the word is known
    to be trimmed already.
    """

    offset: int
    word: str

    @property
    def is_quiescent(self) -> bool:
        return not self.word

    @property
    def support(self) -> tuple[int, int] | None:
        if not self.word:
            return None
        return self.offset, self.offset + len(self.word) - 1

    def at(self, cell: int, quiescent: str) -> str:
        i = cell - self.offset
        if 0 <= i < len(self.word):
            return self.word[i]
        return quiescent

    def restrict(self, cells: Iterable[int], quiescent: str) -> str:
        return "".join(self.at(j, quiescent) for j in cells)

    def sort_key(self) -> tuple:
        return (len(self.word), self.offset, self.word)

    def __lt__(self, other: "Config") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.offset}|{self.word}"


EMPTY = Config(0, "")


def canonicalize(offset: int, word: str, quiescent: str = "0") -> Config:
    """Trim quiescent symbols from both ends of ``word``, fixing up the offset."""
    left = len(word) - len(word.lstrip(quiescent))
    trimmed = word.strip(quiescent)
    if not trimmed:
        return EMPTY
    return Config(offset + left, trimmed)


def shift_config(c: Config, k: int) -> Config:
    """The configuration d with ``d[i] = c[i + k]``."""
    if not c.word:
        return c
    return Config(c.offset - k, c.word)


def parse_config(text: str, alphabet: Alphabet) -> Config:
    """Parse a ``"<offset>|<word>"`` literal; the all-quiescent config is ``"0|"``."""
    try:
        off, word = text.strip().split("|", 1)
        offset = int(off)
    except ValueError:
        raise InputError(f"bad configuration literal {text!r}") from None
    alphabet.check_word(word)
    return canonicalize(offset, word, alphabet.quiescent)


def minkowski(a: Iterable[int], b: Iterable[int], sign: int = 1) -> tuple[int, ...]:
    """Minkowski sum (or difference, ``sign=-1``) of two integer sets."""
    b = list(b)
    return tuple(sorted({x + sign * y for x in a for y in b}))


@dataclass(frozen=True)
class Rule:
    """Local rule: alphabet, sorted neighborhood offsets and a complete table.

    ``table`` maps each word of length ``len(neighborhood)`` (symbols listed
    in neighborhood order) to an output symbol.
    """

    alphabet: Alphabet
    neighborhood: tuple[int, ...]
    table: Mapping[str, str] = field(hash=False)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        nb = tuple(self.neighborhood)
        if not nb:
            raise EmptyNeighborhood("neighborhood is empty")
        if len(set(nb)) != len(nb):
            raise RuleError(f"duplicate offsets in neighborhood {list(nb)}")
        if list(nb) != sorted(nb):
            raise RuleError("neighborhood offsets must be sorted")
        object.__setattr__(self, "neighborhood", nb)
        syms = set(self.alphabet.symbols)
        for w in self.alphabet.words(len(nb)):
            if w not in self.table:
                raise MissingTableEntry(f"no table entry for {w!r}")
        for w, out in self.table.items():
            if len(w) != len(nb) or set(w) - syms:
                raise RuleError(f"table key {w!r} is not a neighborhood word")
            if out not in syms:
                raise RuleError(f"table value {out!r} not in alphabet")
        q = self.alphabet.quiescent
        if self.table[q * len(nb)] != q:
            raise QuiescenceViolation(
                f"table maps {q * len(nb)!r} to {self.table[q * len(nb)]!r}, expected {q!r}")
        object.__setattr__(self, "table", dict(self.table))

    @property
    def quiescent(self) -> str:
        return self.alphabet.quiescent

    @property
    def lo(self) -> int:
        return self.neighborhood[0]

    @property
    def hi(self) -> int:
        return self.neighborhood[-1]

    @property
    def span(self) -> int:
        return self.hi - self.lo

    @property
    def radius(self) -> int:
        return max(abs(o) for o in self.neighborhood)

    def local(self, window: str) -> str:
        """Apply the table to a contiguous window covering cells ``lo..hi``."""
        return self.table["".join(window[o - self.lo] for o in self.neighborhood)]


def rule_from_dict(data: Mapping) -> Rule:
    try:
        alphabet = Alphabet(tuple(data["alphabet"]), data["quiescent"])
        nb = [int(o) for o in data["neighborhood"]]
        table = dict(data["table"])
        name = str(data.get("name", ""))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RuleError):
            raise
        raise RuleError(f"malformed rule description: {exc}") from None
    if not nb:
        raise EmptyNeighborhood("neighborhood is empty")
    if len(set(nb)) != len(nb):
        raise RuleError(f"duplicate offsets in neighborhood {nb}")
    order = sorted(range(len(nb)), key=nb.__getitem__)
    if order != list(range(len(nb))):
        table = {"".join(k[i] for i in order) if isinstance(k, str) and len(k) == len(nb) else k: v
                 for k, v in table.items()}
    return Rule(alphabet, tuple(sorted(nb)), table, name)


def parse_rule(text: str) -> Rule:
    """Parse the JSON rule-file format and validate every rule invariant."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RuleError(f"rule file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise RuleError("rule file must hold a JSON object")
    return rule_from_dict(data)


def rule_to_dict(rule: Rule) -> dict:
    return {
        "name": rule.name,
        "alphabet": list(rule.alphabet.symbols),
        "quiescent": rule.quiescent,
        "neighborhood": list(rule.neighborhood),
        "table": {w: rule.table[w] for w in rule.alphabet.words(len(rule.neighborhood))},
    }


def step(rule: Rule, c: Config) -> Config:
    """One synchronous update; output cell i reads cells ``i + neighborhood``."""
    if not c.word:
        return c
    q = rule.quiescent
    lo, hi, span = rule.lo, rule.hi, rule.span
    first = c.offset - hi
    last = c.offset + len(c.word) - 1 - lo
    # padded[j] is cell first + lo + j
    padded = q * span + c.word + q * span
    table = rule.table
    rel = [o - lo for o in rule.neighborhood]
    if rel == list(range(span + 1)):
        out = [table[padded[j:j + span + 1]] for j in range(last - first + 1)]
    else:
        out = [table["".join(padded[j + r] for r in rel)] for j in range(last - first + 1)]
    return canonicalize(first, "".join(out), q)


def iterate(rule: Rule, c: Config, steps: int) -> list[Config]:
    orbit = [c]
    for _ in range(steps):
        orbit.append(step(rule, orbit[-1]))
    return orbit


def configs_in_window(alphabet: Alphabet, cells: Sequence[int]) -> Iterator[Config]:
    """Every configuration supported inside ``cells`` (a sorted cell list).

    Enumeration order is lexicographic in the window word.
    """
    cells = list(cells)
    q = alphabet.quiescent
    if not cells:
        yield EMPTY
        return
    contiguous = cells == list(range(cells[0], cells[-1] + 1))
    for w in alphabet.words(len(cells)):
        if contiguous:
            yield canonicalize(cells[0], w, q)
        else:
            buf = [q] * (cells[-1] - cells[0] + 1)
            for j, s in zip(cells, w):
                buf[j - cells[0]] = s
            yield canonicalize(cells[0], "".join(buf), q)
