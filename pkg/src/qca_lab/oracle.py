"""Brute-force reference procedures.

Nothing here touches the pair diagram: every answer comes from stepping
explicitly enumerated configurations, so these functions can check the
graph-based decisions independently.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple

from .core import Alphabet, Config, Rule, canonicalize, step
from .errors import OracleDisagreement, SpaceTooLarge
from .library import from_number

__all__ = [
    "SearchSpace",
    "InjectivityCheck",
    "canonical_words",
    "brute_injective",
    "brute_preimages",
    "brute_local_inverse",
    "search_rules",
    "DEFAULT_SUPPORT",
]

# default max support length per alphabet size
DEFAULT_SUPPORT = {2: 8, 3: 5}
MAX_ENUMERATION = 2_000_000


def _default_support(alphabet: Alphabet) -> int:
    return DEFAULT_SUPPORT.get(len(alphabet), 4)


def canonical_words(alphabet: Alphabet, max_len: int) -> Iterator[str]:
    """Words of length <= max_len whose first and last symbols are non-quiescent.

    The empty word comes first.
    """
    total = sum(len(alphabet) ** n for n in range(max_len + 1))
    if total > MAX_ENUMERATION:
        raise SpaceTooLarge(f"{total} words exceed the enumeration cap {MAX_ENUMERATION}")
    q = alphabet.quiescent
    live = [s for s in alphabet.symbols if s != q]
    yield ""
    for n in range(1, max_len + 1):
        if n == 1:
            yield from live
            continue
        for a in live:
            for mid in alphabet.words(n - 2):
                for b in live:
                    yield a + mid + b


class InjectivityCheck(NamedTuple):
    injective: bool
    counterexample: tuple[Config, Config] | None


def brute_injective(rule: Rule, L: int | None = None) -> InjectivityCheck:
    """Look for two distinct finite configurations of support <= L with one image.

    Words are enumerated at offset 0. Since the rule commutes with shifts,
    two words with the same image *word* collide once the second is
    translated so the image offsets coincide.
    """
    L = _default_support(rule.alphabet) if L is None else L
    q = rule.quiescent
    seen: dict[str, tuple[str, int]] = {}
    for w in canonical_words(rule.alphabet, L):
        img = step(rule, canonicalize(0, w, q))
        prev = seen.get(img.word)
        if prev is None:
            seen[img.word] = (w, img.offset)
            continue
        w0, off0 = prev
        x = canonicalize(0, w0, q)
        y = canonicalize(off0 - img.offset, w, q)
        return InjectivityCheck(False, (x, y))
    return InjectivityCheck(True, None)


def brute_preimages(rule: Rule, c: Config, L: int | None = None) -> list[Config]:
    """Every configuration of support length <= L mapped onto ``c``.

    For the all-quiescent ``c`` a nonzero preimage has infinitely many
    translates; each is listed once, at offset 0.
    """
    L = _default_support(rule.alphabet) if L is None else L
    q = rule.quiescent
    found = []
    for w in canonical_words(rule.alphabet, L):
        img = step(rule, canonicalize(0, w, q))
        if img.word != c.word:
            continue
        off = c.offset - img.offset if c.word else 0
        found.append(canonicalize(off, w, q))
    return sorted(set(found), key=rule.alphabet.config_key)


def brute_local_inverse(rule: Rule, r: int, support: int | None = None) -> Rule | None:
    """Try to build a radius-``r`` rule G with G(F(u)) = u.

    Each entry of G's table is pinned down by consistency: for every
    configuration u of support <= ``support`` (default ``2r + 4``) and every
    cell i, the window of F(u) around i must map to u[i]. Any conflict means
    no radius-``r`` inverse exists within this horizon. Windows never seen
    are sent to the quiescent symbol.
    """
    support = 2 * r + 4 if support is None else support
    a = rule.alphabet
    q = a.quiescent
    width = 2 * r + 1
    if len(a) ** support > MAX_ENUMERATION or len(a) ** width > MAX_ENUMERATION:
        raise SpaceTooLarge(f"inverse search at radius {r} is too large")
    table: dict[str, str] = {q * width: q}
    for w in canonical_words(a, support):
        u = canonicalize(0, w, q)
        fu = step(rule, u)
        lo = min(0, fu.offset) - r if fu.word else -r
        hi = max(len(w) - 1, fu.offset + len(fu.word) - 1) + r
        for i in range(lo, hi + 1):
            key = fu.restrict(range(i - r, i + r + 1), q)
            want = u.at(i, q)
            got = table.setdefault(key, want)
            if got != want:
                return None
    full = {k: table.get(k, q) for k in a.words(width)}
    return Rule(a, tuple(range(-r, r + 1)), full, f"{rule.name}-inverse" if rule.name else "inverse")


@dataclass(frozen=True)
class SearchSpace:
    """Quiescence-preserving rules over an alphabet and neighborhood.

    When ``sample`` is set, that many distinct tables are drawn with ``seed``
    instead of enumerating the whole space.
    """

    alphabet: Alphabet
    neighborhood: tuple[int, ...]
    max_support: int | None = None
    sample: int | None = None
    seed: int = 0

    @property
    def size(self) -> int:
        k = len(self.alphabet)
        return k ** (k ** len(self.neighborhood) - 1)

    def rules(self, cap: int = 200_000) -> Iterator[Rule]:
        a = self.alphabet
        k = len(a)
        words = list(a.words(len(self.neighborhood)))
        qpos = words.index(a.quiescent * len(self.neighborhood))
        qidx = a.index(a.quiescent)

        def number(digits):
            digits = list(digits)
            digits.insert(qpos, qidx)
            return sum(d * k ** i for i, d in enumerate(digits))

        if self.sample is None:
            if self.size > cap:
                raise SpaceTooLarge(f"rule space has {self.size} members; use sampling")
            for digits in itertools.product(range(k), repeat=len(words) - 1):
                # product varies the last digit fastest; reverse so numbering ascends
                yield from_number(number(reversed(digits)), self.neighborhood, a)
            return
        rng = random.Random(self.seed)
        seen = set()
        target = min(self.sample, self.size)
        while len(seen) < target:
            digits = tuple(rng.randrange(k) for _ in range(len(words) - 1))
            if digits in seen:
                continue
            seen.add(digits)
            yield from_number(number(digits), self.neighborhood, a)


def search_rules(space: SearchSpace, predicate: Mapping[str, bool]) -> list[Rule]:
    """Rules of ``space`` whose classification matches every flag in ``predicate``.

    Each candidate's injectivity verdict is cross-checked by brute force;
    a disagreement raises :class:`OracleDisagreement`.
    """
    from .debruijn import classify

    L = space.max_support if space.max_support is not None else _default_support(space.alphabet)
    hits = []
    for rule in space.rules():
        report = classify(rule)
        brute = brute_injective(rule, L).injective
        if brute != report.injective_finite:
            raise OracleDisagreement(
                f"{rule.name}: pair diagram says injective={report.injective_finite}, "
                f"enumeration up to {L} says {brute}")
        flags = report.as_dict()
        if all(flags[k] == v for k, v in predicate.items()):
            hits.append(rule)
    return hits
