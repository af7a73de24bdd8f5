"""Sparse superpositions and density operators over finite configurations.

Amplitudes are complex doubles held in plain dicts keyed by
:class:`~qca_lab.core.Config`. Only exact zeros are ever dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .core import Alphabet, Config, Rule, canonicalize, parse_config, shift_config, step
from .debruijn import preimages
from .errors import InputError, NotNormalized, RegionMismatch, RegionTooLarge, ZeroVector

__all__ = [
    "Superposition",
    "DensityOp",
    "ReducedMatrix",
    "make_region",
    "make_superposition",
    "basis_state",
    "apply_F",
    "apply_F_dagger",
    "shift_superposition",
    "pure_density",
    "evolve",
    "reduce",
    "reduce_entries",
    "trace_distance",
    "inner_product",
    "load_state",
    "dump_state",
    "MAX_REDUCED_DIM",
]

MAX_REDUCED_DIM = 4096


def make_region(cells: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(set(int(c) for c in cells)))


@dataclass(frozen=True)
class Superposition:
    """Finite linear combination of configuration basis vectors.

    ``non_isometric`` is set by :func:`apply_F` when distinct basis
    configurations were sent to the same image.
    """

    amplitudes: Mapping[Config, complex] = field(default_factory=dict)
    non_isometric: bool = False

    def __len__(self) -> int:
        return len(self.amplitudes)

    def __getitem__(self, c: Config) -> complex:
        return self.amplitudes.get(c, 0j)

    def items(self):
        return sorted(self.amplitudes.items(), key=lambda kv: kv[0].sort_key())

    @property
    def is_zero(self) -> bool:
        return not self.amplitudes

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for _, a in self.items()))

    def allclose(self, other: "Superposition", atol: float = 1e-12) -> bool:
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self[c] - other[c]) <= atol for c in keys)


def _drop_zeros(amps: dict) -> dict:
    return {c: a for c, a in amps.items() if a != 0}


def make_superposition(pairs: Iterable[tuple[Config, complex]]) -> Superposition:
    """Merge duplicates, drop exact zeros and normalize to unit norm."""
    amps: dict[Config, complex] = {}
    for c, a in pairs:
        amps[c] = amps.get(c, 0j) + complex(a)
    amps = _drop_zeros(amps)
    s = Superposition(amps)
    n = s.norm()
    if n == 0:
        raise ZeroVector("all amplitudes cancel")
    return Superposition({c: a / n for c, a in s.items()})


def basis_state(c: Config) -> Superposition:
    return Superposition({c: 1 + 0j})


def apply_F(rule: Rule, s: Superposition) -> Superposition:
    """Linearized global map; amplitudes of colliding images add up, no renormalization."""
    out: dict[Config, complex] = {}
    collided = False
    for c, a in s.items():
        fc = step(rule, c)
        if fc in out:
            collided = True
        out[fc] = out.get(fc, 0j) + a
    return Superposition(_drop_zeros(out), non_isometric=collided or s.non_isometric)


def apply_F_dagger(rule: Rule, s: Superposition, halo: int | None = None) -> Superposition:
    """Adjoint map: each basis configuration goes to the sum of its preimages.

    Configurations outside the image contribute nothing, so the result may be
    the zero vector (``is_zero``). Without ``halo`` the preimage search uses
    :func:`~qca_lab.debruijn.preimage_halo`, which raises ``HaloUnavailable``
    for rules that are not injective on finite configurations.
    """
    out: dict[Config, complex] = {}
    for c, a in s.items():
        for u in preimages(rule, c, halo):
            out[u] = out.get(u, 0j) + a
    return Superposition(_drop_zeros(out))


def shift_superposition(s: Superposition, k: int) -> Superposition:
    return Superposition({shift_config(c, k): a for c, a in s.items()}, s.non_isometric)


def inner_product(s1: Superposition, s2: Superposition) -> complex:
    """``<s1|s2>``, conjugate-linear in the first argument."""
    total = 0j
    for c, a in s1.items():
        b = s2.amplitudes.get(c)
        if b is not None:
            total += a.conjugate() * b
    return total


@dataclass(frozen=True)
class DensityOp:
    entries: Mapping[tuple[Config, Config], complex]

    def items(self):
        return sorted(self.entries.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key()))

    def trace(self) -> complex:
        return sum((v for (a, b), v in self.items() if a == b), 0j)

    def basis(self) -> list[Config]:
        cs = {a for a, _ in self.entries} | {b for _, b in self.entries}
        return sorted(cs, key=Config.sort_key)

    def to_dense(self, basis: list[Config] | None = None) -> np.ndarray:
        basis = basis or self.basis()
        idx = {c: i for i, c in enumerate(basis)}
        m = np.zeros((len(basis), len(basis)), dtype=complex)
        for (a, b), v in self.items():
            m[idx[a], idx[b]] += v
        return m

    def is_hermitian(self, atol: float = 1e-9) -> bool:
        return all(abs(v - self.entries.get((b, a), 0j).conjugate()) <= atol
                   for (a, b), v in self.entries.items())


def pure_density(s: Superposition, atol: float = 1e-9) -> DensityOp:
    if abs(s.norm() - 1) > atol:
        raise NotNormalized(f"superposition has norm {s.norm()!r}")
    items = s.items()
    return DensityOp({(a, b): x * y.conjugate() for a, x in items for b, y in items})


def evolve(rule: Rule, rho: DensityOp) -> DensityOp:
    """Conjugation by the linearized map: ``(F(a), F(b)) += rho(a, b)``."""
    image = {c: step(rule, c) for c in rho.basis()}
    out: dict[tuple[Config, Config], complex] = {}
    for (a, b), v in rho.items():
        key = (image[a], image[b])
        out[key] = out.get(key, 0j) + v
    return DensityOp(_drop_zeros(out))


@dataclass(frozen=True, eq=False)
class ReducedMatrix:
    """Dense reduced state on a finite region.

    Rows and columns follow ``order``: region words in lexicographic alphabet
    order, the leftmost region cell being the most significant.
    """

    region: tuple[int, ...]
    order: tuple[str, ...]
    matrix: np.ndarray

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def to_json(self) -> dict:
        return {
            "region": list(self.region),
            "order": list(self.order),
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }


def _split(c: Config, region: tuple[int, ...], q: str) -> tuple[str, Config]:
    """(word on the region, configuration with the region blanked)."""
    inside = c.restrict(region, q)
    if not c.word:
        return inside, c
    cells = list(c.word)
    for j in region:
        i = j - c.offset
        if 0 <= i < len(cells):
            cells[i] = q
    return inside, canonicalize(c.offset, "".join(cells), q)


def reduce_entries(rho: DensityOp, region: Iterable[int], alphabet: Alphabet
                   ) -> dict[tuple[str, str], complex]:
    """Partial trace over the complement of ``region`` as a sparse map.

    ``(x1, y1) -> sum of rho(a, b)`` over entries with ``a`` equal to ``b``
    off the region, ``a`` restricted to the region being ``x1`` and ``b``
    restricted being ``y1``. No dimension cap applies.
    """
    region = make_region(region)
    q = alphabet.quiescent
    parts = {c: _split(c, region, q) for c in rho.basis()}
    out: dict[tuple[str, str], complex] = {}
    for (a, b), v in rho.items():
        xa, ra = parts[a]
        xb, rb = parts[b]
        if ra == rb:
            out[(xa, xb)] = out.get((xa, xb), 0j) + v
    return out


def reduce(rho: DensityOp, region: Iterable[int], alphabet: Alphabet,
           max_dim: int = MAX_REDUCED_DIM) -> ReducedMatrix:
    region = make_region(region)
    dim = len(alphabet) ** len(region)
    if dim > max_dim:
        raise RegionTooLarge(f"reduced dimension {dim} exceeds cap {max_dim}")
    order = tuple(alphabet.words(len(region)))
    idx = {w: i for i, w in enumerate(order)}
    m = np.zeros((dim, dim), dtype=complex)
    for (x, y), v in reduce_entries(rho, region, alphabet).items():
        m[idx[x], idx[y]] += v
    return ReducedMatrix(region, order, m)


def trace_distance(m1: ReducedMatrix, m2: ReducedMatrix) -> float:
    """Half the sum of absolute eigenvalues of the (Hermitian) difference."""
    if m1.region != m2.region or m1.order != m2.order:
        raise RegionMismatch(f"regions {m1.region} and {m2.region} differ")
    d = m1.matrix - m2.matrix
    d = (d + d.conj().T) / 2
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))


def load_state(data: list, alphabet: Alphabet) -> Superposition:
    """Decode the JSON state format; amplitudes are taken as given."""
    amps: dict[Config, complex] = {}
    try:
        for item in data:
            c = parse_config(item["config"], alphabet)
            amps[c] = amps.get(c, 0j) + complex(float(item.get("re", 0.0)), float(item.get("im", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed state file: {exc}") from None
    return Superposition(_drop_zeros(amps))


def dump_state(s: Superposition, alphabet: Alphabet) -> list[dict]:
    items = sorted(s.amplitudes.items(), key=lambda kv: alphabet.config_key(kv[0]))
    return [{"config": str(c), "re": a.real, "im": a.imag} for c, a in items]
