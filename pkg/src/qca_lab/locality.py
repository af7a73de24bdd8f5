"""Finite-window locality checks, the uniform-locality falsifier and the
two-party signalling experiment.

Window words are ordered lexicographically over the sorted window cells
(leftmost cell most significant), matching the order used for reduced
matrices.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable

import numpy as np
from scipy import sparse

from .core import Config, Rule, canonicalize, configs_in_window, minkowski, step
from .debruijn import (
    WitnessPair,
    build_pair_graph,
    classify,
    image_difference,
    inverse_neighborhood,
    offdiagonal_cycle_pair,
    pump_plan,
    pump_witness,
    _differing_cells,
)
from .errors import (
    BobCellEqual,
    InputError,
    RegionTooLarge,
    RuleNotInjective,
    RuleReversible,
    WindowTooLarge,
    WindowTooSmall,
)
from .quantum import (
    MAX_REDUCED_DIM,
    ReducedMatrix,
    Superposition,
    evolve,
    make_region,
    make_superposition,
    apply_F,
    pure_density,
    reduce,
    reduce_entries,
    trace_distance,
)

__all__ = [
    "LocalOperator",
    "LocalityReport",
    "Violation",
    "FalsifierReport",
    "SignallingReport",
    "SingleSidedWitness",
    "conjugate_local_operator",
    "check_localized",
    "verify_locality",
    "certified_neighborhood",
    "required_cells",
    "default_window",
    "falsify_uniform_locality",
    "controlled_phase",
    "signalling_experiment",
    "single_sided_witness_search",
    "MAX_WINDOW",
]

MAX_WINDOW = 65536
TOL = 1e-9


def max_window() -> int:
    env = os.environ.get("QCA_MAX_WINDOW")
    return int(env) if env else MAX_WINDOW


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """``matrix`` on the region's words, acting as identity elsewhere."""

    region: tuple[int, ...]
    matrix: np.ndarray

    @classmethod
    def unit(cls, region, alphabet, row: str, col: str) -> "LocalOperator":
        region = make_region(region)
        words = list(alphabet.words(len(region)))
        m = np.zeros((len(words), len(words)), dtype=complex)
        m[words.index(row), words.index(col)] = 1
        return cls(region, m)


@dataclass(frozen=True)
class Violation:
    row: str
    col: str
    reason: str
    value: complex = 0j
    reference: tuple[str, str] | None = None

    def as_dict(self) -> dict:
        d = {"row": self.row, "col": self.col, "reason": self.reason,
             "value": [self.value.real, self.value.imag]}
        if self.reference is not None:
            d["reference"] = list(self.reference)
        return d


class _WindowImages:
    """Images of every configuration supported in a window, grouped by what
    they look like away from a target region."""

    def __init__(self, rule: Rule, region: tuple[int, ...], window: tuple[int, ...]):
        a = rule.alphabet
        q = a.quiescent
        self.window = window
        self.configs = list(configs_in_window(a, window))
        words = list(a.words(len(region)))
        index = {w: i for i, w in enumerate(words)}
        self.region_words = words
        self.inside = np.empty(len(self.configs), dtype=np.int64)
        groups: dict[Config, list[int]] = {}
        region_set = set(region)
        for i, u in enumerate(self.configs):
            fu = step(rule, u)
            self.inside[i] = index[fu.restrict(region, q)]
            blank = "".join(q if fu.offset + j in region_set else s for j, s in enumerate(fu.word))
            key = canonicalize(fu.offset, blank, q)
            groups.setdefault(key, []).append(i)
        # all (u, v) with F(u), F(v) equal off the region
        pairs = [(i, j) for g in groups.values() for i in g for j in g]
        self.rows = np.array([p[0] for p in pairs], dtype=np.int64)
        self.cols = np.array([p[1] for p in pairs], dtype=np.int64)

    def operator(self, op_matrix: np.ndarray) -> sparse.csr_array:
        vals = np.asarray(op_matrix, dtype=complex)[self.inside[self.rows], self.inside[self.cols]]
        keep = vals != 0
        n = len(self.configs)
        return sparse.csr_array((vals[keep], (self.rows[keep], self.cols[keep])), shape=(n, n))


def _check_window(rule: Rule, window: tuple[int, ...], cap: int | None) -> None:
    cap = max_window() if cap is None else cap
    dim = len(rule.alphabet) ** len(window)
    if dim > cap:
        raise WindowTooLarge(f"window of {len(window)} cells has {dim} configurations (cap {cap})")


def conjugate_local_operator(rule: Rule, op: LocalOperator, window: Iterable[int],
                             cap: int | None = None) -> sparse.csr_array:
    """Matrix of ``F~^dagger (op (x) Id) F~`` between configurations supported in ``window``.

    Entry ``[u, v]`` is ``op[F(u)|R, F(v)|R]`` when ``F(u)`` and ``F(v)`` agree
    off the operator's region ``R``, else 0.
    """
    window = make_region(window)
    need = minkowski(op.region, rule.neighborhood)
    if not set(need) <= set(window):
        raise WindowTooSmall(f"window must contain region + neighborhood = {list(need)}")
    _check_window(rule, window, cap)
    return _WindowImages(rule, op.region, window).operator(op.matrix)


class _Layout:
    """Split of window word indices into (region part, complement part)."""

    def __init__(self, k: int, region: tuple[int, ...], window: tuple[int, ...]):
        pos = {c: i for i, c in enumerate(window)}
        n = len(window)
        idx = np.arange(k ** n)
        digits = [(idx // k ** (n - 1 - i)) % k for i in range(n)]
        inner = [pos[c] for c in region]
        outer = [i for i in range(n) if window[i] not in set(region)]
        self.inner = np.zeros(k ** n, dtype=np.int64)
        for i in inner:
            self.inner = self.inner * k + digits[i]
        self.outer = np.zeros(k ** n, dtype=np.int64)
        for i in outer:
            self.outer = self.outer * k + digits[i]
        self.n_outer = k ** len(outer)


def check_localized(m, region: Iterable[int], window: Iterable[int], alphabet,
                    atol: float = TOL) -> tuple[bool, Violation | None]:
    """Is ``m`` (indexed by window words) of the form ``B (x) Id`` on ``region``?

    Fails when a nonzero entry links words differing off the region, or when
    an entry ``[(x1, u2), (y1, u2)]`` depends on the outside part ``u2``.
    """
    region = make_region(region)
    window = make_region(window)
    if not set(region) <= set(window):
        raise InputError(f"region {list(region)} not inside window {list(window)}")
    coo = sparse.coo_array(m) if not sparse.issparse(m) else m.tocoo()
    k = len(alphabet)
    lay = _Layout(k, region, window)
    words = list(alphabet.words(len(window)))
    rows, cols, vals = coo.row, coo.col, coo.data
    keep = np.abs(vals) > atol
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]

    cross = lay.outer[rows] != lay.outer[cols]
    if np.any(cross):
        i = int(np.flatnonzero(cross)[0])
        return False, Violation(words[rows[i]], words[cols[i]], "links words differing off the region",
                                complex(vals[i]))
    blocks: dict[tuple[int, int], list[int]] = {}
    for i, (r, c) in enumerate(zip(rows.tolist(), cols.tolist())):
        blocks.setdefault((int(lay.inner[r]), int(lay.inner[c])), []).append(i)
    for (x1, y1), members in blocks.items():
        ref = members[0]
        if len(members) < lay.n_outer:
            present = {int(lay.outer[rows[i]]) for i in members}
            missing = next(o for o in range(lay.n_outer) if o not in present)
            # locate the zero entry with the same region part
            r_zero = int(np.flatnonzero((lay.inner == x1) & (lay.outer == missing))[0])
            c_zero = int(np.flatnonzero((lay.inner == y1) & (lay.outer == missing))[0])
            return False, Violation(words[r_zero], words[c_zero], "entry depends on the outside part",
                                    0j, (words[rows[ref]], words[cols[ref]]))
        for i in members[1:]:
            if abs(vals[i] - vals[ref]) > atol:
                return False, Violation(words[rows[i]], words[cols[i]], "entry depends on the outside part",
                                        complex(vals[i]), (words[rows[ref]], words[cols[ref]]))
    return True, None


@dataclass(frozen=True)
class LocalityReport:
    region: tuple[int, ...]
    neighborhood: tuple[int, ...]
    window: tuple[int, ...]
    verdict: str
    violation: dict | None = None

    def as_dict(self) -> dict:
        return {
            "region": list(self.region),
            "neighborhood": list(self.neighborhood),
            "window": list(self.window),
            "verdict": self.verdict,
            "violation": self.violation,
        }


def required_cells(rule: Rule, region, neighborhood) -> tuple[int, ...]:
    """``region + neighborhood`` plus every cell the rule reads from it; a
    window must contain both."""
    target = minkowski(region, neighborhood)
    return tuple(sorted(set(target) | set(minkowski(target, rule.neighborhood))))


def default_window(rule: Rule, region, neighborhood) -> tuple[int, ...]:
    cells = required_cells(rule, region, neighborhood)
    return tuple(range(cells[0] - 2, cells[-1] + 3))


def verify_locality(rule: Rule, region, neighborhood, window=None,
                    cap: int | None = None) -> LocalityReport:
    """Test that every ``|z><t|`` on ``region`` is pulled back into ``region + neighborhood``.

    The check runs on configurations supported in ``window``; the default is
    the hull of :func:`required_cells` widened by two cells. A window
    over the enumeration cap yields the verdict ``"inconclusive"``.
    """
    region = make_region(region)
    neighborhood = make_region(neighborhood)
    window = default_window(rule, region, neighborhood) if window is None else make_region(window)
    need = required_cells(rule, region, neighborhood)
    if not set(need) <= set(window):
        raise WindowTooSmall(f"window must contain region + neighborhood and its image cells {list(need)}")
    target = minkowski(region, neighborhood)
    try:
        _check_window(rule, window, cap)
    except WindowTooLarge:
        return LocalityReport(region, neighborhood, window, "inconclusive")
    images = _WindowImages(rule, region, window)
    words = images.region_words
    for zi, ti in product(range(len(words)), repeat=2):
        op = np.zeros((len(words), len(words)), dtype=complex)
        op[zi, ti] = 1
        ok, bad = check_localized(images.operator(op), target, window, rule.alphabet)
        if not ok:
            v = bad.as_dict()
            v["operator"] = [words[zi], words[ti]]
            return LocalityReport(region, neighborhood, window, "violated", v)
    return LocalityReport(region, neighborhood, window, "verified")


def certified_neighborhood(rule: Rule, region) -> tuple[int, ...]:
    """A neighborhood at which an open rule's quantization is provably local.

    With ``R`` the rule neighborhood plus cell 0 and ``I`` the inverse
    neighborhood of ``region``, this is ``R - R + I``. Adding 0 only enlarges
    the result, and any superset of a valid neighborhood stays valid.
    """
    nc = tuple(sorted(set(rule.neighborhood) | {0}))
    ni = inverse_neighborhood(rule, region)
    return minkowski(minkowski(nc, nc, sign=-1), ni)


# --------------------------------------------------------------------------
# Uniform-locality falsifier

@dataclass(frozen=True)
class FalsifierReport:
    x: Config
    y: Config
    image_diff: tuple[int, ...]
    bob_cell: int
    neighborhood: tuple[int, ...]
    reduction_residual: float
    evolved_distance: float
    construction: str
    repeats: int

    def as_dict(self) -> dict:
        return {
            "x": str(self.x),
            "y": str(self.y),
            "A": list(self.image_diff),
            "B": [self.bob_cell],
            "neighborhood": list(self.neighborhood),
            "reduction_residual": self.reduction_residual,
            "evolved_trace_distance": self.evolved_distance,
            "construction": self.construction,
            "repeats": self.repeats,
        }


def _bob_candidates(x: Config, y: Config, image_diff, neighborhood, q: str) -> list[int]:
    shadow = set(minkowski(image_diff, neighborhood))
    return [j for j in _differing_cells(x, y, q) if j not in shadow]


def falsify_uniform_locality(rule: Rule, neighborhood, max_repeats: int = 256) -> FalsifierReport:
    """Build states whose reductions on ``A + N`` coincide but whose images differ on ``A``.

    ``x`` and ``y`` have images differing exactly on ``A``, yet differ
    themselves at a cell outside ``A + N``. Non-open rules use pumped pairs;
    open ones run around an off-diagonal cycle of the pair diagram (for XOR:
    all-quiescent against a block of ones). The smallest working pair is
    returned, together with the numerical checks on the two pure states
    ``(|x> + |y>)/sqrt2`` and ``(|x> - |y>)/sqrt2``.
    """
    neighborhood = make_region(neighborhood)
    g = build_pair_graph(rule)
    report = classify(rule, g)
    if not report.injective_finite:
        raise RuleNotInjective(f"rule {rule.name!r} is not injective on finite configurations")
    if report.reversible:
        raise RuleReversible(f"rule {rule.name!r} is reversible; its quantization is uniformly local")
    q = rule.quiescent
    for n in range(1, max_repeats + 1):
        if report.open:
            x, y, _ = offdiagonal_cycle_pair(rule, n, g)
            construction = "offdiagonal-cycle"
        else:
            w = pump_witness(rule, n, graph=g)
            x, y = w.x, w.y
            construction = f"pumped-{w.side}"
        a_set = image_difference(rule, x, y)
        bobs = _bob_candidates(x, y, a_set, neighborhood, q)
        if bobs:
            break
    else:
        raise RuntimeError(f"no witness within {max_repeats} repeats")
    # Bob sits on the candidate farthest from A (ties: leftmost)
    bob = max(bobs, key=lambda j: (min(abs(j - s) for s in a_set), -j))
    shadow = minkowski(a_set, neighborhood)
    plus = pure_density(make_superposition([(x, 1), (y, 1)]))
    minus = pure_density(make_superposition([(x, 1), (y, -1)]))
    rp = reduce_entries(plus, shadow, rule.alphabet)
    rm = reduce_entries(minus, shadow, rule.alphabet)
    residual = float(np.sqrt(sum(abs(rp.get(k, 0) - rm.get(k, 0)) ** 2 for k in set(rp) | set(rm))))
    sp = reduce(evolve(rule, plus), a_set, rule.alphabet)
    sm = reduce(evolve(rule, minus), a_set, rule.alphabet)
    return FalsifierReport(x, y, a_set, bob, neighborhood, residual, trace_distance(sp, sm),
                           construction, n)


# --------------------------------------------------------------------------
# Signalling

def controlled_phase(s: Superposition, cell: int, symbol: str, alphabet) -> Superposition:
    """Flip the sign of every basis configuration holding ``symbol`` at ``cell``."""
    q = alphabet.quiescent
    return Superposition({c: (-a if c.at(cell, q) == symbol else a) for c, a in s.items()},
                         s.non_isometric)


@dataclass(frozen=True, eq=False)
class SignallingReport:
    x: Config
    y: Config
    bob_cell: int
    alice_region: tuple[int, ...]
    sigma_plus: ReducedMatrix
    sigma_minus: ReducedMatrix
    distance: float
    success_probability: float

    def as_dict(self) -> dict:
        return {
            "x": str(self.x),
            "y": str(self.y),
            "bob_cell": self.bob_cell,
            "alice_region": list(self.alice_region),
            "sigma_plus": self.sigma_plus.to_json(),
            "sigma_minus": self.sigma_minus.to_json(),
            "distance": self.distance,
            "success_probability": self.success_probability,
        }


def signalling_experiment(rule: Rule, x: Config, y: Config, bob_cell: int, alice_region) -> SignallingReport:
    """Bob either leaves ``(|x> + |y>)/sqrt2`` alone or phase-flips it at his cell;
    after one step Alice compares her reduced states.

    The best single-shot guess succeeds with probability ``(1 + D) / 2``
    where ``D`` is the trace distance between Alice's two possible states.
    """
    q = rule.quiescent
    alice = make_region(alice_region)
    if x.at(bob_cell, q) == y.at(bob_cell, q):
        raise BobCellEqual(f"x and y agree at Bob's cell {bob_cell}")
    if len(rule.alphabet) ** len(alice) > MAX_REDUCED_DIM:
        raise RegionTooLarge(f"Alice's region {list(alice)} is too large")
    phi_plus = make_superposition([(x, 1), (y, 1)])
    phi_minus = controlled_phase(phi_plus, bob_cell, y.at(bob_cell, q), rule.alphabet)
    s_plus = reduce(pure_density(apply_F(rule, phi_plus)), alice, rule.alphabet)
    s_minus = reduce(pure_density(apply_F(rule, phi_minus)), alice, rule.alphabet)
    d = min(1.0, max(0.0, trace_distance(s_plus, s_minus)))
    return SignallingReport(x, y, bob_cell, alice, s_plus, s_minus, d, (1 + d) / 2)


@dataclass(frozen=True)
class SingleSidedWitness:
    side: str
    witness: WitnessPair
    path_length: int
    signal: SignallingReport = field(compare=False)

    def as_dict(self) -> dict:
        return {
            "side": self.side,
            "x": str(self.witness.x),
            "y": str(self.witness.y),
            "alice_region": list(self.witness.diff_set),
            "bob_cell": self.witness.far_diff,
            "path_length": self.path_length,
            "distance": self.signal.distance,
            "success_probability": self.signal.success_probability,
        }


def single_sided_witness_search(rule: Rule, side: str, bound: int, pumps: int = 3
                                ) -> SingleSidedWitness | None:
    """Look for a signalling setup with Alice entirely on one side of Bob.

    ``side`` is Alice's side. A witness is an off-diagonal cycle joined to the
    all-quiescent vertex (into it for ``"left"``, out of it for ``"right"``)
    with cycle plus connecting path of at most ``bound`` edges. Returns
    ``None`` when the search is exhausted, which is always the case for open
    rules.
    """
    if side not in ("left", "right"):
        raise InputError(f"side must be 'left' or 'right', not {side!r}")
    g = build_pair_graph(rule)
    report = classify(rule, g)
    if not report.injective_finite:
        raise RuleNotInjective(f"rule {rule.name!r} is not injective on finite configurations")
    plan = pump_plan(g, side)
    if plan is None:
        return None
    cycle, path = plan
    length = (len(cycle) - 1) + (len(path) - 1)
    if length > bound:
        return None
    w = pump_witness(rule, pumps, side=side, graph=g)
    if side == "left":
        assert max(w.diff_set) < w.far_diff
    else:
        assert min(w.diff_set) > w.far_diff
    signal = signalling_experiment(rule, w.x, w.y, w.far_diff, w.diff_set)
    return SingleSidedWitness(side, w, length, signal)
