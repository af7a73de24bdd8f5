"""De Bruijn pair diagrams and the decision procedures built on them.

Conventions
-----------
Let the rule read cells ``lo..hi`` (``span = hi - lo``). Vertices are pairs
of overlap words of length ``L = max(span, 1)``; the vertex at time ``t``
holds cells ``t + lo .. t + lo + L - 1`` of both tracks. The edge from time
``t`` to ``t + 1`` appends one cell to each track and carries output cell
``t``; it exists iff both tracks produce the same output there. A pair of
configurations with equal images is then exactly a bi-infinite path, and
the pair is equal on a cell iff every vertex covering that cell is on the
diagonal.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from graphlib import CycleError, TopologicalSorter

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .core import Config, Rule, canonicalize, step
from .errors import (
    GraphTooLarge,
    HaloUnavailable,
    NotOpen,
    RuleIsOpen,
    RuleNotInjective,
)

__all__ = [
    "PairGraph",
    "PropertyReport",
    "WitnessPair",
    "build_pair_graph",
    "classify",
    "preimages",
    "preimage_halo",
    "inverse_neighborhood",
    "rough_inverse_bound",
    "pump_plan",
    "pump_witness",
    "offdiagonal_cycle_pair",
    "image_difference",
    "export_dot",
    "MAX_VERTICES",
]

MAX_VERTICES = 10**6


def _max_vertices() -> int:
    env = os.environ.get("QCA_MAX_VERTICES")
    return int(env) if env else MAX_VERTICES


@dataclass(frozen=True, eq=False)
class PairGraph:
    rule: Rule
    overlap: int
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    diagonal: np.ndarray = field(repr=False)
    allq: int
    scc: np.ndarray = field(repr=False)
    cyclic: np.ndarray = field(repr=False)

    @property
    def vertex_count(self) -> int:
        return len(self.diagonal)

    @property
    def edge_count(self) -> int:
        return int(self.indptr[-1])

    @property
    def scc_count(self) -> int:
        return int(self.scc.max()) + 1 if len(self.scc) else 0

    def successors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def words(self, v: int) -> tuple[str, str]:
        """The two overlap words of vertex ``v``."""
        syms = self.rule.alphabet.symbols
        k, L = len(syms), self.overlap
        base = k ** L
        return _decode(v // base, k, L, syms), _decode(v % base, k, L, syms)

    def vertex(self, u: str, v: str) -> int:
        a = self.rule.alphabet
        k, L = len(a), self.overlap
        return _encode(u, a) * k ** L + _encode(v, a)

    def matrix(self) -> sparse.csr_array:
        n = self.vertex_count
        data = np.ones(len(self.indices), dtype=np.int8)
        return sparse.csr_array((data, self.indices, self.indptr), shape=(n, n))


def _encode(word: str, alphabet) -> int:
    n = 0
    for s in word:
        n = n * len(alphabet) + alphabet.index(s)
    return n


def _decode(n: int, k: int, length: int, syms) -> str:
    out = []
    for _ in range(length):
        out.append(syms[n % k])
        n //= k
    return "".join(reversed(out))


def _window_outputs(rule: Rule, width: int) -> np.ndarray:
    """Output symbol index for every window of ``width`` cells starting at ``lo``."""
    a = rule.alphabet
    return np.array([a.index(rule.local(w)) for w in a.words(width)], dtype=np.int64)


def build_pair_graph(rule: Rule, max_vertices: int | None = None) -> PairGraph:
    """Build the pair diagram of ``rule`` with SCCs and the diagonal marked."""
    cap = _max_vertices() if max_vertices is None else max_vertices
    k = len(rule.alphabet)
    L = max(rule.span, 1)
    if k ** (2 * L) > cap:
        raise GraphTooLarge(f"pair diagram would have {k ** (2 * L)} vertices (cap {cap})")
    return _build(rule, L)


@lru_cache(maxsize=64)
def _build(rule: Rule, L: int) -> PairGraph:
    k = len(rule.alphabet)
    base = k ** L
    n = base * base
    out = _window_outputs(rule, L + 1).reshape(base, k)  # out[u, a] = F0(u + a)

    verts = np.arange(n, dtype=np.int64)
    u, v = np.divmod(verts, base)
    low = base // k  # drop the oldest symbol when shifting
    ou = out[u]  # (n, k)
    ov = out[v]
    match = ou[:, :, None] == ov[:, None, :]  # (n, a, b)
    if rule.span == 0:
        # the output only sees the source vertex; also demand agreement at the
        # target so dead-end vertices stay unreachable
        f0 = out[:, 0]
        syms = np.arange(k)
        match &= (f0[syms][:, None] == f0[syms][None, :])[None, :, :]
    src, a, b = np.nonzero(match)
    dst = ((u[src] % low) * k + a) * base + (v[src] % low) * k + b
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    indices = dst.astype(np.int64)

    diagonal = u == v
    q = rule.alphabet.index(rule.quiescent)
    qword = sum(q * k ** i for i in range(L))
    allq = qword * base + qword

    mat = sparse.csr_array((np.ones(len(indices), dtype=np.int8), indices, indptr), shape=(n, n))
    _, raw = csgraph.connected_components(mat, directed=True, connection="strong")
    # relabel components by their smallest vertex for reproducibility
    first = {}
    labels = np.empty(n, dtype=np.int64)
    for i, lab in enumerate(raw):
        labels[i] = first.setdefault(lab, len(first))
    sizes = np.bincount(labels)
    self_loop = np.zeros(n, dtype=bool)
    self_loop[src[src == dst]] = True
    cyclic = (sizes[labels] > 1) | self_loop
    return PairGraph(rule, L, indptr, indices, diagonal, int(allq), labels, cyclic)


def _reach(graph: PairGraph, sources: np.ndarray, reverse: bool = False) -> np.ndarray:
    """Boolean mask of vertices reachable from (or, reversed, co-reaching) ``sources``."""
    n = graph.vertex_count
    mat = graph.matrix()
    if reverse:
        mat = mat.T.tocsr()
    src = np.flatnonzero(sources)
    if not len(src):
        return np.zeros(n, dtype=bool)
    extra = sparse.csr_array((np.ones(len(src), dtype=np.int8), (np.zeros(len(src), dtype=np.int64), src)),
                             shape=(1, n))
    aug = sparse.vstack([sparse.hstack([mat, sparse.csr_array((n, 1), dtype=np.int8)]),
                         sparse.hstack([extra, sparse.csr_array((1, 1), dtype=np.int8)])]).tocsr()
    order = csgraph.breadth_first_order(aug, n, directed=True, return_predecessors=False)
    mask = np.zeros(n + 1, dtype=bool)
    mask[order] = True
    return mask[:n]


@dataclass(frozen=True)
class _Masks:
    from_allq: np.ndarray
    to_allq: np.ndarray
    from_delta: np.ndarray
    to_delta: np.ndarray
    from_cycle: np.ndarray
    to_cycle: np.ndarray


@lru_cache(maxsize=64)
def _masks(graph: PairGraph) -> _Masks:
    allq = np.zeros(graph.vertex_count, dtype=bool)
    allq[graph.allq] = True
    return _Masks(
        from_allq=_reach(graph, allq),
        to_allq=_reach(graph, allq, reverse=True),
        from_delta=_reach(graph, graph.diagonal),
        to_delta=_reach(graph, graph.diagonal, reverse=True),
        from_cycle=_reach(graph, graph.cyclic),
        to_cycle=_reach(graph, graph.cyclic, reverse=True),
    )


@dataclass(frozen=True)
class PropertyReport:
    injective_finite: bool
    reversible: bool
    left_closing: bool
    right_closing: bool
    open: bool
    vertex_count: int
    offdiagonal_scc_count: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def classify(rule: Rule, graph: PairGraph | None = None) -> PropertyReport:
    """Decide injectivity on finite configurations, reversibility and closingness.

    * injective on finite configs: no off-diagonal vertex lies on a path
      from the all-quiescent vertex back to itself;
    * reversible: no off-diagonal vertex lies on a bi-infinite path;
    * left-closing: no path leaves the diagonal and continues forever;
    * right-closing: no path coming from infinity ends in the diagonal
      after an off-diagonal vertex.

    ``open`` is the conjunction of the two closing properties.
    """
    g = graph or build_pair_graph(rule)
    m = _masks(g)
    off = ~g.diagonal
    injective = not np.any(off & m.from_allq & m.to_allq)
    reversible = not np.any(off & m.from_cycle & m.to_cycle)
    left = not np.any(off & m.from_delta & m.to_cycle)
    right = not np.any(off & m.from_cycle & m.to_delta)
    is_open = left and right
    assert not reversible or is_open, "reversible rule reported non-open"
    assert not is_open or injective, "open rule reported non-injective"
    diag_sccs = set(g.scc[g.diagonal].tolist())
    cyc_sccs = set(g.scc[g.cyclic].tolist())
    return PropertyReport(
        injective_finite=bool(injective),
        reversible=bool(reversible),
        left_closing=bool(left),
        right_closing=bool(right),
        open=bool(is_open),
        vertex_count=g.vertex_count,
        offdiagonal_scc_count=len(cyc_sccs - diag_sccs),
    )


# --------------------------------------------------------------------------
# Preimages

def _quiet_graph(rule: Rule) -> tuple[dict[int, list[int]], int, int]:
    """Single-track de Bruijn graph restricted to edges producing ``q``."""
    a = rule.alphabet
    k, L = len(a), max(rule.span, 1)
    base = k ** L
    out = _window_outputs(rule, L + 1).reshape(base, k)
    q = a.index(rule.quiescent)
    qword = sum(q * k ** i for i in range(L))
    succ = {w: [(w % (base // k)) * k + s for s in range(k) if out[w, s] == q] for w in range(base)}
    return succ, qword, L


def _longest_from(succ: dict[int, list[int]], nodes: set[int], start_nodes) -> dict[int, int]:
    """Longest path length (edges) starting at each node of the DAG induced on ``nodes``."""
    ts = TopologicalSorter({v: [w for w in succ[v] if w in nodes] for v in nodes})
    order = list(ts.static_order())  # successors come first
    best = {}
    for v in order:
        best[v] = max((best[w] + 1 for w in succ[v] if w in nodes), default=0)
    return {v: best[v] for v in start_nodes}


@lru_cache(maxsize=64)
def preimage_halo(rule: Rule) -> tuple[int, int]:
    """How far (left, right) a preimage can stick out of its image's support.

    A preimage may extend past the image only along paths of the single-track
    diagram whose edges all output ``q``. For rules injective on finite
    configurations those paths cannot loop (a loop could be pumped into
    infinitely many preimages), so their length is bounded; any loop means
    no finite halo exists.
    """
    succ, qv, L = _quiet_graph(rule)
    lo = rule.lo
    succ_noloop = {v: [w for w in ws if not (v == qv and w == qv)] for v, ws in succ.items()}
    pred = {v: [] for v in succ}
    for v, ws in succ_noloop.items():
        for w in ws:
            pred[w].append(v)

    def closure(start, nbrs):
        seen, todo = {start}, [start]
        while todo:
            for w in nbrs[todo.pop()]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return seen

    try:
        ahead = closure(qv, succ_noloop)
        d_left = max(_longest_from(succ_noloop, ahead, [qv]).values())
        behind = closure(qv, pred)
        longest = _longest_from(succ_noloop, behind, behind)
        d_right = max(longest.values())
    except CycleError:
        raise HaloUnavailable(
            f"rule {rule.name or ''} admits unboundedly long quiescent-image tails; "
            "supply an explicit halo") from None
    return max(0, d_left - lo - L), max(0, d_right + lo)


def preimages(rule: Rule, c: Config, halo: int | None = None) -> list[Config]:
    """All finite configurations ``u`` with ``step(rule, u) == c``.

    Candidate supports are confined to the support of ``c`` widened by
    ``halo`` cells on each side. By default the halo comes from
    :func:`preimage_halo`, which makes the list complete for rules injective
    on finite configurations. For the all-quiescent ``c`` the window is
    ``[-halo, halo]``.
    """
    q = rule.quiescent
    if halo is None:
        left, right = preimage_halo(rule)
    else:
        left = right = halo
    if c.word:
        lo_c, hi_c = c.support
        w_lo, w_hi = lo_c - left, hi_c + right
    else:
        w_lo, w_hi = -max(left, right), max(left, right)
    nb = rule.neighborhood
    lo, hi = rule.lo, rule.hi
    syms = rule.alphabet.symbols
    table = rule.table
    if c.word and (c.support[0] < w_lo - hi or c.support[1] > w_hi - lo):
        return []
    size = w_hi - w_lo + 1
    cells = [q] * size
    found: list[Config] = []

    def out_at(t: int) -> str:
        return table["".join(cells[t + o - w_lo] if 0 <= t + o - w_lo < size else q for o in nb)]

    def extend(j: int):
        if j > w_hi:
            for t in range(w_hi - hi + 1, w_hi - lo + 1):
                if out_at(t) != c.at(t, q):
                    return
            found.append(canonicalize(w_lo, "".join(cells), q))
            return
        t = j - hi
        for s in syms:
            cells[j - w_lo] = s
            if out_at(t) != c.at(t, q):
                continue
            extend(j + 1)
        cells[j - w_lo] = q

    extend(w_lo)
    found = sorted(set(found), key=rule.alphabet.config_key)
    return found


# --------------------------------------------------------------------------
# Confinement for open rules

def _longest_chain(graph: PairGraph, mask: np.ndarray) -> int:
    """Longest path, counted in vertices, inside the DAG induced by ``mask``."""
    nodes = set(np.flatnonzero(mask).tolist())
    if not nodes:
        return 0
    succ = {v: [int(w) for w in graph.successors(v) if int(w) in nodes] for v in nodes}
    best = _longest_from(succ, nodes, nodes)
    return max(best.values()) + 1


@lru_cache(maxsize=64)
def _escape_lengths(graph: PairGraph) -> tuple[int, int]:
    m = _masks(graph)
    off = ~graph.diagonal
    return _longest_chain(graph, off & m.from_delta), _longest_chain(graph, off & m.to_delta)


def inverse_neighborhood(rule: Rule, region, graph: PairGraph | None = None) -> tuple[int, ...]:
    """An interval ``I`` (containing 0) such that equal images outside
    ``region`` force equal preimages outside ``region + I``.

    Uses the exact escape lengths off the diagonal: for an open rule a path
    can leave the diagonal only for a bounded number of steps before the
    region and re-enter it only a bounded number of steps after.
    """
    g = graph or build_pair_graph(rule)
    if not classify(rule, g).open:
        raise NotOpen(f"rule {rule.name!r} is not open; no inverse neighborhood exists")
    region = sorted(set(region))
    if not region:
        return (0,)
    e_left, e_right = _escape_lengths(g)
    L = g.overlap
    d_lo = region[0] - e_left + rule.lo + L
    d_hi = region[-1] + e_right + rule.lo
    need = [j for j in range(d_lo, d_hi + 1)]
    left = max(0, region[0] - d_lo)
    right = max(0, d_hi - region[-1])
    # grow to the right until every possibly-differing cell is covered
    while True:
        cover = {r + o for r in region for o in range(-left, right + 1)}
        if all(j in cover for j in need):
            break
        right += 1
    return tuple(range(-left, right + 1))


def rough_inverse_bound(rule: Rule, region) -> tuple[int, int]:
    """The coarse confinement interval ``[-n-k-l, n+k+l]``.

    ``n`` bounds the region, ``k`` is the neighborhood radius and ``l`` the
    pair-diagram vertex count.
    """
    n = max(abs(r) for r in region) if region else 0
    k = rule.radius
    l = len(rule.alphabet) ** (2 * max(rule.span, 1))
    return -n - k - l, n + k + l


# --------------------------------------------------------------------------
# Pumped witnesses for non-open rules

@dataclass(frozen=True)
class WitnessPair:
    """Two finite configurations whose images differ only on ``diff_set``.

    ``far_diff`` is the cell where ``x`` and ``y`` differ that lies farthest
    from ``diff_set``; with ``side == "left"`` the image differences sit to the
    left of it and it recedes rightwards as ``pump_count`` grows.
    """

    x: Config
    y: Config
    diff_set: tuple[int, ...]
    far_diff: int
    pump_count: int
    side: str
    cycle_length: int = 0


def _differing_cells(x: Config, y: Config, q: str) -> list[int]:
    sup = [s for s in (x.support, y.support) if s]
    if not sup:
        return []
    lo = min(s[0] for s in sup)
    hi = max(s[1] for s in sup)
    return [j for j in range(lo, hi + 1) if x.at(j, q) != y.at(j, q)]


def image_difference(rule: Rule, x: Config, y: Config) -> tuple[int, ...]:
    return tuple(_differing_cells(step(rule, x), step(rule, y), rule.quiescent))


def _bfs_path(graph: PairGraph, start: int, goal, allowed=None) -> list[int] | None:
    """Shortest path (as a vertex list) from ``start`` to a vertex satisfying ``goal``.

    The start vertex itself only counts as a goal through a nonempty path.
    """
    prev = {start: None}
    todo = deque([start])
    while todo:
        v = todo.popleft()
        for w in graph.successors(v):
            w = int(w)
            if allowed is not None and not allowed(w):
                continue
            if goal(w):
                path = [w, v]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            if w not in prev:
                prev[w] = v
                todo.append(w)
    return None


def _shortest_cycle(graph: PairGraph, v: int) -> list[int] | None:
    comp = graph.scc[v]
    return _bfs_path(graph, v, lambda w: w == v, allowed=lambda w: graph.scc[w] == comp)


def _words_along(graph: PairGraph, seq: list[int]) -> tuple[str, str]:
    u0, v0 = graph.words(seq[0])
    xs, ys = [u0], [v0]
    for t in seq[1:]:
        u, v = graph.words(t)
        xs.append(u[-1])
        ys.append(v[-1])
    return "".join(xs), "".join(ys)


def pump_plan(graph: PairGraph, side: str) -> tuple[list[int], list[int]] | None:
    """Shortest (cycle, connecting path) pair violating a closing property.

    ``side="left"``: an off-diagonal cycle with a path into the all-q vertex
    (right-closing fails; the image differences end up left of the pumped
    block). ``side="right"``: the mirror image, a path from the all-q vertex
    into such a cycle.
    """
    m = _masks(graph)
    off_scc = graph.cyclic & ~np.isin(graph.scc, graph.scc[graph.diagonal])
    cand = off_scc & (m.to_delta if side == "left" else m.from_delta)
    best = None
    for v in np.flatnonzero(cand).tolist():
        cycle = _shortest_cycle(graph, v)
        if side == "left":
            path = _bfs_path(graph, v, lambda w: w == graph.allq)
        else:
            path = _bfs_path(graph, graph.allq, lambda w: w == v)
        if cycle is None or path is None:
            continue
        key = (len(cycle) + len(path), len(cycle), v)
        if best is None or key < best[0]:
            best = (key, cycle, path)
    if best is None:
        return None
    return best[1], best[2]


def pump_witness(rule: Rule, k: int, side: str | None = None,
                 graph: PairGraph | None = None) -> WitnessPair:
    """Pumped pair ``x_k = ...q v^k w q...``, ``y_k = ...q v'^k w' q...``.

    ``(v, v')`` runs around an off-diagonal cycle and ``(w, w')`` leads from it
    to the all-quiescent vertex, so the pair follows valid edges everywhere
    except at the left junction; the image-difference set is therefore the
    same for every ``k`` while the pumped block pushes a differing cell ever
    further right. When no cycle leads into the diagonal the mirrored
    construction (``side="right"``) is used.
    """
    if k < 1:
        raise ValueError("pump count must be at least 1")
    g = graph or build_pair_graph(rule)
    report = classify(rule, g)
    if report.open:
        raise RuleIsOpen(f"rule {rule.name!r} is open; every pumping attempt fails")
    if not report.injective_finite:
        raise RuleNotInjective(f"rule {rule.name!r} is not injective on finite configurations")
    sides = [side] if side else ["left", "right"]
    for s in sides:
        plan = pump_plan(g, s)
        if plan is not None:
            break
    else:
        raise RuleIsOpen(f"no pumpable cycle on side {side!r} for rule {rule.name!r}")
    cycle, path = plan
    q = rule.quiescent
    if s == "left":
        seq = [cycle[0]] + cycle[1:] * k + path[1:]
        start = 0
    else:
        seq = path + cycle[1:] * k
        start = -(len(seq) - 1)
    xw, yw = _words_along(g, seq)
    x = canonicalize(start + rule.lo, xw, q)
    y = canonicalize(start + rule.lo, yw, q)
    diff = image_difference(rule, x, y)
    cells = _differing_cells(x, y, q)
    far = max(cells) if s == "left" else min(cells)
    return WitnessPair(x, y, diff, far, k, s, len(cycle) - 1)


def offdiagonal_cycle_pair(rule: Rule, repeats: int, graph: PairGraph | None = None
                           ) -> tuple[Config, Config, int]:
    """Block pair obtained by running ``repeats`` times around the shortest
    off-diagonal cycle, with quiescent surroundings on both tracks.

    Both junctions break the diagram, so the images differ near the two ends
    of the block while the configurations differ all along it. Returns
    ``(x, y, cycle_length)``.
    """
    g = graph or build_pair_graph(rule)
    off_scc = g.cyclic & ~np.isin(g.scc, g.scc[g.diagonal])
    best = None
    for v in np.flatnonzero(off_scc).tolist():
        cycle = _shortest_cycle(g, v)
        if cycle is None:
            continue
        u0, v0 = g.words(v)
        key = (len(cycle), u0 != rule.quiescent * len(u0), v0 != rule.quiescent * len(v0), v)
        if best is None or key < best[0]:
            best = (key, cycle)
    if best is None:
        raise RuleIsOpen(f"rule {rule.name!r} has no off-diagonal cycle")
    cycle = best[1]
    seq = [cycle[0]] + cycle[1:] * repeats
    xw, yw = _words_along(g, seq)
    q = rule.quiescent
    return canonicalize(rule.lo, xw, q), canonicalize(rule.lo, yw, q), len(cycle) - 1


# --------------------------------------------------------------------------
# DOT export

def export_dot(graph: PairGraph) -> str:
    """Graphviz rendering; diagonal vertices are filled, all-q is doubled."""
    lines = ["digraph pair_diagram {", '  node [shape=box, fontname="monospace"];']
    for v in range(graph.vertex_count):
        u, w = graph.words(v)
        attrs = [f'label="({u},{w})"']
        if graph.diagonal[v]:
            attrs.append('style=filled, fillcolor="lightgray"')
        if v == graph.allq:
            attrs.append("peripheries=2")
        lines.append(f"  v{v} [{', '.join(attrs)}];")
    for v in range(graph.vertex_count):
        for w in graph.successors(v):
            lines.append(f"  v{v} -> v{int(w)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
