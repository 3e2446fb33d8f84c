"""Edge constrained vertex coloring: single-problem routines and the batch engine.

A constraint list maps edge indices to a pair of colors (a size-2 multiset,
stored sorted). A coloring maps vertex indices to colors. The single-problem
functions (``intersections``, ``extend_along_path``, ``solve_tree``,
``solve_component``) work on plain dicts and any comparable color values.

``solve_many`` solves n constraint lists on one precomputed ``ForestPlan`` at
once. Colors are interned to small integers and every step of the tree solve
runs as a numpy operation across all n problems, so the cost is a fixed number
of array passes per edge.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    ColorNotInIntersection,
    IndexOutOfRange,
    MissingConstraint,
    NoGlobalSolution,
    NoSolutionOnPath,
)
from .graph import ComponentPlan, ForestPlan, Multigraph, is_bipartite_loop_free

Color = Hashable
ColorPair = tuple[Any, Any]
ConstraintList = Mapping[int, ColorPair]
Coloring = dict[int, Any]


def color_pair(a, b) -> ColorPair:
    return (a, b) if a <= b else (b, a)


def _other(pair: ColorPair, c) -> Any:
    """The element left in ``pair`` after removing one copy of ``c``, or None."""
    if pair[0] == c:
        return pair[1]
    if pair[1] == c:
        return pair[0]
    return None


def _lookup(l: ConstraintList, e: int) -> ColorPair:
    try:
        return color_pair(*l[e])
    except KeyError:
        raise MissingConstraint(e) from None


def intersections(
    g: Multigraph, l: ConstraintList, edges: Iterable[int] | None = None
) -> dict[int, frozenset]:
    """Per-vertex intersection of the supports of all incident constraints.

    With ``edges`` given, only those edges (and their endpoints) are used,
    which is how a tree or a component restriction is expressed.
    """
    if edges is None:
        edges = range(g.n_edges)
    out: dict[int, frozenset] = {}
    for e in edges:
        supp = frozenset(_lookup(l, e))
        for v in set(g.endpoints[e]):
            out[v] = supp if v not in out else out[v] & supp
    return out


def extend_along_path(
    path: tuple[Sequence[int], Sequence[int]],
    l: ConstraintList,
    c,
    allowed: Iterable | None = None,
) -> Coloring:
    """Extend ``φ(v0) = c`` along a simple path; the result is unique if it exists.

    Raises ``NoSolutionOnPath(i)`` when the color forced onto ``v_{i+1}`` is
    not in ``L(e_{i+1})``.
    """
    edges, verts = path
    if allowed is not None and c not in set(allowed):
        raise ColorNotInIntersection(f"color {c!r} not allowed at {verts[0]}")
    if edges and c not in _lookup(l, edges[0]):
        raise ColorNotInIntersection(f"color {c!r} not in L(e0)")
    phi = {verts[0]: c}
    n = len(edges)
    for i, e in enumerate(edges):
        nxt = _other(_lookup(l, e), phi[verts[i]])
        phi[verts[i + 1]] = nxt
        if i < n - 1 and nxt not in _lookup(l, edges[i + 1]):
            raise NoSolutionOnPath(i, phi)
    return phi


class Status(enum.IntEnum):
    NONE = 0
    UNIQUE = 1
    TWO = 2


@dataclass(frozen=True, eq=True)
class ComponentOutcome:
    status: Status
    colorings: tuple[Coloring, ...] = ()

    @classmethod
    def none(cls) -> "ComponentOutcome":
        return cls(Status.NONE)

    @classmethod
    def unique(cls, phi: Coloring) -> "ComponentOutcome":
        return cls(Status.UNIQUE, (phi,))

    @classmethod
    def two(cls, phi1: Coloring, phi2: Coloring) -> "ComponentOutcome":
        return cls(Status.TWO, (phi1, phi2))

    def __len__(self) -> int:
        return len(self.colorings)


def _edges_ok(g: Multigraph, l: ConstraintList, phi: Coloring, edges: Iterable[int]) -> bool:
    for e in edges:
        u, w = g.endpoints[e]
        if color_pair(phi[u], phi[w]) != tuple(_lookup(l, e)):
            return False
    return True


def _extend_from_root(cp: ComponentPlan, l: ConstraintList, phi: Coloring) -> int | None:
    """Walk the root-to-leaf paths coloring unset vertices. Returns the failing edge or None."""
    for edges, verts in cp.paths:
        n = len(edges)
        for i, e in enumerate(edges):
            if verts[i + 1] in phi:
                continue
            nxt = _other(_lookup(l, e), phi[verts[i]])
            if nxt is None:
                return e
            phi[verts[i + 1]] = nxt
            if i < n - 1 and nxt not in _lookup(l, edges[i + 1]):
                return edges[i + 1]
    return None


def _tree_solve(cp: ComponentPlan, l: ConstraintList, tags: list | None = None) -> ComponentOutcome:
    g = cp.graph
    inter = intersections(g, l, cp.tree_edges)
    empty = [v for v in cp.vertices if not inter[v]]
    if empty:
        if tags is not None:
            tags.extend(Diagnostic("EmptyIntersection", g.vertex_labels[v]) for v in empty)
        return ComponentOutcome.none()

    r = cp.root
    singles = [v for v in cp.vertices if len(inter[v]) == 1]
    if singles:
        v = singles[0]
        (c,) = inter[v]
        path = cp.path(v, r)
        try:
            phi = extend_along_path(path, l, c)
        except NoSolutionOnPath as exc:
            if tags is not None:
                tags.append(Diagnostic("PathContradiction", g.edge_labels[path[0][exc.index + 1]]))
            return ComponentOutcome.none()
        if phi[r] not in inter[r]:
            if tags is not None:
                tags.append(Diagnostic("RootNotInIntersection", g.vertex_labels[r]))
            return ComponentOutcome.none()
        bad = _extend_from_root(cp, l, phi)
        if bad is None and not _edges_ok(g, l, phi, cp.tree_edges):
            bad = next(e for e in cp.tree_edges if not _edges_ok(g, l, phi, (e,)))
        if bad is not None:
            if tags is not None:
                tags.append(Diagnostic("PathContradiction", g.edge_labels[bad]))
            return ComponentOutcome.none()
        return ComponentOutcome.unique(phi)

    # no empty and no singleton sets on a connected tree: every set has two colors
    assert all(len(inter[v]) == 2 for v in cp.vertices)
    c1, c2 = sorted(inter[r])
    phis = []
    for c in (c1, c2):
        phi = {r: c}
        bad = _extend_from_root(cp, l, phi)
        assert bad is None and _edges_ok(g, l, phi, cp.tree_edges)
        phis.append(phi)
    return ComponentOutcome.two(*phis)


def solve_tree(cp: ComponentPlan, l: ConstraintList) -> ComponentOutcome:
    """Solve on the spanning tree of a component (|V'| > 1), ignoring non-tree edges."""
    if cp.is_singleton:
        raise ValueError("solve_tree needs a component with at least two vertices")
    return _tree_solve(cp, l)


def _singleton_solve(cp: ComponentPlan, l: ConstraintList) -> ComponentOutcome:
    pairs = {tuple(_lookup(l, e)) for e in cp.edges}
    if len(pairs) == 1:
        a, b = pairs.pop()
        if a == b:
            return ComponentOutcome.unique({cp.root: a})
    return ComponentOutcome.none()


def _filter_non_tree(cp: ComponentPlan, l: ConstraintList, tree: ComponentOutcome) -> ComponentOutcome:
    kept = [phi for phi in tree.colorings if _edges_ok(cp.graph, l, phi, cp.non_tree_edges)]
    if len(kept) == 2:
        return ComponentOutcome.two(*kept)
    if len(kept) == 1:
        return ComponentOutcome.unique(kept[0])
    return ComponentOutcome.none()


def solve_component(cp: ComponentPlan, l: ConstraintList) -> ComponentOutcome:
    if cp.is_singleton:
        return _singleton_solve(cp, l)
    return _filter_non_tree(cp, l, _tree_solve(cp, l))


@dataclass(frozen=True)
class SolutionSet:
    """Per-component outcomes of one problem; global solutions are indexed lazily."""

    outcomes: tuple[ComponentOutcome, ...]

    @property
    def has_solution(self) -> bool:
        return all(o.status is not Status.NONE for o in self.outcomes)

    @property
    def d(self) -> int:
        return sum(o.status is Status.TWO for o in self.outcomes)

    @property
    def count(self) -> int:
        return 2**self.d if self.has_solution else 0

    def solution(self, index: int = 0) -> Coloring:
        """Global coloring number ``index``; bit j picks the coloring of the j-th two-solution component."""
        if not self.has_solution:
            raise NoGlobalSolution("some component has no solution")
        if not 0 <= index < 2**self.d:
            raise IndexOutOfRange(f"index {index} outside [0, {2 ** self.d})")
        phi: Coloring = {}
        j = 0
        for o in self.outcomes:
            if o.status is Status.TWO:
                phi.update(o.colorings[(index >> j) & 1])
                j += 1
            else:
                phi.update(o.colorings[0])
        return phi

    def solutions(self) -> Iterator[Coloring]:
        for i in range(self.count):
            yield self.solution(i)


def solve(plan: ForestPlan, l: ConstraintList) -> SolutionSet:
    """Single problem, component by component, through the scalar routines."""
    return SolutionSet(tuple(solve_component(cp, l) for cp in plan.components))


def count_d(plan: ForestPlan, l: ConstraintList) -> int:
    """Components that are loop-free, bipartite and carry one constant two-color constraint."""
    g = plan.graph
    d = 0
    for cp in plan.components:
        pairs = {tuple(_lookup(l, e)) for e in cp.edges}
        if len(pairs) != 1:
            continue
        a, b = next(iter(pairs))
        if a != b and is_bipartite_loop_free(g, cp.component):
            d += 1
    return d


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    item: Any = None

    def __str__(self) -> str:
        return self.kind if self.item is None else f"{self.kind}({self.item})"


def diagnose(cp: ComponentPlan, l: ConstraintList) -> list[Diagnostic]:
    """Reasons a component has no solution. Empty if it is solvable."""
    g = cp.graph
    tags: list[Diagnostic] = []
    for e in cp.component.loops:
        a, b = _lookup(l, e)
        if a != b:
            tags.append(Diagnostic("LoopHeterozygous", g.edge_labels[e]))
    if cp.is_singleton:
        if _singleton_solve(cp, l).status is Status.NONE:
            inter = intersections(g, l, cp.edges)
            if not inter[cp.root]:
                tags.append(Diagnostic("EmptyIntersection", g.vertex_labels[cp.root]))
            elif not tags:
                tags.append(Diagnostic("NonTreeEdgeViolation", g.edge_labels[cp.edges[0]]))
        return tags

    inter_all = intersections(g, l, cp.edges)
    tree_tags: list[Diagnostic] = []
    tree = _tree_solve(cp, l, tree_tags)
    if tree.status is Status.NONE:
        known = {(t.kind, t.item) for t in tags}
        tags.extend(t for t in tree_tags if (t.kind, t.item) not in known)
        if not any(t.kind == "EmptyIntersection" for t in tags):
            tags.extend(
                Diagnostic("EmptyIntersection", g.vertex_labels[v])
                for v in cp.vertices
                if not inter_all[v]
            )
        return tags

    if _filter_non_tree(cp, l, tree).status is not Status.NONE:
        return tags
    violated = []
    for e in cp.non_tree_edges:
        if any(not _edges_ok(g, l, phi, (e,)) for phi in tree.colorings):
            violated.append(e)
    for e in cp.non_tree_edges:
        if e in violated:
            tags.append(Diagnostic("NonTreeEdgeViolation", g.edge_labels[e]))
    for e in violated:
        u, w = g.endpoints[e]
        if u == w or (cp.depth_of(u) - cp.depth_of(w)) % 2:
            continue
        cycle, _ = cp.path(u, w)
        pairs = {tuple(_lookup(l, x)) for x in cycle + (e,)}
        if len(pairs) == 1 and len(set(next(iter(pairs)))) == 2:
            tags.append(Diagnostic("OddCycleTwoColor", g.edge_labels[e]))
    return tags


# ---------------------------------------------------------------------------
# batch engine


@dataclass(frozen=True)
class ConstraintBatch:
    """n constraint lists over one edge set as interned color codes.

    ``lo`` and ``hi`` have shape ``(n, n_edges)`` with ``lo <= hi``; -1 marks a
    missing constraint. ``colors[c]`` is the color with code ``c``.
    """

    lo: np.ndarray
    hi: np.ndarray
    colors: tuple

    def __post_init__(self):
        if self.lo.shape != self.hi.shape or self.lo.ndim != 2:
            raise ValueError("lo and hi must be equal-shape 2-d arrays")

    def __len__(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def from_lists(cls, g: Multigraph, lists: Sequence[ConstraintList]) -> "ConstraintBatch":
        palette = sorted({c for l in lists for pair in l.values() for c in pair})
        code = {c: i for i, c in enumerate(palette)}
        n = len(lists)
        lo = np.full((n, g.n_edges), -1, dtype=np.int32)
        hi = np.full((n, g.n_edges), -1, dtype=np.int32)
        for k, l in enumerate(lists):
            for e in range(g.n_edges):
                pair = l.get(e)
                if pair is None:
                    continue
                a, b = code[pair[0]], code[pair[1]]
                lo[k, e], hi[k, e] = min(a, b), max(a, b)
        return cls(lo, hi, tuple(palette))

    def constraint_list(self, k: int) -> dict[int, ColorPair]:
        out = {}
        for e, (a, b) in enumerate(zip(self.lo[k], self.hi[k])):
            if a >= 0:
                out[e] = (self.colors[a], self.colors[b])
        return out


class BatchSolution(Sequence[SolutionSet]):
    """Outcomes of n problems on one plan, stored as arrays.

    ``status[k, j]`` is the ``Status`` of component j in problem k.
    ``first[k, v]`` is the color code of vertex v in the first (or only)
    coloring of its component, ``second[k, v]`` the code in the other
    coloring of a two-solution component; -1 elsewhere.
    """

    def __init__(self, plan: ForestPlan, colors: tuple, status, first, second):
        self.plan = plan
        self.colors = colors
        self.status = status
        self.first = first
        self.second = second

    def __len__(self) -> int:
        return self.status.shape[0]

    @property
    def has_solution(self) -> np.ndarray:
        return (self.status != Status.NONE).all(axis=1)

    @property
    def d(self) -> np.ndarray:
        return (self.status == Status.TWO).sum(axis=1)

    @property
    def counts(self) -> np.ndarray:
        return np.where(self.has_solution, 2 ** self.d.astype(np.int64), 0)

    def _decode(self, row, verts) -> Coloring:
        return {v: self.colors[row[v]] for v in verts}

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        outcomes = []
        for j, cp in enumerate(self.plan.components):
            st = Status(int(self.status[k, j]))
            if st is Status.NONE:
                outcomes.append(ComponentOutcome.none())
            elif st is Status.UNIQUE:
                outcomes.append(ComponentOutcome.unique(self._decode(self.first[k], cp.vertices)))
            else:
                outcomes.append(
                    ComponentOutcome.two(
                        self._decode(self.first[k], cp.vertices),
                        self._decode(self.second[k], cp.vertices),
                    )
                )
        return SolutionSet(tuple(outcomes))


def _intersect(a, b, lo, hi):
    a_in = (a == lo) | (a == hi)
    b_in = (b == lo) | (b == hi)
    na = np.where(a_in, a, np.where(b_in, b, -1))
    nb = np.where(b_in, b, np.where(a_in, a, -1))
    return na, nb


def _in_pair(c, lo, hi):
    return (c == lo) | (c == hi)


def _propagate(cp: ComponentPlan, LO, HI, root_color, valid):
    """Color the tree from the root along the path schedule; returns colors and validity."""
    col = {cp.root: root_color}
    for e, p, c in cp.schedule:
        pc = col[p]
        lo, hi = LO[e], HI[e]
        valid = valid & _in_pair(pc, lo, hi)
        col[c] = np.where(pc == lo, hi, lo)
    g = cp.graph
    for e in cp.non_tree_edges:
        u, w = g.endpoints[e]
        cu, cw = col[u], col[w]
        valid = valid & (np.minimum(cu, cw) == LO[e]) & (np.maximum(cu, cw) == HI[e])
    return col, valid


def _solve_component_batch(cp: ComponentPlan, LO, HI):
    """Vectorized single-component solve over m problems.

    ``LO``/``HI`` are edge-major ``(n_edges, m)``. Returns status (m,) and two
    dicts vertex -> code array.
    """
    m = LO.shape[1]
    g = cp.graph
    if cp.is_singleton:
        e0 = cp.edges[0]
        ok = LO[e0] == HI[e0]
        for e in cp.edges[1:]:
            ok &= (LO[e] == LO[e0]) & (HI[e] == HI[e0])
        v = cp.root
        first = {v: np.where(ok, LO[e0], -1)}
        status = np.where(ok, Status.UNIQUE, Status.NONE).astype(np.int8)
        return status, first, {v: np.full(m, -1, dtype=LO.dtype)}

    ia: dict[int, np.ndarray] = {}
    ib: dict[int, np.ndarray] = {}
    for e in cp.tree_edges:
        lo, hi = LO[e], HI[e]
        for v in set(g.endpoints[e]):
            if v in ia:
                ia[v], ib[v] = _intersect(ia[v], ib[v], lo, hi)
            else:
                ia[v], ib[v] = lo, hi

    verts = cp.vertices
    alive = np.ones(m, dtype=bool)
    for v in verts:
        alive &= ia[v] >= 0
    single = np.stack([(ia[v] == ib[v]) & (ia[v] >= 0) for v in verts])
    any_single = single.any(axis=0)
    vstar = single.argmax(axis=0)

    r = cp.root
    root_a, root_b = ia[r], ib[r]
    forced = np.full(m, -1, dtype=LO.dtype)
    todo = any_single & alive
    for pos in np.unique(vstar[todo]):
        idx = np.flatnonzero(todo & (vstar == pos))
        v = verts[pos]
        edges, _ = cp.path(v, r)
        cur = ia[v][idx]
        ok = np.ones(idx.size, dtype=bool)
        for i, e in enumerate(edges):
            lo, hi = LO[e, idx], HI[e, idx]
            ok &= _in_pair(cur, lo, hi)
            cur = np.where(cur == lo, hi, lo)
            if i < len(edges) - 1:
                ok &= _in_pair(cur, LO[edges[i + 1], idx], HI[edges[i + 1], idx])
        ok &= (cur == root_a[idx]) | (cur == root_b[idx])
        forced[idx] = np.where(ok, cur, -1)

    cand1 = np.where(any_single, forced, root_a)
    cand2 = np.where(any_single, -1, root_b)
    col1, ok1 = _propagate(cp, LO, HI, cand1, alive & (cand1 >= 0))
    col2, ok2 = _propagate(cp, LO, HI, cand2, alive & (cand2 >= 0))

    two = ok1 & ok2
    status = np.where(two, Status.TWO, np.where(ok1 | ok2, Status.UNIQUE, Status.NONE)).astype(np.int8)
    first = {}
    second = {}
    for v in verts:
        first[v] = np.where(ok1, col1[v], np.where(ok2, col2[v], -1))
        second[v] = np.where(two, col2[v], -1)
    return status, first, second


def _as_batch(plan: ForestPlan, lists) -> ConstraintBatch:
    if isinstance(lists, ConstraintBatch):
        return lists
    return ConstraintBatch.from_lists(plan.graph, list(lists))


# below this many problems the per-edge numpy overhead loses to the scalar routines
SCALAR_BATCH_MAX = 8


def _scalar_batch(plan: ForestPlan, LO, HI, status, first, second) -> None:
    """Fill the batch arrays problem by problem through ``solve_component``, on integer codes."""
    n_edges = LO.shape[0]
    for k in range(LO.shape[1]):
        l = {e: (int(LO[e, k]), int(HI[e, k])) for e in range(n_edges)}
        for j, cp in enumerate(plan.components):
            out = solve_component(cp, l)
            status[k, j] = out.status
            if out.status is Status.NONE:
                continue
            for v, c in out.colorings[0].items():
                first[v, k] = c
            if out.status is Status.TWO:
                for v, c in out.colorings[1].items():
                    second[v, k] = c


def solve_many(plan: ForestPlan, lists: ConstraintBatch | Sequence[ConstraintList]) -> BatchSolution:
    """Solve n problems sharing the plan's multigraph. Work is O(n |E|)."""
    batch = _as_batch(plan, lists)
    g = plan.graph
    n = len(batch)
    if batch.lo.shape[1] != g.n_edges:
        raise ValueError("constraint batch does not match the graph's edge count")
    missing = batch.lo < 0
    if missing.any():
        k, e = np.argwhere(missing)[0]
        raise MissingConstraint(g.edge_labels[e], int(k))

    LO = np.ascontiguousarray(batch.lo.T)
    HI = np.ascontiguousarray(batch.hi.T)
    status = np.empty((n, len(plan.components)), dtype=np.int8)
    first = np.full((g.n_vertices, n), -1, dtype=np.int32)
    second = np.full((g.n_vertices, n), -1, dtype=np.int32)
    if n <= SCALAR_BATCH_MAX:
        _scalar_batch(plan, LO, HI, status, first, second)
        return BatchSolution(plan, batch.colors, status, first.T, second.T)
    for j, cp in enumerate(plan.components):
        st, f, s = _solve_component_batch(cp, LO, HI)
        status[:, j] = st
        for v in cp.vertices:
            first[v] = f[v]
            second[v] = s[v]
    return BatchSolution(plan, batch.colors, status, first.T, second.T)


def exists_many(plan: ForestPlan, lists: ConstraintBatch | Sequence[ConstraintList]) -> np.ndarray:
    """Existence only: components are skipped for problems already known unsolvable."""
    batch = _as_batch(plan, lists)
    LO = np.ascontiguousarray(batch.lo.T)
    HI = np.ascontiguousarray(batch.hi.T)
    if (LO < 0).any():
        e, k = np.argwhere(LO < 0)[0]
        raise MissingConstraint(plan.graph.edge_labels[e], int(k))
    active = np.arange(len(batch))
    for cp in plan.components:
        if active.size == 0:
            break
        st, _, _ = _solve_component_batch(cp, LO[:, active], HI[:, active])
        active = active[st != Status.NONE]
    out = np.zeros(len(batch), dtype=bool)
    out[active] = True
    return out
