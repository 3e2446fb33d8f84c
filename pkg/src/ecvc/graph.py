"""Finite multigraphs and the spanning-forest machinery shared by batch solves.

Vertices and edges are stored with dense integer indices; the external
labels are kept alongside so that results can be reported by name. Loops
and parallel edges are allowed, isolated vertices are not.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    DifferentComponents,
    DuplicateEdgeLabel,
    DuplicateVertexLabel,
    GraphFormatError,
    IsolatedVertex,
    UnknownVertexLabel,
)

__all__ = [
    "Multigraph",
    "Component",
    "ComponentPlan",
    "ForestPlan",
    "build",
    "connected_components",
    "forest_plan",
    "path_between",
    "first_betti",
    "is_bipartite_loop_free",
    "parse_graph",
    "format_graph",
]


@dataclass(frozen=True)
class Multigraph:
    vertex_labels: tuple[str, ...]
    edge_labels: tuple[str, ...]
    endpoints: tuple[tuple[int, int], ...]
    incidence: tuple[tuple[int, ...], ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_labels)

    @property
    def n_edges(self) -> int:
        return len(self.edge_labels)

    def vertex_index(self, label: str) -> int:
        try:
            return self._vertex_lookup[label]
        except KeyError:
            raise UnknownVertexLabel(label) from None

    def edge_index(self, label: str) -> int:
        try:
            return self._edge_lookup[label]
        except KeyError:
            raise KeyError(f"unknown edge label {label!r}") from None

    @property
    def _vertex_lookup(self) -> dict[str, int]:
        cache = self.__dict__.get("_vcache")
        if cache is None:
            cache = {lab: i for i, lab in enumerate(self.vertex_labels)}
            object.__setattr__(self, "_vcache", cache)
        return cache

    @property
    def _edge_lookup(self) -> dict[str, int]:
        cache = self.__dict__.get("_ecache")
        if cache is None:
            cache = {lab: i for i, lab in enumerate(self.edge_labels)}
            object.__setattr__(self, "_ecache", cache)
        return cache

    def degree(self, v: int) -> int:
        return sum(2 if self.is_loop(e) else 1 for e in self.incidence[v])

    def is_loop(self, e: int) -> bool:
        u, w = self.endpoints[e]
        return u == w

    def other_end(self, e: int, v: int) -> int:
        u, w = self.endpoints[e]
        return w if u == v else u

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multigraph):
            return NotImplemented
        return (
            self.vertex_labels == other.vertex_labels
            and self.edge_labels == other.edge_labels
            and self.endpoints == other.endpoints
        )

    def __hash__(self) -> int:
        return hash((self.vertex_labels, self.edge_labels, self.endpoints))


def build(
    vertices: Iterable[str],
    edges: Iterable[tuple[str, tuple[str, str]]],
) -> Multigraph:
    """Build a multigraph from vertex labels and ``(edge_label, (v, w))`` pairs.

    Raises ``IsolatedVertex`` if some listed vertex has no incident edge.
    """
    vertex_labels = tuple(vertices)
    index: dict[str, int] = {}
    for i, lab in enumerate(vertex_labels):
        if lab in index:
            raise DuplicateVertexLabel(lab)
        index[lab] = i

    edge_labels: list[str] = []
    endpoints: list[tuple[int, int]] = []
    seen: set[str] = set()
    incidence: list[list[int]] = [[] for _ in vertex_labels]
    for label, (a, b) in edges:
        if label in seen:
            raise DuplicateEdgeLabel(label)
        seen.add(label)
        if a not in index:
            raise UnknownVertexLabel(a)
        if b not in index:
            raise UnknownVertexLabel(b)
        u, w = index[a], index[b]
        e = len(edge_labels)
        edge_labels.append(label)
        endpoints.append((u, w))
        incidence[u].append(e)
        if w != u:
            incidence[w].append(e)

    for lab, inc in zip(vertex_labels, incidence):
        if not inc:
            raise IsolatedVertex(lab)

    return Multigraph(
        vertex_labels=vertex_labels,
        edge_labels=tuple(edge_labels),
        endpoints=tuple(endpoints),
        incidence=tuple(tuple(inc) for inc in incidence),
    )


@dataclass(frozen=True)
class Component:
    index: int
    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    loops: tuple[int, ...]


def connected_components(g: Multigraph) -> list[Component]:
    """Components ordered by their smallest vertex index."""
    comp_of = [-1] * g.n_vertices
    comps: list[Component] = []
    for start in range(g.n_vertices):
        if comp_of[start] != -1:
            continue
        cid = len(comps)
        comp_of[start] = cid
        verts = [start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for e in g.incidence[v]:
                w = g.other_end(e, v)
                if comp_of[w] == -1:
                    comp_of[w] = cid
                    verts.append(w)
                    queue.append(w)
        vset = sorted(verts)
        edges = sorted({e for v in vset for e in g.incidence[v]})
        loops = tuple(e for e in edges if g.is_loop(e))
        comps.append(Component(cid, tuple(vset), tuple(edges), loops))
    return comps


@dataclass(frozen=True)
class ComponentPlan:
    """Spanning tree of one component plus everything a batch solve reuses.

    ``parent[i]`` and ``parent_edge[i]`` refer to ``vertices[i]``; the root
    has parent -1. ``schedule`` lists ``(edge, parent, child)`` triples in the
    order the root-to-leaf paths first reach each child, so walking it colors
    every vertex exactly once.
    """

    graph: Multigraph = field(repr=False, compare=False)
    component: Component
    root: int
    tree_edges: tuple[int, ...]
    non_tree_edges: tuple[int, ...]
    parent: tuple[int, ...]
    parent_edge: tuple[int, ...]
    depth: tuple[int, ...]
    paths: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    schedule: tuple[tuple[int, int, int], ...]

    @property
    def vertices(self) -> tuple[int, ...]:
        return self.component.vertices

    @property
    def edges(self) -> tuple[int, ...]:
        return self.component.edges

    @property
    def is_singleton(self) -> bool:
        return len(self.component.vertices) == 1

    def _pos(self, v: int) -> int:
        cache = self.__dict__.get("_poscache")
        if cache is None:
            cache = {u: i for i, u in enumerate(self.component.vertices)}
            object.__setattr__(self, "_poscache", cache)
        try:
            return cache[v]
        except KeyError:
            raise DifferentComponents(v) from None

    def parent_of(self, v: int) -> tuple[int, int]:
        i = self._pos(v)
        return self.parent[i], self.parent_edge[i]

    def depth_of(self, v: int) -> int:
        return self.depth[self._pos(v)]

    def path(self, v: int, r: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if v not in self or r not in self:
            raise DifferentComponents(v, r)

        def climb(x: int) -> list[int]:
            chain = [x]
            while True:
                p, _ = self.parent_of(chain[-1])
                if p < 0:
                    return chain
                chain.append(p)

        up_v = climb(v)
        up_r = climb(r)
        on_r = set(up_r)
        lca_i = next(i for i, x in enumerate(up_v) if x in on_r)
        lca = up_v[lca_i]
        verts = up_v[: lca_i + 1] + up_r[: up_r.index(lca)][::-1]
        edges = []
        for a, b in zip(verts, verts[1:]):
            pa, ea = self.parent_of(a)
            edges.append(ea if pa == b else self.parent_of(b)[1])
        return tuple(edges), tuple(verts)

    def __contains__(self, v: int) -> bool:
        try:
            self._pos(v)
        except DifferentComponents:
            return False
        return True


@dataclass(frozen=True)
class ForestPlan:
    graph: Multigraph
    components: tuple[ComponentPlan, ...]

    def component_of(self, v: int) -> ComponentPlan:
        cache = self.__dict__.get("_compcache")
        if cache is None:
            cache = {}
            for cp in self.components:
                for u in cp.vertices:
                    cache[u] = cp
            object.__setattr__(self, "_compcache", cache)
        return cache[v]


def _plan_component(g: Multigraph, comp: Component) -> ComponentPlan:
    root = comp.vertices[0]
    pos = {v: i for i, v in enumerate(comp.vertices)}
    n = len(comp.vertices)
    parent = [-1] * n
    parent_edge = [-1] * n
    depth = [0] * n
    visited = [False] * n
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    tree: list[int] = []

    # iterative DFS; incidence lists are explored in insertion order
    visited[pos[root]] = True
    stack = [(root, iter(g.incidence[root]))]
    while stack:
        v, it = stack[-1]
        for e in it:
            w = g.other_end(e, v)
            if w == v or visited[pos[w]]:
                continue
            iw = pos[w]
            visited[iw] = True
            parent[iw] = v
            parent_edge[iw] = e
            depth[iw] = depth[pos[v]] + 1
            children[pos[v]].append((e, w))
            tree.append(e)
            stack.append((w, iter(g.incidence[w])))
            break
        else:
            stack.pop()

    tree_set = set(tree)
    non_tree = tuple(e for e in comp.edges if e not in tree_set)

    # root-to-leaf paths, leaves in DFS preorder
    paths: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    if n > 1:
        walk = [(root, (), (root,))]
        while walk:
            v, es, vs = walk.pop()
            kids = children[pos[v]]
            if not kids:
                paths.append((es, vs))
                continue
            for e, w in reversed(kids):
                walk.append((w, es + (e,), vs + (w,)))

    schedule: list[tuple[int, int, int]] = []
    reached = {root}
    for es, vs in paths:
        for i, e in enumerate(es):
            child = vs[i + 1]
            if child not in reached:
                reached.add(child)
                schedule.append((e, vs[i], child))

    return ComponentPlan(
        graph=g,
        component=comp,
        root=root,
        tree_edges=tuple(sorted(tree)),
        non_tree_edges=non_tree,
        parent=tuple(parent),
        parent_edge=tuple(parent_edge),
        depth=tuple(depth),
        paths=tuple(paths),
        schedule=tuple(schedule),
    )


def forest_plan(g: Multigraph) -> ForestPlan:
    """Spanning forest, roots and root-to-leaf paths for every component."""
    comps = connected_components(g)
    return ForestPlan(g, tuple(_plan_component(g, c) for c in comps))


def path_between(
    plan: ForestPlan, v: int, r: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Tree path from ``v`` to ``r`` as ``(edge sequence, vertex sequence)``."""
    try:
        cp = plan.component_of(v)
    except KeyError:
        raise DifferentComponents(v, r) from None
    return cp.path(v, r)


def first_betti(component: Component) -> int:
    return len(component.edges) - len(component.vertices) + 1


def is_bipartite_loop_free(g: Multigraph, component: Component) -> bool:
    if component.loops:
        return False
    side = {component.vertices[0]: 0}
    queue = deque([component.vertices[0]])
    while queue:
        v = queue.popleft()
        for e in g.incidence[v]:
            w = g.other_end(e, v)
            if w not in side:
                side[w] = 1 - side[v]
                queue.append(w)
            elif side[w] == side[v]:
                return False
    return True


def parse_graph(lines: Iterable[str], source: str = "<graph>") -> Multigraph:
    """Read the line format ``V <label>`` / ``E <edge> <v> <w>``."""
    vertices: list[str] = []
    edges: list[tuple[str, tuple[str, str]]] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "V" and len(parts) == 2:
            vertices.append(parts[1])
        elif tag == "E" and len(parts) == 4:
            edges.append((parts[1], (parts[2], parts[3])))
        else:
            col = raw.find(tag) + 1
            raise GraphFormatError(source, lineno, col, f"malformed record {line!r}")
    try:
        return build(vertices, edges)
    except (UnknownVertexLabel, IsolatedVertex, DuplicateEdgeLabel, DuplicateVertexLabel) as exc:
        raise GraphFormatError(source, 0, 0, str(exc)) from exc


def format_graph(g: Multigraph) -> str:
    out = [f"V {lab}" for lab in g.vertex_labels]
    for lab, (u, w) in zip(g.edge_labels, g.endpoints):
        out.append(f"E {lab} {g.vertex_labels[u]} {g.vertex_labels[w]}")
    return "\n".join(out) + "\n"


def subgraph(g: Multigraph, keep_edges: Sequence[int]) -> Multigraph:
    """Edge-induced subgraph; vertices left without edges are dropped."""
    keep = sorted(set(keep_edges))
    used = sorted({v for e in keep for v in g.endpoints[e]})
    return build(
        (g.vertex_labels[v] for v in used),
        (
            (g.edge_labels[e], (g.vertex_labels[g.endpoints[e][0]], g.vertex_labels[g.endpoints[e][1]]))
            for e in keep
        ),
    )
