"""Exhaustive reference solver for small instances, plus a random instance generator.

Nothing here shares code with ``ecvc.solver``: ``brute_force`` evaluates the
definition directly over every assignment in ``colors ** V``, and
``two_color_components`` counts ambiguous components with a parity
union-find rather than the solver's spanning forest.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLarge
from .graph import Multigraph, build

DEFAULT_CAP = 10**7


def brute_force(g: Multigraph, l, colors, cap: int = DEFAULT_CAP) -> set[tuple]:
    """All colorings, as tuples indexed by vertex, whose edge multisets equal ``l``."""
    palette = sorted(set(colors))
    nv = g.n_vertices
    if len(palette) ** nv > cap:
        raise InstanceTooLarge(f"{len(palette)}^{nv} assignments exceed cap {cap}")
    if not palette:
        return set()
    # every assignment as a row of color indices
    grid = np.indices((len(palette),) * nv).reshape(nv, -1).T
    keep = np.ones(grid.shape[0], dtype=bool)
    code = {c: i for i, c in enumerate(palette)}
    for e, (u, w) in enumerate(g.endpoints):
        want = Counter(l[e])
        if any(c not in code for c in want):
            return set()
        a, b = sorted(code[c] for c in want.elements())
        x, y = grid[:, u], grid[:, w]
        keep &= ((x == a) & (y == b)) | ((x == b) & (y == a))
    return {tuple(palette[i] for i in row) for row in grid[keep]}


def two_color_components(g: Multigraph, l) -> int:
    """Components that are loop-free, bipartite and constrained by one constant pair of distinct colors."""
    parent = list(range(g.n_vertices))
    parity = [0] * g.n_vertices  # side relative to parent

    def find(v):
        p = 0
        while parent[v] != v:
            p ^= parity[v]
            v = parent[v]
        return v, p

    odd = set()
    for u, w in g.endpoints:
        (ru, pu), (rw, pw) = find(u), find(w)
        if ru == rw:
            if pu == pw:
                odd.add(ru)
        else:
            parent[ru] = rw
            parity[ru] = pu ^ pw ^ 1
            if ru in odd:
                odd.add(rw)
    pairs: dict[int, set] = {}
    for e, (u, _) in enumerate(g.endpoints):
        pairs.setdefault(find(u)[0], set()).add(frozenset(Counter(l[e]).items()))
    d = 0
    for root, ps in pairs.items():
        if root in odd or len(ps) != 1:
            continue
        (only,) = ps
        d += len(only) == 2  # two distinct colors
    return d


@dataclass(frozen=True)
class Bounds:
    max_vertices: int = 6
    max_edges: int = 8
    max_colors: int = 3
    p_loop: float = 0.15
    p_parallel: float = 0.15
    p_planted: float = 0.5


def random_instance(seed: int, bounds: Bounds = Bounds()):
    """Reproducible ``(graph, constraints, colors)`` with no isolated vertices.

    Half the time (``p_planted``) the constraints are read off a random
    coloring so that a solution exists; otherwise they are drawn freely.
    """
    rng = random.Random(seed)
    nv = rng.randint(1, bounds.max_vertices)
    palette = ["BRYGK"[i] for i in range(rng.randint(1, bounds.max_colors))]
    pairs: list[tuple[int, int]] = []

    def add(u, w):
        pairs.append((u, w))

    # cover every vertex first
    order = list(range(nv))
    rng.shuffle(order)
    covered: set[int] = set()
    for v in order:
        if v in covered:
            continue
        if nv == 1 or rng.random() < bounds.p_loop:
            add(v, v)
            covered.add(v)
        else:
            w = rng.choice([x for x in range(nv) if x != v])
            add(v, w)
            covered.update((v, w))
        if len(pairs) >= bounds.max_edges:
            break
    # ran out of edge budget: attach leftovers with loops by dropping them
    nv_used = sorted(covered)
    relabel = {v: i for i, v in enumerate(nv_used)}
    pairs = [(relabel[u], relabel[w]) for u, w in pairs]
    nv = len(nv_used)

    while len(pairs) < bounds.max_edges and rng.random() < 0.8:
        r = rng.random()
        if r < bounds.p_loop:
            v = rng.randrange(nv)
            add(v, v)
        elif r < bounds.p_loop + bounds.p_parallel:
            add(*rng.choice(pairs))
        elif nv > 1:
            u, w = rng.sample(range(nv), 2)
            add(u, w)

    g = build(
        [f"v{i}" for i in range(nv)],
        [(f"e{i}", (f"v{u}", f"v{w}")) for i, (u, w) in enumerate(pairs)],
    )
    l = {}
    if rng.random() < bounds.p_planted:
        phi = [rng.choice(palette) for _ in range(nv)]
        for e, (u, w) in enumerate(g.endpoints):
            l[e] = tuple(sorted((phi[u], phi[w])))
        # occasionally break one edge
        if rng.random() < 0.2:
            e = rng.randrange(g.n_edges)
            l[e] = tuple(sorted((rng.choice(palette), rng.choice(palette))))
    else:
        for e in range(g.n_edges):
            l[e] = tuple(sorted((rng.choice(palette), rng.choice(palette))))
    return g, l, frozenset(palette)
