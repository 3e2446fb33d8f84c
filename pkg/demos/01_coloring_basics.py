"""
Edge constrained coloring on small multigraphs
==============================================

Every edge carries a size-2 multiset of colors, and a coloring is valid when
the two endpoint colors of each edge form exactly that multiset.
"""

from ecvc.graph import build, forest_plan
from ecvc.oracle import brute_force
from ecvc.solver import count_d, diagnose, intersections, solve

# a path v0 - v1 - v2 - v3 with three constraints
g = build(["v0", "v1", "v2", "v3"], [("e0", ("v0", "v1")), ("e1", ("v1", "v2")), ("e2", ("v2", "v3"))])
l = {0: ("R", "Y"), 1: ("B", "R"), 2: ("B", "Y")}

# the candidate colors of a vertex are the intersection over its edges
for v, cands in sorted(intersections(g, l).items()):
    print(g.vertex_labels[v], sorted(cands))

# the plan (spanning forest, paths, schedule) depends only on the graph
plan = forest_plan(g)
sols = solve(plan, l)
print("solutions:", sols.count)
print({g.vertex_labels[v]: c for v, c in sols.solution(0).items()})

# a tee whose edges all read {B, R} has two mirror-image colorings
tee = build(["v0", "v1", "v2", "p"], [("e0", ("v0", "v1")), ("e1", ("v1", "v2")), ("f", ("v1", "p"))])
lt = {e: ("B", "R") for e in range(3)}
sols = solve(forest_plan(tee), lt)
print("tee: d =", count_d(forest_plan(tee), lt), "count =", sols.count)
for phi in sols.solutions():
    print("  ", [phi[v] for v in range(tee.n_vertices)])

# closing an odd cycle with another {B, R} edge leaves nothing
tri = build(["a", "b", "c"], [("x", ("a", "b")), ("y", ("b", "c")), ("z", ("a", "c"))])
lb = {e: ("B", "R") for e in range(3)}
tri_plan = forest_plan(tri)
print("triangle count:", solve(tri_plan, lb).count)
print("why:", [str(t) for t in diagnose(tri_plan.components[0], lb)])

# the brute-force oracle agrees
print("oracle:", brute_force(tri, lb, "BR"), len(brute_force(tee, lt, "BR")))
