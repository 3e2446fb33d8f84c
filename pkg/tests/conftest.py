import pytest

from ecvc.graph import Multigraph, build
from ecvc.solver import color_pair


def instance(vertices, edges):
    """``edges`` as (label, u, w, c1, c2); returns (graph, constraint list keyed by edge index)."""
    g = build(vertices, [(lab, (u, w)) for lab, u, w, _, _ in edges])
    l = {i: color_pair(c1, c2) for i, (_, _, _, c1, c2) in enumerate(edges)}
    return g, l


def path_instance(pairs):
    n = len(pairs) + 1
    return instance(
        [f"v{i}" for i in range(n)],
        [(f"e{i}", f"v{i}", f"v{i + 1}", a, b) for i, (a, b) in enumerate(pairs)],
    )


CASES = {
    # single edge, not a proper coloring
    "same_color_edge": lambda: path_instance([("Y", "Y")]),
    "path_no_solution": lambda: path_instance([("Y", "R"), ("R", "B"), ("Y", "R")]),
    "path_unique": lambda: path_instance([("Y", "R"), ("R", "R"), ("Y", "R")]),
    "path_extension": lambda: path_instance([("Y", "R"), ("R", "B"), ("B", "Y")]),
    "path_contradiction": lambda: path_instance([("B", "Y"), ("Y", "R"), ("B", "Y")]),
    # caterpillar: spine v0..v4, pendants p1 on v1 and p3 on v3
    "caterpillar": lambda: instance(
        ["v0", "v1", "v2", "v3", "v4", "p1", "p3"],
        [
            ("e0", "v0", "v1", "R", "B"),
            ("e1", "v1", "v2", "B", "Y"),
            ("e2", "v2", "v3", "Y", "R"),
            ("e3", "v3", "v4", "Y", "R"),
            ("f1", "v1", "p1", "B", "R"),
            ("f3", "v3", "p3", "B", "R"),
        ],
    ),
    # tee: v0 - v1 - v2 with pendant p on v1
    "tee": lambda: instance(
        ["v0", "v1", "v2", "p"],
        [("e0", "v0", "v1", "B", "R"), ("e1", "v1", "v2", "B", "R"), ("f", "v1", "p", "B", "R")],
    ),
    "triangle": lambda: instance(
        ["a", "b", "c"],
        [("x", "a", "b", "B", "R"), ("y", "b", "c", "B", "R"), ("z", "a", "c", "B", "R")],
    ),
    "square": lambda: instance(
        ["a", "b", "c", "d"],
        [
            ("w", "a", "b", "B", "R"),
            ("x", "b", "c", "B", "R"),
            ("y", "c", "d", "B", "R"),
            ("z", "d", "a", "B", "R"),
        ],
    ),
}


@pytest.fixture(params=sorted(CASES))
def case(request):
    return request.param, CASES[request.param]()


def named(g: Multigraph, phi) -> dict:
    return {g.vertex_labels[v]: c for v, c in phi.items()}


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, ok: bool, detail: str) -> None:
        lines[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        print(lines[number])

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])


@pytest.fixture
def vectorized(monkeypatch):
    """Route every ``solve_many`` call through the array engine, however small the batch."""
    import ecvc.solver

    monkeypatch.setattr(ecvc.solver, "SCALAR_BATCH_MAX", 0)
