import numpy as np
import pytest

from ecvc.graph import build, forest_plan
from ecvc.pedigree import GenotypeMatrix, IBDStructure, Individual, Marker, Pedigree, Sex
from ecvc.phase import (
    MarkerStatus,
    Verdict,
    check_ibd,
    classify_marker,
    format_haplotypes,
    format_ibd_report,
    format_marker_report,
    impute,
    phase_interval,
    verdict_for,
)
from ecvc.sim import SimConfig, nuclear, simulate, swap_label, three_generation, trio
from ecvc.solver import solve


def truth_mismatches(ts, ph):
    """Determined alleles that disagree with the simulated founder haplotypes."""
    bad = 0
    rows = np.asarray(ph.markers) - 1
    for lab in ph.labels:
        got = ph.allele_codes(lab)
        want = ts.haplotype(lab)[rows]
        known = got >= 0
        got_sym = np.array(ph.allele_table)[got[known]]
        bad += int((got_sym != np.array(ts.alleles)[want[known]]).sum())
    return bad


def test_noiseless_trio():
    ts = simulate(SimConfig(pedigree=trio(), n_markers=100, seed=11))
    ph = phase_interval(ts.pedigree, ts.ibd_at(1), ts.observed)
    counts = ph.counts()
    assert counts["Error"] == 0 and counts["Solved"] + counts["Ambiguous"] == 100
    assert truth_mismatches(ts, ph) == 0


def triangle_family(calls):
    """Father, and two children sharing the maternal haplotype: a triangle on F.p, F.m, M.m."""
    ped = Pedigree(
        [
            Individual("F", sex=Sex.XY),
            Individual("M", sex=Sex.XX, sequenced=False),
            Individual("C1", father="F", mother="M"),
            Individual("C2", father="F", mother="M"),
        ]
    )
    ibd = IBDStructure({"F": ("F.p", "F.m"), "M": ("M.p", "M.m"), "C1": ("F.p", "M.m"), "C2": ("F.m", "M.m")})
    markers = [Marker(f"m{k + 1}", "1", 10 * (k + 1)) for k in range(len(calls))]
    gm = GenotypeMatrix(markers, ["F", "C1", "C2"], ["A", "C"], np.array(calls))
    return ped, ibd, gm


def test_odd_cycle_contradiction_is_an_error():
    het, hom_a, hom_c = [0, 1], [0, 0], [1, 1]
    ped, ibd, gm = triangle_family(
        [
            [het, het, het],  # all heterozygous around an odd cycle
            [het, hom_a, hom_c],  # C1 forces M.m=A, C2 forces M.m=C
            [hom_a, hom_a, hom_a],  # everyone A
        ]
    )
    ph = phase_interval(ped, ibd, gm)
    assert list(ph.status) == [MarkerStatus.ERROR, MarkerStatus.ERROR, MarkerStatus.SOLVED]
    assert {"NonTreeEdgeViolation(C1)", "OddCycleTwoColor(C1)"} <= set(ph.diagnostics[1])
    res = ph.result(3)
    assert res.status is MarkerStatus.SOLVED
    assert set(res.assignments.values()) == {"A"} and len(res.assignments) == 3
    assert (ph.alleles[:, :2] == -1).all()


def test_classify_marker():
    g = build([f"v{i}" for i in range(6)], [(f"e{i}", (f"v{i}", f"v{i + 1}")) for i in range(5)])
    plan = forest_plan(g)
    ss = solve(plan, {e: ("A", "C") for e in range(5)})
    res = classify_marker(ss, [5], labels=g.vertex_labels)
    assert res.status is MarkerStatus.AMBIGUOUS and res.excess_heterozygosity
    assert res.ambiguous == (g.vertex_labels,)
    assert res.assignments == {}
    assert not classify_marker(ss, [5], h_min=6).excess_heterozygosity
    ss = solve(plan, {e: ("A", "A") for e in range(5)})
    assert classify_marker(ss, [5]).status is MarkerStatus.SOLVED
    ss = solve(plan, {0: ("A", "A"), 1: ("C", "C"), 2: ("A", "C"), 3: ("A", "C"), 4: ("A", "C")})
    res = classify_marker(ss, [5], diagnostics=("EmptyIntersection(v1)",))
    assert res.status is MarkerStatus.ERROR and res.diagnostics == ("EmptyIntersection(v1)",)


def test_missing_calls_and_imputation():
    ped = three_generation((2, 2), 2)
    ts = simulate(SimConfig(pedigree=ped, n_markers=400, missing_rate=0.1, seed=21))
    ibd = ts.ibd_at(1)
    ph = phase_interval(ped, ibd, ts.observed)
    assert ph.counts()["Error"] == 0
    assert truth_mismatches(ts, ph) == 0
    checked = 0
    for k, iid in ts.missing[:60]:
        res = ph.result(k)
        got = impute(res, ped, ibd, [iid]).get(iid)
        if got is None or got.genotype is None:
            continue
        truth = tuple(sorted(ts.alleles[a] for a in ts.true_genotypes(iid)[k - 1]))
        assert got.genotype == truth
        checked += 1
    assert checked > 0


def test_impute_unsequenced_grandparent():
    ped = three_generation((3, 3), 3, unsequenced=("GF1",))
    ts = simulate(SimConfig(pedigree=ped, n_markers=300, seed=5))
    ibd = ts.ibd_at(1)
    ph = phase_interval(ped, ibd, ts.observed)
    truth = ts.true_genotypes("GF1")
    full = 0
    for k in ph.markers:
        res = ph.result(k)
        if res.status is not MarkerStatus.SOLVED:
            continue
        imp = impute(res, ped, ibd)["GF1"]
        if imp.genotype is not None:
            full += 1
            assert imp.genotype == tuple(sorted(ts.alleles[a] for a in truth[k - 1]))
    assert full > 0
    codes = ph.imputed_genotypes("GF1.p", "GF1.m")
    solved = ph.status == MarkerStatus.SOLVED
    assert (codes[solved] >= 0).all()


def test_impute_single_label():
    from ecvc.phase import MarkerResult

    res = MarkerResult(1, MarkerStatus.AMBIGUOUS, {"A.p": "G"})
    ped = Pedigree([Individual("A")])
    out = impute(res, ped, IBDStructure({"A": ("A.p", "A.m")}))
    assert out["A"].genotype is None and out["A"].paternal == "G" and out["A"].maternal is None
    res = MarkerResult(1, MarkerStatus.SOLVED, {"A.p": "G", "A.m": "T"})
    assert impute(res, ped, IBDStructure({"A": ("A.p", "A.m")}))["A"].genotype == ("G", "T")
    assert impute(MarkerResult(1, MarkerStatus.ERROR), ped, IBDStructure({"A": ("A.p", "A.m")})) == {}


def test_x_chromosome_phasing():
    ts = simulate(SimConfig(pedigree=nuclear(4), chrom="X", n_markers=300, seed=8))
    ph = phase_interval(ts.pedigree, ts.ibd_at(1), ts.observed)
    assert ph.counts()["Error"] == 0
    assert truth_mismatches(ts, ph) == 0
    assert any(u == w for u, w in ph.graph.endpoints)


def test_haplotype_output_marks_undetermined():
    ped, ibd, gm = triangle_family([[[0, 1]] * 3, [[0, 0]] * 3])
    ph = phase_interval(ped, ibd, gm)
    haps = ph.haplotypes()
    assert all(seq[0] == "." and seq[1] == "A" for seq in haps.values())
    text = format_haplotypes(ph)
    assert text.splitlines()[0] == "label\tm1\tm2"
    report = format_marker_report(ph).splitlines()
    assert report[0] == "marker_id\tstatus\tflags\tcomponent_detail"
    assert report[1].startswith("m1\tError\t-\t")


def test_threads_give_identical_results():
    ts = simulate(SimConfig(pedigree=nuclear(4), n_markers=500, missing_rate=0.1, error_rate=0.01, seed=3))
    a = phase_interval(ts.pedigree, ts.ibd_at(1), ts.observed)
    b = phase_interval(ts.pedigree, ts.ibd_at(1), ts.observed, threads=3)
    assert np.array_equal(a.status, b.status) and np.array_equal(a.alleles, b.alleles)
    assert a.diagnostics == b.diagnostics


def test_check_ibd():
    ped = three_generation((2, 2), 2)
    ts = simulate(SimConfig(pedigree=ped, n_markers=1000, seed=6))
    ibd = ts.ibd_at(1)
    rep = check_ibd(ped, ibd, ts.observed)
    assert rep.failure_rate == 0 and rep.verdict is Verdict.CONSISTENT
    assert rep.betti == (5,)
    bad = check_ibd(ped, swap_label(ped, ibd, "A1"), ts.observed)
    assert bad.heterozygous_failure_rate >= 0.25 and bad.verdict is Verdict.INCONSISTENT
    text = format_ibd_report(bad)
    assert text.startswith("#verdict\tInconsistent")
    with pytest.raises(ValueError):
        check_ibd(ped, ibd, ts.observed, suspect=0.5, inconsistent=0.2)


def test_verdict_is_monotone():
    rates = np.linspace(0, 1, 101)
    order = {Verdict.CONSISTENT: 0, Verdict.SUSPECT: 1, Verdict.INCONSISTENT: 2}
    levels = [order[verdict_for(r)] for r in rates]
    assert levels == sorted(levels)
    assert verdict_for(0.049) is Verdict.CONSISTENT and verdict_for(0.05) is Verdict.SUSPECT
    assert verdict_for(0.25) is Verdict.INCONSISTENT


def test_subgraph_maps_follow_labels():
    ts = simulate(SimConfig(pedigree=three_generation((2, 2), 2), n_markers=300, missing_rate=0.05, seed=13))
    ph = phase_interval(ts.pedigree, ts.ibd_at(1), ts.observed)
    assert len(ph.groups) > 5
    g = ph.graph
    for grp in ph.groups:
        assert [g.edge_labels[e] for e in grp.edge_map] == list(grp.graph.edge_labels)
        assert [g.vertex_labels[v] for v in grp.vertex_map] == list(grp.graph.vertex_labels)
