import gzip

import numpy as np
import pytest

from ecvc.errors import EmptyGraph, IBDError, ParseError, PedigreeError, SexMissingOnX, UnreferencedLabel
from ecvc.pedigree import (
    GenotypeMatrix,
    IBDSegment,
    IBDStructure,
    Individual,
    Marker,
    Pedigree,
    Sex,
    build_marker_graph,
    constraints_at_marker,
    format_genotypes,
    format_ibd,
    format_pedigree,
    ibd_at,
    ibd_intervals,
    missingness_partition,
    parse_genotypes,
    parse_ibd,
    parse_pedigree,
    parse_vcf,
    read_vcf,
    subgraph_for_pattern,
)
from ecvc.graph import build, connected_components, forest_plan


def family():
    return Pedigree(
        [
            Individual("F", sex=Sex.XY),
            Individual("M", sex=Sex.XX),
            Individual("S1", father="F", mother="M", sex=Sex.XY),
            Individual("S2", father="F", mother="M", sex=Sex.XX),
        ]
    )


def matrix(rows, individuals=("F", "M", "S1", "S2")):
    """``rows`` of genotype strings like ``"A/G"`` or ``"./."``."""
    text = ["marker_id\tchrom\tposition\t" + "\t".join(individuals)]
    for i, row in enumerate(rows, 1):
        text.append(f"m{i}\t1\t{i * 100}\t" + "\t".join(row))
    return parse_genotypes(text)


def test_pedigree_validation():
    with pytest.raises(PedigreeError):
        Pedigree([Individual("A", father="B")])
    with pytest.raises(PedigreeError):
        Pedigree([Individual("A", father="X", mother="Y")])
    with pytest.raises(PedigreeError):
        Pedigree(
            [
                Individual("A", father="B", mother="C"),
                Individual("B", father="A", mother="C"),
                Individual("C"),
            ]
        )
    ped = family()
    assert ped.founders == ["F", "M"]
    assert ped.topological_order().index("S1") > ped.topological_order().index("F")
    assert ped.descendants("F") == {"S1", "S2"}


def test_siblings_sharing_both_labels_give_parallel_edges():
    parents = [Individual("F", sequenced=False), Individual("M", sequenced=False)]
    ped = Pedigree(parents + [Individual(s, father="F", mother="M") for s in ("A", "B")])
    ibd = IBDStructure({"F": ("F.p", "F.m"), "M": ("M.p", "M.m"), "A": ("F.p", "M.m"), "B": ("F.p", "M.m")})
    g = build_marker_graph(ibd, ped)
    assert g.vertex_labels == ("F.p", "M.m")
    assert g.endpoints == ((0, 1), (0, 1))


def test_parent_child_is_a_path():
    ped = Pedigree([Individual("F"), Individual("M", sequenced=False), Individual("C", father="F", mother="M")])
    ibd = IBDStructure({"F": ("F.p", "F.m"), "M": ("M.p", "M.m"), "C": ("F.p", "M.m")})
    g = build_marker_graph(ibd, ped)
    assert g.vertex_labels == ("F.p", "F.m", "M.m")
    assert len(connected_components(g)) == 1 and g.n_edges == 2


def test_x_chromosome_son_is_a_loop():
    ped = family()
    ibd = IBDStructure({"F": (None, "F.m"), "M": ("M.p", "M.m"), "S1": (None, "M.p"), "S2": ("F.m", "M.m")}, chrom="X")
    g = build_marker_graph(ibd, ped, "X")
    s1 = g.edge_index("S1")
    assert g.endpoints[s1] == (g.vertex_index("M.p"),) * 2
    unknown = Pedigree([Individual("F", sex=Sex.UNKNOWN)])
    with pytest.raises(SexMissingOnX):
        build_marker_graph(IBDStructure({"F": (None, "F.m")}), unknown, "X")


def test_label_errors():
    ped = family()
    ibd = IBDStructure({"F": ("F.p", "F.m"), "M": ("M.p", "M.m"), "S1": ("F.p", "Q.m"), "S2": ("F.m", "M.m")})
    with pytest.raises(UnreferencedLabel):
        build_marker_graph(ibd, ped)
    with pytest.raises(IBDError):
        build_marker_graph(IBDStructure({"F": ("F.p", "F.m")}), ped)


def test_constraints_at_marker():
    ped = family()
    ibd = IBDStructure({"F": ("F.p", "F.m"), "M": ("M.p", "M.m"), "S1": ("F.p", "M.m"), "S2": ("F.m", "M.m")})
    g = build_marker_graph(ibd, ped)
    gm = matrix([["A/G", "T/T", "A/T", "./."], ["A/C", "C/G", "A/A", "C/C"]])
    l, colors = constraints_at_marker(g, gm, 1)
    assert l == {0: ("A", "G"), 1: ("T", "T"), 2: ("A", "T")}
    assert colors == {"A", "G", "T"}
    _, colors = constraints_at_marker(g, gm, 2)
    assert colors == {"A", "C", "G"}


def test_missingness_partition():
    gm = matrix([["A/A"] * 4] * 4)
    assert len(missingness_partition(gm)) == 1
    rows = [["A/A"] * 4 for _ in range(8)]
    rows[2][1] = rows[6][1] = "./."
    rows[4] = ["./."] * 4
    parts = missingness_partition(matrix(rows))
    assert [p.markers for p in parts] == [(1, 2, 4, 6, 8), (3, 7), (5,)]
    assert parts[1].missing == {"M"} and parts[2].all_missing
    covered = sorted(k for p in parts for k in p.markers)
    assert covered == list(range(1, 9))


def test_subgraph_for_pattern():
    # path A.p - A.m - B.m - C.m, one edge per individual
    g = build(["A.p", "A.m", "B.m", "C.m"], [("A", ("A.p", "A.m")), ("B", ("A.m", "B.m")), ("C", ("B.m", "C.m"))])
    sg, plan = subgraph_for_pattern(g, {"C"})
    assert sg.vertex_labels == ("A.p", "A.m", "B.m")
    sg, _ = subgraph_for_pattern(g, {"B"})
    assert len(connected_components(sg)) == 2
    same, plan = subgraph_for_pattern(g, set())
    assert same is g and plan == forest_plan(g)
    with pytest.raises(EmptyGraph):
        subgraph_for_pattern(g, {"A", "B", "C"})


def test_file_round_trips(tmp_path):
    ped = family()
    assert parse_pedigree(format_pedigree(ped).splitlines()) == ped
    segs = [IBDSegment("S1", "X", 1, 10, None, "M.p"), IBDSegment("S2", "X", 1, 10, "F.m", "M.m")]
    assert parse_ibd(format_ibd(segs).splitlines()) == segs
    assert "\t-\t" in format_ibd(segs)
    gm = matrix([["A/G", "T/T", "A/T", "./."], ["AC/A", "C/G", "G/T", "C/C"]])
    assert parse_genotypes(format_genotypes(gm).splitlines()) == gm
    assert len(gm.alleles) >= 4


def test_parse_errors_cite_lines():
    with pytest.raises(ParseError) as info:
        parse_pedigree(["FAM\tA\t0\t0\t1\t1", "FAM\tB\t0\t0\t7\t1"])
    assert info.value.line == 2
    with pytest.raises(ParseError) as info:
        parse_genotypes(["marker_id\tchrom\tposition\tA", "m1\t1\t5\tA-G"])
    assert info.value.line == 2
    with pytest.raises(ParseError):
        parse_ibd(["A\t1\t10\t5\tA.p\tA.m"])


def test_genotype_matrix_invariants():
    with pytest.raises(ValueError):
        GenotypeMatrix([Marker("a", "1", 5), Marker("b", "1", 5)], ["A"], ["C"], np.zeros((2, 1, 2), int))
    gm = matrix([["A/G", "T/T", "A/T", "./."]])
    assert gm.genotype(1, "S2") is None
    assert gm.genotype(1, "F") == ("A", "G")


def test_vcf_adapter(tmp_path):
    text = "\n".join(
        [
            "##fileformat=VCFv4.2",
            "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT\tF\tM\tS1",
            "1\t100\trs1\tA\tG\t.\tPASS\t.\tGT\t0/1\t1|1\t0/.",
            "1\t200\t.\tC\tT,G\t.\tPASS\t.\tGT:DP\t1/2:9\t0/0:3\t2:4",
        ]
    )
    gm = parse_vcf(text.splitlines())
    assert gm.genotype(1, "F") == ("A", "G")
    assert gm.genotype(1, "S1") is None  # half-missing counts as missing
    assert gm.genotype(2, "F") == ("G", "T")
    assert gm.genotype(2, "S1") == ("G", "G")
    assert gm.markers[1].id == "1:200"
    path = tmp_path / "x.vcf.gz"
    with gzip.open(path, "wt") as fh:
        fh.write(text + "\n")
    assert read_vcf(path) == gm


def test_ibd_intervals_cut_at_breakpoints():
    segs = [
        IBDSegment("A", "1", 1, 100, "F.p", "M.m"),
        IBDSegment("B", "1", 1, 40, "F.p", "M.p"),
        IBDSegment("B", "1", 41, 100, "F.m", "M.p"),
    ]
    ivs = ibd_intervals(segs)
    assert [(s.start, s.end) for s in ivs] == [(1, 40), (41, 100)]
    assert ibd_at(segs, 41)["B"] == ("F.m", "M.p")
    assert ivs[0].changed(ivs[1]) == ["B"]
