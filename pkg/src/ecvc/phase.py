"""Haplotype reconstruction on a recombination-free interval.

Markers are grouped by missingness pattern; each group gets its own
subgraph and forest plan and is solved in one batch. A marker is Solved when
every component has a unique coloring, Error when some component has none
(a genotyping error or mutation), Ambiguous otherwise. Alleles are only ever
read off unique components, so nothing is guessed.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import IBDError
from .graph import ForestPlan, Multigraph, connected_components, first_betti
from .pedigree import (
    GenotypeMatrix,
    IBDStructure,
    Pedigree,
    Sex,
    _pattern_groups,
    build_marker_graph,
    is_x_chrom,
    subgraph_for_pattern,
)
from .solver import BatchSolution, ConstraintBatch, SolutionSet, Status, diagnose, solve_many

UNDETERMINED = "."


class MarkerStatus(enum.IntEnum):
    SOLVED = 0
    AMBIGUOUS = 1
    ERROR = 2
    ALL_MISSING = 3

    @property
    def label(self) -> str:
        return {0: "Solved", 1: "Ambiguous", 2: "Error", 3: "AllMissing"}[int(self)]


@dataclass(frozen=True)
class MarkerResult:
    index: int
    status: MarkerStatus
    assignments: Mapping[str, str] = field(default_factory=dict)
    ambiguous: tuple[tuple[str, ...], ...] = ()
    diagnostics: tuple[str, ...] = ()
    excess_heterozygosity: bool = False
    marker_id: str | None = None


def classify_marker(
    solset: SolutionSet,
    component_sizes: Sequence[int],
    *,
    labels: Sequence[str] | None = None,
    index: int = 0,
    marker_id: str | None = None,
    h_min: int = 4,
    diagnostics: Sequence[str] = (),
) -> MarkerResult:
    """Classify one marker from its solution set; ``component_sizes`` are edge counts per component."""
    name = (lambda v: labels[v]) if labels is not None else (lambda v: v)
    statuses = [o.status for o in solset.outcomes]
    if any(s is Status.NONE for s in statuses):
        return MarkerResult(index, MarkerStatus.ERROR, diagnostics=tuple(diagnostics), marker_id=marker_id)
    assignments = {}
    ambiguous = []
    flag = False
    for o, size in zip(solset.outcomes, component_sizes):
        if o.status is Status.UNIQUE:
            assignments.update({name(v): c for v, c in o.colorings[0].items()})
        else:
            ambiguous.append(tuple(name(v) for v in sorted(o.colorings[0])))
            flag |= size >= h_min
    status = MarkerStatus.AMBIGUOUS if ambiguous else MarkerStatus.SOLVED
    return MarkerResult(index, status, assignments, tuple(ambiguous), (), flag, marker_id)


@dataclass
class _Group:
    rows: np.ndarray  # positions within the interval
    graph: Multigraph | None = None
    plan: ForestPlan | None = None
    solution: BatchSolution | None = None
    vertex_map: np.ndarray | None = None  # subgraph vertex -> full-graph vertex
    edge_map: np.ndarray | None = None  # subgraph edge -> full-graph edge


@dataclass
class PhasedInterval:
    """Per-marker verdicts and reconstructed haplotype alleles over an interval.

    ``alleles[v, i]`` is the allele code of haplotype label ``labels[v]`` at the
    i-th marker of the interval, or -1 where undetermined.
    """

    graph: Multigraph
    markers: tuple[int, ...]
    marker_ids: tuple[str, ...]
    allele_table: tuple[str, ...]
    status: np.ndarray
    alleles: np.ndarray
    excess_heterozygosity: np.ndarray
    diagnostics: dict[int, tuple[str, ...]]
    h_min: int
    groups: list[_Group] = field(repr=False, default_factory=list)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.graph.vertex_labels

    def __len__(self) -> int:
        return len(self.markers)

    def counts(self) -> dict[str, int]:
        return {s.label: int((self.status == s).sum()) for s in MarkerStatus}

    def position(self, k: int) -> int:
        i = k - self.markers[0]
        if not 0 <= i < len(self.markers):
            raise IndexError(f"marker {k} outside interval")
        return i

    def result(self, k: int) -> MarkerResult:
        """Marker result for 1-based marker index ``k``."""
        i = self.position(k)
        st = MarkerStatus(int(self.status[i]))
        if st is MarkerStatus.ALL_MISSING:
            return MarkerResult(k, st, marker_id=self.marker_ids[i])
        grp, j = self._locate(i)
        ss = grp.solution[j]
        sizes = [len(cp.edges) for cp in grp.plan.components]
        return classify_marker(
            ss,
            sizes,
            labels=grp.graph.vertex_labels,
            index=k,
            marker_id=self.marker_ids[i],
            h_min=self.h_min,
            diagnostics=self.diagnostics.get(k, ()),
        )

    def results(self) -> list[MarkerResult]:
        return [self.result(k) for k in self.markers]

    def _locate(self, i: int) -> tuple[_Group, int]:
        for grp in self.groups:
            hit = np.searchsorted(grp.rows, i)
            if hit < grp.rows.size and grp.rows[hit] == i:
                return grp, int(hit)
        raise KeyError(i)

    def haplotypes(self, strict: bool = True) -> dict[str, list[str]]:
        """Allele sequence per haplotype label; ``.`` where undetermined.

        With ``strict`` every non-Solved marker is ``.``; otherwise alleles of
        uniquely solved components at Ambiguous markers are kept.
        """
        codes = self.alleles.copy()
        if strict:
            codes[:, self.status != MarkerStatus.SOLVED] = -1
        table = self.allele_table
        return {
            lab: [UNDETERMINED if c < 0 else table[c] for c in row]
            for lab, row in zip(self.labels, codes)
        }

    def allele_codes(self, label: str) -> np.ndarray:
        return self.alleles[self.graph.vertex_index(label)]

    def imputed_genotypes(self, paternal: str | None, maternal: str) -> np.ndarray:
        """``(n, 2)`` sorted codes for an individual carrying the two labels; -1 unless both are determined.

        A None or unknown paternal label (XY on X) imputes a homozygous call of the maternal allele.
        """
        m = self._codes_or_missing(maternal)
        p = m if paternal is None else self._codes_or_missing(paternal)
        ok = (p >= 0) & (m >= 0)
        out = np.stack([np.minimum(p, m), np.maximum(p, m)], axis=1)
        out[~ok] = -1
        return out

    def _codes_or_missing(self, label: str) -> np.ndarray:
        try:
            return self.allele_codes(label)
        except Exception:
            return np.full(len(self.markers), -1, dtype=np.int32)


def _interval_rows(gm: GenotypeMatrix, marker_range) -> np.ndarray:
    if marker_range is None:
        return np.arange(gm.n_markers)
    a, b = marker_range
    if not 1 <= a <= b <= gm.n_markers:
        raise IBDError(f"marker range {a}:{b} outside 1..{gm.n_markers}")
    return np.arange(a - 1, b)


def _chromosome_kind(ibd: IBDStructure, gm: GenotypeMatrix, rows) -> str:
    chrom = ibd.chrom if ibd.chrom else gm.markers[rows[0]].chrom
    return "X" if is_x_chrom(chrom) else "autosome"


def phase_interval(
    pedigree: Pedigree,
    ibd: IBDStructure,
    gm: GenotypeMatrix,
    marker_range: tuple[int, int] | None = None,
    *,
    h_min: int = 4,
    exclude: Iterable[str] = (),
    diagnostics: bool = True,
    threads: int = 1,
    chromosome: str | None = None,
) -> PhasedInterval:
    """Phase all markers of an interval on which ``ibd`` holds.

    Genotype inconsistencies come back as Error markers, never as exceptions.
    """
    rows = _interval_rows(gm, marker_range)
    kind = chromosome or _chromosome_kind(ibd, gm, rows)
    g = build_marker_graph(ibd, pedigree, kind, exclude)
    cols = np.array([gm.column(ind) for ind in g.edge_labels], dtype=np.intp)
    calls = gm.calls[rows][:, cols, :]
    n = rows.size

    status = np.full(n, MarkerStatus.ALL_MISSING, dtype=np.int8)
    alleles = np.full((g.n_vertices, n), -1, dtype=np.int32)
    excess = np.zeros(n, dtype=bool)
    diag: dict[int, tuple[str, ...]] = {}
    marker_index = rows + 1

    ends = np.array(g.endpoints, dtype=np.intp).reshape(-1, 2)
    reps, idx_groups = _pattern_groups(calls[..., 0] < 0)
    groups: list[_Group] = []
    jobs = []
    for rep, grp_rows in zip(reps, idx_groups):
        if rep.all():
            continue
        missing = {g.edge_labels[e] for e in np.flatnonzero(rep)}
        sg, plan = subgraph_for_pattern(g, missing)
        # subgraphs keep edge order and the order of surviving vertices
        edge_map = np.flatnonzero(~rep)
        vmap = np.unique(ends[edge_map])
        jobs.append(_Group(grp_rows, sg, plan, None, vmap, edge_map))

    def run(grp: _Group) -> _Group:
        sub = calls[grp.rows][:, grp.edge_map, :]
        batch = ConstraintBatch(sub[..., 0], sub[..., 1], gm.alleles)
        grp.solution = solve_many(grp.plan, batch)
        return grp

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(run, jobs))
    else:
        done = [run(j) for j in jobs]

    for grp in done:
        bs = grp.solution
        st = bs.status
        none = (st == Status.NONE).any(axis=1)
        two = st == Status.TWO
        ambiguous = two.any(axis=1) & ~none
        status[grp.rows] = np.where(none, MarkerStatus.ERROR, np.where(ambiguous, MarkerStatus.AMBIGUOUS, MarkerStatus.SOLVED))
        big = np.array([len(cp.edges) >= h_min for cp in grp.plan.components])
        excess[grp.rows] = (two & big).any(axis=1) & ~none
        for j, cp in enumerate(grp.plan.components):
            uniq = (st[:, j] == Status.UNIQUE) & ~none
            for v in cp.vertices:
                alleles[grp.vertex_map[v], grp.rows] = np.where(uniq, bs.first[:, v], -1)
        if diagnostics and none.any():
            for r in np.flatnonzero(none):
                k = int(marker_index[grp.rows[r]])
                pairs = calls[grp.rows[r]][grp.edge_map]
                lc = {e: (gm.alleles[a], gm.alleles[b]) for e, (a, b) in enumerate(pairs)}
                tags = []
                for j, cp in enumerate(grp.plan.components):
                    if st[r, j] == Status.NONE:
                        tags.extend(str(t) for t in diagnose(cp, lc))
                diag[k] = tuple(tags)
        groups.append(grp)

    groups.sort(key=lambda x: int(x.rows[0]))
    return PhasedInterval(
        graph=g,
        markers=tuple(int(k) for k in marker_index),
        marker_ids=tuple(gm.markers[r].id for r in rows),
        allele_table=gm.alleles,
        status=status,
        alleles=alleles,
        excess_heterozygosity=excess,
        diagnostics=diag,
        h_min=h_min,
        groups=groups,
    )


@dataclass(frozen=True)
class Imputation:
    genotype: tuple[str, str] | None
    paternal: str | None
    maternal: str | None


def impute(
    result: MarkerResult,
    pedigree: Pedigree,
    ibd: IBDStructure,
    pattern: Iterable[str] | None = None,
    chromosome: str = "autosome",
) -> dict[str, Imputation]:
    """Read genotypes and haplotype alleles off the uniquely colored labels.

    Covers every individual with IBD labels (restricted to ``pattern`` when
    given), sequenced or not. A genotype needs both labels colored; one
    colored label yields just that haplotype allele.
    """
    if result.status not in (MarkerStatus.SOLVED, MarkerStatus.AMBIGUOUS):
        return {}
    on_x = chromosome.upper() == "X"
    who = list(ibd.labels) if pattern is None else [i for i in pattern if i in ibd]
    out = {}
    for iid in who:
        pat, mat = ibd[iid]
        xy = on_x and iid in pedigree and pedigree[iid].sex is Sex.XY
        a_m = result.assignments.get(mat)
        a_p = None if (xy or pat is None) else result.assignments.get(pat)
        if xy:
            gt = (a_m, a_m) if a_m is not None else None
        elif a_p is not None and a_m is not None:
            gt = tuple(sorted((a_p, a_m)))
        else:
            gt = None
        if gt is None and a_p is None and a_m is None:
            continue
        out[iid] = Imputation(gt, a_p, a_m)
    return out


class Verdict(enum.Enum):
    CONSISTENT = "Consistent"
    SUSPECT = "Suspect"
    INCONSISTENT = "Inconsistent"


@dataclass
class IbdConsistencyReport:
    markers: tuple[int, ...]
    failed: np.ndarray
    heterozygous: np.ndarray
    failure_rate: float
    heterozygous_failure_rate: float
    betti: tuple[int, ...]
    verdict: Verdict
    counts: dict[str, int]


def verdict_for(rate: float, suspect: float = 0.05, inconsistent: float = 0.25) -> Verdict:
    if rate >= inconsistent:
        return Verdict.INCONSISTENT
    if rate >= suspect:
        return Verdict.SUSPECT
    return Verdict.CONSISTENT


def check_ibd(
    pedigree: Pedigree,
    ibd: IBDStructure,
    gm: GenotypeMatrix,
    marker_range: tuple[int, int] | None = None,
    *,
    suspect: float = 0.05,
    inconsistent: float = 0.25,
    exclude: Iterable[str] = (),
    threads: int = 1,
) -> IbdConsistencyReport:
    """No-solution rates on an interval and the resulting verdict on the IBD."""
    if not 0 <= suspect <= inconsistent <= 1:
        raise ValueError("need 0 <= suspect <= inconsistent <= 1")
    ph = phase_interval(pedigree, ibd, gm, marker_range, exclude=exclude, diagnostics=False, threads=threads)
    rows = np.asarray(ph.markers) - 1
    cols = [gm.column(i) for i in ph.graph.edge_labels]
    calls = gm.calls[rows][:, cols, :]
    het = ((calls[..., 0] >= 0) & (calls[..., 0] != calls[..., 1])).any(axis=1)
    failed = ph.status == MarkerStatus.ERROR
    observed = ph.status != MarkerStatus.ALL_MISSING
    rate = float(failed.sum() / observed.sum()) if observed.any() else 0.0
    het_rate = float((failed & het).sum() / het.sum()) if het.any() else 0.0
    betti = tuple(first_betti(c) for c in connected_components(ph.graph))
    return IbdConsistencyReport(
        markers=ph.markers,
        failed=failed,
        heterozygous=het,
        failure_rate=rate,
        heterozygous_failure_rate=het_rate,
        betti=betti,
        verdict=verdict_for(het_rate, suspect, inconsistent),
        counts=ph.counts(),
    )


# ---------------------------------------------------------------------------
# report writers


def format_haplotypes(ph: PhasedInterval, strict: bool = True) -> str:
    rows = ["label\t" + "\t".join(ph.marker_ids)]
    for lab, seq in ph.haplotypes(strict).items():
        rows.append(lab + "\t" + "\t".join(seq))
    return "\n".join(rows) + "\n"


def format_marker_report(ph: PhasedInterval) -> str:
    rows = ["marker_id\tstatus\tflags\tcomponent_detail"]
    for i, k in enumerate(ph.markers):
        st = MarkerStatus(int(ph.status[i]))
        flags = "excess_het" if ph.excess_heterozygosity[i] else "-"
        if st is MarkerStatus.ERROR:
            detail = ",".join(ph.diagnostics.get(k, ())) or "-"
        elif st is MarkerStatus.AMBIGUOUS:
            detail = ";".join("|".join(c) for c in ph.result(k).ambiguous)
        else:
            detail = "-"
        rows.append(f"{ph.marker_ids[i]}\t{st.label}\t{flags}\t{detail}")
    return "\n".join(rows) + "\n"


def format_ibd_report(rep: IbdConsistencyReport, marker_ids: Sequence[str] | None = None) -> str:
    rows = [
        f"#verdict\t{rep.verdict.value}",
        f"#failure_rate\t{rep.failure_rate:.6f}",
        f"#heterozygous_failure_rate\t{rep.heterozygous_failure_rate:.6f}",
        f"#betti\t{','.join(map(str, rep.betti))}",
        "marker\tfailed\theterozygous",
    ]
    for i, k in enumerate(rep.markers):
        name = marker_ids[i] if marker_ids is not None else str(k)
        rows.append(f"{name}\t{int(rep.failed[i])}\t{int(rep.heterozygous[i])}")
    return "\n".join(rows) + "\n"
