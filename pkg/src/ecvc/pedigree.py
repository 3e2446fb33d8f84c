"""Pedigrees, IBD structures and genotype matrices, and their translation to colorings.

At one marker, the multigraph has a vertex per founder haplotype label
carried by a sequenced individual and an edge per sequenced individual
joining their paternal and maternal labels. The individual's genotype is the
edge's constraint. On the X chromosome an XY individual's edge is a loop on
the maternal label.

Marker indices are 1-based and ranges are inclusive, matching file order.
"""

from __future__ import annotations

import enum
import gzip
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyGraph,
    IBDError,
    ParseError,
    PedigreeError,
    SexMissingOnX,
    UnreferencedLabel,
)
from .graph import ForestPlan, Multigraph, build, forest_plan, subgraph

MISSING = -1


class Sex(enum.IntEnum):
    UNKNOWN = 0
    XY = 1
    XX = 2


@dataclass(frozen=True)
class Individual:
    id: str
    family: str = "FAM"
    father: str | None = None
    mother: str | None = None
    sex: Sex = Sex.UNKNOWN
    sequenced: bool = True

    @property
    def is_founder(self) -> bool:
        return self.father is None


class Pedigree:
    """Individuals in file order; validated on construction."""

    def __init__(self, individuals: Iterable[Individual]):
        self.individuals: dict[str, Individual] = {}
        for ind in individuals:
            if ind.id in self.individuals:
                raise PedigreeError(f"duplicate individual {ind.id!r}")
            self.individuals[ind.id] = ind
        self._validate()

    def _validate(self) -> None:
        for ind in self.individuals.values():
            if (ind.father is None) != (ind.mother is None):
                raise PedigreeError(f"{ind.id!r} must have both parents or none")
            for p in (ind.father, ind.mother):
                if p is not None and p not in self.individuals:
                    raise PedigreeError(f"parent {p!r} of {ind.id!r} is not in the pedigree")
        self.topological_order()

    def topological_order(self) -> list[str]:
        """Parents before children; raises on cyclic parent references."""
        done: set[str] = set()
        order: list[str] = []
        pending = list(self.individuals.values())
        while pending:
            rest = [i for i in pending if not ({i.father, i.mother} - {None}) <= done]
            ready = [i for i in pending if i not in rest]
            if not ready:
                raise PedigreeError(f"cycle in parent references involving {rest[0].id!r}")
            for i in ready:
                done.add(i.id)
                order.append(i.id)
            pending = rest
        return order

    def __getitem__(self, ind_id: str) -> Individual:
        return self.individuals[ind_id]

    def __contains__(self, ind_id: str) -> bool:
        return ind_id in self.individuals

    def __iter__(self) -> Iterator[Individual]:
        return iter(self.individuals.values())

    def __len__(self) -> int:
        return len(self.individuals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pedigree):
            return NotImplemented
        return list(self.individuals.values()) == list(other.individuals.values())

    @property
    def founders(self) -> list[str]:
        return [i.id for i in self if i.is_founder]

    @property
    def sequenced(self) -> list[str]:
        return [i.id for i in self if i.sequenced]

    def children(self, ind_id: str) -> list[str]:
        return [i.id for i in self if ind_id in (i.father, i.mother)]

    def descendants(self, ind_id: str) -> set[str]:
        out: set[str] = set()
        todo = [ind_id]
        while todo:
            for c in self.children(todo.pop()):
                if c not in out:
                    out.add(c)
                    todo.append(c)
        return out


def founder_label(founder: str, origin: str) -> str:
    return f"{founder}.{origin}"


def split_label(label: str) -> tuple[str, str]:
    founder, _, origin = label.rpartition(".")
    return founder, origin


@dataclass(frozen=True)
class IBDStructure:
    """Haplotype label pairs ``(paternal, maternal)`` valid on markers ``start..end``.

    ``paternal`` is None for XY individuals on the X chromosome.
    """

    labels: Mapping[str, tuple[str | None, str]]
    chrom: str = "1"
    start: int = 1
    end: int | None = None

    def __getitem__(self, ind_id: str) -> tuple[str | None, str]:
        return self.labels[ind_id]

    def __contains__(self, ind_id: str) -> bool:
        return ind_id in self.labels

    def same_labels(self, other: "IBDStructure") -> bool:
        return dict(self.labels) == dict(other.labels)

    def changed(self, other: "IBDStructure") -> list[str]:
        """Individuals whose label pair differs between the two structures."""
        keys = list(self.labels) + [k for k in other.labels if k not in self.labels]
        return [k for k in keys if self.labels.get(k) != other.labels.get(k)]

    def with_labels(self, changes: Mapping[str, tuple[str | None, str]] = (), **kw) -> "IBDStructure":
        labels = dict(self.labels)
        labels.update(changes, **kw)
        return IBDStructure(labels, self.chrom, self.start, self.end)


@dataclass(frozen=True)
class IBDSegment:
    individual: str
    chrom: str
    start: int
    end: int
    paternal: str | None
    maternal: str


def ibd_intervals(segments: Sequence[IBDSegment], chrom: str | None = None) -> list[IBDStructure]:
    """Cut per-individual segments into intervals on which every label pair is constant."""
    segs = [s for s in segments if chrom is None or s.chrom == chrom]
    if not segs:
        return []
    chroms = {s.chrom for s in segs}
    if len(chroms) > 1:
        raise IBDError(f"segments span several chromosomes {sorted(chroms)}; pick one")
    cuts = sorted({s.start for s in segs} | {s.end + 1 for s in segs})
    out = []
    for lo, hi in zip(cuts, cuts[1:]):
        labels = {
            s.individual: (s.paternal, s.maternal) for s in segs if s.start <= lo and s.end >= hi - 1
        }
        if labels:
            out.append(IBDStructure(labels, segs[0].chrom, lo, hi - 1))
    return out


def ibd_at(segments: Sequence[IBDSegment], k: int, chrom: str | None = None) -> IBDStructure:
    for s in ibd_intervals(segments, chrom):
        if s.start <= k <= s.end:
            return s
    raise IBDError(f"no IBD defined at marker {k}")


@dataclass(frozen=True)
class Marker:
    id: str
    chrom: str
    position: int


def is_x_chrom(chrom: str) -> bool:
    return chrom.upper().removeprefix("CHR") == "X"


class GenotypeMatrix:
    """Genotype calls as allele codes.

    ``calls[k, i]`` holds the two allele codes (sorted) of individual ``i`` at
    marker row ``k``, or ``(-1, -1)`` if missing. ``alleles[c]`` is the allele
    string with code ``c``.
    """

    def __init__(self, markers: Sequence[Marker], individuals: Sequence[str], alleles: Sequence[str], calls):
        self.markers = tuple(markers)
        self.individuals = tuple(individuals)
        self.alleles = tuple(alleles)
        calls = np.asarray(calls, dtype=np.int32)
        if calls.shape != (len(self.markers), len(self.individuals), 2):
            raise ValueError(f"calls shape {calls.shape} does not match markers x individuals x 2")
        lo = np.minimum(calls[..., 0], calls[..., 1])
        hi = np.maximum(calls[..., 0], calls[..., 1])
        miss = lo < 0
        lo[miss] = MISSING
        hi[miss] = MISSING
        self.calls = np.stack([lo, hi], axis=-1)
        if any(not a for a in self.alleles):
            raise ValueError("allele strings must be nonempty")
        last: dict[str, int] = {}
        for m in self.markers:
            if m.chrom in last and m.position <= last[m.chrom]:
                raise ValueError(f"marker {m.id!r}: positions must increase within chromosome {m.chrom}")
            last[m.chrom] = m.position
        self._col = {ind: i for i, ind in enumerate(self.individuals)}

    @property
    def n_markers(self) -> int:
        return len(self.markers)

    def column(self, ind_id: str) -> int:
        try:
            return self._col[ind_id]
        except KeyError:
            raise IBDError(f"no genotype column for individual {ind_id!r}") from None

    def genotype(self, k: int, ind_id: str) -> tuple[str, str] | None:
        a, b = self.calls[k - 1, self.column(ind_id)]
        if a < 0:
            return None
        return self.alleles[a], self.alleles[b]

    def normalized(self) -> "GenotypeMatrix":
        """Same calls re-coded so that the allele table is the sorted set of used alleles."""
        used = np.unique(self.calls[self.calls >= 0])
        table = sorted(self.alleles[c] for c in used)
        remap = np.full(len(self.alleles) + 1, MISSING, dtype=np.int32)
        for new, a in enumerate(table):
            remap[self.alleles.index(a)] = new
        calls = np.where(self.calls >= 0, remap[self.calls], MISSING)
        return GenotypeMatrix(self.markers, self.individuals, table, calls)

    def subset(self, rows) -> "GenotypeMatrix":
        rows = np.asarray(rows)
        return GenotypeMatrix([self.markers[i] for i in rows], self.individuals, self.alleles, self.calls[rows])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GenotypeMatrix):
            return NotImplemented
        if self.markers != other.markers or self.individuals != other.individuals:
            return False
        a, b = self.normalized(), other.normalized()
        return a.alleles == b.alleles and np.array_equal(a.calls, b.calls)

    def __repr__(self) -> str:
        return f"GenotypeMatrix({self.n_markers} markers x {len(self.individuals)} individuals)"


# ---------------------------------------------------------------------------
# marker graphs


def build_marker_graph(
    ibd: IBDStructure,
    pedigree: Pedigree,
    chromosome: str = "autosome",
    exclude: Iterable[str] = (),
) -> Multigraph:
    """One edge per sequenced individual between their two haplotype labels.

    ``chromosome`` is ``"autosome"`` or ``"X"``. Individuals in ``exclude``
    contribute no edge.
    """
    on_x = chromosome.upper() == "X"
    founders = set(pedigree.founders)
    skip = set(exclude)
    unknown = sorted(skip - {ind.id for ind in pedigree})
    if unknown:
        raise PedigreeError(f"cannot exclude individuals not in the pedigree: {unknown}")
    vertices: dict[str, None] = {}
    edges = []
    for ind in pedigree:
        if not ind.sequenced or ind.id in skip:
            continue
        if ind.id not in ibd:
            raise IBDError(f"no IBD labels for sequenced individual {ind.id!r}")
        pat, mat = ibd[ind.id]
        for lab in (pat, mat):
            if lab is None:
                continue
            f, origin = split_label(lab)
            if f not in founders or origin not in ("p", "m"):
                raise UnreferencedLabel(lab, ind.id)
        if on_x:
            if ind.sex is Sex.UNKNOWN:
                raise SexMissingOnX(ind.id)
            ends = (mat, mat) if ind.sex is Sex.XY else (pat, mat)
        else:
            ends = (pat, mat)
        if ends[0] is None:
            raise IBDError(f"{ind.id!r} lacks a paternal label")
        for lab in ends:
            vertices.setdefault(lab)
        edges.append((ind.id, ends))
    return build(vertices, edges)


def constraints_at_marker(g: Multigraph, gm: GenotypeMatrix, k: int) -> tuple[dict[int, tuple[str, str]], frozenset]:
    """Genotype of each non-missing individual at marker ``k`` keyed by edge index, and the allele set."""
    out = {}
    for e, ind in enumerate(g.edge_labels):
        gt = gm.genotype(k, ind)
        if gt is not None:
            out[e] = gt
    colors = frozenset(a for pair in out.values() for a in pair)
    return out, colors


@dataclass(frozen=True)
class MissingnessPattern:
    missing: frozenset
    markers: tuple[int, ...] = field(compare=False)
    all_missing: bool = False


def _pattern_groups(mask: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Group rows of a boolean matrix; returns (representative rows, row indices) by first occurrence."""
    if mask.shape[0] == 0:
        return [], []
    packed = np.packbits(mask, axis=1) if mask.shape[1] else np.zeros((mask.shape[0], 1), np.uint8)
    _, first, inverse = np.unique(packed, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first)
    reps, groups = [], []
    for gi in order:
        rows = np.flatnonzero(inverse == gi)
        reps.append(mask[rows[0]])
        groups.append(rows)
    return reps, groups


def missingness_partition(
    gm: GenotypeMatrix, individuals: Sequence[str] | None = None, rows=None
) -> list[MissingnessPattern]:
    """Group markers by their set of missing individuals."""
    cols = list(gm.individuals) if individuals is None else list(individuals)
    idx = [gm.column(c) for c in cols]
    rows = np.arange(gm.n_markers) if rows is None else np.asarray(rows)
    mask = gm.calls[rows][:, idx, 0] < 0
    reps, groups = _pattern_groups(mask)
    out = []
    for rep, grp in zip(reps, groups):
        missing = frozenset(c for c, m in zip(cols, rep) if m)
        out.append(MissingnessPattern(missing, tuple(int(r) + 1 for r in rows[grp]), bool(rep.all())))
    return out


def subgraph_for_pattern(g: Multigraph, pattern: MissingnessPattern | Iterable[str]) -> tuple[Multigraph, ForestPlan]:
    missing = pattern.missing if isinstance(pattern, MissingnessPattern) else frozenset(pattern)
    keep = [e for e, lab in enumerate(g.edge_labels) if lab not in missing]
    if not keep:
        raise EmptyGraph("every edge is missing")
    sg = g if len(keep) == g.n_edges else subgraph(g, keep)
    return sg, forest_plan(sg)


# ---------------------------------------------------------------------------
# file formats


def _open_text(path) -> io.TextIOBase:
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def _records(lines: Iterable[str]) -> Iterator[tuple[int, str, list[str]]]:
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line, line.split("\t") if "\t" in line else line.split()


def parse_pedigree(lines: Iterable[str], source: str = "<pedigree>") -> Pedigree:
    """``family individual father mother sex sequenced``; ``0`` marks a missing parent."""
    inds = []
    for lineno, line, f in _records(lines):
        if len(f) != 6:
            raise ParseError(source, lineno, 1, f"expected 6 fields, got {len(f)}")
        fam, iid, fa, mo, sex, seq = f
        if sex not in ("0", "1", "2"):
            raise ParseError(source, lineno, line.find(sex) + 1, f"bad sex code {sex!r}")
        if seq not in ("0", "1"):
            raise ParseError(source, lineno, line.rfind(seq) + 1, f"bad sequenced flag {seq!r}")
        inds.append(
            Individual(iid, fam, None if fa == "0" else fa, None if mo == "0" else mo, Sex(int(sex)), seq == "1")
        )
    try:
        return Pedigree(inds)
    except PedigreeError as exc:
        raise ParseError(source, 0, 0, str(exc)) from exc


def read_pedigree(path) -> Pedigree:
    with _open_text(path) as fh:
        return parse_pedigree(fh, str(path))


def format_pedigree(ped: Pedigree) -> str:
    rows = ["#family_id\tindividual_id\tfather_id\tmother_id\tsex\tsequenced"]
    for i in ped:
        rows.append(
            f"{i.family}\t{i.id}\t{i.father or '0'}\t{i.mother or '0'}\t{int(i.sex)}\t{int(i.sequenced)}"
        )
    return "\n".join(rows) + "\n"


def parse_ibd(lines: Iterable[str], source: str = "<ibd>") -> list[IBDSegment]:
    """``individual chrom start end paternal maternal``; paternal ``-`` for XY on X."""
    segs = []
    for lineno, line, f in _records(lines):
        if len(f) != 6:
            raise ParseError(source, lineno, 1, f"expected 6 fields, got {len(f)}")
        iid, chrom, start, end, pat, mat = f
        try:
            a, b = int(start), int(end)
        except ValueError:
            raise ParseError(source, lineno, line.find(start) + 1, "marker indices must be integers") from None
        if a < 1 or b < a:
            raise ParseError(source, lineno, line.find(start) + 1, f"bad interval {a}..{b}")
        segs.append(IBDSegment(iid, chrom, a, b, None if pat == "-" else pat, mat))
    return segs


def read_ibd(path) -> list[IBDSegment]:
    with _open_text(path) as fh:
        return parse_ibd(fh, str(path))


def format_ibd(segments: Iterable[IBDSegment]) -> str:
    rows = ["#individual_id\tchrom\tstart_idx\tend_idx\tpaternal_label\tmaternal_label"]
    for s in segments:
        rows.append(f"{s.individual}\t{s.chrom}\t{s.start}\t{s.end}\t{s.paternal or '-'}\t{s.maternal}")
    return "\n".join(rows) + "\n"


def structure_segments(ibd: IBDStructure, end: int) -> list[IBDSegment]:
    stop = ibd.end if ibd.end is not None else end
    return [IBDSegment(i, ibd.chrom, ibd.start, stop, p, m) for i, (p, m) in ibd.labels.items()]


def parse_genotypes(lines: Iterable[str], source: str = "<genotypes>") -> GenotypeMatrix:
    """Header ``marker_id chrom position ind...`` then ``a1/a2`` or ``./.`` per individual."""
    header = None
    markers: list[Marker] = []
    table: dict[str, int] = {}
    rows: list[list[tuple[int, int]]] = []
    for lineno, line, f in _records(lines):
        if header is None:
            if f[:3] != ["marker_id", "chrom", "position"]:
                raise ParseError(source, lineno, 1, "header must start with marker_id, chrom, position")
            header = f[3:]
            continue
        if len(f) != len(header) + 3:
            raise ParseError(source, lineno, 1, f"expected {len(header) + 3} fields, got {len(f)}")
        try:
            pos = int(f[2])
        except ValueError:
            raise ParseError(source, lineno, line.find(f[2]) + 1, "position must be an integer") from None
        markers.append(Marker(f[0], f[1], pos))
        row = []
        for j, call in enumerate(f[3:]):
            parts = call.replace("|", "/").split("/")
            if len(parts) != 2 or not all(parts):
                col = sum(len(x) + 1 for x in f[: 3 + j]) + 1
                raise ParseError(source, lineno, col, f"bad genotype {call!r}")
            if "." in parts:
                row.append((MISSING, MISSING))
                continue
            codes = tuple(table.setdefault(a, len(table)) for a in parts)
            row.append(codes)
        rows.append(row)
    if header is None:
        raise ParseError(source, 0, 0, "empty genotype file")
    alleles = list(table)
    calls = np.array(rows, dtype=np.int32).reshape(len(markers), len(header), 2)
    try:
        return GenotypeMatrix(markers, header, alleles, calls).normalized()
    except ValueError as exc:
        raise ParseError(source, 0, 0, str(exc)) from exc


def read_genotypes(path) -> GenotypeMatrix:
    with _open_text(path) as fh:
        return parse_genotypes(fh, str(path))


def format_genotypes(gm: GenotypeMatrix) -> str:
    out = io.StringIO()
    out.write("\t".join(["marker_id", "chrom", "position", *gm.individuals]) + "\n")
    al = gm.alleles
    for m, row in zip(gm.markers, gm.calls):
        cells = ["./." if a < 0 else f"{al[a]}/{al[b]}" for a, b in row]
        out.write("\t".join([m.id, m.chrom, str(m.position), *cells]) + "\n")
    return out.getvalue()


def parse_vcf(lines: Iterable[str], source: str = "<vcf>", samples: Sequence[str] | None = None) -> GenotypeMatrix:
    """GT fields of a VCF mapped onto a genotype matrix; half-missing calls count as missing."""
    names = None
    markers: list[Marker] = []
    table: dict[str, int] = {}
    rows = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n\r")
        if line.startswith("##") or not line:
            continue
        f = line.split("\t")
        if line.startswith("#CHROM"):
            names = f[9:]
            keep = list(range(len(names))) if samples is None else [names.index(s) for s in samples]
            continue
        if names is None:
            raise ParseError(source, lineno, 1, "record before #CHROM header")
        chrom, pos, vid, ref, alt = f[:5]
        fmt = f[8].split(":")
        if "GT" not in fmt:
            raise ParseError(source, lineno, 1, "FORMAT lacks GT")
        gi = fmt.index("GT")
        vocab = [ref] + ([] if alt == "." else alt.split(","))
        markers.append(Marker(vid if vid != "." else f"{chrom}:{pos}", chrom, int(pos)))
        row = []
        for s in keep:
            gt = f[9 + s].split(":")[gi].replace("|", "/").split("/")
            if len(gt) == 1:
                gt = gt * 2
            if "." in gt:
                row.append((MISSING, MISSING))
                continue
            try:
                row.append(tuple(table.setdefault(vocab[int(x)], len(table)) for x in gt))
            except (ValueError, IndexError):
                raise ParseError(source, lineno, 1, f"bad GT {f[9 + s]!r}") from None
        rows.append(row)
    if names is None:
        raise ParseError(source, 0, 0, "missing #CHROM header")
    ids = names if samples is None else list(samples)
    calls = np.array(rows, dtype=np.int32).reshape(len(markers), len(ids), 2)
    return GenotypeMatrix(markers, ids, list(table), calls).normalized()


def read_vcf(path, samples: Sequence[str] | None = None) -> GenotypeMatrix:
    with _open_text(path) as fh:
        return parse_vcf(fh, str(path), samples)
