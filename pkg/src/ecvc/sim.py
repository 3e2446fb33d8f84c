"""Gene-dropping simulator producing pedigrees, genotypes and the true IBD.

Each founder carries two labelled haplotypes (``F.p``, ``F.m``) with random
alleles. Every meiosis copies one parental haplotype and switches to the
other at each crossover, so a child's haplotype is a label-by-label mosaic of
its parent's. Genotype errors replace one allele of a call by another allele
of the same marker; missing calls are drawn independently and never carry an
error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvalidCrossoverSpec
from .pedigree import (
    MISSING,
    GenotypeMatrix,
    IBDSegment,
    IBDStructure,
    Individual,
    Marker,
    Pedigree,
    Sex,
    format_genotypes,
    format_ibd,
    format_pedigree,
    founder_label,
    ibd_at,
    ibd_intervals,
    is_x_chrom,
)

BASES = ("A", "C", "G", "T")


# ---------------------------------------------------------------------------
# pedigree generators


def trio(child_sex: Sex = Sex.XX) -> Pedigree:
    return Pedigree(
        [
            Individual("F", sex=Sex.XY),
            Individual("M", sex=Sex.XX),
            Individual("C1", father="F", mother="M", sex=child_sex),
        ]
    )


def nuclear(children: int = 4, unsequenced: Sequence[str] = ()) -> Pedigree:
    inds = [Individual("F", sex=Sex.XY), Individual("M", sex=Sex.XX)]
    for i in range(children):
        inds.append(Individual(f"C{i + 1}", father="F", mother="M", sex=Sex.XY if i % 2 else Sex.XX))
    skip = set(unsequenced)
    return Pedigree([Individual(i.id, i.family, i.father, i.mother, i.sex, i.id not in skip) for i in inds])


def three_generation(
    sibships: tuple[int, int] = (2, 2),
    grandchildren: int = 2,
    unsequenced: Sequence[str] = (),
) -> Pedigree:
    """Two founder couples; their children A1 and B1 marry, the other children marry in-law founders.

    Every second-generation couple has ``grandchildren`` children.
    """
    s1, s2 = sibships
    inds = [
        Individual("GF1", sex=Sex.XY),
        Individual("GM1", sex=Sex.XX),
        Individual("GF2", sex=Sex.XY),
        Individual("GM2", sex=Sex.XX),
    ]
    for i in range(s1):
        inds.append(Individual(f"A{i + 1}", father="GF1", mother="GM1", sex=Sex.XY if i % 2 == 0 else Sex.XX))
    for i in range(s2):
        inds.append(Individual(f"B{i + 1}", father="GF2", mother="GM2", sex=Sex.XX if i % 2 == 0 else Sex.XY))
    couples = [("A1", "B1")]
    for i in range(1, s1):
        sp = f"SA{i + 1}"
        xy = i % 2 == 0
        inds.append(Individual(sp, sex=Sex.XX if xy else Sex.XY))
        couples.append((f"A{i + 1}", sp) if xy else (sp, f"A{i + 1}"))
    for i in range(1, s2):
        sp = f"SB{i + 1}"
        xx = i % 2 == 0
        inds.append(Individual(sp, sex=Sex.XY if xx else Sex.XX))
        couples.append((sp, f"B{i + 1}") if xx else (f"B{i + 1}", sp))
    for ci, (fa, mo) in enumerate(couples):
        for j in range(grandchildren):
            inds.append(Individual(f"G{ci + 1}_{j + 1}", father=fa, mother=mo, sex=Sex.XX if j % 2 == 0 else Sex.XY))
    skip = set(unsequenced)
    return Pedigree([Individual(i.id, i.family, i.father, i.mother, i.sex, i.id not in skip) for i in inds])


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Crossover:
    """Crossover in the meiosis producing ``individual``'s ``origin`` haplotype, between markers ``after`` and ``after + 1``."""

    individual: str
    origin: str
    after: int


@dataclass
class SimConfig:
    pedigree: Pedigree = field(default_factory=trio)
    n_markers: int = 1000
    chrom: str = "1"
    spacing: int = 1000
    multiallelic_fraction: float = 0.0
    max_alleles: int = 4
    maf_range: tuple[float, float] = (0.05, 0.5)
    crossovers: Sequence[Crossover] = ()
    crossover_rate: float = 0.0
    first_haplotype: dict = field(default_factory=dict)
    error_rate: float = 0.0
    missing_rate: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("error_rate", "missing_rate", "multiallelic_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.crossover_rate < 0:
            raise ConfigError("crossover_rate must be nonnegative")
        if self.n_markers < 1:
            raise ConfigError("n_markers must be positive")
        lo, hi = self.maf_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ConfigError(f"bad maf_range {self.maf_range}")
        if not 2 <= self.max_alleles <= len(BASES):
            raise ConfigError(f"max_alleles must be in [2, {len(BASES)}]")
        ped = self.pedigree
        on_x = is_x_chrom(self.chrom)
        for c in self.crossovers:
            if c.individual not in ped or ped[c.individual].is_founder:
                raise InvalidCrossoverSpec(f"{c.individual!r} is not a non-founder in the pedigree")
            if c.origin not in ("p", "m"):
                raise InvalidCrossoverSpec(f"origin must be 'p' or 'm', got {c.origin!r}")
            if not 1 <= c.after <= self.n_markers - 1:
                raise InvalidCrossoverSpec(f"crossover after marker {c.after} outside 1..{self.n_markers - 1}")
            if on_x and c.origin == "p":
                raise InvalidCrossoverSpec("paternal X is transmitted without recombination")


@dataclass
class GenotypeError:
    marker: int
    individual: str
    clean: tuple[str, str]
    observed: tuple[str, str]


@dataclass
class TruthSet:
    config: SimConfig
    pedigree: Pedigree
    labels: tuple[str, ...]
    alleles: tuple[str, ...]
    founder_haplotypes: np.ndarray
    paternal: dict[str, np.ndarray]
    maternal: dict[str, np.ndarray]
    clean: GenotypeMatrix
    observed: GenotypeMatrix
    errors: list[GenotypeError]
    missing: list[tuple[int, str]]

    @property
    def chrom(self) -> str:
        return self.config.chrom

    @property
    def n_markers(self) -> int:
        return self.founder_haplotypes.shape[1]

    def label_index(self, label: str) -> int:
        return self.labels.index(label)

    def haplotype(self, label: str) -> np.ndarray:
        return self.founder_haplotypes[self.label_index(label)]

    def breakpoints(self, ind_id: str) -> dict[str, list[int]]:
        """Markers ``r`` after which the paternal / maternal label switches."""
        out = {}
        for origin, arr in (("p", self.paternal[ind_id]), ("m", self.maternal[ind_id])):
            out[origin] = [int(r) + 1 for r in np.flatnonzero(arr[1:] != arr[:-1])]
        return out

    def ibd_segments(self) -> list[IBDSegment]:
        segs = []
        n = self.n_markers
        for ind in self.pedigree:
            pat, mat = self.paternal[ind.id], self.maternal[ind.id]
            cuts = sorted({0, n} | {int(r) + 1 for r in np.flatnonzero((pat[1:] != pat[:-1]) | (mat[1:] != mat[:-1]))})
            for a, b in zip(cuts, cuts[1:]):
                p = None if pat[a] < 0 else self.labels[pat[a]]
                segs.append(IBDSegment(ind.id, self.chrom, a + 1, b, p, self.labels[mat[a]]))
        return segs

    def ibd_intervals(self) -> list[IBDStructure]:
        return ibd_intervals(self.ibd_segments())

    def ibd_at(self, k: int) -> IBDStructure:
        """True IBD on the recombination-free interval containing marker ``k`` (1-based)."""
        return ibd_at(self.ibd_segments(), k)

    def true_genotypes(self, ind_id: str) -> np.ndarray:
        """Clean ``(n, 2)`` sorted allele codes for any individual, sequenced or not."""
        cols = np.arange(self.n_markers)
        m = self.founder_haplotypes[self.maternal[ind_id], cols]
        pl = self.paternal[ind_id]
        p = np.where(pl >= 0, self.founder_haplotypes[np.maximum(pl, 0), cols], m)
        return np.stack([np.minimum(p, m), np.maximum(p, m)], axis=1)


def _meiosis(rng, haps: tuple[np.ndarray, np.ndarray], switches: Sequence[int], first: int | None) -> np.ndarray:
    n = haps[0].size
    side = np.zeros(n, dtype=np.int8)
    for r in sorted(switches):
        side[r:] ^= 1
    start = int(rng.integers(2)) if first is None else first
    side ^= start
    return np.where(side == 0, haps[0], haps[1])


def simulate(config: SimConfig) -> TruthSet:
    config.validate()
    rng = np.random.default_rng(config.seed)
    ped = config.pedigree
    n = config.n_markers
    on_x = is_x_chrom(config.chrom)

    labels: list[str] = []
    paternal: dict[str, np.ndarray] = {}
    maternal: dict[str, np.ndarray] = {}
    wanted: dict[tuple[str, str], list[int]] = {}
    for c in config.crossovers:
        wanted.setdefault((c.individual, c.origin), []).append(c.after)

    for iid in ped.topological_order():
        ind = ped[iid]
        if ind.is_founder:
            if not (on_x and ind.sex is Sex.XY):
                labels.append(founder_label(iid, "p"))
                paternal[iid] = np.full(n, len(labels) - 1, dtype=np.int32)
            else:
                paternal[iid] = np.full(n, -1, dtype=np.int32)
            labels.append(founder_label(iid, "m"))
            maternal[iid] = np.full(n, len(labels) - 1, dtype=np.int32)
            continue
        fa, mo = ped[ind.father], ped[ind.mother]
        for origin, parent, store in (("p", fa, paternal), ("m", mo, maternal)):
            if on_x and origin == "p":
                # fathers pass their single X unchanged; sons get none
                store[iid] = maternal[fa.id].copy() if ind.sex is not Sex.XY else np.full(n, -1, dtype=np.int32)
                continue
            switches = list(wanted.get((iid, origin), []))
            if config.crossover_rate > 0:
                k = rng.poisson(config.crossover_rate)
                switches += [int(x) for x in rng.integers(1, n, size=k)] if n > 1 else []
            first = config.first_haplotype.get((iid, origin))
            store[iid] = _meiosis(rng, (paternal[parent.id], maternal[parent.id]), switches, first)

    # founder haplotypes
    nl = len(labels)
    haps = np.empty((nl, n), dtype=np.int32)
    marker_alleles: list[np.ndarray] = []
    lo, hi = config.maf_range
    for k in range(n):
        if rng.random() < config.multiallelic_fraction:
            na = int(rng.integers(3, config.max_alleles + 1)) if config.max_alleles >= 3 else 2
            alle = rng.choice(len(BASES), size=na, replace=False)
            freqs = rng.dirichlet(np.ones(na))
        else:
            alle = rng.choice(len(BASES), size=2, replace=False)
            p = rng.uniform(lo, hi)
            freqs = np.array([1 - p, p])
        marker_alleles.append(alle)
        haps[:, k] = alle[rng.choice(alle.size, size=nl, p=freqs)]

    # genotypes for everyone, then the sequenced columns
    seq = [i.id for i in ped if i.sequenced]
    cols = np.arange(n)
    clean = np.empty((n, len(seq), 2), dtype=np.int32)
    for j, iid in enumerate(seq):
        m = haps[maternal[iid], cols]
        pl = paternal[iid]
        p = np.where(pl >= 0, haps[np.maximum(pl, 0), cols], m)
        clean[:, j, 0] = np.minimum(p, m)
        clean[:, j, 1] = np.maximum(p, m)

    observed = clean.copy()
    miss = rng.random((n, len(seq))) < config.missing_rate
    err = (rng.random((n, len(seq))) < config.error_rate) & ~miss
    errors: list[GenotypeError] = []
    for k, j in np.argwhere(err):
        slot = int(rng.integers(2))
        cur = observed[k, j, slot]
        choices = [a for a in marker_alleles[k] if a != cur]
        new = int(rng.choice(choices))
        before = tuple(BASES[a] for a in observed[k, j])
        observed[k, j, slot] = new
        observed[k, j] = np.sort(observed[k, j])
        errors.append(GenotypeError(int(k) + 1, seq[j], before, tuple(BASES[a] for a in observed[k, j])))
    observed[miss] = MISSING
    missing = [(int(k) + 1, seq[j]) for k, j in np.argwhere(miss)]

    markers = [Marker(f"m{k + 1}", config.chrom, (k + 1) * config.spacing) for k in range(n)]
    return TruthSet(
        config=config,
        pedigree=ped,
        labels=tuple(labels),
        alleles=BASES,
        founder_haplotypes=haps,
        paternal=paternal,
        maternal=maternal,
        clean=GenotypeMatrix(markers, seq, BASES, clean),
        observed=GenotypeMatrix(markers, seq, BASES, observed),
        errors=errors,
        missing=missing,
    )


def swap_label(ped: Pedigree, ibd: IBDStructure, individual: str, origin: str = "p") -> IBDStructure:
    """Misspecified IBD: ``individual`` gets the other haplotype of the parent on ``origin``.

    Descendants carrying the replaced label inherit the mistake.
    """
    ind = ped[individual]
    if ind.is_founder:
        raise ConfigError(f"{individual!r} is a founder; no transmitted label to swap")
    parent = ind.father if origin == "p" else ind.mother
    pair = ibd[individual]
    old = pair[0] if origin == "p" else pair[1]
    if old is None:
        raise ConfigError(f"{individual!r} has no {origin} label")
    other = [lab for lab in ibd[parent] if lab is not None and lab != old]
    if not other:
        raise ConfigError(f"parent {parent!r} has no second haplotype to swap in")
    new = other[0]
    changes = {individual: (new, pair[1]) if origin == "p" else (pair[0], new)}
    for d in ped.descendants(individual):
        p, m = ibd[d]
        changes[d] = (new if p == old else p, new if m == old else m)
    return ibd.with_labels(changes)


def export_truth(ts: TruthSet, out_dir) -> dict[str, Path]:
    """Write ``pedigree.tsv``, ``ibd.tsv`` and ``genotypes.tsv`` (observed calls)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "pedigree": out / "pedigree.tsv",
        "ibd": out / "ibd.tsv",
        "genotypes": out / "genotypes.tsv",
    }
    files["pedigree"].write_text(format_pedigree(ts.pedigree), encoding="utf-8")
    files["ibd"].write_text(format_ibd(ts.ibd_segments()), encoding="utf-8")
    files["genotypes"].write_text(format_genotypes(ts.observed), encoding="utf-8")
    return files


def _split(v: str) -> list[str]:
    return [x.strip() for x in v.split(",") if x.strip()]


def parse_config(text: str) -> SimConfig:
    """``key = value`` lines; ``#`` starts a comment.

    Keys: pedigree (trio | nuclear | three_generation), children, sibships,
    grandchildren, unsequenced, n_markers, chrom, spacing, error_rate,
    missing_rate, crossover_rate, crossovers (``ID:p|m:after`` list),
    multiallelic_fraction, maf_min, maf_max, seed.
    """
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = (x.strip() for x in line.split("=", 1))
        kv[k] = v
    known = {
        "pedigree", "children", "sibships", "grandchildren", "unsequenced", "n_markers", "chrom",
        "spacing", "error_rate", "missing_rate", "crossover_rate", "crossovers",
        "multiallelic_fraction", "maf_min", "maf_max", "seed",
    }
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    try:
        unseq = _split(kv.get("unsequenced", ""))
        kind = kv.get("pedigree", "trio")
        if kind == "trio":
            ped = trio()
        elif kind == "nuclear":
            ped = nuclear(int(kv.get("children", 4)), unseq)
        elif kind == "three_generation":
            s = [int(x) for x in _split(kv.get("sibships", "2,2"))]
            ped = three_generation((s[0], s[1]), int(kv.get("grandchildren", 2)), unseq)
        else:
            raise ConfigError(f"unknown pedigree kind {kind!r}")
        xo = []
        for item in _split(kv.get("crossovers", "")):
            iid, origin, after = item.split(":")
            xo.append(Crossover(iid, origin, int(after)))
        cfg = SimConfig(
            pedigree=ped,
            n_markers=int(kv.get("n_markers", 1000)),
            chrom=kv.get("chrom", "1"),
            spacing=int(kv.get("spacing", 1000)),
            error_rate=float(kv.get("error_rate", 0.0)),
            missing_rate=float(kv.get("missing_rate", 0.0)),
            crossover_rate=float(kv.get("crossover_rate", 0.0)),
            crossovers=tuple(xo),
            multiallelic_fraction=float(kv.get("multiallelic_fraction", 0.0)),
            maf_range=(float(kv.get("maf_min", 0.05)), float(kv.get("maf_max", 0.5))),
            seed=int(kv.get("seed", 0)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg
