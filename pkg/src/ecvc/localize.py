"""Crossover localization by solving the same markers on two marker graphs.

``G_L`` is built from the IBD holding left of a suspected crossover, ``G_R``
from the IBD holding right of it. Left of the crossover ``G_R`` is wrong and
tends to fail; right of it ``G_L`` does. The last failure on ``G_R`` and the
first failure on ``G_L`` bracket the event.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import IBDError, IdenticalIBD, OverlappingEventsUnresolvable
from .graph import Multigraph
from .pedigree import GenotypeMatrix, IBDStructure, Pedigree
from .phase import MarkerStatus, PhasedInterval, phase_interval


class LocalizationStatus(enum.Enum):
    LOCALIZED = "Localized"
    NOT_LOCALIZABLE = "NotLocalizable"
    CONFLICTING = "Conflicting"


@dataclass(frozen=True)
class DualGraphProblem:
    """The two marker graphs of one suspected event and how they differ."""

    left: Multigraph
    right: Multigraph
    shared: tuple[str, ...]
    differing: tuple[str, ...]

    @classmethod
    def build(cls, ibd_left: IBDStructure, ibd_right: IBDStructure, left: Multigraph, right: Multigraph):
        if ibd_left.same_labels(ibd_right):
            raise IdenticalIBD("left and right IBD structures are identical")
        shared = tuple(v for v in left.vertex_labels if v in set(right.vertex_labels))
        differing = []
        for e, lab in enumerate(left.edge_labels):
            try:
                f = right.edge_index(lab)
            except Exception:
                continue
            ends_l = sorted(left.vertex_labels[v] for v in left.endpoints[e])
            ends_r = sorted(right.vertex_labels[v] for v in right.endpoints[f])
            if ends_l != ends_r:
                if not set(ends_l) & set(ends_r):
                    raise IBDError(f"edge {lab!r} changes both endpoints; expected one recombination")
                differing.append(lab)
        return cls(left, right, shared, tuple(differing))


@dataclass
class LocalizationResult:
    """Bracket ``[a, b]`` (1-based markers) around one crossover.

    ``a`` is ``start - 1`` when ``G_R`` never fails and ``b`` is ``end + 1``
    when ``G_L`` never fails. ``alleles`` covers ``labels`` over the range:
    ``G_L`` values for k <= a, ``G_R`` values for k >= b, and in between only
    shared labels on which both graphs agree outside the ambiguity set.
    """

    status: LocalizationStatus
    a: int | None
    b: int | None
    marker_range: tuple[int, int]
    ambiguity: tuple[int, ...]
    fail_left: np.ndarray
    fail_right: np.ndarray
    problem: DualGraphProblem
    labels: tuple[str, ...]
    alleles: np.ndarray
    policy: str = "strict"
    event_id: str | None = None
    strategy: str = "single"
    left: PhasedInterval | None = field(default=None, repr=False)
    right: PhasedInterval | None = field(default=None, repr=False)

    @property
    def localized(self) -> bool:
        return self.status is LocalizationStatus.LOCALIZED

    def brackets(self, r: int) -> bool:
        """True if a crossover between markers r and r+1 lies in ``[a, b]``."""
        return self.localized and self.a <= r < self.b


def _first_last(mask: np.ndarray) -> tuple[int | None, int | None]:
    idx = np.flatnonzero(mask)
    return (int(idx[0]), int(idx[-1])) if idx.size else (None, None)


def strict_bounds(fail_left: np.ndarray, fail_right: np.ndarray) -> tuple[int | None, int | None]:
    """0-based ``(a, b)``: last failure on G_R, first failure on G_L."""
    b, _ = _first_last(fail_left)
    _, a = _first_last(fail_right)
    return a, b


def windowed_bounds(
    fail_left: np.ndarray, fail_right: np.ndarray, window: int = 20, tau: float = 0.3
) -> tuple[int | None, int | None]:
    """Change points of the one-sided failure sequence.

    Only markers failing on exactly one graph carry information. Among them,
    ``b`` is the first G_L-only failure whose next ``window`` informative
    markers are at least ``tau`` G_L-only; ``a`` is the last G_R-only failure
    whose previous ``window`` informative markers are at least ``tau`` G_R-only.
    On noise-free data this reduces to the strict rule.
    """
    if window < 1 or not 0 < tau <= 1:
        raise ValueError("need window >= 1 and 0 < tau <= 1")
    info = np.flatnonzero(fail_left != fail_right)
    if info.size == 0:
        return None, None
    is_l = fail_left[info].astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(is_l)])
    m = info.size
    j = np.arange(m)
    hi = np.minimum(j + window, m)
    fwd = (csum[hi] - csum[j]) / (hi - j)
    lo = np.maximum(j + 1 - window, 0)
    bwd = 1.0 - (csum[j + 1] - csum[lo]) / (j + 1 - lo)
    b_hits = np.flatnonzero((is_l == 1) & (fwd >= tau))
    a_hits = np.flatnonzero((is_l == 0) & (bwd >= tau))
    b = int(info[b_hits[0]]) if b_hits.size else None
    a = int(info[a_hits[-1]]) if a_hits.size else None
    return a, b


def _shared_alleles(ph: PhasedInterval, shared: Sequence[str]) -> np.ndarray:
    return np.stack([ph.allele_codes(v) for v in shared]) if shared else np.zeros((0, len(ph)), np.int32)


def ambiguity_set(
    fail_left: np.ndarray,
    fail_right: np.ndarray,
    shared_left: np.ndarray,
    shared_right: np.ndarray,
    a: int,
    b: int,
) -> np.ndarray:
    """0-based indices strictly between ``a`` and ``b`` where the two graphs disagree.

    They disagree when exactly one has no solution, or when the alleles they
    determine on the shared labels differ.
    """
    lo, hi = max(a + 1, 0), min(b, fail_left.size)
    if hi <= lo:
        return np.zeros(0, dtype=np.intp)
    sl = slice(lo, hi)
    differ = fail_left[sl] != fail_right[sl]
    differ |= (shared_left[:, sl] != shared_right[:, sl]).any(axis=0)
    return np.flatnonzero(differ) + lo


def localize_single(
    pedigree: Pedigree,
    ibd_left: IBDStructure,
    ibd_right: IBDStructure,
    gm: GenotypeMatrix,
    marker_range: tuple[int, int] | None = None,
    policy: str = "strict",
    *,
    window: int = 20,
    tau: float = 0.3,
    exclude: Iterable[str] = (),
    threads: int = 1,
    event_id: str | None = None,
) -> LocalizationResult:
    """Bracket one crossover between the markers where IBD_L and IBD_R hold."""
    if policy not in ("strict", "windowed"):
        raise ValueError(f"unknown policy {policy!r}")
    if ibd_left.same_labels(ibd_right):
        raise IdenticalIBD("left and right IBD structures are identical")
    start, end = marker_range if marker_range is not None else (1, gm.n_markers)
    exclude = tuple(exclude)
    kw = dict(exclude=exclude, threads=threads, diagnostics=False)
    ph_l = phase_interval(pedigree, ibd_left, gm, (start, end), **kw)
    ph_r = phase_interval(pedigree, ibd_right, gm, (start, end), **kw)
    prob = DualGraphProblem.build(ibd_left, ibd_right, ph_l.graph, ph_r.graph)
    fail_l = ph_l.status == MarkerStatus.ERROR
    fail_r = ph_r.status == MarkerStatus.ERROR

    if policy == "strict":
        a0, b0 = strict_bounds(fail_l, fail_r)
    else:
        a0, b0 = windowed_bounds(fail_l, fail_r, window, tau)

    n = end - start + 1
    labels = tuple(dict.fromkeys(ph_l.labels + ph_r.labels))
    alleles = np.full((len(labels), n), -1, dtype=np.int32)
    sh_l = _shared_alleles(ph_l, prob.shared)
    sh_r = _shared_alleles(ph_r, prob.shared)

    if a0 is None and b0 is None:
        return LocalizationResult(
            LocalizationStatus.NOT_LOCALIZABLE, None, None, (start, end), (), fail_l, fail_r,
            prob, labels, alleles, policy, event_id, left=ph_l, right=ph_r,
        )
    a0 = -1 if a0 is None else a0
    b0 = n if b0 is None else b0
    status = LocalizationStatus.LOCALIZED if a0 < b0 else LocalizationStatus.CONFLICTING
    amb = ambiguity_set(fail_l, fail_r, sh_l, sh_r, a0, b0) if a0 < b0 else np.zeros(0, np.intp)

    if status is LocalizationStatus.LOCALIZED:
        row = {lab: i for i, lab in enumerate(labels)}
        for lab in ph_l.labels:
            alleles[row[lab], : a0 + 1] = ph_l.allele_codes(lab)[: a0 + 1]
        for lab in ph_r.labels:
            alleles[row[lab], b0:] = ph_r.allele_codes(lab)[b0:]
        mid = np.zeros(n, dtype=bool)
        mid[a0 + 1 : b0] = True
        mid[amb] = False
        for i, lab in enumerate(prob.shared):
            agree = mid & (sh_l[i] == sh_r[i])
            alleles[row[lab], agree] = sh_l[i, agree]

    return LocalizationResult(
        status,
        a0 + start,
        b0 + start,
        (start, end),
        tuple(int(i) + start for i in amb),
        fail_l,
        fail_r,
        prob,
        labels,
        alleles,
        policy,
        event_id,
        left=ph_l,
        right=ph_r,
    )


# ---------------------------------------------------------------------------
# several events


@dataclass(frozen=True)
class SuspectedEvent:
    """A crossover suspected somewhere in ``span`` (1-based, inclusive).

    ``ibd_left`` holds just before the span and ``ibd_right`` just after it.
    """

    event_id: str
    ibd_left: IBDStructure
    ibd_right: IBDStructure
    span: tuple[int, int]

    @property
    def carriers(self) -> frozenset[str]:
        """Recombinant plus descendants carrying the recombined haplotype."""
        return frozenset(self.ibd_left.changed(self.ibd_right))


STRATEGIES = ("partition", "removal", "hybrid")


def _clusters(events: list[SuspectedEvent]) -> list[list[SuspectedEvent]]:
    """Group events whose spans overlap, in marker order."""
    out: list[list[SuspectedEvent]] = []
    hi = None
    for ev in events:
        if out and ev.span[0] <= hi:
            out[-1].append(ev)
            hi = max(hi, ev.span[1])
        else:
            out.append([ev])
            hi = ev.span[1]
    return out


def _cuts(groups: list, span_of, start: int, end: int) -> list[tuple[int, int]]:
    """Consecutive subintervals of ``[start, end]``, each holding one group's span."""
    bounds = []
    lo = start
    for i, grp in enumerate(groups):
        if i + 1 < len(groups):
            cut = (span_of(grp)[1] + span_of(groups[i + 1])[0]) // 2
        else:
            cut = end
        bounds.append((lo, cut))
        lo = cut + 1
    return bounds


def _check_removable(events: Sequence[SuspectedEvent]) -> None:
    for i, e in enumerate(events):
        for f in events[i + 1 :]:
            if e.carriers & f.carriers:
                raise OverlappingEventsUnresolvable(
                    f"events {e.event_id!r} and {f.event_id!r} overlap and share carriers "
                    f"{sorted(e.carriers & f.carriers)}"
                )


def _removal(
    pedigree, gm, events: Sequence[SuspectedEvent], rng: tuple[int, int], strategy: str, **kw
) -> list[LocalizationResult]:
    _check_removable(events)
    out = []
    for ev in events:
        others = set().union(*(f.carriers for f in events if f is not ev))
        out.append(
            localize_single(
                pedigree, ev.ibd_left, ev.ibd_right, gm, rng, exclude=sorted(others), event_id=ev.event_id, **kw
            )
        )
        out[-1].strategy = strategy
    return out


def orchestrate_multi(
    pedigree: Pedigree,
    gm: GenotypeMatrix,
    events: Sequence[SuspectedEvent],
    strategy: str = "partition",
    marker_range: tuple[int, int] | None = None,
    *,
    final_pass: bool = True,
    **kw,
) -> list[LocalizationResult]:
    """Localize several suspected crossovers, returned in marker order.

    ``partition`` splits the range so each piece holds one span; ``removal``
    localizes each event with every other event's carriers left out;
    ``hybrid`` partitions first and uses removal inside pieces whose spans
    overlap. The final pass re-runs each event with all subjects on the
    stretch between its neighbours' brackets.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if not events:
        return []
    start, end = marker_range if marker_range is not None else (1, gm.n_markers)
    evs = sorted(events, key=lambda e: e.span)
    for ev in evs:
        if not start <= ev.span[0] <= ev.span[1] <= end:
            raise IBDError(f"event {ev.event_id!r} span {ev.span} outside {start}:{end}")

    if strategy == "removal":
        first = _removal(pedigree, gm, evs, (start, end), strategy, **kw)
    else:
        clusters = _clusters(evs)
        if strategy == "partition" and any(len(c) > 1 for c in clusters):
            bad = next(c for c in clusters if len(c) > 1)
            raise OverlappingEventsUnresolvable(
                f"spans of {[e.event_id for e in bad]} overlap; partitioning cannot separate them"
            )
        span_of = lambda c: (c[0].span[0], max(e.span[1] for e in c))
        first = []
        for grp, rng in zip(clusters, _cuts(clusters, span_of, start, end)):
            if len(grp) == 1:
                res = localize_single(pedigree, grp[0].ibd_left, grp[0].ibd_right, gm, rng, event_id=grp[0].event_id, **kw)
                res.strategy = strategy
                first.append(res)
            else:
                first.extend(_removal(pedigree, gm, grp, rng, strategy, **kw))

    if not final_pass:
        return first
    return _final_pass(pedigree, gm, evs, first, (start, end), strategy, **kw)


def _final_pass(pedigree, gm, evs, first, rng, strategy, **kw) -> list[LocalizationResult]:
    start, end = rng
    out = []
    for i, (ev, res) in enumerate(zip(evs, first)):
        lo = start
        if i > 0:
            prev = first[i - 1]
            lo = prev.b if prev.localized and prev.b <= end else evs[i - 1].span[1] + 1
        hi = end
        if i + 1 < len(evs):
            nxt = first[i + 1]
            hi = nxt.a if nxt.localized and nxt.a >= start else evs[i + 1].span[0] - 1
        if not (lo <= ev.span[0] and ev.span[1] <= hi):
            out.append(res)  # neighbours too close to restore everyone
            continue
        again = localize_single(pedigree, ev.ibd_left, ev.ibd_right, gm, (lo, hi), event_id=ev.event_id, **kw)
        again.strategy = strategy
        out.append(again)
    return out


# ---------------------------------------------------------------------------
# reports


def _marker_name(gm: GenotypeMatrix | None, k: int | None, rng: tuple[int, int]) -> str:
    if k is None or not rng[0] <= k <= rng[1]:
        return "."
    return gm.markers[k - 1].id if gm is not None else str(k)


def format_localization_report(results: Sequence[LocalizationResult], gm: GenotypeMatrix | None = None) -> str:
    rows = ["event_id\ta_marker\tb_marker\tstatus\t|E|\tstrategy"]
    for i, r in enumerate(results):
        eid = r.event_id or f"event{i + 1}"
        rows.append(
            f"{eid}\t{_marker_name(gm, r.a, r.marker_range)}\t{_marker_name(gm, r.b, r.marker_range)}"
            f"\t{r.status.value}\t{len(r.ambiguity)}\t{r.strategy}"
        )
    return "\n".join(rows) + "\n"


def format_trace(result: LocalizationResult, gm: GenotypeMatrix | None = None) -> str:
    rows = ["marker\tfail_left\tfail_right\tin_E"]
    amb = set(result.ambiguity)
    start = result.marker_range[0]
    for i, (fl, fr) in enumerate(zip(result.fail_left, result.fail_right)):
        k = start + i
        name = gm.markers[k - 1].id if gm is not None else str(k)
        rows.append(f"{name}\t{int(fl)}\t{int(fr)}\t{int(k in amb)}")
    return "\n".join(rows) + "\n"
