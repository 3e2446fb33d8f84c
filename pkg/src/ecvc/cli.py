"""Command line entry point: ``ecvc solve|phase|check-ibd|localize|simulate``.

Exit codes: 0 success or Consistent, 2 input error, 3 Suspect, 4 Inconsistent.
Markers without solutions are output, not failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

from .errors import ECVCError, ParseError
from .graph import Multigraph, forest_plan, parse_graph
from .localize import format_localization_report, format_trace, localize_single
from .pedigree import (
    GenotypeMatrix,
    IBDStructure,
    ibd_intervals,
    read_genotypes,
    read_ibd,
    read_pedigree,
    read_vcf,
)
from .phase import (
    MarkerStatus,
    PhasedInterval,
    Verdict,
    check_ibd,
    format_ibd_report,
    format_marker_report,
    phase_interval,
)
from .sim import export_truth, parse_config, simulate
from .solver import Status, diagnose, solve_many

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SUSPECT = 3
EXIT_INCONSISTENT = 4

THREADS_ENV = "ECVC_THREADS"


class InputError(ECVCError):
    pass


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parse_range(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"bad --range {text!r}; expected A:B") from None
    if a < 1 or b < a:
        raise InputError(f"empty or invalid marker range {text!r}")
    return a, b


def _check_range(rng, gm: GenotypeMatrix) -> tuple[int, int]:
    if rng is None:
        return 1, gm.n_markers
    if rng[1] > gm.n_markers:
        raise InputError(f"range {rng[0]}:{rng[1]} exceeds {gm.n_markers} markers")
    return rng


def _read_geno(path: str) -> GenotypeMatrix:
    p = str(path)
    if p.endswith((".vcf", ".vcf.gz")):
        return read_vcf(p)
    return read_genotypes(p)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# solve


def parse_constraints(lines, g: Multigraph, source: str = "<constraints>") -> tuple[list[str], list[dict]]:
    """``C <k> <edge> <c1> <c2>`` lines into per-problem constraint lists, in order of first appearance."""
    problems: dict[str, dict[int, tuple[str, str]]] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "C" or len(parts) != 5:
            raise ParseError(source, lineno, 1, f"malformed constraint {line!r}")
        _, k, edge, c1, c2 = parts
        try:
            e = g.edge_index(edge)
        except KeyError:
            raise ParseError(source, lineno, raw.find(edge) + 1, f"unknown edge {edge!r}") from None
        lst = problems.setdefault(k, {})
        if e in lst:
            raise ParseError(source, lineno, 1, f"edge {edge!r} constrained twice in problem {k}")
        lst[e] = (c1, c2)
    for k, lst in problems.items():
        missing = [g.edge_labels[e] for e in range(g.n_edges) if e not in lst]
        if missing:
            raise ParseError(source, 0, 0, f"problem {k} lacks constraints for {missing}")
    return list(problems), list(problems.values())


def format_solutions(keys, lists, g: Multigraph, max_solutions: int = 16) -> str:
    plan = forest_plan(g)
    sols = solve_many(plan, lists)
    out = []
    for k, lst, ss in zip(keys, lists, sols):
        out.append(f"S {k} {ss.count}")
        if not ss.has_solution:
            for j, o in enumerate(ss.outcomes):
                if o.status is Status.NONE:
                    out.extend(f"D {k} {t}" for t in diagnose(plan.components[j], lst))
            continue
        for idx in range(min(ss.count, max_solutions)):
            phi = ss.solution(idx)
            out.extend(f"V {k} {idx} {g.vertex_labels[v]} {phi[v]}" for v in range(g.n_vertices))
    return "\n".join(out) + "\n"


def cmd_solve(args) -> int:
    with open(args.graph) as fh:
        g = parse_graph(fh, args.graph)
    with open(args.constraints) as fh:
        keys, lists = parse_constraints(fh, g, args.constraints)
    text = format_solutions(keys, lists, g, args.max_solutions)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# phase / check-ibd


def _load_family(args):
    ped = read_pedigree(args.pedigree)
    segs = read_ibd(args.ibd)
    gm = _read_geno(args.genotypes)
    return ped, segs, gm


def _intervals_in(segs, rng: tuple[int, int]) -> list[tuple[IBDStructure, tuple[int, int]]]:
    out = []
    for s in ibd_intervals(segs):
        lo = max(s.start, rng[0])
        hi = min(s.end, rng[1])
        if lo <= hi:
            out.append((s, (lo, hi)))
    if not out:
        raise InputError(f"no IBD interval overlaps markers {rng[0]}:{rng[1]}")
    return out


def _write_haplotypes(path: Path, pieces: list[PhasedInterval]) -> None:
    labels = list(dict.fromkeys(lab for ph in pieces for lab in ph.labels))
    ids = [mid for ph in pieces for mid in ph.marker_ids]
    haps = [ph.haplotypes(strict=True) for ph in pieces]
    rows = ["label\t" + "\t".join(ids)]
    for lab in labels:
        seq = []
        for ph, hp in zip(pieces, haps):
            seq.extend(hp.get(lab, ["."] * len(ph)))
        rows.append(lab + "\t" + "\t".join(seq))
    path.write_text("\n".join(rows) + "\n")


def cmd_phase(args) -> int:
    ped, segs, gm = _load_family(args)
    rng = _check_range(parse_range(args.range), gm)
    pieces = []
    for ibd, sub in _intervals_in(segs, rng):
        pieces.append(
            phase_interval(ped, ibd, gm, sub, h_min=args.h_min, exclude=args.drop_individual, threads=args.threads)
        )
    out = _out_dir(args)
    _write_haplotypes(out / "haplotypes.tsv", pieces)
    report = format_marker_report(pieces[0])
    for ph in pieces[1:]:
        report += format_marker_report(ph).split("\n", 1)[1]
    (out / "marker_report.tsv").write_text(report)
    counts = {s.label: sum(int((ph.status == s).sum()) for ph in pieces) for s in MarkerStatus}
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_check_ibd(args) -> int:
    ped, segs, gm = _load_family(args)
    rng = _check_range(parse_range(args.range), gm)
    ivs = _intervals_in(segs, rng)
    if len(ivs) > 1:
        raise InputError(f"markers {rng[0]}:{rng[1]} span {len(ivs)} IBD intervals; pass a recombination-free --range")
    ibd, sub = ivs[0]
    if not 0 <= args.suspect <= args.inconsistent <= 1:
        raise InputError("need 0 <= --suspect <= --inconsistent <= 1")
    rep = check_ibd(
        ped, ibd, gm, sub, suspect=args.suspect, inconsistent=args.inconsistent,
        exclude=args.drop_individual, threads=args.threads,
    )
    out = _out_dir(args)
    ids = [gm.markers[k - 1].id for k in rep.markers]
    (out / "ibd_report.tsv").write_text(format_ibd_report(rep, ids))
    print(f"{rep.verdict.value} heterozygous_failure_rate={rep.heterozygous_failure_rate:.4f} betti={list(rep.betti)}")
    return {Verdict.CONSISTENT: EXIT_OK, Verdict.SUSPECT: EXIT_SUSPECT, Verdict.INCONSISTENT: EXIT_INCONSISTENT}[
        rep.verdict
    ]


# ---------------------------------------------------------------------------
# localize


def _structure_near(path: str, k: int) -> IBDStructure:
    ivs = ibd_intervals(read_ibd(path))
    if len(ivs) == 1:
        return ivs[0]
    for s in ivs:
        if s.start <= k <= s.end:
            return s
    raise InputError(f"{path}: no IBD structure at marker {k}")


def cmd_localize(args) -> int:
    ped = read_pedigree(args.pedigree)
    gm = _read_geno(args.genotypes)
    rng = _check_range(parse_range(args.range), gm)
    left = _structure_near(args.ibd_left, rng[0])
    right = _structure_near(args.ibd_right, rng[1])
    res = localize_single(
        ped, left, right, gm, rng, args.policy, window=args.window, tau=args.tau,
        exclude=args.drop_individual, threads=args.threads, event_id=args.event_id,
    )
    out = _out_dir(args)
    report = format_localization_report([res], gm)
    (out / "localization.tsv").write_text(report)
    if args.trace:
        (out / "localization_trace.tsv").write_text(format_trace(res, gm))
    sys.stdout.write(report.split("\n", 1)[1])
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    if args.seed is not None:
        cfg.seed = args.seed
    ts = simulate(cfg)
    paths = export_truth(ts, _out_dir(args))
    for p in paths.values():
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or all cores)")
    common.add_argument("--out-dir", default=".", help="directory for output files")
    common.add_argument("--range", default=None, metavar="A:B", help="1-based inclusive marker range")

    p = argparse.ArgumentParser(prog="ecvc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve edge-constrained coloring problems")
    s.add_argument("graph")
    s.add_argument("constraints")
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--max-solutions", type=int, default=16)
    s.set_defaults(func=cmd_solve)

    def family(sp):
        sp.add_argument("pedigree")
        sp.add_argument("ibd")
        sp.add_argument("genotypes")
        sp.add_argument("--drop-individual", action="append", default=[], metavar="ID")

    s = sub.add_parser("phase", parents=[common], help="reconstruct haplotypes")
    family(s)
    s.add_argument("--h-min", type=int, default=4)
    s.set_defaults(func=cmd_phase)

    s = sub.add_parser("check-ibd", parents=[common], help="test IBD against genotypes")
    family(s)
    s.add_argument("--suspect", type=float, default=0.05)
    s.add_argument("--inconsistent", type=float, default=0.25)
    s.set_defaults(func=cmd_check_ibd)

    s = sub.add_parser("localize", parents=[common], help="bracket one crossover")
    s.add_argument("pedigree")
    s.add_argument("ibd_left")
    s.add_argument("ibd_right")
    s.add_argument("genotypes")
    s.add_argument("--policy", choices=("strict", "windowed"), default="strict")
    s.add_argument("--window", type=int, default=20)
    s.add_argument("--tau", type=float, default=0.3)
    s.add_argument("--event-id", default=None)
    s.add_argument("--trace", action="store_true")
    s.add_argument("--drop-individual", action="append", default=[], metavar="ID")
    s.set_defaults(func=cmd_localize)

    s = sub.add_parser("simulate", parents=[common], help="simulate a family and write its truth set")
    s.add_argument("config")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = _default_threads()
    elif args.threads < 1:
        print("ecvc: --threads must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ECVCError, OSError) as exc:
        print(f"ecvc: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
