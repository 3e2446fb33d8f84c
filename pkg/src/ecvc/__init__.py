"""Linear-time batch solver for edge-constrained vertex coloring on multigraphs,
with haplotype phasing, IBD checking and crossover localization for pedigrees."""

from .errors import ECVCError
from .graph import Multigraph, build, connected_components, first_betti, forest_plan, parse_graph
from .localize import LocalizationResult, SuspectedEvent, localize_single, orchestrate_multi
from .oracle import brute_force, random_instance
from .pedigree import GenotypeMatrix, IBDStructure, Individual, Pedigree, Sex, build_marker_graph
from .phase import MarkerStatus, PhasedInterval, Verdict, check_ibd, impute, phase_interval
from .sim import SimConfig, TruthSet, simulate
from .solver import ConstraintBatch, SolutionSet, Status, count_d, solve, solve_many

__all__ = [
    "ECVCError",
    "Multigraph",
    "build",
    "connected_components",
    "first_betti",
    "forest_plan",
    "parse_graph",
    "LocalizationResult",
    "SuspectedEvent",
    "localize_single",
    "orchestrate_multi",
    "brute_force",
    "random_instance",
    "GenotypeMatrix",
    "IBDStructure",
    "Individual",
    "Pedigree",
    "Sex",
    "build_marker_graph",
    "MarkerStatus",
    "PhasedInterval",
    "Verdict",
    "check_ibd",
    "impute",
    "phase_interval",
    "SimConfig",
    "TruthSet",
    "simulate",
    "ConstraintBatch",
    "SolutionSet",
    "Status",
    "count_d",
    "solve",
    "solve_many",
]
