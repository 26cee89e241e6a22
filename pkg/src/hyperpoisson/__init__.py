"""Certified solvers for cut-based hypergraph Poisson problems."""
from .certificate import DualCertificate, GapReport, bregman_gap, certify_pair, repair_dual_certificate
from .core import (
    Dyadic,
    Hypergraph,
    edge_range,
    energy,
    format_dyadic,
    parse_dyadic,
    primal_objective,
    project_to_weighted_mean_zero,
    validate_instance,
)
from .dual import DualVector, check_dual_feasible, dual_objective, mass_of, quadratic_mass_objective
from .dualsolve import FirstStageOutput, solve_first_stage
from .errors import (
    HyperPoissonError,
    InvalidInstance,
    InvariantViolation,
    SolverError,
    VerificationError,
)
from .estimators import HypergraphResolvent, PoissonSolver, RegularizedPoissonSolver
from .lifted import LiftedGraph, build_lifted_graph, feasible_start, lifted_demand, positive_circulation
from .mcf import MCFInstance, extract_residual_potentials, make_acyclic, solve_mcf_exact
from .recovery import recover_primal, round_budgets, round_demand, solve_support
from .regularized import ground_augment, pairwise_response, resolvent, solve_regularized
from .serialization import read_instance, verify_certificate, write_instance
from .solver import PoissonResult, solve_poisson

__version__ = "0.1.0"
