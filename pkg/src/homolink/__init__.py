"""Homology-class invariants of chains around skeleton cycles, and class-aware planning."""

from .combinatorics import OrderedPartition, form_partitions, inversion_sign, partitions
from .invariant import FormField, Signature, pair_integrand, phi_matrix, phi_S, phi_vector, u_k_rho
from .lowdim import ClosedFormKind, biot_savart_field, closed_form_coefficients, gauss_flux_form, residue_form
from .mesh import (
    Chain,
    MeshError,
    SkeletonSet,
    boundary,
    is_cycle,
    point_chain,
    read_mesh,
    sample_circle,
    sample_polyline_loop,
    sample_sphere,
    sample_torus,
    validate_skeleton_set,
    write_mesh,
)
from .planner import (
    Ball,
    Box,
    ClassResult,
    EnumerateK,
    NoPathError,
    PlanningError,
    SearchBudgetExceeded,
    TargetClass,
    Tube,
    augmented_search,
    build_grid_graph,
    edge_signatures,
    region_union,
)
from .quadrature import QuadConfig, QuadStats, SingularProximityError
from .quotient import (
    QLattice,
    connected_quotient_search,
    lattice_from_loops,
    lattice_from_subgraph,
    q_membership,
    quotient_augmented_search,
)
from .scenario import ResultBundle, Scenario, ScenarioError, load_scenario, parse_scenario, serialize_scenario

__version__ = "0.1.0"
