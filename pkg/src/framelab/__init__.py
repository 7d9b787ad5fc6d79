"""Stability of phase retrieval for finite frames over R and C."""

__version__ = "0.1.0"

from .core import (Field, FrameBounds, FrameSpec, MagnitudeMeasurement, analyze, frame_bounds, harmonic_frame,
                   load_frame, magnitudes, mercedes_frame, onb_frame, random_frame, validate_frame)
from .errors import FramelabError
from .infdim import (BlockSystem, ChainReport, build_pair, finite_support_rate, flip_witness, make_block_system,
                     verify_blocks, verify_chains)
from .local import choose_tail_radius, local_bound_check, local_radius, local_ratio_profile, tail_norm
from .ortho_reduce import OrthoPair, coordinate_gap_monotone, reduce_pair, reduction_parameter
from .phase_metric import magnitude_gap, min_phase_dist, optimal_phase, psi, psi_on_compact
from .stability import (StabilityBudget, StabilityReport, complement_property, estimate_stability,
                        oracle_stability_dim2, pr_failure_witness)
from .witness import (WitnessTrace, cn_basis_witness, perp_constant, real_coeff_witness, trace_witness,
                      verify_quadratic_bound)

__all__ = [
    "analyze",
    "BlockSystem",
    "build_pair",
    "ChainReport",
    "choose_tail_radius",
    "cn_basis_witness",
    "complement_property",
    "coordinate_gap_monotone",
    "estimate_stability",
    "Field",
    "finite_support_rate",
    "flip_witness",
    "frame_bounds",
    "FrameBounds",
    "FramelabError",
    "FrameSpec",
    "harmonic_frame",
    "load_frame",
    "local_bound_check",
    "local_radius",
    "local_ratio_profile",
    "magnitude_gap",
    "MagnitudeMeasurement",
    "magnitudes",
    "make_block_system",
    "mercedes_frame",
    "min_phase_dist",
    "onb_frame",
    "optimal_phase",
    "oracle_stability_dim2",
    "OrthoPair",
    "perp_constant",
    "pr_failure_witness",
    "psi",
    "psi_on_compact",
    "random_frame",
    "real_coeff_witness",
    "reduce_pair",
    "reduction_parameter",
    "StabilityBudget",
    "StabilityReport",
    "tail_norm",
    "trace_witness",
    "validate_frame",
    "verify_blocks",
    "verify_chains",
    "verify_quadratic_bound",
    "WitnessTrace",
    "__version__",
]
