"""Integral currents on embedded simplicial complexes."""

from .currents import MassReport, SimplicialCurrent, boundary, canonical_set, current_add, current_sub, mass, restrict
from .curves import CurveDecomposition, decompose_1current, geodesic_lemma_check
from .errors import (
    DegenerateLevelError,
    GeometryError,
    HypothesisError,
    InputError,
    RefinementError,
    UnsupportedDimensionError,
)
from .experiments import ConvergenceTable, InstanceSpec, generate, stability_run
from .flatnorm import FlatNormResult, flat_distance, flat_norm
from .mesh import EmbeddedComplex, MetricMode, geodesic_distance, simplex_volume
from .overlay import OverlayComplex, overlay_2d
from .pa_maps import (
    GradientClassification,
    PiecewiseAffineMap,
    classify_gradients,
    lipschitz_constant,
    mass_nonincrease_check,
    pushforward,
)
from .rigidity import (
    RigidityReport,
    SliceIsometryReport,
    check_hypotheses,
    distortion,
    essential_injectivity_estimate,
    euclidean_rigidity_chain,
    overlap_direction,
    rigidity_check,
    slice_isometry_check,
)
from .slicing import SliceFamily, coarea_inequality_check, slice, slice_boundary_check, slice_mass_integral

__version__ = "0.1.0"

__all__ = [
    "boundary",
    "canonical_set",
    "check_hypotheses",
    "classify_gradients",
    "coarea_inequality_check",
    "ConvergenceTable",
    "current_add",
    "current_sub",
    "CurveDecomposition",
    "decompose_1current",
    "DegenerateLevelError",
    "distortion",
    "EmbeddedComplex",
    "essential_injectivity_estimate",
    "euclidean_rigidity_chain",
    "flat_distance",
    "flat_norm",
    "FlatNormResult",
    "generate",
    "geodesic_distance",
    "geodesic_lemma_check",
    "GeometryError",
    "GradientClassification",
    "HypothesisError",
    "InputError",
    "InstanceSpec",
    "lipschitz_constant",
    "mass",
    "mass_nonincrease_check",
    "MassReport",
    "MetricMode",
    "overlap_direction",
    "overlay_2d",
    "OverlayComplex",
    "PiecewiseAffineMap",
    "pushforward",
    "RefinementError",
    "restrict",
    "rigidity_check",
    "RigidityReport",
    "simplex_volume",
    "SimplicialCurrent",
    "slice",
    "slice_boundary_check",
    "slice_isometry_check",
    "slice_mass_integral",
    "SliceFamily",
    "SliceIsometryReport",
    "stability_run",
    "UnsupportedDimensionError",
]
