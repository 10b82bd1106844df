"""Exact computations with Tate spectral sequences for the Morava stabilizer
group and its subgroups at height p - 1, range comparisons for maps of
spectral sequences, and exotic Picard filtration bounds."""

from .graded_algebra import AlgebraPresentation, Domain, Element, GeneratorSpec, basis_in_bidegree, dimension, multiply
from .fp_linalg import FpMatrix, kernel_basis, quotient_basis, rank, rref
from .picard_bounds import OUT_OF_RANGE, exotic_bound_report, permanent_cycle_filter, picard_shift
from .stabilizer_presets import HeightContext, HypothesisError, build_preset, check_no_late_targets, necklace_count
from .range_comparison import RangeBound, VanishingLine, propagate, simulate_comparison, vanishing_line
from .spectral_sequence import DifferentialRule, PageWindow, SpectralSequence, invert_class, tensor_exterior, turn_page

__version__ = "0.1.0"
