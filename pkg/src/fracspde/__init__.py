"""Space-time fractional stochastic kinetic equations: propagators, admissibility, sampling, verdicts."""
__version__ = "0.1.0"

from .records import BoundCheck  # noqa: E402
from .mlf import MlQuery, eval_ml, ml_bounds, ml_neg  # noqa: E402
from .kernels import (FracParams, RieszDelta, BesselTau, FractionalProduct, WhiteNoise,  # noqa: E402
                      FiniteMeasure, make_kernel, check_hypothesis, dalang_exponent, holder_windows)
from .noise import GridSpec, NoiseSlab, synthesize  # noqa: E402
from .sim import Field, InitialCondition, SigmaSpec, sample_additive, walsh_recursion, picard_iterate  # noqa: E402

__all__ = [
    "BoundCheck", "MlQuery", "eval_ml", "ml_bounds", "ml_neg", "FracParams", "RieszDelta", "BesselTau",
    "FractionalProduct", "WhiteNoise", "FiniteMeasure", "make_kernel", "check_hypothesis",
    "dalang_exponent", "holder_windows", "GridSpec", "NoiseSlab", "synthesize", "Field",
    "InitialCondition", "SigmaSpec", "sample_additive", "walsh_recursion", "picard_iterate",
]
