"""M-class phasor estimator with float and 16-bit fixed-point datapaths."""
from .config import (Backend, EstimatorConfig, FilterCoefficients, FixedPointFormat,
                     QuadratureLut, Rounding, demodulate, design_filter)
from .cordic import PolarResult, cordic_polar, cordic_to_polar, wrap_phase
from .core import Estimator, EstimatorState, FrameSeries, PhasorFrame, estimate
from .frequency import frequency_rocof, unwrap_phase

__all__ = [
    "Backend", "Estimator", "EstimatorConfig", "EstimatorState", "FilterCoefficients",
    "FixedPointFormat", "FrameSeries", "PhasorFrame", "PolarResult", "QuadratureLut",
    "Rounding", "cordic_polar", "cordic_to_polar", "demodulate", "design_filter", "estimate",
    "frequency_rocof", "unwrap_phase", "wrap_phase",
]
