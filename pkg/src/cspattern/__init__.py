"""Template and pattern detection on multispectral images from compressive measurements."""
from .detect import (
    DetectionReport,
    add_noise,
    compressive_pattern_match,
    compressive_template_match,
    evaluate,
    lloyd_max_binarize,
    template_match,
)
from .errors import (
    BoundsError,
    CSPatternError,
    DomainError,
    FactorizationError,
    FormatError,
    PlanningError,
    ShapeError,
    ValidationError,
)
from .msimage import GridDims, Mask, MultispectralImage, PixelShift, SpectralSignature
from .planner import MeasurementPlan, ShiftSet, plan_for_pattern, reconstruct_virtual
from .sensing import SensingEnsemble, generate, measure, measurement_count
from .solver import Regularizer, SolverConfig, SolverResult, solve_constrained
from .spectralize import CHECKERED, HOOK, Pattern, spectralize

__version__ = "0.1.0"
