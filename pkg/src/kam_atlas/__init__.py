"""kam-atlas: desk-scale numerics for resonance coverings, secular phase
portraits, action-angle functions near separatrices, and twist certificates
of natural Hamiltonians H = |y|^2/2 + eps f(x)."""

__version__ = "0.1.0"

from .actions import (
    ActionProfile,
    OutsideRegionError,
    SeparatrixFit,
    action,
    action_derivative,
    action_second_derivative,
    build_profile,
    energy_from_action,
    separatrix_fit,
    twist_1d,
)
from .logring import (
    DiffOperator,
    LogElement,
    RingCapError,
    expand_operator,
    leading_constant,
)
from .measure import (
    CoveringViolation,
    MeasureEstimate,
    budget_shape,
    mc_measure,
    scaling_study,
    zone_fractions,
)
from .portrait import (
    Region,
    StandardForm1D,
    decompose,
    pendulum_form,
    phase_bounds,
    standard_form,
    validate,
)
from .potential import (
    FourierPotential,
    GenericityReport,
    MorseProfile,
    NotMorseError,
    OneDSeries,
    check_genericity,
    cutoff_N,
    morse_analyze,
)
from .report import (
    ConfigError,
    KamThreshold,
    KamThresholdInput,
    StudyConfig,
    kam_threshold,
    run_study,
)
from .resonance import (
    BezoutFrame,
    CoveringParams,
    TransverseForm,
    ZoneLabel,
    ZoneParams,
    bezout_complete,
    classify,
    enumerate_generators,
    transverse_form,
    zone_params,
)
from .twist import (
    BirkhoffData,
    CertificateNotFound,
    NondegeneracyCert,
    NormalizedTwist,
    birkhoff_delta,
    certify_nondegeneracy,
    empirical_sublevel,
    normalized_F,
    pd_det_bound,
    sublevel_bound,
    twist_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
