"""Qubit heat engine fuelled by weak measurements and optimal feedback."""

from .continuous import (
    ContinuousParams,
    Ensemble,
    TrajectoryRecord,
    arrow_continuous,
    run_ensemble,
    run_trajectory,
)
from .discrete import CycleReport, cop, efficiency, entropy_change, run_cycle, sweep
from .distributions import (
    DensityCurve,
    Histogram,
    density_curve,
    ks_distance,
    pdf_dS,
    pdf_Q,
    pdf_QM,
    pdf_W,
)
from .kernels import BACKEND
from .qubit import (
    DiscreteMeasurement,
    EngineParams,
    QubitState,
    apply_discrete,
    arrow_discrete,
    backward_prob,
    feedback_rotate,
    thermal_state,
)

__version__ = "0.1.0"
