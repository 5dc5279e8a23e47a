"""Numerical audits of conservation-law limits on quantum measurements."""

from .audit import (
    ConservedQuartet,
    ShiftReport,
    WayReport,
    check_additive_conservation,
    check_yanase,
    gamma_shift,
    invariance_sampled_t,
    way_audit,
)
from .errors import InvariantError, LayoutError, WayAuditError
from .models import (
    CPMap,
    EffectSet,
    MeasurementModel,
    SystemEnvModel,
    heisenberg_cp_map,
    implemented_channel,
    implemented_povm,
    implemented_unitary,
    is_projective,
)
from .multdomain import bimodule_check, in_mult_domain, schwarz_defect
from .tensor import (
    DensityState,
    FactorLayout,
    Observable,
    Operator,
    UnitaryMap,
    embed,
    observable,
    partial_trace,
    tensor_product,
)

__version__ = "0.1.0"
