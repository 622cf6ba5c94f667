"""Outage analysis and SU signal design for underlay spectrum sharing with a
full-duplex primary pair, where the secondary user may send improper Gaussian
signals."""

from .design import (
    Breakpoints,
    DesignOutcome,
    breakpoints,
    budget_intersection,
    cap_intersection,
    design_improper,
    design_proper,
    grid_search_design,
    improper_power_cap,
    is_decreasing_on_cap,
    proper_power_cap,
    su_outage_cx_derivative,
)
from .errors import DomainError, NumericError, NumericWarning
from .montecarlo import McConfig, McEstimate, draw_realization, estimate_pu_outage, estimate_su_outage
from .outage import (
    OutageValue,
    pu_outage_conditional,
    pu_outage_exact,
    pu_outage_proper,
    pu_outage_upper,
    su_outage,
    su_outage_conditional,
)
from .params import (
    PuConstraintConstants,
    SystemParams,
    constraint_constants,
    db_to_linear,
    linear_to_db,
    max_interference_margin,
    qos_margin,
    snr_threshold,
)
from .rates import FadingRealization, SignalDesign, psi_p, psi_s, pu_rate, su_rate

__version__ = "0.1.0"
