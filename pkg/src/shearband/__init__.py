"""Bulk rate-and-state friction in a 1-D fault cross-section.

Steady-state solves, the vanishing-diffusion localization limit, the full
inertial dynamics, the reduced quasistatic dynamics, and the lumped
slider, with a CLI harness for sweeps and named experiment presets.
"""

from ._kernels import HAVE_FAST, backend_name
from .constitutive import (
    AgingLaw,
    FrictionLaw,
    ModelParams,
    StiffnessLaw,
    aging_rhs,
    default_params,
    dissipation_R,
    mu,
    plastic_rate_Pi,
    stiffness,
    theta_f,
)
from .dynamics import EnergyLedger, EvolState, run_evolution, step_staggered
from .errors import (
    BracketFailure,
    ConfigError,
    NonConvergence,
    ShapeViolation,
    ShearbandError,
    StabilityRefused,
    StickBranch,
)
from .grid import (
    Field,
    Grid1D,
    decreasing_rearrangement,
    increasing_rearrangement,
    integrate,
    laplacian_dirichlet,
)
from .limits import (
    EffectiveFriction,
    R_and_hull,
    find_pi_circ,
    find_pi_star,
    mu_tilde,
    plateau_solution,
)
from .simplified import RegimeReport, SimpleState, detect_regime, run_sm, step_sm
from .slider import (
    SliderState,
    find_v1,
    find_v2,
    slider_fixed_point,
    slider_integrate,
    slider_rhs,
    slider_stability,
)
from .steady import (
    SteadyState,
    recover_strain_velocity,
    solve_damage,
    solve_pi_given_theta,
    solve_steady,
    solve_theta_given_pi,
    support_half_width,
)

__version__ = "0.1.0"
