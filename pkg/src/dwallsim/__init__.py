"""dwallsim: 1D Landau-Lifshitz-Gilbert domain-wall simulation and diagnostics.

Simulates magnetization dynamics on a ferromagnetic nanowire with easy-axis
anisotropy and Dzyaloshinskii-Moriya interaction, provides the explicit wall
profiles and precessing-wall solutions, localized energy and dissipation
diagnostics, spectral checks of the linearized operator, and the modulation
decomposition of two-wall configurations into gauges plus a remainder.
"""

from .cutoff import Cutoff, cutoff_pair, make_cutoff
from .energy import (
    EnergyReport,
    dissipation_D,
    effective_field,
    energy_balance_residual,
    energy_total,
    energy_variation,
    forcing_F,
)
from .errors import (
    BlowupError,
    CflViolationWarning,
    DwallsimError,
    FormatError,
    GridTooSmallError,
    InsufficientDataError,
    NanDetectedError,
    NoConvergenceError,
    NormViolationError,
    ParseError,
    RegridOutOfRangeError,
    SeparationTooSmallError,
    SolverFailError,
    TrajectoryTooShortError,
    ValidationError,
)
from .grid import Grid1D, SpinField, calh_size, diff1, diff2, integrate, project_unit, sobolev_norm
from .harness import (
    CoercivityConfig,
    DissipationConfig,
    InteractionSpec,
    StabilityReport,
    TwoWallConfig,
    build_two_wall_initial,
    coercivity_experiment,
    dissipation_experiment,
    fit_decay_rate,
    fit_envelope,
    kappa,
    q_interaction,
    run_two_wall_experiment,
)
from .integrator import MonitorStatus, SimConfig, Trajectory, blowup_monitor, llg_rhs, run, step
from .model import AppliedField, Gauge, ModelParams, WallSign, gauge_dist, gauge_norm
from .modulation import (
    ModulationSeries,
    ModulationState,
    almost_orth_residual,
    decompose_static,
    decompose_trajectory,
    frame_coefficients,
    initial_gauge_guess,
    matrix_A,
    orthogonality_F,
)
from .spectral import OperatorMatrix, assemble_L, calibrated_lambda0, coercivity_gap, eigenpairs, quadratic_form
from .walls import (
    beta_star,
    gauge_apply,
    moving_frame,
    precessing_gauge,
    theta_star,
    two_wall_profile,
    wall_profile,
)

__version__ = "0.1.0"
