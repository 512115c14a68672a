"""Pseudo-spectral simulator for stochastic (location-uncertainty) coastal wave models.

The 1D periodic tank hosts the Saint-Venant, Boussinesq and Serre-Green-Naghdi
shallow-water systems, each with optional transport noise, plus the KdV
family.  Time stepping combines RK4 for the drift with Euler-Heun for the
Stratonovich noise.
"""

__version__ = "0.1.0"

from .errors import ConfigError, LuWavesError, NonPositiveDepthError, NumericalError, SolverError
from .spectral import Grid, apply_sgn_operator, deriv, invert_helmholtz, make_grid, solve_sgn_operator
from .noise import (
    NoiseModel,
    PresetIncrements,
    RecordingStream,
    RngStream,
    WienerIncrement,
    derive_seed,
    ito_stokes_drift,
    noise_field,
    sample_increment,
    split_additive,
    taper,
    variance_tensor,
)
from .models import (
    ModelParams,
    State,
    Tendency,
    make_model,
    rhs_boussinesq,
    rhs_sgn,
    rhs_sv,
    rhs_sv_conservative,
    water_height,
)
from .integrator import StepConfig, Trajectory, hybrid_step, simulate
from .diagnostics import (
    DiagnosticsRow,
    EnsembleStats,
    energy_sgn,
    energy_sw,
    ensemble_stats,
    mass,
    momentum,
    symmetry_metric,
)
from .kdv import KdvModel, KdvParams, rhs_kdv, soliton, wadati_shift_check
from .config import RunConfig, parse_config

__all__ = [name for name in dir() if not name.startswith("_")]
