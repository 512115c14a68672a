"""Right-hand sides of the 1D Saint-Venant, Boussinesq and SGN systems.

Every model splits its tendency into a drift (per unit time) and a
martingale part (per noise draw, with the increment ``sigma o dB`` already
folded in).  The equations are integrated in Stratonovich form, so no Ito
correction is ever assembled.

Notation: ``u* = u - (1/2) Upsilon eps u_s`` is the drift-corrected
velocity, ``h = 1 + eps eta`` the water height and ``c = eps beta^2 / 3`` the
dispersive coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonPositiveDepthError
from .noise import NoiseModel, ito_stokes_drift, split_additive
from .spectral import Grid, invert_helmholtz, solve_sgn_operator

__all__ = [
    "KINDS",
    "MIN_DEPTH",
    "ModelParams",
    "State",
    "Tendency",
    "water_height",
    "make_model",
    "SaintVenant",
    "SaintVenantConservative",
    "Boussinesq",
    "SerreGreenNaghdi",
    "PureTransport",
    "rhs_sv",
    "rhs_sv_conservative",
    "rhs_boussinesq",
    "rhs_sgn",
]

KINDS = ("saint_venant", "boussinesq", "serre_green_naghdi")
FORMS = ("primitive", "conservative")
KIND_ALIASES = {
    "sv": "saint_venant",
    "saint_venant": "saint_venant",
    "b": "boussinesq",
    "boussinesq": "boussinesq",
    "sgn": "serre_green_naghdi",
    "serre_green_naghdi": "serre_green_naghdi",
}
MIN_DEPTH = 1e-6


def canonical_kind(name: str) -> str:
    try:
        return KIND_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown model kind {name!r}; expected one of {sorted(KIND_ALIASES)}") from None


@dataclass(frozen=True)
class ModelParams:
    epsilon: float = 0.1
    beta: float = 0.01
    kind: str = "saint_venant"
    form: str = "primitive"
    stochastic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.form == "conservative" and self.kind != "saint_venant":
            raise ValueError("conservative form is only available for saint_venant")

    @property
    def stokes_number(self) -> float | None:
        """``S = eps / beta^2``; ``None`` when beta is zero."""
        return self.epsilon / self.beta**2 if self.beta > 0 else None

    @property
    def dispersion(self) -> float:
        return self.epsilon * self.beta**2 / 3.0


@dataclass(frozen=True)
class State:
    """Surface elevation plus velocity (or momentum ``q = h u``) at time ``t``.

    ``vel`` is ``None`` for single-field equations such as KdV.
    """

    eta: np.ndarray
    vel: np.ndarray | None = None
    t: float = 0.0

    @property
    def fields(self) -> tuple:
        return (self.eta,) if self.vel is None else (self.eta, self.vel)

    @classmethod
    def from_fields(cls, fields, t: float) -> "State":
        return cls(fields[0], fields[1] if len(fields) > 1 else None, t)


@dataclass(frozen=True)
class Tendency:
    drift_eta: np.ndarray
    drift_vel: np.ndarray
    mart_eta: np.ndarray
    mart_vel: np.ndarray


def _height(eta, epsilon, grid=None, t=None):
    h = 1.0 + epsilon * eta
    h_min = float(np.min(h))
    if not h_min > MIN_DEPTH:
        idx = np.unravel_index(int(np.nanargmin(h)) if np.isfinite(h_min) else 0, np.shape(h))
        x = float(grid.x[idx[-1]]) if grid is not None else float(idx[-1])
        raise NonPositiveDepthError(h_min, x, t=t)
    return h


def water_height(state: State, params: ModelParams, grid: Grid | None = None) -> np.ndarray:
    """``h = 1 + eps eta``; raises :class:`NonPositiveDepthError` if ``min(h) <= 1e-6``."""
    return _height(state.eta, params.epsilon, grid, state.t)


class ShallowWaterModel:
    """Common machinery for the primitive-variable models.

    Subclasses override :meth:`_momentum` to turn the explicit momentum
    terms into a velocity tendency.
    """

    n_fields = 2
    linear = None

    def __init__(self, grid: Grid, params: ModelParams, noise: NoiseModel | None = None,
                 solver_tol: float = 1e-10, solver_max_iter: int = 200):
        self.grid = grid
        self.params = params
        self.noise = noise if noise is not None else NoiseModel(amplitude=0.0)
        self.solver_tol = solver_tol
        self.solver_max_iter = solver_max_iter
        self.stochastic = params.stochastic and not self.noise.is_zero
        eps = params.epsilon
        if self.stochastic:
            self.sqrt_upsilon = math.sqrt(self.noise.upsilon)
            self.ustar_shift = 0.5 * self.noise.upsilon * eps * ito_stokes_drift(self.noise, grid)
            self.ustar_shift_x = grid.deriv(self.ustar_shift, 1)
            self.noise_modes = self.noise.basis(grid)
        else:
            self.sqrt_upsilon = 0.0
            self.ustar_shift = np.zeros(grid.n_points)
            self.ustar_shift_x = np.zeros(grid.n_points)
            self.noise_modes = None
        self.t = None

    # noise ---------------------------------------------------------------

    def noise_increment(self, inc) -> np.ndarray | None:
        """``sigma o dB`` for one step, or ``None`` when the model is deterministic."""
        if not self.stochastic:
            return None
        c, s = self.noise_modes
        return c * inc.d_beta1 + s * inc.d_beta2

    def height(self, eta):
        return _height(eta, self.params.epsilon, self.grid, self.t)

    # tendencies ----------------------------------------------------------

    def drift(self, fields):
        eta, u = fields
        g, eps = self.grid, self.params.epsilon
        P = g.dealiased
        h = self.height(eta)
        eta_x = g.deriv(eta, 1)
        u_x = g.deriv(u, 1)
        ustar = u - self.ustar_shift
        ustar_x = u_x - self.ustar_shift_x
        d_eta = -P(eps * ustar * eta_x) - P(h * ustar_x)
        explicit = -P(eps * ustar * u_x) - eta_x
        d_u = self._momentum(h, u, u_x, explicit, ustar=ustar, ustar_x=ustar_x)
        return d_eta, d_u

    def martingale(self, fields, dB):
        eta, u = fields
        g, eps, su = self.grid, self.params.epsilon, self.sqrt_upsilon
        P = g.dealiased
        h = self.height(eta)
        eta_x = g.deriv(eta, 1)
        u_x = g.deriv(u, 1)
        dB_x = g.deriv(dB, 1)
        m_eta = -su * (P(eps * dB * eta_x) + P(split_additive(dB_x, eta, self.noise, eps)))
        explicit = -su * P(eps * dB * u_x)
        m_u = self._momentum(h, u, u_x, explicit, dB=dB, dB_x=dB_x)
        return m_eta, m_u

    def _momentum(self, h, u, u_x, explicit, **kw):
        return explicit

    def tendency(self, state: State, dB=None) -> Tendency:
        self.t = state.t
        d_eta, d_vel = self.drift(state.fields)
        if dB is None or not self.stochastic:
            z = np.zeros_like(state.eta)
            return Tendency(d_eta, d_vel, z, z.copy())
        m_eta, m_vel = self.martingale(state.fields, dB)
        return Tendency(d_eta, d_vel, m_eta, m_vel)


class SaintVenant(ShallowWaterModel):
    """Hydrostatic long-wave system in ``(eta, u)``."""


class Boussinesq(ShallowWaterModel):
    """Weakly dispersive system; dispersion inverted with depth frozen at 1."""

    def _momentum(self, h, u, u_x, explicit, **kw):
        return invert_helmholtz(self.grid, explicit, self.params.dispersion)


class SerreGreenNaghdi(ShallowWaterModel):
    """Fully nonlinear dispersive system.

    The momentum update solves ``T[h] w = E`` where ``E`` gathers the
    explicit terms plus the explicit part of the vertical-acceleration
    functional.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.last_iterations = 0

    def _momentum(self, h, u, u_x, explicit, ustar=None, ustar_x=None, dB=None, dB_x=None):
        g, eps = self.grid, self.params.epsilon
        c = self.params.dispersion
        if c == 0.0:
            return explicit
        P = g.dealiased
        u_xx = g.deriv(u, 2)
        if dB is None:
            accel = eps * (P(ustar * u_xx) - P(ustar_x * u_x))
        else:
            accel = self.sqrt_upsilon * eps * (P(dB * u_xx) - P(dB_x * u_x))
        h3 = h**3
        rhs = explicit + (c / h) * g.deriv(P(h3 * accel), 1)
        w, iters = solve_sgn_operator(g, h, rhs, c, tol=self.solver_tol, max_iter=self.solver_max_iter)
        self.last_iterations = iters
        return w


class SaintVenantConservative(ShallowWaterModel):
    """Saint-Venant in ``(eta, q = h u)``; every tendency is a total derivative."""

    def drift(self, fields):
        eta, q = fields
        g, eps = self.grid, self.params.epsilon
        P = g.dealiased
        h = self.height(eta)
        u = q / h
        ustar = u - self.ustar_shift
        d_eta = -g.deriv(P(ustar * h), 1)
        d_q = -g.deriv(P(eps * h * u * ustar) + eta + P(0.5 * eps * eta * eta), 1)
        return d_eta, d_q

    def martingale(self, fields, dB):
        eta, q = fields
        g, eps, su = self.grid, self.params.epsilon, self.sqrt_upsilon
        P = g.dealiased
        self.height(eta)
        flux = P(eps * eta * dB)
        if not self.noise.filter_additive:
            flux = flux + dB
        m_eta = -su * g.deriv(flux, 1)
        m_q = -su * eps * g.deriv(P(q * dB), 1)
        return m_eta, m_q


class PureTransport:
    """``d eta + Upsilon^(1/2) eps (sigma o dB) d_x eta = 0``.

    Only the noise-advection term of the elevation equation; with
    space-constant noise its exact solution is a random translation, which
    makes it a reference problem for the stochastic part of the integrator.
    """

    n_fields = 1
    linear = None

    def __init__(self, grid: Grid, epsilon: float, noise: NoiseModel):
        self.grid = grid
        self.epsilon = epsilon
        self.noise = noise
        self.stochastic = not noise.is_zero
        self.noise_modes = noise.basis(grid)
        self.speed = math.sqrt(noise.upsilon) * epsilon

    def noise_increment(self, inc):
        c, s = self.noise_modes
        return c * inc.d_beta1 + s * inc.d_beta2

    def drift(self, fields):
        return (np.zeros_like(fields[0]),)

    def martingale(self, fields, dB):
        return (-self.speed * dB * self.grid.deriv(fields[0], 1),)


_MODEL_CLASSES = {
    ("saint_venant", "primitive"): SaintVenant,
    ("saint_venant", "conservative"): SaintVenantConservative,
    ("boussinesq", "primitive"): Boussinesq,
    ("serre_green_naghdi", "primitive"): SerreGreenNaghdi,
}


def make_model(grid: Grid, params: ModelParams, noise: NoiseModel | None = None, **solver) -> ShallowWaterModel:
    """Instantiate the dynamics selected by ``params.kind`` and ``params.form``."""
    cls = _MODEL_CLASSES[(params.kind, params.form)]
    return cls(grid, params, noise, **solver)


def _rhs(kind, form, state, params, noise, dB, grid, **solver):
    p = replace(params, kind=kind, form=form)
    return make_model(grid, p, noise, **solver).tendency(state, dB)


def rhs_sv(state, params, noise, dB, grid) -> Tendency:
    return _rhs("saint_venant", "primitive", state, params, noise, dB, grid)


def rhs_sv_conservative(state, params, noise, dB, grid) -> Tendency:
    """Tendency of ``(eta, q)``; ``state.vel`` holds the momentum ``q = h u``."""
    return _rhs("saint_venant", "conservative", state, params, noise, dB, grid)


def rhs_boussinesq(state, params, noise, dB, grid) -> Tendency:
    return _rhs("boussinesq", "primitive", state, params, noise, dB, grid)


def rhs_sgn(state, params, noise, dB, grid, tol: float = 1e-10, max_iter: int = 200) -> Tendency:
    return _rhs("serre_green_naghdi", "primitive", state, params, noise, dB, grid,
                solver_tol=tol, solver_max_iter=max_iter)
