"""Korteweg-de Vries family on the periodic tank.

Written in the laboratory frame,

    d eta + [adv d_x eta + (3/2) eta d_x eta + (1/6) d_xxx eta - (1/2) a_h d_xx eta] dt
          + Upsilon^(1/2) (sigma o dB) d_x eta = 0,

with ``adv = 1`` the unit long-wave speed.  The deterministic variant drops
the noise and ``a_h``; the transport variant keeps the noise; the
dissipative variant keeps ``a_h`` instead.  The linear part is stiff, so by
default it is integrated exactly through an integrating factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import Tendency
from .spectral import Grid

__all__ = [
    "VARIANTS",
    "KdvParams",
    "KdvModel",
    "WadatiResult",
    "soliton",
    "soliton_speed",
    "rhs_kdv",
    "peak_location",
    "wadati_shift_check",
]

VARIANTS = ("deterministic", "transport", "dissipative")


@dataclass(frozen=True)
class KdvParams:
    upsilon: float = 1.0
    sigma0: float = 0.0
    a_h: float = 0.0
    soliton_amp: float = 0.1
    advection: float = 1.0

    def __post_init__(self):
        if not self.a_h >= 0:
            raise ValueError(f"a_h must be >= 0, got {self.a_h}")
        if not self.upsilon >= 0:
            raise ValueError(f"upsilon must be >= 0, got {self.upsilon}")
        if not self.soliton_amp > 0:
            raise ValueError(f"soliton_amp must be > 0, got {self.soliton_amp}")


def soliton_speed(amp: float, advection: float = 1.0) -> float:
    return advection + 0.5 * amp


def soliton(amp: float, x, t: float = 0.0, advection: float = 1.0, x0: float = 0.0):
    """Solitary wave ``A sech^2(sqrt(3A/4) (x - x0 - (adv + A/2) t))``."""
    arg = math.sqrt(0.75 * amp) * (np.asarray(x, dtype=float) - x0 - soliton_speed(amp, advection) * t)
    return amp / np.cosh(arg) ** 2


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ValueError(f"unknown KdV variant {variant!r}; expected one of {VARIANTS}")
    return variant


class KdvModel:
    """Single-field dynamics for :func:`luwaves.integrator.simulate`."""

    n_fields = 1

    def __init__(self, grid: Grid, params: KdvParams, variant: str = "deterministic",
                 integrating_factor: bool = True):
        self.grid = grid
        self.params = params
        self.variant = _check_variant(variant)
        a_h = params.a_h if variant == "dissipative" else 0.0
        self.a_h = a_h
        sym = (-params.advection * grid.symbol(1) - grid.symbol(3) / 6.0 + 0.5 * a_h * grid.symbol(2))
        self.linear_symbol = sym
        self.linear = sym if integrating_factor else None
        sigma = np.broadcast_to(np.asarray(params.sigma0, dtype=float), (grid.n_points,))
        self.sigma = np.array(sigma)
        self.stochastic = variant == "transport" and bool(np.any(self.sigma != 0)) and params.upsilon > 0
        self.sqrt_upsilon = math.sqrt(params.upsilon)
        self.t = None

    def noise_increment(self, inc):
        if not self.stochastic or inc is None:
            return None
        return self.sigma * inc.d_beta1

    def nonlinear(self, eta):
        return -0.75 * self.grid.deriv(self.grid.dealiased(eta * eta), 1)

    def full_drift(self, eta):
        lin = self.grid.ifft(self.grid.fft(eta) * self.linear_symbol)
        return self.nonlinear(eta) + lin

    def drift(self, fields):
        eta = fields[0]
        if self.linear is not None:
            return (self.nonlinear(eta),)
        return (self.full_drift(eta),)

    def martingale(self, fields, dB):
        return (-self.sqrt_upsilon * dB * self.grid.deriv(fields[0], 1),)


def rhs_kdv(eta, params: KdvParams, variant: str, dB, grid: Grid) -> Tendency:
    """Full drift (linear and nonlinear) and martingale tendencies of ``eta``."""
    model = KdvModel(grid, params, variant, integrating_factor=False)
    drift = model.full_drift(eta)
    if model.stochastic and dB is not None:
        mart = model.martingale((eta,), dB)[0]
    else:
        mart = np.zeros_like(eta)
    return Tendency(drift, None, mart, None)


def _eval_spectral(grid: Grid, coeffs, x: float, order: int) -> float:
    """Value at an arbitrary point of the ``order``-th derivative of the interpolant."""
    k = grid.k[:-1]
    c = coeffs[:-1] * (1j * k) ** order
    phase = np.exp(1j * k * (x + grid.half_length))
    val = c[0].real + 2.0 * np.sum((c[1:] * phase[1:]).real)
    return float(val / grid.n_points)


def peak_location(grid: Grid, f, iterations: int = 20) -> float:
    """Position of the maximum of ``f`` refined by Newton on its interpolant."""
    f = np.asarray(f, dtype=float)
    coeffs = grid.fft(f)
    x = float(grid.x[int(np.argmax(f))])
    for _ in range(iterations):
        d1 = _eval_spectral(grid, coeffs, x, 1)
        d2 = _eval_spectral(grid, coeffs, x, 2)
        if d2 >= 0:
            break
        step = -d1 / d2
        step = max(-grid.dx, min(grid.dx, step))
        x += step
        if abs(step) < 1e-14 * max(1.0, grid.half_length):
            break
    return x


@dataclass(frozen=True)
class WadatiResult:
    error: float
    kappa: float
    errors: dict


def wadati_shift_check(path, det_ref, sigma_const: float, brownian_path, grid: Grid,
                       upsilon: float = 1.0, kappas=(1.0, 2.0 / 3.0)) -> WadatiResult:
    """Compare a constant-noise transport run with a translated deterministic run.

    ``path`` and ``det_ref`` are trajectories with identical snapshot times;
    ``brownian_path[i]`` is the Brownian motion driving the noise at snapshot
    ``i``.  For each candidate ``kappa`` the deterministic snapshots are shifted
    by ``kappa Upsilon^(1/2) sigma B`` and compared in the max norm; the
    error of a candidate is its worst snapshot.  Returns the best candidate.
    """
    s_states = list(getattr(path, "states", path))
    d_states = list(getattr(det_ref, "states", det_ref))
    if len(s_states) != len(d_states) or len(brownian_path) != len(s_states):
        raise ValueError("trajectories and Brownian path must have the same number of snapshots")
    for a, b in zip(s_states, d_states):
        ta, tb = getattr(a, "t", None), getattr(b, "t", None)
        if ta is not None and tb is not None and abs(ta - tb) > 1e-9:
            raise ValueError("trajectories have mismatched snapshot times")
    errors = {}
    for kappa in kappas:
        worst = 0.0
        for a, b, B in zip(s_states, d_states, brownian_path):
            ea = a.eta if hasattr(a, "eta") else np.asarray(a)
            eb = b.eta if hasattr(b, "eta") else np.asarray(b)
            if ea.shape != (grid.n_points,) or eb.shape != (grid.n_points,):
                raise ValueError("snapshot does not live on the given grid")
            shift = kappa * math.sqrt(upsilon) * sigma_const * B
            worst = max(worst, float(np.max(np.abs(ea - grid.shift(eb, shift)))))
        errors[float(kappa)] = worst
    best = min(errors, key=errors.get)
    return WadatiResult(errors[best], best, errors)
