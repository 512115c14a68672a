"""Conserved-quantity monitors and ensemble statistics."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .models import ModelParams, State
from .spectral import Grid

__all__ = [
    "DiagnosticsRow",
    "EnsembleStats",
    "mass",
    "momentum",
    "energy_sw",
    "energy_sgn",
    "diagnostics_row",
    "ensemble_stats",
    "symmetry_metric",
    "fmt_float",
    "format_tsv",
    "DIAGNOSTICS_HEADER",
]


def fmt_float(v: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return f"{float(v):.17g}"


def format_tsv(header, rows) -> str:
    lines = ["\t".join(header)]
    lines.extend("\t".join(fmt_float(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    mass: float
    momentum: float
    energy_sw: float
    energy_sgn: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in astuple(self)):
            raise ValueError(f"non-finite diagnostics at t={self.t}")

    def as_tuple(self) -> tuple:
        return astuple(self)


DIAGNOSTICS_HEADER = tuple(f.name for f in fields(DiagnosticsRow))


def _velocity(state: State, params: ModelParams) -> np.ndarray:
    """Depth-averaged velocity, converting from momentum in conservative form."""
    if state.vel is None:
        return np.zeros_like(state.eta)
    if params.form == "conservative":
        return state.vel / (1.0 + params.epsilon * state.eta)
    return state.vel


def mass(state: State, params: ModelParams, grid: Grid) -> float:
    """``int eta dx`` (rectangle rule, exact for the mean of a band-limited field)."""
    return float(grid.integrate(state.eta))


def momentum(state: State, params: ModelParams, grid: Grid) -> float:
    """``int h u dx``; in conservative form this is ``int q dx`` directly."""
    if state.vel is None:
        return 0.0
    if params.form == "conservative":
        return float(grid.integrate(state.vel))
    h = 1.0 + params.epsilon * state.eta
    return float(grid.integrate(h * state.vel))


def energy_sw(state: State, params: ModelParams, grid: Grid) -> float:
    """Kinetic plus potential energy ``(eps^2/2) int h u^2 + (1/2) int h^2``."""
    h = 1.0 + params.epsilon * state.eta
    u = _velocity(state, params)
    return float(0.5 * params.epsilon**2 * grid.integrate(h * u * u) + 0.5 * grid.integrate(h * h))


def energy_sgn(state: State, params: ModelParams, grid: Grid) -> float:
    """:func:`energy_sw` plus the vertical kinetic energy ``(eps^3 beta^2/6) int h^3 (u_x)^2``."""
    base = energy_sw(state, params, grid)
    if params.beta == 0.0:
        return base
    h = 1.0 + params.epsilon * state.eta
    u_x = grid.deriv(_velocity(state, params), 1)
    extra = params.epsilon**3 * params.beta**2 / 6.0 * grid.integrate(h**3 * u_x * u_x)
    return float(base + extra)


def diagnostics_row(state: State, params: ModelParams, grid: Grid) -> DiagnosticsRow:
    return DiagnosticsRow(
        t=float(state.t),
        mass=mass(state, params, grid),
        momentum=momentum(state, params, grid),
        energy_sw=energy_sw(state, params, grid),
        energy_sgn=energy_sgn(state, params, grid),
    )


@dataclass(frozen=True)
class EnsembleStats:
    mean_eta: np.ndarray
    std_eta: np.ndarray
    n_paths: int

    @property
    def band(self) -> tuple[np.ndarray, np.ndarray]:
        """Spread band ``mean -/+ 3 std``."""
        return self.mean_eta - 3.0 * self.std_eta, self.mean_eta + 3.0 * self.std_eta

    @property
    def standard_error(self) -> np.ndarray:
        """Pointwise standard error of the mean."""
        return self.std_eta / math.sqrt(self.n_paths)


def ensemble_stats(paths) -> EnsembleStats:
    """Pointwise mean and unbiased (n-1) standard deviation over paths."""
    arr = np.asarray(paths, dtype=float)
    if arr.ndim != 2:
        raise ValueError("paths must be a sequence of equally sized 1D fields")
    n = arr.shape[0]
    if n < 2:
        raise ValueError(f"ensemble statistics need at least 2 paths, got {n}")
    # centring on the first path keeps identical paths at exactly zero spread
    dev = arr - arr[0]
    mean = arr[0] + dev.mean(axis=0)
    std = dev.std(axis=0, ddof=1)
    return EnsembleStats(mean, std, n)


def symmetry_metric(f, grid: Grid, center: float = 0.0) -> float:
    """``max |f(c + y) - f(c - y)|`` over the grid offsets.

    When ``center`` is a node the reflection is a pure index permutation;
    otherwise ``f`` is reflected by spectral interpolation.
    """
    f = np.asarray(f, dtype=float)
    n, dx = grid.n_points, grid.dx
    pos = (center + grid.half_length) / dx
    j = round(pos)
    if abs(pos - j) < 1e-9:
        idx = (2 * j - np.arange(n)) % n
        return float(np.max(np.abs(f - f[idx])))
    # f(c + y) - f(c - y) sampled at x = c + y: compare f with the field
    # reflected about c, i.e. g(x) = f(2c - x) = (reflection about 0)(x - 2c)
    about_zero = f[(n - np.arange(n)) % n]
    reflected = grid.shift(about_zero, 2.0 * center)
    return float(np.max(np.abs(f - reflected)))
