"""Wave-shaped transport noise, its variance tensor and Ito-Stokes drift.

One realisation of the Stratonovich increment over a step is

    (sigma o dB)(x) = s_alpha(x) * A * (cos(k x) dbeta1 + sin(k x) dbeta2)

with ``s_alpha`` a smooth taper vanishing at the tank walls.  Since
cos^2 + sin^2 = 1 the variance tensor is ``a(x) = A^2 s_alpha(x)^2`` and the
Ito-Stokes drift is ``u_s = a'/2 = A^2 s_alpha s_alpha'``, both closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Grid

__all__ = [
    "SEED_MULTIPLIER",
    "NoiseModel",
    "WienerIncrement",
    "RngStream",
    "PresetIncrements",
    "RecordingStream",
    "derive_seed",
    "taper",
    "taper_slope",
    "sample_increment",
    "noise_field",
    "variance_tensor",
    "ito_stokes_drift",
    "split_additive",
]

# path_seed = base_seed XOR (path_index * SEED_MULTIPLIER) mod 2**64
SEED_MULTIPLIER = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def derive_seed(base_seed: int, path_index: int) -> int:
    """Seed of path ``path_index`` in an ensemble started from ``base_seed``."""
    if path_index < 0:
        raise ValueError("path_index must be nonnegative")
    return (int(base_seed) ^ (int(path_index) * SEED_MULTIPLIER)) & _MASK64


@dataclass(frozen=True)
class WienerIncrement:
    d_beta1: float
    d_beta2: float
    dt: float


class RngStream:
    """Seeded source of Wiener increments for a single path.

    Same seed and same call sequence give bit-identical increments.  A stream
    is owned by one path; never share it between concurrent simulations.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self.count = 0

    @classmethod
    def for_path(cls, base_seed: int, path_index: int) -> "RngStream":
        return cls(derive_seed(base_seed, path_index))

    def increment(self, dt: float) -> WienerIncrement:
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        b1, b2 = self._gen.normal(0.0, math.sqrt(dt), size=2)
        self.count += 1
        return WienerIncrement(float(b1), float(b2), dt)


class PresetIncrements:
    """Replays a fixed sequence of ``(dbeta1, dbeta2)`` pairs.

    Used to drive several step sizes with one Brownian path, or to mirror a
    path.  Has the same ``increment(dt)`` interface as :class:`RngStream`.
    """

    def __init__(self, pairs):
        self._pairs = [(float(a), float(b)) for a, b in pairs]
        self.count = 0

    def increment(self, dt: float) -> WienerIncrement:
        if self.count >= len(self._pairs):
            raise IndexError("preset Brownian path exhausted")
        b1, b2 = self._pairs[self.count]
        self.count += 1
        return WienerIncrement(b1, b2, dt)


class RecordingStream:
    """Wraps a stream and records the running Brownian motions ``(B1, B2)``."""

    def __init__(self, stream):
        self.stream = stream
        self.b1 = [0.0]
        self.b2 = [0.0]

    @property
    def count(self) -> int:
        return len(self.b1) - 1

    def increment(self, dt: float) -> WienerIncrement:
        inc = self.stream.increment(dt)
        self.b1.append(self.b1[-1] + inc.d_beta1)
        self.b2.append(self.b2[-1] + inc.d_beta2)
        return inc


def sample_increment(rng: RngStream, dt: float) -> WienerIncrement:
    """Draw ``(dbeta1, dbeta2)``, two independent Normal(0, dt) variables."""
    return rng.increment(dt)


def taper(x, alpha: float, L: float):
    """``s_alpha(x) = exp((1/alpha^2) (1 - 1/(1 - (x/L)^2)))``, zero at ``|x| = L``.

    ``alpha = inf`` switches the taper off (returns ones).
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > L * (1 + 1e-12)):
        raise ValueError("taper evaluated outside the tank [-L, L]")
    if math.isinf(alpha):
        out = np.ones_like(xa)
    else:
        r2 = (xa / L) ** 2
        inside = r2 < 1.0
        safe = np.where(inside, 1.0 - r2, 1.0)
        out = np.where(inside, np.exp((1.0 - 1.0 / safe) / alpha**2), 0.0)
    return float(out) if out.ndim == 0 else out


def taper_slope(x, alpha: float, L: float):
    """Analytic derivative of :func:`taper`."""
    xa = np.asarray(x, dtype=float)
    if math.isinf(alpha):
        out = np.zeros_like(xa)
    else:
        r2 = (xa / L) ** 2
        inside = r2 < 1.0
        safe = np.where(inside, 1.0 - r2, 1.0)
        s = np.asarray(taper(xa, alpha, L))
        out = np.where(inside, -s * (2.0 * xa / L**2) / (alpha**2 * safe**2), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NoiseModel:
    """Single-wavenumber wave noise with boundary taper.

    ``taper_alpha = inf`` disables the taper; ``wavenumber = 0`` together
    with no taper gives the space-constant noise ``A dbeta1``.
    """

    amplitude: float = 0.005
    wavenumber: float = 2.0 * math.pi / 100.0
    taper_alpha: float = 10.0
    filter_additive: bool = True
    upsilon: float = 1.0

    def __post_init__(self):
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise ValueError(f"noise amplitude must be >= 0, got {self.amplitude}")
        if not self.taper_alpha > 0:
            raise ValueError(f"taper_alpha must be > 0, got {self.taper_alpha}")
        if not (self.upsilon >= 0 and math.isfinite(self.upsilon)):
            raise ValueError(f"upsilon must be >= 0, got {self.upsilon}")
        if not math.isfinite(self.wavenumber):
            raise ValueError("noise wavenumber must be finite")

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    @property
    def tapered(self) -> bool:
        return not math.isinf(self.taper_alpha)

    def periodic_on(self, grid: Grid) -> bool:
        """Whether the untapered basis is itself periodic on the tank."""
        m = self.wavenumber * grid.half_length / math.pi
        return abs(m - round(m)) < 1e-9

    def taper_on(self, grid: Grid) -> np.ndarray:
        return np.asarray(taper(grid.x, self.taper_alpha, grid.half_length))

    def basis(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """The two sampled spatial modes, ``A s cos(kx)`` and ``A s sin(kx)``."""
        s = self.taper_on(grid)
        kx = self.wavenumber * grid.x
        return self.amplitude * s * np.cos(kx), self.amplitude * s * np.sin(kx)


def noise_field(model: NoiseModel, inc: WienerIncrement, grid: Grid) -> np.ndarray:
    """The Stratonovich increment ``sigma o dB`` sampled on the grid."""
    if model.is_zero:
        return np.zeros(grid.n_points)
    c, s = model.basis(grid)
    return c * inc.d_beta1 + s * inc.d_beta2


def variance_tensor(model: NoiseModel, grid: Grid) -> np.ndarray:
    """``a(x) = A^2 s_alpha(x)^2``."""
    return model.amplitude**2 * model.taper_on(grid) ** 2


def ito_stokes_drift(model: NoiseModel, grid: Grid) -> np.ndarray:
    """``u_s = a'/2 = A^2 s_alpha s_alpha'``, evaluated analytically."""
    L = grid.half_length
    s = np.asarray(taper(grid.x, model.taper_alpha, L))
    ds = np.asarray(taper_slope(grid.x, model.taper_alpha, L))
    return model.amplitude**2 * s * ds


def split_additive(noise_div, eta, model: NoiseModel, epsilon: float):
    """Divergence-of-noise term of the elevation equation.

    The full term is ``h d_x(sigma o dB) = d_x(sigma o dB) + eps eta d_x(sigma o dB)``.
    With ``model.filter_additive`` the eta-independent (additive) part is dropped.
    """
    if model.filter_additive:
        return epsilon * eta * noise_div
    return (1.0 + epsilon * eta) * noise_div
