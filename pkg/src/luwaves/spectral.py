"""Uniform periodic 1D grid and the spectral operators built on it.

All operators act along the last axis, so a stack of fields with shape
``(..., n)`` is handled in one call.  Transforms are real-to-complex
(``numpy.fft.rfft``); the Nyquist mode of odd derivatives is zeroed so that
derivatives of real fields stay real and the discrete first derivative is an
exactly skew-symmetric matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError

__all__ = [
    "Grid",
    "make_grid",
    "deriv",
    "invert_helmholtz",
    "apply_sgn_operator",
    "solve_sgn_operator",
]

SUPPORTED_ORDERS = (1, 2, 3)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Periodic grid on ``[-L, L)`` with ``n_points`` nodes.

    Nodes are ``x_j = -L + j * 2L/n``; wavenumbers are ``k_m = pi * m / L``
    for the non-negative half spectrum ``m = 0..n/2``.
    """

    n_points: int
    half_length: float
    dealias: bool = False
    x: np.ndarray = field(init=False, repr=False)
    k: np.ndarray = field(init=False, repr=False)
    _ik_odd: np.ndarray = field(init=False, repr=False)
    _keep: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, L = self.n_points, self.half_length
        if isinstance(n, bool) or int(n) != n or not _is_power_of_two(int(n)) or n < 8:
            raise ValueError(f"n_points must be a power of two >= 8, got {n!r}")
        if not np.isfinite(L) or L <= 0:
            raise ValueError(f"half_length must be positive, got {L!r}")
        n = int(n)
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "half_length", float(L))
        x = -L + np.arange(n) * (2.0 * L / n)
        k = np.pi * np.arange(n // 2 + 1) / L
        ik = 1j * k
        ik[-1] = 0.0  # Nyquist mode of odd derivatives
        keep = np.arange(n // 2 + 1) <= n // 3
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "k", _frozen(k))
        object.__setattr__(self, "_ik_odd", _frozen(ik))
        object.__setattr__(self, "_keep", _frozen(keep))

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    def fft(self, f):
        return np.fft.rfft(f, axis=-1)

    def ifft(self, fh):
        return np.fft.irfft(fh, n=self.n_points, axis=-1)

    def symbol(self, order: int) -> np.ndarray:
        """Fourier multiplier of the ``order``-th derivative."""
        if order not in SUPPORTED_ORDERS:
            raise ValueError(f"unsupported derivative order {order!r}")
        if order == 2:
            return -(self.k**2)
        return self._ik_odd**order

    def deriv(self, f, order: int = 1) -> np.ndarray:
        return self.ifft(self.fft(f) * self.symbol(order))

    def truncate(self, f) -> np.ndarray:
        """Apply the 2/3-rule filter (modes above n/3 removed)."""
        return self.ifft(self.fft(f) * self._keep)

    def dealiased(self, f):
        """Filter ``f`` when the grid was built with ``dealias=True``."""
        return self.truncate(f) if self.dealias else f

    def integrate(self, f) -> np.ndarray:
        """Rectangle rule over the periodic tank."""
        return np.sum(f, axis=-1) * self.dx

    def shift(self, f, s) -> np.ndarray:
        """Return ``f(x - s)`` by spectral interpolation (a plain copy when ``s`` is 0)."""
        if np.ndim(s) == 0 and s == 0:
            return np.array(f, dtype=float)
        fh = self.fft(f)
        phase = np.exp(-1j * self.k * np.asarray(s, dtype=float)[..., None])
        phase[..., -1] = np.cos(self.k[-1] * np.asarray(s, dtype=float))
        return self.ifft(fh * phase)


def make_grid(n: int, L: float, dealias: bool = False) -> Grid:
    """Build a :class:`Grid` with ``n`` nodes on ``[-L, L)``."""
    return Grid(n, L, dealias)


def deriv(grid: Grid, f, order: int = 1) -> np.ndarray:
    """Spectral derivative of ``f`` of the given order (1, 2 or 3)."""
    return grid.deriv(f, order)


def invert_helmholtz(grid: Grid, f, c: float) -> np.ndarray:
    """Solve ``(I - c d_xx) v = f`` exactly on the grid."""
    if c < 0:
        raise ValueError(f"Helmholtz coefficient must be nonnegative, got {c}")
    if c == 0:
        return np.array(f, dtype=float, copy=True)
    return grid.ifft(grid.fft(f) / (1.0 + c * grid.k**2))


def apply_sgn_operator(grid: Grid, h, v, c: float) -> np.ndarray:
    """``T[h] v = v - (c/h) d_x(h^3 d_x v)``."""
    return v - (c / h) * grid.deriv(h**3 * grid.deriv(v, 1), 1)


def _apply_symmetric(grid, h, h3, v, c):
    # h * T[h] v, symmetric positive definite for h > 0
    return h * v - c * grid.deriv(h3 * grid.deriv(v, 1), 1)


def _rowdot(a, b):
    return np.sum(a * b, axis=-1, keepdims=True)


def solve_sgn_operator(
    grid: Grid,
    h,
    rhs,
    c: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> tuple[np.ndarray, int]:
    """Solve ``T[h] v = rhs`` for ``v``.

    Multiplying by ``h`` turns ``T[h]`` into a symmetric positive definite
    operator, which is solved by conjugate gradients preconditioned with the
    constant-depth inverse :func:`invert_helmholtz`.  Stacked rows are solved
    independently; a converged row is frozen so its result does not depend on
    what it was stacked with.

    Returns the solution and the number of iterations used.  Raises
    :class:`SolverError` when ``max(|T v - rhs|) > tol`` after ``max_iter``
    iterations.
    """
    h = np.asarray(h, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if np.any(h <= 0):
        raise ValueError("solve_sgn_operator needs a strictly positive depth")
    if c == 0:
        return rhs.copy(), 0
    squeeze = rhs.ndim == 1
    b = np.atleast_2d(rhs)
    hh = np.broadcast_to(h, b.shape)
    h3 = hh**3

    def precond(r):
        return invert_helmholtz(grid, r, c)

    def true_residual(x):
        return np.max(np.abs(apply_sgn_operator(grid, hh, x, c) - b), axis=-1)

    x = precond(b)
    res = true_residual(x)
    iters = 0
    while True:
        active = (res > tol)[:, None]
        if not active.any():
            break
        # (re)start CG from the current iterate
        r = hh * b - _apply_symmetric(grid, hh, h3, x, c)
        z = precond(r)
        p = z.copy()
        rz = _rowdot(r, z)
        restart = False
        while iters < max_iter:
            iters += 1
            sp = _apply_symmetric(grid, hh, h3, p, c)
            psp = _rowdot(p, sp)
            alpha = np.where(active & (psp > 0), rz / np.where(psp > 0, psp, 1.0), 0.0)
            x = x + alpha * p
            r = r - alpha * sp
            est = np.max(np.abs(r / hh), axis=-1)
            if not np.all(np.isfinite(est)):
                raise SolverError(float("nan"), iters)
            active &= (est > 0.5 * tol)[:, None]
            if not active.any():
                restart = True
                break
            z = precond(r)
            rz_new = _rowdot(r, z)
            beta = np.where(active, rz_new / np.where(rz != 0, rz, 1.0), 0.0)
            p = z + beta * p
            rz = rz_new
        res = true_residual(x)
        if np.any(res > tol) and (not restart or iters >= max_iter):
            raise SolverError(float(np.max(res)), iters)
    return (x[0] if squeeze else x), iters
