"""Hybrid time stepping and the single-path simulation driver.

Each step draws one Wiener pair.  The drift is advanced with classical RK4
(stages see no noise) and the Stratonovich martingale part with the
Euler-Heun predictor-corrector, both starting from the state at the
beginning of the step.  The two increments are added.

A dynamics object only needs ``drift(fields)``, ``martingale(fields, dB)``,
``noise_increment(inc)`` (returning ``None`` when deterministic),
``stochastic`` and ``linear``.  When ``linear`` is a Fourier symbol the
drift is advanced with the integrating-factor form of RK4 (Lawson) and the
martingale increment is transported by the same linear propagator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError
from .models import State

__all__ = ["StepConfig", "Trajectory", "hybrid_step", "rk4_drift", "simulate"]


@dataclass(frozen=True)
class StepConfig:
    dt: float = 0.005
    t_end: float = 5.0
    snapshot_every: int = 200

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise ValueError(f"snapshot_every must be a positive integer, got {self.snapshot_every}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    """Snapshots (always including the initial and final states) plus diagnostics."""

    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    @property
    def times(self) -> list:
        return [s.t for s in self.states]

    @property
    def final(self) -> State:
        return self.states[-1]


def _axpy(fields, a, incs):
    return tuple(f + a * d for f, d in zip(fields, incs))


class _Propagator:
    """``exp(tau L)`` applied in Fourier space for a diagonal linear symbol."""

    def __init__(self, grid, symbol, dt):
        self.grid = grid
        self.full = np.exp(dt * symbol)
        self.half = np.exp(0.5 * dt * symbol)

    def __call__(self, f, which):
        m = self.full if which == "full" else self.half
        return self.grid.ifft(self.grid.fft(f) * m)


def rk4_drift(model, fields, dt, prop=None):
    """Drift increment ``y_{n+1} - y_n`` from one classical (or Lawson) RK4 step."""
    if prop is None:
        k1 = model.drift(fields)
        k2 = model.drift(_axpy(fields, 0.5 * dt, k1))
        k3 = model.drift(_axpy(fields, 0.5 * dt, k2))
        k4 = model.drift(_axpy(fields, dt, k3))
        return tuple(dt / 6.0 * (a + 2.0 * b + 2.0 * c + d) for a, b, c, d in zip(k1, k2, k3, k4))
    # Lawson: work with v = exp(-tL) y so the stiff linear part is integrated exactly
    half = lambda fs: tuple(prop(f, "half") for f in fs)  # noqa: E731
    full = lambda fs: tuple(prop(f, "full") for f in fs)  # noqa: E731
    k1 = model.drift(fields)
    y_half = half(fields)
    k2 = model.drift(_axpy(y_half, 0.5 * dt, half(k1)))
    k3 = model.drift(_axpy(y_half, 0.5 * dt, k2))
    y_full = full(fields)
    k4 = model.drift(_axpy(y_full, dt, half(k3)))
    e_y, e_k1 = y_full, full(k1)
    h_k23 = half(tuple(b + c for b, c in zip(k2, k3)))
    new = tuple(y + dt / 6.0 * (a + 2.0 * bc + d) for y, a, bc, d in zip(e_y, e_k1, h_k23, k4))
    return tuple(n - f for n, f in zip(new, fields))


def _heun_martingale(model, fields, dB):
    m0 = model.martingale(fields, dB)
    predicted = _axpy(fields, 1.0, m0)
    m1 = model.martingale(predicted, dB)
    return tuple(0.5 * (a + b) for a, b in zip(m0, m1))


def hybrid_step(model, state: State, rng, dt: float, prop=None) -> State:
    """Advance ``state`` by one step of length ``dt``.

    Exactly one Wiener pair is drawn from ``rng`` per call, even for
    deterministic models, so that stochastic and deterministic twins consume
    their streams identically.
    """
    if prop is None and getattr(model, "linear", None) is not None:
        prop = _Propagator(model.grid, model.linear, dt)
    inc = rng.increment(dt) if rng is not None else None
    model.t = state.t
    fields = state.fields
    d_drift = rk4_drift(model, fields, dt, prop)
    dB = model.noise_increment(inc) if (inc is not None and model.stochastic) else None
    if dB is None:
        new = _axpy(fields, 1.0, d_drift)
    else:
        d_mart = _heun_martingale(model, fields, dB)
        if prop is not None:
            d_mart = tuple(prop(m, "full") for m in d_mart)
        new = tuple(f + a + b for f, a, b in zip(fields, d_drift, d_mart))
    for f in new:
        if not np.all(np.isfinite(f)):
            raise NumericalError("non-finite value in state", t=state.t + dt)
    return State.from_fields(new, state.t + dt)


def simulate(
    model,
    initial: State,
    step: StepConfig,
    rng,
    diagnose: Callable[[State], object] | None = None,
) -> Trajectory:
    """Integrate one path from ``initial`` to ``step.t_end``.

    Snapshots are taken every ``step.snapshot_every`` steps and at the final
    step; ``diagnose`` (if given) is evaluated on each snapshot.  Numerical
    failures are re-raised with the failing step index and time attached.
    """
    n = step.n_steps
    prop = None
    if getattr(model, "linear", None) is not None:
        prop = _Propagator(model.grid, model.linear, step.dt)
    traj = Trajectory()

    def record(s, i):
        traj.states.append(s)
        traj.steps.append(i)
        if diagnose is not None:
            traj.diagnostics.append(diagnose(s))

    state = initial
    if hasattr(model, "height"):
        model.t = state.t
        try:
            model.height(state.eta)
        except NumericalError as exc:
            exc.locate(t=state.t, step=0)
            raise
    record(state, 0)
    for i in range(1, n + 1):
        try:
            state = hybrid_step(model, state, rng, step.dt, prop)
        except NumericalError as exc:
            exc.locate(t=initial.t + i * step.dt, step=i)
            raise
        # keep times on the exact lattice t0 + i dt
        state = State(state.eta, state.vel, initial.t + i * step.dt)
        if i % step.snapshot_every == 0 or i == n:
            record(state, i)
    return traj
