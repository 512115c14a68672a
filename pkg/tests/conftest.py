import math

import numpy as np
import pytest

from luwaves.integrator import StepConfig, simulate
from luwaves.models import PureTransport, State
from luwaves.noise import NoiseModel, PresetIncrements
from luwaves.spectral import make_grid

# parameter sets used across the suite
P1 = dict(epsilon=0.1, beta=0.01)
P2 = dict(epsilon=0.1, beta=0.1)


@pytest.fixture(scope="session")
def tank():
    """Full-resolution tank: 2048 nodes on [-50, 50)."""
    return make_grid(2048, 50.0)


@pytest.fixture(scope="session")
def small_tank():
    return make_grid(256, 50.0)


def heap(grid):
    """Heap of water at rest."""
    return State(np.exp(-grid.x**4), np.zeros(grid.n_points), 0.0)


def mirror(grid, f):
    """f(-x) on the grid (x = 0 is a node)."""
    n = grid.n_points
    return f[(n - np.arange(n)) % n]


class LinearWave:
    """d eta = -u_x dt, d u = -eta_x dt: the shallow-water system linearised about rest."""

    stochastic = False
    linear = None

    def __init__(self, grid):
        self.grid = grid

    def noise_increment(self, inc):
        return None

    def drift(self, fields):
        eta, u = fields
        return -self.grid.deriv(u, 1), -self.grid.deriv(eta, 1)


def dalembert(grid, f, t):
    """Exact linear-wave solution from eta = f, u = 0 at time t."""
    right, left = grid.shift(f, t), grid.shift(f, -t)
    return 0.5 * (right + left), 0.5 * (right - left)


def rk4_linear_wave_errors(dts=(0.2, 0.1, 0.05), t_end=2.0):
    """Max elevation error of drift-only stepping against d'Alembert."""
    g = make_grid(256, 20.0)
    f = np.exp(-(g.x**2))
    exact, _ = dalembert(g, f, t_end)
    errors = []
    for dt in dts:
        tr = simulate(LinearWave(g), State(f, np.zeros(256)), StepConfig(dt, t_end, 10**6), None)
        errors.append(float(np.max(np.abs(tr.final.eta - exact))))
    return errors


def transport_strong_errors(n_paths=100, factors=(32, 16, 8, 4), dt_fine=0.000625, t_end=1.0, eps=0.1):
    """Pathwise errors for d eta + eps (A o dB) eta_x = 0, whose solution is eta0(x - eps A B_t).

    Each coarse path sums consecutive increments of one fine Brownian path, so
    every step size sees the same realisation.  Returns an
    ``(n_paths, len(factors))`` array of max-norm errors at ``t_end``.
    """
    grid = make_grid(512, 50.0)
    eta0 = np.exp(-((grid.x / 2) ** 2))
    model = PureTransport(grid, eps, NoiseModel(amplitude=1.0, wavenumber=0.0, taper_alpha=math.inf))
    n_fine = int(round(t_end / dt_fine))
    errs = np.zeros((n_paths, len(factors)))
    for p in range(n_paths):
        fine = np.random.default_rng(1000 + p).normal(0.0, math.sqrt(dt_fine), n_fine)
        exact = grid.shift(eta0, eps * fine.sum())
        for j, factor in enumerate(factors):
            coarse = fine.reshape(-1, factor).sum(axis=1)
            dt = dt_fine * factor
            tr = simulate(model, State(eta0), StepConfig(dt, coarse.size * dt, coarse.size),
                          PresetIncrements([(b, 0.0) for b in coarse]))
            errs[p, j] = np.max(np.abs(tr.final.eta - exact))
    return errs


def read_blocks(path):
    """Parse a snapshot file into ``{t: array of rows}``."""
    blocks, current = {}, None
    with open(path) as fh:
        for line in fh:
            if line.startswith("# t="):
                current = float(line[4:])
                blocks[current] = []
            elif not line.startswith("#"):
                blocks[current].append([float(v) for v in line.split("\t")])
    return {t: np.array(rows) for t, rows in blocks.items()}


def read_tsv(path):
    """Header names and numeric body of a TSV file."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
    return header, np.loadtxt(path, skiprows=1, ndmin=2)


# ---------------------------------------------------------------- acceptance report

_REPORT = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL summary line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_REPORT, [])

    def record(number, ok, detail):
        lines.append((number, f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
