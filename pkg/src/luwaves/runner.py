"""Run orchestration and output files.

Every command writes into a scratch directory next to ``out_dir`` and
renames it into place once all files are complete, so a reader never sees a
half-written result.  When a numerical failure stops a run, the files
produced so far are still published together with a ``PARTIAL`` marker
describing the failure.
"""

from __future__ import annotations

import math
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import RunConfig, render_config
from .diagnostics import DIAGNOSTICS_HEADER, diagnostics_row, ensemble_stats, fmt_float, format_tsv
from .errors import ConfigError, NumericalError
from .integrator import simulate
from .kdv import KdvModel, soliton, wadati_shift_check
from .models import State, canonical_kind, make_model
from .noise import RecordingStream, RngStream, derive_seed

__all__ = [
    "RunResult",
    "initial_state",
    "run_path",
    "run_single",
    "run_ensemble",
    "run_compare",
    "run_kdv",
    "snapshots_text",
    "stats_filename",
]

PARTIAL_MARKER = "PARTIAL"


@dataclass
class RunResult:
    """Outcome of a command: exit status (0 or 3), output directory, optional message."""

    status: int
    out_dir: str
    message: str = ""


# ---------------------------------------------------------------- initial data


def _read_initial_file(path: str, grid):
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read initial data {path!r}: {exc}") from None
    if data.shape[0] != grid.n_points or data.shape[1] not in (2, 3):
        raise ConfigError(
            f"initial data {path!r} must have {grid.n_points} rows of 'x eta [u]', got shape {data.shape}"
        )
    if np.max(np.abs(data[:, 0] - grid.x)) > 1e-9 * grid.half_length:
        raise ConfigError(f"initial data {path!r} is not sampled on the configured grid")
    eta = np.ascontiguousarray(data[:, 1])
    u = np.ascontiguousarray(data[:, 2]) if data.shape[1] == 3 else np.zeros(grid.n_points)
    return eta, u


def initial_state(cfg: RunConfig, grid, kdv: bool = False) -> State:
    """Initial condition named by ``cfg.initial``.

    ``heap`` is ``eta = exp(-x^4)`` at rest; ``soliton`` is the KdV solitary
    wave (for the shallow-water models it is launched with ``u = eta``, the
    right-going long-wave relation); ``auto`` selects ``soliton`` for KdV and
    ``heap`` otherwise.
    """
    choice = cfg.initial
    if choice == "auto":
        choice = "soliton" if kdv else "heap"
    if choice == "heap":
        eta, u = np.exp(-grid.x**4), np.zeros(grid.n_points)
    elif choice == "soliton":
        eta = soliton(cfg.kdv_soliton_amp, grid.x, 0.0, cfg.kdv_advection)
        u = eta.copy()
    else:
        eta, u = _read_initial_file(cfg.initial[len("file:"):], grid)
    if kdv:
        return State(eta, None, 0.0)
    if cfg.model_form == "conservative":
        u = (1.0 + cfg.model_epsilon * eta) * u
    return State(eta, u, 0.0)


# ---------------------------------------------------------------- file helpers


def _velocity_column(state: State, cfg: RunConfig):
    if state.vel is None:
        return None
    if cfg.model_form == "conservative":
        return state.vel / (1.0 + cfg.model_epsilon * state.eta)
    return state.vel


def snapshots_text(states, grid, cfg: RunConfig) -> str:
    """``# t=<value>`` blocks with rows ``x eta u`` (``x eta`` for KdV)."""
    has_u = states and states[0].vel is not None
    cols = "x\teta\tu" if has_u else "x\teta"
    out = [f"# columns: {cols}"]
    x = grid.x
    for s in states:
        out.append(f"# t={fmt_float(s.t)}")
        u = _velocity_column(s, cfg)
        if u is None:
            out.extend(f"{fmt_float(a)}\t{fmt_float(b)}" for a, b in zip(x, s.eta))
        else:
            out.extend(f"{fmt_float(a)}\t{fmt_float(b)}\t{fmt_float(c)}" for a, b, c in zip(x, s.eta, u))
    return "\n".join(out) + "\n"


def stats_filename(t: float) -> str:
    return f"stats_t{t:.10g}.tsv"


def _meta_text(cfg: RunConfig, command: str, extra: dict | None = None) -> str:
    lines = [f"# luwaves {__version__}", f"# command: {command}"]
    if command != "kdv":
        stokes = cfg.model_params().stokes_number
        lines.append(f"# stokes_number: {'inf' if stokes is None else fmt_float(stokes)}")
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {v}")
    return "\n".join(lines) + "\n" + render_config(cfg)


class _Output:
    """Scratch directory published atomically with :meth:`commit`."""

    def __init__(self, out_dir: str, force: bool):
        self.out_dir = os.path.abspath(out_dir)
        if os.path.exists(self.out_dir) and not force:
            raise ConfigError(f"output directory {out_dir!r} exists; pass --force to replace it")
        parent = os.path.dirname(self.out_dir)
        os.makedirs(parent, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".luwaves-", dir=parent)

    def write(self, name: str, text: str):
        path = os.path.join(self.tmp, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    def commit(self):
        old = None
        if os.path.exists(self.out_dir):
            old = self.out_dir + f".old-{os.getpid()}"
            os.rename(self.out_dir, old)
        os.rename(self.tmp, self.out_dir)
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)

    def abort(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


# ---------------------------------------------------------------- single path


def _build_model(cfg: RunConfig, grid, kind: str | None = None):
    params = cfg.model_params()
    if kind is not None:
        params = replace(params, kind=kind)
    return params, make_model(grid, params, cfg.noise_model(), **cfg.solver_options())


def run_path(cfg: RunConfig, path_index: int | None = None, kind: str | None = None):
    """Simulate one shallow-water path; returns ``(trajectory, error_or_None)``.

    The path seed is ``cfg.seed`` itself for single runs and the derived
    seed of ``path_index`` inside an ensemble.
    """
    grid = cfg.grid()
    params, model = _build_model(cfg, grid, kind)
    seed = cfg.seed if path_index is None else derive_seed(cfg.seed, path_index)
    init = initial_state(cfg, grid)
    partial = {"states": [], "diagnostics": []}

    def diagnose(s):
        row = diagnostics_row(s, params, grid)
        partial["states"].append(s)
        partial["diagnostics"].append(row)
        return row

    try:
        traj = simulate(model, init, cfg.step_config(), RngStream(seed), diagnose)
    except NumericalError as exc:
        return partial, exc
    return {"states": traj.states, "diagnostics": traj.diagnostics}, None


def _diag_text(rows) -> str:
    return format_tsv(DIAGNOSTICS_HEADER, [r.as_tuple() for r in rows])


def run_single(cfg: RunConfig, force: bool = False) -> RunResult:
    grid = cfg.grid()
    out = _Output(cfg.out_dir, force)
    try:
        traj, err = run_path(cfg)
        out.write("snapshots.tsv", snapshots_text(traj["states"], grid, cfg))
        out.write("diagnostics.tsv", _diag_text(traj["diagnostics"]))
        out.write("run.meta", _meta_text(cfg, "run", {"seed": cfg.seed}))
        if err is not None:
            out.write(PARTIAL_MARKER, f"{err}\n")
    except BaseException:
        out.abort()
        raise
    out.commit()
    return RunResult(3 if err else 0, out.out_dir, str(err) if err else "")


# ---------------------------------------------------------------- ensemble


def _ensemble_worker(args):
    cfg, i = args
    traj, err = run_path(cfg, i)
    etas = [s.eta for s in traj["states"]] if err is None else None
    final = traj["diagnostics"][-1] if traj["diagnostics"] else None
    first = traj["diagnostics"][0] if traj["diagnostics"] else None
    states = traj["states"] if (cfg.retain_paths and err is None) else None
    return i, etas, first, final, (str(err) if err else None), states


def _map_paths(cfg: RunConfig, n: int):
    jobs = [(cfg, i) for i in range(n)]
    workers = min(cfg.worker_count, n)
    if workers <= 1:
        return [_ensemble_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so outputs never depend on completion order
        return list(pool.map(_ensemble_worker, jobs))


def run_ensemble(cfg: RunConfig, force: bool = False) -> RunResult:
    """Run ``cfg.paths`` independent paths and write per-snapshot statistics."""
    grid = cfg.grid()
    out = _Output(cfg.out_dir, force)
    try:
        results = _map_paths(cfg, cfg.paths)
        ok = [r for r in results if r[4] is None]
        failed = [r for r in results if r[4] is not None]
        times = [i * cfg.time_dt for i in _snapshot_steps(cfg)]
        if len(ok) >= 2:
            for j, t in enumerate(times):
                st = ensemble_stats([r[1][j] for r in ok])
                rows = zip(grid.x, st.mean_eta, st.std_eta)
                out.write(stats_filename(t), format_tsv(("x", "mean_eta", "std_eta"), rows))
        header = ("path", "seed", "status") + tuple(f"final_{h}" for h in DIAGNOSTICS_HEADER) + ("mass_drift",)
        lines = ["\t".join(header)]
        for i, _, first, final, err, _ in results:
            vals = final.as_tuple() if final is not None else (math.nan,) * len(DIAGNOSTICS_HEADER)
            drift = final.mass - first.mass if (final is not None and first is not None) else math.nan
            status = "ok" if err is None else "failed"
            lines.append("\t".join([str(i), str(derive_seed(cfg.seed, i)), status]
                                   + [fmt_float(v) for v in vals] + [fmt_float(drift)]))
        out.write("paths_summary.tsv", "\n".join(lines) + "\n")
        if cfg.retain_paths:
            for i, _, _, _, err, states in results:
                if states is not None:
                    out.write(os.path.join("paths", f"path_{i:04d}.tsv"), snapshots_text(states, grid, cfg))
        out.write("run.meta", _meta_text(cfg, "ensemble", {"paths": cfg.paths}))
        message = ""
        if failed or len(ok) < 2:
            parts = [f"path {r[0]}: {r[4]}" for r in failed]
            if len(ok) < 2:
                parts.append(f"only {len(ok)} successful path(s); statistics need at least 2")
            message = "\n".join(parts)
            out.write(PARTIAL_MARKER, message + "\n")
    except BaseException:
        out.abort()
        raise
    out.commit()
    return RunResult(3 if message else 0, out.out_dir, message)


def _snapshot_steps(cfg: RunConfig):
    n = cfg.step_config().n_steps
    steps = [i for i in range(0, n + 1) if i % cfg.time_snapshot_every == 0]
    if steps[-1] != n:
        steps.append(n)
    return steps


# ---------------------------------------------------------------- compare


def run_compare(cfg: RunConfig, kinds, force: bool = False) -> RunResult:
    """Run several model kinds on one configuration and write aligned columns."""
    if not kinds:
        raise ConfigError("compare needs at least one model kind")
    labels = [k.strip().lower() for k in kinds]
    try:
        canon = [canonical_kind(k) for k in labels]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.model_form == "conservative" and any(c != "saint_venant" for c in canon):
        raise ConfigError("conservative form is only available for saint_venant")
    grid = cfg.grid()
    out = _Output(cfg.out_dir, force)
    try:
        runs = []
        errors = []
        for label, kind in zip(labels, canon):
            traj, err = run_path(cfg, kind=kind)
            runs.append(traj["states"])
            if err is not None:
                errors.append(f"{label}: {err}")
        n_common = min(len(r) for r in runs)
        lines = ["# columns: x\t" + "\t".join(f"eta_{lab}" for lab in labels)]
        for j in range(n_common):
            lines.append(f"# t={fmt_float(runs[0][j].t)}")
            cols = [grid.x] + [r[j].eta for r in runs]
            lines.extend("\t".join(fmt_float(v) for v in row) for row in zip(*cols))
        out.write("compare.tsv", "\n".join(lines) + "\n")
        out.write("run.meta", _meta_text(cfg, "compare", {"kinds": ",".join(labels)}))
        if errors:
            out.write(PARTIAL_MARKER, "\n".join(errors) + "\n")
    except BaseException:
        out.abort()
        raise
    out.commit()
    return RunResult(3 if errors else 0, out.out_dir, "\n".join(errors))


# ---------------------------------------------------------------- kdv


def run_kdv(cfg: RunConfig, force: bool = False) -> RunResult:
    """KdV run; the transport variant also writes its Brownian path and a Wadati check."""
    grid = cfg.grid()
    kp = cfg.kdv_params()
    model = KdvModel(grid, kp, cfg.kdv_variant, cfg.kdv_integrating_factor)
    init = initial_state(cfg, grid, kdv=True)
    rng = RecordingStream(RngStream(cfg.seed))
    step = cfg.step_config()
    err = None
    rows = []
    states = []

    def diagnose(s):
        rows.append((s.t, float(grid.integrate(s.eta)), float(grid.integrate(s.eta**2))))
        states.append(s)

    try:
        traj = simulate(model, init, step, rng, diagnose)
    except NumericalError as exc:
        err, traj = exc, None
    out = _Output(cfg.out_dir, force)
    try:
        out.write("snapshots.tsv", snapshots_text(states, grid, cfg))
        out.write("diagnostics.tsv", format_tsv(("t", "mass", "l2"), rows))
        if model.stochastic and traj is not None:
            out.write("brownian.tsv", format_tsv(("t", "b1"), [(s.t, rng.b1[i]) for s, i in zip(traj.states, traj.steps)]))
            if np.ndim(kp.sigma0) == 0:
                det = simulate(KdvModel(grid, kp, "deterministic", cfg.kdv_integrating_factor), init, step, None)
                res = wadati_shift_check(traj, det, kp.sigma0, [rng.b1[i] for i in traj.steps], grid, kp.upsilon)
                wrows = [(k, e) for k, e in sorted(res.errors.items(), reverse=True)]
                out.write("wadati.tsv", format_tsv(("kappa", "max_error"), wrows)
                          + f"# best_kappa={fmt_float(res.kappa)}\n")
        out.write("run.meta", _meta_text(cfg, "kdv", {"seed": cfg.seed}))
        if err is not None:
            out.write(PARTIAL_MARKER, f"{err}\n")
    except BaseException:
        out.abort()
        raise
    out.commit()
    return RunResult(3 if err else 0, out.out_dir, str(err) if err else "")
