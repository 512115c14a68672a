"""``key = value`` run configuration: parsing, validation and rendering.

Lines are UTF-8, ``#`` starts a comment, blank lines are ignored.  Every
key has a default, so an empty file is a valid configuration (deterministic
Saint-Venant, ``eps = 0.1``, ``beta = 0.01`` on 2048 nodes over
``[-50, 50)`` with ``dt = 0.005`` up to ``t = 5``).  Unknown keys are
rejected so that typos never fall back silently to defaults.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .integrator import StepConfig
from .kdv import VARIANTS, KdvParams
from .models import FORMS, ModelParams, canonical_kind
from .noise import NoiseModel
from .spectral import Grid

__all__ = ["RunConfig", "parse_config", "load_config", "render_config", "CONFIG_KEYS"]


@dataclass(frozen=True)
class RunConfig:
    # model
    model_kind: str = "saint_venant"
    model_form: str = "primitive"
    model_stochastic: bool = False
    model_epsilon: float = 0.1
    model_beta: float = 0.01
    # noise
    noise_amplitude: float = 0.005
    noise_wavenumber: float = 2.0 * math.pi / 100.0
    noise_taper_alpha: float = 10.0
    noise_filter_additive: bool = True
    noise_upsilon: float = 1.0
    seed: int = 0
    # time
    time_dt: float = 0.005
    time_t_end: float = 5.0
    time_snapshot_every: int = 200
    # grid
    grid_n_points: int = 2048
    grid_half_length: float = 50.0
    grid_dealias: bool = False
    # elliptic solver
    solver_tol: float = 1e-10
    solver_max_iter: int = 200
    # kdv
    kdv_variant: str = "deterministic"
    kdv_soliton_amp: float = 0.1
    kdv_sigma_const: float = 0.0
    kdv_a_h: float = 0.0
    kdv_advection: float = 1.0
    kdv_integrating_factor: bool = True
    # orchestration
    paths: int = 130
    out_dir: str = "out"
    initial: str = "auto"
    workers: int = 0
    retain_paths: bool = False

    # -- derived objects -------------------------------------------------

    def grid(self) -> Grid:
        return Grid(self.grid_n_points, self.grid_half_length, self.grid_dealias)

    def model_params(self) -> ModelParams:
        return ModelParams(self.model_epsilon, self.model_beta, self.model_kind,
                           self.model_form, self.model_stochastic)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.noise_amplitude, self.noise_wavenumber, self.noise_taper_alpha,
                          self.noise_filter_additive, self.noise_upsilon)

    def step_config(self) -> StepConfig:
        return StepConfig(self.time_dt, self.time_t_end, self.time_snapshot_every)

    def kdv_params(self) -> KdvParams:
        return KdvParams(self.noise_upsilon, self.kdv_sigma_const, self.kdv_a_h,
                         self.kdv_soliton_amp, self.kdv_advection)

    def solver_options(self) -> dict:
        return {"solver_tol": self.solver_tol, "solver_max_iter": self.solver_max_iter}

    @property
    def worker_count(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def with_overrides(self, **kw) -> "RunConfig":
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


def _key(name: str) -> str:
    for prefix in ("model", "noise", "time", "grid", "solver", "kdv"):
        if name.startswith(prefix + "_"):
            return prefix + "." + name[len(prefix) + 1:]
    return name


CONFIG_KEYS = {_key(f.name): f for f in fields(RunConfig)}
ALIASES = {"base_seed": "seed"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    t = text.strip().replace("_", "")
    base = 16 if t.lower().startswith("0x") else 10
    return int(t, base)


def _parse_float(text: str) -> float:
    v = float(text.strip())
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


_PARSERS = {bool: _parse_bool, int: _parse_int, float: _parse_float, str: lambda s: s.strip()}
_TYPES = {"bool": bool, "int": int, "float": float, "str": str}


def _field_type(f) -> type:
    t = f.type if isinstance(f.type, type) else _TYPES[str(f.type)]
    return t


def validate(cfg: RunConfig) -> None:
    """Raise :class:`ConfigError` (no line number) on any violated constraint."""
    try:
        cfg.grid()
        cfg.model_params()
        cfg.noise_model()
        cfg.step_config()
        cfg.kdv_params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.kdv_variant not in VARIANTS:
        raise ConfigError(f"kdv.variant must be one of {VARIANTS}")
    if cfg.model_form not in FORMS:
        raise ConfigError(f"model.form must be one of {FORMS}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.paths < 1:
        raise ConfigError("paths must be >= 1")
    if cfg.workers < 0:
        raise ConfigError("workers must be >= 0 (0 means all available cores)")
    if not cfg.solver_tol > 0 or cfg.solver_max_iter < 1:
        raise ConfigError("solver.tol must be > 0 and solver.max_iter >= 1")
    if cfg.initial not in ("auto", "heap", "soliton") and not cfg.initial.startswith("file:"):
        raise ConfigError("initial must be heap, soliton, auto or file:<path>")
    if not cfg.out_dir:
        raise ConfigError("out_dir must not be empty")


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a validated :class:`RunConfig`."""
    values: dict = {}
    seen: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", line=lineno)
        f = CONFIG_KEYS[key]
        try:
            parsed = _PARSERS[_field_type(f)](value)
            if key == "model.kind":
                parsed = canonical_kind(parsed)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", line=lineno) from None
        values[f.name] = parsed
        seen[key] = lineno
    cfg = RunConfig(**values)
    try:
        validate(cfg)
    except ConfigError as exc:
        # attribute the failure to the line that set an offending key when possible
        msg = str(exc)
        for key, lineno in seen.items():
            if key in msg or key.split(".")[-1] in msg:
                raise ConfigError(msg, line=lineno) from None
        raise
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config("")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return parse_config(text)


def render_config(cfg: RunConfig) -> str:
    """Every key with its resolved value, in a form :func:`parse_config` reads back."""
    out = []
    for key, f in CONFIG_KEYS.items():
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, float):
            s = repr(v)
        else:
            s = str(v)
        out.append(f"{key} = {s}")
    return "\n".join(out) + "\n"
