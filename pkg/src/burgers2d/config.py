"""JSON run configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import ConfigError
from .grid import AlphaConvention
from .stability import DEFAULT_N_THETA

COMMANDS = ("solve", "stability", "convergence", "compare")
PROBLEMS = ("case1a", "case1b", "case1c", "case2", "custom")
SCHEMES = ("compact_adi", "dufort_frankel")

DEFAULTS = {
    "newton_tol": 1e-10,
    "newton_max_iters": 25,
    "alpha_convention": AlphaConvention.HALF_STEP.value,
    "n_theta": DEFAULT_N_THETA,
}


@dataclass
class RunConfig:
    command: str
    problem: Optional[str] = None
    scheme: str = "compact_adi"
    N: Optional[int] = None
    M: Optional[int] = None
    dt: Optional[float] = None
    t_end: Optional[float] = None
    Re: Optional[float] = None
    newton_tol: float = DEFAULTS["newton_tol"]
    newton_max_iters: int = DEFAULTS["newton_max_iters"]
    alpha_convention: str = DEFAULTS["alpha_convention"]
    fx_mode: str = "pde"
    initial: str = "exact"
    snapshot_times: list = field(default_factory=list)
    out_dir: str = "."
    prefix: str = "fields"
    threads: int = 1
    # stability
    c_values: list = field(default_factory=list)
    d_values: list = field(default_factory=list)
    n_theta: int = DEFAULTS["n_theta"]
    # convergence
    grids: list = field(default_factory=list)
    reference_N: Optional[int] = None
    reference_dt: Optional[float] = None
    # compare
    dt_dff: Optional[float] = None
    probes: Optional[list] = None
    # custom problem
    domain: Optional[list] = None
    initial_u: Optional[str] = None
    initial_v: Optional[str] = None
    steady_tol: Optional[float] = None


def _num(d, key, kind=float, required=False, positive=True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"missing required key {key!r}", key)
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key!r} must be a number, got {val!r}", key)
    if kind is int:
        if int(val) != val:
            raise ConfigError(f"{key!r} must be an integer, got {val!r}", key)
        val = int(val)
    else:
        val = float(val)
    if not np.isfinite(val) or (positive and val <= 0):
        raise ConfigError(f"{key!r} must be positive, got {val!r}", key)
    return val


def _choice(d, key, options, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"missing required key {key!r}", key)
        return default
    val = d[key]
    if val not in options:
        raise ConfigError(f"{key!r} must be one of {list(options)}, got {val!r}", key)
    return val


def _linspace(d, prefix):
    lo = _num(d, f"{prefix}_min", positive=False, required=True)
    hi = _num(d, f"{prefix}_max", positive=False, required=True)
    n = _num(d, f"{prefix}_steps", kind=int, required=True)
    if hi < lo:
        raise ConfigError(f"{prefix}_max must be >= {prefix}_min", f"{prefix}_max")
    return list(np.linspace(lo, hi, n)) if n > 1 else [lo]


KNOWN_KEYS = set(RunConfig.__dataclass_fields__) | {
    "c_min", "c_max", "c_steps", "d_min", "d_max", "d_steps"}


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse and validate a JSON config document.

    ``command`` (from the command line) fills in or must match the
    document's ``"command"``.
    """
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(d) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", unknown[0])
    if command is not None:
        if "command" in d and d["command"] != command:
            raise ConfigError(
                f"config command {d['command']!r} does not match {command!r}", "command")
        d = {**d, "command": command}
    cmd = _choice(d, "command", COMMANDS, required=True)
    cfg = RunConfig(command=cmd)

    cfg.n_theta = _num(d, "n_theta", int, default=DEFAULTS["n_theta"])
    if cfg.n_theta < 2:
        raise ConfigError("'n_theta' must be >= 2", "n_theta")
    cfg.out_dir = str(d.get("out_dir", "."))
    cfg.prefix = str(d.get("prefix", "fields"))
    cfg.threads = _num(d, "threads", int, default=1)

    if cmd == "stability":
        if "c_values" in d:
            cfg.c_values = [float(c) for c in d["c_values"]]
        else:
            cfg.c_values = _linspace(d, "c")
        if "d_values" in d:
            cfg.d_values = [float(x) for x in d["d_values"]]
        else:
            cfg.d_values = _linspace(d, "d")
        if not cfg.c_values or not cfg.d_values:
            raise ConfigError("empty stability sweep", "c_values")
        if min(cfg.d_values) < 0:
            raise ConfigError("diffusion numbers must be >= 0", "d_values")
        return cfg

    cfg.problem = _choice(d, "problem", PROBLEMS, required=True)
    cfg.scheme = _choice(d, "scheme", SCHEMES, default="compact_adi")
    cfg.dt = _num(d, "dt", required=True)
    cfg.t_end = _num(d, "t_end", default=0.1 if cfg.problem.startswith("case1") else 0.01)
    if cmd == "convergence":
        grids = d.get("grids")
        if not isinstance(grids, list) or len(grids) < 2:
            raise ConfigError("'grids' must list at least two N values", "grids")
        cfg.grids = [_num({"grids": g}, "grids", int) for g in grids]
        cfg.reference_N = _num(d, "reference_N", int)
        cfg.reference_dt = _num(d, "reference_dt")
    else:
        cfg.N = _num(d, "N", int, required=True)
        cfg.M = _num(d, "M", int, required=True)
    if cfg.problem in ("case2", "custom"):
        cfg.Re = _num(d, "Re", required=True)
    elif "Re" in d:
        cfg.Re = _num(d, "Re")
    cfg.newton_tol = _num(d, "newton_tol", default=DEFAULTS["newton_tol"])
    cfg.newton_max_iters = _num(d, "newton_max_iters", int,
                                default=DEFAULTS["newton_max_iters"])
    cfg.alpha_convention = _choice(d, "alpha_convention",
                                   [a.value for a in AlphaConvention],
                                   default=DEFAULTS["alpha_convention"])
    cfg.fx_mode = _choice(d, "fx_mode", ("pde", "fd4"), default="pde")
    cfg.initial = _choice(d, "initial", ("exact", "alternative"), default="exact")
    if cfg.initial == "alternative" and not cfg.problem.startswith("case1"):
        raise ConfigError("'initial': 'alternative' applies to case-1 problems", "initial")
    snaps = d.get("snapshot_times", [cfg.t_end])
    if not isinstance(snaps, list):
        raise ConfigError("'snapshot_times' must be a list", "snapshot_times")
    cfg.snapshot_times = [_num({"snapshot_times": s}, "snapshot_times", positive=False)
                          for s in snaps]
    if any(s < 0 or s > cfg.t_end * (1 + 1e-12) for s in cfg.snapshot_times):
        raise ConfigError("snapshot times must lie in [0, t_end]", "snapshot_times")
    cfg.dt_dff = _num(d, "dt_dff")
    cfg.steady_tol = _num(d, "steady_tol")
    if "probes" in d:
        pr = d["probes"]
        if not isinstance(pr, list) or not all(
                isinstance(p, list) and len(p) == 2 for p in pr):
            raise ConfigError("'probes' must be a list of [x, y] pairs", "probes")
        cfg.probes = [(float(a), float(b)) for a, b in pr]
    if cfg.problem == "custom":
        dom = d.get("domain")
        if not (isinstance(dom, list) and len(dom) == 4):
            raise ConfigError("custom problem needs 'domain': [x0, xN, y0, yM]", "domain")
        cfg.domain = [float(v) for v in dom]
        for key in ("initial_u", "initial_v"):
            if not isinstance(d.get(key), str):
                raise ConfigError(f"custom problem needs expression {key!r}", key)
        cfg.initial_u, cfg.initial_v = d["initial_u"], d["initial_v"]
    return cfg
