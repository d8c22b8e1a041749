"""YAML run configuration with aggregated validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

import yaml

EXPERIMENTS = ("mms-time", "mms-space", "marsigli", "property-suite")
MODELS = ("nomodel", "leray-alpha", "adaptive")
SCALES = ("desk", "paper")
BACKENDS = ("direct", "iterative", "recycle")


class ConfigError(ValueError):
    """All problems found in one configuration, reported together."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration: " + "; ".join(self.problems))


@dataclass
class RunConfig:
    experiment: str
    Re: float | None = None
    Ri: float | None = None
    Pr: float | None = None
    dt: float | None = None
    t_end: float | None = None
    alpha: float | None = None  # None -> mesh size
    N: int | None = None
    model: str | None = None
    normalize: bool = True
    indicator_arg: str = "extrapolated"
    temperature_wind: str = "extrapolated"
    filter_boundary: str | None = None
    degree: int = 2
    degrees: list | None = None
    h: float | None = None
    hs: list | None = None
    dts: list | None = None
    steps_per_row: int | None = None  # t* = steps_per_row * dt when set
    mesh_role: str | None = None
    nx: int | None = None
    ny: int | None = None
    snapshot_times: list | None = None
    out_dir: str = "runs"
    backend: str | None = None
    tol: float = 1e-10
    scale: str = "desk"
    vtk_refine: bool = False
    defaults_applied: list = field(default_factory=list, compare=False)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_DEFAULTS = {
    "mms-time": {
        "Re": 1.0, "Ri": 1.0, "Pr": 1.0, "t_end": 1.0, "N": 0, "model": "adaptive",
        "dts": [0.25, 0.125, 0.0625, 0.03125], "filter_boundary": "trace", "backend": "direct",
    },
    "mms-space": {
        "Re": 1.0, "Ri": 1.0, "Pr": 1.0, "t_end": 1e-3, "dt": 1e-4, "N": 0, "model": "adaptive",
        "hs": [0.25, 0.125, 0.0625, 0.03125, 0.015625], "degrees": [2, 3],
        "filter_boundary": "trace", "backend": "direct",
    },
    "marsigli": {
        "Re": 1000.0, "Ri": 4.0, "Pr": 1.0, "t_end": 8.0, "N": 1, "model": "adaptive",
        "snapshot_times": [2.0, 4.0, 6.0, 8.0], "filter_boundary": "homogeneous",
        "backend": "recycle",
    },
    "property-suite": {},
}
_SCALE_DEFAULTS = {
    ("mms-time", "desk"): {"h": 1 / 64},
    ("mms-time", "paper"): {"h": 1 / 128},
}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _check_type(name, value, problems):
    t = _TYPES[name]
    if value is None:
        return
    if "bool" in t and not isinstance(value, bool):
        problems.append(f"{name}: expected a boolean, got {value!r}")
    elif ("float" in t or "int" in t) and "bool" not in t:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{name}: expected a number, got {value!r}")
        elif "int" in t and "float" not in t and int(value) != value:
            problems.append(f"{name}: expected an integer, got {value!r}")
    elif "list" in t and not isinstance(value, list):
        problems.append(f"{name}: expected a list, got {value!r}")
    elif t.startswith("str") and not isinstance(value, str):
        problems.append(f"{name}: expected a string, got {value!r}")


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate YAML text; every violation is reported at once."""
    try:
        raw = yaml.safe_load(text) if text and text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError([f"malformed YAML: {exc}"]) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping"])
    raw = dict(raw)
    raw.pop("defaults_applied", None)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    problems = []
    if "experiment" not in raw:
        problems.append(f"missing required key 'experiment' (one of {', '.join(EXPERIMENTS)})")
    elif raw["experiment"] not in EXPERIMENTS:
        problems.append(f"experiment must be one of {EXPERIMENTS}, got {raw['experiment']!r}")
    problems += [f"unknown key {k!r}" for k in sorted(set(raw) - set(_TYPES))]
    good = {}
    for k in sorted(set(raw) & set(_TYPES)):
        n_before = len(problems)
        _check_type(k, raw[k], problems)
        if len(problems) == n_before:
            good[k] = raw[k]
    # keep validating what is well typed so that all problems surface together
    exp = good.get("experiment")
    good["experiment"] = exp if exp in EXPERIMENTS else "property-suite"
    cfg = RunConfig(**good)
    if not problems:
        defaults = dict(_DEFAULTS[exp])
        defaults.update(_SCALE_DEFAULTS.get((exp, cfg.scale), {}))
        if exp == "marsigli" and cfg.mesh_role is None:
            cfg.mesh_role = "fine" if cfg.scale == "paper" else "coarse"
            cfg.defaults_applied.append("mesh_role")
        if exp == "marsigli" and "dt" not in raw:
            defaults["dt"] = 0.025 if cfg.mesh_role == "fine" else 0.02
        for k, v in defaults.items():
            if getattr(cfg, k) is None:
                setattr(cfg, k, v)
                cfg.defaults_applied.append(k)
    problems += _validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _validate(cfg: RunConfig) -> list:
    problems = []
    for k in ("Re", "Ri", "Pr", "dt", "t_end", "alpha", "h", "tol"):
        v = getattr(cfg, k)
        if v is not None and not v > 0:
            problems.append(f"{k} must be positive, got {v}")
    if cfg.N is not None and cfg.N < 0:
        problems.append(f"N must be nonnegative, got {cfg.N}")
    if cfg.model is not None and cfg.model not in MODELS:
        problems.append(f"model must be one of {MODELS}, got {cfg.model!r}")
    if cfg.scale not in SCALES:
        problems.append(f"scale must be one of {SCALES}, got {cfg.scale!r}")
    if cfg.backend is not None and cfg.backend not in BACKENDS:
        problems.append(f"backend must be one of {BACKENDS}, got {cfg.backend!r}")
    if cfg.degree not in (2, 3):
        problems.append(f"degree must be 2 or 3, got {cfg.degree}")
    if cfg.degrees is not None and any(d not in (2, 3) for d in cfg.degrees):
        problems.append(f"degrees must be drawn from (2, 3), got {cfg.degrees}")
    if cfg.mesh_role is not None and cfg.mesh_role not in ("coarse", "fine"):
        problems.append(f"mesh_role must be coarse or fine, got {cfg.mesh_role!r}")
    if cfg.indicator_arg not in ("extrapolated", "current"):
        problems.append(f"indicator_arg must be extrapolated or current, got {cfg.indicator_arg!r}")
    if cfg.temperature_wind not in ("extrapolated", "updated"):
        problems.append(f"temperature_wind must be extrapolated or updated, got {cfg.temperature_wind!r}")
    if cfg.filter_boundary is not None and cfg.filter_boundary not in ("homogeneous", "trace"):
        problems.append(f"filter_boundary must be homogeneous or trace, got {cfg.filter_boundary!r}")
    for k in ("dts", "hs", "snapshot_times"):
        v = getattr(cfg, k)
        if v is not None:
            if not v or any(isinstance(x, bool) or not isinstance(x, (int, float)) or x <= 0 for x in v):
                problems.append(f"{k} must be a nonempty list of positive numbers")
    for k in ("nx", "ny", "steps_per_row"):
        v = getattr(cfg, k)
        if v is not None and v < 1:
            problems.append(f"{k} must be at least 1, got {v}")
    if cfg.experiment == "marsigli" and cfg.dt and cfg.t_end and cfg.dt > 0 and cfg.t_end > 0:
        m = cfg.t_end / cfg.dt
        if abs(m - round(m)) > 1e-9 * m:
            problems.append(f"t_end={cfg.t_end} is not a multiple of dt={cfg.dt}")
    return problems


def serialize_config(cfg: RunConfig) -> str:
    d = cfg.to_dict()
    d.pop("defaults_applied")
    return yaml.safe_dump(d, sort_keys=True)
