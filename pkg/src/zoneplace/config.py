"""Run configuration: INI-style file with sections, overridable by command-line flags.

Precedence is flag > file > built-in default. ``RunConfig.to_ini`` writes the
fully resolved configuration back out in the same format.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

from .coverage import SensorModel
from .evaluator import EvalConfig
from .filtering import FilterConfig
from .optimizer import DEFAULT_TIME_LIMIT_S
from .pathgen import PathGenConfig


class ConfigError(ValueError):
    pass


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


def _opt_str(text: str):
    return None if text.strip().lower() in ("", "none") else text.strip()


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _cells(text: str):
    text = text.strip()
    if text.lower() in ("", "none", "all"):
        return None
    return tuple(int(t) for t in text.replace(",", " ").split())


def parse_int_range(text: str) -> tuple:
    """'1..8' -> (1, ..., 8); '1,3,5' -> (1, 3, 5)."""
    text = text.strip()
    if ".." in text:
        lo, hi = (int(t) for t in text.split(".."))
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(t) for t in text.replace(",", " ").split())


def parse_float_list(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_PATHGEN = {"num_paths": _opt_int, "block_fraction": float, "door_penalty_m": float, "wall_clearance_m": float,
            "wall_multiplier": float, "max_resample_attempts": int, "penalized_doors": _cells}
_SENSOR = {"ceiling_height_m": float, "diagonal_fov_deg": float, "min_range_m": float, "max_range_m": float,
           "obstacle_height_m": float}
_FILTER = {"dilation_f_m": _opt_float, "per_boundary": _bool}
_EVAL = {"walk_speed_mps": float, "frame_rate_hz": float, "window_w_s": float, "detector_mode": str,
         "eval_source": str, "band_f_m": _opt_float}
_RUN = {"grid": _opt_str, "out": _opt_str, "alternate": _opt_str, "k": int, "k_range": parse_int_range,
        "f_values": parse_float_list, "alpha": float, "seed": int, "eval_seed": _opt_int, "eval_paths": _opt_int,
        "threads": int, "time_limit_s": float, "cell_size_m": float, "pixels_per_meter": float}


@dataclass(frozen=True)
class RunConfig:
    pathgen: PathGenConfig = PathGenConfig()
    sensor: SensorModel = SensorModel()
    filter: FilterConfig = FilterConfig()
    eval: EvalConfig = EvalConfig()
    grid: str | None = None
    out: str | None = None
    alternate: str | None = None  # grid file whose interest cells drive alternate_interests evaluation
    k: int = 4
    k_range: tuple = tuple(range(1, 9))
    f_values: tuple = (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0412, 3.0, 4.0)
    alpha: float = 0.05
    seed: int = 0
    eval_seed: int | None = None  # None -> seed + 1
    eval_paths: int | None = None  # None -> same count as the design trajectories
    threads: int = 1
    time_limit_s: float = DEFAULT_TIME_LIMIT_S
    cell_size_m: float = 0.4
    pixels_per_meter: float = 20.0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.k_range or min(self.k_range) < 1:
            raise ConfigError("k_range must be nonempty with every k >= 1")
        if any(f < 0 for f in self.f_values):
            raise ConfigError("f_values must be >= 0")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.time_limit_s <= 0:
            raise ConfigError("time_limit_s must be positive")
        if self.pathgen.rng_seed != self.seed:
            object.__setattr__(self, "pathgen", replace(self.pathgen, rng_seed=self.seed))

    @property
    def resolved_eval_seed(self) -> int:
        return self.seed + 1 if self.eval_seed is None else self.eval_seed

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["run"] = {f.name: _fmt(getattr(self, f.name)) for f in fields(self)
                     if f.name not in ("pathgen", "sensor", "filter", "eval")}
        for name in ("pathgen", "sensor", "filter", "eval"):
            obj = getattr(self, name)
            # the design seed lives in [run]; pathgen.rng_seed is derived from it
            cp[name] = {f.name: _fmt(getattr(obj, f.name)) for f in fields(obj) if f.name != "rng_seed"}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{key} = {value}" for key, value in cp[section].items())
            lines.append("")
        return "\n".join(lines)


def _section(cp, name, schema, errors):
    out = {}
    if not cp.has_section(name):
        return out
    for key, value in cp[name].items():
        if key not in schema:
            errors.append(f"[{name}] unknown key {key!r}")
            continue
        try:
            out[key] = schema[key](value)
        except ValueError as exc:
            errors.append(f"[{name}] {key}: {exc}")
    return out


def load_config(text: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from INI text (may be None) and flag overrides.

    ``overrides`` maps dotted keys (``"pathgen.block_fraction"``) or plain
    run keys (``"k"``) to already-typed values; None values are ignored.
    """
    cp = configparser.ConfigParser(interpolation=None)
    if text:
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
    known = {"run", "pathgen", "sensor", "filter", "eval"}
    errors = [f"unknown section [{s}]" for s in cp.sections() if s not in known]
    parts = {
        "run": _section(cp, "run", _RUN, errors),
        "pathgen": _section(cp, "pathgen", _PATHGEN, errors),
        "sensor": _section(cp, "sensor", _SENSOR, errors),
        "filter": _section(cp, "filter", _FILTER, errors),
        "eval": _section(cp, "eval", _EVAL, errors),
    }
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, name = key.rpartition(".")
        parts[section or "run"][name] = value
    if errors:
        raise ConfigError("; ".join(errors))
    try:
        seed = parts["run"].get("seed", 0)
        return RunConfig(
            pathgen=PathGenConfig(rng_seed=seed, **parts["pathgen"]),
            sensor=SensorModel(**parts["sensor"]),
            filter=FilterConfig(**parts["filter"]),
            eval=EvalConfig(**parts["eval"]),
            **parts["run"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


__all__ = ["ConfigError", "RunConfig", "load_config", "parse_int_range", "parse_float_list"]
