"""Experiment configuration: flat ``key = value`` files with full defaults.

The file format is one assignment per line, ``#`` starts a comment, blank
lines are ignored, and dotted keys reach nested sections (``tcl.R = 2``).
Every field defaults to the case-study configuration, so an empty file is a
valid, complete experiment. Validation is one pass: every violation is
reported with its line number rather than stopping at the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .tcl import TclParams

__all__ = ["ExperimentConfig", "ConfigError", "validate_config", "parse_config_text"]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment run depends on."""

    tcl: TclParams = field(default_factory=TclParams)
    gamma: float = 100.0          # state kernel bandwidth
    lam: float = 200.0            # embedding ridge level (config key: lambda)
    lambda_norm: float = 200.0    # ridge level for value-function norms
    joint_kernel: str = "additive"  # state/action coupling: additive or product
    m: int = 7000                 # transition samples
    grid_lo: float = 18.0
    grid_hi: float = 23.0
    grid_count: int = 35
    horizon_minutes: float = 90.0
    epsilons: tuple[float, ...] = (0.0, 0.02, 0.05, 0.1)
    seed: int = 0
    clipping: bool = True
    output_dir: str = "out"
    mc_probes: tuple[float, ...] = (20.0, 20.5, 21.0)
    mc_ntraj: int = 10000

    @property
    def horizon(self) -> int:
        """Number of stages L implied by the horizon length and step size."""
        return int(round(self.horizon_minutes / (60.0 * self.tcl.h)))


class ConfigError(ValueError):
    """Invalid configuration; ``diagnostics`` lists every violation found."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def _parse_float(text: str) -> float:
    value = float(text)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("must be finite")
    return value


def _parse_int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ValueError("must be an integer") from None


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("on", "true", "1", "yes"):
        return True
    if lowered in ("off", "false", "0", "no"):
        return False
    raise ValueError("must be one of on/off/true/false/1/0/yes/no")


def _parse_float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if parts == [""]:
        raise ValueError("must be a comma-separated list of numbers")
    return tuple(_parse_float(p) for p in parts)


def _parse_joint_kernel(text: str) -> str:
    lowered = text.strip().lower()
    if lowered not in ("additive", "product"):
        raise ValueError("must be 'additive' or 'product'")
    return lowered


# key -> (parser, config field, tcl field or None)
_KEYS = {
    "gamma": (_parse_float, "gamma", None),
    "lambda": (_parse_float, "lam", None),
    "lambda_norm": (_parse_float, "lambda_norm", None),
    "joint_kernel": (_parse_joint_kernel, "joint_kernel", None),
    "m": (_parse_int, "m", None),
    "grid_lo": (_parse_float, "grid_lo", None),
    "grid_hi": (_parse_float, "grid_hi", None),
    "grid_count": (_parse_int, "grid_count", None),
    "horizon_minutes": (_parse_float, "horizon_minutes", None),
    "epsilons": (_parse_float_list, "epsilons", None),
    "seed": (_parse_int, "seed", None),
    "clipping": (_parse_bool, "clipping", None),
    "output_dir": (str, "output_dir", None),
    "mc.probes": (_parse_float_list, "mc_probes", None),
    "mc.ntraj": (_parse_int, "mc_ntraj", None),
    "tcl.R": (_parse_float, None, "R"),
    "tcl.C": (_parse_float, None, "C"),
    "tcl.theta": (_parse_float, None, "theta"),
    "tcl.h": (_parse_float, None, "h"),
    "tcl.P": (_parse_float, None, "P"),
    "tcl.eta": (_parse_float, None, "eta"),
    "tcl.noise_std": (_parse_float, None, "noise_std"),
    "tcl.safe_lo": (_parse_float, None, "safe_lo"),
    "tcl.safe_hi": (_parse_float, None, "safe_hi"),
}


def parse_config_text(text: str, source: str = "config") -> ExperimentConfig:
    """Parse and validate configuration text; see ``validate_config``."""
    diagnostics: list[str] = []
    top: dict[str, object] = {}
    tcl_over: dict[str, float] = {}
    where: dict[str, int] = {}  # key -> line it was set on, for cross checks

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            diagnostics.append(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _KEYS:
            diagnostics.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        if key in where:
            diagnostics.append(f"{source}:{lineno}: duplicate key {key!r} (first set on line {where[key]})")
            continue
        where[key] = lineno
        parser, cfg_field, tcl_field = _KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            diagnostics.append(f"{source}:{lineno}: {key}: {exc}")
            continue
        if tcl_field is not None:
            tcl_over[tcl_field] = parsed
        else:
            top[cfg_field] = parsed

    def loc(key: str) -> str:
        return f"{source}:{where[key]}: " if key in where else f"{source}: "

    try:
        tcl = replace(TclParams(), **tcl_over)
    except ValueError as exc:
        keys = ", ".join(f"tcl.{k}" for k in sorted(tcl_over))
        diagnostics.append(f"{source}: invalid tcl parameters ({keys}): {exc}")
        tcl = TclParams()
    config = ExperimentConfig(tcl=tcl, **top)

    for key, positive in (("gamma", config.gamma), ("lambda", config.lam),
                          ("lambda_norm", config.lambda_norm)):
        if not positive > 0:
            diagnostics.append(f"{loc(key)}{key} must be positive, got {positive}")
    if config.m < 1:
        diagnostics.append(f"{loc('m')}m must be at least 1, got {config.m}")
    if config.grid_count < 2:
        diagnostics.append(f"{loc('grid_count')}grid_count must be at least 2, got {config.grid_count}")
    if not config.grid_lo < config.grid_hi:
        diagnostics.append(
            f"{loc('grid_lo')}grid bounds must satisfy grid_lo < grid_hi, "
            f"got [{config.grid_lo}, {config.grid_hi}]"
        )
    if config.seed < 0:
        diagnostics.append(f"{loc('seed')}seed must be nonnegative, got {config.seed}")
    if config.mc_ntraj < 1:
        diagnostics.append(f"{loc('mc.ntraj')}mc.ntraj must be at least 1, got {config.mc_ntraj}")
    if not config.mc_probes:
        diagnostics.append(f"{loc('mc.probes')}mc.probes must name at least one state")

    eps = config.epsilons
    if not eps:
        diagnostics.append(f"{loc('epsilons')}epsilons must not be empty")
    else:
        if any(e < 0 for e in eps):
            diagnostics.append(f"{loc('epsilons')}epsilons must be nonnegative, got {list(eps)}")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            diagnostics.append(f"{loc('epsilons')}epsilons must be strictly increasing, got {list(eps)}")

    if config.horizon_minutes > 0 and tcl.h > 0:
        steps = config.horizon_minutes / (60.0 * tcl.h)
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            diagnostics.append(
                f"{loc('horizon_minutes')}horizon_minutes = {config.horizon_minutes} is not a "
                f"whole positive number of steps of {60.0 * tcl.h} minutes"
            )
    else:
        diagnostics.append(
            f"{loc('horizon_minutes')}horizon_minutes must be positive, got {config.horizon_minutes}"
        )

    if diagnostics:
        raise ConfigError(diagnostics)
    return config


def validate_config(path) -> ExperimentConfig:
    """Load ``path``, apply defaults for omitted keys, and validate everything.

    Returns the parsed configuration or raises ``ConfigError`` whose
    ``diagnostics`` carry one line-referenced message per violation.
    """
    text = Path(path).read_text(encoding="utf-8")
    return parse_config_text(text, source=str(path))
