"""Run configuration: `[section] key = value` text format with validation,
defaults, environment overrides and a round-trip renderer."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

DEFAULT_SCHEDULE = (0.2, 0.1, 0.05, 0.02, 0.01, 0.005)

ENV_PREFIX = "SPGS_"


class ConfigError(ValueError):
    """Configuration diagnostic with a line number where applicable."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


@dataclass
class RunConfig:
    mu: float = 1.0
    q: float = 4.0
    critical_weight: float = 0.0
    R: float = 30.0
    n: int = 3000
    tol: float = 1e-8
    max_iter: int = 80
    damping_floor: float = 1e-4
    clip_budget: float = 1e-8
    lambdas: tuple[float, ...] = DEFAULT_SCHEDULE
    directory: str = "out"
    emit_profiles: bool = False
    seed: int = 12345


# (section, key) -> (attribute, parser)
def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_lambdas(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.replace(",", " ").split())


_SCHEMA: dict[tuple[str, str], tuple[str, object]] = {
    ("nonlinearity", "mu"): ("mu", float),
    ("nonlinearity", "q"): ("q", float),
    ("nonlinearity", "critical_weight"): ("critical_weight", float),
    ("grid", "R"): ("R", float),
    ("grid", "n"): ("n", int),
    ("solver", "tol"): ("tol", float),
    ("solver", "max_iter"): ("max_iter", int),
    ("solver", "damping_floor"): ("damping_floor", float),
    ("solver", "clip_budget"): ("clip_budget", float),
    ("schedule", "lambdas"): ("lambdas", _parse_lambdas),
    ("output", "directory"): ("directory", str),
    ("output", "emit_profiles"): ("emit_profiles", _parse_bool),
    ("output", "seed"): ("seed", int),
}

_SECTIONS = sorted({s for s, _ in _SCHEMA})


def validate(cfg: RunConfig) -> RunConfig:
    """Check every field against the preconditions of the consuming modules."""
    if not cfg.mu > 0:
        raise ConfigError(
            f"mu = {cfg.mu} out of range: the existence threshold requires mu > 0"
        )
    if not 2.0 < cfg.q < 6.0:
        raise ConfigError(
            f"q = {cfg.q} out of range: the subcritical exponent must lie in (2, 6)"
        )
    if not 0.0 <= cfg.critical_weight <= 1.0:
        raise ConfigError(
            f"critical_weight = {cfg.critical_weight} out of range [0, 1]"
        )
    if not cfg.R > 0:
        raise ConfigError(f"grid R = {cfg.R} must be positive")
    if cfg.n < 16:
        raise ConfigError(f"grid n = {cfg.n} must be at least 16")
    if not cfg.tol > 0:
        raise ConfigError(f"solver tol = {cfg.tol} must be positive")
    if cfg.max_iter < 1:
        raise ConfigError(f"solver max_iter = {cfg.max_iter} must be at least 1")
    if not 0.0 < cfg.damping_floor <= 1.0:
        raise ConfigError(
            f"solver damping_floor = {cfg.damping_floor} must lie in (0, 1]"
        )
    if cfg.clip_budget < 0:
        raise ConfigError(f"solver clip_budget = {cfg.clip_budget} must be nonnegative")
    if not cfg.lambdas:
        raise ConfigError("schedule must contain at least one coupling value")
    if any(x < 0 for x in cfg.lambdas):
        raise ConfigError("schedule entries must be nonnegative")
    if any(b >= a for a, b in zip(cfg.lambdas, cfg.lambdas[1:])):
        raise ConfigError("schedule must be strictly decreasing")
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse `[section] key = value` text into a validated RunConfig."""
    cfg = RunConfig()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            attr, parser = _SCHEMA[(section, key)]
        except KeyError:
            raise ConfigError(f"unknown key {key!r} in section [{section}]", line=lineno)
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}", line=lineno)
        cfg = replace(cfg, **{attr: parsed})
    try:
        return validate(cfg)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None


def apply_env_overrides(cfg: RunConfig, environ=None) -> RunConfig:
    """Apply SPGS_<SECTION>_<KEY> environment variable overrides."""
    environ = os.environ if environ is None else environ
    for (section, key), (attr, parser) in _SCHEMA.items():
        name = f"{ENV_PREFIX}{section.upper()}_{key.upper()}"
        if name in environ:
            try:
                cfg = replace(cfg, **{attr: parser(environ[name])})
            except ValueError as exc:
                raise ConfigError(f"bad value in {name}: {exc}")
    return validate(cfg)


def render_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(render(cfg)) == cfg."""
    lines = [
        "[nonlinearity]",
        f"mu = {cfg.mu!r}",
        f"q = {cfg.q!r}",
        f"critical_weight = {cfg.critical_weight!r}",
        "",
        "[grid]",
        f"R = {cfg.R!r}",
        f"n = {cfg.n}",
        "",
        "[solver]",
        f"tol = {cfg.tol!r}",
        f"max_iter = {cfg.max_iter}",
        f"damping_floor = {cfg.damping_floor!r}",
        f"clip_budget = {cfg.clip_budget!r}",
        "",
        "[schedule]",
        "lambdas = " + ", ".join(repr(x) for x in cfg.lambdas),
        "",
        "[output]",
        f"directory = {cfg.directory}",
        f"emit_profiles = {cfg.emit_profiles}",
        f"seed = {cfg.seed}",
        "",
    ]
    return "\n".join(lines)
