"""Run configuration: plain-text `key = value` files with strict validation.

Unknown keys are rejected; missing keys take the defaults below.  The
serialize/parse pair round-trips exactly, and a fixed seed makes every CSV
artifact byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .elements import LameParams
from .errors import ParseError, ValidationError
from .evolution import EvolutionConfig
from .geometry import GeometryConfig


@dataclass(frozen=True)
class RunConfig:
    """Full experiment description shared by the CLI and the service."""

    n: int = 8
    inner_lo: float = 0.25
    inner_hi: float = 0.75
    mu: float = 1.0
    lam: float = 1.0
    mu_thin: float = 1.0
    lam_thin: float = 1.0
    dt: float = 0.05
    t_final: float = 20.0
    theta: float = 0.5
    sample_every: int = 1
    alpha_max: float = 0.1
    alpha_decades: int = 8
    betas: tuple[float, ...] = (0.7, 1.7, 3.1, 5.3, 8.9)
    beta_margin: float = 0.5
    n_data: int = 3
    spectrum_k: int = 10
    seed: int = 1234
    outdir: str = "out"

    # -- derived sub-configs -------------------------------------------------

    def geometry(self) -> GeometryConfig:
        return GeometryConfig(
            n=self.n,
            inner_lo=(self.inner_lo,) * 3,
            inner_hi=(self.inner_hi,) * 3,
        )

    def material(self) -> LameParams:
        return LameParams(mu=self.mu, lam=self.lam,
                          mu_thin=self.mu_thin, lam_thin=self.lam_thin)

    def evolution(self) -> EvolutionConfig:
        return EvolutionConfig(dt=self.dt, t_final=self.t_final,
                               theta=self.theta, sample_every=self.sample_every)

    def alphas(self) -> np.ndarray:
        return self.alpha_max * np.power(10.0, -np.arange(self.alpha_decades, dtype=float))

    def validate(self) -> None:
        self.geometry().validate()
        self.material().validate()
        self.evolution().validate()
        if self.alpha_decades < 1:
            raise ValidationError("alpha_decades", "need at least one ladder decade")
        if self.alpha_max <= 0:
            raise ValidationError("alpha_max", "ladder top must be positive")
        if self.beta_margin <= 0:
            raise ValidationError("beta_margin", "margin must be positive")
        if not self.betas:
            raise ValidationError("betas", "need at least one frequency")
        if self.n_data < 1:
            raise ValidationError("n_data", "need at least one data vector")
        if self.spectrum_k < 1:
            raise ValidationError("spectrum_k", "need at least one eigenpair")


_CONVERTERS = {
    "n": int,
    "inner_lo": float,
    "inner_hi": float,
    "mu": float,
    "lam": float,
    "mu_thin": float,
    "lam_thin": float,
    "dt": float,
    "t_final": float,
    "theta": float,
    "sample_every": int,
    "alpha_max": float,
    "alpha_decades": int,
    "betas": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
    "beta_margin": float,
    "n_data": int,
    "spectrum_k": int,
    "seed": int,
    "outdir": str,
}


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines (# comments allowed); validates the result."""
    values: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(line_no, f"expected 'key = value', got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONVERTERS:
            raise ValidationError(key, "unknown configuration key")
        if key in values:
            raise ParseError(line_no, f"duplicate key {key!r}")
        try:
            values[key] = _CONVERTERS[key](val)
        except (TypeError, ValueError) as exc:
            raise ParseError(line_no, f"cannot parse value for {key!r}: {exc}") from exc
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    """Text form of a config; parse(serialize(cfg)) == cfg."""
    lines = []
    for f in fields(cfg):
        val = getattr(cfg, f.name)
        if f.name == "betas":
            rendered = ",".join(f"{b:.17g}" for b in val)
        elif isinstance(val, float):
            rendered = f"{val:.17g}"
        else:
            rendered = str(val)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Config copy with non-None overrides applied, then re-validated."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    out = replace(cfg, **updates)
    out.validate()
    return out
