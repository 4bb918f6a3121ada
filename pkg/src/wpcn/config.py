"""Flat key = value experiment configuration.

One key per line, '#' starts a comment, lists are comma separated. Every
key has a default reproducing the baseline parameter set, so an empty file
is a valid configuration. serialize_config() emits keys in declaration
order and parse_config(serialize_config(cfg)) is the identity.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .channel import RicianFading
from .errors import ConfigError
from .system import ActionGrid, SystemParams

__all__ = ["ExperimentConfig", "parse_config", "load_config",
           "serialize_config", "apply_overrides", "SWEEPABLE"]

_T_BLOCK = 0.016
_B_REF = 1e-3 * _T_BLOCK

POLICY_CHOICES = ("optimal", "myopic", "both")

# numeric fields a sweep may iterate over
SWEEPABLE = frozenset({
    "K", "fD", "varrho2", "varsigma2", "Pmax_E", "Pc_AP", "Pc_U", "eff_AP",
    "eff_U", "eta", "lam", "G_A", "zeta", "W", "N0", "d", "alpha", "T",
    "Bmax", "Q", "Eth",
})


@dataclass
class ExperimentConfig:
    # channel
    K: int = 3
    fD: float = 1.34
    varrho2: float = 0.125
    varsigma2: float = 0.75
    # system (SI units)
    Pmax_E: float = 10.0
    Pc_AP: float = 0.5
    Pc_U: float = 0.005
    eff_AP: float = 0.9
    eff_U: float = 0.9
    eta: float = 0.95
    lam: float = 0.9
    G_A: float = 10.0 ** 0.8          # 8 dBi
    zeta: float = 1.0
    W: float = 2000.0
    N0: float = 10.0 ** -19.4         # -164 dBm/Hz
    d: float = 10.0
    alpha: float = 2.8
    T: float = _T_BLOCK
    Bmax: float = 10.0 * _B_REF
    Q: float = _B_REF
    Eth: float = 500.0 * _B_REF
    # action grid
    v_tau_e: int = 9
    v_tau_i: int = 9
    v_p_e: int = 5
    v_p_i: int = 9
    p_i_min: float = 1e-5
    # solver tolerances
    epsilon_beta: float = 1e-4
    epsilon_via: float = 1e-9
    # run control
    policy: str = "both"
    output: str = ""
    seed: int = 20260810
    workers: int = 1
    # sweep declaration
    sweep_param: str = ""
    sweep_values: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.policy not in POLICY_CHOICES:
            raise ConfigError(f"policy must be one of {POLICY_CHOICES}, got {self.policy!r}")
        if self.sweep_param and self.sweep_param not in SWEEPABLE:
            raise ConfigError(
                f"unknown sweep parameter {self.sweep_param!r}; choose from "
                f"{sorted(SWEEPABLE)}"
            )
        if self.sweep_param and not self.sweep_values:
            raise ConfigError("sweep_values must be nonempty when sweep_param is set")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def fading(self) -> RicianFading:
        return RicianFading(self.varrho2, self.varsigma2, self.fD)

    def system_params(self) -> SystemParams:
        return SystemParams(
            Pmax_E=self.Pmax_E, Pc_AP=self.Pc_AP, Pc_U=self.Pc_U,
            eff_AP=self.eff_AP, eff_U=self.eff_U, eta=self.eta, lam=self.lam,
            G_A=self.G_A, zeta=self.zeta, W=self.W, N0=self.N0, d=self.d,
            alpha=self.alpha, T=self.T, Bmax=self.Bmax, Q=self.Q, Eth=self.Eth,
        )

    def action_grid(self, params: SystemParams) -> ActionGrid:
        return ActionGrid.from_levels(
            params, v_tau_e=self.v_tau_e, v_tau_i=self.v_tau_i,
            v_p_e=self.v_p_e, v_p_i=self.v_p_i, p_i_min=self.p_i_min,
        )

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(name: str, raw: str):
    f = _FIELDS[name]
    raw = raw.strip()
    try:
        if f.name == "sweep_values":
            return [float(tok) for tok in raw.split(",") if tok.strip()] if raw else []
        if f.type == "int":
            return int(raw)
        if f.type == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {raw!r} ({exc})") from None


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if f.name == "sweep_values":
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}\n")
    return "".join(lines)


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    """Apply 'key=value' strings on top of a config; flags win over files."""
    changes = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        changes[key] = _parse_value(key, raw)
    return cfg.replace(**changes)
