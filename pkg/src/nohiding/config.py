"""Run configuration read from an INI-style file.

Sections and keys (all optional)::

    [spins]
    offsets = 250, -180, 95      ; Hz, spins 1..3
    j12 = 49.7                   ; Hz
    j13 = 224.5
    j23 = -310.9
    t2 = 1.0, 0.7, 1.0           ; seconds

    [noise]
    calibration_sigma = 0.0
    ensemble = 200
    t2_enabled = false
    seed = 1234

    [grid]
    theta_steps = 13
    phi_steps = 25

    [receiver]
    convention = input           ; or "plus_y"

    [tomo]
    deviation_mode = modulus     ; or "split" (real and imaginary parts apart)

    [output]
    csv = scan.csv
    json = tomo.json
    figures = figures/

Unknown sections or keys raise :class:`ConfigError`.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from .nmrsim import Receiver, reference_state
from .pulsec import DEFAULT_OFFSETS, DEFAULT_T2, MEASURED_J, NoiseModel, SpinSystem


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "spins": {"offsets", "j12", "j13", "j23", "t2"},
    "noise": {"calibration_sigma", "ensemble", "t2_enabled", "seed"},
    "grid": {"theta_steps", "phi_steps"},
    "receiver": {"convention"},
    "tomo": {"deviation_mode"},
    "output": {"csv", "json", "figures"},
}


@dataclass(frozen=True)
class RunConfig:
    offsets: tuple = DEFAULT_OFFSETS
    couplings: dict = field(default_factory=lambda: dict(MEASURED_J))
    t2: tuple = DEFAULT_T2
    calibration_sigma: float = 0.0
    ensemble: int = 200
    t2_enabled: bool = False
    seed: int = 1234
    theta_steps: int = 13
    phi_steps: int = 25
    convention: str = "input"
    deviation_mode: str = "modulus"
    csv: str | None = None
    json: str | None = None
    figures: str | None = None

    def __post_init__(self):
        if self.theta_steps < 2 or self.phi_steps < 2:
            raise ConfigError("grid needs at least 2 steps along each axis")
        if self.calibration_sigma < 0:
            raise ConfigError("calibration_sigma must be >= 0")
        if self.ensemble < 1:
            raise ConfigError("ensemble must be >= 1")
        if len(self.offsets) != 3 or len(self.t2) != 3:
            raise ConfigError("offsets and t2 need one value per spin (3)")
        if min(self.t2) <= 0:
            raise ConfigError("t2 values must be positive")
        if self.convention not in ("input", "plus_y"):
            raise ConfigError(f"receiver convention must be input or plus_y, got {self.convention!r}")
        if self.deviation_mode not in ("modulus", "split"):
            raise ConfigError(f"deviation_mode must be modulus or split, got {self.deviation_mode!r}")

    def spin_system(self) -> SpinSystem:
        return SpinSystem.from_couplings(self.couplings, self.offsets, self.t2)

    def noise(self, sigma: float | None = None) -> NoiseModel:
        s = self.calibration_sigma if sigma is None else sigma
        return NoiseModel(s, self.ensemble if s > 0 else 1, self.t2_enabled, self.seed)

    def receiver(self) -> Receiver:
        return Receiver.calibrated(reference_state(self.convention))

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _floats(text: str, key: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from exc


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    kw = {}
    couplings = dict(MEASURED_J)
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                if key in ("offsets", "t2"):
                    kw[key] = _floats(value, key)
                elif key in ("j12", "j13", "j23"):
                    couplings[(int(key[1]), int(key[2]))] = float(value)
                elif key == "calibration_sigma":
                    kw[key] = float(value)
                elif key in ("ensemble", "seed", "theta_steps", "phi_steps"):
                    kw[key] = int(value)
                elif key == "t2_enabled":
                    kw[key] = cp.getboolean(section, key)
                else:
                    kw[key] = value
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return RunConfig(couplings=couplings, **kw)


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
