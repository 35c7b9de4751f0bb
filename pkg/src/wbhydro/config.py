"""Scenario configuration: a minimal [section]/key=value text format.

Sections and keys (mandatory ones marked *):

[grid]    a*, b*, n*
[model]   pressure* (ideal|power|scaled_ideal), m (power), sigma (scaled_ideal),
          potential (none|quadratic|double_well|quartic|file), pot_a, dw_a,
          dw_b, quartic_c, pot_file,
          kernel (none|quadratic|homogeneous|morse|hard_rod), alpha, rod_sigma
[damping] gamma, psi (none|standard)
[scheme]  order* (1|2), flux* (llf|kinetic), h_rule (max|average), cfl,
          force (true|false), h_reconstruction (composite|direct),
          kinetic_speed_cap (true|false)
[initial] family* (cos_bump|gauss_bump|travelling_wave|two_bumps|three_bumps|
          hardrod_gaussian|steady|file), mass, x0, speed, path,
          steady_potential, steady_pot_a
[run]     t_end*, output_interval, stop_when_steady, steady_velocity_tol,
          steady_spread_tol, monitor_energy, blowup_threshold, name

Unknown sections or keys are errors; values left out fall back to the defaults
below.  Lines starting with '#' are comments.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .free_energy import (DoubleWell, FreeEnergyModel, GaussianKernel,
                          HardRodKernel, HomogeneousKernel, IdealGas,
                          LogComplement, NoPotential, PowerLaw, QuadraticKernel,
                          QuadraticWell, QuarticWell, ScaledIdeal,
                          TabulatedPotential)
from .integrator import SchemeConfig
from .reconstruction import cucker_smale_psi


class ConfigError(ValueError):
    """Malformed or inconsistent scenario text."""


@dataclass(frozen=True)
class ScenarioConfig:
    # grid
    a: float = -5.0
    b: float = 5.0
    n: int = 100
    # model
    pressure: str = "ideal"
    m: Optional[float] = None
    sigma: Optional[float] = None
    potential: str = "none"
    pot_a: float = 1.0
    dw_a: float = 0.25
    dw_b: float = 1.5
    quartic_c: float = 1.0
    pot_file: str = ""
    kernel: str = "none"
    alpha: Optional[float] = None
    rod_sigma: Optional[float] = None
    # damping
    gamma: float = 1.0
    psi: str = "none"
    # scheme
    order: int = 1
    flux: str = "llf"
    h_rule: str = "max"
    cfl: float = 0.7
    force: bool = False
    h_reconstruction: str = "composite"
    kinetic_speed_cap: bool = True
    # initial
    family: str = "cos_bump"
    mass: float = 1.0
    x0: float = 0.0
    speed: float = 0.2
    path: str = ""
    steady_potential: str = ""
    steady_pot_a: float = 1.0
    # run
    t_end: float = 1.0
    output_interval: Optional[float] = None
    stop_when_steady: bool = False
    steady_velocity_tol: float = 1e-10
    steady_spread_tol: float = 1e-10
    monitor_energy: bool = False
    blowup_threshold: float = 0.99
    name: str = "scenario"

    def build_model(self) -> FreeEnergyModel:
        if self.pressure == "ideal":
            law = IdealGas()
        elif self.pressure == "power":
            if self.m is None:
                raise ConfigError("pressure=power needs key m")
            law = PowerLaw(self.m)
        elif self.pressure == "scaled_ideal":
            if self.sigma is None:
                raise ConfigError("pressure=scaled_ideal needs key sigma")
            law = ScaledIdeal(self.sigma)
        else:
            raise ConfigError(f"unknown pressure law {self.pressure!r}")

        if self.potential == "none":
            pot = NoPotential()
        elif self.potential == "quadratic":
            pot = QuadraticWell(self.pot_a)
        elif self.potential == "double_well":
            pot = DoubleWell(self.dw_a, self.dw_b)
        elif self.potential == "quartic":
            pot = QuarticWell(self.quartic_c)
        elif self.potential == "file":
            import numpy as np
            data = np.loadtxt(self.pot_file, delimiter=",", skiprows=1)
            pot = TabulatedPotential(data[:, 0], data[:, 1])
        else:
            raise ConfigError(f"unknown potential {self.potential!r}")

        kernel = None
        nonlinearity = None
        hard = False
        if self.kernel == "quadratic":
            kernel = QuadraticKernel()
        elif self.kernel == "homogeneous":
            if self.alpha is None:
                raise ConfigError("kernel=homogeneous needs key alpha")
            kernel = HomogeneousKernel(self.alpha)
        elif self.kernel == "morse":
            kernel = GaussianKernel()
        elif self.kernel == "hard_rod":
            if self.rod_sigma is None:
                raise ConfigError("kernel=hard_rod needs key rod_sigma")
            kernel = HardRodKernel(self.rod_sigma)
            nonlinearity = LogComplement()
            hard = True
        elif self.kernel != "none":
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        return FreeEnergyModel(pressure=law, potential=pot, kernel=kernel,
                               nonlinearity=nonlinearity, hard_rods=hard)

    def build_scheme(self, **overrides) -> SchemeConfig:
        kwargs = dict(
            order=self.order, flux=self.flux, h_rule=self.h_rule, cfl=self.cfl,
            gamma=self.gamma,
            psi=cucker_smale_psi if self.psi == "standard" else None,
            t_end=self.t_end, output_interval=self.output_interval,
            h_reconstruction=self.h_reconstruction,
            kinetic_speed_cap=self.kinetic_speed_cap, force_flux=self.force,
            stop_when_steady=self.stop_when_steady,
            steady_velocity_tol=self.steady_velocity_tol,
            steady_spread_tol=self.steady_spread_tol,
        )
        kwargs.update(overrides)
        return SchemeConfig(**kwargs)


_SECTION_KEYS = {
    "grid": {"a", "b", "n"},
    "model": {"pressure", "m", "sigma", "potential", "pot_a", "dw_a", "dw_b",
              "quartic_c", "pot_file", "kernel", "alpha", "rod_sigma"},
    "damping": {"gamma", "psi"},
    "scheme": {"order", "flux", "h_rule", "cfl", "force", "h_reconstruction",
               "kinetic_speed_cap"},
    "initial": {"family", "mass", "x0", "speed", "path", "steady_potential",
                "steady_pot_a"},
    "run": {"t_end", "output_interval", "stop_when_steady",
            "steady_velocity_tol", "steady_spread_tol", "monitor_energy",
            "blowup_threshold", "name"},
}

_MANDATORY = {("grid", "a"), ("grid", "b"), ("grid", "n"),
              ("model", "pressure"), ("scheme", "order"), ("scheme", "flux"),
              ("initial", "family"), ("run", "t_end")}

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}

_BOOL_KEYS = {"force", "kinetic_speed_cap", "stop_when_steady",
              "monitor_energy"}
_INT_KEYS = {"n", "order"}
_STR_KEYS = {"pressure", "potential", "pot_file", "kernel", "psi", "flux",
             "h_rule", "h_reconstruction", "family", "path",
             "steady_potential", "name"}


def _convert(key: str, raw: str):
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError as err:
            raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}") from err
    if key in _STR_KEYS:
        return raw
    try:
        return float(raw)
    except ValueError as err:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") from err


def parse_config(text: str) -> ScenarioConfig:
    """Parse and fully validate scenario text; unknown keys are errors."""
    section = None
    seen = set()
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SECTION_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _SECTION_KEYS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add((section, key))
        values[key] = _convert(key, raw)

    missing = [f"[{s}] {k}" for (s, k) in sorted(_MANDATORY) if (s, k) not in seen]
    if missing:
        raise ConfigError("missing mandatory keys: " + ", ".join(missing))
    cfg = ScenarioConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.n < 2:
        raise ConfigError("grid needs at least 2 cells")
    if not cfg.a < cfg.b:
        raise ConfigError(f"empty domain [{cfg.a}, {cfg.b}]")
    cfg.build_model()          # raises on inconsistent model keys
    cfg.build_scheme()
    if cfg.pressure == "power" and cfg.flux == "llf" and not cfg.force:
        raise ConfigError(
            "P = rho^m with m > 1 forms vacuum and the LLF flux fails there; "
            "use flux=kinetic or set force=true")
    if cfg.family == "file" and not cfg.path:
        raise ConfigError("family=file needs key path")


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text for a config; parse(serialize(parse(t))) == parse(t)."""
    def fmt(value):
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    lines = []
    for section, keys in _SECTION_KEYS.items():
        lines.append(f"[{section}]")
        for key in sorted(keys):
            value = getattr(cfg, key)
            if value is None or value == "":
                continue
            lines.append(f"{key} = {fmt(value)}")
        lines.append("")
    return "\n".join(lines)
