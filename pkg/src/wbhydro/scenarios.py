"""Named initial-condition families and the shipped scenario catalog.

Analytic normalizations use the closed-form integrals over the configured
domain, so the discrete mass matches the nominal one up to quadrature error.
"""
from __future__ import annotations

import numpy as np
from scipy.special import erf

from .config import ConfigError, ScenarioConfig
from .free_energy import (FreeEnergyModel, QuadraticWell,
                          solve_discrete_steady_state)
from .grid import Grid, State, make_uniform_grid


SQRT_TWO_PI = np.sqrt(2.0 * np.pi)


def _gaussian_integral(a: float, b: float, center: float, rate: float) -> float:
    """Integral of exp(-rate (x - center)^2) over [a, b]."""
    s = np.sqrt(rate)
    return 0.5 * np.sqrt(np.pi / rate) * (erf(s * (b - center)) - erf(s * (a - center)))


def cos_bump(grid: Grid, mass: float) -> State:
    """Perturbed cosine profile with a small antisymmetric momentum."""
    a, b = grid.faces[0], grid.faces[-1]
    x = grid.centers
    norm = 0.2 * (b - a) + 50.0 / np.pi * (np.sin(np.pi * b / 10.0)
                                           - np.sin(np.pi * a / 10.0))
    rho = mass * (0.2 + 5.0 * np.cos(np.pi * x / 10.0)) / norm
    mom = -0.05 * np.sin(np.pi * x / 10.0)
    return State(rho, mom)


def gauss_bump(grid: Grid, mass: float, x0: float = 0.0) -> State:
    """Offset Gaussian over a floor, with a small antisymmetric momentum."""
    a, b = grid.faces[0], grid.faces[-1]
    x = grid.centers
    norm = 0.1 * (b - a) + _gaussian_integral(a, b, x0, 1.0)
    rho = mass * (0.1 + np.exp(-(x - x0) ** 2)) / norm
    mom = -0.2 * np.sin(np.pi * x / 10.0)
    return State(rho, mom)


def travelling_wave(grid: Grid, mass: float, speed: float = 0.2,
                    time: float = 0.0) -> State:
    """Gaussian advected at constant speed (exact moving steady state)."""
    x = grid.centers
    rho = mass * np.exp(-0.5 * (x - speed * time) ** 2) / SQRT_TWO_PI
    return State(rho, speed * rho)


def travelling_wave_cell_averages(grid: Grid, mass: float, speed: float,
                                  time: float) -> np.ndarray:
    """Exact cell averages of the travelling Gaussian at the given time."""
    c = speed * time
    cumulative = 0.5 * mass * (1.0 + erf((grid.faces - c) / np.sqrt(2.0)))
    return np.diff(cumulative) / grid.widths


def two_bumps(grid: Grid, mass: float) -> State:
    """Two symmetric Gaussian bumps (aggregation test profile)."""
    a, b = grid.faces[0], grid.faces[-1]
    x = grid.centers
    rate = 0.4
    norm = (_gaussian_integral(a, b, -2.0, rate)
            + _gaussian_integral(a, b, 2.0, rate))
    rho = mass * (np.exp(-rate * (x + 2.0) ** 2)
                  + np.exp(-rate * (x - 2.0) ** 2)) / norm
    return State(rho, np.zeros_like(rho))


def three_bumps(grid: Grid, mass: float) -> State:
    """Two equal bumps plus a smaller distant one (slow-merge profile)."""
    a, b = grid.faces[0], grid.faces[-1]
    x = grid.centers
    norm = (_gaussian_integral(a, b, -3.0, 0.5)
            + _gaussian_integral(a, b, 3.0, 0.5)
            + 0.55 * _gaussian_integral(a, b, 8.5, 0.5))
    rho = mass * (np.exp(-0.5 * (x + 3.0) ** 2) + np.exp(-0.5 * (x - 3.0) ** 2)
                  + 0.55 * np.exp(-0.5 * (x - 8.5) ** 2)) / norm
    return State(rho, np.zeros_like(rho))


def hardrod_gaussian(grid: Grid) -> State:
    """Wide Gaussian holding eight unit rods worth of mass (unnormalized)."""
    rho = np.exp(-grid.centers ** 2 / 20.372)
    return State(rho, np.zeros_like(rho))


def state_from_file(grid: Grid, path: str) -> State:
    """Initial state from a snapshot CSV (columns x, rho, momentum, ...)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    x, rho, mom = data[:, 0], data[:, 1], data[:, 2]
    rho_i = np.clip(np.interp(grid.centers, x, rho, left=0.0, right=0.0), 0.0, None)
    mom_i = np.interp(grid.centers, x, mom, left=0.0, right=0.0)
    mom_i = np.where(rho_i > 0.0, mom_i, 0.0)
    return State(rho_i, mom_i)


def build_grid(cfg: ScenarioConfig) -> Grid:
    return make_uniform_grid(cfg.a, cfg.b, cfg.n)


def initial_state(cfg: ScenarioConfig, grid: Grid,
                  model: FreeEnergyModel) -> State:
    family = cfg.family
    if family == "cos_bump":
        return cos_bump(grid, cfg.mass)
    if family == "gauss_bump":
        return gauss_bump(grid, cfg.mass, cfg.x0)
    if family == "travelling_wave":
        return travelling_wave(grid, cfg.mass, cfg.speed)
    if family == "two_bumps":
        return two_bumps(grid, cfg.mass)
    if family == "three_bumps":
        return three_bumps(grid, cfg.mass)
    if family == "hardrod_gaussian":
        return hardrod_gaussian(grid)
    if family == "steady":
        steady_model = model
        if cfg.steady_potential:
            if cfg.steady_potential != "quadratic":
                raise ConfigError("steady_potential supports only 'quadratic'")
            from dataclasses import replace
            steady_model = replace(model, potential=QuadraticWell(cfg.steady_pot_a))
        return solve_discrete_steady_state(grid, steady_model, cfg.mass)
    if family == "file":
        return state_from_file(grid, cfg.path)
    raise ConfigError(f"unknown initial family {family!r}")


def exact_solution(cfg: ScenarioConfig):
    """Exact cell-average solution declared by the scenario, if any."""
    if cfg.family == "travelling_wave":
        def averages(grid: Grid, t: float) -> np.ndarray:
            return travelling_wave_cell_averages(grid, cfg.mass, cfg.speed, t)
        return averages
    return None


SHIPPED_SCENARIOS = {
    "ex31_ideal_potential": """
# ideal-gas pressure in a quadratic confining potential
[grid]
a = -5
b = 5
n = 200
[model]
pressure = ideal
potential = quadratic
pot_a = 1.0
[damping]
gamma = 1.0
[scheme]
order = 2
flux = llf
[initial]
family = cos_bump
mass = 1.0
[run]
t_end = 5.0
output_interval = 1.0
monitor_energy = true
name = ex31_ideal_potential
""",
    "ex32_alignment": """
# ideal-gas pressure, quadratic potential, velocity-alignment damping only
[grid]
a = -5
b = 5
n = 200
[model]
pressure = ideal
potential = quadratic
pot_a = 1.0
[damping]
gamma = 0.0
psi = standard
[scheme]
order = 2
flux = llf
[initial]
family = cos_bump
mass = 1.0
[run]
t_end = 5.0
output_interval = 1.0
monitor_energy = true
name = ex32_alignment
""",
    "ex33_attractive_kernel": """
# ideal-gas pressure with a quadratic interaction kernel, weak linear damping
[grid]
a = -5
b = 5
n = 200
[model]
pressure = ideal
kernel = quadratic
[damping]
gamma = 0.01
[scheme]
order = 2
flux = llf
[initial]
family = cos_bump
mass = 1.0
[run]
t_end = 5.0
output_interval = 1.0
monitor_energy = true
name = ex33_attractive_kernel
""",
    "ex34_quadratic_pressure": """
# P = rho^2 in a quadratic potential; vacuum regions, kinetic flux
[grid]
a = -5
b = 5
n = 200
[model]
pressure = power
m = 2.0
potential = quadratic
pot_a = 1.0
[damping]
gamma = 1.0
[scheme]
order = 2
flux = kinetic
[initial]
family = gauss_bump
mass = 1.0
[run]
t_end = 5.0
output_interval = 1.0
monitor_energy = true
name = ex34_quadratic_pressure
""",
    "ex35_travelling_wave": """
# moving steady state: alignment damping only, exact travelling Gaussian
[grid]
a = -8
b = 9
n = 200
[model]
pressure = ideal
kernel = quadratic
[damping]
gamma = 0.0
psi = standard
[scheme]
order = 2
flux = llf
[initial]
family = travelling_wave
mass = 1.0
speed = 0.2
[run]
t_end = 3.0
output_interval = 1.0
monitor_energy = true
name = ex35_travelling_wave
""",
    "ex36a_double_well_symmetric": """
# P = rho^2 in a deep double well, symmetric start: two equal-mass bumps
[grid]
a = -10
b = 10
n = 200
[model]
pressure = power
m = 2.0
potential = double_well
dw_a = 0.25
dw_b = 1.5
[damping]
gamma = 1.0
[scheme]
order = 2
flux = kinetic
[initial]
family = gauss_bump
mass = 1.0
x0 = 0.0
[run]
t_end = 15.0
stop_when_steady = true
steady_velocity_tol = 1e-9
steady_spread_tol = 1e-8
name = ex36a_double_well_symmetric
""",
    "ex36b_double_well_asymmetric": """
# same double well, offset start: unequal masses in the two supports
[grid]
a = -10
b = 10
n = 200
[model]
pressure = power
m = 2.0
potential = double_well
dw_a = 0.25
dw_b = 1.5
[damping]
gamma = 1.0
[scheme]
order = 2
flux = kinetic
[initial]
family = gauss_bump
mass = 1.0
x0 = 1.0
[run]
t_end = 15.0
stop_when_steady = true
steady_velocity_tol = 1e-9
steady_spread_tol = 1e-8
name = ex36b_double_well_asymmetric
""",
    "ex36c_shallow_well": """
# shallower double well: asymmetric start still ends symmetric and connected
[grid]
a = -10
b = 10
n = 200
[model]
pressure = power
m = 2.0
potential = double_well
dw_a = 0.25
dw_b = 0.5
[damping]
gamma = 1.0
[scheme]
order = 2
flux = kinetic
[initial]
family = gauss_bump
mass = 1.0
x0 = 1.0
[run]
t_end = 15.0
stop_when_steady = true
steady_velocity_tol = 1e-9
steady_spread_tol = 1e-8
name = ex36c_shallow_well
""",
    "ex37_bifurcation": """
# noise-scaled ideal pressure in a quartic well with quadratic attraction;
# base scenario for the center-of-mass continuation
[grid]
a = -4
b = 4
n = 200
[model]
pressure = scaled_ideal
sigma = 0.2
potential = quartic
quartic_c = 1.0
kernel = quadratic
[damping]
gamma = 1.0
[scheme]
order = 2
flux = llf
[initial]
family = gauss_bump
mass = 1.0
x0 = 1.0
[run]
t_end = 60.0
stop_when_steady = true
steady_velocity_tol = 1e-9
steady_spread_tol = 1e-8
name = ex37_bifurcation
""",
    "ex38_diffusion_dominated": """
# generalized aggregation kernel, diffusion-dominated regime
[grid]
a = -8
b = 8
n = 200
[model]
pressure = power
m = 1.5
kernel = homogeneous
alpha = 0.5
[damping]
gamma = 1.0
[scheme]
order = 2
flux = kinetic
[initial]
family = two_bumps
mass = 1.0
[run]
t_end = 20.0
stop_when_steady = true
steady_velocity_tol = 1e-9
steady_spread_tol = 1e-8
name = ex38_diffusion_dominated
""",
    "ex38_blowup": """
# aggregation-dominated regime: finite-time concentration into one cell
[grid]
a = -8
b = 8
n = 200
[model]
pressure = power
m = 1.3
kernel = homogeneous
alpha = -0.5
[damping]
gamma = 1.0
[scheme]
order = 1
flux = kinetic
[initial]
family = two_bumps
mass = 1.0
[run]
t_end = 80.0
blowup_threshold = 0.99
name = ex38_blowup
""",
    "ex38_morse": """
# Gaussian attraction, m = 3, weak damping: bumps merge in stages
[grid]
a = -8
b = 12
n = 250
[model]
pressure = power
m = 3.0
kernel = morse
[damping]
gamma = 0.05
[scheme]
order = 2
flux = kinetic
[initial]
family = three_bumps
mass = 1.2
[run]
t_end = 30.0
name = ex38_morse
""",
    "ex39_confined_rods": """
# eight hard rods in a quadratic trap: layered steady state
[grid]
a = -13
b = 13
n = 400
[model]
pressure = ideal
potential = quadratic
pot_a = 2.0
kernel = hard_rod
rod_sigma = 1.0
[damping]
gamma = 1.0
[scheme]
order = 2
flux = llf
[initial]
family = hardrod_gaussian
mass = 8.0
[run]
t_end = 80.0
stop_when_steady = true
steady_velocity_tol = 1e-9
steady_spread_tol = 5e-8
name = ex39_confined_rods
""",
    "ex39_free_rods": """
# trap released: the layered rods diffuse toward a uniform profile
[grid]
a = -13
b = 13
n = 400
[model]
pressure = ideal
kernel = hard_rod
rod_sigma = 1.0
[damping]
gamma = 1.0
[scheme]
order = 2
flux = llf
[initial]
family = steady
mass = 8.0
steady_potential = quadratic
steady_pot_a = 2.0
[run]
t_end = 15.0
name = ex39_free_rods
""",
}


def load_scenario(name_or_path: str) -> ScenarioConfig:
    """Parse a scenario from a file path or the shipped catalog."""
    import os

    from .config import parse_config

    if os.path.exists(name_or_path):
        with open(name_or_path) as fh:
            return parse_config(fh.read())
    if name_or_path in SHIPPED_SCENARIOS:
        return parse_config(SHIPPED_SCENARIOS[name_or_path])
    raise ConfigError(
        f"{name_or_path!r} is neither a file nor a shipped scenario; "
        f"known scenarios: {', '.join(sorted(SHIPPED_SCENARIOS))}")
