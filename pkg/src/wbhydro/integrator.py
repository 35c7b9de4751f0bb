"""Semidiscrete right-hand side assembly and SSP-RK3 time advancement with
no-flux boundaries."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .grid import EPS_VACUUM, Grid, State, total_mass, velocity
from .free_energy import (FreeEnergyModel, IdealGas, ModelOperators, PowerLaw,
                          potential_field)
from .reconstruction import (PsiConvolution, first_order_sources,
                             muscl_boundary_values, reconstruct_first_order,
                             reconstruct_second_order, second_order_sources)
from . import flux as fluxmod


class PositivityError(RuntimeError):
    """A stage drove the density below the tolerated floor."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme order, flux choice, interface rule, CFL and damping settings."""

    order: int = 1
    flux: str = "llf"                 # "llf" | "kinetic"
    h_rule: str = "max"               # "max" | "average"
    cfl: float = 0.7
    gamma: float = 0.0
    psi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    eps_vac: float = EPS_VACUUM
    t_end: float = 1.0
    output_interval: Optional[float] = None
    h_reconstruction: str = "composite"   # "composite" | "direct"
    kinetic_speed_cap: bool = True
    force_flux: bool = False
    stop_when_steady: bool = False
    steady_velocity_tol: float = 1e-10
    steady_spread_tol: float = 1e-10
    diagnostics_every: int = 1        # 0 disables per-step records
    max_steps: int = 10_000_000

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.flux not in ("llf", "kinetic"):
            raise ValueError(f"unknown flux {self.flux!r}")
        if self.h_rule not in ("max", "average"):
            raise ValueError(f"unknown interface rule {self.h_rule!r}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.gamma < 0:
            raise ValueError("damping coefficient must be nonnegative")


class SchemeWorkspace:
    """Caches built once per run: kernel/psi convolutions and potential samples."""

    def __init__(self, grid: Grid, model: FreeEnergyModel, cfg: SchemeConfig):
        check_flux_pairing(model, cfg)
        self.grid = grid
        self.model = model
        self.cfg = cfg
        self.ops = ModelOperators(grid, model)
        self.psi_conv = PsiConvolution(grid, cfg.psi) if cfg.psi is not None else None
        self.min_stage_density = np.inf  # pre-clamp, across all RK stages


def check_flux_pairing(model: FreeEnergyModel, cfg: SchemeConfig) -> None:
    """Vacuum-forming pressure laws need the kinetic flux."""
    if cfg.force_flux:
        return
    if isinstance(model.pressure, PowerLaw) and cfg.flux == "llf":
        raise fluxmod.FluxVacuumError(
            "P = rho^m with m > 1 forms vacuum; pair it with flux='kinetic' "
            "(or set force to override)")


def semidiscrete_rhs(grid: Grid, state: State, model: FreeEnergyModel,
                     cfg: SchemeConfig,
                     ws: Optional[SchemeWorkspace] = None
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """dU/dt = -(F_{i+1/2} - F_{i-1/2})/dx + S_i with zero boundary fluxes."""
    if ws is None:
        ws = SchemeWorkspace(grid, model, cfg)
    h = potential_field(grid, state, model, ws.ops)
    if cfg.order == 1:
        interfaces = reconstruct_first_order(grid, state, h, model, cfg.h_rule,
                                             cfg.eps_vac)
        sources = first_order_sources(grid, state, interfaces, model, cfg.gamma,
                                      ws.psi_conv, cfg.eps_vac)
    else:
        bv = muscl_boundary_values(grid, state, h, model, cfg.h_reconstruction,
                                   cfg.eps_vac)
        interfaces = reconstruct_second_order(grid, bv, model, cfg.h_rule,
                                              cfg.eps_vac)
        sources = second_order_sources(grid, state, bv, interfaces, model,
                                       cfg.gamma, ws.psi_conv, cfg.eps_vac)

    if cfg.flux == "llf":
        f_mass, f_mom = fluxmod.llf_flux(interfaces.rho_minus, interfaces.u_minus,
                                         interfaces.rho_plus, interfaces.u_plus,
                                         model.pressure, cfg.eps_vac)
    else:
        f_mass, f_mom = fluxmod.kinetic_flux(interfaces.rho_minus,
                                             interfaces.u_minus,
                                             interfaces.rho_plus,
                                             interfaces.u_plus, model.pressure)
    zero = np.zeros(1)
    f_mass_ext = np.concatenate((zero, f_mass, zero))
    f_mom_ext = np.concatenate((zero, f_mom, zero))
    drho = -np.diff(f_mass_ext) / grid.widths
    dmom = -np.diff(f_mom_ext) / grid.widths + sources.momentum
    return drho, dmom


def cfl_dt(grid: Grid, state: State, model: FreeEnergyModel, cfg: SchemeConfig,
           t_remaining: float = np.inf) -> float:
    """CFL time step, never overshooting the remaining time.

    The kinetic solver uses its dedicated speed max|u| + 3^((m-1)/4); the
    support-edge bound acts as an optional safety cap on top (it only binds at
    large densities, e.g. near blow-up)."""
    if cfg.flux == "llf":
        speed = fluxmod.max_wave_speed(state, model.pressure, "llf", cfg.eps_vac)
    else:
        speed = fluxmod.kinetic_cfl_speed(state, model.pressure, cfg.eps_vac)
        if cfg.kinetic_speed_cap:
            speed = max(speed, fluxmod.max_wave_speed(state, model.pressure,
                                                      "kinetic", cfg.eps_vac))
    if speed <= 0.0:
        return float(t_remaining)
    dt = cfg.cfl * float(np.min(grid.widths)) / speed
    return float(min(dt, t_remaining))


def _advance(state_rho, state_mom, drho, dmom, dt, eps_vac, time):
    """Forward-Euler building block with the negative-density policy:
    clamp inside (-1e-12, 0), abort below."""
    rho = state_rho + dt * drho
    mom = state_mom + dt * dmom
    min_rho = float(np.min(rho)) if rho.size else 0.0
    if min_rho < -1e-12:
        raise PositivityError(
            f"density fell to {min_rho:.3e}; check CFL/flux configuration", time)
    negative = rho < 0.0
    if np.any(negative):
        rho = np.where(negative, 0.0, rho)
    dry = rho <= 0.0
    if np.any(dry):
        mom = np.where(dry, 0.0, mom)
    return rho, mom, min_rho


def ssp_rk3_step(grid: Grid, state: State, model: FreeEnergyModel,
                 cfg: SchemeConfig, dt: float,
                 ws: Optional[SchemeWorkspace] = None,
                 rhs: Optional[Callable[[State], Tuple[np.ndarray, np.ndarray]]] = None
                 ) -> State:
    """Three-stage strong-stability-preserving Runge-Kutta step.

    The potential field and reconstructions are re-evaluated at every stage;
    ``rhs`` can be injected for harness tests.
    """
    if dt < 0:
        raise ValueError("negative time step")
    if dt == 0.0:
        return state
    if rhs is None:
        if ws is None:
            ws = SchemeWorkspace(grid, model, cfg)
        def rhs(s: State):
            return semidiscrete_rhs(grid, s, model, cfg, ws)

    rho0, mom0, t0 = state.rho, state.mom, state.time
    d1 = rhs(state)
    rho1, mom1, m1 = _advance(rho0, mom0, d1[0], d1[1], dt, cfg.eps_vac, t0)
    d2 = rhs(State(rho1, mom1, t0 + dt))
    rho2, mom2, m2 = _advance(rho1, mom1, d2[0], d2[1], dt, cfg.eps_vac, t0)
    rho2 = 0.75 * rho0 + 0.25 * rho2
    mom2 = 0.75 * mom0 + 0.25 * mom2
    d3 = rhs(State(rho2, mom2, t0 + 0.5 * dt))
    rho3, mom3, m3 = _advance(rho2, mom2, d3[0], d3[1], dt, cfg.eps_vac, t0)
    rho3 = rho0 / 3.0 + 2.0 / 3.0 * rho3
    mom3 = mom0 / 3.0 + 2.0 / 3.0 * mom3
    if ws is not None:
        ws.min_stage_density = min(ws.min_stage_density, m1, m2, m3)
    return State(rho3, mom3, t0 + dt)


@dataclass
class Trajectory:
    """Snapshots plus per-step diagnostic records from one run."""

    snapshots: List[Tuple[float, State]] = field(default_factory=list)
    records: list = field(default_factory=list)
    steps: int = 0
    min_density_seen: float = np.inf
    stopped_steady: bool = False

    @property
    def final(self) -> State:
        return self.snapshots[-1][1]


def _is_steady(grid: Grid, state: State, model: FreeEnergyModel,
               cfg: SchemeConfig, ws: SchemeWorkspace) -> bool:
    u = velocity(state, cfg.eps_vac)
    if u.size and float(np.max(np.abs(u))) > cfg.steady_velocity_tol:
        return False
    wet = state.rho > cfg.eps_vac
    if not np.any(wet):
        return True
    h = potential_field(grid, state, model, ws.ops)
    w = model.pressure.chemical_potential(state.rho[wet]) + h[wet]
    return float(np.max(w) - np.min(w)) <= cfg.steady_spread_tol


def run(grid: Grid, state0: State, model: FreeEnergyModel, cfg: SchemeConfig,
        ws: Optional[SchemeWorkspace] = None) -> Trajectory:
    """Advance from t=0 to t_end under the CFL constraint, emitting snapshots
    at the configured cadence plus the final state."""
    from .diagnostics import make_record

    if ws is None:
        ws = SchemeWorkspace(grid, model, cfg)
    traj = Trajectory()
    state = State(state0.rho, state0.mom, 0.0)
    traj.snapshots.append((0.0, state))
    traj.min_density_seen = float(np.min(state.rho))
    if cfg.diagnostics_every:
        traj.records.append(make_record(grid, state, model, cfg, ws))
    next_output = cfg.output_interval if cfg.output_interval else np.inf

    t = 0.0
    while t < cfg.t_end and traj.steps < cfg.max_steps:
        dt = cfl_dt(grid, state, model, cfg, cfg.t_end - t)
        if dt <= 0.0:
            break
        try:
            state = ssp_rk3_step(grid, state, model, cfg, dt, ws)
        except PositivityError as err:
            raise PositivityError(str(err), t) from err
        t = state.time
        traj.steps += 1
        traj.min_density_seen = min(traj.min_density_seen, ws.min_stage_density)
        if cfg.diagnostics_every and traj.steps % cfg.diagnostics_every == 0:
            traj.records.append(make_record(grid, state, model, cfg, ws))
        if t >= next_output - 1e-14 and t < cfg.t_end:
            traj.snapshots.append((t, state))
            next_output += cfg.output_interval
        if cfg.stop_when_steady and _is_steady(grid, state, model, cfg, ws):
            traj.stopped_steady = True
            break
    if traj.snapshots[-1][1] is not state:
        traj.snapshots.append((state.time, state))
    return traj
