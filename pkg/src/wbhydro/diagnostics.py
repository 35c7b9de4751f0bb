"""Conserved and dissipated quantities, error norms, and convergence orders."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import EPS_VACUUM, Grid, State, total_mass, velocity
from .free_energy import (FreeEnergyModel, ModelOperators,
                          hard_rod_excess_energy, potential_field)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the time series plus the per-cell monitor fields."""

    time: float
    mass: float
    momentum: float
    kinetic_energy: float
    free_energy: float
    total_energy: float
    center_of_mass: float
    variation: np.ndarray        # chemical potential + H, NaN on dry cells
    entropy: np.ndarray
    dissipation: Optional[float] = None  # RHS of the energy identity, <= 0
    max_cell_mass_fraction: float = 0.0


def discrete_free_energy(grid: Grid, state: State, model: FreeEnergyModel,
                         ops: ModelOperators | None = None) -> float:
    """Internal + external parts plus half the interaction pairing.

    With a nonlinearity K the pairing term is sum dx rho K(c)/2 at
    c = sum dx W rho; hard rods use the exact excess functional instead.
    """
    if ops is None:
        ops = ModelOperators(grid, model)
    dx = grid.widths
    law = model.pressure
    base = float(np.sum(dx * (law.internal_energy(state.rho)
                              + ops.v_centers * state.rho)))
    if model.hard_rods:
        return base + hard_rod_excess_energy(grid, state, model.rod_sigma)
    if model.kernel is None:
        return base
    c = ops.convolution.apply(state.rho)
    if model.nonlinearity is None:
        return base + 0.5 * float(np.sum(dx * state.rho * c))
    return base + 0.5 * float(np.sum(dx * state.rho * model.nonlinearity(c)))


def kinetic_energy(grid: Grid, state: State, eps_vac: float = EPS_VACUUM) -> float:
    u = velocity(state, eps_vac)
    return 0.5 * float(np.sum(grid.widths * state.rho * u * u))


def total_energy(grid: Grid, state: State, model: FreeEnergyModel,
                 ops: ModelOperators | None = None,
                 eps_vac: float = EPS_VACUUM) -> float:
    """Kinetic plus free energy."""
    return kinetic_energy(grid, state, eps_vac) + discrete_free_energy(
        grid, state, model, ops)


def free_energy_variation(grid: Grid, state: State, model: FreeEnergyModel,
                          ops: ModelOperators | None = None,
                          eps_vac: float = EPS_VACUUM) -> np.ndarray:
    """Per-cell chemical potential + H on the support; NaN on dry cells where
    the steady-state constant is not required to hold."""
    h = potential_field(grid, state, model, ops)
    wet = state.rho > eps_vac
    out = np.full(grid.n, np.nan)
    if np.any(wet):
        out[wet] = model.pressure.chemical_potential(state.rho[wet]) + h[wet]
    return out


def variation_spread(grid: Grid, state: State, model: FreeEnergyModel,
                     ops: ModelOperators | None = None,
                     eps_vac: float = EPS_VACUUM) -> float:
    """Max minus min of the variation over the discrete support."""
    w = free_energy_variation(grid, state, model, ops, eps_vac)
    wet = np.isfinite(w)
    if not np.any(wet):
        return 0.0
    return float(np.max(w[wet]) - np.min(w[wet]))


def entropy_field(grid: Grid, state: State, model: FreeEnergyModel,
                  eps_vac: float = EPS_VACUUM) -> np.ndarray:
    """Convex entropy per cell: internal energy + kinetic density."""
    u = velocity(state, eps_vac)
    return model.pressure.internal_energy(state.rho) + 0.5 * state.rho * u * u


def center_of_mass(grid: Grid, state: State) -> float:
    mass = total_mass(grid, state)
    if mass <= 0:
        raise ValueError("center of mass undefined for zero mass")
    return float(np.sum(grid.widths * state.rho * grid.centers)) / mass


def dissipation_terms(grid: Grid, state: State, gamma: float,
                      psi=None, psi_conv=None,
                      eps_vac: float = EPS_VACUUM,
                      pairwise_limit: int = 4096) -> float:
    """Right-hand side of the discrete energy identity:
    -gamma sum dx rho u^2 - (1/2) sum dx dx rho rho (u_i - u_j)^2 psi_ij.

    Small grids take the explicit pairwise double sum (each term nonnegative,
    so the sign survives rounding); large uniform grids use the convolution
    identity instead.
    """
    u = velocity(state, eps_vac)
    dx = grid.widths
    out = -gamma * float(np.sum(dx * state.rho * u * u))
    if psi is None and psi_conv is None:
        return out
    if psi is not None and grid.n <= pairwise_limit:
        from .reconstruction import psi_matrix
        mat = psi_matrix(grid, psi)
        a = dx * state.rho
        du = u[:, None] - u[None, :]
        out -= 0.5 * float(np.sum(a[:, None] * a[None, :] * mat * du * du))
        return out
    if psi_conv is None:
        from .reconstruction import PsiConvolution
        psi_conv = PsiConvolution(grid, psi)
    # (u_i-u_j)^2 expanded through the symmetric convolution
    total = (np.sum(state.rho * u * u * psi_conv.apply(state.rho) * dx)
             - np.sum(state.rho * u * psi_conv.apply(state.rho * u) * dx))
    return out - float(total)


def make_record(grid: Grid, state: State, model: FreeEnergyModel, cfg,
                ws) -> DiagnosticsRecord:
    """Diagnostics row for the integrator's per-step log."""
    kin = kinetic_energy(grid, state, cfg.eps_vac)
    free = discrete_free_energy(grid, state, model, ws.ops)
    mass = total_mass(grid, state)
    diss = dissipation_terms(grid, state, cfg.gamma, psi=cfg.psi,
                             psi_conv=ws.psi_conv, eps_vac=cfg.eps_vac)
    cell_masses = grid.widths * state.rho
    frac = float(np.max(cell_masses) / mass) if mass > 0 else 0.0
    return DiagnosticsRecord(
        time=state.time,
        mass=mass,
        momentum=float(np.sum(grid.widths * state.mom)),
        kinetic_energy=kin,
        free_energy=free,
        total_energy=kin + free,
        center_of_mass=center_of_mass(grid, state) if mass > 0 else np.nan,
        variation=free_energy_variation(grid, state, model, ws.ops, cfg.eps_vac),
        entropy=entropy_field(grid, state, model, cfg.eps_vac),
        dissipation=diss,
        max_cell_mass_fraction=frac,
    )


def coarsen_density(ref_grid: Grid, ref_rho: np.ndarray, coarse_grid: Grid) -> np.ndarray:
    """Block means of the reference cell averages onto the coarse grid
    (mass-conservative on uniform nested grids)."""
    if ref_grid.n % coarse_grid.n != 0:
        raise ValueError("reference cell count must be a multiple of the coarse count")
    if not (np.isclose(ref_grid.faces[0], coarse_grid.faces[0])
            and np.isclose(ref_grid.faces[-1], coarse_grid.faces[-1])):
        raise ValueError("grids cover different intervals")
    factor = ref_grid.n // coarse_grid.n
    return ref_rho.reshape(coarse_grid.n, factor).mean(axis=1)


def l1_error(coarse_grid: Grid, state: State, ref_grid: Grid, ref_rho: np.ndarray,
             mask: np.ndarray | None = None) -> float:
    """sum dx |rho - coarsened reference rho|, optionally over a cell mask."""
    rho_bar = coarsen_density(ref_grid, ref_rho, coarse_grid)
    diff = np.abs(state.rho - rho_bar)
    if mask is not None:
        diff = diff * mask
    return float(np.sum(coarse_grid.widths * diff))


def support_mask(rho_ref_coarse: np.ndarray, threshold: float = 1e-3,
                 margin_cells: int = 3) -> np.ndarray:
    """Cells inside the reference support and at least margin_cells away from
    its boundary (used for the vacuum-interface accuracy protocol)."""
    inside = rho_ref_coarse > threshold
    mask = inside.copy()
    for _ in range(margin_cells):
        shrunk = mask.copy()
        shrunk[:-1] &= mask[1:]
        shrunk[1:] &= mask[:-1]
        mask = shrunk
    return mask.astype(float)


def convergence_order(errors) -> np.ndarray:
    """log2 of consecutive error ratios over halved mesh widths."""
    errors = np.asarray(errors, dtype=float)
    if errors.size < 2:
        raise ValueError("need at least two errors")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive")
    return np.log2(errors[:-1] / errors[1:])
