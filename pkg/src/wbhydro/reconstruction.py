"""Well-balanced interface reconstruction and source-term assembly.

Interface densities are recovered by applying the zero-extended inverse of the
chemical potential to per-cell offsets of the free-energy variation; at a
discrete steady state both sides of every interior face then agree exactly,
which is what lets fluxes and sources cancel to machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .free_energy import FreeEnergyModel, ModelOperators
from .grid import EPS_VACUUM, Grid, State, velocity


@dataclass(frozen=True)
class InterfaceStates:
    """Left/right states at the n-1 interior faces plus the face potential."""

    rho_minus: np.ndarray
    u_minus: np.ndarray
    rho_plus: np.ndarray
    u_plus: np.ndarray
    h_face: np.ndarray


@dataclass(frozen=True)
class SourceTerms:
    """Momentum source split per cell; the density component is identically zero.

    s_minus/s_plus carry the interface-distributed pressure differences,
    s_center the second-order centred correction (zero at first order), and
    damping the linear plus alignment drag.  ``momentum`` is the assembled
    total; it groups the pressure differences so that the cell-pressure terms
    cancel algebraically instead of in floating point, which keeps the
    steady-state balance against the flux divergence at the rounding floor.
    """

    s_minus: np.ndarray
    s_plus: np.ndarray
    s_center: np.ndarray
    damping: np.ndarray
    momentum: np.ndarray


@dataclass(frozen=True)
class BoundaryValues:
    """Limited in-cell face values for the second-order scheme.

    ``w`` is the reconstructed free-energy variation (chemical potential plus
    H); carrying it explicitly keeps the steady-state cancellation bitwise.
    """

    rho_l: np.ndarray
    rho_r: np.ndarray
    u_l: np.ndarray
    u_r: np.ndarray
    h_l: np.ndarray
    h_r: np.ndarray
    w_l: np.ndarray
    w_r: np.ndarray


def interface_H(h_left, h_right, rule: str = "max"):
    """Face potential from the two adjacent values: upwind max or average."""
    if rule == "max":
        return np.maximum(h_left, h_right)
    if rule == "average":
        return 0.5 * (h_left + h_right)
    raise ValueError(f"unknown interface rule {rule!r}")


def _cell_variation(rho, h, law, eps_vac):
    """Chemical potential + H, with dry cells pinned to H (their reconstructed
    density is forced to zero separately, so the value never feeds a flux)."""
    w = h.copy()
    wet = rho > eps_vac
    if np.any(wet):
        w[wet] = law.chemical_potential(rho[wet]) + h[wet]
    return w


def reconstruct_first_order(grid: Grid, state: State, h: np.ndarray,
                            model: FreeEnergyModel, rule: str = "max",
                            eps_vac: float = EPS_VACUUM) -> InterfaceStates:
    """Hydrostatic-type interface values from cell averages."""
    law = model.pressure
    u = velocity(state, eps_vac)
    w = _cell_variation(state.rho, h, law, eps_vac)
    wet = state.rho > eps_vac

    h_face = interface_H(h[:-1], h[1:], rule)
    rho_minus = law.density_from_potential(w[:-1] - h_face)
    rho_plus = law.density_from_potential(w[1:] - h_face)
    rho_minus = np.where(wet[:-1], rho_minus, 0.0)
    rho_plus = np.where(wet[1:], rho_plus, 0.0)
    return InterfaceStates(rho_minus=rho_minus, u_minus=u[:-1],
                           rho_plus=rho_plus, u_plus=u[1:], h_face=h_face)


def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Zero across sign changes, else the smaller-magnitude argument."""
    same = a * b > 0
    out = np.zeros_like(a)
    out[same] = np.sign(a[same]) * np.minimum(np.abs(a[same]), np.abs(b[same]))
    return out


def _limited_slopes(values: np.ndarray) -> np.ndarray:
    """Minmod of one-sided differences; zero in the outermost cells."""
    s = np.zeros_like(values)
    s[1:-1] = minmod(values[1:-1] - values[:-2], values[2:] - values[1:-1])
    return s


def muscl_boundary_values(grid: Grid, state: State, h: np.ndarray,
                          model: FreeEnergyModel, mode: str = "composite",
                          eps_vac: float = EPS_VACUUM) -> BoundaryValues:
    """Limited linear in-cell face values of density, velocity and potential.

    mode "composite" reconstructs the variation w = chemical potential + H and
    derives the face potentials by subtraction (required to keep dry/wet
    interfaces well balanced); mode "direct" limits H itself.
    """
    if grid.n < 3:
        raise ValueError("second-order reconstruction needs at least 3 cells")
    law = model.pressure
    rho = state.rho
    u = velocity(state, eps_vac)
    wet = rho > eps_vac

    s_rho = _limited_slopes(rho)
    s_u = _limited_slopes(u)
    rho_l = rho - 0.5 * s_rho
    rho_r = rho + 0.5 * s_rho
    u_l = u - 0.5 * s_u
    u_r = u + 0.5 * s_u

    wet_l = wet & (rho_l > eps_vac)
    wet_r = wet & (rho_r > eps_vac)
    if mode == "composite":
        w = _cell_variation(rho, h, law, eps_vac)
        s_w = _limited_slopes(w)
        w_l = w - 0.5 * s_w
        w_r = w + 0.5 * s_w
        h_l = np.where(wet_l, w_l - _safe_mu(law, rho_l, wet_l), h)
        h_r = np.where(wet_r, w_r - _safe_mu(law, rho_r, wet_r), h)
    elif mode == "direct":
        s_h = _limited_slopes(h)
        h_l = h - 0.5 * s_h
        h_r = h + 0.5 * s_h
        w_l = np.where(wet_l, _safe_mu(law, rho_l, wet_l) + h_l, h_l)
        w_r = np.where(wet_r, _safe_mu(law, rho_r, wet_r) + h_r, h_r)
    else:
        raise ValueError(f"unknown reconstruction mode {mode!r}")
    rho_l = np.where(wet, rho_l, 0.0)
    rho_r = np.where(wet, rho_r, 0.0)
    u_l = np.where(wet, u_l, 0.0)
    u_r = np.where(wet, u_r, 0.0)
    return BoundaryValues(rho_l=rho_l, rho_r=rho_r, u_l=u_l, u_r=u_r,
                          h_l=h_l, h_r=h_r, w_l=w_l, w_r=w_r)


def _safe_mu(law, rho, mask):
    out = np.zeros_like(rho)
    if np.any(mask):
        out[mask] = law.chemical_potential(rho[mask])
    return out


def reconstruct_second_order(grid: Grid, bv: BoundaryValues,
                             model: FreeEnergyModel, rule: str = "max",
                             eps_vac: float = EPS_VACUUM) -> InterfaceStates:
    """Interface values from the limited face values, re-balanced through the
    inverse chemical potential exactly as at first order."""
    law = model.pressure
    h_face = interface_H(bv.h_r[:-1], bv.h_l[1:], rule)
    rho_minus = law.density_from_potential(bv.w_r[:-1] - h_face)
    rho_plus = law.density_from_potential(bv.w_l[1:] - h_face)
    rho_minus = np.where(bv.rho_r[:-1] > eps_vac, rho_minus, 0.0)
    rho_plus = np.where(bv.rho_l[1:] > eps_vac, rho_plus, 0.0)
    return InterfaceStates(rho_minus=rho_minus, u_minus=bv.u_r[:-1],
                           rho_plus=rho_plus, u_plus=bv.u_l[1:], h_face=h_face)


def psi_matrix(grid: Grid, psi: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Point values psi(x_i - x_j); symmetric for symmetric psi."""
    offsets = grid.centers[:, None] - grid.centers[None, :]
    return psi(offsets)


class PsiConvolution:
    """v -> sum_j dx_j psi_ij v_j with a cached-FFT Toeplitz product on large
    uniform grids and the dense matrix otherwise."""

    _FFT_THRESHOLD = 1024

    def __init__(self, grid: Grid, psi: Callable[[np.ndarray], np.ndarray]):
        self.grid = grid
        self.psi = psi
        n = grid.n
        if grid.is_uniform and n > self._FFT_THRESHOLD:
            from scipy import fft as sfft

            dx = float(grid.widths[0])
            samples = psi(dx * np.arange(-(n - 1), n))
            self._mode = "fft"
            self._nfft = sfft.next_fast_len(3 * n - 2, real=True)
            self._kernel_hat = sfft.rfft(samples, self._nfft)
            self._sfft = sfft
        else:
            self._mode = "dense"
            self._matrix = psi_matrix(grid, psi)

    def apply(self, values: np.ndarray) -> np.ndarray:
        dxv = self.grid.widths * values
        if self._mode == "fft":
            n = self.grid.n
            vhat = self._sfft.rfft(dxv, self._nfft)
            return self._sfft.irfft(self._kernel_hat * vhat, self._nfft)[n - 1:2 * n - 1]
        return self._matrix @ dxv


def alignment_source(rho: np.ndarray, u: np.ndarray,
                     psi_conv: PsiConvolution) -> np.ndarray:
    """- rho_i sum_j dx_j (u_i - u_j) rho_j psi_ij (velocity-alignment drag)."""
    return -rho * (u * psi_conv.apply(rho) - psi_conv.apply(rho * u))


def _damping_source(grid: Grid, state: State, gamma: float,
                    psi_conv: Optional[PsiConvolution],
                    eps_vac: float) -> np.ndarray:
    u = velocity(state, eps_vac)
    damping = -gamma * state.rho * u
    if psi_conv is not None:
        damping = damping + alignment_source(state.rho, u, psi_conv)
    return damping


def first_order_sources(grid: Grid, state: State, interfaces: InterfaceStates,
                        model: FreeEnergyModel, gamma: float = 0.0,
                        psi_conv: Optional[PsiConvolution] = None,
                        eps_vac: float = EPS_VACUUM) -> SourceTerms:
    """Interface-distributed pressure source plus damping.

    Boundary faces carry no reconstructed state (no-flux walls), so the
    outside pressure is zero there; that keeps wall cells balanced too.
    """
    law = model.pressure
    p_minus_ext = np.concatenate((law.pressure(interfaces.rho_minus), [0.0]))
    p_plus_ext = np.concatenate(([0.0], law.pressure(interfaces.rho_plus)))
    p_cell = law.pressure(state.rho)
    dx = grid.widths
    s_minus = (p_minus_ext - p_cell) / dx
    s_plus = (p_cell - p_plus_ext) / dx
    damping = _damping_source(grid, state, gamma, psi_conv, eps_vac)
    momentum = (p_minus_ext - p_plus_ext) / dx + damping
    return SourceTerms(s_minus=s_minus, s_plus=s_plus,
                       s_center=np.zeros_like(p_cell), damping=damping,
                       momentum=momentum)


def second_order_sources(grid: Grid, state: State, bv: BoundaryValues,
                         interfaces: InterfaceStates, model: FreeEnergyModel,
                         gamma: float = 0.0,
                         psi_conv: Optional[PsiConvolution] = None,
                         eps_vac: float = EPS_VACUUM) -> SourceTerms:
    """Interface parts against the in-cell face pressures plus the centred
    correction built from the steady-state relation at the mid-cell potential."""
    law = model.pressure
    dx = grid.widths
    p_l = law.pressure(bv.rho_l)
    p_r = law.pressure(bv.rho_r)
    p_minus_ext = np.concatenate((law.pressure(interfaces.rho_minus), [0.0]))
    p_plus_ext = np.concatenate(([0.0], law.pressure(interfaces.rho_plus)))
    s_minus = (p_minus_ext - p_r) / dx
    s_plus = (p_l - p_plus_ext) / dx

    h_star = 0.5 * (bv.h_l + bv.h_r)
    wet = state.rho > eps_vac
    rho_star_l = np.where(wet, law.density_from_potential(bv.w_l - h_star), 0.0)
    rho_star_r = np.where(wet, law.density_from_potential(bv.w_r - h_star), 0.0)
    p_star_l = law.pressure(rho_star_l)
    p_star_r = law.pressure(rho_star_r)
    s_center = (p_r - p_star_r - p_l + p_star_l) / dx

    damping = _damping_source(grid, state, gamma, psi_conv, eps_vac)
    # p_l and p_r cancel between the interface and centred parts
    momentum = (p_minus_ext - p_plus_ext + p_star_l - p_star_r) / dx + damping
    return SourceTerms(s_minus=s_minus, s_plus=s_plus, s_center=s_center,
                       damping=damping, momentum=momentum)


def cucker_smale_psi(x):
    """Communication function (1 + x^2)^(-1/4)."""
    x = np.asarray(x, dtype=float)
    return (1.0 + x * x) ** -0.25
