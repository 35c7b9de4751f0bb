"""Numerical fluxes at faces: local Lax-Friedrichs (vacuum-free runs) and a
kinetic solver whose equilibrium profile is a box in velocity space, giving
closed-form half-moments that remain valid down to zero density.
"""
from __future__ import annotations

import numpy as np

from .grid import EPS_VACUUM, State, velocity
from .free_energy import PressureLaw

SQRT3 = np.sqrt(3.0)


class FluxVacuumError(ValueError):
    """Vacuum state fed to a flux that cannot represent it."""


def physical_flux(rho, u, law: PressureLaw):
    """F(U) = (rho u, rho u^2 + P(rho))."""
    mass = rho * u
    return mass, mass * u + law.pressure(rho)


def llf_flux(rho_l, u_l, rho_r, u_r, law: PressureLaw,
             eps_vac: float = EPS_VACUUM):
    """Central flux with local spectral-radius dissipation.

    The dissipation coefficient is the two-state maximum of |u| + sqrt(P');
    vacuum-capable pressure laws are rejected because the eigenvalues collapse
    there and the scheme loses its positivity argument.
    """
    rho_l = np.asarray(rho_l, dtype=float)
    rho_r = np.asarray(rho_r, dtype=float)
    u_l = np.asarray(u_l, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    if law.vacuum_capable and (np.any(rho_l <= eps_vac) or np.any(rho_r <= eps_vac)):
        raise FluxVacuumError(
            "local Lax-Friedrichs cannot handle vacuum with this pressure law; "
            "use the kinetic flux")
    f_mass_l, f_mom_l = physical_flux(rho_l, u_l, law)
    f_mass_r, f_mom_r = physical_flux(rho_r, u_r, law)
    lam = np.maximum(np.abs(u_l) + np.sqrt(law.pressure_prime(rho_l)),
                     np.abs(u_r) + np.sqrt(law.pressure_prime(rho_r)))
    f_mass = 0.5 * (f_mass_l + f_mass_r - lam * (rho_r - rho_l))
    f_mom = 0.5 * (f_mom_l + f_mom_r - lam * (rho_r * u_r - rho_l * u_l))
    return f_mass, f_mom


def _kinetic_speed(rho, law: PressureLaw):
    """Half-width scale c of the equilibrium box: c^2 = P(rho)/rho."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    pos = rho > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        np.sqrt(law.pressure(rho) / rho, out=out, where=pos)
    return out


def _half_moments(rho, u, law: PressureLaw, side: str):
    """Moments of xi*(1, xi)*M over xi >= 0 (side "minus") or xi <= 0 ("plus").

    M is the box of height rho/(c*sqrt(12)) on |xi - u| <= sqrt(3) c, whose
    full moments reproduce (rho, rho u, rho u^2 + P) exactly; the half-moments
    are quadratic/cubic polynomials in the clipped bounds.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    c = _kinetic_speed(rho, law)
    height = np.zeros_like(rho)
    pos = rho > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        np.divide(rho, np.sqrt(12.0) * c, out=height, where=pos)
    a = u - SQRT3 * c
    b = u + SQRT3 * c
    if side == "minus":
        lo = np.maximum(a, 0.0)
        hi = np.maximum(b, 0.0)
    else:
        lo = np.minimum(a, 0.0)
        hi = np.minimum(b, 0.0)
    f_mass = height * (hi * hi - lo * lo) / 2.0
    f_mom = height * (hi * hi * hi - lo * lo * lo) / 3.0
    return f_mass, f_mom


def kinetic_flux(rho_l, u_l, rho_r, u_r, law: PressureLaw):
    """Upwind kinetic flux A_-(U_L) + A_+(U_R); total on rho >= 0."""
    fm_l, fq_l = _half_moments(rho_l, u_l, law, "minus")
    fm_r, fq_r = _half_moments(rho_r, u_r, law, "plus")
    return fm_l + fm_r, fq_l + fq_r


def max_wave_speed(state: State, law: PressureLaw, flux: str = "llf",
                   eps_vac: float = EPS_VACUUM) -> float:
    """Fastest signal speed over the cells for the given solver.

    LLF uses |u| + sqrt(P'); the kinetic solver's support edge is
    |u| + sqrt(3) c with c^2 = P/rho.
    """
    u = velocity(state, eps_vac)
    if flux == "llf":
        wet = state.rho > eps_vac
        sound = np.where(wet, np.sqrt(law.pressure_prime(state.rho)), 0.0)
        speeds = np.abs(u) + sound
    elif flux == "kinetic":
        speeds = np.abs(u) + SQRT3 * _kinetic_speed(state.rho, law)
    else:
        raise ValueError(f"unknown flux {flux!r}")
    return float(np.max(speeds)) if speeds.size else 0.0


def kinetic_cfl_speed(state: State, law: PressureLaw,
                      eps_vac: float = EPS_VACUUM) -> float:
    """Time-step speed for the kinetic solver: max|u| + 3^((m-1)/4) for
    P = rho^m; pressure laws without that exact form fall back to the
    support-edge bound."""
    from .free_energy import IdealGas, PowerLaw

    if not isinstance(law, (IdealGas, PowerLaw)):
        return max_wave_speed(state, law, "kinetic", eps_vac)
    u = velocity(state, eps_vac)
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    return umax + 3.0 ** ((law.exponent - 1.0) / 4.0)
