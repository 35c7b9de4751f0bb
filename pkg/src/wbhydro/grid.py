"""1D finite volume mesh and conserved-state containers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS_VACUUM = 1e-12


@dataclass(frozen=True)
class Grid:
    """Cell partition of an interval, possibly nonuniform.

    faces   : ordered face positions, length n + 1
    centers : cell midpoints, length n
    widths  : face differences, length n, all positive
    """

    faces: np.ndarray
    centers: np.ndarray = field(init=False)
    widths: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        faces = np.asarray(self.faces, dtype=float)
        if faces.ndim != 1 or faces.size < 3:
            raise ValueError("need at least 3 faces (2 cells)")
        widths = np.diff(faces)
        if np.any(widths <= 0):
            raise ValueError("faces must be strictly increasing")
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "centers", 0.5 * (faces[:-1] + faces[1:]))
        object.__setattr__(self, "widths", widths)

    @property
    def n(self) -> int:
        return self.centers.size

    @property
    def is_uniform(self) -> bool:
        w = self.widths
        return bool(np.allclose(w, w[0], rtol=1e-12, atol=0.0))


@dataclass(frozen=True)
class State:
    """Per-cell density and momentum averages at one instant."""

    rho: np.ndarray
    mom: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=float)
        mom = np.asarray(self.mom, dtype=float)
        if rho.shape != mom.shape or rho.ndim != 1:
            raise ValueError("rho and mom must be 1D arrays of equal length")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mom", mom)


def make_uniform_grid(a: float, b: float, n: int) -> Grid:
    """Uniform grid of n cells on [a, b]."""
    if n < 2:
        raise ValueError(f"need at least 2 cells, got {n}")
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    return Grid(np.linspace(a, b, n + 1))


def total_mass(grid: Grid, state: State) -> float:
    """Discrete mass sum(dx_i * rho_i)."""
    return float(np.sum(grid.widths * state.rho))


def velocity(state: State, eps_vac: float = EPS_VACUUM) -> np.ndarray:
    """Cell velocity mom/rho, zero on cells at or below the vacuum threshold."""
    if eps_vac <= 0:
        raise ValueError("eps_vac must be positive")
    wet = state.rho > eps_vac
    u = np.zeros_like(state.rho)
    np.divide(state.mom, state.rho, out=u, where=wet)
    return u
