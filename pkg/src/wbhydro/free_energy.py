"""Free-energy models: internal energy / pressure pairs, external potentials,
interaction kernels, and assembly of the per-cell potential field.

The internal energy density ``e(rho)`` and the pressure ``P(rho)`` are tied by
``rho * e''(rho) = P'(rho)``.  Its derivative ``e'(rho)`` (the chemical
potential) has an inverse on positive densities; that inverse, extended by
zero outside the range of ``e'``, is what the hydrostatic-type reconstruction
uses to recover interface densities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import brentq

from .grid import EPS_VACUUM, Grid, State


class OverpackedError(ValueError):
    """Hard-rod packing fraction reached 1 somewhere (log of nonpositive)."""


class SteadyStateError(RuntimeError):
    """Fixed-point iteration for a discrete steady state failed to converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# pressure laws
# ---------------------------------------------------------------------------


def _require_nonnegative(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("negative density")
    return rho


def _require_positive(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("density must be positive")
    return rho


@dataclass(frozen=True)
class IdealGas:
    """P(rho) = rho, internal energy rho*(ln rho - 1)."""

    vacuum_capable = False
    exponent = 1.0

    def internal_energy(self, rho):
        rho = _require_nonnegative(rho)
        out = np.zeros_like(rho)
        pos = rho > 0
        with np.errstate(divide="ignore"):
            np.multiply(rho, np.log(rho, where=pos, out=np.zeros_like(rho)) - 1.0,
                        out=out, where=pos)
        return out

    def chemical_potential(self, rho):
        return np.log(_require_positive(rho))

    def density_from_potential(self, s):
        return np.exp(np.asarray(s, dtype=float))

    def pressure(self, rho):
        return _require_nonnegative(rho).copy()

    def pressure_prime(self, rho):
        return np.ones_like(_require_nonnegative(rho))


@dataclass(frozen=True)
class PowerLaw:
    """P(rho) = rho^m with m > 1; supports vacuum through the zero-extended inverse."""

    m: float

    vacuum_capable = True

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise ValueError("power-law exponent must exceed 1")

    @property
    def exponent(self) -> float:
        return self.m

    def internal_energy(self, rho):
        rho = _require_nonnegative(rho)
        return rho ** self.m / (self.m - 1.0)

    def chemical_potential(self, rho):
        rho = _require_nonnegative(rho)
        return self.m / (self.m - 1.0) * rho ** (self.m - 1.0)

    def density_from_potential(self, s):
        s = np.asarray(s, dtype=float)
        core = np.clip((self.m - 1.0) / self.m * s, 0.0, None)
        return core ** (1.0 / (self.m - 1.0))

    def pressure(self, rho):
        return _require_nonnegative(rho) ** self.m

    def pressure_prime(self, rho):
        return self.m * _require_nonnegative(rho) ** (self.m - 1.0)


@dataclass(frozen=True)
class ScaledIdeal:
    """P(rho) = sigma * rho for a noise strength sigma > 0."""

    sigma: float

    vacuum_capable = False
    exponent = 1.0

    def __post_init__(self) -> None:
        # sigma = 0 loses hyperbolicity (pressure term vanishes)
        if not self.sigma > 0:
            raise ValueError("noise strength must be positive")

    def internal_energy(self, rho):
        rho = _require_nonnegative(rho)
        out = np.zeros_like(rho)
        pos = rho > 0
        with np.errstate(divide="ignore"):
            np.multiply(rho, np.log(rho, where=pos, out=np.zeros_like(rho)) - 1.0,
                        out=out, where=pos)
        return self.sigma * out

    def chemical_potential(self, rho):
        return self.sigma * np.log(_require_positive(rho))

    def density_from_potential(self, s):
        return np.exp(np.asarray(s, dtype=float) / self.sigma)

    def pressure(self, rho):
        return self.sigma * _require_nonnegative(rho)

    def pressure_prime(self, rho):
        return np.full_like(_require_nonnegative(rho), self.sigma)


PressureLaw = Union[IdealGas, PowerLaw, ScaledIdeal]


# ---------------------------------------------------------------------------
# external potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoPotential:
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class QuadraticWell:
    """V(x) = a x^2 / 2."""

    a: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.a * x * x


@dataclass(frozen=True)
class DoubleWell:
    """V(x) = a x^4 - b x^2 with a, b > 0."""

    a: float
    b: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        return self.a * x2 * x2 - self.b * x2


@dataclass(frozen=True)
class QuarticWell:
    """V(x) = x^4/4 - c x^2/2."""

    c: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        return 0.25 * x2 * x2 - 0.5 * self.c * x2


@dataclass(frozen=True)
class TabulatedPotential:
    """Potential sampled on a set of positions, linearly interpolated."""

    x: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.x, self.values)


ExternalPotential = Union[NoPotential, QuadraticWell, DoubleWell, QuarticWell,
                          TabulatedPotential]


# ---------------------------------------------------------------------------
# interaction kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticKernel:
    """W(x) = x^2 / 2 (smooth; admits an exact moment decomposition)."""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x

    cell_averaged = False


@dataclass(frozen=True)
class HomogeneousKernel:
    """W(x) = |x|^alpha / alpha (ln|x| at alpha = 0), locally integrable for alpha > -1.

    Discretized by exact cell averages so the singular range alpha <= 0 stays
    finite; the closed-form antiderivative covers every admissible alpha.
    """

    alpha: float

    cell_averaged = True

    def __post_init__(self) -> None:
        if self.alpha <= -1:
            raise ValueError("homogeneous kernel is not locally integrable for alpha <= -1")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        if self.alpha == 0.0:
            with np.errstate(divide="ignore"):
                return np.log(ax)
        with np.errstate(divide="ignore"):
            return ax ** self.alpha / self.alpha

    def antiderivative(self, y):
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        if self.alpha == 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = y * np.log(ay) - y
            return np.where(ay == 0.0, 0.0, out)
        a = self.alpha
        return np.sign(y) * ay ** (a + 1.0) / (a * (a + 1.0))

    def cell_average(self, offset, width):
        """Average of W over an interval of the given width centred at offset."""
        lo = offset - 0.5 * width
        hi = offset + 0.5 * width
        return (self.antiderivative(hi) - self.antiderivative(lo)) / width


@dataclass(frozen=True)
class GaussianKernel:
    """Morse-type attraction W(x) = -exp(-x^2/2)/sqrt(2 pi)."""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return -np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)

    cell_averaged = False


@dataclass(frozen=True)
class HardRodKernel:
    """Characteristic function of [-sigma/2, sigma/2]; its convolution is the
    packing fraction of rods of length sigma."""

    sigma: float

    cell_averaged = True

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("rod length must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (np.abs(x) <= 0.5 * self.sigma).astype(float)

    def cell_average(self, offset, width):
        lo = np.clip(offset - 0.5 * width, -0.5 * self.sigma, 0.5 * self.sigma)
        hi = np.clip(offset + 0.5 * width, -0.5 * self.sigma, 0.5 * self.sigma)
        return (hi - lo) / width


InteractionKernel = Union[QuadraticKernel, HomogeneousKernel, GaussianKernel,
                          HardRodKernel]


@dataclass(frozen=True)
class LogComplement:
    """Nonlinearity K(c) = ln(1 - c) applied to the kernel convolution."""

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        if np.any(c >= 1.0):
            raise OverpackedError("convolution reached 1; ln(1-c) undefined")
        return np.log1p(-c)

    def prime(self, c):
        c = np.asarray(c, dtype=float)
        if np.any(c >= 1.0):
            raise OverpackedError("convolution reached 1; ln(1-c) undefined")
        return -1.0 / (1.0 - c)


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeEnergyModel:
    """Everything that defines the free energy: internal part, external
    potential, interaction kernel with an optional nonlinearity, and the
    hard-rod wiring that replaces the plain convolution by the exact 1D
    excess functional."""

    pressure: PressureLaw
    potential: ExternalPotential = NoPotential()
    kernel: Optional[InteractionKernel] = None
    nonlinearity: Optional[LogComplement] = None
    hard_rods: bool = False

    def __post_init__(self) -> None:
        if self.hard_rods and not isinstance(self.kernel, HardRodKernel):
            raise ValueError("hard-rod wiring needs a HardRodKernel")
        if self.nonlinearity is not None and self.kernel is None:
            raise ValueError("a nonlinearity needs an interaction kernel")

    @property
    def rod_sigma(self) -> float:
        if not isinstance(self.kernel, HardRodKernel):
            raise ValueError("model has no rods")
        return self.kernel.sigma


def hard_rod_model(sigma: float, potential: ExternalPotential = NoPotential()) -> FreeEnergyModel:
    """Percus hard-rod model: ideal pressure plus the exact excess functional."""
    return FreeEnergyModel(pressure=IdealGas(), potential=potential,
                           kernel=HardRodKernel(sigma), nonlinearity=LogComplement(),
                           hard_rods=True)


# ---------------------------------------------------------------------------
# kernel discretization
# ---------------------------------------------------------------------------


def kernel_matrix(grid: Grid, kernel: InteractionKernel) -> np.ndarray:
    """Matrix W_ij discretizing the interaction so that the convolution at x_i
    is sum_j dx_j W_ij rho_j.

    Smooth kernels are point-sampled at x_i - x_j; kernels flagged as
    cell-averaged use the exact average of W over the interval of length dx_j
    centred at x_i - x_j.
    """
    if kernel is None:
        raise ValueError("no kernel")
    xi = grid.centers[:, None]
    xj = grid.centers[None, :]
    offsets = xi - xj
    if kernel.cell_averaged:
        return kernel.cell_average(offsets, grid.widths[None, :])
    return kernel(offsets)


class KernelConvolution:
    """Applies v -> sum_j dx_j W_ij v_j without materializing W when avoidable.

    Quadratic kernels reduce to three moments of v.  On uniform grids the
    matrix is Toeplitz and the product runs through a cached real FFT once n
    is large; small or nonuniform problems use the dense matrix.
    """

    _FFT_THRESHOLD = 1024

    def __init__(self, grid: Grid, kernel: InteractionKernel):
        self.grid = grid
        self.kernel = kernel
        self._mode = "dense"
        if isinstance(kernel, QuadraticKernel):
            self._mode = "moments"
            return
        n = grid.n
        if grid.is_uniform and n > self._FFT_THRESHOLD:
            from scipy import fft as sfft

            dx = float(grid.widths[0])
            lags = dx * np.arange(-(n - 1), n)
            if kernel.cell_averaged:
                samples = kernel.cell_average(lags, dx)
            else:
                samples = kernel(lags)
            self._mode = "fft"
            self._nfft = sfft.next_fast_len(3 * n - 2, real=True)
            self._kernel_hat = sfft.rfft(samples, self._nfft)
            self._sfft = sfft
        else:
            self._matrix = kernel_matrix(grid, kernel)

    def apply(self, values: np.ndarray) -> np.ndarray:
        dxv = self.grid.widths * values
        if self._mode == "moments":
            x = self.grid.centers
            m0 = np.sum(dxv)
            m1 = np.sum(dxv * x)
            m2 = np.sum(dxv * x * x)
            return 0.5 * m0 * x * x - m1 * x + 0.5 * m2
        if self._mode == "fft":
            n = self.grid.n
            vhat = self._sfft.rfft(dxv, self._nfft)
            conv = self._sfft.irfft(self._kernel_hat * vhat, self._nfft)
            return conv[n - 1:2 * n - 1]
        return self._matrix @ dxv


# ---------------------------------------------------------------------------
# hard-rod excess functional (Percus)
# ---------------------------------------------------------------------------


def _cumulative_cell_integral(grid: Grid, values: np.ndarray):
    """Returns F with F(x) = integral of the piecewise-constant field up to x,
    evaluated by linear interpolation on faces (constant outside the domain)."""
    cum = np.concatenate(([0.0], np.cumsum(grid.widths * values)))

    def evaluate(x):
        return np.interp(x, grid.faces, cum)

    return evaluate


def packing_fraction(grid: Grid, state: State, sigma: float) -> np.ndarray:
    """Integral of rho over the rod-length window centred at each cell."""
    if not sigma > 0:
        raise ValueError("rod length must be positive")
    cum = _cumulative_cell_integral(grid, state.rho)
    x = grid.centers
    return cum(x + 0.5 * sigma) - cum(x - 0.5 * sigma)


def _shifted_density(grid: Grid, rho: np.ndarray, shift: float) -> np.ndarray:
    """rho(x + shift) by linear interpolation between cell averages, zero outside."""
    return np.interp(grid.centers + shift, grid.centers, rho, left=0.0, right=0.0)


def _percus_fields(grid: Grid, state: State, sigma: float):
    x = grid.centers
    cum = _cumulative_cell_integral(grid, state.rho)
    eta = cum(x + 0.5 * sigma) - cum(x - 0.5 * sigma)
    eta_left = cum(x) - cum(x - sigma)        # packing at x - sigma/2
    eta_right = cum(x + sigma) - cum(x)       # packing at x + sigma/2
    if np.any(eta >= 1.0) or np.any(eta_left >= 1.0) or np.any(eta_right >= 1.0):
        raise OverpackedError(
            f"packing fraction reached {max(eta.max(), eta_left.max(), eta_right.max()):.6f}"
        )
    rho_up = _shifted_density(grid, state.rho, +0.5 * sigma)
    rho_down = _shifted_density(grid, state.rho, -0.5 * sigma)
    return eta, eta_left, eta_right, rho_up, rho_down


def hard_rod_variation(grid: Grid, state: State, sigma: float) -> np.ndarray:
    """Variation of the Percus excess free energy.

    Two one-sided log terms plus the window integral of
    [rho(y + sigma/2) + rho(y - sigma/2)] / (1 - eta(y)) over y in
    [x - sigma/2, x + sigma/2], halved.
    """
    eta, eta_left, eta_right, rho_up, rho_down = _percus_fields(grid, state, sigma)
    ratio = (rho_up + rho_down) / (1.0 - eta)
    cum_ratio = _cumulative_cell_integral(grid, ratio)
    x = grid.centers
    window = cum_ratio(x + 0.5 * sigma) - cum_ratio(x - 0.5 * sigma)
    return -0.5 * np.log1p(-eta_left) - 0.5 * np.log1p(-eta_right) + 0.5 * window


def hard_rod_excess_energy(grid: Grid, state: State, sigma: float) -> float:
    """Percus excess free energy with the same overlap-weight quadrature."""
    eta, _, _, rho_up, rho_down = _percus_fields(grid, state, sigma)
    return float(np.sum(grid.widths * (-0.5) * (rho_up + rho_down) * np.log1p(-eta)))


# ---------------------------------------------------------------------------
# potential field assembly
# ---------------------------------------------------------------------------


class ModelOperators:
    """Per-(grid, model) cache: potential samples and kernel convolution."""

    def __init__(self, grid: Grid, model: FreeEnergyModel):
        self.grid = grid
        self.model = model
        self.v_centers = model.potential(grid.centers)
        self.convolution = None
        if model.kernel is not None and not model.hard_rods:
            self.convolution = KernelConvolution(grid, model.kernel)


def potential_field(grid: Grid, state: State, model: FreeEnergyModel,
                    ops: ModelOperators | None = None) -> np.ndarray:
    """Per-cell potential H_i entering the momentum source.

    Identity wiring: V_i + sum_j dx_j W_ij rho_j.  With a nonlinearity K the
    interaction contributes K(c)/2 + K'(c) c / 2 at c = sum_j dx_j W_ij rho_j.
    Hard rods replace the convolution by the Percus excess variation.
    """
    if ops is None:
        ops = ModelOperators(grid, model)
    h = ops.v_centers.copy()
    if model.hard_rods:
        return h + hard_rod_variation(grid, state, model.rod_sigma)
    if model.kernel is None:
        return h
    c = ops.convolution.apply(state.rho)
    if model.nonlinearity is None:
        return h + c
    k = model.nonlinearity
    return h + 0.5 * k(c) + 0.5 * k.prime(c) * c


# ---------------------------------------------------------------------------
# discrete steady states
# ---------------------------------------------------------------------------


def _level_for_mass(grid: Grid, law: PressureLaw, h: np.ndarray, mass: float) -> float:
    """Solve sum(dx * xi((C - H)+)) = mass for the level C."""
    dx = grid.widths
    if isinstance(law, (IdealGas, ScaledIdeal)):
        # C = s*ln(mass / sum(dx exp(-H/s))), shifted by min(H) against overflow
        s = law.sigma if isinstance(law, ScaledIdeal) else 1.0
        h0 = float(np.min(h))
        lse = h0 - s * np.log(np.sum(dx * np.exp(-(h - h0) / s)))
        return float(s * np.log(mass) + lse)

    def excess(level):
        return float(np.sum(dx * law.density_from_potential(level - h))) - mass

    lo = float(np.min(h))
    hi = float(np.max(h)) + 1.0
    while excess(hi) < 0:
        hi = lo + 2.0 * (hi - lo)
    level = brentq(excess, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=300)
    # Newton polish against the analytic slope sum(dx / e''(rho))
    m = law.m
    for _ in range(3):
        rho = law.density_from_potential(level - h)
        err = float(np.sum(dx * rho)) - mass
        slope = float(np.sum(dx[rho > 0] / (m * rho[rho > 0] ** (m - 2.0))))
        if slope == 0:
            break
        level -= err / slope
    return float(level)


def solve_discrete_steady_state(grid: Grid, model: FreeEnergyModel, mass: float,
                                tol: float = 1e-13, damping: float = 0.5,
                                max_iter: int = 10_000,
                                eps_vac: float = EPS_VACUUM) -> State:
    """Zero-velocity state whose free-energy variation is constant on its
    discrete support, with the prescribed mass.

    Damped fixed point rho <- xi((C - H[rho])+), the level C re-solved each
    sweep to match the mass.  Residual is the spread of the variation over the
    support; iteration stops once it falls below tol (or stagnates at a value
    already beneath 100 * tol).
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    ops = ModelOperators(grid, model)
    law = model.pressure
    rho = np.full(grid.n, mass / float(np.sum(grid.widths)))
    best = None
    best_residual = np.inf
    stagnant = 0
    for _ in range(max_iter):
        h = potential_field(grid, State(rho, np.zeros_like(rho)), model, ops)
        level = _level_for_mass(grid, law, h, mass)
        rho_new = law.density_from_potential(level - h)
        h_new = potential_field(grid, State(rho_new, np.zeros_like(rho_new)), model, ops)
        support = rho_new > eps_vac
        if not np.any(support):
            raise SteadyStateError("empty support during fixed-point sweep", np.inf)
        variation = law.chemical_potential(rho_new[support]) + h_new[support]
        residual = float(np.max(variation) - np.min(variation))
        if residual < best_residual - 1e-17:
            best, best_residual, stagnant = rho_new, residual, 0
        else:
            stagnant += 1
        if residual <= tol:
            return State(rho_new, np.zeros_like(rho_new))
        if stagnant > 50 and best_residual <= 100 * tol:
            return State(best, np.zeros_like(best))
        rho = damping * rho_new + (1.0 - damping) * rho
    raise SteadyStateError(
        f"no discrete steady state after {max_iter} sweeps", best_residual)
