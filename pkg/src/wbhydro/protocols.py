"""Batch execution: scenario runs with CSV output, steady-state preservation
tables, convergence-order studies, and the noise-continuation branch tracer."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import diagnostics as diag
from .config import ScenarioConfig
from .free_energy import FreeEnergyModel, ModelOperators, ScaledIdeal
from .grid import Grid, State, make_uniform_grid, total_mass, velocity
from .integrator import SchemeConfig, SchemeWorkspace, Trajectory, run
from .scenarios import build_grid, exact_solution, initial_state

FLOAT_FMT = "%.17g"   # round-trippable doubles; tables must not be truncated


@dataclass
class RunReport:
    """What one scenario run produced and whether its monitors stayed clean."""

    name: str
    snapshot_paths: List[str] = field(default_factory=list)
    timeseries_path: str = ""
    report_path: str = ""
    final_record: Optional[diag.DiagnosticsRecord] = None
    mass_drift: float = 0.0
    min_density: float = 0.0
    energy_violation: float = 0.0
    blowup_time: Optional[float] = None
    monitors_ok: bool = True
    error: Optional[str] = None
    preservation_rows: list = field(default_factory=list)
    convergence_rows: list = field(default_factory=list)
    branch_rows: list = field(default_factory=list)


def _write_csv(path: str, header: Sequence[str], columns: Sequence[np.ndarray],
               error_marker: Optional[str] = None) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        rows = np.column_stack(columns)
        for row in rows:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
        if error_marker:
            fh.write(f"# error: {error_marker}\n")


def _snapshot_csv(outdir: str, name: str, grid: Grid, state: State,
                  model: FreeEnergyModel, ops: ModelOperators,
                  eps_vac: float, tag: str,
                  error_marker: Optional[str] = None) -> str:
    u = velocity(state, eps_vac)
    variation = diag.free_energy_variation(grid, state, model, ops, eps_vac)
    eta = diag.entropy_field(grid, state, model, eps_vac)
    path = os.path.join(outdir, name, f"snapshot_{tag}.csv")
    _write_csv(path, ["x", "rho", "momentum", "u", "dF_drho", "eta"],
               [grid.centers, state.rho, state.mom, u, variation, eta],
               error_marker)
    return path


def _timeseries_csv(outdir: str, name: str, records,
                    error_marker: Optional[str] = None) -> str:
    path = os.path.join(outdir, name, "timeseries.csv")
    cols = [np.array([r.time for r in records]),
            np.array([r.mass for r in records]),
            np.array([r.momentum for r in records]),
            np.array([r.kinetic_energy for r in records]),
            np.array([r.free_energy for r in records]),
            np.array([r.total_energy for r in records]),
            np.array([r.center_of_mass for r in records])]
    _write_csv(path, ["t", "mass", "momentum", "kinetic", "free_energy",
                      "total_energy", "center_of_mass"], cols, error_marker)
    return path


def output_dir(override: Optional[str] = None) -> str:
    if override:
        return override
    return os.environ.get("WBHYDRO_OUTDIR", "outputs")


def _monitor(report: RunReport, traj: Trajectory, monitor_energy: bool,
             blowup_threshold: float) -> None:
    records = traj.records
    if not records:
        return
    masses = np.array([r.mass for r in records])
    m0 = masses[0] if masses[0] != 0 else 1.0
    report.mass_drift = float(np.max(np.abs(masses - masses[0])) / abs(m0))
    report.min_density = float(traj.min_density_seen)
    energies = np.array([r.total_energy for r in records])
    increases = np.diff(energies)
    report.energy_violation = float(np.max(increases, initial=0.0))
    over = [r.time for r in records if r.max_cell_mass_fraction > blowup_threshold]
    report.blowup_time = over[0] if over else None
    ok = report.mass_drift <= 1e-12 and report.min_density >= -1e-12
    if monitor_energy:
        ok = ok and report.energy_violation <= 1e-10
        ok = ok and all(r.dissipation is None or r.dissipation <= 0.0
                        for r in records)
    report.monitors_ok = ok


def run_scenario(cfg: ScenarioConfig, outdir: Optional[str] = None,
                 scheme_overrides: Optional[dict] = None) -> RunReport:
    """Execute one scenario: snapshot CSV per output time, one time-series CSV,
    and a plain-text report; partial outputs get an error marker row."""
    outdir = output_dir(outdir)
    report = RunReport(name=cfg.name)
    grid = build_grid(cfg)
    model = cfg.build_model()
    scheme = cfg.build_scheme(**(scheme_overrides or {}))
    state0 = initial_state(cfg, grid, model)
    ws = SchemeWorkspace(grid, model, scheme)
    error_marker = None
    try:
        traj = run(grid, state0, model, scheme, ws)
    except Exception as err:  # flush what we have, then re-raise
        error_marker = f"{type(err).__name__}: {err}"
        traj = Trajectory(snapshots=[(0.0, state0)], records=[])
        _snapshot_csv(outdir, cfg.name, grid, state0, model, ws.ops,
                      scheme.eps_vac, "t0", error_marker)
        report.error = error_marker
        report.monitors_ok = False
        _write_report(outdir, report, cfg)
        raise

    for t, state in traj.snapshots:
        tag = f"t{t:.6g}".replace(".", "p").replace("-", "m")
        report.snapshot_paths.append(
            _snapshot_csv(outdir, cfg.name, grid, state, model, ws.ops,
                          scheme.eps_vac, tag))
    report.timeseries_path = _timeseries_csv(outdir, cfg.name, traj.records)
    if traj.records:
        report.final_record = traj.records[-1]
    _monitor(report, traj, cfg.monitor_energy, cfg.blowup_threshold)
    report.report_path = _write_report(outdir, report, cfg)
    return report


def _write_report(outdir: str, report: RunReport, cfg: ScenarioConfig) -> str:
    path = os.path.join(outdir, cfg.name, "report.txt")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    lines = [f"scenario: {cfg.name}",
             f"grid: [{cfg.a}, {cfg.b}] with {cfg.n} cells",
             f"scheme: order {cfg.order}, flux {cfg.flux}, rule {cfg.h_rule}, "
             f"cfl {cfg.cfl}"]
    if report.error:
        lines.append(f"status: FAILED ({report.error})")
    else:
        lines.append("status: completed")
        lines.append(f"mass drift (relative): {report.mass_drift:.3e}")
        lines.append(f"min density seen: {report.min_density:.3e}")
        lines.append(f"largest energy increase: {report.energy_violation:.3e}")
        if report.blowup_time is not None:
            lines.append(f"single-cell concentration (> {cfg.blowup_threshold:.0%} "
                         f"of mass) first at t = {report.blowup_time:.4g}")
        lines.append(f"monitors: {'ok' if report.monitors_ok else 'TRIPPED'}")
    if report.preservation_rows:
        lines.append("")
        lines.append("steady-state preservation (drift from the initial state)")
        lines.append(f"{'order':>6} {'L1 error':>14} {'Linf error':>14}")
        for order, l1, linf in report.preservation_rows:
            lines.append(f"{order:>6} {l1:>14.4E} {linf:>14.4E}")
    if report.convergence_rows:
        lines.append("")
        lines.append("accuracy (L1 error against the reference, halved meshes)")
        lines.append(f"{'cells':>6} {'dx':>12} {'order1 L1':>14} {'rate':>6} "
                     f"{'order2 L1':>14} {'rate':>6}")
        for row in report.convergence_rows:
            n, dx, e1, r1, e2, r2 = row
            r1s = f"{r1:6.2f}" if r1 is not None else "     -"
            r2s = f"{r2:6.2f}" if r2 is not None else "     -"
            lines.append(f"{n:>6} {dx:>12.5g} {e1:>14.4E} {r1s} {e2:>14.4E} {r2s}")
    if report.branch_rows:
        lines.append("")
        lines.append("continuation branch (steady center of mass per noise level)")
        lines.append(f"{'sigma':>10} {'center':>12} {'grid':>24}")
        for sigma, xhat, (ga, gb, gn) in report.branch_rows:
            lines.append(f"{sigma:>10.4g} {xhat:>12.6f} "
                         f"{f'[{ga:.3g}, {gb:.3g}] n={gn}':>24}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# protocol: steady-state preservation
# ---------------------------------------------------------------------------


def preservation_test(cfg: ScenarioConfig, t_end: float = 5.0,
                      outdir: Optional[str] = None,
                      orders: Sequence[int] = (1, 2)) -> RunReport:
    """Start at the discrete steady state, run to t_end, report the L1 and
    Linf drift of the density for each scheme order."""
    from .free_energy import solve_discrete_steady_state

    outdir = output_dir(outdir)
    report = RunReport(name=cfg.name + "_preserve")
    grid = build_grid(cfg)
    model = cfg.build_model()
    steady = solve_discrete_steady_state(grid, model, cfg.mass)
    for order in orders:
        scheme = cfg.build_scheme(order=order, t_end=t_end,
                                  stop_when_steady=False, diagnostics_every=0,
                                  output_interval=None)
        traj = run(grid, steady, model, scheme)
        drift = np.abs(traj.final.rho - steady.rho)
        l1 = float(np.sum(grid.widths * drift))
        linf = float(np.max(drift))
        report.preservation_rows.append((order, l1, linf))
    fake = replace(cfg, name=report.name)
    report.report_path = _write_report(outdir, report, fake)
    return report


# ---------------------------------------------------------------------------
# protocol: order of accuracy
# ---------------------------------------------------------------------------


def _run_to_time(cfg: ScenarioConfig, n: int, order: int, t: float) -> Tuple[Grid, State]:
    sub = replace(cfg, n=n)
    grid = build_grid(sub)
    model = sub.build_model()
    scheme = sub.build_scheme(order=order, t_end=t, output_interval=None,
                              stop_when_steady=False, diagnostics_every=0)
    state0 = initial_state(sub, grid, model)
    traj = run(grid, state0, model, scheme)
    return grid, traj.final


def convergence_study(cfg: ScenarioConfig, cells: Sequence[int] = (50, 100, 200, 400),
                      ref_cells: int = 25600, t: float = 0.3,
                      outdir: Optional[str] = None,
                      orders: Sequence[int] = (1, 2),
                      masked: bool = False,
                      mask_threshold: float = 1e-3,
                      mask_margin: int = 3,
                      ref_order: int = 2) -> RunReport:
    """L1 errors and observed orders on doubling meshes at a transient time.

    The reference is the scenario's exact solution when it declares one,
    otherwise a self-generated fine-mesh run.  ``masked`` restricts the error
    to reference-support cells away from the vacuum interface.
    """
    cells = list(cells)
    for lo, hi in zip(cells, cells[1:]):
        if hi != 2 * lo:
            raise ValueError("cell counts must double")
    outdir = output_dir(outdir)
    report = RunReport(name=cfg.name + "_converge")

    exact = exact_solution(cfg)
    ref = None
    if exact is None:
        for n in cells:
            if ref_cells % n:
                raise ValueError("reference cells must be a multiple of each run")
        ref = _run_to_time(cfg, ref_cells, ref_order, t)

    errors = {order: [] for order in orders}
    for n in cells:
        for order in orders:
            grid, state = _run_to_time(cfg, n, order, t)
            if exact is not None:
                target = exact(grid, t)
                mask = None
                if masked:
                    mask = diag.support_mask(target, mask_threshold, mask_margin)
                diff = np.abs(state.rho - target)
                if mask is not None:
                    diff = diff * mask
                err = float(np.sum(grid.widths * diff))
            else:
                ref_grid, ref_state = ref
                mask = None
                if masked:
                    coarse_ref = diag.coarsen_density(ref_grid, ref_state.rho, grid)
                    mask = diag.support_mask(coarse_ref, mask_threshold, mask_margin)
                err = diag.l1_error(grid, state, ref_grid, ref_state.rho, mask)
            errors[order].append(err)

    rates = {}
    for order in orders:
        errs = np.asarray(errors[order])
        rates[order] = [None] + list(diag.convergence_order(errs))
    for i, n in enumerate(cells):
        dx = (cfg.b - cfg.a) / n
        row = [n, dx]
        for order in orders:
            row.extend([errors[order][i], rates[order][i]])
        report.convergence_rows.append(tuple(row))
    fake = replace(cfg, name=report.name)
    report.report_path = _write_report(outdir, report, fake)
    return report


# ---------------------------------------------------------------------------
# protocol: differential continuation over the noise strength
# ---------------------------------------------------------------------------


def _narrowed_grid(grid: Grid, rho: np.ndarray, n: int,
                   pad_stds: float = 6.0) -> Grid:
    mass = float(np.sum(grid.widths * rho))
    mean = float(np.sum(grid.widths * rho * grid.centers)) / mass
    var = float(np.sum(grid.widths * rho * (grid.centers - mean) ** 2)) / mass
    half = max(pad_stds * np.sqrt(max(var, 0.0)), 10 * (grid.faces[-1] - grid.faces[0]) / n)
    a = max(grid.faces[0], mean - half)
    b = min(grid.faces[-1], mean + half)
    if b - a >= grid.faces[-1] - grid.faces[0]:
        return grid
    return make_uniform_grid(a, b, n)


def _pchip_resample(grid: Grid, rho: np.ndarray, new_grid: Grid,
                    mass: float) -> State:
    interp = PchipInterpolator(grid.centers, rho, extrapolate=False)
    rho_new = interp(new_grid.centers)
    rho_new = np.clip(np.nan_to_num(rho_new, nan=0.0), 0.0, None)
    got = float(np.sum(new_grid.widths * rho_new))
    if got <= 0:
        raise RuntimeError("resampled density lost all mass")
    rho_new *= mass / got
    return State(rho_new, np.zeros_like(rho_new))


def continuation_study(cfg: ScenarioConfig, sigmas: Sequence[float],
                       outdir: Optional[str] = None,
                       t_max: float = 400.0) -> RunReport:
    """Trace the steady center of mass over decreasing noise strength,
    restarting each run from the previous steady state (re-interpolated onto a
    narrower mesh once the profile contracts)."""
    sigmas = list(sigmas)
    if any(s <= 0 for s in sigmas):
        raise ValueError("noise strengths must be positive")
    if any(b >= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValueError("noise strengths must decrease")
    if cfg.pressure != "scaled_ideal":
        raise ValueError("continuation needs pressure = scaled_ideal")

    outdir = output_dir(outdir)
    report = RunReport(name=cfg.name + "_branch")
    grid = build_grid(cfg)
    model = cfg.build_model()
    state = initial_state(cfg, grid, model)
    for sigma in sigmas:
        model = replace(model, pressure=ScaledIdeal(sigma))
        scheme = cfg.build_scheme(t_end=t_max, stop_when_steady=True,
                                  output_interval=None, diagnostics_every=0)
        traj = run(grid, state, model, scheme)
        if not traj.stopped_steady:
            raise RuntimeError(
                f"no steady state within t = {t_max} at sigma = {sigma}")
        final = traj.final
        xhat = diag.center_of_mass(grid, final)
        report.branch_rows.append(
            (sigma, xhat, (grid.faces[0], grid.faces[-1], grid.n)))
        new_grid = _narrowed_grid(grid, final.rho, cfg.n)
        state = _pchip_resample(grid, final.rho, new_grid, cfg.mass)
        grid = new_grid
    fake = replace(cfg, name=report.name)
    report.report_path = _write_report(outdir, report, fake)
    return report
