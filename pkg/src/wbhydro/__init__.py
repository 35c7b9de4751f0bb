"""Well-balanced, positivity-preserving, energy-dissipating finite volume
schemes for 1D hydrodynamic systems with general free energy."""

from .grid import Grid, State, make_uniform_grid, total_mass, velocity
from .free_energy import (FreeEnergyModel, IdealGas, PowerLaw, ScaledIdeal,
                          NoPotential, QuadraticWell, DoubleWell, QuarticWell,
                          QuadraticKernel, HomogeneousKernel, GaussianKernel,
                          HardRodKernel, LogComplement, hard_rod_model,
                          kernel_matrix, potential_field, packing_fraction,
                          solve_discrete_steady_state, OverpackedError,
                          SteadyStateError)
from .reconstruction import (InterfaceStates, SourceTerms, BoundaryValues,
                             interface_H, reconstruct_first_order,
                             first_order_sources, muscl_boundary_values,
                             reconstruct_second_order, second_order_sources,
                             psi_matrix, cucker_smale_psi, minmod)
from .flux import llf_flux, kinetic_flux, max_wave_speed, FluxVacuumError
from .integrator import (SchemeConfig, SchemeWorkspace, semidiscrete_rhs,
                         cfl_dt, ssp_rk3_step, run, PositivityError, Trajectory)
from .diagnostics import (DiagnosticsRecord, discrete_free_energy, total_energy,
                          free_energy_variation, entropy_field, center_of_mass,
                          l1_error, convergence_order)
from .config import ScenarioConfig, parse_config, serialize_config, ConfigError
from .scenarios import SHIPPED_SCENARIOS, load_scenario
from .protocols import (RunReport, run_scenario, preservation_test,
                        convergence_study, continuation_study)

__version__ = "0.1.0"
