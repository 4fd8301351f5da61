"""Linear stability toolkit for the ideal-MHD z-pinch."""

from .cli import StudyConfig, emit_plot_data, load_config, run_study
from .dynamics import evolve_mode, fit_growth_rate, integrate_back
from .energy import (
    ModeIndex,
    TrialField,
    assemble_E0k,
    assemble_Emk,
    assemble_energy,
    assemble_J,
    polarization,
    random_field,
)
from .equilibrium import (
    EquilibriumState,
    build_equilibrium,
    check_admissibility,
    interchange_criterion_scan,
    sausage_criterion_scan,
    taylor_axis_coefficients,
)
from .grid import GridSpec
from .profiles import (
    CurrentProfile,
    ExponentialProfile,
    PowerLawProfile,
    TabulatedProfile,
    UniformCurrentProfile,
    profile_from_config,
)
from .scaling import BumpFunction, build_test_family, fit_scaling_exponent
from .spectrum import assemble_operators, solve_mode, sweep_modes, vacuum_response

__all__ = [
    "BumpFunction",
    "CurrentProfile",
    "EquilibriumState",
    "ExponentialProfile",
    "GridSpec",
    "ModeIndex",
    "PowerLawProfile",
    "StudyConfig",
    "TabulatedProfile",
    "TrialField",
    "UniformCurrentProfile",
    "assemble_E0k",
    "assemble_Emk",
    "assemble_J",
    "assemble_energy",
    "assemble_operators",
    "build_equilibrium",
    "build_test_family",
    "check_admissibility",
    "emit_plot_data",
    "evolve_mode",
    "fit_growth_rate",
    "fit_scaling_exponent",
    "integrate_back",
    "interchange_criterion_scan",
    "load_config",
    "polarization",
    "profile_from_config",
    "random_field",
    "run_study",
    "sausage_criterion_scan",
    "solve_mode",
    "sweep_modes",
    "taylor_axis_coefficients",
    "vacuum_response",
]
