"""Exact simulation of a small quantum system coupled to an engineered finite bath.

Units convention used throughout: the energy scale mu and the action scale
hbar are both 1, so energies are dimensionless multiples of hbar*mu, times
are multiples of 1/mu and temperature enters only through beta = 1/(k_B T)
in units of 1/(hbar*mu).
"""

__version__ = "0.1.0"

from .model import (
    BathSpec,
    ConfigError,
    CouplingSpec,
    InitialCondition,
    RunConfig,
    SystemSpec,
    config_hash,
    default_paper_config,
    load_config,
    save_config,
    validate,
    validation_errors,
)
from .bath import BathRealization, build_coupling, gaps, place_levels, realize, resolve_window
from .universe import UniverseHamiltonian, assemble, joint_index, memory_estimate_bytes, split_index
from .spectral import (
    SpectralDecomposition,
    UniverseState,
    diagonalize,
    overlap_distribution,
    prepare_initial,
    propagate,
    reference_propagate,
    to_eigenbasis,
)
from .observables import (
    PopulationSeries,
    ThermalReference,
    boltzmann,
    diagonal_ensemble,
    population_series,
    populations,
    reduced_density_matrix,
    steady_statistics,
)
from .eth import (
    EthProfile,
    build_profile,
    central_range,
    eigenstate_values,
    eth_deviation,
    fluctuation_rms,
    g0_counting_check,
    moving_average,
)
