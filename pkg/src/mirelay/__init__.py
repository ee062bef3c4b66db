"""Magneto-inductive channels through clouds of resonant passive relays.

The package models a Tx/Rx coil pair surrounded by randomly placed resonant
relay coils, reduces the coupled circuit to an effective two-port, evaluates
the power gain under simultaneous conjugate matching, and optimizes it by
switching relays between resonant and open terminations or by retuning the
operating frequency.  Monte Carlo experiments over random relay clouds are
driven either from Python or through the ``mirelay`` command-line tool.
"""
from .circuit import (LoadState, Network, TwoPortZ, direct_two_port,
                      effective_two_port, relay_system_matrices,
                      transimpedance_phasors)
from .errors import (ConfigError, GeometryError, MirelayError, NumericalError,
                     PassivityError, QuadratureError)
from .experiments import (ExperimentConfig, ExperimentResult, RateParams,
                          TrialRecord, achievable_rate, frequency_response,
                          rate_vs_density, run_cdf_experiment, summarize)
from .geometry import (Coil, SamplingConfig, canonical_pair, coupling_coefficient,
                       mutual_inductance, mutual_inductance_table, reference_coil,
                       sample_network, spheroid_volume)
from .matching import (GainReport, channel_coefficient, gain_report,
                       matched_terminations, power_gain, power_gain_direct,
                       rho_chi, scattering_s21)
from .netfile import (load_experiment, load_network, save_experiment,
                      save_network)
from .optimize import (GaParams, ReducedSwitchSystem, exhaustive_search,
                       optimize_frequency, optimize_genetic,
                       optimize_n_minus_one, optimize_one_relay)

__version__ = "0.1.0"

__all__ = [
    "Coil", "ConfigError", "ExperimentConfig", "ExperimentResult", "GaParams",
    "GainReport", "GeometryError", "LoadState", "MirelayError", "Network",
    "NumericalError", "PassivityError", "QuadratureError", "RateParams",
    "ReducedSwitchSystem", "SamplingConfig", "TrialRecord", "TwoPortZ",
    "achievable_rate", "canonical_pair", "channel_coefficient",
    "coupling_coefficient", "direct_two_port", "effective_two_port",
    "exhaustive_search", "frequency_response", "gain_report", "load_experiment",
    "load_network", "matched_terminations", "mutual_inductance",
    "mutual_inductance_table", "optimize_frequency", "optimize_genetic",
    "optimize_n_minus_one", "optimize_one_relay", "power_gain",
    "power_gain_direct", "rate_vs_density", "reference_coil",
    "relay_system_matrices", "rho_chi", "run_cdf_experiment", "sample_network",
    "save_experiment", "save_network", "scattering_s21", "spheroid_volume",
    "summarize", "transimpedance_phasors", "__version__",
]
