"""Entropic uncertainty relations for successive finite-resolution measurements."""
from .entropy import BinSpec, EntropyOrderPair
from .detector import AcceptanceProfile, gaussian_profile, sampled_profile, tophat_profile
from .lattice import DensityMatrix, Lattice, WaveFunction, make_gaussian, make_mixture, make_superposition
from .scenarios import ScenarioConfig, UncertaintyReport, kappa, preparation_check, scenario_one, scenario_two

__version__ = "0.1.0"

__all__ = [
    "AcceptanceProfile",
    "BinSpec",
    "DensityMatrix",
    "EntropyOrderPair",
    "Lattice",
    "ScenarioConfig",
    "UncertaintyReport",
    "WaveFunction",
    "gaussian_profile",
    "kappa",
    "make_gaussian",
    "make_mixture",
    "make_superposition",
    "preparation_check",
    "sampled_profile",
    "scenario_one",
    "scenario_two",
    "tophat_profile",
]
