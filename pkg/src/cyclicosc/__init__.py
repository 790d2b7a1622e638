"""Oscillation profiles of negative cyclic gene networks by harmonic balance."""

from .balance import (
    analyze,
    approx_period,
    frequency_bounds,
    self_repression_period,
    solve_bias_amplitude,
    solve_frequency,
    solve_frequency_heterogeneous,
    solve_frequency_no_delay,
    solve_phases,
)
from .dde_sim import SimConfig, TimeSeries, extract_profile, simulate, simulate_profile
from .describing import DescribingPair, describe
from .model import DimensionlessParams, GeneStage, Network, Regulation, classify, dimensionless, hill
from .netfile import load_network, parse_network
from .profile import OscillationProfile

__version__ = "0.1.0"

__all__ = [
    "GeneStage", "Network", "Regulation", "DimensionlessParams", "OscillationProfile",
    "DescribingPair", "SimConfig", "TimeSeries",
    "classify", "hill", "dimensionless", "describe",
    "solve_frequency", "solve_frequency_no_delay", "solve_frequency_heterogeneous",
    "frequency_bounds", "solve_phases", "solve_bias_amplitude", "self_repression_period",
    "approx_period", "analyze", "simulate", "extract_profile", "simulate_profile",
    "load_network", "parse_network",
]
