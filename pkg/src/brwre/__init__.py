"""Branching random walks on the nonnegative integers in a site-indexed random environment."""

__version__ = "0.1.0"

from brwre.environment import (
    EnvironmentLaw,
    EnvironmentRealization,
    Regime,
    RegimeKind,
    classify,
    sample_environment,
)
from brwre.offspring import OffspringLaw, SiteGWLaw, extinction_cdf, sample_extinction_time
from brwre.simulate import minimal_position, simulate_counts, simulate_tree
from brwre.velocity import RateContext, VelocityReport, biggins_gamma, velocity

__all__ = [
    "EnvironmentLaw",
    "EnvironmentRealization",
    "OffspringLaw",
    "RateContext",
    "Regime",
    "RegimeKind",
    "SiteGWLaw",
    "VelocityReport",
    "biggins_gamma",
    "classify",
    "extinction_cdf",
    "minimal_position",
    "sample_environment",
    "sample_extinction_time",
    "simulate_counts",
    "simulate_tree",
    "velocity",
]
