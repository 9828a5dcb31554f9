"""Link-level Monte-Carlo simulator for RIS identification techniques."""

from .geometry import (Position, RisDescriptor, Scenario, ScenarioError,
                       distance, dump_scenario, load_scenario,
                       load_scenario_file, path_loss_amplitude)
from .results import AMBIGUOUS, NONE, IdentificationResult, MisidEstimate, wilson_interval
from .sequences import GoldFamily, correlate, gold_family, lfsr_msequence

__version__ = "0.1.0"

__all__ = [
    "AMBIGUOUS", "NONE", "GoldFamily", "IdentificationResult", "MisidEstimate",
    "Position", "RisDescriptor", "Scenario", "ScenarioError", "correlate",
    "distance", "dump_scenario", "gold_family", "lfsr_msequence",
    "load_scenario", "load_scenario_file", "path_loss_amplitude",
    "wilson_interval",
]
