"""Scenario-driven experiment harness."""

from .config import ScenarioConfig, load_config, load_config_file
from .scenarios import ChainScenario, GapReport, RunReport, continuity_gap, run

__all__ = ["ChainScenario", "GapReport", "RunReport", "ScenarioConfig", "continuity_gap",
           "load_config", "load_config_file", "run"]
