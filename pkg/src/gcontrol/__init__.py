"""Self-evolving neuro-fuzzy controller with sliding-mode consequent adaptation."""

from .controller import ControlStep, GController, GControllerConfig
from .evolution import EvolutionConfig, GrowthState
from .exceptions import ContractViolation, DivergenceError, NoRulesError, NumericalError
from .fuzzy import FiringVector, FuzzyRule, RuleBase, firing_strength, infer, rule_volume
from .harness import (PidGains, ScenarioConfig, ScenarioResult, Trajectory, emit, load_config,
                      metrics, reference, run_pid, run_scenario)
from .smc import LyapunovTrace, SmcState

__version__ = "0.1.0"
