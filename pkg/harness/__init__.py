"""
Monte-Carlo harness: scenario definitions, replication runner and result files.
"""

from .report import emit_results
from .runner import ReplicationAggregate, ScenarioOutcome, aggregate, run_scenario
from .scenarios import ScenarioSpec, build_spec, load_config_file

__all__ = [
    'ScenarioSpec',
    'ScenarioOutcome',
    'ReplicationAggregate',
    'aggregate',
    'build_spec',
    'emit_results',
    'load_config_file',
    'run_scenario',
]
