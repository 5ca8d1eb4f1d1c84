"""Scenario loading, closed-loop simulation, brute-force oracles, and
timing benchmarks."""

from .scenario import ScenarioConfig, ScenarioVehicle, load_scenario, parse_scenario, format_scenario
from .simulate import RunMetrics, TraceRecord, run_simulation, emit_outputs
from .oracle import brute_force_safe_input_oracle
from .bench import bench_scaling, synthetic_scenario

__all__ = [
    "ScenarioConfig",
    "ScenarioVehicle",
    "load_scenario",
    "parse_scenario",
    "format_scenario",
    "RunMetrics",
    "TraceRecord",
    "run_simulation",
    "emit_outputs",
    "brute_force_safe_input_oracle",
    "bench_scaling",
    "synthetic_scenario",
]
