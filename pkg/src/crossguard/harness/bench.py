"""Timing benchmarks: per-iteration supervisor cost as the number of
controlled vehicles grows."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from ..errors import PermutationCapExceeded
from ..supervisor import SupervisorConfig
from .scenario import ScenarioConfig
from .simulate import run_simulation

EXACT_CAP_N = 8           # exact mode is skipped above this vehicle count
DEFAULT_PERMUTATION_CAP = 10_000


@dataclass(frozen=True)
class BenchRow:
    n_controlled: int
    mode: str
    median_iter_s: float
    max_iter_s: float
    iterations: int
    capped: bool = False  # exact search hit the permutation cap


def synthetic_scenario(
    template: ScenarioConfig,
    n_controlled: int,
    spacing: float = 5.0,
    keep_uncontrolled: bool = True,
) -> ScenarioConfig:
    """Template with its controlled fleet replaced by ``n_controlled``
    copies of the first controlled vehicle, queued ``spacing`` metres
    apart behind it."""
    lead = next(v for v in template.vehicles if v.params.controlled)
    vehicles = []
    for i in range(n_controlled):
        vehicles.append(
            replace(
                lead,
                vid=i + 1,
                initial=type(lead.initial)(lead.initial.y - spacing * i, lead.initial.v),
            )
        )
    if keep_uncontrolled:
        next_vid = n_controlled + 1
        for v in template.vehicles:
            if not v.params.controlled:
                vehicles.append(replace(v, vid=next_vid))
                next_vid += 1
    return replace(template, vehicles=tuple(vehicles))


def bench_scaling(
    template: ScenarioConfig,
    n_list: Sequence[int],
    reps: int,
    exact_cap_n: int = EXACT_CAP_N,
    permutation_cap: Optional[int] = DEFAULT_PERMUTATION_CAP,
) -> list[BenchRow]:
    """Median and max per-iteration wall time per mode and fleet size.

    Each row times ``reps`` closed-loop supervisor iterations.  Exact mode
    runs only up to ``exact_cap_n`` controlled vehicles, and its
    exhaustive search is bounded by ``permutation_cap`` so a worst-case
    sweep surfaces as a capped row instead of a hang.
    """
    rows = []
    for n in n_list:
        scenario = synthetic_scenario(template, n)
        modes = ["efficient"] if n > exact_cap_n else ["exact", "efficient"]
        for mode in modes:
            sup = SupervisorConfig(
                tau=scenario.tau,
                permutation_cap=permutation_cap if mode == "exact" else None,
            )
            capped = False
            try:
                trace, _ = run_simulation(
                    scenario, mode, steps=reps, sup_config=sup, record_timing=True
                )
                walls = sorted({r.step: r.wall_s for r in trace}.values())
            except PermutationCapExceeded:
                capped = True
                walls = []
            rows.append(
                BenchRow(
                    n_controlled=n,
                    mode=mode,
                    median_iter_s=walls[len(walls) // 2] if walls else 0.0,
                    max_iter_s=walls[-1] if walls else 0.0,
                    iterations=len(walls),
                    capped=capped,
                )
            )
    return rows


def format_bench(rows: Sequence[BenchRow]) -> str:
    lines = ["n,mode,median_iter_s,max_iter_s,iterations,capped"]
    for r in rows:
        lines.append(
            f"{r.n_controlled},{r.mode},{r.median_iter_s:.6f},{r.max_iter_s:.6f},"
            f"{r.iterations},{int(r.capped)}"
        )
    return "\n".join(lines) + "\n"
