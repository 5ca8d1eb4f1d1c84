"""Exact verification: earliest-schedule construction for a fixed crossing
sequence, and exhaustive search over all sequences.

For a given sequence the earliest schedule is built by a forward
recurrence (each entry time is the latest of the vehicle's release and
the predecessor's exit) with every entry pushed past uncontrolled
occupancy envelopes in order of their start times.  A sequence is
feasible iff every constructed entry time meets its deadline; because the
construction is the earliest possible, failure of one sequence is
conclusive for that sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Sequence

from .errors import PermutationCapExceeded
from .scheduling import SchedulingInstance

# Touching interval endpoints are allowed: occupancy intervals are open.
DISJOINT_SLACK = 1e-9


@dataclass(frozen=True)
class Schedule:
    """Entry times per controlled vehicle plus the implied crossing order."""

    entry_times: dict
    sequence: tuple[int, ...]  # vids with positive entry time, in entry order
    feasible: bool = True

    @staticmethod
    def from_entries(entry_times: dict) -> "Schedule":
        seq = tuple(
            vid for vid, t in sorted(entry_times.items(), key=lambda kv: (kv[1], kv[0]))
            if t > 0.0
        )
        return Schedule(entry_times=dict(entry_times), sequence=seq)


def schedule_for_sequence(
    pi0: Sequence[int],
    instance: SchedulingInstance,
) -> tuple[Optional[Schedule], bool]:
    """Earliest schedule respecting ``pi0``; (None, False) when infeasible.

    ``pi0`` must cover every pending controlled vehicle (a superset is
    fine: the sub-sequence of not-yet-entered vehicles is extracted, so a
    stored sequence from an earlier step remains usable after some of its
    vehicles have entered).
    """
    pending = set(instance.pending)
    pi = [vid for vid in pi0 if vid in pending]
    if len(pi) != len(pending):
        missing = sorted(pending.difference(pi))
        raise ValueError(f"sequence {tuple(pi0)} misses pending vehicles {missing}")

    entry: dict[int, float] = {vid: 0.0 for vid in instance.entered}
    t_prev_exit = instance.p_max
    for vid in pi:
        job = instance.jobs[vid]
        t = max(job.release, t_prev_exit)
        # push past occupancy envelopes, in increasing start order, to a
        # fixed point (a single pass suffices since t only grows; the
        # repeat guards the argument, and tests record it never fires)
        changed = True
        while changed:
            changed = False
            for idle in instance.idles:
                if idle.end <= 0.0:
                    continue  # vehicle already past the intersection
                if t >= idle.start:
                    if idle.end > t:
                        t = idle.end
                        changed = True
                elif t + job.process_time(t) > idle.start + DISJOINT_SLACK:
                    t = idle.end
                    changed = True
        entry[vid] = t
        t_prev_exit = t + job.process_time(t)
    for vid in pi:
        if entry[vid] > instance.jobs[vid].deadline + DISJOINT_SLACK:
            return None, False
    sched = Schedule.from_entries(entry)
    return sched, True


def exact_verify(
    instance: SchedulingInstance,
    permutation_cap: Optional[int] = None,
) -> tuple[Optional[Schedule], bool]:
    """Search sequences in lexicographic vehicle-id order until one admits a
    feasible schedule.

    Returns (None, False) when the position estimate already overlaps the
    Bad set, (None, True) when every controlled vehicle has entered, and
    otherwise the first feasible schedule or (None, False) after all
    permutations fail.
    """
    if instance.bad_overlap():
        return None, False
    if not instance.pending:
        return None, True
    count = 0
    for pi in permutations(instance.pending):
        count += 1
        if permutation_cap is not None and count > permutation_cap:
            raise PermutationCapExceeded(
                f"{len(instance.pending)}! sequences exceed cap {permutation_cap}"
            )
        sched, ok = schedule_for_sequence(pi, instance)
        if ok:
            return sched, True
    return None, False


def schedule_satisfies_conditions(
    instance: SchedulingInstance,
    entry_times: dict,
    slack: float = DISJOINT_SLACK,
) -> bool:
    """Check a schedule against the feasibility conditions verbatim:
    entries within [release, deadline], pairwise-disjoint open occupancy
    intervals, and disjointness from every uncontrolled envelope."""
    windows = []
    for vid in instance.pending:
        job = instance.jobs[vid]
        t = entry_times[vid]
        if t < job.release - slack or t > job.deadline + slack:
            return False
        p = job.process_time(t)
        if math.isinf(p):
            return False
        windows.append((t, t + p))
    for vid in instance.entered:
        job = instance.jobs[vid]
        if not job.exited:
            windows.append((0.0, job.min_exit))
    for i in range(len(windows)):
        for j in range(i + 1, len(windows)):
            if _open_overlap(windows[i], windows[j], slack):
                return False
    for w in windows:
        for idle in instance.idles:
            if idle.end > 0.0 and _open_overlap(w, (idle.start, idle.end), slack):
                return False
    return True


def _open_overlap(a: tuple[float, float], b: tuple[float, float], slack: float) -> bool:
    lo = max(a[0], b[0])
    hi = min(a[1], b[1])
    return hi - lo > slack
