"""Polynomial-time verification pipeline.

The exact problem is relaxed by giving every pending vehicle the same
process time: the largest process time any controlled vehicle can need
over its attainable entry window.  After normalising by that bound the
relaxation is a unit-process scheduling problem with release times,
start-time deadlines and forbidden regions seeded from the uncontrolled
occupancy envelopes.  That problem is solved in O(n^2) by a backward
forbidden-region declaration sweep followed by earliest-deadline-first
schedule generation.  The crossing order found by the relaxation is then
fed back into the exact earliest-schedule construction, which restores
the true process times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .exact import Schedule, schedule_for_sequence
from .scheduling import SchedulingInstance, THETA_SAMPLES

# Region endpoints are derived by repeated unit subtraction, so a start
# time that equals an endpoint in exact arithmetic can land an ulp inside
# the open interval.  All boundary comparisons therefore carry this slack:
# a point within it counts as sitting on the boundary, not inside.
EPS = 1e-9


@dataclass(frozen=True)
class ForbiddenRegionSet:
    """Ordered disjoint open intervals in which no job may start."""

    regions: tuple[tuple[float, float], ...] = ()

    @staticmethod
    def from_intervals(intervals: Sequence[tuple[float, float]]) -> "ForbiddenRegionSet":
        """Sort, drop empty intervals, and merge strict overlaps.

        Regions that merely touch (within the boundary slack) stay
        separate: they are open, so the shared endpoint remains a legal
        start time.
        """
        live = sorted((a, b) for a, b in intervals if b > a)
        merged: list[tuple[float, float]] = []
        for a, b in live:
            if merged and a < merged[-1][1] - EPS:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return ForbiddenRegionSet(tuple(merged))

    def containing(self, t: float) -> Optional[tuple[float, float]]:
        """The open region containing ``t`` by more than the boundary
        slack, if any."""
        for a, b in self.regions:
            if a + EPS < t < b - EPS:
                return (a, b)
            if a >= t:
                break
        return None

    def adding(self, interval: tuple[float, float]) -> "ForbiddenRegionSet":
        return ForbiddenRegionSet.from_intervals(list(self.regions) + [interval])


@dataclass(frozen=True)
class UnitJobSet:
    """Unit-process jobs: per-job release times and latest start times, plus
    initial forbidden regions derived from occupancy envelopes."""

    job_ids: tuple[int, ...]
    releases: tuple[float, ...]
    deadlines: tuple[float, ...]  # latest allowed START times
    forbidden: ForbiddenRegionSet = ForbiddenRegionSet()

    def __post_init__(self) -> None:
        if not (len(self.job_ids) == len(self.releases) == len(self.deadlines)):
            raise ValueError("job arrays must align")


def declare_forbidden_regions(jobs: UnitJobSet) -> tuple[ForbiddenRegionSet, bool]:
    """Backward sweep in decreasing release order.

    Each job keeps a critical time: the latest start that still lets every
    later-released job with an equal-or-later deadline finish by its own
    deadline.  Critical times begin at the deadlines, lose one unit
    whenever a job with an earlier-or-equal deadline joins the considered
    set, and snap to the lower edge of any forbidden region they land in.
    Jobs sharing a release time are treated as one boundary: all their
    decrements apply before the infeasibility check and the region
    declaration for that release value.
    """
    n = len(jobs.job_ids)
    F = jobs.forbidden
    if n == 0:
        return F, True
    order = sorted(range(n), key=lambda j: (jobs.releases[j], jobs.job_ids[j]))
    crit = [math.nan] * n  # nan = undefined
    feasible = True
    pos = n - 1
    while pos >= 0:
        release = jobs.releases[order[pos]]
        group_lo = pos
        while group_lo > 0 and jobs.releases[order[group_lo - 1]] == release:
            group_lo -= 1
        for g in range(pos, group_lo - 1, -1):
            d_new = jobs.deadlines[order[g]]
            for j in range(n):
                if jobs.deadlines[j] >= d_new:
                    if math.isnan(crit[j]):
                        crit[j] = jobs.deadlines[j]
                    else:
                        crit[j] -= 1.0
                    region = F.containing(crit[j])
                    if region is not None:
                        crit[j] = region[0]
        c = min(v for v in crit if not math.isnan(v))
        if c < release - EPS:
            feasible = False
        if release - EPS <= c < release + 1.0 - EPS:
            F = F.adding((c - 1.0, release))
        pos = group_lo - 1
    return F, feasible


def edd_generate(jobs: UnitJobSet, forbidden: ForbiddenRegionSet) -> list[float]:
    """Forward earliest-deadline-first sweep.

    The clock skips over forbidden regions; when no released job is
    waiting it jumps to the next release.  Among ready jobs the earliest
    deadline wins (ties to the lowest job id).  Start times end up
    pairwise at least one unit apart and outside every forbidden region.
    """
    n = len(jobs.job_ids)
    t = [0.0] * n
    unscheduled = set(range(n))
    s = 0.0
    while unscheduled:
        region = forbidden.containing(s)
        while region is not None:
            s = region[1]
            region = forbidden.containing(s)
        ready = [j for j in unscheduled if jobs.releases[j] <= s]
        if not ready:
            s = min(jobs.releases[j] for j in unscheduled)
            continue
        j = min(ready, key=lambda k: (jobs.deadlines[k], jobs.job_ids[k]))
        t[j] = s
        s += 1.0
        unscheduled.remove(j)
    return t


def polynomial(jobs: UnitJobSet) -> tuple[Optional[list[float]], tuple[int, ...], bool]:
    """Compose declaration and generation.

    The generated order is returned even when the instance is infeasible:
    the exact construction downstream can still try it with the true
    process times.
    """
    F, feasible = declare_forbidden_regions(jobs)
    starts = edd_generate(jobs, F)
    order = sorted(range(len(starts)), key=lambda j: (starts[j], jobs.job_ids[j]))
    pi_star = tuple(jobs.job_ids[j] for j in order)
    if not feasible:
        return None, pi_star, False
    return starts, pi_star, True


def unit_jobs_from_instance(
    instance: SchedulingInstance, theta_samples: int = THETA_SAMPLES
) -> tuple[UnitJobSet, float]:
    """Normalise the pending jobs by the uniform process-time bound and
    turn occupancy envelopes into initial forbidden regions."""
    theta = instance.theta_max(theta_samples)
    releases = []
    deadlines = []
    for vid in instance.pending:
        job = instance.jobs[vid]
        releases.append(max(job.release, instance.p_max) / theta)
        deadlines.append(job.deadline / theta)
    regions = []
    for idle in instance.idles:
        if idle.end <= 0.0:
            continue
        regions.append((max(idle.start / theta - 1.0, 0.0), idle.end / theta))
    return (
        UnitJobSet(
            job_ids=instance.pending,
            releases=tuple(releases),
            deadlines=tuple(deadlines),
            forbidden=ForbiddenRegionSet.from_intervals(regions),
        ),
        theta,
    )


def relaxed_exact(
    instance: SchedulingInstance, theta_samples: int = THETA_SAMPLES
) -> tuple[Optional[dict], Optional[tuple[int, ...]], bool]:
    """Solve the uniform-process relaxation exactly.

    Returns (entry times, crossing order, answer); entry times are None
    when the answer is no, and the order is still returned so the caller
    can reuse it.
    """
    if instance.bad_overlap():
        return None, None, False
    if not instance.pending:
        return None, (), True
    jobs, theta = unit_jobs_from_instance(instance, theta_samples)
    starts, pi_star, ok = polynomial(jobs)
    if not ok:
        return None, pi_star, False
    entries = {vid: 0.0 for vid in instance.entered}
    for vid, s in zip(jobs.job_ids, starts):
        entries[vid] = s * theta
    return entries, pi_star, True


def approx_verify(
    instance: SchedulingInstance, theta_samples: int = THETA_SAMPLES
) -> tuple[Optional[Schedule], bool]:
    """Polynomial-time verification: take the crossing order suggested by
    the relaxation and build the exact earliest schedule for it."""
    if instance.bad_overlap():
        return None, False
    if not instance.pending:
        return None, True
    _, pi_star, _ = relaxed_exact(instance, theta_samples)
    return schedule_for_sequence(pi_star, instance)
