"""Scheduling abstraction of the verification problem.

Every controlled vehicle that has not yet reached the intersection is
turned into a job with a release time (earliest achievable entry of its
upper position bound, full throttle), a deadline (latest, full brake) and
an entry-time-dependent process time.  Uncontrolled vehicles contribute
idle times: guaranteed envelopes of their intersection occupancy over all
driver inputs and disturbances.

Process times are realised with a two-piece bang-bang signal (brake until
a switch time, then full throttle).  Order preservation makes the entry
time of the upper bound continuous and monotone in the switch time, so a
single scalar sweeps every entry in [release, deadline]; the switch for a
given entry is found by bisection.  To keep repeated evaluations cheap,
the brake-phase trajectories of both interval corners are integrated once
and stored, and each candidate switch only integrates the full-throttle
tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .dynamics import (
    InputSignal,
    StateInterval,
    VehicleParams,
    VehicleState,
    _const_prefix,
    _switch_tail_crossing,
    _worst_crossing_gap,
    NO_CROSSING,
    crossing_cap,
    crossing_time,
)
from .errors import CrossguardError

ENTRY_TOL = 1e-6       # bisection tolerance on the achieved entry time (s)
ENTRY_MAX_ITER = 80
EDGE_SLACK = 1e-9      # slack when comparing entry times against [R, D]
THETA_SAFETY = 1.0 + 1e-6
THETA_SAMPLES = 64


def bad_set_overlap(
    position_intervals: Sequence[tuple[float, float]],
    alphas: Sequence[float],
    betas: Sequence[float],
    controlled: Sequence[bool],
) -> bool:
    """True iff two vehicles, at least one controlled, may simultaneously be
    strictly inside their open intersection intervals."""
    inside = [
        hi > a and lo < b
        for (lo, hi), a, b in zip(position_intervals, alphas, betas)
    ]
    n = len(inside)
    for i in range(n):
        if not inside[i]:
            continue
        for j in range(i + 1, n):
            if inside[j] and (controlled[i] or controlled[j]):
                return True
    return False


@dataclass
class ControlledJob:
    """Scheduling view of one controlled vehicle for a fixed estimate."""

    vid: int
    params: VehicleParams
    est: StateInterval
    step: float
    release: float = 0.0
    deadline: float = 0.0
    entered: bool = False    # upper position bound at or past alpha
    exited: bool = False     # lower position bound at or past beta
    min_exit: float = 0.0    # unconstrained earliest beta-crossing of the lower bound
    # brake-phase (u_min) trajectories of both corners on the step grid
    _hi_y: Optional[np.ndarray] = field(default=None, repr=False)
    _hi_v: Optional[np.ndarray] = field(default=None, repr=False)
    _lo_y: Optional[np.ndarray] = field(default=None, repr=False)
    _lo_v: Optional[np.ndarray] = field(default=None, repr=False)
    _n_hi: int = 0
    _n_lo: int = 0
    _p_cache: dict = field(default_factory=dict, repr=False)

    @staticmethod
    def build(vid: int, params: VehicleParams, est: StateInterval, step: float) -> "ControlledJob":
        job = ControlledJob(vid=vid, params=params, est=est, step=step)
        a, b = params.alpha, params.beta
        job.exited = est.lo.y >= b
        job.entered = est.hi.y >= a
        if job.exited:
            return job
        if job.entered:
            job.min_exit = _must_cross(
                params, est.lo, InputSignal.constant(params.u_max), "min", b, step
            )
            return job
        # release: hi corner, full throttle, max disturbance
        job.release = _must_cross(
            params, est.hi, InputSignal.constant(params.u_max), "max", a, step
        )
        # deadline comes out of the brake-phase prefix of the hi corner
        d_y, d_v = params.disturbance("max")
        cap = crossing_cap(params, est.hi.y, a)
        n_max = int(cap / step) + 3
        job._hi_y = np.empty(n_max)
        job._hi_v = np.empty(n_max)
        job._n_hi, deadline = _const_prefix(
            est.hi.y, est.hi.v, params.u_min, d_y, d_v,
            params.v_min, params.v_max, params.drag_b, a, step, cap,
            job._hi_y, job._hi_v,
        )
        if deadline == NO_CROSSING:
            raise CrossguardError(
                f"vehicle {vid}: entry unreachable under full brake "
                "(v_min + d_y_min must be positive)"
            )
        job.deadline = deadline
        # lo corner never reaches beta during the brake phase (it trails the
        # hi corner, which only reaches alpha at the deadline), so the same
        # grid length suffices
        d_y, d_v = params.disturbance("min")
        job._lo_y = np.empty(n_max)
        job._lo_v = np.empty(n_max)
        job._n_lo, _ = _const_prefix(
            est.lo.y, est.lo.v, params.u_min, d_y, d_v,
            params.v_min, params.v_max, params.drag_b, b, step,
            deadline + 2.0 * step, job._lo_y, job._lo_v,
        )
        return job

    # -- switch-parameterised entry and exit ------------------------------

    def entry_for_switch(self, s: float) -> float:
        """Entry time of the upper bound under (brake until s, then throttle)."""
        p = self.params
        d_y, d_v = p.disturbance("max")
        t = _switch_tail_crossing(
            self._hi_y, self._hi_v, self._n_hi, s, p.u_min, p.u_max,
            d_y, d_v, p.v_min, p.v_max, p.drag_b, self.step, p.alpha,
            crossing_cap(p, self.est.hi.y, p.alpha),
        )
        if t == NO_CROSSING:
            raise CrossguardError(f"vehicle {self.vid}: entry crossing lost (switch {s})")
        return t

    def exit_for_switch(self, s: float) -> float:
        """Exit time of the lower bound under the same signal."""
        p = self.params
        d_y, d_v = p.disturbance("min")
        t = _switch_tail_crossing(
            self._lo_y, self._lo_v, self._n_lo, s, p.u_min, p.u_max,
            d_y, d_v, p.v_min, p.v_max, p.drag_b, self.step, p.beta,
            crossing_cap(p, self.est.lo.y, p.beta),
        )
        if t == NO_CROSSING:
            raise CrossguardError(f"vehicle {self.vid}: exit crossing lost (switch {s})")
        return t

    def switch_for_entry(self, entry: float) -> tuple[float, float]:
        """Bisect the switch time so the upper bound enters at ``entry``.

        Returns (switch, achieved entry).  Requires entry in [R, D].
        """
        if entry <= self.release + ENTRY_TOL:
            return 0.0, self.release
        if entry >= self.deadline - ENTRY_TOL:
            return self.deadline, self.deadline
        lo_s, hi_s = 0.0, self.deadline
        mid, f_mid = 0.0, self.release
        for _ in range(ENTRY_MAX_ITER):
            mid = 0.5 * (lo_s + hi_s)
            f_mid = self.entry_for_switch(mid)
            if abs(f_mid - entry) <= ENTRY_TOL:
                return mid, f_mid
            if f_mid < entry:
                lo_s = mid
            else:
                hi_s = mid
        return mid, f_mid

    def process_time(self, entry: float) -> float:
        """Minimal crossing duration with the upper bound entering exactly at
        ``entry``; infinity when that entry time is not attainable."""
        if self.exited:
            return 0.0
        if self.entered:
            return self.min_exit
        if entry < self.release - EDGE_SLACK or entry > self.deadline + EDGE_SLACK:
            return math.inf
        key = round(entry, 9)
        hit = self._p_cache.get(key)
        if hit is None:
            s, _ = self.switch_for_entry(entry)
            hit = self.exit_for_switch(s) - entry
            self._p_cache[key] = hit
        return hit

    def theta_candidates(self, samples: int) -> list[float]:
        """Process times along a switch grid whose induced entry times span
        [release, deadline] including both endpoints."""
        if self.exited:
            return [0.0]
        if self.entered:
            return [self.min_exit]
        samples = max(samples, 2)
        out = []
        for i in range(samples):
            s = self.deadline * i / (samples - 1)
            out.append(self.exit_for_switch(s) - self.entry_for_switch(s))
        return out

    def worst_process_time(self, samples: int) -> float:
        """max of :meth:`theta_candidates`, evaluated in one kernel pass."""
        if self.exited:
            return 0.0
        if self.entered:
            return self.min_exit
        p = self.params
        worst = _worst_crossing_gap(
            self._hi_y, self._hi_v, self._n_hi, self._lo_y, self._lo_v, self._n_lo,
            self.deadline, max(samples, 2), p.u_min, p.u_max,
            p.d_y_max, p.d_v_max, p.d_y_min, p.d_v_min,
            p.v_min, p.v_max, p.drag_b, self.step, p.alpha, p.beta,
            crossing_cap(p, self.est.hi.y, p.alpha),
            crossing_cap(p, self.est.lo.y, p.beta),
        )
        if worst == NO_CROSSING:
            raise CrossguardError(f"vehicle {self.vid}: crossing lost in process-time scan")
        return worst


def _must_cross(params, state, sig, dist, target, step):
    t = crossing_time(params, state, sig, dist, target, step)
    if t is None:
        raise CrossguardError(
            f"crossing of {target} unreachable from {state} (check v_min + d_y_min > 0)"
        )
    return t


@dataclass
class IdleTime:
    """Occupancy envelope of one uncontrolled vehicle."""

    vid: int
    start: float   # earliest entry of the upper bound (max driver input)
    end: float     # latest exit of the lower bound (min driver input)


def idle_time(params: VehicleParams, est: StateInterval, step: float) -> tuple[float, float]:
    """Envelope (earliest entry, latest exit) for an uncontrolled vehicle."""
    if params.controlled:
        raise ValueError("idle times are defined for uncontrolled vehicles")
    if est.lo.y >= params.beta:
        return 0.0, 0.0
    end = _must_cross(
        params, est.lo, InputSignal.constant(params.w_min), "min", params.beta, step
    )
    if est.hi.y >= params.alpha:
        return 0.0, end
    start = _must_cross(
        params, est.hi, InputSignal.constant(params.w_max), "max", params.alpha, step
    )
    return start, end


@dataclass
class SchedulingInstance:
    """All scheduling parameters derived from one per-vehicle estimate."""

    vids: tuple[int, ...]
    params: dict  # vid -> VehicleParams
    estimates: dict  # vid -> StateInterval
    step: float
    jobs: dict  # vid -> ControlledJob, for controlled vehicles
    idles: tuple  # IdleTime per uncontrolled vehicle, sorted by start then vid
    pending: tuple[int, ...]  # controlled vids not yet entered, ascending
    entered: tuple[int, ...]  # controlled vids with an entered upper bound
    p_max: float  # latest exit among entered vehicles; 0 if none
    _theta_cache: dict = field(default_factory=dict, repr=False)

    @staticmethod
    def build(
        params_by_id: Mapping[int, VehicleParams],
        estimates: Mapping[int, StateInterval],
        step: float,
    ) -> "SchedulingInstance":
        vids = tuple(params_by_id)
        jobs = {}
        idles = []
        pending = []
        entered = []
        p_max = 0.0
        for vid in vids:
            p = params_by_id[vid]
            est = estimates[vid]
            if p.controlled:
                job = ControlledJob.build(vid, p, est, step)
                jobs[vid] = job
                if job.entered or job.exited:
                    entered.append(vid)
                    p_max = max(p_max, job.min_exit)
                else:
                    pending.append(vid)
            else:
                start, end = idle_time(p, est, step)
                idles.append(IdleTime(vid, start, end))
        idles.sort(key=lambda it: (it.start, it.vid))
        return SchedulingInstance(
            vids=vids,
            params=dict(params_by_id),
            estimates=dict(estimates),
            step=step,
            jobs=jobs,
            idles=tuple(idles),
            pending=tuple(sorted(pending)),
            entered=tuple(sorted(entered)),
            p_max=p_max,
        )

    def release_time(self, vid: int) -> float:
        return self.jobs[vid].release

    def deadline(self, vid: int) -> float:
        return self.jobs[vid].deadline

    def process_time(self, vid: int, entry: float) -> float:
        return self.jobs[vid].process_time(entry)

    def bad_overlap(self) -> bool:
        ivals = [(self.estimates[v].lo.y, self.estimates[v].hi.y) for v in self.vids]
        alphas = [self.params[v].alpha for v in self.vids]
        betas = [self.params[v].beta for v in self.vids]
        ctrl = [self.params[v].controlled for v in self.vids]
        return bad_set_overlap(ivals, alphas, betas, ctrl)

    def theta_max(self, samples: int = THETA_SAMPLES) -> float:
        """Uniform process-time upper bound over every controlled vehicle and
        every attainable entry time, grid-sampled with a safety factor."""
        hit = self._theta_cache.get(samples)
        if hit is None:
            worst = 0.0
            for job in self.jobs.values():
                worst = max(worst, job.worst_process_time(samples))
            hit = worst * THETA_SAFETY
            self._theta_cache[samples] = hit
        return hit


def release_time(params: VehicleParams, est: StateInterval, step: float) -> float:
    """Earliest entry of the upper position bound (full throttle);
    0 once the bound is at or past the entry position."""
    if est.hi.y >= params.alpha:
        return 0.0
    return _must_cross(
        params, est.hi, InputSignal.constant(params.u_max), "max", params.alpha, step
    )


def deadline(params: VehicleParams, est: StateInterval, step: float) -> float:
    """Latest entry of the upper position bound (full brake); finite because
    the speed never drops below v_min > 0."""
    if est.hi.y >= params.alpha:
        return 0.0
    return _must_cross(
        params, est.hi, InputSignal.constant(params.u_min), "max", params.alpha, step
    )


def process_time(
    params: VehicleParams, est: StateInterval, entry: float, step: float
) -> float:
    """Standalone process-time evaluation (builds the job tables once)."""
    return ControlledJob.build(0, params, est, step).process_time(entry)


def theta_max(instance: SchedulingInstance, sample_count: int = THETA_SAMPLES) -> float:
    return instance.theta_max(sample_count)
