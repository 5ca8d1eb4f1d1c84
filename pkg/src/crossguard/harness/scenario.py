"""Line-oriented scenario files.

Header lines set run-level values (``tau=``, ``steps=``, ``seed=``, and
optionally ``drag_b=`` for the quadratic drag coefficient, default
0.001).  Each vehicle line is

    vehicle,<id>,<controlled:0|1>,<y0>,<v0>,<alpha>,<beta>,<v_min>,<v_max>,
    <u_min or w_min>,<u_max or w_max>,<d_y_min>,<d_y_max>,<d_v_min>,<d_v_max>,
    <dy_noise_min>,<dy_noise_max>,<dv_noise_min>,<dv_noise_max>,<u_desire or ->

where the input bounds are the supervisor's for a controlled vehicle and
the driver's for an uncontrolled one.  Lines starting with ``#`` are
comments.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from ..dynamics import NoiseBounds, VehicleParams, VehicleState

DEFAULT_DRAG = 0.001


@dataclass(frozen=True)
class ScenarioVehicle:
    vid: int
    params: VehicleParams
    initial: VehicleState
    noise: NoiseBounds
    u_desire: Optional[float] = None  # controlled vehicles only

    def __post_init__(self) -> None:
        if self.params.controlled and self.u_desire is None:
            raise ValueError(f"vehicle {self.vid}: controlled vehicle needs u_desire")


@dataclass(frozen=True)
class ScenarioConfig:
    tau: float
    steps: int
    seed: int
    vehicles: tuple[ScenarioVehicle, ...]

    def __post_init__(self) -> None:
        if self.tau <= 0.0 or self.steps <= 0:
            raise ValueError("tau and steps must be positive")
        if not any(v.params.controlled for v in self.vehicles):
            raise ValueError("scenario needs at least one controlled vehicle")
        vids = [v.vid for v in self.vehicles]
        if len(set(vids)) != len(vids):
            raise ValueError("duplicate vehicle ids")

    def params_by_id(self) -> dict:
        return {v.vid: v.params for v in self.vehicles}

    def with_overrides(
        self, seed: Optional[int] = None, steps: Optional[int] = None
    ) -> "ScenarioConfig":
        out = self
        if seed is not None:
            out = replace(out, seed=seed)
        if steps is not None:
            out = replace(out, steps=steps)
        return out


def parse_scenario(text: str) -> ScenarioConfig:
    tau = None
    steps = None
    seed = 0
    drag = DEFAULT_DRAG
    vehicles = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("vehicle,"):
            vehicles.append(_parse_vehicle(line, drag, lineno))
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value or vehicle line: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "tau":
            tau = float(value)
        elif key == "steps":
            steps = int(value)
        elif key == "seed":
            seed = int(value)
        elif key == "drag_b":
            drag = float(value)
        else:
            raise ValueError(f"line {lineno}: unknown header key {key!r}")
    if tau is None or steps is None:
        raise ValueError("scenario must set tau= and steps=")
    return ScenarioConfig(tau=tau, steps=steps, seed=seed, vehicles=tuple(vehicles))


def _parse_vehicle(line: str, drag: float, lineno: int) -> ScenarioVehicle:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) != 20:
        raise ValueError(f"line {lineno}: vehicle line needs 20 fields, got {len(fields)}")
    vid = int(fields[1])
    controlled = fields[2] == "1"
    nums = [float(f) for f in fields[3:19]]
    (y0, v0, alpha, beta, v_min, v_max, in_lo, in_hi,
     dy_lo, dy_hi, dv_lo, dv_hi, ny_lo, ny_hi, nv_lo, nv_hi) = nums
    params = VehicleParams(
        v_min=v_min,
        v_max=v_max,
        u_min=in_lo if controlled else 0.0,
        u_max=in_hi if controlled else 0.0,
        w_min=0.0 if controlled else in_lo,
        w_max=0.0 if controlled else in_hi,
        d_y_min=dy_lo,
        d_y_max=dy_hi,
        d_v_min=dv_lo,
        d_v_max=dv_hi,
        drag_b=drag,
        alpha=alpha,
        beta=beta,
        controlled=controlled,
    )
    desired_field = fields[19]
    u_desire = None if desired_field == "-" else float(desired_field)
    if not controlled:
        u_desire = None
    return ScenarioVehicle(
        vid=vid,
        params=params,
        initial=VehicleState(y0, v0),
        noise=NoiseBounds(ny_lo, ny_hi, nv_lo, nv_hi),
        u_desire=u_desire,
    )


def load_scenario(path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def format_scenario(config: ScenarioConfig, drag: Optional[float] = None) -> str:
    """Serialise back to the line format (inverse of :func:`parse_scenario`)."""
    drags = {v.params.drag_b for v in config.vehicles}
    if drag is None:
        if len(drags) > 1:
            raise ValueError("scenario format carries a single drag coefficient")
        drag = drags.pop() if drags else DEFAULT_DRAG
    lines = [
        f"tau={config.tau!r}",
        f"steps={config.steps}",
        f"seed={config.seed}",
        f"drag_b={drag!r}",
    ]
    for v in config.vehicles:
        p = v.params
        in_lo, in_hi = p.input_bounds
        desire = "-" if v.u_desire is None else repr(v.u_desire)
        fields = [
            "vehicle", str(v.vid), "1" if p.controlled else "0",
            repr(v.initial.y), repr(v.initial.v), repr(p.alpha), repr(p.beta),
            repr(p.v_min), repr(p.v_max), repr(in_lo), repr(in_hi),
            repr(p.d_y_min), repr(p.d_y_max), repr(p.d_v_min), repr(p.d_v_max),
            repr(v.noise.delta_y_min), repr(v.noise.delta_y_max),
            repr(v.noise.delta_v_min), repr(v.noise.delta_v_max),
            desire,
        ]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"
