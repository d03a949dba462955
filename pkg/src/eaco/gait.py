"""Bipedal gait parameters, a kinematic two-leg walker and the trial fitness.

The walker is deliberately simple: the stance foot is pinned, the pelvis
moves by the stance-leg geometry, and a trial ends early ("falls") when a
geometric guard is violated.  Both legs receive the same signed joint
waveforms, the right leg half a cycle late, so lateral joints (hip yaw,
hip roll, ankle roll) act as turning and tilting disturbances.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .model import InvalidInputError

JOINTS = ("hip_yaw", "hip_roll", "hip_pitch", "knee_pitch", "ankle_pitch", "ankle_roll", "toe_pitch")
N_JOINTS = len(JOINTS)
SEARCH_DIM = 3 + 2 * N_JOINTS

# Per-joint amplitude limits (rad).
AMPLITUDE_LIMITS = np.array([0.3, 0.3, 0.7, 0.9, 0.7, 0.3, 0.4])

MIN_DISTANCE_CM = 10.0
MIN_FORWARD_CM = 0.1
MAX_DRIFT_DEG = 45.0


@dataclass
class GaitParams:
    s: float  # step length, mm
    h: float  # hip height, mm
    d: float  # duty ratio
    joint_wave: np.ndarray  # (7, 2): amplitude rad, phase rad
    cycle_period: float = 1.0

    def __post_init__(self):
        self.joint_wave = np.asarray(self.joint_wave, dtype=float).reshape(N_JOINTS, 2)

    def validate(self, model: "WalkerModel | None" = None) -> None:
        model = model or WalkerModel()
        if not self.s > 0:
            raise InvalidInputError("step length must be positive")
        if not 0 < self.d < 1:
            raise InvalidInputError("duty ratio must lie in (0, 1)")
        if not 0 < self.h <= model.leg_length:
            raise InvalidInputError(f"hip height must lie in (0, {model.leg_length}] mm")
        if not self.cycle_period > 0:
            raise InvalidInputError("cycle period must be positive")
        amp = self.joint_wave[:, 0]
        if np.any(amp < 0) or np.any(amp > AMPLITUDE_LIMITS + 1e-12):
            raise InvalidInputError("joint amplitudes outside their limits")
        if not np.all(np.isfinite(self.joint_wave)):
            raise InvalidInputError("non-finite joint wave")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.s, self.h, self.d], self.joint_wave.ravel()])

    @classmethod
    def from_vector(cls, v, cycle_period: float = 1.0) -> "GaitParams":
        v = np.asarray(v, dtype=float)
        if v.shape != (SEARCH_DIM,):
            raise InvalidInputError(f"expected {SEARCH_DIM} gait parameters, got {v.shape}")
        return cls(float(v[0]), float(v[1]), float(v[2]), v[3:].reshape(N_JOINTS, 2), cycle_period)

    def as_dict(self) -> dict:
        out = {"s": self.s, "h": self.h, "d": self.d, "cycle_period": self.cycle_period}
        for name, (a, p) in zip(JOINTS, self.joint_wave):
            out[name] = {"amplitude": float(a), "phase": float(p)}
        return out


@dataclass
class TrialOutcome:
    l_dis: float  # cm
    fell: bool = False
    fall_time: float | None = None
    drift_angle: float = 0.0  # degrees
    mean_speed: float = 0.0  # m/s
    fall_reason: str = ""

    @property
    def forward(self) -> float:
        """Displacement along the commanded heading, cm."""
        return self.l_dis * math.cos(math.radians(self.drift_angle))


@dataclass
class WalkerModel:
    thigh: float = 100.0  # mm
    shank: float = 103.0
    foot: float = 40.0  # toe lever used for swing clearance
    dt: float = 0.01
    lateral_limit: float = 0.15  # rad of torso roll
    pitch_limit: float = 0.35  # rad of torso pitch
    lean_gain: float = 2.0  # torso lean rate per rad of stance-foot error
    lean_recovery: float = 0.5  # s, time constant of the passive return to upright
    stride_tolerance: float = 0.3  # fraction of the commanded step length
    trip_depth: float = 8.0  # mm of swing-foot penetration that trips the walker

    def __post_init__(self):
        if min(self.thigh, self.shank, self.foot) <= 0:
            raise InvalidInputError("segment lengths must be positive")
        if not 0 < self.dt <= 0.02:
            raise InvalidInputError("dt must lie in (0, 0.02] s")

    @property
    def leg_length(self) -> float:
        return self.thigh + self.shank


def default_bounds(model: WalkerModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Search box over (s, h, d, amplitude/phase per joint)."""
    model = model or WalkerModel()
    lo = [20.0, 0.75 * model.leg_length, 0.5]
    hi = [250.0, 0.98 * model.leg_length, 0.9]
    for a in AMPLITUDE_LIMITS:
        lo += [0.0, -math.pi]
        hi += [float(a), math.pi]
    return np.array(lo), np.array(hi)


def _cycloid(x):
    return x - np.sin(2 * np.pi * x) / (2 * np.pi)


def waveform(theta, d: float):
    """Cyclic profile: +1 -> -1 over the stance fraction d, back over 1-d."""
    u = np.mod(np.asarray(theta, dtype=float) / (2 * np.pi), 1.0)
    stance = 1.0 - 2.0 * _cycloid(u / d)
    swing = -1.0 + 2.0 * _cycloid(np.clip((u - d) / (1.0 - d), 0.0, 1.0))
    return np.where(u < d, stance, swing)


def nominal_posture(h: float, model: WalkerModel) -> np.ndarray:
    """Standing angles with the ankle straight under the hip and the foot flat."""
    l1, l2 = model.thigh, model.shank
    h = min(h, model.leg_length)
    cos_a = np.clip((l1 ** 2 + h ** 2 - l2 ** 2) / (2 * l1 * h), -1.0, 1.0)
    thigh = math.acos(cos_a)  # forward lean of the thigh
    shank = math.asin(np.clip(l1 * math.sin(thigh) / l2, -1.0, 1.0))  # backward lean
    out = np.zeros(N_JOINTS)
    out[2] = thigh
    out[3] = thigh + shank
    out[4] = shank
    return out


def _leg_offset(leg: str) -> float:
    if leg == "left":
        return 0.0
    if leg == "right":
        return math.pi
    raise InvalidInputError("leg must be 'left' or 'right'")


def joint_angles_at(params: GaitParams, t, leg: str = "left", model: WalkerModel | None = None) -> np.ndarray:
    """Joint angles (7,) at time t, or (7, len(t)) for an array of times."""
    model = model or WalkerModel()
    params.validate(model)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidInputError("t must be non-negative")
    base = nominal_posture(params.h, model)
    # reduce the phase first so t and t + T map to the same angle exactly
    cyc = np.mod(t_arr / params.cycle_period, 1.0)
    theta = 2 * np.pi * cyc + _leg_offset(leg)
    amp, phase = params.joint_wave[:, 0], params.joint_wave[:, 1]
    if t_arr.ndim == 0:
        return base + amp * waveform(theta + phase, params.d)
    return base[:, None] + amp[:, None] * waveform(theta[None, :] + phase[:, None], params.d)


def _leg_geometry(q: np.ndarray, model: WalkerModel):
    """Foot x (forward of hip), vertical extent and foot pitch of one leg."""
    thigh = q[2]
    shank = q[2] - np.maximum(q[3], 0.0)  # no hyperextension
    x = model.thigh * np.sin(thigh) + model.shank * np.sin(shank)
    z = model.thigh * np.cos(thigh) + model.shank * np.cos(shank)
    pitch = shank + q[4]
    return x, z, pitch


def _lean(err: np.ndarray, model: WalkerModel) -> np.ndarray:
    """Leaky integral of the error signal (first-order lag, zero start)."""
    a = math.exp(-model.dt / model.lean_recovery)
    return lfilter([model.lean_gain * model.dt], [1.0, -a], err)


def simulate_walk(params: GaitParams, model: WalkerModel | None = None, duration: float = 20.0) -> TrialOutcome:
    model = model or WalkerModel()
    params.validate(model)
    n = int(round(duration / model.dt))
    t = np.arange(n + 1) * model.dt
    T = params.cycle_period

    geo, stance, lateral = {}, {}, {}
    for leg in ("left", "right"):
        q = joint_angles_at(params, t, leg, model)
        x, z, pitch = _leg_geometry(q, model)
        u = np.mod(t / T + (0.0 if leg == "left" else 0.5), 1.0)
        geo[leg] = (q, x, z, pitch, u)
        stance[leg] = u < params.d
        lateral[leg] = q[1] + q[5]

    n_st = stance["left"].astype(int) + stance["right"].astype(int)
    reasons = {}
    reasons["flight phase"] = n_st == 0

    safe = np.maximum(n_st, 1)
    def stance_mean(vals):
        return (np.where(stance["left"], vals["left"], 0.0) + np.where(stance["right"], vals["right"], 0.0)) / safe

    hip_z = stance_mean({k: geo[k][2] for k in geo})
    if np.any(hip_z > model.leg_length + 1e-9):
        raise AssertionError("hip above leg length")
    reasons["hip too low"] = hip_z < 0.5 * params.h

    # torso lean: stance-foot pitch and roll errors drive it, it relaxes toward upright
    pitch_err = stance_mean({k: geo[k][3] for k in geo})
    roll_err = stance_mean(lateral)
    reasons["torso pitch"] = np.abs(_lean(pitch_err, model)) > model.pitch_limit
    reasons["torso roll"] = np.abs(_lean(roll_err, model)) > model.lateral_limit

    # swing-foot clearance, ignoring the first and last tenth of the swing
    trip = np.zeros(n + 1, dtype=bool)
    for k in geo:
        q, x, z, p, u = geo[k]
        swing_frac = (u - params.d) / (1.0 - params.d)
        core = (~stance[k]) & (swing_frac > 0.1) & (swing_frac < 0.9)
        toe_drop = model.foot * np.sin(np.maximum(0.0, -(p + q[6])))
        clearance = hip_z - z - toe_drop
        trip |= core & (clearance < -model.trip_depth)
    reasons["trip"] = trip

    # stride check at touchdown: landing foot ahead of the supporting foot by about s
    stride_bad = np.zeros(n + 1, dtype=bool)
    for k, other in (("left", "right"), ("right", "left")):
        touch = stance[k][1:] & ~stance[k][:-1]
        idx = np.flatnonzero(touch) + 1
        step = geo[k][1][idx] - geo[other][1][idx]
        stride_bad[idx] = np.abs(step - params.s) > model.stride_tolerance * params.s
    reasons["stride mismatch"] = stride_bad

    fall_mask = np.zeros(n + 1, dtype=bool)
    for m in reasons.values():
        fall_mask |= m
    fall_idx = int(np.argmax(fall_mask)) if fall_mask.any() else None
    fall_reason = ""
    if fall_idx is not None:
        fall_reason = next(name for name, m in reasons.items() if m[fall_idx])

    # pelvis motion from the pinned stance feet
    dx = {k: np.diff(geo[k][1]) for k in geo}
    dyaw = {k: np.diff(geo[k][0][0]) for k in geo}
    st = {k: stance[k][:-1] & stance[k][1:] for k in geo}
    cnt = np.maximum(st["left"].astype(int) + st["right"].astype(int), 1)
    step_fwd = -(np.where(st["left"], dx["left"], 0.0) + np.where(st["right"], dx["right"], 0.0)) / cnt
    step_yaw = -(np.where(st["left"], dyaw["left"], 0.0) + np.where(st["right"], dyaw["right"], 0.0)) / cnt
    end = n if fall_idx is None else fall_idx
    heading = np.concatenate([[0.0], np.cumsum(step_yaw)])[:end]
    px = float(np.sum(step_fwd[:end] * np.cos(heading)))
    py = float(np.sum(step_fwd[:end] * np.sin(heading)))

    l_dis = math.hypot(px, py) / 10.0
    drift = math.degrees(math.atan2(abs(py), px)) if l_dis > 0 else 0.0
    elapsed = float(t[end]) if end > 0 else model.dt
    return TrialOutcome(
        l_dis=l_dis,
        fell=fall_idx is not None,
        fall_time=float(t[fall_idx]) if fall_idx is not None else None,
        drift_angle=drift,
        mean_speed=l_dis / 100.0 / elapsed,
        fall_reason=fall_reason,
    )


def fitness(outcome: TrialOutcome) -> float:
    """Distance in cm, or 0 for short, non-forward or strongly drifting trials."""
    if not outcome.l_dis > MIN_DISTANCE_CM:
        return 0.0
    if outcome.forward <= MIN_FORWARD_CM:
        return 0.0
    if outcome.drift_angle > MAX_DRIFT_DEG:
        return 0.0
    return float(outcome.l_dis)


def fitness_upper_bound(model: WalkerModel, duration: float = 20.0, cycle_period: float = 1.0) -> float:
    """Two steps per cycle, each at most twice the leg length, in cm."""
    return duration / cycle_period * 2 * 2 * model.leg_length / 10.0


def evaluate_vector(x, model: WalkerModel | None = None, duration: float = 20.0,
                    cycle_period: float = 1.0) -> float:
    model = model or WalkerModel()
    return fitness(simulate_walk(GaitParams.from_vector(x, cycle_period), model, duration))


def gait_problem(bounds=None, scheme=None, model: WalkerModel | None = None,
                 duration: float = 20.0, cycle_period: float = 1.0):
    """Layered problem whose objective is the negated trial fitness."""
    from .benchmarks.discretize import DiscretizationScheme, LayeredProblem

    model = model or WalkerModel()
    lo, hi = bounds if bounds is not None else default_bounds(model)
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if lo.shape != (SEARCH_DIM,) or hi.shape != (SEARCH_DIM,):
        raise InvalidInputError(f"gait bounds must have {SEARCH_DIM} entries")
    if scheme is None:
        scheme = DiscretizationScheme.for_bounds(lo, hi, levels=11, anchors=11)

    def objective(x):
        x = np.clip(x, lo, hi)
        return -evaluate_vector(x, model, duration, cycle_period)

    shift = fitness_upper_bound(model, duration, cycle_period) + 1.0
    return LayeredProblem(objective, scheme, shift=shift, name="gait")


def random_search(n_draws: int, rng: np.random.Generator, model: WalkerModel | None = None,
                  bounds=None, duration: float = 20.0) -> tuple[np.ndarray, float]:
    """Best of ``n_draws`` uniform parameter vectors."""
    model = model or WalkerModel()
    lo, hi = bounds if bounds is not None else default_bounds(model)
    best_x, best_f = None, -1.0
    for _ in range(n_draws):
        x = rng.uniform(lo, hi)
        f = evaluate_vector(x, model, duration)
        if f > best_f:
            best_x, best_f = x, f
    return best_x, best_f


def export_joint_csv(params: GaitParams, path: str | Path, model: WalkerModel | None = None,
                     duration: float | None = None, rate: float = 100.0) -> None:
    """Joint angles of both legs sampled at ``rate`` Hz (two cycles by default)."""
    model = model or WalkerModel()
    duration = 2 * params.cycle_period if duration is None else duration
    t = np.arange(int(round(duration * rate)) + 1) / rate
    left = joint_angles_at(params, t, "left", model)
    right = joint_angles_at(params, t, "right", model)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"left_{j}" for j in JOINTS] + [f"right_{j}" for j in JOINTS])
        for i, ti in enumerate(t):
            w.writerow([f"{ti:.6g}"] + [f"{v:.6g}" for v in left[:, i]] + [f"{v:.6g}" for v in right[:, i]])


def export_summary(params: GaitParams, outcome: TrialOutcome, path: str | Path) -> None:
    data = {"params": params.as_dict(), "fitness": fitness(outcome), "mean_speed": outcome.mean_speed,
            "outcome": {k: v for k, v in asdict(outcome).items()}}
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
