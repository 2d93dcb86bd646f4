"""Trajectory classification, F1/MAE evaluation, and round-trip filtering.

Translation is measured in the path-local frame: each inter-frame step is
rotated into the orientation that produced it before summing, so a camera
that turns while advancing still reads as pure forward motion.  Rotation is
the net entry-to-exit change (canonical Euler for quaternion trajectories,
yaw/pitch state differences for box tracks).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import dsl
from .compiler import BoxTrack, FRAME_COUNT, Trajectory, compile_camera, segmentize
from .errors import EmptyRange, GimbalWarning, LengthMismatch
from .kinematics import (
    euler_quat,
    quat_angle_between,
    quat_conjugate,
    quat_multiply,
    quat_rotate,
    quat_scale_rotation,
    relative_euler,
    vec_norm,
    vec_sub,
    wrap_degrees,
)

# Fine translation bin edges; midpoints of the compiler's 0/0.5/1.0/2.0 levels.
TRANS_DEAD_ZONE = 0.25
TRANS_PLAIN_EDGE = 0.75
TRANS_FAR_EDGE = 1.5

# Object rotation level edges (degrees).
OBJ_ROT_SMALL_EDGE = 15.0
OBJ_ROT_LARGE_EDGE = 60.0

ROT_BIN_WIDTH = 30.0
ROT_BIN_COUNT = 12

# Guard against float noise flipping values sitting exactly on a bin edge.
_EDGE_EPS = 1e-9

SIMILARITY_THRESHOLD = 0.85
ROT_SIMILARITY_SCALE_DEG = 30.0
# Path-length normalization saturates here so heavy noise cannot
# self-normalize its own error term.
PATH_SCALE_CAP = 2.0

STATIC_PATH_LENGTH = 0.25
STATIC_ROTATION_DEG = 15.0

FINE_LEVEL_NAMES = {-3: "far-", -2: "plain-", -1: "near-", 0: "0",
                    1: "near+", 2: "plain+", 3: "far+"}
OBJ_LEVEL_NAMES = {-2: "-large", -1: "-small", 0: "0", 1: "+small", 2: "+large"}


@dataclass(frozen=True)
class TranslationClass:
    granularity: str  # "coarse" | "fine"
    levels: tuple[int, int, int]  # per x/y/z; coarse in {-1,0,1}, fine in {-3..3}

    def label(self) -> str:
        if self.granularity == "coarse":
            return "/".join({-1: "-", 0: "0", 1: "+"}[v] for v in self.levels)
        return "/".join(FINE_LEVEL_NAMES[v] for v in self.levels)

    def coarse(self) -> "TranslationClass":
        if self.granularity == "coarse":
            return self
        return TranslationClass("coarse", tuple(_sign(v) for v in self.levels))


@dataclass(frozen=True)
class RotationClass:
    mode: str  # "camera_fine" | "object"
    bins: tuple[int, ...]  # camera_fine: 3 bin indices 0..11; object: 2 levels -2..2

    def label(self) -> str:
        if self.mode == "object":
            return "/".join(OBJ_LEVEL_NAMES[v] for v in self.bins)
        return "/".join(str(b) for b in self.bins)


def _sign(v: int | float) -> int:
    return 0 if v == 0 else (1 if v > 0 else -1)


def class_space(name: str) -> list:
    """Enumerate a full class space ("coarse", "fine", "object_rot", "camera_rot")."""
    if name == "coarse":
        return [TranslationClass("coarse", c)
                for c in itertools.product((-1, 0, 1), repeat=3)]
    if name == "fine":
        return [TranslationClass("fine", c)
                for c in itertools.product(range(-3, 4), repeat=3)]
    if name == "object_rot":
        return [RotationClass("object", c)
                for c in itertools.product(range(-2, 3), repeat=2)]
    if name == "camera_rot":
        return [RotationClass("camera_fine", c)
                for c in itertools.product(range(ROT_BIN_COUNT), repeat=3)]
    raise ValueError(f"unknown class space {name!r}")


def _check_range(length: int, frame_range: tuple[int, int] | None) -> tuple[int, int]:
    if frame_range is None:
        frame_range = (0, length - 1)
    start, end = frame_range
    if not (0 <= start < end < length):
        raise EmptyRange(f"frame range {frame_range} invalid for {length} frames",
                         start=start, end=end, length=length)
    return start, end


def net_translation(traj: Trajectory | BoxTrack,
                    frame_range: tuple[int, int] | None = None) -> tuple[float, float, float]:
    """Sum of inter-frame steps, each expressed in its own local frame."""
    start, end = _check_range(len(traj), frame_range)
    total = [0.0, 0.0, 0.0]
    if isinstance(traj, BoxTrack):
        positions = traj.centers
        orient = traj.orientation
    else:
        positions = [p.position for p in traj.poses]
        orient = lambda f: traj.poses[f].orientation  # noqa: E731
    for f in range(start, end):
        step = vec_sub(positions[f + 1], positions[f])
        # The compiler translates after the frame's rotation increment, so the
        # step is undone in the destination frame's axes.
        local = quat_rotate(quat_conjugate(orient(f + 1)), step)
        total[0] += local[0]
        total[1] += local[1]
        total[2] += local[2]
    return (total[0], total[1], total[2])


def net_rotation(traj: Trajectory | BoxTrack,
                 frame_range: tuple[int, int] | None = None,
                 ) -> tuple[float, float, float]:
    """Net (yaw, pitch, roll) in degrees between the range's endpoints."""
    start, end = _check_range(len(traj), frame_range)
    if isinstance(traj, BoxTrack):
        y0, p0 = traj.yaw_pitch[start]
        y1, p1 = traj.yaw_pitch[end]
        return (y1 - y0, p1 - p0, 0.0)
    yaw, pitch, roll, gimbal = relative_euler(traj.poses[start].orientation,
                                              traj.poses[end].orientation)
    if gimbal:
        warnings.warn(f"pitch at +/-90 deg in frames {start}..{end}; "
                      "yaw and roll merged", GimbalWarning, stacklevel=2)
    return (yaw, pitch, roll)


def _fine_level(d: float) -> int:
    mag = abs(d) + _EDGE_EPS
    if mag < TRANS_DEAD_ZONE:
        return 0
    if mag < TRANS_PLAIN_EDGE:
        level = 1
    elif mag < TRANS_FAR_EDGE:
        level = 2
    else:
        level = 3
    return level if d > 0 else -level


def tag_translation(traj: Trajectory | BoxTrack, granularity: str = "fine",
                    frame_range: tuple[int, int] | None = None) -> TranslationClass:
    if granularity not in ("coarse", "fine"):
        raise ValueError(f"granularity must be coarse or fine, got {granularity!r}")
    d = net_translation(traj, frame_range)
    fine = TranslationClass("fine", tuple(_fine_level(v) for v in d))
    return fine if granularity == "fine" else fine.coarse()


def rotation_bin(angle_deg: float) -> int:
    """Uniform 30-degree bin index over [-180, 180).

    Measurement noise can land an exact half-turn on either side of the
    +/-180 seam; both sides are the same angle and must share a bin.
    """
    theta = wrap_degrees(angle_deg)
    if theta > 180.0 - 1e-6:
        theta = -180.0
    b = int(math.floor((theta + 180.0) / ROT_BIN_WIDTH + _EDGE_EPS))
    return min(max(b, 0), ROT_BIN_COUNT - 1)


def object_rotation_level(angle_deg: float) -> int:
    mag = abs(angle_deg) + _EDGE_EPS
    if mag < OBJ_ROT_SMALL_EDGE:
        return 0
    level = 1 if mag < OBJ_ROT_LARGE_EDGE else 2
    return level if angle_deg > 0 else -level


def tag_rotation(traj: Trajectory | BoxTrack, mode: str = "camera_fine",
                 frame_range: tuple[int, int] | None = None) -> RotationClass:
    if mode not in ("camera_fine", "object"):
        raise ValueError(f"mode must be camera_fine or object, got {mode!r}")
    yaw, pitch, roll = net_rotation(traj, frame_range)
    if mode == "object":
        return RotationClass("object", (object_rotation_level(yaw),
                                        object_rotation_level(pitch)))
    return RotationClass("camera_fine", (rotation_bin(yaw), rotation_bin(pitch),
                                         rotation_bin(roll)))


# --- evaluation ------------------------------------------------------------------

@dataclass
class ClassScore:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    per_class: dict[str, ClassScore] = field(default_factory=dict)
    macro_f1: float = 0.0
    micro_f1: float = 0.0
    sample_count: int = 0

    def to_json_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "sample_count": self.sample_count,
            "per_class": {
                label: {"precision": s.precision, "recall": s.recall,
                        "f1": s.f1, "support": s.support}
                for label, s in self.per_class.items()
            },
        }


def _as_label(c) -> str:
    return c.label() if hasattr(c, "label") else str(c)


def f1_report(predicted: Sequence, reference: Sequence) -> EvalReport:
    """Per-class precision/recall/F1 with macro and micro averages.

    Macro averages over labels that appear in the reference; micro counts
    exact matches over all samples.
    """
    if len(predicted) != len(reference):
        raise LengthMismatch(
            f"{len(predicted)} predictions vs {len(reference)} references",
            predicted=len(predicted), reference=len(reference))
    if not reference:
        raise LengthMismatch("empty evaluation set")
    pred = [_as_label(c) for c in predicted]
    ref = [_as_label(c) for c in reference]
    tp: dict[str, int] = {}
    pred_count: dict[str, int] = {}
    ref_count: dict[str, int] = {}
    correct = 0
    for p, r in zip(pred, ref):
        pred_count[p] = pred_count.get(p, 0) + 1
        ref_count[r] = ref_count.get(r, 0) + 1
        if p == r:
            tp[p] = tp.get(p, 0) + 1
            correct += 1
    report = EvalReport(sample_count=len(ref))
    f1_sum = 0.0
    for label in sorted(ref_count):
        t = tp.get(label, 0)
        p_den = pred_count.get(label, 0)
        precision = t / p_den if p_den else 0.0
        recall = t / ref_count[label]
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        report.per_class[label] = ClassScore(precision, recall, f1, ref_count[label])
        f1_sum += f1
    report.macro_f1 = f1_sum / len(ref_count)
    report.micro_f1 = correct / len(ref)
    return report


def rotation_mae(predicted: Sequence[Trajectory | BoxTrack],
                 reference: Sequence[Trajectory | BoxTrack],
                 frame_range: tuple[int, int] | None = None,
                 ) -> tuple[float, float, float]:
    """Mean absolute net-rotation difference per axis, degrees, wrap-aware."""
    if len(predicted) != len(reference):
        raise LengthMismatch(
            f"{len(predicted)} predictions vs {len(reference)} references")
    if not predicted:
        raise LengthMismatch("empty evaluation set")
    sums = [0.0, 0.0, 0.0]
    for p, r in zip(predicted, reference):
        ap = net_rotation(p, frame_range)
        ar = net_rotation(r, frame_range)
        for k in range(3):
            sums[k] += abs(wrap_degrees(ap[k] - ar[k]))
    n = len(predicted)
    return (sums[0] / n, sums[1] / n, sums[2] / n)


def path_length(traj: Trajectory | BoxTrack) -> float:
    positions = traj.centers if isinstance(traj, BoxTrack) else [p.position for p in traj.poses]
    return sum(vec_norm(vec_sub(b, a)) for a, b in zip(positions, positions[1:]))


def traj_similarity(a: Trajectory, b: Trajectory) -> float:
    """Blend of position and orientation agreement in (0, 1]; symmetric."""
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} frames")
    scale = max(1.0, min(path_length(a), path_length(b), PATH_SCALE_CAP))
    pos_err = sum(vec_norm(vec_sub(pa.position, pb.position))
                  for pa, pb in zip(a.poses, b.poses)) / len(a)
    ang_err = sum(quat_angle_between(pa.orientation, pb.orientation)
                  for pa, pb in zip(a.poses, b.poses)) / len(a)
    return 0.5 * math.exp(-pos_err / scale) + 0.5 * math.exp(-ang_err / ROT_SIMILARITY_SCALE_DEG)


# --- DSL round-trip filter ----------------------------------------------------------

# Signed fine levels back to value tokens; negative z is "in" by convention.
_FINE_TOKEN = {
    "t_x": {-3: "far_left", -2: "left", -1: "near_left", 0: "no",
            1: "near_right", 2: "right", 3: "far_right"},
    "t_y": {-3: "far_down", -2: "down", -1: "near_down", 0: "no",
            1: "near_up", 2: "up", 3: "far_up"},
    "t_z": {-3: "far_in", -2: "in", -1: "near_in", 0: "no",
            1: "near_out", 2: "out", 3: "far_out"},
}


def snap_angle(angle_deg: float) -> int:
    """Nearest allowed DSL angle value, wrap-aware; ties resolve downward."""
    theta = wrap_degrees(angle_deg)
    return min(dsl.ANGLE_VALUES, key=lambda a: (abs(wrap_degrees(theta - a)), a))


@dataclass
class FilterResult:
    accepted: bool
    reason: str  # "ok" | "static" | "score"
    score: float | None = None
    program: dsl.MotionProgram | None = None
    rebuilt: Trajectory | None = None

    def to_json_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "reason": self.reason,
            "score": self.score,
            "program": dsl.serialize_program(self.program) if self.program else None,
        }


def _snap_euler(traj: Trajectory, b0: int, b1: int,
                yaw: float, pitch: float, roll: float) -> tuple[int, int, int]:
    """Snap a measured net rotation to the grammar's angle grid.

    Every grid-snapped representation of the rotation is a candidate: both
    Euler aliases ((y, p, r) and (y+180, 180-p, r+180); the grid is denser
    inside +/-90 degrees) and, for half-turn components, both sweep signs
    (a 180-degree net rotation has two antipodal geodesic routes that the
    endpoints alone cannot distinguish).  The candidate whose interpolated
    path best matches the trajectory's endpoint and midpoint orientations
    wins; ties keep the first, so the choice is deterministic.
    """
    aliases = (
        (yaw, pitch, roll),
        (wrap_degrees(yaw + 180.0), wrap_degrees(180.0 - pitch),
         wrap_degrees(roll + 180.0)),
    )
    candidates: dict[tuple[int, int, int], None] = {}
    for cy, cp, cr in aliases:
        sy, sp, sr = snap_angle(cy), snap_angle(cp), snap_angle(cr)
        for fy in ((sy, -sy) if abs(sy) == 180 else (sy,)):
            for fp in ((sp, -sp) if abs(sp) == 180 else (sp,)):
                for fr in ((sr, -sr) if abs(sr) == 180 else (sr,)):
                    candidates.setdefault((fy, fp, fr))
    if len(candidates) == 1:
        return next(iter(candidates))
    mid = (b0 + b1) // 2
    w_mid = (mid - b0) / (b1 - b0)
    q_entry = traj.poses[b0].orientation
    q_mid = traj.poses[mid].orientation
    q_exit = traj.poses[b1].orientation
    best = None
    for cand in candidates:
        net = euler_quat(float(cand[0]), float(cand[1]), float(cand[2]))
        err = quat_angle_between(quat_multiply(q_entry, net), q_exit)
        if mid > b0:
            pred_mid = quat_multiply(q_entry, quat_scale_rotation(net, w_mid))
            err += quat_angle_between(pred_mid, q_mid)
        if best is None or err < best[0]:
            best = (err, cand)
    return best[1]


def trajectory_to_program(traj: Trajectory) -> dsl.MotionProgram:
    """Tag the four canonical segments and rebuild a free_form camera program."""
    bounds = segmentize(4)
    tags = []
    for b0, b1 in zip(bounds, bounds[1:]):
        d = net_translation(traj, (b0, b1))
        fine = [_fine_level(v) for v in d]
        yaw, pitch, roll = net_rotation(traj, (b0, b1))
        modifiers: dict[str, str] = {}
        for key, level in zip(("t_x", "t_y", "t_z"), fine):
            if level:
                modifiers[key] = _FINE_TOKEN[key][level]
        snapped_yaw, snapped_pitch, snapped_roll = _snap_euler(
            traj, b0, b1, yaw, pitch, roll)
        for key, angle in (("yaw", snapped_yaw), ("pitch", snapped_pitch),
                           ("roll", snapped_roll)):
            if angle:
                modifiers[key] = str(angle)
        tags.append(dsl.MotionTag(dsl.FREE_FORM, modifiers))
    return dsl.MotionProgram(dsl.ROLE_CAMERA, tuple(tags))


def dsl_round_trip_filter(traj: Trajectory,
                          threshold: float = SIMILARITY_THRESHOLD) -> FilterResult:
    """Convert a trajectory to DSL via tagging and keep it only if the
    recompiled program stays close to the input.

    Static or near-static inputs are rejected outright.
    """
    if len(traj) != FRAME_COUNT:
        raise LengthMismatch(f"expected {FRAME_COUNT} frames, got {len(traj)}")
    rot = net_rotation(traj)
    if path_length(traj) < STATIC_PATH_LENGTH and \
            all(abs(wrap_degrees(v)) < STATIC_ROTATION_DEG for v in rot):
        return FilterResult(False, "static")
    program = trajectory_to_program(traj)
    rebuilt = compile_camera(program, None, seed=0)
    score = traj_similarity(traj, rebuilt)
    if score < threshold:
        return FilterResult(False, "score", score, program, rebuilt)
    return FilterResult(True, "ok", score, program, rebuilt)


def iter_segment_classes(traj: Trajectory | BoxTrack,
                         granularity: str = "fine",
                         mode: str | None = None,
                         ) -> Iterable[tuple[tuple[int, int], TranslationClass, RotationClass]]:
    """Per-segment (range, translation class, rotation class) triples."""
    bounds = traj.segment_bounds
    if mode is None:
        mode = "object" if isinstance(traj, BoxTrack) else "camera_fine"
    for b0, b1 in zip(bounds, bounds[1:]):
        yield ((b0, b1),
               tag_translation(traj, granularity, (b0, b1)),
               tag_rotation(traj, mode, (b0, b1)))
