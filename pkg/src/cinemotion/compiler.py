"""Deterministic conversion of motion programs into 21-frame trajectories.

Object tracks are synthesized first; the camera is then compiled relative to
the object and expressed in world coordinates anchored at the camera's first
frame (identity pose at the origin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import dsl
from .errors import DslError, MissingTarget
from .kinematics import (
    IDENTITY_QUAT,
    ORIGIN,
    Pose,
    Quat,
    Vec3,
    WORLD_UP,
    ease,
    euler_of_quat,
    euler_quat,
    jitter_offsets,
    look_at,
    mix_seed,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_scale_rotation,
    quat_from_axis_angle,
    turret_quat,
    vec_add,
    vec_dot,
    vec_norm,
    vec_normalize,
    vec_scale,
    vec_sub,
)

FRAME_COUNT = 21

# World units moved per segment for each named intensity level.
LEVEL_NEAR = 0.5
LEVEL_PLAIN = 1.0
LEVEL_FAR = 2.0

# Tracking-shot constants.
ORBIT_FALLBACK_RADIUS = 4.0
VER_OFFSET_DEG = {"aerial": 35.0, "low-angle": -20.0, "none": 0.0}
FOLLOW_RATE = {"soft": 0.35, "lazy": 0.12}
FRAMING_SHIFT = 0.5

DEFAULT_START_CENTER: Vec3 = (0.0, 0.0, -5.0)
DEFAULT_EXTENTS: Vec3 = (0.5, 0.5, 0.5)


@dataclass(frozen=True)
class CompileConfig:
    start_center: Vec3 = DEFAULT_START_CENTER
    extents: Vec3 = DEFAULT_EXTENTS


@dataclass
class Trajectory:
    """Per-frame camera poses plus the segment boundaries that produced them."""

    poses: list[Pose]
    segment_bounds: list[int]

    def __len__(self) -> int:
        return len(self.poses)

    def positions(self) -> list[Vec3]:
        return [p.position for p in self.poses]

    def to_json_dict(self) -> dict:
        return {
            "frames": [p.to_json_dict() for p in self.poses],
            "segment_bounds": list(self.segment_bounds),
        }

    @staticmethod
    def from_json_dict(data: dict) -> "Trajectory":
        poses = [Pose.from_json_dict(f) for f in data["frames"]]
        bounds = list(data.get("segment_bounds") or segmentize(1))
        return Trajectory(poses, bounds)


@dataclass
class BoxTrack:
    """Object bounding-box track: centers, half-extents, and yaw/pitch state."""

    centers: list[Vec3]
    extents: Vec3
    yaw_pitch: list[tuple[float, float]]
    segment_bounds: list[int] = field(default_factory=lambda: segmentize(1))

    def __len__(self) -> int:
        return len(self.centers)

    def orientation(self, frame: int) -> Quat:
        y, p = self.yaw_pitch[frame]
        return turret_quat(y, p)

    def to_json_dict(self) -> dict:
        return {
            "e": list(self.extents),
            "frames": [
                {"c": list(c), "yp": [yp[0], yp[1]]}
                for c, yp in zip(self.centers, self.yaw_pitch)
            ],
            "segment_bounds": list(self.segment_bounds),
        }

    @staticmethod
    def from_json_dict(data: dict) -> "BoxTrack":
        e = data["e"]
        centers = [(f["c"][0], f["c"][1], f["c"][2]) for f in data["frames"]]
        yp = [(f["yp"][0], f["yp"][1]) for f in data["frames"]]
        bounds = list(data.get("segment_bounds") or segmentize(1))
        return BoxTrack(centers, (e[0], e[1], e[2]), yp, bounds)


@dataclass
class SceneMotion:
    object: BoxTrack
    camera: Trajectory
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "object": self.object.to_json_dict(),
            "camera": self.camera.to_json_dict(),
            "seed": self.seed,
        }

    @staticmethod
    def from_json_dict(data: dict) -> "SceneMotion":
        return SceneMotion(
            BoxTrack.from_json_dict(data["object"]),
            Trajectory.from_json_dict(data["camera"]),
            int(data.get("seed", 0)),
        )


def segmentize(tag_count: int) -> list[int]:
    """Frame indices delimiting tag spans; 20 intervals split near-evenly.

    Longer spans go to the earliest segments; boundary frames are shared.
    """
    if not 1 <= tag_count <= dsl.MAX_TAGS:
        raise DslError(f"tag_count {tag_count} outside 1..{dsl.MAX_TAGS}")
    intervals = FRAME_COUNT - 1
    base, rem = divmod(intervals, tag_count)
    bounds = [0]
    for k in range(tag_count):
        bounds.append(bounds[-1] + base + (1 if k < rem else 0))
    return bounds


_LEVEL_BY_WORD = {"near": LEVEL_NEAR, "far": LEVEL_FAR}
_AXIS_SIGNS = {
    "t_x": {"left": -1.0, "right": 1.0},
    "t_y": {"down": -1.0, "up": 1.0},
    "t_z": {"in": -1.0, "out": 1.0},  # "in" advances along local -z
}


def _level_value(key: str, token: str) -> float:
    if token == "no":
        return 0.0
    parts = token.split("_")
    if len(parts) == 2:
        magnitude = _LEVEL_BY_WORD[parts[0]]
        word = parts[1]
    else:
        magnitude = LEVEL_PLAIN
        word = parts[0]
    return _AXIS_SIGNS[key][word] * magnitude


def translation_vector(tag: dsl.MotionTag) -> Vec3:
    """Signed per-axis segment displacement, in the tag's local frame."""
    return (
        _level_value("t_x", tag.resolved("t_x")),
        _level_value("t_y", tag.resolved("t_y")),
        _level_value("t_z", tag.resolved("t_z")),
    )


def _split_amount(token: str) -> tuple[str, float]:
    name, amount = token.rsplit("_", 1)
    return name, float(amount)


def _segment_weights(kind: str, n: int) -> list[float]:
    return [ease(kind, i / n) for i in range(n + 1)]


def compile_object(program: dsl.MotionProgram,
                   start_center: Vec3 = DEFAULT_START_CENTER,
                   extents: Vec3 = DEFAULT_EXTENTS,
                   seed: int = 0) -> BoxTrack:
    """Integrate an object program into a box track.

    Rotation state is a yaw/pitch pair (world yaw, then pitch about the yawed
    x-axis).  Each frame applies its rotation increment first, then translates
    along the box's new local axes, so turning curves the path.
    """
    if program.role != dsl.ROLE_OBJECT:
        raise DslError(f"expected an object program, got role {program.role!r}")
    if any(e <= 0 for e in extents):
        raise DslError(f"extents must be positive, got {extents}")
    bounds = segmentize(len(program.tags))
    centers: list[Vec3] = [start_center]
    yaw_pitch: list[tuple[float, float]] = [(0.0, 0.0)]
    pos = start_center
    yaw, pitch = 0.0, 0.0
    for tag, b0, b1 in zip(program.tags, bounds, bounds[1:]):
        n = b1 - b0
        kind = tag.resolved("ease")
        lvec = translation_vector(tag)
        dyaw = float(tag.angle("yaw"))
        dpitch = float(tag.angle("pitch"))
        yaw0, pitch0 = yaw, pitch
        weights = _segment_weights(kind, n)
        for i in range(1, n + 1):
            w = weights[i]
            dw = w - weights[i - 1]
            yaw = yaw0 + w * dyaw
            pitch = pitch0 + w * dpitch
            step = quat_rotate(turret_quat(yaw, pitch), vec_scale(lvec, dw))
            pos = vec_add(pos, step)
            centers.append(pos)
            yaw_pitch.append((yaw, pitch))
    return BoxTrack(centers, extents, yaw_pitch, bounds)


class _CameraState:
    __slots__ = ("pos", "quat", "up")

    def __init__(self) -> None:
        self.pos: Vec3 = ORIGIN
        self.quat: Quat = IDENTITY_QUAT
        self.up: Vec3 = WORLD_UP


def _object_center(track: BoxTrack | None, frame: int, primitive: str) -> Vec3:
    if track is None:
        raise MissingTarget(f"{primitive} requires an object track", primitive=primitive)
    return track.centers[frame]


def _dutch_roll(tag: dsl.MotionTag, w: float) -> float:
    return float(tag.angle("dutch")) * w


def _look_with_framing(state: _CameraState, target: Vec3, tag: dsl.MotionTag,
                       w: float, extra_shift: Vec3 | None = None) -> Quat:
    """Aim at ``target`` with the tag's framing offset and dutch ramp applied."""
    base = look_at(state.pos, target, WORLD_UP, 0.0, fallback_up=state.up)
    shift = ORIGIN
    framing = tag.resolved("object")
    if framing != "none":
        right = quat_rotate(base, (1.0, 0.0, 0.0))
        sign = 1.0 if framing == "left" else -1.0
        shift = vec_scale(right, sign * FRAMING_SHIFT)
    if extra_shift is not None:
        shift = vec_add(shift, extra_shift)
    point = vec_add(target, shift)
    if vec_norm(vec_sub(point, state.pos)) <= 1e-9:
        point = target
    return look_at(state.pos, point, WORLD_UP, _dutch_roll(tag, w), fallback_up=state.up)


def _elevate(v: Vec3, delta_deg: float, axis: Vec3) -> Vec3:
    """Shift a vector's elevation angle relative to the plane normal to axis."""
    if delta_deg == 0.0:
        return v
    h = vec_dot(v, axis)
    perp = vec_sub(v, vec_scale(axis, h))
    rho = vec_norm(perp)
    if rho < 1e-9:
        return v
    r = vec_norm(v)
    eps = math.atan2(h, rho) + math.radians(delta_deg)
    # Stay off the poles so look-at up vectors remain well conditioned.
    limit = math.pi / 2 - 1e-2
    eps = max(-limit, min(limit, eps))
    perp_dir = vec_scale(perp, 1.0 / rho)
    return vec_add(vec_scale(perp_dir, r * math.cos(eps)), vec_scale(axis, r * math.sin(eps)))


_AXIS_VECTORS = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}

_WORLD_MOVE_DIRS = {
    "truck_right": (1.0, 0.0, 0.0),
    "truck_left": (-1.0, 0.0, 0.0),
    "pedestal_up": (0.0, 1.0, 0.0),
    "pedestal_down": (0.0, -1.0, 0.0),
    "goes_in": (0.0, 0.0, -1.0),
    "goes_out": (0.0, 0.0, 1.0),
}


def _freeform_segment(state: _CameraState, tag: dsl.MotionTag, n: int,
                      poses: list[Pose]) -> None:
    kind = tag.resolved("ease")
    lvec = translation_vector(tag)
    net = euler_quat(float(tag.angle("yaw")), float(tag.angle("pitch")),
                     float(tag.angle("roll")))
    q0, pos = state.quat, state.pos
    weights = _segment_weights(kind, n)
    for i in range(1, n + 1):
        w = weights[i]
        dw = w - weights[i - 1]
        q = quat_normalize(quat_multiply(q0, quat_scale_rotation(net, w)))
        pos = vec_add(pos, quat_rotate(q, vec_scale(lvec, dw)))
        poses.append(Pose(pos, q))
    state.pos, state.quat = pos, poses[-1].orientation
    state.up = quat_rotate(state.quat, WORLD_UP)


def _orbit_segment(state: _CameraState, tag: dsl.MotionTag, b0: int, n: int,
                   track: BoxTrack | None, poses: list[Pose]) -> None:
    target0 = _object_center(track, b0, dsl.ORBIT_TRACK)
    axis = _AXIS_VECTORS[tag.resolved("plane_axis")]
    v0 = vec_sub(state.pos, target0)
    r_mag = vec_norm(v0)
    if r_mag < 1e-6:
        r_mag = ORBIT_FALLBACK_RADIUS
        v0 = vec_scale((0.0, 0.0, 1.0), r_mag)
    h0 = vec_dot(v0, axis)
    perp = vec_sub(v0, vec_scale(axis, h0))
    rho0 = vec_norm(perp)
    if rho0 > 1e-9:
        e1 = vec_scale(perp, 1.0 / rho0)
    else:
        # Camera sits on the orbit axis; pick a deterministic in-plane basis.
        probe = (0.0, 0.0, 1.0) if abs(axis[2]) < 0.9 else (1.0, 0.0, 0.0)
        e1 = vec_normalize(vec_sub(probe, vec_scale(axis, vec_dot(probe, axis))))
    e2 = (axis[1] * e1[2] - axis[2] * e1[1],
          axis[2] * e1[0] - axis[0] * e1[2],
          axis[0] * e1[1] - axis[1] * e1[0])
    eps0 = math.atan2(h0, rho0)
    sweep = float(tag.angle("deg")) * (1.0 if tag.resolved("dir") == "ccw" else -1.0)
    spiral = tag.resolved("spiral")
    s_name, s_amt = ("no", 0.0) if spiral == "no" else _split_amount(spiral)
    ver = VER_OFFSET_DEG[tag.resolved("ver")]
    kind = tag.resolved("ease")
    weights = _segment_weights(kind, n)
    limit = math.pi / 2 - 1e-2
    for i in range(1, n + 1):
        w = weights[i]
        theta = math.radians(sweep * w)
        eps = eps0 + math.radians(ver * w)
        eps = max(-limit, min(limit, eps))
        r = r_mag * (1.0 + (s_amt if s_name == "out" else -s_amt) * w)
        target = _object_center(track, b0 + i, dsl.ORBIT_TRACK)
        radial = vec_add(
            vec_scale(vec_add(vec_scale(e1, math.cos(theta)), vec_scale(e2, math.sin(theta))),
                      r * math.cos(eps)),
            vec_scale(axis, r * math.sin(eps)))
        state.pos = vec_add(target, radial)
        q = _look_with_framing(state, target, tag, w)
        poses.append(Pose(state.pos, q))
        state.quat = q
        state.up = quat_rotate(q, WORLD_UP)


def _tail_segment(state: _CameraState, tag: dsl.MotionTag, b0: int, n: int,
                  track: BoxTrack | None, poses: list[Pose]) -> None:
    obj0 = _object_center(track, b0, dsl.TAIL_TRACK)
    offset0 = vec_sub(state.pos, obj0)
    if tag.resolved("lead") == "lead":
        span = min(3, n)
        vel = vec_scale(vec_sub(track.centers[b0 + span], obj0), 1.0 / span)
        speed = vec_norm(vel)
        if speed > 1e-9:
            vhat = vec_scale(vel, 1.0 / speed)
            along = vec_dot(offset0, vhat)
            if along < 0.0:
                offset0 = vec_sub(offset0, vec_scale(vhat, 2.0 * along))
    style = tag.resolved("follow_style")
    follow_axis = tag.resolved("follow_axis")
    amp = tag.resolved("amp")
    a_name, a_scale = ("no", 1.0) if amp == "no" else _split_amount(amp)
    mirror = tag.resolved("mirror_axis")
    scale = [1.0, 1.0, 1.0]
    for idx, ax in enumerate("xyz"):
        if a_name in (ax, "all"):
            scale[idx] = a_scale
        if mirror == ax:
            scale[idx] = -scale[idx]
    dolly = tag.resolved("dolly")
    d_name, d_amt = ("no", 0.0) if dolly == "no" else _split_amount(dolly)
    ver = VER_OFFSET_DEG[tag.resolved("ver")]
    dont_look = tag.resolved("dont_look") == "dont_look"
    kind = tag.resolved("ease")
    weights = _segment_weights(kind, n)
    entry_pos, entry_quat = state.pos, state.quat
    for i in range(1, n + 1):
        w = weights[i]
        obj = _object_center(track, b0 + i, dsl.TAIL_TRACK)
        off = _elevate(offset0, ver * w, WORLD_UP)
        off = vec_scale(off, 1.0 + (d_amt if d_name == "out" else -d_amt) * w)
        disp = vec_sub(obj, obj0)
        disp = (disp[0] * scale[0], disp[1] * scale[1], disp[2] * scale[2])
        target = vec_add(vec_add(obj0, off), disp)
        if follow_axis != "full":
            frozen = [entry_pos[0], entry_pos[1], entry_pos[2]]
            idx = "xyz".index(follow_axis)
            frozen[idx] = target[idx]
            target = (frozen[0], frozen[1], frozen[2])
        if style == "hard":
            state.pos = target
        else:
            rate = FOLLOW_RATE[style]
            state.pos = vec_add(state.pos, vec_scale(vec_sub(target, state.pos), rate))
        if dont_look:
            q = entry_quat
        else:
            q = _look_with_framing(state, obj, tag, w)
        poses.append(Pose(state.pos, q))
        state.quat = q
        state.up = quat_rotate(q, WORLD_UP)


def _aim_angles(from_pos: Vec3, to_point: Vec3,
                fallback: tuple[float, float]) -> tuple[float, float]:
    d = vec_sub(to_point, from_pos)
    dist = vec_norm(d)
    if dist <= 1e-9:
        return fallback
    dn = vec_scale(d, 1.0 / dist)
    pitch = math.degrees(math.asin(max(-1.0, min(1.0, dn[1]))))
    horiz = math.hypot(dn[0], dn[2])
    if horiz < 1e-9:
        return fallback[0], pitch
    yaw = math.degrees(math.atan2(-dn[0], -dn[2]))
    return yaw, pitch


def _rotation_segment(state: _CameraState, tag: dsl.MotionTag, b0: int, n: int,
                      track: BoxTrack | None, poses: list[Pose]) -> None:
    obj0 = _object_center(track, b0, dsl.ROTATION_TRACK)
    entry_pos = state.pos
    entry_yaw, entry_pitch, _, _ = euler_of_quat(state.quat)
    to_obj = vec_sub(obj0, entry_pos)
    d0 = vec_norm(to_obj)
    approach = vec_scale(to_obj, 1.0 / d0) if d0 > 1e-9 else (0.0, 0.0, -1.0)
    move1 = tag.resolved("world_move_1")
    move2 = tag.resolved("world_move_2")
    world_mode = move1 != "none" or move2 != "none"
    moves: list[tuple[Vec3, float]] = []
    for token in (move1, move2):
        if token == "none":
            moves.append((ORIGIN, 0.0))
        else:
            name, amt = _split_amount(token)
            moves.append((_WORLD_MOVE_DIRS[name], amt))
    push = tag.resolved("push")
    p_name, p_amt = ("no", 0.0) if push == "no" else _split_amount(push)
    local_off = tag.resolved("local_offset")
    rot_axis = tag.resolved("rot_axis")
    kind = tag.resolved("ease")
    weights = _segment_weights(kind, n)
    for i in range(1, n + 1):
        w = weights[i]
        if world_mode:
            if move2 == "none":
                prog1, prog2 = w, 0.0
            else:
                prog1 = min(2.0 * w, 1.0)
                prog2 = max(0.0, 2.0 * w - 1.0)
            state.pos = vec_add(entry_pos,
                                vec_add(vec_scale(moves[0][0], moves[0][1] * prog1),
                                        vec_scale(moves[1][0], moves[1][1] * prog2)))
        elif p_name != "no":
            sign = 1.0 if p_name == "in" else -1.0
            state.pos = vec_add(entry_pos, vec_scale(approach, sign * p_amt * d0 * w))
        else:
            state.pos = entry_pos
        obj = _object_center(track, b0 + i, dsl.ROTATION_TRACK)
        shift = None
        if not world_mode and local_off != "no":
            ax, off_amt = _split_amount(local_off)
            base = look_at(state.pos, obj, WORLD_UP, 0.0, fallback_up=state.up) \
                if vec_norm(vec_sub(obj, state.pos)) > 1e-9 else state.quat
            local_dir = quat_rotate(base, _AXIS_VECTORS[ax])
            shift = vec_scale(local_dir, off_amt)
        look_point = vec_add(obj, shift) if shift is not None else obj
        framing = tag.resolved("object")
        if framing != "none" and vec_norm(vec_sub(look_point, state.pos)) > 1e-9:
            base = look_at(state.pos, look_point, WORLD_UP, 0.0, fallback_up=state.up)
            right = quat_rotate(base, (1.0, 0.0, 0.0))
            sign = 1.0 if framing == "left" else -1.0
            look_point = vec_add(look_point, vec_scale(right, sign * FRAMING_SHIFT))
        aim_yaw, aim_pitch = _aim_angles(state.pos, look_point, (entry_yaw, entry_pitch))
        if rot_axis == "pan":
            yaw, pitch = aim_yaw, entry_pitch
        elif rot_axis == "tilt":
            yaw, pitch = entry_yaw, aim_pitch
        else:
            yaw, pitch = aim_yaw, aim_pitch
        q = turret_quat(yaw, pitch)
        roll = _dutch_roll(tag, w)
        if roll:
            q = quat_multiply(q, quat_from_axis_angle((0.0, 0.0, 1.0), roll))
        q = quat_normalize(q)
        poses.append(Pose(state.pos, q))
        state.quat = q
        state.up = quat_rotate(q, WORLD_UP)


def compile_camera(program: dsl.MotionProgram,
                   object_track: BoxTrack | None = None,
                   seed: int = 0) -> Trajectory:
    """Compile a camera program, conditioned on an already-compiled object.

    Frame 0 is the identity pose at the origin; segments chain from the
    previous segment's final pose.  Jitter offsets are added afterwards in
    camera-local axes with segment endpoints pinned to zero.
    """
    if program.role != dsl.ROLE_CAMERA:
        raise DslError(f"expected a camera program, got role {program.role!r}")
    bounds = segmentize(len(program.tags))
    state = _CameraState()
    poses: list[Pose] = [Pose(ORIGIN, IDENTITY_QUAT)]
    for tag, b0, b1 in zip(program.tags, bounds, bounds[1:]):
        n = b1 - b0
        if tag.primitive == dsl.FREE_FORM:
            _freeform_segment(state, tag, n, poses)
        elif tag.primitive == dsl.ORBIT_TRACK:
            _orbit_segment(state, tag, b0, n, object_track, poses)
        elif tag.primitive == dsl.TAIL_TRACK:
            _tail_segment(state, tag, b0, n, object_track, poses)
        else:
            _rotation_segment(state, tag, b0, n, object_track, poses)
    for k, (tag, b0, b1) in enumerate(zip(program.tags, bounds, bounds[1:])):
        kind = tag.resolved("jitter")
        if kind == "none":
            continue
        offsets = jitter_offsets(kind, mix_seed(seed, k), b1 - b0 + 1)
        for i, off in enumerate(offsets):
            f = b0 + i
            pose = poses[f]
            poses[f] = Pose(vec_add(pose.position, quat_rotate(pose.orientation, off)),
                            pose.orientation)
    return Trajectory(poses, bounds)


def compile_scene(program_obj: dsl.MotionProgram,
                  program_cam: dsl.MotionProgram,
                  config: CompileConfig | None = None,
                  seed: int = 0) -> SceneMotion:
    """Object first, then camera conditioned on it; pure in (programs, config, seed)."""
    cfg = config or CompileConfig()
    track = compile_object(program_obj, cfg.start_center, cfg.extents, seed)
    camera = compile_camera(program_cam, track, seed)
    return SceneMotion(track, camera, seed)
