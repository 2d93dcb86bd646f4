"""Geometry kernel: quaternion poses, easing curves, jitter noise, look-at.

Conventions (every module inherits these):
  right-handed world, +y up, camera looks along its local -z, +x is
  camera-right.  Intrinsic rotation order is yaw (local +y), then pitch
  (local +x), then roll (local -z).  Quaternions are (w, x, y, z) tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLookAt, DomainError

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
ORIGIN: Vec3 = (0.0, 0.0, 0.0)

# Pitch this close to +/-90 deg collapses yaw and roll into one angle.
GIMBAL_EPS_DEG = 1e-3

_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class Pose:
    position: Vec3
    orientation: Quat

    def to_json_dict(self) -> dict:
        return {"p": list(self.position), "q": list(self.orientation)}

    @staticmethod
    def from_json_dict(data: dict) -> "Pose":
        p = data["p"]
        q = data["q"]
        return Pose((p[0], p[1], p[2]), (q[0], q[1], q[2], q[3]))


IDENTITY_POSE = Pose(ORIGIN, IDENTITY_QUAT)


# --- small vector helpers ----------------------------------------------------

def vec_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vec_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vec_scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vec_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vec_cross(a: Vec3, b: Vec3) -> Vec3:
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def vec_norm(a: Vec3) -> float:
    return math.sqrt(vec_dot(a, a))


def vec_normalize(a: Vec3) -> Vec3:
    n = vec_norm(a)
    if n < 1e-12:
        raise DomainError("cannot normalize a near-zero vector")
    return (a[0] / n, a[1] / n, a[2] / n)


# --- quaternions --------------------------------------------------------------

def quat_multiply(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw)


def quat_conjugate(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def quat_normalize(q: Quat) -> Quat:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Apply the rotation to a vector (q v q*)."""
    w, x, y, z = q
    # t = 2 * (q_vec x v)
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    return (v[0] + w * tx + (y * tz - z * ty),
            v[1] + w * ty + (z * tx - x * tz),
            v[2] + w * tz + (x * ty - y * tx))


def quat_from_axis_angle(axis: Vec3, angle_deg: float) -> Quat:
    half = math.radians(angle_deg) * 0.5
    s = math.sin(half)
    return (math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)


def quat_to_matrix(q: Quat) -> tuple[Vec3, Vec3, Vec3]:
    """Rows of the 3x3 rotation matrix."""
    w, x, y, z = q
    return (
        (1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)),
        (2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)),
        (2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)),
    )


def quat_from_matrix(m: tuple[Vec3, Vec3, Vec3]) -> Quat:
    """Shepperd's method; branches on the largest diagonal term."""
    m00, m01, m02 = m[0]
    m10, m11, m12 = m[1]
    m20, m21, m22 = m[2]
    tr = m00 + m11 + m22
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        return quat_normalize(((0.25 * s),
                               (m21 - m12) / s,
                               (m02 - m20) / s,
                               (m10 - m01) / s))
    if m00 >= m11 and m00 >= m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        return quat_normalize(((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s))
    if m11 >= m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        return quat_normalize(((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s))
    s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
    return quat_normalize(((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s))


def quat_axis_angle(q: Quat) -> tuple[Vec3, float]:
    """Rotation axis and angle in degrees; angle in [0, 180]."""
    w, x, y, z = q
    if w < 0:  # same rotation, short representation
        w, x, y, z = -w, -x, -y, -z
    n = math.sqrt(x * x + y * y + z * z)
    if n < 1e-15:
        return (0.0, 0.0, 1.0), 0.0
    angle = 2.0 * math.atan2(n, w)
    return (x / n, y / n, z / n), math.degrees(angle)


def quat_scale_rotation(q: Quat, s: float) -> Quat:
    """Fractional rotation along q's geodesic: same axis, angle scaled by s."""
    if s == 1.0:
        return q if q[0] >= 0 else (-q[0], -q[1], -q[2], -q[3])
    axis, angle = quat_axis_angle(q)
    if angle == 0.0:
        return IDENTITY_QUAT
    return quat_from_axis_angle(axis, angle * s)


def quat_angle_between(a: Quat, b: Quat) -> float:
    """Geodesic angle between two orientations, degrees in [0, 180]."""
    d = abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
    return math.degrees(2.0 * math.acos(min(1.0, d)))


# --- Euler composition and extraction -------------------------------------------

def yaw_quat(deg: float) -> Quat:
    return quat_from_axis_angle((0.0, 1.0, 0.0), deg)


def pitch_quat(deg: float) -> Quat:
    return quat_from_axis_angle((1.0, 0.0, 0.0), deg)


def roll_quat(deg: float) -> Quat:
    # Roll turns about local -z.
    return quat_from_axis_angle((0.0, 0.0, -1.0), deg)


def euler_quat(yaw_deg: float, pitch_deg: float, roll_deg: float) -> Quat:
    """Net rotation of one tag: yaw, then pitch, then roll, all local."""
    q = yaw_quat(yaw_deg)
    if pitch_deg:
        q = quat_multiply(q, pitch_quat(pitch_deg))
    if roll_deg:
        q = quat_multiply(q, roll_quat(roll_deg))
    return q


def compose_local_rotation(base: Quat, dyaw: float, dpitch: float, droll: float) -> Quat:
    """Right-multiply ``base`` by intrinsic yaw/pitch/roll increments."""
    return quat_normalize(quat_multiply(base, euler_quat(dyaw, dpitch, droll)))


def turret_quat(yaw_deg: float, pitch_deg: float) -> Quat:
    """Two-DoF orientation used by object boxes: world yaw, then pitch."""
    return quat_multiply(yaw_quat(yaw_deg), pitch_quat(pitch_deg))


def wrap_degrees(deg: float) -> float:
    """Wrap into [-180, 180)."""
    return deg - 360.0 * math.floor((deg + 180.0) / 360.0)


def euler_of_quat(q: Quat) -> tuple[float, float, float, bool]:
    """Canonical (yaw, pitch, roll) in degrees plus a gimbal flag.

    Inverts :func:`euler_quat` with pitch in [-90, 90]; when pitch is within
    GIMBAL_EPS_DEG of +/-90 the roll is folded into yaw and the flag is set.
    """
    m = quat_to_matrix(q)
    sp = max(-1.0, min(1.0, -m[1][2]))
    pitch = math.degrees(math.asin(sp))
    if abs(abs(pitch) - 90.0) <= GIMBAL_EPS_DEG:
        sign = 1.0 if pitch > 0 else -1.0
        yaw = math.degrees(math.atan2(sign * m[0][1], m[0][0]))
        return wrap_degrees(yaw), sign * 90.0, 0.0, True
    yaw = math.degrees(math.atan2(m[0][2], m[2][2]))
    roll = -math.degrees(math.atan2(m[1][0], m[1][1]))
    return wrap_degrees(yaw), pitch, wrap_degrees(roll), False


def canonical_euler(yaw_deg: float, pitch_deg: float, roll_deg: float) -> tuple[float, float, float]:
    """Map any Euler triple to the canonical representative of its rotation."""
    y, p, r, _ = euler_of_quat(euler_quat(yaw_deg, pitch_deg, roll_deg))
    return y, p, r


def relative_euler(q_from: Quat, q_to: Quat) -> tuple[float, float, float, bool]:
    """Net intrinsic yaw/pitch/roll turning ``q_from`` into ``q_to``."""
    return euler_of_quat(quat_multiply(quat_conjugate(q_from), q_to))


# --- easing ---------------------------------------------------------------------

EASING_KINDS = ("linear", "in", "out", "in_out", "out_in")


def ease(kind: str, u: float) -> float:
    """Easing weight at normalized time u in [0, 1]; exact at the endpoints."""
    if u < -1e-12 or u > 1.0 + 1e-12:
        raise DomainError(f"easing time {u} outside [0, 1]")
    u = min(1.0, max(0.0, u))
    if kind == "linear":
        return u
    if kind == "in":
        return u * u
    if kind == "out":
        return 1.0 - (1.0 - u) * (1.0 - u)
    if kind == "in_out":
        return u * u * (3.0 - 2.0 * u)
    if kind == "out_in":
        if u <= 0.5:
            v = 2.0 * u
            return 0.5 * (1.0 - (1.0 - v) * (1.0 - v))
        v = 2.0 * u - 1.0
        return 0.5 + 0.5 * v * v
    raise DomainError(f"unknown easing kind {kind!r}")


# --- jitter -----------------------------------------------------------------------

JITTER_SIGMA = {"none": 0.0, "low": 0.015, "high": 0.05}
_JITTER_CODE = {"none": 0, "low": 1, "high": 2}


def jitter_offsets(kind: str, seed: int, frame_count: int) -> list[Vec3]:
    """Deterministic handheld-noise offsets; endpoints are exactly zero.

    ``kind`` sets the delivered (post-smoothing) per-axis standard deviation;
    raw Gaussian samples are drawn at sqrt(3) sigma and box-averaged over three
    frames so interior frames land on the target amplitude.
    """
    if frame_count < 1:
        raise DomainError("frame_count must be >= 1")
    if kind not in JITTER_SIGMA:
        raise DomainError(f"unknown jitter kind {kind!r}")
    sigma = JITTER_SIGMA[kind]
    if sigma == 0.0 or frame_count <= 2:
        return [ORIGIN] * frame_count
    rng = np.random.default_rng([_JITTER_CODE[kind], seed & _U64])
    raw = rng.normal(0.0, sigma * math.sqrt(3.0), size=(frame_count, 3))
    smooth = np.empty_like(raw)
    for i in range(frame_count):
        lo = max(0, i - 1)
        hi = min(frame_count, i + 2)
        smooth[i] = raw[lo:hi].mean(axis=0)
    smooth[0] = 0.0
    smooth[-1] = 0.0
    return [tuple(row) for row in smooth.tolist()]


def mix_seed(seed: int, stream: int) -> int:
    """Stable 64-bit stream derivation for sub-generators."""
    x = (seed ^ (stream + 0x9E3779B97F4A7C15)) & _U64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _U64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _U64
    return x ^ (x >> 31)


# --- look-at ---------------------------------------------------------------------

WORLD_UP: Vec3 = (0.0, 1.0, 0.0)


def look_at(eye: Vec3, target: Vec3, up_hint: Vec3 = WORLD_UP,
            roll_deg: float = 0.0, fallback_up: Vec3 | None = None) -> Quat:
    """Orientation whose local -z points from eye to target.

    Image-up is the projection of ``up_hint``; positive ``roll_deg`` then tilts
    image-up toward local -x.  When the view direction is parallel to
    ``up_hint`` the ``fallback_up`` is used instead; with neither usable a
    DegenerateLookAt is raised.
    """
    d = vec_sub(target, eye)
    dist = vec_norm(d)
    if dist <= 1e-9:
        raise DegenerateLookAt("eye coincides with target", eye=list(eye), target=list(target))
    f = vec_scale(d, 1.0 / dist)
    side = vec_cross(f, up_hint)
    if vec_norm(side) < 1e-9:
        if fallback_up is None:
            raise DegenerateLookAt("view direction parallel to up hint",
                                   view=list(f), up=list(up_hint))
        side = vec_cross(f, fallback_up)
        if vec_norm(side) < 1e-9:
            # Last resort for straight-down views: treat -z as up.
            side = vec_cross(f, (0.0, 0.0, -1.0))
            if vec_norm(side) < 1e-9:
                raise DegenerateLookAt("no usable up vector for this view",
                                       view=list(f))
    right = vec_normalize(side)
    back = vec_scale(f, -1.0)
    up = vec_cross(back, right)
    # Matrix columns are the camera axes expressed in world coordinates.
    m = ((right[0], up[0], back[0]),
         (right[1], up[1], back[1]),
         (right[2], up[2], back[2]))
    q = quat_from_matrix(m)
    if roll_deg:
        q = quat_multiply(q, quat_from_axis_angle((0.0, 0.0, 1.0), roll_deg))
    return quat_normalize(q)
