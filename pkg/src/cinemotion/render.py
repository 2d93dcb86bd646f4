"""Wireframe control-frame rendering: pinhole projection plus PPM/PNG raster.

Each frame overlays the object's 3D bounding box (green) and a fixed global
cube (gray) as 2D polylines.  Rasterization is integer Bresenham on a black
background, so output bytes are identical across platforms.
"""

from __future__ import annotations

import json
import math
import pathlib
from dataclasses import dataclass

from .compiler import BoxTrack, SceneMotion, Trajectory
from .errors import DslError, FrameOutOfRange
from .kinematics import Pose, Vec3, quat_conjugate, quat_rotate, vec_sub, turret_quat

GLOBAL_CUBE_HALF_SIZE = 10.0
CUBE_COLOR = (128, 128, 128)
BBOX_COLOR = (0, 255, 0)

# Projected points are kept within this multiple of the viewport before
# rasterization clips exactly.
GUARD_BAND = 4.0

_CUBE_EDGES = (
    (0, 1), (1, 3), (3, 2), (2, 0),
    (4, 5), (5, 7), (7, 6), (6, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)


@dataclass(frozen=True)
class CameraIntrinsics:
    vertical_fov: float = 60.0
    width: int = 640
    height: int = 360
    near_clip: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.vertical_fov < 180.0:
            raise DslError(f"fov {self.vertical_fov} outside (0, 180)")
        if self.width < 16 or self.height < 16:
            raise DslError("image must be at least 16x16 pixels")
        if self.near_clip <= 0:
            raise DslError("near_clip must be positive")

    @property
    def focal_pixels(self) -> float:
        return (self.height / 2.0) / math.tan(math.radians(self.vertical_fov) / 2.0)

    def to_json_dict(self) -> dict:
        return {"vertical_fov": self.vertical_fov, "width": self.width,
                "height": self.height, "near_clip": self.near_clip}

    @staticmethod
    def from_json_dict(data: dict) -> "CameraIntrinsics":
        return CameraIntrinsics(
            float(data.get("vertical_fov", 60.0)),
            int(data.get("width", 640)),
            int(data.get("height", 360)),
            float(data.get("near_clip", 0.05)),
        )


@dataclass
class ControlFrame:
    width: int
    height: int
    polylines: list[dict]  # {"label", "color", "points": [[x, y], ...]}

    def to_json_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "polylines": self.polylines}


BEHIND = None  # sentinel returned by project_point


def camera_space(point: Vec3, cam: Pose) -> Vec3:
    return quat_rotate(quat_conjugate(cam.orientation), vec_sub(point, cam.position))


def project_point(point: Vec3, cam: Pose, k: CameraIntrinsics):
    """Pinhole projection to pixels (+y image down); None when behind."""
    pc = camera_space(point, cam)
    if pc[2] >= -k.near_clip:
        return BEHIND
    f = k.focal_pixels
    depth = -pc[2]
    return (k.width / 2.0 + f * pc[0] / depth,
            k.height / 2.0 - f * pc[1] / depth)


def _project_edge(a: Vec3, b: Vec3, cam: Pose, k: CameraIntrinsics):
    """Project a world-space edge, clipping it at the near plane."""
    pa = camera_space(a, cam)
    pb = camera_space(b, cam)
    za, zb = pa[2], pb[2]
    lim = -k.near_clip
    if za >= lim and zb >= lim:
        return None
    if za >= lim or zb >= lim:
        t = (lim - za) / (zb - za)
        cut = (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), lim)
        if za >= lim:
            pa = cut
        else:
            pb = cut
    f = k.focal_pixels

    def to_pixel(p):
        depth = max(-p[2], k.near_clip)
        return (k.width / 2.0 + f * p[0] / depth,
                k.height / 2.0 - f * p[1] / depth)

    seg = _clip_2d(to_pixel(pa), to_pixel(pb), k.width, k.height)
    return seg


def _clip_2d(p0, p1, width, height):
    """Liang-Barsky clip to the guard box around the viewport."""
    xmin, xmax = -GUARD_BAND * width, GUARD_BAND * width
    ymin, ymax = -GUARD_BAND * height, GUARD_BAND * height
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - xmin), (dx, xmax - x0), (-dy, y0 - ymin), (dy, ymax - y0)):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    return ((x0 + t0 * dx, y0 + t0 * dy), (x0 + t1 * dx, y0 + t1 * dy))


def box_corners(track: BoxTrack, frame: int) -> list[Vec3]:
    center = track.centers[frame]
    ex, ey, ez = track.extents
    q = turret_quat(*track.yaw_pitch[frame])
    corners = []
    for sz in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sx in (-1.0, 1.0):
                local = (sx * ex, sy * ey, sz * ez)
                world = quat_rotate(q, local)
                corners.append((center[0] + world[0], center[1] + world[1],
                                center[2] + world[2]))
    return corners


def cube_corners(half_size: float = GLOBAL_CUBE_HALF_SIZE) -> list[Vec3]:
    corners = []
    for sz in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sx in (-1.0, 1.0):
                corners.append((sx * half_size, sy * half_size, sz * half_size))
    return corners


def render_frame(scene: SceneMotion, frame_index: int,
                 k: CameraIntrinsics | None = None,
                 cube_half_size: float = GLOBAL_CUBE_HALF_SIZE) -> ControlFrame:
    """Project the global cube and the object's box into one camera view."""
    k = k or CameraIntrinsics()
    if not 0 <= frame_index < len(scene.camera.poses):
        raise FrameOutOfRange(f"frame {frame_index} outside 0..{len(scene.camera.poses) - 1}",
                              frame=frame_index)
    cam = scene.camera.poses[frame_index]
    polylines = []
    for label, corners, color in (
            ("cube", cube_corners(cube_half_size), CUBE_COLOR),
            ("bbox", box_corners(scene.object, frame_index), BBOX_COLOR)):
        for i, j in _CUBE_EDGES:
            seg = _project_edge(corners[i], corners[j], cam, k)
            if seg is None:
                continue
            polylines.append({
                "label": label,
                "color": list(color),
                "points": [[seg[0][0], seg[0][1]], [seg[1][0], seg[1][1]]],
            })
    return ControlFrame(k.width, k.height, polylines)


def render_scene(scene: SceneMotion, k: CameraIntrinsics | None = None) -> list[ControlFrame]:
    k = k or CameraIntrinsics()
    return [render_frame(scene, f, k) for f in range(len(scene.camera.poses))]


# --- rasterization -------------------------------------------------------------------

def _draw_line(buf: bytearray, width: int, height: int,
               p0, p1, color: tuple[int, int, int]) -> None:
    """Integer Bresenham; pixels outside the viewport are skipped."""
    x0 = int(math.floor(p0[0] + 0.5))
    y0 = int(math.floor(p0[1] + 0.5))
    x1 = int(math.floor(p1[0] + 0.5))
    y1 = int(math.floor(p1[1] + 0.5))
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    r, g, b = color
    while True:
        if 0 <= x0 < width and 0 <= y0 < height:
            idx = 3 * (y0 * width + x0)
            buf[idx] = r
            buf[idx + 1] = g
            buf[idx + 2] = b
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize_frame(frame: ControlFrame) -> bytes:
    """RGB byte buffer for one control frame (row-major, 3 bytes per pixel)."""
    buf = bytearray(3 * frame.width * frame.height)
    for layer in ("cube", "bbox"):  # box drawn over the cube
        for poly in frame.polylines:
            if poly["label"] != layer:
                continue
            color = tuple(poly["color"])
            pts = poly["points"]
            for a, b in zip(pts, pts[1:]):
                _draw_line(buf, frame.width, frame.height, a, b, color)
    return bytes(buf)


def write_ppm(path, width: int, height: int, pixels: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels)


def read_ppm(path) -> tuple[int, int, bytes]:
    data = pathlib.Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError(f"{path} is not a binary PPM")
    width, height = (int(v) for v in parts[1].split())
    return width, height, parts[3]


def write_png(path, width: int, height: int, pixels: bytes) -> None:
    from PIL import Image

    Image.frombytes("RGB", (width, height), pixels).save(path, format="PNG")


def rasterize(frames: list[ControlFrame], out_dir, image_format: str = "ppm") -> list[pathlib.Path]:
    """One image per frame, zero-padded names, deterministic bytes."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        pixels = rasterize_frame(frame)
        path = out_dir / f"frame_{i:03d}.{image_format}"
        if image_format == "ppm":
            write_ppm(path, frame.width, frame.height, pixels)
        elif image_format == "png":
            write_png(path, frame.width, frame.height, pixels)
        else:
            raise DslError(f"unsupported image format {image_format!r}")
        paths.append(path)
    return paths


def export_scene(scene: SceneMotion, out_dir, k: CameraIntrinsics | None = None,
                 image_format: str = "ppm") -> dict:
    """Frame sequence plus camera.json / boxes.json for downstream conditioning."""
    k = k or CameraIntrinsics()
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames = render_scene(scene, k)
    paths = rasterize(frames, out_dir, image_format)
    camera_doc = {
        "intrinsics": k.to_json_dict(),
        "frames": [p.to_json_dict() for p in scene.camera.poses],
        "segment_bounds": list(scene.camera.segment_bounds),
    }
    (out_dir / "camera.json").write_text(json.dumps(camera_doc), encoding="utf-8")
    (out_dir / "boxes.json").write_text(
        json.dumps(scene.object.to_json_dict()), encoding="utf-8")
    return {
        "frames": [str(p) for p in paths],
        "camera": str(out_dir / "camera.json"),
        "boxes": str(out_dir / "boxes.json"),
    }


def load_camera_json(path) -> tuple[CameraIntrinsics, Trajectory]:
    data = json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
    k = CameraIntrinsics.from_json_dict(data["intrinsics"])
    traj = Trajectory.from_json_dict(data)
    return k, traj
