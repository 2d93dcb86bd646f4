/**
 * Pinhole projection mirroring the service's renderer, so scrubbing needs no
 * round trips and overlay mode can be checked pixel-for-pixel against
 * /v1/render output.
 *
 * Conventions match the server: right-handed world, +y up, camera looks along
 * local -z, +x camera-right, +y image down after projection.
 */

import { Intrinsics, Quat, Vec3 } from "./types.js";

const GUARD_BAND = 4.0;

export function quatConjugate(q: Quat): Quat {
  return [q[0], -q[1], -q[2], -q[3]];
}

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const tx = 2 * (y * v[2] - z * v[1]);
  const ty = 2 * (z * v[0] - x * v[2]);
  const tz = 2 * (x * v[1] - y * v[0]);
  return [
    v[0] + w * tx + (y * tz - z * ty),
    v[1] + w * ty + (z * tx - x * tz),
    v[2] + w * tz + (x * ty - y * tx),
  ];
}

export function turretQuat(yawDeg: number, pitchDeg: number): Quat {
  const hy = (yawDeg * Math.PI) / 360;
  const hp = (pitchDeg * Math.PI) / 360;
  const yaw: Quat = [Math.cos(hy), 0, Math.sin(hy), 0];
  const pitch: Quat = [Math.cos(hp), Math.sin(hp), 0, 0];
  return quatMultiply(yaw, pitch);
}

export function focalPixels(k: Intrinsics): number {
  return k.height / 2 / Math.tan((k.vertical_fov * Math.PI) / 360);
}

export interface CameraPose {
  p: Vec3;
  q: Quat;
}

export function cameraSpace(point: Vec3, cam: CameraPose): Vec3 {
  const rel: Vec3 = [point[0] - cam.p[0], point[1] - cam.p[1], point[2] - cam.p[2]];
  return quatRotate(quatConjugate(cam.q), rel);
}

/** Project a world point; null when at or behind the near plane. */
export function projectPoint(
  point: Vec3,
  cam: CameraPose,
  k: Intrinsics,
): [number, number] | null {
  const pc = cameraSpace(point, cam);
  if (pc[2] >= -k.near_clip) return null;
  const f = focalPixels(k);
  const depth = -pc[2];
  return [k.width / 2 + (f * pc[0]) / depth, k.height / 2 - (f * pc[1]) / depth];
}

type Seg2 = [[number, number], [number, number]];

/** Liang-Barsky clip to the guard box around the viewport. */
function clip2d(p0: [number, number], p1: [number, number], w: number, h: number): Seg2 | null {
  const xmin = -GUARD_BAND * w;
  const xmax = GUARD_BAND * w;
  const ymin = -GUARD_BAND * h;
  const ymax = GUARD_BAND * h;
  const dx = p1[0] - p0[0];
  const dy = p1[1] - p0[1];
  let t0 = 0;
  let t1 = 1;
  const edges: [number, number][] = [
    [-dx, p0[0] - xmin],
    [dx, xmax - p0[0]],
    [-dy, p0[1] - ymin],
    [dy, ymax - p0[1]],
  ];
  for (const [p, q] of edges) {
    if (p === 0) {
      if (q < 0) return null;
      continue;
    }
    const r = q / p;
    if (p < 0) {
      if (r > t1) return null;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return null;
      if (r < t1) t1 = r;
    }
  }
  return [
    [p0[0] + t0 * dx, p0[1] + t0 * dy],
    [p0[0] + t1 * dx, p0[1] + t1 * dy],
  ];
}

/** Project a world edge with near-plane clipping; identical to the server. */
export function projectEdge(a: Vec3, b: Vec3, cam: CameraPose, k: Intrinsics): Seg2 | null {
  let pa = cameraSpace(a, cam);
  let pb = cameraSpace(b, cam);
  const lim = -k.near_clip;
  if (pa[2] >= lim && pb[2] >= lim) return null;
  if (pa[2] >= lim || pb[2] >= lim) {
    const t = (lim - pa[2]) / (pb[2] - pa[2]);
    const cut: Vec3 = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), lim];
    if (pa[2] >= lim) pa = cut;
    else pb = cut;
  }
  const f = focalPixels(k);
  const toPixel = (p: Vec3): [number, number] => {
    const depth = Math.max(-p[2], k.near_clip);
    return [k.width / 2 + (f * p[0]) / depth, k.height / 2 - (f * p[1]) / depth];
  };
  return clip2d(toPixel(pa), toPixel(pb), k.width, k.height);
}

/** Corner order matches the server: z-major, then y, then x. */
export function boxCorners(center: Vec3, extents: Vec3, yp: [number, number]): Vec3[] {
  const q = turretQuat(yp[0], yp[1]);
  const corners: Vec3[] = [];
  for (const sz of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sx of [-1, 1]) {
        const local: Vec3 = [sx * extents[0], sy * extents[1], sz * extents[2]];
        const w = quatRotate(q, local);
        corners.push([center[0] + w[0], center[1] + w[1], center[2] + w[2]]);
      }
    }
  }
  return corners;
}

export function cubeCorners(half: number): Vec3[] {
  const corners: Vec3[] = [];
  for (const sz of [-1, 1])
    for (const sy of [-1, 1])
      for (const sx of [-1, 1]) corners.push([sx * half, sy * half, sz * half]);
  return corners;
}

export const BOX_EDGES: [number, number][] = [
  [0, 1], [1, 3], [3, 2], [2, 0],
  [4, 5], [5, 7], [7, 6], [6, 4],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

export const GLOBAL_CUBE_HALF_SIZE = 10;

/** Frustum edges (apex plus image-plane rectangle at the given depth). */
export function frustumEdges(pose: CameraPose, k: Intrinsics, depth: number): [Vec3, Vec3][] {
  const f = focalPixels(k);
  const hy = (k.height / 2 / f) * depth;
  const hx = (k.width / 2 / f) * depth;
  const local: Vec3[] = [
    [-hx, -hy, -depth],
    [hx, -hy, -depth],
    [hx, hy, -depth],
    [-hx, hy, -depth],
  ];
  const world = local.map((v) => {
    const r = quatRotate(pose.q, v);
    return [r[0] + pose.p[0], r[1] + pose.p[1], r[2] + pose.p[2]] as Vec3;
  });
  const apex = pose.p;
  const edges: [Vec3, Vec3][] = [];
  for (let i = 0; i < 4; i++) {
    edges.push([apex, world[i]]);
    edges.push([world[i], world[(i + 1) % 4]]);
  }
  return edges;
}

/** External orbit-view pose looking at a target from spherical coordinates. */
export function orbitViewPose(
  target: Vec3,
  azimuthDeg: number,
  elevationDeg: number,
  distance: number,
): CameraPose {
  const az = (azimuthDeg * Math.PI) / 180;
  const el = (elevationDeg * Math.PI) / 180;
  const eye: Vec3 = [
    target[0] + distance * Math.cos(el) * Math.sin(az),
    target[1] + distance * Math.sin(el),
    target[2] + distance * Math.cos(el) * Math.cos(az),
  ];
  // look-at with world up, no roll
  const f: Vec3 = normalize([target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]]);
  let side = cross(f, [0, 1, 0]);
  if (norm(side) < 1e-9) side = cross(f, [0, 0, -1]);
  const right = normalize(side);
  const back: Vec3 = [-f[0], -f[1], -f[2]];
  const up = cross(back, right);
  const q = quatFromBasis(right, up, back);
  return { p: eye, q };
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  return [a[0] / n, a[1] / n, a[2] / n];
}

/** Quaternion from orthonormal camera basis vectors (matrix columns). */
function quatFromBasis(right: Vec3, up: Vec3, back: Vec3): Quat {
  const m00 = right[0], m01 = up[0], m02 = back[0];
  const m10 = right[1], m11 = up[1], m12 = back[1];
  const m20 = right[2], m21 = up[2], m22 = back[2];
  const tr = m00 + m11 + m22;
  let q: Quat;
  if (tr > 0) {
    const s = Math.sqrt(tr + 1) * 2;
    q = [0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s];
  } else if (m00 >= m11 && m00 >= m22) {
    const s = Math.sqrt(1 + m00 - m11 - m22) * 2;
    q = [(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s];
  } else if (m11 >= m22) {
    const s = Math.sqrt(1 + m11 - m00 - m22) * 2;
    q = [(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s];
  } else {
    const s = Math.sqrt(1 + m22 - m00 - m11) * 2;
    q = [(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s];
  }
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}
