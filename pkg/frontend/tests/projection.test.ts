/**
 * Overlay parity: the client-side pinhole projection must reproduce the
 * service's /v1/render polylines within one pixel on every frame of every
 * fixture scene (fixtures are captured from the renderer itself).
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  BOX_EDGES,
  GLOBAL_CUBE_HALF_SIZE,
  boxCorners,
  cubeCorners,
  projectEdge,
  projectPoint,
  frustumEdges,
  orbitViewPose,
  quatRotate,
} from "../src/projection.js";
import { DEFAULT_INTRINSICS, Polyline, SceneJson, Vec3 } from "../src/types.js";

interface FixtureBundle {
  [name: string]: {
    scene: SceneJson;
    render: {
      width: number;
      height: number;
      frames: { polylines: Polyline[] }[];
    };
  };
}

const fixtures: FixtureBundle = JSON.parse(
  readFileSync(join(__dirname, "fixtures", "parity.json"), "utf-8"),
);

function clientPolylines(scene: SceneJson, frame: number): Polyline[] {
  const cam = scene.camera.frames[frame];
  const pose = { p: cam.p, q: cam.q };
  const out: Polyline[] = [];
  const boxAt = scene.object.frames[frame];
  const sets: [Polyline["label"], Vec3[], [number, number, number]][] = [
    ["cube", cubeCorners(GLOBAL_CUBE_HALF_SIZE), [128, 128, 128]],
    ["bbox", boxCorners(boxAt.c, scene.object.e, boxAt.yp), [0, 255, 0]],
  ];
  for (const [label, corners, color] of sets) {
    for (const [i, j] of BOX_EDGES) {
      const seg = projectEdge(corners[i], corners[j], pose, DEFAULT_INTRINSICS);
      if (!seg) continue;
      out.push({ label, color, points: [seg[0], seg[1]] });
    }
  }
  return out;
}

describe("server polyline parity", () => {
  for (const [name, bundle] of Object.entries(fixtures)) {
    it(`matches /v1/render within 1 px for the ${name} scene`, () => {
      const frames = bundle.render.frames;
      expect(frames.length).toBe(21);
      for (let f = 0; f < frames.length; f++) {
        const mine = clientPolylines(bundle.scene, f);
        const server = frames[f].polylines;
        expect(mine.length).toBe(server.length);
        for (let i = 0; i < server.length; i++) {
          expect(mine[i].label).toBe(server[i].label);
          for (let p = 0; p < 2; p++) {
            expect(Math.abs(mine[i].points[p][0] - server[i].points[p][0])).toBeLessThanOrEqual(1);
            expect(Math.abs(mine[i].points[p][1] - server[i].points[p][1])).toBeLessThanOrEqual(1);
          }
        }
      }
    });
  }
});

describe("pinhole basics", () => {
  const identity = { p: [0, 0, 0] as Vec3, q: [1, 0, 0, 0] as [number, number, number, number] };

  it("projects the optical axis to image center", () => {
    expect(projectPoint([0, 0, -5], identity, DEFAULT_INTRINSICS)).toEqual([320, 180]);
  });

  it("returns null for points behind the camera", () => {
    expect(projectPoint([0, 0, 1], identity, DEFAULT_INTRINSICS)).toBeNull();
  });

  it("matches the service's off-axis golden (x = 500)", () => {
    const x = Math.tan((30 * Math.PI) / 180) * 5;
    const px = projectPoint([x, 0, -5], identity, DEFAULT_INTRINSICS)!;
    expect(px[0]).toBeCloseTo(500, 6);
    expect(px[1]).toBeCloseTo(180, 6);
  });

  it("drops edges fully behind the near plane", () => {
    expect(projectEdge([0, 0, 1], [1, 0, 2], identity, DEFAULT_INTRINSICS)).toBeNull();
  });

  it("clips edges crossing the near plane instead of dropping them", () => {
    const seg = projectEdge([0, 0, 1], [0, 1, -5], identity, DEFAULT_INTRINSICS);
    expect(seg).not.toBeNull();
  });
});

describe("viewport geometry helpers", () => {
  it("frustum has 8 edges anchored at the camera position", () => {
    const pose = { p: [1, 2, 3] as Vec3, q: [1, 0, 0, 0] as [number, number, number, number] };
    const edges = frustumEdges(pose, DEFAULT_INTRINSICS, 1);
    expect(edges.length).toBe(8);
    const apexEdges = edges.filter(([a]) => a === pose.p);
    expect(apexEdges.length).toBe(4);
  });

  it("orbit view pose looks at its target", () => {
    const target: Vec3 = [0, 0, -4];
    const pose = orbitViewPose(target, 40, 20, 12);
    const view = quatRotate(pose.q, [0, 0, -1]);
    const toTarget: Vec3 = [
      target[0] - pose.p[0],
      target[1] - pose.p[1],
      target[2] - pose.p[2],
    ];
    const n = Math.hypot(...toTarget);
    expect(view[0]).toBeCloseTo(toTarget[0] / n, 9);
    expect(view[1]).toBeCloseTo(toTarget[1] / n, 9);
    expect(view[2]).toBeCloseTo(toTarget[2] / n, 9);
  });
});
