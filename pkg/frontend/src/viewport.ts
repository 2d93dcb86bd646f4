/**
 * Canvas viewport: object box path, per-frame camera frusta, the global cube,
 * and the shot view with optional server-polyline overlay.
 */

import {
  BOX_EDGES,
  CameraPose,
  GLOBAL_CUBE_HALF_SIZE,
  boxCorners,
  cubeCorners,
  frustumEdges,
  orbitViewPose,
  projectEdge,
} from "./projection.js";
import { SessionState } from "./state.js";
import { DEFAULT_INTRINSICS, Intrinsics, Polyline, SceneJson, Vec3 } from "./types.js";

const COLORS = {
  background: "#10131a",
  cube: "#5a6170",
  bbox: "#45d06a",
  objectPath: "#e0b44c",
  cameraPath: "#6aa3e8",
  frustum: "#3c5a80",
  frustumActive: "#8fc1ff",
  overlayServer: "#ff5f8f",
};

export class Viewport {
  private readonly ctx: CanvasRenderingContext2D;
  serverFrames: Polyline[][] | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly state: SessionState,
    private readonly intrinsics: Intrinsics = DEFAULT_INTRINSICS,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas unavailable");
    this.ctx = ctx;
  }

  private viewIntrinsics(): Intrinsics {
    return {
      ...this.intrinsics,
      width: this.canvas.width,
      height: this.canvas.height,
    };
  }

  private shotPose(scene: SceneJson): CameraPose {
    const frame = scene.camera.frames[this.state.playhead];
    return { p: frame.p, q: frame.q };
  }

  private orbitPose(): CameraPose {
    const v = this.state.view;
    return orbitViewPose([0, 0, -4], v.azimuthDeg, v.elevationDeg, v.distance);
  }

  draw(): void {
    const { ctx, canvas } = this;
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const scene = this.state.scene;
    if (!scene) {
      ctx.fillStyle = "#8a93a6";
      ctx.font = "14px system-ui, sans-serif";
      ctx.fillText("plan a shot to see its trajectory", 24, 32);
      return;
    }
    const pose = this.state.view.mode === "camera" ? this.shotPose(scene) : this.orbitPose();
    const k = this.viewIntrinsics();
    this.drawWireBox(cubeCorners(GLOBAL_CUBE_HALF_SIZE), pose, k, COLORS.cube, 1);
    this.drawPath(scene.object.frames.map((f) => f.c), pose, k, COLORS.objectPath);
    this.drawPath(scene.camera.frames.map((f) => f.p), pose, k, COLORS.cameraPath);
    const at = scene.object.frames[this.state.playhead];
    this.drawWireBox(boxCorners(at.c, scene.object.e, at.yp), pose, k, COLORS.bbox, 1.5);
    if (this.state.view.mode === "orbit") {
      scene.camera.frames.forEach((frame, i) => {
        const active = i === this.state.playhead;
        if (!active && i % 5 !== 0) return;
        const edges = frustumEdges({ p: frame.p, q: frame.q }, this.intrinsics, active ? 1.0 : 0.6);
        for (const [a, b] of edges) {
          this.strokeEdge(a, b, pose, k, active ? COLORS.frustumActive : COLORS.frustum,
            active ? 1.5 : 0.75);
        }
      });
    }
    if (this.state.view.mode === "camera" && this.state.view.overlay && this.serverFrames) {
      this.drawServerOverlay(this.serverFrames[this.state.playhead] ?? []);
    }
  }

  private strokeEdge(a: Vec3, b: Vec3, pose: CameraPose, k: Intrinsics,
                     color: string, width: number): void {
    const seg = projectEdge(a, b, pose, k);
    if (!seg) return;
    const { ctx } = this;
    ctx.strokeStyle = color;
    ctx.lineWidth = width;
    ctx.beginPath();
    ctx.moveTo(seg[0][0], seg[0][1]);
    ctx.lineTo(seg[1][0], seg[1][1]);
    ctx.stroke();
  }

  private drawWireBox(corners: Vec3[], pose: CameraPose, k: Intrinsics,
                      color: string, width: number): void {
    for (const [i, j] of BOX_EDGES) this.strokeEdge(corners[i], corners[j], pose, k, color, width);
  }

  private drawPath(points: Vec3[], pose: CameraPose, k: Intrinsics, color: string): void {
    for (let i = 0; i + 1 < points.length; i++) {
      this.strokeEdge(points[i], points[i + 1], pose, k, color, 1.25);
    }
  }

  /** Server polylines are in shot-view pixels; rescale to the canvas. */
  private drawServerOverlay(polylines: Polyline[]): void {
    const { ctx, canvas } = this;
    const sx = canvas.width / this.intrinsics.width;
    const sy = canvas.height / this.intrinsics.height;
    ctx.strokeStyle = COLORS.overlayServer;
    ctx.lineWidth = 1;
    ctx.setLineDash([4, 3]);
    for (const poly of polylines) {
      ctx.beginPath();
      poly.points.forEach(([x, y], i) => {
        if (i === 0) ctx.moveTo(x * sx, y * sy);
        else ctx.lineTo(x * sx, y * sy);
      });
      ctx.stroke();
    }
    ctx.setLineDash([]);
  }
}
