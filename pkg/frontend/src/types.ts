/** Shared wire types for the /v1 API. */

export type Quat = [number, number, number, number]; // w, x, y, z
export type Vec3 = [number, number, number];

export interface ProgramJson {
  role: "object" | "camera";
  tags: { primitive: string; modifiers: Record<string, string> }[];
}

export interface TrajectoryJson {
  frames: { p: Vec3; q: Quat }[];
  segment_bounds: number[];
}

export interface BoxTrackJson {
  e: Vec3;
  frames: { c: Vec3; yp: [number, number] }[];
  segment_bounds: number[];
}

export interface SceneJson {
  object: BoxTrackJson;
  camera: TrajectoryJson;
  seed: number;
}

export interface Intrinsics {
  vertical_fov: number;
  width: number;
  height: number;
  near_clip: number;
}

export const DEFAULT_INTRINSICS: Intrinsics = {
  vertical_fov: 60,
  width: 640,
  height: 360,
  near_clip: 0.05,
};

export interface Polyline {
  label: "cube" | "bbox";
  color: [number, number, number];
  points: [number, number][];
}

export interface RenderResponse {
  width: number;
  height: number;
  frames: { width: number; height: number; polylines: Polyline[] }[];
}

export interface PlanResponse {
  program_obj: ProgramJson;
  program_cam: ProgramJson;
  dsl_obj: string;
  dsl_cam: string;
  decomposition: { object: string; camera: string };
}

export interface DiffEntry {
  tag: number;
  key: string;
  old: string | null;
  new: string | null;
}

export interface RefineResponse {
  program_obj: ProgramJson;
  program_cam: ProgramJson;
  dsl_obj: string;
  dsl_cam: string;
  diff: DiffEntry[];
  noop: boolean;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: Record<string, unknown>;
}

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly detail: Record<string, unknown>;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.detail = body.detail ?? {};
  }
}

export interface ModifierSchema {
  key: string;
  values: string[];
  default: string;
  description: string;
}

export interface SchemaDoc {
  version: string;
  tag_delimiter: string;
  max_tags: number;
  roles: {
    object: { primitives: string[]; keys: string[] };
    camera: { primitives: string[]; keys: string };
  };
  primitives: { name: string; modifiers: ModifierSchema[] }[];
}
