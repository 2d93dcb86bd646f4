/** Typed client for the /v1 service API. */

import {
  ApiError,
  ApiErrorBody,
  PlanResponse,
  ProgramJson,
  RefineResponse,
  RenderResponse,
  SceneJson,
  SchemaDoc,
  Intrinsics,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, {
        code: "offline",
        message: `service unreachable: ${String(err)}`,
        detail: {},
      });
    }
    if (!response.ok) {
      let body: ApiErrorBody;
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        body = { code: "http_error", message: `HTTP ${response.status}`, detail: {} };
      }
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  schema(): Promise<SchemaDoc> {
    return this.request<SchemaDoc>("/v1/schema");
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("/v1/health");
  }

  plan(text: string): Promise<PlanResponse> {
    return this.post("/v1/plan", { text });
  }

  compile(
    programObj: ProgramJson,
    programCam: ProgramJson,
    seed = 0,
  ): Promise<SceneJson> {
    return this.post("/v1/compile", {
      program_obj: programObj,
      program_cam: programCam,
      seed,
    });
  }

  refine(
    programObj: ProgramJson,
    programCam: ProgramJson,
    instruction: string,
  ): Promise<RefineResponse> {
    return this.post("/v1/refine", {
      program_obj: programObj,
      program_cam: programCam,
      instruction,
    });
  }

  renderPolylines(scene: SceneJson, intrinsics?: Intrinsics): Promise<RenderResponse> {
    return this.post("/v1/render", { scene, intrinsics });
  }

  tag(scene: SceneJson): Promise<unknown> {
    return this.post("/v1/tag", { scene });
  }
}
