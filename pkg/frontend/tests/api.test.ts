/** API client behavior against a scripted fetch. */

import { describe, expect, it } from "vitest";

import { ApiClient, FetchLike } from "../src/api.js";
import { ApiError, ProgramJson } from "../src/types.js";

function scripted(
  handler: (url: string, init?: RequestInit) => { status: number; body: unknown },
): FetchLike {
  return async (url, init) => {
    const { status, body } = handler(url, init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
}

const cam: ProgramJson = {
  role: "camera",
  tags: [{ primitive: "orbit_track", modifiers: { dir: "cw" } }],
};
const obj: ProgramJson = { role: "object", tags: [{ primitive: "free_form", modifiers: {} }] };

describe("ApiClient", () => {
  it("posts plan requests and returns the parsed body", async () => {
    const client = new ApiClient("", scripted((url, init) => {
      expect(url).toBe("/v1/plan");
      expect(JSON.parse(String(init!.body))).toEqual({ text: "orbit the car" });
      return {
        status: 200,
        body: {
          program_obj: obj, program_cam: cam,
          dsl_obj: "free_form", dsl_cam: "orbit_track dir_cw",
          decomposition: { object: "", camera: "orbit the car" },
        },
      };
    }));
    const plan = await client.plan("orbit the car");
    expect(plan.dsl_cam).toBe("orbit_track dir_cw");
  });

  it("raises ApiError with the structured detail on 400", async () => {
    const client = new ApiClient("", scripted(() => ({
      status: 400,
      body: { code: "value_not_allowed", message: "bad deg", detail: { key: "deg", value: "999" } },
    })));
    try {
      await client.compile(obj, cam);
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      const apiErr = err as ApiError;
      expect(apiErr.status).toBe(400);
      expect(apiErr.code).toBe("value_not_allowed");
      expect(apiErr.detail.key).toBe("deg");
    }
  });

  it("maps transport failures to an offline error", async () => {
    const client = new ApiClient("", async () => {
      throw new TypeError("fetch failed");
    });
    await expect(client.health()).rejects.toMatchObject({ code: "offline", status: 0 });
  });

  it("surfaces refine noop responses untouched", async () => {
    const client = new ApiClient("", scripted(() => ({
      status: 200,
      body: {
        program_obj: obj, program_cam: cam,
        dsl_obj: "free_form", dsl_cam: "orbit_track dir_cw",
        diff: [], noop: true,
      },
    })));
    const result = await client.refine(obj, cam, "paint it blue");
    expect(result.noop).toBe(true);
    expect(result.diff).toEqual([]);
  });

  it("passes refine diffs through", async () => {
    const client = new ApiClient("", scripted((url) => {
      expect(url).toBe("/v1/refine");
      return {
        status: 200,
        body: {
          program_obj: obj,
          program_cam: { role: "camera", tags: [{ primitive: "orbit_track", modifiers: { dir: "ccw" } }] },
          dsl_obj: "free_form", dsl_cam: "orbit_track dir_ccw",
          diff: [{ tag: 0, key: "dir", old: "cw", new: "ccw" }], noop: false,
        },
      };
    }));
    const result = await client.refine(obj, cam, "make it counterclockwise");
    expect(result.diff).toEqual([{ tag: 0, key: "dir", old: "cw", new: "ccw" }]);
    expect(result.program_cam.tags[0].modifiers.dir).toBe("ccw");
  });
});
