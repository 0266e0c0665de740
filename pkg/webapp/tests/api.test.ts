import { describe, expect, it } from "vitest";

import { ApiError, createApiClient } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const mapFile = new File([new Uint8Array([137, 80, 78, 71])], "map.png", {
  type: "image/png",
});

describe("postStory", () => {
  it("sends multipart form data with the aspect list", async () => {
    let captured: { url: string; init?: RequestInit } | null = null;
    const client = createApiClient("http://svc", async (url, init) => {
      captured = { url, init };
      return jsonResponse(200, {
        map_type: "pictorial map",
        keywords: [],
        prompt: "p",
        narrative: "n",
        source: "fallback",
      });
    });
    const story = await client.postStory(mapFile, ["where", "why"]);
    expect(story.map_type).toBe("pictorial map");
    expect(captured!.url).toBe("http://svc/api/story");
    const form = captured!.init!.body as FormData;
    expect(form.get("aspects")).toBe("where,why");
    expect((form.get("image") as File).name).toBe("map.png");
  });

  it("surfaces the server's error message", async () => {
    const client = createApiClient("", async () =>
      jsonResponse(400, { error: "bad aspects: 'banana'" }),
    );
    await expect(client.postStory(mapFile, ["where"])).rejects.toThrow(
      "bad aspects: 'banana'",
    );
  });

  it("handles framework-style detail errors", async () => {
    const client = createApiClient("", async () =>
      jsonResponse(422, { detail: "field required" }),
    );
    await expect(client.postStory(mapFile, ["where"])).rejects.toThrow("field required");
  });

  it("wraps connection failures in ApiError", async () => {
    const client = createApiClient("", async () => {
      throw new TypeError("fetch failed");
    });
    const failure = await client.postStory(mapFile, ["where"]).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.message).toContain("cannot reach the story service");
    expect(failure.status).toBeNull();
  });
});

describe("getHealth / getTree", () => {
  it("parses health", async () => {
    const client = createApiClient("", async () =>
      jsonResponse(200, { status: "ok", models_loaded: true }),
    );
    expect(await client.getHealth()).toEqual({ status: "ok", models_loaded: true });
  });

  it("parses the tree spec", async () => {
    const spec = {
      root: "map_type",
      branches: { "pictorial map": ["location_pict", "topic"] },
    };
    const client = createApiClient("", async () => jsonResponse(200, spec));
    expect(await client.getTree()).toEqual(spec);
  });
});
