/** Thin client for the mapstory HTTP endpoints. */

import type { Aspect, StoryResponse } from "./state.js";

export interface TreeSpec {
  root: string;
  branches: Record<string, string[]>;
}

export interface Health {
  status: string;
  models_loaded: boolean;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (typeof body?.error === "string") return body.error;
    if (typeof body?.detail === "string") return body.detail;
  } catch {
    /* non-JSON body */
  }
  return `request failed with status ${response.status}`;
}

export function createApiClient(base = "", fetchFn: FetchLike = fetch) {
  async function request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetchFn(base + path, init);
    } catch (exc) {
      throw new ApiError(`cannot reach the story service (${String(exc)})`);
    }
    if (!response.ok) {
      throw new ApiError(await errorMessage(response), response.status);
    }
    return (await response.json()) as T;
  }

  return {
    getHealth(): Promise<Health> {
      return request<Health>("/api/health");
    },

    getTree(): Promise<TreeSpec> {
      return request<TreeSpec>("/api/tree");
    },

    postStory(image: File, aspects: Aspect[]): Promise<StoryResponse> {
      const form = new FormData();
      form.append("image", image, image.name);
      form.append("aspects", aspects.join(","));
      return request<StoryResponse>("/api/story", { method: "POST", body: form });
    },
  };
}

export type ApiClient = ReturnType<typeof createApiClient>;
