/** UI state and the pure transitions behind the storytelling page. */

export type Aspect = "where" | "what" | "when" | "why";

export const ASPECTS: Aspect[] = ["where", "what", "when", "why"];

export interface StoryKeyword {
  category: string;
  label: string;
  confidence: number;
}

export interface StoryResponse {
  map_type: string;
  keywords: StoryKeyword[];
  prompt: string;
  narrative: string;
  source: "llm" | "fallback";
}

export type RequestStatus =
  | { kind: "idle" }
  | { kind: "loading"; requestId: number }
  | { kind: "error"; message: string };

export interface UiState {
  file: File | null;
  aspects: Record<Aspect, boolean>;
  response: StoryResponse | null;
  status: RequestStatus;
  requestCounter: number;
}

export function initialState(): UiState {
  return {
    file: null,
    aspects: { where: true, what: true, when: true, why: true },
    response: null,
    status: { kind: "idle" },
    requestCounter: 0,
  };
}

export function selectedAspects(state: UiState): Aspect[] {
  return ASPECTS.filter((a) => state.aspects[a]);
}

/** Submit needs an image and at least one aspect. */
export function canSubmit(state: UiState): boolean {
  return state.file !== null && selectedAspects(state).length > 0;
}

export function setFile(state: UiState, file: File | null): UiState {
  return { ...state, file };
}

export function toggleAspect(state: UiState, aspect: Aspect, on: boolean): UiState {
  return { ...state, aspects: { ...state.aspects, [aspect]: on } };
}

/** Start a request; the returned id tags responses so stale ones are ignored. */
export function beginRequest(state: UiState): { state: UiState; requestId: number } {
  const requestId = state.requestCounter + 1;
  return {
    state: { ...state, requestCounter: requestId, status: { kind: "loading", requestId } },
    requestId,
  };
}

function isCurrent(state: UiState, requestId: number): boolean {
  return state.status.kind === "loading" && state.status.requestId === requestId;
}

export function applyResponse(
  state: UiState,
  requestId: number,
  response: StoryResponse,
): UiState {
  if (!isCurrent(state, requestId)) {
    return state; // a newer submit superseded this response
  }
  return { ...state, response, status: { kind: "idle" } };
}

/** Errors surface a message; toggles and the selected file are untouched. */
export function applyError(state: UiState, requestId: number, message: string): UiState {
  if (!isCurrent(state, requestId)) {
    return state;
  }
  return { ...state, status: { kind: "error", message } };
}
