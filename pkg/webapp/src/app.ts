/** DOM wiring: upload a map, pick aspects, show keyword chips and the story. */

import type { ApiClient } from "./api.js";
import {
  ASPECTS,
  Aspect,
  StoryResponse,
  UiState,
  applyError,
  applyResponse,
  beginRequest,
  canSubmit,
  initialState,
  selectedAspects,
  setFile,
  toggleAspect,
} from "./state.js";

function byId<T extends HTMLElement>(root: Document, id: string): T {
  const el = root.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export class StoryApp {
  state: UiState = initialState();

  private readonly input: HTMLInputElement;
  private readonly preview: HTMLImageElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly banner: HTMLElement;
  private readonly result: HTMLElement;
  private readonly loading: HTMLElement;
  private readonly checkboxes = new Map<Aspect, HTMLInputElement>();

  constructor(
    private readonly root: Document,
    private readonly api: ApiClient,
  ) {
    this.input = byId<HTMLInputElement>(root, "image-input");
    this.preview = byId<HTMLImageElement>(root, "preview");
    this.submitButton = byId<HTMLButtonElement>(root, "submit");
    this.banner = byId(root, "status-banner");
    this.result = byId(root, "result");
    this.loading = byId(root, "loading");
    for (const aspect of ASPECTS) {
      this.checkboxes.set(aspect, byId<HTMLInputElement>(root, `aspect-${aspect}`));
    }

    this.input.addEventListener("change", () => {
      const file = this.input.files?.[0] ?? null;
      this.state = setFile(this.state, file);
      this.showPreview(file);
      this.render();
    });
    for (const [aspect, box] of this.checkboxes) {
      box.addEventListener("change", () => {
        this.state = toggleAspect(this.state, aspect, box.checked);
        this.render();
      });
    }
    this.submitButton.addEventListener("click", () => void this.submit());
    this.render();
  }

  private showPreview(file: File | null): void {
    // jsdom has no createObjectURL; previews are browser-only sugar
    if (file && typeof URL.createObjectURL === "function") {
      this.preview.src = URL.createObjectURL(file);
      this.preview.hidden = false;
    } else {
      this.preview.removeAttribute("src");
      this.preview.hidden = true;
    }
  }

  async submit(): Promise<void> {
    if (!canSubmit(this.state)) return;
    const begun = beginRequest(this.state);
    this.state = begun.state;
    this.render();
    try {
      const story = await this.api.postStory(
        this.state.file as File,
        selectedAspects(this.state),
      );
      this.state = applyResponse(this.state, begun.requestId, story);
    } catch (exc) {
      this.state = applyError(this.state, begun.requestId, (exc as Error).message);
    }
    this.render();
  }

  render(): void {
    this.submitButton.disabled = !canSubmit(this.state) || this.state.status.kind === "loading";
    for (const [aspect, box] of this.checkboxes) {
      box.checked = this.state.aspects[aspect];
    }
    this.loading.hidden = this.state.status.kind !== "loading";
    if (this.state.status.kind === "error") {
      this.banner.textContent = this.state.status.message;
      this.banner.hidden = false;
    } else {
      this.banner.textContent = "";
      this.banner.hidden = true;
    }
    this.renderStory(this.state.response);
  }

  private renderStory(story: StoryResponse | null): void {
    this.result.hidden = story === null;
    if (!story) return;
    const doc = this.root;

    byId(doc, "map-type-badge").textContent = story.map_type;
    byId(doc, "narrative").textContent = story.narrative;
    byId(doc, "prompt-text").textContent = story.prompt;

    const sourceBadge = byId(doc, "source-badge");
    sourceBadge.textContent = story.source === "fallback" ? "fallback story" : "llm story";
    sourceBadge.className = `source ${story.source}`;

    // chips come verbatim from the response; the UI never invents labels
    const chips = byId(doc, "keywords");
    chips.textContent = "";
    for (const keyword of story.keywords) {
      const chip = doc.createElement("span");
      chip.className = "chip";
      chip.dataset.category = keyword.category;
      const label = doc.createElement("strong");
      label.textContent = keyword.label;
      const confidence = doc.createElement("small");
      confidence.textContent = ` ${(keyword.confidence * 100).toFixed(0)}%`;
      chip.append(label, confidence);
      chips.append(chip);
    }
  }
}

export async function bootstrap(root: Document, api: ApiClient): Promise<StoryApp> {
  const app = new StoryApp(root, api);
  try {
    const health = await api.getHealth();
    const dot = byId(root, "health-dot");
    dot.classList.toggle("ok", health.models_loaded);
    dot.title = health.models_loaded ? "models loaded" : "models still loading";
    const tree = await api.getTree();
    const branches = Object.entries(tree.branches)
      .map(([label, children]) => `${label} → ${children.join(", ")}`)
      .join("  |  ");
    byId(root, "tree-info").textContent = branches;
  } catch {
    // the page stays usable; submitting will surface the connection error
  }
  return app;
}
