"""HTTP service wiring the pipeline end to end for the UI and scripting.

Models load once (at startup or injected for tests) and are shared
read-only; requests arriving before the load finishes get a 503.
"""
from __future__ import annotations

import logging
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from fastapi import FastAPI, File, Form, Query, UploadFile
from fastapi.responses import JSONResponse

from .classify import CategoryClassifier
from .encoder import ToyEncoder, checkpoint_path, load_encoder, model_dir
from .ingest import DecodeError, PreprocessConfig, load_image_bytes, preprocess_image
from .story import (
    ChatCompletionClient,
    StoryRequest,
    TextGenClientConfig,
    generate_story,
)
from .taxonomy import (
    MAP_TYPE_VOCABULARY,
    Aspect,
    CaptionCategory,
    aspect_of,
    load_vocabularies,
)
from .tree import DecisionTreeSpec, infer, load_tree, tree_as_config

log = logging.getLogger(__name__)

DEFAULT_MAX_UPLOAD = 16 * 1024 * 1024


class ServiceError(Exception):
    pass


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    model_dir: str | None = None  # falls back to MAPSTORY_MODEL_DIR, then ./models
    tree_config: str = "configs/tree.yaml"
    vocab_config: str = "configs/vocabularies.yaml"
    llm: TextGenClientConfig | None = None
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    webapp_dir: str | None = None  # static UI mounted at / when set

    def resolved_model_dir(self) -> Path:
        return model_dir(self.model_dir)

    def validate_files(self) -> None:
        for path in (self.tree_config, self.vocab_config):
            if not Path(path).is_file():
                raise ServiceError(f"config file missing: {path}")
        if not self.resolved_model_dir().is_dir():
            raise ServiceError(f"model directory missing: {self.resolved_model_dir()}")


def load_service_config(path: str | Path) -> ServiceConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    llm = TextGenClientConfig(**raw["llm"]) if raw.get("llm") else None
    known = {k: raw[k] for k in ("host", "port", "model_dir", "tree_config",
                                 "vocab_config", "max_upload_bytes", "webapp_dir")
             if k in raw}
    return ServiceConfig(llm=llm, **known)


@dataclass
class ServiceComponents:
    tree_spec: DecisionTreeSpec
    classifiers: dict[CaptionCategory, CategoryClassifier]
    story_client: ChatCompletionClient | None = None
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)


def build_components(config: ServiceConfig) -> ServiceComponents:
    """Load vocabularies, the tree, and one checkpoint per reachable category."""
    config.validate_files()
    vocabularies = load_vocabularies(config.vocab_config)
    root_vocab = vocabularies.get(CaptionCategory.MAP_TYPE, MAP_TYPE_VOCABULARY)
    spec = load_tree(config.tree_config, root_vocab)
    classifiers = {}
    for category in spec.reachable_categories:
        vocab = vocabularies.get(category) or (
            root_vocab if category is CaptionCategory.MAP_TYPE else None
        )
        if vocab is None:
            raise ServiceError(f"no vocabulary configured for {category.value}")
        path = checkpoint_path(category, config.resolved_model_dir())
        encoder = load_encoder(path) if path.is_file() else ToyEncoder()
        if not path.is_file():
            log.warning("%s: no checkpoint at %s, using untrained toy encoder",
                        category.value, path)
        classifiers[category] = CategoryClassifier(category, encoder, vocab)
    client = ChatCompletionClient(config.llm) if config.llm else None
    return ServiceComponents(spec, classifiers, client, config.max_upload_bytes)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _parse_aspects(raw: str | None) -> frozenset[Aspect] | None:
    if raw is None or not raw.strip():
        return frozenset(Aspect)
    try:
        return frozenset(Aspect(a.strip()) for a in raw.split(",") if a.strip())
    except ValueError:
        return None


def create_app(
    components: ServiceComponents | None = None, loader=None, webapp_dir: str | None = None
) -> FastAPI:
    """App factory; pass prebuilt components for tests, or a zero-argument
    loader invoked at startup. `webapp_dir` mounts a static UI at /."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if loader is not None and app.state.components is None:
            app.state.components = loader()
        yield

    app = FastAPI(title="mapstory", lifespan=lifespan)
    app.state.components = components

    def ready() -> ServiceComponents | None:
        return app.state.components

    @app.get("/api/health")
    def health():
        return {"status": "ok", "models_loaded": ready() is not None}

    @app.get("/api/tree")
    def tree_endpoint():
        state = ready()
        if state is None:
            return _error(503, "models not loaded")
        return tree_as_config(state.tree_spec)

    @app.post("/api/predict")
    async def predict_endpoint(image: UploadFile = File(...), category: str = Query(...)):
        state = ready()
        if state is None:
            return _error(503, "models not loaded")
        try:
            cat = CaptionCategory(category)
        except ValueError:
            return _error(400, f"unknown category: {category!r}")
        if cat not in state.classifiers:
            return _error(400, f"no classifier for category: {category!r}")
        data = await image.read()
        if len(data) > state.max_upload_bytes:
            return _error(413, "image exceeds upload limit")
        try:
            img = preprocess_image(load_image_bytes(data), state.preprocess)
        except DecodeError as exc:
            return _error(400, str(exc))
        prediction = state.classifiers[cat].predict(img)
        return {"label": prediction.caption.label, "scores": prediction.scores}

    @app.post("/api/story")
    async def story_endpoint(image: UploadFile = File(...), aspects: str | None = Form(None)):
        state = ready()
        if state is None:
            return _error(503, "models not loaded")
        selected = _parse_aspects(aspects)
        if selected is None:
            return _error(400, f"bad aspects: {aspects!r}")
        data = await image.read()
        if len(data) > state.max_upload_bytes:
            return _error(413, "image exceeds upload limit")
        try:
            img = preprocess_image(load_image_bytes(data), state.preprocess)
        except DecodeError as exc:
            return _error(400, str(exc))

        bundle = infer(img, state.tree_spec, state.classifiers)
        request = StoryRequest(bundle=bundle, aspects=selected)
        story = generate_story(request, state.story_client)
        keywords = [
            {
                "category": caption.category.value,
                "label": caption.label,
                "confidence": caption.confidence,
            }
            for caption in bundle.captions()
            if aspect_of(caption.category) in selected
        ]
        return {
            "map_type": bundle.map_type.label,
            "keywords": keywords,
            "prompt": story.prompt,
            "narrative": story.narrative,
            "source": story.source,
        }

    if webapp_dir is not None:
        if not (Path(webapp_dir) / "index.html").is_file():
            raise ServiceError(f"webapp_dir has no index.html: {webapp_dir}")
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=webapp_dir, html=True), name="webapp")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(loader=lambda: build_components(config), webapp_dir=config.webapp_dir)
    uvicorn.run(app, host=config.host, port=config.port)
