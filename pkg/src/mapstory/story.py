"""Story composition: keyword selection, the chat prompt, and the narrative.

The narrative comes from a chat-completion service when one is configured;
otherwise (or on failure after retries) a deterministic template sentence is
produced and the story is marked source=fallback. Network trouble never
raises to the caller.
"""
from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, field

import httpx

from .taxonomy import Aspect, CaptionCategory, aspect_of
from .tree import KeywordBundle

log = logging.getLogger(__name__)


class StoryError(Exception):
    pass


class EmptyKeywords(StoryError, ValueError):
    pass


PROMPT_PREFIX = "Please create a concise sentence that encapsulates these keywords:"
PROMPT_TEMPLATE = (
    "Please create a concise sentence that encapsulates these keywords:{keywords}."
    " Additionally, provide a brief explanation in under 30 words, about {questions}"
)

ASPECT_ORDER = (Aspect.WHERE, Aspect.WHAT, Aspect.WHEN, Aspect.WHY)

QUESTION_TEXT = {
    Aspect.WHERE: "where the map depicts",
    Aspect.WHAT: "what the map type, style and topic are",
    Aspect.WHEN: "when the map was created",
    Aspect.WHY: "why the map was created and how it can be used",
}

DEFAULT_API_KEY_ENV = "MAPSTORY_LLM_API_KEY"


@dataclass(frozen=True)
class StoryRequest:
    bundle: KeywordBundle
    aspects: frozenset[Aspect] = frozenset(ASPECT_ORDER)

    def __post_init__(self):
        if not self.aspects:
            raise StoryError("at least one aspect must be selected")
        object.__setattr__(self, "aspects", frozenset(Aspect(a) for a in self.aspects))


@dataclass(frozen=True)
class Story:
    keywords: tuple[str, ...]
    prompt: str
    narrative: str
    source: str  # llm | fallback


@dataclass(frozen=True)
class TextGenClientConfig:
    endpoint: str
    model_name: str = "gpt-3.5-turbo"
    api_key_env_var: str = DEFAULT_API_KEY_ENV
    timeout_s: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0
    max_concurrency: int = 4

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise StoryError("timeout_s must be positive")
        if self.max_concurrency < 1:
            raise StoryError("max_concurrency must be >= 1")


def select_keywords(bundle: KeywordBundle, aspects: frozenset[Aspect]) -> list[str]:
    """Keyword labels whose category answers a selected aspect, in bundle order."""
    return [c.label for c in bundle.captions() if aspect_of(c.category) in aspects]


def compose_prompt(keywords: list[str], aspects: frozenset[Aspect]) -> str:
    if not keywords:
        raise EmptyKeywords("cannot compose a prompt without keywords")
    questions = "; ".join(QUESTION_TEXT[a] for a in ASPECT_ORDER if a in aspects)
    return PROMPT_TEMPLATE.format(keywords=", ".join(keywords), questions=questions)


class ChatCompletionClient:
    """Minimal chat-completion caller: bounded concurrency, retries with
    exponential backoff."""

    BACKOFF_BASE_S = 0.5
    BACKOFF_FACTOR = 2.0

    def __init__(self, config: TextGenClientConfig, transport=None, sleep=time.sleep):
        self.config = config
        self._transport = transport
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_concurrency)

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        headers = {}
        api_key = os.environ.get(self.config.api_key_env_var, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        with self._slots, httpx.Client(
            timeout=self.config.timeout_s, transport=self._transport
        ) as client:
            for attempt in range(attempts):
                try:
                    response = client.post(self.config.endpoint, json=payload, headers=headers)
                    response.raise_for_status()
                    return _extract_text(response.json())
                except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                    last_error = exc
                    if attempt < attempts - 1:
                        self._sleep(self.BACKOFF_BASE_S * self.BACKOFF_FACTOR**attempt)
        raise StoryError(f"text generation failed after {attempts} attempts: {last_error}")


def _extract_text(body: dict) -> str:
    choice = body["choices"][0]
    text = choice["message"]["content"] if "message" in choice else choice["text"]
    if not isinstance(text, str) or not text:
        raise ValueError("empty completion text")
    return text


def _article(label: str) -> str:
    return f"the {label}"


def fallback_narrative(bundle: KeywordBundle, aspects: frozenset[Aspect]) -> str:
    """Deterministic template sentence so the system degrades gracefully."""
    where = [c.label for c in bundle.children if aspect_of(c.category) is Aspect.WHERE]
    when = [c.label for c in bundle.children if aspect_of(c.category) is Aspect.WHEN]
    extras = [c.label for c in bundle.children if aspect_of(c.category) is Aspect.WHAT]

    sentence = "This " + (bundle.map_type.label if Aspect.WHAT in aspects else "map")
    if Aspect.WHERE in aspects and where:
        sentence += " depicts " + " and ".join(_article(l) for l in where)
    if Aspect.WHEN in aspects and when:
        sentence += f" in the {when[0]}"
    if Aspect.WHAT in aspects and extras:
        sentence += " about " + ", ".join(extras)
    return sentence + "."


def generate_story(request: StoryRequest, client: ChatCompletionClient | None = None) -> Story:
    """Compose the prompt and obtain a narrative; never raises on service failure."""
    keywords = select_keywords(request.bundle, request.aspects)
    if not keywords:
        log.warning("no keywords selected for aspects %s; using fallback", sorted(request.aspects))
        return Story((), "", fallback_narrative(request.bundle, request.aspects), "fallback")
    prompt = compose_prompt(keywords, request.aspects)
    if client is not None:
        try:
            narrative = client.complete(prompt)
            return Story(tuple(keywords), prompt, narrative, "llm")
        except StoryError as exc:
            log.warning("text generation degraded to fallback: %s", exc)
    return Story(
        tuple(keywords), prompt, fallback_narrative(request.bundle, request.aspects), "fallback"
    )
