"""Transport-only client for LLM prompt rewriting.

Templates are UTF-8 text files with a YAML front-matter block declaring the
role, followed by the instruction text and optional example blocks separated
by lines containing only "@example". The client posts template + user text
as JSON to a configurable endpoint; offline mode passes the input through.
"""

from __future__ import annotations

import importlib.resources
import os
from dataclasses import dataclass, field
from pathlib import Path

import requests
import yaml

from ..errors import ConfigError, DataValidationError, RetriableLLMError

DATASET_AUGMENTER = "dataset_augmenter"
INFERENCE_REWRITER = "inference_rewriter"

DURATION_MIN_S = 4.0
DURATION_MAX_S = 12.0
DEFAULT_DURATION_S = 8.0


@dataclass
class PromptTemplate:
    role: str
    instruction: str
    examples: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.role not in (DATASET_AUGMENTER, INFERENCE_REWRITER):
            raise ConfigError(f"unknown template role {self.role!r}")
        if not self.instruction.strip():
            raise ConfigError("template instruction is empty")


def parse_template(text: str) -> PromptTemplate:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "---":
        raise ConfigError("template must start with a '---' front-matter block")
    try:
        end = next(i for i in range(1, len(lines)) if lines[i].strip() == "---")
    except StopIteration:
        raise ConfigError("unterminated front-matter block") from None
    meta = yaml.safe_load("\n".join(lines[1:end])) or {}
    body = "\n".join(lines[end + 1 :])
    blocks = [b.strip() for b in body.split("\n@example\n")]
    return PromptTemplate(
        role=str(meta.get("role", "")),
        instruction=blocks[0],
        examples=[b for b in blocks[1:] if b],
    )


def load_template(source: str | Path) -> PromptTemplate:
    """Load a template file, or one of the bundled ones by role name."""
    if str(source) in (DATASET_AUGMENTER, INFERENCE_REWRITER):
        ref = importlib.resources.files("motok.data") / "templates" / f"{source}.txt"
        return parse_template(ref.read_text(encoding="utf-8"))
    return parse_template(Path(source).read_text(encoding="utf-8"))


@dataclass
class LlmEndpoint:
    url: str = ""
    model: str = ""
    timeout_s: float = 30.0
    api_key_env: str = "MOTOK_LLM_API_KEY"

    @property
    def offline(self) -> bool:
        return not self.url


@dataclass
class RewriteResult:
    text: str
    duration_s: float
    rewritten: bool


def rewrite_prompt(
    template: PromptTemplate, user_text: str, endpoint: LlmEndpoint | None = None
) -> RewriteResult:
    """Rewrite a casual prompt into a detailed motion description plus a
    suggested clip duration, clamped to [4, 12] seconds."""
    if endpoint is None or endpoint.offline:
        return RewriteResult(user_text, DEFAULT_DURATION_S, rewritten=False)

    headers = {"Content-Type": "application/json"}
    key = os.environ.get(endpoint.api_key_env, "")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": endpoint.model,
        "role": template.role,
        "instruction": template.instruction,
        "examples": template.examples,
        "input": user_text,
    }
    try:
        resp = requests.post(
            endpoint.url, json=payload, headers=headers, timeout=endpoint.timeout_s
        )
    except (requests.Timeout, requests.ConnectionError) as ex:
        raise RetriableLLMError(f"prompt endpoint unreachable: {ex}") from ex
    if resp.status_code >= 500:
        raise RetriableLLMError(f"prompt endpoint returned {resp.status_code}")
    if resp.status_code != 200:
        raise DataValidationError(
            f"prompt endpoint returned {resp.status_code}: {resp.text[:500]}"
        )
    try:
        body = resp.json()
        text = str(body["rewrite"])
        duration = float(body["duration_s"])
    except (ValueError, KeyError, TypeError) as ex:
        raise DataValidationError(
            f"unparseable rewrite response ({ex}); raw payload: {resp.text[:500]}"
        ) from ex
    duration = min(max(duration, DURATION_MIN_S), DURATION_MAX_S)
    return RewriteResult(text, duration, rewritten=True)
