from .manifest import (
    DatasetManifest,
    augment_with_mirrors,
    build_manifest,
    make_splits,
    mirror_id,
    swap_left_right,
)
from .prompts import LlmEndpoint, PromptTemplate, load_template, rewrite_prompt
from .store import populate_text_store

__all__ = [
    "DatasetManifest",
    "augment_with_mirrors",
    "build_manifest",
    "make_splits",
    "mirror_id",
    "swap_left_right",
    "LlmEndpoint",
    "PromptTemplate",
    "load_template",
    "rewrite_prompt",
    "populate_text_store",
]
