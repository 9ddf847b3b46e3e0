"""Rewrite planning, rendering, and policy-gated application."""

from .engine import (analyze_key_mapping, apply_rewrite, file_digest, plan_rewrite,
                     replacement_eligible, sidecar_path)
from .keys import assign_citation_keys, generate_citation_key
from .models import (ApplyResult, KeyMapping, Patch, RENDER_FORMATS, RewritePlan,
                     WRITE_MODES)
from .render import (merge_entry, merge_pairs, patch_text_entry, render_bibliography,
                     render_bibtex_entry)

__all__ = [
    "Patch", "KeyMapping", "RewritePlan", "ApplyResult", "RENDER_FORMATS",
    "WRITE_MODES", "plan_rewrite", "apply_rewrite", "analyze_key_mapping",
    "render_bibliography", "render_bibtex_entry", "merge_entry", "merge_pairs",
    "generate_citation_key", "assign_citation_keys", "file_digest", "sidecar_path",
    "replacement_eligible",
]
