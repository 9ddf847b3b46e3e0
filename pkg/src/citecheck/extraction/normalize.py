"""Field-map normalization into ReferenceInput values."""

from __future__ import annotations

import re

from .. import textnorm
from .bibtex import strip_braces
from .models import RawReference, ReferenceInput, RejectedReference
from .text import YEAR_MAX, YEAR_MIN, first_plausible_year, split_freetext_authors

_BIBTEX_KIND = {
    "article": "journal",
    "inproceedings": "conference",
    "conference": "conference",
    "proceedings": "conference",
    "book": "book",
    "inbook": "book",
    "incollection": "book",
}

# Fields whose values may carry an arXiv id.
_ARXIV_FIELDS = ("arxiv", "eprint", "arxivid", "url", "note", "howpublished")


def normalize_reference(raw: RawReference,
                        fields: dict[str, str]) -> ReferenceInput | RejectedReference:
    """Normalize one raw entry; entries with no title and no identifier are rejected.

    Display strings get NFKC + whitespace normalization (case preserved);
    matching keys are derived later. Identifier fields are normalized with
    the shared rules so extraction and connectors agree byte-for-byte.
    """
    cleaned = {k.lower(): textnorm.normalize_display(v) for k, v in fields.items() if v}

    title = cleaned.get("title")
    if title:
        title = strip_braces(title).strip().rstrip(".")
        title = textnorm.normalize_display(title) or None

    doi: str | None = None
    suspect_doi: str | None = None
    if "doi" in cleaned:
        doi = textnorm.normalize_doi(cleaned["doi"])
        if doi is None:
            suspect_doi = textnorm.strip_doi_prefix(cleaned["doi"])

    pmid = textnorm.normalize_pmid(cleaned["pmid"]) if "pmid" in cleaned else None

    arxiv_id: str | None = None
    arxiv_version: int | None = None
    for field in _ARXIV_FIELDS:
        value = cleaned.get(field)
        if not value:
            continue
        parsed = textnorm.normalize_arxiv_id(value) or textnorm.find_arxiv_id(value)
        if parsed:
            arxiv_id, arxiv_version = parsed
            break

    year = _extract_year(cleaned, raw.origin_format)
    venue = _extract_venue(cleaned)
    authors = _extract_authors(cleaned.get("author", ""), raw.origin_format)
    kind = _entry_kind(raw.origin_format, cleaned, arxiv_id)

    if not (title or doi or pmid or arxiv_id):
        return RejectedReference(raw=raw, reason="Unparseable: no title and no identifier")

    return ReferenceInput(
        raw=raw,
        title=title,
        authors=tuple(authors),
        year=year,
        venue=venue,
        doi=doi,
        pmid=pmid,
        arxiv_id=arxiv_id,
        arxiv_version=arxiv_version,
        entry_kind=kind,
        fields=cleaned,
        suspect_doi=suspect_doi,
    )


def _extract_year(cleaned: dict[str, str], origin: str) -> int | None:
    value = cleaned.get("year")
    if value:
        # Explicit year fields are taken at face value (lint flags outliers);
        # the plausibility window only guards free-text scanning, where page
        # and volume numbers masquerade as years.
        m = re.search(r"\d{4}", value)
        if m:
            return int(m.group(0))
        return None
    if origin == "bibtex":
        date = cleaned.get("date")
        if date:
            m = re.match(r"(\d{4})", date)
            if m and YEAR_MIN <= int(m.group(1)) <= YEAR_MAX:
                return int(m.group(1))
        return None
    blob = " ".join(cleaned.get(k, "") for k in ("venue", "note", "howpublished"))
    return first_plausible_year(blob) if blob.strip() else None


def _extract_venue(cleaned: dict[str, str]) -> str | None:
    for field in ("journal", "booktitle", "venue", "journaltitle", "series"):
        value = cleaned.get(field)
        if value:
            return strip_braces(value).strip().rstrip(".,") or None
    return None


def _extract_authors(author_text: str, origin: str) -> list[tuple[str, str]]:
    author_text = strip_braces(author_text).strip()
    if not author_text:
        return []
    if origin == "bibtex":
        parts = re.split(r"\s+and\s+", author_text)
        authors = [textnorm.split_person_name(p) for p in parts if p.strip()
                   if p.strip().lower() not in ("others", "et al.", "et al")]
        return [(f, g) for f, g in authors if f]
    return split_freetext_authors(author_text)


def _entry_kind(origin: str, cleaned: dict[str, str], arxiv_id: str | None) -> str:
    if origin == "bibtex":
        entry_type = cleaned.get("_entry_type", "")
        kind = _BIBTEX_KIND.get(entry_type)
        if kind:
            return kind
        if arxiv_id:
            return "preprint"
        return "other" if entry_type else "unknown"
    if arxiv_id:
        return "preprint"
    return "unknown"
