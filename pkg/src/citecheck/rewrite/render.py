"""Bibliography rendering in the five supported output formats.

Every renderer works from the same merged view: the chosen source record
overrides title/authors/year/venue/identifiers, the cited entry supplies
everything else (volume, pages, leftover BibTeX fields). Output is fully
deterministic; the BibTeX form is a parser fixed point, which the
round-trip suite pins byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import UnsupportedFormat
from ..extraction.models import ReferenceInput
from ..sources import CandidateRecord
from .keys import assign_citation_keys
from .models import RENDER_FORMATS

# entry kind -> BibTeX type; everything without a dedicated form is @misc.
_BIBTEX_TYPE = {"journal": "article", "conference": "inproceedings"}

_ENDNOTE_TYPE = {
    "journal": "Journal Article",
    "conference": "Conference Proceedings",
    "book": "Book",
    "preprint": "Electronic Article",
    "other": "Generic",
    "unknown": "Generic",
}

# Fields the structured renderers own; anything else in the cited entry's
# field map tags along alphabetically so no data is dropped.
_OWNED_FIELDS = frozenset({
    "author", "title", "journal", "booktitle", "year", "volume", "pages", "doi",
    "eprint", "archiveprefix", "pmid", "venue", "date", "journaltitle", "arxiv",
    "arxivid", "url", "note", "howpublished", "series",
})


@dataclass(frozen=True)
class MergedEntry:
    key: str
    kind: str
    title: str | None
    authors: tuple[tuple[str, str], ...]
    year: int | None
    venue: str | None
    doi: str | None
    pmid: str | None
    arxiv_id: str | None
    volume: str | None
    pages: str | None
    extra_fields: tuple[tuple[str, str], ...]
    verified: bool


def merge_entry(entry: ReferenceInput, chosen: CandidateRecord | None,
                key: str) -> MergedEntry:
    kind = entry.entry_kind
    if kind == "unknown" and chosen is not None and chosen.manifestation_kind != "unknown":
        kind = chosen.manifestation_kind
    extras = tuple(sorted(
        (name, value) for name, value in entry.fields.items()
        if not name.startswith("_") and name not in _OWNED_FIELDS and value.strip()
    ))
    if chosen is None:
        return MergedEntry(
            key=key, kind=kind, title=entry.title, authors=entry.authors,
            year=entry.year, venue=entry.venue, doi=entry.doi, pmid=entry.pmid,
            arxiv_id=entry.arxiv_id, volume=entry.fields.get("volume"),
            pages=entry.fields.get("pages"), extra_fields=extras, verified=False,
        )
    return MergedEntry(
        key=key, kind=kind,
        title=chosen.title or entry.title,
        authors=chosen.authors or entry.authors,
        year=chosen.year if chosen.year is not None else entry.year,
        venue=chosen.venue or entry.venue,
        doi=chosen.doi or entry.doi,
        pmid=chosen.pmid or entry.pmid,
        arxiv_id=chosen.arxiv_id or entry.arxiv_id,
        volume=entry.fields.get("volume"),
        pages=entry.fields.get("pages"),
        extra_fields=extras,
        verified=True,
    )


def merge_pairs(pairs: list[tuple[ReferenceInput, CandidateRecord | None]]) -> list[MergedEntry]:
    keys = assign_citation_keys([entry for entry, _ in pairs])
    merged = []
    for entry, chosen in pairs:
        key = entry.citation_key or keys[entry.ordinal]
        merged.append(merge_entry(entry, chosen, key))
    return merged


def render_bibliography(pairs: list[tuple[ReferenceInput, CandidateRecord | None]],
                        fmt: str) -> str:
    """Render the (possibly corrected) bibliography in one output format."""
    if fmt not in RENDER_FORMATS:
        raise UnsupportedFormat(f"unknown output format: {fmt}")
    merged = merge_pairs(pairs)
    if fmt == "json":
        return _render_json(merged)
    if fmt == "bibtex":
        return _render_bibtex(merged)
    if fmt == "text":
        return _render_text(merged)
    if fmt == "markdown":
        return _render_markdown(merged)
    return _render_endnote(merged)


def _author_bibtex(authors: tuple[tuple[str, str], ...]) -> str:
    parts = []
    for family, given in authors:
        parts.append(f"{family}, {given}" if given else family)
    return " and ".join(parts)


def _author_display(authors: tuple[tuple[str, str], ...]) -> str:
    parts = []
    for family, given in authors:
        parts.append(f"{given} {family}".strip())
    return ", ".join(parts)


def render_bibtex_entry(m: MergedEntry) -> str:
    """One canonical @entry: sorted fields, two-space indent, no trailing comma."""
    entry_type = _BIBTEX_TYPE.get(m.kind, "misc")
    fields: list[tuple[str, str]] = []
    if m.authors:
        fields.append(("author", _author_bibtex(m.authors)))
    if m.title:
        fields.append(("title", m.title))
    if m.venue:
        fields.append(("booktitle" if entry_type == "inproceedings" else "journal", m.venue))
    if m.year is not None:
        fields.append(("year", str(m.year)))
    if m.volume:
        fields.append(("volume", m.volume))
    if m.pages:
        fields.append(("pages", m.pages))
    if m.doi:
        fields.append(("doi", m.doi))
    if m.arxiv_id:
        fields.append(("eprint", m.arxiv_id))
        fields.append(("archiveprefix", "arXiv"))
    if m.pmid:
        fields.append(("pmid", m.pmid))
    fields.extend(m.extra_fields)
    lines = [f"@{entry_type}{{{m.key},"]
    for i, (name, value) in enumerate(fields):
        comma = "," if i + 1 < len(fields) else ""
        lines.append(f"  {name} = {{{value}}}{comma}")
    lines.append("}")
    return "\n".join(lines)


def _render_bibtex(merged: list[MergedEntry]) -> str:
    if not merged:
        return ""
    return "\n\n".join(render_bibtex_entry(m) for m in merged) + "\n"


def render_text_entry(m: MergedEntry, number: int | None = None) -> str:
    parts = []
    if m.authors:
        parts.append(_author_display(m.authors) + ".")
    if m.title:
        parts.append(m.title + ".")
    venue_year = ", ".join(p for p in (m.venue, str(m.year) if m.year else None) if p)
    if venue_year:
        parts.append(venue_year + ".")
    if m.doi:
        parts.append(f"doi:{m.doi}.")
    elif m.arxiv_id:
        parts.append(f"arXiv:{m.arxiv_id}.")
    if m.pmid:
        parts.append(f"PMID:{m.pmid}.")
    body = " ".join(parts)
    return f"[{number}] {body}" if number is not None else body


def _render_text(merged: list[MergedEntry]) -> str:
    if not merged:
        return ""
    return "\n".join(render_text_entry(m, i + 1) for i, m in enumerate(merged)) + "\n"


def patch_text_entry(m: MergedEntry) -> str:
    """Entry body for text-format patches, in the parser's strongest shape.

    Display rendering puts the year after the venue, but that layout does
    not survive re-extraction when authors are cited initials-first
    ("T. Brown." never ends a chunk). Patches instead lead with
    "Family, G. (Year)." so extract -> patch -> extract is a fixed point.
    """
    parts = []
    authors = " and ".join(f"{f}, {g}" if g else f for f, g in m.authors)
    if authors and m.year is not None:
        parts.append(f"{authors} ({m.year}).")
    elif authors:
        parts.append(f"{authors}.")
    elif m.year is not None:
        parts.append(f"({m.year}).")
    if m.title:
        parts.append(m.title + ".")
    if m.venue:
        parts.append(m.venue + ".")
    if m.doi:
        parts.append(f"https://doi.org/{m.doi}")
    elif m.arxiv_id:
        parts.append(f"arXiv:{m.arxiv_id}.")
    if m.pmid:
        parts.append(f"PMID: {m.pmid}.")
    return " ".join(parts)


def _render_markdown(merged: list[MergedEntry]) -> str:
    if not merged:
        return ""
    lines = []
    for i, m in enumerate(merged, start=1):
        link = None
        if m.doi:
            link = f"https://doi.org/{m.doi}"
        elif m.arxiv_id:
            link = f"https://arxiv.org/abs/{m.arxiv_id}"
        title = m.title or "(untitled)"
        title_part = f"[{title}]({link})" if link else title
        lead = _author_display(m.authors)
        year_part = f" ({m.year})" if m.year is not None else ""
        venue_part = f" *{m.venue}*." if m.venue else ""
        head = f"{lead}{year_part}. " if lead else ""
        lines.append(f"{i}. {head}{title_part}.{venue_part}")
    return "\n".join(lines) + "\n"


def _render_endnote(merged: list[MergedEntry]) -> str:
    if not merged:
        return ""
    blocks = []
    for m in merged:
        lines = [f"%0 {_ENDNOTE_TYPE.get(m.kind, 'Generic')}"]
        for family, given in m.authors:
            lines.append(f"%A {family}, {given}" if given else f"%A {family}")
        if m.title:
            lines.append(f"%T {m.title}")
        if m.venue:
            lines.append(f"%J {m.venue}")
        if m.year is not None:
            lines.append(f"%D {m.year}")
        if m.volume:
            lines.append(f"%V {m.volume}")
        if m.pages:
            lines.append(f"%P {m.pages}")
        if m.doi:
            lines.append(f"%R {m.doi}")
        if m.pmid:
            lines.append(f"%M {m.pmid}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _render_json(merged: list[MergedEntry]) -> str:
    records = []
    for m in merged:
        records.append({
            "key": m.key,
            "kind": m.kind,
            "title": m.title,
            "authors": [list(a) for a in m.authors],
            "year": m.year,
            "venue": m.venue,
            "doi": m.doi,
            "pmid": m.pmid,
            "arxiv_id": m.arxiv_id,
            "volume": m.volume,
            "pages": m.pages,
            "verified": m.verified,
        })
    return json.dumps(records, indent=2, ensure_ascii=False)
