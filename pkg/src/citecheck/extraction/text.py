"""Reference-section detection and free-text entry segmentation.

Plain-text and Markdown manuscripts carry no structure, so segmentation is
heuristic by design: numbered markers when present, else blank-line blocks,
else one entry per line. Spans always reference the *original* text; the
cleaned copies used for field parsing never leak into offsets.
"""

from __future__ import annotations

import re

from .. import textnorm

_HEADER_NAMES = ("references", "bibliography", "works cited")

# "References", "## References", "7. References", "2) Bibliography:" ...
_HEADER_RE = re.compile(
    r"^(?P<hash>#{1,6}\s+)?(?P<num>\d+(?:\.\d+)*[.)]?\s+)?"
    r"(?P<name>references|bibliography|works\s+cited)\s*:?\s*$",
    re.IGNORECASE,
)

_NUMBERED_HEADER_RE = re.compile(r"^\s*\d+(?:\.\d+)*[.)]?\s+\S")
# A short line of capitalized words reads as a section header ("Appendix").
_BARE_HEADER_RE = re.compile(r"^[A-Z][A-Za-z0-9 ]{0,39}$")

# Entry markers: "[1] ", "1. ", "(1) ", "1) ". "[1]" must not be a md link.
_MARKER_RE = re.compile(r"^\s*(?:\[(\d+)\](?!\()|\((\d+)\)|(\d+)[.)])\s+")

_MD_LINK_RE = re.compile(r"\[([^\]]*)\]\(([^)]*)\)")

_DOI_IN_TEXT_RE = re.compile(
    r"(?:doi:\s*|https?://(?:dx\.)?doi\.org/)?(10\.\d{2,9}(?:\.\d+)*/[^\s,;]+)",
    re.IGNORECASE,
)
_PMID_IN_TEXT_RE = re.compile(r"\bPMID[:\s]*(\d{1,9})\b", re.IGNORECASE)
_YEAR_RE = re.compile(r"\b(\d{4})\b")
_PAREN_YEAR_RE = re.compile(r"\((\d{4})[a-z]?\)")

YEAR_MIN, YEAR_MAX = 1500, 2099


def _is_bare_header(line: str) -> bool:
    stripped = line.strip()
    if not _BARE_HEADER_RE.match(stripped):
        return False
    words = stripped.split()
    return len(words) <= 4 and all(w[0].isupper() or w[0].isdigit() for w in words)


def detect_reference_section(text: str) -> tuple[int, int] | None:
    """Character span of the references section, or None.

    The span runs from the line after the *last* matching header to the end
    of the document or the next header of the same level, whichever comes
    first.
    """
    lines = text.splitlines(keepends=True)
    offsets: list[int] = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line)

    header_idx: int | None = None
    header_match: re.Match[str] | None = None
    for i, line in enumerate(lines):
        m = _HEADER_RE.match(line.strip())
        if m:
            header_idx = i
            header_match = m
    if header_idx is None or header_match is None:
        return None

    start = offsets[header_idx] + len(lines[header_idx])
    end = len(text)
    if header_match.group("hash"):
        level = len(header_match.group("hash").strip())
        closer = re.compile(r"^#{1,%d}\s+\S" % level)
        for j in range(header_idx + 1, len(lines)):
            if closer.match(lines[j]):
                end = offsets[j]
                break
    elif header_match.group("num"):
        # "8. Conclusion" closes the section; "8. Doe, J. (2020). ..." is an
        # entry. The remainder after the number must itself read as a header.
        for j in range(header_idx + 1, len(lines)):
            m = re.match(r"^\s*\d+(?:\.\d+)*[.)]?\s+(?P<rest>\S.*)$", lines[j])
            if m and _is_bare_header(m.group("rest")):
                end = offsets[j]
                break
    else:
        for j in range(header_idx + 1, len(lines)):
            if _is_bare_header(lines[j]) and lines[j].strip():
                end = offsets[j]
                break
    if start >= end:
        return None
    return (start, end)


def strip_markdown_links(text: str) -> str:
    """Rewrite [text](url) as "text url" so identifiers in URLs stay visible."""
    return _MD_LINK_RE.sub(lambda m: f"{m.group(1)} {m.group(2)}".strip(), text)


def segment_references(text: str, span: tuple[int, int]) -> list[tuple[int, int]]:
    """Split a references block into per-entry character spans.

    Preference order: explicit numbered markers, blank-line blocks, single
    lines. Returned spans are trimmed of surrounding whitespace and always
    lie inside `span`.
    """
    start, end = span
    block = text[start:end]
    lines = block.splitlines(keepends=True)
    offsets: list[int] = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line)

    marker_lines = [i for i, line in enumerate(lines) if _MARKER_RE.match(line)]
    spans: list[tuple[int, int]] = []
    if marker_lines:
        for k, i in enumerate(marker_lines):
            seg_start = offsets[i]
            seg_end = offsets[marker_lines[k + 1]] if k + 1 < len(marker_lines) else len(block)
            spans.append((seg_start, seg_end))
    elif any(not line.strip() for line in lines):
        blocks: list[tuple[int, int]] = []
        current: int | None = None
        for i, line in enumerate(lines):
            if line.strip():
                if current is None:
                    current = offsets[i]
            else:
                if current is not None:
                    blocks.append((current, offsets[i]))
                    current = None
        if current is not None:
            blocks.append((current, len(block)))
        spans = blocks
    else:
        spans = [(offsets[i], offsets[i] + len(lines[i])) for i, line in enumerate(lines)
                 if line.strip()]

    trimmed: list[tuple[int, int]] = []
    for seg_start, seg_end in spans:
        segment = block[seg_start:seg_end]
        lead = len(segment) - len(segment.lstrip())
        tail = len(segment) - len(segment.rstrip())
        if seg_start + lead < seg_end - tail:
            trimmed.append((start + seg_start + lead, start + seg_end - tail))
    return trimmed


def strip_entry_marker(text: str) -> str:
    return _MARKER_RE.sub("", text, count=1)


def entry_marker(text: str) -> str | None:
    """The literal numbering marker ("[3] ", "4. ") at the head of an entry."""
    m = _MARKER_RE.match(text)
    return m.group(0) if m else None


def first_plausible_year(text: str) -> int | None:
    """First 4-digit integer in the plausible publication window."""
    for m in _YEAR_RE.finditer(text):
        value = int(m.group(1))
        if YEAR_MIN <= value <= YEAR_MAX:
            return value
    return None


def _looks_like_authors(chunk: str) -> bool:
    if " and " in chunk or "&" in chunk:
        return True
    # "Doe, J." / "Doe, J. B." shapes
    return bool(re.search(r"[A-Z][\w'-]+,\s*(?:[A-Z]\.?\s*)+", chunk))


def _split_sentences(text: str) -> list[str]:
    # Split on ". " only when the period follows >= 2 word chars, so author
    # initials ("J.") never end a chunk.
    parts = re.split(r"(?<=\w{2})\.\s+", text)
    return [p.strip().rstrip(".") for p in parts if p.strip().rstrip(".")]


def parse_freetext_fields(entry_text: str) -> dict[str, str]:
    """Heuristic field map {author, title, venue, year, doi, pmid, arxiv} from one entry."""
    text = strip_entry_marker(entry_text.replace("\n", " "))
    text = re.sub(r"\s+", " ", text).strip()
    fields: dict[str, str] = {}

    m = _DOI_IN_TEXT_RE.search(text)
    if m:
        fields["doi"] = m.group(1)
    m = _PMID_IN_TEXT_RE.search(text)
    if m:
        fields["pmid"] = m.group(1)
    arxiv = textnorm.find_arxiv_id(text)
    if arxiv:
        fields["arxiv"] = arxiv[0] if arxiv[1] is None else f"{arxiv[0]}v{arxiv[1]}"

    # Drop identifier tails before structural parsing.
    body = _DOI_IN_TEXT_RE.sub("", text)
    body = _PMID_IN_TEXT_RE.sub("", body)
    body = re.sub(r"https?://\S+", "", body)
    body = re.sub(r"\barXiv[:\s]*\S+", "", body, flags=re.IGNORECASE)
    body = re.sub(r"\s+", " ", body).strip().strip(",;")

    paren_year = _PAREN_YEAR_RE.search(body)
    if paren_year:
        year = int(paren_year.group(1))
        if YEAR_MIN <= year <= YEAR_MAX:
            fields["year"] = paren_year.group(1)
        authors_part = body[: paren_year.start()].strip().rstrip(",; ")
        rest = body[paren_year.end():].lstrip(" .:")
        chunks = _split_sentences(rest)
        if authors_part:
            fields["author"] = authors_part
        if chunks:
            fields["title"] = chunks[0]
        if len(chunks) > 1:
            fields["venue"] = _clean_venue(chunks[1])
    else:
        year = first_plausible_year(body)
        if year is not None:
            fields["year"] = str(year)
        chunks = _split_sentences(body)
        if chunks and _looks_like_authors(chunks[0]) and len(chunks) > 1:
            fields["author"] = chunks[0]
            fields["title"] = chunks[1]
            if len(chunks) > 2:
                fields["venue"] = _clean_venue(chunks[2])
        elif chunks:
            fields["title"] = chunks[0]
            if len(chunks) > 1:
                fields["venue"] = _clean_venue(chunks[1])
    # A "title" without a single word character (dash runs, ellipses) is
    # decoration, not data; dropping it lets normalization reject the entry.
    if "title" in fields and not re.search(r"[0-9A-Za-z]", fields["title"]):
        del fields["title"]
    return fields


def _clean_venue(chunk: str) -> str:
    chunk = re.sub(r"\b\d{4}\b", "", chunk)
    chunk = re.sub(r"\b\d+\s*\(\d+\)", "", chunk)  # volume(issue)
    chunk = re.sub(r"\b(?:pp?\.|pages?)\s*[\d\u2013-]+", "", chunk, flags=re.IGNORECASE)
    chunk = re.sub(r"[\d:\u2013-]+\s*$", "", chunk)
    return chunk.strip(" ,;.").strip()


def split_freetext_authors(author_text: str) -> list[tuple[str, str]]:
    """Author list from free text: ';' wins, then BibTeX-ish 'and', then comma pairing."""
    author_text = re.sub(r",?\s*(?:and|&)\s+et al\.?$", "", author_text, flags=re.IGNORECASE)
    author_text = re.sub(r",?\s*et al\.?$", "", author_text, flags=re.IGNORECASE).strip()
    if not author_text:
        return []
    if ";" in author_text:
        parts = [p.strip() for p in author_text.split(";") if p.strip()]
        return [textnorm.split_person_name(p) for p in parts]
    # Normalize " and " / "&" to commas, then pair "Family, I." tokens.
    flattened = re.sub(r"\s+(?:and|&)\s+", ", ", author_text)
    tokens = [t.strip() for t in flattened.split(",") if t.strip()]
    authors: list[tuple[str, str]] = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        if nxt is not None and re.fullmatch(r"(?:[A-Z]\.?\s*)+(?:[A-Z][a-z]+)?", nxt):
            authors.append((token, nxt))
            i += 2
        else:
            authors.append(textnorm.split_person_name(token))
            i += 1
    return [(f, g) for f, g in authors if f]
