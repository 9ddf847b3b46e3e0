"""Connectors for PubMed, Crossref, arXiv, and Semantic Scholar.

Each connector documents exactly which wire fields it reads. Remote
trouble of any kind becomes a FailureClass value; connectors only raise
for local misuse (disabled source, unsupported query kind), which is a
programming error by the caller.

Wire formats:
  crossref          REST JSON: message.DOI, .title[0], .author[].family/given,
                    .issued/.published-print date-parts, .container-title[0],
                    .type, .relation (preprint/published cross-assertions)
  pubmed            E-utilities JSON, esearch (esearchresult.idlist) then
                    esummary (result.<uid>.title/authors/pubdate/fulljournalname/
                    articleids)
  arxiv             Atom XML: entry id/title/author/published, arxiv:doi
                    treated as a journal-DOI assertion, never a direct id
  semantic_scholar  Graph JSON: paperId, title, authors[].name, year, venue,
                    externalIds.{DOI,ArXiv,PubMed}, publicationTypes
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from urllib.parse import quote

from .. import textnorm
from ..errors import FixtureMissing
from .config import SourceConfig
from .models import (CandidateRecord, FailureClass, Query, QueryOutcome, SOURCES,
                     SourceHealth, make_failure)
from .transport import HttpRequest, RawResponse, Transport, request_key

CROSSREF_WORKS_URL = "https://api.crossref.org/works"
PUBMED_ESEARCH_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi"
PUBMED_ESUMMARY_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esummary.fcgi"
ARXIV_QUERY_URL = "https://export.arxiv.org/api/query"
S2_PAPER_URL = "https://api.semanticscholar.org/graph/v1/paper"

S2_FIELDS = "title,authors,year,venue,externalIds,publicationTypes"

SOURCE_CAPABILITIES: dict[str, frozenset[str]] = {
    "crossref": frozenset({"doi_lookup", "title_search", "title_author_search",
                           "relaxed_search"}),
    "pubmed": frozenset({"doi_lookup", "pmid_lookup", "title_search",
                         "title_author_search", "relaxed_search"}),
    "arxiv": frozenset({"arxiv_lookup", "title_search", "title_author_search",
                        "relaxed_search"}),
    "semantic_scholar": frozenset({"doi_lookup", "pmid_lookup", "arxiv_lookup",
                                   "title_search", "title_author_search",
                                   "relaxed_search"}),
}


def supports(source: str, kind: str) -> bool:
    return kind in SOURCE_CAPABILITIES[source]


def classify_failure(status: int | None, body_state: str = "ok",
                     io_error: str | None = None) -> FailureClass:
    """Map raw response signals to a failure class.

    io_error -> transport; 401/403 -> authentication; 429 -> rate_limit;
    404 or an empty result set -> not_found; 5xx -> transport; a 2xx body
    that cannot be parsed -> payload_shape. Remaining 4xx responses arrived
    but are unusable, so they also classify as payload_shape.
    """
    if io_error is not None:
        return make_failure("transport", io_error)
    if status in (401, 403):
        return make_failure("authentication", f"HTTP {status}")
    if status == 429:
        return make_failure("rate_limit", "HTTP 429")
    if status == 404:
        return make_failure("not_found", "HTTP 404")
    if status is not None and status >= 500:
        return make_failure("transport", f"HTTP {status}")
    if status is not None and 200 <= status < 300:
        if body_state == "malformed":
            return make_failure("payload_shape", "response body could not be parsed")
        if body_state == "empty":
            return make_failure("not_found", "empty result set")
        raise ValueError("classify_failure called with no abnormal signal")
    return make_failure("payload_shape", f"unexpected HTTP status {status}")


# --------------------------------------------------------------------------
# Request builders (pure; also used by fixture tooling to precompute keys)
# --------------------------------------------------------------------------

def build_requests(source: str, query: Query, config: SourceConfig) -> list[HttpRequest]:
    """Initial request(s) for a query. PubMed's esummary step is derived later."""
    if source == "crossref":
        return [crossref_request(query, config)]
    if source == "pubmed":
        return [pubmed_esearch_request(query, config)]
    if source == "arxiv":
        return [arxiv_request(query, config)]
    if source == "semantic_scholar":
        return [s2_request(query, config)]
    raise ValueError(f"unknown source: {source}")


def crossref_request(query: Query, config: SourceConfig) -> HttpRequest:
    auth = (("mailto", config.crossref_mailto),) if config.crossref_mailto else ()
    if query.kind == "doi_lookup":
        return HttpRequest(source="crossref",
                           url=f"{CROSSREF_WORKS_URL}/{quote(query.text, safe='')}",
                           auth_params=auth)
    return HttpRequest(source="crossref", url=CROSSREF_WORKS_URL,
                       params=(("query.bibliographic", query.text),
                               ("rows", str(query.limit))),
                       auth_params=auth)


def pubmed_term(query: Query) -> str:
    if query.kind == "doi_lookup":
        return f"{query.text}[doi]"
    term = query.text
    if query.year is not None:
        term = f"{term} AND {query.year}[pdat]"
    return term


def pubmed_esearch_request(query: Query, config: SourceConfig) -> HttpRequest:
    auth = (("api_key", config.pubmed_api_key),) if config.pubmed_api_key else ()
    return HttpRequest(source="pubmed", url=PUBMED_ESEARCH_URL,
                       params=(("db", "pubmed"), ("retmax", str(query.limit)),
                               ("retmode", "json"), ("term", pubmed_term(query))),
                       auth_params=auth)


def pubmed_esummary_request(ids: list[str], config: SourceConfig) -> HttpRequest:
    auth = (("api_key", config.pubmed_api_key),) if config.pubmed_api_key else ()
    return HttpRequest(source="pubmed", url=PUBMED_ESUMMARY_URL,
                       params=(("db", "pubmed"), ("id", ",".join(ids)),
                               ("retmode", "json")),
                       auth_params=auth)


def arxiv_request(query: Query, config: SourceConfig) -> HttpRequest:
    if query.kind == "arxiv_lookup":
        params = (("id_list", query.text), ("max_results", str(query.limit)))
    else:
        params = (("search_query", f'all:"{query.text}"'),
                  ("start", "0"), ("max_results", str(query.limit)))
    return HttpRequest(source="arxiv", url=ARXIV_QUERY_URL, params=params)


def s2_request(query: Query, config: SourceConfig) -> HttpRequest:
    headers = (("x-api-key", config.s2_api_key),) if config.s2_api_key else ()
    if query.kind == "doi_lookup":
        url = f"{S2_PAPER_URL}/DOI:{quote(query.text, safe='')}"
    elif query.kind == "pmid_lookup":
        url = f"{S2_PAPER_URL}/PMID:{query.text}"
    elif query.kind == "arxiv_lookup":
        url = f"{S2_PAPER_URL}/ARXIV:{quote(query.text, safe='')}"
    else:
        return HttpRequest(source="semantic_scholar", url=f"{S2_PAPER_URL}/search",
                           params=(("query", query.text), ("limit", str(query.limit)),
                                   ("fields", S2_FIELDS)),
                           headers=headers)
    return HttpRequest(source="semantic_scholar", url=url,
                       params=(("fields", S2_FIELDS),), headers=headers)


# --------------------------------------------------------------------------
# Response parsing
# --------------------------------------------------------------------------

def _split_authors(names: list[str]) -> tuple[tuple[str, str], ...]:
    return tuple(textnorm.split_person_name(n) for n in names if n and n.strip())


def _crossref_year(work: dict) -> int | None:
    for field in ("issued", "published-print", "published-online", "created"):
        block = work.get(field) or {}
        parts = block.get("date-parts") or []
        if parts and parts[0] and isinstance(parts[0][0], int):
            return parts[0][0]
    return None


_CROSSREF_KIND = {"journal-article": "journal", "proceedings-article": "conference",
                  "posted-content": "preprint"}


def parse_crossref_work(work: dict, provenance: str) -> CandidateRecord | None:
    doi = textnorm.normalize_doi(work.get("DOI", "") or "")
    titles = work.get("title") or []
    title = textnorm.normalize_display(titles[0]) if titles else ""
    if not title and not doi:
        return None
    authors = []
    for author in work.get("author") or []:
        family = author.get("family") or ""
        given = author.get("given") or ""
        if family:
            authors.append((family, given))
    containers = work.get("container-title") or []
    venue = textnorm.normalize_display(containers[0]) if containers else None
    related: list[tuple[str, str]] = []
    relation = work.get("relation") or {}
    for rel_name in ("is-preprint-of", "has-preprint", "is-same-as"):
        for item in relation.get(rel_name) or []:
            if item.get("id-type") == "doi":
                rel_doi = textnorm.normalize_doi(str(item.get("id", "")))
                if rel_doi and rel_doi != doi:
                    related.append(("doi", rel_doi))
    return CandidateRecord(
        source="crossref",
        source_id=doi or title,
        title=title,
        authors=tuple(authors),
        year=_crossref_year(work),
        venue=venue,
        doi=doi,
        manifestation_kind=_CROSSREF_KIND.get(work.get("type", ""), "unknown"),
        related_ids=tuple(sorted(set(related))),
        raw_provenance=provenance,
    )


def parse_crossref_body(body: bytes, kind: str, provenance: str) -> list[CandidateRecord]:
    data = json.loads(body.decode("utf-8"))
    message = data["message"]
    works = [message] if kind == "doi_lookup" else message["items"]
    records = []
    for work in works:
        record = parse_crossref_work(work, provenance)
        if record is not None:
            records.append(record)
    return records


def _pubmed_year(pubdate: str) -> int | None:
    m = re.match(r"(\d{4})", pubdate or "")
    return int(m.group(1)) if m else None


def parse_pubmed_esearch(body: bytes) -> list[str]:
    data = json.loads(body.decode("utf-8"))
    return list(data["esearchresult"]["idlist"])


def parse_pubmed_esummary(body: bytes, provenance: str) -> list[CandidateRecord]:
    data = json.loads(body.decode("utf-8"))
    result = data["result"]
    records = []
    for uid in result.get("uids", []):
        item = result.get(uid)
        if not isinstance(item, dict):
            continue
        doi = None
        for article_id in item.get("articleids", []):
            if article_id.get("idtype") == "doi":
                doi = textnorm.normalize_doi(str(article_id.get("value", "")))
                break
        if doi is None:
            eloc = item.get("elocationid", "")
            if eloc:
                doi = textnorm.normalize_doi(eloc)
        records.append(CandidateRecord(
            source="pubmed",
            source_id=str(uid),
            title=textnorm.normalize_display(item.get("title", "")).rstrip("."),
            authors=_split_authors([a.get("name", "") for a in item.get("authors", [])]),
            year=_pubmed_year(item.get("pubdate", "")),
            venue=textnorm.normalize_display(
                item.get("fulljournalname") or item.get("source") or "") or None,
            doi=doi,
            pmid=str(uid),
            manifestation_kind="journal",
            raw_provenance=provenance,
        ))
    return records


_ATOM_NS = "{http://www.w3.org/2005/Atom}"
_ARXIV_NS = "{http://arxiv.org/schemas/atom}"


def parse_arxiv_feed(body: bytes, provenance: str) -> list[CandidateRecord]:
    root = ET.fromstring(body.decode("utf-8"))
    records = []
    for entry in root.findall(f"{_ATOM_NS}entry"):
        raw_id = (entry.findtext(f"{_ATOM_NS}id") or "").strip()
        parsed = textnorm.normalize_arxiv_id(raw_id)
        if parsed is None:
            continue
        arxiv_id, _version = parsed
        title = textnorm.normalize_display(entry.findtext(f"{_ATOM_NS}title") or "")
        authors = [(a.findtext(f"{_ATOM_NS}name") or "").strip()
                   for a in entry.findall(f"{_ATOM_NS}author")]
        published = entry.findtext(f"{_ATOM_NS}published") or ""
        year = int(published[:4]) if re.match(r"\d{4}", published) else None
        related: list[tuple[str, str]] = []
        journal_doi = entry.findtext(f"{_ARXIV_NS}doi")
        if journal_doi:
            normalized = textnorm.normalize_doi(journal_doi)
            if normalized:
                # A publisher DOI asserted by arXiv names the *published*
                # manifestation, so it is a cross-assertion, not a direct id.
                related.append(("doi", normalized))
        records.append(CandidateRecord(
            source="arxiv",
            source_id=arxiv_id,
            title=title,
            authors=_split_authors(authors),
            year=year,
            venue=None,
            arxiv_id=arxiv_id,
            manifestation_kind="preprint",
            related_ids=tuple(related),
            raw_provenance=provenance,
        ))
    return records


_S2_KIND = {"JournalArticle": "journal", "Conference": "conference"}


def parse_s2_paper(paper: dict, provenance: str) -> CandidateRecord | None:
    paper_id = paper.get("paperId")
    title = textnorm.normalize_display(paper.get("title") or "")
    if not paper_id or not title:
        return None
    external = paper.get("externalIds") or {}
    doi = textnorm.normalize_doi(str(external.get("DOI", ""))) if external.get("DOI") else None
    arxiv = external.get("ArXiv")
    arxiv_id = None
    if arxiv:
        parsed = textnorm.normalize_arxiv_id(str(arxiv))
        arxiv_id = parsed[0] if parsed else None
    pmid = str(external.get("PubMed")) if external.get("PubMed") else None
    kind = "unknown"
    for pub_type in paper.get("publicationTypes") or []:
        if pub_type in _S2_KIND:
            kind = _S2_KIND[pub_type]
            break
    if kind == "unknown" and arxiv_id and not paper.get("venue"):
        kind = "preprint"
    return CandidateRecord(
        source="semantic_scholar",
        source_id=str(paper_id),
        title=title,
        authors=_split_authors([a.get("name", "") for a in paper.get("authors") or []]),
        year=paper.get("year"),
        venue=textnorm.normalize_display(paper.get("venue") or "") or None,
        doi=doi,
        pmid=pmid,
        arxiv_id=arxiv_id,
        manifestation_kind=kind,
        raw_provenance=provenance,
    )


def parse_s2_body(body: bytes, kind: str, provenance: str) -> list[CandidateRecord]:
    data = json.loads(body.decode("utf-8"))
    papers = data.get("data", []) if kind not in ("doi_lookup", "pmid_lookup",
                                                  "arxiv_lookup") else [data]
    records = []
    for paper in papers:
        record = parse_s2_paper(paper, provenance)
        if record is not None:
            records.append(record)
    return records


# --------------------------------------------------------------------------
# Query execution
# --------------------------------------------------------------------------

def _failure_outcome(source: str, query: Query, failure: FailureClass,
                     latency_ms: int) -> QueryOutcome:
    return QueryOutcome(source=source, query=query, failure=failure, latency_ms=latency_ms)


def _response_failure(response: RawResponse) -> FailureClass | None:
    """FailureClass for a transport-level problem, None when 2xx arrived."""
    if response.io_error is not None:
        return classify_failure(None, io_error=response.io_error)
    if response.status is None or not (200 <= response.status < 300):
        return classify_failure(response.status)
    return None


def query_source(source: str, query: Query, transport: Transport,
                 config: SourceConfig) -> QueryOutcome:
    """Run one query against one source; remote failures become values.

    Raises ValueError only for local misuse: a disabled source or a query
    kind the source cannot serve.
    """
    if not config.is_enabled(source):
        raise ValueError(f"source {source!r} is not enabled")
    if not supports(source, query.kind):
        raise ValueError(f"source {source!r} does not support {query.kind}")

    try:
        if source == "pubmed":
            return _query_pubmed(query, transport, config)
        request = build_requests(source, query, config)[0]
        key = request_key(request)
        response = transport.fetch(request)
        failure = _response_failure(response)
        if failure is not None:
            return _failure_outcome(source, query, failure, response.latency_ms)
        try:
            if source == "crossref":
                records = parse_crossref_body(response.body, query.kind, key)
            elif source == "arxiv":
                records = parse_arxiv_feed(response.body, key)
            else:
                records = parse_s2_body(response.body, query.kind, key)
        except (ValueError, KeyError, TypeError, ET.ParseError) as exc:
            failure = classify_failure(response.status, "malformed")
            failure = FailureClass(failure.failure, f"{failure.detail}: {exc}",
                                   failure.retryable)
            return _failure_outcome(source, query, failure, response.latency_ms)
        if not records:
            return _failure_outcome(source, query, classify_failure(response.status, "empty"),
                                    response.latency_ms)
        return QueryOutcome(source=source, query=query, records=tuple(records),
                            latency_ms=response.latency_ms)
    except FixtureMissing as exc:
        # Incomplete fixture stores degrade to a transport failure so replay
        # runs report health instead of crashing mid-batch.
        return _failure_outcome(source, query,
                                make_failure("transport", str(exc)), 0)


def _query_pubmed(query: Query, transport: Transport, config: SourceConfig) -> QueryOutcome:
    if query.kind == "pmid_lookup":
        ids = [query.text]
        latency = 0
    else:
        search_request = pubmed_esearch_request(query, config)
        search_response = transport.fetch(search_request)
        failure = _response_failure(search_response)
        if failure is not None:
            return _failure_outcome("pubmed", query, failure, search_response.latency_ms)
        try:
            ids = parse_pubmed_esearch(search_response.body)
        except (ValueError, KeyError, TypeError) as exc:
            failure = classify_failure(search_response.status, "malformed")
            failure = FailureClass(failure.failure, f"{failure.detail}: {exc}",
                                   failure.retryable)
            return _failure_outcome("pubmed", query, failure, search_response.latency_ms)
        if not ids:
            return _failure_outcome("pubmed", query,
                                    classify_failure(search_response.status, "empty"),
                                    search_response.latency_ms)
        ids = ids[: query.limit]
        latency = search_response.latency_ms

    summary_request = pubmed_esummary_request(ids, config)
    key = request_key(summary_request)
    summary_response = transport.fetch(summary_request)
    latency += summary_response.latency_ms
    failure = _response_failure(summary_response)
    if failure is not None:
        return _failure_outcome("pubmed", query, failure, latency)
    try:
        records = parse_pubmed_esummary(summary_response.body, key)
    except (ValueError, KeyError, TypeError) as exc:
        failure = classify_failure(summary_response.status, "malformed")
        failure = FailureClass(failure.failure, f"{failure.detail}: {exc}", failure.retryable)
        return _failure_outcome("pubmed", query, failure, latency)
    if not records:
        return _failure_outcome("pubmed", query,
                                classify_failure(summary_response.status, "empty"), latency)
    return QueryOutcome(source="pubmed", query=query, records=tuple(records),
                        latency_ms=latency)


def sort_candidates(records: list[CandidateRecord]) -> list[CandidateRecord]:
    """Canonical order, so merged multi-source results are schedule-independent."""
    return sorted(records, key=lambda r: (r.source, r.source_id))


def summarize_health(outcomes: list[QueryOutcome], config: SourceConfig) -> list[SourceHealth]:
    """One SourceHealth per known source, disabled ones included (all zero).

    not_found outcomes count as succeeded: an authoritative "no such
    record" is a working source, not a failing one.
    """
    health = []
    for source in SOURCES:
        attempted = succeeded = 0
        failures: dict[str, int] = {}
        for outcome in outcomes:
            if outcome.source != source:
                continue
            attempted += 1
            if outcome.ok or (outcome.failure is not None
                              and outcome.failure.failure == "not_found"):
                succeeded += 1
            else:
                assert outcome.failure is not None
                failures[outcome.failure.failure] = failures.get(outcome.failure.failure, 0) + 1
        health.append(SourceHealth(
            source=source,
            attempted=attempted,
            succeeded=succeeded,
            failures_by_class=tuple(sorted(failures.items())),
            enabled=config.is_enabled(source),
        ))
    return health
