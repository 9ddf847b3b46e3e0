"""Match scoring, candidate clustering, and multi-pass verification.

Confidence is a fixed, documented combination of field signals:

    weighted = 0.5*title + 0.2*authors + 0.15*year_term + 0.15*venue
    year_term: exact 1.0, off_by_one 0.7, absent 0.5, mismatch 0.0

with an identifier override on top: a shared identifier that matches
exactly (and a title that is at least plausible, >= 0.6) lifts confidence
to at least 0.95; a shared identifier that *differs* caps it at 0.5 no
matter how good the text looks. Verification runs up to three passes and
only escalates while the best confidence stays below 0.6.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import textnorm
from .errors import NoQueryPossible
from .extraction.models import ReferenceInput
from .sources import (CandidateRecord, Query, QueryOutcome, SourceConfig, Transport,
                      query_source, sort_candidates, supports)
from .sources.models import DEFAULT_QUERY_LIMIT, SOURCES

VERIFIED_THRESHOLD = 0.9
WEAK_THRESHOLD = 0.6
CLUSTER_TITLE_THRESHOLD = 0.9
TITLE_MISMATCH_THRESHOLD = 0.6
AUTHOR_MISMATCH_THRESHOLD = 0.5
VENUE_MISMATCH_THRESHOLD = 0.3
RELAXED_QUERY_WORDS = 6
DEFAULT_WORKERS = 4

ISSUE_CODES = ("title_mismatch", "identifier_conflict", "year_disagreement",
               "author_mismatch", "insufficient_evidence", "manifestation_conflict",
               "venue_mismatch")

BLOCKING_ISSUES = frozenset({"identifier_conflict", "manifestation_conflict",
                             "title_mismatch"})

STATUSES = ("verified", "needs_review", "unresolved", "not_checked")

# Exactly 50 entries; relaxed (pass 3) queries drop these before truncating
# the title to its first 6 content words.
STOP_WORDS = frozenset({
    "a", "about", "above", "after", "against", "all", "an", "and", "any", "are",
    "as", "at", "be", "been", "between", "both", "but", "by", "for", "from",
    "further", "has", "have", "in", "into", "is", "it", "its", "more", "no",
    "not", "of", "on", "or", "over", "so", "some", "such", "than", "that",
    "the", "their", "this", "through", "to", "under", "until", "up", "via",
    "with",
})

# Venue tokens expanded before similarity; keys are period-stripped tokens.
VENUE_ABBREVIATIONS = {
    "proc": "proceedings", "conf": "conference", "int": "international",
    "intl": "international", "j": "journal", "trans": "transactions",
    "assoc": "association", "soc": "society", "natl": "national",
    "acad": "academy", "sci": "sciences", "ann": "annals", "rev": "review",
    "res": "research", "lett": "letters", "symp": "symposium",
    "med": "medicine", "biol": "biology", "chem": "chemistry",
    "phys": "physics", "comput": "computing", "eng": "engineering",
    "am": "american", "eur": "european",
}

_YEAR_TERM = {"exact": 1.0, "off_by_one": 0.7, "absent": 0.5, "mismatch": 0.0}


@dataclass(frozen=True)
class MatchScore:
    title_sim: float
    author_sim: float
    year_signal: str  # exact | off_by_one | mismatch | absent
    venue_sim: float
    identifier_signal: str  # exact | conflict | absent
    confidence: float

    def __post_init__(self) -> None:
        if self.identifier_signal == "conflict" and self.confidence > 0.5:
            raise ValueError("identifier conflict must cap confidence at 0.5")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range: {self.confidence}")

    def to_dict(self) -> dict:
        return {
            "title_sim": round(self.title_sim, 6),
            "author_sim": round(self.author_sim, 6),
            "year_signal": self.year_signal,
            "venue_sim": round(self.venue_sim, 6),
            "identifier_signal": self.identifier_signal,
            "confidence": round(self.confidence, 6),
        }


@dataclass(frozen=True)
class MatchCluster:
    members: tuple[CandidateRecord, ...]  # sorted by (source, source_id)
    cluster_key: str
    best_score: MatchScore
    best_member: CandidateRecord
    member_scores: tuple[tuple[str, MatchScore], ...]  # keyed by source:source_id


@dataclass(frozen=True)
class Issue:
    code: str
    detail: str

    def __post_init__(self) -> None:
        if self.code not in ISSUE_CODES:
            raise ValueError(f"unknown issue code: {self.code}")


@dataclass(frozen=True)
class EntryVerdict:
    entry: ReferenceInput
    status: str
    confidence: float
    issues: tuple[Issue, ...]
    chosen: CandidateRecord | None
    evidence: tuple[tuple[int, Query, dict], ...]  # (pass, query, outcome digest)
    passes_used: int
    outcomes: tuple[QueryOutcome, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status: {self.status}")


# --------------------------------------------------------------------------
# Field similarities
# --------------------------------------------------------------------------

def title_similarity(a: str | None, b: str | None) -> float:
    if not a or not b:
        return 0.0
    return textnorm.token_jaccard(a, b)


def _initials_compatible(given_a: str, given_b: str) -> bool:
    ia, ib = textnorm.initials_of(given_a), textnorm.initials_of(given_b)
    if not ia or not ib:
        return True  # one side has no given name: cannot contradict
    return ia[0] == ib[0]


def author_similarity(query_authors: tuple[tuple[str, str], ...],
                      candidate_authors: tuple[tuple[str, str], ...]) -> float:
    """Fraction of query family names found in the candidate list.

    A family-name hit also requires initial-compatible given names when
    both sides carry one. With authors missing on either side there is
    nothing to confirm or contradict, which scores a neutral 0.5.
    """
    if not query_authors or not candidate_authors:
        return 0.5
    cand = [(textnorm.family_key(f), g) for f, g in candidate_authors]
    matched = 0
    for family, given in query_authors:
        key = textnorm.family_key(family)
        for cand_key, cand_given in cand:
            if key and key == cand_key and _initials_compatible(given, cand_given):
                matched += 1
                break
    return matched / len(query_authors)


def year_signal(query_year: int | None, candidate_year: int | None) -> str:
    if query_year is None or candidate_year is None:
        return "absent"
    delta = abs(query_year - candidate_year)
    if delta == 0:
        return "exact"
    if delta == 1:
        return "off_by_one"  # covers preprint/publication drift
    return "mismatch"


def _expand_venue(venue: str) -> str:
    tokens = []
    for token in re.split(r"\s+", venue):
        stripped = token.rstrip(".").casefold()
        tokens.append(VENUE_ABBREVIATIONS.get(stripped, token))
    return " ".join(tokens)


def venue_similarity(a: str | None, b: str | None) -> float:
    """Token Jaccard after abbreviation expansion; vacuous agreement is 1.0."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.5
    return textnorm.token_jaccard(_expand_venue(a), _expand_venue(b))


def identifier_signal(entry_ids: dict[str, str], candidate_ids: dict[str, str]) -> str:
    """exact / conflict / absent over shared identifier types.

    When one shared type matches and another differs, conflict wins: a
    contradicted identifier is never overridden by an agreeing one.
    """
    shared = set(entry_ids) & set(candidate_ids)
    if not shared:
        return "absent"
    if any(entry_ids[k] != candidate_ids[k] for k in shared):
        return "conflict"
    return "exact"


def score_match(entry: ReferenceInput, candidate: CandidateRecord) -> MatchScore:
    t_sim = title_similarity(entry.title, candidate.title)
    a_sim = author_similarity(entry.authors, candidate.authors)
    y_sig = year_signal(entry.year, candidate.year)
    v_sim = venue_similarity(entry.venue, candidate.venue)
    id_sig = identifier_signal(entry.identifier_map(), candidate.identifier_map())

    weighted = 0.5 * t_sim + 0.2 * a_sim + 0.15 * _YEAR_TERM[y_sig] + 0.15 * v_sim
    if id_sig == "exact" and t_sim >= TITLE_MISMATCH_THRESHOLD:
        confidence = max(0.95, weighted)
    elif id_sig == "conflict":
        confidence = min(weighted, 0.5)
    else:
        confidence = weighted
    confidence = min(1.0, max(0.0, confidence))
    return MatchScore(title_sim=t_sim, author_sim=a_sim, year_signal=y_sig,
                      venue_sim=v_sim, identifier_signal=id_sig, confidence=confidence)


# --------------------------------------------------------------------------
# Query planning
# --------------------------------------------------------------------------

def relaxed_query_text(title: str) -> str:
    """First 6 content words of the title, stop words removed."""
    folded = textnorm.fold_diacritics(title).casefold()
    words = [w for w in re.split(r"[^0-9a-z]+", folded) if w and w not in STOP_WORDS]
    return " ".join(words[:RELAXED_QUERY_WORDS])


def build_pass_query(entry: ReferenceInput, pass_number: int,
                     limit: int = DEFAULT_QUERY_LIMIT) -> Query:
    """Canonical query for a retrieval pass, independent of source capability.

    Pass 1 is the most direct: an identifier lookup when the entry has one
    (doi, then pmid, then arXiv), else a full-title search. Pass 2 narrows
    by first-author family name and year; pass 3 relaxes to the leading
    content words. Identifier-only entries degrade to their pass-1 query.
    """
    if pass_number not in (1, 2, 3):
        raise ValueError(f"pass must be 1..3, got {pass_number}")
    ids = entry.identifier_map()
    if not ids and not entry.title:
        raise NoQueryPossible(f"entry #{entry.ordinal} has no identifiers and no title")

    if pass_number == 1 or not entry.title:
        if "doi" in ids:
            return Query(kind="doi_lookup", text=ids["doi"], limit=limit)
        if "pmid" in ids:
            return Query(kind="pmid_lookup", text=ids["pmid"], limit=limit)
        if "arxiv" in ids:
            return Query(kind="arxiv_lookup", text=ids["arxiv"], limit=limit)
        return Query(kind="title_search", text=entry.title, limit=limit)
    if pass_number == 2:
        if entry.authors:
            family = entry.authors[0][0]
            return Query(kind="title_author_search", text=f"{entry.title} {family}",
                         year=entry.year, limit=limit)
        return Query(kind="title_search", text=entry.title, year=entry.year, limit=limit)
    return Query(kind="relaxed_search", text=relaxed_query_text(entry.title),
                 year=entry.year, limit=limit)


def source_pass_query(entry: ReferenceInput, pass_number: int, source: str,
                      limit: int = DEFAULT_QUERY_LIMIT) -> Query | None:
    """The most direct pass query *this source* can serve.

    Pass 1 walks the identifier chain filtered by source capability and
    falls back to a title search, so e.g. an arXiv-cited entry still
    reaches Crossref by title in the same pass. Later passes are text
    searches every source supports. None means the source has nothing to
    contribute for this entry.
    """
    generic = build_pass_query(entry, pass_number, limit=limit)
    if supports(source, generic.kind):
        return generic
    if generic.kind in ("doi_lookup", "pmid_lookup", "arxiv_lookup"):
        ids = entry.identifier_map()
        for id_kind, query_kind in (("doi", "doi_lookup"), ("pmid", "pmid_lookup"),
                                    ("arxiv", "arxiv_lookup")):
            if id_kind in ids and supports(source, query_kind):
                return Query(kind=query_kind, text=ids[id_kind], limit=limit)
        if entry.title:
            return Query(kind="title_search", text=entry.title, limit=limit)
    return None


# --------------------------------------------------------------------------
# Clustering
# --------------------------------------------------------------------------

def _dedupe(candidates: list[CandidateRecord]) -> list[CandidateRecord]:
    seen: set[tuple[str, str]] = set()
    out = []
    for record in candidates:
        key = (record.source, record.source_id)
        if key not in seen:
            seen.add(key)
            out.append(record)
    return out


def cluster_join(a: CandidateRecord, b: CandidateRecord) -> bool:
    """Pairwise join predicate: shared identifier (direct or asserted), or
    near-identical titles with compatible years."""
    if a.all_identifiers() & b.all_identifiers():
        return True
    if title_similarity(a.title, b.title) >= CLUSTER_TITLE_THRESHOLD:
        if a.year is None or b.year is None or abs(a.year - b.year) <= 1:
            return True
    return False


def _member_key(record: CandidateRecord) -> str:
    return f"{record.source}:{record.source_id}"


def _cluster_key(members: list[CandidateRecord]) -> str:
    dois = sorted(r.doi for r in members if r.doi)
    if dois:
        return dois[0]
    return min(f"{textnorm.match_key(r.title)}|{r.year if r.year is not None else ''}"
               for r in members)


def dedupe_and_cluster(candidates: list[CandidateRecord],
                       entry: ReferenceInput) -> list[MatchCluster]:
    """Partition candidates into work clusters, best match first.

    Exact duplicates (same source and source_id) collapse before the
    transitive closure of `cluster_join` groups the rest. Every candidate
    lands in exactly one cluster.
    """
    unique = sort_candidates(_dedupe(candidates))
    n = len(unique)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if cluster_join(unique[i], unique[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj

    groups: dict[int, list[CandidateRecord]] = {}
    for i, record in enumerate(unique):
        groups.setdefault(find(i), []).append(record)

    clusters = []
    for members in groups.values():
        members = sorted(members, key=lambda r: (r.source, r.source_id))
        scores = [(m, score_match(entry, m)) for m in members]
        # Highest confidence wins; exact ties resolve to the smallest
        # (source, source_id) key so clustering stays deterministic.
        top = max(s.confidence for _, s in scores)
        tied = [(m, s) for m, s in scores if s.confidence == top]
        best_member, best_score = min(tied, key=lambda pair: _member_key(pair[0]))
        clusters.append(MatchCluster(
            members=tuple(members),
            cluster_key=_cluster_key(members),
            best_score=best_score,
            best_member=best_member,
            member_scores=tuple((_member_key(m), s) for m, s in scores),
        ))
    clusters.sort(key=lambda c: (-c.best_score.confidence, c.cluster_key))
    return clusters


# --------------------------------------------------------------------------
# Issues and verdicts
# --------------------------------------------------------------------------

def derive_issues(entry: ReferenceInput, best_cluster: MatchCluster | None,
                  chosen: CandidateRecord | None = None,
                  chosen_score: MatchScore | None = None) -> list[Issue]:
    """Classify discrepancies between the entry and its best cluster.

    At most one issue per code; codes are the only classification channel.
    `chosen` defaults to the cluster's best-scoring member.
    """
    issues: dict[str, Issue] = {}
    if best_cluster is None:
        issues["insufficient_evidence"] = Issue(
            code="insufficient_evidence",
            detail="no candidate records retrieved after all passes")
        return [issues["insufficient_evidence"]]

    if chosen is None:
        chosen = best_cluster.best_member
        chosen_score = best_cluster.best_score
    if chosen_score is None:
        chosen_score = score_match(entry, chosen)

    if chosen_score.title_sim < TITLE_MISMATCH_THRESHOLD:
        issues["title_mismatch"] = Issue(
            code="title_mismatch",
            detail=f"title similarity {chosen_score.title_sim:.2f} below "
                   f"{TITLE_MISMATCH_THRESHOLD} against {chosen.source}:{chosen.source_id}")
    if chosen_score.identifier_signal == "conflict":
        conflicting = sorted(set(entry.identifier_map()) & set(chosen.identifier_map()))
        issues["identifier_conflict"] = Issue(
            code="identifier_conflict",
            detail=f"shared identifier(s) {', '.join(conflicting)} disagree with "
                   f"{chosen.source}:{chosen.source_id}")
    if chosen_score.year_signal == "mismatch":
        issues["year_disagreement"] = Issue(
            code="year_disagreement",
            detail=f"cited year {entry.year} vs source year {chosen.year}")
    if chosen_score.author_sim < AUTHOR_MISMATCH_THRESHOLD and len(entry.authors) >= 2:
        issues["author_mismatch"] = Issue(
            code="author_mismatch",
            detail=f"only {chosen_score.author_sim:.0%} of cited family names matched")
    if (entry.venue and chosen.venue
            and chosen_score.venue_sim < VENUE_MISMATCH_THRESHOLD):
        issues["venue_mismatch"] = Issue(
            code="venue_mismatch",
            detail=f"venue similarity {chosen_score.venue_sim:.2f} below "
                   f"{VENUE_MISMATCH_THRESHOLD}")
    if best_cluster.best_score.confidence < WEAK_THRESHOLD:
        issues["insufficient_evidence"] = Issue(
            code="insufficient_evidence",
            detail=f"best confidence {best_cluster.best_score.confidence:.2f} below "
                   f"{WEAK_THRESHOLD}")
    return [issues[code] for code in ISSUE_CODES if code in issues]


def _status_for(confidence: float, issues: list[Issue], has_candidates: bool) -> str:
    blocking = any(i.code in BLOCKING_ISSUES for i in issues)
    if confidence >= VERIFIED_THRESHOLD and not blocking:
        return "verified"
    if confidence >= WEAK_THRESHOLD or (blocking and has_candidates):
        return "needs_review"
    return "unresolved"


def verify_entry(entry: ReferenceInput, transport: Transport, config: SourceConfig,
                 limit: int = DEFAULT_QUERY_LIMIT) -> EntryVerdict:
    """Run up to three retrieval passes and produce the entry's verdict.

    Candidates accumulate across passes and the final clustering runs over
    the whole union. Connector failures fold into the evidence trace and
    the not_checked status; nothing here raises for remote trouble.
    """
    from . import manifestations  # deferred: manifestations imports our types

    enabled = [s for s in SOURCES if config.is_enabled(s)]
    evidence: list[tuple[int, Query, dict]] = []
    outcomes: list[QueryOutcome] = []
    collected: list[CandidateRecord] = []
    passes_used = 0

    if enabled:
        for pass_number in (1, 2, 3):
            passes_used = pass_number
            for source in enabled:
                query = source_pass_query(entry, pass_number, source, limit=limit)
                if query is None:
                    continue
                outcome = query_source(source, query, transport, config)
                outcomes.append(outcome)
                evidence.append((pass_number, query, outcome.digest()))
                if outcome.records:
                    collected.extend(outcome.records)
            best = 0.0
            for record in _dedupe(collected):
                best = max(best, score_match(entry, record).confidence)
            if best >= WEAK_THRESHOLD:
                break

    # not_checked covers: no sources enabled, no source able to serve any
    # query for this entry (nothing attempted), or every attempt failing
    # with a real failure class (not_found is evidence, not failure).
    not_checked = (not enabled) or (not outcomes) or all(
        o.failure is not None and o.failure.failure != "not_found"
        for o in outcomes
    )
    if not_checked:
        return EntryVerdict(
            entry=entry, status="not_checked", confidence=0.0, issues=(),
            chosen=None, evidence=tuple(evidence), passes_used=max(passes_used, 1),
            outcomes=tuple(outcomes),
        )

    clusters = dedupe_and_cluster(collected, entry)
    best_cluster = clusters[0] if clusters else None
    chosen: CandidateRecord | None = None
    chosen_score: MatchScore | None = None
    issues: list[Issue] = []

    if best_cluster is not None:
        mset = manifestations.group_manifestations(best_cluster, entry)
        chosen, conflict_issue = manifestations.resolve_preference(mset)
        key = _member_key(chosen)
        chosen_score = dict(best_cluster.member_scores).get(key) or score_match(entry, chosen)
        issues = derive_issues(entry, best_cluster, chosen, chosen_score)
        if conflict_issue is not None:
            issues = sorted(issues + [conflict_issue],
                            key=lambda i: ISSUE_CODES.index(i.code))
    else:
        issues = derive_issues(entry, None)

    confidence = chosen_score.confidence if chosen_score is not None else 0.0
    status = _status_for(confidence, issues, chosen is not None)
    return EntryVerdict(
        entry=entry, status=status, confidence=confidence, issues=tuple(issues),
        chosen=chosen, evidence=tuple(evidence), passes_used=passes_used,
        outcomes=tuple(outcomes),
    )


def verify_entries(entries: list[ReferenceInput], transport: Transport,
                   config: SourceConfig, limit: int = DEFAULT_QUERY_LIMIT,
                   workers: int = DEFAULT_WORKERS) -> list[EntryVerdict]:
    """Verify a batch; entries run concurrently, output order matches input."""
    if workers <= 1 or len(entries) <= 1:
        return [verify_entry(e, transport, config, limit=limit) for e in entries]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda e: verify_entry(e, transport, config, limit=limit),
                             entries))
