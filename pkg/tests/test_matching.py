"""Matcher: scoring formula, pass planning, clustering, verdict assembly."""

from __future__ import annotations

import itertools
import random

import pytest

import corpus
from citecheck.extraction import extract_references
from citecheck.extraction.models import RawReference, ReferenceInput
from citecheck.matching import (STOP_WORDS, build_pass_query, cluster_join,
                                dedupe_and_cluster, derive_issues,
                                relaxed_query_text, score_match, source_pass_query,
                                title_similarity, verify_entry)
from citecheck.sources import CandidateRecord, FixtureStore, ReplayTransport
from citecheck.sources.config import SourceConfig

CONFIG = corpus.CONFIG


def make_entry(title="A study of things", authors=(("Doe", "Jane"),), year=2020,
               venue="Nature", doi=None, pmid=None, arxiv=None, ordinal=1,
               kind="journal") -> ReferenceInput:
    raw = RawReference(source_span=(0, 10), original_text="0123456789",
                       origin_format="bibtex", ordinal=ordinal, citation_key=f"k{ordinal}",
                       source_path="mem.bib")
    return ReferenceInput(raw=raw, title=title, authors=tuple(authors), year=year,
                          venue=venue, doi=doi, pmid=pmid, arxiv_id=arxiv,
                          entry_kind=kind, fields={"title": title or ""})


def make_candidate(title="A study of things", authors=(("Doe", "Jane"),), year=2020,
                   venue="Nature", doi=None, pmid=None, arxiv=None,
                   source="crossref", source_id=None, kind="journal",
                   related=()) -> CandidateRecord:
    return CandidateRecord(source=source, source_id=source_id or f"{source}-{title[:8]}",
                           title=title, authors=tuple(authors), year=year, venue=venue,
                           doi=doi, pmid=pmid, arxiv_id=arxiv,
                           manifestation_kind=kind, related_ids=tuple(related))


# ---------------------------------------------------------------------------
# score_match
# ---------------------------------------------------------------------------

def test_identity_scores_full_confidence():
    entry = make_entry(doi="10.1/x")
    candidate = make_candidate(doi="10.1/x")
    score = score_match(entry, candidate)
    assert score.identifier_signal == "exact"
    assert score.title_sim == 1.0
    assert score.author_sim == 1.0
    assert score.year_signal == "exact"
    assert score.venue_sim == 1.0
    assert score.confidence == 1.0


def test_conflicting_doi_caps_confidence():
    entry = make_entry(doi="10.1/x")
    candidate = make_candidate(doi="10.1/DIFFERENT")
    score = score_match(entry, candidate)
    assert score.identifier_signal == "conflict"
    # Hand evaluation: weighted = 0.5*1 + 0.2*1 + 0.15*1 + 0.15*1 = 1.0,
    # conflict caps at 0.5.
    assert score.confidence == 0.5


def test_off_by_one_year_term():
    entry = make_entry(year=2023, venue=None)
    candidate = make_candidate(year=2024, venue=None)
    score = score_match(entry, candidate)
    assert score.year_signal == "off_by_one"
    # 0.5*1 + 0.2*1 + 0.15*0.7 + 0.15*1.0 (both venues absent) = 0.955
    assert score.confidence == pytest.approx(0.955)
    assert not any(i.code == "year_disagreement"
                   for i in derive_issues(entry, _single_cluster(entry, candidate)))


def test_identifier_override_requires_plausible_title():
    entry = make_entry(title="Completely different words here", doi="10.1/x",
                       authors=(), year=None, venue=None)
    candidate = make_candidate(title="Unrelated phrasing altogether", doi="10.1/x",
                               authors=(), year=None, venue=None)
    score = score_match(entry, candidate)
    assert score.identifier_signal == "exact"
    assert score.confidence < 0.95  # no override without title agreement


def test_weighted_formula_hand_check():
    entry = make_entry(title="alpha beta gamma delta", authors=(("Doe", "J."),),
                       year=2020, venue="Journal of Testing")
    candidate = make_candidate(title="alpha beta gamma epsilon",
                               authors=(("Doe", "Jane"), ("Extra", "E.")),
                               year=2020, venue="Journal of Testing")
    score = score_match(entry, candidate)
    assert score.title_sim == pytest.approx(3 / 5)
    assert score.author_sim == 1.0
    expected = 0.5 * (3 / 5) + 0.2 * 1.0 + 0.15 * 1.0 + 0.15 * 1.0
    assert score.confidence == pytest.approx(expected)


def test_title_similarity_symmetry_and_folding():
    assert title_similarity("Déjà vu: a study", "deja vu a STUDY") == 1.0
    rng = random.Random(3)
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    for _ in range(50):
        a = " ".join(rng.sample(words, rng.randint(1, 6)))
        b = " ".join(rng.sample(words, rng.randint(1, 6)))
        assert title_similarity(a, b) == title_similarity(b, a)


def test_author_similarity_neutral_when_missing():
    entry = make_entry(authors=())
    candidate = make_candidate()
    assert score_match(entry, candidate).author_sim == 0.5


# ---------------------------------------------------------------------------
# Pass planning
# ---------------------------------------------------------------------------

def test_pass1_prefers_identifier():
    entry = make_entry(doi="10.1/x", arxiv="2101.00001")
    query = build_pass_query(entry, 1)
    assert query.kind == "doi_lookup"
    assert query.text == "10.1/x"


def test_pass1_title_fallback():
    query = build_pass_query(make_entry(), 1)
    assert query.kind == "title_search"
    assert query.text == "A study of things"
    assert query.year is None


def test_pass2_title_author_with_year_hint():
    query = build_pass_query(make_entry(), 2)
    assert query.kind == "title_author_search"
    assert query.text == "A study of things Doe"
    assert query.year == 2020


def test_pass2_authorless_falls_back_to_title_search():
    query = build_pass_query(make_entry(authors=()), 2)
    assert query.kind == "title_search"
    assert query.year == 2020


def test_pass3_relaxed_first_six_content_words():
    title = "On the Rapid Convergence of Stochastic Gradient Methods for Deep Networks"
    entry = make_entry(title=title)
    query = build_pass_query(entry, 3)
    assert query.kind == "relaxed_search"
    # Hand tokenization: stop words removed, first 6 content words kept.
    assert query.text == "rapid convergence stochastic gradient methods deep"


def test_stop_word_list_has_exactly_fifty_entries():
    assert len(STOP_WORDS) == 50


def test_relaxed_text_strips_diacritics():
    assert relaxed_query_text("Études on naïve Bayes") == "etudes naive bayes"


def test_source_pass_query_adapts_to_capability():
    entry = make_entry(doi="10.1/x")
    assert source_pass_query(entry, 1, "crossref").kind == "doi_lookup"
    assert source_pass_query(entry, 1, "arxiv").kind == "title_search"
    arxiv_entry = make_entry(doi=None, arxiv="2101.00001")
    assert source_pass_query(arxiv_entry, 1, "arxiv").kind == "arxiv_lookup"
    assert source_pass_query(arxiv_entry, 1, "pubmed").kind == "title_search"


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------

def _single_cluster(entry, candidate):
    clusters = dedupe_and_cluster([candidate], entry)
    return clusters[0]


def test_same_doi_from_two_sources_one_cluster():
    entry = make_entry(doi="10.1/x")
    a = make_candidate(doi="10.1/x", source="crossref")
    b = make_candidate(doi="10.1/x", source="pubmed", pmid="1")
    clusters = dedupe_and_cluster([a, b], entry)
    assert len(clusters) == 1
    assert len(clusters[0].members) == 2


def test_unrelated_titles_two_clusters():
    entry = make_entry()
    a = make_candidate(title="Completely distinct topic one")
    b = make_candidate(title="Another unrelated subject two")
    assert len(dedupe_and_cluster([a, b], entry)) == 2


def test_related_id_links_manifestations():
    entry = make_entry(arxiv="2101.00001", kind="preprint")
    preprint = make_candidate(source="arxiv", arxiv="2101.00001", kind="preprint",
                              venue=None, related=(("doi", "10.1/pub"),))
    journal = make_candidate(source="crossref", doi="10.1/pub", year=2021)
    clusters = dedupe_and_cluster([preprint, journal], entry)
    assert len(clusters) == 1
    assert len(clusters[0].members) == 2


def test_exact_duplicates_collapse():
    entry = make_entry()
    a = make_candidate(source_id="dup")
    clusters = dedupe_and_cluster([a, a], entry)
    assert len(clusters) == 1
    assert len(clusters[0].members) == 1


def _brute_force_partition(records, entry):
    """Transitive closure over the pairwise join predicate, O(n^3)."""
    unique = []
    seen = set()
    for r in records:
        key = (r.source, r.source_id)
        if key not in seen:
            seen.add(key)
            unique.append(r)
    n = len(unique)
    linked = [[cluster_join(unique[i], unique[j]) or i == j for j in range(n)]
              for i in range(n)]
    changed = True
    while changed:
        changed = False
        for i, j, k in itertools.product(range(n), repeat=3):
            if linked[i][k] and linked[k][j] and not linked[i][j]:
                linked[i][j] = True
                changed = True
    groups = []
    assigned = set()
    for i in range(n):
        if i in assigned:
            continue
        group = {j for j in range(n) if linked[i][j]}
        assigned |= group
        groups.append(frozenset((unique[j].source, unique[j].source_id) for j in group))
    return frozenset(groups)


def _random_candidate(rng: random.Random) -> CandidateRecord:
    titles = ["alpha beta gamma delta", "alpha beta gamma epsilon",
              "totally different subject", "yet another topic entirely",
              "alpha beta gamma delta extended"]
    dois = [None, None, "10.1/a", "10.1/b", "10.2/c"]
    sources = ["crossref", "pubmed", "arxiv", "semantic_scholar"]
    related = rng.choice([(), (("doi", "10.1/a"),), (("arxiv", "2101.00001"),)])
    return CandidateRecord(
        source=rng.choice(sources),
        source_id=f"id{rng.randint(0, 9)}",
        title=rng.choice(titles),
        year=rng.choice([None, 2019, 2020, 2021, 2024]),
        doi=rng.choice(dois),
        arxiv_id=rng.choice([None, "2101.00001"]),
        manifestation_kind=rng.choice(["journal", "conference", "preprint", "unknown"]),
        related_ids=related,
    )


def test_clustering_matches_transitive_closure_oracle():
    rng = random.Random(1234)
    entry = make_entry(title="alpha beta gamma delta", doi="10.1/a")
    for _ in range(500):
        records = [_random_candidate(rng) for _ in range(rng.randint(0, 6))]
        clusters = dedupe_and_cluster(records, entry)
        mine = frozenset(
            frozenset((m.source, m.source_id) for m in c.members) for c in clusters)
        assert mine == _brute_force_partition(records, entry)


def test_every_candidate_in_exactly_one_cluster():
    rng = random.Random(99)
    entry = make_entry()
    for _ in range(100):
        records = [_random_candidate(rng) for _ in range(rng.randint(1, 6))]
        clusters = dedupe_and_cluster(records, entry)
        seen = [m for c in clusters for m in c.members]
        keys = {(r.source, r.source_id) for r in records}
        assert {(m.source, m.source_id) for m in seen} == keys
        assert len(seen) == len({(m.source, m.source_id) for m in seen})


def test_cluster_ordering_is_deterministic():
    entry = make_entry(title="alpha beta gamma delta")
    strong = make_candidate(title="alpha beta gamma delta", source_id="s")
    weak = make_candidate(title="alpha beta unrelated thing", source_id="w",
                          year=2020)
    clusters = dedupe_and_cluster([weak, strong], entry)
    assert clusters[0].best_member.source_id == "s"


# ---------------------------------------------------------------------------
# derive_issues
# ---------------------------------------------------------------------------

def test_no_candidates_insufficient_evidence():
    issues = derive_issues(make_entry(), None)
    assert [i.code for i in issues] == ["insufficient_evidence"]


def test_clean_match_no_issues():
    entry = make_entry(doi="10.1/x")
    cluster = _single_cluster(entry, make_candidate(doi="10.1/x"))
    assert derive_issues(entry, cluster) == []


def test_year_disagreement_threshold():
    entry = make_entry(year=2019)
    cluster = _single_cluster(entry, make_candidate(year=2024))
    codes = [i.code for i in derive_issues(entry, cluster)]
    assert "year_disagreement" in codes


def test_title_mismatch_blocking():
    entry = make_entry(title="alpha beta gamma delta epsilon zeta")
    cluster = _single_cluster(entry, make_candidate(
        title="alpha unrelated words entirely different", doi="10.9/y"))
    codes = [i.code for i in derive_issues(entry, cluster)]
    assert "title_mismatch" in codes


def test_at_most_one_issue_per_code():
    entry = make_entry(year=2010, title="alpha beta gamma delta")
    cluster = _single_cluster(entry, make_candidate(
        title="unrelated thing entirely", year=2024, doi="10.9/z"))
    codes = [i.code for i in derive_issues(entry, cluster)]
    assert len(codes) == len(set(codes))


# ---------------------------------------------------------------------------
# verify_entry (replay fixtures)
# ---------------------------------------------------------------------------

def _replay(corpus_paths) -> ReplayTransport:
    return ReplayTransport(FixtureStore(corpus_paths["fixtures"]))


def test_doi_entry_verified_in_one_pass(corpus_paths):
    entries = extract_references(corpus_paths["main"] / "references.bib").entries
    verdict = verify_entry(entries[0], _replay(corpus_paths), CONFIG)
    assert verdict.status == "verified"
    assert verdict.passes_used == 1
    assert verdict.confidence >= 0.9
    assert verdict.chosen is not None
    assert verdict.chosen.doi == corpus.MAIN_BIB[0].doi
    assert verdict.evidence


def test_all_sources_failing_yields_not_checked(corpus_paths):
    entries = extract_references(corpus_paths["failures"] / "flaky.bib").entries
    verdict = verify_entry(entries[0], _replay(corpus_paths), CONFIG)
    assert verdict.status == "not_checked"
    assert verdict.passes_used == 3
    classes = {e[2]["failure_class"] for e in verdict.evidence}
    assert "authentication" in classes
    assert "rate_limit" in classes
    assert "transport" in classes


def test_zero_sources_enabled_not_checked(corpus_paths):
    entries = extract_references(corpus_paths["main"] / "references.bib").entries
    config = SourceConfig(enabled_sources=())
    verdict = verify_entry(entries[0], _replay(corpus_paths), config)
    assert verdict.status == "not_checked"
    assert verdict.evidence == ()


def test_pass_monotonicity_on_failures(corpus_paths):
    entries = extract_references(corpus_paths["failures"] / "flaky.bib").entries
    verdict = verify_entry(entries[0], _replay(corpus_paths), CONFIG)
    # Later passes only run because earlier ones produced nothing usable.
    for pass_number in (1, 2):
        outcomes = [e for e in verdict.evidence if e[0] == pass_number]
        assert all(e[2]["result"] == "failure" for e in outcomes)


def test_verdict_statuses_across_corpus(corpus_paths):
    entries = extract_references(corpus_paths["main"] / "references.bib").entries
    transport = _replay(corpus_paths)
    for entry in entries:
        verdict = verify_entry(entry, transport, CONFIG)
        assert verdict.status == "verified", (entry.citation_key, verdict.issues)


def test_score_match_random_bounds_property():
    rng = random.Random(31337)
    entry = make_entry(title="alpha beta gamma delta", doi="10.1/a")
    for _ in range(300):
        candidate = _random_candidate(rng)
        score = score_match(entry, candidate)
        assert 0.0 <= score.confidence <= 1.0
        if score.identifier_signal == "conflict":
            assert score.confidence <= 0.5


def test_entry_resolving_only_in_pass_three(corpus_paths):
    """Reformulation: nothing found until the relaxed third pass, which
    yields a moderate match -> needs_review with passes_used 3."""
    entries = extract_references(corpus_paths["multipass"] / "obscure.bib").entries
    verdict = verify_entry(entries[0], _replay(corpus_paths), CONFIG)
    assert verdict.passes_used == 3
    assert verdict.status == "needs_review"
    assert 0.6 <= verdict.confidence < 0.9
    assert verdict.chosen is not None
    assert verdict.chosen.doi == corpus.MULTIPASS[0].doi
    # Pass monotonicity: earlier passes produced nothing usable.
    for pass_number in (1, 2):
        for p, _, digest in verdict.evidence:
            if p == pass_number:
                assert digest["result"] == "failure"


def test_unservable_entry_is_not_checked(corpus_paths):
    """A pmid-only, title-less entry with only arXiv enabled issues zero
    queries; that is not_checked (nothing attempted), not unresolved."""
    entry = make_entry(title=None, authors=(), year=None, venue=None, pmid="123")
    config = SourceConfig(enabled_sources=("arxiv",))
    verdict = verify_entry(entry, _replay(corpus_paths), config)
    assert verdict.status == "not_checked"
    assert verdict.evidence == ()
