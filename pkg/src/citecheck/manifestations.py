"""Manifestation grouping and preference: journal > conference > preprint.

One work may surface as a journal article, a conference paper, and an
arXiv preprint at once. The preference order picks the canonical record,
but it never silently overrides the author: when the entry cites (by
identifier) a lower-preference manifestation while a higher one exists,
the resolver emits a manifestation_conflict issue and the verdict stays
review-only.

Preference switching requires identifier-level linkage (shared or
cross-asserted ids). Members that joined the cluster on title similarity
alone are left outside the work set: they can corroborate, not replace.
"""

from __future__ import annotations

from dataclasses import dataclass

from .extraction.models import ReferenceInput
from .matching import Issue, MatchCluster, MatchScore, score_match
from .sources import CandidateRecord

# Fixed, not configurable. Book chapters and reports have no slot in the
# order and map to unknown(0).
PREFERENCE_RANK = {"journal": 3, "conference": 2, "preprint": 1, "unknown": 0}

_SOURCE_TIE_ORDER = {"crossref": 0, "pubmed": 1, "arxiv": 2, "semantic_scholar": 3}


@dataclass(frozen=True)
class ManifestationSet:
    work_members: tuple[CandidateRecord, ...]
    preferred: CandidateRecord | None
    cited_kind: str
    conflict: bool
    cited_member: CandidateRecord | None = None
    member_scores: tuple[tuple[str, MatchScore], ...] = ()


def _member_key(record: CandidateRecord) -> str:
    return f"{record.source}:{record.source_id}"


def _linked_component(cluster: MatchCluster, anchor: CandidateRecord) -> list[CandidateRecord]:
    """Members reachable from `anchor` through shared/asserted identifiers."""
    members = list(cluster.members)
    component = {_member_key(anchor)}
    frontier = [anchor]
    while frontier:
        current = frontier.pop()
        for other in members:
            key = _member_key(other)
            if key in component:
                continue
            if current.all_identifiers() & other.all_identifiers():
                component.add(key)
                frontier.append(other)
    return [m for m in members if _member_key(m) in component]


def _cited_member(entry: ReferenceInput,
                  members: list[CandidateRecord]) -> CandidateRecord | None:
    """The member whose direct identifiers match what the entry cites."""
    entry_ids = set(entry.identifier_map().items())
    if not entry_ids:
        return None
    for member in members:
        if entry_ids & set(member.identifier_map().items()):
            return member
    return None


def _pick_preferred(members: list[CandidateRecord],
                    scores: dict[str, MatchScore]) -> CandidateRecord:
    def sort_key(record: CandidateRecord):
        score = scores.get(_member_key(record))
        confidence = score.confidence if score else 0.0
        return (-PREFERENCE_RANK[record.manifestation_kind],
                -confidence,
                _SOURCE_TIE_ORDER.get(record.source, 99),
                record.source_id)
    return sorted(members, key=sort_key)[0]


def group_manifestations(cluster: MatchCluster, entry: ReferenceInput) -> ManifestationSet:
    """Identifier-linked manifestation set around the cluster's best member."""
    if not cluster.members:
        raise ValueError("cluster must be non-empty")
    work_members = _linked_component(cluster, cluster.best_member)
    scores = dict(cluster.member_scores)
    for member in work_members:
        scores.setdefault(_member_key(member), score_match(entry, member))
    preferred = _pick_preferred(work_members, scores)
    cited = _cited_member(entry, work_members)
    conflict = (
        cited is not None
        and _member_key(cited) != _member_key(preferred)
        and PREFERENCE_RANK[preferred.manifestation_kind]
        > PREFERENCE_RANK[cited.manifestation_kind]
    )
    return ManifestationSet(
        work_members=tuple(work_members),
        preferred=preferred,
        cited_kind=entry.entry_kind,
        conflict=conflict,
        cited_member=cited,
        member_scores=tuple(sorted(scores.items())),
    )


def resolve_preference(mset: ManifestationSet) -> tuple[CandidateRecord, Issue | None]:
    """Preferred record plus a manifestation_conflict issue when the author's
    cited manifestation would be overridden. Conflicted entries cap at
    needs_review downstream, never a silent rewrite."""
    if mset.preferred is None:
        raise ValueError("manifestation set has no members")
    issue = None
    if mset.conflict and mset.cited_member is not None:
        issue = Issue(
            code="manifestation_conflict",
            detail=(f"entry cites the {mset.cited_member.manifestation_kind} "
                    f"({mset.cited_member.source}:{mset.cited_member.source_id}) but a "
                    f"{mset.preferred.manifestation_kind} manifestation exists "
                    f"({mset.preferred.source}:{mset.preferred.source_id})"),
        )
    return mset.preferred, issue
