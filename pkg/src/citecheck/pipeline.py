"""The repair pipeline: scan, extract, verify, resolve, gate, plan, apply.

Both frontends (CLI and MCP server) call into here and print the same
canonical JSON, so the human and agent paths cannot diverge. Reports are
deterministic for fixed inputs and a fixed fixture store: sorted keys,
relative forward-slash paths, no timestamps, zero latency under replay.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import BlockedByPolicy
from .extraction import ExtractionResult, extract_references
from .matching import DEFAULT_WORKERS, EntryVerdict, verify_entries
from .policy import PRESETS, PolicyDecision, evaluate_policy, summarize_batch
from .rewrite import (ApplyResult, RewritePlan, analyze_key_mapping, apply_rewrite,
                      plan_rewrite)
from .sources import SourceConfig, config_from_env, make_transport, summarize_health
from .sources.models import DEFAULT_QUERY_LIMIT
from .workspace import ScanReport, scan_workspace, select_primary_artifact

STAGES = ("analyze", "plan", "apply", "repair")


@dataclass(frozen=True)
class RunOptions:
    path: str
    mode: str = "review"  # review | replacement
    write: str = "preview"  # preview | sidecar | replace
    fmt: str = "json"
    preset: str = "default"
    sources: tuple[str, ...] | None = None
    transport: str | None = None
    fixtures_dir: str | None = None
    max_depth: int = 8
    regenerate_keys: bool = False
    workers: int = DEFAULT_WORKERS
    limit: int = DEFAULT_QUERY_LIMIT
    env: dict[str, str] | None = None  # defaults to os.environ


@dataclass
class RepairRun:
    report: dict
    exit_code: int
    decision: PolicyDecision | None = None
    plan: RewritePlan | None = None
    apply_result: ApplyResult | None = None
    apply_error: str | None = None
    verdicts: list[EntryVerdict] = field(default_factory=list)
    extraction: ExtractionResult | None = None


def _posix(path: str | Path) -> str:
    return str(path).replace(os.sep, "/")


def _relativize(path: str | Path, base: Path) -> str:
    try:
        return Path(path).resolve().relative_to(base.resolve()).as_posix()
    except ValueError:
        return _posix(path)


def report_json(report: dict) -> str:
    """Canonical serialization; CLI stdout and MCP payloads share these bytes."""
    return json.dumps(report, indent=2, ensure_ascii=False, sort_keys=True)


def render_output(result: "RepairRun", fmt: str) -> str:
    """The payload a frontend prints for one run: report JSON or a rendering.

    Plans already carry all five renderings; analyze-stage runs render on
    demand from their verdicts under the same eligibility rule.
    """
    if fmt == "json":
        return report_json(result.report)
    if result.plan is not None:
        return result.plan.rendered[fmt]
    from .rewrite import render_bibliography, replacement_eligible

    allow = (result.decision.preset.allow_replacement_with_needs_review
             if result.decision is not None else False)
    pairs = [(v.entry, v.chosen if replacement_eligible(v, allow) else None)
             for v in result.verdicts]
    return render_bibliography(pairs, fmt)


def scan_report_dict(report: ScanReport) -> dict:
    return {
        "root": _posix(report.root),
        "selected": report.selected.path if report.selected else None,
        "candidates": [
            {
                "path": c.path,
                "extension": c.extension,
                "name_hint_score": c.name_hint_score,
                "extension_rank": c.extension_rank,
                "content_score": c.content_score,
                "total_score": c.total_score,
                "size_bytes": c.size_bytes,
                "probe_error": c.probe_error,
            }
            for c in report.candidates
        ],
        "skipped_dirs": [{"path": p, "reason": r} for p, r in report.skipped_dirs],
    }


def run_repair(options: RunOptions, stage: str = "repair") -> RepairRun:
    """Execute the pipeline up to `stage` and assemble the structured report."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage: {stage}")

    root = Path(options.path)
    scan = scan_workspace(root, max_depth=options.max_depth)
    artifact_rel = select_primary_artifact(scan)
    if root.is_file():
        artifact_path = root
        base_dir = root.parent
    else:
        artifact_path = root / artifact_rel
        base_dir = root

    extraction = extract_references(artifact_path)

    config = config_from_env(options.env, sources=options.sources,
                             transport=options.transport,
                             fixtures_dir=options.fixtures_dir)
    transport = make_transport(config.transport_mode, config.fixtures_dir)

    verdicts = verify_entries(extraction.entries, transport, config,
                              limit=options.limit, workers=options.workers)
    outcomes = [o for v in verdicts for o in v.outcomes]
    health = summarize_health(outcomes, config)

    key_mapping = analyze_key_mapping(extraction, base_dir, options.regenerate_keys)
    summary = summarize_batch(verdicts, extraction.lint,
                              unsafe_key_rewrite_count=key_mapping.unsafe_rewrite_count())
    preset = PRESETS[options.preset]
    decision = evaluate_policy(summary, preset)

    plan: RewritePlan | None = None
    apply_result: ApplyResult | None = None
    apply_error: str | None = None
    if stage in ("plan", "apply", "repair"):
        plan = plan_rewrite(artifact_path, extraction, verdicts, options.mode, decision,
                            key_mapping=key_mapping,
                            regenerate_keys=options.regenerate_keys,
                            workspace_root=base_dir)
        wants_write = options.mode == "replacement" and options.write != "preview"
        if stage in ("apply", "repair") and (wants_write or stage == "apply"):
            try:
                apply_result = apply_rewrite(plan, options.write)
            except BlockedByPolicy as exc:
                apply_error = str(exc)

    report = assemble_report(options, base_dir, scan, artifact_rel, extraction,
                             verdicts, health, summary, decision, plan,
                             apply_result, apply_error, config)
    return RepairRun(report=report, exit_code=decision.exit_code, decision=decision,
                     plan=plan, apply_result=apply_result, apply_error=apply_error,
                     verdicts=verdicts, extraction=extraction)


def _replacement_status(options: RunOptions, decision: PolicyDecision,
                        plan: RewritePlan | None, apply_result: ApplyResult | None,
                        apply_error: str | None) -> dict:
    if options.mode != "replacement":
        status = "not_requested"
    elif plan is not None and plan.blocked:
        status = "blocked"
    elif apply_result is not None and apply_result.applied:
        status = "applied"
    elif apply_error is not None:
        status = "blocked"
    else:
        status = "planned"
    return {
        "requested": options.mode == "replacement",
        "allowed": decision.replacement_allowed,
        "status": status,
    }


def verdict_dict(verdict: EntryVerdict, base_dir: Path) -> dict:
    entry = verdict.entry
    return {
        "ordinal": entry.ordinal,
        "citation_key": entry.citation_key,
        "source_path": _relativize(entry.raw.source_path, base_dir),
        "origin_format": entry.raw.origin_format,
        "entry_kind": entry.entry_kind,
        "title": entry.title,
        "authors": [list(a) for a in entry.authors],
        "year": entry.year,
        "venue": entry.venue,
        "doi": entry.doi,
        "pmid": entry.pmid,
        "arxiv_id": entry.arxiv_id,
        "status": verdict.status,
        "confidence": round(verdict.confidence, 6),
        "issues": [{"code": i.code, "detail": i.detail} for i in verdict.issues],
        "chosen": verdict.chosen.to_dict() if verdict.chosen else None,
        "passes_used": verdict.passes_used,
        "evidence": [
            {"pass": p, "query": q.to_dict(), "outcome": digest}
            for p, q, digest in verdict.evidence
        ],
    }


def assemble_report(options: RunOptions, base_dir: Path, scan: ScanReport,
                    artifact_rel: str, extraction: ExtractionResult,
                    verdicts: list[EntryVerdict], health, summary, decision,
                    plan: RewritePlan | None, apply_result: ApplyResult | None,
                    apply_error: str | None, config: SourceConfig) -> dict:
    worklist = [
        {
            "ordinal": v.entry.ordinal,
            "citation_key": v.entry.citation_key,
            "title": v.entry.title,
            "status": v.status,
            "issues": [i.code for i in v.issues],
        }
        for v in verdicts if v.status != "verified"
    ]
    plan_dict = None
    if plan is not None:
        plan_dict = plan.to_dict()
        plan_dict["patches"] = [
            {**p.to_dict(), "target_path": _relativize(p.target_path, base_dir)}
            for p in plan.patches
        ]
        plan_dict["content_digests"] = {
            _relativize(path, base_dir): digest for path, digest in plan.content_digests
        }
        plan_dict["rendered"] = plan.rendered

    apply_dict = None
    if apply_result is not None:
        apply_dict = apply_result.to_dict()
        apply_dict["written_paths"] = [_relativize(p, base_dir)
                                       for p in apply_result.written_paths]
    elif apply_error is not None:
        apply_dict = {"error": {"type": "BlockedByPolicy", "message": apply_error}}

    return {
        "citecheck_version": __version__,
        "root": _posix(scan.root),
        "artifact": artifact_rel,
        "config": {
            "mode": options.mode,
            "write": options.write,
            "format": options.fmt,
            "preset": options.preset,
            "sources": list(config.enabled_sources),
            "transport": config.transport_mode,
            "max_depth": options.max_depth,
            "regenerate_keys": options.regenerate_keys,
        },
        "scan": scan_report_dict(scan),
        "extraction": {
            "origin_format": extraction.origin_format,
            "entry_count": len(extraction.entries),
            "section_span": list(extraction.section_span) if extraction.section_span else None,
            "bib_resources": [_relativize(p, base_dir) for p in extraction.bib_resources],
            "rejected": [
                {"ordinal": r.raw.ordinal, "reason": r.reason,
                 "excerpt": r.raw.original_text[:80]}
                for r in extraction.rejected
            ],
            "lint": [
                {"code": f.code, "entry_ordinal": f.entry_ordinal,
                 "message": f.message, "severity": f.severity}
                for f in extraction.lint
            ],
        },
        "entries": [verdict_dict(v, base_dir) for v in verdicts],
        "worklist": worklist,
        "source_health": [h.to_dict() for h in health],
        "summary": summary.to_dict(),
        "decision": decision.to_dict(),
        "plan": plan_dict,
        "replacement": _replacement_status(options, decision, plan, apply_result,
                                           apply_error),
        "apply": apply_dict,
    }
