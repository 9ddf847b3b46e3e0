from __future__ import annotations

import os
from pathlib import Path

import pytest

import corpus


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                name = nodeid.split("::")[-1]
                lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"  {verdict}  {name}")


@pytest.fixture(autouse=True)
def _clean_citecheck_env(monkeypatch):
    """Keep host CITECHECK_* variables from leaking into pipeline runs."""
    for name in list(os.environ):
        if name.startswith("CITECHECK_"):
            monkeypatch.delenv(name, raising=False)


@pytest.fixture(scope="session")
def corpus_paths(tmp_path_factory) -> dict[str, Path]:
    """All fixture workspaces plus the shared recorded-response store."""
    base = tmp_path_factory.mktemp("corpus")
    return corpus.build_corpus(base)


@pytest.fixture()
def replay_options(corpus_paths):
    """RunOptions factory pinned to replay mode over the shared store."""
    from citecheck.pipeline import RunOptions

    def make(path: Path, **overrides) -> RunOptions:
        defaults = dict(
            path=str(path),
            transport="replay",
            fixtures_dir=str(corpus_paths["fixtures"]),
            env={},
        )
        defaults.update(overrides)
        return RunOptions(**defaults)

    return make
