"""LaTeX-side extraction: bibliography resource tracing and inline bibitems."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

_BIBLIOGRAPHY_RE = re.compile(r"\\bibliography\{([^}]*)\}")
_ADDBIBRESOURCE_RE = re.compile(r"\\addbibresource(?:\[[^\]]*\])?\{([^}]*)\}")
_BIBITEM_RE = re.compile(r"\\bibitem(?:\[[^\]]*\])?\{([^}]*)\}")
_THEBIB_END_RE = re.compile(r"\\end\{thebibliography\}")

# \cite and friends (natbib, biblatex). Used for key-rename safety scans.
CITE_COMMAND_RE = re.compile(
    r"\\(?:no)?(?:cite|Cite)[a-zA-Z]*\*?(?:\[[^\]]*\])*\{([^}]*)\}"
)


def strip_comments(tex_source: str) -> str:
    """Blank out '%' comments (preserving offsets) so directives in them are ignored.

    Escaped ``\\%`` does not start a comment. Characters are replaced with
    spaces instead of removed so every span survives unchanged.
    """
    out = []
    for line in tex_source.splitlines(keepends=True):
        cut = None
        i = 0
        while i < len(line):
            ch = line[i]
            if ch == "\\":
                i += 2
                continue
            if ch == "%":
                cut = i
                break
            i += 1
        if cut is None:
            out.append(line)
        else:
            kept = line[:cut]
            tail = line[cut:]
            newline = ""
            while tail.endswith(("\n", "\r")):
                newline = tail[-1] + newline
                tail = tail[:-1]
            out.append(kept + " " * len(tail) + newline)
    return "".join(out)


def resolve_tex_bib_resources(tex_source: str, base_dir: str | Path) -> list[Path]:
    """Existing .bib files named by \\bibliography / \\addbibresource.

    Names from ``\\bibliography{a,b}`` get ``.bib`` appended when missing.
    Results keep first-appearance order, deduplicated; commented-out
    commands are ignored; missing files are simply not returned (callers
    lint them).
    """
    base = Path(base_dir)
    cleaned = strip_comments(tex_source)
    named: list[str] = []
    matches = sorted(
        list(_BIBLIOGRAPHY_RE.finditer(cleaned)) + list(_ADDBIBRESOURCE_RE.finditer(cleaned)),
        key=lambda m: m.start(),
    )
    for m in matches:
        for name in m.group(1).split(","):
            name = name.strip()
            if not name:
                continue
            if not name.endswith(".bib"):
                name += ".bib"
            if name not in named:
                named.append(name)
    resolved: list[Path] = []
    for name in named:
        path = (base / name)
        if path.is_file() and path not in resolved:
            resolved.append(path)
    return resolved


def named_bib_resources(tex_source: str) -> list[str]:
    """All names mentioned by bibliography commands, whether or not they exist."""
    cleaned = strip_comments(tex_source)
    named: list[str] = []
    matches = sorted(
        list(_BIBLIOGRAPHY_RE.finditer(cleaned)) + list(_ADDBIBRESOURCE_RE.finditer(cleaned)),
        key=lambda m: m.start(),
    )
    for m in matches:
        for name in m.group(1).split(","):
            name = name.strip()
            if name and not name.endswith(".bib"):
                name += ".bib"
            if name and name not in named:
                named.append(name)
    return named


@dataclass(frozen=True)
class BibItem:
    key: str
    span: tuple[int, int]  # char span covering the \bibitem block
    text: str  # cleaned body text (LaTeX markup stripped)


def extract_bibitems(tex_source: str) -> list[BibItem]:
    """Inline \\bibitem entries, each spanning up to the next item or env end."""
    cleaned = strip_comments(tex_source)
    matches = list(_BIBITEM_RE.finditer(cleaned))
    items: list[BibItem] = []
    for i, m in enumerate(matches):
        if i + 1 < len(matches):
            end = matches[i + 1].start()
        else:
            env_end = _THEBIB_END_RE.search(cleaned, m.end())
            end = env_end.start() if env_end else len(cleaned)
        body = cleaned[m.end():end]
        items.append(BibItem(key=m.group(1).strip(), span=(m.start(), end),
                             text=strip_latex_markup(body)))
    return items


def strip_latex_markup(text: str) -> str:
    """Best-effort plain text from a LaTeX fragment (no macro expansion)."""
    text = re.sub(r"\\newblock\b", " ", text)
    text = re.sub(r"\\(?:emph|textit|textbf|textsc|texttt|mbox|url)\{([^{}]*)\}", r"\1", text)
    text = re.sub(r"\\[a-zA-Z]+\*?(?:\[[^\]]*\])?\{([^{}]*)\}", r"\1", text)
    text = re.sub(r"\\[a-zA-Z]+\s*", " ", text)
    text = text.replace("~", " ").replace("{", "").replace("}", "")
    text = re.sub(r"\s+", " ", text)
    return text.strip()


def find_cited_keys(tex_source: str) -> list[str]:
    """Citation keys referenced by \\cite-family commands, in appearance order."""
    cleaned = strip_comments(tex_source)
    keys: list[str] = []
    for m in CITE_COMMAND_RE.finditer(cleaned):
        for key in m.group(1).split(","):
            key = key.strip()
            if key:
                keys.append(key)
    return keys
