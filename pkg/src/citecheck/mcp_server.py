"""MCP stdio server: the repair pipeline as six JSON-RPC tools.

Protocol frames are newline-delimited JSON-RPC 2.0 on stdout; everything
diagnostic goes to stderr. Requests are handled strictly one at a time in
arrival order: write-back tools must never race, and MCP clients
tolerate sequential servers. Tool failures become structured error
payloads; the loop itself never dies on a bad request.
"""

from __future__ import annotations

import json
import sys
import traceback
from typing import Any, TextIO

from . import __version__
from .errors import CitecheckError
from .pipeline import RunOptions, render_output, report_json, run_repair, scan_report_dict
from .workspace import scan_workspace

PROTOCOL_VERSION = "2024-11-05"

_PATH_PROP = {"type": "string", "description": "Project folder or manuscript file path"}
_COMMON_PROPS: dict[str, Any] = {
    "path": _PATH_PROP,
    "preset": {"type": "string", "enum": ["default", "strict", "lenient"],
               "description": "Policy preset gating exit decisions and replacement"},
    "sources": {"type": "array", "items": {"type": "string"},
                "description": "Metadata sources to query (default pubmed, crossref, arxiv)"},
    "transport": {"type": "string", "enum": ["live", "replay", "record"],
                  "description": "HTTP transport mode"},
    "fixtures_dir": {"type": "string",
                     "description": "Fixture store for replay/record transports"},
}
_MODE_PROP = {"type": "string", "enum": ["review", "replacement"],
              "description": "review reports only; replacement also plans patches"}
_WRITE_PROP = {"type": "string", "enum": ["preview", "sidecar", "replace"],
               "description": "Where rewrite output lands"}


def tool_descriptors() -> list[dict]:
    """The six-tool surface, stable across calls."""
    return [
        {
            "name": "scan_workspace",
            "description": "Rank the paper-like files under a path and select "
                           "the primary manuscript or bibliography artifact.",
            "inputSchema": {
                "type": "object",
                "properties": {"path": _PATH_PROP,
                               "max_depth": {"type": "integer", "minimum": 1}},
                "required": ["path"],
            },
        },
        {
            "name": "analyze_references",
            "description": "Extract references from the selected artifact and "
                           "verify them against scholarly metadata sources.",
            "inputSchema": {
                "type": "object",
                "properties": dict(_COMMON_PROPS),
                "required": ["path"],
            },
        },
        {
            "name": "plan_reference_rewrite",
            "description": "Produce a policy-gated rewrite plan with patch "
                           "previews, rendered bibliographies, and key-mapping risk.",
            "inputSchema": {
                "type": "object",
                "properties": {**_COMMON_PROPS, "mode": _MODE_PROP,
                               "regenerate_keys": {"type": "boolean"}},
                "required": ["path"],
            },
        },
        {
            "name": "apply_reference_rewrite",
            "description": "Apply a rewrite plan in preview, sidecar, or replace "
                           "mode. Blocked plans refuse write-back.",
            "inputSchema": {
                "type": "object",
                "properties": {**_COMMON_PROPS, "mode": _MODE_PROP, "write": _WRITE_PROP,
                               "regenerate_keys": {"type": "boolean"}},
                "required": ["path"],
            },
        },
        {
            "name": "repair_paper",
            "description": "Full pipeline: scan, extract, verify, resolve "
                           "manifestations, evaluate policy, plan, and optionally "
                           "write. Returns the structured report.",
            "inputSchema": {
                "type": "object",
                "properties": {**_COMMON_PROPS, "mode": _MODE_PROP, "write": _WRITE_PROP,
                               "format": {"type": "string",
                                          "enum": ["json", "bibtex", "text",
                                                   "markdown", "endnote"]},
                               "max_depth": {"type": "integer", "minimum": 1},
                               "regenerate_keys": {"type": "boolean"}},
                "required": ["path"],
            },
        },
        {
            "name": "citecheck_version",
            "description": "Version of this citecheck build.",
            "inputSchema": {"type": "object", "properties": {}},
        },
    ]


def _options_from_args(args: dict) -> RunOptions:
    return RunOptions(
        path=args["path"],
        mode=args.get("mode", "review"),
        write=args.get("write", "preview"),
        fmt=args.get("format", "json"),
        preset=args.get("preset", "default"),
        sources=tuple(args["sources"]) if args.get("sources") else None,
        transport=args.get("transport"),
        fixtures_dir=args.get("fixtures_dir"),
        max_depth=int(args.get("max_depth", 8)),
        regenerate_keys=bool(args.get("regenerate_keys", False)),
    )


def call_tool(name: str, args: dict) -> tuple[str, bool]:
    """Run one tool; returns (payload text, is_error)."""
    if name == "citecheck_version":
        return json.dumps({"version": __version__}), False
    if name == "scan_workspace":
        report = scan_workspace(args["path"], max_depth=int(args.get("max_depth", 8)))
        return report_json(scan_report_dict(report)), False
    options = _options_from_args(args)
    stage = {"analyze_references": "analyze", "plan_reference_rewrite": "plan",
             "apply_reference_rewrite": "apply", "repair_paper": "repair"}[name]
    run = run_repair(options, stage=stage)
    payload = render_output(run, options.fmt)
    # A write that policy refused is an error payload, but the report still
    # travels with it so callers see the full diagnostics.
    return payload, run.apply_error is not None


class McpServer:
    def __init__(self, stdin: TextIO | None = None, stdout: TextIO | None = None):
        self.stdin = stdin if stdin is not None else sys.stdin
        self.stdout = stdout if stdout is not None else sys.stdout

    def _send(self, message: dict) -> None:
        self.stdout.write(json.dumps(message, ensure_ascii=False) + "\n")
        self.stdout.flush()

    def _result(self, request_id, result: dict) -> None:
        self._send({"jsonrpc": "2.0", "id": request_id, "result": result})

    def _error(self, request_id, code: int, message: str) -> None:
        self._send({"jsonrpc": "2.0", "id": request_id,
                    "error": {"code": code, "message": message}})

    def handle(self, request: dict) -> None:
        method = request.get("method")
        request_id = request.get("id")
        is_notification = "id" not in request
        if method == "initialize":
            self._result(request_id, {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {"tools": {"listChanged": False}},
                "serverInfo": {"name": "citecheck", "version": __version__},
            })
            return
        if method in ("notifications/initialized", "initialized"):
            return
        if method == "tools/list":
            self._result(request_id, {"tools": tool_descriptors()})
            return
        if method == "tools/call":
            params = request.get("params") or {}
            name = params.get("name", "")
            known = {d["name"] for d in tool_descriptors()}
            if name not in known:
                self._error(request_id, -32601, f"unknown tool: {name}")
                return
            args = params.get("arguments") or {}
            try:
                payload, is_error = call_tool(name, args)
            except CitecheckError as exc:
                payload = json.dumps(
                    {"error": {"type": type(exc).__name__, "message": str(exc)}})
                is_error = True
            except Exception as exc:  # never let a tool crash the loop
                print(f"citecheck mcp: tool {name} failed: {exc}", file=sys.stderr)
                traceback.print_exc(file=sys.stderr)
                payload = json.dumps(
                    {"error": {"type": type(exc).__name__, "message": str(exc)}})
                is_error = True
            self._result(request_id, {
                "content": [{"type": "text", "text": payload}],
                "isError": is_error,
            })
            return
        if is_notification:
            return
        self._error(request_id, -32601, f"method not found: {method}")

    def serve(self) -> None:
        """Read newline-delimited JSON-RPC until stdin closes."""
        for line in self.stdin:
            line = line.strip()
            if not line:
                continue
            try:
                request = json.loads(line)
            except json.JSONDecodeError as exc:
                self._send({"jsonrpc": "2.0", "id": None,
                            "error": {"code": -32700, "message": f"parse error: {exc}"}})
                continue
            if not isinstance(request, dict):
                self._send({"jsonrpc": "2.0", "id": None,
                            "error": {"code": -32600, "message": "invalid request"}})
                continue
            self.handle(request)


def serve(stdin: TextIO | None = None, stdout: TextIO | None = None) -> None:
    McpServer(stdin=stdin, stdout=stdout).serve()
