"""Tool clients that reach remote services, and a small server for the same wire format.

Wire format (POST, JSON)::

    request:  {"question": "...", "context_refs": ["doc-1", ...]}
    response: {"answer": "...", "confidence": 0.9}     # confidence optional
"""

from __future__ import annotations

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Dict, Optional, Tuple

import httpx

from ..protocol import NO_RESULT, ToolKind
from .base import DEFAULT_TIMEOUT, ToolClient, ToolRequest, ToolResponse

SEARCH_KEY_ENV = "DCQA_SEARCH_API_KEY"


def _parse_confidence(value: Any) -> Optional[float]:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    value = float(value)
    return value if 0.0 <= value <= 1.0 else None


class HttpToolClient:
    """Client for a tool served over HTTP (e.g. a hosted neural QA model)."""

    def __init__(self, url: str, timeout: float = DEFAULT_TIMEOUT, headers: Optional[Dict[str, str]] = None,
                 transport: Optional[httpx.BaseTransport] = None):
        self.url = url
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout, headers=headers or {}, transport=transport)

    def answer(self, request: ToolRequest) -> ToolResponse:
        body = {"question": request.question, "context_refs": list(request.context_refs)}
        try:
            resp = self._client.post(self.url, json=body)
        except httpx.HTTPError:
            return ToolResponse.failure()
        if resp.status_code != 200:
            return ToolResponse.failure()
        try:
            data = resp.json()
        except ValueError:
            return ToolResponse.failure()
        if not isinstance(data, dict):
            return ToolResponse.failure()
        answer = data.get("answer")
        if data.get("failed") or not isinstance(answer, str) or not answer.strip() or answer == NO_RESULT:
            return ToolResponse.failure()
        return ToolResponse(answer, _parse_confidence(data.get("confidence")), False)

    def close(self) -> None:
        self._client.close()


class SearchToolClient:
    """Web search through a SerpAPI-compatible endpoint; answers with the top organic snippet."""

    def __init__(self, api_key: Optional[str] = None, base_url: str = "https://serpapi.com/search.json",
                 engine: str = "google", timeout: float = DEFAULT_TIMEOUT,
                 transport: Optional[httpx.BaseTransport] = None):
        self._api_key = api_key if api_key is not None else os.environ.get(SEARCH_KEY_ENV)
        self.base_url = base_url
        self.engine = engine
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def __repr__(self) -> str:
        return f"SearchToolClient(base_url={self.base_url!r}, engine={self.engine!r})"

    def answer(self, request: ToolRequest) -> ToolResponse:
        if not self._api_key:
            return ToolResponse.failure()
        params = {"q": request.question, "engine": self.engine, "api_key": self._api_key}
        try:
            resp = self._client.get(self.base_url, params=params)
            if resp.status_code != 200:
                return ToolResponse.failure()
            data = resp.json()
        except (httpx.HTTPError, ValueError):
            return ToolResponse.failure()
        results = data.get("organic_results") if isinstance(data, dict) else None
        if not results or not isinstance(results, list):
            return ToolResponse.failure()
        snippet = results[0].get("snippet") if isinstance(results[0], dict) else None
        if not isinstance(snippet, str) or not snippet.strip():
            return ToolResponse.failure()
        return ToolResponse(snippet, None, False)


def http_tool_client(url: str, request: ToolRequest, timeout: float = DEFAULT_TIMEOUT) -> ToolResponse:
    return HttpToolClient(url, timeout).answer(request)


def search_tool_client(question: str, api_key: Optional[str] = None, **kwargs) -> ToolResponse:
    return SearchToolClient(api_key, **kwargs).answer(ToolRequest(ToolKind.SEARCH, question))


def serve_tool(client: ToolClient, kind: ToolKind, host: str = "127.0.0.1",
               port: int = 0) -> Tuple[ThreadingHTTPServer, str]:
    """Expose ``client`` over the HTTP tool wire format on a background thread.

    Returns the server (call ``shutdown()`` when done) and its URL.
    """

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self) -> None:  # noqa: N802
            length = int(self.headers.get("Content-Length", 0))
            try:
                body = json.loads(self.rfile.read(length) or b"{}")
                req = ToolRequest(kind, body["question"], tuple(body.get("context_refs", ())))
            except Exception:  # noqa: BLE001
                self._send(400, {"error": "bad request"})
                return
            resp = client.answer(req)
            if resp.failed:
                self._send(200, {"answer": resp.answer, "failed": True})
            else:
                out: Dict[str, Any] = {"answer": resp.answer}
                if resp.confidence is not None:
                    out["confidence"] = resp.confidence
                self._send(200, out)

        def _send(self, status: int, payload: Dict[str, Any]) -> None:
            data = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args) -> None:
            pass

    server = ThreadingHTTPServer((host, port), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server, f"http://{host}:{server.server_address[1]}/"
