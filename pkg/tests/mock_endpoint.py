"""Scripted chat-completion endpoint used by transport and pipeline tests.

The server answers POSTs with whatever a responder callable decides:
a plain string (served as a 200 chat payload), an (status, text) tuple,
or the sentinel ("raw", text) for a non-JSON 200 body.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *_args):  # keep pytest output clean
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            body = {}
        user = ""
        for message in body.get("messages", []):
            if message.get("role") == "user":
                user = str(message.get("content", ""))
        server: ScriptedChatServer = self.server  # type: ignore[assignment]
        with server.lock:
            server.request_count += 1
            count = server.request_count
        result = server.responder(user, count)

        if isinstance(result, str):
            status, kind, text = 200, "chat", result
        else:
            status, text = result
            kind = "chat" if status == 200 else "error"
            if status == 200 and isinstance(text, tuple):
                kind, text = text
        if kind == "raw":
            payload = text.encode("utf-8")
        elif status == 200:
            payload = json.dumps({"choices": [{"message": {"content": text}}]}).encode("utf-8")
        else:
            payload = json.dumps({"error": text}).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class ScriptedChatServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, responder):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.responder = responder
        self.lock = threading.Lock()
        self.request_count = 0
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def start(self) -> "ScriptedChatServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread:
            self._thread.join(timeout=5)


def sequence_responder(steps):
    """Responder that serves a fixed list of steps in request order.

    Each step is a string (200 chat content) or an (status, text) tuple;
    the last step repeats once the list is exhausted.
    """

    def _respond(_user: str, count: int):
        index = min(count, len(steps)) - 1
        return steps[index]

    return _respond
