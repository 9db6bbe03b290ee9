"""JSON-over-HTTP session service (stdlib http.server).

Endpoints (all JSON):

    POST /sessions                       {"model": <document>}        -> session info
    GET  /sessions/<id>/model                                         -> document + revision
    GET  /sessions/<id>/mesh                                          -> triangles + face ids
    GET  /sessions/<id>/constraints                                   -> constraints + state + diagnostics
    GET  /sessions/<id>/options                                       -> prioritized options
    POST /sessions/<id>/edits            {"edit": {...}, "revision": r, "auto_resolve": bool}
    POST /sessions/<id>/options          {"option": "...", "revision": r}
    POST /sessions/<id>/parameters       {"constraint_id": c, "value": v, "degrees": bool, "revision": r}
    GET  /sessions/<id>/history
    GET  /sessions/<id>/history/<step>

Mutations carry the client's revision; a mismatch answers 409. Errors are
structured: {"error": ..., "detail": ...}.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import (DocumentError, EditRejectedError, StaleOptionsError,
                     StaleRevisionError, ValidationError, VdmError)
from .io import canonical_json, gcs_to_dict, load_model, solid_to_dict
from .mesh import tessellate
from .pipeline import Session, _plain


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def create(self, model_doc: str) -> Session:
        solid, gcs = load_model(model_doc)
        with self._lock:
            self._counter += 1
            sid = f"s{self._counter}"
        session = Session(solid, gcs, session_id=sid)
        with self._lock:
            self._sessions[sid] = session
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            if sid not in self._sessions:
                raise KeyError(sid)
            return self._sessions[sid]


def _session_info(session: Session) -> dict:
    return {"session": session.id, "revision": session.revision,
            "faces": sorted(session.solid.faces)}


class _Handler(BaseHTTPRequestHandler):
    store: SessionStore = None  # set by make_server

    def log_message(self, *args):  # silence default stderr chatter
        pass

    def _send(self, code: int, payload: dict):
        body = canonical_json(_plain(payload)).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError:
            raise DocumentError("request body is not valid JSON")

    def _route(self, method: str):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            if method == "POST" and parts == ["sessions"]:
                body = self._body()
                if "model" not in body:
                    raise DocumentError("missing 'model'")
                session = self.store.create(canonical_json(body["model"]))
                return self._send(201, _session_info(session))

            if len(parts) >= 2 and parts[0] == "sessions":
                session = self.store.get(parts[1])
                rest = parts[2:]
                if method == "GET":
                    return self._get(session, rest)
                if method == "POST":
                    return self._post(session, rest)
            raise KeyError(self.path)
        except KeyError:
            self._send(404, {"error": "not-found", "detail": self.path})
        except StaleRevisionError as exc:
            self._send(409, {"error": "stale-revision", "detail": str(exc)})
        except StaleOptionsError as exc:
            self._send(409, {"error": "stale-options", "detail": str(exc)})
        except EditRejectedError as exc:
            self._send(422, {"error": "edit-rejected", "detail": str(exc),
                             "last_valid_t": exc.last_valid_t})
        except (DocumentError, ValidationError) as exc:
            self._send(400, {"error": "bad-request", "detail": str(exc)})
        except VdmError as exc:
            self._send(422, {"error": "operation-failed", "detail": str(exc)})

    def _get(self, session: Session, rest: list[str]):
        if rest == ["model"]:
            return self._send(200, {
                "revision": session.revision,
                "model": {"solid": solid_to_dict(session.solid),
                          "gcs": gcs_to_dict(session.gcs)}})
        if rest == ["mesh"]:
            mesh = tessellate(session.solid, session.tol)
            payload = mesh.as_dict()
            payload["revision"] = session.revision
            return self._send(200, payload)
        if rest == ["constraints"]:
            payload = session.analysis()
            payload["constraints"] = gcs_to_dict(session.gcs)["constraints"]
            payload["revision"] = session.revision
            return self._send(200, payload)
        if rest == ["options"]:
            payload = session.options_payload()
            payload["session_revision"] = session.revision
            return self._send(200, payload)
        if rest == ["history"]:
            return self._send(200, {
                "revision": session.revision,
                "steps": [h.operation for h in session.history],
                "count": len(session.history)})
        if len(rest) == 2 and rest[0] == "history":
            idx = int(rest[1])
            if not (0 <= idx < len(session.history)):
                raise KeyError(rest[1])
            return self._send(200, session.history[idx].as_dict())
        raise KeyError("/".join(rest))

    def _post(self, session: Session, rest: list[str]):
        body = self._body()
        revision = body.get("revision")
        if rest == ["edits"]:
            if "edit" not in body:
                raise DocumentError("missing 'edit'")
            diag = session.apply_edit(body["edit"],
                                      auto=body.get("auto_resolve"),
                                      revision=revision)
            diag["revision"] = session.revision
            diag["model"] = {"solid": solid_to_dict(session.solid),
                             "gcs": gcs_to_dict(session.gcs)}
            return self._send(200, diag)
        if rest == ["options"]:
            if "option" not in body:
                raise DocumentError("missing 'option'")
            diag = session.resolve("choice", body["option"], revision=revision)
            diag["revision"] = session.revision
            return self._send(200, diag)
        if rest == ["resolve"]:
            diag = session.resolve(body.get("mode", "auto"),
                                   body.get("option"), revision=revision)
            diag["revision"] = session.revision
            return self._send(200, diag)
        if rest == ["parameters"]:
            for key in ("constraint_id", "value"):
                if key not in body:
                    raise DocumentError(f"missing '{key}'")
            diag = session.set_parameter(body["constraint_id"], body["value"],
                                         revision=revision,
                                         degrees=body.get("degrees", False))
            diag["revision"] = session.revision
            return self._send(200, diag)
        raise KeyError("/".join(rest))

    def do_GET(self):
        self._route("GET")

    def do_POST(self):
        self._route("POST")


def make_server(port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    store = SessionStore()
    handler = type("Handler", (_Handler,), {"store": store})
    return ThreadingHTTPServer((host, port), handler)


def serve(port: int, host: str = "127.0.0.1"):  # pragma: no cover - CLI path
    server = make_server(port, host)
    print(f"serving on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
