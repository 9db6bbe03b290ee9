import json
import threading
import urllib.error
import urllib.request

import pytest

from gcs_fixtures import pocket_block_gcs, well_constrained_cuboid
from vdm.io import canonical_json, load_model, save_model
from vdm.pipeline import run_script
from vdm.service import make_server


def cuboid_doc():
    c, gcs, f = well_constrained_cuboid()
    return save_model(c, gcs), f


def test_empty_script_identity():
    doc, _f = cuboid_doc()
    final, report = run_script(doc, [])
    assert final == doc
    assert report["failure"] is None


def test_edit_script_matches_library_path():
    doc, f = cuboid_doc()
    script = [{"op": "push_pull_translate", "faces": [f["T"]],
               "direction": [0, 0, 1], "distance": 0.5}]
    final, report = run_script(doc, script, auto_resolve_edits=True)
    assert report["failure"] is None
    assert report["final"]["volume"] == pytest.approx(1.5)
    assert report["final"]["constraint_state"]["state"] == "well"
    solid, gcs = load_model(final)
    assert len(solid.faces) == 6


def test_failing_step_reports_index_and_last_state():
    doc, f = cuboid_doc()
    script = [
        {"op": "push_pull_translate", "faces": [f["T"]],
         "direction": [0, 0, 1], "distance": 0.25},
        {"op": "push_pull_translate", "faces": [f["T"]],
         "direction": [0, 0, -1], "distance": 1.25},  # collapse
    ]
    final, report = run_script(doc, script)
    assert report["failure"]["index"] == 1
    assert "last_valid_t" in report["failure"]
    solid, _ = load_model(final)
    assert solid.faces  # last valid state emitted


def test_script_determinism():
    m, gcs, f = pocket_block_gcs(extra_cycle=True)
    doc = save_model(m, gcs)
    script = [
        {"op": "push_pull_translate", "faces": [f["P"]],
         "direction": [0, 0, -1], "distance": 0.3},
        {"op": "resolve", "mode": "auto"},
        {"op": "analyze"},
    ]
    outs = {canonical_json(run_script(doc, script)[1]) for _ in range(3)}
    finals = {run_script(doc, script)[0] for _ in range(3)}
    assert len(outs) == 1
    assert len(finals) == 1


def test_set_parameter_step():
    doc, f = cuboid_doc()
    script = [{"op": "set_parameter", "constraint_id": 2, "value": 1.25}]
    final, report = run_script(doc, script)
    assert report["failure"] is None
    assert report["steps"][0]["volume"] == pytest.approx(1.25, abs=1e-8)


class _Client:
    def __init__(self, port):
        self.base = f"http://127.0.0.1:{port}"

    def call(self, method, path, payload=None):
        data = json.dumps(payload).encode() if payload is not None else None
        req = urllib.request.Request(self.base + path, data=data, method=method,
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as err:
            return err.code, json.loads(err.read())


@pytest.fixture()
def service():
    server = make_server(0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield _Client(server.server_address[1])
    server.shutdown()


def test_service_session_roundtrip(service):
    doc, f = cuboid_doc()
    st, info = service.call("POST", "/sessions", {"model": json.loads(doc)})
    assert st == 201
    sid = info["session"]

    st, mesh = service.call("GET", f"/sessions/{sid}/mesh")
    assert st == 200 and len(mesh["triangles"]) == 12

    st, cons = service.call("GET", f"/sessions/{sid}/constraints")
    assert st == 200
    assert cons["constraint_state"]["state"] == "well"
    assert len(cons["constraints"]) == 9

    edit = {"op": "push_pull_translate", "faces": [f["T"]],
            "direction": [0, 0, 1], "distance": 0.5}
    st, diag = service.call("POST", f"/sessions/{sid}/edits",
                            {"edit": edit, "revision": 0, "auto_resolve": True})
    assert st == 200 and diag["revision"] == 1
    assert diag["gtips"] == []

    # equivalence with the scripted path
    _final, report = run_script(doc, [dict(edit, auto_resolve=True)],
                                auto_resolve_edits=True)
    st, analysis = service.call("GET", f"/sessions/{sid}/constraints")
    assert analysis["volume"] == pytest.approx(report["final"]["volume"])

    st, hist = service.call("GET", f"/sessions/{sid}/history")
    assert hist["count"] == 2
    st, step0 = service.call("GET", f"/sessions/{sid}/history/0")
    assert step0["operation"]["op"] == "load"


def test_service_stale_revision_conflict(service):
    doc, f = cuboid_doc()
    _st, info = service.call("POST", "/sessions", {"model": json.loads(doc)})
    sid = info["session"]
    edit = {"op": "push_pull_translate", "faces": [f["T"]],
            "direction": [0, 0, 1], "distance": 0.25}
    st, _ = service.call("POST", f"/sessions/{sid}/edits",
                         {"edit": edit, "revision": 0})
    assert st == 200
    st, err = service.call("POST", f"/sessions/{sid}/edits",
                           {"edit": edit, "revision": 0})
    assert st == 409 and err["error"] == "stale-revision"


def test_service_options_flow(service):
    m, gcs, f = pocket_block_gcs(extra_cycle=True)
    doc = save_model(m, gcs)
    _st, info = service.call("POST", "/sessions", {"model": json.loads(doc)})
    sid = info["session"]
    st, opts = service.call("GET", f"/sessions/{sid}/options")
    assert st == 200
    assert [o["kind"] for o in opts["options"]] == ["remove"] * 3
    top = opts["options"][0]["id"]
    st, diag = service.call("POST", f"/sessions/{sid}/options",
                            {"option": top, "revision": 0})
    assert st == 200
    assert diag["constraint_state"]["state"] == "well"

    # options generated before a mutation are stale afterwards
    st, opts2 = service.call("GET", f"/sessions/{sid}/options")
    st, err = service.call("POST", f"/sessions/{sid}/options",
                           {"option": "remove:99999", "revision": 1})
    assert st == 409


def test_service_parameter_change(service):
    doc, f = cuboid_doc()
    _st, info = service.call("POST", "/sessions", {"model": json.loads(doc)})
    sid = info["session"]
    st, diag = service.call("POST", f"/sessions/{sid}/parameters",
                            {"constraint_id": 2, "value": 2.0, "revision": 0})
    assert st == 200
    assert diag["volume"] == pytest.approx(2.0, abs=1e-8)


def test_service_bad_edit_structured_error(service):
    doc, f = cuboid_doc()
    _st, info = service.call("POST", "/sessions", {"model": json.loads(doc)})
    sid = info["session"]
    st, err = service.call("POST", f"/sessions/{info['session']}/edits",
                           {"edit": {"op": "push_pull_translate", "faces": [f["T"]],
                                     "direction": [0, 0, -1], "distance": 1.5},
                            "revision": 0})
    assert st == 422
    assert err["error"] == "edit-rejected"
    assert "last_valid_t" in err


def test_service_diagnostics_cycle_pattern(service):
    m, gcs, _f = pocket_block_gcs(extra_cycle=True)
    doc = save_model(m, gcs)
    _st, info = service.call("POST", "/sessions", {"model": json.loads(doc)})
    st, payload = service.call("GET", f"/sessions/{info['session']}/constraints")
    assert st == 200
    assert payload["constraint_state"]["state"] == "over"
    assert [c["support"] for c in payload["certificates"]] == [[5, 6, 7]]
