"""Model document serialization.

One JSON document holds a "solid" section (vertices, edges, faces with
planes/senses/loops) and a "gcs" section (constraints over face ids).
Lengths are model units; angles are degrees in documents and radians in
memory. Floats are emitted with repr (17 significant digits), so
save(load(doc)) round-trips bit-for-float.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .brep import Edge, Face, Shell, Solid, Vertex
from .errors import DocumentError, ValidationError
from .gcs import Constraint, Gcs
from .geometry import Plane


def _require(cond: bool, msg: str, path: str):
    if not cond:
        raise DocumentError(msg, path)


def _num(x, path) -> float:
    _require(isinstance(x, (int, float)) and not isinstance(x, bool),
             "expected number", path)
    v = float(x)
    _require(math.isfinite(v), "number must be finite", path)
    return v


def _vec3(x, path) -> list[float]:
    _require(isinstance(x, list) and len(x) == 3, "expected [x, y, z]", path)
    return [_num(c, f"{path}[{i}]") for i, c in enumerate(x)]


def parse_solid(doc: dict, path: str = "$.solid") -> Solid:
    _require(isinstance(doc, dict), "expected object", path)
    for key in ("vertices", "edges", "faces"):
        _require(key in doc and isinstance(doc[key], list),
                 f"missing array '{key}'", path)

    vertices: dict[int, Vertex] = {}
    for i, v in enumerate(doc["vertices"]):
        p = f"{path}.vertices[{i}]"
        _require(isinstance(v, dict) and "id" in v and "pos" in v,
                 "vertex needs id and pos", p)
        vid = v["id"]
        _require(isinstance(vid, int), "id must be integer", p)
        _require(vid not in vertices, f"duplicate vertex id {vid}", p)
        vertices[vid] = Vertex(vid, np.array(_vec3(v["pos"], f"{p}.pos")))

    edges: dict[int, Edge] = {}
    for i, e in enumerate(doc["edges"]):
        p = f"{path}.edges[{i}]"
        _require(isinstance(e, dict) and all(k in e for k in ("id", "v0", "v1")),
                 "edge needs id, v0, v1", p)
        eid = e["id"]
        _require(isinstance(eid, int), "id must be integer", p)
        _require(eid not in edges, f"duplicate edge id {eid}", p)
        _require(e["v0"] in vertices and e["v1"] in vertices,
                 "edge references unknown vertex", p)
        edges[eid] = Edge(eid, e["v0"], e["v1"])

    faces: dict[int, Face] = {}
    for i, f in enumerate(doc["faces"]):
        p = f"{path}.faces[{i}]"
        _require(isinstance(f, dict) and all(k in f for k in ("id", "plane", "loops")),
                 "face needs id, plane, loops", p)
        fid = f["id"]
        _require(isinstance(fid, int), "id must be integer", p)
        _require(fid not in faces, f"duplicate face id {fid}", p)
        pl = f["plane"]
        _require(isinstance(pl, dict) and "normal" in pl and "offset" in pl,
                 "plane needs normal and offset", f"{p}.plane")
        normal = np.array(_vec3(pl["normal"], f"{p}.plane.normal"))
        offset = _num(pl["offset"], f"{p}.plane.offset")
        nn = float(np.linalg.norm(normal))
        if abs(nn - 1.0) > 1e-6:
            raise ValidationError(
                f"{p}.plane.normal: norm {nn:.6g} violates the unit-normal invariant")
        sense = f.get("sense", 1)
        _require(sense in (1, -1), "sense must be 1 or -1", p)
        loops = f["loops"]
        _require(isinstance(loops, list) and loops, "loops must be nonempty", p)
        parsed_loops = []
        for li, loop in enumerate(loops):
            lp = f"{p}.loops[{li}]"
            _require(isinstance(loop, list) and len(loop) >= 3,
                     "loop needs >= 3 edge references", lp)
            for se in loop:
                _require(isinstance(se, int) and se != 0,
                         "loop entries are signed nonzero edge ids", lp)
                _require(abs(se) in edges, f"unknown edge {se}", lp)
            parsed_loops.append(list(loop))
        faces[fid] = Face(fid, Plane(normal / nn, offset), int(sense), parsed_loops)

    shells = None
    if "shells" in doc:
        _require(isinstance(doc["shells"], list), "shells must be a list", path)
        shells = []
        for i, s in enumerate(doc["shells"]):
            _require(isinstance(s, list), "shell must be a face id list",
                     f"{path}.shells[{i}]")
            shells.append(Shell(list(s)))
    genus = doc.get("genus", 0)
    _require(isinstance(genus, int) and genus >= 0, "genus must be >= 0", path)

    solid = Solid(vertices=vertices, edges=edges, faces=faces,
                  shells=shells or [], genus=genus)
    solid.check_references()
    return solid


def parse_gcs(doc: dict, solid: Solid, path: str = "$.gcs") -> Gcs:
    _require(isinstance(doc, dict), "expected object", path)
    raw = doc.get("constraints", [])
    _require(isinstance(raw, list), "constraints must be a list", path)
    constraints: list[Constraint] = []
    seen: set[int] = set()
    for i, c in enumerate(raw):
        p = f"{path}.constraints[{i}]"
        _require(isinstance(c, dict) and "id" in c and "type" in c and "refs" in c,
                 "constraint needs id, type, refs", p)
        cid = c["id"]
        _require(isinstance(cid, int) and cid not in seen, "ids must be unique ints", p)
        seen.add(cid)
        ctype = c["type"]
        _require(ctype in Constraint.ARITY, f"unknown type '{ctype}'", p)
        refs = c["refs"]
        _require(isinstance(refs, list) and len(refs) == Constraint.ARITY[ctype],
                 f"type '{ctype}' needs {Constraint.ARITY[ctype]} refs", p)
        for r in refs:
            _require(r in solid.faces, f"ref {r} is not a face id", p)
        value = None
        if ctype in ("distance", "angle"):
            _require("value" in c, f"type '{ctype}' needs a value", p)
            value = _num(c["value"], f"{p}.value")
            if ctype == "angle":
                value = math.radians(value)
        else:
            _require("value" not in c or c["value"] is None,
                     f"type '{ctype}' takes no value", p)
        constraints.append(Constraint(cid, ctype, list(refs), value))
    return Gcs(entities=sorted(solid.faces), constraints=constraints)


def load_model(data: bytes | str) -> tuple[Solid, Gcs]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}", "$") from None
    _require(isinstance(doc, dict) and "solid" in doc, "missing 'solid' section", "$")
    solid = parse_solid(doc["solid"])
    gcs = parse_gcs(doc.get("gcs", {}), solid)
    return solid, gcs


def solid_to_dict(solid: Solid) -> dict:
    return {
        "vertices": [{"id": v, "pos": [float(x) for x in solid.vertices[v].position]}
                     for v in sorted(solid.vertices)],
        "edges": [{"id": e, "v0": solid.edges[e].v0, "v1": solid.edges[e].v1}
                  for e in sorted(solid.edges)],
        "faces": [{
            "id": f,
            "plane": {"normal": [float(x) for x in solid.faces[f].plane.normal],
                      "offset": float(solid.faces[f].plane.offset)},
            "sense": solid.faces[f].sense,
            "loops": [list(l) for l in solid.faces[f].loops],
        } for f in sorted(solid.faces)],
        "shells": [sorted(s.face_ids) for s in solid.shells],
        "genus": solid.genus,
    }


def gcs_to_dict(gcs: Gcs) -> dict:
    out = []
    for c in gcs.constraints:
        d = {"id": c.id, "type": c.type, "refs": list(c.refs)}
        if c.type == "angle":
            d["value"] = math.degrees(c.value)
        elif c.type == "distance":
            d["value"] = c.value
        out.append(d)
    return {"constraints": out}


def save_model(solid: Solid, gcs: Gcs) -> bytes:
    doc = {"solid": solid_to_dict(solid), "gcs": gcs_to_dict(gcs)}
    return canonical_json(doc).encode("utf-8")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, repr floats, no whitespace drift."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
