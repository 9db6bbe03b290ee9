"""Command line entry points.

    vdm apply   --model M --script S --out O --report R [--auto-resolve]
    vdm analyze --model M --report R
    vdm serve   --port P [--host H]

Exit code 0 on success; on a failing script step the code is the step
index + 1 (capped at 120) and the failing index is printed to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .io import canonical_json, load_model
from .pipeline import run_script, _plain


def _cmd_apply(args) -> int:
    model = Path(args.model).read_bytes()
    script = json.loads(Path(args.script).read_text())
    if not isinstance(script, list):
        print("script must be a JSON array of operations", file=sys.stderr)
        return 120
    final_doc, report = run_script(model, script,
                                   auto_resolve_edits=args.auto_resolve)
    if args.out:
        Path(args.out).write_bytes(final_doc)
    if args.report:
        Path(args.report).write_text(canonical_json(report))
    if report["failure"] is not None:
        idx = report["failure"]["index"]
        print(f"step {idx} failed: {report['failure']['error']}", file=sys.stderr)
        return min(idx + 1, 120)
    return 0


def _cmd_analyze(args) -> int:
    from .pipeline import Session
    solid, gcs = load_model(Path(args.model).read_bytes())
    session = Session(solid, gcs)
    payload = _plain(session.analysis())
    text = canonical_json(payload)
    if args.report:
        Path(args.report).write_text(text)
    else:
        print(text)
    return 0


def _cmd_serve(args) -> int:
    from .service import serve
    serve(args.port, args.host)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vdm")
    sub = parser.add_subparsers(dest="command", required=True)

    p_apply = sub.add_parser("apply", help="run an edit script against a model")
    p_apply.add_argument("--model", required=True)
    p_apply.add_argument("--script", required=True)
    p_apply.add_argument("--out")
    p_apply.add_argument("--report")
    p_apply.add_argument("--auto-resolve", action="store_true")
    p_apply.set_defaults(fn=_cmd_apply)

    p_an = sub.add_parser("analyze", help="validity + constraint-state report")
    p_an.add_argument("--model", required=True)
    p_an.add_argument("--report")
    p_an.set_defaults(fn=_cmd_analyze)

    p_serve = sub.add_parser("serve", help="run the session service")
    p_serve.add_argument("--port", type=int, required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(fn=_cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
