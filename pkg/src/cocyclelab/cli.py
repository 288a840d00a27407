"""Command-line front end: a thin client over the pipeline service.

Subcommands name the pipeline; the config file (JSON) supplies the rest.
By default the service runs in-process; ``--server`` points the same client
at a remote instance instead.  Exit status: 0 all stages pass, 1 numerical
failure (the failing stage is named), 2 malformed config or usage.
"""

import argparse
import json
import os
import sys
from pathlib import Path

PIPELINE_NAMES = ("reconstruct", "trivialize", "contract", "bundle", "metric",
                  "selftest")


def build_parser():
    p = argparse.ArgumentParser(
        prog="cocyclelab",
        description="deterministic experiment pipelines for automorphism "
                    "families")
    sub = p.add_subparsers(dest="command", required=True)
    for name in PIPELINE_NAMES:
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", type=Path, default=None,
                        help="JSON config file (defaults per pipeline)")
        sp.add_argument("--out", type=Path, default=None,
                        help="directory for the report and CSV tables")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--tol", type=float, default=None,
                        help="override the headline tolerance")
        sp.add_argument("--server", type=str, default=None,
                        help="URL of a running service (default: in-process)")
    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8711)
    return p


def load_config(args):
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}")
        except json.JSONDecodeError as err:
            raise UsageError(f"config is not valid JSON: {err}")
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    cfg.setdefault("pipeline", args.command)
    if cfg["pipeline"] != args.command:
        raise UsageError(
            f"config names pipeline {cfg['pipeline']!r} but the "
            f"{args.command!r} subcommand was used")
    if args.seed is not None:
        if args.command == "reconstruct":
            cfg.setdefault("family", {})["seed"] = args.seed
        else:
            cfg["seed"] = args.seed
    if args.tol is not None:
        if args.command == "reconstruct":
            cfg["impl_tol"] = cfg["group_tol"] = args.tol
        else:
            cfg["tol"] = args.tol
    return cfg


class UsageError(Exception):
    pass


def post_run(cfg, server):
    """POST the config to /run, in-process unless a server URL is given."""
    if server:
        import httpx
        resp = httpx.post(server.rstrip("/") + "/run", json=cfg,
                          timeout=600.0)
    else:
        from fastapi.testclient import TestClient

        from .server import create_app
        with TestClient(create_app()) as client:
            resp = client.post("/run", json=cfg)
    if resp.status_code == 422:
        detail = resp.json().get("detail", "invalid config")
        raise UsageError(f"config rejected: {detail}")
    resp.raise_for_status()
    return resp.json()


def write_outputs(report, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    slim = {k: v for k, v in report.items() if k != "tables"}
    (out_dir / "report.json").write_text(
        json.dumps(slim, indent=2, sort_keys=True) + "\n")
    for name, text in report["tables"].items():
        (out_dir / f"{name}.csv").write_text(text)


def print_report(report):
    for s in report["stages"]:
        flag = "pass" if s["passed"] else "FAIL"
        print(f"[{flag}] {s['name']}: residual {s['residual']:.3e} "
              f"(tol {s['tol']:.1e})")
    for k, v in report["invariants"].items():
        print(f"       {k} = {v}")
    if report["failure_stage"]:
        print(f"[FAIL] stage {report['failure_stage']}: "
              f"{report['failure_message']}", file=sys.stderr)
    verdict = "ok" if report["ok"] else "FAILED"
    print(f"{report['pipeline']}: {verdict} "
          f"({report['wall_clock']:.2f}s, version {report['version']})")


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .server import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        cfg = load_config(args)
        report = post_run(cfg, args.server)
    except UsageError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if args.out is not None:
        write_outputs(report, args.out)
    print_report(report)
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
