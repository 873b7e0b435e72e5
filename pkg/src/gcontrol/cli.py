"""Command line entry point: ``gcontrol run|batch|metrics``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

from .harness import emit, load_config, run_scenario, summarize_csv

OVERRIDES = ("plant", "controller", "traj", "dt", "duration", "seed", "gust")


def _overrides(ns) -> dict:
    return {k: str(getattr(ns, k)) for k in OVERRIDES if getattr(ns, k) is not None}


def _run_one(path: str, out: str, overrides: Optional[dict] = None) -> dict:
    cfg = load_config(path, overrides)
    result = run_scenario(cfg)
    paths = emit(result, out)
    return {"name": cfg.name, "config": str(path), "csv": str(paths["csv"]),
            "diverged": result.diverged, "diagnostic": result.diagnostic,
            "summary": result.summary}


def _report(rec: dict, stream=None):
    stream = stream or sys.stdout
    s = rec["summary"]
    line = (f"{rec['name']}: rmse={s['rmse']:.6g} rise={s['rise_time_s']} "
            f"settle={s['settling_time_s']} rules={s['final_rule_count']} "
            f"max|u|={s['max_abs_u']} -> {rec['csv']}")
    print(line, file=stream)
    if rec["diverged"]:
        print(f"{rec['name']}: DIVERGED: {rec['diagnostic']}", file=sys.stderr)


def cmd_run(ns) -> int:
    rec = _run_one(ns.config, ns.out, _overrides(ns))
    _report(rec)
    return 2 if rec["diverged"] else 0


def cmd_batch(ns) -> int:
    configs = sorted(str(p) for p in Path(ns.directory).glob("*.ini"))
    if not configs:
        print(f"no *.ini scenario files in {ns.directory}", file=sys.stderr)
        return 1
    if ns.workers == 1:
        records = [_run_one(c, ns.out) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=ns.workers) as pool:
            records = list(pool.map(_run_one, configs, [ns.out] * len(configs)))
    for rec in records:
        _report(rec)
    return 2 if any(r["diverged"] for r in records) else 0


def cmd_metrics(ns) -> int:
    summary = summarize_csv(ns.csv)
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcontrol",
                                 description="Run evolving neuro-fuzzy control scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario config")
    run.add_argument("config")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--plant", choices=("lti", "hexa", "bifw"))
    run.add_argument("--controller", choices=("g", "pid"))
    run.add_argument("--traj", help="trajectory kind")
    run.add_argument("--dt", type=float)
    run.add_argument("--duration", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--gust", choices=("on", "off"))
    run.set_defaults(func=cmd_run)

    batch = sub.add_parser("batch", help="run every *.ini in a directory")
    batch.add_argument("directory")
    batch.add_argument("--out", default="results")
    batch.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: CPU count; 1 runs in-process)")
    batch.set_defaults(func=cmd_batch)

    met = sub.add_parser("metrics", help="recompute summary metrics from a trace CSV")
    met.add_argument("csv")
    met.set_defaults(func=cmd_metrics)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    if getattr(ns, "gust", None) is not None:
        ns.gust = "true" if ns.gust == "on" else "false"
    try:
        return ns.func(ns)
    except (FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
