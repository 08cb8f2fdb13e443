"""Command-line entry point: ``qrukit run|validate|oracle``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import inspect
import io
import json
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from .._rng import spawn_seeds
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import fit_slopes, run_point, sweep_points
from .oracles import CASES

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def git_blob_hash(data: bytes) -> str:
    """SHA-1 of ``data`` as git would hash a blob with that content."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _cell(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def to_csv(rows: list[dict]) -> str:
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _point_job(args):
    cfg, n, L, seed = args
    return run_point(cfg, n, L, seed)


def execute(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[dict], list[dict]]:
    """Run every sweep point; results come back in sweep order whatever the pool size."""
    points = sweep_points(cfg)
    seeds = spawn_seeds(cfg.seed, len(points))
    jobs = [(cfg, n, L, s) for (n, L), s in zip(points, seeds)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_point_job, jobs))
    else:
        results = [_point_job(j) for j in jobs]
    rows = [r for part, _ in results for r in part]
    return rows, [summary for _, summary in results]


def write_outputs(cfg: ExperimentConfig, rows, summaries, out_dir: Path, threads: int, wall: float) -> dict:
    payload = {"kind": cfg.kind, "seed": cfg.seed, "points": summaries}
    if cfg.kind == "variance_scaling":
        payload["slopes"] = fit_slopes(rows)
    csv_bytes = to_csv(rows).encode("utf-8")
    json_bytes = (json.dumps(_jsonable(payload), sort_keys=True, indent=1) + "\n").encode("utf-8")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.csv").write_bytes(csv_bytes)
    (out_dir / "results.json").write_bytes(json_bytes)
    manifest = {
        "version": __version__,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "threads": threads,
        "config": _jsonable(cfg.raw),
        "config_text": cfg.source,
        "hashes": {
            "config": git_blob_hash(cfg.source.encode("utf-8")),
            "results.csv": git_blob_hash(csv_bytes),
            "results.json": git_blob_hash(json_bytes),
        },
        "wall_time_s": wall,
        "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return manifest


def _failing_module(exc: BaseException) -> str:
    name = "qrukit"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        mod = frame.f_globals.get("__name__", "")
        if mod.startswith("qrukit"):
            name = mod
    return name


def _load(path: str, args) -> ExperimentConfig:
    cfg = load_config(path)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_validate(args) -> int:
    cfg = _load(args.config, args)
    print(f"{args.config}: ok ({cfg.kind}, {len(sweep_points(cfg))} sweep points)")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args.config, args)
    out_dir = Path(args.out_dir or cfg.out_dir)
    start = time.perf_counter()
    rows, summaries = execute(cfg, args.threads)
    wall = time.perf_counter() - start
    write_outputs(cfg, rows, summaries, out_dir, args.threads, wall)
    print(f"wrote {len(rows)} rows to {out_dir} in {wall:.1f} s")
    return EXIT_OK


def cmd_oracle(args) -> int:
    fn = CASES[args.case]
    seeded = args.seed is not None and "seed" in inspect.signature(fn).parameters
    result = fn(seed=args.seed) if seeded else fn()
    print(json.dumps(_jsonable(result), sort_keys=True))
    return EXIT_OK if result["passed"] else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrukit", description="Re-uploading circuit experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweep points")
    common.add_argument("--out-dir", default=None, help="override the config output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run an experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("validate", parents=[common], help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("oracle", parents=[common], help="run a brute-force cross-check")
    p.add_argument("case", choices=sorted(CASES))
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # report which module failed, then exit nonzero
        print(f"error in {_failing_module(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
