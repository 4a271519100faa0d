"""Command-line runner: ``folner run <config|builtin-id|all>`` and ``folner list``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FolnerError
from .experiments import CATALOG, Outcome, builtin_config, catalog, run_experiment, validate

EXIT_PASS, EXIT_FAIL, EXIT_SKIP, EXIT_USAGE = 0, 1, 2, 64
CSV_HEADER = ("replicate", "n", "scheme", "value", "count", "seed")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical (sorted-key, compact) JSON encoding."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.generic, np.ndarray)):
        return _clean(_jsonable(obj))
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def values_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, n, scheme, value, count, seed in rows:
        writer.writerow((i, n, scheme, repr(float(value)), repr(float(count)), seed))
    return buf.getvalue()


def load_config(target: str) -> list[dict]:
    if target == "all":
        return [builtin_config(name) for name in CATALOG]
    if target in CATALOG:
        return [builtin_config(target)]
    path = Path(target)
    if not path.exists():
        raise ConfigError("config", f"no such file or built-in experiment: {target}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    configs = data if isinstance(data, list) else [data]
    for cfg in configs:
        validate(cfg)
    return configs


def write_outputs(out: Path, cfg: dict, outcome: Outcome, wall: float) -> tuple[bool, dict]:
    """Write report, values and manifest; returns (reproducible, manifest)."""
    exp_dir = out / cfg["experiment"]
    exp_dir.mkdir(parents=True, exist_ok=True)
    csv_text = values_csv(outcome.rows)
    digest = config_hash(cfg)
    values_hash = hashlib.sha256(csv_text.encode()).hexdigest()
    manifest_path = exp_dir / "manifest.json"
    reproducible = True
    if manifest_path.exists():
        try:
            old = json.loads(manifest_path.read_text())
        except json.JSONDecodeError:
            old = {}
        if old.get("config_hash") == digest and old.get("values_sha256") not in (None, values_hash):
            reproducible = False
    report = {"experiment": cfg["experiment"], "kind": cfg["kind"], "status": outcome.status,
              "config": cfg, **outcome.report}
    (exp_dir / "report.json").write_text(json.dumps(_clean(report), indent=2, default=_jsonable) + "\n")
    (exp_dir / "values.csv").write_text(csv_text)
    manifest = {
        "experiment": cfg["experiment"], "config_hash": digest, "version": __version__,
        "wall_clock_seconds": round(wall, 3), "files": ["report.json", "values.csv", "manifest.json"],
        "values_sha256": values_hash, "reproducible": reproducible,
    }
    if reproducible:
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return reproducible, manifest


def exit_code(statuses: list[str]) -> int:
    if any(s == "FAIL" for s in statuses):
        return EXIT_FAIL
    if statuses and all(s == "SKIP" for s in statuses):
        return EXIT_SKIP
    return EXIT_PASS


def cmd_run(args) -> int:
    try:
        configs = load_config(args.config)
    except ConfigError as exc:
        print(f"config-invalid: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    statuses, summary = [], []
    for cfg in configs:
        start = time.perf_counter()
        try:
            outcome = run_experiment(cfg, workers=args.workers)
        except ConfigError as exc:
            print(f"config-invalid: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except FolnerError as exc:
            outcome = Outcome("FAIL", {"error": f"{type(exc).__name__}: {exc}"})
        wall = time.perf_counter() - start
        reproducible, manifest = write_outputs(out, cfg, outcome, wall)
        status = outcome.status
        if not reproducible:
            print(f"{cfg['experiment']}: values differ from the existing manifest for the same config",
                  file=sys.stderr)
            status = "FAIL"
        statuses.append(status)
        summary.append({"experiment": cfg["experiment"], "status": status, "seconds": round(wall, 3),
                        "config_hash": manifest["config_hash"]})
        if not args.json:
            print(f"{status:<5} {cfg['experiment']}  ({wall:.1f} s)")
    if args.json:
        print(json.dumps(summary, indent=2))
    return exit_code(statuses)


def cmd_list(args) -> int:
    entries = catalog()
    if args.json:
        print(json.dumps(entries, indent=2))
    else:
        width = max(len(e["id"]) for e in entries)
        for e in entries:
            print(f"{e['id']:<{width}}  {e['anchor']}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="folner", description="Run invariant-averaging experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a config file, a built-in id, or 'all'")
    run.add_argument("config")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", default="results")
    run.add_argument("--json", action="store_true", help="print a machine-readable summary")
    run.set_defaults(func=cmd_run)
    lst = sub.add_parser("list", help="list built-in experiments")
    lst.add_argument("--json", action="store_true")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("--workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
