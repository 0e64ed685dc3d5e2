"""Command-line front end: ``halfspace <command> --config cfg.json --out dir``.

Each run writes ``<command>.csv``, ``<command>.summary.json`` and
``<command>.manifest.txt`` to the output directory.  Exit codes: 0 when
every check passes, 1 when some check fails, 2 when a case errors or the
config cannot be read.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io as _io
from .suite import RUNNERS, CaseResult, ConfigError, expand_config, run_case

EXIT_CODES = {"pass": 0, "fail": 1, "error": 2}


class ReportSink:
    """Append-only row collection, written once in case order."""

    def __init__(self):
        self._rows = []

    def extend(self, rows) -> None:
        self._rows.extend(rows)

    @property
    def rows(self) -> list[dict]:
        return list(self._rows)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if x is None or isinstance(x, str):
        return x
    return str(x)


def run_suite(command: str, cases: list[dict], jobs: int = 1) -> list[CaseResult]:
    if jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_case, [command] * len(cases), cases))
    return [run_case(command, c) for c in cases]


def summarize(command: str, results: list[CaseResult], strict: bool) -> dict:
    cases = []
    worst = "pass"
    for r in results:
        st = r.status(strict)
        if EXIT_CODES[st] > EXIT_CODES[worst]:
            worst = st
        failing = [c.name for c in r.checks if not c.passed]
        cases.append({"case_id": r.case_id, "status": st, "error": r.error,
                      "first_failure": failing[0] if failing else None,
                      "checks": [c.to_dict() for c in r.checks], "flags": r.flags})
    return _jsonable({"command": command, "strict": strict, "status": worst,
                      "exit_code": EXIT_CODES[worst], "cases": cases})


def write_outputs(out: Path, command: str, results, summary: dict, config_bytes: bytes,
                  config_path: str, jobs: int, wall: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    sink = ReportSink()
    for r in results:
        sink.extend(r.rows)
    _io.write_csv(sink.rows, out / f"{command}.csv")
    _io.dump_json(summary, out / f"{command}.summary.json")
    lines = [
        f"command: {command}",
        f"config: {config_path}",
        f"config_sha256: {hashlib.sha256(config_bytes).hexdigest()}",
        f"halfspace: {__version__}",
        f"python: {platform.python_version()}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
        f"jobs: {jobs}",
        f"strict: {summary['strict']}",
        f"status: {summary['status']}",
        f"exit_code: {summary['exit_code']}",
        f"wall_time_s: {wall:.3f}",
    ]
    (out / f"{command}.manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="halfspace",
                                description="Factorization and boundary value experiments "
                                            "for t-independent elliptic operators.")
    p.add_argument("command", choices=sorted(RUNNERS))
    p.add_argument("--config", required=True, help="JSON case or suite file")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--strict", action="store_true",
                   help="treat unverified structural hypotheses as failures")
    p.add_argument("--jobs", type=int, default=1, help="cases run in parallel (default 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        raw = Path(args.config).read_bytes()
        cases = expand_config(json.loads(raw.decode("utf-8")))
    except (OSError, ValueError, ConfigError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    results = run_suite(args.command, cases, args.jobs)
    summary = summarize(args.command, results, args.strict)
    write_outputs(Path(args.out), args.command, results, summary, raw, args.config, args.jobs,
                  time.perf_counter() - start)
    for case in summary["cases"]:
        detail = case["error"] or case["first_failure"] or ""
        print(f"{case['status'].upper():5s} {case['case_id']} {detail}".rstrip())
    return int(summary["exit_code"])


if __name__ == "__main__":
    sys.exit(main())
