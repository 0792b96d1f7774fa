#!/usr/bin/env python3
"""Cross-check a report directory without the package's metric code.

Exec is recounted from the trace files; every table mean and std is recomputed
from the per-episode values with the statistics module. Prints mismatches and
exits 1 if there are any.

    python scripts/recompute_report.py runs/latest
"""

import argparse
import json
import statistics
import sys
from pathlib import Path

ACTION_KINDS = {"action", "recovery", "unparseable"}
METRICS = ("sr", "exec", "gcr")
BUCKETS = ((0, 5), (6, 10), (11, 18), (19, None))


def exec_from_trace(path):
    rows = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
    acts = [r for r in rows if r["kind"] in ACTION_KINDS]
    if not acts:
        return 1.0
    return sum(r["status"] == "executed" for r in acts) / len(acts)


def check(report_dir, tol=1e-9):
    report_dir = Path(report_dir)
    doc = json.loads((report_dir / "report.json").read_text())
    problems = []

    def close(a, b, what):
        if abs(a - b) > tol:
            problems.append(f"{what}: report {a} recomputed {b}")

    for ep in doc["episodes"]:
        if ep["trace_file"]:
            close(ep["exec"], exec_from_trace(report_dir / ep["trace_file"]), f"exec {ep['seed_tag']}")
    lengths = {t["task"]: t["plan_length"] for t in doc["tasks"]}
    for t in doc["tasks"]:
        eps = [e for e in doc["episodes"] if e["task"] == t["task"]]
        for m in METRICS:
            vals = [e[m] for e in eps]
            close(t[m]["mean"], statistics.fmean(vals), f"{t['task']} {m} mean")
            close(t[m]["std"], statistics.pstdev(vals), f"{t['task']} {m} std")
    labels = {b["bucket"]: b for b in doc["buckets"]}
    for lo, hi in BUCKETS:
        eps = [e for e in doc["episodes"] if lo <= lengths[e["task"]] and (hi is None or lengths[e["task"]] <= hi)]
        if not eps:
            continue
        b = labels[f"{lo}<=|A|<={hi}" if hi is not None else f"{lo}<=|A|"]
        for m in METRICS:
            close(b[m]["mean"], statistics.fmean(e[m] for e in eps), f"bucket {lo} {m} mean")
            close(b[m]["std"], statistics.pstdev([e[m] for e in eps]), f"bucket {lo} {m} std")
    runs = sorted({e["run"] for e in doc["episodes"]})
    for m in METRICS:
        per_run = [statistics.fmean(e[m] for e in doc["episodes"] if e["run"] == r) for r in runs]
        close(doc["overall"][m]["mean"], statistics.fmean(per_run), f"overall {m} mean")
        close(doc["overall"][m]["std"], statistics.pstdev(per_run), f"overall {m} std")
    return problems


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("report_dir", nargs="?", default="runs/latest")
    args = ap.parse_args()
    if not (Path(args.report_dir) / "report.json").is_file():
        ap.error(f"no report.json in {args.report_dir}")
    problems = check(args.report_dir)
    for p in problems:
        print(p)
    print("ok" if not problems else f"{len(problems)} mismatches")
    sys.exit(1 if problems else 0)


if __name__ == "__main__":
    main()
