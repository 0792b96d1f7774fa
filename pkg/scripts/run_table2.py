#!/usr/bin/env python3
"""Per-task SR / Exec / GCR table (mean±std over runs) for one configuration.

    python scripts/run_table2.py --backend scripted --runs 5 --out runs/table2
    python scripts/run_table2.py --backend http --provider provider.json
"""

import argparse
import sys

from codeplan.cli import BACKENDS, ConfigError, RunConfig, cmd_evaluate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="env0")
    ap.add_argument("--backend", choices=BACKENDS, default="scripted")
    ap.add_argument("--provider")
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--parallelism", type=int, default=1)
    ap.add_argument("--mode", default="symbolic", choices=("symbolic", "llm"))
    ap.add_argument("--out", default="runs/table2")
    args = ap.parse_args()
    cfg = RunConfig(scene=args.scene, backend=args.backend, provider=args.provider, runs=args.runs,
                    parallelism=args.parallelism, assertion_mode=args.mode, out=args.out)
    try:
        code, report = cmd_evaluate(cfg)
    except ConfigError as exc:
        sys.exit(f"error: {exc}")
    print(report.render_table(), end="")
    sys.exit(code)


if __name__ == "__main__":
    main()
