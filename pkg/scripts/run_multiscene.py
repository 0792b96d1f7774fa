#!/usr/bin/env python3
"""Same suite config on several scenes; only the scene changes between runs.

    python scripts/run_multiscene.py --scenes env0 env1 env2 --backend fixture
"""

import argparse
from pathlib import Path

from codeplan.cli import BACKENDS, RunConfig, cmd_evaluate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenes", nargs="+", default=["env0", "env1", "env2"])
    ap.add_argument("--backend", choices=BACKENDS, default="fixture")
    ap.add_argument("--provider")
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--out", default="runs/multiscene")
    args = ap.parse_args()

    print(f"{'scene':<10}{'SR':<11}{'Exec':<11}{'GCR':<11}failed")
    for scene in args.scenes:
        cfg = RunConfig(scene=scene, backend=args.backend, provider=args.provider, runs=args.runs,
                        out=str(Path(args.out) / Path(scene).stem))
        _, report = cmd_evaluate(cfg)
        o = report.overall
        print(f"{Path(scene).stem:<10}{o['sr'].fmt():<11}{o['exec'].fmt():<11}{o['gcr'].fmt():<11}"
              f"{len(report.failed_episodes)}")


if __name__ == "__main__":
    main()
