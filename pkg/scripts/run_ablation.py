#!/usr/bin/env python3
"""Prompt ablations: comments and assert feedback on/off, object-list placement,
number of examples. One overall SR / Exec / GCR line per variant.

    python scripts/run_ablation.py --backend scripted --runs 5
"""

import argparse
import itertools
from pathlib import Path

from codeplan.cli import BACKENDS, RunConfig, cmd_evaluate


def variants(num_examples):
    for comments, feedback in itertools.product((True, False), repeat=2):
        yield dict(comments=comments, feedback=feedback)
    yield dict(placement="per-function")
    for n in num_examples:
        yield dict(num_examples=n)


def label(v):
    if "comments" in v:
        return f"comments={'Y' if v['comments'] else 'N'} feedback={'Y' if v['feedback'] else 'N'}"
    return " ".join(f"{k}={val}" for k, val in v.items())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--backend", choices=BACKENDS, default="scripted")
    ap.add_argument("--provider")
    ap.add_argument("--scene", default="env0")
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--num-examples", type=int, nargs="*", default=[1, 2])
    ap.add_argument("--out", default="runs/ablation")
    args = ap.parse_args()

    print(f"{'variant':<34}{'SR':<11}{'Exec':<11}{'GCR':<11}")
    for i, v in enumerate(variants(args.num_examples)):
        cfg = RunConfig(scene=args.scene, backend=args.backend, provider=args.provider, runs=args.runs,
                        out=str(Path(args.out) / f"v{i}"), **v)
        _, report = cmd_evaluate(cfg)
        o = report.overall
        print(f"{label(v):<34}{o['sr'].fmt():<11}{o['exec'].fmt():<11}{o['gcr'].fmt():<11}")


if __name__ == "__main__":
    main()
