#!/usr/bin/env python3
"""Record completion fixtures for the bundled scenes under the default config.

By default completions come from the scripted plans, so the fixture store is a
frozen snapshot of the mock backend. With --provider the completions come from
a live HTTP endpoint instead.

    python scripts/record_fixtures.py [--scenes env0 env1 env2] [--provider provider.json]
"""

import argparse
import shutil

from codeplan.cli import RunConfig, load_run
from codeplan.llm import FixtureBackend, HTTPBackend, ProviderConfig, ScriptedBackend
from codeplan.resources import FIXTURES_DIR, SCRIPTED_DIR
from codeplan.suite import run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenes", nargs="+", default=["env0", "env1", "env2"])
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--provider")
    ap.add_argument("--out", default=str(FIXTURES_DIR))
    ap.add_argument("--clean", action="store_true", help="delete the store first")
    args = ap.parse_args()

    if args.clean:
        shutil.rmtree(args.out, ignore_errors=True)
    source = HTTPBackend(ProviderConfig.load(args.provider)) if args.provider \
        else ScriptedBackend.from_directory(SCRIPTED_DIR)
    store = FixtureBackend(args.out, record_from=source)
    for scene in args.scenes:
        loaded = load_run(RunConfig(scene=scene, runs=args.runs))
        report = run_suite(loaded.tasks, args.runs, loaded.template, store)
        print(f"{scene}: {len(report.episodes)} episodes, "
              f"SR {report.overall['sr'].fmt()}, failed {len(report.failed_episodes)}")


if __name__ == "__main__":
    main()
