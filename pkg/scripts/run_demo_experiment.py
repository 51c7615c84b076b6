#!/usr/bin/env python3
"""End-to-end demo: build the demo corpus, run every training-data variant,
and print the comparison table. Everything lands under one working directory.
"""

import argparse
import sys
from pathlib import Path

from speechaug.config import load_config
from speechaug.minicorpus import build_mini_corpus
from speechaug.pipeline import run_experiment

CONFIG_TEMPLATE = """\
[paths]
manifest = {manifest}

[generation]
count = {count}
seed = {seed}

[lm]
order = 4
kappa = 0.04
"""


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--count", type=int, default=20, help="synthetic sentences to keep")
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--hyp-dir", default=None, help="per-variant hypothesis files to score")
    args = parser.parse_args(argv)

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    manifest = build_mini_corpus(workdir / "corpus")

    config_path = workdir / "experiment.ini"
    config_path.write_text(
        CONFIG_TEMPLATE.format(manifest=manifest, count=args.count, seed=args.seed),
        encoding="utf-8",
    )

    cfg = load_config(config_path)
    report = run_experiment(cfg, workdir / "variants", hyp_dir=args.hyp_dir)
    print(report.to_text())
    print(f"artifacts under {workdir / 'variants'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
