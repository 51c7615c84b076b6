#!/usr/bin/env python3
"""Build the bundled demo corpus (20 utterances with synthesized audio)."""

import argparse
import sys

from speechaug.corpus import load_manifest
from speechaug.minicorpus import MINI_SEED, build_mini_corpus


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=MINI_SEED)
    args = parser.parse_args(argv)

    manifest_path = build_mini_corpus(args.out, seed=args.seed)
    manifest = load_manifest(manifest_path)
    total_s = sum(rec.duration_ms for rec in manifest) / 1000.0
    print(f"{manifest_path}: {len(manifest)} utterances, {total_s:.1f}s audio")
    return 0


if __name__ == "__main__":
    sys.exit(main())
