#!/usr/bin/env python3
"""Generate a synthetic corridor fixture set (images, OBB labels, GPS sidecars).

Each pair holds one encroached scene (green blob touching the conductor) and
one control scene (same blob far away), so any alarm threshold placed between
their metrics separates them.
"""

import argparse

from plcorridor.synth import write_fixture_set


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--pairs", type=int, default=3)
    ap.add_argument("--size", type=int, default=640)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    manifest = write_fixture_set(args.out, n_pairs=args.pairs,
                                 size=args.size, seed=args.seed)
    print(f"wrote {len(manifest['entries'])} images under {args.out}")


if __name__ == "__main__":
    main()
