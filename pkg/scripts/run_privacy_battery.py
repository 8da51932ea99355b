#!/usr/bin/env python3
"""Run the privacy experiment battery and print one verdict line per pairing.

Covers the built-in adversary suite under the ledger-blinded experiment, plus
the counterexample distinguisher under the pure-random predecessor experiment
against both the flawed protocol and the refined one.  Use --trials to trade
runtime for tighter intervals.
"""

import argparse
import sys

from rfpop.app.cli import main as cli_main


def run(args_list):
    print("$ rfpop " + " ".join(args_list))
    rc = cli_main(args_list)
    print()
    return rc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=400)
    parser.add_argument("--seed", default="privacy-battery")
    args = parser.parse_args()

    t = str(args.trials)
    failures = 0
    pairings = [
        ["experiment", "--name", "unp-sharp", "--adversary", "coin-flipper",
         "--protocol", "mapop", "--trials", t, "--seed", args.seed + "-1"],
        ["experiment", "--name", "unp-sharp", "--adversary", "honest-runner",
         "--protocol", "mapop", "--trials", t, "--seed", args.seed + "-2"],
        ["experiment", "--name", "unp-sharp", "--adversary", "transcript-statistics",
         "--protocol", "mapop", "--trials", t, "--seed", args.seed + "-3"],
        ["experiment", "--name", "unp-sharp", "--adversary", "repeated-query",
         "--protocol", "mapop", "--trials", t, "--seed", args.seed + "-4"],
        ["experiment", "--name", "unp-sharp", "--adversary", "bit-flipper",
         "--message-index", "4", "--bit", "0",
         "--protocol", "mapop", "--trials", t, "--seed", args.seed + "-5"],
        ["experiment", "--name", "unp-sharp", "--adversary", "replayer",
         "--message-index", "4",
         "--protocol", "mapop", "--trials", t, "--seed", args.seed + "-6"],
        ["experiment", "--name", "unp-sharp", "--adversary", "desync-attacker",
         "--drop-count", "3",
         "--protocol", "mapop", "--trials", t, "--seed", args.seed + "-7"],
        ["experiment", "--name", "unp-star", "--adversary", "cex-distinguisher",
         "--protocol", "cex", "--trials", t, "--seed", args.seed + "-8"],
        ["experiment", "--name", "unp-star", "--adversary", "cex-distinguisher",
         "--protocol", "ma", "--trials", t, "--seed", args.seed + "-9"],
    ]
    for pairing in pairings:
        failures += run(pairing)
    print(f"battery done: {len(pairings) - failures}/{len(pairings)} within bounds")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
