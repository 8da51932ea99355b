#!/usr/bin/env python3
"""Print the measured byte-size and operation-count tables for every
implementation column (plain interior protocol plus the three signature
implementations)."""

import argparse
import sys

from rfpop.app.reports import (
    IMPL_CHOICES,
    format_ops,
    format_sizes,
    report_ops,
    report_sizes,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--impl", choices=IMPL_CHOICES, action="append",
                        help="restrict to one column (repeatable)")
    args = parser.parse_args()
    impls = args.impl or list(IMPL_CHOICES)

    print("== byte sizes ==")
    for impl in impls:
        print(format_sizes(report_sizes(impl)))
        print()
    print("== operation counts ==")
    for impl in impls:
        print(format_ops(report_ops(impl)))
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
