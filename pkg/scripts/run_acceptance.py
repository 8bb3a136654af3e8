#!/usr/bin/env python3
"""Run the acceptance suite and print one PASS/FAIL line per criterion."""
import argparse
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-k", help="only criteria matching this pytest expression")
    args = ap.parse_args(argv)
    pargs = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-s", "-p", "no:cacheprovider"]
    if args.k:
        pargs += ["-k", args.k]
    return int(pytest.main(pargs))


if __name__ == "__main__":
    sys.exit(main())
