"""Print one PASS/FAIL line per acceptance criterion.

Usage: python3 scripts/run_acceptance.py [N ...]   (default: all thirteen)
"""
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

import test_acceptance  # noqa: E402


def main(argv):
    chosen = [int(a) for a in argv] or range(1, len(test_acceptance.CRITERIA) + 1)
    outcomes = [test_acceptance.CRITERIA[i - 1]() for i in chosen]
    return 0 if all(outcomes) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
