"""Run every reference reproduction and print one line per checked quantity; exit 2 on any failure."""

import sys

from homwave.reproduce import REPRODUCTIONS


def main() -> int:
    ok = True
    for rid, fn in REPRODUCTIONS.items():
        res = fn()
        for key, c in res["checks"].items():
            print(f"{rid:9s} {key:14s} {'pass' if c['pass'] else 'FAIL'}  value={c['value']}  tol={c['tol']}")
        ok &= res["pass"]
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
