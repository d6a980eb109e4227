#!/usr/bin/env python3
"""Download the tai256c benchmark files into data/.

The acceptance tests that exercise the n=256 benchmark look for
``data/tai256c.dat`` (instance) and ``data/tai256c.sln`` (best-known
solution) and skip when the files are absent.  Run this script in an
environment with network access to populate them.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

MIRRORS = [
    "https://qaplib.mgi.polymtl.ca/data.d/{name}",
    "https://coral.ise.lehigh.edu/wp-content/uploads/2014/07/{name}",
]
SOLUTION_MIRRORS = [
    "https://qaplib.mgi.polymtl.ca/soln.d/{name}",
]


def fetch(name: str, mirrors, dest: Path) -> bool:
    for mirror in mirrors:
        url = mirror.format(name=name)
        try:
            with urllib.request.urlopen(url, timeout=60) as resp:
                data = resp.read()
        except OSError as exc:
            print(f"  {url}: {exc}")
            continue
        dest.write_bytes(data)
        print(f"  {url} -> {dest} ({len(data)} bytes)")
        return True
    return False


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default=None,
                        help="target directory (default: <repo>/data)")
    args = parser.parse_args()
    dest = Path(args.dest) if args.dest else \
        Path(__file__).resolve().parent.parent / "data"
    dest.mkdir(parents=True, exist_ok=True)

    ok = True
    print("fetching tai256c.dat")
    ok &= fetch("tai256c.dat", MIRRORS, dest / "tai256c.dat")
    print("fetching tai256c.sln")
    ok &= fetch("tai256c.sln", SOLUTION_MIRRORS, dest / "tai256c.sln")
    if not ok:
        print("some downloads failed; try another mirror or fetch manually")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
