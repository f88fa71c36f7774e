#!/usr/bin/env python3
"""Download the benchmark datasets into a data directory.

The four ETT files are fetched directly. Weather, Electricity, and Traffic
are distributed by their original providers in raw form and need the usual
community preprocessing into single-CSV layout (date column + channels);
this script prints where to get them.

Usage: python scripts/fetch_datasets.py [--data-dir data]
"""

import argparse
import sys
import urllib.request
from pathlib import Path

ETT_BASE = "https://raw.githubusercontent.com/zhouhaoyi/ETDataset/main/ETT-small"
ETT_FILES = ["ETTh1.csv", "ETTh2.csv", "ETTm1.csv", "ETTm2.csv"]

MANUAL_SOURCES = {
    "electricity.csv": "https://archive.ics.uci.edu/ml/datasets/ElectricityLoadDiagrams20112014",
    "traffic.csv": "http://pems.dot.ca.gov",
    "weather.csv": "https://www.bgc-jena.mpg.de/wetter/",
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default="data", type=Path)
    args = parser.parse_args()
    args.data_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name in ETT_FILES:
        dest = args.data_dir / name
        if dest.exists():
            print(f"{dest} already present, skipping")
            continue
        url = f"{ETT_BASE}/{name}"
        print(f"fetching {url}")
        try:
            with urllib.request.urlopen(url, timeout=60) as resp:
                dest.write_bytes(resp.read())
            print(f"  -> {dest} ({dest.stat().st_size} bytes)")
        except OSError as err:
            failures += 1
            print(f"  failed: {err}", file=sys.stderr)
    print("\nNot auto-fetched (raw distributions need preprocessing):")
    for name, url in MANUAL_SOURCES.items():
        print(f"  {name}: {url}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
