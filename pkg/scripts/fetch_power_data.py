#!/usr/bin/env python3
"""Download the UCI household electric power consumption dataset.

Fetches the zip archive from the UCI repository and extracts
``household_power_consumption.txt`` into ``data/`` (about 127 MB on disk,
2,075,259 minute-resolution rows, ';' separated, '?' marks missing values).
Needs outbound network access; on an offline machine, download the archive
elsewhere and drop the extracted .txt into data/ yourself, or point the
LSTCN_POWER_DATA environment variable at it.

Usage:
    python scripts/fetch_power_data.py [--dest data/]
"""

import argparse
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

POWER_URL = (
    "https://archive.ics.uci.edu/static/public/235/"
    "individual+household+electric+power+consumption.zip"
)
MEMBER = "household_power_consumption.txt"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default="data", help="output directory")
    args = parser.parse_args()

    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    target = dest / MEMBER
    if target.exists():
        print(f"already present: {target}")
        return 0

    print(f"downloading {POWER_URL} ...")
    try:
        with urllib.request.urlopen(POWER_URL, timeout=120) as response:
            payload = response.read()
    except OSError as exc:
        print(f"download failed ({exc}); fetch the archive manually and "
              f"extract {MEMBER} into {dest}/", file=sys.stderr)
        return 1

    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        archive.extract(MEMBER, path=dest)
    print(f"wrote {target} ({target.stat().st_size / 1e6:.0f} MB)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
