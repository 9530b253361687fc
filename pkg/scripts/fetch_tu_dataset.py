#!/usr/bin/env python3
"""Download a TU-collection graph-classification dataset into ./data.

The archives follow the standard layout: DS_A.txt, DS_graph_indicator.txt,
DS_graph_labels.txt and optional node label/attribute files, zipped under a
directory named after the dataset. Example:

    python3 scripts/fetch_tu_dataset.py MUTAG
    python3 -m wavepool stats --data data/MUTAG
"""

from __future__ import annotations

import argparse
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

BASE_URL = "https://www.chrsmrrs.com/graphkerneldatasets"


def fetch(name: str, dest: Path, base_url: str) -> Path:
    url = f"{base_url}/{name}.zip"
    target = dest / name
    if target.is_dir():
        print(f"{target} already exists; leaving it alone")
        return target
    print(f"downloading {url} ...")
    with urllib.request.urlopen(url) as response:
        payload = response.read()
    dest.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        for member in archive.namelist():
            # refuse anything that would escape the destination directory
            if Path(member).is_absolute() or ".." in Path(member).parts:
                raise RuntimeError(f"archive contains unsafe path {member!r}")
        archive.extractall(dest)
    if not target.is_dir():
        raise RuntimeError(f"archive did not contain a {name}/ directory")
    print(f"extracted to {target}")
    return target


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("name", nargs="?", default="MUTAG",
                        help="dataset name in the TU collection (default MUTAG)")
    parser.add_argument("--dest", default="data", help="destination directory")
    parser.add_argument("--base-url", default=BASE_URL)
    args = parser.parse_args(argv)
    try:
        fetch(args.name, Path(args.dest), args.base_url)
    except Exception as exc:  # noqa: BLE001 - report any fetch failure plainly
        print(f"fetch failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
