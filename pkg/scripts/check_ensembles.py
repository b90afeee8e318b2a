#!/usr/bin/env python3
"""Scan data/runs for ensemble directories that fail to load and optionally move them to data/runs/_corrupt.
Print the commands that regenerate them.

Usage:
    python scripts/check_ensembles.py --move

If --move is omitted, the script only reports directories that fail to load.
"""
import argparse
import pathlib
import sys
from typing import List

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.ensemble import load_ensemble  # noqa: E402
from src.errors import FringelabError  # noqa: E402
from src.utils_io import RUNS, read_json  # noqa: E402

CORRUPT_NAME = "_corrupt"


def find_ensembles(root: pathlib.Path) -> List[pathlib.Path]:
    """Directories holding a manifest.json or patterns.csv, outside _corrupt."""
    found = {p.parent for pattern in ("manifest.json", "patterns.csv") for p in root.rglob(pattern)}
    return sorted(d for d in found if CORRUPT_NAME not in d.relative_to(root).parts)


def check_dir(d: pathlib.Path) -> bool:
    try:
        load_ensemble(d)
        return True
    except FringelabError as e:
        print(f"BAD: {d} -> {e}")
        return False


def regenerate_hint(d: pathlib.Path) -> str:
    run_manifest = d.parent / "run_manifest.json"
    config = "<config>"
    if run_manifest.exists():
        try:
            config = read_json(run_manifest).get("config", config)
        except FringelabError:
            pass
    return f"python -m src.cli ensemble --config {config} --out {d.parent}"


def scan_ensembles(root: pathlib.Path, move: bool) -> List[pathlib.Path]:
    dirs = find_ensembles(root) if root.exists() else []
    if not dirs:
        print(f"No ensembles found in {root}")
        return []
    bad = [d for d in dirs if not check_dir(d)]
    if not bad:
        print("All ensembles load")
        return []
    print("\nCorrupted ensembles:")
    for b in bad:
        print(b)
    if move:
        corrupt = root / CORRUPT_NAME
        corrupt.mkdir(parents=True, exist_ok=True)
        for b in bad:
            dest = corrupt / "__".join(b.relative_to(root).parts)
            b.rename(dest)
            print(f"Moved {b} -> {dest}")
    print("\nTo regenerate, run:")
    for b in bad:
        print(regenerate_hint(b))
    return bad


if __name__ == '__main__':
    p = argparse.ArgumentParser()
    p.add_argument("--root", type=pathlib.Path, default=RUNS, help="Directory to scan (default: data/runs)")
    p.add_argument("--move", action="store_true", help="Move corrupted ensembles to <root>/_corrupt")
    args = p.parse_args()
    scan_ensembles(args.root, args.move)
