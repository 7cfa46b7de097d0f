"""Run every shipped config through the CLI and print one summary line per run."""
import argparse
import json
import sys
from pathlib import Path

from gaussmix.cli import main

ROOT = Path(__file__).resolve().parents[1]


def run(out_root: Path, skip: set[str]) -> int:
    status = 0
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        if cfg.stem in skip:
            continue
        code = main(["run", "--config", str(cfg), "--out", str(out_root / cfg.stem)])
        status = max(status, code)
        if code == 0:
            manifest = json.loads((out_root / cfg.stem / "manifest.json").read_text())
            print(f"  {cfg.stem}: {manifest['wall_time_s']:.2f}s")
    return status


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=ROOT / "runs")
    parser.add_argument("--skip", nargs="*", default=[], help="config stems to skip")
    args = parser.parse_args()
    sys.exit(run(args.out, set(args.skip)))
