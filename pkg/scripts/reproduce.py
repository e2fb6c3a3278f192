"""Run every config in configs/ through the CLI, one output folder each.

    python3 scripts/reproduce.py [--out results] [--threads 4] [names ...]
"""

import argparse
import sys
from pathlib import Path

from bec_superradiance.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", help="config stems, e.g. spectrum_wide scaling (default: all)")
    parser.add_argument("--out", default=str(ROOT / "results"))
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()
    configs = sorted((ROOT / "configs").glob("*.json"))
    if args.names:
        configs = [c for c in configs if c.stem in args.names]
    status = 0
    for cfg in configs:
        print(f"{cfg.stem}: ", end="", flush=True)
        code = cli_main(["--config", str(cfg), "--out", str(Path(args.out) / cfg.stem),
                         "--threads", str(args.threads)])
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
