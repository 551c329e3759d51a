"""Batch entry point: render every applicable figure for a run directory."""
from __future__ import annotations

import argparse
import sys

from .figures import plot_density_current, plot_phase_maps


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscplots",
        description="Render publication figures from an oscphase run "
                    "directory (reads only its CSV/JSON artifacts).")
    parser.add_argument("run_dir", help="directory written by the oscphase CLI")
    parser.add_argument("--out", help="output directory (default: run_dir)")
    parser.add_argument("--figures", default="all",
                        choices=["all", "density", "phase"],
                        help="which figure set to render")
    args = parser.parse_args(argv)

    written = []
    try:
        if args.figures in ("all", "density"):
            written.append(plot_density_current(args.run_dir, args.out))
        if args.figures in ("all", "phase"):
            written.extend(plot_phase_maps(args.run_dir, args.out))
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
