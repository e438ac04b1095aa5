"""Simulate every builtin scenario, postprocess it and print the metrics report.

    python3 scripts/run_all.py [--out runs] [--seed 0]
"""
import argparse
from pathlib import Path

from gastrack import cli, sim


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name in sim.BUILTIN:
        run = Path(args.out) / name
        print(f"== {name}")
        cli.main(["simulate", "--scenario", name, "--seed", str(args.seed), "--out", str(run), "--force"])
        cli.main(["postprocess", "--run", str(run), "--force", "--laser-offset", "0,0,-0.1"])
        cli.main(["metrics", str(run)])


if __name__ == "__main__":
    main()
