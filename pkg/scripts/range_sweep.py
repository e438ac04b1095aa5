"""Fly the range scenario outward and tabulate measurement validity per distance bin."""
import argparse
import tempfile
from pathlib import Path

from gastrack import cli, sim


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bin", type=float, default=5.0)
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        run = Path(tmp)
        cli.write_run(sim.run_scenario(sim.flyaway_range(seed=args.seed)), run)
        m = cli.compute_metrics(run, bin_width=args.bin)
    print(f"{'d [m]':>12} {'n':>5} {'valid':>6}")
    for b in m["distance_table"]:
        print(f"{b['lo']:5.0f}-{b['hi']:<6.0f} {b['count']:5d} {b['valid_fraction']:6.2f}")
    print("last bin with valid records:", m["last_valid_bin"])


if __name__ == "__main__":
    main()
