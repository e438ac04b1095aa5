"""Worst-case mean-concentration error from antenna offsets, over a range of distances."""
import argparse

from gastrack import post


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reflector-offset", type=float, default=0.4)
    ap.add_argument("--laser-offset", type=float, default=0.1)
    ap.add_argument("--background", type=float, default=400.0)
    args = ap.parse_args()
    print(f"{'d [m]':>6} {'worst [ppm]':>12} {'first order':>12}")
    for d in (5, 10, 20, 30, 40, 50, 60):
        e = post.error_budget(args.reflector_offset, args.laser_offset, float(d), args.background)
        print(f"{d:6d} {e.worst_case:12.3f} {e.first_order:12.3f}")


if __name__ == "__main__":
    main()
