"""Mutate encoded frames at random and count how many the decoder wrongly accepts."""
import argparse

import numpy as np

from gastrack import link
from gastrack.geo import GeodeticPosition


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    frame = bytearray(link.encode(link.TelemetryMessage(7, 1.5, GeodeticPosition(48.2655, 11.6702, 483.0))))
    accepted = 0
    for _ in range(args.n):
        f = bytearray(frame)
        for i in rng.choice(len(f), size=int(rng.integers(1, 4)), replace=False):
            f[i] ^= int(rng.integers(1, 256))
        try:
            link.decode(bytes(f))
        except link.FrameError:
            continue
        accepted += 1
    print(f"mutated frames: {args.n}  accepted: {accepted}")


if __name__ == "__main__":
    main()
