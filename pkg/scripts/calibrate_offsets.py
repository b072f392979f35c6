"""Which offsets put both exact and guessing leakage inside a target window?

Scans equal-width Gaussian pairs over offset (in widths) and, separately,
same-center pairs over width ratio. Prints the offset interval where both
estimates fall inside ``[--lo, --hi]`` bits/pulse, and the best ratio of
guessing to exact reachable by a pure width mismatch.

    python3 scripts/calibrate_offsets.py --lo 1e-4 --hi 1e-2
"""

import argparse
import sys

import numpy as np

from sidechan.leakage import BasisPair, exact_mutual_information, leakage_guessing, pair_overlap
from sidechan.signal import Axis
from sidechan.synth import synth_distribution


def _pair(delta, ratio, bins):
    wide = max(1.0, ratio)
    ax = Axis.spanning(-10 * wide, 10 * wide + delta, bins, "dimensionless")
    return BasisPair("HV", synth_distribution(0.0, 1.0, ax),
                     synth_distribution(delta, ratio, ax))


def _both(pair):
    exact = exact_mutual_information(pair).bits_per_pulse
    guess = leakage_guessing(pair_overlap(pair)).bits_per_pulse
    return exact, guess


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lo", type=float, default=1e-4)
    ap.add_argument("--hi", type=float, default=1e-2)
    ap.add_argument("--bins", type=int, default=4096)
    args = ap.parse_args(argv)

    offsets = np.linspace(0.15, 0.30, 151)
    inside = []
    for d in offsets:
        exact, guess = _both(_pair(d, 1.0, args.bins))
        if args.lo <= guess and exact <= args.hi:
            inside.append(d)
    if inside:
        print(f"offset window: {inside[0]:.3f} .. {inside[-1]:.3f} widths")
    else:
        print("no offset puts both estimates in the window")

    print(f"\n{'ratio':>6}{'exact':>12}{'guessing':>12}{'g/e':>8}")
    for ratio in (1.05, 1.1, 1.2, 1.4, 1.7, 2.0):
        exact, guess = _both(_pair(0.0, ratio, args.bins))
        print(f"{ratio:>6.2f}{exact:>12.3e}{guess:>12.3e}{guess / exact:>8.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
