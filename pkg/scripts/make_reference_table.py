#!/usr/bin/env python3
"""Print the standard-lognormal value table (the library's reference game).

The table gives the expected claimed gain v[L, l] for L years remaining and
l claim rights in hand, for i.i.d. LogNormal(0,1) insured losses under the
local objective.  Rows grow more favorable as L increases; the diagonal is
forced claiming.
"""

import argparse
import sys

from multistop.stopping import Horizon, compute_value_table, lognormal_local_model


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--years", type=int, default=10)
    parser.add_argument("--rights", type=int, default=9)
    parser.add_argument("--mu", type=float, default=0.0)
    parser.add_argument("--sigma", type=float, default=1.0)
    args = parser.parse_args()
    table = compute_value_table(
        lognormal_local_model(args.mu, args.sigma), Horizon(T=args.years, k=args.rights)
    )
    header = "L   " + "".join(f"{f'l={l}':>8}" for l in range(1, args.rights + 1))
    print(header)
    for L in range(1, args.years + 1):
        cells = []
        for l in range(1, args.rights + 1):
            cells.append(f"{table.value(L, l):8.2f}" if l <= min(L, args.rights) else " " * 8)
        print(f"{L:<4}" + "".join(cells))
    return 0


if __name__ == "__main__":
    sys.exit(main())
