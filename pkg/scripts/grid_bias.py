"""Variational-principle gap int c dpi + H - log(lambda) as the grid is refined.

The gap comes from piecewise-linear composition on the grid and shrinks
like the square of the spacing; this script prints it per grid size.

    python3 scripts/grid_bias.py --costs 10
"""

import argparse

import numpy as np

from holotherm.systems import doubling_system, fair, random_lipschitz_cost
from holotherm.thermo import pressure


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--costs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grids", type=int, nargs="+", default=[129, 257, 513, 1025, 2049])
    args = ap.parse_args()
    print(f"{'n':>6} {'max gap':>12} {'mean gap':>12}")
    for n in args.grids:
        ifs = doubling_system(n)
        rng = np.random.default_rng(args.seed)
        gaps = [pressure(random_lipschitz_cost(ifs, rng), fair(ifs), ifs).gap
                for _ in range(args.costs)]
        print(f"{n:6d} {max(gaps):12.3e} {np.mean(gaps):12.3e}")


if __name__ == "__main__":
    main()
