"""Discounted fixed points (1 - s) max u_s against log(lambda) on the doubling system.

    python3 scripts/bousch_sweep.py --costs 5 --seed 0
"""

import argparse
import json

import numpy as np

from holotherm.systems import doubling_system, fair, random_lipschitz_cost
from holotherm.transfer import bousch_limit, power_eigenpair


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--costs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid", type=int, default=1025)
    ap.add_argument("--s", type=float, nargs="+", default=[0.9, 0.99, 0.999])
    args = ap.parse_args()
    ifs = doubling_system(args.grid)
    rng = np.random.default_rng(args.seed)
    rows = []
    for k in range(args.costs):
        c = random_lipschitz_cost(ifs, rng)
        lim = bousch_limit(c, fair(ifs), ifs, s_values=tuple(args.s))
        log_lam = power_eigenpair(c, fair(ifs), ifs).log_lambda
        rows.append({"cost": k, "log_lambda": log_lam, **lim,
                     "error": abs(lim["extrapolated"] - log_lam),
                     "lip_bound": ifs.fiber.lipschitz(c) / (1 - ifs.gamma)})
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
