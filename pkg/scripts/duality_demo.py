"""Single-marginal, two-marginal and Kantorovich duals on small instances.

    python3 scripts/duality_demo.py
"""

import numpy as np

from holotherm.duality import kantorovich_solve, single_marginal_dual, slackness_check, two_marginal_dual
from holotherm.oracles import kl_divergence, transport_bruteforce
from holotherm.systems import doubling_system, fair, singleton_system


def main() -> None:
    ifs = doubling_system()
    mu = np.array([0.25, 0.75])
    dual, plan = single_marginal_dual(np.zeros(2), mu, fair(ifs), ifs)
    slack = slackness_check(np.zeros(2), dual.phi, fair(ifs), ifs, mu=mu)
    print("single marginal, c = 0, mu = (1/4, 3/4)")
    print(f"  objective {dual.objective:.8f}  closed form {-kl_divergence(mu, [0.5, 0.5]):.8f}")
    print(f"  phi {dual.phi}  steps {dual.iterations}  slackness optimal {slack.optimal}")

    rng = np.random.default_rng(0)
    c = rng.normal(size=(3, 3))
    mu, nu = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    s = singleton_system(3)
    _, lp = kantorovich_solve(c, mu, nu)
    zt, _ = two_marginal_dual(c, mu, nu, fair(s), fair(s), s, s, entropic=False)
    ent, _ = two_marginal_dual(c, mu, nu, fair(s), fair(s), s, s)
    brute = transport_bruteforce(c, mu, nu).value
    print("3 x 3 transport")
    print(f"  enumeration {brute:.10f}  simplex {lp.primal:.10f}  smoothed dual {zt.objective:.10f}")
    kl = kl_divergence(mu, fair(s).weights) + kl_divergence(nu, fair(s).weights)
    print(f"  with entropy terms {ent.objective:.10f}  expected {brute - kl:.10f}")


if __name__ == "__main__":
    main()
