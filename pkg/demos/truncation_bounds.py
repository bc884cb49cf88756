"""How much probability mass do the M largest entries of a distribution carry?

Draws a few heavy-tailed distributions and prints the exact coverage next to the
two entropy-based lower bounds, for a handful of ranks M.
"""

import numpy as np

from holocompress.entropy import ProbabilityVector, random_distribution, shannon_entropy, truncation_bound


def main() -> None:
    rng = np.random.default_rng(0)
    for kind in ("dirichlet", "heavy", "geometric"):
        p = ProbabilityVector(random_distribution(rng, 2000, kind), normalize=True)
        print(f"{kind}: n = {len(p.p)}, H = {shannon_entropy(p):.3f} bits")
        print(f"  {'M':>5} {'coverage':>10} {'tight':>10} {'weak':>10}")
        for M in (2, 10, 50, 250, 1000):
            tight, weak = truncation_bound(p, M)
            print(f"  {M:>5} {p.coverage(M):>10.4f} {tight:>10.4f} {weak:>10.4f}")


if __name__ == "__main__":
    main()
