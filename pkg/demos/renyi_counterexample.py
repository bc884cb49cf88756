"""A distribution with bounded Renyi entropy that still needs exponential rank.

One large entry plus a flat tail keeps every Renyi entropy of order alpha > 1
below a constant, yet covering 1 - eps of the mass needs a rank that grows with
the volume.  The von Neumann (alpha = 1) entropy is what controls compression.
"""

import math

from holocompress.entropy import counterexample_min_rank, counterexample_renyi_entropy


def main() -> None:
    k = 3
    print(f"{'volume':>6} {'H_2':>8} {'H_inf':>8} {'H_1':>8} {'rank(eps=0.1)':>14} {'2^V':>10}")
    for volume in (8, 12, 16, 20, 24):
        h2 = counterexample_renyi_entropy(2, k, 1, volume, 2.0)
        hinf = counterexample_renyi_entropy(2, k, 1, volume, math.inf)
        h1 = counterexample_renyi_entropy(2, k, 1, volume, 1.0)
        M = counterexample_min_rank(2, k, 1, volume, 0.1)
        print(f"{volume:>6} {h2:>8.4f} {hinf:>8.4f} {h1:>8.4f} {M:>14} {2**volume:>10}")


if __name__ == "__main__":
    main()
