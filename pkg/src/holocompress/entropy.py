"""
Entropies of ordered probability vectors and single-shot truncation bounds.

All logarithms are evaluated in natural units internally and converted to the
vector's ``log_base`` on output.  For a Schmidt spectrum on a lattice of
``d``-level sites the natural choice is ``log_base = d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ProbabilityVector",
    "DensityFunction",
    "DensityBound",
    "shannon_entropy",
    "renyi_entropy",
    "min_entropy",
    "truncation_bound",
    "truncation_bounds_all",
    "smooth_zero_entropy",
    "renyi_counterexample",
    "counterexample_coverage",
    "counterexample_min_rank",
    "counterexample_renyi_entropy",
    "renyi_hierarchy_check",
    "density_entropy_bound",
    "random_distribution",
    "save_probability_vector",
    "load_probability_vector",
]

NORM_TOL = 1e-12
COUNTEREXAMPLE_MAX_ENTRIES = 2**24


class ProbabilityVector:
    """Finite probability distribution stored in non-increasing order.

    Parameters
    ----------
    entries : array_like
        Non-negative weights summing to one (within ``1e-12``).  They are sorted
        with a stable sort, so ties keep their original relative order.
    log_base : float
        Base of all logarithms evaluated on this vector.
    normalize : bool
        Rescale ``entries`` to unit sum instead of validating it.
    """

    __slots__ = ("p", "log_base", "_raw", "_order")

    def __init__(self, entries, log_base: float = 2.0, normalize: bool = False):
        p = np.asarray(entries, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("empty probability vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        if not log_base > 0 or log_base == 1:
            raise ValueError("log base must be positive and different from 1")
        total = p.sum()
        if normalize:
            p = p / total
        elif abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        # the stable permutation is only needed for tie order, so it is computed on demand
        self.p = -np.sort(-p)
        self.p.setflags(write=False)
        self._raw = p
        self._order = None
        self.log_base = float(log_base)

    @property
    def order(self) -> np.ndarray:
        """Stable permutation taking the input entries to sorted order."""
        if self._order is None:
            self._order = np.argsort(-self._raw, kind="stable")
        return self._order

    def __len__(self):
        return self.p.size

    def __getitem__(self, item):
        return self.p[item]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.p, dtype=dtype)

    def __repr__(self):
        head = ", ".join(f"{x:.4g}" for x in self.p[:6])
        more = ", ..." if self.p.size > 6 else ""
        return f"ProbabilityVector([{head}{more}], n={self.p.size}, log_base={self.log_base:g})"

    @property
    def ln_base(self) -> float:
        return math.log(self.log_base)

    def coverage(self, M: int) -> float:
        """Total weight of the ``M`` largest entries."""
        M = min(max(int(M), 0), self.p.size)
        return float(self.p[:M].sum())


def _plogp(p: np.ndarray) -> np.ndarray:
    logs = np.log(p, out=np.zeros_like(p), where=p > 0)
    return -p * logs


def shannon_entropy(p: ProbabilityVector) -> float:
    """Shannon entropy ``-sum p log p`` with ``0 log 0 = 0``."""
    return float(_plogp(p.p).sum() / p.ln_base)


def min_entropy(p: ProbabilityVector) -> float:
    """``-log max_j p_j``."""
    return float(-math.log(p.p[0]) / p.ln_base)


def renyi_entropy(p: ProbabilityVector, alpha: float) -> float:
    """Rényi entropy of order ``alpha``; ``alpha = inf`` gives the min-entropy.

    ``alpha = 1`` is rejected; use :func:`shannon_entropy` for that limit.
    """
    if not alpha > 0:
        raise ValueError("Renyi order must be positive")
    if alpha == 1:
        raise ValueError("alpha = 1 is the Shannon limit; call shannon_entropy")
    if math.isinf(alpha):
        return min_entropy(p)
    q = p.p[p.p > 0]
    if alpha < 1:
        s = np.log(np.sum(q**alpha))
    else:
        # factor out the largest entry to keep large orders finite
        s = alpha * math.log(q[0]) + math.log(np.sum((q / q[0]) ** alpha))
    return float(s / (1.0 - alpha) / p.ln_base)


def truncation_bound(p: ProbabilityVector, M: int) -> tuple[float, float]:
    """Lower bounds on the weight of the ``M`` largest entries.

    Returns ``(tight, weak)`` with

    ``tight = 1 - (H(p) - H(q)) / (log M - log sum(q))`` and
    ``weak = 1 - H(p) / log M``,

    where ``q`` are the top ``M`` entries and ``H(q) = -sum q log q`` is not
    renormalised.  Both satisfy ``sum(q) >= tight >= weak``.
    """
    M = int(M)
    if M < 2:
        raise ValueError("M must be at least 2 (log 1 = 0)")
    M = min(M, len(p))
    if M < 2:
        raise ValueError("vector has fewer than two entries")
    h = _plogp(p.p)
    H = h.sum()
    Hq = h[:M].sum()
    cov = p.p[:M].sum()
    tight = 1.0 - (H - Hq) / (math.log(M) - math.log(cov))
    weak = 1.0 - H / math.log(M)
    return float(tight), float(weak)


def truncation_bounds_all(p: ProbabilityVector):
    """Vectorised bounds for every ``M = 2, ..., n``.

    Returns ``(M, coverage, tight, weak)`` arrays.
    """
    n = len(p)
    h = _plogp(p.p)
    H = h.sum()
    M = np.arange(2, n + 1)
    Hq = np.cumsum(h)[1:]
    cov = np.cumsum(p.p)[1:]
    logM = np.log(M)
    tight = 1.0 - (H - Hq) / (logM - np.log(cov))
    weak = 1.0 - H / logM
    return M, cov, tight, weak


def smooth_zero_entropy(p: ProbabilityVector, epsilon: float) -> float:
    """``log`` of the smallest support size capturing ``1 - epsilon`` of the mass.

    With this (coverage-based) smoothing, ``epsilon * H_0^eps(p) <= H(p)``.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    M = int(np.searchsorted(np.cumsum(p.p), 1.0 - epsilon - NORM_TOL)) + 1
    M = min(M, len(p))
    return math.log(M) / p.ln_base


def _counterexample_p1(d: int, k: float, boundary_size: int) -> float:
    if d < 2:
        raise ValueError("local dimension must be >= 2")
    if boundary_size < 1:
        raise ValueError("boundary size must be positive")
    expo = k * boundary_size
    if expo < 0:
        raise ValueError("d^(-k |dA|) must not exceed 1")
    return d ** (-expo)


def renyi_counterexample(d: int, k: float, boundary_size: int, volume: int) -> ProbabilityVector:
    """Flat-tailed spectrum with min-entropy ``k * boundary_size``.

    The largest entry is ``d**(-k*boundary_size)`` and the remaining
    ``d**volume - 1`` entries share the rest of the weight equally.
    """
    p1 = _counterexample_p1(d, k, boundary_size)
    n = d**volume
    if n > COUNTEREXAMPLE_MAX_ENTRIES:
        raise ValueError(
            f"d**volume = {n} entries exceeds {COUNTEREXAMPLE_MAX_ENTRIES}; "
            "use counterexample_min_rank / counterexample_renyi_entropy instead"
        )
    if n < 2:
        raise ValueError("volume must be positive")
    p = np.full(n, (1.0 - p1) / (n - 1))
    p[0] = p1
    # skip the 1e-12 sum check: the construction is normalised by design
    return ProbabilityVector(p, log_base=d, normalize=True)


def counterexample_coverage(d, k, boundary_size, volume, M):
    """Weight of the ``M`` largest entries of the counter-example, closed form."""
    p1 = _counterexample_p1(d, k, boundary_size)
    n = d**volume
    M = min(int(M), n)
    return p1 + (M - 1) * (1.0 - p1) / (n - 1)


def counterexample_min_rank(d: int, k: float, boundary_size: int, volume: int, epsilon: float) -> int:
    """Smallest ``M`` with top-``M`` weight ``>= 1 - epsilon``.

    Evaluated in exact rational arithmetic when ``k * boundary_size`` is an
    integer (the float ``epsilon`` is taken at its exact binary value).
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    _counterexample_p1(d, k, boundary_size)
    n = d**volume
    expo = k * boundary_size
    if float(expo).is_integer():
        p1 = Fraction(1, d ** int(expo))
        eps = Fraction(epsilon)
    else:
        p1 = Fraction(d ** (-expo))
        eps = Fraction(epsilon)
    if p1 >= 1 - eps:
        return 1
    # p1 + (M-1)(1-p1)/(n-1) >= 1-eps  <=>  M-1 >= (1-eps-p1)(n-1)/(1-p1)
    need = (1 - eps - p1) * (n - 1) / (1 - p1)
    return int(min(n, 1 + math.ceil(need)))


def counterexample_renyi_entropy(d, k, boundary_size, volume, alpha) -> float:
    """Rényi entropy (base ``d``) of the counter-example without materialising it."""
    p1 = _counterexample_p1(d, k, boundary_size)
    n = d**volume
    r = (1.0 - p1) / (n - 1)
    if alpha == 1:
        h = -p1 * math.log(p1) - ((1.0 - p1) * math.log(r) if r > 0 else 0.0)
        return h / math.log(d)
    if math.isinf(alpha):
        return -math.log(max(p1, r)) / math.log(d)
    big = max(p1, r)
    s = alpha * math.log(big) + math.log((p1 / big) ** alpha + (n - 1) * (r / big) ** alpha)
    return s / (1.0 - alpha) / math.log(d)


def renyi_hierarchy_check(p: ProbabilityVector, alpha: float, tol: float = 1e-10) -> bool:
    """Check ``H_alpha >= H_inf >= (alpha-1)/alpha * H_alpha`` for ``alpha > 1``."""
    if not alpha > 1:
        raise ValueError("hierarchy inequality needs alpha > 1")
    ha = renyi_entropy(p, alpha)
    hinf = min_entropy(p)
    if math.isinf(alpha):
        return abs(ha - hinf) <= tol
    return ha >= hinf - tol and hinf >= (alpha - 1) / alpha * ha - tol


def random_distribution(rng: np.random.Generator, n: int, kind: str = "dirichlet") -> np.ndarray:
    """Random probability weights used by the property sweeps.

    ``kind`` is one of ``"dirichlet"`` (flat Dirichlet with random
    concentration), ``"heavy"`` (Pareto tail), ``"geometric"`` (exponentially
    decaying, low entropy) or ``"spiky"`` (one dominant entry).
    """
    if kind == "dirichlet":
        alpha = 10 ** rng.uniform(-2, 1)
        w = rng.gamma(alpha, size=n)
        if w.sum() == 0:
            w[0] = 1.0
    elif kind == "heavy":
        w = rng.pareto(rng.uniform(0.3, 3.0), size=n) + 1e-300
    elif kind == "geometric":
        w = np.exp(-rng.uniform(0.01, 5.0) * np.arange(n))
    elif kind == "spiky":
        w = rng.random(n) * 10 ** rng.uniform(-8, 0)
        w[rng.integers(n)] = 1.0
    else:
        raise ValueError(f"unknown generator {kind!r}")
    return w / w.sum()


def save_probability_vector(path, p: ProbabilityVector) -> None:
    """Plain-text format: ``# log_base <b>`` header, then one entry per line."""
    lines = [f"# log_base {p.log_base!r}"] + [repr(float(x)) for x in p.p]
    Path(path).write_text("\n".join(lines) + "\n")


def load_probability_vector(path) -> ProbabilityVector:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# log_base"):
        raise ValueError(f"{path}: missing '# log_base' header line")
    base = float(text[0].split()[-1])
    vals = [float(x) for x in text[1:] if x.strip()]
    return ProbabilityVector(vals, log_base=base)


# --- continuous densities ---------------------------------------------------------


@dataclass
class DensityFunction:
    """Probability density on an axis-aligned box, integrated by the midpoint rule.

    ``evaluator`` takes an array of shape ``(..., n)`` and returns densities of
    shape ``(...)``.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    lo: Sequence[float]
    hi: Sequence[float]
    resolution: Sequence[int] | int = 10**5

    def grid(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        res = np.broadcast_to(np.atleast_1d(self.resolution), lo.shape).astype(int)
        h = (hi - lo) / res
        axes = [lo[i] + (np.arange(res[i]) + 0.5) * h[i] for i in range(lo.size)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return mesh, float(np.prod(h))

    def sample(self):
        """Density values on the grid and the cell volume."""
        mesh, dv = self.grid()
        return np.asarray(self.evaluator(mesh), dtype=float), dv


@dataclass
class DensityBound:
    coverage: float
    bound_tight: float
    bound_weak: float
    volume: float
    entropy_total: float
    entropy_inside: float
    normalization_residual: float
    defined: bool


def density_entropy_bound(f: DensityFunction, delta: float, residual_tol: float = 1e-6) -> DensityBound:
    """Coverage of the super-level set ``{x : f(x) >= delta}`` and its entropy bounds.

    Entropies are differential entropies in nats.  When the super-level set has
    volume ``<= 1`` the logarithms in the denominators are non-positive, the
    bounds are undefined and returned as ``nan`` with ``defined=False``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    vals, dv = f.sample()
    residual = abs(vals.sum() * dv - 1.0)
    if residual > residual_tol:
        raise ValueError(f"quadrature normalisation residual {residual:.3g} exceeds {residual_tol:g}")
    inside = vals >= delta
    h = _plogp(vals)
    coverage = float(vals[inside].sum() * dv)
    volume = float(inside.sum() * dv)
    H_all = float(h.sum() * dv)
    H_in = float(h[inside].sum() * dv)
    defined = volume > 1.0
    if defined:
        tight = 1.0 - (H_all - H_in) / (math.log(volume) - math.log(coverage))
        weak = 1.0 - H_all / math.log(volume)
    else:
        tight = weak = float("nan")
    return DensityBound(coverage, tight, weak, volume, H_all, H_in, residual, defined)
