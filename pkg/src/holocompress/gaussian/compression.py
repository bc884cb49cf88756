"""
Correlation decay, Schmidt normal form and mode truncation for pure Gaussian states.

All covariance matrices are interleaved.  Inside this module the modes of a
bipartite state are ordered region first, complement second; public results
carry the lattice sites so they can be mapped back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..lattice import Region
from .states import CovarianceMatrix, HarmonicModel, gaussian_overlap, ground_covariance
from .symplectic import is_symplectic, symplectic_eigenvalues, symplectic_form, williamson

__all__ = [
    "GaussianCapacityError",
    "NormalFormError",
    "xi_truncate",
    "DecayFit",
    "decay_profile",
    "decay_fit",
    "offdiagonal_norm_bound",
    "NormalFormData",
    "gaussian_schmidt_normal_form",
    "TruncationResult",
    "truncate_normal_form",
    "GaussianCompressionReport",
    "theorem3_pipeline",
]

PAIRING_TOL = 1e-6
NOISE_FLOOR = 1e-13


class GaussianCapacityError(ValueError):
    """The region has too few modes to reach the requested fidelity."""


class NormalFormError(RuntimeError):
    """Normal-form residual above tolerance."""


def _pair_idx(modes) -> np.ndarray:
    modes = np.asarray(modes, dtype=int)
    return np.ravel(np.column_stack([2 * modes, 2 * modes + 1])) if modes.size else modes


def _site_order(gamma: CovarianceMatrix, A: Region):
    """Sites of ``A`` and of its complement within ``gamma``, and the quadrature permutation."""
    a = np.asarray(A.sites)
    missing = np.setdiff1d(a, gamma.sites)
    if missing.size:
        raise ValueError(f"region sites {missing.tolist()} are not modes of the state")
    ac = np.setdiff1d(gamma.sites, a)
    return a, ac, np.concatenate([gamma.mode_indices(a), gamma.mode_indices(ac)])


def _lattice(gamma: CovarianceMatrix, A: Region):
    return gamma.lattice if gamma.lattice is not None else A.lattice


# --- truncating the off-diagonal block ------------------------------------------


def xi_truncate(gamma: CovarianceMatrix, A: Region, l: int):
    """Cut region/complement correlations beyond distance ``l``.

    Returns ``(gamma_leq, trimmed)``.  ``gamma_leq`` keeps the cross entries
    between sites at distance at most ``l``.  ``trimmed`` is ``gamma_leq``
    without the complement modes within distance ``l`` of the region, so it
    is block diagonal.
    """
    a, ac, _ = _site_order(gamma, A)
    D = _lattice(gamma, A).distance_matrix
    g = gamma.matrix.copy()
    ia, iac = gamma.mode_indices(a), gamma.mode_indices(ac)
    far = np.repeat(np.repeat(D[np.ix_(a, ac)] > l, 2, axis=0), 2, axis=1)
    cross = g[np.ix_(ia, iac)]
    cross[far] = 0.0
    g[np.ix_(ia, iac)] = cross
    g[np.ix_(iac, ia)] = cross.T
    gamma_leq = CovarianceMatrix(g, gamma.sites, gamma.lattice)
    coupled = ac[(D[np.ix_(a, ac)] <= l).any(axis=0)] if a.size else ac[:0]
    keep = np.setdiff1d(gamma.sites, coupled)
    return gamma_leq, gamma_leq.reduced(keep)


# --- decay of correlations ------------------------------------------------------


def decay_profile(gamma: CovarianceMatrix, A: Region):
    """Distances and ``max |Xi_jk|`` over site pairs across the cut at each distance."""
    a, ac, _ = _site_order(gamma, A)
    D = _lattice(gamma, A).distance_matrix[np.ix_(a, ac)]
    xi = np.abs(gamma.block(a, ac))
    # largest entry of each 2x2 site block
    site_max = xi.reshape(a.size, 2, ac.size, 2).max(axis=(1, 3))
    dist = np.unique(D)
    maxima = np.array([site_max[D == l].max() for l in dist])
    return dist, maxima


@dataclass
class DecayFit:
    """Exponential envelope ``max |Xi| <= c1 exp(-c2 l)`` fitted on the usable distances."""

    c1: float
    c2: float
    r_squared: float
    intercept: float
    distances: np.ndarray
    maxima: np.ndarray
    usable: np.ndarray
    accepted: bool
    reason: str = ""

    def envelope(self, l):
        return self.c1 * np.exp(-self.c2 * np.asarray(l, dtype=float))


def decay_fit(gamma: CovarianceMatrix, A: Region, min_r_squared: float = 0.95,
              noise_floor: float = NOISE_FLOOR) -> DecayFit:
    """Least-squares fit of ``log max |Xi|`` against distance.

    The fit uses distances whose maxima lie above ``noise_floor`` times the
    largest one.  ``c2`` is minus the slope.  ``c1`` is the smallest
    prefactor for which the envelope dominates every usable maximum, so the
    decay inequality holds with the fitted rate.  Fits with ``c2 <= 0`` or
    ``R^2`` below ``min_r_squared`` are flagged as not accepted.
    """
    dist, maxima = decay_profile(gamma, A)
    usable = (maxima > noise_floor * maxima.max()) & (dist >= 1)
    x, y = dist[usable].astype(float), np.log(maxima[usable])
    if x.size < 3:
        return DecayFit(np.nan, np.nan, np.nan, np.nan, dist, maxima, usable, False,
                        "fewer than three usable distances")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    c2 = -slope
    c1 = float(np.max(maxima[usable] * np.exp(c2 * x))) if c2 > 0 else np.nan
    reason = ""
    if c2 <= 0:
        reason = f"correlations do not decay (c2 = {c2:.3g}); gapless model?"
    elif r2 < min_r_squared:
        reason = f"decay is not exponential (R^2 = {r2:.3f} < {min_r_squared}); gapless model?"
    return DecayFit(c1, float(c2), float(r2), float(intercept), dist, maxima, usable, not reason, reason)


def _shell_sum(D_cross: np.ndarray, c2: float, ls) -> float:
    """``max_{l, j in A} sum_{k: d(j,k) > l} exp(-2 c2 (d(j,k) - l))``."""
    best = 0.0
    for l in ls:
        w = np.where(D_cross > l, np.exp(-2 * c2 * (D_cross - l)), 0.0)
        best = max(best, float(w.sum(axis=1).max()) if w.size else 0.0)
    return best


def offdiagonal_norm_bound(gamma: CovarianceMatrix, A: Region, l: int, c1: float, c2: float,
                           shell_ls=None):
    """``(||gamma - gamma_{<=l}||, k2 exp(-c2 l) |A|^{1/2})``.

    Each of the four entries of a site block at distance ``d`` is at most
    ``c1 exp(-c2 d)``; bounding the operator norm by the Frobenius norm and
    summing shells gives ``k2 = 2 c1 sqrt(S)`` with ``S`` the largest shell
    sum over ``shell_ls`` (default: ``l`` alone).
    """
    gamma_leq, _ = xi_truncate(gamma, A, l)
    actual = float(np.linalg.norm(gamma.matrix - gamma_leq.matrix, 2))
    a, ac, _ = _site_order(gamma, A)
    D = _lattice(gamma, A).distance_matrix[np.ix_(a, ac)]
    S = _shell_sum(D, c2, [l] if shell_ls is None else shell_ls)
    k2 = 2.0 * c1 * math.sqrt(S)
    return actual, float(k2 * math.exp(-c2 * l) * math.sqrt(a.size))


# --- normal form ------------------------------------------------------------------


@dataclass
class NormalFormData:
    """Local symplectics bringing a pure state to a product of two-mode squeezed pairs.

    ``(S_A ⊕ S_Ac) gamma (S_A ⊕ S_Ac)^T = [[D_A, E], [E^T, D_Ac]]`` in the
    ordering (region modes, complement modes).  Region normal mode ``j`` is
    paired with complement normal mode ``j`` for ``j < n_pairs``; ``E`` has
    entries ``mu_j`` and ``-mu_j`` on those quadratures.
    """

    S_A: np.ndarray
    S_Ac: np.ndarray
    d: np.ndarray
    d_Ac: np.ndarray
    mu: np.ndarray
    n_pairs: int
    residual: float
    sites_A: np.ndarray
    sites_Ac: np.ndarray
    gamma: CovarianceMatrix
    normal: np.ndarray = field(repr=False)

    @property
    def D_A(self) -> np.ndarray:
        return np.diag(np.repeat(self.d, 2))

    @property
    def D_Ac(self) -> np.ndarray:
        return np.diag(np.repeat(self.d_Ac, 2))

    @property
    def F(self) -> np.ndarray:
        return np.diag(np.ravel(np.column_stack([self.mu, -self.mu])))

    @property
    def E(self) -> np.ndarray:
        nA, nAc = self.sites_A.size, self.sites_Ac.size
        E = np.zeros((2 * nA, 2 * nAc))
        k = 2 * self.n_pairs
        E[:k, :k] = self.F[:k, :k]
        return E

    @property
    def transform(self) -> np.ndarray:
        return sla.block_diag(self.S_A, self.S_Ac)

    @property
    def permutation(self) -> np.ndarray:
        """Quadrature indices of ``gamma`` in region-first order."""
        return np.concatenate([self.gamma.mode_indices(self.sites_A), self.gamma.mode_indices(self.sites_Ac)])


def _symplectic_basis(omega: np.ndarray) -> np.ndarray:
    """``B`` with ``B omega B^T = sigma`` for a nondegenerate antisymmetric ``omega``."""
    r = omega.shape[0] // 2
    w, v = np.linalg.eigh(1j * (omega - omega.T) / 2)
    pos = np.argsort(w)[::-1][:r]
    lam, V = w[pos], v[:, pos]
    if lam.min() <= 1e-10:
        raise NormalFormError("restricted symplectic form is degenerate")
    O = np.empty((2 * r, 2 * r))
    O[:, 0::2] = np.sqrt(2) * V.imag
    O[:, 1::2] = np.sqrt(2) * V.real
    return np.repeat(lam**-0.5, 2)[:, None] * O.T


def gaussian_schmidt_normal_form(gamma: CovarianceMatrix, A: Region, tol: float = 1e-6,
                                 pairing_tol: float = PAIRING_TOL) -> NormalFormData:
    """Normal form of a pure state across the cut ``A | A^c``.

    ``S_A`` is the Williamson transform of ``gamma_A``.  With ``u_j, w_j`` the
    rows of ``S_A Xi`` for region normal mode ``j``, the complement partner
    quadratures are ``-sigma w_j / mu_j`` and ``-sigma u_j / mu_j`` where
    ``mu_j^2 = -u_j sigma w_j^T = d_j^2 - 1``.  The remaining complement
    functionals span the symplectic complement of the partners and carry
    vacuum.
    """
    if not gamma.is_pure():
        raise ValueError("normal form requires a pure state")
    a, ac, perm = _site_order(gamma, A)
    nA, nAc = a.size, ac.size
    g = gamma.matrix[np.ix_(perm, perm)]
    ka = 2 * nA
    gA, Xi, gAc = g[:ka, :ka], g[:ka, ka:], g[ka:, ka:]
    sigma_c = symplectic_form(nAc)

    if nA == 0 or nAc == 0:
        raise ValueError("region and complement must both be nonempty")
    S_A, d = williamson(gA)
    Xi1 = S_A @ Xi
    U, W = Xi1[0::2], Xi1[1::2]
    mu2 = -np.einsum("ij,jk,ik->i", U, sigma_c, W)
    paired = np.flatnonzero(mu2 > pairing_tol**2)
    # descending d keeps paired modes first
    n_pairs = int(paired.size)
    if n_pairs and paired[-1] != n_pairs - 1:
        raise NormalFormError("paired modes are not the leading normal modes")
    mu = np.zeros(nA)
    mu[:n_pairs] = np.sqrt(mu2[:n_pairs])

    rows = np.empty((2 * n_pairs, 2 * nAc))
    for j in range(n_pairs):
        x = -(sigma_c @ W[j]) / mu[j]
        p = -(sigma_c @ U[j]) / mu[j]
        # weakly entangled pairs amplify rounding by 1/(mu_j mu_k); restore
        # exact canonical relations by symplectic Gram-Schmidt
        for k in range(j):
            xk, pk = rows[2 * k], rows[2 * k + 1]
            x = x - (x @ sigma_c @ pk) * xk + (x @ sigma_c @ xk) * pk
            p = p - (p @ sigma_c @ pk) * xk + (p @ sigma_c @ xk) * pk
        rows[2 * j], rows[2 * j + 1] = x, p / (x @ sigma_c @ p)

    rest = 2 * (nAc - n_pairs)
    if rest:
        # complement vectors t with t sigma s^T = 0 for every partner row s
        N = sla.null_space((rows @ sigma_c.T)) if n_pairs else np.eye(2 * nAc)
        if N.shape[1] != rest:
            raise NormalFormError(f"symplectic complement has dimension {N.shape[1]}, expected {rest}")
        B = _symplectic_basis(N.T @ sigma_c @ N) @ N.T
        S_W, _ = williamson(B @ gAc @ B.T)
        rows = np.vstack([rows, S_W @ B])
    S_Ac = rows

    T = sla.block_diag(S_A, S_Ac)
    normal = T @ g @ T.T
    d_Ac = np.ones(nAc)
    d_Ac[:n_pairs] = d[:n_pairs]
    target = np.zeros_like(normal)
    target[:ka, :ka] = np.diag(np.repeat(d, 2))
    target[ka:, ka:] = np.diag(np.repeat(d_Ac, 2))
    for j in range(n_pairs):
        target[2 * j, ka + 2 * j] = target[ka + 2 * j, 2 * j] = mu[j]
        target[2 * j + 1, ka + 2 * j + 1] = target[ka + 2 * j + 1, 2 * j + 1] = -mu[j]
    residual = float(np.abs(normal - target).max())
    scale = max(1.0, float(np.linalg.norm(g, 2)))
    if residual > tol * scale or not is_symplectic(S_Ac, 1e-8 * scale):
        raise NormalFormError(
            f"normal-form residual {residual:.3g} exceeds {tol:.1g}*||gamma||; "
            f"leading d_j = {np.round(d[:4], 6).tolist()} (near-degenerate values are the usual cause)")
    return NormalFormData(S_A, S_Ac, d, d_Ac, mu, n_pairs, residual, a, ac, gamma, normal)


# --- truncation -------------------------------------------------------------------


@dataclass
class TruncationResult:
    gamma_M: CovarianceMatrix
    fidelity: float
    fidelity_product: float
    fidelity_paper_expr: float
    lemma4_bound: float
    M: int
    dropped_deviation: float

    @property
    def lemma4_holds(self) -> bool:
        return self.fidelity >= self.lemma4_bound - 1e-12


def truncate_normal_form(nf: NormalFormData, M: int) -> TruncationResult:
    """Replace every pair beyond the ``M`` leading normal modes by vacuum.

    ``fidelity`` is the determinant overlap of the original and truncated
    states.  ``fidelity_product = prod_{j>M} 2/(d_j+1)`` is the closed form it
    equals; ``fidelity_paper_expr`` squares each factor and is smaller.
    ``lemma4_bound = exp(-sum_{j>M} (d_j - 1))`` lies below both.
    """
    nA = nf.sites_A.size
    if not 0 <= M <= nA:
        raise ValueError(f"M must lie in [0, {nA}]")
    ka = 2 * nA
    Gm = nf.normal.copy()
    for j in range(M, nA):
        idx = [2 * j, 2 * j + 1]
        if j < nf.n_pairs:
            idx += [ka + 2 * j, ka + 2 * j + 1]
        Gm[idx, :] = 0.0
        Gm[:, idx] = 0.0
        Gm[idx, idx] = 1.0
    Tinv = np.linalg.inv(nf.transform)
    g_perm = Tinv @ Gm @ Tinv.T
    inv = np.argsort(nf.permutation)
    g_M = g_perm[np.ix_(inv, inv)]
    gamma_M = CovarianceMatrix((g_M + g_M.T) / 2, nf.gamma.sites, nf.gamma.lattice)
    dropped = np.maximum(nf.d[M:], 1.0)
    fid = gaussian_overlap(nf.gamma, gamma_M)
    prod = float(np.prod(2.0 / (dropped + 1.0)))
    return TruncationResult(gamma_M, fid, prod, prod**2, float(np.exp(-np.sum(dropped - 1.0))), M,
                            float(np.sum(dropped - 1.0)))


# --- end-to-end pipeline ----------------------------------------------------------


@dataclass
class GaussianCompressionReport:
    epsilon: float
    n_A: int
    boundary_size: int
    c1: float
    c2: float
    r_squared: float
    k1: float
    k5: float
    L_eps: float
    M: int
    l_used: int
    fidelity: float
    fidelity_product: float
    fidelity_paper_expr: float
    lemma4_bound: float
    M_min: int
    l_min: int
    capped: bool
    tail_check: bool
    bulk_residual: float
    compression_symplectic: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)

    @property
    def ok(self) -> bool:
        return self.fidelity >= 1 - self.epsilon and self.fidelity >= self.lemma4_bound - 1e-12 and self.tail_check

    def row(self) -> dict:
        return {
            "A_size": self.n_A, "boundary_size": self.boundary_size, "c1": self.c1, "c2": self.c2,
            "L_eps": self.L_eps, "M": self.M, "fidelity_oracle": self.fidelity,
            "fidelity_paper_expr": self.fidelity_paper_expr, "lemma4_bound": self.lemma4_bound,
            "epsilon": self.epsilon, "l_used": self.l_used,
        }


def _width_for(shells: np.ndarray, M: int) -> int:
    """Smallest ``l >= 1`` with ``|∂_l A| >= M``."""
    ok = np.flatnonzero(shells >= M)
    if not ok.size:
        raise GaussianCapacityError(f"region holds only {int(shells[-1])} modes, {M} requested")
    return int(max(ok[0], 1))


def _tail_sums(d: np.ndarray) -> np.ndarray:
    """``tail[M] = sum_{j >= M} (d_j - 1)`` for ``M = 0..n``."""
    dev = np.maximum(d - 1.0, 0.0)
    return np.concatenate([np.cumsum(dev[::-1])[::-1], [0.0]])


def theorem3_pipeline(model: HarmonicModel | CovarianceMatrix, A: Region, epsilon: float,
                      gamma: CovarianceMatrix | None = None, fit: DecayFit | None = None,
                      nf: NormalFormData | None = None) -> GaussianCompressionReport:
    """Compress the ground state of a gapped harmonic model onto a boundary shell of ``A``.

    The number of retained normal modes is predicted from measured constants:
    the decay rate ``c2`` of cross correlations, the geometric constant
    ``k1`` (complement sites within distance ``l`` of ``A``, per unit width
    and boundary site) and ``k5``, the smallest prefactor with
    ``tail(M) <= k5 exp(-c2 M / (4 k1 |∂A|)) |A|^{5/4}``.  Then
    ``L_eps = (2/c2) log(|A|^{5/4} k5 / eps)`` and ``M = ceil(2 k1 L_eps |∂A|)``,
    so the discarded tail is at most ``eps`` and the fidelity at least
    ``exp(-eps) >= 1 - eps``.  ``l_used`` is the width of the shell holding
    ``M`` sites.  ``gamma``, ``fit`` and ``nf`` may be passed to reuse work
    across an epsilon sweep.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if gamma is None:
        gamma = model if isinstance(model, CovarianceMatrix) else ground_covariance(model)
    lat = _lattice(gamma, A)
    if A.is_empty or A.is_full:
        raise ValueError("region must be a proper nonempty subset")
    fit = decay_fit(gamma, A) if fit is None else fit
    if not fit.accepted:
        raise GaussianCapacityError(f"decay fit rejected: {fit.reason}")
    nf = gaussian_schmidt_normal_form(gamma, A) if nf is None else nf

    n_A = len(A)
    shells = A.shell_sizes()
    bsize = int(shells[1])
    a, ac = nf.sites_A, nf.sites_Ac
    D = lat.distance_matrix[np.ix_(a, ac)]
    dmin = D.min(axis=0)
    ls = np.arange(1, int(dmin.max()) + 1)
    k1 = float(max(np.sum(dmin <= l) / (l * bsize) for l in ls))

    tails = _tail_sums(nf.d)
    Ms = np.arange(tails.size)
    above = tails > 1e-12
    rate = fit.c2 / (4 * k1 * bsize)
    k5 = float(np.max(tails[above] * np.exp(rate * Ms[above])) / n_A**1.25) if above.any() else 0.0
    tail_check = bool(np.all(tails[above] <= k5 * np.exp(-rate * Ms[above]) * n_A**1.25 * (1 + 1e-12)))

    if k5 > 0:
        L_eps = max(0.0, (2 / fit.c2) * math.log(n_A**1.25 * k5 / epsilon))
    else:
        L_eps = 0.0
    M_pred = int(math.ceil(2 * k1 * L_eps * bsize - 1e-12))
    capped = M_pred > n_A
    M = min(M_pred, n_A)

    tr = truncate_normal_form(nf, M)
    if tr.fidelity < 1 - epsilon:
        raise GaussianCapacityError(
            f"fidelity {tr.fidelity:.6g} < 1 - eps with all {n_A} modes of the region in use"
            if capped else f"fidelity {tr.fidelity:.6g} below 1 - eps at M = {M}")
    l_used = _width_for(shells, M)

    # empirical minimum: smallest M whose oracle-equivalent product reaches 1 - eps
    logs = np.concatenate([np.cumsum(np.log(2.0 / (np.maximum(nf.d, 1.0) + 1.0))[::-1])[::-1], [0.0]])
    M_min = int(np.flatnonzero(logs >= math.log1p(-epsilon))[0])
    l_min = _width_for(shells, M_min)

    C, bulk_res = _compression_symplectic(nf, A, M)
    return GaussianCompressionReport(
        epsilon, n_A, bsize, fit.c1, fit.c2, fit.r_squared, k1, k5, L_eps, M, l_used,
        tr.fidelity, tr.fidelity_product, tr.fidelity_paper_expr, tr.lemma4_bound, M_min, l_min,
        capped, tail_check, bulk_res, C, nf.d)


def _compression_symplectic(nf: NormalFormData, A: Region, M: int):
    """Symplectic on ``A`` moving the ``M`` leading normal modes onto the sites nearest the complement.

    Returns the matrix (acting on the region's quadratures in site order) and
    ``max |gamma'_bulk - I|`` of the compressed state on the remaining sites.
    """
    dist = A.distance_to_complement()
    order = np.argsort(dist, kind="stable")
    n = nf.sites_A.size
    P = np.zeros((2 * n, 2 * n))
    # normal mode j goes to site order[j]
    for j, site_pos in enumerate(order):
        P[2 * site_pos:2 * site_pos + 2, 2 * j:2 * j + 2] = np.eye(2)
    C = P @ nf.S_A
    g_A = nf.gamma.block(nf.sites_A)
    gc = C @ g_A @ C.T
    bulk = _pair_idx(order[M:])
    res = float(np.abs(gc[np.ix_(bulk, bulk)] - np.eye(bulk.size)).max()) if bulk.size else 0.0
    return C, res
