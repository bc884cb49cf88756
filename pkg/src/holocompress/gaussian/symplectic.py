"""
Symplectic linear algebra for covariance matrices.

Covariance matrices use the convention ``gamma_jk = <{R_j, R_k}>`` (vacuum =
identity) with interleaved ordering ``R = (X_1, P_1, ..., X_m, P_m)`` unless
stated otherwise.  The block ordering ``(X_1, ..., X_m, P_1, ..., P_m)`` is
available through :func:`to_block_order` / :func:`to_interleaved_order`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "symplectic_form",
    "block_symplectic_form",
    "interleave_permutation",
    "to_block_order",
    "to_interleaved_order",
    "SymplecticSpectrum",
    "symplectic_spectrum",
    "symplectic_eigenvalues",
    "williamson",
    "is_symplectic",
    "random_symplectic",
    "random_covariance",
    "delete_modes",
    "interlacing_check",
    "InterlacingResult",
    "perturbation_gap",
]


def symplectic_form(m: int) -> np.ndarray:
    """Interleaved form ``⊕_j [[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(m), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def block_symplectic_form(m: int) -> np.ndarray:
    """Block form ``[[0, I], [-I, 0]]``."""
    z, i = np.zeros((m, m)), np.eye(m)
    return np.block([[z, i], [-i, z]])


def interleave_permutation(m: int) -> np.ndarray:
    """Index array ``perm`` with ``block_vector = interleaved_vector[perm]``."""
    return np.concatenate([np.arange(0, 2 * m, 2), np.arange(1, 2 * m, 2)])


def to_block_order(gamma: np.ndarray) -> np.ndarray:
    perm = interleave_permutation(gamma.shape[0] // 2)
    return gamma[np.ix_(perm, perm)]


def to_interleaved_order(gamma: np.ndarray) -> np.ndarray:
    inv = np.argsort(interleave_permutation(gamma.shape[0] // 2))
    return gamma[np.ix_(inv, inv)]


def _sqrtm_psd(g: np.ndarray, inverse: bool = False) -> np.ndarray:
    w, v = np.linalg.eigh((g + g.T) / 2)
    if w.min() <= 0:
        raise np.linalg.LinAlgError(f"matrix is not positive definite (min eigenvalue {w.min():.3g})")
    f = w**-0.5 if inverse else np.sqrt(w)
    return (v * f) @ v.T


def symplectic_eigenvalues(gamma: np.ndarray, sigma: np.ndarray | None = None) -> np.ndarray:
    """Symplectic eigenvalues, sorted non-increasingly.

    Uses the Hermitian matrix ``i gamma^{1/2} sigma gamma^{1/2}``, whose
    eigenvalues are ``±d_j``.
    """
    gamma = np.asarray(gamma, dtype=float)
    m = gamma.shape[0] // 2
    sigma = symplectic_form(m) if sigma is None else sigma
    r = _sqrtm_psd(gamma)
    K = r @ sigma @ r
    ev = np.linalg.eigvalsh(1j * (K - K.T) / 2)
    return np.sort(ev[m:])[::-1]


@dataclass(frozen=True)
class SymplecticSpectrum:
    values: np.ndarray

    @property
    def descending(self) -> np.ndarray:
        return np.sort(self.values)[::-1]

    @property
    def ascending(self) -> np.ndarray:
        return np.sort(self.values)

    @property
    def purity_deviation(self) -> float:
        """``sum_j (d_j - 1)``."""
        return float(np.sum(self.values - 1.0))

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.values - 1.0)))

    def __len__(self):
        return self.values.size


def symplectic_spectrum(gamma, sigma: np.ndarray | None = None) -> SymplecticSpectrum:
    g = gamma.matrix if hasattr(gamma, "matrix") else gamma
    return SymplecticSpectrum(symplectic_eigenvalues(g, sigma))


def williamson(gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Williamson normal form ``S gamma S^T = diag(d_1, d_1, ..., d_m, d_m)``.

    Returns ``(S, d)`` with ``S`` symplectic for the interleaved form and ``d``
    sorted non-increasingly.  Degenerate symplectic eigenvalues are fine: any
    valid ``S`` is returned.
    """
    gamma = np.asarray(gamma, dtype=float)
    gamma = (gamma + gamma.T) / 2
    m = gamma.shape[0] // 2
    sigma = symplectic_form(m)
    ginv = _sqrtm_psd(gamma, inverse=True)
    A = ginv @ sigma @ ginv
    A = (A - A.T) / 2
    # i A is Hermitian with eigenvalues ±1/d_j; for A v = -i lam v (lam > 0) the
    # real vectors (Im v, Re v) span a block [[0, lam], [-lam, 0]] of A
    w, v = np.linalg.eigh(1j * A)
    pos = np.argsort(w)[::-1][:m]
    lam = w[pos]
    V = v[:, pos]
    O = np.empty((2 * m, 2 * m))
    O[:, 0::2] = np.sqrt(2) * V.imag
    O[:, 1::2] = np.sqrt(2) * V.real
    d = 1.0 / lam
    # ascending lam = descending d
    order = np.argsort(-d, kind="stable")
    d = d[order]
    cols = np.ravel(np.column_stack([2 * order, 2 * order + 1]))
    O = O[:, cols]
    S = np.repeat(np.sqrt(d), 2)[:, None] * (O.T @ ginv)
    return S, d


def is_symplectic(S: np.ndarray, tol: float = 1e-8, sigma: np.ndarray | None = None) -> bool:
    sigma = symplectic_form(S.shape[0] // 2) if sigma is None else sigma
    return bool(np.abs(S @ sigma @ S.T - sigma).max() <= tol)


def random_symplectic(m: int, rng: np.random.Generator, max_squeezing: float = 1.0) -> np.ndarray:
    """Random interleaved symplectic ``O_1 Z O_2`` (passive, squeeze, passive)."""

    def passive():
        U = sla.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))[0]
        O = np.block([[U.real, -U.imag], [U.imag, U.real]])
        return to_interleaved_order(O)

    r = rng.uniform(0, max_squeezing, size=m)
    Z = np.diag(np.ravel(np.column_stack([np.exp(r), np.exp(-r)])))
    return passive() @ Z @ passive()


def random_covariance(m: int, rng: np.random.Generator, pure: bool = False, max_squeezing: float = 1.0,
                      max_thermal: float = 5.0) -> np.ndarray:
    """``S diag(nu_1, nu_1, ...) S^T`` with random symplectic ``S`` and ``nu_j >= 1``."""
    S = random_symplectic(m, rng, max_squeezing)
    nu = np.ones(m) if pure else 1.0 + rng.uniform(0, max_thermal - 1.0, size=m)
    g = S @ np.diag(np.repeat(nu, 2)) @ S.T
    return (g + g.T) / 2


def delete_modes(gamma: np.ndarray, modes) -> np.ndarray:
    """Remove modes (both quadratures) from an interleaved covariance matrix."""
    m = gamma.shape[0] // 2
    keep = np.setdiff1d(np.arange(m), np.atleast_1d(modes))
    idx = np.ravel(np.column_stack([2 * keep, 2 * keep + 1]))
    return gamma[np.ix_(idx, idx)]


@dataclass
class InterlacingResult:
    passed: bool
    worst_margin: float
    n_deleted: int

    def __bool__(self):
        return self.passed


def interlacing_check(gamma_full: np.ndarray, gamma_sub: np.ndarray, tol: float = 1e-8) -> InterlacingResult:
    """Check ``d↑_j(full) <= d↑_j(sub) <= d↑_{j+2s}(full)`` for ``s`` deleted modes.

    ``d↑_{k}(full) = inf`` for ``k > m``.  With ``s = 1`` this is the
    single-deletion interlacing theorem; larger ``s`` follows by iteration.
    """
    n = gamma_full.shape[0]
    k = gamma_sub.shape[0]
    if n % 2 or k % 2 or k > n or gamma_full.shape[1] != n or gamma_sub.shape[1] != k:
        raise ValueError(f"incompatible shapes {gamma_full.shape} and {gamma_sub.shape}")
    m, msub = n // 2, k // 2
    s = m - msub
    if msub == 0:
        return InterlacingResult(True, np.inf, s)
    full = np.sort(symplectic_eigenvalues(gamma_full))
    sub = np.sort(symplectic_eigenvalues(gamma_sub))
    lower = sub - full[:msub]
    upper_idx = np.arange(msub) + 2 * s
    upper = np.where(upper_idx < m, full[np.minimum(upper_idx, m - 1)], np.inf) - sub
    worst = float(min(lower.min(), upper.min()))
    return InterlacingResult(worst >= -tol, worst, s)


def perturbation_gap(gamma1: np.ndarray, gamma2: np.ndarray) -> tuple[float, float]:
    """``max_j |d↓_j(g1) - d↓_j(g2)|`` and ``(||g1||^½ + ||g2||^½) ||g1 - g2||^½``."""
    if gamma1.shape != gamma2.shape:
        raise ValueError("covariance matrices must have equal shapes")
    d1 = symplectic_eigenvalues(gamma1)
    d2 = symplectic_eigenvalues(gamma2)
    shift = float(np.abs(d1 - d2).max())
    n1 = np.linalg.norm(gamma1, 2)
    n2 = np.linalg.norm(gamma2, 2)
    bound = float((np.sqrt(n1) + np.sqrt(n2)) * np.sqrt(np.linalg.norm(gamma1 - gamma2, 2)))
    return shift, bound
