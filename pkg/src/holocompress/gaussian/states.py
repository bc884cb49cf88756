"""
Harmonic lattice models and pure Gaussian states.

The Hamiltonian ``H = P P^T / 2 + X V X^T`` has normal-mode frequencies
``Omega = (2V)^{1/2}`` and a ground state with covariance blocks
``gamma_XX = Omega^{-1}``, ``gamma_PP = Omega`` and ``gamma_XP = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from ..lattice import Lattice, Region
from .symplectic import symplectic_eigenvalues, symplectic_form

__all__ = [
    "HarmonicModel",
    "CovarianceMatrix",
    "GaplessModelError",
    "ground_covariance",
    "gaussian_overlap",
    "two_mode_squeezed_covariance",
    "squeezed_vacuum_covariance",
    "fock_squeezed_vacuum",
    "fock_two_mode_squeezed",
]

PURITY_TOL = 1e-6
GAP_TOL = 1e-12


class GaplessModelError(ValueError):
    """Coupling matrix is not positive definite."""


@dataclass
class HarmonicModel:
    """``H = P P^T / 2 + X V X^T`` on a lattice, with position couplings ``V``."""

    lattice: Lattice
    V: np.ndarray
    interaction_range: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        n = self.lattice.n_sites
        if V.shape != (n, n):
            raise ValueError(f"coupling matrix shape {V.shape} does not match {n} sites")
        if np.abs(V - V.T).max() > 1e-12:
            raise ValueError("coupling matrix must be symmetric")
        far = self.lattice.distance_matrix > self.interaction_range
        if np.any(V[far] != 0):
            raise ValueError(f"couplings beyond range {self.interaction_range}")
        ev = np.linalg.eigvalsh(V)
        lo = ev.min()
        # relative threshold: a zero mode comes out as +-1e-16 in floating point
        if lo <= GAP_TOL * max(1.0, np.abs(ev).max()):
            raise GaplessModelError(f"V is not positive definite (smallest eigenvalue {lo:.3g}); gapless model")
        self.V = V
        self.min_eigenvalue = float(lo)

    @classmethod
    def chain(cls, length: int, mass: float = 1.0, kappa: float = 1.0, bc: str = "open") -> "HarmonicModel":
        """``V = (m^2 + 2 kappa) I - kappa (shift + shift^T)``."""
        return cls.on_lattice(Lattice.chain(length, bc), mass, kappa)

    @classmethod
    def grid(cls, rows: int, cols: int, mass: float = 1.0, kappa: float = 1.0, bc: str = "open") -> "HarmonicModel":
        return cls.on_lattice(Lattice.grid(rows, cols, bc), mass, kappa)

    @classmethod
    def on_lattice(cls, lattice: Lattice, mass: float, kappa: float) -> "HarmonicModel":
        n = lattice.n_sites
        V = np.eye(n) * (mass**2 + 2 * lattice.ndim * kappa)
        for i, j in lattice.bonds():
            V[i, j] -= kappa
            V[j, i] -= kappa
        return cls(lattice, V, 1, {"mass": mass, "kappa": kappa})

    @property
    def n_modes(self) -> int:
        return self.lattice.n_sites


@dataclass
class CovarianceMatrix:
    """Interleaved covariance matrix with the lattice site of every mode."""

    matrix: np.ndarray
    sites: np.ndarray
    lattice: Lattice | None = None

    def __post_init__(self):
        g = np.asarray(self.matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise ValueError("covariance matrix must be square with even dimension")
        if np.abs(g - g.T).max() > 1e-12 * max(1.0, np.abs(g).max()):
            raise ValueError("covariance matrix must be symmetric")
        self.matrix = (g + g.T) / 2
        self.sites = np.asarray(self.sites, dtype=int)
        if self.sites.size != g.shape[0] // 2:
            raise ValueError("one site label per mode is required")

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def is_physical(self, tol: float = 1e-8) -> bool:
        """``gamma + i sigma >= 0``."""
        ev = np.linalg.eigvalsh(self.matrix + 1j * symplectic_form(self.n_modes))
        return bool(ev.min() >= -tol)

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.matrix)

    def is_pure(self, tol: float = PURITY_TOL) -> bool:
        return bool(np.abs(self.symplectic_eigenvalues() - 1).max() <= tol)

    def mode_indices(self, sites) -> np.ndarray:
        """Rows/columns of the quadratures of the given lattice sites."""
        pos = {s: i for i, s in enumerate(self.sites.tolist())}
        modes = np.array([pos[s] for s in np.atleast_1d(sites)], dtype=int)
        return np.ravel(np.column_stack([2 * modes, 2 * modes + 1])) if modes.size else modes

    def block(self, sites_a, sites_b=None) -> np.ndarray:
        ia = self.mode_indices(sites_a)
        ib = ia if sites_b is None else self.mode_indices(sites_b)
        return self.matrix[np.ix_(ia, ib)]

    def reduced(self, sites) -> "CovarianceMatrix":
        sites = np.atleast_1d(sites)
        return CovarianceMatrix(self.block(sites), sites, self.lattice)

    def partition(self, A: Region):
        """``(gamma_A, Xi, gamma_Ac)`` for the region and its complement."""
        a = A.sites
        ac = np.setdiff1d(self.sites, a)
        return self.block(a), self.block(a, ac), self.block(ac)


def ground_covariance(model: HarmonicModel) -> CovarianceMatrix:
    """Ground-state covariance ``(2V)^{-1/2} ⊕ (2V)^{1/2}``, interleaved."""
    w, U = np.linalg.eigh(2 * model.V)
    if w.min() <= 0:
        raise GaplessModelError("coupling matrix is not positive definite")
    omega = np.sqrt(w)
    gx = (U / omega) @ U.T
    gp = (U * omega) @ U.T
    n = model.n_modes
    g = np.zeros((2 * n, 2 * n))
    g[0::2, 0::2] = gx
    g[1::2, 1::2] = gp
    return CovarianceMatrix(g, np.arange(n), model.lattice)


def gaussian_overlap(gamma1, gamma2, check: bool = True, tol: float = PURITY_TOL) -> float:
    """``|<psi_1|psi_2>|^2 = 2^n / sqrt(det(gamma_1 + gamma_2))`` for pure, centred states."""
    g1 = gamma1.matrix if isinstance(gamma1, CovarianceMatrix) else np.asarray(gamma1, dtype=float)
    g2 = gamma2.matrix if isinstance(gamma2, CovarianceMatrix) else np.asarray(gamma2, dtype=float)
    if g1.shape != g2.shape:
        raise ValueError("states have different mode numbers")
    if check:
        for g in (g1, g2):
            dev = np.abs(symplectic_eigenvalues(g) - 1).max()
            if dev > tol:
                raise ValueError(f"overlap formula needs pure states (max |d_j - 1| = {dev:.3g})")
    n = g1.shape[0] // 2
    sign, logdet = np.linalg.slogdet(g1 + g2)
    if sign <= 0:
        raise ValueError("gamma_1 + gamma_2 is not positive definite")
    return float(math.exp(n * math.log(2) - 0.5 * logdet))


def squeezed_vacuum_covariance(r: float) -> np.ndarray:
    """Single-mode squeezed vacuum ``diag(e^{2r}, e^{-2r})``."""
    return np.diag([math.exp(2 * r), math.exp(-2 * r)])


def two_mode_squeezed_covariance(d: float) -> np.ndarray:
    """Pure two-mode squeezed state whose reduced modes have symplectic eigenvalue ``d``.

    ``[[d I, mu Z], [mu Z, d I]]`` with ``Z = diag(1, -1)`` and ``mu = sqrt(d^2 - 1)``.
    """
    if d < 1:
        raise ValueError("symplectic eigenvalue must be >= 1")
    mu = math.sqrt(d * d - 1)
    Z = np.diag([1.0, -1.0])
    return np.block([[d * np.eye(2), mu * Z], [mu * Z, d * np.eye(2)]])


# --- number-basis oracles ---------------------------------------------------------


def _annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1)


def fock_squeezed_vacuum(r: float, cutoff: int = 80) -> np.ndarray:
    """``exp(r (a^dag^2 - a^2) / 2) |0>`` in a truncated number basis.

    For ``r > 0`` the X quadrature is stretched, matching
    ``squeezed_vacuum_covariance(r)``.
    """
    a = _annihilation(cutoff)
    gen = 0.5 * r * (a.T @ a.T - a @ a)
    v = sla.expm(gen)[:, 0]
    return v / np.linalg.norm(v)


def fock_two_mode_squeezed(r: float, cutoff: int = 60) -> np.ndarray:
    """``exp(r (a^dag b^dag - a b)) |0,0>`` as a ``cutoff x cutoff`` amplitude array.

    Its covariance matrix is ``two_mode_squeezed_covariance(cosh 2r)``.
    """
    a = sp.csr_matrix(_annihilation(cutoff))
    I = sp.identity(cutoff, format="csr")
    A, B = sp.kron(a, I, format="csr"), sp.kron(I, a, format="csr")
    gen = r * (A.T @ B.T - A @ B)
    v0 = np.zeros(cutoff * cutoff)
    v0[0] = 1.0
    v = expm_multiply(gen.tocsc(), v0)
    return (v / np.linalg.norm(v)).reshape(cutoff, cutoff)
