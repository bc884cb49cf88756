"""
Local spin Hamiltonians on finite lattices and their exact ground states.

A Hamiltonian is a list of local terms ``(support, h)`` where ``support`` is a
tuple of site indices and ``h`` a Hermitian matrix on the product space of the
support (first support site = most significant tensor factor).  State vectors
use the row-major convention: the amplitude index of configuration
``(s_0, ..., s_{N-1})`` is ``sum_i s_i d**(N-1-i)``, i.e. a reshape to
``(d,) * N`` in C order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import Lattice, Region

logger = logging.getLogger(__name__)

__all__ = [
    "LocalHamiltonian",
    "GroundStateResult",
    "CapacityError",
    "ConvergenceError",
    "build_tfim",
    "build_heisenberg",
    "build_model",
    "ground_state",
    "split_hamiltonian",
    "HamiltonianSplit",
    "PAULI",
]

DENSE_MAX_SITES = 12
ITERATIVE_MAX_SITES = 24
HERMITIAN_TOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class CapacityError(ValueError):
    """Requested problem size exceeds what the exact solvers can handle."""


class ConvergenceError(RuntimeError):
    pass


@dataclass
class LocalHamiltonian:
    lattice: Lattice
    terms: list[tuple[tuple[int, ...], np.ndarray]]
    d: int = 2
    interaction_range: int = 1
    name: str = ""

    def __post_init__(self):
        checked = []
        for support, h in self.terms:
            support = tuple(int(s) for s in support)
            h = np.asarray(h, dtype=complex)
            dim = self.d ** len(support)
            if h.shape != (dim, dim):
                raise ValueError(f"term on {support} has shape {h.shape}, expected {(dim, dim)}")
            if len(set(support)) != len(support):
                raise ValueError(f"repeated site in support {support}")
            if np.abs(h - h.conj().T).max() > HERMITIAN_TOL:
                raise ValueError(f"term on {support} is not Hermitian")
            if len(support) > 1:
                diam = self.lattice.distance_matrix[np.ix_(support, support)].max()
                if diam > self.interaction_range:
                    raise ValueError(f"term on {support} exceeds interaction range {self.interaction_range}")
            checked.append((support, h))
        self.terms = checked

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @property
    def dim(self) -> int:
        return self.d**self.n_sites

    @property
    def term_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(h, 2) for _, h in self.terms])

    @property
    def h_max(self) -> float:
        return float(self.term_norms.max()) if self.terms else 0.0

    @property
    def norm_bound(self) -> float:
        """Sum of term operator norms, an upper bound on ``||H||``."""
        return float(self.term_norms.sum())

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``H @ psi`` by local tensor contractions (no matrix is formed)."""
        return apply_terms(self.terms, psi, self.n_sites, self.d)

    def to_sparse(self) -> sp.csr_matrix:
        return terms_to_sparse(self.terms, self.n_sites, self.d)

    def to_dense(self) -> np.ndarray:
        if self.n_sites > DENSE_MAX_SITES:
            raise CapacityError(f"dense matrix for {self.n_sites} sites exceeds the {DENSE_MAX_SITES}-site limit")
        return self.to_sparse().toarray()

    def energy(self, psi: np.ndarray) -> float:
        return float(np.vdot(psi, self.apply(psi)).real)


def apply_terms(terms, psi, n_sites, d) -> np.ndarray:
    t = np.asarray(psi, dtype=complex).reshape((d,) * n_sites)
    out = np.zeros_like(t)
    for support, h in terms:
        k = len(support)
        hk = h.reshape((d,) * (2 * k))
        # contract the term's input legs with the support axes, then restore order
        moved = np.tensordot(hk, t, axes=(list(range(k, 2 * k)), list(support)))
        out += np.moveaxis(moved, list(range(k)), list(support))
    return out.reshape(-1)


def embed_operator(op, support, n_sites, d) -> sp.csr_matrix:
    """Sparse matrix of a local operator acting on ``support`` of an ``n_sites`` register."""
    support = tuple(support)
    k = len(support)
    N = d**n_sites
    states = np.arange(N)
    powers = d ** (n_sites - 1 - np.array(support))
    digits = (states[:, None] // powers[None, :]) % d
    local = digits @ (d ** np.arange(k - 1, -1, -1))
    base = states - digits @ powers
    op = np.asarray(op)
    rows, cols, vals = [], [], []
    a_digits = (np.arange(d**k)[:, None] // d ** np.arange(k - 1, -1, -1)[None, :]) % d
    a_offset = a_digits @ powers
    for b in range(d**k):
        src = states[local == b]
        col = op[:, b]
        for a in np.flatnonzero(col):
            rows.append(base[src] + a_offset[a])
            cols.append(src)
            vals.append(np.full(src.size, col[a]))
    if not rows:
        return sp.csr_matrix((N, N), dtype=complex)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N), dtype=complex
    )


def terms_to_sparse(terms, n_sites, d) -> sp.csr_matrix:
    N = d**n_sites
    H = sp.csr_matrix((N, N), dtype=complex)
    for support, h in terms:
        H = H + embed_operator(h, support, n_sites, d)
    return H


def _check_capacity(n_sites: int, method: str = "iterative"):
    limit = DENSE_MAX_SITES if method == "dense" else ITERATIVE_MAX_SITES
    if n_sites > limit:
        raise CapacityError(
            f"{n_sites} sites exceeds the {method} exact-diagonalisation limit of {limit} sites; "
            f"reduce the length to <= {limit}"
        )


def build_tfim(length: int, field: float, coupling: float = 1.0, bc: str = "open", lattice: Lattice | None = None):
    """Transverse-field Ising model ``-J sum Z_i Z_j - g sum X_i``.

    Pass ``lattice`` to place the model on a 2D grid instead of a chain.
    """
    lat = lattice if lattice is not None else Lattice.chain(length, bc)
    _check_capacity(lat.n_sites)
    zz = -coupling * np.kron(PAULI["Z"], PAULI["Z"])
    x = -field * PAULI["X"]
    terms = []
    if coupling != 0:
        terms += [((i, j), zz) for i, j in lat.bonds()]
    if field != 0:
        terms += [((i,), x) for i in range(lat.n_sites)]
    return LocalHamiltonian(lat, terms, d=2, name=f"tfim(g={field}, J={coupling})")


def build_heisenberg(length: int, coupling: float = 1.0, bc: str = "open", lattice: Lattice | None = None):
    """Spin-1/2 Heisenberg model ``J sum S_i . S_j`` with ``S = sigma / 2``.

    Two sites give the singlet at energy ``-3J/4``.
    """
    lat = lattice if lattice is not None else Lattice.chain(length, bc)
    _check_capacity(lat.n_sites)
    ss = sum(np.kron(PAULI[a], PAULI[a]) for a in "XYZ") * (coupling / 4)
    return LocalHamiltonian(lat, [((i, j), ss) for i, j in lat.bonds()], d=2, name=f"heisenberg(J={coupling})")


def build_model(model: str, length: int, field: float = 0.0, coupling: float = 1.0, bc: str = "open"):
    if model == "tfim":
        return build_tfim(length, field, coupling, bc)
    if model == "heisenberg":
        return build_heisenberg(length, coupling, bc)
    raise ValueError(f"unknown model {model!r}; expected 'tfim' or 'heisenberg'")


@dataclass
class GroundStateResult:
    state: np.ndarray
    energy: float
    gap: float
    residual: float
    method: str
    iterations: int | None = None
    degenerate: bool = False
    lattice: Lattice | None = None
    d: int = 2
    info: dict = field(default_factory=dict)


def ground_state(H: LocalHamiltonian, method: str = "auto", seed: int = 1234, tol: float = 1e-12,
                 degeneracy_tol: float = 1e-8) -> GroundStateResult:
    """Lowest eigenpair of ``H`` by dense or Lanczos diagonalisation.

    ``method="auto"`` uses the dense solver up to 10 sites and ARPACK beyond.
    The Lanczos start vector is drawn from ``seed``, so results are
    reproducible.  The returned state has a fixed global phase (largest
    amplitude real positive).
    """
    n = H.n_sites
    if method == "auto":
        method = "dense" if n <= 10 else "iterative"
    _check_capacity(n, method)
    iterations = None
    if method == "dense":
        evals, evecs = np.linalg.eigh(H.to_dense())
        E = evals[:2]
        psi = evecs[:, 0]
    elif method == "iterative":
        N = H.dim
        if N <= 2:
            return ground_state(H, "dense", seed, tol)
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        calls = [0]

        def matvec(v):
            calls[0] += 1
            return H.apply(v)

        op = spla.LinearOperator((N, N), matvec=matvec, dtype=complex)
        k = 2 if N > 3 else 1
        try:
            evals, evecs = spla.eigsh(op, k=k, which="SA", v0=v0, tol=tol, ncv=min(N - 1, 30))
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge: {exc}") from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        E = evals
        psi = evecs[:, 0]
        iterations = calls[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    psi = psi / np.linalg.norm(psi)
    j = np.argmax(np.abs(psi))
    psi = psi * (abs(psi[j]) / psi[j])
    energy = float(E[0])
    gap = float(E[1] - E[0]) if len(E) > 1 else float("inf")
    residual = float(np.linalg.norm(H.apply(psi) - energy * psi))
    scale = max(H.norm_bound, 1.0)
    if residual > 1e-8 * scale:
        raise ConvergenceError(f"ground-state residual {residual:.3g} exceeds 1e-8 * ||H|| = {1e-8 * scale:.3g}")
    degenerate = gap < degeneracy_tol
    if degenerate:
        logger.warning("ground space of %s is (near) degenerate: gap %.3g", H.name, gap)
    return GroundStateResult(psi, energy, gap, residual, method, iterations, degenerate, H.lattice, H.d)


@dataclass
class HamiltonianSplit:
    inside: list
    crossing: list
    outside: list
    boundary_norm: float
    boundary_size: int
    h: float
    n_crossing: int
    h_max: float

    @property
    def norm_check(self) -> bool:
        """``||H_dA|| <= h_max * (number of crossing terms)``."""
        return self.boundary_norm <= self.h_max * self.n_crossing + 1e-12


def local_operator_norm(terms, d) -> float:
    """Operator norm of a sum of local terms, evaluated on the union of supports."""
    if not terms:
        return 0.0
    sites = sorted({s for support, _ in terms for s in support})
    relabel = {s: i for i, s in enumerate(sites)}
    local = [(tuple(relabel[s] for s in support), h) for support, h in terms]
    M = terms_to_sparse(local, len(sites), d).toarray()
    return float(np.abs(np.linalg.eigvalsh(M)).max())


def split_hamiltonian(H: LocalHamiltonian, A: Region) -> HamiltonianSplit:
    """Split terms into those inside ``A``, crossing the cut, and inside ``A^c``."""
    if A.is_empty or A.is_full:
        raise ValueError("region must be a proper, non-empty subset of the lattice")
    mask = A.mask
    inside, crossing, outside = [], [], []
    for support, h in H.terms:
        m = mask[list(support)]
        if m.all():
            inside.append((support, h))
        elif not m.any():
            outside.append((support, h))
        else:
            crossing.append((support, h))
    bnorm = local_operator_norm(crossing, H.d)
    bsize = len(A.boundary(1))
    return HamiltonianSplit(inside, crossing, outside, bnorm, bsize, bnorm / bsize, len(crossing), H.h_max)
