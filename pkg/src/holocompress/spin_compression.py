"""
Holographic compression of lattice pure states.

A state is cut into a region ``A`` and its complement, Schmidt decomposed,
truncated to its ``M`` largest Schmidt weights, and a unitary on ``A`` is built
that maps the retained Schmidt vectors onto a subspace of the thickened
boundary tensored with a fixed reference state on the bulk.

Operators on ``A`` (matrices of size ``d**|A|``) act on the tensor factor of
the sites of ``A`` taken in increasing site order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import ProbabilityVector, shannon_entropy, truncation_bound
from .lattice import Lattice, Region, boundary_width_function, thickened_boundary
from .spin_models import LocalHamiltonian, embed_operator, split_hamiltonian, terms_to_sparse

__all__ = [
    "PureState",
    "SchmidtData",
    "CompressionPlan",
    "CompressionUnitary",
    "RegionTooSmall",
    "schmidt_decompose",
    "truncate_state",
    "plan_compression",
    "build_compression_unitary",
    "apply_on_region",
    "compress_and_recover",
    "boundary_represent",
    "correlation_compare",
    "energy_check",
    "commutator_identity",
    "holographic_purification",
    "product_state",
    "ghz_state",
    "random_state",
    "region_operator",
    "RecoveryResult",
    "CorrelationComparison",
    "EnergyCheck",
    "DENSE_REGION_MAX_SITES",
]

NORM_TOL = 1e-12
DENSE_REGION_MAX_SITES = 12


class RegionTooSmall(ValueError):
    """The thickened boundary cannot reach the size required by the target error."""


@dataclass
class PureState:
    """Normalised state vector on a lattice of ``d``-level sites (row-major order)."""

    amplitudes: np.ndarray
    lattice: Lattice
    d: int = 2

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        if a.size != self.d**self.lattice.n_sites:
            raise ValueError(f"state has {a.size} amplitudes, lattice needs {self.d ** self.lattice.n_sites}")
        nrm = np.linalg.norm(a)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state norm {nrm!r} differs from 1")
        self.amplitudes = a / nrm

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * self.n_sites)

    def configuration(self, index: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(index, (self.d,) * self.n_sites))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def product_state(lattice: Lattice, local=None, d: int = 2) -> PureState:
    """Product of identical single-site vectors (default ``|0>``)."""
    v = np.zeros(d, dtype=complex)
    if local is None:
        v[0] = 1
    else:
        v = np.asarray(local, dtype=complex)
        v = v / np.linalg.norm(v)
    psi = np.array([1.0 + 0j])
    for _ in range(lattice.n_sites):
        psi = np.kron(psi, v)
    return PureState(psi, lattice, d)


def ghz_state(lattice: Lattice) -> PureState:
    psi = np.zeros(2**lattice.n_sites, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return PureState(psi, lattice, 2)


def random_state(lattice: Lattice, rng: np.random.Generator, d: int = 2) -> PureState:
    N = d**lattice.n_sites
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return PureState(v / np.linalg.norm(v), lattice, d)


def _split_axes(A: Region):
    rest = np.flatnonzero(~A.mask)
    return list(A.sites), list(rest)


def _as_matrix(state: PureState, A: Region) -> np.ndarray:
    a, b = _split_axes(A)
    t = np.transpose(state.tensor(), a + b)
    return t.reshape(state.d ** len(a), state.d ** len(b))


def _from_matrix(mat: np.ndarray, A: Region, d: int) -> np.ndarray:
    a, b = _split_axes(A)
    n = A.lattice.n_sites
    t = mat.reshape((d,) * n)
    return np.transpose(t, np.argsort(a + b)).reshape(-1)


@dataclass
class SchmidtData:
    """Schmidt decomposition ``|psi> = sum_j sqrt(p_j) |j>_A |j>_{A^c}``.

    ``left`` has the Schmidt vectors of ``A`` as columns, ``right`` those of the
    complement.  The number of Schmidt vectors is ``min(d**|A|, d**|A^c|)``,
    including those of zero weight.
    """

    region: Region
    spectrum: ProbabilityVector
    left: np.ndarray
    right: np.ndarray
    entropy: float
    state: PureState

    @property
    def d(self) -> int:
        return self.state.d

    @property
    def weights(self) -> np.ndarray:
        return self.spectrum.p

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.weights > 1e-14))

    @property
    def n_vectors(self) -> int:
        return self.left.shape[1]

    def reconstruct(self, M: int | None = None) -> np.ndarray:
        M = self.n_vectors if M is None else M
        mat = (self.left[:, :M] * np.sqrt(self.weights[:M])) @ self.right[:, :M].T
        return _from_matrix(mat, self.region, self.d)

    def projector(self, M: int) -> np.ndarray:
        """``P_M`` on the ``A`` factor."""
        L = self.left[:, :M]
        return L @ L.conj().T


def schmidt_decompose(state: PureState, A: Region) -> SchmidtData:
    """Singular value decomposition of the amplitudes across ``A | A^c``."""
    if A.is_empty or A.is_full:
        raise ValueError("Schmidt decomposition needs a proper, non-empty region")
    if A.lattice != state.lattice:
        raise ValueError("region and state live on different lattices")
    mat = _as_matrix(state, A)
    U, s, Vh = np.linalg.svd(mat, full_matrices=False)
    p = s**2
    p = p / p.sum()
    spectrum = ProbabilityVector(p, log_base=state.d)
    # SVD already returns non-increasing singular values; keep vectors aligned
    U = U[:, spectrum.order]
    V = Vh.T[:, spectrum.order]
    return SchmidtData(A, spectrum, U, V, shannon_entropy(spectrum), state)


def truncate_state(sd: SchmidtData, M: int) -> tuple[PureState, float]:
    """Keep the ``M`` largest Schmidt weights and renormalise.

    Returns ``(psi_M, overlap)`` with ``overlap = |<psi|psi_M>|^2``, computed as
    an explicit inner product.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    M = min(int(M), sd.n_vectors)
    v = sd.reconstruct(M)
    v = v / np.linalg.norm(v)
    psi_M = PureState(v, sd.state.lattice, sd.d)
    overlap = abs(np.vdot(sd.state.amplitudes, v)) ** 2
    return psi_M, float(overlap)


@dataclass
class CompressionPlan:
    region: Region
    epsilon: float
    M: int
    l: int
    boundary: Region
    bulk: Region
    k: float
    entropy: float
    M_min: int
    guarantee: bool
    capped: bool
    predicted_coverage: float
    d: int = 2
    reference: np.ndarray | None = None
    boundary_basis: np.ndarray | None = None
    cut_degenerate: bool = False


def plan_compression(sd: SchmidtData, epsilon: float, k="from-state", l: int | None = None,
                     reference=None, boundary_basis=None) -> CompressionPlan:
    """Choose the boundary width ``l`` and retained rank ``M`` for a target error.

    With ``k="from-state"`` the area-law constant is the state's own
    ``S(A) / |∂_1 A|``.  The width is ``l_A(k / epsilon)`` (or ``l`` if given)
    and ``M = d**|∂_l A|``, capped at the number of Schmidt vectors.  The
    guarantee ``log_d M >= S(A) / epsilon`` is recorded; when it holds the
    truncation overlap is at least ``1 - epsilon``.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    A = sd.region
    d = sd.d
    b1 = len(thickened_boundary(A, 1))
    S = sd.entropy
    if k == "from-state":
        k = S / b1
    k = float(k)
    if k < 0:
        raise ValueError("area-law constant must be non-negative")
    if l is None:
        if k == 0:
            l = 1
        else:
            l = boundary_width_function(A, k / epsilon)
            if l is None:
                raise RegionTooSmall(
                    f"region too small for target epsilon={epsilon}: needs {k / epsilon * b1:.3g} "
                    f"boundary sites but |A| = {len(A)}"
                )
    boundary = thickened_boundary(A, l)
    bulk = A.bulk(l)
    n_b = len(boundary)
    M_full = d**n_b
    M = min(M_full, sd.n_vectors)
    capped = M < M_full
    # smallest M with log_d M >= S/eps
    M_min = min(int(math.ceil(d ** (S / epsilon) - 1e-9)), sd.n_vectors) if S > 0 else 1
    guarantee = math.log(M, d) >= S / epsilon - 1e-12 if M > 1 else S == 0
    pred = truncation_bound(sd.spectrum, M)[1] if M >= 2 else (1.0 if S == 0 else 0.0)
    w = sd.weights
    cut_degenerate = bool(M < w.size and abs(w[M - 1] - w[M]) <= 1e-12 and w[M] > 1e-14)
    if reference is None:
        reference = np.zeros(d ** len(bulk), dtype=complex)
        reference[0] = 1.0
    reference = np.asarray(reference, dtype=complex).ravel()
    if reference.size != d ** len(bulk):
        raise ValueError("reference bulk state has the wrong dimension")
    reference = reference / np.linalg.norm(reference)
    if boundary_basis is not None:
        boundary_basis = np.asarray(boundary_basis, dtype=complex)
        if boundary_basis.shape[0] != M_full or boundary_basis.shape[1] < M:
            raise ValueError(f"boundary basis must have shape ({M_full}, >= {M})")
        G = boundary_basis[:, :M].conj().T @ boundary_basis[:, :M]
        if np.abs(G - np.eye(M)).max() > 1e-10:
            raise ValueError("boundary basis columns are not orthonormal")
    return CompressionPlan(A, float(epsilon), int(M), int(l), boundary, bulk, k, S, M_min, bool(guarantee),
                           capped, float(pred), d, reference, boundary_basis, cut_degenerate)


def _complete_basis(V: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns ``V`` to a unitary with ``V`` as its first columns."""
    n, m = V.shape
    if m == n:
        return V.copy()
    Q, _ = np.linalg.qr(np.hstack([V, np.eye(n, dtype=complex)]))
    C = Q[:, m:n]
    # one re-orthogonalisation pass against V
    C = C - V @ (V.conj().T @ C)
    C, _ = np.linalg.qr(C)
    return np.hstack([V, C])


@dataclass
class CompressionUnitary:
    """Unitary on the ``A`` factor realising the compression of ``plan``."""

    matrix: np.ndarray
    plan: CompressionPlan
    targets: np.ndarray
    sources: np.ndarray

    @property
    def region(self) -> Region:
        return self.plan.region

    def unitarity_error(self) -> float:
        U = self.matrix
        return float(np.abs(U @ U.conj().T - np.eye(U.shape[0])).max())

    def subspace_error(self) -> float:
        """``||U P_M U^dag - (P~_M ⊗ |∅><∅|)||_max``."""
        P = self.sources @ self.sources.conj().T
        T = self.targets @ self.targets.conj().T
        return float(np.abs(self.matrix @ P @ self.matrix.conj().T - T).max())

    def dagger(self) -> "CompressionUnitary":
        return CompressionUnitary(self.matrix.conj().T, self.plan, self.sources, self.targets)


def _target_vectors(plan: CompressionPlan, d: int) -> np.ndarray:
    """Columns ``|~j>_{∂_l A} ⊗ |∅>_bulk`` embedded in the ``A`` factor."""
    A = plan.region
    nb = len(plan.boundary)
    if plan.boundary_basis is None:
        B = np.eye(d**nb, dtype=complex)[:, : plan.M]
    else:
        B = plan.boundary_basis[:, : plan.M]
    # build in (boundary, bulk) order, then permute to increasing site order of A
    T = np.einsum("bj,c->bcj", B, plan.reference).reshape(d ** len(A), plan.M)
    order = list(plan.boundary.sites) + list(plan.bulk.sites)
    pos = [int(np.searchsorted(A.sites, s)) for s in order]
    T = T.reshape((d,) * len(A) + (plan.M,))
    T = np.transpose(T, list(np.argsort(pos)) + [len(A)])
    return T.reshape(d ** len(A), plan.M)


def build_compression_unitary(sd: SchmidtData, plan: CompressionPlan) -> CompressionUnitary:
    """Dense unitary on ``A`` with ``U |j>_A = |~j> ⊗ |∅>`` for ``j <= M``.

    The remaining columns come from a canonical (QR) completion of both bases.
    """
    if plan.region != sd.region:
        raise ValueError("plan and Schmidt data refer to different regions")
    if len(sd.region) > DENSE_REGION_MAX_SITES:
        raise ValueError(f"dense unitary on {len(sd.region)} sites exceeds {DENSE_REGION_MAX_SITES}")
    d = sd.d
    if plan.M > d ** len(plan.boundary):
        raise ValueError("retained rank does not fit into the thickened boundary")
    S = sd.left[:, : plan.M]
    T = _target_vectors(plan, d)
    U = _complete_basis(T) @ _complete_basis(S).conj().T
    return CompressionUnitary(U, plan, T, S)


def apply_on_region(U, state: PureState, region: Region | None = None) -> PureState:
    """Apply ``U ⊗ I_{A^c}`` by reshaping, without forming the global operator."""
    if isinstance(U, CompressionUnitary):
        region = U.region if region is None else region
        U = U.matrix
    if region is None:
        raise ValueError("region required for a bare matrix")
    dA = state.d ** len(region)
    if U.shape != (dA, dA):
        raise ValueError(f"operator of shape {U.shape} does not match region dimension {dA}")
    mat = _as_matrix(state, region)
    out = _from_matrix(U @ mat, region, state.d)
    return PureState(out, state.lattice, state.d)


def _bulk_split(state: PureState, plan: CompressionPlan) -> np.ndarray:
    """Amplitude matrix with bulk configurations as rows."""
    if len(plan.bulk) == 0:
        return state.amplitudes[None, :]
    return _as_matrix(state, plan.bulk)


@dataclass
class RecoveryResult:
    fidelity: float
    bulk_purity: float
    chi_fidelity: float
    reference_weight: float


def compress_and_recover(state: PureState, plan: CompressionPlan, U: CompressionUnitary) -> RecoveryResult:
    """Compress, discard the bulk, re-attach ``|∅>`` and undo the compression.

    ``fidelity`` is ``<psi| R(psi) |psi>`` for the channel that traces out the
    bulk and re-prepares the reference state.  ``chi_fidelity`` is
    ``|<psi| U^dag (|chi> ⊗ |∅>)>|^2`` where ``|chi>`` is the normalised
    projection of the compressed state onto the bulk reference.
    ``bulk_purity`` is the purity of the bulk after compression.
    """
    phi = apply_on_region(U, state)
    Phi = _bulk_split(phi, plan)
    ref = plan.reference if len(plan.bulk) else np.ones(1, dtype=complex)
    c = ref.conj() @ Phi
    fidelity = float(np.linalg.norm(Phi.conj() @ c) ** 2)
    weight = float(np.linalg.norm(c) ** 2)
    rho_bulk = Phi @ Phi.conj().T
    purity = float(np.real(np.trace(rho_bulk @ rho_bulk)))
    if weight > 0:
        chi = np.outer(ref, c / math.sqrt(weight))
        if len(plan.bulk):
            chi_state = _from_matrix(chi, plan.bulk, state.d)
        else:
            chi_state = chi.ravel()
        back = apply_on_region(U.dagger(), PureState(chi_state, state.lattice, state.d))
        chi_fid = float(abs(np.vdot(state.amplitudes, back.amplitudes)) ** 2)
    else:
        chi_fid = 0.0
    return RecoveryResult(min(fidelity, 1.0), min(purity, 1.0), min(chi_fid, 1.0), weight)


def region_operator(op, sites, A: Region, d: int = 2) -> np.ndarray:
    """Dense operator on the ``A`` factor for a local ``op`` on ``sites`` ⊆ A."""
    local = [int(np.searchsorted(A.sites, s)) for s in sites]
    if any(i >= len(A) or A.sites[i] != s for i, s in zip(local, sites)):
        raise ValueError("operator support is not contained in the region")
    return embed_operator(op, local, len(A), d).toarray()


def _commutator_norm(X: np.ndarray, P: np.ndarray) -> float:
    return float(np.linalg.norm(X @ P - P @ X, 2))


def boundary_represent(X: np.ndarray, U: CompressionUnitary):
    """Image of an ``A`` operator on the thickened boundary.

    Returns ``(X_tilde, residual)`` where ``X_tilde`` is the block of
    ``U X U^dag`` on the retained subspace, written on the boundary factor, and
    ``residual = ||[X, P_M]||``.
    """
    plan = U.plan
    Y = U.targets.conj().T @ U.matrix @ X @ U.matrix.conj().T @ U.targets
    nb = len(plan.boundary)
    d = plan.d
    B = np.eye(d**nb, dtype=complex)[:, : plan.M] if plan.boundary_basis is None else plan.boundary_basis[:, : plan.M]
    X_tilde = B @ Y @ B.conj().T
    residual = _commutator_norm(X, U.sources @ U.sources.conj().T)
    return X_tilde, residual


def _boundary_state(sd: SchmidtData, plan: CompressionPlan) -> np.ndarray:
    """Reduced state of the compressed truncated vector on the thickened boundary."""
    d = sd.d
    nb = len(plan.boundary)
    w = sd.weights[: plan.M]
    B = np.eye(d**nb, dtype=complex)[:, : plan.M] if plan.boundary_basis is None else plan.boundary_basis[:, : plan.M]
    return (B * (w / w.sum())) @ B.conj().T


@dataclass
class CorrelationComparison:
    bulk_value: complex
    boundary_value: complex
    difference: float
    residuals: list
    error_bound: float


def correlation_compare(ops, U: CompressionUnitary, sd: SchmidtData, tol: float = 1e-8) -> CorrelationComparison:
    """``<psi| X_1 ... X_k |psi>`` versus its boundary representation.

    Each ``X_i`` is a dense operator on the ``A`` factor.  Operators whose
    commutator with ``P_M`` exceeds ``tol`` are rejected.  ``error_bound`` is
    ``2 sqrt(eta) prod ||X_i|| + sum_{i<k} ||[X_i, P_M]|| prod_{j != i} ||X_j||``
    with ``eta = 1 - sum_{j<=M} p_j``, a telescoping estimate for the gap.
    """
    plan = U.plan
    P = U.sources @ U.sources.conj().T
    residuals = [_commutator_norm(X, P) for X in ops]
    for i, r in enumerate(residuals):
        if r > tol:
            raise ValueError(f"operator {i} has ||[X, P_M]|| = {r:.3g} > tol = {tol:g}")
    prod = np.eye(P.shape[0], dtype=complex)
    for X in ops:
        prod = prod @ X
    mat = _as_matrix(sd.state, sd.region)
    bulk_value = complex(np.vdot(mat, prod @ mat))
    reps = [boundary_represent(X, U)[0] for X in ops]
    tprod = np.eye(reps[0].shape[0], dtype=complex) if reps else np.eye(1)
    for Xt in reps:
        tprod = tprod @ Xt
    rho = _boundary_state(sd, plan)
    boundary_value = complex(np.trace(tprod @ rho))
    norms = [np.linalg.norm(X, 2) for X in ops]
    eta = max(0.0, 1.0 - float(sd.weights[: plan.M].sum()))
    bound = 2 * math.sqrt(eta) * float(np.prod(norms))
    for i in range(len(ops) - 1):
        bound += residuals[i] * float(np.prod([n for j, n in enumerate(norms) if j != i]))
    return CorrelationComparison(bulk_value, boundary_value, abs(bulk_value - boundary_value), residuals, bound)


@dataclass
class EnergyCheck:
    lhs: float
    thm2_bound: float
    eq16_bound: float
    h: float
    boundary_size: int
    truncation_error: float
    ok: bool
    info: dict = field(default_factory=dict)


def energy_check(state: PureState, psi_M: PureState, H: LocalHamiltonian, A: Region, epsilon: float,
                 energy: float | None = None) -> EnergyCheck:
    """Energy cost of truncation against the energetic area-law bounds.

    ``lhs = |<psi_M|H|psi_M> - <psi|H|psi>|`` is compared to
    ``sqrt(eps / (1 - eps)) * h * |∂_1 A|`` with ``h = ||H_∂A|| / |∂_1 A|`` and
    to ``2 sqrt(eps) * sum ||h_i||``.  ``epsilon`` must upper-bound the actual
    truncation error ``1 - |<psi|psi_M>|^2``.
    """
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    split = split_hamiltonian(H, A)
    E0 = H.energy(state.amplitudes) if energy is None else energy
    EM = H.energy(psi_M.amplitudes)
    lhs = abs(EM - E0)
    trunc = 1.0 - abs(np.vdot(state.amplitudes, psi_M.amplitudes)) ** 2
    if trunc > epsilon + 1e-12:
        raise ValueError(f"truncation error {trunc:.3g} exceeds epsilon = {epsilon:g}")
    thm2 = math.sqrt(epsilon / (1 - epsilon)) * split.h * split.boundary_size
    eq16 = 2 * math.sqrt(epsilon) * H.norm_bound
    tol = 1e-10 * max(1.0, H.norm_bound)
    ok = lhs <= thm2 + tol and lhs <= eq16 + tol
    return EnergyCheck(lhs, thm2, eq16, split.h, split.boundary_size, float(trunc), bool(ok),
                       {"n_crossing": split.n_crossing, "boundary_norm": split.boundary_norm,
                        "norm_check": split.norm_check, "E0": E0, "E_M": EM})


def commutator_identity(sd: SchmidtData, H: LocalHamiltonian, M: int) -> complex:
    """``<psi| P_M [H_A, P_M] |psi>``, which vanishes because ``[rho_A, P_M] = 0``."""
    A = sd.region
    split = split_hamiltonian(H, A)
    relabel = {s: i for i, s in enumerate(A.sites)}
    local = [(tuple(relabel[s] for s in sup), h) for sup, h in split.inside]
    if not local:
        return 0j
    HA = terms_to_sparse(local, len(A), sd.d)
    P = sd.projector(M)
    mat = _as_matrix(sd.state, A)
    PM = P @ mat
    # <psi|P H_A P|psi> - <psi|P P H_A|psi>
    return complex(np.vdot(PM, HA @ PM) - np.vdot(PM, P @ (HA @ mat)))


def holographic_purification(state: PureState, A: Region, epsilon: float, k="from-state"):
    """Compress the complement of ``A`` onto its own thickened boundary.

    The compressed complement boundary together with ``A`` is a purification
    of ``rho_A`` up to error ``epsilon``.  Returns ``(plan, U, recovery)``
    for the region ``A^c``.
    """
    Ac = A.complement()
    sd = schmidt_decompose(state, Ac)
    plan = plan_compression(sd, epsilon, k=k)
    U = build_compression_unitary(sd, plan)
    return plan, U, compress_and_recover(state, plan, U)
