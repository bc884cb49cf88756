import math

import numpy as np
import pytest

from holocompress.lattice import Lattice, Region
from holocompress.spin_models import PAULI, build_heisenberg, build_tfim, embed_operator, ground_state
from holocompress.spin_compression import (
    PureState,
    RegionTooSmall,
    apply_on_region,
    boundary_represent,
    build_compression_unitary,
    commutator_identity,
    compress_and_recover,
    correlation_compare,
    energy_check,
    ghz_state,
    holographic_purification,
    plan_compression,
    product_state,
    random_state,
    region_operator,
    schmidt_decompose,
    truncate_state,
)


@pytest.fixture(scope="module")
def tfim12():
    H = build_tfim(12, 2.0)
    gs = ground_state(H)
    psi = PureState(gs.state, H.lattice)
    A = Region(H.lattice, range(6))
    return H, gs, psi, A, schmidt_decompose(psi, A)


def test_pure_state_validation():
    lat = Lattice.chain(2)
    with pytest.raises(ValueError):
        PureState(np.ones(3), lat)
    with pytest.raises(ValueError):
        PureState(np.ones(4), lat)
    assert PureState(np.array([0, 0, 1, 0]), lat).configuration(2) == (1, 0)


def test_schmidt_exact_cases():
    lat = Lattice.chain(6)
    A = Region(lat, range(3))
    prod = schmidt_decompose(product_state(lat, [1, 1]), A)
    assert prod.entropy == pytest.approx(0, abs=1e-12) and prod.rank == 1
    ghz = schmidt_decompose(ghz_state(lat), A)
    assert ghz.entropy == pytest.approx(1) and ghz.rank == 2


@pytest.mark.parametrize("sites", [[0, 1, 2], [1, 4], [0, 2, 3, 5]])
def test_schmidt_reconstructs_state(sites):
    lat = Lattice.chain(7)
    psi = random_state(lat, np.random.default_rng(3))
    sd = schmidt_decompose(psi, Region(lat, sites))
    np.testing.assert_allclose(sd.reconstruct(), psi.amplitudes, atol=1e-12)
    assert sd.weights.sum() == pytest.approx(1)
    np.testing.assert_allclose(sd.left.conj().T @ sd.left, np.eye(sd.n_vectors), atol=1e-12)


def test_schmidt_weights_match_reduced_density_matrix():
    lat = Lattice.chain(6)
    psi = random_state(lat, np.random.default_rng(0))
    A = Region(lat, [0, 3])
    t = psi.tensor()
    rest = [1, 2, 4, 5]
    m = np.transpose(t, [0, 3] + rest).reshape(4, 16)
    ev = np.sort(np.linalg.eigvalsh(m @ m.conj().T))[::-1]
    np.testing.assert_allclose(schmidt_decompose(psi, A).weights, ev, atol=1e-12)


@pytest.mark.parametrize("n", [6, 9, 12])
def test_fidelity_identity_random_states(n):
    lat = Lattice.chain(n)
    rng = np.random.default_rng(n)
    for trial in range(3):
        psi = random_state(lat, rng)
        A = Region(lat, rng.choice(n, size=n // 2, replace=False))
        sd = schmidt_decompose(psi, A)
        for M in (1, 2, 5, sd.n_vectors):
            _, ov = truncate_state(sd, M)
            assert abs(ov - sd.weights[:M].sum()) <= 1e-10


def test_fidelity_identity_ground_states():
    for H in (build_tfim(14, 1.0), build_heisenberg(14)):
        psi = PureState(ground_state(H).state, H.lattice)
        sd = schmidt_decompose(psi, Region(H.lattice, range(7)))
        for M in (1, 2, 4, 8):
            assert abs(truncate_state(sd, M)[1] - sd.weights[:M].sum()) <= 1e-10


def test_truncate_state_domain(tfim12):
    sd = tfim12[4]
    with pytest.raises(ValueError):
        truncate_state(sd, 0)
    assert truncate_state(sd, 10**6)[1] == pytest.approx(1)


def test_apply_on_region_matches_global_embedding():
    lat = Lattice.chain(6)
    rng = np.random.default_rng(1)
    psi = random_state(lat, rng)
    A = Region(lat, [1, 3, 4])
    X = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    U, _ = np.linalg.qr(X)
    want = embed_operator(U, A.sites, 6, 2) @ psi.amplitudes
    np.testing.assert_allclose(apply_on_region(U, psi, A).amplitudes, want, atol=1e-12)
    with pytest.raises(ValueError):
        apply_on_region(U, psi)


def test_plan_ghz():
    lat = Lattice.chain(8)
    sd = schmidt_decompose(ghz_state(lat), Region(lat, range(4)))
    plan = plan_compression(sd, 0.5)
    # k = S / |∂_1 A| = 1, so the width must give at least 2 boundary sites
    assert plan.k == pytest.approx(1)
    assert plan.l == 2 and plan.M == 4 and plan.capped is False
    assert plan.guarantee
    assert len(plan.boundary) + len(plan.bulk) == 4


def test_plan_errors(tfim12):
    sd = tfim12[4]
    with pytest.raises(ValueError):
        plan_compression(sd, 0)
    with pytest.raises(ValueError):
        plan_compression(sd, 1.0)
    with pytest.raises(RegionTooSmall):
        plan_compression(sd, 0.01, k=5)
    with pytest.raises(ValueError):
        plan_compression(sd, 0.5, reference=np.ones(3))


@pytest.mark.parametrize("state_kind", ["ghz", "product"])
def test_exact_rank_states_recover_perfectly(state_kind):
    lat = Lattice.chain(10)
    psi = ghz_state(lat) if state_kind == "ghz" else product_state(lat, [1, 2])
    A = Region(lat, range(5))
    sd = schmidt_decompose(psi, A)
    for eps, l in ((0.5, None), (0.1, 1)):
        plan = plan_compression(sd, eps, l=l)
        U = build_compression_unitary(sd, plan)
        r = compress_and_recover(psi, plan, U)
        assert abs(r.fidelity - 1) <= 1e-10
        assert abs(r.chi_fidelity - 1) <= 1e-10


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1])
def test_tfim_compression(tfim12, eps):
    H, gs, psi, A, sd = tfim12
    plan = plan_compression(sd, eps)
    U = build_compression_unitary(sd, plan)
    assert U.unitarity_error() < 1e-12
    assert U.subspace_error() < 1e-12
    r = compress_and_recover(psi, plan, U)
    eta = 1 - sd.weights[: plan.M].sum()
    assert r.fidelity >= 1 - eps
    assert r.fidelity >= (1 - eta) ** 2 - 1e-12
    assert r.chi_fidelity == pytest.approx(1 - eta, abs=1e-12)
    assert r.reference_weight == pytest.approx(1 - eta, abs=1e-12)


def test_compression_with_custom_reference_and_basis(tfim12):
    H, gs, psi, A, sd = tfim12
    rng = np.random.default_rng(2)
    plan0 = plan_compression(sd, 0.1)
    nb, nbulk = len(plan0.boundary), len(plan0.bulk)
    B, _ = np.linalg.qr(rng.standard_normal((2**nb, 2**nb)) + 0j)
    ref = rng.standard_normal(2**nbulk)
    plan = plan_compression(sd, 0.1, reference=ref, boundary_basis=B)
    U = build_compression_unitary(sd, plan)
    r = compress_and_recover(psi, plan, U)
    r0 = compress_and_recover(psi, plan0, build_compression_unitary(sd, plan0))
    assert r.fidelity == pytest.approx(r0.fidelity, abs=1e-12)
    with pytest.raises(ValueError):
        plan_compression(sd, 0.1, boundary_basis=np.ones((2**nb, 2**nb)))


def test_compressed_bulk_is_reference(tfim12):
    H, gs, psi, A, sd = tfim12
    plan = plan_compression(sd, 0.1)
    U = build_compression_unitary(sd, plan)
    psi_M, _ = truncate_state(sd, plan.M)
    r = compress_and_recover(psi_M, plan, U)
    assert r.fidelity == pytest.approx(1, abs=1e-12)
    assert r.bulk_purity == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1])
def test_energy_bounds(tfim12, eps):
    H, gs, psi, A, sd = tfim12
    plan = plan_compression(sd, eps)
    psi_M, ov = truncate_state(sd, plan.M)
    for e in (eps, 1 - ov):
        chk = energy_check(psi, psi_M, H, A, e, energy=gs.energy)
        assert chk.ok
        assert chk.lhs <= chk.thm2_bound and chk.lhs <= chk.eq16_bound
        assert chk.info["norm_check"]
    with pytest.raises(ValueError):
        energy_check(psi, truncate_state(sd, 1)[0], H, A, 1e-9)


def test_commutator_identity_vanishes(tfim12):
    H, gs, psi, A, sd = tfim12
    for M in (1, 2, 3, 7, 64):
        assert abs(commutator_identity(sd, H, M)) <= 1e-9
    Hh = build_heisenberg(10)
    psi2 = PureState(ground_state(Hh).state, Hh.lattice)
    sd2 = schmidt_decompose(psi2, Region(Hh.lattice, [0, 1, 2, 7]))
    for M in (1, 4, 9):
        assert abs(commutator_identity(sd2, Hh, M)) <= 1e-9


def test_commutator_nonzero_for_generic_projector(tfim12):
    # sanity: the identity relies on P_M commuting with rho_A
    H, gs, psi, A, sd = tfim12
    rng = np.random.default_rng(0)
    V, _ = np.linalg.qr(rng.standard_normal((64, 64)) + 0j)
    scrambled = type(sd)(sd.region, sd.spectrum, V, sd.right, sd.entropy, sd.state)
    assert abs(commutator_identity(scrambled, H, 3)) > 1e-6


def test_boundary_representation_of_projector(tfim12):
    H, gs, psi, A, sd = tfim12
    plan = plan_compression(sd, 0.1)
    U = build_compression_unitary(sd, plan)
    P = sd.projector(plan.M)
    Xt, res = boundary_represent(P, U)
    assert res < 1e-12
    np.testing.assert_allclose(np.trace(Xt).real, plan.M, atol=1e-12)
    cmp = correlation_compare([P, P], U, sd)
    eta = 1 - sd.weights[: plan.M].sum()
    assert cmp.bulk_value.real == pytest.approx(1 - eta, abs=1e-12)
    assert cmp.difference <= cmp.error_bound


def test_correlation_rejects_noncommuting_operator(tfim12):
    H, gs, psi, A, sd = tfim12
    plan = plan_compression(sd, 0.1)
    U = build_compression_unitary(sd, plan)
    X = region_operator(PAULI["X"], [5], A)
    with pytest.raises(ValueError):
        correlation_compare([X], U, sd)
    with pytest.raises(ValueError):
        region_operator(PAULI["X"], [7], A)


def test_holographic_purification(tfim12):
    H, gs, psi, A, sd = tfim12
    plan, U, r = holographic_purification(psi, A, 0.1)
    assert plan.region == A.complement()
    assert r.fidelity >= 0.9
    sd_c = schmidt_decompose(psi, A.complement())
    np.testing.assert_allclose(sd_c.weights, sd.weights, atol=1e-12)


def test_dense_region_limit():
    lat = Lattice.chain(14)
    psi = product_state(lat)
    sd = schmidt_decompose(psi, Region(lat, range(13)))
    with pytest.raises(ValueError):
        build_compression_unitary(sd, plan_compression(sd, 0.5))


def test_random_states_satisfy_squared_recovery_bound():
    rng = np.random.default_rng(9)
    lat = Lattice.chain(10)
    for _ in range(5):
        psi = random_state(lat, rng)
        A = Region(lat, range(5))
        sd = schmidt_decompose(psi, A)
        plan = plan_compression(sd, 0.9, l=1)
        r = compress_and_recover(psi, plan, build_compression_unitary(sd, plan))
        eta = 1 - sd.weights[: plan.M].sum()
        assert r.fidelity >= (1 - eta) ** 2 - 1e-12
        assert math.isclose(r.chi_fidelity, 1 - eta, abs_tol=1e-12)
