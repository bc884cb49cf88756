import math

import numpy as np
import pytest

from holocompress.gaussian import (
    CovarianceMatrix,
    GaussianCapacityError,
    HarmonicModel,
    decay_fit,
    decay_profile,
    gaussian_overlap,
    gaussian_schmidt_normal_form,
    ground_covariance,
    offdiagonal_norm_bound,
    symplectic_eigenvalues,
    theorem3_pipeline,
    truncate_normal_form,
    two_mode_squeezed_covariance,
    xi_truncate,
)
from holocompress.gaussian.states import fock_two_mode_squeezed
from holocompress.gaussian.symplectic import is_symplectic, random_covariance
from holocompress.lattice import Lattice, Region

EPSILONS = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]


@pytest.fixture(scope="module")
def chain100():
    model = HarmonicModel.chain(100, 1.0, 1.0)
    return model, ground_covariance(model), Region(model.lattice, range(50))


@pytest.fixture(scope="module")
def chain200():
    model = HarmonicModel.chain(200, 1.0, 1.0)
    gamma = ground_covariance(model)
    A = Region(model.lattice, range(60, 140))
    return model, gamma, A, decay_fit(gamma, A), gaussian_schmidt_normal_form(gamma, A)


def brute_xi_truncate(gamma, A, l):
    g = gamma.matrix.copy()
    D = A.lattice.distance_matrix
    for i in A.sites:
        for j in np.setdiff1d(gamma.sites, A.sites):
            if D[i, j] > l:
                g[2 * i:2 * i + 2, 2 * j:2 * j + 2] = 0
                g[2 * j:2 * j + 2, 2 * i:2 * i + 2] = 0
    return g


@pytest.mark.parametrize("l", [1, 2, 5, 30])
def test_xi_truncate_matches_brute_force(l):
    model = HarmonicModel.grid(5, 6, mass=0.9)
    gamma = ground_covariance(model)
    A = model.lattice.box([1, 1], [4, 4])
    g_leq, trimmed = xi_truncate(gamma, A, l)
    np.testing.assert_array_equal(g_leq.matrix, brute_xi_truncate(gamma, A, l))
    # trimmed state: no correlations remain between A and the kept complement
    kept_ac = np.setdiff1d(trimmed.sites, A.sites)
    assert not trimmed.block(A.sites, kept_ac).any()
    near = A.lattice.distance_matrix[np.ix_(A.sites, kept_ac)].min(axis=0) if kept_ac.size else []
    assert np.all(np.asarray(near) > l)


def test_xi_truncate_large_width_is_identity(chain100):
    _, gamma, A = chain100
    g_leq, trimmed = xi_truncate(gamma, A, 200)
    np.testing.assert_array_equal(g_leq.matrix, gamma.matrix)
    assert trimmed.n_modes == 50


def test_decay_profile_matches_brute_force():
    model = HarmonicModel.chain(20, 1.0)
    gamma = ground_covariance(model)
    A = Region(model.lattice, range(8))
    dist, maxima = decay_profile(gamma, A)
    for l, m in zip(dist, maxima):
        want = max(np.abs(gamma.matrix[2 * i:2 * i + 2, 2 * j:2 * j + 2]).max()
                   for i in range(8) for j in range(8, 20) if j - i == l)
        assert m == want
    np.testing.assert_array_equal(dist, np.arange(1, 20))


def test_decay_fit_gapped_chain(chain100):
    _, gamma, A = chain100
    fit = decay_fit(gamma, A)
    assert fit.accepted and fit.c2 > 0 and fit.r_squared >= 0.95
    u = fit.usable
    assert np.all(fit.maxima[u] <= fit.envelope(fit.distances[u]) * (1 + 1e-12))


def test_decay_rate_grows_with_mass():
    rates = []
    for mass in (0.5, 1.0, 4.0):
        model = HarmonicModel.chain(100, mass)
        rates.append(decay_fit(ground_covariance(model), Region(model.lattice, range(50))).c2)
    assert rates[0] < rates[1] < rates[2]


def test_decay_fit_flags_massless_chain():
    model = HarmonicModel.chain(100, 0.0)
    fit = decay_fit(ground_covariance(model), Region(model.lattice, range(50)))
    assert not fit.accepted and "gapless" in fit.reason


@pytest.mark.parametrize("l", range(2, 13))
def test_offdiagonal_norm_bound(chain100, l):
    _, gamma, A = chain100
    fit = decay_fit(gamma, A)
    actual, bound = offdiagonal_norm_bound(gamma, A, l, fit.c1, fit.c2, shell_ls=range(2, 13))
    assert actual <= bound


def test_offdiagonal_norm_decays_at_fitted_rate(chain100):
    _, gamma, A = chain100
    fit = decay_fit(gamma, A)
    ls = np.arange(2, 13)
    actual = [offdiagonal_norm_bound(gamma, A, l, fit.c1, fit.c2)[0] for l in ls]
    slope = np.polyfit(ls, np.log(actual), 1)[0]
    assert slope <= -fit.c2 + 0.1


def check_normal_form(nf, gamma):
    perm = nf.permutation
    g = gamma.matrix[np.ix_(perm, perm)]
    T = nf.transform
    assert is_symplectic(nf.S_A, 1e-8) and is_symplectic(nf.S_Ac, 1e-8)
    np.testing.assert_allclose(T @ g @ T.T, np.block([[nf.D_A, nf.E], [nf.E.T, nf.D_Ac]]), atol=1e-6)
    paired = slice(0, nf.n_pairs)
    np.testing.assert_allclose(nf.mu[paired] ** 2, nf.d[paired] ** 2 - 1, rtol=1e-6, atol=1e-10)


def test_normal_form_of_two_mode_squeezed_state():
    gamma = CovarianceMatrix(two_mode_squeezed_covariance(2.5), [0, 1], Lattice.chain(2))
    nf = gaussian_schmidt_normal_form(gamma, Region(Lattice.chain(2), [0]))
    assert nf.n_pairs == 1
    assert nf.d[0] == pytest.approx(2.5) and nf.mu[0] == pytest.approx(math.sqrt(2.5**2 - 1))
    check_normal_form(nf, gamma)


@pytest.mark.parametrize("mass", [0.3, 1.0, 4.0])
def test_normal_form_chain(mass):
    model = HarmonicModel.chain(30, mass)
    gamma = ground_covariance(model)
    A = Region(model.lattice, [2, 3, 4, 10, 11, 20])
    nf = gaussian_schmidt_normal_form(gamma, A)
    check_normal_form(nf, gamma)
    np.testing.assert_allclose(nf.d, symplectic_eigenvalues(gamma.block(A.sites)), atol=1e-9)
    Ac = np.setdiff1d(gamma.sites, A.sites)
    np.testing.assert_allclose(np.sort(nf.d_Ac)[::-1], symplectic_eigenvalues(gamma.block(Ac)), atol=1e-6)


def test_normal_form_grid():
    model = HarmonicModel.grid(10, 10)
    gamma = ground_covariance(model)
    nf = gaussian_schmidt_normal_form(gamma, model.lattice.box([3, 3], [7, 7]))
    check_normal_form(nf, gamma)
    assert nf.residual <= 1e-6


def test_normal_form_random_pure_state():
    rng = np.random.default_rng(3)
    lat = Lattice.chain(8)
    gamma = CovarianceMatrix(random_covariance(8, rng, pure=True, max_squeezing=0.5), np.arange(8), lat)
    nf = gaussian_schmidt_normal_form(gamma, Region(lat, [0, 5, 6]))
    check_normal_form(nf, gamma)


def test_normal_form_rejects_mixed_state():
    lat = Lattice.chain(2)
    with pytest.raises(ValueError):
        gaussian_schmidt_normal_form(CovarianceMatrix(2 * np.eye(4), [0, 1], lat), Region(lat, [0]))


@pytest.mark.parametrize("M", [0, 1, 2, 3, 6])
def test_truncation_fidelity(M):
    model = HarmonicModel.chain(40, 0.5)
    gamma = ground_covariance(model)
    A = Region(model.lattice, range(6, 12))
    nf = gaussian_schmidt_normal_form(gamma, A)
    tr = truncate_normal_form(nf, M)
    assert tr.gamma_M.is_pure()
    assert abs(tr.fidelity - tr.fidelity_product) <= 1e-10
    assert tr.lemma4_holds
    assert tr.fidelity_product >= tr.fidelity_paper_expr >= tr.lemma4_bound - 1e-15
    d_kept = symplectic_eigenvalues(tr.gamma_M.block(A.sites))
    np.testing.assert_allclose(d_kept[:M], nf.d[:M], atol=1e-6)
    np.testing.assert_allclose(d_kept[M:], 1, atol=1e-6)
    if M == 6:
        assert tr.fidelity == pytest.approx(1, abs=1e-10)
    with pytest.raises(ValueError):
        truncate_normal_form(nf, 7)


@pytest.mark.parametrize("r", [0.2, 0.5, 0.9])
def test_single_pair_oracle(r):
    d = math.cosh(2 * r)
    lat = Lattice.chain(2)
    gamma = CovarianceMatrix(two_mode_squeezed_covariance(d), [0, 1], lat)
    tr = truncate_normal_form(gaussian_schmidt_normal_form(gamma, Region(lat, [0])), 0)
    np.testing.assert_allclose(tr.gamma_M.matrix, np.eye(4), atol=1e-12)
    fock = abs(fock_two_mode_squeezed(r, 60)[0, 0]) ** 2
    assert abs(tr.fidelity - 2 / (d + 1)) <= 1e-10
    assert abs(tr.fidelity - fock) <= 1e-10
    # the squared expression undershoots the true overlap
    assert tr.fidelity_paper_expr < tr.fidelity - 1e-3


def test_truncation_fidelity_matches_direct_overlap(chain200):
    model, gamma, A, fit, nf = chain200
    for M in range(0, 8):
        tr = truncate_normal_form(nf, M)
        assert tr.fidelity == pytest.approx(gaussian_overlap(gamma, tr.gamma_M), abs=1e-14)
        assert tr.fidelity >= tr.lemma4_bound - 1e-10


def test_theorem3_sweep(chain200):
    model, gamma, A, fit, nf = chain200
    reports = [theorem3_pipeline(model, A, e, gamma=gamma, fit=fit, nf=nf) for e in EPSILONS]
    for rep in reports:
        assert rep.ok
        assert rep.M_min <= rep.M
        if rep.M >= nf.n_pairs:
            assert rep.bulk_residual <= 1e-6
    l_used = np.array([r.l_used for r in reports])
    assert np.all(np.diff(l_used) >= 0)
    x = np.log(1 / np.array(EPSILONS))
    assert np.corrcoef(x, l_used)[0, 1] ** 2 >= 0.95
    row = reports[2].row()
    assert set(row) >= {"A_size", "boundary_size", "c1", "c2", "L_eps", "M", "fidelity_oracle", "epsilon", "l_used"}


def test_theorem3_compressed_bulk_is_vacuum(chain200):
    model, gamma, A, fit, nf = chain200
    rep = theorem3_pipeline(model, A, 1e-3, gamma=gamma, fit=fit, nf=nf)
    assert rep.M >= nf.n_pairs
    assert rep.bulk_residual <= 1e-6
    assert is_symplectic(rep.compression_symplectic, 1e-8)


def test_theorem3_grid():
    model = HarmonicModel.grid(10, 10)
    rep = theorem3_pipeline(model, model.lattice.box([2, 2], [8, 8]), 1e-3)
    assert rep.ok and rep.boundary_size == 20


def test_theorem3_errors(chain100):
    model, gamma, A = chain100
    with pytest.raises(ValueError):
        theorem3_pipeline(model, A, 0.0)
    with pytest.raises(ValueError):
        theorem3_pipeline(model, Region(model.lattice, []), 0.1)
    massless = HarmonicModel.chain(100, 0.0)
    with pytest.raises(GaussianCapacityError):
        theorem3_pipeline(massless, Region(massless.lattice, range(50)), 0.1)
