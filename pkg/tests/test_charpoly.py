import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import golden_spectrum
from nhaah.chain import chain_scaled_residual, solve_chain_spectrum
from nhaah.charpoly import (SpectrumMethod, charpoly_scaled, check_simple, determinant_oracle, eigenpairs,
                            eigenvector_pair, match_spectra, newton_ratio, pole_table, root_differences,
                            root_identity_check, solve_spectrum)
from nhaah.errors import DegenerateDerivativeError, DomainError, MultiplicityError, NearPoleError
from nhaah.lattice import LatticeConfig, build_momentum_space, build_real_space, dual_potentials

TOY = LatticeConfig(J=1, V0=1, p=1, q=2)


def test_pole_table_matches_dual_potential():
    for q in (5, 55, 144):
        c = LatticeConfig.golden(q, V0=1)
        tab = pole_table(c)
        assert np.array_equal(tab.W, dual_potentials(c))
        assert np.allclose(tab.diff, tab.W[:, None] - tab.W[None, :], atol=1e-14)
        # exact zeros where poles coincide
        same = np.abs(tab.W[:, None] - tab.W[None, :]) < 1e-13
        assert np.all(tab.diff[same] == 0)


def test_charpoly_toy_values():
    r, s = charpoly_scaled(0, TOY)
    assert r == pytest.approx(-4)
    assert s == 0
    with pytest.raises(DegenerateDerivativeError):
        newton_ratio(0, TOY)


def test_charpoly_pole_and_domain():
    val = charpoly_scaled(2.0, TOY)
    assert val.r == 0 and val.pole_index is not None
    with pytest.raises(NearPoleError):
        newton_ratio(2.0, TOY)
    with pytest.raises(DomainError):
        charpoly_scaled(1.0, LatticeConfig(J=1, V0=0, p=1, q=2))


def test_charpoly_grows_at_infinity():
    c = LatticeConfig.golden(89, V0=1.5)
    mags = [abs(charpoly_scaled(R * np.exp(0.3j), c).r) for R in (10, 100, 1000)]
    assert mags[0] < mags[1] < mags[2] and mags[2] > 1e100


def test_charpoly_at_root():
    c, sp = golden_spectrum(144, 1.5)
    for E in sp.eigenvalues[::9]:
        assert abs(charpoly_scaled(E, c).r - 1) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_newton_ratio_vs_finite_difference(seed):
    rng = np.random.default_rng(seed)
    c = LatticeConfig.golden(21, V0=rng.uniform(0.3, 2))
    E = complex(rng.uniform(-3, 3), rng.uniform(0.2, 2))
    h = 1e-6 * abs(E)
    P = lambda z: determinant_oracle(z, c, "MomentumSpace")
    fd = P(E) / ((P(E + h) - P(E - h)) / (2 * h))
    assert abs(newton_ratio(E, c) - fd) <= 1e-5 * abs(fd)


def test_toy_spectrum_is_plus_minus_sqrt5():
    sp = solve_spectrum(TOY)
    assert np.allclose(np.sort(sp.eigenvalues.real), [-math.sqrt(5), math.sqrt(5)], atol=1e-14)
    assert np.max(np.abs(sp.eigenvalues.imag)) < 1e-14


def test_free_ring_short_circuit():
    c = LatticeConfig.golden(144, V0=0)
    sp = solve_spectrum(c)
    assert sp.method is SpectrumMethod.FREE_RING
    free = 2 * np.cos(2 * np.pi * np.arange(1, 145) / 144)
    assert match_spectra(sp.eigenvalues, free).max_distance < 1e-14


def test_metallic_spectrum_real_and_cosine():
    c, sp = golden_spectrum(144, 0.5)
    assert np.max(np.abs(sp.eigenvalues.imag)) < 1e-6
    free = 2 * np.cos(2 * np.pi * np.arange(1, 145) / 144)
    assert match_spectra(sp.eigenvalues, free).max_distance < 1e-4
    assert sp.residuals.max() <= 1e-10


@pytest.mark.parametrize("V0", [0.5, 0.95, 1.0, 1.5, 4.0])
def test_exact_finite_ring_roots(V0):
    # on a ring of L = q sites the roots are 2J cos(2 pi l / L - i h') with cosh(L h') = 1 + V0^L / 2
    c, sp = golden_spectrum(144, V0)
    L = 144
    h = math.acosh(1 + V0 ** L / 2) / L
    exact = 2 * np.cos(2 * np.pi * np.arange(1, L + 1) / L - 1j * h)
    exact = np.concatenate([exact, np.conj(exact)])
    m = match_spectra(np.concatenate([sp.eigenvalues, np.conj(sp.eigenvalues)]), exact, method="optimal")
    assert m.max_distance < 1e-8


def test_root_completeness_and_product():
    for V0 in (0.5, 1.5):
        c, sp = golden_spectrum(144, V0)
        W = pole_table(c).W
        assert abs(np.sum(sp.eigenvalues) - np.sum(W)) < 1e-8 * 144
        # W contains exact zeros, so P(0) = -V0^L
        assert np.any(W == 0)
        assert abs(np.sum(np.log(np.abs(sp.eigenvalues))) - 144 * math.log(V0)) < 1e-6


def test_product_invariant_nonzero_P0():
    c = LatticeConfig.golden(55, V0=1.3)
    sp = solve_spectrum(c)
    P0 = determinant_oracle(0.0, c, "MomentumSpace")
    assert abs(np.sum(np.log(np.abs(sp.eigenvalues))) - math.log(abs(P0))) < 1e-6


def test_oracle_agreement_and_isospectrality():
    for q, V0 in [(34, 0.7), (55, 1.5), (89, 1.0)]:
        c = LatticeConfig.golden(q, V0=V0)
        sp = solve_spectrum(c)
        real = build_real_space(c)
        assert chain_scaled_residual(real, sp.eigenvalues).max() < 1e-8
        rs = solve_chain_spectrum(real)
        ms = solve_chain_spectrum(build_momentum_space(c))
        assert match_spectra(rs.eigenvalues, ms.eigenvalues, method="optimal").max_distance < 1e-8
        assert match_spectra(sp.eigenvalues, rs.eigenvalues, method="optimal").max_distance < 1e-8


def test_determinant_oracle_examples():
    assert abs(determinant_oracle(2.0, LatticeConfig(J=1, V0=0, p=1, q=3))) < 1e-14
    rng = np.random.default_rng(3)
    for _ in range(5):
        c = LatticeConfig(J=1, V0=float(rng.uniform(0.2, 2)), p=int(rng.integers(1, 5)), q=5)
        roots = solve_spectrum(c).eigenvalues
        E = complex(rng.normal(), rng.normal())
        direct = np.prod(E - roots)
        assert abs(determinant_oracle(E, c) - direct) < 1e-8 * abs(direct)
        val = charpoly_scaled(E, c)
        mom = determinant_oracle(E, c, "MomentumSpace")
        assert abs(mom - c.V0 ** 5 * (val.r - 1)) < 1e-12 * abs(mom)


def test_root_identity_toy_and_large():
    assert root_identity_check(solve_spectrum(TOY), TOY) < 1e-14
    for V0 in (0.5, 1.5):
        c, sp = golden_spectrum(144, V0)
        assert root_identity_check(sp, c) < 1e-6
    c = LatticeConfig.golden(233, V0=1.2)
    assert root_identity_check(solve_spectrum(c), c) < 1e-6


def test_multiplicity_error_on_unanchored_duplicates():
    free = solve_spectrum(LatticeConfig(J=1, V0=0, p=1, q=3))
    with pytest.raises(MultiplicityError):
        check_simple(free)


def test_metallic_close_pairs_are_resolved():
    c, sp = golden_spectrum(144, 0.5)
    D = root_differences(sp, c)
    np.fill_diagonal(D, np.inf)
    closest = np.min(np.abs(D))
    assert 0 < closest < 1e-20  # split double poles, resolved only in anchored arithmetic
    assert not sp.multiplicity.any()


@pytest.mark.parametrize("V0", [0.5, 1.5, 4.0])
def test_eigenvector_residuals(V0):
    c, sp = golden_spectrum(144, V0)
    H = build_real_space(c).to_dense()
    M = build_momentum_space(c).to_dense()
    for pair in eigenpairs(sp, c):
        psi, phi = pair.psi.values, pair.phi.values
        assert abs(np.linalg.norm(psi) - 1) < 1e-12 and abs(np.linalg.norm(phi) - 1) < 1e-12
        assert np.linalg.norm(H @ psi - pair.energy * psi) < 1e-8
        assert np.linalg.norm(M @ phi - pair.energy * phi) < 1e-8
        assert 1 <= pair.pr_real <= 144 and 1 <= pair.pr_momentum <= 144


def test_participation_ratio_phases():
    c, sp = golden_spectrum(144, 1.5)
    pr = eigenpairs(sp, c)
    assert np.median([p.pr_real for p in pr]) < 10 and np.median([p.pr_momentum for p in pr]) > 36
    c, sp = golden_spectrum(144, 0.5)
    pr = eigenpairs(sp, c)
    assert np.median([p.pr_real for p in pr]) > 36 and np.median([p.pr_momentum for p in pr]) < 10


def test_eigenvector_near_pole_error():
    c = LatticeConfig.golden(21, V0=1.0)
    W = pole_table(c).W
    # an energy sitting exactly on two distinct poles cannot seed the recursion
    dup = [i for i in range(21) for j in range(i) if W[i] == W[j]]
    assert dup
    with pytest.raises(NearPoleError):
        eigenvector_pair(W[dup[0]], c)


def test_determinism_bit_identical():
    c = LatticeConfig.golden(89, V0=1.3, jitter_seed=7)
    a, b = solve_spectrum(c), solve_spectrum(c)
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    other = solve_spectrum(c.replace(jitter_seed=8))
    assert match_spectra(a.eigenvalues, other.eigenvalues).max_distance < 1e-12


def test_obc_routes_to_determinant_solver():
    c = LatticeConfig(J=1, V0=1.5, p=13, q=21, L=21, boundary="OBC")
    sp = solve_spectrum(c)
    assert sp.method is SpectrumMethod.DETERMINANT_ORACLE
    dense = np.linalg.eigvals(build_real_space(c).to_dense())
    assert match_spectra(sp.eigenvalues, dense, method="optimal").max_distance < 1e-8


def test_match_spectra_greedy_vs_optimal():
    a = np.array([0, 1, 2.1])
    b = np.array([2, 0.05, 1.2])
    g = match_spectra(a, b)
    o = match_spectra(a, b, method="optimal")
    assert g.pairs == o.pairs == [(0, 1), (1, 2), (2, 0)]
    assert g.max_distance == pytest.approx(0.2)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([(1, 3), (2, 5), (3, 8), (5, 13), (8, 21)]), st.floats(0.1, 3.0), st.integers(0, 50))
def test_property_sum_of_roots(pq, V0, seed):
    c = LatticeConfig(J=1, V0=V0, p=pq[0], q=pq[1], jitter_seed=seed)
    sp = solve_spectrum(c)
    assert len(sp) == c.L
    assert abs(np.sum(sp.eigenvalues) - np.sum(pole_table(c).W)) < 1e-8 * c.L
    assert abs(np.sum(sp.eigenvalues).imag) < 1e-10
    assert sp.residuals.max() <= 1e-10
