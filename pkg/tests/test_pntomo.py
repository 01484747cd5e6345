import numpy as np
import pytest

from phasetomo import cstomo, fock, pntomo
from phasetomo.errors import ConvergenceError, SpecError


def test_tomogram_at_origin_is_level_population():
    rho = fock.build_state("fock", 3, 10, 1e-10)
    for n in range(8):
        got = pntomo.pn_tomogram(rho, n, 0.0)
        assert abs(got - (1.0 if n == 3 else 0.0)) < 1e-15


def test_tomogram_vacuum_poisson_oracle():
    # t_n(z) of the vacuum is |<n|D(z)|0>|^2 = e^{-u} u^n / n!
    vac = fock.build_state("fock", 0, 40, 1e-10)
    z = 1.1 - 0.6j
    u = abs(z) ** 2
    from scipy.special import gammaln
    for n in (0, 2, 7):
        got = pntomo.pn_tomogram(vac, n, z)
        want = np.exp(-u + n * np.log(u) - gammaln(n + 1))
        assert abs(got - want) < 1e-13


def test_level_completeness():
    # sum_n t_n(z) = Tr rho once the level cutoff clears the displaced support
    rho = fock.build_state("fock", 3, 30, 1e-10)
    grid = cstomo.PhaseGrid.polar(5.0, 24, 4)
    tom = pntomo.pn_tomogram_grid(rho, 120, grid)
    sums = tom.values.sum(axis=0)
    assert np.abs(sums - 1.0).max() < 1e-10


def test_gram_diagonal_at_origin():
    # G(n, 0) = (4/(1-lam^2)) beta^n gamma^{nhat}, diagonal by construction
    params = pntomo.PNKernelParams(1 / 3)
    for n in (0, 2):
        G = pntomo.pn_gram(n, 0.0, params, 8)
        want = (4 / (1 - params.lam ** 2)) * params.beta ** n \
            * params.gamma ** np.arange(9)
        np.testing.assert_allclose(np.diag(G.entries), want, atol=1e-14)
        assert np.abs(G.entries - np.diag(np.diag(G.entries))).max() == 0.0


def test_params_domain_guard():
    with pytest.raises(SpecError):
        pntomo.PNKernelParams(1.2)
    with pytest.raises(SpecError):
        pntomo.PNKernelParams(0.0)


def test_duality_table_stable_lambda():
    params = pntomo.PNKernelParams(0.3)
    grid = pntomo.default_pn_grid(5.0, 2)
    n_max = pntomo.auto_n_max(2, 5.0, params)
    resid = pntomo.pn_duality_table(params, n_max, grid, 2)
    assert resid.max() < 1e-5


def test_reconstruct_vacuum_roundtrip():
    params = pntomo.PNKernelParams(0.3)
    vac = fock.build_state("fock", 0, 6, 1e-10)
    grid = pntomo.default_pn_grid(5.0, 4)
    n_max = pntomo.auto_n_max(4, 5.0, params)
    tom = pntomo.pn_tomogram_grid(vac, n_max, grid)
    rec = pntomo.pn_reconstruct(tom, params, 4)
    want = np.zeros((5, 5))
    want[0, 0] = 1.0
    assert np.abs(rec.entries - want).max() < 1e-6


def test_reconstruct_random_density_roundtrip():
    rng = np.random.default_rng(2)
    d = 5
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho_m = G @ G.conj().T
    rho_m /= np.trace(rho_m).real
    rho = fock.FockOperator(d, rho_m)
    params = pntomo.PNKernelParams(0.3)
    grid = pntomo.default_pn_grid(5.0, d - 1)
    n_max = pntomo.auto_n_max(d - 1, 5.0, params)
    tom = pntomo.pn_tomogram_grid(rho, n_max, grid)
    rec = pntomo.pn_reconstruct(tom, params, d - 1)
    assert np.abs(rec.entries - rho_m).max() < 1e-5


def test_reconstruct_refuses_insufficient_levels():
    vac = fock.build_state("fock", 0, 6, 1e-10)
    grid = pntomo.default_pn_grid(5.0, 4)
    tom = pntomo.pn_tomogram_grid(vac, 12, grid)
    with pytest.raises(ConvergenceError):
        pntomo.pn_reconstruct(tom, pntomo.PNKernelParams(0.3), 4)


def test_reconstruct_refuses_slow_level_decay():
    # thermal level profile decays too slowly for the beta^n amplification
    rho = fock.build_state("thermal", 1.0, 60, 1e-10)
    params = pntomo.PNKernelParams(0.3)
    grid = pntomo.default_pn_grid(5.0, 2)
    n_max = pntomo.auto_n_max(2, 5.0, params)
    tom = pntomo.pn_tomogram_grid(rho, n_max, grid)
    with pytest.raises(ConvergenceError):
        pntomo.pn_reconstruct(tom, params, 2)


def test_auto_n_max_pinned_value():
    assert pntomo.auto_n_max(4, 5.0, pntomo.PNKernelParams(0.3)) == 169


def test_position_element_against_fock_sum():
    # <x|G(n,z)|y> closed form vs the spectral sum over displaced states
    rng = np.random.default_rng(9)
    params = pntomo.PNKernelParams(0.3)
    pref = 4 / (1 - params.lam ** 2)
    worst = 0.0
    for _ in range(8):
        n = int(rng.integers(0, 4))
        z = rng.normal(scale=0.6) + 1j * rng.normal(scale=0.6)
        x, y = rng.normal(scale=1.2, size=2)
        ssum = sum(
            params.gamma ** k
            * fock.displaced_number_wavefunction(k, z, x)
            * np.conj(fock.displaced_number_wavefunction(k, z, y))
            for k in range(60)
        )
        want = pref * params.beta ** n * ssum
        got = pntomo.pn_gram_position_element(n, z, params, x, y)
        worst = max(worst, abs(got - want))
    assert worst < 1e-8


def test_mehler_closed_form_basics():
    # zeta -> 0 collapses to the n = 0 term
    assert abs(pntomo.mehler(0.7, -0.2, 0.0) - 1.0) < 1e-15
    # symmetry in x <-> y
    a = pntomo.mehler(1.1, 0.4, 0.35 + 0.2j)
    b = pntomo.mehler(0.4, 1.1, 0.35 + 0.2j)
    assert abs(a - b) < 1e-14


def test_mehler_series_matches_closed_inside_disc():
    for x, y, zeta in ((0.5, -0.3, 0.4), (1.5, 1.0, -0.7), (2.0, 2.0, 0.55)):
        c = pntomo.mehler(x, y, zeta)
        s = pntomo.mehler(x, y, zeta, mode="series", n_max=300)
        assert abs(c - s) < 1e-12 * max(1.0, abs(c))


def test_mehler_near_unit_modulus():
    # |zeta| = 0.99 on the imaginary axis needs a deep but convergent series
    c = pntomo.mehler(0.6, 0.8, 0.99j)
    s = pntomo.mehler(0.6, 0.8, 0.99j, mode="series", n_max=2000)
    assert abs(c - s) < 1e-6 * abs(c)


def test_mehler_against_raw_polynomial_sum():
    # independent route: scipy Hermite polynomials, bare (zeta/2)^n H H / n! sum
    from scipy.special import eval_hermite, gammaln
    for x, y, zeta in ((0.9, 0.5, 0.3), (1.2, -0.8, 0.25), (0.0, 1.0, -0.45)):
        n = np.arange(61)
        terms = (zeta / 2) ** n * eval_hermite(n, x) * eval_hermite(n, y) \
            * np.exp(-gammaln(n + 1))
        want = terms.sum()
        got = pntomo.mehler(x, y, zeta)
        assert abs(got - want) < 1e-12 * max(1.0, abs(want))
