from fractions import Fraction

import numpy as np
import pytest

from loopvertex.errors import OutOfRangeError, VarianceBlowupError
from loopvertex.matrixcore import EnsembleSpec, covariances
from loopvertex.partition import (
    free_energy,
    gaussian_moment_exact,
    z_direct,
    z_lvr,
)
from loopvertex.scalarmaps import Coupling


def test_moment_oracle_trivial_cases():
    for beta in (1, 2):
        for n in (1, 2, 3):
            assert gaussian_moment_exact(n, 0, beta) == n


def test_moment_oracle_matches_covariance_wick():
    # E[Tr H^2] = N^2 * straight + N * twist, one Wick pair
    for beta in (1, 2):
        for n in (1, 2, 4):
            straight, twist = covariances(EnsembleSpec(N=n, beta=beta))
            got = gaussian_moment_exact(n, 1, beta)
            assert got == Fraction(n * n * Fraction(straight).limit_denominator()
                                   + n * Fraction(twist).limit_denominator())


def test_moment_oracle_frozen_values():
    assert gaussian_moment_exact(1, 2, 2) == Fraction(3, 4)
    assert gaussian_moment_exact(2, 2, 2) == Fraction(9, 8)
    assert gaussian_moment_exact(3, 2, 2) == Fraction(19, 12)
    assert gaussian_moment_exact(2, 2, 1) == Fraction(23, 32)
    assert gaussian_moment_exact(3, 3, 2) == Fraction(55, 24)


def test_moment_oracle_matches_mc():
    from loopvertex.matrixcore import sample_gaussian_batch

    rng = np.random.default_rng(9)
    for beta in (1, 2):
        spec = EnsembleSpec(N=3, beta=beta)
        h = sample_gaussian_batch(spec, rng, 200000)
        h2 = np.einsum("bij,bjk->bik", h, h)
        tr4 = np.einsum("bij,bji->b", h2, h2).real.mean()
        assert tr4 == pytest.approx(float(gaussian_moment_exact(3, 2, beta)), rel=0.03)


def test_moment_oracle_range_guard():
    with pytest.raises(OutOfRangeError):
        gaussian_moment_exact(1, 99)
    with pytest.raises(OutOfRangeError):
        gaussian_moment_exact(99, 1)


def test_z_direct_scalar_reference():
    # N = 1: a single one-dimensional integral
    c = Coupling(lam=0.2, p=2)
    spec = EnsembleSpec(N=1, beta=2)
    est = z_direct(c, spec)
    straight, twist = covariances(spec)
    nodes, wts = np.polynomial.hermite_e.hermegauss(201)
    xs = nodes * np.sqrt(straight + twist)
    ref = np.sum(wts * np.exp(-0.2 * xs**4)) / np.sum(wts)
    assert est.value == pytest.approx(ref, rel=1e-8)
    assert est.error <= 1e-6


def test_z_zero_coupling():
    spec = EnsembleSpec(N=2, beta=2)
    assert z_direct(Coupling(lam=0.0, p=2), spec).value == 1.0
    assert z_lvr(Coupling(lam=0.0, p=2), spec).value == 1.0


@pytest.mark.parametrize("beta", [1, 2])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_change_of_variables_identity_quadrature(beta, n):
    c = Coupling(lam=0.08, p=2)
    spec = EnsembleSpec(N=n, beta=beta)
    a = z_direct(c, spec)
    b = z_lvr(c, spec)
    assert abs(a.value - b.value) / abs(a.value) <= 1e-4


def test_change_of_variables_identity_complex_coupling():
    c = Coupling(lam=0.05 * np.exp(1.8j), p=3)
    spec = EnsembleSpec(N=2, beta=2)
    a = z_direct(c, spec)
    b = z_lvr(c, spec)
    assert abs(a.value - b.value) / abs(a.value) <= 1e-4


def test_mc_agrees_with_quadrature():
    c = Coupling(lam=0.1, p=2)
    spec = EnsembleSpec(N=2, beta=2)
    ref = z_direct(c, spec).value
    est = z_direct(c, spec, method="monte_carlo", n_samples=200000, seed=1)
    assert abs(est.value - ref) <= 4 * est.error
    est_l = z_lvr(c, spec, method="monte_carlo", n_samples=50000, seed=2)
    assert abs(est_l.value - ref) <= 4 * est_l.error


def test_mc_large_n_runs():
    c = Coupling(lam=0.05, p=2)
    spec = EnsembleSpec(N=6, beta=2)
    est = z_direct(c, spec, method="monte_carlo", n_samples=40000, seed=3)
    assert est.error < 0.05 * abs(est.value)


def test_small_coupling_slope_matches_moment():
    # Z = 1 - lam * N * E[Tr H^2p] + O(lam^2)
    spec = EnsembleSpec(N=1, beta=2)
    moment = float(gaussian_moment_exact(1, 2, 2))  # 3/4
    lam = 1e-5
    z = z_direct(Coupling(lam=lam, p=2), spec).value
    assert (1.0 - z.real) / lam == pytest.approx(moment, rel=1e-3)
    spec3 = EnsembleSpec(N=2, beta=1)
    m3 = float(gaussian_moment_exact(2, 3, 1))
    z3 = z_direct(Coupling(lam=lam, p=3), spec3).value
    assert (1.0 - z3.real) / lam == pytest.approx(2 * m3, rel=1e-3)


def test_free_energy_value_and_guard():
    c = Coupling(lam=0.2, p=2)
    spec = EnsembleSpec(N=1, beta=2)
    f = free_energy(c, spec)
    assert f == pytest.approx(complex(np.log(z_direct(c, spec).value)), rel=1e-10)
    with pytest.raises(VarianceBlowupError):
        free_energy(
            Coupling(lam=0.45, p=3), EnsembleSpec(N=5, beta=2),
            method="monte_carlo", n_samples=200, seed=0,
        )
