import numpy as np
import pytest

from loopvertex.contour import build_keyhole, holo_apply, min_spectrum_distance
from loopvertex.errors import SpectrumTooLargeError
from loopvertex.fusscatalan import fc_cut_distance
from loopvertex.matrixcore import eigh
from loopvertex.scalarmaps import Coupling, eval_map


@pytest.fixture(scope="module")
def gamma_real():
    return build_keyhole(2.0, Coupling(lam=0.05, p=2))


def test_cauchy_identity_interior_exterior(gamma_real):
    g = gamma_real
    rng = np.random.default_rng(0)
    for a in rng.uniform(-0.4, 0.4, 100) * g.r:
        assert abs(g.cauchy(complex(a)) - 1.0) <= 1e-8
    for a in 2.0 * g.R * np.exp(1j * rng.uniform(0, 2 * np.pi, 100)):
        assert abs(g.cauchy(complex(a))) <= 1e-8
    assert abs(g.cauchy(0.3) - 1.0) <= 1e-8
    assert abs(g.cauchy(g.R + 1.0)) <= 1e-8


def test_nodes_clear_of_cut_rays():
    for arg in (0.0, np.pi / 2, np.pi - 0.4):
        c = Coupling(lam=0.05 * np.exp(1j * arg), p=2)
        g = build_keyhole(1.5, c)
        assert np.all(fc_cut_distance(c.params, complex(c.lam), g.nodes) > 0)


def test_spectrum_distance_floor():
    g = build_keyhole(2.0, Coupling(lam=0.05, p=2))
    d = min_spectrum_distance(g, [0.0])
    assert d >= g.r * np.sin(g.psi) * (1 - 1e-12)
    d2 = min_spectrum_distance(g, [-1.5, 1.5])
    assert d2 > 0
    with pytest.raises(SpectrumTooLargeError):
        min_spectrum_distance(g, [g.R])


def test_holo_apply_identity_and_cube(gamma_real):
    k = np.diag([0.5, -0.2])
    s = eigh(k)
    ident = holo_apply(lambda u: u, gamma_real, s)
    assert np.max(np.abs(ident - k)) <= 1e-10
    cube = holo_apply(lambda u: u**3, gamma_real, s)
    assert np.max(np.abs(cube - np.diag([0.125, -0.008]))) <= 1e-8


def test_holo_apply_scalar_map(gamma_real):
    c = Coupling(lam=0.05, p=2)
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 3))
    k = (a + a.T) / 4.0
    s = eigh(k)
    got = holo_apply(lambda u: eval_map("h", c, u), gamma_real, s)
    v = s.eigenvectors
    expected = (v * np.asarray(eval_map("h", c, s.eigenvalues.astype(complex)))[None, :]) @ v.conj().T
    assert np.max(np.abs(got - expected)) <= 1e-8


def test_geometry_parameters():
    g = build_keyhole(2.0, Coupling(lam=0.0, p=2))
    assert g.R == pytest.approx(4.0)
    assert g.r == pytest.approx(1.0)
    assert g.psi <= 0.1 + 1e-12
