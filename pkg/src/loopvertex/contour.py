"""Keyhole contour construction and holomorphic functional calculus.

The contour is the positively oriented boundary of

    D = {|u| < r}  union  {|u| < R, min(|arg u|, |pi - arg u|) < psi}

i.e. a central disk joined to two symmetric sectors hugging the real
axis, which encloses any real spectrum with |mu| <= R/2 while staying
clear of the radial cuts of the scalar map h.  Quadrature nodes carry
their du weights, so ``sum(f(u) * du)`` approximates the contour
integral; the 1/(2*pi*i) of the functional calculus is applied by the
consumers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CutCollisionError,
    QuadratureDivergenceError,
    SpectrumTooLargeError,
)
from .fusscatalan import CutGeometry, fc_cut_distance
from .matrixcore import SpectralData
from .scalarmaps import Coupling

#: default total Gauss-Legendre panel budget
DEFAULT_PANELS = 512
GL_ORDER = 8
CAUCHY_TOL = 1e-8
MAX_DOUBLINGS = 5


@dataclass(frozen=True)
class _Arc:
    radius: float
    a0: float
    a1: float  # traversed a0 -> a1

    def length(self) -> float:
        return self.radius * abs(self.a1 - self.a0)

    def point_distance(self, x: complex) -> float:
        lo, hi = min(self.a0, self.a1), max(self.a0, self.a1)
        ang = float(np.angle(x))
        # try both 2*pi representatives of the angle
        for a in (ang, ang + 2 * np.pi, ang - 2 * np.pi):
            if lo <= a <= hi:
                return abs(abs(x) - self.radius)
        ends = [
            self.radius * np.exp(1j * self.a0),
            self.radius * np.exp(1j * self.a1),
        ]
        return min(abs(x - e) for e in ends)


@dataclass(frozen=True)
class _Segment:
    z0: complex
    z1: complex

    def length(self) -> float:
        return abs(self.z1 - self.z0)

    def point_distance(self, x: complex) -> float:
        d = self.z1 - self.z0
        t = ((x - self.z0) * np.conj(d)).real / abs(d) ** 2
        t = min(max(t, 0.0), 1.0)
        return abs(x - (self.z0 + t * d))


@dataclass
class KeyholeContour:
    """Quadrature-ready keyhole contour.

    ``nodes`` and ``dnodes`` satisfy ``contour integral of f ~
    sum(f(nodes) * dnodes)`` with counterclockwise orientation.
    """

    R: float
    r: float
    psi: float
    nodes: np.ndarray
    dnodes: np.ndarray
    pieces: list = field(default_factory=list, repr=False)

    def cauchy(self, a: complex) -> complex:
        """Quadrature value of (1/2 pi i) * contour du/(u - a)."""
        return complex(np.sum(self.dnodes / (self.nodes - a)) / (2j * np.pi))


def _pieces(R: float, r: float, psi: float) -> list:
    e = lambda a: np.exp(1j * a)
    return [
        _Arc(R, -psi, psi),
        _Segment(R * e(psi), r * e(psi)),
        _Arc(r, psi, np.pi - psi),
        _Segment(r * e(np.pi - psi), R * e(np.pi - psi)),
        _Arc(R, np.pi - psi, np.pi + psi),
        _Segment(R * e(np.pi + psi), r * e(np.pi + psi)),
        _Arc(r, np.pi + psi, 2 * np.pi - psi),
        _Segment(r * e(2 * np.pi - psi), R * e(2 * np.pi - psi)),
    ]


def _quadrature(pieces: list, n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    lengths = np.array([p.length() for p in pieces])
    shares = np.maximum(
        2, np.rint(n_panels * lengths / lengths.sum()).astype(int)
    )
    nodes, dnodes = [], []
    for piece, m in zip(pieces, shares):
        edges = np.linspace(0.0, 1.0, m + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            t = 0.5 * (hi - lo) * (x + 1.0) + lo
            wt = 0.5 * (hi - lo) * w
            if isinstance(piece, _Arc):
                ang = piece.a0 + t * (piece.a1 - piece.a0)
                u = piece.radius * np.exp(1j * ang)
                du = 1j * u * (piece.a1 - piece.a0) * wt
            else:
                d = piece.z1 - piece.z0
                u = piece.z0 + t * d
                du = d * wt
            nodes.append(u)
            dnodes.append(du)
    return np.concatenate(nodes), np.concatenate(dnodes)


def build_keyhole(
    spectral_radius: float, c: Coupling, n_nodes: int = DEFAULT_PANELS
) -> KeyholeContour:
    """Build the keyhole for a coupling and a real spectrum radius.

    Geometry recipe: r = 1 (shrunk if a cut ray starts inside the unit
    disk), R = max(2*spectral_radius, 2r), psi = min(epsilon/2, half the
    angular gap between the real axis and the nearest cut ray).  Panels
    are doubled until the Cauchy self-test reaches 1e-8.
    """
    if spectral_radius < 0:
        raise ValueError("spectral_radius must be >= 0")
    if n_nodes < 64:
        raise ValueError("n_nodes must be >= 64")
    lam = complex(c.lam)
    r = 1.0
    if lam != 0:
        geom = CutGeometry(c.p)
        angles = geom.ray_angles(lam) % np.pi
        gap = float(np.min(np.minimum(angles, np.pi - angles)))
        psi = min(c.epsilon / 2.0, gap / 2.0)
        start = geom.ray_start_radius(lam)
        if start <= 1.25 * r:
            # cut ray would pierce the central disk; shrink the cap
            r = 0.6 * start
        if psi <= 0 or r <= 0:
            raise CutCollisionError(
                "no keyhole with positive cut clearance exists"
            )
    else:
        psi = c.epsilon / 2.0
    R = max(2.0 * spectral_radius, 2.0 * r)
    pieces = _pieces(R, r, psi)

    probes_in = [0.0, 0.3 * r, -0.3 * r, 0.45j * r, min(spectral_radius, R / 2)]
    probes_out = [R + 1.0, 1j * R, 2 * r * np.exp(1j * (psi + 0.5 * (np.pi - 2 * psi)))]
    n_panels = max(64, n_nodes // GL_ORDER)
    for _ in range(MAX_DOUBLINGS + 1):
        nodes, dnodes = _quadrature(pieces, n_panels)
        gamma = KeyholeContour(R=R, r=r, psi=psi, nodes=nodes, dnodes=dnodes, pieces=pieces)
        ok = all(abs(gamma.cauchy(a) - 1.0) <= CAUCHY_TOL for a in probes_in)
        ok = ok and all(abs(gamma.cauchy(a)) <= CAUCHY_TOL for a in probes_out)
        if ok:
            break
        n_panels *= 2
    else:
        raise QuadratureDivergenceError(
            "Cauchy self-test failed after panel doubling"
        )
    if lam != 0:
        clearance = fc_cut_distance(c.params, lam, gamma.nodes)
        if np.any(clearance <= 0):
            raise CutCollisionError("contour node lies on a cut ray")
    return gamma


def min_spectrum_distance(gamma: KeyholeContour, eigenvalues) -> float:
    """Exact minimum distance from a real spectrum to the contour."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if np.any(np.abs(eigenvalues) > gamma.R / 2):
        raise SpectrumTooLargeError(
            f"|eigenvalue| exceeds R/2 = {gamma.R / 2}"
        )
    d = min(
        piece.point_distance(complex(mu))
        for mu in eigenvalues
        for piece in gamma.pieces
    )
    floor = gamma.r * np.sin(gamma.psi)
    assert d >= floor * (1.0 - 1e-12), (d, floor)
    return float(d)


def holo_apply(scalar_fn, gamma: KeyholeContour, spectral: SpectralData) -> np.ndarray:
    """(1/2 pi i) * contour of scalar_fn(u) (u-K)^(-1) du in the eigenbasis.

    The normalization reproduces scalar_fn applied eigenvalue-wise, so
    holo_apply(identity) returns K itself.
    """
    mu = spectral.eigenvalues
    for m in mu:
        if abs(gamma.cauchy(m) - 1.0) > CAUCHY_TOL:
            raise QuadratureDivergenceError(
                f"Cauchy self-test fails at eigenvalue {m}"
            )
    values = np.asarray(scalar_fn(gamma.nodes), dtype=complex)
    phi = (values * gamma.dnodes)[None, :] / (gamma.nodes[None, :] - mu[:, None])
    phi = phi.sum(axis=1) / (2j * np.pi)
    v = spectral.eigenvectors
    return (v * phi[None, :]) @ v.conj().T
