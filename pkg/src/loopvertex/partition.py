"""Ground-truth partition function Z and free energy F.

Z(lambda, N) is computed two independent ways and must agree:

  * directly, as E[exp(-N lam Tr H^(2p))] over the Gaussian ensemble,
  * through the change of variables, as E[exp(S(lam, K))].

Both reduce to eigenvalue integrals with the Vandermonde repulsion
factor.  Small N uses deterministic quadrature: a tensor cube with
shared 1-D tables when the Vandermonde power is smooth (beta = 2, or
N = 1), and an ordered-sector gap parametrization when beta = 1 makes
|Delta| kinked.  Couplings with Re(lam) < 0 rotate the eigenvalue line
so the integrals converge.  Larger N at real lam >= 0 uses Monte
Carlo.  Exact Gaussian moments by Wick pairing enumeration provide the
perturbative anchor.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .action import map_derivatives
from .errors import (
    OutOfRangeError,
    QuadratureUnderResolvedError,
    VarianceBlowupError,
)
from .matrixcore import EnsembleSpec, sample_gaussian_batch, spawn_streams
from .scalarmaps import Coupling

QUAD_MAX_N = 3
QUAD_REL_TOL = 1e-6
#: Gauss-Hermite cube (real lambda): start nodes and per-dimension caps
GH_START_NODES = 64
GH_NODE_CAP = {1: 512, 2: 256, 3: 128}
#: ordered-sector scheme (beta = 1, N >= 2)
ORDERED_START_NODES = 48
ORDERED_NODE_CAP = {2: 384, 3: 192}
#: integration half-width in units of the Gaussian scale 1/sqrt(N env)
HALF_WIDTH_SIGMAS = 8.5
#: rotate the eigenvalue line once |arg lambda| exceeds pi/2 minus this
TILT_MARGIN = 0.15
#: largest allowed |2 zeta| below pi/2, keeping Gaussian decay on the line
MAX_DOUBLE_ANGLE = np.pi / 2 - 0.3
#: log-density floor standing in for -inf at coincident grid nodes
LOG_FLOOR = -1e300
#: dense 1-D grid size for interpolated map tables on a rotated line
INTERP_GRID = 1 << 17

MC_MAX_REL_SE = 0.10
MC_DEFAULT_SAMPLES = 20000

WICK_MAX_K = 6
WICK_MAX_N = 8


@dataclass(frozen=True)
class PartitionEstimate:
    value: complex
    method: str  # "quadrature" | "monte_carlo"
    error: float
    n_points: int


# ---------------------------------------------------------------------------
# contour placement


def _tilt_angle(lam: complex, p: int) -> float:
    """Rotation of the eigenvalue line making the direct integral converge.

    The real-line integral diverges once Re(lam) < 0; rotating each
    eigenvalue as mu = exp(i phi) t with phi = -arg(lam)/(2p) makes the
    interaction term exactly |lam| t^(2p), real and decaying, while
    |2 phi| = |arg lam|/p stays below pi/2 so the Gaussian factor keeps
    decaying too.  Returns 0 when the real line converges comfortably.
    """
    alpha = float(np.angle(lam))
    if abs(alpha) <= np.pi / 2 - TILT_MARGIN:
        return 0.0
    return -alpha / (2 * p)


def _map_rotation(c: Coupling) -> float:
    """Eigenvalue-line rotation keeping the scalar maps well-converged.

    The cut rays of h sit at angles base + k pi/(p-1); quadrature on the
    real line converges slowly when a ray hugs it.  Rotating to the
    bisector of the two rays bracketing the real axis maximizes the
    analyticity strip, clipped so the Gaussian factor still decays.
    """
    lam = complex(c.lam)
    alpha = float(np.angle(lam))
    if alpha == 0.0:
        return 0.0
    spacing = np.pi / (c.p - 1)
    base = (np.pi - alpha) / (2 * c.p - 2)
    delta = base % spacing
    psi = delta - spacing / 2.0
    limit = MAX_DOUBLE_ANGLE / 2.0
    return float(np.clip(psi, -limit, limit))


def _hermite_rule(n_nodes: int, big_n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for integrals against exp(-N mu^2) d mu."""
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    s = np.sqrt(float(big_n))
    return x / s, w / s


def _doubling(eval_at, start: int, cap: int, label: str) -> tuple[complex, float, int]:
    """Double the per-dimension node count until the value stabilizes."""
    m = start
    prev = eval_at(m)
    while m < cap:
        m *= 2
        cur = eval_at(m)
        gap = abs(cur - prev)
        if gap <= QUAD_REL_TOL * abs(cur):
            return cur, gap, m
        prev = cur
    raise QuadratureUnderResolvedError(
        f"{label}: node doubling stalled at {m} nodes/dimension"
    )


# ---------------------------------------------------------------------------
# cube scheme (shared 1-D tables; valid when the Vandermonde power is smooth)


def _grid_ratio(
    mu: np.ndarray,
    w: np.ndarray,
    big_n: int,
    beta: int,
    e1: np.ndarray,
    e2: np.ndarray | None,
) -> complex:
    """Ratio of two tensor-cube integrals against the eigenvalue density.

    Numerator integrand is exp(sum_k e1[i_k] + sum_{k<l} e2[i_k, i_l]),
    denominator is 1, both against w-weights times the Vandermonde
    factor prod |mu_a - mu_b|^beta.  Assembled by pure broadcasting.
    """
    m = len(mu)
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    lv = beta * np.log(np.abs(mu[:, None] - mu[None, :]) + np.eye(m))
    np.fill_diagonal(lv, LOG_FLOOR)  # coincident nodes carry zero density

    def axis_shape(axes):
        return tuple(m if a in axes else 1 for a in range(big_n))

    base = np.zeros((m,) * big_n)
    for k in range(big_n):
        base = base + np.clip(logw, LOG_FLOOR, None).reshape(axis_shape({k}))
    for k in range(big_n):
        for l in range(k + 1, big_n):
            base = base + lv.reshape(axis_shape({k, l}))
    base = np.clip(base, LOG_FLOOR, None)

    extra = np.zeros((m,) * big_n, dtype=complex)
    for k in range(big_n):
        extra = extra + e1.reshape(axis_shape({k}))
    if e2 is not None:
        for k in range(big_n):
            for l in range(k + 1, big_n):
                extra = extra + e2.reshape(axis_shape({k, l}))

    with np.errstate(under="ignore"):
        density = np.exp(base)
        num = np.sum(density * np.exp(extra))
        den = np.sum(density)
    return complex(num / den)


def _gh_cube_estimate(spec: EnsembleSpec, tables) -> PartitionEstimate:
    """Real-lambda cube against the exact Gauss-Hermite weight.

    tables(mu) returns (e1, e2 or None) on the shared 1-D node set.
    """
    def eval_at(m):
        mu, w = _hermite_rule(m, spec.N)
        return _grid_ratio(mu, w, spec.N, spec.beta, *tables(mu))

    value, gap, m = _doubling(
        eval_at, GH_START_NODES, GH_NODE_CAP[spec.N], "hermite cube"
    )
    return PartitionEstimate(value, "quadrature", gap, m**spec.N)


def _panel_antiderivatives(g: int, fvals: np.ndarray, half_width: float):
    """Per-panel antiderivatives of functions sampled on mapped GL nodes.

    fvals has shape (K, P, g): K functions on P panels of g Gauss-Legendre
    nodes each.  Returns (partials, totals): the running integral from the
    panel's left edge at every node, and the full panel integrals, both
    exact for the degree g-1 interpolants.
    """
    k_fn, p_pan, _ = fvals.shape
    xg, _ = np.polynomial.legendre.leggauss(g)
    flat = fvals.reshape(k_fn * p_pan, g).T  # (g, K*P)
    coef = np.polynomial.legendre.legfit(xg, flat, g - 1)
    coef_int = np.polynomial.legendre.legint(coef, axis=0)
    at_nodes = np.polynomial.legendre.legval(xg, coef_int)  # (K*P, g)
    at_left = np.polynomial.legendre.legval(-1.0, coef_int)  # (K*P,)
    at_right = np.polynomial.legendre.legval(1.0, coef_int)
    partials = (at_nodes - at_left[:, None]) * half_width
    totals = (at_right - at_left) * half_width
    return partials.reshape(k_fn, p_pan, g), totals.reshape(k_fn, p_pan)


def _moment_blocks(phi, big_n: int, half: float, n_panels: int, g: int = 16):
    """1-D and ordered-pair integrals of a function family on [-half, half].

    phi(t) returns shape (K, len(t)) with K = big_n function values.
    Returns (m, M): m_i = integral of phi_i, and the antisymmetric
    M_ij = integral over x < y of phi_i(x) phi_j(y) - phi_j(x) phi_i(y),
    both to spectral accuracy via per-panel antiderivatives.
    """
    edges = np.linspace(-half, half, n_panels + 1)
    hw = 0.5 * (edges[1] - edges[0])
    xg, wg = np.polynomial.legendre.leggauss(g)
    nodes = (edges[:-1, None] + hw) + hw * xg[None, :]  # (P, g)
    weights = hw * np.broadcast_to(wg, nodes.shape)
    fvals = phi(nodes.ravel()).reshape(big_n, n_panels, g)
    partials, totals = _panel_antiderivatives(g, fvals, hw)
    prefix = np.concatenate(
        [np.zeros((big_n, 1), dtype=complex), np.cumsum(totals, axis=1)[:, :-1]],
        axis=1,
    )
    cum = partials + prefix[:, :, None]  # Phi_i at every node
    m_vec = totals.sum(axis=1)
    wf = weights.ravel()
    fv = fvals.reshape(big_n, -1)
    cv = cum.reshape(big_n, -1)
    big_m = np.einsum("q,iq,jq->ij", wf, cv, fv)
    big_m = big_m - big_m.T
    return m_vec, big_m


def _ordered_value(phi, big_n: int, half: float, n_panels: int) -> complex:
    """Integral of det[phi_i(x_j)] over the ordered sector x_1 < ... < x_N.

    Single-site determinant integrals reduce to the moment vector and
    pair blocks: for N = 1 the plain integral, N = 2 the antisymmetric
    pair integral, N = 3 its Pfaffian combination with the moments.
    """
    m_vec, big_m = _moment_blocks(phi, big_n, half, n_panels)
    if big_n == 1:
        return complex(m_vec[0])
    if big_n == 2:
        return complex(big_m[0, 1])
    return complex(
        big_m[0, 1] * m_vec[2] - big_m[0, 2] * m_vec[1] + big_m[1, 2] * m_vec[0]
    )


def _hankel_value(pair_fn, big_n: int, half: float, n_panels: int, g: int = 16) -> complex:
    """det of the Gram matrix G_ij = integral f_i f_j w for beta = 2 cubes.

    pair_fn(t) returns (vals, weight) with vals shape (N, len(t)); the
    Gram entries are 1-D integrals, so the N-fold cube collapses.
    """
    edges = np.linspace(-half, half, n_panels + 1)
    hw = 0.5 * (edges[1] - edges[0])
    xg, wg = np.polynomial.legendre.leggauss(g)
    nodes = ((edges[:-1, None] + hw) + hw * xg[None, :]).ravel()
    weights = (hw * np.broadcast_to(wg, (n_panels, g))).ravel()
    vals, w_site = pair_fn(nodes)
    gram = np.einsum("q,iq,jq->ij", weights * w_site, vals, vals)
    if big_n == 1:
        return complex(gram[0, 0])
    return complex(np.linalg.det(gram))


#: composite-panel schedule for the rotated-line moment schemes
PANELS_START = 16
PANELS_CAP = 512


def _rotated_estimate(
    spec: EnsembleSpec, zeta: float, family_num, family_den
) -> PartitionEstimate:
    """Z ratio on the line exp(i zeta) t via determinant/Pfaffian identities.

    family_num/family_den(t) return, for beta = 2, (vals, site_weight)
    Gram inputs; for beta = 1, the K function values of the ordered
    determinant.  All contour phases are common factors of numerator
    and denominator and cancel in the ratio.
    """
    env = float(np.cos(2 * zeta))
    half = HALF_WIDTH_SIGMAS / np.sqrt(spec.N * env)
    if spec.beta == 1 and spec.N > 1:
        num_fn = lambda P: _ordered_value(family_num, spec.N, half, P)
        den_fn = lambda P: _ordered_value(family_den, spec.N, half, P)
    else:
        num_fn = lambda P: _hankel_value(family_num, spec.N, half, P)
        den_fn = lambda P: _hankel_value(family_den, spec.N, half, P)

    def eval_at(n_panels):
        return num_fn(n_panels) / den_fn(n_panels)

    value, gap, n_panels = _doubling(
        eval_at, PANELS_START, PANELS_CAP, "rotated moment scheme"
    )
    return PartitionEstimate(value, "quadrature", gap, 16 * n_panels)


# ---------------------------------------------------------------------------
# ordered-sector scheme (beta = 1, N >= 2: |Delta| is smooth only ordered)


def _ordered_ratio(
    big_n: int, beta: int, zeta: float, m: int, make_terms
) -> complex:
    """Integral ratio over the ordered sector mu_1 < ... < mu_N.

    Coordinates are the lowest eigenvalue and the positive gaps along
    the (possibly rotated) line exp(i zeta) s; the Vandermonde becomes a
    smooth product of gap sums and its rotation phase cancels between
    numerator and denominator.  make_terms(coords) returns the
    (num, den) log-integrand extras on the coordinate tensors.
    """
    env = float(np.cos(2 * zeta))
    half = HALF_WIDTH_SIGMAS / np.sqrt(big_n * env)
    x, w = np.polynomial.legendre.leggauss(m)

    def rule(a, b):
        return 0.5 * (b - a) * (x + 1.0) + a, 0.5 * (b - a) * w

    axes = [rule(-half, half)] + [rule(0.0, 2 * half)] * (big_n - 1)

    def axis_view(arr, k):
        return arr.reshape(tuple(m if a == k else 1 for a in range(big_n)))

    s_coords = [axis_view(axes[0][0], 0)]
    for k in range(1, big_n):
        s_coords = s_coords + [s_coords[k - 1] + axis_view(axes[k][0], k)]

    logw = np.zeros((1,) * big_n)
    for k in range(big_n):
        logw = logw + axis_view(np.log(axes[k][1]), k)
    logdelta = np.zeros((1,) * big_n)
    for k in range(big_n):
        for l in range(k + 1, big_n):
            logdelta = logdelta + np.log(s_coords[l] - s_coords[k])

    rot = np.exp(1j * zeta) if zeta != 0.0 else 1.0
    coords = [rot * s for s in s_coords]
    num_extra, den_extra = make_terms(coords)
    base = logw + beta * logdelta
    with np.errstate(under="ignore"):
        num = np.sum(np.exp(base + num_extra))
        den = np.sum(np.exp(base + den_extra))
    return complex(num / den)


def _ordered_estimate(
    spec: EnsembleSpec, zeta: float, make_terms
) -> PartitionEstimate:
    def eval_at(m):
        return _ordered_ratio(spec.N, spec.beta, zeta, m, make_terms)

    value, gap, m = _doubling(
        eval_at, ORDERED_START_NODES, ORDERED_NODE_CAP[spec.N], "ordered sector"
    )
    return PartitionEstimate(value, "quadrature", gap, m**spec.N)


# ---------------------------------------------------------------------------
# map tables


def _action_log_tables(c: Coupling, beta: int, mu: np.ndarray):
    """(e1, e2) cube tables of the effective action on real nodes.

    S for a spectrum drawn from the grid decomposes as sum_k log h'(mu_k)
    plus beta * sum_{k<l} log[(h(mu_k) - h(mu_l))/(mu_k - mu_l)], which
    is exactly the (e1, e2) split consumed by the cube evaluator.
    """
    md = map_derivatives(c, mu.astype(complex))
    e1 = np.log(md["hp"])
    dk = mu[:, None] - mu[None, :]
    dh = md["h"][:, None] - md["h"][None, :]
    ratio = dh / np.where(np.eye(len(mu), dtype=bool), 1.0, dk)
    np.fill_diagonal(ratio, 1.0)  # diagonal never multiplies nonzero density
    return e1, beta * np.log(ratio)


class _LineMapTables:
    """h and log h' along the line exp(i zeta) s, linearly interpolated.

    One dense evaluation of the maps serves every tensor point of the
    ordered scheme, since all coordinates lie on a single line.
    """

    def __init__(self, c: Coupling, zeta: float, s_lo: float, s_hi: float):
        self.rot = np.exp(1j * zeta)
        pad = 0.01 * (s_hi - s_lo)
        self.s_grid = np.linspace(s_lo - pad, s_hi + pad, INTERP_GRID)
        md = map_derivatives(c, self.rot * self.s_grid)
        self.h_grid = md["h"]
        self.loghp_grid = np.log(md["hp"])

    def _interp(self, table, s):
        flat = np.ravel(s)
        out = np.interp(flat, self.s_grid, table.real) + 1j * np.interp(
            flat, self.s_grid, table.imag
        )
        return out.reshape(np.shape(s))

    def h(self, s):
        return self._interp(self.h_grid, s)

    def loghp(self, s):
        return self._interp(self.loghp_grid, s)


# ---------------------------------------------------------------------------
# Monte Carlo


def _mc_estimate(
    c: Coupling,
    spec: EnsembleSpec,
    log_integrand,
    n_samples: int,
    seed: int,
    workers: int,
) -> PartitionEstimate:
    """MC driver; log_integrand(spectra batch) -> per-sample log values."""
    lam = complex(c.lam)
    if lam.imag != 0 or lam.real < 0:
        raise OutOfRangeError("Monte Carlo requires real lambda >= 0")
    streams = spawn_streams(seed, workers)
    share = int(np.ceil(n_samples / workers))
    vals = []
    for rng in streams:
        h = sample_gaussian_batch(spec, rng, share)
        eigs = np.linalg.eigvalsh(h)
        vals.append(np.exp(log_integrand(eigs)))
    vals = np.concatenate(vals)
    mean = complex(np.mean(vals))
    se = float(np.std(vals.real) / np.sqrt(len(vals)))
    if se > MC_MAX_REL_SE * abs(mean):
        raise VarianceBlowupError(
            f"relative standard error {se / abs(mean):.2%} exceeds 10%"
        )
    return PartitionEstimate(mean, "monte_carlo", se, len(vals))


# ---------------------------------------------------------------------------
# public estimators


def z_direct(
    c: Coupling,
    spec: EnsembleSpec,
    method: str = "quadrature",
    n_samples: int = MC_DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> PartitionEstimate:
    """Z(lambda, N)/Z(0, N) from the interaction weight exp(-N lam Tr H^2p)."""
    lam = complex(c.lam)
    if lam == 0:
        return PartitionEstimate(1.0 + 0.0j, method, 0.0, 0)
    p = c.p
    big_n = spec.N
    if method == "monte_carlo":
        def log_integrand(eigs):
            return -big_n * lam.real * np.sum(eigs ** (2 * p), axis=-1)

        return _mc_estimate(c, spec, log_integrand, n_samples, seed, workers)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if big_n > QUAD_MAX_N:
        raise OutOfRangeError(f"quadrature supports N <= {QUAD_MAX_N}")

    phi = _tilt_angle(lam, p)

    if phi == 0.0:
        if spec.beta == 1 and big_n >= 2:
            def make_terms(coords):
                num = np.zeros((1,) * big_n, dtype=complex)
                den = np.zeros((1,) * big_n, dtype=complex)
                for x in coords:
                    den = den - big_n * x**2
                    num = num - big_n * (x**2 + lam * x ** (2 * p))
                return num, den

            return _ordered_estimate(spec, phi, make_terms)

        def tables(mu):
            return (-big_n * lam * mu ** (2 * p)).astype(complex), None

        return _gh_cube_estimate(spec, tables)

    rot = np.exp(1j * phi)
    powers = np.arange(big_n)

    def monomials(mu):
        return mu[None, :] ** powers[:, None]

    if spec.beta == 1 and big_n >= 2:
        def family_num(t):
            mu = rot * t
            w = np.exp(-big_n * (mu**2 + lam * mu ** (2 * p)))
            return monomials(mu) * w[None, :]

        def family_den(t):
            mu = rot * t
            return monomials(mu) * np.exp(-big_n * mu**2)[None, :]
    else:
        def family_num(t):
            mu = rot * t
            return monomials(mu), np.exp(-big_n * (mu**2 + lam * mu ** (2 * p)))

        def family_den(t):
            mu = rot * t
            return monomials(mu), np.exp(-big_n * mu**2)

    return _rotated_estimate(spec, phi, family_num, family_den)


def z_lvr(
    c: Coupling,
    spec: EnsembleSpec,
    method: str = "quadrature",
    n_samples: int = MC_DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> PartitionEstimate:
    """Z(lambda, N)/Z(0, N) as the Gaussian average of exp(S(lambda, K))."""
    lam = complex(c.lam)
    if lam == 0:
        return PartitionEstimate(1.0 + 0.0j, method, 0.0, 0)
    big_n = spec.N
    if method == "monte_carlo":
        def log_integrand(eigs):
            md = map_derivatives(c, eigs.astype(complex).ravel())
            n = spec.N
            hp = md["hp"].reshape(eigs.shape)
            h = md["h"].reshape(eigs.shape)
            dk = eigs[..., :, None] - eigs[..., None, :]
            dh = h[..., :, None] - h[..., None, :]
            eye = np.eye(n, dtype=bool)
            ratio = np.where(eye, 1.0, dh / np.where(eye, 1.0, dk))
            iu = np.triu_indices(n, k=1)
            pair = np.sum(np.log(ratio[..., iu[0], iu[1]]), axis=-1)
            s = np.sum(np.log(hp), axis=-1) + spec.beta * pair
            return s.real  # real lambda: S is real on real spectra

        return _mc_estimate(c, spec, log_integrand, n_samples, seed, workers)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if big_n > QUAD_MAX_N:
        raise OutOfRangeError(f"quadrature supports N <= {QUAD_MAX_N}")

    psi = _map_rotation(c)

    if psi == 0.0:
        if spec.beta == 1 and big_n >= 2:
            half = HALF_WIDTH_SIGMAS / np.sqrt(big_n)
            maps = _LineMapTables(c, 0.0, -half, half * (2 * big_n - 1))

            def make_terms(coords):
                num = np.zeros((1,) * big_n, dtype=complex)
                den = np.zeros((1,) * big_n, dtype=complex)
                h_list = [maps.h(x.real) for x in coords]
                for x in coords:
                    den = den - big_n * x**2
                    num = num - big_n * x**2 + maps.loghp(x.real)
                for k in range(big_n):
                    for l in range(k + 1, big_n):
                        num = num + np.log(
                            (h_list[k] - h_list[l]) / (coords[k] - coords[l])
                        )
                return num, den

            return _ordered_estimate(spec, 0.0, make_terms)
        return _gh_cube_estimate(
            spec, lambda mu: _action_log_tables(c, spec.beta, mu)
        )

    rot = np.exp(1j * psi)
    powers = np.arange(big_n)

    def monomials(v):
        return v[None, :] ** powers[:, None]

    if spec.beta == 1 and big_n >= 2:
        def family_num(t):
            mu = rot * t
            md = map_derivatives(c, mu)
            w = md["hp"] * np.exp(-big_n * mu**2)
            return monomials(md["h"]) * w[None, :]

        def family_den(t):
            mu = rot * t
            return monomials(mu) * np.exp(-big_n * mu**2)[None, :]
    else:
        def family_num(t):
            mu = rot * t
            md = map_derivatives(c, mu)
            return monomials(md["h"]), md["hp"] * np.exp(-big_n * mu**2)

        def family_den(t):
            mu = rot * t
            return monomials(mu), np.exp(-big_n * mu**2)

    return _rotated_estimate(spec, psi, family_num, family_den)


def free_energy(
    c: Coupling, spec: EnsembleSpec, method: str = "quadrature", **kwargs
) -> complex:
    """F = N^(-2) log Z, principal log (Z stays near 1 at desk scale)."""
    est = z_direct(c, spec, method, **kwargs)
    if est.error > 0.5 * abs(est.value):
        raise VarianceBlowupError("Z estimate too noisy for a log")
    return complex(np.log(est.value) / spec.N**2)


# ---------------------------------------------------------------------------
# exact Gaussian moments


def _pairings(slots: list[int]):
    if not slots:
        yield []
        return
    a = slots[0]
    for i in range(1, len(slots)):
        b = slots[i]
        rest = slots[1:i] + slots[i + 1 :]
        for tail in _pairings(rest):
            yield [(a, b)] + tail


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def gaussian_moment_exact(N: int, k: int, beta: int = 2) -> Fraction:
    """E[Tr H^(2k)] exactly, by enumerating Wick pairings of 2k slots.

    Slot m of the trace carries H_{v_m, v_{m+1 mod 2k}}.  Each pair
    contributes the straight contraction (and, for beta = 1, also the
    transposed one); every term identifies vertex labels, and the
    surviving free labels each contribute a factor N.
    """
    if not 0 <= k <= WICK_MAX_K:
        raise OutOfRangeError(f"k must be in [0, {WICK_MAX_K}]")
    if not 1 <= N <= WICK_MAX_N:
        raise OutOfRangeError(f"N must be in [1, {WICK_MAX_N}]")
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    if k == 0:
        return Fraction(N)
    n_slots = 2 * k
    coeff = Fraction(1, 2 * N) if beta == 2 else Fraction(1, 4 * N)
    total = Fraction(0)
    terms_per_pair = (0,) if beta == 2 else (0, 1)
    for pairing in _pairings(list(range(n_slots))):
        for choice in range(len(terms_per_pair) ** k):
            uf = _UnionFind(n_slots)
            ch = choice
            for m, n in pairing:
                twist = terms_per_pair[ch % len(terms_per_pair)]
                ch //= len(terms_per_pair)
                if twist:
                    # E[H_ab H_cd] term delta_ac delta_bd
                    uf.union(m, n)
                    uf.union((m + 1) % n_slots, (n + 1) % n_slots)
                else:
                    # term delta_ad delta_bc
                    uf.union(m, (n + 1) % n_slots)
                    uf.union((m + 1) % n_slots, n)
            roots = {uf.find(a) for a in range(n_slots)}
            total += coeff**k * Fraction(N) ** len(roots)
    return total
