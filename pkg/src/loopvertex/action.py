"""Effective action of the change of variables and its derivative machinery.

With kappa_i the (real) eigenvalues of K and h the scalar map, the
action for symmetry class beta is

    S = (1 - beta/2) * sum_i log h'(kappa_i)
      + (beta/2) * sum_{i,j} log[(h(kappa_i) - h(kappa_j)) / (kappa_i - kappa_j)]

(diagonal ratios are the derivative limit h').  exp(S) is the Jacobian
determinant of the map K -> H(K) restricted to the Hermitian (beta = 2)
or real symmetric (beta = 1) coordinates.

Everything tensorial (Sigma, its inverse, corner operators) is kept as
an N x N array of eigenbasis entries; these operators are diagonal on
the tensor basis e_i (x) e_j, so dense N^2 x N^2 matrices never appear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contour import KeyholeContour
from .errors import LogBranchAmbiguityError, PoleCollisionError
from .fusscatalan import fc_eval_many
from .matrixcore import EnsembleSpec, SpectralData
from .scalarmaps import Coupling, eval_map

#: below this eigenvalue gap divided differences switch to derivative limits
COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class ActionValue:
    total: complex
    single_trace_part: complex
    double_trace_part: complex


@dataclass(frozen=True)
class ResolventEntries:
    """Eigenbasis entries of (1 + Sigma)^(-1) and their growth envelopes."""

    values: np.ndarray
    lambda_bounds: np.ndarray


def map_derivatives(c: Coupling, u) -> dict[str, np.ndarray]:
    """h, h', h'' and friends at u (array), via implicit differentiation.

    Returned keys: t, logt, f, h, hp, hpp.  All derivatives are exact
    consequences of the functional equation z T^p - T + 1 = 0.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    p = c.p
    lam = complex(c.lam)
    if lam == 0:
        one = np.ones_like(u)
        return {
            "t": one,
            "logt": np.zeros_like(u),
            "f": one,
            "h": u.copy(),
            "hp": one,
            "hpp": np.zeros_like(u),
        }
    z = -lam * u ** (2 * p - 2)
    z_over_u = -lam * u ** (2 * p - 3)  # z/u, finite at u = 0
    t = fc_eval_many(c.params, z)
    d = 1.0 - p * z * t ** (p - 1)
    tp = t**p / d
    e = t ** (p - 1) / d
    dp = -p * (t ** (p - 1) + z * (p - 1) * t ** (p - 2) * tp)
    tpp = (p * t ** (p - 1) * tp * d - t**p * dp) / d**2
    ep = tpp / t - e**2

    f = np.sqrt(t)
    fp = f * (p - 1) * e * z_over_u
    hp = f * (1.0 + (p - 1) * z * e)
    zp = (2 * p - 2) * z_over_u
    hpp = fp * (1.0 + (p - 1) * z * e) + f * (p - 1) * zp * (e + z * ep)
    return {"t": t, "logt": np.log(t), "f": f, "h": u * f, "hp": hp, "hpp": hpp}


def _log_ratio_matrix(kappa: np.ndarray, h: np.ndarray, hp: np.ndarray) -> np.ndarray:
    """log of the divided-difference matrix, derivative limit at coincidences."""
    dk = kappa[:, None] - kappa[None, :]
    dh = h[:, None] - h[None, :]
    near = np.abs(dk) < COINCIDENCE_TOL
    ratio = np.where(near, 1.0, dh / np.where(near, 1.0, dk))
    diag_limit = 0.5 * (hp[:, None] + hp[None, :])
    ratio = np.where(near, diag_limit, ratio)
    on_branch_cut = (ratio.real <= 0) & (
        np.abs(ratio.imag) <= 1e-12 * (1.0 + np.abs(ratio))
    )
    if np.any(on_branch_cut):
        raise LogBranchAmbiguityError(
            "a divided-difference ratio reached the negative real axis"
        )
    return np.log(ratio)


def action_S(c: Coupling, spec: EnsembleSpec, s_k: SpectralData) -> ActionValue:
    """Effective action S(lambda, K) from the spectrum of K."""
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    if complex(c.lam) == 0:
        return ActionValue(0.0 + 0.0j, 0.0 + 0.0j, 0.0 + 0.0j)
    md = map_derivatives(c, kappa)
    log_m = _log_ratio_matrix(kappa, md["h"], md["hp"])
    single = (1.0 - spec.beta / 2.0) * np.sum(np.log(md["hp"]))
    double = (spec.beta / 2.0) * np.sum(log_m)
    return ActionValue(complex(single + double), complex(single), complex(double))


def action_split(c: Coupling, s_k: SpectralData) -> tuple[complex, complex]:
    """(S1, S2) with S1 = (N/2) sum_i log T and S2 the remainder (beta = 2)."""
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    n = len(kappa)
    if complex(c.lam) == 0:
        return 0.0 + 0.0j, 0.0 + 0.0j
    md = map_derivatives(c, kappa)
    s1 = complex(0.5 * n * np.sum(md["logt"]))
    total = action_S(c, EnsembleSpec(N=n, beta=2), s_k).total
    return s1, total - s1


def resolvent_entries(c: Coupling, s_k: SpectralData) -> ResolventEntries:
    """Entries (1 + Sigma)^(-1)_ij = (k(eta_i) - k(eta_j))/(eta_i - eta_j).

    eta_i = h(kappa_i); the diagonal/coincident limit is k'(eta_i) =
    1/h'(kappa_i).  lambda_bounds carries the growth envelope
    max(1, |lam|^(1/2p) |eta|^(1-1/p)) per index pair.
    """
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    lam = complex(c.lam)
    if lam == 0:
        n = len(kappa)
        return ResolventEntries(np.ones((n, n), dtype=complex), np.ones((n, n)))
    md = map_derivatives(c, kappa)
    eta, hp = md["h"], md["hp"]
    # k(eta_i) = kappa_i exactly, since k inverts h
    dk = kappa[:, None] - kappa[None, :]
    de = eta[:, None] - eta[None, :]
    near = np.abs(dk) < COINCIDENCE_TOL
    values = np.where(near, 1.0, dk / np.where(near, 1.0, de))
    diag_limit = 0.5 * (1.0 / hp[:, None] + 1.0 / hp[None, :])
    values = np.where(near, diag_limit, values)
    envelope = np.abs(lam) ** (1.0 / (2 * c.p)) * np.abs(eta) ** (1.0 - 1.0 / c.p)
    bounds = np.maximum(
        1.0, np.maximum(envelope[:, None], envelope[None, :])
    )
    return ResolventEntries(values=values, lambda_bounds=bounds)


def corner_operator(
    c: Coupling, s_k: SpectralData, u_k: complex, u_k1: complex
) -> np.ndarray:
    """Eigenbasis entries of the contour-corner operator at (u_k, u_k1)."""
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    for u in (u_k, u_k1):
        if np.min(np.abs(u - kappa)) < 1e-12:
            raise PoleCollisionError(f"contour point {u} collides with the spectrum")
    res = resolvent_entries(c, s_k).values
    ri_k = 1.0 / (u_k - kappa)
    ri_k1 = 1.0 / (u_k1 - kappa)
    left = ri_k[:, None] * ri_k1[:, None] * ri_k[None, :]
    right = ri_k[:, None] * ri_k[None, :] * ri_k1[None, :]
    return res * (left + right)


def derivative_corner_norm(gamma_r: float, gamma_psi: float) -> float:
    """Operator-norm ceiling 2/(r sin psi) of the derivative-corner factor."""
    return 2.0 / (gamma_r * np.sin(gamma_psi))


def sigma_contour(
    c: Coupling, gamma: KeyholeContour, s_k: SpectralData
) -> np.ndarray:
    """Sigma entries by contour quadrature of g(u) resolvent pairs."""
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    if complex(c.lam) == 0:
        return np.zeros((len(kappa), len(kappa)), dtype=complex)
    g = eval_map("g", c, gamma.nodes)
    ri = 1.0 / (gamma.nodes[None, :] - kappa[:, None])  # (i, node)
    weighted = g * gamma.dnodes
    sigma = np.einsum("im,jm,m->ij", ri, ri, weighted) / (2j * np.pi)
    return sigma


def sigma_direct(c: Coupling, s_k: SpectralData) -> np.ndarray:
    """Divided-difference oracle (h(k_i) - h(k_j))/(k_i - k_j) - 1."""
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    if complex(c.lam) == 0:
        return np.zeros((len(kappa), len(kappa)), dtype=complex)
    md = map_derivatives(c, kappa)
    dk = kappa[:, None] - kappa[None, :]
    dh = md["h"][:, None] - md["h"][None, :]
    near = np.abs(dk) < COINCIDENCE_TOL
    ratio = np.where(near, 1.0, dh / np.where(near, 1.0, dk))
    diag_limit = 0.5 * (md["hp"][:, None] + md["hp"][None, :])
    return np.where(near, diag_limit, ratio) - 1.0


def action_gradient_eigenvalues(
    c: Coupling, spec: EnsembleSpec, s_k: SpectralData
) -> np.ndarray:
    """Diagonal eigenbasis entries g_a = dS/d kappa_a of the gradient."""
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    n = len(kappa)
    if complex(c.lam) == 0:
        return np.zeros(n, dtype=complex)
    md = map_derivatives(c, kappa)
    h, hp, hpp = md["h"], md["hp"], md["hpp"]
    res = resolvent_entries(c, s_k).values
    dk = kappa[:, None] - kappa[None, :]
    near = np.abs(dk) < COINCIDENCE_TOL
    off = (res * hp[:, None] - 1.0) / np.where(near, 1.0, dk)
    # derivative limit of the off-diagonal summand at a coincidence
    off = np.where(near, 0.5 * (hpp / hp)[:, None], off)
    np.fill_diagonal(off, 0.0)
    dbl = np.diag(res) * hpp + 2.0 * off.sum(axis=1)
    single = hpp / hp
    return (1.0 - spec.beta / 2.0) * single + (spec.beta / 2.0) * dbl


def action_gradient(
    c: Coupling, spec: EnsembleSpec, s_k: SpectralData
) -> np.ndarray:
    """Matrix G with G_ab = dS/dK_ba, i.e. dS = Tr(G dK)."""
    g_diag = action_gradient_eigenvalues(c, spec, s_k)
    v = s_k.eigenvectors
    return (v * g_diag[None, :]) @ v.conj().T


def branch_continuity_report(
    c: Coupling, s_k: SpectralData, n_steps: int = 8
) -> dict:
    """Follow each log term from the real-lambda anchor along the arg arc.

    Reports (never resolves) any principal-log jump larger than pi/2
    between adjacent steps, which would signal a branch winding.
    """
    lam = complex(c.lam)
    kappa = np.asarray(s_k.eigenvalues, dtype=complex)
    if lam == 0 or lam.imag == 0 and lam.real > 0:
        return {"max_jump": 0.0, "windings": 0}
    args = np.linspace(0.0, np.angle(lam), n_steps + 1)
    prev = None
    max_jump = 0.0
    windings = 0
    for a in args:
        ci = Coupling(abs(lam) * np.exp(1j * a), c.epsilon, c.eta, c.p)
        md = map_derivatives(ci, kappa)
        cur = _log_ratio_matrix(kappa, md["h"], md["hp"])
        if prev is not None:
            jump = float(np.max(np.abs((cur - prev).imag)))
            max_jump = max(max_jump, jump)
            if jump > np.pi / 2:
                windings += 1
        prev = cur
    return {"max_jump": max_jump, "windings": windings}


def jacobian_pair_scan(p: int, lam: float, s_i, s_j) -> dict:
    """Vectorized positivity factors for eigenvalue pairs at real lam > 0.

    For pairs of opposite sign the divided difference itself is checked;
    for same-sign pairs the telescoped geometric-sum factor and the
    sqrt-denominator ratio are checked separately.
    """
    if not lam > 0:
        raise ValueError("the positivity scan requires real lambda > 0")
    s_i = np.atleast_1d(np.asarray(s_i, dtype=float))
    s_j = np.atleast_1d(np.asarray(s_j, dtype=float))
    from .fusscatalan import FussCatalanParams

    params = FussCatalanParams(p)
    t_i = fc_eval_many(params, -lam * s_i ** (2 * p - 2)).real
    t_j = fc_eval_many(params, -lam * s_j ** (2 * p - 2)).real

    coincident = np.abs(s_i - s_j) < 1e-12
    opposite = (s_i * s_j <= 0) & ~coincident
    same = ~opposite & ~coincident

    ok = np.ones(s_i.shape, dtype=bool)

    # coincident pairs: h'(s) > 0
    if np.any(coincident):
        hp = _hp_real(p, lam, s_i[coincident])
        ok[coincident] &= hp > 0

    # opposite signs: the divided difference is manifestly positive
    if np.any(opposite):
        num = s_i[opposite] * np.sqrt(t_i[opposite]) - s_j[opposite] * np.sqrt(
            t_j[opposite]
        )
        ok[opposite] &= num / (s_i[opposite] - s_j[opposite]) > 0

    # same sign: geometric-sum factor and sqrt-denominator ratio
    if np.any(same):
        a = s_i[same] ** 2 * t_i[same]
        b = s_j[same] ** 2 * t_j[same]
        ks = np.arange(p)
        geom = 1.0 + lam * np.sum(
            a[..., None] ** ks * b[..., None] ** (p - 1 - ks), axis=-1
        )
        ratio = (s_i[same] + s_j[same]) / (
            s_i[same] * np.sqrt(t_i[same]) + s_j[same] * np.sqrt(t_j[same])
        )
        ok[same] &= (geom > 0) & (ratio > 0)

    return {
        "positive": ok,
        "n_pairs": int(ok.size),
        "n_failures": int(np.sum(~ok)),
    }


def _hp_real(p: int, lam: float, s: np.ndarray) -> np.ndarray:
    c = Coupling(lam, epsilon=0.1, eta=max(abs(lam), 1e-12), p=p)
    return map_derivatives(c, s.astype(complex))["hp"].real


def jacobian_check(p: int, lam: float, eigs) -> dict:
    """Positivity report for the full Jacobian of a spectrum at real lam > 0."""
    eigs = np.asarray(eigs, dtype=float)
    n = len(eigs)
    ii, jj = np.triu_indices(n)
    scan = jacobian_pair_scan(p, lam, eigs[ii], eigs[jj])
    factors = [
        {"pair": (int(a), int(b)), "positive": bool(okv)}
        for a, b, okv in zip(ii, jj, scan["positive"])
    ]
    return {"overall_positive": bool(np.all(scan["positive"])), "factors": factors}
