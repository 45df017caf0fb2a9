"""Batch command-line front-end with JSON/CSV result emission.

Commands: fc-eval, maps-check, contour-check, z-identity, free-energy,
lve-sum, single-vertex, jacobian-check, verify-bounds, pacman-scan.

Exit codes: 0 all asserted invariants pass, 1 an invariant failed
(the failing check is named in the JSON), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .action import jacobian_check
from .bounds import all_bound_suites
from .contour import build_keyhole
from .errors import ConfigError, LoopVertexError
from .fusscatalan import FussCatalanParams, fc_eval
from .matrixcore import EnsembleSpec
from .partition import z_direct, z_lvr
from .scalarmaps import Coupling, inverse_residual
from .trees import lve_truncated_F, single_vertex_amplitude

SCHEMA_VERSION = 2

CONVENTION_LEDGER = {
    "gaussian_weight": "exp(-N Tr H^2)",
    "covariance_beta2": "E[H_ij H_kl] = delta_il delta_jk / (2N)",
    "covariance_beta1": "E[H_ij H_kl] = (delta_il delta_jk + delta_ik delta_jl) / (4N)",
    "cauchy_normalization": "1/(2 pi i) included in all contour calculus",
    "edge_factor": "1/(2N) per tree edge, matching the declared covariance",
}

COMMANDS = (
    "fc-eval",
    "maps-check",
    "contour-check",
    "z-identity",
    "free-energy",
    "lve-sum",
    "single-vertex",
    "jacobian-check",
    "verify-bounds",
    "pacman-scan",
)


@dataclass
class RunConfig:
    command: str
    p: int = 2
    lambda_modulus: float = 0.0
    lambda_arg: float = 0.0
    epsilon: float = 0.2
    N: int = 2
    beta: int = 2
    n_max: int = 2
    mc_samples: int = 20000
    quad_nodes: int = 64
    seed: int = 0
    workers: int = 1
    output_path: str = ""
    n_list: tuple[int, ...] = field(default_factory=tuple)
    z_re: float = 0.0
    z_im: float = 0.0

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.p < 2:
            raise ConfigError("p must be >= 2")
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.beta not in (1, 2):
            raise ConfigError("beta must be 1 or 2")
        if self.lambda_modulus < 0:
            raise ConfigError("lambda modulus must be >= 0")
        if not 0 < self.epsilon < np.pi:
            raise ConfigError("epsilon must lie in (0, pi)")
        if self.lambda_modulus > 0 and abs(self.lambda_arg) > np.pi - self.epsilon:
            raise ConfigError("arg lambda outside the pacman sector")
        if self.mc_samples < 1 or self.quad_nodes < 1 or self.workers < 1:
            raise ConfigError("counts must be positive")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if any(n < 1 for n in self.n_list):
            raise ConfigError("N-list entries must be >= 1")

    def coupling(self) -> Coupling:
        lam = self.lambda_modulus * np.exp(1j * self.lambda_arg)
        return Coupling(lam=lam, epsilon=self.epsilon, p=self.p)

    def ensemble(self) -> EnsembleSpec:
        return EnsembleSpec(N=self.N, beta=self.beta)


def _c2d(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _out_dir(config: RunConfig) -> str:
    if config.output_path:
        return config.output_path
    return os.environ.get("LOOPVERTEX_OUTDIR", ".")


def _write_json(config: RunConfig, payload: dict) -> str:
    os.makedirs(_out_dir(config), exist_ok=True)
    path = os.path.join(_out_dir(config), f"{config.command}.json")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "convention_ledger": CONVENTION_LEDGER,
        "inputs": {k: list(v) if isinstance(v, tuple) else v
                   for k, v in asdict(config).items()},
        **payload,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return path

def _write_csv(config: RunConfig, header: list[str], rows: list[list]) -> str:
    os.makedirs(_out_dir(config), exist_ok=True)
    path = os.path.join(_out_dir(config), f"{config.command}.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ---------------------------------------------------------------------------
# command bodies: each returns (payload dict, ok flag)


def _cmd_fc_eval(config: RunConfig):
    z = complex(config.z_re, config.z_im)
    params = FussCatalanParams(config.p)
    t = fc_eval(params, z)
    resid = abs(z * t**config.p - t + 1.0)
    ok = resid <= 1e-10 * (1.0 + abs(z * t**config.p))
    return {
        "results": {"z": _c2d(z), "T": _c2d(t), "residual": resid},
        "checks": {"functional_equation": bool(ok)},
    }, ok


def _cmd_maps_check(config: RunConfig):
    c = config.coupling()
    rng = np.random.default_rng(config.seed)
    pts = 2.0 * (rng.uniform(-1, 1, 400) + 1j * rng.uniform(-1, 1, 400))
    worst = 0.0
    for z in pts:
        worst = max(worst, abs(inverse_residual(c, complex(z))))
    ok = worst <= 1e-9
    return {
        "results": {"max_inverse_residual": worst, "n_points": len(pts)},
        "checks": {"inverse_pair_identity": bool(ok)},
    }, ok


def _cmd_contour_check(config: RunConfig):
    c = config.coupling()
    gamma = build_keyhole(2.0, c, n_nodes=max(config.quad_nodes, 64))
    rng = np.random.default_rng(config.seed)
    inner = rng.uniform(-0.4, 0.4, 100) * gamma.r
    worst_in = max(abs(gamma.cauchy(complex(a)) - 1.0) for a in inner)
    outer = 2.0 * gamma.R * np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
    worst_out = max(abs(gamma.cauchy(complex(a))) for a in outer)
    ok = worst_in <= 1e-8 and worst_out <= 1e-8
    return {
        "results": {
            "R": gamma.R,
            "r": gamma.r,
            "psi": gamma.psi,
            "n_nodes": len(gamma.nodes),
            "max_interior_defect": worst_in,
            "max_exterior_defect": worst_out,
        },
        "checks": {"cauchy_identity": bool(ok)},
    }, ok


def _cmd_z_identity(config: RunConfig):
    c = config.coupling()
    spec = config.ensemble()
    kwargs = {}
    method = "quadrature"
    if spec.N > 3:
        method = "monte_carlo"
        kwargs = {
            "n_samples": config.mc_samples,
            "seed": config.seed,
            "workers": config.workers,
        }
    direct = z_direct(c, spec, method, **kwargs)
    lvr = z_lvr(c, spec, method, **kwargs)
    gap = abs(lvr.value - direct.value) / abs(direct.value)
    if method == "quadrature":
        ok = gap <= 1e-4
    else:
        sigma = max(np.hypot(direct.error, lvr.error), 1e-300)
        ok = abs(lvr.value - direct.value) <= 3.0 * sigma
    return {
        "results": {
            "z_direct": _c2d(direct.value),
            "z_lvr": _c2d(lvr.value),
            "relative_gap": gap,
            "method": method,
            "error_direct": direct.error,
            "error_lvr": lvr.error,
        },
        "checks": {"change_of_variables": bool(ok)},
    }, ok


def _free_energy_estimate(c, spec, method, config):
    est = z_direct(
        c,
        spec,
        method,
        **(
            {"n_samples": config.mc_samples, "seed": config.seed,
             "workers": config.workers}
            if method == "monte_carlo"
            else {}
        ),
    )
    f = complex(np.log(est.value) / spec.N**2)
    err = est.error / max(abs(est.value), 1e-300) / spec.N**2
    return f, err, est


def _cmd_free_energy(config: RunConfig):
    c = config.coupling()
    spec = config.ensemble()
    method = "quadrature" if spec.N <= 3 else "monte_carlo"
    f, err, est = _free_energy_estimate(c, spec, method, config)
    ok = np.isfinite(f.real) and np.isfinite(f.imag)
    return {
        "results": {
            "free_energy": _c2d(f),
            "error": err,
            "method": method,
            "n_points": est.n_points,
        },
        "checks": {"finite": bool(ok)},
    }, ok


def _cmd_lve_sum(config: RunConfig):
    c = config.coupling()
    spec = config.ensemble()
    params = {
        "n_w": max(1, config.mc_samples // 100),
        "n_mc": 100,
        "seed": config.seed,
        "workers": config.workers,
    }
    value, err = lve_truncated_F(c, spec, config.n_max, params)
    ok = np.isfinite(err)
    return {
        "results": {"lve_truncated_F": _c2d(value), "error": err,
                    "n_max": config.n_max},
        "checks": {"finite": bool(ok)},
    }, ok


def _cmd_single_vertex(config: RunConfig):
    c = config.coupling()
    spec = config.ensemble()
    est = single_vertex_amplitude(c, spec, config.mc_samples, seed=config.seed)
    ok = np.isfinite(est.stderr)
    return {
        "results": {
            "amplitude": _c2d(est.value),
            "stderr": est.stderr,
            "a1": _c2d(est.a1),
            "a2": _c2d(est.a2),
            "n_mc_samples": est.n_mc_samples,
        },
        "checks": {"finite": bool(ok)},
    }, ok


def _cmd_jacobian_check(config: RunConfig):
    if config.lambda_arg != 0.0 or config.lambda_modulus <= 0:
        raise ConfigError("jacobian-check needs real lambda > 0")
    rng = np.random.default_rng(config.seed)
    n_fail = 0
    n_specs = 200
    for _ in range(n_specs):
        eigs = rng.uniform(-5, 5, config.N)
        report = jacobian_check(config.p, config.lambda_modulus, eigs)
        if not report["overall_positive"]:
            n_fail += 1
    ok = n_fail == 0
    return {
        "results": {"n_spectra": n_specs, "n_failures": n_fail},
        "checks": {"jacobian_positive": bool(ok)},
    }, ok


def _cmd_verify_bounds(config: RunConfig):
    reports = all_bound_suites(config.p, config.epsilon, seed=config.seed)
    rows = []
    for rep in reports:
        rows.append([
            rep.name,
            repr(rep.fitted_constant),
            "" if rep.exponent_target is None else repr(rep.exponent_target),
            "" if rep.exponent_measured is None else repr(rep.exponent_measured),
            rep.n_samples,
        ])
    csv_path = _write_csv(
        config,
        ["bound", "fitted_constant", "exponent_target", "exponent_measured",
         "n_samples"],
        rows,
    )
    ok = all(rep.holds for rep in reports)
    payload = {
        "results": {
            "csv": csv_path,
            "bounds": {
                rep.name: {
                    "fitted_constant": rep.fitted_constant,
                    "exponent_target": rep.exponent_target,
                    "exponent_measured": rep.exponent_measured,
                }
                for rep in reports
            },
        },
        "checks": {"all_bounds_hold_with_fitted_constant": bool(ok)},
    }
    return payload, ok


def _cmd_pacman_scan(config: RunConfig):
    n_values = config.n_list or tuple(range(1, 7))
    c = config.coupling()
    complex_lam = abs(np.angle(complex(c.lam))) > 1e-12 and config.lambda_modulus > 0
    rows = []
    abs_f, used_n = [], []
    for big_n in n_values:
        if complex_lam and big_n > 3:
            continue  # complex-lambda rows are quadrature-only (N <= 3)
        spec = EnsembleSpec(N=big_n, beta=config.beta)
        method = "quadrature" if big_n <= 3 else "monte_carlo"
        f, err, _ = _free_energy_estimate(c, spec, method, config)
        rows.append([big_n, repr(f.real), repr(f.imag), repr(err), method])
        abs_f.append(abs(f))
        used_n.append(big_n)
    csv_path = _write_csv(
        config, ["N", "F_re", "F_im", "error", "method"], rows
    )
    slope, slope_err = _trend(np.array(used_n, float), np.array(abs_f))
    ok = slope <= 2.0 * slope_err
    return {
        "results": {
            "csv": csv_path,
            "abs_F": dict(zip(map(str, used_n), abs_f)),
            "trend_slope": slope,
            "trend_slope_stderr": slope_err,
            "bounded_in_N": bool(ok),
        },
        "checks": {"no_growth_in_N": bool(ok)},
    }, ok


def _trend(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of y on x and its standard error."""
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(cov[0, 0]))


_BODIES = {
    "fc-eval": _cmd_fc_eval,
    "maps-check": _cmd_maps_check,
    "contour-check": _cmd_contour_check,
    "z-identity": _cmd_z_identity,
    "free-energy": _cmd_free_energy,
    "lve-sum": _cmd_lve_sum,
    "single-vertex": _cmd_single_vertex,
    "jacobian-check": _cmd_jacobian_check,
    "verify-bounds": _cmd_verify_bounds,
    "pacman-scan": _cmd_pacman_scan,
}


def _parse_n_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in text.split(",") if tok)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopvertex",
        description="Matrix-model change-of-variables and tree-expansion checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--p", type=int, default=2)
        s.add_argument("--N", type=int, default=2)
        s.add_argument("--N-list", type=str, default="")
        s.add_argument("--beta", type=int, default=2)
        s.add_argument("--lambda-modulus", type=float, default=0.0)
        s.add_argument("--lambda-arg", type=float, default=0.0)
        s.add_argument("--epsilon", type=float, default=0.2)
        s.add_argument("--n-max", type=int, default=2)
        s.add_argument("--mc-samples", type=int, default=20000)
        s.add_argument("--quad-nodes", type=int, default=64)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--output", type=str, default="")
        s.add_argument("--z-re", type=float, default=0.0)
        s.add_argument("--z-im", type=float, default=0.0)
    return parser


def config_from_args(argv: list[str]) -> RunConfig:
    args = build_parser().parse_args(argv)
    return RunConfig(
        command=args.command,
        p=args.p,
        lambda_modulus=args.lambda_modulus,
        lambda_arg=args.lambda_arg,
        epsilon=args.epsilon,
        N=args.N,
        beta=args.beta,
        n_max=args.n_max,
        mc_samples=args.mc_samples,
        quad_nodes=args.quad_nodes,
        seed=args.seed,
        workers=args.workers,
        output_path=args.output,
        n_list=_parse_n_list(args.N_list) if args.N_list else (),
        z_re=args.z_re,
        z_im=args.z_im,
    )


def run(config: RunConfig) -> int:
    try:
        config.validate()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        payload, ok = _BODIES[config.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LoopVertexError as exc:
        print(f"invariant failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        _write_json(config, {"results": {}, "checks": {type(exc).__name__: False}})
        return 1
    path = _write_json(config, payload)
    if not ok:
        failing = [k for k, v in payload.get("checks", {}).items() if not v]
        print(f"FAIL {','.join(failing)} ({path})", file=sys.stderr)
        return 1
    print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = config_from_args(argv)
    except SystemExit as exc:
        # argparse already printed a message; normalize errors to exit 2
        return 0 if exc.code in (0, None) else 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
