"""Command-line entry point.

Single binary, subcommand style.  Flag precedence is flags > config file
(--config, JSON) > built-in defaults.  Exit codes: 0 success, 1 numerical
failure, 2 usage or configuration error.  All randomness flows from --seed
(default 0); worker count comes from --threads, falling back to the
SPECTRAL_LM_THREADS environment variable, and never changes results.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .covariance import (
    QuadratureError,
    SlowlyVarying,
    ToeplitzSpec,
    build_toeplitz,
    moment_decay_table,
)
from .harness import convergence_sweep, run_clt_experiment
from .kernel import (
    boundary_check,
    compare_toeplitz_pair,
    kernel_eigs,
    toeplitz_vs_kernel_report,
)
from .reports import RunManifest, config_hash, write_csv, write_json
from .sampling import ModelConfig, get_entry_law
from .spectral import EigenSolverError, align_sign
from .spikes import (
    BracketError,
    DegenerateGapError,
    FixedPointError,
    PopulationModel,
    outside_support,
    predict_spike,
    solve_det_equiv_real,
)

NUMERICAL_ERRORS = (
    QuadratureError,
    EigenSolverError,
    BracketError,
    FixedPointError,
    ArithmeticError,
    np.linalg.LinAlgError,
)


def _positive_int_list(text):
    vals = [int(v) for v in text.split(",") if v.strip()]
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("expected comma-separated positive integers")
    return vals


def _float_list(text):
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("expected comma-separated numbers")
    return vals


def _out_base(path):
    for suffix in (".json", ".csv"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def _build_slowly_varying(args):
    kind = getattr(args, "L", None) or "constant"
    return SlowlyVarying(kind=kind, c=getattr(args, "Lc", 1.0))


def _build_toeplitz_spec(args):
    if args.rho is None:
        raise ValueError("--rho is required for Toeplitz generation; valid interval (0, 1)")
    if not 0.0 < args.rho < 1.0:
        raise ValueError(f"rho must lie strictly inside (0, 1), got {args.rho}")
    return ToeplitzSpec(
        rho=args.rho,
        slowly_varying=_build_slowly_varying(args),
        route=getattr(args, "route", "decay") or "decay",
    )


def _load_vector(path):
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip().rstrip(",")
            if not line or line.lower() in ("gamma", "c", "value"):
                continue
            vals.append(float(line))
    if not vals:
        raise ValueError(f"no values found in {path}")
    return np.array(vals)


def _diag_spectrum(args, n):
    """Explicit diagonal spectrum: listed spikes, optionally extended by a
    k^(-p) tail up to dimension n."""
    spikes = np.array(sorted(args.gamma_diag, reverse=True), dtype=float)
    tail_exp = getattr(args, "gamma_tail_exp", None)
    if tail_exp is not None:
        if n is None or n < spikes.size:
            raise ValueError("--gamma-tail-exp needs --n at least as large as the spike list")
        k = np.arange(spikes.size + 1, n + 1, dtype=float)
        spikes = np.concatenate([spikes, k**-tail_exp])
    return spikes


def _population_from_args(args):
    if getattr(args, "gamma_diag", None):
        t = _diag_spectrum(args, getattr(args, "n", None))
    else:
        if args.n is None:
            raise ValueError("--n is required when Gamma comes from a Toeplitz spec")
        spec = _build_toeplitz_spec(args)
        T = build_toeplitz(spec, args.n)
        t = np.linalg.eigvalsh(T.dense())[::-1]
        t = np.where(t < 0, 0.0, t)
    if getattr(args, "c_file", None):
        c = np.sort(_load_vector(args.c_file))[::-1]
    else:
        c = np.ones(args.N)
    return PopulationModel(c=c, t=t)


def _gamma_spec_from_args(args):
    if getattr(args, "gamma_diag", None):
        return _diag_spectrum(args, args.n)
    return _build_toeplitz_spec(args)


def _manifest(args, outputs, extra=None):
    man = RunManifest(
        command=args.command,
        seed=args.seed,
        version=__version__,
        config_path=args.config or "",
        config_digest=config_hash(extra or {}),
        outputs=outputs,
    )
    man.started = getattr(args, "_started", "")
    man._t0 = getattr(args, "_t0", None)
    return man


# ---------------------------------------------------------------------------
# subcommands


def cmd_kernel_eigs(args):
    system = kernel_eigs(args.rho_required, args.grid, args.m)
    base = _out_base(args.out)
    out_json = f"{base}.json"
    out_csv = f"{base}_functions.csv"
    payload = system.to_json()
    payload["boundary_deviation"] = boundary_check(system).tolist()
    write_json(out_json, payload)
    header = ["x"] + [f"f_{j}" for j in range(1, args.m + 1)]
    xs = system.midpoints()
    rows = [[xs[k]] + [system.functions[j, k] for j in range(args.m)] for k in range(args.grid)]
    write_csv(out_csv, header, rows)
    man = _manifest(args, [out_json, out_csv], payload["values"])
    man.write(f"{base}.manifest.json")
    return 0


def cmd_toeplitz_spectrum(args):
    spec = _build_toeplitz_spec(args)
    kernel_system = kernel_eigs(spec.rho, args.grid, args.j_max)
    rows = toeplitz_vs_kernel_report(spec, args.sizes, args.j_max, kernel_system)
    base = _out_base(args.out)
    out_csv = f"{base}.csv"
    write_csv(
        out_csv,
        ["n", "j", "eigenvalue", "ratio", "target", "sup_dev", "deloc"],
        [(r.n, r.j, r.eigenvalue, r.ratio, r.target, r.sup_dev, r.deloc) for r in rows],
    )
    outputs = [out_csv]
    if args.dump_vectors:
        n = args.sizes[-1]
        T = build_toeplitz(spec, n)
        pairs = T.top_eigenpairs(args.j_max)
        grid = np.arange(1, n + 1) / n
        vec_rows = []
        for j in range(1, args.j_max + 1):
            f_at = kernel_system.function_at(j, grid)
            u = align_sign(pairs.vectors[:, j - 1], f_at / np.linalg.norm(f_at))
            su = math.sqrt(n) * u
            vec_rows.extend(
                (n, j, k + 1, su[k], f_at[k]) for k in range(n)
            )
        out_vec = f"{base}_vectors.csv"
        write_csv(out_vec, ["n", "j", "k", "sqrt_n_u", "f_at_k_over_n"], vec_rows)
        outputs.append(out_vec)
    man = _manifest(args, outputs, spec.to_json())
    man.write(f"{base}.manifest.json")
    return 0


def cmd_compare_pair(args):
    L2 = _build_slowly_varying(args)
    rows = compare_toeplitz_pair(args.rho_required, L2, args.sizes)
    base = _out_base(args.out)
    out_csv = f"{base}.csv"
    write_csv(
        out_csv,
        ["n", "norm_diff", "u_dist_1", "u_dist_2", "u_dist_3"],
        [(r.n, r.norm_diff) + tuple(r.evec_dists[:3]) for r in rows],
    )
    man = _manifest(args, [out_csv], {"rho": args.rho_required, "L": L2.to_json()})
    man.write(f"{base}.manifest.json")
    return 0


def cmd_diagnose_moments(args):
    spec = _build_toeplitz_spec(args)
    rows = moment_decay_table(spec, args.sizes)
    base = _out_base(args.out)
    out_csv = f"{base}.csv"
    write_csv(out_csv, ["n", "sqrt_n_trace_moment_1", "sqrt_n_trace_moment_2"], rows)
    man = _manifest(args, [out_csv], spec.to_json())
    man.write(f"{base}.manifest.json")
    return 0


def cmd_theta(args):
    model = _population_from_args(args)
    preds = []
    for j in args.j:
        p = predict_spike(model, j, series_order=args.order)
        preds.append(
            {
                "j": p.j,
                "z_j": p.z,
                "theta_root": p.theta_root,
                "theta_series": p.theta_series,
                "coeffs": p.coeffs.tolist(),
                "residuals": {"G": p.g_residual, "det_equiv": p.det_equiv_residual},
            }
        )
    base = _out_base(args.out)
    out_json = f"{base}.json"
    write_json(out_json, {"predictions": preds})
    man = _manifest(args, [out_json], {"j": args.j})
    man.write(f"{base}.manifest.json")
    return 0


def cmd_det_equiv(args):
    model = _population_from_args(args)
    results = []
    for x in args.x:
        j = args.j[0]
        tj = model.t[j - 1]
        t_red = np.delete(model.t, j - 1) / tj
        sol = solve_det_equiv_real(x, model.c, t_red, n_rows=model.N)
        results.append(
            {
                "x": x,
                "j": j,
                "g_gamma": [sol.g_gamma.real, sol.g_gamma.imag],
                "g_c": [sol.g_c.real, sol.g_c.imag],
                "iterations": sol.iterations,
                "outside_support": outside_support(x, model, j),
            }
        )
    base = _out_base(args.out)
    out_json = f"{base}.json"
    write_json(out_json, {"points": results})
    man = _manifest(args, [out_json], {"x": args.x})
    man.write(f"{base}.manifest.json")
    return 0


def cmd_clt(args):
    config = ModelConfig(
        N=args.N,
        n=args.n,
        law=get_entry_law(args.law),
        m=args.m,
        c_spec="identity" if not args.c_file else np.sort(_load_vector(args.c_file))[::-1],
        gamma_spec=_gamma_spec_from_args(args),
    )
    report = run_clt_experiment(config, args.R, seed=args.seed, threads=args.threads)
    base = _out_base(args.out)
    out_json = f"{base}.json"
    out_csv = f"{base}_samples.csv"
    write_json(out_json, report.to_json())
    rows = []
    for r in range(report.samples.shape[0]):
        for j in range(config.m):
            lam_gamma = float(report.gamma_values[j])
            lam_s = lam_gamma * (report.thetas[j] + report.samples[r, j] / math.sqrt(config.N))
            rows.append((r, j + 1, lam_s, lam_gamma, report.samples[r, j]))
    write_csv(out_csv, ["rep", "j", "lambda_S", "lambda_Gamma", "Lambda"], rows)
    man = _manifest(args, [out_json, out_csv], report.to_json()["config"])
    man.write(f"{base}.manifest.json")
    return 0


def cmd_converge(args):
    law = get_entry_law(args.law)
    sizes = [(N, N) for N in args.sizes]

    def make_config(N, n):
        local = argparse.Namespace(**vars(args))
        local.N, local.n = N, n
        return ModelConfig(
            N=N,
            n=n,
            law=law,
            m=args.m,
            c_spec="identity",
            gamma_spec=_gamma_spec_from_args(local),
        )

    rows = convergence_sweep(make_config, sizes, R=args.R, seed=args.seed, threads=args.threads)
    base = _out_base(args.out)
    out_csv = f"{base}.csv"
    write_csv(
        out_csv,
        ["N", "n", "j", "median", "iqr", "target"],
        [(r.N, r.n, r.j, r.median, r.iqr, r.target) for r in rows],
    )
    man = _manifest(args, [out_csv], {"sizes": args.sizes})
    man.write(f"{base}.manifest.json")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=None, help="worker pool cap")
    p.add_argument("--config", type=str, default=None, help="JSON file with flag defaults")
    p.add_argument("--out", type=str, required=True, help="output path (base name)")


def _add_toeplitz_flags(p, require_rho=True):
    p.add_argument("--rho", type=float, default=None, help="memory exponent in (0, 1)")
    p.add_argument("--route", choices=["decay", "density"], default="decay")
    p.add_argument(
        "--L", choices=["constant", "log_growth", "log_decay"], default="constant",
        help="slowly varying factor",
    )
    p.add_argument("--Lc", type=float, default=1.0, help="constant L value")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spectral-lm",
        description="Long-memory Toeplitz spectra and spiked sample covariance laboratory",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-eigs", help="eigenpairs of the discretized power kernel")
    p.add_argument("--rho", dest="rho_required", type=float, required=True)
    p.add_argument("--grid", type=int, default=2048)
    p.add_argument("--m", type=int, default=5)
    _add_common(p)
    p.set_defaults(func=cmd_kernel_eigs)

    p = sub.add_parser("toeplitz-spectrum", help="Toeplitz eigenvalue ladder vs kernel limit")
    _add_toeplitz_flags(p)
    p.add_argument("--sizes", type=_positive_int_list, default=[512, 1024, 2048])
    p.add_argument("--j-max", dest="j_max", type=int, default=3)
    p.add_argument("--grid", type=int, default=2048, help="kernel oracle grid")
    p.add_argument("--dump-vectors", action="store_true", help="emit eigenvector overlay CSV")
    _add_common(p)
    p.set_defaults(func=cmd_toeplitz_spectrum)

    p = sub.add_parser("compare-pair", help="density-route matrices with and without L")
    p.add_argument("--rho", dest="rho_required", type=float, required=True)
    p.add_argument(
        "--L", choices=["constant", "log_growth", "log_decay"], default="log_growth"
    )
    p.add_argument("--Lc", type=float, default=1.0)
    p.add_argument("--sizes", type=_positive_int_list, default=[256, 512, 1024, 2048])
    _add_common(p)
    p.set_defaults(func=cmd_compare_pair)

    p = sub.add_parser("diagnose-moments", help="normalized trace-moment decay table")
    _add_toeplitz_flags(p)
    p.add_argument("--sizes", type=_positive_int_list, default=[256, 512, 1024])
    _add_common(p)
    p.set_defaults(func=cmd_diagnose_moments)

    p = sub.add_parser("theta", help="spike locations: root, series, cross-checks")
    _add_toeplitz_flags(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--j", type=_positive_int_list, default=[1])
    p.add_argument("--order", type=int, default=10, help="series truncation order")
    p.add_argument("--gamma-diag", dest="gamma_diag", type=_float_list, default=None)
    p.add_argument("--gamma-tail-exp", dest="gamma_tail_exp", type=float, default=None)
    p.add_argument("--c-file", dest="c_file", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("det-equiv", help="deterministic-equivalent pair on the real axis")
    _add_toeplitz_flags(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--j", type=_positive_int_list, default=[1])
    p.add_argument("--x", type=_float_list, required=True)
    p.add_argument("--gamma-diag", dest="gamma_diag", type=_float_list, default=None)
    p.add_argument("--gamma-tail-exp", dest="gamma_tail_exp", type=float, default=None)
    p.add_argument("--c-file", dest="c_file", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_det_equiv)

    p = sub.add_parser("clt", help="Monte Carlo spike-fluctuation experiment")
    _add_toeplitz_flags(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--law", type=str, default="real_gaussian")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--R", type=int, default=1000)
    p.add_argument("--gamma-diag", dest="gamma_diag", type=_float_list, default=None)
    p.add_argument("--gamma-tail-exp", dest="gamma_tail_exp", type=float, default=None)
    p.add_argument("--c-file", dest="c_file", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("converge", help="spike-ratio convergence sweep over sizes")
    _add_toeplitz_flags(p)
    p.add_argument("--sizes", type=_positive_int_list, default=[64, 128, 256, 512])
    p.add_argument("--law", type=str, default="real_gaussian")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--R", type=int, default=50)
    p.add_argument("--gamma-diag", dest="gamma_diag", type=_float_list, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_converge)

    return parser


def _apply_config(args):
    """Fill unset flags from the --config JSON file, then defaults."""
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if getattr(args, attr, None) is None:
                setattr(args, attr, value)
    if getattr(args, "seed", None) is None:
        args.seed = 0
    if getattr(args, "threads", None) is None:
        env = os.environ.get("SPECTRAL_LM_THREADS")
        args.threads = int(env) if env else None
    return args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        args._started = datetime.now(timezone.utc).isoformat()
        args._t0 = time.perf_counter()
        return args.func(args)
    except (ValueError, FileNotFoundError, DegenerateGapError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
