"""Command-line front end: build witnesses, scan thresholds, run tomography.

Exit codes: 0 success, 2 precondition violation (bad flags or inputs),
3 numerical failure (truncation leakage, non-convergence, missing sign
change).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import cv, tomography, witness_finite
from .formats import (
    batch_to_csv,
    dump_report,
    load_report,
    matrix_from_json,
    matrix_to_json,
    write_csv,
)
from .linalg import ConvergenceError, complex_svd
from .states import maximally_entangled_operator, schmidt_operator

BOUNDARY_TOL = 1e-12


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("WITNESSFORGE_SEED")
    if env is not None:
        return int(env)
    return 0


def _load_psi(args) -> np.ndarray:
    given = [bool(args.max_entangled), args.schmidt is not None,
             args.psi_file is not None]
    if sum(given) != 1:
        raise ValueError(
            "specify exactly one of --max-entangled, --schmidt, --psi-file")
    if args.max_entangled:
        return maximally_entangled_operator(args.dim)
    if args.schmidt is not None:
        coeffs = np.array([float(s) for s in args.schmidt.split(",")])
        if abs(np.sum(coeffs**2) - 1.0) > 1e-12:
            print(f"note: normalizing Schmidt coefficients (sum of squares "
                  f"was {np.sum(coeffs**2):.6g})", file=sys.stderr)
        return schmidt_operator(coeffs, args.dim)
    payload = load_report(args.psi_file)
    psi = matrix_from_json(payload["psi"])
    if psi.shape[0] != args.dim:
        raise ValueError(
            f"--dim {args.dim} does not match psi file dimension {psi.shape[0]}")
    return psi


def _emit(args, payload: dict) -> None:
    text = dump_report(payload, path=args.output)
    if args.output is None:
        sys.stdout.write(text)


def _quorum_payload(decomp) -> dict:
    terms = []
    for term in decomp.terms:
        terms.append({
            "coeff": float(term.coefficient),
            "local_a": matrix_to_json(term.local_a),
            "local_b": matrix_to_json(term.local_b),
        })
    return {"terms": terms}


def _witness_report(psi: np.ndarray, p: float) -> dict:
    svd = complex_svd(psi)
    abar = witness_finite.min_eigvec_operator(psi)
    witness = witness_finite.build_witness(abar)
    rho = witness_finite.depolarized_state(psi, p)
    trace_wr = witness_finite.evaluate_witness(witness, rho)
    lam = witness_finite.min_pt_eigenvalue(psi, p)
    return {
        "d": int(psi.shape[0]),
        "p": p,
        "sigma": [float(s) for s in svd.sigma],
        "lambda_min": lam,
        "trace_wr": trace_wr,
        "entangled": bool(trace_wr < -BOUNDARY_TOL),
        "boundary": bool(abs(trace_wr) <= BOUNDARY_TOL),
        "p_threshold": witness_finite.detection_threshold(psi),
        "quorum": _quorum_payload(witness_finite.quorum_decompose(psi)),
    }


def cmd_finite_witness(args) -> None:
    psi = _load_psi(args)
    report = _witness_report(psi, args.p)
    report["config"] = {"command": "finite-witness", "dim": args.dim,
                        "p": args.p, "psi": _psi_config(args)}
    _emit(args, report)


def _psi_config(args) -> dict:
    if args.max_entangled:
        return {"kind": "max-entangled"}
    if args.schmidt is not None:
        return {"kind": "schmidt", "coefficients": args.schmidt}
    return {"kind": "file", "path": args.psi_file}


def cmd_finite_scan(args) -> None:
    psi = _load_psi(args)
    abar = witness_finite.min_eigvec_operator(psi)
    witness = witness_finite.build_witness(abar)
    p_grid = _parse_grid(args.scan_p)
    rows = []
    for p in p_grid:
        val = witness_finite.evaluate_witness(
            witness, witness_finite.depolarized_state(psi, p))
        rows.append((float(p), val, bool(val < -BOUNDARY_TOL)))
    write_csv(args.output, ["p", "trace_wr", "entangled"], rows)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        val = witness_finite.evaluate_witness(
            witness, witness_finite.depolarized_state(psi, mid))
        lo, hi = (lo, mid) if val < 0 else (mid, hi)
    summary = {
        "config": {"command": "finite-scan", "dim": args.dim,
                   "scan_p": args.scan_p, "psi": _psi_config(args)},
        "csv": args.output,
        "p_threshold_bisection": 0.5 * (lo + hi),
        "p_threshold_closed_form": witness_finite.detection_threshold(psi),
    }
    sys.stdout.write(dump_report(summary))


def _parse_grid(spec: str) -> np.ndarray:
    try:
        start, stop, step = (float(tok) for tok in spec.split(":"))
    except Exception as exc:
        raise ValueError(f"bad grid spec {spec!r}; expected start:stop:step") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid spec {spec!r}")
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(count)


def _truncation(args, x: float) -> cv.FockTruncation:
    if args.trunc is not None:
        return cv.FockTruncation(args.trunc, x ** (2 * (args.trunc + 1)))
    return cv.FockTruncation.for_twb(x, tol=args.tol)


def cmd_cv_phase(args) -> None:
    trunc = _truncation(args, args.x)
    rho = cv.phase_noisy_twb(args.x, args.gammat, trunc)
    witness = cv.cv_witness(trunc)
    expectation = witness_finite.evaluate_witness(witness, rho)
    analytic = cv.phase_witness_expectation(args.x, args.gammat)
    report = {
        "config": {"command": "cv-phase", "x": args.x, "gamma_t": args.gammat,
                   "trunc": args.trunc, "tol": args.tol},
        "x": args.x,
        "gamma_t": args.gammat,
        "n_max": trunc.n_max,
        "tail_bound": trunc.tail_bound,
        "trace_deficit": rho.trace_deficit,
        "expectation": expectation,
        "analytic_expectation": analytic,
        "entangled": bool(expectation < -BOUNDARY_TOL),
    }
    _emit(args, report)


def cmd_cv_gauss(args) -> None:
    trunc = _truncation(args, args.x)
    if args.scan_kappa is None:
        expectation = cv.gauss_witness_expectation(args.x, args.kappa, trunc)
        report = {
            "config": {"command": "cv-gauss", "x": args.x, "kappa": args.kappa,
                       "trunc": args.trunc, "tol": args.tol},
            "x": args.x,
            "kappa": args.kappa,
            "n_max": trunc.n_max,
            "tail_bound": trunc.tail_bound,
            "trace_deficit": 0.0,
            "expectation": expectation,
            "entangled": bool(expectation < -BOUNDARY_TOL),
        }
        _emit(args, report)
        return
    if args.output is None:
        raise ValueError("--scan-kappa requires --output for the CSV")
    grid = _parse_grid(args.scan_kappa)
    rows = []
    for kappa in grid:
        val = cv.gauss_witness_expectation(args.x, float(kappa), trunc)
        rows.append((float(kappa), val, bool(val < -BOUNDARY_TOL)))
    write_csv(args.output, ["kappa", "expectation", "entangled"], rows)
    threshold = cv.gauss_separability_threshold(args.x)
    summary = {
        "config": {"command": "cv-gauss", "x": args.x,
                   "scan_kappa": args.scan_kappa, "trunc": args.trunc,
                   "tol": args.tol},
        "csv": args.output,
        "kappa_star": threshold.kappa_star,
        "analytic_comparator": threshold.analytic_comparator,
    }
    sys.stdout.write(dump_report(summary))


def cmd_gauss_scan(args) -> None:
    grid = _parse_grid(args.scan_x)
    rows = []
    for x in grid:
        th = cv.gauss_separability_threshold(float(x))
        rows.append((float(x), th.kappa_star, th.analytic_comparator))
    write_csv(args.output, ["x", "kappa_star", "analytic_comparator"], rows)
    summary = {
        "config": {"command": "gauss-scan", "scan_x": args.scan_x},
        "csv": args.output,
        "points": len(rows),
    }
    sys.stdout.write(dump_report(summary))


def _tomo_state(args):
    trunc = _truncation(args, args.x)
    if args.kappa is not None:
        base = cv.twb_state(args.x, trunc)
        if args.trunc is None:
            trunc = cv.noise_truncation(args.x, args.kappa, tol=args.tol)
        rho = cv.apply_gaussian_noise(base, args.kappa, trunc)
        label = f"gauss-twb(x={args.x},kappa={args.kappa})"
    elif args.gammat is not None:
        rho = cv.phase_noisy_twb(args.x, args.gammat, trunc)
        label = f"phase-twb(x={args.x},gamma_t={args.gammat})"
    else:
        rho = cv.twb_state(args.x, trunc)
        label = f"twb(x={args.x})"
    return rho, trunc, label


def cmd_tomo_estimate(args) -> None:
    if args.kappa is not None and args.gammat is not None:
        raise ValueError("give at most one of --gammat / --kappa")
    seed = _resolve_seed(args)
    rho, trunc, label = _tomo_state(args)
    witness = cv.cv_witness(trunc)
    direct = witness_finite.evaluate_witness(witness, rho)
    batch = tomography.sample_homodyne(rho, args.samples, seed,
                                       workers=args.workers,
                                       state_descriptor=label)
    estimate = tomography.mc_estimate_witness(batch)
    z = (estimate.mean - direct) / estimate.std_error \
        if estimate.std_error > 0 else 0.0
    report = {
        "config": {"command": "tomo-estimate", "x": args.x,
                   "gamma_t": args.gammat, "kappa": args.kappa,
                   "samples": args.samples, "seed": seed,
                   "workers": args.workers, "trunc": args.trunc,
                   "tol": args.tol, "state": label},
        "n_samples": estimate.n_samples,
        "seed": seed,
        "mean": estimate.mean,
        "std_error": estimate.std_error,
        "direct_value": direct,
        "z_score": z,
    }
    if args.batch_csv is not None:
        batch_to_csv(args.batch_csv, batch)
        report["batch_csv"] = args.batch_csv
    _emit(args, report)


def cmd_bs_squeeze(args) -> None:
    trunc = _truncation(args, args.x)
    base = cv.twb_state(args.x, trunc)
    if args.kappa > 0:
        channel_trunc = (cv.noise_truncation(args.x, args.kappa, tol=args.tol)
                         if args.trunc is None else trunc)
        noisy = cv.apply_gaussian_noise(base, args.kappa, channel_trunc)
    else:
        channel_trunc = trunc
        noisy = base
    direct = cv.gauss_witness_expectation(args.x, args.kappa, trunc)
    # |nn> scatters to single-mode level 2n on the splitter: double the room
    bs_trunc = cv.FockTruncation(2 * channel_trunc.n_max + 1,
                                 channel_trunc.tail_bound)
    mixed = cv.beam_splitter(cv.embed(noisy, bs_trunc), args.transmissivity)
    squeeze = cv.squeezing_witness(mixed.reduced(1))
    report = {
        "config": {"command": "bs-squeeze", "x": args.x, "kappa": args.kappa,
                   "transmissivity": args.transmissivity,
                   "trunc": args.trunc, "tol": args.tol},
        "x": args.x,
        "kappa": args.kappa,
        "transmissivity": args.transmissivity,
        "n_max": bs_trunc.n_max,
        "sum_mode_variance": squeeze + 0.25,
        "squeeze_witness": squeeze,
        "squeezed": bool(squeeze < -BOUNDARY_TOL),
        "witness_expectation": direct,
        "consistent": bool((squeeze < -BOUNDARY_TOL) == (direct < -BOUNDARY_TOL)),
    }
    _emit(args, report)


def _add_psi_flags(sub):
    sub.add_argument("--dim", type=int, required=True, help="subsystem dimension d")
    sub.add_argument("--max-entangled", action="store_true",
                     help="use the maximally entangled state")
    sub.add_argument("--schmidt", type=str, default=None,
                     help="comma-separated Schmidt coefficients")
    sub.add_argument("--psi-file", type=str, default=None,
                     help="JSON file with a 'psi' matrix payload")


def _add_cv_flags(sub):
    sub.add_argument("--x", type=float, required=True, help="twin-beam parameter")
    sub.add_argument("--trunc", type=int, default=None,
                     help="override Fock truncation n_max")
    sub.add_argument("--tol", type=float, default=1e-10,
                     help="truncation tail tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="witnessforge",
        description="Entanglement witnesses for depolarized and noisy "
                    "twin-beam states")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", type=str, default=None,
                        help="report path (default: stdout; scans: CSV path)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("finite-witness", help="single witness report")
    _add_psi_flags(p)
    p.add_argument("--p", type=float, required=True, help="mixing weight")
    p.set_defaults(func=cmd_finite_witness)

    p = add_parser("finite-scan", help="scan the mixing weight")
    _add_psi_flags(p)
    p.add_argument("--scan-p", type=str, default="0:1:0.02",
                   help="grid start:stop:step")
    p.set_defaults(func=cmd_finite_scan)

    p = add_parser("cv-phase", help="phase-noisy twin beam expectation")
    _add_cv_flags(p)
    p.add_argument("--gammat", type=float, required=True)
    p.set_defaults(func=cmd_cv_phase)

    p = add_parser("cv-gauss", help="amplitude-noisy twin beam expectation")
    _add_cv_flags(p)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--scan-kappa", type=str, default=None,
                   help="grid start:stop:step")
    p.set_defaults(func=cmd_cv_gauss)

    p = add_parser("gauss-scan", help="noise threshold per twin-beam parameter")
    p.add_argument("--scan-x", type=str, required=True, help="grid start:stop:step")
    p.set_defaults(func=cmd_gauss_scan)

    p = add_parser("tomo-estimate", help="Monte Carlo witness estimate")
    _add_cv_flags(p)
    p.add_argument("--gammat", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--batch-csv", type=str, default=None,
                   help="also export the raw samples")
    p.set_defaults(func=cmd_tomo_estimate)

    p = add_parser("bs-squeeze", help="beam-splitter squeezing witness")
    _add_cv_flags(p)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--transmissivity", type=float, default=0.5)
    p.set_defaults(func=cmd_bs_squeeze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (cv.TruncationError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
