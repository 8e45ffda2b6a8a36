"""Command-line front end.

Every subcommand writes one CSV artifact plus ``<output>.meta.json`` holding
the resolved config, the package version and the wall time. Numeric CSV
content depends only on the config and seed, so reruns are byte-identical.

Failures print a single line ``error[<category>]: <message>`` to stderr,
with category one of config, truncation, numeric.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, INTERFACE_VERSION
from .config import SUBCOMMANDS, RunConfig, build_state, load_config, parse_config, state_hash
from .errors import ConfigError, HusimiTomoError, NumericError
from .inverse import divergence_scan
from .kernel import SERIES_Y_MAX, kernel_closed, kernel_series, shifted_argument
from .quadrature import sample_eht
from .states import PhasePoint, husimi_direct_grid, make_coherent_state, make_number_state
from .transform import (
    ScalarField,
    coherent_identity_check,
    hermite_gaussian_moment_check,
    husimi_kernel_field,
    husimi_mc_field,
    radon_wigner_check,
)

EXIT_CODES = {"config": 2, "truncation": 3, "numeric": 4}

COMPARE_TOL = 1e-5
COHERENT_TOL = 1e-6
MOMENT_REL_TOL = 1e-8
MOMENT_ABS_TOL = 1e-9
RADON_TOL = 1e-6

RADON_POINTS = ((0.0, 0.0), (0.7, 1.0), (math.pi / 3, -1.5), (2.0, 0.4), (4.5, 2.2))
MOMENT_YS = (0.0, 0.5, 1.0, 1.5, 2.0)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_field(path: Path, fld: ScalarField) -> None:
    _write_csv(path, ("q", "p", "value"), fld.rows())


def _grid_field(cfg: RunConfig, values) -> ScalarField:
    g = cfg.grid
    return ScalarField(g.q_min, g.q_max, g.p_min, g.p_max, g.nq, g.np, values)


# ---------------------------------------------------------------------------
# Subcommands; each returns (extra metadata, exit status)
# ---------------------------------------------------------------------------


def _husimi_direct(cfg, out, args):
    rho = build_state(cfg.state)
    g = cfg.grid
    q = np.linspace(*g.q_range, g.nq)
    p = np.linspace(*g.p_range, g.np)
    _write_field(out, _grid_field(cfg, husimi_direct_grid(rho, q, p)))
    return {}, 0


def _husimi_kernel(cfg, out, args):
    rho = build_state(cfg.state)
    g = cfg.grid
    fld = husimi_kernel_field(rho, g.q_range, g.p_range, g.nq, g.np, cfg.scheme)
    _write_field(out, fld)
    meta = {}
    if args.compare:
        direct = husimi_direct_grid(rho, fld.q, fld.p)
        diff = float(np.max(np.abs(fld.values - direct)))
        meta["compare"] = {"max_abs_diff": diff, "tolerance": COMPARE_TOL}
        if diff > COMPARE_TOL:
            raise NumericError(
                f"kernel transform differs from direct Husimi by {diff:.3g} > {COMPARE_TOL:g}"
            )
    return meta, 0


def _husimi_mc(cfg, out, args):
    rho = build_state(cfg.state)
    g = cfg.grid
    samples = sample_eht(rho, cfg.n_samples, cfg.seed, threads=cfg.threads)
    mean, err = husimi_mc_field(samples, g.q_range, g.p_range, g.nq, g.np)
    _write_field(out, mean)
    err_path = out.with_name(out.stem + ".stderr" + out.suffix)
    _write_field(err_path, err)
    return {"stderr_path": str(err_path)}, 0


def _sample(cfg, out, args):
    rho = build_state(cfg.state)
    samples = sample_eht(rho, cfg.n_samples, cfg.seed, threads=cfg.threads)
    _write_csv(out, ("theta", "x"), zip(samples.theta.tolist(), samples.x.tolist()))
    return {}, 0


def _kernel_eval(cfg, out, args):
    k = cfg.kernel_eval
    pt = PhasePoint(k.q, k.p)
    rows = []
    for theta in np.linspace(k.theta_min, k.theta_max, k.n_theta):
        for x in np.linspace(k.x_min, k.x_max, k.n_x):
            closed = kernel_closed(pt, theta, x)
            if abs(shifted_argument(pt, theta, x)) <= SERIES_Y_MAX:
                series = kernel_series(pt, theta, x, k.k_max)
                diff = abs(closed - series)
            else:
                series = diff = math.nan
            rows.append((float(theta), float(x), closed, series, diff))
    _write_csv(out, ("theta", "x", "M_closed", "M_series", "abs_diff"), rows)
    return {}, 0


def _random_amplitudes(rng, n, r_max):
    r = r_max * np.sqrt(rng.random(n))
    phi = 2 * math.pi * rng.random(n)
    return r * np.exp(1j * phi)


def _check_identities(cfg, out, args):
    rows = []
    rng = np.random.default_rng(cfg.seed)
    zs = _random_amplitudes(rng, cfg.checks.n_pairs, cfg.checks.max_amplitude)
    ws = _random_amplitudes(rng, cfg.checks.n_pairs, cfg.checks.max_amplitude)
    for z, w in zip(zs, ws):
        res = coherent_identity_check(z, w, cfg.scheme)
        rows.append(("coherent_identity", f"z={z:.6f};w={w:.6f}", res, COHERENT_TOL))
    for k in range(11):
        for y in MOMENT_YS:
            tol = MOMENT_ABS_TOL if (y == 0 and k > 0) else MOMENT_REL_TOL
            rows.append(("hermite_gaussian_moment", f"k={k};y={y}", hermite_gaussian_moment_check(k, y), tol))
    dim = cfg.state["dim"]
    states = {
        "vacuum": make_number_state(0, dim),
        "number1": make_number_state(1, dim),
        "coherent1": make_coherent_state(1.0, dim),
    }
    for name, rho in states.items():
        for theta, x in RADON_POINTS:
            res = radon_wigner_check(rho, theta, x)
            rows.append(("radon_wigner", f"{name};theta={theta:.6f};x={x}", res, RADON_TOL))

    _write_csv(
        out,
        ("check", "case", "value", "threshold", "pass"),
        [(c, case, float(v), float(t), "yes" if v <= t else "no") for c, case, v, t in rows],
    )
    summary = {}
    for check, _, v, t in rows:
        s = summary.setdefault(check, {"max_residual": 0.0, "threshold": t, "failures": 0})
        s["max_residual"] = max(s["max_residual"], float(v))
        s["failures"] += int(v > t)
    for check, s in summary.items():
        status = "PASS" if s["failures"] == 0 else "FAIL"
        print(f"{status} {check}: max residual {s['max_residual']:.3e} ({s['failures']} failures)")
    failed = sum(s["failures"] for s in summary.values())
    if failed:
        raise NumericError(f"{failed} identity check(s) exceeded their thresholds")
    return {"summary": summary}, 0


def _inverse_divergence(cfg, out, args):
    inv = cfg.inverse
    try:
        scan = divergence_scan(inv.theta, inv.x, inv.u, inv.v, list(inv.radii))
    except ValueError as exc:
        raise ConfigError(f"inverse: {exc}") from exc
    resid = scan.growth_residual()
    _write_csv(
        out,
        ("R", "magnitude", "log_magnitude_minus_half_R_squared"),
        zip(scan.radii.tolist(), scan.magnitudes.tolist(), resid.tolist()),
    )
    return {}, 0


_HANDLERS = {
    "husimi-direct": _husimi_direct,
    "husimi-kernel": _husimi_kernel,
    "husimi-mc": _husimi_mc,
    "sample": _sample,
    "kernel-eval": _kernel_eval,
    "check-identities": _check_identities,
    "inverse-divergence": _inverse_divergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="husimi-tomo",
        description="Husimi function from homodyne tomography statistics via the Dawson-derivative kernel.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"husimi-tomo {__version__} (interface {INTERFACE_VERSION})",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("-c", "--config", help="YAML run configuration")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("-o", "--output", help="override the output CSV path")
    parser.add_argument("--threads", type=int, help="cap on worker threads (default: all cores)")
    parser.add_argument(
        "--compare",
        action="store_true",
        help="husimi-kernel: also evaluate the direct Husimi function and fail on disagreement",
    )
    return parser


def run(cfg: RunConfig, args=None) -> int:
    """Execute one configured run; writes the CSV and its metadata sidecar."""
    if args is None:
        args = argparse.Namespace(compare=False)
    out = Path(cfg.output_path)
    start = time.perf_counter()
    extra, status = _HANDLERS[cfg.subcommand](cfg, out, args)
    meta = {
        "version": __version__,
        "interface_version": INTERFACE_VERSION,
        "config": cfg.resolved(),
        "state_hash": state_hash(cfg.state),
        "wall_time_s": time.perf_counter() - start,
        **extra,
    }
    with open(out.with_name(out.name + ".meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = dict(subcommand=args.subcommand, seed=args.seed, output=args.output, threads=args.threads)
        if args.config:
            cfg = load_config(args.config, **overrides)
        else:
            cfg = parse_config({}, **overrides)
        return run(cfg, args)
    except HusimiTomoError as exc:
        print(f"error[{exc.category}]: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_CODES[exc.category]
    except (ValueError, ArithmeticError) as exc:
        print(f"error[numeric]: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_CODES["numeric"]


if __name__ == "__main__":
    sys.exit(main())
