"""Command-line verification sweeps and tilted sampling runs.

Three subcommands share one config format: ``verify-denoiser`` and
``verify-score`` sweep a (u, sigma) grid comparing the shift-identity
routes against the quadrature oracle, ``sample`` draws from the tilted
density and compares sample moments against the exact tilted mixture.

Exit codes: 0 every checked tolerance held, 1 usage or config error,
2 at least one tolerance violated.  Report bodies are deterministic
(floats via repr, fixed row order, LF newlines): rerunning with the same
config and seed produces byte-identical CSVs.  Timestamps live only in
the ``.meta.json`` sidecar.
"""

import argparse
import dataclasses
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import load_experiment_config
from .errors import ConfigError
from .mixtures import mixture_log_density, mixture_moments, tilted_mixture
from .models import MixtureScoreModel
from .oracle import fd_gradient, mc_moments, quad_denoiser, quad_marginal_logq
from .sampler import sample_tilted
from .tilt import TiltParams, linear_tilt_score, tilted_score, tilted_score_unreduced, tilted_denoiser

DENOISER_TOL = 1e-6  # absolute, against the quadrature posterior mean
SCORE_FD_TOL = 1e-5  # relative, against the finite-difference oracle
# Pinned algebraic-identity tolerances; --tolerance does not touch these.
SCORE_FORM_TOL = 1e-10
SCORE_LINEAR_TOL = 1e-12


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser():
    parser = _Parser(
        prog="tiltedscore",
        description="Verify tilted score/denoiser identities and sample tilted densities.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    specs = (
        (
            "verify-denoiser",
            "compare the shift-identity denoiser against the quadrature posterior mean",
        ),
        (
            "verify-score",
            "compare the tilted score against a finite-difference oracle and its alternate forms",
        ),
        (
            "sample",
            "draw from the tilted density and compare moments against the exact tilted mixture",
        ),
    )
    for name, help_text in specs:
        cmd = sub.add_parser(name, help=help_text, description=help_text)
        cmd.add_argument("--config", required=True, help="path to a JSON experiment config")
        cmd.add_argument(
            "--tolerance",
            type=float,
            default=None,
            help="override the command's default pass/fail tolerance",
        )
        cmd.add_argument(
            "--seed", type=int, default=None, help="override the config's sampling seed"
        )
        cmd.add_argument(
            "--out", default=None, help="override the config's output path (CSV report)"
        )
    return parser


def _cell(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_meta(out, command, cfg, summary, tolerance, seed):
    meta_path = f"{out}.meta.json"
    _write_json(
        meta_path,
        {
            "command": command,
            "tolerance": tolerance,
            "seed": seed,
            "summary": summary,
            "config": cfg.to_dict(),
            "generated_at": datetime.now(timezone.utc).isoformat(),
        },
    )
    return meta_path


def _verification_inputs(cfg, command):
    if cfg.quadrature is None:
        raise ConfigError("quadrature", f"{command} needs a quadrature section")
    for i, sigma in enumerate(cfg.sigma_grid):
        if not 0.0 < sigma < 1.0:
            raise ConfigError(
                f"sigma_grid[{i}]",
                f"oracle verification needs sigma strictly inside (0, 1), got {sigma}",
            )
    model = MixtureScoreModel(cfg.base_model)
    tilted = tilted_mixture(cfg.base_model, cfg.tilt)

    def log_density(points):
        return mixture_log_density(tilted, points)

    return model, log_density


def _errors(lhs, rhs):
    diff = np.abs(lhs - rhs)
    return float(np.max(diff)), float(np.max(diff / np.maximum(1.0, np.abs(rhs))))


def cmd_verify_denoiser(cfg, tolerance, out):
    tol = DENOISER_TOL if tolerance is None else float(tolerance)
    model, log_density = _verification_inputs(cfg, "verify-denoiser")
    d = cfg.base_model.dim
    u_points = cfg.u_grid.points()
    rows = []
    max_abs = max_rel = 0.0
    for sigma in cfg.sigma_grid:
        sigma = float(sigma)
        for u in u_points:
            lhs = tilted_denoiser(model, u, sigma, cfg.tilt)
            rhs = quad_denoiser(log_density, u, sigma, cfg.quadrature)
            abs_err, rel_err = _errors(lhs, rhs)
            max_abs = max(max_abs, abs_err)
            max_rel = max(max_rel, rel_err)
            rows.append([*u, sigma, *lhs, *rhs, abs_err, rel_err])
    header = (
        [f"u_{j}" for j in range(d)]
        + ["sigma"]
        + [f"g_shift_{j}" for j in range(d)]
        + [f"g_oracle_{j}" for j in range(d)]
        + ["abs_err", "rel_err"]
    )
    _write_csv(out, header, rows)
    passed = max_abs <= tol
    summary = {
        "rows": len(rows),
        "max_abs_err": max_abs,
        "max_rel_err": max_rel,
        "passed": passed,
    }
    meta_path = _write_meta(out, "verify-denoiser", cfg, summary, tol, None)
    status = "PASS" if passed else "FAIL"
    print(
        f"verify-denoiser: {len(rows)} rows  max_abs_err={max_abs:.3e}  "
        f"max_rel_err={max_rel:.3e}  tolerance={tol:g}  {status}"
    )
    print(f"wrote {out} and {meta_path}")
    return 0 if passed else 2


def cmd_verify_score(cfg, tolerance, out):
    fd_tol = SCORE_FD_TOL if tolerance is None else float(tolerance)
    model, log_density = _verification_inputs(cfg, "verify-score")
    d = cfg.base_model.dim
    u_points = cfg.u_grid.points()
    linear_tilt = TiltParams(v=cfg.tilt.v, s=0.0)
    rows = []
    group_max = {"fd_oracle": 0.0, "form_equivalence": 0.0, "linear_reduction": 0.0}
    for sigma in cfg.sigma_grid:
        sigma = float(sigma)

        def logq(point, _sigma=sigma):
            return quad_marginal_logq(log_density, point, _sigma, cfg.quadrature)

        for u in u_points:
            identity = tilted_score(model, u, sigma, cfg.tilt)
            comparisons = (
                ("fd_oracle", identity, fd_gradient(logq, u)),
                ("form_equivalence", identity, tilted_score_unreduced(model, u, sigma, cfg.tilt)),
                (
                    "linear_reduction",
                    tilted_score(model, u, sigma, linear_tilt),
                    linear_tilt_score(model, u, sigma, cfg.tilt.v),
                ),
            )
            for name, lhs, rhs in comparisons:
                abs_err, rel_err = _errors(lhs, rhs)
                group_max[name] = max(group_max[name], rel_err)
                rows.append([name, *u, sigma, *lhs, *rhs, abs_err, rel_err])
    header = (
        ["comparison"]
        + [f"u_{j}" for j in range(d)]
        + ["sigma"]
        + [f"lhs_{j}" for j in range(d)]
        + [f"rhs_{j}" for j in range(d)]
        + ["abs_err", "rel_err"]
    )
    _write_csv(out, header, rows)
    tols = {
        "fd_oracle": fd_tol,
        "form_equivalence": SCORE_FORM_TOL,
        "linear_reduction": SCORE_LINEAR_TOL,
    }
    passed = all(group_max[name] <= tols[name] for name in group_max)
    summary = {
        "rows": len(rows),
        "max_rel_err": {name: group_max[name] for name in group_max},
        "tolerances": tols,
        "passed": passed,
    }
    meta_path = _write_meta(out, "verify-score", cfg, summary, fd_tol, None)
    for name in ("fd_oracle", "form_equivalence", "linear_reduction"):
        status = "PASS" if group_max[name] <= tols[name] else "FAIL"
        print(
            f"verify-score[{name}]: max_rel_err={group_max[name]:.3e}  "
            f"tolerance={tols[name]:g}  {status}"
        )
    print(f"wrote {out} and {meta_path}")
    return 0 if passed else 2


def cmd_sample(cfg, tolerance, seed, out):
    if cfg.sampler is None:
        raise ConfigError("sampler", "the sample command needs a sampler section")
    sampler_cfg = cfg.sampler if seed is None else dataclasses.replace(cfg.sampler, seed=seed)
    model = MixtureScoreModel(cfg.base_model)
    start = time.perf_counter()
    samples = sample_tilted(model, cfg.tilt, sampler_cfg)
    elapsed = time.perf_counter() - start
    d = model.dim
    _write_csv(
        out,
        ["sample_index"] + [f"x_{j}" for j in range(d)],
        ([i, *samples[i]] for i in range(samples.shape[0])),
    )
    summary = mc_moments(samples)
    exact_mean, exact_cov = mixture_moments(tilted_mixture(cfg.base_model, cfg.tilt))
    mean_err = float(np.max(np.abs(summary.mean - exact_mean)))
    cov_err = float(np.max(np.abs(summary.cov - exact_cov)))
    passed = tolerance is None or max(mean_err, cov_err) <= tolerance
    moments_path = f"{out}.moments.json"
    _write_json(
        moments_path,
        {
            "n_samples": sampler_cfg.n_samples,
            "seed": sampler_cfg.seed,
            "mode": sampler_cfg.mode,
            "sample_mean": summary.mean.tolist(),
            "sample_cov": summary.cov.tolist(),
            "se_mean": summary.se_mean.tolist(),
            "analytic_mean": exact_mean.tolist(),
            "analytic_cov": exact_cov.tolist(),
            "max_mean_abs_err": mean_err,
            "max_cov_abs_err": cov_err,
        },
    )
    meta_summary = {
        "n_samples": sampler_cfg.n_samples,
        "max_mean_abs_err": mean_err,
        "max_cov_abs_err": cov_err,
        "elapsed_seconds": elapsed,
        "passed": passed,
    }
    meta_path = _write_meta(out, "sample", cfg, meta_summary, tolerance, sampler_cfg.seed)
    gate = f"tolerance={tolerance:g}  {'PASS' if passed else 'FAIL'}" if tolerance is not None else "no tolerance check"
    print(
        f"sample: {sampler_cfg.n_samples} draws in {elapsed:.1f}s  "
        f"max_mean_err={mean_err:.3e}  max_cov_err={cov_err:.3e}  {gate}"
    )
    print(f"wrote {out}, {moments_path} and {meta_path}")
    return 0 if passed else 2


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_experiment_config(args.config)
        out = args.out if args.out is not None else cfg.output_path
        if args.command == "verify-denoiser":
            return cmd_verify_denoiser(cfg, args.tolerance, out)
        if args.command == "verify-score":
            return cmd_verify_score(cfg, args.tolerance, out)
        return cmd_sample(cfg, args.tolerance, args.seed, out)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
