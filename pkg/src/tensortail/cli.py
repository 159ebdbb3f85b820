"""Batch front-end: run property suites, verify bounds, print bound tables.

Exit codes form a stable contract: 0 on success, 1 on a scientific
failure (a violated bound or a failed property), 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

from . import bounds as bounds_mod
from . import montecarlo
from .bounds import BoundParams
from .config import ConfigError, ExperimentConfig, default_config
from .ensembles import compute_params
from .selftest import run_selftest

_BOUND_TAGS = {
    "gaussian": lambda p, th, args: bounds_mod.gaussian_series_bound(
        p, th, two_sided=args.two_sided
    ),
    "chernoff1-upper": lambda p, th, args: bounds_mod.chernoff_i_upper(p, th),
    "chernoff1-lower": lambda p, th, args: bounds_mod.chernoff_i_lower(p, th),
    "chernoff2-upper": lambda p, th, args: bounds_mod.chernoff_ii_upper(p, th),
    "chernoff2-lower": lambda p, th, args: bounds_mod.chernoff_ii_lower(p, th),
    "bernstein-bounded": lambda p, th, args: bounds_mod.bernstein_bounded(
        p, th, args.regime
    ),
    "bernstein-subexp": lambda p, th, args: bounds_mod.bernstein_subexponential(
        p, th, args.regime
    ),
    "azuma": lambda p, th, args: bounds_mod.azuma_mcdiarmid_bound(p, th),
    "mcdiarmid": lambda p, th, args: bounds_mod.azuma_mcdiarmid_bound(p, th),
}


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad dims {text!r}: {exc}") from exc


def _params_from_args(args) -> BoundParams:
    dim_product = args.dim_product
    if args.dims:
        dims = _parse_dims(args.dims)
        dim_product = math.prod(dims)
    if dim_product is None:
        raise ConfigError("need --dims or --dim-product")
    return BoundParams(
        dim_product=dim_product,
        sigma_sq=args.sigma2,
        T=args.scale_bound,
        n=args.n,
        mu_max=args.mu_max,
        mu_min=args.mu_min,
        mu_bar_max=args.mu_bar_max,
        mu_bar_min=args.mu_bar_min,
    )


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed, instances=args.instances)
    rows = [
        {"check": r.name, "worst": r.worst, "slack": r.slack, "pass": r.ok}
        for r in results
    ]
    if args.json:
        print(json.dumps({"seed": args.seed, "checks": rows}, indent=2))
    else:
        width = max(len(r.name) for r in results)
        for r in results:
            status = "PASS" if r.ok else "FAIL"
            print(f"{r.name:<{width}}  worst={r.worst:.3e}  slack={r.slack:.1e}  {status}")
    return 0 if all(r.ok for r in results) else 1


def _load_config(args) -> ExperimentConfig:
    if args.config is None or args.config == "default":
        obj = default_config()
    else:
        with open(args.config) as fh:
            obj = json.load(fh)
    for key in ("seed", "trials", "workers"):
        override = getattr(args, key, None)
        if override is not None:
            obj[key] = override
    if obj.get("workers") is None and os.environ.get("TTB_WORKERS"):
        obj["workers"] = int(os.environ["TTB_WORKERS"])
    return ExperimentConfig.from_dict(obj)


def _write_verdict_csv(path: Path, verdicts, seed: int, config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed={seed} config_hash={config_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(["theta", "p_hat", "ci_upper", "bound", "tightness", "pass"])
        for v in verdicts:
            writer.writerow(
                [
                    repr(v.bound.theta),
                    repr(v.estimate.p_hat),
                    repr(v.estimate.ci_upper),
                    repr(v.bound.value),
                    repr(v.tightness),
                    str(v.passed).lower(),
                ]
            )


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    workers = cfg.workers or 1
    out_dir = Path(args.out_dir) if args.out_dir else Path("verify-out")
    plan = []
    for name, tag in cfg.pairings:
        spec = cfg.ensembles[name]
        params = compute_params(spec)
        grid = montecarlo.theta_grid(tag, params, points=cfg.theta_points,
                                     bound_lo=max(cfg.alpha, 1e-3))
        plan.append((name, tag, spec, params, grid))
    if args.dry_run:
        print(f"config_hash={cfg.config_hash} seed={cfg.seed} trials={cfg.trials} "
              f"workers={workers}")
        for name, tag, spec, params, grid in plan:
            print(f"{name:>12} x {tag:<20} kind={spec.kind:<18} "
                  f"theta in [{grid.min():.4g}, {grid.max():.4g}] ({grid.size} pts)")
        return 0

    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    report_rows = []
    all_pass = True
    for name, tag, spec, params, grid in plan:
        verdicts = montecarlo.verify(
            spec, tag, grid, cfg.trials, cfg.seed, workers=workers, alpha=cfg.alpha
        )
        fails = sum(1 for v in verdicts if not v.passed)
        all_pass = all_pass and fails == 0
        csv_path = out_dir / f"{name}__{tag}.csv"
        _write_verdict_csv(csv_path, verdicts, cfg.seed, cfg.config_hash)
        report_rows.append(
            {
                "ensemble": name,
                "theorem": tag,
                "points": len(verdicts),
                "fails": fails,
                "csv": str(csv_path),
            }
        )
        if not args.json:
            status = "PASS" if fails == 0 else f"FAIL({fails})"
            print(f"{name:>12} x {tag:<20} {len(verdicts):2d} points  {status}")
    report = {
        "schema": 1,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash,
        "trials": cfg.trials,
        "workers": workers,
        "wall_time_s": round(time.time() - started, 3),
        "all_pass": all_pass,
        "results": report_rows,
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2))
    if args.json:
        print(json.dumps(report, indent=2))
    return 0 if all_pass else 1


def cmd_bound(args) -> int:
    params = _params_from_args(args)
    thetas = [float(x) for x in args.theta.split(",") if x.strip()] if args.theta else [0.0]
    rows = []
    if args.tag == "chernoff-expectation":
        lo, hi = bounds_mod.chernoff_expectation_bounds(params)
        d_opt = bounds_mod.chernoff_optimal_delta()
        c = math.exp(math.exp(d_opt)) / d_opt
        rows.append({"delta_opt": d_opt, "C": c, "lower": lo, "upper": hi})
    elif args.tag == "subexp-expectation":
        rows.append({"upper": bounds_mod.subexp_expectation_upper(params)})
    elif args.tag == "norm-sandwich":
        lo, hi = bounds_mod.expectation_norm_sandwich(params)
        rows.append({"lower_on_sq": lo, "upper_on_sq": hi})
    elif args.tag in _BOUND_TAGS:
        for th in thetas:
            bv = _BOUND_TAGS[args.tag](params, th, args)
            rows.append({"theta": th, "bound": bv.value})
    else:
        raise ConfigError(
            f"unknown bound tag {args.tag!r}; known: "
            + ", ".join(sorted(list(_BOUND_TAGS) +
                        ["chernoff-expectation", "subexp-expectation", "norm-sandwich"]))
        )
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for row in rows:
            print("  ".join(f"{k}={v:.6g}" for k, v in row.items()))
    return 0


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    if args.ensemble not in cfg.ensembles:
        raise ConfigError(f"unknown ensemble {args.ensemble!r}")
    spec = cfg.ensembles[args.ensemble]
    statistic = args.statistic
    values = montecarlo.collect_statistics(
        spec, (statistic,), args.trials or cfg.trials,
        montecarlo.RngState(cfg.seed), workers=cfg.workers or 1,
    )[statistic]
    out = Path(args.out) if args.out else Path(f"{args.ensemble}__{statistic}.csv")
    with open(out, "w", newline="") as fh:
        fh.write(f"# seed={cfg.seed} config_hash={cfg.config_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", statistic])
        for i, v in enumerate(values):
            writer.writerow([i, repr(float(v))])
    print(f"wrote {values.size} draws to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensortail",
        description="Tensor tail bounds: property suites, bound tables and "
        "Monte Carlo verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_self = sub.add_parser("selftest", help="run the built-in property suites")
    p_self.add_argument("--seed", type=int, default=20260810)
    p_self.add_argument("--instances", type=int, default=100)
    p_self.add_argument("--json", action="store_true")
    p_self.set_defaults(func=cmd_selftest)

    p_verify = sub.add_parser("verify", help="verify bounds against sampled tails")
    p_verify.add_argument("--config", help="path to a JSON config, or 'default'")
    p_verify.add_argument("--seed", type=int)
    p_verify.add_argument("--trials", type=int)
    p_verify.add_argument("--workers", type=int)
    p_verify.add_argument("--out-dir")
    p_verify.add_argument("--json", action="store_true")
    p_verify.add_argument("--dry-run", action="store_true")
    p_verify.set_defaults(func=cmd_verify)

    p_bound = sub.add_parser("bound", help="print analytic bound values")
    p_bound.add_argument("tag")
    p_bound.add_argument("--dims", help="comma-separated row mode sizes")
    p_bound.add_argument("--dim-product", type=int)
    p_bound.add_argument("--sigma2", type=float, default=0.0)
    p_bound.add_argument("--scale-bound", "-T", dest="scale_bound", type=float, default=1.0)
    p_bound.add_argument("--n", type=int, default=1)
    p_bound.add_argument("--mu-max", type=float, default=0.0)
    p_bound.add_argument("--mu-min", type=float, default=0.0)
    p_bound.add_argument("--mu-bar-max", type=float, default=0.0)
    p_bound.add_argument("--mu-bar-min", type=float, default=0.0)
    p_bound.add_argument("--theta", help="comma-separated thresholds")
    p_bound.add_argument("--two-sided", action="store_true")
    p_bound.add_argument("--regime", default="general",
                         choices=["auto", "general", "small", "large"])
    p_bound.add_argument("--json", action="store_true")
    p_bound.set_defaults(func=cmd_bound)

    p_sample = sub.add_parser("sample", help="dump raw statistic draws")
    p_sample.add_argument("--config", help="path to a JSON config, or 'default'")
    p_sample.add_argument("--ensemble", required=True)
    p_sample.add_argument("--statistic", default="lambda_max_sum",
                          choices=list(montecarlo.TAIL_STATISTICS))
    p_sample.add_argument("--trials", type=int)
    p_sample.add_argument("--seed", type=int)
    p_sample.add_argument("--workers", type=int)
    p_sample.add_argument("--out")
    p_sample.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
