"""Command-line entry points: simulate, estimate, mc-table.

All file outputs are CSV with header rows and shortest round-trip float
formatting, plus JSON for structured reports.  Every run is reproducible from
the configured seeds alone.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .bases import collection, domain_from_data, max_dimension
from .config import (ConfigError, RunConfig, dump_config, plans_from_config,
                     resolve_config)
from .harness import (PRICE_STREAM, VOL_STREAM, HarnessError, derive_rng,
                      merge_reports, run_table)
from .lsq import evaluate
from .quadvar import DIFF_SQ, DRIFT, build_regression, quad_var
from .sampling import ObservationSet, generate_observations, integrate_blocks, \
    simulate_fine_path
from .selection import full_estimation

N_CURVE_POINTS = 512
N_FIGURE_REPS = 20


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _fmt(x):
    return repr(float(x))


def _stream(explicit_seed, base_seed, purpose):
    if explicit_seed is not None:
        return np.random.default_rng(np.random.SeedSequence([int(explicit_seed)]))
    return derive_rng(base_seed, purpose, 0)


def _load_config(args) -> RunConfig:
    """Resolve precedence: preset defaults < config file < CLI flags."""
    from fractions import Fraction

    raw = {}
    if args.config:
        text = Path(args.config).read_text()
        try:
            raw = json.loads(text, parse_float=Fraction)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"syntax error: {exc.msg}", line=exc.lineno) from None
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object", line=1)
    if args.preset:
        raw["preset"] = args.preset
    elif not args.config and "preset" not in raw:
        raw["preset"] = "desk"
    if args.seed is not None:
        raw.setdefault("seeds", {})["base"] = args.seed
    if args.basis:
        raw.setdefault("basis", {})["family"] = args.basis
    if args.k is not None:
        raw.setdefault("sampling", {})["k"] = args.k
    return resolve_config(raw)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--preset", choices=["desk", "table1", "table2"],
                   help="named preset; config values override it")
    p.add_argument("--seed", type=int, metavar="N", help="base seed override")
    p.add_argument("--out", metavar="DIR", default="stovol-out",
                   help="output directory (created if missing)")
    p.add_argument("--basis", choices=["trig", "gp"], help="basis family override")
    p.add_argument("--k", type=int, metavar="N",
                   help="increments per quadratic-variation block")
    p.add_argument("--dump-config", action="store_true",
                   help="print the resolved configuration and exit")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stovol",
        description="Estimate the drift and squared diffusion of a latent "
                    "volatility process from discrete price observations.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a volatility path and "
                                            "its price increments")
    _add_common(p_sim)

    p_est = sub.add_parser("estimate", help="estimate drift and squared "
                                            "diffusion from observations")
    _add_common(p_est)
    p_est.add_argument("--input", metavar="CSV",
                       help="observation file (header l,dX); simulated if absent")
    p_est.add_argument("--target", choices=["b", "sigma2", "both"], default="both")

    p_mc = sub.add_parser("mc-table", help="run the Monte Carlo error table")
    _add_common(p_mc)
    p_mc.add_argument("--workers", type=int, metavar="N",
                      help="worker processes (capped by STOVOL_WORKERS)")
    return ap


def _cmd_simulate(cfg: RunConfig, out: Path) -> int:
    plan = plans_from_config(cfg)[0]
    model = plan.build_model()
    rng_vol = _stream(cfg.seed_volatility, cfg.seed_base, VOL_STREAM)
    rng_price = _stream(cfg.seed_price, cfg.seed_base, PRICE_STREAM)
    path = simulate_fine_path(model, plan.fine_step, plan.n_fine, rng_vol)
    integ = integrate_blocks(path, plan.ratio)
    obs = generate_observations(integ, rng_price)

    coarse = path.values[:: plan.ratio]
    ts = np.arange(coarse.size) * plan.obs_step
    _write_csv(out / "path.csv", ["t", "V"],
               ((_fmt(t), _fmt(v)) for t, v in zip(ts, coarse)))
    _write_csv(out / "observations.csv", ["l", "dX"],
               ((i + 1, _fmt(dx)) for i, dx in enumerate(obs.increments)))
    print(f"wrote {out/'path.csv'} and {out/'observations.csv'} "
          f"(n={obs.n_increments}, delta={plan.obs_step})")
    return 0


def _read_observations(path: Path, step: float) -> ObservationSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0][:2]] != ["l", "dX"]:
        raise HarnessError(f"{path}: expected a CSV with header l,dX")
    inc = np.array([float(r[1]) for r in rows[1:] if r], dtype=float)
    return ObservationSet(step=step, increments=inc)


def _cmd_estimate(cfg: RunConfig, out: Path, args) -> int:
    plan = plans_from_config(cfg)[0]
    k = plan.ks[0]
    if args.input:
        obs = _read_observations(Path(args.input), plan.obs_step)
    else:
        model = plan.build_model()
        rng_vol = _stream(cfg.seed_volatility, cfg.seed_base, VOL_STREAM)
        rng_price = _stream(cfg.seed_price, cfg.seed_base, PRICE_STREAM)
        path = simulate_fine_path(model, plan.fine_step, plan.n_fine, rng_vol)
        obs = generate_observations(integrate_blocks(path, plan.ratio), rng_price)

    qv = quad_var(obs, k)
    domain = domain_from_data(qv, cfg.q_lo, cfg.q_hi)
    cap = cfg.basis_max_dim or max_dimension(qv.n_blocks, qv.block_span)
    coll = collection(plan.basis_family, cap, cfg.basis_r_max)
    est = full_estimation(qv, coll, domain, kappa=cfg.kappa,
                          mode=cfg.penalty_mode, sigma1_sq=cfg.sigma1_sq)

    _write_csv(out / "qv.csv", ["i", "qv"],
               ((i, _fmt(v)) for i, v in enumerate(qv.values)))
    wanted = {"b": (DRIFT,), "sigma2": (DIFF_SQ,), "both": (DRIFT, DIFF_SQ)}[args.target]
    outcome_of = {DRIFT: est.drift, DIFF_SQ: est.diff_sq}
    for target in wanted:
        outcome = outcome_of[target]
        sample = build_regression(qv, target, domain)
        _write_csv(out / f"sample_{target}.csv", ["i", "x", "y"],
                   ((i, _fmt(x), _fmt(y)) for i, (x, y)
                    in enumerate(zip(sample.x, sample.y))))
        _write_csv(out / f"trace_{target}.csv",
                   ["family", "dim", "contrast", "penalty", "criterion", "chosen"],
                   ((row.spec.family, row.spec.dim, _fmt(row.contrast),
                     _fmt(row.penalty), _fmt(row.criterion),
                     int(row.spec == outcome.chosen)) for row in outcome.table))
        grid = np.linspace(domain.lo, domain.hi, N_CURVE_POINTS)
        fhat = evaluate(outcome.chosen_fit, grid)
        _write_csv(out / f"curve_{target}.csv", ["v", "fhat"],
                   ((_fmt(v), _fmt(f)) for v, f in zip(grid, fhat)))
    summary = {
        "k": k,
        "n_blocks": qv.n_blocks,
        "domain": [domain.lo, domain.hi],
        "chosen": {t: {"family": outcome_of[t].chosen.family,
                       "dim": outcome_of[t].chosen.dim} for t in wanted},
        "calibration": {
            "prelim_s2_sq": est.calibration.prelim_s2_sq,
            "quantile_value": est.calibration.quantile_value,
            "final_s2_sq": est.calibration.final_s2_sq,
            "s1_sq": est.calibration.s1_sq,
            "degenerate": est.calibration.degenerate,
        },
    }
    (out / "estimate.json").write_text(json.dumps(summary, indent=2))
    print(f"wrote estimation outputs to {out} "
          f"(chosen dims: {summary['chosen']})")
    return 0


def _cmd_mc_table(cfg: RunConfig, out: Path, args) -> int:
    plans = plans_from_config(cfg, collect_curves=N_FIGURE_REPS)
    t0 = time.perf_counter()
    reports = [run_table(plan, workers=args.workers) for plan in plans]
    report = reports[0] if len(reports) == 1 else merge_reports(reports)
    elapsed = time.perf_counter() - t0

    (out / "report.json").write_text(report.to_json())
    rows = report.csv_rows()
    _write_csv(out / "report.csv", rows[0], rows[1:])
    for (model, basis, k), bundles in report.curves.items():
        for target, key in (("b", "drift"), ("sigma2", "diff_sq")):
            fname = out / f"curves_{model}_{basis}_k{k}_{target}.csv"
            def rows_iter():
                for bundle in bundles:
                    for v, fh, tr in zip(bundle["v"], bundle[key],
                                         bundle[f"true_{key}"]):
                        yield (bundle["rep"], _fmt(v), _fmt(fh), _fmt(tr))
            _write_csv(fname, ["rep", "v", "fhat", "truth"], rows_iter())
    print(f"wrote {out/'report.json'} and {out/'report.csv'}", file=sys.stderr)
    print(f"elapsed: {elapsed:.1f}s", file=sys.stderr)
    for line in report.csv_rows()[1:]:
        print(",".join(line))
    return 0


def run_cli(argv=None) -> int:
    """Entry point; returns the process exit status."""
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # --help or usage error
        return int(exc.code or 0)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": "config", "message": str(exc),
                          "key": getattr(exc, "key", None),
                          "line": getattr(exc, "line", None)}), file=sys.stderr)
        return 2
    if args.dump_config:
        print(dump_config(cfg))
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "simulate":
            return _cmd_simulate(cfg, out)
        if args.command == "estimate":
            return _cmd_estimate(cfg, out, args)
        return _cmd_mc_table(cfg, out, args)
    except Exception as exc:
        print(json.dumps({"error": "run", "message": str(exc)}), file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
