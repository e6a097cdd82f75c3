"""Experiment driver: ``conclab <subcommand> [flags]``.

Every run writes ``<out>.csv`` (stable, byte-reproducible) and ``<out>.json``
(config echo, versions, wall time, formula identifiers, summary). Exit
status is 0 on success, 2 when a check fails, 1 on error.
"""

from __future__ import annotations

import argparse
import csv
import functools
import io
import json
import math
import platform
import sys
import time
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, bounds, calibrate, linalg, montecarlo
from .config import (ExperimentConfig, build_matrix, env_workers, load_config, parse_floats,
                     parse_grid, parse_vector)
from .distributions import RNG_SCHEME, DistSpec, SeedStream, psi2_estimate, sample
from .errors import ConclabError

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2

# streams at or above this index never collide with sampling chunks
AUX_STREAM = 1 << 62

SUBCOMMAND_DEFAULTS = {
    "hw-tail": {},
    "concentration": {"matrix": "identity:100", "t_grid": "0.5:4:8"},
    "small-ball": {"t_grid": "auto"},
    "subspace-dist": {"matrix": "coord:10,4", "t_grid": "0.5:4:8"},
    "matrix-norm": {"matrix": "identity:200", "n": 50, "K": "estimate", "check": "refutes",
                    "chunk": 16},
    "calibrate": {},
    "decoupling-check": {},
    "mgf-check": {"samples": 1_000_000, "matrix": "gaussian:8,8:3"},
    "complexify-check": {"trials": 100},
}


class CheckFailed(Exception):
    pass


def _csv(header: list[str], rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return out.getvalue()


def _resolve_K(cfg: ExperimentConfig, spec: DistSpec) -> float:
    if cfg.K == "analytic":
        return spec.K_analytic
    if cfg.K == "estimate":
        return psi2_estimate(sample(spec, 1_000_000, SeedStream(cfg.seed, AUX_STREAM)))
    return float(cfg.K)


def _domination(cfg, curve, bound_fn) -> dict:
    if cfg.check == "none":
        return {"mode": "none"}
    verdicts = calibrate.check_domination(curve, bound_fn, cfg.check)
    failed = [v.t for v in verdicts if not v.ok] if cfg.check == "holds" else \
        [v.t for v in verdicts if v.ok]
    return {"mode": cfg.check, "points": len(verdicts), "flagged_t": failed,
            "refuted": bool(failed)}


def _curve_command(cfg: ExperimentConfig, stat_fn, stat_id: str, a: np.ndarray, mode: str,
                   bound_of_t: Callable[[float], bounds.Tail], kind: bounds.BoundKind,
                   rate: dict, grid: np.ndarray):
    spec = DistSpec.parse(cfg.dist)
    curve = montecarlo.empirical_tail(
        stat_fn, grid, cfg.samples, cfg.conf, cfg.seed, mode=mode, workers=cfg.workers,
        chunk_size=cfg.chunk, statistic_id=stat_id, dist=str(spec),
        matrix_fingerprint=montecarlo.matrix_fingerprint(a))
    tails = [bound_of_t(t) for t in curve.t]
    text = curve.to_csv({"bound": [b.prob for b in tails], "bound_raw": [b.raw for b in tails]})
    dom = _domination(cfg, curve, lambda t: bound_of_t(t).prob)
    curve.metadata["rate"] = rate
    summary = {"curve": curve.to_dict(), "bound_kind": kind.value,
               "formulas": {kind.value: bounds.FORMULAS[kind]}, "domination": dom,
               "complete": curve.complete}
    return text, summary, dom.get("refuted", False)


def cmd_hw_tail(cfg):
    a = build_matrix(cfg.matrix)
    spec = DistSpec.parse(cfg.dist)
    K = _resolve_K(cfg, spec)
    hs, op = linalg.hs_norm(a), linalg.op_norm(a)
    stat = functools.partial(montecarlo.quad_form_stat, a, spec)
    text, summary, bad = _curve_command(
        cfg, stat, "quad_form", a, "abs", lambda t: bounds.hw_bound(a, K, t, cfg.c),
        bounds.BoundKind.HANSON_WRIGHT,
        {"kind": "hanson_wright", "K": K, "hs": hs, "op": op}, parse_grid(cfg.t_grid))
    summary.update(K=K, hs_norm=hs, op_norm=op)
    return text, summary, bad


def cmd_concentration(cfg):
    a = build_matrix(cfg.matrix)
    spec = DistSpec.parse(cfg.dist)
    K = _resolve_K(cfg, spec)
    hs, op = linalg.hs_norm(a), linalg.op_norm(a)
    stat = functools.partial(montecarlo.norm_stat, a, spec)
    text, summary, bad = _curve_command(
        cfg, stat, "norm", a, "abs", lambda t: bounds.concentration_bound(a, K, t, cfg.c),
        bounds.BoundKind.CONCENTRATION,
        {"kind": "concentration", "K": K, "hs": hs, "op": op}, parse_grid(cfg.t_grid))
    summary.update(K=K, hs_norm=hs, op_norm=op)
    return text, summary, bad


def cmd_small_ball(cfg):
    a = build_matrix(cfg.matrix)
    spec = DistSpec.parse(cfg.dist)
    K = _resolve_K(cfg, spec)
    y = parse_vector(cfg.y, a.shape[0])
    r_sb, tail = bounds.small_ball_bound(a, K, cfg.c)
    r_imp, _ = bounds.improved_small_ball(a, y, K, cfg.c)
    if cfg.t_grid == "auto":
        grid = np.unique([r_imp, r_sb])
    else:
        grid = parse_grid(cfg.t_grid)
    reach = max(r_sb, r_imp)
    vacuous = bounds.Tail(raw=1.0, prob=1.0, exponent=0.0)

    def bound_of_t(t):
        # P(|AX-y| < t) <= P(|AX-y| < reach) for t <= reach
        return tail if t <= reach else vacuous

    stat = functools.partial(montecarlo.small_ball_stat, a, y, spec)
    hs, op = linalg.hs_norm(a), linalg.op_norm(a)
    text, summary, bad = _curve_command(
        cfg, stat, "small_ball", a, "lower", bound_of_t, bounds.BoundKind.SMALL_BALL,
        {"kind": "small_ball", "K": K, "hs": hs, "op": op}, grid)
    summary["formulas"][bounds.BoundKind.SMALL_BALL_IMPROVED.value] = \
        bounds.FORMULAS[bounds.BoundKind.SMALL_BALL_IMPROVED]
    summary.update(K=K, radius=r_sb, improved_radius=r_imp, y_norm=float(np.linalg.norm(y)))
    return text, summary, bad


def cmd_subspace_dist(cfg):
    basis = build_matrix(cfg.matrix)
    spec = DistSpec.parse(cfg.dist)
    K = _resolve_K(cfg, spec)
    stat = functools.partial(montecarlo.dist_subspace_stat, basis, spec)
    text, summary, bad = _curve_command(
        cfg, stat, "dist_subspace", basis, "abs", lambda t: bounds.subspace_bound(K, t, cfg.c),
        bounds.BoundKind.SUBSPACE_DISTANCE,
        {"kind": "subspace_distance", "K": K, "hs": 1.0, "op": 1.0}, parse_grid(cfg.t_grid))
    summary.update(K=K, n=basis.shape[0], d=basis.shape[1])
    return text, summary, bad


def cmd_matrix_norm(cfg):
    b = build_matrix(cfg.matrix)
    spec = DistSpec.parse(cfg.dist)
    K = _resolve_K(cfg, spec)
    stat = functools.partial(montecarlo.product_norm_stat, b, cfg.n, spec)
    values, complete = montecarlo.draw(stat, cfg.draws, cfg.seed, workers=cfg.workers,
                                       chunk_size=cfg.chunk)
    threshold, tail = bounds.product_norm_bound(b, cfg.n, K, cfg.s_scale, cfg.t_scale, cfg.C)
    k = int(np.sum(values > threshold))
    lo, hi = montecarlo.clopper_pearson(k, len(values), cfg.conf) if len(values) else (0.0, 1.0)
    N = b.shape[1]
    bulk_edge = linalg.hs_norm(b) + math.sqrt(cfg.n) * linalg.op_norm(b)
    refuted = cfg.check == "refutes" and lo > tail.prob or cfg.check == "holds" and hi > tail.prob
    summary = {
        "complete": complete, "K": K, "draws": len(values), "N": N, "n": cfg.n,
        "median": float(np.median(values)) if len(values) else None,
        "mean": float(np.mean(values)) if len(values) else None,
        "bulk_edge": bulk_edge, "threshold": threshold, "n_exceed": k,
        "ci_low": lo, "ci_high": hi, "bound": tail.prob, "bound_raw": tail.raw,
        "stable_rank": linalg.stable_rank(b),
        "formulas": {bounds.BoundKind.PRODUCT_NORM.value: bounds.FORMULAS[bounds.BoundKind.PRODUCT_NORM]},
        "domination": {"mode": cfg.check, "refuted": bool(refuted)},
    }
    text = _csv(["draw", "op_norm"], ((i, float(v)) for i, v in enumerate(values)))
    return text, summary, refuted


def cmd_calibrate(cfg):
    if not cfg.curve:
        raise ValueError("calibrate needs --curve pointing at a report JSON")
    report = json.loads(Path(cfg.curve).read_text())
    curve = montecarlo.TailCurve.from_dict(report["curve"])
    rate = curve.metadata.get("rate")
    if not rate:
        raise ValueError(f"{cfg.curve} carries no rate metadata")
    form = bounds.BoundForm(rate["kind"], cfg.c)
    rate_fn = bounds.rate_function(form, K=rate["K"], hs=rate["hs"], op=rate["op"])
    result = calibrate.calibrate_c(curve, rate_fn, safety_factor=cfg.safety)
    result.metadata["source"] = cfg.curve
    tail_fn = lambda t: min(1.0, 2.0 * math.exp(-result.c_safe * rate_fn(t)))
    verdicts = calibrate.check_domination(curve, tail_fn, "holds")
    text = _csv(["t", "c_admissible"], result.per_point_c)
    summary = {"calibration": json.loads(result.to_json()), "formulas": {form.kind.value: form.formula},
               "holds_at_c_safe": all(v.ok for v in verdicts)}
    return text, summary, False


def cmd_decoupling_check(cfg):
    rows, worst = [], 0.0
    for trial in range(cfg.trials):
        rng = SeedStream(cfg.seed, trial).generator()
        a = rng.standard_normal((cfg.n, cfg.n))
        x = rng.standard_normal(cfg.n)
        s, four_avg = montecarlo.decoupling_enumerate(a, x)
        err = abs(s - four_avg) / (1.0 + abs(s))
        worst = max(worst, err)
        rows.append((trial, cfg.n, s, four_avg, err))
    ok = worst <= 1e-12
    summary = {"max_relative_error": worst, "tolerance": 1e-12, "passed": ok,
               "message": f"max relative error {'<=' if ok else '>'} 1e-12"}
    return _csv(["trial", "n", "S", "four_avg", "rel_err"], rows), summary, not ok


def cmd_mgf_check(cfg):
    spec = DistSpec.parse(cfg.dist)
    lambdas = parse_floats(cfg.lambdas)
    g = sample(spec, cfg.samples, SeedStream(cfg.seed, 0))
    sq = g * g
    rows, failed = [], []
    for lam in lambdas:
        emp = montecarlo.empirical_mgf(sq, lam)
        exact = montecarlo.chi2_mgf(lam)
        rel = emp / exact - 1.0
        if spec.family.value == "gaussian" and abs(rel) > cfg.tol:
            failed.append(lam)
        rows.append(("chi2", lam, emp, exact, rel))
    # off-diagonal chaos normalised to unit HS norm
    a = build_matrix(cfg.matrix)
    off = a - np.diag(np.diag(a))
    off = off / linalg.hs_norm(off)
    chaos = montecarlo.offdiag_chaos_stat(off, spec, SeedStream(cfg.seed, 1), cfg.samples)
    c3 = {}
    for lam in (0.05, 0.1, 0.2):
        emp = montecarlo.empirical_mgf(chaos, lam)
        c3[lam] = math.log(emp) / lam**2
        rows.append(("chaos", lam, emp, math.exp(cfg.C3 * lam**2), c3[lam]))
    summary = {"chi2_failed_lambdas": failed, "tolerance": cfg.tol,
               "chaos_C3_hat": {repr(k): v for k, v in c3.items()},
               "chaos_envelope_holds_at_C3": all(v <= cfg.C3 for v in c3.values()),
               "formulas": {"chi2_mgf": "E exp(lam g^2) = (1 - 2 lam)^(-1/2)",
                            "chaos_mgf": "E exp(lam S) <= exp(C3 lam^2 |A|_HS^2)"}}
    return _csv(["family", "lambda", "empirical", "reference", "rel_err_or_C3"], rows), summary, bool(failed)


def cmd_complexify_check(cfg):
    rows, worst = [], 0.0
    for trial in range(cfg.trials):
        rng = SeedStream(cfg.seed, trial).generator()
        a = rng.standard_normal((cfg.m, cfg.n)) + 1j * rng.standard_normal((cfg.m, cfg.n))
        x = rng.standard_normal(cfg.n)
        stack, block = linalg.complexify_stack(a), linalg.complexify_block(a)
        hs = linalg.hs_norm(a)
        op = float(np.linalg.svd(a, compute_uv=False)[0])
        errs = (
            abs(linalg.hs_norm(stack) - hs) / hs,
            abs(np.linalg.norm(stack @ x) - np.linalg.norm(a @ x)) / np.linalg.norm(a @ x),
            abs(linalg.op_norm(block) - op) / op,
            abs(linalg.hs_norm(block) - math.sqrt(2) * hs) / (math.sqrt(2) * hs),
        )
        worst = max(worst, *errs)
        rows.append((trial, *errs))
    ok = worst <= 1e-9
    summary = {"max_relative_error": worst, "tolerance": 1e-9, "passed": ok}
    return _csv(["trial", "stack_hs", "stack_vec", "block_op", "block_hs"], rows), summary, not ok


COMMANDS = {
    "hw-tail": cmd_hw_tail,
    "concentration": cmd_concentration,
    "small-ball": cmd_small_ball,
    "subspace-dist": cmd_subspace_dist,
    "matrix-norm": cmd_matrix_norm,
    "calibrate": cmd_calibrate,
    "decoupling-check": cmd_decoupling_check,
    "mgf-check": cmd_mgf_check,
    "complexify-check": cmd_complexify_check,
}

S = argparse.SUPPRESS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conclab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI file with an [experiment] section")
    common.add_argument("--save-config", default=None, help="write the resolved config here")
    common.add_argument("--out", default=S, help="output prefix (writes .csv and .json)")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--workers", type=int, default=S)

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--dist", default=S, help="rademacher|gaussian|uniform|twopoint:a=..,p=..")
    sampling.add_argument("--samples", type=int, default=S)
    sampling.add_argument("--conf", type=float, default=S)
    sampling.add_argument("--K", default=S, help="number, 'analytic' or 'estimate'")
    sampling.add_argument("--chunk", type=int, default=S)

    curve = argparse.ArgumentParser(add_help=False)
    curve.add_argument("--matrix", default=S, help="identity:n | diag:.. | projection:n,r:seed | "
                                                   "gaussian:m,n:seed | coord:n,d | file:path")
    curve.add_argument("--t", dest="t_grid", default=S, help="min:max:count[:log] or a,b,c")
    curve.add_argument("--c", type=float, default=S, help="absolute constant c")
    curve.add_argument("--check", choices=["holds", "refutes", "none"], default=S)

    for name in ("hw-tail", "concentration", "subspace-dist"):
        p = sub.add_parser(name, parents=[common, sampling, curve])
        if name == "subspace-dist":
            p.add_argument("--basis", dest="matrix", default=S)
    p = sub.add_parser("small-ball", parents=[common, sampling, curve])
    p.add_argument("--y", default=S, help="'zero' or comma-separated entries")

    p = sub.add_parser("matrix-norm", parents=[common, sampling])
    p.add_argument("--B", "--matrix", dest="matrix", default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--draws", type=int, default=S)
    p.add_argument("--s", dest="s_scale", type=float, default=S)
    p.add_argument("--t", dest="t_scale", type=float, default=S)
    p.add_argument("--C", type=float, default=S)
    p.add_argument("--check", choices=["holds", "refutes", "none"], default=S)

    p = sub.add_parser("calibrate", parents=[common])
    p.add_argument("--curve", default=S, help="report JSON from a curve subcommand")
    p.add_argument("--safety", type=float, default=S)

    p = sub.add_parser("decoupling-check", parents=[common])
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--trials", type=int, default=S)

    p = sub.add_parser("mgf-check", parents=[common, sampling])
    p.add_argument("--lambdas", default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--matrix", default=S)
    p.add_argument("--C3", type=float, default=S)

    p = sub.add_parser("complexify-check", parents=[common])
    p.add_argument("--m", type=int, default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--trials", type=int, default=S)
    return parser


def resolve_config(argv=None) -> tuple[ExperimentConfig, argparse.Namespace]:
    args = build_parser().parse_args(argv)
    values = dict(SUBCOMMAND_DEFAULTS.get(args.subcommand, {}))
    values.update(load_config(args.config))
    cli = {k: v for k, v in vars(args).items() if k not in ("config", "save_config")}
    values.update(cli)
    values["subcommand"] = args.subcommand
    cfg = ExperimentConfig(**values)
    cfg.workers = env_workers(cfg.workers)
    if not cfg.out:
        cfg.out = f"results/{cfg.subcommand}"
    return cfg, args


def write_outputs(cfg: ExperimentConfig, csv_text: str, summary: dict, wall: float) -> None:
    prefix = Path(cfg.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.csv").write_text(csv_text)
    report = {
        "config": cfg.to_dict(),
        "version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "rng_scheme": RNG_SCHEME,
        "wall_time_s": wall,
        **summary,
    }
    Path(f"{prefix}.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def run(cfg: ExperimentConfig) -> int:
    start = time.perf_counter()
    csv_text, summary, failed = COMMANDS[cfg.subcommand](cfg)
    write_outputs(cfg, csv_text, summary, time.perf_counter() - start)
    if summary.get("complete") is False:
        print(f"interrupted: partial results written to {cfg.out}.csv", file=sys.stderr)
    print(f"{cfg.subcommand}: wrote {cfg.out}.csv and {cfg.out}.json"
          + ("  [CHECK FAILED]" if failed else ""))
    return EXIT_CHECK if failed else EXIT_OK


def main(argv=None) -> int:
    try:
        cfg, args = resolve_config(argv)
        if args.save_config:
            Path(args.save_config).write_text(cfg.to_ini())
        return run(cfg)
    except (ConclabError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"conclab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
