"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any, Dict, Iterable, List, Optional

from . import arith, arcs, counting, expsums, localdata, meanvalue, oscint, pipeline, sysmodel
from .errors import DiagPrimesError, ParseError

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3


class StageFailure(Exception):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage} failed: {message}")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return v.item()
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


def _emit(records: Iterable[Dict[str, Any]], fmt: str) -> str:
    records = [_jsonable(r) for r in records]
    if fmt == "jsonl":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    keys: List[str] = []
    for r in records:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in records:
        w.writerow([json.dumps(r[k]) if isinstance(r.get(k), (dict, list)) else
                    (repr(r[k]) if isinstance(r.get(k), float) else r.get(k, "")) for k in keys])
    return buf.getvalue()


def _load_config(args) -> sysmodel.ExperimentConfig:
    if not args.config:
        raise ParseError("--config is required for this command")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {args.config}: {exc.strerror}") from exc
    cfg = sysmodel.parse_config(text)
    if args.seed is not None:
        cfg = sysmodel.with_overrides(cfg, seed=args.seed)
    return cfg


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    cfg = _load_config(args)
    sy = cfg.system
    th = sysmodel.vinogradov_threshold(sy)
    yield {"digest": sy.digest(), "s": sy.s, "t": sy.t, "K": sy.K, "k_max": sy.k_max,
           "homogeneous": sy.is_homogeneous_diagonal, "delta": cfg.delta,
           "delta_within_recommended": cfg.delta_within_recommended,
           "defaulted": list(cfg.defaulted),
           "threshold_met": None if th is None else th.meets,
           "threshold_required": None if th is None else th.required}


def cmd_local(args):
    cfg = _load_config(args)
    sy = cfg.system
    for p in arith.build_prime_table(args.p_cut).primes:
        v = sysmodel.local_solvability(sy, int(p), seed=cfg.seed)
        yield {"p": int(p), "solvable": v.solvable, "witness": v.witness, "mode": v.mode}
    probe = sysmodel.real_solution_probe(sy, seed=cfg.seed)
    yield {"real_solution": probe.found, "residual": probe.residual}
    cert = localdata.positivity_certificate(sy, args.p_cut)
    yield {"certificate": cert.verdict, "note": cert.note, "tail_lower_bound": cert.tail_lower_bound}


def cmd_sums(args):
    cfg = _load_config(args)
    sy = cfg.system
    P = args.P or cfg.P[0]
    table = arith.build_prime_table(P)
    alpha = expsums.AlphaPoint.of(_floats(args.alpha))
    for i, row in enumerate(sy.u):
        f = expsums.prime_exp_sum(alpha, row, sy.k, table)
        rec = {"row": i, "P": P, "f": f, "abs_over_theta": abs(f) / table.theta}
        if args.X:
            parts = expsums.vaughan_decompose(alpha, row, sy.k, table, args.X)
            rec.update({"S1": parts.S1, "S2": parts.S2, "S3": parts.S3, "S4": parts.S4, "F": parts.F})
        yield rec


def cmd_arcs(args):
    cfg = _load_config(args)
    sy = cfg.system
    if args.alpha:
        P = args.P or cfg.P[0]
        lab = arcs.classify(_floats(args.alpha), P, cfg.delta, sy.k)
        ap = lab.approx
        yield {"P": P, "kind": lab.kind, "zone": lab.zone, "q": ap.q if ap else None,
               "a": list(ap.a) if ap else None}
        return
    for row in arcs.minor_decay_scan(sy, cfg.P, cfg.samples, cfg.seed, delta=cfg.delta):
        yield dict(row.__dict__)


def cmd_series(args):
    cfg = _load_config(args)
    est = localdata.singular_series(cfg.system, cfg.q_cut)
    if args.table:
        with open(args.table, "w", encoding="utf-8") as fh:
            fh.write(est.table.to_csv())
    yield {"q_cut": est.q_cut, "partial_sum": est.partial_sum, "euler_product": est.euler_product,
           "tail_bound": est.tail_bound, "tail_constant_fit": est.tail_constant_fit,
           "positive": est.positive}


def cmd_integral(args):
    cfg = _load_config(args)
    method = args.method or pipeline.integral_method(cfg.system)
    for e in oscint.gamma_ladder(cfg.system, cfg.gamma_cut, method=method, seed=cfg.seed):
        yield {"gamma_cut": e.gamma_cut, "estimate": e.value, "error": e.half_width,
               "converged": e.converged, "method": e.method}


def cmd_meanvalue(args):
    recs = [meanvalue.count_J(args.ell, _ints(args.k), P) for P in _ints(args.P_list)]
    slope = meanvalue.exponent_fit(recs) if len(recs) >= 4 else None
    for r in recs:
        yield {"ell": r.ell, "k": list(r.k), "P": r.P, "count": r.count}
    if slope:
        yield {"slope": slope.slope, "predicted": slope.predicted, "gap": slope.gap}


def cmd_count(args):
    cfg = _load_config(args)
    for P in cfg.P:
        c = counting.brute_force_R(cfg.system, arith.build_prime_table(P))
        yield dict(c.__dict__)


def cmd_predict(args):
    cfg = _load_config(args)
    sy = cfg.system
    series = localdata.singular_series(sy, cfg.q_cut)
    integral = oscint.singular_integral_normalized(sy, cfg.gamma_cut, method=pipeline.integral_method(sy),
                                                   seed=cfg.seed)
    for P in cfg.P:
        pr = pipeline.predict_main_term(sy, P, series=series, integral=integral)
        yield dict(pr.__dict__)


COMMANDS = {
    "validate": cmd_validate, "local": cmd_local, "sums": cmd_sums, "arcs": cmd_arcs,
    "series": cmd_series, "integral": cmd_integral, "meanvalue": cmd_meanvalue,
    "count": cmd_count, "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration (JSON)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--threads", type=int, default=1, help="worker cap (recorded in reports)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")

    parser = argparse.ArgumentParser(prog="diagprimes", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a configuration")
    p = sub.add_parser("local", parents=[common], help="local solvability and positivity")
    p.add_argument("--p-cut", type=int, default=50)
    p = sub.add_parser("sums", parents=[common], help="prime exponential sums at one point")
    p.add_argument("--alpha", required=True, help="comma-separated coordinates")
    p.add_argument("--P", type=int)
    p.add_argument("--X", type=int, help="also split F by Vaughan's identity with this cut")
    p = sub.add_parser("arcs", parents=[common], help="classify a point or scan minor-arc decay")
    p.add_argument("--alpha")
    p.add_argument("--P", type=int)
    p = sub.add_parser("series", parents=[common], help="singular series")
    p.add_argument("--table", help="write the A(q) table as CSV")
    p = sub.add_parser("integral", parents=[common], help="normalized singular integral ladder")
    p.add_argument("--method", choices=("tensor", "qmc"))
    p = sub.add_parser("meanvalue", parents=[common], help="exact J_{l,k}(P) counts")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--k", required=True, help="comma-separated exponents")
    p.add_argument("--P", dest="P_list", required=True, help="comma-separated P ladder")
    sub.add_parser("count", parents=[common], help="brute-force prime solution counts")
    sub.add_parser("predict", parents=[common], help="predicted main term")
    sub.add_parser("run", parents=[common], help="full experiment report")
    return parser


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config(args)
            report = pipeline.run_experiment(cfg, threads=args.threads)
            _write(pipeline.emit_report(report, args.format), args.out)
            failed = report.failed_stage
            if failed:
                print(f"stage {failed} failed: {report.stages[failed].reason}", file=sys.stderr)
                return EXIT_STAGE
            return EXIT_OK
        records = list(COMMANDS[args.command](args))
        _write(_emit(records, args.format), args.out)
        return EXIT_OK
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DiagPrimesError, ValueError, ArithmeticError) as exc:
        print(f"stage {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except OSError as exc:
        print(f"I/O error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
