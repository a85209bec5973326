"""End-to-end experiments: local checks, singular series, singular integral,
brute-force counts and the ratio of empirical to predicted main terms."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import metadata
from typing import Any, Dict, List, Optional

from . import arith
from .counting import SolutionCount, brute_force_R
from .errors import CapacityError, DiagPrimesError
from .localdata import SingularSeriesEstimate, positivity_certificate, singular_series
from .oscint import SingularIntegralEstimate, singular_integral_normalized
from .sysmodel import (DiagonalSystem, ExperimentConfig, config_to_dict, local_solvability,
                       real_solution_probe)

LOCAL_P_CUT = 50
STAGES = ("local", "real_probe", "series", "integral", "counts", "ratios")


def artifact_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class Prediction:
    value: float
    P: int
    series: float
    series_tail: float
    euler_product: float
    c_J: float
    c_J_error: float
    exponent: int
    predicted: bool
    note: str = ""

    @property
    def relative_uncertainty(self) -> float:
        if not self.predicted or self.series == 0 or self.c_J == 0:
            return math.inf
        return abs(self.series_tail / self.series) + abs(self.c_J_error / self.c_J)


def integral_method(system: DiagonalSystem) -> str:
    return "tensor" if system.t == 1 else "qmc"


def predict_main_term(system: DiagonalSystem, P: int, q_cut: int = 1000, gamma_cut: float = 50.0,
                      series: Optional[SingularSeriesEstimate] = None,
                      integral: Optional[SingularIntegralEstimate] = None,
                      seed: int = 0) -> Prediction:
    """S(q_cut) * c_J(gamma_cut) * P^{s-K}, with both truncation errors attached.

    A non-positive truncated series (local obstruction) yields value 0 and
    predicted=False.
    """
    series = series or singular_series(system, q_cut)
    integral = integral or singular_integral_normalized(system, gamma_cut, method=integral_method(system),
                                                        seed=seed)
    expo = system.s - system.K
    S = series.partial_sum
    if S <= 0 or not series.positive or math.isclose(S, 0.0, abs_tol=1e-12):
        return Prediction(0.0, P, S, series.tail_bound, series.euler_product, integral.value,
                          integral.half_width, expo, False, "no main term predicted")
    value = S * integral.value * float(P) ** expo
    return Prediction(value, P, S, series.tail_bound, series.euler_product, integral.value,
                      integral.half_width, expo, True)


@dataclass
class StageRecord:
    status: str  # "ok" | "skipped" | "failed"
    seconds: float = 0.0
    reason: str = ""
    data: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    config: Dict[str, Any]
    digest: str
    seed: int
    threads: int
    version: str
    exclude_diagonal: bool
    stages: Dict[str, StageRecord] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    created: float = 0.0

    @property
    def failed_stage(self) -> Optional[str]:
        return next((n for n, s in self.stages.items() if s.status == "failed"), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config, "digest": self.digest, "seed": self.seed,
            "threads": self.threads, "version": self.version,
            "exclude_diagonal": self.exclude_diagonal,
            "stages": {n: {"status": s.status, "seconds": s.seconds, "reason": s.reason, "data": s.data}
                       for n, s in self.stages.items()},
            "rows": self.rows, "created": self.created,
        }


def exclude_diagonal_default(system: DiagonalSystem) -> bool:
    return system.is_homogeneous_diagonal and system.s <= 2 * system.K


def _series_data(est: SingularSeriesEstimate) -> Dict[str, Any]:
    return {
        "q_cut": est.q_cut, "partial_sum": est.partial_sum, "euler_product": est.euler_product,
        "p_cut": est.p_cut, "tail_bound": est.tail_bound, "tail_constant_fit": est.tail_constant_fit,
        "envelope_C": est.envelope[0], "envelope_sigma": est.envelope[1], "positive": est.positive,
        "depths": {str(p): d for p, d in est.depths.items() if p < 50},
    }


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   clock=time.perf_counter) -> ExperimentReport:
    """Run local -> real_probe -> series -> integral -> counts -> ratios.

    A stage over budget is marked skipped with its reason and the report
    continues; any other error marks the stage failed.
    """
    system = config.system
    report = ExperimentReport(
        config=config_to_dict(config), digest=system.digest(), seed=config.seed, threads=threads,
        version=artifact_version(), exclude_diagonal=exclude_diagonal_default(system),
        created=time.time(),
    )
    ctx: Dict[str, Any] = {}

    def stage(name, fn):
        t0 = clock()
        try:
            data = fn()
            rec = StageRecord("ok", data=data)
        except CapacityError as exc:
            rec = StageRecord("skipped", reason=str(exc))
        except (DiagPrimesError, ArithmeticError, ValueError) as exc:
            rec = StageRecord("failed", reason=f"{type(exc).__name__}: {exc}")
        rec.seconds = clock() - t0
        report.stages[name] = rec

    def local():
        verdicts = {}
        for p in arith.build_prime_table(LOCAL_P_CUT).primes:
            v = local_solvability(system, int(p), seed=config.seed)
            verdicts[str(int(p))] = None if v.solvable is None else bool(v.solvable)
        cert = positivity_certificate(system, LOCAL_P_CUT)
        ctx["certificate"] = cert
        return {"solvable": verdicts, "certificate": cert.verdict, "certificate_note": cert.note}

    def probe():
        r = real_solution_probe(system, seed=config.seed)
        point = None if r.point is None else [float(x) for x in r.point]
        return {"found": bool(r.found), "residual": float(r.residual), "point": point}

    def series():
        est = singular_series(system, config.q_cut)
        ctx["series"] = est
        return _series_data(est)

    def integral():
        est = singular_integral_normalized(system, config.gamma_cut, method=integral_method(system),
                                           seed=config.seed)
        ctx["integral"] = est
        return {"c_J": est.value, "half_width": est.half_width, "imag": est.imag, "method": est.method,
                "gamma_cut": est.gamma_cut, "converged": est.converged}

    def counts():
        out, skipped = {}, []
        for P in config.P:
            try:
                out[P] = brute_force_R(system, arith.build_prime_table(P))
            except CapacityError as exc:
                skipped.append(f"P={P}: {exc}")
        ctx["counts"] = out
        if not out and skipped:
            raise CapacityError("; ".join(skipped))
        return {"skipped": skipped}

    def ratios():
        if "series" not in ctx or "integral" not in ctx:
            raise CapacityError("prediction unavailable: series or integral stage did not run")
        cert = ctx.get("certificate")
        for P in config.P:
            pred = predict_main_term(system, P, series=ctx["series"], integral=ctx["integral"])
            if cert is not None and cert.verdict.startswith("zero"):
                pred = Prediction(0.0, P, pred.series, pred.series_tail, pred.euler_product, pred.c_J,
                                  pred.c_J_error, pred.exponent, False, "no main term predicted")
            row: Dict[str, Any] = {"P": P, "predicted": pred.value, "main_term": pred.predicted,
                                   "relative_uncertainty": pred.relative_uncertainty, "note": pred.note}
            c: Optional[SolutionCount] = ctx.get("counts", {}).get(P)
            if c is not None:
                emp = c.offdiagonal_weighted if report.exclude_diagonal else c.weighted
                row.update({"weighted": c.weighted, "unweighted": c.unweighted,
                            "diagonal_weighted": c.diagonal_weighted,
                            "diagonal_unweighted": c.diagonal_unweighted, "empirical": emp})
                if pred.predicted and pred.value > 0:
                    row["ratio"] = emp / pred.value
            report.rows.append(row)
        return {"rows": len(report.rows)}

    for name, fn in zip(STAGES, (local, probe, series, integral, counts, ratios)):
        stage(name, fn)
    return report


# ------------------------------------------------------------------ output

_VOLATILE = ("created", "seconds")


def _strip(obj):
    if isinstance(obj, dict):
        return {k: _strip(v) for k, v in obj.items() if k not in _VOLATILE}
    if isinstance(obj, list):
        return [_strip(v) for v in obj]
    return obj


def report_digest(report: ExperimentReport) -> str:
    """sha256 of the report with timestamps and wall-clock fields removed."""
    payload = json.dumps(_strip(report.to_dict()), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def emit_report(report: ExperimentReport, fmt: str = "jsonl") -> str:
    """JSON lines (header, one line per stage, one per P) or CSV rows of
    (P, stage, metric, value). Floats are written with repr, which round-trips."""
    d = report.to_dict()
    if fmt == "jsonl":
        head = {k: v for k, v in d.items() if k not in ("stages", "rows")}
        lines = [json.dumps({"kind": "header", **head}, sort_keys=True)]
        for name, s in d["stages"].items():
            lines.append(json.dumps({"kind": "stage", "name": name, **s}, sort_keys=True))
        for row in d["rows"]:
            lines.append(json.dumps({"kind": "row", **row}, sort_keys=True))
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["P", "stage", "metric", "value"])
        for name, s in d["stages"].items():
            w.writerow(["", name, "status", s["status"]])
            w.writerow(["", name, "seconds", repr(s["seconds"])])
            for key, val in s["data"].items():
                if isinstance(val, (int, float, str, bool)) or val is None:
                    w.writerow(["", name, key, repr(val) if isinstance(val, float) else val])
        for row in d["rows"]:
            for key, val in row.items():
                if key != "P":
                    w.writerow([row["P"], "ratios", key, repr(val) if isinstance(val, float) else val])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def load_report_jsonl(text: str) -> Dict[str, Any]:
    """Inverse of emit_report(fmt="jsonl"), returning the report dictionary."""
    out: Dict[str, Any] = {"stages": {}, "rows": []}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = rec.pop("kind")
        if kind == "header":
            out.update(rec)
        elif kind == "stage":
            out["stages"][rec.pop("name")] = rec
        else:
            out["rows"].append(rec)
    return out
