"""Diophantine approximation and the major/minor arc dissection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import arith
from .arith import PrimeTable
from .errors import CapacityError, DegenerateInputError, DomainError
from .expsums import AlphaPoint, coefficient_free_sum
from .sysmodel import DiagonalSystem, default_delta

EXHAUSTIVE_Q_LIMIT = 10**4
DEFAULT_A_INNER = 2.0


@dataclass(frozen=True)
class RationalApprox:
    """Common-denominator approximation a/q of a point alpha.

    ``err`` holds |alpha_j - a_j/q| computed from the exact inputs.
    """

    a: Tuple[int, ...]
    q: int
    err: Tuple[float, ...]


@dataclass(frozen=True)
class ArcLabel:
    kind: str  # "Major" | "Minor"
    approx: Optional[RationalApprox]
    zone: Optional[str]  # "Inner" | "Outer" | None

    @property
    def major(self) -> bool:
        return self.kind == "Major"


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(float(x))


def cf_convergents(x, q_bound: int) -> List[Tuple[int, int]]:
    """Continued-fraction convergents a/q of x with q <= q_bound.

    When two consecutive convergents share a denominator (possible only at
    the start, e.g. 0/1 then 1/1) the later, better one is kept.
    """
    if q_bound < 1:
        raise DomainError("q_bound must be >= 1")
    r = _exact(x)
    h_prev, h = 1, math.floor(r)
    k_prev, k = 0, 1
    out = [(h, k)]
    frac = r - math.floor(r)
    while frac != 0:
        r = 1 / frac
        c = math.floor(r)
        frac = r - c
        h_prev, h = h, c * h + h_prev
        k_prev, k = k, c * k + k_prev
        if k > q_bound:
            break
        if out and out[-1][1] == k:
            out[-1] = (h, k)
        else:
            out.append((h, k))
    return out


def _best_convergent(x: Fraction, bound: float) -> Tuple[int, int]:
    return cf_convergents(x, max(1, int(math.floor(bound))))[-1]


def simultaneous_approx(alpha, P: float, delta: float, k: Sequence[int]) -> RationalApprox:
    """Dirichlet approximation per coordinate, combined through the lcm.

    Coordinate j receives the last convergent b_j/q_j with
    q_j <= P^{k_j} / Q^{1/t}, Q = P^delta; then q = lcm(q_j) and
    a_j = b_j q / q_j, so every a_j/q equals b_j/q_j exactly.
    """
    alpha = AlphaPoint.of(alpha)
    t = alpha.t
    if t < 1 or t != len(k):
        raise DomainError("alpha and k must have the same positive length")
    Q = float(P) ** delta
    xs = [_exact(c) for c in alpha.coords]
    parts = [_best_convergent(x, float(P) ** kj / Q ** (1.0 / t)) for x, kj in zip(xs, k)]
    q = arith.lcm(qj for _, qj in parts)
    if q >= 2**63:
        raise CapacityError(f"lcm of denominators {q} overflows 64 bits")
    a = [b * (q // qj) for b, qj in parts]
    g = math.gcd(q, *a)
    a, q = [x // g for x in a], q // g
    err = tuple(float(abs(x - Fraction(aj, q))) for x, aj in zip(xs, a))
    return RationalApprox(tuple(a), q, err)


def _zone(approx: RationalApprox, P: float, k: Sequence[int], A_inner: float) -> str:
    R = math.log(P) ** A_inner
    spread = sum(e * float(P) ** kj for e, kj in zip(approx.err, k))
    return "Inner" if approx.q * (1.0 + spread) <= R else "Outer"


def classify(alpha, P: float, delta: float, k: Sequence[int],
             A_inner: float = DEFAULT_A_INNER) -> ArcLabel:
    """Label alpha Major when some q <= Q = P^delta and integers a satisfy
    |alpha_j - a_j/q| <= Q / (q P^{k_j}) for every j (closed inequality).

    All q <= Q are scanned; the smallest admissible q is reported (it is
    automatically primitive). Candidates found in floating point are
    re-verified in exact rational arithmetic.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    alpha = AlphaPoint.of(alpha)
    if alpha.t != len(k):
        raise DomainError("alpha and k must have the same length")
    Q = float(P) ** delta
    q_max = int(math.floor(Q + 1e-12))
    if q_max > EXHAUSTIVE_Q_LIMIT:
        raise CapacityError(
            f"Q = {Q:.1f} exceeds the exhaustive limit {EXHAUSTIVE_Q_LIMIT}; use a smaller delta"
        )
    if q_max < 1:
        return ArcLabel("Minor", None, None)
    xs = [_exact(c) for c in alpha.coords]
    Qx = _exact(Q)
    qs = np.arange(1, q_max + 1, dtype=np.float64)
    ok = np.ones(q_max, dtype=bool)
    for c, kj in zip(alpha.coords, k):
        prod = qs * float(c)
        dist = np.abs(prod - np.round(prod))
        ok &= dist <= Q / float(P) ** kj * (1 + 1e-9) + 1e-12
    for q in (np.flatnonzero(ok) + 1).tolist():
        a = [round(x * q) for x in xs]
        if all(abs(x * q - aj) <= Qx / _exact(float(P) ** kj) for x, aj, kj in zip(xs, a, k)):
            err = tuple(float(abs(x - Fraction(aj, q))) for x, aj in zip(xs, a))
            approx = RationalApprox(tuple(int(v) for v in a), int(q), err)
            return ArcLabel("Major", approx, _zone(approx, P, k, A_inner))
    return ArcLabel("Minor", None, None)


@dataclass(frozen=True)
class DecayRow:
    P: int
    sup: float
    median: float
    minor_samples: int
    drawn: int


def minor_decay_scan(system: DiagonalSystem, P_list: Sequence[int], n_samples: int = 200,
                     seed: int = 0, delta: Optional[float] = None,
                     tables: Optional[Dict[int, PrimeTable]] = None,
                     max_draw_factor: int = 50) -> List[DecayRow]:
    """Sup and median of |f(alpha)| / theta(P) over uniform minor-arc samples.

    f is the coefficient-free prime sum with the system's exponents. Major
    samples are discarded and replaced until n_samples minor points have been
    collected (at most max_draw_factor * n_samples draws per P).
    """
    if n_samples < 10:
        raise DomainError("n_samples must be >= 10")
    delta = default_delta(system) if delta is None else delta
    tables = {} if tables is None else tables
    rows = []
    for P in P_list:
        P = int(P)
        table = tables.get(P) or arith.build_prime_table(P)
        rng = np.random.default_rng([seed, P])
        theta = table.theta
        ratios, drawn = [], 0
        while len(ratios) < n_samples and drawn < max_draw_factor * n_samples:
            pt = tuple(float(x) for x in rng.random(system.t))
            drawn += 1
            if classify(pt, P, delta, system.k).major:
                continue
            ratios.append(abs(coefficient_free_sum(pt, system.k, table)) / theta)
        if not ratios:
            raise DegenerateInputError(f"every one of {drawn} samples at P={P} lies on a major arc")
        r = np.array(ratios)
        rows.append(DecayRow(P, float(r.max()), float(np.median(r)), len(ratios), drawn))
    return rows
