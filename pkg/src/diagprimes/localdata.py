"""p-adic data of a diagonal system: congruence counts M(q), the local
factors A(q), the singular series with its Euler product and tail, Hensel
lifting checks and a positivity certificate."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from . import arith
from .errors import CapacityError, DomainError
from .expsums import complete_sums_all
from .sysmodel import DiagonalSystem, _unit_images, local_solvability

COUNT_BUDGET = 1 << 24  # grid cells per FFT convolution
DIRECT_A_BUDGET = 5 * 10**7
EULER_RULE = 1e-6
EULER_MODULUS_LIMIT = 1 << 16
REL_TOL = 1e-9


def close(x: float, y: float, rel: float = REL_TOL, floor: float = 1e-12) -> bool:
    """Relative comparison with an absolute floor for values near zero."""
    return abs(x - y) <= rel * max(abs(x), abs(y)) + floor


# ------------------------------------------------------------------ M(q)

def _histograms(system: DiagonalSystem, q: int) -> List[np.ndarray]:
    img = _unit_images(system, q)
    out = []
    for i in range(system.s):
        h = np.zeros((q,) * system.t, dtype=np.int64)
        np.add.at(h, tuple(img[i].T), 1)
        out.append(h)
    return out


LIMB_BITS = 20
LIMB_MASK = (1 << LIMB_BITS) - 1


def _carry(limbs: List[np.ndarray]) -> List[np.ndarray]:
    out, carry = [], np.zeros_like(limbs[0])
    for limb in limbs:
        total = limb + carry
        out.append(total & LIMB_MASK)
        carry = total >> LIMB_BITS
    while np.any(carry):
        out.append(carry & LIMB_MASK)
        carry = carry >> LIMB_BITS
    return out


def _convolve_limbs(hists: List[np.ndarray]) -> List[np.ndarray]:
    """Cyclic convolution of integer histograms over (Z/q)^t, exact.

    The running distribution is kept as 20-bit limbs; each limb is convolved
    by FFT and rounded, which is exact because every limb product stays far
    below 2^53, then carries are propagated.
    """
    limbs = _carry([hists[0].astype(np.int64)])
    for h in hists[1:]:
        H = np.fft.fftn(h)
        limbs = _carry([np.rint(np.real(np.fft.ifftn(np.fft.fftn(l) * H))).astype(np.int64)
                        for l in limbs])
    return limbs


def _convolve_exact(hists: List[np.ndarray]) -> np.ndarray:
    """Reference roll-add convolution with Python integers."""
    dist = hists[0].astype(object)
    for h in hists[1:]:
        out = np.zeros_like(dist)
        for v in zip(*np.nonzero(h)):
            out += int(h[v]) * np.roll(dist, shift=v, axis=tuple(range(dist.ndim)))
        dist = out
    return dist


@lru_cache(maxsize=4096)
def _count_M_prime_power(system: DiagonalSystem, q: int) -> int:
    if q == 1:
        return 1
    if q**system.t > COUNT_BUDGET:
        raise CapacityError(f"counting M({q}) needs a grid of {q**system.t} cells")
    limbs = _convolve_limbs(_histograms(system, q))
    return sum(int(l.flat[0]) << (LIMB_BITS * i) for i, l in enumerate(limbs))


def count_M_rolladd(system: DiagonalSystem, q: int) -> int:
    """M(q) by exact roll-add convolution (slow reference path)."""
    if q == 1:
        return 1
    return int(_convolve_exact(_histograms(system, q)).flat[0])


def count_M(system: DiagonalSystem, q: int) -> int:
    """Exact number of unit tuples (m_1..m_s) mod q solving every congruence.

    Composite moduli split over their prime-power parts (the count is
    multiplicative by the Chinese remainder theorem); each prime power is a
    cyclic convolution of the per-variable histograms of u_i m^k mod q.
    """
    out = 1
    for p, e in arith.factorize(int(q)):
        out *= _count_M_prime_power(system, p**e)
    return out


def count_M_direct(system: DiagonalSystem, q: int) -> int:
    """M(q) by one convolution over Z/q itself, without CRT splitting."""
    return _count_M_prime_power.__wrapped__(system, int(q))


# ------------------------------------------------------------------ A(q)

def local_factor_A(system: DiagonalSystem, q: int) -> float:
    """A(q) = phi(q)^{-s} sum over primitive a mod q of prod_i W_i(q, a).

    W_i(q, a) = W(q, a * u_i) with W the coefficient-free complete sum over
    reduced residues, so one t-dimensional DFT serves every row.
    """
    q = int(q)
    if q == 1:
        return 1.0
    t, s = system.t, system.s
    if q**t * (arith.euler_phi(q) + s) > DIRECT_A_BUDGET:
        return float(A_from_M(system, q))
    base = complete_sums_all(q, (1,) * t, system.k)
    grid = np.indices((q,) * t).reshape(t, -1)
    prod = np.ones(grid.shape[1], dtype=np.complex128)
    for row in system.u:
        idx = tuple((int(u) * grid[j]) % q for j, u in enumerate(row))
        prod *= base[idx]
    prim = np.gcd.reduce(np.vstack([grid, np.full(grid.shape[1], q)]), axis=0) == 1
    total = complex(np.sum(prod[prim])) / float(arith.euler_phi(q)) ** s
    if abs(total.imag) > 1e-9 * (1.0 + abs(total.real)):
        raise ArithmeticError(f"A({q}) has imaginary part {total.imag:.3e}")
    return total.real


def A_from_M(system: DiagonalSystem, q: int) -> Fraction:
    """A(q) from the divisor identity M(q) = phi(q)^s / q^t sum_{d|q} A(d)."""
    return _A_from_M(system, int(q))


@lru_cache(maxsize=8192)
def _A_from_M(system: DiagonalSystem, q: int) -> Fraction:
    if q == 1:
        return Fraction(1)
    level = Fraction(q**system.t * count_M(system, q), arith.euler_phi(q) ** system.s)
    return level - sum((_A_from_M(system, d) for d in arith.divisors(q)[:-1]), Fraction(0))


def divisor_identity_residual(system: DiagonalSystem, q: int, direct: bool = True) -> Tuple[int, float]:
    """(M(q), phi(q)^s/q^t * sum_{d|q} A(d)) with A computed by the W-sum path."""
    A = local_factor_A if direct else (lambda sy, d: float(A_from_M(sy, d)))
    rhs = float(arith.euler_phi(q)) ** system.s / float(q) ** system.t * sum(
        A(system, d) for d in arith.divisors(q)
    )
    return count_M_direct(system, q), rhs


class LocalFactor(NamedTuple):
    A: float
    M: Optional[int]
    method: str  # "Direct" | "FromM" | "EulerCombine"


@dataclass
class LocalFactorTable:
    entries: Dict[int, LocalFactor] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "A_q", "M_q", "method"])
        for q in sorted(self.entries):
            e = self.entries[q]
            w.writerow([q, repr(e.A), "" if e.M is None else e.M, e.method])
        return buf.getvalue()


def build_factor_table(system: DiagonalSystem, q_max: int) -> LocalFactorTable:
    """A(q) for 1 <= q <= q_max: prime powers from exact counts, the rest by
    multiplicativity."""
    table = LocalFactorTable()
    for q in range(1, q_max + 1):
        f = arith.factorize(q) if q > 1 else []
        if len(f) <= 1:
            table.entries[q] = LocalFactor(float(A_from_M(system, q)), count_M(system, q), "FromM")
        else:
            val = 1.0
            for p, e in f:
                val *= table.entries[p**e].A
            table.entries[q] = LocalFactor(val, None, "EulerCombine")
    return table


# --------------------------------------------------------- singular series

def _guaranteed_rate(system: DiagonalSystem) -> float:
    return 1.0 / (system.k_max + 1)


def _tail_sum(n0: int, sigma: float) -> float:
    """Upper bound for sum_{n >= n0} n^{-sigma} (inf when sigma <= 1)."""
    if sigma <= 1.0:
        return math.inf
    n0 = max(1, n0)
    return n0**-sigma + n0 ** (1.0 - sigma) / (sigma - 1.0)


def _envelope(values: Dict[int, float]) -> Tuple[float, float]:
    """Fit |A(q)| <= C q^{-sigma} from dyadic block maxima over q >= 2."""
    blocks: Dict[int, float] = {}
    for q, v in values.items():
        if q >= 2 and v > 0:
            b = q.bit_length() - 1
            blocks[b] = max(blocks.get(b, 0.0), v)
    if len(blocks) < 2:
        return (max(values.values(), default=0.0), math.inf) if blocks else (0.0, math.inf)
    x = np.log(2.0) * (np.array(sorted(blocks)) + 0.5)
    y = np.log([blocks[b] for b in sorted(blocks)])
    sigma = float(-np.polyfit(x, y, 1)[0])
    C = max(v * q**sigma for q, v in values.items() if q >= 2)
    return C, sigma


@dataclass(frozen=True)
class EulerFactor:
    p: int
    depth: int
    value: Fraction
    terms: Tuple[float, ...]


@dataclass(frozen=True)
class SingularSeriesEstimate:
    q_cut: int
    partial_sum: float
    euler_product: float
    p_cut: int
    factors: Tuple[EulerFactor, ...]
    tail_constant_fit: float
    envelope: Tuple[float, float]
    tail_bound: float
    positive: bool
    table: LocalFactorTable

    @property
    def depths(self) -> Dict[int, int]:
        return {f.p: f.depth for f in self.factors}


def euler_factor(system: DiagonalSystem, p: int, max_depth: int = 8) -> EulerFactor:
    """1 + sum_{l <= L} A(p^l) = p^{Lt} M(p^L) / phi(p^L)^s exactly.

    L is the least depth with (p^L)^{-1/(k_max+1)} below the truncation rule,
    capped by max_depth and by the modulus size; the scan also stops after two
    consecutive vanishing terms.
    """
    rate = _guaranteed_rate(system)
    terms: List[float] = []
    zeros = 0
    L = 0
    while L < max_depth:
        if p ** ((L + 1) * system.t) > EULER_MODULUS_LIMIT and L >= 1:
            break
        L += 1
        a = A_from_M(system, p**L)
        terms.append(float(a))
        zeros = zeros + 1 if a == 0 else 0
        if zeros >= 2 or float(p**L) ** -rate < EULER_RULE:
            break
    q = p**L
    value = Fraction(q**system.t * count_M(system, q), arith.euler_phi(q) ** system.s)
    return EulerFactor(p, L, value, tuple(terms))


def singular_series(system: DiagonalSystem, q_cut: int, p_cut: Optional[int] = None,
                    depth: int = 8) -> SingularSeriesEstimate:
    """Truncated sum of A(q) over q < q_cut and Euler product over p <= p_cut.

    ``tail_constant_fit`` is max |A(q)| q^{1/(k_max+1)} (the decay rate the
    theory guarantees); ``tail_bound`` uses the empirical envelope
    |A(q)| <= C q^{-sigma} fitted on the computed range, since the guaranteed
    rate alone does not make the tail summable.
    """
    if int(q_cut) < 2:
        raise DomainError("q_cut must be at least 2")
    q_cut = int(q_cut)
    p_cut = q_cut - 1 if p_cut is None else int(p_cut)
    table = build_factor_table(system, q_cut - 1)
    partial = math.fsum(e.A for e in table.entries.values())
    factors = tuple(euler_factor(system, int(p), depth) for p in arith.build_prime_table(max(p_cut, 1)).primes)
    product = 1.0
    for f in factors:
        product *= float(f.value)
    absA = {q: abs(e.A) for q, e in table.entries.items()}
    rate = _guaranteed_rate(system)
    fit = max((v * q**rate for q, v in absA.items() if q >= 2), default=0.0)
    C, sigma = _envelope(absA)
    tail = C * _tail_sum(min(q_cut, p_cut + 1), sigma) if C > 0 else 0.0
    positive = all(f.value > 0 for f in factors) and product > 0
    return SingularSeriesEstimate(q_cut, partial, product, p_cut, factors, fit, (C, sigma),
                                  tail, positive, table)


# ------------------------------------------------------------------ Hensel

def _rank_mod_p(mat: List[List[int]], p: int) -> int:
    m = [[x % p for x in row] for row in mat]
    rank, cols = 0, len(m[0]) if m else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], -1, p)
        m[rank] = [x * inv % p for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c]
                m[r] = [(x - f * y) % p for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


def _jacobian(system: DiagonalSystem, m) -> List[List[int]]:
    return [[system.u[i][j] * kj * int(m[i]) ** (kj - 1) for i in range(system.s)]
            for j, kj in enumerate(system.k)]


def nonsingular_witness(system: DiagonalSystem, p: int, limit: int = 2 * 10**6):
    """A unit solution mod p whose Jacobian has rank t mod p, None if none
    exists, or "unknown" when the enumeration exceeds ``limit``."""
    if (p - 1) ** system.s > limit:
        return "unknown"
    img = _unit_images(system, p)
    idx = np.indices((p - 1,) * system.s).reshape(system.s, -1)
    tot = np.zeros((idx.shape[1], system.t), dtype=np.int64)
    for i in range(system.s):
        tot += img[i][idx[i]]
    sols = np.flatnonzero(np.all(tot % p == 0, axis=1))
    unit = arith.units(p)
    for c in sols:
        m = tuple(int(unit[idx[i, c]]) for i in range(system.s))
        if _rank_mod_p(_jacobian(system, m), p) == system.t:
            return m
    return None


class HenselVerdict(NamedTuple):
    p: int
    gamma: int
    beta: int
    M_gamma: int
    M_beta: int
    lower_bound: int
    holds: bool
    nonsingular_witness: object


def hensel_check(system: DiagonalSystem, p: int, gamma: int, beta: int) -> HenselVerdict:
    """Compare M(p^beta) with M(p^gamma) p^{(beta-gamma)(s-2)}.

    The verdict is reported together with the nonsingular-witness search;
    a failed inequality is a report, not an assertion.
    """
    if not beta > gamma >= 1:
        raise ValueError("require beta > gamma >= 1")
    Mg = count_M(system, p**gamma)
    Mb = count_M(system, p**beta)
    bound = Mg * p ** ((beta - gamma) * (system.s - 2)) if system.s >= 2 else Mg
    return HenselVerdict(p, gamma, beta, Mg, Mb, bound, Mb >= bound, nonsingular_witness(system, p))


# -------------------------------------------------------------- positivity

@dataclass(frozen=True)
class PositivityCertificate:
    verdict: str
    factors: Tuple[Tuple[int, float], ...]
    retained_product: float
    tail_lower_bound: float
    note: str


def positivity_certificate(system: DiagonalSystem, p_cut: int, depth: int = 8,
                           q_fit: int = 200) -> PositivityCertificate:
    """Certify S > 0 from local factors at p <= p_cut and a fitted tail.

    The tail lower bound prod_{p > p_cut} (1 + sum_l A(p^l)) >= 1 - C sum n^{-sigma}
    uses the envelope of the negative parts of A(q), q < q_fit; it is fitted,
    not rigorous.
    """
    primes = [int(p) for p in arith.build_prime_table(max(2, p_cut)).primes if p <= p_cut]
    for p in primes:
        if local_solvability(system, p).solvable is False:
            return PositivityCertificate(f"zero (local obstruction at {p})", (), 0.0, 0.0,
                                         "no unit solution modulo p")
    factors = []
    for p in primes:
        f = euler_factor(system, p, depth)
        factors.append((p, float(f.value)))
        if f.value <= 0:
            return PositivityCertificate(f"zero (local obstruction at {p})", tuple(factors), 0.0, 0.0,
                                         f"factor vanishes modulo p^{f.depth}")
    retained = math.prod(v for _, v in factors)
    neg = {q: max(0.0, -float(A_from_M(system, q))) for q in range(2, q_fit)}
    if not any(neg.values()):
        return PositivityCertificate("positive", tuple(factors), retained, 1.0,
                                     "no negative local factors observed; tail bound 1 is fitted")
    C, sigma = _envelope(neg)
    deficit = C * _tail_sum(p_cut + 1, sigma)
    lower = 1.0 - deficit
    if lower <= 0.5 or deficit >= retained:
        return PositivityCertificate("inconclusive", tuple(factors), retained, max(lower, 0.0),
                                     f"fitted tail deficit {deficit:.3g} too large")
    return PositivityCertificate("positive", tuple(factors), retained, lower,
                                 f"fitted envelope C={C:.3g}, sigma={sigma:.3g}")
