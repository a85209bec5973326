"""Exponential sums over primes and integers, Vaughan's decomposition,
Dirichlet characters and complete sums W(q, a, chi).

Two evaluation modes are supported for a point alpha of the torus:

* exact: every coordinate is a ``Fraction``; phases are integers modulo the
  common denominator and are looked up in a table of roots of unity;
* float: phases alpha_j * u_j * n^{k_j} are reduced mod 1 exactly from the
  binary expansion of alpha_j (uint64 wrap-around arithmetic), so that large
  n^{k_j} cost no precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import arith
from .arith import PrimeTable
from .errors import CapacityError, DomainError

TWO_PI = 2.0 * math.pi
Real = Union[float, Fraction]


@dataclass(frozen=True)
class AlphaPoint:
    """A point of (R/Z)^t with every coordinate reduced to [0, 1)."""

    coords: Tuple[Real, ...]

    @classmethod
    def of(cls, values) -> "AlphaPoint":
        if isinstance(values, AlphaPoint):
            return values
        if isinstance(values, (int, float, Fraction, np.floating)):
            values = (values,)
        out = []
        for v in values:
            if isinstance(v, tuple) and len(v) == 2:
                v = Fraction(int(v[0]), int(v[1]))
            if isinstance(v, (Fraction, int, np.integer)):
                out.append(Fraction(v) % 1)
            else:
                v = float(v)
                if not math.isfinite(v):
                    raise DomainError(f"non-finite coordinate {v}")
                out.append(v % 1.0)
        return cls(tuple(out))

    @property
    def t(self) -> int:
        return len(self.coords)

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coords)

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    def __neg__(self) -> "AlphaPoint":
        return AlphaPoint.of(tuple(-c for c in self.coords))


# ------------------------------------------------------------------ phases

def _pow_mod_array(n: np.ndarray, e: int, q: int) -> np.ndarray:
    """n^e mod q elementwise; int64 when q < 2^31, Python ints otherwise."""
    if q < 2**31:
        base = n % q
        out = np.ones_like(base)
        while e:
            if e & 1:
                out = out * base % q
            base = base * base % q
            e >>= 1
        return out
    return np.array([pow(int(x), e, q) for x in n], dtype=object)


def _pow_wrap64(n: np.ndarray, e: int) -> np.ndarray:
    """n^e mod 2^64 as uint64 (exact wrap-around)."""
    base = n.astype(np.uint64)
    out = np.ones_like(base)
    with np.errstate(over="ignore"):
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
    return out


def _frac_times(alpha: float, mult_u64: np.ndarray, mult_exact) -> np.ndarray:
    """frac(alpha * N) for integer N, given N mod 2^64 and a thunk for exact N."""
    if alpha == 0.0:
        return np.zeros(mult_u64.shape)
    num, den = alpha.as_integer_ratio()
    if den <= 2**64:
        with np.errstate(over="ignore"):
            prod = np.uint64(num) * mult_u64
        if den < 2**64:
            prod = prod & np.uint64(den - 1)
        return (prod.astype(np.float64) / float(den)) % 1.0
    # alpha below 2^-11 with more than 64 fractional bits: exact big-int path
    N = mult_exact()
    return np.array([float(Fraction((num * int(x)) % den, den)) for x in N])


def phases(alpha: AlphaPoint, row: Sequence[int], k: Sequence[int], n: np.ndarray):
    """Phase of e(sum_j alpha_j u_j n^{k_j}) for each n.

    Returns ``(numerators, L)`` in exact mode (phase = numerator / L) and a
    float array in [0, 1) in float mode.
    """
    alpha = AlphaPoint.of(alpha)
    if alpha.t != len(k) or len(row) != len(k):
        raise DomainError("alpha, row and k must have the same length t")
    n = np.asarray(n, dtype=np.int64)
    if alpha.exact:
        L = arith.lcm(c.denominator for c in alpha.coords)
        if L >= 2**127:
            raise CapacityError(f"common denominator {L} exceeds the 128-bit exact range")
        acc = np.zeros(n.shape, dtype=np.int64 if L < 2**31 else object)
        for c, u, kj in zip(alpha.coords, row, k):
            coef = (c.numerator * (L // c.denominator) * int(u)) % L
            if coef == 0:
                continue
            acc = (acc + coef * _pow_mod_array(n, int(kj), L)) % L
        return acc, L
    out = np.zeros(n.shape)
    for c, u, kj in zip(alpha.coords, row, k):
        c = float(c)
        if c == 0.0:
            continue
        with np.errstate(over="ignore"):
            mult = _pow_wrap64(n, int(kj)) * np.uint64(int(u) % 2**64)

        def exact_mult(kj=kj, u=u):
            return [int(u) * int(x) ** int(kj) for x in n]

        out = out + _frac_times(c, mult, exact_mult)
    return out % 1.0


@lru_cache(maxsize=64)
def _roots_table(L: int) -> np.ndarray:
    m = np.arange(L)
    return np.exp(1j * TWO_PI * m / L)


def unit_phasors(ph) -> np.ndarray:
    if isinstance(ph, tuple):
        num, L = ph
        if L <= 2**20 and getattr(num, "dtype", None) != object:
            return _roots_table(L)[num]
        frac = np.array([float(Fraction(int(x), L)) for x in np.ravel(num)]).reshape(np.shape(num))
        return np.exp(1j * TWO_PI * frac)
    return np.exp(1j * TWO_PI * ph)


# ------------------------------------------------------------- prime sums

def prime_exp_sum(alpha, row: Sequence[int], k: Sequence[int], table: PrimeTable) -> complex:
    """f_i(alpha) = sum over p <= P of (log p) e(alpha . u_i p^k)."""
    ph = phases(alpha, row, k, table.primes)
    return complex(np.sum(table.log_primes * unit_phasors(ph)))


def coefficient_free_sum(alpha, k: Sequence[int], table: PrimeTable) -> complex:
    """f(alpha) = sum over p <= P of (log p) e(alpha . p^k)."""
    return prime_exp_sum(alpha, (1,) * len(k), k, table)


def von_mangoldt_sum(alpha, row: Sequence[int], k: Sequence[int], table: PrimeTable) -> complex:
    """F(alpha) = sum over n <= P of Lambda(n) e(alpha . u n^k)."""
    n = np.flatnonzero(table.lam)
    ph = phases(alpha, row, k, n)
    return complex(np.sum(table.lam[n] * unit_phasors(ph)))


def weyl_sum(alpha, k: Sequence[int], X: float) -> complex:
    """H(alpha, X) = sum over 1 <= l <= X of e(alpha . l^k)."""
    if X < 0:
        raise DomainError("X must be >= 0")
    N = int(math.floor(X))
    if N == 0:
        return 0j
    ph = phases(alpha, (1,) * len(k), k, np.arange(1, N + 1))
    return complex(np.sum(unit_phasors(ph)))


# ----------------------------------------------------------------- Vaughan

class VaughanParts(NamedTuple):
    S1: complex
    S2: complex
    S3: complex
    S4: complex
    X: int
    F: complex
    c3_within_log_bound: bool

    @property
    def total(self) -> complex:
        return self.S1 + self.S2 + self.S3 + self.S4


@lru_cache(maxsize=16)
def vaughan_coefficients(table: PrimeTable, X: int):
    """Coefficient arrays (over n = 0..P) of the four Vaughan pieces.

    S1 carries Lambda(n) for n <= X; S2 carries sum_{m|n, m<=X} mu(m) log(n/m);
    S3 carries -sum_{m|n, m<=X^2} c3(m) with c3 = (mu 1_{<=X}) * (Lambda 1_{<=X});
    S4 carries sum_{ml=n, l>X} mu(l) a(m) with a(m) = sum_{d|m, d>X} Lambda(d).
    All coefficients are built by sieving over the small factor.
    """
    P = table.limit
    lam, mu = table.lam, table.mu.astype(np.float64)
    logs = np.zeros(P + 1)
    logs[1:] = np.log(np.arange(1, P + 1))

    c1 = np.zeros(P + 1)
    c1[1 : X + 1] = lam[1 : X + 1]

    c2 = np.zeros(P + 1)
    for m in range(1, X + 1):
        if mu[m]:
            c2[m :: m] += mu[m] * logs[1 : P // m + 1]

    M3 = min(X * X, P)
    c3 = np.zeros(M3 + 1)
    for n2 in range(1, min(X, M3) + 1):
        if mu[n2]:
            top = min(X, M3 // n2)
            c3[n2 : n2 * top + 1 : n2] += mu[n2] * lam[1 : top + 1]
    c3_ok = bool(np.all(np.abs(c3[2:]) <= logs[2 : M3 + 1] + 1e-12)) and abs(c3[1]) == 0.0
    d3 = np.zeros(P + 1)
    for m in np.flatnonzero(c3):
        d3[m :: m] += c3[m]

    small = np.zeros(P + 1)
    for d in range(2, min(X, P) + 1):
        if lam[d]:
            small[d :: d] += lam[d]
    a = logs - small
    d4 = np.zeros(P + 1)
    for l in range(X + 1, P // (X + 1) + 1):
        if mu[l]:
            mmax = P // l
            d4[l * (X + 1) : l * mmax + 1 : l] += mu[l] * a[X + 1 : mmax + 1]

    for arr in (c1, c2, d3, d4):
        arr.setflags(write=False)
    return c1, c2, -d3, d4, c3_ok


def vaughan_decompose(alpha, row: Sequence[int], k: Sequence[int], table: PrimeTable, X: int) -> VaughanParts:
    """Split F(alpha) = S1 + S2 + S3 + S4 with cut parameter X."""
    X = int(X)
    if X < 1:
        raise DomainError("X must be >= 1")
    if X > table.limit:
        raise DomainError(f"X = {X} exceeds P = {table.limit}")
    c1, c2, c3, c4, ok = vaughan_coefficients(table, X)
    n = np.arange(1, table.limit + 1)
    h = unit_phasors(phases(alpha, row, k, n))
    S = [complex(np.sum(c[1:] * h)) for c in (c1, c2, c3, c4)]
    lam = table.lam[1:]
    F = complex(np.sum(lam[lam > 0] * h[lam > 0]))
    return VaughanParts(S[0], S[1], S[2], S[3], X, F, ok)


# -------------------------------------------------------------- characters

@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    """A character mod q, stored by its values on 0..q-1.

    ``index`` gives the exponent attached to each generator in
    ``generators`` (pairs of prime-power modulus, generator, order).
    """

    modulus: int
    index: Tuple[int, ...]
    generators: Tuple[Tuple[int, int, int], ...]
    values: np.ndarray

    @property
    def principal(self) -> bool:
        return not any(self.index)

    def __call__(self, n: int) -> complex:
        return complex(self.values[int(n) % self.modulus])

    def conj(self) -> "DirichletCharacter":
        idx = tuple((-c) % g[2] for c, g in zip(self.index, self.generators))
        return DirichletCharacter(self.modulus, idx, self.generators, np.conj(self.values))


def _component_logs(p: int, e: int):
    """Generators of (Z/p^e)^* and discrete logs of every residue mod p^e."""
    m = p**e
    if p == 2:
        if e == 1:
            return m, []
        if e == 2:
            gens = [(3, 2)]
        else:
            gens = [(m - 1, 2), (5, 2 ** (e - 2))]
        logs = [np.full(m, -1, dtype=np.int64) for _ in gens]
        x = 1
        for b in range(2 ** (e - 2) if e >= 3 else 1):
            for a_ in range(2):
                r = (pow(m - 1, a_, m) * x) % m if e >= 3 else pow(3, a_ + 2 * b, m)
                if e >= 3:
                    logs[0][r], logs[1][r] = a_, b
                else:
                    logs[0][r] = a_
            x = x * 5 % m
        return m, list(zip(gens, logs))
    g = arith.primitive_root(m)
    n = m // p * (p - 1)
    log = np.full(m, -1, dtype=np.int64)
    x = 1
    for i in range(n):
        log[x] = i
        x = x * g % m
    return m, [((g, n), log)]


@lru_cache(maxsize=512)
def characters(q: int) -> Tuple[DirichletCharacter, ...]:
    """All phi(q) Dirichlet characters mod q, principal character first."""
    q = int(q)
    if q < 1:
        raise DomainError("modulus must be >= 1")
    res = np.arange(q)
    unit = np.gcd(res, q) == 1
    if q == 1:
        unit[:] = True
    slots = []  # (component modulus, generator, order, log of every residue mod q)
    for p, e in arith.factorize(q):
        m, comp = _component_logs(p, e)
        for (g, order), log in comp:
            slots.append((m, g, order, log[res % m]))
    orders = [s[2] for s in slots]
    lam = arith.lcm(orders) if orders else 1
    roots = np.exp(1j * TWO_PI * np.arange(lam) / lam)
    gens = tuple((m, g, o) for m, g, o, _ in slots)
    out = []
    for idx in np.ndindex(*orders) if orders else [()]:
        num = np.zeros(q, dtype=np.int64)
        for c, (m, g, o, log) in zip(idx, slots):
            num = num + c * (lam // o) * np.where(unit, log, 0)
        vals = np.where(unit, roots[num % lam], 0.0)
        vals.setflags(write=False)
        out.append(DirichletCharacter(q, tuple(int(c) for c in idx), gens, vals))
    return tuple(out)


def principal_character(q: int) -> DirichletCharacter:
    return characters(q)[0]


# ----------------------------------------------------------- complete sums

def _residue_images(q: int, row: Sequence[int], k: Sequence[int]) -> np.ndarray:
    r = np.arange(1, q + 1, dtype=np.int64)
    cols = [(int(u) % q) * _pow_mod_array(r, int(kj), q) % q for u, kj in zip(row, k)]
    return np.stack(cols, axis=1) if cols else np.zeros((q, 0), dtype=np.int64)


def _weights(q: int, chi: Optional[DirichletCharacter]) -> np.ndarray:
    r = np.arange(1, q + 1)
    if chi is None:
        return (np.gcd(r, q) == 1).astype(np.complex128) if q > 1 else np.ones(1, complex)
    if chi.modulus != q:
        raise DomainError(f"character modulus {chi.modulus} differs from q = {q}")
    return chi.values[r % q]


def complete_sum_W(q: int, a: Sequence[int], row: Sequence[int], k: Sequence[int],
                   chi: Optional[DirichletCharacter] = None) -> complex:
    """W_i(q, a, chi) = sum_{r=1}^q chi(r) e(sum_j a_j u_j r^{k_j} / q).

    Without a character the sum runs over reduced residues only.
    """
    q = int(q)
    a = [int(x) % q for x in a]
    img = _residue_images(q, row, k)
    num = (img @ np.array(a, dtype=np.int64)) % q if a else np.zeros(q, dtype=np.int64)
    return complex(np.sum(_weights(q, chi) * _roots_table(q)[num]))


def complete_sums_all(q: int, row: Sequence[int], k: Sequence[int],
                      chi: Optional[DirichletCharacter] = None) -> np.ndarray:
    """W_i(q, a, chi) for every a in (Z/q)^t, as an array of shape (q,)*t.

    Uses W(a) = sum_c H[c] e(a.c/q) with H the chi-weighted histogram of the
    vectors (u_j r^{k_j} mod q)_j, i.e. an inverse t-dimensional DFT.
    """
    q = int(q)
    t = len(k)
    img = _residue_images(q, row, k)
    H = np.zeros((q,) * t, dtype=np.complex128)
    np.add.at(H, tuple(img.T), _weights(q, chi))
    return np.fft.ifftn(H) * q**t


def ramanujan_sum(q: int, n: int) -> int:
    """c_q(n) = mu(q/g) phi(q) / phi(q/g) with g = gcd(n, q)."""
    g = math.gcd(int(n), int(q))
    return arith.mobius(q // g) * arith.euler_phi(q) // arith.euler_phi(q // g)


# ------------------------------------------------------------------ audits

W_AUDIT_BUDGET = 2 * 10**8


CHARACTER_CONVENTION = "chi evaluated at r; reduced residues only when no character is given"


class WMomentAudit(NamedTuple):
    q: int
    s: int
    ratio: float
    per_character: Tuple[Tuple[Tuple[int, ...], float], ...]
    convention: str = CHARACTER_CONVENTION


def w_moment_audit(q: int, k: Sequence[int], s: int, row: Sequence[int]) -> WMomentAudit:
    """max over chi of sum_{a in [1,q]^t} |W(q,a,chi)|^{s-1} / q^{s-1}."""
    t = len(k)
    if q**t * arith.euler_phi(q) > W_AUDIT_BUDGET:
        raise CapacityError(f"q^t phi(q) = {q**t * arith.euler_phi(q)} exceeds the audit budget")
    table = []
    for chi in characters(q):
        W = complete_sums_all(q, row, k, chi)
        total = float(np.sum(np.abs(W) ** (s - 1)))
        table.append((chi.index, total / float(q) ** (s - 1)))
    return WMomentAudit(q, s, max(r for _, r in table), tuple(table))


class CZRow(NamedTuple):
    q: int
    ratio: float
    a: Tuple[int, ...]
    character: Tuple[int, ...]


class CZAudit(NamedTuple):
    rows: Tuple[CZRow, ...]
    sup: float
    exponent: float
    convention: str = CHARACTER_CONVENTION


def cz_ratio_audit(q_range: Iterable[int], k: Sequence[int], row: Sequence[int],
                   principal_only: bool = False) -> CZAudit:
    """Per-q maximum of |W_i(q,a,chi)| / q^{1 - 1/(k_max+1)}.

    Only primitive a (gcd(a_1, ..., a_t, q) = 1) enter, so the trivial a = 0
    case, where W equals phi(q), never contributes.
    """
    t = len(k)
    expo = 1.0 - 1.0 / (max(k) + 1)
    rows = []
    for q in q_range:
        q = int(q)
        if q < 2:
            continue
        if q**t * arith.euler_phi(q) > W_AUDIT_BUDGET:
            raise CapacityError(f"q = {q} exceeds the audit budget")
        grid = np.indices((q,) * t).reshape(t, -1)
        g = np.gcd.reduce(np.vstack([grid, np.full(grid.shape[1], q)]), axis=0)
        prim = (g == 1).reshape((q,) * t)
        chars = characters(q)[:1] if principal_only else characters(q)
        best = CZRow(q, -1.0, (), ())
        for chi in chars:
            W = np.abs(complete_sums_all(q, row, k, chi))
            W[~prim] = -1.0
            pos = int(np.argmax(W))
            if W.flat[pos] > best.ratio:
                a = tuple(int(x) for x in np.unravel_index(pos, W.shape))
                best = CZRow(q, float(W.flat[pos]), a, chi.index)
        rows.append(best._replace(ratio=best.ratio / q**expo))
    sup = max((r.ratio for r in rows), default=0.0)
    return CZAudit(tuple(rows), sup, expo)
