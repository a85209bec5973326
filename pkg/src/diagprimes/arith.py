"""Integer and multiplicative-function infrastructure.

Provides:
- a segmented sieve producing primes and the tables Lambda(n), mu(n), phi(n)
- deterministic Miller-Rabin primality
- factorization (trial division + Pollard-Brent)
- primitive roots for cyclic unit groups
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Tuple

import numpy as np

from .errors import CapacityError, DomainError, StructureError

Factorization = List[Tuple[int, int]]

# Valid for every n < 3.3e24 (Sorenson & Webster).
MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)

SEGMENT_THRESHOLD = 10**7
DEFAULT_BLOCK = 1 << 20
# int64 phi + int8 mu + float64 Lambda + sieve scratch, per integer
BYTES_PER_ENTRY = 40
DEFAULT_MEMORY_BUDGET = 2 << 30
MAX_LIMIT = 10**9


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Sieve products for 1 <= n <= limit.

    Arrays are indexed directly by n; index 0 is a placeholder
    (lam[0] = 0, mu[0] = 0, phi[0] = 0).

    Attributes:
        limit: the sieve bound P
        primes: ascending int64 array of primes <= P
        lam: float64 array, lam[n] = Lambda(n) (natural log)
        mu: int8 array of Moebius values
        phi: int64 array of Euler phi values
    """

    limit: int
    primes: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    _log_primes: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for arr in (self.primes, self.lam, self.mu, self.phi):
            arr.setflags(write=False)
        logs = np.log(self.primes.astype(np.float64))
        logs.setflags(write=False)
        object.__setattr__(self, "_log_primes", logs)

    @property
    def log_primes(self) -> np.ndarray:
        return self._log_primes

    @property
    def theta(self) -> float:
        """Chebyshev theta(P) = sum of log p over p <= P."""
        return float(np.sum(self._log_primes))

    @property
    def psi(self) -> float:
        """Chebyshev psi(P) = sum of Lambda(n) over n <= P."""
        return float(np.sum(self.lam))

    def pi(self) -> int:
        return int(self.primes.size)

    def is_prime(self, n: int) -> bool:
        if n > self.limit:
            return is_prime(n)
        return n >= 2 and self.lam[n] > 0 and self.phi[n] == n - 1


def build_prime_table(
    P: int,
    block_size: int = DEFAULT_BLOCK,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> PrimeTable:
    """Sieve primes, Lambda, mu and phi up to P.

    The interval [1, P] is processed in blocks (a single block when
    P <= 10^7), dividing out every base prime p <= sqrt(P); whatever is left
    after that is a single prime factor larger than sqrt(P).
    """
    P = int(P)
    if P < 1:
        raise CapacityError(f"sieve limit must be >= 1, got {P}")
    if P > MAX_LIMIT or (P + 1) * BYTES_PER_ENTRY > memory_budget:
        raise CapacityError(
            f"sieve limit {P} exceeds the memory budget of {memory_budget} bytes"
        )
    if block_size < 1:
        raise DomainError("block_size must be positive")

    lam = np.zeros(P + 1, dtype=np.float64)
    mu = np.zeros(P + 1, dtype=np.int8)
    phi = np.zeros(P + 1, dtype=np.int64)

    root = math.isqrt(P)
    base = _simple_sieve(root)
    block = P + 1 if P <= SEGMENT_THRESHOLD else block_size

    for lo in range(1, P + 1, block):
        hi = min(P + 1, lo + block)
        _sieve_block(lo, hi, base, lam, mu, phi)

    primes = np.flatnonzero((phi == np.arange(P + 1) - 1) & (lam > 0)).astype(np.int64)
    return PrimeTable(limit=P, primes=primes, lam=lam, mu=mu, phi=phi)


def _simple_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return np.flatnonzero(flags).astype(np.int64)


def _sieve_block(lo, hi, base, lam, mu, phi):
    n = np.arange(lo, hi, dtype=np.int64)
    rem = n.copy()
    mu_b = np.ones(n.size, dtype=np.int8)
    phi_b = n.copy()
    distinct = np.zeros(n.size, dtype=np.int8)
    lastp = np.ones(n.size, dtype=np.int64)

    for p in base:
        p = int(p)
        if p >= hi:
            break
        start = (-lo) % p
        if start >= n.size:
            continue
        idx = slice(start, None, p)
        rem[idx] //= p
        mu_b[idx] = -mu_b[idx]
        phi_b[idx] = phi_b[idx] // p * (p - 1)
        distinct[idx] += 1
        lastp[idx] = p
        pe = p * p
        while pe < hi:
            start = (-lo) % pe
            if start < n.size:
                sl = slice(start, None, pe)
                rem[sl] //= p
                mu_b[sl] = 0
            pe *= p

    big = rem > 1
    mu_b[big] = -mu_b[big]
    phi_b[big] = phi_b[big] // rem[big] * (rem[big] - 1)
    distinct[big] += 1
    lastp[big] = rem[big]

    one_prime = distinct == 1
    lam_b = np.zeros(n.size)
    lam_b[one_prime] = np.log(lastp[one_prime].astype(np.float64))

    lam[lo:hi] = lam_b
    mu[lo:hi] = mu_b
    phi[lo:hi] = phi_b


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    n = int(n)
    if n < 2:
        return False
    for p in MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g, r, q = 1, 1, 1
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


@lru_cache(maxsize=65536)
def _factor_cached(n: int) -> Tuple[Tuple[int, int], ...]:
    out = {}
    for p in (2, 3, 5):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    d, step = 7, 0
    gaps = (4, 2, 4, 2, 4, 6, 2, 6)
    while d * d <= n and d < 10_000:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += gaps[step]
        step = (step + 1) % 8
    stack = [n] if n > 1 else []
    rng = random.Random(n)
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if m < d * d or is_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        f = _pollard_brent(m, rng)
        stack.extend((f, m // f))
    return tuple(sorted(out.items()))


def factorize(n: int) -> Factorization:
    """Prime factorization as (prime, exponent) pairs with increasing primes."""
    n = int(n)
    if n < 1:
        raise DomainError(f"cannot factorize {n}")
    return list(_factor_cached(n))


def euler_phi(n: int) -> int:
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def von_mangoldt(n: int) -> float:
    f = factorize(n)
    return math.log(f[0][0]) if len(f) == 1 else 0.0


def divisors(n: int) -> List[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * int(v) // math.gcd(out, int(v))
    return out


def units(q: int) -> np.ndarray:
    """Reduced residues 1 <= r <= q with gcd(r, q) = 1 (r = 1 when q = 1)."""
    r = np.arange(1, q + 1, dtype=np.int64)
    return r[np.gcd(r, q) == 1]


def multiplicative_order(g: int, q: int) -> int:
    if math.gcd(g, q) != 1:
        raise DomainError(f"{g} is not a unit modulo {q}")
    if q == 1:
        return 1
    order = euler_phi(q)
    for p, _ in factorize(order):
        while order % p == 0 and pow(g, order // p, q) == 1:
            order //= p
    return order


def primitive_root(q: int) -> int:
    """Smallest generator of (Z/q)^*, defined when the group is cyclic."""
    q = int(q)
    if q < 1:
        raise DomainError(f"modulus must be positive, got {q}")
    if q in (1, 2):
        return 1
    if q == 4:
        return 3
    f = factorize(q)
    odd = [(p, e) for p, e in f if p != 2]
    two = dict(f).get(2, 0)
    if len(odd) != 1 or two > 1:
        raise StructureError(
            f"(Z/{q})^* is not cyclic; decompose {q} by CRT into prime-power parts"
        )
    ph = euler_phi(q)
    fac = [p for p, _ in factorize(ph)]
    for g in range(2, q):
        if math.gcd(g, q) != 1:
            continue
        if all(pow(g, ph // p, q) != 1 for p in fac):
            return g
    raise AssertionError("unreachable: cyclic group without generator")
