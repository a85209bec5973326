"""Ground-truth prime solution counts R(P) and the discrete orthogonality
check that recovers them from the prime exponential sums."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .arith import PrimeTable
from .errors import CapacityError, DomainError
from .expsums import _pow_mod_array
from .meanvalue import KeyPacker, power_sum_histogram
from .sysmodel import DiagonalSystem

MITM_BUDGET = 10**8


@dataclass(frozen=True)
class SolutionCount:
    """Prime solutions of the system with all p_i <= P.

    ``weighted`` sums prod_i log p_i; the ``diagonal_*`` fields count the
    all-equal family p_1 = ... = p_s, present when every column sums to 0.
    """

    weighted: float
    unweighted: int
    P: int
    digest: str
    diagonal_weighted: float = 0.0
    diagonal_unweighted: int = 0

    @property
    def offdiagonal_weighted(self) -> float:
        return self.weighted - self.diagonal_weighted

    @property
    def offdiagonal_unweighted(self) -> int:
        return self.unweighted - self.diagonal_unweighted


def _half(system: DiagonalSystem, table: PrimeTable, rows, sign: int):
    if not rows:
        return np.zeros((1, system.t), dtype=np.int64), np.ones(1, dtype=np.int64), np.ones(1)
    coef = [[sign * system.u[i][j] for j in range(system.t)] for i in rows]
    return power_sum_histogram(table.primes, len(rows), system.k, weights=table.log_primes, coef=coef)


def brute_force_R(system: DiagonalSystem, table: PrimeTable) -> SolutionCount:
    """Exact count by meet in the middle.

    The first ceil(s/2) variables and the negated remaining ones are each
    aggregated into histograms of their t-vectors of partial sums
    sum_i u_ij p_i^{k_j}; solutions are pairs of equal vectors.
    """
    s = system.s
    h = (s + 1) // 2
    n = table.pi()
    if float(n) ** h > MITM_BUDGET:
        raise CapacityError(f"pi(P)^{h} = {n ** h} exceeds the enumeration budget {MITM_BUDGET}")
    rows_a, cnt_a, w_a = _half(system, table, list(range(h)), 1)
    rows_b, cnt_b, w_b = _half(system, table, list(range(h, s)), -1)

    lo = np.minimum(rows_a.min(axis=0), rows_b.min(axis=0))
    hi = np.maximum(rows_a.max(axis=0), rows_b.max(axis=0))
    packer = KeyPacker(lo, hi)
    if packer.packable:
        ka, kb = packer.pack(rows_a), packer.pack(rows_b)
    else:
        _, ids = np.unique(np.vstack([rows_a, rows_b]), axis=0, return_inverse=True)
        ids = ids.ravel()
        ka, kb = ids[: rows_a.shape[0]], ids[rows_a.shape[0]:]
    order = np.argsort(ka)
    ka_sorted = ka[order]
    pos = np.searchsorted(ka_sorted, kb)
    pos_c = np.minimum(pos, ka_sorted.size - 1)
    hit = ka_sorted[pos_c] == kb
    ia = order[pos_c[hit]]
    ib = np.flatnonzero(hit)
    unweighted = sum(int(x) * int(y) for x, y in zip(cnt_a[ia], cnt_b[ib]))
    prods = w_a[ia] * w_b[ib]
    weighted = float(math.fsum(prods.tolist())) if prods.size else 0.0

    dw, du = 0.0, 0
    if system.is_homogeneous_diagonal and n:
        du = n
        dw = float(math.fsum((table.log_primes**s).tolist()))
    return SolutionCount(weighted, unweighted, table.limit, system.digest(), dw, du)


def brute_force_R_naive(system: DiagonalSystem, table: PrimeTable) -> SolutionCount:
    """Reference count over all s-tuples of primes (pi(P)^s small)."""
    p = table.primes
    s, n = system.s, p.size
    if float(n) ** s > 10**7:
        raise CapacityError("naive enumeration too large")
    idx = np.indices((n,) * s).reshape(s, -1)
    ok = np.ones(idx.shape[1], dtype=bool)
    for j, kj in enumerate(system.k):
        tot = np.zeros(idx.shape[1], dtype=np.int64)
        for i in range(s):
            tot += system.u[i][j] * p[idx[i]] ** kj
        ok &= tot == 0
    w = np.prod(table.log_primes[idx[:, ok]], axis=0) if ok.any() else np.zeros(0)
    return SolutionCount(float(math.fsum(w.tolist())), int(ok.sum()), table.limit, system.digest())


def counts_to_csv(counts) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["digest", "P", "weighted", "unweighted", "diagonal_weighted", "diagonal_unweighted"])
    for c in counts:
        wr.writerow([c.digest, c.P, repr(c.weighted), c.unweighted, repr(c.diagonal_weighted),
                     c.diagonal_unweighted])
    return buf.getvalue()


@dataclass(frozen=True)
class OrthogonalityRecord:
    grid_average: float
    weighted: float
    discrepancy: float
    M: int
    aliasing_possible: bool
    imag: float

    @property
    def ok(self) -> bool:
        return self.discrepancy <= 1e-8 * max(1.0, self.weighted)


def alias_free_bound(system: DiagonalSystem, P: int) -> int:
    return 2 * system.s * max(abs(r[0]) for r in system.u) * P ** system.k_max


def dft_orthogonality_check(system: DiagonalSystem, table: PrimeTable, M: Optional[int] = None,
                            reference: Optional[SolutionCount] = None) -> OrthogonalityRecord:
    """Average of prod_i f_i(a/M) over a = 0..M-1 against the direct count.

    Each f_i on the grid is one FFT of the log-weighted histogram of
    u_i p^k mod M (exact integer phases). The average equals R(P) exactly
    once M exceeds every frequency of the product; smaller M aliases.
    """
    if system.t != 1:
        raise DomainError("the orthogonality check supports single-equation systems only")
    bound = alias_free_bound(system, table.limit)
    if M is None:
        M = 1 << int(bound).bit_length()
    if M > 1 << 26:
        raise CapacityError(f"grid size {M} exceeds the FFT budget")
    k = system.k[0]
    prod = np.ones(M, dtype=np.complex128)
    p = table.primes
    for row in system.u:
        res = ((int(row[0]) % M) * _pow_mod_array(p, k, M) % M).astype(np.int64)
        hist = np.bincount(res, weights=table.log_primes, minlength=M)
        prod *= np.fft.ifft(hist) * M
    avg = complex(np.mean(prod))
    ref = reference if reference is not None else brute_force_R(system, table)
    return OrthogonalityRecord(avg.real, ref.weighted, abs(avg.real - ref.weighted), M, M <= bound, avg.imag)
