"""Exact Vinogradov-type mean values J_{l,k}(P) and growth-exponent fits."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .arith import PrimeTable
from .errors import CapacityError, DomainError

HASH_BUDGET = 10**8


@dataclass(frozen=True)
class MeanValueRecord:
    ell: int
    k: Tuple[int, ...]
    P: int
    count: int
    elapsed: float
    mass: int


class KeyPacker:
    """Maps integer vectors with known coordinate bounds to scalar int64 keys
    when the mixed-radix product fits, and to row ids otherwise."""

    def __init__(self, lo: Sequence[int], hi: Sequence[int]):
        self.lo = np.array(lo, dtype=np.int64)
        span = [int(h) - int(l) + 1 for l, h in zip(lo, hi)]
        self.packable = math.prod(span) < 2**62
        radix = [1]
        for s in span[:-1]:
            radix.append(radix[-1] * s)
        self.radix = np.array(radix, dtype=np.int64) if self.packable else None

    def pack(self, rows: np.ndarray) -> np.ndarray:
        if self.packable:
            return (rows - self.lo) @ self.radix
        return rows


def aggregate(keys: np.ndarray, counts: np.ndarray, weights: Optional[np.ndarray] = None):
    """Group equal keys (scalars or rows).

    Returns the index of each group's first member, the summed integer
    counts and the summed weights (None when no weights are given).
    """
    axis = None if keys.ndim == 1 else 0
    _, first, inv = np.unique(keys, axis=axis, return_index=True, return_inverse=True)
    inv = inv.ravel()
    n = first.size
    c = np.zeros(n, dtype=np.int64)
    np.add.at(c, inv, counts)
    w = np.bincount(inv, weights=weights, minlength=n) if weights is not None else None
    return first, c, w


def power_sum_histogram(values: np.ndarray, ell: int, k: Sequence[int],
                        weights: Optional[np.ndarray] = None, coef: Optional[Sequence[Sequence[int]]] = None):
    """Histogram of v(x) = (sum_i c_ij x_i^{k_j})_j over x in values^ell.

    Built one variable at a time, aggregating equal vectors after every step,
    so memory scales with the number of distinct partial vectors. Returns
    (rows, counts, summed product weights or None).
    """
    values = np.asarray(values, dtype=np.int64)
    t = len(k)
    coef = [[1] * t] * ell if coef is None else coef
    pows = np.stack([values.astype(object) ** kj for kj in k], axis=1)
    if max((abs(int(x)) for x in pows.ravel()), default=0) * ell * max(
            (abs(c) for row in coef for c in row), default=1) >= 2**62:
        raise CapacityError("power sums overflow 64-bit keys")
    pows = pows.astype(np.int64)
    rows = np.zeros((1, t), dtype=np.int64)
    counts = np.ones(1, dtype=np.int64)
    w = np.ones(1) if weights is not None else None
    for i in range(ell):
        c = np.array(coef[i], dtype=np.int64)
        step = pows * c
        if rows.shape[0] * values.size > HASH_BUDGET:
            raise CapacityError(f"{rows.shape[0] * values.size} partial tuples exceed the hash budget")
        new = (rows[:, None, :] + step[None, :, :]).reshape(-1, t)
        cnt = np.repeat(counts, values.size)
        ww = np.outer(w, weights).ravel() if w is not None else None
        packer = KeyPacker(new.min(axis=0), new.max(axis=0))
        first, counts, w = aggregate(packer.pack(new), cnt, ww)
        rows = new[first]
    return rows, counts, w


def count_J(ell: int, k: Sequence[int], P: int) -> MeanValueRecord:
    """Number of x, y in [1, P]^ell with equal power sums for every k_j."""
    if ell < 1 or P < 1:
        raise DomainError("ell and P must be positive")
    if float(P) ** ell > HASH_BUDGET:
        raise CapacityError(f"P^ell = {P ** ell} exceeds the hash budget {HASH_BUDGET}")
    start = time.perf_counter()
    _, counts, _ = power_sum_histogram(np.arange(1, P + 1), ell, k)
    count = int(np.sum(counts * counts))
    return MeanValueRecord(ell, tuple(k), P, count, time.perf_counter() - start, int(counts.sum()))


def count_J_naive(ell: int, k: Sequence[int], P: int) -> int:
    """Reference count by comparing every pair of tuples (tiny P only)."""
    grids = np.indices((P,) * ell).reshape(ell, -1) + 1
    v = np.stack([np.sum(grids.astype(np.int64) ** kj, axis=0) for kj in k], axis=1)
    eq = np.all(v[:, None, :] == v[None, :, :], axis=2)
    return int(eq.sum())


@dataclass(frozen=True)
class SlopeRecord:
    slope: float
    predicted: float
    gap: float
    points: int


def exponent_fit(records: Sequence[MeanValueRecord]) -> SlopeRecord:
    """Least-squares slope of log J against log P, with the exponent
    max(ell, 2 ell - K) expected from the mean value theorem."""
    if len(records) < 4:
        raise DomainError("exponent_fit needs at least 4 ladder points")
    x = np.log([r.P for r in records])
    y = np.log([float(r.count) for r in records])
    slope = float(np.polyfit(x, y, 1)[0])
    ell, K = records[0].ell, sum(records[0].k)
    pred = float(max(ell, 2 * ell - K))
    return SlopeRecord(slope, pred, slope - pred, len(records))


def ladder_to_csv(records: Sequence[MeanValueRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ell", "k", "P", "count", "log_slope"])
    prev = None
    for r in records:
        slope = "" if prev is None else repr(math.log(r.count / prev.count) / math.log(r.P / prev.P))
        w.writerow([r.ell, " ".join(map(str, r.k)), r.P, r.count, slope])
        prev = r
    return buf.getvalue()


@dataclass(frozen=True)
class PrimeMomentComparison:
    ell: int
    P: int
    prime_moment: float
    J: int
    ratio: float


def prime_moment_comparison(ell: int, k: Sequence[int], table: PrimeTable) -> PrimeMomentComparison:
    """Compare the log-weighted prime mean value sum_v W(v)^2 (the 2 ell-th
    moment of the prime sum over the torus) with (log P)^{2 ell} J_{ell,k}(P).

    The ratio is at most 1, since each prime solution is an integer solution
    carrying weight at most (log P)^{2 ell}.
    """
    P = table.limit
    _, _, W = power_sum_histogram(table.primes, ell, k, weights=table.log_primes)
    moment = float(np.sum(W * W))
    J = count_J(ell, k, P).count
    return PrimeMomentComparison(ell, P, moment, J, moment / (math.log(P) ** (2 * ell) * J))
