"""Diagonal systems sum_i u_ij x_i^{k_j} = 0, their solvability probes and
experiment configuration documents."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from . import arith
from .errors import DomainError, ParseError, ValidationError


@dataclass(frozen=True)
class DiagonalSystem:
    """Coefficient matrix and exponents of a diagonal system.

    ``u[i][j]`` is the coefficient of variable i in equation j, so rows are
    variables and columns are equations.
    """

    u: Tuple[Tuple[int, ...], ...]
    k: Tuple[int, ...]

    @property
    def s(self) -> int:
        return len(self.u)

    @property
    def t(self) -> int:
        return len(self.k)

    @property
    def K(self) -> int:
        return sum(self.k)

    @property
    def k_max(self) -> int:
        return max(self.k)

    def column(self, j: int) -> Tuple[int, ...]:
        return tuple(row[j] for row in self.u)

    def as_array(self) -> np.ndarray:
        return np.array(self.u, dtype=np.int64).reshape(self.s, self.t)

    @property
    def is_homogeneous_diagonal(self) -> bool:
        """True when the all-equal tuple (x, ..., x) solves every equation."""
        return all(sum(self.column(j)) == 0 for j in range(self.t))

    @property
    def is_vinogradov(self) -> bool:
        return tuple(sorted(self.k)) == tuple(range(1, self.k_max + 1))

    def digest(self) -> str:
        import hashlib

        payload = json.dumps({"u": self.u, "k": self.k}, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def make_system(u: Sequence, k: Sequence[int]) -> DiagonalSystem:
    """Build and validate a system; a flat ``u`` is read as a single equation."""
    k = tuple(int(x) for x in k)
    rows = []
    for row in u:
        if isinstance(row, (int, np.integer)):
            rows.append((int(row),))
        else:
            rows.append(tuple(int(x) for x in row))
    return validate(DiagonalSystem(u=tuple(rows), k=k))


def validate(system: DiagonalSystem) -> DiagonalSystem:
    """Check invariants and divide every coefficient column by its gcd."""
    if not system.k:
        raise ValidationError("empty system: no equations")
    if not system.u:
        raise ValidationError("empty system: no variables")
    seen = {}
    for j, kj in enumerate(system.k):
        if int(kj) < 1:
            raise ValidationError(f"exponent k[{j}] = {kj} must be a positive integer")
        if kj in seen:
            raise ValidationError(f"duplicate exponent {kj} at k[{seen[kj]}] and k[{j}]")
        seen[kj] = j
    t = len(system.k)
    for i, row in enumerate(system.u):
        if len(row) != t:
            raise ValidationError(f"row u[{i}] has {len(row)} entries, expected {t}")
        for j, c in enumerate(row):
            if c == 0:
                raise ValidationError(f"zero coefficient at u[{i}][{j}]")
    cols = [[row[j] for row in system.u] for j in range(t)]
    gcds = [math.gcd(*col) if len(col) > 1 else abs(col[0]) for col in cols]
    rows = tuple(
        tuple(int(row[j]) // gcds[j] for j in range(t)) for row in system.u
    )
    return DiagonalSystem(u=rows, k=tuple(int(x) for x in system.k))


class ThresholdVerdict(NamedTuple):
    meets: bool
    required: int
    margin: int


def threshold_check(s: int, s_eps: int) -> ThresholdVerdict:
    """Whether s >= 2 s_eps + 1, with the margin s - (2 s_eps + 1)."""
    required = 2 * int(s_eps) + 1
    return ThresholdVerdict(int(s) >= required, required, int(s) - required)


def vinogradov_threshold(system: DiagonalSystem) -> Optional[ThresholdVerdict]:
    """For k = (1, ..., k) report whether s >= k^2 + k + 1; None otherwise."""
    if not system.is_vinogradov:
        return None
    kk = system.k_max
    return threshold_check(system.s, kk * (kk + 1) // 2)


class LocalSolvability(NamedTuple):
    solvable: Optional[bool]
    witness: Optional[Tuple[int, ...]]
    mode: str
    budget: int


EXHAUSTIVE_BUDGET = 2 * 10**8


def _pow_mod(x: np.ndarray, e: int, q: int) -> np.ndarray:
    """x^e mod q elementwise for q < 2^31."""
    if q >= 2**31:
        return np.array([pow(int(v), e, q) for v in x], dtype=np.int64)
    base, out = x % q, np.ones_like(x)
    while e:
        if e & 1:
            out = out * base % q
        base = base * base % q
        e >>= 1
    return out


def _unit_images(system: DiagonalSystem, q: int) -> np.ndarray:
    """images[i, m, j] = u_ij * m^{k_j} mod q for the units m of Z/q."""
    m = arith.units(q)
    out = np.empty((system.s, m.size, system.t), dtype=np.int64)
    for j, kj in enumerate(system.k):
        powers = _pow_mod(m, kj, q)
        for i in range(system.s):
            out[i, :, j] = (system.u[i][j] % q) * powers % q
    return out


def check_congruences(system: DiagonalSystem, m: Sequence[int], q: int) -> bool:
    if any(math.gcd(int(x), q) != 1 for x in m):
        return False
    return all(
        sum(system.u[i][j] * pow(int(m[i]), kj, q) for i in range(system.s)) % q == 0
        for j, kj in enumerate(system.k)
    )


def local_solvability(
    system: DiagonalSystem,
    p: int,
    table: Optional[arith.PrimeTable] = None,
    budget: int = EXHAUSTIVE_BUDGET,
    seed: int = 0,
    attempts: int = 10**6,
) -> LocalSolvability:
    """Search for a unit solution of the system modulo the prime p.

    Exhaustive mode runs a reachability sweep over partial sums in (Z/p)^t,
    which decides existence exactly and backtracks a witness. When p^t is
    too large for that, random unit tuples are tried and a negative answer
    is reported as None ("not found").
    """
    p = int(p)
    prime = table.is_prime(p) if table is not None else arith.is_prime(p)
    if not prime:
        raise DomainError(f"{p} is not prime")
    cells = p**system.t
    if system.s * (p - 1) * cells <= budget:
        return _solve_mod_p_exhaustive(system, p)
    rng = np.random.default_rng(seed)
    images = _unit_images(system, p)
    used = 0
    batch = 4096
    while used < attempts:
        n = min(batch, attempts - used)
        idx = rng.integers(0, p - 1, size=(n, system.s))
        totals = np.zeros((n, system.t), dtype=np.int64)
        for i in range(system.s):
            totals = (totals + images[i][idx[:, i]]) % p
        hit = np.flatnonzero(~totals.any(axis=1))
        used += n
        if hit.size:
            w = tuple(int(x) + 1 for x in idx[hit[0]])
            return LocalSolvability(True, w, "random", used)
    return LocalSolvability(None, None, "random", used)


def _solve_mod_p_exhaustive(system: DiagonalSystem, p: int) -> LocalSolvability:
    t = system.t
    shape = (p,) * t
    images = _unit_images(system, p)
    start = np.zeros(shape, dtype=bool)
    start[(0,) * t] = True
    reach = [start]
    for i in range(system.s):
        cur = reach[-1]
        nxt = np.zeros(shape, dtype=bool)
        for v in np.unique(images[i], axis=0):
            nxt |= np.roll(cur, tuple(int(x) for x in v), axis=tuple(range(t)))
        reach.append(nxt)
    work = system.s * (p - 1) * p**t
    if not reach[-1][(0,) * t]:
        return LocalSolvability(False, None, "exhaustive", work)
    state = np.zeros(t, dtype=np.int64)
    witness = [0] * system.s
    units = arith.units(p)
    for i in reversed(range(system.s)):
        prev = (state - images[i]) % p
        ok = reach[i][tuple(prev.T)]
        m = int(np.flatnonzero(ok)[0])
        witness[i] = int(units[m])
        state = prev[m]
    return LocalSolvability(True, tuple(witness), "exhaustive", work)


class RealProbe(NamedTuple):
    found: bool
    point: Optional[Tuple[float, ...]]
    residual: float
    attempts: int
    region: str


def real_solution_probe(
    system: DiagonalSystem,
    attempts: int = 64,
    seed: int = 0,
    tol: float = 1e-9,
    margin: float = 1e-2,
) -> RealProbe:
    """Random restarts of bounded least squares on sum_i u_ij x_i^{k_j}.

    The search box is [margin, 1 - margin]^s, the interior of the unit cube
    that carries the singular integral. Failure proves nothing.
    """
    if attempts < 1:
        raise DomainError("attempts must be >= 1")
    U = system.as_array().astype(np.float64)
    k = np.array(system.k, dtype=np.float64)
    region = f"[{margin}, {1 - margin}]^{system.s}"

    def resid(x):
        return (x[:, None] ** k[None, :] * U).sum(axis=0)

    def jac(x):
        return (U * k[None, :] * x[:, None] ** (k[None, :] - 1)).T

    rng = np.random.default_rng(seed)
    best = (math.inf, None)
    for n in range(1, attempts + 1):
        x0 = rng.uniform(margin, 1 - margin, size=system.s)
        sol = least_squares(
            resid, x0, jac=jac, bounds=(margin, 1 - margin),
            xtol=1e-15, ftol=1e-15, gtol=1e-15, method="trf",
        )
        r = float(np.max(np.abs(resid(sol.x))))
        if r < best[0]:
            best = (r, sol.x)
        if r <= tol:
            return RealProbe(True, tuple(float(v) for v in sol.x), r, n, region)
    return RealProbe(False, None, best[0], attempts, region)


# ---------------------------------------------------------------- config

CONFIG_KEYS = ("u", "k", "P", "delta", "q_cut", "gamma_cut", "samples", "seed", "tolerance")
DEFAULT_Q_CUT = 1000
DEFAULT_GAMMA_CUT = 50.0
DEFAULT_SAMPLES = 200
DEFAULT_SEED = 0
DEFAULT_TOLERANCE = 0.15


def default_delta(system: DiagonalSystem) -> float:
    kk = system.k_max
    return min(0.05, 1.0 / (4 * system.t * (kk * kk + kk + 1)))


def recommended_delta_bound(system: DiagonalSystem) -> float:
    kk = system.k_max
    return 1.0 / (2 * system.t * (kk * kk + kk + 1))


@dataclass(frozen=True)
class ExperimentConfig:
    system: DiagonalSystem
    P: Tuple[int, ...]
    delta: float
    q_cut: int
    gamma_cut: float
    samples: int
    seed: int
    tolerance: float
    defaulted: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def delta_within_recommended(self) -> bool:
        return self.delta < recommended_delta_bound(self.system)


def _require_int(doc, key, lo=None):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"expected an integer, got {v!r}", key)
    if lo is not None and v < lo:
        raise ParseError(f"must be >= {lo}, got {v}", key)
    return v


def _require_real(doc, key):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {v!r}", key)
    if not math.isfinite(v):
        raise ParseError("must be finite", key)
    return float(v)


def config_from_dict(doc: Dict[str, Any]) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ParseError("config must be an object")
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise ParseError("unknown key", unknown[0])
    for key in ("u", "k", "P"):
        if key not in doc:
            raise ParseError("missing required key", key)

    if not isinstance(doc["k"], list) or not doc["k"]:
        raise ParseError("expected a non-empty array", "k")
    for j, v in enumerate(doc["k"]):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError(f"expected an integer, got {v!r}", f"k[{j}]")
    if not isinstance(doc["u"], list) or not doc["u"]:
        raise ParseError("expected a non-empty array", "u")
    for i, row in enumerate(doc["u"]):
        entries = row if isinstance(row, list) else [row]
        for j, v in enumerate(entries):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ParseError(f"expected an integer, got {v!r}", f"u[{i}][{j}]")
    try:
        system = make_system(doc["u"], doc["k"])
    except ValidationError as exc:
        raise ParseError(str(exc), "u") from exc

    P = doc["P"]
    P_list = P if isinstance(P, list) else [P]
    if not P_list:
        raise ParseError("expected at least one value", "P")
    for n, v in enumerate(P_list):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            path = f"P[{n}]" if isinstance(P, list) else "P"
            raise ParseError(f"expected a positive integer, got {v!r}", path)

    defaulted = []

    def pick(key, default, reader):
        if key in doc:
            return reader(doc, key)
        defaulted.append(key)
        return default

    delta = pick("delta", default_delta(system), _require_real)
    if not 0.0 < delta < 1.0:
        raise ParseError(f"must lie in (0, 1), got {delta}", "delta")
    q_cut = pick("q_cut", DEFAULT_Q_CUT, lambda d, k: _require_int(d, k, lo=2))
    gamma_cut = pick("gamma_cut", DEFAULT_GAMMA_CUT, _require_real)
    if gamma_cut < 0:
        raise ParseError("must be >= 0", "gamma_cut")
    samples = pick("samples", DEFAULT_SAMPLES, lambda d, k: _require_int(d, k, lo=1))
    seed = pick("seed", DEFAULT_SEED, lambda d, k: _require_int(d, k, lo=0))
    if seed >= 2**64:
        raise ParseError("must fit in 64 bits", "seed")
    tolerance = pick("tolerance", DEFAULT_TOLERANCE, _require_real)
    if tolerance <= 0:
        raise ParseError("must be positive", "tolerance")

    return ExperimentConfig(
        system=system, P=tuple(P_list), delta=delta, q_cut=q_cut,
        gamma_cut=gamma_cut, samples=samples, seed=seed, tolerance=tolerance,
        defaulted=tuple(defaulted),
    )


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg} at line {exc.lineno}") from exc
    return config_from_dict(doc)


def config_to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    return {
        "u": [list(row) for row in config.system.u],
        "k": list(config.system.k),
        "P": list(config.P) if len(config.P) > 1 else config.P[0],
        "delta": config.delta,
        "q_cut": config.q_cut,
        "gamma_cut": config.gamma_cut,
        "samples": config.samples,
        "seed": config.seed,
        "tolerance": config.tolerance,
    }


def emit_config(config: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2)


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(config, **changes)


def enumerate_unit_solutions(system: DiagonalSystem, q: int):
    """Yield every unit tuple solving the system mod q. Brute force; small q only."""
    m = [int(x) for x in arith.units(q)]
    for tup in itertools.product(m, repeat=system.s):
        if check_congruences(system, tup, q):
            yield tup
