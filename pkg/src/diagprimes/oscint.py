"""Oscillatory integrals: I(X; theta, rho), its bound audit, the unit
profiles v(gamma) = int_0^1 e(sum_j gamma_j u_j y^{k_j}) dy and the
normalized singular integral c_J."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import CapacityError, DomainError
from .sysmodel import DiagonalSystem

TWO_PI = 2.0 * math.pi

# Gauss-Kronrod 15 / Gauss 7 on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[13:7:-2] = _WG[:3]


@dataclass(frozen=True)
class RhoExponent:
    """rho = beta + 2 pi i tau, so that x^{rho-1} = x^{beta-1} e(tau log x)."""

    beta: float
    tau: float = 0.0

    def check(self, k: int) -> None:
        lo = (k + 1) / (k + 2)
        if not (lo - 1e-12 <= self.beta <= 1.0 + 1e-12):
            raise DomainError(f"beta = {self.beta} outside [{lo:.6g}, 1]")

    @property
    def rho(self) -> complex:
        return complex(self.beta, TWO_PI * self.tau)


class QuadratureResult(NamedTuple):
    value: complex
    abs_error_estimate: float
    subdivisions: int


def _phase(x: np.ndarray, theta: np.ndarray, tau: float) -> np.ndarray:
    out = np.zeros_like(x)
    for j in range(theta.size, 0, -1):
        out = (out + theta[j - 1]) * x
    if tau:
        out = out + tau * np.log(x)
    return out


def _integrand(x: np.ndarray, theta: np.ndarray, rho: RhoExponent) -> np.ndarray:
    ph = _phase(x, theta, rho.tau)
    ph = ph - np.round(ph)
    return np.exp(1j * TWO_PI * ph) * x ** (rho.beta - 1.0)


def _majorant(x: np.ndarray, abs_theta: np.ndarray, abs_tau: float, x0: float) -> np.ndarray:
    out = np.zeros_like(x)
    for j in range(abs_theta.size, 0, -1):
        out = (out + abs_theta[j - 1]) * x
    return out + abs_tau * np.log(x / x0)


def _invert_majorant(levels, abs_theta, abs_tau, lo, hi):
    """x in [lo, hi] with majorant(x) = level, by vectorized bisection."""
    a = np.full(levels.shape, lo)
    b = np.full(levels.shape, hi)
    for _ in range(60):
        mid = 0.5 * (a + b)
        up = _majorant(mid, abs_theta, abs_tau, lo) < levels
        a = np.where(up, mid, a)
        b = np.where(up, b, mid)
    return 0.5 * (a + b)


def _taylor_head(eps: float, theta: np.ndarray, rho: RhoExponent, terms: int = 60) -> complex:
    """int_0^eps e(sum theta_j x^j) x^{rho-1} dx from the power series of the
    exponential; exact up to series truncation, with 2 pi sum |theta_j| eps^j <= 1."""
    k = theta.size
    f = 1j * TWO_PI * theta * eps ** np.arange(1, k + 1)  # scaled to x = eps * y
    c = [1.0 + 0j]
    total = 1.0 / rho.rho
    for n in range(1, terms):
        cn = sum(j * f[j - 1] * c[n - j] for j in range(1, min(k, n) + 1)) / n
        c.append(cn)
        term = cn / (n + rho.rho)
        total += term
        if abs(cn) < 1e-18 and n > k:
            break
    eps_rho = eps**rho.beta * complex(math.cos(TWO_PI * rho.tau * math.log(eps)),
                                      math.sin(TWO_PI * rho.tau * math.log(eps)))
    return complex(total * eps_rho)


def _gk_panels(a: np.ndarray, b: np.ndarray, theta, rho):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
    fx = _integrand(x, theta, rho)
    K = half * (fx @ KRONROD_WEIGHTS)
    G = half * (fx @ GAUSS_WEIGHTS)
    mag = half * (np.abs(fx) @ KRONROD_WEIGHTS)
    return K, np.abs(K - G), mag


def exp_integral_I(X: float, theta: Sequence[float], rho: RhoExponent,
                   rel_tol: float = 1e-12, abs_tol: float = 1e-15,
                   max_subdivisions: int = 200_000, check_beta: bool = True) -> QuadratureResult:
    """I(X; theta, rho) = int_0^X e(theta_1 x + ... + theta_k x^k) x^{rho-1} dx.

    [0, eps] is integrated through the Taylor series of the exponential; the
    rest is cut at quarter-cycle levels of the phase majorant
    sum |theta_j| x^j + |tau| log x and at dyadic points, then refined by
    adaptive GK15/G7 bisection.
    """
    theta = np.asarray(theta, dtype=np.float64)
    vals = [X, rho.beta, rho.tau, *theta.tolist()]
    if not all(math.isfinite(v) for v in vals):
        raise DomainError("non-finite input")
    if X < 1:
        raise DomainError("X must be >= 1")
    k = max(1, theta.size)
    if check_beta:
        rho.check(k)
    if theta.size == 0:
        theta = np.zeros(1)
    abs_theta, abs_tau = np.abs(theta), abs(rho.tau)

    # head: 2 pi sum |theta_j| eps^j <= 1
    def small(x):
        return TWO_PI * float(np.sum(abs_theta * x ** np.arange(1, theta.size + 1)))

    eps = float(X)
    if small(eps) > 1.0:
        lo, hi = 0.0, eps
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if small(mid) <= 1.0 else (lo, mid)
        eps = lo
    eps = min(eps, X)
    head = _taylor_head(eps, theta, rho) if eps > 0 else 0j
    if eps >= X:
        return QuadratureResult(head, 1e-16 * abs(head), 0)

    x0 = eps
    total_phase = float(_majorant(np.array([X]), abs_theta, abs_tau, x0)[0])
    n_quarter = int(math.ceil(4.0 * total_phase))
    if n_quarter > max_subdivisions:
        raise CapacityError(f"{n_quarter} quarter-wavelength panels exceed the subdivision limit")
    levels = np.arange(1, n_quarter) / 4.0
    cuts = _invert_majorant(levels, abs_theta, abs_tau, x0, float(X)) if levels.size else np.zeros(0)
    geo = x0 * 2.0 ** np.arange(1, int(math.log2(X / x0)) + 1)
    pts = np.unique(np.concatenate([[x0, float(X)], cuts, geo[geo < X]]))
    a, b = pts[:-1], pts[1:]

    done_val, done_err, done_mag = 0j, 0.0, 0.0
    panels = a.size
    while True:
        K, err, mag = _gk_panels(a, b, theta, rho)
        est = abs(head) + abs(done_val + K.sum())
        target = max(abs_tol, rel_tol * est)
        ok = err <= target * (b - a) / (X - x0) + 1e-17
        done_val += K[ok].sum()
        done_err += err[ok].sum()
        done_mag += mag[ok].sum()
        if ok.all():
            break
        a, b = a[~ok], b[~ok]
        if panels + a.size > max_subdivisions:
            done_val += K[~ok].sum()
            done_err += err[~ok].sum()
            done_mag += mag[~ok].sum()
            break
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        panels += a.size // 2
    err_total = done_err + 4e-16 * (done_mag + abs(head)) + 1e-16 * abs(head)
    return QuadratureResult(head + done_val, float(err_total), int(panels))


class BoundAudit(NamedTuple):
    sup: float
    p99: float
    samples: int
    ratios: np.ndarray
    argmax: Dict[str, object]


def i_bound_sample(i: int, seed: int, k: int, X_range=(1.0, 1e3),
                   scaled_range=(1e-2, 1e2), tau_range=(1e-2, 1e2)):
    """Deterministic i-th audit sample (X, theta, rho)."""
    rng = np.random.default_rng([seed, k, i])
    X = float(np.exp(rng.uniform(math.log(X_range[0]), math.log(X_range[1]))))
    scaled = np.exp(rng.uniform(math.log(scaled_range[0]), math.log(scaled_range[1]), size=k))
    signs = rng.choice([-1.0, 1.0], size=k + 1)
    theta = signs[:k] * scaled / X ** np.arange(1, k + 1)
    tau = float(signs[k] * np.exp(rng.uniform(math.log(tau_range[0]), math.log(tau_range[1]))))
    beta = float(rng.uniform((k + 1) / (k + 2), 1.0))
    return X, theta, RhoExponent(beta, tau)


def i_bound_audit(samples: int, seed: int, k: int, X_range=(1.0, 1e3),
                  scaled_range=(1e-2, 1e2), tau_range=(1e-2, 1e2)) -> BoundAudit:
    """Ratios |I| (1 + sum_j X^j |theta_j| + |tau|)^{1/(1+k)} / X^beta.

    Sample i depends only on (seed, k, i), so a larger run extends a smaller
    one with the same seed.
    """
    if samples < 100:
        raise DomainError("samples must be >= 100")
    ratios = np.empty(samples)
    best = {}
    for i in range(samples):
        X, theta, rho = i_bound_sample(i, seed, k, X_range, scaled_range, tau_range)
        I = exp_integral_I(X, theta, rho, rel_tol=1e-8).value
        denom = 1.0 + float(np.sum(X ** np.arange(1, k + 1) * np.abs(theta))) + abs(rho.tau)
        ratios[i] = abs(I) * denom ** (1.0 / (1 + k)) / X**rho.beta
        if ratios[i] >= ratios.max(initial=0.0, where=np.arange(samples) < i):
            best = {"index": i, "X": X, "theta": theta.tolist(), "beta": rho.beta, "tau": rho.tau}
    return BoundAudit(float(ratios.max()), float(np.percentile(ratios, 99)), samples, ratios, best)


# ------------------------------------------------------------ unit profile

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _row_poly(gamma: np.ndarray, row: Sequence[int], k: Sequence[int]) -> np.ndarray:
    """Coefficients c[:, m] of y^m (m = 1..k_max) for each gamma row."""
    out = np.zeros((gamma.shape[0], max(k)))
    for j, (u, kj) in enumerate(zip(row, k)):
        out[:, kj - 1] += gamma[:, j] * u
    return out


def unit_profile_many(gamma: np.ndarray, row: Sequence[int], k: Sequence[int],
                      chunk: int = 1 << 22) -> np.ndarray:
    """v(gamma) = int_0^1 e(sum_j gamma_j u_j y^{k_j}) dy for each row of gamma.

    Composite 20-point Gauss-Legendre with panels shorter than half a cycle
    of the largest phase derivative.
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=np.float64))
    coef = _row_poly(gamma, row, k)
    deg = np.arange(1, coef.shape[1] + 1)
    rate = float(np.max(np.abs(coef) @ deg)) if coef.size else 0.0
    panels = max(2, int(math.ceil(2.0 * rate)) + 1)
    edges = np.linspace(0.0, 1.0, panels + 1)
    y = (0.5 * (edges[:-1] + edges[1:])[:, None] + 0.5 * np.diff(edges)[:, None] * _GL_NODES).ravel()
    w = np.tile(_GL_WEIGHTS, panels) * 0.5 / panels
    powers = y[None, :] ** deg[:, None]
    out = np.empty(gamma.shape[0], dtype=np.complex128)
    step = max(1, chunk // y.size)
    for s in range(0, gamma.shape[0], step):
        ph = coef[s : s + step] @ powers
        ph -= np.round(ph)
        out[s : s + step] = np.exp(1j * TWO_PI * ph) @ w
    return out


def unit_profile(gamma: Sequence[float], row: Sequence[int], k: Sequence[int]) -> complex:
    return complex(unit_profile_many(np.asarray(gamma, dtype=np.float64)[None, :], row, k)[0])


# ------------------------------------------------------- singular integral

@dataclass(frozen=True)
class SingularIntegralEstimate:
    value: float
    half_width: float
    imag: float
    method: str
    gamma_cut: float
    evaluations: int
    converged: bool


def _product_profile(system: DiagonalSystem, pts: np.ndarray) -> np.ndarray:
    out = np.ones(pts.shape[0], dtype=np.complex128)
    for row in system.u:
        out *= unit_profile_many(pts, row, system.k)
    return out


def _tensor_rule(gamma_cut: float, panels: int):
    edges = np.linspace(-gamma_cut, gamma_cut, panels + 1)
    h = np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + 0.5 * h[:, None] * _GL_NODES).ravel()
    weights = (0.5 * h[:, None] * _GL_WEIGHTS).ravel()
    return nodes, weights


def _tensor_value(system, gamma_cut, panels):
    nodes, weights = _tensor_rule(gamma_cut, panels)
    t = system.t
    grids = np.meshgrid(*([nodes] * t), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    W = np.ones(1)
    for _ in range(t):
        W = np.multiply.outer(W, weights).ravel() if W.size > 1 else weights.copy()
    vals = _product_profile(system, pts)
    return complex(np.sum(vals * W)), pts.shape[0]


def singular_integral_normalized(system: DiagonalSystem, gamma_cut: float, method: str = "tensor",
                                 budget: int = 4 * 10**6, seed: int = 0, tol: float = 1e-9,
                                 replicates: int = 16) -> SingularIntegralEstimate:
    """c_J(Gamma) = int over |gamma_j| <= Gamma of prod_i v_i(gamma) dgamma.

    ``tensor`` doubles the panel count of a composite Gauss-Legendre product
    rule until two successive values agree to ``tol`` (t <= 3). ``qmc`` uses
    scrambled Sobol replicates and reports twice the standard error.
    A result that ran out of budget is returned with converged=False.
    """
    if gamma_cut < 0:
        raise DomainError("gamma_cut must be >= 0")
    if gamma_cut == 0:
        return SingularIntegralEstimate(0.0, 0.0, 0.0, method, 0.0, 0, True)
    t = system.t
    if method == "tensor":
        if t > 3:
            raise DomainError("tensor quadrature supports t <= 3")
        spread = sum(abs(u) for row in system.u for u in row) / t
        panels = max(4, int(math.ceil(gamma_cut * spread)))
        prev, used = None, 0
        while True:
            n = (panels * 20) ** t
            if used + n > budget:
                if prev is None:
                    raise CapacityError(f"tensor grid of {n} points exceeds budget {budget}")
                return SingularIntegralEstimate(prev.real, math.inf, prev.imag, method, gamma_cut, used, False)
            val, cnt = _tensor_value(system, gamma_cut, panels)
            used += cnt
            if prev is not None:
                diff = abs(val - prev)
                if diff <= tol * max(1.0, abs(val)):
                    return SingularIntegralEstimate(val.real, max(diff, 1e-15), val.imag, method,
                                                    gamma_cut, used, True)
            prev = val
            panels *= 2
    if method == "qmc":
        per = max(2, budget // replicates)
        m = int(math.floor(math.log2(per)))
        vol = (2.0 * gamma_cut) ** t
        ests = []
        for r in range(replicates):
            pts = qmc.Sobol(d=t, scramble=True, seed=np.random.default_rng([seed, r])).random_base2(m)
            pts = (2.0 * pts - 1.0) * gamma_cut
            ests.append(vol * np.mean(_product_profile(system, pts)))
        ests = np.array(ests)
        val = complex(ests.mean())
        half = 2.0 * float(ests.real.std(ddof=1)) / math.sqrt(replicates)
        return SingularIntegralEstimate(val.real, half, val.imag, method, gamma_cut,
                                        replicates * 2**m, half <= max(tol, 1e-3) * max(1.0, abs(val)))
    raise DomainError(f"unknown method {method!r}")


def gamma_ladder(system: DiagonalSystem, gamma_cut: float, steps: Sequence[float] = (0.125, 0.25, 0.5, 1.0),
                 **kwargs) -> List[SingularIntegralEstimate]:
    return [singular_integral_normalized(system, gamma_cut * f, **kwargs) for f in steps]


def ladder_to_csv(ladder: Sequence[SingularIntegralEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma_cut", "estimate", "error"])
    for e in ladder:
        w.writerow([repr(e.gamma_cut), repr(e.value), repr(e.half_width)])
    return buf.getvalue()
