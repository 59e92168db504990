"""Sample-count distribution of Pareto flows and the inversion formulas.

A Pareto(a, b_min) flow sampled at rate p_s is hit j times with probability

    Q_j = E[(p_s S)^j / j! * exp(-p_s S)] = a x^a / j! * Gamma(j - a, x),  x = p_s b_min,

with Gamma(s, x) the upper incomplete gamma function.  For x << 1 this tends
to a x^a Gamma(j - a) / j!, which is what the shape and count estimators
a(j) and K(j) invert.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .trace import FlowTable

QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class ParetoSpec:
    shape_a: float
    b_min: int
    p_s: float

    def __post_init__(self):
        if not self.shape_a > 0:
            raise ValueError("shape_a must be positive")
        if self.b_min < 1:
            raise ValueError("b_min must be >= 1")
        if not 0 < self.p_s <= 1:
            raise ValueError("p_s must lie in (0, 1]")

    @property
    def x(self) -> float:
        return self.p_s * self.b_min

    @property
    def asymptotic_regime(self) -> bool:
        """True when p_s * b_min < 1, the regime where the Gamma(j - a) form applies."""
        return self.x < 1


def _log_prefactor(spec: ParetoSpec, j: int) -> float:
    return math.log(spec.shape_a) + spec.shape_a * math.log(spec.x) - math.lgamma(j + 1)


def q_j_exact(spec: ParetoSpec, j: int) -> float:
    """Q_j for a continuous Pareto size on [b_min, inf), by adaptive quadrature.

    The integral of u^(j-a-1) e^-u over [x, inf) is taken in t = log u, where
    the integrand exp(c + s t - e^t) is smooth and peaks at t = log(s).
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    s = j - spec.shape_a
    c = _log_prefactor(spec, j)
    t0 = math.log(spec.x)

    def f(t):
        if t > 700.0:
            return 0.0
        return math.exp(c + s * t - math.exp(t))

    t_peak = math.log(s) if s > spec.x else t0
    t_far = math.log(max(s, spec.x, 1.0) + 60.0 + 12.0 * math.sqrt(max(s, 1.0)))
    pieces = [(t0, t_peak), (t_peak, t_far), (t_far, math.inf)]
    total = 0.0
    err = 0.0
    for lo, hi in pieces:
        if hi <= lo:
            continue
        val, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
        err += e
    if not math.isfinite(total) or err > QUAD_RTOL * abs(total) + 1e-300:
        raise ArithmeticError(f"quadrature did not converge for j={j}, {spec}")
    return total


def q_j_asymptotic(spec: ParetoSpec, j: int) -> float:
    """a (p_s b_min)^a Gamma(j - a) / j!, valid when p_s b_min << 1."""
    if not j > spec.shape_a:
        raise ValueError(f"need j > a (j={j}, a={spec.shape_a})")
    return math.exp(_log_prefactor(spec, j) + math.lgamma(j - spec.shape_a))


def q_j_empirical(sizes: Iterable[float], p_s: float, j: int) -> float:
    """E[(p_s S)^j e^(-p_s S) / j!] over an empirical (or point-mass) size law."""
    lam = p_s * np.asarray(list(sizes) if not isinstance(sizes, np.ndarray) else sizes, dtype=np.float64)
    return float(np.mean(stats.poisson.pmf(j, lam)))


def q_tail_bound(spec: ParetoSpec, j_last: int) -> float:
    """Upper bound on sum_{k > j_last} Q_k, from the asymptotic terms.

    Uses sum_{k>=n} Gamma(k-a)/k! = Gamma(n-a) / (a (n-1)!) and
    Gamma(s, x) <= Gamma(s).
    """
    n = j_last + 1
    if not n > spec.shape_a:
        return math.inf
    return math.exp(spec.shape_a * math.log(spec.x) + math.lgamma(n - spec.shape_a) - math.lgamma(n))


def q_distribution(spec: ParetoSpec, tol: float = 1e-7, j_cap: int = 20_000) -> np.ndarray:
    """Q_0, Q_1, ... truncated where the remaining mass is provably below ``tol``.

    The tail bound decays like j^-a, so shapes near 1 with large p_s b_min
    can need more than ``j_cap`` terms; that raises rather than truncating
    silently.
    """
    out = []
    j = 0
    while True:
        out.append(q_j_exact(spec, j))
        if q_tail_bound(spec, j) < tol:
            break
        j += 1
        if j > j_cap:
            raise ArithmeticError("Q tail does not fall below tol within j_cap terms")
    return np.array(out)


def _elephant_ratios(tables: Iterable[FlowTable], b_min: int) -> list[np.ndarray]:
    ratios = []
    for t in tables:
        v = t.sizes
        big = v[v >= b_min].astype(np.float64)
        if big.size:
            ratios.append(big**2 / float(v.sum()))
    return ratios


def lecam_bound(tables: Iterable[FlowTable], b_min: int, p_s: float) -> float:
    """p_s times the mean of v_i^2 / V over all elephants of all windows.

    Bounds |E(W_j)/K - Q_j| for every j at once.
    """
    ratios = _elephant_ratios(tables, b_min)
    if not ratios:
        raise ValueError("no elephants (flows >= b_min) in any window")
    return p_s * float(np.concatenate(ratios).mean())


def a_of_j(ew_j: float, ew_j1: float, j: int) -> float:
    """Shape estimate (j+1)(1 - E(W_{j+1})/E(W_j)) - 1.

    A non-positive value means W_j is dominated by mice or noise; callers
    should treat it as unusable and move to a larger j.
    """
    if not ew_j > 0:
        raise ValueError("E(W_j) must be positive")
    return (j + 1) * (1.0 - ew_j1 / ew_j) - 1.0


def k_of_j(ew_j: float, a: float, b_min: int, p_s: float, j: int) -> float:
    """Elephant count estimate j! E(W_j) / (a (p_s b_min)^a Gamma(j - a))."""
    if not j > a:
        raise ValueError(f"need j > a (j={j}, a={a})")
    if not a > 0:
        raise ValueError(f"need a > 0, got {a}")
    if not ew_j > 0 or not p_s * b_min > 0:
        raise ValueError("E(W_j) and p_s * b_min must be positive")
    x = p_s * b_min
    if j <= 170:
        return math.factorial(j) * ew_j / (a * x**a * math.gamma(j - a))
    return math.exp(math.lgamma(j + 1) + math.log(ew_j) - math.log(a) - a * math.log(x) - math.lgamma(j - a))


def infer_bmin(j: int, p_s: float, threshold: float | None = None) -> int:
    """Elephant threshold implied by the sample index j.

    Smallest integer B >= 1 such that a flow of B + 1 packets (the smallest
    size above B) is sampled j times with probability above ``threshold``
    (default p_s / 10), each packet being kept independently with
    probability p_s.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    if not 0 < p_s < 1:
        raise ValueError("p_s must lie in (0, 1)")
    thr = p_s / 10 if threshold is None else threshold
    limit = int(math.ceil(10 * j / p_s)) + 10
    b = np.arange(1, limit + 1)
    ok = np.flatnonzero(stats.binom.pmf(j, b + 1, p_s) > thr)
    if ok.size == 0:
        raise ValueError(f"no B up to {limit} reaches probability {thr} for j={j}")
    return int(b[ok[0]])


def series_from_sizes(sizes: Sequence[int], p_s: float, j_max: int) -> np.ndarray:
    """Expected W_1..W_j_max for a fixed set of flow sizes under Poisson sampling."""
    lam = p_s * np.asarray(sizes, dtype=np.float64)
    j = np.arange(1, j_max + 1)
    return stats.poisson.pmf(j[None, :], lam[:, None]).sum(axis=0)
