"""Pareto characterization of elephants on an unsampled trace.

Pick the window length, then B_max (5% exceedance point), then the smallest
B_min for which a least-squares line through the log-log CCDF on
[B_min, B_max] fits well; the negated slope is the shape a.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .trace import FlowTable, PacketTrace, complete_window_count, window_flows

DEFAULT_DELTAS = (1.0, 2.0, 5.0, 10.0, 15.0, 30.0, 60.0)


@dataclass(frozen=True)
class DeltaChoice:
    delta: float
    qualified: bool
    # candidate delta -> score used for the decision
    scores: dict[float, float] = field(default_factory=dict)


@dataclass(frozen=True)
class SizeCcdf:
    """Empirical P(S >= x) on the observed sizes ``x`` (ascending)."""

    x: np.ndarray
    ccdf: np.ndarray
    n_ge: np.ndarray  # number of flows with size >= x
    n_flows: int

    @property
    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.x.tolist(), self.ccdf.tolist()))

    def at(self, size: int) -> float:
        i = np.searchsorted(self.x, size, side="left")
        return float(self.n_ge[i] / self.n_flows) if i < self.x.size else 0.0

    def n_greater(self, size: int) -> int:
        i = np.searchsorted(self.x, size, side="right")
        return int(self.n_ge[i]) if i < self.x.size else 0


@dataclass(frozen=True)
class ParetoFit:
    shape_a: float
    b_min: int
    b_max: int
    l2_residual: float
    intercept: float
    n_points: int
    qualified: bool
    n_elephants_window_avg: float = math.nan

    def predict_log_ccdf(self, x) -> np.ndarray:
        """Fitted log10 P(S >= x)."""
        return self.intercept - self.shape_a * np.log10(np.asarray(x, dtype=np.float64))

    def to_json(self) -> dict:
        return {
            "a": self.shape_a,
            "b_min": self.b_min,
            "b_max": self.b_max,
            "residual": self.l2_residual,
            "qualified": self.qualified,
            "n_elephants_window_avg": self.n_elephants_window_avg,
        }


def _sizes_of(source) -> np.ndarray:
    if isinstance(source, FlowTable):
        return source.sizes
    if isinstance(source, np.ndarray):
        return source
    source = list(source)
    if source and isinstance(source[0], FlowTable):
        return np.concatenate([t.sizes for t in source])
    return np.asarray(source, dtype=np.int64)


def empirical_ccdf(source: FlowTable | Iterable[FlowTable] | Sequence[int] | np.ndarray) -> SizeCcdf:
    """Exact CCDF of flow sizes from one table, pooled tables, or raw sizes."""
    sizes = _sizes_of(source)
    if sizes.size == 0:
        raise ValueError("no flows to build a CCDF from")
    x, cnt = np.unique(sizes, return_counts=True)
    n_ge = np.cumsum(cnt[::-1])[::-1]
    n = int(sizes.size)
    return SizeCcdf(x=x, ccdf=n_ge / n, n_ge=n_ge, n_flows=n)


def choose_bmax(ccdf: SizeCcdf, fraction: float = 0.05) -> int:
    """Smallest integer B with (number of flows larger than B) / n below ``fraction``."""
    n_gt = np.append(ccdf.n_ge[1:], 0)
    ok = np.flatnonzero(n_gt < fraction * ccdf.n_flows)
    return int(ccdf.x[ok[0]])


def _line_fit(X: np.ndarray, Y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = X.mean(), Y.mean()
    dx = X - xm
    slope = float(np.dot(dx, Y - ym) / np.dot(dx, dx))
    intercept = float(ym - slope * xm)
    resid = Y - (intercept + slope * X)
    return slope, intercept, float(np.mean(resid**2))


def fit_pareto(
    ccdf: SizeCcdf,
    b_max: int,
    residual_threshold: float = 2e-3,
    min_support: int = 5,
    n_windows: int = 1,
) -> ParetoFit:
    """Least-squares Pareto fit of the log10-log10 CCDF on [B_min, b_max].

    Candidates b are the observed sizes, ascending; the residual is the mean
    squared deviation from the fitted line.  B_min is the first b whose
    residual is below ``residual_threshold``.  When none is, the
    lowest-residual fit is returned with ``qualified=False``.  CCDF points
    backed by fewer than ``min_support`` flows are left out.
    """
    keep = (ccdf.x <= b_max) & (ccdf.n_ge >= min_support)
    xs = ccdf.x[keep]
    X = np.log10(xs.astype(np.float64))
    Y = np.log10(ccdf.ccdf[keep])
    best = None
    for i in range(xs.size - 2):
        slope, intercept, resid = _line_fit(X[i:], Y[i:])
        cand = (resid, i, slope, intercept)
        if resid < residual_threshold:
            best, qualified = cand, True
            break
        if best is None or resid < best[0]:
            best = cand
    else:
        qualified = False
    if best is None:
        raise ValueError("fewer than 3 CCDF points below b_max")
    resid, i, slope, intercept = best
    b_min = int(xs[i])
    n_eleph = int(ccdf.n_ge[np.searchsorted(ccdf.x, b_min)])
    return ParetoFit(
        shape_a=-slope,
        b_min=b_min,
        b_max=int(b_max),
        l2_residual=resid,
        intercept=intercept,
        n_points=int(xs.size - i),
        qualified=qualified,
        n_elephants_window_avg=n_eleph / n_windows,
    )


def _analysis_windows(trace: PacketTrace, delta: float, horizon: float, origin: float) -> list:
    n = complete_window_count(min(trace.duration, origin + horizon), delta, origin)
    if n == 0:
        n = 1  # prefix or trace shorter than one window: use the first one
    mask = trace.timestamps < origin + n * delta
    return window_flows(trace.subset(mask), delta, origin, n_windows=n)


def choose_delta_full(
    trace: PacketTrace,
    candidate_deltas: Sequence[float] = DEFAULT_DELTAS,
    size_threshold: int = 20,
    min_flows: float = 1000,
    prefix: float = 120.0,
    origin: float = 0.0,
) -> DeltaChoice:
    """Smallest window length whose complete windows in the first ``prefix``
    seconds hold, on average, at least ``min_flows`` flows of more than
    ``size_threshold`` packets.  Falls back to the largest candidate,
    unqualified.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    deltas = sorted(candidate_deltas)
    if not deltas or deltas[0] <= 0:
        raise ValueError("candidate deltas must be positive")
    scores = {}
    for d in deltas:
        tables = _analysis_windows(trace, d, prefix, origin)
        score = float(np.mean([np.count_nonzero(t.sizes > size_threshold) for t in tables]))
        scores[d] = score
        if score >= min_flows:
            return DeltaChoice(d, True, scores)
    return DeltaChoice(deltas[-1], False, scores)


def negligibility_epsilon(tables: Iterable[FlowTable], b_min: int) -> tuple[float, float]:
    """(mean-based epsilon, strict witness) for the no-dominant-flow condition.

    The first value is avg_w(mean v_i^2 over elephants) / avg_w(V) over
    windows holding elephants; the second is max over windows and flows of
    v_i^2 / V.
    """
    num, den, worst = [], [], 0.0
    for t in tables:
        v = t.sizes.astype(np.float64)
        big = v[v >= b_min]
        if big.size == 0:
            continue
        V = v.sum()
        num.append(np.mean(big**2))
        den.append(V)
        worst = max(worst, float(v.max() ** 2 / V))
    if not num:
        raise ValueError("no elephants (flows >= b_min) in any window")
    return float(np.mean(num) / np.mean(den)), worst


@dataclass
class Characterization:
    delta: DeltaChoice
    n_windows: int
    ccdf: SizeCcdf
    fit: ParetoFit

    @property
    def qualified(self) -> bool:
        return self.delta.qualified and self.fit.qualified

    def to_json(self) -> dict:
        doc = self.fit.to_json()
        doc.update(
            delta=self.delta.delta,
            delta_qualified=self.delta.qualified,
            n_windows=self.n_windows,
            n_flows=self.ccdf.n_flows,
            qualified=self.qualified,
        )
        return doc


def characterize_trace(
    trace: PacketTrace,
    candidate_deltas: Sequence[float] = DEFAULT_DELTAS,
    prefix: float = 120.0,
    residual_threshold: float = 2e-3,
    bmax_fraction: float = 0.05,
    min_support: int = 5,
    origin: float = 0.0,
) -> Characterization:
    """Window-length choice on the prefix, then CCDF and fit over all complete windows."""
    choice = choose_delta_full(trace, candidate_deltas, prefix=prefix, origin=origin)
    tables = _analysis_windows(trace, choice.delta, math.inf, origin)
    ccdf = empirical_ccdf(tables)
    b_max = choose_bmax(ccdf, bmax_fraction)
    fit = fit_pareto(ccdf, b_max, residual_threshold, min_support, n_windows=len(tables))
    return Characterization(choice, len(tables), ccdf, fit)


def write_ccdf_tsv(ccdf: SizeCcdf, path: str | Path, fit: ParetoFit | None = None) -> int:
    """Write (log10 x, -log10 ccdf[, fitted -log10 ccdf]); returns the line count.

    With a fit, only points in [B_min, B_max] are written.
    """
    x, c = ccdf.x, ccdf.ccdf
    if fit is not None:
        sel = (x >= fit.b_min) & (x <= fit.b_max)
        x, c = x[sel], c[sel]
    lx = np.log10(x.astype(np.float64))
    cols = [lx, -np.log10(c)]
    if fit is not None:
        cols.append(-fit.predict_log_ccdf(x))
    with open(path, "w", encoding="utf-8") as fh:
        for row in zip(*cols):
            fh.write("\t".join(f"{v:.6f}" for v in row) + "\n")
    return int(x.size)
