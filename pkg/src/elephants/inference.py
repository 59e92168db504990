"""Elephant inference from sampled traffic.

Window the sampled stream so that about 80-100 flows per window are sampled
twice, count W_j (flows sampled exactly j times), pick the j where a(j) is
most stable, and invert for the Pareto shape and the elephant count.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .characterize import DEFAULT_DELTAS, DeltaChoice
from .estimator import a_of_j, infer_bmin, k_of_j, lecam_bound
from .sampling import SampledFlowTable, count_sampled_flows
from .trace import FlowTable, PacketTrace, complete_window_count, window_flows

W2_BAND = (80.0, 100.0)
MIN_EW = 5.0
TIE_TOL = 1e-12  # gaps closer than this count as ties


@dataclass(frozen=True)
class ObservableSeries:
    """Per-window W_1..W_jmax and their means; column j-1 holds W_j."""

    per_window: np.ndarray
    means: np.ndarray

    @property
    def n_windows(self) -> int:
        return int(self.per_window.shape[0])

    @property
    def j_max(self) -> int:
        return int(self.means.size)

    def mean(self, j: int) -> float:
        return float(self.means[j - 1]) if 1 <= j <= self.j_max else 0.0


def observables(tables: Sequence[FlowTable], j_max: int) -> ObservableSeries:
    """Count flows sampled exactly j times per window; means include empty windows."""
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    per_window = np.zeros((len(tables), j_max), dtype=np.int64)
    for row, t in enumerate(tables):
        if t.sizes.size:
            per_window[row] = np.bincount(t.sizes, minlength=j_max + 1)[1:j_max + 1]
    means = per_window.mean(axis=0) if len(tables) else np.zeros(j_max)
    return ObservableSeries(per_window, means)


def sampled_windows(sampled: PacketTrace, delta: float, origin: float = 0.0) -> list[SampledFlowTable]:
    """Sampled tables for the complete windows of the capture (at least one)."""
    n = max(complete_window_count(sampled.duration, delta, origin), 1)
    mask = sampled.timestamps < origin + n * delta
    return count_sampled_flows(sampled.subset(mask), delta, origin, n_windows=n)


def choose_delta_sampled(
    sampled: PacketTrace,
    candidate_deltas: Sequence[float] = DEFAULT_DELTAS,
    band: tuple[float, float] = W2_BAND,
    origin: float = 0.0,
) -> DeltaChoice:
    """Smallest window length with E(W_2) inside ``band``.

    Otherwise the candidate closest to the band, marked unqualified.
    """
    if len(sampled) == 0:
        raise ValueError("empty sampled stream")
    deltas = sorted(candidate_deltas)
    lo, hi = band
    scores = {}
    for d in deltas:
        ew2 = observables(sampled_windows(sampled, d, origin), 2).mean(2)
        scores[d] = ew2
        if lo <= ew2 <= hi:
            return DeltaChoice(d, True, scores)

    def dist(d):
        return max(lo - scores[d], scores[d] - hi, 0.0)

    best = min(deltas, key=lambda d: (dist(d), -d))
    return DeltaChoice(best, False, scores)


def a_series(means: ObservableSeries | Sequence[float]) -> dict[int, float]:
    """a(j) for every j with E(W_j) > 0 and E(W_{j+1}) available."""
    m = _means(means)
    return {j: a_of_j(m[j - 1], m[j], j) for j in range(1, m.size) if m[j - 1] > 0}


def _means(means) -> np.ndarray:
    if isinstance(means, ObservableSeries):
        return means.means
    return np.asarray(means, dtype=np.float64)


def choose_j(means: ObservableSeries | Sequence[float], min_ew: float = MIN_EW, min_j: int = 2) -> int:
    """j minimising |a(j) - a(j+1)| among j with E(W_j) >= ``min_ew``.

    ``means[j-1]`` is E(W_j).  a(j+1) needs E(W_{j+1}) > 0 and E(W_{j+2}) > 0.
    Ties go to the larger j, where mice matter least.
    """
    m = _means(means)
    best = None
    for j in range(min_j, m.size - 1):
        if m[j - 1] < min_ew or not (m[j] > 0 and m[j + 1] > 0):
            continue
        gap = abs(a_of_j(m[j - 1], m[j], j) - a_of_j(m[j], m[j + 1], j + 1))
        if best is None or gap <= best[0] + TIE_TOL:
            best = (gap, j)
    if best is None:
        raise ValueError(
            f"no j >= {min_j} with E(W_j) >= {min_ew} and E(W_j+2) > 0; "
            "use a larger window or a longer capture"
        )
    return best[1]


@dataclass
class InferenceResult:
    delta_used: float
    j_star: int | None
    a_hat: float
    b_min_hat: int | None
    k_hat: float
    qualified: bool
    p_s: float
    n_windows: int
    ew_table: list[float] = field(default_factory=list)
    delta_scores: dict[float, float] = field(default_factory=dict)
    lecam_bound: float | None = None
    k_exp: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def error(self) -> float | None:
        """(K(j) - K_exp) / K_exp when a reference count is known."""
        if self.k_exp is None or not self.k_exp > 0 or not math.isfinite(self.k_hat):
            return None
        return (self.k_hat - self.k_exp) / self.k_exp

    def to_json(self) -> dict:
        return {
            "delta": self.delta_used,
            "j": self.j_star,
            "a_hat": self.a_hat,
            "b_min_hat": self.b_min_hat,
            "k_hat": self.k_hat,
            "qualified": self.qualified,
            "p_s": self.p_s,
            "n_windows": self.n_windows,
            "ew_table": {str(j + 1): v for j, v in enumerate(self.ew_table)},
            "delta_scores": {f"{d:g}": v for d, v in self.delta_scores.items()},
            "lecam_bound": self.lecam_bound,
            "k_exp": self.k_exp,
            "error": self.error,
            "notes": self.notes,
        }


def infer(
    sampled: PacketTrace,
    p_s: float,
    candidate_deltas: Sequence[float] = DEFAULT_DELTAS,
    j_max: int = 20,
    origin: float = 0.0,
    reference: PacketTrace | None = None,
    band: tuple[float, float] = W2_BAND,
) -> InferenceResult:
    """Window choice, observables, j choice, then a(j), B_min and K(j).

    With an unsampled ``reference`` trace the result also carries the
    Le Cam bound and the true mean number of flows >= B_min per window.
    Unsatisfied stages clear ``qualified`` instead of raising.
    """
    choice = choose_delta_sampled(sampled, candidate_deltas, band, origin)
    tables = sampled_windows(sampled, choice.delta, origin)
    series = observables(tables, j_max)
    result = InferenceResult(
        delta_used=choice.delta,
        j_star=None,
        a_hat=math.nan,
        b_min_hat=None,
        k_hat=math.nan,
        qualified=choice.qualified,
        p_s=p_s,
        n_windows=series.n_windows,
        ew_table=series.means.tolist(),
        delta_scores=choice.scores,
    )
    if not choice.qualified:
        result.notes.append(f"E(W_2) outside {band} for every candidate window length")
    try:
        j = choose_j(series)
    except ValueError as exc:
        result.qualified = False
        result.notes.append(str(exc))
        return result
    result.j_star = j
    result.a_hat = a_of_j(series.mean(j), series.mean(j + 1), j)
    try:
        result.b_min_hat = infer_bmin(j, p_s)
    except ValueError as exc:
        result.qualified = False
        result.notes.append(str(exc))
        return result
    if 0 < result.a_hat < j:
        result.k_hat = k_of_j(series.mean(j), result.a_hat, result.b_min_hat, p_s, j)
    else:
        result.qualified = False
        result.notes.append(f"a({j}) = {result.a_hat:.3f} outside (0, j)")

    if reference is not None:
        n = len(tables)
        mask = reference.timestamps < origin + n * choice.delta
        ref_tables = window_flows(reference.subset(mask), choice.delta, origin, n_windows=n)
        result.k_exp = float(np.mean([np.count_nonzero(t.sizes >= result.b_min_hat) for t in ref_tables]))
        try:
            result.lecam_bound = lecam_bound(ref_tables, result.b_min_hat, p_s)
        except ValueError:
            result.notes.append("no elephants in reference trace")
    return result
