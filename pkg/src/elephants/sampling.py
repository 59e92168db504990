"""1-out-of-kappa packet sampling and reference sampling models."""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .trace import FlowTable, PacketRecord, PacketTrace, _windowed_counts


class SamplingMode(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    # independent per-packet coin flips; a test oracle, not a router behaviour
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class SamplingConfig:
    kappa: int = 100
    phase: int | None = None  # None -> kappa - 1, i.e. the kappa-th, 2*kappa-th, ... packet
    mode: SamplingMode = SamplingMode.DETERMINISTIC
    seed: int = 0  # bernoulli mode only

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        if self.phase is None:
            object.__setattr__(self, "phase", self.kappa - 1)
        if not 0 <= self.phase < self.kappa:
            raise ValueError(f"phase must lie in [0, kappa), got {self.phase}")
        object.__setattr__(self, "mode", SamplingMode(self.mode))

    @property
    def p_s(self) -> float:
        return 1.0 / self.kappa


class SampledFlowTable(FlowTable):
    @property
    def total_sampled(self) -> int:
        return self.total


def sampled_count(n_packets: int, kappa: int, phase: int) -> int:
    """Number of positions 0..n-1 congruent to ``phase`` mod ``kappa``."""
    return max(0, (n_packets - phase + kappa - 1) // kappa)


def deterministic_sample(records: Sequence[PacketRecord] | PacketTrace, config: SamplingConfig) -> PacketTrace:
    """Keep every packet whose 0-based stream position is ``phase`` mod ``kappa``.

    The counter is global: it does not restart at window boundaries.
    """
    trace = PacketTrace.from_records(records)
    if config.mode is not SamplingMode.DETERMINISTIC:
        raise ValueError("deterministic_sample needs mode=deterministic")
    return trace.subset(np.arange(config.phase, len(trace), config.kappa))


def bernoulli_sample(records: Sequence[PacketRecord] | PacketTrace, config: SamplingConfig) -> PacketTrace:
    trace = PacketTrace.from_records(records)
    rng = np.random.default_rng(config.seed)
    return trace.subset(rng.random(len(trace)) < config.p_s)


def sample(records, config: SamplingConfig) -> PacketTrace:
    if config.mode is SamplingMode.BERNOULLI:
        return bernoulli_sample(records, config)
    return deterministic_sample(records, config)


def multinomial_oracle(v: Sequence[int], n_samples: int, seed=None) -> np.ndarray:
    """Per-flow hit counts when each of ``n_samples`` draws picks flow i w.p. v_i/V."""
    v = np.asarray(v, dtype=np.float64)
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    if v.size == 0 or v.min() < 1:
        raise ValueError("flow sizes must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.multinomial(n_samples, v / v.sum())


def count_sampled_flows(
    sampled: Sequence[PacketRecord] | PacketTrace,
    delta: float,
    origin: float = 0.0,
    n_windows: int | None = None,
) -> list[SampledFlowTable]:
    """Re-window a sampled stream; flows without samples in a window are absent."""
    trace = PacketTrace.from_records(sampled)
    return _windowed_counts(trace, delta, origin, SampledFlowTable, n_windows)


def sampled_header(config: SamplingConfig) -> str:
    """Comment line marking a sampled packet log."""
    return f"sampled kappa={config.kappa} phase={config.phase}"
