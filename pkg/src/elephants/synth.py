"""Synthetic traces with Pareto elephants, uniform mice and known ground truth.

Each generation window holds its own population of flows.  All packets of a
window are pooled and placed on equally spaced time slots in uniformly random
order, so any fixed set of sampled slots hits flow i a hypergeometric number
of times, the finite-population version of picking flow i with probability
v_i/V at every sampling instant.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .trace import FlowKey, PacketTrace

MAX_PACKETS = 2**31 - 1


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs.  Counts are per generation window."""

    n_elephants: int = 1000
    shape_a: float = 1.85
    b_min: int = 20
    n_mice: int = 0
    mouse_max: int = 1
    window_span: float = 5.0
    n_windows: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_elephants < 0 or self.n_mice < 0:
            raise ValueError("flow counts must be non-negative")
        if not self.shape_a > 0:
            raise ValueError(f"shape_a must be positive, got {self.shape_a}")
        if self.b_min < 1:
            raise ValueError(f"b_min must be >= 1, got {self.b_min}")
        if self.mouse_max < 1:
            raise ValueError(f"mouse_max must be >= 1, got {self.mouse_max}")
        if self.n_mice and self.mouse_max >= self.b_min:
            raise ValueError("mouse_max must be smaller than b_min")
        if not self.window_span > 0:
            raise ValueError("window_span must be positive")
        if self.n_windows < 1:
            raise ValueError("n_windows must be >= 1")

    @property
    def duration(self) -> float:
        return self.window_span * self.n_windows


@dataclass
class GroundTruth:
    """True per-flow sizes of a synthetic trace.

    ``sizes[f]`` is the packet count of flow id ``f``; ``window_of[f]`` the
    generation window that flow lives in.
    """

    sizes: np.ndarray
    window_of: np.ndarray
    shape_a: float
    b_min: int
    n_windows: int
    window_span: float

    @property
    def k(self) -> int:
        """Number of flows with at least ``b_min`` packets."""
        return int(np.count_nonzero(self.sizes >= self.b_min))

    @property
    def k_per_window(self) -> float:
        return self.k / self.n_windows

    def count_at_least(self, b: int) -> int:
        return int(np.count_nonzero(self.sizes >= b))

    def sizes_histogram(self) -> dict[int, int]:
        vals, cnt = np.unique(self.sizes, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnt)}

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "a": self.shape_a,
            "b_min": self.b_min,
            "n_windows": self.n_windows,
            "window_span": self.window_span,
            "sizes_histogram": {str(k): v for k, v in self.sizes_histogram().items()},
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n")


def load_truth(path: str | Path) -> dict:
    """Read a ground-truth JSON; histogram keys come back as ints."""
    doc = json.loads(Path(path).read_text())
    doc["sizes_histogram"] = {int(k): int(v) for k, v in doc["sizes_histogram"].items()}
    return doc


def draw_pareto_size(shape_a: float, b_min: int, uniform_u: float) -> int:
    """Inverse-transform draw of an integer Pareto size.

    Returns floor(b_min / u**(1/a)), which has P(S >= x) = (b_min/x)**a
    exactly at every integer x >= b_min.
    """
    if not shape_a > 0:
        raise ValueError("shape_a must be positive")
    if b_min < 1:
        raise ValueError("b_min must be >= 1")
    if not 0 < uniform_u < 1:
        raise ValueError(f"uniform_u must lie in (0, 1), got {uniform_u}")
    return math.floor(b_min / uniform_u ** (1.0 / shape_a))


def pareto_sizes(rng: np.random.Generator, n: int, shape_a: float, b_min: int) -> np.ndarray:
    u = 1.0 - rng.random(n)  # (0, 1]
    x = np.floor(b_min / u ** (1.0 / shape_a))
    if x.size and x.max() > MAX_PACKETS:
        raise ValueError("Pareto draw exceeds the supported flow size; increase shape_a")
    return x.astype(np.int64)


class SyntheticKeys(Sequence[FlowKey]):
    """Lazily rendered, distinct 5-tuples for flow ids 0..n-1."""

    def __init__(self, n: int):
        self._n = n

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(self._n))]
        if i < 0:
            i += self._n
        if not 0 <= i < self._n:
            raise IndexError(i)
        src = f"10.{(i >> 16) & 0xFF}.{(i >> 8) & 0xFF}.{i & 0xFF}"
        return FlowKey(src, "192.0.2.1", 1024 + (i >> 24), 80, 6)


def generate_trace(
    config: SynthConfig,
    elephant_sizes: Sequence[int] | None = None,
) -> tuple[PacketTrace, GroundTruth]:
    """Generate a trace and its ground truth, deterministically from ``config.seed``.

    ``elephant_sizes`` overrides the Pareto draws (same sizes in every
    window), mostly for tests.
    """
    rng = np.random.default_rng(config.seed)
    per_window = config.n_elephants + config.n_mice
    n_flows = per_window * config.n_windows

    size_blocks = []
    for _ in range(config.n_windows):
        if elephant_sizes is not None:
            if len(elephant_sizes) != config.n_elephants:
                raise ValueError("elephant_sizes must have n_elephants entries")
            eleph = np.asarray(elephant_sizes, dtype=np.int64)
        else:
            eleph = pareto_sizes(rng, config.n_elephants, config.shape_a, config.b_min)
        mice = rng.integers(1, config.mouse_max + 1, size=config.n_mice, dtype=np.int64)
        size_blocks.append(np.concatenate([eleph, mice]))
    sizes = np.concatenate(size_blocks) if size_blocks else np.zeros(0, np.int64)
    if sizes.size and sizes.min() < 1:
        raise ValueError("flow sizes must be >= 1")
    total = int(sizes.sum())
    if total > MAX_PACKETS:
        raise ValueError(f"trace would hold {total} packets; reduce the configuration")

    id_dtype = np.int32 if n_flows < 2**31 else np.int64
    flow_ids = np.empty(total, dtype=id_dtype)
    timestamps = np.empty(total, dtype=np.float64)
    pos = 0
    for w in range(config.n_windows):
        ids = np.arange(w * per_window, (w + 1) * per_window, dtype=id_dtype)
        pkts = np.repeat(ids, sizes[w * per_window:(w + 1) * per_window])
        m = pkts.size
        flow_ids[pos:pos + m] = rng.permutation(pkts)
        slot = config.window_span / max(m, 1)
        timestamps[pos:pos + m] = w * config.window_span + (np.arange(m) + 0.5) * slot
        pos += m

    trace = PacketTrace(timestamps, flow_ids, SyntheticKeys(n_flows), duration=config.duration)
    truth = GroundTruth(
        sizes=sizes,
        window_of=np.repeat(np.arange(config.n_windows), per_window),
        shape_a=config.shape_a,
        b_min=config.b_min,
        n_windows=config.n_windows,
        window_span=config.window_span,
    )
    return trace, truth


def config_to_json(config: SynthConfig) -> dict:
    return asdict(config)
