"""Packet trace model: flow keys, packet records, log parsing and windowing.

Traces are stored column-wise (timestamps and integer flow ids into a key
table) so that synthetic traces with tens of millions of packets stay
tractable.  ``PacketTrace`` still behaves as a sequence of ``PacketRecord``.
"""

from __future__ import annotations

import io
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import IO, overload

import numpy as np


class TraceParseError(ValueError):
    """Malformed packet-log line."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True, order=True)
class FlowKey:
    """5-tuple identifying a flow. Addresses are opaque strings."""

    src_addr: str
    dst_addr: str
    src_port: int
    dst_port: int
    protocol: int

    def __post_init__(self):
        for name in ("src_port", "dst_port"):
            port = getattr(self, name)
            if not 0 <= port <= 65535:
                raise ValueError(f"{name} out of range: {port}")
        if not 0 <= self.protocol <= 255:
            raise ValueError(f"protocol out of range: {self.protocol}")


@dataclass(frozen=True)
class PacketRecord:
    timestamp: float
    key: FlowKey

    def __post_init__(self):
        if not self.timestamp >= 0:
            raise ValueError(f"negative timestamp: {self.timestamp}")


class PacketTrace(Sequence[PacketRecord]):
    """Column-oriented packet stream.

    ``timestamps[i]`` and ``flow_ids[i]`` describe the i-th packet in stream
    order; ``keys[flow_ids[i]]`` is its ``FlowKey``.  ``duration`` is the
    nominal end of the capture (defaults to the last timestamp); it only
    decides which analysis windows count as complete.
    """

    def __init__(
        self,
        timestamps: np.ndarray,
        flow_ids: np.ndarray,
        keys: Sequence[FlowKey],
        duration: float | None = None,
    ):
        timestamps = np.asarray(timestamps, dtype=np.float64)
        flow_ids = np.asarray(flow_ids)
        if timestamps.shape != flow_ids.shape or timestamps.ndim != 1:
            raise ValueError("timestamps and flow_ids must be 1-d and equal length")
        if timestamps.size and timestamps.min() < 0:
            raise ValueError("negative timestamp in trace")
        self.timestamps = timestamps
        self.flow_ids = flow_ids
        self.keys = keys
        self._duration = duration

    @classmethod
    def from_records(cls, records: Iterable[PacketRecord], duration: float | None = None) -> PacketTrace:
        if isinstance(records, PacketTrace):
            return records
        index: dict[FlowKey, int] = {}
        keys: list[FlowKey] = []
        ts: list[float] = []
        ids: list[int] = []
        for rec in records:
            fid = index.get(rec.key)
            if fid is None:
                fid = index[rec.key] = len(keys)
                keys.append(rec.key)
            ts.append(rec.timestamp)
            ids.append(fid)
        return cls(np.array(ts, dtype=np.float64), np.array(ids, dtype=np.int64), keys, duration)

    @property
    def duration(self) -> float:
        if self._duration is not None:
            return self._duration
        return float(self.timestamps.max()) if self.timestamps.size else 0.0

    @property
    def n_flows(self) -> int:
        return len(self.keys)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @overload
    def __getitem__(self, i: int) -> PacketRecord: ...
    @overload
    def __getitem__(self, i: slice) -> PacketTrace: ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.subset(np.arange(len(self))[i])
        return PacketRecord(float(self.timestamps[i]), self.keys[int(self.flow_ids[i])])

    def __iter__(self) -> Iterator[PacketRecord]:
        keys = self.keys
        for t, f in zip(self.timestamps.tolist(), self.flow_ids.tolist()):
            yield PacketRecord(t, keys[f])

    def subset(self, selector: np.ndarray) -> PacketTrace:
        """Packets picked by an index array or boolean mask, sharing the key table."""
        return PacketTrace(self.timestamps[selector], self.flow_ids[selector], self.keys, self._duration)


class FlowTable:
    """Per-window flow sizes; the base for unsampled and sampled tables.

    Holds parallel arrays of flow ids and counts (all counts >= 1) plus the
    key table needed to expose them as a ``FlowKey`` mapping.
    """

    def __init__(self, window_index: int, flow_ids: np.ndarray, sizes: np.ndarray, keys: Sequence[FlowKey]):
        self.window_index = int(window_index)
        self.flow_ids = flow_ids
        self.sizes = sizes
        self._keys = keys

    @classmethod
    def from_counts(cls, window_index: int, counts: Mapping[FlowKey, int]):
        keys = sorted(counts)
        sizes = np.array([counts[k] for k in keys], dtype=np.int64)
        if sizes.size and sizes.min() < 1:
            raise ValueError("flow counts must be >= 1")
        return cls(window_index, np.arange(len(keys)), sizes, keys)

    @cached_property
    def counts(self) -> dict[FlowKey, int]:
        keys = self._keys
        return {keys[f]: s for f, s in zip(self.flow_ids.tolist(), self.sizes.tolist())}

    @property
    def total(self) -> int:
        return int(self.sizes.sum())

    @property
    def n_flows(self) -> int:
        return int(self.sizes.size)

    def __len__(self) -> int:
        return self.n_flows

    def __repr__(self) -> str:
        return f"{type(self).__name__}(window_index={self.window_index}, flows={self.n_flows}, total={self.total})"


class WindowFlowTable(FlowTable):
    @property
    def total_packets(self) -> int:
        return self.total


def window_index_of(timestamps: np.ndarray, delta: float, origin: float = 0.0) -> np.ndarray:
    """Half-open window index floor((t - origin) / delta) for each timestamp."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    rel = np.asarray(timestamps, dtype=np.float64) - origin
    if rel.size and rel.min() < 0:
        raise ValueError("packet timestamp precedes window origin")
    return np.floor(rel / delta).astype(np.int64)


def _windowed_counts(trace: PacketTrace, delta: float, origin: float, table_cls, n_windows: int | None):
    widx = window_index_of(trace.timestamps, delta, origin)
    n_keys = max(trace.n_flows, 1)
    if n_windows is None:
        n_windows = int(widx.max()) + 1 if widx.size else 0
    combined = widx * n_keys + trace.flow_ids.astype(np.int64)
    uniq, cnt = np.unique(combined, return_counts=True)
    win = uniq // n_keys
    fid = uniq - win * n_keys
    bounds = np.searchsorted(win, np.arange(n_windows + 1))
    return [
        table_cls(w, fid[bounds[w]:bounds[w + 1]], cnt[bounds[w]:bounds[w + 1]], trace.keys)
        for w in range(n_windows)
    ]


def window_flows(
    records: Sequence[PacketRecord] | PacketTrace,
    delta: float,
    origin: float = 0.0,
    n_windows: int | None = None,
) -> list[WindowFlowTable]:
    """Aggregate packets into per-window flow tables.

    Packet at time t falls in window floor((t - origin)/delta).  Flow identity
    is per window.  Windows are dense from index 0; empty ones get empty
    tables.  ``n_windows`` truncates or pads the output.
    """
    trace = PacketTrace.from_records(records)
    return _windowed_counts(trace, delta, origin, WindowFlowTable, n_windows)


def complete_window_count(duration: float, delta: float, origin: float = 0.0) -> int:
    """Number of windows [k*delta, (k+1)*delta) lying inside [origin, duration]."""
    span = duration - origin
    n = math.floor(span / delta + 1e-9)
    return max(n, 0)


# -- packet log format -------------------------------------------------------

def _parse_line(line: str, lineno: int) -> tuple[float, FlowKey]:
    fields = line.split("\t")
    if len(fields) != 6:
        raise TraceParseError(lineno, f"expected 6 tab-separated fields, got {len(fields)}")
    try:
        ts = float(fields[0])
    except ValueError:
        raise TraceParseError(lineno, f"bad timestamp {fields[0]!r}") from None
    if not math.isfinite(ts):
        raise TraceParseError(lineno, f"bad timestamp {fields[0]!r}")
    if ts < 0:
        raise ValueError(f"line {lineno}: negative timestamp {ts}")
    try:
        key = FlowKey(fields[1], fields[2], int(fields[3]), int(fields[4]), int(fields[5]))
    except ValueError as exc:
        raise TraceParseError(lineno, str(exc)) from None
    return ts, key


def _iter_lines(stream) -> Iterator[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\r\n")


def parse_header(line: str) -> dict[str, str]:
    """``key=value`` pairs from a ``#`` comment line."""
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def parse_packet_log(stream: IO | str | bytes) -> list[PacketRecord]:
    """Parse a tab-separated packet log into records, in file order.

    Columns: timestamp, src_addr, dst_addr, src_port, dst_port, protocol.
    Lines starting with ``#`` and blank lines are skipped.  Raises
    ``TraceParseError`` (with the 1-based line number) on malformed lines
    and ``ValueError`` on negative timestamps.
    """
    records = []
    for lineno, line in enumerate(_iter_lines(stream), start=1):
        if not line or line.startswith("#"):
            continue
        ts, key = _parse_line(line, lineno)
        records.append(PacketRecord(ts, key))
    return records


def read_trace(path: str | Path) -> tuple[PacketTrace, dict[str, str]]:
    """Load a packet log straight into a ``PacketTrace``.

    Returns the trace and the merged ``key=value`` header fields (e.g.
    ``kappa``, ``phase``, ``duration``).
    """
    index: dict[FlowKey, int] = {}
    keys: list[FlowKey] = []
    ts: list[float] = []
    ids: list[int] = []
    header: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(_iter_lines(fh), start=1):
            if not line:
                continue
            if line.startswith("#"):
                header.update(parse_header(line))
                continue
            t, key = _parse_line(line, lineno)
            fid = index.get(key)
            if fid is None:
                fid = index[key] = len(keys)
                keys.append(key)
            ts.append(t)
            ids.append(fid)
    duration = float(header["duration"]) if "duration" in header else None
    trace = PacketTrace(np.array(ts, dtype=np.float64), np.array(ids, dtype=np.int64), keys, duration)
    return trace, header


def write_trace(trace: PacketTrace, path: str | Path, header: Mapping[str, object] | None = None,
                comment: str | None = None) -> None:
    """Write a trace in packet-log format (timestamps with 9 decimals)."""
    keys = trace.keys
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        if header:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        # key strings are cached per flow; most flows repeat many times
        rendered: dict[int, str] = {}
        for t, f in zip(trace.timestamps.tolist(), trace.flow_ids.tolist()):
            s = rendered.get(f)
            if s is None:
                k = keys[f]
                s = rendered[f] = f"{k.src_addr}\t{k.dst_addr}\t{k.src_port}\t{k.dst_port}\t{k.protocol}"
            fh.write(f"{t:.9f}\t{s}\n")
