import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import key, records
from elephants.trace import (
    FlowKey,
    PacketRecord,
    PacketTrace,
    TraceParseError,
    complete_window_count,
    parse_packet_log,
    read_trace,
    window_flows,
    window_index_of,
    write_trace,
)


def test_parse_single_line():
    (rec,) = parse_packet_log("0.5\t10.0.0.1\t10.0.0.2\t1234\t80\t6\n")
    assert rec.timestamp == 0.5
    assert rec.key == FlowKey("10.0.0.1", "10.0.0.2", 1234, 80, 6)


def test_parse_empty_and_comments():
    assert parse_packet_log("") == []
    assert parse_packet_log(b"# sampled kappa=100 phase=99\n\n") == []


def test_parse_reads_file_objects():
    recs = parse_packet_log(io.StringIO("1\ta\tb\t1\t2\t17\n2\ta\tb\t1\t2\t17\n"))
    assert [r.timestamp for r in recs] == [1.0, 2.0]


def test_malformed_timestamp_reports_line():
    with pytest.raises(TraceParseError) as exc:
        parse_packet_log("abc\t10.0.0.1\t10.0.0.2\t1\t2\t6\n")
    assert exc.value.lineno == 1


def test_malformed_later_line_number():
    text = "# c\n0.1\ta\tb\t1\t2\t6\n0.2\ta\tb\tx\t2\t6\n"
    with pytest.raises(TraceParseError) as exc:
        parse_packet_log(text)
    assert exc.value.lineno == 3


def test_wrong_field_count():
    with pytest.raises(TraceParseError):
        parse_packet_log("0.1\ta\tb\t1\t2\n")


def test_negative_timestamp_rejected():
    with pytest.raises(ValueError):
        parse_packet_log("-1\ta\tb\t1\t2\t6\n")


@pytest.mark.parametrize("port", [-1, 65536])
def test_flowkey_port_range(port):
    with pytest.raises(ValueError):
        FlowKey("a", "b", port, 80, 6)


def test_window_boundaries():
    tables = window_flows(records([(0.1, 0), (0.2, 0), (5.1, 0)]), 5.0)
    assert [t.total_packets for t in tables] == [2, 1]
    assert tables[0].counts == {key(0): 2}
    assert tables[1].counts == {key(0): 1}


def test_half_open_windows():
    tables = window_flows(records([(5.0, 0)]), 5.0)
    assert tables[1].counts == {key(0): 1}
    assert tables[0].total_packets == 0


def test_two_keys_one_window():
    tables = window_flows(records([(0, 0), (1, 0), (2, 0), (3, 1)]), 5.0)
    assert tables[0].counts == {key(0): 3, key(1): 1}
    assert tables[0].total_packets == 4


def test_flow_identity_is_per_window():
    tables = window_flows(records([(1, 0), (6, 0), (7, 0)]), 5.0)
    assert [t.counts[key(0)] for t in tables] == [1, 2]


@pytest.mark.parametrize("delta", [0.0, -1.0])
def test_bad_delta(delta):
    with pytest.raises(ValueError):
        window_flows(records([(1, 0)]), delta)


def test_window_index_before_origin():
    with pytest.raises(ValueError):
        window_index_of(np.array([1.0]), 5.0, origin=2.0)


def test_complete_window_count():
    assert complete_window_count(20.0, 5.0) == 4
    assert complete_window_count(19.9, 5.0) == 3
    assert complete_window_count(1.0, 5.0) == 0


def test_trace_sequence_protocol():
    trace = PacketTrace.from_records(records([(0, 0), (1, 1), (2, 0)]))
    assert len(trace) == 3 and trace.n_flows == 2
    assert trace[1] == PacketRecord(1.0, key(1))
    assert [r.key for r in trace[1:]] == [key(1), key(0)]


def test_read_write_round_trip(tmp_path):
    trace = PacketTrace.from_records(records([(0.25, 0), (1.5, 1), (2.125, 0)]), duration=5.0)
    path = tmp_path / "t.tsv"
    write_trace(trace, path, header={"duration": 5.0}, comment="sampled kappa=3 phase=2")
    back, header = read_trace(path)
    assert header == {"kappa": "3", "phase": "2", "duration": "5.0"}
    assert back.duration == 5.0
    assert list(back) == list(trace)


times = st.floats(min_value=0, max_value=100, allow_nan=False)
packet_lists = st.lists(st.tuples(times, st.integers(0, 6)), max_size=60)


@given(packet_lists, st.sampled_from([0.5, 1.0, 5.0, 7.5]))
def test_windowing_conserves_packets(pairs, delta):
    tables = window_flows(records(pairs), delta)
    assert sum(t.total_packets for t in tables) == len(pairs)
    for t in tables:
        assert t.total_packets == sum(t.counts.values())
        assert all(v >= 1 for v in t.counts.values())


@given(packet_lists, st.randoms(use_true_random=False))
def test_windowing_ignores_record_order(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = window_flows(records(pairs), 5.0)
    b = window_flows(records(shuffled), 5.0)
    assert [t.counts for t in a] == [t.counts for t in b]
