import math

import numpy as np
import pytest

from conftest import records
from elephants.estimator import ParetoSpec, a_of_j, q_j_asymptotic
from elephants.inference import (
    choose_delta_sampled,
    choose_j,
    infer,
    observables,
)
from elephants.sampling import SamplingConfig, multinomial_oracle, sample
from elephants.synth import SynthConfig, generate_trace
from elephants.trace import FlowTable, PacketTrace


def _table(sizes, w=0):
    sizes = np.asarray(sizes, dtype=np.int64)
    return FlowTable(w, np.arange(sizes.size), sizes, [None] * sizes.size)


def test_observables_direct_count():
    s = observables([_table([2, 2, 1])], 3)
    assert s.mean(1) == 1 and s.mean(2) == 2 and s.mean(3) == 0
    assert s.mean(99) == 0.0


def test_observables_mean_over_windows():
    s = observables([_table([2] * 4), _table([2] * 6, 1)], 2)
    assert s.mean(2) == 5


def test_observables_empty_windows_count():
    s = observables([_table([3]), _table([], 1)], 3)
    assert s.mean(3) == 0.5


def test_observables_oracle_mean():
    n = 20_000
    tables = [_table(multinomial_oracle([3, 1], 2, seed), seed) for seed in range(n)]
    tables = [_table(t.sizes[t.sizes > 0], t.window_index) for t in tables]
    s = observables(tables, 2)
    sd = s.per_window[:, 0].std()
    assert abs(s.mean(1) - 0.75) < 3 * sd / math.sqrt(n)


def _paired_stream():
    # 18 flows per second, each sampled twice within that second, 5 s long
    pairs, f = [], 0
    for sec in range(5):
        for _ in range(18):
            pairs += [(sec + 0.1, f), (sec + 0.6, f)]
            f += 1
    return PacketTrace.from_records(records(sorted(pairs)), duration=5.0)


def test_delta_band():
    choice = choose_delta_sampled(_paired_stream(), [1, 5])
    assert choice.delta == 5 and choice.qualified
    assert choice.scores == {1: 18.0, 5: 90.0}


def test_delta_all_below_band():
    choice = choose_delta_sampled(_paired_stream(), [0.5, 1, 2.5])
    assert choice.delta == 2.5 and not choice.qualified


def test_delta_empty():
    with pytest.raises(ValueError):
        choose_delta_sampled(PacketTrace.from_records([]), [1])


def _means_for(a_seq, j0, first=10_000.0):
    """E(W_j) for j = j0.. whose a(j) sequence is ``a_seq``."""
    m = [first]
    for j, a in enumerate(a_seq, start=j0):
        m.append(m[-1] * (1 - (a + 1) / (j + 1)))
    return m


def test_choose_j_most_stable_pair():
    m = _means_for([3.1, 2.0, 1.98, 1.7], j0=4)
    means = [0.0] * 3 + m  # E(W_1..W_3) never eligible here
    means[1] = 1e5  # a(2), a(3) would be wildly off
    means[2] = 1e5
    assert [round(a_of_j(means[j - 1], means[j], j), 6) for j in range(4, 8)] == [3.1, 2.0, 1.98, 1.7]
    assert choose_j(means) == 5


def test_choose_j_prefers_larger_on_tie():
    spec = ParetoSpec(1.5, 20, 0.01)
    means = [1e6 * q_j_asymptotic(spec, j) for j in range(2, 9)]
    means = [0.0] + means  # j=1 placeholder
    assert choose_j(means) == 6  # all gaps ~0; j+2 must stay within the table


def test_choose_j_requires_mass():
    with pytest.raises(ValueError, match="larger window"):
        choose_j([100.0, 3.0, 1.0, 0.5])


def test_kappa_one_is_unqualified():
    trace, _ = generate_trace(SynthConfig(n_elephants=200, b_min=20, seed=1))
    res = infer(sample(trace, SamplingConfig(kappa=1)), 1.0, [1, 5])
    assert not res.qualified
    assert res.notes


def test_small_end_to_end():
    cfg = SynthConfig(n_elephants=1000, b_min=20, n_mice=50_000, mouse_max=7, n_windows=30, seed=4)
    trace, truth = generate_trace(cfg)
    sampled = sample(trace, SamplingConfig(kappa=100))
    res = infer(sampled, 0.01, [1, 2, 5, 10], reference=trace)
    assert res.delta_used == 5 and res.n_windows == 30
    assert 80 <= res.ew_table[1] <= 100
    assert res.j_star >= 2 and 1.0 < res.a_hat < 2.5
    assert res.k_exp > 0 and res.lecam_bound < 0.05
    assert res.error == pytest.approx((res.k_hat - res.k_exp) / res.k_exp)
    doc = res.to_json()
    assert {"delta", "j", "a_hat", "b_min_hat", "k_hat", "qualified", "ew_table"} <= set(doc)
