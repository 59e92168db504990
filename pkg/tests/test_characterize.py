import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import records
from elephants.characterize import (
    SizeCcdf,
    characterize_trace,
    choose_bmax,
    choose_delta_full,
    empirical_ccdf,
    fit_pareto,
    negligibility_epsilon,
    write_ccdf_tsv,
)
from elephants.synth import SynthConfig, generate_trace, pareto_sizes
from elephants.trace import FlowTable, PacketTrace


def _table(sizes, w=0):
    sizes = np.asarray(sizes, dtype=np.int64)
    return FlowTable(w, np.arange(sizes.size), sizes, [None] * sizes.size)


def test_ccdf_small():
    c = empirical_ccdf([1, 1, 2])
    assert c.at(1) == 1.0
    assert c.at(2) == pytest.approx(1 / 3)
    assert c.at(3) == 0.0


def test_ccdf_constant():
    c = empirical_ccdf([7] * 5)
    assert c.points == [(7, 1.0)]


def test_ccdf_empty():
    with pytest.raises(ValueError):
        empirical_ccdf([])


def test_ccdf_pools_tables():
    c = empirical_ccdf([_table([1, 5]), _table([5, 9], 1)])
    assert c.n_flows == 4 and c.at(5) == 0.75


def test_ccdf_pareto_draws():
    n = 100_000
    c = empirical_ccdf(pareto_sizes(np.random.default_rng(8), n, 2.0, 10))
    assert abs(c.at(20) - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / n)


@given(st.lists(st.integers(1, 500), min_size=1, max_size=200), st.randoms(use_true_random=False))
def test_ccdf_properties(sizes, rnd):
    c = empirical_ccdf(sizes)
    assert c.ccdf[0] == 1.0
    assert np.all(np.diff(c.ccdf) < 0)
    shuffled = list(sizes)
    rnd.shuffle(shuffled)
    assert empirical_ccdf(shuffled).points == c.points


def test_bmax_counts():
    assert choose_bmax(empirical_ccdf(range(1, 101))) == 96


def test_bmax_constant():
    assert choose_bmax(empirical_ccdf([13] * 40)) == 13


def _exact_ccdf(a, lo, hi, n=10**6):
    x = np.arange(lo, hi + 1)
    ccdf = (lo / x) ** a
    return SizeCcdf(x=x, ccdf=ccdf, n_ge=np.round(n * ccdf).astype(np.int64), n_flows=n)


def test_fit_exact_pareto():
    fit = fit_pareto(_exact_ccdf(1.85, 20, 94), b_max=94)
    assert fit.shape_a == pytest.approx(1.85, abs=1e-9)
    assert fit.l2_residual < 1e-20
    assert fit.b_min == 20 and fit.qualified


def test_fit_skips_curved_head():
    # a mouse bump below 10 breaks linearity; the fit should start past it
    c = _exact_ccdf(2.0, 10, 200)
    x = np.concatenate([[1, 2, 3], c.x])
    ccdf = np.concatenate([[1.0, 0.999, 0.998], c.ccdf * 0.99])
    sc = SizeCcdf(x=x, ccdf=ccdf, n_ge=np.round(ccdf * 10**6).astype(np.int64), n_flows=10**6)
    fit = fit_pareto(sc, b_max=200)
    assert fit.b_min >= 10
    assert fit.shape_a == pytest.approx(2.0, abs=1e-6)


def test_fit_too_few_points():
    with pytest.raises(ValueError):
        fit_pareto(empirical_ccdf([1, 2]), b_max=2)


def test_fit_unqualified_fallback():
    rng = np.random.default_rng(0)
    x = np.arange(1, 40)
    ccdf = np.sort(rng.random(x.size))[::-1]
    sc = SizeCcdf(x=x, ccdf=ccdf, n_ge=np.full(x.size, 100), n_flows=100)
    fit = fit_pareto(sc, b_max=39, residual_threshold=1e-9)
    assert not fit.qualified


@given(st.floats(1e-5, 1e-1), st.floats(1e-5, 1e-1), st.integers(0, 10_000))
def test_bmin_monotone_in_threshold(t1, t2, seed):
    sizes = pareto_sizes(np.random.default_rng(seed), 3000, 1.6, 5)
    c = empirical_ccdf(np.concatenate([sizes, np.random.default_rng(seed).integers(1, 5, 3000)]))
    lo, hi = sorted((t1, t2))
    b_max = choose_bmax(c)
    assert fit_pareto(c, b_max, hi).b_min <= fit_pareto(c, b_max, lo).b_min


def test_min_support_drops_sparse_points():
    c = empirical_ccdf([1] * 50 + [2] * 20 + [3] * 10 + [4] * 4 + [5, 6, 7])
    fit = fit_pareto(c, b_max=7, min_support=5)
    assert fit.b_min + fit.n_points - 1 == 4  # size 4 has 7 flows >= it, size 5 only 3


def _block_trace():
    # 1500 flows of 25 packets in 5 s, 300 complete flows per second
    pairs = []
    for f in range(1500):
        sec = f // 300
        pairs += [(sec + (k + 0.5) / 25, f) for k in range(25)]
    return PacketTrace.from_records(records(pairs), duration=5.0)


def test_delta_choice_threshold():
    choice = choose_delta_full(_block_trace(), [1, 5])
    assert choice.delta == 5 and choice.qualified
    assert choice.scores == {1: 300.0, 5: 1500.0}


def test_delta_choice_fallback():
    choice = choose_delta_full(_block_trace(), [1, 2], min_flows=10**6)
    assert choice.delta == 2 and not choice.qualified


def test_delta_choice_empty():
    with pytest.raises(ValueError):
        choose_delta_full(PacketTrace.from_records([]), [1, 5])


def test_negligibility_single():
    eps, worst = negligibility_epsilon([_table([10] + [1] * 990)], 10)
    assert eps == pytest.approx(0.1) and worst == pytest.approx(0.1)


def test_negligibility_average():
    w1 = _table([10] + [1] * 990)
    w2 = _table([10, 20, 20] + [1] * 950, 1)
    eps, worst = negligibility_epsilon([w1, w2], 10)
    assert eps == pytest.approx(0.2)
    assert worst == pytest.approx(0.4)


def test_negligibility_no_elephants():
    with pytest.raises(ValueError):
        negligibility_epsilon([_table([1, 2])], 10)


def test_characterize_synthetic_small():
    cfg = SynthConfig(n_elephants=5000, shape_a=1.85, b_min=10, n_windows=40, seed=2)
    trace, _ = generate_trace(cfg)
    res = characterize_trace(trace, [5, 10])
    assert res.delta.delta == 5 and res.delta.qualified
    assert res.fit.shape_a == pytest.approx(1.85, abs=0.05)
    assert res.fit.b_min <= 12 and res.qualified
    doc = res.to_json()
    assert {"a", "b_min", "b_max", "residual", "qualified", "delta"} <= set(doc)


def test_plot_rows_match_fit_range(tmp_path):
    trace, _ = generate_trace(SynthConfig(n_elephants=3000, b_min=10, n_windows=10, seed=4))
    res = characterize_trace(trace, [5])
    path = tmp_path / "ccdf.tsv"
    n = write_ccdf_tsv(res.ccdf, path, res.fit)
    rows = [list(map(float, line.split("\t"))) for line in path.read_text().splitlines()]
    inside = np.count_nonzero((res.ccdf.x >= res.fit.b_min) & (res.ccdf.x <= res.fit.b_max))
    assert len(rows) == n == inside
    assert all(len(r) == 3 for r in rows)
    assert rows[0][0] == pytest.approx(np.log10(res.fit.b_min), abs=1e-6)
