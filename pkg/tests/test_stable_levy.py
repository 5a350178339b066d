import math

import numpy as np
import pytest
from scipy import stats

from clesim import formulas as fm
from clesim import stable_levy as sl
from clesim.rng import stream


def test_spec_validation():
    with pytest.raises(fm.DomainError):
        sl.JumpSpec(1.2, 1, 1)
    with pytest.raises(fm.DomainError):
        sl.JumpSpec(0.7, -1, 1)
    with pytest.raises(fm.DomainError):
        sl.JumpSpec(0.7, 1, 1, cutoff=0.0)


def test_expected_jump_count_example():
    spec = sl.JumpSpec(2 / 3, 1, 1, horizon=1, cutoff=1e-3)
    assert sl.expected_jump_count(spec) == pytest.approx(300, rel=1e-12)
    counts = [len(sl.sample_jump_path(spec, s)) for s in range(400)]
    se = math.sqrt(300 / len(counts))
    assert abs(np.mean(counts) - 300) < 3 * se


def test_path_invariants():
    spec = sl.JumpSpec(0.7, 1.0, 0.4, horizon=2.0, cutoff=1e-2)
    path = sl.sample_jump_path(spec, 11, initial=0.5)
    assert np.all(np.diff(path.times) > 0)
    assert np.all(np.abs(path.sizes) >= spec.cutoff)
    assert np.all((path.times >= 0) & (path.times <= spec.horizon))
    t = 1.3
    assert sl.path_value(path, t) == pytest.approx(0.5 + path.sizes[path.times <= t].sum())
    same = sl.sample_jump_path(spec, 11, initial=0.5)
    assert np.array_equal(path.sizes, same.sizes)


def test_sign_fraction_and_pareto_tail():
    spec = sl.JumpSpec(0.7, 3.0, 1.0, horizon=1.0, cutoff=1e-4)
    path = sl.sample_jump_path(spec, 3)
    n = len(path)
    up = np.mean(path.sizes > 0)
    assert abs(up - 0.75) < 3 * math.sqrt(0.75 * 0.25 / n)
    mags = np.abs(path.sizes)
    # Pareto tail: P(|J| > x) = (x / cutoff)^{-alpha'}
    ks = stats.kstest((mags / spec.cutoff) ** (-spec.alpha_prime), "uniform")
    assert ks.pvalue > 0.01


def test_subordinator_and_degenerate_paths():
    path = sl.sample_jump_path(sl.JumpSpec(0.7, 0.0, 1.0, cutoff=1e-3), 1)
    assert len(path) > 0 and np.all(path.sizes < 0)
    empty = sl.sample_jump_path(sl.JumpSpec(0.7, 1.0, 1.0, horizon=0.0), 1, initial=2.0)
    assert len(empty) == 0 and sl.path_value(empty, 0.0) == 2.0
    assert len(sl.sample_jump_path(sl.JumpSpec(0.7, 0.0, 0.0), 1)) == 0


def test_path_value_examples():
    p = sl.JumpPath([0.5], [2.0], initial=1.0, horizon=1.0)
    assert sl.path_value(p, 0.4) == 1.0
    assert sl.path_value(p, 0.5) == 3.0
    assert sl.path_value(sl.JumpPath([], [], 1.5), 0.7) == 1.5
    with pytest.raises(fm.DomainError):
        sl.path_value(p, 1.5)


def test_running_infimum_examples():
    p = sl.JumpPath([0.1, 0.2], [1.0, -3.0])
    assert sl.running_infimum_times(p) == [(0.0, 0.0), (0.2, -2.0)]
    down = sl.JumpPath([0.1, 0.2, 0.3], [-1.0, -0.5, -2.0])
    assert [t for t, _ in sl.running_infimum_times(down)] == [0.0, 0.1, 0.2, 0.3]
    up = sl.JumpPath([0.1, 0.2], [1.0, 0.5], initial=4.0)
    assert sl.running_infimum_times(up) == [(0.0, 4.0)]


def test_running_infimum_values_descend():
    path = sl.sample_jump_path(sl.JumpSpec(0.7, 1.0, 1.0, cutoff=1e-3), 9)
    vals = [v for _, v in sl.running_infimum_times(path)]
    assert np.all(np.diff(vals) < 0)


def test_positivity_symmetric_and_subordinator():
    est = sl.estimate_positivity(sl.JumpSpec(0.7, 1.0, 1.0, cutoff=1e-3), 20000, 4)
    assert abs(est.positivity - 0.5) < 3 * est.stderr
    assert est.alpha_second_hat == pytest.approx(0.7 * est.positivity)
    sub = sl.estimate_positivity(sl.JumpSpec(0.7, 1.0, 0.0), 1000, 4)
    assert sub.positivity == 1.0
    with pytest.raises(ValueError):
        sl.estimate_positivity(sl.JumpSpec(0.7, 1.0, 1.0), 50, 1)


def test_ladder_index_half_at_six():
    spec = sl.ladder_spec(0.5, 6.0)
    est = sl.estimate_positivity(spec, 40000, 21)
    assert abs(est.alpha_second_hat - 0.5) < 3 * est.alpha_second_stderr


def test_ladder_spec_sides():
    cp = fm.couplings(6.0)
    led = fm.jump_rate_ledger(0.3, cp)
    r = sl.ladder_spec(0.3, 6.0, "R")
    l_ = sl.ladder_spec(0.3, 6.0, "L")
    assert (r.rate_plus, r.rate_minus) == (led.A_minus_R, led.A_plus_R)
    assert (l_.rate_plus, l_.rate_minus) == (led.A_minus_L, led.A_plus_L)
    with pytest.raises(ValueError):
        sl.ladder_spec(0.3, 6.0, "X")


def test_worker_count_invariance():
    spec = sl.JumpSpec(0.7, 1.0, 0.6, cutoff=1e-3)
    a = sl.estimate_positivity(spec, 3000, 17, workers=1, chunk_size=1000)
    b = sl.estimate_positivity(spec, 3000, 17, workers=2, chunk_size=1000)
    assert a == b
    assert np.array_equal(sl.terminal_values(spec, 3000, 17, 1, 1000),
                          sl.terminal_values(spec, 3000, 17, 2, 1000))


def test_terminal_values_match_positivity():
    spec = sl.JumpSpec(0.7, 1.0, 0.6, cutoff=1e-3)
    v = sl.terminal_values(spec, 2000, 5)
    assert sl.estimate_positivity(spec, 2000, 5).positivity == np.mean(v > 0)


def test_scaling_invariance_ks():
    spec = sl.JumpSpec(0.7, 1.0, 0.5, horizon=1.0, cutoff=1e-3)
    c = 4.0
    big = spec.rescaled(c)
    x = sl.sample_terminal_values(spec, 10000, stream(1, 9))
    y = sl.sample_terminal_values(big, 10000, stream(2, 9)) / c ** (1 / spec.alpha_prime)
    assert stats.ks_2samp(x, y).pvalue > 0.01


def test_truncation_bias_bound():
    spec = sl.JumpSpec(0.7, 1.0, 0.4, horizon=1.0, cutoff=1e-2)
    half = sl.JumpSpec(0.7, 1.0, 0.4, horizon=1.0, cutoff=5e-3)
    bound = sl.truncation_bias_bound(spec)
    # medians are robust to the infinite-variance tail; the mean shift is exact
    n = 40000
    a = sl.sample_terminal_values(spec, n, stream(1, 8))
    b = sl.sample_terminal_values(half, n, stream(2, 8))
    shift = abs(np.median(b) - np.median(a))
    assert shift < 2 * bound
    exact = (1.0 - 0.4) * (1e-2 ** 0.3 - 5e-3 ** 0.3) / 0.3
    assert exact < bound


def test_independence_surrogate():
    spec = sl.ladder_spec(0.4, 6.0)
    other = sl.ladder_spec(0.4, 6.0, "L")
    n = 10000
    r = sl.sample_terminal_values(spec, n, stream(3, 0))
    l_ = sl.sample_terminal_values(other, n, stream(3, 1))
    rho = stats.spearmanr(r, l_).statistic
    assert abs(rho) < 3 / math.sqrt(n - 1)


def test_ladder_tail_cross_check():
    spec = sl.ladder_spec(0.5, 6.0, horizon=1e4, cutoff=1e-2)
    est = sl.ladder_tail_index(spec, 5, k=200)
    assert abs(est - 0.5) < 0.15
