import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from clesim import formulas as fm
from clesim import looptree as lt
from clesim.rng import stream


def _tree(steps):
    return lt.build_looptree(lt.DiscreteExcursion(np.array(steps, dtype=np.int64)))


# -------------------------------------------------------------- step law

@pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
def test_step_law_zero_mean_exact(alpha):
    c, q = lt.step_law(alpha)
    total = c * special.zeta(alpha + 1) + q
    mean = c * special.zeta(alpha) - q
    assert total == pytest.approx(1, abs=1e-12)
    assert abs(mean) < 1e-12


def test_unconditioned_walk_mean_near_zero():
    alpha, n = 1.5, 10**6
    steps = lt.sample_walk(alpha, n, stream(3, 0))
    assert set(np.unique(steps[steps < 1])) == {-1}
    # infinite variance: fluctuations of the mean are of order n^{1/alpha - 1}
    assert abs(steps.mean()) < 10 * n ** (1 / alpha - 1)


def test_step_law_domain():
    with pytest.raises(fm.DomainError):
        lt.step_law(2.0)


# -------------------------------------------------------------- sampler

def test_n_two_is_unique():
    for s in range(20):
        assert lt.sample_excursion(1.5, 2, s).steps.tolist() == [1, -1]


def test_sampler_rejects_small_n():
    with pytest.raises(fm.DomainError):
        lt.sample_excursion(1.5, 1, 0)


@pytest.mark.parametrize("n", [50, 257, 4096])
def test_excursion_invariants(n):
    exc = lt.sample_excursion(1.4, n, 7)
    lv = exc.levels()
    assert exc.n == n and lv[-1] == 0 and lv[:-1].min() >= 0
    assert np.all((exc.steps == -1) | (exc.steps >= 1))


def test_sampler_deterministic():
    a = lt.sample_excursion(1.5, 300, 42).steps
    assert np.array_equal(a, lt.sample_excursion(1.5, 300, 42).steps)
    assert not np.array_equal(a, lt.sample_excursion(1.5, 300, 43).steps)


def _exact_excursion_law(alpha, n):
    """Weights prod p(step) over all excursions of length n (brute force)."""
    c, q = lt.step_law(alpha)
    out = {}
    for seq in itertools.product([-1] + list(range(1, n)), repeat=n):
        lv = np.cumsum(seq)
        if lv[-1] != 0 or lv.min() < 0:
            continue
        w = 1.0
        for s in seq:
            w *= q if s == -1 else c * s ** (-alpha - 1)
        out[seq] = w
    z = sum(out.values())
    return {k: v / z for k, v in out.items()}


@pytest.mark.parametrize("n", [4, 6])
def test_sampler_matches_brute_force_law(n):
    alpha = 1.5
    law = _exact_excursion_law(alpha, n)
    m = 20000
    counts = {k: 0 for k in law}
    for s in range(m):
        counts[tuple(lt.sample_excursion(alpha, n, s).steps.tolist())] += 1
    obs = np.array([counts[k] for k in law])
    exp = np.array([law[k] * m for k in law])
    assert obs.sum() == m  # nothing outside the support
    assert stats.chisquare(obs, exp).pvalue > 0.001


def test_max_jump_scaling():
    ns = [2**k for k in range(10, 17, 2)]
    means = [np.mean([np.log(lt.sample_excursion(1.5, n, s).steps.max()) for s in range(200)])
             for n in ns]
    slope = np.polyfit(np.log(ns), means, 1)[0]
    assert abs(slope - 2 / 3) < 0.05


# ---------------------------------------------------------- construction

def test_single_loop():
    t = _tree([2, -1, -1])
    assert t.perimeter.tolist() == [2] and t.parent.tolist() == [lt.ROOT]
    assert lt.boundary_measure_total(t) == 3


def test_two_loops_attach_at_root():
    # the second jump starts at the top of the first loop, which is its base point
    t = _tree([2, 2, -1, -1, -1, -1])
    assert t.perimeter.tolist() == [2, 2]
    assert t.parent.tolist() == [lt.ROOT, lt.ROOT]


def test_nested_loop():
    t = _tree([2, -1, 2, -1, -1, -1])
    # second jump from level 1: offset 1 on loop 0
    assert t.parent.tolist() == [lt.ROOT, 0] and t.attach.tolist() == [0, 1]


def test_unit_steps_are_loops():
    t = _tree([1, 1, -1, -1])
    assert t.perimeter.tolist() == [1, 1]


def test_malformed_excursions():
    with pytest.raises(lt.StructureError):
        _tree([-1, 1])
    with pytest.raises(lt.StructureError):
        _tree([2, -1])
    with pytest.raises(lt.StructureError):
        _tree([2, -2])


@given(st.integers(0, 10**6), st.integers(10, 200))
def test_structure_invariants(seed, n):
    exc = lt.sample_excursion(1.5, n, seed)
    t = lt.build_looptree(exc)
    assert t.n_loops == int(np.sum(exc.steps > 0))
    assert sorted(t.perimeter.tolist()) == sorted(exc.steps[exc.steps > 0].tolist())
    for i in range(t.n_loops):
        par = t.parent[i]
        if par == lt.ROOT:
            assert t.attach[i] == 0
        else:
            assert par < i and 0 < t.attach[i] < t.perimeter[par]
    assert lt.boundary_measure_total(t) == n


def test_build_linear_time():
    exc_a = lt.sample_excursion(1.5, 2**15, 1)
    exc_b = lt.sample_excursion(1.5, 2**16, 1)
    lt.build_looptree(exc_a)

    def best(exc):
        ts = []
        for _ in range(3):
            t0 = time.perf_counter()
            lt.build_looptree(exc)
            ts.append(time.perf_counter() - t0)
        return min(ts)

    assert best(exc_b) / best(exc_a) < 2.3


def test_perimeter_sum_diverges_in_loop_length_units():
    # loop lengths scale like n^{1/alpha}; in those units the boundary has length
    # n^{1 - 1/alpha} -> infinity while the sum of perimeters stays of order n
    alpha = 1.5
    ratios = []
    for n in [2**10, 2**12, 2**14, 2**16]:
        r = [lt.build_looptree(lt.sample_excursion(alpha, n, s)).perimeter.sum() / n ** (1 / alpha)
             for s in range(20)]
        ratios.append(np.mean(r))
    assert np.all(np.diff(ratios) > 0)


# ---------------------------------------------------------------- metric

def test_loop_chain_examples():
    t = _tree([3, -1, -1, -1])
    # index 1 is at level 3, the top of the loop, which is the root point again
    assert t.point(1) == t.point(0) == (lt.ROOT, 0)
    assert t.point(3) == (0, 1)
    assert lt.loop_chain(t, 0, 3) == ([0], 1)
    assert lt.loop_chain(t, 0, 2) == ([0], 1)
    assert lt.loop_chain(t, 2, 2) == ([], 0)


def test_metric_axioms_brute_force():
    for seed in range(10):
        t = lt.build_looptree(lt.sample_excursion(1.5, 64, seed))
        n = t.n
        D = np.array([[lt.loop_chain(t, a, b)[1] for b in range(n)] for a in range(n)])
        assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0)
        # identified points have distance 0, distinct points positive
        same = np.array([[t.point(a) == t.point(b) for b in range(n)] for a in range(n)])
        assert np.array_equal(D == 0, same)
        # triangle inequality on all triples
        assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :])
        for a, b in [(0, n // 2), (3, n - 1)]:
            chain, d = lt.loop_chain(t, a, b)
            assert d <= sum(int(t.perimeter[c]) for c in chain)


# --------------------------------------------------------------- reroot

def test_reroot_at_root_is_identity():
    t = lt.build_looptree(lt.sample_excursion(1.5, 500, 3))
    r = lt.reroot(t, 0)
    # same loops, parents and attachment points; the coding walk itself is not
    # unique (siblings at the top of a loop may be coded before or after it closes)
    assert r.same_structure(t)
    assert lt.boundary_measure_total(r) == t.n


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_reroot_round_trip(seed, upos):
    t = lt.build_looptree(lt.sample_excursion(1.5, 300, seed))
    u = upos % t.n
    r = lt.reroot(t, u)
    assert lt.boundary_measure_total(r) == t.n
    assert sorted(r.perimeter.tolist()) == sorted(t.perimeter.tolist())
    back = lt.reroot(r, lt.root_position_of(t, r))
    assert back.same_structure(t)


def test_reroot_ks_small():
    a, _ = lt.ensemble_statistics(1.5, 1024, 400, 0)
    b, _ = lt.ensemble_statistics(1.5, 1024, 400, 400, rerooted=True)
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_ensemble_worker_invariance():
    a = lt.ensemble_statistics(1.5, 256, 40, 5, rerooted=True, keep_perimeters=True, workers=1, chunk_size=10)
    b = lt.ensemble_statistics(1.5, 256, 40, 5, rerooted=True, keep_perimeters=True, workers=2, chunk_size=10)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_perimeter_tail_fit_on_exact_power_law():
    rng = np.random.default_rng(0)
    x = np.floor((1 - rng.random(200000)) ** (-1 / 1.5)).astype(int)
    slope, se = lt.perimeter_tail_fit(x, 4, 400)
    assert abs(slope + 1.5) < 0.05
