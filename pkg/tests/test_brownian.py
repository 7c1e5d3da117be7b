import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rough_em import _rng, brownian
from rough_em.brownian import MAX_LEVEL, sample_increments, sample_path


def test_mix64_matches_splitmix_reference():
    # first output of SplitMix64 seeded with 0
    assert _rng.mix64(0 + _rng.GOLDEN) == 0xE220A8397B1DCDAF


def test_draws_depend_only_on_seed_and_index():
    a = sample_increments(3, [5, 9], 1.0, 6, 2)
    b = sample_increments(3, [9], 1.0, 6, 2)
    np.testing.assert_array_equal(a[1], b[0])


def test_streams_and_seeds_differ():
    a = brownian.gaussian_draws(1, [0], 16, stream=0)
    b = brownian.gaussian_draws(1, [0], 16, stream=1)
    c = brownian.gaussian_draws(2, [0], 16, stream=0)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_start_offset_is_a_window_into_the_same_sequence():
    full = brownian.gaussian_draws(4, [2], 40)
    tail = brownian.gaussian_draws(4, [2], 10, start=30)
    np.testing.assert_array_equal(full[:, 30:], tail)


def test_variance_chi_square_oracle():
    # per-slot sample variance of N(0, delta) increments over 1e5 paths at L = 4
    M, L = 100_000, 4
    incr = sample_increments(11, range(M), 1.0, L, 1)[:, :, 0]
    delta = 1.0 / (1 << L)
    var = incr.var(axis=0, ddof=1)
    se = delta * math.sqrt(2.0 / (M - 1))
    assert np.all(np.abs(var - delta) <= 5 * se)


def test_level_limits():
    with pytest.raises(ValueError):
        sample_increments(0, [0], 1.0, -1, 1)
    with pytest.raises(OverflowError):
        sample_increments(0, [0], 1.0, MAX_LEVEL + 1, 1)


def test_value_at_and_times():
    p = sample_path(0, 0, 2.0, 3, 1)
    assert p.times()[-1] == 2.0
    np.testing.assert_array_equal(p.value_at(0), [0.0])
    assert p.value_at(8)[0] == pytest.approx(p.increments.sum())
    with pytest.raises(IndexError):
        p.value_at(9)


def test_path_is_read_only():
    p = sample_path(0, 0, 1.0, 3, 1)
    with pytest.raises(ValueError):
        p.increments[0, 0] = 1.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), index=st.integers(0, 10**6), L=st.integers(1, 10),
       dims=st.integers(1, 3), data=st.data())
def test_telescoping_is_exact_left_to_right(seed, index, L, dims, data):
    level = data.draw(st.integers(0, L))
    p = sample_path(seed, index, 1.0, L, dims)
    coarse = p.coarsen(level)
    factor = 1 << (L - level)
    manual = np.zeros_like(coarse)
    for i in range(coarse.shape[0]):
        acc = p.increments[i * factor].copy()
        for q in range(1, factor):
            acc = acc + p.increments[i * factor + q]
        manual[i] = acc
    np.testing.assert_array_equal(coarse, manual)
    # the coarse endpoint agrees with the fine one to summation-order roundoff
    total = p.cumulative()[-1]
    assert np.all(np.abs(coarse.sum(axis=0) - total) <= 1e-12 * np.maximum(1.0, np.abs(total)))


@settings(max_examples=25, deadline=None)
@given(L=st.integers(2, 8), a=st.integers(0, 8), b=st.integers(0, 8))
def test_coarsen_composes(L, a, b):
    lo, hi = sorted((min(a, L), min(b, L)))
    p = sample_path(1, 2, 1.0, L, 1)
    mid = brownian.BrownianPathGrid(1.0, hi, 1, 1, 2, p.coarsen(hi))
    np.testing.assert_allclose(mid.coarsen(lo), p.coarsen(lo), rtol=0, atol=1e-12)
