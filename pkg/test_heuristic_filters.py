"""Tests for the STD and EXTRA despike filters."""

import time

import numpy as np
import pytest

from src.exceptions import SignalError
from src.signal_pipeline.filters.heuristic import (
    HeuristicLevel,
    _extra_candidate_scan,
    _extra_scan,
    _std_candidate_scan,
    _std_scan,
    apply_heuristic,
    extra_filter,
    std_filter,
)
from src.synth.generators import NoiseKind, NoiseModel, gen_noise_with_spikes


@pytest.mark.parametrize("x, expected", [
    ([0, 0, 1, 0, 0], [0, 0, 0, 0, 0]),
    ([0, 1, 2, 3, 4], [0, 1, 2, 3, 4]),
    ([0, 0, 5, 4, 0, 0], [0, 0, 4, 4, 0, 0]),
    ([3, -1, 3], [3, 3, 3]),
])
def test_std_examples(x, expected):
    np.testing.assert_array_equal(std_filter(x), expected)


@pytest.mark.parametrize("x, expected", [
    ([0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 0, 0]),
    ([0, 0, 2, 2, 0, 0], [0, 0, 0, 0, 0, 0]),
    ([2, 2, 2, 2, 2], [2, 2, 2, 2, 2]),
    ([0, 5, 4, 1, 1], [0, 1, 1, 1, 1]),
])
def test_extra_examples(x, expected):
    np.testing.assert_array_equal(extra_filter(x), expected)


def test_std_leaves_two_sample_plateau():
    np.testing.assert_array_equal(std_filter([0, 0, 1, 1, 0, 0]), [0, 0, 1, 1, 0, 0])


def test_std_replacement_is_visible_to_the_next_window():
    # a sliding window over the untouched input would give [0, 0, 1, 0, 0]
    np.testing.assert_array_equal(std_filter([0, 1, 0, 1, 0]), [0, 0, 0, 0, 0])


def test_first_and_last_samples_pass_through():
    out = std_filter([5, 0, 0, 0, -5])
    assert out[0] == 5 and out[-1] == -5


@pytest.mark.parametrize("x", [np.linspace(-3, 7, 50), np.full(20, 1.5), np.cumsum(np.arange(30.0))])
def test_idempotent_on_monotone_and_constant(x):
    np.testing.assert_array_equal(std_filter(x), x)
    np.testing.assert_array_equal(extra_filter(x), x)


def test_output_stays_within_input_range():
    x = np.random.default_rng(5).normal(size=5000)
    for out in (std_filter(x), apply_heuristic(x, HeuristicLevel.EXTRA)):
        assert out.min() >= x.min() and out.max() <= x.max()


def test_std_matches_naive_sequential_scan():
    x = np.random.default_rng(8).integers(-3, 4, size=3000).astype(float)
    y = x.copy()
    for i in range(1, y.size - 1):
        a, b, c = y[i - 1], y[i], y[i + 1]
        if (b - a) * (b - c) > 0:
            y[i] = a if abs(b - a) <= abs(b - c) else c
    np.testing.assert_array_equal(std_filter(x), y)


def test_extra_matches_naive_sequential_scan():
    x = std_filter(np.random.default_rng(9).integers(-3, 4, size=3000).astype(float))
    y = x.copy()
    for i in range(1, y.size - 2):
        a, b, c, d = y[i - 1], y[i], y[i + 1], y[i + 2]
        hi, lo = max(a, d), min(a, d)
        if (b > hi and c > hi) or (b < lo and c < lo):
            y[i] = a if abs(b - a) <= abs(b - d) else d
            y[i + 1] = a if abs(c - a) <= abs(c - d) else d
    np.testing.assert_array_equal(extra_filter(x), y)


def test_filters_are_not_additive():
    a = np.array([0.0, 0.0, 1.0, 0.0, 0.0])
    b = np.array([0.0, 0.0, 0.0, 1.0, 2.0])
    assert not np.array_equal(std_filter(a + b), std_filter(a) + std_filter(b))


@pytest.mark.parametrize("fn, short", [(std_filter, [0, 1]), (extra_filter, [0, 1, 2])])
def test_too_short_rejected(fn, short):
    with pytest.raises(SignalError):
        fn(short)


@pytest.mark.parametrize("fn", [std_filter, extra_filter])
def test_non_finite_rejected(fn):
    with pytest.raises(SignalError, match="non-finite"):
        fn([0.0, 1.0, np.nan, 0.0, 0.0])


def test_std_removes_every_one_sample_spike_on_a_baseline():
    n = 200_000
    model = NoiseModel(NoiseKind.WHITE_PLUS_ONE_SAMPLE_SPIKES, sigma_deg=0.0, spike_rate_per_s=5.0,
                       spike_amplitude_deg=0.5, seed=21)
    spiky, starts = gen_noise_with_spikes(model, n, 1000.0)
    baseline = 2.0
    assert starts.size == 1000

    out = std_filter(baseline + spiky)

    np.testing.assert_array_equal(out, np.full(n, baseline))


def test_std_then_extra_removes_every_two_sample_spike_on_a_baseline():
    n = 200_000
    model = NoiseModel(NoiseKind.WHITE_PLUS_TWO_SAMPLE_SPIKES, sigma_deg=0.0, spike_rate_per_s=5.0,
                       spike_amplitude_deg=0.5, seed=22)
    spiky, starts = gen_noise_with_spikes(model, n, 1000.0)
    baseline = -1.0
    assert starts.size == 1000

    assert np.count_nonzero(std_filter(baseline + spiky) != baseline) == 2000
    out = apply_heuristic(baseline + spiky, HeuristicLevel.EXTRA)

    np.testing.assert_array_equal(out, np.full(n, baseline))


def test_million_samples_under_a_second():
    model = NoiseModel(NoiseKind.WHITE_PLUS_TWO_SAMPLE_SPIKES, sigma_deg=0.0, spike_rate_per_s=1.0,
                       spike_amplitude_deg=1.0, seed=1)
    x, _ = gen_noise_with_spikes(model, 1_000_000, 1000.0)
    started = time.perf_counter()
    apply_heuristic(x, HeuristicLevel.EXTRA)
    assert time.perf_counter() - started < 1.0


@pytest.mark.parametrize("scan, candidate_scan", [(_std_scan, _std_candidate_scan),
                                                  (_extra_scan, _extra_candidate_scan)])
def test_full_and_candidate_scans_agree_on_white_noise(scan, candidate_scan):
    x = np.round(np.random.default_rng(21).normal(0.0, 1.0, size=20_000), 1)
    y = x.copy()
    replaced = scan(y)
    expected, expected_replaced = candidate_scan(x)
    np.testing.assert_array_equal(y, expected)
    assert replaced == expected_replaced > 0


def test_white_noise_million_samples_under_a_second():
    pytest.importorskip("numba")
    apply_heuristic(np.zeros(16), HeuristicLevel.EXTRA)
    x = np.random.default_rng(2).normal(0.0, 0.01, size=1_000_000)
    started = time.perf_counter()
    apply_heuristic(x, HeuristicLevel.EXTRA)
    assert time.perf_counter() - started < 1.0
