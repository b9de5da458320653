"""Tests for segment spectra, averaging and empirical frequency responses."""

import numpy as np
import pytest

from src.analysis_pipeline.compare import FilterComparison
from src.analysis_pipeline.spectral.frequency_response import (
    db_to_amplitude_ratio,
    db_to_power_ratio,
    estimate_frequency_response,
    gain_to_db,
)
from src.analysis_pipeline.spectral.spectrum import (
    COHERENT_GAIN,
    Spectrum,
    average_spectra,
    detrend_poly2,
    frequency_grid,
    hann_window,
    mean_spectrum,
    segment_spectrum,
)
from src.exceptions import GridMismatchError, SignalError
from src.signal_pipeline.filters.butterworth import design_butterworth, magnitude_phase_at
from src.signal_pipeline.filters.heuristic import std_filter
from src.signal_pipeline.ingestion.recording import Recording
from src.synth.scenarios import build_scenario

FS = 1000.0
N = 256


def _flat(amplitude, phase=None, count=1, n=4, fs=4.0):
    bins = n // 2 + 1
    phase = np.zeros(bins) if phase is None else phase
    return Spectrum(freqs_hz=frequency_grid(n, fs), amplitude=np.asarray(amplitude, dtype=float),
                    phase_rad=np.asarray(phase, dtype=float), n_segments_averaged=count,
                    segment_length=n, fs_hz=fs)


def test_frequency_grid_has_129_bins_up_to_nyquist():
    grid = frequency_grid(N, FS)
    assert grid.size == 129
    assert grid[1] == pytest.approx(3.90625)
    assert grid[-1] == 500.0


def test_hann_window_is_symmetric_with_zero_ends():
    w = hann_window(N)
    k = np.arange(N)
    np.testing.assert_allclose(w, 0.5 * (1 - np.cos(2 * np.pi * k / (N - 1))), atol=1e-15)
    assert w[0] == w[-1] == 0.0
    np.testing.assert_allclose(w, w[::-1])


def test_detrend_removes_quadratic_exactly():
    k = np.arange(N, dtype=float)
    np.testing.assert_allclose(detrend_poly2(3.0 - 0.02 * k + 1e-4 * k ** 2), 0.0, atol=1e-9)


def test_detrend_matches_least_squares_residual():
    x = np.random.default_rng(2).normal(size=N) + np.linspace(0, 5, N)
    k = np.arange(N, dtype=float)
    design = np.column_stack([np.ones(N), k, k ** 2])
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    residual = detrend_poly2(x)
    np.testing.assert_allclose(residual, x - design @ coef, atol=1e-9)
    assert abs(residual.mean()) < 1e-12


def test_bin_centred_unit_sine_reads_one():
    x = np.sin(2 * np.pi * 20 * np.arange(N) / N)
    spectrum = segment_spectrum(x, FS, N)
    assert spectrum.amplitude[20] == pytest.approx(1.0, rel=0.01)
    assert spectrum.amplitude[19] == pytest.approx(0.5, rel=0.02)
    assert spectrum.amplitude[21] == pytest.approx(0.5, rel=0.02)
    assert np.all(spectrum.amplitude[30:] < 1e-2)


def test_cosine_leads_sine_by_quarter_cycle():
    n = np.arange(N)
    sine = segment_spectrum(np.sin(2 * np.pi * 20 * n / N), FS, N)
    cosine = segment_spectrum(np.cos(2 * np.pi * 20 * n / N), FS, N)
    assert np.angle(np.exp(1j * (cosine.phase_rad[20] - sine.phase_rad[20]))) == pytest.approx(np.pi / 2, abs=1e-2)


def test_amplitudes_satisfy_parseval_on_windowed_segment():
    x = np.random.default_rng(4).normal(size=N)
    tapered = detrend_poly2(x) * hann_window(N)
    amp = segment_spectrum(x, FS, N).amplitude
    magnitude = amp * N * COHERENT_GAIN / 2.0
    magnitude[0] = amp[0] * N * COHERENT_GAIN
    magnitude[-1] = amp[-1] * N * COHERENT_GAIN
    energy = (magnitude[0] ** 2 + 2 * np.sum(magnitude[1:-1] ** 2) + magnitude[-1] ** 2) / N
    assert energy == pytest.approx(np.sum(tapered ** 2), rel=1e-6)


@pytest.mark.parametrize("x, match", [
    (np.zeros(255), "exactly"),
    (np.r_[np.zeros(255), np.nan], "non-finite"),
])
def test_segment_spectrum_rejects_bad_segments(x, match):
    with pytest.raises(SignalError, match=match):
        segment_spectrum(x, FS, N)


def test_segment_length_must_be_power_of_two():
    with pytest.raises(SignalError, match="power of two"):
        segment_spectrum(np.zeros(200), FS, 200)


def test_white_noise_mean_spectrum_is_flat():
    rng = np.random.default_rng(216)
    amplitudes = np.vstack([segment_spectrum(rng.normal(size=N), FS, N).amplitude for _ in range(216)])
    interior = slice(5, 124)
    per_bin = amplitudes[:, interior].mean(axis=0)
    sem = amplitudes[:, interior].std(axis=0, ddof=1) / np.sqrt(216)
    flat = per_bin.mean()
    assert np.all(np.abs(per_bin - flat) <= 4 * sem)


def test_average_weights_by_segment_count():
    out = average_spectra([_flat([1.0, 1.0, 1.0], count=1), _flat([3.0, 5.0, 1.0], count=3)])
    np.testing.assert_allclose(out.amplitude, [2.5, 4.0, 1.0])
    assert out.n_segments_averaged == 4


def test_phase_average_arithmetic_by_default_and_circular_on_request():
    near_pi = np.full(3, np.pi - 0.1)
    a = _flat([1.0, 1.0, 1.0], phase=near_pi)
    b = _flat([1.0, 1.0, 1.0], phase=-near_pi)
    np.testing.assert_allclose(average_spectra([a, b]).phase_rad, 0.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(average_spectra([a, b], circular_phase=True).phase_rad), np.pi, atol=1e-9)


def test_average_rejects_mixed_grids_and_empty_input():
    with pytest.raises(GridMismatchError):
        average_spectra([_flat([1.0, 1.0, 1.0]), _flat([1.0, 1.0, 1.0], fs=8.0)])
    with pytest.raises(SignalError):
        average_spectra([])


def test_mean_spectrum_counts_segments():
    rng = np.random.default_rng(1)
    out = mean_spectrum([rng.normal(size=N) for _ in range(5)], FS, N)
    assert out.n_segments_averaged == 5
    assert out.freqs_hz.size == 129


def test_response_of_identical_spectra_is_unity():
    spectrum = _flat([0.0, 2.0, 1.0], phase=[0.0, 0.4, -0.2], count=2)
    response = estimate_frequency_response(spectrum, spectrum)
    np.testing.assert_array_equal(response.gain, [0.0, 1.0, 1.0])
    assert response.gain_db[0] == -np.inf
    assert not response.undefined.any()
    np.testing.assert_allclose(response.phase_diff_rad, 0.0)


def test_response_flags_zero_reference_bins(caplog):
    unfiltered = _flat([0.0, 2.0, 1.0])
    filtered = _flat([0.5, 1.0, 0.0])
    response = estimate_frequency_response(unfiltered, filtered)
    assert response.undefined.tolist() == [True, False, False]
    assert response.gain[0] == np.inf
    assert response.gain[1] == 0.5
    assert "inf" in caplog.text


def test_response_rejects_mismatched_inputs():
    with pytest.raises(GridMismatchError):
        estimate_frequency_response(_flat([1.0, 1.0, 1.0]), _flat(np.ones(5), phase=np.zeros(5), n=8))
    with pytest.raises(GridMismatchError, match="counts"):
        estimate_frequency_response(_flat([1.0, 1.0, 1.0], count=2), _flat([1.0, 1.0, 1.0], count=3))


def test_decibel_conversions():
    assert gain_to_db(0.5) == pytest.approx(-6.0206, abs=1e-4)
    assert gain_to_db(0.112) == pytest.approx(-19.0, abs=0.05)
    assert db_to_amplitude_ratio(-6.0) == pytest.approx(0.501, abs=1e-3)
    assert db_to_amplitude_ratio(-19.0) == pytest.approx(0.112, abs=1e-3)
    assert db_to_power_ratio(-19.0) == pytest.approx(0.0126, abs=1e-4)


def _windowed_zero_phase_gain(f, n, oversample=16):
    """Expected B/A on white noise, including Hann leakage across neighbouring frequencies."""
    m = n * oversample
    kernel = np.abs(np.fft.fft(hann_window(n), m)) ** 2
    composite = magnitude_phase_at(f, np.arange(m) * f.design.fs_hz / m)[0] ** 2
    bins = np.arange(n // 2 + 1) * oversample
    weights = kernel[(bins[:, None] - np.arange(m)[None, :]) % m]
    return np.sqrt(weights @ composite ** 2 / weights.sum(axis=1))


def test_zero_phase_lowpass_response_from_white_noise():
    n = 27 * 2048
    x = 0.01 * np.random.default_rng(100).normal(size=n)
    rec = Recording.from_positions(x, np.zeros(n))

    responses = FilterComparison().compare_responses([rec], ["none", "zlp100"])

    assert list(responses) == ["Z-LP100"]
    response = responses["Z-LP100"]
    assert response.n_segments_averaged == 216
    f = design_butterworth("lowpass", 7, [100], FS)
    analytic_db = gain_to_db(magnitude_phase_at(f, response.freqs_hz)[0] ** 2)
    expected_db = gain_to_db(_windowed_zero_phase_gain(f, N))
    audible = analytic_db >= -40.0
    np.testing.assert_allclose(response.gain_db[audible], expected_db[audible], atol=1.0)
    assert response.gain_db[-1] <= -60.0


@pytest.mark.parametrize("condition", ["std", "extra"])
def test_heuristic_filters_cut_nyquist_on_spike_noise(condition):
    rec, _ = build_scenario("spikes", 0)
    response = FilterComparison().compare_responses([rec], [condition])
    nyquist_db = next(iter(response.values())).gain_db[-1]
    assert -30.0 <= nyquist_db <= -10.0


def test_condition_signal_applies_the_named_condition():
    rec, _ = build_scenario("spikes", 0)
    comparison = FilterComparison()
    np.testing.assert_array_equal(comparison.condition_signal(rec, "std").x_deg, std_filter(rec.x_deg))
    assert comparison.condition_signal(rec, "none") is rec
