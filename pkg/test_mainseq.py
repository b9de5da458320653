"""Tests for main-sequence clustering, robust fits and per-condition summaries."""

import numpy as np
import pytest

from src.analysis_pipeline.kinematics.saccades import SaccadeRecord, saccades_from_frame
from src.analysis_pipeline.mainseq.main_sequence import (
    Cluster,
    MainSequenceFit,
    bisquare,
    fit_main_sequence,
    robust_fit,
    scatter_table,
    split_clusters,
    summarize_by_condition,
    summarize_peak_velocity,
)
from src.exceptions import SignalError
from src.synth.scenarios import LARGE_SLOPE, SMALL_SLOPE, build_scenario


def _saccade(amplitude, peak=300.0):
    return SaccadeRecord(onset_index=0, offset_index=10, onset_ms=0.0, offset_ms=10.0, amplitude_deg=amplitude,
                         peak_velocity_deg_s=peak, duration_ms=10.0)


def _fit(slope, cluster=Cluster.SMALL):
    return MainSequenceFit(cluster=cluster, slope=slope, intercept=4.6, n_points=10, converged=True, iterations=3)


def test_split_puts_boundary_in_small_cluster():
    small, large = split_clusters([_saccade(1.0), _saccade(4.0), _saccade(4.01), _saccade(12.0)])
    assert [s.amplitude_deg for s in small] == [1.0, 4.0]
    assert [s.amplitude_deg for s in large] == [4.01, 12.0]


def test_split_rejects_non_positive_amplitude():
    with pytest.raises(SignalError):
        split_clusters([_saccade(2.0), _saccade(0.0)])


def test_bisquare_weights():
    np.testing.assert_allclose(bisquare(np.array([0.0, 0.5, -0.5, 1.0, 2.0])), [1.0, 0.5625, 0.5625, 0.0, 0.0])


def test_collinear_points_fit_exactly():
    x = np.log([0.5, 1.0, 2.0, 3.0, 4.0])
    fit = robust_fit(x, 0.673 * x + 4.6)
    assert fit.slope == pytest.approx(0.673, abs=1e-9)
    assert fit.intercept == pytest.approx(4.6, abs=1e-9)
    assert fit.converged
    assert fit.iterations == 1


@pytest.mark.parametrize("x, y, match", [
    ([1.0, 1.0, 1.0, 1.0], [1.0, 2.0, 3.0, 4.0], "rank deficient"),
    ([1.0, 2.0], [1.0, 2.0], "at least 3"),
    ([1.0, 2.0, np.nan], [1.0, 2.0, 3.0], "non-finite"),
])
def test_robust_fit_rejects_degenerate_input(x, y, match):
    with pytest.raises(SignalError, match=match):
        robust_fit(x, y)


def _noisy_line_with_outliers(seed=6):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 3.0, size=60)
    x[-6:] = np.linspace(2.5, 3.0, 6)
    y = 0.5 * x + 5.0 + rng.normal(0.0, 0.01, size=60)
    y[-6:] += 2.0
    return x, y


def test_outliers_do_not_pull_the_slope():
    x, y = _noisy_line_with_outliers()
    ordinary = np.polyfit(x, y, 1)[0]
    fit = robust_fit(x, y)
    assert abs(ordinary - 0.5) > 0.1
    assert fit.slope == pytest.approx(0.5, abs=0.02)
    assert fit.converged


def test_fit_is_equivariant_to_scaling_and_shifting_y():
    x, y = _noisy_line_with_outliers()
    base = robust_fit(x, y)
    scaled = robust_fit(x, 3.0 * y + 2.0)
    assert scaled.slope == pytest.approx(3.0 * base.slope, rel=1e-4)
    assert scaled.intercept == pytest.approx(3.0 * base.intercept + 2.0, rel=1e-4)


def test_iteration_cap_reports_non_convergence(caplog):
    x, y = _noisy_line_with_outliers()
    fit = robust_fit(x, y, max_iter=1)
    assert not fit.converged
    assert fit.iterations == 1
    assert "did not converge" in caplog.text


def test_synthetic_main_sequence_slopes_recovered():
    _, truth = build_scenario("mainseq", 0)
    fits = {fit.cluster: fit for fit in fit_main_sequence(saccades_from_frame(truth))}
    assert fits[Cluster.SMALL].slope == pytest.approx(SMALL_SLOPE, abs=0.03)
    assert fits[Cluster.LARGE].slope == pytest.approx(LARGE_SLOPE, abs=0.03)
    assert fits[Cluster.SMALL].n_points + fits[Cluster.LARGE].n_points == 120


def test_sparse_cluster_skipped(caplog):
    records = [_saccade(a, 100.0 * a ** 0.67) for a in (1.0, 2.0, 3.0, 10.0)]
    fits = fit_main_sequence(records)
    assert [fit.cluster for fit in fits] == [Cluster.SMALL]
    assert "need 3" in caplog.text


def test_summary_mean_and_sample_sd():
    table = summarize_by_condition({"Z-LP50": [_fit(0.9)],
                                    "STD": [_fit(0.6), _fit(0.8), _fit(0.45, Cluster.LARGE)]})
    assert table["condition"].tolist() == ["STD", "Z-LP50"]
    std = table.iloc[0]
    assert std["small_mean"] == pytest.approx(0.7)
    assert std["small_sd"] == pytest.approx(0.1414, abs=1e-4)
    assert std["small_n"] == 2
    assert std["large_sd"] == 0.0
    single = table.iloc[1]
    assert single["small_sd"] == 0.0
    assert np.isnan(single["large_mean"])
    assert single["large_n"] == 0


def test_summary_rows_follow_table_order_then_extras():
    fits = {name: [_fit(0.6)] for name in ("Z-LP80", "Z-LP50", "No Filter", "EXTRA")}
    assert summarize_by_condition(fits)["condition"].tolist() == ["No Filter", "EXTRA", "Z-LP50", "Z-LP80"]


def test_peak_velocity_summary_counts_large_saccades():
    records = {"No Filter": [_saccade(10.0, 400.0), _saccade(25.0, 600.0), _saccade(30.0, 620.0)],
               "Z-LP50": [_saccade(5.0, 250.0)]}
    table = summarize_peak_velocity(records)
    first = table.iloc[0]
    assert first["n"] == 2
    assert first["amplitude_mean"] == pytest.approx(27.5)
    assert first["peak_velocity_sd"] == pytest.approx(np.std([600.0, 620.0], ddof=1))
    assert table.iloc[1]["n"] == 0


def test_scatter_table_logs_both_axes():
    table = scatter_table({"STD": [_saccade(np.e, np.e ** 2)]})
    assert table.columns.tolist() == ["ln_amp", "ln_pkv", "condition"]
    assert table.iloc[0]["ln_amp"] == pytest.approx(1.0)
    assert table.iloc[0]["ln_pkv"] == pytest.approx(2.0)
