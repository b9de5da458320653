"""End-to-end tests of the oculofilt command line."""

import io
import json

import numpy as np
import pandas as pd
import pytest

from src.cli.commands import run
from src.signal_pipeline.filters.heuristic import HeuristicLevel, apply_heuristic
from src.signal_pipeline.ingestion.recording import Recording, load_recording, save_recording


@pytest.fixture
def synth(tmp_path):
    def make(scenario, seed=0, name=None):
        path = tmp_path / (name or f"{scenario}{seed}.csv")
        assert run(["synth", "--scenario", scenario, "--seed", str(seed), "-o", str(path)]) == 0
        return path
    return make


def _read_recording(path):
    with open(path, "rb") as handle:
        return load_recording(handle)


def _stdout_frame(capsys):
    return pd.read_csv(io.StringIO(capsys.readouterr().out))


def test_synth_writes_recording_and_truth(synth):
    path = synth("saccades", 3)
    rec = _read_recording(path)
    truth = pd.read_csv(path.with_suffix(".truth.csv"))
    assert rec.subject_id == "synthetic"
    assert len(truth) == 40
    assert synth("fixation", 3).with_suffix(".truth.csv").exists() is False


def test_filter_extra_matches_library(synth, tmp_path):
    source = synth("spikes2")
    out = tmp_path / "filtered.csv"

    assert run(["filter", str(source), "--filter", "extra", "-o", str(out)]) == 0

    original = _read_recording(source)
    filtered = _read_recording(out)
    np.testing.assert_array_equal(filtered.x_deg, apply_heuristic(original.x_deg, HeuristicLevel.EXTRA))
    np.testing.assert_array_equal(filtered.t_ms, original.t_ms)


def test_filter_several_inputs_into_directory(synth, tmp_path):
    first, second = synth("fixation", 1), synth("fixation", 2)
    assert run(["filter", str(first), str(second), "--filter", "zlp50"]) == 2
    assert run(["filter", str(first), str(second), "--filter", "zlp50", "-o", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "fixation1.filter.csv").exists()
    assert (tmp_path / "out" / "fixation2.filter.csv").exists()


def test_freqresp_zlp100_stop_band(synth, capsys):
    source = synth("fixation")
    assert run(["freqresp", str(source), "--filter", "zlp100"]) == 0
    frame = _stdout_frame(capsys)
    assert frame.columns.tolist() == ["freq_hz", "gain", "gain_db", "phase_diff_rad"]
    assert len(frame) == 129
    assert frame["gain_db"].iloc[-1] <= -80.0


def test_freqresp_std_on_spike_noise(synth, capsys):
    source = synth("spikes")
    assert run(["freqresp", str(source), "--filter", "std"]) == 0
    nyquist_db = _stdout_frame(capsys)["gain_db"].iloc[-1]
    assert -30.0 <= nyquist_db <= -10.0


def test_spectrum_all_conditions(synth, capsys):
    source = synth("fixation")
    assert run(["spectrum", str(source), "--filter", "all"]) == 0
    frame = _stdout_frame(capsys)
    assert frame["condition"].unique().tolist() == ["No Filter", "STD", "EXTRA", "Z-LP100", "Z-LP50"]
    assert len(frame) == 5 * 129


def test_json_and_csv_carry_the_same_numbers(synth, capsys):
    source = synth("fixation")
    assert run(["spectrum", str(source), "--filter", "zlp100"]) == 0
    csv_frame = _stdout_frame(capsys)
    assert run(["spectrum", str(source), "--filter", "zlp100", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)

    assert payload["n_segments_averaged"] == 112
    assert payload["conditions"] == ["Z-LP100"]
    for column in csv_frame.columns:
        np.testing.assert_allclose(payload["columns"][column], csv_frame[column], rtol=1e-12)


def test_output_independent_of_thread_count(synth, tmp_path, monkeypatch):
    inputs = [str(synth("fixation", 1)), str(synth("fixation", 2))]
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("OCULOFILT_THREADS", threads)
        out = tmp_path / f"spectrum{threads}.csv"
        assert run(["spectrum", *inputs, "--filter", "all", "-o", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_bands_columns(synth, capsys):
    source = synth("fixation")
    assert run(["bands", str(source)]) == 0
    frame = _stdout_frame(capsys)
    assert frame.columns.tolist() == ["t_ms", "x_0_50", "x_51_75", "x_76_100", "x_101_300", "x_301_500"]
    assert len(frame) == 30_000


def test_config_file_overrides_yaml_and_flags_override_file(synth, tmp_path):
    source = synth("fixation")
    settings = tmp_path / "run.cfg"
    settings.write_text("# stricter veto\nvmax=1\nfilter=zlp100\n")

    assert run(["spectrum", str(source), "--config", str(settings)]) == 1
    assert run(["spectrum", str(source), "--config", str(settings), "--vmax", "25",
                "-o", str(tmp_path / "s.csv")]) == 0
    assert pd.read_csv(tmp_path / "s.csv").shape == (129, 3)


def test_unknown_config_key_is_usage_error(synth, tmp_path):
    settings = tmp_path / "bad.cfg"
    settings.write_text("colour=blue\n")
    assert run(["spectrum", str(synth("fixation")), "--config", str(settings)]) == 2


@pytest.mark.parametrize("argv", [
    ["spectrum", "--no-such-flag"],
    ["spectrum", "x.csv", "--filter", "custom"],
    ["freqresp", "x.csv", "--filter", "none"],
    ["filter", "x.csv", "--filter", "all"],
    ["spectrum", "x.csv", "--segment-length", "200"],
    ["saccades", "x.csv", "--onset", "10", "--offset", "20"],
    ["spectrum"],
])
def test_usage_errors_exit_2(argv):
    assert run(argv) == 2


def test_missing_and_malformed_inputs_exit_1(tmp_path, capsys):
    assert run(["filter", str(tmp_path / "absent.csv"), "--filter", "std"]) == 1
    broken = tmp_path / "broken.csv"
    broken.write_text("time,x,y\n0,0,0\n")
    assert run(["filter", str(broken), "--filter", "std"]) == 1
    assert "header" in capsys.readouterr().err

    binary = tmp_path / "binary.csv"
    binary.write_bytes(b"t_ms,x_deg,y_deg\n0,\xff,0\n")
    assert run(["filter", str(binary), "--filter", "std"]) == 1
    assert "binary.csv: not UTF-8" in capsys.readouterr().err

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("t_ms,x_deg,y_deg\n0,1.5,2.5,\n1,1.5,2.5,\n")
    assert run(["filter", str(ragged), "--filter", "std"]) == 1
    assert "row 0: row has 4 fields" in capsys.readouterr().err

    table = tmp_path / "table.csv"
    table.write_text("onset_ms,offset_ms,amplitude_deg,peak_velocity_deg_s,duration_ms\n"
                     "0,20,3,180,20\n100,120,4,abc,20\n")
    assert run(["mainseq", str(table)]) == 1
    assert "table.csv, row 1: peak_velocity_deg_s value 'abc'" in capsys.readouterr().err


def _reject_constant(token):
    raise ValueError(f"non-standard JSON token {token}")


def test_json_output_writes_null_for_non_finite_values(tmp_path, capsys):
    x = np.zeros(300)
    x[10] = np.nan
    rec = Recording.from_positions(x, np.zeros(300), valid=np.isfinite(x))
    source = tmp_path / "gappy.csv"
    buffer = io.StringIO()
    save_recording(rec, buffer)
    source.write_text(buffer.getvalue())

    assert run(["bands", str(source), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out, parse_constant=_reject_constant)
    assert payload["non_finite"] == "null"
    column = payload["columns"]["x_0_50"]
    assert column[:11] == [None] * 11
    assert all(value is not None for value in column[11:])


def test_configured_sample_rate_applies_to_files_without_metadata(tmp_path):
    source = tmp_path / "slow.csv"
    source.write_text("t_ms,x_deg,y_deg\n" + "".join(f"{2 * i},0,0\n" for i in range(10)))
    out = tmp_path / "slow.filter.csv"
    assert run(["filter", str(source), "--filter", "std", "-o", str(out)]) == 1
    settings = tmp_path / "rate.cfg"
    settings.write_text("sample_rate_hz=500\n")
    assert run(["filter", str(source), "--filter", "std", "--config", str(settings), "-o", str(out)]) == 0
    assert _read_recording(out).sample_rate_hz == 500.0


def test_cutoff_without_custom_filter_warns(synth, tmp_path, caplog):
    source = synth("fixation")
    assert run(["spectrum", str(source), "--filter", "zlp100", "--cutoff-hz", "80",
                "-o", str(tmp_path / "s.csv")]) == 0
    assert "--cutoff-hz 80 is ignored" in caplog.text



def test_saccades_then_mainseq_end_to_end(synth, tmp_path):
    source = synth("mainseq")
    table = tmp_path / "mainseq.saccades.csv"
    summary = tmp_path / "summary.csv"
    scatter = tmp_path / "scatter.csv"
    peaks = tmp_path / "peaks.csv"

    assert run(["saccades", str(source), "--filter", "all", "-o", str(table)]) == 0
    detected = pd.read_csv(table)
    assert set(detected["condition"]) == {"No Filter", "STD", "EXTRA", "Z-LP100", "Z-LP50"}

    assert run(["mainseq", str(table), "-o", str(summary), "--scatter", str(scatter),
                "--peak-summary", str(peaks)]) == 0

    result = pd.read_csv(summary)
    assert result["condition"].tolist() == ["No Filter", "STD", "EXTRA", "Z-LP100", "Z-LP50"]
    assert (result["small_n"] == 1).all() and (result["large_n"] == 1).all()
    unfiltered = result.iloc[0]
    assert unfiltered["small_mean"] == pytest.approx(0.673, abs=0.1)
    assert unfiltered["large_mean"] == pytest.approx(0.438, abs=0.1)
    assert pd.read_csv(scatter).columns.tolist() == ["ln_amp", "ln_pkv", "condition"]
    assert len(pd.read_csv(peaks)) == 5


def test_mainseq_without_condition_column_uses_no_filter(synth, tmp_path, capsys):
    source = synth("saccades", 2)
    table = tmp_path / "plain.csv"
    assert run(["saccades", str(source), "-o", str(table)]) == 0
    assert "condition" not in pd.read_csv(table).columns
    assert run(["mainseq", str(table)]) == 0
    assert _stdout_frame(capsys)["condition"].tolist() == ["No Filter"]
