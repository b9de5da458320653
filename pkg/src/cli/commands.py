from logger import logging

import argparse
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.analysis_pipeline.compare import FilterComparison
from src.analysis_pipeline.kinematics.saccades import detect_saccades, saccades_from_frame, saccades_to_frame
from src.analysis_pipeline.kinematics.velocity import recording_velocity
from src.analysis_pipeline.mainseq.main_sequence import (
    fit_main_sequence,
    scatter_table,
    summarize_by_condition,
    summarize_peak_velocity,
)
from src.cli.run_config import FILTER_CHOICES, RunConfig
from src.exceptions import ConfigError, OculofiltError, RecordingFormatError
from src.signal_pipeline.filters.butterworth import band_decompose, default_bands
from src.signal_pipeline.filters.conditions import ConditionProvider, SignalConditioner
from src.signal_pipeline.ingestion.recording import (
    DEFAULT_SAMPLE_RATE_HZ,
    FilterKind,
    Recording,
    contiguous_valid_spans,
    load_recording,
    save_recording,
)
from src.synth.scenarios import SCENARIOS, build_scenario
from utils import max_workers, write_atomic


def _parallel_map(fn: Callable, items: Sequence) -> List:
    """Map over items on a thread pool; results keep input order."""
    with ThreadPoolExecutor(max_workers=max_workers()) as executor:
        return list(executor.map(fn, items))


def _load(path: str, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ) -> Recording:
    with open(path, "rb") as handle:
        return load_recording(handle, path=str(path), default_sample_rate_hz=sample_rate_hz)


def _loader(cfg: RunConfig) -> Callable[[str], Recording]:
    return partial(_load, sample_rate_hz=cfg.sample_rate_hz)


def _emit(text: str, destination: Optional[str]):
    if destination in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(destination, text)
        logging.info(f"Wrote {destination}")


def _json_column(series: pd.Series) -> list:
    """Column values for JSON; NaN and infinities become null."""
    if not pd.api.types.is_float_dtype(series):
        return series.tolist()
    values = series.to_numpy(dtype=float)
    return [float(v) if np.isfinite(v) else None for v in values]


def _render(frame: pd.DataFrame, cfg: RunConfig, metadata: Dict[str, object]) -> str:
    if cfg.json:
        payload = dict(metadata)
        payload["non_finite"] = "null"
        payload["columns"] = {column: _json_column(frame[column]) for column in frame.columns}
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"
    return frame.to_csv(index=False, lineterminator="\n")


def _destinations(cfg: RunConfig, extension: str) -> List[Optional[str]]:
    """One output per input: the -o file for a single input, else files inside the -o directory."""
    if len(cfg.inputs) == 1:
        return [cfg.output]
    stems = [Path(path).stem for path in cfg.inputs]
    if len(set(stems)) != len(stems):
        raise ConfigError("Input files must have distinct names when writing into a directory")
    directory = Path(cfg.output)
    directory.mkdir(parents=True, exist_ok=True)
    return [str(directory / f"{stem}.{cfg.command}.{extension}") for stem in stems]


def _conditioners(cfg: RunConfig, provider: ConditionProvider) -> List[SignalConditioner]:
    if cfg.filter == "custom":
        return [provider.custom(cfg.cutoff_hz, cfg.order or 7, cfg.compensate)]
    names = provider.comparison_order if cfg.filter == "all" else [cfg.filter]
    conditioners = []
    for name in names:
        conditioner = provider.switch_condition(name, cfg.compensate)
        if cfg.order is not None and conditioner.kind.name == "zero_phase_lowpass":
            kind = FilterKind.zero_phase_lowpass(conditioner.kind.cutoff_hz, cfg.order)
            conditioner = SignalConditioner(conditioner.name, conditioner.label, kind, cfg.compensate)
        conditioners.append(conditioner)
    return conditioners


def run_filter(cfg: RunConfig):
    conditioner = _conditioners(cfg, ConditionProvider(cfg.config_data))[0]

    def process(item):
        path, destination = item
        filtered = conditioner.apply(_loader(cfg)(path))
        buffer = io.StringIO()
        save_recording(filtered, buffer)
        _emit(buffer.getvalue(), destination)

    _parallel_map(process, list(zip(cfg.inputs, _destinations(cfg, "csv"))))


def _comparison(cfg: RunConfig, provider: ConditionProvider) -> FilterComparison:
    return FilterComparison(provider, segment_cfg=cfg.segment_config, segment_length=cfg.segment_length,
                            circular_phase=cfg.circular_phase, workers=max_workers(),
                            compensate_zero_phase=cfg.compensate)


def run_spectrum(cfg: RunConfig):
    provider = ConditionProvider(cfg.config_data)
    conditioners = _conditioners(cfg, provider)
    recordings = _parallel_map(_loader(cfg), cfg.inputs)
    spectra = _comparison(cfg, provider).compare_spectra(recordings, conditioners)

    frames = []
    for label, spectrum in spectra.items():
        frame = pd.DataFrame({"freq_hz": spectrum.freqs_hz, "amplitude": spectrum.amplitude,
                              "phase_rad": spectrum.phase_rad})
        if cfg.filter == "all":
            frame["condition"] = label
        frames.append(frame)
    first = next(iter(spectra.values()))
    metadata = {"command": "spectrum", "conditions": list(spectra), "fs_hz": first.fs_hz,
                "segment_length": first.segment_length, "n_segments_averaged": first.n_segments_averaged}
    _emit(_render(pd.concat(frames, ignore_index=True), cfg, metadata), cfg.output)


def run_freqresp(cfg: RunConfig):
    provider = ConditionProvider(cfg.config_data)
    conditioners = [c for c in _conditioners(cfg, provider) if c.kind.name != "none"]
    recordings = _parallel_map(_loader(cfg), cfg.inputs)
    responses = _comparison(cfg, provider).compare_responses(recordings, conditioners)

    frames = []
    for label, response in responses.items():
        frame = pd.DataFrame({"freq_hz": response.freqs_hz, "gain": response.gain, "gain_db": response.gain_db,
                              "phase_diff_rad": response.phase_diff_rad})
        if cfg.filter == "all":
            frame["condition"] = label
        frames.append(frame)
    first = next(iter(responses.values()))
    metadata = {"command": "freqresp", "conditions": list(responses),
                "n_segments_averaged": first.n_segments_averaged,
                "note": "empirical B/A ratio; for STD and EXTRA it holds only for this input"}
    _emit(_render(pd.concat(frames, ignore_index=True), cfg, metadata), cfg.output)


def run_bands(cfg: RunConfig):
    def process(item):
        path, destination = item
        rec = _loader(cfg)(path)
        bands = default_bands(cfg.band_edges, rec.sample_rate_hz, cfg.band_order)
        min_length = 3 * (2 * cfg.band_order + 1) + 1
        columns = {"t_ms": rec.t_ms}
        channels = [("x", rec.x_deg)] + ([("y", rec.y_deg)] if cfg.include_y else [])
        for channel, values in channels:
            outputs = [np.full(len(rec), np.nan) for _ in bands]
            for span in contiguous_valid_spans(rec):
                if span.length < min_length:
                    logging.warning(f"{path}: span at sample {span.start_index} ({span.length} samples) "
                                    f"is too short for band filtering; left empty")
                    continue
                for output, filtered in zip(outputs, band_decompose(values[span.slice], bands, rec.sample_rate_hz)):
                    output[span.slice] = filtered
            for band, output in zip(bands, outputs):
                columns[f"{channel}_{band.low_hz:g}_{band.high_hz:g}"] = output
        metadata = {"command": "bands", "input": str(path), "bands_hz": [[b.low_hz, b.high_hz] for b in bands],
                    "order": cfg.band_order}
        _emit(_render(pd.DataFrame(columns), cfg, metadata), destination)

    _parallel_map(process, list(zip(cfg.inputs, _destinations(cfg, "json" if cfg.json else "csv"))))


def run_saccades(cfg: RunConfig):
    conditioners = _conditioners(cfg, ConditionProvider(cfg.config_data))

    def process(item):
        path, destination = item
        rec = _loader(cfg)(path)
        frames = []
        for conditioner in conditioners:
            records = detect_saccades(recording_velocity(conditioner.apply(rec)), cfg.detector_config)
            frame = saccades_to_frame(records)
            if cfg.filter == "all":
                frame["condition"] = conditioner.label
            frames.append(frame)
        metadata = {"command": "saccades", "input": str(path), "conditions": [c.label for c in conditioners]}
        _emit(_render(pd.concat(frames, ignore_index=True), cfg, metadata), destination)

    _parallel_map(process, list(zip(cfg.inputs, _destinations(cfg, "json" if cfg.json else "csv"))))


def _read_saccade_table(path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise RecordingFormatError(f"cannot parse saccade table: {exc}", path=path) from exc


def run_mainseq(cfg: RunConfig):
    provider = ConditionProvider(cfg.config_data)
    default_label = provider.label(provider.default_condition)
    order = [provider.label(name) for name in provider.comparison_order]
    tables = _parallel_map(_read_saccade_table, cfg.inputs)

    fits: Dict[str, list] = {}
    records: Dict[str, list] = {}
    for path, table in zip(cfg.inputs, tables):
        if "condition" not in table.columns:
            table = table.assign(condition=default_label)
        try:
            saccades_from_frame(table)
        except RecordingFormatError as exc:
            raise RecordingFormatError(exc.message, row=exc.row, path=path) from exc
        bad = ~(pd.to_numeric(table["amplitude_deg"], errors="coerce") > 0)
        if bad.any():
            logging.warning(f"{path}: dropping {int(bad.sum())} saccades with non-positive amplitude")
            table = table[~bad]
        keys = ["recording", "condition"] if "recording" in table.columns else ["condition"]
        for group_key, group in table.groupby(keys, sort=False):
            condition = str(group_key[-1] if isinstance(group_key, tuple) else group_key)
            group_records = saccades_from_frame(group)
            records.setdefault(condition, []).extend(group_records)
            fits.setdefault(condition, []).extend(
                fit_main_sequence(group_records, cfg.split_amplitude_deg, cfg.tune, cfg.tol, cfg.max_iter))

    summary = summarize_by_condition(fits, order)
    _emit(_render(summary, cfg, {"command": "mainseq", "split_amplitude_deg": cfg.split_amplitude_deg}), cfg.output)
    if cfg.scatter:
        write_atomic(cfg.scatter, scatter_table(records).to_csv(index=False, lineterminator="\n"))
    if cfg.peak_summary:
        table = summarize_peak_velocity(records, cfg.large_min_amplitude_deg, order)
        write_atomic(cfg.peak_summary, table.to_csv(index=False, lineterminator="\n"))


def run_synth(cfg: RunConfig):
    rec, truth = build_scenario(cfg.scenario, cfg.seed)
    buffer = io.StringIO()
    save_recording(rec, buffer)
    _emit(buffer.getvalue(), cfg.output)
    if truth is not None:
        _emit(truth.to_csv(index=False, lineterminator="\n"), str(Path(cfg.output).with_suffix(".truth.csv")))


HANDLERS: Dict[str, Callable[[RunConfig], None]] = {
    "filter": run_filter,
    "spectrum": run_spectrum,
    "freqresp": run_freqresp,
    "bands": run_bands,
    "saccades": run_saccades,
    "mainseq": run_mainseq,
    "synth": run_synth,
}


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("inputs", nargs="*", help="Input CSV files")
    common.add_argument("-o", "--output", default=None,
                        help="Output file ('-' for stdout), or a directory when there are several inputs")
    common.add_argument("--config", dest="config_file", default=None, help="key=value file mirroring the flags")
    common.add_argument("--json", action="store_true", default=None, help="Write JSON instead of CSV")

    filtering = argparse.ArgumentParser(add_help=False)
    filtering.add_argument("--filter", choices=FILTER_CHOICES, default=None)
    filtering.add_argument("--cutoff-hz", dest="cutoff_hz", type=float, default=None)
    filtering.add_argument("--order", type=int, default=None)
    filtering.add_argument("--compensate", action="store_true", default=None,
                           help="Put the zero-phase composite, not the single pass, at -3 dB on the cutoff")

    channels = argparse.ArgumentParser(add_help=False)
    channels.add_argument("--include-y", dest="include_y", action="store_true", default=None)

    segmenting = argparse.ArgumentParser(add_help=False)
    segmenting.add_argument("--segment-length", dest="segment_length", type=int, default=None)
    segmenting.add_argument("--block-length", dest="block_length", type=int, default=None)
    segmenting.add_argument("--vmax", dest="vmax_deg_s", type=float, default=None)
    segmenting.add_argument("--horizontal-only", dest="horizontal_only", action="store_true", default=None)
    segmenting.add_argument("--circular-phase", dest="circular_phase", action="store_true", default=None)

    banding = argparse.ArgumentParser(add_help=False)
    banding.add_argument("--edges", dest="band_edges", type=_float_list, default=None)
    banding.add_argument("--band-order", dest="band_order", type=int, default=None)

    detecting = argparse.ArgumentParser(add_help=False)
    detecting.add_argument("--onset", dest="onset_deg_s", type=float, default=None)
    detecting.add_argument("--offset", dest="offset_deg_s", type=float, default=None)
    detecting.add_argument("--min-duration-ms", dest="min_duration_ms", type=float, default=None)
    detecting.add_argument("--merge-gap-ms", dest="merge_gap_ms", type=float, default=None)

    fitting = argparse.ArgumentParser(add_help=False)
    fitting.add_argument("--split-amplitude", dest="split_amplitude_deg", type=float, default=None)
    fitting.add_argument("--tune", type=float, default=None)
    fitting.add_argument("--tol", type=float, default=None)
    fitting.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    fitting.add_argument("--large-min-amplitude", dest="large_min_amplitude_deg", type=float, default=None)
    fitting.add_argument("--scatter", default=None, help="Also write ln_amp,ln_pkv,condition rows here")
    fitting.add_argument("--peak-summary", dest="peak_summary", default=None,
                         help="Also write the large-saccade peak-velocity table here")

    synthesizing = argparse.ArgumentParser(add_help=False)
    synthesizing.add_argument("--scenario", choices=sorted(SCENARIOS), default=None)
    synthesizing.add_argument("--seed", type=int, default=None)

    parser = argparse.ArgumentParser(prog="oculofilt",
                                     description="Filter and analyse 1000 Hz eye-movement recordings.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("filter", parents=[common, filtering], help="Filter recordings per valid span")
    subparsers.add_parser("spectrum", parents=[common, filtering, segmenting, channels],
                          help="Averaged amplitude/phase spectrum of fixation segments")
    subparsers.add_parser("freqresp", parents=[common, filtering, segmenting, channels],
                          help="Empirical filter frequency response (B/A)")
    subparsers.add_parser("bands", parents=[common, banding, channels], help="Zero-phase band decomposition")
    subparsers.add_parser("saccades", parents=[common, filtering, detecting], help="Detect saccades")
    subparsers.add_parser("mainseq", parents=[common, fitting], help="Main-sequence fits and summaries")
    subparsers.add_parser("synth", parents=[common, synthesizing], help="Write a synthetic recording")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    :param argv: Arguments without the program name; sys.argv[1:] when None.
    :return: 0 on success, 1 on data or processing errors, 2 on bad usage.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        cfg = RunConfig.resolve(vars(args)).validate()
        HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"oculofilt {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OculofiltError, OSError) as exc:
        logging.debug(f"{args.command} failed", exc_info=True)
        print(f"oculofilt {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
