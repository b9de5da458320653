from logger import logging

from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from src.analysis_pipeline.kinematics.velocity import VelocitySeries
from src.exceptions import ConfigError, RecordingFormatError
from src.signal_pipeline.ingestion.recording import valid_runs

SACCADE_COLUMNS = ["onset_ms", "offset_ms", "amplitude_deg", "peak_velocity_deg_s", "duration_ms"]


@dataclass(frozen=True)
class DetectorConfig:
    """Velocity-threshold detector settings (hysteresis, minimum duration, merge gap)."""

    onset_deg_s: float = 30.0
    offset_deg_s: float = 20.0
    min_duration_ms: float = 6.0
    merge_gap_ms: float = 20.0

    def validate(self) -> "DetectorConfig":
        if not 0 < self.offset_deg_s <= self.onset_deg_s:
            raise ConfigError(f"Detector thresholds need 0 < offset <= onset, got "
                              f"{self.offset_deg_s} / {self.onset_deg_s} deg/s")
        if self.min_duration_ms < 0 or self.merge_gap_ms < 0:
            raise ConfigError("Detector durations must be non-negative")
        return self


@dataclass(frozen=True)
class SaccadeRecord:
    onset_index: int
    offset_index: int
    onset_ms: float
    offset_ms: float
    amplitude_deg: float
    peak_velocity_deg_s: float
    duration_ms: float


def detect_saccades(v: VelocitySeries, cfg: DetectorConfig = DetectorConfig()) -> List[SaccadeRecord]:
    """
    Velocity-threshold saccade detection with hysteresis.

    Candidates are runs of defined speed >= offset_deg_s that reach
    onset_deg_s somewhere. Runs separated by at most merge_gap_ms of defined
    samples are merged; events shorter than min_duration_ms are dropped.

    :param v: Velocity of the recording, with its positions.
    :param cfg: Detector thresholds.
    :return: Saccades in time order.
    """
    cfg.validate()
    speed = np.nan_to_num(v.speed, nan=0.0)
    moving = v.defined_mask & (speed >= cfg.offset_deg_s)
    runs = [(span.start_index, span.stop_index - 1) for span in valid_runs(moving)
            if np.any(speed[span.slice] >= cfg.onset_deg_s)]

    merged: List[List[int]] = []
    for onset, offset in runs:
        if merged:
            previous_offset = merged[-1][1]
            gap_ms = (onset - previous_offset) * 1000.0 / v.fs_hz
            if gap_ms <= cfg.merge_gap_ms and v.defined_mask[previous_offset:onset].all():
                merged[-1][1] = offset
                continue
        merged.append([onset, offset])

    records = []
    for onset, offset in merged:
        duration_ms = (offset - onset) * 1000.0 / v.fs_hz
        if duration_ms < cfg.min_duration_ms:
            continue
        amplitude = float(np.hypot(v.x_deg[offset] - v.x_deg[onset], v.y_deg[offset] - v.y_deg[onset]))
        records.append(SaccadeRecord(onset_index=int(onset), offset_index=int(offset),
                                     onset_ms=v.time_ms(onset), offset_ms=v.time_ms(offset),
                                     amplitude_deg=amplitude,
                                     peak_velocity_deg_s=float(np.nanmax(v.speed[onset:offset + 1])),
                                     duration_ms=duration_ms))
    logging.info(f"Detected {len(records)} saccades ({len(runs)} candidate runs, {len(merged)} after merging)")
    return records


def saccades_to_frame(records: List[SaccadeRecord]) -> pd.DataFrame:
    """Tidy table with the saccade CSV columns."""
    return pd.DataFrame([{column: getattr(record, column) for column in SACCADE_COLUMNS} for record in records],
                        columns=SACCADE_COLUMNS)


def saccades_from_frame(frame: pd.DataFrame) -> List[SaccadeRecord]:
    """
    Records read back from a saccade table.

    Sample indices are not part of the table and come back as -1.
    """
    missing = [column for column in SACCADE_COLUMNS if column not in frame.columns]
    if missing:
        raise RecordingFormatError(f"Saccade table is missing columns {missing}")
    values = frame[SACCADE_COLUMNS].apply(pd.to_numeric, errors="coerce")
    garbage = values.isna() & frame[SACCADE_COLUMNS].notna()
    if garbage.to_numpy().any():
        row, col = (int(i) for i in np.argwhere(garbage.to_numpy())[0])
        column = SACCADE_COLUMNS[col]
        raise RecordingFormatError(f"{column} value {frame[column].iloc[row]!r} is not a number", row=row)
    return [SaccadeRecord(onset_index=-1, offset_index=-1, **dict(zip(SACCADE_COLUMNS, map(float, row))))
            for row in values.itertuples(index=False)]
