from logger import logging

import io
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import BinaryIO, Callable, Dict, List, Optional, TextIO, Union

import numpy as np
import pandas as pd

from src.exceptions import FilterDesignError, RecordingFormatError

COLUMNS = ["t_ms", "x_deg", "y_deg"]
DEFAULT_SAMPLE_RATE_HZ = 1000.0
SPACING_TOLERANCE_MS = 1e-9


class Eye(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, value: Optional[str]) -> "Eye":
        if not value:
            return cls.UNKNOWN
        try:
            return cls(value.strip().lower())
        except ValueError:
            logging.warning(f"Unknown eye '{value}', stored as 'unknown'")
            return cls.UNKNOWN


def _readonly(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Recording:
    """
    A timestamped 2-D gaze position series in degrees at a fixed sample rate.

    Dropouts stay in place with valid=False so sample indices remain aligned
    with time. Arrays are copied and made read-only on construction.
    """

    t_ms: np.ndarray
    x_deg: np.ndarray
    y_deg: np.ndarray
    valid: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    subject_id: str = ""
    eye: Eye = Eye.UNKNOWN

    def __post_init__(self):
        object.__setattr__(self, "t_ms", _readonly(self.t_ms, float))
        object.__setattr__(self, "x_deg", _readonly(self.x_deg, float))
        object.__setattr__(self, "y_deg", _readonly(self.y_deg, float))
        object.__setattr__(self, "valid", _readonly(self.valid, bool))
        object.__setattr__(self, "eye", Eye.parse(self.eye) if not isinstance(self.eye, Eye) else self.eye)
        problem = _first_violation(self)
        if problem is not None:
            row, message = problem
            raise RecordingFormatError(message, row=row)

    def __len__(self) -> int:
        return int(self.t_ms.size)

    @property
    def period_ms(self) -> float:
        return 1000.0 / self.sample_rate_hz

    @classmethod
    def from_positions(cls, x_deg, y_deg=None, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
                       valid=None, t0_ms: float = 0.0, subject_id: str = "", eye: Eye = Eye.UNKNOWN) -> "Recording":
        """
        Build a recording on a uniform time base from position arrays.

        :param x_deg: Horizontal positions.
        :param y_deg: Vertical positions (zeros when omitted).
        :param valid: Validity mask; defaults to finiteness of both channels.
        """
        x = np.asarray(x_deg, dtype=float)
        y = np.zeros_like(x) if y_deg is None else np.asarray(y_deg, dtype=float)
        if valid is None:
            valid = np.isfinite(x) & np.isfinite(y)
        t = t0_ms + np.arange(x.size) * (1000.0 / sample_rate_hz)
        return cls(t_ms=t, x_deg=x, y_deg=y, valid=valid, sample_rate_hz=sample_rate_hz,
                   subject_id=subject_id, eye=eye)

    def with_positions(self, x_deg, y_deg) -> "Recording":
        """Copy of this recording with replaced position channels and the same validity."""
        return replace(self, x_deg=x_deg, y_deg=y_deg)


@dataclass(frozen=True)
class Span:
    """A run of valid samples inside a Recording."""

    start_index: int
    length: int

    @property
    def stop_index(self) -> int:
        return self.start_index + self.length

    @property
    def slice(self) -> slice:
        return slice(self.start_index, self.stop_index)


@dataclass(frozen=True)
class FilterKind:
    """
    One of the filter conditions: none, std, extra, zero-phase low-pass or band.

    Use the class constructors rather than building instances by hand.
    """

    name: str
    cutoff_hz: Optional[float] = None
    low_hz: Optional[float] = None
    high_hz: Optional[float] = None
    order: Optional[int] = None

    NAMES = ("none", "std", "extra", "zero_phase_lowpass", "band")

    @classmethod
    def none(cls) -> "FilterKind":
        return cls("none")

    @classmethod
    def std(cls) -> "FilterKind":
        return cls("std")

    @classmethod
    def extra(cls) -> "FilterKind":
        return cls("extra")

    @classmethod
    def zero_phase_lowpass(cls, cutoff_hz: float, order: int = 7) -> "FilterKind":
        return cls("zero_phase_lowpass", cutoff_hz=float(cutoff_hz), order=int(order))

    @classmethod
    def band(cls, low_hz: float, high_hz: float, order: int = 7) -> "FilterKind":
        return cls("band", low_hz=float(low_hz), high_hz=float(high_hz), order=int(order))

    def validate(self, sample_rate_hz: float) -> "FilterKind":
        """Check edge frequencies and order against a sample rate; returns self."""
        if self.name not in self.NAMES:
            raise FilterDesignError(f"Unknown filter kind '{self.name}'")
        nyquist = sample_rate_hz / 2.0
        if self.name == "zero_phase_lowpass":
            edges = [self.cutoff_hz]
        elif self.name == "band":
            edges = [self.low_hz, self.high_hz]
            if not self.low_hz < self.high_hz:
                raise FilterDesignError(f"Band edges must satisfy low < high, got {self.low_hz}..{self.high_hz} Hz")
        else:
            return self
        for edge in edges:
            if edge is None or not 0.0 < edge < nyquist:
                raise FilterDesignError(f"Edge frequency {edge} Hz outside (0, {nyquist}) Hz")
        if self.order is None or self.order < 1:
            raise FilterDesignError(f"Filter order must be >= 1, got {self.order}")
        return self


def _first_violation(rec: Recording):
    """Return (row, message) for the first invariant violation, or None."""
    n = rec.t_ms.size
    if n < 1:
        return None, "recording has no samples"
    for name in ("x_deg", "y_deg", "valid"):
        if getattr(rec, name).size != n:
            return None, f"{name} has {getattr(rec, name).size} samples, t_ms has {n}"
    if not (math.isfinite(rec.sample_rate_hz) and rec.sample_rate_hz > 0):
        return None, f"sample_rate_hz must be positive, got {rec.sample_rate_hz}"
    if not np.all(np.isfinite(rec.t_ms)):
        row = int(np.flatnonzero(~np.isfinite(rec.t_ms))[0])
        return row, "timestamp is not a finite number"
    dt = np.diff(rec.t_ms)
    backwards = np.flatnonzero(dt <= 0)
    if backwards.size:
        row = int(backwards[0]) + 1
        return row, f"timestamps not strictly increasing ({rec.t_ms[row - 1]} -> {rec.t_ms[row]} ms)"
    period = 1000.0 / rec.sample_rate_hz
    tolerance = SPACING_TOLERANCE_MS + 4 * np.finfo(float).eps * np.abs(rec.t_ms[1:])
    uneven = np.flatnonzero(np.abs(dt - period) > tolerance)
    if uneven.size:
        row = int(uneven[0]) + 1
        return row, f"sample spacing {dt[row - 1]} ms differs from {period} ms at {rec.sample_rate_hz} Hz"
    bad = rec.valid & ~(np.isfinite(rec.x_deg) & np.isfinite(rec.y_deg))
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        return row, "valid sample holds a non-finite position"
    return None


def _parse_metadata(lines: List[str]):
    meta: Dict[str, str] = {}
    index = 0
    while index < len(lines):
        line = lines[index].strip()
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
        elif line:
            break
        index += 1
    return meta, index


def _numeric_column(frame: pd.DataFrame, column: str, path: Optional[str]) -> np.ndarray:
    text = frame[column].fillna("").astype(str).str.strip()
    values = pd.to_numeric(text.where(text != "", np.nan), errors="coerce")
    garbage = (text != "") & values.isna() & ~text.str.lower().isin(["nan", "+nan", "-nan"])
    if garbage.any():
        row = int(np.flatnonzero(garbage.to_numpy())[0])
        raise RecordingFormatError(f"{column} value {text.iloc[row]!r} is not a number", row=row, path=path)
    return values.to_numpy(dtype=float)


def load_recording(source: Union[BinaryIO, TextIO, bytes, str], format: str = "csv",
                   path: Optional[str] = None,
                   default_sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ) -> Recording:
    """
    Load a recording from a byte stream.

    :param source: Binary (or text) stream holding the CSV recording.
    :param format: Only "csv" is supported.
    :param path: File name used in error messages.
    :param default_sample_rate_hz: Rate used when the file carries no sample_rate_hz metadata.
    :return: Validated Recording; empty or non-finite positions become valid=False.
    """
    if format != "csv":
        raise RecordingFormatError(f"Unsupported recording format: {format}", path=path)
    raw = source.read() if hasattr(source, "read") else source
    try:
        text = raw.decode("utf-8-sig") if isinstance(raw, (bytes, bytearray)) else str(raw)
    except UnicodeDecodeError as exc:
        raise RecordingFormatError(f"not UTF-8 text (byte {exc.start}: {exc.reason})", path=path) from exc
    lines = text.splitlines()

    meta, header_index = _parse_metadata(lines)
    if header_index >= len(lines):
        raise RecordingFormatError("missing header line 't_ms,x_deg,y_deg'", path=path)
    header = [name.strip() for name in lines[header_index].split(",")]
    if header != COLUMNS:
        raise RecordingFormatError(
            f"malformed header {lines[header_index]!r}; expected '{','.join(COLUMNS)}'", path=path)

    rows = [line for line in lines[header_index + 1:] if line.strip()]
    if not rows:
        raise RecordingFormatError("recording has no samples", path=path)
    widths = np.array([row.count(",") + 1 for row in rows])
    ragged = np.flatnonzero(widths != len(COLUMNS))
    if ragged.size:
        row = int(ragged[0])
        raise RecordingFormatError(f"row has {widths[row]} fields, expected {len(COLUMNS)}", row=row, path=path)
    body = "\n".join(rows)
    try:
        frame = pd.read_csv(io.StringIO(body), header=None, names=COLUMNS, index_col=False, dtype=str,
                            keep_default_na=False, skip_blank_lines=True)
    except pd.errors.ParserError as exc:
        raise RecordingFormatError(f"cannot parse rows: {exc}", path=path) from exc

    t_ms = _numeric_column(frame, "t_ms", path)
    missing_t = np.flatnonzero(~np.isfinite(t_ms))
    if missing_t.size:
        raise RecordingFormatError("missing or non-finite timestamp", row=int(missing_t[0]), path=path)
    x_deg = _numeric_column(frame, "x_deg", path)
    y_deg = _numeric_column(frame, "y_deg", path)
    valid = np.isfinite(x_deg) & np.isfinite(y_deg)

    try:
        sample_rate_hz = float(meta.get("sample_rate_hz", default_sample_rate_hz))
    except ValueError:
        raise RecordingFormatError(f"sample_rate_hz metadata {meta['sample_rate_hz']!r} is not a number", path=path)

    try:
        recording = Recording(t_ms=t_ms, x_deg=x_deg, y_deg=y_deg, valid=valid,
                              sample_rate_hz=sample_rate_hz, subject_id=meta.get("subject_id", ""),
                              eye=Eye.parse(meta.get("eye")))
    except RecordingFormatError as exc:
        if path is not None and exc.path is None:
            raise RecordingFormatError(exc.message, row=exc.row, path=path) from exc
        raise
    logging.info(f"Loaded recording {path or '<stream>'}: {len(recording)} samples, "
                 f"{int((~valid).sum())} invalid, {sample_rate_hz} Hz")
    return recording


def save_recording(rec: Recording, stream: TextIO):
    """
    Write a recording in the CSV contract read by load_recording.

    NaN positions are written as empty fields.
    """
    stream.write(f"# subject_id={rec.subject_id}\n")
    stream.write(f"# eye={rec.eye.value}\n")
    stream.write(f"# sample_rate_hz={float(rec.sample_rate_hz)!r}\n")
    frame = pd.DataFrame({"t_ms": rec.t_ms, "x_deg": rec.x_deg, "y_deg": rec.y_deg})
    frame.to_csv(stream, index=False, na_rep="", lineterminator="\n")


def valid_runs(mask: np.ndarray, min_length: int = 1) -> List[Span]:
    """Maximal runs of True in mask with length >= min_length, in order."""
    if min_length < 1:
        raise ValueError(f"min_length must be >= 1, got {min_length}")
    padded = np.concatenate(([0], np.asarray(mask, dtype=np.int8), [0]))
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return [Span(int(start), int(stop - start)) for start, stop in zip(starts, stops)
            if stop - start >= min_length]


def contiguous_valid_spans(rec: Recording, min_length: int = 1) -> List[Span]:
    """
    Maximal runs of valid samples, each at least min_length long.

    :param rec: Recording to scan.
    :param min_length: Minimum run length (>= 1).
    :return: Disjoint spans sorted by start index; may be empty.
    """
    spans = valid_runs(rec.valid, min_length)
    logging.debug(f"Found {len(spans)} valid spans with min_length={min_length}")
    return spans


def apply_per_span(rec: Recording, fn: Callable[[np.ndarray], np.ndarray], min_length: int = 1,
                   label: str = "filter") -> Recording:
    """
    Apply fn to both position channels of every valid span.

    Spans shorter than min_length pass through unchanged with a warning;
    invalid samples are never touched.

    :param rec: Source recording.
    :param fn: Array -> array of the same length.
    :param min_length: Shortest span fn accepts.
    :param label: Name used in log messages.
    :return: New Recording with filtered positions.
    """
    x = rec.x_deg.copy()
    y = rec.y_deg.copy()
    spans = contiguous_valid_spans(rec)
    skipped = 0
    for span in spans:
        if span.length < min_length:
            skipped += 1
            logging.warning(f"Span at sample {span.start_index} ({span.length} samples) is too short "
                            f"for {label} (needs {min_length}); passed through unchanged")
            continue
        x[span.slice] = fn(x[span.slice])
        y[span.slice] = fn(y[span.slice])
    logging.info(f"Applied {label} to {len(spans) - skipped} of {len(spans)} spans")
    return rec.with_positions(x, y)
