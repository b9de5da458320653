from logger import logging

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.exceptions import SignalError
from src.signal_pipeline.ingestion.recording import Recording

HALF_WIDTH = 3


@dataclass(frozen=True)
class VelocitySeries:
    """
    Six-point velocity of a position series.

    Entries outside defined_mask are NaN. Positions and timestamps are kept
    alongside so events can be measured against them.
    """

    vx: np.ndarray
    vy: np.ndarray
    speed: np.ndarray
    defined_mask: np.ndarray
    x_deg: np.ndarray
    y_deg: np.ndarray
    fs_hz: float
    t_ms: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.speed.size)

    def time_ms(self, index: int) -> float:
        if self.t_ms is not None:
            return float(self.t_ms[index])
        return index * 1000.0 / self.fs_hz


def velocity_six_point(x, y, fs_hz: float, valid=None, t_ms=None) -> VelocitySeries:
    """
    v[i] = (p[i + 3] - p[i - 3]) * fs / 6 for each component.

    :param x: Horizontal positions in degrees.
    :param y: Vertical positions in degrees.
    :param fs_hz: Sample rate in Hz.
    :param valid: Optional validity mask; a velocity is defined only when all
        seven samples i-3..i+3 are valid.
    :param t_ms: Optional timestamps carried into the result.
    :return: VelocitySeries in deg/s.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    width = 2 * HALF_WIDTH + 1
    if x.size < width or x.size != y.size:
        raise SignalError(f"Six-point velocity needs two equal arrays of at least {width} samples, "
                          f"got {x.size} and {y.size}")

    defined = np.zeros(x.size, dtype=bool)
    defined[HALF_WIDTH:-HALF_WIDTH] = True
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        defined[HALF_WIDTH:-HALF_WIDTH] &= sliding_window_view(valid, width).all(axis=1)

    scale = fs_hz / (2 * HALF_WIDTH)
    vx = np.full(x.size, np.nan)
    vy = np.full(y.size, np.nan)
    vx[HALF_WIDTH:-HALF_WIDTH] = (x[2 * HALF_WIDTH:] - x[:-2 * HALF_WIDTH]) * scale
    vy[HALF_WIDTH:-HALF_WIDTH] = (y[2 * HALF_WIDTH:] - y[:-2 * HALF_WIDTH]) * scale
    vx[~defined] = np.nan
    vy[~defined] = np.nan
    return VelocitySeries(vx=vx, vy=vy, speed=np.hypot(vx, vy), defined_mask=defined,
                          x_deg=x, y_deg=y, fs_hz=float(fs_hz), t_ms=t_ms)


def recording_velocity(rec: Recording) -> VelocitySeries:
    """Six-point velocity of a whole recording; edges of valid spans stay undefined."""
    if len(rec) < 2 * HALF_WIDTH + 1:
        logging.warning(f"Recording of {len(rec)} samples is too short for six-point velocity")
        nan = np.full(len(rec), np.nan)
        return VelocitySeries(vx=nan, vy=nan.copy(), speed=nan.copy(), defined_mask=np.zeros(len(rec), dtype=bool),
                              x_deg=rec.x_deg, y_deg=rec.y_deg, fs_hz=rec.sample_rate_hz, t_ms=rec.t_ms)
    return velocity_six_point(rec.x_deg, rec.y_deg, rec.sample_rate_hz, valid=rec.valid, t_ms=rec.t_ms)
