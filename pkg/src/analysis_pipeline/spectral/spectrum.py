from logger import logging

from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from scipy.signal import windows

from src.exceptions import GridMismatchError, SignalError
from utils import wrap_phase

COHERENT_GAIN = 0.5
DEFAULT_SEGMENT_LENGTH = 256


@dataclass(frozen=True)
class Spectrum:
    """
    Single-sided amplitude and phase spectrum of one or more averaged segments.

    Amplitudes are in degrees and window-corrected so a bin-centred unit sine
    reads 1.0; bin k sits at k * fs / N.
    """

    freqs_hz: np.ndarray
    amplitude: np.ndarray
    phase_rad: np.ndarray
    n_segments_averaged: int
    segment_length: int
    fs_hz: float

    def __post_init__(self):
        for name in ("freqs_hz", "amplitude", "phase_rad"):
            array = np.array(getattr(self, name), dtype=float, copy=True)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        bins = self.segment_length // 2 + 1
        if not self.freqs_hz.size == self.amplitude.size == self.phase_rad.size == bins:
            raise GridMismatchError(f"Spectrum arrays must all hold {bins} bins for N={self.segment_length}")

    def same_grid(self, other: "Spectrum") -> bool:
        return (self.segment_length == other.segment_length and self.fs_hz == other.fs_hz
                and np.array_equal(self.freqs_hz, other.freqs_hz))


def frequency_grid(segment_length: int, fs_hz: float) -> np.ndarray:
    return np.arange(segment_length // 2 + 1) * (fs_hz / segment_length)


def detrend_poly2(x) -> np.ndarray:
    """
    Residuals of a least-squares quadratic fit over the sample index.

    The fit is done on a centred, scaled index, so the residuals have zero mean.
    """
    values = np.asarray(x, dtype=float)
    if values.ndim != 1 or values.size < 3:
        raise SignalError(f"detrend_poly2 needs at least 3 samples, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise SignalError("detrend_poly2 got non-finite samples")
    index = np.arange(values.size, dtype=float)
    trend = np.polynomial.Polynomial.fit(index, values, 2)
    residual = values - trend(index)
    return residual - residual.mean()


def hann_window(n: int) -> np.ndarray:
    """Symmetric Hann window, w[k] = 0.5 * (1 - cos(2 pi k / (n - 1)))."""
    if int(n) != n or n < 2:
        raise SignalError(f"Hann window length must be an integer >= 2, got {n}")
    return windows.hann(int(n), sym=True)


def _check_segment_length(segment_length: int):
    if segment_length < 4 or segment_length & (segment_length - 1):
        raise SignalError(f"Segment length must be a power of two >= 4, got {segment_length}")


def segment_spectrum(x, fs_hz: float, segment_length: int = DEFAULT_SEGMENT_LENGTH) -> Spectrum:
    """
    Amplitude and phase spectrum of one segment.

    Detrend with a quadratic, apply a Hann window, FFT, then scale to a
    single-sided amplitude 2|X[k]| / (N * 0.5); the DC and Nyquist bins are
    not doubled.

    :param x: Exactly segment_length finite samples.
    :param fs_hz: Sample rate in Hz.
    :param segment_length: FFT length N, a power of two.
    :return: Spectrum with n_segments_averaged = 1.
    """
    _check_segment_length(segment_length)
    values = np.asarray(x, dtype=float)
    if values.ndim != 1 or values.size != segment_length:
        raise SignalError(f"Segment must hold exactly {segment_length} samples, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise SignalError("Segment contains non-finite samples")

    tapered = detrend_poly2(values) * hann_window(segment_length)
    spectrum = np.fft.rfft(tapered)
    scale = np.full(spectrum.size, 2.0 / (segment_length * COHERENT_GAIN))
    scale[0] = scale[-1] = 1.0 / (segment_length * COHERENT_GAIN)
    return Spectrum(freqs_hz=frequency_grid(segment_length, fs_hz), amplitude=np.abs(spectrum) * scale,
                    phase_rad=wrap_phase(np.angle(spectrum)), n_segments_averaged=1,
                    segment_length=segment_length, fs_hz=float(fs_hz))


def average_spectra(spectra: Sequence[Spectrum], circular_phase: bool = False) -> Spectrum:
    """
    Average magnitude and phase spectra, weighted by their segment counts.

    Phases are averaged arithmetically as wrapped values; circular_phase
    switches to the angle of the mean unit phasor.
    """
    spectra = list(spectra)
    if not spectra:
        raise SignalError("average_spectra needs at least one spectrum")
    first = spectra[0]
    for index, other in enumerate(spectra[1:], start=1):
        if not first.same_grid(other):
            raise GridMismatchError(f"Spectrum {index} is on a different frequency grid than spectrum 0")

    counts = np.array([s.n_segments_averaged for s in spectra], dtype=float)
    weights = counts / counts.sum()
    amplitude = weights @ np.vstack([s.amplitude for s in spectra])
    phases = np.vstack([wrap_phase(s.phase_rad) for s in spectra])
    if circular_phase:
        phase = wrap_phase(np.angle(weights @ np.exp(1j * phases)))
    else:
        phase = weights @ phases
    return Spectrum(freqs_hz=first.freqs_hz, amplitude=amplitude, phase_rad=phase,
                    n_segments_averaged=int(counts.sum()), segment_length=first.segment_length,
                    fs_hz=first.fs_hz)


def mean_spectrum(segments: Iterable, fs_hz: float, segment_length: int = DEFAULT_SEGMENT_LENGTH,
                  circular_phase: bool = False) -> Spectrum:
    """Average of segment_spectrum over every segment."""
    spectra: List[Spectrum] = [segment_spectrum(segment, fs_hz, segment_length) for segment in segments]
    logging.info(f"Averaging {len(spectra)} segment spectra (N={segment_length}, fs={fs_hz} Hz)")
    return average_spectra(spectra, circular_phase=circular_phase)
