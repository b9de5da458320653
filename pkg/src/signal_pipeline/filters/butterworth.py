from logger import logging

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import signal

from src.exceptions import FilterDesignError, SignalError
from utils import wrap_phase

KINDS = ("lowpass", "highpass", "bandpass")
MAX_ORDER = 12


@dataclass(frozen=True)
class FilterSpec:
    """Design provenance of a Butterworth filter."""

    kind: str
    order: int
    edges_hz: Tuple[float, ...]
    fs_hz: float
    compensated: bool = False

    @property
    def pad_length(self) -> int:
        return 3 * (2 * self.order + 1)


@dataclass(frozen=True)
class BiquadCascade:
    """
    Second-order sections of a designed filter.

    Each row of sections is (b0, b1, b2, 1, a1, a2) with unit leading
    denominator; overall_gain multiplies the whole cascade.
    """

    sections: np.ndarray
    overall_gain: float
    design: FilterSpec

    def __post_init__(self):
        sections = np.array(self.sections, dtype=float, copy=True)
        sections.setflags(write=False)
        object.__setattr__(self, "sections", sections)

    @property
    def coefficients(self) -> List[Tuple[float, float, float, float, float]]:
        return [(s[0], s[1], s[2], s[4], s[5]) for s in self.sections]

    @property
    def sos(self) -> np.ndarray:
        """Sections with the overall gain folded into the first numerator."""
        sos = self.sections.copy()
        sos[0, :3] *= self.overall_gain
        return sos

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots([1.0, s[4], s[5]]) for s in self.sections])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))


@dataclass(frozen=True)
class BandSpec:
    """A frequency band; low_hz=0 means low-pass and high_hz=Nyquist means high-pass."""

    low_hz: float
    high_hz: float
    order: int = 7

    @property
    def label(self) -> str:
        return f"{self.low_hz:g}-{self.high_hz:g}"

    def validate(self, fs_hz: float) -> "BandSpec":
        if not 0.0 <= self.low_hz < self.high_hz <= fs_hz / 2.0:
            raise FilterDesignError(
                f"Band {self.label} Hz must satisfy 0 <= low < high <= {fs_hz / 2.0}")
        if self.low_hz == 0.0 and self.high_hz == fs_hz / 2.0:
            raise FilterDesignError(f"Band {self.label} Hz covers the whole spectrum")
        return self

    def design(self, fs_hz: float) -> "BiquadCascade":
        self.validate(fs_hz)
        if self.low_hz == 0.0:
            return design_butterworth("lowpass", self.order, [self.high_hz], fs_hz)
        if self.high_hz == fs_hz / 2.0:
            return design_butterworth("highpass", self.order, [self.low_hz], fs_hz)
        return design_butterworth("bandpass", self.order, [self.low_hz, self.high_hz], fs_hz)


def compensated_cutoff_hz(nominal_hz: float, order: int, fs_hz: float, kind: str = "lowpass") -> float:
    """
    Component cutoff at which the forward-backward composite is -3 dB at nominal_hz.

    Works in the pre-warped analog domain, where the composite magnitude is
    1/(1 + (W/Wc)^(2N)) for a low-pass (inverted ratio for a high-pass).

    :param nominal_hz: Frequency where the composite should sit at -3 dB.
    :param order: Butterworth order N.
    :param fs_hz: Sample rate.
    :param kind: "lowpass" or "highpass".
    :return: Cutoff to pass to the single-pass design.
    """
    if kind not in ("lowpass", "highpass"):
        raise FilterDesignError(f"Cutoff compensation applies to lowpass or highpass, not {kind}")
    if not 0.0 < nominal_hz < fs_hz / 2.0:
        raise FilterDesignError(f"Edge {nominal_hz} Hz outside (0, {fs_hz / 2.0}) Hz")
    warped = math.tan(math.pi * nominal_hz / fs_hz)
    factor = (math.sqrt(2.0) - 1.0) ** (1.0 / (2 * order))
    warped_cutoff = warped / factor if kind == "lowpass" else warped * factor
    return fs_hz / math.pi * math.atan(warped_cutoff)


def _check_design_inputs(kind: str, order: int, edges: Sequence[float], fs_hz: float):
    if kind not in KINDS:
        raise FilterDesignError(f"Unsupported filter kind '{kind}', expected one of {KINDS}")
    if not (math.isfinite(fs_hz) and fs_hz > 0):
        raise FilterDesignError(f"Sample rate must be positive, got {fs_hz}")
    if int(order) != order or not 1 <= order <= MAX_ORDER:
        raise FilterDesignError(f"Order must be an integer in [1, {MAX_ORDER}], got {order}")
    expected = 2 if kind == "bandpass" else 1
    if len(edges) != expected:
        raise FilterDesignError(f"{kind} needs {expected} edge frequencies, got {len(edges)}")
    nyquist = fs_hz / 2.0
    for edge in edges:
        if not (math.isfinite(edge) and 0.0 < edge < nyquist):
            raise FilterDesignError(f"Edge frequency {edge} Hz outside (0, {nyquist}) Hz")
    if kind == "bandpass" and not edges[0] < edges[1]:
        raise FilterDesignError(f"Band-pass edges must be increasing, got {edges[0]}, {edges[1]}")


def design_butterworth(kind: str, order: int, edges_hz: Sequence[float], fs_hz: float,
                       compensate_zero_phase: bool = False) -> BiquadCascade:
    """
    Design a digital Butterworth filter as second-order sections.

    The analog prototype is mapped with a pre-warped bilinear transform, so
    the single-pass magnitude at every design edge is -3.0103 dB.

    :param kind: "lowpass", "highpass" or "bandpass".
    :param order: Prototype order, 1 to 12.
    :param edges_hz: One edge (low/high-pass) or two (band-pass) in Hz.
    :param fs_hz: Sample rate in Hz.
    :param compensate_zero_phase: Move the edges so the forward-backward
        composite, not the single pass, is -3 dB at edges_hz.
    :return: Stable BiquadCascade.
    """
    edges = [float(edge) for edge in np.atleast_1d(edges_hz)]
    _check_design_inputs(kind, order, edges, fs_hz)
    order = int(order)

    if compensate_zero_phase:
        if kind == "bandpass":
            edges = [compensated_cutoff_hz(edges[0], order, fs_hz, "highpass"),
                     compensated_cutoff_hz(edges[1], order, fs_hz, "lowpass")]
        else:
            edges = [compensated_cutoff_hz(edges[0], order, fs_hz, kind)]
        logging.info(f"Compensated {kind} edges for zero-phase use: {edges} Hz")

    wn = edges if kind == "bandpass" else edges[0]
    zeros, poles, gain = signal.butter(order, wn, btype=kind, output="zpk", fs=fs_hz)
    if not np.all(np.isfinite(poles)) or np.any(np.abs(poles) >= 1.0):
        raise FilterDesignError(
            f"Unstable {kind} design: order {order}, edges {edges} Hz at {fs_hz} Hz")
    sections = signal.zpk2sos(zeros, poles, 1.0)

    spec = FilterSpec(kind=kind, order=order, edges_hz=tuple(edges), fs_hz=float(fs_hz),
                      compensated=bool(compensate_zero_phase))
    logging.debug(f"Designed {kind} Butterworth order {order} at {edges} Hz: {len(sections)} sections")
    return BiquadCascade(sections=sections, overall_gain=float(gain), design=spec)


def magnitude_phase_at(f: BiquadCascade, freqs_hz) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the cascade on the unit circle.

    :param f: Designed filter.
    :param freqs_hz: Frequencies in [0, fs/2].
    :return: (gain >= 0, phase in (-pi, pi]) arrays.
    """
    freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
    z_inv = np.exp(-2j * np.pi * freqs / f.design.fs_hz)
    response = np.full(freqs.shape, f.overall_gain, dtype=complex)
    for b0, b1, b2, _, a1, a2 in f.sections:
        response *= (b0 + z_inv * (b1 + z_inv * b2)) / (1.0 + z_inv * (a1 + z_inv * a2))
    return np.abs(response), wrap_phase(np.angle(response))


def filtfilt(f: BiquadCascade, x) -> np.ndarray:
    """
    Zero-phase forward-backward filtering.

    Odd-symmetric reflection padding of 3 * (2 * order + 1) samples is added
    at both ends and removed before returning.
    """
    values = np.asarray(x, dtype=float)
    padlen = f.design.pad_length
    if values.ndim != 1 or values.size <= padlen:
        raise SignalError(
            f"Signal of {values.size} samples too short for order-{f.design.order} "
            f"forward-backward filtering (needs more than {padlen})")
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise SignalError(f"filtfilt got a non-finite sample at index {bad}")
    return signal.sosfiltfilt(f.sos, values, padtype="odd", padlen=padlen)


def default_bands(edges_hz: Sequence[float] = (50, 75, 100, 300), fs_hz: float = 1000.0,
                  order: int = 7) -> List[BandSpec]:
    """
    Bands split at edges_hz: 0..e0, e0+1..e1, ..., e_last+1..Nyquist.

    The defaults give 0-50, 51-75, 76-100, 101-300 and 301-500 Hz at 1000 Hz.
    """
    edges = [float(edge) for edge in edges_hz]
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])):
        raise FilterDesignError(f"Band edges must be a non-empty increasing list, got {edges}")
    nyquist = fs_hz / 2.0
    bands = [BandSpec(0.0, edges[0], order)]
    bands += [BandSpec(low + 1.0, high, order) for low, high in zip(edges, edges[1:])]
    bands.append(BandSpec(edges[-1] + 1.0, nyquist, order))
    for band in bands:
        band.validate(fs_hz)
    return bands


def band_decompose(x, bands: Sequence[BandSpec], fs_hz: float) -> List[np.ndarray]:
    """
    One zero-phase filtered copy of x per band.

    :param x: Finite signal long enough for forward-backward filtering.
    :param bands: Bands to extract.
    :param fs_hz: Sample rate in Hz.
    :return: Arrays of len(x), in band order.
    """
    logging.info(f"Decomposing {np.size(x)} samples into bands {[band.label for band in bands]} Hz")
    return [filtfilt(band.design(fs_hz), x) for band in bands]
