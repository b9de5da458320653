from logger import logging

from dataclasses import dataclass

import numpy as np

from src.analysis_pipeline.spectral.spectrum import Spectrum
from src.exceptions import GridMismatchError
from utils import wrap_phase


@dataclass(frozen=True)
class FrequencyResponse:
    """
    Empirical filter response: per-bin ratio of filtered over unfiltered amplitude.

    undefined marks bins where the unfiltered amplitude is 0 but the filtered
    one is not; gain is +inf there. For a nonlinear filter the response holds
    only for the input it was measured on.
    """

    freqs_hz: np.ndarray
    gain: np.ndarray
    gain_db: np.ndarray
    phase_diff_rad: np.ndarray
    undefined: np.ndarray
    n_segments_averaged: int


def gain_to_db(gain) -> np.ndarray:
    """20 * log10(gain); a gain of 0 gives -inf."""
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.asarray(gain, dtype=float))


def db_to_amplitude_ratio(db) -> np.ndarray:
    """-6 dB -> ~0.5 of the amplitude."""
    return 10.0 ** (np.asarray(db, dtype=float) / 20.0)


def db_to_power_ratio(db) -> np.ndarray:
    """-19 dB -> ~1.3% of the power."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def estimate_frequency_response(unfiltered: Spectrum, filtered: Spectrum) -> FrequencyResponse:
    """
    Estimate a filter's frequency response as B / A.

    :param unfiltered: Averaged spectrum of the unfiltered segments (A).
    :param filtered: Averaged spectrum of the same segments after filtering (B).
    :return: FrequencyResponse on the shared grid.
    """
    if not unfiltered.same_grid(filtered):
        raise GridMismatchError("Filtered and unfiltered spectra are on different frequency grids")
    if unfiltered.n_segments_averaged != filtered.n_segments_averaged:
        raise GridMismatchError(
            f"Segment counts differ: unfiltered {unfiltered.n_segments_averaged}, "
            f"filtered {filtered.n_segments_averaged}")

    a, b = unfiltered.amplitude, filtered.amplitude
    undefined = (a == 0) & (b != 0)
    gain = np.zeros_like(a)
    nonzero = a != 0
    gain[nonzero] = b[nonzero] / a[nonzero]
    gain[undefined] = np.inf
    if np.any(undefined):
        logging.warning(f"Unfiltered amplitude is zero in {int(undefined.sum())} bins; gain set to inf there")

    return FrequencyResponse(freqs_hz=unfiltered.freqs_hz.copy(), gain=gain, gain_db=gain_to_db(gain),
                             phase_diff_rad=wrap_phase(filtered.phase_rad - unfiltered.phase_rad),
                             undefined=undefined, n_segments_averaged=unfiltered.n_segments_averaged)
