from logger import logging

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.analysis_pipeline.kinematics.saccades import SACCADE_COLUMNS
from src.exceptions import SignalError
from src.signal_pipeline.ingestion.recording import Recording


class NoiseKind(str, Enum):
    WHITE_GAUSSIAN = "white_gaussian"
    WHITE_PLUS_ONE_SAMPLE_SPIKES = "white_plus_one_sample_spikes"
    WHITE_PLUS_TWO_SAMPLE_SPIKES = "white_plus_two_sample_spikes"


@dataclass(frozen=True)
class NoiseModel:
    """
    Seeded measurement noise: white Gaussian, optionally with spikes.

    Streams come from numpy's PCG64 generator seeded with the sequence
    (seed, channel), so the same model always yields the same samples.
    """

    kind: NoiseKind = NoiseKind.WHITE_GAUSSIAN
    sigma_deg: float = 0.0
    spike_rate_per_s: float = 0.0
    spike_amplitude_deg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.sigma_deg < 0 or self.spike_rate_per_s < 0:
            raise SignalError(f"Noise sigma and spike rate must be >= 0, got {self.sigma_deg}, "
                              f"{self.spike_rate_per_s}")

    @property
    def spike_width(self) -> int:
        return {NoiseKind.WHITE_GAUSSIAN: 0, NoiseKind.WHITE_PLUS_ONE_SAMPLE_SPIKES: 1,
                NoiseKind.WHITE_PLUS_TWO_SAMPLE_SPIKES: 2}[self.kind]


@dataclass(frozen=True)
class SaccadeProfile:
    """Raised-cosine position step x(t) = A/2 * (1 - cos(pi t / D)) starting at start_ms."""

    amplitude_deg: float
    duration_ms: float
    start_ms: float
    shape: str = "raised_cosine"
    direction_deg: float = 0.0

    def __post_init__(self):
        if self.amplitude_deg == 0 or not math.isfinite(self.amplitude_deg):
            raise SignalError(f"Saccade amplitude must be finite and non-zero, got {self.amplitude_deg}")
        if not self.duration_ms > 0:
            raise SignalError(f"Saccade duration must be positive, got {self.duration_ms}")
        if self.shape != "raised_cosine":
            raise SignalError(f"Unsupported saccade shape: {self.shape}")

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.duration_ms

    @property
    def peak_velocity_deg_s(self) -> float:
        return math.pi * abs(self.amplitude_deg) / (2.0 * self.duration_ms / 1000.0)

    def displacement(self, t_ms: np.ndarray) -> np.ndarray:
        phase = np.clip((t_ms - self.start_ms) / self.duration_ms, 0.0, 1.0)
        return self.amplitude_deg / 2.0 * (1.0 - np.cos(np.pi * phase))


def gen_sine(freq_hz: float, amplitude_deg: float, phase_rad: float, n: int, fs_hz: float) -> np.ndarray:
    """x[i] = A * sin(2 pi f i / fs + phase), for 0 <= f < fs/2."""
    if not 0.0 <= freq_hz < fs_hz / 2.0:
        raise SignalError(f"Sine frequency {freq_hz} Hz outside [0, {fs_hz / 2.0}) Hz")
    return amplitude_deg * np.sin(2.0 * np.pi * freq_hz * np.arange(n) / fs_hz + phase_rad)


def _spread_positions(rng: np.random.Generator, count: int, first: int, last: int, spacing: int) -> np.ndarray:
    """count sorted positions in [first, last] at least spacing apart."""
    room = (last - first + 1) - (count - 1) * (spacing - 1)
    if count > 0 and room < count:
        raise SignalError(f"Cannot place {count} spikes {spacing} samples apart in {last - first + 1} samples")
    picks = np.sort(rng.choice(room, size=count, replace=False)) if count else np.zeros(0, dtype=int)
    return first + picks + np.arange(count) * (spacing - 1)


def gen_noise_with_spikes(model: NoiseModel, n: int, fs_hz: float, channel: int = 0
                          ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Noise stream plus the first sample index of every injected spike.

    One-sample spikes keep at least one clean sample between them; two-sample
    spikes keep at least two. No spike touches the first or last sample.

    :param model: Noise model.
    :param n: Number of samples.
    :param fs_hz: Sample rate in Hz.
    :param channel: Independent stream index (0 for x, 1 for y).
    :return: (samples, spike start indices).
    """
    rng = np.random.default_rng([model.seed, channel])
    x = model.sigma_deg * rng.standard_normal(n)
    width = model.spike_width
    if width == 0 or model.spike_rate_per_s == 0:
        return x, np.zeros(0, dtype=int)

    count = int(round(model.spike_rate_per_s * n / fs_hz))
    starts = _spread_positions(rng, count, 1, n - 1 - width, 2 * width)
    signs = rng.choice([-1.0, 1.0], size=count)
    for offset in range(width):
        x[starts + offset] += signs * model.spike_amplitude_deg
    logging.debug(f"Injected {count} {width}-sample spikes into {n} samples")
    return x, starts


def gen_noise(model: NoiseModel, n: int, fs_hz: float, channel: int = 0) -> np.ndarray:
    """Seeded noise stream; see gen_noise_with_spikes."""
    return gen_noise_with_spikes(model, n, fs_hz, channel)[0]


def _check_profiles(profiles: Sequence[SaccadeProfile], n: int, fs_hz: float) -> List[SaccadeProfile]:
    ordered = sorted(profiles, key=lambda profile: profile.start_ms)
    length_ms = n * 1000.0 / fs_hz
    for profile in ordered:
        if profile.start_ms < 0 or profile.end_ms > length_ms:
            raise SignalError(f"Saccade at {profile.start_ms} ms ({profile.duration_ms} ms) outside "
                              f"[0, {length_ms}] ms")
    for previous, current in zip(ordered, ordered[1:]):
        if current.start_ms < previous.end_ms:
            raise SignalError(f"Saccades at {previous.start_ms} ms and {current.start_ms} ms overlap")
    return ordered


def gen_saccade_recording(profiles: Sequence[SaccadeProfile], noise: NoiseModel, n: int,
                          fs_hz: float = 1000.0) -> Tuple[Recording, pd.DataFrame]:
    """
    Recording made of raised-cosine saccades on a noisy fixation baseline.

    :param profiles: Non-overlapping saccades inside [0, n / fs].
    :param noise: Noise added independently to x and y.
    :param n: Number of samples.
    :param fs_hz: Sample rate in Hz.
    :return: (recording, ground truth with the saccade table columns).
    """
    ordered = _check_profiles(profiles, n, fs_hz)
    t_ms = np.arange(n) * (1000.0 / fs_hz)
    x = gen_noise(noise, n, fs_hz, channel=0)
    y = gen_noise(noise, n, fs_hz, channel=1)
    truth = []
    for profile in ordered:
        step = profile.displacement(t_ms)
        angle = math.radians(profile.direction_deg)
        x += step * math.cos(angle)
        y += step * math.sin(angle)
        truth.append({"onset_ms": profile.start_ms, "offset_ms": profile.end_ms,
                      "amplitude_deg": abs(profile.amplitude_deg),
                      "peak_velocity_deg_s": profile.peak_velocity_deg_s,
                      "duration_ms": profile.duration_ms})
    logging.info(f"Generated {n} samples with {len(ordered)} saccades (noise {noise.kind.value}, seed {noise.seed})")
    recording = Recording.from_positions(x, y, sample_rate_hz=fs_hz, subject_id="synthetic")
    return recording, pd.DataFrame(truth, columns=SACCADE_COLUMNS)
