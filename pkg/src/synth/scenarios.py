from logger import logging

import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.exceptions import ConfigError
from src.signal_pipeline.ingestion.recording import Recording
from src.synth.generators import NoiseKind, NoiseModel, SaccadeProfile, gen_noise, gen_saccade_recording

FS_HZ = 1000.0

# main-sequence constants for the synthetic clusters
SMALL_SLOPE = 0.673
LARGE_SLOPE = 0.438
SMALL_INTERCEPT = math.log(100.0)
SPLIT_AMPLITUDE_DEG = 4.0
LARGE_INTERCEPT = SMALL_INTERCEPT + (SMALL_SLOPE - LARGE_SLOPE) * math.log(SPLIT_AMPLITUDE_DEG)

ScenarioResult = Tuple[Recording, Optional[pd.DataFrame]]


def main_sequence_velocity(amplitude_deg: float) -> float:
    """Peak velocity on the synthetic main sequence (continuous at the 4 deg split)."""
    ln_amp = math.log(abs(amplitude_deg))
    if abs(amplitude_deg) <= SPLIT_AMPLITUDE_DEG:
        return math.exp(SMALL_SLOPE * ln_amp + SMALL_INTERCEPT)
    return math.exp(LARGE_SLOPE * ln_amp + LARGE_INTERCEPT)


def main_sequence_profile(amplitude_deg: float, start_ms: float, direction_deg: float = 0.0,
                          velocity_deg_s: Optional[float] = None) -> SaccadeProfile:
    """Raised-cosine saccade whose analytic peak velocity lies on the synthetic main sequence."""
    velocity = velocity_deg_s or main_sequence_velocity(amplitude_deg)
    duration_ms = 1000.0 * math.pi * abs(amplitude_deg) / (2.0 * velocity)
    return SaccadeProfile(amplitude_deg=amplitude_deg, duration_ms=duration_ms, start_ms=start_ms,
                          direction_deg=direction_deg)


def saccade_train(amplitudes, gap_ms: float = 300.0, lead_ms: float = 500.0, jitter=None) -> List[SaccadeProfile]:
    """
    Saccades one after another, alternating direction so the gaze stays near the centre.

    :param amplitudes: Unsigned amplitudes in degrees.
    :param gap_ms: Fixation time between saccades.
    :param lead_ms: Fixation before the first saccade.
    :param jitter: Optional multiplicative peak-velocity factors, one per saccade.
    """
    profiles = []
    start = lead_ms
    for index, amplitude in enumerate(amplitudes):
        direction = 0.0 if index % 2 == 0 else 180.0
        velocity = main_sequence_velocity(amplitude)
        if jitter is not None:
            velocity *= float(jitter[index])
        profile = main_sequence_profile(float(amplitude), start, direction, velocity)
        profiles.append(profile)
        start = profile.end_ms + gap_ms
    return profiles


def _samples_for(profiles: List[SaccadeProfile], tail_ms: float = 500.0) -> int:
    return int(math.ceil((profiles[-1].end_ms + tail_ms) * FS_HZ / 1000.0))


def fixation(seed: int = 0, seconds: float = 30.0, sigma_deg: float = 0.01) -> ScenarioResult:
    """Still fixation with white measurement noise."""
    n = int(seconds * FS_HZ)
    model = NoiseModel(NoiseKind.WHITE_GAUSSIAN, sigma_deg=sigma_deg, seed=seed)
    rec = Recording.from_positions(gen_noise(model, n, FS_HZ, 0), gen_noise(model, n, FS_HZ, 1),
                                   sample_rate_hz=FS_HZ, subject_id="synthetic")
    return rec, None


def _spiky(kind: NoiseKind, seed: int, seconds: float) -> ScenarioResult:
    # sized so spikes stay below the 25 deg/s veto and every block is kept
    n = int(seconds * FS_HZ)
    model = NoiseModel(kind, sigma_deg=0.0015, spike_rate_per_s=10.0, spike_amplitude_deg=0.045, seed=seed)
    rec = Recording.from_positions(gen_noise(model, n, FS_HZ, 0), gen_noise(model, n, FS_HZ, 1),
                                   sample_rate_hz=FS_HZ, subject_id="synthetic")
    return rec, None


def spikes(seed: int = 0, seconds: float = 56.0) -> ScenarioResult:
    """White noise plus one-sample spikes."""
    return _spiky(NoiseKind.WHITE_PLUS_ONE_SAMPLE_SPIKES, seed, seconds)


def spikes2(seed: int = 0, seconds: float = 56.0) -> ScenarioResult:
    """White noise plus two-sample spikes."""
    return _spiky(NoiseKind.WHITE_PLUS_TWO_SAMPLE_SPIKES, seed, seconds)


def saccades(seed: int = 0, count: int = 40, sigma_deg: float = 0.01) -> ScenarioResult:
    """Saccades of 5 to 30 deg on the synthetic main sequence, with truth."""
    rng = np.random.default_rng([seed, 2])
    profiles = saccade_train(rng.uniform(5.0, 30.0, size=count))
    noise = NoiseModel(NoiseKind.WHITE_GAUSSIAN, sigma_deg=sigma_deg, seed=seed)
    return gen_saccade_recording(profiles, noise, _samples_for(profiles), FS_HZ)


def mainseq(seed: int = 0, count: int = 120, sigma_deg: float = 0.01) -> ScenarioResult:
    """Log-uniform 0.5 to 30 deg saccades with a main-sequence slope break at 4 deg, with truth."""
    rng = np.random.default_rng([seed, 3])
    amplitudes = np.exp(rng.uniform(math.log(0.5), math.log(30.0), size=count))
    jitter = np.exp(rng.normal(0.0, 0.03, size=count))
    profiles = saccade_train(amplitudes, jitter=jitter)
    noise = NoiseModel(NoiseKind.WHITE_GAUSSIAN, sigma_deg=sigma_deg, seed=seed)
    return gen_saccade_recording(profiles, noise, _samples_for(profiles), FS_HZ)


SCENARIOS: Dict[str, Callable[..., ScenarioResult]] = {
    "fixation": fixation,
    "spikes": spikes,
    "spikes2": spikes2,
    "saccades": saccades,
    "mainseq": mainseq,
}


def build_scenario(name: str, seed: int = 0) -> ScenarioResult:
    """
    Build a named scenario.

    :param name: One of SCENARIOS.
    :param seed: Seed for every random draw.
    :return: (recording, truth table or None).
    """
    if name not in SCENARIOS:
        raise ConfigError(f"Unknown scenario '{name}', expected one of {sorted(SCENARIOS)}")
    logging.info(f"Building scenario '{name}' with seed {seed}")
    return SCENARIOS[name](seed=seed)
