from src.synth.generators import (
    NoiseKind,
    NoiseModel,
    SaccadeProfile,
    gen_noise,
    gen_noise_with_spikes,
    gen_saccade_recording,
    gen_sine,
)
from src.synth.scenarios import SCENARIOS, build_scenario
