from src.signal_pipeline.filters.butterworth import (
    BandSpec,
    BiquadCascade,
    FilterSpec,
    band_decompose,
    compensated_cutoff_hz,
    default_bands,
    design_butterworth,
    filtfilt,
    magnitude_phase_at,
)
from src.signal_pipeline.filters.conditions import ConditionProvider, SignalConditioner
from src.signal_pipeline.filters.heuristic import HeuristicLevel, apply_heuristic, extra_filter, std_filter
