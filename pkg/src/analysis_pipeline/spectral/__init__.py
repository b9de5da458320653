from src.analysis_pipeline.spectral.frequency_response import (
    FrequencyResponse,
    db_to_amplitude_ratio,
    db_to_power_ratio,
    estimate_frequency_response,
    gain_to_db,
)
from src.analysis_pipeline.spectral.spectrum import (
    Spectrum,
    average_spectra,
    detrend_poly2,
    frequency_grid,
    hann_window,
    mean_spectrum,
    segment_spectrum,
)
