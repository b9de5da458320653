from logger import logging

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from src.analysis_pipeline.kinematics.segments import (
    SegmentConfig,
    extract_segments,
    select_fixation_blocks,
    split_blocks,
)
from src.analysis_pipeline.spectral.frequency_response import FrequencyResponse, estimate_frequency_response
from src.analysis_pipeline.spectral.spectrum import DEFAULT_SEGMENT_LENGTH, Spectrum, mean_spectrum
from src.exceptions import SignalError
from src.signal_pipeline.filters.conditions import ConditionProvider, SignalConditioner
from src.signal_pipeline.ingestion.recording import Recording, Span
from utils import max_workers


@dataclass(frozen=True)
class BlockSelection:
    """Fixation sub-segments chosen on one unfiltered recording."""

    recording: Recording
    segments: List[Span]


class FilterComparison:
    def __init__(self, provider: Optional[ConditionProvider] = None, segment_cfg: SegmentConfig = SegmentConfig(),
                 segment_length: int = DEFAULT_SEGMENT_LENGTH, circular_phase: bool = False,
                 workers: Optional[int] = None, compensate_zero_phase: bool = False):
        """
        Compare filter conditions on the same fixation segments.

        Segments are always chosen on the unfiltered recordings; each filtered
        variant is filtered over whole valid spans and then cut at the same
        sample positions.

        :param provider: Condition registry; the default configuration when None.
        :param segment_cfg: Block selection and veto settings.
        :param segment_length: FFT length.
        :param circular_phase: Average phases as unit phasors.
        :param workers: Thread cap for per-recording filtering.
        :param compensate_zero_phase: Compensate low-pass cutoffs of registry conditions.
        """
        self.provider = provider or ConditionProvider()
        self.segment_cfg = segment_cfg
        self.segment_length = segment_length
        self.circular_phase = circular_phase
        self.workers = workers or max_workers()
        self.compensate_zero_phase = compensate_zero_phase
        if segment_cfg.sub_length != segment_length:
            raise SignalError(f"Sub-segment length {segment_cfg.sub_length} differs from FFT length {segment_length}")

    def conditioner(self, condition: Union[str, SignalConditioner]) -> SignalConditioner:
        if isinstance(condition, SignalConditioner):
            return condition
        return self.provider.switch_condition(condition, self.compensate_zero_phase)

    def select_blocks(self, recordings: Sequence[Recording]) -> List[BlockSelection]:
        """Run the block selection and veto on every unfiltered recording."""
        rates = {rec.sample_rate_hz for rec in recordings}
        if len(rates) > 1:
            raise SignalError(f"Recordings have different sample rates {sorted(rates)}; spectra cannot be pooled")
        selections = [BlockSelection(rec, split_blocks(select_fixation_blocks(rec, self.segment_cfg),
                                                       self.segment_cfg))
                      for rec in recordings]
        total = sum(len(selection.segments) for selection in selections)
        logging.info(f"Selected {total} segments of {self.segment_length} samples from {len(recordings)} recordings")
        if total == 0:
            raise SignalError("No fixation segments survived the speed veto")
        return selections

    def condition_signal(self, recording: Recording, condition: Union[str, SignalConditioner]) -> Recording:
        return self.conditioner(condition).apply(recording)

    def condition_segments(self, selections: Sequence[BlockSelection],
                           condition: Union[str, SignalConditioner]) -> List[np.ndarray]:
        """Segments of every recording after applying condition, in selection order."""
        conditioner = self.conditioner(condition)

        def cut(selection: BlockSelection) -> List[np.ndarray]:
            filtered = self.condition_signal(selection.recording, conditioner)
            return extract_segments(filtered, selection.segments, self.segment_cfg.include_y)

        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            pieces = list(executor.map(cut, selections))
        return [segment for piece in pieces for segment in piece]

    def condition_spectrum(self, selections: Sequence[BlockSelection],
                           condition: Union[str, SignalConditioner]) -> Spectrum:
        fs_hz = selections[0].recording.sample_rate_hz
        segments = self.condition_segments(selections, condition)
        return mean_spectrum(segments, fs_hz, self.segment_length, self.circular_phase)

    def frequency_response(self, selections: Sequence[BlockSelection],
                           condition: Union[str, SignalConditioner],
                           unfiltered: Optional[Spectrum] = None) -> FrequencyResponse:
        """B / A of condition against the unfiltered segments."""
        unfiltered = unfiltered or self.condition_spectrum(selections, "none")
        filtered = self.condition_spectrum(selections, condition)
        return estimate_frequency_response(unfiltered, filtered)

    def compare_spectra(self, recordings: Sequence[Recording],
                        conditions: Sequence[Union[str, SignalConditioner]]) -> Dict[str, Spectrum]:
        """Averaged spectrum per condition, keyed by table label."""
        selections = self.select_blocks(recordings)
        result = {}
        for condition in conditions:
            conditioner = self.conditioner(condition)
            result[conditioner.label] = self.condition_spectrum(selections, conditioner)
        return result

    def compare_responses(self, recordings: Sequence[Recording],
                          conditions: Sequence[Union[str, SignalConditioner]]) -> Dict[str, FrequencyResponse]:
        """Empirical response per filter condition, keyed by table label; "none" is skipped."""
        selections = self.select_blocks(recordings)
        unfiltered = self.condition_spectrum(selections, "none")
        result = {}
        for condition in conditions:
            conditioner = self.conditioner(condition)
            if conditioner.kind.name == "none":
                continue
            result[conditioner.label] = self.frequency_response(selections, conditioner, unfiltered)
        return result
