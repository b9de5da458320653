from logger import logging

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.analysis_pipeline.kinematics.velocity import VelocitySeries, recording_velocity
from src.exceptions import ConfigError
from src.signal_pipeline.ingestion.recording import Recording, Span, contiguous_valid_spans


@dataclass(frozen=True)
class SegmentConfig:
    block_length: int = 2048
    sub_length: int = 256
    vmax_deg_s: float = 25.0
    horizontal_only: bool = False
    include_y: bool = False

    def validate(self) -> "SegmentConfig":
        if self.sub_length < 1 or self.block_length < self.sub_length or self.block_length % self.sub_length:
            raise ConfigError(f"Block length {self.block_length} must be a positive multiple of "
                              f"sub length {self.sub_length}")
        if not self.vmax_deg_s > 0:
            raise ConfigError(f"Veto speed must be positive, got {self.vmax_deg_s}")
        return self


def select_fixation_blocks(rec: Recording, cfg: SegmentConfig = SegmentConfig(),
                           velocity: Optional[VelocitySeries] = None) -> List[Span]:
    """
    Non-overlapping fixation blocks that pass the speed veto.

    Each valid span is tiled with block_length blocks from its start; a block
    is dropped when any defined speed in it exceeds vmax_deg_s. Undefined
    speeds never veto.

    :param rec: Unfiltered recording.
    :param cfg: Block, sub-segment and veto parameters.
    :param velocity: Precomputed velocity of rec, if available.
    :return: Surviving blocks as spans, in order.
    """
    cfg.validate()
    velocity = velocity or recording_velocity(rec)
    speed = np.abs(velocity.vx) if cfg.horizontal_only else velocity.speed
    fast = velocity.defined_mask & (np.nan_to_num(speed, nan=0.0) > cfg.vmax_deg_s)

    kept: List[Span] = []
    vetoed = 0
    for span in contiguous_valid_spans(rec, cfg.block_length):
        for start in range(span.start_index, span.stop_index - cfg.block_length + 1, cfg.block_length):
            if fast[start:start + cfg.block_length].any():
                vetoed += 1
            else:
                kept.append(Span(start, cfg.block_length))
    if vetoed:
        logging.warning(f"Vetoed {vetoed} of {vetoed + len(kept)} blocks with speed above {cfg.vmax_deg_s} deg/s")
    logging.info(f"Selected {len(kept)} fixation blocks of {cfg.block_length} samples")
    return kept


def split_blocks(blocks: Sequence[Span], cfg: SegmentConfig = SegmentConfig()) -> List[Span]:
    """Consecutive sub_length pieces of every block."""
    return [Span(block.start_index + offset, cfg.sub_length)
            for block in blocks
            for offset in range(0, block.length - cfg.sub_length + 1, cfg.sub_length)]


def extract_segments(rec: Recording, spans: Sequence[Span], include_y: bool = False) -> List[np.ndarray]:
    """
    Position arrays cut at spans.

    With include_y the y pieces of each span follow its x piece.
    """
    segments = []
    for span in spans:
        segments.append(np.array(rec.x_deg[span.slice]))
        if include_y:
            segments.append(np.array(rec.y_deg[span.slice]))
    return segments


def select_fixation_segments(rec: Recording, cfg: SegmentConfig = SegmentConfig()) -> List[np.ndarray]:
    """
    Fixation sub-segments for the Fourier pipeline.

    :param rec: Recording to cut.
    :param cfg: Segment configuration (2048-sample blocks, 256-sample pieces, 25 deg/s veto by default).
    :return: Sub-segment arrays; may be empty.
    """
    return extract_segments(rec, split_blocks(select_fixation_blocks(rec, cfg), cfg), cfg.include_y)
