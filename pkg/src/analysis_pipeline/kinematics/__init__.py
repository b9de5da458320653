from src.analysis_pipeline.kinematics.saccades import (
    SACCADE_COLUMNS,
    DetectorConfig,
    SaccadeRecord,
    detect_saccades,
    saccades_from_frame,
    saccades_to_frame,
)
from src.analysis_pipeline.kinematics.segments import (
    SegmentConfig,
    extract_segments,
    select_fixation_blocks,
    select_fixation_segments,
    split_blocks,
)
from src.analysis_pipeline.kinematics.velocity import VelocitySeries, recording_velocity, velocity_six_point
