from src.analysis_pipeline.mainseq.main_sequence import (
    Cluster,
    MainSequenceFit,
    fit_main_sequence,
    robust_fit,
    scatter_table,
    split_clusters,
    summarize_by_condition,
    summarize_peak_velocity,
)
