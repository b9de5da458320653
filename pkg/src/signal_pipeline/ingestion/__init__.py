from src.signal_pipeline.ingestion.recording import (
    Eye,
    FilterKind,
    Recording,
    Span,
    apply_per_span,
    contiguous_valid_spans,
    load_recording,
    save_recording,
)
