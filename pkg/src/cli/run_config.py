from logger import logging

from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

from dotenv import dotenv_values

from src.analysis_pipeline.kinematics.saccades import DetectorConfig
from src.analysis_pipeline.kinematics.segments import SegmentConfig
from src.exceptions import ConfigError, OculofiltError
from src.synth.scenarios import SCENARIOS
from utils import load_config

COMMANDS = ("filter", "spectrum", "freqresp", "bands", "saccades", "mainseq", "synth")
FILTER_CHOICES = ("none", "std", "extra", "zlp100", "zlp50", "custom", "all")

# config-file keys that differ from the field they set
ALIASES = {
    "vmax": "vmax_deg_s",
    "onset": "onset_deg_s",
    "offset": "offset_deg_s",
    "edges": "band_edges",
    "split_amplitude": "split_amplitude_deg",
    "large_min_amplitude": "large_min_amplitude_deg",
    "o": "output",
}

# fields that only make sense on the command line
COMMAND_LINE_ONLY = {"command", "inputs", "config_file", "config_data"}


@dataclass
class RunConfig:
    """Every resolved setting of one CLI run."""

    command: str
    inputs: List[str] = field(default_factory=list)
    output: Optional[str] = None
    config_file: Optional[str] = None
    json: bool = False

    filter: str = "none"
    cutoff_hz: Optional[float] = None
    order: Optional[int] = None
    compensate: bool = False

    sample_rate_hz: float = 1000.0
    segment_length: int = 256
    circular_phase: bool = False
    block_length: int = 2048
    vmax_deg_s: float = 25.0
    horizontal_only: bool = False
    include_y: bool = False

    band_edges: List[float] = field(default_factory=lambda: [50.0, 75.0, 100.0, 300.0])
    band_order: int = 7

    onset_deg_s: float = 30.0
    offset_deg_s: float = 20.0
    min_duration_ms: float = 6.0
    merge_gap_ms: float = 20.0

    split_amplitude_deg: float = 4.0
    tune: float = 4.685
    tol: float = 1e-6
    max_iter: int = 50
    large_min_amplitude_deg: float = 22.0
    scatter: Optional[str] = None
    peak_summary: Optional[str] = None

    scenario: str = "fixation"
    seed: int = 0

    config_data: dict = field(default_factory=dict, repr=False)

    @property
    def segment_config(self) -> SegmentConfig:
        return SegmentConfig(block_length=self.block_length, sub_length=self.segment_length,
                             vmax_deg_s=self.vmax_deg_s, horizontal_only=self.horizontal_only,
                             include_y=self.include_y)

    @property
    def detector_config(self) -> DetectorConfig:
        return DetectorConfig(onset_deg_s=self.onset_deg_s, offset_deg_s=self.offset_deg_s,
                              min_duration_ms=self.min_duration_ms, merge_gap_ms=self.merge_gap_ms)

    @classmethod
    def resolve(cls, args: Dict[str, object], yaml_path: Optional[str] = None) -> "RunConfig":
        """
        Merge YAML defaults, the key=value config file and command-line flags.

        :param args: Parsed flags; None means "not given".
        :param yaml_path: Alternative YAML defaults file.
        :return: RunConfig with flags winning over the config file, and the
            config file winning over the YAML defaults.
        """
        try:
            data = load_config(yaml_path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"Cannot read configuration: {exc}")
        values = _yaml_defaults(data)

        config_file = args.get("config_file")
        if config_file:
            values.update(_read_key_value_file(str(config_file)))

        values.update({key: value for key, value in args.items() if value is not None})
        values["config_data"] = data
        known = {f.name for f in fields(cls)}
        config = cls(**{key: value for key, value in values.items() if key in known})
        logging.info(f"Resolved configuration for '{config.command}': filter={config.filter}, "
                     f"inputs={len(config.inputs)}")
        return config

    def validate(self) -> "RunConfig":
        """Check the settings the command needs before running it."""
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}'")
        if self.command == "synth":
            if self.scenario not in SCENARIOS:
                raise ConfigError(f"Unknown scenario '{self.scenario}', expected one of {sorted(SCENARIOS)}")
            if not self.output or self.output == "-":
                raise ConfigError("synth needs an output file (-o PATH)")
            return self

        if not self.inputs:
            raise ConfigError(f"{self.command} needs at least one input file")
        if self.filter not in FILTER_CHOICES:
            raise ConfigError(f"Unknown filter '{self.filter}', expected one of {FILTER_CHOICES}")
        if self.filter == "custom" and self.cutoff_hz is None:
            raise ConfigError("--filter custom needs --cutoff-hz")
        if self.filter == "all" and self.command in ("filter", "bands"):
            raise ConfigError(f"--filter all is not available for {self.command}")
        if self.cutoff_hz is not None and self.filter != "custom":
            logging.warning(f"--cutoff-hz {self.cutoff_hz:g} is ignored with --filter {self.filter}; "
                            f"it only applies to --filter custom")
        if not 0.0 < float(self.sample_rate_hz) < float("inf"):
            raise ConfigError(f"sample_rate_hz must be a positive number, got {self.sample_rate_hz}")
        if self.command == "freqresp" and self.filter == "none":
            raise ConfigError("freqresp needs a filter other than none")
        if self.per_file and len(self.inputs) > 1 and self.output in (None, "-"):
            raise ConfigError(f"{self.command} with several inputs needs an output directory (-o DIR)")
        if (self.order is not None and self.order < 1) or self.band_order < 1:
            raise ConfigError("Filter orders must be >= 1")
        if self.segment_length < 4 or self.segment_length & (self.segment_length - 1):
            raise ConfigError(f"--segment-length must be a power of two >= 4, got {self.segment_length}")
        try:
            self.segment_config.validate()
            self.detector_config.validate()
        except OculofiltError as exc:
            raise ConfigError(str(exc))
        if self.max_iter < 1 or self.tol <= 0 or self.tune <= 0:
            raise ConfigError("Robust fit needs max_iter >= 1, tol > 0 and tune > 0")
        return self

    @property
    def per_file(self) -> bool:
        return self.command in ("filter", "bands", "saccades")


def _yaml_defaults(data: dict) -> Dict[str, object]:
    spectral = data.get("spectral") or {}
    segments = data.get("segments") or {}
    bands = data.get("bands") or {}
    detector = data.get("detector") or {}
    mainseq = data.get("mainseq") or {}
    synth = data.get("synth") or {}
    defaults = {
        "filter": data.get("default_condition"),
        "sample_rate_hz": data.get("sample_rate_hz"),
        "segment_length": spectral.get("segment_length"),
        "circular_phase": spectral.get("circular_phase_mean"),
        "block_length": segments.get("block_length"),
        "vmax_deg_s": segments.get("vmax_deg_s"),
        "horizontal_only": segments.get("horizontal_only"),
        "include_y": segments.get("include_y"),
        "band_edges": bands.get("edges_hz"),
        "band_order": bands.get("order"),
        "onset_deg_s": detector.get("onset_deg_s"),
        "offset_deg_s": detector.get("offset_deg_s"),
        "min_duration_ms": detector.get("min_duration_ms"),
        "merge_gap_ms": detector.get("merge_gap_ms"),
        "split_amplitude_deg": mainseq.get("split_amplitude_deg"),
        "tune": mainseq.get("tune"),
        "tol": mainseq.get("tol"),
        "max_iter": mainseq.get("max_iter"),
        "large_min_amplitude_deg": mainseq.get("large_min_amplitude_deg"),
        "seed": synth.get("seed"),
    }
    return {key: value for key, value in defaults.items() if value is not None}


def _to_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _to_float_list(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part.strip()]


def _converter(name: str):
    if name == "band_edges":
        return _to_float_list
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if kind is bool:
        return _to_bool
    if kind in (int, float):
        return kind
    if kind == Optional[float]:
        return float
    if kind == Optional[int]:
        return int
    return str


def _read_key_value_file(path: str) -> Dict[str, object]:
    """Parse a key=value config file whose keys are long flag names (dashes or underscores)."""
    try:
        with open(path, "r") as handle:
            raw = dotenv_values(stream=handle)
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc}")
    known = {f.name for f in fields(RunConfig)} - COMMAND_LINE_ONLY
    values: Dict[str, object] = {}
    for key, text in raw.items():
        name = key.strip().lstrip("-").replace("-", "_")
        name = ALIASES.get(name, name)
        if name not in known:
            raise ConfigError(f"{path}: unknown key '{key}'")
        if text is None:
            raise ConfigError(f"{path}: key '{key}' has no value")
        try:
            values[name] = _converter(name)(text)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for '{key}': {exc}")
    logging.info(f"Read {len(values)} settings from {path}")
    return values
