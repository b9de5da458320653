from logger import logging

from typing import Dict, List, Optional, Union

import numpy as np

from src.exceptions import ConfigError
from src.signal_pipeline.filters.butterworth import BiquadCascade, design_butterworth, filtfilt
from src.signal_pipeline.filters.heuristic import HeuristicLevel, apply_heuristic
from src.signal_pipeline.ingestion.recording import FilterKind, Recording, apply_per_span
from utils import load_config


class SignalConditioner:
    def __init__(self, name: str, label: str, kind: FilterKind, compensate_zero_phase: bool = False):
        """
        Apply one filter condition to arrays or recordings.

        :param name: Registry key of the condition (e.g. "zlp100").
        :param label: Table label (e.g. "Z-LP100").
        :param kind: Filter to apply.
        :param compensate_zero_phase: Move IIR edges so the composite is -3 dB at the nominal edge.
        """
        self.name = name
        self.label = label
        self.kind = kind
        self.compensate_zero_phase = compensate_zero_phase
        self._cascades: Dict[float, BiquadCascade] = {}

    def __repr__(self):
        return f"SignalConditioner(name={self.name!r}, kind={self.kind})"

    def cascade(self, fs_hz: float) -> Optional[BiquadCascade]:
        """Designed IIR filter for this sample rate, or None for non-IIR kinds."""
        if self.kind.name not in ("zero_phase_lowpass", "band"):
            return None
        if fs_hz not in self._cascades:
            self.kind.validate(fs_hz)
            if self.kind.name == "zero_phase_lowpass":
                cascade = design_butterworth("lowpass", self.kind.order, [self.kind.cutoff_hz], fs_hz,
                                             compensate_zero_phase=self.compensate_zero_phase)
            else:
                cascade = design_butterworth("bandpass", self.kind.order, [self.kind.low_hz, self.kind.high_hz],
                                             fs_hz, compensate_zero_phase=self.compensate_zero_phase)
            self._cascades[fs_hz] = cascade
        return self._cascades[fs_hz]

    def min_length(self, fs_hz: float) -> int:
        """Shortest span this condition can filter."""
        if self.kind.name == "std":
            return 3
        if self.kind.name == "extra":
            return 4
        cascade = self.cascade(fs_hz)
        return 1 if cascade is None else cascade.design.pad_length + 1

    def apply_array(self, x, fs_hz: float) -> np.ndarray:
        """Filter one contiguous, finite array."""
        if self.kind.name == "none":
            return np.array(x, dtype=float, copy=True)
        if self.kind.name in ("std", "extra"):
            return apply_heuristic(x, HeuristicLevel(self.kind.name))
        return filtfilt(self.cascade(fs_hz), x)

    def apply(self, rec: Recording) -> Recording:
        """Filter every valid span of rec; spans too short pass through unchanged."""
        if self.kind.name == "none":
            return rec
        fs_hz = rec.sample_rate_hz
        return apply_per_span(rec, lambda x: self.apply_array(x, fs_hz), self.min_length(fs_hz), self.label)


class ConditionProvider:
    def __init__(self, config: Union[str, dict, None] = None):
        """
        Initialize the ConditionProvider with the condition registry.

        :param config: Path to the YAML configuration file, an already parsed
            configuration dictionary, or None for the default file.
        """
        self.config = self._load_config(config)
        self.conditions = self.config.get("conditions") or {}
        if not self.conditions:
            raise ConfigError("No filter conditions found in configuration.")
        self.default_condition = self.config.get("default_condition", "none")
        self.current_condition = None
        self.current_conditioner = None
        logging.info("ConditionProvider initialized.")

        self.switch_condition(self.default_condition)

    def _load_config(self, config) -> dict:
        if isinstance(config, dict):
            return config
        return load_config(config)

    @property
    def names(self) -> List[str]:
        return list(self.conditions)

    @property
    def comparison_order(self) -> List[str]:
        order = self.config.get("comparison_order") or self.names
        unknown = [name for name in order if name not in self.conditions]
        if unknown:
            raise ConfigError(f"comparison_order names unknown conditions: {unknown}")
        return list(order)

    def label(self, name: str) -> str:
        return self.conditions.get(name, {}).get("label", name)

    def switch_condition(self, condition_name: str, compensate_zero_phase: bool = False) -> SignalConditioner:
        """
        Switch the active condition and build its conditioner.

        :param condition_name: Registry key of the condition.
        :param compensate_zero_phase: Compensate IIR edges for forward-backward use.
        :return: SignalConditioner for the condition.
        """
        if condition_name not in self.conditions:
            raise ConfigError(f"Condition '{condition_name}' not found in configuration.")

        logging.info(f"Switching condition to '{condition_name}'...")
        entry = self.conditions[condition_name]
        kind = self._filter_kind(condition_name, entry)

        self.current_conditioner = SignalConditioner(condition_name, entry.get("label", condition_name), kind,
                                                     compensate_zero_phase=compensate_zero_phase)
        self.current_condition = condition_name
        return self.current_conditioner

    def custom(self, cutoff_hz: float, order: int = 7, compensate_zero_phase: bool = False) -> SignalConditioner:
        """Zero-phase low-pass at an arbitrary cutoff."""
        kind = FilterKind.zero_phase_lowpass(cutoff_hz, order)
        label = f"Z-LP{cutoff_hz:g}"
        logging.info(f"Building custom condition {label} (order {order})")
        self.current_conditioner = SignalConditioner("custom", label, kind, compensate_zero_phase)
        self.current_condition = "custom"
        return self.current_conditioner

    @staticmethod
    def _filter_kind(name: str, entry: dict) -> FilterKind:
        kind = entry.get("kind", name)
        try:
            if kind == "none":
                return FilterKind.none()
            if kind == "std":
                return FilterKind.std()
            if kind == "extra":
                return FilterKind.extra()
            if kind == "lowpass":
                return FilterKind.zero_phase_lowpass(entry["cutoff_hz"], entry.get("order", 7))
            if kind == "band":
                return FilterKind.band(entry["low_hz"], entry["high_hz"], entry.get("order", 7))
        except KeyError as exc:
            raise ConfigError(f"Condition '{name}' is missing {exc.args[0]}")
        raise ConfigError(f"Unsupported condition kind: {kind}")
