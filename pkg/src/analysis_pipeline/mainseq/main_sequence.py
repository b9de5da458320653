from logger import logging

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import median_abs_deviation

from src.analysis_pipeline.kinematics.saccades import SaccadeRecord
from src.exceptions import SignalError

SPLIT_AMPLITUDE_DEG = 4.0
TABLE_ORDER = ["No Filter", "STD", "EXTRA", "Z-LP100", "Z-LP50"]


class Cluster(str, Enum):
    SMALL = "small"
    LARGE = "large"


@dataclass(frozen=True)
class MainSequenceFit:
    """Robust line ln(peak velocity) = slope * ln(amplitude) + intercept for one cluster."""

    cluster: Cluster
    slope: float
    intercept: float
    n_points: int
    converged: bool
    iterations: int


def split_clusters(saccades: Sequence[SaccadeRecord], split_amplitude_deg: float = SPLIT_AMPLITUDE_DEG
                   ) -> Tuple[List[SaccadeRecord], List[SaccadeRecord]]:
    """
    Partition saccades at split_amplitude_deg; the boundary belongs to the small cluster.

    :return: (small, large) in input order.
    """
    small, large = [], []
    for record in saccades:
        if not record.amplitude_deg > 0:
            raise SignalError(f"Saccade amplitude must be positive, got {record.amplitude_deg}")
        (small if record.amplitude_deg <= split_amplitude_deg else large).append(record)
    return small, large


def bisquare(u: np.ndarray) -> np.ndarray:
    """Bisquare weights; zero outside |u| < 1."""
    return (np.abs(u) < 1) * (1 - u ** 2) ** 2


def _weighted_lstsq(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    return np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)[0]


def robust_fit(x, y, tune: float = 4.685, tol: float = 1e-6, max_iter: int = 50,
               cluster: Cluster = Cluster.SMALL) -> MainSequenceFit:
    """
    Robust straight-line fit by iteratively reweighted least squares.

    Starts from ordinary least squares; residuals are scaled by the normal-
    consistent MAD (1.4826 * MAD) and weighted with the bisquare function at
    the tuning constant. Stops when no coefficient moves by tol or more, or
    after max_iter iterations (converged=False, last iterate returned).

    :param x: ln amplitude.
    :param y: ln peak velocity.
    :return: MainSequenceFit for the cluster.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise SignalError(f"robust_fit needs at least 3 paired points, got {x.size} and {y.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise SignalError("robust_fit got non-finite values")
    if np.ptp(x) == 0:
        raise SignalError("robust_fit is rank deficient: all x values are equal")

    X = np.column_stack([np.ones_like(x), x])
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    floor = 1e-12 * max(1.0, float(np.abs(y).max()))

    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        resid = y - X @ beta
        scale = median_abs_deviation(resid, scale="normal")
        if scale <= floor:
            # residuals already vanish at least at half the points
            converged = True
            break
        w = bisquare(resid / (tune * scale))
        if np.count_nonzero(w) < 2 or np.ptp(x[w > 0]) == 0:
            logging.warning(f"robust_fit ran out of usable points at iteration {iteration}")
            break
        new_beta = _weighted_lstsq(X, y, w)
        change = np.max(np.abs(new_beta - beta))
        beta = new_beta
        if change < tol:
            converged = True
            break

    if not converged:
        logging.warning(f"robust_fit did not converge for the {Cluster(cluster).value} cluster "
                        f"after {iteration} iterations")
    return MainSequenceFit(cluster=Cluster(cluster), slope=float(beta[1]), intercept=float(beta[0]),
                           n_points=int(x.size), converged=converged, iterations=iteration)


def fit_main_sequence(saccades: Sequence[SaccadeRecord], split_amplitude_deg: float = SPLIT_AMPLITUDE_DEG,
                      tune: float = 4.685, tol: float = 1e-6, max_iter: int = 50) -> List[MainSequenceFit]:
    """
    Fit both clusters of one recording's saccades.

    Clusters with fewer than 3 saccades, or whose amplitudes are all equal,
    are skipped with a warning.
    """
    fits = []
    for cluster, records in zip((Cluster.SMALL, Cluster.LARGE), split_clusters(saccades, split_amplitude_deg)):
        if len(records) < 3:
            logging.warning(f"Skipping {cluster.value} cluster: {len(records)} saccades, need 3")
            continue
        ln_amp = np.log([record.amplitude_deg for record in records])
        ln_pkv = np.log([record.peak_velocity_deg_s for record in records])
        try:
            fits.append(robust_fit(ln_amp, ln_pkv, tune=tune, tol=tol, max_iter=max_iter, cluster=cluster))
        except SignalError as exc:
            logging.warning(f"Skipping {cluster.value} cluster: {exc}")
    return fits


def _ordered(conditions, order: Optional[Sequence[str]]) -> List[str]:
    order = list(order or TABLE_ORDER)
    return [name for name in order if name in conditions] + [name for name in conditions if name not in order]


def _mean_sd(values: Sequence[float]) -> Tuple[float, float]:
    if len(values) == 0:
        return float("nan"), float("nan")
    values = np.asarray(values, dtype=float)
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), sd


def summarize_by_condition(fits: Mapping[str, Sequence[MainSequenceFit]],
                           order: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Mean and sample SD of slopes per condition and cluster.

    :param fits: Condition label -> fits from every recording.
    :param order: Row order; defaults to No Filter, STD, EXTRA, Z-LP100, Z-LP50.
    :return: One row per condition with small_/large_ mean, sd and n columns.
    """
    rows = []
    for condition in _ordered(fits, order):
        row: Dict[str, object] = {"condition": condition}
        for cluster in Cluster:
            slopes = [fit.slope for fit in fits[condition] if fit.cluster == cluster]
            if not slopes:
                logging.warning(f"No {cluster.value}-cluster fits for condition {condition}")
            row[f"{cluster.value}_mean"], row[f"{cluster.value}_sd"] = _mean_sd(slopes)
            row[f"{cluster.value}_n"] = len(slopes)
        rows.append(row)
    columns = ["condition"] + [f"{c.value}_{stat}" for c in Cluster for stat in ("mean", "sd", "n")]
    return pd.DataFrame(rows, columns=columns)


def summarize_peak_velocity(records: Mapping[str, Sequence[SaccadeRecord]], min_amplitude_deg: float = 22.0,
                            order: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Count, amplitude and peak velocity (mean and SD) of saccades above min_amplitude_deg per condition."""
    rows = []
    for condition in _ordered(records, order):
        large = [record for record in records[condition] if record.amplitude_deg > min_amplitude_deg]
        amplitude_mean, amplitude_sd = _mean_sd([record.amplitude_deg for record in large])
        velocity_mean, velocity_sd = _mean_sd([record.peak_velocity_deg_s for record in large])
        rows.append({"condition": condition, "n": len(large), "amplitude_mean": amplitude_mean,
                     "amplitude_sd": amplitude_sd, "peak_velocity_mean": velocity_mean,
                     "peak_velocity_sd": velocity_sd})
    return pd.DataFrame(rows, columns=["condition", "n", "amplitude_mean", "amplitude_sd",
                                       "peak_velocity_mean", "peak_velocity_sd"])


def scatter_table(records: Mapping[str, Sequence[SaccadeRecord]]) -> pd.DataFrame:
    """ln_amp, ln_pkv, condition rows for plotting the main sequence."""
    rows = [{"ln_amp": float(np.log(record.amplitude_deg)), "ln_pkv": float(np.log(record.peak_velocity_deg_s)),
             "condition": condition}
            for condition, condition_records in records.items()
            for record in condition_records if record.amplitude_deg > 0]
    return pd.DataFrame(rows, columns=["ln_amp", "ln_pkv", "condition"])
