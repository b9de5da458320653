from logger import logging

from enum import Enum
from typing import Callable, List, Tuple

import numpy as np

from src.exceptions import SignalError

try:
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False


def _compiled(fn):
    """njit-compiled fn when numba is installed, else fn itself."""
    if not NUMBA_AVAILABLE:
        return fn
    return njit(fn)


class HeuristicLevel(str, Enum):
    STD = "std"
    EXTRA = "extra"


def _as_finite(x, min_length: int, name: str) -> np.ndarray:
    values = np.asarray(x, dtype=float)
    if values.ndim != 1:
        raise SignalError(f"{name} expects a 1-D array, got shape {values.shape}")
    if values.size < min_length:
        raise SignalError(f"{name} needs at least {min_length} samples, got {values.size}")
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise SignalError(f"{name} got a non-finite sample at index {bad}")
    return values


def _sequential_scan(y: List[float], candidates: np.ndarray, last: int, reach: int,
                     update: Callable[[List[float], int], bool]) -> int:
    """
    Visit window positions in ascending order with in-place updates.

    Only positions whose predicate was true on the input, or whose window was
    touched by an earlier replacement, can fire; everything else is skipped.
    Returns the number of replacements.
    """
    forced: List[int] = []
    replaced = 0
    k = 0
    while True:
        nxt = int(candidates[k]) if k < candidates.size else last + 1
        if forced and forced[0] <= nxt:
            i = forced.pop(0)
            if i == nxt:
                k += 1
        else:
            i = nxt
            k += 1
        if i > last:
            break
        if update(y, i):
            replaced += 1
            for j in range(i + 1, min(i + reach, last) + 1):
                if j not in forced:
                    forced.append(j)
            forced.sort()
    return replaced


def _std_update(y: List[float], i: int) -> bool:
    a, b, c = y[i - 1], y[i], y[i + 1]
    if (b > a and b > c) or (b < a and b < c):
        y[i] = a if abs(b - a) <= abs(b - c) else c
        return True
    return False


def _extra_update(y: List[float], i: int) -> bool:
    a, b, c, d = y[i - 1], y[i], y[i + 1], y[i + 2]
    hi, lo = max(a, d), min(a, d)
    if (b > hi and c > hi) or (b < lo and c < lo):
        y[i] = a if abs(b - a) <= abs(b - d) else d
        y[i + 1] = a if abs(c - a) <= abs(c - d) else d
        return True
    return False


def _std_scan(y: np.ndarray) -> int:
    """In-place STD pass over every window position; returns replacements."""
    replaced = 0
    for i in range(1, y.size - 1):
        a, b, c = y[i - 1], y[i], y[i + 1]
        if (b > a and b > c) or (b < a and b < c):
            y[i] = a if abs(b - a) <= abs(b - c) else c
            replaced += 1
    return replaced


def _extra_scan(y: np.ndarray) -> int:
    """In-place EXTRA pass over every window position; returns replaced pairs."""
    replaced = 0
    for i in range(1, y.size - 2):
        a, b, c, d = y[i - 1], y[i], y[i + 1], y[i + 2]
        hi, lo = max(a, d), min(a, d)
        if (b > hi and c > hi) or (b < lo and c < lo):
            y[i] = a if abs(b - a) <= abs(b - d) else d
            y[i + 1] = a if abs(c - a) <= abs(c - d) else d
            replaced += 1
    return replaced


_std_scan_fast = _compiled(_std_scan)
_extra_scan_fast = _compiled(_extra_scan)


def _std_candidate_scan(values: np.ndarray) -> Tuple[np.ndarray, int]:
    mid, left, right = values[1:-1], values[:-2], values[2:]
    candidates = np.flatnonzero(((mid > left) & (mid > right)) | ((mid < left) & (mid < right))) + 1
    y = values.tolist()
    replaced = _sequential_scan(y, candidates, values.size - 2, 1, _std_update)
    return np.asarray(y, dtype=float), replaced


def _extra_candidate_scan(values: np.ndarray) -> Tuple[np.ndarray, int]:
    a, b, c, d = values[:-3], values[1:-2], values[2:-1], values[3:]
    hi, lo = np.maximum(a, d), np.minimum(a, d)
    candidates = np.flatnonzero(((b > hi) & (c > hi)) | ((b < lo) & (c < lo))) + 1
    y = values.tolist()
    replaced = _sequential_scan(y, candidates, values.size - 3, 2, _extra_update)
    return np.asarray(y, dtype=float), replaced


def std_filter(x) -> np.ndarray:
    """
    Remove one-sample spikes.

    Scans i = 1..n-2 over a working copy. A sample strictly above or strictly
    below both neighbours is replaced by the nearer neighbour (ties go to the
    preceding one); later windows see the replacement.

    :param x: Finite positions, at least 3 samples.
    :return: Filtered copy of the same length.
    """
    values = _as_finite(x, 3, "std_filter")
    if NUMBA_AVAILABLE:
        y = values.copy()
        replaced = int(_std_scan_fast(y))
    else:
        y, replaced = _std_candidate_scan(values)
    logging.debug(f"std_filter replaced {replaced} of {values.size} samples")
    return y


def extra_filter(x_std) -> np.ndarray:
    """
    Remove two-sample spikes from STD-filtered positions.

    Windows (x[i-1], x[i], x[i+1], x[i+2]) for i = 1..n-3; a pair lying strictly
    outside the range of its two outer values is replaced member by member with
    the nearer outer value (ties go to x[i-1]).
    """
    values = _as_finite(x_std, 4, "extra_filter")
    if NUMBA_AVAILABLE:
        y = values.copy()
        replaced = int(_extra_scan_fast(y))
    else:
        y, replaced = _extra_candidate_scan(values)
    logging.debug(f"extra_filter replaced {replaced} pairs in {values.size} samples")
    return y


def apply_heuristic(x, level: HeuristicLevel) -> np.ndarray:
    """EXTRA always runs on STD output."""
    level = HeuristicLevel(level)
    filtered = std_filter(x)
    if level is HeuristicLevel.EXTRA:
        filtered = extra_filter(filtered)
    return filtered
