import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks


def zscore(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    std = values.std(ddof=0)
    if std == 0 or np.isnan(std):
        return np.zeros(len(values))
    return (values - values.mean()) / std


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 0 when either input has zero variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        raise ValueError("pearson inputs must have equal length")
    if len(a) < 2:
        return 0.0
    r = float(np.mean(zscore(a) * zscore(b)))
    return float(np.clip(r, -1.0, 1.0))


def symmetric_mean(stack: np.ndarray) -> np.ndarray:
    """Column means over axis 0 that do not depend on the row order.

    Each column is sorted before a sequential reduction, so any permutation of
    the rows gives a bit-identical result.
    """
    stack = np.asarray(stack, dtype=float)
    return np.sort(stack, axis=0).sum(axis=0) / stack.shape[0]


def shifted(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a realization stack into its column minimum and the non-negative excess."""
    stack = np.asarray(stack, dtype=float)
    floor = stack.min(axis=0)
    return floor, stack - floor


def fringe_power_ratio(values: np.ndarray, dx: float, frequency: float) -> float:
    """Fraction of the non-DC power that sits in the bin nearest `frequency`."""
    values = np.asarray(values, dtype=float)
    if len(values) < 3:
        return 0.0
    centered = values - values.mean()
    power = np.abs(np.fft.rfft(centered)) ** 2
    total = power[1:].sum()
    if total <= 0 or not np.isfinite(total):
        return 0.0
    freqs = np.fft.rfftfreq(len(values), d=dx)
    k = int(np.argmin(np.abs(freqs[1:] - frequency))) + 1
    return float(power[k] / total)


def boxcar_smooth(values: np.ndarray, width_points: int) -> np.ndarray:
    width_points = max(1, int(width_points))
    return uniform_filter1d(np.asarray(values, dtype=float), size=width_points, mode="nearest")


def visibility(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    hi, lo = values.max(), values.min()
    if hi + lo <= 0:
        return 0.0
    return float((hi - lo) / (hi + lo))


def minima_spacing(x: np.ndarray, values: np.ndarray) -> float:
    """Mean distance between successive local minima; nan with fewer than two."""
    idx, _ = find_peaks(-np.asarray(values, dtype=float))
    if len(idx) < 2:
        return float("nan")
    return float(np.mean(np.diff(np.asarray(x)[idx])))
