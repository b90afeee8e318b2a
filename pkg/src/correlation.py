"""Ensemble statistics of detector patterns and the dephasing/decoherence classifier.

All estimators work on the realization stack shifted by its per-point minimum
and reduce with a value-ordered sum, so a permutation of the realizations
gives bit-identical results and an ensemble of identical patterns has exactly
zero variance.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import ConfigError, DegenerateInputError, NumericalValidityError, ShapeError
from src.fields import Grid, IntensityPattern
from src.optics import OpticalParams, farfield_reference
from src.utils_stats import (
    boxcar_smooth,
    fringe_power_ratio,
    minima_spacing,
    pearson,
    shifted,
    symmetric_mean,
    visibility,
)

MASK_EPSILON = 1e-6
DELTA_G2_COLUMNS = ["x_m", "delta_g2", "reference"]


class Verdict(str, Enum):
    DEPHASING = "Dephasing"
    DECOHERENCE = "Decoherence"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ClassifierThresholds:
    r_hi: float = 0.8
    r_lo: float = 0.5
    f_hi: float = 0.25
    f_lo: float = 0.1
    epsilon: float = MASK_EPSILON

    def __post_init__(self):
        if not -1 <= self.r_lo <= self.r_hi <= 1:
            raise ConfigError("classifier needs -1 <= r_lo <= r_hi <= 1")
        if not 0 <= self.f_lo <= self.f_hi <= 1:
            raise ConfigError("classifier needs 0 <= f_lo <= f_hi <= 1")
        if not 0 < self.epsilon < 1:
            raise ConfigError("mask epsilon must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Realization stack on one symmetric detector grid; rows of `patterns` are realizations."""

    grid: Grid
    patterns: np.ndarray = field(repr=False)
    seeds: tuple = ()
    config_digest: str = ""

    def __post_init__(self):
        pats = np.array(self.patterns, dtype=float, copy=True)
        if pats.ndim != 2 or pats.shape[1] != self.grid.n:
            raise ShapeError(f"expected (M, {self.grid.n}) patterns, got {pats.shape}")
        if pats.shape[0] == 0:
            raise DegenerateInputError("ensemble is empty")
        if not self.grid.is_symmetric:
            raise ShapeError("ensemble grid must be centered on 0 with an odd point count")
        seeds = tuple(int(s) for s in self.seeds)
        if seeds and len(seeds) != pats.shape[0]:
            raise ShapeError(f"{len(seeds)} seeds for {pats.shape[0]} patterns")
        pats.setflags(write=False)
        object.__setattr__(self, "patterns", pats)
        object.__setattr__(self, "seeds", seeds)

    @property
    def size(self) -> int:
        return self.patterns.shape[0]


@dataclass(frozen=True, eq=False)
class CorrelationResult:
    """Delta g2 on the half axis x >= 0; masked points hold nan."""

    x: np.ndarray = field(repr=False)
    delta_g2: np.ndarray = field(repr=False)
    reference: Optional[np.ndarray] = field(default=None, repr=False)
    pearson_r: Optional[float] = None
    fringe_power_ratio: Optional[float] = None
    peak_delta_g2: Optional[float] = None
    verdict: Optional[Verdict] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        g = np.asarray(self.delta_g2, dtype=float)
        if x.shape != g.shape or x.ndim != 1:
            raise ShapeError(f"x and delta_g2 must be equal-length vectors, got {x.shape} and {g.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "delta_g2", g)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.delta_g2)

    def to_frame(self) -> pd.DataFrame:
        ref = self.reference if self.reference is not None else np.full(self.x.shape, np.nan)
        return pd.DataFrame({"x_m": self.x, "delta_g2": self.delta_g2, "reference": ref}, columns=DELTA_G2_COLUMNS)

    def summary(self, n_realizations: int, config_digest: str) -> Dict[str, Any]:
        return {
            "pearson_r": self.pearson_r,
            "fringe_power_ratio": self.fringe_power_ratio,
            "peak_delta_g2": self.peak_delta_g2,
            "verdict": None if self.verdict is None else self.verdict.value,
            "n_realizations": int(n_realizations),
            "config_digest": config_digest,
        }


def _half_axis(grid: Grid) -> tuple[int, np.ndarray]:
    c = (grid.n - 1) // 2
    return c, grid.points[c:]


def _moments(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """floor, shifted stack and its order-free column mean."""
    floor, excess = shifted(stack)
    return floor, excess, symmetric_mean(excess)


def ensemble_mean(e: Ensemble) -> IntensityPattern:
    floor, _, mean_excess = _moments(e.patterns)
    return IntensityPattern(e.grid, floor + mean_excess)


def delta_g2(e: Ensemble, epsilon: float = MASK_EPSILON) -> CorrelationResult:
    """<I(x) I(-x)> / (<I(x)> <I(-x)>) - 1 for x >= 0."""
    if e.size < 2:
        raise DegenerateInputError(f"delta g2 needs at least 2 realizations, got {e.size}")
    c, x = _half_axis(e.grid)
    floor, excess, mean_excess = _moments(e.patterns)
    mu = floor + mean_excess

    pos, neg = excess[:, c:], excess[:, c::-1]
    cov = symmetric_mean(pos * neg) - mean_excess[c:] * mean_excess[c::-1]
    denom = mu[c:] * mu[c::-1]

    peak = float(mu.max())
    keep = denom >= epsilon * peak**2
    if not peak > 0 or not keep.any():
        raise NumericalValidityError("every detector point is masked; mean intensity is too small")
    g = np.full(x.shape, np.nan)
    # <I I> >= 0 bounds the ratio at -1; clip rounding below it
    g[keep] = np.maximum(cov[keep] / denom[keep], -1.0)
    return CorrelationResult(x=x, delta_g2=g)


def full_delta_G2(e: Ensemble) -> np.ndarray:
    """Covariance <I(x1) I(x2)> - <I(x1)><I(x2)> over the full grid."""
    if e.size < 2:
        raise DegenerateInputError(f"delta G2 needs at least 2 realizations, got {e.size}")
    _, excess, mean_excess = _moments(e.patterns)
    # canonical row order keeps the sum independent of realization order
    order = np.lexsort(excess.T[::-1])
    centered = excess[order] - mean_excess
    cov = np.einsum("mi,mj->ij", centered, centered, optimize=False) / e.size
    upper = np.triu(cov)
    return upper + np.triu(cov, 1).T


def comparison_window(p: OpticalParams) -> float:
    """Half-width of the central lobe of the correlation-mode envelope, lambda*L2/(2d)."""
    return p.wavelength * p.L2 / (2 * p.slit_width)


def _max_normalized(values: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(values)) if values.size else 0.0
    return values / peak if peak > 0 else np.zeros_like(values)


def compare_to_reference(r: CorrelationResult, p: OpticalParams) -> CorrelationResult:
    """Fill the far-field reference, pearson_r, fringe power ratio and peak |delta g2|."""
    window = r.x <= comparison_window(p) * (1 + 1e-9)
    ref = np.asarray(farfield_reference(r.x, p, mode="correlation"), dtype=float)
    if window.sum() < 3 or not ref[window].max() > 0:
        raise NumericalValidityError("far-field reference is degenerate on the comparison window")
    ref = ref / ref[window].max()

    g = r.delta_g2[window]
    valid = np.isfinite(g)
    if valid.sum() < 3:
        raise NumericalValidityError("fewer than 3 unmasked delta g2 points in the comparison window")
    g_norm = _max_normalized(np.where(valid, g, 0.0))

    dx = float(r.x[1] - r.x[0])
    frequency = 2 * p.slit_separation / (p.wavelength * p.L2)
    return replace(
        r,
        reference=ref,
        pearson_r=pearson(g_norm[valid], ref[window][valid]),
        fringe_power_ratio=fringe_power_ratio(g_norm, dx, frequency),
        peak_delta_g2=float(np.max(np.abs(g[valid]))),
    )


def classify(r: CorrelationResult, thresholds: ClassifierThresholds = ClassifierThresholds()) -> Verdict:
    if r.pearson_r is None or r.fringe_power_ratio is None:
        raise DegenerateInputError("classify needs compare_to_reference to run first")
    if r.peak_delta_g2 == 0:
        return Verdict.INCONCLUSIVE
    if r.pearson_r >= thresholds.r_hi and r.fringe_power_ratio >= thresholds.f_hi:
        return Verdict.DEPHASING
    if r.pearson_r <= thresholds.r_lo and r.fringe_power_ratio <= thresholds.f_lo:
        return Verdict.DECOHERENCE
    return Verdict.INCONCLUSIVE


def analyze(
    e: Ensemble,
    p: OpticalParams,
    thresholds: ClassifierThresholds = ClassifierThresholds(),
) -> CorrelationResult:
    """delta_g2 -> compare_to_reference -> classify."""
    r = compare_to_reference(delta_g2(e, thresholds.epsilon), p)
    return replace(r, verdict=classify(r, thresholds))


def _central_lobe(pattern: IntensityPattern, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    x = pattern.grid.points
    inside = np.abs(x) <= half_width * (1 + 1e-9)
    return x[inside], pattern.values[inside]


def fringe_visibility(pattern: IntensityPattern, p: OpticalParams) -> float:
    """(max - min)/(max + min) of the boxcar-smoothed pattern over |x| <= lambda*L2/(2d).

    The boxcar is one eighth of the direct fringe period wide.
    """
    _, values = _central_lobe(pattern, comparison_window(p))
    width = int(round(p.fringe_period / 8 / pattern.grid.dx))
    return visibility(boxcar_smooth(values, width))


def fringe_period(pattern: IntensityPattern, p: OpticalParams) -> float:
    """Mean spacing of local minima inside the central envelope lobe of a direct pattern."""
    # the last tenth of the lobe is left out; the envelope null merges with a fringe minimum there
    x, values = _central_lobe(pattern, 0.9 * p.envelope_null)
    return minima_spacing(x, values)


def stack(patterns: Sequence[IntensityPattern], seeds: Sequence[int] = (), config_digest: str = "") -> Ensemble:
    if not patterns:
        raise DegenerateInputError("ensemble is empty")
    grid = patterns[0].grid
    for q in patterns[1:]:
        if q.grid != grid:
            raise ShapeError("ensemble patterns live on different grids")
    return Ensemble(grid, np.stack([q.values for q in patterns]), tuple(seeds), config_digest)
