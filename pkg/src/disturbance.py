"""The dephaser (random smooth phase) and the decoherer (incoherent windowed components).

Both act on the wave immediately behind the double slit.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Optional

import numpy as np

from src.errors import ConfigError, DegenerateInputError
from src.fields import Grid, WaveField, require_same_grid

FWHM_PER_SIGMA = 2 * np.sqrt(2 * np.log(2))
DEFAULT_WINDOW = (-250e-9, 250e-9)


def _check_window(window: tuple[float, float]) -> None:
    if len(window) != 2 or not window[0] < window[1]:
        raise ConfigError(f"window must be an interval (lo, hi) with lo < hi, got {window}")


@dataclass(frozen=True)
class DephaserSpec:
    n_gaussians: int = 500
    amp_low: float = 0.0
    amp_high: float = 2 * np.pi
    sigma_mean: float = 4e-9
    sigma_std: float = 1e-9
    sigma_min: float = 0.5e-9
    window: tuple[float, float] = DEFAULT_WINDOW

    def __post_init__(self):
        if self.n_gaussians < 1:
            raise ConfigError("dephaser needs at least one Gaussian")
        if not self.amp_low <= self.amp_high:
            raise ConfigError("dephaser amplitude range must satisfy amp_low <= amp_high")
        if not self.sigma_mean > 0 or self.sigma_std < 0 or not self.sigma_min > 0:
            raise ConfigError("dephaser widths must be positive (sigma_std >= 0)")
        _check_window(self.window)


@dataclass(frozen=True, eq=False)
class PhaseField:
    grid: Grid
    theta: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    centers: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    sigmas: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, copy=True)
        if theta.shape != (self.grid.n,):
            raise ConfigError(f"phase of {theta.size} values for a {self.grid.n}-point grid")
        if not np.all(np.isfinite(theta)):
            raise ConfigError("phase field must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)


def _inside(grid: Grid, lo: float, hi: float) -> np.ndarray:
    tol = 1e-9 * grid.dx
    x = grid.points
    return (x >= lo - tol) & (x <= hi + tol)


def sample_dephaser(spec: DephaserSpec, rng: np.random.Generator, grid: Grid) -> PhaseField:
    """theta(x') = sum_i A_i exp(-((x'-x_i)/(sqrt(2) sigma_i))^2) over the window, 0 outside."""
    lo, hi = spec.window
    if not grid.covers(lo, hi):
        raise ConfigError(f"grid [{grid.lower:.3e}, {grid.upper:.3e}] does not cover the dephaser window")
    n = spec.n_gaussians
    amplitudes = rng.uniform(spec.amp_low, spec.amp_high, n)
    centers = rng.uniform(lo, hi, n)
    sigmas = rng.normal(spec.sigma_mean, spec.sigma_std, n)
    bad = sigmas < spec.sigma_min
    while bad.any():
        sigmas[bad] = rng.normal(spec.sigma_mean, spec.sigma_std, int(bad.sum()))
        bad = sigmas < spec.sigma_min

    theta = np.zeros(grid.n)
    inside = _inside(grid, lo, hi)
    x = grid.points[inside]
    bumps = amplitudes[None, :] * np.exp(-(((x[:, None] - centers[None, :]) / (np.sqrt(2) * sigmas[None, :])) ** 2))
    theta[inside] = bumps.sum(axis=1)
    return PhaseField(grid, theta, amplitudes, centers, sigmas)


def suppress_phase(theta: PhaseField, lo: float, hi: float) -> PhaseField:
    """Force the phase to zero over [lo, hi] (the dephaser switched off there)."""
    values = np.array(theta.theta, copy=True)
    values[_inside(theta.grid, lo, hi)] = 0.0
    return PhaseField(theta.grid, values, theta.amplitudes, theta.centers, theta.sigmas)


def apply_phase(f: WaveField, theta: PhaseField) -> WaveField:
    require_same_grid(f.grid, theta.grid, "field and phase")
    return WaveField(f.grid, f.amplitudes * np.exp(1j * theta.theta))


@dataclass(frozen=True)
class DecohererSpec:
    model: Literal["gaussian", "tophat"] = "gaussian"
    delta0: float = 100e-9
    x0: float = 12.5e-9
    w: float = 12.5e-9
    window: tuple[float, float] = DEFAULT_WINDOW

    def __post_init__(self):
        if self.model not in ("gaussian", "tophat"):
            raise ConfigError(f"unknown decoherer model {self.model!r}")
        if self.model == "gaussian" and not (self.delta0 > 0 and self.x0 > 0):
            raise ConfigError("gaussian decoherer needs delta0 > 0 and x0 > 0")
        if self.model == "tophat" and not self.w > 0:
            raise ConfigError("top-hat decoherer needs w > 0")
        _check_window(self.window)

    @property
    def coherence_length(self) -> float:
        """FWHM of the Gaussian windows, or the top-hat width."""
        if self.model == "gaussian":
            return FWHM_PER_SIGMA * self.delta0
        return self.w

    @classmethod
    def for_coherence_length(
        cls,
        model: str,
        w: float,
        window: tuple[float, float] = DEFAULT_WINDOW,
        ratio: float = 8.0,
    ) -> "DecohererSpec":
        """Spec with transverse coherence length `w`; Gaussians keep delta0/x0 = `ratio`."""
        if model == "gaussian":
            delta0 = w / FWHM_PER_SIGMA
            return cls(model="gaussian", delta0=delta0, x0=delta0 / ratio, w=w, window=window)
        return cls(model=model, w=w, window=window)


@dataclass(frozen=True, eq=False)
class ComponentSet:
    """Equal-weight mixture {phi_n, 1/N}; rows of `amplitudes` are the phi_n."""

    grid: Grid
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex, copy=True)
        if amps.ndim != 2 or amps.shape[1] != self.grid.n:
            raise ConfigError(f"expected (N, {self.grid.n}) component amplitudes, got {amps.shape}")
        if amps.shape[0] == 0:
            raise DegenerateInputError("component set is empty")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def weight(self) -> float:
        return 1.0 / self.size

    @property
    def components(self) -> list[WaveField]:
        return [WaveField(self.grid, row) for row in self.amplitudes]

    @cached_property
    def trace(self) -> float:
        norms = np.abs(self.amplitudes) ** 2 @ self.grid.weights()
        return float(norms.sum() * self.weight)

    @classmethod
    def pure(cls, f: WaveField) -> "ComponentSet":
        return cls(f.grid, f.amplitudes[None, :])

    def rescaled(self) -> "ComponentSet":
        """The same mixture scaled by one constant so that the trace is 1."""
        t = self.trace
        if not t > 0:
            raise DegenerateInputError("all components vanish; nothing overlaps the field")
        return ComponentSet(self.grid, self.amplitudes / np.sqrt(t))


def component_windows(grid: Grid, spec: DecohererSpec) -> np.ndarray:
    """Window functions, one row per component."""
    lo, hi = spec.window
    x = grid.points
    if spec.model == "gaussian":
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        m = int(np.floor(half / spec.x0 + 1e-9))
        centers = mid + np.arange(-m, m + 1) * spec.x0
        return np.exp(-(((x[None, :] - centers[:, None]) / (np.sqrt(2) * spec.delta0)) ** 2))

    count = max(1, int(np.ceil((hi - lo) / spec.w - 1e-9)))
    inside = _inside(grid, lo, hi)
    cell = np.clip(np.floor((x - lo) / spec.w).astype(int), 0, count - 1)
    windows = np.zeros((count, grid.n))
    windows[cell[inside], np.flatnonzero(inside)] = 1.0
    return windows


def decompose(f: WaveField, spec: DecohererSpec) -> ComponentSet:
    """Cut `f` into windowed components phi_n = psi * window_n, rescaled to unit trace."""
    lo, hi = spec.window
    if not f.grid.covers(lo, hi):
        raise ConfigError("slit-plane grid does not cover the decoherer window")
    windows = component_windows(f.grid, spec)
    return ComponentSet(f.grid, windows * f.amplitudes[None, :]).rescaled()


def mixture_intensity(c: ComponentSet, amplitudes: Optional[np.ndarray] = None) -> np.ndarray:
    """sum_n (1/N)|f_n|^2 for the given (propagated) rows, no cross terms."""
    rows = c.amplitudes if amplitudes is None else amplitudes
    return (np.abs(rows) ** 2).sum(axis=0) / rows.shape[0]
