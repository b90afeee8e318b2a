"""Uniform 1-D grids, complex wavefields and intensity patterns.

All lengths are meters. Amplitudes carry units of 1/sqrt(m) so that the
trapezoid integral of |psi|^2 over the grid is a dimensionless probability.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from src.errors import ConfigError, DegenerateInputError, ShapeError


@dataclass(frozen=True)
class Grid:
    center: float
    span: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"grid needs at least 2 points, got n={self.n}")
        if not self.span > 0:
            raise ConfigError(f"grid span must be positive, got {self.span}")

    @property
    def dx(self) -> float:
        return self.span / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        # center + (i - (n-1)/2)*dx keeps exact +/- pairs on grids centered at 0
        return self.center + (np.arange(self.n) - (self.n - 1) / 2) * self.dx

    @property
    def is_symmetric(self) -> bool:
        return self.center == 0 and self.n % 2 == 1

    @property
    def lower(self) -> float:
        return self.center - self.span / 2

    @property
    def upper(self) -> float:
        return self.center + self.span / 2

    def covers(self, lo: float, hi: float) -> bool:
        tol = 1e-9 * self.dx
        return self.lower - tol <= lo and hi <= self.upper + tol

    def integrate(self, values: np.ndarray) -> float:
        return float(trapezoid(values, dx=self.dx))

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.n, self.dx)
        w[0] = w[-1] = self.dx / 2
        return w


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class WaveField:
    grid: Grid
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n,):
            raise ShapeError(f"{amps.shape[0] if amps.ndim else 0} amplitudes for a {self.grid.n}-point grid")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @cached_property
    def norm(self) -> float:
        return self.grid.integrate(np.abs(self.amplitudes) ** 2)


@dataclass(frozen=True, eq=False)
class IntensityPattern:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ShapeError(f"pattern of {vals.size} values for a {self.grid.n}-point grid")
        if np.any(vals < 0):
            raise DegenerateInputError("intensity pattern has negative values")
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def total(self) -> float:
        return self.grid.integrate(self.values)


def make_grid(center: float, span: float, n: int) -> Grid:
    return Grid(float(center), float(span), int(n))


def require_same_grid(a: Grid, b: Grid, what: str = "operands") -> None:
    if a != b:
        raise ShapeError(f"{what} live on different grids: {a} vs {b}")


def normalize(f: WaveField) -> WaveField:
    total = f.norm
    if not total > 0:
        raise DegenerateInputError("cannot normalize a zero-norm field")
    return WaveField(f.grid, f.amplitudes / np.sqrt(total))


def intensity(f: WaveField) -> IntensityPattern:
    return IntensityPattern(f.grid, np.abs(f.amplitudes) ** 2)


def normalize_pattern(p: IntensityPattern) -> IntensityPattern:
    total = p.total
    if not total > 0:
        raise DegenerateInputError("cannot normalize an all-zero intensity pattern")
    return IntensityPattern(p.grid, p.values / total)

