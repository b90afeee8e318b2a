"""Fresnel propagation, slit transmission, source preparation and the far-field reference."""
import warnings
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import constants

from src.errors import ConfigError, ShapeError
from src.fields import Grid, WaveField, make_grid, normalize, require_same_grid

# kernel block size, in complex elements
BLOCK_ELEMENTS = 1 << 21
FRESNEL_MARGIN = 100.0


def de_broglie_wavelength(energy_ev: float) -> float:
    """Non-relativistic electron wavelength h / sqrt(2 m E)."""
    if not energy_ev > 0:
        raise ConfigError(f"electron energy must be positive, got {energy_ev} eV")
    return constants.h / np.sqrt(2 * constants.m_e * energy_ev * constants.e)


@dataclass(frozen=True)
class OpticalParams:
    energy_ev: float = 1670.0
    L1: float = 0.24
    L2: float = 0.25
    slit_separation: float = 150e-9
    slit_width: float = 50e-9
    surface_window: float = 500e-9
    source_width: float = 15e-6

    def __post_init__(self):
        for name in ("L1", "L2", "slit_separation", "slit_width", "surface_window", "source_width"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.slit_width < self.slit_separation:
            raise ConfigError("slit width must be smaller than the slit separation")
        if self.surface_window < self.slit_separation + self.slit_width:
            raise ConfigError("surface window must cover both slits (>= D + d)")
        de_broglie_wavelength(self.energy_ev)

    @property
    def wavelength(self) -> float:
        return de_broglie_wavelength(self.energy_ev)

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def fringe_period(self) -> float:
        """Direct-pattern two-slit fringe spacing lambda*L2/D."""
        return self.wavelength * self.L2 / self.slit_separation

    @property
    def envelope_null(self) -> float:
        """First single-slit null lambda*L2/d of the direct pattern."""
        return self.wavelength * self.L2 / self.slit_width

    @property
    def slit_centers(self) -> tuple[float, float]:
        return (-self.slit_separation / 2, self.slit_separation / 2)


@dataclass(frozen=True, eq=False)
class TransmissionMask:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex, copy=True)
        if vals.shape != (self.grid.n,):
            raise ShapeError(f"mask of {vals.size} values for a {self.grid.n}-point grid")
        if np.any(np.abs(vals) > 1 + 1e-12):
            raise ConfigError("transmission mask values must have modulus <= 1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def slit_mask(grid: Grid, centers: Sequence[float], width: float) -> TransmissionMask:
    if not width > 0:
        raise ConfigError(f"slit width must be positive, got {width}")
    x = grid.points
    open_ = np.zeros(grid.n, dtype=bool)
    for c in centers:
        if not grid.covers(c - width / 2, c + width / 2):
            raise ConfigError(f"slit at {c:.3e} m (width {width:.3e} m) is not contained in the grid")
        open_ |= np.abs(x - c) <= width / 2
    return TransmissionMask(grid, open_.astype(complex))


def double_slit_mask(grid: Grid, D: float, d: float) -> TransmissionMask:
    if not d < D:
        raise ConfigError("slit width must be smaller than the slit separation")
    return slit_mask(grid, (-D / 2, D / 2), d)


def apply_mask(f: WaveField, T: TransmissionMask) -> WaveField:
    require_same_grid(f.grid, T.grid, "field and mask")
    return WaveField(f.grid, f.amplitudes * T.values)


def _fresnel_sum(src: Grid, amplitudes: np.ndarray, dst: Grid, z: float, wavelength: float) -> np.ndarray:
    """C * sum_x' exp(ik(x-x')^2/2z) psi(x') dx' for every column of `amplitudes`.

    Rows of the kernel are built in blocks; the contraction uses einsum without
    BLAS so the result does not depend on the thread layout of the process.
    """
    n_fields = amplitudes.shape[1]
    out = np.zeros((dst.n, n_fields), dtype=complex)
    support = np.flatnonzero(np.any(amplitudes != 0, axis=1))
    if support.size == 0:
        return out

    k = 2 * np.pi / wavelength
    xs = src.points[support]
    xd = dst.points
    extent = max(abs(xd[0] - xs[-1]), abs(xd[-1] - xs[0]))
    if z < FRESNEL_MARGIN * extent:
        warnings.warn(
            f"z = {z:.3e} m is less than {FRESNEL_MARGIN:g} x the transverse extent {extent:.3e} m; "
            "the Fresnel approximation may not hold",
            RuntimeWarning,
            stacklevel=3,
        )
    prefactor = np.exp(1j * k * z) * np.sqrt(1 / (1j * wavelength * z)) * src.dx
    weighted = amplitudes[support]
    rows = max(1, BLOCK_ELEMENTS // support.size)
    for start in range(0, dst.n, rows):
        stop = min(start + rows, dst.n)
        sep = xd[start:stop, None] - xs[None, :]
        kernel = np.exp(1j * k * sep**2 / (2 * z))
        out[start:stop] = np.einsum("ds,sf->df", kernel, weighted, optimize=False)
    return prefactor * out


def _check_distance(z: float) -> None:
    if not z > 0:
        raise ConfigError(f"propagation distance must be positive, got {z}")


def propagate(f: WaveField, dst: Grid, z: float, wavelength: float) -> WaveField:
    """Fresnel propagation of `f` over distance `z` onto the grid `dst` by direct quadrature."""
    _check_distance(z)
    out = _fresnel_sum(f.grid, f.amplitudes[:, None], dst, z, wavelength)
    return WaveField(dst, out[:, 0])


def propagate_stack(src: Grid, amplitudes: np.ndarray, dst: Grid, z: float, wavelength: float) -> np.ndarray:
    """Propagate several fields sharing `src`; rows of `amplitudes` are fields."""
    _check_distance(z)
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.ndim != 2 or amplitudes.shape[1] != src.n:
        raise ShapeError(f"expected (fields, {src.n}) amplitudes, got {amplitudes.shape}")
    return _fresnel_sum(src, amplitudes.T, dst, z, wavelength).T


def source_wave(grid: Grid, w0: float) -> WaveField:
    """Normalized Gaussian whose intensity FWHM is `w0`, centered on the grid."""
    if not w0 > 0:
        raise ConfigError(f"source width must be positive, got {w0}")
    if grid.span < 3 * w0:
        raise ConfigError(f"source grid span {grid.span:.3e} m is narrower than 3 x w0 = {3 * w0:.3e} m")
    x = grid.points - grid.center
    return normalize(WaveField(grid, np.exp(-2 * np.log(2) * x**2 / w0**2)))


def incident_field(params: OpticalParams, slit_grid: Grid, source_grid: Grid) -> WaveField:
    """Source wave propagated over L1 onto the slit plane (before the mask)."""
    psi0 = source_wave(source_grid, params.source_width)
    return propagate(psi0, slit_grid, params.L1, params.wavelength)


def slit_plane_grid(params: OpticalParams, n: int) -> Grid:
    return make_grid(0.0, params.surface_window, n)


def farfield_reference(
    x,
    p: OpticalParams,
    mode: Literal["correlation", "direct"] = "correlation",
):
    """Normalized Fraunhofer double-slit intensity, 1 at x = 0.

    In correlation mode the symmetric coordinates (x, -x) double the baseline,
    so theta = 2x/L2; a direct detector pattern uses theta = x/L2.
    """
    if mode not in ("correlation", "direct"):
        raise ConfigError(f"unknown reference mode {mode!r}")
    x = np.asarray(x, dtype=float)
    theta = (2 * x if mode == "correlation" else x) / p.L2
    s = np.sin(theta) / p.wavelength
    out = np.sinc(p.slit_width * s) ** 2 * np.cos(np.pi * p.slit_separation * s) ** 2
    return float(out) if out.ndim == 0 else out


def post_slit_field(
    params: OpticalParams,
    n_src: int = 4096,
    n_source: int = 2049,
    source_span: Optional[float] = None,
) -> WaveField:
    """The wave just behind the double slit: source -> L1 -> mask."""
    slit_grid = slit_plane_grid(params, n_src)
    span = 4 * params.source_width if source_span is None else source_span
    psi = incident_field(params, slit_grid, make_grid(0.0, span, n_source))
    mask = double_slit_mask(slit_grid, params.slit_separation, params.slit_width)
    return apply_mask(psi, mask)
