"""Density matrices, von Neumann entropy and the entropy-vs-coherence-length sweep."""
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional

import numpy as np
import pandas as pd
from scipy.special import xlogy

from src.disturbance import ComponentSet, DecohererSpec, decompose
from src.errors import ConfigError, NumericalValidityError
from src.fields import Grid, WaveField
from src.optics import OpticalParams, post_slit_field, propagate_stack

CLAMP_TOLERANCE = 1e-10
PSD_TOLERANCE = 1e-6

# EntropyCurve: DataFrame with columns w_m, S_nats, model
ENTROPY_COLUMNS = ["w_m", "S_nats", "model"]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """rho_ij = sum_n (1/N) sqrt(w_i) phi_n(x_i) conj(sqrt(w_j) phi_n(x_j)).

    The quadrature weights w are folded in symmetrically, so the matrix
    eigenvalues are those of the integral operator and sum to 1.
    """

    grid: Grid
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex, copy=True)
        if rho.shape != (self.grid.n, self.grid.n):
            raise ConfigError(f"density matrix must be {self.grid.n}x{self.grid.n}, got {rho.shape}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def check(self) -> None:
        if np.max(np.abs(self.rho - self.rho.conj().T)) > 1e-12:
            raise NumericalValidityError("density matrix is not Hermitian")
        if abs(self.trace - 1) > 1e-10:
            raise NumericalValidityError(f"density matrix trace is {self.trace!r}, expected 1")
        if np.linalg.eigvalsh(self.rho).min() < -CLAMP_TOLERANCE:
            raise NumericalValidityError("density matrix is not positive semidefinite")


def _weighted_rows(c: ComponentSet) -> np.ndarray:
    return c.amplitudes * np.sqrt(c.grid.weights())[None, :]


def build_density(c: ComponentSet) -> DensityMatrix:
    b = _weighted_rows(c)
    rho = (b.T @ b.conj()) * c.weight
    return DensityMatrix(c.grid, (rho + rho.conj().T) / 2)


def entropy_from_eigenvalues(eigenvalues: np.ndarray) -> float:
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.min() < -PSD_TOLERANCE:
        raise NumericalValidityError(
            f"eigenvalue {eigenvalues.min():.3e} below {-PSD_TOLERANCE:g}; the matrix is not PSD"
        )
    lam = np.clip(eigenvalues, 0.0, None)
    return max(0.0, float(-xlogy(lam, lam).sum()))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S = -sum lambda ln lambda in nats."""
    return entropy_from_eigenvalues(np.linalg.eigvalsh(rho.rho))


def gram_matrix(c: ComponentSet) -> np.ndarray:
    """G_mn = (1/N) <phi_m|phi_n>; shares the nonzero spectrum of rho."""
    b = _weighted_rows(c)
    cols = np.flatnonzero(np.any(b != 0, axis=0))
    b = b[:, cols]
    g = (b.conj() @ b.T) * c.weight
    return (g + g.conj().T) / 2


def gram_entropy(c: ComponentSet) -> float:
    return entropy_from_eigenvalues(np.linalg.eigvalsh(gram_matrix(c)))


def detector_entropy(c: ComponentSet, dst: Grid, z: float, wavelength: float) -> float:
    """Entropy of the mixture after every component is propagated to `dst`."""
    propagated = ComponentSet(dst, propagate_stack(c.grid, c.amplitudes, dst, z, wavelength))
    # the detector grid clips the far tails, so renormalize
    return gram_entropy(propagated.rescaled())


def shannon_tophat(d: float, w: float) -> float:
    """ln(2d/w): each of the 2d/w top-hats covering the slits is hit with p = w/2d."""
    if not 0 < w <= 2 * d:
        raise ConfigError(f"top-hat width must satisfy 0 < w <= 2d, got w={w}, d={d}")
    return float(np.log(2 * d / w))


def _check_sweep(w_values: Iterable[float]) -> np.ndarray:
    w = np.asarray(list(w_values), dtype=float)
    if w.size == 0:
        raise ConfigError("entropy sweep needs at least one w value")
    if np.any(w <= 0):
        raise ConfigError("entropy sweep w values must be positive")
    if np.any(np.diff(w) < 0):
        raise ConfigError("entropy sweep w values must be sorted ascending")
    return w


def entropy_sweep(
    params: OpticalParams,
    model: Literal["gaussian", "tophat"],
    w_values: Iterable[float],
    slit_field: Optional[WaveField] = None,
    window: Optional[tuple[float, float]] = None,
    include_shannon: bool = True,
) -> pd.DataFrame:
    """Entropy of the decohered post-slit state for each coherence length.

    Rows for `model` are followed by the analytic Shannon rows for w <= 2d.
    """
    w = _check_sweep(w_values)
    if slit_field is None:
        slit_field = post_slit_field(params)
    if window is None:
        window = (-params.surface_window / 2, params.surface_window / 2)

    rows = []
    for wi in w:
        spec = DecohererSpec.for_coherence_length(model, float(wi), window=window)
        rows.append({"w_m": float(wi), "S_nats": gram_entropy(decompose(slit_field, spec)), "model": model})
    for wi in (w if include_shannon else ()):
        if wi <= 2 * params.slit_width:
            rows.append({"w_m": float(wi), "S_nats": shannon_tophat(params.slit_width, float(wi)), "model": "shannon"})
    return pd.DataFrame(rows, columns=ENTROPY_COLUMNS)
