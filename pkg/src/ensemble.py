"""Realizations and ensembles: source -> L1 -> slits -> disturbance -> L2 -> detector.

Every realization draws from its own PCG64 stream, seeded by a stateless
SplitMix64 mix of (master seed, index). The ensemble is therefore a pure
function of the configuration, whatever the number of workers.
"""
import hashlib
import pathlib
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src.correlation import Ensemble, fringe_visibility
from src.density import detector_entropy, gram_entropy
from src.disturbance import ComponentSet, PhaseField, apply_phase, decompose, mixture_intensity, sample_dephaser, suppress_phase
from src.errors import ConfigError, FringelabError, StorageError
from src.experiment_config import ExperimentConfig
from src.fields import IntensityPattern, WaveField, make_grid, normalize_pattern
from src.optics import OpticalParams, post_slit_field, propagate_stack
from src.utils_io import digest, read_csv, read_json, write_csv, write_json

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
ENSEMBLE_FORMAT = "fringelab-ensemble/1"


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """mix64(mix64(master) + (index + 1) * gamma).

    gamma is odd, so distinct indices (and, for a fixed index, distinct
    masters) land on distinct inputs of the bijection: no collisions.
    """
    if index < 0:
        raise ConfigError(f"realization index must be non-negative, got {index}")
    return mix64((mix64(master) + (index + 1) * GOLDEN_GAMMA) & MASK64)


def derive_seeds(master: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized derive_seed over uint64 arrays."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(mix64(master)) + (idx + np.uint64(1)) * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def mode_master(cfg: ExperimentConfig) -> int:
    """Master seed actually used for `cfg.mode`; paired modes share one."""
    if cfg.paired_seeds:
        return cfg.master_seed
    salt = int.from_bytes(hashlib.sha256(cfg.mode.encode("utf-8")).digest()[:8], "little")
    return mix64(cfg.master_seed ^ salt)


def realization_seeds(cfg: ExperimentConfig) -> List[int]:
    master = mode_master(cfg)
    return [int(s) for s in derive_seeds(master, np.arange(cfg.n_realizations))]


@dataclass(frozen=True, eq=False)
class RealizationRecord:
    seed: int
    pattern: IntensityPattern = field(repr=False)
    entropy_slit_plane: float = 0.0


@lru_cache(maxsize=4)
def _slit_field(optical: OpticalParams, n_src: int, n_source: int, source_span: float) -> WaveField:
    return post_slit_field(optical, n_src=n_src, n_source=n_source, source_span=source_span)


def slit_field(cfg: ExperimentConfig) -> WaveField:
    n = cfg.numerics
    return _slit_field(cfg.optical, n.n_src, n.n_source, n.source_span)


def sample_phase(cfg: ExperimentConfig, rng: np.random.Generator, psi: WaveField) -> PhaseField:
    theta = sample_dephaser(cfg.dephaser, rng, psi.grid)
    if cfg.mode == "single_slit_dephaser":
        # dephaser switched off over the slit at +D/2
        c, half = cfg.optical.slit_separation / 2, cfg.optical.slit_width / 2
        theta = suppress_phase(theta, c - half, c + half)
    return theta


def slit_plane_state(cfg: ExperimentConfig, seed: int) -> ComponentSet:
    """The (possibly mixed) state right behind the slits for one realization."""
    psi = slit_field(cfg)
    if cfg.mode == "none":
        return ComponentSet.pure(psi).rescaled()
    rng = np.random.Generator(np.random.PCG64(seed))
    psi = apply_phase(psi, sample_phase(cfg, rng, psi))
    if cfg.mode == "decoherer":
        return decompose(psi, cfg.decoherer)
    return ComponentSet.pure(psi).rescaled()


def run_realization(cfg: ExperimentConfig, seed: int) -> RealizationRecord:
    state = slit_plane_state(cfg, seed)
    dst = cfg.numerics.detector_grid()
    o = cfg.optical
    # components propagate separately; their intensities add without cross terms
    amplitudes = propagate_stack(state.grid, state.amplitudes, dst, o.L2, o.wavelength)
    pattern = normalize_pattern(IntensityPattern(dst, mixture_intensity(state, amplitudes)))
    return RealizationRecord(seed=int(seed), pattern=pattern, entropy_slit_plane=gram_entropy(state))


def _run_indexed(cfg: ExperimentConfig, index: int, seed: int) -> RealizationRecord:
    try:
        return run_realization(cfg, seed)
    except FringelabError as e:
        raise type(e)(f"realization {index} (seed {seed}) failed: {e}") from e


def run_records(cfg: ExperimentConfig, n_jobs: int = 1, progress: bool = False) -> List[RealizationRecord]:
    seeds = realization_seeds(cfg)
    tasks = tqdm(enumerate(seeds), total=len(seeds), desc="realizations", disable=not progress)
    if n_jobs == 1 or len(seeds) == 1:
        return [_run_indexed(cfg, i, s) for i, s in tasks]
    # results come back in submission order regardless of completion order
    return Parallel(n_jobs=n_jobs, backend="loky", verbose=0)(delayed(_run_indexed)(cfg, i, s) for i, s in tasks)


def assemble(cfg: ExperimentConfig, records: Sequence[RealizationRecord]) -> Ensemble:
    grid = cfg.numerics.detector_grid()
    patterns = np.stack([r.pattern.values for r in records])
    return Ensemble(grid, patterns, tuple(r.seed for r in records), cfg.digest)


def run_ensemble(cfg: ExperimentConfig, n_jobs: int = 1, progress: bool = False) -> Ensemble:
    return assemble(cfg, run_records(cfg, n_jobs=n_jobs, progress=progress))


def run_pair(cfg: ExperimentConfig, seed: int) -> tuple[RealizationRecord, RealizationRecord]:
    """Dephaser and decoherer realizations driven by the same phase sample."""
    dephased = run_realization(replace(cfg, mode="dephaser"), seed)
    decohered = run_realization(replace(cfg, mode="decoherer"), seed)
    return dephased, decohered


def pair_visibility(cfg: ExperimentConfig, pair: tuple[RealizationRecord, RealizationRecord]) -> Dict[str, Any]:
    dephased, decohered = pair
    return {
        "seed": int(dephased.seed),
        "dephaser": fringe_visibility(dephased.pattern, cfg.optical),
        "decoherer": fringe_visibility(decohered.pattern, cfg.optical),
    }


def entropy_report(cfg: ExperimentConfig, seed: int) -> Dict[str, Any]:
    """Von Neumann entropy (nats) of the electron state along the apparatus."""
    psi = slit_field(cfg)
    rng = np.random.Generator(np.random.PCG64(seed))
    dephased = apply_phase(psi, sample_dephaser(cfg.dephaser, rng, psi.grid))
    components = decompose(dephased, cfg.decoherer)
    o = cfg.optical
    return {
        "seed": int(seed),
        "before": gram_entropy(ComponentSet.pure(psi).rescaled()),
        "after_dephaser": gram_entropy(ComponentSet.pure(dephased).rescaled()),
        "after_decoherer": gram_entropy(components),
        "detector_decoherer": detector_entropy(components, cfg.numerics.detector_grid(), o.L2, o.wavelength),
        "n_components": components.size,
        "coherence_length_m": cfg.decoherer.coherence_length,
    }


def _column(i: int) -> str:
    return f"r{i:05d}"


def save_ensemble(e: Ensemble, directory: Union[str, pathlib.Path], cfg: Optional[ExperimentConfig] = None) -> pathlib.Path:
    """manifest.json + patterns.csv (x_m, r00000, r00001, ...)."""
    directory = pathlib.Path(directory)
    frame = pd.DataFrame(e.patterns.T, columns=[_column(i) for i in range(e.size)])
    frame.insert(0, "x_m", e.grid.points)
    write_csv(frame, directory / "patterns.csv")
    write_json(
        {
            "format": ENSEMBLE_FORMAT,
            "n_realizations": e.size,
            "grid": {"center": e.grid.center, "span": e.grid.span, "n": e.grid.n},
            "seeds": list(e.seeds),
            "config_digest": e.config_digest,
            "config": None if cfg is None else cfg.to_dict(),
        },
        directory / "manifest.json",
    )
    return directory


def load_ensemble(directory: Union[str, pathlib.Path]) -> Ensemble:
    directory = pathlib.Path(directory)
    manifest = read_json(directory / "manifest.json")
    frame = read_csv(directory / "patterns.csv")
    if "x_m" not in frame.columns or frame.shape[1] < 2:
        raise StorageError(f"{directory / 'patterns.csv'} needs an x_m column and at least one pattern column")
    try:
        patterns = frame.drop(columns="x_m").to_numpy(dtype=float).T
    except ValueError as e:
        raise StorageError(f"non-numeric values in {directory / 'patterns.csv'}") from e
    x = frame["x_m"].to_numpy(dtype=float)
    if not (np.all(np.isfinite(patterns)) and np.all(np.isfinite(x))):
        raise StorageError(f"missing or non-finite values in {directory / 'patterns.csv'}")

    grid_spec = manifest.get("grid")
    if grid_spec is not None:
        try:
            grid = make_grid(grid_spec["center"], grid_spec["span"], grid_spec["n"])
        except (KeyError, TypeError) as e:
            raise StorageError(f"malformed grid in {directory / 'manifest.json'}") from e
        if grid.n != len(x) or not np.allclose(grid.points, x, rtol=0, atol=1e-6 * grid.dx):
            raise StorageError("patterns.csv x_m column does not match the manifest grid")
    else:
        if len(x) < 3 or not np.isclose(x[0], -x[-1], rtol=0, atol=1e-6 * abs(x[1] - x[0])):
            raise StorageError("patterns.csv x_m column is not a symmetric grid")
        grid = make_grid(0.0, x[-1] - x[0], len(x))

    n = manifest.get("n_realizations", patterns.shape[0])
    if n != patterns.shape[0]:
        raise StorageError(f"manifest lists {n} realizations, patterns.csv holds {patterns.shape[0]}")
    cfg = manifest.get("config")
    stored = manifest.get("config_digest", "")
    if cfg is not None and digest(cfg) != stored:
        raise StorageError(f"config digest mismatch in {directory / 'manifest.json'}")
    try:
        return Ensemble(grid, patterns, tuple(manifest.get("seeds") or ()), stored or "")
    except FringelabError as e:
        raise StorageError(f"invalid ensemble in {directory}: {e}") from e


def load_ensemble_config(directory: Union[str, pathlib.Path]) -> Optional[ExperimentConfig]:
    """Configuration stored with an ensemble, if any."""
    cfg = read_json(pathlib.Path(directory) / "manifest.json").get("config")
    if cfg is None:
        return None
    # the canonical dict is itself a valid config in SI units
    return ExperimentConfig.from_dict(cfg)
