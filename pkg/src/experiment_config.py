"""Experiment configuration: YAML sections -> frozen dataclasses in SI units.

Lengths accept unit suffixes ("150 nm", "24 cm"), energies "eV"/"keV".
Every key is optional and defaults to the published setup; unknown
sections or keys are rejected.
"""
import pathlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import numpy as np

from src.correlation import ClassifierThresholds
from src.disturbance import DecohererSpec, DephaserSpec
from src.errors import ConfigError
from src.fields import Grid, make_grid
from src.optics import OpticalParams
from src.utils_io import digest, load_yaml, parse_energy, parse_float, parse_length

MODES = ("none", "dephaser", "decoherer", "single_slit_dephaser")

OPTICAL_LENGTHS = ("L1", "L2", "slit_separation", "slit_width", "surface_window", "source_width")
NUMERIC_COUNTS = ("n_src", "n_det", "n_source")
NUMERIC_LENGTHS = ("detector_span", "source_span")
DEPHASER_LENGTHS = ("sigma_mean", "sigma_std", "sigma_min")
DECOHERER_LENGTHS = ("delta0", "x0", "w")
THRESHOLD_KEYS = ("r_hi", "r_lo", "f_hi", "f_lo", "epsilon")

# default coherence lengths of the entropy sweep: d/8 .. 8D
DEFAULT_SWEEP = (6.25e-9, 12.5e-9, 25e-9, 50e-9, 100e-9, 150e-9, 300e-9, 600e-9, 1200e-9)


@dataclass(frozen=True)
class Numerics:
    n_src: int = 4096
    n_det: int = 2049
    detector_span: float = 1.2e-3
    n_source: int = 2049
    source_span: float = 60e-6

    def __post_init__(self):
        for name in NUMERIC_COUNTS:
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be at least 2")
        if self.n_det % 2 != 1:
            raise ConfigError(f"n_det must be odd for a symmetric detector grid, got {self.n_det}")
        for name in NUMERIC_LENGTHS:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def detector_grid(self) -> Grid:
        return make_grid(0.0, self.detector_span, self.n_det)


@dataclass(frozen=True)
class SweepSpec:
    w_values: tuple = DEFAULT_SWEEP

    def __post_init__(self):
        w = np.asarray(self.w_values, dtype=float)
        if w.size == 0 or np.any(w <= 0):
            raise ConfigError("sweep w_values must be a non-empty list of positive lengths")
        if np.any(np.diff(w) < 0):
            raise ConfigError("sweep w_values must be sorted ascending")


@dataclass(frozen=True)
class ExperimentConfig:
    optical: OpticalParams = field(default_factory=OpticalParams)
    numerics: Numerics = field(default_factory=Numerics)
    mode: str = "none"
    dephaser: DephaserSpec = field(default_factory=DephaserSpec)
    decoherer: DecohererSpec = field(default_factory=DecohererSpec)
    n_realizations: int = 1
    master_seed: int = 0
    paired_seeds: bool = True
    classifier: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if int(self.n_realizations) != self.n_realizations or self.n_realizations < 1:
            raise ConfigError(f"n_realizations must be a positive integer, got {self.n_realizations}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        lo, hi = self.optical.slit_centers
        half = self.optical.slit_width / 2
        for name, window in (("dephaser", self.dephaser.window), ("decoherer", self.decoherer.window)):
            if window[0] > lo - half or window[1] < hi + half:
                raise ConfigError(f"{name} window {window} does not cover both slits")

    def to_dict(self) -> Dict[str, Any]:
        """Canonical form: plain JSON types, lengths in meters, energy in eV."""
        o, n, dp, dc, c = self.optical, self.numerics, self.dephaser, self.decoherer, self.classifier
        return {
            "experiment": {
                "mode": self.mode,
                "n_realizations": int(self.n_realizations),
                "master_seed": int(self.master_seed),
                "paired_seeds": bool(self.paired_seeds),
            },
            "optical": {"energy": float(o.energy_ev), **{k: float(getattr(o, k)) for k in OPTICAL_LENGTHS}},
            "numerics": {
                **{k: int(getattr(n, k)) for k in NUMERIC_COUNTS},
                **{k: float(getattr(n, k)) for k in NUMERIC_LENGTHS},
            },
            "dephaser": {
                "n_gaussians": int(dp.n_gaussians),
                "amp_low": float(dp.amp_low),
                "amp_high": float(dp.amp_high),
                **{k: float(getattr(dp, k)) for k in DEPHASER_LENGTHS},
                "window": [float(v) for v in dp.window],
            },
            "decoherer": {
                "model": dc.model,
                **{k: float(getattr(dc, k)) for k in DECOHERER_LENGTHS},
                "window": [float(v) for v in dc.window],
            },
            "classifier": {k: float(getattr(c, k)) for k in THRESHOLD_KEYS},
            "sweep": {"w_values": [float(v) for v in self.sweep.w_values]},
        }

    @property
    def digest(self) -> str:
        return digest(self.to_dict())

    @classmethod
    def from_dict(cls, raw: Optional[Dict[str, Any]]) -> "ExperimentConfig":
        raw = raw or {}
        _reject_unknown(raw, ("experiment", "optical", "numerics", "dephaser", "decoherer", "classifier", "sweep"), "config")
        exp = _section(raw, "experiment", ("mode", "n_realizations", "master_seed", "paired_seeds"))
        opt = _section(raw, "optical", ("energy",) + OPTICAL_LENGTHS)
        num = _section(raw, "numerics", NUMERIC_COUNTS + NUMERIC_LENGTHS)
        dep = _section(raw, "dephaser", ("n_gaussians", "amp_low", "amp_high", "window") + DEPHASER_LENGTHS)
        dec = _section(raw, "decoherer", ("model", "window") + DECOHERER_LENGTHS)
        cls_ = _section(raw, "classifier", THRESHOLD_KEYS)
        swp = _section(raw, "sweep", ("w_values",))

        optical_kwargs = {k: parse_length(opt[k]) for k in OPTICAL_LENGTHS if k in opt}
        if "energy" in opt:
            optical_kwargs["energy_ev"] = parse_energy(opt["energy"])
        optical = OpticalParams(**optical_kwargs)
        half = optical.surface_window / 2
        default_window = (-half, half)

        numerics = Numerics(
            **{k: _parse_int(num[k], k) for k in NUMERIC_COUNTS if k in num},
            **{k: parse_length(num[k]) for k in NUMERIC_LENGTHS if k in num},
        )
        dephaser = DephaserSpec(
            **({"n_gaussians": _parse_int(dep["n_gaussians"], "n_gaussians")} if "n_gaussians" in dep else {}),
            **{k: parse_float(dep[k]) for k in ("amp_low", "amp_high") if k in dep},
            **{k: parse_length(dep[k]) for k in DEPHASER_LENGTHS if k in dep},
            window=_parse_window(dep.get("window"), default_window),
        )
        decoherer = DecohererSpec(
            **({"model": str(dec["model"])} if "model" in dec else {}),
            **{k: parse_length(dec[k]) for k in DECOHERER_LENGTHS if k in dec},
            window=_parse_window(dec.get("window"), default_window),
        )
        classifier = ClassifierThresholds(**{k: parse_float(cls_[k]) for k in THRESHOLD_KEYS if k in cls_})
        if "w_values" in swp and not isinstance(swp["w_values"], (list, tuple)):
            raise ConfigError("sweep.w_values must be a list")
        sweep = SweepSpec(tuple(parse_length(v) for v in swp["w_values"])) if "w_values" in swp else SweepSpec()

        paired = exp.get("paired_seeds", True)
        if not isinstance(paired, bool):
            raise ConfigError(f"experiment.paired_seeds must be true or false, got {paired!r}")
        return cls(
            optical=optical,
            numerics=numerics,
            mode=str(exp.get("mode", "none")),
            dephaser=dephaser,
            decoherer=decoherer,
            n_realizations=_parse_int(exp.get("n_realizations", 1), "n_realizations"),
            master_seed=_parse_int(exp.get("master_seed", 0), "master_seed"),
            paired_seeds=paired,
            classifier=classifier,
            sweep=sweep,
        )


def _reject_unknown(mapping: Dict[str, Any], allowed, where: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(map(str, unknown))}")


def _section(raw: Dict[str, Any], name: str, allowed) -> Dict[str, Any]:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    _reject_unknown(sec, allowed, f"section {name!r}")
    return sec


def _parse_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    try:
        return int(value)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {value!r}") from e


def _parse_window(value: Any, default: tuple[float, float]) -> tuple[float, float]:
    if value is None:
        return default
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"window must be a [lo, hi] pair, got {value!r}")
    return (parse_length(value[0]), parse_length(value[1]))


def load_config(path: Union[str, pathlib.Path]) -> ExperimentConfig:
    return ExperimentConfig.from_dict(load_yaml(pathlib.Path(path)))
