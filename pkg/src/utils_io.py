import contextlib
import hashlib
import json
import math
import os
import pathlib
import re
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, Union

import pandas as pd

from src.errors import ConfigError, StorageError

ROOT = pathlib.Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
RUNS = DATA / "runs"
PRESETS = ROOT / "presets"

LOCK_NAME = ".fringelab.lock"

LENGTH_UNITS = {
    "pm": 1e-12,
    "nm": 1e-9,
    "um": 1e-6,
    "μm": 1e-6,
    "µm": 1e-6,
    "mm": 1e-3,
    "cm": 1e-2,
    "m": 1.0,
}
ENERGY_UNITS = {"ev": 1.0, "kev": 1e3}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*)?$")


def utc_now_str() -> str:
    return datetime.now(tz=timezone.utc).strftime("%Y-%m-%d %H:%M:%S UTC")


def load_yaml(path: pathlib.Path) -> Dict[str, Any]:
    import yaml

    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of sections")
    return data


def _parse_quantity(value: Any, units: Dict[str, float], kind: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"expected a {kind}, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"expected a {kind}, got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(f"cannot parse {kind} {value!r}")
    number, unit = m.group(1), (m.group(2) or "").strip()
    if not unit:
        return float(number)
    key = unit if unit in units else unit.lower()
    if key not in units:
        raise ConfigError(f"unknown {kind} unit {unit!r} in {value!r}")
    return float(number) * units[key]


def parse_length(value: Any) -> float:
    """'150 nm' -> 1.5e-07. Bare numbers are meters."""
    return _parse_quantity(value, LENGTH_UNITS, "length")


def parse_energy(value: Any) -> float:
    """'1670 eV' -> 1670.0. Bare numbers are eV."""
    return _parse_quantity(value, ENERGY_UNITS, "energy")


def parse_float(value: Any) -> float:
    # PyYAML reads "1e-6" (no dot) as a string
    try:
        out = float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"expected a number, got {value!r}") from e
    if not math.isfinite(out):
        raise ConfigError(f"expected a finite number, got {value!r}")
    return out


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def digest(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def write_csv(df: pd.DataFrame, path: pathlib.Path) -> pathlib.Path:
    """Full-precision CSV: single header row, comma delimiter, Unix newlines."""
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    return path


def read_csv(path: pathlib.Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as e:
        raise StorageError(f"missing file {path}") from e
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise StorageError(f"cannot read {path}: {e}") from e


def write_json(payload: Dict[str, Any], path: pathlib.Path) -> pathlib.Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    return path


def read_json(path: pathlib.Path) -> Dict[str, Any]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise StorageError(f"missing file {path}") from e
    except (OSError, ValueError) as e:
        raise StorageError(f"cannot read {path}: {e}") from e
    if not isinstance(payload, dict):
        raise StorageError(f"{path} does not hold a JSON object")
    return payload


@contextlib.contextmanager
def output_lock(directory: Union[str, pathlib.Path]) -> Iterator[pathlib.Path]:
    """Hold an exclusive lock file in `directory` for the duration of a command."""
    directory = pathlib.Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        fd = os.open(directory / LOCK_NAME, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise StorageError(f"output directory {directory} is locked by another run") from e
    except OSError as e:
        raise StorageError(f"cannot lock output directory {directory}: {e}") from e
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield directory
    finally:
        with contextlib.suppress(FileNotFoundError):
            (directory / LOCK_NAME).unlink()
