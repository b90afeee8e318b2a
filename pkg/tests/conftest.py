import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.experiment_config import ExperimentConfig  # noqa: E402

# coarse grids: same physics, a fraction of the cost
FAST_NUMERICS = {
    "n_src": 1024,
    "n_det": 513,
    "detector_span": "1.2 mm",
    "n_source": 1025,
    "source_span": "60 um",
}


def fast_raw(mode: str = "none", n_realizations: int = 1, **sections) -> dict:
    raw = {
        "experiment": {"mode": mode, "n_realizations": n_realizations, "master_seed": 1670},
        "numerics": dict(FAST_NUMERICS),
    }
    for name, values in sections.items():
        raw.setdefault(name, {}).update(values)
    return raw


def fast_config(mode: str = "none", n_realizations: int = 1, **sections) -> ExperimentConfig:
    return ExperimentConfig.from_dict(fast_raw(mode, n_realizations, **sections))


@pytest.fixture
def make_config():
    return fast_config


@pytest.fixture
def write_config(tmp_path):
    import yaml

    def _write(name: str = "fast.yml", **kwargs) -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(fast_raw(**kwargs)), encoding="utf-8")
        return path

    return _write
