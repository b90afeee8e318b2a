# Named experiments shipped in presets/, pinned to the published setup.
import pathlib
from typing import Union

from src.errors import ConfigError
from src.utils_io import PRESETS, ROOT

PRESET_FILES = {
    # entropy before/after dephaser and decoherer
    "entropy_stages": "entropy_stages.yml",
    # entropy vs transverse coherence length
    "coherence_sweep": "coherence_sweep.yml",
    # seed-paired single realizations
    "paired_realizations": "paired_realizations.yml",
    # ensembles for the correlation analysis
    "dephaser_ensemble": "dephaser_ensemble.yml",
    "decoherer_ensemble": "decoherer_ensemble.yml",
    # dephaser over one slit only; the method should fail
    "control_single_slit": "control_single_slit.yml",
}
# short names
ALIASES = {
    "fig3": "entropy_stages",
    "fig4": "coherence_sweep",
    "fig5": "paired_realizations",
    "fig6a": "dephaser_ensemble",
    "fig6b": "decoherer_ensemble",
}
DEFAULT = ROOT / "config.yml"


def resolve(name_or_path: Union[str, pathlib.Path, None]) -> pathlib.Path:
    """A preset name or a config path -> config path."""
    if name_or_path is None:
        return DEFAULT
    key = str(name_or_path).strip()
    key = ALIASES.get(key, key)
    if key in PRESET_FILES:
        return PRESETS / PRESET_FILES[key]
    path = pathlib.Path(key)
    if path.suffix in (".yml", ".yaml") or path.exists():
        return path
    raise ConfigError(f"{key!r} is neither a config file nor a preset ({', '.join(sorted({**PRESET_FILES, **ALIASES}))})")
