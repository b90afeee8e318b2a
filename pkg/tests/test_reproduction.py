"""End-to-end runs at the published setup. Deselected by default: pytest -m slow."""
from dataclasses import replace

import pytest

from src import presets
from src.correlation import Verdict, analyze, ensemble_mean, fringe_visibility
from src.ensemble import pair_visibility, realization_seeds, run_ensemble, run_pair, run_realization
from src.experiment_config import load_config

pytestmark = pytest.mark.slow

N_REALIZATIONS = 200


def _preset(name: str, n: int = N_REALIZATIONS):
    return replace(load_config(presets.resolve(name)), n_realizations=n)


def test_dephaser_ensemble_recovers_the_fringes():
    cfg = _preset("dephaser_ensemble")
    r = analyze(run_ensemble(cfg, n_jobs=-1), cfg.optical, cfg.classifier)
    assert r.pearson_r >= 0.9
    assert r.verdict is Verdict.DEPHASING


@pytest.fixture(scope="module")
def decoherer_result():
    cfg = _preset("decoherer_ensemble")
    return analyze(run_ensemble(cfg, n_jobs=-1), cfg.optical, cfg.classifier)


def test_decoherer_ensemble_loses_most_fringe_power(decoherer_result):
    r = decoherer_result
    assert r.fringe_power_ratio < 0.15
    assert r.pearson_r < 0.9
    assert r.verdict is not Verdict.DEPHASING


@pytest.mark.xfail(
    strict=True,
    reason="100 nm windows overlap both slits: the single-slit envelope and partial fringes survive, see DESIGN.md",
)
def test_decoherer_ensemble_is_classified_as_decoherence(decoherer_result):
    assert decoherer_result.verdict is Verdict.DECOHERENCE


def test_single_slit_control_is_not_mistaken_for_dephasing():
    cfg = _preset("control_single_slit")
    r = analyze(run_ensemble(cfg, n_jobs=-1), cfg.optical, cfg.classifier)
    assert r.verdict is not Verdict.DEPHASING


def test_dephaser_mean_is_blurred():
    cfg = _preset("dephaser_ensemble")
    clean = run_realization(replace(cfg, mode="none"), 0).pattern
    mean = ensemble_mean(run_ensemble(cfg, n_jobs=-1))
    assert fringe_visibility(mean, cfg.optical) < fringe_visibility(clean, cfg.optical)


def test_single_shot_dephaser_fringes_are_sharper():
    cfg = _preset("paired_realizations", 100)
    sharper = 0
    for seed in realization_seeds(cfg):
        vis = pair_visibility(cfg, run_pair(cfg, seed))
        sharper += vis["dephaser"] > vis["decoherer"]
    assert sharper >= 90
