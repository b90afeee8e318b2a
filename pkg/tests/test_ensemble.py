import json

import numpy as np
import pandas as pd
import pytest

import src.ensemble as ensemble
from src.correlation import fringe_period
from src.density import gram_entropy
from src.errors import ConfigError, DegenerateInputError, StorageError
from src.experiment_config import ExperimentConfig
from src.ensemble import (
    derive_seed,
    derive_seeds,
    entropy_report,
    load_ensemble,
    load_ensemble_config,
    mode_master,
    pair_visibility,
    realization_seeds,
    run_ensemble,
    run_pair,
    run_realization,
    sample_phase,
    save_ensemble,
    slit_field,
    slit_plane_state,
)
from src.optics import propagate


def test_derive_seed_is_stateless_and_vectorizes():
    assert derive_seed(1670, 3) == derive_seed(1670, 3)
    assert derive_seed(1670, 3) != derive_seed(1670, 4)
    assert derive_seed(1670, 0) != derive_seed(1671, 0)
    idx = np.arange(1000)
    expected = [derive_seed(2**64 - 1, int(i)) for i in idx]
    assert derive_seeds(2**64 - 1, idx).tolist() == expected
    with pytest.raises(ConfigError):
        derive_seed(1670, -1)


def test_no_seed_collisions():
    seeds = derive_seeds(1670, np.arange(1_000_000, dtype=np.uint64))
    assert np.unique(seeds).size == seeds.size
    firsts = [derive_seed(m, 0) for m in range(100_000)]
    assert len(set(firsts)) == len(firsts)


def test_paired_modes_share_seeds(make_config):
    dep, dec = make_config("dephaser", 4), make_config("decoherer", 4)
    assert realization_seeds(dep) == realization_seeds(dec)
    unpaired = {"experiment": {"paired_seeds": False}}
    dep_u = make_config("dephaser", 4, **unpaired)
    dec_u = make_config("decoherer", 4, **unpaired)
    assert mode_master(dep_u) != mode_master(dec_u)
    assert realization_seeds(dep_u) != realization_seeds(dec_u)
    assert realization_seeds(dep_u) == realization_seeds(make_config("dephaser", 4, **unpaired))


def test_realization_pattern_is_normalized_and_reproducible(make_config):
    cfg = make_config("dephaser")
    a, b = run_realization(cfg, 42), run_realization(cfg, 42)
    assert a.pattern.grid.integrate(a.pattern.values) == pytest.approx(1.0, abs=1e-9)
    assert np.all(a.pattern.values >= 0)
    assert a.pattern.values.tobytes() == b.pattern.values.tobytes()
    assert run_realization(cfg, 43).pattern.values.tobytes() != a.pattern.values.tobytes()


def test_undisturbed_fringe_period(make_config):
    cfg = make_config("none")
    pattern = run_realization(cfg, 0).pattern
    assert fringe_period(pattern, cfg.optical) == pytest.approx(cfg.optical.fringe_period, abs=pattern.grid.dx)


def test_dephaser_keeps_the_state_pure(make_config):
    cfg = make_config("dephaser")
    for seed in realization_seeds(make_config("dephaser", 20)):
        assert run_realization(cfg, seed).entropy_slit_plane == pytest.approx(0.0, abs=1e-9)


def test_decoherer_mixes_the_state():
    cfg = ExperimentConfig.from_dict({"experiment": {"mode": "decoherer"}})
    s = run_realization(cfg, realization_seeds(cfg)[0]).entropy_slit_plane
    assert s > 0.5
    assert s < np.log(2)


def test_decoherer_pattern_has_no_cross_terms(make_config):
    cfg = make_config("decoherer")
    state = slit_plane_state(cfg, 9)
    dst = cfg.numerics.detector_grid()
    o = cfg.optical
    total = np.zeros(dst.n)
    for component in state.components:
        total += np.abs(propagate(component, dst, o.L2, o.wavelength).amplitudes) ** 2
    total /= dst.integrate(total)
    got = run_realization(cfg, 9).pattern.values
    np.testing.assert_allclose(got, total, rtol=0, atol=1e-9 * total.max())


def test_single_slit_dephaser_leaves_right_slit_alone(make_config):
    cfg = make_config("single_slit_dephaser")
    psi = slit_field(cfg)
    theta = sample_phase(cfg, np.random.Generator(np.random.PCG64(3)), psi)
    x = psi.grid.points
    D, d = cfg.optical.slit_separation, cfg.optical.slit_width
    right = np.abs(x - D / 2) <= d / 2
    left = np.abs(x + D / 2) <= d / 2
    assert np.all(theta.theta[right] == 0.0)
    assert np.any(theta.theta[left] != 0.0)


def test_single_realization_ensemble(make_config):
    cfg = make_config("dephaser", 1)
    e = run_ensemble(cfg)
    rec = run_realization(cfg, realization_seeds(cfg)[0])
    assert e.size == 1
    assert e.patterns[0].tobytes() == rec.pattern.values.tobytes()
    assert e.config_digest == cfg.digest


def test_parallel_matches_serial(make_config):
    cfg = make_config("dephaser", 3)
    serial, parallel = run_ensemble(cfg, n_jobs=1), run_ensemble(cfg, n_jobs=2)
    assert serial.seeds == parallel.seeds
    assert serial.patterns.tobytes() == parallel.patterns.tobytes()


def test_failure_names_the_realization(make_config, monkeypatch):
    cfg = make_config("dephaser", 3)
    bad = realization_seeds(cfg)[1]
    real = ensemble.run_realization

    def flaky(c, seed):
        if seed == bad:
            raise DegenerateInputError("all components vanish")
        return real(c, seed)

    monkeypatch.setattr(ensemble, "run_realization", flaky)
    with pytest.raises(DegenerateInputError, match=rf"realization 1 \(seed {bad}\)"):
        run_ensemble(cfg)


def test_save_and_load_are_lossless(make_config, tmp_path):
    cfg = make_config("dephaser", 3)
    e = run_ensemble(cfg)
    save_ensemble(e, tmp_path / "ens", cfg)
    back = load_ensemble(tmp_path / "ens")
    assert back.grid == e.grid
    assert back.seeds == e.seeds
    assert back.config_digest == cfg.digest
    assert back.patterns.tobytes() == e.patterns.tobytes()
    assert load_ensemble_config(tmp_path / "ens") == cfg


def test_load_rejects_damaged_ensembles(make_config, tmp_path):
    cfg = make_config("dephaser", 2)
    e = run_ensemble(cfg)

    missing = save_ensemble(e, tmp_path / "missing", cfg)
    (missing / "patterns.csv").unlink()
    with pytest.raises(StorageError):
        load_ensemble(missing)

    corrupt = save_ensemble(e, tmp_path / "corrupt", cfg)
    (corrupt / "patterns.csv").write_text("x_m,r00000\n0.0,not-a-number\n", encoding="utf-8")
    with pytest.raises(StorageError):
        load_ensemble(corrupt)

    tampered = save_ensemble(e, tmp_path / "tampered", cfg)
    manifest = json.loads((tampered / "manifest.json").read_text(encoding="utf-8"))
    manifest["config"]["experiment"]["master_seed"] += 1
    (tampered / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    with pytest.raises(StorageError):
        load_ensemble(tampered)

    with pytest.raises(StorageError):
        load_ensemble(tmp_path / "nowhere")


def test_external_stack_without_grid(tmp_path):
    x = np.linspace(-1e-3, 1e-3, 101)
    rng = np.random.default_rng(0)
    frame = pd.DataFrame({"x_m": x, "a": 1 + rng.random(101), "b": 1 + rng.random(101)})
    (tmp_path / "ext").mkdir()
    frame.to_csv(tmp_path / "ext" / "patterns.csv", index=False, float_format="%.17g")
    (tmp_path / "ext" / "manifest.json").write_text("{}", encoding="utf-8")
    e = load_ensemble(tmp_path / "ext")
    assert e.size == 2
    assert e.grid.n == 101
    assert e.seeds == ()
    assert load_ensemble_config(tmp_path / "ext") is None


def test_pair_uses_one_phase_sample(make_config):
    cfg = make_config("dephaser")
    dephased, decohered = run_pair(cfg, 11)
    assert dephased.seed == decohered.seed == 11
    assert dephased.pattern.values.tobytes() == run_realization(cfg, 11).pattern.values.tobytes()
    assert decohered.entropy_slit_plane > 0.2
    vis = pair_visibility(cfg, (dephased, decohered))
    assert set(vis) == {"seed", "dephaser", "decoherer"}
    assert 0 <= vis["dephaser"] <= 1 and 0 <= vis["decoherer"] <= 1


def test_entropy_report(make_config):
    cfg = make_config("decoherer")
    report = entropy_report(cfg, 21)
    assert report["before"] == pytest.approx(0.0, abs=1e-9)
    assert report["after_dephaser"] == pytest.approx(0.0, abs=1e-9)
    assert report["after_decoherer"] == pytest.approx(run_realization(cfg, 21).entropy_slit_plane, rel=1e-9)
    assert report["after_decoherer"] == pytest.approx(gram_entropy(slit_plane_state(cfg, 21)), rel=1e-9)
    assert report["detector_decoherer"] > 0.0
    assert report["n_components"] > 1
    assert report["coherence_length_m"] == pytest.approx(cfg.decoherer.coherence_length)


def test_realization_seeds_follow_the_scalar_derivation(make_config):
    cfg = make_config("dephaser", 6)
    master = mode_master(cfg)
    assert realization_seeds(cfg) == [derive_seed(master, i) for i in range(6)]
    assert all(isinstance(s, int) for s in realization_seeds(cfg))
