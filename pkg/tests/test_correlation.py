import numpy as np
import pytest

from src.correlation import (
    DELTA_G2_COLUMNS,
    ClassifierThresholds,
    CorrelationResult,
    Ensemble,
    Verdict,
    analyze,
    classify,
    compare_to_reference,
    delta_g2,
    ensemble_mean,
    fringe_period,
    fringe_visibility,
    full_delta_G2,
    stack,
)
from src.errors import ConfigError, DegenerateInputError, NumericalValidityError, ShapeError
from src.fields import IntensityPattern, make_grid
from src.optics import OpticalParams, farfield_reference

GRID = make_grid(0.0, 1.2e-3, 513)
P = OpticalParams()


def _random_ensemble(rng, m=12, grid=GRID):
    base = 1 + 0.5 * np.cos(grid.points / 40e-6) ** 2
    return Ensemble(grid, base * rng.gamma(2.0, 1.0, (m, grid.n)))


def test_mean_of_identical_patterns_is_that_pattern():
    pattern = 1 + np.cos(GRID.points / 25e-6) ** 2
    e = Ensemble(GRID, np.vstack([pattern] * 5))
    assert np.array_equal(ensemble_mean(e).values, pattern)


def test_mean_of_zero_and_pattern_is_half():
    pattern = 1 + np.cos(GRID.points / 25e-6) ** 2
    e = Ensemble(GRID, np.vstack([np.zeros(GRID.n), pattern]))
    assert np.array_equal(ensemble_mean(e).values, pattern / 2)


def test_ensemble_invariants():
    with pytest.raises(DegenerateInputError):
        Ensemble(GRID, np.zeros((0, GRID.n)))
    with pytest.raises(ShapeError):
        Ensemble(make_grid(0.0, 1.0, 10), np.ones((2, 10)))
    with pytest.raises(ShapeError):
        Ensemble(GRID, np.ones((2, GRID.n)), seeds=(1, 2, 3))


def test_identical_patterns_give_exactly_zero_delta_g2():
    pattern = 1 + np.cos(GRID.points / 25e-6) ** 2
    r = delta_g2(Ensemble(GRID, np.vstack([pattern] * 7)))
    assert r.valid.all()
    assert np.array_equal(r.delta_g2, np.zeros_like(r.delta_g2))


def test_two_member_ensemble_matches_hand_computation():
    a = 0.3 * np.cos(GRID.points / 30e-6)
    r = delta_g2(Ensemble(GRID, np.vstack([1 + a, 1 - a])))
    half = a[(GRID.n - 1) // 2 :]
    assert r.delta_g2 == pytest.approx(half**2, abs=1e-12)
    assert np.array_equal(r.x, GRID.points[(GRID.n - 1) // 2 :])


def test_delta_g2_is_scale_invariant_and_bounded_below():
    rng = np.random.default_rng(4)
    for _ in range(10):
        e = _random_ensemble(rng)
        g = delta_g2(e).delta_g2
        scaled = delta_g2(Ensemble(GRID, 3.7 * e.patterns)).delta_g2
        assert np.allclose(g, scaled, rtol=1e-12, atol=1e-12)
        assert np.all(g[np.isfinite(g)] >= -1)
    # perfectly anti-correlated mirror points reach the bound
    left = (GRID.points < 0).astype(float) + 1e-3
    anti = Ensemble(GRID, np.vstack([left, left[::-1]]))
    assert np.all(delta_g2(anti).delta_g2 >= -1)


def test_statistics_do_not_depend_on_realization_order():
    rng = np.random.default_rng(8)
    e = _random_ensemble(rng, m=9)
    shuffled = Ensemble(GRID, e.patterns[rng.permutation(9)])
    assert np.array_equal(ensemble_mean(e).values, ensemble_mean(shuffled).values)
    assert np.array_equal(delta_g2(e).delta_g2, delta_g2(shuffled).delta_g2, equal_nan=True)
    assert np.array_equal(full_delta_G2(e), full_delta_G2(shuffled))


def test_full_delta_G2_is_symmetric_with_variance_diagonal():
    rng = np.random.default_rng(5)
    grid = make_grid(0.0, 1.2e-3, 129)
    e = _random_ensemble(rng, m=20, grid=grid)
    G = full_delta_G2(e)
    assert np.array_equal(G, G.T)
    two_pass = ((e.patterns - e.patterns.mean(axis=0)) ** 2).mean(axis=0)
    assert np.allclose(np.diag(G), two_pass, rtol=1e-10, atol=0)
    assert np.all(np.diag(G) >= 0)
    identical = Ensemble(grid, np.vstack([e.patterns[0]] * 4))
    assert not np.any(full_delta_G2(identical))


def test_too_small_or_dark_ensembles_fail():
    with pytest.raises(DegenerateInputError):
        delta_g2(Ensemble(GRID, np.ones((1, GRID.n))))
    with pytest.raises(DegenerateInputError):
        full_delta_G2(Ensemble(GRID, np.ones((1, GRID.n))))
    with pytest.raises(NumericalValidityError):
        delta_g2(Ensemble(GRID, np.zeros((3, GRID.n))))


def test_reference_itself_correlates_perfectly():
    x = GRID.points[(GRID.n - 1) // 2 :]
    r = compare_to_reference(CorrelationResult(x, farfield_reference(x, P)), P)
    assert r.pearson_r == pytest.approx(1.0, abs=1e-9)
    assert r.reference[0] == pytest.approx(1.0)
    assert r.fringe_power_ratio > 0.25
    assert classify(r) == Verdict.DEPHASING


def test_constant_delta_g2_has_no_signal():
    x = GRID.points[(GRID.n - 1) // 2 :]
    r = compare_to_reference(CorrelationResult(x, np.full(x.shape, 0.2)), P)
    assert r.pearson_r == 0.0
    assert r.fringe_power_ratio == 0.0


def test_classifier_thresholds():
    x = np.linspace(0, 1e-4, 5)
    g = np.zeros(5)

    def result(r, f, peak=0.1):
        return CorrelationResult(x, g, pearson_r=r, fringe_power_ratio=f, peak_delta_g2=peak)

    assert classify(result(0.9, 0.3)) == Verdict.DEPHASING
    assert classify(result(0.2, 0.05)) == Verdict.DECOHERENCE
    assert classify(result(0.6, 0.2)) == Verdict.INCONCLUSIVE
    assert classify(result(0.9, 0.05)) == Verdict.INCONCLUSIVE
    assert classify(result(0.9, 0.3, peak=0.0)) == Verdict.INCONCLUSIVE
    strict = ClassifierThresholds(r_hi=0.95)
    assert classify(result(0.9, 0.3), strict) == Verdict.INCONCLUSIVE
    with pytest.raises(DegenerateInputError):
        classify(CorrelationResult(x, g))
    with pytest.raises(ConfigError):
        ClassifierThresholds(r_lo=0.9, r_hi=0.8)


def test_zero_variance_ensemble_is_inconclusive():
    pattern = farfield_reference(GRID.points, P, mode="direct") + 0.01
    r = analyze(Ensemble(GRID, np.vstack([pattern] * 4)), P)
    assert r.peak_delta_g2 == 0.0
    assert r.verdict == Verdict.INCONCLUSIVE


def test_fringe_shaped_fluctuations_classify_as_dephasing():
    # I_k = 1 + e_k sqrt(R(x)) with symmetric e_k gives delta g2 = var(e) R(x)
    h = np.sqrt(farfield_reference(GRID.points, P))
    eps = np.array([0.2, -0.2, 0.1, -0.1])
    r = analyze(Ensemble(GRID, 1 + eps[:, None] * h[None, :]), P)
    assert r.pearson_r > 0.99
    assert r.verdict == Verdict.DEPHASING


def test_uncorrelated_noise_classifies_as_decoherence():
    rng = np.random.default_rng(12)
    fine = make_grid(0.0, 1.2e-3, 2049)
    r = analyze(Ensemble(fine, 1 + 0.1 * rng.standard_normal((400, fine.n))), P)
    assert r.pearson_r <= 0.5
    assert r.fringe_power_ratio <= 0.1
    assert r.verdict == Verdict.DECOHERENCE


def test_result_serialization_columns():
    x = GRID.points[(GRID.n - 1) // 2 :]
    r = compare_to_reference(CorrelationResult(x, farfield_reference(x, P)), P)
    frame = r.to_frame()
    assert list(frame.columns) == DELTA_G2_COLUMNS
    assert len(frame) == len(x)
    summary = r.summary(10, "abc")
    assert summary["n_realizations"] == 10 and summary["config_digest"] == "abc"
    assert summary["verdict"] is None


def test_visibility_and_period_of_clean_pattern():
    clean = IntensityPattern(GRID, farfield_reference(GRID.points, P, mode="direct"))
    assert fringe_visibility(clean, P) > 0.9
    assert fringe_period(clean, P) == pytest.approx(P.fringe_period, abs=GRID.dx)
    envelope = IntensityPattern(GRID, np.sinc(P.slit_width * GRID.points / (P.wavelength * P.L2)) ** 2 + 0.5)
    assert fringe_visibility(envelope, P) < fringe_visibility(clean, P)


def test_stack_builds_an_ensemble_from_patterns():
    rng = np.random.default_rng(4)
    patterns = [IntensityPattern(GRID, 1 + rng.random(GRID.n)) for _ in range(3)]
    e = stack(patterns, seeds=(1, 2, 3), config_digest="abc")
    assert e.size == 3
    assert e.seeds == (1, 2, 3)
    assert np.array_equal(e.patterns[2], patterns[2].values)
    with pytest.raises(ShapeError):
        stack(patterns + [IntensityPattern(make_grid(0.0, 1.0e-3, 513), np.ones(513))])
    with pytest.raises(DegenerateInputError):
        stack([])
