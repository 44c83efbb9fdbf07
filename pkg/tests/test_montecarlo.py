import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import rk_solution
from preypred.model import PUBLISHED_PARAMS, InvalidInputError, ModelParams, State
from preypred.montecarlo import (
    CHUNK_PATHS,
    EnsembleStats,
    TargetSpec,
    estimate_objective,
    hitting_time,
    objective_from_times,
    run_ensemble,
    write_hitting_csv,
    write_stats_csv,
)
from preypred.noise import NoiseParams, derive_stream
from preypred.sim import SimConfig, simulate_path

DET = NoiseParams.deterministic()
UPPER = State(11.990653828259541, 5.055419099658273)


def test_single_path_ensemble_is_the_path():
    cfg = SimConfig(0.01, 2.0)
    stats = run_ensemble(1, 2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg, 42)
    p = simulate_path(2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg, derive_stream(42, 0))
    assert np.array_equal(stats.mean, p.states)
    assert np.all(stats.std == 0.0)


def test_deterministic_ensemble_has_no_spread():
    stats = run_ensemble(300, 2.0, 8.0, None, PUBLISHED_PARAMS, DET, SimConfig(0.01, 2.0), 1)
    assert np.all(stats.std == 0.0)


def test_mean_and_std_match_direct_computation():
    cfg = SimConfig(0.01, 1.0)
    n = CHUNK_PATHS + 37
    stats = run_ensemble(n, 2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg, 5)
    xs = np.column_stack([simulate_path(2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg,
                                        derive_stream(5, i)).states[:, 0] for i in range(n)])
    assert np.allclose(stats.mean[:, 0], xs.mean(axis=1), rtol=1e-13)
    assert np.allclose(stats.std[:, 0], xs.std(axis=1), rtol=1e-10, atol=1e-13)


def test_worker_count_does_not_change_results(tmp_path):
    cfg = SimConfig(0.01, 2.0)
    target = TargetSpec(State(3.0, 8.0), 0.5)
    a = run_ensemble(600, 2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg, 9, target, workers=1)
    b = run_ensemble(600, 2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg, 9, target, workers=3)
    for s, name in ((a, "one"), (b, "three")):
        write_stats_csv(s, tmp_path / f"{name}_stats.csv")
        write_hitting_csv(s, tmp_path / f"{name}_hit.csv")
    assert (tmp_path / "one_stats.csv").read_bytes() == (tmp_path / "three_stats.csv").read_bytes()
    assert (tmp_path / "one_hit.csv").read_bytes() == (tmp_path / "three_hit.csv").read_bytes()


def test_linear_model_mean_law_small():
    mp = ModelParams(gamma=math.inf)
    stats = run_ensemble(2000, 1.0, 0.0, None, mp, NoiseParams(), SimConfig(1e-3, 1.0), 17)
    se = stats.std[-1, 0] / math.sqrt(2000)
    assert abs(stats.mean[-1, 0] - math.exp(1.5)) < 3 * se


class TestHitting:
    def path(self):
        return simulate_path(2.0, 8.0, None, PUBLISHED_PARAMS, DET, SimConfig(1e-3, 50.0),
                             derive_stream(0, 0))

    def test_start_inside(self):
        assert hitting_time(self.path(), TargetSpec(State(2.0, 8.0), 100.0)) == 0.0

    def test_unreachable(self):
        assert hitting_time(self.path(), TargetSpec(State(500.0, 500.0), 1e-12)) is None

    def test_matches_ode_first_entry(self):
        p = self.path()
        target = TargetSpec(UPPER, 0.5)
        tau = hitting_time(p, target)
        sol = rk_solution(PUBLISHED_PARAMS, 2.0, 8.0, 50.0, 1.0, 1.0)
        t = np.linspace(0.0, 50.0, 5_000_001)
        z = sol.sol(t)
        inside = np.maximum(np.abs(z[0] - UPPER.x), np.abs(z[1] - UPPER.y)) <= 0.5
        tau_ref = t[np.argmax(inside)]
        assert inside.any() and tau is not None
        assert abs(tau - tau_ref) <= 1e-3

    def test_target_validation(self):
        with pytest.raises(InvalidInputError):
            TargetSpec(State(1.0, 1.0), 0.0)


class TestObjective:
    def test_all_censored(self):
        J, se = objective_from_times(np.zeros(5), np.ones(5, bool), 50.0)
        assert (J, se) == (50.0, 0.0)

    def test_all_zero(self):
        J, _ = objective_from_times(np.zeros(4), np.zeros(4, bool), 50.0)
        assert J == 0.0

    def test_half_and_half(self):
        J, _ = objective_from_times(np.array([1.0, 3.0, 1.0, 3.0]), np.zeros(4, bool), 50.0)
        assert J == 2.0

    def test_needs_target(self):
        stats = run_ensemble(2, 2.0, 8.0, None, PUBLISHED_PARAMS, DET, SimConfig(0.1, 1.0), 1)
        with pytest.raises(InvalidInputError):
            estimate_objective(stats)

    def test_reports_uncensored_statistics(self):
        s = EnsembleStats(4, np.array([0.0, 1.0]), np.zeros((2, 2)), np.zeros((2, 2)),
                          np.array([1.0, 3.0, 1.0, 1.0]), np.array([False, False, False, True]))
        assert s.censored_fraction == 0.25
        assert s.mean_hitting_time == pytest.approx(5 / 3)
        assert s.hitting_time_se == pytest.approx(np.std([1.0, 3.0, 1.0], ddof=1) / math.sqrt(3))


@given(seed=st.integers(0, 10_000), eps=st.floats(0.05, 3.0), grow=st.floats(0.0, 3.0))
def test_larger_ball_never_later(seed, eps, grow):
    cfg = SimConfig(0.01, 5.0)
    stats_a = run_ensemble(8, 2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg, seed,
                           TargetSpec(State(4.0, 7.0), eps))
    stats_b = run_ensemble(8, 2.0, 8.0, None, PUBLISHED_PARAMS, NoiseParams(), cfg, seed,
                           TargetSpec(State(4.0, 7.0), eps + grow))
    assert np.all(stats_b.hitting_times <= stats_a.hitting_times)
    J, se = estimate_objective(stats_a)
    assert 0.0 <= J <= cfg.horizon and se >= 0.0
    assert 0.0 <= stats_a.censored_fraction <= 1.0
