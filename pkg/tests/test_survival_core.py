import numpy as np
import pytest
from scipy.integrate import quad

from curemix import (
    BandwidthSelectionError,
    Dataset,
    DegenerateNeighborhoodError,
    InvalidInputError,
    beran_survival,
    cv_bandwidth,
    default_bandwidth_grid,
    epanechnikov,
    kaplan_meier,
    nonparametric_cure_prob,
)
from curemix.survival_core import conditional_cure_probs

from conftest import random_censored_dataset


def _dataset(times, events):
    n = len(times)
    return Dataset(times, events, np.zeros((n, 1)), np.zeros((n, 1)))


class TestKaplanMeier:
    def test_no_censoring_is_empirical_survival(self):
        km = kaplan_meier(_dataset([1, 2, 3], [1, 1, 1]))
        assert np.allclose(km.jump_times, [1, 2, 3])
        assert np.allclose(km.values, [2 / 3, 1 / 3, 0.0])

    def test_hand_product_limit_with_censoring(self):
        # factors (1 - 1/3) at t=1 and (1 - 1/1) at t=3
        km = kaplan_meier(_dataset([1, 2, 3], [1, 0, 1]))
        assert np.allclose(km.jump_times, [1, 3])
        assert np.allclose(km.values, [2 / 3, 0.0])
        assert km(0.5) == 1.0
        assert km(2.5) == pytest.approx(2 / 3)

    def test_all_censored_rejected(self):
        with pytest.raises(InvalidInputError):
            _dataset([1.0], [0])

    def test_tied_event_times_aggregate(self):
        km = kaplan_meier(_dataset([1, 1, 2], [1, 1, 0]))
        assert np.allclose(km.jump_times, [1])
        assert np.allclose(km.values, [1 / 3])

    def test_event_ranked_before_censoring_at_tie(self):
        # censored subject at t=1 stays at risk for the event at t=1
        km = kaplan_meier(_dataset([1, 1, 2], [1, 0, 1]))
        assert np.allclose(km.values, [2 / 3, 0.0])

    @pytest.mark.parametrize("seed", range(10))
    def test_monotone_from_one_jumps_at_events(self, seed):
        rng = np.random.default_rng(seed)
        ds = random_censored_dataset(rng, n=60)
        km = kaplan_meier(ds)
        assert km.initial_value == 1.0
        assert np.all(np.diff(np.concatenate([[1.0], km.values])) <= 1e-15)
        assert np.all((km.values >= 0) & (km.values <= 1))
        event_times = np.unique(ds.time[ds.event == 1])
        assert np.array_equal(km.jump_times, event_times)


class TestEpanechnikov:
    def test_reference_values(self):
        assert epanechnikov(0.0) == pytest.approx(0.75)
        assert epanechnikov(1.0) == 0.0
        assert epanechnikov(-0.5) == pytest.approx(0.5625)

    def test_integrates_to_one(self):
        total, _ = quad(epanechnikov, -1, 1)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_symmetric_and_compact(self):
        u = np.random.default_rng(0).uniform(-2, 2, 10_000)
        assert np.array_equal(epanechnikov(u), epanechnikov(-u))
        assert np.all(epanechnikov(u[np.abs(u) > 1]) == 0.0)
        assert np.all(epanechnikov(u) >= 0.0)


class TestBeranSurvival:
    def test_constant_index_equals_kaplan_meier(self, rng):
        ds = random_censored_dataset(rng, n=80)
        km = kaplan_meier(ds)
        fn = beran_survival(np.full(ds.n, 3.7), ds.time, ds.event, u=3.7, bandwidth=1.0)
        grid = np.concatenate([[0.0], km.jump_times, km.jump_times + 1e-9, [1e6]])
        assert np.max(np.abs(fn(grid) - km(grid))) < 1e-12

    def test_three_subject_hand_oracle(self):
        # weights at u=0, b=0.6: k(0)=36/48, k(5/6)=11/48, k(5/3)=0
        # factor at t=1: 1 - (36/47)/1 = 11/47; at t=2: 1 - 1 = 0
        fn = beran_survival([0.0, 0.5, 1.0], [1, 2, 3], [1, 1, 0], u=0.0, bandwidth=0.6)
        assert np.allclose(fn.jump_times, [1, 2])
        assert fn.values[0] == pytest.approx(11 / 47, abs=1e-15)
        assert fn.values[1] == 0.0

    def test_degenerate_window_raises(self):
        with pytest.raises(DegenerateNeighborhoodError):
            beran_survival([0.0, 0.1, 0.2], [1, 2, 3], [1, 1, 0],
                           u=50.0, bandwidth=1e-9)

    @pytest.mark.parametrize("u,b", [(0.0, 0.5), (0.5, 1.0), (-0.4, 2.0)])
    def test_monotone_in_unit_interval(self, rng, u, b):
        ds = random_censored_dataset(rng, n=60)
        idx = rng.uniform(-1, 1, ds.n)
        fn = beran_survival(idx, ds.time, ds.event, u=u, bandwidth=b)
        vals = np.concatenate([[fn.initial_value], fn.values])
        assert np.all(np.diff(vals) <= 1e-15)
        assert np.all((vals >= 0) & (vals <= 1))


class TestNonparametricCureProb:
    def test_all_events_gives_zero(self):
        assert nonparametric_cure_prob(np.zeros(3), [1, 2, 3], [1, 1, 1], 0.0, 1.0) == 0.0

    def test_plateau_km_value(self):
        # KM at the largest event time 2: (1 - 1/4)(1 - 1/3) = 1/2
        p = nonparametric_cure_prob(np.zeros(4), [1, 2, 3, 4], [1, 1, 0, 0], 0.0, 1.0)
        assert p == pytest.approx(0.5, abs=1e-15)

    def test_single_event_among_censored(self):
        p = nonparametric_cure_prob(np.zeros(4), [1, 2, 3, 4], [1, 0, 0, 0], 0.0, 1.0)
        assert p == pytest.approx(0.75, abs=1e-15)

    @pytest.mark.parametrize("scale", [2.0, 3.7])
    def test_affine_index_invariance(self, rng, scale):
        ds = random_censored_dataset(rng, n=50)
        idx = rng.uniform(-1, 1, ds.n)
        base = nonparametric_cure_prob(idx, ds.time, ds.event, 0.2, 0.8)
        moved = nonparametric_cure_prob(scale * idx + 1.5, ds.time, ds.event,
                                        scale * 0.2 + 1.5, scale * 0.8)
        assert moved == pytest.approx(base, abs=1e-12)

    def test_vectorized_matches_scalar(self, rng):
        ds = random_censored_dataset(rng, n=40)
        idx = rng.uniform(-1, 1, ds.n)
        pts = idx[:7]
        probs, degen = conditional_cure_probs(idx, ds.time, ds.event, pts, 0.7)
        assert not degen.any()
        for k, u in enumerate(pts):
            assert probs[k] == pytest.approx(
                nonparametric_cure_prob(idx, ds.time, ds.event, u, 0.7), abs=1e-12
            )


class TestCvBandwidth:
    def test_singleton_grid_returned(self, rng):
        ds = random_censored_dataset(rng, n=30)
        idx = rng.uniform(-1, 1, ds.n)
        assert cv_bandwidth(idx, ds.time, ds.event, grid=[0.4]) == 0.4

    def test_tie_broken_toward_smaller(self, rng):
        # constant index: leave-one-out weights are uniform for any b,
        # so every grid value scores identically
        ds = random_censored_dataset(rng, n=20)
        idx = np.zeros(ds.n)
        assert cv_bandwidth(idx, ds.time, ds.event, grid=[1.0, 0.5, 2.0]) == 0.5

    def test_all_degenerate_raises(self):
        ds = _dataset([1, 2, 3], [1, 1, 0])
        with pytest.raises(BandwidthSelectionError):
            cv_bandwidth([0.0, 100.0, 200.0], ds.time, ds.event, grid=[1e-6])

    def test_rejects_bad_grid(self, rng):
        ds = random_censored_dataset(rng, n=20)
        with pytest.raises(InvalidInputError):
            cv_bandwidth(np.zeros(ds.n), ds.time, ds.event, grid=[])
        with pytest.raises(InvalidInputError):
            cv_bandwidth(np.zeros(ds.n), ds.time, ds.event, grid=[-1.0, 0.5])

    @pytest.mark.slow
    def test_independent_index_prefers_heavy_smoothing(self):
        # with the index independent of (Y, event), larger bandwidths only
        # reduce variance, so CV should sit in the upper half of the grid
        hits = 0
        n_rep = 100
        for rep in range(n_rep):
            rng = np.random.default_rng([505, rep])
            ds = random_censored_dataset(rng, n=100)
            idx = rng.uniform(0.0, 1.0, ds.n)
            span = idx.max() - idx.min()
            grid = span * np.array([0.1, 0.5, 1.0, 2.0])
            chosen = cv_bandwidth(idx, ds.time, ds.event, grid=grid)
            if chosen >= grid[2]:
                hits += 1
        assert hits >= 80


class TestDefaultGrid:
    def test_endpoints_and_size(self, rng):
        idx = rng.standard_normal(200)
        grid = default_bandwidth_grid(idx)
        assert grid.size == 30
        lo = 0.05 * idx.std() * 200 ** (-0.2)
        assert grid[0] == pytest.approx(lo)
        assert grid[-1] == pytest.approx(idx.max() - idx.min())
        assert np.all(np.diff(grid) > 0)

    def test_constant_index_fallback(self):
        assert default_bandwidth_grid(np.zeros(10)).tolist() == [1.0]
