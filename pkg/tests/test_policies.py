import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cheapbandits.environment import reward_from_values, synthesize_smooth_reward
from cheapbandits.errors import InvariantBreach
from cheapbandits.generators import generate_er
from cheapbandits.graph import ShiftedSpectrum, from_edge_list, spectral_decomposition
from cheapbandits.policies import (
    CHEAP_UCB,
    LIN_UCB,
    SPECTRAL_UCB,
    Policy,
    Stage,
    confidence_width,
    init_estimator,
    parse_policy,
    select_action,
    stage_schedule,
    ucb_score,
    update_estimator,
)
from cheapbandits.probes import build_probe, gft, probe_set


class TestConfidenceWidth:
    def test_noiseless(self):
        assert confidence_width(0.0, 4, 100, 0.01, 0.001, 1.7) == 1.7

    def test_hand_value(self):
        # 0.02 * sqrt(4 ln 10001 + 2 ln 1000) + 1
        assert confidence_width(0.01, 4, 100, 0.01, 0.001, 1.0) == pytest.approx(1.1423478444176383, rel=1e-12)

    def test_monotone(self):
        base = dict(R=0.01, d=4, T=100, lam=0.01, delta=0.001, c=1.0)
        b0 = confidence_width(**base)
        assert confidence_width(**{**base, "d": 5}) > b0
        assert confidence_width(**{**base, "T": 101}) > b0
        assert confidence_width(**{**base, "R": 0.02}) > b0
        assert confidence_width(**{**base, "delta": 0.0005}) > b0

    def test_delta_domain(self):
        with pytest.raises(ValueError):
            confidence_width(0.01, 1, 10, 0.01, 1.0, 1.0)


class TestEstimator:
    def test_init(self, two_node):
        sh = ShiftedSpectrum(spectral_decomposition(two_node), 0.01)
        st_ = init_estimator(sh)
        np.testing.assert_array_equal(st_.alpha_hat, 0.0)
        np.testing.assert_allclose(np.diag(st_.V_inv), 1.0 / sh.values)
        assert st_.t == 0

    def test_two_node_update(self, two_node):
        s = spectral_decomposition(two_node)
        st_ = init_estimator(ShiftedSpectrum(s, 0.01))
        x = gft(s, build_probe(two_node, 0, 1))
        update_estimator(st_, x, 0.5)
        # oracle: solve (diag(0.01, 2.01) + x x') a = 0.5 x by hand-built 2x2 system
        np.testing.assert_allclose(st_.alpha_hat, [0.6898770168842641, 0.0034322239645983355], rtol=1e-9)
        assert st_.t == 1

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(1)
        g = generate_er(25, 0.3, 2)
        sh = ShiftedSpectrum(spectral_decomposition(g), 0.01)
        st_ = init_estimator(sh)
        X, r = [], []
        for _ in range(300):
            i = int(rng.integers(25))
            x = gft(sh.base, build_probe(g, i, int(rng.integers(1, g.degree[i] + 2))))
            y = float(rng.normal())
            update_estimator(st_, x, y)
            X.append(x)
            r.append(y)
            V = np.diag(sh.values) + np.array(X).T @ np.array(X)
            direct = np.linalg.solve(V, np.array(X).T @ np.array(r))
            assert np.max(np.abs(st_.alpha_hat - direct)) <= 1e-6
        assert np.max(np.abs(st_.V - V)) <= 1e-10
        assert np.max(np.abs(st_.V @ st_.alpha_hat - st_.S)) <= 1e-8
        assert st_.logdet_ratio == pytest.approx(np.linalg.slogdet(V)[1] - np.log(sh.values).sum(), rel=1e-9)

    def test_inverse_drift_detected(self, two_node):
        st_ = init_estimator(ShiftedSpectrum(spectral_decomposition(two_node), 0.01))
        st_.V_inv[0, 0] += 1e-3
        with pytest.raises(InvariantBreach):
            st_.check_inverse()

    def test_rejects_non_positive(self, two_node):
        s = spectral_decomposition(two_node)
        with pytest.raises(ValueError):
            ShiftedSpectrum(s, -1.0)


class TestUcbScore:
    def test_zero_beta(self, two_node):
        s = spectral_decomposition(two_node)
        st_ = init_estimator(ShiftedSpectrum(s, 0.01))
        x = gft(s, build_probe(two_node, 0, 1))
        update_estimator(st_, x, 0.5)
        assert ucb_score(st_, x, 0.0) == pytest.approx(float(x @ st_.alpha_hat))

    def test_initial_node_probe(self, two_node):
        s = spectral_decomposition(two_node)
        st_ = init_estimator(ShiftedSpectrum(s, 0.01))
        x = gft(s, build_probe(two_node, 0, 1))
        assert ucb_score(st_, x, 3.0) == pytest.approx(3.0 * 7.088635709281827, rel=1e-12)

    def test_nondecreasing_in_beta(self):
        g = generate_er(15, 0.4, 0)
        s = spectral_decomposition(g)
        st_ = init_estimator(ShiftedSpectrum(s, 0.01))
        rng = np.random.default_rng(0)
        for i in range(10):
            update_estimator(st_, gft(s, build_probe(g, i, 1)), float(rng.normal()))
        for i in range(15):
            x = gft(s, build_probe(g, i, 1))
            scores = [ucb_score(st_, x, b) for b in (0.0, 0.5, 1.0, 5.0)]
            assert scores == sorted(scores)

    def test_vectorized_matches_scalar(self):
        g = generate_er(15, 0.4, 0)
        s = spectral_decomposition(g)
        st_ = init_estimator(ShiftedSpectrum(s, 0.01))
        update_estimator(st_, gft(s, build_probe(g, 3, 2)), 0.3)
        probes = probe_set(g, 1)
        X = np.array([gft(s, p) for p in probes])
        np.testing.assert_allclose(st_.scores(X, 2.0), [ucb_score(st_, x, 2.0) for x in X], rtol=1e-12)


class TestStageSchedule:
    def test_t100_uncapped(self):
        plan = stage_schedule(100, 6)
        assert plan.J == 7
        assert plan.stages == tuple(
            Stage(*s) for s in [(1, 1, 7), (2, 3, 6), (4, 7, 5), (8, 15, 4), (16, 31, 3), (32, 63, 2), (64, 100, 1)]
        )
        assert not plan.capped

    def test_single_step(self):
        assert stage_schedule(1, 5).stages == (Stage(1, 1, 1),)

    def test_t100_capped(self):
        plan = stage_schedule(100, 2)
        assert [(s.first, s.last, s.width) for s in plan.stages] == [
            (1, 1, 3),
            (2, 3, 3),
            (4, 7, 3),
            (8, 15, 3),
            (16, 31, 3),
            (32, 63, 2),
            (64, 100, 1),
        ]
        assert plan.capped

    def test_min_degree_zero_is_node_only(self):
        assert set(stage_schedule(100, 0).widths()) == {1}

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 5000), st.integers(0, 20))
    def test_partition_and_widths(self, T, min_degree):
        plan = stage_schedule(T, min_degree)
        steps = [t for s in plan.stages for t in range(s.first, s.last + 1)]
        assert steps == list(range(1, T + 1))
        widths = [s.width for s in plan.stages]
        assert widths == sorted(widths, reverse=True)
        assert widths[-1] == 1
        assert plan.J == max(1, math.ceil(math.log2(T)))


class TestSelectAction:
    def test_perfect_estimate_zero_beta(self):
        g = generate_er(20, 0.4, 5)
        s = spectral_decomposition(g)
        sh = ShiftedSpectrum(s, 0.01)
        rf = synthesize_smooth_reward(sh, 4, None, seed=1)
        st_ = init_estimator(sh)
        st_.alpha_hat = rf.alpha_star.copy()
        for w in (1, 2, 3):
            probes = probe_set(g, min(w, g.min_degree + 1))
            chosen = select_action(CHEAP_UCB, st_, probes, 0.0)
            means = [rf.f[list(p.support)].mean() for p in probes]
            assert chosen.anchor == int(np.argmax(means))

    def test_symmetric_start_picks_anchor_zero(self):
        g = from_edge_list(4, [(i, j, 1.0) for i in range(4) for j in range(i + 1, 4)])
        s = spectral_decomposition(g)
        st_ = init_estimator(ShiftedSpectrum(s, 0.01))
        for w in (1, 2, 3, 4):
            assert select_action(CHEAP_UCB, st_, probe_set(g, w), 1.0).anchor == 0

    def test_scale_invariance(self):
        g = generate_er(20, 0.4, 3)
        s = spectral_decomposition(g)
        st_ = init_estimator(ShiftedSpectrum(s, 0.01))
        rng = np.random.default_rng(2)
        for i in range(8):
            update_estimator(st_, gft(s, build_probe(g, i, 1)), float(rng.normal()))
        probes = probe_set(g, 1)
        a = select_action(SPECTRAL_UCB, st_, probes, 0.7)
        st_.alpha_hat *= 3.0
        b = select_action(SPECTRAL_UCB, st_, probes, 2.1)
        assert a == b

    def test_rejects_unknown_kind(self, two_node):
        st_ = init_estimator(ShiftedSpectrum(spectral_decomposition(two_node), 0.01))
        with pytest.raises(ValueError):
            select_action("EpsGreedy", st_, probe_set(two_node, 1), 1.0)


class TestPolicy:
    def test_linucb_uses_identity_regularization(self):
        g = generate_er(20, 0.3, 1)
        pol = Policy(LIN_UCB, g, spectral_decomposition(g), 0.01, 50, 0.001, 0.01, 1.0)
        np.testing.assert_array_equal(pol.state.V, 0.01 * np.eye(20))
        np.testing.assert_array_equal(pol.features(build_probe(g, 4, 1)), np.eye(20)[4])
        assert set(pol.plan.widths()) == {1}

    def test_spectral_is_node_only(self):
        g = generate_er(20, 0.6, 1)
        pol = Policy(SPECTRAL_UCB, g, spectral_decomposition(g), 0.01, 50, 0.001, 0.01, 1.0)
        assert set(pol.plan.widths()) == {1}

    def test_parse_policy(self):
        assert parse_policy("cheapucb") == CHEAP_UCB
        with pytest.raises(ValueError):
            parse_policy("ucb1")
