import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agc.errors import DimensionError, ValidationError
from agc.lqrsyn import paper_lqr_pi_gain
from agc.numkern import rk4_step
from agc.plant import STATE_LABELS
from agc.simkit import (CSV_HEADER, FeedbackGain, Scenario, Trajectory, closed_loop_matrix, ise,
                        metrics, quadratic_cost, settling_time, simulate, swap_gain)


def synthetic(df1, df2=None, horizon=20.0, dt=0.005, u=None):
    t = np.arange(int(round(horizon / dt)) + 1) * dt
    x = np.zeros((len(t), 11))
    x[:, 0] = df1(t)
    if df2 is not None:
        x[:, 4] = df2(t)
    controls = np.zeros((len(t), 2)) if u is None else u
    return Trajectory(times=t, states=x, controls=controls)


class TestClosedLoop:
    def test_zero_gain(self, model):
        np.testing.assert_array_equal(closed_loop_matrix(model, FeedbackGain.zero()), model.a)

    def test_published_gain_entry(self, model):
        acl = closed_loop_matrix(model, paper_lqr_pi_gain())
        assert acl[3, 0] == pytest.approx(-4.16 - 12.5 * 0.4896, abs=1e-12)
        assert acl[3, 0] == pytest.approx(-10.28, abs=5e-3)

    def test_integral_mask_touches_only_integrator_columns(self, model):
        diff = closed_loop_matrix(model, FeedbackGain.integral(0.5, 0.5)) - model.a
        changed = set(zip(*np.nonzero(diff)))
        assert changed == {(2, 9), (3, 9), (6, 10), (7, 10)}

    def test_dimension_mismatch(self, model):
        with pytest.raises(DimensionError):
            closed_loop_matrix(model, np.zeros((2, 10)))


class TestFeedbackGain:
    def test_integral_mask_rejects_proportional_terms(self):
        k = np.zeros((2, 11))
        k[0, 0] = 1.0
        with pytest.raises(ValidationError):
            FeedbackGain(k, "integral_only")

    def test_vector_round_trip(self, rng):
        v = rng.normal(size=22)
        np.testing.assert_array_equal(FeedbackGain.from_vector(v).to_vector(), v)
        g = FeedbackGain.from_vector([0.2, 0.3], "integral_only")
        assert g.k[0, 9] == 0.2 and g.k[1, 10] == 0.3 and np.count_nonzero(g.k) == 2

    def test_csv_round_trip(self, tmp_path, lqr_identity):
        g = lqr_identity[1]
        g.to_csv(tmp_path / "k.csv")
        assert FeedbackGain.from_csv(tmp_path / "k.csv") == g
        FeedbackGain.integral(1.0, 2.0).to_csv(tmp_path / "ki.csv")
        assert FeedbackGain.from_csv(tmp_path / "ki.csv").mask == "integral_only"

    def test_csv_shape_checked(self, tmp_path):
        (tmp_path / "bad.csv").write_text("1,2,3\n")
        with pytest.raises(DimensionError):
            FeedbackGain.from_csv(tmp_path / "bad.csv")


class TestScenario:
    @pytest.mark.parametrize("kw", [dict(dt=0), dict(dt=-1), dict(horizon=0.01),
                                    dict(disturbance_area=3),
                                    dict(disturbance_magnitude=float("nan"))])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            Scenario(**kw)

    def test_steps(self):
        assert Scenario(horizon=120, dt=0.005).steps == 24000


class TestSimulate:
    def test_zero_magnitude_gives_zero_trajectory(self, model):
        traj = simulate(model, paper_lqr_pi_gain(), Scenario(1, 0.0, 10.0))
        assert not traj.states.any() and not traj.controls.any()

    def test_grid_and_lengths(self, model, lqr_identity):
        traj = simulate(model, lqr_identity[1], Scenario(1, 0.01, 10.0, 0.01))
        assert len(traj.times) == len(traj.states) == len(traj.controls) == 1001
        np.testing.assert_allclose(np.diff(traj.times), 0.01, rtol=1e-12)
        np.testing.assert_allclose(traj.controls, -traj.states @ lqr_identity[1].k.T)

    def test_matches_stagewise_rk4_oracle(self, model, lqr_identity):
        g = lqr_identity[1]
        s = Scenario(1, 0.01, 5.0, 0.005)
        acl = model.a - model.b @ g.k
        c = model.f @ s.disturbance()
        x = np.zeros(11)
        for k in range(s.steps):
            x = rk4_step(lambda t, y: acl @ y + c, x, k * s.dt, s.dt)
        traj = simulate(model, g, s)
        np.testing.assert_allclose(traj.states[-1], x, rtol=1e-11, atol=1e-15)

    def test_published_gain_undershoot_area1(self, model):
        traj = simulate(model, paper_lqr_pi_gain(), Scenario(1, 0.01, 60.0))
        m = metrics(traj, "df1")
        assert -0.045 <= m.peak_undershoot <= -0.02

    def test_area_swap_symmetry(self, model, lqr_identity):
        g = lqr_identity[1]
        np.testing.assert_allclose(swap_gain(g).k, g.k, atol=1e-9)
        t1 = simulate(model, g, Scenario(1, 0.01, 60.0))
        t2 = simulate(model, g, Scenario(2, 0.01, 60.0))
        assert np.max(np.abs(t1.df1 - t2.df2)) <= 1e-9
        assert np.max(np.abs(t1.df2 - t2.df1)) <= 1e-9

    def test_published_gain_is_not_swap_symmetric(self):
        # both rows carry +0.823 on the tie-line state
        g = paper_lqr_pi_gain()
        assert not np.allclose(swap_gain(g).k, g.k)

    @pytest.mark.parametrize("alpha", [0.5, 2.0])
    def test_linearity(self, model, lqr_identity, alpha):
        g = lqr_identity[1]
        base = simulate(model, g, Scenario(1, 0.01, 30.0))
        scaled = simulate(model, g, Scenario(1, 0.01 * alpha, 30.0))
        np.testing.assert_allclose(scaled.states, alpha * base.states, rtol=1e-9,
                                   atol=1e-9 * np.abs(base.states).max())

    def test_dt_refinement(self, model, lqr_identity):
        g = lqr_identity[1]
        coarse = ise(simulate(model, g, Scenario(1, 0.01, 60.0, 0.005)))
        fine = ise(simulate(model, g, Scenario(1, 0.01, 60.0, 0.0025)))
        assert abs(coarse - fine) / fine < 1e-6

    def test_unstable_gain_flags_divergence(self, model):
        k = np.zeros((2, 11))
        k[:, 0] = k[:, 4] = -3.0
        traj = simulate(model, FeedbackGain(k), Scenario(1, 0.01, 120.0))
        assert traj.diverged and 0 < traj.divergence_time < 120.0
        assert traj.times[-1] == traj.divergence_time
        with pytest.raises(ValidationError, match="penalty"):
            ise(traj)

    def test_csv_export(self, model, lqr_identity, tmp_path):
        traj = simulate(model, lqr_identity[1], Scenario(2, 0.01, 1.0))
        traj.to_csv(tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "t,df1,dpt1,dpr1,dpg1,df2,dpt2,dpr2,dpg2,dptie,iace1,iace2,u1,u2"
        assert CSV_HEADER[1:12] == STATE_LABELS
        data = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(data[:, 1:12], traj.states)
        np.testing.assert_array_equal(data[:, 12:], traj.controls)


class TestIse:
    def test_zero(self):
        assert ise(synthetic(lambda t: 0 * t)) == 0.0

    def test_exponential_oracle(self):
        # 1/2 * int_0^inf exp(-2t) dt = 0.25
        assert ise(synthetic(lambda t: np.exp(-t))) == pytest.approx(0.25, abs=1e-4)

    def test_quadratic_homogeneity(self):
        base = synthetic(lambda t: np.exp(-t), lambda t: np.sin(t) * np.exp(-0.5 * t))
        doubled = synthetic(lambda t: 2 * np.exp(-t), lambda t: 2 * np.sin(t) * np.exp(-0.5 * t))
        assert ise(doubled) == pytest.approx(4 * ise(base), rel=1e-12)


class TestQuadraticCost:
    def test_zero(self):
        assert quadratic_cost(synthetic(lambda t: 0 * t), np.eye(11), np.eye(2)) == 0.0

    def test_identity_weight_oracle(self):
        traj = synthetic(lambda t: np.exp(-t))
        assert quadratic_cost(traj, np.eye(11), 1e-9 * np.eye(2)) == pytest.approx(0.25, abs=1e-4)

    def test_linear_in_q(self):
        traj = synthetic(lambda t: np.exp(-t), lambda t: np.exp(-2 * t))
        r = 1e-9 * np.eye(2)
        assert quadratic_cost(traj, 2 * np.eye(11), r) == pytest.approx(
            2 * quadratic_cost(traj, np.eye(11), r), rel=1e-12)

    def test_rejects_zero_r_and_asymmetric_q(self):
        traj = synthetic(lambda t: np.exp(-t))
        with pytest.raises(ValidationError):
            quadratic_cost(traj, np.eye(11), np.zeros((2, 2)))
        q = np.eye(11)
        q[0, 1] = 1e-6
        with pytest.raises(ValidationError):
            quadratic_cost(traj, q, np.eye(2))

    def test_control_term(self, model, lqr_identity):
        traj = simulate(model, lqr_identity[1], Scenario(1, 0.01, 30.0))
        x_only = quadratic_cost(traj, np.eye(11), 1e-12 * np.eye(2))
        full = quadratic_cost(traj, np.eye(11), np.eye(2))
        u_only = 0.5 * np.trapezoid(np.sum(traj.controls ** 2, axis=1), traj.times)
        assert full - x_only == pytest.approx(u_only, rel=1e-9)


class TestMetrics:
    def test_zero_trajectory(self):
        m = metrics(synthetic(lambda t: 0 * t), 1)
        assert (m.peak_undershoot, m.peak_overshoot, m.settling_time) == (0.0, 0.0, 0.0)

    def test_damped_sinusoid_settling(self):
        traj = synthetic(lambda t: 0.1 * np.exp(-t) * np.sin(2 * np.pi * t))
        m = metrics(traj, "df1", band=0.0005)
        # envelope 0.1 e^-t crosses the band at ln(200); allow half a period of slack
        assert abs(m.settling_time - math.log(0.1 / 0.0005)) <= 0.5

    def test_not_settled(self):
        m = metrics(synthetic(lambda t: 0.01 + 0 * t), 1)
        assert m.settling_time is None and not m.settled

    def test_band_validation(self):
        with pytest.raises(ValidationError):
            metrics(synthetic(lambda t: 0 * t), 1, band=0)

    def test_channel_validation(self):
        with pytest.raises(ValidationError):
            metrics(synthetic(lambda t: 0 * t), 3)

    def test_settling_helper_edge_cases(self):
        t = np.arange(5.0)
        assert settling_time(t, np.array([1, 0, 0, 0, 0.0]), 0.5) == 1.0
        assert settling_time(t, np.array([0, 0, 0, 0, 1.0]), 0.5) is None

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 3.0), st.floats(0.2, 5.0), st.floats(-0.05, 0.05))
    def test_peaks_bound_every_sample(self, decay, freq, amp):
        traj = synthetic(lambda t: amp * np.exp(-decay * t) * np.sin(freq * t), horizon=10.0,
                         dt=0.01)
        m = metrics(traj, 1)
        y = traj.df1
        assert m.peak_undershoot <= 0 <= m.peak_overshoot
        assert np.all(m.peak_undershoot <= y) and np.all(y <= m.peak_overshoot)
        assert m.settling_time is None or m.settling_time <= traj.times[-1]
