"""Acceleration-law library: values, reductions, and partial derivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trafficlab import (EvaluationError, LawOrder, ParameterError,
                        TriangularDiagram, idm_closed_form_density,
                        law_from_config,
                        make_arz_cf, make_aw_rascle_cf, make_fvdm, make_gfm,
                        make_idm, make_idm_alt, make_jwz_cf, make_linear_gm,
                        make_nonlinear_gm, make_ovm, make_third_order,
                        partials_at)
from trafficlab.laws import MODEL_CATALOG


def finite_difference_partials(law, v, s, dv):
    h_v = max(1e-6 * abs(v), 1e-8)
    h_s = max(1e-6 * abs(s), 1e-8)
    h_dv = max(1e-6 * max(abs(dv), abs(v)), 1e-8)
    return (
        (law.evaluate(v + h_v, s, dv) - law.evaluate(v - h_v, s, dv)) / (2 * h_v),
        (law.evaluate(v, s + h_s, dv) - law.evaluate(v, s - h_s, dv)) / (2 * h_s),
        (law.evaluate(v, s, dv + h_dv) - law.evaluate(v, s, dv - h_dv)) / (2 * h_dv),
    )


class TestLinearGm:
    def test_value(self):
        law = make_linear_gm(2.0)
        assert law.evaluate(10.0, 30.0, 4.0) == pytest.approx(2.0)

    def test_zero_speed_difference(self):
        law = make_linear_gm(2.0)
        for v, s in [(0.0, 5.0), (25.0, 100.0)]:
            assert law.evaluate(v, s, 0.0) == 0.0

    def test_partials(self):
        p_v, p_s, p_dv = partials_at(make_linear_gm(2.0), 10.0, 30.0, 4.0)
        assert (p_v, p_s, p_dv) == (0.0, 0.0, 0.5)

    def test_parameter_error(self):
        with pytest.raises(ParameterError):
            make_linear_gm(0.0)


class TestNonlinearGm:
    def test_value(self):
        law = make_nonlinear_gm(1.0, 0, 1)
        assert law.evaluate(10.0, 20.0, 2.0) == pytest.approx(0.1)

    def test_reduces_to_linear(self):
        nl = make_nonlinear_gm(0.5, 0, 0)
        lin = make_linear_gm(2.0)
        for v, s, dv in [(3.0, 10.0, 1.0), (0.0, 50.0, -2.0), (12.0, 7.0, 0.3)]:
            assert nl.evaluate(v, s, dv) == pytest.approx(lin.evaluate(v, s, dv))

    def test_speed_partial_vanishes_at_zero_gap_rate(self):
        p_v, _, _ = partials_at(make_nonlinear_gm(1.0, 2, 1), 10.0, 20.0, 0.0)
        assert p_v == 0.0

    def test_nonpositive_spacing_rejected(self):
        with pytest.raises(EvaluationError):
            make_nonlinear_gm(1.0, 0, 1).evaluate(5.0, 0.0, 1.0)


class TestOvm:
    def test_equilibrium(self, tri):
        law = make_ovm(1.0, tri)
        assert law.evaluate(5.0, 10.0, 123.0) == 0.0

    def test_partials_congested(self, tri):
        p_v, p_s, p_dv = partials_at(make_ovm(1.0, tri), 5.0, 10.0, 0.0)
        assert p_v == -1.0
        assert p_s == pytest.approx(tri.w * tri.k_j)  # 1/time_gap
        assert p_dv == 0.0


class TestGfm:
    def make(self, tri):
        return make_gfm(T=1.0, T_brake=0.4, d=2.0, tau=1.0, R=10.0, fd=tri)

    def test_opening_gap_reduces_to_ovm(self, tri):
        gfm = self.make(tri)
        ovm = make_ovm(1.0, tri)
        for v, s, dv in [(5.0, 10.0, 0.0), (3.0, 15.0, 2.0), (8.0, 30.0, 0.5)]:
            assert gfm.evaluate(v, s, dv) == pytest.approx(ovm.evaluate(v, s, dv))

    def test_braking_decays_with_spacing(self, tri):
        gfm = self.make(tri)
        ovm = make_ovm(1.0, tri)
        diff = gfm.evaluate(10.0, 400.0, -3.0) - ovm.evaluate(10.0, 400.0, -3.0)
        assert abs(diff) < 1e-12

    def test_closing_gap_brakes(self, tri):
        gfm = self.make(tri)
        ovm = make_ovm(1.0, tri)
        assert gfm.evaluate(6.0, 12.0, -3.0) < ovm.evaluate(6.0, 12.0, -3.0)

    def test_partials_away_from_kink(self, tri, rng):
        gfm = self.make(tri)
        for _ in range(50):
            v = rng.uniform(1.0, 15.0)
            s = rng.uniform(6.0, 40.0)
            dv = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 4.0)
            got = partials_at(gfm, v, s, dv)
            want = finite_difference_partials(gfm, v, s, dv)
            np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-9)

    def test_parameter_order(self, tri):
        with pytest.raises(ParameterError):
            make_gfm(T=0.4, T_brake=1.0, d=2.0, tau=1.0, R=10.0, fd=tri)


class TestIdm:
    def make(self):
        return make_idm(a=1.0, b=1.0, delta=4, v_f=30.0, tau=1.0, d=2.0)

    def test_max_acceleration_from_rest(self):
        assert self.make().evaluate(0.0, 1e9, 0.0) == pytest.approx(1.0)

    def test_free_flow_equilibrium(self):
        assert self.make().evaluate(30.0, 1e9, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_steady_state_from_closed_form(self):
        law = self.make()
        k = idm_closed_form_density(15.0, v_f=30.0, tau=1.0, d=2.0, delta=4)
        assert law.evaluate(15.0, 1.0 / k, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_alt_variant_differs_only_off_equilibrium(self):
        std = self.make()
        pap = make_idm_alt(a=1.0, b=1.0, delta=4, v_f=30.0, tau=1.0, d=2.0)
        assert std.evaluate(12.0, 20.0, 0.0) == pap.evaluate(12.0, 20.0, 0.0)
        assert std.evaluate(12.0, 20.0, -2.0) != pap.evaluate(12.0, 20.0, -2.0)
        # conventional sign brakes harder when closing
        assert std.evaluate(12.0, 20.0, -2.0) < pap.evaluate(12.0, 20.0, -2.0)


class TestFvdm:
    def test_reduces_to_ovm_at_zero_gain(self, tri):
        fv = make_fvdm(1.0, 0.0, tri)
        ovm = make_ovm(1.0, tri)
        for v, s, dv in [(5.0, 10.0, -1.0), (2.0, 8.0, 3.0), (15.0, 40.0, 0.0)]:
            assert fv.evaluate(v, s, dv) == ovm.evaluate(v, s, dv)

    def test_gap_rate_partial_is_gain(self, tri):
        _, _, p_dv = partials_at(make_fvdm(1.0, 0.6, tri), 5.0, 10.0, -1.0)
        assert p_dv == 0.6


class TestAwRascleFamily:
    def test_arz_with_greenshields(self, gs):
        # eta'(k) = -v_f/k_j, so psi = (v_f/k_j) dv / s^2.
        law = make_arz_cf(gs)
        assert law.evaluate(7.0, 10.0, 1.0) == pytest.approx(1.0, rel=1e-9)

    def test_jwz_equilibrium(self, tri):
        law = make_jwz_cf(1.0, 5.0, tri)
        assert law.evaluate(5.0, 10.0, 0.0) == 0.0

    def test_jwz_matches_general_form_with_matched_pressure(self, tri):
        c0 = 5.0
        jwz = make_jwz_cf(1.0, c0, tri)
        gen = make_aw_rascle_cf(1.0, lambda k: c0 / k, tri)
        for v, s, dv in [(5.0, 10.0, 1.0), (2.0, 7.0, -2.0), (10.0, 30.0, 0.5)]:
            assert gen.evaluate(v, s, dv) == pytest.approx(jwz.evaluate(v, s, dv),
                                                           rel=1e-12)

    def test_general_form_equilibrium(self, tri):
        gen = make_aw_rascle_cf(2.0, lambda k: 1.0 / k, tri)
        assert gen.evaluate(tri.theta(12.0), 12.0, 0.0) == 0.0


class TestThirdOrder:
    def test_relaxed_state_has_zero_jerk(self, tri):
        inner = make_ovm(1.0, tri)
        law = make_third_order(inner, 0.5)
        accel = inner.evaluate(4.0, 12.0, 1.0)
        assert law.jerk(4.0, 12.0, 1.0, accel) == 0.0
        assert law.order is LawOrder.THIRD

    def test_large_delay_gives_small_jerk(self, tri):
        inner = make_ovm(1.0, tri)
        mismatch = inner.evaluate(4.0, 12.0, 0.0) - 1.0
        j_fast = make_third_order(inner, 0.5).jerk(4.0, 12.0, 0.0, 1.0)
        j_slow = make_third_order(inner, 50.0).jerk(4.0, 12.0, 0.0, 1.0)
        assert abs(j_slow) < abs(j_fast)
        assert j_slow == pytest.approx(mismatch / 50.0)

    def test_step_response_relaxes_exponentially(self, tri):
        # da/dt = (psi0 - a)/T' with frozen inputs has solution
        # a(t) = psi0 + (a0 - psi0) exp(-t/T'); integrate and compare.
        inner = make_ovm(1.0, tri)
        law = make_third_order(inner, t_delay=0.8)
        psi0 = inner.evaluate(4.0, 12.0, 1.5)
        a, dt, t_end = 0.0, 0.001, 4.0  # 5 time constants
        t = 0.0
        while t < t_end - 1e-12:
            k1 = law.jerk(4.0, 12.0, 1.5, a)
            k2 = law.jerk(4.0, 12.0, 1.5, a + 0.5 * dt * k1)
            k3 = law.jerk(4.0, 12.0, 1.5, a + 0.5 * dt * k2)
            k4 = law.jerk(4.0, 12.0, 1.5, a + dt * k3)
            a += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
        expected = psi0 * (1.0 - math.exp(-t_end / 0.8))
        assert a == pytest.approx(expected, rel=0.01)

    def test_nesting_rejected(self, tri):
        law = make_third_order(make_ovm(1.0, tri), 0.5)
        with pytest.raises(ParameterError):
            make_third_order(law, 0.5)


class TestPartialsConsistency:
    """Analytic gradients agree with central differences at random points."""

    def test_all_laws_with_analytic_partials(self, tri, gs, rng):
        laws = [
            make_linear_gm(1.7),
            make_nonlinear_gm(0.8, 2, 2),
            make_ovm(0.9, gs),
            make_fvdm(0.7, 0.4, gs),
            make_jwz_cf(1.1, 4.0, gs),
            make_idm(1.2, 1.6, 4, 30.0, 1.1, 2.0),
            make_idm_alt(1.2, 1.6, 4, 30.0, 1.1, 2.0),
        ]
        for law in laws:
            assert law.has_analytic_partials
            for _ in range(100):
                v = rng.uniform(0.5, 20.0)
                s = rng.uniform(6.0, 60.0)
                dv = rng.uniform(-3.0, 3.0)
                got = np.asarray(partials_at(law, v, s, dv), dtype=float)
                want = np.asarray(finite_difference_partials(law, v, s, dv))
                np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-8,
                                           err_msg=law.name)

    def test_vectorized_evaluation(self, tri):
        law = make_ovm(1.0, tri)
        v = np.array([5.0, 6.0])
        s = np.array([10.0, 12.0])
        out = law.evaluate(v, s, np.zeros(2))
        np.testing.assert_allclose(out, [0.0, tri.theta(12.0) - 6.0])


@given(v=st.floats(min_value=0.0, max_value=40.0),
       s=st.floats(min_value=5.2, max_value=500.0),
       dv=st.floats(min_value=-20.0, max_value=20.0))
@settings(max_examples=60, deadline=None)
def test_evaluation_finite_on_domain(v, s, dv):
    """Every catalog law stays finite for v >= 0, s above its minimum."""
    fd = TriangularDiagram(v_f=20.0, w=5.0, k_j=0.2)
    laws = [
        make_linear_gm(1.0),
        make_nonlinear_gm(1.0, 1, 2),
        make_ovm(0.8, fd),
        make_gfm(1.0, 0.5, 2.0, 1.0, 10.0, fd),
        make_idm(1.0, 1.5, 4, 30.0, 1.0, 2.0),
        make_fvdm(0.8, 0.5, fd),
        make_arz_cf(fd),
        make_jwz_cf(1.0, 5.0, fd),
    ]
    for law in laws:
        if s <= law.s_min:
            continue
        assert math.isfinite(float(law.evaluate(v, s, dv))), law.name


class TestCatalog:
    def test_every_entry_buildable(self, tri):
        params = {
            "linear_gm": {"T": 1.0},
            "nonlinear_gm": {"a": 1.0, "m": 1, "l": 1},
            "ovm": {"T": 1.0},
            "gfm": {"T": 1.0, "T_brake": 0.5, "d": 2.0, "tau": 1.0, "R": 10.0},
            "idm": {"a": 1.0, "b": 1.5, "delta": 4, "v_f": 30.0, "tau": 1.0, "d": 2.0},
            "idm_alt": {"a": 1.0, "b": 1.5, "delta": 4, "v_f": 30.0,
                          "tau": 1.0, "d": 2.0},
            "fvdm": {"T": 1.0, "lambda": 0.5},
            "arz": {},
            "jwz": {"T": 1.0, "c0": 5.0},
        }
        for name, entry in MODEL_CATALOG.items():
            law = law_from_config({"name": name, **params[name]}, tri)
            assert law.name == name
            assert entry.continuum_family

    def test_third_order_from_config(self, tri):
        law = law_from_config({"name": "third_order", "t_delay": 0.5,
                               "inner": {"name": "ovm", "T": 1.0}}, tri)
        assert law.order is LawOrder.THIRD
