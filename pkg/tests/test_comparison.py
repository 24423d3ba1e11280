import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aclab.ac_solver import ACStepper, ramp_1d, stable_dt
from aclab.comparison import (GenParams, admissible_b, calibrate_tol_res, dp_of_t, gen_subsuper,
                              generation_M0, make_gen_params, motion_subsuper, optimal_time_check,
                              ordering_check, p_of_t, q_of_t, residual_L, tune_motion_params, u0f_margin)
from aclab.bistable_ode import flow_Y
from aclab.errors import DegenerateTuning, OutOfBox
from aclab.grid import Field, Grid


@pytest.fixture(scope="module")
def mp_b02(cubic, prof):
    return tune_motion_params(cubic, prof, None, d0=1.0, T=1.0, eps0=0.02, b=0.2)


def test_tuning_examples(mp_b02):
    mp = mp_b02
    assert mp.m == pytest.approx(0.92, abs=1e-12)
    assert mp.beta == pytest.approx(0.23, abs=1e-12)
    assert mp.a1 == pytest.approx((1 - 0.8 ** 2) / math.sqrt(2), rel=1e-6)
    assert mp.a1 == pytest.approx(0.25456, abs=1e-5)
    assert mp.F1_const == pytest.approx(2.0, abs=1e-12)
    assert mp.F2_const == pytest.approx(18.0, abs=1e-12)
    sigma0 = mp.a1 / (mp.m + mp.F1_const)
    sigma2 = 4 * mp.beta / (mp.F2_const * (mp.beta + 1))
    assert sigma0 == pytest.approx(0.0872, abs=1e-4)
    assert 1 / (mp.beta + 1) == pytest.approx(0.813, abs=1e-3)
    assert mp.sigma == pytest.approx(sigma2, rel=1e-14)
    assert mp.sigma == pytest.approx(0.0416, abs=1e-4)
    assert mp.L_rate == pytest.approx(math.log(1.0 / 0.08), rel=1e-14)


def test_tuning_invariants(cubic, prof, mp_b02):
    assert u0f_margin(prof, mp_b02.sigma, mp_b02.m) >= 0
    mp = tune_motion_params(cubic, prof, None, d0=0.5, T=0.5, eps0=0.02, eta=0.1)
    assert mp.beta == mp.m / 4
    assert mp.sigma * mp.beta <= 0.1 / 3 + 1e-15
    assert u0f_margin(prof, mp.sigma, mp.m) >= 0
    # K places the supersolution above alpha_+ - sigma beta / 3 at distance M1 eps
    assert float(prof.U(mp.K - mp.M1)) >= cubic.alpha_plus - mp.sigma * mp.beta / 3 - 1e-12


def test_admissible_b_cubic(cubic):
    assert admissible_b(cubic) == pytest.approx(1 - 1 / math.sqrt(3), abs=1e-9)


def test_tuning_rejects_bad_b(cubic, prof):
    with pytest.raises(DegenerateTuning):
        tune_motion_params(cubic, prof, None, 1.0, 1.0, 0.02, b=1.5)


def test_generation_M0_definition(cubic):
    eps, gap = 0.02, 0.005
    M0 = generation_M0(cubic, eps, gap)
    tau = abs(math.log(eps))
    assert flow_Y(cubic, tau, M0 * eps) >= 1 - gap - 1e-9
    assert flow_Y(cubic, tau, 0.99 * M0 * eps) < 1 - gap


def test_p_q_consistency(mp_b02):
    eps = 0.02
    t = np.linspace(0, 0.5, 101)
    assert np.allclose(q_of_t(mp_b02, eps, t), mp_b02.sigma * eps ** 2 * dp_of_t(mp_b02, eps, t),
                       rtol=1e-12, atol=0)
    h = 1e-7
    fd = (p_of_t(mp_b02, eps, t[1:] + h) - p_of_t(mp_b02, eps, t[1:] - h)) / (2 * h)
    assert np.allclose(fd, dp_of_t(mp_b02, eps, t[1:]), rtol=1e-5)
    assert p_of_t(mp_b02, eps, 0.0) == pytest.approx(mp_b02.K, abs=1e-14)


# ---------------------------------------------------------------------------
# generation sub/supersolutions
# ---------------------------------------------------------------------------

def _ramp(eps):
    g = Grid.line(4.0, int(round(4.0 / (eps / 4))) + 1)
    return ramp_1d(g, x0=2.0, slope=0.3)


def test_gen_identity_at_zero(cubic):
    u0 = _ramp(0.04)
    gp = make_gen_params(cubic, u0, 0.04)
    for s in (+1, -1):
        assert np.array_equal(gen_subsuper(cubic, u0, gp, 0.04, 0.0, s).values, u0.values)


def test_gen_params_formula(cubic):
    u0 = _ramp(0.04)
    gp = make_gen_params(cubic, u0, 0.04, C5=2.0)
    assert gp.C6 == pytest.approx(1.5 * (2.0 * gp.C0 ** 2 + gp.C0), rel=1e-15)
    assert gp.t_gen == pytest.approx(0.04 ** 2 * abs(math.log(0.04)), rel=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 1.0))
def test_gen_sub_below_super(frac):
    from aclab.nonlinearity import nonlinearity_from_config
    cubic = nonlinearity_from_config("cubic")
    eps = 0.04
    u0 = _ramp(eps)
    gp = GenParams(C6=5.0, mu=1.0, G_bound=0.0, t_gen=eps ** 2 * abs(math.log(eps)), C0=10.0, C5=1.0)
    t = frac * gp.t_gen
    lo = gen_subsuper(cubic, u0, gp, eps, t, -1)
    hi = gen_subsuper(cubic, u0, gp, eps, t, +1)
    assert np.all(lo.values <= hi.values)


def test_gen_out_of_box(cubic):
    u0 = _ramp(0.04)
    gp = GenParams(C6=1e6, mu=1.0, G_bound=0.0, t_gen=0.005, C0=1.22, C5=1.0)
    with pytest.raises(OutOfBox):
        gen_subsuper(cubic, u0, gp, 0.04, 0.005, +1)


def test_generation_ordering_pde(cubic):
    eps = 0.04
    u0 = _ramp(eps)
    gp = make_gen_params(cubic, u0, eps)
    dt = stable_dt(u0.grid)
    n = int(gp.t_gen / dt)
    stepper = ACStepper(u0.grid, cubic, None, eps, dt)
    ok = []

    def check(u):
        t = u.time
        ok.append(ordering_check(gen_subsuper(cubic, u0, gp, eps, t, -1), u, gen_subsuper(cubic, u0, gp, eps, t, +1)))

    stepper.run(u0, n, callback=check, every=max(1, n // 10))
    assert len(ok) >= 10 and all(ok)


def test_optimal_time(cubic):
    eps = 0.02
    u0 = _ramp(eps)
    gp = make_gen_params(cubic, u0, eps)
    d = u0.grid.x - 2.0
    assert optimal_time_check(cubic, u0, gp, eps, b=3.0, C=1.0, eta=0.1, d_signed=d)
    assert not optimal_time_check(cubic, u0, gp, eps, b=-3.0, C=1.0, eta=0.1, d_signed=d)


# ---------------------------------------------------------------------------
# motion sub/supersolutions
# ---------------------------------------------------------------------------

def test_motion_at_interface(prof, mp_b02):
    eps = 0.02
    g = Grid.line(1.0, 5)
    d = Field(g, np.zeros(g.shape))
    q0 = q_of_t(mp_b02, eps, 0.0)
    up = motion_subsuper(prof, None, d, mp_b02, eps, 0.0, +1).values
    lo = motion_subsuper(prof, None, d, mp_b02, eps, 0.0, -1).values
    assert np.allclose(up, prof.U(mp_b02.K) + q0, atol=1e-15)
    assert np.allclose(lo, prof.U(-mp_b02.K) - q0, atol=1e-15)


def test_motion_limits_and_ordering(prof, mp_b02):
    g = Grid.line(1.0, 201)
    d = Field(g, np.clip(g.x - 0.5, -0.2, 0.2))
    far = np.abs(d.values) >= 0.15
    for eps in (0.02, 0.005, 0.001):
        up = motion_subsuper(prof, None, d, mp_b02, eps, 0.2, +1).values
        lo = motion_subsuper(prof, None, d, mp_b02, eps, 0.2, -1).values
        assert np.all(lo <= up)
    # as eps -> 0 both tend to the step alpha_pm (q -> sigma eps^2 L e^{Lt} -> 0)
    sgn = np.sign(d.values[far])
    assert np.max(np.abs(up[far] - sgn)) <= 1e-6 and np.max(np.abs(lo[far] - sgn)) <= 1e-6


# ---------------------------------------------------------------------------
# residuals and ordering
# ---------------------------------------------------------------------------

def test_residual_equilibrium(cubic):
    g = Grid.rect(1.0, 1.0, 0.02)
    one = Field(g, np.ones(g.shape))
    r = residual_L(one, one.with_values(one.values, 1e-4), cubic, None, 0.04)
    assert np.nanmax(np.abs(r)) <= 1e-12
    assert np.all(np.isnan(r[:2])) and np.all(np.isnan(r[:, -2:]))


def test_residual_of_pde_solution_below_floor(cubic, prof):
    eps = 0.02
    u0 = _ramp(eps)
    dt = stable_dt(u0.grid)
    st_ = ACStepper(u0.grid, cubic, None, eps, dt)
    u = st_.run(u0, 2000)
    u1 = st_.run(u, 1)
    tol = calibrate_tol_res(prof, u0.grid, eps, dt, x0=2.0)
    r = residual_L(u, u1, cubic, None, eps)
    assert np.nanmax(np.abs(r)) <= tol


def test_ordering_check():
    g = Grid.line(1.0, 3)
    a = Field(g, np.full(3, 0.3))
    assert not ordering_check(a, a.with_values(a.values - 1), a)
    assert ordering_check(a, a, a)
    assert ordering_check(a.with_values(a.values - 1), a, a.with_values(a.values + 1e-13))
