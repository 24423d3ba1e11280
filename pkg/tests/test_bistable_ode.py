import numpy as np
import pytest

from aclab.bistable_ode import (exact_cubic_flow, flow_result, flow_sensitivity, flow_time, flow_Y,
                                flow_Y_integrate, log_curvature_A, log_curvature_A_integral, measure_C5,
                                measure_C7, measure_C8, sandwich_check)
from aclab.errors import AtEquilibrium, BranchCross
from aclab.nonlinearity import perturb

Y_TEN = 1.0 / np.sqrt(1.99)


def test_closed_form_value(cubic):
    assert flow_Y(cubic, np.log(10.0), 0.1) == pytest.approx(Y_TEN, rel=1e-13)
    assert Y_TEN == pytest.approx(0.708881, abs=1e-6)


def test_equilibrium_and_initial_value(cubic):
    assert flow_Y(cubic, 3.7, 0.0) == 0.0
    assert flow_Y(cubic, 0.0, 0.37) == 0.37


def test_sensitivity_values(cubic):
    val = flow_sensitivity(cubic, np.log(10.0), 0.1)
    assert val == pytest.approx(cubic.f(Y_TEN) / cubic.f(0.1), rel=1e-12)
    assert val == pytest.approx(3.5622, abs=1e-4)
    assert flow_sensitivity(cubic, 0.0, 0.3) == pytest.approx(1.0, abs=1e-15)


def test_sensitivity_matches_finite_difference(cubic):
    h = 1e-5
    for tau, xi in [(0.5, 0.2), (2.0, -0.4), (np.log(10.0), 0.1), (4.0, 1.5)]:
        fd = (flow_Y(cubic, tau, xi + h) - flow_Y(cubic, tau, xi - h)) / (2 * h)
        assert flow_sensitivity(cubic, tau, xi) == pytest.approx(fd, abs=1e-6)


def test_log_curvature_values(cubic):
    assert log_curvature_A(cubic, 0.0, 0.4) == 0.0
    expected = (cubic.df(Y_TEN) - cubic.df(0.1)) / cubic.f(0.1)
    assert log_curvature_A(cubic, np.log(10.0), 0.1) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(-14.92, abs=0.01)
    assert log_curvature_A_integral(cubic, np.log(10.0), 0.1) == pytest.approx(expected, rel=1e-8)


def test_matches_closed_form_on_grid(cubic):
    tau = np.linspace(0.0, 3 * np.log(1 / 0.01), 20)
    xi = np.linspace(-0.95, 0.95, 20)
    T, X = np.meshgrid(tau, xi)
    num = flow_Y(cubic, T, X)
    ex = exact_cubic_flow(T, X)
    assert np.max(np.abs(num - ex) / np.maximum(np.abs(ex), 1e-300)) <= 1e-9


def test_independent_integrator(cubic):
    for tau, xi in [(1.0, 0.3), (2.5, -0.05), (0.7, 2.0)]:
        assert flow_Y(cubic, tau, xi) == pytest.approx(flow_Y_integrate(cubic, tau, xi), rel=1e-9)


def test_semigroup(cubic):
    for t1, t2, xi in [(0.3, 1.1, 0.05), (2.0, 2.0, -0.7), (0.1, 5.0, 1.8)]:
        assert flow_Y(cubic, t1 + t2, xi) == pytest.approx(flow_Y(cubic, t2, flow_Y(cubic, t1, xi)), rel=1e-9)


def test_flow_time_inverse(cubic):
    tau = flow_time(cubic, 0.1, Y_TEN)
    assert tau == pytest.approx(np.log(10.0), rel=1e-12)
    with pytest.raises(BranchCross):
        flow_time(cubic, 0.1, -0.5)


def test_sensitivity_at_equilibrium_rejected(cubic):
    with pytest.raises(AtEquilibrium):
        log_curvature_A(cubic, 1.0, 0.0)


def test_perturbed_flow(cubic):
    pn = perturb(cubic, 0.02)
    y = flow_Y(pn, 50.0, pn.a + 1e-3)
    assert y == pytest.approx(pn.alpha_plus, abs=1e-12)
    assert flow_Y(pn, 1.3, 0.4) == pytest.approx(flow_Y_integrate(pn, 1.3, 0.4), rel=1e-9)


def test_sandwich_constants(cubic):
    rep = sandwich_check(cubic, 0.1)
    assert 0.1 <= rep.C1_all <= rep.C2_all <= 10
    rep_d = sandwich_check(perturb(cubic, 0.005), 0.1)
    assert abs(rep_d.C1_all / rep.C1_all - 1) <= 0.25
    assert abs(rep_d.C2_all / rep.C2_all - 1) <= 0.25


def test_linearisation_ratio_near_unstable_zero(cubic):
    tau = 0.01
    xi = 1e-8
    assert (flow_Y(cubic, tau, xi) - cubic.a) / (np.exp(tau) * xi) == pytest.approx(1.0, abs=1e-9)


def test_C5_envelope(cubic):
    C5 = measure_C5(cubic, 1.0, np.log(100.0))
    tau = np.linspace(0.01, np.log(100.0), 15)
    xi = np.linspace(-1.9, 1.9, 17)
    xi = xi[np.min(np.abs(xi[:, None] - np.array([-1, 0, 1])[None, :]), axis=1) > 1e-3]
    T, X = np.meshgrid(tau, xi)
    assert np.all(np.abs(log_curvature_A(cubic, T, X)) <= C5 * np.expm1(T) * (1 + 1e-6))


@pytest.mark.parametrize("eps", [0.04, 0.02, 0.01])
def test_after_generation_time(cubic, eps):
    eta = 0.1
    C7 = measure_C7(cubic, eta)
    tau = np.log(1 / eps) / cubic.mu
    xi = np.linspace(C7 * eps, 2.0, 200)
    assert np.all(flow_Y(cubic, tau, xi) >= cubic.alpha_plus - eta)
    xi_all = np.linspace(-2.0, 2.0, 401)
    Y = flow_Y(cubic, tau, xi_all)
    assert np.all((Y >= -1 - eta) & (Y <= 1 + eta))


def test_C8_keeps_flow_above_unstable_zero(cubic):
    eps, G = 0.02, 1.0
    C8 = measure_C8(cubic, eps, G)
    for d in (eps * G, -eps * G):
        pn = perturb(cubic, d)
        xi = cubic.a + C8 * eps * np.linspace(1.0, 5.0, 9)
        for tau in np.linspace(0, np.log(1 / eps), 7):
            assert np.all(flow_Y(pn, tau, xi) > cubic.a)


def test_flow_result_bundle(cubic):
    r = flow_result(cubic, np.log(10.0), 0.1)
    assert r.Y == pytest.approx(Y_TEN)
