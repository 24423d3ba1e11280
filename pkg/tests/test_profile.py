import time

import numpy as np
import pytest

from aclab.nonlinearity import from_polynomial, scaled
from aclab.profile import compute_profile, decay_rates, surface_constant_c0


def test_matches_tanh(cubic):
    t0 = time.perf_counter()
    prof = compute_profile(cubic, 4096, 20.0)
    assert time.perf_counter() - t0 < 1.0
    z = np.linspace(-16, 16, 4001)
    assert np.max(np.abs(prof.U(z) - np.tanh(z / np.sqrt(2)))) <= 1e-8


def test_normalisation_and_sample_value(prof):
    assert abs(prof.U(0.0)) <= 1e-10
    assert prof.U(1.0) == pytest.approx(np.tanh(1 / np.sqrt(2)), abs=1e-9)
    assert prof.U(1.0) == pytest.approx(0.6088594, abs=1e-7)


def test_c0(cubic, prof):
    c0 = surface_constant_c0(cubic)
    assert c0 == pytest.approx(3 / (2 * np.sqrt(2)), abs=1e-10)
    assert c0 * prof.norm_sq == pytest.approx(1.0, abs=1e-10)
    assert prof.c0 * prof.norm_sq == pytest.approx(1.0, abs=1e-10)


def test_c0_halves_under_4f(cubic):
    assert surface_constant_c0(scaled(cubic, 4.0)) == pytest.approx(0.5 * surface_constant_c0(cubic), rel=1e-10)


def test_decay_rates(cubic):
    lm, lp = decay_rates(cubic)
    assert lm == pytest.approx(np.sqrt(2)) and lp == pytest.approx(np.sqrt(2))
    half = from_polynomial(np.array([0.0, 1.0, 0.0, -1.0]) / 2)  # f'(1) = -1
    assert decay_rates(half)[1] == pytest.approx(1.0)


def test_fitted_decay_exponent(cubic, prof):
    z = np.linspace(5, 15, 50)
    slope = np.polyfit(z, np.log(cubic.alpha_plus - prof.U(z)), 1)[0]
    assert 0.95 * np.sqrt(2) <= -slope <= 1.05 * np.sqrt(2)


def test_slope_identity_and_residuals(prof):
    assert prof.slope_residual() <= 1e-8
    assert np.max(np.abs(prof.d2U0 + prof.nl.f(prof.U0))) <= 1e-7
    assert prof.fd_residual() <= 1e-5
    assert np.all(prof.dU0 > 0)
    assert np.all(np.diff(prof.U0) > 0)


def test_tail_constant_order_one(cubic, prof):
    lam = np.sqrt(2)
    C = (cubic.alpha_plus - prof.U(10.0)) * np.exp(lam * 10.0)
    assert 1 <= C <= 10


def test_inverse_roundtrip(prof):
    u = np.array([-0.999, -0.5, 0.0, 0.3, 0.9, 0.99999])
    assert np.max(np.abs(prof.U(prof.inverse(u)) - u)) < 1e-12
    with pytest.raises(ValueError):
        prof.inverse(1.0)


def test_asymmetric_balanced_profile():
    # prey-predator bistable part: zeros 0, 1/2, 1; U0' = U0 (1 - U0) / sqrt 2 gives a logistic profile
    nl = from_polynomial([0.0, -0.5, 1.5, -1.0])
    prof = compute_profile(nl)
    z = np.linspace(-30, 30, 301)
    exact = 1.0 / (1.0 + np.exp(-z / np.sqrt(2)))
    assert np.max(np.abs(prof.U(z) - exact)) <= 1e-8
