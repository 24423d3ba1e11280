"""The thirteen acceptance criteria at their stated tolerances.

Each test prints one ``CRITERION n: PASS/FAIL`` line (collected again in the
terminal summary) and then asserts the criterion.
"""

import math
import time

import numpy as np
import pytest

from aclab.bistable_ode import exact_cubic_flow, flow_sensitivity, flow_Y
from aclab.corrector import fredholm_solve, solvability_residual
from aclab.geometry import circle_polyline
from aclab.harness import (compare_run, default_config, kbar, kbar_erf, kbar_residual, run_scenario, run_sweep,
                           volterra_iterate)
from aclab.nonlinearity import make_cubic
from aclab.profile import compute_profile
from aclab.sharp_interface import (constant_forcing, forcing_sensitivity_check, gaussian_circle_integral,
                                   gaussian_surface_integral, no_forcing)

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def gen_sweep():
    return run_sweep(default_config("1d-generation", [0.04, 0.02, 0.01]))


@pytest.fixture(scope="module")
def compare_runs():
    cfg = default_config("1d-generation", [0.02])
    base = compare_run(cfg, 0.02, every=1)
    doubled = compare_run(cfg, 0.02, every=1, C6_factor=2.0)
    return base, doubled


def test_c01_profile_exactness(acceptance):
    t0 = time.perf_counter()
    nl = make_cubic()
    prof = compute_profile(nl)
    dt = time.perf_counter() - t0
    z = np.linspace(-16, 16, 8001)
    err = float(np.max(np.abs(prof.U(z) - np.tanh(z / math.sqrt(2)))))
    c0_err = abs(prof.c0 - 3 / (2 * math.sqrt(2)))
    norm_err = abs(prof.c0 * prof.norm_sq - 1.0)
    ok = err <= 1e-8 and c0_err <= 1e-10 and norm_err <= 1e-10 and dt < 1.0
    acceptance(1, ok, f"sup|U0 - tanh| = {err:.2e}, |c0 - 3/(2 sqrt 2)| = {c0_err:.2e}, "
                      f"|c0 int U0'^2 - 1| = {norm_err:.2e}, {dt:.2f} s")
    assert ok


def test_c02_fredholm(acceptance):
    t0 = time.perf_counter()
    prof = compute_profile(make_cubic())
    gamma = 2 * prof.c0
    A = lambda z: 1.0 - gamma * prof.dU(z)  # noqa: E731
    solv = abs(solvability_residual(A, prof))
    cd = fredholm_solve(A, prof, gamma)
    dt = time.perf_counter() - t0
    lim = max(abs(cd.limit_minus + 0.5), abs(cd.limit_plus + 0.5))
    ok = solv <= 1e-8 and lim <= 1e-4 and cd.residual <= 1e-5 and dt < 1.0
    acceptance(2, ok, f"solvability {solv:.2e}, |psi(+-inf) + 1/2| = {lim:.2e}, "
                      f"PDE residual {cd.residual:.2e}, {dt:.2f} s")
    assert ok


def test_c03_flow_oracle(acceptance):
    t0 = time.perf_counter()
    nl = make_cubic()
    tau = np.linspace(0.0, 10.0, 20)
    xi = np.linspace(-1.9, 1.9, 20)
    T, X = np.meshgrid(tau, xi)
    Y = flow_Y(nl, T, X)
    ex = exact_cubic_flow(T, X)
    rel = float(np.max(np.abs(Y - ex) / np.maximum(np.abs(ex), 1e-300)))
    h = 1e-5
    Tm, Xm = np.meshgrid(tau[1:], xi[np.abs(xi) > 0.05])
    fd = (flow_Y(nl, Tm, Xm + h) - flow_Y(nl, Tm, Xm - h)) / (2 * h)
    ident = float(np.max(np.abs(flow_sensitivity(nl, Tm, Xm) - fd)))
    t1, t2 = np.meshgrid(np.linspace(0, 4, 10), np.linspace(0, 4, 10))
    xs = np.linspace(-1.8, 1.8, 7)
    semi = 0.0
    for x in xs:
        a = flow_Y(nl, t1 + t2, x)
        b = flow_Y(nl, t2, flow_Y(nl, t1, np.full_like(t1, x)))
        semi = max(semi, float(np.max(np.abs(a - b) / np.abs(a))))
    dt = time.perf_counter() - t0
    ok = rel <= 1e-9 and ident <= 1e-6 and semi <= 1e-9 and dt < 5.0
    acceptance(3, ok, f"closed form rel {rel:.2e} (400 pts), Y_xi identity vs FD {ident:.2e}, "
                      f"semigroup rel {semi:.2e}, {dt:.2f} s")
    assert ok


def test_c04_generation_time(acceptance, gen_sweep):
    records, _ = gen_sweep
    ratios = [r.t_gen / r.t_gen_theory for r in records]
    meas = [records[i].t_gen / records[i + 1].t_gen for i in range(len(records) - 1)]
    theo = [records[i].t_gen_theory / records[i + 1].t_gen_theory for i in range(len(records) - 1)]
    dev = [abs(m / t - 1) for m, t in zip(meas, theo)]
    ok = all(0.5 <= q <= 1.5 for q in ratios) and all(d <= 0.25 for d in dev)
    acceptance(4, ok, "t_gen/t_eps = " + ", ".join(f"{q:.3f}" for q in ratios)
               + "; ratio vs theory " + ", ".join(f"{m:.3f}/{t:.3f}" for m, t in zip(meas, theo)))
    assert ok


def test_c05_thickness(acceptance, gen_sweep):
    records, fits = gen_sweep
    slope = fits["thickness"]["slope"]
    per_eps = [r.thickness / r.eps for r in records]
    ok = 0.8 <= slope <= 1.2 and all(2.0 <= w <= 8.0 for w in per_eps)
    acceptance(5, ok, f"slope {slope:.3f}, thickness/eps = " + ", ".join(f"{w:.2f}" for w in per_eps))
    assert ok


def test_c06_interface_error(acceptance):
    t0 = time.perf_counter()
    records, _ = run_sweep(default_config("radial2d-curvature", [0.04, 0.02, 0.01]))
    dt = time.perf_counter() - t0
    err = [r.radius_err_max for r in records]
    ratios = [err[i] / err[i + 1] for i in range(len(err) - 1)]
    C = max(e / r.eps for e, r in zip(err, records))
    ok = all(1.5 <= q <= 2.5 for q in ratios) and dt < 600
    acceptance(6, ok, "max |R - sqrt(R0^2 - 2t)| = " + ", ".join(f"{e:.2e}" for e in err)
               + f" (<= {C:.3f} eps); ratios " + ", ".join(f"{q:.2f}" for q in ratios) + f"; {dt:.0f} s")
    assert ok


def test_c07_forced_motion(acceptance):
    eps = 0.02
    cfg = default_config("radial2d-forced", [eps])
    art = run_scenario(cfg, eps)
    r = art.record
    bound = max(2 * r.h, 3 * eps * cfg.R0)
    ok = r.drift_max <= bound and r.T >= 0.05
    acceptance(7, ok, f"eps = {eps}: radius drift {r.drift_max:.2e} <= {bound:.3f} over [0, {r.T:g}]")
    assert ok


def test_c08_comparison_sandwich(acceptance, compare_runs):
    (rows, summary), _ = compare_runs
    gen = [ok for ph, _, _, ok in rows if ph == "generation"]
    mot = [ok for ph, _, _, ok in rows if ph == "motion"]
    ok = all(gen) and all(mot) and len(gen) > 0 and len(mot) > 0
    acceptance(8, ok, f"generation ordering {sum(gen)}/{len(gen)} steps, motion ordering {sum(mot)}/{len(mot)} steps")
    assert ok


def test_c09_residual_sign(acceptance, compare_runs):
    (_, s1), (_, s2) = compare_runs
    tol = s1["tol_res"]
    ok = (s1["min_residual_generation"] >= -tol and s1["min_residual_motion"] >= -tol
          and s2["min_residual_generation"] >= -tol)
    acceptance(9, ok, f"tol_res {tol:.1f}; min L w+ {s1['min_residual_generation']:.3g}, "
                      f"min L u+ {s1['min_residual_motion']:.3g}, min L w+ with 2 C6 {s2['min_residual_generation']:.3g}")
    assert ok


def test_c10_fhn_v_error(acceptance):
    t0 = time.perf_counter()
    records, _ = run_sweep(default_config("fhn-radial", [0.04, 0.02]))
    dt = time.perf_counter() - t0
    ratio = records[0].v_err / records[1].v_err
    rect = all(r.rect_ok == 1.0 for r in records)
    ok = 1.5 <= ratio <= 2.5 and rect and dt < 600
    acceptance(10, ok, f"v_err {records[0].v_err:.2e} / {records[1].v_err:.2e} = {ratio:.2f}, "
                       f"rectangle kept: {rect}, {dt:.0f} s")
    assert ok


def test_c11_heat_kernel_bound(acceptance):
    ts = np.geomspace(1e-4, 1e-1, 25)
    bound = 1 / math.sqrt(math.pi)
    c = (0.5, 0.5)
    sup, qerr = 0.0, 0.0
    for R in (0.1, 0.2, 0.4):
        curve = circle_polyline(c, R, 80000)
        th = 2 * np.pi * np.arange(20) / 20
        rho = R * np.array([1.0, 1.0, 0.0, 0.5, 0.9, 1.1, 1.5, 0.99, 1.01, 0.25] * 2)
        pts = np.stack([c[0] + rho * np.cos(th), c[1] + rho * np.sin(th)], axis=1)
        for t in ts:
            vals = gaussian_surface_integral(curve, pts, t)
            exact = gaussian_circle_integral(R, rho, t)
            qerr = max(qerr, float(np.max(np.abs(vals - exact) / np.maximum(exact, 1e-300))))
            sup = max(sup, float(np.max(math.sqrt(t) * vals)))
    ok = sup <= bound and qerr <= 1e-6
    acceptance(11, ok, f"sup sqrt(t) int G0 = {sup:.4f} <= 1/sqrt(pi) = {bound:.4f}; quadrature rel error {qerr:.2e}")
    assert ok


def test_c12_volterra(acceptance):
    res, erf_err, vol = 0.0, 0.0, 0.0
    for C in (0.5, 1.0, 2.0):
        for t in (0.1, 0.5, 1.0, 2.0):
            res = max(res, kbar_residual(t, C))
            erf_err = max(erf_err, abs(kbar(t, C) - kbar_erf(t, C)) / kbar_erf(t, C))
        tt, k = volterra_iterate(C, 2.0, n=2000)
        kb = np.array([kbar(s, C) for s in tt])
        vol = max(vol, float(np.max(k / kb)))
    ok = res <= 1e-6 and erf_err <= 1e-8 and vol <= 1 + 1e-3
    acceptance(12, ok, f"max residual {res:.2e}, erf identity {erf_err:.2e}, max k/kbar {vol:.5f}")
    assert ok


def test_c13_sensitivity(acceptance):
    prof = compute_profile(make_cubic())
    c0 = prof.c0

    def run(eta0, K=None, M=None):
        return forcing_sensitivity_check(constant_forcing(2 * c0 * eta0), no_forcing(), 0.4, 0.05, dt=1e-5,
                                         c0=c0, K=K, M=M)

    a0, b0 = run(0.01), run(0.005)
    M = max(a0.M, b0.M)
    K = c0 * 2.0 / M
    a, b = run(0.01, K, M), run(0.005, K, M)
    lin = float(np.max(np.abs(b.dR[1:] / a.dR[1:] - 0.5) / 0.5))
    mono = bool(np.all(np.diff(a.ratio) > 0) and np.all(np.diff(b.ratio) > 0))
    ok = a.holds and b.holds and lin <= 0.05
    acceptance(13, ok, f"K = {K:.4f}, M = {M:.3f}: bound holds {a.holds and b.holds}; "
                       f"first-order deviation {lin:.2e}; |dR|/eta0 monotone {mono}")
    assert ok
