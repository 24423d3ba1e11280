"""
Explicit sub- and supersolutions for the generation and motion phases, their
tuning constants, and discrete checks of ordering and residual signs.

Generation (t <= mu^-1 eps^2 |ln eps|):

    w^+-(x, t) = Y(t / eps^2, u0(x) +- eps^2 C6 (e^{mu t / eps^2} - 1); delta = +-eps G)

Motion (times measured from the end of generation):

    u^+-(x, t) = U0((d +- eps p) / eps) + eps U1((d +- eps p) / eps) +- q,
    p(t) = -e^{-beta t / eps^2} + e^{L t} + K,
    q(t) = sigma (beta e^{-beta t / eps^2} + eps^2 L e^{L t}) = sigma eps^2 p'(t).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .bistable_ode import flow_time, flow_Y, measure_C5
from .corrector import PerturbationG
from .errors import DegenerateTuning, OutOfBox
from .grid import Field, initial_data_bound, laplacian
from .nonlinearity import perturb
from .profile import _slope

__all__ = [
    "MotionParams", "GenParams", "admissible_b", "tune_motion_params", "u0f_margin",
    "p_of_t", "dp_of_t", "q_of_t", "generation_M0", "make_gen_params", "gen_subsuper",
    "motion_subsuper", "residual_L", "ordering_check", "calibrate_tol_res",
    "optimal_time_check",
]


# ---------------------------------------------------------------------------
# motion constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MotionParams:
    beta: float
    sigma: float
    m: float
    a1: float
    b: float
    F1_const: float
    F2_const: float
    K: float
    L_rate: float
    M_corr: float
    d0: float
    M0: float = float("nan")
    M1: float = float("nan")
    T: float = float("nan")
    eps0: float = float("nan")

    def to_dict(self):
        return asdict(self)


def _max_fprime(nl, lo, hi, n=2001):
    u = np.linspace(lo, hi, n)
    return float(np.max(nl.df(u)))


def admissible_b(nl, n_scan: int = 400) -> float:
    """Largest b in (0, min(a - alpha_-, alpha_+ - a)) with f' < 0 on both end bands.

    A coarse scan brackets the first b at which max f' on
    [alpha_-, alpha_- + b] U [alpha_+ - b, alpha_+] reaches 0, then bisection.
    """
    am, a, ap = nl.alpha_minus, nl.a, nl.alpha_plus
    bmax = min(a - am, ap - a)

    def worst(b):
        return max(_max_fprime(nl, am, am + b, 401), _max_fprime(nl, ap - b, ap, 401))

    if worst(1e-9 * bmax) >= 0:
        raise DegenerateTuning("f' is not negative next to a stable zero")
    bs = np.linspace(0.0, bmax, n_scan + 1)[1:]
    vals = np.array([worst(b) for b in bs])
    bad = np.nonzero(vals >= 0)[0]
    if bad.size == 0:
        return float(bmax)
    hi = bs[bad[0]]
    lo = bs[bad[0] - 1] if bad[0] > 0 else 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if worst(mid) < 0:
            lo = mid
        else:
            hi = mid
    return float(lo)


def u0f_margin(prof, sigma: float, m: float) -> float:
    """min_z [U0'(z) - sigma f'(U0(z)) - sigma m] on the profile nodes (>= 0 required)."""
    return float(np.min(prof.dU0 - sigma * prof.nl.df(prof.U0) - sigma * m))


def generation_M0(nl, eps: float, gap: float) -> float:
    """Smallest M0 such that |xi - a| >= M0 eps forces |Y(mu^-1 |ln eps|, xi) - alpha_pm| <= gap.

    Found on each side by bisection on the exact travel time of the flow.
    """
    am, a, ap = nl.zeros
    tau = abs(np.log(eps)) / nl.mu
    out = 0.0
    for target in (ap - gap, am + gap):
        lo, hi = a, target
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if flow_time(nl, mid, target) > tau:
                lo = mid
            else:
                hi = mid
        out = max(out, abs(hi - a) / eps)
    return float(out)


def tune_motion_params(nl, prof, pg: PerturbationG | None, d0: float, T: float, eps0: float,
                       eta: float | None = None, b: float | None = None, slope: float = 1.0,
                       eps_gen: float | None = None, M_corr: float | None = None) -> MotionParams:
    """Compute (b, m, a1, F1, F2, beta, sigma, L, K) for the motion sub/supersolutions.

    Parameters
    ----------
    d0 : float
        Width of the tubular neighbourhood where the cut-off distance is exact.
    T : float
        Final time of the motion phase.
    eps0 : float
        Largest eps the constants must cover (enters L = T^-1 ln(d0 / (4 eps0))).
    eta : float, optional
        Band of the width theorem; enforces sigma beta <= eta / 3.
    b : float, optional
        Band width; defaults to half of ``admissible_b(nl)``.
    slope : float
        Lower bound of |grad u0| near the initial interface; M1 = M0 / slope.
    eps_gen : float, optional
        eps used to evaluate M0 (defaults to eps0).
    M_corr : float, optional
        Bound of |U1|; 0 for g = 0.
    """
    am, a, ap = nl.alpha_minus, nl.a, nl.alpha_plus
    if b is None:
        b = 0.5 * admissible_b(nl)
    if not (0 < b < min(a - am, ap - a)):
        raise DegenerateTuning("b outside (0, min(a - alpha_-, alpha_+ - a))")
    m = -max(_max_fprime(nl, am, am + b), _max_fprime(nl, ap - b, ap))
    if m <= 0:
        raise DegenerateTuning("no admissible m > 0 for this b")
    # a1 = min U0' where U0 in [alpha_- + b, alpha_+ - b]
    us = np.linspace(am + b, ap - b, 4001)
    a1 = float(np.min(_slope(nl, us)))
    uu = np.linspace(am, ap, 4001)
    F1 = float(np.max(np.abs(nl.df(uu))))
    uw = np.linspace(am - 2.0, ap + 2.0, 8001)
    F2 = float(np.max(np.abs(nl.d2f(uw))))
    beta = m / 4.0
    sigma = min(a1 / (m + F1), 1.0 / (beta + 1.0), 4.0 * beta / (F2 * (beta + 1.0)))
    if eta is not None:
        sigma = min(sigma, eta / (3.0 * beta))
    L = np.log(d0 / (4.0 * eps0)) / T
    eg = eps0 if eps_gen is None else eps_gen
    M0 = generation_M0(nl, eg, 0.5 * sigma * beta)
    M1 = M0 / slope
    zp = prof.inverse(ap - sigma * beta / 3.0)
    zm = prof.inverse(am + sigma * beta / 3.0)
    K = max(M1 + zp, M1 - zm, 1.0 + 1e-12)
    if M_corr is None:
        M_corr = 0.0
    return MotionParams(float(beta), float(sigma), float(m), a1, float(b), F1, F2, float(K), float(L),
                        float(M_corr), float(d0), float(M0), float(M1), float(T), float(eps0))


def p_of_t(mp: MotionParams, eps: float, t):
    t = np.asarray(t, dtype=float)
    return -np.exp(-mp.beta * t / eps ** 2) + np.exp(mp.L_rate * t) + mp.K


def dp_of_t(mp: MotionParams, eps: float, t):
    t = np.asarray(t, dtype=float)
    return mp.beta / eps ** 2 * np.exp(-mp.beta * t / eps ** 2) + mp.L_rate * np.exp(mp.L_rate * t)


def q_of_t(mp: MotionParams, eps: float, t):
    t = np.asarray(t, dtype=float)
    return mp.sigma * (mp.beta * np.exp(-mp.beta * t / eps ** 2) + eps ** 2 * mp.L_rate * np.exp(mp.L_rate * t))


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenParams:
    C6: float
    mu: float
    G_bound: float
    t_gen: float
    C0: float
    C5: float

    def to_dict(self):
        return asdict(self)


def make_gen_params(nl, u0: Field, eps: float, pg: PerturbationG | None = None, factor: float = 1.5,
                    C5: float | None = None) -> GenParams:
    """C6 = factor * (C5 C0^2 + C0) / mu with C5 measured over (-2C0, 2C0) x (0, mu^-1 |ln eps|]."""
    C0 = initial_data_bound(u0)
    G = 0.0 if pg is None else float(pg.bound_G)
    mu = nl.mu
    if C5 is None:
        deltas = (0.0,) if G == 0 else (0.0, eps * G, -eps * G)
        C5 = measure_C5(nl, C0, abs(np.log(eps)) / mu * 1.0, deltas)
    C6 = factor * (C5 * C0 ** 2 + C0) / mu
    return GenParams(float(C6), float(mu), G, float(abs(np.log(eps)) * eps ** 2 / mu), float(C0), float(C5))


def gen_subsuper(nl, u0: Field, gp: GenParams, eps: float, t: float, sign: int, check_box: bool = True) -> Field:
    """w^+ (sign = +1) or w^- (sign = -1) at time t, node-wise.

    The flow is that of f + sign eps G (the shift that dominates the
    perturbation), with its own unstable growth rate in the exponent.

    Raises
    ------
    OutOfBox
        The flow argument leaves (-2 C0, 2 C0).
    """
    s = 1 if sign > 0 else -1
    pn = perturb(nl, s * eps * gp.G_bound)
    mu = pn.mu
    xi = u0.values + s * eps ** 2 * gp.C6 * np.expm1(mu * t / eps ** 2)
    if check_box and np.any(np.abs(xi) >= 2 * gp.C0):
        raise OutOfBox(f"flow argument reaches {np.max(np.abs(xi)):.3g} >= 2 C0 = {2 * gp.C0:.3g}")
    Y = flow_Y(pn, t / eps ** 2, xi)
    return Field(u0.grid, np.asarray(Y, dtype=float).reshape(u0.grid.shape), u0.time + t)


def optimal_time_check(nl, u0: Field, gp: GenParams, eps: float, b: float, C: float, eta: float, d_signed) -> bool:
    """w^+ at t = mu^-1 eps^2 (|ln eps| - b) is still below alpha_+ - eta at nodes within C eps of Gamma0 (d >= 0)."""
    t = eps ** 2 * (abs(np.log(eps)) - b) / nl.mu
    w = gen_subsuper(nl, u0, gp, eps, t, +1, check_box=False).values
    sel = (np.asarray(d_signed) >= 0) & (np.asarray(d_signed) <= C * eps)
    return bool(np.all(w[sel] < nl.alpha_plus - eta))


# ---------------------------------------------------------------------------
# motion
# ---------------------------------------------------------------------------


def motion_subsuper(prof, corr, d: Field, mp: MotionParams, eps: float, t: float, sign: int, x=None) -> Field:
    """u^+ (sign = +1) or u^- (sign = -1) at motion time t from the cut-off distance field ``d``.

    ``corr`` is a callable (x, t, z) -> U1 (e.g. ``CorrectorField``) or None
    for g = 0.
    """
    s = 1 if sign > 0 else -1
    z = (d.values + s * eps * p_of_t(mp, eps, t)) / eps
    val = prof.U(z)
    if corr is not None and not getattr(corr, "is_zero", False):
        X = d.grid.mesh() if x is None else x
        val = val + eps * corr(X, t, z)
    val = val + s * q_of_t(mp, eps, t)
    return Field(d.grid, val, d.time)


# ---------------------------------------------------------------------------
# residuals and ordering
# ---------------------------------------------------------------------------


def residual_L(c0: Field, c1: Field, nl, pg: PerturbationG | None, eps: float, dt: float | None = None,
               margin: int = 2) -> np.ndarray:
    """Discrete L c = (c1 - c0)/dt - Lap_h c0 - eps^-2 (f(c0) - eps g_eps(x, t, c0)).

    Forward time difference, centred Laplacian at the earlier time; values
    on a ``margin``-node boundary strip are NaN.
    """
    if dt is None:
        dt = c1.time - c0.time
    u = c0.values
    grid = c0.grid
    r = (c1.values - u) / dt - laplacian(u, grid.h)
    reac = nl.f(u)
    if pg is not None and not pg.is_zero:
        reac = reac - eps * np.asarray(pg.evaluate(grid.mesh(), c0.time, u, eps), dtype=float)
    r = r - reac / eps ** 2
    out = np.full_like(r, np.nan)
    if r.ndim == 1:
        out[margin:-margin] = r[margin:-margin]
    else:
        out[margin:-margin, margin:-margin] = r[margin:-margin, margin:-margin]
    return out


def ordering_check(lower: Field, mid: Field, upper: Field, slack: float = 1e-12) -> bool:
    """lower <= mid <= upper at every node, up to ``slack``."""
    lo, mi, up = lower.values, mid.values, upper.values
    return bool(np.all(lo <= mi + slack) and np.all(mi <= up + slack))


def calibrate_tol_res(prof, grid, eps: float, dt: float, factor: float = 10.0, x0: float | None = None) -> float:
    """Discretisation floor of residual_L.

    The planar standing wave U0((x - x0)/eps) solves the continuous problem
    with g = 0 exactly (it is stationary), so its discrete residual is pure
    truncation error; ``factor`` times its maximum is returned.
    """
    if grid.dim == 1:
        X = grid.x
    else:
        X = grid.mesh()[0]
    x0 = 0.5 * grid.Lx if x0 is None else x0
    U = Field(grid, prof.U((X - x0) / eps), 0.0)
    r = residual_L(U, Field(grid, U.values, dt), prof.nl, None, eps, dt)
    return factor * float(np.nanmax(np.abs(r)))
