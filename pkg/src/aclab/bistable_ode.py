"""
Scalar bistable flow Y(tau, xi; delta) of

    Y_tau = f_delta(Y),   Y(0) = xi,

with the sensitivity identities Y_xi = f(Y)/f(xi) and
A = Y_xi_xi / Y_xi = (f'(Y) - f'(xi)) / f(xi), plus empirical envelopes of the
constants that appear in generation-time estimates.

Y is computed by inverting the time identity int_xi^Y dq / f(q) = tau.  The
integral is split into partial fractions: for polynomial f the decomposition
over all (complex) roots is exact, otherwise the three real zeros are removed
and the smooth remainder is integrated by Gauss-Legendre quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from .errors import AtEquilibrium, BranchCross, OutOfBox
from .nonlinearity import _GL_W, _GL_X, perturb

_ZERO_TOL = 1e-14


@dataclass(frozen=True)
class FlowResult:
    Y: float
    Y_xi: float
    A: float
    tau: float
    xi: float
    delta: float


class _TimeIdentity:
    """Partial-fraction form of tau(xi, Y) = int_xi^Y dq / f(q)."""

    def __init__(self, nl):
        self.nl = nl
        self.real_zeros = np.array(nl.zeros, dtype=float)
        coeffs = nl.coeffs
        if coeffs is not None:
            c = np.asarray(coeffs, dtype=float)
            roots = P.polyroots(c)
            dc = P.polyder(c)
            # replace the real roots by the polished zeros
            extra = []
            used = np.zeros(roots.size, bool)
            for z in self.real_zeros:
                k = int(np.argmin(np.abs(roots - z) + used * 1e300))
                used[k] = True
            extra = roots[~used]
            self.complex_roots = extra
            self.complex_weights = 1.0 / P.polyval(extra, dc)
            self.real_weights = 1.0 / P.polyval(self.real_zeros, dc)
            self.exact = True
        else:
            self.complex_roots = np.zeros(0, complex)
            self.complex_weights = np.zeros(0, complex)
            self.real_weights = 1.0 / nl.df(self.real_zeros)
            self.exact = False

    def _remainder(self, q):
        out = 1.0 / self.nl.f(q)
        for r, w in zip(self.real_zeros, self.real_weights):
            out = out - w / (q - r)
        return out

    def tau(self, xi, Y, log_gap=None, k_star=None):
        """int_xi^Y dq/f(q); ``log_gap`` = ln|Y - zero[k_star]| may be supplied exactly."""
        xi = np.asarray(xi, dtype=float)
        Y = np.asarray(Y, dtype=float)
        total = np.zeros(np.broadcast(xi, Y).shape)
        for k, (r, w) in enumerate(zip(self.real_zeros, self.real_weights)):
            lx = np.log(np.abs(xi - r))
            if log_gap is not None:
                ly = np.where(k_star == k, log_gap, np.log(np.abs(Y - r)))
            else:
                ly = np.log(np.abs(Y - r))
            total = total + w * (ly - lx)
        for r, w in zip(self.complex_roots, self.complex_weights):
            total = total + np.real(w * (np.log(Y - r) - np.log(xi - r)))
        if not self.exact:
            half = 0.5 * (Y - xi)
            mid = 0.5 * (Y + xi)
            nodes = mid[..., None] + half[..., None] * _GL_X
            total = total + half * np.sum(_GL_W * self._remainder(nodes), axis=-1)
        return total


_TI_CACHE: dict = {}


def _time_identity(nl):
    key = id(nl)
    ti = _TI_CACHE.get(key)
    if ti is None or ti.nl is not nl:
        if len(_TI_CACHE) > 256:
            _TI_CACHE.clear()
        ti = _TimeIdentity(nl)
        _TI_CACHE[key] = ti
    return ti


def flow_time(nl, xi, Y):
    """Time needed by the flow to travel from xi to Y (same monotone branch)."""
    xi_a, Y_a = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(Y, dtype=float))
    zeros = np.array(nl.zeros)
    lo = np.minimum(xi_a, Y_a)[..., None]
    hi = np.maximum(xi_a, Y_a)[..., None]
    # a zero inside [xi, Y] or travel against the direction of f is unreachable
    inside = np.any((zeros >= lo) & (zeros <= hi) & (hi > lo), axis=-1)
    against = np.sign(Y_a - xi_a) * np.sign(nl.f(xi_a)) < 0
    if np.any(inside | against):
        raise BranchCross("Y is not reachable from xi along the flow")
    return _time_identity(nl).tau(xi_a, Y_a)


def _attractor(nl, xi):
    am, a, ap = nl.zeros
    k = np.where(xi > a, 2, 0)
    z = np.where(xi > a, ap, am)
    return k, z


def flow_Y(nl, tau, xi, box: float | None = None):
    """Y(tau, xi) for the flow of nl.f (vectorised over tau and xi).

    Parameters
    ----------
    nl : BistableNonlinearity or PerturbedNonlinearity
    tau : float or ndarray
        Non-negative time(s).
    xi : float or ndarray
        Initial value(s).
    box : float, optional
        Half-width of the admissible initial box (2 C0); raises ``OutOfBox``
        when some ``xi`` lies outside.
    """
    tau_a, xi_a = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(xi, dtype=float))
    scalar = tau_a.ndim == 0
    tau_a = np.atleast_1d(tau_a).astype(float).ravel()
    xi_a = np.atleast_1d(xi_a).astype(float).ravel()
    if box is not None and np.any(np.abs(xi_a) >= box):
        raise OutOfBox(f"initial value outside (-{box:g}, {box:g})")
    if np.any(tau_a < 0):
        raise ValueError("tau must be non-negative")
    Y = xi_a.copy()
    zeros = np.array(nl.zeros)
    at_zero = np.min(np.abs(xi_a[:, None] - zeros[None, :]), axis=1) <= _ZERO_TOL * (1 + np.abs(xi_a))
    active = (~at_zero) & (tau_a > 0)
    if np.any(active):
        with np.errstate(divide="ignore", invalid="ignore"):
            Y[active] = _solve_identity(nl, tau_a[active], xi_a[active])
    out = Y.reshape(np.broadcast(np.asarray(tau), np.asarray(xi)).shape)
    return float(out) if scalar else out


def _solve_identity(nl, tau, xi):
    ti = _time_identity(nl)
    k_star, z_star = _attractor(nl, xi)
    side = np.sign(xi - z_star)
    w_hi = np.log(np.abs(xi - z_star))
    slope_star = nl.df(z_star)

    def G(w):
        Y = z_star + side * np.exp(w)
        return ti.tau(xi, Y, log_gap=w, k_star=k_star) - tau, Y

    # lower bracket: walk down until the travel time exceeds tau
    w_lo = w_hi + slope_star * tau - 1.0
    g_lo, _ = G(w_lo)
    for _ in range(200):
        bad = g_lo < 0
        if not np.any(bad):
            break
        w_lo = np.where(bad, w_lo + slope_star * tau - 5.0, w_lo)
        g_lo, _ = G(w_lo)
    # Newton in w = ln|Y - z*| with bisection safeguard; G decreases in w
    hi = w_hi.copy()
    lo = w_lo.copy()
    w = np.clip(w_hi + slope_star * tau, lo, hi)
    for _ in range(200):
        g, Y = G(w)
        lo = np.where(g > 0, w, lo)
        hi = np.where(g <= 0, w, hi)
        dG = side * np.exp(w) / nl.f(Y)
        w_new = w - g / dG
        out = ~np.isfinite(w_new) | (w_new <= lo) | (w_new >= hi)
        w_new = np.where(out, 0.5 * (lo + hi), w_new)
        step = np.abs(w_new - w)
        w = w_new
        if np.all(step <= 1e-14 * (1.0 + np.abs(w))):
            break
    Y = z_star + side * np.exp(w)
    Y = _refine_near_repeller(nl, ti, tau, xi, z_star, Y)
    lo_b = np.minimum(xi, z_star)
    hi_b = np.maximum(xi, z_star)
    # exp/log round trips can overshoot the branch ends by a few ulps
    slack = 8 * np.finfo(float).eps * np.maximum(1.0, np.maximum(np.abs(xi), np.abs(z_star)))
    if np.any((Y < lo_b - slack) | (Y > hi_b + slack)):
        raise BranchCross("flow left its monotone branch")
    return np.clip(Y, lo_b, hi_b)


def _refine_near_repeller(nl, ti, tau, xi, z_star, Y):
    """Re-solve in v = ln|Y - a| where Y is close to the unstable zero.

    ``Y = z* -+ e^w`` cannot resolve Y - a below ~1e-16/|z* - a| relatively;
    parametrising by the distance to a restores full relative precision.
    """
    a = nl.zeros[1]
    near = ((xi - a) * (z_star - xi) > 0) & (np.abs(Y - a) < 0.5 * np.abs(z_star - a))
    if not np.any(near):
        return Y
    t, x, z = tau[near], xi[near], z_star[near]
    side = np.sign(x - a)
    k1 = np.ones(x.shape, int)
    lo = np.log(np.abs(x - a))
    hi = np.log(np.abs(z - a))
    v = np.clip(np.log(np.abs(Y[near] - a)), lo, hi)
    for _ in range(100):
        y = a + side * np.exp(v)
        g = ti.tau(x, y, log_gap=v, k_star=k1) - t
        hi = np.where(g > 0, v, hi)
        lo = np.where(g <= 0, v, lo)
        dG = side * np.exp(v) / nl.f(y)
        v_new = v - g / dG
        bad = ~np.isfinite(v_new) | (v_new <= lo) | (v_new >= hi)
        v_new = np.where(bad, 0.5 * (lo + hi), v_new)
        step = np.abs(v_new - v)
        v = v_new
        if np.all(step <= 1e-15 * (1.0 + np.abs(v))):
            break
    Y = Y.copy()
    Y[near] = a + side * np.exp(v)
    return Y


def flow_Y_integrate(nl, tau, xi, rtol=1e-12):
    """Reference flow by adaptive Runge-Kutta integration (scalar)."""
    if tau == 0:
        return float(xi)
    sol = solve_ivp(lambda s, y: nl.f(y), (0.0, float(tau)), [float(xi)], method="DOP853",
                    rtol=rtol, atol=1e-14)
    Y = float(sol.y[0, -1])
    zeros = np.array(nl.zeros)
    if np.any(np.sign(xi - zeros) * np.sign(Y - zeros) < 0):
        raise BranchCross("integrated trajectory crossed a zero")
    return Y


def _check_not_zero(nl, xi):
    fx = nl.f(np.asarray(xi, dtype=float))
    if np.any(np.abs(fx) == 0.0):
        raise AtEquilibrium("xi is a zero of f")
    zeros = np.array(nl.zeros)
    xi_a = np.atleast_1d(np.asarray(xi, dtype=float)).ravel()
    if np.any(np.min(np.abs(xi_a[:, None] - zeros[None, :]), axis=1) <= _ZERO_TOL):
        raise AtEquilibrium("xi is a zero of f")
    return fx


def flow_sensitivity(nl, tau, xi):
    """Y_xi(tau, xi) = f(Y)/f(xi)."""
    fx = _check_not_zero(nl, xi)
    return nl.f(flow_Y(nl, tau, xi)) / fx


def log_curvature_A(nl, tau, xi):
    """A(tau, xi) = (f'(Y) - f'(xi)) / f(xi) = Y_xixi / Y_xi."""
    fx = _check_not_zero(nl, xi)
    return (nl.df(flow_Y(nl, tau, xi)) - nl.df(xi)) / fx


def log_curvature_A_integral(nl, tau, xi, panels=16):
    """int_0^tau f''(Y(s)) Y_xi(s) ds by composite Gauss-Legendre quadrature."""
    fx = float(_check_not_zero(nl, xi))
    edges = np.linspace(0.0, float(tau), panels + 1)
    half = 0.5 * np.diff(edges)
    s = (0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * _GL_X
    Y = flow_Y(nl, s.ravel(), xi).reshape(s.shape)
    vals = nl.d2f(Y) * nl.f(Y) / fx
    return float(np.sum(half[:, None] * _GL_W * vals))


def flow_result(nl, tau, xi) -> FlowResult:
    Y = flow_Y(nl, tau, xi)
    fx = float(_check_not_zero(nl, xi))
    return FlowResult(Y, float(nl.f(Y) / fx), float((nl.df(Y) - nl.df(xi)) / fx),
                      float(tau), float(xi), float(getattr(nl, "delta", 0.0)))


def exact_cubic_flow(tau, xi):
    """Closed-form flow of y' = y - y^3: Y^2 = xi^2 e^{2tau} / (1 - xi^2 + xi^2 e^{2tau})."""
    e = np.exp(tau)
    return xi * e / np.sqrt(1.0 + xi * xi * (e * e - 1.0))


# ---------------------------------------------------------------------------
# empirical constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SandwichReport:
    """Envelope C1 <= (Y - a)/(e^{mu tau}(xi - a)) <= C2 on both monotone branches."""

    C1: float
    C2: float
    C1_mirror: float
    C2_mirror: float
    eta: float
    delta: float
    n_samples: int

    @property
    def C1_all(self):
        return min(self.C1, self.C1_mirror)

    @property
    def C2_all(self):
        return max(self.C2, self.C2_mirror)


def sandwich_check(nl, eta: float, samples: int = 40) -> SandwichReport:
    """Measure (C1, C2) over trajectories confined to (a, alpha_+ - eta) and the mirror band."""
    am, a, ap = nl.zeros
    if not (0 < eta < min(a - am, ap - a)):
        raise ValueError("eta must lie in (0, min(a - alpha_-, alpha_+ - a))")
    mu = nl.mu
    res = []
    for top, sgn in ((ap - eta, 1.0), (am + eta, -1.0)):
        span = abs(top - a)
        frac = np.concatenate([np.logspace(-8, -0.01, samples)])
        xi = a + sgn * span * frac
        t_exit = flow_time(nl, xi, np.full_like(xi, top))
        s = np.linspace(0.0, 1.0, samples)
        TAU = t_exit[:, None] * s[None, :]
        XI = np.broadcast_to(xi[:, None], TAU.shape)
        Y = flow_Y(nl, TAU, XI)
        ratio = (Y - a) / (np.exp(mu * TAU) * (XI - a))
        res.append((float(ratio.min()), float(ratio.max())))
    return SandwichReport(res[0][0], res[0][1], res[1][0], res[1][1], float(eta),
                          float(getattr(nl, "delta", 0.0)), samples * samples)


def measure_C5(base, C0: float, tau_max: float, deltas=(0.0,), n_xi: int = 161, n_tau: int = 60) -> float:
    """sup |A(tau, xi; delta)| / (e^{mu(delta) tau} - 1) over the box (-2C0, 2C0) x (0, tau_max]."""
    best = 0.0
    for d in deltas:
        nl = perturb(base, d)
        xi = np.linspace(-2 * C0, 2 * C0, n_xi + 2)[1:-1]
        zeros = np.array(nl.zeros)
        xi = xi[np.min(np.abs(xi[:, None] - zeros[None, :]), axis=1) > 1e-6]
        tau = np.geomspace(1e-3, tau_max, n_tau)
        T, X = np.meshgrid(tau, xi, indexing="ij")
        A = log_curvature_A(nl, T, X)
        best = max(best, float(np.max(np.abs(A) / np.expm1(nl.mu * T))))
    return best


def measure_C7(nl, eta: float) -> float:
    """C7 = (max(a - alpha_-, alpha_+ - a) - eta) / C1 with C1 from ``sandwich_check``."""
    rep = sandwich_check(nl, eta)
    am, a, ap = nl.zeros
    return (max(a - am, ap - a) - eta) / rep.C1_all


def measure_C8(base, eps: float, G: float) -> float:
    """Smallest C with xi >= a + C eps  =>  Y(tau, xi; +-eps G) > a for all tau >= 0.

    The flow started above max(a, a(delta)) never returns below it, hence the
    bound is set by the displaced unstable zero.
    """
    c = 0.0
    for d in (eps * G, -eps * G):
        pn = perturb(base, d)
        c = max(c, (pn.a - base.a) / eps, (base.a - pn.a) / eps)
    return c * (1 + 1e-9) + 1e-12
