"""
Sharp-interface limits.

Interface law (inside = the alpha_- phase, normal pointing outwards):

    V_n = -(N - 1) kappa + gamma(x, t),

with gamma = c0 (G(x,t,alpha_+) - G(x,t,alpha_-)) for the perturbed Allen-Cahn
equation and gamma = -c0 F1(v~) for reaction-diffusion systems, where v~
solves v~_t = D Lap v~ + h(u~, v~) with u~ the step function of the interface.

Provides the radial ODE, a level-set evolution of the signed distance with
geometric redistancing, the coupled limit solve, Gaussian surface integrals
and the forcing-sensitivity check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import fft
from scipy.special import erf, i0e

from .corrector import PerturbationG, pressure_gamma
from .errors import CFLViolation, InterfaceLost, NonPositiveRadius, ReinitDiverged
from .geometry import (InterfaceState, PolylineDistance, contours, hausdorff, segments_of,
                       signed_distance)
from .grid import Field, Grid, laplacian
from .nonlinearity import _GL_W, _GL_X

__all__ = [
    "ForcingSpec", "no_forcing", "constant_forcing", "forcing_from_g", "forcing_from_v",
    "RadialTrajectory", "radial_solve", "evolve_distance", "reinitialize", "signed_distance",
    "hausdorff", "F1_quadrature", "limit_rd_solve", "limit_rd_grid_solve", "LimitRDResult",
    "gaussian_surface_integral", "gaussian_circle_integral", "forcing_sensitivity_check",
    "SensitivityReport", "cutoff_zeta", "estimate_d0", "write_polylines", "write_radius_trajectory",
]


# ---------------------------------------------------------------------------
# forcing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForcingSpec:
    """Normal-velocity forcing gamma(x, t).

    ``kind`` is "none", "constant", "from_g" or "from_v".  ``evaluate(x, t)``
    takes a tuple of coordinate arrays; ``radial(R, t)`` gives the forcing on
    a centred circle of radius R (used by the radial solvers).
    """

    kind: str
    value: Callable = field(repr=False)
    constant: float = 0.0

    def evaluate(self, x, t):
        return self.value(x, t)

    def radial(self, R, t):
        if self.kind in ("none", "constant"):
            return self.constant
        return float(self.value((np.atleast_1d(R),), t)[0])


def no_forcing() -> ForcingSpec:
    return ForcingSpec("none", lambda x, t: np.zeros(np.shape(x[0])), 0.0)


def constant_forcing(gamma: float) -> ForcingSpec:
    g = float(gamma)
    return ForcingSpec("constant", lambda x, t: np.full(np.shape(x[0]), g), g)


def forcing_from_g(pg: PerturbationG, nl, c0: float) -> ForcingSpec:
    """gamma = c0 (G(alpha_+) - G(alpha_-)) built from the perturbation g."""
    if pg.is_zero:
        return no_forcing()
    if pg.is_uniform:
        return constant_forcing(pressure_gamma(pg, nl, c0))

    def val(x, t):
        xs = [np.asarray(c, dtype=float) for c in x]
        shape = np.broadcast(*xs).shape
        flat = [np.broadcast_to(c, shape).ravel() for c in xs]
        out = np.array([pressure_gamma(pg, nl, c0, tuple(c[k] for c in flat), t) for k in range(flat[0].size)])
        return out.reshape(shape)

    return ForcingSpec("from_g", val, 0.0)


def F1_quadrature(rd, nl, v):
    """F1(v) = int_{alpha_-}^{alpha_+} f1(r, v) dr by Gauss-Legendre quadrature."""
    v = np.asarray(v, dtype=float)
    lo, hi = nl.alpha_minus, nl.alpha_plus
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    r = mid + half * _GL_X
    vals = rd.f1(r[(None,) * v.ndim], v[..., None])
    return half * np.sum(_GL_W * vals, axis=-1)


def forcing_from_v(rd, nl, c0: float, v_at: Callable) -> ForcingSpec:
    """gamma = -c0 F1(v~(x, t)) for a callable ``v_at(x, t)``."""
    return ForcingSpec("from_v", lambda x, t: -c0 * F1_quadrature(rd, nl, v_at(x, t)), 0.0)


# ---------------------------------------------------------------------------
# radial mode
# ---------------------------------------------------------------------------


@dataclass
class RadialTrajectory:
    t: np.ndarray
    R: np.ndarray
    extinct: bool = False
    t_extinct: float = float("nan")

    def at(self, t):
        """Radius at time(s) t (cubic interpolation in R^2, which is smooth through extinction)."""
        S = self.R ** 2
        return np.sqrt(np.maximum(np.interp(t, self.t, S), 0.0))


def radial_solve(R0: float, N_dim: int, forcing: ForcingSpec, t_end: float, dt: float,
                 allow_extinction: bool = False) -> RadialTrajectory:
    """Integrate R' = -(N-1)/R + gamma(R, t) by classical RK4.

    The state is S = R^2 (S' = -2(N-1) + 2 sqrt(S) gamma), which stays smooth
    up to extinction.  The run stops when R <= dt; the extinction time is
    then located by linear extrapolation of S.

    Raises
    ------
    NonPositiveRadius
        Extinction before ``t_end`` unless ``allow_extinction``.
    """
    if R0 <= 0:
        raise NonPositiveRadius("R0 must be positive")
    n = max(1, int(np.ceil(t_end / dt - 1e-9)))
    k = t_end / n

    def rhs(t, S):
        R = np.sqrt(max(S, 0.0))
        return -2.0 * (N_dim - 1) + 2.0 * R * forcing.radial(R, t)

    ts = [0.0]
    Ss = [R0 * R0]
    S = R0 * R0
    for i in range(n):
        t = i * k
        k1 = rhs(t, S)
        k2 = rhs(t + 0.5 * k, S + 0.5 * k * k1)
        k3 = rhs(t + 0.5 * k, S + 0.5 * k * k2)
        k4 = rhs(t + k, S + k * k3)
        S_new = S + k / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if S_new <= dt * dt:
            # extinction inside this step: S is linear in t to leading order
            slope = (S_new - S) / k
            t_ext = t + (-S / slope if slope < 0 else k)
            if not allow_extinction:
                raise NonPositiveRadius(f"extinction at t = {t_ext:.6g} before t_end = {t_end:g}")
            ts.append(t_ext)
            Ss.append(0.0)
            return RadialTrajectory(np.array(ts), np.sqrt(np.array(Ss)), True, float(t_ext))
        S = S_new
        ts.append(t + k)
        Ss.append(S)
    return RadialTrajectory(np.array(ts), np.sqrt(np.array(Ss)))


# ---------------------------------------------------------------------------
# level-set mode
# ---------------------------------------------------------------------------


def reinitialize(d: Field, spacing_factor: float = 0.25) -> Field:
    """Geometric redistancing: distance to the marching-squares zero level of d.

    The sign of each node is kept from the old field, so the zero level is
    reproduced up to the piecewise-linear reconstruction.

    Raises
    ------
    InterfaceLost
        d has no zero level.
    """
    v = d.values
    if not (np.any(v > 0) and np.any(v < 0)):
        raise InterfaceLost("signed distance has no zero level")
    grid = d.grid
    if grid.dim == 1:
        from .geometry import crossings_1d

        pts = crossings_1d(grid.x, v, 0.0)
        dist = np.min(np.abs(grid.x[:, None] - pts[None, :]), axis=1)
        return d.with_values(np.where(v < 0, -dist, dist))
    polys = contours(v, grid, 0.0)
    if not polys:
        raise InterfaceLost("no zero level found")
    pd = PolylineDistance(polys, spacing_factor * grid.h)
    dist = pd(grid.points()).reshape(grid.shape)
    out = np.where(v < 0, -dist, dist)
    if not np.all(np.isfinite(out)):
        raise ReinitDiverged("redistancing produced non-finite values")
    return d.with_values(out)


def evolve_distance(d: Field, gamma: ForcingSpec | Callable | float, dt: float, reinit_every: int = 5,
                    n_steps: int = 1, callback: Callable | None = None) -> Field:
    """Advance d_t = Lap d - gamma(x, t) by explicit Euler steps with periodic redistancing.

    ``gamma`` may be a ForcingSpec, a callable (x, t) -> values or a constant.
    """
    grid = d.grid
    if dt > grid.h ** 2 / (2 * grid.dim) * (1 + 1e-12):
        raise CFLViolation("dt exceeds h^2 / (2 dim)")
    if isinstance(gamma, ForcingSpec):
        gam = gamma.evaluate
    elif callable(gamma):
        gam = gamma
    else:
        g0 = float(gamma)
        gam = lambda x, t: g0  # noqa: E731
    X = grid.mesh()
    v = d.values.astype(float, copy=True)
    t = d.time
    lap = np.empty(grid.shape)
    for k in range(1, n_steps + 1):
        v = v + dt * (laplacian(v, grid.h, lap) - gam(X, t))
        t = d.time + k * dt
        if reinit_every and k % reinit_every == 0:
            v = reinitialize(Field(grid, v, t)).values
        if not np.all(np.isfinite(v)):
            raise ReinitDiverged(f"non-finite distance at t = {t:g}")
        if callback is not None:
            callback(Field(grid, v, t))
    return Field(grid, v, t)


# ---------------------------------------------------------------------------
# limit reaction-diffusion problem
# ---------------------------------------------------------------------------


@dataclass
class LimitRDResult:
    t: np.ndarray
    R: np.ndarray
    v: Field
    r_grid: Optional[np.ndarray] = None
    v_snapshots: list = field(default_factory=list)

    def radius_at(self, t):
        return np.interp(t, self.t, self.R)


def _radial_heat_matrix(r, D, N):
    """Finite-volume radial Laplacian on cell-centred nodes with v_r(0) = 0 = v_r(R_max)."""
    n = r.size
    dr = r[1] - r[0]
    faces = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [r[-1] + 0.5 * dr]])
    vol = (faces[1:] ** N - faces[:-1] ** N) / N
    flux = faces ** (N - 1) / dr
    flux[0] = 0.0
    flux[-1] = 0.0
    lower = flux[1:-1] / vol[1:]
    upper = flux[1:-1] / vol[:-1]
    diag = -(flux[:-1] + flux[1:]) / vol
    return D * diag, D * lower, D * upper


def limit_rd_solve(R0: float, rd, prof, v0, t_end: float, N_dim: int = 2, r_max: float = 1.0,
                   n_r: int = 801, dt: float | None = None) -> LimitRDResult:
    """Radially symmetric limit problem on the ball of radius ``r_max``.

    R' = -(N-1)/R - c0 F1(v~(R, t)) is co-evolved with
    v~_t = D (v~_rr + (N-1) v~_r / r) + h(u~, v~), u~ = alpha_- for r < R and
    alpha_+ otherwise, v~_r(0) = 0 and a no-flux condition at r_max.  The
    diffusion is treated implicitly (Crank-Nicolson), reaction and the
    radius by an explicit midpoint rule.

    ``v0`` is a callable r -> v0(r) or a constant.
    """
    from scipy.linalg import solve_banded

    nl = prof.nl
    c0 = prof.c0
    dr = r_max / n_r
    r = (np.arange(n_r) + 0.5) * dr
    v = (np.asarray(v0(r), dtype=float) if callable(v0) else np.full(n_r, float(v0)))
    diag, lower, upper = _radial_heat_matrix(r, rd.D, N_dim)
    if dt is None:
        dt = min(0.25 * dr, 1e-4)
    n = max(1, int(np.ceil(t_end / dt - 1e-9)))
    dt = t_end / n
    ab = np.zeros((3, n_r))
    ab[0, 1:] = -0.5 * dt * upper
    ab[1] = 1.0 - 0.5 * dt * diag
    ab[2, :-1] = -0.5 * dt * lower

    faces = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [r_max]])
    vol = (faces[1:] ** N_dim - faces[:-1] ** N_dim) / N_dim

    def u_tilde(R):
        # volume fraction of each radial cell inside the ball of radius R
        inside = np.clip((np.minimum(R, faces[1:]) ** N_dim - faces[:-1] ** N_dim) / N_dim, 0.0, None) / vol
        inside = np.clip(inside, 0.0, 1.0)
        return inside * nl.alpha_minus + (1.0 - inside) * nl.alpha_plus

    def v_at(R, vv):
        return float(np.interp(R, r, vv))

    def apply_A(vv):
        out = diag * vv
        out[1:] += lower * vv[:-1]
        out[:-1] += upper * vv[1:]
        return out

    def speed(R, vv):
        return -(N_dim - 1) / R - c0 * float(F1_quadrature(rd, nl, v_at(R, vv)))

    ts, Rs = [0.0], [float(R0)]
    R = float(R0)
    for i in range(n):
        # midpoint for the radius using the current v
        Rm = R + 0.5 * dt * speed(R, v)
        if Rm <= 0:
            raise NonPositiveRadius(f"extinction near t = {i * dt:g}")
        R_new = R + dt * speed(Rm, v)
        if R_new <= 0:
            raise NonPositiveRadius(f"extinction near t = {(i + 1) * dt:g}")
        um = u_tilde(0.5 * (R + R_new))
        rhs = v + 0.5 * dt * apply_A(v)
        # reaction by the midpoint rule with u~ at the mid radius
        vh = v + 0.5 * dt * rd.h_react(um, v)
        rhs = rhs + dt * rd.h_react(um, vh)
        v = solve_banded((1, 1), ab, rhs)
        R = R_new
        ts.append((i + 1) * dt)
        Rs.append(R)
    grid = Grid.line(r_max, n_r)
    return LimitRDResult(np.array(ts), np.array(Rs), Field(grid, np.interp(grid.x, r, v), t_end), r, [])


def _dct_neumann_eigs(n, h):
    k = np.arange(n)
    return (2.0 * np.cos(np.pi * k / (n - 1)) - 2.0) / (h * h)


def _disk_fraction(grid: Grid, center, R, sub: int = 8):
    """Area fraction of the node cells [x-h/2, x+h/2]^2 lying inside the disk."""
    X, Y = grid.mesh()
    h = grid.h
    r = np.hypot(X - center[0], Y - center[1])
    frac = (r < R).astype(float)
    band = np.abs(r - R) <= h
    if np.any(band):
        o = (np.arange(sub) + 0.5) / sub - 0.5
        ox, oy = np.meshgrid(o * h, o * h)
        xb = X[band][:, None] + ox.ravel()[None, :]
        yb = Y[band][:, None] + oy.ravel()[None, :]
        frac[band] = np.mean(np.hypot(xb - center[0], yb - center[1]) < R, axis=1)
    return frac


def limit_rd_grid_solve(R0: float, rd, prof, v0, t_end: float, grid: Grid, center=None,
                        dt: float = 1e-5, n_theta: int = 256, snapshot_times=()) -> LimitRDResult:
    """Limit problem on a rectangle with a circular interface.

    v~ lives on ``grid`` with homogeneous Neumann conditions; diffusion is
    integrated exactly in the discrete-cosine basis of the reflected-ghost
    Laplacian, the reaction h(u~, v~) by RK4 with u~ the cell area fraction of
    the disk.  The interface is kept circular: R' = -(N-1)/R - c0 mean_circle F1(v~).
    """
    nl = prof.nl
    c0 = prof.c0
    c = (0.5 * grid.Lx, 0.5 * grid.Ly) if center is None else center
    v = (np.asarray(v0(grid.mesh()), dtype=float) if callable(v0) else np.full(grid.shape, float(v0)))
    lam = _dct_neumann_eigs(grid.nx, grid.h)[None, :] + _dct_neumann_eigs(grid.ny, grid.h)[:, None]
    n = max(1, int(np.ceil(t_end / dt - 1e-9)))
    dt = t_end / n
    decay_half = np.exp(0.5 * dt * rd.D * lam)
    th = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    ct, st = np.cos(th), np.sin(th)
    xg, yg = grid.x, grid.y
    from scipy.interpolate import RectBivariateSpline

    def circle_mean_F1(R, spl):
        vals = spl.ev(c[1] + R * st, c[0] + R * ct)
        return float(np.mean(F1_quadrature(rd, nl, vals)))

    def local_spline(R, vv):
        # bicubic spline on the bounding box of the circles reachable in one step
        pad = 0.05 * R + 6 * grid.h
        ix = (xg >= c[0] - R - pad) & (xg <= c[0] + R + pad)
        iy = (yg >= c[1] - R - pad) & (yg <= c[1] + R + pad)
        return RectBivariateSpline(yg[iy], xg[ix], vv[np.ix_(iy, ix)], kx=3, ky=3)

    def diffuse_half(vv):
        return fft.idctn(fft.dctn(vv, type=1) * decay_half, type=1)

    def react(vv, uu, k):
        f = lambda y: rd.h_react(uu, y)  # noqa: E731
        k1 = f(vv)
        k2 = f(vv + 0.5 * k * k1)
        k3 = f(vv + 0.5 * k * k2)
        k4 = f(vv + k * k3)
        return vv + k / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def speed(R, spl):
        return -1.0 / R - c0 * circle_mean_F1(R, spl)

    ts, Rs, snaps = [0.0], [float(R0)], []
    want = sorted(snapshot_times)
    R = float(R0)
    for i in range(n):
        spl = local_spline(R, v)
        Rm = R + 0.5 * dt * speed(R, spl)
        if Rm <= 0:
            raise NonPositiveRadius(f"extinction near t = {i * dt:g}")
        R_new = R + dt * speed(Rm, spl)
        if R_new <= 0:
            raise NonPositiveRadius(f"extinction near t = {(i + 1) * dt:g}")
        frac = _disk_fraction(grid, c, 0.5 * (R + R_new))
        um = frac * nl.alpha_minus + (1 - frac) * nl.alpha_plus
        v_old = v
        v = diffuse_half(v)
        v = react(v, um, dt)
        v = diffuse_half(v)
        R = R_new
        t = (i + 1) * dt
        ts.append(t)
        Rs.append(R)
        while want and t >= want[0] - 1e-12 * dt:
            # linear interpolation in time to the requested instant
            th = (want[0] - (t - dt)) / dt
            snaps.append(Field(grid, (1 - th) * v_old + th * v, want[0]))
            want.pop(0)
    return LimitRDResult(np.array(ts), np.array(Rs), Field(grid, v, t_end), None, snaps)


# ---------------------------------------------------------------------------
# Gaussian surface integrals
# ---------------------------------------------------------------------------


def gaussian_surface_integral(curve, x, t: float, D: float = 1.0) -> float:
    """int_Gamma G0(x, y, t) dS_y for a planar polyline Gamma.

    G0 = (4 pi D t)^-1 exp(-|x - y|^2 / (4 D t)).  On each straight segment the
    integral is exact: the Gaussian factorises into the perpendicular part and
    an error-function difference along the segment.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    polys = curve if isinstance(curve, (list, tuple)) else [curve]
    segs = segments_of(polys)
    P = np.asarray(x, dtype=float).reshape(-1, 2)
    A = segs[:, 0]
    AB = segs[:, 1] - A
    L = np.linalg.norm(AB, axis=1)
    keep = L > 0
    A, AB, L = A[keep], AB[keep], L[keep]
    e = AB / L[:, None]
    s4 = np.sqrt(4.0 * D * t)
    out = np.empty(P.shape[0])
    for i, p in enumerate(P):
        AP = p[None, :] - A
        s0 = np.einsum("ij,ij->i", AP, e)
        perp2 = np.maximum(np.einsum("ij,ij->i", AP, AP) - s0 * s0, 0.0)
        along = 0.5 * np.sqrt(np.pi) * s4 * (erf((L - s0) / s4) - erf(-s0 / s4))
        out[i] = np.sum(np.exp(-perp2 / (s4 * s4)) * along) / (4.0 * np.pi * D * t)
    return float(out[0]) if out.size == 1 else out


def gaussian_circle_integral(R: float, rho, t: float, D: float = 1.0):
    """Closed form of the Gaussian surface integral over a circle of radius R.

    At distance rho from the centre:
    R (2 D t)^-1 exp(-(rho - R)^2 / (4 D t)) * I0e(rho R / (2 D t)).
    """
    rho = np.asarray(rho, dtype=float)
    z = rho * R / (2.0 * D * t)
    return R / (2.0 * D * t) * np.exp(-((rho - R) ** 2) / (4.0 * D * t)) * i0e(z)


# ---------------------------------------------------------------------------
# forcing sensitivity
# ---------------------------------------------------------------------------


@dataclass
class SensitivityReport:
    t: np.ndarray
    dR: np.ndarray
    eta0: float
    K: float
    M: float
    bound: np.ndarray
    holds: bool

    @property
    def ratio(self):
        """|dR(t)| / eta0."""
        return np.abs(self.dR) / self.eta0 if self.eta0 else np.zeros_like(self.dR)


def forcing_sensitivity_check(forcing_a: ForcingSpec, forcing_b: ForcingSpec, R0: float, t_end: float,
                              dt: float = 1e-5, N_dim: int = 2, eta0: float | None = None,
                              jump: float = 2.0, c0: float | None = None,
                              K: float | None = None, M: float | None = None) -> SensitivityReport:
    """Compare two radial solves whose forcings differ by a constant.

    For radial interfaces the Hausdorff distance is |R_a - R_b|.  Writing
    Delta' = (N-1) Delta / (R_a R_b) + c0 (alpha_+ - alpha_-) eta0, Gronwall gives
    |Delta(t)| <= K (e^{M t} - 1) eta0 with M = sup (N-1)/(R_a R_b) and
    K = c0 (alpha_+ - alpha_-) / M; both are measured from the two runs unless
    given.  ``jump`` is alpha_+ - alpha_-.
    """
    ta = radial_solve(R0, N_dim, forcing_a, t_end, dt)
    tb = radial_solve(R0, N_dim, forcing_b, t_end, dt)
    dR = ta.R - tb.R
    if eta0 is None:
        eta0 = abs(forcing_a.radial(R0, 0.0) - forcing_b.radial(R0, 0.0)) / (c0 * jump) if c0 else 0.0
    if M is None:
        M = float(np.max((N_dim - 1) / (ta.R * tb.R)))
    if K is None:
        K = (c0 if c0 is not None else 1.0) * jump / M
    bound = K * np.expm1(M * ta.t) * eta0
    holds = bool(np.all(np.abs(dR) <= bound * (1 + 1e-9) + 1e-14))
    return SensitivityReport(ta.t, dR, float(eta0), float(K), float(M), bound, holds)


# ---------------------------------------------------------------------------
# cut-off distance
# ---------------------------------------------------------------------------


def cutoff_zeta(s, d0: float):
    """Smooth non-decreasing cut-off: zeta(s) = s for |s| <= d0, = +-2 d0 for |s| >= 2 d0.

    On d0 <= |s| <= 2 d0 the quintic x + 4x^3 - 7x^4 + 3x^5 joins the two
    regimes with matching first and second derivatives.
    """
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    x = np.clip((a - d0) / d0, 0.0, 1.0)
    P = x + 4 * x ** 3 - 7 * x ** 4 + 3 * x ** 5
    mid = np.minimum(d0 + d0 * P, 2 * d0)
    out = np.where(a <= d0, a, np.where(a >= 2 * d0, 2 * d0, mid))
    return np.sign(s) * out


def cutoff_zeta_prime(s, d0: float):
    a = np.abs(np.asarray(s, dtype=float))
    x = np.clip((a - d0) / d0, 0.0, 1.0)
    dP = 1 + 12 * x ** 2 - 28 * x ** 3 + 15 * x ** 4
    return np.where(a <= d0, 1.0, np.where(a >= 2 * d0, 0.0, dP))


def cutoff_zeta_second(s, d0: float):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    x = np.clip((a - d0) / d0, 0.0, 1.0)
    d2P = 24 * x - 84 * x ** 2 + 60 * x ** 3
    return np.where((a > d0) & (a < 2 * d0), np.sign(s) * d2P / d0, 0.0)


def estimate_d0(polylines, grid: Grid) -> float:
    """Half the minimum of the distance of the curves to the box boundary and their reach.

    The reach is estimated as 1 / max curvature, the curvature from the
    circumscribed circles of consecutive vertex triples.  In 1D the curves
    are crossing points and the reach is half the smallest gap between them.
    """
    if grid.dim == 1:
        pts = np.asarray(polylines, dtype=float).ravel()
        bnd = float(np.min(np.minimum(pts, grid.Lx - pts)))
        reach = 0.5 * float(np.min(np.diff(np.sort(pts)))) if pts.size > 1 else np.inf
        return 0.5 * min(bnd, reach)
    bnd = np.inf
    kmax = 0.0
    for p in polylines:
        bnd = min(bnd, float(np.min(np.minimum.reduce([p[:, 0], grid.Lx - p[:, 0], p[:, 1], grid.Ly - p[:, 1]]))))
        q = p[:-1] if np.allclose(p[0], p[-1]) else p
        a, b, c = np.roll(q, 1, axis=0), q, np.roll(q, -1, axis=0)
        ab = np.linalg.norm(b - a, axis=1)
        bc = np.linalg.norm(c - b, axis=1)
        ca = np.linalg.norm(a - c, axis=1)
        cross = np.abs((b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0])
        k = 2 * cross / np.maximum(ab * bc * ca, 1e-300)
        if not np.allclose(p[0], p[-1]):
            k = k[1:-1]
        if k.size:
            kmax = max(kmax, float(np.percentile(k, 99)))
    reach = 1.0 / kmax if kmax > 0 else np.inf
    return 0.5 * min(bnd, reach)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def write_polylines(polylines, path) -> None:
    """CSV vertex list with columns curve, x, y (curves in the given order)."""
    polys = polylines if isinstance(polylines, (list, tuple)) else [polylines]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve", "x", "y"])
        for k, p in enumerate(polys):
            for x, y in p:
                w.writerow([k, "%.17g" % x, "%.17g" % y])


def write_radius_trajectory(traj, path) -> None:
    """CSV with columns t, R for a RadialTrajectory or LimitRDResult."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "R"])
        for t, R in zip(traj.t, traj.R):
            w.writerow(["%.17g" % t, "%.17g" % R])
