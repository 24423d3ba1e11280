"""
Diffuse-interface solvers for the perturbed Allen-Cahn equation

    u_t = Lap u + eps^-2 (f(u) - eps g_eps(x, t, u))

and for the reaction-diffusion system

    u_t = Lap u + eps^-2 f_eps(u, v),   v_t = D Lap v + h(u, v),
    f_eps(u, v) = f(u) + eps f1(u, v) + eps^2 f2_eps(u, v),

on uniform grids with homogeneous Neumann boundaries.

Time stepping is Strang splitting: half a step of the pointwise reaction,
one explicit diffusion step (two-stage Heun, second order and monotone
under the usual h^2 / (2 dim) restriction), half a step of reaction.  The reaction uses the
exact flow of y' = y - y^3 when f is the cubic and g vanishes, otherwise four
classical Runge-Kutta sub-steps per half step.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit

from .corrector import PerturbationG, zero_g
from .errors import CFLViolation, GridTooCoarse, NonFinite
from .geometry import InterfaceState, distance_to_interface, extract_interface
from .grid import Field, Grid, laplacian

__all__ = [
    "RDParams", "fhn_params", "pp_params", "check_resolution", "stable_dt",
    "ACStepper", "RDStepper", "step_ac", "step_rd", "extract_interface",
    "layer_thickness", "invariant_rectangle_check", "ramp_1d", "radial_2d",
    "ellipse_2d", "is_cubic", "write_snapshot", "read_snapshot",
]


def is_cubic(nl) -> bool:
    c = getattr(nl, "coeffs", None)
    return c is not None and np.allclose(np.asarray(c, dtype=float), [0.0, 1.0, 0.0, -1.0], atol=0, rtol=0)


def check_resolution(grid: Grid, eps: float):
    """Reject grids that resolve the layer with fewer than 4 cells per eps."""
    if eps < 4.0 * grid.h * (1 - 1e-12):
        raise GridTooCoarse(f"eps = {eps:g} < 4h = {4 * grid.h:g}")


def stable_dt(grid: Grid, D: float = 1.0, safety: float = 1.0) -> float:
    """Largest explicit-diffusion step h^2 / (2 dim max(1, D)), times ``safety``."""
    return safety * grid.h ** 2 / (2 * grid.dim * max(1.0, D))


def _check_cfl(grid, dt, D=1.0):
    lim = stable_dt(grid, D)
    if dt > lim * (1 + 1e-12):
        raise CFLViolation(f"dt = {dt:g} exceeds the explicit limit {lim:g}")


# ---------------------------------------------------------------------------
# reaction sub-step
# ---------------------------------------------------------------------------


def _rk4(rhs, y, t, dt, n_sub):
    k = dt / n_sub
    for i in range(n_sub):
        s = t + i * k
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * k, y + 0.5 * k * k1)
        k3 = rhs(s + 0.5 * k, y + 0.5 * k * k2)
        k4 = rhs(s + k, y + k * k3)
        y = y + (k / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


@njit(cache=True)
def _flow(x, E, E2m1):
    return x * E / np.sqrt(1.0 + x * x * E2m1)


@njit(cache=True)
def _strang_cubic_1d(u, w, w1, out, r, E, E2m1):
    """out = R(Heun diffusion of w), w = R(u); R the exact half-step cubic flow, r = dt/h^2."""
    n = u.size
    for i in range(n):
        w[i] = _flow(u[i], E, E2m1)
    for i in range(n):
        lo = w[i - 1] if i > 0 else w[1]
        hi = w[i + 1] if i < n - 1 else w[n - 2]
        w1[i] = w[i] + r * (lo - 2.0 * w[i] + hi)
    for i in range(n):
        lo = w1[i - 1] if i > 0 else w1[1]
        hi = w1[i + 1] if i < n - 1 else w1[n - 2]
        out[i] = _flow(0.5 * (w[i] + w1[i] + r * (lo - 2.0 * w1[i] + hi)), E, E2m1)


@njit(cache=True)
def _lap_2d(w, out, r, ny, nx):
    for j in range(ny):
        jm = j - 1 if j > 0 else 1
        jp = j + 1 if j < ny - 1 else ny - 2
        for i in range(nx):
            im = i - 1 if i > 0 else 1
            ip = i + 1 if i < nx - 1 else nx - 2
            out[j, i] = r * (w[j, im] + w[j, ip] + w[jm, i] + w[jp, i] - 4.0 * w[j, i])


@njit(cache=True)
def _strang_cubic_2d(u, w, w1, out, r, E, E2m1):
    ny, nx = u.shape
    for j in range(ny):
        for i in range(nx):
            w[j, i] = _flow(u[j, i], E, E2m1)
    _lap_2d(w, w1, r, ny, nx)
    for j in range(ny):
        for i in range(nx):
            w1[j, i] += w[j, i]
    _lap_2d(w1, out, r, ny, nx)
    for j in range(ny):
        for i in range(nx):
            out[j, i] = _flow(0.5 * (w[j, i] + w1[j, i] + out[j, i]), E, E2m1)


def heun_diffusion(w, h, dt, D=1.0, buf=None):
    """Second-order explicit diffusion step w + dt D Lap w + (dt D Lap)^2 w / 2.

    Monotone (non-negative stencil weights) for dt D <= h^2 / (2 dim).
    """
    k = dt * D
    w1 = w + k * laplacian(w, h, buf)
    return 0.5 * (w + w1 + k * laplacian(w1, h, buf))


class ACStepper:
    """Strang-split stepper for the perturbed Allen-Cahn equation on a fixed grid.

    Parameters
    ----------
    grid : Grid
    nl : BistableNonlinearity
    pg : PerturbationG, optional
        Perturbation; ``None`` means g = 0.
    eps : float
    dt : float
    n_sub : int
        Runge-Kutta sub-steps per half step when the exact flow is not used.
    """

    def __init__(self, grid: Grid, nl, pg: Optional[PerturbationG], eps: float, dt: float, n_sub: int = 4):
        check_resolution(grid, eps)
        _check_cfl(grid, dt)
        self.grid, self.nl, self.eps, self.dt, self.n_sub = grid, nl, float(eps), float(dt), int(n_sub)
        self.pg = pg if pg is not None else zero_g()
        self.exact = is_cubic(nl) and self.pg.is_zero
        tau = 0.5 * dt / eps ** 2
        self._E = np.exp(tau)
        self._E2m1 = np.expm1(2 * tau)
        self._X = grid.mesh()
        self._lap = np.empty(grid.shape)

    def react(self, u, t, dt):
        """Pointwise reaction over [t, t + dt]."""
        if self.exact and abs(dt - 0.5 * self.dt) < 1e-15 * self.dt:
            return u * self._E / np.sqrt(1.0 + u * u * self._E2m1)
        if self.exact:
            tau = dt / self.eps ** 2
            return u * np.exp(tau) / np.sqrt(1.0 + u * u * np.expm1(2 * tau))
        inv = 1.0 / self.eps ** 2
        f, pg, eps, X = self.nl.f, self.pg, self.eps, self._X
        if pg.is_zero:
            return _rk4(lambda s, y: inv * f(y), u, t, dt, self.n_sub)
        if pg.kind == "constant" and pg.g_eps is None:
            g0 = pg.value
            return _rk4(lambda s, y: inv * (f(y) - eps * g0), u, t, dt, self.n_sub)
        return _rk4(lambda s, y: inv * (f(y) - eps * pg.evaluate(X, s, y, eps)), u, t, dt, self.n_sub)

    def step(self, u: np.ndarray, t: float) -> np.ndarray:
        """One Strang step from time t; returns a new array."""
        dt = self.dt
        if self.exact:
            w = np.empty_like(u)
            w1 = np.empty_like(u)
            out = np.empty_like(u)
            kern = _strang_cubic_1d if u.ndim == 1 else _strang_cubic_2d
            kern(np.ascontiguousarray(u, dtype=float), w, w1, out, dt / self.grid.h ** 2, self._E, self._E2m1)
            return out
        w = self.react(u, t, 0.5 * dt)
        w = heun_diffusion(w, self.grid.h, dt, 1.0, self._lap)
        w = self.react(w, t + 0.5 * dt, 0.5 * dt)
        return w

    def run(self, u: Field, n_steps: int, callback: Callable | None = None, every: int = 1) -> Field:
        """Advance ``n_steps``; ``callback(field)`` is called every ``every`` steps."""
        v = u.values.astype(float, copy=True)
        t = u.time
        for k in range(1, n_steps + 1):
            v = self.step(v, t)
            t = u.time + k * self.dt
            if k % every == 0 or k == n_steps:
                if not np.all(np.isfinite(v)):
                    raise NonFinite(f"non-finite values at t = {t:g}")
                if callback is not None and k % every == 0:
                    callback(Field(u.grid, v.copy(), t))
        return Field(u.grid, v, t)


def step_ac(u: Field, nl, pg: Optional[PerturbationG], eps: float, dt: float) -> Field:
    """One Strang-split step of the perturbed Allen-Cahn equation.

    Raises
    ------
    CFLViolation
        dt > h^2 / (2 dim).
    GridTooCoarse
        eps < 4h.
    NonFinite
        The step produced non-finite values.
    """
    st = ACStepper(u.grid, nl, pg, eps, dt)
    v = st.step(u.values.astype(float), u.time)
    if not np.all(np.isfinite(v)):
        raise NonFinite("non-finite values after the step")
    return Field(u.grid, v, u.time + dt)


# ---------------------------------------------------------------------------
# reaction-diffusion systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RDParams:
    """Coupling data of the reaction-diffusion system.

    Attributes
    ----------
    D : float
        Diffusivity of v.
    f1 : callable (u, v) -> value
        First-order coupling in the u-equation.
    f2_eps : callable (eps, u, v) -> value
        Second-order coupling.
    h_react : callable (u, v) -> value
        Reaction of v.
    L_box, M1_box : float
        Invariant rectangle [-L, L] x [-M1, M1] (or [0, L] x [0, M1] when
        ``nonnegative``).
    F1 : callable v -> int_{alpha_-}^{alpha_+} f1(r, v) dr, optional
        Closed form used by the limit problem; computed by quadrature if absent.
    """

    D: float
    f1: Callable = field(repr=False)
    f2_eps: Callable = field(repr=False)
    h_react: Callable = field(repr=False)
    L_box: float
    M1_box: float
    name: str = "custom"
    nonnegative: bool = False
    F1: Optional[Callable] = field(default=None, repr=False)
    alpha: float = 1.0
    beta: float = 1.0

    def g_of(self, eps, u, v):
        """Induced perturbation g_eps[v](u) = -f1(u, v) - eps f2_eps(u, v)."""
        return -self.f1(u, v) - eps * self.f2_eps(eps, u, v)

    def rectangle_ok(self, n: int = 401) -> bool:
        """Sampled sign condition h(u, lower) >= 0 >= h(u, M1) for u in the box."""
        lo_u = 0.0 if self.nonnegative else -self.L_box
        lo_v = 0.0 if self.nonnegative else -self.M1_box
        u = np.linspace(lo_u, self.L_box, n)
        return bool(np.all(self.h_react(u, np.full_like(u, lo_v)) >= 0)
                    and np.all(self.h_react(u, np.full_like(u, self.M1_box)) <= 0))


def fhn_params(alpha: float = 1.0, beta: float = 1.0, D: float = 1.0, L: float = 1.1, M1: float = 2.0) -> RDParams:
    """FitzHugh-Nagumo coupling: u-reaction f(u) - eps v, v-reaction alpha u - beta v."""
    return RDParams(
        D=float(D),
        f1=lambda u, v: -np.asarray(v, dtype=float) + 0.0 * u,
        f2_eps=lambda e, u, v: np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape),
        h_react=lambda u, v: alpha * u - beta * v,
        L_box=float(L), M1_box=float(M1), name="fhn",
        F1=None, alpha=float(alpha), beta=float(beta),
    )


def pp_params(alpha: float = 1.0, beta: float = 1.0, D: float = 1.0, L: float = 1.0, M1: float = 1.0) -> RDParams:
    """Prey-predator coupling: u-reaction ((1-u)(u-1/2) - eps v) u, v-reaction (alpha u - beta v) v.

    The bistable part is f(u) = (1-u)(u-1/2)u, so f1(u, v) = -u v.
    """
    return RDParams(
        D=float(D),
        f1=lambda u, v: -u * v,
        f2_eps=lambda e, u, v: np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape),
        h_react=lambda u, v: (alpha * u - beta * v) * v,
        L_box=float(L), M1_box=float(M1), name="pp", nonnegative=True,
        F1=None, alpha=float(alpha), beta=float(beta),
    )


class RDStepper:
    """Split stepper for the reaction-diffusion system.

    Order within a step: u half-reaction with v frozen, explicit diffusion
    of u and v, u half-reaction, v reaction over the full step (RK4 with u
    frozen at its new value).
    """

    def __init__(self, grid: Grid, nl, rd: RDParams, eps: float, dt: float, n_sub: int = 4):
        check_resolution(grid, eps)
        _check_cfl(grid, dt, rd.D)
        self.grid, self.nl, self.rd, self.eps, self.dt, self.n_sub = grid, nl, rd, float(eps), float(dt), int(n_sub)
        self._lap = np.empty(grid.shape)

    def react_u(self, u, v, dt):
        inv = 1.0 / self.eps ** 2
        f, rd, eps = self.nl.f, self.rd, self.eps
        return _rk4(lambda s, y: inv * (f(y) - eps * rd.g_of(eps, y, v)), u, 0.0, dt, self.n_sub)

    def react_v(self, u, v, dt):
        h = self.rd.h_react
        return _rk4(lambda s, y: h(u, y), v, 0.0, dt, 1)

    def step(self, u, v):
        dt, hgrid = self.dt, self.grid.h
        u1 = self.react_u(u, v, 0.5 * dt)
        u1 = heun_diffusion(u1, hgrid, dt, 1.0, self._lap)
        v1 = heun_diffusion(v, hgrid, dt, self.rd.D, self._lap)
        u1 = self.react_u(u1, v, 0.5 * dt)
        v1 = self.react_v(u1, v1, dt)
        return u1, v1

    def run(self, u: Field, v: Field, n_steps: int, callback: Callable | None = None, every: int = 1):
        uu = u.values.astype(float, copy=True)
        vv = v.values.astype(float, copy=True)
        t0 = u.time
        for k in range(1, n_steps + 1):
            uu, vv = self.step(uu, vv)
            t = t0 + k * self.dt
            if k % every == 0 or k == n_steps:
                if not (np.all(np.isfinite(uu)) and np.all(np.isfinite(vv))):
                    raise NonFinite(f"non-finite values at t = {t:g}")
                if callback is not None and k % every == 0:
                    callback(Field(u.grid, uu.copy(), t), Field(u.grid, vv.copy(), t))
        t = t0 + n_steps * self.dt
        return Field(u.grid, uu, t), Field(u.grid, vv, t)


def step_rd(u: Field, v: Field, nl, rd: RDParams, eps: float, dt: float):
    """One split step of the reaction-diffusion system; returns (u, v)."""
    st = RDStepper(u.grid, nl, rd, eps, dt)
    uu, vv = st.step(u.values.astype(float), v.values.astype(float))
    if not (np.all(np.isfinite(uu)) and np.all(np.isfinite(vv))):
        raise NonFinite("non-finite values after the step")
    return Field(u.grid, uu, u.time + dt), Field(v.grid, vv, v.time + dt)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def layer_thickness(u: Field, iface: InterfaceState, eta: float, nl) -> float:
    """Width of the transition layer.

    Nodes whose value is not within ``eta`` of a stable zero are "in the
    layer".  The width is the largest distance to the interface over layer
    nodes with u > a plus the largest over layer nodes with u < a, i.e. the
    full extent of the layer across the interface (about 4.16 eps for the
    standing wave with eta = 0.1).  Returns 0 when no node is in the layer.
    """
    am, a, ap = nl.alpha_minus, nl.a, nl.alpha_plus
    if not (0 < eta < min(a - am, ap - a)):
        raise ValueError("eta must lie in (0, min(a - alpha_-, alpha_+ - a))")
    vals = u.values.ravel()
    near = (np.abs(vals - am) <= eta) | (np.abs(vals - ap) <= eta)
    off = ~near
    if not np.any(off):
        return 0.0
    pts = None if u.grid.dim == 1 else u.grid.points()[off]
    if u.grid.dim == 1:
        dist = distance_to_interface(u.grid, iface, u.grid.x[off])
    else:
        dist = distance_to_interface(u.grid, iface, pts)
    above = vals[off] > a
    width = 0.0
    for sel in (above, ~above):
        if np.any(sel):
            width += float(np.max(dist[sel]))
    return width


def invariant_rectangle_check(u: Field, v: Field, rd: RDParams) -> bool:
    """True iff (u, v) lies in the invariant rectangle at every node."""
    lo_u = 0.0 if rd.nonnegative else -rd.L_box
    lo_v = 0.0 if rd.nonnegative else -rd.M1_box
    uu, vv = u.values, v.values
    return bool(np.all((uu >= lo_u) & (uu <= rd.L_box) & (vv >= lo_v) & (vv <= rd.M1_box)))


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def ramp_1d(grid: Grid, x0: float | None = None, slope: float = 1.0, flat: float = 0.25, a: float = 0.0) -> Field:
    """Ramp u0 crossing ``a`` at ``x0`` with zero slope at both ends.

    u0' = slope * w(x) where w = 1 in the middle of the interval and tapers to
    0 through a half cosine over the last ``flat * L`` at each end, so that
    u0 satisfies the Neumann condition exactly (all derivatives of odd order
    vanish at the boundary).
    """
    L = grid.Lx
    x = grid.x
    x0 = 0.5 * L if x0 is None else float(x0)
    ell = flat * L
    w = np.ones_like(x)
    lo = x < ell
    hi = x > L - ell
    w[lo] = 0.5 * (1 - np.cos(np.pi * x[lo] / ell))
    w[hi] = 0.5 * (1 - np.cos(np.pi * (L - x[hi]) / ell))

    def W(s):
        # antiderivative of w from 0
        s = np.asarray(s, dtype=float)
        out = np.where(s < ell, 0.5 * (s - ell / np.pi * np.sin(np.pi * s / ell)), 0.5 * ell + (s - ell))
        tail = s > L - ell
        r = L - s
        full = 0.5 * ell + (L - 2 * ell) + 0.5 * ell
        out = np.where(tail, full - 0.5 * (r - ell / np.pi * np.sin(np.pi * r / ell)), out)
        return out

    u = a + slope * (W(x) - W(x0))
    return Field(grid, u)


def radial_2d(grid: Grid, R0: float, center=None, sigma0: float = 0.1, alpha_minus=-1.0, alpha_plus=1.0) -> Field:
    """u0 = tanh((|x - x_c| - R0) / sigma0) rescaled to (alpha_-, alpha_+): alpha_- inside."""
    c = (0.5 * grid.Lx, 0.5 * grid.Ly) if center is None else center
    X, Y = grid.mesh()
    r = np.hypot(X - c[0], Y - c[1])
    s = np.tanh((r - R0) / sigma0)
    u = 0.5 * (alpha_plus + alpha_minus) + 0.5 * (alpha_plus - alpha_minus) * s
    return Field(grid, u)


def ellipse_2d(grid: Grid, a_ax: float, b_ax: float, center=None, sigma0: float = 0.1) -> Field:
    """Ellipse variant: tanh((rho - 1) * sqrt(a b) / sigma0), rho the elliptic radius; -1 inside."""
    c = (0.5 * grid.Lx, 0.5 * grid.Ly) if center is None else center
    X, Y = grid.mesh()
    rho = np.sqrt(((X - c[0]) / a_ax) ** 2 + ((Y - c[1]) / b_ax) ** 2)
    return Field(grid, np.tanh((rho - 1.0) * np.sqrt(a_ax * b_ax) / sigma0))


# ---------------------------------------------------------------------------
# snapshot export
# ---------------------------------------------------------------------------


def write_snapshot(u: Field, path, v: Field | None = None) -> list:
    """Write a snapshot; returns the list of files written.

    1D: CSV with columns x, u[, v].  2D: CSV of row-major u values (one grid
    row per line, ``<stem>_v.csv`` for v) plus a JSON sidecar with nx, ny,
    extents and time.
    """
    path = str(path)
    g = u.grid
    if g.dim == 1:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u"] + (["v"] if v is not None else []))
            cols = [g.x, u.values] + ([v.values] if v is not None else [])
            for row in zip(*cols):
                w.writerow(["%.17g" % c for c in row])
        return [path]
    stem = path[:-4] if path.endswith(".csv") else path
    files = []
    for name, f in (("", u), ("_v", v)):
        if f is None:
            continue
        fn = f"{stem}{name}.csv"
        np.savetxt(fn, f.values, delimiter=",", fmt="%.17g")
        files.append(fn)
    meta = {"nx": g.nx, "ny": g.ny, "Lx": g.Lx, "Ly": g.Ly, "h": g.h, "time": u.time,
            "order": "row-major, rows = y index", "fields": ["u"] + (["v"] if v is not None else [])}
    with open(stem + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    files.append(stem + ".json")
    return files


def read_snapshot(path):
    """Inverse of ``write_snapshot``; returns (u, v) with v possibly None."""
    path = str(path)
    stem = path[:-4] if path.endswith(".csv") else path
    try:
        with open(stem + ".json") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        data = np.genfromtxt(path, delimiter=",", names=True)
        g = Grid.line(float(data["x"][-1]), data["x"].size)
        v = Field(g, np.asarray(data["v"], float)) if "v" in data.dtype.names else None
        return Field(g, np.asarray(data["u"], float)), v
    g = Grid(2, meta["Lx"], meta["nx"], meta["Ly"], meta["ny"])
    u = Field(g, np.loadtxt(stem + ".csv", delimiter=",", ndmin=2), meta["time"])
    v = None
    if "v" in meta["fields"]:
        v = Field(g, np.loadtxt(stem + "_v.csv", delimiter=",", ndmin=2), meta["time"])
    return u, v
