"""
First-order inner corrector.

The linearised operator psi'' + f'(U0) psi around the standing wave has
kernel U0'; a bounded solution of

    psi'' + f'(U0(z)) psi = A(z),  psi(0) = 0

exists iff int A U0' dz = 0 and is given by variation of constants,

    psi(z) = phi(z) int_0^z phi^{-2}(zeta) int_{-inf}^zeta A phi dxi dzeta,  phi = U0'.

The pressure gamma = c0 (G(alpha_+) - G(alpha_-)), G(s) = int_a^s g, is exactly the
value that makes A0 = g(U0) - gamma U0' orthogonal to U0'.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import SolvabilityViolation, TailDivergence
from .nonlinearity import _GL_W, _GL_X

# ---------------------------------------------------------------------------
# perturbation terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationG:
    """The perturbation g(x, t, u) and its epsilon-dependent version g_eps.

    Callables receive ``x`` as a tuple of coordinate arrays (broadcastable
    against ``u``), a scalar time ``t`` and an array ``u``.

    Parameters
    ----------
    g : callable
        Limit perturbation (x, t, u) -> value.
    g_eps : callable, optional
        (eps, x, t, u) -> value; defaults to g.
    bound_G : float
        Sup of |g_eps| over the admissible box.
    kind : str
        "zero", "constant" or "custom"; the first two enable fast paths.
    value : float
        The constant for kind == "constant".
    """

    g: Callable = field(repr=False)
    g_eps: Optional[Callable] = field(default=None, repr=False)
    bound_G: float = 0.0
    neumann_compatible: bool = True
    depends_on_x: bool = False
    kind: str = "custom"
    value: float = 0.0

    def evaluate(self, x, t, u, eps=None):
        if eps is not None and self.g_eps is not None:
            return self.g_eps(eps, x, t, u)
        return self.g(x, t, u)

    @property
    def is_zero(self):
        return self.kind == "zero"

    @property
    def is_uniform(self):
        """True when g does not depend on (x, t), so the corrector is global."""
        return self.kind in ("zero", "constant") or not self.depends_on_x


def zero_g() -> PerturbationG:
    return PerturbationG(lambda x, t, u: np.zeros_like(np.asarray(u, dtype=float)), None, 0.0,
                         True, False, "zero", 0.0)


def constant_g(g0: float) -> PerturbationG:
    g0 = float(g0)
    return PerturbationG(lambda x, t, u: np.full_like(np.asarray(u, dtype=float), g0), None, abs(g0),
                         True, False, "constant", g0)


def sampled_bound(g_eps, eps, box_u, x_samples=((0.0,),), t_samples=(0.0,), n_u=201) -> float:
    """Sup of |g_eps| over sampled (x, t, u)."""
    u = np.linspace(box_u[0], box_u[1], n_u)
    best = 0.0
    for x in x_samples:
        for t in t_samples:
            xs = tuple(np.full_like(u, xi) for xi in x)
            best = max(best, float(np.max(np.abs(g_eps(eps, xs, t, u)))))
    return best


def custom_g(g, g_eps=None, box_u=(-3.0, 3.0), eps=0.01, x_samples=((0.0,),), t_samples=(0.0,),
             depends_on_x=True, grid=None, neumann_tol=1e-3) -> PerturbationG:
    """Wrap user callables; the bound is the sampled sup over ``box_u``.

    With ``grid``, the boundary normal derivative of g_eps is sampled at
    u in {box_u[0], 0, box_u[1]} and t in ``t_samples``; above ``neumann_tol``
    a ``UserWarning`` is issued and ``neumann_compatible`` is set to False
    (the perturbation is still accepted).
    """
    ge = g_eps if g_eps is not None else (lambda e, x, t, u: g(x, t, u))
    bound = sampled_bound(ge, eps, box_u, x_samples, t_samples)
    pg = PerturbationG(g, g_eps, bound, True, depends_on_x, "custom", 0.0)
    if grid is not None:
        defect = max(neumann_defect(pg, grid, t, u, eps) for t in t_samples for u in (box_u[0], 0.0, box_u[1]))
        if defect > neumann_tol:
            pg = replace(pg, neumann_compatible=False)
            warnings.warn(f"g has boundary normal derivative {defect:.3g} > {neumann_tol:g}; "
                          "the Neumann compatibility of g is not satisfied", UserWarning, stacklevel=2)
    return pg


def neumann_defect(pg: PerturbationG, grid, t=0.0, u=0.0, eps=None) -> float:
    """Largest boundary normal derivative of g on ``grid`` (diagnostic only).

    Second-order one-sided differences (-3 g_0 + 4 g_1 - g_2) / (2h).
    """
    X = grid.mesh()
    vals = np.asarray(pg.evaluate(X, t, np.full(grid.shape, float(u)), eps), dtype=float)
    vals = np.broadcast_to(vals, grid.shape)
    h = grid.h
    worst = 0.0
    for axis in range(vals.ndim):
        for i0, i1, i2 in ((0, 1, 2), (-1, -2, -3)):
            d = -3.0 * np.take(vals, [i0], axis=axis) + 4.0 * np.take(vals, [i1], axis=axis) \
                - np.take(vals, [i2], axis=axis)
            worst = max(worst, float(np.max(np.abs(d))) / (2.0 * h))
    return worst


def _point_tuple(x):
    return tuple(np.atleast_1d(np.asarray(c, dtype=float)) for c in np.atleast_1d(x))


def pressure_gamma(pg: PerturbationG, nl, c0: float, x=(0.0,), t: float = 0.0, eps=None) -> float:
    """gamma = c0 (G(x,t,alpha_+) - G(x,t,alpha_-)) with G(s) = int_a^s g(x,t,r) dr.

    Gauss-Legendre quadrature on [alpha_-, a] and [a, alpha_+]; with ``eps``
    the epsilon-dependent g_eps is used.
    """
    if pg.is_zero:
        return 0.0
    xs = _point_tuple(x)
    total = 0.0
    for lo, hi in ((nl.alpha_minus, nl.a), (nl.a, nl.alpha_plus)):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        r = mid + half * _GL_X
        vals = np.asarray(pg.evaluate(tuple(np.full_like(r, c[0]) for c in xs), t, r, eps), dtype=float)
        total += half * float(np.sum(_GL_W * vals))
    return c0 * total


# ---------------------------------------------------------------------------
# Fredholm machinery
# ---------------------------------------------------------------------------


def _tail_mass(prof):
    """int_{-inf}^{-Z} U0' and int_{Z}^{inf} U0'."""
    nl = prof.nl
    return prof.U0[0] - nl.alpha_minus, nl.alpha_plus - prof.U0[-1]


def solvability_residual(A, prof) -> float:
    """int A(z) U0'(z) dz over the real line.

    Trapezoidal rule on the uniform profile grid (spectrally accurate for
    smooth decaying integrands) plus the exact tail contribution
    A(+-Z) * int_{|z|>Z} U0'.
    """
    z = prof.z_grid
    Az = np.asarray(A(z), dtype=float)
    core = np.trapezoid(Az * prof.dU0, dx=prof.h)
    m_lo, m_hi = _tail_mass(prof)
    return float(core + Az[0] * m_lo + Az[-1] * m_hi)


@dataclass(frozen=True)
class CorrectorData:
    """Bounded solution psi of the linearised problem on the profile grid."""

    z_grid: np.ndarray = field(repr=False)
    U1: np.ndarray = field(repr=False)
    dU1: np.ndarray = field(repr=False)
    bound_M: float
    gamma_value: float
    limit_minus: float = 0.0
    limit_plus: float = 0.0
    residual: float = 0.0

    def __call__(self, z):
        """psi at arbitrary z (cubic Hermite inside, limits outside)."""
        z = np.asarray(z, dtype=float)
        zg = self.z_grid
        h = zg[1] - zg[0]
        zc = np.clip(z, zg[0], zg[-1])
        i = np.clip(np.floor((zc - zg[0]) / h).astype(int), 0, zg.size - 2)
        t = (zc - zg[i]) / h
        t2, t3 = t * t, t * t * t
        out = ((2 * t3 - 3 * t2 + 1) * self.U1[i] + (t3 - 2 * t2 + t) * h * self.dU1[i]
               + (-2 * t3 + 3 * t2) * self.U1[i + 1] + (t3 - t2) * h * self.dU1[i + 1])
        out = np.where(z > zg[-1], self.U1[-1], out)
        out = np.where(z < zg[0], self.U1[0], out)
        return out


def _fd2(y, h):
    d2 = np.full_like(y, np.nan)
    d2[2:-2] = (-y[4:] + 16 * y[3:-1] - 30 * y[2:-2] + 16 * y[1:-3] - y[:-4]) / (12 * h * h)
    return d2


def _cumulative(y, dy, h):
    """Cumulative integral from the first node, 4th order.

    Trapezoidal sums with the Euler-Maclaurin endpoint correction
    h^2/12 (y'(z_0) - y'(z_k)); the correction telescopes, so only the
    derivative at the two ends of each partial integral enters.
    """
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * h * (y[1:] + y[:-1]), out=out[1:])
    out += h * h / 12.0 * (dy[0] - dy)
    return out


def _fd1(y, h):
    """4th-order first derivative (one-sided 4th-order stencils at the ends)."""
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    for i in (0, 1):
        d[i] = (-25 * y[i] + 48 * y[i + 1] - 36 * y[i + 2] + 16 * y[i + 3] - 3 * y[i + 4]) / (12 * h)
        j = -1 - i
        d[j] = (25 * y[j] - 48 * y[j - 1] + 36 * y[j - 2] - 16 * y[j - 3] + 3 * y[j - 4]) / (12 * h)
    return d


def _nested_forms(Az, prof):
    """Both variation-of-constants forms of psi on the full grid."""
    h = prof.h
    phi = prof.dU0
    dphi = prof.d2U0
    Aphi = Az * phi
    dAphi = _fd1(Az, h) * phi + Az * dphi
    m_lo, m_hi = _tail_mass(prof)
    # I(z) = int_{-inf}^z A phi,  J(z) = int_z^inf A phi
    I = Az[0] * m_lo + _cumulative(Aphi, dAphi, h)
    J = Az[-1] * m_hi + _cumulative(Aphi[::-1], -dAphi[::-1], h)[::-1]
    n0 = prof.z_grid.size // 2
    inv2 = 1.0 / (phi * phi)

    def from_center(y, dy):
        out = np.empty_like(y)
        out[n0:] = _cumulative(y[n0:], dy[n0:], h)
        out[:n0 + 1] = -_cumulative(y[:n0 + 1][::-1], -dy[:n0 + 1][::-1], h)[::-1]
        return out

    # d/dz (phi^-2 I) = phi^-2 (A phi - 2 (phi'/phi) I), and likewise for J with -A phi
    yI = inv2 * I
    yJ = inv2 * J
    form1 = phi * from_center(yI, inv2 * (Aphi - 2 * dphi / phi * I))
    form2 = -phi * from_center(yJ, inv2 * (-Aphi - 2 * dphi / phi * J))
    return form1, form2, I, J


def fredholm_forms(A, prof):
    """Return (form1, form2): psi from the left-anchored and right-anchored integrals."""
    Az = np.asarray(A(prof.z_grid), dtype=float)
    f1, f2, _, _ = _nested_forms(Az, prof)
    return f1, f2


def fredholm_solve(A, prof, gamma_value: float = float("nan")) -> CorrectorData:
    """Bounded solution of psi'' + f'(U0) psi = A with psi(0) = 0.

    The left-anchored form is used for z < 0 and the right-anchored form for
    z >= 0, which avoids cancellation of int A U0' where U0' is tiny.

    Raises
    ------
    SolvabilityViolation
        If |int A U0'| > 1e-6 ||A||.
    TailDivergence
        If A is not finite or its tails have not settled to constants.
    """
    z = prof.z_grid
    Az = np.asarray(A(z), dtype=float)
    if not np.all(np.isfinite(Az)):
        raise TailDivergence("A is not finite on the profile grid")
    normA = float(np.max(np.abs(Az)))
    if normA == 0.0:
        zero = np.zeros_like(z)
        return CorrectorData(z, zero, zero.copy(), 0.0, gamma_value)
    k = int(round(2.0 / prof.h))
    settle = max(abs(Az[k] - Az[0]), abs(Az[-1] - Az[-1 - k]))
    if settle > 1e-6 * (1.0 + normA):
        raise TailDivergence(f"A varies by {settle:.2e} over the last two units of z")
    res = solvability_residual(A, prof)
    if abs(res) > 1e-6 * normA:
        raise SolvabilityViolation(f"int A U0' = {res:.3e}")
    f1, f2, I, J = _nested_forms(Az, prof)
    n0 = z.size // 2
    psi = np.where(np.arange(z.size) < n0, f1, f2)
    psi[n0] = 0.0
    phi = prof.dU0
    dphi = prof.d2U0
    # psi' = (phi'/phi) psi + I/phi  (equivalently -J/phi on the right)
    dpsi = np.where(np.arange(z.size) < n0, dphi / phi * psi + I / phi, dphi / phi * psi - J / phi)
    nl = prof.nl
    lim_m = Az[0] / nl.df(nl.alpha_minus)
    lim_p = Az[-1] / nl.df(nl.alpha_plus)
    d2 = _fd2(psi, prof.h)
    mask = np.abs(z) <= prof.Z_cut - 4.0
    r = np.abs(d2 + nl.df(prof.U0) * psi - Az)[mask]
    return CorrectorData(z, psi, dpsi, float(np.max(np.abs(psi))), gamma_value,
                         float(lim_m), float(lim_p), float(np.nanmax(r)) / normA)


def corrector_U1(pg: PerturbationG, prof, x=(0.0,), t: float = 0.0, eps=None) -> CorrectorData:
    """U1 (or U1^eps when ``eps`` is given) at a fixed (x, t).

    Builds A0(z) = g(x, t, U0(z)) - gamma(x, t) U0'(z) and solves the
    linearised problem.
    """
    gamma = pressure_gamma(pg, prof.nl, prof.c0, x, t, eps)
    if pg.is_zero:
        z = prof.z_grid
        zero = np.zeros_like(z)
        return CorrectorData(z, zero, zero.copy(), 0.0, 0.0)
    xs = _point_tuple(x)

    def A0(z):
        u = prof.U(z)
        xz = tuple(np.full_like(u, c[0]) for c in xs)
        return np.asarray(pg.evaluate(xz, t, u, eps), dtype=float) - gamma * prof.dU(z)

    return fredholm_solve(A0, prof, gamma)


class CorrectorField:
    """U1^eps(x, t, z) on a node set; cached when g does not depend on (x, t)."""

    def __init__(self, pg: PerturbationG, prof, eps=None):
        self.pg = pg
        self.prof = prof
        self.eps = eps
        self._global = corrector_U1(pg, prof, (0.0,), 0.0, eps) if pg.is_uniform else None

    @property
    def is_zero(self):
        return self.pg.is_zero

    def __call__(self, x, t, z):
        if self.pg.is_zero:
            return np.zeros_like(np.asarray(z, dtype=float))
        if self._global is not None:
            return self._global(z)
        # general case: one linear solve per node
        z = np.asarray(z, dtype=float)
        coords = [np.broadcast_to(c, z.shape).ravel() for c in x]
        out = np.empty(z.size)
        for k in range(z.size):
            cd = corrector_U1(self.pg, self.prof, tuple(c[k] for c in coords), t, self.eps)
            out[k] = cd(z.ravel()[k])
        return out.reshape(z.shape)

    def bound(self):
        if self.pg.is_zero:
            return 0.0
        if self._global is not None:
            return self._global.bound_M
        return float("nan")
