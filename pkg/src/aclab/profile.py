"""
Standing-wave profile U0 of U0'' + f(U0) = 0, U0(-inf) = alpha_-, U0(0) = a,
U0(+inf) = alpha_+, together with the surface-tension constant c0 and the
exponential decay rates of the tails.

The profile is obtained from the first integral U0' = sqrt(2(W(U0) - W(alpha_-)))
by inverting z(u) = int_a^u ds / sqrt(2(W(s) - W(alpha_-))).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import NonBistable, QuadratureSingularity, UnbalancedPotential
from .nonlinearity import WellExpansion, _gl_integral, balance_residual, well_gap

BALANCE_TOL = 1e-10


def _check_balanced(nl):
    res = balance_residual(nl)
    if abs(res) > BALANCE_TOL:
        raise UnbalancedPotential(f"int f over [alpha_-, alpha_+] = {res:.3e}")


def decay_rates(nl):
    """Tail decay rates (lambda_-, lambda_+) = sqrt(-f'(alpha_pm))."""
    dm, dp = float(nl.df(nl.alpha_minus)), float(nl.df(nl.alpha_plus))
    if dm >= 0 or dp >= 0:
        raise NonBistable("f' must be negative at the stable zeros")
    return np.sqrt(-dm), np.sqrt(-dp)


def surface_constant_c0(nl) -> float:
    """c0 = [sqrt(2) int_{alpha_-}^{alpha_+} (W(s) - W(alpha_-))^{1/2} ds]^{-1}.

    Each half-interval is integrated in the variable t with s = alpha_pm -+ t^2,
    so that endpoint behaviour of the square root is absorbed analytically.
    """
    _check_balanced(nl)

    def root_gap(s):
        g = well_gap(nl, s)
        if g < -1e-14:
            raise QuadratureSingularity(f"W(s) - W(alpha_-) < 0 at s = {s}")
        return np.sqrt(max(g, 0.0))

    tp = np.sqrt(nl.alpha_plus - nl.a)
    tm = np.sqrt(nl.a - nl.alpha_minus)
    right = integrate.quad(lambda t: 2 * t * root_gap(nl.alpha_plus - t * t), 0.0, tp,
                           epsabs=0.0, epsrel=1e-13, limit=200)[0]
    left = integrate.quad(lambda t: 2 * t * root_gap(nl.alpha_minus + t * t), 0.0, tm,
                          epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return 1.0 / (np.sqrt(2.0) * (left + right))


def _slope(nl, u):
    """U0' as a function of U0: sqrt(2 (W(u) - W(alpha_-)))."""
    g = well_gap(nl, u)
    if np.any(g < -1e-14):
        raise QuadratureSingularity("W(u) - W(alpha_-) < 0 inside (alpha_-, alpha_+)")
    return np.sqrt(2.0 * np.maximum(g, 0.0))


def _hermite(x, x0, h, y0, y1, d0, d1):
    t = (x - x0) / h
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1)


@dataclass(frozen=True)
class ProfileData:
    """Tabulated standing wave on a uniform z-grid.

    Attributes
    ----------
    z_grid, U0, dU0, d2U0 : ndarray
        Nodes and values of U0, U0', U0'' (the latter via U0'' = -f(U0)).
    c0 : float
        Surface-tension constant.
    norm_sq : float
        int U0'^2 dz, computed from the tabulated profile.
    lambda_minus, lambda_plus : float
        Tail decay rates.
    Z_cut : float
        Half-width of the tabulated window; beyond it the linearised
        exponential tails are used.
    """

    z_grid: np.ndarray = field(repr=False)
    U0: np.ndarray = field(repr=False)
    dU0: np.ndarray = field(repr=False)
    d2U0: np.ndarray = field(repr=False)
    c0: float
    norm_sq: float
    lambda_minus: float
    lambda_plus: float
    Z_cut: float
    nl: object = field(repr=False)
    tail_minus: float = 0.0
    tail_plus: float = 0.0

    @property
    def h(self):
        return self.z_grid[1] - self.z_grid[0]

    def _locate(self, z):
        zc = np.clip(z, -self.Z_cut, self.Z_cut)
        i = np.floor((zc + self.Z_cut) / self.h).astype(int)
        return zc, np.clip(i, 0, self.z_grid.size - 2)

    def U(self, z):
        """U0 at arbitrary z (cubic Hermite inside, exponential tails outside)."""
        z = np.asarray(z, dtype=float)
        zc, i = self._locate(z)
        out = _hermite(zc, self.z_grid[i], self.h, self.U0[i], self.U0[i + 1], self.dU0[i], self.dU0[i + 1])
        nl = self.nl
        hi = z > self.Z_cut
        lo = z < -self.Z_cut
        if np.any(hi):
            out = np.where(hi, nl.alpha_plus - self.tail_plus * np.exp(-self.lambda_plus * np.where(hi, z, 0)), out)
        if np.any(lo):
            out = np.where(lo, nl.alpha_minus + self.tail_minus * np.exp(self.lambda_minus * np.where(lo, z, 0)), out)
        return out

    def dU(self, z):
        """U0' at arbitrary z."""
        z = np.asarray(z, dtype=float)
        zc, i = self._locate(z)
        out = _hermite(zc, self.z_grid[i], self.h, self.dU0[i], self.dU0[i + 1], self.d2U0[i], self.d2U0[i + 1])
        hi = z > self.Z_cut
        lo = z < -self.Z_cut
        if np.any(hi):
            zz = np.where(hi, z, 0)
            out = np.where(hi, self.lambda_plus * self.tail_plus * np.exp(-self.lambda_plus * zz), out)
        if np.any(lo):
            zz = np.where(lo, z, 0)
            out = np.where(lo, self.lambda_minus * self.tail_minus * np.exp(self.lambda_minus * zz), out)
        return out

    def d2U(self, z):
        """U0'' = -f(U0)."""
        return -self.nl.f(self.U(z))

    def inverse(self, u):
        """z with U0(z) = u for alpha_- < u < alpha_+ (Newton on the tabulated profile)."""
        u = np.asarray(u, dtype=float)
        nl = self.nl
        if np.any((u <= nl.alpha_minus) | (u >= nl.alpha_plus)):
            raise ValueError("inverse defined only strictly between the stable zeros")
        z = np.interp(u, self.U0, self.z_grid)
        # outside the table use the tail formulas directly
        hi = u > self.U0[-1]
        lo = u < self.U0[0]
        z = np.where(hi, -np.log(np.maximum(nl.alpha_plus - u, 1e-300) / self.tail_plus) / self.lambda_plus, z)
        z = np.where(lo, np.log(np.maximum(u - nl.alpha_minus, 1e-300) / self.tail_minus) / self.lambda_minus, z)
        for _ in range(6):
            z = z - (self.U(z) - u) / self.dU(z)
        return float(z) if z.ndim == 0 else z

    def fd_residual(self, margin=2.0):
        """max |D4 U0 + f(U0)| with a 4th-order finite-difference second derivative."""
        U, h = self.U0, self.h
        d2 = (-U[4:] + 16 * U[3:-1] - 30 * U[2:-2] + 16 * U[1:-3] - U[:-4]) / (12 * h * h)
        z = self.z_grid[2:-2]
        mask = np.abs(z) <= self.Z_cut - margin
        return float(np.max(np.abs(d2 + self.nl.f(U[2:-2]))[mask]))

    def slope_residual(self):
        """max |U0' - sqrt(2(W(U0) - W(alpha_-)))| at the nodes."""
        return float(np.max(np.abs(self.dU0 - _slope(self.nl, self.U0))))


def compute_profile(nl, n_points: int = 4097, Z_cut: float | None = None) -> ProfileData:
    """Tabulate the standing wave U0 on a uniform grid of [-Z_cut, Z_cut].

    Parameters
    ----------
    nl : BistableNonlinearity
        Balanced bistable nonlinearity.
    n_points : int
        Number of z-nodes (>= 256; made odd so that z = 0 is a node).
    Z_cut : float, optional
        Half-width of the table; default 20 / min(lambda_-, lambda_+).

    Notes
    -----
    z(u) is first computed by composite Gauss-Legendre quadrature on a
    u-grid clustered exponentially towards the wells; the uniform z-nodes are
    then obtained by interpolation followed by Newton polishing on the exact
    quadrature z(u) = z(u_j) + int_{u_j}^u ds / U0'(s).
    """
    if n_points < 256:
        raise ValueError("n_points must be at least 256")
    _check_balanced(nl)
    lam_m, lam_p = decay_rates(nl)
    if Z_cut is None:
        Z_cut = 20.0 / min(lam_m, lam_p)
    n = int(n_points) | 1
    z_grid = np.linspace(-Z_cut, Z_cut, n)
    z_grid[n // 2] = 0.0

    U0 = np.empty(n)
    dU0 = np.empty(n)
    d2U0 = np.empty(n)
    U0[n // 2] = nl.a
    m = max(2 * n, 4000)
    for side in (1, -1):
        # each half is parameterised by the distance d to its well, so that
        # U0' and U0'' keep relative accuracy deep in the tails
        ex = WellExpansion(nl, side)
        well = ex.well
        lam = lam_p if side > 0 else lam_m
        width = abs(well - nl.a)

        def slope_d(d):
            g = ex.gap(d)
            if np.any(g < -1e-14):
                raise QuadratureSingularity("W(u) - W(alpha_-) < 0 inside (alpha_-, alpha_+)")
            return np.sqrt(2.0 * np.maximum(g, 0.0))

        def inv_slope_d(d):
            return 1.0 / slope_d(d)

        # keep the clustered grid above the floating-point resolution of the well
        s = np.linspace(0.0, min(lam * (Z_cut + 4.0) + 8.0, 33.0), m)
        d_ref = width * np.exp(-s)
        # z increases with u; along the side, dz = -side * dd / U0'
        dz = -side * _gl_integral(inv_slope_d, d_ref[:-1], d_ref[1:])
        z_ref = np.concatenate([[0.0], np.cumsum(dz)])
        sel = slice(n // 2 + 1, n) if side > 0 else slice(0, n // 2)
        zt = z_grid[sel]
        order = np.argsort(side * z_ref)
        d = width * np.exp(-np.interp(side * zt, side * z_ref[order], s[order]))
        j = np.clip(np.searchsorted(side * z_ref, side * zt) - 1, 0, m - 2)
        for _ in range(5):
            zu = z_ref[j] - side * _gl_integral(inv_slope_d, d_ref[j], d)
            d = d + side * (zu - zt) * slope_d(d)
            d = np.clip(d, 0.0, width)
        U0[sel] = well - side * d
        dU0[sel] = slope_d(d)
        d2U0[sel] = -ex.f(d)
        if side > 0:
            dev_plus = d[-1]
        else:
            dev_minus = d[0]
    dU0[n // 2] = _slope(nl, nl.a)
    d2U0[n // 2] = -nl.f(nl.a)
    if np.any(np.diff(U0) <= 0):
        raise QuadratureSingularity("profile is not strictly increasing")
    tail_plus = dev_plus * np.exp(lam_p * Z_cut)
    tail_minus = dev_minus * np.exp(lam_m * Z_cut)
    h = z_grid[1] - z_grid[0]
    norm_sq = np.trapezoid(dU0 ** 2, dx=h)
    norm_sq += 0.5 * lam_p * tail_plus ** 2 * np.exp(-2 * lam_p * Z_cut)
    norm_sq += 0.5 * lam_m * tail_minus ** 2 * np.exp(-2 * lam_m * Z_cut)
    return ProfileData(z_grid, U0, dU0, d2U0, surface_constant_c0(nl), float(norm_sq),
                       float(lam_m), float(lam_p), float(Z_cut), nl, float(tail_minus), float(tail_plus))
