"""
Bistable nonlinearities f, their double-well potential W and the shifted
family f_delta = f + delta.

A nonlinearity is described by three callables (f, f', f'') and its three
zeros alpha_- < a < alpha_+ with f'(alpha_pm) < 0 < f'(a).  Polynomial
nonlinearities additionally carry their coefficients (ascending order), which
enables closed-form potentials and flow times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, optimize

from .errors import NonBistable

ROOT_TOL = 1e-13

# Gauss-Legendre rule used for short, smooth integrals of f.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gl_integral(func, lo, hi):
    """Vectorised Gauss-Legendre integral of ``func`` over [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[..., None] + half[..., None] * _GL_X
    return half * np.sum(_GL_W * func(nodes), axis=-1)


def _newton_root(func, dfunc, x0, lo, hi, tol=ROOT_TOL, maxiter=60):
    """Newton iteration from ``x0`` kept inside the bracket [lo, hi].

    Falls back to Brent's method when an iterate leaves the bracket or the
    iteration fails to converge.
    """
    x = float(x0)
    for _ in range(maxiter):
        fx = func(x)
        d = dfunc(x)
        if d == 0.0 or not np.isfinite(d):
            break
        step = fx / d
        x_new = x - step
        if not (lo <= x_new <= hi):
            break
        x = x_new
        if abs(step) <= tol * max(1.0, abs(x)):
            return x
    return optimize.brentq(func, lo, hi, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)


def _sign_changes(values):
    s = np.sign(values)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class BistableNonlinearity:
    """A bistable nonlinearity with zeros ``alpha_minus < a < alpha_plus``.

    Parameters
    ----------
    f, df, d2f : callable
        Vectorised maps u -> f(u), f'(u), f''(u).
    alpha_minus, a, alpha_plus : float
        The three zeros; the outer ones are stable, the middle one unstable.
    mu : float
        Linearised growth rate f'(a) at the unstable zero.
    coeffs : tuple, optional
        Polynomial coefficients in ascending order, when f is a polynomial.
    name : str
        Short label ("cubic", "polynomial", "custom").
    """

    f: Callable = field(repr=False)
    df: Callable = field(repr=False)
    d2f: Callable = field(repr=False)
    alpha_minus: float
    a: float
    alpha_plus: float
    mu: float
    coeffs: Optional[tuple] = None
    name: str = "custom"

    def __post_init__(self):
        zeros = (self.alpha_minus, self.a, self.alpha_plus)
        if not (self.alpha_minus < self.a < self.alpha_plus):
            raise NonBistable(f"zeros not ordered: {zeros}")
        for z in zeros:
            if abs(float(self.f(z))) > 1e-12:
                raise NonBistable(f"f({z}) = {self.f(z)} is not a zero")
        if not (self.df(self.alpha_minus) < 0 and self.df(self.alpha_plus) < 0 and self.df(self.a) > 0):
            raise NonBistable("derivative signs at the zeros are not (-, +, -)")

    @property
    def zeros(self):
        return (self.alpha_minus, self.a, self.alpha_plus)

    @property
    def is_polynomial(self):
        return self.coeffs is not None

    @cached_property
    def critical_points(self):
        """Local minimum in (alpha_-, a) and local maximum in (a, alpha_+) of f."""
        c1 = optimize.brentq(self.df, self.alpha_minus, self.a, xtol=1e-15)
        c2 = optimize.brentq(self.df, self.a, self.alpha_plus, xtol=1e-15)
        return c1, c2

    @cached_property
    def delta_crit(self):
        """Offsets (negative, positive) at which f + delta loses a zero.

        Found by bisection on the number of sign changes of f + delta over a
        sampling window around the zeros.
        """
        span = self.alpha_plus - self.alpha_minus
        s = np.linspace(self.alpha_minus - span, self.alpha_plus + span, 20001)
        fs = self.f(s)
        scale = float(np.max(np.abs(fs)))

        def three(delta):
            return _sign_changes(fs + delta) == 3

        out = []
        for sgn in (-1.0, 1.0):
            lo, hi = 0.0, scale
            while three(sgn * hi) and hi < 1e6 * scale:
                hi *= 2.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if three(sgn * mid):
                    lo = mid
                else:
                    hi = mid
            out.append(sgn * lo)
        return tuple(out)

    @cached_property
    def delta0(self):
        """Accepted perturbation bound: 0.9 times the smallest critical offset."""
        return 0.9 * min(abs(self.delta_crit[0]), abs(self.delta_crit[1]))


def from_polynomial(coeffs: Sequence[float], name: str = "polynomial") -> BistableNonlinearity:
    """Build a bistable nonlinearity from ascending polynomial coefficients.

    The polynomial must have exactly three real zeros with the bistable sign
    pattern of f'.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size < 4:
        raise NonBistable("a bistable polynomial needs degree >= 3")
    dc = P.polyder(c)
    d2c = P.polyder(dc)
    roots = P.polyroots(c)
    real = np.sort(roots[np.abs(roots.imag) < 1e-9 * (1 + np.abs(roots.real))].real)
    if real.size != 3:
        raise NonBistable(f"expected three real zeros, found {real.size}")

    def f(u):
        return P.polyval(u, c)

    def df(u):
        return P.polyval(u, dc)

    def d2f(u):
        return P.polyval(u, d2c)

    span = real[-1] - real[0]
    polished = []
    for k, r in enumerate(real):
        lo = real[k - 1] if k > 0 else r - span
        hi = real[k + 1] if k < 2 else r + span
        lo, hi = 0.5 * (lo + r), 0.5 * (hi + r)
        polished.append(_newton_root(f, df, r, lo, hi))
    am, a, ap = polished
    return BistableNonlinearity(f, df, d2f, am, a, ap, float(df(a)), tuple(float(x) for x in c), name)


def make_cubic() -> BistableNonlinearity:
    """The cubic nonlinearity f(u) = u(1 - u^2) with zeros (-1, 0, 1), mu = 1."""

    def f(u):
        return u * (1.0 - u * u)

    def df(u):
        return 1.0 - 3.0 * u * u

    def d2f(u):
        return -6.0 * np.asarray(u, dtype=float)

    return BistableNonlinearity(f, df, d2f, -1.0, 0.0, 1.0, 1.0, (0.0, 1.0, 0.0, -1.0), "cubic")


def from_functions(f, df, d2f, window=(-3.0, 3.0), n_samples=60001, name="custom") -> BistableNonlinearity:
    """Build a nonlinearity from callables by locating sign changes in ``window``."""
    s = np.linspace(window[0], window[1], n_samples)
    fs = f(s)
    idx = np.nonzero(np.sign(fs[1:]) * np.sign(fs[:-1]) < 0)[0]
    exact = np.nonzero(fs == 0)[0]
    brackets = [(s[i], s[i + 1]) for i in idx] + [(s[i], s[i]) for i in exact]
    brackets.sort()
    if len(brackets) != 3:
        raise NonBistable(f"expected three zeros in {window}, found {len(brackets)}")
    zeros = []
    for lo, hi in brackets:
        zeros.append(lo if lo == hi else _newton_root(f, df, 0.5 * (lo + hi), lo, hi))
    am, a, ap = zeros
    return BistableNonlinearity(f, df, d2f, am, a, ap, float(df(a)), None, name)


def scaled(nl: BistableNonlinearity, k: float) -> BistableNonlinearity:
    """Return k*f (k > 0); zeros are unchanged."""
    if k <= 0:
        raise ValueError("scale must be positive")
    c = None if nl.coeffs is None else tuple(k * x for x in nl.coeffs)
    return BistableNonlinearity(
        lambda u: k * nl.f(u), lambda u: k * nl.df(u), lambda u: k * nl.d2f(u),
        nl.alpha_minus, nl.a, nl.alpha_plus, k * nl.mu, c, f"{nl.name}*{k:g}",
    )


@dataclass(frozen=True)
class PerturbedNonlinearity:
    """The shifted nonlinearity f_delta = f + delta and its zeros.

    The attributes ``alpha_minus``, ``a``, ``alpha_plus``, ``mu`` refer to the
    perturbed zeros, so that a ``PerturbedNonlinearity`` can be used wherever a
    nonlinearity is expected.
    """

    base: BistableNonlinearity
    delta: float
    alpha_minus_d: float
    a_d: float
    alpha_plus_d: float
    mu_d: float

    def f(self, u):
        return self.base.f(u) + self.delta

    def df(self, u):
        return self.base.df(u)

    def d2f(self, u):
        return self.base.d2f(u)

    @property
    def alpha_minus(self):
        return self.alpha_minus_d

    @property
    def a(self):
        return self.a_d

    @property
    def alpha_plus(self):
        return self.alpha_plus_d

    @property
    def mu(self):
        return self.mu_d

    @property
    def zeros(self):
        return (self.alpha_minus_d, self.a_d, self.alpha_plus_d)

    @property
    def coeffs(self):
        if self.base.coeffs is None:
            return None
        c = list(self.base.coeffs)
        c[0] += self.delta
        return tuple(c)

    @property
    def is_polynomial(self):
        return self.base.coeffs is not None

    def sign_pattern_ok(self) -> bool:
        """f_delta is +, -, +, - on the four intervals cut by its zeros."""
        am, a, ap = self.zeros
        probes = np.array([am - 1.0, 0.5 * (am + a), 0.5 * (a + ap), ap + 1.0])
        return bool(np.array_equal(np.sign(self.f(probes)), [1.0, -1.0, 1.0, -1.0]))

    def as_bistable(self) -> BistableNonlinearity:
        base = self.base
        d = self.delta
        return BistableNonlinearity(
            lambda u: base.f(u) + d, base.df, base.d2f,
            self.alpha_minus_d, self.a_d, self.alpha_plus_d, self.mu_d, self.coeffs,
            f"{base.name}{d:+g}",
        )


def perturb(base: BistableNonlinearity, delta: float) -> PerturbedNonlinearity:
    """Shift f by a constant and locate the three zeros of f + delta.

    Raises
    ------
    NonBistable
        If ``|delta|`` exceeds the accepted bound ``base.delta0``.
    """
    delta = float(delta)
    if delta == 0.0:
        return PerturbedNonlinearity(base, 0.0, base.alpha_minus, base.a, base.alpha_plus, base.mu)
    if abs(delta) >= base.delta0:
        raise NonBistable(f"|delta| = {abs(delta):g} exceeds the accepted bound {base.delta0:g}")
    c1, c2 = base.critical_points

    def fd(u):
        return base.f(u) + delta

    span = base.alpha_plus - base.alpha_minus
    lo = base.alpha_minus - span
    while fd(lo) <= 0:
        lo -= span
    hi = base.alpha_plus + span
    while fd(hi) >= 0:
        hi += span
    am = _newton_root(fd, base.df, base.alpha_minus, lo, c1)
    a = _newton_root(fd, base.df, base.a, c1, c2)
    ap = _newton_root(fd, base.df, base.alpha_plus, c2, hi)
    pn = PerturbedNonlinearity(base, delta, am, a, ap, float(base.df(a)))
    if not pn.sign_pattern_ok():
        raise NonBistable("sign pattern of f + delta is not (+, -, +, -)")
    return pn


def potential_W(nl, s):
    """Double-well potential W(s) = -int_a^s f(r) dr.

    Closed form for polynomial nonlinearities, adaptive quadrature otherwise.
    """
    s_arr = np.asarray(s, dtype=float)
    if nl.coeffs is not None:
        anti = P.polyint(np.asarray(nl.coeffs))
        out = -(P.polyval(s_arr, anti) - P.polyval(nl.a, anti))
    else:
        flat = [-integrate.quad(nl.f, nl.a, float(x), epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                for x in s_arr.ravel()]
        out = np.asarray(flat).reshape(s_arr.shape)
    return float(out) if np.ndim(out) == 0 else out


def well_gap(nl, s):
    """W(s) - W(alpha_-) without cancellation near the wells.

    For s <= a the integral -int_{alpha_-}^s f is used, for s > a the balanced
    identity W(s) - W(alpha_+) = int_s^{alpha_+} f.  Both are short Gauss-Legendre
    integrals whose relative accuracy survives as s approaches a well.
    """
    s_arr = np.asarray(s, dtype=float)
    left = s_arr <= nl.a
    out = np.empty_like(s_arr)
    if np.any(left):
        out[left] = -_gl_integral(nl.f, np.full(np.count_nonzero(left), nl.alpha_minus), s_arr[left])
    if np.any(~left):
        out[~left] = _gl_integral(nl.f, s_arr[~left], np.full(np.count_nonzero(~left), nl.alpha_plus))
    return float(out) if out.ndim == 0 else out


class WellExpansion:
    """f and the potential gap near a stable zero, as functions of the distance d to it.

    With u = well - side * d (side = +1 at alpha_+, -1 at alpha_-) this returns
    f(u) and W(u) - W(well) with relative accuracy as d -> 0.  Polynomial f
    are Taylor-shifted exactly to the well (the constant term is the zero and
    is dropped); otherwise f is evaluated directly and the gap integrated by
    Gauss-Legendre quadrature in d.
    """

    def __init__(self, nl, side: int):
        self.nl = nl
        self.side = int(side)
        self.well = nl.alpha_plus if side > 0 else nl.alpha_minus
        if nl.coeffs is not None:
            c = np.asarray(nl.coeffs, dtype=float)
            # coefficients of d -> f(well - side d)
            q = np.zeros(1)
            basis = np.ones(1)
            lin = np.array([self.well, -float(side)])
            for ck in c:
                q = P.polyadd(q, ck * basis)
                basis = P.polymul(basis, lin)
            q[0] = 0.0
            self.f_coeffs = q
            # W(u) - W(well) = side * int_0^d f(well - side r) dr
            self.gap_coeffs = float(side) * P.polyint(q)
        else:
            self.f_coeffs = None
            self.gap_coeffs = None

    def f(self, d):
        d = np.asarray(d, dtype=float)
        if self.f_coeffs is not None:
            return P.polyval(d, self.f_coeffs)
        return self.nl.f(self.well - self.side * d)

    def gap(self, d):
        d = np.asarray(d, dtype=float)
        if self.gap_coeffs is not None:
            return P.polyval(d, self.gap_coeffs)
        side, well = self.side, self.well
        return side * _gl_integral(lambda r: self.nl.f(well - side * r), np.zeros_like(d), d)


def balance_residual(nl, method: str = "auto") -> float:
    """Return int_{alpha_-}^{alpha_+} f(u) du (zero for a balanced potential).

    ``method`` is "auto" (closed form for polynomials) or "quad".
    """
    if method == "auto" and nl.coeffs is not None:
        anti = P.polyint(np.asarray(nl.coeffs))
        return float(P.polyval(nl.alpha_plus, anti) - P.polyval(nl.alpha_minus, anti))
    left = integrate.quad(nl.f, nl.alpha_minus, nl.a, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    right = integrate.quad(nl.f, nl.a, nl.alpha_plus, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return float(left + right)


def nonlinearity_from_config(desc) -> BistableNonlinearity:
    """Resolve a config entry: the name "cubic" or a list of ascending coefficients."""
    if isinstance(desc, str):
        if desc == "cubic":
            return make_cubic()
        raise ValueError(f"unknown nonlinearity {desc!r}")
    return from_polynomial(desc)
