"""
Scenario presets, epsilon sweeps, generation-time measurement, power-law
fits, the Volterra function k-bar and CSV / JSON export.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import erf

from . import __version__
from .ac_solver import (ACStepper, RDStepper, fhn_params, invariant_rectangle_check, layer_thickness,
                        pp_params, radial_2d, ramp_1d, stable_dt)
from .comparison import (calibrate_tol_res, gen_subsuper, make_gen_params, motion_subsuper,
                         ordering_check, residual_L, tune_motion_params)
from .corrector import CorrectorField, constant_g, pressure_gamma, zero_g
from .errors import DegenerateFit, GridTooCoarse, NeverGenerated
from .geometry import circle_polyline, contours, crossings_1d, distance_to_interface, extract_interface, hausdorff
from .grid import Field, Grid, initial_data_bound
from .nonlinearity import _GL_W, _GL_X, from_polynomial, make_cubic
from .profile import compute_profile
from .sharp_interface import constant_forcing, cutoff_zeta, limit_rd_grid_solve, no_forcing, radial_solve

__all__ = [
    "SCENARIOS", "SweepConfig", "SweepRecord", "RunArtifacts", "Trajectory", "default_config",
    "run_scenario", "run_sweep", "compare_run", "measure_generation_time", "default_C_nbhd",
    "fit_power", "kbar", "kbar_erf", "kbar_residual", "volterra_iterate", "export", "write_csv",
    "read_csv", "write_manifest", "interface_radius",
]

SCENARIOS = ("1d-generation", "1d-forced", "radial2d-curvature", "radial2d-forced", "fhn-radial", "pp-radial")


# ---------------------------------------------------------------------------
# configuration and records
# ---------------------------------------------------------------------------


@dataclass
class SweepConfig:
    """Configuration of an epsilon sweep.

    ``h_ratio`` is eps / h (at least 4); ``domain`` the box lengths
    (1D scenarios use only the first).  ``C0`` is filled in from the initial
    data at run time when left NaN.
    """

    scenario: str
    eps_list: List[float]
    h_ratio: float = 4.0
    domain: List[float] = field(default_factory=lambda: [1.0, 1.0])
    T: float = 0.03
    eta: float = 0.1
    C0: float = float("nan")
    R0: float = 0.3
    x0: float = 2.0
    slope: float = 0.3
    g0: float = 0.0
    v0: float = 1.0
    dt_factor: float = 1.0
    ref_h: float = 0.005
    ref_dt: float = 2e-5
    n_times: int = 10
    C_nbhd: Optional[float] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        self.eps_list = sorted((float(e) for e in self.eps_list), reverse=True)
        if self.h_ratio < 4:
            raise GridTooCoarse("eps / h must be at least 4")

    def h_for(self, eps):
        return eps / self.h_ratio

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        # manifests store NaN as null
        d = {k: (float("nan") if v is None and k in ("C0", "g0") else v) for k, v in d.items()}
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def default_config(scenario: str, eps_list: Sequence[float] | None = None) -> SweepConfig:
    """Preset configuration of a named scenario."""
    base = dict(scenario=scenario, eps_list=list(eps_list) if eps_list else [0.04, 0.02, 0.01])
    if scenario == "1d-generation":
        base.update(domain=[4.0], T=0.02, x0=2.0, slope=0.3)
    elif scenario == "1d-forced":
        base.update(domain=[4.0], T=0.02, x0=2.0, slope=0.3, g0=0.5)
    elif scenario == "radial2d-curvature":
        base.update(domain=[1.0, 1.0], T=0.03, R0=0.3)
    elif scenario == "radial2d-forced":
        base.update(domain=[1.0, 1.0], T=0.05, R0=0.3, g0=float("nan"))
    elif scenario == "fhn-radial":
        base.update(domain=[1.0, 1.0], T=0.03, R0=0.3, v0=1.0)
        if eps_list is None:
            base["eps_list"] = [0.04, 0.02]
    elif scenario == "pp-radial":
        base.update(domain=[1.0, 1.0], T=0.03, R0=0.3, v0=0.5)
        if eps_list is None:
            base["eps_list"] = [0.04, 0.02]
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    return SweepConfig(**base)


@dataclass
class SweepRecord:
    scenario: str
    eps: float
    h: float
    dt: float
    T: float
    thickness: float = float("nan")
    hausdorff_max: float = float("nan")
    radius_err_max: float = float("nan")
    drift_max: float = float("nan")
    t_gen: float = float("nan")
    t_gen_theory: float = float("nan")
    v_err: float = float("nan")
    rect_ok: float = float("nan")
    C0: float = float("nan")

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]


@dataclass
class RunArtifacts:
    record: SweepRecord
    series: Dict[str, np.ndarray]
    snapshots: List[Field] = field(default_factory=list)
    final: Optional[Field] = None
    final_v: Optional[Field] = None


@dataclass
class Trajectory:
    """Snapshots of one run together with the data needed to classify them.

    ``d_signed`` is the signed distance of each node to the initial interface
    (positive where u0 > a).
    """

    snapshots: List[Field]
    d_signed: np.ndarray
    nl: object
    eps: float


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _nl_for(scenario):
    if scenario == "pp-radial":
        return from_polynomial([0.0, -0.5, 1.5, -1.0], name="prey-predator")
    return make_cubic()


def _make_grid(cfg, eps):
    h = cfg.h_for(eps)
    if cfg.scenario.startswith("1d"):
        L = cfg.domain[0]
        return Grid.line(L, int(round(L / h)) + 1)
    return Grid.rect(cfg.domain[0], cfg.domain[1], h)


def _initial_u(cfg, grid, nl):
    if grid.dim == 1:
        return ramp_1d(grid, cfg.x0, slope=cfg.slope, flat=0.25, a=nl.a)
    return radial_2d(grid, cfg.R0, alpha_minus=nl.alpha_minus, alpha_plus=nl.alpha_plus)


def _signed_distance_to_initial(u0: Field, nl) -> np.ndarray:
    iface = extract_interface(u0, nl.a)
    dist = distance_to_interface(u0.grid, iface).reshape(u0.grid.shape)
    return np.where(u0.values > nl.a, dist, -dist)


def interface_radius(u: Field, level: float, center=None) -> float:
    """Radius of the disk with the area enclosed by the level curve {u = level}."""
    grid = u.grid
    c = (0.5 * grid.Lx, 0.5 * grid.Ly) if center is None else center
    polys = contours(u.values, grid, level)
    area = 0.0
    for p in polys:
        x, y = p[:, 0] - c[0], p[:, 1] - c[1]
        area += 0.5 * abs(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))
    return math.sqrt(area / math.pi)


def _snap(times, dt):
    return np.unique(np.maximum(np.round(np.asarray(times) / dt), 1).astype(np.int64))


def default_C_nbhd(prof, eta: float) -> float:
    """Neighbourhood constant: twice the distance (in units of eps) at which U0 is within eta of its wells.

    The Cε-band then contains the whole standing-wave layer of the band
    classification with room for the layer to settle.
    """
    nl = prof.nl
    return float(2.0 * max(prof.inverse(nl.alpha_plus - eta), -prof.inverse(nl.alpha_minus + eta)))


def _generation_grid(te, T, n_times):
    """Generation-window snapshots, then the metric time grid.

    Geometric from t_gen/500 (ratio 1.25) until the spacing reaches t_gen/25,
    uniform at that spacing up to min(4 t_gen, T).
    """
    end = min(4 * te, T)
    cap = te / 25
    early = [te / 500]
    while early[-1] * 0.25 < cap and early[-1] < end:
        early.append(early[-1] * 1.25)
    t = early[-1]
    while t + cap <= end * (1 + 1e-12):
        t += cap
        early.append(t)
    early = np.array([e for e in early if e <= end * (1 + 1e-12)])
    late = np.linspace(2 * te, T, n_times)
    return early, late


def _gamma_g0(nl, prof, g0):
    if g0 == 0:
        return 0.0
    return pressure_gamma(constant_g(g0), nl, prof.c0)


# ---------------------------------------------------------------------------
# generation time
# ---------------------------------------------------------------------------


def _classified(u, d, nl, eta, C, eps):
    am, ap = nl.alpha_minus, nl.alpha_plus
    v = u.values
    if np.any(v < am - eta) or np.any(v > ap + eta):
        return False
    plus = d >= C * eps
    minus = d <= -C * eps
    return bool(np.all(v[plus] >= ap - eta) and np.all(v[minus] <= am + eta))


def measure_generation_time(traj: Trajectory, eta: float, C_nbhd: float) -> float:
    """First snapshot time at which the three-band classification holds.

    Every node lies in [alpha_- - eta, alpha_+ + eta]; nodes at signed distance
    >= C eps from the initial interface are within eta of alpha_+, those at
    <= -C eps within eta of alpha_-.

    Raises
    ------
    NeverGenerated
        The classification fails at every snapshot.
    ValueError
        Snapshot spacing exceeds t_gen_theory / 20 before the detection.
    """
    nl, eps = traj.nl, traj.eps
    te = eps ** 2 * abs(math.log(eps)) / nl.mu
    prev = 0.0
    for u in traj.snapshots:
        if u.time - prev > te / 20 * (1 + 1e-9):
            raise ValueError("snapshot spacing exceeds t_gen / 20")
        prev = u.time
        if _classified(u, traj.d_signed, nl, eta, C_nbhd, eps):
            return float(u.time)
    raise NeverGenerated("classification never holds on the given snapshots")


# ---------------------------------------------------------------------------
# scenario runs
# ---------------------------------------------------------------------------


def run_scenario(cfg: SweepConfig, eps: float, keep_snapshots: bool = False) -> RunArtifacts:
    """Run one (scenario, eps) pair and its sharp-interface reference.

    Records thickness (final time), interface errors on ``n_times``
    equispaced times in [2 t_gen, T], the measured generation time (AC
    scenarios) and the v-error (reaction-diffusion scenarios).
    """
    if cfg.scenario in ("fhn-radial", "pp-radial"):
        return _run_rd(cfg, eps, keep_snapshots)
    return _run_ac(cfg, eps, keep_snapshots)


def _run_ac(cfg, eps, keep):
    nl = _nl_for(cfg.scenario)
    prof = compute_profile(nl)
    grid = _make_grid(cfg, eps)
    dt = stable_dt(grid) * cfg.dt_factor
    u0 = _initial_u(cfg, grid, nl)
    C0 = initial_data_bound(u0)
    g0 = cfg.g0
    if cfg.scenario == "radial2d-forced" and not np.isfinite(g0):
        # stationary radius: gamma(g0) = (N - 1) / R0
        g0 = (1.0 / cfg.R0) / _gamma_g0(nl, prof, 1.0)
    pg = constant_g(g0) if g0 else zero_g()
    gamma = _gamma_g0(nl, prof, g0) if g0 else 0.0
    st = ACStepper(grid, nl, pg if g0 else None, eps, dt)
    te = eps ** 2 * abs(math.log(eps)) / nl.mu
    early, late = _generation_grid(te, cfg.T, cfg.n_times)
    if cfg.scenario == "radial2d-forced":
        late = np.linspace(0.0, cfg.T, 2 * cfg.n_times + 1)[1:]
    k_early = _snap(early, dt)
    k_late = _snap(late, dt)
    ks = np.union1d(k_early, k_late)
    d0s = _signed_distance_to_initial(u0, nl)
    C = default_C_nbhd(prof, cfg.eta) if cfg.C_nbhd is None else cfg.C_nbhd

    if grid.dim == 1:
        ref = lambda t: np.array([cfg.x0 + gamma * t])  # noqa: E731
    else:
        traj_ref = radial_solve(cfg.R0, 2, constant_forcing(gamma) if gamma else no_forcing(),
                                cfg.T, min(1e-5, dt), allow_extinction=True)
        ref = traj_ref.at

    snaps, t_series, haus, rerr, radii = [], [], [], [], []
    u = u0
    k_prev = 0
    late_set = set(k_late.tolist())
    early_set = set(k_early.tolist())
    for k in ks:
        u = st.run(u, int(k - k_prev))
        k_prev = k
        if k in early_set:
            snaps.append(u)
        if k in late_set:
            t = u.time
            t_series.append(t)
            if grid.dim == 1:
                pts = crossings_1d(grid.x, u.values, nl.a)
                rp = ref(t)
                hd = max(np.max(np.min(np.abs(pts[:, None] - rp[None, :]), axis=1)),
                         np.max(np.min(np.abs(rp[:, None] - pts[None, :]), axis=1)))
                haus.append(hd)
                rerr.append(hd)
                radii.append(float(pts[np.argmin(np.abs(pts - rp[0]))]))
            else:
                Rr = float(ref(t))
                Rp = interface_radius(u, nl.a)
                radii.append(Rp)
                rerr.append(Rp - Rr)
                polys = contours(u.values, grid, nl.a)
                c = (0.5 * grid.Lx, 0.5 * grid.Ly)
                haus.append(hausdorff(polys, circle_polyline(c, Rr, 4096), grid.h))
            if keep:
                snaps.append(u)
    rec = SweepRecord(cfg.scenario, eps, grid.h, dt, cfg.T, C0=C0)
    rec.t_gen_theory = te
    traj = Trajectory([s for s in snaps if s.time <= 4 * te + dt], d0s, nl, eps)
    try:
        rec.t_gen = measure_generation_time(traj, cfg.eta, C)
    except NeverGenerated:
        rec.t_gen = float("nan")
    rec.thickness = layer_thickness(u, extract_interface(u, nl.a), cfg.eta, nl)
    rec.hausdorff_max = float(np.max(haus))
    rec.radius_err_max = float(np.max(np.abs(rerr)))
    if cfg.scenario == "radial2d-forced":
        rec.drift_max = float(np.max(np.abs(np.array(radii) - cfg.R0)))
    series = dict(t=np.array(t_series), interface=np.array(radii), error=np.array(rerr), hausdorff=np.array(haus))
    return RunArtifacts(rec, series, snaps if keep else [], u)


def _sample_on(ref: Field, grid: Grid) -> np.ndarray:
    """Values of a reference field at the nodes of a (coarser) grid."""
    k = grid.h / ref.grid.h
    kk = int(round(k))
    if abs(k - kk) < 1e-9 and (ref.grid.nx - 1) == kk * (grid.nx - 1):
        return ref.values[::kk, ::kk]
    from scipy.interpolate import RectBivariateSpline

    spl = RectBivariateSpline(ref.grid.y, ref.grid.x, ref.values, kx=3, ky=3)
    return spl(grid.y, grid.x)


def _run_rd(cfg, eps, keep):
    nl = _nl_for(cfg.scenario)
    prof = compute_profile(nl)
    rd = fhn_params() if cfg.scenario == "fhn-radial" else pp_params()
    grid = _make_grid(cfg, eps)
    dt = stable_dt(grid, rd.D) * cfg.dt_factor
    u = _initial_u(cfg, grid, nl)
    v = Field(grid, np.full(grid.shape, float(cfg.v0)))
    C0 = initial_data_bound(u)
    te = eps ** 2 * abs(math.log(eps)) / nl.mu
    ks = _snap(np.linspace(2 * te, cfg.T, cfg.n_times), dt)
    times = ks * dt
    gref = Grid.rect(cfg.domain[0], cfg.domain[1], cfg.ref_h)
    ref = limit_rd_grid_solve(cfg.R0, rd, prof, cfg.v0, float(times[-1]), gref, dt=cfg.ref_dt,
                              snapshot_times=list(times))
    st = RDStepper(grid, nl, rd, eps, dt)
    rect = invariant_rectangle_check(u, v, rd)
    verr, haus, radii, rerr, snaps = [], [], [], [], []
    k_prev = 0

    def watch(uu, vv):
        nonlocal rect
        rect = rect and invariant_rectangle_check(uu, vv, rd)

    c = (0.5 * grid.Lx, 0.5 * grid.Ly)
    for k, snap in zip(ks, ref.v_snapshots):
        u, v = st.run(u, v, int(k - k_prev), callback=watch, every=50)
        k_prev = k
        rect = rect and invariant_rectangle_check(u, v, rd)
        verr.append(float(np.max(np.abs(v.values - _sample_on(snap, grid)))))
        Rr = float(ref.radius_at(u.time))
        Rp = interface_radius(u, nl.a)
        radii.append(Rp)
        rerr.append(Rp - Rr)
        haus.append(hausdorff(contours(u.values, grid, nl.a), circle_polyline(c, Rr, 4096), grid.h))
        if keep:
            snaps.append((u, v))
    rec = SweepRecord(cfg.scenario, eps, grid.h, dt, cfg.T, C0=C0, t_gen_theory=te)
    rec.v_err = float(np.max(verr))
    rec.rect_ok = float(rect)
    rec.thickness = layer_thickness(u, extract_interface(u, nl.a), cfg.eta, nl)
    rec.hausdorff_max = float(np.max(haus))
    rec.radius_err_max = float(np.max(np.abs(rerr)))
    series = dict(t=times, interface=np.array(radii), error=np.array(rerr), hausdorff=np.array(haus),
                  v_err=np.array(verr))
    return RunArtifacts(rec, series, snaps, u, v)


def run_sweep(cfg: SweepConfig):
    """Run every eps of the sweep; returns (records, fits)."""
    records = [run_scenario(cfg, e).record for e in cfg.eps_list]
    fits = {}
    eps = np.array([r.eps for r in records])
    for name in ("thickness", "hausdorff_max", "radius_err_max", "t_gen", "v_err"):
        y = np.array([getattr(r, name) for r in records])
        if eps.size >= 3 and np.all(np.isfinite(y)) and np.all(y > 0):
            slope, icpt, r2 = fit_power(list(zip(eps, y)))
            fits[name] = dict(slope=slope, intercept=icpt, r2=r2)
        if eps.size >= 2 and np.all(np.isfinite(y)) and np.all(y > 0):
            fits.setdefault(name, {})["ratios"] = (y[:-1] / y[1:]).tolist()
    return records, fits


# ---------------------------------------------------------------------------
# comparison runs
# ---------------------------------------------------------------------------


def compare_run(cfg: SweepConfig, eps: float, every: int = 20, C6_factor: float = 1.0):
    """Sandwich and residual checks along a 1D run.

    Returns rows (phase, t, min_residual_lower_bound_candidate, ordering_ok)
    and a summary dict.  In the generation phase the candidates are w^+-,
    after t_gen the motion sub/supersolutions u^+- of the (shifted) interface.
    The residual reported is min over interior nodes of the discrete L of the
    supersolution.
    """
    if not cfg.scenario.startswith("1d"):
        raise ValueError("compare runs are provided for the 1D scenarios")
    nl = _nl_for(cfg.scenario)
    prof = compute_profile(nl)
    grid = _make_grid(cfg, eps)
    dt = stable_dt(grid) * cfg.dt_factor
    u0 = _initial_u(cfg, grid, nl)
    pg = constant_g(cfg.g0) if cfg.g0 else zero_g()
    gamma = _gamma_g0(nl, prof, cfg.g0)
    st = ACStepper(grid, nl, pg if cfg.g0 else None, eps, dt)
    gp = make_gen_params(nl, u0, eps, None if pg.is_zero else pg)
    if C6_factor != 1.0:
        gp = replace(gp, C6=gp.C6 * C6_factor)
    tol = calibrate_tol_res(prof, grid, eps, dt, x0=cfg.x0)
    pgp = None if pg.is_zero else pg
    rows = []
    n_gen = int(math.floor(gp.t_gen / dt))
    u = u0
    for k in range(n_gen + 1):
        t = k * dt
        if k % every == 0 or k == n_gen:
            lo = gen_subsuper(nl, u0, gp, eps, t, -1)
            up = gen_subsuper(nl, u0, gp, eps, t, +1)
            up1 = gen_subsuper(nl, u0, gp, eps, t + dt, +1)
            res = float(np.nanmin(residual_L(up, up1, nl, pgp, eps, dt)))
            rows.append(("generation", t, res, ordering_check(lo, u, up)))
        if k < n_gen:
            u = st.run(u, 1)
    t_e = u.time
    corr = CorrectorField(pg, prof, eps)
    d0 = 0.5 * min(cfg.x0, grid.Lx - cfg.x0)
    mp = tune_motion_params(nl, prof, pgp, d0, cfg.T, eps, eta=cfg.eta, slope=cfg.slope, eps_gen=eps,
                            M_corr=corr.bound())
    n_mot = int(math.floor((cfg.T - t_e) / dt))
    x = grid.x
    for k in range(n_mot + 1):
        s = k * dt
        if k % every == 0 or k == n_mot:
            def dfield(tt):
                return Field(grid, cutoff_zeta(x - cfg.x0 - gamma * tt, d0), tt)

            lo = motion_subsuper(prof, corr, dfield(s), mp, eps, s, -1, x=(x,))
            up = motion_subsuper(prof, corr, dfield(s), mp, eps, s, +1, x=(x,))
            up1 = motion_subsuper(prof, corr, dfield(s + dt), mp, eps, s + dt, +1, x=(x,))
            up1 = Field(grid, up1.values, s + dt)
            up = Field(grid, up.values, s)
            res = float(np.nanmin(residual_L(up, up1, nl, pgp, eps, dt)))
            rows.append(("motion", t_e + s, res, ordering_check(lo, Field(grid, u.values, s), up)))
        if k < n_mot:
            u = st.run(u, 1)
    summary = dict(tol_res=tol, gen=gp.to_dict(), motion=mp.to_dict(),
                   ordering_ok=all(r[3] for r in rows),
                   min_residual_generation=min(r[2] for r in rows if r[0] == "generation"),
                   min_residual_motion=min(r[2] for r in rows if r[0] == "motion"))
    return rows, summary


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def fit_power(points) -> tuple:
    """Least-squares fit of ln y = slope ln x + intercept; returns (slope, intercept, r2).

    Raises
    ------
    DegenerateFit
        Fewer than 3 points, a non-positive value or all x equal.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DegenerateFit("need at least 3 points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(pts)):
        raise DegenerateFit("points must be positive and finite")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise DegenerateFit("all abscissae are equal")
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * lx + icpt)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res ** 2)) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), r2


# ---------------------------------------------------------------------------
# Volterra function
# ---------------------------------------------------------------------------

_GL_PANELS = 8


def _gauss_int(func, lo, hi, panels=_GL_PANELS):
    """Composite Gauss-Legendre quadrature of a smooth vectorised function."""
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    return float(np.sum(half[:, None] * _GL_W[None, :] * func(nodes)))


def kbar(t: float, C: float) -> float:
    """k-bar(t) = e^{C^2 pi t} (1 + C int_0^t e^{-C^2 pi s} s^{-1/2} ds).

    The substitution s = sigma^2 turns the integral into
    2 int_0^{sqrt t} e^{-C^2 pi sigma^2} d sigma, a smooth integrand handled by
    composite Gauss-Legendre quadrature.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0 or C == 0:
        return math.exp(C * C * math.pi * t)
    a = C * C * math.pi
    I = _gauss_int(lambda s: 2.0 * np.exp(-a * s * s), 0.0, math.sqrt(t))
    return math.exp(a * t) * (1.0 + C * I)


def kbar_erf(t: float, C: float) -> float:
    """Error-function form e^{C^2 pi t} (1 + erf(C sqrt(pi t)))."""
    return math.exp(C * C * math.pi * t) * (1.0 + float(erf(C * math.sqrt(math.pi * t))))


def kbar_residual(t: float, C: float) -> float:
    """|k-bar(t) - 1 - C int_0^t k-bar(s) (t - s)^{-1/2} ds|.

    With s = t - sigma^2 the weakly singular integral becomes
    2 int_0^{sqrt t} k-bar(t - sigma^2) d sigma; k-bar itself behaves like
    sqrt(s) near s = 0, so sigma = sqrt(t) sin(theta) is applied as well,
    leaving the smooth integrand 2 sqrt(t) k-bar(t cos^2 theta) cos(theta).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if C == 0:
        return abs(kbar(t, 0.0) - 1.0)
    kb = np.vectorize(lambda s: kbar(float(max(s, 0.0)), C))
    rt = math.sqrt(t)
    I = _gauss_int(lambda th: 2.0 * rt * kb(t * np.cos(th) ** 2) * np.cos(th), 0.0, 0.5 * math.pi, panels=4)
    return abs(kbar(t, C) - 1.0 - C * I)


def volterra_iterate(C: float, t_end: float, n: int = 2000):
    """Solve k(t) = 1 + C int_0^t k(s) (t - s)^{-1/2} ds by product trapezoid integration.

    k is interpolated linearly between nodes and the kernel integrated
    exactly against each hat function; the implicit diagonal term is solved
    for at each step.  Returns (t_nodes, k).
    """
    h = t_end / n
    t = np.arange(n + 1) * h
    k = np.empty(n + 1)
    k[0] = 1.0
    # On [t_j, t_{j+1}] put w = (t_i - s) / h in [m - 1, m], m = i - j; the hat
    # function of node j+1 is m - w, so
    #   int K = sqrt(h) 2 (sqrt(m) - sqrt(m - 1)),
    #   int hat_{j+1} K = sqrt(h) (2 m (sqrt(m) - sqrt(m - 1)) - (2/3)(m^{3/2} - (m - 1)^{3/2})).
    sh = math.sqrt(h)
    for i in range(1, n + 1):
        a = (i - np.arange(i)).astype(float)
        b = a - 1.0
        I0 = 2.0 * sh * (np.sqrt(a) - np.sqrt(b))
        I_right = sh * (2.0 * a * (np.sqrt(a) - np.sqrt(b)) - (2.0 / 3.0) * (a ** 1.5 - b ** 1.5))
        I_left = I0 - I_right
        acc = 1.0 + C * (np.sum(I_left * k[:i]) + np.sum(I_right[:-1] * k[1:i]))
        k[i] = acc / (1.0 - C * I_right[-1])
    return t, k


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def write_csv(records: Sequence[SweepRecord], path) -> None:
    """CSV with the fixed column order of SweepRecord and %.17g floats."""
    cols = SweepRecord.columns()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in cols])


def read_csv(path) -> List[SweepRecord]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            kw = {k: (v if k == "scenario" else float(v)) for k, v in row.items()}
            out.append(SweepRecord(**kw))
    return out


def write_manifest(cfg: SweepConfig | None, path, extra: dict | None = None) -> None:
    man = {"tool": "aclab", "version": __version__, "config": cfg.to_dict() if cfg is not None else None}
    if extra:
        man.update(extra)
    with open(path, "w") as fh:
        json.dump(_strict(man), fh, indent=2, sort_keys=True, default=_json_default, allow_nan=False)
        fh.write("\n")


def _strict(o):
    """Replace non-finite floats by None (strict JSON has no NaN / Infinity)."""
    if isinstance(o, dict):
        return {k: _strict(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_strict(v) for v in o]
    if isinstance(o, np.ndarray):
        return _strict(o.tolist())
    if isinstance(o, (float, np.floating)) and not math.isfinite(float(o)):
        return None
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return o


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def export(records: Sequence[SweepRecord], path, cfg: SweepConfig | None = None, extra: dict | None = None):
    """Write ``path`` (CSV) and ``path`` with suffix .json (manifest); returns both paths."""
    path = str(path)
    write_csv(records, path)
    man = (path[:-4] if path.endswith(".csv") else path) + ".json"
    write_manifest(cfg, man, extra)
    return path, man
