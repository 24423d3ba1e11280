"""
Polyline geometry: zero-level extraction, point-to-curve distances, signed
distance with even-odd sign, Hausdorff distance, and the ``InterfaceState``
container shared by the diffuse and sharp-interface solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from .errors import DegenerateCurve, InterfaceLost
from .grid import Field, Grid


@dataclass
class InterfaceState:
    """A sharp interface.

    ``mode`` is "radial" (radius + center), "levelset" (polylines + signed
    distance field) or "points" (sorted crossing abscissae in 1D).
    """

    mode: str
    time: float = 0.0
    radius: Optional[float] = None
    center: Optional[np.ndarray] = None
    polylines: List[np.ndarray] = field(default_factory=list)
    points: Optional[np.ndarray] = None
    dist: Optional[Field] = None

    def as_polylines(self, n: int = 2048) -> List[np.ndarray]:
        """Polyline representation (a sampled circle in radial mode)."""
        if self.mode == "radial":
            return [circle_polyline(self.center, self.radius, n)]
        return self.polylines


def circle_polyline(center, R, n=720):
    """Closed polygon (first vertex repeated) inscribed in the circle."""
    th = np.linspace(0.0, 2 * np.pi, n + 1)
    c = np.asarray(center, dtype=float)
    pts = np.stack([c[0] + R * np.cos(th), c[1] + R * np.sin(th)], axis=1)
    pts[-1] = pts[0]
    return pts


def ellipse_polyline(center, a, b, n=720):
    th = np.linspace(0.0, 2 * np.pi, n + 1)
    c = np.asarray(center, dtype=float)
    pts = np.stack([c[0] + a * np.cos(th), c[1] + b * np.sin(th)], axis=1)
    pts[-1] = pts[0]
    return pts


def is_closed(poly, tol=1e-12):
    return poly.shape[0] > 2 and np.linalg.norm(poly[0] - poly[-1]) <= tol


def contours(values: np.ndarray, grid: Grid, level: float) -> List[np.ndarray]:
    """Marching-squares level curves of a 2D node array, in physical (x, y)."""
    raw = measure.find_contours(values, level)
    h = grid.h
    out = []
    for c in raw:
        pts = np.stack([c[:, 1] * h, c[:, 0] * h], axis=1)
        out.append(pts)
    # deterministic order: longest first, ties by first vertex
    out.sort(key=lambda p: (-p.shape[0], float(p[0, 0]), float(p[0, 1])))
    return out


def crossings_1d(x: np.ndarray, u: np.ndarray, level: float) -> np.ndarray:
    """Sorted abscissae where the piecewise-linear interpolant of u meets ``level``."""
    s = u - level
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    xc = x[idx] - s[idx] * (x[idx + 1] - x[idx]) / (s[idx + 1] - s[idx])
    exact = x[np.nonzero(s == 0)[0]]
    return np.unique(np.concatenate([xc, exact]))


def segments_of(polylines) -> np.ndarray:
    """Stack the segments of several polylines into an (m, 2, 2) array."""
    segs = [np.stack([p[:-1], p[1:]], axis=1) for p in polylines if p.shape[0] >= 2]
    if not segs:
        raise DegenerateCurve("no segments")
    return np.concatenate(segs, axis=0)


def point_segment_distance(points: np.ndarray, segs: np.ndarray, chunk: int = 4_000_000) -> np.ndarray:
    """Brute-force min distance from each point to a set of segments."""
    P = np.atleast_2d(points)
    A = segs[:, 0]
    AB = segs[:, 1] - A
    L2 = np.einsum("ij,ij->i", AB, AB)
    L2 = np.where(L2 > 0, L2, 1.0)
    out = np.empty(P.shape[0])
    step = max(1, chunk // max(1, segs.shape[0]))
    for s in range(0, P.shape[0], step):
        p = P[s:s + step, None, :]
        AP = p - A[None]
        t = np.clip(np.einsum("nmk,mk->nm", AP, AB) / L2, 0.0, 1.0)
        d = AP - t[..., None] * AB[None]
        out[s:s + step] = np.sqrt(np.min(np.einsum("nmk,nmk->nm", d, d), axis=1))
    return out


def densify(poly: np.ndarray, spacing: float) -> np.ndarray:
    """Insert vertices so that consecutive vertices are at most ``spacing`` apart."""
    seg = np.diff(poly, axis=0)
    lens = np.linalg.norm(seg, axis=1)
    k = np.maximum(1, np.ceil(lens / spacing).astype(int))
    pieces = [poly[i] + np.outer(np.arange(k[i]) / k[i], seg[i]) for i in range(seg.shape[0])]
    pieces.append(poly[-1:])
    return np.concatenate(pieces, axis=0)


class PolylineDistance:
    """Fast point-to-polyline distance via a k-d tree over densified vertices.

    Candidate segments are those owning one of the ``k`` nearest densified
    vertices; the exact segment distance is then evaluated for each candidate.
    """

    def __init__(self, polylines, spacing: float, k: int = 8):
        self.segs = segments_of(polylines)
        verts, owner = [], []
        for i, (a, b) in enumerate(self.segs):
            n = max(1, int(np.ceil(np.linalg.norm(b - a) / spacing)))
            t = np.arange(n + 1) / n
            verts.append(a + np.outer(t, b - a))
            owner.append(np.full(n + 1, i))
        self.verts = np.concatenate(verts)
        self.owner = np.concatenate(owner)
        self.tree = cKDTree(self.verts)
        self.k = min(k, self.verts.shape[0])

    def __call__(self, points: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(points)
        _, idx = self.tree.query(P, k=self.k)
        idx = idx.reshape(P.shape[0], -1)
        cand = self.owner[idx]
        A = self.segs[cand, 0]
        AB = self.segs[cand, 1] - A
        AP = P[:, None, :] - A
        L2 = np.einsum("nmk,nmk->nm", AB, AB)
        t = np.clip(np.einsum("nmk,nmk->nm", AP, AB) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
        d = AP - t[..., None] * AB
        return np.sqrt(np.min(np.einsum("nmk,nmk->nm", d, d), axis=1))


def inside_even_odd(points: np.ndarray, polylines, chunk: int = 4_000_000) -> np.ndarray:
    """Even-odd ray-crossing test (ray towards +x) against closed polylines."""
    segs = segments_of(polylines)
    x1, y1 = segs[:, 0, 0], segs[:, 0, 1]
    x2, y2 = segs[:, 1, 0], segs[:, 1, 1]
    P = np.atleast_2d(points)
    inside = np.zeros(P.shape[0], dtype=bool)
    step = max(1, chunk // max(1, segs.shape[0]))
    dy = np.where(y2 != y1, y2 - y1, 1.0)
    for s in range(0, P.shape[0], step):
        px = P[s:s + step, 0:1]
        py = P[s:s + step, 1:2]
        straddle = (y1 > py) != (y2 > py)
        xint = x1 + (py - y1) * (x2 - x1) / dy
        cross = straddle & (px < xint)
        inside[s:s + step] = (np.count_nonzero(cross, axis=1) % 2) == 1
    return inside


def signed_distance(curve, grid: Grid) -> Field:
    """Signed distance to a closed polyline (negative inside) at every node.

    Distances are brute-force minima over all segments; the sign comes from
    the even-odd ray-crossing test.
    """
    polys = curve if isinstance(curve, (list, tuple)) else [curve]
    for p in polys:
        if p.shape[0] < 3:
            raise DegenerateCurve("a closed curve needs at least 3 vertices")
    closed = [p if is_closed(p) else np.vstack([p, p[:1]]) for p in polys]
    pts = grid.points()
    d = point_segment_distance(pts, segments_of(closed))
    inside = inside_even_odd(pts, closed)
    return Field(grid, np.where(inside, -d, d).reshape(grid.shape))


def hausdorff(A, B, h: float | None = None) -> float:
    """Hausdorff distance between two polylines (or lists of polylines).

    Vertices of each curve are densified to spacing <= h/4 and the exact
    distance of every densified vertex to the segments of the other curve is
    taken; the result is the larger of the two directed distances.
    """
    As = A if isinstance(A, (list, tuple)) else [A]
    Bs = B if isinstance(B, (list, tuple)) else [B]
    for p in list(As) + list(Bs):
        if p.shape[0] < 2:
            raise DegenerateCurve("polyline needs at least 2 vertices")
    if h is None:
        lens = [np.min(np.linalg.norm(np.diff(p, axis=0), axis=1)) for p in list(As) + list(Bs)]
        h = 4 * max(min(lens), 1e-6)
    sp = h / 4.0
    dA = np.concatenate([densify(p, sp) for p in As])
    dB = np.concatenate([densify(p, sp) for p in Bs])
    d_ab = float(np.max(point_segment_distance(dA, segments_of(Bs))))
    d_ba = float(np.max(point_segment_distance(dB, segments_of(As))))
    return max(d_ab, d_ba)


def extract_interface(u: Field, level_a: float) -> InterfaceState:
    """Level set {u = a}: crossing points in 1D, marching-squares polylines in 2D."""
    v = u.values
    if not (np.any(v > level_a) and np.any(v < level_a)):
        raise InterfaceLost("u - a does not change sign")
    if u.grid.dim == 1:
        return InterfaceState("points", time=u.time, points=crossings_1d(u.grid.x, v, level_a))
    polys = contours(v, u.grid, level_a)
    if not polys:
        raise InterfaceLost("no level curve found")
    return InterfaceState("levelset", time=u.time, polylines=polys)


def distance_to_interface(grid: Grid, iface: InterfaceState, points: np.ndarray | None = None) -> np.ndarray:
    """Unsigned distance from nodes (or given points) to the interface."""
    if grid.dim == 1:
        x = grid.x if points is None else np.asarray(points).ravel()
        pts = np.asarray(iface.points)
        return np.min(np.abs(x[:, None] - pts[None, :]), axis=1)
    P = grid.points() if points is None else points
    if iface.mode == "radial":
        return np.abs(np.linalg.norm(P - np.asarray(iface.center)[None, :], axis=1) - iface.radius)
    return point_segment_distance(P, segments_of(iface.polylines))


def radius_profile(polys, center) -> np.ndarray:
    """Distances of all polyline vertices to ``center``."""
    pts = np.concatenate(polys)
    return np.linalg.norm(pts - np.asarray(center)[None, :], axis=1)
