"""Ground-truth model spaces: circle, trefoil knot, embedded graphs.

Each model carries an arc-length parametrization, a nearest-point
projection, a geodesic metric, and the regularity constants consumed by
the scale-condition checker:

* ``tube_radius``        largest noise amplitude for which nearest-point
                         projection stays well defined,
* ``normal_clearance``   largest radius at which the normal slice through
                         any model point meets the model only at that point,
* ``homotopy_radius``    pointwise closeness under which two maps into the
                         model are homotopic,
* ``distortion(c)``      bound on geodesic/Euclidean ratio for point pairs
                         whose Euclidean distance is below ``c``,
* ``projection_displacement(t)``  bound on how far projection moves a point
                         of the radius-``t`` tube (``t`` itself, since the
                         projection is nearest-point).

For the circle all constants are closed form.  For the trefoil and for
embedded graphs they are certified numerically from dense parameter
tables and the certification method is recorded in the provenance of
the returned record.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist


class AmbiguousProjectionError(ValueError):
    """Raised when a point sits on the medial axis of a model."""


# ---------------------------------------------------------------------------
# point containers


@dataclass(frozen=True)
class PointCloud:
    """A finite ordered list of points in Euclidean space, shape (n, dim)."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("point cloud must be a 2-d array of shape (n, dim)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("# " + ",".join(f"x{i}" for i in range(self.dim)) + "\n")
            writer = csv.writer(fh)
            for row in self.points:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str) -> "PointCloud":
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                rows.append([float(tok) for tok in line.split(",")])
        if not rows:
            raise ValueError(f"no points found in {path}")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError(f"inconsistent column counts in {path}")
        return cls(np.array(rows, dtype=float))


@dataclass(frozen=True)
class MetricMatrix:
    """Symmetric pairwise-distance matrix; +inf marks disconnected pairs."""

    d: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.d, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("metric matrix must be square")
        if np.any(np.isnan(mat)):
            raise ValueError("metric matrix contains NaN")
        if mat.size and np.any(np.diag(mat) != 0.0):
            raise ValueError("metric matrix has nonzero diagonal")
        if not np.array_equal(mat, mat.T):
            raise ValueError("metric matrix is not symmetric")
        if np.any(mat < 0.0):
            raise ValueError("metric matrix has negative entries")
        object.__setattr__(self, "d", mat)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def audit_triangle(self, max_triples: int = 20000, seed: int = 0):
        """Spot-check the triangle inequality; returns an offending triple or None.

        Only finite entries are audited; +inf rows may legitimately break
        the inequality when components merge under a larger scale.
        """
        n = self.n
        if n < 3:
            return None
        rng = np.random.default_rng(seed)
        total = n * n * n
        if total <= max_triples:
            triples = [(i, j, k) for i in range(n) for j in range(n) for k in range(n)]
        else:
            idx = rng.integers(0, n, size=(max_triples, 3))
            triples = [tuple(map(int, row)) for row in idx]
        tol = 1e-9
        for i, j, k in triples:
            a, b, c = self.d[i, j], self.d[i, k], self.d[k, j]
            if np.isfinite(b) and np.isfinite(c) and a > b + c + tol:
                return (i, j, k)
        return None


def euclidean_metric(cloud: PointCloud) -> MetricMatrix:
    if cloud.n == 0:
        return MetricMatrix(np.zeros((0, 0)))
    d = cdist(cloud.points, cloud.points)
    np.fill_diagonal(d, 0.0)
    d = np.minimum(d, d.T)
    return MetricMatrix(d)


def epsilon_path_metric(cloud: PointCloud, eps: float) -> MetricMatrix:
    """Shortest-path metric over the graph joining pairs closer than ``eps``.

    Pairs in different graph components get +inf.  For pairs whose straight
    distance is below ``eps`` the value is that straight distance exactly
    (the direct edge is a path, and no path of straight segments can be
    shorter than the straight line); we pin those entries to the chord to
    keep the identity free of shortest-path rounding.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = cloud.n
    if n == 0:
        return MetricMatrix(np.zeros((0, 0)))
    w = cdist(cloud.points, cloud.points)
    np.fill_diagonal(w, 0.0)
    w = np.minimum(w, w.T)
    mask = w < eps
    np.fill_diagonal(mask, False)
    graph = csr_matrix(np.where(mask, w, 0.0))
    d = dijkstra(graph, directed=False)
    # chords are exact lower bounds on any path length
    d = np.maximum(d, w)
    d[mask] = w[mask]
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return MetricMatrix(d)


def hausdorff_distance(a: PointCloud, b: PointCloud) -> float:
    """Exact Hausdorff distance between two finite point sets."""
    if a.n == 0 or b.n == 0:
        raise ValueError("hausdorff distance needs nonempty clouds")
    d = cdist(a.points, b.points)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    param: float
    distance: float


@dataclass(frozen=True)
class ModelConstants:
    """Regularity constants of a model, evaluated at one chord bound."""

    normal_clearance: float
    homotopy_radius: float
    tube_radius: float
    chord_bound: float
    distortion: float
    provenance: dict

    def projection_displacement(self, t: float) -> float:
        # nearest-point projection moves a tube point by at most its
        # distance to the model
        return float(t)

    def to_json_dict(self) -> dict:
        return {
            "normal_clearance": float(self.normal_clearance),
            "homotopy_radius": float(self.homotopy_radius),
            "tube_radius": float(self.tube_radius),
            "chord_bound": float(self.chord_bound),
            "distortion": float(self.distortion),
            "projection_displacement": "t",
            "provenance": self.provenance,
        }


class Model:
    """Base class: a compact subset of Euclidean space with arc-length
    coordinates in [0, length)."""

    kind: str = "abstract"

    # geometry -------------------------------------------------------------
    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def length(self) -> float:
        raise NotImplementedError

    def point_at(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def project(self, x: np.ndarray) -> ProjectionResult:
        raise NotImplementedError

    def geodesic_param_distance(self, t1, t2):
        raise NotImplementedError

    def geodesic_metric(self, cloud: PointCloud) -> MetricMatrix:
        params = np.array([self.project(p).param for p in cloud.points])
        d = self.geodesic_param_distance(params[:, None], params[None, :])
        d = np.asarray(d, dtype=float)
        np.fill_diagonal(d, 0.0)
        d = np.minimum(d, d.T)
        return MetricMatrix(d)

    # constants ------------------------------------------------------------
    @property
    def tube_radius(self) -> float:
        raise NotImplementedError

    @property
    def normal_clearance(self) -> float:
        raise NotImplementedError

    @property
    def homotopy_radius(self) -> float:
        raise NotImplementedError

    @property
    def max_chord_bound(self) -> float:
        raise NotImplementedError

    def distortion(self, chord_bound: float) -> float:
        raise NotImplementedError

    def projection_displacement(self, t: float) -> float:
        return float(t)

    def constants_provenance(self) -> dict:
        raise NotImplementedError

    def betti(self) -> tuple[int, int]:
        raise NotImplementedError

    def is_closed_curve(self) -> bool:
        return False

    # serialization ----------------------------------------------------------
    def to_spec_json(self) -> dict:
        raise NotImplementedError


class Circle(Model):
    """Round circle of a given radius, embedded in the first two coordinates."""

    kind = "circle"

    def __init__(self, radius: float = 1.0, center=None, dim: int = 2):
        if radius <= 0:
            raise ValueError("radius must be positive")
        if dim < 2:
            raise ValueError("circle needs ambient dimension >= 2")
        self.radius = float(radius)
        self._dim = int(dim)
        if center is None:
            center = np.zeros(self._dim)
        self.center = np.asarray(center, dtype=float)
        if self.center.shape != (self._dim,):
            raise ValueError("center has wrong dimension")

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def length(self) -> float:
        return 2.0 * math.pi * self.radius

    def point_at(self, t: float) -> np.ndarray:
        theta = (t % self.length) / self.radius
        p = self.center.copy()
        p[0] += self.radius * math.cos(theta)
        p[1] += self.radius * math.sin(theta)
        return p

    def tangent_at(self, t: float) -> np.ndarray:
        theta = (t % self.length) / self.radius
        v = np.zeros(self._dim)
        v[0] = -math.sin(theta)
        v[1] = math.cos(theta)
        return v

    def project(self, x: np.ndarray) -> ProjectionResult:
        x = np.asarray(x, dtype=float)
        u = x[:2] - self.center[:2]
        nu = float(np.hypot(u[0], u[1]))
        if nu <= 1e-12 * max(1.0, self.radius):
            raise AmbiguousProjectionError(
                "point lies on the circle's axis; projection is ambiguous"
            )
        p = self.center.copy()
        p[0] += self.radius * u[0] / nu
        p[1] += self.radius * u[1] / nu
        t = (math.atan2(u[1], u[0]) % (2.0 * math.pi)) * self.radius
        return ProjectionResult(p, float(t), float(np.linalg.norm(x - p)))

    def geodesic_param_distance(self, t1, t2):
        delta = np.abs(np.asarray(t1) - np.asarray(t2)) % self.length
        return np.minimum(delta, self.length - delta)

    @property
    def tube_radius(self) -> float:
        return self.radius

    @property
    def normal_clearance(self) -> float:
        # the normal line at p re-enters the circle only at the antipode
        return 2.0 * self.radius

    @property
    def homotopy_radius(self) -> float:
        # below half the circumference, geodesic interpolation is unique
        return math.pi * self.radius

    @property
    def max_chord_bound(self) -> float:
        return 2.0 * self.radius

    def distortion(self, chord_bound: float) -> float:
        if not 0.0 < chord_bound < 2.0 * self.radius:
            raise ValueError(
                f"chord bound must lie in (0, {2 * self.radius}); got {chord_bound}"
            )
        ratio = chord_bound / (2.0 * self.radius)
        return 2.0 * self.radius * math.asin(ratio) / chord_bound

    def constants_provenance(self) -> dict:
        return {"method": "closed-form"}

    def betti(self) -> tuple[int, int]:
        return (1, 1)

    def is_closed_curve(self) -> bool:
        return True

    def to_spec_json(self) -> dict:
        return {
            "kind": "circle",
            "params": {
                "radius": self.radius,
                "center": [float(v) for v in self.center],
                "dim": self._dim,
            },
        }


def _trefoil_point(u, scale):
    u = np.asarray(u, dtype=float)
    return scale * np.stack(
        [
            np.sin(u) + 2.0 * np.sin(2.0 * u),
            np.cos(u) - 2.0 * np.cos(2.0 * u),
            -np.sin(3.0 * u),
        ],
        axis=-1,
    )


def _trefoil_d1(u, scale):
    u = np.asarray(u, dtype=float)
    return scale * np.stack(
        [
            np.cos(u) + 4.0 * np.cos(2.0 * u),
            -np.sin(u) + 4.0 * np.sin(2.0 * u),
            -3.0 * np.cos(3.0 * u),
        ],
        axis=-1,
    )


def _trefoil_d2(u, scale):
    u = np.asarray(u, dtype=float)
    return scale * np.stack(
        [
            -np.sin(u) - 8.0 * np.sin(2.0 * u),
            -np.cos(u) + 8.0 * np.cos(2.0 * u),
            9.0 * np.sin(3.0 * u),
        ],
        axis=-1,
    )


class Trefoil(Model):
    """Trefoil knot  scale * (sin u + 2 sin 2u, cos u - 2 cos 2u, -sin 3u).

    Arc length is tabulated on a dense parameter grid; projection does a
    coarse scan over the table followed by golden-section refinement.
    """

    kind = "trefoil"
    _TABLE = 8192
    _SCAN = 4096
    _PAIRS = 1024

    def __init__(self, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.scale = float(scale)

    @property
    def dim(self) -> int:
        return 3

    @cached_property
    def _arc_table(self):
        u = np.linspace(0.0, 2.0 * math.pi, self._TABLE + 1)
        speed = np.linalg.norm(_trefoil_d1(u, self.scale), axis=-1)
        # trapezoid cumulative arc length over the parameter grid
        du = u[1] - u[0]
        seg = 0.5 * (speed[:-1] + speed[1:]) * du
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return u, cum

    @property
    def length(self) -> float:
        return float(self._arc_table[1][-1])

    def _param_of_arc(self, t):
        u, cum = self._arc_table
        t = np.asarray(t, dtype=float) % cum[-1]
        return np.interp(t, cum, u)

    def _arc_of_param(self, uu):
        u, cum = self._arc_table
        return np.interp(np.asarray(uu, dtype=float) % (2.0 * math.pi), u, cum)

    def point_at(self, t: float) -> np.ndarray:
        return np.atleast_2d(_trefoil_point(self._param_of_arc(t), self.scale))[0]

    def tangent_at(self, t: float) -> np.ndarray:
        d = _trefoil_d1(self._param_of_arc(t), self.scale)
        return d / np.linalg.norm(d)

    @cached_property
    def _scan_points(self):
        u = np.linspace(0.0, 2.0 * math.pi, self._SCAN, endpoint=False)
        return u, _trefoil_point(u, self.scale)

    def project(self, x: np.ndarray) -> ProjectionResult:
        x = np.asarray(x, dtype=float)
        u_grid, pts = self._scan_points
        d2 = np.sum((pts - x) ** 2, axis=1)
        best = int(np.argmin(d2))
        h = 2.0 * math.pi / self._SCAN
        refined_u, refined_d2 = self._golden(x, u_grid[best] - 2 * h, u_grid[best] + 2 * h)
        # ambiguity: another scan minimum, far away in parameter, equally close
        order = np.argsort(d2)
        for j in order[1:8]:
            du = abs(u_grid[int(j)] - u_grid[best]) % (2.0 * math.pi)
            du = min(du, 2.0 * math.pi - du)
            if du <= 4 * h:
                continue
            if d2[int(j)] > refined_d2 + 1e-7 * self.scale**2 + 4.0 * h * self.scale * math.sqrt(refined_d2) + 40.0 * h**2 * self.scale**2:
                continue
            alt_u, alt_d2 = self._golden(x, u_grid[int(j)] - 2 * h, u_grid[int(j)] + 2 * h)
            if abs(math.sqrt(alt_d2) - math.sqrt(refined_d2)) < 1e-9 * self.scale:
                p1 = _trefoil_point(refined_u, self.scale)
                p2 = _trefoil_point(alt_u, self.scale)
                if np.linalg.norm(p1 - p2) > 1e-6 * self.scale:
                    raise AmbiguousProjectionError(
                        "point is equidistant from two separated strands"
                    )
        p = _trefoil_point(refined_u, self.scale)
        t = float(self._arc_of_param(refined_u))
        return ProjectionResult(p, t, float(np.linalg.norm(x - p)))

    def _golden(self, x, lo, hi):
        phi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - phi * (b - a)
        d = a + phi * (b - a)
        fc = float(np.sum((_trefoil_point(c, self.scale) - x) ** 2))
        fd = float(np.sum((_trefoil_point(d, self.scale) - x) ** 2))
        while b - a > 1e-12:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - phi * (b - a)
                fc = float(np.sum((_trefoil_point(c, self.scale) - x) ** 2))
            else:
                a, c, fc = c, d, fd
                d = a + phi * (b - a)
                fd = float(np.sum((_trefoil_point(d, self.scale) - x) ** 2))
        u = 0.5 * (a + b)
        return u, float(np.sum((_trefoil_point(u, self.scale) - x) ** 2))

    def geodesic_param_distance(self, t1, t2):
        delta = np.abs(np.asarray(t1) - np.asarray(t2)) % self.length
        return np.minimum(delta, self.length - delta)

    @cached_property
    def _curvature_max(self) -> float:
        u = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
        d1 = _trefoil_d1(u, self.scale)
        d2 = _trefoil_d2(u, self.scale)
        num = np.linalg.norm(np.cross(d1, d2), axis=-1)
        den = np.linalg.norm(d1, axis=-1) ** 3
        return float(np.max(num / den)) * 1.02

    @cached_property
    def _pair_tables(self):
        u = np.linspace(0.0, 2.0 * math.pi, self._PAIRS, endpoint=False)
        pts = _trefoil_point(u, self.scale)
        arcs = self._arc_of_param(u)
        chord = cdist(pts, pts)
        geo = self.geodesic_param_distance(arcs[:, None], arcs[None, :])
        return chord, np.asarray(geo)

    @cached_property
    def _clearance_numbers(self):
        """Scan normal-plane crossings to certify clearance and separation."""
        kappa = self._curvature_max
        excl = min(0.5 * math.pi / kappa * 0.98, self.length / 4.0)
        n_base, n_scan = 2048, 4096
        ub = np.linspace(0.0, 2.0 * math.pi, n_base, endpoint=False)
        us = np.linspace(0.0, 2.0 * math.pi, n_scan, endpoint=False)
        base_pts = _trefoil_point(ub, self.scale)
        base_tan = _trefoil_d1(ub, self.scale)
        base_tan /= np.linalg.norm(base_tan, axis=-1, keepdims=True)
        scan_pts = _trefoil_point(us, self.scale)
        base_arc = self._arc_of_param(ub)
        scan_arc = self._arc_of_param(us)
        clearance = math.inf
        separation = math.inf
        for i in range(n_base):
            arc_d = np.abs(scan_arc - base_arc[i]) % self.length
            arc_d = np.minimum(arc_d, self.length - arc_d)
            far = arc_d > excl
            diff = scan_pts - base_pts[i]
            if np.any(far):
                separation = min(
                    separation, float(np.min(np.linalg.norm(diff[far], axis=-1)))
                )
            g = diff @ base_tan[i]
            g_next = np.roll(g, -1)
            cross = far & (np.roll(far, -1)) & (g * g_next <= 0.0) & (g != g_next)
            idx = np.flatnonzero(cross)
            if idx.size == 0:
                continue
            u_lo = us[idx]
            u_hi = u_lo + (2.0 * math.pi / n_scan)
            frac = g[idx] / (g[idx] - g_next[idx])
            u_zero = u_lo + frac * (u_hi - u_lo)
            zero_pts = _trefoil_point(u_zero, self.scale)
            dist = np.linalg.norm(zero_pts - base_pts[i], axis=-1)
            clearance = min(clearance, float(np.min(dist)))
        return clearance * 0.995, separation

    @property
    def normal_clearance(self) -> float:
        return self._clearance_numbers[0]

    @property
    def homotopy_radius(self) -> float:
        # unique shortest arcs below half the total length
        return self.length / 2.0

    @property
    def tube_radius(self) -> float:
        sep = self._clearance_numbers[1]
        return min(sep / 2.0, 1.0 / self._curvature_max) * 0.95

    @property
    def max_chord_bound(self) -> float:
        chord, _ = self._pair_tables
        return float(chord.max()) * 0.999

    def distortion(self, chord_bound: float) -> float:
        if not 0.0 < chord_bound <= self.max_chord_bound:
            raise ValueError(f"chord bound out of range (0, {self.max_chord_bound}]")
        chord, geo = self._pair_tables
        mask = (chord > 1e-12 * self.scale) & (chord < chord_bound)
        if not np.any(mask):
            return 1.0
        return float(np.max(geo[mask] / chord[mask])) * 1.02

    def constants_provenance(self) -> dict:
        return {
            "method": "dense parameter tables",
            "arc_table": self._TABLE,
            "clearance_scan": "2048x4096 normal-plane crossings, margin 0.995",
            "distortion_pairs": self._PAIRS,
            "distortion_margin": 1.02,
        }

    def betti(self) -> tuple[int, int]:
        return (1, 1)

    def is_closed_curve(self) -> bool:
        return True

    def to_spec_json(self) -> dict:
        return {"kind": "trefoil", "params": {"scale": self.scale}}


class EmbeddedGraph(Model):
    """Straight-segment graph embedded in Euclidean space.

    Arc-length coordinates run over the edges in declaration order; the
    geodesic metric is shortest-path length along the segments.
    """

    kind = "embedded_graph"

    def __init__(self, vertices, edges):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2:
            raise ValueError("vertices must be a (V, dim) array")
        self.edges = [(int(a), int(b)) for a, b in edges]
        v = self.vertices.shape[0]
        for a, b in self.edges:
            if not (0 <= a < v and 0 <= b < v) or a == b:
                raise ValueError(f"bad edge ({a}, {b})")
        if len(set(tuple(sorted(e)) for e in self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")
        self._elens = np.array(
            [np.linalg.norm(self.vertices[b] - self.vertices[a]) for a, b in self.edges]
        )
        if np.any(self._elens <= 0):
            raise ValueError("zero-length edge")
        self._starts = np.concatenate([[0.0], np.cumsum(self._elens)])

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def length(self) -> float:
        return float(self._starts[-1])

    def _locate(self, t: float) -> tuple[int, float]:
        t = float(t) % self.length
        k = int(np.searchsorted(self._starts, t, side="right")) - 1
        k = min(max(k, 0), len(self.edges) - 1)
        return k, t - self._starts[k]

    def point_at(self, t: float) -> np.ndarray:
        k, off = self._locate(t)
        a, b = self.edges[k]
        frac = off / self._elens[k]
        return (1.0 - frac) * self.vertices[a] + frac * self.vertices[b]

    def tangent_at(self, t: float) -> np.ndarray:
        k, _ = self._locate(t)
        a, b = self.edges[k]
        return (self.vertices[b] - self.vertices[a]) / self._elens[k]

    def project(self, x: np.ndarray) -> ProjectionResult:
        x = np.asarray(x, dtype=float)
        best = []
        for k, (a, b) in enumerate(self.edges):
            pa, pb = self.vertices[a], self.vertices[b]
            seg = pb - pa
            tt = float(np.dot(x - pa, seg) / np.dot(seg, seg))
            tt = min(max(tt, 0.0), 1.0)
            q = pa + tt * seg
            best.append((float(np.linalg.norm(x - q)), k, tt, q))
        best.sort(key=lambda item: (item[0], item[1]))
        d0, k0, t0, q0 = best[0]
        tol = 1e-9 * max(1.0, self.length)
        for d, k, tt, q in best[1:]:
            if d > d0 + tol:
                break
            if np.linalg.norm(q - q0) > 1e-6 * max(1.0, self.length):
                raise AmbiguousProjectionError(
                    "point is equidistant from two separated strands of the graph"
                )
        return ProjectionResult(q0, float(self._starts[k0] + t0 * self._elens[k0]), d0)

    @cached_property
    def _vertex_dist(self) -> np.ndarray:
        v = self.vertices.shape[0]
        rows, cols, data = [], [], []
        for (a, b), w in zip(self.edges, self._elens):
            rows += [a, b]
            cols += [b, a]
            data += [w, w]
        graph = csr_matrix((data, (rows, cols)), shape=(v, v))
        return dijkstra(graph, directed=False)

    def geodesic_param_distance(self, t1, t2):
        t1 = np.atleast_1d(np.asarray(t1, dtype=float))
        t2 = np.atleast_1d(np.asarray(t2, dtype=float))
        shape = np.broadcast_shapes(t1.shape, t2.shape)
        t1 = np.broadcast_to(t1, shape).ravel()
        t2 = np.broadcast_to(t2, shape).ravel()
        k1, o1 = self._locate_vec(t1)
        k2, o2 = self._locate_vec(t2)
        dv = self._vertex_dist
        e = np.array(self.edges)
        a1, b1 = e[k1, 0], e[k1, 1]
        a2, b2 = e[k2, 0], e[k2, 1]
        l1 = self._elens[k1]
        l2 = self._elens[k2]
        cand = np.minimum.reduce(
            [
                o1 + dv[a1, a2] + o2,
                o1 + dv[a1, b2] + (l2 - o2),
                (l1 - o1) + dv[b1, a2] + o2,
                (l1 - o1) + dv[b1, b2] + (l2 - o2),
            ]
        )
        same = k1 == k2
        cand[same] = np.minimum(cand[same], np.abs(o1[same] - o2[same]))
        return cand.reshape(shape)

    def _locate_vec(self, t):
        t = np.asarray(t, dtype=float) % self.length
        k = np.searchsorted(self._starts, t, side="right") - 1
        k = np.clip(k, 0, len(self.edges) - 1)
        return k, t - self._starts[k]

    def _adjacent(self, i: int, j: int) -> bool:
        return bool(set(self.edges[i]) & set(self.edges[j]))

    @cached_property
    def normal_clearance(self) -> float:
        """Smallest gap between segments that do not share a vertex."""
        best = math.inf
        for i in range(len(self.edges)):
            for j in range(i + 1, len(self.edges)):
                if self._adjacent(i, j):
                    continue
                best = min(best, self._segment_gap(i, j))
        return best

    def _segment_gap(self, i: int, j: int) -> float:
        a0, a1 = (self.vertices[v] for v in self.edges[i])
        b0, b1 = (self.vertices[v] for v in self.edges[j])
        ts = np.linspace(0.0, 1.0, 33)
        pa = a0[None, :] + ts[:, None] * (a1 - a0)[None, :]
        pb = b0[None, :] + ts[:, None] * (b1 - b0)[None, :]
        d = cdist(pa, pb)
        return float(d.min())

    @cached_property
    def _girth(self) -> float:
        v = self.vertices.shape[0]
        best = math.inf
        for skip, ((a, b), w) in enumerate(zip(self.edges, self._elens)):
            rows, cols, data = [], [], []
            for k, ((x, y), wk) in enumerate(zip(self.edges, self._elens)):
                if k == skip:
                    continue
                rows += [x, y]
                cols += [y, x]
                data += [wk, wk]
            if not rows:
                continue
            graph = csr_matrix((data, (rows, cols)), shape=(v, v))
            d = dijkstra(graph, directed=False, indices=a)
            if np.isfinite(d[b]):
                best = min(best, float(d[b]) + float(w))
        return best

    @property
    def homotopy_radius(self) -> float:
        # below half the shortest cycle, shortest paths are unique
        return self._girth / 2.0

    @property
    def tube_radius(self) -> float:
        return self.normal_clearance / 2.0 * 0.95

    @cached_property
    def _pair_tables(self):
        target = max(4, int(round(600 / max(1, len(self.edges)))))
        params = []
        for k in range(len(self.edges)):
            m = max(2, int(round(self._elens[k] / self.length * 600)))
            offs = np.linspace(0.0, self._elens[k], m)
            params.append(self._starts[k] + offs)
        params = np.concatenate(params) % self.length
        pts = np.stack([self.point_at(t) for t in params])
        chord = cdist(pts, pts)
        geo = self.geodesic_param_distance(params[:, None], params[None, :])
        return chord, np.asarray(geo)

    @property
    def max_chord_bound(self) -> float:
        chord, _ = self._pair_tables
        return float(chord.max()) * 0.999

    def distortion(self, chord_bound: float) -> float:
        if not 0.0 < chord_bound <= self.max_chord_bound:
            raise ValueError(f"chord bound out of range (0, {self.max_chord_bound}]")
        chord, geo = self._pair_tables
        mask = (chord > 1e-12 * max(1.0, self.length)) & (chord < chord_bound)
        if not np.any(mask):
            return 1.0
        vals = geo[mask] / chord[mask]
        if not np.all(np.isfinite(vals)):
            return math.inf
        return float(np.max(vals)) * 1.02

    def constants_provenance(self) -> dict:
        return {
            "method": "segment tables",
            "clearance": "pairwise gap of non-adjacent segments, 33-point grids",
            "homotopy_radius": "half girth",
            "distortion_pairs": "~600 arc samples, margin 1.02",
        }

    def betti(self) -> tuple[int, int]:
        v = self.vertices.shape[0]
        parent = list(range(v))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        comps = len({find(i) for i in range(v)})
        return (comps, len(self.edges) - v + comps)

    def to_spec_json(self) -> dict:
        return {
            "kind": "embedded_graph",
            "params": {
                "vertices": [[float(v) for v in row] for row in self.vertices],
                "edges": [[a, b] for a, b in self.edges],
            },
        }


def theta_graph(segments_per_arc: int = 16) -> EmbeddedGraph:
    """Two junction points joined by three arcs: a straight bar and two
    polyline semicircles.  First homology has rank 2."""
    k = int(segments_per_arc)
    if k < 2:
        raise ValueError("need at least 2 segments per arc")
    verts = [(-1.0, 0.0), (1.0, 0.0)]
    edges = []
    upper = []
    for j in range(1, k):
        theta = math.pi * (1.0 - j / k)
        upper.append((math.cos(theta), math.sin(theta)))
    lower = [(x, -y) for x, y in upper]
    idx_upper = []
    for p in upper:
        idx_upper.append(len(verts))
        verts.append(p)
    idx_lower = []
    for p in lower:
        idx_lower.append(len(verts))
        verts.append(p)
    chain_u = [0] + idx_upper + [1]
    chain_l = [0] + idx_lower + [1]
    for a, b in zip(chain_u[:-1], chain_u[1:]):
        edges.append((a, b))
    for a, b in zip(chain_l[:-1], chain_l[1:]):
        edges.append((a, b))
    edges.append((0, 1))
    return EmbeddedGraph(np.array(verts), edges)


def model_from_json(obj: dict) -> Model:
    kind = obj.get("kind")
    params = obj.get("params", {})
    if kind == "circle":
        return Circle(
            radius=params.get("radius", 1.0),
            center=params.get("center"),
            dim=params.get("dim", 2),
        )
    if kind == "trefoil":
        return Trefoil(scale=params.get("scale", 1.0))
    if kind == "embedded_graph":
        return EmbeddedGraph(params["vertices"], params["edges"])
    if kind == "theta":
        return theta_graph(params.get("segments_per_arc", 16))
    raise ValueError(f"unknown model kind {kind!r}")


def load_model(path: str) -> Model:
    with open(path) as fh:
        return model_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SamplerSpec:
    """How to draw points from a model: count, tube noise, seed, scheme."""

    model: Model
    n: int
    tau: float = 0.0
    seed: int = 0
    scheme: str = "stratified"

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError("sample count must be positive")
        if self.tau < 0:
            raise ValueError("noise amplitude must be nonnegative")
        if self.scheme not in ("stratified", "uniform-arc"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.tau > 0 and self.tau >= self.model.tube_radius:
            raise ValueError(
                f"noise amplitude {self.tau} exceeds the model tube radius "
                f"{self.model.tube_radius}; projections would be unreliable"
            )


def _normal_basis(tangent: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of a unit vector."""
    t = tangent / np.linalg.norm(tangent)
    _, _, vt = np.linalg.svd(t[None, :])
    return vt[1:]


def _ball_offset(rng: np.random.Generator, k: int, radius: float) -> np.ndarray:
    g = rng.standard_normal(k)
    u = rng.uniform()
    norm = np.linalg.norm(g)
    if norm < 1e-12:
        return np.zeros(k)
    return radius * (u ** (1.0 / k)) * g / norm


def sample(spec: SamplerSpec) -> PointCloud:
    """Draw points from a model, with optional uniform noise in the normal
    disk of radius tau.  Deterministic for a fixed spec."""
    model, n = spec.model, spec.n
    rng = np.random.default_rng(spec.seed)
    if spec.scheme == "stratified":
        params = np.arange(n) * (model.length / n)
    else:
        params = rng.uniform(0.0, model.length, size=n)
    pts = np.zeros((n, model.dim))
    for i, t in enumerate(params):
        p = model.point_at(t)
        if spec.tau > 0:
            basis = _normal_basis(model.tangent_at(t))
            offset = _ball_offset(rng, basis.shape[0], spec.tau)
            p = p + offset @ basis
        pts[i] = p
    return PointCloud(pts)


def project(model: Model, x) -> np.ndarray:
    """Nearest model point; raises AmbiguousProjectionError on the medial axis."""
    return model.project(np.asarray(x, dtype=float)).point


def constants(model: Model, chord_bound: float) -> ModelConstants:
    """Bundle the model's regularity constants at one chord bound."""
    return ModelConstants(
        normal_clearance=model.normal_clearance,
        homotopy_radius=model.homotopy_radius,
        tube_radius=model.tube_radius,
        chord_bound=float(chord_bound),
        distortion=model.distortion(chord_bound),
        provenance=model.constants_provenance(),
    )


# ---------------------------------------------------------------------------
# scale conditions


@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    rhs: float
    holds: bool
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "holds": bool(self.holds),
            "detail": self.detail,
        }


@dataclass
class ConditionReport:
    model_kind: str
    beta: float
    tau: float
    zeta: float | None
    conditions: list[Condition] = field(default_factory=list)

    def condition(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def all_hold(self, names=None) -> bool:
        if names is None:
            return all(c.holds for c in self.conditions)
        return all(self.condition(name).holds for name in names)

    def failing(self) -> list[str]:
        return [c.name for c in self.conditions if not c.holds]

    def to_json_dict(self) -> dict:
        return {
            "model": self.model_kind,
            "beta": float(self.beta),
            "tau": float(self.tau),
            "zeta": None if self.zeta is None else float(self.zeta),
            "conditions": [c.to_json_dict() for c in self.conditions],
        }


def _window_pair(model: Model, needed: float, chord_bound: float | None):
    """Pick a chord window accommodating ``needed`` and its distortion bound.

    The distortion constant is valid for every window below the model cap,
    so when the caller does not pin one we take the smallest window that
    works, which gives the least distortion.
    """
    if chord_bound is not None:
        ok = needed < chord_bound <= model.max_chord_bound
        xi = model.distortion(chord_bound) if ok else math.inf
        return ok, chord_bound, xi
    if needed >= model.max_chord_bound:
        return False, model.max_chord_bound, math.inf
    window = min(needed * 1.001, model.max_chord_bound)
    return True, window, model.distortion(window)


def check_scale_conditions(
    model: Model,
    beta: float,
    tau: float = 0.0,
    zeta: float | None = None,
    chord_bound: float | None = None,
) -> ConditionReport:
    """Evaluate every named scale hypothesis at (beta, tau[, zeta]).

    Each condition records the two sides of its inequality; callers decide
    which subset is binding for a given experiment.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    report = ConditionReport(model.kind, float(beta), float(tau), zeta)
    disp = model.projection_displacement
    conds = report.conditions

    conds.append(
        Condition(
            "shadow-within-tube",
            beta + tau,
            model.tube_radius,
            beta + tau < model.tube_radius,
            "hulls of sub-beta cells stay inside the projection tube",
        )
    )
    conds.append(
        Condition(
            "normal-clearance",
            3.0 * beta,
            model.normal_clearance,
            3.0 * beta < model.normal_clearance,
            "no foreign strand crosses the normal slice at working scale",
        )
    )

    # coarsening map between scales, noiseless samples
    needed = 2.0 * beta + disp(beta)
    ok, window, xi = _window_pair(model, needed, chord_bound)
    conds.append(
        Condition("coarsening-window", needed, window, ok, f"window={window!r}")
    )
    conds.append(
        Condition(
            "coarsening-homotopy",
            xi * needed if math.isfinite(xi) else math.inf,
            model.homotopy_radius,
            ok and xi * needed < model.homotopy_radius,
            f"distortion={xi!r}",
        )
    )

    # coarsening map between scales, tube-noisy samples
    needed_n = beta + disp(beta) + disp(beta + tau)
    ok_n, window_n, xi_n = _window_pair(model, needed_n, chord_bound)
    conds.append(
        Condition(
            "noisy-coarsening-window", needed_n, window_n, ok_n, f"window={window_n!r}"
        )
    )
    lhs_n = xi_n * (beta + disp(beta)) if math.isfinite(xi_n) else math.inf
    conds.append(
        Condition(
            "noisy-coarsening-homotopy",
            lhs_n,
            model.homotopy_radius,
            ok_n and lhs_n < model.homotopy_radius,
            f"distortion={xi_n!r}",
        )
    )

    # projection from the complex to its shadow
    needed_p = beta + disp(beta)
    ok_p, window_p, xi_p = _window_pair(model, needed_p, chord_bound)
    conds.append(
        Condition(
            "projection-window", needed_p, window_p, ok_p, f"window={window_p!r}"
        )
    )
    lhs_p = beta + xi_p * (beta + disp(beta)) if math.isfinite(xi_p) else math.inf
    conds.append(
        Condition(
            "projection-homotopy",
            lhs_p,
            model.homotopy_radius,
            ok_p and lhs_p < model.homotopy_radius,
            f"distortion={xi_p!r}",
        )
    )

    if zeta is not None:
        conds.append(
            Condition(
                "noise-density-margin",
                tau + zeta,
                beta / 2.0,
                tau + zeta < beta / 2.0,
                "tube noise plus projection density stays under half the scale",
            )
        )
    return report
