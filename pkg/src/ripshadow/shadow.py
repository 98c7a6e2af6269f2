"""Euclidean shadows of complexes, realized as nerves of convex cells.

The shadow of a complex with embedded vertices is the union of the convex
hulls of its simplices, which equals the union over maximal cells.  Those
hulls form a finite closed convex cover of the shadow, so the nerve of the
cover carries the shadow's homotopy type.  Intersection decisions are made
by exact rational feasibility; floating point only prunes candidates.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _exact
from .models import PointCloud
from .rips import CliqueList, SimplicialComplex, SimplicialMap


class RasterInconclusiveError(RuntimeError):
    """Raised when raster Betti numbers fail to stabilize by the finest grid."""


@dataclass(frozen=True)
class ConvexCellSystem:
    """Embedded vertex coordinates plus the index sets of the convex cells."""

    coords: PointCloud
    cells: CliqueList

    def __post_init__(self) -> None:
        if self.cells.n != self.coords.n:
            raise ValueError("cell system and coordinates disagree on vertex count")
        if any(len(c) == 0 for c in self.cells.cliques):
            raise ValueError("empty cell")

    def cell_points(self, i: int) -> np.ndarray:
        return self.coords.points[list(self.cells.cliques[i])]

    def __len__(self) -> int:
        return len(self.cells)


@dataclass
class NerveComplex:
    """Nerve of a convex cell system; vertex i stands for cell i."""

    complex: SimplicialComplex
    cells: CliqueList

    def to_json_dict(self) -> dict:
        out = self.complex.to_json_dict()
        out["cells"] = [list(c) for c in self.cells.cliques]
        return out

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


@dataclass(frozen=True)
class BarycentricPoint:
    """A point of a simplex given by nonnegative weights summing to one."""

    carrier: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.carrier) != len(self.weights):
            raise ValueError("carrier and weights must have equal length")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")


def _bboxes(system: ConvexCellSystem) -> tuple[np.ndarray, np.ndarray]:
    los = np.empty((len(system), system.coords.dim))
    his = np.empty((len(system), system.coords.dim))
    for i in range(len(system)):
        pts = system.cell_points(i)
        los[i] = pts.min(axis=0)
        his[i] = pts.max(axis=0)
    return los, his


def hulls_intersect(system: ConvexCellSystem, ids) -> bool:
    """Do the convex hulls of the named cells share a common point?

    Exact rational feasibility; a shared vertex short-circuits to True and
    disjoint bounding boxes short-circuit to False, both of which are exact.
    """
    ids = sorted(set(int(i) for i in ids))
    if not ids:
        raise ValueError("need at least one cell id")
    for i in ids:
        if not 0 <= i < len(system):
            raise ValueError(f"cell id {i} out of range")
    if len(ids) == 1:
        return True
    common = set(system.cells.cliques[ids[0]])
    for i in ids[1:]:
        common &= set(system.cells.cliques[i])
    if common:
        return True
    los, his = _bboxes(system)
    lo = los[ids].max(axis=0)
    hi = his[ids].min(axis=0)
    if np.any(lo > hi):
        return False
    return _exact.hulls_common_point([system.cell_points(i) for i in ids])


def build_nerve(system: ConvexCellSystem, cap: int = 2) -> NerveComplex:
    """Nerve of the cell cover up to dimension cap.

    Pairwise checks are pruned by bounding boxes; higher tuples must pass
    all pairwise checks and a joint bounding-box test before the exact
    joint feasibility decision runs.
    """
    k = len(system)
    los, his = _bboxes(system)
    vertex_sets = [set(c) for c in system.cells.cliques]

    def joint_test(ids: tuple[int, ...]) -> bool:
        common = vertex_sets[ids[0]]
        for i in ids[1:]:
            common = common & vertex_sets[i]
        if common:
            return True
        lo = los[list(ids)].max(axis=0)
        hi = his[list(ids)].min(axis=0)
        if np.any(lo > hi):
            return False
        return _exact.hulls_common_point([system.cell_points(i) for i in ids])

    pair = [[False] * k for _ in range(k)]
    simplices: dict[int, list[tuple[int, ...]]] = {0: [(i,) for i in range(k)]}
    if cap >= 1:
        edges = []
        for i in range(k):
            for j in range(i + 1, k):
                if np.any(np.maximum(los[i], los[j]) > np.minimum(his[i], his[j])):
                    continue
                if joint_test((i, j)):
                    pair[i][j] = pair[j][i] = True
                    edges.append((i, j))
        if edges:
            simplices[1] = edges
    frontier = simplices.get(1, [])
    dim = 1
    while dim < cap and frontier:
        nxt = []
        for s in frontier:
            last = s[-1]
            for j in range(last + 1, k):
                if not all(pair[v][j] for v in s):
                    continue
                if joint_test(s + (j,)):
                    nxt.append(s + (j,))
        if nxt:
            simplices[dim + 1] = sorted(nxt)
        frontier = nxt
        dim += 1
    nerve = SimplicialComplex(k, cap, simplices)
    nerve.validate_face_closed()
    return NerveComplex(nerve, system.cells)


def nerve_coarsening_map(
    fine_system: ConvexCellSystem,
    fine_nerve: NerveComplex,
    coarse_system: ConvexCellSystem,
    coarse_nerve: NerveComplex,
) -> SimplicialMap:
    """Map each fine cell to the first coarse cell containing its vertex set.

    When the fine cells come from a smaller scale over the same points,
    every fine cell is contained in some coarse cell, and cells with a
    common hull point keep one after coarsening, so the assignment is
    simplicial (verified on construction).
    """
    if fine_system.coords.n != coarse_system.coords.n:
        raise ValueError("cell systems must share their vertex cloud")
    coarse_sets = [set(c) for c in coarse_system.cells.cliques]
    assignment = []
    for cell in fine_system.cells.cliques:
        s = set(cell)
        for j, cs in enumerate(coarse_sets):
            if s <= cs:
                assignment.append(j)
                break
        else:
            raise ValueError(
                f"fine cell {cell} is not contained in any coarse cell; "
                "the systems are not nested"
            )
    return SimplicialMap(fine_nerve.complex, coarse_nerve.complex, tuple(assignment))


def shadow_contains(system: ConvexCellSystem, x) -> bool:
    """Exact membership of a point in the union of the cell hulls."""
    x = np.asarray(x, dtype=float)
    los, his = _bboxes(system)
    for i in range(len(system)):
        if np.any(x < los[i]) or np.any(x > his[i]):
            continue
        if _exact.point_in_hull(x, system.cell_points(i)):
            return True
    return False


def project_point(
    complex_: SimplicialComplex, coords: PointCloud, point: BarycentricPoint
) -> np.ndarray:
    """Evaluate the linear extension of the vertex embedding at a point."""
    if not complex_.has_simplex(point.carrier):
        raise ValueError(f"carrier {point.carrier} is not a simplex")
    pts = coords.points[list(point.carrier)]
    return np.asarray(point.weights, dtype=float) @ pts


def _raster_once(system: ConvexCellSystem, resolution: int) -> tuple[int, int]:
    pts = system.coords.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = float(max(hi - lo))
    if extent == 0.0:
        return (1, 0)
    h = extent / resolution
    lo = lo - h
    nx = int(math.ceil((hi[0] - lo[0]) / h)) + 2
    ny = int(math.ceil((hi[1] - lo[1]) / h)) + 2
    mask = np.zeros((ny, nx), dtype=bool)
    pad = 0.71 * h
    xs = lo[0] + (np.arange(nx) + 0.5) * h
    ys = lo[1] + (np.arange(ny) + 0.5) * h
    for i in range(len(system)):
        cpts = system.cell_points(i)
        cl = cpts.min(axis=0) - pad
        ch = cpts.max(axis=0) + pad
        ix = np.flatnonzero((xs >= cl[0]) & (xs <= ch[0]))
        iy = np.flatnonzero((ys >= cl[1]) & (ys <= ch[1]))
        if ix.size == 0 or iy.size == 0:
            continue
        gx, gy = np.meshgrid(xs[ix], ys[iy])
        plist = np.stack([gx.ravel(), gy.ravel()], axis=1)
        hull = _float_hull(cpts)
        near = _near_hull(plist, hull, pad)
        sub = near.reshape(gy.shape)
        mask[np.ix_(iy, ix)] |= sub
    fg_structure = np.ones((3, 3), dtype=bool)
    _, b0 = ndimage.label(mask, structure=fg_structure)
    bg_labels, nbg = ndimage.label(~mask)
    border = set(bg_labels[0, :]) | set(bg_labels[-1, :]) | set(bg_labels[:, 0]) | set(
        bg_labels[:, -1]
    )
    border.discard(0)
    b1 = nbg - len(border)
    return (int(b0), int(b1))


def _float_hull(points: np.ndarray) -> np.ndarray:
    """Counterclockwise planar hull; collinear inputs give a 2-point chain."""
    pts = np.unique(points, axis=0)
    if pts.shape[0] <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if hull.shape[0] < 3:
        return np.array([pts[0], pts[-1]])
    return hull


def _near_hull(plist: np.ndarray, hull: np.ndarray, pad: float) -> np.ndarray:
    """Which query points are inside the hull or within pad of its boundary."""
    m = hull.shape[0]
    if m == 1:
        return np.linalg.norm(plist - hull[0], axis=1) <= pad
    inside = np.ones(plist.shape[0], dtype=bool)
    near = np.zeros(plist.shape[0], dtype=bool)
    if m == 2:
        inside[:] = False
    edges = [(hull[i], hull[(i + 1) % m]) for i in range(m)] if m >= 3 else [
        (hull[0], hull[1])
    ]
    for a, b in edges:
        d = b - a
        if m >= 3:
            cr = d[0] * (plist[:, 1] - a[1]) - d[1] * (plist[:, 0] - a[0])
            inside &= cr >= 0
        seg2 = float(d @ d)
        t = np.clip(((plist - a) @ d) / seg2, 0.0, 1.0)
        proj = a + t[:, None] * d
        near |= np.linalg.norm(plist - proj, axis=1) <= pad
    return inside | near


def raster_betti_2d(
    system: ConvexCellSystem,
    resolution: int = 64,
    max_resolution: int = 4096,
    debug_pgm: str | None = None,
) -> tuple[int, int]:
    """Grid oracle for the Betti numbers of the union of planar cells.

    The union is drawn with one-pixel strokes, components are counted with
    8-connectivity and holes as bounded background components under
    4-connectivity, and the grid is refined until two consecutive
    resolutions agree.
    """
    if system.coords.dim != 2:
        raise ValueError("raster oracle is planar only")
    res = max(resolution, 8)
    prev: tuple[int, int] | None = None
    while res <= max_resolution:
        cur = _raster_once(system, res)
        if prev is not None and cur == prev:
            if debug_pgm:
                _dump_pgm(system, res, debug_pgm)
            return cur
        prev = cur
        res *= 2
    raise RasterInconclusiveError(
        f"raster Betti numbers failed to stabilize below resolution {max_resolution}"
    )


def _dump_pgm(system: ConvexCellSystem, resolution: int, path: str) -> None:
    pts = system.coords.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = float(max(hi - lo)) or 1.0
    h = extent / resolution
    lo = lo - h
    nx = int(math.ceil((hi[0] - lo[0]) / h)) + 2
    ny = int(math.ceil((hi[1] - lo[1]) / h)) + 2
    mask = np.zeros((ny, nx), dtype=bool)
    xs = lo[0] + (np.arange(nx) + 0.5) * h
    ys = lo[1] + (np.arange(ny) + 0.5) * h
    pad = 0.71 * h
    for i in range(len(system)):
        cpts = system.cell_points(i)
        gx, gy = np.meshgrid(xs, ys)
        plist = np.stack([gx.ravel(), gy.ravel()], axis=1)
        mask |= _near_hull(plist, _float_hull(cpts), pad).reshape(gy.shape)
    with open(path, "wb") as fh:
        fh.write(f"P5 {nx} {ny} 255\n".encode())
        fh.write((np.where(mask[::-1], 0, 255).astype(np.uint8)).tobytes())
