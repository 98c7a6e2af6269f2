"""Exact rational predicates over binary-float inputs.

Floats are converted to Fractions exactly (no rounding), so every decision
here is a statement about the actual stored coordinates.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np


def fractionize(row) -> list[Fraction]:
    return [Fraction(float(v)) for v in row]


def feasible_nonneg_eq(rows: list[list[Fraction]], rhs: list[Fraction]) -> bool:
    """Is there x >= 0 with A x = b?  Phase-1 simplex with Bland's rule."""
    m = len(rows)
    if m == 0:
        return True
    n = len(rows[0])
    tab = []
    b = []
    for i in range(m):
        r = list(rows[i])
        bi = rhs[i]
        if bi < 0:
            r = [-v for v in r]
            bi = -bi
        tab.append(r + [Fraction(1) if j == i else Fraction(0) for j in range(m)])
        b.append(bi)
    basis = [n + i for i in range(m)]
    # objective w = obj + sum(cost[j] * x_j) over nonbasic x; the basic
    # artificial columns start with reduced cost zero
    cost = [Fraction(0)] * (n + m)
    obj = Fraction(0)
    for i in range(m):
        for j in range(n):
            cost[j] -= tab[i][j]
        obj += b[i]
    while True:
        enter = -1
        for j in range(n + m):  # Bland: smallest index with negative cost
            if cost[j] < 0:
                enter = j
                break
        if enter < 0:
            return obj == 0
        leave = -1
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = b[i] / tab[i][enter]
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            # minimization of a sum of nonnegative variables cannot be
            # unbounded; defensive guard
            raise ArithmeticError("phase-1 simplex reported an unbounded column")
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        b[leave] = b[leave] / piv
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [v - f * w for v, w in zip(tab[i], tab[leave])]
                b[i] = b[i] - f * b[leave]
        f = cost[enter]
        if f != 0:
            cost = [v - f * w for v, w in zip(cost, tab[leave])]
            obj = obj + f * b[leave]
        basis[leave] = enter


def hulls_common_point(cells: list[np.ndarray]) -> bool:
    """Do the convex hulls of all the given point sets share a point?

    Feasibility of: barycentric weights per cell, each summing to one, with
    all weighted centroids equal coordinate-wise.
    """
    k = len(cells)
    if k == 0:
        raise ValueError("need at least one cell")
    mats = [np.atleast_2d(np.asarray(c, dtype=float)) for c in cells]
    dim = mats[0].shape[1]
    for m in mats:
        if m.shape[1] != dim:
            raise ValueError("cells live in different ambient dimensions")
        if m.shape[0] == 0:
            raise ValueError("empty cell")
    if k == 1:
        return True
    sizes = [m.shape[0] for m in mats]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    frac_cells = [[fractionize(row) for row in m] for m in mats]
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for ci in range(k):
        row = [Fraction(0)] * total
        for t in range(sizes[ci]):
            row[int(offsets[ci]) + t] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))
    for ci in range(1, k):
        for c in range(dim):
            row = [Fraction(0)] * total
            for t in range(sizes[0]):
                row[int(offsets[0]) + t] = frac_cells[0][t][c]
            for t in range(sizes[ci]):
                row[int(offsets[ci]) + t] = -frac_cells[ci][t][c]
            rows.append(row)
            rhs.append(Fraction(0))
    return feasible_nonneg_eq(rows, rhs)


def point_in_hull(point, vertices) -> bool:
    """Is the point a convex combination of the vertices?  Exact."""
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    p = fractionize(np.asarray(point, dtype=float))
    k, dim = verts.shape
    if len(p) != dim:
        raise ValueError("dimension mismatch")
    fr = [fractionize(row) for row in verts]
    rows = [[Fraction(1)] * k]
    rhs = [Fraction(1)]
    for c in range(dim):
        rows.append([fr[t][c] for t in range(k)])
        rhs.append(p[c])
    return feasible_nonneg_eq(rows, rhs)


def segments_intersect(a0, a1, b0, b1) -> bool:
    """Do two closed segments (any ambient dimension) share a point?  Exact."""
    return hulls_common_point([np.array([a0, a1]), np.array([b0, b1])])


def point_on_segment(x, a, b) -> bool:
    return point_in_hull(x, np.array([a, b]))


def convex_hull_2d(points: list[list[Fraction]]) -> list[list[Fraction]]:
    """Monotone chain over exact coordinates; collinear sets give 2 points."""
    pts = sorted({(p[0], p[1]) for p in points})
    if len(pts) <= 2:
        return [list(p) for p in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # everything collinear
        return [list(pts[0]), list(pts[-1])]
    return [list(p) for p in hull]


def point_in_hull_2d(point, vertices) -> bool:
    """Exact 2-d membership via hull edges; independent of the simplex solver."""
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    if verts.shape[1] != 2:
        raise ValueError("point_in_hull_2d needs planar input")
    p = fractionize(np.asarray(point, dtype=float))
    frs = [fractionize(row) for row in verts]
    hull = convex_hull_2d(frs)
    if len(hull) == 1:
        return p[0] == hull[0][0] and p[1] == hull[0][1]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    if len(hull) == 2:
        a, b = hull
        if cross(a, b, p) != 0:
            return False
        dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
        sq = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
        return 0 <= dot <= sq
    for i in range(len(hull)):
        a = hull[i]
        b = hull[(i + 1) % len(hull)]
        if cross(a, b, p) < 0:
            return False
    return True
