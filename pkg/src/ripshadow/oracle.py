"""Brute-force oracles kept deliberately separate from the main pipeline.

These use different algorithms and different pivot orders than the
production code, so a shared bug would have to be introduced twice.
Budgets are hard limits; the oracles are for desk-scale cross-checks.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from . import _exact
from .models import MetricMatrix
from .rips import SimplicialComplex
from .shadow import ConvexCellSystem


class OracleBudgetError(ValueError):
    """Input too large for a brute-force check."""


def brute_rips(metric: MetricMatrix, beta: float, cap: int = 2) -> SimplicialComplex:
    """Every subset up to size cap+1, tested by its full pairwise diameter."""
    n = metric.n
    if n > 20:
        raise OracleBudgetError(f"brute_rips handles at most 20 points, got {n}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    d = metric.d
    simplices: dict[int, list[tuple[int, ...]]] = {0: [(i,) for i in range(n)]}
    for size in range(2, cap + 2):
        group = []
        for s in combinations(range(n), size):
            if all(d[a, b] < beta for a, b in combinations(s, 2)):
                group.append(s)
        if group:
            simplices[size - 1] = group
    return SimplicialComplex(n, cap, simplices)


def _dense_rank_mod2(mat: np.ndarray) -> int:
    """Row-reduction rank with top-down pivot search, columns right to left."""
    a = mat.copy() % 2
    rows, cols = a.shape
    rank = 0
    row = 0
    for col in range(cols - 1, -1, -1):
        pivot = -1
        for r in range(row, rows):
            if a[r, col]:
                pivot = r
                break
        if pivot < 0:
            continue
        a[[row, pivot]] = a[[pivot, row]]
        hits = np.flatnonzero(a[:, col])
        for r in hits:
            if r != row:
                a[r] ^= a[row]
        row += 1
        rank += 1
        if row == rows:
            break
    return rank


def brute_homology(complex_: SimplicialComplex, m: int) -> int:
    """Betti number in one dimension by dense mod-2 Gaussian elimination."""
    total = sum(len(g) for g in complex_.simplices.values())
    if total > 5000:
        raise OracleBudgetError(
            f"brute_homology handles at most 5000 simplices, got {total}"
        )
    if m > complex_.cap - 1:
        raise ValueError(f"dimension {m} not certified at cap {complex_.cap}")

    def boundary_matrix(k: int) -> np.ndarray:
        rows = complex_.simplices.get(k - 1, [])
        cols = complex_.simplices.get(k, [])
        idx = {s: i for i, s in enumerate(rows)}
        mat = np.zeros((len(rows), len(cols)), dtype=np.uint8)
        for j, s in enumerate(cols):
            for face in combinations(s, k):
                mat[idx[face], j] ^= 1
        return mat

    n_m = len(complex_.simplices.get(m, []))
    rank_in = _dense_rank_mod2(boundary_matrix(m)) if m > 0 else 0
    rank_out = _dense_rank_mod2(boundary_matrix(m + 1)) if m + 1 <= complex_.cap else 0
    return n_m - rank_in - rank_out


def brute_hull_intersection(
    system: ConvexCellSystem, ids, resolution: int = 16
) -> bool:
    """Grid search for a common point of the named cell hulls.

    True is a certificate (the witness passed an exact membership test in
    every hull); False only says the grid found nothing and is advisory.
    """
    ids = sorted(set(int(i) for i in ids))
    dim = system.coords.dim
    if dim > 3:
        raise OracleBudgetError("grid oracle handles ambient dimension <= 3")
    if not ids:
        raise ValueError("need at least one cell id")
    cells = [system.cell_points(i) for i in ids]
    lo = np.max([c.min(axis=0) for c in cells], axis=0)
    hi = np.min([c.max(axis=0) for c in cells], axis=0)
    if np.any(lo > hi):
        return False
    axes = [np.linspace(lo[k], hi[k], resolution) for k in range(dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    for p in grid:
        ok = True
        for c in cells:
            if np.any(p < c.min(axis=0)) or np.any(p > c.max(axis=0)):
                ok = False
                break
            if dim == 2:
                if not _exact.point_in_hull_2d(p, c):
                    ok = False
                    break
            else:
                if not _exact.point_in_hull(p, c):
                    ok = False
                    break
        if ok:
            return True
    return False
