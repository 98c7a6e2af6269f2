"""Hull covers, their nerves, point membership, and the raster cross-check."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ripshadow.homology import betti
from ripshadow.models import Circle, PointCloud, SamplerSpec, euclidean_metric, sample, theta_graph
from ripshadow.oracle import brute_hull_intersection
from ripshadow.rips import CliqueList, maximal_cliques
from ripshadow.shadow import (
    BarycentricPoint,
    ConvexCellSystem,
    build_nerve,
    hulls_intersect,
    nerve_coarsening_map,
    project_point,
    raster_betti_2d,
    shadow_contains,
)


def _system(points, cells) -> ConvexCellSystem:
    cloud = PointCloud(np.asarray(points, dtype=float))
    return ConvexCellSystem(cloud, CliqueList(cloud.n, tuple(sorted(cells))))


def _circle_system(n: int, beta: float, seed: int = 0, tau: float = 0.0):
    cloud = sample(SamplerSpec(Circle(1.0), n, tau=tau, seed=seed))
    cells = maximal_cliques(euclidean_metric(cloud), beta)
    return ConvexCellSystem(cloud, cells)


def test_hulls_meeting_in_a_single_point_intersect():
    # two triangles sharing exactly the origin
    sys_ = _system(
        [[0.0, 0.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
        [(0, 1, 2), (0, 3, 4)],
    )
    assert hulls_intersect(sys_, (0, 1))


def test_disjoint_hulls_do_not_intersect():
    sys_ = _system(
        [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [4.0, 0.0]],
        [(0, 1), (2, 3)],
    )
    assert not hulls_intersect(sys_, (0, 1))


def test_crossing_segments_intersect_without_shared_vertices():
    sys_ = _system(
        [[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]],
        [(0, 1), (2, 3)],
    )
    assert hulls_intersect(sys_, (0, 1))


def test_nerve_of_three_hulls_in_a_row():
    # middle segment touches both ends; the ends stay apart
    sys_ = _system(
        [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        [(0, 1), (1, 2), (0,)],
    )
    nerve = build_nerve(sys_, cap=2)
    edges = set(nerve.complex.simplices.get(1, []))
    pairs = {tuple(sorted((a, b))) for a, b in edges}
    idx = {cell: i for i, cell in enumerate(sys_.cells.cliques)}
    assert (idx[(0,)], idx[(0, 1)]) in pairs or (idx[(0, 1)], idx[(0,)]) in pairs
    assert (idx[(0, 1)], idx[(1, 2)]) in pairs
    assert (idx[(0,)], idx[(1, 2)]) not in pairs


def test_nerve_against_grid_witness_on_random_cells():
    rng = np.random.default_rng(4)
    for _ in range(10):
        pts = rng.uniform(0.0, 1.0, size=(8, 2))
        cloud = PointCloud(pts)
        cells = tuple(
            tuple(sorted(rng.choice(8, size=3, replace=False).tolist())) for _ in range(4)
        )
        sys_ = ConvexCellSystem(cloud, CliqueList(8, tuple(sorted(set(cells)))))
        for i in range(len(sys_)):
            for j in range(i + 1, len(sys_)):
                exact = hulls_intersect(sys_, (i, j))
                if brute_hull_intersection(sys_, (i, j), resolution=24):
                    # a grid witness is a certificate the exact test must honor
                    assert exact


def test_shadow_membership_on_a_square_cell():
    sys_ = _system([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], [(0, 1, 2, 3)])
    assert shadow_contains(sys_, [0.5, 0.5])
    assert shadow_contains(sys_, [1.0, 1.0])
    assert not shadow_contains(sys_, [1.0 + 1e-9, 1.0])


def test_project_point_evaluates_linear_extension():
    sys_ = _circle_system(12, 0.7)
    nerve = build_nerve(sys_, cap=2)
    edge = nerve.complex.simplices[1][0]
    mid = project_point(nerve.complex, sys_.coords, BarycentricPoint(edge, (0.5, 0.5)))
    # nerve vertices stand for cells; the evaluation uses the vertex cloud rows
    expect = 0.5 * (sys_.coords.points[edge[0]] + sys_.coords.points[edge[1]])
    assert np.allclose(mid, expect)


def test_barycentric_point_validation():
    with pytest.raises(ValueError):
        BarycentricPoint((0, 1), (0.7, 0.7))
    with pytest.raises(ValueError):
        BarycentricPoint((0, 1), (-0.1, 1.1))
    with pytest.raises(ValueError):
        BarycentricPoint((0,), (0.5, 0.5))


def test_circle_nerve_carries_the_loop():
    sys_ = _circle_system(40, 0.4)
    nerve = build_nerve(sys_, cap=2)
    assert betti(nerve.complex, 1) == [1, 1]


def test_raster_agrees_with_nerve_on_circle_and_theta():
    sys_ = _circle_system(40, 0.4)
    assert tuple(raster_betti_2d(sys_)) == tuple(betti(build_nerve(sys_, cap=2).complex, 1))

    g = theta_graph()
    cloud = sample(SamplerSpec(g, 200, seed=1))
    cells = maximal_cliques(euclidean_metric(cloud), 0.06)
    gsys = ConvexCellSystem(cloud, cells)
    nerve_b = tuple(betti(build_nerve(gsys, cap=2).complex, 1))
    assert nerve_b == (1, 2)
    assert tuple(raster_betti_2d(gsys)) == nerve_b


def test_coarsening_map_lands_fine_cells_in_coarse_cells():
    fine = _circle_system(30, 0.3)
    coarse = _circle_system(30, 0.5)
    fine_nerve = build_nerve(fine, cap=2)
    coarse_nerve = build_nerve(coarse, cap=2)
    f = nerve_coarsening_map(fine, fine_nerve, coarse, coarse_nerve)
    coarse_sets = [set(c) for c in coarse.cells.cliques]
    for i, cell in enumerate(fine.cells.cliques):
        assert set(cell) <= coarse_sets[f.vertex_map[i]]


def test_coarsening_map_rejects_unnested_systems():
    fine = _circle_system(30, 0.5)
    coarse = _circle_system(30, 0.3)
    with pytest.raises(ValueError):
        nerve_coarsening_map(
            fine, build_nerve(fine, cap=2), coarse, build_nerve(coarse, cap=2)
        )
