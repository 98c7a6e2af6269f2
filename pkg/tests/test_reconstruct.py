"""Curve rebuilding: ordering, simplicity, the check battery, the arc lemma."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ripshadow.models import Circle, PointCloud, SamplerSpec, sample
from ripshadow.reconstruct import (
    LemmaCheck,
    Polyline,
    build_curve_K,
    check_intermediate_lemma,
    order_by_projection,
    polyline_is_simple,
)


def _circle_points(angles) -> PointCloud:
    arr = np.array([[math.cos(a), math.sin(a)] for a in angles])
    return PointCloud(arr)


# ---------------------------------------------------------------------------
# polylines


def test_polyline_rejects_degenerate_input():
    with pytest.raises(ValueError):
        Polyline(np.array([[0.0, 0.0]]))
    with pytest.raises(ValueError):
        Polyline(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))
    # closing edge may not collapse either
    with pytest.raises(ValueError):
        Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), closed=True)


def test_polyline_edges_wrap_when_closed():
    square = Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    assert len(list(square.edges())) == 4
    assert np.allclose(square.edge_lengths(), 1.0)
    open_path = Polyline(square.points, closed=False)
    assert len(list(open_path.edges())) == 3


def test_square_is_simple_and_bowtie_is_not():
    square = Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    assert polyline_is_simple(square)
    bowtie = Polyline(np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]))
    assert not polyline_is_simple(bowtie)


def test_fold_back_at_a_shared_vertex_is_not_simple():
    path = Polyline(np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]]), closed=False)
    assert not polyline_is_simple(path)


def test_touching_non_adjacent_edges_are_not_simple():
    # the closing edge passes through an earlier vertex
    curve = Polyline(
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 0.0], [0.0, 1.0]]),
        closed=True,
    )
    assert not polyline_is_simple(curve)


def test_polyline_csv_lists_vertices_in_order(tmp_path):
    square = Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    path = tmp_path / "curve.csv"
    square.to_csv(str(path))
    rows = [r for r in path.read_text().splitlines() if r and not r.startswith("x0")]
    assert len(rows) == 4
    assert rows[0].split(",")[0] == "0.0"


# ---------------------------------------------------------------------------
# ordering by projection


def test_order_recovers_the_angular_walk():
    c = Circle(1.0)
    base = sample(SamplerSpec(c, 12, seed=0))
    perm = np.random.default_rng(3).permutation(12)
    shuffled = PointCloud(base.points[perm])
    order, params = order_by_projection(c, shuffled)
    assert np.allclose(shuffled.points[order], base.points)
    assert np.all(np.diff(params) > 0)


def test_order_collapses_samples_over_one_fiber():
    c = Circle(1.0)
    # two samples over the same parameter at different heights
    pts = np.array([[1.1, 0.0], [0.95, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    order, _ = order_by_projection(c, PointCloud(pts))
    assert len(order) == 4
    # the representative hugs the model more closely
    assert 1 in order and 0 not in order


def test_order_merges_the_seam_fiber():
    c = Circle(1.0)
    pts = np.array(
        [
            [1.0, 0.0],
            [math.cos(-1e-12), math.sin(-1e-12)],  # same fiber across the seam
            [0.0, 1.0],
            [-1.0, 0.0],
        ]
    )
    order, _ = order_by_projection(c, PointCloud(pts))
    assert len(order) == 3


def test_order_refuses_ambiguous_samples():
    from ripshadow.models import AmbiguousProjectionError

    with pytest.raises(AmbiguousProjectionError):
        order_by_projection(Circle(1.0), PointCloud(np.array([[0.0, 0.0], [1.0, 0.0]])))


# ---------------------------------------------------------------------------
# the full battery


def test_noiseless_reconstruction_returns_the_samples_in_order():
    c = Circle(1.0)
    cloud = sample(SamplerSpec(c, 40, seed=0))
    result = build_curve_K(c, cloud, 0.2, 0.0)
    assert result.verdict == "ok"
    assert result.order == list(range(40))
    assert np.array_equal(result.curve.points, cloud.points)
    assert result.checks["simple"] and result.checks["closed"]
    assert result.checks["edges_under_beta"] and result.checks["in_shadow"]


def test_noisy_reconstruction_passes_all_checks():
    c = Circle(1.0)
    cloud = sample(SamplerSpec(c, 126, tau=0.02, seed=0))
    result = build_curve_K(c, cloud, 0.2, 0.02, zeta=0.05)
    assert result.verdict == "ok"
    assert result.checks["simple"] is True
    assert result.checks["closed"] is True
    assert result.checks["edges_under_beta"] is True
    assert result.checks["in_shadow"] is True
    assert result.checks["max_edge"] < 0.2
    # noise amplitude plus density plus chord sag
    assert result.checks["hausdorff_to_model"] <= 0.02 + 0.05 + 0.2**2 / 8.0


def test_reconstruction_gates_when_noise_crowds_the_scale():
    c = Circle(1.0)
    cloud = sample(SamplerSpec(c, 126, tau=0.02, seed=0))
    result = build_curve_K(c, cloud, 0.1, 0.02, zeta=0.05)
    assert result.verdict == "out-of-regime"
    assert result.curve is None
    assert result.checks == {}
    assert any("noise-density-margin" in note for note in result.annotations)


def test_measured_density_substitutes_for_a_missing_claim():
    c = Circle(1.0)
    cloud = sample(SamplerSpec(c, 80, seed=1))
    result = build_curve_K(c, cloud, 0.3, 0.0, zeta=None)
    assert result.verdict == "ok"
    cond = result.conditions.condition("projection-density")
    assert cond.holds
    assert cond.lhs == cond.rhs  # measured value plays both roles


def test_result_json_round_trip_is_deterministic(tmp_path):
    c = Circle(1.0)
    cloud = sample(SamplerSpec(c, 60, tau=0.01, seed=4))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    build_curve_K(c, cloud, 0.25, 0.01, zeta=0.06).save(str(a))
    build_curve_K(c, cloud, 0.25, 0.01, zeta=0.06).save(str(b))
    assert a.read_bytes() == b.read_bytes()
    obj = json.loads(a.read_text())
    assert set(obj) == {
        "curve",
        "checks",
        "conditions",
        "order",
        "params",
        "verdict",
        "annotations",
    }
    assert obj["curve"]["closed"] is True


# ---------------------------------------------------------------------------
# hull projections stay on the spanned arc


def test_lemma_holds_on_a_short_circle_chord():
    c = Circle(1.0)
    pts = _circle_points([0.0, 0.3]).points
    check = check_intermediate_lemma(c, pts, 0.4)
    assert bool(check) is True
    assert check.witness is None


def test_lemma_check_rejects_scales_outside_the_regime():
    c = Circle(1.0)
    pts = _circle_points([0.0, 0.3]).points
    with pytest.raises(ValueError):
        check_intermediate_lemma(c, pts, 0.7)  # 3 * 0.7 exceeds the clearance


def test_lemma_check_rejects_points_off_the_model():
    c = Circle(1.0)
    pts = np.array([[1.0, 0.0], [1.5, 0.0]])
    with pytest.raises(ValueError):
        check_intermediate_lemma(c, pts, 0.4)


def test_lemma_check_rejects_spread_out_points():
    c = Circle(1.0)
    pts = _circle_points([0.0, math.pi / 2]).points  # geodesic distance pi/2 > beta
    with pytest.raises(ValueError):
        check_intermediate_lemma(c, pts, 0.4)


def test_lemma_with_one_point_is_trivially_true():
    c = Circle(1.0)
    assert bool(check_intermediate_lemma(c, np.array([[1.0, 0.0]]), 0.4))


def test_lemma_check_reports_a_witness_type():
    assert bool(LemmaCheck(True)) is True
    bad = LemmaCheck(False, witness=(0.1, 0.2, 0.3))
    assert not bad
    assert bad.witness == (0.1, 0.2, 0.3)
