"""Tower experiments: direct and inverse systems, twin metrics, projection."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ripshadow.limits import (
    DirectSystemSpec,
    InverseSystemSpec,
    OutOfRegimeError,
    default_sample_count,
    dense_arc_enumeration,
    measured_density,
    radical_inverse_base2,
    run_direct_system,
    run_inverse_system,
    run_metric_comparability,
    run_projection_check,
    vertex_level_f_map,
)
from ripshadow.models import Circle, PointCloud, SamplerSpec, euclidean_metric, sample
from ripshadow.rips import build_rips


# ---------------------------------------------------------------------------
# enumeration and density helpers


def test_radical_inverse_base2_first_values():
    assert radical_inverse_base2(1) == 0.5
    assert radical_inverse_base2(2) == 0.25
    assert radical_inverse_base2(3) == 0.75
    assert radical_inverse_base2(4) == 0.125


def test_dense_enumeration_prefixes_nest():
    c = Circle(1.0)
    small = dense_arc_enumeration(c, 16, seed=4)
    large = dense_arc_enumeration(c, 64, seed=4)
    assert np.array_equal(large[:16], small)
    assert np.all((large >= 0.0) & (large < c.length))
    # a different seed shifts the whole sequence
    assert not np.array_equal(dense_arc_enumeration(c, 16, seed=5), small)


def test_default_sample_count_follows_the_finest_scale():
    c = Circle(1.0)
    assert default_sample_count(c, 0.2) == math.ceil(2.2 * c.length / 0.2)


def test_measured_density_bounds_the_true_gap_from_above():
    c = Circle(1.0)
    cloud = sample(SamplerSpec(c, 50, seed=0))
    params = np.arange(50) * (c.length / 50)
    density = measured_density(c, params)
    assert density >= c.length / 50 / 2.0  # covering radius of an even grid
    # the reported value includes the grid half-step, so it never understates
    assert density <= c.length / 50 / 2.0 + c.length / 2048.0


# ---------------------------------------------------------------------------
# spec validation


def test_direct_spec_requires_growing_sizes():
    with pytest.raises(ValueError):
        DirectSystemSpec(Circle(1.0), 0.4, (40, 40, 80))
    with pytest.raises(ValueError):
        DirectSystemSpec(Circle(1.0), 0.4, (80, 40))


def test_inverse_spec_requires_decreasing_scales():
    with pytest.raises(ValueError):
        InverseSystemSpec(Circle(1.0), (0.2, 0.5))
    with pytest.raises(ValueError):
        InverseSystemSpec(Circle(1.0), (0.5,))


def test_paired_noise_grid_must_shrink_slower_than_the_scales():
    # each scale step must absorb twice the noise step
    with pytest.raises(ValueError):
        InverseSystemSpec(Circle(1.0), (0.5, 0.48), taus=(0.05, 0.02))
    spec = InverseSystemSpec(Circle(1.0), (0.5, 0.4), taus=(0.05, 0.02))
    assert spec.stage_taus() == (0.05, 0.02)


def test_paired_noise_needs_the_rips_object():
    with pytest.raises(ValueError):
        InverseSystemSpec(
            Circle(1.0), (0.5, 0.4), object_kind="shadow-nerve", taus=(0.05, 0.02)
        )


# ---------------------------------------------------------------------------
# direct systems


def test_direct_system_stabilizes_on_the_circle():
    spec = DirectSystemSpec(Circle(1.0), 0.4, (20, 40, 80), seed=7)
    report = run_direct_system(spec)
    assert report.verdict == "consistent"
    assert report.target_rank == 1
    assert report.stabilized["tower"] == 1
    table = report.towers["tower"].rank_table[1]
    assert table[0][2] == 1


def test_direct_system_below_density_is_inconsistent():
    # at this scale even the largest stage barely connects; ranks never settle
    spec = DirectSystemSpec(Circle(1.0), 0.05, (20, 40, 80, 160), seed=7)
    report = run_direct_system(spec)
    assert report.verdict == "inconsistent"
    assert report.stabilized["tower"] is None
    assert any("plateau" in note for note in report.annotations)


def test_direct_system_gates_on_failed_hypotheses():
    report = run_direct_system(DirectSystemSpec(Circle(1.0), 0.9, (20, 40, 80)))
    assert report.verdict == "out-of-regime"
    assert report.towers == {}
    assert any("normal-clearance" in note for note in report.annotations)


# ---------------------------------------------------------------------------
# inverse systems


def test_inverse_system_rips_object_on_the_circle():
    spec = InverseSystemSpec(Circle(1.0), (0.5, 0.4, 0.3, 0.2), seed=7)
    report = run_inverse_system(spec)
    assert report.verdict == "consistent"
    assert report.target_rank == 1
    assert report.stabilized["tower"] == 1
    # stages run finest first so coarsening maps are honest inclusions
    betas = [st["beta"] for st in report.stages]
    assert betas == sorted(betas)


def test_inverse_system_shadow_nerve_object():
    spec = InverseSystemSpec(
        Circle(1.0), (0.5, 0.4, 0.3, 0.2), object_kind="shadow-nerve", seed=7
    )
    report = run_inverse_system(spec)
    assert report.verdict == "consistent"
    assert report.stabilized["tower"] == 1


def test_inverse_system_with_paired_noise_grid():
    spec = InverseSystemSpec(
        Circle(1.0),
        (0.14, 0.12, 0.10, 0.08),
        tau=0.02,
        n=200,
        taus=(0.02, 0.015, 0.01, 0.005),
        seed=5,
    )
    report = run_inverse_system(spec)
    assert report.verdict == "consistent"
    assert report.stabilized["tower"] == 1
    taus = [st["tau"] for st in report.stages]
    assert taus == sorted(taus)  # finest stage carries the smallest noise


def test_inverse_system_gates_and_suppresses_towers():
    spec = InverseSystemSpec(Circle(1.0), (0.7, 0.6, 0.5, 0.4), seed=7)
    report = run_inverse_system(spec)
    assert report.verdict == "out-of-regime"
    assert report.towers == {}
    assert report.stabilized == {}
    assert any("normal-clearance" in note for note in report.annotations)


def test_inverse_report_json_is_reproducible(tmp_path):
    spec = InverseSystemSpec(Circle(1.0), (0.5, 0.4, 0.3), seed=2)
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    run_inverse_system(spec).save(str(a))
    run_inverse_system(spec).save(str(b))
    assert a.read_bytes() == b.read_bytes()
    obj = json.loads(a.read_text())
    assert obj["kind"] == "inverse-limit"
    assert obj["spec"]["object"] == "rips"


# ---------------------------------------------------------------------------
# twin metrics


def test_metric_comparability_towers_are_bit_identical():
    report = run_metric_comparability(
        Circle(1.0), (0.14, 0.12, 0.10, 0.08), 0.0, 0.15, n=200, seed=1
    )
    assert report.verdict == "consistent"
    assert report.numbers["stagewise_identical"] is True
    assert report.numbers["path_to_chord_ratio_max"] >= 1.0
    assert report.stabilized["euclidean"] == report.stabilized["epsilon-path"] == 1


def test_metric_comparability_requires_scales_below_the_cutoff():
    report = run_metric_comparability(
        Circle(1.0), (0.3, 0.25, 0.2, 0.15), 0.0, 0.25, n=80, seed=1
    )
    assert report.verdict == "out-of-regime"
    assert report.towers == {}
    failing = [
        c.name for rep in report.conditions for c in rep.conditions if not c.holds
    ]
    assert "scales-below-cutoff" in failing


# ---------------------------------------------------------------------------
# projection route


def test_projection_check_composite_has_full_rank():
    report = run_projection_check(Circle(1.0), 0.4, n=60, seed=0)
    assert report.verdict == "consistent"
    assert report.numbers["complex_rank"] == [1, 1]
    assert report.numbers["nerve_rank"] == [1, 1]
    assert report.numbers["composite_rank"] == [1, 1]
    assert report.numbers["subdivision_betti"] == report.numbers["complex_betti"]


def test_projection_check_gates_out_of_regime():
    report = run_projection_check(Circle(1.0), 1.2, n=60, seed=0)
    assert report.verdict == "out-of-regime"
    assert report.towers == {}


# ---------------------------------------------------------------------------
# vertex-level comparison map


def test_vertex_map_on_identical_clouds_is_identity():
    cloud = sample(SamplerSpec(Circle(1.0), 30, seed=3))
    complex_ = build_rips(euclidean_metric(cloud), 0.5, cap=2)
    f = vertex_level_f_map(complex_, cloud, complex_, cloud)
    assert list(f.vertex_map) == list(range(30))


def test_vertex_map_to_a_sparser_sample_stays_simplicial():
    dense = sample(SamplerSpec(Circle(1.0), 120, seed=0))
    sparse = sample(SamplerSpec(Circle(1.0), 30, seed=0))
    fine = build_rips(euclidean_metric(dense), 0.3, cap=2)
    coarse = build_rips(euclidean_metric(sparse), 0.6, cap=2)
    f = vertex_level_f_map(fine, dense, coarse, sparse)
    from ripshadow.homology import induced_map

    assert induced_map(f, 1).rank(1) == 1


def test_vertex_map_flags_scale_mismatch():
    ref = sample(SamplerSpec(Circle(1.0), 40, seed=0))
    fine = build_rips(euclidean_metric(ref), 0.4, cap=2)
    tgt = PointCloud(np.array([[1.0, 0.0], [-0.5, 0.87], [-0.5, -0.87]]))
    coarse = build_rips(euclidean_metric(tgt), 0.3, cap=2)
    with pytest.raises(OutOfRegimeError):
        vertex_level_f_map(fine, ref, coarse, tgt)
