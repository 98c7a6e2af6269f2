"""Tower experiments: direct and inverse systems of complexes over models.

Each runner draws a sample, builds one complex per stage, connects the
stages by verified simplicial maps, and reads off the table of composite
homology ranks.  The resulting report embeds the full scale-condition
output; a verdict of "consistent" is only possible when every named
hypothesis holds and the stabilized rank matches its comparison target.
Any failed hypothesis forces "out-of-regime" and suppresses the tower.

Two standing reductions, stated in every report's annotations: inverse
systems run over one fixed sample dense enough for the finest scale (a
cofinal choice, so all stages share vertices), and stabilization is
judged by the composite-rank plateau rule rather than an actual limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .homology import (
    HomologyTower,
    InternalConsistencyError,
    TowerReport,
    betti,
    carrier_map_to_nerve,
    barycentric_subdivision,
    homology_basis,
    induced_from_chain_columns,
    induced_map_on_bases,
    subdivision_chain_columns,
    tower_ranks,
)
from .models import (
    Condition,
    ConditionReport,
    Model,
    PointCloud,
    SamplerSpec,
    _ball_offset,
    _normal_basis,
    check_scale_conditions,
    epsilon_path_metric,
    euclidean_metric,
    sample,
)
from .rips import SimplicialComplex, SimplicialMap, build_rips, inclusion_map, maximal_cliques
from .shadow import ConvexCellSystem, build_nerve, nerve_coarsening_map

import json

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
OUT_OF_REGIME = "out-of-regime"

METRIC_CHOICES = ("euclidean", "geodesic", "epsilon-path")
OBJECT_CHOICES = ("rips", "shadow-nerve")


class OutOfRegimeError(RuntimeError):
    """A construction left the regime where its guarantees apply."""


# ---------------------------------------------------------------------------
# sampling helpers


def radical_inverse_base2(j: int) -> float:
    """Bit-reversed fraction of a nonnegative integer."""
    f, r = 0.5, 0.0
    while j:
        if j & 1:
            r += f
        j >>= 1
        f *= 0.5
    return r


def dense_arc_enumeration(model: Model, count: int, seed: int = 0) -> np.ndarray:
    """First ``count`` terms of a fixed dense sequence of arc positions.

    Bit-reversal enumeration with a seed-derived phase: every prefix is a
    prefix of the next, and prefixes of length 2^k are exactly uniform.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    phase = float(np.random.default_rng(seed).uniform())
    vals = np.array([radical_inverse_base2(j) for j in range(count)])
    return ((vals + phase) % 1.0) * model.length


def projection_parameters(model: Model, cloud: PointCloud) -> np.ndarray:
    return np.array([model.project(p).param for p in cloud.points], dtype=float)


def measured_density(model: Model, params: np.ndarray, grid_factor: int = 8) -> float:
    """Geodesic density of a parameter set, plus the grid's own half-step.

    Evaluated on a uniform arc grid; the reported value is an upper bound
    on the true sup-distance, so a passing density check is trustworthy.
    """
    params = np.asarray(params, dtype=float)
    grid_n = max(2048, grid_factor * len(params))
    grid = np.arange(grid_n) * (model.length / grid_n)
    d = np.asarray(model.geodesic_param_distance(grid[:, None], params[None, :]))
    return float(d.min(axis=1).max()) + model.length / (2.0 * grid_n)


def default_sample_count(model: Model, beta_min: float) -> int:
    # spacing a bit under beta/2 so the measured density clears the check
    return int(math.ceil(2.2 * model.length / beta_min))


def _metric_for(cloud: PointCloud, choice: str, eps: float | None, model: Model):
    if choice == "euclidean":
        return euclidean_metric(cloud)
    if choice == "epsilon-path":
        if eps is None:
            raise ValueError("epsilon-path metric needs eps")
        return epsilon_path_metric(cloud, eps)
    if choice == "geodesic":
        return model.geodesic_metric(cloud)
    raise ValueError(f"unknown metric choice {choice!r}")


# ---------------------------------------------------------------------------
# experiment specs


@dataclass(frozen=True)
class DirectSystemSpec:
    """Growing samples at one fixed scale, joined by inclusions."""

    model: Model
    beta: float
    sizes: tuple[int, ...]
    metric: str = "euclidean"
    eps: float | None = None
    dim: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes or any(n <= 0 for n in sizes):
            raise ValueError("sample sizes must be positive")
        if any(a >= b for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        object.__setattr__(self, "sizes", sizes)
        if self.metric not in ("euclidean", "epsilon-path"):
            raise ValueError("direct systems use the euclidean or epsilon-path metric")
        if self.metric == "epsilon-path" and self.eps is None:
            raise ValueError("epsilon-path metric needs eps")
        if self.dim < 0:
            raise ValueError("dimension must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "kind": "direct",
            "model": self.model.to_spec_json(),
            "beta": float(self.beta),
            "sizes": list(self.sizes),
            "metric": self.metric,
            "eps": None if self.eps is None else float(self.eps),
            "dim": self.dim,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class InverseSystemSpec:
    """Shrinking scales over one fixed sample, joined by coarsening maps.

    ``taus`` optionally pairs a noise amplitude with every scale; the pairs
    must be jointly ordered (both grids nonincreasing, and each beta step
    at least twice the matching tau step) so that the stage inclusions stay
    simplicial.  Stage noise reuses one offset draw, scaled per stage.
    """

    model: Model
    betas: tuple[float, ...]
    tau: float = 0.0
    object_kind: str = "rips"
    metric: str = "euclidean"
    eps: float | None = None
    dim: int = 1
    seed: int = 0
    n: int | None = None
    scheme: str = "stratified"
    taus: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        betas = tuple(float(b) for b in self.betas)
        if len(betas) < 2:
            raise ValueError("need at least two scale stages")
        if any(b <= 0 for b in betas):
            raise ValueError("scales must be positive")
        if any(a <= b for a, b in zip(betas, betas[1:])):
            raise ValueError("scale grid must be strictly decreasing")
        object.__setattr__(self, "betas", betas)
        if self.tau < 0:
            raise ValueError("noise amplitude must be nonnegative")
        if self.object_kind not in OBJECT_CHOICES:
            raise ValueError(f"object must be one of {OBJECT_CHOICES}")
        if self.metric not in METRIC_CHOICES:
            raise ValueError(f"metric must be one of {METRIC_CHOICES}")
        if self.metric == "epsilon-path" and self.eps is None:
            raise ValueError("epsilon-path metric needs eps")
        if self.dim < 0:
            raise ValueError("dimension must be nonnegative")
        if self.n is not None and self.n <= 0:
            raise ValueError("sample count must be positive")
        if self.taus is not None:
            taus = tuple(float(t) for t in self.taus)
            if len(taus) != len(betas):
                raise ValueError("paired noise grid must match the scale grid")
            if any(t < 0 for t in taus):
                raise ValueError("noise amplitudes must be nonnegative")
            if any(a < b for a, b in zip(taus, taus[1:])):
                raise ValueError("paired noise grid must be nonincreasing")
            for i in range(len(betas) - 1):
                if betas[i] - betas[i + 1] < 2.0 * (taus[i] - taus[i + 1]):
                    raise ValueError(
                        "stages are not jointly ordered: the scale step from "
                        f"{betas[i]} to {betas[i + 1]} is smaller than twice "
                        "the noise step, so the stage inclusion may fail"
                    )
            if self.object_kind == "shadow-nerve":
                raise ValueError(
                    "per-stage noise amplitudes are supported for the rips "
                    "object only; the nerve tower needs a single embedding"
                )
            object.__setattr__(self, "taus", taus)

    def stage_taus(self) -> tuple[float, ...]:
        if self.taus is not None:
            return self.taus
        return (float(self.tau),) * len(self.betas)

    def to_json_dict(self) -> dict:
        return {
            "kind": "inverse",
            "model": self.model.to_spec_json(),
            "betas": [float(b) for b in self.betas],
            "tau": float(self.tau),
            "taus": None if self.taus is None else [float(t) for t in self.taus],
            "object": self.object_kind,
            "metric": self.metric,
            "eps": None if self.eps is None else float(self.eps),
            "dim": self.dim,
            "seed": self.seed,
            "n": self.n,
            "scheme": self.scheme,
        }


# ---------------------------------------------------------------------------
# reports


@dataclass
class LimitReport:
    """Everything needed to audit one tower experiment."""

    kind: str
    spec: dict
    dim: int
    model_betti: list[int]
    stages: list[dict]
    conditions: list[ConditionReport]
    towers: dict[str, TowerReport] = field(default_factory=dict)
    numbers: dict = field(default_factory=dict)
    target_rank: int | None = None
    stabilized: dict[str, int | None] = field(default_factory=dict)
    verdict: str = OUT_OF_REGIME
    annotations: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "spec": self.spec,
            "dim": self.dim,
            "model_betti": list(self.model_betti),
            "stages": self.stages,
            "conditions": [c.to_json_dict() for c in self.conditions],
            "towers": {name: t.to_json_dict() for name, t in self.towers.items()},
            "numbers": self.numbers,
            "target_rank": self.target_rank,
            "stabilized": self.stabilized,
            "verdict": self.verdict,
            "annotations": list(self.annotations),
        }

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def _failed_hypotheses(reports: list[ConditionReport]) -> list[str]:
    notes = []
    for rep in reports:
        for name in rep.failing():
            notes.append(f"beta={rep.beta:g}: hypothesis {name} fails")
    return notes


def _model_betti(model: Model) -> list[int]:
    b0, b1 = model.betti()
    return [int(b0), int(b1)]


def _target_for_dim(model: Model, m: int) -> int:
    bs = _model_betti(model)
    return bs[m] if m < len(bs) else 0


# ---------------------------------------------------------------------------
# direct systems


def run_direct_system(spec: DirectSystemSpec) -> LimitReport:
    """Tower of inclusions of growing samples at one fixed scale.

    The comparison target is the top stage's homology, standing in for the
    complex over the full dense enumeration.
    """
    model = spec.model
    conds = check_scale_conditions(model, spec.beta)
    stages = [
        {"stage": i, "beta": float(spec.beta), "tau": 0.0, "n": int(n)}
        for i, n in enumerate(spec.sizes)
    ]
    report = LimitReport(
        kind="direct-limit",
        spec=spec.to_json_dict(),
        dim=spec.dim,
        model_betti=_model_betti(model),
        stages=stages,
        conditions=[conds],
        annotations=[
            "comparison target is the top-stage homology, standing in for "
            "the complex over the full dense enumeration",
        ],
    )
    failed = _failed_hypotheses([conds])
    if failed:
        report.annotations.extend(failed)
        return report

    params = dense_arc_enumeration(model, spec.sizes[-1], spec.seed)
    pts = np.stack([model.point_at(t) for t in params])
    complexes = []
    for n in spec.sizes:
        cloud = PointCloud(pts[:n].copy())
        met = _metric_for(cloud, spec.metric, spec.eps, model)
        complexes.append(build_rips(met, spec.beta, cap=spec.dim + 1))
    maps = [
        inclusion_map(
            complexes[i],
            complexes[i + 1],
            embedding=range(complexes[i].n),
            src_scale=spec.beta,
            dst_scale=spec.beta,
        )
        for i in range(len(complexes) - 1)
    ]
    tower = HomologyTower(complexes, maps, up_to=spec.dim)
    trep = tower_ranks(tower)
    report.towers["tower"] = trep
    report.target_rank = int(tower.bases[-1].rank(spec.dim))
    plateau = trep.plateaus.get(spec.dim)
    report.stabilized["tower"] = None if plateau is None else int(plateau.rank)
    if plateau is None:
        report.verdict = INCONSISTENT
        report.annotations.append(
            f"no composite-rank plateau of length >= 3 within {len(tower)} stages"
        )
    elif plateau.rank == report.target_rank:
        report.verdict = CONSISTENT
    else:
        report.verdict = INCONSISTENT
        report.annotations.append(
            f"plateau rank {plateau.rank} disagrees with the top-stage rank "
            f"{report.target_rank}"
        )
    return report


# ---------------------------------------------------------------------------
# inverse systems


def _stage_clouds(spec: InverseSystemSpec, n: int) -> list[PointCloud]:
    """One cloud per stage; a single shared cloud unless noise is paired."""
    taus = spec.stage_taus()
    if spec.taus is None:
        cloud = sample(SamplerSpec(spec.model, n, spec.tau, spec.seed, spec.scheme))
        return [cloud] * len(spec.betas)
    model = spec.model
    if taus[0] > 0 and taus[0] >= model.tube_radius:
        raise ValueError("largest stage noise reaches the model tube radius")
    rng = np.random.default_rng(spec.seed)
    if spec.scheme == "stratified":
        params = np.arange(n) * (model.length / n)
    elif spec.scheme == "uniform-arc":
        params = rng.uniform(0.0, model.length, size=n)
    else:
        raise ValueError(f"unknown scheme {spec.scheme!r}")
    base = np.stack([model.point_at(t) for t in params])
    dirs = np.zeros_like(base)
    for i, t in enumerate(params):
        basis = _normal_basis(model.tangent_at(t))
        dirs[i] = _ball_offset(rng, basis.shape[0], 1.0) @ basis
    # internal stage order is finest first, the reverse of the input grid
    return [PointCloud(base + t * dirs) for t in reversed(taus)]


def run_inverse_system(spec: InverseSystemSpec) -> LimitReport:
    """Tower over a shrinking scale grid, one fixed sample for all stages."""
    model = spec.model
    n = spec.n if spec.n is not None else default_sample_count(model, spec.betas[-1])
    clouds = _stage_clouds(spec, n)  # finest stage first
    betas_fine_first = tuple(reversed(spec.betas))
    taus_fine_first = tuple(reversed(spec.stage_taus()))

    cond_reports: list[ConditionReport] = []
    stages = []
    zeta_cache: dict[int, float] = {}
    for i, (beta, tau, cloud) in enumerate(
        zip(betas_fine_first, taus_fine_first, clouds)
    ):
        key = id(cloud)
        if key not in zeta_cache:
            zeta_cache[key] = measured_density(model, projection_parameters(model, cloud))
        zeta = zeta_cache[key]
        cond_reports.append(check_scale_conditions(model, beta, tau, zeta=zeta))
        stages.append(
            {
                "stage": i,
                "beta": float(beta),
                "tau": float(tau),
                "n": n,
                "density": float(zeta),
            }
        )

    report = LimitReport(
        kind="inverse-limit",
        spec=spec.to_json_dict(),
        dim=spec.dim,
        model_betti=_model_betti(model),
        stages=stages,
        conditions=cond_reports,
        target_rank=_target_for_dim(model, spec.dim),
        annotations=[
            "cofinal subsystem: one fixed sample, dense enough for the finest "
            "scale, serves every stage",
            "stages run finest scale first; the input grid lists them "
            "coarsest first",
        ],
    )
    failed = _failed_hypotheses(cond_reports)
    if failed:
        report.annotations.extend(failed)
        return report

    cap = spec.dim + 1
    metrics = []
    seen: dict[int, object] = {}
    for cloud in clouds:
        key = id(cloud)
        if key not in seen:
            seen[key] = _metric_for(cloud, spec.metric, spec.eps, model)
        metrics.append(seen[key])

    if spec.object_kind == "rips":
        complexes = [
            build_rips(met, beta, cap=cap)
            for met, beta in zip(metrics, betas_fine_first)
        ]
        try:
            maps = [
                inclusion_map(
                    complexes[i],
                    complexes[i + 1],
                    embedding=range(n),
                    src_scale=betas_fine_first[i],
                    dst_scale=betas_fine_first[i + 1],
                )
                for i in range(len(complexes) - 1)
            ]
        except ValueError as exc:
            report.annotations.append(f"stage inclusion failed: {exc}")
            return report
    else:
        systems = []
        nerves = []
        for met, beta, cloud in zip(metrics, betas_fine_first, clouds):
            cliques = maximal_cliques(met, beta)
            system = ConvexCellSystem(cloud, cliques)
            systems.append(system)
            nerves.append(build_nerve(system, cap=cap))
        complexes = [nv.complex for nv in nerves]
        maps = [
            nerve_coarsening_map(systems[i], nerves[i], systems[i + 1], nerves[i + 1])
            for i in range(len(nerves) - 1)
        ]

    tower = HomologyTower(complexes, maps, up_to=spec.dim)
    trep = tower_ranks(tower)
    report.towers["tower"] = trep
    plateau = trep.plateaus.get(spec.dim)
    report.stabilized["tower"] = None if plateau is None else int(plateau.rank)
    if plateau is None:
        report.verdict = INCONSISTENT
        report.annotations.append(
            f"no composite-rank plateau of length >= 3 within {len(tower)} stages"
        )
    elif plateau.rank == report.target_rank:
        report.verdict = CONSISTENT
    else:
        report.verdict = INCONSISTENT
        report.annotations.append(
            f"plateau rank {plateau.rank} disagrees with the model's rank "
            f"{report.target_rank}"
        )
    return report


# ---------------------------------------------------------------------------
# metric comparability


def run_metric_comparability(
    model: Model,
    betas,
    tau: float,
    eps: float,
    dim: int = 1,
    seed: int = 0,
    n: int | None = None,
    scheme: str = "stratified",
) -> LimitReport:
    """Twin towers under the ambient and the path metric, stage for stage.

    Every working scale must sit below the path cutoff; there the two
    strict complexes provably coincide, and the runner asserts it.
    """
    betas = tuple(float(b) for b in betas)
    if any(a <= b for a, b in zip(betas, betas[1:])) or len(betas) < 2:
        raise ValueError("scale grid must be strictly decreasing, length >= 2")
    if eps <= 0:
        raise ValueError("path cutoff must be positive")
    spec_echo = {
        "kind": "metric-comparability",
        "model": model.to_spec_json(),
        "betas": [float(b) for b in betas],
        "tau": float(tau),
        "eps": float(eps),
        "dim": dim,
        "seed": seed,
        "n": n,
        "scheme": scheme,
    }
    count = n if n is not None else default_sample_count(model, betas[-1])
    cloud = sample(SamplerSpec(model, count, tau, seed, scheme))
    zeta = measured_density(model, projection_parameters(model, cloud))
    betas_fine_first = tuple(reversed(betas))

    cond_reports = []
    stages = []
    for i, beta in enumerate(betas_fine_first):
        rep = check_scale_conditions(model, beta, tau, zeta=zeta)
        rep.conditions.append(
            Condition(
                "scales-below-cutoff",
                beta,
                eps,
                beta < eps,
                "below the path cutoff the two strict complexes coincide",
            )
        )
        cond_reports.append(rep)
        stages.append(
            {
                "stage": i,
                "beta": float(beta),
                "tau": float(tau),
                "n": count,
                "density": float(zeta),
            }
        )

    report = LimitReport(
        kind="metric-comparability",
        spec=spec_echo,
        dim=dim,
        model_betti=_model_betti(model),
        stages=stages,
        conditions=cond_reports,
        target_rank=_target_for_dim(model, dim),
        annotations=[
            "twin towers share one sample; connecting maps are identity "
            "inclusions on vertices",
        ],
    )
    failed = _failed_hypotheses(cond_reports)
    if failed:
        report.annotations.extend(failed)
        return report

    met_e = euclidean_metric(cloud)
    met_p = epsilon_path_metric(cloud, eps)
    if np.isinf(met_p.d).any():
        i, j = np.argwhere(np.isinf(met_p.d))[0]
        report.annotations.append(
            f"path metric disconnects samples {int(i)} and {int(j)} at "
            f"cutoff {eps:g}; comparability fails"
        )
        return report
    off = met_e.d > 0
    report.numbers["path_to_chord_ratio_max"] = float(
        np.max(met_p.d[off] / met_e.d[off], initial=1.0)
    )

    cap = dim + 1
    towers = {}
    complexes_by_name = {}
    for name, met in (("euclidean", met_e), ("epsilon-path", met_p)):
        complexes = [build_rips(met, beta, cap=cap) for beta in betas_fine_first]
        maps = [
            inclusion_map(
                complexes[i],
                complexes[i + 1],
                embedding=range(count),
                src_scale=betas_fine_first[i],
                dst_scale=betas_fine_first[i + 1],
            )
            for i in range(len(complexes) - 1)
        ]
        towers[name] = HomologyTower(complexes, maps, up_to=dim)
        complexes_by_name[name] = complexes

    for a, b in zip(complexes_by_name["euclidean"], complexes_by_name["epsilon-path"]):
        if a.simplices != b.simplices:
            raise InternalConsistencyError(
                "strict complexes differ below the path cutoff; the pinned "
                "path metric is broken"
            )
    report.numbers["stagewise_identical"] = True

    ranks = {}
    for name, tower in towers.items():
        trep = tower_ranks(tower)
        report.towers[name] = trep
        plateau = trep.plateaus.get(dim)
        report.stabilized[name] = None if plateau is None else int(plateau.rank)
        ranks[name] = report.stabilized[name]
    vals = list(ranks.values())
    if any(v is None for v in vals):
        report.verdict = INCONSISTENT
        report.annotations.append("at least one tower failed to stabilize")
    elif vals[0] == vals[1]:
        report.verdict = CONSISTENT
    else:
        report.verdict = INCONSISTENT
        report.annotations.append(
            f"stabilized ranks disagree between metrics: {ranks}"
        )
    return report


# ---------------------------------------------------------------------------
# projection through the shadow


def run_projection_check(
    model: Model,
    beta: float,
    n: int | None = None,
    dim: int = 1,
    seed: int = 0,
    scheme: str = "stratified",
) -> LimitReport:
    """Rank check for the map from a complex onto its shadow's nerve.

    The homology map is realized as the subdivision isomorphism followed
    by the carrier assignment of subdivision vertices to cells.  In regime
    all three ranks agree in every dimension up to ``dim``, and the
    subdivision leaves Betti numbers unchanged.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    count = n if n is not None else default_sample_count(model, beta)
    spec_echo = {
        "kind": "projection-check",
        "model": model.to_spec_json(),
        "beta": float(beta),
        "n": count,
        "dim": dim,
        "seed": seed,
        "scheme": scheme,
    }
    cloud = sample(SamplerSpec(model, count, 0.0, seed, scheme))
    zeta = measured_density(model, projection_parameters(model, cloud))
    conds = check_scale_conditions(model, beta, 0.0, zeta=zeta)
    stages = [
        {"stage": 0, "beta": float(beta), "tau": 0.0, "n": count, "density": float(zeta)}
    ]
    report = LimitReport(
        kind="projection-check",
        spec=spec_echo,
        dim=dim,
        model_betti=_model_betti(model),
        stages=stages,
        conditions=[conds],
        annotations=[
            "homology map realized as subdivision followed by the carrier "
            "assignment into the nerve",
        ],
    )
    failed = _failed_hypotheses([conds])
    if failed:
        report.annotations.extend(failed)
        return report

    cap = dim + 1
    metric = model.geodesic_metric(cloud)
    complex_ = build_rips(metric, beta, cap=cap)
    cliques = maximal_cliques(metric, beta)
    system = ConvexCellSystem(cloud, cliques)
    nerve = build_nerve(system, cap=cap)

    sd, carriers = barycentric_subdivision(complex_)
    base_src = homology_basis(complex_, dim)
    base_sd = homology_basis(sd, dim)
    base_nerve = homology_basis(nerve.complex, dim)
    sub_cols = subdivision_chain_columns(complex_, sd, carriers, dim)
    sub_mats = induced_from_chain_columns(sub_cols, base_src, base_sd, dim)
    carrier_map = carrier_map_to_nerve(sd, carriers, system, nerve)
    carrier_ind = induced_map_on_bases(carrier_map, base_sd, base_nerve)

    complex_ranks = [base_src.rank(m) for m in range(dim + 1)]
    nerve_ranks = [base_nerve.rank(m) for m in range(dim + 1)]
    composite_ranks = [
        carrier_ind.matrices[m].matmul(sub_mats[m]).rank() for m in range(dim + 1)
    ]
    sd_betti = betti(sd, dim)
    src_betti = betti(complex_, dim)
    report.numbers.update(
        {
            "complex_rank": complex_ranks,
            "nerve_rank": nerve_ranks,
            "composite_rank": composite_ranks,
            "complex_betti": src_betti,
            "subdivision_betti": sd_betti,
        }
    )
    iso = all(
        complex_ranks[m] == nerve_ranks[m] == composite_ranks[m]
        for m in range(dim + 1)
    )
    if not iso:
        report.verdict = INCONSISTENT
        report.annotations.append(
            "projection composite is not an isomorphism at the rank level"
        )
        return report
    if sd_betti != src_betti:
        report.verdict = INCONSISTENT
        report.annotations.append(
            f"subdivision changed Betti numbers: {src_betti} -> {sd_betti}"
        )
        return report
    report.verdict = CONSISTENT
    return report


# ---------------------------------------------------------------------------
# vertex-level coarsening of a reference complex into a sample complex


def vertex_level_f_map(
    ref_complex: SimplicialComplex,
    ref_cloud: PointCloud,
    target_complex: SimplicialComplex,
    target_cloud: PointCloud,
) -> SimplicialMap:
    """Send each reference vertex to its nearest sample point.

    Ties break to the lowest sample index.  Simpliciality is checked
    simplex by simplex so an out-of-regime scale pairing is reported with
    the offending simplex instead of a bare failure.
    """
    if ref_complex.n != ref_cloud.n or target_complex.n != target_cloud.n:
        raise ValueError("complex and cloud disagree on vertex count")
    d = cdist(ref_cloud.points, target_cloud.points)
    assignment = tuple(int(j) for j in d.argmin(axis=1))
    for s in ref_complex.all_simplices():
        img = tuple(sorted(set(assignment[v] for v in s)))
        if not target_complex.has_simplex(img):
            raise OutOfRegimeError(
                f"image {img} of simplex {s} is not in the target complex; "
                "the scale pairing is out of regime"
            )
    return SimplicialMap(ref_complex, target_complex, assignment)
