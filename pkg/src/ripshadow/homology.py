"""Mod-2 simplicial homology: Betti numbers, induced maps, towers.

Chains are bit masks (Python ints) over the lexicographically ordered
simplex basis of each dimension.  Reduction is column echelon with the
highest set bit as pivot, processed in basis order, so every rank, cycle
representative, and induced matrix is deterministic for a given complex.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, permutations

from .rips import SimplicialComplex, SimplicialMap
from .shadow import ConvexCellSystem, NerveComplex, hulls_intersect


class InternalConsistencyError(RuntimeError):
    """A chain expected to be a cycle or boundary failed to reduce; this
    indicates a bug rather than bad input."""


class CarrierVerificationError(RuntimeError):
    """The carrier assignment failed its re-verification against the cells."""


# ---------------------------------------------------------------------------
# bit-column linear algebra


class Gf2Matrix:
    """Matrix over GF(2); column j is the integer bit mask cols[j]."""

    __slots__ = ("rows", "cols")

    def __init__(self, rows: int, cols: list[int]):
        self.rows = rows
        self.cols = list(cols)

    @property
    def ncols(self) -> int:
        return len(self.cols)

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls(n, [1 << i for i in range(n)])

    @classmethod
    def zero(cls, rows: int, ncols: int) -> "Gf2Matrix":
        return cls(rows, [0] * ncols)

    def matmul(self, other: "Gf2Matrix") -> "Gf2Matrix":
        """self @ other; other's columns are combined from self's columns."""
        if other.rows != self.ncols:
            raise ValueError("dimension mismatch in mod-2 matrix product")
        out = []
        for c in other.cols:
            acc = 0
            rem = c
            while rem:
                low = rem & -rem
                acc ^= self.cols[low.bit_length() - 1]
                rem ^= low
            out.append(acc)
        return Gf2Matrix(self.rows, out)

    def rank(self) -> int:
        piv: dict[int, int] = {}
        for c in self.cols:
            cur = c
            while cur:
                p = cur.bit_length() - 1
                if p in piv:
                    cur ^= piv[p]
                else:
                    piv[p] = cur
                    break
        return len(piv)

    def to_lists(self) -> list[list[int]]:
        return [
            [(c >> r) & 1 for c in self.cols] for r in range(self.rows)
        ]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Gf2Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
        )


def _echelon_basis(vectors: list[int]) -> dict[int, int]:
    """Reduce vectors into a pivot->vector echelon dictionary."""
    piv: dict[int, int] = {}
    for v in vectors:
        cur = v
        while cur:
            p = cur.bit_length() - 1
            if p in piv:
                cur ^= piv[p]
            else:
                piv[p] = cur
                break
    return piv


def _reduce_against(vec: int, piv: dict[int, int]) -> int:
    cur = vec
    while cur:
        p = cur.bit_length() - 1
        if p not in piv:
            return cur
        cur ^= piv[p]
    return 0


def _kernel_basis(cols: list[int]) -> list[int]:
    """Combinations of columns that vanish, as bit masks over column indices."""
    piv: dict[int, tuple[int, int]] = {}
    kernel = []
    for j, c in enumerate(cols):
        cur = c
        combo = 1 << j
        while cur:
            p = cur.bit_length() - 1
            if p in piv:
                pc, pcombo = piv[p]
                cur ^= pc
                combo ^= pcombo
            else:
                piv[p] = (cur, combo)
                break
        if cur == 0:
            kernel.append(combo)
    return kernel


# ---------------------------------------------------------------------------
# chain complexes and homology bases


@dataclass
class ChainComplexZ2:
    """Boundary maps of a complex over the per-dimension simplex bases."""

    complex: SimplicialComplex
    index: dict[int, dict[tuple[int, ...], int]] = field(init=False)

    def __post_init__(self) -> None:
        self.index = {
            d: {s: i for i, s in enumerate(group)}
            for d, group in self.complex.simplices.items()
        }

    def basis(self, m: int) -> list[tuple[int, ...]]:
        return self.complex.simplices.get(m, [])

    def boundary_columns(self, m: int) -> list[int]:
        """Column j = boundary of the j-th m-simplex over the (m-1) basis."""
        if m <= 0:
            return [0] * len(self.basis(m))
        lower = self.index.get(m - 1, {})
        cols = []
        for s in self.basis(m):
            acc = 0
            for face in combinations(s, m):
                acc ^= 1 << lower[face]
            cols.append(acc)
        return cols

    def verify_boundary_squared(self, up_to: int) -> None:
        for m in range(2, up_to + 2):
            cols_m = self.boundary_columns(m)
            lower = self.boundary_columns(m - 1)
            for c in cols_m:
                acc = 0
                rem = c
                while rem:
                    low = rem & -rem
                    acc ^= lower[low.bit_length() - 1]
                    rem ^= low
                if acc != 0:
                    raise InternalConsistencyError("boundary of boundary is nonzero")


@dataclass
class HomologyBasis:
    """Cycle representatives spanning homology, one list per dimension."""

    complex: SimplicialComplex
    up_to: int
    ranks: list[int]
    representatives: dict[int, list[int]]
    boundary_echelon: dict[int, dict[int, int]]

    def rank(self, m: int) -> int:
        return self.ranks[m] if 0 <= m <= self.up_to else 0


def _homology_data(chain: ChainComplexZ2, m: int):
    """Cycle reps and boundary echelon for one dimension."""
    n_m = len(chain.basis(m))
    if m == 0:
        cycles = [1 << i for i in range(n_m)]
    else:
        cycles = _kernel_basis(chain.boundary_columns(m))
    cap = chain.complex.cap
    if m + 1 <= cap:
        bnd = _echelon_basis([c for c in chain.boundary_columns(m + 1) if c])
    else:
        bnd = {}
    reps = []
    piv = dict(bnd)
    for z in cycles:
        residue = _reduce_against(z, piv)
        if residue:
            piv[residue.bit_length() - 1] = residue
            reps.append(residue)
    return reps, bnd


def homology_basis(complex_: SimplicialComplex, up_to: int) -> HomologyBasis:
    if up_to > complex_.cap - 1:
        raise ValueError(
            f"homology above dimension {complex_.cap - 1} is not certified at "
            f"cap {complex_.cap}; rebuild with a larger cap"
        )
    chain = ChainComplexZ2(complex_)
    ranks, reps, bnds = [], {}, {}
    for m in range(up_to + 1):
        r, b = _homology_data(chain, m)
        ranks.append(len(r))
        reps[m] = r
        bnds[m] = b
    return HomologyBasis(complex_, up_to, ranks, reps, bnds)


def betti(complex_: SimplicialComplex, up_to: int) -> list[int]:
    """Betti numbers b_0..b_up_to via rank-nullity over the strict bases."""
    if up_to > complex_.cap - 1:
        raise ValueError(
            f"betti above dimension {complex_.cap - 1} is not certified at "
            f"cap {complex_.cap}; rebuild with a larger cap"
        )
    chain = ChainComplexZ2(complex_)
    out = []
    prev_rank = 0  # rank of the boundary map into dimension m-1
    for m in range(up_to + 1):
        n_m = len(chain.basis(m))
        if m + 1 <= complex_.cap:
            rank_next = len(
                _echelon_basis([c for c in chain.boundary_columns(m + 1) if c])
            )
        else:
            rank_next = 0
        out.append(n_m - prev_rank - rank_next)
        prev_rank = rank_next
    return out


# ---------------------------------------------------------------------------
# induced maps


@dataclass
class InducedMap:
    """Per-dimension homology matrices of a chain map."""

    source: HomologyBasis
    target: HomologyBasis
    matrices: list[Gf2Matrix]

    def rank(self, m: int) -> int:
        return self.matrices[m].rank() if 0 <= m < len(self.matrices) else 0


def _vertex_chain_columns(
    f: SimplicialMap, chain_src: ChainComplexZ2, chain_dst: ChainComplexZ2, m: int
) -> list[int]:
    """Chain map columns of a simplicial map: degenerate images drop to zero."""
    dst_index = chain_dst.index.get(m, {})
    cols = []
    for s in chain_src.basis(m):
        img = f.map_simplex(s)
        if len(img) != len(s):
            cols.append(0)
        else:
            cols.append(1 << dst_index[img])
    return cols


def induced_from_chain_columns(
    chain_cols: dict[int, list[int]],
    src_basis: HomologyBasis,
    dst_basis: HomologyBasis,
    up_to: int,
) -> list[Gf2Matrix]:
    """Express images of source cycle representatives in the target basis.

    Each image is reduced modulo target boundaries against the target
    representatives; a nonzero residue would mean the input was not a chain
    map and raises InternalConsistencyError.
    """
    mats = []
    for m in range(up_to + 1):
        cols = chain_cols[m]
        solver: dict[int, tuple[int, int]] = {}
        for p, v in dst_basis.boundary_echelon[m].items():
            solver[p] = (v, 0)
        for idx, rep in enumerate(dst_basis.representatives[m]):
            cur, coeff = rep, 1 << idx
            while cur:
                p = cur.bit_length() - 1
                if p in solver:
                    pv, pc = solver[p]
                    cur ^= pv
                    coeff ^= pc
                else:
                    solver[p] = (cur, coeff)
                    break
            if cur == 0:
                raise InternalConsistencyError("dependent homology representatives")
        out_cols = []
        for z in src_basis.representatives[m]:
            acc = 0
            rem = z
            while rem:
                low = rem & -rem
                acc ^= cols[low.bit_length() - 1]
                rem ^= low
            coeff = 0
            cur = acc
            while cur:
                p = cur.bit_length() - 1
                if p not in solver:
                    raise InternalConsistencyError(
                        "image of a cycle is not a cycle modulo boundaries"
                    )
                pv, pc = solver[p]
                cur ^= pv
                coeff ^= pc
            out_cols.append(coeff)
        mats.append(Gf2Matrix(dst_basis.rank(m), out_cols))
    return mats


def induced_map(f: SimplicialMap, up_to: int) -> InducedMap:
    src = homology_basis(f.source, up_to)
    dst = homology_basis(f.target, up_to)
    return induced_map_on_bases(f, src, dst)


def induced_map_on_bases(
    f: SimplicialMap, src: HomologyBasis, dst: HomologyBasis
) -> InducedMap:
    if src.complex is not f.source or dst.complex is not f.target:
        raise ValueError("bases do not belong to the map's complexes")
    up_to = min(src.up_to, dst.up_to)
    chain_src = ChainComplexZ2(f.source)
    chain_dst = ChainComplexZ2(f.target)
    cols = {
        m: _vertex_chain_columns(f, chain_src, chain_dst, m) for m in range(up_to + 1)
    }
    mats = induced_from_chain_columns(cols, src, dst, up_to)
    return InducedMap(src, dst, mats)


# ---------------------------------------------------------------------------
# barycentric subdivision


def barycentric_subdivision(
    complex_: SimplicialComplex,
) -> tuple[SimplicialComplex, list[tuple[int, ...]]]:
    """First barycentric subdivision and the carrier of each new vertex.

    New vertices are the simplices of the input, ordered by (dimension,
    lexicographic); new simplices are the chains of proper inclusions.
    """
    carriers = []
    vertex_of: dict[tuple[int, ...], int] = {}
    for d in sorted(complex_.simplices):
        for s in complex_.simplices[d]:
            vertex_of[s] = len(carriers)
            carriers.append(s)

    chains_cache: dict[tuple[int, ...], list[tuple[int, ...]]] = {}

    def chains_ending_at(s: tuple[int, ...]) -> list[tuple[int, ...]]:
        got = chains_cache.get(s)
        if got is not None:
            return got
        out = [(vertex_of[s],)]
        for size in range(1, len(s)):
            for face in combinations(s, size):
                for ch in chains_ending_at(face):
                    out.append(ch + (vertex_of[s],))
        chains_cache[s] = out
        return out

    groups: dict[int, set] = {}
    for s in vertex_of:
        for ch in chains_ending_at(s):
            groups.setdefault(len(ch) - 1, set()).add(tuple(sorted(ch)))
    simplices = {d: sorted(g) for d, g in groups.items()}
    sd = SimplicialComplex(len(carriers), complex_.cap, simplices)
    return sd, carriers


def subdivision_chain_columns(
    complex_: SimplicialComplex,
    sd: SimplicialComplex,
    carriers: list[tuple[int, ...]],
    up_to: int,
) -> dict[int, list[int]]:
    """Chain map sending each simplex to the sum of its subdivided pieces.

    The pieces of an m-simplex are its full flags: chains of faces with one
    face in every dimension 0..m.  This chain map induces the subdivision
    isomorphism on homology.
    """
    vertex_of = {s: i for i, s in enumerate(carriers)}
    sd_index = {
        d: {s: i for i, s in enumerate(group)} for d, group in sd.simplices.items()
    }
    cols_by_dim: dict[int, list[int]] = {}
    for m in range(up_to + 1):
        cols = []
        for s in complex_.simplices.get(m, []):
            acc = 0
            for perm in permutations(s):
                flag = tuple(
                    vertex_of[tuple(sorted(perm[: k + 1]))] for k in range(m + 1)
                )
                acc ^= 1 << sd_index[m][tuple(sorted(flag))]
            cols.append(acc)
        cols_by_dim[m] = cols
    return cols_by_dim


def subdivision_induced_map(
    complex_: SimplicialComplex,
    sd: SimplicialComplex,
    carriers: list[tuple[int, ...]],
    up_to: int,
) -> InducedMap:
    src = homology_basis(complex_, up_to)
    dst = homology_basis(sd, up_to)
    cols = subdivision_chain_columns(complex_, sd, carriers, up_to)
    mats = induced_from_chain_columns(cols, src, dst, up_to)
    return InducedMap(src, dst, mats)


def carrier_map_to_nerve(
    sd: SimplicialComplex,
    carriers: list[tuple[int, ...]],
    system: ConvexCellSystem,
    nerve: NerveComplex,
) -> SimplicialMap:
    """Send each subdivision vertex to the first cell containing its carrier.

    Every image simplex is re-verified against the cells by the exact
    intersection test; failure would falsify the carrier argument, so it
    aborts rather than degrade.
    """
    cell_sets = [set(c) for c in system.cells.cliques]
    assignment = []
    for s in carriers:
        target = -1
        ss = set(s)
        for j, cs in enumerate(cell_sets):
            if ss <= cs:
                target = j
                break
        if target < 0:
            raise CarrierVerificationError(
                f"simplex {s} is not contained in any cell"
            )
        assignment.append(target)
    try:
        f = SimplicialMap(sd, nerve.complex, tuple(assignment))
    except ValueError as exc:
        raise CarrierVerificationError(str(exc)) from exc
    images = {f.map_simplex(s) for s in sd.all_simplices()}
    for img in sorted(images):
        if not hulls_intersect(system, img):
            raise CarrierVerificationError(
                f"cells {img} do not share a point; carrier assignment is wrong"
            )
    return f


# ---------------------------------------------------------------------------
# towers


@dataclass
class HomologyTower:
    """Stages connected by simplicial maps, with homology along the way."""

    complexes: list[SimplicialComplex]
    maps: list[SimplicialMap]
    up_to: int
    bases: list[HomologyBasis] = field(init=False)
    step_matrices: list[list[Gf2Matrix]] = field(init=False)

    def __post_init__(self) -> None:
        if len(self.maps) != len(self.complexes) - 1:
            raise ValueError("a tower with k stages needs k-1 connecting maps")
        for i, f in enumerate(self.maps):
            if f.source is not self.complexes[i] or f.target is not self.complexes[i + 1]:
                raise ValueError(f"map {i} does not connect stages {i} -> {i + 1}")
        self.bases = [homology_basis(c, self.up_to) for c in self.complexes]
        self.step_matrices = []
        for i, f in enumerate(self.maps):
            ind = induced_map_on_bases(f, self.bases[i], self.bases[i + 1])
            self.step_matrices.append(ind.matrices)

    def __len__(self) -> int:
        return len(self.complexes)


@dataclass(frozen=True)
class Plateau:
    rank: int
    i0: int
    j0: int
    length: int

    def to_json_dict(self) -> dict:
        return {
            "rank": self.rank,
            "i0": self.i0,
            "j0": self.j0,
            "length": self.length,
        }


def composite_rank_table(
    stage_ranks: list[int], step_matrices: list[Gf2Matrix]
) -> list[list[int | None]]:
    """table[i][j] = rank of the composite from stage i into stage j (i <= j)."""
    k = len(stage_ranks)
    table: list[list[int | None]] = [[None] * k for _ in range(k)]
    for i in range(k):
        table[i][i] = stage_ranks[i]
        composite: Gf2Matrix | None = None
        for j in range(i + 1, k):
            step = step_matrices[j - 1]
            composite = step if composite is None else step.matmul(composite)
            table[i][j] = composite.rank()
    return table


def detect_plateau(
    table: list[list[int | None]], min_length: int = 3
) -> Plateau | None:
    """Earliest (j0, i0) from which every composite rank in the window agrees.

    A plateau of rank r means table[i][j] == r for all i0 <= i <= j and
    j >= j0, and the tail j0..k-1 must be at least min_length stages long.
    """
    k = len(table)
    for j0 in range(0, k - min_length + 1):
        for i0 in range(0, j0 + 1):
            r = table[i0][j0]
            ok = True
            for i in range(i0, k):
                for j in range(max(i, j0), k):
                    if table[i][j] != r:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return Plateau(int(r), i0, j0, k - j0)
    return None


@dataclass
class TowerReport:
    dims: list[int]
    stages: int
    rank_table: dict[int, list[list[int | None]]]
    plateaus: dict[int, Plateau | None]

    def to_json_dict(self) -> dict:
        return {
            "dims": self.dims,
            "stages": self.stages,
            "rank_table": {str(m): self.rank_table[m] for m in self.dims},
            "plateau": {
                str(m): (p.to_json_dict() if p else None)
                for m, p in self.plateaus.items()
            },
        }

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def tower_ranks(tower: HomologyTower, min_plateau: int = 3) -> TowerReport:
    dims = list(range(tower.up_to + 1))
    tables = {}
    plateaus = {}
    for m in dims:
        stage_ranks = [b.rank(m) for b in tower.bases]
        steps = [mats[m] for mats in tower.step_matrices]
        table = composite_rank_table(stage_ranks, steps)
        tables[m] = table
        plateaus[m] = detect_plateau(table, min_plateau)
    return TowerReport(dims, len(tower), tables, plateaus)
