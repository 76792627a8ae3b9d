"""Numerical certification that norm curves are independent across classes.

Samples the curves p -> ||v_k||_p on a Chebyshev grid, computes the numeric
rank and null space of the sampled matrix, and checks that every linear
dependence among the curves is one of the trivial ones generated by
equivalent vectors: the null space must coincide with the span predicted
by the equivalence partition, up to a principal-angle tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .continuation import pnorm_at
from .errors import InvalidInputError
from .exppoly import (
    DEFAULT_MERGE_TOL,
    ExpPoly,
    RatioFit,
    Rectangle,
    from_vector,
    ratio_factor,
    zero_multiset_equal,
)
from .vectors import (
    DEFAULT_EQUIV_TOL,
    EquivalencePartition,
    RealVector,
    partition,
    trivial_null_basis,
)

DEFAULT_GAP_THRESHOLD = 1e6
DEFAULT_SIGMA_FLOOR = 1e-10
DEFAULT_ANGLE_TOL = 1e-6
# Above this length the curves are flat to machine precision (max norm),
# so wider sampling only degrades conditioning.
_INTERVAL_CUTOFF = 39.0

CONSISTENT = "consistent-with-theorem"
UNEXPECTED = "unexpected-dependence"
ILL_CONDITIONED = "ill-conditioned"


@dataclass(frozen=True)
class SampleGrid:
    """Sample points for p in [a, b]; b may be +inf.

    ``points`` holds the finite samples; an infinite right endpoint adds
    one symbolic sample evaluated as the exact max norm.  ``count`` counts
    both kinds.
    """

    a: float
    b: float
    points: tuple[float, ...]
    include_infinity: bool

    def __post_init__(self) -> None:
        if not self.points:
            raise InvalidInputError("grid needs at least one finite point")
        for p in self.points:
            if not (math.isfinite(p) and p >= self.a):
                raise InvalidInputError("grid points must be finite and >= a")
        if any(x >= y for x, y in zip(self.points, self.points[1:])):
            raise InvalidInputError("grid points must be strictly increasing")

    @property
    def count(self) -> int:
        return len(self.points) + bool(self.include_infinity)


@dataclass(frozen=True, eq=False)
class NormMatrix:
    """entries[i, k] = ||v_k||_{p_i}, the infinity row (if any) last.

    ``column_scales`` are the Euclidean lengths of the raw columns; rank
    analysis runs on entries / column_scales so the gap threshold is
    scale-free.
    """

    entries: np.ndarray
    column_scales: np.ndarray
    grid: SampleGrid

    def __post_init__(self) -> None:
        if self.entries.ndim != 2 or self.entries.shape[0] != self.grid.count:
            raise InvalidInputError("matrix shape does not match the grid")
        if not np.all(self.entries > 0):
            raise InvalidInputError("norm matrix entries must be positive")
        if self.column_scales.shape != (self.entries.shape[1],):
            raise InvalidInputError("one scale per column required")

    def scaled(self) -> np.ndarray:
        return self.entries / self.column_scales


@dataclass(frozen=True)
class AnalyzeOptions:
    equiv_tol: float = DEFAULT_EQUIV_TOL
    merge_tol: float = DEFAULT_MERGE_TOL
    grid_count: int | None = None
    gap_threshold: float = DEFAULT_GAP_THRESHOLD
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    angle_tol: float = DEFAULT_ANGLE_TOL
    ratio_samples: tuple[float, ...] | None = None
    include_zero_evidence: bool = False
    zero_window: Rectangle = field(
        default_factory=lambda: Rectangle(-1.0, 1.0, 0.5, 40.0)
    )


@dataclass(frozen=True, eq=False)
class DependenceReport:
    matrix: NormMatrix
    partition: EquivalencePartition
    singular_values: tuple[float, ...]
    numeric_rank: int | None
    rank_gap: float
    null_basis: tuple[tuple[float, ...], ...]
    principal_angle: float | None
    classification: str
    ratio_checks: tuple[tuple[int, int, RatioFit], ...]
    zero_checks: tuple[tuple[int, int, bool], ...]
    notes: tuple[str, ...]


def make_grid(a: float, b: float, count: int) -> SampleGrid:
    """Chebyshev points with exact endpoints on [a, min(b, a+39)].

    Requires 1 <= a < b and count >= 2.  For b = +inf the last of the
    ``count`` samples is the symbolic infinity sample (evaluated later as
    the exact max norm) and only count-1 finite points are generated.
    """
    a = float(a)
    b = float(b)
    if math.isnan(a) or math.isnan(b) or not (1.0 <= a < b):
        raise InvalidInputError(f"invalid interval [{a}, {b}]: need 1 <= a < b")
    if count < 2:
        raise InvalidInputError("grid count must be at least 2")
    include_inf = math.isinf(b)
    n_finite = count - 1 if include_inf else count
    hi = min(b, a + _INTERVAL_CUTOFF)
    if n_finite == 1:
        pts = [a]
    else:
        mid = 0.5 * (a + hi)
        half = 0.5 * (hi - a)
        pts = [mid - half * math.cos(math.pi * k / (n_finite - 1)) for k in range(n_finite)]
        pts[0] = a
        pts[-1] = hi
    return SampleGrid(a, b, tuple(pts), include_inf)


def build_matrix(vs: list[RealVector], grid: SampleGrid) -> NormMatrix:
    """Tabulate ||v_k||_p over the grid; infinity row exact, last."""
    if not vs:
        raise InvalidInputError("need at least one vector")
    if grid.count < 2 * len(vs):
        warnings.warn(
            f"grid count {grid.count} below 2x vector count; "
            "rank decisions may be fragile",
            stacklevel=2,
        )
    rows = [[pnorm_at(v, p) for v in vs] for p in grid.points]
    if grid.include_infinity:
        rows.append([v.max_abs for v in vs])
    entries = np.array(rows, dtype=float)
    scales = np.linalg.norm(entries, axis=0)
    return NormMatrix(entries, scales, grid)


def numeric_rank(
    matrix: NormMatrix,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    sigma_floor: float = DEFAULT_SIGMA_FLOOR,
) -> tuple[int | None, tuple[float, ...], float]:
    """(rank, singular values, rank gap) of the column-scaled matrix.

    rank is the largest r whose spectral gap sigma_r/sigma_{r+1} reaches
    ``gap_threshold`` while sigma_r stays above ``sigma_floor`` relative
    to sigma_1 (with sigma_{n+1} taken as 0, so a clean full-rank matrix
    reports an infinite gap).  rank None means no admissible gap exists:
    the matrix is too ill-conditioned to classify.
    """
    rows, cols = matrix.entries.shape
    if rows <= cols:
        raise InvalidInputError("rank analysis needs more samples than vectors")
    sig = np.linalg.svd(matrix.scaled(), compute_uv=False)
    sigmas = tuple(float(s) for s in sig)
    if sigmas[0] <= 0:
        return None, sigmas, math.nan
    rank: int | None = None
    rank_gap = math.nan
    for r in range(1, cols + 1):
        tail = sigmas[r] if r < cols else 0.0
        gap = math.inf if tail == 0.0 else sigmas[r - 1] / tail
        if gap >= gap_threshold and sigmas[r - 1] / sigmas[0] >= sigma_floor:
            rank, rank_gap = r, gap
    return rank, sigmas, rank_gap


def _null_basis(
    matrix: NormMatrix, rank: int
) -> tuple[tuple[float, ...], ...]:
    """Trailing right singular vectors mapped back to unscaled coordinates.

    Each vector is normalized so its largest-magnitude entry is +1, which
    fixes scale and sign deterministically.
    """
    _, _, vh = np.linalg.svd(matrix.scaled())
    out = []
    for w in vh[rank:]:
        alpha = w / matrix.column_scales
        pivot = int(np.argmax(np.abs(alpha)))
        alpha = alpha / alpha[pivot]
        out.append(tuple(float(x) for x in alpha))
    return tuple(out)


def _principal_angle(
    basis_a: tuple[tuple[float, ...], ...], basis_b: tuple[tuple[float, ...], ...]
) -> float:
    """Largest principal angle (radians) between the spans of two bases."""
    if not basis_a and not basis_b:
        return 0.0
    qa, _ = np.linalg.qr(np.array(basis_a, dtype=float).T)
    qb, _ = np.linalg.qr(np.array(basis_b, dtype=float).T)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def analyze(
    vs: list[RealVector],
    a: float = 1.0,
    b: float = 4.0,
    opts: AnalyzeOptions | None = None,
) -> DependenceReport:
    """Full certification run for one family of vectors on [a, b].

    Partitions the family into equivalence classes, samples the norm
    matrix, and compares the numeric rank and null space against the
    partition's prediction: rank = number of classes and null space =
    span of the trivial dependencies.  Any disagreement is surfaced in
    the classification, never patched over.
    """
    opts = opts or AnalyzeOptions()
    if not vs:
        raise InvalidInputError("need at least one vector")
    n = len(vs)
    part = partition(vs, opts.equiv_tol)
    grid = make_grid(a, b, opts.grid_count or max(16, 4 * n))
    matrix = build_matrix(vs, grid)
    rank, sigmas, rank_gap = numeric_rank(
        matrix, opts.gap_threshold, opts.sigma_floor
    )
    notes = [
        "equivalence uses relative tolerance "
        f"{opts.equiv_tol:g} on canonical weights; near-boundary inputs "
        "may flip classification"
    ]
    trivial = tuple(trivial_null_basis(part))
    n_classes = len(part.classes)
    if rank is None:
        classification = ILL_CONDITIONED
        null = ()
        angle = None
        notes.append("no admissible singular-value gap; rank undecided")
    else:
        null = _null_basis(matrix, rank)
        if rank > n_classes:
            classification = ILL_CONDITIONED
            angle = None
            notes.append(
                f"numeric rank {rank} exceeds the {n_classes} equivalence "
                "classes: equivalence and rank tolerances disagree"
            )
        elif rank < n_classes:
            classification = UNEXPECTED
            angle = None
            notes.append(
                f"numeric rank {rank} below the {n_classes} equivalence "
                "classes: a non-trivial dependence among the sampled curves"
            )
        else:
            angle = _principal_angle(null, trivial)
            if angle <= opts.angle_tol:
                classification = CONSISTENT
            else:
                classification = UNEXPECTED
                notes.append(
                    f"null space misaligned with trivial dependencies "
                    f"(principal angle {angle:.3e} rad)"
                )
    ratio_checks = _ratio_evidence(vs, part, opts)
    zero_checks = (
        _zero_evidence(vs, part, opts) if opts.include_zero_evidence else ()
    )
    return DependenceReport(
        matrix=matrix,
        partition=part,
        singular_values=sigmas,
        numeric_rank=rank,
        rank_gap=rank_gap,
        null_basis=null,
        principal_angle=angle,
        classification=classification,
        ratio_checks=ratio_checks,
        zero_checks=zero_checks,
        notes=tuple(notes),
    )


def _ratio_evidence(
    vs: list[RealVector], part: EquivalencePartition, opts: AnalyzeOptions
) -> tuple[tuple[int, int, RatioFit], ...]:
    """Ratio fits backing the partition: members against their class
    representative (residual ~ 0 expected) and representatives pairwise
    (residual visibly positive expected)."""
    polys = {k: from_vector(vs[k], opts.merge_tol) for k in range(len(vs))}
    samples = list(opts.ratio_samples) if opts.ratio_samples else None
    checks = []
    reps = [cls[0] for cls in part.classes]
    for cls in part.classes:
        rep = cls[0]
        for k in cls[1:]:
            checks.append((k, rep, ratio_factor(polys[k], polys[rep], samples)))
    for i, ra in enumerate(reps):
        for rb in reps[i + 1 :]:
            checks.append((ra, rb, ratio_factor(polys[ra], polys[rb], samples)))
    return tuple(checks)


def _zero_evidence(
    vs: list[RealVector], part: EquivalencePartition, opts: AnalyzeOptions
) -> tuple[tuple[int, int, bool], ...]:
    """Zero-multiset comparisons for class representatives, pairwise."""
    polys = {k: from_vector(vs[k], opts.merge_tol) for k in range(len(vs))}
    reps = [cls[0] for cls in part.classes]
    checks = []
    for i, ra in enumerate(reps):
        for rb in reps[i + 1 :]:
            checks.append(
                (ra, rb, zero_multiset_equal(polys[ra], polys[rb], opts.zero_window))
            )
    return tuple(checks)
