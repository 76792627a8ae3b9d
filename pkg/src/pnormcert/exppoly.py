"""Exponential sums with positive integer coefficients.

Builds f(p) = sum_j c_j * exp(beta_j * p) from a real vector (beta_j the
logs of the non-zero coordinate magnitudes, c_j their repetition counts),
evaluates it without overflow for |beta_j * Re p| <= 700, counts and
isolates its complex zeros by contour integration of f'/f over rectangle
boundaries, and recovers the a * exp(beta * p) ratio between two sums.

Every contour integral here is a winding-number computation: the true
value is an integer (or a multiplicity-weighted zero centroid), which is
what lets the quadrature run with an aggressive acceptance test.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundaryProximityError,
    InvalidInputError,
    QuadratureError,
    SingularEvaluationError,
)
from .vectors import RealVector

DEFAULT_MERGE_TOL = 1e-12
DEFAULT_QUAD_TOL = 1e-3
# Level-to-level change below which the winding integral counts as stable.
_STEP_CHANGE_TOL = 1e-4
# Relative |f| on a contour below which the contour is deemed inadmissible.
_BOUNDARY_REL_MIN = 1e-8
_INFLATION_FACTOR = 1.0 + 2.0**-5
_MAX_LEVELS = 8
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class ExpPoly:
    """f(p) = sum of multiplicity * exp(exponent * p), exponents strictly increasing."""

    terms: tuple[tuple[float, int], ...]

    def __post_init__(self) -> None:
        terms = tuple((float(b), int(m)) for b, m in self.terms)
        if not terms:
            raise InvalidInputError("exponential sum needs at least one term")
        for b, m in terms:
            if not math.isfinite(b):
                raise InvalidInputError("exponents must be finite")
            if m < 1:
                raise InvalidInputError("term multiplicities must be positive integers")
        if any(b1 >= b2 for (b1, _), (b2, _) in zip(terms, terms[1:])):
            raise InvalidInputError("exponents must be strictly increasing")
        object.__setattr__(self, "terms", terms)

    @property
    def exponents(self) -> np.ndarray:
        return np.array([b for b, _ in self.terms])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([float(m) for _, m in self.terms])

    @property
    def degree(self) -> int:
        """Total coefficient mass; equals the source vector's non-zero count."""
        return sum(m for _, m in self.terms)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned search window in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self) -> None:
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise InvalidInputError("rectangle must have positive width and height")

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def corners(self) -> tuple[complex, complex, complex, complex]:
        """Counterclockwise from the bottom-left corner."""
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )

    def contains(self, z: complex) -> bool:
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max

    def inflate(self, factor: float) -> "Rectangle":
        """Scale width and height by ``factor`` about the center."""
        cx = 0.5 * (self.re_min + self.re_max)
        cy = 0.5 * (self.im_min + self.im_max)
        hw = 0.5 * self.width * factor
        hh = 0.5 * self.height * factor
        return Rectangle(cx - hw, cx + hw, cy - hh, cy + hh)

    def split(self, x: float, y: float) -> tuple["Rectangle", ...]:
        """Quadrisect at the interior point (x, y)."""
        return (
            Rectangle(self.re_min, x, self.im_min, y),
            Rectangle(x, self.re_max, self.im_min, y),
            Rectangle(self.re_min, x, y, self.im_max),
            Rectangle(x, self.re_max, y, self.im_max),
        )


@dataclass(frozen=True)
class Zero:
    """One isolated zero (or unresolved cluster) with its multiplicity.

    ``refined`` is False when Newton polishing did not converge and the
    location is the contour centroid only (always the case for clusters).
    """

    location: complex
    multiplicity: int
    refined: bool = True


@dataclass(frozen=True)
class ZeroSet:
    """Zeros found inside ``window``, sorted by (Re, Im); total counts multiplicity."""

    zeros: tuple[Zero, ...]
    window: Rectangle
    total: int


@dataclass(frozen=True)
class RatioFit:
    """Best fit f(p) ~ a * exp(beta * p) * g(p) over a real sample set."""

    a: float
    beta: float
    residual: float


@dataclass(frozen=True)
class ZeroSearchOptions:
    quad_tol: float = DEFAULT_QUAD_TOL
    cluster_diameter: float = 1e-6
    newton_rel_target: float = 1e-12
    max_newton_iters: int = 60
    max_inflations: int = 8
    max_depth: int = 64


def from_vector(v: RealVector, merge_tol: float = DEFAULT_MERGE_TOL) -> ExpPoly:
    """Exponential sum of the norm curve of ``v``: exponents ln|v_j|, zeros dropped.

    Exponents within ``merge_tol`` (absolute) of each other collapse into one
    term with summed multiplicity, so repeated coordinate magnitudes become
    integer coefficients.
    """
    if merge_tol < 0:
        raise InvalidInputError("merge_tol must be non-negative")
    betas = sorted(math.log(m) for m in v.nonzero_magnitudes())
    terms: list[tuple[float, int]] = []
    group_start = betas[0]
    count = 0
    for b in betas:
        if count and b - group_start > merge_tol:
            terms.append((group_start, count))
            group_start = b
            count = 0
        count += 1
    terms.append((group_start, count))
    return ExpPoly(tuple(terms))


def _stable_parts(f: ExpPoly, ps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (M, S) with f(ps) = exp(M) * S and every summand of S bounded.

    M is the largest real part over terms of exponent * p, so the residual
    sum S has all term moduli <= their coefficients: no overflow as long as
    |M| stays under ~709.
    """
    betas = f.exponents
    mults = f.multiplicities
    re = np.real(ps)
    m_val = np.maximum(betas[0] * re, betas[-1] * re)
    expo = np.exp(betas[:, None] * ps[None, :] - m_val[None, :])
    s_val = (mults[:, None] * expo).sum(axis=0)
    return m_val, s_val


def _stable_parts_with_derivative(
    f: ExpPoly, ps: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Like _stable_parts but also f' / exp(M) and the all-positive bound on |S|."""
    betas = f.exponents
    mults = f.multiplicities
    re = np.real(ps)
    m_val = np.maximum(betas[0] * re, betas[-1] * re)
    expo = np.exp(betas[:, None] * ps[None, :] - m_val[None, :])
    weighted = mults[:, None] * expo
    s_val = weighted.sum(axis=0)
    ds_val = (betas[:, None] * weighted).sum(axis=0)
    bound = np.abs(weighted).sum(axis=0)
    return m_val, s_val, ds_val, bound


def evaluate(f: ExpPoly, p: complex) -> complex:
    """f(p), overflow-safe for |exponent * Re p| <= 700."""
    ps = np.asarray([complex(p)])
    m_val, s_val = _stable_parts(f, ps)
    return complex(np.exp(m_val[0]) * s_val[0])


def evaluate_log(f: ExpPoly, p: complex) -> complex:
    """Principal log of f(p), imaginary part in (-pi, pi].

    Computed as M + log(S) with the dominant real exponent factored out, so
    large |Re(exponent * p)| never overflows.  Raises SingularEvaluationError
    when |f(p)| falls below 1e-12 of the local term scale.
    """
    ps = np.asarray([complex(p)])
    m_val, s_val = _stable_parts(f, ps)
    s = complex(s_val[0])
    if abs(s) <= 1e-12 * f.degree:
        raise SingularEvaluationError(f"f is numerically zero at p={p!r}")
    return complex(m_val[0] + cmath.log(s))


def derivative_value(f: ExpPoly, p: complex) -> complex:
    """f'(p) = sum of multiplicity * exponent * exp(exponent * p)."""
    ps = np.asarray([complex(p)])
    m_val, _, ds_val, _ = _stable_parts_with_derivative(f, ps)
    return complex(np.exp(m_val[0]) * ds_val[0])


def log_derivative(f: ExpPoly, p: complex) -> complex:
    """f'(p)/f(p); the exp(M) factors cancel, so this never overflows."""
    ps = np.asarray([complex(p)])
    _, s_val, ds_val, _ = _stable_parts_with_derivative(f, ps)
    s = complex(s_val[0])
    if s == 0:
        raise SingularEvaluationError(f"f vanishes at p={p!r}")
    return complex(ds_val[0] / s)


def relative_magnitude(f: ExpPoly, p: complex) -> float:
    """|f(p)| divided by the local term scale sum_j c_j exp(beta_j Re p); in [0, 1]."""
    ps = np.asarray([complex(p)])
    _, s_val, _, bound = _stable_parts_with_derivative(f, ps)
    return float(abs(s_val[0]) / bound[0])


# ---------------------------------------------------------------------------
# Contour quadrature over rectangle boundaries
# ---------------------------------------------------------------------------


def _edge_quadrature(z0: complex, z1: complex, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for integrating along the segment z0 -> z1."""
    dz = z1 - z0
    centers = (np.arange(panels) + 0.5) / panels
    offsets = _GAUSS_NODES / (2.0 * panels)
    t = (centers[:, None] + offsets[None, :]).ravel()
    pts = z0 + t * dz
    wts = np.tile(_GAUSS_WEIGHTS / (2.0 * panels), panels) * dz
    return pts, wts


def _base_panels(length: float) -> int:
    return max(4, min(160, math.ceil(1.25 * length)))


def _contour_points(rect: Rectangle, level: int) -> tuple[np.ndarray, np.ndarray]:
    corners = rect.corners
    pts_parts = []
    wts_parts = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        panels = _base_panels(abs(b - a)) * 2**level
        pts, wts = _edge_quadrature(a, b, panels)
        pts_parts.append(pts)
        wts_parts.append(wts)
    return np.concatenate(pts_parts), np.concatenate(wts_parts)


def _contour_sums(
    f: ExpPoly, rect: Rectangle, level: int, check_boundary: bool
) -> tuple[complex, complex]:
    """(1/2πi) ∮ f'/f dp and (1/2πi) ∮ p f'/f dp over the rectangle boundary."""
    pts, wts = _contour_points(rect, level)
    _, s_val, ds_val, bound = _stable_parts_with_derivative(f, pts)
    if check_boundary:
        rel_min = float(np.min(np.abs(s_val) / bound))
        if rel_min < _BOUNDARY_REL_MIN:
            raise BoundaryProximityError(
                f"contour of {rect} passes within relative magnitude "
                f"{rel_min:.2e} of a zero; inflate the window",
                suggested_inflation=_INFLATION_FACTOR,
            )
    integrand = ds_val / s_val
    two_pi_i = 2j * math.pi
    w0 = complex((wts * integrand).sum() / two_pi_i)
    w1 = complex((wts * pts * integrand).sum() / two_pi_i)
    return w0, w1


def count_zeros(f: ExpPoly, rect: Rectangle, quad_tol: float = DEFAULT_QUAD_TOL) -> int:
    """Number of zeros of f inside ``rect``, counted with multiplicity.

    Adaptive composite quadrature of f'/f per edge; accepted once the value
    sits within ``quad_tol`` of an integer and moves by < 1e-4 when the
    panel count doubles.  Raises BoundaryProximityError when the boundary
    runs too close to a zero (callers may inflate and retry) and
    QuadratureError when no stable integer emerges.
    """
    count, _ = _count_adaptive(f, rect, quad_tol, check_boundary=True)
    return count


def _count_adaptive(
    f: ExpPoly, rect: Rectangle, quad_tol: float, check_boundary: bool
) -> tuple[int, complex]:
    prev: complex | None = None
    for level in range(_MAX_LEVELS):
        w0, w1 = _contour_sums(f, rect, level, check_boundary and level == 0)
        if not (math.isfinite(w0.real) and math.isfinite(w0.imag)):
            prev = None
            continue
        if prev is not None and abs(w0 - prev) < _STEP_CHANGE_TOL:
            n = round(w0.real)
            if n >= 0 and abs(w0 - n) < quad_tol:
                return n, w1
            # A winding stable at a half-integer means a zero sits on the
            # contour itself; on an outer window that calls for inflation.
            if abs(w0 - (math.floor(w0.real) + 0.5)) < quad_tol:
                if check_boundary:
                    raise BoundaryProximityError(
                        f"winding over {rect} stabilized at {w0.real:.4f}: "
                        "a zero lies on the contour",
                        suggested_inflation=_INFLATION_FACTOR,
                    )
                raise QuadratureError(
                    f"split contour of {rect} runs through a zero"
                )
        prev = w0
    raise QuadratureError(
        f"winding integral over {rect} did not stabilize on an integer "
        f"(last value {prev})"
    )


def _moment_centroid(f: ExpPoly, rect: Rectangle, count: int) -> complex | None:
    """Multiplicity-weighted zero centroid over ``rect``, or None if unstable."""
    prev: complex | None = None
    for level in range(_MAX_LEVELS):
        _, w1 = _contour_sums(f, rect, level, check_boundary=False)
        c = w1 / count
        if prev is not None and abs(c - prev) <= 1e-9 * max(1.0, abs(c)):
            return c
        prev = c
    return None


def _cluster_locate(
    f: ExpPoly, rect: Rectangle, count: int, opts: ZeroSearchOptions
) -> complex:
    """Centroid of the zero cluster filling ``rect``.

    The moment integral over a box of the cluster's own (tiny) scale drowns
    in cancellation noise, so widen to an enclosing square, shrinking from a
    comfortable size until the zero count over it matches: that box holds
    exactly this cluster and its contour is far enough out for a clean
    centroid.
    """
    cx = 0.5 * (rect.re_min + rect.re_max)
    cy = 0.5 * (rect.im_min + rect.im_max)
    min_half = 0.5 * max(rect.width, rect.height)
    h = max(0.06, 1.5 * min_half)
    while h >= min_half:
        box = Rectangle(cx - h, cx + h, cy - h, cy + h)
        try:
            n, _ = _count_adaptive(f, box, opts.quad_tol, check_boundary=False)
        except QuadratureError:
            n = -1
        if n == count:
            c = _moment_centroid(f, box, count)
            if c is not None:
                return c
        h /= 2.0
    c = _moment_centroid(f, rect, count)
    return c if c is not None else complex(cx, cy)


def _newton_polish(
    f: ExpPoly, z0: complex, rect: Rectangle, opts: ZeroSearchOptions
) -> tuple[complex, bool]:
    """Refine a simple-zero estimate; fall back to the contour value on failure."""
    z = z0
    reach = 2.0 * max(rect.width, rect.height)
    for _ in range(opts.max_newton_iters):
        ps = np.asarray([z])
        _, s_val, ds_val, bound = _stable_parts_with_derivative(f, ps)
        s = complex(s_val[0])
        ds = complex(ds_val[0])
        if abs(s) <= opts.newton_rel_target * float(bound[0]):
            return z, True
        if ds == 0 or not (math.isfinite(s.real) and math.isfinite(s.imag)):
            break
        step = s / ds
        z_new = z - step
        if abs(z_new - z0) > reach:
            break
        z = z_new
        if abs(step) <= 1e-17 * max(1.0, abs(z)):
            break
    if relative_magnitude(f, z) <= opts.newton_rel_target:
        return z, True
    return z0, False


def _ranked_split_lines(
    f: ExpPoly, lo: float, hi: float, cross_lo: float, cross_hi: float, vertical: bool
) -> list[float]:
    """Candidate split coordinates in (lo, hi), best zero clearance first.

    Samples |f| (relative to the term scale) along each candidate
    full-length line and ranks by the minimum: lines running near a zero
    sort last.  No hard cutoff; the quadrature convergence test is the
    final arbiter.
    """
    fractions = (0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65, 0.3, 0.7)
    cross = np.linspace(cross_lo, cross_hi, 65)
    scored: list[tuple[float, float]] = []
    for frac in fractions:
        coord = lo + frac * (hi - lo)
        line = (coord + 1j * cross) if vertical else (cross + 1j * coord)
        _, s_val, _, bound = _stable_parts_with_derivative(f, line)
        rel = float(np.min(np.abs(s_val) / bound))
        scored.append((rel, coord))
    scored.sort(reverse=True)
    return [coord for _, coord in scored]


def _isolate(
    f: ExpPoly, rect: Rectangle, count: int, opts: ZeroSearchOptions, depth: int
) -> list[Zero]:
    if count == 0:
        return []
    if count > 1 and rect.diameter > opts.cluster_diameter and depth < opts.max_depth:
        xs = _ranked_split_lines(
            f, rect.re_min, rect.re_max, rect.im_min, rect.im_max, True
        )
        ys = _ranked_split_lines(
            f, rect.im_min, rect.im_max, rect.re_min, rect.re_max, False
        )
        for x, y in zip(xs[:3], ys[:3]):
            try:
                quads = rect.split(x, y)
                counts = [
                    _count_adaptive(f, q, opts.quad_tol, check_boundary=False)[0]
                    for q in quads
                ]
            except QuadratureError:
                continue
            if sum(counts) != count:
                raise QuadratureError(
                    f"subdivision of {rect} lost zeros: {counts} vs parent {count}"
                )
            found: list[Zero] = []
            for q, c in zip(quads, counts):
                found.extend(_isolate(f, q, c, opts, depth + 1))
            return found
        # No subdivision stabilized: the zeros are too tightly packed for
        # contour work at this scale.  Report the group as one cluster; for
        # a true multiple zero the relocated centroid is exact.
    if count == 1:
        center = _moment_centroid(f, rect, 1)
        if center is None:
            center = complex(
                0.5 * (rect.re_min + rect.re_max), 0.5 * (rect.im_min + rect.im_max)
            )
        z, refined = _newton_polish(f, center, rect, opts)
        return [Zero(z, 1, refined)]
    return [Zero(_cluster_locate(f, rect, count, opts), count, False)]


def find_zeros(
    f: ExpPoly, rect: Rectangle, opts: ZeroSearchOptions | None = None
) -> ZeroSet:
    """Locate all zeros of f inside ``rect`` with multiplicities.

    The window inflates by small factors (up to ``opts.max_inflations``
    times) when its boundary starts out too close to a zero; the window
    actually used is recorded on the result.  Simple zeros are Newton
    polished to |f(z)| <= 1e-12 of the local term scale; clusters that
    resist subdivision down to diameter 1e-6 are reported as one zero with
    summed multiplicity and ``refined=False``.
    """
    opts = opts or ZeroSearchOptions()
    window = rect
    total: int | None = None
    for attempt in range(opts.max_inflations + 1):
        try:
            total = count_zeros(f, window, opts.quad_tol)
            break
        except BoundaryProximityError as err:
            if attempt == opts.max_inflations:
                raise
            window = window.inflate(err.suggested_inflation)
    assert total is not None
    zeros = _isolate(f, window, total, opts, 0) if total else []
    zeros.sort(key=lambda z: (z.location.real, z.location.imag))
    return ZeroSet(tuple(zeros), window, total)


def zero_multiset_equal(
    f: ExpPoly,
    g: ExpPoly,
    rect: Rectangle,
    match_tol: float = 1e-6,
    opts: ZeroSearchOptions | None = None,
) -> bool:
    """Whether f and g have the same zero multiset inside ``rect``.

    Both zero sets are computed over one shared window (inflated jointly if
    either boundary is inadmissible), then matched greedily nearest-first;
    a match requires equal multiplicities and distance <= ``match_tol``.
    """
    opts = opts or ZeroSearchOptions()
    window = rect
    for attempt in range(opts.max_inflations + 1):
        try:
            count_zeros(f, window, opts.quad_tol)
            count_zeros(g, window, opts.quad_tol)
            break
        except BoundaryProximityError as err:
            if attempt == opts.max_inflations:
                raise
            window = window.inflate(err.suggested_inflation)
    zf = find_zeros(f, window, opts)
    zg = find_zeros(g, window, opts)
    if zf.total != zg.total or len(zf.zeros) != len(zg.zeros):
        return False
    remaining = list(zg.zeros)
    for zero in zf.zeros:
        best = None
        best_dist = math.inf
        for j, cand in enumerate(remaining):
            if cand.multiplicity != zero.multiplicity:
                continue
            d = abs(cand.location - zero.location)
            if d < best_dist:
                best, best_dist = j, d
        if best is None or best_dist > match_tol:
            return False
        remaining.pop(best)
    return not remaining


_DEFAULT_RATIO_SAMPLES = tuple(
    4.5 - 3.5 * math.cos(k * math.pi / 15) for k in range(16)
)
"""Chebyshev-Lobatto points on [1, 8]; spread enough that inequivalent
vector pairs cannot hide behind a single a * exp(beta p) factor."""


def ratio_factor(
    f: ExpPoly, g: ExpPoly, sample_ps: list[float] | None = None
) -> RatioFit:
    """Fit f(p) = a * exp(beta p) * g(p) over real samples.

    a = f(0)/g(0) (exact: the ratio of term-count totals), beta the
    least-squares slope of ln(f/(a g)), residual the worst relative
    mismatch on the samples.  When f and g come from equivalent vectors
    with scale ratio c this returns a = 1, beta = ln c, residual ~ 0.
    """
    ps = list(_DEFAULT_RATIO_SAMPLES) if sample_ps is None else [float(p) for p in sample_ps]
    if len(set(ps)) < 2:
        raise InvalidInputError("need at least two distinct sample points")
    a = f.degree / g.degree
    log_a = math.log(a)
    diffs = np.array(
        [evaluate_log(f, p).real - evaluate_log(g, p).real - log_a for p in ps]
    )
    ps_arr = np.array(ps)
    beta = float(np.polyfit(ps_arr, diffs, 1)[0])
    residual = 0.0
    for p, diff in zip(ps, diffs):
        w = diff - beta * p  # log of f / (a exp(beta p) g)
        log_f = evaluate_log(f, p).real
        # |f - a exp(beta p) g| / max(1, |f|) = |1 - exp(-w)| * min(1, |f|)
        damp = 1.0 if log_f >= 0 else math.exp(log_f)
        mismatch = math.inf if -w > 700 else abs(1.0 - math.exp(-w))
        residual = max(residual, mismatch * damp)
    return RatioFit(a, beta, residual)
