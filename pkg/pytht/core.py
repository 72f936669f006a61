"""
Intervals, case classification, composite quadrature grids and the
function types (sampled and piecewise constant) shared by every other
module, together with the smooth mollifier used to build test families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from logging import getLogger
from typing import Any, Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .constants import DEFAULT_POINTS_PER_CELL
from .types import FloatArray, Profile

_logger = getLogger(__name__)


class ValidationException(Exception):
    """
    Raised when the inputs to an operation violate its preconditions.
    The command line tool turns this into exit status 2.
    """

    pass


class DomainException(ValidationException):
    """
    Raised when a function is evaluated outside of its domain, such as
    the Hilbert transform of an indicator exactly at a jump.
    """

    pass


class ConvergenceException(Exception):
    """
    Raised when a numerical procedure cannot produce a trustworthy
    answer, for example a fit with too few resolved points. The command
    line tool turns this into exit status 3.
    """

    pass


@dataclass(frozen=True)
class Interval:
    """
    A finite open interval `(lo, hi)`.

    >>> Interval(0.0, 2.0).length()
    2.0
    >>> Interval.from_text("2,3")
    Interval(lo=2.0, hi=3.0)
    >>> Interval(1.0, 0.0)
    Traceback (most recent call last):
    ...
    pytht.core.ValidationException: interval needs lo < hi, got (1.0, 0.0)
    """

    lo: float

    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValidationException(
                f"interval endpoints must be finite, got ({self.lo}, {self.hi})"
            )
        if not self.lo < self.hi:
            raise ValidationException(
                f"interval needs lo < hi, got ({self.lo}, {self.hi})"
            )

    @staticmethod
    def from_text(text: str) -> Interval:
        """
        Parse the "lo,hi" form used on the command line.
        """
        parts = text.split(",")
        if len(parts) != 2:
            raise ValidationException(f"expected 'lo,hi', got '{text}'")
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValidationException(f"expected 'lo,hi', got '{text}'")
        return Interval(lo, hi)

    def length(self) -> float:
        return self.hi - self.lo

    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, other: Interval) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersection(self, other: Interval) -> Optional[Interval]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo >= hi:
            return None
        return Interval(lo, hi)

    def reflected(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def to_json(self) -> Dict[str, float]:
        return {"lo": self.lo, "hi": self.hi}


class CaseId(Enum):
    COVERED = "Covered"
    INTERIOR = "Interior"
    GAP = "Gap"
    OVERLAP = "Overlap"


Endpoints = Tuple[float, float, float, float]


@dataclass(frozen=True)
class CaseConfig:
    """
    A support interval I and a measurement interval J, classified into
    one of the four cases.

    For Gap and Overlap the canonical endpoints `a1 < a2 <= a3 < a4` are
    stored in a frame where J lies to the left of I. When J lies to the
    right in the original coordinates the frame is the reflection
    `x -> -x` and `reflected` is set.
    """

    interval_i: Interval
    """
    Support of f.
    """

    interval_j: Interval
    """
    Measurement window.
    """

    case_id: CaseId

    endpoints: Optional[Endpoints] = None
    """
    Canonical endpoints, absent for Covered and Interior.
    """

    reflected: bool = False

    def to_canonical(self, x: float) -> float:
        return -x if self.reflected else x

    def from_canonical(self, x: float) -> float:
        return -x if self.reflected else x

    def sorted_endpoints(self) -> Endpoints:
        """
        The four endpoints in ascending order in the original
        coordinates.
        """
        points = sorted(
            [
                self.interval_i.lo,
                self.interval_i.hi,
                self.interval_j.lo,
                self.interval_j.hi,
            ]
        )
        return (points[0], points[1], points[2], points[3])

    def require(self, *cases: CaseId) -> None:
        if self.case_id not in cases:
            names = ", ".join(c.value for c in cases)
            raise ValidationException(
                f"operation needs a {names} configuration, got {self.case_id.value}"
            )

    def to_json(self) -> Dict[str, Any]:
        return {
            "case": self.case_id.value,
            "I": self.interval_i.to_json(),
            "J": self.interval_j.to_json(),
            "endpoints": list(self.endpoints) if self.endpoints else None,
            "reflected": self.reflected,
        }


def classify(i: Interval, j: Interval) -> CaseConfig:
    """
    Classify a pair of intervals.

    >>> classify(Interval(0, 1), Interval(2, 3)).endpoints
    (-3, -2, -1, 0)
    >>> classify(Interval(0, 6), Interval(3, 12)).case_id.value
    'Overlap'
    >>> classify(Interval(0, 1), Interval(-1, 2)).case_id.value
    'Covered'
    """
    if j.contains(i):
        return CaseConfig(i, j, CaseId.COVERED)
    if i.contains(j):
        return CaseConfig(i, j, CaseId.INTERIOR)

    if i.hi <= j.lo or j.hi <= i.lo:
        reflected = j.lo >= i.hi
        ci, cj = (i.reflected(), j.reflected()) if reflected else (i, j)
        endpoints = (cj.lo, cj.hi, ci.lo, ci.hi)
        if cj.hi == ci.lo:
            _logger.debug(f"touching intervals at {cj.hi}, still a gap")
        return CaseConfig(i, j, CaseId.GAP, endpoints, reflected)

    reflected = j.lo > i.lo
    ci, cj = (i.reflected(), j.reflected()) if reflected else (i, j)
    endpoints = (cj.lo, ci.lo, cj.hi, ci.hi)
    return CaseConfig(i, j, CaseId.OVERLAP, endpoints, reflected)


@lru_cache(maxsize=None)
def _legendre(points: int) -> Tuple[FloatArray, FloatArray]:
    nodes, weights = np.polynomial.legendre.leggauss(points)
    return nodes, weights


def gauss_grid(
    interval: Interval, cells: int, points_per_cell: int
) -> Tuple[FloatArray, FloatArray]:
    """
    Composite Gauss-Legendre nodes and weights on equal cells.

    >>> nodes, weights = gauss_grid(Interval(0, 1), 1, 2)
    >>> [round(float(x), 6) for x in nodes]
    [0.211325, 0.788675]
    >>> [round(float(w), 12) for w in weights]
    [0.5, 0.5]
    """
    if cells < 1:
        raise ValidationException(f"need at least one cell, got {cells}")
    if not 2 <= points_per_cell <= 12:
        raise ValidationException(
            f"points per cell must be in 2..12, got {points_per_cell}"
        )
    ref_nodes, ref_weights = _legendre(points_per_cell)
    edges = np.linspace(interval.lo, interval.hi, cells + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halves = 0.5 * np.diff(edges)
    nodes = (mids[:, None] + halves[:, None] * ref_nodes[None, :]).ravel()
    weights = (halves[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    A real function sampled on a quadrature grid over an interval.
    """

    interval: Interval

    nodes: FloatArray

    weights: FloatArray

    values: FloatArray

    profile: Optional[Profile] = field(default=None, repr=False)
    """
    The exact function the samples came from, when there is one.
    """

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if len(self.weights) != n or len(self.values) != n:
            raise ValidationException(
                "nodes, weights and values must have the same length"
            )
        if n == 0:
            raise ValidationException("a grid function needs at least one node")
        if n > 1 and np.any(np.diff(self.nodes) <= 0.0):
            raise ValidationException("grid nodes must be strictly ascending")
        if np.any(self.weights <= 0.0):
            raise ValidationException("quadrature weights must be positive")

    @staticmethod
    def from_callable(
        interval: Interval,
        func: Profile,
        cells: int,
        points_per_cell: int = DEFAULT_POINTS_PER_CELL,
    ) -> GridFunction:
        nodes, weights = gauss_grid(interval, cells, points_per_cell)
        values = np.asarray(func(nodes), dtype=float)
        return GridFunction(interval, nodes, weights, values, func)

    def with_values(self, values: FloatArray) -> GridFunction:
        return GridFunction(
            self.interval, self.nodes, self.weights, np.asarray(values, dtype=float)
        )

    def scaled(self, factor: float) -> GridFunction:
        profile = self.profile
        scaled_profile: Optional[Profile] = None
        if profile is not None:

            def scaled_profile(x: FloatArray) -> FloatArray:
                return factor * profile(x)

        return GridFunction(
            self.interval,
            self.nodes,
            self.weights,
            factor * self.values,
            scaled_profile,
        )

    def norm_l1(self) -> float:
        return float(np.sum(self.weights * np.abs(self.values)))

    def norm_l2(self) -> float:
        return float(np.sqrt(np.sum(self.weights * self.values**2)))

    def norm_linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def tv(self) -> float:
        """
        Variation of the sample sequence, without boundary terms.
        """
        return float(np.sum(np.abs(np.diff(self.values))))

    def inner(self, other: GridFunction) -> float:
        if len(other.nodes) != len(self.nodes) or not np.allclose(
            other.nodes, self.nodes, rtol=0.0, atol=1e-12
        ):
            raise ValidationException("inner product needs a common grid")
        return float(np.sum(self.weights * self.values * other.values))

    def derivative(self) -> GridFunction:
        """
        Centred differences on the (possibly non-uniform) nodes, second
        order accurate in the interior.
        """
        return self.with_values(np.gradient(self.values, self.nodes))

    def resample(
        self, interval: Interval, nodes: FloatArray, weights: FloatArray
    ) -> GridFunction:
        """
        Move to another grid, exactly through the profile when there is
        one and by linear interpolation otherwise.
        """
        if self.profile is not None:
            values = np.asarray(self.profile(nodes), dtype=float)
        else:
            values = np.interp(nodes, self.nodes, self.values, left=0.0, right=0.0)
        return GridFunction(interval, nodes, weights, values, self.profile)

    def masked(self, region: Interval) -> GridFunction:
        """
        The product with the indicator of `region`.
        """
        inside = (self.nodes > region.lo) & (self.nodes < region.hi)
        return self.with_values(np.where(inside, self.values, 0.0))


class Functionals(NamedTuple):
    l1: float
    l2: float
    linf: float
    tv: float


def functionals(f: GridFunction) -> Functionals:
    """
    >>> f = GridFunction.from_callable(Interval(0, 1), lambda x: 0 * x + 2.0, 4, 2)
    >>> tuple(round(v, 12) for v in functionals(f))
    (2.0, 2.0, 2.0, 0.0)
    """
    return Functionals(f.norm_l1(), f.norm_l2(), f.norm_linf(), f.tv())


@dataclass(frozen=True, eq=False)
class StepFunction:
    """
    A piecewise constant function with `levels[k]` on
    `[breakpoints[k], breakpoints[k + 1])`, zero elsewhere.

    >>> f = StepFunction.from_levels((0.0, 1.0), [0.0, 1.0, 0.0])
    >>> round(f.tv(), 12), round(f.tv(compact=True), 12)
    (2.0, 2.0)
    >>> g = StepFunction((0.0, 1.0), (3.0,))
    >>> g.tv(), g.tv(compact=True)
    (0.0, 6.0)
    """

    breakpoints: Tuple[float, ...]

    levels: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.levels) < 1 or len(self.breakpoints) != len(self.levels) + 1:
            raise ValidationException(
                "a step function needs m >= 1 levels and m + 1 breakpoints"
            )
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValidationException("breakpoints must be strictly ascending")

    @staticmethod
    def from_levels(span: Tuple[float, float], levels: Sequence[float]) -> StepFunction:
        """
        Equal cells over `span`.
        """
        edges = np.linspace(span[0], span[1], len(levels) + 1)
        return StepFunction(
            tuple(float(e) for e in edges), tuple(float(v) for v in levels)
        )

    def support(self) -> Interval:
        return Interval(self.breakpoints[0], self.breakpoints[-1])

    def widths(self) -> FloatArray:
        return np.diff(np.asarray(self.breakpoints))

    def tv(self, compact: bool = False) -> float:
        """
        Sum of jumps between adjacent levels; with `compact` the function
        is treated as extended by zero and both outer jumps count.
        """
        levels = np.asarray(self.levels)
        total = float(np.sum(np.abs(np.diff(levels))))
        if compact:
            total += abs(levels[0]) + abs(levels[-1])
        return total

    def norm_l1(self) -> float:
        return float(np.sum(np.abs(self.levels) * self.widths()))

    def norm_l2(self) -> float:
        return float(np.sqrt(np.sum(np.square(self.levels) * self.widths())))

    def has_zero_level(self) -> bool:
        return any(level == 0.0 for level in self.levels)

    def scaled(self, factor: float) -> StepFunction:
        return StepFunction(self.breakpoints, tuple(factor * v for v in self.levels))

    def __call__(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        edges = np.asarray(self.breakpoints)
        index = np.searchsorted(edges, x, side="right") - 1
        inside = (index >= 0) & (index < len(self.levels))
        levels = np.asarray(self.levels)
        return np.where(inside, levels[np.clip(index, 0, len(levels) - 1)], 0.0)

    def sample(
        self,
        interval: Interval,
        cells: int,
        points_per_cell: int = DEFAULT_POINTS_PER_CELL,
    ) -> GridFunction:
        return GridFunction.from_callable(interval, self, cells, points_per_cell)

    def restrict(self, region: Interval) -> StepFunction:
        """
        The product with the indicator of `region`, on the union of both
        sets of breakpoints.
        """
        edges = set(self.breakpoints)
        for x in (region.lo, region.hi):
            if self.breakpoints[0] < x < self.breakpoints[-1]:
                edges.add(x)
        ordered = sorted(edges)
        levels = []
        for a, b in zip(ordered, ordered[1:]):
            mid = 0.5 * (a + b)
            inside = region.lo <= mid <= region.hi
            levels.append(float(self(np.array([mid]))[0]) if inside else 0.0)
        return StepFunction(tuple(ordered), tuple(levels))


_BUMP_POINTS = 96


def _raw_bump(t: FloatArray) -> FloatArray:
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    safe = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe**2)), 0.0)


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    nodes, weights = _legendre(_BUMP_POINTS)
    return float(np.sum(weights * _raw_bump(nodes)))


def bump(t: FloatArray) -> FloatArray:
    """
    The standard C-infinity bump `exp(-1/(1-t^2))` on `(-1, 1)`,
    normalized to unit mass.
    """
    return _raw_bump(t) / _bump_mass()


def smooth_step(s: FloatArray) -> FloatArray:
    """
    The primitive of `bump` from -1, a smooth transition from 0 at
    `s = -1` to 1 at `s = 1`.

    >>> [round(float(v), 6) for v in smooth_step(np.array([-2.0, 0.0, 2.0]))]
    [0.0, 0.5, 1.0]
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    inside = np.clip(s, -1.0, 1.0)
    nodes, weights = _legendre(_BUMP_POINTS)
    half = 0.5 * (inside + 1.0)
    t = -1.0 + half[:, None] * (nodes[None, :] + 1.0)
    partial = half * np.sum(weights[None, :] * bump(t), axis=1)
    out = np.where(s <= -1.0, 0.0, np.where(s >= 1.0, 1.0, partial))
    return np.clip(out, 0.0, 1.0)


def mollify(
    f: StepFunction,
    support: Interval,
    width: float,
    cells: int = 1024,
    points_per_cell: int = 4,
    strict: bool = True,
) -> GridFunction:
    """
    A smooth approximation of `f`, compactly supported in `support`.

    The breakpoints are first shrunk about the centre of `support` so that
    the convolution with a bump of half-width `width` stays inside, then
    each piece `level * chi_[a, b]` becomes
    `level * (S((x - a)/width) - S((x - b)/width))` with `S` the smooth
    step. The result never has more variation than `f` extended by zero.
    """
    if width <= 0.0:
        raise ValidationException(f"mollifier width must be positive, got {width}")
    if 2.0 * width >= support.length():
        raise ValidationException(
            f"mollifier width {width} too large for support of length "
            + f"{support.length()}"
        )
    span = f.support()
    covers = span.lo <= support.lo and support.hi <= span.hi
    if strict and covers and not f.has_zero_level():
        raise ValidationException(
            "step function has no zero on the support, cannot mollify strictly"
        )

    centre = support.midpoint()
    reach = max(abs(span.lo - centre), abs(span.hi - centre))
    ratio = min(1.0, (0.5 * support.length() - width) / reach)
    edges = tuple(centre + ratio * (t - centre) for t in f.breakpoints)
    levels = f.levels
    if ratio < 1.0:
        _logger.debug(f"shrinking breakpoints by {ratio:.6f} before mollifying")

    def profile(x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for level, a, b in zip(levels, edges, edges[1:]):
            if level == 0.0:
                continue
            out += level * (smooth_step((x - a) / width) - smooth_step((x - b) / width))
        return out

    return GridFunction.from_callable(support, profile, cells, points_per_cell)
