"""
Singular value decomposition of the assembled operator and, independently,
eigenpairs of the second order differential operator that commutes with
it in the gap case:

    (L u)(x) = (P(x) u'(x))' + 2 (x - s)^2 u(x),  P(x) = prod (x - a_i),

with `s` the mean of the four endpoints. `P` vanishes at both ends of I,
which closes the problem without boundary conditions. The discretization
is cell centred and conservative: `-P` is sampled at cell faces (exactly
zero on the two outer faces) and the result is a symmetric tridiagonal
matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from logging import getLogger
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.stats import kendalltau

from .constants import RESOLUTION_FLOOR
from .core import (
    CaseConfig,
    CaseId,
    ConvergenceException,
    GridFunction,
    Interval,
    ValidationException,
)
from .operator import OperatorMatrix
from .types import FloatArray

_logger = getLogger(__name__)

_ABSOLUTE_FLOOR = 1e-14

_NODES_PER_MODE = 10

_SIGN_THRESHOLD = 1e-3

PRIMITIVE_FIRST_MODE = 5
"""
First mode of the primitive decay fit; the maxima of lower modes are
still far from their asymptotics.
"""


class SpectralSource(Enum):
    OPERATOR_SVD = "OperatorSVD"
    STURM_LIOUVILLE = "SturmLiouville"


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    config: CaseConfig

    sigmas: FloatArray
    """
    Descending. Empty for the SturmLiouville source, which has no
    singular values of its own.
    """

    u_funcs: Tuple[GridFunction, ...]

    v_funcs: Tuple[GridFunction, ...]

    source: SpectralSource

    truncated: bool = False
    """
    Set when fewer modes than requested were resolved.
    """

    def __len__(self) -> int:
        return len(self.u_funcs)


def _sign_fixed(vector: FloatArray) -> Tuple[FloatArray, float]:
    threshold = _SIGN_THRESHOLD * np.max(np.abs(vector))
    first = int(np.argmax(np.abs(vector) > threshold))
    sign = -1.0 if vector[first] < 0.0 else 1.0
    return sign * vector, sign


def svd_of_operator(op: OperatorMatrix, k: int) -> SpectralDecomposition:
    """
    The top `k` singular triples. Singular functions are returned as
    L2-normalized grid functions on the cell centres of each mesh.
    """
    if not 1 <= k <= min(op.cells_i, op.cells_j):
        raise ValidationException(
            f"k must be in 1..{min(op.cells_i, op.cells_j)}, got {k}"
        )
    left, sigmas, right = np.linalg.svd(op.entries, full_matrices=False)
    resolved = int(np.sum(sigmas[:k] >= _ABSOLUTE_FLOOR))
    truncated = resolved < k
    if truncated:
        _logger.warning(
            f"only {resolved} of {k} singular values are above {_ABSOLUTE_FLOOR}"
        )

    u_funcs: List[GridFunction] = []
    v_funcs: List[GridFunction] = []
    for n in range(resolved):
        u, sign = _sign_fixed(right[n])
        v = sign * left[:, n]
        u_funcs.append(op.grid_i(u / math.sqrt(op.h_i)))
        v_funcs.append(op.grid_j(v / math.sqrt(op.h_j)))
    return SpectralDecomposition(
        config=op.config,
        sigmas=sigmas[:resolved].copy(),
        u_funcs=tuple(u_funcs),
        v_funcs=tuple(v_funcs),
        source=SpectralSource.OPERATOR_SVD,
        truncated=truncated,
    )


@dataclass(frozen=True, eq=False)
class SturmLiouvilleSpec:
    interval: Interval

    endpoints: Tuple[float, float, float, float]
    """
    The four interval endpoints, ascending, in the original coordinates.
    """

    sigma_center: float

    nodes: FloatArray
    """
    Cell centres on I.
    """

    h: float

    potential: FloatArray
    """
    `2 (x - sigma_center)^2` at the nodes.
    """

    flux_coeffs: FloatArray
    """
    `P` at the cell faces; zero on both outer faces, negative inside.
    """

    @staticmethod
    def from_config(config: CaseConfig, cells: int) -> SturmLiouvilleSpec:
        config.require(CaseId.GAP)
        if cells < 2:
            raise ValidationException(f"need at least two cells, got {cells}")
        interval = config.interval_i
        endpoints = config.sorted_endpoints()
        center = sum(endpoints) / 4.0
        faces = np.linspace(interval.lo, interval.hi, cells + 1)
        flux = np.ones_like(faces)
        for a in endpoints:
            flux = flux * (faces - a)
        flux[0] = 0.0
        flux[-1] = 0.0
        nodes = 0.5 * (faces[:-1] + faces[1:])
        return SturmLiouvilleSpec(
            interval=interval,
            endpoints=endpoints,
            sigma_center=center,
            nodes=nodes,
            h=interval.length() / cells,
            potential=2.0 * (nodes - center) ** 2,
            flux_coeffs=flux,
        )

    @property
    def cells(self) -> int:
        return len(self.nodes)

    def tridiagonal(self) -> Tuple[FloatArray, FloatArray]:
        """
        Diagonal and off-diagonal of the discrete operator.
        """
        r = -self.flux_coeffs
        h2 = self.h * self.h
        diagonal = (r[:-1] + r[1:]) / h2 + self.potential
        off = -r[1:-1] / h2
        return diagonal, off

    def grid(self, values: FloatArray) -> GridFunction:
        return GridFunction(
            self.interval,
            self.nodes,
            np.full(self.cells, self.h),
            np.asarray(values, dtype=float),
        )

    def matvec(self, values: FloatArray) -> FloatArray:
        diagonal, off = self.tridiagonal()
        out = diagonal * values
        out[:-1] += off * values[1:]
        out[1:] += off * values[:-1]
        return out


class SturmLiouvilleEigs(NamedTuple):
    lambdas: FloatArray
    """
    Ascending.
    """

    eigenfunctions: Tuple[GridFunction, ...]

    spec: SturmLiouvilleSpec

    def as_decomposition(self, config: CaseConfig) -> SpectralDecomposition:
        return SpectralDecomposition(
            config=config,
            sigmas=np.zeros(0),
            u_funcs=self.eigenfunctions,
            v_funcs=(),
            source=SpectralSource.STURM_LIOUVILLE,
        )


def sturm_liouville_eigs(spec: SturmLiouvilleSpec, k: int) -> SturmLiouvilleEigs:
    if k < 1:
        raise ValidationException(f"need at least one eigenpair, got {k}")
    if spec.cells < _NODES_PER_MODE * (k + 1):
        raise ValidationException(
            f"{spec.cells} cells cannot resolve {k} eigenfunctions, "
            + f"need at least {_NODES_PER_MODE * (k + 1)}"
        )
    diagonal, off = spec.tridiagonal()
    lambdas, vectors = eigh_tridiagonal(
        diagonal, off, select="i", select_range=(0, k - 1)
    )
    functions = []
    for n in range(k):
        vector, _ = _sign_fixed(vectors[:, n])
        functions.append(spec.grid(vector / math.sqrt(spec.h)))
    _logger.debug(f"Sturm-Liouville eigenvalues: {lambdas[:min(k, 5)]}")
    return SturmLiouvilleEigs(lambdas, tuple(functions), spec)


def _on_common_grid(
    a: GridFunction, b: GridFunction
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    if len(a.nodes) < len(b.nodes):
        a, b = b, a
        swap = True
    else:
        swap = False
    other = np.interp(a.nodes, b.nodes, b.values)
    if swap:
        return other, a.values, a.weights
    return a.values, other, a.weights


def cross_validate(
    svd: SpectralDecomposition,
    sl: SturmLiouvilleEigs,
    pairs: Optional[Sequence[Tuple[int, int]]] = None,
) -> FloatArray:
    """
    `|<u_n, w_m>|` per pair of an SVD singular function and a
    Sturm-Liouville eigenfunction, after moving both onto the finer grid
    by linear interpolation. Pairs default to `(n, n)` over the modes
    both sides have.
    """
    if pairs is None:
        count = min(len(svd.u_funcs), len(sl.eigenfunctions))
        pairs = [(n, n) for n in range(count)]
    out = np.zeros(len(pairs))
    for index, (n, m) in enumerate(pairs):
        if n >= len(svd.u_funcs) or m >= len(sl.eigenfunctions):
            raise ValidationException(f"mode pair ({n}, {m}) not available")
        u, w, weights = _on_common_grid(svd.u_funcs[n], sl.eigenfunctions[m])
        norm = math.sqrt(np.sum(weights * u * u) * np.sum(weights * w * w))
        out[index] = abs(float(np.sum(weights * u * w))) / norm
    return out


def _check_on_grid(spec: SturmLiouvilleSpec, f: GridFunction) -> None:
    if len(f.nodes) != spec.cells or not np.allclose(
        f.nodes, spec.nodes, rtol=0.0, atol=1e-12
    ):
        raise ValidationException(
            "function must be sampled on the Sturm-Liouville grid"
        )


def apply_li_power(
    spec: SturmLiouvilleSpec, f: GridFunction, m: int, check_support: bool = True
) -> GridFunction:
    """
    `L^m f` with the discrete operator. With `check_support` the first and
    last `max(m, 1)` cells of `f` must vanish.
    """
    if m < 0:
        raise ValidationException(f"power must be non-negative, got {m}")
    _check_on_grid(spec, f)
    values = np.asarray(f.values, dtype=float)
    if check_support:
        guard = max(m, 1)
        scale = np.max(np.abs(values)) if len(values) else 0.0
        edge = np.concatenate([values[:guard], values[-guard:]])
        if np.any(np.abs(edge) > 1e-12 * scale):
            raise ValidationException("support touches the boundary cells of I")
    for _ in range(m):
        values = spec.matvec(values)
    return spec.grid(values)


def quadratic_form_identity(
    spec: SturmLiouvilleSpec, f: GridFunction
) -> Tuple[float, float]:
    """
    Both sides of `<L f, f> = int (-P) f'^2 + int 2 (x - s)^2 f^2` at the
    discrete level.
    """
    _check_on_grid(spec, f)
    values = f.values
    lhs = float(spec.h * np.sum(spec.matvec(values) * values))
    r = -spec.flux_coeffs[1:-1]
    energy = float(np.sum(r * np.diff(values) ** 2) / spec.h)
    rhs = energy + float(spec.h * np.sum(spec.potential * values**2))
    return lhs, rhs


def eigen_residual(spec: SturmLiouvilleSpec, u: GridFunction) -> float:
    """
    `||L u - q u|| / (q ||u||)` with `q` the Rayleigh quotient, for a
    function given on any grid over I.
    """
    values = np.interp(spec.nodes, u.nodes, u.values)
    applied = spec.matvec(values)
    quotient = float(np.sum(applied * values) / np.sum(values * values))
    residual = np.linalg.norm(applied - quotient * values)
    return float(residual / (quotient * np.linalg.norm(values)))


class SigmaFit(NamedTuple):
    rate: float
    """
    Fitted `-d ln(sigma_n) / dn`.
    """

    intercept: float

    n_values: Tuple[int, ...]

    r_squared: float


def _linear_fit(x: FloatArray, y: FloatArray) -> Tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    total = float(np.sum((y - np.mean(y)) ** 2))
    r_squared = 1.0 - float(np.sum((y - predicted) ** 2)) / total if total > 0 else 1.0
    return float(slope), float(intercept), r_squared


def sigma_decay_fit(
    svd: SpectralDecomposition,
    n_range: Optional[Tuple[int, int]] = None,
    min_points: int = 5,
) -> SigmaFit:
    """
    Least squares slope of `ln(sigma_n)` against `n` over the modes with
    `sigma_n >= RESOLUTION_FLOOR * sigma_0`, optionally limited to an
    inclusive `n_range`.
    """
    sigmas = np.asarray(svd.sigmas)
    if len(sigmas) == 0:
        raise ConvergenceException("no singular values to fit")
    n = np.arange(len(sigmas))
    keep = sigmas >= RESOLUTION_FLOOR * sigmas[0]
    if n_range is not None:
        keep &= (n >= n_range[0]) & (n <= n_range[1])
    if int(np.sum(keep)) < min_points:
        raise ConvergenceException(
            f"only {int(np.sum(keep))} resolved singular values, need {min_points}"
        )
    slope, intercept, r_squared = _linear_fit(
        n[keep].astype(float), np.log(sigmas[keep])
    )
    _logger.info(f"singular value decay rate {-slope:.4f} (R^2 {r_squared:.5f})")
    return SigmaFit(-slope, intercept, tuple(int(v) for v in n[keep]), r_squared)


def _cell_integrals(f: GridFunction, u: GridFunction) -> FloatArray:
    # Integrals of f over the cells the piecewise constant u lives on.
    edges = np.linspace(u.interval.lo, u.interval.hi, len(u.nodes) + 1)
    index = np.searchsorted(edges, f.nodes, side="right") - 1
    index = np.clip(index, 0, len(u.nodes) - 1)
    return np.bincount(index, weights=f.weights * f.values, minlength=len(u.nodes))


class CoefficientDecay(NamedTuple):
    constant: float
    """
    `max_n n |<f, u_n>| / tv(f)` over `n >= 1`.
    """

    products: Tuple[float, ...]
    """
    `n |<f, u_n>|` for `n >= 1`.
    """

    kendall_tau: float


def coefficient_decay_check(
    svd: SpectralDecomposition, f: GridFunction
) -> CoefficientDecay:
    svd.config.require(CaseId.GAP)
    scale = f.norm_linf()
    if scale == 0.0:
        raise ValidationException("coefficient check needs a nonzero function")
    if abs(f.values[0]) > 1e-8 * scale or abs(f.values[-1]) > 1e-8 * scale:
        raise ValidationException("function must vanish at the ends of I")
    coefficients = np.array(
        [float(np.sum(_cell_integrals(f, u) * u.values)) for u in svd.u_funcs]
    )
    n = np.arange(1, len(coefficients))
    products = n * np.abs(coefficients[1:])
    tau = float(kendalltau(n, products)[0]) if len(n) > 1 else 0.0
    constant = float(np.max(products) / f.tv()) if len(n) else 0.0
    return CoefficientDecay(constant, tuple(float(p) for p in products), tau)


def _primitive(u: GridFunction, from_upper: bool) -> FloatArray:
    mass = u.weights * u.values
    if from_upper:
        return np.cumsum(mass[::-1])[::-1]
    return np.cumsum(mass)


class PrimitiveDecay(NamedTuple):
    n_values: Tuple[int, ...]

    maxima: Tuple[float, ...]
    """
    `max_x |int_{a3}^x u_n|` per mode.
    """

    slope: float
    """
    Log-log slope of the maxima against `n`.
    """


def primitive_decay(
    decomposition: SpectralDecomposition, n_values: Sequence[int]
) -> PrimitiveDecay:
    """
    Maxima of the primitives of the singular functions, started at the
    end of I that faces J.
    """
    config = decomposition.config
    config.require(CaseId.GAP)
    from_upper = config.interval_j.lo >= config.interval_i.hi
    maxima = []
    for n in n_values:
        if n < 1 or n >= len(decomposition.u_funcs):
            raise ValidationException(f"mode {n} not available")
        primitive = _primitive(decomposition.u_funcs[n], from_upper)
        maxima.append(float(np.max(np.abs(primitive))))
    slope, _, _ = _linear_fit(np.log(np.asarray(n_values, dtype=float)), np.log(maxima))
    return PrimitiveDecay(tuple(n_values), tuple(maxima), slope)


def asymptotic_primitive_decay(
    decomposition: SpectralDecomposition, first: int = PRIMITIVE_FIRST_MODE
) -> PrimitiveDecay:
    """
    `primitive_decay` over the resolved modes from `first` on, where the
    maxima follow their `1/n` asymptotics.
    """
    sigmas = np.asarray(decomposition.sigmas)
    floor = RESOLUTION_FLOOR * sigmas[0]
    modes = [n for n in range(max(first, 1), len(sigmas)) if sigmas[n] >= floor]
    if len(modes) < 3:
        raise ConvergenceException(
            f"only {len(modes)} resolved modes from mode {first} on"
        )
    return primitive_decay(decomposition, modes)


class Localization(NamedTuple):
    j_star: Interval
    """
    `J*` in the original coordinates.
    """

    n_values: Tuple[int, ...]

    norms_inside: Tuple[float, ...]
    """
    `||u_n||` on `I` intersected with `J*`.
    """

    norms_outside: Tuple[float, ...]

    rate: float
    """
    Fitted exponential decay rate of `norms_inside`.
    """

    r_squared: float

    primitive_maxima: Tuple[float, ...]
    """
    `max |int_{a3 - mu}^x u_n|` over `x` in `I` outside `J*`.
    """

    primitive_slope: float


def j_star(config: CaseConfig, mu: float) -> Interval:
    """
    The inner window `[a1 + mu, a3 - mu]` of an overlap configuration, in
    the original coordinates.
    """
    config.require(CaseId.OVERLAP)
    assert config.endpoints is not None
    a1, a2, a3, _ = config.endpoints
    if not (mu > 0.0 and a1 + mu < a2 < a3 - mu):
        raise ValidationException(
            f"margin {mu} violates a1 + mu < a2 < a3 - mu for {config.endpoints}"
        )
    ends = sorted([config.from_canonical(a1 + mu), config.from_canonical(a3 - mu)])
    return Interval(ends[0], ends[1])


def overlap_localization(
    svd: SpectralDecomposition,
    mu: float,
    branch_ceiling: float = 0.5,
    tail_ratio: float = 0.5,
) -> Localization:
    """
    Norms of the singular functions on `I` intersected with `J*` for the
    branch of singular values accumulating at zero.

    On a mesh that branch starts with a discretized continuum, singular
    values below `branch_ceiling` that fall slowly and whose functions
    spread over all of I, and only then decays geometrically. The fit
    uses the resolved geometric tail: modes with `sigma_n < branch_ceiling`
    and `sigma_n / sigma_(n-1) < tail_ratio`.
    """
    config = svd.config
    window = j_star(config, mu)
    interval_i = config.interval_i
    inner = interval_i.intersection(window)
    assert inner is not None
    assert config.endpoints is not None
    anchor = config.from_canonical(config.endpoints[2] - mu)

    sigmas = np.asarray(svd.sigmas)
    floor = RESOLUTION_FLOOR * sigmas[0]
    modes = [
        n
        for n in range(1, len(sigmas))
        if floor <= sigmas[n] < branch_ceiling
        and sigmas[n] < tail_ratio * sigmas[n - 1]
    ]
    if len(modes) < 3:
        raise ConvergenceException(
            f"only {len(modes)} resolved modes in the geometric tail of the "
            + "branch towards zero"
        )

    inside_norms, outside_norms, primitive_maxima = [], [], []
    for n in modes:
        u = svd.u_funcs[n]
        inside = (u.nodes > inner.lo) & (u.nodes < inner.hi)
        mass = u.weights * u.values**2
        inside_norms.append(math.sqrt(float(np.sum(mass[inside]))))
        outside_norms.append(math.sqrt(float(np.sum(mass[~inside]))))
        primitive = np.cumsum(u.weights * u.values)
        at_anchor = float(np.interp(anchor, u.nodes, primitive))
        primitive_maxima.append(float(np.max(np.abs(primitive[~inside] - at_anchor))))

    slope, _, r_squared = _linear_fit(
        np.asarray(modes, dtype=float), np.log(inside_norms)
    )
    p_slope, _, _ = _linear_fit(
        np.log(np.asarray(modes, dtype=float) + 1.0), np.log(primitive_maxima)
    )
    _logger.info(
        f"overlap localization mu={mu}: rate {-slope:.4f}, R^2 {r_squared:.4f}"
    )
    return Localization(
        j_star=window,
        n_values=tuple(modes),
        norms_inside=tuple(inside_norms),
        norms_outside=tuple(outside_norms),
        rate=-slope,
        r_squared=r_squared,
        primitive_maxima=tuple(primitive_maxima),
        primitive_slope=p_slope,
    )
