"""
The Gram matrix of the images of an orthonormal family of cell
indicators, its smallest eigenvalue and the function that attains it.

Eigenvalues are never taken from the Gram matrix itself. The images are
sampled into a tall "half operator" `B` with `A = B^T B`, and the
eigenvalues of `A` are the squared singular values of `B`; this keeps
eigenvalues near `1e-16` resolvable in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from logging import getLogger
from typing import Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from .constants import DEFAULT_POINTS_PER_CELL, MIN_GRAM_J_CELLS
from .core import (
    CaseConfig,
    CaseId,
    ConvergenceException,
    GridFunction,
    Interval,
    StepFunction,
    ValidationException,
    gauss_grid,
)
from .operator import OperatorMatrix, apply, entry, h_indicator
from .types import FloatArray

_logger = getLogger(__name__)

_MIN_CELL_WIDTH = 1e-12

_RESOLVED_RATIO = 1e-13
"""
Ratio of smallest to largest singular value of the half operator below
which a Gram eigenvalue is no longer trusted.
"""


@dataclass(frozen=True, eq=False)
class GramResult:
    config: CaseConfig

    n: int

    matrix_a: FloatArray
    """
    `A[k, l]`, the inner product over J of the images of basis functions
    `k` and `l`.
    """

    eigenvalues: FloatArray
    """
    Ascending.
    """

    worst_coeffs: FloatArray
    """
    Unit coefficient vector of the eigenvector for the smallest eigenvalue.
    """

    worst_function: StepFunction

    half_singular_values: FloatArray
    """
    Singular values of the half operator, descending.
    """

    raw_kernel: bool = False

    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    def to_rows(self) -> List[Dict[str, Union[int, float]]]:
        return [
            {"index": k, "eigenvalue": float(v)}
            for k, v in enumerate(self.eigenvalues)
        ]

    def worst_to_json(self) -> Dict[str, List[float]]:
        return {
            "breakpoints": list(self.worst_function.breakpoints),
            "levels": list(self.worst_function.levels),
        }


def _half_operator(
    config: CaseConfig, edges: FloatArray, scale: float, cells_j: int, points: int
) -> FloatArray:
    j = config.interval_j
    if config.case_id == CaseId.GAP:
        nodes, weights = gauss_grid(j, cells_j, points)
        columns = [h_indicator(a, b, nodes) for a, b in zip(edges, edges[1:])]
        return scale * np.sqrt(weights)[:, None] * np.stack(columns, axis=1)

    mesh = np.linspace(j.lo, j.hi, cells_j + 1)
    h_j = j.length() / cells_j
    e, f = mesh[:-1, None], mesh[1:, None]
    block = entry(edges[None, :-1], edges[None, 1:], e, f)
    return scale * block / math.sqrt(h_j)


def _fix_sign(vector: FloatArray) -> FloatArray:
    pivot = int(np.argmax(np.abs(vector)))
    return -vector if vector[pivot] < 0.0 else vector


def gram_for_cells(
    config: CaseConfig,
    n: int,
    cells_j: int = MIN_GRAM_J_CELLS,
    points_per_cell: int = DEFAULT_POINTS_PER_CELL,
    raw_kernel: bool = False,
) -> GramResult:
    """
    The Gram construction for `n` orthonormal indicators of equal cells of
    I. With `raw_kernel` the kernel is `1/(x - y)` without the `1/pi`
    factor, so every eigenvalue is multiplied by `pi^2`.
    """
    if n < 1:
        raise ValidationException(f"need at least one basis function, got {n}")
    interval_i = config.interval_i
    if interval_i.length() / n < _MIN_CELL_WIDTH:
        raise ValidationException(f"{n} cells degenerate on I")
    cells_j = max(cells_j, MIN_GRAM_J_CELLS)

    edges = np.linspace(interval_i.lo, interval_i.hi, n + 1)
    scale = math.sqrt(n / interval_i.length())
    half = _half_operator(config, edges, scale, cells_j, points_per_cell)
    if raw_kernel:
        half = math.pi * half

    _, singular, vt = np.linalg.svd(half, full_matrices=False)
    eigenvalues = np.sort(singular**2)
    worst = _fix_sign(vt[-1])
    worst_function = StepFunction(
        tuple(float(e) for e in edges), tuple(float(scale * c) for c in worst)
    )
    _logger.debug(
        f"gram n={n}: lambda_min={eigenvalues[0]:.4e}, "
        + f"lambda_max={eigenvalues[-1]:.4e}"
    )
    return GramResult(
        config=config,
        n=n,
        matrix_a=half.T @ half,
        eigenvalues=eigenvalues,
        worst_coeffs=worst,
        worst_function=worst_function,
        half_singular_values=singular,
        raw_kernel=raw_kernel,
    )


def quadratic_form(result: GramResult, coeffs: FloatArray) -> float:
    """
    `a^T A a`, the squared image norm of the combination with
    coefficients `a`.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    return float(coeffs @ result.matrix_a @ coeffs)


class DecayFit(NamedTuple):
    c: float
    """
    Prefactor of the fit `lambda_min(A_n) ~ c * exp(-beta * n)`.
    """

    beta: float

    n_values: Tuple[int, ...]

    lambda_min: Tuple[float, ...]

    truncated: bool
    """
    Set when the sweep stopped before `n_max` because the smallest
    eigenvalue was no longer resolved.
    """


def decay_fit(
    config: CaseConfig,
    n_max: int,
    cells_j: int = MIN_GRAM_J_CELLS,
    raw_kernel: bool = False,
) -> DecayFit:
    if n_max < 4:
        raise ValidationException(f"decay fit needs n_max >= 4, got {n_max}")

    n_values: List[int] = []
    lambdas: List[float] = []
    truncated = False
    for n in range(2, n_max + 1):
        result = gram_for_cells(config, n, cells_j=cells_j, raw_kernel=raw_kernel)
        singular = result.half_singular_values
        lam = result.lambda_min()
        if lam < 1e-290 or singular[-1] < _RESOLVED_RATIO * singular[0]:
            _logger.warning(
                f"lambda_min unresolved at n={n}, truncating the fit at n={n - 1}"
            )
            truncated = True
            break
        n_values.append(n)
        lambdas.append(lam)

    if len(n_values) < 3:
        raise ConvergenceException(
            f"only {len(n_values)} resolved eigenvalues, cannot fit a decay rate"
        )
    slope, intercept = np.polyfit(n_values, np.log(lambdas), 1)
    beta = -float(slope)
    if beta <= 0.0:
        raise ConvergenceException(f"fitted decay rate {beta} is not positive")
    _logger.info(f"lambda_min decay: beta={beta:.4f} over n={n_values}")
    return DecayFit(
        c=math.exp(float(intercept)),
        beta=beta,
        n_values=tuple(n_values),
        lambda_min=tuple(lambdas),
        truncated=truncated,
    )


def sine_combination(
    interval: Interval,
    coeffs: Sequence[float],
    modes: Sequence[int],
    cells: int = 256,
    points_per_cell: int = DEFAULT_POINTS_PER_CELL,
) -> GridFunction:
    """
    `sum_k coeffs[k] * sin(modes[k] * pi * t)` with `t` the position in
    I rescaled to `[0, 1]`.
    """
    if len(coeffs) != len(modes):
        raise ValidationException("need one coefficient per mode")
    weights = [float(c) for c in coeffs]
    ks = [int(k) for k in modes]
    lo, length = interval.lo, interval.length()

    def profile(x: FloatArray) -> FloatArray:
        t = (np.asarray(x, dtype=float) - lo) / length
        return sum(
            (c * np.sin(k * math.pi * t) for c, k in zip(weights, ks)),
            np.zeros_like(t),
        )

    return GridFunction.from_callable(interval, profile, cells, points_per_cell)


class SineCombination(NamedTuple):
    coeffs: Tuple[float, ...]

    ratio: float
    """
    `||H_T f|| / ||f||` for the combination.
    """

    function: GridFunction


def least_sine_combination(
    op: OperatorMatrix,
    modes: Sequence[int] = (2, 3, 4, 5),
    cells: int = 256,
) -> SineCombination:
    """
    The unit combination of `sin(k pi t)` over `modes` whose image on J is
    smallest relative to its norm. The last coefficient is made positive.
    """
    interval = op.config.interval_i
    basis = [
        sine_combination(interval, [1.0], [k], cells=cells) for k in modes
    ]
    images = np.stack([apply(op, g).values for g in basis], axis=1)
    images = math.sqrt(op.h_j) * images
    gram_i = np.array([[g.inner(h) for h in basis] for g in basis])
    lower = np.linalg.cholesky(gram_i)
    whitened = np.linalg.solve(lower, images.T).T
    _, singular, vt = np.linalg.svd(whitened, full_matrices=False)
    coeffs = np.linalg.solve(lower.T, vt[-1])
    coeffs = coeffs / np.linalg.norm(coeffs)
    if coeffs[-1] < 0.0:
        coeffs = -coeffs
    function = sine_combination(interval, coeffs, modes, cells=cells)
    ratio = apply(op, function).norm_l2() / function.norm_l2()
    _logger.info(
        f"least sine combination over modes {tuple(modes)}: ratio={ratio:.3e}, "
        + f"smallest singular value {singular[-1]:.3e}"
    )
    return SineCombination(tuple(float(c) for c in coeffs), ratio, function)
