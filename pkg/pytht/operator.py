"""
The truncated Hilbert transform `P_J H P_I` as a Galerkin matrix on
piecewise constant cells, with the log kernel integrated in closed form.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from logging import getLogger
from typing import Dict, Iterator, Union

import numpy as np

from .core import (
    CaseConfig,
    DomainException,
    GridFunction,
    Interval,
    StepFunction,
    ValidationException,
    _legendre,
)
from .types import FloatArray

_logger = getLogger(__name__)

_BLOCK_ROWS = 64

_SEPARATED_POINTS = 8

_DOMAIN_SLACK = 1e-12


def h_indicator(a: float, b: float, x: FloatArray) -> FloatArray:
    """
    The Hilbert transform of the indicator of `[a, b]`, evaluated at `x`.

    >>> round(float(h_indicator(0.0, 1.0, 2.0)), 5)
    0.22064
    >>> float(h_indicator(0.0, 1.0, 0.5))
    0.0
    """
    if not a < b:
        raise ValidationException(f"need a < b, got ({a}, {b})")
    x = np.asarray(x, dtype=float)
    if np.any(x == a) or np.any(x == b):
        raise DomainException(f"Hilbert transform of [{a}, {b}] has a pole there")
    return np.log(np.abs(x - a) / np.abs(x - b)) / math.pi


def _phi(t: FloatArray) -> FloatArray:
    t = np.asarray(t, dtype=float)
    safe = np.where(t == 0.0, 1.0, np.abs(t))
    return np.where(t == 0.0, 0.0, t * np.log(safe) - t)


def entry(c: FloatArray, d: FloatArray, e: FloatArray, f: FloatArray) -> FloatArray:
    """
    The integral over `[e, f]` of the Hilbert transform of the indicator
    of `[c, d]`. The cells may overlap or coincide; the principal value is
    carried by `phi(0) = 0`.

    >>> round(float(entry(0.0, 1.0, 2.0, 3.0)), 12) == round(
    ...     (3 * math.log(3) - 4 * math.log(2)) / math.pi, 12)
    True
    >>> float(entry(0.0, 1.0, 0.0, 1.0))
    0.0
    """
    return (_phi(f - c) - _phi(e - c) - _phi(f - d) + _phi(e - d)) / math.pi


def _separated_entries(
    edges_i: FloatArray, edges_j: FloatArray, rows: FloatArray, cols: FloatArray
) -> FloatArray:
    # Tensor Gauss rule for cell pairs well apart; avoids the cancellation
    # of the four-term closed form when the entry is much smaller than phi.
    nodes, weights = _legendre(_SEPARATED_POINTS)
    half_i = 0.5 * (edges_i[cols + 1] - edges_i[cols])
    mid_i = 0.5 * (edges_i[cols + 1] + edges_i[cols])
    half_j = 0.5 * (edges_j[rows + 1] - edges_j[rows])
    mid_j = 0.5 * (edges_j[rows + 1] + edges_j[rows])
    y = mid_i[:, None] + half_i[:, None] * nodes[None, :]
    x = mid_j[:, None] + half_j[:, None] * nodes[None, :]
    kernel = 1.0 / (x[:, :, None] - y[:, None, :])
    total = np.einsum("a,b,kab->k", weights, weights, kernel)
    return total * half_i * half_j / math.pi


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """
    The Galerkin matrix of the truncated Hilbert transform in the
    orthonormal bases of scaled cell indicators on I and J. Row `m` is
    the J cell, column `n` the I cell.
    """

    config: CaseConfig

    cells_i: int

    cells_j: int

    entries: FloatArray

    mesh_i: FloatArray

    mesh_j: FloatArray

    @property
    def h_i(self) -> float:
        return float(self.mesh_i[1] - self.mesh_i[0])

    @property
    def h_j(self) -> float:
        return float(self.mesh_j[1] - self.mesh_j[0])

    def centres_i(self) -> FloatArray:
        return 0.5 * (self.mesh_i[:-1] + self.mesh_i[1:])

    def centres_j(self) -> FloatArray:
        return 0.5 * (self.mesh_j[:-1] + self.mesh_j[1:])

    def singular_values(self) -> FloatArray:
        return np.linalg.svd(self.entries, compute_uv=False)

    def forward(self, cell_values: FloatArray) -> FloatArray:
        """
        Map cell values of a function on I to the cell averages of its
        image on J.
        """
        coords = np.sqrt(self.h_i) * np.asarray(cell_values, dtype=float)
        return (self.entries @ coords) / np.sqrt(self.h_j)

    def grid_i(self, cell_values: FloatArray) -> GridFunction:
        n = self.cells_i
        return GridFunction(
            self.config.interval_i,
            self.centres_i(),
            np.full(n, self.h_i),
            np.asarray(cell_values, dtype=float),
        )

    def grid_j(self, cell_values: FloatArray) -> GridFunction:
        n = self.cells_j
        return GridFunction(
            self.config.interval_j,
            self.centres_j(),
            np.full(n, self.h_j),
            np.asarray(cell_values, dtype=float),
        )

    def to_rows(self) -> Iterator[Dict[str, Union[int, float]]]:
        """
        Row-major export of the matrix.
        """
        for m in range(self.cells_j):
            for n in range(self.cells_i):
                yield {"row": m, "col": n, "value": float(self.entries[m, n])}


def assemble(
    config: CaseConfig, cells_i: int, cells_j: int, check: bool = True
) -> OperatorMatrix:
    if cells_i < 1 or cells_j < 1:
        raise ValidationException(
            f"need at least one cell on each interval, got {cells_i}x{cells_j}"
        )
    started = time.perf_counter()
    i, j = config.interval_i, config.interval_j
    mesh_i = np.linspace(i.lo, i.hi, cells_i + 1)
    mesh_j = np.linspace(j.lo, j.hi, cells_j + 1)
    h_i = (i.hi - i.lo) / cells_i
    h_j = (j.hi - j.lo) / cells_j

    c, d = mesh_i[None, :-1], mesh_i[None, 1:]
    e, f = mesh_j[:-1, None], mesh_j[1:, None]
    raw = entry(c, d, e, f)

    gap = np.maximum(e - d, c - f)
    rows, cols = np.nonzero(gap >= max(h_i, h_j))
    block = _BLOCK_ROWS * cells_i
    for start in range(0, len(rows), block):
        stop = start + block
        r, k = rows[start:stop], cols[start:stop]
        raw[r, k] = _separated_entries(mesh_i, mesh_j, r, k)

    entries = raw / math.sqrt(h_i * h_j)
    op = OperatorMatrix(config, cells_i, cells_j, entries, mesh_i, mesh_j)
    _logger.debug(
        f"assembled {cells_j}x{cells_i} {config.case_id.value} operator in "
        + f"{time.perf_counter() - started:.3f}s"
    )
    if check:
        norm = float(np.linalg.norm(entries, 2))
        assert norm <= 1.0 + 1e-8, f"operator norm {norm} exceeds one"
    return op


def _check_domain(support: Interval, interval: Interval) -> None:
    below = support.lo < interval.lo - _DOMAIN_SLACK
    above = support.hi > interval.hi + _DOMAIN_SLACK
    if below or above:
        raise ValidationException(
            f"function on ({support.lo}, {support.hi}) is not supported in "
            + f"I = ({interval.lo}, {interval.hi})"
        )


def step_image(f: StepFunction, x: FloatArray) -> FloatArray:
    """
    The Hilbert transform of a step function at points away from its
    breakpoints, in closed form.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for level, a, b in zip(f.levels, f.breakpoints, f.breakpoints[1:]):
        if level != 0.0:
            out += level * h_indicator(a, b, x)
    return out


def apply(op: OperatorMatrix, f: Union[GridFunction, StepFunction]) -> GridFunction:
    """
    Cell averages on the J mesh of `op` of the image of `f`. Step
    functions are integrated exactly, grid functions through their
    quadrature rule with the kernel integrated exactly over each J cell.
    """
    interval_i = op.config.interval_i
    e, f_edges = op.mesh_j[:-1], op.mesh_j[1:]
    h_j = op.h_j

    if isinstance(f, StepFunction):
        _check_domain(f.support(), interval_i)
        averages = np.zeros(op.cells_j)
        for level, a, b in zip(f.levels, f.breakpoints, f.breakpoints[1:]):
            if level != 0.0:
                averages += level * entry(a, b, e, f_edges)
        return op.grid_j(averages / h_j)

    _check_domain(f.interval, interval_i)
    mass = f.weights * f.values
    nonzero = mass != 0.0
    y, mass = f.nodes[nonzero], mass[nonzero]
    averages = np.zeros(op.cells_j)
    for start in range(0, op.cells_j, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, op.cells_j)
        upper = np.maximum(np.abs(f_edges[start:stop, None] - y[None, :]), 1e-300)
        lower = np.maximum(np.abs(e[start:stop, None] - y[None, :]), 1e-300)
        averages[start:stop] = np.log(upper / lower) @ mass
    return op.grid_j(averages / (math.pi * h_j))


def image_norm(op: OperatorMatrix, f: Union[GridFunction, StepFunction]) -> float:
    """
    The L2(J) norm of `apply(op, f)`.
    """
    return apply(op, f).norm_l2()


def cell_averages(
    op: OperatorMatrix, f: Union[GridFunction, StepFunction]
) -> FloatArray:
    """
    Averages of `f` over the I cells of `op`.
    """
    if isinstance(f, StepFunction):
        out = np.zeros(op.cells_i)
        for level, a, b in zip(f.levels, f.breakpoints, f.breakpoints[1:]):
            lo = np.maximum(op.mesh_i[:-1], a)
            hi = np.minimum(op.mesh_i[1:], b)
            out += level * np.clip(hi - lo, 0.0, None)
        return out / op.h_i
    index = np.clip(
        np.searchsorted(op.mesh_i, f.nodes, side="right") - 1, 0, op.cells_i - 1
    )
    sums = np.bincount(index, weights=f.weights * f.values, minlength=op.cells_i)
    return sums / op.h_i
