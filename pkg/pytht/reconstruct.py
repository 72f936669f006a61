"""
Total variation regularized inversion of the truncated Hilbert transform.

A reconstruction is any function in the admissible set

    S(delta, g) = {f : ||H_T f - g|| <= delta, tv(f) <= kappa}.

`reconstruct_tv` finds one by minimising the penalized functional
`1/2 ||H_T f - g||^2 + alpha tv(f)` with ADMM and choosing `alpha` by the
discrepancy principle. Any two members of the set are close, and
`diameter_bound` says how close in terms of the envelope constants of
the total variation estimate.

Unknowns are coordinates in the orthonormal basis of scaled cell
indicators, so the Euclidean norm of a coordinate vector is the L2 norm
of the function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from logging import getLogger
from typing import List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lstsq, qr, solve_triangular
from scipy.stats import pearsonr

from .constants import (
    ALPHA_RANGE,
    DISCREPANCY_BAND,
    MAX_SOLVER_ITERATIONS,
    SOLVER_TOLERANCE,
)
from .core import CaseConfig, GridFunction, StepFunction, ValidationException
from .operator import OperatorMatrix, assemble, cell_averages
from .types import FloatArray, Seed

_logger = getLogger(__name__)

DEFAULT_CELLS_I = 48

DEFAULT_CELLS_J = 32
"""
Fewer J cells than I cells, so that the data cannot be fitted exactly by
noise and the discrepancy band stays reachable.
"""

_BISECTION_STEPS = 60

_MEAN_PENALTY = 1e6
"""
Weight of the mean constraint relative to the ADMM penalty.
"""

_FINISH_EVERY = 25
"""
ADMM iterations between attempts to finish a solve exactly on the jump
set of the current iterate.
"""

_ACTIVE_SET_STEPS = 400

_CERTIFICATE_SLACK = 1e-6
"""
Relative slack on the optimality conditions that certify a finished
solve.
"""

_RANK_TOLERANCE = 1e-12


def tv_prox(y: FloatArray, weight: float) -> FloatArray:
    """
    The exact minimiser of `1/2 ||x - y||^2 + weight * sum |x[k+1] - x[k]|`
    by the direct taut string algorithm.

    >>> tv_prox(np.array([0.0, 10.0]), 1.0).tolist()
    [1.0, 9.0]
    >>> tv_prox(np.array([0.0, 1.0]), 1.0).tolist()
    [0.5, 0.5]
    """
    values = [float(v) for v in np.asarray(y, dtype=float)]
    width = len(values)
    if width == 0 or weight <= 0.0:
        return np.array(values)

    lam = float(weight)
    out = [0.0] * width
    k = k0 = 0
    k_plus = k_minus = 0
    u_min, u_max = lam, -lam
    v_min, v_max = values[0] - lam, values[0] + lam

    while True:
        while k == width - 1:
            if u_min < 0.0:
                for index in range(k0, k_minus + 1):
                    out[index] = v_min
                k0 = k_minus + 1
                k = k_minus = k0
                v_min = values[k0]
                u_min = lam
                u_max = v_min + u_min - v_max
            elif u_max > 0.0:
                for index in range(k0, k_plus + 1):
                    out[index] = v_max
                k0 = k_plus + 1
                k = k_plus = k0
                v_max = values[k0]
                u_max = -lam
                u_min = v_max + u_max - v_min
            else:
                v_min += u_min / (k - k0 + 1)
                for index in range(k0, k + 1):
                    out[index] = v_min
                return np.array(out)

        u_min += values[k + 1] - v_min
        u_max += values[k + 1] - v_max
        if u_min < -lam:
            for index in range(k0, k_minus + 1):
                out[index] = v_min
            k0 = k_minus + 1
            k = k_plus = k_minus = k0
            v_min = values[k0]
            v_max = v_min + 2.0 * lam
            u_min, u_max = lam, -lam
        elif u_max > lam:
            for index in range(k0, k_plus + 1):
                out[index] = v_max
            k0 = k_plus + 1
            k = k_plus = k_minus = k0
            v_max = values[k0]
            v_min = v_max - 2.0 * lam
            u_min, u_max = lam, -lam
        else:
            k += 1
            if u_min >= lam:
                k_minus = k
                v_min += (u_min - lam) / (k_minus - k0 + 1)
                u_min = lam
            if u_max <= -lam:
                k_plus = k
                v_max += (u_max + lam) / (k_plus - k0 + 1)
                u_max = -lam


@dataclass(frozen=True, eq=False)
class InverseProblem:
    op: OperatorMatrix

    f_exact: StepFunction

    g_exact: GridFunction
    """
    The image under `op` of the I cell averages of `f_exact`, so exact
    data always lie in the range of the model.
    """

    g_noisy: GridFunction

    delta: float
    """
    The exact L2(J) norm of `g_noisy - g_exact`.
    """

    kappa: float
    """
    Total variation budget of the admissible set.
    """

    noise_seed: Optional[int] = None

    pure_noise: bool = False
    """
    Set when the noise is at least as large as the data.
    """

    def data_coords(self) -> FloatArray:
        return math.sqrt(self.op.h_j) * self.g_noisy.values


def make_problem(
    config: CaseConfig,
    f_ex: StepFunction,
    delta: float,
    noise_seed: Optional[Seed] = None,
    kappa: Optional[float] = None,
    cells_i: int = DEFAULT_CELLS_I,
    cells_j: int = DEFAULT_CELLS_J,
) -> InverseProblem:
    """
    Data for `f_ex` with white noise rescaled to L2(J) norm exactly
    `delta`. The budget `kappa` defaults to the variation of `f_ex` on I.

    Exact data are the Galerkin image of the cell averages of `f_ex`,
    not `apply(op, f_ex)`, so they lie in the range of the discrete model
    even when breakpoints fall between mesh points.
    """
    if delta < 0.0:
        raise ValidationException(f"noise level must be non-negative, got {delta}")
    if f_ex.norm_l2() == 0.0:
        raise ValidationException("the exact solution must be nonzero")
    op = assemble(config, cells_i, cells_j)
    g_exact = op.grid_j(op.forward(cell_averages(op, f_ex)))

    values = g_exact.values
    if delta > 0.0:
        rng = np.random.default_rng(noise_seed)
        draw = rng.standard_normal(cells_j)
        draw *= delta / math.sqrt(op.h_j * float(np.sum(draw**2)))
        values = values + draw
    g_noisy = g_exact.with_values(values)

    pure_noise = delta >= g_exact.norm_l2()
    if pure_noise:
        _logger.warning(
            f"noise level {delta:.3e} exceeds the data norm {g_exact.norm_l2():.3e}"
        )
    if kappa is None:
        kappa = _interior_tv(cell_averages(op, f_ex))
    if kappa <= 0.0:
        raise ValidationException(f"TV budget must be positive, got {kappa}")
    return InverseProblem(
        op=op,
        f_exact=f_ex,
        g_exact=g_exact,
        g_noisy=g_noisy,
        delta=delta,
        kappa=kappa,
        noise_seed=noise_seed,
        pure_noise=pure_noise,
    )


def _interior_tv(values: FloatArray) -> float:
    return float(np.sum(np.abs(np.diff(values))))


class PenalizedSolution(NamedTuple):
    values: FloatArray
    """
    Cell values of the minimiser on the I mesh.
    """

    residual: float

    tv: float

    iterations: int

    converged: bool

    history: Tuple[float, ...]
    """
    Objective after each iteration.
    """


class _System(NamedTuple):
    factor: Tuple[FloatArray, bool]

    rhs: FloatArray

    rho: float

    beta: float
    """
    Weight of the mean penalty, zero without one.
    """


def _system(problem: InverseProblem, mean: Optional[float]) -> _System:
    a = problem.op.entries
    n = problem.op.cells_i
    rho = float(np.linalg.norm(a, 2)) ** 2
    normal = a.T @ a + rho * np.eye(n)
    rhs = a.T @ problem.data_coords()
    beta = 0.0
    if mean is not None:
        w = np.full(n, math.sqrt(problem.op.h_i))
        beta = _MEAN_PENALTY * rho / float(w @ w)
        normal += beta * np.outer(w, w)
        rhs = rhs + beta * mean * w
    return _System(cho_factor(normal), rhs, rho, beta)


def _objective(
    problem: InverseProblem,
    system: _System,
    coords: FloatArray,
    weight: float,
    mean: Optional[float],
) -> float:
    misfit = problem.op.entries @ coords - problem.data_coords()
    value = 0.5 * float(misfit @ misfit) + weight * _interior_tv(coords)
    if mean is not None:
        integral = math.sqrt(problem.op.h_i) * float(np.sum(coords))
        value += 0.5 * system.beta * (integral - mean) ** 2
    return value


class _JumpModel(NamedTuple):
    """
    The penalized functional in jump coordinates. `theta[0]` is the first
    coordinate and `theta[k]` the jump from cell `k - 1` to cell `k`, and
    the objective is `1/2 ||design @ theta - target||^2` plus `weight`
    times `sum |theta[1:]|`. The mean penalty, if any, is an extra row.
    """

    design: FloatArray

    target: FloatArray

    norm: float
    """
    Spectral norm of `design`, which scales the rounding error of a
    computed gradient.
    """

    def rounding(self, theta: FloatArray) -> float:
        """
        Absolute floor under gradient comparisons at `theta`.
        """
        size = self.norm * float(np.linalg.norm(theta))
        size += float(np.linalg.norm(self.target))
        return 64.0 * float(np.finfo(float).eps) * self.norm * size


def _jump_model(
    problem: InverseProblem, system: _System, mean: Optional[float]
) -> _JumpModel:
    design = np.cumsum(problem.op.entries[:, ::-1], axis=1)[:, ::-1]
    target = problem.data_coords()
    if mean is not None:
        root_beta = math.sqrt(system.beta)
        counts = np.arange(problem.op.cells_i, 0, -1, dtype=float)
        row = root_beta * math.sqrt(problem.op.h_i) * counts
        design = np.vstack([design, row])
        target = np.append(target, root_beta * mean)
    return _JumpModel(design, target, float(np.linalg.norm(design, 2)))


def _jump_objective(model: _JumpModel, theta: FloatArray, weight: float) -> float:
    misfit = model.design @ theta - model.target
    return 0.5 * float(misfit @ misfit) + weight * float(np.sum(np.abs(theta[1:])))


def _restricted_minimiser(
    model: _JumpModel, active: FloatArray, signs: FloatArray, weight: float
) -> Optional[FloatArray]:
    """
    Minimiser over the `active` columns with the penalized ones held at
    the given signs, or `None` when those columns are numerically
    dependent.
    """
    q, r = qr(model.design[:, active], mode="economic")
    diagonal = np.abs(np.diag(r))
    if diagonal.min() <= _RANK_TOLERANCE * diagonal.max():
        return None
    shift = solve_triangular(r, weight * signs[active], trans="T")
    return solve_triangular(r, q.T @ model.target - shift)


def _line_search(
    model: _JumpModel,
    theta: FloatArray,
    active: FloatArray,
    proposal: FloatArray,
    weight: float,
) -> FloatArray:
    """
    The best point on the segment from `theta` to `proposal` among the
    end point and the places where an active jump changes sign; the jump
    that crosses there is set to exactly zero.
    """
    current = theta[active]
    crossings = [
        (a / (a - b), k)
        for k, (a, b) in enumerate(zip(current, proposal))
        if k > 0 and a * b < 0.0
    ]
    best, best_value = theta, math.inf
    for t in sorted({1.0, *(t for t, _ in crossings)}):
        trial = theta.copy()
        trial[active] = current + t * (proposal - current)
        for where, k in crossings:
            if where == t:
                trial[active[k]] = 0.0
        value = _jump_objective(model, trial, weight)
        if value < best_value:
            best, best_value = trial, value
    return best


def _active_set_solve(
    model: _JumpModel, weight: float, start: FloatArray
) -> Optional[FloatArray]:
    """
    Exact minimiser of the jump objective by the feature-sign active set
    method: minimise with the signs of the nonzero jumps fixed, step back
    to the best sign change, and release the jump that violates its
    optimality condition most. Returns `None` if no certified minimiser
    is found within the step limit.
    """
    theta = np.array(start, dtype=float)
    signs = np.sign(theta)
    signs[0] = 0.0
    for _ in range(_ACTIVE_SET_STEPS):
        active = np.concatenate([[0], np.flatnonzero(signs)])
        grad = model.design.T @ (model.design @ theta - model.target)
        loose = weight * _CERTIFICATE_SLACK + model.rounding(theta)
        stationary = abs(grad[0]) <= loose and bool(
            np.all(np.abs(grad[active[1:]] + weight * signs[active[1:]]) <= loose)
        )
        if stationary:
            excess = np.abs(grad) - weight
            excess[active] = -math.inf
            worst = int(np.argmax(excess))
            if excess[worst] <= loose:
                return theta
            signs[worst] = -math.copysign(1.0, grad[worst])
            active = np.concatenate([[0], np.flatnonzero(signs)])
        proposal = _restricted_minimiser(model, active, signs, weight)
        if proposal is None or not np.all(np.isfinite(proposal)):
            return None
        theta = _line_search(model, theta, active, proposal, weight)
        signs = np.sign(theta)
        signs[0] = 0.0
    return None


def _finish(
    model: _JumpModel,
    coords: FloatArray,
    weight: float,
    cells_j: int,
    failed: Set[Tuple[int, ...]],
) -> Optional[FloatArray]:
    """
    Certified minimiser in coordinates, started from the jumps of the
    ADMM iterate `coords` when there are few of them and from a constant
    otherwise. Jump sets in `failed` are not tried again, and a new
    failure is added to them.
    """
    theta = np.concatenate([coords[:1], np.diff(coords)])
    jumps = tuple(int(k) for k in np.flatnonzero(theta[1:]))
    if len(jumps) > cells_j // 2:
        theta, jumps = np.zeros_like(theta), ()
    if jumps in failed:
        return None
    finished = _active_set_solve(model, weight, theta)
    if finished is None:
        failed.add(jumps)
        return None
    return np.cumsum(finished)


def solve_penalized(
    problem: InverseProblem,
    alpha: float,
    init: Optional[FloatArray] = None,
    max_iterations: int = MAX_SOLVER_ITERATIONS,
    tol: float = SOLVER_TOLERANCE,
    mean: Optional[float] = None,
) -> PenalizedSolution:
    """
    ADMM for `1/2 ||H_T f - g||^2 + alpha tv(f)` on the split `x = z`:
    an exact least squares step in `x`, the taut string step in `z`.
    `init` gives starting cell values; `mean` adds a penalty pinning
    `int_I f` to that value.

    ADMM alone crawls along the piecewise constant directions the data
    barely see, so every `_FINISH_EVERY` iterations the jump set of `z`
    seeds an exact active set solve; a solve whose optimality conditions
    hold is converged. Otherwise it stops when the objective changes by
    less than `tol` relatively and `x` and `z` agree to `sqrt(tol)`.
    `tol = 0` runs exactly `max_iterations` plain ADMM iterations.
    """
    if alpha < 0.0:
        raise ValidationException(f"regularization weight must be >= 0, got {alpha}")
    op = problem.op
    root_h = math.sqrt(op.h_i)
    weight = alpha / root_h
    system = _system(problem, mean)
    model = _jump_model(problem, system, mean)

    if init is None:
        z = np.zeros(op.cells_i)
    else:
        z = root_h * np.asarray(init, dtype=float)
    u = np.zeros_like(z)
    history: List[float] = []
    failed: Set[Tuple[int, ...]] = set()
    previous = math.inf
    converged = False
    iteration = 0

    for iteration in range(1, max_iterations + 1):
        x = cho_solve(system.factor, system.rhs + system.rho * (z - u))
        z = tv_prox(x + u, weight / system.rho)
        u = u + x - z
        objective = _objective(problem, system, z, weight, mean)
        history.append(objective)
        if tol <= 0.0:
            continue
        if weight > 0.0 and iteration % _FINISH_EVERY == 1:
            finished = _finish(model, z, weight, op.cells_j, failed)
            if finished is not None:
                z = finished
                history[-1] = _objective(problem, system, z, weight, mean)
                converged = True
                break
        change = abs(previous - objective)
        gap = float(np.linalg.norm(x - z))
        scale = max(float(np.linalg.norm(z)), 1e-300)
        settled = change <= tol * max(abs(objective), 1e-300)
        if settled and gap <= math.sqrt(tol) * scale:
            finished = None
            if weight > 0.0:
                finished = _finish(model, z, weight, op.cells_j, failed)
            if finished is not None:
                z = finished
                history[-1] = _objective(problem, system, z, weight, mean)
            converged = True
            break
        previous = objective

    values = z / root_h
    misfit = op.entries @ z - problem.data_coords()
    return PenalizedSolution(
        values=values,
        residual=float(np.linalg.norm(misfit)),
        tv=_interior_tv(values),
        iterations=iteration,
        converged=converged,
        history=tuple(history),
    )


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    f_hat: GridFunction

    residual: float
    """
    `||H_T f_hat - g_noisy||` in L2(J).
    """

    tv_of_f_hat: float

    iterations: int
    """
    ADMM iterations over the whole search for `alpha`.
    """

    converged: bool
    """
    The last solve converged and its residual is in the discrepancy band.
    """

    alpha: float

    kappa_binding: bool
    """
    `tv_of_f_hat` exceeds the budget, so the result lies outside the
    admissible set for this `kappa`.
    """

    history: Tuple[float, ...]


def _in_band(residual: float, delta: float) -> int:
    low, high = DISCREPANCY_BAND
    if residual < low * delta:
        return -1
    if residual > high * delta:
        return 1
    return 0


def _result(
    problem: InverseProblem,
    solution: PenalizedSolution,
    alpha: float,
    iterations: int,
    accepted: bool,
) -> ReconstructionResult:
    kappa_binding = solution.tv > problem.kappa * (1.0 + 1e-6)
    if kappa_binding:
        _logger.warning(
            f"reconstruction has TV {solution.tv:.4e} above the budget "
            + f"{problem.kappa:.4e}"
        )
    return ReconstructionResult(
        f_hat=problem.op.grid_i(solution.values),
        residual=solution.residual,
        tv_of_f_hat=solution.tv,
        iterations=iterations,
        converged=accepted and solution.converged,
        alpha=alpha,
        kappa_binding=kappa_binding,
        history=solution.history,
    )


def reconstruct_tv(
    problem: InverseProblem,
    mean: Optional[float] = None,
    max_iterations: int = MAX_SOLVER_ITERATIONS,
    tol: float = SOLVER_TOLERANCE,
) -> ReconstructionResult:
    """
    Bisect `log alpha` over the configured range until the residual lies
    in the discrepancy band around `delta`, warm starting every solve
    from the previous one. The band is bracketed beforehand by the
    residuals in the limits `alpha -> 0` and `alpha -> inf`. With
    `delta = 0` the smallest `alpha` is used.
    """
    delta = problem.delta
    lo, hi = (math.log10(a) for a in ALPHA_RANGE)
    total = 0

    def solve(log_alpha: float, init: Optional[FloatArray]) -> PenalizedSolution:
        nonlocal total
        solution = solve_penalized(
            problem, 10.0**log_alpha, init, max_iterations, tol, mean
        )
        total += solution.iterations
        return solution

    if delta == 0.0:
        exact = solve(lo, None)
        return _result(problem, exact, 10.0**lo, total, True)

    floor, ceiling = _residual_limits(problem, mean)
    if _in_band(floor, delta) > 0 or _in_band(ceiling, delta) < 0:
        _logger.warning(
            f"no alpha in {ALPHA_RANGE} brackets the noise level {delta:.3e}: "
            + f"residuals {floor:.3e} to {ceiling:.3e}"
        )
        log_alpha = lo if _in_band(floor, delta) > 0 else hi
        closest = solve(log_alpha, None)
        return _result(problem, closest, 10.0**log_alpha, total, False)

    current: Optional[PenalizedSolution] = None
    log_alpha = hi
    for _ in range(_BISECTION_STEPS):
        log_alpha = 0.5 * (lo + hi)
        current = solve(log_alpha, None if current is None else current.values)
        side = _in_band(current.residual, delta)
        _logger.debug(
            f"alpha=1e{log_alpha:.3f}: residual {current.residual:.4e}, "
            + f"{current.iterations} iterations"
        )
        if side == 0:
            _logger.info(
                f"discrepancy principle met at alpha={10.0**log_alpha:.3e} "
                + f"after {total} iterations"
            )
            return _result(problem, current, 10.0**log_alpha, total, True)
        if side < 0:
            lo = log_alpha
        else:
            hi = log_alpha

    assert current is not None
    _logger.warning(f"bisection did not reach the discrepancy band for {delta:.3e}")
    return _result(problem, current, 10.0**log_alpha, total, False)


def _residual_limits(
    problem: InverseProblem, mean: Optional[float]
) -> Tuple[float, float]:
    """
    Residuals of the penalized minimisers as `alpha -> 0`, the least
    squares fit, and as `alpha -> inf`, the best constant. The residual
    of the discrepancy principle is monotone in `alpha` between them.
    """
    model = _jump_model(problem, _system(problem, mean), mean)
    a, data = problem.op.entries, problem.data_coords()
    first = model.design[:, 0]
    level = float(first @ model.target) / float(first @ first)
    ceiling = float(np.linalg.norm(a @ np.full(problem.op.cells_i, level) - data))
    theta = lstsq(model.design, model.target)[0]
    floor = float(np.linalg.norm(a @ np.cumsum(theta) - data))
    return floor, ceiling


def reconstruction_error(
    problem: InverseProblem, result: ReconstructionResult
) -> float:
    """
    L2(I) distance between the reconstruction and the cell averages of
    the exact solution.
    """
    exact = cell_averages(problem.op, problem.f_exact)
    diff = result.f_hat.values - exact
    return math.sqrt(problem.op.h_i * float(np.sum(diff**2)))


def diameter_bound(
    delta: float, c1: float, c2: float, kappa: float
) -> Optional[float]:
    """
    `sqrt((1/(2e) + 4 c2 kappa^2) / |ln(2 delta / c1)|)`, the largest L2
    distance between two members of the admissible set. `None` when
    `delta > c1 / 2`, where the bound does not apply.

    >>> round(diameter_bound(1e-6, 1.0, 0.0, 1.0), 6)
    0.118395
    >>> diameter_bound(0.6, 1.0, 0.0, 1.0) is None
    True
    """
    if delta <= 0.0 or c1 <= 0.0:
        raise ValidationException("delta and c1 must be positive")
    if delta > 0.5 * c1:
        return None
    log_term = abs(math.log(2.0 * delta / c1))
    if log_term == 0.0:
        return math.inf
    return math.sqrt((1.0 / (2.0 * math.e) + 4.0 * c2 * kappa**2) / log_term)


class DiameterRow(NamedTuple):
    delta: float

    median_error: float

    bound: Optional[float]
    """
    `None` out of regime.
    """

    errors: Tuple[float, ...]
    """
    One per seed.
    """

    residuals: Tuple[float, ...]

    tvs: Tuple[float, ...]

    iterations: Tuple[int, ...]

    converged: bool

    @property
    def in_regime(self) -> bool:
        return self.bound is not None

    @property
    def within_bound(self) -> bool:
        return self.bound is None or self.median_error <= self.bound


def _check_deltas(delta_list: Sequence[float]) -> None:
    if len(delta_list) < 4:
        raise ValidationException(
            f"need at least 4 noise levels, got {len(delta_list)}"
        )
    if any(d <= 0.0 for d in delta_list):
        raise ValidationException("noise levels must be positive")
    if any(a <= b for a, b in zip(delta_list, delta_list[1:])):
        raise ValidationException("noise levels must be strictly descending")
    if math.log10(delta_list[0] / delta_list[-1]) < 3.0 - 1e-9:
        raise ValidationException("noise levels must span at least three decades")


def diameter_rate(
    config: CaseConfig,
    f_ex: StepFunction,
    delta_list: Sequence[float],
    seeds: Sequence[int],
    c1: float,
    c2: float,
    kappa: Optional[float] = None,
    cells_i: int = DEFAULT_CELLS_I,
    cells_j: int = DEFAULT_CELLS_J,
) -> List[DiameterRow]:
    """
    Median reconstruction error over `seeds` for each noise level, next
    to `diameter_bound` with the envelope constants `(c1, c2)` of the
    total variation estimate.
    """
    _check_deltas(delta_list)
    if not seeds:
        raise ValidationException("need at least one noise seed")

    rows = []
    for delta in delta_list:
        errors, residuals, tvs, iterations = [], [], [], []
        converged = True
        budget = kappa
        for seed in seeds:
            problem = make_problem(
                config, f_ex, delta, Seed(seed), kappa, cells_i, cells_j
            )
            budget = problem.kappa
            result = reconstruct_tv(problem)
            errors.append(reconstruction_error(problem, result))
            residuals.append(result.residual)
            tvs.append(result.tv_of_f_hat)
            iterations.append(result.iterations)
            converged = converged and result.converged
        assert budget is not None
        row = DiameterRow(
            delta=delta,
            median_error=float(np.median(errors)),
            bound=diameter_bound(delta, c1, c2, budget),
            errors=tuple(errors),
            residuals=tuple(residuals),
            tvs=tuple(tvs),
            iterations=tuple(iterations),
            converged=converged,
        )
        _logger.info(
            f"delta={delta:.1e}: median error {row.median_error:.4e}, "
            + f"bound {row.bound}"
        )
        rows.append(row)
    return rows


def rate_correlation(rows: Sequence[DiameterRow]) -> float:
    """
    Pearson correlation of median errors against `1/sqrt|ln delta|`.
    """
    x = [1.0 / math.sqrt(abs(math.log(row.delta))) for row in rows]
    y = [row.median_error for row in rows]
    return float(pearsonr(x, y)[0])
