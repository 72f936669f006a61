"""
Empirical checks of the stability estimates for the truncated Hilbert
transform. Each check evaluates `lhs = ||H_T f|| / ||f||` and a regressor
over a family of functions, then fits a lower envelope
`lhs >= c1 exp(-c2 * regressor)` that holds for every member:

* `c2` is the largest slope among secants of consecutive points of
  `(regressor, -ln lhs)`, and zero if all of them are negative;
* `c1` is the smallest value of `lhs exp(c2 * regressor)`.

The envelope is a certificate for the data it was fitted on; a second,
disjoint family checks that it generalizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from logging import getLogger
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import linregress

from .constants import MIN_GRAM_J_CELLS
from .core import (
    CaseConfig,
    CaseId,
    GridFunction,
    Interval,
    StepFunction,
    ValidationException,
    mollify,
    smooth_step,
)
from .operator import OperatorMatrix, apply, assemble
from .spectral import SturmLiouvilleSpec, apply_li_power, j_star
from .types import FloatArray, Seed

_logger = getLogger(__name__)

_SLACK = 1e-12

Member = Union[GridFunction, StepFunction]


class TheoremId(Enum):
    THM1 = "thm1"
    THM2 = "thm2"
    THM2A = "thm2a"
    THM3 = "thm3"
    THM3A = "thm3a"
    THM4 = "thm4"
    POLYDECAY = "polydecay"


class FamilyMember(NamedTuple):
    param: float
    """
    The family parameter, such as the frequency or the number of steps.
    """

    function: Member

    label: str = ""


class BoundRow(NamedTuple):
    param: float

    lhs: float

    regressor: float

    l1_regressor: float
    """
    `||f_x||_L1 / ||f||_L2` (total variation for step functions), an
    exploratory column for the conjectured L1 form of the estimate. No
    fit uses it.
    """

    label: str = ""


@dataclass(frozen=True)
class BoundReport:
    theorem_id: TheoremId

    family_label: str

    rows: Tuple[BoundRow, ...]

    c1: float

    c2: float

    violation_count: int

    config: CaseConfig

    seed: Optional[int] = None

    extras: Dict[str, float] = field(default_factory=dict)

    def header(self) -> Dict[str, Any]:
        return {
            "theorem_id": self.theorem_id.value,
            "family": self.family_label,
            "c1": self.c1,
            "c2": self.c2,
            "violations": self.violation_count,
            "seed": self.seed,
            "config": self.config.to_json(),
            "conjecture_column": "l1_regressor",
            **self.extras,
        }

    def to_rows(self) -> List[Dict[str, Union[str, float]]]:
        return [
            {
                "param": row.param,
                "label": row.label,
                "lhs": row.lhs,
                "regressor": row.regressor,
                "l1_regressor": row.l1_regressor,
            }
            for row in self.rows
        ]


def fit_envelope(
    regressors: Sequence[float], lhs: Sequence[float]
) -> Tuple[float, float]:
    """
    >>> c1, c2 = fit_envelope([0.0, 1.0, 2.0], [1.0, math.exp(-1), math.exp(-2)])
    >>> round(c1, 12), round(c2, 12)
    (1.0, 1.0)
    """
    r = np.asarray(regressors, dtype=float)
    log_lhs = np.log(np.asarray(lhs, dtype=float))
    order = np.argsort(r, kind="stable")
    r, log_lhs = r[order], log_lhs[order]
    dr = np.diff(r)
    usable = dr > _SLACK * np.maximum(1.0, np.abs(r[1:]))
    slopes = -np.diff(log_lhs)[usable] / dr[usable]
    c2 = max(0.0, float(np.max(slopes))) if len(slopes) else 0.0
    c1 = math.exp(float(np.min(log_lhs + c2 * r)))
    return c1, c2


def count_violations(
    regressors: Sequence[float],
    lhs: Sequence[float],
    c1: float,
    c2: float,
    factor: float = 1.0,
) -> int:
    """
    Rows with `lhs < factor * c1 * exp(-c2 * regressor)`.
    """
    if c1 <= 0.0:
        return 0
    r = np.asarray(regressors, dtype=float)
    log_lhs = np.log(np.asarray(lhs, dtype=float))
    bound = math.log(factor * c1) - c2 * r + math.log1p(-_SLACK)
    return int(np.sum(log_lhs < bound))


def _norm(f: Member) -> float:
    return f.norm_l2()


def transform_ratio(op: OperatorMatrix, f: Member) -> float:
    """
    `||H_T f||_L2(J) / ||f||_L2(I)`, with the image averaged over the J
    cells of `op`.
    """
    norm = _norm(f)
    if norm == 0.0:
        raise ValidationException("the zero function has no ratio")
    return apply(op, f).norm_l2() / norm


def _require_grid(f: Member) -> GridFunction:
    if not isinstance(f, GridFunction):
        raise ValidationException("this estimate needs a differentiable function")
    return f


def _sobolev_regressor(f: Member) -> float:
    g = _require_grid(f)
    return g.derivative().norm_l2() / g.norm_l2()


def _l1_regressor(f: Member) -> float:
    if isinstance(f, StepFunction):
        return f.tv(compact=True) / f.norm_l2()
    return f.derivative().norm_l1() / f.norm_l2()


def _tv(f: Member) -> float:
    if isinstance(f, StepFunction):
        return f.tv(compact=True)
    return f.tv()


def _tv_regressor(f: Member) -> float:
    return (_tv(f) / _norm(f)) ** 2


def _rows(
    op: OperatorMatrix, family: Sequence[FamilyMember], regressor: Any
) -> Tuple[BoundRow, ...]:
    rows = []
    for member in sorted(family, key=lambda m: m.param):
        f = member.function
        rows.append(
            BoundRow(
                param=member.param,
                lhs=transform_ratio(op, f),
                regressor=float(regressor(f)),
                l1_regressor=_l1_regressor(f),
                label=member.label,
            )
        )
    return tuple(rows)


def _report(
    theorem_id: TheoremId,
    label: str,
    rows: Tuple[BoundRow, ...],
    config: CaseConfig,
    seed: Optional[int] = None,
    extras: Optional[Dict[str, float]] = None,
) -> BoundReport:
    if not rows:
        raise ValidationException("cannot fit an envelope to an empty family")
    regressors = [row.regressor for row in rows]
    lhs = [row.lhs for row in rows]
    c1, c2 = fit_envelope(regressors, lhs)
    violations = count_violations(regressors, lhs, c1, c2)
    _logger.info(
        f"{theorem_id.value} on {label}: c1={c1:.4e}, c2={c2:.4e}, "
        + f"{violations} violations over {len(rows)} functions"
    )
    return BoundReport(
        theorem_id=theorem_id,
        family_label=label,
        rows=rows,
        c1=c1,
        c2=c2,
        violation_count=violations,
        config=config,
        seed=seed,
        extras=extras or {},
    )


def validate_envelope(
    report: BoundReport, rows: Sequence[BoundRow], factor: float = 0.9
) -> int:
    """
    Violations of `factor` times the fitted envelope on rows from a
    family the envelope was not fitted on.
    """
    return count_violations(
        [row.regressor for row in rows],
        [row.lhs for row in rows],
        report.c1,
        report.c2,
        factor,
    )


def log_linearity(rows: Sequence[BoundRow]) -> float:
    """
    R^2 of `ln lhs` against the family parameter.
    """
    fit = linregress([row.param for row in rows], np.log([row.lhs for row in rows]))
    return float(fit.rvalue**2)


# -------- #
# Families #
# -------- #


def family_mollified_sine(
    interval: Interval,
    n_values: Sequence[float],
    width: float = 0.1,
    envelope: float = 0.05,
    margin: float = 0.02,
    cells: int = 1024,
    points_per_cell: int = 4,
) -> List[FamilyMember]:
    """
    Oscillations `sin(2 pi N (t - 1/2))` under a `sech((t - 1/2)/envelope)`
    envelope and a smooth cutoff that rises over `width` starting at
    `margin` from each end, with `t` the position in I rescaled to
    `[0, 1]`. Members are C-infinity with compact support in I, and
    `||f_x|| / ||f||` grows linearly in `N`.
    """
    if width <= 0.0 or 2.0 * (width + margin) >= 0.5:
        raise ValidationException(
            f"cutoff width {width} and margin {margin} leave no room on I"
        )
    lo, length = interval.lo, interval.length()
    members = []
    for n in n_values:
        if n <= 0:
            raise ValidationException(f"frequency {n} gives the zero function")

        def profile(x: FloatArray, n: float = float(n)) -> FloatArray:
            t = (np.asarray(x, dtype=float) - lo) / length
            rise = smooth_step(2.0 * (t - margin) / width - 1.0)
            fall = smooth_step(2.0 * (1.0 - margin - t) / width - 1.0)
            shape = 1.0 / np.cosh((t - 0.5) / envelope)
            return rise * fall * shape * np.sin(2.0 * math.pi * n * (t - 0.5))

        members.append(
            FamilyMember(
                float(n),
                GridFunction.from_callable(interval, profile, cells, points_per_cell),
                f"sine N={n:g}",
            )
        )
    return members


def family_random_steps(
    span: Interval, counts: Sequence[int], seed: Seed
) -> List[FamilyMember]:
    """
    Step functions on `m` equal cells of `span` with random signs and
    magnitudes in `[0.5, 1.5]`, one per entry of `counts`.
    """
    rng = np.random.default_rng(seed)
    members = []
    for m in counts:
        if m < 1:
            raise ValidationException(f"need at least one step, got {m}")
        signs = rng.choice([-1.0, 1.0], size=m)
        levels = signs * rng.uniform(0.5, 1.5, size=m)
        members.append(
            FamilyMember(
                float(m),
                StepFunction.from_levels((span.lo, span.hi), levels),
                f"random steps m={m}",
            )
        )
    return members


def family_mollified(
    members: Sequence[FamilyMember],
    support: Interval,
    width: float,
    cells: int = 2048,
    points_per_cell: int = 8,
) -> List[FamilyMember]:
    """
    Smooth versions of step function members, compactly supported in
    `support`.
    """
    out = []
    for member in members:
        if not isinstance(member.function, StepFunction):
            raise ValidationException("only step functions can be mollified")
        smooth = mollify(
            member.function,
            support,
            width,
            cells=cells,
            points_per_cell=points_per_cell,
            strict=False,
        )
        out.append(FamilyMember(member.param, smooth, f"mollified {member.label}"))
    return out


def outside_window(config: CaseConfig, mu: float) -> Interval:
    """
    `I` minus `J*` for an overlap configuration, a single interval at the
    far end of I from J.
    """
    window = j_star(config, mu)
    interval_i = config.interval_i
    if window.lo <= interval_i.lo:
        return Interval(window.hi, interval_i.hi)
    return Interval(interval_i.lo, window.lo)


def family_overlap_packets(
    config: CaseConfig,
    mu: float,
    counts: Sequence[int],
    seed: Seed,
    inset: float = 0.2,
) -> List[FamilyMember]:
    """
    Random step functions that live either inside `I` intersected with
    `J*` (labelled "inside") or inside `I` minus `J*` (labelled
    "outside"), each kept `inset` away from the ends of its region.
    """
    window = j_star(config, mu)
    inner = config.interval_i.intersection(window)
    assert inner is not None
    outer = outside_window(config, mu)
    members = []
    for region, label, offset in ((inner, "inside", 0), (outer, "outside", 1)):
        if region.length() <= 2.0 * inset:
            raise ValidationException(f"inset {inset} leaves no room in {region}")
        span = Interval(region.lo + inset, region.hi - inset)
        for member in family_random_steps(span, counts, Seed(seed + offset)):
            members.append(FamilyMember(member.param, member.function, label))
    return members


# ------ #
# Checks #
# ------ #


def verify_thm2(
    op: OperatorMatrix,
    family: Sequence[FamilyMember],
    label: str = "mollified sine",
    seed: Optional[int] = None,
) -> BoundReport:
    """
    Envelope in `||f_x|| / ||f||`.
    """
    rows = _rows(op, family, _sobolev_regressor)
    return _report(TheoremId.THM2, label, rows, op.config, seed)


def _on_sl_grid(spec: SturmLiouvilleSpec, f: Member) -> GridFunction:
    g = _require_grid(f)
    return g.resample(spec.interval, spec.nodes, np.full(spec.cells, spec.h))


def _power_regressor(
    spec: SturmLiouvilleSpec, m: int, exponent: float, use_tv: bool
) -> Any:
    def regressor(f: Member) -> float:
        g = _on_sl_grid(spec, f)
        powered = apply_li_power(spec, g, m).values
        if use_tv:
            size = float(np.sum(np.abs(np.diff(powered))))
        else:
            slopes = np.diff(powered) / spec.h
            size = math.sqrt(spec.h * float(np.sum(slopes**2)))
        return (size / g.norm_l2()) ** exponent

    return regressor


def _check_power(m: int) -> None:
    if not 0 <= m <= 3:
        raise ValidationException(f"power M must be in 0..3, got {m}")


def verify_thm2a(
    op: OperatorMatrix,
    spec: SturmLiouvilleSpec,
    family: Sequence[FamilyMember],
    m: int,
    label: str = "mollified sine",
) -> BoundReport:
    """
    Envelope in `(||(L^M f)_x|| / ||f||)^(1/(2M+1))`. For `M = 0` this is
    exactly the `verify_thm2` regressor.
    """
    _check_power(m)
    if m == 0:
        rows = _rows(op, family, _sobolev_regressor)
    else:
        rows = _rows(op, family, _power_regressor(spec, m, 1.0 / (2 * m + 1), False))
    return _report(TheoremId.THM2A, label, rows, op.config, extras={"M": float(m)})


def verify_thm3(
    op: OperatorMatrix,
    family: Sequence[FamilyMember],
    label: str = "steps",
    seed: Optional[int] = None,
) -> BoundReport:
    """
    Envelope in `tv(f)^2 / ||f||^2`, with step functions extended by zero.
    """
    rows = _rows(op, family, _tv_regressor)
    return _report(TheoremId.THM3, label, rows, op.config, seed)


def verify_thm3a(
    op: OperatorMatrix,
    spec: SturmLiouvilleSpec,
    family: Sequence[FamilyMember],
    m: int,
    label: str = "mollified sine",
) -> BoundReport:
    """
    Envelope in `(tv(L^M f) / ||f||)^(2/(4M+1))`. For `M = 0` this is the
    `verify_thm3` regressor.
    """
    _check_power(m)
    if m == 0:
        rows = _rows(op, family, _tv_regressor)
    else:
        rows = _rows(op, family, _power_regressor(spec, m, 2.0 / (4 * m + 1), True))
    return _report(TheoremId.THM3A, label, rows, op.config, extras={"M": float(m)})


def _vanishes_somewhere(f: Member, region: Interval) -> bool:
    if isinstance(f, StepFunction):
        span = f.support()
        if span.lo > region.lo or span.hi < region.hi:
            return True
        return any(
            level == 0.0 and b > region.lo and a < region.hi
            for level, a, b in zip(f.levels, f.breakpoints, f.breakpoints[1:])
        )
    inside = (f.nodes > region.lo) & (f.nodes < region.hi)
    scale = f.norm_linf()
    return bool(np.any(np.abs(f.values[inside]) <= 1e-14 * scale))


def verify_thm4(
    op: OperatorMatrix,
    mu: float,
    family: Sequence[FamilyMember],
    label: str = "overlap packets",
    seed: Optional[int] = None,
) -> BoundReport:
    """
    Envelope in `tv(chi_{I minus J*} f)^2 / ||f||^2`. Functions living in
    `I` intersected with `J*` have a zero regressor, so the envelope's
    `c1` is at most their smallest ratio.
    """
    config = op.config
    config.require(CaseId.OVERLAP)
    outer = outside_window(config, mu)

    for member in family:
        if not _vanishes_somewhere(member.function, outer):
            raise ValidationException(
                f"{member.label} does not vanish anywhere on I minus J*"
            )

    def regressor(f: Member) -> float:
        if isinstance(f, StepFunction):
            part = f.restrict(outer).tv(compact=True)
        else:
            part = f.masked(outer).tv()
        return (part / _norm(f)) ** 2

    rows = _rows(op, family, regressor)
    inside = [row.lhs for row in rows if row.label == "inside"]
    extras = {"mu": mu}
    if inside:
        extras["min_inside_lhs"] = min(inside)
    return _report(TheoremId.THM4, label, rows, config, seed, extras)


def theorem1_profile(
    op: OperatorMatrix, family: Sequence[FamilyMember], kappa: float
) -> float:
    """
    The smallest ratio over members with `tv(f) / ||f|| <= kappa`.
    """
    ratios = [
        transform_ratio(op, member.function)
        for member in family
        if _tv(member.function) / _norm(member.function) <= kappa
    ]
    if not ratios:
        raise ValidationException(f"no member has tv / norm <= {kappa}")
    return min(ratios)


class PolydecayResult(NamedTuple):
    lhs: float

    rhs: float

    holds: bool


def _sup_distance(a: Interval, b: Interval) -> float:
    return max(abs(a.hi - b.lo), abs(b.hi - a.lo))


def polydecay_bound(
    config: CaseConfig,
    f: StepFunction,
    window: Optional[Interval] = None,
    cells_j: int = MIN_GRAM_J_CELLS,
    raw_kernel: bool = True,
) -> PolydecayResult:
    """
    The lower bound for functions without a root on I. In the gap case the
    factor is `|J|^(1/2) / sup |x - y|`; in the overlap case it is
    `1/2 |J minus I|^(1/2)` over the largest distance from `J minus I` to
    I; with a `window` inside J and disjoint from I it is
    `1/2 |window|^(1/2)` over the largest distance from the window to I.
    The bound is proved for the kernel `1/(x - y)`, which `raw_kernel`
    selects.
    """
    interval_i, interval_j = config.interval_i, config.interval_j
    span = f.support()
    covers = span.lo <= interval_i.lo + 1e-12 and span.hi >= interval_i.hi - 1e-12
    if not covers or any(level <= 0.0 for level in f.levels):
        raise ValidationException("function has a root on I")

    if window is not None:
        if not interval_j.contains(window) or interval_i.intersection(window):
            raise ValidationException("window must lie in J and avoid I")
        factor = 0.5 * math.sqrt(window.length()) / _sup_distance(window, interval_i)
    elif config.case_id == CaseId.GAP:
        factor = math.sqrt(interval_j.length()) / _sup_distance(interval_j, interval_i)
    elif config.case_id == CaseId.OVERLAP:
        if interval_j.lo < interval_i.lo:
            rest = Interval(interval_j.lo, interval_i.lo)
        else:
            rest = Interval(interval_i.hi, interval_j.hi)
        factor = 0.5 * math.sqrt(rest.length()) / _sup_distance(rest, interval_i)
    else:
        raise ValidationException(
            f"no positive-function bound for a {config.case_id.value} configuration"
        )

    norm = f.norm_l2()
    tv = f.tv()
    rhs = factor * (tv**2 / norm**2 + 4.0 / interval_i.length()) ** -0.5 * norm
    op = assemble(config, 1, cells_j, check=False)
    lhs = apply(op, f).norm_l2()
    if raw_kernel:
        lhs *= math.pi
    holds = lhs >= rhs * (1.0 - 1e-6)
    _logger.debug(f"positive-function bound: lhs={lhs:.6e}, rhs={rhs:.6e}")
    return PolydecayResult(lhs, rhs, holds)
