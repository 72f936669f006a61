import json
import math
import os
import time
from logging import getLogger
from typing import Any, Callable, Dict, Iterable, List, Mapping, NamedTuple

import numpy as np

from ._options import Options
from .asymptotics import constants, empirical_constants, predicted_eigenvalue
from .bounds import (
    BoundReport,
    FamilyMember,
    TheoremId,
    count_violations,
    family_mollified,
    family_mollified_sine,
    family_overlap_packets,
    family_random_steps,
    log_linearity,
    polydecay_bound,
    theorem1_profile,
    verify_thm2,
    verify_thm2a,
    verify_thm3,
    verify_thm3a,
    verify_thm4,
)
from .constants import CURRENT_VERSION, PROGRAM_NAME
from .core import (
    CaseConfig,
    CaseId,
    ConvergenceException,
    GridFunction,
    Interval,
    StepFunction,
    bump,
    classify,
)
from .formatter import get_formatter
from .gram import decay_fit, gram_for_cells, least_sine_combination
from .operator import OperatorMatrix, assemble
from .reconstruct import diameter_rate, rate_correlation
from .spectral import (
    SturmLiouvilleSpec,
    asymptotic_primitive_decay,
    cross_validate,
    overlap_localization,
    sigma_decay_fit,
    sturm_liouville_eigs,
    svd_of_operator,
)
from .torus import DECAY_TARGETS, designed_decay_demo
from .types import Seed

_logger = getLogger(__name__)

EXIT_OK = 0

EXIT_INVALID = 2

EXIT_NOT_CONVERGED = 3

SINE_FREQUENCIES = tuple(range(2, 13))

VALIDATION_FREQUENCIES = tuple(n + 0.5 for n in range(2, 12))

STEP_COUNTS = tuple(range(2, 21))

VALIDATION_WIDTH = 1e-3
"""
Mollifier half-width for the smoothed step functions of validation
families, small enough that their ratios stay close to the steps'.
"""


class Artifact(NamedTuple):
    name: str

    header: Mapping[str, Any]

    rows: Iterable[Mapping[str, Any]]


class Outcome(NamedTuple):
    artifacts: List[Artifact]

    converged: bool = True


# -------- #
# Families #
# -------- #


def _inner_span(interval: Interval) -> Interval:
    return Interval(
        interval.lo + 0.1 * interval.length(), interval.hi - 0.1 * interval.length()
    )


def _low_bump(interval: Interval) -> FamilyMember:
    centre, half = interval.midpoint(), 0.4 * interval.length()

    def profile(x: Any) -> Any:
        return bump((x - centre) / half)

    smooth = GridFunction.from_callable(interval, profile, 1024, 4)
    return FamilyMember(0.0, smooth, "bump")


def _sine_family(op: OperatorMatrix) -> List[FamilyMember]:
    interval = op.config.interval_i
    family = family_mollified_sine(interval, SINE_FREQUENCIES)
    family.append(_low_bump(interval))
    if op.config.case_id == CaseId.GAP:
        worst = least_sine_combination(op)
        family.append(FamilyMember(1.0, worst.function, "least sine combination"))
    return family


def _validation_sines(op: OperatorMatrix) -> List[FamilyMember]:
    return family_mollified_sine(op.config.interval_i, VALIDATION_FREQUENCIES)


def _step_family(options: Options, op: OperatorMatrix) -> List[FamilyMember]:
    family = family_random_steps(
        _inner_span(op.config.interval_i), STEP_COUNTS, Seed(options.seed)
    )
    if op.config.case_id == CaseId.GAP:
        worst = gram_for_cells(op.config, 5).worst_function
        family.append(FamilyMember(5.0, worst, "gram worst"))
    return family


def _validation_steps(options: Options, op: OperatorMatrix) -> List[FamilyMember]:
    interval = op.config.interval_i
    steps = family_random_steps(
        _inner_span(interval), STEP_COUNTS, Seed(options.seed + 1000)
    )
    return family_mollified(steps, interval, VALIDATION_WIDTH)


# -------- #
# Commands #
# -------- #


def _config(options: Options) -> CaseConfig:
    return classify(options.interval_i, options.interval_j)


def _classify(options: Options) -> Outcome:
    config = _config(options)
    row: Dict[str, Any] = {
        "case": config.case_id.value,
        "i_lo": config.interval_i.lo,
        "i_hi": config.interval_i.hi,
        "j_lo": config.interval_j.lo,
        "j_hi": config.interval_j.hi,
        "reflected": config.reflected,
    }
    for k, a in enumerate(config.endpoints or (None,) * 4, start=1):
        row[f"a{k}"] = a
    return Outcome([Artifact("case", config.to_json(), [row])])


def _assemble(options: Options) -> Outcome:
    op = assemble(_config(options), options.cells_i, options.cells_j)
    header = {
        "config": op.config.to_json(),
        "cells_i": op.cells_i,
        "cells_j": op.cells_j,
    }
    sigmas = op.singular_values()
    return Outcome(
        [
            Artifact("matrix", header, op.to_rows()),
            Artifact(
                "singular-values",
                header,
                [{"n": n, "sigma": float(s)} for n, s in enumerate(sigmas)],
            ),
        ]
    )


def _gram(options: Options) -> Outcome:
    config = _config(options)
    n = options.n or 3
    result = gram_for_cells(config, n, raw_kernel=options.raw_kernel)
    header = {
        "config": config.to_json(),
        "n": n,
        "raw_kernel": options.raw_kernel,
        "lambda_min": result.lambda_min(),
    }
    worst = result.worst_function
    pieces = zip(worst.levels, worst.breakpoints, worst.breakpoints[1:])
    artifacts = [
        Artifact("eigenvalues", header, result.to_rows()),
        Artifact(
            "worst",
            header,
            [
                {"lo": a, "hi": b, "level": level}
                for level, a, b in pieces
            ],
        ),
    ]
    if n >= 4:
        fit = decay_fit(config, n, raw_kernel=options.raw_kernel)
        fit_header = {
            **header,
            "c": fit.c,
            "beta": fit.beta,
            "truncated": fit.truncated,
        }
        artifacts.append(
            Artifact(
                "decay",
                fit_header,
                [
                    {"n": k, "lambda_min": lam}
                    for k, lam in zip(fit.n_values, fit.lambda_min)
                ],
            )
        )
    return Outcome(artifacts)


def _svd(options: Options) -> Outcome:
    config = _config(options)
    op = assemble(config, options.cells_i, options.cells_j)
    k = min(options.n or 8, op.cells_i, op.cells_j)
    svd = svd_of_operator(op, k)
    header: Dict[str, Any] = {"config": config.to_json(), "requested": k}
    rows: List[Dict[str, Any]] = [
        {"n": n, "sigma": float(s)} for n, s in enumerate(svd.sigmas)
    ]
    artifacts = [Artifact("sigma", header, rows)]

    if config.case_id == CaseId.GAP:
        values = constants(config)
        fit = sigma_decay_fit(svd)
        header.update(values.to_json())
        header.update({"fitted_rate": fit.rate, "r_squared": fit.r_squared})
        cells = max(1024, 10 * (len(svd) + 1))
        spec = SturmLiouvilleSpec.from_config(config, cells)
        sl = sturm_liouville_eigs(spec, len(svd))
        correlations = cross_validate(svd, sl)
        artifacts.append(
            Artifact(
                "cross-validation",
                header,
                [
                    {
                        "n": n,
                        "correlation": float(c),
                        "lambda": float(sl.lambdas[n]),
                        "predicted_lambda": predicted_eigenvalue(values, n),
                    }
                    for n, c in enumerate(correlations)
                ],
            )
        )
        empirical = empirical_constants(sl.lambdas, svd.sigmas, fit.rate)
        header["empirical"] = empirical._asdict()
        try:
            primitive = asymptotic_primitive_decay(svd)
        except ConvergenceException as e:
            _logger.info(f"no primitive decay fit: {e}")
        else:
            artifacts.append(
                Artifact(
                    "primitive",
                    {**header, "slope": primitive.slope},
                    [
                        {"n": n, "max_primitive": m}
                        for n, m in zip(primitive.n_values, primitive.maxima)
                    ],
                )
            )
    elif config.case_id == CaseId.OVERLAP:
        assert options.mu is not None
        local = overlap_localization(svd, options.mu)
        local_header = {
            **header,
            "j_star": local.j_star.to_json(),
            "rate": local.rate,
            "r_squared": local.r_squared,
            "primitive_slope": local.primitive_slope,
        }
        artifacts.append(
            Artifact(
                "localization",
                local_header,
                [
                    {"n": n, "inside": a, "outside": b, "max_primitive": p}
                    for n, a, b, p in zip(
                        local.n_values,
                        local.norms_inside,
                        local.norms_outside,
                        local.primitive_maxima,
                    )
                ],
            )
        )
    return Outcome(artifacts)


def _asymptotics(options: Options) -> Outcome:
    config = _config(options)
    values = constants(config)
    return Outcome([Artifact("constants", config.to_json(), [values.to_json()])])


def _bound_artifact(
    report: BoundReport,
    validation: List[FamilyMember],
    checker: Callable[[List[FamilyMember]], BoundReport],
) -> Artifact:
    header = report.header()
    if validation:
        held_out = checker(validation)
        header["validation_violations"] = count_violations(
            [row.regressor for row in held_out.rows],
            [row.lhs for row in held_out.rows],
            report.c1,
            report.c2,
            0.9,
        )
        header["validation_family"] = held_out.family_label
    if report.theorem_id in (TheoremId.THM2, TheoremId.THM2A):
        sines = [row for row in report.rows if row.label.startswith("sine")]
        if len(sines) > 2:
            header["sine_log_linearity"] = log_linearity(sines)
    return Artifact(report.theorem_id.value, header, report.to_rows())


def _polydecay(config: CaseConfig, seed: int) -> Artifact:
    rng = np.random.default_rng(seed)
    span = (config.interval_i.lo, config.interval_i.hi)
    rows = []
    all_hold = True
    for index in range(20):
        m = int(rng.integers(1, 21))
        f = StepFunction.from_levels(span, rng.uniform(0.1, 2.0, size=m))
        result = polydecay_bound(config, f, raw_kernel=True)
        all_hold = all_hold and result.holds
        rows.append(
            {
                "index": index,
                "steps": m,
                "lhs": result.lhs,
                "rhs": result.rhs,
                "holds": result.holds,
            }
        )
    header = {
        "config": config.to_json(),
        "seed": seed,
        "all_hold": all_hold,
        "raw_kernel": True,
    }
    return Artifact("polydecay", header, rows)


def _verify(options: Options) -> Outcome:
    config = _config(options)
    theorem = options.theorem
    seed = options.seed
    power = options.power
    mu = options.mu or 0.5

    if theorem == TheoremId.POLYDECAY:
        return Outcome([_polydecay(config, seed)])

    op = assemble(config, options.cells_i, options.cells_j)

    if theorem == TheoremId.THM2:
        report = verify_thm2(op, _sine_family(op), seed=seed)
        artifact = _bound_artifact(
            report,
            _validation_sines(op),
            lambda f: verify_thm2(op, f, "half-integer sine"),
        )
    elif theorem in (TheoremId.THM2A, TheoremId.THM3A):
        spec = SturmLiouvilleSpec.from_config(config, 2048)
        check = verify_thm2a if theorem == TheoremId.THM2A else verify_thm3a
        family = family_mollified_sine(config.interval_i, SINE_FREQUENCIES)
        report = check(op, spec, family, power)
        artifact = _bound_artifact(
            report,
            _validation_sines(op),
            lambda f: check(op, spec, f, power, "half-integer sine"),
        )
    elif theorem == TheoremId.THM3:
        report = verify_thm3(op, _step_family(options, op), seed=seed)
        artifact = _bound_artifact(
            report,
            _validation_steps(options, op),
            lambda f: verify_thm3(op, f, "mollified steps"),
        )
    elif theorem == TheoremId.THM4:
        family = family_overlap_packets(config, mu, range(2, 13), Seed(seed))
        report = verify_thm4(op, mu, family, seed=seed)
        artifact = _bound_artifact(
            report,
            family_overlap_packets(config, mu, range(3, 14), Seed(seed + 1000)),
            lambda f: verify_thm4(op, mu, f, "held-out packets"),
        )
    else:
        kappa = options.kappa or 10.0
        family = family_random_steps(
            _inner_span(config.interval_i), STEP_COUNTS, Seed(seed)
        )
        refined = assemble(config, options.cells_i, 2 * options.cells_j)
        rows = [
            {
                "cells_j": mesh.cells_j,
                "kappa": kappa,
                "profile": theorem1_profile(mesh, family, kappa),
            }
            for mesh in (op, refined)
        ]
        header = {"config": config.to_json(), "seed": seed}
        artifact = Artifact("thm1", header, rows)
    return Outcome([artifact])


def _reconstruct(options: Options) -> Outcome:
    config = _config(options)
    interval = config.interval_i
    f_ex = StepFunction.from_levels((interval.lo, interval.hi), (1.0, -0.5, 0.75))

    op = assemble(config, options.cells_i, options.cells_j)
    envelope = verify_thm3(op, _step_family(options, op), seed=options.seed)
    seeds = [options.seed + k for k in range(options.seeds)]
    rows = diameter_rate(
        config, f_ex, options.delta_list, seeds, envelope.c1, envelope.c2, options.kappa
    )
    converged = all(row.converged for row in rows)
    header = {
        "config": config.to_json(),
        "c1": envelope.c1,
        "c2": envelope.c2,
        "seeds": seeds,
        "pearson": rate_correlation(rows),
        "all_within_bound": all(row.within_bound for row in rows),
    }
    table = [
        {
            "delta": row.delta,
            "median_error": row.median_error,
            "bound": row.bound,
            "in_regime": row.in_regime,
            "converged": row.converged,
        }
        for row in rows
    ]
    per_seed = [
        {
            "delta": row.delta,
            "seed": seed,
            "error": error,
            "residual": residual,
            "tv": tv,
            "iterations": iterations,
        }
        for row in rows
        for seed, error, residual, tv, iterations in zip(
            seeds, row.errors, row.residuals, row.tvs, row.iterations
        )
    ]
    return Outcome(
        [Artifact("diameter", header, table), Artifact("solves", header, per_seed)],
        converged,
    )


def _torus(options: Options) -> Outcome:
    demo = designed_decay_demo(DECAY_TARGETS[options.decay], band=options.n or 32)
    header = {
        "decay": options.decay,
        "kernel": demo.kernel.to_json(),
        "preferred": demo.preferred,
        "exponential_rate": demo.exponential.rate,
        "polynomial_exponent": demo.polynomial.rate,
        "max_ratio": demo.max_ratio,
    }
    return Outcome([Artifact("decay", header, demo.to_rows())])


_commands: Dict[str, Callable[[Options], Outcome]] = {
    "classify": _classify,
    "assemble": _assemble,
    "gram": _gram,
    "svd": _svd,
    "asymptotics": _asymptotics,
    "verify": _verify,
    "reconstruct": _reconstruct,
    "torus": _torus,
}


def _write(artifact: Artifact, format_name: str, destination: str) -> None:
    formatter = get_formatter(format_name, destination)
    assert formatter is not None
    formatter.prologue(artifact.header)
    formatter.write_all(artifact.rows)
    formatter.epilogue()


def _sanitize(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    return value


def run(options: Options) -> int:
    started = time.perf_counter()
    outcome = _commands[options.command](options)
    label = options.command
    if options.theorem is not None:
        label = f"{label} {options.theorem.value}"

    if options.output == ":stdout:":
        for artifact in outcome.artifacts:
            _write(artifact, options.format_name, ":stdout:")
    else:
        os.makedirs(options.output, exist_ok=True)
        files = []
        for artifact in outcome.artifacts:
            name = f"{options.command}-{artifact.name}.{options.format_name}"
            _logger.debug(f"writing {name}")
            _write(artifact, options.format_name, os.path.join(options.output, name))
            files.append({"file": name, "header": _sanitize(dict(artifact.header))})
        manifest = {
            "program": PROGRAM_NAME,
            "version": CURRENT_VERSION,
            "command": label,
            "options": options.to_json(),
            "files": files,
            "wall_time": time.perf_counter() - started,
        }
        path = os.path.join(options.output, "manifest.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)
            f.write("\n")

    _logger.info(f"{label} finished in {time.perf_counter() - started:.2f}s")
    if not outcome.converged:
        _logger.error(f"{label} did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK
