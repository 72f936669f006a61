"""
Asymptotic constants of the gap configuration: the complete elliptic
integrals `K+` and `K-` of the two complementary cross-ratios, and the
eigenvalue growth and singular value decay rates they predict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from logging import getLogger
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np

from .core import CaseConfig, CaseId, DomainException, Endpoints

_logger = getLogger(__name__)

_AGM_TOLERANCE = 1e-16

_AGM_MAX_ITERATIONS = 64


def gauss_2f1_half(z: float) -> float:
    """
    The hypergeometric function 2F1(1/2, 1/2; 1; z) for `0 <= z < 1`,
    computed as `1 / AGM(1, sqrt(1 - z))`.

    >>> gauss_2f1_half(0.0)
    1.0
    >>> round(gauss_2f1_half(0.75), 4)
    1.3729
    """
    if not 0.0 <= z < 1.0:
        raise DomainException(f"2F1(1/2, 1/2; 1; z) needs 0 <= z < 1, got {z}")
    a, g = 1.0, math.sqrt(1.0 - z)
    for _ in range(_AGM_MAX_ITERATIONS):
        if abs(a - g) <= _AGM_TOLERANCE * a:
            break
        a, g = 0.5 * (a + g), math.sqrt(a * g)
    return 1.0 / a


def cross_ratios(a: Endpoints) -> Tuple[float, float]:
    """
    The moduli `(z+, z-)` of canonical endpoints `a1 < a2 <= a3 < a4`.
    They always sum to one.

    >>> cross_ratios((-2.0, -1.0, 1.0, 2.0))
    (0.8888888888888888, 0.1111111111111111)
    """
    a1, a2, a3, a4 = a
    denominator = (a4 - a2) * (a3 - a1)
    z_plus = (a3 - a2) * (a4 - a1) / denominator
    z_minus = (a2 - a1) * (a4 - a3) / denominator
    return z_plus, z_minus


@dataclass(frozen=True)
class AsymptoticConstants:
    endpoints: Endpoints

    z_plus: float

    z_minus: float

    k_plus: float

    k_minus: float

    lambda_coeff: float
    """
    `(pi / K-)^2`, the predicted growth `lambda_n ~ lambda_coeff (n + 1/2)^2`.
    `K-` is the length of I in the Liouville variable of the differential
    operator.
    """

    sigma_rate: float
    """
    `pi K+ / K-`, the predicted decay `sigma_n ~ exp(-sigma_rate * n)`.
    """

    def to_json(self) -> Dict[str, float]:
        a1, a2, a3, a4 = self.endpoints
        return {
            "a1": a1,
            "a2": a2,
            "a3": a3,
            "a4": a4,
            "z_plus": self.z_plus,
            "z_minus": self.z_minus,
            "K_plus": self.k_plus,
            "K_minus": self.k_minus,
            "lambda_coeff": self.lambda_coeff,
            "sigma_rate": self.sigma_rate,
        }


def _elliptic(prefactor: float, z: float) -> float:
    if z >= 1.0:
        return math.inf
    return prefactor * gauss_2f1_half(z)


def constants(config: CaseConfig) -> AsymptoticConstants:
    config.require(CaseId.GAP)
    assert config.endpoints is not None
    a1, a2, a3, a4 = config.endpoints
    z_plus, z_minus = cross_ratios(config.endpoints)
    prefactor = math.pi / math.sqrt((a4 - a2) * (a3 - a1))
    k_plus = _elliptic(prefactor, z_plus)
    k_minus = _elliptic(prefactor, z_minus)
    if math.isinf(k_minus):
        _logger.warning(
            "touching intervals: K- diverges, the predicted rates degenerate to 0"
        )
        lambda_coeff, sigma_rate = 0.0, 0.0
    else:
        lambda_coeff = (math.pi / k_minus) ** 2
        sigma_rate = math.pi * k_plus / k_minus
    _logger.info(
        f"K+={k_plus:.6f}, K-={k_minus:.6f}, sigma_rate={sigma_rate:.6f}"
    )
    return AsymptoticConstants(
        endpoints=config.endpoints,
        z_plus=z_plus,
        z_minus=z_minus,
        k_plus=k_plus,
        k_minus=k_minus,
        lambda_coeff=lambda_coeff,
        sigma_rate=sigma_rate,
    )


def predicted_eigenvalue(values: AsymptoticConstants, n: int) -> float:
    return values.lambda_coeff * (n + 0.5) ** 2


class EmpiricalConstants(NamedTuple):
    """
    Constants fitted to computed spectra. They certify the computed
    range only.
    """

    k1: float
    """
    Largest `k1` with `lambda_n >= k1 n^2` for all computed `n >= 1`.
    """

    k2: float
    """
    Smallest `k2` with `sigma_n >= exp(-k2 n)` for all computed `n >= 1`.
    """

    big_k2: float
    """
    The fitted decay rate of `sigma_n`.
    """

    big_k2_tilde: float
    """
    Smallest `K~2` with `sigma_n <= K~2 exp(-K2 n)` for all computed `n`.
    """


def empirical_constants(
    lambdas: Sequence[float], sigmas: Sequence[float], rate: float
) -> EmpiricalConstants:
    lam = np.asarray(lambdas, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    n_lam = np.arange(len(lam))
    n_sig = np.arange(len(sig))
    k1 = float(np.min(lam[1:] / n_lam[1:] ** 2))
    k2 = float(np.max(-np.log(sig[1:]) / n_sig[1:]))
    tilde = float(np.max(sig * np.exp(rate * n_sig)))
    return EmpiricalConstants(k1=k1, k2=k2, big_k2=rate, big_k2_tilde=tilde)
