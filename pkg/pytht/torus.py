"""
Convolution operators on the unit torus, where the Fourier basis
`e^(2 pi i n x)` diagonalises everything. Used to show that a zero
Fourier coefficient of the kernel is the only obstruction to injectivity,
and that the kernel's coefficient decay can be made to dictate the
stability of inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from logging import getLogger
from typing import Callable, Dict, List, NamedTuple, Tuple

import numpy as np

from .core import GridFunction, Interval, StepFunction, ValidationException
from .types import ComplexArray, FloatArray, Profile

_logger = getLogger(__name__)

UNIT = Interval(0.0, 1.0)


@dataclass(frozen=True, eq=False)
class PeriodicKernel:
    """
    A kernel given by its Fourier coefficients for `n = -K..K`; every
    coefficient outside the band is zero.

    >>> k = PeriodicKernel(np.array([0.5, 1.0, 0.5], dtype=complex), 8)
    >>> k.band, k.coeff(1), k.coeff(5)
    (1, (0.5+0j), 0j)
    """

    fourier_coeffs: ComplexArray

    grid_size: int

    def __post_init__(self) -> None:
        count = len(self.fourier_coeffs)
        if count % 2 != 1:
            raise ValidationException("need an odd number of coefficients, -K..K")
        if self.grid_size < count:
            raise ValidationException(
                f"grid of {self.grid_size} points cannot carry modes up to {count // 2}"
            )
        coeffs = np.asarray(self.fourier_coeffs)
        if not np.allclose(coeffs, np.conj(coeffs[::-1]), rtol=0.0, atol=1e-14):
            raise ValidationException(
                "coefficients must be Hermitian for a real kernel"
            )

    @property
    def band(self) -> int:
        return len(self.fourier_coeffs) // 2

    def coeff(self, n: int) -> complex:
        if abs(n) > self.band:
            return 0j
        return complex(self.fourier_coeffs[n + self.band])

    def multiplier(self) -> ComplexArray:
        """
        Coefficients laid out in FFT order on the grid.
        """
        out = np.zeros(self.grid_size, dtype=complex)
        for n in range(-self.band, self.band + 1):
            out[n % self.grid_size] = self.coeff(n)
        return out

    def to_json(self) -> Dict[str, object]:
        return {
            "band": self.band,
            "grid_size": self.grid_size,
            "real": [float(c.real) for c in self.fourier_coeffs],
            "imag": [float(c.imag) for c in self.fourier_coeffs],
        }

    @staticmethod
    def from_rate(
        target_rate: Callable[[int], float], band: int, grid_size: int
    ) -> PeriodicKernel:
        """
        The real, even kernel with coefficients `target_rate(|n|)`.
        """
        coeffs = np.array(
            [target_rate(abs(n)) for n in range(-band, band + 1)], dtype=complex
        )
        return PeriodicKernel(coeffs, grid_size)


def periodic_grid(grid_size: int, profile: Profile) -> GridFunction:
    """
    Samples at `k / grid_size`, each weighted `1 / grid_size`.
    """
    if grid_size < 2:
        raise ValidationException(f"need at least two grid points, got {grid_size}")
    nodes = np.arange(grid_size) / grid_size
    weights = np.full(grid_size, 1.0 / grid_size)
    values = np.asarray(profile(nodes), dtype=float)
    return GridFunction(UNIT, nodes, weights, values, profile)


def _check_periodic(f: GridFunction, grid_size: int) -> None:
    expected = np.arange(grid_size) / grid_size
    if len(f.nodes) != grid_size or not np.allclose(
        f.nodes, expected, rtol=0.0, atol=1e-12
    ):
        raise ValidationException(
            f"function is not sampled on the periodic grid of {grid_size} points"
        )


def fourier_coefficients(f: GridFunction, band: int) -> ComplexArray:
    """
    `f^(n)` for `n = -band..band`, from the FFT of the samples.
    """
    size = len(f.nodes)
    _check_periodic(f, size)
    if 2 * band + 1 > size:
        raise ValidationException(f"band {band} exceeds the grid of {size} points")
    spectrum = np.fft.fft(f.values) / size
    return np.array([spectrum[n % size] for n in range(-band, band + 1)])


def convolve(kernel: PeriodicKernel, f: GridFunction) -> GridFunction:
    """
    `K * f`, diagonally in Fourier space: modes outside the kernel's band
    are annihilated.
    """
    _check_periodic(f, kernel.grid_size)
    spectrum = np.fft.fft(f.values)
    image = np.fft.ifft(kernel.multiplier() * spectrum).real
    return GridFunction(UNIT, f.nodes, f.weights, image)


def nullspace_vector(kernel: PeriodicKernel) -> GridFunction:
    """
    A unit vector annihilated by the kernel: `sqrt(2) cos(2 pi n0 x)` for
    the smallest `n0 > 0` with a zero coefficient, or the constant one if
    `K^(0) = 0`.
    """
    for n in range(kernel.band + 1):
        if kernel.coeff(n) == 0:
            break
    else:
        raise ValidationException("kernel has no zero coefficient in its band")
    if n == 0:
        return periodic_grid(kernel.grid_size, lambda x: np.ones_like(x))
    _logger.debug(f"kernel coefficient {n} vanishes")
    return periodic_grid(
        kernel.grid_size,
        lambda x: math.sqrt(2.0) * np.cos(2.0 * math.pi * n * x),
    )


def _band_basis(band: int, grid_size: int) -> List[GridFunction]:
    basis = [periodic_grid(grid_size, lambda x: np.ones_like(x))]
    for n in range(1, band + 1):
        for wave in (np.cos, np.sin):
            basis.append(
                periodic_grid(
                    grid_size,
                    lambda x, n=n, wave=wave: math.sqrt(2.0)
                    * wave(2.0 * math.pi * n * x),
                )
            )
    return basis


def band_singular_values(kernel: PeriodicKernel) -> FloatArray:
    """
    Singular values, descending, of the kernel restricted to the real
    trigonometric polynomials of degree at most its band.
    """
    basis = _band_basis(kernel.band, kernel.grid_size)
    images = [convolve(kernel, b) for b in basis]
    matrix = np.array([[b.inner(image) for image in images] for b in basis])
    return np.linalg.svd(matrix, compute_uv=False)


def _step_coefficient(f: StepFunction, n: int) -> complex:
    total = 0j
    for level, a, b in zip(f.levels, f.breakpoints, f.breakpoints[1:]):
        if n == 0:
            total += level * (b - a)
        else:
            total += level * (
                np.exp(-2j * math.pi * n * a) - np.exp(-2j * math.pi * n * b)
            ) / (2j * math.pi * n)
    return complex(total)


def periodic_tv(f: StepFunction) -> float:
    """
    Total variation on the torus, counting the jump across `x = 0`.
    """
    levels = np.asarray(f.levels)
    return float(np.sum(np.abs(np.diff(levels))) + abs(levels[-1] - levels[0]))


def taibleson_check(f: StepFunction, band: int = 256) -> float:
    """
    `max n |f^(n)| / tv(f)` over `1 <= n <= band`, in closed form for a
    step function on `[0, 1]`.

    >>> square = StepFunction((0.0, 0.5, 1.0), (1.0, -1.0))
    >>> round(taibleson_check(square) * 2 * math.pi, 9)
    1.0
    """
    span = f.support()
    if abs(span.lo) > 1e-12 or abs(span.hi - 1.0) > 1e-12:
        raise ValidationException("a torus step function must cover [0, 1]")
    if f.norm_l2() == 0.0:
        raise ValidationException("the zero function has no Taibleson constant")
    tv = periodic_tv(f)
    if tv == 0.0:
        return 0.0
    return max(n * abs(_step_coefficient(f, n)) for n in range(1, band + 1)) / tv


class ModelFit(NamedTuple):
    rate: float
    """
    Exponential rate, or polynomial exponent.
    """

    aic: float


class DecayDemo(NamedTuple):
    kernel: PeriodicKernel

    n_values: Tuple[int, ...]

    coefficients: Tuple[float, ...]
    """
    `|K^(n)|`.
    """

    envelope: Tuple[float, ...]
    """
    Smallest `||T f|| / ||f||` over unit modes up to degree `n`.
    """

    exponential: ModelFit

    polynomial: ModelFit

    preferred: str

    max_ratio: float
    """
    Largest factor between envelope and target over the band.
    """

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"n": float(n), "abs_coeff": c, "envelope": e}
            for n, c, e in zip(self.n_values, self.coefficients, self.envelope)
        ]


def _aic(x: FloatArray, y: FloatArray) -> ModelFit:
    slope, intercept = np.polyfit(x, y, 1)
    rss = float(np.sum((y - (slope * x + intercept)) ** 2))
    m = len(x)
    aic = m * math.log(max(rss / m, 1e-300)) + 4.0
    return ModelFit(-float(slope), aic)


def designed_decay_demo(
    target_rate: Callable[[int], float], band: int = 32, grid_size: int = 0
) -> DecayDemo:
    """
    Build the kernel with `K^(n) = target_rate(|n|)` and measure how the
    inverse stability over band-limited functions follows it. The
    envelope is fitted against `n` (exponential model) and against
    `ln n` (polynomial model); the lower AIC wins.
    """
    if band < 3:
        raise ValidationException(f"need a band of at least 3 modes, got {band}")
    grid_size = grid_size or 4 * band + 4
    rates = [target_rate(n) for n in range(band + 1)]
    if any(not r > 0.0 for r in rates):
        raise ValidationException("target rate must be positive")
    if any(b > a for a, b in zip(rates, rates[1:])):
        _logger.warning("target rate is not decreasing")

    kernel = PeriodicKernel.from_rate(target_rate, band, grid_size)
    n_values = tuple(range(1, band + 1))
    coefficients, envelope = [], []
    smallest = math.inf
    for n in range(band + 1):
        mode = periodic_grid(
            grid_size, lambda x, n=n: math.sqrt(2.0) * np.cos(2.0 * math.pi * n * x)
        )
        ratio = convolve(kernel, mode).norm_l2() / mode.norm_l2()
        smallest = min(smallest, ratio)
        if n > 0:
            coefficients.append(abs(kernel.coeff(n)))
            envelope.append(smallest)

    x = np.asarray(n_values, dtype=float)
    y = np.log(np.asarray(envelope))
    exponential = _aic(x, y)
    polynomial = _aic(np.log(x), y)
    if abs(exponential.rate) < 1e-12 and abs(polynomial.rate) < 1e-12:
        preferred = "flat"
    elif exponential.aic <= polynomial.aic:
        preferred = "exponential"
    else:
        preferred = "polynomial"
    ratio = np.asarray(envelope) / np.asarray(rates[1:])
    max_ratio = float(np.max(np.maximum(ratio, 1.0 / ratio)))
    _logger.info(
        f"designed decay: {preferred}, exponential rate {exponential.rate:.4f}, "
        + f"polynomial exponent {polynomial.rate:.4f}"
    )
    return DecayDemo(
        kernel=kernel,
        n_values=n_values,
        coefficients=tuple(coefficients),
        envelope=tuple(envelope),
        exponential=exponential,
        polynomial=polynomial,
        preferred=preferred,
        max_ratio=max_ratio,
    )


DECAY_TARGETS: Dict[str, Callable[[int], float]] = {
    "exponential": lambda n: math.exp(-n),
    "polynomial": lambda n: 1.0 / (1.0 + n) ** 2,
    "flat": lambda n: 1.0,
}
"""
Named coefficient profiles offered on the command line.
"""
