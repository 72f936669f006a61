from typing import Callable, NewType

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
"""
A one- or two-dimensional array of double precision reals. Every grid,
matrix and sample vector in the package is one of these.
"""

ComplexArray = npt.NDArray[np.complex128]

Profile = Callable[[FloatArray], FloatArray]
"""
A vectorized function of one real variable. Smooth test functions carry
their profile so that they can be re-sampled exactly on another grid.
"""

Seed = NewType("Seed", int)
"""
A seed for `numpy.random.default_rng`. Every randomized family and noise
draw takes one explicitly so that runs are reproducible.
"""
