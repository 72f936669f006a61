import importlib.resources as pkg_resources

version = pkg_resources.read_text("pytht", "version.txt")
CURRENT_VERSION = version.strip()

ALPHA_RANGE = (1e-14, 1e2)
"""
The bracket, in regularization weight, searched by the discrepancy
principle during TV reconstruction.
"""

CSV_FLOAT_FORMAT = "%.17g"
"""
Floats are written with enough digits to round-trip exactly, which is
what makes repeated runs byte-identical.
"""

DEFAULT_OUTPUT_PATH = "pytht-out"

DEFAULT_POINTS_PER_CELL = 8
"""
Gauss-Legendre points used on each cell of a composite rule unless the
caller asks for something else.
"""

DISCREPANCY_BAND = (0.95, 1.05)
"""
A reconstruction is accepted once its residual lies within this band,
relative to the noise level.
"""

MAX_SOLVER_ITERATIONS = 50_000

MIN_GRAM_J_CELLS = 512
"""
The Gram construction integrates images over J with at least this many
cells so that the quadrature is converged well below the smallest
eigenvalue of interest.
"""

PROGRAM_DESCRIPTION = (
    "Assemble, decompose and invert the truncated Hilbert transform "
    + "between two intervals, and check its stability estimates."
)

PROGRAM_NAME = "pytht"

RESOLUTION_FLOOR = 1e-12
"""
Singular values below this fraction of the largest one are treated as
unresolved in double precision and excluded from fits.
"""

SOLVER_TOLERANCE = 1e-9
"""
Relative tolerance for the ADMM primal and dual residuals.
"""
