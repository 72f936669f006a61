from .asymptotics import (
    AsymptoticConstants,
    EmpiricalConstants,
    constants,
    empirical_constants,
    predicted_eigenvalue,
)
from .bounds import (
    BoundReport,
    BoundRow,
    FamilyMember,
    PolydecayResult,
    TheoremId,
    fit_envelope,
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
    DomainException,
    GridFunction,
    Interval,
    StepFunction,
    ValidationException,
    classify,
    mollify,
)
from .formatter import (
    CSVFormatter,
    Formatter,
    FormatterException,
    JSONFormatter,
)
from .gram import GramResult, decay_fit, gram_for_cells, least_sine_combination
from .operator import OperatorMatrix, apply, assemble, entry, h_indicator
from .reconstruct import (
    DiameterRow,
    InverseProblem,
    ReconstructionResult,
    diameter_bound,
    diameter_rate,
    make_problem,
    reconstruct_tv,
    solve_penalized,
    tv_prox,
)
from .spectral import (
    SpectralDecomposition,
    SturmLiouvilleSpec,
    apply_li_power,
    cross_validate,
    sigma_decay_fit,
    sturm_liouville_eigs,
    svd_of_operator,
)
from .torus import (
    PeriodicKernel,
    band_singular_values,
    convolve,
    designed_decay_demo,
    nullspace_vector,
    taibleson_check,
)
