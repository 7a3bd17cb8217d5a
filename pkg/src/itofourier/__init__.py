"""Mean-square approximation of iterated Ito integrals by multiple Fourier-Legendre series."""

from __future__ import annotations

from .coeffdb import CoeffDBError, export_db, import_db
from .coefficients import CoefficientTensor, Weight, WeightSpec, cbar, c_scaled, coefficient_tensor, kernel_norm
from .expansion import (
    NoiseMatrix,
    approx_iterated,
    coefficient_count,
    gen_noise,
    hermite_exact,
    i01_approx,
    i10_approx,
    i11_approx,
    j01_approx,
    j10_approx,
)
from .legendre import RationalPoly, legendre_poly, shifted_basis
from .montecarlo import GridPath, MseEstimate, check_identity, couple_noise, estimate_mse, orthogonality_test, simulate_reference
from .mse import (
    IndexPattern,
    MseReport,
    UnsupportedPatternError,
    E_q,
    e_q,
    g_q,
    min_q,
    min_q_table,
    mse_bound,
    mse_exact_case,
    mse_exact_distinct,
    parseval_bracket,
)
from .partitions import PairPartition, coupled_permutations, pair_partitions
from .qwiener import (
    CompositeOperators,
    MultilinearOperator,
    QWienerSpec,
    approx_composite,
    approx_generic,
    bound_thm4,
    check_orthogonality_inputs,
    composite_error_bound,
)
from .tables import verify_tables

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_") and name != "annotations"]
