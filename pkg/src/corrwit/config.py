"""
Correlation witness toolkit - configuration
Module-level defaults; every public operation takes these as keyword defaults.
"""

# ─────────────────────────────────────────
# Memory guardrails
# ─────────────────────────────────────────
MAX_DENSE_BYTES        = 2 * 1024 ** 3   # refuse dense complex128 matrices above this
# MAX_DENSE_BYTES      = 256 * 1024 ** 2 # laptop setting
FULL_SPACE_DENSE_LIMIT = 4096            # d^(2L) above this: matrix-free compression only
COMPLEX_BYTES          = 16

# ─────────────────────────────────────────
# Tolerances
# ─────────────────────────────────────────
ISOMETRY_TOL   = 1e-12   # J†J = I at construction
OPERATOR_TOL   = 1e-10   # composed operators (A² = A, A = A†, ...)
DENSITY_TOL    = 1e-10   # hermiticity / positivity / trace of density matrices
KERNEL_REL_TOL = 1e-9    # |eigenvalue| < KERNEL_REL_TOL * max|eigenvalue| counts as kernel
DECISION_TOL   = 1e-9    # f > DECISION_TOL  =>  verdict "correlated"
SCHMIDT_TOL    = 1e-12   # Σ λ_i² = 1

# ─────────────────────────────────────────
# Monte Carlo
# ─────────────────────────────────────────
DEFAULT_SEED    = 1
DEFAULT_SAMPLES = 10_000
DEFAULT_THREADS = 1
CHUNK_SIZE      = 256    # samples per worker task

# ─────────────────────────────────────────
# Output
# ─────────────────────────────────────────
FLOAT_DIGITS = 17
CSV_SCHEMA   = "corrwit-fraction/1"
CSV_COLUMNS  = (
    "class", "d", "L", "purity", "P_cr", "X", "N", "n_samples",
    "fraction", "std_err", "bound", "mean_f", "seed",
)
LOG_FORMAT   = "[%(name)s] %(levelname)s: %(message)s"
