"""
Correlation criteria on density matrices.

f(ρ) = tr((ρ⊗ρ) V) with V = A − P^asym. Because tr((ρ⊗ρ) τ) = tr ρ², the
antisymmetric part contributes (1 − tr ρ²)/2 and is never materialized.
"""

import itertools
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from corrwit import config
from corrwit.data_structures import DensityMatrix, StateClass, TwoFermionSchmidt, WitnessReport
from corrwit.errors import ValidationError
from corrwit.operators import LinearOperator, ProjectorA, build_A, majorana_ops, two_copy_expectation
from corrwit.spaces import fock_sector_isometry

logger = logging.getLogger(__name__)

CORRELATED = "correlated"
UNDETECTED = "undetected"


def _check_dim(A: ProjectorA, rho: DensityMatrix, what: str = "density matrix"):
    if rho.dim != A.N:
        raise ValidationError(
            f"{what} has dimension {rho.dim}, {A.state_class.label} needs {A.N}")


def witness_value(A: ProjectorA, rho: DensityMatrix, tol: float = config.DECISION_TOL) -> WitnessReport:
    """
    Quadratic witness f(ρ) and its verdict.

    Args:
        A: projector of the class ρ is tested against
        rho: density matrix on the class's physical space
        tol: decision tolerance; 'correlated' iff f > tol

    Returns:
        WitnessReport
    """
    _check_dim(A, rho)
    purity = rho.purity
    f = two_copy_expectation(A.operator, rho, rho).real - (1.0 - purity) / 2.0
    verdict = CORRELATED if f > tol else UNDETECTED
    return WitnessReport(f_value=float(f), purity=purity, verdict=verdict,
                         state_class=A.state_class, tolerance=tol)


def bilinear_witness(A: ProjectorA, rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """tr((ρ₁⊗ρ₂) V); positive means both ρ₁ and ρ₂ are correlated."""
    _check_dim(A, rho1)
    _check_dim(A, rho2)
    overlap = float(np.trace(rho1.matrix @ rho2.matrix).real)
    return float(two_copy_expectation(A.operator, rho1, rho2).real - (1.0 - overlap) / 2.0)


def linear_witness(V: LinearOperator, rho: DensityMatrix, B: np.ndarray,
                   tol: float = config.DENSITY_TOL) -> float:
    """tr((ρ⊗B) V) for a positive semidefinite B; positive means ρ is outside the convex hull."""
    B = np.asarray(getattr(B, "matrix", B), dtype=complex)
    n = math.isqrt(V.dim)
    if B.shape != (n, n) or rho.dim != n:
        raise ValidationError(f"operands of dims {rho.dim}, {B.shape} do not match V on C^{n} ⊗ C^{n}")
    if np.abs(B - B.conj().T).max(initial=0.0) > tol:
        raise ValidationError("B is not Hermitian")
    lowest = float(np.linalg.eigvalsh((B + B.conj().T) / 2)[0])
    if lowest < -tol:
        raise ValidationError(f"B is not positive semidefinite (eigenvalue {lowest:.3e})")
    return float(two_copy_expectation(V, rho, B).real)


def pure_membership(A: ProjectorA, psi: np.ndarray, tol: float = config.DENSITY_TOL) -> float:
    """⟨ψψ|A|ψψ⟩; zero (within tolerance) for members of the class."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != A.N:
        raise ValidationError(f"state vector has length {psi.size}, {A.state_class.label} needs {A.N}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"state vector has norm {norm!r}, not 1")
    proj = np.outer(psi, psi.conj())
    return float(two_copy_expectation(A.operator, proj, proj).real)


def correlation_matrix(rho, d: int) -> np.ndarray:
    """
    M_kl = (i/2) tr(ρ [c_k, c_l]) for a state on FockFull(d) or FockEven(d).

    Returns a real antisymmetric 2d x 2d matrix.
    """
    R = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    if R.shape == (2 ** (d - 1),) * 2 and d > 0:
        J = fock_sector_isometry(d, "even").matrix
        R = J @ R @ J.conj().T
    elif R.shape != (2 ** d,) * 2:
        raise ValidationError(f"state of shape {R.shape} is not on the Fock space of {d} modes")
    cs = [c.matrix for c in majorana_ops(d)]
    M = np.zeros((2 * d, 2 * d), dtype=complex)
    for k, l in itertools.combinations(range(2 * d), 2):
        value = 0.5j * np.trace(R @ (cs[k] @ cs[l] - cs[l] @ cs[k]))
        M[k, l] = value
        M[l, k] = -value
    imag = float(np.abs(M.imag).max(initial=0.0))
    if imag > config.DENSITY_TOL:
        logger.warning("correlation matrix has imaginary part %.3e", imag)
    return M.real


# ─────────────────────────────────────────
# Two-fermion depolarization example
# ─────────────────────────────────────────

def schmidt_vector(schmidt: TwoFermionSchmidt) -> np.ndarray:
    """ψ = Σ λ_i e_{2i-1} ∧ e_{2i} in the wedge basis of ∧²(C^d)."""
    labels = list(itertools.combinations(range(schmidt.d), 2))
    psi = np.zeros(len(labels), dtype=complex)
    for i, lam in enumerate(schmidt.lambdas):
        psi[labels.index((2 * i, 2 * i + 1))] = lam
    return psi


def _check_p(p: float):
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarization parameter {p} outside [0, 1]")


def depolarized_slater_state(schmidt: TwoFermionSchmidt, p: float) -> DensityMatrix:
    """ρ_ψ(p) = (1−p)|ψ⟩⟨ψ| + p·I/n on ∧²(C^d), n = C(d, 2)."""
    _check_p(p)
    psi = schmidt_vector(schmidt)
    n = psi.size
    rho = (1.0 - p) * np.outer(psi, psi.conj()) + (p / n) * np.eye(n)
    return DensityMatrix(rho, StateClass.slater(schmidt.d, 2))


def chi1(d: int) -> float:
    return 3.0 + 2.0 * (d - 2) * (d - 3) / (d * (d - 1))


def chi2(d: int) -> float:
    return 2.0 * (d + 1) / (d - 1) + 6.0 / (d * (d - 1))


def slater_criterion_lhs(schmidt: TwoFermionSchmidt, p: float) -> float:
    """(1−p)²(5 − 2Σλ⁴) + 2p(1−p)χ₁(d) + p²χ₂(d); the state is flagged when this exceeds 3."""
    _check_p(p)
    d = schmidt.d
    return ((1 - p) ** 2 * (5 - 2 * schmidt.fourth_moment)
            + 2 * p * (1 - p) * chi1(d) + p ** 2 * chi2(d))


def slater_witness_exact(schmidt: TwoFermionSchmidt, p: float) -> float:
    """
    Closed-form f(ρ_ψ(p)) for two fermions.

    A_f projects onto the ∧⁴ component of Sym²(∧²C^d), so ⟨ψψ|A|ψψ⟩ = (1 − Σλ⁴)/3,
    tr A = C(d,4) and the partial trace of A is C(d,4)/n · I.
    """
    _check_p(p)
    d = schmidt.d
    n = math.comb(d, 2)
    top = math.comb(d, 4)
    q = p / n
    purity = (1 - p) ** 2 + 2 * (1 - p) * q + q * q * n
    two_copy = ((1 - p) ** 2 * (1 - schmidt.fourth_moment) / 3
                + 2 * (1 - p) * q * top / n
                + q * q * top)
    return two_copy - (1 - purity) / 2


def default_p_grid(step: float = 0.05) -> List[float]:
    count = int(round(1.0 / step))
    return [round(k * step, 12) for k in range(count + 1)]


def slater_example_rows(d: int, lambdas: Sequence[float], p_grid: Optional[Sequence[float]] = None,
                        A: Optional[ProjectorA] = None, tol: float = config.DECISION_TOL,
                        decisive_margin: float = 0.05) -> List[dict]:
    """
    Per-p comparison of the closed-form criterion with the numeric witness.

    `agree` compares the verdicts (f > tol) and (lhs − 3 > tol); `decisive`
    marks rows with |lhs − 3| > decisive_margin.
    """
    schmidt = TwoFermionSchmidt(d, tuple(lambdas))
    if A is None:
        A = build_A(StateClass.slater(d, 2))
    rows = []
    for p in (default_p_grid() if p_grid is None else p_grid):
        lhs = slater_criterion_lhs(schmidt, p)
        report = witness_value(A, depolarized_slater_state(schmidt, p), tol)
        rows.append({
            'p': float(p),
            'lhs': lhs,
            'lhs_minus_3': lhs - 3.0,
            'f': report.f_value,
            'f_exact': slater_witness_exact(schmidt, p),
            'agree': (report.f_value > tol) == (lhs - 3.0 > tol),
            'decisive': abs(lhs - 3.0) > decisive_margin,
        })
    disagree = [r['p'] for r in rows if r['decisive'] and not r['agree']]
    if disagree:
        logger.warning("closed-form criterion and witness disagree at p in %s", disagree)
    return rows
