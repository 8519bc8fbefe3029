"""
Correlation witness toolkit - Data Structures
Records exchanged between modules and written to / read from files.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple, Union
import math

import numpy as np

from corrwit import config
from corrwit.errors import ParameterError, ParseError, ValidationError
from corrwit.serialization import dumps, loads, matrix_to_pairs, pairs_to_matrix


class ClassKind(str, Enum):
    """Which class M of uncorrelated pure states is meant"""
    SEPARABLE = "separable"
    BOSONIC = "bosonic"
    SLATER = "slater"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class StateClass:
    """
    Tagged class descriptor: separable{d,L} | bosonic{d,L} | slater{d,L} | gaussian{d}

    Construction checks parameters only; the dense memory cap is enforced
    when operators are built (build_A, to_dense, isometries).
    """
    kind: ClassKind
    d: int  # single-particle dimension; number of modes for gaussian
    L: Optional[int] = None  # particle number; None for gaussian

    def __post_init__(self):
        try:
            kind = ClassKind(self.kind)
        except ValueError:
            raise ParameterError(f"unknown class kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ParameterError(f"d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if kind is ClassKind.GAUSSIAN:
            # particle number is not conserved in Fock space
            object.__setattr__(self, "L", None)
            return
        if self.L is None or not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise ParameterError(f"L must be a positive integer for {kind.value}, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        if kind is ClassKind.SLATER and self.L > self.d:
            raise ParameterError(f"slater requires L <= d, got d={self.d}, L={self.L}")

    @classmethod
    def separable(cls, d: int, L: int) -> 'StateClass':
        return cls(ClassKind.SEPARABLE, d, L)

    @classmethod
    def bosonic(cls, d: int, L: int) -> 'StateClass':
        return cls(ClassKind.BOSONIC, d, L)

    @classmethod
    def slater(cls, d: int, L: int) -> 'StateClass':
        return cls(ClassKind.SLATER, d, L)

    @classmethod
    def gaussian(cls, d: int) -> 'StateClass':
        return cls(ClassKind.GAUSSIAN, d)

    @property
    def label(self) -> str:
        if self.kind is ClassKind.GAUSSIAN:
            return f"gaussian{{d={self.d}}}"
        return f"{self.kind.value}{{d={self.d},L={self.L}}}"

    def to_dict(self) -> dict:
        return {'kind': self.kind.value, 'd': self.d, 'L': self.L}

    @classmethod
    def from_dict(cls, data: dict) -> 'StateClass':
        if not isinstance(data, dict) or 'kind' not in data or 'd' not in data:
            raise ParseError(f"class descriptor needs 'kind' and 'd', got {data!r}")
        return cls(kind=data['kind'], d=data['d'], L=data.get('L'))


@dataclass(frozen=True)
class Spectrum:
    """Ordered probability vector p_1 <= ... <= p_N defining an isospectral orbit"""
    probabilities: Tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValidationError("spectrum is empty")
        if not np.all(np.isfinite(p)):
            raise ValidationError("spectrum has non-finite entries")
        if p.min() < 0:
            raise ValidationError(f"spectrum has negative entry {p.min():.3e}")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"spectrum sums to {total!r}, not 1")
        object.__setattr__(self, "probabilities", tuple(float(x) for x in np.sort(p)))

    @property
    def N(self) -> int:
        return len(self.probabilities)

    @property
    def purity(self) -> float:
        p = self.as_array()
        return float(np.dot(p, p))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probabilities, dtype=float)

    @classmethod
    def uniform(cls, N: int) -> 'Spectrum':
        return cls(tuple([1.0 / N] * N))

    @classmethod
    def pure(cls, N: int) -> 'Spectrum':
        return cls(tuple([0.0] * (N - 1) + [1.0]))

    @classmethod
    def depolarized(cls, N: int, p: float) -> 'Spectrum':
        """((1-p) + p/N, p/N, ..., p/N)"""
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"depolarization parameter {p} outside [0, 1]")
        return cls(tuple([(1.0 - p) + p / N] + [p / N] * (N - 1)))

    def to_dict(self) -> dict:
        return {'probabilities': list(self.probabilities), 'purity': self.purity}


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Trace-one positive semidefinite matrix on a class's physical space"""
    matrix: np.ndarray
    state_class: Optional[StateClass] = None
    tol: float = field(default=config.DENSITY_TOL, repr=False)

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {rho.shape}")
        herm = float(np.abs(rho - rho.conj().T).max()) if rho.size else 0.0
        if herm > self.tol:
            raise ValidationError(f"density matrix is not Hermitian (max |rho - rho^†| = {herm:.3e})")
        rho = (rho + rho.conj().T) / 2
        tr = float(np.trace(rho).real)
        if abs(tr - 1.0) > self.tol:
            raise ValidationError(f"trace {tr!r} differs from 1 by more than {self.tol:g}")
        lowest = float(np.linalg.eigvalsh(rho)[0])
        if lowest < -self.tol:
            raise ValidationError(f"density matrix has negative eigenvalue {lowest:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        # tr(rho^2) for Hermitian rho is the squared Frobenius norm
        return float(np.vdot(self.matrix, self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @classmethod
    def from_pure(cls, psi: np.ndarray, state_class: Optional[StateClass] = None) -> 'DensityMatrix':
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > config.DENSITY_TOL:
            raise ValidationError(f"state vector has norm {norm!r}, not 1")
        return cls(np.outer(psi, psi.conj()), state_class)

    @classmethod
    def maximally_mixed(cls, size: Union[int, StateClass],
                        state_class: Optional[StateClass] = None) -> 'DensityMatrix':
        """I/N, given either N or the class whose physical space it lives on."""
        if isinstance(size, StateClass):
            from corrwit.spaces import dim_space  # spaces imports this module
            state_class = state_class or size
            size = dim_space(size)
        return cls(np.eye(size, dtype=complex) / size, state_class)

    def to_dict(self) -> dict:
        return {
            'class': self.state_class.to_dict() if self.state_class else None,
            'dim': self.dim,
            'rho': matrix_to_pairs(self.matrix),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, tol: float = config.DENSITY_TOL) -> 'DensityMatrix':
        if not isinstance(data, dict):
            raise ParseError("state file must be a JSON object")
        missing = [k for k in ('dim', 'rho') if k not in data]
        if missing:
            raise ParseError(f"state file is missing {missing}")
        dim = data['dim']
        if not isinstance(dim, int) or dim < 1:
            raise ParseError(f"'dim' must be a positive integer, got {dim!r}")
        state_class = StateClass.from_dict(data['class']) if data.get('class') else None
        return cls(pairs_to_matrix(data['rho'], dim), state_class, tol)

    @classmethod
    def from_json(cls, text: str, tol: float = config.DENSITY_TOL) -> 'DensityMatrix':
        return cls.from_dict(loads(text), tol)


@dataclass(frozen=True)
class WitnessReport:
    """Outcome of the quadratic witness f(rho) = tr((rho ⊗ rho) V)"""
    f_value: float
    purity: float
    verdict: str  # 'correlated' | 'undetected'
    state_class: Optional[StateClass]
    tolerance: float

    def to_dict(self) -> dict:
        return {
            'f': self.f_value,
            'purity': self.purity,
            'verdict': self.verdict,
            'class': self.state_class.to_dict() if self.state_class else None,
            'tolerance': self.tolerance,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


@dataclass(frozen=True)
class TwoFermionSchmidt:
    """Canonical two-fermion state sum_i lambda_i phi_{2i-1} ∧ phi_{2i}"""
    d: int
    lambdas: Tuple[float, ...]

    def __post_init__(self):
        if self.d < 2:
            raise ValidationError(f"two fermions need d >= 2, got {self.d}")
        lam = tuple(float(x) for x in self.lambdas)
        if not lam or len(lam) > self.d // 2:
            raise ValidationError(f"need 1..{self.d // 2} Schmidt coefficients for d={self.d}, got {len(lam)}")
        if min(lam) < 0:
            raise ValidationError("Schmidt coefficients must be nonnegative")
        if any(b > a for a, b in zip(lam, lam[1:])):
            raise ValidationError(f"Schmidt coefficients must be nonincreasing, got {lam}")
        norm = math.fsum(x * x for x in lam)
        if abs(norm - 1.0) > config.SCHMIDT_TOL:
            raise ValidationError(f"sum of squared Schmidt coefficients is {norm!r}, not 1")
        object.__setattr__(self, "lambdas", lam)

    @property
    def fourth_moment(self) -> float:
        return math.fsum(x ** 4 for x in self.lambdas)


@dataclass(frozen=True)
class OrbitParameters:
    """N, X, P_cr, purity, delta and the concentration bound for (class, spectrum)"""
    N: int
    X: float
    P_cr: float
    purity: float
    delta: float
    bound: float
    bound_applicable: bool

    def to_dict(self) -> dict:
        return {
            'N': self.N,
            'X': self.X,
            'P_cr': self.P_cr,
            'purity': self.purity,
            'delta': self.delta,
            'bound': self.bound,
            'bound_applicable': self.bound_applicable,
        }


@dataclass(frozen=True)
class FractionEstimate:
    """Monte Carlo estimate of the witness-detected fraction of an orbit"""
    state_class: StateClass
    spectrum: Spectrum
    params: OrbitParameters
    n_samples: int
    n_correlated: int
    mean_f: float
    mean_f_stderr: float
    mean_f_analytic: float
    seed: int
    tolerance: float
    detector: str = "quadratic witness f(rho) > tolerance (lower bound on the correlated fraction)"

    @property
    def fraction(self) -> float:
        return self.n_correlated / self.n_samples

    @property
    def std_err(self) -> float:
        q = self.fraction
        return math.sqrt(q * (1.0 - q) / self.n_samples)

    def to_dict(self) -> dict:
        return {
            'class': self.state_class.to_dict(),
            'spectrum': list(self.spectrum.probabilities),
            'N': self.params.N,
            'X': self.params.X,
            'P_cr': self.params.P_cr,
            'purity': self.params.purity,
            'delta': self.params.delta,
            'n_samples': self.n_samples,
            'n_correlated': self.n_correlated,
            'fraction': self.fraction,
            'std_err': self.std_err,
            'bound': self.params.bound,
            'bound_applicable': self.params.bound_applicable,
            'mean_f': self.mean_f,
            'mean_f_stderr': self.mean_f_stderr,
            'mean_f_analytic': self.mean_f_analytic,
            'seed': self.seed,
            'tolerance': self.tolerance,
            'detector': self.detector,
        }

    def to_csv_row(self) -> dict:
        return {
            'class': self.state_class.kind.value,
            'd': self.state_class.d,
            'L': self.state_class.L,
            'purity': self.params.purity,
            'P_cr': self.params.P_cr,
            'X': self.params.X,
            'N': self.params.N,
            'n_samples': self.n_samples,
            'fraction': self.fraction,
            'std_err': self.std_err,
            'bound': self.params.bound,
            'mean_f': self.mean_f,
            'seed': self.seed,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


@dataclass(frozen=True)
class ClosedFormRow:
    """Closed-form N and 1 − X for a class (exact rationals)"""
    state_class: StateClass
    N: int
    one_minus_X: Fraction
    printed_one_minus_X: Optional[Fraction] = None  # set where the printed row differs

    @property
    def X(self) -> Fraction:
        return 1 - self.one_minus_X

    @property
    def P_cr(self) -> Fraction:
        return self.one_minus_X / (1 + self.X)

    def to_dict(self) -> dict:
        data = {
            'class': self.state_class.to_dict(),
            'N': self.N,
            'one_minus_X': float(self.one_minus_X),
            'X': float(self.X),
            'P_cr': float(self.P_cr),
        }
        if self.printed_one_minus_X is not None:
            data['printed_one_minus_X'] = float(self.printed_one_minus_X)
        return data
