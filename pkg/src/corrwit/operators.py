"""
Two-copy operators: permutation sums on tensor factors, their compressions to
symmetric / antisymmetric / Fock subspaces, Majorana operators, and the
correlation-detecting projector A with the witness operator V = A - P^asym.

Permutation convention: a term (c, perm) acts on a tensor with n factors as
np.transpose(v, perm), i.e. output axis k takes input axis perm[k].
"""

import functools
import itertools
import logging
import math
import string
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from corrwit import config
from corrwit.data_structures import ClassKind, StateClass
from corrwit.errors import NumericError, ParameterError, ParseError, ResourceCapError, ValidationError
from corrwit.serialization import dumps, loads, matrix_to_pairs, pairs_to_matrix
from corrwit.spaces import (
    Isometry,
    check_dense_cap,
    dim_space,
    embedding,
    fock_sector_isometry,
    permutation_sign,
)

logger = logging.getLogger(__name__)

_LETTERS = string.ascii_lowercase

Perm = Tuple[int, ...]


def _as_matrix(rho) -> np.ndarray:
    return np.asarray(getattr(rho, "matrix", rho), dtype=complex)


def _inverse(perm: Perm) -> Perm:
    inv = [0] * len(perm)
    for k, p in enumerate(perm):
        inv[p] = k
    return tuple(inv)


def _cycle_count(perm: Perm) -> int:
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles


# ─────────────────────────────────────────
# Operator classes
# ─────────────────────────────────────────

class LinearOperator:
    """
    Square complex operator on C^dim.

    Subclasses provide apply / to_dense / H / trace / expectation2. The
    arithmetic operators build linear combinations and products.
    """

    dim: int
    hermitian: bool = False

    def apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self, max_bytes: int = config.MAX_DENSE_BYTES) -> np.ndarray:
        raise NotImplementedError

    @property
    def H(self) -> 'LinearOperator':
        raise NotImplementedError

    def trace(self) -> complex:
        return complex(np.trace(self.to_dense()))

    def expectation2(self, rho1, rho2) -> complex:
        """tr((rho1 ⊗ rho2) O) for an operator on a two-copy space."""
        n = math.isqrt(self.dim)
        O = self.to_dense().reshape(n, n, n, n)
        return complex(np.einsum("abce,ca,eb->", O, _as_matrix(rho1), _as_matrix(rho2)))

    def kron(self, other: 'LinearOperator', max_bytes: int = config.MAX_DENSE_BYTES) -> 'LinearOperator':
        dim = self.dim * other.dim
        check_dense_cap(dim, max_bytes)
        return DenseOperator(np.kron(self.to_dense(max_bytes), other.to_dense(max_bytes)),
                             hermitian=self.hermitian and other.hermitian)

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return linear_combination([(1.0, self), (-1.0, other)])

    def __mul__(self, coefficient):
        return linear_combination([(coefficient, self)])

    __rmul__ = __mul__

    def __neg__(self):
        return linear_combination([(-1.0, self)])


class DenseOperator(LinearOperator):
    """Explicit dim x dim matrix."""

    def __init__(self, matrix: np.ndarray, hermitian: bool = False):
        M = np.array(matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValidationError(f"operator matrix must be square, got shape {M.shape}")
        M.setflags(write=False)
        self.matrix = M
        self.dim = M.shape[0]
        self.hermitian = hermitian

    def __repr__(self):
        return f"DenseOperator(dim={self.dim}, hermitian={self.hermitian})"

    def apply(self, v):
        return self.matrix @ np.asarray(v, dtype=complex)

    def to_dense(self, max_bytes=config.MAX_DENSE_BYTES):
        return self.matrix.copy()

    @property
    def H(self):
        return DenseOperator(self.matrix.conj().T, hermitian=self.hermitian)

    def trace(self):
        return complex(np.trace(self.matrix))


class PermutationSum(LinearOperator):
    """
    Σ_j c_j P_{perm_j} on (C^local_dim)^{⊗n_factors}, applied without a matrix.

    Equal permutations are merged on construction; zero coefficients dropped.
    For two-copy expectations the first n_factors/2 factors form copy one.
    """

    def __init__(self, local_dim: int, n_factors: int,
                 terms: Iterable[Tuple[complex, Sequence[int]]], hermitian: bool = False):
        if local_dim < 1 or n_factors < 1:
            raise ParameterError(f"bad permutation-sum shape ({local_dim}, {n_factors})")
        merged: Dict[Perm, complex] = {}
        for coef, perm in terms:
            perm = tuple(int(p) for p in perm)
            if sorted(perm) != list(range(n_factors)):
                raise ParameterError(f"{perm} is not a permutation of {n_factors} factors")
            merged[perm] = merged.get(perm, 0.0) + complex(coef)
        self.terms: Tuple[Tuple[complex, Perm], ...] = tuple(
            (c, p) for p, c in merged.items() if c != 0)
        self.local_dim = local_dim
        self.n_factors = n_factors
        self.dim = local_dim ** n_factors
        self.hermitian = hermitian

    def __repr__(self):
        return (f"PermutationSum(local_dim={self.local_dim}, n_factors={self.n_factors}, "
                f"terms={len(self.terms)})")

    def same_shape(self, other) -> bool:
        return (isinstance(other, PermutationSum)
                and other.local_dim == self.local_dim and other.n_factors == self.n_factors)

    def apply(self, v):
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != self.dim:
            raise ValidationError(f"vector of length {v.shape[0]} does not match operator dim {self.dim}")
        single = v.ndim == 1
        n = self.n_factors
        t = v.reshape((self.local_dim,) * n + (-1,))
        out = np.zeros_like(t)
        for coef, perm in self.terms:
            out += coef * np.transpose(t, perm + (n,))
        out = out.reshape(self.dim, -1)
        return out[:, 0] if single else out

    def to_dense(self, max_bytes=config.MAX_DENSE_BYTES):
        check_dense_cap(self.dim, max_bytes)
        return self.apply(np.eye(self.dim, dtype=complex))

    @property
    def H(self):
        return PermutationSum(self.local_dim, self.n_factors,
                              [(np.conj(c), _inverse(p)) for c, p in self.terms],
                              hermitian=self.hermitian)

    def trace(self):
        return complex(sum(c * self.local_dim ** _cycle_count(p) for c, p in self.terms))

    def expectation2(self, rho1, rho2):
        n = self.n_factors
        if n % 2:
            raise ValidationError("two-copy expectation needs an even number of factors")
        h = n // 2
        d = self.local_dim
        r1, r2 = _as_matrix(rho1), _as_matrix(rho2)
        if r1.shape != (d ** h, d ** h) or r2.shape != (d ** h, d ** h):
            raise ValidationError(f"density matrices of shape {r1.shape}, {r2.shape} "
                                  f"do not match copy dimension {d ** h}")
        t1 = r1.reshape((d,) * (2 * h))
        t2 = r2.reshape((d,) * (2 * h))
        total = 0.0 + 0.0j
        for coef, perm in self.terms:
            total += coef * np.einsum(_expectation_subscripts(perm), t1, t2, optimize="greedy")
        return complex(total)

    def kron(self, other, max_bytes=config.MAX_DENSE_BYTES):
        if isinstance(other, PermutationSum) and other.local_dim == self.local_dim:
            n1 = self.n_factors
            terms = [(c1 * c2, p1 + tuple(n1 + k for k in p2))
                     for c1, p1 in self.terms for c2, p2 in other.terms]
            return PermutationSum(self.local_dim, n1 + other.n_factors, terms,
                                  hermitian=self.hermitian and other.hermitian)
        return super().kron(other, max_bytes)


def _expectation_subscripts(perm: Perm) -> str:
    # tr((R1 ⊗ R2) P): row index y_m of R equals column index x_{inv[m]}
    n = len(perm)
    h = n // 2
    inv = _inverse(perm)
    x = _LETTERS[:n]
    s1 = "".join(x[inv[m]] for m in range(h)) + x[:h]
    s2 = "".join(x[inv[m]] for m in range(h, n)) + x[h:]
    return f"{s1},{s2}->"


def _projection_subscripts(perm: Perm) -> str:
    # <J_a ⊗ J_b| P |J_c ⊗ J_e> with J reshaped to (d,)*h + (N,)
    n = len(perm)
    h = n // 2
    inv = _inverse(perm)
    x = _LETTERS[:n]
    bra1 = x[:h] + "A"
    bra2 = x[h:] + "B"
    ket1 = "".join(x[inv[m]] for m in range(h)) + "C"
    ket2 = "".join(x[inv[m]] for m in range(h, n)) + "D"
    return f"{bra1},{bra2},{ket1},{ket2}->ABCD"


class ProjectedOperator(LinearOperator):
    """
    (J ⊗ J)† K (J ⊗ J) for a permutation sum K on two copies of (C^d)^{⊗L}.

    Never forms K densely unless asked to (method='full').
    """

    def __init__(self, operator: PermutationSum, isometry: Union[Isometry, np.ndarray],
                 hermitian: Optional[bool] = None):
        J = np.asarray(getattr(isometry, "matrix", isometry), dtype=complex)
        if operator.n_factors % 2:
            raise ParameterError("projected operator needs two copies of equal size")
        h = operator.n_factors // 2
        if J.shape[0] != operator.local_dim ** h:
            raise ValidationError(f"isometry with {J.shape[0]} rows does not embed into "
                                  f"{operator.local_dim}^{h}")
        self.operator = operator
        self.J = J
        self.n = J.shape[1]
        self.dim = self.n * self.n
        self.hermitian = operator.hermitian if hermitian is None else hermitian

    def __repr__(self):
        return f"ProjectedOperator(dim={self.dim}, inner={self.operator!r})"

    def apply(self, v):
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != self.dim:
            raise ValidationError(f"vector of length {v.shape[0]} does not match operator dim {self.dim}")
        single = v.ndim == 1
        J, N = self.J, self.n
        D = J.shape[0]
        V = v.reshape(N, N, -1)
        W = np.einsum("xa,abk,yb->xyk", J, V, J, optimize="greedy").reshape(D * D, -1)
        U = self.operator.apply(W).reshape(D, D, -1)
        out = np.einsum("xa,xyk,yb->abk", J.conj(), U, J.conj(), optimize="greedy").reshape(N * N, -1)
        return out[:, 0] if single else out

    def to_dense(self, max_bytes=config.MAX_DENSE_BYTES, method: str = "auto"):
        check_dense_cap(self.dim, max_bytes)
        D = self.J.shape[0]
        if method == "auto":
            method = "full" if D * D <= config.FULL_SPACE_DENSE_LIMIT else "einsum"
        if method == "full":
            K = self.operator.to_dense(max_bytes)
            JJ = np.kron(self.J, self.J)
            return JJ.conj().T @ K @ JJ
        if method != "einsum":
            raise ParameterError(f"unknown compression method {method!r}")
        h = self.operator.n_factors // 2
        d = self.operator.local_dim
        Jt = self.J.reshape((d,) * h + (self.n,))
        Jc = Jt.conj()
        out = np.zeros((self.n,) * 4, dtype=complex)
        for coef, perm in self.operator.terms:
            out += coef * np.einsum(_projection_subscripts(perm), Jc, Jc, Jt, Jt, optimize="greedy")
        return out.reshape(self.dim, self.dim)

    @property
    def H(self):
        return ProjectedOperator(self.operator.H, self.J, hermitian=self.hermitian)

    def trace(self):
        # tr((J⊗J)† K (J⊗J)) = tr((Π ⊗ Π) K) with Π = J J†
        pi = self.J @ self.J.conj().T
        return self.operator.expectation2(pi, pi)

    def expectation2(self, rho1, rho2):
        J = self.J
        r1, r2 = _as_matrix(rho1), _as_matrix(rho2)
        if r1.shape != (self.n, self.n) or r2.shape != (self.n, self.n):
            raise ValidationError(f"density matrices of shape {r1.shape}, {r2.shape} "
                                  f"do not match copy dimension {self.n}")
        return self.operator.expectation2(J @ r1 @ J.conj().T, J @ r2 @ J.conj().T)


class LincombOperator(LinearOperator):
    """Σ_j c_j O_j over operators of equal dimension."""

    def __init__(self, terms: Sequence[Tuple[complex, LinearOperator]]):
        terms = tuple((complex(c), op) for c, op in terms)
        if not terms:
            raise ParameterError("empty linear combination")
        dims = {op.dim for _, op in terms}
        if len(dims) != 1:
            raise ValidationError(f"cannot combine operators of dimensions {sorted(dims)}")
        self.terms = terms
        self.dim = dims.pop()
        self.hermitian = all(op.hermitian and c.imag == 0 for c, op in terms)

    def __repr__(self):
        return f"LincombOperator(dim={self.dim}, terms={[op for _, op in self.terms]})"

    def apply(self, v):
        return sum(c * op.apply(v) for c, op in self.terms)

    def to_dense(self, max_bytes=config.MAX_DENSE_BYTES):
        check_dense_cap(self.dim, max_bytes)
        return sum(c * op.to_dense(max_bytes) for c, op in self.terms)

    @property
    def H(self):
        return LincombOperator([(np.conj(c), op.H) for c, op in self.terms])

    def trace(self):
        return complex(sum(c * op.trace() for c, op in self.terms))

    def expectation2(self, rho1, rho2):
        return complex(sum(c * op.expectation2(rho1, rho2) for c, op in self.terms))


# ─────────────────────────────────────────
# Algebra
# ─────────────────────────────────────────

def compose(a: LinearOperator, b: LinearOperator,
            max_bytes: int = config.MAX_DENSE_BYTES) -> LinearOperator:
    """a · b (b acts first)."""
    if a.dim != b.dim:
        raise ValidationError(f"cannot compose operators of dimensions {a.dim} and {b.dim}")
    if isinstance(a, PermutationSum) and a.same_shape(b):
        terms = [(ca * cb, tuple(pb[k] for k in pa))
                 for ca, pa in a.terms for cb, pb in b.terms]
        return PermutationSum(a.local_dim, a.n_factors, terms)
    check_dense_cap(a.dim, max_bytes)
    return DenseOperator(a.to_dense(max_bytes) @ b.to_dense(max_bytes))


def linear_combination(terms: Sequence[Tuple[complex, LinearOperator]]) -> LinearOperator:
    terms = list(terms)
    ops = [op for _, op in terms]
    hermitian = all(op.hermitian and complex(c).imag == 0 for c, op in terms)
    first = ops[0]
    if isinstance(first, PermutationSum) and all(first.same_shape(op) for op in ops):
        flat = [(c * t, p) for c, op in terms for t, p in op.terms]
        return PermutationSum(first.local_dim, first.n_factors, flat, hermitian=hermitian)
    if all(isinstance(op, DenseOperator) for op in ops):
        return DenseOperator(sum(c * op.matrix for c, op in terms), hermitian=hermitian)
    return LincombOperator(terms)


def adjoint(op: LinearOperator) -> LinearOperator:
    return op.H


def apply(op: LinearOperator, v: np.ndarray) -> np.ndarray:
    """Apply op to v (matrix-free where the representation allows)."""
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != op.dim:
        raise ValidationError(f"vector of length {v.shape[0]} does not match operator dim {op.dim}")
    return op.apply(v)


def two_copy_expectation(op: LinearOperator, rho1, rho2) -> complex:
    """tr((rho1 ⊗ rho2) op) without materializing rho1 ⊗ rho2."""
    return op.expectation2(rho1, rho2)


def compress(op: LinearOperator, isometry: Union[Isometry, np.ndarray],
             max_bytes: int = config.MAX_DENSE_BYTES) -> LinearOperator:
    """(J ⊗ J)† op (J ⊗ J); lazy for permutation sums."""
    if isinstance(op, PermutationSum):
        return ProjectedOperator(op, isometry)
    J = np.asarray(getattr(isometry, "matrix", isometry), dtype=complex)
    check_dense_cap(J.shape[1] ** 2, max_bytes)
    JJ = np.kron(J, J)
    return DenseOperator(JJ.conj().T @ op.to_dense(max_bytes) @ JJ, hermitian=op.hermitian)


# ─────────────────────────────────────────
# Symmetrizers
# ─────────────────────────────────────────

def swap_operator(N: int) -> PermutationSum:
    """τ on C^N ⊗ C^N."""
    return PermutationSum(N, 2, [(1.0, (1, 0))], hermitian=True)


def projector_sym2(N: int) -> PermutationSum:
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    return PermutationSum(N, 2, [(0.5, (0, 1)), (0.5, (1, 0))], hermitian=True)


def projector_asym2(N: int) -> PermutationSum:
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    return PermutationSum(N, 2, [(0.5, (0, 1)), (-0.5, (1, 0))], hermitian=True)


def copy_swap(L: int, d: int) -> PermutationSum:
    """τ exchanging the two L-factor copies (factors 1..L with 1'..L')."""
    perm = tuple(range(L, 2 * L)) + tuple(range(L))
    return PermutationSum(d, 2 * L, [(1.0, perm)], hermitian=True)


def pair_symmetrizer(L: int, i: int, d: int) -> PermutationSum:
    """P⁺_{ii'} = (I + SWAP_{i,i'})/2 on 2L factors, i' = L + i (1-based)."""
    if not 1 <= i <= L:
        raise ParameterError(f"pair index {i} outside 1..{L}")
    perm = list(range(2 * L))
    perm[i - 1], perm[L + i - 1] = perm[L + i - 1], perm[i - 1]
    return PermutationSum(d, 2 * L, [(0.5, tuple(range(2 * L))), (0.5, tuple(perm))], hermitian=True)


def pair_symmetrizer_product(L: int, d: int) -> PermutationSum:
    """P⁺_{11'} P⁺_{22'} ... P⁺_{LL'}."""
    return functools.reduce(compose, (pair_symmetrizer(L, i, d) for i in range(1, L + 1)))


def block_symmetrizer(L: int, d: int, indices: Sequence[int], character: str = "sym") -> PermutationSum:
    """
    (1/m!) Σ_σ [sgn σ] P_σ over permutations of the factors in `indices`.

    Args:
        L: factors per copy (the operator acts on 2L factors)
        d: local dimension
        indices: 1-based factor positions in 1..2L (primed factors are L+1..2L)
        character: 'sym' or 'asym'
    """
    if character not in ("sym", "asym"):
        raise ParameterError(f"character must be 'sym' or 'asym', got {character!r}")
    idx = [int(i) - 1 for i in indices]
    if not idx or len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= 2 * L:
        raise ParameterError(f"block indices {list(indices)} invalid for 2L={2 * L} factors")
    m = len(idx)
    terms = []
    for sigma in itertools.permutations(range(m)):
        perm = list(range(2 * L))
        for k in range(m):
            perm[idx[k]] = idx[sigma[k]]
        sign = permutation_sign(sigma) if character == "asym" else 1
        terms.append((sign / math.factorial(m), tuple(perm)))
    return PermutationSum(d, 2 * L, terms, hermitian=True)


def full_symmetrizer(n_factors: int, d: int) -> PermutationSum:
    """Symmetrizer over all n_factors tensor factors."""
    if n_factors % 2:
        return PermutationSum(d, n_factors, [
            (1.0 / math.factorial(n_factors), p) for p in itertools.permutations(range(n_factors))
        ], hermitian=True)
    return block_symmetrizer(n_factors // 2, d, range(1, n_factors + 1), "sym")


# ─────────────────────────────────────────
# Fermionic operators
# ─────────────────────────────────────────

def majorana_ops(d: int, max_bytes: int = config.MAX_DENSE_BYTES) -> List[DenseOperator]:
    """
    Jordan-Wigner Majoranas c_1..c_2d on the 2^d-dimensional Fock space.

    a_k = Z^{⊗(k-1)} ⊗ σ⁻ ⊗ I^{⊗(d-k)},  c_{2k-1} = a_k + a_k†,  c_{2k} = i(a_k - a_k†).
    """
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    check_dense_cap(2 ** d, max_bytes, "Majorana operator")
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for k in range(d):
        a = functools.reduce(np.kron, [z] * k + [lower] + [eye] * (d - k - 1))
        ops.append(DenseOperator(a + a.conj().T, hermitian=True))
        ops.append(DenseOperator(1j * (a - a.conj().T), hermitian=True))
    return ops


def lambda_operator(d: int, max_bytes: int = config.MAX_DENSE_BYTES) -> DenseOperator:
    """Λ = Σ_i c_i ⊗ c_i on FockFull ⊗ FockFull."""
    check_dense_cap(4 ** d, max_bytes, "Λ")
    cs = [c.matrix for c in majorana_ops(d, max_bytes)]
    return DenseOperator(sum(np.kron(c, c) for c in cs), hermitian=True)


def _restricted_lambda(d: int, max_bytes: int) -> np.ndarray:
    # Λ maps even⊗even into odd⊗odd; this is that block
    even = fock_sector_isometry(d, "even").matrix
    odd = fock_sector_isometry(d, "odd").matrix
    blocks = [odd.conj().T @ c.matrix @ even for c in majorana_ops(d, max_bytes)]
    return sum(np.kron(b, b) for b in blocks)


def kernel_projector(op: Union[LinearOperator, np.ndarray], tol: float = config.KERNEL_REL_TOL,
                     max_bytes: int = config.MAX_DENSE_BYTES) -> DenseOperator:
    """
    Orthogonal projector onto the kernel of op.

    Hermitian input is diagonalized directly; anything else goes through op†op.
    An eigenvalue counts as zero when |w| <= tol * max|w|.
    """
    M = op.to_dense(max_bytes) if isinstance(op, LinearOperator) else np.asarray(op, dtype=complex)
    square = M.ndim == 2 and M.shape[0] == M.shape[1]
    if not square or np.abs(M - M.conj().T).max(initial=0.0) > config.OPERATOR_TOL:
        M = M.conj().T @ M
    M = (M + M.conj().T) / 2
    try:
        w, vecs = scipy.linalg.eigh(M)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"kernel eigensolve failed: {e}") from e
    scale = float(np.abs(w).max(initial=0.0))
    mask = np.abs(w) <= tol * scale
    kernel = vecs[:, mask]
    P = kernel @ kernel.conj().T
    residual = float(np.abs(P @ P - P).max(initial=0.0))
    if residual > config.OPERATOR_TOL:
        raise NumericError("kernel projector is not idempotent", residual)
    gap = float(np.abs(w[~mask]).min()) if (~mask).any() else float("inf")
    logger.debug("kernel dim %d of %d, smallest nonzero |eigenvalue| %.3e", int(mask.sum()), len(w), gap)
    return DenseOperator(P, hermitian=True)


# ─────────────────────────────────────────
# Projector A and witness operator V
# ─────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ProjectorA:
    """
    The projector A of a class, acting on (physical space) ⊗ (physical space).

    `variant` records which construction was used:
    - printed: the composition of symmetrizers as written
    - symmetrized: P^sym minus the symmetrizer over all 2L factors
    - spectral: obtained from an eigendecomposition
    `printed_residual` is ‖B² − B‖_max of the printed composition B (nan if not checked).
    """
    state_class: StateClass
    operator: LinearOperator
    trace: float
    variant: str
    printed_residual: float
    isometry: Optional[Isometry] = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return math.isqrt(self.operator.dim)

    @property
    def dim_sym2(self) -> int:
        return self.N * (self.N + 1) // 2

    @cached_property
    def dense(self) -> np.ndarray:
        return self.to_dense()

    def to_dense(self, max_bytes: int = config.MAX_DENSE_BYTES) -> np.ndarray:
        check_dense_cap(self.operator.dim, max_bytes, "projector A")
        return self.operator.to_dense(max_bytes)

    def apply(self, v: np.ndarray, matrix_free: bool = True) -> np.ndarray:
        if matrix_free:
            return apply(self.operator, v)
        return self.dense @ np.asarray(v, dtype=complex)

    def to_dict(self) -> dict:
        return {
            'class': self.state_class.to_dict(),
            'N': self.N,
            'dim_sym2': self.dim_sym2,
            'trace': self.trace,
            'variant': self.variant,
            'printed_residual': self.printed_residual,
        }


def _idempotence_residual(M: np.ndarray) -> float:
    return float(np.abs(M @ M - M).max(initial=0.0))


def _spectral_projector(M: np.ndarray) -> np.ndarray:
    w, vecs = scipy.linalg.eigh((M + M.conj().T) / 2)
    keep = vecs[:, w > 0.5]
    return keep @ keep.conj().T


def _printed_residual(op: LinearOperator, max_bytes: int) -> float:
    try:
        return _idempotence_residual(op.to_dense(max_bytes))
    except ResourceCapError as e:
        logger.warning("printed composition not checked for idempotence: %s", e)
        return float("nan")


def _build_separable(cls: StateClass, max_bytes: int, tol: float):
    d, L = cls.d, cls.L
    identity = PermutationSum(d, 2 * L, [(1.0, tuple(range(2 * L)))], hermitian=True)
    sym = linear_combination([(0.5, identity),
                              (0.5, copy_swap(L, d))])
    op = linear_combination([(1.0, sym), (-1.0, pair_symmetrizer_product(L, d))])
    op.hermitian = True
    return op, "printed", _printed_residual(op, max_bytes), None


def _build_bosonic(cls: StateClass, max_bytes: int, tol: float):
    d, L = cls.d, cls.L
    J = embedding(cls, max_bytes)
    N = J.source.dim
    blocks = compose(block_symmetrizer(L, d, range(1, L + 1), "sym"),
                     block_symmetrizer(L, d, range(L + 1, 2 * L + 1), "sym"))
    printed = linear_combination([
        (1.0, projector_sym2(N)),
        (-1.0, ProjectedOperator(compose(pair_symmetrizer_product(L, d), blocks), J, hermitian=True)),
    ])
    residual = _printed_residual(printed, max_bytes)
    if residual <= tol or (math.isnan(residual) and L == 1):
        return printed, "printed", residual, J
    logger.warning("bosonic composition for %s is not idempotent (residual %.3e); "
                   "using P^sym minus the %d-factor symmetrizer", cls.label, residual, 2 * L)
    op = linear_combination([
        (1.0, projector_sym2(N)),
        (-1.0, ProjectedOperator(full_symmetrizer(2 * L, d), J, hermitian=True)),
    ])
    return op, "symmetrized", residual, J


def _build_slater(cls: StateClass, max_bytes: int, tol: float):
    d, L = cls.d, cls.L
    J = embedding(cls, max_bytes)
    N = J.source.dim
    blocks = compose(block_symmetrizer(L, d, range(1, L + 1), "asym"),
                     block_symmetrizer(L, d, range(L + 1, 2 * L + 1), "asym"))
    inner = (2 ** L / (L + 1)) * compose(pair_symmetrizer_product(L, d), blocks)
    printed = linear_combination([
        (1.0, projector_sym2(N)),
        (-1.0, ProjectedOperator(inner, J, hermitian=True)),
    ])
    residual = _printed_residual(printed, max_bytes)
    if math.isnan(residual) or residual <= tol:
        return printed, "printed", residual, J
    logger.warning("Slater composition for %s is not idempotent (residual %.3e); "
                   "projecting onto its unit eigenspace", cls.label, residual)
    spectral = _spectral_projector(printed.to_dense(max_bytes))
    return DenseOperator(spectral, hermitian=True), "spectral", residual, J


def _build_gaussian(cls: StateClass, max_bytes: int, tol: float):
    d = cls.d
    N = 2 ** (d - 1)
    check_dense_cap(N * N, max_bytes, "projector A")
    lam = _restricted_lambda(d, max_bytes)
    p0 = kernel_projector(DenseOperator(lam.conj().T @ lam, hermitian=True), max_bytes=max_bytes).matrix
    psym = projector_sym2(N).to_dense(max_bytes)
    A = psym - psym @ p0 @ psym
    op = DenseOperator((A + A.conj().T) / 2, hermitian=True)
    return op, "spectral", _idempotence_residual(op.matrix), embedding(cls, max_bytes)


_BUILDERS = {
    ClassKind.SEPARABLE: _build_separable,
    ClassKind.BOSONIC: _build_bosonic,
    ClassKind.SLATER: _build_slater,
    ClassKind.GAUSSIAN: _build_gaussian,
}


def build_A(state_class: StateClass, *, max_bytes: int = config.MAX_DENSE_BYTES,
            tol: float = config.OPERATOR_TOL) -> ProjectorA:
    """
    Build the correlation-detecting projector for a class.

    Args:
        state_class: which class of uncorrelated pure states
        max_bytes: dense memory cap for any intermediate matrix
        tol: idempotence tolerance for accepting the printed composition

    Returns:
        ProjectorA on (C^N ⊗ C^N), N = dim_space(state_class)
    """
    N = dim_space(state_class)
    op, variant, residual, J = _BUILDERS[state_class.kind](state_class, max_bytes, tol)
    trace = op.trace()
    if abs(trace.imag) > config.OPERATOR_TOL:
        raise NumericError(f"trace of A for {state_class.label} is not real", abs(trace.imag))
    A = ProjectorA(state_class, op, float(trace.real), variant, residual, J)
    logger.info("built A for %s: N=%d, tr A=%.12g, variant %s", state_class.label, N, A.trace, variant)
    return A


def build_V(target: Union[StateClass, ProjectorA], **kwargs) -> LinearOperator:
    """V = A − P^asym on the squared physical space."""
    A = target if isinstance(target, ProjectorA) else build_A(target, **kwargs)
    V = linear_combination([(1.0, A.operator), (-1.0, projector_asym2(A.N))])
    V.hermitian = True
    return V


def projector_residuals(A: Union[ProjectorA, np.ndarray]) -> Dict[str, float]:
    """Max-norm residuals of the projector axioms."""
    M = A.dense if isinstance(A, ProjectorA) else np.asarray(A, dtype=complex)
    N = math.isqrt(M.shape[0])
    swap = swap_operator(N).to_dense()
    asym = projector_asym2(N).to_dense()
    return {
        'idempotence': _idempotence_residual(M),
        'hermiticity': float(np.abs(M - M.conj().T).max(initial=0.0)),
        'antisym_leak': float(np.abs(M @ asym).max(initial=0.0)),
        'swap': float(np.abs(swap @ M @ swap - M).max(initial=0.0)),
    }


def operator_to_json(op: Union[LinearOperator, ProjectorA, np.ndarray],
                     max_bytes: int = config.MAX_DENSE_BYTES) -> str:
    if isinstance(op, ProjectorA):
        M = op.to_dense(max_bytes)
    elif isinstance(op, LinearOperator):
        M = op.to_dense(max_bytes)
    else:
        M = np.asarray(op, dtype=complex)
    return dumps({'dim': M.shape[0], 'rows': matrix_to_pairs(M)})


def operator_from_json(text: str) -> DenseOperator:
    data = loads(text)
    if not isinstance(data, dict) or 'dim' not in data or 'rows' not in data:
        raise ParseError("operator dump needs 'dim' and 'rows'")
    return DenseOperator(pairs_to_matrix(data['rows'], int(data['dim'])))


# ─────────────────────────────────────────
# Explicit reference matrices
# ─────────────────────────────────────────

def permutation_matrix(d: int, perm: Sequence[int], max_bytes: int = config.MAX_DENSE_BYTES) -> np.ndarray:
    """Dense P_perm on (C^d)^{⊗n}, built entry by entry from basis multi-indices."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ParameterError(f"{tuple(perm)} is not a permutation of {n} factors")
    dim = d ** n
    check_dense_cap(dim, max_bytes, "permutation matrix")
    shape = (d,) * n
    M = np.zeros((dim, dim), dtype=complex)
    for idx in itertools.product(range(d), repeat=n):
        image = tuple(idx[perm[k]] for k in range(n))
        M[np.ravel_multi_index(image, shape), np.ravel_multi_index(idx, shape)] = 1.0
    return M


def _explicit_block(d: int, n: int, positions: Sequence[int], sign: bool, max_bytes: int) -> np.ndarray:
    positions = list(positions)
    m = len(positions)
    out = np.zeros((d ** n, d ** n), dtype=complex)
    for sigma in itertools.permutations(range(m)):
        perm = list(range(n))
        for k in range(m):
            perm[positions[k]] = positions[sigma[k]]
        weight = permutation_sign(sigma) if sign else 1
        out += weight * permutation_matrix(d, perm, max_bytes)
    return out / math.factorial(m)


def _explicit_pair_product(d: int, L: int, max_bytes: int) -> np.ndarray:
    eye = np.eye(d ** (2 * L), dtype=complex)
    out = eye
    for i in range(L):
        perm = list(range(2 * L))
        perm[i], perm[L + i] = L + i, i
        out = out @ ((eye + permutation_matrix(d, perm, max_bytes)) / 2)
    return out


def _explicit_sym2(N: int, max_bytes: int) -> np.ndarray:
    return (np.eye(N * N, dtype=complex) + permutation_matrix(N, (1, 0), max_bytes)) / 2


def reference_A(state_class: StateClass, max_bytes: int = config.MAX_DENSE_BYTES,
                tol: float = config.OPERATOR_TOL) -> np.ndarray:
    """
    Dense A assembled from explicit permutation matrices, np.kron and
    scipy.linalg.null_space.

    Independent of the PermutationSum / ProjectedOperator code paths, so it
    serves as the dense side when checking matrix-free application.
    """
    d, L = state_class.d, state_class.L
    kind = state_class.kind
    if kind is ClassKind.GAUSSIAN:
        N = 2 ** (d - 1)
        check_dense_cap(4 ** d, max_bytes, "Λ")
        even = fock_sector_isometry(d, "even").matrix
        kernel = scipy.linalg.null_space(lambda_operator(d, max_bytes).matrix @ np.kron(even, even))
        psym = _explicit_sym2(N, max_bytes)
        return psym - psym @ (kernel @ kernel.conj().T) @ psym
    check_dense_cap(d ** (2 * L), max_bytes, "reference A")
    pairs = _explicit_pair_product(d, L, max_bytes)
    if kind is ClassKind.SEPARABLE:
        tau = permutation_matrix(d, tuple(range(L, 2 * L)) + tuple(range(L)), max_bytes)
        return (np.eye(d ** (2 * L)) + tau) / 2 - pairs
    J = embedding(state_class, max_bytes).matrix
    JJ = np.kron(J, J)
    psym = _explicit_sym2(J.shape[1], max_bytes)
    if kind is ClassKind.BOSONIC:
        # for L = 1 the full symmetrizer is P⁺_{11'} and A vanishes
        inner = _explicit_block(d, 2 * L, range(2 * L), False, max_bytes)
        return psym - JJ.conj().T @ inner @ JJ
    blocks = (_explicit_block(d, 2 * L, range(L), True, max_bytes)
              @ _explicit_block(d, 2 * L, range(L, 2 * L), True, max_bytes))
    M = psym - (2 ** L / (L + 1)) * (JJ.conj().T @ pairs @ blocks @ JJ)
    if _idempotence_residual(M) > tol:
        M = _spectral_projector(M)
    return M
