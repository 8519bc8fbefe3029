"""
Basis enumeration, dimensions and isometric embeddings.

Ordering conventions (fixed, used by every file format):
- FullTensor: lexicographic multi-indices, first tensor factor most significant.
- Sym: lexicographic sorted multisets.
- Wedge: lexicographic strictly increasing tuples.
- Fock: occupation bitstrings ordered as unsigned integers, mode 1 is the MSB.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from corrwit import config
from corrwit.data_structures import ClassKind, StateClass
from corrwit.errors import ParameterError, ResourceCapError, ValidationError

logger = logging.getLogger(__name__)


class SpaceKind(str, Enum):
    FULL_TENSOR = "full_tensor"
    SYM = "sym"
    WEDGE = "wedge"
    FOCK_EVEN = "fock_even"
    FOCK_ODD = "fock_odd"
    FOCK_FULL = "fock_full"


_FOCK_SECTORS = {
    "even": SpaceKind.FOCK_EVEN,
    "odd": SpaceKind.FOCK_ODD,
    "full": SpaceKind.FOCK_FULL,
}


@dataclass(frozen=True)
class BasisSpec:
    """A finite Hilbert space together with its ordered basis"""
    space: SpaceKind
    d: int
    L: int = 1  # ignored for Fock spaces

    def __post_init__(self):
        object.__setattr__(self, "space", SpaceKind(self.space))
        if self.d < 1:
            raise ParameterError(f"d must be >= 1, got {self.d}")
        if self.space in (SpaceKind.FULL_TENSOR, SpaceKind.SYM, SpaceKind.WEDGE) and self.L < 1:
            raise ParameterError(f"L must be >= 1, got {self.L}")
        if self.space is SpaceKind.WEDGE and self.L > self.d:
            raise ParameterError(f"wedge space needs L <= d, got d={self.d}, L={self.L}")

    @property
    def dim(self) -> int:
        d, L = self.d, self.L
        if self.space is SpaceKind.FULL_TENSOR:
            return d ** L
        if self.space is SpaceKind.SYM:
            return math.comb(d + L - 1, L)
        if self.space is SpaceKind.WEDGE:
            return math.comb(d, L)
        if self.space is SpaceKind.FOCK_FULL:
            return 2 ** d
        return 2 ** (d - 1)


@dataclass(frozen=True, eq=False)
class Isometry:
    """J: source -> target with J†J = I on the source"""
    source: BasisSpec
    target: BasisSpec
    matrix: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.matrix, dtype=complex)
        if J.shape != (self.target.dim, self.source.dim):
            raise ValidationError(
                f"isometry shape {J.shape} does not match "
                f"({self.target.dim}, {self.source.dim})")
        J.setflags(write=False)
        object.__setattr__(self, "matrix", J)
        residual = self.residual()
        if residual > config.ISOMETRY_TOL:
            raise ValidationError(f"J†J differs from I by {residual:.3e}")
        logger.debug("isometry %s -> %s: residual %.3e", self.source.space.value,
                     self.target.space.value, residual)

    def residual(self) -> float:
        J = self.matrix
        return float(np.abs(J.conj().T @ J - np.eye(J.shape[1])).max())


def permutation_sign(perm) -> int:
    """Sign of a permutation given as a sequence of 0..n-1."""
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def check_dense_cap(dim: int, max_bytes: int = config.MAX_DENSE_BYTES, what: str = "operator"):
    """Raise ResourceCapError if a dim x dim complex128 matrix would exceed max_bytes."""
    need = dim * dim * config.COMPLEX_BYTES
    if need > max_bytes:
        raise ResourceCapError(
            f"dense {what} of dimension {dim} needs {need} bytes, cap is {max_bytes}")


def dim_space(state_class: StateClass) -> int:
    """Dimension N of the space carrying density matrices for the class."""
    d, L = state_class.d, state_class.L
    kind = state_class.kind
    if kind is ClassKind.SEPARABLE:
        return d ** L
    if kind is ClassKind.BOSONIC:
        return math.comb(d + L - 1, L)
    if kind is ClassKind.SLATER:
        return math.comb(d, L)
    if kind is ClassKind.GAUSSIAN:
        return 2 ** (d - 1)
    raise ParameterError(f"unsupported class {state_class!r}")


def fock_basis(d: int, sector: str = "full") -> List[str]:
    """Occupation bitstrings of d modes, mode 1 first (most significant)."""
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    if sector not in _FOCK_SECTORS:
        raise ParameterError(f"unknown Fock sector {sector!r}")
    strings = [format(k, f"0{d}b") for k in range(2 ** d)]
    if sector == "full":
        return strings
    parity = 0 if sector == "even" else 1
    return [s for s in strings if s.count("1") % 2 == parity]


def basis_labels(spec: BasisSpec) -> list:
    d, L = spec.d, spec.L
    if spec.space is SpaceKind.FULL_TENSOR:
        return list(itertools.product(range(d), repeat=L))
    if spec.space is SpaceKind.SYM:
        return list(itertools.combinations_with_replacement(range(d), L))
    if spec.space is SpaceKind.WEDGE:
        return list(itertools.combinations(range(d), L))
    sector = {SpaceKind.FOCK_EVEN: "even", SpaceKind.FOCK_ODD: "odd", SpaceKind.FOCK_FULL: "full"}
    return fock_basis(d, sector[spec.space])


def sym_isometry(d: int, L: int, max_bytes: int = config.MAX_DENSE_BYTES) -> Isometry:
    """Sym^L(C^d) -> (C^d)^{⊗L}; column = normalized symmetrization of a multiset."""
    source = BasisSpec(SpaceKind.SYM, d, L)
    target = BasisSpec(SpaceKind.FULL_TENSOR, d, L)
    check_dense_cap(max(source.dim, target.dim), max_bytes, "isometry")
    J = np.zeros((target.dim, source.dim), dtype=complex)
    shape = (d,) * L
    for col, multiset in enumerate(basis_labels(source)):
        arrangements = set(itertools.permutations(multiset))
        amp = 1.0 / math.sqrt(len(arrangements))
        for idx in arrangements:
            J[np.ravel_multi_index(idx, shape), col] = amp
    return Isometry(source, target, J)


def wedge_isometry(d: int, L: int, max_bytes: int = config.MAX_DENSE_BYTES) -> Isometry:
    """∧^L(C^d) -> (C^d)^{⊗L}; column = (1/√L!) Σ sgn(σ) e_{i_σ(1)} ⊗ ... ⊗ e_{i_σ(L)}."""
    source = BasisSpec(SpaceKind.WEDGE, d, L)
    target = BasisSpec(SpaceKind.FULL_TENSOR, d, L)
    check_dense_cap(max(source.dim, target.dim), max_bytes, "isometry")
    J = np.zeros((target.dim, source.dim), dtype=complex)
    shape = (d,) * L
    amp = 1.0 / math.sqrt(math.factorial(L))
    perms = [(p, permutation_sign(p)) for p in itertools.permutations(range(L))]
    for col, tup in enumerate(basis_labels(source)):
        for p, sign in perms:
            idx = tuple(tup[k] for k in p)
            J[np.ravel_multi_index(idx, shape), col] = sign * amp
    return Isometry(source, target, J)


def fock_sector_isometry(d: int, sector: str = "even") -> Isometry:
    """Inclusion of a parity sector into the full Fock space."""
    if sector not in ("even", "odd"):
        raise ParameterError(f"sector must be 'even' or 'odd', got {sector!r}")
    source = BasisSpec(_FOCK_SECTORS[sector], d)
    target = BasisSpec(SpaceKind.FOCK_FULL, d)
    J = np.zeros((target.dim, source.dim), dtype=complex)
    for col, bits in enumerate(fock_basis(d, sector)):
        J[int(bits, 2), col] = 1.0
    return Isometry(source, target, J)


def embedding(state_class: StateClass, max_bytes: int = config.MAX_DENSE_BYTES) -> Optional[Isometry]:
    """Per-copy embedding of the physical space; None when it already is the full tensor space."""
    kind = state_class.kind
    if kind is ClassKind.SEPARABLE:
        return None
    if kind is ClassKind.BOSONIC:
        return sym_isometry(state_class.d, state_class.L, max_bytes)
    if kind is ClassKind.SLATER:
        return wedge_isometry(state_class.d, state_class.L, max_bytes)
    return fock_sector_isometry(state_class.d, "even")


def kron(a, b, max_bytes: int = config.MAX_DENSE_BYTES):
    """Tensor product, first factor most significant.

    Dense arrays go through np.kron; operator objects use their own kron.
    """
    if isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
        if a.ndim == 2 and b.ndim == 2:
            check_dense_cap(max(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), max_bytes)
        return np.kron(a, b)
    return a.kron(b, max_bytes=max_bytes)
