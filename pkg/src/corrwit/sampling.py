"""
Reproducible random generation: Haar unitaries, isospectral density matrices,
random pure members of each class and random mixtures of them.

Every sample i of a run draws from its own counter-based stream
Philox(SeedSequence(seed, spawn_key=(i,))), so results do not depend on the
order in which samples are evaluated or on the number of workers.
"""

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg

from corrwit import config
from corrwit.data_structures import ClassKind, DensityMatrix, Spectrum, StateClass
from corrwit.errors import ParameterError, ValidationError
from corrwit.operators import majorana_ops
from corrwit.spaces import dim_space, embedding, fock_sector_isometry


@dataclass(frozen=True)
class RandomStream:
    """(master seed, stream index) -> an independent numpy Generator"""
    seed: int = config.DEFAULT_SEED
    index: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.index < 0:
            raise ParameterError(f"seed and stream index must be nonnegative, got {self.seed}, {self.index}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.index,))
        return np.random.Generator(np.random.Philox(ss))


StreamLike = Union[RandomStream, np.random.Generator]


def _rng(stream: StreamLike) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


def _ginibre(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def haar_unitary(N: int, stream: StreamLike) -> np.ndarray:
    """Haar-distributed N x N unitary: Ginibre matrix, QR, then fix the phases of diag(R)."""
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    rng = _rng(stream)
    Q, R = scipy.linalg.qr(_ginibre(rng, N, N))
    diag = np.diag(R)
    return Q * (diag / np.abs(diag))


def haar_vector(N: int, stream: StreamLike) -> np.ndarray:
    """Uniformly distributed unit vector in C^N."""
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    z = _ginibre(_rng(stream), N)
    return z / np.linalg.norm(z)


def isospectral_sample(spectrum: Spectrum, stream: StreamLike,
                       state_class: Optional[StateClass] = None) -> DensityMatrix:
    """U diag(p) U† with Haar U."""
    U = haar_unitary(spectrum.N, stream)
    rho = (U * spectrum.as_array()) @ U.conj().T
    return DensityMatrix((rho + rho.conj().T) / 2, state_class)


def _gaussian_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    # exp(-iH), H = (i/4) Σ h_kl c_k c_l with h real antisymmetric
    cs = [c.matrix for c in majorana_ops(d)]
    upper = np.triu(rng.standard_normal((2 * d, 2 * d)), k=1)
    h = upper - upper.T
    H = sum(h[k, l] * cs[k] @ cs[l]
            for k, l in itertools.product(range(2 * d), repeat=2) if k != l)
    H = 0.25j * H
    return scipy.linalg.expm(-1j * (H + H.conj().T) / 2)


def random_class_member(state_class: StateClass, stream: StreamLike) -> np.ndarray:
    """
    Random pure state of the class, in the class's physical basis.

    separable: ⊗ of L Haar vectors; bosonic: φ^{⊗L}; slater: the first L columns
    of a Haar unitary, wedged (coordinates are L x L minors); gaussian: exp(−iH)|0⟩
    restricted to the even sector.
    """
    rng = _rng(stream)
    d, L = state_class.d, state_class.L
    kind = state_class.kind
    if kind is ClassKind.SEPARABLE:
        return functools.reduce(np.kron, [haar_vector(d, rng) for _ in range(L)])
    if kind is ClassKind.BOSONIC:
        phi = haar_vector(d, rng)
        J = embedding(state_class).matrix
        psi = J.conj().T @ functools.reduce(np.kron, [phi] * L)
        return psi / np.linalg.norm(psi)
    if kind is ClassKind.SLATER:
        frame = haar_unitary(d, rng)[:, :L]
        psi = np.array([np.linalg.det(frame[list(rows), :])
                        for rows in itertools.combinations(range(d), L)])
        return psi / np.linalg.norm(psi)
    U = _gaussian_unitary(d, rng)
    even = fock_sector_isometry(d, "even").matrix
    psi = even.conj().T @ U[:, 0]
    return psi / np.linalg.norm(psi)


def random_class_symmetry(state_class: StateClass, stream: StreamLike) -> np.ndarray:
    """Random unitary on the physical space that maps the class onto itself."""
    rng = _rng(stream)
    d, L = state_class.d, state_class.L
    kind = state_class.kind
    if kind is ClassKind.SEPARABLE:
        return functools.reduce(np.kron, [haar_unitary(d, rng) for _ in range(L)])
    if kind in (ClassKind.BOSONIC, ClassKind.SLATER):
        u = haar_unitary(d, rng)
        J = embedding(state_class).matrix
        return J.conj().T @ functools.reduce(np.kron, [u] * L) @ J
    even = fock_sector_isometry(d, "even").matrix
    return even.conj().T @ _gaussian_unitary(d, rng) @ even


def random_mixture(state_class: StateClass, k: int, stream: StreamLike) -> DensityMatrix:
    """Σ w_i |ψ_i⟩⟨ψ_i| over k random class members, w uniform on the simplex."""
    if k < 1:
        raise ValidationError(f"mixture needs k >= 1 members, got {k}")
    rng = _rng(stream)
    N = dim_space(state_class)
    weights = rng.exponential(size=k)
    weights /= weights.sum()
    rho = np.zeros((N, N), dtype=complex)
    for w in weights:
        psi = random_class_member(state_class, rng)
        rho += w * np.outer(psi, psi.conj())
    return DensityMatrix((rho + rho.conj().T) / 2, state_class)
