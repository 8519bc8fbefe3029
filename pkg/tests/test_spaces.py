import itertools

import numpy as np
import pytest

from corrwit.data_structures import StateClass
from corrwit.errors import ParameterError, ResourceCapError, ValidationError
from corrwit.spaces import (
    BasisSpec,
    Isometry,
    SpaceKind,
    basis_labels,
    check_dense_cap,
    dim_space,
    embedding,
    fock_basis,
    fock_sector_isometry,
    kron,
    permutation_sign,
    sym_isometry,
    wedge_isometry,
)


@pytest.mark.parametrize("cls, N", [
    (StateClass.separable(2, 3), 8),
    (StateClass.separable(3, 2), 9),
    (StateClass.bosonic(3, 2), 6),
    (StateClass.bosonic(2, 3), 4),
    (StateClass.slater(4, 2), 6),
    (StateClass.slater(6, 2), 15),
    (StateClass.gaussian(3), 4),
    (StateClass.gaussian(4), 8),
])
def test_dim_space(cls, N):
    assert dim_space(cls) == N


def test_basis_spec_dim_matches_labels():
    for space, d, L in [("full_tensor", 3, 2), ("sym", 3, 3), ("wedge", 5, 2), ("fock_even", 4, 1)]:
        spec = BasisSpec(space, d, L)
        assert spec.dim == len(basis_labels(spec))
    with pytest.raises(ParameterError):
        BasisSpec(SpaceKind.WEDGE, 2, 3)


def test_fock_basis_order():
    assert fock_basis(2) == ["00", "01", "10", "11"]
    assert fock_basis(3, "even") == ["000", "011", "101", "110"]
    assert fock_basis(3, "odd") == ["001", "010", "100", "111"]
    with pytest.raises(ParameterError):
        fock_basis(3, "mixed")


def test_permutation_sign():
    assert permutation_sign((0, 1, 2)) == 1
    assert permutation_sign((1, 0, 2)) == -1
    assert permutation_sign((1, 2, 0)) == 1
    for p in itertools.permutations(range(4)):
        inverse = tuple(np.argsort(p))
        assert permutation_sign(p) == permutation_sign(inverse)


@pytest.mark.parametrize("make, d, L", [
    (sym_isometry, 2, 3),
    (sym_isometry, 3, 2),
    (wedge_isometry, 4, 2),
    (wedge_isometry, 5, 3),
])
def test_isometries(make, d, L):
    J = make(d, L)
    assert J.residual() < 1e-12
    assert J.matrix.shape == (d ** L, J.source.dim)


def test_sym_isometry_symmetric_and_wedge_antisymmetric():
    d, L = 3, 2
    Js = sym_isometry(d, L).matrix.reshape(d, d, -1)
    Jw = wedge_isometry(d, L).matrix.reshape(d, d, -1)
    assert np.abs(Js - Js.transpose(1, 0, 2)).max() < 1e-15
    assert np.abs(Jw + Jw.transpose(1, 0, 2)).max() < 1e-15
    # e_0 ∧ e_1 = (e_0 ⊗ e_1 − e_1 ⊗ e_0)/√2
    assert Jw[0, 1, 0] == pytest.approx(1 / np.sqrt(2))
    assert Jw[1, 0, 0] == pytest.approx(-1 / np.sqrt(2))


def test_fock_sector_isometry():
    J = fock_sector_isometry(3, "even")
    assert J.residual() == 0.0
    assert [int(np.argmax(col)) for col in J.matrix.T] == [0, 3, 5, 6]


def test_isometry_rejects_non_isometric_matrix():
    src = BasisSpec(SpaceKind.FOCK_EVEN, 2)
    dst = BasisSpec(SpaceKind.FOCK_FULL, 2)
    with pytest.raises(ValidationError):
        Isometry(src, dst, 2 * fock_sector_isometry(2, "even").matrix)
    with pytest.raises(ValidationError):
        Isometry(src, dst, np.zeros((3, 1)))


def test_embedding_per_class():
    assert embedding(StateClass.separable(2, 2)) is None
    assert embedding(StateClass.bosonic(2, 2)).source.space is SpaceKind.SYM
    assert embedding(StateClass.slater(4, 2)).source.space is SpaceKind.WEDGE
    assert embedding(StateClass.gaussian(3)).source.space is SpaceKind.FOCK_EVEN


def test_dense_cap():
    check_dense_cap(16, max_bytes=16 * 16 * 16)
    with pytest.raises(ResourceCapError):
        check_dense_cap(17, max_bytes=16 * 16 * 16)
    with pytest.raises(ResourceCapError):
        sym_isometry(4, 6, max_bytes=1024)


def test_kron_first_factor_most_significant():
    a = np.diag([1.0, 2.0])
    b = np.diag([1.0, 10.0])
    assert np.diag(kron(a, b)).tolist() == [1.0, 10.0, 2.0, 20.0]
