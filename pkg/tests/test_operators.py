import itertools
import math

import numpy as np
import pytest

from corrwit import config
from corrwit.data_structures import StateClass
from corrwit.errors import ParameterError, ParseError, ResourceCapError, ValidationError
from corrwit.operators import (
    DenseOperator,
    PermutationSum,
    ProjectedOperator,
    block_symmetrizer,
    build_A,
    build_V,
    compose,
    compress,
    copy_swap,
    full_symmetrizer,
    kernel_projector,
    lambda_operator,
    linear_combination,
    majorana_ops,
    operator_from_json,
    operator_to_json,
    pair_symmetrizer,
    pair_symmetrizer_product,
    permutation_matrix,
    projector_asym2,
    projector_residuals,
    projector_sym2,
    reference_A,
    swap_operator,
    two_copy_expectation,
)
from corrwit.spaces import fock_basis, sym_isometry, wedge_isometry

from conftest import SMALL_CLASSES


def _random_density(N, rng):
    G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def test_permutation_sum_matches_transpose(np_rng):
    d, perm = 3, (2, 0, 1)
    op = PermutationSum(d, 3, [(1.0, perm)])
    v = np_rng.standard_normal(d ** 3) + 0j
    expected = np.transpose(v.reshape(d, d, d), perm).reshape(-1)
    assert np.abs(op.apply(v) - expected).max() < 1e-15


def test_permutation_sum_merges_terms():
    op = PermutationSum(2, 2, [(0.5, (1, 0)), (0.5, (1, 0)), (1.0, (0, 1)), (-1.0, (0, 1))])
    assert op.terms == ((1.0, (1, 0)),)
    with pytest.raises(ParameterError):
        PermutationSum(2, 2, [(1.0, (0, 0))])


def test_compose_and_adjoint_agree_with_dense(np_rng):
    d, n = 2, 3
    perms = list(itertools.permutations(range(n)))
    a = PermutationSum(d, n, [(np_rng.standard_normal() + 1j, p) for p in perms[:3]])
    b = PermutationSum(d, n, [(np_rng.standard_normal(), p) for p in perms[2:]])
    assert np.abs(compose(a, b).to_dense() - a.to_dense() @ b.to_dense()).max() < 1e-12
    assert np.abs(a.H.to_dense() - a.to_dense().conj().T).max() < 1e-12
    assert a.trace() == pytest.approx(np.trace(a.to_dense()))


def test_sym_asym_projectors():
    for N in (2, 3, 5):
        s, a = projector_sym2(N), projector_asym2(N)
        assert s.trace().real == pytest.approx(N * (N + 1) / 2)
        assert a.trace().real == pytest.approx(N * (N - 1) / 2)
        S = s.to_dense()
        assert np.abs(S @ S - S).max() < 1e-14
        assert np.abs(S + a.to_dense() - np.eye(N * N)).max() < 1e-14
        assert np.abs(swap_operator(N).to_dense() @ S - S).max() < 1e-14


def test_swap_expectation_is_overlap(np_rng):
    r1, r2 = _random_density(4, np_rng), _random_density(4, np_rng)
    value = two_copy_expectation(swap_operator(4), r1, r2)
    assert value == pytest.approx(np.trace(r1 @ r2))
    purity = np.trace(r1 @ r1).real
    assert two_copy_expectation(projector_asym2(4), r1, r1).real == pytest.approx((1 - purity) / 2)


def test_pair_and_block_symmetrizers():
    L, d = 2, 2
    P = pair_symmetrizer_product(L, d).to_dense()
    assert np.abs(P @ P - P).max() < 1e-14
    assert np.abs(P - pair_symmetrizer(L, 1, d).to_dense() @ pair_symmetrizer(L, 2, d).to_dense()).max() < 1e-14
    tau = copy_swap(L, d).to_dense()
    assert np.abs(tau @ tau - np.eye(d ** 4)).max() < 1e-14
    sym = block_symmetrizer(L, d, [1, 2], "sym")
    asym = block_symmetrizer(L, d, [1, 2], "asym")
    assert sym.trace().real == pytest.approx(3 * 4)
    assert asym.trace().real == pytest.approx(1 * 4)
    assert full_symmetrizer(4, 2).trace().real == pytest.approx(math.comb(5, 4))
    with pytest.raises(ParameterError):
        block_symmetrizer(L, d, [0, 1])
    with pytest.raises(ParameterError):
        pair_symmetrizer(L, 3, d)


@pytest.mark.parametrize("make", [sym_isometry, wedge_isometry])
def test_projected_operator_methods_agree(make, np_rng):
    d, L = 3, 2
    J = make(d, L)
    K = compose(pair_symmetrizer_product(L, d), block_symmetrizer(L, d, [1, 3], "sym"))
    proj = ProjectedOperator(K, J)
    full = proj.to_dense(method="full")
    einsum = proj.to_dense(method="einsum")
    assert np.abs(full - einsum).max() < 1e-12
    v = np_rng.standard_normal(proj.dim) + 1j * np_rng.standard_normal(proj.dim)
    assert np.abs(proj.apply(v) - full @ v).max() < 1e-12
    assert proj.trace() == pytest.approx(np.trace(full))
    N = J.source.dim
    r1, r2 = _random_density(N, np_rng), _random_density(N, np_rng)
    dense_value = np.trace(np.kron(r1, r2) @ full)
    assert proj.expectation2(r1, r2) == pytest.approx(dense_value)
    assert np.abs(compress(DenseOperator(K.to_dense()), J).to_dense() - full).max() < 1e-12


def test_linear_combination_stays_lazy():
    s = projector_sym2(3)
    combo = linear_combination([(1.0, s), (-1.0, projector_asym2(3))])
    assert isinstance(combo, PermutationSum)
    assert np.abs(combo.to_dense() - swap_operator(3).to_dense()).max() < 1e-15
    with pytest.raises(ValidationError):
        linear_combination([(1.0, s), (1.0, DenseOperator(np.eye(4)))]).to_dense()


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_majorana_algebra(d):
    cs = [c.matrix for c in majorana_ops(d)]
    assert len(cs) == 2 * d
    eye = np.eye(2 ** d)
    for i, a in enumerate(cs):
        assert np.abs(a - a.conj().T).max() < 1e-15
        for j, b in enumerate(cs):
            assert np.abs(a @ b + b @ a - 2 * (i == j) * eye).max() < 1e-12


def test_lambda_annihilates_vacuum_pair():
    lam = lambda_operator(2).matrix
    vac = np.zeros(4)
    vac[0] = 1.0
    assert np.abs(lam @ np.kron(vac, vac)).max() < 1e-12


def test_lambda_single_mode_spectrum():
    w = np.linalg.eigvalsh(lambda_operator(1).matrix)
    assert np.abs(w - np.array([-2.0, 0.0, 0.0, 2.0])).max() < 1e-12


@pytest.mark.parametrize("d", [2, 4])
def test_lambda_symmetries(d):
    lam = lambda_operator(d).matrix
    n = 2 ** d
    tau = swap_operator(n).to_dense()
    parity = np.diag([(-1.0) ** bits.count("1") for bits in fock_basis(d)])
    pp = np.kron(parity, parity)
    assert np.abs(lam - lam.conj().T).max() <= 1e-12
    assert np.abs(tau @ lam @ tau - lam).max() <= 1e-12
    assert np.abs(lam @ pp - pp @ lam).max() <= 1e-12


def test_kernel_projector():
    M = np.diag([0.0, 1.0, 0.0, 2.0])
    P = kernel_projector(M).matrix
    assert np.abs(P - np.diag([1.0, 0.0, 1.0, 0.0])).max() < 1e-12
    rect = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert np.trace(kernel_projector(rect).matrix).real == pytest.approx(1.0)


@pytest.mark.parametrize("cls, trace", [
    (StateClass.separable(2, 2), 1.0),
    (StateClass.bosonic(2, 2), 1.0),
    (StateClass.slater(4, 2), 1.0),
    (StateClass.gaussian(3), 0.0),
])
def test_projector_trace(cls, trace, projector):
    A = projector(cls)
    assert A.trace == pytest.approx(trace, abs=1e-10)
    assert A.dim_sym2 == A.N * (A.N + 1) // 2


@pytest.mark.parametrize("cls", SMALL_CLASSES, ids=lambda c: c.label)
def test_projector_axioms(cls, projector):
    res = projector_residuals(projector(cls))
    assert max(res.values()) <= config.OPERATOR_TOL


def test_projector_variants(projector):
    assert projector(StateClass.separable(2, 2)).variant == "printed"
    bosonic = projector(StateClass.bosonic(2, 2))
    assert bosonic.variant == "symmetrized"
    assert bosonic.printed_residual > config.OPERATOR_TOL
    slater = projector(StateClass.slater(4, 2))
    assert slater.variant == "printed"
    assert slater.printed_residual <= config.OPERATOR_TOL
    assert projector(StateClass.gaussian(3)).variant == "spectral"


def test_bosonic_single_particle_is_zero():
    A = build_A(StateClass.bosonic(3, 1))
    assert A.variant == "printed"
    assert np.abs(A.dense).max() < 1e-12


@pytest.mark.parametrize("cls", SMALL_CLASSES + [StateClass.separable(3, 2)], ids=lambda c: c.label)
def test_matrix_free_apply_matches_explicit_matrix(cls, projector, np_rng):
    A = projector(cls)
    reference = reference_A(cls)
    assert np.abs(A.dense - reference).max() < 1e-10
    for _ in range(50):
        v = np_rng.standard_normal(A.N ** 2) + 1j * np_rng.standard_normal(A.N ** 2)
        assert np.abs(A.apply(v) - reference @ v).max() < 1e-10


def test_permutation_matrix_is_index_relabeling():
    P = permutation_matrix(2, (1, 2, 0))
    # |a b c> -> |b c a>
    src = np.ravel_multi_index((1, 0, 0), (2, 2, 2))
    dst = np.ravel_multi_index((0, 0, 1), (2, 2, 2))
    assert P[dst, src] == 1.0
    assert np.abs(P @ P.T - np.eye(8)).max() == 0.0
    swap = permutation_matrix(3, (1, 0))
    a, b = np.eye(3)[0], np.eye(3)[2]
    assert np.abs(swap @ np.kron(a, b) - np.kron(b, a)).max() == 0.0
    with pytest.raises(ParameterError):
        permutation_matrix(2, (0, 0))


def test_witness_operator(projector, np_rng):
    A = projector(StateClass.slater(4, 2))
    V = build_V(A)
    dense = V.to_dense()
    assert np.abs(dense - (A.dense - projector_asym2(6).to_dense())).max() < 1e-12
    rho = _random_density(6, np_rng)
    assert two_copy_expectation(V, rho, rho) == pytest.approx(np.trace(np.kron(rho, rho) @ dense))


def test_memory_cap_is_respected():
    with pytest.raises(ResourceCapError):
        build_A(StateClass.gaussian(4), max_bytes=1024)
    A = build_A(StateClass.slater(4, 2), max_bytes=8192)
    assert math.isnan(A.printed_residual)
    assert A.trace == pytest.approx(1.0)
    with pytest.raises(ResourceCapError):
        A.to_dense(max_bytes=8192)


def test_operator_json(projector):
    A = projector(StateClass.separable(2, 2))
    op = operator_from_json(operator_to_json(A))
    assert op.dim == 16
    assert np.abs(op.matrix - A.dense).max() < 1e-15
    with pytest.raises(ParseError):
        operator_from_json('{"rows": []}')
