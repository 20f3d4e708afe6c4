import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entbound.bounds import (
    ConservedQuantity,
    assemble_bound,
    basis_bounds,
    number_decomposition,
    povm_bounds,
    project_conserved,
    q_c,
    q_ct,
    q_fl,
    q_fsd,
    q_fsdp,
    q_mu,
    q_pn,
    state_dependent_sum,
    witness_povm,
)
from entbound.entropy import JointDistribution, conditional_classical, conditional_quantum
from entbound.measurement import (
    Measurement,
    cq_conditional,
    joint_distribution,
    overlap_matrix,
    povm_overlap_h,
    residual_conditional,
)
from entbound.qmath import DensityOperator, PureStateVector, fourier_matrix
from entbound.verify import random_density, random_povm, random_separable, random_unitary

HALF = Measurement.povm([np.eye(2) / 2, np.eye(2) / 2])
TRIVIAL = Measurement.povm([np.eye(2)])


def _mub(d):
    return Measurement.computational(d), Measurement.basis(fourier_matrix(d))


def test_q_mu_examples(hadamard):
    c = Measurement.computational(3)
    assert q_mu(overlap_matrix(c, c)) == 0
    for d in (2, 3, 5):
        assert q_mu(overlap_matrix(*_mub(d))) == pytest.approx(math.log2(d))
    assert q_mu(overlap_matrix(Measurement.computational(2), Measurement.basis(hadamard))) == pytest.approx(1)


def test_q_fl_examples():
    x, z = _mub(2)
    assert q_fl(x, z) == pytest.approx(1)
    assert q_fl(TRIVIAL, TRIVIAL) == pytest.approx(-1)
    assert q_fl(x, x) == pytest.approx(0)
    b1, b2 = Measurement.basis(random_unitary(3, 1)), Measurement.basis(random_unitary(3, 2))
    assert q_fl(b1, b2) == pytest.approx(q_mu(overlap_matrix(b1, b2)))


def test_q_ct_examples(hadamard):
    x, z = _mub(2)
    assert q_ct(x, z) == pytest.approx(0, abs=1e-12)
    assert q_ct(x, x) == pytest.approx(0, abs=1e-12)
    assert q_ct(Measurement.computational(2), Measurement.basis(hadamard)) == pytest.approx(0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10_000))
def test_q_ct_collapses_to_square(d, seed):
    # sum_z X Z X = X^2 because Z sums to the identity
    x, z = random_povm(d, 3, seed), random_povm(d, 3, seed + 1)
    top = max(np.linalg.norm(e @ e, 2) for e in x.elements)
    assert q_ct(x, z) == pytest.approx(-math.log2(top), abs=1e-9)


def test_literal_ct_relation_counterexample():
    # as printed, the sum over z collapses to (X^x)^2; X = {I/2, I/2}, Z = {I} then breaks the relation
    rho = random_density(4, 2, 0, (2, 2))
    lhs = cq_conditional(rho, HALF) + cq_conditional(rho, TRIVIAL)
    rhs = q_ct(HALF, TRIVIAL) + conditional_quantum(rho) - residual_conditional(rho, HALF)
    assert q_ct(HALF, TRIVIAL) == pytest.approx(2)
    assert lhs < rhs - 0.5


def test_q_c_examples():
    for d in (2, 3):
        c = overlap_matrix(*_mub(d))
        assert q_c(c, np.random.default_rng(d).dirichlet(np.ones(d))) == pytest.approx(math.log2(d))
    c = np.array([[0.5, 0.5], [1.0, 0.0]])
    assert q_c(c, [1, 0]) == pytest.approx(1)
    assert q_c(c, [0.5, 0.5]) == pytest.approx(0.5)


def test_q_fsd_examples(bell, hadamard):
    rho = random_density(9, 4, 2, (3, 3))
    x, z = _mub(3)
    y = Measurement.basis(random_unitary(3, 3))
    assert q_fsd(overlap_matrix(x, z), joint_distribution(rho, x, y),
                 joint_distribution(rho, z, y)) == pytest.approx(math.log2(3))
    p = JointDistribution(np.diag([0.25, 0.75]))
    assert q_fsd(np.eye(2), p, p) == pytest.approx(conditional_classical(p), abs=1e-12)
    c2 = Measurement.computational(2)
    h2 = Measurement.basis(hadamard)
    q = q_fsd(overlap_matrix(c2, h2), joint_distribution(bell, c2, c2), joint_distribution(bell, h2, c2))
    assert q == pytest.approx(1)


def test_state_dependent_sum_drops_empty_columns():
    pxy = np.array([[0.5, 0.0], [0.5, 0.0]])
    pzy = np.array([[0.5, 0.0], [0.5, 0.0]])
    assert state_dependent_sum(np.full((2, 2), 0.5), pxy, pzy) == pytest.approx(1)
    with pytest.raises(ValueError):
        state_dependent_sum(np.eye(3), pxy, pzy)


def test_q_fsdp_examples():
    rho = random_density(4, 3, 4, (2, 2))
    x, z = Measurement.basis(random_unitary(2, 1)), Measurement.basis(random_unitary(2, 2))
    y = Measurement.basis(random_unitary(2, 3))
    pxy, pzy = joint_distribution(rho, x, y), joint_distribution(rho, z, y)
    assert q_fsdp(povm_overlap_h(x.as_povm(), z.as_povm()), pxy, pzy) == pytest.approx(
        q_fsd(overlap_matrix(x, z), pxy, pzy))
    pty = joint_distribution(rho, TRIVIAL, y)
    assert q_fsdp(povm_overlap_h(x, TRIVIAL), pxy, pty) == pytest.approx(0, abs=1e-12)
    pxy = joint_distribution(rho, HALF, y)
    c = Measurement.computational(2)
    assert q_fsdp(povm_overlap_h(HALF, c), pxy, joint_distribution(rho, c, y)) == pytest.approx(1)


def test_q_pn_examples():
    f = np.abs(np.array([[1j / np.sqrt(3)]])) ** 2
    assert q_pn([1.0, 1 / 3], [1.0, 0.0]) == 0
    assert q_pn([1.0, 1 / 3], [0.0, 1.0]) == pytest.approx(math.log2(3))
    assert q_pn({0: 1.0, 1: 1 / 3}, {0: 0.5, 1: 0.5}) == pytest.approx(0.5 * math.log2(3))
    assert f[0, 0] == pytest.approx(1 / 3)


def test_assemble_examples(bell):
    x, z = _mub(2)
    rep = basis_bounds(bell, x, z, x, Measurement.basis(fourier_matrix(2).conj()))
    for kind in ("mu", "c", "fsd"):
        assert rep[kind].bound == pytest.approx(1)
        assert rep[kind].exact == pytest.approx(1)
        assert rep[kind].certifies
    r = assemble_bound("mu", 0.0, 0.3, 0.2)
    assert r.bound == pytest.approx(-0.5)
    assert abs(r.recomputed() - r.bound) < 1e-12
    with pytest.raises(ValueError):
        assemble_bound("fsdp", 1.0, 0, 0)
    with pytest.raises(ValueError):
        assemble_bound("fsd", 1.0, 0, 0, residual=0.1)
    with pytest.raises(ValueError):
        assemble_bound("nope", 1.0, 0, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 3))
def test_separable_bounds_nonpositive(seed, d):
    sep = random_separable(d, d, 3, seed)
    ms = [Measurement.basis(random_unitary(d, seed + k)) for k in range(4)]
    for r in basis_bounds(sep, *ms).values():
        assert r.bound <= 1e-9
        assert r.bound <= r.exact + 1e-9
    ps = [random_povm(d, 3, seed + k) for k in range(4)]
    for r in povm_bounds(sep, *ps).values():
        if r.kind != "ct":
            assert r.bound <= 1e-9
        assert abs(r.recomputed() - r.bound) < 1e-12


def test_witness_examples(bell):
    prod = DensityOperator(np.kron(random_density(2, 2, 1).matrix, random_density(2, 2, 2).matrix), (2, 2))
    for s in range(5):
        assert witness_povm(prod, random_povm(2, 3, s)) >= -1e-9
    rho = random_density(4, 3, 3, (2, 2))
    assert witness_povm(rho, Measurement.computational(2)) == pytest.approx(conditional_quantum(rho))
    assert witness_povm(bell, HALF) == pytest.approx(0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_fsd_relation_validity(seed):
    rho = random_density(9, None, seed, (3, 3))
    x, z, y = (Measurement.basis(random_unitary(3, seed + k)) for k in range(3))
    pxy, pzy = joint_distribution(rho, x, y), joint_distribution(rho, z, y)
    lhs = conditional_classical(pxy) + cq_conditional(rho, z)
    assert lhs >= conditional_quantum(rho) + q_fsd(overlap_matrix(x, z), pxy, pzy) - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_fsdp_relation_validity(seed):
    rho = random_density(6, None, seed, (2, 3))
    x, z, y = random_povm(2, 3, seed), random_povm(2, 2, seed + 1), random_povm(3, 3, seed + 2)
    pxy, pzy = joint_distribution(rho, x, y), joint_distribution(rho, z, y)
    lhs = conditional_classical(pxy) + cq_conditional(rho, z)
    rhs = conditional_quantum(rho) - residual_conditional(rho, z) + q_fsdp(povm_overlap_h(x, z), pxy, pzy)
    assert lhs >= rhs - 1e-9


def _cons(d):
    return ConservedQuantity.from_local_labels([0] + [1] * (d - 1), [0] + [1] * (d - 1))


def test_conserved_quantity_validation():
    with pytest.raises(ValueError):
        ConservedQuantity([((0, 0), np.diag([1, 0]), np.eye(2))])
    with pytest.raises(ValueError):
        ConservedQuantity([((0, 0), np.diag([1, 1.0]), np.eye(2)), ((1, 0), np.diag([1, 0]), np.eye(2))])
    assert len(_cons(3).labels) == 4


def test_project_conserved_examples():
    n = _cons(2)
    block = DensityOperator(np.diag([0.1, 0.2, 0.3, 0.4]), (2, 2))
    assert np.allclose(project_conserved(block, n).matrix, block.matrix)
    a, b = 0.6, 0.8
    psi = PureStateVector([a, 0, 0, b], (2, 2))
    assert np.allclose(project_conserved(psi, n).matrix, np.diag([a * a, 0, 0, b * b]))
    rho = random_density(9, 5, 1, (3, 3))
    bar = project_conserved(rho, _cons(3))
    assert np.isclose(np.trace(bar.matrix).real, 1)
    for p in _cons(3).projectors:
        assert np.allclose(p @ bar.matrix, bar.matrix @ p)
    assert np.allclose(project_conserved(bar, _cons(3)).matrix, bar.matrix)


def test_number_decomposition_examples():
    n = _cons(3)
    psi = PureStateVector(np.kron([0, 0.6, 0.8], [0, 0.8, 0.6]) + 0, (3, 3))
    r = number_decomposition(psi, n)
    assert r.number_entropy == pytest.approx(0, abs=1e-12)
    assert r.configurational == pytest.approx(r.total)
    # one particle split over two sites: |1>|0> + |0>|1>
    one = ConservedQuantity.from_local_labels([0, 1], [0, 1])
    r = number_decomposition(PureStateVector(np.array([0, 1, 1, 0]) / np.sqrt(2), (2, 2)), one)
    assert r.number_entropy == pytest.approx(1)
    assert r.configurational == pytest.approx(0, abs=1e-12)
    assert r.total == pytest.approx(1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_number_decomposition_sums(seed):
    rng = np.random.default_rng(seed)
    psi = PureStateVector.normalized(rng.standard_normal(9) + 1j * rng.standard_normal(9), (3, 3))
    r = number_decomposition(psi, _cons(3))
    # the identity needs a pure state on fixed total number; on general states only the DPI holds
    assert r.configurational <= r.total + 1e-9


def test_number_decomposition_identity_fixed_total():
    rng = np.random.default_rng(4)
    # local labels 0,1,1 on each side; total number 1 sectors: (0,1) and (1,0)
    v = np.zeros((3, 3), dtype=complex)
    v[0, 1:] = rng.standard_normal(2)
    v[1:, 0] = rng.standard_normal(2)
    psi = PureStateVector.normalized(v.ravel(), (3, 3))
    r = number_decomposition(psi, _cons(3))
    assert r.number_entropy + r.configurational == pytest.approx(r.total, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_dephased_distributions_equal(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(9, None, seed, (3, 3))
    bar = project_conserved(rho, _cons(3))
    def block_unitary():
        u = np.zeros((3, 3), dtype=complex)
        u[0, 0] = np.exp(2j * np.pi * rng.random())
        u[1:, 1:] = random_unitary(2, rng)
        return Measurement.basis(u)
    a, b = block_unitary(), block_unitary()
    assert np.max(np.abs(joint_distribution(rho, a, b).table - joint_distribution(bar, a, b).table)) < 1e-12
    assert -conditional_quantum(bar) <= -conditional_quantum(rho) + 1e-9


def test_literal_ct_exceeds_pairwise_factor_on_mub():
    # the printed inequality c_T <= max ||sqrt X sqrt Z||^2 cannot hold for the collapsed sum
    x, z = _mub(2)
    pairwise = max(np.linalg.norm(a @ b, 2) ** 2 for a in x.elements for b in z.elements)
    assert pairwise == pytest.approx(0.5)
    assert 2 ** -q_ct(x, z) == pytest.approx(1)
