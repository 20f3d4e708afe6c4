import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from entbound.qmath import fourier_matrix
from entbound.spin1 import (
    REFERENCE_PHASES,
    FockBasis,
    R_antisq,
    R_sq,
    SectorBlockedState,
    SpinRotation,
    SplitMeasurementSetup,
    beamsplit,
    bipartite_distribution,
    evolve,
    fig_data,
    fock_basis,
    fourier3,
    ladder_quadratic,
    number_operator,
    optimize_phases,
    polar_state,
    represent,
    represent_via_log,
    sector_dim,
    spin_mixing_hamiltonian,
    spin_operator,
    split_bounds,
    squeezed_state,
    squeezed_state_analytic,
    squeezing_hamiltonian,
    sz0_ground_state,
)
from entbound.verify import random_unitary


def _sz(N):
    return ladder_quadratic(N, np.diag([1, 0, -1]))


def test_fock_basis_order_and_size():
    b = FockBasis(2)
    assert len(b) == 6 == sector_dim(2)
    assert b.labels() == [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]
    for N in (0, 1, 5, 12):
        fb = FockBasis(N)
        assert len(fb) == (N + 1) * (N + 2) // 2
        assert np.array_equal(fb.index_array(fb.states), np.arange(len(fb)))
    with pytest.raises(ValueError):
        FockBasis(-1)


def test_ladder_examples():
    for N in (1, 3, 6):
        sz = _sz(N)
        assert np.allclose(sz, np.diag(fock_basis(N).states[:, 0] - fock_basis(N).states[:, 2]))
        assert np.allclose(ladder_quadratic(N, np.eye(3)), N * np.eye(len(fock_basis(N))))
    c = np.arange(9).reshape(3, 3) + 1j
    assert np.allclose(ladder_quadratic(1, c), c)


def test_represent_examples():
    for n in range(5):
        assert np.allclose(represent(np.eye(3), n), np.eye(sector_dim(n)))
    ph = np.array([0.3, -1.1, 0.8])
    d = represent(np.diag(np.exp(1j * ph)), 4)
    assert np.allclose(d, np.diag(np.exp(1j * fock_basis(4).states @ ph)))
    assert np.allclose(np.abs(represent(fourier3(), 1)) ** 2, 1 / 3)
    assert np.allclose(represent(fourier3(), 1), fourier3())
    assert represent(fourier3(), 0).shape == (1, 1)
    with pytest.raises(ValueError):
        represent(np.ones((3, 3)), 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_represent_unitary_and_multiplicative(seed, n):
    u, v = random_unitary(3, seed), random_unitary(3, seed + 1)
    ru, rv = represent(u, n), represent(v, n)
    assert np.allclose(ru @ ru.conj().T, np.eye(sector_dim(n)), atol=1e-8)
    assert np.allclose(represent(u @ v, n), ru @ rv, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_represent_matches_log_route(seed, n):
    u = random_unitary(3, seed)
    m, flagged = represent_via_log(u, n)
    assert not flagged
    assert np.allclose(m, represent(u, n), atol=1e-9)


def test_log_route_flags_minus_one():
    _, flagged = represent_via_log(np.diag([1, -1, 1]).astype(complex), 2)
    assert flagged


def test_spin_rotation_full_and_compose():
    r = SpinRotation(random_unitary(3, 5))
    f = r.full(3)
    assert f.shape == (20, 20)
    assert np.allclose(f @ f.conj().T, np.eye(20), atol=1e-10)
    s = SpinRotation(random_unitary(3, 6))
    assert np.allclose((r @ s).sector(3), r.sector(3) @ s.sector(3))


def test_hamiltonian_examples():
    N = 6
    h = spin_mixing_hamiltonian(N, 1.0, 0.3)
    assert np.allclose(h, h.T)
    assert np.max(np.abs(h @ _sz(N) - _sz(N) @ h)) < 1e-10
    col = h[:, fock_basis(N).index((0, N, 0))]
    nz = set(np.nonzero(np.abs(col) > 1e-12)[0]) - {fock_basis(N).index((0, N, 0))}
    assert nz == {fock_basis(N).index((1, N - 2, 1))}
    assert col[fock_basis(N).index((1, N - 2, 1))] == pytest.approx(math.sqrt(N * (N - 1)))
    h2 = spin_mixing_hamiltonian(2, 1.0, -1.5)
    i, j = fock_basis(2).index((0, 2, 0)), fock_basis(2).index((1, 0, 1))
    assert h2[i, j] == pytest.approx(math.sqrt(2))
    assert np.allclose(squeezing_hamiltonian(2), h2)


def test_evolution():
    N = 15
    h = squeezing_hamiltonian(N)
    assert np.allclose(evolve(polar_state(N), h, 0.0), polar_state(N))
    psi = squeezed_state(N, 0.2)
    assert np.linalg.norm(psi) == pytest.approx(1)
    assert abs(np.vdot(squeezed_state_analytic(N, 0.2), psi)) > 0.99
    support = {fock_basis(N).index((n, N - 2 * n, n)) for n in range(N // 2 + 1)}
    assert set(np.nonzero(np.abs(squeezed_state(N, 1.3)) > 1e-12)[0]) <= support


def test_beamsplit_examples():
    v = np.zeros(3, complex)
    v[0] = 1
    s = beamsplit(v)
    assert np.allclose(s.weights(), [0.5, 0.5])
    assert np.allclose(s.blocks[1], [[1 / math.sqrt(2)], [0], [0]])
    N = 9
    s = beamsplit(polar_state(N))
    assert np.allclose(s.weights(), [comb(N, n) / 2 ** N for n in range(N + 1)])
    assert s.configurational() == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        beamsplit(np.ones(4))


@pytest.mark.parametrize("N, r", [(4, 0.7), (7, 1.5)])
def test_number_entanglement_identity(N, r):
    from entbound.entropy import conditional_quantum

    s = beamsplit(squeezed_state(N, r))
    exact = -conditional_quantum(s.to_dense())
    assert s.number_entropy() + s.configurational() == pytest.approx(exact, abs=1e-9)
    assert s.entanglement() == pytest.approx(exact, abs=1e-9)


def test_sector_blocked_norm_check():
    with pytest.raises(ValueError):
        SectorBlockedState(1, [np.ones((1, 3)), np.ones((3, 1))])


def test_bipartite_distribution_examples():
    N = 5
    s = beamsplit(polar_state(N))
    eye = SpinRotation(np.eye(3))
    p = bipartite_distribution(s, eye, eye)
    assert p.table.sum() == pytest.approx(1)
    for n in range(N + 1):
        i = p.x_labels.index((0, n, 0))
        j = p.y_labels.index((0, N - n, 0))
        assert p.table[i, j] == pytest.approx(comb(N, n) / 2 ** N)
    s = beamsplit(squeezed_state(N, 0.9))
    base = bipartite_distribution(s, eye, eye).table.sum(axis=0)
    rot = bipartite_distribution(s, SpinRotation(random_unitary(3, 2)), eye).table.sum(axis=0)
    assert np.allclose(base, rot, atol=1e-12)


def test_spin_operators():
    N = 20
    a, b = spin_operator(N, np.pi / 4), spin_operator(N, 3 * np.pi / 4)
    assert np.allclose(a, a.conj().T)
    p = polar_state(N)
    assert abs(np.vdot(p, a @ p)) < 1e-12
    comm = np.vdot(p, (a @ b - b @ a) @ p)
    assert comm.imag == pytest.approx(2 * N, rel=0.1)
    for r in (R_sq(), R_antisq()):
        assert np.allclose(r.u @ r.u.conj().T, np.eye(3))


def test_number_operator_sum():
    N = 4
    total = sum(number_operator(N, m) for m in (1, 0, -1))
    assert np.allclose(total, N * np.eye(sector_dim(N)))


def test_split_factor_ordering():
    b = split_bounds(squeezed_state(8, 0.8))
    assert b.q_mu == 0
    # row maxima never exceed the sector maximum
    assert 0 <= b.q_pn <= b.q_c + 1e-12
    assert b.bound("mu") <= 1e-12


def test_polar_state_tight_at_origin():
    b = split_bounds(polar_state(10))
    assert b.configurational == pytest.approx(0, abs=1e-12)
    for kind in ("pn", "c", "fsd"):
        assert b.bound(kind) <= 1e-9


@pytest.fixture(scope="module")
def setup15():
    return SplitMeasurementSetup(beamsplit(squeezed_state(15, 0.5)))


def test_reference_phases_beat_bare_basis(setup15):
    assert setup15.entropy_sum(REFERENCE_PHASES) <= setup15.entropy_sum((0, 0, 0))


def test_optimizer_finds_positive_fsd_bound(setup15):
    opt = optimize_phases(setup15, restarts=4, seed=1)
    assert abs(sum(opt.phases)) < 1e-9
    assert opt.value <= setup15.entropy_sum(REFERENCE_PHASES) + 1e-6
    assert opt.bounds.bound("fsd") > 0
    again = optimize_phases(setup15, restarts=4, seed=1)
    assert again.phases == opt.phases


def test_optimizer_rejects_objective(setup15):
    with pytest.raises(ValueError):
        optimize_phases(setup15, objective="nope")


def test_ground_state_limits():
    N = 10
    polar = sz0_ground_state(N, -1.0, 50 * 2 * N)
    assert abs(polar[fock_basis(N).index((0, N, 0))]) > 0.999
    tf = sz0_ground_state(N, -1.0, -50 * 2 * N)
    assert abs(tf[fock_basis(N).index((N // 2, 0, N // 2))]) > 0.999
    assert split_bounds(polar).configurational < 1e-3


def test_ground_state_matches_full_space():
    N, g = 8, -1.0
    for q in (-10.0, 3.0, 40.0):
        h = spin_mixing_hamiltonian(N, g, q)
        w, v = np.linalg.eigh(h)
        psi = sz0_ground_state(N, g, q)
        assert np.vdot(psi, h @ psi).real == pytest.approx(w[0], abs=1e-9)


def test_fig8_rows_and_mu_bound():
    rows = fig_data("fig8", N=8, q_over_qc=[-2.0, 0.0, 2.0])
    assert [r[0] for r in rows] == [-2.0, 0.0, 2.0]
    for s, conf, bpn, bc, bf in rows:
        assert bpn <= bc + 1e-12 or bf >= bpn - 1e-12
    with pytest.raises(ValueError):
        fig_data("fig8", N=4, g=1.0)


def test_fig7_columns():
    rows = fig_data("fig7", N=6, r_grid=[0.0, 0.5])
    assert len(rows) == 2 and len(rows[0]) == 7
    assert rows[0][2] == pytest.approx(0, abs=1e-12)


def test_fourier_optimality_probe(capsys):
    rng = np.random.default_rng(0)
    best = min(np.max(np.abs(random_unitary(3, rng)) ** 2) for _ in range(2000))
    print(f"smallest max|u_jk|^2 over 2000 Haar SU(3) samples: {best:.4f} (Fourier: {1/3:.4f})")
    assert np.max(np.abs(fourier_matrix(3)) ** 2) == pytest.approx(1 / 3)
