"""Two distinguishable particles on an open 1D chain.

Basis states ``|i1, i2>`` put particle 1 (subsystem A) on the major index.
The second measurement is the site basis after free tunneling for time
``t``; its basis vectors are the columns of ``R(t)^dag``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .bounds import assemble_bound, q_c, q_fsd, q_mu
from .entropy import conditional_classical, conditional_quantum
from .measurement import Measurement, joint_distribution, overlap_matrix
from .qmath import PureStateVector, _fix_phase

DEFAULT_U_OVER_J = -100.0
N_TIME_POINTS = 60

FIG_COLUMNS = {
    "fig1": ("L", "neg_HAB", "log2_L_reference"),
    "fig2": ("L", "t_over_L", "q_mu_normalized"),
    "fig3": ("bin_lo", "bin_hi", "count"),
    "fig4": ("L", "t_over_L", "q_mu", "q_c", "q_fsd", "H_XX", "H_ZZ",
             "bound_mu", "bound_c", "bound_fsd", "neg_HAB_exact"),
}
FIG_COLUMNS["fig5"] = FIG_COLUMNS["fig4"]


@dataclass(frozen=True)
class LatticeModel:
    L: int
    J: float = 1.0
    U: float = DEFAULT_U_OVER_J

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"need at least two lattice sites, got L={self.L}")
        if not self.J > 0:
            raise ValueError(f"hopping must be positive, got J={self.J}")


def hopping_matrix(L: int, J: float = 1.0) -> np.ndarray:
    """Single-particle ``-J sum (|i><i+1| + h.c.)`` with open boundaries."""
    h = np.zeros((L, L))
    i = np.arange(L - 1)
    h[i, i + 1] = h[i + 1, i] = -J
    return h


def build_hamiltonian(m: LatticeModel) -> np.ndarray:
    h1 = hopping_matrix(m.L, m.J)
    eye = np.eye(m.L)
    h = np.kron(h1, eye) + np.kron(eye, h1)
    h[np.diag_indices_from(h)] += m.U * np.eye(m.L).reshape(-1)
    return h


def ground_state(m: LatticeModel) -> tuple[PureStateVector, float]:
    w, v = np.linalg.eigh(build_hamiltonian(m))
    psi = _fix_phase(v[:, 0].astype(complex))
    return PureStateVector(psi / np.linalg.norm(psi), (m.L, m.L)), float(w[0])


def tunneling_unitary(L: int, t: float) -> np.ndarray:
    """``R(t) = exp(i t H)`` for one free particle at ``J = 1``."""
    return expm(1j * t * hopping_matrix(L))


def time_grid(L: int, n: int = N_TIME_POINTS) -> np.ndarray:
    """``t/L = k/n`` for ``k = 1..n``."""
    return np.arange(1, n + 1) / n


def evaluate_point(psi: PureStateVector, L: int, t_over_L: float, exact: float | None = None) -> tuple:
    """One fig4/fig5 row: both particles measured in the same basis."""
    x = Measurement.computational(L)
    z = Measurement.basis(tunneling_unitary(L, t_over_L * L).conj().T)
    pxx = joint_distribution(psi, x, x)
    pzz = joint_distribution(psi, z, z)
    pzx = joint_distribution(psi, z, x)
    pxz = joint_distribution(psi, x, z)
    c = overlap_matrix(x, z)
    hx = conditional_classical(pxx)
    hz = conditional_classical(pzz)
    qm = q_mu(c)
    qc = max(q_c(c, pxx.marginal_x()), q_c(c.T, pzz.marginal_x()))
    qf = max(q_fsd(c, pxx, pzx), q_fsd(c.T, pzz, pxz))
    if exact is None:
        exact = -conditional_quantum(psi)
    bounds = [assemble_bound(k, q, hx, hz).bound for k, q in (("mu", qm), ("c", qc), ("fsd", qf))]
    return (L, t_over_L, qm, qc, qf, hx, hz, *bounds, exact)


def fig_data(figure: str, *, L_values=None, U_over_J: float = DEFAULT_U_OVER_J,
             n_times: int = N_TIME_POINTS, t_over_L: float = 0.5, bins: int = 50,
             mapper=map) -> list[tuple]:
    """Rows for one of ``fig1`` .. ``fig5``.

    ``mapper`` is an order-preserving map used for the grid sweep, so callers
    may pass an executor's ``map``.
    """
    if figure not in FIG_COLUMNS:
        raise ValueError(f"unknown lattice figure {figure!r}")
    if figure == "fig3":
        L = int(L_values[0]) if L_values else 30
        c = np.abs(tunneling_unitary(L, t_over_L * L)) ** 2
        counts, edges = np.histogram(c.ravel(), bins=bins, range=(0.0, float(c.max())))
        return [(float(edges[k]), float(edges[k + 1]), int(counts[k])) for k in range(bins)]

    L_values = list(L_values) if L_values is not None else list(range(2, 31))
    if figure == "fig1":
        rows = []
        for L in L_values:
            psi, _ = ground_state(LatticeModel(L, 1.0, U_over_J))
            rows.append((L, -conditional_quantum(psi), float(np.log2(L))))
        return rows
    if figure == "fig2":
        rows = []
        for L in L_values:
            for s in time_grid(L, n_times):
                c = np.abs(tunneling_unitary(L, s * L)) ** 2
                rows.append((L, float(s), q_mu(c) / np.log2(L)))
        return rows

    tasks = []
    for L in L_values:
        psi, _ = ground_state(LatticeModel(L, 1.0, U_over_J))
        exact = -conditional_quantum(psi)
        tasks.extend((psi, L, float(s), exact) for s in time_grid(L, n_times))
    return list(mapper(_point, tasks))


def _point(task):
    return evaluate_point(*task)


def optimal_time_two_sites() -> float:
    """Tunneling time at which ``R(t)`` is a MUB for ``L = 2``."""
    return np.pi / 4
