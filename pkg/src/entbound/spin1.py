"""Spin-1 condensate: three-mode Fock space, spin mixing, spatial splitting.

Modes are ordered ``(1, 0, -1)``. A rotation ``R`` of the single-particle
space acts on creation operators as ``R a_k^dag R^dag = sum_j u_jk a_j^dag``,
so its one-particle representation is ``u`` itself. Measuring "in the
basis of ``u``" means applying ``R`` and then counting atoms per mode.

After the beamsplitter the bipartite state is kept as one amplitude block per
number ``n`` of atoms in A, of shape ``D(n) x D(N - n)``.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm, logm
from scipy.optimize import minimize
from scipy.special import gammaln

from .bounds import marginal_sum, state_dependent_sum
from .entropy import block_conditional, shannon
from .qmath import PureStateVector, _fix_phase, fourier_matrix, hermitize

MODES = (1, 0, -1)
N_RESTARTS = 16
R_GRID = np.linspace(0.0, 2.5, 40)

FIG_COLUMNS = {
    "fig6": ("r", "p_number_entropy", "configurational_negHAB", "bound_mu", "bound_pn", "bound_c", "bound_fsd"),
    "fig7": ("r", "p_number_entropy", "configurational_negHAB", "bound_mu", "bound_pn", "bound_c", "bound_fsd"),
    "fig8": ("q_over_qc", "neg_HAB_configurational", "bound_pn", "bound_c", "bound_fsd"),
}


def sector_dim(n: int) -> int:
    return (n + 1) * (n + 2) // 2


class FockBasis:
    """Occupations ``(N1, N0, N-1)`` summing to ``N``, descending in ``(N1, N0)``."""

    def __init__(self, N: int):
        if N < 0:
            raise ValueError("particle number must be nonnegative")
        self.N = int(N)
        self.states = np.array(
            [(n1, n0, N - n1 - n0) for n1 in range(N, -1, -1) for n0 in range(N - n1, -1, -1)],
            dtype=int,
        ).reshape(-1, 3)
        self._index = {tuple(s): i for i, s in enumerate(self.states.tolist())}

    def __len__(self) -> int:
        return len(self.states)

    def index(self, occ) -> int:
        return self._index[tuple(int(v) for v in occ)]

    def index_array(self, states) -> np.ndarray:
        """Vectorized :meth:`index` for an ``(..., 3)`` array of valid occupations."""
        states = np.asarray(states)
        a = self.N - states[..., 0]
        return a * (a + 1) // 2 + (a - states[..., 1])

    def labels(self) -> list[tuple[int, int, int]]:
        return [tuple(s) for s in self.states.tolist()]


@lru_cache(maxsize=None)
def fock_basis(N: int) -> FockBasis:
    return FockBasis(N)


@lru_cache(maxsize=None)
def _creation(n: int, j: int):
    """Rows, cols and values of ``a_j^dag`` from ``FockBasis(n-1)`` to ``FockBasis(n)``."""
    lo, hi = fock_basis(n - 1), fock_basis(n)
    cols = np.arange(len(lo))
    target = lo.states.copy()
    target[:, j] += 1
    rows = hi.index_array(target)
    return rows, cols, np.sqrt(target[:, j].astype(float))


def ladder_quadratic(N: int, C) -> np.ndarray:
    """``sum_jk C_jk a_j^dag a_k`` on ``FockBasis(N)``."""
    C = np.asarray(C, dtype=complex)
    basis = fock_basis(N)
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, m in enumerate(basis.states):
        for k in range(3):
            if m[k] == 0:
                continue
            for j in range(3):
                if C[j, k] == 0:
                    continue
                m2 = m.copy()
                m2[k] -= 1
                m2[j] += 1
                out[basis.index(m2), col] += C[j, k] * math.sqrt(m[k] * m2[j])
    return out


def _represent_all(u: np.ndarray, nmax: int, reps=None) -> list[np.ndarray]:
    reps = [np.ones((1, 1), dtype=complex)] if reps is None else list(reps)
    for n in range(len(reps), nmax + 1):
        hi = fock_basis(n)
        lo = fock_basis(n - 1)
        prev = reps[-1]
        # each new column comes from its parent with one atom removed from the first occupied mode
        k = np.argmax(hi.states > 0, axis=1)
        parent = hi.states.copy()
        parent[np.arange(len(hi)), k] -= 1
        pidx = lo.index_array(parent)
        mk = hi.states[np.arange(len(hi)), k].astype(float)
        rep = np.zeros((len(hi), len(hi)), dtype=complex)
        for j in range(3):
            rows, cols, vals = _creation(n, j)
            bj = np.zeros((len(hi), len(lo)), dtype=complex)
            bj[rows, :] = vals[:, None] * prev[cols, :]
            rep += bj[:, pidx] * u[j, k][None, :]
        reps.append(rep / np.sqrt(mk)[None, :])
    return reps


def represent(u, n: int) -> np.ndarray:
    """Representation ``R^(n)`` of the single-particle unitary ``u`` on ``n`` atoms."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (3, 3) or not np.allclose(u.conj().T @ u, np.eye(3), atol=1e-9):
        raise ValueError("single-particle rotation must be a 3x3 unitary")
    return _represent_all(u, n)[n]


def represent_via_log(u, n: int) -> tuple[np.ndarray, bool]:
    """``exp(sum_jk log(u)_jk a_j^dag a_k)`` with the principal logarithm.

    Returns the matrix and a flag set when ``u`` has an eigenvalue near -1,
    where the principal branch is ambiguous.
    """
    u = np.asarray(u, dtype=complex)
    flagged = bool(np.any(np.abs(np.linalg.eigvals(u) + 1) < 1e-8))
    return expm(ladder_quadratic(n, logm(u))), flagged


class SpinRotation:
    """Single-particle unitary with lazily cached Fock representations."""

    def __init__(self, u):
        u = np.asarray(u, dtype=complex)
        if u.shape != (3, 3) or not np.allclose(u.conj().T @ u, np.eye(3), atol=1e-9):
            raise ValueError("single-particle rotation must be a 3x3 unitary")
        self.u = u
        self._reps = [np.ones((1, 1), dtype=complex)]
        self._lock = threading.Lock()

    def sector(self, n: int) -> np.ndarray:
        if n >= len(self._reps):
            with self._lock:
                if n >= len(self._reps):
                    self._reps = _represent_all(self.u, n, self._reps)
        return self._reps[n]

    def full(self, N: int) -> np.ndarray:
        """Block-diagonal ``sum_n R^(n)`` on the local space with up to ``N`` atoms."""
        from scipy.linalg import block_diag

        return block_diag(*[self.sector(n) for n in range(N + 1)])

    def __matmul__(self, other: "SpinRotation") -> "SpinRotation":
        return SpinRotation(self.u @ other.u)


def fourier3() -> np.ndarray:
    """``i exp(2 pi i j k / 3) / sqrt(3)``, an element of SU(3)."""
    return 1j * fourier_matrix(3)


def phase_rotation(phases) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(phases, dtype=float)))


def number_operator(N: int, mode: int) -> np.ndarray:
    c = np.zeros((3, 3))
    c[MODES.index(mode), MODES.index(mode)] = 1
    return ladder_quadratic(N, c)


def spin_mixing_hamiltonian(N: int, g: float, q: float) -> np.ndarray:
    """Spin-changing collisions plus quadratic Zeeman shift on ``FockBasis(N)``."""
    basis = fock_basis(N)
    d = len(basis)
    h = np.zeros((d, d))
    for col, (n1, n0, nm) in enumerate(basis.states.tolist()):
        h[col, col] = g * (n0 - 0.5) * (n1 + nm) + q * (n1 + nm)
        if n0 >= 2:
            # a1^dag a-1^dag a0 a0
            amp = math.sqrt(n0 * (n0 - 1) * (n1 + 1) * (nm + 1))
            row = basis.index((n1 + 1, n0 - 2, nm + 1))
            h[row, col] += g * amp
            h[col, row] += g * amp
    return h


def polar_state(N: int) -> np.ndarray:
    v = np.zeros(len(fock_basis(N)), dtype=complex)
    v[fock_basis(N).index((0, N, 0))] = 1
    return v


def evolve(psi, h, t: float) -> np.ndarray:
    """``exp(-i H t) psi`` through the spectral decomposition of ``H``."""
    w, v = np.linalg.eigh(hermitize(h))
    return v @ (np.exp(-1j * w * t) * (v.conj().T @ np.asarray(psi, dtype=complex)))


class _Propagator:
    def __init__(self, h):
        self.w, self.v = np.linalg.eigh(hermitize(h))

    def __call__(self, psi, t):
        return self.v @ (np.exp(-1j * self.w * t) * (self.v.conj().T @ psi))


def squeezing_hamiltonian(N: int, g: float = 1.0) -> np.ndarray:
    return spin_mixing_hamiltonian(N, g, -g * (N - 0.5))


def squeezed_state(N: int, r: float, g: float = 1.0) -> np.ndarray:
    """Exact evolution of the polar state to squeezing ``r = N g t``."""
    return evolve(polar_state(N), squeezing_hamiltonian(N, g), r / (N * g))


def squeezed_state_analytic(N: int, r: float) -> np.ndarray:
    """Undepleted-pump amplitudes ``(-i tanh r)^n / cosh r`` on ``|n, N-2n, n>``, renormalized."""
    basis = fock_basis(N)
    v = np.zeros(len(basis), dtype=complex)
    for n in range(N // 2 + 1):
        v[basis.index((n, N - 2 * n, n))] = (-1j * math.tanh(r)) ** n / math.cosh(r)
    return v / np.linalg.norm(v)


@dataclass
class SectorBlockedState:
    """Split pure state; ``blocks[n]`` has shape ``D(n) x D(N - n)``."""

    N: int
    blocks: list = field(repr=False)

    def __post_init__(self):
        total = sum(float(np.vdot(b, b).real) for b in self.blocks)
        if abs(total - 1) > 1e-9:
            raise ValueError(f"split state has squared norm {total:.12g}")

    def weights(self) -> np.ndarray:
        return np.array([float(np.vdot(b, b).real) for b in self.blocks])

    def number_entropy(self) -> float:
        return shannon(self.weights())

    def configurational(self) -> float:
        """``sum_n p(n) H(rho_B^(n))``, equal to ``-H(A|B)`` of the sector-dephased state."""
        total = 0.0
        for b in self.blocks:
            s2 = np.linalg.svd(b, compute_uv=False) ** 2
            p = s2.sum()
            if p > 1e-15:
                total += p * shannon(s2 / p)
        return total

    def entanglement(self) -> float:
        """``-H(A|B)`` of the pure split state (entropy of either side)."""
        return self.number_entropy() + self.configurational()

    def rotated(self, ra: SpinRotation, rb: SpinRotation) -> list[np.ndarray]:
        N = self.N
        return [ra.sector(n) @ b @ rb.sector(N - n).T for n, b in enumerate(self.blocks)]

    def local_labels(self) -> list[int]:
        return [n for n in range(self.N + 1) for _ in range(sector_dim(n))]

    def to_dense(self) -> PureStateVector:
        """Amplitudes on ``(sum_n H^(n)) (x) (sum_n H^(n))``; only for small ``N``."""
        N = self.N
        offs = np.concatenate([[0], np.cumsum([sector_dim(n) for n in range(N + 1)])])
        d = int(offs[-1])
        m = np.zeros((d, d), dtype=complex)
        for n, b in enumerate(self.blocks):
            m[offs[n]:offs[n + 1], offs[N - n]:offs[N - n + 1]] = b
        return PureStateVector(m.reshape(-1), (d, d), check=False)


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def beamsplit(psi) -> SectorBlockedState:
    """Send every mode through a balanced beamsplitter into A and B."""
    psi = np.asarray(psi, dtype=complex)
    N = int(round((math.isqrt(8 * len(psi) + 1) - 3) / 2))
    src = fock_basis(N)
    if len(src) != len(psi):
        raise ValueError("state length is not a three-mode Fock dimension")
    blocks = []
    for n in range(N + 1):
        a = fock_basis(n).states
        b = fock_basis(N - n).states
        tot = a[:, None, :] + b[None, :, :]
        logw = np.sum(_log_binom(tot, a[:, None, :]) - tot * math.log(2), axis=2)
        idx = src.index_array(tot)
        blocks.append(psi[idx] * np.exp(0.5 * logw))
    return SectorBlockedState(N, blocks)


@dataclass(frozen=True)
class SplitBounds:
    p_number_entropy: float
    configurational: float
    h_x: float
    h_z: float
    q_mu: float
    q_pn: float
    q_c: float
    q_fsd: float
    orientation_c: str
    orientation_fsd: str

    @property
    def measured(self) -> float:
        return self.h_x + self.h_z

    def bound(self, kind: str) -> float:
        return getattr(self, "q_" + kind) - self.measured


def _probs(blocks):
    return [np.abs(b) ** 2 for b in blocks]


_FOURIER = None
_FOURIER_LOCK = threading.Lock()


def fourier_rotation() -> SpinRotation:
    """Shared single-particle Fourier rotation; its cache grows on demand."""
    global _FOURIER
    with _FOURIER_LOCK:
        if _FOURIER is None:
            _FOURIER = SpinRotation(fourier3())
    return _FOURIER


class SplitMeasurementSetup:
    """Precomputed Fourier representations for a fixed split state."""

    def __init__(self, state: SectorBlockedState, fourier=None):
        self.state = state
        self.fourier = fourier_rotation() if fourier is None else SpinRotation(fourier)
        for n in range(state.N + 1):
            self.fourier.sector(n)
        # per-sector overlap of X = D and Z = F D is |F^(n)dag|^2 regardless of phases
        self.overlaps = [np.abs(self.fourier.sector(n).conj().T) ** 2 for n in range(state.N + 1)]

    def _phase_blocks(self, phases):
        N = self.state.N
        out = []
        for n, b in enumerate(self.state.blocks):
            da = np.exp(1j * fock_basis(n).states @ np.asarray(phases, float))
            db = np.exp(1j * fock_basis(N - n).states @ np.asarray(phases, float))
            out.append(da[:, None] * b * db[None, :])
        return out

    def distributions(self, phases):
        N = self.state.N
        pb = self._phase_blocks(phases)
        F = self.fourier.sector
        xx = _probs(pb)
        zz = _probs([F(n) @ b @ F(N - n).T for n, b in enumerate(pb)])
        zx = _probs([F(n) @ b for n, b in enumerate(pb)])
        xz = _probs([b @ F(N - n).T for n, b in enumerate(pb)])
        return xx, zz, zx, xz

    def entropy_sum(self, phases) -> float:
        xx, zz, _, _ = self.distributions(phases)
        return block_conditional(xx) + block_conditional(zz)

    def bounds(self, phases=(0.0, 0.0, 0.0)) -> SplitBounds:
        xx, zz, zx, xz = self.distributions(phases)
        c = self.overlaps
        hx, hz = block_conditional(xx), block_conditional(zz)
        p = np.array([b.sum() for b in xx])
        sector_max = np.array([m.max() for m in c])
        live = p > 0
        qpn = float(-np.sum(p[live] * np.log2(sector_max[live])))
        qc_xz = sum(marginal_sum(c[n], xx[n].sum(axis=1)) for n in range(len(c)))
        qc_zx = sum(marginal_sum(c[n].T, zz[n].sum(axis=1)) for n in range(len(c)))
        qf_xz = sum(state_dependent_sum(c[n], xx[n], zx[n]) for n in range(len(c)))
        qf_zx = sum(state_dependent_sum(c[n].T, zz[n], xz[n]) for n in range(len(c)))
        return SplitBounds(
            p_number_entropy=shannon(p),
            configurational=self.state.configurational(),
            h_x=hx,
            h_z=hz,
            q_mu=-math.log2(max(float(m.max()) for m in c)) + 0.0,
            q_pn=qpn,
            q_c=max(qc_xz, qc_zx),
            q_fsd=max(qf_xz, qf_zx),
            orientation_c="XZ" if qc_xz >= qc_zx else "ZX",
            orientation_fsd="XZ" if qf_xz >= qf_zx else "ZX",
        )


def split_bounds(psi, phases=(0.0, 0.0, 0.0)) -> SplitBounds:
    return SplitMeasurementSetup(beamsplit(psi)).bounds(phases)


def bipartite_distribution(state: SectorBlockedState, ra: SpinRotation, rb: SpinRotation):
    """Joint outcome table over ``(n_A, occupation_A) x (n_B, occupation_B)``."""
    from .entropy import JointDistribution

    N = state.N
    sizes = [sector_dim(n) for n in range(N + 1)]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    table = np.zeros((offs[-1], offs[-1]))
    for n, blk in enumerate(state.rotated(ra, rb)):
        table[offs[n]:offs[n + 1], offs[N - n]:offs[N - n + 1]] = np.abs(blk) ** 2
    labels = [tuple(s) for n in range(N + 1) for s in fock_basis(n).labels()]
    return JointDistribution(table, labels, labels)


def _spin_y() -> np.ndarray:
    s = 1 / math.sqrt(2)
    return np.array([[0, -1j * s, 0], [1j * s, 0, -1j * s], [0, 1j * s, 0]])


def spin_operator(N: int, phi: float) -> np.ndarray:
    """``S(phi) = (i/sqrt2)(e^{-i phi} a0^dag (a1 - a-1) + h.c.)`` on ``FockBasis(N)``."""
    c = np.zeros((3, 3), dtype=complex)
    c[1, 0] = 1j / math.sqrt(2) * np.exp(-1j * phi)
    c[1, 2] = -1j / math.sqrt(2) * np.exp(-1j * phi)
    c = c + c.conj().T
    return ladder_quadratic(N, c)


def _rotation_about_y(phase_n0: float) -> np.ndarray:
    n0 = np.diag([0.0, 1.0, 0.0])
    return expm(-1j * phase_n0 * n0) @ expm(-1j * np.pi / 2 * _spin_y())


def R_sq() -> SpinRotation:
    return SpinRotation(_rotation_about_y(np.pi / 4))


def R_antisq() -> SpinRotation:
    return SpinRotation(_rotation_about_y(3 * np.pi / 4))


def phases_from_free(free) -> np.ndarray:
    a, b = free
    return np.array([a, b, -a - b])


@dataclass(frozen=True)
class PhaseOptimum:
    phases: tuple
    value: float
    converged: bool
    bounds: SplitBounds


def optimize_phases(state, objective: str = "entropy-sum", restarts: int = N_RESTARTS,
                    seed: int = 0, maxiter: int = 400) -> PhaseOptimum:
    """Minimize over diagonal phase rotations with zero phase sum.

    ``objective`` is ``"entropy-sum"`` (``H(X_A|X_B) + H(Z_A|Z_B)``) or
    ``"fsd-bound"`` (minus the fully state-dependent bound).
    """
    if objective not in ("entropy-sum", "fsd-bound"):
        raise ValueError(f"unknown objective {objective!r}")
    if isinstance(state, SplitMeasurementSetup):
        setup = state
    else:
        setup = SplitMeasurementSetup(state if isinstance(state, SectorBlockedState) else beamsplit(state))

    def f(x):
        ph = phases_from_free(x)
        if objective == "entropy-sum":
            return setup.entropy_sum(ph)
        return -setup.bounds(ph).bound("fsd")

    rng = np.random.default_rng(seed)
    starts = [np.zeros(2)] + [rng.uniform(-np.pi, np.pi, 2) for _ in range(restarts)]
    best = None
    for x0 in starts:
        res = minimize(f, x0, method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": maxiter})
        if best is None or res.fun < best.fun:
            best = res
    if not best.success:
        warnings.warn("phase optimization hit the iteration cap; returning best point found")
    ph = phases_from_free(best.x)
    ph = (ph + np.pi) % (2 * np.pi) - np.pi
    ph = ph - ph.mean()
    return PhaseOptimum(tuple(float(v) for v in ph), float(best.fun), bool(best.success), setup.bounds(ph))


def sz0_ground_state(N: int, g: float, q: float) -> np.ndarray:
    """Lowest state of the spin-mixing Hamiltonian in the span of ``|k, N-2k, k>``."""
    basis = fock_basis(N)
    idx = [basis.index((k, N - 2 * k, k)) for k in range(N // 2 + 1)]
    h = spin_mixing_hamiltonian(N, g, q)[np.ix_(idx, idx)]
    w, v = np.linalg.eigh(h)
    out = np.zeros(len(basis), dtype=complex)
    out[idx] = _fix_phase(v[:, 0].astype(complex))
    return out


def ground_state_sweep(N: int, g: float, q_over_qc, mapper=map) -> list[tuple]:
    """fig8 rows ``(q/q_c, configurational, bound_pn, bound_c, bound_fsd)``."""
    if not g < 0:
        raise ValueError("ground-state sweep is defined for ferromagnetic g < 0")
    qc = 2 * N * abs(g)
    return list(mapper(_ground_row, [(N, g, float(s), qc) for s in q_over_qc]))


def _ground_row(task):
    N, g, s, qc = task
    b = split_bounds(sz0_ground_state(N, g, s * qc))
    return (s, b.configurational, b.bound("pn"), b.bound("c"), b.bound("fsd"))


def squeezing_rows(N: int, r_grid=R_GRID, phases=(0.0, 0.0, 0.0), g: float = 1.0, mapper=map) -> list[tuple]:
    """fig6/fig7 rows along the squeezing trajectory."""
    prop = _Propagator(squeezing_hamiltonian(N, g))
    psi0 = polar_state(N)
    states = [prop(psi0, r / (N * g)) for r in r_grid]
    return list(mapper(_squeeze_row, [(float(r), s, tuple(phases)) for r, s in zip(r_grid, states)]))


def _squeeze_row(task):
    r, psi, phases = task
    b = split_bounds(psi, phases)
    return (r, b.p_number_entropy, b.configurational, b.bound("mu"), b.bound("pn"), b.bound("c"), b.bound("fsd"))


# published minimizer of the entropy sum at N = 15, r = 0.5; minimizers are not unique
REFERENCE_PHASES = (0.095 * np.pi, -0.495 * np.pi, 0.400 * np.pi)

Q_GRID = np.round(np.linspace(-2.0, 2.0, 41), 12)


def fig_data(figure: str, *, N: int = 15, r_grid=R_GRID, q_over_qc=Q_GRID, g: float | None = None,
             phases=None, optimize_N: int = 15, optimize_r: float = 0.5, restarts: int = N_RESTARTS,
             seed: int = 0, mapper=map) -> list[tuple]:
    """Rows for ``fig6`` (optimized phases), ``fig7`` (bare basis) or ``fig8`` (ground states).

    For fig6 the phases are optimized at ``(optimize_N, optimize_r)`` unless
    given explicitly, then used for every point at particle number ``N``.
    """
    if figure == "fig6":
        if phases is None:
            target = squeezed_state(optimize_N, optimize_r, 1.0 if g is None else g)
            phases = optimize_phases(target, "entropy-sum", restarts, seed).phases
        return squeezing_rows(N, r_grid, phases, 1.0 if g is None else g, mapper)
    if figure == "fig7":
        return squeezing_rows(N, r_grid, (0.0, 0.0, 0.0), 1.0 if g is None else g, mapper)
    if figure == "fig8":
        return ground_state_sweep(N, -1.0 if g is None else g, q_over_qc, mapper)
    raise ValueError(f"unknown spin-1 figure {figure!r}")
