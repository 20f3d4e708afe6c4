"""Projective and generalized measurements on subsystem A (or B).

A :class:`Measurement` is either an orthonormal basis, stored as a unitary
whose columns are the basis vectors, or a POVM given by its positive
elements. Outcome labels are integer tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .entropy import JointDistribution, clean_probabilities, conditional_quantum, von_neumann
from .qmath import (
    DensityOperator,
    PureStateVector,
    StateError,
    as_density,
    hermitize,
    is_unitary,
    op_norm_psd,
    partial_trace,
    spectral_function,
    tensor_product,
)

ATOL_POVM = 1e-9


class MeasurementError(ValueError):
    pass


def _labels(labels, n):
    if labels is None:
        return tuple((k,) for k in range(n))
    out = tuple(tuple(int(v) for v in l) if np.ndim(l) else (int(l),) for l in labels)
    if len(out) != n:
        raise MeasurementError(f"expected {n} outcome labels, got {len(out)}")
    return out


class Measurement:
    """Basis measurement or POVM on a ``dim``-dimensional space.

    Build with :meth:`basis` or :meth:`povm`.
    """

    def __init__(self, elements, labels=None, unitary=None):
        self.elements = tuple(np.asarray(e, dtype=complex) for e in elements)
        self.unitary = None if unitary is None else np.asarray(unitary, dtype=complex)
        self.labels = _labels(labels, len(self.elements))

    @classmethod
    def basis(cls, unitary, labels=None) -> "Measurement":
        u = np.asarray(unitary, dtype=complex)
        if not is_unitary(u, atol=ATOL_POVM):
            raise MeasurementError("basis matrix is not unitary")
        elements = [np.outer(u[:, k], u[:, k].conj()) for k in range(u.shape[1])]
        return cls(elements, labels, unitary=u)

    @classmethod
    def computational(cls, d: int) -> "Measurement":
        return cls.basis(np.eye(d))

    @classmethod
    def povm(cls, elements, labels=None) -> "Measurement":
        elements = [np.asarray(e, dtype=complex) for e in elements]
        if not elements:
            raise MeasurementError("POVM needs at least one element")
        d = elements[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in elements:
            if e.shape != (d, d):
                raise MeasurementError("POVM elements differ in shape")
            if np.max(np.abs(e - e.conj().T)) > ATOL_POVM:
                raise MeasurementError("POVM element is not Hermitian")
            if np.linalg.eigvalsh(hermitize(e))[0] < -1e-10:
                raise MeasurementError("POVM element is not positive")
            total += e
        if not np.allclose(total, np.eye(d), atol=ATOL_POVM, rtol=0):
            raise MeasurementError("POVM elements do not sum to the identity")
        return cls(elements, labels)

    @property
    def kind(self) -> str:
        return "basis" if self.unitary is not None else "povm"

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    @cached_property
    def sqrt_elements(self) -> tuple:
        if self.unitary is not None:
            return self.elements
        return tuple(spectral_function(e, "sqrt") for e in self.elements)

    @cached_property
    def is_rank_one_projective(self) -> bool:
        if self.unitary is not None:
            return True
        for e in self.elements:
            w = np.linalg.eigvalsh(hermitize(e))
            if not (abs(w[-1] - 1) < 1e-9 and np.all(np.abs(w[:-1]) < 1e-9)):
                return False
        return True

    def as_povm(self) -> "Measurement":
        return Measurement(self.elements, self.labels)

    def __repr__(self) -> str:
        return f"Measurement(kind={self.kind!r}, dim={self.dim}, outcomes={self.n_outcomes})"


def overlap_matrix(x: Measurement, z: Measurement) -> np.ndarray:
    """``c[x, z] = |<X^x|Z^z>|^2`` for two bases."""
    if x.kind != "basis" or z.kind != "basis":
        raise MeasurementError("overlap_matrix needs two bases; use povm_overlap_h for POVMs")
    if x.dim != z.dim:
        raise MeasurementError("bases act on different dimensions")
    return np.abs(x.unitary.conj().T @ z.unitary) ** 2


def povm_overlap_h(x: Measurement, z: Measurement) -> np.ndarray:
    """``h[x, z] = || sqrt(Z^z) X^x sqrt(Z^z) ||`` (operator norm)."""
    if x.dim != z.dim:
        raise MeasurementError("POVMs act on different dimensions")
    h = np.empty((x.n_outcomes, z.n_outcomes))
    for j, ex in enumerate(x.elements):
        for k, sz in enumerate(z.sqrt_elements):
            h[j, k] = op_norm_psd(sz @ ex @ sz)
    return h


def _check_split(rho_dims, ma: Measurement, mb: Measurement | None):
    if len(rho_dims) != 2:
        raise MeasurementError(f"expected a bipartite state, got dims {rho_dims}")
    if ma.dim != rho_dims[0] or (mb is not None and mb.dim != rho_dims[1]):
        raise MeasurementError(
            f"measurement dims ({ma.dim}, {mb.dim if mb else '-'}) do not match state dims {rho_dims}"
        )


def joint_distribution(state, ma: Measurement, mb: Measurement) -> JointDistribution:
    """``P(x, y) = Tr[(X^x (x) Y^y) rho]`` for measurements on A and B."""
    if isinstance(state, PureStateVector):
        _check_split(state.dims, ma, mb)
        if ma.kind == "basis" and mb.kind == "basis":
            amp = ma.unitary.conj().T @ state.amplitude_matrix() @ mb.unitary.conj()
            table = np.abs(amp) ** 2
            return JointDistribution(table / table.sum(), ma.labels, mb.labels)
    rho = as_density(state)
    _check_split(rho.dims, ma, mb)
    da, db = rho.dims
    r4 = rho.matrix.reshape(da, db, da, db)
    ea = np.stack(ma.elements)
    eb = np.stack(mb.elements)
    table = np.real(np.einsum("xji,ylk,ikjl->xy", ea, eb, r4, optimize=True))
    table = clean_probabilities(table)
    return JointDistribution(table, ma.labels, mb.labels)


def probabilities(state, m: Measurement, subsystem: int = 0) -> np.ndarray:
    """Outcome distribution of ``m`` on one subsystem."""
    rho = as_density(state)
    red = partial_trace(rho, subsystem) if len(rho.dims) > 1 else rho
    p = np.array([np.real(np.trace(e @ red.matrix)) for e in m.elements])
    return clean_probabilities(p)


def _lift_a(op: np.ndarray, dims) -> np.ndarray:
    rest = int(np.prod(dims[1:]))
    return tensor_product(op, np.eye(rest))


def post_measure(state, z: Measurement) -> DensityOperator:
    """State after measuring ``z`` on subsystem A.

    For a basis the result is the classical-quantum state
    ``sum_z |z><z| (x) Tr_A(|z><z| rho)`` on the original space. For a POVM
    it is ``sum_z |z><z|_reg (x) (sqrt(Z^z) (x) 1) rho (sqrt(Z^z) (x) 1)``
    with the outcome register prepended.
    """
    rho = as_density(state)
    if rho.dims[0] != z.dim:
        raise MeasurementError("measurement does not match subsystem A")
    if z.kind == "basis":
        out = np.zeros_like(rho.matrix)
        for e in z.elements:
            p = _lift_a(e, rho.dims)
            out += p @ rho.matrix @ p
        return DensityOperator(out, rho.dims, check=False)
    k = z.n_outcomes
    d = rho.dim
    out = np.zeros((k * d, k * d), dtype=complex)
    for j, s in enumerate(z.sqrt_elements):
        p = _lift_a(s, rho.dims)
        out[j * d:(j + 1) * d, j * d:(j + 1) * d] = p @ rho.matrix @ p
    return DensityOperator(out, (k,) + rho.dims, check=False)


def classical_quantum(state, z: Measurement) -> DensityOperator:
    """``sum_z |z><z| (x) Tr_A[(Z^z (x) 1) rho]`` on the outcome register and the rest."""
    rho = as_density(state)
    dims = rho.dims
    if len(dims) < 2 or dims[0] != z.dim:
        raise MeasurementError("measurement does not match subsystem A")
    da = dims[0]
    rest = rho.dim // da
    r4 = rho.matrix.reshape(da, rest, da, rest)
    blocks = np.einsum("zji,ikjl->zkl", np.stack(z.elements), r4, optimize=True)
    k = z.n_outcomes
    out = np.zeros((k * rest, k * rest), dtype=complex)
    for j in range(k):
        out[j * rest:(j + 1) * rest, j * rest:(j + 1) * rest] = blocks[j]
    return DensityOperator(out, (k, rest), check=False)


def cq_conditional(state, z: Measurement) -> float:
    """``H(Z_A | B)`` of the classical-quantum state after measuring A."""
    rho = as_density(state)
    cq = classical_quantum(rho, z)
    rest = partial_trace(rho, tuple(range(1, len(rho.dims))))
    return von_neumann(cq) - von_neumann(rest)


def isometry_extend(state, z: Measurement) -> DensityOperator:
    """``V rho V^dag`` with ``V = sum_z |z>|z> (x) sqrt(Z^z) (x) 1``; dims ``(K, K, d_A, d_B...)``."""
    rho = as_density(state)
    if rho.dims[0] != z.dim:
        raise MeasurementError("measurement does not match subsystem A")
    k = z.n_outcomes
    d = rho.dim
    v = np.zeros((k * k * d, d), dtype=complex)
    for j, s in enumerate(z.sqrt_elements):
        row = (j * k + j) * d
        v[row:row + d, :] = _lift_a(s, rho.dims)
    return DensityOperator(v @ rho.matrix @ v.conj().T, (k, k) + rho.dims, check=False)


def residual_conditional(state, z: Measurement) -> float:
    """Average ``H(A|B)`` left in the branches ``sqrt(Z^z) rho sqrt(Z^z) / p(z)``."""
    rho = as_density(state)
    if z.is_rank_one_projective:
        return 0.0
    total = 0.0
    for s in z.sqrt_elements:
        p = _lift_a(s, rho.dims)
        branch = p @ rho.matrix @ p
        pz = float(np.real(np.trace(branch)))
        if pz <= 1e-15:
            continue
        total += pz * conditional_quantum(DensityOperator(branch / pz, rho.dims, check=False))
    return total


def residual_from_isometry(state, z: Measurement) -> float:
    """``H(A|ZB)`` evaluated on the extended state, tracing out the copy register."""
    ext = isometry_extend(state, z)
    zab = partial_trace(ext, (0, 2, 3))
    return von_neumann(zab) - von_neumann(partial_trace(zab, (0, 2)))


@dataclass(frozen=True)
class QuantumClassicalCheck:
    is_quantum_classical: bool
    discord_gap: float
    distance: float
    degenerate: bool


def is_quantum_classical(state, tol: float = 1e-9) -> QuantumClassicalCheck:
    """Test ``rho_AB == rho_AZ`` with ``Z`` the eigenbasis of ``rho_B``.

    Also reports ``H(A|Z) - H(A|B)`` for that basis. When ``rho_B`` has a
    degenerate spectrum only the eigenbasis returned by the solver is tested
    and ``degenerate`` is set.
    """
    rho = as_density(state)
    if len(rho.dims) != 2:
        raise StateError("quantum-classical check needs a bipartite state")
    da, db = rho.dims
    w, v = np.linalg.eigh(hermitize(partial_trace(rho, 1).matrix))
    degenerate = bool(np.any(np.diff(w) < 1e-9))
    out = np.zeros_like(rho.matrix)
    for k in range(db):
        p = tensor_product(np.eye(da), np.outer(v[:, k], v[:, k].conj()))
        out += p @ rho.matrix @ p
    rho_az = DensityOperator(out, rho.dims, check=False)
    dist = float(np.max(np.abs(out - rho.matrix)))
    gap = conditional_quantum(rho_az) - conditional_quantum(rho)
    return QuantumClassicalCheck(dist <= tol, gap, dist, degenerate)
