"""State containers and the dense linear algebra shared by every other module.

Tensor layouts put subsystem A on the slow (major) index: for dims
``(d_A, d_B)`` the basis vector ``|i, j>`` sits at flat index ``i * d_B + j``.
All logarithms are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Union

import numpy as np

ATOL_STATE = 1e-10
ZERO_CUTOFF = 1e-12


class StateError(ValueError):
    """Raised when an array does not describe a valid quantum state."""


def _normalize_dims(dims, size: int) -> tuple[int, ...]:
    if dims is None:
        return (size,)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise StateError(f"subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != size:
        raise StateError(f"dims {dims} do not multiply to {size}")
    return dims


def hermitize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    return 0.5 * (m + m.conj().T)


class DensityOperator:
    """Hermitian, positive, unit-trace matrix with a subsystem split.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix.
    dims : sequence of int, optional
        Subsystem dimensions, A first. Defaults to a single factor.
    check : bool
        Validate Hermiticity, positivity and trace to ``1e-10``.
    """

    __slots__ = ("matrix", "dims")

    def __init__(self, matrix, dims=None, *, check: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StateError(f"density matrix must be square, got shape {m.shape}")
        self.dims = _normalize_dims(dims, m.shape[0])
        if check:
            if np.max(np.abs(m - m.conj().T), initial=0.0) > ATOL_STATE:
                raise StateError("density matrix is not Hermitian")
            if abs(np.trace(m) - 1.0) > ATOL_STATE:
                raise StateError(f"density matrix has trace {np.trace(m).real:.3g}")
            if np.linalg.eigvalsh(hermitize(m))[0] < -ATOL_STATE:
                raise StateError("density matrix is not positive")
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(hermitize(self.matrix))

    def __repr__(self) -> str:
        return f"DensityOperator(dims={self.dims})"


class PureStateVector:
    """Normalized amplitude vector with a subsystem split."""

    __slots__ = ("amplitudes", "dims")

    def __init__(self, amplitudes, dims=None, *, check: bool = True):
        v = np.array(amplitudes, dtype=complex).reshape(-1)
        self.dims = _normalize_dims(dims, v.size)
        if check and abs(np.vdot(v, v).real - 1.0) > ATOL_STATE:
            raise StateError(f"state vector has squared norm {np.vdot(v, v).real:.6g}")
        v.setflags(write=False)
        self.amplitudes = v

    @classmethod
    def normalized(cls, amplitudes, dims=None) -> "PureStateVector":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v), dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityOperator:
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.dims, check=False)

    def amplitude_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``(d_A, d_rest)``."""
        return self.amplitudes.reshape(self.dims[0], -1)

    def __repr__(self) -> str:
        return f"PureStateVector(dims={self.dims})"


State = Union[DensityOperator, PureStateVector]


def as_density(state, dims=None) -> DensityOperator:
    """Coerce a state (or raw matrix/vector) to a :class:`DensityOperator`."""
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, PureStateVector):
        return state.density()
    arr = np.asarray(state)
    if arr.ndim == 1:
        return PureStateVector(arr, dims).density()
    return DensityOperator(arr, dims)


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        m = (self.left_vectors * self.coefficients) @ self.right_vectors.T
        return m.reshape(-1)


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product, first operand on the major index."""
    if not ops:
        raise ValueError("tensor_product needs at least one operand")
    return reduce(np.kron, (np.asarray(o) for o in ops))


def _keep_tuple(keep, n: int) -> tuple[int, ...]:
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    keep = tuple(sorted(set(int(k) for k in keep)))
    if not keep or any(k < 0 or k >= n for k in keep):
        raise IndexError(f"invalid subsystem index {keep} for {n} subsystems")
    return keep


def partial_trace(state, keep) -> DensityOperator:
    """Reduce ``state`` to the subsystems listed in ``keep``."""
    if isinstance(state, PureStateVector):
        dims = state.dims
        if len(dims) < 2:
            raise IndexError("partial trace needs at least two subsystems")
        keep = _keep_tuple(keep, len(dims))
        traced = [k for k in range(len(dims)) if k not in keep]
        t = state.amplitudes.reshape(dims)
        t = np.transpose(t, keep + tuple(traced))
        dk = int(np.prod([dims[k] for k in keep]))
        m = t.reshape(dk, -1)
        return DensityOperator(m @ m.conj().T, [dims[k] for k in keep], check=False)

    rho = as_density(state)
    dims = rho.dims
    if len(dims) < 2:
        raise IndexError("partial trace needs at least two subsystems")
    keep = _keep_tuple(keep, len(dims))
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # contract traced ket/bra index pairs from the highest index down
    for k in sorted(traced, reverse=True):
        nk = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + nk)
    dk = int(np.prod([dims[k] for k in keep]))
    return DensityOperator(t.reshape(dk, dk), [dims[k] for k in keep], check=False)


_NAMED: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "log2": np.log2,
    "log": np.log,
    "sqrt": np.sqrt,
    "inv": lambda x: 1.0 / x,
    "inv_sqrt": lambda x: 1.0 / np.sqrt(x),
}
_NEEDS_POSITIVE = {"log2", "log", "sqrt", "inv_sqrt"}


def spectral_function(h, f, zero_cutoff: float = ZERO_CUTOFF) -> np.ndarray:
    """Apply ``f`` to the eigenvalues of the Hermitian part of ``h``.

    ``f`` is a vectorized callable or one of ``"log2"``, ``"log"``,
    ``"sqrt"``, ``"inv"``, ``"inv_sqrt"``. Eigenvalues with
    ``|lambda| < zero_cutoff * max|lambda|`` are treated as exact zeros; the
    named functions then act as pseudo-functions on the support (output 0
    on the kernel), callables receive an exact 0.
    """
    if isinstance(h, DensityOperator):
        h = h.matrix
    w, v = np.linalg.eigh(hermitize(h))
    scale = np.max(np.abs(w), initial=0.0)
    zero = np.abs(w) < zero_cutoff * scale if scale > 0 else np.ones_like(w, dtype=bool)
    w = np.where(zero, 0.0, w)
    if isinstance(f, str):
        if f not in _NAMED:
            raise ValueError(f"unknown spectral function {f!r}")
        if f in _NEEDS_POSITIVE and np.any(w < 0):
            raise ValueError(f"{f} undefined on negative eigenvalue {w.min():.3g}")
        out = np.zeros_like(w)
        out[~zero] = _NAMED[f](w[~zero])
    else:
        out = np.asarray(f(w))
    return (v * out) @ v.conj().T


def schmidt(psi: PureStateVector) -> SchmidtDecomposition:
    if len(psi.dims) != 2:
        raise StateError("Schmidt decomposition needs exactly two subsystems")
    u, s, vh = np.linalg.svd(psi.amplitude_matrix())
    k = len(s)
    return SchmidtDecomposition(s, u[:, :k], vh[:k, :].T)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(vec))
    return vec * (abs(vec[k]) / vec[k]) if vec[k] != 0 else vec


def purify(rho, zero_cutoff: float = ZERO_CUTOFF) -> PureStateVector:
    """Canonical purification on ``H (x) C^r`` with ``r`` the numerical rank.

    Eigenvalues are taken in descending order; each eigenvector is phase
    fixed so its largest component is real positive.
    """
    rho = as_density(rho)
    w, v = np.linalg.eigh(hermitize(rho.matrix))
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    keep = w > zero_cutoff * max(w[0], 0.0)
    w, v = w[keep], v[:, keep]
    w = w / w.sum()
    r = len(w)
    psi = np.zeros((rho.dim, r), dtype=complex)
    for k in range(r):
        psi[:, k] = np.sqrt(w[k]) * _fix_phase(v[:, k])
    return PureStateVector(psi.reshape(-1), rho.dims + (r,), check=False)


def is_unitary(u, atol: float = 1e-9) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0
    )


def fourier_matrix(d: int) -> np.ndarray:
    """Unitary DFT matrix ``F_jk = exp(2 pi i j k / d) / sqrt(d)``."""
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def op_norm_psd(m) -> float:
    """Operator norm of a positive semidefinite matrix (largest eigenvalue)."""
    return float(max(np.linalg.eigvalsh(hermitize(m))[-1], 0.0))


def outer(v) -> np.ndarray:
    v = np.asarray(v)
    return np.outer(v, v.conj())


def basis_vector(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e
