"""Classical and quantum entropy functionals, in bits.

Support violations in relative entropies return ``math.inf`` deliberately;
it orders correctly against every finite value.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .qmath import PureStateVector, as_density, hermitize, partial_trace

INF = math.inf
NEG_CLIP = 1e-12
MARGINAL_FLOOR = 1e-15


class DistributionError(ValueError):
    pass


def clean_probabilities(p, *, normalize: bool = True) -> np.ndarray:
    """Clip entries in ``[-1e-12, 0)`` to zero; reject larger negatives."""
    p = np.asarray(p, dtype=float)
    if p.size and p.min() < -NEG_CLIP:
        raise DistributionError(f"negative probability {p.min():.3g}")
    p = np.where(p < 0, 0.0, p)
    if normalize:
        s = p.sum()
        if s <= 0:
            raise DistributionError("probabilities sum to zero")
        p = p / s
    return p


def _plogp_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


class JointDistribution:
    """Table ``P(x, y)`` over labeled outcome grids."""

    __slots__ = ("table", "x_labels", "y_labels")

    def __init__(self, table, x_labels=None, y_labels=None, *, atol: float = 1e-9):
        t = np.asarray(table, dtype=float)
        if t.ndim != 2:
            raise DistributionError(f"joint table must be 2-D, got shape {t.shape}")
        t = clean_probabilities(t, normalize=False)
        if abs(t.sum() - 1.0) > atol:
            raise DistributionError(f"joint table sums to {t.sum():.12g}")
        t.setflags(write=False)
        self.table = t
        self.x_labels = _labels(x_labels, t.shape[0])
        self.y_labels = _labels(y_labels, t.shape[1])

    @property
    def shape(self):
        return self.table.shape

    def marginal_x(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def marginal_y(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def transpose(self) -> "JointDistribution":
        return JointDistribution(self.table.T, self.y_labels, self.x_labels)

    def __repr__(self) -> str:
        return f"JointDistribution(shape={self.shape})"


def _labels(labels, n: int) -> tuple:
    if labels is None:
        return tuple((k,) for k in range(n))
    labels = tuple(tuple(l) if isinstance(l, (tuple, list)) else (int(l),) for l in labels)
    if len(labels) != n:
        raise DistributionError(f"expected {n} labels, got {len(labels)}")
    return labels


def shannon(p) -> float:
    """Shannon entropy with ``0 log 0 = 0``."""
    p = clean_probabilities(np.ravel(p))
    return _plogp_sum(p)


def von_neumann(rho) -> float:
    if isinstance(rho, PureStateVector):
        return 0.0
    rho = as_density(rho)
    w = np.linalg.eigvalsh(hermitize(rho.matrix))
    return _plogp_sum(np.clip(w, 0.0, None))


def _entropy_of_marginal(state, keep) -> float:
    if isinstance(state, PureStateVector) and len(state.dims) == 2:
        # spectrum of either marginal from the singular values
        s = np.linalg.svd(state.amplitude_matrix(), compute_uv=False)
        return shannon(s**2)
    return von_neumann(partial_trace(state, keep))


def conditional_quantum(rho, given: Sequence[int] = (1,)) -> float:
    """``H(rest | given) = H(rho) - H(rho_given)`` for a multipartite state."""
    given = tuple(given)
    if isinstance(rho, PureStateVector):
        if len(rho.dims) == 2 and len(given) == 1:
            return -_entropy_of_marginal(rho, given)
        rho = rho.density()
    rho = as_density(rho)
    if len(rho.dims) < 2:
        raise DistributionError("conditional entropy needs a multipartite state")
    return von_neumann(rho) - von_neumann(partial_trace(rho, given))


def mutual_information(rho) -> float:
    if isinstance(rho, PureStateVector) and len(rho.dims) == 2:
        return 2.0 * _entropy_of_marginal(rho, 0)
    rho = as_density(rho)
    return (
        von_neumann(partial_trace(rho, 0))
        + von_neumann(partial_trace(rho, 1))
        - von_neumann(rho)
    )


def relative_entropy(rho, sigma, support_tol: float = 1e-9) -> float:
    """Quantum relative entropy ``D(rho || sigma)``; ``inf`` outside the support."""
    r = hermitize(as_density(rho).matrix)
    s = hermitize(as_density(sigma).matrix)
    if r.shape != s.shape:
        raise ValueError("relative entropy needs operators of equal dimension")
    ws, vs = np.linalg.eigh(s)
    kernel = ws <= 1e-12 * max(ws[-1], 1e-300)
    if np.any(kernel):
        pk = vs[:, kernel]
        if np.real(np.trace(pk.conj().T @ r @ pk)) > support_tol:
            return INF
    wr, vr = np.linalg.eigh(r)
    wr = np.where(wr > 1e-12 * max(wr[-1], 1e-300), wr, 0.0)
    neg_h = float(np.sum(wr[wr > 0] * np.log2(wr[wr > 0])))
    log_s = np.zeros_like(ws)
    log_s[~kernel] = np.log2(ws[~kernel])
    # Tr[rho log sigma] in the sigma eigenbasis
    diag = np.real(np.einsum("ij,jk,ki->i", vs.conj().T, r, vs))
    cross = float(np.sum(diag * log_s))
    return neg_h - cross


def conditional_classical(p) -> float:
    """``H(X|Y) = H(XY) - H(Y)`` of a joint table (rows X, columns Y)."""
    t = p.table if isinstance(p, JointDistribution) else clean_probabilities(np.asarray(p, float))
    py = t.sum(axis=0)
    py = np.where(py < MARGINAL_FLOOR, 0.0, py)
    return _plogp_sum(t.ravel()) - _plogp_sum(py)


def relative_classical(p, q) -> float:
    p = clean_probabilities(np.ravel(p))
    q = clean_probabilities(np.ravel(q))
    if p.shape != q.shape:
        raise DistributionError("distributions differ in length")
    if np.any((p > NEG_CLIP) & (q < MARGINAL_FLOOR)):
        return INF
    m = p > 0
    return float(np.sum(p[m] * (np.log2(p[m]) - np.log2(q[m]))))


def block_conditional(blocks) -> float:
    """``H(X|Y)`` from sector blocks whose Y outcomes are disjoint across blocks.

    Each block is an unnormalized ``P(x, y)`` table; together they sum to 1.
    """
    flat = np.concatenate([np.ravel(b) for b in blocks])
    cols = np.concatenate([np.asarray(b).sum(axis=0) for b in blocks])
    flat = clean_probabilities(flat, normalize=False)
    cols = clean_probabilities(cols, normalize=False)
    return _plogp_sum(flat) - _plogp_sum(np.where(cols < MARGINAL_FLOOR, 0.0, cols))


__all__ = [
    "INF",
    "JointDistribution",
    "block_conditional",
    "clean_probabilities",
    "conditional_classical",
    "conditional_quantum",
    "mutual_information",
    "relative_classical",
    "relative_entropy",
    "shannon",
    "von_neumann",
]
