"""Complementarity factors and lower bounds on the coherent information -H(A|B).

Every relation has the shape

    H(X_A|X'_B) + H(Z_A|Z'_B) >= q + H(A|B) [- residual]

so the certified bound is ``-H(A|B) >= q - H(X_A|X'_B) - H(Z_A|Z'_B) [- residual]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .entropy import (
    MARGINAL_FLOOR,
    JointDistribution,
    clean_probabilities,
    conditional_classical,
    conditional_quantum,
    shannon,
)
from .measurement import (
    Measurement,
    joint_distribution,
    overlap_matrix,
    povm_overlap_h,
    residual_conditional,
)
from .qmath import DensityOperator, PureStateVector, as_density, hermitize, op_norm_psd

RESIDUAL_KINDS = frozenset({"ct", "fsdp"})
KINDS = ("mu", "pn", "c", "fsd", "fl", "ct", "fsdp")


@dataclass(frozen=True)
class BoundReport:
    """One relation evaluated on measured data.

    ``bound`` is the certified lower bound on ``-H(A|B)`` in bits;
    ``exact`` is the true ``-H(A|B)`` when the state was available and
    ``configurational`` the value ``-H(A|B)`` of the sector-projected state.
    """

    kind: str
    q: float
    h_x: float
    h_z: float
    bound: float
    residual: float | None = None
    exact: float | None = None
    configurational: float | None = None
    orientation: str = "XZ"

    def recomputed(self) -> float:
        return self.q - self.h_x - self.h_z - (self.residual or 0.0)

    @property
    def certifies(self) -> bool:
        return self.bound > 0


def _table(p) -> np.ndarray:
    return p.table if isinstance(p, JointDistribution) else np.asarray(p, dtype=float)


def q_mu(c) -> float:
    # + 0.0 turns -0.0 into 0.0 when the largest overlap is 1
    return -math.log2(float(np.max(c))) + 0.0


def q_fl(x: Measurement, z: Measurement) -> float:
    """``-log max Tr(X^x Z^z)``; negative for coarse POVMs."""
    c = max(float(np.real(np.trace(ex @ ez))) for ex in x.elements for ez in z.elements)
    return -math.log2(c)


def q_ct(x: Measurement, z: Measurement) -> float:
    """``-log max_x || sum_z X^x Z^z X^x ||``, taken literally.

    Because the ``Z^z`` sum to the identity the inner sum is ``(X^x)^2``.
    """
    c = 0.0
    for ex in x.elements:
        s = sum(ex @ ez @ ex for ez in z.elements)
        c = max(c, op_norm_psd(s))
    return -math.log2(c)


def marginal_sum(c, px) -> float:
    """``-sum_x P(x) log max_z c[x, z]`` for a possibly sub-normalized ``px``."""
    c = np.asarray(c, dtype=float)
    px = np.asarray(px, dtype=float)
    rowmax = c.max(axis=1)
    m = px > 0
    return float(-np.sum(px[m] * np.log2(rowmax[m])))


def q_c(c, px) -> float:
    """Marginal-dependent factor; ``px`` is a vector or a joint table (rows = X)."""
    if isinstance(px, JointDistribution):
        px = px.marginal_x()
    px = clean_probabilities(px)
    return marginal_sum(c, px)


def state_dependent_sum(w, pxy, pzy) -> float:
    """``-sum_{x,y} P(x,y) log sum_z w[x,z] P(z|y)`` on raw, possibly partial tables.

    ``P(z|y)`` is formed from the column sums of ``pzy``; columns whose
    marginal is below 1e-15 are dropped together with their ``P(x, y)``.
    """
    w = np.asarray(w, dtype=float)
    pxy = np.asarray(pxy, dtype=float)
    pzy = np.asarray(pzy, dtype=float)
    if w.shape != (pxy.shape[0], pzy.shape[0]) or pxy.shape[1] != pzy.shape[1]:
        raise ValueError(
            f"shape mismatch: weights {w.shape}, P_XY {pxy.shape}, P_ZY {pzy.shape}"
        )
    py = pzy.sum(axis=0)
    live = py >= MARGINAL_FLOOR
    if not np.any(live):
        return 0.0
    cond = pzy[:, live] / py[live]
    mix = w @ cond
    p = pxy[:, live]
    m = p > 0
    if np.any(mix[m] <= 0):
        return math.inf
    return float(-np.sum(p[m] * np.log2(mix[m])))


def q_fsd(c, pxy, pzy) -> float:
    """Fully state-dependent factor for bases (overlap matrix ``c``)."""
    return state_dependent_sum(c, _table(pxy), _table(pzy))


def q_fsdp(h, pxy, pzy) -> float:
    """Fully state-dependent factor for POVMs (``h`` from :func:`povm_overlap_h`)."""
    return state_dependent_sum(h, _table(pxy), _table(pzy))


def q_pn(sector_maxima, p_n) -> float:
    """``-sum_n P_N(n) log max_jk |R^(n)_jk|^2``.

    Both arguments are aligned sequences, or mappings keyed by ``n``.
    """
    if isinstance(sector_maxima, Mapping):
        keys = sorted(set(sector_maxima) | set(p_n))
        sector_maxima = [sector_maxima[k] for k in keys]
        p_n = [p_n.get(k, 0.0) for k in keys]
    m = np.asarray(sector_maxima, dtype=float)
    p = clean_probabilities(p_n)
    if m.shape != p.shape:
        raise ValueError("sector maxima and particle-number distribution misaligned")
    live = p > 0
    return float(-np.sum(p[live] * np.log2(m[live])))


def assemble_bound(
    kind: str,
    q: float,
    h_x: float,
    h_z: float,
    residual: float | None = None,
    *,
    state=None,
    conserved: "ConservedQuantity | None" = None,
    orientation: str = "XZ",
) -> BoundReport:
    if kind not in KINDS:
        raise ValueError(f"unknown relation kind {kind!r}")
    if (kind in RESIDUAL_KINDS) != (residual is not None):
        raise ValueError(f"relation {kind!r} {'needs' if kind in RESIDUAL_KINDS else 'takes no'} residual")
    bound = q - h_x - h_z - (residual or 0.0)
    exact = None if state is None else -conditional_quantum(state)
    config = None
    if state is not None and conserved is not None:
        config = -conditional_quantum(project_conserved(state, conserved))
    return BoundReport(kind, q, h_x, h_z, bound, residual, exact, config, orientation)


def witness_povm(state, z: Measurement) -> float:
    """``H(A|B) - H(A|ZB)``; nonnegative for separable states."""
    return conditional_quantum(as_density(state)) - residual_conditional(state, z)


def _best(reports: Sequence[BoundReport]) -> BoundReport:
    return max(reports, key=lambda r: r.bound)


def basis_bounds(state, xa: Measurement, za: Measurement, xb: Measurement, zb: Measurement,
                 *, conserved=None) -> dict[str, BoundReport]:
    """Evaluate the ``mu``, ``c`` and ``fsd`` relations for two basis settings.

    ``(xa, xb)`` is the first setting, ``(za, zb)`` the second. The
    state-dependent factors are computed in both orientations and the larger
    bound is kept.
    """
    pxx = joint_distribution(state, xa, xb)
    pzz = joint_distribution(state, za, zb)
    pzx = joint_distribution(state, za, xb)
    pxz = joint_distribution(state, xa, zb)
    c = overlap_matrix(xa, za)
    hx = conditional_classical(pxx)
    hz = conditional_classical(pzz)
    extra = dict(state=state, conserved=conserved)
    out = {"mu": assemble_bound("mu", q_mu(c), hx, hz, **extra)}
    out["c"] = _best([
        assemble_bound("c", q_c(c, pxx.marginal_x()), hx, hz, orientation="XZ", **extra),
        assemble_bound("c", q_c(c.T, pzz.marginal_x()), hx, hz, orientation="ZX", **extra),
    ])
    out["fsd"] = _best([
        assemble_bound("fsd", q_fsd(c, pxx, pzx), hx, hz, orientation="XZ", **extra),
        assemble_bound("fsd", q_fsd(c.T, pzz, pxz), hx, hz, orientation="ZX", **extra),
    ])
    return out


def povm_bounds(state, xa: Measurement, za: Measurement, xb: Measurement, zb: Measurement,
                *, conserved=None) -> dict[str, BoundReport]:
    """Evaluate the ``fl``, ``ct`` and ``fsdp`` relations for generalized measurements."""
    pxx = joint_distribution(state, xa, xb)
    pzz = joint_distribution(state, za, zb)
    pzx = joint_distribution(state, za, xb)
    pxz = joint_distribution(state, xa, zb)
    hx = conditional_classical(pxx)
    hz = conditional_classical(pzz)
    extra = dict(state=state, conserved=conserved)
    res_x = residual_conditional(state, xa)
    res_z = residual_conditional(state, za)
    out = {
        "fl": assemble_bound("fl", q_fl(xa, za), hx, hz, **extra),
        "ct": assemble_bound("ct", q_ct(xa, za), hx, hz, res_x, **extra),
    }
    out["fsdp"] = _best([
        assemble_bound("fsdp", q_fsdp(povm_overlap_h(xa, za), pxx, pzx), hx, hz, res_z,
                       orientation="XZ", **extra),
        assemble_bound("fsdp", q_fsdp(povm_overlap_h(za, xa), pzz, pxz), hx, hz, res_x,
                       orientation="ZX", **extra),
    ])
    return out


class ConservedQuantity:
    """Local projector pairs ``Pi_A^(n_A) (x) Pi_B^(n_B)`` labeled by ``(n_A, n_B)``."""

    def __init__(self, sectors: Sequence[tuple[tuple[int, int], np.ndarray, np.ndarray]],
                 atol: float = 1e-9):
        self.sectors = [(tuple(int(v) for v in lab), np.asarray(pa, dtype=complex),
                         np.asarray(pb, dtype=complex)) for lab, pa, pb in sectors]
        if not self.sectors:
            raise ValueError("conserved quantity needs at least one sector")
        self.atol = atol
        # checked on the local factors so large spaces never need the Kronecker products
        for i, (lab, pa, pb) in enumerate(self.sectors):
            for m in (pa, pb):
                if not np.allclose(m @ m, m, atol=atol, rtol=0) or not np.allclose(m, m.conj().T, atol=atol, rtol=0):
                    raise ValueError(f"sector {lab} is not an orthogonal projector")
            for _, qa, qb in self.sectors[:i]:
                if np.max(np.abs(pa @ qa)) > atol and np.max(np.abs(pb @ qb)) > atol:
                    raise ValueError("sector projectors are not mutually orthogonal")
        # orthogonal projectors with total rank d sum to the identity
        rank = sum(np.trace(pa).real * np.trace(pb).real for _, pa, pb in self.sectors)
        d = self.sectors[0][1].shape[0] * self.sectors[0][2].shape[0]
        if abs(rank - d) > atol * d:
            raise ValueError("sector projectors do not sum to the identity")
        self._projectors = None

    @property
    def projectors(self) -> list[np.ndarray]:
        if self._projectors is None:
            self._projectors = [np.kron(pa, pb) for _, pa, pb in self.sectors]
        return self._projectors

    def components(self, psi: PureStateVector) -> list[np.ndarray]:
        """``Pi_A psi Pi_B^T`` on the amplitude matrix, one block per sector."""
        m = psi.amplitude_matrix()
        return [pa @ m @ pb.T for _, pa, pb in self.sectors]

    @classmethod
    def from_local_labels(cls, labels_a: Sequence[int], labels_b: Sequence[int]) -> "ConservedQuantity":
        """Diagonal sectors: basis state ``i`` of A carries ``labels_a[i]``, likewise for B."""
        la = np.asarray(labels_a)
        lb = np.asarray(labels_b)
        sectors = []
        for na in sorted(set(la.tolist())):
            pa = np.diag((la == na).astype(float))
            for nb in sorted(set(lb.tolist())):
                pb = np.diag((lb == nb).astype(float))
                sectors.append(((na, nb), pa, pb))
        return cls(sectors)

    @property
    def labels(self) -> list[tuple[int, int]]:
        return [lab for lab, _, _ in self.sectors]


def project_conserved(state, n: ConservedQuantity) -> DensityOperator:
    """``sum_n Pi^(n) rho Pi^(n)``."""
    rho = as_density(state)
    out = np.zeros_like(rho.matrix)
    for p in n.projectors:
        out += p @ rho.matrix @ p
    return DensityOperator(hermitize(out), rho.dims, check=False)


@dataclass(frozen=True)
class NumberDecomposition:
    number_entropy: float
    configurational: float
    total: float
    weights: dict


def number_decomposition(psi: PureStateVector, n: ConservedQuantity) -> NumberDecomposition:
    """Split ``-H(A|B)`` of a pure state into number and configurational parts."""
    if not isinstance(psi, PureStateVector):
        raise TypeError("number_decomposition needs a pure state")
    weights = {lab: float(np.vdot(c, c).real) for lab, c in zip(n.labels, n.components(psi))}
    p = np.array(list(weights.values()))
    return NumberDecomposition(
        number_entropy=shannon(p),
        configurational=-conditional_quantum(project_conserved(psi, n)),
        total=-conditional_quantum(psi),
        weights=weights,
    )


__all__ = [
    "BoundReport",
    "ConservedQuantity",
    "NumberDecomposition",
    "assemble_bound",
    "basis_bounds",
    "marginal_sum",
    "number_decomposition",
    "povm_bounds",
    "project_conserved",
    "q_c",
    "q_ct",
    "q_fl",
    "q_fsd",
    "q_fsdp",
    "q_mu",
    "q_pn",
    "state_dependent_sum",
    "witness_povm",
]
