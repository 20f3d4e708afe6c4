"""Randomized audits of the uncertainty relations and their side results.

Every trial ``i`` draws from ``numpy.random.default_rng(seed + i)`` so an
audit is reproducible from ``(relation, dims, trials, seed)`` and does not
depend on how trials are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import q_c, q_ct, q_fl, q_fsd, q_fsdp, q_mu, project_conserved, ConservedQuantity
from .entropy import (
    conditional_classical,
    conditional_quantum,
    relative_classical,
    shannon,
    von_neumann,
)
from .measurement import (
    Measurement,
    cq_conditional,
    joint_distribution,
    overlap_matrix,
    post_measure,
    povm_overlap_h,
    probabilities,
    residual_conditional,
)
from .qmath import (
    DensityOperator,
    PureStateVector,
    as_density,
    fourier_matrix,
    hermitize,
    op_norm_psd,
    partial_trace,
    purify,
    schmidt,
    spectral_function,
)

SLACK_TOL = -1e-9
# "ct-order" compares ||sum_z X Z X|| with max_z h(x, z) as printed and is expected to
# fail on generic POVMs; "ct-sandwich" uses sum_z Z X Z, which does hold
RELATIONS = ("mu", "berta", "fl", "ct", "fsd", "tri", "fsdp", "witness", "conserved")
AUDITS = RELATIONS + ("ct-order", "ct-sandwich", "ordering", "schmidt")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Gaussian matrix."""
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def random_pure(d: int, seed=None, dims=None) -> PureStateVector:
    rng = _rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureStateVector.normalized(v, dims)


def random_density(d: int, rank: int | None = None, seed=None, dims=None) -> DensityOperator:
    """Partial trace of a random pure state on ``C^d (x) C^rank``."""
    rng = _rng(seed)
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise ValueError(f"rank must lie in [1, {d}]")
    psi = random_pure(d * rank, rng, (d, rank))
    return DensityOperator(partial_trace(psi, 0).matrix, dims or (d,), check=False)


def random_separable(d_a: int, d_b: int, k: int = 3, seed=None) -> DensityOperator:
    """Convex mixture of ``k`` random product states."""
    rng = _rng(seed)
    if k < 1:
        raise ValueError("need at least one product term")
    p = rng.dirichlet(np.ones(k))
    m = np.zeros((d_a * d_b, d_a * d_b), dtype=complex)
    for w in p:
        ra = random_density(d_a, int(rng.integers(1, d_a + 1)), rng).matrix
        rb = random_density(d_b, int(rng.integers(1, d_b + 1)), rng).matrix
        m += w * np.kron(ra, rb)
    return DensityOperator(hermitize(m), (d_a, d_b), check=False)


def random_povm(d: int, k: int, seed=None, blocks=None) -> Measurement:
    """``k`` random positive operators normalized by the inverse square root of their sum.

    With ``blocks`` (a list of index lists) every element is block diagonal.
    """
    rng = _rng(seed)
    els = []
    for _ in range(k):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        if blocks is not None:
            mask = np.zeros((d, d), dtype=bool)
            for b in blocks:
                mask[np.ix_(b, b)] = True
            g = np.where(mask, g, 0)
        els.append(g @ g.conj().T)
    s = spectral_function(sum(els), "inv_sqrt")
    return Measurement.povm([hermitize(s @ e @ s) for e in els])


def random_basis(d: int, seed=None) -> Measurement:
    return Measurement.basis(random_unitary(d, seed))


def _block_unitary(blocks, d, rng) -> np.ndarray:
    u = np.zeros((d, d), dtype=complex)
    for b in blocks:
        u[np.ix_(b, b)] = random_unitary(len(b), rng)
    return u


def _random_state(d_a, d_b, rng) -> DensityOperator:
    d = d_a * d_b
    return random_density(d, int(rng.integers(1, d + 1)), rng, (d_a, d_b))


def _local_sectors(d: int) -> list[list[int]]:
    """Local conserved-number sectors used by the conserved audit: ``{0}, {1..d-1}``."""
    return [[0], list(range(1, d))]


def _n_outcomes(rng) -> int:
    return int(rng.integers(2, 5))


def _slack(relation: str, d_a: int, d_b: int, rng) -> float:
    if relation == "mu":
        rho = random_density(d_a, int(rng.integers(1, d_a + 1)), rng)
        x, z = random_basis(d_a, rng), random_basis(d_a, rng)
        hx = shannon(probabilities(rho, x))
        hz = shannon(probabilities(rho, z))
        return hx + hz - q_mu(overlap_matrix(x, z)) - von_neumann(rho)

    if relation == "ct-order" or relation == "ct-sandwich":
        x = random_povm(d_a, _n_outcomes(rng), rng)
        z = random_povm(d_a, _n_outcomes(rng), rng)
        rhs = povm_overlap_h(x, z).max(axis=1)
        worst = np.inf
        for j, ex in enumerate(x.elements):
            if relation == "ct-order":
                lhs = op_norm_psd(sum(ex @ ez @ ex for ez in z.elements))
            else:
                lhs = op_norm_psd(sum(ez @ ex @ ez for ez in z.elements))
            worst = min(worst, rhs[j] - lhs)
        return float(worst)

    if relation == "schmidt":
        return -abs(schmidt_identity_gap(random_pure(d_a * d_b, rng, (d_a, d_b)), random_unitary(d_a, rng)))

    rho = _random_state(d_a, d_b, rng)
    hab = conditional_quantum(rho)

    if relation == "berta":
        x, z = random_basis(d_a, rng), random_basis(d_a, rng)
        return cq_conditional(rho, x) + cq_conditional(rho, z) - q_mu(overlap_matrix(x, z)) - hab

    if relation == "ordering":
        x, z, y = random_basis(d_a, rng), random_basis(d_a, rng), random_basis(d_b, rng)
        c = overlap_matrix(x, z)
        pxy = joint_distribution(rho, x, y)
        pzy = joint_distribution(rho, z, y)
        qm, qc, qf = q_mu(c), q_c(c, pxy.marginal_x()), q_fsd(c, pxy, pzy)
        return min(qc - qm, qf - qc)

    if relation == "fsd":
        x, z, y = random_basis(d_a, rng), random_basis(d_a, rng), random_basis(d_b, rng)
        pxy = joint_distribution(rho, x, y)
        pzy = joint_distribution(rho, z, y)
        q = q_fsd(overlap_matrix(x, z), pxy, pzy)
        return conditional_classical(pxy) + cq_conditional(rho, z) - hab - q

    if relation in ("fl", "ct"):
        x = random_povm(d_a, _n_outcomes(rng), rng)
        z = random_povm(d_a, _n_outcomes(rng), rng)
        lhs = cq_conditional(rho, x) + cq_conditional(rho, z)
        if relation == "fl":
            return lhs - q_fl(x, z) - hab
        return lhs - q_ct(x, z) - hab + residual_conditional(rho, x)

    if relation in ("tri", "fsdp"):
        x = random_povm(d_a, _n_outcomes(rng), rng)
        z = random_povm(d_a, _n_outcomes(rng), rng)
        y = random_povm(d_b, _n_outcomes(rng), rng)
        pxy = joint_distribution(rho, x, y)
        pzy = joint_distribution(rho, z, y)
        q = q_fsdp(povm_overlap_h(x, z), pxy, pzy)
        if relation == "tri":
            rho_ac = partial_trace(purify(rho), (0, 2))
            return conditional_classical(pxy) + cq_conditional(rho_ac, z) - q
        return (conditional_classical(pxy) + cq_conditional(rho, z)
                - hab + residual_conditional(rho, z) - q)

    if relation == "witness":
        sep = random_separable(d_a, d_b, int(rng.integers(1, 5)), rng)
        z = random_povm(d_a, _n_outcomes(rng), rng)
        return conditional_quantum(sep) - residual_conditional(sep, z)

    if relation == "conserved":
        return _conserved_slack(rho, d_a, d_b, rng)

    raise ValueError(f"unknown relation {relation!r}")


def _conserved_slack(rho, d_a, d_b, rng) -> float:
    sa, sb = _local_sectors(d_a), _local_sectors(d_b)
    la = [k for k, b in enumerate(sa) for _ in b]
    lb = [k for k, b in enumerate(sb) for _ in b]
    cons = ConservedQuantity.from_local_labels(la, lb)
    rho_bar = project_conserved(rho, cons)
    if rng.random() < 0.5:
        xa = Measurement.basis(_block_unitary(sa, d_a, rng))
        za = Measurement.basis(_block_unitary(sa, d_a, rng))
        xb = Measurement.basis(_block_unitary(sb, d_b, rng))
        zb = Measurement.basis(_block_unitary(sb, d_b, rng))
        residual = 0.0
        q = q_fsd(overlap_matrix(xa, za), joint_distribution(rho, xa, xb), joint_distribution(rho, za, xb))
    else:
        xa = random_povm(d_a, _n_outcomes(rng), rng, sa)
        za = random_povm(d_a, _n_outcomes(rng), rng, sa)
        xb = random_povm(d_b, _n_outcomes(rng), rng, sb)
        zb = random_povm(d_b, _n_outcomes(rng), rng, sb)
        residual = residual_conditional(rho_bar, za)
        q = q_fsdp(povm_overlap_h(xa, za), joint_distribution(rho, xa, xb), joint_distribution(rho, za, xb))
    lhs = conditional_classical(joint_distribution(rho, xa, xb)) + conditional_classical(
        joint_distribution(rho, za, zb))
    return lhs - q - conditional_quantum(rho_bar) + residual


@dataclass(frozen=True)
class AuditReport:
    relation: str
    dims: tuple
    trials: int
    seed: int
    min_slack: float
    argmin_seed: int
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def row(self) -> tuple:
        return (self.relation, f"{self.dims[0]}x{self.dims[1]}", self.trials, self.seed,
                self.min_slack, self.argmin_seed, self.violations)


AUDIT_COLUMNS = ("relation", "dims", "trials", "seed", "min_slack", "argmin_seed", "violations")


def trial_slack(relation: str, dims, trial_seed: int) -> float:
    d_a, d_b = dims
    return float(_slack(relation, d_a, d_b, np.random.default_rng(trial_seed)))


def audit_relation(relation: str, dims=(2, 2), trials: int = 1000, seed: int = 0,
                   mapper=map) -> AuditReport:
    if relation not in AUDITS:
        raise ValueError(f"unknown relation {relation!r}; choose from {', '.join(AUDITS)}")
    d_a, d_b = (int(d) for d in dims)
    if not (1 <= d_a <= 4 and 1 <= d_b <= 4):
        raise ValueError("audits run at local dimension at most 4")
    seeds = [seed + i for i in range(trials)]
    slacks = np.array(list(mapper(_trial_task, [(relation, (d_a, d_b), s) for s in seeds])))
    k = int(np.argmin(slacks))
    return AuditReport(relation, (d_a, d_b), trials, seed, float(slacks[k]), seeds[k],
                       int(np.sum(slacks < SLACK_TOL)))


def _trial_task(task):
    return trial_slack(*task)


def duality_check(rho, z: Measurement) -> float:
    """``|H(Z|C) - (H(Z|B) - [H(A|B) - H(A|ZB)])|`` with ``C`` purifying ``AB``."""
    rho = as_density(rho)
    psi = purify(rho)
    if psi.dims[-1] == 1:
        # pure input: the purifying system is trivial
        hzc = cq_conditional(DensityOperator(partial_trace(psi, (0, 2)).matrix, (rho.dims[0], 1), check=False), z)
    else:
        hzc = cq_conditional(partial_trace(psi, (0, 2)), z)
    rhs = cq_conditional(rho, z) - (conditional_quantum(rho) - residual_conditional(rho, z))
    return abs(hzc - rhs)


def petz_probe(rho, x: Measurement, z: Measurement) -> float:
    """Frobenius distance between ``rho_AB`` and its Petz reconstruction.

    ``sigma = rho_ZB`` and the channel dephases A in ``x``; the result vanishes
    exactly when the data-processing step is tight for this instance.
    """
    rho = as_density(rho)
    sigma = post_measure(rho, z).matrix
    lam_rho = post_measure(rho, x).matrix
    lam_sigma = post_measure(DensityOperator(sigma, rho.dims, check=False), x).matrix
    inv = spectral_function(lam_sigma, "inv_sqrt")
    inner = post_measure(DensityOperator(hermitize(inv @ lam_rho @ inv), rho.dims, check=False), x).matrix
    s = spectral_function(sigma, "sqrt")
    rec = s @ inner @ s
    return float(np.linalg.norm(rho.matrix - rec))


def schmidt_identity_gap(psi: PureStateVector, u: np.ndarray) -> float:
    """``(q_fsd - H(X_A|Y_B)) - D(P_XY || sum_i lambda_i c_ix c_iy)`` for Schmidt-basis ``Z``.

    ``X`` on both sides is the rotation ``u`` of the respective Schmidt basis.
    """
    sd = schmidt(psi)
    d = len(sd.coefficients)
    if u.shape != (d, d) or psi.dims[0] != d or psi.dims[1] != d:
        raise ValueError("the identity is checked for full Schmidt rank with d_A = d_B")
    z = Measurement.basis(sd.left_vectors)
    xa = Measurement.basis(sd.left_vectors @ u)
    yb = Measurement.basis(sd.right_vectors @ u)
    pxy = joint_distribution(psi, xa, yb)
    pzy = joint_distribution(psi, z, yb)
    c = np.abs(u) ** 2
    lam = sd.coefficients ** 2
    ref = np.einsum("i,ix,iy->xy", lam, c, c)
    bound = q_fsd(overlap_matrix(xa, z), pxy, pzy) - conditional_classical(pxy)
    return bound - relative_classical(pxy.table.ravel(), ref.ravel())


@dataclass(frozen=True)
class TightnessScan:
    min_gap: float
    argmin_seed: int
    trials: int


def _matched_b(psi: PureStateVector, ua: np.ndarray) -> np.ndarray:
    """B basis aligning the conditional B vectors of ``ua`` by a polar decomposition."""
    k = ua.conj().T @ psi.amplitude_matrix()
    w, _, vh = np.linalg.svd(k)
    polar = w @ vh
    return polar.T


def tightness_gap(psi: PureStateVector, v: np.ndarray, ub_x: np.ndarray, ub_z: np.ndarray) -> float:
    d = psi.dims[0]
    xa = Measurement.basis(v)
    za = Measurement.basis(v @ fourier_matrix(d))
    hx = conditional_classical(joint_distribution(psi, xa, Measurement.basis(ub_x)))
    hz = conditional_classical(joint_distribution(psi, za, Measurement.basis(ub_z)))
    return hx + hz - conditional_quantum(psi) - math.log2(d)


def tightness_scan(psi: PureStateVector, trials: int = 10_000, seed: int = 0) -> TightnessScan:
    """Smallest sampled gap of the measured MUB relation over basis choices.

    Even trials take ``X_A`` as the Schmidt basis of A with random phases,
    odd trials a Haar basis. B bases are matched by polar decomposition in
    three quarters of the trials and Haar random otherwise.
    """
    d = psi.dims[0]
    if psi.dims[1] != d or d > 4:
        raise ValueError("tightness scan needs d_A = d_B <= 4")
    left = schmidt(psi).left_vectors
    best, arg = np.inf, seed
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        if i % 2 == 0:
            v = left * np.exp(2j * np.pi * rng.random(d))[None, :]
        else:
            v = random_unitary(d, rng)
        if i % 4 == 3:
            ubx, ubz = random_unitary(d, rng), random_unitary(d, rng)
        else:
            ubx = _matched_b(psi, v)
            ubz = _matched_b(psi, v @ fourier_matrix(d))
        g = tightness_gap(psi, v, ubx, ubz)
        if g < best:
            best, arg = g, seed + i
    return TightnessScan(float(best), arg, trials)
