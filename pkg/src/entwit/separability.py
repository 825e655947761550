"""Classify measurement elements and whole measurements as separable,
entangled or undetermined.

The only exact criterion used is the positivity of partial transposes.
A negative partial transpose across any bipartition certifies
entanglement.  When every partial transpose is positive, separability is
certified only where that is sound: two factors of size 2x2 or 2x3, or
an explicit product decomposition found numerically.  Everything else is
reported as undetermined rather than guessed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import Operator, PureVector, partial_transpose, tensor_vector
from .sampling import Seed, maximize_over_products

NPT_TOL = 1e-8
DECOMPOSITION_RESIDUAL_TOL = 1e-7

SEPARABLE = "separable"
ENTANGLED = "entangled"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class NptEvidence:
    """A negative partial-transpose eigenvalue across the stated cut."""

    cut: tuple[int, ...]
    min_eigenvalue: float


@dataclass(frozen=True)
class PptSeparable:
    """PPT held on the single cut of a 2x2 or 2x3 space, which is sufficient."""

    min_eigenvalue: float


@dataclass(frozen=True)
class ProductDecomposition:
    """Explicit decomposition op = sum_k coeff_k * P(states_k)."""

    coefficients: tuple[float, ...]
    states: tuple[tuple[PureVector, ...], ...]
    residual: float

    def reconstruct(self, dims: tuple[int, ...]) -> Operator:
        total = int(np.prod(dims))
        acc = np.zeros((total, total), dtype=complex)
        for c, local in zip(self.coefficients, self.states):
            vec = tensor_vector(list(local))
            acc += c * np.outer(vec.amplitudes, vec.amplitudes.conj())
        return Operator(dims, acc)


@dataclass(frozen=True)
class ElementVerdict:
    status: str
    evidence: NptEvidence | PptSeparable | ProductDecomposition | None
    tol: float


@dataclass(frozen=True)
class MeasurementVerdict:
    verdict: str
    elements: tuple[ElementVerdict, ...]


def bipartitions(n_factors: int) -> list[tuple[int, ...]]:
    """All bipartition cuts, each reported once as the side containing factor 0."""
    if n_factors < 2:
        raise ValueError("need at least two factors for a bipartition")
    rest = range(1, n_factors)
    cuts = []
    for r in range(n_factors - 1):
        for extra in itertools.combinations(rest, r):
            cuts.append((0,) + extra)
    return cuts


def ppt_check(element: Operator, cut: Sequence[int] | int, tol: float = NPT_TOL) -> tuple[bool, float]:
    """Min eigenvalue of the partial transpose across `cut`; holds iff >= -tol."""
    herm = (element.mat + element.mat.conj().T) / 2.0
    lo = np.linalg.eigvalsh(herm)[0]
    if lo < -max(tol, 1e-9):
        raise ValueError(f"element is not PSD (min eigenvalue {lo:.3e})")
    pt = partial_transpose(element, cut)
    min_eig = float(np.linalg.eigvalsh((pt.mat + pt.mat.conj().T) / 2.0)[0])
    return min_eig >= -tol, min_eig


def _numerical_rank(element: Operator, rel_tol: float = 1e-9) -> tuple[int, np.ndarray]:
    vals = np.linalg.eigvalsh((element.mat + element.mat.conj().T) / 2.0)
    top = vals[-1]
    if top <= 0.0:
        return 0, vals
    return int(np.sum(vals > rel_tol * top)), vals


def _rank_one_product_search(
    element: Operator, seed, restarts: int
) -> ProductDecomposition | None:
    """For (nearly) rank-one elements: find the best product approximation
    and accept it when the entrywise residual is small enough."""
    scale = float(element.trace().real)
    if scale <= 0.0:
        return None
    best, states = maximize_over_products(element, restarts, seed)
    vec = tensor_vector(states)
    approx = scale * np.outer(vec.amplitudes, vec.amplitudes.conj())
    residual = float(np.max(np.abs(element.mat - approx)))
    if residual <= DECOMPOSITION_RESIDUAL_TOL * max(1.0, scale):
        return ProductDecomposition((scale,), (tuple(states),), residual)
    return None


def _greedy_product_pursuit(
    element: Operator,
    seed,
    max_terms: int,
    restarts: int,
) -> ProductDecomposition | None:
    """Greedy matching pursuit: peel off product projectors while keeping the
    residual PSD.  Succeeds only if the residual shrinks to numerical zero;
    failure is inconclusive, not a verdict."""
    scale = max(1.0, float(element.trace().real))
    residual = np.array(element.mat)
    coeffs: list[float] = []
    states: list[tuple[PureVector, ...]] = []
    base = seed if isinstance(seed, Seed) else Seed(0 if seed is None else int(seed))
    for term in range(max_terms):
        res_norm = float(np.max(np.abs(residual)))
        if res_norm <= DECOMPOSITION_RESIDUAL_TOL * scale:
            return ProductDecomposition(tuple(coeffs), tuple(states), res_norm)
        res_op = Operator(element.dims, (residual + residual.conj().T) / 2.0)
        overlap, local = maximize_over_products(res_op, restarts, base.child(term))
        if overlap <= DECOMPOSITION_RESIDUAL_TOL * scale:
            return None
        vec = tensor_vector(local).amplitudes
        pinv = np.linalg.pinv(res_op.mat, rcond=1e-12, hermitian=True)
        gain = float(np.real(vec.conj() @ pinv @ vec))
        if gain <= 0.0:
            return None
        c = 1.0 / gain
        proj = np.outer(vec, vec.conj())
        # back off if numerical noise pushed the residual below zero
        for _ in range(40):
            trial = res_op.mat - c * proj
            if np.linalg.eigvalsh((trial + trial.conj().T) / 2.0)[0] >= -1e-12 * scale:
                break
            c *= 0.5
        else:
            return None
        residual = res_op.mat - c * proj
        coeffs.append(c)
        states.append(tuple(local))
    res_norm = float(np.max(np.abs(residual)))
    if res_norm <= DECOMPOSITION_RESIDUAL_TOL * scale:
        return ProductDecomposition(tuple(coeffs), tuple(states), res_norm)
    return None


def classify_element(
    element: Operator,
    tol: float = NPT_TOL,
    seed=None,
    search_restarts: int = 12,
    search_terms: int | None = None,
) -> ElementVerdict:
    """Separable / entangled / undetermined verdict for a single effect.

    NPT across any bipartition certifies entanglement.  PPT everywhere is
    sufficient for separability only on 2x2 and 2x3; beyond that a product
    decomposition is searched for, and absent one the element stays
    undetermined.
    """
    if element.n_factors < 2:
        raise ValueError("element must act on at least two factors")
    worst_cut: tuple[int, ...] | None = None
    worst_eig = np.inf
    for cut in bipartitions(element.n_factors):
        _, min_eig = ppt_check(element, cut, tol=tol)
        if min_eig < worst_eig:
            worst_eig = min_eig
            worst_cut = cut
    if worst_eig < -tol:
        return ElementVerdict(ENTANGLED, NptEvidence(worst_cut, worst_eig), tol)
    if sorted(element.dims) in ([2, 2], [2, 3]):
        return ElementVerdict(SEPARABLE, PptSeparable(worst_eig), tol)

    scale = float(element.trace().real)
    if scale <= tol:
        # numerically zero operator: trivially separable with no terms
        return ElementVerdict(
            SEPARABLE, ProductDecomposition((), (), float(np.max(np.abs(element.mat)))), tol
        )
    rank, _ = _numerical_rank(element)
    if rank <= 1:
        found = _rank_one_product_search(element, seed, restarts=max(search_restarts, 4))
        if found is not None:
            return ElementVerdict(SEPARABLE, found, tol)
        return ElementVerdict(UNDETERMINED, None, tol)
    max_terms = search_terms if search_terms is not None else 4 * element.total_dim
    found = _greedy_product_pursuit(element, seed, max_terms, restarts=search_restarts)
    if found is not None:
        return ElementVerdict(SEPARABLE, found, tol)
    return ElementVerdict(UNDETERMINED, None, tol)


def classify_measurement(m, tol: float = NPT_TOL, seed=None) -> MeasurementVerdict:
    """Entangled iff any element is entangled; separable iff all are."""
    base = seed if isinstance(seed, Seed) else Seed(0 if seed is None else int(seed))
    verdicts = tuple(
        classify_element(eff, tol=tol, seed=base.child(k))
        for k, eff in enumerate(m.effects)
    )
    statuses = {v.status for v in verdicts}
    if ENTANGLED in statuses:
        overall = ENTANGLED
    elif statuses == {SEPARABLE}:
        overall = SEPARABLE
    else:
        overall = UNDETERMINED
    return MeasurementVerdict(overall, verdicts)
