"""Swap-steering scenario: N independent sources feed a trusted party
(who runs product tomography with binary effects) and an untrusted party
performing one joint measurement with outcomes b.

Wire convention: source j spans the pair (A_j, B_j); the global state is
laid out with all trusted factors first, (A_1..A_N, B_1..B_N), via an
explicit factor permutation.  With maximally entangled sources the
unnormalized conditional state on the trusted side given outcome b is
E_b^T / d^N -- the transpose (in the source Schmidt basis) is part of the
exact ricochet identity, so witnesses fed to the functional must be built
from transposed elements when those are complex; for real measurements
such as the Bell basis the two conventions coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import (
    Operator,
    PureVector,
    identity,
    partial_trace,
    permute_factors,
    product_traces,
    tensor_many,
)
from .objects import Measurement, TomographicBasis, max_entangled, tomographic_basis
from .sampling import random_density_matrix, rng_from
from .witness import Witness, witness_from_element

TABLE_TOL = 1e-9


@dataclass(frozen=True)
class CorrelationTable:
    """p(a, b | i_1..i_N) with a binary, indexed [a, b, i_1, .., i_N]."""

    probs: np.ndarray
    site_dims: tuple[int, ...]
    basis_id: str = "custom"

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        site_dims = tuple(int(d) for d in self.site_dims)
        expected = (2,) + probs.shape[1:2] + tuple(d * d for d in site_dims)
        if probs.ndim != 2 + len(site_dims) or probs.shape != expected:
            raise ValueError(f"table shape {probs.shape} does not match sites {site_dims}")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "site_dims", site_dims)
        self.validate()

    @property
    def n_parties(self) -> int:
        return len(self.site_dims)

    @property
    def n_outcomes(self) -> int:
        return self.probs.shape[1]

    def outcome_marginal(self) -> np.ndarray:
        """p(b), taken from the first input tuple (input-independent)."""
        summed = self.probs.sum(axis=0)
        first = summed[(slice(None),) + (0,) * self.n_parties]
        return np.array(first)

    def validate(self, tol: float = TABLE_TOL) -> None:
        p = self.probs
        if p.min() < -tol or p.max() > 1.0 + tol:
            raise ValueError("probabilities outside [0, 1]")
        summed = p.sum(axis=0)  # p(b) for every input tuple
        flat = summed.reshape(summed.shape[0], -1)
        dev = np.max(np.abs(flat - flat[:, :1]))
        if dev > tol:
            raise ValueError(f"untrusted marginal depends on trusted inputs (dev {dev:.3e})")
        total = float(flat[:, 0].sum())
        if abs(total - 1.0) > tol:
            raise ValueError(f"outcome marginal sums to {total}, not 1")


@dataclass(frozen=True)
class SohsSource:
    """Hidden states and weights for one source."""

    weights: np.ndarray
    states: tuple[Operator, ...]

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        states = tuple(self.states)
        if weights.ndim != 1 or weights.shape[0] != len(states):
            raise ValueError("one weight per hidden state required")
        if weights.min() < -1e-12 or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
        d = states[0].total_dim
        for k, rho in enumerate(states):
            if rho.total_dim != d:
                raise ValueError("hidden states must share a dimension")
            if not rho.is_hermitian(1e-9):
                raise ValueError(f"hidden state {k} is not Hermitian")
            lo = np.linalg.eigvalsh((rho.mat + rho.mat.conj().T) / 2.0)[0]
            if lo < -1e-9 or abs(rho.trace().real - 1.0) > 1e-9:
                raise ValueError(f"hidden state {k} is not a density matrix")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "states", states)

    @property
    def d(self) -> int:
        return self.states[0].total_dim


@dataclass(frozen=True)
class SohsModel:
    """Independent hidden states per source plus a response p(b | lambdas)."""

    sources: tuple[SohsSource, ...]
    response: np.ndarray

    def __post_init__(self):
        sources = tuple(self.sources)
        response = np.array(self.response, dtype=float)
        counts = tuple(len(s.states) for s in sources)
        if response.shape[:-1] != counts:
            raise ValueError(
                f"response shape {response.shape} does not match hidden-state counts {counts}"
            )
        if response.min() < -1e-12:
            raise ValueError("response probabilities must be nonnegative")
        sums = response.sum(axis=-1)
        if np.max(np.abs(sums - 1.0)) > 1e-9:
            raise ValueError("response must be a conditional distribution over b")
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "response", response)

    @property
    def site_dims(self) -> tuple[int, ...]:
        return tuple(s.d for s in self.sources)

    @property
    def n_outcomes(self) -> int:
        return self.response.shape[-1]


def _resolve_site_bases(
    site_dims: Sequence[int],
    basis: TomographicBasis | Sequence[TomographicBasis] | None,
) -> tuple[TomographicBasis, ...]:
    if basis is None:
        return tuple(tomographic_basis(d) for d in site_dims)
    if isinstance(basis, TomographicBasis):
        bases = tuple(basis for _ in site_dims)
    else:
        bases = tuple(basis)
    if len(bases) != len(site_dims):
        raise ValueError(f"need one basis per site ({len(site_dims)})")
    for b, d in zip(bases, site_dims):
        if b.d != d:
            raise ValueError(f"basis dimension {b.d} does not match site dimension {d}")
    return bases


def _basis_label(bases: tuple[TomographicBasis, ...]) -> str:
    ids = {b.basis_id for b in bases}
    return ids.pop() if len(ids) == 1 else "+".join(b.basis_id for b in bases)


def alice_effect(
    basis: TomographicBasis | Sequence[TomographicBasis],
    inputs: Sequence[int],
) -> Operator:
    """Outcome-0 effect tau_{i_1} x ... x tau_{i_N} of the trusted party."""
    bases = tuple(basis for _ in inputs) if isinstance(basis, TomographicBasis) else tuple(basis)
    if len(bases) != len(inputs):
        raise ValueError("need one basis per input index")
    taus = []
    for b, i in zip(bases, inputs):
        if not 0 <= int(i) < len(b.projectors):
            raise ValueError(f"input index {i} out of range for d^2 = {len(b.projectors)}")
        taus.append(b.projectors[int(i)])
    return tensor_many(taus)


def _source_operator(src, d: int) -> Operator:
    if isinstance(src, PureVector):
        if src.dims != (d, d):
            raise ValueError(f"source vector dims {src.dims} do not match ({d},{d})")
        return src.projector()
    if isinstance(src, Operator):
        if src.dims != (d, d):
            raise ValueError(f"source operator dims {src.dims} do not match ({d},{d})")
        return src
    raise TypeError(f"source must be a PureVector or Operator, got {type(src)!r}")


def white_noise_source(d: int, visibility: float) -> Operator:
    """v * phi+ projector + (1-v) * I/d^2 on one source pair."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    phi = max_entangled(d).projector()
    mixed = identity((d, d)).mat / (d * d)
    return Operator((d, d), visibility * phi.mat + (1.0 - visibility) * mixed)


def conditional_states(
    bob: Measurement,
    sources: Sequence[PureVector | Operator] | None = None,
) -> tuple[list[Operator], np.ndarray]:
    """Unnormalized trusted-side states R_b = Tr_B[(I x E_b) rho] and p(b).

    `sources` defaults to one maximally entangled pair per factor of the
    untrusted measurement, in which case R_b = E_b^T / prod(d_j) exactly.
    """
    dims = bob.dims
    n = len(dims)
    if sources is None:
        sources = [max_entangled(d) for d in dims]
    if len(sources) != n:
        raise ValueError(f"need {n} sources, got {len(sources)}")
    rhos = [_source_operator(s, d) for s, d in zip(sources, dims)]
    rho_interleaved = tensor_many(rhos)  # factors (A_1, B_1, A_2, B_2, ...)
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    rho = permute_factors(rho_interleaved, perm)  # (A_1..A_N, B_1..B_N)
    d_a = int(np.prod(dims))
    conditionals: list[Operator] = []
    weights = np.empty(bob.n_outcomes)
    eye_a = np.eye(d_a)
    for k, eff in enumerate(bob.effects):
        big = Operator(dims + dims, np.kron(eye_a, eff.mat) @ rho.mat)
        r_b = partial_trace(big, tuple(range(n)))
        r_mat = (r_b.mat + r_b.mat.conj().T) / 2.0
        conditionals.append(Operator(dims, r_mat))
        weights[k] = float(np.trace(r_mat).real)
    return conditionals, weights


def quantum_correlations(
    bob: Measurement,
    sources: Sequence[PureVector | Operator] | None = None,
    basis: TomographicBasis | Sequence[TomographicBasis] | None = None,
) -> CorrelationTable:
    """Born-rule table for the swap-steering scenario."""
    bases = _resolve_site_bases(bob.dims, basis)
    stacks = [b.stack() for b in bases]
    conditionals, p_b = conditional_states(bob, sources)
    shape = (2, bob.n_outcomes) + tuple(d * d for d in bob.dims)
    probs = np.empty(shape)
    for k, r_b in enumerate(conditionals):
        t = product_traces(r_b, stacks)
        if np.max(np.abs(t.imag)) > TABLE_TOL:
            raise AssertionError("correlation entries should be real")
        probs[0, k] = t.real
        probs[1, k] = p_b[k] - t.real
    np.clip(probs, 0.0, 1.0, out=probs)
    return CorrelationTable(probs, bob.dims, basis_id=_basis_label(bases))


def sohs_correlations(
    model: SohsModel,
    basis: TomographicBasis | Sequence[TomographicBasis] | None = None,
) -> CorrelationTable:
    """Assemble the table of a separable outcome-independent hidden-state
    model with honest trusted measurements."""
    bases = _resolve_site_bases(model.site_dims, basis)
    n = len(model.sources)
    # q_j[i, l] = p(lambda_l) * Tr(tau_i rho_l) for source j
    qs = []
    for b, src in zip(bases, model.sources):
        stack = b.stack()
        q = np.einsum("irc,lcr->il", stack, np.stack([s.mat for s in src.states]))
        if np.max(np.abs(q.imag)) > TABLE_TOL:
            raise AssertionError("tomographic responses should be real")
        qs.append(q.real * src.weights[None, :])
    # contract hidden variables against the response tensor
    letters_i = [chr(ord("a") + j) for j in range(n)]
    letters_l = [chr(ord("A") + j) for j in range(n)]
    spec = (
        ",".join(f"{i}{l}" for i, l in zip(letters_i, letters_l))
        + ","
        + "".join(letters_l)
        + "z->"
        + "".join(letters_i)
        + "z"
    )
    p0 = np.einsum(spec, *qs, model.response)  # [i_1..i_N, b]
    p0 = np.moveaxis(p0, -1, 0)  # [b, i_1..i_N]
    p_b = np.einsum(
        "".join(letters_l) + "z," + ",".join(letters_l) + "->z",
        model.response,
        *[src.weights for src in model.sources],
    )
    shape = (2, model.n_outcomes) + tuple(d * d for d in model.site_dims)
    probs = np.empty(shape)
    probs[0] = p0
    probs[1] = p_b.reshape((-1,) + (1,) * n) - p0
    np.clip(probs, 0.0, 1.0, out=probs)
    return CorrelationTable(probs, model.site_dims, basis_id=_basis_label(bases))


def functional_S(table: CorrelationTable, beta: np.ndarray) -> tuple[float, int]:
    """max_b sum_i beta[i_1..i_N] p(0, b | i_1..i_N); ties go to lowest b."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != table.probs.shape[2:]:
        raise ValueError(
            f"beta shape {beta.shape} does not match table inputs {table.probs.shape[2:]}"
        )
    per_b = np.tensordot(table.probs[0], beta, axes=(tuple(range(1, beta.ndim + 1)), tuple(range(beta.ndim))))
    idx = int(np.argmax(per_b))
    return float(per_b[idx]), idx


def quantum_value_closed_form(bob: Measurement, w: Witness) -> float:
    """Closed-form quantum value with maximally entangled sources:
    max_b (1/prod d_j) sum_i beta[i] Tr(tau_i x ... E_b^T).

    Evaluates through the witness coefficients, which is exactly what the
    simulated table contracts, so the two agree to machine precision.
    """
    if w.beta is None or w.bases is None:
        raise ValueError("witness carries no tomographic coefficients (attach_beta first)")
    if w.dims != bob.dims:
        raise ValueError(f"dims mismatch: witness {w.dims} vs measurement {bob.dims}")
    stacks = [b.stack() for b in w.bases]
    total = int(np.prod(bob.dims))
    best = -np.inf
    for eff in bob.effects:
        t = product_traces(eff.transpose(), stacks).real / total
        best = max(best, float(np.tensordot(w.beta, t, axes=w.beta.ndim)))
    return best


def steering_witness_for(
    bob: Measurement,
    element_index: int | None = None,
    cut=None,
    basis: TomographicBasis | Sequence[TomographicBasis] | None = None,
) -> tuple[Witness, int]:
    """Witness whose steering functional detects the given measurement.

    Built from the *transposed* target element so that the functional sees
    a negative trace against the conditioned state E_b^T.  Defaults to the
    element with the most negative partial transpose.
    """
    bases = _resolve_site_bases(bob.dims, basis)
    from .separability import bipartitions, ppt_check  # local import to avoid cycle

    if element_index is None:
        worst = (0.0, None)
        for k, eff in enumerate(bob.effects):
            for c in bipartitions(len(bob.dims)):
                _, eig = ppt_check(eff, c)
                if eig < worst[0]:
                    worst = (eig, k)
        if worst[1] is None:
            raise ValueError("no NPT element found; measurement not witnessable here")
        element_index = worst[1]
    target = bob.effects[element_index].transpose()
    w = witness_from_element(target, cut=cut)
    from .witness import attach_beta

    return attach_beta(w, bases), element_index


def steering_sweep(
    bob: Measurement,
    w: Witness,
    visibilities: Sequence[float],
    basis: TomographicBasis | Sequence[TomographicBasis] | None = None,
) -> list[dict]:
    """Evaluate the steering functional with white-noise sources at each
    visibility; rows are plot-ready."""
    if w.beta is None:
        raise ValueError("witness carries no tomographic coefficients")
    bases = _resolve_site_bases(bob.dims, basis if basis is not None else w.bases)
    rows = []
    for v in visibilities:
        sources = [white_noise_source(d, float(v)) for d in bob.dims]
        table = quantum_correlations(bob, sources, bases)
        value, arg_b = functional_S(table, w.beta)
        rows.append(
            {"visibility": float(v), "noise": 1.0 - float(v), "S_value": value, "argmax_b": arg_b}
        )
    return rows


def steering_threshold(
    bob: Measurement,
    w: Witness,
    tol: float = 1e-10,
    basis: TomographicBasis | Sequence[TomographicBasis] | None = None,
) -> float:
    """Visibility at which the steering value crosses zero (bisection).

    Returns 0.0 when the value is positive all the way down, and 1.0 when
    even the noiseless scenario does not violate.
    """
    if w.beta is None:
        raise ValueError("witness carries no tomographic coefficients")
    bases = _resolve_site_bases(bob.dims, basis if basis is not None else w.bases)

    def value_at(v: float) -> float:
        sources = [white_noise_source(d, v) for d in bob.dims]
        table = quantum_correlations(bob, sources, bases)
        return functional_S(table, w.beta)[0]

    hi = value_at(1.0)
    if hi <= 0.0:
        return 1.0
    lo = value_at(0.0)
    if lo > 0.0:
        return 0.0
    a, b = 0.0, 1.0
    while b - a > tol:
        mid = 0.5 * (a + b)
        if value_at(mid) > 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def random_sohs_model(
    seed,
    n_parties: int,
    d: int,
    max_hidden: int = 8,
    n_outcomes: int | None = None,
) -> SohsModel:
    """Random SOHS model: Ginibre hidden states, Dirichlet-style weights
    and response table.  Used by the bound-property suites."""
    rng = rng_from(seed)
    sources = []
    for _ in range(n_parties):
        n_hidden = int(rng.integers(1, max_hidden + 1))
        weights = rng.random(n_hidden) + 1e-3
        weights /= weights.sum()
        states = tuple(
            random_density_matrix(d, int(rng.integers(1, d + 1)), rng)
            for _ in range(n_hidden)
        )
        sources.append(SohsSource(weights, states))
    n_b = int(n_outcomes if n_outcomes is not None else rng.integers(2, 7))
    counts = tuple(len(s.states) for s in sources)
    response = rng.random(counts + (n_b,)) + 1e-3
    response /= response.sum(axis=-1, keepdims=True)
    return SohsModel(tuple(sources), response)
