"""Seeded random generators and derivative-free product-state refinement.

All sampling goes through numpy Generators built from an explicit
(seed, stream) pair, so every search in the package is reproducible
across runs and across worker counts: parallel restarts draw from
disjoint streams keyed by the restart index, never from shared state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import Operator, PureVector


@dataclass(frozen=True)
class Seed:
    """64-bit seed plus a stream id; equal pairs give bit-identical samples."""

    value: int
    stream: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng((int(self.value), int(self.stream)))

    def child(self, k: int) -> "Seed":
        return Seed(self.value, self.stream * 1_000_003 + k + 1)


def rng_from(seed) -> np.random.Generator:
    """Accepts a Seed, an int, an (seed, stream) pair, an existing
    Generator, or None (seed 0)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.rng()
    if seed is None:
        return Seed(0).rng()
    if isinstance(seed, (tuple, list)):
        value, stream = seed
        return Seed(int(value), int(stream)).rng()
    return Seed(int(seed)).rng()


def random_pure_state(d: int, seed) -> PureVector:
    """Haar-distributed unit vector on C^d."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    rng = rng_from(seed)
    amp = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureVector((d,), amp).normalize()


def random_product_state(dims: Sequence[int], seed) -> list[PureVector]:
    rng = rng_from(seed)
    return [random_pure_state(d, rng) for d in dims]


def random_density_matrix(d: int, rank: int, seed) -> Operator:
    """Ginibre-construction random density matrix of the given rank."""
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}], got {rank}")
    rng = rng_from(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return Operator((d,), rho / np.trace(rho).real)


def random_unitary(d: int, seed) -> np.ndarray:
    """Haar-distributed unitary via QR with phase fixing."""
    rng = rng_from(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def _environment_matrix(tens: np.ndarray, states: list[np.ndarray], site: int) -> np.ndarray:
    """Contract every factor except `site` of a (dims + dims)-shaped tensor
    with the given local vectors; returns the local matrix whose expectation
    on site `site` equals the full product expectation."""
    n = len(states)
    row = [chr(ord("a") + i) for i in range(n)]
    col = [chr(ord("a") + n + i) for i in range(n)]
    operands: list[np.ndarray] = [tens]
    subs: list[str] = []
    for k in range(n):
        if k == site:
            continue
        operands.append(states[k].conj())
        subs.append(row[k])
        operands.append(states[k])
        subs.append(col[k])
    spec = "".join(row) + "".join(col)
    if subs:
        spec += "," + ",".join(subs)
    spec += "->" + row[site] + col[site]
    return np.einsum(spec, *operands)


def refine_product_state(
    op: Operator,
    start: Sequence[PureVector],
    budget: int = 200,
    tol: float = 1e-10,
) -> tuple[float, list[PureVector]]:
    """Locally minimize Tr(op * s_1 x ... x s_N) over pure product states.

    Coordinate descent: each pass replaces one site by the minimal
    eigenvector of its environment-contracted operator, which is the exact
    local optimum, so the objective never increases.  Stops when a full
    sweep improves by less than `tol` or after `budget` sweeps.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    dims = op.dims
    if tuple(v.total_dim for v in start) != dims:
        raise ValueError("start states do not match operator factors")
    tens = op.mat.reshape(dims + dims)
    states = [v.normalize().amplitudes.copy() for v in start]

    def objective() -> float:
        vec = states[0]
        for s in states[1:]:
            vec = np.kron(vec, s)
        return float(np.real(vec.conj() @ op.mat @ vec))

    value = objective()
    for _ in range(budget):
        prev = value
        for site in range(len(dims)):
            env = _environment_matrix(tens, states, site)
            env = (env + env.conj().T) / 2.0
            vals, vecs = np.linalg.eigh(env)
            states[site] = vecs[:, 0]
            new_value = float(vals[0])
            if new_value > value + 1e-12 * max(1.0, abs(value)):
                raise AssertionError(
                    f"coordinate step increased objective: {value} -> {new_value}"
                )
            value = new_value
        if prev - value < tol:
            break
    return value, [PureVector((d,), s) for d, s in zip(dims, states)]


def minimize_over_products(
    op: Operator,
    restarts: int,
    seed,
    budget: int = 200,
) -> tuple[float, list[PureVector]]:
    """Multi-start product-state minimization of Tr(op * product).

    Restart k draws its starting point from stream `child(k)` of the seed,
    so the result is identical regardless of evaluation order.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    base = seed if isinstance(seed, Seed) else Seed(0 if seed is None else int(seed))
    best_val = np.inf
    best_states: list[PureVector] | None = None
    for k in range(restarts):
        start = random_product_state(op.dims, base.child(k))
        val, states = refine_product_state(op, start, budget=budget)
        if val < best_val:
            best_val = val
            best_states = states
    assert best_states is not None
    return float(best_val), best_states


def maximize_over_products(
    op: Operator,
    restarts: int,
    seed,
    budget: int = 200,
) -> tuple[float, list[PureVector]]:
    """Multi-start maximization of <p|op|p> over pure product states."""
    val, states = minimize_over_products(-1.0 * op, restarts, seed, budget=budget)
    return -val, states
