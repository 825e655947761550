"""Named states, measurements and tomographic bases.

Ordering conventions are fixed so correlation tables are reproducible:
the Bell basis comes in the order (phi+, phi-, psi+, psi-) and the six
single-qubit mu states in lexicographic (i, j) order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import Operator, PureVector, basis_vector, identity, trace_inner

MEASUREMENT_TOL = 1e-9


@dataclass(frozen=True)
class Measurement:
    """A finite collection of positive effects summing to the identity."""

    dims: tuple[int, ...]
    effects: tuple[Operator, ...]
    name: str | None = None
    tol: float = MEASUREMENT_TOL

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        effects = tuple(self.effects)
        if not effects:
            raise ValueError("measurement needs at least one effect")
        for k, eff in enumerate(effects):
            if eff.dims != dims:
                raise ValueError(f"effect {k} has dims {eff.dims}, expected {dims}")
            if not eff.is_hermitian(max(self.tol, 1e-10)):
                raise ValueError(f"effect {k} is not Hermitian")
            lo = np.linalg.eigvalsh((eff.mat + eff.mat.conj().T) / 2.0)[0]
            if lo < -self.tol:
                raise ValueError(f"effect {k} is not PSD (min eigenvalue {lo:.3e})")
        total = np.sum([eff.mat for eff in effects], axis=0)
        dev = np.max(np.abs(total - np.eye(total.shape[0])))
        if dev > self.tol:
            raise ValueError(f"effects do not sum to identity (max deviation {dev:.3e})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "_projective", self._check_projective())

    def _check_projective(self) -> bool:
        for i, a in enumerate(self.effects):
            for j, b in enumerate(self.effects):
                prod = a.mat @ b.mat
                target = a.mat if i == j else 0.0
                if np.max(np.abs(prod - target)) > self.tol:
                    return False
        return True

    @property
    def projective(self) -> bool:
        return self._projective

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def is_rank_one_projective(self, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        if not self.projective:
            return False
        return all(abs(eff.trace().real - 1.0) <= 1e-6 for eff in self.effects)


@dataclass(frozen=True)
class TomographicBasis:
    """d^2 rank-one projectors spanning the Hermitian matrices on C^d."""

    d: int
    projectors: tuple[Operator, ...]
    basis_id: str = "custom"

    def __post_init__(self):
        d = int(self.d)
        projs = tuple(self.projectors)
        if len(projs) != d * d:
            raise ValueError(f"need exactly {d * d} projectors, got {len(projs)}")
        for k, tau in enumerate(projs):
            if tau.dims != (d,):
                raise ValueError(f"projector {k} has dims {tau.dims}, expected ({d},)")
            if np.max(np.abs(tau.mat @ tau.mat - tau.mat)) > 1e-12:
                raise ValueError(f"projector {k} is not idempotent within 1e-12")
            if abs(tau.trace() - 1.0) > 1e-10:
                raise ValueError(f"projector {k} is not rank one (trace != 1)")
        gram = self._gram(projs)
        cond = float(np.linalg.cond(gram))
        if not np.isfinite(cond) or cond > 1e12:
            raise ValueError("projector set is not tomographically complete (singular Gram)")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "_gram", gram)
        object.__setattr__(self, "_cond", cond)

    @staticmethod
    def _gram(projs: tuple[Operator, ...]) -> np.ndarray:
        m = len(projs)
        gram = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                gram[i, j] = trace_inner(projs[i], projs[j]).real
        return gram

    def gram(self) -> np.ndarray:
        return np.array(self._gram)

    def gram_condition(self) -> float:
        """Condition number of the Gram matrix; a rough quality figure for
        the basis (users may substitute better-conditioned sets)."""
        return self._cond

    def stack(self) -> np.ndarray:
        """(d^2, d, d) array of the projector matrices."""
        return np.stack([tau.mat for tau in self.projectors])


def _ket(amplitudes) -> PureVector:
    return PureVector((len(amplitudes),), np.asarray(amplitudes, dtype=complex)).normalize()


def bell_states() -> tuple[PureVector, PureVector, PureVector, PureVector]:
    """The four two-qubit Bell vectors, order (phi+, phi-, psi+, psi-)."""
    s = 1.0 / np.sqrt(2.0)
    phi_p = PureVector((2, 2), [s, 0, 0, s])
    phi_m = PureVector((2, 2), [s, 0, 0, -s])
    psi_p = PureVector((2, 2), [0, s, s, 0])
    psi_m = PureVector((2, 2), [0, s, -s, 0])
    return phi_p, phi_m, psi_p, psi_m


def bell_basis() -> Measurement:
    """Bell-basis measurement on two qubits."""
    effects = tuple(v.projector() for v in bell_states())
    return Measurement((2, 2), effects, name="bell-basis")


def computational_basis(dims: Sequence[int]) -> Measurement:
    """Product computational-basis measurement on the given factors."""
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims))
    effects = tuple(basis_vector(dims, k).projector() for k in range(total))
    return Measurement(dims, effects, name="computational")


def max_entangled(d: int) -> PureVector:
    """(1/sqrt(d)) sum_i |ii> on dims (d, d)."""
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    amp = np.zeros(d * d, dtype=complex)
    for i in range(d):
        amp[i * d + i] = 1.0
    return PureVector((d, d), amp / np.sqrt(d))


def mu_states() -> tuple[PureVector, ...]:
    """The six single-qubit states mu_{i,j}, i in {0,1,2}, j in {0,1},
    in lexicographic (i, j) order."""
    out = []
    for i in range(3):
        for j in range(2):
            if i == 0:
                vec = [1.0, 0.0] if j == 0 else [0.0, 1.0]
            elif i == 1:
                vec = [1.0, (-1.0) ** j]
            else:
                vec = [1.0, 1j * (-1.0) ** j]
            out.append(_ket(vec))
    return tuple(out)


def tomographic_basis(d: int) -> TomographicBasis:
    """Standard rank-one projector family spanning Hermitian d x d matrices.

    Takes the d basis projectors |k><k|, then for every pair j < k the
    projectors onto (|j> + |k>)/sqrt(2) and (|j> + i|k>)/sqrt(2).  For
    d = 2 this is {|0><0|, |1><1|, |+><+|, |+i><+i|}.
    """
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    projs: list[Operator] = []
    for k in range(d):
        projs.append(basis_vector((d,), k).projector())
    for phase in (1.0, 1j):
        for j in range(d):
            for k in range(j + 1, d):
                amp = np.zeros(d, dtype=complex)
                amp[j] = 1.0
                amp[k] = phase
                projs.append(_ket(amp).projector())
    return TomographicBasis(d, tuple(projs), basis_id=f"standard-d{d}")


def born(effect: Operator, state: Operator, tol: float = MEASUREMENT_TOL) -> float:
    """Outcome probability Tr(effect @ state) for a density matrix `state`.

    The result is clamped to [0, 1] when within `tol` of the interval and
    rejected otherwise.
    """
    if not state.is_hermitian(max(tol, 1e-10)):
        raise ValueError("state is not Hermitian")
    lo = np.linalg.eigvalsh((state.mat + state.mat.conj().T) / 2.0)[0]
    if lo < -tol:
        raise ValueError(f"state is not PSD (min eigenvalue {lo:.3e})")
    if abs(state.trace().real - 1.0) > tol:
        raise ValueError(f"state trace {state.trace().real} != 1")
    p = trace_inner(effect, state).real
    if p < -tol or p > 1.0 + tol:
        raise ValueError(f"probability {p} outside [0, 1] beyond tolerance {tol}")
    return float(min(1.0, max(0.0, p)))
