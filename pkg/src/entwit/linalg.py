"""Dense complex linear algebra on small composite Hilbert spaces.

Everything here is deterministic, pure and immutable: operators and state
vectors carry their tensor-factor dimensions, and all manipulations
(Kronecker products, partial traces, partial transposes, eigensolves)
return new objects.  Total dimensions stay small (<= ~256), so dense
storage is the right trade-off.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ValueError("dims must be nonempty")
    if any(d < 2 for d in dims):
        raise ValueError(f"every factor dimension must be >= 2, got {dims}")
    return dims


@dataclass(frozen=True)
class Operator:
    """Complex square matrix tagged with its tensor-factor dimensions."""

    dims: tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        mat = np.array(self.mat, dtype=complex)
        total = int(np.prod(dims))
        if mat.shape != (total, total):
            raise ValueError(
                f"matrix shape {mat.shape} does not match dims {dims} "
                f"(expected {(total, total)})"
            )
        if not np.all(np.isfinite(mat.real)) or not np.all(np.isfinite(mat.imag)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", _freeze(mat))

    @property
    def total_dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    def dagger(self) -> "Operator":
        return Operator(self.dims, self.mat.conj().T)

    def transpose(self) -> "Operator":
        return Operator(self.dims, self.mat.T)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return bool(np.max(np.abs(self.mat - self.mat.conj().T)) <= tol)

    def __add__(self, other: "Operator") -> "Operator":
        self._require_same_dims(other)
        return Operator(self.dims, self.mat + other.mat)

    def __sub__(self, other: "Operator") -> "Operator":
        self._require_same_dims(other)
        return Operator(self.dims, self.mat - other.mat)

    def __neg__(self) -> "Operator":
        return Operator(self.dims, -self.mat)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.dims, self.mat * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._require_same_dims(other)
        return Operator(self.dims, self.mat @ other.mat)

    def _require_same_dims(self, other: "Operator") -> None:
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")

    def allclose(self, other: "Operator", tol: float = 1e-12) -> bool:
        return self.dims == other.dims and bool(
            np.max(np.abs(self.mat - other.mat)) <= tol
        )


@dataclass(frozen=True)
class PureVector:
    """State vector on a composite space, tagged with factor dimensions."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amp = np.array(self.amplitudes, dtype=complex).reshape(-1)
        total = int(np.prod(dims))
        if amp.shape != (total,):
            raise ValueError(
                f"amplitude count {amp.shape[0]} does not match dims {dims}"
            )
        if not np.all(np.isfinite(amp.real)) or not np.all(np.isfinite(amp.imag)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _freeze(amp))

    @property
    def total_dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "PureVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureVector(self.dims, self.amplitudes / n)

    def projector(self) -> Operator:
        return Operator(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureVector") -> complex:
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def identity(dims: Sequence[int]) -> Operator:
    dims = _check_dims(dims)
    return Operator(dims, np.eye(int(np.prod(dims))))


def basis_vector(dims: Sequence[int], index: int) -> PureVector:
    """Computational-basis vector |index> on the composite space."""
    dims = _check_dims(dims)
    amp = np.zeros(int(np.prod(dims)), dtype=complex)
    amp[index] = 1.0
    return PureVector(dims, amp)


def tensor_product(a: Operator, b: Operator) -> Operator:
    """Kronecker product; dims concatenate."""
    return Operator(a.dims + b.dims, np.kron(a.mat, b.mat))


def tensor_many(ops: Sequence[Operator]) -> Operator:
    if not ops:
        raise ValueError("need at least one operator")
    out = ops[0]
    for op in ops[1:]:
        out = tensor_product(out, op)
    return out


def tensor_vector(vectors: Sequence[PureVector]) -> PureVector:
    if not vectors:
        raise ValueError("need at least one vector")
    amp = vectors[0].amplitudes
    dims: tuple[int, ...] = vectors[0].dims
    for v in vectors[1:]:
        amp = np.kron(amp, v.amplitudes)
        dims = dims + v.dims
    return PureVector(dims, amp)


def _normalize_factor_indices(dims: tuple[int, ...], which: Iterable[int] | int) -> tuple[int, ...]:
    if isinstance(which, (int, np.integer)):
        which = (int(which),)
    idx = tuple(sorted({int(i) for i in which}))
    if not idx:
        raise ValueError("factor index set must be nonempty")
    if idx[0] < 0 or idx[-1] >= len(dims):
        raise ValueError(f"factor indices {idx} out of range for {len(dims)} factors")
    return idx


def partial_trace(op: Operator, keep: Iterable[int] | int) -> Operator:
    """Trace out all factors not listed in `keep` (original order preserved)."""
    keep_idx = _normalize_factor_indices(op.dims, keep)
    n = op.n_factors
    tens = op.mat.reshape(op.dims + op.dims)
    row = [chr(ord("a") + i) for i in range(n)]
    col = [chr(ord("a") + n + i) for i in range(n)]
    for i in range(n):
        if i not in keep_idx:
            col[i] = row[i]
    out = "".join(row[i] for i in keep_idx) + "".join(chr(ord("a") + n + i) for i in keep_idx)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, tens)
    new_dims = tuple(op.dims[i] for i in keep_idx)
    total = int(np.prod(new_dims))
    return Operator(new_dims, reduced.reshape(total, total))


def partial_transpose(op: Operator, factor: Iterable[int] | int) -> Operator:
    """Transpose the chosen factor(s).  A pure index permutation, so applying
    it twice returns the input bit-exactly."""
    idx = _normalize_factor_indices(op.dims, factor)
    n = op.n_factors
    tens = op.mat.reshape(op.dims + op.dims)
    axes = list(range(2 * n))
    for i in idx:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    out = np.ascontiguousarray(tens.transpose(axes)).reshape(op.mat.shape)
    return Operator(op.dims, out)


def permute_factors(op: Operator, perm: Sequence[int]) -> Operator:
    """Reorder the tensor factors; perm[k] is the old position of new factor k."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(op.n_factors)):
        raise ValueError(f"perm {perm} is not a permutation of {op.n_factors} factors")
    n = op.n_factors
    tens = op.mat.reshape(op.dims + op.dims)
    axes = list(perm) + [n + p for p in perm]
    new_dims = tuple(op.dims[p] for p in perm)
    out = np.ascontiguousarray(tens.transpose(axes)).reshape(op.mat.shape)
    return Operator(new_dims, out)


def hermitian_eig(op: Operator, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, list[PureVector]]:
    """Eigendecomposition of a Hermitian operator.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors.  The input is symmetrized first; deviations from
    Hermiticity beyond `tol` raise.
    """
    dev = np.max(np.abs(op.mat - op.mat.conj().T))
    if dev > tol:
        raise ValueError(f"operator is not Hermitian within {tol} (deviation {dev:.3e})")
    herm = (op.mat + op.mat.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(herm)
    vectors = [PureVector(op.dims, vecs[:, k]) for k in range(vecs.shape[1])]
    return vals, vectors


def trace_inner(a: Operator, b: Operator) -> complex:
    """Tr(a @ b) without forming the product."""
    if a.total_dim != b.total_dim:
        raise ValueError(f"total dimension mismatch: {a.total_dim} vs {b.total_dim}")
    return complex(np.einsum("ij,ji->", a.mat, b.mat))


def is_psd(op: Operator, tol: float = PSD_TOL) -> bool:
    """True iff the (Hermitian) operator has min eigenvalue >= -tol."""
    dev = np.max(np.abs(op.mat - op.mat.conj().T))
    if dev > max(tol, HERMITICITY_TOL):
        raise ValueError(f"operator is not Hermitian (deviation {dev:.3e})")
    herm = (op.mat + op.mat.conj().T) / 2.0
    return bool(np.linalg.eigvalsh(herm)[0] >= -tol)


def min_eigenvalue(op: Operator, tol: float = HERMITICITY_TOL) -> float:
    vals, _ = hermitian_eig(op, tol=tol)
    return float(vals[0])


def product_traces(op: Operator, stacks: Sequence[np.ndarray]) -> np.ndarray:
    """Tensor t[i1..iN] = Tr[(tau_{i1} x ... x tau_{iN}) op].

    `stacks[j]` is an array of shape (m_j, d_j, d_j) holding the local
    operators for site j.  Used both for tomographic expansions and for
    assembling correlation tables.
    """
    n = op.n_factors
    if len(stacks) != n:
        raise ValueError(f"need one stack per factor ({n}), got {len(stacks)}")
    tens = op.mat.reshape(op.dims + op.dims)
    # Tr[(x_j A_j) M] = sum_{r,c} M[r,c] * prod_j A_j[c_j, r_j]
    for j in range(n):
        stack = np.asarray(stacks[j])
        if stack.shape[1:] != (op.dims[j], op.dims[j]):
            raise ValueError(
                f"stack {j} has local shape {stack.shape[1:]}, expected "
                f"{(op.dims[j], op.dims[j])}"
            )
        # current tens axes: (i1..ij-1, r_j..r_N, c_j..c_N); contract (r_j, c_j)
        n_rem = n - j
        tens = np.tensordot(stack, tens, axes=([2, 1], [j, j + n_rem]))
        # tensordot puts the new index first; rotate it behind earlier i's
        tens = np.moveaxis(tens, 0, j)
    return tens
