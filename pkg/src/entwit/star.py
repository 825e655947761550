"""Star-network scenario: N independent sources feed N external parties
and one central party performing a joint measurement.

The central functional is, for a Bell functional B with LHV bound beta,
max_b [ sum_{a,x} c_{a,x} p(a,b|x) - beta * p(b) ]: positive values are
impossible for local models and certify entanglement of the conditioned
measurement element.  LHV bounds come from exact enumeration of
deterministic strategies, and measurement settings for the external
parties are found by a coarse Bloch-sphere grid (for two-qubit
correlator functionals) followed by monotone seesaw refinement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import Operator, product_traces
from .objects import Measurement
from .sampling import Seed, rng_from
from .steering import conditional_states

ENUMERATION_GUARD = 10_000_000
STAR_TABLE_TOL = 1e-9
DETECTION_TOL = 1e-6

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class BellFunctional:
    """Coefficient tensor c[a_1..a_N, x_1..x_N] plus scenario shape."""

    coefficients: np.ndarray
    n_outputs: tuple[int, ...]
    n_inputs: tuple[int, ...]
    name: str = "custom"

    def __post_init__(self):
        outs = tuple(int(o) for o in self.n_outputs)
        ins = tuple(int(i) for i in self.n_inputs)
        if len(outs) != len(ins) or not outs:
            raise ValueError("need matching nonempty output/input shape tuples")
        coeffs = np.array(self.coefficients, dtype=float)
        if coeffs.shape != outs + ins:
            raise ValueError(f"coefficient shape {coeffs.shape} != {outs + ins}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "n_outputs", outs)
        object.__setattr__(self, "n_inputs", ins)
        object.__setattr__(self, "_lhv_cache", None)

    @property
    def n_parties(self) -> int:
        return len(self.n_outputs)

    def lhv_bound(self) -> float:
        if self._lhv_cache is None:
            object.__setattr__(self, "_lhv_cache", lhv_bound(self))
        return self._lhv_cache


def lhv_bound(f: BellFunctional) -> float:
    """Exact maximum of the functional over deterministic local strategies.

    Strategies of the first N-1 parties are enumerated lexicographically;
    the last party's optimal deterministic response is then picked
    input-wise, which is exact and trims one exponential factor.
    """
    sizes = [o ** i for o, i in zip(f.n_outputs, f.n_inputs)]
    if int(np.prod(sizes)) > ENUMERATION_GUARD:
        raise ValueError(f"scenario too large to enumerate (strategy counts {sizes})")
    n = f.n_parties
    coeffs = f.coefficients
    if n == 1:
        return float(sum(np.max(coeffs[:, x]) for x in range(f.n_inputs[0])))
    onehot_lists = []
    for j in range(n - 1):
        hots = []
        for strat in itertools.product(range(f.n_outputs[j]), repeat=f.n_inputs[j]):
            onehot = np.zeros((f.n_outputs[j], f.n_inputs[j]))
            for x, a in enumerate(strat):
                onehot[a, x] = 1.0
            hots.append(onehot)
        onehot_lists.append(hots)
    # einsum subscripts: a_j -> j, x_j -> n + j
    subs_c = list(range(2 * n))
    out_subs = [n - 1] + list(range(n, 2 * n))
    best = -np.inf
    for joint in itertools.product(*onehot_lists):
        operands: list = [coeffs, subs_c]
        for j, onehot in enumerate(joint):
            operands.extend([onehot, [j, n + j]])
        operands.append(out_subs)
        v = np.einsum(*operands)  # [a_N, x_1..x_N]
        w = v.sum(axis=tuple(range(1, n)))  # [a_N, x_N]
        best = max(best, float(w.max(axis=0).sum()))
    return best


def chsh() -> BellFunctional:
    """CHSH in probability form: coefficients (-1)^(a+b+x*y), LHV bound 2."""
    c = np.empty((2, 2, 2, 2))
    for a, b, x, y in itertools.product(range(2), repeat=4):
        c[a, b, x, y] = (-1.0) ** (a + b + x * y)
    return BellFunctional(c, (2, 2), (2, 2), name="chsh")


def mermin() -> BellFunctional:
    """Three-party Mermin functional <A0B0C1>+<A0B1C0>+<A1B0C0>-<A1B1C1>,
    LHV bound 2."""
    c = np.zeros((2, 2, 2, 2, 2, 2))
    signed = {(0, 0, 1): 1.0, (0, 1, 0): 1.0, (1, 0, 0): 1.0, (1, 1, 1): -1.0}
    for (x, y, z), s in signed.items():
        for a, b, cc in itertools.product(range(2), repeat=3):
            c[a, b, cc, x, y, z] = s * (-1.0) ** (a + b + cc)
    return BellFunctional(c, (2, 2, 2), (2, 2, 2), name="mermin")


@dataclass(frozen=True)
class StarTable:
    """p(a_1..a_N, b | x_1..x_N), indexed [a_1..a_N, b, x_1..x_N]."""

    probs: np.ndarray
    n_outputs: tuple[int, ...]
    n_inputs: tuple[int, ...]

    def __post_init__(self):
        outs = tuple(int(o) for o in self.n_outputs)
        ins = tuple(int(i) for i in self.n_inputs)
        probs = np.array(self.probs, dtype=float)
        if probs.shape[: len(outs)] != outs or probs.shape[len(outs) + 1 :] != ins:
            raise ValueError(f"table shape {probs.shape} does not match {outs} + b + {ins}")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "n_outputs", outs)
        object.__setattr__(self, "n_inputs", ins)
        self.validate()

    @property
    def n_parties(self) -> int:
        return len(self.n_outputs)

    @property
    def n_central_outcomes(self) -> int:
        return self.probs.shape[self.n_parties]

    def central_marginal(self) -> np.ndarray:
        """p(b), taken at the first input tuple (input-independent)."""
        n = self.n_parties
        summed = self.probs.sum(axis=tuple(range(n)))  # [b, x_1..x_N]
        return np.array(summed[(slice(None),) + (0,) * n])

    def validate(self, tol: float = STAR_TABLE_TOL) -> None:
        p = self.probs
        if p.min() < -tol or p.max() > 1.0 + tol:
            raise ValueError("probabilities outside [0, 1]")
        n = self.n_parties
        summed = p.sum(axis=tuple(range(n)))  # [b, x...]
        flat = summed.reshape(summed.shape[0], -1)
        dev = float(np.max(np.abs(flat - flat[:, :1])))
        if dev > tol:
            raise ValueError(f"central marginal depends on inputs (dev {dev:.3e})")
        norm = flat.sum(axis=0)
        if np.max(np.abs(norm - 1.0)) > tol:
            raise ValueError("table is not normalized per input tuple")


Settings = tuple[tuple[Measurement, ...], ...]  # settings[party][input]


def _settings_stacks(settings: Settings, dims: tuple[int, ...], outs: tuple[int, ...]):
    """Per-party effect arrays F[x, a, :, :], validated against the scenario."""
    if len(settings) != len(dims):
        raise ValueError(f"need settings for {len(dims)} parties")
    stacks = []
    for j, (per_input, d, n_out) in enumerate(zip(settings, dims, outs)):
        effs = np.empty((len(per_input), n_out, d, d), dtype=complex)
        for x, meas in enumerate(per_input):
            if meas.dims != (d,):
                raise ValueError(f"party {j} input {x}: dims {meas.dims} != ({d},)")
            if meas.n_outcomes != n_out:
                raise ValueError(f"party {j} input {x}: {meas.n_outcomes} outcomes != {n_out}")
            for a, eff in enumerate(meas.effects):
                effs[x, a] = eff.mat
        stacks.append(effs)
    return stacks


def star_quantum_correlations(
    bob: Measurement,
    settings: Settings,
    sources: Sequence | None = None,
) -> StarTable:
    """Born-rule star-network table, same wire convention as swap steering."""
    dims = bob.dims
    n = len(dims)
    outs = tuple(len(settings[j][0].effects) for j in range(n))
    ins = tuple(len(settings[j]) for j in range(n))
    stacks = _settings_stacks(settings, dims, outs)
    conditionals, _ = conditional_states(bob, sources)
    n_b = bob.n_outcomes
    probs = np.empty(outs + (n_b,) + ins)
    flat_stacks = [s.reshape(ins[j] * outs[j], dims[j], dims[j]) for j, s in enumerate(stacks)]
    for k, r_b in enumerate(conditionals):
        t = product_traces(r_b, flat_stacks)  # [(x1 a1), (x2 a2), ...]
        t = t.reshape(tuple(v for j in range(n) for v in (ins[j], outs[j])))
        # reorder to [a_1..a_N, x_1..x_N]
        perm = [2 * j + 1 for j in range(n)] + [2 * j for j in range(n)]
        t = np.transpose(t, perm)
        if np.max(np.abs(t.imag)) > STAR_TABLE_TOL:
            raise AssertionError("Born probabilities should be real")
        probs[(Ellipsis, k) + (slice(None),) * n] = t.real
    np.clip(probs, 0.0, 1.0, out=probs)
    return StarTable(probs, outs, ins)


@dataclass(frozen=True)
class StarLocalModel:
    """Local star-network model: independent hidden variables per source,
    response tables for each external party and for the central party."""

    source_weights: tuple[np.ndarray, ...]
    responses: tuple[np.ndarray, ...]  # responses[j][x_j, a_j, lambda_j]
    central: np.ndarray  # [lambda_1..lambda_N, b]

    def __post_init__(self):
        weights = tuple(np.array(w, dtype=float) for w in self.source_weights)
        responses = tuple(np.array(r, dtype=float) for r in self.responses)
        central = np.array(self.central, dtype=float)
        if len(weights) != len(responses):
            raise ValueError("need one response table per source")
        for j, (w, r) in enumerate(zip(weights, responses)):
            if w.min() < -1e-12 or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError(f"source {j} weights are not a distribution")
            if r.ndim != 3 or r.shape[2] != w.shape[0]:
                raise ValueError(f"response {j} shape {r.shape} mismatches hidden count")
            if r.min() < -1e-12 or np.max(np.abs(r.sum(axis=1) - 1.0)) > 1e-9:
                raise ValueError(f"response {j} is not a conditional distribution")
        counts = tuple(w.shape[0] for w in weights)
        if central.shape[:-1] != counts:
            raise ValueError("central response shape mismatches hidden counts")
        if central.min() < -1e-12 or np.max(np.abs(central.sum(axis=-1) - 1.0)) > 1e-9:
            raise ValueError("central response is not a conditional distribution")
        object.__setattr__(self, "source_weights", weights)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "central", central)


def local_model_correlations(model: StarLocalModel) -> StarTable:
    """Assemble the table of a local star-network model."""
    n = len(model.source_weights)
    outs = tuple(r.shape[1] for r in model.responses)
    ins = tuple(r.shape[0] for r in model.responses)
    # weighted per-party responses q_j[x_j, a_j, l_j]
    qs = [r * w[None, None, :] for r, w in zip(model.responses, model.source_weights)]
    # subscripts: x_j -> j, a_j -> n + j, l_j -> 2n + j, b -> 3n
    operands: list = []
    for j, q in enumerate(qs):
        operands.extend([q, [j, n + j, 2 * n + j]])
    operands.extend([model.central, list(range(2 * n, 3 * n)) + [3 * n]])
    out_subs = list(range(n, 2 * n)) + [3 * n] + list(range(n))
    operands.append(out_subs)
    probs = np.einsum(*operands)
    return StarTable(probs, outs, ins)


def random_local_model(
    seed,
    n_parties: int,
    n_inputs: int = 2,
    n_outputs: int = 2,
    max_hidden: int = 6,
    n_central: int | None = None,
) -> StarLocalModel:
    """Random local model for the bound-property suites."""
    rng = rng_from(seed)
    weights = []
    responses = []
    for _ in range(n_parties):
        n_hidden = int(rng.integers(1, max_hidden + 1))
        w = rng.random(n_hidden) + 1e-3
        weights.append(w / w.sum())
        r = rng.random((n_inputs, n_outputs, n_hidden)) + 1e-3
        responses.append(r / r.sum(axis=1, keepdims=True))
    n_b = int(n_central if n_central is not None else rng.integers(2, 7))
    counts = tuple(w.shape[0] for w in weights)
    central = rng.random(counts + (n_b,)) + 1e-3
    central /= central.sum(axis=-1, keepdims=True)
    return StarLocalModel(tuple(weights), tuple(responses), central)


def functional_E(table: StarTable, f: BellFunctional) -> tuple[float, int]:
    """max_b [ sum_{a,x} c p(a,b|x) - lhv_bound * p(b) ]; ties to lowest b."""
    if f.n_outputs != table.n_outputs or f.n_inputs != table.n_inputs:
        raise ValueError(
            f"functional shape {(f.n_outputs, f.n_inputs)} does not match table "
            f"{(table.n_outputs, table.n_inputs)}"
        )
    n = table.n_parties
    c = f.coefficients
    # move b in front, contract everything else
    p = np.moveaxis(table.probs, n, 0)
    per_b = np.tensordot(p, c, axes=(tuple(range(1, p.ndim)), tuple(range(c.ndim))))
    per_b = per_b - f.lhv_bound() * table.central_marginal()
    idx = int(np.argmax(per_b))
    return float(per_b[idx]), idx


# ---------------------------------------------------------------------------
# Measurement-setting optimization


@dataclass(frozen=True)
class OptimizerBudget:
    """Effort knobs for the external-party setting search."""

    restarts: int = 6
    max_sweeps: int = 300
    grid_points: int = 33
    use_grid: bool = True
    tol: float = 1e-12


def _stacks_to_settings(stacks: list[np.ndarray], dims: tuple[int, ...]) -> Settings:
    settings = []
    for j, effs in enumerate(stacks):
        per_input = []
        for x in range(effs.shape[0]):
            ops = tuple(Operator((dims[j],), effs[x, a]) for a in range(effs.shape[1]))
            per_input.append(Measurement((dims[j],), ops, tol=1e-7))
        settings.append(tuple(per_input))
    return tuple(settings)


def _bell_value(rho_tens: np.ndarray, coeffs: np.ndarray, stacks: list[np.ndarray], n: int) -> float:
    # subscripts: a_j -> j, x_j -> n + j, r_j -> 2n + j, c_j -> 3n + j
    operands: list = [coeffs, list(range(2 * n))]
    operands.extend([rho_tens, list(range(2 * n, 4 * n))])
    for j, g in enumerate(stacks):
        # g[x, a, c, r] contributes F[x,a][c,r]; pair r with rho row, c with col
        operands.extend([g, [n + j, j, 3 * n + j, 2 * n + j]])
    operands.append([])
    return float(np.real(np.einsum(*operands)))


def _party_environment(
    rho_tens: np.ndarray, coeffs: np.ndarray, stacks: list[np.ndarray], n: int, j: int
) -> np.ndarray:
    """K[a_j, x_j, r_j, c_j]: the value equals sum Tr(F_j[x,a] K[a,x])."""
    operands: list = [coeffs, list(range(2 * n))]
    operands.extend([rho_tens, list(range(2 * n, 4 * n))])
    for k, g in enumerate(stacks):
        if k == j:
            continue
        operands.extend([g, [n + k, k, 3 * n + k, 2 * n + k]])
    operands.append([j, n + j, 2 * n + j, 3 * n + j])
    return np.einsum(*operands)


def _seesaw(
    rho: Operator,
    f: BellFunctional,
    init_stacks: list[np.ndarray],
    budget: OptimizerBudget,
) -> tuple[float, list[np.ndarray]]:
    """Alternating exact per-party updates; the value never decreases.

    Each update replaces one party's binary measurements by the projectors
    onto the positive eigenspaces of the environment differences, which is
    the exact optimum given all other parties.
    """
    n = f.n_parties
    dims = rho.dims
    rho_tens = rho.mat.reshape(dims + dims)
    stacks = [s.copy() for s in init_stacks]
    value = _bell_value(rho_tens, f.coefficients, stacks, n)
    for _ in range(budget.max_sweeps):
        prev = value
        for j in range(n):
            env = _party_environment(rho_tens, f.coefficients, stacks, n, j)
            for x in range(f.n_inputs[j]):
                k0 = env[0, x]
                k1 = env[1, x]
                delta = (k0 - k1 + (k0 - k1).conj().T) / 2.0
                vals, vecs = np.linalg.eigh(delta)
                pos = vecs[:, vals > 0.0]
                p0 = pos @ pos.conj().T
                stacks[j][x, 0] = p0
                stacks[j][x, 1] = np.eye(dims[j]) - p0
            new_value = _bell_value(rho_tens, f.coefficients, stacks, n)
            if new_value < value - 1e-9 * max(1.0, abs(value)):
                raise AssertionError(f"seesaw decreased the value: {value} -> {new_value}")
            value = new_value
        if value - prev < budget.tol * max(1.0, abs(value)):
            break
    return value, stacks


def _random_binary_stacks(dims: tuple[int, ...], n_inputs: tuple[int, ...], rng) -> list[np.ndarray]:
    stacks = []
    for d, n_in in zip(dims, n_inputs):
        effs = np.empty((n_in, 2, d, d), dtype=complex)
        for x in range(n_in):
            h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            h = (h + h.conj().T) / 2.0
            vals, vecs = np.linalg.eigh(h)
            rank = int(rng.integers(1, d))
            pos = vecs[:, -rank:]
            p0 = pos @ pos.conj().T
            effs[x, 0] = p0
            effs[x, 1] = np.eye(d) - p0
        stacks.append(effs)
    return stacks


def _correlator_matrix(f: BellFunctional) -> np.ndarray | None:
    """For two-party binary functionals of pure correlator form, the 2x2
    matrix K with c[a,b,x,y] = (-1)^(a+b) K[x,y]; None otherwise."""
    if f.n_parties != 2 or f.n_outputs != (2, 2) or f.n_inputs != (2, 2):
        return None
    c = f.coefficients
    k = np.einsum("abxy,a,b->xy", c, np.array([1.0, -1.0]), np.array([1.0, -1.0])) / 4.0
    rec = np.einsum("xy,a,b->abxy", k, np.array([1.0, -1.0]), np.array([1.0, -1.0]))
    if np.max(np.abs(rec - c)) > 1e-12:
        return None
    return k


def _bloch_grid(points: int) -> np.ndarray:
    thetas = np.linspace(0.0, np.pi, points)
    phis = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    return np.stack(
        [np.sin(tg) * np.cos(pg), np.sin(tg) * np.sin(pg), np.cos(tg)], axis=-1
    ).reshape(-1, 3)


def _grid_init_stacks(rho: Operator, k: np.ndarray, points: int) -> list[np.ndarray]:
    """Coarse grid over the second party's Bloch vectors with the first
    party's optimal response in closed form; returns starting effects."""
    t = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            t[i, j] = float(np.real(np.trace(np.kron(_PAULI[i], _PAULI[j]) @ rho.mat)))
    vecs = _bloch_grid(points)  # (m, 3)
    u = vecs @ t.T  # rows: T b
    dots = u @ u.T
    norms = np.einsum("ij,ij->i", u, u)
    total = np.zeros_like(dots)
    for x in range(2):
        q = (
            k[x, 0] ** 2 * norms[:, None]
            + k[x, 1] ** 2 * norms[None, :]
            + 2.0 * k[x, 0] * k[x, 1] * dots
        )
        total += np.sqrt(np.maximum(q, 0.0))
    flat = int(np.argmax(total))
    i0, i1 = divmod(flat, vecs.shape[0])
    b_vecs = [vecs[i0], vecs[i1]]
    alice_vecs = []
    for x in range(2):
        w = k[x, 0] * (t @ b_vecs[0]) + k[x, 1] * (t @ b_vecs[1])
        nrm = np.linalg.norm(w)
        alice_vecs.append(w / nrm if nrm > 0 else np.array([0.0, 0.0, 1.0]))

    def effect_stack(v0, v1):
        effs = np.empty((2, 2, 2, 2), dtype=complex)
        for x, v in enumerate((v0, v1)):
            obs = v[0] * _PAULI[0] + v[1] * _PAULI[1] + v[2] * _PAULI[2]
            effs[x, 0] = (np.eye(2) + obs) / 2.0
            effs[x, 1] = (np.eye(2) - obs) / 2.0
        return effs

    return [effect_stack(*alice_vecs), effect_stack(*b_vecs)]


def optimize_bell_value(
    rho: Operator,
    f: BellFunctional,
    seed=None,
    budget: OptimizerBudget = OptimizerBudget(),
) -> tuple[float, Settings]:
    """Best Bell value of `f` on the state `rho` over binary projective
    settings of the external parties.  Grid-then-refine for two-qubit
    correlator functionals, seeded random restarts otherwise."""
    if any(o != 2 for o in f.n_outputs):
        raise ValueError("setting optimizer handles binary outcomes only")
    if len(rho.dims) != f.n_parties:
        raise ValueError("state factors do not match the functional parties")
    base = seed if isinstance(seed, Seed) else Seed(0 if seed is None else int(seed))
    inits: list[list[np.ndarray]] = []
    if budget.use_grid and rho.dims == (2, 2):
        k = _correlator_matrix(f)
        if k is not None:
            inits.append(_grid_init_stacks(rho, k, budget.grid_points))
    for r in range(budget.restarts):
        inits.append(_random_binary_stacks(rho.dims, f.n_inputs, base.child(r).rng()))
    best_val = -np.inf
    best_stacks: list[np.ndarray] | None = None
    for init in inits:
        val, stacks = _seesaw(rho, f, init, budget)
        if val > best_val:
            best_val = val
            best_stacks = stacks
    assert best_stacks is not None
    return best_val, _stacks_to_settings(best_stacks, rho.dims)


# ---------------------------------------------------------------------------
# Device-independent detection pipeline


@dataclass(frozen=True)
class PerOutcomeResult:
    outcome: int
    weight: float
    bell_value: float
    e_value: float
    settings: Settings


@dataclass(frozen=True)
class DiReport:
    functional: str
    lhv: float
    per_outcome: tuple[PerOutcomeResult, ...]
    e_value: float
    argmax_outcome: int
    verdict: str
    mode: str
    table_cross_check: float | None = None


def di_detect(
    bob: Measurement,
    f: BellFunctional,
    seed=None,
    budget: OptimizerBudget = OptimizerBudget(),
    per_b_settings: bool = True,
    allow_mixed_elements: bool = False,
    detection_tol: float = DETECTION_TOL,
    sources: Sequence | None = None,
) -> DiReport:
    """Device-independent entanglement detection of a joint measurement.

    Rank-one projective measurements are the covered regime; higher-rank
    or POVM elements are accepted only behind `allow_mixed_elements`, in
    which case a violation is still sound evidence but no completeness is
    claimed.  Per-outcome mode optimizes settings separately for each
    central outcome (the outcome is broadcast in the swapping protocol);
    fixed mode restricts to one setting set for the whole functional.
    """
    if len(bob.dims) != f.n_parties:
        raise ValueError(
            f"measurement acts on {len(bob.dims)} factors, functional has {f.n_parties} parties"
        )
    if not bob.is_rank_one_projective() and not allow_mixed_elements:
        raise ValueError(
            "measurement is not rank-one projective: not covered by the DI argument "
            "(pass allow_mixed_elements=True to search for violations anyway)"
        )
    base = seed if isinstance(seed, Seed) else Seed(0 if seed is None else int(seed))
    beta = f.lhv_bound()
    conditionals, p_b = conditional_states(bob, sources)
    per_outcome: list[PerOutcomeResult] = []
    for k, r_b in enumerate(conditionals):
        if p_b[k] <= 1e-14:
            eye = [
                tuple(
                    Measurement(
                        (d,),
                        (Operator((d,), np.eye(d)), Operator((d,), np.zeros((d, d)))),
                        tol=1e-7,
                    )
                    for _ in range(f.n_inputs[j])
                )
                for j, d in enumerate(bob.dims)
            ]
            per_outcome.append(PerOutcomeResult(k, 0.0, 0.0, 0.0, tuple(eye)))
            continue
        rho_b = Operator(bob.dims, r_b.mat / p_b[k])
        val, settings = optimize_bell_value(rho_b, f, base.child(k), budget)
        per_outcome.append(
            PerOutcomeResult(k, float(p_b[k]), val, float(p_b[k] * (val - beta)), settings)
        )
    if per_b_settings:
        e_values = [r.e_value for r in per_outcome]
        idx = int(np.argmax(e_values))
        e_value = float(e_values[idx])
        mode = "per-outcome-settings"
        table = star_quantum_correlations(bob, per_outcome[idx].settings, sources)
        n = len(bob.dims)
        c = f.coefficients
        p = np.moveaxis(table.probs, n, 0)
        per_b = np.tensordot(p, c, axes=(tuple(range(1, p.ndim)), tuple(range(c.ndim))))
        per_b = per_b - beta * table.central_marginal()
        cross = float(per_b[idx])
    else:
        best = (-np.inf, 0, None)
        for r in per_outcome:
            table = star_quantum_correlations(bob, r.settings, sources)
            value, arg_b = functional_E(table, f)
            if value > best[0]:
                best = (value, arg_b, r.settings)
        e_value, idx = float(best[0]), int(best[1])
        mode = "fixed-settings"
        cross = None
    if e_value > detection_tol:
        verdict = "entangled (DI certified)" if bob.is_rank_one_projective() else (
            "violation found (entangled; outside the completeness regime)"
        )
    else:
        verdict = "not detected" if bob.is_rank_one_projective() else (
            "no violation found (inconclusive for non rank-one-projective measurements)"
        )
    return DiReport(
        functional=f.name,
        lhv=beta,
        per_outcome=tuple(per_outcome),
        e_value=e_value,
        argmax_outcome=idx,
        verdict=verdict,
        mode=mode,
        table_cross_check=cross,
    )
