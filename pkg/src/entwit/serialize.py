"""Human-diffable JSON formats for operators, measurements, witnesses and
scenario files, plus the bundled example files.

Operators are stored as {dims, re, im} with row-major flattening.  All
loads re-validate, so a corrupt or inconsistent file fails at the parse
boundary with a named reason instead of deep inside a computation.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .linalg import Operator, PureVector
from .objects import Measurement, TomographicBasis, bell_basis, computational_basis, tomographic_basis
from .star import BellFunctional, chsh, mermin
from .witness import Witness


class FormatError(ValueError):
    """Raised when a record does not match its schema."""


def _require(record: dict, keys: Sequence[str], what: str) -> None:
    missing = [k for k in keys if k not in record]
    if missing:
        raise FormatError(f"{what}: missing fields {missing}")


def operator_record(op: Operator) -> dict:
    flat = op.mat.reshape(-1)
    return {
        "dims": list(op.dims),
        "re": [float(v) for v in flat.real],
        "im": [float(v) for v in flat.imag],
    }


def load_operator(record: dict) -> Operator:
    _require(record, ["dims", "re", "im"], "operator record")
    dims = tuple(int(d) for d in record["dims"])
    total = int(np.prod(dims))
    re = np.asarray(record["re"], dtype=float)
    im = np.asarray(record["im"], dtype=float)
    if re.shape != (total * total,) or im.shape != (total * total,):
        raise FormatError(
            f"operator record: expected {total * total} entries, got {re.shape[0]}/{im.shape[0]}"
        )
    return Operator(dims, (re + 1j * im).reshape(total, total))


def vector_record(vec: PureVector) -> dict:
    return {
        "dims": list(vec.dims),
        "re": [float(v) for v in vec.amplitudes.real],
        "im": [float(v) for v in vec.amplitudes.imag],
    }


def load_vector(record: dict) -> PureVector:
    _require(record, ["dims", "re", "im"], "vector record")
    dims = tuple(int(d) for d in record["dims"])
    re = np.asarray(record["re"], dtype=float)
    im = np.asarray(record["im"], dtype=float)
    return PureVector(dims, re + 1j * im)


def measurement_record(m: Measurement) -> dict:
    return {
        "name": m.name,
        "dims": list(m.dims),
        "effects": [operator_record(e) for e in m.effects],
    }


def load_measurement(record: dict, tol: float = 1e-9) -> Measurement:
    _require(record, ["dims", "effects"], "measurement record")
    dims = tuple(int(d) for d in record["dims"])
    effects = tuple(load_operator(e) for e in record["effects"])
    try:
        return Measurement(dims, effects, name=record.get("name"), tol=tol)
    except ValueError as exc:
        raise FormatError(f"measurement record: {exc}") from exc


def basis_record(b: TomographicBasis) -> dict:
    record: dict[str, Any] = {"basis_id": b.basis_id, "d": b.d}
    if not b.basis_id.startswith("standard-d"):
        record["projectors"] = [operator_record(p) for p in b.projectors]
    return record


def load_basis(record: dict | str) -> TomographicBasis:
    if isinstance(record, str):
        record = {"basis_id": record}
    basis_id = record.get("basis_id", "")
    if basis_id.startswith("standard-d"):
        return tomographic_basis(int(basis_id.removeprefix("standard-d")))
    if "projectors" not in record:
        raise FormatError(f"basis record '{basis_id}': custom basis needs explicit projectors")
    projs = tuple(load_operator(p) for p in record["projectors"])
    return TomographicBasis(int(record["d"]), projs, basis_id=basis_id or "custom")


def witness_record(w: Witness) -> dict:
    record: dict[str, Any] = {
        "name": w.name,
        "operator": operator_record(w.operator),
        "basis_id": w.basis_id,
        "scale": w.scale,
        "tolerances": {"hermiticity": 1e-10, "reconstruction": 1e-8},
    }
    if w.beta is not None:
        record["beta"] = {"shape": list(w.beta.shape), "values": [float(v) for v in w.beta.reshape(-1)]}
        record["bases"] = [basis_record(b) for b in w.bases]
    if w.product_terms is not None:
        record["product_terms"] = [
            {"coefficient": c, "factors": [operator_record(op) for op in ops]}
            for c, ops in w.product_terms
        ]
    return record


def load_witness(record: dict) -> Witness:
    _require(record, ["operator"], "witness record")
    op = load_operator(record["operator"])
    beta = None
    bases = None
    if "beta" in record:
        shape = tuple(int(s) for s in record["beta"]["shape"])
        beta = np.asarray(record["beta"]["values"], dtype=float).reshape(shape)
        if "bases" not in record:
            raise FormatError("witness record: beta requires its bases")
        bases = tuple(load_basis(b) for b in record["bases"])
    terms = None
    if "product_terms" in record:
        terms = tuple(
            (float(t["coefficient"]), tuple(load_operator(f) for f in t["factors"]))
            for t in record["product_terms"]
        )
    try:
        return Witness(op, beta=beta, bases=bases, product_terms=terms, name=record.get("name"))
    except ValueError as exc:
        raise FormatError(f"witness record: {exc}") from exc


def table_record(table) -> dict:
    """CorrelationTable as a plain record (shape + row-major values)."""
    return {
        "site_dims": list(table.site_dims),
        "basis_id": table.basis_id,
        "shape": list(table.probs.shape),
        "probs": [float(v) for v in table.probs.reshape(-1)],
    }


def settings_record(settings) -> list:
    """Per-party, per-input external measurements as nested records."""
    return [[measurement_record(m) for m in per_input] for per_input in settings]


# ---------------------------------------------------------------------------
# Named built-ins and bundled files

_BUILTIN_MEASUREMENTS = {
    "bell-basis": bell_basis,
    "computational-2x2": lambda: computational_basis((2, 2)),
    "computational-2x3": lambda: computational_basis((2, 3)),
}


def builtin_measurement(name: str) -> Measurement:
    if name not in _BUILTIN_MEASUREMENTS:
        raise FormatError(
            f"unknown builtin measurement '{name}' (have {sorted(_BUILTIN_MEASUREMENTS)})"
        )
    return _BUILTIN_MEASUREMENTS[name]()


def builtin_functional(name: str) -> BellFunctional:
    table = {"chsh": chsh, "mermin": mermin}
    if name not in table:
        raise FormatError(f"unknown builtin functional '{name}' (have {sorted(table)})")
    return table[name]()


def bundled_path(name: str) -> Path:
    """Path of a bundled example file shipped with the package."""
    root = resources.files("entwit").joinpath("data")
    path = Path(str(root.joinpath(name)))
    if not path.exists():
        available = sorted(p.name for p in Path(str(root)).glob("*.json"))
        raise FormatError(f"no bundled file '{name}' (have {available})")
    return path


def resolve_measurement_arg(arg: str, tol: float = 1e-9) -> tuple[Measurement, bytes]:
    """CLI measurement argument: a file path, 'builtin:<name>' or
    'bundled:<file>'.  Returns the measurement plus the bytes that were
    hashed for the run record."""
    if arg.startswith("builtin:"):
        m = builtin_measurement(arg.removeprefix("builtin:"))
        payload = json.dumps(measurement_record(m), sort_keys=True).encode()
        return m, payload
    if arg.startswith("bundled:"):
        path = bundled_path(arg.removeprefix("bundled:"))
    else:
        path = Path(arg)
    if not path.exists():
        raise FormatError(f"no such file: {path}")
    payload = path.read_bytes()
    try:
        record = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return load_measurement(record, tol=tol), payload


def resolve_input_path(arg: str | Path) -> Path:
    """Map 'bundled:<file>' to the packaged data file, otherwise a path."""
    if isinstance(arg, str) and arg.startswith("bundled:"):
        return bundled_path(arg.removeprefix("bundled:"))
    return Path(arg)


def load_json(path: str | Path) -> dict:
    p = resolve_input_path(path)
    if not p.exists():
        raise FormatError(f"no such file: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{p}: not valid JSON ({exc})") from exc


def dump_json(path: str | Path, obj: Any) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")
