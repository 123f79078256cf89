"""Frame system documents: a deterministic on-disk format.

A document is a UTF-8 JSON object with sorted keys, floats printed at 17
significant digits (which round-trips IEEE doubles exactly), and a trailing
newline, so that regenerating a committed file is byte-identical.  Real
documents store plain numbers; complex documents store every matrix entry as
an [re, im] pair.  Subspaces are stored as lists of basis vectors (each of
ambient length), local operators as row-major d_j x n matrices, and named
square operators (such as "k") in the ``operators`` map.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field
from importlib import resources
from pathlib import Path

import numpy as np

from .model import (
    BoundedOperator,
    GFusionSystem,
    HilbertSpace,
    LocalOperator,
    WeightedSubspace,
)
from .numerics import InputError

__all__ = [
    "FrameDocument",
    "canonical_json",
    "dumps",
    "loads",
    "save_document",
    "load_document",
    "to_system",
    "from_system",
    "load_packaged_fixture",
    "packaged_fixture_names",
    "oracle_sidecar_path",
]


@dataclass
class FrameDocument:
    """Plain-data image of a frame system plus named operators."""

    field: str
    dim: int
    weights: list
    subspaces: list
    local_operators: list
    operators: dict = dataclass_field(default_factory=dict)
    meta: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if self.field not in ("real", "complex"):
            raise InputError(f"field must be 'real' or 'complex', got {self.field!r}")
        if not isinstance(self.dim, int) or self.dim <= 0:
            raise InputError(f"dim must be a positive integer, got {self.dim!r}")
        counts = (len(self.weights), len(self.subspaces), len(self.local_operators))
        if len(set(counts)) != 1:
            raise InputError(f"member counts disagree: {counts}")


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise InputError(f"non-finite value {x!r} cannot be serialized")
    return format(float(x), ".17g")


def _emit(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_emit(v) for v in obj) + "]"
    if isinstance(obj, dict):
        parts = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise InputError("document keys must be strings")
            parts.append(json.dumps(key, ensure_ascii=False) + ":" + _emit(obj[key]))
        return "{" + ",".join(parts) + "}"
    raise InputError(f"cannot serialize value of type {type(obj).__name__}")


def canonical_json(data) -> str:
    """Deterministic JSON text: sorted keys, 17-digit floats, one newline."""
    return _emit(data) + "\n"


def _encode_scalar(value, complex_field: bool):
    if complex_field:
        value = complex(value)
        return [float(value.real), float(value.imag)]
    value = complex(value)
    if value.imag != 0.0:
        raise InputError("complex entry in a document tagged real")
    return float(value.real)


def _decode_scalar(value, complex_field: bool):
    if complex_field:
        if not (isinstance(value, list) and len(value) == 2):
            raise InputError(f"expected [re, im] pair, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"expected a real number, got {value!r}")
    return float(value)


def _encode_matrix(matrix, complex_field: bool):
    matrix = np.asarray(matrix)
    return [[_encode_scalar(v, complex_field) for v in row] for row in matrix]


def _decode_matrix(rows, complex_field: bool, label: str):
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{label} must be a non-empty list of rows")
    decoded = [[_decode_scalar(v, complex_field) for v in row] for row in rows]
    widths = {len(row) for row in decoded}
    if len(widths) != 1:
        raise InputError(f"{label} rows have uneven lengths")
    dtype = np.complex128 if complex_field else np.float64
    return np.array(decoded, dtype=dtype)


def _document_data(doc: FrameDocument) -> dict:
    complex_field = doc.field == "complex"
    return {
        "field": doc.field,
        "dim": doc.dim,
        "weights": [float(w) for w in doc.weights],
        "subspaces": [_encode_matrix(vs, complex_field) for vs in doc.subspaces],
        "local_operators": [_encode_matrix(m, complex_field) for m in doc.local_operators],
        "operators": {name: _encode_matrix(m, complex_field)
                      for name, m in doc.operators.items()},
        "meta": doc.meta,
    }


def dumps(doc: FrameDocument) -> str:
    return canonical_json(_document_data(doc))


def loads(text: str) -> FrameDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"document is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("document root must be an object")
    required = {"field", "dim", "weights", "subspaces", "local_operators"}
    missing = required - set(data)
    if missing:
        raise InputError(f"document is missing keys: {sorted(missing)}")
    field = data["field"]
    if field not in ("real", "complex"):
        raise InputError(f"field must be 'real' or 'complex', got {field!r}")
    complex_field = field == "complex"
    dim = data["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise InputError(f"dim must be an integer, got {dim!r}")
    weights = data["weights"]
    if not isinstance(weights, list):
        raise InputError("weights must be a list")
    subspaces = [_decode_matrix(vs, complex_field, f"subspace {i}")
                 for i, vs in enumerate(data["subspaces"])]
    local_ops = [_decode_matrix(m, complex_field, f"local operator {i}")
                 for i, m in enumerate(data["local_operators"])]
    operators = {}
    for name, m in (data.get("operators") or {}).items():
        operators[name] = _decode_matrix(m, complex_field, f"operator {name!r}")
    meta = data.get("meta") or {}
    if not isinstance(meta, dict):
        raise InputError("meta must be an object")
    return FrameDocument(
        field=field,
        dim=dim,
        weights=[float(w) for w in weights],
        subspaces=subspaces,
        local_operators=local_ops,
        operators=operators,
        meta=meta,
    )


def save_document(doc: FrameDocument, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def load_document(path) -> FrameDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def to_system(doc: FrameDocument):
    """Build the in-memory system and operator map a document describes."""
    space = HilbertSpace(doc.field, doc.dim)
    members = []
    for i, (weight, vectors, local) in enumerate(
            zip(doc.weights, doc.subspaces, doc.local_operators)):
        basis_rows = np.asarray(vectors)
        if basis_rows.ndim != 2 or basis_rows.shape[1] != doc.dim:
            raise InputError(f"subspace {i} vectors must have length {doc.dim}")
        basis = basis_rows.T.astype(space.dtype)
        local = np.asarray(local).astype(space.dtype)
        members.append((WeightedSubspace(basis, float(weight)), LocalOperator(local)))
    system = GFusionSystem(space, tuple(members))
    operators = {}
    for name, matrix in doc.operators.items():
        matrix = np.asarray(matrix)
        if matrix.shape != (doc.dim, doc.dim):
            raise InputError(f"operator {name!r} must be {doc.dim}x{doc.dim}")
        operators[name] = BoundedOperator(matrix.astype(space.dtype))
    return system, operators


def from_system(system: GFusionSystem, operators=None, meta=None) -> FrameDocument:
    """Flatten a system (plus named operators) into document data."""
    complex_field = system.space.field == "complex"
    subspaces = []
    local_ops = []
    weights = []
    for sub, op in system.members:
        weights.append(float(sub.weight))
        subspaces.append([list(sub.basis[:, i]) for i in range(sub.basis.shape[1])])
        local_ops.append([list(row) for row in op.matrix])
    op_map = {}
    for name, op in (operators or {}).items():
        matrix = op.matrix if isinstance(op, BoundedOperator) else np.asarray(op)
        op_map[name] = [list(row) for row in matrix]
    return FrameDocument(
        field="complex" if complex_field else "real",
        dim=system.dim,
        weights=weights,
        subspaces=subspaces,
        local_operators=local_ops,
        operators=op_map,
        meta=dict(meta or {}),
    )


def _fixture_filename(name: str) -> str:
    return name.lower().replace("-", "_") + ".json"


def load_packaged_fixture(name: str) -> FrameDocument:
    """Load one of the fixture documents shipped inside the package."""
    filename = _fixture_filename(name)
    root = resources.files(__package__) / "fixtures"
    target = root / filename
    try:
        text = target.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as exc:
        raise InputError(f"no packaged fixture named {name!r}") from exc
    return loads(text)


def packaged_fixture_names() -> list:
    """Names of all fixture documents shipped inside the package."""
    root = resources.files(__package__) / "fixtures"
    names = []
    try:
        entries = list(root.iterdir())
    except (FileNotFoundError, OSError):
        return []
    for entry in entries:
        stem = entry.name
        if stem.endswith(".oracle.json"):
            continue
        if stem.endswith(".json"):
            names.append(stem[:-5].upper().replace("_", "-"))
    return sorted(names)


def oracle_sidecar_path(document_path) -> Path:
    """The sidecar path convention: <name>.oracle.json next to <name>.json."""
    p = Path(document_path)
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    return p.with_name(stem + ".oracle.json")
