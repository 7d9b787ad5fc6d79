"""Frames, the weighted analysis map, frame bounds and frame file I/O.

Inner products are linear in the first slot: ``<x, y> = sum_i x_i * conj(y_i)``.
A weighted frame ``(x_j, mu_j)`` acts exactly like the unweighted frame with
vectors ``sqrt(mu_j) x_j``; this is how discretized continuous frames are
modeled.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    FieldMismatch,
    FrameFormatError,
    InvariantViolation,
)


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.complex128 if self is Field.COMPLEX else np.float64


def inner(x, y):
    """``<x, y>``, linear in ``x`` and conjugate-linear in ``y``."""
    return np.vdot(y, x)


def norm(x):
    return float(np.linalg.norm(x))


@dataclass(frozen=True, eq=False)
class FrameSpec:
    """A finite weighted frame over R^n or C^n.

    ``vectors`` has shape ``(m, n)``: row ``j`` is the frame vector ``x_j``.
    """

    field: Field
    vectors: np.ndarray
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        fld = Field(self.field)
        vecs = np.array(self.vectors, dtype=fld.dtype, copy=True)
        if vecs.ndim != 2 or vecs.shape[0] < 1 or vecs.shape[1] < 1:
            raise InvariantViolation("shape", f"vectors must be a non-empty (m, n) array, got shape {vecs.shape}")
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if w.shape[0] != vecs.shape[0]:
            raise InvariantViolation("weights_length", f"{w.shape[0]} weights for {vecs.shape[0]} vectors")
        if not np.all(np.isfinite(vecs)):
            raise InvariantViolation("finite_entries", "frame vectors contain NaN or Inf")
        if not np.all(np.isfinite(w)):
            raise InvariantViolation("finite_weights", "weights contain NaN or Inf")
        if np.any(w < 0):
            bad = int(np.flatnonzero(w < 0)[0])
            raise InvariantViolation("nonnegative_weights", f"weight {bad} is {w[bad]!r}")
        vecs.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "field", fld)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def is_complex(self) -> bool:
        return self.field is Field.COMPLEX

    @property
    def effective_vectors(self) -> np.ndarray:
        """Rows ``sqrt(mu_j) x_j``."""
        return np.sqrt(self.weights)[:, None] * self.vectors

    @property
    def analysis_matrix(self) -> np.ndarray:
        """Matrix ``T`` with ``T @ x = (sqrt(mu_j) <x, x_j>)_j``."""
        return self.effective_vectors.conj()

    def frame_operator(self) -> np.ndarray:
        e = self.effective_vectors
        return e.T @ e.conj()

    def normalized(self) -> "FrameSpec":
        """Rescale every nonzero vector to unit norm, folding ``||x_j||^2`` into its weight.

        Zero vectors are dropped; they contribute nothing to any coefficient.
        """
        norms = np.linalg.norm(self.vectors, axis=1)
        keep = norms > 0
        return FrameSpec(
            self.field,
            self.vectors[keep] / norms[keep, None],
            self.weights[keep] * norms[keep] ** 2,
            self.label,
        )

    def with_weights(self, weights) -> "FrameSpec":
        return FrameSpec(self.field, self.vectors, weights, self.label)

    def augmented(self, vector, weight=1.0) -> "FrameSpec":
        v = np.asarray(vector, dtype=self.field.dtype).reshape(1, -1)
        return FrameSpec(
            self.field,
            np.vstack([self.vectors, v]),
            np.append(self.weights, weight),
            self.label,
        )

    def as_vector(self, x) -> np.ndarray:
        return as_vector(self, x)


def as_vector(frame: FrameSpec, x) -> np.ndarray:
    """Coerce ``x`` to a vector of ``frame``'s field and dimension."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.shape[0] != frame.dim:
        raise DimensionMismatch(f"vector has dimension {arr.shape[0]}, frame has dimension {frame.dim}")
    if np.iscomplexobj(arr) and not frame.is_complex:
        if np.any(arr.imag != 0):
            raise FieldMismatch("complex vector given for a real frame")
        arr = arr.real
    out = arr.astype(frame.field.dtype)
    if not np.all(np.isfinite(out)):
        raise InvariantViolation("finite_entries", "vector contains NaN or Inf")
    return out


def check_pair(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"vectors have shapes {x.shape} and {y.shape}")
    if np.iscomplexobj(x) != np.iscomplexobj(y):
        raise FieldMismatch("vectors belong to different fields")
    return x, y


def analyze(frame: FrameSpec, x) -> np.ndarray:
    """Weighted analysis coefficients ``(sqrt(mu_j) <x, x_j>)_j``."""
    return frame.analysis_matrix @ as_vector(frame, x)


@dataclass(frozen=True)
class MagnitudeMeasurement:
    """``values[j] = sqrt(mu_j) |<x, x_j>|``."""

    values: np.ndarray
    weights: np.ndarray

    @property
    def raw(self) -> np.ndarray:
        """Unweighted magnitudes ``|<x, x_j>|`` (zero where the weight is zero)."""
        w = np.sqrt(self.weights)
        out = np.zeros_like(self.values)
        nz = w > 0
        out[nz] = self.values[nz] / w[nz]
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["j", "mu_j", "abs_coeff"])
        for j, (mu, a) in enumerate(zip(self.weights, self.raw)):
            wr.writerow([j, repr(float(mu)), repr(float(a))])
        return buf.getvalue()


def magnitudes(frame: FrameSpec, x) -> MagnitudeMeasurement:
    return MagnitudeMeasurement(np.abs(analyze(frame, x)), np.asarray(frame.weights))


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    is_frame: bool

    def to_dict(self):
        return {"A": self.lower, "B": self.upper, "is_frame": self.is_frame}


def frame_bounds(frame: FrameSpec, tol: float = 1e-12) -> FrameBounds:
    """Extreme eigenvalues of the weighted frame operator.

    A lower bound below ``tol * max(B, 1)`` is reported as exactly 0 and the
    family is flagged as not spanning.
    """
    ev = np.linalg.eigvalsh(frame.frame_operator())
    lo, hi = float(ev[0]), float(ev[-1])
    if lo <= tol * max(hi, 1.0):
        return FrameBounds(0.0, max(hi, 0.0), False)
    return FrameBounds(lo, hi, True)


# ---------------------------------------------------------------- file I/O


def _parse_scalar(value, fld: Field, where: str):
    if fld is Field.COMPLEX:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise FrameFormatError(f"complex entry must be [re, im], got {value!r}", where)
            re, im = (_parse_scalar(v, Field.REAL, where) for v in value)
            return complex(re, im)
        value = _parse_scalar(value, Field.REAL, where)
        return complex(value, 0.0)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FrameFormatError(f"expected a number, got {value!r}", where)
    out = float(value)
    if not math.isfinite(out):
        raise InvariantViolation("finite_entries", f"{where}: non-finite value {value!r}")
    return out


def frame_from_dict(doc) -> FrameSpec:
    if not isinstance(doc, dict):
        raise FrameFormatError("top level must be an object", "$")
    for key in ("field", "dim", "weights", "vectors"):
        if key not in doc:
            raise FrameFormatError(f"missing key {key!r}", "$")
    try:
        fld = Field(doc["field"])
    except ValueError:
        raise FrameFormatError(f"field must be 'real' or 'complex', got {doc['field']!r}", "$.field") from None
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise InvariantViolation("positive_dim", f"dim must be a positive integer, got {dim!r}")
    vectors = doc["vectors"]
    weights = doc["weights"]
    if not isinstance(vectors, list) or not vectors:
        raise InvariantViolation("nonempty", "vectors must be a non-empty list")
    if not isinstance(weights, list):
        raise FrameFormatError("weights must be a list", "$.weights")
    if len(weights) != len(vectors):
        raise InvariantViolation("weights_length", f"{len(weights)} weights for {len(vectors)} vectors")
    rows = []
    for j, row in enumerate(vectors):
        where = f"$.vectors[{j}]"
        if not isinstance(row, list):
            raise FrameFormatError("each vector must be a list", where)
        if len(row) != dim:
            raise InvariantViolation("ragged_rows", f"{where} has {len(row)} entries, expected dim={dim}")
        rows.append([_parse_scalar(v, fld, f"{where}[{i}]") for i, v in enumerate(row)])
    ws = [_parse_scalar(v, Field.REAL, f"$.weights[{j}]") for j, v in enumerate(weights)]
    for j, w in enumerate(ws):
        if w < 0:
            raise InvariantViolation("nonnegative_weights", f"$.weights[{j}] = {w!r} is negative")
    return FrameSpec(fld, np.array(rows, dtype=fld.dtype), np.array(ws), str(doc.get("label", "")))


def validate_frame(raw) -> FrameSpec:
    """Parse and validate a frame file (JSON, as bytes or str)."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FrameFormatError(f"not UTF-8 ({exc.reason})", f"byte {exc.start}") from None
    try:
        doc = json.loads(raw, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FrameFormatError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    return frame_from_dict(doc)


def _reject_constant(name):
    raise InvariantViolation("finite_entries", f"non-finite literal {name} in frame file")


def frame_to_dict(frame: FrameSpec) -> dict:
    if frame.is_complex:
        vecs = [[[float(v.real), float(v.imag)] for v in row] for row in frame.vectors]
    else:
        vecs = [[float(v) for v in row] for row in frame.vectors]
    doc = {
        "field": frame.field.value,
        "dim": frame.dim,
        "weights": [float(w) for w in frame.weights],
        "vectors": vecs,
    }
    if frame.label:
        doc["label"] = frame.label
    return doc


def dumps_frame(frame: FrameSpec) -> str:
    return json.dumps(frame_to_dict(frame), indent=1) + "\n"


def load_frame(path) -> FrameSpec:
    with open(path, "rb") as fh:
        return validate_frame(fh.read())


# -------------------------------------------------------------- generators


def onb_frame(n: int, field="real") -> FrameSpec:
    fld = Field(field)
    return FrameSpec(fld, np.eye(n, dtype=fld.dtype), np.ones(n), f"onb{n}")


def mercedes_frame() -> FrameSpec:
    ang = np.deg2rad([0.0, 120.0, 240.0])
    return FrameSpec(Field.REAL, np.column_stack([np.cos(ang), np.sin(ang)]), np.ones(3), "mercedes")


def random_frame(n: int, m: int, seed=0, field="real") -> FrameSpec:
    """``m`` unit vectors with i.i.d. standard normal entries before normalization."""
    fld = Field(field)
    rng = np.random.default_rng(seed)
    if fld is Field.COMPLEX:
        v = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    else:
        v = rng.standard_normal((m, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return FrameSpec(fld, v, np.ones(m), f"random_{fld.value}_{n}x{m}_seed{seed}")


def harmonic_frame(n: int, m: int) -> FrameSpec:
    """Rows of the ``m``-point DFT restricted to ``n`` frequencies, unit norm."""
    j = np.arange(m)[:, None]
    k = np.arange(n)[None, :]
    v = np.exp(2j * np.pi * j * k / m) / math.sqrt(n)
    return FrameSpec(Field.COMPLEX, v, np.ones(m), f"harmonic_{n}x{m}")


def random_unit(rng, n, field="real"):
    if Field(field) is Field.COMPLEX:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        v = rng.standard_normal(n)
    return v / np.linalg.norm(v)
