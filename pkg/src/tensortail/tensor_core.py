"""Dense complex tensors with an explicit row/column mode split.

A tensor here is a multidimensional array whose modes are partitioned into
M row modes and N column modes.  Contracting the column modes of one tensor
against the row modes of another behaves exactly like matrix multiplication
of the corresponding unfoldings.  Every operation in this module is defined
so that ``unfold`` is a *-algebra isomorphism onto ordinary complex
matrices: it preserves products, sums, adjoints and traces.  That makes the
whole algebra testable against plain ``numpy`` linear algebra.

Index linearization is row-major (C order) over the row modes and over the
column modes separately; this fixes the unfolding bijection once and for
all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Dense desk-scale guardrail: everything downstream is O(n^3) in the
# unfolded dimension.
MAX_UNFOLDED_DIM = 4096

# Relative tolerance for accepting nearly-Hermitian input.
HERM_TOL = 1e-10


class ShapeMismatchError(ValueError):
    """Operands disagree on one or more tensor modes."""


class GuardrailError(ValueError):
    """Shape exceeds the dense desk-scale limit."""


def _as_dims(dims) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if any(d < 1 for d in out):
        raise ValueError(f"mode sizes must be >= 1, got {out}")
    return out


@dataclass(frozen=True)
class Shape:
    """Mode sizes of an order-(M+N) tensor, split into row and column groups."""

    row_dims: tuple[int, ...]
    col_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_dims", _as_dims(self.row_dims))
        object.__setattr__(self, "col_dims", _as_dims(self.col_dims))
        if len(self.row_dims) + len(self.col_dims) < 1:
            raise ValueError("a tensor needs at least one mode")
        if self.row_size > MAX_UNFOLDED_DIM or self.col_size > MAX_UNFOLDED_DIM:
            raise GuardrailError(
                f"unfolded size {self.row_size}x{self.col_size} exceeds "
                f"the dense limit {MAX_UNFOLDED_DIM}"
            )

    @property
    def row_size(self) -> int:
        return math.prod(self.row_dims)

    @property
    def col_size(self) -> int:
        return math.prod(self.col_dims)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.row_dims + self.col_dims

    @property
    def is_square(self) -> bool:
        return self.row_dims == self.col_dims

    def transposed(self) -> "Shape":
        return Shape(self.col_dims, self.row_dims)


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """Immutable dense complex tensor.

    ``entries`` is a C-ordered complex128 array indexed by the row modes
    followed by the column modes.  All entries must be finite.
    """

    shape: Shape
    entries: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if arr.shape != self.shape.dims:
            raise ShapeMismatchError(
                f"entry array has shape {arr.shape}, expected {self.shape.dims}"
            )
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("tensor entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def row_dims(self) -> tuple[int, ...]:
        return self.shape.row_dims

    @property
    def col_dims(self) -> tuple[int, ...]:
        return self.shape.col_dims

    def __repr__(self):
        return f"DenseTensor(row_dims={self.row_dims}, col_dims={self.col_dims})"


def tensor(array, row_modes: int) -> DenseTensor:
    """Wrap an ndarray-like as a DenseTensor with the given row-mode count."""
    arr = np.asarray(array, dtype=np.complex128)
    if not 0 <= row_modes <= arr.ndim:
        raise ValueError(f"row_modes must be in [0, {arr.ndim}], got {row_modes}")
    return DenseTensor(Shape(arr.shape[:row_modes], arr.shape[row_modes:]), arr)


def zero(shape: Shape) -> DenseTensor:
    """All-zero tensor of the given shape."""
    return DenseTensor(shape, np.zeros(shape.dims, dtype=np.complex128))


def identity(dims) -> DenseTensor:
    """Identity tensor on square shape (dims, dims).

    Entry (i, j) is the product of Kronecker deltas over the modes, so the
    unfolding is the ordinary identity matrix.
    """
    dims = _as_dims(dims)
    shape = Shape(dims, dims)
    eye = np.eye(shape.row_size, dtype=np.complex128)
    return refold(eye, shape)


def unfold(a: DenseTensor) -> np.ndarray:
    """Flatten to a row_size x col_size complex matrix (row-major on each side)."""
    return a.entries.reshape(a.shape.row_size, a.shape.col_size)


def refold(matrix: np.ndarray, shape: Shape) -> DenseTensor:
    """Inverse of :func:`unfold` for the given shape."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (shape.row_size, shape.col_size):
        raise ShapeMismatchError(
            f"matrix of shape {m.shape} cannot refold into "
            f"{shape.row_size}x{shape.col_size}"
        )
    return DenseTensor(shape, m.reshape(shape.dims))


def _require_same_shape(a: DenseTensor, b: DenseTensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"{op}: shapes ({a.row_dims}, {a.col_dims}) and "
            f"({b.row_dims}, {b.col_dims}) differ"
        )


def add(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Entrywise sum of two identically shaped tensors."""
    _require_same_shape(a, b, "add")
    return DenseTensor(a.shape, a.entries + b.entries)


def scale(a: DenseTensor, c: complex) -> DenseTensor:
    """Scalar multiple c * a."""
    return DenseTensor(a.shape, a.entries * complex(c))


def subtract(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    _require_same_shape(a, b, "subtract")
    return DenseTensor(a.shape, a.entries - b.entries)


def einstein_product(a: DenseTensor, b: DenseTensor, contracted_modes: int | None = None) -> DenseTensor:
    """Contract the column modes of ``a`` against the row modes of ``b``.

    The result has the row modes of ``a`` and the column modes of ``b`` and
    equals the refolded matrix product of the two unfoldings.  When both
    operands have a single row and a single column mode this is ordinary
    matrix multiplication.
    """
    n = len(a.col_dims)
    if contracted_modes is not None and contracted_modes != n:
        raise ShapeMismatchError(
            f"requested contraction over {contracted_modes} modes but left "
            f"operand has {n} column modes"
        )
    if len(b.row_dims) != n:
        raise ShapeMismatchError(
            f"contraction needs {n} leading modes on the right operand, "
            f"found {len(b.row_dims)}"
        )
    for k, (da, db) in enumerate(zip(a.col_dims, b.row_dims)):
        if da != db:
            raise ShapeMismatchError(
                f"contracted mode {k} differs: {da} (left) vs {db} (right)"
            )
    out = unfold(a) @ unfold(b)
    return refold(out, Shape(a.row_dims, b.col_dims))


def conjugate_transpose(a: DenseTensor) -> DenseTensor:
    """Swap row and column mode groups and conjugate every entry."""
    m = len(a.row_dims)
    n = len(a.col_dims)
    axes = tuple(range(m, m + n)) + tuple(range(m))
    return DenseTensor(a.shape.transposed(), np.conj(np.transpose(a.entries, axes)))


def trace(a: DenseTensor) -> complex:
    """Sum of the diagonal entries of a square tensor."""
    if not a.shape.is_square:
        raise ShapeMismatchError(
            f"trace needs row dims == col dims, got {a.row_dims} vs {a.col_dims}"
        )
    return complex(np.trace(unfold(a)))


def inner_product(a: DenseTensor, b: DenseTensor) -> complex:
    """Hilbert-Schmidt inner product, the trace of (a^H contracted with b)."""
    _require_same_shape(a, b, "inner_product")
    return complex(np.vdot(a.entries, b.entries))


def frobenius_norm(a: DenseTensor) -> float:
    """sqrt of the sum of squared entry moduli."""
    return float(np.linalg.norm(a.entries.ravel()))


def hadamard_product(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Entrywise product of two identically shaped tensors."""
    _require_same_shape(a, b, "hadamard_product")
    return DenseTensor(a.shape, a.entries * b.entries)


@dataclass(frozen=True, eq=False)
class HermitianTensor:
    """Square tensor equal to its conjugate transpose.

    Construction symmetrizes the input to (X + X^H)/2 after checking the
    deviation is within tolerance; downstream spectral code may then assume
    exact Hermitian symmetry of the unfolding up to floating point.
    """

    base: DenseTensor

    @property
    def shape(self) -> Shape:
        return self.base.shape

    @property
    def dims(self) -> tuple[int, ...]:
        return self.base.row_dims

    @property
    def dim_product(self) -> int:
        return self.base.shape.row_size

    def unfold(self) -> np.ndarray:
        return unfold(self.base)

    def __repr__(self):
        return f"HermitianTensor(dims={self.dims})"


def hermitian(a: DenseTensor, tol: float = HERM_TOL) -> HermitianTensor:
    """Validate and symmetrize a square tensor into a HermitianTensor."""
    if not a.shape.is_square:
        raise ShapeMismatchError(
            f"Hermitian tensor needs row dims == col dims, got "
            f"{a.row_dims} vs {a.col_dims}"
        )
    m = unfold(a)
    scale_ = float(np.max(np.abs(m))) if m.size else 0.0
    dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if scale_ > 0 and dev > tol * scale_:
        raise ValueError(
            f"tensor is not Hermitian within tolerance: max deviation {dev:.3e} "
            f"> {tol:.1e} * {scale_:.3e}"
        )
    sym = 0.5 * (m + m.conj().T)
    return HermitianTensor(refold(sym, a.shape))


def hermitian_from_matrix(m: np.ndarray, dims) -> HermitianTensor:
    """Refold a Hermitian matrix into a HermitianTensor on square shape dims."""
    dims = _as_dims(dims)
    return hermitian(refold(m, Shape(dims, dims)))


# ---------------------------------------------------------------------------
# Serialization.  Two forms: a JSON-header + raw binary payload pair for
# bulk data, and a pure-JSON nested form for small fixtures.
# ---------------------------------------------------------------------------

_DTYPE_TAG = "c128"


def save_tensor(a: DenseTensor, path) -> None:
    """Write ``path`` (JSON header) and ``path + '.bin'`` (payload).

    The payload is the flat C-order entry list as little-endian
    interleaved (re, im) float64 pairs.
    """
    path = Path(path)
    header = {
        "row_dims": list(a.row_dims),
        "col_dims": list(a.col_dims),
        "dtype": _DTYPE_TAG,
    }
    path.write_text(json.dumps(header))
    payload = np.ascontiguousarray(a.entries, dtype="<c16").tobytes()
    path.with_suffix(path.suffix + ".bin").write_bytes(payload)


def load_tensor(path) -> DenseTensor:
    """Read a tensor written by :func:`save_tensor`."""
    path = Path(path)
    header = json.loads(path.read_text())
    if header.get("dtype") != _DTYPE_TAG:
        raise ValueError(f"unsupported dtype tag {header.get('dtype')!r}")
    shape = Shape(header["row_dims"], header["col_dims"])
    raw = path.with_suffix(path.suffix + ".bin").read_bytes()
    flat = np.frombuffer(raw, dtype="<c16").astype(np.complex128)
    if flat.size != shape.row_size * shape.col_size:
        raise ValueError(
            f"payload holds {flat.size} entries, header expects "
            f"{shape.row_size * shape.col_size}"
        )
    return DenseTensor(shape, flat.reshape(shape.dims))


def tensor_to_json(a: DenseTensor) -> dict:
    """Pure-JSON form with nested [re, im] pairs; for small fixtures."""

    def nest(arr):
        if arr.ndim == 0:
            z = complex(arr)
            return [z.real, z.imag]
        return [nest(sub) for sub in arr]

    return {
        "row_dims": list(a.row_dims),
        "col_dims": list(a.col_dims),
        "dtype": _DTYPE_TAG,
        "entries": nest(a.entries),
    }


def tensor_from_json(obj: dict) -> DenseTensor:
    """Inverse of :func:`tensor_to_json`."""
    if obj.get("dtype", _DTYPE_TAG) != _DTYPE_TAG:
        raise ValueError(f"unsupported dtype tag {obj.get('dtype')!r}")
    shape = Shape(obj["row_dims"], obj["col_dims"])
    raw = np.asarray(obj["entries"], dtype=np.float64)
    if raw.shape != shape.dims + (2,):
        raise ValueError(
            f"entries have shape {raw.shape}, expected {shape.dims + (2,)}"
        )
    return DenseTensor(shape, raw[..., 0] + 1j * raw[..., 1])
