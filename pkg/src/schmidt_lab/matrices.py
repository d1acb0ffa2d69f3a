"""Dense complex matrix kernel.

All operators in this package are plain ``numpy.ndarray`` values of dtype
complex128, row-major, with multipartite structure carried separately by a
``SystemLayout``. Row and column indices of an operator on systems with
dimensions ``(d_1, ..., d_n)`` factor as ``i = ((i_1 * d_2 + i_2) * d_3 + ...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import max_total_dimension
from .errors import DimensionError


@dataclass(frozen=True)
class SystemLayout:
    """Ordered tuple of subsystem dimensions."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if not self.dims:
            raise ValueError("layout needs at least one system")
        for d in self.dims:
            if not isinstance(d, int) or d < 1:
                raise ValueError(f"dimensions must be positive integers, got {self.dims}")
        if self.total > max_total_dimension():
            raise DimensionError(
                f"total dimension {self.total} exceeds the configured cap "
                f"{max_total_dimension()}"
            )

    @classmethod
    def of(cls, layout) -> "SystemLayout":
        if isinstance(layout, SystemLayout):
            return layout
        return cls(tuple(int(d) for d in layout))

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def validate_subset(self, subset: Iterable[int]) -> tuple[int, ...]:
        """Sorted, deduplicated system indices; must be a nonempty strict-or-full subset."""
        subset = tuple(sorted({int(i) for i in subset}))
        if not subset:
            raise ValueError("system subset must be nonempty")
        for i in subset:
            if i < 0 or i >= len(self.dims):
                raise ValueError(f"system index {i} out of range for {len(self.dims)} systems")
        return subset

    def complement(self, subset: Iterable[int]) -> tuple[int, ...]:
        subset = self.validate_subset(subset)
        return tuple(i for i in range(len(self.dims)) if i not in subset)

    def subset_dimension(self, subset: Iterable[int]) -> int:
        return math.prod(self.dims[i] for i in self.validate_subset(subset))


def as_operator(m, name: str = "operator") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _check_layout(m: np.ndarray, layout: SystemLayout, name: str = "operator") -> None:
    if m.shape[0] != layout.total:
        raise DimensionError(
            f"{name} has side {m.shape[0]} but layout {layout.dims} implies {layout.total}"
        )


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def frobenius_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(m)))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the configured dimension cap enforced."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    side = a.shape[0] * b.shape[0]
    if side > max_total_dimension():
        raise DimensionError(
            f"tensor product side {side} exceeds the configured cap {max_total_dimension()}"
        )
    return np.kron(a, b)


def tensor_chain(factors: Sequence[np.ndarray]) -> np.ndarray:
    factors = list(factors)
    if not factors:
        raise ValueError("tensor_chain needs at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = tensor_product(out, f)
    return out


def assert_unitary(u: np.ndarray, name: str = "operator", rtol: float = 1e-10) -> np.ndarray:
    u = as_operator(u, name)
    d = u.shape[0]
    residual = np.linalg.norm(u.conj().T @ u - np.eye(d)) / math.sqrt(d)
    if residual > rtol:
        raise ValueError(f"{name} is not unitary (residual {residual:.3e})")
    return u


def realign(u: np.ndarray, layout) -> np.ndarray:
    """Bipartite realignment: M[(i,k), (j,l)] = u[(i,j), (k,l)].

    For u = A (x) B this is the rank-one matrix vec(A) vec(B)^T, so the SVD of
    the realignment is the operator Schmidt decomposition.
    """
    layout = SystemLayout.of(layout)
    if len(layout) != 2:
        raise DimensionError(f"realign needs a bipartite layout, got {layout.dims}")
    u = as_operator(u, "realign input")
    _check_layout(u, layout, "realign input")
    da, db = layout.dims
    t = u.reshape(da, db, da, db)  # indices (i, j, k, l)
    return t.transpose(0, 2, 1, 3).reshape(da * da, db * db)


def unrealign(m: np.ndarray, layout) -> np.ndarray:
    """Inverse of :func:`realign`."""
    layout = SystemLayout.of(layout)
    if len(layout) != 2:
        raise DimensionError(f"unrealign needs a bipartite layout, got {layout.dims}")
    da, db = layout.dims
    m = np.asarray(m, dtype=complex)
    if m.shape != (da * da, db * db):
        raise DimensionError(
            f"unrealign input has shape {m.shape}, expected {(da * da, db * db)}"
        )
    t = m.reshape(da, da, db, db)  # indices (i, k, j, l)
    return t.transpose(0, 2, 1, 3).reshape(da * db, da * db)


def permute_systems(u: np.ndarray, layout, perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: factor ``k`` of the result is factor ``perm[k]`` of ``u``."""
    layout = SystemLayout.of(layout)
    u = as_operator(u, "permute input")
    _check_layout(u, layout, "permute input")
    n = len(layout)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"perm {perm} is not a permutation of 0..{n - 1}")
    t = u.reshape(layout.dims + layout.dims)
    axes = perm + tuple(n + p for p in perm)
    side = layout.total
    return t.transpose(axes).reshape(side, side)


def group_systems(u: np.ndarray, layout, front: Iterable[int]):
    """Permute ``front`` systems (sorted) to the left; returns (operator, (d_front, d_rest)).

    The grouped operator is bipartite with the chosen subset as its first factor,
    which is the frame every cut-based routine works in.
    """
    layout = SystemLayout.of(layout)
    front = layout.validate_subset(front)
    rest = layout.complement(front)
    if not rest:
        raise ValueError("grouped subset must be a strict subset of the systems")
    perm = front + rest
    grouped = permute_systems(u, layout, perm)
    d_front = math.prod(layout.dims[i] for i in front)
    return grouped, (d_front, layout.total // d_front)


def partial_trace(u: np.ndarray, layout, keep: Iterable[int]) -> np.ndarray:
    """Trace out every system not listed in ``keep`` (original order preserved)."""
    layout = SystemLayout.of(layout)
    keep = layout.validate_subset(keep)
    u = as_operator(u, "partial_trace input")
    _check_layout(u, layout, "partial_trace input")
    n = len(layout)
    t = u.reshape(layout.dims + layout.dims)
    # Trace discarded systems from the highest axis down so indices stay valid.
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        row_axis = i
        col_axis = i + (t.ndim // 2)
        t = np.trace(t, axis1=row_axis, axis2=col_axis)
    side = math.prod(layout.dims[i] for i in keep)
    return t.reshape(side, side)


# --- JSON schemas ---------------------------------------------------------
#
# Matrix: {"dims": [d1, ...], "rows": N, "cols": N,
#          "data": [[re, im], ...]} with data row-major, N = prod(dims).
# State:  {"dims": [d1, ...], "amplitudes": [[re, im], ...]}.


def _pairs_to_complex(pairs, count: int, name: str) -> np.ndarray:
    if not isinstance(pairs, list) or len(pairs) != count:
        raise ValueError(f"{name} must be a list of {count} [re, im] pairs")
    flat = np.empty(count, dtype=complex)
    for idx, entry in enumerate(pairs):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ValueError(f"{name}[{idx}] is not a [re, im] pair")
        re, im = float(entry[0]), float(entry[1])
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ValueError(f"{name}[{idx}] is not finite")
        flat[idx] = complex(re, im)
    return flat


def _complex_to_pairs(values: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in values.ravel()]


def matrix_to_json(m: np.ndarray, dims: Sequence[int]) -> dict:
    m = as_operator(m, "matrix")
    layout = SystemLayout.of(dims)
    _check_layout(m, layout, "matrix")
    return {
        "dims": list(layout.dims),
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": _complex_to_pairs(m),
    }


def matrix_from_json(obj: dict) -> tuple[np.ndarray, SystemLayout]:
    if not isinstance(obj, dict):
        raise ValueError("matrix JSON must be an object")
    for key in ("dims", "rows", "cols", "data"):
        if key not in obj:
            raise ValueError(f"matrix JSON missing key {key!r}")
    layout = SystemLayout.of(obj["dims"])
    rows, cols = int(obj["rows"]), int(obj["cols"])
    if rows != cols or rows != layout.total:
        raise ValueError(
            f"matrix JSON claims shape {rows}x{cols} but dims {layout.dims} "
            f"imply a square side of {layout.total}"
        )
    flat = _pairs_to_complex(obj["data"], rows * cols, "data")
    return flat.reshape(rows, cols), layout


def state_to_json(v: np.ndarray, dims: Sequence[int]) -> dict:
    v = np.asarray(v, dtype=complex).ravel()
    layout = SystemLayout.of(dims)
    if v.shape[0] != layout.total:
        raise DimensionError(
            f"state has length {v.shape[0]} but dims {layout.dims} imply {layout.total}"
        )
    return {"dims": list(layout.dims), "amplitudes": _complex_to_pairs(v)}


def state_from_json(obj: dict) -> tuple[np.ndarray, SystemLayout]:
    if not isinstance(obj, dict):
        raise ValueError("state JSON must be an object")
    for key in ("dims", "amplitudes"):
        if key not in obj:
            raise ValueError(f"state JSON missing key {key!r}")
    layout = SystemLayout.of(obj["dims"])
    return _pairs_to_complex(obj["amplitudes"], layout.total, "amplitudes"), layout
