"""Matrix-space structure toolbox.

Polar-style splittings of arbitrary square matrices, singular elements of
two-dimensional matrix pencils, the two-matrix orthogonalization that turns
moment data into an orthogonal recombination, joint diagonalization of
commuting normal families, simultaneous singular value decompositions, and
commutant-based block detection. These are the primitives the controlled-gate
decision procedures are assembled from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matrices as mx
from .config import max_total_dimension
from .errors import DimensionError, NumericalError, StructureError
from .factorizations import (
    RANK_RTOL,
    eigh,
    null_space,
    numerical_rank,
    orthonormal_complement,
    svd,
)
from .matrices import SystemLayout
from .randomness import make_rng
from .schmidt import operator_schmidt_decompose

# relative tolerance for commutation and normality violations
COMMUTE_RTOL = 1e-8
# singular means smallest singular value below this times the Frobenius norm
SINGULAR_RTOL = 1e-8
# eigenvalues closer than this (times scale) belong to one cluster
CLUSTER_GAP = 1e-7


def _vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1)


def _stack_rank(ops, rtol: float = RANK_RTOL) -> int:
    stack = np.array([_vec(op) for op in ops])
    return numerical_rank(svd(stack)[1], rtol)


def _as_square_family(ops, name: str):
    if not ops:
        raise ValueError(f"{name} must not be empty")
    ops = [mx.as_operator(op, name) for op in ops]
    d = ops[0].shape[0]
    if any(op.shape != (d, d) for op in ops):
        raise ValueError(f"{name} must share one square shape")
    return ops, d


def _cluster_ascending(values: np.ndarray, gap: float):
    """Group an ascending real sequence into runs separated by more than the gap."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    threshold = gap * max(1.0, float(np.max(np.abs(values))))
    clusters = [[0]]
    for i in range(1, values.size):
        if values[i] - values[i - 1] > threshold:
            clusters.append([i])
        else:
            clusters[-1].append(i)
    return [np.array(idx) for idx in clusters]


# ------------------------------------------------------------------ splittings


@dataclass(frozen=True)
class ProjectorDecomposition:
    """Distinct descending weights with pairwise orthogonal projectors summing to I."""

    values: np.ndarray
    projectors: tuple

    def weighted_sum(self, power: float = 1.0) -> np.ndarray:
        total = np.zeros_like(self.projectors[0])
        for c, p in zip(self.values, self.projectors):
            total = total + (max(c, 0.0) ** power) * p
        return total


def normal_split(a, gap: float = CLUSTER_GAP):
    """Split a as (sum_i sqrt(c_i) P_i) V with V unitary.

    The c_i are the clustered eigenvalues of a a^dagger, descending. On the
    kernel of a the unitary is completed deterministically from orthonormal
    complements, so equal inputs give identical output.
    """
    a = mx.as_operator(a, "normal_split input")
    d = a.shape[0]
    gram = a @ a.conj().T
    gram = (gram + gram.conj().T) / 2.0
    evals, vecs = eigh(gram)
    clusters = _cluster_ascending(evals, gap)[::-1]
    values = np.array([max(float(np.mean(evals[idx])), 0.0) for idx in clusters])
    projectors = tuple(vecs[:, idx] @ vecs[:, idx].conj().T for idx in clusters)

    # floor sits above hermitian-eigensolver roundoff (~eps * largest value),
    # so exact kernels land below it while genuine signal stays above
    kernel_floor = 1e-14 * values[0] if values[0] > 0 else 0.0
    values[values <= kernel_floor] = 0.0
    v0 = np.zeros((d, d), dtype=complex)
    for c, p in zip(values, projectors):
        if c > 0.0:
            v0 += (c ** -0.5) * (p @ a)
    n_out = orthonormal_complement(v0)
    n_in = orthonormal_complement(v0.conj().T)
    v = v0 + n_out @ n_in.conj().T

    dec = ProjectorDecomposition(values=values, projectors=projectors)
    norm = mx.frobenius_norm(a)
    if mx.frobenius_norm(dec.weighted_sum(0.5) @ v - a) > 1e-10 * max(norm, 1.0):
        raise NumericalError("polar-style split failed to reconstruct the input")
    if mx.frobenius_norm(v.conj().T @ v - np.eye(d)) > 1e-10 * math.sqrt(d):
        raise NumericalError("polar-style split produced a non-unitary factor")
    return dec, v


# ------------------------------------------------------- singular combinations


def singular_combination(a, b):
    """A nonzero singular element alpha*a + beta*b of an independent pencil.

    Singular inputs short-circuit to (1, 0, a); otherwise the combination comes
    from an eigenvalue of a^-1 b, chosen to minimize the normalized smallest
    singular value, ties broken by the smallest eigenvalue (real, then imag).
    """
    (a, b), _ = _as_square_family([a, b], "pencil")
    if _stack_rank([a, b], rtol=1e-10) != 2:
        raise ValueError("pencil members must be linearly independent")

    s_a = svd(a)[1]
    if s_a[-1] < SINGULAR_RTOL * mx.frobenius_norm(a):
        return 1.0, 0.0, a.copy()

    evals = np.linalg.eigvals(np.linalg.solve(a, b))
    candidates = []
    for lam in evals:
        c = b - lam * a
        norm = mx.frobenius_norm(c)
        ratio = svd(c)[1][-1] / norm if norm > 0 else 0.0
        candidates.append((ratio, lam, c))
    best = min(r for r, _, _ in candidates)
    tied = [
        (lam, c)
        for r, lam, c in candidates
        if r <= best + 1e-12
    ]
    lam, c = min(tied, key=lambda t: (round(t[0].real, 12), round(t[0].imag, 12)))
    if svd(c)[1][-1] > SINGULAR_RTOL * mx.frobenius_norm(c):
        raise NumericalError("pencil eigenvalue produced a non-singular combination")
    return complex(-lam), 1.0, c


def find_singular_basis(space):
    """r-1 independent singular matrices inside an r-dimensional matrix span.

    Repeatedly extracts a singular combination of the first two working
    elements and drops the one it leans on most, which keeps the working set
    plus the found set independent.
    """
    ops, _ = _as_square_family(space, "matrix span")
    r = len(ops)
    if r < 2:
        raise ValueError(f"need at least two matrices, got {r}")
    if _stack_rank(ops) != r:
        raise ValueError("matrix span inputs must be linearly independent")

    work = list(ops)
    found = []
    while len(work) >= 2:
        alpha, beta, c = singular_combination(work[0], work[1])
        found.append(c)
        keep = work[0] if abs(beta) >= abs(alpha) else work[1]
        work = [keep] + work[2:]
    if _stack_rank(found) != r - 1:
        raise NumericalError("singular basis lost independence")
    return found


# ---------------------------------------------------------- orthogonalization


def _require_positive(value, name: str) -> float:
    value = complex(value)
    if abs(value.imag) > 1e-10 * max(abs(value.real), 1.0):
        raise ValueError(f"{name} must be real, got {value}")
    if value.real <= 0.0:
        raise ValueError(f"{name} must be positive, got {value.real}")
    return value.real


def orthogonalize_pair(a1, a2, x1, y1, z1, x2, y2, z2):
    """Recombine an independent pair with unit two-sided second moments.

    Given the moment identities
        x1 a1'a1 + y1 a2'a2 + z1 a1'a2 + z1* a2'a1 = I   (' is dagger)
        x2 a1 a1' + y2 a2 a2' + z2 a1 a2' + z2* a2 a1' = I
    with x_i, y_i > 0 and x_i y_i > |z_i|^2, returns (b1, b2, a, b) in the
    span of (a1, a2) with b1'b1 + b2'b2 = I and a b1 b1' + b b2 b2' = I,
    a, b > 0. Violated preconditions raise ValueError.
    """
    (a1, a2), d = _as_square_family([a1, a2], "pair")
    x1 = _require_positive(x1, "x1")
    y1 = _require_positive(y1, "y1")
    x2 = _require_positive(x2, "x2")
    y2 = _require_positive(y2, "y2")
    z1 = complex(z1)
    z2 = complex(z2)
    if x1 * y1 <= abs(z1) ** 2:
        raise ValueError("first moment matrix is not positive definite")
    if x2 * y2 <= abs(z2) ** 2:
        raise ValueError("second moment matrix is not positive definite")
    if _stack_rank([a1, a2], rtol=1e-10) != 2:
        raise ValueError("pair members must be linearly independent")

    eye = np.eye(d)
    tol = 1e-8 * math.sqrt(d)
    lhs1 = (
        x1 * a1.conj().T @ a1
        + y1 * a2.conj().T @ a2
        + z1 * a1.conj().T @ a2
        + np.conj(z1) * a2.conj().T @ a1
    )
    if mx.frobenius_norm(lhs1 - eye) > tol:
        raise ValueError("first moment identity does not hold for these inputs")
    lhs2 = (
        x2 * a1 @ a1.conj().T
        + y2 * a2 @ a2.conj().T
        + z2 * a1 @ a2.conj().T
        + np.conj(z2) * a2 @ a1.conj().T
    )
    if mx.frobenius_norm(lhs2 - eye) > tol:
        raise ValueError("second moment identity does not hold for these inputs")

    # absorb the cross term of the first identity: a3, a4 satisfy
    # a3'a3 + a4'a4 = I with a3 proportional to a1
    p = math.sqrt(x1 - abs(z1) ** 2 / y1)
    s = math.sqrt(y1)
    q = np.conj(z1) / s
    a3 = p * a1
    a4 = s * a2 + q * a1
    # transport the second identity onto the new pair
    x = (x2 - 2.0 * (z2 * np.conj(q)).real / s + y2 * abs(q) ** 2 / s**2) / p**2
    y = y2 / s**2
    zc = (z2 / s - y2 * q / s**2) / p
    az = abs(zc)
    phi = -np.angle(zc) if az > 0 else 0.0
    phase = np.exp(1j * phi)

    if abs(x - y) <= 1e-12 * max(x, y, az, 1.0):
        b1 = (a3 + phase * a4) / math.sqrt(2.0)
        b2 = (a3 - phase * a4) / math.sqrt(2.0)
        a_w = x + az
        b_w = x - az
    else:
        theta = 0.5 * math.atan(2.0 * az / (x - y))
        b1 = math.cos(theta) * a3 + phase * math.sin(theta) * a4
        b2 = math.sin(theta) * a3 - phase * math.cos(theta) * a4
        root = math.sqrt((x - y) ** 2 + 4.0 * az**2)
        sign = 1.0 if x > y else -1.0
        a_w = 0.5 * (x + y + sign * root)
        b_w = 0.5 * (x + y - sign * root)

    if a_w <= 0.0 or b_w <= 0.0:
        raise NumericalError("orthogonalization weights collapsed")
    if mx.frobenius_norm(b1.conj().T @ b1 + b2.conj().T @ b2 - eye) > tol:
        raise NumericalError("orthogonalized pair lost the first identity")
    if mx.frobenius_norm(a_w * b1 @ b1.conj().T + b_w * b2 @ b2.conj().T - eye) > tol:
        raise NumericalError("orthogonalized pair lost the second identity")
    return b1, b2, float(a_w), float(b_w)


@dataclass(frozen=True)
class HarvestedPair:
    """Moment data read off a rank-3 unitary, ready for orthogonalize_pair.

    a1, a2 live on the side complementary to the analyzed cut; the moments
    are contractions of the cut-side factors with the kernel and cokernel
    vectors of a singular element of the cut-side span.
    """

    a1: np.ndarray
    a2: np.ndarray
    x1: float
    y1: float
    z1: complex
    x2: float
    y2: float
    z2: complex
    kernel_vector: np.ndarray
    cokernel_vector: np.ndarray


def orthogonalization_inputs_from_unitary(u, layout, cut) -> HarvestedPair:
    """Harvest orthogonalization inputs from a Schmidt-rank-3 unitary.

    Re-expands the rank-3 decomposition so the first cut-side factor is
    singular, then contracts unitarity against its kernel and cokernel
    vectors. The identities returned hold exactly by construction; the
    strict positivity margin fails only for degenerate instances (for
    example when the analyzed cut is itself a commuting family), which
    raise ValueError.
    """
    layout = SystemLayout.of(layout)
    u = mx.as_operator(u, "harvest input")
    mx.assert_unitary(u, "harvest input")
    dec = operator_schmidt_decompose(u, layout, cut)
    if dec.rank != 3:
        raise ValueError(f"harvest needs operator Schmidt rank 3, got {dec.rank}")

    a_ops = [s * f for s, f in zip(dec.coefficients, dec.left_factors)]
    b_ops = list(dec.right_factors)
    alpha, beta, c = singular_combination(a_ops[0], a_ops[1])
    kept = a_ops[0] if abs(beta) >= abs(alpha) else a_ops[1]
    new_a = [c, kept, a_ops[2]]

    old_stack = np.array([_vec(op) for op in a_ops])
    new_stack = np.array([_vec(op) for op in new_a])
    coeff = np.linalg.lstsq(new_stack.T, old_stack.T, rcond=None)[0]
    # old_j = sum_i coeff[i, j] new_i, so the complementary factors recombine as
    new_b = [
        sum(coeff[i, j] * b_ops[j] for j in range(3)) for i in range(3)
    ]

    grouped, (d_a, d_b) = mx.group_systems(u, layout, dec.cut)
    rebuilt = sum(np.kron(x, y) for x, y in zip(new_a, new_b))
    if mx.frobenius_norm(rebuilt - grouped) > 1e-8 * mx.frobenius_norm(u):
        raise NumericalError("re-expanded decomposition failed to reconstruct")

    kernel = null_space(c)
    cokernel = null_space(c.conj().T)
    if kernel.shape[1] == 0 or cokernel.shape[1] == 0:
        raise NumericalError("singular element has no detectable kernel")
    w = kernel[:, 0]
    v = cokernel[:, 0]

    x1 = float(np.linalg.norm(new_a[1] @ w) ** 2)
    y1 = float(np.linalg.norm(new_a[2] @ w) ** 2)
    z1 = complex(np.vdot(new_a[1] @ w, new_a[2] @ w))
    x2 = float(np.linalg.norm(new_a[1].conj().T @ v) ** 2)
    y2 = float(np.linalg.norm(new_a[2].conj().T @ v) ** 2)
    z2 = complex(np.vdot(new_a[1].conj().T @ v, new_a[2].conj().T @ v))

    margin = 1e-10
    if min(x1, y1, x2, y2) <= margin:
        raise ValueError("degenerate instance: a recombined factor annihilates the kernel vector")
    if x1 * y1 - abs(z1) ** 2 <= margin * max(1.0, x1 * y1):
        raise ValueError("degenerate instance: kernel-side moments are rank deficient")
    if x2 * y2 - abs(z2) ** 2 <= margin * max(1.0, x2 * y2):
        raise ValueError("degenerate instance: cokernel-side moments are rank deficient")
    return HarvestedPair(
        a1=new_b[1],
        a2=new_b[2],
        x1=x1,
        y1=y1,
        z1=z1,
        x2=x2,
        y2=y2,
        z2=z2,
        kernel_vector=w,
        cokernel_vector=v,
    )


# ------------------------------------------------------- joint diagonalization


@dataclass(frozen=True)
class Obstruction:
    """A named structural failure with its relative magnitude."""

    description: str
    violation: float

    def __str__(self) -> str:
        return self.description


def family_obstruction(family, tol: float = COMMUTE_RTOL):
    """Worst normality or commutation violation in a family, or None.

    Violations are normalized against the squared largest member norm.
    Normalizing per pair instead would divide a numerically-zero member's
    roundoff direction by its own vanishing norm and read noise as an O(1)
    obstruction; the family scale keeps negligible members negligible. The
    returned magnitude lets callers distinguish a borderline miss from a
    structural refutation.
    """
    ops, _ = _as_square_family(family, "family")
    scale = max(max(mx.frobenius_norm(m) for m in ops), 1e-300)
    denom = scale * scale
    worst = None
    for i, m in enumerate(ops):
        relative = mx.frobenius_norm(m @ m.conj().T - m.conj().T @ m) / denom
        if relative > tol and (worst is None or relative > worst.violation):
            worst = Obstruction(
                f"matrix {i} is not normal (violation {relative:.3e})", relative
            )
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            relative = mx.frobenius_norm(ops[i] @ ops[j] - ops[j] @ ops[i]) / denom
            if relative > tol and (worst is None or relative > worst.violation):
                worst = Obstruction(
                    f"matrices {i} and {j} do not commute (violation {relative:.3e})",
                    relative,
                )
    return worst


def _is_scalar_block(compressed: np.ndarray, gap: float) -> bool:
    k = compressed.shape[0]
    mu = np.trace(compressed) / k
    dev = mx.frobenius_norm(compressed - mu * np.eye(k))
    return dev <= gap * max(math.sqrt(k), mx.frobenius_norm(compressed))


def _refine_basis(family, basis: np.ndarray, rng, gap: float) -> np.ndarray:
    k = basis.shape[1]
    if k == 1:
        return basis
    compressed = [basis.conj().T @ m @ basis for m in family]
    if all(_is_scalar_block(c, gap) for c in compressed):
        return basis
    for _ in range(4):
        h = np.zeros((k, k), dtype=complex)
        for c in compressed:
            w_re, w_im = rng.normal(size=2)
            h += w_re * (c + c.conj().T) / 2.0
            h += w_im * (c - c.conj().T) / 2.0j
        evals, vecs = np.linalg.eigh(h)
        clusters = _cluster_ascending(evals, gap)
        if len(clusters) > 1:
            refined = [
                _refine_basis(family, basis @ vecs[:, idx], rng, gap)
                for idx in clusters
            ]
            return np.hstack(refined)
    # no split found; let the final verification decide
    return basis


def joint_diagonalize_commuting(family, tol: float = COMMUTE_RTOL, seed: int = 0):
    """Unitary q with q^dagger M q diagonal for every member of the family.

    Preconditions (normality of each member, pairwise commutation) are
    checked first; a violation raises StructureError naming the offender,
    which downstream detection treats as a verdict rather than a crash.
    """
    ops, d = _as_square_family(family, "family")
    obstruction = family_obstruction(ops, tol)
    if obstruction is not None:
        raise StructureError(obstruction.description)
    for attempt in range(3):
        q = _refine_basis(ops, np.eye(d, dtype=complex), make_rng(seed, stream=attempt), CLUSTER_GAP)
        ok = True
        for m in ops:
            rotated = q.conj().T @ m @ q
            off = mx.frobenius_norm(rotated - np.diag(np.diag(rotated)))
            if off > 1e-8 * max(mx.frobenius_norm(m), 1.0):
                ok = False
                break
        if ok:
            return q
    raise NumericalError("joint diagonalization failed verification on all retries")


# --------------------------------------------------------- simultaneous svd


@dataclass(frozen=True)
class SimultaneousSvdResult:
    """Witness (s, t, diagonals) with s M_k t diagonal, or the failed check.

    On success ``M_k = s^dagger diag_k t^dagger`` within 1e-8 relative; on
    failure ``failed_check`` names the worst violated structure condition and
    ``violation`` carries its relative magnitude.
    """

    s: np.ndarray | None
    t: np.ndarray | None
    diagonals: tuple | None
    failed_check: str | None
    violation: float | None = None

    @property
    def ok(self) -> bool:
        return self.failed_check is None


def _failure(check: str, violation: float | None = None) -> SimultaneousSvdResult:
    return SimultaneousSvdResult(
        s=None, t=None, diagonals=None, failed_check=check, violation=violation
    )


def simultaneous_svd(family, tol: float = COMMUTE_RTOL, seed: int = 0) -> SimultaneousSvdResult:
    """One pair of unitaries diagonalizing every family member at once.

    Exists exactly when both product families {M_i M_j'} and {M_i' M_j} are
    normal and commuting; those checks failing produces a verdict naming the
    obstruction instead of an exception. The left basis diagonalizes the left
    products; the right basis is derived row by row from the rotated family,
    which stays sound on degenerate families (repeated blocks, single
    members) where greedy eigenbasis pairing does not.
    """
    ops, d = _as_square_family(family, "family")
    left_products = [a @ b.conj().T for a in ops for b in ops]
    right_products = [a.conj().T @ b for a in ops for b in ops]
    obstruction = family_obstruction(left_products, tol)
    if obstruction is not None:
        return _failure(f"left products: {obstruction.description}", obstruction.violation)
    obstruction = family_obstruction(right_products, tol)
    if obstruction is not None:
        return _failure(f"right products: {obstruction.description}", obstruction.violation)

    q = joint_diagonalize_commuting(left_products, tol=tol, seed=seed)
    s = q.conj().T
    rotated = [s @ m for m in ops]
    scale = max(max(mx.frobenius_norm(m) for m in ops), 1e-300)

    t = np.zeros((d, d), dtype=complex)
    filled = []
    for r in range(d):
        rows = [k[r, :] for k in rotated]
        norms = [np.linalg.norm(row) for row in rows]
        best = int(np.argmax(norms))
        if norms[best] > 1e-9 * scale:
            t[:, r] = rows[best].conj() / norms[best]
            filled.append(r)
    missing = [r for r in range(d) if r not in filled]
    if missing:
        completion = orthonormal_complement(t[:, filled])
        for col, r in enumerate(missing):
            t[:, r] = completion[:, col]

    if mx.frobenius_norm(t.conj().T @ t - np.eye(d)) > 1e-8 * math.sqrt(d):
        raise NumericalError("derived right basis is not unitary")

    # convention: first significant diagonal entry of s M_1 t real nonnegative
    first = s @ ops[0] @ t
    diag = np.diag(first)
    idx = np.flatnonzero(np.abs(diag) > 1e-9 * max(scale, 1.0))
    if idx.size:
        pivot = diag[idx[0]]
        t[:, idx[0]] *= np.conj(pivot) / abs(pivot)

    diagonals = []
    for m in ops:
        prod = s @ m @ t
        off = mx.frobenius_norm(prod - np.diag(np.diag(prod)))
        if off > 1e-8 * max(mx.frobenius_norm(m), 1.0):
            raise NumericalError(
                "family passed structure checks but resisted joint diagonal form"
            )
        diagonals.append(np.diag(prod))
    return SimultaneousSvdResult(s=s, t=t, diagonals=tuple(diagonals), failed_check=None)


# ----------------------------------------------------------- commutant blocks


def commutant_blocks(generators, tol: float = RANK_RTOL, seed: int = 0):
    """Projectors splitting the space into common invariant blocks, or None.

    Solves [X, G] = 0 over the dagger-closure of the generators; a commutant
    richer than scalars yields the eigenprojectors of one random traceless
    Hermitian commutant element. None means irreducible: no common block
    structure exists.
    """
    gens, d = _as_square_family(generators, "generators")
    if d * d > max_total_dimension():
        raise DimensionError(
            f"commutant solve needs {d * d} unknowns, over the configured cap"
        )
    closure = gens + [g.conj().T for g in gens]
    eye = np.eye(d, dtype=complex)
    rows = [np.kron(eye, g.T) - np.kron(g, eye) for g in closure]
    basis = null_space(np.vstack(rows), rtol=tol)
    if basis.shape[1] <= 1:
        return None

    for attempt in range(2):
        rng = make_rng(seed, stream=attempt)
        coeffs = rng.normal(size=basis.shape[1])
        x = (basis @ coeffs).reshape(d, d)
        x = (x + x.conj().T) / 2.0
        x -= (np.trace(x) / d) * eye
        if mx.frobenius_norm(x) < 1e-10:
            continue
        evals, vecs = np.linalg.eigh(x)
        clusters = _cluster_ascending(evals, CLUSTER_GAP)
        if len(clusters) < 2:
            continue
        return tuple(vecs[:, idx] @ vecs[:, idx].conj().T for idx in clusters)
    raise NumericalError("commutant is nontrivial but no block split materialized")
