"""Dense complex linear algebra shared by every analysis module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Vectorization is
column-stacking throughout (``vec(AXB) = (B^T kron A) vec(X)``).
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .exceptions import NumericalFailure, ShapeError

ComplexMatrix = npt.NDArray[np.complex128]

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace of C^ambient_dim, stored as columns."""

    ambient_dim: int
    vectors: ComplexMatrix

    def __post_init__(self) -> None:
        if self.vectors.shape[0] != self.ambient_dim:
            raise ShapeError(
                "Basis vectors do not live in the ambient space",
                expected=self.ambient_dim,
                actual=self.vectors.shape[0],
            )

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def projector(self) -> ComplexMatrix:
        return self.vectors @ self.vectors.conj().T

    def residual(self, v: npt.ArrayLike) -> float:
        """Norm of the component of v orthogonal to the subspace."""
        w = np.asarray(v, dtype=complex)
        return float(np.linalg.norm(w - self.projector() @ w))

    def as_list(self) -> List[ComplexMatrix]:
        return [self.vectors[:, k] for k in range(self.dim)]

    @classmethod
    def full(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.eye(n, dtype=complex))

    @classmethod
    def zero(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.zeros((n, 0), dtype=complex))


@dataclass(frozen=True)
class BasisExtraction:
    """Greedy basis selection: chosen input indices plus expansion table.

    ``coordinates[j]`` expresses input ``j`` in the selected matrices, in the
    order of ``indices``.
    """

    indices: List[int]
    coordinates: ComplexMatrix
    residuals: List[float]

    @property
    def rank(self) -> int:
        return len(self.indices)


def as_matrix(m: npt.ArrayLike) -> ComplexMatrix:
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2:
        raise ShapeError(
            "Expected a two-dimensional matrix", expected=2, actual=arr.ndim
        )
    return arr


def require_square(m: ComplexMatrix, name: str = "matrix") -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(
            f"{name} must be square", expected="n x n", actual=m.shape
        )
    return int(m.shape[0])


def adjoint(m: ComplexMatrix) -> ComplexMatrix:
    return np.conj(m).T


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return matmul(a, b) - matmul(b, a)


def vec(m: ComplexMatrix) -> ComplexMatrix:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: npt.ArrayLike, n: int) -> ComplexMatrix:
    arr = np.asarray(v, dtype=complex)
    if arr.size != n * n:
        raise ShapeError(
            "Vector length is not n squared", expected=n * n, actual=arr.size
        )
    return arr.reshape((n, n), order="F")


def matmul(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(
            "Inner dimensions do not agree",
            expected=a.shape[1] if a.ndim == 2 else None,
            actual=b.shape[0] if b.ndim == 2 else None,
        )
    return a @ b


def kernel(
    m: ComplexMatrix,
    tol: float = DEFAULT_RANK_TOL,
    scale: Optional[float] = None,
) -> SubspaceBasis:
    """Numerical null space.

    Singular directions with singular value below ``tol * scale`` are kept.
    ``scale`` defaults to the largest singular value (1 for the zero matrix);
    callers pass the natural magnitude of ``m`` when ``m`` may be pure
    rounding noise, e.g. a commutator that vanishes exactly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = np.asarray(m, dtype=complex)
    n_cols = m.shape[1]
    if m.shape[0] == 0:
        return SubspaceBasis.full(n_cols)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    if scale is None:
        scale = float(s[0]) if s.size and s[0] > 0 else 1.0
    cutoff = tol * scale
    rank = int(np.sum(s >= cutoff))
    null = vh[rank:].conj().T
    return SubspaceBasis(n_cols, np.ascontiguousarray(null))


def intersect(
    bases: Sequence[SubspaceBasis], tol: float = 1e-8
) -> SubspaceBasis:
    """Intersection of subspaces via the kernel of stacked complements."""
    if not bases:
        raise ShapeError("Nothing to intersect", expected=">= 1", actual=0)
    n = bases[0].ambient_dim
    for b in bases:
        if b.ambient_dim != n:
            raise ShapeError(
                "Subspaces live in different spaces",
                expected=n,
                actual=b.ambient_dim,
            )
    eye = np.eye(n, dtype=complex)
    stacked = np.vstack([eye - b.projector() for b in bases])
    return kernel(stacked, tol, scale=1.0)


def eigenvalues(m: ComplexMatrix) -> ComplexMatrix:
    """All eigenvalues, with algebraic multiplicity."""
    require_square(m)
    try:
        return sla.eigvals(m)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(
            "Eigenvalue iteration did not converge",
            issue="eigensolver_nonconvergence",
            cause=e,
        ) from e


def eigenpairs(
    m: ComplexMatrix, residual_tol: float = 1e-8
) -> "tuple[ComplexMatrix, ComplexMatrix]":
    """Eigenvalues and unit right eigenvectors (columns), residual-checked."""
    require_square(m)
    try:
        vals, vecs = sla.eig(m)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(
            "Eigenvalue iteration did not converge",
            issue="eigensolver_nonconvergence",
            cause=e,
        ) from e
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    bound = residual_tol * max(spectral_norm(m), 1.0)
    residuals = np.linalg.norm(m @ vecs - vecs * vals, axis=0)
    if residuals.size and float(residuals.max()) >= bound:
        raise NumericalFailure(
            "Eigenpair residual above tolerance",
            issue="eigenpair_residual",
            partial=vals,
            worst_residual=float(residuals.max()),
        )
    return vals, vecs


def characteristic_polynomial(m: ComplexMatrix) -> ComplexMatrix:
    """Coefficients of det(xI - M), highest degree first (Faddeev–LeVerrier)."""
    n = require_square(m)
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    eye = np.eye(n, dtype=complex)
    mk = np.zeros((n, n), dtype=complex)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(m @ mk) / k
    return coeffs


def sylvester_matrix(p: ComplexMatrix, q: ComplexMatrix) -> ComplexMatrix:
    """Sylvester matrix of two coefficient vectors (highest degree first)."""
    deg_p, deg_q = len(p) - 1, len(q) - 1
    size = deg_p + deg_q
    syl = np.zeros((size, size), dtype=complex)
    for row in range(deg_q):
        syl[row, row:row + deg_p + 1] = p
    for row in range(deg_p):
        syl[deg_q + row, row:row + deg_q + 1] = q
    return syl


def char_discriminant(m: ComplexMatrix) -> complex:
    """Discriminant of the characteristic polynomial, without root finding.

    disc(p) = (-1)^{n(n-1)/2} Res(p, p') for monic p; zero exactly when M has
    a repeated eigenvalue.
    """
    n = require_square(m)
    if n <= 1:
        return complex(1.0)
    p = characteristic_polynomial(m)
    dp = np.polyder(p)
    res = sla.det(sylvester_matrix(p, dp))
    sign = -1.0 if (n * (n - 1) // 2) % 2 else 1.0
    return complex(sign * res)


def spectral_norm(m: ComplexMatrix) -> float:
    """Largest singular value."""
    if m.size == 0:
        return 0.0
    return float(sla.svdvals(m)[0])


class SpanBuilder:
    """Growing orthonormal basis fed one vector at a time.

    A vector is accepted iff its component orthogonal to the current span
    has norm >= tol relative to its own norm.
    """

    def __init__(self, tol: float = DEFAULT_RANK_TOL):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.tol = tol
        self._cols: List[ComplexMatrix] = []

    @property
    def dim(self) -> int:
        return len(self._cols)

    def residual(self, v: ComplexMatrix) -> "tuple[ComplexMatrix, float]":
        v = np.asarray(v, dtype=complex).ravel()
        norm_v = float(np.linalg.norm(v))
        if norm_v == 0.0:
            return v, 0.0
        r = v.copy()
        if self._cols:
            q = np.column_stack(self._cols)
            # two passes of Gram-Schmidt keep the basis orthonormal
            for _ in range(2):
                r = r - q @ (q.conj().T @ r)
        return r, float(np.linalg.norm(r)) / norm_v

    def add(self, v: ComplexMatrix) -> "tuple[bool, float]":
        r, rel = self.residual(v)
        if rel >= self.tol and rel > 0.0:
            self._cols.append(r / np.linalg.norm(r))
            return True, rel
        return False, rel

    def basis(self, ambient_dim: int) -> SubspaceBasis:
        if not self._cols:
            return SubspaceBasis.zero(ambient_dim)
        return SubspaceBasis(ambient_dim, np.column_stack(self._cols))


def basis_extract(
    mats: Sequence[ComplexMatrix], tol: float = DEFAULT_RANK_TOL
) -> BasisExtraction:
    """Greedy left-to-right selection of linearly independent matrices.

    A matrix joins the basis iff the part of its vectorization orthogonal to
    the already selected ones has relative norm >= tol. Earlier inputs win.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not mats:
        return BasisExtraction([], np.zeros((0, 0), dtype=complex), [])
    shape = np.shape(mats[0])
    for m in mats:
        if np.shape(m) != shape:
            raise ShapeError(
                "All matrices must share one shape",
                expected=shape,
                actual=np.shape(m),
            )

    vectors = [vec(np.asarray(m, dtype=complex)) for m in mats]
    span = SpanBuilder(tol)
    indices: List[int] = []
    residuals: List[float] = []
    for idx, v in enumerate(vectors):
        accepted, rel = span.add(v)
        residuals.append(rel)
        if accepted:
            indices.append(idx)

    if not indices:
        coords = np.zeros((len(mats), 0), dtype=complex)
    else:
        selected = np.column_stack([vectors[i] for i in indices])
        everything = np.column_stack(vectors)
        sol, *_ = sla.lstsq(selected, everything)
        coords = sol.T
    return BasisExtraction(indices, coords, residuals)


def span_coordinates(
    basis: Sequence[ComplexMatrix], target: ComplexMatrix
) -> "tuple[ComplexMatrix, float]":
    """Least-squares coordinates of target in span(basis) and relative residual."""
    t = vec(np.asarray(target, dtype=complex))
    norm_t = float(np.linalg.norm(t))
    if not basis:
        return np.zeros(0, dtype=complex), 0.0 if norm_t == 0 else 1.0
    b = np.column_stack([vec(np.asarray(m, dtype=complex)) for m in basis])
    coeffs, *_ = sla.lstsq(b, t)
    resid = float(np.linalg.norm(b @ coeffs - t))
    return coeffs, resid / norm_t if norm_t > 0 else resid


def multiset_distance(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Largest pair distance under the minimal-cost matching of two multisets."""
    x = np.asarray(a, dtype=complex).ravel()
    y = np.asarray(b, dtype=complex).ravel()
    if x.size != y.size:
        raise ShapeError(
            "Multisets differ in size", expected=x.size, actual=y.size
        )
    if x.size == 0:
        return 0.0
    cost = np.abs(x[:, None] - y[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def frobenius(m: npt.ArrayLike) -> float:
    return float(np.linalg.norm(np.asarray(m)))
