"""The algebra generated by a set of Kraus operators.

Words in the generators are enumerated breadth first and reduced to a basis;
the basis drives the star-closure test, the commutant, irreducibility and the
orthogonal block decomposition of star-algebras.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla
import structlog

from .exceptions import (
    NumericalFailure,
    PreconditionError,
    ShapeError,
    StructureError,
)
from .linalg import (
    DEFAULT_RANK_TOL,
    ComplexMatrix,
    SpanBuilder,
    adjoint,
    as_matrix,
    frobenius,
    kernel,
    span_coordinates,
    unvec,
    vec,
)

logger = structlog.get_logger(__name__)

IDENTITY_LABEL = "I"
DEFAULT_CLOSURE_TOL = 1e-8
DEFAULT_LEAKAGE_TOL = 1e-7
CLUSTER_GAP = 1e-6


@dataclass(frozen=True)
class WordBasis:
    """Linearly independent words spanning the generated algebra.

    ``labels[k]`` spells ``basis[k]`` as 1-based generator indices read left
    to right ("12" is A_1 A_2); the empty word is labelled "I".
    ``level_dims[m]`` is the span dimension after all words of length <= m+1.
    """

    generators: List[ComplexMatrix]
    include_identity: bool
    basis: List[ComplexMatrix]
    labels: List[str]
    level_dims: List[int]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def n(self) -> int:
        return int(self.generators[0].shape[0])

    def contains(self, m: npt.ArrayLike) -> float:
        """Relative residual of m against span(basis)."""
        _, resid = span_coordinates(self.basis, as_matrix(m))
        return resid


@dataclass(frozen=True)
class StarClosure:
    closed: bool
    adjoint_coefficients: List[ComplexMatrix]
    max_residual: float
    tol: float


@dataclass(frozen=True)
class BlockStructure:
    """Orthonormal change of basis putting every generator in block form.

    Columns of ``unitary`` are grouped by block in the order of
    ``block_dims`` (descending).
    """

    unitary: ComplexMatrix
    block_dims: List[int]
    block_irreducible: List[bool]
    leakage: float = 0.0
    notes: List[str] = field(default_factory=list)

    @property
    def offsets(self) -> List[int]:
        return [0] + list(np.cumsum(self.block_dims))

    def isometry(self, k: int) -> ComplexMatrix:
        lo, hi = self.offsets[k], self.offsets[k + 1]
        return self.unitary[:, lo:hi]

    def projectors(self) -> List[ComplexMatrix]:
        return [
            self.isometry(k) @ adjoint(self.isometry(k))
            for k in range(len(self.block_dims))
        ]

    def restrict(self, m: npt.ArrayLike, k: int) -> ComplexMatrix:
        v = self.isometry(k)
        return adjoint(v) @ as_matrix(m) @ v

    def to_block_basis(self, m: npt.ArrayLike) -> ComplexMatrix:
        return adjoint(self.unitary) @ as_matrix(m) @ self.unitary

    def off_block_mass(self, m: npt.ArrayLike) -> float:
        """Frobenius norm of everything outside the diagonal blocks."""
        conj = self.to_block_basis(m)
        mask = np.ones(conj.shape, dtype=bool)
        offs = self.offsets
        for k in range(len(self.block_dims)):
            mask[offs[k]:offs[k + 1], offs[k]:offs[k + 1]] = False
        return frobenius(conj[mask])


def word_length_cap(n: int) -> int:
    """Length beyond which no new words can enter the basis."""
    return math.ceil((n * n + 3) / 2)


def _check_generators(generators: Sequence[npt.ArrayLike]) -> List[ComplexMatrix]:
    if not generators:
        raise ShapeError("No generators given", expected=">= 1", actual=0)
    gens = [as_matrix(g) for g in generators]
    n = gens[0].shape[0]
    for g in gens:
        if g.shape != (n, n):
            raise ShapeError(
                "Generators must be square and share one size",
                expected=(n, n),
                actual=g.shape,
            )
    return gens


def _word_label(parent: str, idx: int, k: int) -> str:
    token = str(idx + 1)
    if k > 9:
        return f"{parent}.{token}" if parent else token
    return parent + token


def generate_basis(
    generators: Sequence[npt.ArrayLike],
    include_identity: bool = True,
    tol: float = DEFAULT_RANK_TOL,
    max_length: Optional[int] = None,
) -> WordBasis:
    """Breadth-first word enumeration reduced to a basis.

    Only words that entered the basis are extended: if w is spanned by the
    current basis, so is every right extension of w.

    Args:
        generators: Square matrices of one common size
        include_identity: Seed the basis with the empty word
        tol: Relative residual a word needs to join the basis
        max_length: Word-length cap; defaults to ceil((n^2 + 3) / 2)

    Returns:
        WordBasis with labels and per-level dimensions
    """
    gens = _check_generators(generators)
    n, k = gens[0].shape[0], len(gens)
    cap = word_length_cap(n) if max_length is None else max_length

    span = SpanBuilder(tol)
    basis: List[ComplexMatrix] = []
    labels: List[str] = []
    eye = np.eye(n, dtype=complex)
    if include_identity:
        span.add(vec(eye))
        basis.append(eye)
        labels.append(IDENTITY_LABEL)

    frontier: List[Tuple[str, ComplexMatrix]] = [("", eye)]
    level_dims: List[int] = []
    for length in range(1, cap + 1):
        next_frontier: List[Tuple[str, ComplexMatrix]] = []
        for label, word in frontier:
            for idx, g in enumerate(gens):
                candidate = word @ g
                accepted, _ = span.add(vec(candidate))
                if accepted:
                    new_label = _word_label(label, idx, k)
                    basis.append(candidate)
                    labels.append(new_label)
                    next_frontier.append((new_label, candidate))
        level_dims.append(len(basis))
        if not next_frontier:
            break
        frontier = next_frontier

    if not basis:
        raise PreconditionError(
            "Every generator vanishes; the algebra without identity is zero",
            hypothesis="some nonzero generator or include_identity",
            generators=k,
        )

    logger.debug(
        "Generated word basis",
        n=n,
        generators=k,
        dimension=len(basis),
        levels=len(level_dims),
    )
    return WordBasis(
        generators=gens,
        include_identity=include_identity,
        basis=basis,
        labels=labels,
        level_dims=level_dims,
    )


def is_star_closed(
    wb: WordBasis, tol: float = DEFAULT_CLOSURE_TOL
) -> StarClosure:
    """Whether the adjoint of every basis element stays in the span.

    Also returns the coordinates of each generator's adjoint in the basis,
    in basis order.
    """
    worst = 0.0
    for m in wb.basis:
        _, resid = span_coordinates(wb.basis, adjoint(m))
        worst = max(worst, resid)
    coefficients = [
        span_coordinates(wb.basis, adjoint(g))[0] for g in wb.generators
    ]
    return StarClosure(
        closed=worst < tol,
        adjoint_coefficients=coefficients,
        max_residual=worst,
        tol=tol,
    )


def is_irreducible(
    generators: Sequence[npt.ArrayLike], tol: float = DEFAULT_RANK_TOL
) -> bool:
    """Burnside: no common invariant subspace iff the unital algebra is M_n."""
    wb = generate_basis(generators, include_identity=True, tol=tol)
    return wb.dimension == wb.n * wb.n


def commutant_of(
    mats: Sequence[npt.ArrayLike], n: int, tol: float = DEFAULT_RANK_TOL
) -> List[ComplexMatrix]:
    """Frobenius-orthonormal basis of {X : XE = EX for every E in mats}."""
    eye = np.eye(n, dtype=complex)
    rows = []
    for m in mats:
        e = as_matrix(m)
        norm = frobenius(e)
        if norm == 0.0:
            continue
        e = e / norm
        # vec(XE - EX) = (E^T kron I - I kron E) vec(X)
        rows.append(np.kron(e.T, eye) - np.kron(eye, e))
    if not rows:
        return [unvec(v, n) for v in np.eye(n * n, dtype=complex).T]
    null = kernel(np.vstack(rows), tol)
    return [unvec(v, n) for v in null.as_list()]


def commutant(
    wb: WordBasis, tol: float = DEFAULT_RANK_TOL
) -> List[ComplexMatrix]:
    return commutant_of(wb.basis, wb.n, tol)


def _generic_hermitian(
    elements: Sequence[ComplexMatrix], rng: np.random.Generator
) -> ComplexMatrix:
    h = np.zeros_like(elements[0])
    for x in elements:
        re, im = rng.standard_normal(2)
        h = h + re * 0.5 * (x + adjoint(x)) + im * 0.5j * (adjoint(x) - x)
    norm = frobenius(h)
    return h / norm if norm > 0 else h


def _eigen_clusters(values: np.ndarray) -> List[List[int]]:
    clusters: List[List[int]] = [[0]]
    for idx in range(1, len(values)):
        if values[idx] - values[idx - 1] > CLUSTER_GAP:
            clusters.append([idx])
        else:
            clusters[-1].append(idx)
    return clusters


def _split(
    gens: Sequence[ComplexMatrix],
    isometry: ComplexMatrix,
    rng: np.random.Generator,
    tol: float,
) -> List[ComplexMatrix]:
    d = isometry.shape[1]
    restricted = [adjoint(isometry) @ g @ isometry for g in gens]
    wb = generate_basis(restricted, include_identity=True, tol=tol)
    if wb.dimension == d * d:
        return [isometry]

    comm = commutant(wb, tol)
    for attempt in range(2):
        h = _generic_hermitian(comm, rng)
        values, vectors = sla.eigh(h)
        clusters = _eigen_clusters(values)
        if len(clusters) > 1:
            break
        logger.info(
            "Commutant element degenerate, resampling",
            block_dim=d,
            commutant_dim=len(comm),
            attempt=attempt,
        )
    else:
        raise NumericalFailure(
            "Could not split a reducible block",
            issue="degenerate_commutant_element",
            block_dim=d,
            commutant_dim=len(comm),
        )

    pieces: List[ComplexMatrix] = []
    for cluster in clusters:
        pieces.extend(_split(gens, isometry @ vectors[:, cluster], rng, tol))
    return pieces


def block_decompose(
    generators: Sequence[npt.ArrayLike],
    tol: float = DEFAULT_RANK_TOL,
    closure_tol: float = DEFAULT_CLOSURE_TOL,
    leakage_tol: float = DEFAULT_LEAKAGE_TOL,
    seed: int = 0,
) -> BlockStructure:
    """Simultaneous orthogonal block diagonalization of a star-algebra.

    Eigenspaces of a generic Hermitian commutant element reduce every
    generator; each piece is split again until the generators act
    irreducibly on it.

    Raises:
        StructureError: the generated algebra is not star-closed
        NumericalFailure: a block cannot be split or leaks above leakage_tol
    """
    gens = _check_generators(generators)
    n = gens[0].shape[0]
    wb = generate_basis(gens, include_identity=True, tol=tol)
    closure = is_star_closed(wb, closure_tol)
    if not closure.closed:
        raise StructureError(
            "Generated algebra is not closed under adjoints",
            max_residual=closure.max_residual,
            closure_tol=closure_tol,
        )

    rng = np.random.default_rng(seed)
    pieces = _split(gens, np.eye(n, dtype=complex), rng, tol)
    pieces.sort(key=lambda v: -v.shape[1])
    unitary = np.hstack(pieces)
    dims = [int(v.shape[1]) for v in pieces]

    structure = BlockStructure(
        unitary=unitary,
        block_dims=dims,
        block_irreducible=[True] * len(dims),
    )
    leakage = max(structure.off_block_mass(g) for g in gens)
    unitarity = frobenius(adjoint(unitary) @ unitary - np.eye(n))
    if leakage > leakage_tol or unitarity > 1e-10:
        raise NumericalFailure(
            "Block decomposition leaks between blocks",
            issue="block_leakage",
            partial=dims,
            leakage=leakage,
            leakage_tol=leakage_tol,
            unitarity_residual=unitarity,
        )
    logger.debug("Block decomposition", block_dims=dims, leakage=leakage)
    return BlockStructure(
        unitary=unitary,
        block_dims=dims,
        block_irreducible=[True] * len(dims),
        leakage=leakage,
    )
