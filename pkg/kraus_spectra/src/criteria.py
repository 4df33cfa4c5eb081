"""Operational tests on Kraus operators and the peripheral-spectrum predictor.

The predictor combines word-basis structure, star-closure, block
decomposition, invertible spans and primitivity into a set of admissible
cyclic orders for the peripheral eigenvalues, with named certificates for
every piece of evidence used.
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import reduce
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import structlog

from .algebra import (
    DEFAULT_CLOSURE_TOL,
    DEFAULT_LEAKAGE_TOL,
    block_decompose,
    generate_basis,
    is_star_closed,
)
from .channel import KrausChannel, dual, fixed_space, validate
from .exceptions import LimitError, PreconditionError, ShapeError
from .linalg import (
    DEFAULT_RANK_TOL,
    ComplexMatrix,
    SpanBuilder,
    SubspaceBasis,
    adjoint,
    as_matrix,
    char_discriminant,
    commutator,
    frobenius,
    kernel,
    spectral_norm,
    unvec,
    vec,
)

logger = structlog.get_logger(__name__)

STANDARD_POLYNOMIAL_MAX_ARITY = 8
HERMITIAN_PART_TOL = 1e-8
UNITARITY_TOL = 1e-8
INVERTIBILITY_CUTOFF = 1e-8
DISCRIMINANT_TOL = 1e-10
COMMUTATION_TOL = 1e-10


class StructureTag(str, Enum):
    IRREDUCIBLE = "irreducible"
    STAR_BLOCKS = "star_blocks"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Certificate:
    """A named piece of evidence behind a prediction."""

    name: str
    detail: Dict[str, Any] = field(default_factory=dict)


@dataclass
class PeripheralPrediction:
    """Constraints on the peripheral spectrum.

    ``order_bounds[i]`` lists the cyclic orders block ``i`` may contribute;
    the peripheral spectrum is contained in the union of the corresponding
    groups of roots of unity. ``period_bound`` is the LCM of every allowed
    order (any realized period divides it), ``longest_period`` the largest
    LCM of one order per block. ``None`` means unconstrained.
    """

    structure: StructureTag
    block_dims: List[int]
    order_bounds: List[List[int]]
    period_bound: Optional[int]
    longest_period: Optional[int]
    certificates: List[Certificate] = field(default_factory=list)
    global_orders: Optional[List[int]] = None

    def certificate(self, name: str) -> Optional[Certificate]:
        for cert in self.certificates:
            if cert.name == name:
                return cert
        return None

    def has_certificate(self, name: str) -> bool:
        return self.certificate(name) is not None

    def allowed_orders(self) -> Optional[List[int]]:
        if not self.order_bounds:
            return None
        return sorted({m for orders in self.order_bounds for m in orders})

    def allowed_points(self) -> Optional[ComplexMatrix]:
        orders = self.allowed_orders()
        if orders is None:
            return None
        # k/m reduced, so 1 = 0/1 = 0/2 appears once
        angles = {Fraction(k, m) for m in orders for k in range(m)}
        return np.array(
            [np.exp(2j * np.pi * float(q)) for q in sorted(angles)]
        )

    def is_allowed(self, value: complex, tol: float = 1e-6) -> bool:
        """Whether a peripheral eigenvalue is consistent with the prediction."""
        points = self.allowed_points()
        if points is None:
            return abs(abs(value) - 1) < tol
        return bool(np.min(np.abs(points - value)) < tol)


@dataclass(frozen=True)
class MixedUnitaryCommutator:
    v: ComplexMatrix
    hermitian_part_nonzero: bool
    hermitian_part_norm: float


@dataclass(frozen=True)
class PrimitivityResult:
    """Dimensions of the word spans S_1 .. S_{m_max}.

    ``certified`` is a proof of primitivity; its absence is not a proof of
    the opposite.
    """

    certified: bool
    witness_m: Optional[int]
    span_dims: List[int]
    m_max: int


@dataclass(frozen=True)
class PartitionReport:
    partitions: List[List[int]]
    evidence: List[Certificate]
    algebra_dimension: int
    star_closed: bool


def _matrix_power_list(a: ComplexMatrix, top: int) -> List[ComplexMatrix]:
    powers = []
    current = a
    for _ in range(top):
        powers.append(current)
        current = current @ a
    return powers


def _scaled_commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    scale = spectral_norm(a) * spectral_norm(b)
    c = commutator(a, b)
    return c / scale if scale > 0 else c


def _check_pair(a: ComplexMatrix, b: ComplexMatrix) -> int:
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n, n):
        raise ShapeError(
            "Both matrices must be square of one size",
            expected=(n, n),
            actual=b.shape,
        )
    return n


def shemesh(
    a: npt.ArrayLike, b: npt.ArrayLike, tol: float = DEFAULT_RANK_TOL
) -> SubspaceBasis:
    """Intersection of ker[A^k, B^l] over 1 <= k, l <= n - 1.

    Nonzero exactly when A and B have a common eigenvector; A and B leave
    it invariant and commute on it.
    """
    a, b = as_matrix(a), as_matrix(b)
    n = _check_pair(a, b)
    if n == 1:
        return SubspaceBasis.full(1)
    powers_a = _matrix_power_list(a, n - 1)
    powers_b = _matrix_power_list(b, n - 1)
    # Each commutator is scaled by ||A^k|| ||B^l|| so that one stacked
    # kernel with an absolute cutoff treats every block alike.
    stacked = np.vstack(
        [_scaled_commutator(ak, bl) for ak in powers_a for bl in powers_b]
    )
    return kernel(stacked, tol, scale=1.0)


def generalized_shemesh(
    h: npt.ArrayLike,
    others: Sequence[npt.ArrayLike],
    tol: float = DEFAULT_RANK_TOL,
    discriminant_tol: float = DISCRIMINANT_TOL,
) -> SubspaceBasis:
    """Intersection of ker[H^k, A_i] for H with pairwise distinct eigenvalues.

    Raises:
        PreconditionError: the discriminant of H vanishes at tolerance
    """
    h = as_matrix(h)
    mats = [as_matrix(m) for m in others]
    n = h.shape[0]
    for m in mats:
        _check_pair(h, m)
    disc = char_discriminant(h)
    scale = spectral_norm(h) ** (n * (n - 1))
    if abs(disc) <= discriminant_tol * scale:
        raise PreconditionError(
            "H must have pairwise distinct eigenvalues",
            hypothesis="nonzero discriminant of the characteristic polynomial",
            discriminant=disc,
            threshold=discriminant_tol * scale,
        )
    if n == 1 or not mats:
        return SubspaceBasis.full(n)
    stacked = np.vstack(
        [
            _scaled_commutator(hk, m)
            for hk in _matrix_power_list(h, n - 1)
            for m in mats
        ]
    )
    return kernel(stacked, tol, scale=1.0)


def _heap_permutations(m: int) -> Iterator[Tuple[List[int], int]]:
    """All permutations of range(m) with their signs (Heap's algorithm)."""
    perm = list(range(m))
    counters = [0] * m
    sign = 1
    yield perm[:], sign
    i = 0
    while i < m:
        if counters[i] < i:
            j = 0 if i % 2 == 0 else counters[i]
            perm[j], perm[i] = perm[i], perm[j]
            sign = -sign
            yield perm[:], sign
            counters[i] += 1
            i = 0
        else:
            counters[i] = 0
            i += 1


def standard_polynomial(mats: Sequence[npt.ArrayLike]) -> ComplexMatrix:
    """Alternating sum of all ordered products of the arguments.

    Raises:
        LimitError: more than eight arguments
    """
    m = len(mats)
    if m > STANDARD_POLYNOMIAL_MAX_ARITY:
        raise LimitError(
            "Too many arguments for the standard polynomial",
            limit=STANDARD_POLYNOMIAL_MAX_ARITY,
            requested=m,
        )
    if m == 0:
        raise ShapeError("Need at least one argument", expected=">= 1",
                         actual=0)
    xs = [as_matrix(x) for x in mats]
    shape = xs[0].shape
    for x in xs:
        if x.shape != shape:
            raise ShapeError(
                "Arguments must share one shape", expected=shape,
                actual=x.shape,
            )
    total = np.zeros((shape[0], shape[1]), dtype=complex)
    for perm, sign in _heap_permutations(m):
        total += sign * reduce(np.matmul, (xs[p] for p in perm))
    return total


def _require_unitary(u: ComplexMatrix, name: str) -> None:
    residual = frobenius(adjoint(u) @ u - np.eye(u.shape[0]))
    if residual >= UNITARITY_TOL:
        raise PreconditionError(
            f"{name} is not unitary",
            hypothesis="unitary input",
            residual=residual,
        )


def mixed_unitary_V(
    u_i: npt.ArrayLike, u_j: npt.ArrayLike
) -> MixedUnitaryCommutator:
    """The four-term word combination V_ij of a unitary pair.

    V_ij + V_ij^dagger equals S_4(U_i, U_j, U_i^dagger, U_j^dagger); a nonzero
    Hermitian part rules out algebras whose blocks are all at most 2x2.
    """
    u_i, u_j = as_matrix(u_i), as_matrix(u_j)
    _check_pair(u_i, u_j)
    _require_unitary(u_i, "U_i")
    _require_unitary(u_j, "U_j")
    ui_d, uj_d = adjoint(u_i), adjoint(u_j)
    v = (
        u_i @ u_j @ ui_d @ uj_d
        - ui_d @ u_j @ u_i @ uj_d
        + ui_d @ uj_d @ u_i @ u_j
        - u_i @ uj_d @ ui_d @ u_j
    )
    norm = frobenius(v + adjoint(v))
    return MixedUnitaryCommutator(
        v=v,
        hermitian_part_nonzero=norm > HERMITIAN_PART_TOL,
        hermitian_part_norm=norm,
    )


def _same_subspace(p: ComplexMatrix, q: ComplexMatrix, tol: float) -> bool:
    if p.shape[1] != q.shape[1]:
        return False
    return frobenius(p @ adjoint(p) - q @ adjoint(q)) < tol


def primitivity(
    ch: KrausChannel,
    m_max: Optional[int] = None,
    tol: float = DEFAULT_RANK_TOL,
) -> PrimitivityResult:
    """Dimensions of S_m = span of Kraus words of length m.

    S_{m+1} = span{A_i X : X in S_m}. Certified at the first m with
    dim S_m = n^2. Once a span repeats, the profile is periodic and the
    remaining levels are filled in without recomputation.
    """
    return word_span_profile(ch.kraus, m_max, tol)


def word_span_profile(
    kraus: Sequence[npt.ArrayLike],
    m_max: Optional[int] = None,
    tol: float = DEFAULT_RANK_TOL,
) -> PrimitivityResult:
    """Primitivity profile of an arbitrary list of square operators.

    Used on the restrictions of Kraus operators to a single block, which
    may outnumber d^2.
    """
    kraus = [as_matrix(a) for a in kraus]
    n = kraus[0].shape[0]
    n2 = n * n
    m_max = 2 * n2 if m_max is None else m_max
    if m_max < 1:
        raise PreconditionError(
            "m_max must be at least 1", hypothesis="m_max >= 1", m_max=m_max
        )

    def span_of(vectors: Sequence[ComplexMatrix]) -> ComplexMatrix:
        builder = SpanBuilder(tol)
        for v in vectors:
            builder.add(v)
        return builder.basis(n2).vectors

    current = span_of([vec(a) for a in kraus])
    history: List[ComplexMatrix] = [current]
    dims = [current.shape[1]]
    while len(dims) < m_max:
        products = [
            vec(a @ unvec(current[:, c], n))
            for a in kraus
            for c in range(current.shape[1])
        ]
        current = span_of(products)
        repeat = next(
            (
                idx
                for idx, earlier in enumerate(history)
                if _same_subspace(current, earlier, 1e-8)
            ),
            None,
        )
        if repeat is not None:
            cycle = dims[repeat:]
            while len(dims) < m_max:
                dims.append(cycle[(len(dims) - repeat) % len(cycle)])
            break
        history.append(current)
        dims.append(current.shape[1])

    witness = next((m + 1 for m, d in enumerate(dims) if d == n2), None)
    if witness is None:
        logger.debug(
            "Primitivity not certified", m_max=m_max, final_dim=dims[-1]
        )
    return PrimitivityResult(
        certified=witness is not None,
        witness_m=witness,
        span_dims=dims,
        m_max=m_max,
    )


def invertible_in_span(
    generators: Sequence[npt.ArrayLike],
    trials: int = 16,
    seed: int = 0,
    cutoff: float = INVERTIBILITY_CUTOFF,
) -> bool:
    """Randomized test for an invertible element of span{A_i}.

    det of a generic combination is a nonzero polynomial exactly when the
    span contains an invertible matrix, so random sampling decides almost
    surely.
    """
    if trials < 1:
        raise PreconditionError(
            "Need at least one trial", hypothesis="trials >= 1",
            trials=trials,
        )
    gens = [as_matrix(g) for g in generators]
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        coeffs = rng.standard_normal(len(gens)) + 1j * rng.standard_normal(
            len(gens)
        )
        combo = sum(c * g for c, g in zip(coeffs, gens))
        s = np.linalg.svd(combo, compute_uv=False)
        if s[0] > 0 and s[-1] > cutoff * s[0]:
            return True
    return False


def divisors(n: int) -> List[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _lcm(values: Sequence[int]) -> int:
    return reduce(lambda x, y: x * y // math.gcd(x, y), values, 1)


def _period_bounds(order_bounds: Sequence[Sequence[int]]) -> Tuple[int, int]:
    bound = _lcm([m for orders in order_bounds for m in orders])
    longest = max(
        _lcm(choice) for choice in itertools.product(*order_bounds)
    )
    return bound, longest


def _noncommuting_pair(
    kraus: Sequence[ComplexMatrix], tol: float = COMMUTATION_TOL
) -> Optional[Tuple[int, int]]:
    for i, j in itertools.combinations(range(len(kraus)), 2):
        if frobenius(_scaled_commutator(kraus[i], kraus[j])) > tol:
            return i, j
    return None


def _common_eigenvector(
    kraus: Sequence[ComplexMatrix], tol: float
) -> Optional[Certificate]:
    """Shemesh-type evidence on whether all Kraus operators share an
    eigenvector; None when neither criterion applies."""
    for idx, h in enumerate(kraus):
        others = [a for j, a in enumerate(kraus) if j != idx]
        try:
            space = generalized_shemesh(h, others, tol)
        except PreconditionError:
            continue
        return Certificate(
            "generalized_shemesh",
            {"reference": idx + 1, "dimension": space.dim},
        )
    if len(kraus) == 2:
        space = shemesh(kraus[0], kraus[1], tol)
        return Certificate("shemesh", {"dimension": space.dim})
    if len(kraus) == 1:
        return Certificate("shemesh", {"dimension": 1})
    return None


def _largest_block_evidence(
    basis: Sequence[ComplexMatrix],
    n: int,
    rng: np.random.Generator,
    tol: float = 1e-8,
) -> Tuple[int, Optional[int]]:
    """Bounds on the largest irreducible block from S_{2k} on generic
    algebra elements: S_{2k} vanishes identically iff every block is at
    most k x k. Returns (lower, upper); upper is None past the arity cap."""
    lower = 1
    for k in range(1, min(n, STANDARD_POLYNOMIAL_MAX_ARITY // 2 + 1)):
        elements = []
        for _ in range(2 * k):
            coeffs = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(
                len(basis)
            )
            x = sum(c * b for c, b in zip(coeffs, basis))
            elements.append(x / frobenius(x))
        value = frobenius(standard_polynomial(elements))
        if value <= tol:
            return lower, k
        lower = k + 1
    return lower, (n if lower >= n else None)


def integer_partitions(n: int, largest: Optional[int] = None) -> List[List[int]]:
    """Partitions of n as nonincreasing lists, largest parts first."""
    largest = n if largest is None else largest
    if n == 0:
        return [[]]
    result = []
    for first in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - first, first):
            result.append([first] + rest)
    return result


def _dimension_matches(partition: Sequence[int], dimension: int) -> bool:
    multiplicity: Dict[int, int] = {}
    for d in partition:
        multiplicity[d] = multiplicity.get(d, 0) + 1
    reachable = {0}
    for d, mult in multiplicity.items():
        reachable = {
            total + c * d * d for total in reachable for c in range(1, mult + 1)
        }
    return dimension in reachable


def admissible_partitions(
    ch: KrausChannel,
    tol: float = DEFAULT_RANK_TOL,
    seed: int = 0,
    closure_tol: float = DEFAULT_CLOSURE_TOL,
) -> PartitionReport:
    """Block partitions of n consistent with cheap algebraic evidence.

    Evidence used: a noncommuting Kraus pair, Shemesh-type common
    eigenvectors, standard polynomial identities on generic algebra
    elements, and the dimension of the generated algebra (for star-closed
    algebras, D = sum of d^2 over pairwise inequivalent blocks).
    """
    n = ch.dim
    kraus = list(ch.kraus)
    wb = generate_basis(kraus, include_identity=True, tol=tol)
    closure = is_star_closed(wb, closure_tol)
    candidates = integer_partitions(n)
    evidence: List[Certificate] = []

    pair = _noncommuting_pair(kraus)
    if pair is not None:
        evidence.append(
            Certificate("noncommuting_pair", {"pair": [pair[0] + 1, pair[1] + 1]})
        )
        candidates = [p for p in candidates if max(p) > 1]

    common = _common_eigenvector(kraus, tol)
    if common is not None:
        evidence.append(common)
        has_vector = common.detail["dimension"] > 0
        candidates = [p for p in candidates if (1 in p) == has_vector]

    rng = np.random.default_rng(seed)
    lower, upper = _largest_block_evidence(wb.basis, n, rng)
    evidence.append(
        Certificate(
            "standard_polynomial", {"largest_block_min": lower,
                                    "largest_block_max": upper}
        )
    )
    candidates = [
        p for p in candidates
        if max(p) >= lower and (upper is None or max(p) <= upper)
    ]

    if closure.closed:
        evidence.append(
            Certificate("algebra_dimension", {"dimension": wb.dimension})
        )
        candidates = [
            p for p in candidates if _dimension_matches(p, wb.dimension)
        ]

    return PartitionReport(
        partitions=candidates,
        evidence=evidence,
        algebra_dimension=wb.dimension,
        star_closed=closure.closed,
    )


def irreducible_by_fixed_points(
    ch: KrausChannel, tol: float = DEFAULT_RANK_TOL
) -> Optional[bool]:
    """For unital trace-preserving channels: one-dimensional fixed spaces
    of the channel and its dual. None outside that class."""
    flags = validate(ch)
    if not (flags.trace_preserving and flags.unital):
        return None
    return len(fixed_space(ch, tol)) == 1 and len(fixed_space(dual(ch), tol)) == 1


def predict_peripheral(
    ch: KrausChannel,
    seed: int = 0,
    rank_tol: float = DEFAULT_RANK_TOL,
    closure_tol: float = DEFAULT_CLOSURE_TOL,
    leakage_tol: float = DEFAULT_LEAKAGE_TOL,
    trials: int = 16,
    m_max: Optional[int] = None,
    validation_tol: float = 1e-10,
) -> PeripheralPrediction:
    """Admissible cyclic orders of the peripheral spectrum.

    Args:
        ch: Trace-preserving or unital channel
        seed: Seed for the generic commutant element and invertibility trials
        rank_tol: Word-basis independence threshold
        closure_tol: Star-closure residual threshold
        leakage_tol: Allowed off-block mass after block decomposition
        trials: Random combinations tried by the invertible-span test
        m_max: Longest word span checked for primitivity
        validation_tol: Threshold of the trace-preserving / unital checks

    Returns:
        PeripheralPrediction with the certificates behind it

    Raises:
        PreconditionError: channel is neither trace preserving nor unital
    """
    flags = validate(ch, validation_tol)
    if not flags.tp_or_unital:
        raise PreconditionError(
            "Prediction needs a trace-preserving or unital channel",
            hypothesis="trace_preserving or unital",
            tp_residual=flags.tp_residual,
            unital_residual=flags.unital_residual,
        )
    n = ch.dim
    kraus = list(ch.kraus)
    certificates: List[Certificate] = []

    wb = generate_basis(kraus, include_identity=True, tol=rank_tol)
    closure = is_star_closed(wb, closure_tol)
    certificates.append(
        Certificate(
            "algebra_dimension",
            {"dimension": wb.dimension, "star_closed": closure.closed},
        )
    )
    pair = _noncommuting_pair(kraus)
    if pair is not None:
        certificates.append(
            Certificate("noncommuting_pair", {"pair": [pair[0] + 1, pair[1] + 1]})
        )
        if len(kraus) == 2 or n == 3:
            space = shemesh(kraus[pair[0]], kraus[pair[1]], rank_tol)
            if space.dim == 0:
                certificates.append(
                    Certificate("shemesh_trivial", {"pair": [pair[0] + 1,
                                                             pair[1] + 1]})
                )

    global_orders = None
    if invertible_in_span(kraus, trials, seed):
        global_orders = divisors(n)
        certificates.append(
            Certificate("invertible_span_global", {"orders": global_orders})
        )

    global_invertible = global_orders is not None
    if wb.dimension == n * n:
        structure = StructureTag.IRREDUCIBLE
        block_dims = [n]
        if global_invertible:
            order_bounds = [divisors(n)]
            certificates.append(
                Certificate("invertible_span", {"block": 1, "dim": n})
            )
        else:
            order_bounds = [list(range(1, n * n + 1))]
    elif closure.closed:
        blocks = block_decompose(
            kraus,
            tol=rank_tol,
            closure_tol=closure_tol,
            leakage_tol=leakage_tol,
            seed=seed,
        )
        block_dims = blocks.block_dims
        structure = StructureTag.STAR_BLOCKS
        certificates.append(
            Certificate(
                "block_decomposition",
                {"block_dims": block_dims, "leakage": blocks.leakage},
            )
        )
        if len(set(block_dims)) == len(block_dims):
            order_bounds = []
            for k, d in enumerate(block_dims):
                restricted = [blocks.restrict(a, k) for a in kraus]
                block_prim = (
                    word_span_profile(restricted, tol=rank_tol)
                    if d > 1
                    else None
                )
                if block_prim is not None and block_prim.certified:
                    order_bounds.append([1])
                    certificates.append(
                        Certificate(
                            "block_primitive",
                            {"block": k + 1, "dim": d,
                             "m": block_prim.witness_m},
                        )
                    )
                elif invertible_in_span(restricted, trials, seed):
                    order_bounds.append(divisors(d))
                    certificates.append(
                        Certificate("invertible_span", {"block": k + 1, "dim": d})
                    )
                else:
                    order_bounds.append(list(range(1, d * d + 1)))
        else:
            order_bounds = []
            certificates.append(
                Certificate("coinciding_dimensions", {"block_dims": block_dims})
            )
    else:
        structure = StructureTag.INCONCLUSIVE
        block_dims = []
        order_bounds = []
        certificates.append(
            Certificate("not_star_closed", {"max_residual": closure.max_residual})
        )

    prim = primitivity(ch, m_max, rank_tol)
    if prim.certified:
        certificates.append(
            Certificate("primitive_at_m", {"m": prim.witness_m})
        )
        order_bounds = [[1] for _ in block_dims] or [[1]]

    if flags.trace_preserving and flags.unital:
        certificates.append(
            Certificate(
                "fixed_space_dims",
                {
                    "channel": len(fixed_space(ch, rank_tol)),
                    "dual": len(fixed_space(dual(ch), rank_tol)),
                },
            )
        )

    if order_bounds:
        period_bound, longest = _period_bounds(order_bounds)
    else:
        period_bound, longest = None, None

    prediction = PeripheralPrediction(
        structure=structure,
        block_dims=block_dims,
        order_bounds=order_bounds,
        period_bound=period_bound,
        longest_period=longest,
        certificates=certificates,
        global_orders=global_orders,
    )
    logger.info(
        "Peripheral prediction",
        structure=structure.value,
        block_dims=block_dims,
        period_bound=period_bound,
        certificates=[c.name for c in certificates],
    )
    return prediction
