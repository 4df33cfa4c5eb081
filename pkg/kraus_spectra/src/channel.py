"""Quantum channels in Kraus form and their spectral data."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla
import structlog

from .exceptions import NumericalFailure, PreconditionError, ShapeError
from .linalg import (
    ComplexMatrix,
    adjoint,
    as_matrix,
    eigenpairs,
    frobenius,
    kernel,
    unvec,
    vec,
)

logger = structlog.get_logger(__name__)

DEFAULT_VALIDATION_TOL = 1e-10
DEFAULT_PERIPHERAL_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive map X -> sum_i A_i X A_i^dagger.

    Mixed-unitary weights are carried inside the operators
    (A_i = sqrt(p_i) U_i).
    """

    kraus: Tuple[ComplexMatrix, ...]

    def __post_init__(self) -> None:
        ops = tuple(as_matrix(a) for a in self.kraus)
        if not ops:
            raise ShapeError(
                "A channel needs at least one Kraus operator",
                expected=">= 1",
                actual=0,
            )
        n = ops[0].shape[0]
        for idx, a in enumerate(ops):
            if a.shape != (n, n):
                raise ShapeError(
                    f"Kraus operator {idx} is not {n}x{n}",
                    expected=(n, n),
                    actual=a.shape,
                )
        if len(ops) > n * n:
            raise ShapeError(
                "More Kraus operators than n^2",
                expected=f"<= {n * n}",
                actual=len(ops),
            )
        object.__setattr__(self, "kraus", ops)

    @classmethod
    def from_kraus(cls, kraus: Sequence[npt.ArrayLike]) -> "KrausChannel":
        return cls(tuple(np.asarray(a, dtype=complex) for a in kraus))

    @property
    def dim(self) -> int:
        return int(self.kraus[0].shape[0])

    @property
    def num_kraus(self) -> int:
        return len(self.kraus)

    def __call__(self, x: npt.ArrayLike) -> ComplexMatrix:
        return apply(self, x)


@dataclass(frozen=True)
class ChannelFlags:
    trace_preserving: bool
    unital: bool
    tp_residual: float
    unital_residual: float
    tol: float

    @property
    def tp_or_unital(self) -> bool:
        return self.trace_preserving or self.unital


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues of the superoperator and the peripheral eigenpairs.

    Eigenvalues are ordered by decreasing modulus, then by phase angle.
    Peripheral eigenmatrices have unit Frobenius norm and their
    largest-modulus entry is real positive.
    """

    eigenvalues: ComplexMatrix
    peripheral: ComplexMatrix
    peripheral_eigenmatrices: List[ComplexMatrix]
    epsilon: float

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max())


@dataclass(frozen=True)
class FixedPointResult:
    """Outcome of the Cesaro fixed-point search.

    ``state`` is always the limit state; ``fixed_point`` is the same state
    when it is positive definite and ``None`` otherwise.
    """

    state: ComplexMatrix
    full_rank: bool
    min_eigenvalue: float
    residual: float
    doublings: int
    notes: List[str] = field(default_factory=list)

    @property
    def fixed_point(self) -> Optional[ComplexMatrix]:
        return self.state if self.full_rank else None


def validate(
    ch: KrausChannel, tol: float = DEFAULT_VALIDATION_TOL
) -> ChannelFlags:
    """Check trace preservation and unitality.

    Args:
        ch: Channel to inspect
        tol: Frobenius-norm threshold on the defining identities

    Returns:
        ChannelFlags with both verdicts and their residuals
    """
    eye = np.eye(ch.dim, dtype=complex)
    tp_res = frobenius(sum(adjoint(a) @ a for a in ch.kraus) - eye)
    un_res = frobenius(sum(a @ adjoint(a) for a in ch.kraus) - eye)
    return ChannelFlags(
        trace_preserving=tp_res < tol,
        unital=un_res < tol,
        tp_residual=tp_res,
        unital_residual=un_res,
        tol=tol,
    )


def apply(ch: KrausChannel, x: npt.ArrayLike) -> ComplexMatrix:
    """Evaluate sum_i A_i X A_i^dagger."""
    x = as_matrix(x)
    if x.shape != (ch.dim, ch.dim):
        raise ShapeError(
            "Input does not match the channel dimension",
            expected=(ch.dim, ch.dim),
            actual=x.shape,
        )
    return sum(a @ x @ adjoint(a) for a in ch.kraus)


def dual(ch: KrausChannel) -> KrausChannel:
    """Channel with adjointed Kraus operators (the Heisenberg picture)."""
    return KrausChannel(tuple(adjoint(a) for a in ch.kraus))


def superoperator_matrix(ch: KrausChannel) -> ComplexMatrix:
    """n^2 x n^2 matrix acting on column-stacked vectorizations.

    With vec(AXB) = (B^T kron A) vec(X) the map is sum_i conj(A_i) kron A_i.
    """
    return sum(np.kron(np.conj(a), a) for a in ch.kraus)


def _normalize_eigenmatrix(x: ComplexMatrix) -> ComplexMatrix:
    x = x / frobenius(x)
    flat = x.reshape(-1, order="F")
    pivot = flat[int(np.argmax(np.abs(flat)))]
    return x * (abs(pivot) / pivot)


def _spectral_order(values: ComplexMatrix) -> np.ndarray:
    angles = np.angle(values)
    # -pi and pi denote the same direction; keep the positive one
    angles = np.where(angles <= -np.pi + 1e-12, np.pi, angles)
    moduli = np.round(np.abs(values), 9)
    return np.lexsort((np.round(angles, 9), -moduli))


def spectrum(
    ch: KrausChannel, epsilon: float = DEFAULT_PERIPHERAL_EPS
) -> SpectrumReport:
    """Eigenvalues of the superoperator and the peripheral eigenmatrices.

    Args:
        ch: Channel to analyze
        epsilon: Eigenvalues with modulus >= 1 - epsilon count as peripheral

    Returns:
        SpectrumReport with all n^2 eigenvalues
    """
    if not 0 < epsilon < 0.5:
        raise PreconditionError(
            "Peripheral band must lie in (0, 0.5)",
            hypothesis="0 < epsilon < 0.5",
            epsilon=epsilon,
        )
    phi_hat = superoperator_matrix(ch)
    values, vectors = eigenpairs(phi_hat)
    order = _spectral_order(values)
    values, vectors = values[order], vectors[:, order]

    mask = np.abs(values) >= 1 - epsilon
    eigenmatrices = [
        _normalize_eigenmatrix(unvec(vectors[:, k], ch.dim))
        for k in np.flatnonzero(mask)
    ]
    logger.debug(
        "Computed superoperator spectrum",
        dim=ch.dim,
        num_kraus=ch.num_kraus,
        peripheral_count=int(mask.sum()),
    )
    return SpectrumReport(
        eigenvalues=values,
        peripheral=values[mask],
        peripheral_eigenmatrices=eigenmatrices,
        epsilon=epsilon,
    )


def fixed_space(
    ch: KrausChannel, tol: float = DEFAULT_VALIDATION_TOL
) -> List[ComplexMatrix]:
    """Frobenius-orthonormal basis of {X : Phi(X) = X}."""
    n2 = ch.dim * ch.dim
    null = kernel(superoperator_matrix(ch) - np.eye(n2), tol)
    return [unvec(v, ch.dim) for v in null.as_list()]


def full_rank_fixed_point(
    ch: KrausChannel,
    tol: float = 1e-9,
    positivity_cutoff: float = 1e-8,
    max_doublings: int = 64,
) -> FixedPointResult:
    """Cesaro limit of Phi^k(I/n) and whether it is positive definite.

    The Cesaro average over N steps is doubled in place,
    C_2N = C_N (I + Phi^N) / 2, so 2^d steps cost d matrix squarings.

    Raises:
        PreconditionError: channel is neither trace preserving nor unital
        NumericalFailure: no convergence within max_doublings
    """
    flags = validate(ch)
    if not flags.tp_or_unital:
        raise PreconditionError(
            "Fixed-point search needs a trace-preserving or unital channel",
            hypothesis="trace_preserving or unital",
            tp_residual=flags.tp_residual,
            unital_residual=flags.unital_residual,
        )

    n = ch.dim
    phi_hat = superoperator_matrix(ch)
    start = vec(np.eye(n, dtype=complex) / n)
    power = phi_hat.copy()
    average = start.copy()
    rho = unvec(average, n)
    residual = frobenius(apply(ch, rho) - rho)
    doublings = 0
    while residual >= tol:
        if doublings >= max_doublings:
            raise NumericalFailure(
                "Cesaro average did not converge",
                issue="fixed_point_nonconvergence",
                partial=rho,
                residual=residual,
                doublings=doublings,
            )
        average = 0.5 * (average + power @ average)
        power = power @ power
        doublings += 1
        if not np.all(np.isfinite(power)):
            raise NumericalFailure(
                "Superoperator powers overflowed",
                issue="fixed_point_overflow",
                partial=rho,
                doublings=doublings,
            )
        rho = unvec(average, n)
        rho = 0.5 * (rho + adjoint(rho))
        residual = frobenius(apply(ch, rho) - rho)

    trace = np.trace(rho)
    if abs(trace) > 0:
        rho = rho / trace
    min_eig = float(sla.eigvalsh(rho).min())
    full_rank = min_eig > positivity_cutoff
    notes = [] if full_rank else ["no full-rank fixed point found"]
    logger.debug(
        "Fixed-point search finished",
        doublings=doublings,
        residual=residual,
        min_eigenvalue=min_eig,
        full_rank=full_rank,
    )
    return FixedPointResult(
        state=rho,
        full_rank=full_rank,
        min_eigenvalue=min_eig,
        residual=residual,
        doublings=doublings,
        notes=notes,
    )


def schwarz_defect(
    ch: KrausChannel, x: npt.ArrayLike, tol: float = 1e-10
) -> float:
    """Smallest eigenvalue of Phi(X^dagger X) - Phi(X)^dagger Phi(X).

    Nonnegative (up to rounding) whenever Phi(I) <= I.
    """
    phi_identity = apply(ch, np.eye(ch.dim, dtype=complex))
    top = float(sla.eigvalsh(0.5 * (phi_identity + adjoint(phi_identity))).max())
    if top > 1 + tol:
        raise PreconditionError(
            "Schwarz inequality needs Phi(I) <= I",
            hypothesis="subunital",
            largest_eigenvalue=top,
        )
    x = as_matrix(x)
    y = apply(ch, x)
    gap = apply(ch, adjoint(x) @ x) - adjoint(y) @ y
    return float(sla.eigvalsh(0.5 * (gap + adjoint(gap))).min())
