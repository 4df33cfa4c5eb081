"""Iterated channel dynamics: trajectories, cycles and the attractor projector."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import List, Optional

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla
import structlog

from .channel import (
    DEFAULT_PERIPHERAL_EPS,
    KrausChannel,
    apply,
    spectrum,
    superoperator_matrix,
    validate,
)
from .exceptions import NumericalFailure, PreconditionError, ShapeError
from .linalg import ComplexMatrix, adjoint, as_matrix, frobenius

logger = structlog.get_logger(__name__)

DEFAULT_CYCLE_TOL = 1e-6
PROJECTOR_TOL = 1e-7


@dataclass(frozen=True)
class Trajectory:
    """States rho_0, Phi(rho_0), ..., Phi^steps(rho_0)."""

    states: List[ComplexMatrix]

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    def traces(self) -> np.ndarray:
        return np.array([np.trace(s) for s in self.states])

    def distances(self, lag: int) -> List[float]:
        """||Phi^{k+lag}(rho_0) - Phi^k(rho_0)||_F for every valid k."""
        if lag < 1:
            raise ValueError("lag must be positive")
        return [
            frobenius(self.states[k + lag] - self.states[k])
            for k in range(len(self.states) - lag)
        ]


@dataclass(frozen=True)
class CycleReport:
    """Rational phases of the peripheral eigenvalues.

    ``period`` is None when some peripheral eigenvalue is not a root of
    unity of order at most n^2 (listed in ``non_cyclic``).
    """

    period: Optional[int]
    angles: List[Fraction]
    non_cyclic: List[complex] = field(default_factory=list)


def iterate(
    ch: KrausChannel, rho0: npt.ArrayLike, steps: int
) -> Trajectory:
    """Apply the channel ``steps`` times, keeping every intermediate state."""
    rho = as_matrix(rho0)
    if rho.shape != (ch.dim, ch.dim):
        raise ShapeError(
            "Initial state does not match the channel dimension",
            expected=(ch.dim, ch.dim),
            actual=rho.shape,
        )
    if steps < 0:
        raise ValueError("steps must be nonnegative")

    hermitian_gap = frobenius(rho - adjoint(rho))
    if hermitian_gap > 1e-10 or abs(np.trace(rho) - 1) > 1e-10:
        logger.warning(
            "Initial operator is not a normalized Hermitian state",
            hermitian_gap=hermitian_gap,
            trace=complex(np.trace(rho)),
        )
    else:
        min_eig = float(sla.eigvalsh(rho).min())
        if min_eig <= -1e-10:
            logger.warning(
                "Initial state is not positive semidefinite",
                min_eigenvalue=min_eig,
            )

    states = [rho]
    for _ in range(steps):
        rho = apply(ch, rho)
        states.append(rho)
    return Trajectory(states)


def _rational_phase(value: complex, max_denominator: int) -> Fraction:
    turn = (np.angle(value) / (2 * np.pi)) % 1.0
    frac = Fraction(turn).limit_denominator(max_denominator)
    return Fraction(frac.numerator % frac.denominator, frac.denominator)


def detect_cycle(
    ch: KrausChannel,
    tol: float = DEFAULT_CYCLE_TOL,
    epsilon: float = DEFAULT_PERIPHERAL_EPS,
) -> CycleReport:
    """Period of the asymptotic dynamics read off the peripheral phases.

    Each phase is approximated by p/q with q <= n^2 and accepted when
    |lambda^q - 1| < tol; the period is the LCM of the accepted q.
    """
    flags = validate(ch)
    if not flags.tp_or_unital:
        raise PreconditionError(
            "Cycle detection needs a trace-preserving or unital channel",
            hypothesis="trace_preserving or unital",
            tp_residual=flags.tp_residual,
            unital_residual=flags.unital_residual,
        )
    n2 = ch.dim * ch.dim
    angles: List[Fraction] = []
    non_cyclic: List[complex] = []
    for value in spectrum(ch, epsilon).peripheral:
        frac = _rational_phase(value, n2)
        if abs(value ** frac.denominator - 1) < tol:
            angles.append(frac)
        else:
            non_cyclic.append(complex(value))

    if non_cyclic:
        logger.info(
            "Peripheral eigenvalues without a short rational phase",
            count=len(non_cyclic),
        )
        period = None
    else:
        period = reduce(
            lambda a, b: a * b // math.gcd(a, b),
            (f.denominator for f in angles),
            1,
        )
    return CycleReport(period=period, angles=angles, non_cyclic=non_cyclic)


def asymptotic_projector(
    ch: KrausChannel,
    epsilon: float = DEFAULT_PERIPHERAL_EPS,
    tol: float = PROJECTOR_TOL,
) -> ComplexMatrix:
    """Oblique spectral projector onto the peripheral eigenvectors.

    P = R (L^H R)^{-1} L^H from matched right and left eigenvectors.

    Raises:
        NumericalFailure: the peripheral part is not diagonalizable at
            working precision
    """
    phi_hat = superoperator_matrix(ch)
    try:
        values, left, right = sla.eig(phi_hat, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(
            "Eigenvalue iteration did not converge",
            issue="eigensolver_nonconvergence",
            cause=e,
        ) from e
    mask = np.abs(values) >= 1 - epsilon
    size = phi_hat.shape[0]
    if not mask.any():
        return np.zeros((size, size), dtype=complex)

    r, l_h = right[:, mask], adjoint(left[:, mask])
    gram = l_h @ r
    if np.linalg.cond(gram) > 1e10:
        raise NumericalFailure(
            "Left and right peripheral eigenvectors are nearly orthogonal",
            issue="defective_peripheral_part",
            condition=float(np.linalg.cond(gram)),
        )
    projector = r @ np.linalg.solve(gram, l_h)

    idempotency = frobenius(projector @ projector - projector)
    commutation = frobenius(phi_hat @ projector - projector @ phi_hat)
    if idempotency >= tol or commutation >= tol:
        raise NumericalFailure(
            "Peripheral spectral projector failed verification",
            issue="defective_peripheral_part",
            partial=projector,
            idempotency=idempotency,
            commutation=commutation,
        )
    return projector
