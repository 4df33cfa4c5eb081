"""Named channel families and seeded random generators."""

from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .exceptions import PreconditionError, ShapeError
from .linalg import ComplexMatrix, adjoint

SQRT2 = np.sqrt(2.0)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


def example1_kraus(phi: float) -> List[ComplexMatrix]:
    """Two-operator unital qutrit channel with blocks 2 + 1.

    Trace preserving and unital for every phi; peripheral spectrum {1, -1}.
    """
    s, c = np.sin(phi), np.cos(phi)
    a1 = np.array(
        [
            [0.3, 1j * s / SQRT2, -0.3],
            [-1j * s / SQRT2, 0.0, -1j * s / SQRT2],
            [-0.3, 1j * s / SQRT2, 0.3],
        ],
        dtype=complex,
    )
    a2 = np.array(
        [
            [0.4 - c / 2, 0.0, -c / 2 - 0.4],
            [0.0, c, 0.0],
            [-c / 2 - 0.4, 0.0, 0.4 - c / 2],
        ],
        dtype=complex,
    )
    return [a1, a2]


def example2_kraus(phi: float, normalize: bool = True) -> List[ComplexMatrix]:
    """Three Hermitian qutrit operators sharing the eigenvector (1, -1, sqrt 2).

    Each A_i is (1/sqrt 2) v v^dagger on the common eigenvector v plus a
    traceless part on its complement, spanned by e1 = (1, 1, 0)/sqrt 2 and
    e2 = (1, -1, -sqrt 2)/2. There A_1, A_2, A_3 act as s sigma_x,
    -c sigma_z and (s/sqrt 2) sigma_y in the (e1, e2) basis, three
    independent directions, so the 2 x 2 part is primitive whenever
    sin(phi) cos(phi) != 0 and the peripheral spectrum is {1}.

    The operators satisfy sum A_i^2 = (1 + s^2/2) on the complement and 3/2
    on v, so by default they are rescaled to A_i G^{-1/2}
    (G = sum A_i^dagger A_i). G commutes with every A_i, so the rescaled
    operators stay Hermitian with the same eigenvector and 2 + 1 split.
    """
    s, c = np.sin(phi), np.cos(phi)
    a = 1 / (4 * SQRT2)
    h = 1 / (2 * SQRT2)
    a1 = np.array(
        [
            [a + s / SQRT2, -a, 0.25 - s / 2],
            [-a, a - s / SQRT2, -0.25 - s / 2],
            [0.25 - s / 2, -0.25 - s / 2, h],
        ],
        dtype=complex,
    )
    a2 = np.array(
        [
            [a - c / 4, -3 * c / 4 - a, 0.25 - c * h],
            [-3 * c / 4 - a, a - c / 4, c * h - 0.25],
            [0.25 - c * h, c * h - 0.25, c / 2 + h],
        ],
        dtype=complex,
    )
    a3 = np.array(
        [
            [a, -a + 0.5j * s, 0.25 + 1j * s * h],
            [-a - 0.5j * s, a, -0.25 + 1j * s * h],
            [0.25 - 1j * s * h, -0.25 - 1j * s * h, h],
        ],
        dtype=complex,
    )
    kraus = [a1, a2, a3]
    return trace_preserving_normalization(kraus) if normalize else kraus


def two_generator_kraus(scaled: bool = False) -> List[ComplexMatrix]:
    """Trace-preserving, non-unital qutrit channel with a 5-dim Kraus algebra.

    ``scaled=True`` returns sqrt(6) A_i, the integer-friendly generators in
    which the adjoint expansion coefficients take their closed forms.
    """
    r = 1 / SQRT2
    m1 = np.array(
        [[1, -1, 1], [r, SQRT2, 0], [-r, 0, SQRT2]], dtype=complex
    )
    m2 = np.array(
        [[SQRT2, r, -r], [-1, 1.5, 0.5], [1, 0.5, 1.5]], dtype=complex
    )
    if scaled:
        return [m1, m2]
    return [m1 / np.sqrt(6.0), m2 / np.sqrt(6.0)]


def trace_preserving_normalization(
    kraus: Sequence[ComplexMatrix],
) -> List[ComplexMatrix]:
    """Rescale Kraus operators to A_i G^{-1/2} so that sum A_i^dagger A_i = I."""
    g = sum(adjoint(k) @ k for k in kraus)
    w, v = sla.eigh(g)
    if w.min() <= 0:
        raise PreconditionError(
            "sum A_i^dagger A_i is singular; cannot normalize",
            hypothesis="positive definite sum of A_i^dagger A_i",
            min_eigenvalue=float(w.min()),
        )
    inv_sqrt = (v / np.sqrt(w)) @ adjoint(v)
    return [k @ inv_sqrt for k in kraus]


def identity_channel(n: int) -> List[ComplexMatrix]:
    return [np.eye(n, dtype=complex)]


def unitary_channel(u: ComplexMatrix) -> List[ComplexMatrix]:
    return [np.asarray(u, dtype=complex)]


def depolarizing_channel(p: float) -> List[ComplexMatrix]:
    """Qubit depolarizing channel with four Pauli Kraus operators.

    Non-identity superoperator eigenvalues equal 1 - p.
    """
    if not 0 <= p <= 4 / 3:
        raise PreconditionError(
            "Depolarizing parameter out of range",
            hypothesis="0 <= p <= 4/3",
            p=p,
        )
    weights = [1 - 3 * p / 4, p / 4, p / 4, p / 4]
    return pauli_channel(weights)


def pauli_channel(weights: Sequence[float]) -> List[ComplexMatrix]:
    """Kraus operators sqrt(w_k) sigma_k, skipping zero weights."""
    if len(weights) != 4:
        raise ShapeError("Need four Pauli weights", expected=4,
                         actual=len(weights))
    return [
        np.sqrt(w) * sigma
        for w, sigma in zip(weights, PAULIS)
        if w > 0
    ]


def amplitude_damping_channel(gamma: float) -> List[ComplexMatrix]:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return [k0, k1]


def mixed_unitary_channel(
    unitaries: Sequence[ComplexMatrix], probs: Sequence[float]
) -> List[ComplexMatrix]:
    """Kraus form sqrt(p_i) U_i of sum_i p_i U_i X U_i^dagger."""
    if len(unitaries) != len(probs):
        raise ShapeError(
            "One probability per unitary",
            expected=len(unitaries),
            actual=len(probs),
        )
    return [np.sqrt(p) * np.asarray(u, dtype=complex)
            for u, p in zip(unitaries, probs)]


def random_unitary(n: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-random unitary from the QR factorization of a Ginibre matrix."""
    z = (rng.standard_normal((n, n))
         + 1j * rng.standard_normal((n, n))) / SQRT2
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry(rows: int, cols: int,
                    rng: np.random.Generator) -> ComplexMatrix:
    z = (rng.standard_normal((rows, cols))
         + 1j * rng.standard_normal((rows, cols))) / SQRT2
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_cptp_channel(
    n: int, k: int, rng: np.random.Generator
) -> List[ComplexMatrix]:
    """Random channel from slices of a random isometry C^n -> C^{nK}."""
    v = random_isometry(n * k, n, rng)
    return [v[i * n:(i + 1) * n, :] for i in range(k)]


def random_density_matrix(n: int, rng: np.random.Generator) -> ComplexMatrix:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = g @ adjoint(g)
    return rho / np.trace(rho)


def block_diag(blocks: Sequence[ComplexMatrix]) -> ComplexMatrix:
    return sla.block_diag(*blocks).astype(complex)


def random_block_mixed_unitary(
    dims: Sequence[int],
    k: int,
    rng: np.random.Generator,
    basis: Optional[ComplexMatrix] = None,
) -> List[ComplexMatrix]:
    """Unital channel whose Kraus algebra is the direct sum of M_d over dims.

    Each Kraus operator is sqrt(p_i) W (U_i1 + ... + U_iN) W^dagger with
    independent Haar blocks; W is a random unitary unless ``basis`` is given.
    """
    n = int(sum(dims))
    w = random_unitary(n, rng) if basis is None else basis
    probs = rng.dirichlet(np.ones(k))
    unitaries = [
        w @ block_diag([random_unitary(d, rng) for d in dims]) @ adjoint(w)
        for _ in range(k)
    ]
    return mixed_unitary_channel(unitaries, probs)


def random_block_tp_channel(
    dims: Sequence[int],
    k: int,
    rng: np.random.Generator,
    basis: Optional[ComplexMatrix] = None,
) -> List[ComplexMatrix]:
    """Trace-preserving, generically non-unital channel with a star-closed
    Kraus algebra: blockwise random channels glued in a random basis."""
    n = int(sum(dims))
    w = random_unitary(n, rng) if basis is None else basis
    per_block = [random_cptp_channel(d, k, rng) for d in dims]
    return [
        w @ block_diag([blocks[i] for blocks in per_block]) @ adjoint(w)
        for i in range(k)
    ]
