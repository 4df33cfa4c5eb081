import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

from kraus_spectra.src.channel import KrausChannel
from kraus_spectra.src.criteria import (
    STANDARD_POLYNOMIAL_MAX_ARITY,
    PeripheralPrediction,
    StructureTag,
    _heap_permutations,
    admissible_partitions,
    divisors,
    generalized_shemesh,
    integer_partitions,
    invertible_in_span,
    irreducible_by_fixed_points,
    mixed_unitary_V,
    predict_peripheral,
    primitivity,
    shemesh,
    standard_polynomial,
    word_span_profile,
)
from kraus_spectra.src.exceptions import LimitError, PreconditionError, ShapeError
from kraus_spectra.src.families import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    amplitude_damping_channel,
    depolarizing_channel,
    pauli_channel,
    random_block_mixed_unitary,
    random_unitary,
)
from kraus_spectra.src.linalg import adjoint, frobenius

E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = E12.T.copy()


def random_complex(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def unit(rng, n):
    x = random_complex(rng, n)
    return x / frobenius(x)


def planted_pair(rng, n):
    """Two matrices sharing the eigenvector S e_1."""
    s = random_complex(rng, n) + n * np.eye(n)
    s_inv = np.linalg.inv(s)
    pair = []
    for _ in range(2):
        t = random_complex(rng, n)
        t[1:, 0] = 0
        pair.append(s @ t @ s_inv)
    return pair


def has_common_eigenvector(a, b, tol=1e-7):
    _, vectors = np.linalg.eig(a)
    for v in vectors.T:
        v = v / np.linalg.norm(v)
        bv = b @ v
        if np.linalg.norm(bv - (np.vdot(v, bv)) * v) < tol:
            return True
    return False


def permutation_sign(perm):
    sign = 1
    seen = set()
    for start in range(len(perm)):
        if start in seen:
            continue
        length, j = 0, start
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class TestShemesh:
    def test_commuting_pair(self):
        a = np.diag([1.0, 2.0, 3.0])
        b = np.diag([4.0, 5.0, 7.0])
        assert shemesh(a, b).dim == 3

    def test_example1_generators(self, example1):
        a1, a2 = example1.kraus
        space = shemesh(a1, a2)
        assert space.dim == 1
        v = space.vectors[:, 0]
        w = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
        assert abs(abs(np.vdot(w, v)) - 1) < 1e-8

    def test_pauli_pair_has_no_common_eigenvector(self):
        assert shemesh(PAULI_X, PAULI_Z).dim == 0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            shemesh(np.eye(2), np.eye(3))

    @pytest.mark.parametrize("n", [4, 5])
    def test_agrees_with_brute_force_search(self, rng, n):
        for trial in range(100):
            if trial % 2 == 0:
                a, b = planted_pair(rng, n)
            else:
                a, b = random_complex(rng, n), random_complex(rng, n)
            verdict = shemesh(a, b).dim > 0
            assert verdict == has_common_eigenvector(a, b)
            assert verdict == (trial % 2 == 0)


class TestGeneralizedShemesh:
    def test_example2_common_eigenvector(self, example2_raw):
        a1, a2, a3 = example2_raw
        space = generalized_shemesh(a3, [a1, a2])
        assert space.dim == 1
        w = np.array([1 / np.sqrt(2), -1 / np.sqrt(2), 1.0])
        w = w / np.linalg.norm(w)
        assert abs(abs(np.vdot(w, space.vectors[:, 0])) - 1) < 1e-8

    def test_rejects_degenerate_reference(self):
        with pytest.raises(PreconditionError):
            generalized_shemesh(np.eye(3), [np.diag([1.0, 2.0, 3.0])])

    def test_generic_triple(self, rng):
        h = random_complex(rng, 4)
        others = [random_complex(rng, 4) for _ in range(2)]
        assert generalized_shemesh(h, others).dim == 0

    def test_no_other_operators(self):
        assert generalized_shemesh(np.diag([1.0, 2.0]), []).dim == 2


class TestStandardPolynomial:
    def test_heap_permutations_enumerate_with_parity(self):
        for m in range(1, 6):
            seen = {}
            for perm, sign in _heap_permutations(m):
                seen[tuple(perm)] = sign
            assert len(seen) == math.factorial(m)
            for perm, sign in seen.items():
                assert sign == permutation_sign(perm)

    def test_low_arity(self, rng):
        x, y = random_complex(rng, 3), random_complex(rng, 3)
        assert np.allclose(standard_polynomial([x]), x)
        assert np.allclose(standard_polynomial([x, y]), x @ y - y @ x)

    def test_arity_cap(self):
        with pytest.raises(LimitError):
            standard_polynomial([np.eye(2)] * (STANDARD_POLYNOMIAL_MAX_ARITY + 1))

    def test_empty(self):
        with pytest.raises(ShapeError):
            standard_polynomial([])

    def test_alternating(self, rng):
        x, y, z = (random_complex(rng, 2) for _ in range(3))
        assert frobenius(standard_polynomial([x, y, x])) < 1e-10
        assert np.allclose(
            standard_polynomial([x, y, z]), -standard_polynomial([y, x, z])
        )

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_amitsur_levitzki_identity(self, rng, n):
        for _ in range(100):
            mats = [unit(rng, n) for _ in range(2 * n)]
            assert frobenius(standard_polynomial(mats)) < 1e-9

    @pytest.mark.parametrize("n", [2, 3])
    def test_amitsur_levitzki_degree_is_minimal(self, rng, n):
        norms = [
            frobenius(standard_polynomial([unit(rng, n) for _ in range(2 * n - 2)]))
            for _ in range(5)
        ]
        assert max(norms) > 1e-4


class TestMixedUnitaryV:
    def test_relation_to_standard_polynomial(self, rng):
        u, w = random_unitary(3, rng), random_unitary(3, rng)
        result = mixed_unitary_V(u, w)
        s4 = standard_polynomial([u, w, adjoint(u), adjoint(w)])
        assert frobenius(result.v + adjoint(result.v) - s4) < 1e-10

    def test_qubit_unitaries_have_vanishing_hermitian_part(self, rng):
        result = mixed_unitary_V(random_unitary(2, rng), random_unitary(2, rng))
        assert not result.hermitian_part_nonzero

    def test_generic_qutrit_unitaries(self, rng):
        result = mixed_unitary_V(random_unitary(3, rng), random_unitary(3, rng))
        assert result.hermitian_part_nonzero

    def test_rejects_non_unitary(self, rng):
        with pytest.raises(PreconditionError):
            mixed_unitary_V(2 * np.eye(2), random_unitary(2, rng))


class TestPrimitivity:
    def test_depolarizing_certified_at_one(self):
        result = primitivity(KrausChannel.from_kraus(depolarizing_channel(1.0)))
        assert result.certified
        assert result.witness_m == 1

    def test_three_pauli_channel_certified_at_two(self):
        ch = KrausChannel.from_kraus(pauli_channel([0.0, 1 / 3, 1 / 3, 1 / 3]))
        result = primitivity(ch)
        assert result.certified
        assert result.witness_m == 2
        assert result.span_dims[:2] == [3, 4]

    def test_example1_not_certified(self, example1):
        result = primitivity(example1, m_max=18)
        assert not result.certified
        assert len(result.span_dims) == 18
        assert max(result.span_dims) < 9

    def test_unitary_channel_never_certified(self, rng):
        ch = KrausChannel.from_kraus([random_unitary(2, rng)])
        result = primitivity(ch)
        assert result.span_dims == [1] * 8

    def test_m_max_must_be_positive(self, example1):
        with pytest.raises(PreconditionError):
            primitivity(example1, m_max=0)

    def test_profile_accepts_more_than_n_squared_operators(self):
        ops = [PAULI_X, PAULI_Y, PAULI_Z, PAULI_X + PAULI_Z, PAULI_Y - PAULI_X]
        result = word_span_profile(ops)
        assert result.certified
        assert result.witness_m == 2
        assert result.span_dims[0] == 3

    def test_profile_matches_channel_primitivity(self, example1):
        assert word_span_profile(example1.kraus, 10) == primitivity(example1, 10)


class TestInvertibleInSpan:
    def test_identity(self):
        assert invertible_in_span([np.eye(3)])

    def test_nilpotent(self):
        assert not invertible_in_span([E12])

    def test_matrix_units_combine(self):
        assert invertible_in_span([E12, E21])

    def test_trials_must_be_positive(self):
        with pytest.raises(PreconditionError):
            invertible_in_span([np.eye(2)], trials=0)


class TestPartitions:
    def test_integer_partitions(self):
        parts = integer_partitions(4)
        assert parts[0] == [4]
        assert len(parts) == 5
        assert [2, 1, 1] in parts

    def test_divisors(self):
        assert divisors(6) == [1, 2, 3, 6]
        assert divisors(1) == [1]

    def test_two_generator_qutrit_channel(self, two_generator):
        report = admissible_partitions(two_generator)
        assert report.partitions == [[2, 1]]
        assert report.star_closed
        assert report.algebra_dimension == 5

    def test_three_plus_two_block_channel(self, rng):
        ch = KrausChannel.from_kraus(random_block_mixed_unitary([3, 2], 3, rng))
        report = admissible_partitions(ch)
        assert report.partitions == [[3, 2]]
        evidence = {c.name for c in report.evidence}
        assert {"noncommuting_pair", "standard_polynomial",
                "algebra_dimension"} <= evidence

    def test_pauli_pair(self):
        ch = KrausChannel.from_kraus([PAULI_X / np.sqrt(2), PAULI_Z / np.sqrt(2)])
        assert admissible_partitions(ch).partitions == [[2]]


class TestFixedPointIrreducibility:
    def test_depolarizing(self):
        ch = KrausChannel.from_kraus(depolarizing_channel(0.5))
        assert irreducible_by_fixed_points(ch) is True

    def test_example1(self, example1):
        assert irreducible_by_fixed_points(example1) is False

    def test_not_unital(self):
        ch = KrausChannel.from_kraus(amplitude_damping_channel(0.5))
        assert irreducible_by_fixed_points(ch) is None


class TestPredictPeripheral:
    def test_example1(self, example1):
        prediction = predict_peripheral(example1)
        assert prediction.structure is StructureTag.STAR_BLOCKS
        assert prediction.block_dims == [2, 1]
        assert prediction.period_bound == 2
        assert prediction.is_allowed(-1.0)
        assert not prediction.is_allowed(1j)
        assert prediction.has_certificate("block_decomposition")
        assert not prediction.has_certificate("primitive_at_m")

    def test_depolarizing_is_primitive(self):
        ch = KrausChannel.from_kraus(depolarizing_channel(0.5))
        prediction = predict_peripheral(ch)
        assert prediction.structure is StructureTag.IRREDUCIBLE
        assert prediction.order_bounds == [[1]]
        assert prediction.period_bound == 1
        assert prediction.certificate("primitive_at_m").detail["m"] == 1
        assert prediction.certificate("fixed_space_dims").detail == {
            "channel": 1, "dual": 1,
        }

    def test_generic_qutrit_mixed_unitary_is_irreducible(self, rng):
        ch = KrausChannel.from_kraus(random_block_mixed_unitary([3], 2, rng))
        prediction = predict_peripheral(ch)
        assert prediction.structure is StructureTag.IRREDUCIBLE
        assert prediction.global_orders == [1, 3]

    def test_coinciding_block_dimensions(self, rng):
        ch = KrausChannel.from_kraus(random_block_mixed_unitary([2, 2], 3, rng))
        prediction = predict_peripheral(ch)
        assert prediction.structure is StructureTag.STAR_BLOCKS
        assert prediction.has_certificate("coinciding_dimensions")
        assert prediction.period_bound is None
        assert prediction.allowed_orders() is None
        assert prediction.is_allowed(np.exp(0.3j))

    def test_not_star_closed(self):
        ch = KrausChannel.from_kraus(amplitude_damping_channel(0.5))
        prediction = predict_peripheral(ch)
        assert prediction.structure is StructureTag.INCONCLUSIVE
        assert prediction.has_certificate("not_star_closed")
        assert prediction.period_bound is None

    def test_requires_tp_or_unital(self):
        with pytest.raises(PreconditionError):
            predict_peripheral(KrausChannel.from_kraus([2 * np.eye(2)]))

    def test_allowed_points_are_roots_of_unity(self, example1):
        points = predict_peripheral(example1).allowed_points()
        assert np.allclose(np.abs(points), 1)
        assert len(points) == len({(round(p.real, 9), round(p.imag, 9))
                                   for p in points})

    @pytest.mark.parametrize(
        "order_bounds, count",
        [([[1, 2], [1]], 2), ([[1, 2, 4]], 4), ([[1, 3], [1, 2]], 4),
         ([[1], [1]], 1)],
    )
    def test_allowed_points_counted_once(self, order_bounds, count):
        prediction = PeripheralPrediction(
            structure=StructureTag.STAR_BLOCKS,
            block_dims=[len(order_bounds)],
            order_bounds=order_bounds,
            period_bound=None,
            longest_period=None,
        )
        points = prediction.allowed_points()
        assert len(points) == count
        assert np.min(np.abs(points - 1)) < 1e-12

    def test_primitive_block_contributes_trivial_order(self):
        weight = 1 / np.sqrt(3)
        kraus = [
            np.block([[weight * sigma, np.zeros((2, 1))],
                      [np.zeros((1, 2)), weight * np.eye(1)]])
            for sigma in (PAULI_X, PAULI_Y, PAULI_Z)
        ]
        prediction = predict_peripheral(KrausChannel.from_kraus(kraus))
        assert prediction.block_dims == [2, 1]
        assert prediction.order_bounds == [[1], [1]]
        assert prediction.period_bound == 1
        assert prediction.certificate("block_primitive").detail["m"] == 2

    def test_non_primitive_block_keeps_divisor_orders(self, example1):
        prediction = predict_peripheral(example1)
        assert not prediction.has_certificate("block_primitive")
        assert prediction.order_bounds == [[1, 2], [1]]

    def test_period_bound_is_lcm_of_orders(self, rng):
        for dims in ([3, 1], [2, 1], [3, 2]):
            ch = KrausChannel.from_kraus(random_block_mixed_unitary(dims, 2, rng))
            prediction = predict_peripheral(ch, seed=3)
            orders = prediction.allowed_orders()
            assert orders is not None
            for m in orders:
                assert prediction.period_bound % m == 0
            assert prediction.period_bound % prediction.longest_period == 0


def test_heap_and_itertools_agree_on_standard_polynomial(rng):
    mats = [random_complex(rng, 2) for _ in range(3)]
    expected = sum(
        permutation_sign(p) * mats[p[0]] @ mats[p[1]] @ mats[p[2]]
        for p in itertools.permutations(range(3))
    )
    assert np.allclose(standard_polynomial(mats), expected)


@settings(max_examples=25, deadline=None)
@given(seed=integers(0, 2**32 - 1), n=integers(1, 3), m=integers(2, 5))
def test_standard_polynomial_alternates_under_swaps(seed, n, m):
    rng = np.random.default_rng(seed)
    mats = [unit(rng, n) for _ in range(m)]
    i, j = sorted(rng.choice(m, size=2, replace=False))
    swapped = list(mats)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert frobenius(
        standard_polynomial(mats) + standard_polynomial(swapped)
    ) < 1e-10


def planted_family(rng, n, k):
    """Two matrices with k common eigenvectors S e_1 .. S e_k."""
    s = random_complex(rng, n) + n * np.eye(n)
    s_inv = np.linalg.inv(s)
    pair = []
    for _ in range(2):
        t = random_complex(rng, n)
        t[:k, :k] = np.diag(np.diag(t[:k, :k]))
        t[k:, :k] = 0
        pair.append(s @ t @ s_inv)
    return pair


@settings(max_examples=50, deadline=None)
@given(seed=integers(0, 2**32 - 1), n=integers(2, 5), data_k=integers(1, 4))
def test_shemesh_subspace_is_invariant_and_commuting(seed, n, data_k):
    k = min(data_k, n - 1)
    rng = np.random.default_rng(seed)
    a, b = planted_family(rng, n, k)
    space = shemesh(a, b)
    assert space.dim >= k
    v = space.vectors
    outside = np.eye(n) - v @ v.conj().T
    norm_a, norm_b = np.linalg.norm(a, 2), np.linalg.norm(b, 2)
    assert np.linalg.norm(outside @ a @ v) < 1e-6 * norm_a
    assert np.linalg.norm(outside @ b @ v) < 1e-6 * norm_b
    assert np.linalg.norm((a @ b - b @ a) @ v) < 1e-6 * norm_a * norm_b
