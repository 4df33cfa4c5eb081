import numpy as np
import pytest

from kraus_spectra.src.algebra import (
    IDENTITY_LABEL,
    block_decompose,
    commutant,
    commutant_of,
    generate_basis,
    is_irreducible,
    is_star_closed,
    word_length_cap,
)
from kraus_spectra.src.exceptions import (
    PreconditionError,
    ShapeError,
    StructureError,
)
from kraus_spectra.src.families import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    example1_kraus,
    example2_kraus,
    random_block_mixed_unitary,
)
from kraus_spectra.src.linalg import adjoint, basis_extract, frobenius

SQRT2 = np.sqrt(2.0)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)

# Adjoint expansions of the integer-friendly generators in the basis
# M1, M2, M1M1, M1M2, M2M1; the M1M1 coefficient vanishes.
ADJOINT_M1 = [
    (3 - 8 * SQRT2) / 14,
    (6 + 5 * SQRT2) / 28,
    0.0,
    1 / (2 * SQRT2 - 8),
    (5 + 3 * SQRT2) / 14,
]
ADJOINT_M2 = [
    (11 + 8 * SQRT2) / 14,
    (22 - 5 * SQRT2) / 28,
    0.0,
    (4 + SQRT2) / 28,
    -(5 + 3 * SQRT2) / 14,
]


def random_complex(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def brute_force_dimension(gens, include_identity, max_len):
    n = gens[0].shape[0]
    words = [np.eye(n, dtype=complex)] if include_identity else []
    level = [np.eye(n, dtype=complex)]
    for _ in range(max_len):
        level = [w @ g for w in level for g in gens]
        words.extend(level)
    return basis_extract(words).rank


class TestGenerateBasis:
    def test_two_generator_qutrit_without_identity(self, two_generator):
        wb = generate_basis(two_generator.kraus, include_identity=False)
        assert wb.dimension == 5
        assert wb.labels == ["1", "2", "11", "12", "21"]

    def test_identity_is_labelled(self, two_generator):
        wb = generate_basis(two_generator.kraus)
        assert wb.labels[0] == IDENTITY_LABEL
        assert np.allclose(wb.basis[0], np.eye(3))

    def test_single_identity_generator(self):
        assert generate_basis([np.eye(3)], include_identity=False).dimension == 1

    def test_pauli_pair_spans_full_algebra(self):
        assert generate_basis([PAULI_X, PAULI_Y]).dimension == 4

    def test_labels_use_separators_beyond_nine_generators(self, rng):
        gens = [random_complex(rng, 4) for _ in range(10)]
        wb = generate_basis(gens, include_identity=False)
        assert wb.labels[:10] == [str(i) for i in range(1, 11)]
        assert "1.1" in wb.labels
        assert wb.dimension == 16

    def test_closed_under_multiplication(self, two_generator):
        wb = generate_basis(two_generator.kraus, include_identity=False)
        for a in wb.basis:
            for b in wb.basis:
                assert wb.contains(a @ b) < 1e-8

    def test_length_cap(self):
        assert word_length_cap(2) == 4
        assert word_length_cap(3) == 6

    def test_zero_generators_without_identity(self):
        with pytest.raises(PreconditionError):
            generate_basis([np.zeros((2, 2))] * 2, include_identity=False)
        assert generate_basis([np.zeros((2, 2))]).dimension == 1

    def test_rejects_mismatched_generators(self):
        with pytest.raises(ShapeError):
            generate_basis([np.eye(2), np.eye(3)])

    @pytest.mark.parametrize("n", [2, 3])
    def test_monotone_chain_matches_exhaustive_words(self, rng, n):
        for _ in range(10):
            gens = [random_complex(rng, n) for _ in range(2)]
            if rng.random() < 0.5:
                # shared invariant line keeps the algebra proper
                gens = [g.copy() for g in gens]
                for g in gens:
                    g[1:, 0] = 0
            wb = generate_basis(gens, include_identity=False)
            assert np.all(np.diff(wb.level_dims) >= 0)
            assert wb.dimension == wb.level_dims[-1]
            expected = brute_force_dimension(gens, False, word_length_cap(n))
            assert wb.dimension == expected

    def test_monotone_chain_stops_when_a_level_adds_nothing(self):
        diag = np.diag([1.0, 2.0, 3.0]).astype(complex)
        wb = generate_basis([diag], include_identity=False, max_length=50)
        assert wb.dimension == 3
        assert len(wb.level_dims) <= 4


class TestStarClosure:
    def test_two_generator_qutrit_coefficients(self, two_generator_scaled):
        wb = generate_basis(two_generator_scaled, include_identity=False)
        closure = is_star_closed(wb)
        assert closure.closed
        assert np.allclose(closure.adjoint_coefficients[0], ADJOINT_M1,
                           atol=1e-10, rtol=0)
        assert np.allclose(closure.adjoint_coefficients[1], ADJOINT_M2,
                           atol=1e-10, rtol=0)

    def test_coefficients_rebuild_adjoints(self, two_generator_scaled):
        wb = generate_basis(two_generator_scaled, include_identity=False)
        closure = is_star_closed(wb)
        for g, coeffs in zip(two_generator_scaled, closure.adjoint_coefficients):
            rebuilt = sum(c * e for c, e in zip(coeffs, wb.basis))
            assert frobenius(rebuilt - adjoint(g)) < 1e-10

    def test_unitary_group_generators(self):
        assert is_star_closed(generate_basis([PAULI_X, PAULI_Z])).closed

    def test_matrix_unit_is_not_closed(self):
        closure = is_star_closed(generate_basis([E12], include_identity=False))
        assert not closure.closed
        assert closure.max_residual > 0.5


class TestIrreducibility:
    def test_example1_is_reducible(self):
        assert not is_irreducible(example1_kraus(np.pi / 4))

    def test_pauli_pair_is_irreducible(self):
        assert is_irreducible([PAULI_X, PAULI_Z])

    def test_diagonal_matrix_is_reducible(self):
        assert not is_irreducible([np.diag([1.0, 2.0, 3.0])])

    def test_burnside_consistency(self, rng):
        for _ in range(10):
            gens = random_block_mixed_unitary([2, 1], 2, rng)
            wb = generate_basis(gens)
            assert (wb.dimension < 9) == (not is_irreducible(gens))


class TestCommutant:
    def test_full_algebra_has_scalar_commutant(self):
        comm = commutant(generate_basis([PAULI_X, PAULI_Z]))
        assert len(comm) == 1
        x = comm[0] / comm[0][0, 0]
        assert np.linalg.norm(x - np.eye(2)) < 1e-10

    def test_scalar_algebra_has_full_commutant(self):
        assert len(commutant(generate_basis([np.eye(3)]))) == 9

    def test_two_generator_qutrit_commutant(self, two_generator):
        assert len(commutant(generate_basis(two_generator.kraus))) == 2

    def test_bicommutant(self, two_generator):
        wb = generate_basis(two_generator.kraus)
        assert is_star_closed(wb).closed
        bicommutant = commutant_of(commutant(wb), wb.n)
        assert len(bicommutant) == wb.dimension
        for x in bicommutant:
            assert wb.contains(x) < 1e-7

    def test_empty_input_gives_full_space(self):
        assert len(commutant_of([np.zeros((2, 2))], 2)) == 4


class TestBlockDecompose:
    @pytest.mark.parametrize("phi", [np.pi / 4, 1.0])
    def test_example1(self, phi):
        gens = example1_kraus(phi)
        structure = block_decompose(gens)
        assert structure.block_dims == [2, 1]
        for g in gens:
            assert structure.off_block_mass(g) < 1e-7

    def test_example2(self, example2):
        assert block_decompose(example2.kraus).block_dims == [2, 1]

    def test_example2_raw_operators(self):
        assert block_decompose(
            example2_kraus(np.pi / 3, normalize=False)
        ).block_dims == [2, 1]

    def test_pauli_pair_is_one_block(self):
        structure = block_decompose([PAULI_X, PAULI_Z])
        assert structure.block_dims == [2]
        assert structure.block_irreducible == [True]

    def test_not_star_closed(self):
        with pytest.raises(StructureError):
            block_decompose([E12])

    def test_random_block_channels(self, rng):
        for dims in ([3, 1], [2, 1], [2, 2], [1, 1, 1]):
            gens = random_block_mixed_unitary(dims, 3, rng)
            structure = block_decompose(gens, seed=7)
            assert sorted(structure.block_dims) == sorted(dims)
            assert sum(structure.block_dims) == sum(dims)
            u = structure.unitary
            assert frobenius(adjoint(u) @ u - np.eye(sum(dims))) < 1e-10
            for g in gens:
                assert structure.off_block_mass(g) < 1e-7

    def test_restricted_blocks_are_full(self, example1):
        structure = block_decompose(example1.kraus)
        for k, d in enumerate(structure.block_dims):
            restricted = [structure.restrict(g, k) for g in example1.kraus]
            assert generate_basis(restricted).dimension == d * d

    def test_projectors_sum_to_identity(self, example1):
        structure = block_decompose(example1.kraus)
        assert np.linalg.norm(sum(structure.projectors()) - np.eye(3)) < 1e-10
