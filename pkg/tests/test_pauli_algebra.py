"""Pauli 和的解析、稠密矩阵与指数"""
import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_pauli_sum
from core.pauli_algebra import (DenseCapError, DimensionMismatchError, PauliFormatError, PauliSum,
                                antihermitian_exponential, apply_pauli_sum, eigendecompose, format_pauli_sum,
                                parse_pauli_sum, to_dense, unitary_exponential)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


class TestParsing:

    def test_parse_with_comments_and_identity(self):
        text = "# 注释\nqubits 2\n\n0.5 Z0 Z1\n-0.25 X1\n  # 缩进的注释\n0.1\n"
        pauli_sum = parse_pauli_sum(text)
        assert pauli_sum.num_qubits == 2
        assert [t.label() for t in pauli_sum.terms] == ["Z0 Z1", "X1", ""]
        assert [t.coefficient for t in pauli_sum.terms] == [0.5, -0.25, 0.1]

    def test_factor_order_is_canonical(self):
        pauli_sum = parse_pauli_sum("qubits 3\n1.0 Z2 X0\n")
        assert pauli_sum.terms[0].factors == ((0, "X"), (2, "Z"))

    def test_duplicate_strings_merge_and_keep_zero(self):
        pauli_sum = parse_pauli_sum("qubits 1\n1.0 X0\n0.3 Z0\n-1.0 X0\n")
        assert len(pauli_sum) == 2
        assert pauli_sum.terms[0].label() == "X0"
        assert pauli_sum.terms[0].coefficient == 0.0

    def test_missing_header(self):
        with pytest.raises(PauliFormatError):
            parse_pauli_sum("1.0 X0\n")

    def test_empty_text(self):
        with pytest.raises(PauliFormatError):
            parse_pauli_sum("# 只有注释\n")

    @pytest.mark.parametrize("line", ["abc X0", "1.0 X5", "1.0 X0 Z0", "1.0 W1", "nan X0"])
    def test_bad_term_reports_line(self, line):
        with pytest.raises(PauliFormatError) as info:
            parse_pauli_sum(f"qubits 2\n0.5 Z0\n{line}\n")
        assert info.value.line_number == 3

    def test_format_reads_back(self):
        original = parse_pauli_sum("qubits 2\n0.1234567890123 X0 Y1\n-2.5\n1e-3 Z1\n")
        again = parse_pauli_sum(format_pauli_sum(original))
        assert again == original


class TestDense:

    def test_qubit_zero_is_most_significant(self):
        assert np.allclose(to_dense(parse_pauli_sum("qubits 2\n1.0 Z0\n")), np.kron(Z, I2))
        assert np.allclose(to_dense(parse_pauli_sum("qubits 2\n1.0 X0 Y1\n")), np.kron(X, Y))

    def test_matches_kronecker_products(self):
        pauli_sum = parse_pauli_sum("qubits 3\n0.3 X0 Z2\n-0.7 Y1\n0.2\n")
        expected = (0.3 * np.kron(np.kron(X, I2), Z) - 0.7 * np.kron(np.kron(I2, Y), I2)
                    + 0.2 * np.eye(8))
        assert np.allclose(to_dense(pauli_sum), expected)

    def test_dense_is_hermitian(self, rng):
        matrix = to_dense(random_pauli_sum(4, 12, rng))
        assert np.allclose(matrix, matrix.conj().T)

    def test_apply_without_matrix(self, rng):
        pauli_sum = random_pauli_sum(3, 8, rng)
        vector = rng.normal(size=8) + 1j * rng.normal(size=8)
        assert np.allclose(apply_pauli_sum(pauli_sum, vector), to_dense(pauli_sum) @ vector)

    def test_dense_cap(self):
        with pytest.raises(DenseCapError):
            to_dense(PauliSum.from_terms(13, [(1.0, [(12, "Z")])]))


class TestSpectral:

    def test_eigendecompose_sorted_and_reconstructs(self, rng):
        pauli_sum = random_pauli_sum(3, 10, rng)
        eigensystem = eigendecompose(pauli_sum)
        assert np.all(np.diff(eigensystem.eigenvalues) >= 0)
        assert np.allclose(eigensystem.reconstruct(), to_dense(pauli_sum), atol=1e-10)
        assert np.allclose(eigensystem.eigenvalues, np.linalg.eigvalsh(to_dense(pauli_sum)), atol=1e-10)

    @pytest.mark.parametrize("t", [0.0, 0.3, 26.0, -4.1])
    def test_unitary_exponential_matches_expm(self, rng, t):
        pauli_sum = random_pauli_sum(3, 6, rng)
        unitary = unitary_exponential(eigendecompose(pauli_sum), t)
        assert np.allclose(unitary, expm(-1j * t * to_dense(pauli_sum)), atol=1e-10)

    def test_antihermitian_exponential_matches_expm(self, rng):
        generators = [random_pauli_sum(2, 3, rng) for _ in range(3)]
        weights = [0.4, -1.1, 0.25]
        hermitian = sum(w * to_dense(g) for w, g in zip(weights, generators))
        result = antihermitian_exponential(generators, weights)
        assert np.allclose(result, expm(1j * hermitian), atol=1e-10)
        assert np.allclose(result @ result.conj().T, np.eye(4), atol=1e-10)

    def test_generator_count_mismatch(self, rng):
        generators = [random_pauli_sum(2, 2, rng)]
        with pytest.raises(DimensionMismatchError):
            antihermitian_exponential(generators, [0.1, 0.2])
