import numpy as np
import pytest

from lhdm.dense import (DenseMatrix, GivensRotation, HouseholderReflector, as_vector,
                        column_norms, load_matrix, positivity_trick, read_dmat,
                        save_matrix, solve_upper_triangular, write_csv_matrix,
                        write_dmat)
from lhdm.errors import (DimensionMismatch, MatrixFormatError, NonFiniteEntry,
                         SingularDiagonal)


def test_dense_matrix_is_column_major_and_immutable():
    M = DenseMatrix([[1.0, 2.0], [3.0, 4.0]])
    assert M.shape == (2, 2)
    assert M.array.flags.f_contiguous
    assert list(M.column_major()) == [1.0, 3.0, 2.0, 4.0]
    with pytest.raises(ValueError):
        M.array[0, 0] = 5.0


def test_from_column_major_roundtrip():
    M = DenseMatrix.from_column_major(2, 2, [1, 3, 2, 4])
    np.testing.assert_array_equal(M.array, [[1, 2], [3, 4]])


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_entries_rejected(bad):
    with pytest.raises(NonFiniteEntry):
        DenseMatrix([[1.0, bad]])


def test_as_vector_checks_length():
    with pytest.raises(DimensionMismatch):
        as_vector([1.0, 2.0], 3)


def test_positivity_trick_layout():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    P = positivity_trick(A)
    assert P.twin_offset == 2
    np.testing.assert_array_equal(P.array, np.hstack([A, -A]))


@pytest.mark.parametrize("R, rhs, expected", [
    (np.eye(3), [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
    (np.array([[2.0, 1.0], [0.0, 4.0]]), [4.0, 8.0], [1.0, 2.0]),
])
def test_solve_upper_triangular(R, rhs, expected):
    np.testing.assert_allclose(solve_upper_triangular(R, rhs), expected)


def test_solve_upper_triangular_zero_diagonal():
    with pytest.raises(SingularDiagonal):
        solve_upper_triangular(np.array([[1.0, 2.0], [0.0, 0.0]]), [1.0, 1.0])


def test_column_norms():
    np.testing.assert_array_equal(column_norms(np.eye(3)), [1.0, 1.0, 1.0])
    assert column_norms(np.array([[3.0], [4.0]]))[0] == 5.0
    C = np.random.default_rng(0).standard_normal((5, 3))
    np.testing.assert_allclose(column_norms(C), np.sqrt(np.diag(C.T @ C)), rtol=1e-13)


def test_householder_reflector_zeroes_below_first_entry():
    x = np.array([3.0, 4.0, 0.0, 12.0])
    H = HouseholderReflector.from_vector(x)
    y = H.apply(x.copy())
    assert abs(abs(y[0]) - 13.0) < 1e-12
    np.testing.assert_allclose(y[1:], 0.0, atol=1e-12)


def test_givens_rotation_zeroes_second_entry():
    G = GivensRotation.zeroing(3.0, 4.0, 0)
    v = G.apply(np.array([3.0, 4.0]))
    np.testing.assert_allclose(v, [5.0, 0.0], atol=1e-15)


def test_csv_and_dmat_roundtrip(tmp_path):
    M = np.random.default_rng(1).standard_normal((4, 3))
    save_matrix(tmp_path / "m.csv", M)
    save_matrix(tmp_path / "m.dmat", M)
    np.testing.assert_array_equal(load_matrix(tmp_path / "m.csv"), M)
    np.testing.assert_array_equal(load_matrix(tmp_path / "m.dmat"), M)


def test_dmat_layout_is_column_major_little_endian(tmp_path):
    write_dmat(tmp_path / "a.dmat", np.array([[1.0, 2.0], [3.0, 4.0]]))
    raw = (tmp_path / "a.dmat").read_bytes()
    assert raw[:4] == b"DMAT"
    vals = np.frombuffer(raw[20:], dtype="<f8")
    np.testing.assert_array_equal(vals, [1.0, 3.0, 2.0, 4.0])


def test_dmat_truncated_payload(tmp_path):
    write_dmat(tmp_path / "a.dmat", np.ones((2, 2)))
    path = tmp_path / "a.dmat"
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(MatrixFormatError):
        read_dmat(path)


def test_csv_ragged_rows(tmp_path):
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(MatrixFormatError):
        load_matrix(tmp_path / "r.csv")


def test_csv_writes_full_precision(tmp_path):
    write_csv_matrix(tmp_path / "p.csv", [[0.1 + 0.2]])
    assert load_matrix(tmp_path / "p.csv")[0, 0] == 0.1 + 0.2
