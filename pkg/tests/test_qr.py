import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lhdm import _backend
from lhdm.dense import positivity_trick
from lhdm.errors import (IndexAlreadyPassive, IndexNotPassive, SingularUpdate,
                         TwinAlreadyPassive)
from lhdm.qr import QRWorkspace


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


def gram_error(ws):
    R = ws.R
    AP = ws.A.array[:, ws.passive]
    G = AP.T @ AP
    return np.linalg.norm(R.T @ R - G) / max(np.linalg.norm(G), 1e-300)


def replay(ws, A, b):
    """Apply the logged transforms to fresh copies of ``A Pi`` and ``b``."""
    W = np.array(A, dtype=float)
    r = np.array(b, dtype=float)
    for t in ws.transform_log:
        W = t.apply(W)
        r = t.apply(r)
    return W, r


def test_initialize_identity(backend):
    ws = QRWorkspace(np.eye(2), [1.0, 2.0], backend=backend)
    assert ws.ns == 0 and ws.R.shape == (0, 0)
    np.testing.assert_array_equal(ws.C, np.eye(2))
    np.testing.assert_array_equal(ws.column_map, [0, 1])


def test_initialize_copies_matrix(backend):
    A = np.random.default_rng(0).uniform(1, 2, (3, 2))
    ws = QRWorkspace(A, [1.0, 1.0, 1.0], backend=backend)
    np.testing.assert_array_equal(ws.C, A)
    assert ws.W is not A


def test_append_orthonormal_column(backend):
    b = np.array([1.0, 2.0, 3.0])
    ws = QRWorkspace(np.eye(3), b, backend=backend)
    ws.append([0])
    assert abs(ws.R[0, 0]) == 1.0
    assert abs(ws.b_transformed[0]) == 1.0
    np.testing.assert_array_equal(np.abs(ws.b_transformed[1:]), b[1:])


def test_append_all_identity_columns(backend):
    ws = QRWorkspace(np.eye(3), np.ones(3), backend=backend)
    ws.append([0, 1, 2])
    np.testing.assert_allclose(np.abs(ws.R), np.eye(3), atol=1e-15)


def test_append_sequence_matches_fresh_qr(backend):
    A = np.random.default_rng(1).standard_normal((6, 4))
    ws = QRWorkspace(A, np.ones(6), backend=backend)
    ws.append([1, 3]).append([0])
    assert list(ws.passive) == [1, 3, 0]
    R_fresh = np.linalg.qr(A[:, [1, 3, 0]], mode="r")
    np.testing.assert_allclose(np.abs(ws.R), np.abs(R_fresh), atol=1e-10)
    assert gram_error(ws) < 1e-10


def test_append_rejects_passive_index(backend):
    ws = QRWorkspace(np.eye(3), np.ones(3), backend=backend)
    ws.append([0])
    with pytest.raises(IndexAlreadyPassive):
        ws.append([0])


def test_singular_append_leaves_state(backend):
    A = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [1.0, 2.0, 0.0]])
    ws = QRWorkspace(A, np.ones(3), backend=backend)
    ws.append([0])
    W_before = ws.W.copy()
    with pytest.raises(SingularUpdate) as info:
        ws.append([2, 1])
    assert info.value.position == 1 and info.value.index == 1
    assert ws.ns == 1
    # the passive factor is unchanged; only active columns may be reordered
    np.testing.assert_array_equal(ws.W[:, 0], W_before[:, 0])


def test_remove_single_column(backend):
    A = np.random.default_rng(2).standard_normal((4, 3))
    ws = QRWorkspace(A, np.ones(4), backend=backend)
    ws.append([1])
    ws.remove([1])
    assert ws.ns == 0 and ws.last_rotations == 0


def test_downdate_rotation_count_8x7(backend):
    # m = 8, n = 7, remove the 2nd and 5th columns: 1 + 1 + 2 + 2 rotations
    A = np.random.default_rng(3).standard_normal((8, 7))
    ws = QRWorkspace(A, np.ones(8), backend=backend)
    ws.append(range(7))
    ws.remove([1, 4])
    assert ws.last_rotations == 6
    assert ws.R.shape == (5, 5)
    np.testing.assert_array_equal(np.tril(ws.R, -1), 0.0)
    np.testing.assert_array_equal(ws.W[5:, :5], 0.0)
    assert list(ws.passive) == [0, 2, 3, 5, 6]
    assert gram_error(ws) < 1e-12


def test_remove_matches_fresh_qr(backend):
    A = np.random.default_rng(4).standard_normal((10, 6))
    ws = QRWorkspace(A, np.ones(10), backend=backend)
    ws.append(range(6)).remove([0, 2])
    R_fresh = np.linalg.qr(A[:, [1, 3, 4, 5]], mode="r")
    np.testing.assert_allclose(np.abs(ws.R), np.abs(R_fresh), atol=1e-10)


def test_remove_last_column_costs_no_rotation(backend):
    A = np.random.default_rng(5).standard_normal((6, 4))
    ws = QRWorkspace(A, np.ones(6), backend=backend)
    ws.append([0, 1, 2]).remove([2])
    assert ws.last_rotations == 0


def test_remove_rejects_active_index(backend):
    ws = QRWorkspace(np.eye(3), np.ones(3), backend=backend)
    with pytest.raises(IndexNotPassive):
        ws.remove([1])


def test_transform_log_replays_workspace(backend):
    rng = np.random.default_rng(6)
    A, b = rng.standard_normal((9, 7)), rng.standard_normal(9)
    ws = QRWorkspace(A, b, record_transforms=True, backend=backend)
    ws.append([4, 0, 2]).append([6, 1]).remove([0, 6])
    W, r = replay(ws, A[:, ws.column_map], b)
    np.testing.assert_allclose(W, ws.W, atol=1e-12)
    np.testing.assert_allclose(r, ws.b_transformed, atol=1e-12)


def test_ls_solution_matches_lstsq(backend):
    rng = np.random.default_rng(7)
    A, b = rng.standard_normal((12, 5)), rng.standard_normal(12)
    ws = QRWorkspace(A, b, backend=backend)
    ws.append([3, 1, 4])
    ref = np.linalg.lstsq(A[:, [3, 1, 4]], b, rcond=None)[0]
    np.testing.assert_allclose(ws.solve(), ref, rtol=1e-12)
    assert abs(ws.ls_residual_norm() - np.linalg.norm(A[:, [3, 1, 4]] @ ref - b)) < 1e-12


def test_trailing_norms_are_indexed_by_column(backend):
    rng = np.random.default_rng(8)
    A = rng.standard_normal((6, 5))
    ws = QRWorkspace(A, np.ones(6), backend=backend)
    ws.append([2])
    u2 = ws.trailing_norms()
    assert u2[2] == 0.0
    q = A[:, 2] / np.linalg.norm(A[:, 2])
    for j in (0, 1, 3, 4):
        expected = np.linalg.norm(A[:, j] - q * (q @ A[:, j]))
        assert abs(u2[j] - expected) < 1e-12


def test_sign_flip_single_entry(backend):
    ws = QRWorkspace(positivity_trick([[2.0]]), [1.0], backend=backend)
    ws.append([0])
    r = ws.R[0, 0]
    ws.sign_flip(0)
    assert ws.R[0, 0] == -r
    assert list(ws.passive) == [1]


def test_sign_flip_negates_one_component(backend):
    rng = np.random.default_rng(9)
    Apt = positivity_trick(rng.standard_normal((4, 3)))
    ws = QRWorkspace(Apt, rng.standard_normal(4), backend=backend)
    ws.append([0, 4])
    y = ws.solve()
    ws.sign_flip(1)
    y2 = ws.solve()
    assert list(ws.passive) == [0, 1]
    assert y2[1] == -y[1] and y2[0] == y[0]


def test_sign_flip_is_involution(backend):
    rng = np.random.default_rng(10)
    Apt = positivity_trick(rng.standard_normal((5, 4)))
    ws = QRWorkspace(Apt, rng.standard_normal(5), backend=backend)
    ws.append([0, 5, 2])
    W0, cm0, pos0 = ws.W.copy(), ws.column_map.copy(), ws.position.copy()
    ws.sign_flip(1)
    ws.sign_flip(1)
    np.testing.assert_array_equal(ws.W, W0)
    np.testing.assert_array_equal(ws.column_map, cm0)
    np.testing.assert_array_equal(ws.position, pos0)


def test_sign_flip_refuses_passive_twin(backend):
    Apt = positivity_trick(np.random.default_rng(11).standard_normal((5, 3)))
    ws = QRWorkspace(Apt, np.ones(5), singularity_tolerance=1e-300, backend=backend)
    ws.append([0])
    # column 3 is the exact negation of column 0, so force it in by hand
    ws._swap_positions(1, ws.position[3])
    ws.ns = 2
    with pytest.raises(TwinAlreadyPassive):
        ws.sign_flip(0)


def test_flop_counters_grow(backend):
    A = np.random.default_rng(12).standard_normal((10, 8))
    ws = QRWorkspace(A, np.ones(10), backend=backend)
    ws.append([0, 1, 2, 3])
    assert ws.flops["update"] > 0 and ws.flops["downdate"] == 0
    ws.remove([0])
    assert ws.flops["downdate"] > 0
    assert ws.reflector_count == 4 and ws.rotation_count == 3


def test_backends_agree():
    if "compiled" not in _backend.available():
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(13)
    A, b = rng.standard_normal((20, 15)), rng.standard_normal(20)
    out = []
    for name in ("python", "compiled"):
        ws = QRWorkspace(A, b, backend=name)
        ws.append([3, 7, 1, 9]).append([0, 2]).remove([7, 1])
        out.append((ws.W.copy(), ws.b_transformed.copy()))
    np.testing.assert_allclose(out[0][0], out[1][0], atol=1e-12)
    np.testing.assert_allclose(out[0][1], out[1][1], atol=1e-12)


ops = st.lists(st.tuples(st.sampled_from(["append", "remove", "flip"]),
                         st.integers(0, 10 ** 6)), min_size=1, max_size=20)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), m=st.integers(3, 20), n=st.integers(2, 15), seq=ops)
def test_mutation_sequences_keep_gram_identity(seed, m, n, seq):
    rng = np.random.default_rng(seed)
    Apt = positivity_trick(rng.standard_normal((m, n)))
    ws = QRWorkspace(Apt, rng.standard_normal(m))
    for op, r in seq:
        active = [j for j in ws.active if not ws.is_passive(ws.twin(j))]
        if op == "append" and active and ws.ns < m:
            k = 1 + r % min(3, len(active), m - ws.ns)
            J = list(rng.choice(active, size=k, replace=False))
            # keep at most one of each twin pair
            J = [j for i, j in enumerate(J) if ws.twin(j) not in J[:i]]
            try:
                ws.append(J)
            except SingularUpdate:
                pass
        elif op == "remove" and ws.ns:
            k = 1 + r % ws.ns
            ws.remove(list(rng.choice(ws.passive, size=k, replace=False)))
        elif op == "flip" and ws.ns:
            ws.sign_flip(r % ws.ns)
        if ws.ns:
            assert gram_error(ws) <= 1e-9
        assert sorted(ws.column_map) == list(range(2 * n))
