import numpy as np
import pytest

from rankwitness.errors import NegativeEntry, ShapeMismatch
from rankwitness.nnrank import RankConfig, nonnegative_rank
from rankwitness.psd import PsdFactorization, psd_rank_bounds, psd_search, verify_psd_factorization


def offdiag3_closed_form():
    # unit vectors 60 degrees apart; each F is orthogonal to its own E
    angles = np.deg2rad([0.0, 60.0, 120.0])
    v = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    w = np.stack([-np.sin(angles), np.cos(angles)], axis=1)
    E = np.einsum("ai,aj->aij", v, v)
    F = (2.0 / 9.0) * np.einsum("bi,bj->bij", w, w)
    return PsdFactorization(E, F)


def test_closed_form_reproduces_offdiag3(offdiag3_float):
    f = offdiag3_closed_form()
    np.testing.assert_allclose(f.matrix(), offdiag3_float, atol=1e-15)
    assert verify_psd_factorization(offdiag3_float, f)


def test_offdiag3_bounds(offdiag3):
    nn = nonnegative_rank(offdiag3)
    b = psd_rank_bounds(offdiag3, nn)
    assert (b.lower, b.upper) == (2, 3)
    b2 = psd_rank_bounds(offdiag3, nn, certificate=offdiag3_closed_form())
    assert (b2.lower, b2.upper) == (2, 2) and b2.exact


def test_search_finds_offdiag3_certificate(offdiag3_float):
    f = psd_search(offdiag3_float, 2, restarts=20)
    assert f is not None and f.r == 2
    assert verify_psd_factorization(offdiag3_float, f, tol=1e-8)


def test_rejects_negative_eigenvalue(offdiag3_float):
    f = offdiag3_closed_form()
    E = f.e_factors.copy()
    E[0] = np.diag([1.0, -0.5])
    assert not verify_psd_factorization(offdiag3_float, PsdFactorization(E, f.f_factors))


def test_rejects_asymmetric(offdiag3_float):
    f = offdiag3_closed_form()
    E = f.e_factors.copy()
    E[1, 0, 1] += 0.1
    assert not verify_psd_factorization(offdiag3_float, PsdFactorization(E, f.f_factors))


def test_rejects_wrong_values(offdiag3_float):
    f = offdiag3_closed_form()
    assert not verify_psd_factorization(offdiag3_float * 0.9 + 0.1 / 9, f)


def test_shape_mismatch(offdiag3_float):
    f = offdiag3_closed_form()
    with pytest.raises(ShapeMismatch):
        verify_psd_factorization(offdiag3_float[:2], f)
    with pytest.raises(ShapeMismatch):
        PsdFactorization.from_dict({"E": [[1.0, 0.0]], "F": [[1.0, 0.0]]})


def test_bad_certificate_ignored(offdiag3):
    nn = nonnegative_rank(offdiag3)
    bad = PsdFactorization(np.zeros((3, 2, 2)), np.zeros((3, 2, 2)))
    b = psd_rank_bounds(offdiag3, nn, certificate=bad)
    assert b.upper == 3 and any("failed" in n for n in b.notes)


def test_diagonal_four():
    P = np.eye(4) / 4
    b = psd_rank_bounds(P, nonnegative_rank(P))
    assert (b.lower, b.upper) == (3, 4)


def test_rank_one():
    P = np.outer([0.5, 0.5], [0.25, 0.75])
    b = psd_rank_bounds(P, nonnegative_rank(P))
    assert (b.lower, b.upper) == (1, 1)


def test_scaling_invariance(offdiag3_float):
    rng = np.random.default_rng(0)
    D1, D2 = np.diag(rng.uniform(0.5, 2, 3)), np.diag(rng.uniform(0.5, 2, 3))
    f = offdiag3_closed_form()
    P = D1 @ offdiag3_float @ D2
    scaled = PsdFactorization(f.e_factors * np.diag(D1)[:, None, None], f.f_factors * np.diag(D2)[:, None, None])
    assert verify_psd_factorization(P, scaled)
    b = psd_rank_bounds(P, nonnegative_rank(P, RankConfig(restarts=8)), certificate=scaled)
    assert (b.lower, b.upper) == (2, 2)


def test_sandwich_random():
    rng = np.random.default_rng(4)
    for _ in range(20):
        P = rng.random((3, 4))
        P /= P.sum()
        nn = nonnegative_rank(P, RankConfig(restarts=4, max_iters=1000))
        b = psd_rank_bounds(P, nn)
        assert b.lower <= b.upper <= nn.upper


def test_negative_matrix():
    with pytest.raises(NegativeEntry):
        psd_rank_bounds(np.array([[1.0, -1.0]]), nonnegative_rank(np.ones((1, 2)) / 2))


def test_json_round_trip():
    f = offdiag3_closed_form()
    g = PsdFactorization.from_dict(f.to_dict())
    np.testing.assert_array_equal(f.e_factors, g.e_factors)
    with pytest.raises(ShapeMismatch):
        PsdFactorization.from_dict({**f.to_dict(), "r": 3})
