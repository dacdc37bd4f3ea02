import itertools
import json
import math

import numpy as np
import pytest

from rankwitness.errors import ShapeMismatch
from rankwitness.nnrank import RankConfig, factorization_to_latent, nonnegative_rank
from rankwitness.protocols import (
    HybridProtocol,
    MessageProtocol,
    SeedProtocol,
    correlation_complexity,
    hybrid_as_message,
    hybrid_as_seed,
    protocol_from_dict,
    protocol_to_dict,
    random_hybrid_protocol,
    random_message_protocol,
    random_seed_protocol,
    seed_to_message,
    simulate,
    tradeoff_check,
)

FAST = RankConfig(restarts=8, max_iters=3000)


def loop_seed(p):
    nz, nx = p.alice_encoder.shape
    ny = p.bob_encoder.shape[1]
    P = np.zeros((nx, ny))
    for z, x, y in itertools.product(range(nz), range(nx), range(ny)):
        P[x, y] += p.seed_dist[z] * p.alice_encoder[z, x] * p.bob_encoder[z, y]
    return P


def loop_message(p):
    nx, nm = p.message_channel.shape
    ny = p.bob_decoder.shape[1]
    P = np.zeros((nx, ny))
    for x, m, y in itertools.product(range(nx), range(nm), range(ny)):
        P[x, y] += p.alice_dist[x] * p.message_channel[x, m] * p.bob_decoder[m, y]
    return P


def loop_hybrid(p):
    n1, nx = p.alice_encoder.shape
    n2 = p.message_channel.shape[2]
    ny = p.bob_decoder.shape[2]
    P = np.zeros((nx, ny))
    for a, x, b, y in itertools.product(range(n1), range(nx), range(n2), range(ny)):
        P[x, y] += p.seed_dist[a] * p.alice_encoder[a, x] * p.message_channel[x, a, b] * p.bob_decoder[a, b, y]
    return P


def test_shared_bit():
    p = SeedProtocol(np.array([0.5, 0.5]), np.eye(2), np.eye(2))
    np.testing.assert_allclose(simulate(p).values, np.eye(2) / 2)
    r = correlation_complexity(simulate(p))
    assert r.rcorr_bits == (1.0, 1.0) and r.exact


def test_offdiag3_complexity(offdiag3):
    r = correlation_complexity(offdiag3)
    assert r.exact and r.rcorr_bits[0] == pytest.approx(math.log2(3), abs=1e-12)
    assert r.rcomm_bits == r.rcorr_bits


def test_simulations_match_loops():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = random_seed_protocol(rng, 3, 4, 2)
        m = random_message_protocol(rng, 2, 3, 4)
        h = random_hybrid_protocol(rng, 2, 3, 3, 2)
        np.testing.assert_allclose(simulate(s).values, loop_seed(s), atol=1e-15)
        np.testing.assert_allclose(simulate(m).values, loop_message(m), atol=1e-15)
        np.testing.assert_allclose(simulate(h).values, loop_hybrid(h), atol=1e-15)


def test_seed_message_duality():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = random_seed_protocol(rng, *rng.integers(1, 5, size=3))
        m = seed_to_message(s)
        assert m.message_channel.shape[1] == len(s.seed_dist)
        np.testing.assert_allclose(simulate(m).values, simulate(s).values, atol=1e-12)


def test_seed_to_message_unreachable_input():
    s = SeedProtocol(np.array([1.0]), np.array([[1.0, 0.0]]), np.array([[0.5, 0.5]]))
    m = seed_to_message(s)
    np.testing.assert_allclose(simulate(m).values, simulate(s).values, atol=1e-15)


def test_hybrid_degenerates():
    rng = np.random.default_rng(2)
    h1 = random_hybrid_protocol(rng, 3, 1, 3, 3)
    np.testing.assert_allclose(simulate(hybrid_as_seed(h1)).values, simulate(h1).values, atol=1e-15)
    assert hybrid_as_message(h1) is None
    h2 = random_hybrid_protocol(rng, 1, 3, 3, 3)
    np.testing.assert_allclose(simulate(hybrid_as_message(h2)).values, simulate(h2).values, atol=1e-15)
    assert hybrid_as_seed(h2) is None


def test_hybrid_diagonal_four(data_dir):
    h = protocol_from_dict(json.loads((data_dir / "diag4_hybrid.json").read_text()))
    np.testing.assert_allclose(simulate(h).values, np.eye(4) / 4, atol=1e-15)
    ok, rep = tradeoff_check(2, 2, simulate(h))
    assert ok and rep["margin"] == 0
    assert not tradeoff_check(1, 3, simulate(h))[0]


def test_tradeoff_offdiag3(offdiag3):
    ok, rep = tradeoff_check(2, 2, offdiag3)
    assert ok and rep["margin"] == 1
    assert not tradeoff_check(1, 2, offdiag3)[0]
    with pytest.raises(ValueError):
        tradeoff_check(0, 2, offdiag3)


def test_generated_rank_within_seed_size():
    rng = np.random.default_rng(3)
    for _ in range(30):
        k = int(rng.integers(1, 4))
        s = random_seed_protocol(rng, k, 4, 4)
        b = nonnegative_rank(simulate(s).values, FAST)
        assert b.lower <= k and b.upper <= k


def test_hybrid_rank_within_budget():
    rng = np.random.default_rng(4)
    for _ in range(20):
        h = random_hybrid_protocol(rng, 2, 2, 5, 5)
        assert tradeoff_check(2, 2, simulate(h), FAST)[0]


def test_factorization_gives_protocol(offdiag3_float):
    # a certified factorization is itself a seed protocol of that size
    b = nonnegative_rank(offdiag3_float, FAST)
    dec = factorization_to_latent(b.upper_certificate)
    s = SeedProtocol(dec.p_z, dec.cond_x, dec.cond_y)
    assert len(s.seed_dist) == 3
    np.testing.assert_allclose(simulate(s).values, offdiag3_float, atol=1e-9)


def test_json_round_trip():
    rng = np.random.default_rng(5)
    for p in (random_seed_protocol(rng, 2, 3, 3), random_message_protocol(rng, 2, 3, 3),
              random_hybrid_protocol(rng, 2, 2, 3, 3)):
        q = protocol_from_dict(json.loads(json.dumps(protocol_to_dict(p))))
        np.testing.assert_array_equal(simulate(p).values, simulate(q).values)


def test_validation():
    with pytest.raises(ShapeMismatch):
        SeedProtocol(np.array([0.5, 0.6]), np.eye(2), np.eye(2))
    with pytest.raises(ShapeMismatch):
        SeedProtocol(np.array([1.0]), np.eye(2), np.eye(2))
    with pytest.raises(ShapeMismatch):
        MessageProtocol(np.array([1.0, -0.0 - 0.1]), np.eye(2), np.eye(2))
    with pytest.raises(ShapeMismatch):
        HybridProtocol(np.array([1.0]), np.array([[1.0]]), np.ones((1, 1, 1)), np.ones((1, 2, 1)))
    with pytest.raises(ShapeMismatch):
        protocol_from_dict({"type": "quantum"})
