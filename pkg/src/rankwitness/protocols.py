"""Two-party distribution generation: shared seed, one-way message, or both.

Simulations propagate probabilities exactly (sum-product); nothing is sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dist import JointDistribution, from_matrix, to_float
from .errors import ShapeMismatch
from .nnrank import RankBounds, RankConfig, nonnegative_rank

STOCHASTIC_TOL = 1e-9


def _check_stochastic(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if np.any(arr < 0):
        raise ShapeMismatch(f"{name} has negative entries")
    if not np.allclose(arr.sum(axis=-1), 1.0, rtol=0.0, atol=STOCHASTIC_TOL):
        raise ShapeMismatch(f"{name} rows must sum to 1")
    return arr


@dataclass(frozen=True, eq=False)
class SeedProtocol:
    seed_dist: np.ndarray      # (|Z|,)
    alice_encoder: np.ndarray  # (|Z|, |X|)
    bob_encoder: np.ndarray    # (|Z|, |Y|)

    def __post_init__(self):
        s = _check_stochastic("seed_dist", self.seed_dist)
        a = _check_stochastic("alice_encoder", self.alice_encoder)
        b = _check_stochastic("bob_encoder", self.bob_encoder)
        if a.ndim != 2 or b.ndim != 2 or s.ndim != 1 or not (len(s) == a.shape[0] == b.shape[0]):
            raise ShapeMismatch("seed protocol shapes must be (Z,), (Z, X), (Z, Y)")


@dataclass(frozen=True, eq=False)
class MessageProtocol:
    alice_dist: np.ndarray       # (|X|,)
    message_channel: np.ndarray  # (|X|, |M|)
    bob_decoder: np.ndarray      # (|M|, |Y|)

    def __post_init__(self):
        a = _check_stochastic("alice_dist", self.alice_dist)
        c = _check_stochastic("message_channel", self.message_channel)
        d = _check_stochastic("bob_decoder", self.bob_decoder)
        if a.ndim != 1 or c.ndim != 2 or d.ndim != 2 or c.shape[0] != len(a) or c.shape[1] != d.shape[0]:
            raise ShapeMismatch("message protocol shapes must be (X,), (X, M), (M, Y)")


@dataclass(frozen=True, eq=False)
class HybridProtocol:
    seed_dist: np.ndarray        # (|Z1|,)
    alice_encoder: np.ndarray    # (|Z1|, |X|)
    message_channel: np.ndarray  # (|X|, |Z1|, |Z2|)
    bob_decoder: np.ndarray      # (|Z1|, |Z2|, |Y|)

    def __post_init__(self):
        s = _check_stochastic("seed_dist", self.seed_dist)
        a = _check_stochastic("alice_encoder", self.alice_encoder)
        c = _check_stochastic("message_channel", self.message_channel)
        d = _check_stochastic("bob_decoder", self.bob_decoder)
        if s.ndim != 1 or a.ndim != 2 or c.ndim != 3 or d.ndim != 3:
            raise ShapeMismatch("hybrid protocol arrays have the wrong number of axes")
        z1, x = a.shape
        if len(s) != z1 or c.shape[:2] != (x, z1) or d.shape[:2] != (z1, c.shape[2]):
            raise ShapeMismatch("hybrid protocol shapes must be (Z1,), (Z1, X), (X, Z1, Z2), (Z1, Z2, Y)")


def _as_dist(P: np.ndarray) -> JointDistribution:
    P = np.maximum(P, 0.0)
    return from_matrix([("X", P.shape[0]), ("Y", P.shape[1])], P, tolerance=1e-9)


def simulate_seed_protocol(p: SeedProtocol) -> JointDistribution:
    """``P(x, y) = Σ_z P(z) P(x|z) P(y|z)``."""
    P = np.einsum("z,zx,zy->xy", p.seed_dist, p.alice_encoder, p.bob_encoder)
    return _as_dist(P)


def simulate_message_protocol(p: MessageProtocol) -> JointDistribution:
    """``P(x, y) = P(x) Σ_m P(m|x) P(y|m)``."""
    P = np.einsum("x,xm,my->xy", p.alice_dist, p.message_channel, p.bob_decoder)
    return _as_dist(P)


def simulate_hybrid_protocol(p: HybridProtocol) -> JointDistribution:
    """``P(x, y) = Σ_{z1,z2} P(z1) P(x|z1) P(z2|x,z1) P(y|z1,z2)``."""
    P = np.einsum("a,ax,xab,aby->xy", p.seed_dist, p.alice_encoder, p.message_channel, p.bob_decoder)
    return _as_dist(P)


def seed_to_message(p: SeedProtocol) -> MessageProtocol:
    """Equivalent one-way protocol with ``|M| = |Z|``: Alice sends a posterior sample of the seed."""
    joint_xz = p.seed_dist[:, None] * p.alice_encoder  # (Z, X)
    px = joint_xz.sum(axis=0)
    channel = np.empty((len(px), len(p.seed_dist)))
    for x, mass in enumerate(px):
        if mass > 0:
            channel[x] = joint_xz[:, x] / mass
        else:
            channel[x] = 1.0 / len(p.seed_dist)  # unreachable input; any row works
    return MessageProtocol(px, channel, np.asarray(p.bob_encoder, dtype=float).copy())


def hybrid_as_seed(p: HybridProtocol) -> Optional[SeedProtocol]:
    """The seed protocol a hybrid protocol with a single message value reduces to."""
    if p.message_channel.shape[2] != 1:
        return None
    return SeedProtocol(p.seed_dist, p.alice_encoder, p.bob_decoder[:, 0, :])


def hybrid_as_message(p: HybridProtocol) -> Optional[MessageProtocol]:
    """The message protocol a hybrid protocol with a single seed value reduces to."""
    if len(p.seed_dist) != 1:
        return None
    return MessageProtocol(p.alice_encoder[0], p.message_channel[:, 0, :], p.bob_decoder[0])


@dataclass(frozen=True, eq=False)
class ComplexityReport:
    rank_bounds: RankBounds
    rcorr_bits: tuple
    rcomm_bits: tuple

    @property
    def exact(self) -> bool:
        return self.rank_bounds.exact

    def to_dict(self) -> dict:
        return {
            "rank_lower": self.rank_bounds.lower,
            "rank_upper": self.rank_bounds.upper,
            "rcorr_bits": list(self.rcorr_bits),
            "rcomm_bits": list(self.rcomm_bits),
            "exact": self.exact,
        }


def _matrix(dist):
    return dist.matrix() if isinstance(dist, JointDistribution) else np.asarray(dist)


def correlation_complexity(dist, config: Optional[RankConfig] = None) -> ComplexityReport:
    """Seed bits (= one-way message bits) needed to generate ``dist``: log2 of its nonnegative rank."""
    bounds = nonnegative_rank(_matrix(dist), config)
    bits = (math.log2(bounds.lower), math.log2(bounds.upper))
    return ComplexityReport(bounds, bits, bits)


def tradeoff_check(card_z1: int, card_z2: int, dist, config: Optional[RankConfig] = None):
    """Necessary condition ``|Z1|·|Z2| ≥ rank₊`` for a seed+message protocol to exist.

    Returns ``(ok, report)``.
    """
    if card_z1 < 1 or card_z2 < 1:
        raise ValueError("cardinalities must be positive")
    cfg = config or RankConfig()
    bounds = nonnegative_rank(_matrix(dist), cfg)
    budget = card_z1 * card_z2
    ok = budget >= bounds.lower
    report = {
        "ok": ok,
        "card_z1": card_z1,
        "card_z2": card_z2,
        "budget": budget,
        "rank_lower": bounds.lower,
        "rank_upper": bounds.upper,
        "margin": budget - bounds.lower,
        "bits_budget": math.log2(budget),
        "bits_needed_lower": math.log2(bounds.lower),
    }
    return ok, report


# --- random instances -----------------------------------------------------


def random_seed_protocol(rng: np.random.Generator, card_z: int, card_x: int, card_y: int) -> SeedProtocol:
    return SeedProtocol(rng.dirichlet(np.ones(card_z)),
                        rng.dirichlet(np.ones(card_x), size=card_z),
                        rng.dirichlet(np.ones(card_y), size=card_z))


def random_message_protocol(rng: np.random.Generator, card_m: int, card_x: int, card_y: int) -> MessageProtocol:
    return MessageProtocol(rng.dirichlet(np.ones(card_x)),
                           rng.dirichlet(np.ones(card_m), size=card_x),
                           rng.dirichlet(np.ones(card_y), size=card_m))


def random_hybrid_protocol(rng: np.random.Generator, card_z1: int, card_z2: int,
                           card_x: int, card_y: int) -> HybridProtocol:
    return HybridProtocol(rng.dirichlet(np.ones(card_z1)),
                          rng.dirichlet(np.ones(card_x), size=card_z1),
                          rng.dirichlet(np.ones(card_z2), size=(card_x, card_z1)),
                          rng.dirichlet(np.ones(card_y), size=(card_z1, card_z2)))


# --- JSON -----------------------------------------------------------------


def protocol_from_dict(data):
    kind = data.get("type")
    enc = data.get("encoders", {})
    if kind == "seed":
        return SeedProtocol(np.asarray(data["seed"], float), np.asarray(enc["alice"], float),
                            np.asarray(enc["bob"], float))
    if kind == "message":
        return MessageProtocol(np.asarray(enc["alice"], float), np.asarray(enc["channel"], float),
                               np.asarray(enc["bob"], float))
    if kind == "hybrid":
        return HybridProtocol(np.asarray(data["seed"], float), np.asarray(enc["alice"], float),
                              np.asarray(enc["channel"], float), np.asarray(enc["bob"], float))
    raise ShapeMismatch(f"unknown protocol type {kind!r}")


def protocol_to_dict(p) -> dict:
    if isinstance(p, SeedProtocol):
        return {"type": "seed", "seed": to_float(p.seed_dist).tolist(),
                "encoders": {"alice": to_float(p.alice_encoder).tolist(), "bob": to_float(p.bob_encoder).tolist()}}
    if isinstance(p, MessageProtocol):
        return {"type": "message",
                "encoders": {"alice": to_float(p.alice_dist).tolist(), "channel": to_float(p.message_channel).tolist(),
                             "bob": to_float(p.bob_decoder).tolist()}}
    if isinstance(p, HybridProtocol):
        return {"type": "hybrid", "seed": to_float(p.seed_dist).tolist(),
                "encoders": {"alice": to_float(p.alice_encoder).tolist(),
                             "channel": to_float(p.message_channel).tolist(),
                             "bob": to_float(p.bob_decoder).tolist()}}
    raise TypeError(type(p))


def simulate(p) -> JointDistribution:
    if isinstance(p, SeedProtocol):
        return simulate_seed_protocol(p)
    if isinstance(p, MessageProtocol):
        return simulate_message_protocol(p)
    if isinstance(p, HybridProtocol):
        return simulate_hybrid_protocol(p)
    raise TypeError(type(p))
