"""Certified bounds on the nonnegative rank of a nonnegative matrix.

Lower bounds come from the linear rank and from the rectangle cover number of
the support; upper bounds come from explicit nonnegative factorizations, either
found by NMF or the trivial one-term-per-row construction. The rank is only
reported as exact when the two meet.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .dist import is_exact, to_float
from .errors import NegativeEntry, NotADistribution, ShapeMismatch, TooLarge

log = logging.getLogger(__name__)

FLOAT_RANK_RTOL = 1e-9


@dataclass(frozen=True)
class RankConfig:
    restarts: int = 32
    max_iters: int = 5000
    residual_tol: float = 1e-9
    seed: int = 0
    exact_lb_max_support: int = 24
    arith: str = "auto"  # "auto" | "exact" | "float"

    def __post_init__(self):
        if self.restarts < 0 or self.max_iters < 0:
            raise ValueError("restarts and max_iters must be nonnegative")
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.arith not in ("auto", "exact", "float"):
            raise ValueError(f"unknown arithmetic {self.arith!r}")

    def to_dict(self) -> dict:
        return {
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "residual_tol": self.residual_tol,
            "seed": self.seed,
            "exact_lb_max_support": self.exact_lb_max_support,
            "arith": self.arith,
        }


@dataclass(frozen=True, eq=False)
class NNFactorization:
    """``M ≈ Σ_z outer(x_factors[z], y_factors[z])`` with nonnegative factors."""

    x_factors: np.ndarray  # (r, rows)
    y_factors: np.ndarray  # (r, cols)
    residual: float = 0.0

    def __post_init__(self):
        if self.x_factors.ndim != 2 or self.y_factors.ndim != 2 or \
                self.x_factors.shape[0] != self.y_factors.shape[0]:
            raise ShapeMismatch("factor arrays must be (r, rows) and (r, cols)")
        if min(self.x_factors.flat, default=0) < 0 or min(self.y_factors.flat, default=0) < 0:
            raise NegativeEntry("factorization has a negative entry")

    @property
    def r(self) -> int:
        return self.x_factors.shape[0]

    @property
    def pairs(self) -> list:
        return list(zip(self.x_factors, self.y_factors))

    def matrix(self) -> np.ndarray:
        return self.x_factors.T @ self.y_factors

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "pairs": [{"x": [float(v) for v in x], "y": [float(v) for v in y]} for x, y in self.pairs],
            "residual": float(self.residual),
        }

    @classmethod
    def from_dict(cls, data) -> "NNFactorization":
        xs = np.array([p["x"] for p in data["pairs"]], dtype=float)
        ys = np.array([p["y"] for p in data["pairs"]], dtype=float)
        if len(data["pairs"]) != data.get("r", len(data["pairs"])):
            raise ShapeMismatch("r does not match the number of pairs")
        return cls(xs, ys, float(data.get("residual", 0.0)))


@dataclass(frozen=True, eq=False)
class LatentDecomposition:
    p_z: np.ndarray
    cond_x: np.ndarray  # (r, rows), each row a distribution
    cond_y: np.ndarray  # (r, cols)
    dropped: tuple = ()

    @property
    def r(self) -> int:
        return len(self.p_z)


@dataclass(frozen=True, eq=False)
class RankBounds:
    lower: int
    upper: int
    lower_certificates: tuple
    upper_certificate: Optional[NNFactorization] = None
    notes: tuple = ()

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> Optional[int]:
        return self.lower if self.exact else None

    def to_dict(self, with_certificate: bool = True) -> dict:
        out = {
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "lower_certificates": [{"method": m, "value": v} for m, v in self.lower_certificates],
        }
        if with_certificate:
            out["upper_certificate"] = self.upper_certificate.to_dict() if self.upper_certificate else None
        out["notes"] = list(self.notes)
        return out


# --- lower bounds ---------------------------------------------------------


def _bareiss_rank(rows: list) -> int:
    """Rank of an integer matrix by fraction-free elimination."""
    M = [list(r) for r in rows]
    n = len(M)
    m = len(M[0]) if n else 0
    rank, prev = 0, 1
    for col in range(m):
        piv = next((i for i in range(rank, n) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][col]
        for i in range(rank + 1, n):
            a = M[i][col]
            for j in range(col + 1, m):
                M[i][j] = (M[i][j] * p - a * M[rank][j]) // prev
            M[i][col] = 0
        prev = p
        rank += 1
        if rank == n:
            break
    return rank


def linear_rank(matrix, arithmetic: str = "auto") -> int:
    """Matrix rank; ``exact`` eliminates over the rationals, ``float`` thresholds singular values."""
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeMismatch("linear_rank needs a nonempty 2-d matrix")
    if arithmetic == "auto":
        arithmetic = "exact" if is_exact(arr) else "float"
    if arithmetic == "exact":
        rows = []
        for row in arr:
            fr = [Fraction(v) for v in row]
            den = math.lcm(*(f.denominator for f in fr))
            rows.append([int(f * den) for f in fr])
        return _bareiss_rank(rows)
    s = np.linalg.svd(to_float(arr), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > FLOAT_RANK_RTOL * s[0]))


def _support(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if is_exact(arr):
        return np.vectorize(lambda v: v != 0, otypes=[bool])(arr)
    return to_float(arr) > 0


def maximal_rectangles(support: np.ndarray) -> list:
    """All inclusion-maximal all-ones combinatorial rectangles, as (row_mask, col_mask)."""
    n, m = support.shape
    row_sets = []
    for i in range(n):
        mask = 0
        for j in range(m):
            if support[i, j]:
                mask |= 1 << j
        row_sets.append(mask)
    closed = {c for c in row_sets if c}
    frontier = set(closed)
    while frontier:
        new = set()
        for a in frontier:
            for b in closed:
                c = a & b
                if c and c not in closed:
                    new.add(c)
        closed |= new
        frontier = new
    rects = []
    for cols in closed:
        rows = 0
        for i, rs in enumerate(row_sets):
            if rs & cols == cols:
                rows |= 1 << i
        rects.append((rows, cols))
    return sorted(rects)


def rectangle_cover_lower_bound(matrix, max_entries: int = 24) -> int:
    """Minimum number of all-positive combinatorial rectangles covering the support.

    Exact branch and bound over maximal rectangles. Refuses supports with more
    than ``max_entries`` nonzero cells.
    """
    support = _support(matrix)
    cells = [tuple(c) for c in np.argwhere(support)]
    if len(cells) > max_entries:
        raise TooLarge(f"support has {len(cells)} nonzero entries (> {max_entries})")
    if not cells:
        return 0
    cell_index = {c: k for k, c in enumerate(cells)}
    rect_masks = []
    for rows, cols in maximal_rectangles(support):
        mask = 0
        for (i, j), k in cell_index.items():
            if rows >> i & 1 and cols >> j & 1:
                mask |= 1 << k
        rect_masks.append(mask)
    n_cells = len(cells)
    rects_of_cell = [[q for q, rm in enumerate(rect_masks) if rm >> k & 1] for k in range(n_cells)]
    share = [0] * n_cells  # bitmask of cells sharing some rectangle with cell k
    for k in range(n_cells):
        s = 0
        for q in rects_of_cell[k]:
            s |= rect_masks[q]
        share[k] = s

    def independent_bound(uncovered: int) -> int:
        # cells pairwise sharing no rectangle each need their own rectangle
        count, blocked, rest = 0, 0, uncovered
        while rest:
            k = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            if not blocked >> k & 1:
                count += 1
                blocked |= share[k]
        return count

    best = len({i for i, _ in cells})
    best = min(best, len({j for _, j in cells}))

    def search(uncovered: int, depth: int):
        nonlocal best
        if uncovered == 0:
            best = min(best, depth)
            return
        if depth + independent_bound(uncovered) >= best:
            return
        k_best, opts = None, None
        rest = uncovered
        while rest:
            k = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            o = rects_of_cell[k]
            if opts is None or len(o) < len(opts):
                k_best, opts = k, o
        for q in sorted(opts, key=lambda q: -bin(rect_masks[q] & uncovered).count("1")):
            search(uncovered & ~rect_masks[q], depth + 1)

    search((1 << n_cells) - 1, 0)
    return best


# --- upper bounds ---------------------------------------------------------


def trivial_factorization(matrix) -> NNFactorization:
    """One rank-1 term per nonzero row (or column, whichever is fewer); exact."""
    M = to_float(matrix)
    n, m = M.shape
    rows = [i for i in range(n) if np.any(M[i] > 0)]
    cols = [j for j in range(m) if np.any(M[:, j] > 0)]
    if len(rows) <= len(cols):
        xs = np.zeros((len(rows), n))
        for z, i in enumerate(rows):
            xs[z, i] = 1.0
        ys = M[rows, :].copy()
    else:
        ys = np.zeros((len(cols), m))
        for z, j in enumerate(cols):
            ys[z, j] = 1.0
        xs = M[:, cols].T.copy()
    fact = NNFactorization(xs, ys)
    return replace(fact, residual=_rel_residual(M, fact.matrix()))


def _rel_residual(M, approx) -> float:
    nrm = np.linalg.norm(M)
    err = np.linalg.norm(M - approx)
    return float(err / nrm) if nrm > 0 else float(err)


def _restart_rng(seed: int, r: int, restart: int) -> np.random.Generator:
    # independent stream per (seed, r, restart): more restarts only add streams
    return np.random.default_rng([int(seed), int(r), int(restart)])


def _bounded_polish(M, W, H, max_nfev: int = 300):
    """Bounded Gauss-Newton on ``M - W H`` with ``W, H >= 0``.

    First-order updates crawl when the smallest singular direction is tiny;
    this converges in a few dozen steps from a nearby start. Works in place.
    """
    n, m = M.shape
    r = W.shape[1]
    eye_n, eye_m = np.eye(n), np.eye(m)

    def split(t):
        return t[: n * r].reshape(n, r), t[n * r:].reshape(r, m)

    def fun(t):
        Wt, Ht = split(t)
        return (Wt @ Ht - M).ravel()

    def jac(t):
        Wt, Ht = split(t)
        return np.hstack([np.kron(eye_n, Ht.T), np.kron(Wt, eye_m)])

    t0 = np.concatenate([W.ravel(), H.ravel()])
    sol = least_squares(fun, t0, jac=jac, bounds=(0.0, np.inf), method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    Wn, Hn = split(np.maximum(sol.x, 0.0))
    W[...] = Wn
    H[...] = Hn
    return _rel_residual(M, W @ H)


def nmf_upper_bound(matrix, r: int, restarts: int = 32, max_iters: int = 5000,
                    residual_tol: float = 1e-9, seed: int = 0) -> Optional[NNFactorization]:
    """Search for an ``r``-term nonnegative factorization with relative residual ≤ tol.

    Each restart runs multiplicative updates, then, if not yet converged, a
    projected alternating least squares polish (column-wise, HALS). Only when
    no restart converges does a second stage refine every restart with bounded
    Gauss-Newton. Within a stage the successful restart with the smallest
    residual wins (ties: lowest restart index). Returns None if both stages
    fail; None proves nothing about the rank.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    full = to_float(matrix)
    if np.any(full < 0):
        raise NegativeEntry("matrix has a negative entry")
    rows = np.flatnonzero(full.sum(axis=1) > 0)
    cols = np.flatnonzero(full.sum(axis=0) > 0)
    M = np.ascontiguousarray(full[np.ix_(rows, cols)])
    if M.size == 0:
        return None
    n, m = M.shape
    mass = M.sum()
    states = []
    for restart in range(restarts):
        rng = _restart_rng(seed, r, restart)
        W = rng.random((n, r))
        H = rng.random((r, m))
        scale = math.sqrt(mass / (W @ H).sum())
        W *= scale
        H *= scale
        _, res = _kernels.mu_iterations(M, W, H, max_iters, eps=1e-12, tol=residual_tol)
        if res > residual_tol:
            _, res = _kernels.hals_iterations(M, W, H, max_iters, tol=residual_tol)
        states.append((res, restart, W, H))
    best = min((st for st in states if st[0] <= residual_tol), default=None, key=lambda st: st[:2])
    if best is None and max_iters > 0:
        polished = [(_bounded_polish(M, W, H), i, W, H) for _, i, W, H in states]
        best = min((st for st in polished if st[0] <= residual_tol), default=None, key=lambda st: st[:2])
    if best is None:
        return None
    res, _, W, H = best
    xs = np.zeros((r, full.shape[0]))
    ys = np.zeros((r, full.shape[1]))
    xs[:, rows] = W.T
    ys[:, cols] = H
    return NNFactorization(xs, ys, _rel_residual(full, xs.T @ ys))


def nonnegative_rank(matrix, config: Optional[RankConfig] = None) -> RankBounds:
    """Certified interval ``[lower, upper]`` for the nonnegative rank."""
    config = config or RankConfig()
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeMismatch("nonnegative_rank needs a nonempty 2-d matrix")
    if min(arr.flat) < 0:
        raise NegativeEntry("matrix has a negative entry")
    arith = config.arith
    if arith == "auto":
        arith = "exact" if is_exact(arr) else "float"
    notes = []
    lin = linear_rank(arr, arith)
    certs = [("linear_rank", lin)]
    try:
        rect = rectangle_cover_lower_bound(arr, config.exact_lb_max_support)
        certs.append(("rectangle_cover", rect))
    except TooLarge as exc:
        notes.append(f"rectangle cover skipped: {exc}")
    lower = max(v for _, v in certs)

    trivial = trivial_factorization(arr)
    upper, cert = trivial.r, trivial
    if config.restarts == 0:
        notes.append("restarts=0: NMF search disabled, upper bound is the trivial one")
    else:
        for r in range(max(lower, 1), trivial.r):
            fact = nmf_upper_bound(arr, r, config.restarts, config.max_iters,
                                   config.residual_tol, config.seed)
            if fact is not None:
                upper, cert = r, fact
                break
            log.debug("no %d-term factorization found in %d restarts", r, config.restarts)
    return RankBounds(lower, upper, tuple(certs), cert, tuple(notes))


# --- latent-variable form -------------------------------------------------


def factorization_to_latent(fact: NNFactorization, tol: float = 1e-9) -> LatentDecomposition:
    """Rewrite factor pairs as ``P(z), P(x|z), P(y|z)``.

    Requires the factorized matrix to carry total mass 1 (within ``tol``).
    Pairs with a zero-mass side contribute nothing and are dropped; their
    indices are kept in ``dropped``.
    """
    xs, ys = fact.x_factors, fact.y_factors
    qx = xs.sum(axis=1)
    qy = ys.sum(axis=1)
    masses = qx * qy
    total = masses.sum()
    if abs(total - 1) > tol:
        raise NotADistribution(f"factorization has total mass {float(total)!r}, not 1")
    keep = [z for z in range(len(qx)) if qx[z] > 0 and qy[z] > 0]
    dropped = tuple(z for z in range(len(qx)) if z not in keep)
    p = masses[keep]
    p = p / p.sum()
    cond_x = xs[keep] / qx[keep][:, None]
    cond_y = ys[keep] / qy[keep][:, None]
    return LatentDecomposition(p, cond_x, cond_y, dropped)


def latent_to_joint(dec: LatentDecomposition) -> np.ndarray:
    """``Σ_z P(z) P(x|z) P(y|z)`` as a matrix."""
    return (dec.cond_x.T * dec.p_z) @ dec.cond_y


def latent_to_factorization(dec: LatentDecomposition) -> NNFactorization:
    return NNFactorization(dec.cond_x * dec.p_z[:, None], dec.cond_y.copy())
