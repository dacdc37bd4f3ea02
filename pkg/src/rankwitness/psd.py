"""Bounds on positive semidefinite rank and verification of PSD factorizations.

There is no exact PSD-rank solver here. ``psd_search`` is a best-effort local
search that can produce a certificate; when it fails nothing is concluded.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .dist import to_float
from .errors import NegativeEntry, ShapeMismatch
from .nnrank import RankBounds, linear_rank

EIG_TOL = -1e-10


@dataclass(frozen=True, eq=False)
class PsdFactorization:
    """``P[a, b] = trace(E[a] @ F[b])`` with r×r PSD factors."""

    e_factors: np.ndarray  # (rows, r, r)
    f_factors: np.ndarray  # (cols, r, r)

    @property
    def r(self) -> int:
        return self.e_factors.shape[-1]

    def matrix(self) -> np.ndarray:
        return np.einsum("aij,bji->ab", self.e_factors, self.f_factors)

    def to_dict(self) -> dict:
        return {"r": self.r, "E": self.e_factors.tolist(), "F": self.f_factors.tolist()}

    @classmethod
    def from_dict(cls, data) -> "PsdFactorization":
        E = np.asarray(data["E"], dtype=float)
        F = np.asarray(data["F"], dtype=float)
        if E.ndim != 3 or F.ndim != 3:
            raise ShapeMismatch("E and F must be lists of square matrices")
        fact = cls(E, F)
        if "r" in data and int(data["r"]) != fact.r:
            raise ShapeMismatch(f"declared r={data['r']} but factors are {fact.r}x{fact.r}")
        return fact


@dataclass(frozen=True, eq=False)
class PsdRankBounds:
    lower: int
    upper: int
    upper_certificate: Optional[PsdFactorization] = None
    notes: tuple = ()

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "certificate_r": self.upper_certificate.r if self.upper_certificate is not None else None,
            "notes": list(self.notes),
        }


def _is_psd(A: np.ndarray) -> bool:
    if A.shape[0] != A.shape[1]:
        return False
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
        return False
    return bool(np.linalg.eigvalsh(A).min() >= EIG_TOL)


def verify_psd_factorization(matrix, fact: PsdFactorization, tol: float = 1e-8) -> bool:
    P = to_float(matrix)
    E, F = fact.e_factors, fact.f_factors
    if E.ndim != 3 or F.ndim != 3 or E.shape[1:] != F.shape[1:] or E.shape[1] != E.shape[2]:
        raise ShapeMismatch("factors must all be r×r")
    if (E.shape[0], F.shape[0]) != P.shape:
        raise ShapeMismatch(f"{E.shape[0]} E and {F.shape[0]} F factors for a {P.shape} matrix")
    if not all(_is_psd(A) for A in E) or not all(_is_psd(B) for B in F):
        return False
    return bool(np.max(np.abs(fact.matrix() - P)) <= tol)


def _min_k_for_rank(rank: int) -> int:
    # real symmetric k×k matrices span a space of dimension k(k+1)/2
    k = 1
    while k * (k + 1) // 2 < rank:
        k += 1
    return k


def psd_rank_bounds(matrix, nn_bounds: RankBounds,
                    certificate: Optional[PsdFactorization] = None,
                    tol: float = 1e-8) -> PsdRankBounds:
    """Interval for the PSD rank.

    The lower bound is the least k with k(k+1)/2 ≥ linear rank; the upper bound
    is the nonnegative-rank upper bound, tightened by a verified certificate.
    """
    arr = np.asarray(matrix)
    if min(arr.flat) < 0:
        raise NegativeEntry("matrix has a negative entry")
    lin = linear_rank(arr)
    lower = max(_min_k_for_rank(lin), 1)
    upper = nn_bounds.upper
    notes = [f"lower: k(k+1)/2 >= linear rank {lin}", f"upper: nonnegative rank upper bound {upper}"]
    cert = None
    if certificate is not None:
        if verify_psd_factorization(arr, certificate, tol):
            if certificate.r < upper:
                upper = certificate.r
                cert = certificate
                notes.append(f"upper: verified PSD factorization of size {certificate.r}")
        else:
            notes.append("supplied PSD certificate failed verification; ignored")
    return PsdRankBounds(lower, max(upper, lower), cert, tuple(notes))


def _unpack(theta, rows, cols, r):
    k = r * r
    A = theta[: rows * k].reshape(rows, r, r)
    B = theta[rows * k:].reshape(cols, r, r)
    return A, B


def psd_search(matrix, r: int, restarts: int = 20, seed: int = 0, tol: float = 1e-10,
               max_nfev: int = 2000) -> Optional[PsdFactorization]:
    """Local search for ``P[a,b] = ||A_a^T B_b||_F^2`` i.e. ``E_a = A_a A_a^T``, ``F_b = B_b B_b^T``.

    Restarts are tried in order with seeds ``(seed, r, i)``; the first fit with
    max abs error ≤ ``tol`` is returned.
    """
    P = to_float(matrix)
    rows, cols = P.shape

    def resid(theta):
        A, B = _unpack(theta, rows, cols, r)
        return (np.einsum("aki,bkj->abij", A, B) ** 2).sum(axis=(2, 3)).ravel() - P.ravel()

    scale = np.sqrt(np.sqrt(P.mean() / r)) if P.mean() > 0 else 1.0
    for i in range(restarts):
        rng = np.random.default_rng([int(seed), int(r), i])
        theta0 = rng.normal(scale=scale, size=(rows + cols) * r * r)
        sol = least_squares(resid, theta0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=max_nfev)
        if np.max(np.abs(sol.fun)) <= tol:
            A, B = _unpack(sol.x, rows, cols, r)
            E = np.einsum("aik,ajk->aij", A, A)
            F = np.einsum("bik,bjk->bij", B, B)
            return PsdFactorization(E, F)
    return None
