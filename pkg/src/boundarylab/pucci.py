"""Pucci extremal operators on small symmetric matrices.

M-(M) = inf over lambda I <= A <= Lambda I of Tr(A M), attained at
A = lambda P+ + Lambda P- with P+- the spectral projections of M; hence

    M-(M) = lambda * sum(eig+) + Lambda * sum(eig-),
    M+(M) = Lambda * sum(eig+) + lambda * sum(eig-).

Eigenvalues come from a cyclic Jacobi sweep: the matrices are tiny
(n <= 3), so determinism and simplicity beat speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["EllipticityPair", "sym_eigvals", "pucci_minus", "pucci_plus"]


@dataclass(frozen=True)
class EllipticityPair:
    """Ellipticity constants 0 < lam <= Lam defining the operator class."""

    lam: float
    Lam: float

    def __post_init__(self):
        if not (0 < self.lam <= self.Lam):
            raise DomainError(f"need 0 < lambda <= Lambda, got ({self.lam}, {self.Lam})")

    @property
    def is_laplacian(self) -> bool:
        return self.lam == self.Lam


def sym_eigvals(M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 64) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Iterates plane rotations until the off-diagonal Frobenius norm falls
    below tol * ||M||; always converges for symmetric input.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise DomainError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    if n == 1:
        return A.ravel().copy()
    scale = max(np.abs(A).max(), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(sum(A[i, j] ** 2 for i in range(n) for j in range(i + 1, n)))
        if off <= tol * scale:
            break
        for i in range(n):
            for j in range(i + 1, n):
                if abs(A[i, j]) <= 1e-300:
                    continue
                theta = 0.5 * np.arctan2(2.0 * A[i, j], A[j, j] - A[i, i])
                c, s = np.cos(theta), np.sin(theta)
                R = np.eye(n)
                R[i, i] = c
                R[j, j] = c
                R[i, j] = s
                R[j, i] = -s
                A = R.T @ A @ R
    return np.sort(np.diag(A))


def _split(M) -> tuple[float, float]:
    ev = sym_eigvals(np.asarray(M, dtype=float))
    return float(ev[ev > 0].sum()), float(ev[ev < 0].sum())


def pucci_minus(E: EllipticityPair, M) -> float:
    """inf over admissible A of Tr(A M)."""
    pos, neg = _split(M)
    return E.lam * pos + E.Lam * neg


def pucci_plus(E: EllipticityPair, M) -> float:
    """sup over admissible A of Tr(A M)."""
    pos, neg = _split(M)
    return E.Lam * pos + E.lam * neg
