"""Dense numerical kernels shared by every other module.

Vectors and matrices are plain float64 numpy arrays.  This module owns
the single-row operations (residual, relaxed Kaczmarz step, orthogonal
and affine projection) and the dense decompositions (eigenvalues,
row-space basis, minimal-norm least squares) that the operator analysis
builds on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DimensionMismatch",
    "NotSquare",
    "ConvergenceFailure",
    "ZeroRow",
    "DEFAULT_RANK_TOL",
    "RowEquation",
    "apply_row",
    "residual",
    "kaczmarz_update",
    "linear_projection",
    "affine_projection",
    "eigenvalues",
    "spectral_radius",
    "row_space_basis",
    "pseudo_solve",
]

# singular values below DEFAULT_RANK_TOL * sigma_max count as zero
DEFAULT_RANK_TOL = 1e-10


class DimensionMismatch(ValueError):
    pass


class NotSquare(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    """The iterative eigenvalue reduction failed to converge."""


class ZeroRow(ValueError):
    """A coefficient row is identically zero; the update would divide by it."""


@dataclass(frozen=True, eq=False)
class RowEquation:
    """One linear equation ``a . x = b`` with its squared row norm cached."""

    a: np.ndarray
    b: float
    norm_sq: float = field(init=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise DimensionMismatch(f"coefficient row must be 1-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or not np.isfinite(self.b):
            raise ValueError("equation entries must be finite")
        nsq = float(a @ a)
        if nsq == 0.0:
            raise ZeroRow("coefficient row is identically zero")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "norm_sq", nsq)

    @property
    def dimension(self) -> int:
        return self.a.size


def _check_operand(eq: RowEquation, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != eq.a.shape:
        raise DimensionMismatch(f"operand shape {z.shape} vs row shape {eq.a.shape}")
    return z


def apply_row(eq: RowEquation, z) -> float:
    """Evaluate the row functional ``a . z``."""
    return float(eq.a @ _check_operand(eq, z))


def residual(eq: RowEquation, z) -> float:
    """Defect ``b - a . z`` of the estimate ``z`` in this equation."""
    return eq.b - apply_row(eq, z)


def kaczmarz_update(eq: RowEquation, z, omega: float) -> np.ndarray:
    """Relaxed Kaczmarz step toward the hyperplane ``a . x = b``.

    Returns ``z + omega * (b - a.z) / |a|^2 * a``.  With ``omega == 1``
    the output satisfies the equation exactly.
    """
    if not omega > 0.0:
        raise ValueError(f"relaxation parameter must be positive, got {omega}")
    z = _check_operand(eq, z)
    return z + (omega * (eq.b - float(eq.a @ z)) / eq.norm_sq) * eq.a


def linear_projection(eq: RowEquation, z) -> np.ndarray:
    """Orthogonal projection of ``z`` onto the nullspace of the row functional."""
    z = _check_operand(eq, z)
    return z - (float(eq.a @ z) / eq.norm_sq) * eq.a


def affine_projection(eq: RowEquation, z) -> np.ndarray:
    """Orthogonal projection of ``z`` onto the solution manifold ``a . x = b``."""
    return kaczmarz_update(eq, z, 1.0)


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSquare(f"matrix of shape {M.shape} is not square")
    return M


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a square real matrix, as complex numbers."""
    M = _square(M)
    try:
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc


def spectral_radius(M) -> float:
    """Largest eigenvalue magnitude."""
    return float(np.max(np.abs(eigenvalues(M))))


def row_space_basis(A, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal columns spanning the row space of ``A``.

    The numerical rank counts singular values above ``tol * sigma_max``.
    Returns a ``d x rank`` matrix (possibly zero columns).
    """
    if not tol > 0.0:
        raise ValueError("rank tolerance must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((A.shape[1], 0))
    rank = int(np.sum(s > tol * s[0]))
    return vt[:rank].T.copy()


def pseudo_solve(M, rhs, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Minimal-norm least-squares solution of ``M x = rhs``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (M.shape[0],):
        raise DimensionMismatch(f"rhs shape {rhs.shape} vs matrix shape {M.shape}")
    x, *_ = np.linalg.lstsq(M, rhs, rcond=tol)
    return x
