"""Independent reference solutions and closed forms.

Everything here is a cross-check for the solver: the minimal-norm
solution of a consistent system, the weighted least-squares point that
the relaxed sweep approaches as the relaxation parameter goes to zero, a
brute-force sweep built from explicit affine maps, and closed forms for
the two-projection demo (projection onto the x-axis and onto a line at
angle alpha, either sequentially or simultaneously-and-averaged).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_RANK_TOL,
    pseudo_solve,
    row_space_basis,
)
from .solver import TreeSystem, stacked_system
from .sor import build_sor, fixed_point
from .topology import TreeTopology, leaf_paths, leaf_weights, node_cumulative_weight

__all__ = [
    "Inconsistent",
    "VariantUnsupported",
    "TooLarge",
    "WeightedLsProblem",
    "OmegaLimitReport",
    "TwoLineConfig",
    "min_norm_solution",
    "weighted_ls_solution",
    "verify_omega_limit",
    "two_line_matrix",
    "two_line_eigenvalues",
    "two_line_optima",
    "two_line_as_tree",
    "brute_force_iterate",
]

VARIANT_STANDARD = "standard"
VARIANT_AVERAGED = "averaged"

# brute-force sweeps materialize every update as a dense affine map
BRUTE_FORCE_MAX_ROWS = 32

CONSISTENCY_TOL = 1e-9


class Inconsistent(ValueError):
    """The system admits no exact solution."""


class VariantUnsupported(ValueError):
    pass


class TooLarge(ValueError):
    pass


def min_norm_solution(A, b, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Minimal-norm exact solution of a consistent system ``A x = b``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    x = pseudo_solve(A, b, tol)
    gap = float(np.linalg.norm(A @ x - b))
    if gap > CONSISTENCY_TOL * max(1.0, float(np.linalg.norm(b))):
        raise Inconsistent(f"least-squares residual {gap} exceeds consistency tolerance")
    return x


@dataclass(frozen=True, eq=False)
class WeightedLsProblem:
    """Data of the weighted least-squares functional the sweep minimizes.

    The functional is ``sum_v (V_v / |a_v|^2) (b_v - a_v . z)^2`` where
    ``V_v`` is the total root-relative weight of the leaves at or below
    the node owning row ``v``.  ``row_norm_sq`` and ``row_weight`` hold
    those diagonals row by row, in ascending node order.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    row_norm_sq: np.ndarray
    row_weight: np.ndarray

    def __post_init__(self):
        if np.any(self.row_norm_sq <= 0.0):
            raise ValueError("row norms must be positive")
        if np.any(self.row_weight <= 0.0) or np.any(self.row_weight > 1.0 + 1e-12):
            raise ValueError("cumulative node weights must lie in (0, 1]")

    @classmethod
    def from_system(cls, system: TreeSystem) -> "WeightedLsProblem":
        A, b, owners = stacked_system(system)
        cumulative = {
            v: node_cumulative_weight(system.tree, v) for v in system.tree.children
        }
        return cls(
            matrix=A,
            rhs=b,
            row_norm_sq=np.einsum("ij,ij->i", A, A),
            row_weight=np.array([cumulative[v] for v in owners]),
        )


def weighted_ls_solution(problem: WeightedLsProblem, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Row-space minimizer of the weighted least-squares functional.

    The normal equations are solved in row-space coordinates, so the
    result lies in the row space by construction.
    """
    A, b = problem.matrix, problem.rhs
    scale = problem.row_weight / problem.row_norm_sq
    basis = row_space_basis(A, tol)
    if basis.shape[1] == 0:
        return np.zeros(A.shape[1])
    normal = A.T @ (scale[:, None] * A)
    coords = np.linalg.solve(basis.T @ normal @ basis, basis.T @ (A.T @ (scale * b)))
    return basis @ coords


@dataclass(frozen=True)
class OmegaLimitReport:
    """How fast the sweep's fixed point approaches the weighted LS point.

    ``slope`` is the fitted log-log order of the deviation in the
    relaxation parameter; first order (slope >= 0.9) is the expected
    behavior for inconsistent systems.  For consistent systems the
    deviations are negligible at every relaxation value and no slope is
    fitted.
    """

    omegas: tuple[float, ...]
    deviations: tuple[float, ...]
    weighted_ls: np.ndarray
    slope: float
    negligible: bool

    NEGLIGIBLE_TOL = 1e-9

    @property
    def linear_order(self) -> bool:
        return not math.isnan(self.slope) and self.slope >= 0.9

    @property
    def passes(self) -> bool:
        return self.negligible or self.linear_order


def verify_omega_limit(system: TreeSystem, omega_list) -> OmegaLimitReport:
    """Measure ``|x(omega) - x_LS|`` over a decreasing relaxation list."""
    omegas = [float(w) for w in omega_list]
    if not omegas or any(not 0.0 < w < 2.0 for w in omegas):
        raise ValueError("relaxation values must lie in (0, 2)")
    if any(b >= a for a, b in zip(omegas, omegas[1:])) and len(omegas) > 1:
        raise ValueError("relaxation values must be strictly decreasing")
    target = weighted_ls_solution(WeightedLsProblem.from_system(system))
    deviations = [
        float(np.linalg.norm(fixed_point(build_sor(system, w)) - target))
        for w in omegas
    ]
    negligible = max(deviations) <= OmegaLimitReport.NEGLIGIBLE_TOL
    if negligible or min(deviations) <= 0.0 or len(deviations) < 2:
        slope = float("nan")
    else:
        slope = float(np.polyfit(np.log(omegas), np.log(deviations), 1)[0])
    return OmegaLimitReport(
        omegas=tuple(omegas),
        deviations=tuple(deviations),
        weighted_ls=target,
        slope=slope,
        negligible=negligible,
    )


@dataclass(frozen=True)
class TwoLineConfig:
    """Two unit rows in the plane: (-sin a, cos a) and (0, 1).

    Geometrically the updates project onto the x-axis and onto the line
    at angle ``alpha`` with it.  ``standard`` applies the projections
    sequentially; ``averaged`` projects the same point onto both lines
    and averages the results.
    """

    alpha: float
    variant: str = VARIANT_STANDARD

    def __post_init__(self):
        if not 0.0 < self.alpha <= math.pi / 2:
            raise ValueError(f"alpha must lie in (0, pi/2], got {self.alpha}")
        if self.variant not in (VARIANT_STANDARD, VARIANT_AVERAGED):
            raise ValueError(f"unknown variant {self.variant!r}")


def two_line_matrix(cfg: TwoLineConfig, omega: float) -> np.ndarray:
    """Closed-form iteration matrix of the two-line sweep."""
    s, c = math.sin(cfg.alpha), math.cos(cfg.alpha)
    if cfg.variant == VARIANT_STANDARD:
        return np.array(
            [
                [1.0 - omega * s * s, omega * s * c],
                [omega * (1.0 - omega) * s * c, (1.0 - omega) * (1.0 - omega * c * c)],
            ]
        )
    half = 0.5 * omega
    return np.array(
        [
            [1.0 - half * s * s, half * s * c],
            [half * s * c, half * s * s - omega + 1.0],
        ]
    )


def two_line_eigenvalues(cfg: TwoLineConfig, omega: float) -> np.ndarray:
    """Closed-form eigenvalues of the two-line iteration matrix.

    The standard pair turns complex once ``(omega - 2)^2`` drops below
    ``omega^2 sin^2 alpha``; after that both magnitudes equal
    ``|omega - 1|``.  The averaged pair stays real and varies linearly
    with ``omega``.
    """
    if not omega > 0.0:
        raise ValueError("relaxation parameter must be positive")
    s, c = math.sin(cfg.alpha), math.cos(cfg.alpha)
    if cfg.variant == VARIANT_AVERAGED:
        half = 0.5 * omega
        return np.array(
            [1.0 + half * (c - 1.0), 1.0 + half * (-c - 1.0)], dtype=complex
        )
    base = 0.5 * omega * omega * c * c + (1.0 - omega)
    disc = (omega - 2.0) ** 2 - omega * omega * s * s
    term = 0.5 * omega * c * np.sqrt(complex(disc))
    return np.array([base + term, base - term])


def two_line_optima(cfg: TwoLineConfig) -> tuple[float, float, float]:
    """Closed-form ``(omega_opt, rho_opt, omega_limit)`` for either variant.

    Sequential projections: the minimum sits where the eigenvalue pair
    turns complex, at ``2 / (1 + sin alpha)``, with radius
    ``omega_opt - 1``; the convergence window is the classical (0, 2).
    Averaged projections: the minimum is always at 2 with radius
    ``cos alpha`` and the window extends to ``4 / (1 + cos alpha)``.
    """
    s, c = math.sin(cfg.alpha), math.cos(cfg.alpha)
    if cfg.variant == VARIANT_STANDARD:
        omega_opt = 2.0 / (1.0 + s)
        return omega_opt, omega_opt - 1.0, 2.0
    return 2.0, c, 4.0 / (1.0 + c)


def two_line_as_tree(cfg: TwoLineConfig) -> TreeSystem:
    """Three-node tree reproducing the averaged variant on a plane.

    The averaged update is not a root-then-branch composition in the
    plane itself, so the two rows are embedded into three dimensions with
    an inert root equation on the extra axis.  Starting anywhere in the
    plane ``x3 = 0``, one tree sweep acts exactly as the averaged map;
    the top-left 2x2 block of the assembled iteration matrix equals the
    closed form from :func:`two_line_matrix`.  The closed form remains
    the authority for spectral-radius questions, because the embedding
    axis contributes its own eigenvalue ``1 - omega``.
    """
    if cfg.variant != VARIANT_AVERAGED:
        raise VariantUnsupported("only the averaged variant has a tree realization")
    s, c = math.sin(cfg.alpha), math.cos(cfg.alpha)
    tree = TreeTopology.from_edges(1, [(1, 2), (1, 3)])
    return TreeSystem.from_rows(
        tree,
        rows={1: [[0.0, 0.0, 1.0]], 2: [[-s, c, 0.0]], 3: [[0.0, 1.0, 0.0]]},
        rhs={1: [0.0], 2: [0.0], 3: [0.0]},
    )


def brute_force_iterate(system: TreeSystem, omega: float, x) -> np.ndarray:
    """One full sweep computed from explicit dense affine maps.

    Every single-row update is materialized as a d x d matrix plus offset,
    the maps are composed along each root-to-leaf path, and the per-leaf
    results are combined with the leaf weights.  Deliberately a different
    code path from both the recursive solver and the triangular-solve
    operator assembly; small systems only.
    """
    if system.total_rows > BRUTE_FORCE_MAX_ROWS:
        raise TooLarge(
            f"system has {system.total_rows} rows, brute force allows {BRUTE_FORCE_MAX_ROWS}"
        )
    if not omega > 0.0:
        raise ValueError("relaxation parameter must be positive")
    x = np.asarray(x, dtype=float)
    d = system.dimension
    weights = leaf_weights(system.tree)
    result = np.zeros(d)
    for path in leaf_paths(system.tree):
        matrix = np.eye(d)
        offset = np.zeros(d)
        for v in path.nodes:
            for eq in system.equations[v]:
                step = np.eye(d) - (omega / eq.norm_sq) * np.outer(eq.a, eq.a)
                shift = (omega * eq.b / eq.norm_sq) * eq.a
                matrix = step @ matrix
                offset = step @ offset + shift
        result = result + weights[path.leaf] * (matrix @ x + offset)
    return result
