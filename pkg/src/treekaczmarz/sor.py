"""Exact operator form of one full tree sweep.

Along each root-to-leaf path the dispersion pass is an ordinary
sequential Kaczmarz sweep, so it has the classical successive
over-relaxation closed form: with the path rows stacked as S, their Gram
diagonal D and strictly lower Gram triangle L,

    x_leaf = (I - omega S^T (D + omega L)^{-1} S) x + omega S^T (D + omega L)^{-1} b.

Pooling takes the convex combination of the per-leaf affine maps, giving
one iteration matrix B and offset vector for the whole sweep.  Restricted
to the row space of the system, B has spectral radius below one for any
relaxation parameter in (0, 2), and that radius is what the relaxation
sweep minimizes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from .linalg import DimensionMismatch, row_space_basis, spectral_radius
from .solver import TreeSystem, stacked_system
from .topology import leaf_paths, leaf_weights

__all__ = [
    "SingularDiagonal",
    "SpectralRadiusAtLeastOne",
    "LeafOperators",
    "SorOperators",
    "OmegaSweep",
    "build_leaf_operators",
    "build_sor",
    "iterate_via_sor",
    "restrict",
    "fixed_point",
    "omega_sweep",
    "sweep_spectral_radius",
]

DEFAULT_OMEGA_MAX = 4.0
DEFAULT_GRID_STEP = 0.005
# refinement resolutions for the optimum and the convergence boundary
OPT_RESOLUTION = 1e-8
LIMIT_RESOLUTION = 1e-6


class SingularDiagonal(ArithmeticError):
    """A stacked path produced a zero Gram diagonal entry (zero row)."""


class SpectralRadiusAtLeastOne(ValueError):
    """No fixed point: the restricted iteration matrix does not contract."""


@dataclass(frozen=True, eq=False)
class LeafOperators:
    """Stacked quantities for the path from the root to one leaf.

    rows    stacked coefficient rows in update order (m x d)
    rhs     matching right-hand sides
    diag    squared row norms (the Gram diagonal)
    lower   strictly lower triangle of the Gram matrix
    """

    leaf: int
    rows: np.ndarray
    rhs: np.ndarray
    diag: np.ndarray
    lower: np.ndarray


def build_leaf_operators(system: TreeSystem, leaf: int) -> LeafOperators:
    """Stack the equations met on the way from the root to ``leaf``."""
    path = next(p for p in leaf_paths(system.tree) if p.leaf == leaf)
    rows = np.vstack([eq.a for v in path.nodes for eq in system.equations[v]])
    rhs = np.array([eq.b for v in path.nodes for eq in system.equations[v]])
    gram = rows @ rows.T
    diag = gram.diagonal().copy()
    if np.any(diag <= 0.0):
        raise SingularDiagonal(f"zero row on the path to leaf {leaf}")
    return LeafOperators(
        leaf=leaf, rows=rows, rhs=rhs, diag=diag, lower=np.tril(gram, -1)
    )


def _leaf_affine(ops: LeafOperators, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Iteration matrix and offset for one path, via triangular solves."""
    lhs = np.diag(ops.diag) + omega * ops.lower
    solved_rows = solve_triangular(lhs, ops.rows, lower=True)
    solved_rhs = solve_triangular(lhs, ops.rhs, lower=True)
    d = ops.rows.shape[1]
    matrix = np.eye(d) - omega * ops.rows.T @ solved_rows
    offset = omega * ops.rows.T @ solved_rhs
    return matrix, offset


@dataclass(frozen=True, eq=False)
class SorOperators:
    """One sweep written as the affine map ``x -> B x + offset``.

    ``basis`` holds orthonormal columns spanning the row space of the
    system; ``restricted_matrix`` is B expressed in those coordinates and
    ``restricted_radius`` its spectral radius.  B maps the row space into
    itself and the offset lies inside it, so the restriction captures all
    of the dynamics that matter.
    """

    omega: float
    leaf_matrices: dict[int, np.ndarray]
    leaf_offsets: dict[int, np.ndarray]
    iteration_matrix: np.ndarray
    offset: np.ndarray
    basis: np.ndarray
    restricted_matrix: np.ndarray
    restricted_radius: float


def build_sor(system: TreeSystem, omega: float) -> SorOperators:
    """Assemble the per-leaf operators and their weighted combination."""
    if not omega > 0.0:
        raise ValueError(f"relaxation parameter must be positive, got {omega}")
    weights = leaf_weights(system.tree)
    leaf_matrices: dict[int, np.ndarray] = {}
    leaf_offsets: dict[int, np.ndarray] = {}
    matrix = np.zeros((system.dimension, system.dimension))
    offset = np.zeros(system.dimension)
    for leaf in system.tree.leaves:
        ops = build_leaf_operators(system, leaf)
        m, t = _leaf_affine(ops, omega)
        leaf_matrices[leaf] = m
        leaf_offsets[leaf] = t
        matrix = matrix + weights[leaf] * m
        offset = offset + weights[leaf] * t
    A, _, _ = stacked_system(system)
    basis = row_space_basis(A)
    restricted = basis.T @ matrix @ basis
    radius = spectral_radius(restricted) if restricted.size else 0.0
    return SorOperators(
        omega=omega,
        leaf_matrices=leaf_matrices,
        leaf_offsets=leaf_offsets,
        iteration_matrix=matrix,
        offset=offset,
        basis=basis,
        restricted_matrix=restricted,
        restricted_radius=radius,
    )


def iterate_via_sor(ops: SorOperators, x) -> np.ndarray:
    """Apply one sweep through the assembled operator form."""
    x = np.asarray(x, dtype=float)
    if x.shape != ops.offset.shape:
        raise DimensionMismatch(f"state shape {x.shape} vs {ops.offset.shape}")
    return ops.iteration_matrix @ x + ops.offset


def restrict(ops: SorOperators) -> tuple[np.ndarray, float]:
    """Row-space restriction of the iteration matrix and its spectral radius."""
    return ops.restricted_matrix, ops.restricted_radius


def fixed_point(ops: SorOperators) -> np.ndarray:
    """The unique row-space fixed point of the sweep.

    Solves ``(I - B) x = offset`` in row-space coordinates and checks the
    result against the operator form before returning it.
    """
    if not ops.restricted_radius < 1.0:
        raise SpectralRadiusAtLeastOne(
            f"restricted spectral radius {ops.restricted_radius} is not below 1"
        )
    k = ops.basis.shape[1]
    if k == 0:
        return np.zeros_like(ops.offset)
    coords = np.linalg.solve(
        np.eye(k) - ops.restricted_matrix, ops.basis.T @ ops.offset
    )
    x = ops.basis @ coords
    defect = float(
        np.linalg.norm(ops.iteration_matrix @ x + ops.offset - x) / ops.omega
    )
    if defect > 1e-9 * max(1.0, float(np.linalg.norm(x))):
        raise ArithmeticError(f"fixed point residual {defect} is too large")
    return x


@dataclass(frozen=True)
class OmegaSweep:
    """Spectral radius of the restricted sweep as a function of relaxation.

    ``omega_opt`` / ``rho_opt`` locate the minimum after local refinement
    of the best grid bracket.  ``omega_limit`` is the first crossing of
    radius 1 beyond the optimum; when the radius stays below 1 up to the
    searched maximum, the limit is reported as that maximum and
    ``limit_open`` is set.  Grid points past the first crossing where the
    radius dips below 1 again are listed in ``reentry``.
    """

    omegas: np.ndarray
    radii: np.ndarray
    omega_opt: float
    rho_opt: float
    omega_limit: float
    limit_open: bool
    reentry: tuple[float, ...] = ()


def _golden_minimize(f: Callable[[float], float], lo: float, hi: float, tol: float):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    mid = 0.5 * (a + b)
    return mid, f(mid)


def sweep_spectral_radius(
    rho_fn: Callable[[float], float],
    omega_max: float = DEFAULT_OMEGA_MAX,
    grid_step: float = DEFAULT_GRID_STEP,
) -> OmegaSweep:
    """Grid scan of ``rho_fn`` over (0, omega_max] with local refinement.

    The radius curve can have kinks where eigenvalues collide, so a dense
    grid locates the global minimum before golden-section refinement; the
    convergence boundary is then bisected between the bracketing grid
    points.
    """
    if not grid_step > 0.0:
        raise ValueError("grid_step must be positive")
    n = int(round(omega_max / grid_step))
    if n < 2:
        raise ValueError("grid too coarse for the requested range")
    omegas = grid_step * np.arange(1, n + 1)
    radii = np.array([rho_fn(w) for w in omegas])

    best = int(np.argmin(radii))
    lo = omegas[best - 1] if best > 0 else 0.5 * omegas[0]
    hi = omegas[best + 1] if best + 1 < n else omegas[best]
    if hi > lo:
        omega_opt, rho_opt = _golden_minimize(rho_fn, lo, hi, OPT_RESOLUTION)
    else:
        omega_opt, rho_opt = float(omegas[best]), float(radii[best])
    if radii[best] < rho_opt:
        omega_opt, rho_opt = float(omegas[best]), float(radii[best])

    omega_limit = float(omega_max)
    limit_open = bool(radii[-1] < 1.0)
    reentry: list[float] = []
    crossing = None
    for k in range(1, n):
        if omegas[k] <= omega_opt:
            continue
        if crossing is None and radii[k] >= 1.0 and radii[k - 1] < 1.0:
            crossing = (float(omegas[k - 1]), float(omegas[k]))
        elif crossing is not None and radii[k] < 1.0:
            reentry.append(float(omegas[k]))
    if crossing is not None:
        lo, hi = crossing
        while hi - lo > LIMIT_RESOLUTION:
            mid = 0.5 * (lo + hi)
            if rho_fn(mid) < 1.0:
                lo = mid
            else:
                hi = mid
        omega_limit = 0.5 * (lo + hi)
        limit_open = False
    return OmegaSweep(
        omegas=omegas,
        radii=radii,
        omega_opt=float(omega_opt),
        rho_opt=float(rho_opt),
        omega_limit=omega_limit,
        limit_open=limit_open,
        reentry=tuple(reentry),
    )


def omega_sweep(
    system: TreeSystem,
    omega_max: float = DEFAULT_OMEGA_MAX,
    grid_step: float = DEFAULT_GRID_STEP,
) -> OmegaSweep:
    """Relaxation sweep for a tree system.

    The default search range stops at 4: empirically the convergence
    window of the pooled sweep never extends past that point.  Raising
    ``omega_max`` is allowed but emits a warning.
    """
    if omega_max > DEFAULT_OMEGA_MAX:
        warnings.warn(
            f"searching relaxation parameters up to {omega_max}; the convergence "
            "window has never been observed beyond 4",
            stacklevel=2,
        )
    cache = [build_leaf_operators(system, leaf) for leaf in system.tree.leaves]
    weights = leaf_weights(system.tree)
    A, _, _ = stacked_system(system)
    basis = row_space_basis(A)
    d = system.dimension

    def rho(omega: float) -> float:
        matrix = np.zeros((d, d))
        for ops in cache:
            m, _ = _leaf_affine(ops, omega)
            matrix += weights[ops.leaf] * m
        restricted = basis.T @ matrix @ basis
        return spectral_radius(restricted) if restricted.size else 0.0

    return sweep_spectral_radius(rho, omega_max=omega_max, grid_step=grid_step)
