"""Additive transmission noise and the resulting stability bound.

Errors attach to messages: a node perturbs the estimate it sends to its
children during dispersion, and the value it sends to its parent during
pooling.  Leaves transmit nothing downward and the root transmits
nothing upward, so with the depth counted in edges a single noisy
iteration moves the root estimate by at most ``2 * depth`` times the
largest perturbation.  Under persistent noise bounded by M on a system
with a unique solution the iterates stay within
``2 K M / (1 - rho)`` of the noise-free limit, with ``K = 2 * depth``
and ``rho`` the restricted spectral radius of the sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import kaczmarz_update
from .solver import SolveResult, SolverConfig, TreeSystem, iterate
from .sor import SpectralRadiusAtLeastOne, build_sor, fixed_point
from .topology import preorder, tree_depth

__all__ = [
    "ErrorModel",
    "StabilityReport",
    "perturbed_iterate",
    "solve_with_errors",
    "single_iteration_error_bound",
]

DIST_UNIFORM_BALL = "uniform_ball"
DIST_FIXED_VECTOR = "fixed_vector"
DIST_PER_NODE_TABLE = "per_node_table"

STAGE_DISPERSION = "dispersion"
STAGE_POOLING = "pooling"
STAGE_BOTH = "both"

# share of the run used to estimate the limiting deviation
LIMSUP_WINDOW = 0.25


@dataclass(frozen=True, eq=False)
class ErrorModel:
    """Seeded additive perturbations with norms bounded by ``magnitude_bound``.

    uniform_ball    fresh draw from the ball of radius M per transmission
    fixed_vector    the same ``vector`` added to every transmission
    per_node_table  per-node vectors from ``table``; absent nodes get zero
    """

    magnitude_bound: float
    distribution: str = DIST_UNIFORM_BALL
    stages: str = STAGE_BOTH
    seed: int = 0
    vector: np.ndarray | None = None
    table: dict[int, np.ndarray] | None = None

    def __post_init__(self):
        if self.magnitude_bound < 0.0:
            raise ValueError("magnitude bound must be nonnegative")
        if self.distribution not in (
            DIST_UNIFORM_BALL,
            DIST_FIXED_VECTOR,
            DIST_PER_NODE_TABLE,
        ):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.stages not in (STAGE_DISPERSION, STAGE_POOLING, STAGE_BOTH):
            raise ValueError(f"unknown stages {self.stages!r}")
        slack = self.magnitude_bound * (1.0 + 1e-12)
        if self.distribution == DIST_FIXED_VECTOR:
            if self.vector is None:
                raise ValueError("fixed_vector distribution needs a vector")
            vec = np.asarray(self.vector, dtype=float)
            if np.linalg.norm(vec) > slack:
                raise ValueError("fixed vector exceeds the magnitude bound")
            object.__setattr__(self, "vector", vec)
        if self.distribution == DIST_PER_NODE_TABLE:
            if self.table is None:
                raise ValueError("per_node_table distribution needs a table")
            table = {v: np.asarray(e, dtype=float) for v, e in self.table.items()}
            for v, e in table.items():
                if np.linalg.norm(e) > slack:
                    raise ValueError(f"table entry for node {v} exceeds the bound")
            object.__setattr__(self, "table", table)

    def perturbs_dispersion(self) -> bool:
        return self.stages in (STAGE_DISPERSION, STAGE_BOTH)

    def perturbs_pooling(self) -> bool:
        return self.stages in (STAGE_POOLING, STAGE_BOTH)

    def draw(self, rng: np.random.Generator, node: int, dimension: int) -> np.ndarray:
        if self.distribution == DIST_UNIFORM_BALL:
            direction = rng.standard_normal(dimension)
            norm = float(np.linalg.norm(direction))
            if norm == 0.0:
                return np.zeros(dimension)
            radius = self.magnitude_bound * rng.random() ** (1.0 / dimension)
            return (radius / norm) * direction
        if self.distribution == DIST_FIXED_VECTOR:
            return self.vector
        entry = self.table.get(node)
        return np.zeros(dimension) if entry is None else entry


def perturbed_iterate(
    system: TreeSystem,
    omega: float,
    x,
    model: ErrorModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """One full sweep with transmission noise.

    Draw order is fixed: dispersion errors for non-leaf nodes in
    depth-first order, then pooling errors for non-root nodes in reverse
    depth-first order, so a seeded run replays exactly.
    """
    root_value, _, _ = _perturbed_pass(system, omega, x, model, rng)
    return root_value


def _perturbed_pass(system, omega, x, model, rng):
    tree = system.tree
    d = system.dimension
    x = np.asarray(x, dtype=float)
    order = preorder(tree)

    estimates: dict[int, np.ndarray] = {}
    sent_down: dict[int, np.ndarray] = {}
    for v in order:
        z = x if v == tree.root else sent_down[tree.parent[v]]
        for eq in system.equations[v]:
            z = kaczmarz_update(eq, z, omega)
        estimates[v] = z
        if tree.children[v]:
            noise = (
                model.draw(rng, v, d) if model.perturbs_dispersion() else None
            )
            sent_down[v] = z if noise is None else z + noise

    pooled: dict[int, np.ndarray] = {}
    sent_up: dict[int, np.ndarray] = {}
    for v in reversed(order):
        if tree.is_leaf(v):
            y = estimates[v]
        else:
            y = None
            for u in tree.children[v]:
                term = tree.edge_weight[(v, u)] * sent_up[u]
                y = term if y is None else y + term
        pooled[v] = y
        if v != tree.root:
            noise = model.draw(rng, v, d) if model.perturbs_pooling() else None
            sent_up[v] = y if noise is None else y + noise
    return pooled[tree.root], estimates, pooled


@dataclass(frozen=True)
class StabilityReport:
    """Measured noise response versus the stability bound.

    ``deviations`` tracks the distance of each noisy iterate from the
    noise-free fixed point; its tail feeds ``limsup_estimate``.  ``drift``
    tracks the distance from the clean run started at the same point,
    which the bound dominates at every single iteration (the fixed-point
    distance only settles under it once the clean transient has decayed).

    ``bound`` is ``2 K M / (1 - rho)`` with ``K = 2 * depth``; it only
    certifies systems with a unique solution (full column rank and a
    contracting sweep).  Otherwise noise components in the nullspace
    accumulate, ``applicable`` is False and ``holds`` is None.
    """

    deviations: np.ndarray
    drift: np.ndarray
    limsup_estimate: float
    bound: float
    depth_factor: int
    spectral_radius: float
    magnitude_bound: float
    applicable: bool
    holds: bool | None
    note: str = ""


def solve_with_errors(
    system: TreeSystem, config: SolverConfig, model: ErrorModel
) -> tuple[SolveResult, StabilityReport]:
    """Run the iteration with injected noise and check the stability bound.

    The deviation of each iterate from the noise-free fixed point is
    recorded; the limiting deviation is estimated as the maximum over the
    final quarter of the run.  With zero magnitude the run is identical,
    bit for bit, to the clean solver.
    """
    rng = np.random.default_rng(model.seed)
    ops = build_sor(system, config.omega)
    rho = ops.restricted_radius
    full_rank = ops.basis.shape[1] == system.dimension
    applicable = full_rank and rho < 1.0
    if applicable:
        note = ""
    elif not full_rank:
        note = "system is rank deficient: noise in the nullspace accumulates"
    else:
        note = "sweep does not contract at this relaxation value"
    try:
        target = fixed_point(ops)
    except SpectralRadiusAtLeastOne:
        target = None

    x = (
        np.zeros(system.dimension)
        if config.initial is None
        else np.asarray(config.initial, dtype=float)
    )
    x_clean = x
    deviations: list[float] = []
    drift: list[float] = []
    converged = False
    change = float("nan")
    iterations = 0
    for _ in range(config.max_iterations):
        x_new = perturbed_iterate(system, config.omega, x, model, rng)
        clean_new = iterate(system, config.omega, x_clean)
        change = float(np.linalg.norm(x_new - x))
        drift.append(float(np.linalg.norm(x_new - clean_new)))
        if target is not None:
            deviations.append(float(np.linalg.norm(target - x_new)))
        iterations += 1
        scale = max(1.0, float(np.linalg.norm(x)))
        x = x_new
        x_clean = clean_new
        if change <= config.tolerance * scale:
            converged = True
            break

    depth_factor = 2 * tree_depth(system.tree)
    bound = (
        2.0 * depth_factor * model.magnitude_bound / (1.0 - rho)
        if applicable
        else float("nan")
    )
    if deviations:
        window = max(1, int(math.ceil(LIMSUP_WINDOW * len(deviations))))
        limsup = float(max(deviations[-window:]))
    else:
        limsup = float("nan")
    holds = bool(limsup <= bound) if applicable and deviations else None

    result = SolveResult(
        solution=x,
        iterations_used=iterations,
        converged=converged,
        final_change=change,
    )
    report = StabilityReport(
        deviations=np.array(deviations),
        drift=np.array(drift),
        limsup_estimate=limsup,
        bound=bound,
        depth_factor=depth_factor,
        spectral_radius=rho,
        magnitude_bound=model.magnitude_bound,
        applicable=applicable,
        holds=holds,
        note=note,
    )
    return result, report


def single_iteration_error_bound(
    tree, dispersion_bound: float, pooling_bound: float
) -> float:
    """Worst-case root movement from noise injected in one iteration.

    Equals ``2 * depth * max(bounds)``: each level of transmissions can
    contribute at most the per-message bound, once going down and once
    coming back up, because the updates never amplify a perturbation.
    """
    if dispersion_bound < 0.0 or pooling_bound < 0.0:
        raise ValueError("error bounds must be nonnegative")
    return 2.0 * tree_depth(tree) * max(dispersion_bound, pooling_bound)
