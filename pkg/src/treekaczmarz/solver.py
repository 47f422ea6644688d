"""The distributed Kaczmarz iteration over a tree.

One full update has two passes.  Dispersion walks from the root toward
the leaves: each node applies the relaxed Kaczmarz step for its own
equations (in stored order) to the estimate received from its parent and
hands the result to its children.  Pooling walks back up combining child
results with the convex edge weights.  The pooled root value seeds the
next iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionMismatch, RowEquation, kaczmarz_update
from .topology import TreeTopology, preorder

__all__ = [
    "MissingLeafEstimate",
    "NoTrace",
    "TreeSystem",
    "SolverConfig",
    "IterationTrace",
    "SolveResult",
    "stacked_system",
    "disperse",
    "pool",
    "iterate",
    "solve",
    "node_limits",
]

TRACE_ROOT_ONLY = "root_only"
TRACE_ALL_NODES = "all_nodes"


class MissingLeafEstimate(ValueError):
    pass


class NoTrace(ValueError):
    """Per-node limits were requested but no all-node trace was recorded."""


@dataclass(frozen=True, eq=False)
class TreeSystem:
    """Equations attached to the nodes of a tree, all of one dimension.

    ``equations`` maps every node id to an ordered tuple of rows; a node
    holding several rows applies them sequentially, which is equivalent
    to expanding that node into a short path.
    """

    tree: TreeTopology
    equations: dict[int, tuple[RowEquation, ...]]
    dimension: int

    def __post_init__(self):
        object.__setattr__(
            self, "equations", {v: tuple(eqs) for v, eqs in self.equations.items()}
        )
        nodes = set(self.tree.children)
        if set(self.equations) != nodes:
            raise ValueError(
                f"equation nodes {sorted(self.equations)} do not match tree nodes {sorted(nodes)}"
            )
        for v, eqs in self.equations.items():
            if not eqs:
                raise ValueError(f"node {v} has no equations")
            for eq in eqs:
                if eq.dimension != self.dimension:
                    raise DimensionMismatch(
                        f"node {v} row has dimension {eq.dimension}, expected {self.dimension}"
                    )

    @classmethod
    def from_rows(cls, tree: TreeTopology, rows, rhs) -> "TreeSystem":
        """Build from per-node 2-D coefficient blocks and right-hand sides."""
        equations = {}
        dimension = None
        for v in sorted(tree.children):
            block = np.atleast_2d(np.asarray(rows[v], dtype=float))
            bvals = np.atleast_1d(np.asarray(rhs[v], dtype=float))
            if block.shape[0] != bvals.size:
                raise DimensionMismatch(
                    f"node {v} has {block.shape[0]} rows but {bvals.size} rhs entries"
                )
            if dimension is None:
                dimension = block.shape[1]
            equations[v] = tuple(RowEquation(a, b) for a, b in zip(block, bvals))
        return cls(tree=tree, equations=equations, dimension=int(dimension))

    @property
    def total_rows(self) -> int:
        return sum(len(eqs) for eqs in self.equations.values())


def stacked_system(system: TreeSystem) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """All rows stacked in ascending node order.

    Returns ``(A, b, node_of_row)`` where the third entry records which
    node contributed each row.
    """
    rows, rhs, owners = [], [], []
    for v in sorted(system.equations):
        for eq in system.equations[v]:
            rows.append(eq.a)
            rhs.append(eq.b)
            owners.append(v)
    return np.vstack(rows), np.array(rhs), owners


def _as_state(system: TreeSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (system.dimension,):
        raise DimensionMismatch(
            f"state shape {x.shape}, expected ({system.dimension},)"
        )
    return x


def disperse(system: TreeSystem, omega: float, x_root) -> dict[int, np.ndarray]:
    """Root-to-leaves pass; returns each node's estimate after its own update."""
    x_root = _as_state(system, x_root)
    tree = system.tree
    estimates: dict[int, np.ndarray] = {}
    for v in preorder(tree):
        z = x_root if v == tree.root else estimates[tree.parent[v]]
        for eq in system.equations[v]:
            z = kaczmarz_update(eq, z, omega)
        estimates[v] = z
    return estimates


def pool(
    tree: TreeTopology, leaf_estimates: dict[int, np.ndarray]
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Leaves-to-root pass combining estimates with the edge weights.

    Returns the pooled root value and the pooled value at every node
    (at a leaf this is just its own estimate).  Sums run over children
    in ascending id order.
    """
    pooled: dict[int, np.ndarray] = {}
    for v in reversed(preorder(tree)):
        kids = tree.children[v]
        if not kids:
            try:
                pooled[v] = np.asarray(leaf_estimates[v], dtype=float)
            except KeyError:
                raise MissingLeafEstimate(f"no estimate supplied for leaf {v}") from None
        else:
            acc = None
            for u in kids:
                term = tree.edge_weight[(v, u)] * pooled[u]
                acc = term if acc is None else acc + term
            pooled[v] = acc
    return pooled[tree.root], pooled


def iterate(system: TreeSystem, omega: float, x) -> np.ndarray:
    """One full dispersion plus pooling sweep applied to ``x``."""
    estimates = disperse(system, omega, x)
    leaf_estimates = {leaf: estimates[leaf] for leaf in system.tree.leaves}
    root_value, _ = pool(system.tree, leaf_estimates)
    return root_value


@dataclass
class SolverConfig:
    """Iteration controls.

    The run stops once the successive change satisfies
    ``|x_new - x| <= tolerance * max(1, |x|)`` or after
    ``max_iterations`` sweeps.  The zero initial vector lies in the row
    space of the system, which is the setting the convergence guarantees
    assume; other starting points are accepted but keep their nullspace
    component forever.
    """

    omega: float
    max_iterations: int = 10000
    tolerance: float = 1e-10
    initial: np.ndarray | None = None
    trace_level: str = TRACE_ROOT_ONLY

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ValueError(f"relaxation parameter must be positive, got {self.omega}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be nonnegative")
        if self.trace_level not in (TRACE_ROOT_ONLY, TRACE_ALL_NODES):
            raise ValueError(f"unknown trace level {self.trace_level!r}")
        if self.initial is not None:
            self.initial = np.asarray(self.initial, dtype=float)


@dataclass
class IterationTrace:
    """Per-iteration record of the solve.

    With ``all_nodes`` granularity the per-node dispersion estimates and
    pooled values are kept as well; at every leaf the pooled value is the
    dispersion estimate itself.
    """

    trace_level: str
    root_inputs: list[np.ndarray] = field(default_factory=list)
    root_outputs: list[np.ndarray] = field(default_factory=list)
    change_norms: list[float] = field(default_factory=list)
    node_estimates: list[dict[int, np.ndarray]] | None = None
    pooled_estimates: list[dict[int, np.ndarray]] | None = None

    def __post_init__(self):
        if self.trace_level == TRACE_ALL_NODES:
            self.node_estimates = []
            self.pooled_estimates = []

    @property
    def iterations(self) -> int:
        return len(self.change_norms)


@dataclass
class SolveResult:
    solution: np.ndarray
    iterations_used: int
    converged: bool
    final_change: float
    trace: IterationTrace | None = None


def solve(system: TreeSystem, config: SolverConfig) -> SolveResult:
    """Repeat the full tree sweep until the stopping rule fires."""
    x = (
        np.zeros(system.dimension)
        if config.initial is None
        else _as_state(system, config.initial)
    )
    trace = IterationTrace(trace_level=config.trace_level)
    converged = False
    change = float("nan")
    iterations = 0
    for _ in range(config.max_iterations):
        estimates = disperse(system, config.omega, x)
        leaf_estimates = {leaf: estimates[leaf] for leaf in system.tree.leaves}
        x_new, pooled = pool(system.tree, leaf_estimates)
        change = float(np.linalg.norm(x_new - x))
        trace.root_inputs.append(x)
        trace.root_outputs.append(x_new)
        trace.change_norms.append(change)
        if trace.node_estimates is not None:
            trace.node_estimates.append(estimates)
            trace.pooled_estimates.append(pooled)
        iterations += 1
        scale = max(1.0, float(np.linalg.norm(x)))
        x = x_new
        if change <= config.tolerance * scale:
            converged = True
            break
    return SolveResult(
        solution=x,
        iterations_used=iterations,
        converged=converged,
        final_change=change,
        trace=trace,
    )


def node_limits(trace: IterationTrace | None) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Last recorded per-node dispersion and pooled estimates.

    For consistent systems both limits coincide with the solve limit at
    every node.
    """
    if (
        trace is None
        or trace.node_estimates is None
        or trace.pooled_estimates is None
        or not trace.node_estimates
    ):
        raise NoTrace("solve must run with trace_level='all_nodes'")
    last_x = trace.node_estimates[-1]
    last_y = trace.pooled_estimates[-1]
    return {v: (last_x[v], last_y[v]) for v in sorted(last_x)}
