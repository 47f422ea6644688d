"""Benchmark runs comparing the chain sweep with the branching sweep.

For each matrix family and size the same rows are solved twice: once on
a chain (which makes the method the classical sequential sweep) and once
on the matching branching tree.  Each run reports the numerically
optimal relaxation parameter, the spectral radius there, and the error
left after ten iterations from the zero vector (the initial error is one
by construction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import (
    MATRIX_KINDS,
    SHAPE_CHAIN,
    SHAPE_FIG3,
    SHAPE_FIG8,
    MatrixEnsemble,
    generate_system,
)
from .solver import SolverConfig, TreeSystem, solve
from .sor import DEFAULT_GRID_STEP, DEFAULT_OMEGA_MAX, OmegaSweep, omega_sweep

__all__ = ["ExperimentCell", "ExperimentRow", "ExperimentReport", "run_experiment", "error_after"]

FIG_SHAPES = {3: SHAPE_FIG3, 8: SHAPE_FIG8}
ERROR_ITERATIONS = 10


@dataclass(frozen=True)
class ExperimentCell:
    omega_opt: float
    rho_opt: float
    error_10: float
    sweep: OmegaSweep


@dataclass(frozen=True)
class ExperimentRow:
    size: int
    kind: str
    standard: ExperimentCell
    distributed: ExperimentCell


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ExperimentRow, ...]
    seed: int
    grid_step: float
    omega_max: float


def error_after(system: TreeSystem, omega: float, x_true, iterations: int = ERROR_ITERATIONS) -> float:
    """Euclidean error after a fixed number of sweeps from the zero vector."""
    config = SolverConfig(omega=omega, max_iterations=iterations, tolerance=0.0)
    result = solve(system, config)
    return float(np.linalg.norm(result.solution - np.asarray(x_true, dtype=float)))


def _measure(system: TreeSystem, x_true, grid_step: float, omega_max: float) -> ExperimentCell:
    sweep = omega_sweep(system, omega_max=omega_max, grid_step=grid_step)
    return ExperimentCell(
        omega_opt=sweep.omega_opt,
        rho_opt=sweep.rho_opt,
        error_10=error_after(system, sweep.omega_opt, x_true),
        sweep=sweep,
    )


def run_experiment(
    sizes=(3, 8),
    kinds=MATRIX_KINDS,
    seed: int = 0,
    grid_step: float = DEFAULT_GRID_STEP,
    omega_max: float = DEFAULT_OMEGA_MAX,
) -> ExperimentReport:
    """Run the chain-versus-tree comparison over matrix families.

    Every (size, kind) pair derives its own child seed from ``seed`` so
    results are reproducible and independent of which subsets run.
    """
    rows = []
    for size in sizes:
        if size not in FIG_SHAPES:
            raise ValueError(f"no branching tree of size {size}; choose from {sorted(FIG_SHAPES)}")
        for kind in kinds:
            child = np.random.SeedSequence([seed, size, MATRIX_KINDS.index(kind)])
            ensemble = MatrixEnsemble(
                kind=kind, size=size, seed=int(child.generate_state(1)[0])
            )
            chain_system, x_true = generate_system(ensemble, SHAPE_CHAIN)
            tree_system, _ = generate_system(ensemble, FIG_SHAPES[size])
            rows.append(
                ExperimentRow(
                    size=size,
                    kind=kind,
                    standard=_measure(chain_system, x_true, grid_step, omega_max),
                    distributed=_measure(tree_system, x_true, grid_step, omega_max),
                )
            )
    return ExperimentReport(
        rows=tuple(rows), seed=seed, grid_step=grid_step, omega_max=omega_max
    )
