import numpy as np
import pytest

from treekaczmarz import (
    MatrixEnsemble,
    RowEquation,
    SolverConfig,
    TreeSystem,
    TreeTopology,
    generate_system,
    kaczmarz_update,
    solve,
)
from treekaczmarz.experiments import error_after, run_experiment


def classical_sweep(A, b, omega, x, sweeps):
    """Textbook sequential Kaczmarz, kept here purely as an oracle."""
    equations = [RowEquation(row, rhs) for row, rhs in zip(A, b)]
    history = []
    for _ in range(sweeps):
        for eq in equations:
            x = kaczmarz_update(eq, x, omega)
        history.append(x.copy())
    return history


class TestChainEqualsClassical:
    def test_iterates_match_rowwise_sweep(self):
        ensemble = MatrixEnsemble(kind="normal", size=3, seed=21)
        system, _ = generate_system(ensemble, "chain")
        A = np.vstack([system.equations[v][0].a for v in sorted(system.equations)])
        b = np.array([system.equations[v][0].b for v in sorted(system.equations)])
        omega = 1.2
        result = solve(
            system, SolverConfig(omega=omega, max_iterations=15, tolerance=0.0)
        )
        oracle = classical_sweep(A, b, omega, np.zeros(3), 15)
        for ours, theirs in zip(result.trace.root_outputs, oracle):
            np.testing.assert_allclose(ours, theirs, atol=1e-12)


class TestErrorAfter:
    def test_exactly_orthogonal_converges_in_one_sweep(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        x_true = rng.standard_normal(4)
        x_true /= np.linalg.norm(x_true)
        b = q @ x_true
        tree = TreeTopology.from_edges(1, [(1, 2), (2, 3), (3, 4)])
        system = TreeSystem.from_rows(
            tree,
            {v: q[i : i + 1] for i, v in enumerate(sorted(tree.children))},
            {v: b[i : i + 1] for i, v in enumerate(sorted(tree.children))},
        )
        assert error_after(system, 1.0, x_true, iterations=1) <= 1e-12

    def test_initial_error_is_one(self):
        # the run starts at zero and the true solution has unit norm
        _, x_true = generate_system(
            MatrixEnsemble(kind="normal", size=3, seed=4), "fig_graphs_3"
        )
        assert np.linalg.norm(x_true) == pytest.approx(1.0, abs=1e-12)


class TestRunExperiment:
    def test_small_report_structure(self):
        report = run_experiment(sizes=(3,), seed=1, grid_step=0.02)
        assert len(report.rows) == 3
        for row in report.rows:
            assert row.size == 3
            assert 0.0 < row.standard.omega_opt < 2.0
            assert row.standard.rho_opt < 1.0
            assert row.distributed.rho_opt < 1.0
            assert row.standard.error_10 >= 0.0

    def test_deterministic_for_seed(self):
        a = run_experiment(sizes=(3,), seed=7, grid_step=0.05)
        b = run_experiment(sizes=(3,), seed=7, grid_step=0.05)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.standard.omega_opt == rb.standard.omega_opt
            assert ra.distributed.error_10 == rb.distributed.error_10

    def test_unknown_size_rejected(self):
        with pytest.raises(ValueError):
            run_experiment(sizes=(5,), seed=0)

    def test_almost_orthogonal_standard_is_fast(self):
        report = run_experiment(
            sizes=(3,), kinds=("almost_orthogonal",), seed=3, grid_step=0.02
        )
        row = report.rows[0]
        assert row.standard.rho_opt < 0.3
        assert row.standard.error_10 <= 1e-6
