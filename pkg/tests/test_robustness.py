import numpy as np
import pytest

from treekaczmarz import (
    ErrorModel,
    SolverConfig,
    TreeSystem,
    TreeTopology,
    build_sor,
    disperse,
    fixed_point,
    iterate,
    perturbed_iterate,
    single_iteration_error_bound,
    solve,
    solve_with_errors,
    tree_depth,
)
from treekaczmarz.robustness import _perturbed_pass

from conftest import random_system, random_tree


def unique_solution_system(rng, tree=None):
    if tree is None:
        tree = random_tree(rng, max_nodes=6, min_nodes=2)
    n = tree.node_count
    A = rng.standard_normal((n, n)) + 2 * np.eye(n)
    x_true = rng.standard_normal(n)
    x_true /= np.linalg.norm(x_true)
    b = A @ x_true
    nodes = sorted(tree.children)
    system = TreeSystem.from_rows(
        tree,
        {v: A[i : i + 1] for i, v in enumerate(nodes)},
        {v: b[i : i + 1] for i, v in enumerate(nodes)},
    )
    return system, x_true


class TestErrorModel:
    def test_negative_magnitude_rejected(self):
        with pytest.raises(ValueError):
            ErrorModel(magnitude_bound=-1.0)

    def test_fixed_vector_must_fit_bound(self):
        with pytest.raises(ValueError):
            ErrorModel(
                magnitude_bound=0.1,
                distribution="fixed_vector",
                vector=np.array([1.0, 0.0]),
            )

    def test_table_entries_checked(self):
        with pytest.raises(ValueError):
            ErrorModel(
                magnitude_bound=0.1,
                distribution="per_node_table",
                table={1: np.array([0.5, 0.0])},
            )

    def test_uniform_ball_draws_within_bound(self, rng):
        model = ErrorModel(magnitude_bound=0.25, seed=3)
        gen = np.random.default_rng(3)
        for _ in range(200):
            draw = model.draw(gen, node=1, dimension=4)
            assert np.linalg.norm(draw) <= 0.25 + 1e-15

    def test_draws_replay_with_seed(self):
        model = ErrorModel(magnitude_bound=1.0, seed=5)
        a = model.draw(np.random.default_rng(5), 1, 3)
        b = model.draw(np.random.default_rng(5), 1, 3)
        np.testing.assert_array_equal(a, b)


class TestZeroNoise:
    def test_bitwise_identical_to_clean_solve(self, rng):
        system, _ = unique_solution_system(rng)
        config = SolverConfig(omega=1.0, max_iterations=50, tolerance=0.0)
        clean = solve(system, config)
        noisy, report = solve_with_errors(
            system, config, ErrorModel(magnitude_bound=0.0, seed=9)
        )
        np.testing.assert_array_equal(clean.solution, noisy.solution)
        assert clean.iterations_used == noisy.iterations_used
        assert np.all(report.drift == 0.0)

    def test_single_sweep_matches_iterate(self, rng):
        system = random_system(rng)
        x = rng.standard_normal(system.dimension)
        model = ErrorModel(magnitude_bound=0.0, seed=0)
        np.testing.assert_array_equal(
            perturbed_iterate(system, 1.0, x, model, np.random.default_rng(0)),
            iterate(system, 1.0, x),
        )


class TestSingleIterationBound:
    def test_depth_one(self):
        tree = TreeTopology.from_edges(1, [(1, 2), (1, 3)])
        assert single_iteration_error_bound(tree, 0.1, 0.1) == pytest.approx(0.2)

    def test_depth_two(self):
        tree = TreeTopology.from_edges(
            1, [(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7), (3, 8)]
        )
        assert single_iteration_error_bound(tree, 1.0, 1.0) == pytest.approx(4.0)

    def test_zero_bounds(self, rng):
        tree = random_tree(rng)
        assert single_iteration_error_bound(tree, 0.0, 0.0) == 0.0

    def test_negative_rejected(self, rng):
        tree = random_tree(rng)
        with pytest.raises(ValueError):
            single_iteration_error_bound(tree, -0.1, 0.0)

    def test_measured_single_iteration_deviation(self, rng):
        # worst-case fixed-vector noise in one sweep stays under the bound
        for _ in range(20):
            system = random_system(rng, max_rows_per_node=2)
            omega = float(rng.uniform(0.1, 1.9))
            magnitude = 1e-2
            vec = rng.standard_normal(system.dimension)
            vec *= magnitude / np.linalg.norm(vec)
            model = ErrorModel(
                magnitude_bound=magnitude, distribution="fixed_vector", vector=vec
            )
            x = rng.standard_normal(system.dimension)
            noisy = perturbed_iterate(
                system, omega, x, model, np.random.default_rng(0)
            )
            clean = iterate(system, omega, x)
            bound = single_iteration_error_bound(system.tree, magnitude, magnitude)
            assert np.linalg.norm(noisy - clean) <= bound + 1e-12


class TestDispersionDamping:
    def test_injected_error_never_amplified(self, rng):
        # noise at a single internal node, dispersion stage only
        for _ in range(20):
            tree = random_tree(rng, max_nodes=8, min_nodes=3)
            system = random_system(rng, tree=tree)
            internal = [v for v in sorted(tree.children) if tree.children[v]]
            node = internal[int(rng.integers(0, len(internal)))]
            eps = rng.standard_normal(system.dimension)
            eps *= 1e-3 / np.linalg.norm(eps)
            model = ErrorModel(
                magnitude_bound=1e-3,
                distribution="per_node_table",
                stages="dispersion",
                table={node: eps},
            )
            omega = float(rng.uniform(0.1, 1.9))
            x = rng.standard_normal(system.dimension)
            _, noisy_est, _ = _perturbed_pass(
                system, omega, x, model, np.random.default_rng(0)
            )
            clean_est = disperse(system, omega, x)
            for leaf in tree.leaves:
                drift = np.linalg.norm(noisy_est[leaf] - clean_est[leaf])
                assert drift <= np.linalg.norm(eps) + 1e-14


class TestStabilityBound:
    def test_limsup_within_bound(self, rng):
        config = SolverConfig(omega=1.0, max_iterations=500, tolerance=0.0)
        for trial in range(10):
            system, _ = unique_solution_system(rng)
            model = ErrorModel(magnitude_bound=1e-3, seed=trial)
            _, report = solve_with_errors(system, config, model)
            assert report.applicable
            assert report.holds
            assert report.limsup_estimate <= report.bound

    def test_drift_bounded_at_every_iteration(self, rng):
        config = SolverConfig(omega=1.0, max_iterations=200, tolerance=0.0)
        for trial in range(5):
            system, _ = unique_solution_system(rng)
            model = ErrorModel(magnitude_bound=1e-3, seed=100 + trial)
            _, report = solve_with_errors(system, config, model)
            assert report.applicable
            assert np.all(report.drift <= report.bound)

    def test_limsup_holds_across_hundred_seeds(self):
        rng = np.random.default_rng(12345)
        config = SolverConfig(omega=1.0, max_iterations=300, tolerance=0.0)
        held = 0
        for trial in range(100):
            system, _ = unique_solution_system(rng)
            model = ErrorModel(magnitude_bound=1e-3, seed=trial)
            _, report = solve_with_errors(system, config, model)
            assert report.applicable
            if report.holds:
                held += 1
        assert held == 100

    def test_bound_value(self, rng):
        tree = TreeTopology.from_edges(1, [(1, 2), (1, 3), (1, 4)])
        system, _ = unique_solution_system(rng, tree=tree)
        config = SolverConfig(omega=1.0, max_iterations=200, tolerance=0.0)
        model = ErrorModel(magnitude_bound=1e-3, seed=0)
        _, report = solve_with_errors(system, config, model)
        rho = build_sor(system, 1.0).restricted_radius
        assert report.depth_factor == 2 * tree_depth(tree)
        assert report.bound == pytest.approx(
            2 * report.depth_factor * 1e-3 / (1 - rho), rel=1e-12
        )

    def test_deviation_measured_from_fixed_point(self, rng):
        system, _ = unique_solution_system(rng)
        config = SolverConfig(omega=0.8, max_iterations=100, tolerance=0.0)
        model = ErrorModel(magnitude_bound=0.0, seed=1)
        _, report = solve_with_errors(system, config, model)
        target = fixed_point(build_sor(system, 0.8))
        clean = solve(system, config)
        final_dev = np.linalg.norm(target - clean.solution)
        assert report.deviations[-1] == pytest.approx(final_dev, abs=1e-12)

    def test_rank_deficient_not_applicable(self, rng):
        # fewer rows than unknowns: the stacked matrix has a nullspace
        tree = random_tree(rng, max_nodes=4)
        system = random_system(rng, tree=tree, dimension=tree.node_count + 2)
        config = SolverConfig(omega=1.0, max_iterations=50, tolerance=0.0)
        _, report = solve_with_errors(
            system, config, ErrorModel(magnitude_bound=1e-3, seed=2)
        )
        assert not report.applicable
        assert report.holds is None
        assert np.isnan(report.bound)
        assert "rank deficient" in report.note

    def test_stage_filter_changes_draws(self, rng):
        system, _ = unique_solution_system(rng)
        config = SolverConfig(omega=1.0, max_iterations=30, tolerance=0.0)
        runs = {}
        for stages in ("dispersion", "pooling", "both"):
            model = ErrorModel(magnitude_bound=1e-3, seed=4, stages=stages)
            result, _ = solve_with_errors(system, config, model)
            runs[stages] = result.solution
        assert not np.array_equal(runs["dispersion"], runs["pooling"])
        assert not np.array_equal(runs["both"], runs["pooling"])
