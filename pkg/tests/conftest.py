"""Shared builders for randomized test instances."""

import numpy as np
import pytest

from treekaczmarz import TreeSystem, TreeTopology


def random_tree(rng, max_nodes=8, min_nodes=1):
    """Random rooted tree with ids 1..n and normalized random child weights."""
    n = int(rng.integers(min_nodes, max_nodes + 1))
    edges = [(int(rng.integers(1, i)), i) for i in range(2, n + 1)]
    tree = TreeTopology.from_edges(1, edges)
    children = {v: kids for v, kids in tree.children.items() if kids}
    weights = {}
    for v, kids in children.items():
        raw = rng.uniform(0.2, 1.0, size=len(kids))
        raw /= raw.sum()
        for u, w in zip(kids, raw):
            weights[(v, u)] = float(w)
    return TreeTopology.from_edges(1, edges, weights)


def random_system(
    rng,
    tree=None,
    dimension=None,
    max_rows_per_node=1,
    rank_deficient=False,
    consistent=None,
):
    """Random system on ``tree`` (or a fresh random tree).

    ``consistent=True`` forces an exactly solvable right-hand side,
    ``consistent=False`` makes the system overdetermined with a random
    right-hand side (almost surely inconsistent), ``None`` leaves the
    right-hand side random without adding rows.
    """
    if tree is None:
        tree = random_tree(rng)
    nodes = sorted(tree.children)
    if dimension is None:
        dimension = int(rng.integers(2, 7))
    rows_per_node = {
        v: int(rng.integers(1, max_rows_per_node + 1)) for v in nodes
    }
    if consistent is False:
        # more rows than unknowns so a random rhs cannot be matched
        while sum(rows_per_node.values()) <= dimension:
            v = nodes[int(rng.integers(0, len(nodes)))]
            rows_per_node[v] += 1
    blocks = {v: rng.standard_normal((rows_per_node[v], dimension)) for v in nodes}
    if rank_deficient and len(nodes) > 1:
        # exact dependencies: copy or double an earlier node's first row
        donors = [v for v in nodes if v != nodes[-1]]
        victim = nodes[-1]
        donor = donors[int(rng.integers(0, len(donors)))]
        blocks[victim][0] = 2.0 * blocks[donor][0]
    if consistent:
        x_true = rng.standard_normal(dimension)
        rhs = {v: blocks[v] @ x_true for v in nodes}
    else:
        rhs = {v: rng.standard_normal(rows_per_node[v]) for v in nodes}
    return TreeSystem.from_rows(tree, blocks, rhs)


def three_node_worked():
    """Consistent demo: root x=1, one leaf y=1, other leaf x+y=2."""
    tree = TreeTopology.from_edges(1, [(1, 2), (1, 3)])
    return TreeSystem.from_rows(
        tree,
        {1: [[1.0, 0.0]], 2: [[0.0, 1.0]], 3: [[1.0, 1.0]]},
        {1: [1.0], 2: [1.0], 3: [2.0]},
    )


def scalar_chain():
    """Inconsistent one-unknown chain: root wants x=0, leaf wants x=1."""
    tree = TreeTopology.from_edges(1, [(1, 2)])
    return TreeSystem.from_rows(tree, {1: [[1.0]], 2: [[1.0]]}, {1: [0.0], 2: [1.0]})


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def worked_system():
    return three_node_worked()


@pytest.fixture
def chain_system():
    return scalar_chain()
