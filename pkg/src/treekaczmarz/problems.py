"""Problem files, built-in tree shapes, and random test systems.

A problem file is a JSON document::

    {
      "dimension": 2,
      "root": 1,
      "nodes": [{"id": 1, "rows": [[1.0, 0.0]], "b": [1.0]}, ...],
      "edges": [{"parent": 1, "child": 2, "weight": 0.5}, ...]
    }

Edge weights are optional; a missing weight defaults to the uniform
share among the parent's children.  Generated instances additionally
store the true solution under ``x_true`` so reruns are exact; the loader
ignores the key unless asked for it.  Floats are serialized via their
shortest round-trip representation, so save followed by load reproduces
a system bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import DimensionMismatch, ZeroRow
from .solver import TreeSystem
from .topology import TreeTopology, TreeValidationError

__all__ = [
    "ParseError",
    "ValidationError",
    "SizeMismatch",
    "MatrixEnsemble",
    "KIND_ALMOST_ORTHOGONAL",
    "KIND_NORMAL",
    "KIND_UNIFORM",
    "MATRIX_KINDS",
    "TREE_SHAPES",
    "load_problem",
    "load_problem_with_solution",
    "parse_problem",
    "save_problem",
    "make_tree",
    "sample_matrix",
    "generate_system",
]

KIND_ALMOST_ORTHOGONAL = "almost_orthogonal"
KIND_NORMAL = "normal"
KIND_UNIFORM = "uniform"
MATRIX_KINDS = (KIND_ALMOST_ORTHOGONAL, KIND_NORMAL, KIND_UNIFORM)

SHAPE_CHAIN = "chain"
SHAPE_FIG3 = "fig_graphs_3"
SHAPE_FIG8 = "fig_graphs_8"
SHAPE_CUSTOM = "custom"
TREE_SHAPES = (SHAPE_CHAIN, SHAPE_FIG3, SHAPE_FIG8, SHAPE_CUSTOM)


class ParseError(ValueError):
    """The file is not a structurally valid problem document."""


class ValidationError(ValueError):
    """The document parsed but violates a system invariant."""


class SizeMismatch(ValueError):
    pass


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParseError(message)


def parse_problem(doc) -> tuple[TreeSystem, np.ndarray | None]:
    """Turn a decoded JSON document into a validated system."""
    _require(isinstance(doc, dict), "problem document must be a JSON object")
    for key in ("dimension", "root", "nodes", "edges"):
        _require(key in doc, f"missing key {key!r}")
    dimension = doc["dimension"]
    _require(isinstance(dimension, int) and dimension > 0, "dimension must be a positive integer")
    root = doc["root"]
    _require(isinstance(root, int) and root >= 0, "root must be a nonnegative integer")
    _require(isinstance(doc["nodes"], list) and doc["nodes"], "nodes must be a nonempty list")
    _require(isinstance(doc["edges"], list), "edges must be a list")

    edges = []
    weights = {}
    for entry in doc["edges"]:
        _require(isinstance(entry, dict), "each edge must be an object")
        p, c = entry.get("parent"), entry.get("child")
        _require(isinstance(p, int) and p >= 0, f"edge parent {p!r} must be a nonnegative integer")
        _require(isinstance(c, int) and c >= 0, f"edge child {c!r} must be a nonnegative integer")
        edges.append((p, c))
        if "weight" in entry:
            w = entry["weight"]
            _require(isinstance(w, (int, float)), f"edge ({p}, {c}) weight must be a number")
            weights[(p, c)] = float(w)

    try:
        tree = TreeTopology.from_edges(root, edges, weights)
    except TreeValidationError as exc:
        raise ValidationError(str(exc)) from exc

    seen = set()
    rows_by_node: dict[int, np.ndarray] = {}
    rhs_by_node: dict[int, np.ndarray] = {}
    for entry in doc["nodes"]:
        _require(isinstance(entry, dict), "each node must be an object")
        v = entry.get("id")
        _require(isinstance(v, int) and v >= 0, f"node id {v!r} must be a nonnegative integer")
        _require(v not in seen, f"node {v} appears twice")
        seen.add(v)
        rows = entry.get("rows")
        rhs = entry.get("b")
        _require(isinstance(rows, list) and rows, f"node {v} must list at least one row")
        _require(isinstance(rhs, list), f"node {v} must list right-hand sides")
        if len(rows) != len(rhs):
            raise DimensionMismatch(f"node {v} has {len(rows)} rows but {len(rhs)} rhs entries")
        for j, row in enumerate(rows):
            _require(isinstance(row, list), f"node {v} row {j} must be a list")
            if len(row) != dimension:
                raise DimensionMismatch(
                    f"node {v} row {j} has {len(row)} entries, expected {dimension}"
                )
            if not any(float(x) != 0.0 for x in row):
                raise ZeroRow(f"node {v} row {j} is identically zero")
        rows_by_node[v] = np.array(rows, dtype=float)
        rhs_by_node[v] = np.array(rhs, dtype=float)

    tree_nodes = set(tree.children)
    if seen != tree_nodes:
        missing = sorted(tree_nodes - seen)
        extra = sorted(seen - tree_nodes)
        raise ValidationError(
            f"node list does not match the tree: missing equations for {missing}, "
            f"equations for unknown nodes {extra}"
        )

    system = TreeSystem.from_rows(tree, rows_by_node, rhs_by_node)

    x_true = None
    if "x_true" in doc:
        raw = doc["x_true"]
        _require(
            isinstance(raw, list) and len(raw) == dimension,
            "x_true must be a list matching the dimension",
        )
        x_true = np.array(raw, dtype=float)
    return system, x_true


def load_problem(path) -> TreeSystem:
    """Read and validate a problem file."""
    system, _ = load_problem_with_solution(path)
    return system


def load_problem_with_solution(path) -> tuple[TreeSystem, np.ndarray | None]:
    """Like :func:`load_problem` but also return the stored true solution."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_problem(doc)


def problem_to_doc(system: TreeSystem, x_true=None) -> dict:
    tree = system.tree
    doc = {
        "dimension": system.dimension,
        "root": tree.root,
        "nodes": [
            {
                "id": v,
                "rows": [eq.a.tolist() for eq in system.equations[v]],
                "b": [eq.b for eq in system.equations[v]],
            }
            for v in sorted(system.equations)
        ],
        "edges": [
            {"parent": p, "child": c, "weight": tree.edge_weight[(p, c)]}
            for p, c in sorted(tree.edge_weight)
        ],
    }
    if x_true is not None:
        doc["x_true"] = np.asarray(x_true, dtype=float).tolist()
    return doc


def save_problem(system: TreeSystem, path, x_true=None) -> None:
    """Write a problem file that loads back bit for bit."""
    Path(path).write_text(
        json.dumps(problem_to_doc(system, x_true), indent=2) + "\n", encoding="utf-8"
    )


def make_tree(shape: str, size: int | None = None, tree: TreeTopology | None = None) -> TreeTopology:
    """Built-in topologies: a chain, or the 3- and 8-node branching trees.

    ``custom`` returns the caller-provided topology unchanged.
    """
    if shape == SHAPE_CHAIN:
        if size is None or size < 1:
            raise SizeMismatch("chain shape needs a positive size")
        return TreeTopology.from_edges(1, [(i, i + 1) for i in range(1, size)])
    if shape == SHAPE_FIG3:
        return TreeTopology.from_edges(1, [(1, 2), (1, 3)])
    if shape == SHAPE_FIG8:
        return TreeTopology.from_edges(
            1, [(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7), (3, 8)]
        )
    if shape == SHAPE_CUSTOM:
        if tree is None:
            raise ValueError("custom shape needs an explicit topology")
        return tree
    raise ValueError(f"unknown tree shape {shape!r}")


@dataclass(frozen=True)
class MatrixEnsemble:
    """Family of random square test matrices.

    almost_orthogonal   random orthogonal matrix with every entry
                        truncated toward zero at the first decimal
    normal              i.i.d. standard normal entries
    uniform             i.i.d. uniform entries on [-1, 1]
    """

    kind: str
    size: int
    seed: int

    def __post_init__(self):
        if self.kind not in MATRIX_KINDS:
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("matrix size must be positive")


def _draw_matrix(kind: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if kind == KIND_NORMAL:
        return rng.standard_normal((n, n))
    if kind == KIND_UNIFORM:
        return rng.uniform(-1.0, 1.0, size=(n, n))
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    q = q * signs
    truncated = np.trunc(q * 10.0) / 10.0
    assert not np.any(np.all(truncated == 0.0, axis=1)), "truncation produced a zero row"
    return truncated


def sample_matrix(ensemble: MatrixEnsemble) -> np.ndarray:
    return _draw_matrix(ensemble.kind, ensemble.size, np.random.default_rng(ensemble.seed))


def generate_system(
    ensemble: MatrixEnsemble,
    shape: str,
    tree: TreeTopology | None = None,
) -> tuple[TreeSystem, np.ndarray]:
    """Random system with one row per node and a unit-norm true solution.

    The right-hand side is ``A x_true`` with ``x_true`` drawn at random
    and normalized, so the initial error from the zero vector is exactly
    one.  Deterministic for a given ensemble seed.
    """
    topology = make_tree(shape, size=ensemble.size, tree=tree)
    if topology.node_count != ensemble.size:
        raise SizeMismatch(
            f"matrix size {ensemble.size} does not match the {topology.node_count}-node tree"
        )
    rng = np.random.default_rng(ensemble.seed)
    A = _draw_matrix(ensemble.kind, ensemble.size, rng)
    x = rng.standard_normal(ensemble.size)
    x_true = x / np.linalg.norm(x)
    b = A @ x_true
    nodes = sorted(topology.children)
    rows = {v: A[i : i + 1] for i, v in enumerate(nodes)}
    rhs = {v: b[i : i + 1] for i, v in enumerate(nodes)}
    return TreeSystem.from_rows(topology, rows, rhs), x_true
