"""Rooted weighted trees that index distributed systems of equations.

A tree is stored as parent/children maps over integer node ids plus a
positive weight on every edge.  The weights of the edges leaving any
internal node form a convex combination: they are the coefficients used
when child estimates are pooled back toward the root.  Trees are treated
as immutable once validated; every traversal iterates children in
ascending node id so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

__all__ = [
    "TreeTopology",
    "LeafPath",
    "TreeValidationError",
    "NotOnPath",
    "CYCLE_DETECTED",
    "DISCONNECTED_NODE",
    "WEIGHT_NOT_POSITIVE",
    "WEIGHTS_NOT_NORMALIZED",
    "validate",
    "preorder",
    "leaf_paths",
    "path_weight",
    "leaf_weights",
    "node_cumulative_weight",
    "tree_depth",
]

# child weights at each internal node must sum to 1 within this slack
WEIGHT_SUM_TOL = 1e-12

CYCLE_DETECTED = "CycleDetected"
DISCONNECTED_NODE = "DisconnectedNode"
WEIGHT_NOT_POSITIVE = "WeightNotPositive"
WEIGHTS_NOT_NORMALIZED = "WeightsNotNormalized"


class TreeValidationError(ValueError):
    """Raised by :func:`validate` with every violation found, not just the first.

    ``violations`` is a tuple of ``(kind, message)`` pairs, where ``kind``
    is one of ``CycleDetected``, ``DisconnectedNode``, ``WeightNotPositive``
    or ``WeightsNotNormalized``.
    """

    def __init__(self, violations: Iterable[tuple[str, str]]):
        self.violations = tuple(violations)
        detail = "; ".join(f"[{kind}] {msg}" for kind, msg in self.violations)
        super().__init__(f"invalid tree topology: {detail}")


class NotOnPath(ValueError):
    """Requested a path weight between nodes not on a common root path."""


@dataclass(frozen=True, eq=False)
class TreeTopology:
    """Rooted tree with convex edge weights.

    Fields
    ------
    node_count : number of nodes
    root : id of the root node
    parent : child id -> parent id (the root has no entry)
    children : node id -> tuple of child ids, sorted ascending
    edge_weight : (parent, child) -> weight in (0, 1]
    leaves : all childless nodes, sorted ascending
    """

    node_count: int
    root: int
    parent: dict[int, int]
    children: dict[int, tuple[int, ...]]
    edge_weight: dict[tuple[int, int], float]
    leaves: tuple[int, ...]

    @classmethod
    def from_edges(
        cls,
        root: int,
        edges: Iterable[tuple[int, int]],
        weights: Mapping[tuple[int, int], float] | None = None,
        check: bool = True,
    ) -> "TreeTopology":
        """Build a topology from ``(parent, child)`` pairs.

        Edges without an entry in ``weights`` default to the uniform weight
        ``1 / (number of children of the parent)``.  With ``check`` the
        result is passed through :func:`validate`.
        """
        weights = dict(weights or {})
        parent: dict[int, int] = {}
        kids: dict[int, list[int]] = {root: []}
        for p, c in edges:
            if c in parent:
                raise TreeValidationError(
                    [(DISCONNECTED_NODE, f"node {c} has more than one parent")]
                )
            parent[c] = p
            kids.setdefault(p, []).append(c)
            kids.setdefault(c, [])
        nodes = set(kids)
        children = {v: tuple(sorted(kids[v])) for v in nodes}
        edge_weight: dict[tuple[int, int], float] = {}
        for v in nodes:
            n_kids = len(children[v])
            for u in children[v]:
                w = weights.get((v, u))
                edge_weight[(v, u)] = 1.0 / n_kids if w is None else float(w)
        tree = cls(
            node_count=len(nodes),
            root=root,
            parent=parent,
            children=children,
            edge_weight=edge_weight,
            leaves=tuple(sorted(v for v in nodes if not children[v])),
        )
        if check:
            validate(tree)
        return tree

    def nodes(self) -> list[int]:
        return sorted(self.children)

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]


@dataclass(frozen=True)
class LeafPath:
    """Node sequence from the root down to one leaf (both inclusive)."""

    leaf: int
    nodes: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.nodes)


def validate(tree: TreeTopology) -> None:
    """Check every topology invariant; raise with the full violation list.

    Verified: each non-root node has a parent chain reaching the root
    without revisiting a node, parent and children maps agree, every edge
    weight is positive, and the child weights of each internal node sum
    to one within ``WEIGHT_SUM_TOL``.
    """
    violations: list[tuple[str, str]] = []
    nodes = set(tree.children) | {tree.root} | set(tree.parent) | set(tree.parent.values())

    if tree.root in tree.parent:
        violations.append((CYCLE_DETECTED, f"root {tree.root} has a parent"))

    for v in sorted(nodes):
        if v != tree.root and v not in tree.parent:
            violations.append((DISCONNECTED_NODE, f"node {v} has no parent"))
        listed = tree.children.get(v)
        if listed is None:
            violations.append((DISCONNECTED_NODE, f"node {v} missing from children map"))
            continue
        if tuple(sorted(listed)) != tuple(listed):
            violations.append((DISCONNECTED_NODE, f"children of node {v} are not sorted"))
        for u in listed:
            if tree.parent.get(u) != v:
                violations.append(
                    (DISCONNECTED_NODE, f"child {u} of node {v} does not point back to it")
                )

    # walk every node up to the root; bounded by the node count
    for v in sorted(nodes):
        cur, steps = v, 0
        seen = {v}
        while cur != tree.root:
            nxt = tree.parent.get(cur)
            if nxt is None:
                break  # reported above as disconnected
            if nxt in seen or steps >= len(nodes):
                violations.append((CYCLE_DETECTED, f"parent chain of node {v} cycles"))
                break
            seen.add(nxt)
            cur = nxt
            steps += 1

    for v in sorted(nodes):
        kids = tree.children.get(v) or ()
        if not kids:
            continue
        total = 0.0
        for u in kids:
            w = tree.edge_weight.get((v, u))
            if w is None or not w > 0.0:
                violations.append(
                    (WEIGHT_NOT_POSITIVE, f"edge ({v}, {u}) has weight {w!r}")
                )
            else:
                total += w
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            violations.append(
                (WEIGHTS_NOT_NORMALIZED, f"child weights of node {v} sum to {total!r}")
            )

    if violations:
        raise TreeValidationError(violations)


def preorder(tree: TreeTopology) -> list[int]:
    """Depth-first node order starting at the root, children ascending."""
    order: list[int] = []
    stack = [tree.root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(tree.children[v]))
    return order


def leaf_paths(tree: TreeTopology) -> list[LeafPath]:
    """One root-to-leaf path per leaf, leaves in ascending id order."""
    paths = []
    for leaf in tree.leaves:
        chain = [leaf]
        while chain[-1] != tree.root:
            chain.append(tree.parent[chain[-1]])
        paths.append(LeafPath(leaf=leaf, nodes=tuple(reversed(chain))))
    return paths


def path_weight(tree: TreeTopology, u: int, v: int) -> float:
    """Product of edge weights on the path from ancestor ``v`` down to ``u``.

    ``path_weight(v, v)`` is 1 by convention (empty product).  Raises
    :class:`NotOnPath` when ``v`` is not an ancestor of ``u``.
    """
    if u == v:
        if u not in tree.children:
            raise NotOnPath(f"unknown node {u}")
        return 1.0
    w = 1.0
    cur = u
    while cur != v:
        p = tree.parent.get(cur)
        if p is None:
            raise NotOnPath(f"node {v} is not an ancestor of node {u}")
        w *= tree.edge_weight[(p, cur)]
        cur = p
    return w


def leaf_weights(tree: TreeTopology) -> dict[int, float]:
    """Weight of each leaf relative to the root; the values sum to one."""
    return {leaf: path_weight(tree, leaf, tree.root) for leaf in tree.leaves}


def node_cumulative_weight(tree: TreeTopology, v: int) -> float:
    """Total root-relative weight of all leaves at or below node ``v``.

    Equals the leaf weight when ``v`` is a leaf and 1 at the root.
    """
    if v not in tree.children:
        raise NotOnPath(f"unknown node {v}")
    below: list[int] = []
    stack = [v]
    while stack:
        w = stack.pop()
        if tree.is_leaf(w):
            below.append(w)
        else:
            stack.extend(reversed(tree.children[w]))
    total = 0.0
    for leaf in sorted(below):
        total += path_weight(tree, leaf, tree.root)
    return total


def tree_depth(tree: TreeTopology) -> int:
    """Length in edges of the longest root-to-leaf path."""
    return max(p.length - 1 for p in leaf_paths(tree))
