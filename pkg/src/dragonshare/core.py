"""Shared domain types: cuts, tiles, simplex points, labeled trees, assignments.

Vertices, labels, players and boxes are 1-based throughout, in memory and on the wire.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import ValidationError

STRUCT_TOL = 1e-12


@dataclass(frozen=True)
class Cut:
    """Nondecreasing cut points in [0, 1]."""

    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        for p in pts:
            if not (0.0 <= p <= 1.0) or math.isnan(p):
                raise ValidationError(f"cut point {p!r} outside [0, 1]")
        for a, b in zip(pts, pts[1:]):
            if a > b:
                raise ValidationError(f"cut points not sorted: {a} > {b}")

    def __len__(self):
        return len(self.points)

    @property
    def bounds(self) -> tuple[float, ...]:
        return (0.0, *self.points, 1.0)

    def to_json(self) -> list[float]:
        return list(self.points)

    @classmethod
    def from_json(cls, data) -> "Cut":
        if not isinstance(data, list):
            raise ValidationError("cut must be a JSON array of numbers")
        return cls(tuple(data))


@dataclass(frozen=True)
class Tile:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValidationError(f"bad tile [{self.lo}, {self.hi}]")

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    @property
    def length(self) -> float:
        return self.hi - self.lo


def tiles_from_cut(cut: Cut | Iterable[float]) -> list[Tile]:
    if not isinstance(cut, Cut):
        cut = Cut(tuple(cut))
    b = cut.bounds
    return [Tile(b[k], b[k + 1]) for k in range(len(b) - 1)]


@dataclass(frozen=True)
class SimplexPoint:
    coords: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coords)
        object.__setattr__(self, "coords", c)
        if not c or min(c) < 0.0:
            raise ValidationError("simplex coordinates must be nonnegative")
        if abs(math.fsum(c) - 1.0) > STRUCT_TOL:
            raise ValidationError(f"simplex coordinates sum to {math.fsum(c)}, not 1")

    @classmethod
    def from_cut(cls, cut: Cut) -> "SimplexPoint":
        return cls(tuple(t.length for t in tiles_from_cut(cut)))

    def to_cut(self) -> Cut:
        acc, pts = 0.0, []
        for x in self.coords[:-1]:
            acc += x
            pts.append(min(acc, 1.0))
        return Cut(tuple(pts))


@dataclass(frozen=True)
class Edge:
    u: int
    w: int
    label: int

    def __post_init__(self):
        if self.u == self.w:
            raise ValidationError(f"loop edge at {self.u}")
        if self.u > self.w:
            u, w = self.w, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "w", w)

    @property
    def ends(self) -> tuple[int, int]:
        return (self.u, self.w)

    def other(self, v: int) -> int:
        return self.w if v == self.u else self.u


def is_labeled_spanning_tree(edges, vertex_count: int, label_set=None) -> bool:
    """Total predicate: do ``edges`` form a spanning tree on [v] with labels biject onto ``label_set``?

    ``edges`` items are ``Edge`` objects or ``(u, w)`` / ``(u, w, label)`` tuples; unlabeled edges
    skip the label check.
    """
    norm = []
    for e in edges:
        if isinstance(e, Edge):
            norm.append((e.u, e.w, e.label))
        else:
            e = tuple(e)
            if len(e) not in (2, 3):
                return False
            norm.append((e[0], e[1], e[2] if len(e) == 3 else None))
    v = vertex_count
    if v < 1 or len(norm) != v - 1:
        return False
    parent = list(range(v + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, w, _ in norm:
        if not (1 <= u <= v and 1 <= w <= v) or u == w:
            return False
        ru, rw = find(u), find(w)
        if ru == rw:
            return False
        parent[ru] = rw
    labels = [lab for _, _, lab in norm]
    if all(lab is None for lab in labels):
        return True
    if label_set is None:
        label_set = range(1, v)
    return sorted(labels, key=repr) == sorted(label_set, key=repr) and len(set(labels)) == len(labels)


@dataclass(frozen=True)
class LabeledTree:
    """Spanning tree on [vertex_count] whose edges carry the labels 1..vertex_count-1."""

    vertex_count: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        edges = tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        edges = tuple(sorted(edges, key=lambda e: e.label))
        object.__setattr__(self, "edges", edges)
        if not is_labeled_spanning_tree(edges, self.vertex_count):
            raise ValidationError("edges do not form a labeled spanning tree")

    def edge(self, label: int) -> Edge:
        return self.edges[label - 1]

    def neighbours(self) -> dict[int, list[Edge]]:
        adj: dict[int, list[Edge]] = {v: [] for v in range(1, self.vertex_count + 1)}
        for e in self.edges:
            adj[e.u].append(e)
            adj[e.w].append(e)
        return adj

    def to_json(self) -> dict:
        return {
            "vertices": self.vertex_count,
            "edges": [{"u": e.u, "w": e.w, "label": e.label} for e in self.edges],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "LabeledTree":
        try:
            return cls(int(data["vertices"]), tuple(Edge(int(e["u"]), int(e["w"]), int(e["label"])) for e in data["edges"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed tree JSON: {exc}") from exc


def root_tree(tree: LabeledTree, root: int) -> dict[int, Edge]:
    """Map each non-root vertex to the first edge on its path towards ``root``."""
    if not 1 <= root <= tree.vertex_count:
        raise ValidationError(f"root {root} outside [1, {tree.vertex_count}]")
    adj = tree.neighbours()
    parent_edge: dict[int, Edge] = {}
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for e in adj[v]:
            k = e.other(v)
            if k not in seen:
                seen.add(k)
                parent_edge[k] = e
                queue.append(k)
    return dict(sorted(parent_edge.items()))


def _side_size(tree: LabeledTree, edge: Edge, start: int) -> int:
    adj = tree.neighbours()
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for e in adj[v]:
            if e is edge:
                continue
            k = e.other(v)
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return len(seen)


def tree_choice_probabilities(tree: LabeledTree) -> dict[int, tuple[Fraction, Fraction]]:
    """For each edge label, the chances (p_u, p_w) that endpoint u resp. w is served by the edge
    when the root is drawn uniformly from the vertices.

    u is served exactly when the root lies on w's side, so p_u = |side(w)| / v.
    """
    v = tree.vertex_count
    out = {}
    for e in tree.edges:
        p_u = Fraction(_side_size(tree, e, e.w), v)
        out[e.label] = (p_u, 1 - p_u)
    return out


@dataclass(frozen=True)
class Assignment:
    """Who gets which box once the dragon has acted.

    ``dragon`` is the grabbed box (piece-grab) or the swallowed player (player-swallow).
    """

    dragon: int
    mapping: Mapping[int, int]

    def __post_init__(self):
        m = dict(sorted((int(a), int(b)) for a, b in self.mapping.items()))
        object.__setattr__(self, "mapping", m)
        if len(set(m.values())) != len(m):
            raise ValidationError("assignment is not injective")

    def to_json(self) -> dict:
        return {"dragon": self.dragon, "map": {str(a): b for a, b in self.mapping.items()}}

    @classmethod
    def from_json(cls, data: Mapping) -> "Assignment":
        try:
            return cls(int(data["dragon"]), {int(a): int(b) for a, b in data["map"].items()})
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ValidationError(f"malformed assignment JSON: {exc}") from exc
