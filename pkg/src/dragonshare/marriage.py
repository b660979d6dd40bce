"""Dragon marriage lemma: n-1 sets over [n] with the "k sets cover k+1 elements" property.

Three equivalent conditions on J_1, ..., J_{n-1} of subsets of [n]:

1. every k of the sets have a union of at least k + 1 elements;
2. for each j in [n] there is a system of distinct representatives avoiding j;
3. there are pairs {a_i, b_i} in J_i forming a spanning tree of K_n.

Condition (1) is always checked through (2), i.e. with n bipartite matchings.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .core import Edge, LabeledTree, is_labeled_spanning_tree
from .errors import CapacityError, DragonConditionError, ValidationError

BRUTE_FORCE_MAX_N = 10


@dataclass(frozen=True)
class SetFamily:
    n: int
    sets: tuple[frozenset, ...]

    def __post_init__(self):
        sets = tuple(frozenset(int(x) for x in s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        if self.n < 2:
            raise ValidationError("n must be at least 2")
        if len(sets) != self.n - 1:
            raise ValidationError(f"expected {self.n - 1} sets, got {len(sets)}")
        for s in sets:
            if any(not 1 <= x <= self.n for x in s):
                raise ValidationError(f"set {sorted(s)} not inside [1, {self.n}]")

    @classmethod
    def of(cls, n: int, sets: Iterable[Iterable[int]]) -> "SetFamily":
        return cls(n, tuple(frozenset(s) for s in sets))

    def graph(self) -> dict[int, frozenset]:
        return {i + 1: s for i, s in enumerate(self.sets)}

    def to_json(self) -> dict:
        return {"n": self.n, "sets": [sorted(s) for s in self.sets]}

    @classmethod
    def from_json(cls, data: Mapping) -> "SetFamily":
        try:
            return cls.of(int(data["n"]), data["sets"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed family JSON: {exc}") from exc


@dataclass(frozen=True)
class RepresentativeTree:
    """pairs[i-1] = {a_i, b_i} is the 2-element representative of J_i."""

    n: int
    pairs: tuple[tuple[int, int], ...]

    def as_labeled_tree(self) -> LabeledTree:
        return LabeledTree(self.n, tuple(Edge(a, b, i + 1) for i, (a, b) in enumerate(self.pairs)))

    def to_json(self) -> dict:
        return {"edges": [list(p) for p in self.pairs]}


def is_representative_tree(family: SetFamily, tree: RepresentativeTree) -> bool:
    if tree.n != family.n or len(tree.pairs) != len(family.sets):
        return False
    for (a, b), s in zip(tree.pairs, family.sets):
        if a == b or a not in s or b not in s:
            return False
    return is_labeled_spanning_tree([tuple(p) for p in tree.pairs], family.n)


# -- bipartite matching -----------------------------------------------------------------------

def _matching(graph: Mapping[int, Iterable[int]], avoid=None) -> dict[int, int]:
    """Maximum matching of set indices into elements (augmenting paths, deterministic order)."""
    adj = {i: sorted(x for x in graph[i] if x != avoid) for i in sorted(graph)}
    owner: dict[int, int] = {}

    def augment(i, seen):
        for x in adj[i]:
            if x in seen:
                continue
            seen.add(x)
            if x not in owner or augment(owner[x], seen):
                owner[x] = i
                return True
        return False

    for i in adj:
        augment(i, set())
    return {i: x for x, i in owner.items()}


def _hall_violator(graph: Mapping[int, Iterable[int]], match: Mapping[int, int], avoid=None) -> Optional[frozenset]:
    """Sets reachable by alternating paths from an unmatched set index; None if all are matched.

    The returned S satisfies |N(S) - {avoid}| = |S| - 1.
    """
    free = [i for i in sorted(graph) if i not in match]
    if not free:
        return None
    owner = {x: i for i, x in match.items()}
    seen = {free[0]}
    stack = [free[0]]
    while stack:
        i = stack.pop()
        for x in graph[i]:
            if x == avoid:
                continue
            k = owner.get(x)
            if k is not None and k not in seen:
                seen.add(k)
                stack.append(k)
    return frozenset(seen)


def _condition_witness(graph: Mapping[int, frozenset], elements: Iterable[int]) -> Optional[frozenset]:
    need = len(graph)
    for j in sorted(elements):
        m = _matching(graph, avoid=j)
        if len(m) < need:
            return _hall_violator(graph, m, avoid=j)
    return None


def dragon_condition_witness(family: SetFamily) -> Optional[frozenset]:
    """None when the condition holds, otherwise S with |union of J_i, i in S| <= |S|."""
    return _condition_witness(family.graph(), range(1, family.n + 1))


def check_dragon_condition(family: SetFamily) -> bool:
    return dragon_condition_witness(family) is None


def sdr_avoiding(family: SetFamily, j: int) -> Optional[tuple[int, ...]]:
    if not 1 <= j <= family.n:
        raise ValidationError(f"j={j} outside [1, {family.n}]")
    graph = family.graph()
    m = _matching(graph, avoid=j)
    if len(m) < len(graph):
        return None
    return tuple(m[i] for i in sorted(graph))


# -- constructive (1) => (3) -------------------------------------------------------------------

def _holds(graph, elements) -> bool:
    return _condition_witness(graph, elements) is None


def _minimalize(graph: dict[int, frozenset], elements) -> dict[int, frozenset]:
    g = dict(graph)
    for i in sorted(g):
        for x in sorted(graph[i]):
            trial = dict(g)
            trial[i] = g[i] - {x}
            if _holds(trial, elements):
                g = trial
    return g


def _union(graph, index_set) -> frozenset:
    return frozenset().union(*(graph[i] for i in index_set)) if index_set else frozenset()


def maximal_tight_set(graph: Mapping[int, frozenset], elements) -> Optional[frozenset]:
    """Largest proper nonempty I with |G[I]| = |I| + 1 (ties: lexicographically smallest).

    For each avoided element j, G - j has a perfect matching M_j.  Tight sets are exactly the sets
    closed under i -> M_j^{-1}(x), x in G[i] - {j}, for some j; the largest proper ones are the
    complements of the backward closures of single set indices.
    """
    idx = sorted(graph)
    best = None
    for j in sorted(elements):
        m = _matching(graph, avoid=j)
        if len(m) < len(idx):
            raise DragonConditionError(_hall_violator(graph, m, avoid=j))
        owner = {x: i for i, x in m.items()}
        preds: dict[int, set] = {i: set() for i in idx}
        for i in idx:
            for x in graph[i]:
                if x != j:
                    preds[owner[x]].add(i)
        for i in idx:
            up = {i}
            stack = [i]
            while stack:
                k = stack.pop()
                for p in preds[k]:
                    if p not in up:
                        up.add(p)
                        stack.append(p)
            cand = tuple(k for k in idx if k not in up)
            if not cand:
                continue
            key = (-len(cand), cand)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    tight = frozenset(best[1])
    assert len(_union(graph, tight)) == len(tight) + 1
    return tight


def _forced(g, elements):
    pairs = {i: tuple(sorted(s)) for i, s in g.items()}
    pos = {x: k + 1 for k, x in enumerate(sorted(elements))}
    assert is_labeled_spanning_tree([(pos[a], pos[b]) for a, b in pairs.values()], len(elements))
    return pairs


def _tree(graph: dict[int, frozenset], elements: frozenset, minimalize: bool) -> dict[int, tuple[int, int]]:
    g = _minimalize(graph, elements) if minimalize else dict(graph)
    if sum(len(s) for s in g.values()) == 2 * len(g):
        return _forced(g, elements)
    tight = maximal_tight_set(g, elements)
    if tight is None:
        # no proper tight set: drop the first removable incidence and retry
        for i in sorted(g):
            for x in sorted(g[i]):
                trial = {**g, i: g[i] - {x}}
                if _holds(trial, elements):
                    return _tree(trial, elements, minimalize)
        raise AssertionError("no removable incidence in a non-forced graph")
    inner = _union(g, tight)
    rest = [i for i in sorted(g) if i not in tight]
    outer = frozenset(elements) - inner
    y = min(inner & _union(g, rest))
    t1 = _tree({i: g[i] for i in tight}, inner, minimalize)
    reduced = {i: g[i] & (outer | {y}) for i in rest}
    assert _holds(reduced, outer | {y})
    t2 = _tree(reduced, outer | {y}, minimalize)
    return {**t1, **t2}


def spanning_tree_representatives(family: SetFamily, strategy: str = "minimal") -> RepresentativeTree:
    """Pairs {a_i, b_i} in J_i forming a spanning tree on [n].

    ``strategy="minimal"`` first strips incidences greedily in lexicographic (i, x) order until
    the incidence graph is inclusion-minimal; ``"decompose"`` splits on a largest tight set
    (|G[I]| = |I| + 1) whenever one exists, glues the two sub-trees at the smallest shared
    element, and only removes incidences when no tight set is available.
    """
    if strategy not in ("minimal", "decompose"):
        raise ValidationError(f"unknown strategy {strategy!r}")
    witness = dragon_condition_witness(family)
    if witness is not None:
        raise DragonConditionError(witness)
    pairs = _tree(family.graph(), frozenset(range(1, family.n + 1)), strategy == "minimal")
    return RepresentativeTree(family.n, tuple(pairs[i] for i in sorted(pairs)))


def brute_force_tree_representatives(family: SetFamily) -> Optional[RepresentativeTree]:
    """Lexicographically first choice of pairs (product order over sorted 2-subsets) forming a tree."""
    n = family.n
    if n > BRUTE_FORCE_MAX_N:
        raise CapacityError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    choices = [list(itertools.combinations(sorted(s), 2)) for s in family.sets]
    if any(not c for c in choices):
        return None

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def dfs(k, parent, picked):
        if k == len(choices):
            return tuple(picked)
        for a, b in choices[k]:
            ra, rb = find(parent, a), find(parent, b)
            if ra == rb:
                continue
            nxt = list(parent)
            nxt[ra] = rb
            found = dfs(k + 1, nxt, picked + [(a, b)])
            if found is not None:
                return found
        return None

    pairs = dfs(0, list(range(n + 1)), [])
    return None if pairs is None else RepresentativeTree(n, pairs)


def family_from_columns(omega: Sequence[Sequence[int]]) -> SetFamily:
    """Column j of a 0-1 matrix (rows = n vertices, columns = n-1 edge labels) becomes J_j."""
    rows = len(omega)
    cols = len(omega[0]) if rows else 0
    return SetFamily.of(rows, [{i + 1 for i in range(rows) if omega[i][j]} for j in range(cols)])
