"""Partition/allocations of [0, 1] into 2r - 1 tiles and r boxes, and the chessboard complex.

A long cut has 2r - 2 points, hence 2r - 1 tiles; an allocation puts every tile into one of r
boxes, at most one non-degenerate tile per box.  Moving degenerate tiles between boxes does not
change the division, and the equivalence classes are the points of the chessboard complex: rooks
on an r x (2r - 1) board (box, tile), weighted by tile length.

Classical preferences (on cuts with r - 1 points) are lifted to boxes by collapsing the long cut
to a classical one, handing each non-degenerate tile's weight to the box holding it, and splitting
the weight of degenerate tiles evenly over the empty boxes.  The lifted weights depend only on box
contents, which makes them equivariant under renumbering of the boxes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import STRUCT_TOL, Cut, tiles_from_cut
from .errors import CapacityError, ContractError, DomainError, ValidationError
from .kkm import FunctionalPreferenceMatrix
from .valuations import equivalent_cut_pairs

MAX_FACE_R = 6


@dataclass(frozen=True)
class PartitionAllocation:
    """A long cut (2r - 2 points) and the box (1..r) of each of its 2r - 1 tiles."""

    cut: Cut
    alloc: tuple[int, ...]

    def __post_init__(self):
        cut = self.cut if isinstance(self.cut, Cut) else Cut(tuple(self.cut))
        alloc = tuple(int(a) for a in self.alloc)
        object.__setattr__(self, "cut", cut)
        object.__setattr__(self, "alloc", alloc)
        if len(alloc) != len(cut) + 1 or len(alloc) % 2 == 0:
            raise ValidationError(f"need 2r - 1 tiles and 2r - 2 cut points, got {len(alloc)} and {len(cut)}")
        if any(not 1 <= a <= self.r for a in alloc):
            raise ValidationError(f"box numbers must lie in [1, {self.r}]")

    @property
    def r(self) -> int:
        return (len(self.alloc) + 1) // 2

    def tiles(self):
        return tiles_from_cut(self.cut)

    def box_tiles(self) -> dict[int, Optional[int]]:
        """Box -> index (1-based) of its non-degenerate tile, or None for an empty box."""
        out: dict[int, Optional[int]] = {b: None for b in range(1, self.r + 1)}
        for i, t in enumerate(self.tiles(), start=1):
            if not t.degenerate:
                out[self.alloc[i - 1]] = i
        return out

    def to_json(self) -> dict:
        return {"cut": self.cut.to_json(), "alloc": list(self.alloc)}

    @classmethod
    def from_json(cls, data) -> "PartitionAllocation":
        try:
            return cls(Cut.from_json(data["cut"]), tuple(data["alloc"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed partition/allocation JSON: {exc}") from exc


def is_admissible(pa: PartitionAllocation) -> bool:
    seen = set()
    for t, box in zip(pa.tiles(), pa.alloc):
        if t.degenerate:
            continue
        if box in seen:
            return False
        seen.add(box)
    return True


def _require_admissible(pa: PartitionAllocation) -> None:
    if not is_admissible(pa):
        raise ValidationError(f"allocation {pa.alloc} puts two non-degenerate tiles into one box")


def equivalent(pa1: PartitionAllocation, pa2: PartitionAllocation) -> bool:
    """Same cut, and the allocations differ only on degenerate tiles."""
    if len(pa1.cut) != len(pa2.cut) or any(abs(a - b) > STRUCT_TOL for a, b in zip(pa1.cut.points, pa2.cut.points)):
        raise DomainError("equivalence is only defined for partition/allocations with the same cut")
    return all(t.degenerate or a == b for t, a, b in zip(pa1.tiles(), pa1.alloc, pa2.alloc))


@dataclass(frozen=True)
class Rook:
    box: int
    tile: int
    w: float


@dataclass(frozen=True)
class ChessboardPoint:
    """Non-attacking rooks on the r x (2r - 1) board with positive weights summing to 1."""

    r: int
    rooks: tuple[Rook, ...]

    def __post_init__(self):
        rooks = tuple(sorted(self.rooks, key=lambda k: k.tile))
        object.__setattr__(self, "rooks", rooks)
        if not rooks:
            raise ValidationError("a chessboard point needs at least one rook")
        if len({k.box for k in rooks}) != len(rooks) or len({k.tile for k in rooks}) != len(rooks):
            raise ValidationError("rooks attack each other")
        for k in rooks:
            if not (1 <= k.box <= self.r and 1 <= k.tile <= 2 * self.r - 1):
                raise ValidationError(f"rook {k} off the board")
            if not k.w > 0:
                raise ValidationError("rook weights must be positive")
        if abs(math.fsum(k.w for k in rooks) - 1.0) > STRUCT_TOL:
            raise ValidationError("rook weights must sum to 1")

    def to_json(self) -> dict:
        return {"rooks": [{"box": k.box, "tile": k.tile, "w": k.w} for k in self.rooks]}

    @classmethod
    def from_json(cls, data, r: int) -> "ChessboardPoint":
        try:
            return cls(r, tuple(Rook(int(k["box"]), int(k["tile"]), float(k["w"])) for k in data["rooks"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed chessboard point JSON: {exc}") from exc


def to_chessboard_point(pa: PartitionAllocation) -> ChessboardPoint:
    _require_admissible(pa)
    rooks = tuple(Rook(box, i, t.length) for i, (t, box) in enumerate(zip(pa.tiles(), pa.alloc), start=1)
                  if not t.degenerate)
    return ChessboardPoint(pa.r, rooks)


def canonical_alloc(r: int, placed: dict[int, int]) -> tuple[int, ...]:
    """Allocation extending ``placed`` (tile -> box): the remaining tiles fill the empty boxes in
    increasing order, left to right, and any tiles left over go to box 1."""
    empty = iter(b for b in range(1, r + 1) if b not in placed.values())
    alloc = []
    for i in range(1, 2 * r):
        if i in placed:
            alloc.append(placed[i])
        else:
            alloc.append(next(empty, 1))
    return tuple(alloc)


def _cut_from_columns(r: int, columns: Sequence[int], ends: Sequence[float]) -> Cut:
    """Long cut whose tile ``columns[k]`` ends at ``ends[k]`` and whose other tiles are empty."""
    right = {}
    for c, e in zip(columns, ends):
        right[c] = e
    pts, last = [], 0.0
    for i in range(1, 2 * r - 1):
        last = right.get(i, last)
        pts.append(last)
    return Cut(tuple(pts))


def from_chessboard_point(cp: ChessboardPoint) -> PartitionAllocation:
    """Canonical partition/allocation of the class described by ``cp``."""
    ends, acc = [], 0.0
    for k in cp.rooks[:-1]:
        acc += k.w
        ends.append(min(acc, 1.0))
    ends.append(1.0)
    cut = _cut_from_columns(cp.r, [k.tile for k in cp.rooks], ends)
    return PartitionAllocation(cut, canonical_alloc(cp.r, {k.tile: k.box for k in cp.rooks}))


def canonical_form(pa: PartitionAllocation) -> PartitionAllocation:
    """Same cut, degenerate tiles placed by the canonical rule."""
    _require_admissible(pa)
    placed = {i: b for i, (t, b) in enumerate(zip(pa.tiles(), pa.alloc), start=1) if not t.degenerate}
    return PartitionAllocation(pa.cut, canonical_alloc(pa.r, placed))


@dataclass(frozen=True)
class Permutation:
    """Box renumbering; ``sigma[b - 1]`` is the image of box b."""

    sigma: tuple[int, ...]

    def __post_init__(self):
        sigma = tuple(int(s) for s in self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if sorted(sigma) != list(range(1, len(sigma) + 1)):
            raise ValidationError(f"{sigma} is not a permutation")

    def __call__(self, b: int) -> int:
        return self.sigma[b - 1]

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other."""
        return Permutation(tuple(self(other(b)) for b in range(1, len(self.sigma) + 1)))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.sigma)
        for b, s in enumerate(self.sigma, start=1):
            inv[s - 1] = b
        return Permutation(tuple(inv))

    @classmethod
    def identity(cls, r: int) -> "Permutation":
        return cls(tuple(range(1, r + 1)))


def act(sigma: Permutation, pa: PartitionAllocation) -> PartitionAllocation:
    if len(sigma.sigma) != pa.r:
        raise ValidationError("permutation size does not match the number of boxes")
    return PartitionAllocation(pa.cut, tuple(sigma(a) for a in pa.alloc))


def enumerate_maximal_faces(r: int) -> list[tuple[tuple[int, int], ...]]:
    """All placements of r non-attacking rooks, as ((box, tile), ...) sorted by tile."""
    if r < 1:
        raise ValidationError("r must be positive")
    if r > MAX_FACE_R:
        raise CapacityError(f"face enumeration limited to r <= {MAX_FACE_R}")
    faces = []
    for cols in itertools.combinations(range(1, 2 * r), r):
        for boxes in itertools.permutations(range(1, r + 1)):
            faces.append(tuple(zip(boxes, cols)))
    return faces


def canonical_face(r: int) -> tuple[tuple[int, int], ...]:
    """Box k holds tile k; tiles r + 1, ..., 2r - 1 are empty and sit at the right end."""
    return tuple((k, k) for k in range(1, r + 1))


def non_attacking(face) -> bool:
    return len({b for b, _ in face}) == len(face) == len({t for _, t in face})


def face_point(face, cut_points) -> PartitionAllocation:
    """Point of a maximal face: the rook tiles get the classical tiles of ``cut_points`` in order."""
    r = len(face)
    rooks = sorted(face, key=lambda bt: bt[1])
    ends = [float(x) for x in cut_points] + [1.0]
    cut = _cut_from_columns(r, [t for _, t in rooks], ends)
    return PartitionAllocation(cut, canonical_alloc(r, {t: b for b, t in rooks}))


# -- collapse ---------------------------------------------------------------------------------

CollapseRule = Callable[[int, int], Sequence[int]]


def repeat_last(s: int, r: int) -> tuple[int, ...]:
    """Degenerate classical slots s, ..., r - 1: the last cut point is repeated."""
    return tuple(range(s, r))


def right_end(s: int, r: int) -> tuple[int, ...]:
    return tuple(range(s + 1, r + 1))


def left_end(s: int, r: int) -> tuple[int, ...]:
    return tuple(range(1, r - s + 1))


def slot_rule(seed: int) -> CollapseRule:
    """A seeded arbitrary (but fixed) choice of degenerate slots for every s."""
    def rule(s: int, r: int) -> tuple[int, ...]:
        rng = np.random.default_rng([seed, s, r])
        return tuple(sorted(int(k) + 1 for k in rng.choice(r, size=r - s, replace=False)))
    return rule


def collapse(pa: PartitionAllocation, rule: CollapseRule = repeat_last) -> tuple[Cut, dict[int, int]]:
    """Classical cut (r - 1 points) with the same non-degenerate tiles in the same order, plus
    the map from each non-degenerate classical tile to the box holding it.

    With fewer than r non-degenerate tiles, ``rule(s, r)`` picks which of the r classical slots
    are degenerate.
    """
    _require_admissible(pa)
    r = pa.r
    real = [(t, b) for t, b in zip(pa.tiles(), pa.alloc) if not t.degenerate]
    deg = set(rule(len(real), r))
    if len(deg) != r - len(real) or any(not 1 <= k <= r for k in deg):
        raise ValidationError(f"collapse rule returned invalid degenerate slots {sorted(deg)}")
    it = iter(real)
    ends, origin, last = [], {}, 0.0
    for k in range(1, r + 1):
        if k not in deg:
            t, b = next(it)
            last = t.hi
            origin[k] = b
        ends.append(last)
    return Cut(tuple(ends[:-1])), origin


# -- lifting ----------------------------------------------------------------------------------

def lift_matrix(classical: np.ndarray, origin: dict[int, int], r: int) -> np.ndarray:
    """Box weights from classical tile weights (rows = classical slots, columns = players)."""
    g = np.asarray(classical, dtype=float)
    out = np.zeros((r, g.shape[1]))
    for k, b in origin.items():
        out[b - 1] = g[k - 1]
    deg = [k - 1 for k in range(1, r + 1) if k not in origin]
    if deg:
        empty = [b - 1 for b in range(1, r + 1) if b not in origin.values()]
        total = np.sort(g[deg], axis=0).sum(axis=0)
        out[empty] = total / len(empty)
    return out


def ppe_violation(classical: FunctionalPreferenceMatrix, pairs, tol: float = 0.0):
    """First pair of equivalent cuts on which the fuzzy weights disagree, or None.

    Agreement means: equal weights on corresponding non-degenerate tiles and equal total weight
    on degenerate tiles, for every player.
    """
    for a, b in pairs:
        fa, fb = classical(np.asarray(a.points)), classical(np.asarray(b.points))
        da = np.array([t.degenerate for t in tiles_from_cut(a)])
        db = np.array([t.degenerate for t in tiles_from_cut(b)])
        if np.max(np.abs(fa[~da] - fb[~db]), initial=0.0) > tol:
            return a, b
        if np.max(np.abs(fa[da].sum(axis=0) - fb[db].sum(axis=0)), initial=0.0) > tol:
            return a, b
    return None


@dataclass(frozen=True)
class LiftedPreferences:
    """Equivariant box preferences obtained from classical r-piece preferences."""

    classical: FunctionalPreferenceMatrix
    rule: CollapseRule = field(default=repeat_last, repr=False)

    @property
    def r(self) -> int:
        return self.classical.n_pieces

    @property
    def n_players(self) -> int:
        return self.classical.n_players

    @property
    def fuzz(self) -> float:
        return self.classical.fuzz

    def __call__(self, pa: PartitionAllocation) -> np.ndarray:
        """Weights, rows = boxes, columns = players."""
        if pa.r != self.r:
            raise ValidationError(f"expected {self.r} boxes, got {pa.r}")
        y, origin = collapse(pa, self.rule)
        return lift_matrix(self.classical(np.asarray(y.points)), origin, self.r)

    def balance(self, pa: PartitionAllocation) -> np.ndarray:
        return self(pa).mean(axis=1)

    def rescale(self, fuzz: float) -> "LiftedPreferences":
        if self.classical.rescale is None:
            raise ValidationError("classical preferences cannot change their margin width")
        return LiftedPreferences(self.classical.rescale(fuzz), self.rule)

    def on_face(self, face) -> FunctionalPreferenceMatrix:
        """The lifted weights restricted to a maximal face, as a function of r - 1 cut points.

        Along the face the box holding the k-th rook tile sees exactly the classical weight of
        tile k, so the classical Jacobian and batch evaluator are reused with rows permuted.
        """
        if len(face) != self.r or not non_attacking(face):
            raise ValidationError("not a maximal face")
        rows = [b - 1 for b, _ in sorted(face, key=lambda bt: bt[1])]
        inv = np.argsort(rows)
        cl = self.classical

        def evaluate(y):
            return self(face_point(face, y))

        jac = None
        if cl.jacobian is not None:
            def jac(y):
                return cl.jacobian(y)[inv]

        batch = None
        if cl.batch is not None:
            def batch(ys):
                return cl.batch(ys)[:, inv]

        rescale = None
        if cl.rescale is not None:
            def rescale(f):
                return self.rescale(f).on_face(face)

        return FunctionalPreferenceMatrix(cl.n_players, self.r, cl.fuzz, evaluate, jac, rescale=rescale, batch=batch)


def lift_preferences(classical: FunctionalPreferenceMatrix, rule: CollapseRule = repeat_last,
                     check_samples: int = 100, seed: int = 0) -> LiftedPreferences:
    """Lift classical preferences over r tiles to boxes, after checking partition equivalence on
    ``check_samples`` seeded pairs of equivalent cuts (ContractError on a violation)."""
    if check_samples:
        pairs = equivalent_cut_pairs(np.random.default_rng(seed), classical.n_pieces, check_samples)
        bad = ppe_violation(classical, pairs)
        if bad is not None:
            raise ContractError(f"preferences depend on the placement of degenerate tiles: "
                                f"cuts {bad[0].points} and {bad[1].points}")
    return LiftedPreferences(classical, rule)


# -- generators -------------------------------------------------------------------------------

def random_partition_allocation(rng: np.random.Generator, r: int, n_real: Optional[int] = None) -> PartitionAllocation:
    """Seeded admissible partition/allocation with ``n_real`` (default random) non-degenerate tiles."""
    s = int(rng.integers(1, r + 1)) if n_real is None else n_real
    lengths = rng.dirichlet(np.ones(s))
    ends = np.minimum(np.cumsum(lengths), 1.0)
    ends[-1] = 1.0
    if np.any(np.diff(np.concatenate(([0.0], ends))) <= 0.0):
        return random_partition_allocation(rng, r, n_real)
    boxes = rng.permutation(r)[:s] + 1
    return _layout(rng, r, [float(e) for e in ends[:-1]], [int(b) for b in boxes])


def _layout(rng, r, inner_ends, boxes) -> PartitionAllocation:
    s = len(boxes)
    columns = sorted(int(c) + 1 for c in rng.choice(2 * r - 1, size=s, replace=False))
    cut = _cut_from_columns(r, columns, list(inner_ends) + [1.0])
    placed = dict(zip(columns, boxes))
    alloc = tuple(placed.get(i, int(rng.integers(1, r + 1))) for i in range(1, 2 * r))
    return PartitionAllocation(cut, alloc)


def relayout(rng: np.random.Generator, pa: PartitionAllocation) -> PartitionAllocation:
    """Same non-degenerate tiles in the same boxes, degenerate tiles moved and re-boxed at random."""
    real = [(t, b) for t, b in zip(pa.tiles(), pa.alloc) if not t.degenerate]
    return _layout(rng, pa.r, [t.hi for t, _ in real[:-1]], [b for _, b in real])
