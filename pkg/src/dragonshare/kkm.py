"""Fuzzy preferences, balanced points and decision trees on the classical simplex of cuts.

A player's fuzzy preference over the p pieces of a cut is a partition of unity: piece i gets
weight max(0, fuzz + v_i - max_k v_k), normalised.  The balance map averages these columns over
players; at a point where it hits the barycenter, the 0-1 support matrix satisfies the dragon
marriage condition and yields a tree of 2-element representatives.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import least_squares

from .core import Cut, LabeledTree, SimplexPoint, root_tree
from .errors import DragonConditionError, SearchFailure, ValidationError
from .marriage import dragon_condition_witness, family_from_columns, spanning_tree_representatives
from .valuations import ValuationProfile

START_FUZZ = 2.0
FUZZ_RATIO = 0.7
MAX_STARTS = 16
EVALS_PER_START = 10_000
SCAN_SAMPLES = 10_000
SCAN_SEPARATION = 0.02
MAX_RESCANS = 8
LADDER_RATIO = 0.25
RESTART_BRANCHES = 3


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-8
    budget: int = 2_000_000
    eps_fuzz: float = 1e-3
    eps_sign: float = 1e-9
    seed: int = 42

    def __post_init__(self):
        if self.tol <= 0 or self.budget <= 0:
            raise ValidationError("tol and budget must be positive")
        if self.eps_fuzz <= 0:
            raise ValidationError("eps_fuzz must be positive")
        if self.eps_sign < 0:
            raise ValidationError("eps_sign must be nonnegative")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data) -> "SolverParams":
        known = {k: data[k] for k in ("tol", "budget", "eps_fuzz", "eps_sign", "seed") if k in data}
        if "budget" in known:
            known["budget"] = int(known["budget"])
        if "seed" in known:
            known["seed"] = int(known["seed"])
        return cls(**known)


# -- fuzzy weights ----------------------------------------------------------------------------

def functional_weights(values: np.ndarray, fuzz: float) -> np.ndarray:
    """Column-wise fuzzy preferences from a (..., pieces, players) value array.

    The normaliser is summed in sorted order, so permuting the pieces permutes the output
    bit-for-bit.
    """
    v = np.asarray(values, dtype=float)
    w = np.maximum(0.0, fuzz + (v - v.max(axis=-2, keepdims=True)))
    return w / np.sort(w, axis=-2).sum(axis=-2, keepdims=True)


def functional_weights_grad(values: np.ndarray, dvalues: np.ndarray, fuzz: float) -> np.ndarray:
    """Derivative of ``functional_weights`` given d values / d params (pieces, players, params)."""
    v = np.asarray(values, dtype=float)
    p, n = v.shape
    top = v.argmax(axis=0)
    m = v - v[top, np.arange(n)]
    w = np.maximum(0.0, fuzz + m)
    dm = dvalues - dvalues[top, np.arange(n), :][None, :, :]
    dw = np.where((fuzz + m > 0.0)[:, :, None], dm, 0.0)
    s = w.sum(axis=0)
    ds = dw.sum(axis=0)
    return dw / s[None, :, None] - w[:, :, None] * ds[None, :, :] / (s * s)[None, :, None]


@dataclass(frozen=True)
class FunctionalPreferenceMatrix:
    """Fuzzy preferences f[piece, player] as a function of the (p - 1) sorted cut points.

    ``rescale(fuzz)`` returns the same preference model with another margin width; the balanced
    point search uses it for continuation when present.
    """

    n_players: int
    n_pieces: int
    fuzz: float
    evaluator: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    rescale: Optional[Callable[[float], "FunctionalPreferenceMatrix"]] = field(default=None, repr=False)
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __call__(self, cut_points) -> np.ndarray:
        return self.evaluator(np.asarray(cut_points, dtype=float))

    def many(self, cut_points) -> np.ndarray:
        """Evaluate a stack of cuts, (N, p - 1) -> (N, pieces, players)."""
        x = np.asarray(cut_points, dtype=float)
        if self.batch is not None:
            return self.batch(x)
        return np.stack([self(row) for row in x]) if len(x) else np.zeros((0, self.n_pieces, self.n_players))

    def balance(self, cut_points) -> np.ndarray:
        return self(cut_points).mean(axis=1)


def functional_from_valuations(profile: ValuationProfile, eps_fuzz: float, n_pieces: Optional[int] = None) -> FunctionalPreferenceMatrix:
    """Fuzzy preferences of a valuation profile over ``n_pieces`` tiles (default: players + 1).

    Margins are measured in units of each player's total absolute mass, so rescaling one
    player's density leaves their weights unchanged.
    """
    if not eps_fuzz > 0:
        raise ValidationError("eps_fuzz must be positive")
    p = profile.n_players + 1 if n_pieces is None else n_pieces
    profile = profile.normalized()

    def evaluate(x):
        return functional_weights(profile.tile_values(x), eps_fuzz)

    def jac(x):
        return functional_weights_grad(profile.tile_values(x), profile.tile_value_grad(x), eps_fuzz)

    return FunctionalPreferenceMatrix(
        profile.n_players, p, eps_fuzz, evaluate, jac,
        rescale=lambda f: functional_from_valuations(profile, f, p),
        batch=lambda xs: functional_weights(profile.tile_values_batch(xs), eps_fuzz),
    )


# -- balanced point ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BalancedPoint:
    point: SimplexPoint
    residual: float
    fuzz: float
    evaluations: int = 0

    @property
    def cut(self) -> Cut:
        return self.point.to_cut()

    @property
    def cut_points(self) -> np.ndarray:
        return np.asarray(self.cut.points)


def balance_residual(fprefs: FunctionalPreferenceMatrix, cut_points) -> float:
    h = fprefs.balance(cut_points)
    return float(np.max(np.abs(h - 1.0 / fprefs.n_pieces)))


class _Exhausted(Exception):
    pass


class _Tracker:
    """Counts evaluations against the budget and remembers the best point per fuzz level."""

    def __init__(self, budget: int, target: Optional["FunctionalPreferenceMatrix"] = None):
        self.budget = budget
        self.used = 0
        self.target = target
        self.best: Optional[tuple[float, np.ndarray]] = None
        self.last: Optional[np.ndarray] = None

    def charge(self, k: int = 1):
        self.used += k
        if self.used > self.budget:
            raise _Exhausted

    def note(self, fp, y: np.ndarray, res: float):
        """Remember the last point looked at and the best one seen at the target width."""
        self.last = y
        if fp is self.target and _better((res, y), self.best):
            self.best = (res, y)


def _point_from_cut(x: np.ndarray) -> SimplexPoint:
    b = np.concatenate(([0.0], x, [1.0]))
    lengths = np.diff(b)
    lengths[-1] = 1.0 - math.fsum(lengths[:-1])
    lengths = np.maximum(lengths, 0.0)
    return SimplexPoint(tuple(lengths.tolist()))


def _refine(fp: FunctionalPreferenceMatrix, y0: np.ndarray, tracker: _Tracker, max_nfev: int) -> tuple[np.ndarray, float]:
    """Local solve of balance(sorted y) = barycenter over the cube [0, 1]^(p-1)."""
    p = fp.n_pieces
    if p == 1:
        return y0, balance_residual(fp, y0)
    target = 1.0 / p

    def fun(y):
        tracker.charge()
        ys = np.sort(y)
        v = fp.balance(ys) - target
        tracker.note(fp, ys, float(np.max(np.abs(v))))
        return v

    jac = None
    if fp.jacobian is not None:
        def jac(y):
            order = np.argsort(y, kind="stable")
            js = fp.jacobian(y[order]).mean(axis=1)
            out = np.empty_like(js)
            out[:, order] = js
            return out

    y0 = np.clip(np.asarray(y0, dtype=float), 0.0, 1.0)
    try:
        sol = least_squares(fun, y0, jac=jac if jac is not None else "2-point", bounds=(0.0, 1.0),
                            method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
        y = np.sort(sol.x)
    except _Exhausted:
        raise
    return y, balance_residual(fp, y)


def _grid(p: int, resolution: int) -> np.ndarray:
    """Cut points of every barycentric grid point with ``resolution`` steps per coordinate."""
    pts = []

    def rec(prefix, left, slots):
        if slots == 1:
            pts.append(prefix + [left])
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k, slots - 1)

    rec([], resolution, p)
    lengths = np.asarray(pts, dtype=float) / resolution
    return np.cumsum(lengths, axis=1)[:, :-1]


def grid_resolution(n_pieces: int, budget: int) -> int:
    """33 points per coordinate up to 3 pieces, halved for every further dimension."""
    res = 32 if n_pieces <= 3 else max(2, 32 >> (n_pieces - 3))
    while res > 2 and math.comb(res + n_pieces - 1, n_pieces - 1) > budget // 2:
        res //= 2
    return res


def _better(a: tuple[float, np.ndarray], b: Optional[tuple[float, np.ndarray]]) -> bool:
    if b is None:
        return True
    if a[0] != b[0]:
        return a[0] < b[0]
    return tuple(a[1]) < tuple(b[1])


def _scan_points(p: int, budget: int, seed: int) -> np.ndarray:
    """Grid points and seeded simplex points: uniform ones, ones crowded towards the boundary
    (short tiles), and ones on random boundary faces (degenerate tiles)."""
    rng = np.random.default_rng(seed)
    lengths = np.vstack([rng.dirichlet(np.ones(p), size=SCAN_SAMPLES),
                         rng.dirichlet(np.full(p, 0.3), size=SCAN_SAMPLES)])
    face = rng.dirichlet(np.ones(p), size=SCAN_SAMPLES // 2)
    keep = rng.random(face.shape) < 0.5
    keep[np.arange(len(face)), rng.integers(0, p, len(face))] = True
    face = np.where(keep, face, 0.0)
    face /= face.sum(axis=1, keepdims=True)
    pts = np.cumsum(np.vstack([lengths, face]), axis=1)[:, :-1]
    return np.vstack([_grid(p, grid_resolution(p, budget)), np.minimum(pts, 1.0)])


def _scan(fp: FunctionalPreferenceMatrix, tracker: _Tracker, keep: int, seed: int) -> list[np.ndarray]:
    """Up to ``keep`` mutually separated starting points with the smallest balance residual.

    Ties are broken lexicographically so the choice is deterministic.
    """
    p = fp.n_pieces
    cands = _scan_points(p, tracker.budget, seed)
    cands = cands[:max(1, tracker.budget - tracker.used)]
    tracker.charge(len(cands))
    res = np.max(np.abs(fp.many(cands).mean(axis=2) - 1.0 / p), axis=1)
    order = np.lexsort(tuple(cands[:, k] for k in reversed(range(p - 1))) + (res,))
    cands, res = cands[order], res[order]
    tracker.note(fp, cands[0], float(res[0]))
    alive = np.ones(len(cands), dtype=bool)
    picked: list[np.ndarray] = []
    while len(picked) < keep and alive.any():
        z = cands[int(np.argmax(alive))]
        picked.append(z)
        alive &= np.max(np.abs(cands - z), axis=1) > SCAN_SEPARATION
    return picked


def _roots(fp, tracker, tol, seed, keep=MAX_STARTS) -> list[np.ndarray]:
    """Distinct local solutions reached from the best scanned points."""
    found: list[np.ndarray] = []
    for y0 in _scan(fp, tracker, keep, seed):
        y, res = _refine(fp, y0, tracker, EVALS_PER_START)
        if res <= tol and all(np.max(np.abs(y - z)) > 1e-6 for z in found):
            found.append(y)
    return found


def _follow(fprefs: FunctionalPreferenceMatrix, y: np.ndarray, fuzz: float, tracker: _Tracker, tol: float,
            seed: int, restarts: list[int]) -> Optional[np.ndarray]:
    """Track a balanced point from margin width ``fuzz`` down to ``fprefs.fuzz``.

    The step ratio shrinks when a warm start fails to converge and grows back after successes.
    When the ratio gets too close to 1 (a fold: the tracked solution disappears) the scan is
    rerun at that width and the new solutions, nearest first, are tracked in turn.
    ``restarts`` is a shared one-element counter bounding the total number of rescans.
    """
    ratio = FUZZ_RATIO
    target = fprefs.fuzz
    while fuzz > target:
        nxt = max(fuzz * ratio, target)
        fp = fprefs if nxt == target else fprefs.rescale(nxt)
        y2, res = _refine(fp, y, tracker, EVALS_PER_START)
        if res <= tol:
            y, fuzz = y2, nxt
            ratio = max(ratio * ratio, 0.25)
            continue
        ratio = math.sqrt(ratio)
        if ratio > 0.999:
            if restarts[0] == 0:
                return None
            restarts[0] -= 1
            cands = _roots(fp, tracker, tol, seed)
            cands.sort(key=lambda z: (float(np.max(np.abs(z - y))), tuple(z)))
            for z in cands[:RESTART_BRANCHES]:
                out = _follow(fprefs, z, nxt, tracker, tol, seed, restarts)
                if out is not None:
                    return out
            return None
    return y


def find_balanced_point(fprefs: FunctionalPreferenceMatrix, tol: float = 1e-8, budget: int = 2_000_000,
                        seed: int = 42, start=None, start_fuzz: Optional[float] = None) -> BalancedPoint:
    """Point where the player-averaged fuzzy preferences equal (1/p, ..., 1/p), within ``tol``.

    Stages, stopping at the first point within tolerance:

    1. warm start from ``start`` (cut points), if given; when ``start_fuzz`` is also given,
       ``start`` is taken to be balanced at that wider margin and is tracked down;
    2. continuation in the margin width: on a ladder of widths starting wide (where the map is
       smooth and solutions are easy to hit), collect balanced points by scanning and local
       solves, then track each one down to ``fprefs.fuzz``;
    3. barycentric grid scan at the target width, local refinement from the best grid points
       and from seeded random points.

    Raises ``SearchFailure`` carrying the best point when the budget runs out.
    """
    if tol <= 0 or budget <= 0:
        raise ValidationError("tol and budget must be positive")
    p = fprefs.n_pieces
    tracker = _Tracker(int(budget), fprefs)
    best: Optional[tuple[float, np.ndarray]] = None

    def consider(y, res):
        nonlocal best
        cand = (res, np.asarray(y, dtype=float))
        if _better(cand, best):
            best = cand
        return res <= tol

    def done():
        return BalancedPoint(_point_from_cut(best[1]), best[0], fprefs.fuzz, tracker.used)

    try:
        if p == 1:
            consider(np.zeros(0), balance_residual(fprefs, np.zeros(0)))
            return done()
        if start is not None:
            y0 = np.asarray(start, dtype=float)
            if start_fuzz is not None and fprefs.rescale is not None and start_fuzz > fprefs.fuzz:
                y = _follow(fprefs, y0, start_fuzz, tracker, tol, seed, [2])
                if y is not None and consider(y, balance_residual(fprefs, y)):
                    return done()
            y, res = _refine(fprefs, y0, tracker, EVALS_PER_START)
            if consider(y, res):
                return done()

        if fprefs.rescale is not None and fprefs.fuzz < START_FUZZ:
            restarts = [MAX_RESCANS]
            fuzz = START_FUZZ
            while fuzz > fprefs.fuzz:
                for y0 in _roots(fprefs.rescale(fuzz), tracker, tol, seed, keep=2 * MAX_STARTS):
                    y = _follow(fprefs, y0, fuzz, tracker, tol, seed, restarts)
                    if y is not None and consider(y, balance_residual(fprefs, y)):
                        return done()
                fuzz *= LADDER_RATIO

        starts = _scan(fprefs, tracker, MAX_STARTS, seed)
        for y0 in starts:
            y, res = _refine(fprefs, y0, tracker, EVALS_PER_START)
            if consider(y, res):
                return done()
    except _Exhausted:
        if tracker.best is not None:
            consider(tracker.best[1], tracker.best[0])
        elif tracker.last is not None:
            consider(tracker.last, balance_residual(fprefs, tracker.last))
    if best is None:
        raise SearchFailure("budget exhausted before any evaluation")
    bp = done()
    raise SearchFailure(f"no balanced point within tol={tol:g}; best residual {bp.residual:.3g}", best=bp)


# -- sign matrix, omega condition, tree -------------------------------------------------------

@dataclass(frozen=True)
class SignMatrix:
    """omega[i][j] = 1 iff f[i, j] > eps_sign; rows are pieces, columns players."""

    omega: tuple[tuple[int, ...], ...]
    eps_sign: float

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.omega), len(self.omega[0]) if self.omega else 0)

    def transposed(self) -> "SignMatrix":
        return SignMatrix(tuple(zip(*self.omega)), self.eps_sign)

    def column_support(self, j: int) -> frozenset:
        return frozenset(i + 1 for i, row in enumerate(self.omega) if row[j - 1])

    def to_json(self) -> list[list[int]]:
        return [list(r) for r in self.omega]


def sign_matrix_of(f: np.ndarray, eps_sign: float) -> SignMatrix:
    if eps_sign < 0:
        raise ValidationError("eps_sign must be nonnegative")
    f = np.asarray(f, dtype=float)
    return SignMatrix(tuple(tuple(int(x > eps_sign) for x in row) for row in f), eps_sign)


def sign_matrix(fprefs: FunctionalPreferenceMatrix, point, eps_sign: float) -> SignMatrix:
    x = point.cut_points if isinstance(point, BalancedPoint) else np.asarray(point, dtype=float)
    return sign_matrix_of(fprefs(x), eps_sign)


def check_omega_condition(omega: SignMatrix) -> tuple[bool, Optional[frozenset]]:
    """(True, None) if every set S of columns has |Omega[S]| >= |S| + 1, else (False, S)."""
    rows, cols = omega.shape
    if rows != cols + 1:
        raise ValidationError(f"sign matrix must be (k+1) x k, got {rows} x {cols}")
    witness = dragon_condition_witness(family_from_columns(omega.omega))
    return (witness is None, witness)


def tree_from_omega(omega: SignMatrix, strategy: str = "minimal") -> LabeledTree:
    """Vertices are the rows, edge j is labelled by column j."""
    family = family_from_columns(omega.omega)
    return spanning_tree_representatives(family, strategy).as_labeled_tree()


def check_fuzz(profile: ValuationProfile, params: SolverParams, n_pieces: int) -> None:
    """Hungry profiles need eps_fuzz <= 1/(2p) so degenerate tiles never get weight; eps_sign
    must stay below eps_fuzz/(2p) so that genuine supports survive binarisation."""
    if all(d.hungry for d in profile.densities) and params.eps_fuzz > 1.0 / (2 * n_pieces):
        raise ValidationError(f"eps_fuzz={params.eps_fuzz:g} exceeds the hungry bound 1/(2p)={1 / (2 * n_pieces):g}")
    if not params.eps_sign < params.eps_fuzz / (2 * n_pieces):
        raise ValidationError(f"eps_sign={params.eps_sign:g} must be below eps_fuzz/(2p)")


def solve_dragon_kkm(profile: ValuationProfile, params: SolverParams = SolverParams(), start=None) -> tuple[BalancedPoint, LabeledTree]:
    """n players over n + 1 pieces: balanced cut plus a player-labelled tree on the pieces."""
    check_fuzz(profile, params, profile.n_players + 1)
    fprefs = functional_from_valuations(profile, params.eps_fuzz)
    bp = find_balanced_point(fprefs, params.tol, params.budget, params.seed, start=start)
    omega = sign_matrix(fprefs, bp, params.eps_sign)
    ok, witness = check_omega_condition(omega)
    if not ok:
        raise DragonConditionError(witness, f"sign matrix fails the dragon condition at residual {bp.residual:.3g}")
    return bp, tree_from_omega(omega)


def bijections_from_tree(tree: LabeledTree) -> dict[int, dict[int, int]]:
    """For each root i: edge label j -> the endpoint of edge j farther from i."""
    out = {}
    for root in range(1, tree.vertex_count + 1):
        parent = root_tree(tree, root)
        out[root] = {e.label: k for k, e in sorted(parent.items(), key=lambda kv: kv[1].label)}
    return out
