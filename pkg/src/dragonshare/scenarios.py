"""End-to-end solvers for the two dragon scenarios, their resolvers, and the envy verifier.

Piece-grab: r - 1 players, r boxes; the dragon takes one box and every player takes one of the
two boxes named by their tree edge.  Player-swallow: r + 1 players, r boxes; the dragon eats one
player and every survivor takes the box labelling the edge towards the eaten player.

Both solvers search for a balanced point of the lifted fuzzy preferences on one maximal face of
the chessboard complex, read off the sign matrix, build the tree, and then check every dragon
action against the valuations.  If some envy margin is below ``-envy_tol`` the margin width is
shrunk tenfold and the balanced point tracked down to it, which narrows the gap between
positive weight and exact preference.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .chessboard import (CollapseRule, PartitionAllocation, canonical_face, collapse, face_point,
                         lift_preferences, repeat_last)
from .core import Assignment, Cut, Edge, LabeledTree, Tile, root_tree, tiles_from_cut
from .errors import DragonConditionError, EnvyVerificationError, SearchFailure, ValidationError
from .kkm import (BalancedPoint, FunctionalPreferenceMatrix, SignMatrix, SolverParams, check_fuzz,
                  check_omega_condition, find_balanced_point, functional_from_valuations,
                  sign_matrix_of, tree_from_omega)
from .marriage import SetFamily, check_dragon_condition
from .valuations import ValuationProfile, value

PIECE_GRAB = "piece-grab"
PLAYER_SWALLOW = "player-swallow"
KKM = "kkm"
SCENARIOS = (PIECE_GRAB, PLAYER_SWALLOW, KKM)
ENVY_TOL = 1e-6
FUZZ_SHRINK = 0.1


class NonPrimePowerWarning(UserWarning):
    pass


def is_prime_power(r: int) -> bool:
    if r < 2:
        return False
    p = next(d for d in range(2, r + 1) if r % d == 0)
    while r % p == 0:
        r //= p
    return r == 1


# -- pieces and verification ------------------------------------------------------------------

Point = Union[PartitionAllocation, Cut]


def pieces_of(point: Point) -> list[Optional[Tile]]:
    """Content of every box (1-based order): its non-degenerate tile, or None when empty."""
    if isinstance(point, PartitionAllocation):
        tiles = point.tiles()
        return [None if i is None else tiles[i - 1] for _, i in sorted(point.box_tiles().items())]
    return [None if t.degenerate else t for t in tiles_from_cut(point)]


def piece_values(profile: ValuationProfile, point: Point) -> np.ndarray:
    """values[box, player], empty boxes worth exactly 0."""
    pieces = pieces_of(point)
    out = np.zeros((len(pieces), profile.n_players))
    for b, t in enumerate(pieces):
        if t is not None:
            out[b] = [value(d, t) for d in profile.densities]
    return out


@dataclass(frozen=True)
class EnvyReport:
    margins: dict[int, float]
    tol: float

    @property
    def min_margin(self) -> float:
        return min(self.margins.values()) if self.margins else float("inf")

    @property
    def worst_player(self) -> Optional[int]:
        if not self.margins:
            return None
        return min(sorted(self.margins), key=lambda j: self.margins[j])

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tol


def verify_envy_free(profile: ValuationProfile, point: Point, assignment: Assignment, tol: float = ENVY_TOL,
                     scenario: Optional[str] = None) -> EnvyReport:
    """Margin of each assigned player: value of their box minus the best value of any box,
    including the dragon's and empty ones.  Computed from the valuations alone."""
    vals = piece_values(profile, point)
    r, n = vals.shape
    boxes = set(range(1, r + 1))
    for j, b in assignment.mapping.items():
        if not 1 <= j <= n:
            raise ValidationError(f"player {j} not in the profile (1..{n})")
        if b not in boxes:
            raise ValidationError(f"box {b} outside 1..{r}")
    image = set(assignment.mapping.values())
    if scenario == PIECE_GRAB or scenario == KKM:
        if assignment.dragon not in boxes or image != boxes - {assignment.dragon}:
            raise ValidationError("players must receive exactly the boxes the dragon left")
    elif scenario == PLAYER_SWALLOW:
        if assignment.dragon in assignment.mapping or image != boxes:
            raise ValidationError("survivors must receive every box, the swallowed player none")
    best = vals.max(axis=0)
    margins = {j: float(vals[b - 1, j - 1] - best[j - 1]) for j, b in assignment.mapping.items()}
    return EnvyReport(margins, tol)


# -- resolvers --------------------------------------------------------------------------------

def resolve_piece_grab(tree: LabeledTree, dragon_box: int) -> Assignment:
    """Player j takes the endpoint of edge j farther from the grabbed box."""
    if not 1 <= dragon_box <= tree.vertex_count:
        raise ValidationError(f"box {dragon_box} outside 1..{tree.vertex_count}")
    parent = root_tree(tree, dragon_box)
    return Assignment(dragon_box, {e.label: k for k, e in parent.items()})


def resolve_player_swallow(tree: LabeledTree, swallowed: int) -> Assignment:
    """Each survivor takes the box labelling their edge towards the swallowed player."""
    if not 1 <= swallowed <= tree.vertex_count:
        raise ValidationError(f"player {swallowed} outside 1..{tree.vertex_count}")
    parent = root_tree(tree, swallowed)
    return Assignment(swallowed, {k: e.label for k, e in parent.items()})


def two_name_guarantee(tree: LabeledTree, outcome_assignment: Assignment, scenario: str) -> bool:
    """Every received box is one of the (at most two) names announced in advance."""
    if scenario in (PIECE_GRAB, KKM):
        return all(b in tree.edge(j).ends for j, b in outcome_assignment.mapping.items())
    incident = tree.neighbours()
    return all(any(e.label == b for e in incident[j]) for j, b in outcome_assignment.mapping.items())


# -- results ----------------------------------------------------------------------------------

@dataclass(frozen=True)
class Outcome:
    dragon: int
    assignment: Assignment
    margins: dict[int, float]

    @property
    def min_margin(self) -> float:
        return min(self.margins.values()) if self.margins else float("inf")

    def to_json(self) -> dict:
        return {"dragon": self.dragon, "assignment": self.assignment.to_json(),
                "margins": {str(j): m for j, m in sorted(self.margins.items())}}


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    point: Point
    tree: LabeledTree
    residual: float
    fuzz: float
    omega: SignMatrix
    outcomes: tuple[Outcome, ...]
    duality: Optional[bool] = None
    warnings: tuple[str, ...] = ()
    classical_cut: Optional[Cut] = None
    classical_tree: Optional[LabeledTree] = None

    @property
    def cut(self) -> Cut:
        return self.point.cut if isinstance(self.point, PartitionAllocation) else self.point

    @property
    def min_margin(self) -> float:
        return min(o.min_margin for o in self.outcomes)

    def to_json(self) -> dict:
        out = {
            "scenario": self.scenario,
            "cut": self.cut.to_json(),
            "alloc": list(self.point.alloc) if isinstance(self.point, PartitionAllocation) else None,
            "residual": self.residual,
            "fuzz": self.fuzz,
            "omega": self.omega.to_json(),
            "tree": self.tree.to_json(),
            "outcomes": [o.to_json() for o in self.outcomes],
            "warnings": list(self.warnings),
        }
        if self.duality is not None:
            out["duality"] = self.duality
        if self.classical_cut is not None:
            out["classical"] = {"cut": self.classical_cut.to_json(), "tree": self.classical_tree.to_json()}
        return out


# -- solver core ------------------------------------------------------------------------------

def _shape(scenario: str, r: int) -> int:
    return {PIECE_GRAB: r - 1, PLAYER_SWALLOW: r + 1, KKM: r - 1}[scenario]


def _fuzz_floor(params: SolverParams, r: int) -> float:
    return 2 * r * params.eps_sign


def _solve(profile: ValuationProfile, params: SolverParams, scenario: str, r: int,
           prefs_at: Callable[[float], FunctionalPreferenceMatrix],
           point_of: Callable[[np.ndarray], Point], envy_tol: float) -> ScenarioResult:
    notes: list[str] = []
    if scenario != KKM and not is_prime_power(r):
        msg = f"r={r} is not a prime power: a solution need not exist"
        warnings.warn(msg, NonPrimePowerWarning, stacklevel=3)
        notes.append(msg)
    fuzz, start, prev = params.eps_fuzz, None, None
    while True:
        fp = prefs_at(fuzz)
        try:
            bp = find_balanced_point(fp, params.tol, params.budget, params.seed, start=start, start_fuzz=prev)
        except SearchFailure as exc:
            exc.inconclusive = bool(notes)
            raise
        f = fp(bp.cut_points)
        omega = sign_matrix_of(f, params.eps_sign)
        tree, duality = _tree_for(scenario, omega, bp)
        point = point_of(bp.cut_points)
        outcomes = _outcomes(profile, point, tree, scenario, envy_tol)
        worst = min(outcomes, key=lambda o: (o.min_margin, o.dragon))
        if worst.min_margin >= -envy_tol:
            return ScenarioResult(scenario, point, tree, bp.residual, fuzz, omega, tuple(outcomes),
                                  duality, tuple(notes))
        if fuzz * FUZZ_SHRINK <= _fuzz_floor(params, r):
            player = min(worst.margins, key=lambda j: (worst.margins[j], j))
            raise EnvyVerificationError(
                f"envy margin {worst.min_margin:.3g} below -{envy_tol:g} even at margin width {fuzz:g}",
                player, worst.dragon, worst.min_margin)
        start, prev, fuzz = bp.cut_points, fuzz, fuzz * FUZZ_SHRINK


def _tree_for(scenario: str, omega: SignMatrix, bp: BalancedPoint) -> tuple[LabeledTree, Optional[bool]]:
    if scenario == PLAYER_SWALLOW:
        # players are the vertices and boxes label the edges
        dual = omega.transposed()
        ok, witness = check_omega_condition(dual)
        direct = SetFamily.of(omega.shape[1], [{j + 1 for j, x in enumerate(row) if x} for row in omega.omega])
        duality = ok == check_dragon_condition(direct)
        if not ok:
            raise DragonConditionError(witness, f"sign matrix fails the dragon condition at residual {bp.residual:.3g}")
        return tree_from_omega(dual), duality
    ok, witness = check_omega_condition(omega)
    if not ok:
        raise DragonConditionError(witness, f"sign matrix fails the dragon condition at residual {bp.residual:.3g}")
    return tree_from_omega(omega), None


def _outcomes(profile, point, tree, scenario, envy_tol) -> list[Outcome]:
    out = []
    for d in range(1, tree.vertex_count + 1):
        a = resolve_player_swallow(tree, d) if scenario == PLAYER_SWALLOW else resolve_piece_grab(tree, d)
        rep = verify_envy_free(profile, point, a, envy_tol, scenario)
        out.append(Outcome(d, a, rep.margins))
    return out


def _check_arity(profile: ValuationProfile, scenario: str, r: int) -> None:
    if r < 2:
        raise ValidationError("need at least 2 boxes")
    want = _shape(scenario, r)
    if profile.n_players != want:
        raise ValidationError(f"{scenario} with r={r} needs {want} players, profile has {profile.n_players}")


def _chessboard_solve(profile, params, scenario, r, rule, envy_tol) -> ScenarioResult:
    _check_arity(profile, scenario, r)
    check_fuzz(profile, params, r)
    lifted = lift_preferences(functional_from_valuations(profile, params.eps_fuzz, r), rule, seed=params.seed)
    face = canonical_face(r)

    def prefs_at(fuzz):
        return (lifted if fuzz == lifted.fuzz else lifted.rescale(fuzz)).on_face(face)

    return _solve(profile, params, scenario, r, prefs_at, lambda y: face_point(face, y), envy_tol)


def solve_scenario_piece(profile: ValuationProfile, params: SolverParams = SolverParams(),
                         rule: CollapseRule = repeat_last, envy_tol: float = ENVY_TOL) -> ScenarioResult:
    """r - 1 players, r boxes: a partition/allocation and a player-labelled tree on the boxes."""
    return _chessboard_solve(profile, params, PIECE_GRAB, profile.n_players + 1, rule, envy_tol)


def solve_scenario_player(profile: ValuationProfile, params: SolverParams = SolverParams(),
                          rule: CollapseRule = repeat_last, envy_tol: float = ENVY_TOL) -> ScenarioResult:
    """r + 1 players, r boxes: a partition/allocation and a box-labelled tree on the players."""
    return _chessboard_solve(profile, params, PLAYER_SWALLOW, profile.n_players - 1, rule, envy_tol)


def solve_kkm(profile: ValuationProfile, params: SolverParams = SolverParams(),
              envy_tol: float = ENVY_TOL) -> ScenarioResult:
    """n players over n + 1 classical pieces, no lifting; every piece may be grabbed."""
    r = profile.n_players + 1
    _check_arity(profile, KKM, r)
    check_fuzz(profile, params, r)
    return _solve(profile, params, KKM, r, lambda f: functional_from_valuations(profile, f, r),
                  lambda y: Cut(tuple(float(v) for v in y)), envy_tol)


# -- transfer back to classical cuts ----------------------------------------------------------

def _box_to_slot(pa: PartitionAllocation, rule: CollapseRule) -> tuple[Cut, dict[int, int]]:
    y, origin = collapse(pa, rule)
    slot_of = {b: k for k, b in origin.items()}
    empty = [b for b in range(1, pa.r + 1) if b not in slot_of]
    free = [k for k in range(1, pa.r + 1) if k not in origin]
    slot_of.update(zip(empty, free))
    return y, slot_of


def _classical(result: ScenarioResult, profile: ValuationProfile, rule: CollapseRule, tol: float) -> ScenarioResult:
    y, slot_of = _box_to_slot(result.point, rule)
    if result.scenario == PIECE_GRAB:
        edges = tuple(Edge(slot_of[e.u], slot_of[e.w], e.label) for e in result.tree.edges)
    else:
        edges = tuple(Edge(e.u, e.w, slot_of[e.label]) for e in result.tree.edges)
    ctree = LabeledTree(result.tree.vertex_count, edges)
    vals = piece_values(profile, y)
    best = vals.max(axis=0)
    for e in ctree.edges:
        if result.scenario == PIECE_GRAB:
            checks = [(e.label, e.u), (e.label, e.w)]
        else:
            checks = [(e.u, e.label), (e.w, e.label)]
        for j, k in checks:
            m = float(vals[k - 1, j - 1] - best[j - 1])
            if m < -tol:
                raise EnvyVerificationError(f"classical tile {k} is not optimal for player {j} (margin {m:.3g})",
                                            j, None, m)
    return ScenarioResult(result.scenario, result.point, result.tree, result.residual, result.fuzz, result.omega,
                          result.outcomes, result.duality, result.warnings, y, ctree)


def solve_scenario_piece_classical(profile: ValuationProfile, params: SolverParams = SolverParams(),
                                   rule: CollapseRule = repeat_last, envy_tol: float = ENVY_TOL) -> ScenarioResult:
    """Piece-grab solve plus the collapsed classical cut and the tree on its tiles; both
    endpoint tiles of every player's edge are checked to be optimal for that player."""
    return _classical(solve_scenario_piece(profile, params, rule, envy_tol), profile, rule, envy_tol)


def solve_scenario_player_classical(profile: ValuationProfile, params: SolverParams = SolverParams(),
                                    rule: CollapseRule = repeat_last, envy_tol: float = ENVY_TOL) -> ScenarioResult:
    """Player-swallow solve plus the classical cut; both players on every box's edge are checked
    to find the corresponding classical tile optimal."""
    return _classical(solve_scenario_player(profile, params, rule, envy_tol), profile, rule, envy_tol)


# -- division report --------------------------------------------------------------------------

@dataclass(frozen=True)
class Division:
    intervals: tuple[tuple[int, float, float], ...]
    shares: dict[int, dict[int, Optional[tuple[float, float]]]] = field(default_factory=dict)


def extract_division(result: ScenarioResult, profile: Optional[ValuationProfile] = None,
                     tol: float = ENVY_TOL) -> Division:
    """The non-degenerate intervals with their boxes and, for every grabbed box, who gets what.

    Players whose box is empty get an empty piece.  With ``profile`` given, every distribution
    is re-verified envy-free at ``tol``.
    """
    if result.scenario not in (PIECE_GRAB, KKM):
        raise ValidationError("division reports are defined for the piece-grab scenario")
    pieces = pieces_of(result.point)
    intervals = tuple((b, t.lo, t.hi) for b, t in enumerate(pieces, start=1) if t is not None)
    if len(intervals) > len(pieces):
        raise AssertionError("more non-degenerate intervals than boxes")
    if any(hi <= lo for _, lo, hi in intervals):
        raise AssertionError("interval of non-positive length")
    shares = {}
    for o in result.outcomes:
        got = {j: (None if pieces[b - 1] is None else (pieces[b - 1].lo, pieces[b - 1].hi))
               for j, b in o.assignment.mapping.items()}
        real = [iv for iv in got.values() if iv is not None]
        if len(set(real)) != len(real):
            raise AssertionError("an interval went to two players")
        if profile is not None:
            rep = verify_envy_free(profile, result.point, o.assignment, tol, result.scenario)
            if not rep.passed:
                raise EnvyVerificationError(f"grab of box {o.dragon} leaves envy {rep.min_margin:.3g}",
                                            rep.worst_player, o.dragon, rep.min_margin)
        shares[o.dragon] = got
    return Division(intervals, shares)
