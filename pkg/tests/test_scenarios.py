import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dragonshare import scenarios
from dragonshare.chessboard import PartitionAllocation, left_end, right_end, slot_rule
from dragonshare.core import Assignment, Cut, Edge, LabeledTree
from dragonshare.errors import SearchFailure, ValidationError
from dragonshare.kkm import SolverParams
from dragonshare.scenarios import (PIECE_GRAB, PLAYER_SWALLOW, NonPrimePowerWarning, extract_division,
                                   is_prime_power, piece_values, resolve_piece_grab, resolve_player_swallow,
                                   solve_kkm, solve_scenario_piece, solve_scenario_piece_classical,
                                   solve_scenario_player, solve_scenario_player_classical, two_name_guarantee,
                                   verify_envy_free)
from dragonshare.valuations import PiecewiseDensity, ValuationProfile, random_profile

PATH = LabeledTree(3, (Edge(1, 2, 1), Edge(2, 3, 2)))
TRIANGLE = PiecewiseDensity(tuple(k / 8 for k in range(9)), tuple((k + 0.5) / 4 for k in range(8)))


@st.composite
def trees(draw, max_v=8):
    v = draw(st.integers(2, max_v))
    parents = [draw(st.integers(1, k - 1)) for k in range(2, v + 1)]
    labels = draw(st.permutations(range(1, v)))
    return LabeledTree(v, tuple(Edge(p, k, lab) for k, p, lab in zip(range(2, v + 1), parents, labels)))


def all_outcomes_pass(profile, result, tol=1e-6):
    return all(verify_envy_free(profile, result.point, o.assignment, tol, result.scenario).passed
               for o in result.outcomes)


class TestResolvers:
    def test_grab_middle(self):
        assert resolve_piece_grab(PATH, 2).mapping == {1: 1, 2: 3}

    def test_grab_end(self):
        assert resolve_piece_grab(PATH, 1).mapping == {1: 2, 2: 3}

    def test_swallow_middle(self):
        assert resolve_player_swallow(PATH, 2).mapping == {1: 1, 3: 2}

    def test_swallow_end(self):
        assert resolve_player_swallow(PATH, 1).mapping == {2: 1, 3: 2}

    @given(trees())
    def test_every_grab_is_a_bijection(self, tree):
        for root in range(1, tree.vertex_count + 1):
            a = resolve_piece_grab(tree, root)
            assert sorted(a.mapping.values()) == [k for k in range(1, tree.vertex_count + 1) if k != root]
            assert two_name_guarantee(tree, a, PIECE_GRAB)

    @given(trees())
    def test_every_swallow_is_a_bijection(self, tree):
        for root in range(1, tree.vertex_count + 1):
            a = resolve_player_swallow(tree, root)
            assert set(a.mapping) == set(range(1, tree.vertex_count + 1)) - {root}
            assert sorted(a.mapping.values()) == list(range(1, tree.vertex_count))
            assert two_name_guarantee(tree, a, PLAYER_SWALLOW)


class TestVerification:
    def test_even_split(self):
        rep = verify_envy_free(ValuationProfile.uniform(1), Cut((0.5,)), Assignment(2, {1: 1}))
        assert rep.margins == {1: 0.0} and rep.passed

    def test_long_piece(self):
        rep = verify_envy_free(ValuationProfile.uniform(1), Cut((0.8,)), Assignment(2, {1: 1}))
        assert rep.margins[1] == 0.0
        # the margin against the other piece is +0.6
        vals = piece_values(ValuationProfile.uniform(1), Cut((0.8,)))
        assert vals[0, 0] - vals[1, 0] == pytest.approx(0.6)

    def test_short_piece_fails(self):
        rep = verify_envy_free(ValuationProfile.uniform(1), Cut((0.8,)), Assignment(1, {1: 2}))
        assert rep.min_margin == pytest.approx(-0.6)
        assert not rep.passed and rep.worst_player == 1

    def test_empty_box_is_worthless(self):
        neg = ValuationProfile((PiecewiseDensity.uniform(-1.0),), "signed")
        point = PartitionAllocation(Cut((1.0, 1.0)), (1, 2, 1))
        assert piece_values(neg, point)[:, 0].tolist() == [-1.0, 0.0]
        assert verify_envy_free(neg, point, Assignment(1, {1: 2}), 0.0, PIECE_GRAB).passed

    def test_structure_checked(self):
        with pytest.raises(ValidationError):
            verify_envy_free(ValuationProfile.uniform(1), Cut((0.5,)), Assignment(1, {1: 1}), 1e-6, PIECE_GRAB)
        with pytest.raises(ValidationError):
            verify_envy_free(ValuationProfile.uniform(2), Cut((0.5,)), Assignment(1, {2: 1, 3: 2}), 1e-6,
                             PLAYER_SWALLOW)


class TestPieceGrab:
    def test_single_uniform_player(self):
        prof = ValuationProfile.uniform(1)
        res = solve_scenario_piece(prof)
        assert res.point.cut.points[0] == pytest.approx(0.5, abs=1e-9)
        assert [e.ends for e in res.tree.edges] == [(1, 2)]
        assert all(o.min_margin >= -1e-9 for o in res.outcomes)

    def test_uniform_and_triangular(self):
        prof = ValuationProfile((PiecewiseDensity.uniform(), TRIANGLE))
        res = solve_scenario_piece(prof)
        assert len(res.outcomes) == 3 and all_outcomes_pass(prof, res)

    def test_players_who_only_value_the_first_third(self):
        third = PiecewiseDensity((0.0, 1 / 3, 1.0), (3.0, 0.0))
        prof = ValuationProfile((third, third), "signed")
        res = solve_scenario_piece(prof)
        vals = piece_values(prof, res.point)
        worthless_box = np.any(np.all(np.abs(vals) <= 1e-9, axis=1))
        # an exact three-way split of [0, 1/3] is the other envy-free answer
        even_split = np.allclose(vals, vals[0], atol=1e-6)
        assert worthless_box or even_split
        assert all_outcomes_pass(prof, res)

    def test_classical_midpoint(self):
        res = solve_scenario_piece_classical(ValuationProfile.uniform(1))
        assert res.classical_cut.points == pytest.approx((0.5,), abs=1e-9)
        assert res.to_json()["classical"]["cut"] == list(res.classical_cut.points)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_four_boxes(self, seed):
        prof = random_profile(seed, 3, "hungry")
        res = solve_scenario_piece_classical(prof)
        assert all_outcomes_pass(prof, res)

    def test_division(self):
        div = extract_division(solve_scenario_piece(ValuationProfile.uniform(1)), ValuationProfile.uniform(1))
        assert [(lo, hi) for _, lo, hi in div.intervals] == pytest.approx([(0.0, 0.5), (0.5, 1.0)])

    @pytest.mark.parametrize("seed", range(4))
    def test_division_intervals(self, seed):
        prof = random_profile(seed, 2, "signed")
        div = extract_division(solve_scenario_piece(prof), prof)
        assert len(div.intervals) <= 3
        assert all(hi > lo for _, lo, hi in div.intervals)

    def test_collapse_ordering_does_not_matter(self):
        prof = random_profile(3, 2, "signed")
        docs = {json.dumps(solve_scenario_piece(prof, rule=rule).to_json(), sort_keys=True)
                for rule in (scenarios.repeat_last, right_end, left_end, slot_rule(1))}
        assert len(docs) == 1

    def test_scaling_a_player_changes_nothing(self):
        prof = random_profile(5, 2, "hungry")
        a = solve_scenario_piece(prof)
        b = solve_scenario_piece(prof.scaled(1, 7.5))
        assert a.omega == b.omega and a.tree == b.tree
        assert a.point.cut.points == pytest.approx(b.point.cut.points, abs=1e-5)
        for oa, ob in zip(a.outcomes, b.outcomes):
            assert oa.assignment == ob.assignment

    def test_wrong_player_count(self):
        with pytest.raises(ValidationError):
            scenarios._check_arity(ValuationProfile.uniform(2), PIECE_GRAB, 4)


class TestPlayerSwallow:
    def test_uniform_trio(self):
        prof = ValuationProfile.uniform(3)
        res = solve_scenario_player_classical(prof)
        assert res.classical_cut.points == pytest.approx((0.5,), abs=1e-9)
        assert res.tree.vertex_count == 3 and sorted(e.label for e in res.tree.edges) == [1, 2]
        assert all(abs(o.min_margin) <= 1e-9 for o in res.outcomes)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_three_boxes(self, seed):
        prof = random_profile(seed, 4, "hungry")
        res = solve_scenario_player_classical(prof)
        assert len(res.outcomes) == 4 and all_outcomes_pass(prof, res)
        assert res.duality

    def test_four_boxes_two_names(self):
        prof = random_profile(0, 5, "hungry")
        res = solve_scenario_player(prof)
        for o in res.outcomes:
            parents = {k: e.label for k, e in scenarios.root_tree(res.tree, o.dragon).items()}
            assert o.assignment.mapping == parents
            assert two_name_guarantee(res.tree, o.assignment, PLAYER_SWALLOW)


class TestKKM:
    def test_identical_pair(self):
        prof = ValuationProfile.uniform(2)
        res = solve_kkm(prof)
        assert res.cut.points == pytest.approx((1 / 3, 2 / 3), abs=1e-6)
        assert all_outcomes_pass(prof, res)


class TestPrimePowers:
    @pytest.mark.parametrize("r,expected", [(2, True), (3, True), (4, True), (6, False), (8, True), (9, True),
                                            (10, False), (12, False), (1, False)])
    def test_is_prime_power(self, r, expected):
        assert is_prime_power(r) == expected

    def test_non_prime_power_failure_is_inconclusive(self, monkeypatch):
        def give_up(*args, **kwargs):
            raise SearchFailure("budget exhausted")

        monkeypatch.setattr(scenarios, "find_balanced_point", give_up)
        with pytest.warns(NonPrimePowerWarning):
            with pytest.raises(SearchFailure) as info:
                solve_scenario_piece(random_profile(0, 5, "hungry"), SolverParams(budget=10))
        assert info.value.inconclusive

    def test_prime_power_failure_is_not_inconclusive(self, monkeypatch):
        def give_up(*args, **kwargs):
            raise SearchFailure("budget exhausted")

        monkeypatch.setattr(scenarios, "find_balanced_point", give_up)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            with pytest.raises(SearchFailure) as info:
                solve_scenario_piece(random_profile(0, 2, "hungry"))
        assert not info.value.inconclusive
