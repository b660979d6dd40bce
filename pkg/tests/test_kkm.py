import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dragonshare.core import Edge, LabeledTree
from dragonshare.errors import SearchFailure, ValidationError
from dragonshare.kkm import (SignMatrix, SolverParams, balance_residual, bijections_from_tree, check_fuzz,
                             check_omega_condition, find_balanced_point, functional_from_valuations,
                             functional_weights, sign_matrix, sign_matrix_of, solve_dragon_kkm, tree_from_omega)
from dragonshare.valuations import PiecewiseDensity, ValuationProfile, random_profile
from dragonshare.scenarios import verify_envy_free, resolve_piece_grab


def omega(*rows):
    return SignMatrix(tuple(tuple(r) for r in rows), 1e-9)


class TestFunctionalWeights:
    def test_tie_splits_evenly(self):
        fp = functional_from_valuations(ValuationProfile.uniform(1), 1e-3)
        np.testing.assert_allclose(fp([0.5]), [[0.5], [0.5]])

    def test_long_first_piece_takes_everything(self):
        # margins (0, -0.6), weights (0.1, 0)
        fp = functional_from_valuations(ValuationProfile.uniform(1), 0.1)
        np.testing.assert_allclose(fp([0.8]), [[1.0], [0.0]])

    def test_partition_of_unity(self):
        rng = np.random.default_rng(0)
        for k in range(1000):
            n = 1 + k % 4
            fp = functional_from_valuations(random_profile(k, n, "signed" if k % 2 else "hungry"), 1e-3)
            f = fp(np.sort(rng.random(n)))
            assert np.all(np.abs(f.sum(axis=0) - 1.0) <= 1e-9)

    @given(st.integers(0, 500), st.integers(1, 4), st.data())
    def test_hungry_players_ignore_degenerate_tiles(self, seed, n, data):
        prof = random_profile(seed, n, "hungry")
        fp = functional_from_valuations(prof, 1.0 / (2 * (n + 1)))
        x = sorted(data.draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n)))
        x[data.draw(st.integers(0, n - 1))] = x[0] if n == 1 else x[-1]
        f = fp(np.asarray(sorted(x)))
        bounds = np.concatenate(([0.0], sorted(x), [1.0]))
        assert np.all(f[np.diff(bounds) == 0.0] == 0.0)

    @given(st.integers(0, 500), st.floats(0.01, 100.0))
    def test_rescaling_a_player_changes_nothing(self, seed, factor):
        prof = random_profile(seed, 3, "signed")
        x = np.sort(np.random.default_rng(seed).random(3))
        a = functional_from_valuations(prof, 1e-2)(x)
        b = functional_from_valuations(prof.scaled(2, factor), 1e-2)(x)
        np.testing.assert_allclose(a, b, atol=1e-12)

    @given(st.integers(0, 500))
    def test_piece_permutation_is_exact(self, seed):
        rng = np.random.default_rng(seed)
        vals = rng.normal(size=(5, 3))
        perm = rng.permutation(5)
        assert np.array_equal(functional_weights(vals[perm], 0.3), functional_weights(vals, 0.3)[perm])

    def test_batch_matches_single(self):
        fp = functional_from_valuations(random_profile(3, 3, "signed"), 1e-2)
        xs = np.sort(np.random.default_rng(3).random((20, 3)), axis=1)
        np.testing.assert_allclose(fp.many(xs), np.stack([fp(x) for x in xs]), atol=1e-15)


class TestBalancedPoint:
    def test_one_uniform_player(self):
        fp = functional_from_valuations(ValuationProfile.uniform(1), 1e-3)
        bp = find_balanced_point(fp)
        assert bp.cut_points == pytest.approx([0.5], abs=1e-8)
        assert bp.residual <= 1e-8

    def test_two_identical_players_land_on_barycentre(self):
        fp = functional_from_valuations(ValuationProfile.uniform(2), 1e-3)
        bp = find_balanced_point(fp)
        assert bp.point.coords == pytest.approx((1 / 3, 1 / 3, 1 / 3), abs=1e-6)
        # grid oracle: nowhere on a fine grid is the residual smaller by a meaningful amount
        grid = [(a, b) for a in np.linspace(0, 1, 61) for b in np.linspace(0, 1, 61) if a <= b]
        assert min(balance_residual(fp, g) for g in grid) >= bp.residual - 1e-12

    @settings(max_examples=15)
    @given(st.integers(0, 10_000), st.integers(1, 3))
    def test_column_sums_at_balance(self, seed, n):
        fp = functional_from_valuations(random_profile(seed, n, "hungry"), 1e-3)
        bp = find_balanced_point(fp, seed=seed)
        rows = fp(bp.cut_points).sum(axis=1)
        assert np.all(np.abs(rows - n / (n + 1)) <= n * 1e-8)

    def test_budget_exhaustion_reports_best_point(self):
        fp = functional_from_valuations(random_profile(1, 3, "hungry"), 1e-3)
        with pytest.raises(SearchFailure) as info:
            find_balanced_point(fp, tol=1e-14, budget=50)
        assert info.value.best is not None


class TestSignMatrix:
    def test_exact_zero_drops(self):
        assert sign_matrix_of(np.array([[0.5], [0.5], [0.0]]), 1e-9).omega == ((1,), (1,), (0,))
        assert sign_matrix_of(np.array([[1.0], [0.0]]), 1e-9).omega == ((1,), (0,))

    def test_identical_players_at_barycentre(self):
        fp = functional_from_valuations(ValuationProfile.uniform(2), 1e-3)
        assert sign_matrix(fp, [1 / 3, 2 / 3], 1e-9).omega == ((1, 1),) * 3

    def test_condition_examples(self):
        assert check_omega_condition(omega((1, 1), (1, 1), (1, 1))) == (True, None)
        assert check_omega_condition(omega((1, 1), (1, 1), (0, 0))) == (False, frozenset({1, 2}))
        assert check_omega_condition(omega((1, 0, 0), (1, 1, 0), (0, 1, 1), (0, 0, 1)))[0]

    def test_shape_checked(self):
        with pytest.raises(ValidationError):
            check_omega_condition(omega((1, 1), (1, 1)))

    def test_tree_uses_supports(self):
        tree = tree_from_omega(omega((1, 0), (1, 1), (0, 1)))
        assert {e.label: e.ends for e in tree.edges} == {1: (1, 2), 2: (2, 3)}


class TestPipeline:
    def test_one_uniform_player(self):
        bp, tree = solve_dragon_kkm(ValuationProfile.uniform(1))
        assert bp.cut.points == pytest.approx((0.5,), abs=1e-8)
        assert tree.edges == (Edge(1, 2, 1),)

    def test_identical_pair(self):
        prof = ValuationProfile.uniform(2)
        bp, tree = solve_dragon_kkm(prof)
        assert bp.cut.points == pytest.approx((1 / 3, 2 / 3), abs=1e-6)
        for e in tree.edges:
            for grab in (1, 2, 3):
                rep = verify_envy_free(prof, bp.cut, resolve_piece_grab(tree, grab), 1e-6)
                assert rep.passed

    def test_disjoint_halves(self):
        left = PiecewiseDensity((0.0, 0.5, 1.0), (1.9, 0.1))
        right = PiecewiseDensity((0.0, 0.5, 1.0), (0.1, 1.9))
        prof = ValuationProfile((left, right))
        bp, tree = solve_dragon_kkm(prof)
        fp = functional_from_valuations(prof, 1e-3)
        f = fp(bp.cut_points)
        assert all(f[e.u - 1, e.label - 1] > 1e-9 and f[e.w - 1, e.label - 1] > 1e-9 for e in tree.edges)
        for grab in (1, 2, 3):
            assert verify_envy_free(prof, bp.cut, resolve_piece_grab(tree, grab), 1e-3).passed

    def test_fuzz_bounds(self):
        with pytest.raises(ValidationError):
            check_fuzz(ValuationProfile.uniform(2), SolverParams(eps_fuzz=0.4), 3)
        with pytest.raises(ValidationError):
            check_fuzz(ValuationProfile.uniform(2), SolverParams(eps_fuzz=1e-3, eps_sign=1e-3), 3)


class TestBijections:
    PATH = LabeledTree(3, (Edge(1, 2, 1), Edge(2, 3, 2)))

    def test_path_examples(self):
        pis = bijections_from_tree(self.PATH)
        assert pis[1] == {1: 2, 2: 3}
        assert pis[2] == {1: 1, 2: 3}
        assert pis[3] == {1: 1, 2: 2}

    @given(st.integers(2, 8), st.data())
    def test_each_is_bijection_within_edges(self, v, data):
        parents = [data.draw(st.integers(1, k - 1)) for k in range(2, v + 1)]
        labels = data.draw(st.permutations(range(1, v)))
        tree = LabeledTree(v, tuple(Edge(p, k, lab) for k, p, lab in zip(range(2, v + 1), parents, labels)))
        for i, pi in bijections_from_tree(tree).items():
            assert sorted(pi.values()) == [k for k in range(1, v + 1) if k != i]
            assert all(pi[j] in tree.edge(j).ends for j in pi)
