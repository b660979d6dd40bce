"""Envy-free division of [0, 1] when a dragon grabs a piece or swallows a player."""
from .chessboard import (ChessboardPoint, LiftedPreferences, PartitionAllocation, Permutation, act, collapse,
                         enumerate_maximal_faces, equivalent, from_chessboard_point, is_admissible,
                         lift_preferences, to_chessboard_point)
from .core import (Assignment, Cut, Edge, LabeledTree, SimplexPoint, Tile, is_labeled_spanning_tree, root_tree,
                   tiles_from_cut, tree_choice_probabilities)
from .errors import (CapacityError, ContractError, DomainError, DragonConditionError, DragonShareError,
                     EnvyVerificationError, SearchFailure, ValidationError)
from .kkm import (BalancedPoint, FunctionalPreferenceMatrix, SignMatrix, SolverParams, bijections_from_tree,
                  check_omega_condition, find_balanced_point, functional_from_valuations, sign_matrix,
                  solve_dragon_kkm)
from .marriage import (RepresentativeTree, SetFamily, brute_force_tree_representatives, check_dragon_condition,
                       sdr_avoiding, spanning_tree_representatives)
from .scenarios import (ScenarioResult, extract_division, resolve_piece_grab, resolve_player_swallow, solve_kkm,
                        solve_scenario_piece, solve_scenario_piece_classical, solve_scenario_player,
                        solve_scenario_player_classical, verify_envy_free)
from .valuations import PiecewiseDensity, ValuationProfile, check_ppe, prefers, random_profile, value

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "BalancedPoint",
    "CapacityError",
    "ChessboardPoint",
    "ContractError",
    "Cut",
    "DomainError",
    "DragonConditionError",
    "DragonShareError",
    "Edge",
    "EnvyVerificationError",
    "FunctionalPreferenceMatrix",
    "LabeledTree",
    "LiftedPreferences",
    "PartitionAllocation",
    "Permutation",
    "PiecewiseDensity",
    "RepresentativeTree",
    "ScenarioResult",
    "SearchFailure",
    "SetFamily",
    "SignMatrix",
    "SimplexPoint",
    "SolverParams",
    "Tile",
    "ValidationError",
    "ValuationProfile",
    "act",
    "bijections_from_tree",
    "brute_force_tree_representatives",
    "check_dragon_condition",
    "check_omega_condition",
    "check_ppe",
    "collapse",
    "enumerate_maximal_faces",
    "equivalent",
    "extract_division",
    "find_balanced_point",
    "from_chessboard_point",
    "functional_from_valuations",
    "is_admissible",
    "is_labeled_spanning_tree",
    "lift_preferences",
    "prefers",
    "random_profile",
    "resolve_piece_grab",
    "resolve_player_swallow",
    "root_tree",
    "sdr_avoiding",
    "sign_matrix",
    "solve_dragon_kkm",
    "solve_kkm",
    "solve_scenario_piece",
    "solve_scenario_piece_classical",
    "solve_scenario_player",
    "solve_scenario_player_classical",
    "spanning_tree_representatives",
    "tiles_from_cut",
    "to_chessboard_point",
    "tree_choice_probabilities",
    "value",
    "verify_envy_free",
]
