"""Command line front end: ``dragonshare solve | lemma | verify``.

Exit codes: 0 success, 1 invalid input, 2 inconclusive search, 3 failed envy verification.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .chessboard import PartitionAllocation
from .core import Assignment, Cut
from .errors import (ContractError, DomainError, DragonConditionError, EnvyVerificationError, SearchFailure,
                     ValidationError)
from .kkm import SolverParams
from .marriage import SetFamily, spanning_tree_representatives
from .scenarios import (KKM, PIECE_GRAB, PLAYER_SWALLOW, SCENARIOS, solve_kkm, solve_scenario_piece_classical,
                        solve_scenario_player_classical, verify_envy_free)
from .valuations import ValuationProfile

EXIT_OK, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_VERIFY = 0, 1, 2, 3
SEED_ENV = "DRAGONSHARE_SEED"


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    profile: Optional[ValuationProfile]
    params: SolverParams
    r: Optional[int] = None
    family: Optional[SetFamily] = None

    @classmethod
    def from_json(cls, data, base: Path = Path("."), scenario: Optional[str] = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        scenario = scenario or data.get("scenario")
        if scenario not in SCENARIOS + ("lemma",):
            raise ValidationError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS + ('lemma',))}")
        params = SolverParams.from_json(data.get("params", {}))
        seed = os.environ.get(SEED_ENV)
        if seed is not None:
            try:
                params = SolverParams(params.tol, params.budget, params.eps_fuzz, params.eps_sign, int(seed))
            except ValueError as exc:
                raise ValidationError(f"{SEED_ENV}={seed!r} is not an integer") from exc
        r = data.get("r")
        if scenario == "lemma":
            fam = data.get("family", data)
            return cls(scenario, None, params, r, SetFamily.from_json(fam))
        prof = data.get("profile")
        if isinstance(prof, str):
            prof = _load_json(base / prof)
        if prof is None:
            raise ValidationError("config needs a profile (inline object or path)")
        profile = ValuationProfile.from_json(prof)
        if r is not None:
            want = {PIECE_GRAB: r - 1, PLAYER_SWALLOW: r + 1, KKM: r - 1}[scenario]
            if profile.n_players != want:
                raise ValidationError(f"{scenario} with r={r} needs {want} players, profile has {profile.n_players}")
        return cls(scenario, profile, params, r)


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute a config; returns the exit status and the JSON document to write."""
    echo = {"params": config.params.to_json(), "seed": config.params.seed}
    if config.scenario == "lemma":
        try:
            tree = spanning_tree_representatives(config.family)
        except DragonConditionError as exc:
            return EXIT_INVALID, {"status": "violated", "witness": sorted(exc.witness)}
        return EXIT_OK, {"status": "ok", **tree.to_json()}
    solver = {PIECE_GRAB: solve_scenario_piece_classical, PLAYER_SWALLOW: solve_scenario_player_classical,
              KKM: solve_kkm}[config.scenario]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = solver(config.profile, config.params)
    except SearchFailure as exc:
        best = exc.best
        doc = {"status": "inconclusive", "scenario": config.scenario, "reason": str(exc), **echo}
        if best is not None:
            doc["best"] = {"cut": best.cut.to_json(), "residual": best.residual}
        return EXIT_INCONCLUSIVE, doc
    except DragonConditionError as exc:
        return EXIT_INCONCLUSIVE, {"status": "inconclusive", "scenario": config.scenario, "reason": str(exc),
                                   "witness": sorted(exc.witness), **echo}
    except EnvyVerificationError as exc:
        return EXIT_VERIFY, {"status": "verify-failed", "scenario": config.scenario, "reason": str(exc),
                             "player": exc.player, "dragon": exc.dragon, "margin": exc.margin, **echo}
    return EXIT_OK, {"status": "ok", **result.to_json(), **echo}


def point_from_result(doc) -> PartitionAllocation | Cut:
    cut = Cut.from_json(doc["cut"])
    alloc = doc.get("alloc")
    return cut if alloc is None else PartitionAllocation(cut, tuple(alloc))


def run_verify(result_doc, profile: ValuationProfile, tol: float) -> tuple[int, dict]:
    try:
        point = point_from_result(result_doc)
        scenario = result_doc["scenario"]
        outcomes = result_doc["outcomes"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed result file: {exc}") from exc
    report, worst, failed = [], None, []
    for o in outcomes:
        a = Assignment.from_json(o["assignment"])
        rep = verify_envy_free(profile, point, a, tol, scenario)
        report.append({"dragon": a.dragon, "min_margin": rep.min_margin, "passed": rep.passed})
        worst = rep.min_margin if worst is None else min(worst, rep.min_margin)
        if not rep.passed:
            failed.append({"dragon": a.dragon, "player": rep.worst_player, "margin": rep.min_margin})
    doc = {"status": "ok" if not failed else "failed", "tol": tol, "min_margin": worst, "outcomes": report,
           "failures": failed}
    return (EXIT_OK if not failed else EXIT_VERIFY), doc


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dragonshare", description="Envy-free division with a dragon.")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="solve a scenario from a config file")
    s.add_argument("--scenario", choices=SCENARIOS + ("lemma",))
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="accepted for compatibility; the search is sequential and outputs never depend on it")
    m = sub.add_parser("lemma", help="2-element representatives forming a spanning tree")
    m.add_argument("--in", dest="inp", required=True)
    m.add_argument("--out")
    v = sub.add_parser("verify", help="re-check every outcome of a result file")
    v.add_argument("--result", required=True)
    v.add_argument("--profile", required=True)
    v.add_argument("--tol", type=float, default=1e-6)
    return ap


def _emit(doc, out: Optional[str]) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "solve":
            if args.threads < 1:
                raise ValidationError("--threads must be at least 1")
            cfg = RunConfig.from_json(_load_json(args.config), Path(args.config).parent, args.scenario)
            print(f"params {dumps(cfg.params.to_json()).strip()} seed {cfg.params.seed}", file=sys.stderr)
            code, doc = run(cfg)
            _emit(doc, args.out)
            if code == EXIT_INVALID:
                print(f"dragon condition violated, witness {doc['witness']}", file=sys.stderr)
            return code
        if args.command == "lemma":
            cfg = RunConfig.from_json({"scenario": "lemma", "family": _load_json(args.inp)})
            code, doc = run(cfg)
            _emit(doc, args.out)
            if code == EXIT_INVALID:
                print(f"dragon condition violated, witness {doc['witness']}", file=sys.stderr)
            return code
        result = _load_json(args.result)
        prof = _load_json(args.profile)
        if isinstance(prof, dict) and "profile" in prof:
            prof = prof["profile"]
            if isinstance(prof, str):
                prof = _load_json(Path(args.profile).parent / prof)
        code, doc = run_verify(result, ValuationProfile.from_json(prof), args.tol)
        _emit(doc, None)
        for f in doc["failures"]:
            print(f"outcome dragon={f['dragon']}: player {f['player']} margin {f['margin']:.3g}", file=sys.stderr)
        if code == EXIT_OK:
            print(f"all outcomes envy-free; min margin {doc['min_margin']!r}", file=sys.stderr)
        return code
    except (ValidationError, DomainError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
