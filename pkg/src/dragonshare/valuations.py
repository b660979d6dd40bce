"""Piecewise-constant (possibly signed) densities on [0, 1] and the preferences they induce.

A player prefers the tiles of maximal value.  Such preferences are closed and covering, and they
only look at tile endpoints, so two cuts with the same non-degenerate tiles are judged alike.
Negative density makes an empty (degenerate) tile worth more than a bad real one; that is how
non-hungry players are modelled here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import Cut, Tile, tiles_from_cut
from .errors import ValidationError

HUNGRY_DELTA = 1e-3
REGIMES = ("hungry", "signed")


@dataclass(frozen=True)
class PiecewiseDensity:
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValidationError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(bp, bp[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        if len(vals) != len(bp) - 1:
            raise ValidationError("need one density value per breakpoint interval")
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("density values must be finite")

    @classmethod
    def uniform(cls, height: float = 1.0) -> "PiecewiseDensity":
        return cls((0.0, 1.0), (height,))

    @cached_property
    def _knots(self) -> np.ndarray:
        return np.asarray(self.breakpoints)

    @cached_property
    def _cumulative(self) -> np.ndarray:
        widths = np.diff(self._knots)
        return np.concatenate(([0.0], np.cumsum(widths * np.asarray(self.values))))

    def cdf(self, x):
        return np.interp(x, self._knots, self._cumulative)

    def density_at(self, x):
        """Right-continuous density (left limit at x = 1)."""
        k = np.searchsorted(self._knots, x, side="right") - 1
        return np.asarray(self.values)[np.clip(k, 0, len(self.values) - 1)]

    @property
    def total(self) -> float:
        return float(self._cumulative[-1])

    @property
    def lipschitz(self) -> float:
        return max(abs(v) for v in self.values)

    @property
    def hungry(self) -> bool:
        return min(self.values) >= HUNGRY_DELTA

    def to_json(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}


def value(density: PiecewiseDensity, tile: Tile | tuple[float, float]) -> float:
    lo, hi = (tile.lo, tile.hi) if isinstance(tile, Tile) else tile
    if lo == hi:
        return 0.0
    return float(density.cdf(hi) - density.cdf(lo))


@dataclass(frozen=True)
class ValuationProfile:
    densities: tuple[PiecewiseDensity, ...]
    regime: str = "hungry"

    def __post_init__(self):
        object.__setattr__(self, "densities", tuple(self.densities))
        if not self.densities:
            raise ValidationError("profile needs at least one player")
        if self.regime not in REGIMES:
            raise ValidationError(f"unknown regime {self.regime!r}")

    @property
    def n_players(self) -> int:
        return len(self.densities)

    def tile_values(self, cut_points) -> np.ndarray:
        """Matrix of values, rows = tiles of the cut, columns = players."""
        b = np.concatenate(([0.0], np.asarray(cut_points, dtype=float), [1.0]))
        out = np.empty((len(b) - 1, self.n_players))
        for j, d in enumerate(self.densities):
            out[:, j] = np.diff(d.cdf(b))
        out[b[1:] == b[:-1], :] = 0.0
        return out

    def tile_values_batch(self, cut_points) -> np.ndarray:
        """``tile_values`` for a stack of cuts: (N, m) cut points -> (N, tiles, players)."""
        x = np.asarray(cut_points, dtype=float)
        n = x.shape[0]
        b = np.concatenate((np.zeros((n, 1)), x, np.ones((n, 1))), axis=1)
        out = np.stack([np.diff(d.cdf(b), axis=1) for d in self.densities], axis=2)
        out[b[:, 1:] == b[:, :-1], :] = 0.0
        return out

    def tile_value_grad(self, cut_points) -> np.ndarray:
        """d value[k, j] / d cut_point[c], shape (tiles, players, cut points)."""
        x = np.asarray(cut_points, dtype=float)
        m = len(x)
        rho = np.stack([d.density_at(x) for d in self.densities], axis=1) if m else np.zeros((0, self.n_players))
        g = np.zeros((m + 1, self.n_players, m))
        for c in range(m):
            g[c, :, c] += rho[c]
            g[c + 1, :, c] -= rho[c]
        return g

    def normalized(self) -> "ValuationProfile":
        """Copy with every density divided by its total absolute mass (no-op for unit mass)."""
        ds = []
        for d in self.densities:
            mass = float(np.sum(np.abs(d.values) * np.diff(d.breakpoints)))
            if mass == 0.0:
                raise ValidationError("a density with zero total mass induces no preferences")
            ds.append(d if mass == 1.0 else PiecewiseDensity(d.breakpoints, tuple(x / mass for x in d.values)))
        return ValuationProfile(tuple(ds), self.regime)

    def scaled(self, player: int, factor: float) -> "ValuationProfile":
        """Copy with one (1-based) player's density multiplied by ``factor``."""
        ds = list(self.densities)
        d = ds[player - 1]
        ds[player - 1] = PiecewiseDensity(d.breakpoints, tuple(v * factor for v in d.values))
        return ValuationProfile(tuple(ds), self.regime)

    def to_json(self) -> dict:
        return {"players": [d.to_json() for d in self.densities], "regime": self.regime}

    @classmethod
    def from_json(cls, data: Mapping) -> "ValuationProfile":
        try:
            players = [PiecewiseDensity(tuple(p["breakpoints"]), tuple(p["values"])) for p in data["players"]]
            return cls(tuple(players), data.get("regime", "hungry"))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed profile JSON: {exc}") from exc

    @classmethod
    def uniform(cls, n_players: int) -> "ValuationProfile":
        return cls(tuple(PiecewiseDensity.uniform() for _ in range(n_players)))


def prefers(density: PiecewiseDensity, cut: Cut | Sequence[float], tile_index: int, tol: float = 0.0) -> bool:
    tiles = tiles_from_cut(cut)
    if not 1 <= tile_index <= len(tiles):
        raise ValidationError(f"tile index {tile_index} outside [1, {len(tiles)}]")
    vals = [value(density, t) for t in tiles]
    return vals[tile_index - 1] >= max(vals) - tol


def preferred_tiles(density: PiecewiseDensity, cut, tol: float = 0.0) -> frozenset:
    tiles = tiles_from_cut(cut)
    vals = [value(density, t) for t in tiles]
    top = max(vals)
    return frozenset(k + 1 for k, v in enumerate(vals) if v >= top - tol)


PreferenceOracle = Callable[[int, Cut], Iterable[int]]


def check_ppe(profile: Optional[ValuationProfile], pairs, oracle: Optional[PreferenceOracle] = None,
              n_players: Optional[int] = None) -> bool:
    """Partition-equivalence check on pairs of cuts with identical non-degenerate tiles.

    ``oracle(j, cut)`` returns the tiles player j prefers; by default it is the argmax of the
    profile's values.
    """
    if oracle is None:
        if profile is None:
            raise ValidationError("need a profile or an oracle")
        oracle = lambda j, cut: preferred_tiles(profile.densities[j - 1], cut)  # noqa: E731
        n_players = profile.n_players
    elif n_players is None:
        n_players = profile.n_players if profile is not None else 1
    for a, b in pairs:
        a = a if isinstance(a, Cut) else Cut(tuple(a))
        b = b if isinstance(b, Cut) else Cut(tuple(b))
        ta, tb = tiles_from_cut(a), tiles_from_cut(b)
        real_a = [(k + 1, t) for k, t in enumerate(ta) if not t.degenerate]
        real_b = [(k + 1, t) for k, t in enumerate(tb) if not t.degenerate]
        if len(ta) != len(tb) or [t for _, t in real_a] != [t for _, t in real_b]:
            raise ValidationError(f"cuts {a.points} and {b.points} do not share their non-degenerate tiles")
        deg_a = {k + 1 for k, t in enumerate(ta) if t.degenerate}
        deg_b = {k + 1 for k, t in enumerate(tb) if t.degenerate}
        for j in range(1, n_players + 1):
            pa, pb = set(oracle(j, a)), set(oracle(j, b))
            for (ka, _), (kb, _) in zip(real_a, real_b):
                if (ka in pa) != (kb in pb):
                    return False
            if bool(pa & deg_a) != bool(pb & deg_b):
                return False
    return True


def equivalent_cut_pairs(rng: np.random.Generator, r: int, count: int) -> list[tuple[Cut, Cut]]:
    """Random pairs of r-tile cuts sharing their non-degenerate tiles but not their layout."""
    pairs = []
    while len(pairs) < count:
        s = int(rng.integers(1, r + 1))
        inner = np.sort(rng.random(s - 1))
        ends = np.concatenate(([0.0], inner, [1.0]))
        if np.any(np.diff(ends) == 0.0):
            continue

        def layout():
            deg = set(rng.choice(r, size=r - s, replace=False).tolist())
            k, rights = 0, []
            for slot in range(r):
                if slot not in deg:
                    k += 1
                rights.append(float(ends[k]))
            return rights[:-1]

        a, b = layout(), layout()
        try:
            ca, cb = Cut(tuple(a)), Cut(tuple(b))
        except ValidationError:
            continue
        real = lambda c: [t for t in tiles_from_cut(c) if not t.degenerate]  # noqa: E731
        if real(ca) == real(cb) and len(real(ca)) == s:
            pairs.append((ca, cb))
    return pairs


def random_profile(seed: int, n_players: int, regime: str = "hungry", pieces: int = 8) -> ValuationProfile:
    """Seeded random profile; each player gets between 1 and ``pieces`` constant pieces."""
    if regime not in REGIMES:
        raise ValidationError(f"unknown regime {regime!r}")
    if not 1 <= pieces <= 8:
        raise ValidationError("pieces must lie in [1, 8]")
    rng = np.random.default_rng(seed)
    dens = []
    for _ in range(n_players):
        m = int(rng.integers(1, pieces + 1))
        inner = np.sort(rng.choice(np.arange(1, 1000), size=m - 1, replace=False)) / 1000.0
        bp = np.concatenate(([0.0], inner, [1.0]))
        vals = rng.uniform(0.1, 2.0, size=m)
        if regime == "signed":
            vals = np.where(rng.random(m) < 0.5, -vals, vals)
        mass = float(np.sum(np.abs(vals) * np.diff(bp)))
        dens.append(PiecewiseDensity(tuple(bp.tolist()), tuple((vals / mass).tolist())))
    return ValuationProfile(tuple(dens), regime)
