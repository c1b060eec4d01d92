"""Rule-backed total configurations and canonical point constructions.

A :class:`Configuration` wraps a total evaluation rule ``g -> letter``
with a memo cache, so points built by staged or periodic constructions
can be shifted and sampled on any finite window without materializing
more than what was asked for.  Caches are only ever filled with the
rule's own values, so concurrent readers cannot disagree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import isqrt
from typing import Callable, Iterator

from .groups import (
    FiniteSubset,
    FiniteGroupContext,
    GroupContext,
    LatticeContext,
    maximal_separated,
)
from .subshifts import Pattern


class Configuration:
    """Total map from the group to letters, evaluated lazily."""

    def __init__(self, ctx: GroupContext, rule: Callable, label: str = "") -> None:
        self.ctx = ctx
        self.rule = rule
        self.label = label
        self._cache: dict = {}

    def value(self, g):
        if g not in self._cache:
            self._cache[g] = self.rule(g)
        return self._cache[g]

    def window(self, f: FiniteSubset) -> Pattern:
        return Pattern.of(self.ctx, {g: self.value(g) for g in f})

    def shift_by(self, g) -> "Configuration":
        """The translate ``g . z`` with ``(g . z)(h) = z(h g)``."""
        ctx = self.ctx
        return Configuration(
            ctx, lambda h: self.value(ctx.mul(h, g)), f"{self.label}<<{g}"
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"<Configuration {self.label or hex(id(self))}>"


def shift(config: Configuration, g) -> Configuration:
    return config.shift_by(g)


def restrict(config: Configuration, f: FiniteSubset) -> Pattern:
    return config.window(f)


def constant_configuration(ctx: GroupContext, letter) -> Configuration:
    return Configuration(ctx, lambda g: letter, f"const:{letter}")


def mapping_configuration(
    ctx: GroupContext, mapping: dict, default
) -> Configuration:
    data = dict(mapping)
    return Configuration(
        ctx, lambda g: data.get(g, default), f"explicit[{len(data)} cells]"
    )


def indicator_configuration(
    ctx: GroupContext, member: Callable, label: str = "indicator"
) -> Configuration:
    return Configuration(ctx, lambda g: 1 if member(g) else 0, label)


def periodic_lattice_configuration(
    ctx: LatticeContext, periods: tuple, table: dict
) -> Configuration:
    """Lattice configuration with value ``table[g mod periods]``."""
    if not isinstance(ctx, LatticeContext):
        raise TypeError("periodic configurations need a lattice context")

    def rule(g):
        return table[tuple(x % p for x, p in zip(g, periods))]

    return Configuration(ctx, rule, f"periodic{periods}")


def elements_in_order(ctx: GroupContext) -> Iterator:
    """All group elements in deterministic order (radius by radius)."""
    seen: set = set()
    r = 0
    while True:
        fresh = [g for g in ctx.ball(r) if g not in seen]
        if r > 0 and not fresh and isinstance(ctx, FiniteGroupContext):
            return
        yield from fresh
        seen.update(fresh)
        r += 1


# ---------------------------------------------------------------------------
# mechanical (Sturmian) point for the fibonacci substitution corpus entry
# ---------------------------------------------------------------------------

def _floor_fib_slope(x: int) -> int:
    """Exact ``floor(x * (3 - sqrt(5)) / 2)`` via integer square roots."""
    if x == 0:
        return 0
    s = isqrt(5 * x * x)
    if x < 0:
        s = -s - 1  # 5*x*x is never a perfect square for x != 0
    q = 3 * x - s
    return q // 2 - 1 if q % 2 == 0 else (q - 1) // 2


def fibonacci_configuration(ctx: LatticeContext) -> Configuration:
    """Two-sided mechanical word with the fibonacci substitution's slope.

    Its factor language equals the substitution's factor language, which
    the tests pin against the expansion-generated factors.
    """

    def rule(g):
        n = g[0]
        return _floor_fib_slope(n + 1) - _floor_fib_slope(n)

    return Configuration(ctx, rule, "fibonacci-mechanical")


# ---------------------------------------------------------------------------
# almost periodic point through a prescribed cylinder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CylinderPoint:
    config: Configuration
    backbone: object  # periods tuple on lattices, FiniteSubset on finite groups
    pattern: Pattern
    default_letter: object


def minimal_point_in_cylinder(
    ctx: GroupContext, alpha: Pattern, default_letter
) -> CylinderPoint:
    """Total point whose translates visit ``alpha`` along a periodic
    maximal separated backbone.

    The backbone ``C`` is maximal ``dom(alpha)``-separated, so the copies
    of ``alpha`` stamped on ``dom(alpha) * c`` never collide and recur
    syndetically.  On lattices ``C`` is the sublattice with periods one
    more than the per-coordinate diameters of ``dom(alpha)``; finite
    groups take the greedy maximal separated subset.  Free groups have no
    canonical periodic backbone at desk scale and are rejected.
    """
    f = alpha.domain
    if len(f) == 0:
        raise ValueError("cylinder pattern must be non-empty")
    if isinstance(ctx, LatticeContext):
        coords = list(zip(*f.elements))
        periods = tuple(max(c) - min(c) + 1 for c in coords)
        fmap = dict(alpha.items())

        def rule(g):
            for h, v in fmap.items():
                if all((x - y) % p == 0 for x, y, p in zip(g, h, periods)):
                    return v
            return default_letter

        cfg = Configuration(ctx, rule, f"cylinder-point{periods}")
        return CylinderPoint(cfg, periods, alpha, default_letter)
    if isinstance(ctx, FiniteGroupContext):
        c = maximal_separated(ctx, f, ctx.ball(1))
        stamped: dict = {}
        for cc in c:
            for h, v in alpha.items():
                stamped[ctx.mul(h, cc)] = v
        cfg = mapping_configuration(ctx, stamped, default_letter)
        return CylinderPoint(cfg, c, alpha, default_letter)
    raise TypeError(
        "minimal_point_in_cylinder needs a lattice or finite group context"
    )


# ---------------------------------------------------------------------------
# staged free point with dense orbit in the full binary shift
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stage:
    window: FiniteSubset
    placements: tuple  # ((values tuple, site g), ...) in enumeration order
    probe_site: object  # h_i with z(h_i) = 0
    free_target: object  # g_i with z(h_i g_i) = 1


@dataclass(frozen=True)
class FreeDensePoint:
    config: Configuration
    stages: tuple
    support_radius: int


def free_dense_point(ctx: GroupContext, depth: int) -> FreeDensePoint:
    """Binary point realizing every pattern on ``ball(i-1)`` for each
    stage ``i <= depth`` and separating the first ``depth`` non-identity
    translations.

    Stage ``i`` stamps one disjoint block per pattern on ``ball(i-1)``
    (all ``2^|ball(i-1)|`` of them, placed greedily in deterministic
    order) and then reserves a fresh pair ``h_i, h_i g_i`` with values
    0, 1, so the ``g_i``-translate provably moves the point.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    assigned: dict = {}
    used: set = set()
    order = elements_in_order(ctx)
    targets = []
    for g in order:
        if g != ctx.identity:
            targets.append(g)
        if len(targets) == depth:
            break

    def fresh_site(cells_of: Callable) -> object:
        for g in elements_in_order(ctx):
            cells = cells_of(g)
            if all(c not in used for c in cells):
                return g
        raise RuntimeError("unreachable: group exhausted")  # pragma: no cover

    stages = []
    for i in range(1, depth + 1):
        window = ctx.ball(i - 1)
        placements = []
        for values in itertools.product((0, 1), repeat=len(window)):
            site = fresh_site(lambda g: [ctx.mul(x, g) for x in window])
            for x, v in zip(window.elements, values):
                cell = ctx.mul(x, site)
                assigned[cell] = v
                used.add(cell)
            placements.append((values, site))
        gi = targets[i - 1]
        probe = fresh_site(lambda h: [h, ctx.mul(h, gi)])
        assigned[probe] = 0
        assigned[ctx.mul(probe, gi)] = 1
        used.add(probe)
        used.add(ctx.mul(probe, gi))
        stages.append(Stage(window, tuple(placements), probe, gi))

    radius = max((ctx.word_length(c) for c in used), default=0)
    cfg = mapping_configuration(ctx, assigned, 0)
    cfg.label = f"free-dense-point[depth={depth}]"
    return FreeDensePoint(cfg, tuple(stages), radius)


def verify_free_dense_point(ctx: GroupContext, point: FreeDensePoint) -> dict:
    """Independent recheck of the staged guarantees, by evaluation."""
    z = point.config
    pattern_hits = 0
    freeness_hits = 0
    for st in point.stages:
        for values, site in st.placements:
            shifted = z.shift_by(site)
            got = tuple(shifted.value(x) for x in st.window)
            if got != values:
                return {
                    "ok": False,
                    "failure": "pattern",
                    "stage": len(st.window),
                    "site": ctx.element_to_json(site),
                }
            pattern_hits += 1
        h = st.probe_site
        if z.value(h) != 0 or z.value(ctx.mul(h, st.free_target)) != 1:
            return {
                "ok": False,
                "failure": "freeness",
                "target": ctx.element_to_json(st.free_target),
            }
        freeness_hits += 1
    return {
        "ok": True,
        "pattern_hits": pattern_hits,
        "freeness_hits": freeness_hits,
        "support_radius": point.support_radius,
    }
