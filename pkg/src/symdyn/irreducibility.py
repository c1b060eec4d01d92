"""Gluing checks for separated domains, and maximal-separated-set shifts.

A shift space is *D-irreducible at level n* when any two admissible
level-``n`` patterns whose domains are D-apart (their D-translates do
not meet) occur jointly in a single point.  ``check_irreducible``
decides this exhaustively at a finite scale.  Under exact semantics on
the rank-1 lattice the scan runs over interval domains through the
sliding-window automaton; grouping patterns by their reachability
behavior keeps the scan polynomial in the scale, and a uniform
reachability certificate (``unconditional``) extends the verdict beyond
the scanned window.  Under local semantics the scan runs over ball
domains in any context and inherits the local approximation.

``canonical_gluing`` returns the deterministic least joint extension of
two compatible patterns — the densification pipeline depends on this
being reproducible cell for cell.  ``max_separated_subshift`` encodes
indicator functions of maximal D-separated sets as a finite-type
condition, together with the ball claimed to witness irreducibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .certificates import make_envelope, register_rebuilder
from .groups import (
    FiniteSubset,
    GroupContext,
    are_apart,
    parse_group,
    set_inv,
    set_mul,
    symmetric_closure,
    translate_set,
)
from .subshifts import (
    EXACT,
    GluingError,
    Pattern,
    Semantics,
    SftSpec,
    SubshiftError,
    _bitrow_mul,
    _require_exact_ctx,
    fill_completions,
    hull_interval,
    parse_semantics,
    pattern_set,
    project_letter,
    project_pattern,
    sorted_patterns,
    transfer_graph,
)


def level_preimages(spec: SftSpec, level: int) -> dict:
    """Full letters grouped by their truncation to the first ``level`` levels."""
    if not 1 <= level <= spec.stack:
        raise SubshiftError(f"level must lie in 1..{spec.stack}, got {level}")
    groups: dict = {}
    for a in spec.letters():
        groups.setdefault(project_letter(a, level, spec.stack), set()).add(a)
    return {v: frozenset(s) for v, s in groups.items()}


# ---------------------------------------------------------------------------
# exact interval engine
# ---------------------------------------------------------------------------

class _IntervalGluer:
    """Bitset reachability engine for interval-domain gluing on Z.

    Words at the checked level are grouped by two behaviors: the state
    set reachable after reading the word with a free left context
    (forward bits) and the state set from which the word can be read
    (entry bits).  Two words glue across a free gap of ``g`` cells iff
    some forward state reaches some entry state in exactly ``g`` steps,
    so each (length, gap, length) class needs one bit test per behavior
    pair instead of one per word pair.  Group representatives are the
    least words in each class, which keeps counterexamples canonical.
    """

    def __init__(self, spec: SftSpec, level: int):
        self.tg = transfer_graph(spec)
        self.pre = level_preimages(spec, level)
        self.level_letters = tuple(sorted(self.pre))
        self.index = {s: i for i, s in enumerate(self.tg.states)}
        k = len(self.tg.states)
        self.k = k
        self.full = (1 << k) - 1
        self.adj = [0] * k
        self.fwd = {v: [0] * k for v in self.level_letters}
        to_level = {
            a: project_letter(a, level, spec.stack) for a in spec.letters()
        }
        for s in self.tg.states:
            i = self.index[s]
            for b, t in self.tg.edges[s]:
                bit = 1 << self.index[t]
                self.adj[i] |= bit
                self.fwd[to_level[b]][i] |= bit
        self._powers = [[1 << i for i in range(k)]]
        self._er: dict[int, tuple] = {0: ((self.full, ()),)}
        self._en: dict[int, tuple] = {0: ((self.full, ()),)}
        self._rows: dict = {}

    def power(self, gap: int) -> list[int]:
        while len(self._powers) <= gap:
            prev = self._powers[-1]
            self._powers.append(
                [_bitrow_mul(prev[i], self.adj, self.k) for i in range(self.k)]
            )
        return self._powers[gap]

    def er_groups(self, length: int) -> tuple:
        """(forward bits, least word) per behavior class, words ascending."""
        top = max(self._er)
        while top < length:
            new: dict[int, tuple] = {}
            for bits, rep in self._er[top]:
                for v in self.level_letters:
                    nb = _bitrow_mul(bits, self.fwd[v], self.k)
                    if nb and nb not in new:
                        new[nb] = rep + (v,)
            top += 1
            self._er[top] = tuple(new.items())
        return self._er[length]

    def _backstep(self, bits: int, v) -> int:
        rows = self.fwd[v]
        out = 0
        for i in range(self.k):
            if rows[i] & bits:
                out |= 1 << i
        return out

    def en_groups(self, length: int) -> tuple:
        """(entry bits, least word) per behavior class, words ascending."""
        top = max(self._en)
        while top < length:
            new: dict[int, tuple] = {}
            for v in self.level_letters:
                for bits, rep in self._en[top]:
                    nb = self._backstep(bits, v)
                    if nb and nb not in new:
                        new[nb] = (v,) + rep
            top += 1
            self._en[top] = tuple(new.items())
        return self._en[length]

    def reach_row(self, er_bits: int, gap: int) -> int:
        key = (er_bits, gap)
        if key not in self._rows:
            self._rows[key] = _bitrow_mul(er_bits, self.power(gap), self.k)
        return self._rows[key]

    def class_counterexample(
        self, l1: int, gap: int, l2: int
    ) -> Optional[tuple[tuple, tuple]]:
        """Least ungluable word pair for this domain class, if any."""
        for er_bits, rep1 in self.er_groups(l1):
            row = self.reach_row(er_bits, gap)
            for en_bits, rep2 in self.en_groups(l2):
                if row & en_bits == 0:
                    return rep1, rep2
        return None

    def joint_feasible(self, l1: int, gap: int, l2: int, w1, w2) -> bool:
        """Plain window feasibility recheck, bypassing the group engine."""
        allowed = {i: self.pre[a] for i, a in enumerate(w1)}
        allowed.update({l1 + gap + i: self.pre[a] for i, a in enumerate(w2)})
        return self.tg.feasible(l1 + gap + l2, {}, allowed)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GluingCounterexample:
    """Two admissible patterns on D-apart domains with no joint point."""

    first: Pattern
    second: Pattern
    gap: Optional[int]  # free cells between interval hulls (exact mode)

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "first": self.first.to_json(ctx),
            "second": self.second.to_json(ctx),
            "gap": self.gap,
        }


@dataclass(frozen=True)
class IrreducibilityReport:
    holds: bool
    level: int
    scale: int
    semantics: str
    method: str
    pairs_checked: int
    min_gap: Optional[int]  # least interval gap that is D-apart (exact)
    mixing_gap: Optional[int]  # least uniform reachability length (exact)
    unconditional: bool  # verdict certified for every scale
    counterexample: Optional[GluingCounterexample]

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "holds": self.holds,
            "level": self.level,
            "scale": self.scale,
            "semantics": self.semantics,
            "method": self.method,
            "pairs_checked": self.pairs_checked,
            "min_gap": self.min_gap,
            "mixing_gap": self.mixing_gap,
            "unconditional": self.unconditional,
            "counterexample": (
                None
                if self.counterexample is None
                else self.counterexample.to_json(ctx)
            ),
        }


def _min_apart_gap(ctx: GroupContext, d: FiniteSubset) -> int:
    """Least free gap at which two singleton intervals are D-apart."""
    lo = min(g[0] for g in d)
    hi = max(g[0] for g in d)
    for gap in range(hi - lo + 2):
        if are_apart(
            ctx,
            d,
            FiniteSubset.of(ctx, [(0,)]),
            FiniteSubset.of(ctx, [(gap + 1,)]),
        ):
            return gap
    raise RuntimeError("translates of distant singletons must separate")


def _check_irreducible_exact(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    d: FiniteSubset,
    scale: int,
) -> IrreducibilityReport:
    engine = _IntervalGluer(spec, level)
    width = 2 * scale + 1
    min_gap = _min_apart_gap(ctx, d)
    pairs = 0
    found = None
    for gap in range(width - 1):
        for l1 in range(1, width - gap):
            for l2 in range(1, width - gap - l1 + 1):
                e1 = FiniteSubset.of(ctx, [(i,) for i in range(l1)])
                e2 = FiniteSubset.of(
                    ctx, [(l1 + gap + i,) for i in range(l2)]
                )
                if not are_apart(ctx, d, e1, e2):
                    continue
                pairs += 1
                bad = engine.class_counterexample(l1, gap, l2)
                if bad is not None:
                    found = (l1, gap, l2, bad)
                    break
            if found:
                break
        if found:
            break

    counterexample = None
    if found:
        l1, gap, l2, (w1, w2) = found
        if engine.joint_feasible(l1, gap, l2, w1, w2):
            raise RuntimeError("group engine and window recheck disagree")
        a1 = -scale
        a2 = a1 + l1 + gap
        counterexample = GluingCounterexample(
            first=Pattern.of(ctx, {(a1 + i,): v for i, v in enumerate(w1)}),
            second=Pattern.of(ctx, {(a2 + i,): v for i, v in enumerate(w2)}),
            gap=gap,
        )

    holds = found is None
    mixing = engine.tg.mixing_gap(max(2 * scale + 1, min_gap + 1))
    unconditional = holds and all(
        r == engine.full for r in engine.power(min_gap)
    )
    return IrreducibilityReport(
        holds=holds,
        level=level,
        scale=scale,
        semantics="exact",
        method="interval-transfer",
        pairs_checked=pairs,
        min_gap=min_gap,
        mixing_gap=mixing,
        unconditional=unconditional,
        counterexample=counterexample,
    )


def level_pattern_list(
    ctx: GroupContext,
    spec: SftSpec,
    dom: FiniteSubset,
    level: int,
    sem: Semantics,
) -> list[Pattern]:
    """Admissible ``dom``-patterns truncated to ``level``, canonically sorted."""
    pats = sorted_patterns(pattern_set(ctx, spec, dom, sem))
    if level == spec.stack:
        return pats
    return sorted_patterns(
        {project_pattern(ctx, p, level, spec.stack) for p in pats}
    )


def _check_irreducible_local(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    d: FiniteSubset,
    scale: int,
    sem: Semantics,
    domain_radii: tuple,
) -> IrreducibilityReport:
    pre = level_preimages(spec, level)
    radii = tuple(sorted(set(domain_radii)))
    base = {rho: level_pattern_list(ctx, spec, ctx.ball(rho), level, sem) for rho in radii}
    centers = ctx.ball(scale).elements
    domains = [(rho, c) for rho in radii for c in centers]
    pairs = 0
    for i, (r1, c1) in enumerate(domains):
        e1 = translate_set(ctx, ctx.ball(r1), c1)
        for r2, c2 in domains[i:]:
            e2 = translate_set(ctx, ctx.ball(r2), c2)
            if not are_apart(ctx, d, e1, e2):
                continue
            pairs += 1
            region = set_mul(
                ctx,
                ctx.ball(sem.margin),
                FiniteSubset.of(ctx, e1.elements + e2.elements),
            )
            for p1 in base[r1]:
                q1 = p1.translate(ctx, ctx.inv(c1))
                half = {g: pre[v] for g, v in q1.items()}
                for p2 in base[r2]:
                    q2 = p2.translate(ctx, ctx.inv(c2))
                    allowed = dict(half)
                    allowed.update({g: pre[v] for g, v in q2.items()})
                    fills = fill_completions(ctx, spec, region, {}, allowed)
                    if next(fills, None) is None:
                        return IrreducibilityReport(
                            holds=False,
                            level=level,
                            scale=scale,
                            semantics=sem.describe(),
                            method="ball-local",
                            pairs_checked=pairs,
                            min_gap=None,
                            mixing_gap=None,
                            unconditional=False,
                            counterexample=GluingCounterexample(q1, q2, None),
                        )
    return IrreducibilityReport(
        holds=True,
        level=level,
        scale=scale,
        semantics=sem.describe(),
        method="ball-local",
        pairs_checked=pairs,
        min_gap=None,
        mixing_gap=None,
        unconditional=False,
        counterexample=None,
    )


def check_irreducible(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    d: FiniteSubset,
    scale: int,
    sem: Semantics = EXACT,
    domain_radii: tuple = (0, 1),
) -> IrreducibilityReport:
    """Exhaustively test gluing of level patterns on D-apart domains.

    Exact semantics scans every interval-domain class inside
    ``ball(scale)`` (gluability is translation invariant, so classes
    stand for all placements).  Local semantics scans ball domains
    ``ball(rho) * c`` for ``rho`` in ``domain_radii`` and centers in
    ``ball(scale)``.  The report carries the first counterexample in
    deterministic order when the check fails.
    """
    if not isinstance(spec, SftSpec):
        raise SubshiftError("gluing checks need a finite-type presentation")
    if len(d) == 0:
        raise ValueError("the separation set must be non-empty")
    if scale < 1:
        raise ValueError("scale must be >= 1")
    level_preimages(spec, level)  # validates the level
    if sem.mode == "exact":
        _require_exact_ctx(ctx)
        return _check_irreducible_exact(ctx, spec, level, d, scale)
    return _check_irreducible_local(
        ctx, spec, level, d, scale, sem, domain_radii
    )


@dataclass(frozen=True)
class WitnessSearch:
    """Outcome of scanning ball radii for an irreducibility witness."""

    found: bool
    radius: Optional[int]
    witness: Optional[FiniteSubset]
    trail: tuple  # (radius, holds) in scan order
    final: IrreducibilityReport

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "found": self.found,
            "radius": self.radius,
            "witness": None if self.witness is None else self.witness.to_json(ctx),
            "trail": [list(t) for t in self.trail],
            "final": self.final.to_json(ctx),
        }


def irreducibility_witness_search(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    radii: Iterable[int],
    scale: int,
    sem: Semantics = EXACT,
    domain_radii: tuple = (0, 1),
) -> WitnessSearch:
    """Scan ``ball(r)`` for ascending ``r`` until one witnesses gluing."""
    trail = []
    final = None
    for r in sorted(set(radii)):
        report = check_irreducible(
            ctx, spec, level, ctx.ball(r), scale, sem, domain_radii
        )
        trail.append((r, report.holds))
        final = report
        if report.holds:
            return WitnessSearch(True, r, ctx.ball(r), tuple(trail), report)
    if final is None:
        raise ValueError("at least one radius is required")
    return WitnessSearch(False, None, None, tuple(trail), final)


# ---------------------------------------------------------------------------
# the deterministic gluing function
# ---------------------------------------------------------------------------

def _merged_clamps(alpha1: Pattern, alpha2: Pattern, f: FiniteSubset) -> dict:
    fset = f.as_set()
    for p in (alpha1, alpha2):
        stray = [g for g in p.domain if g not in fset]
        if stray:
            raise ValueError(f"pattern cell {stray[0]!r} lies outside the target domain")
    merged = alpha1.mapping()
    for g, v in alpha2.items():
        if merged.get(g, v) != v:
            raise GluingError(f"patterns disagree at {g!r}")
        merged[g] = v
    return merged


def conf(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    f: FiniteSubset,
    alpha1: Pattern,
    alpha2: Pattern,
    sem: Semantics = EXACT,
) -> Pattern:
    """The least admissible level-``level`` extension of two patterns on ``f``.

    Free cells are filled in the context's deterministic order, always
    taking the least level letter that keeps the window completable, so
    the result is reproducible across runs and machines — every
    downstream construction that needs "some joint extension" takes this
    one.  Raises ``GluingError`` when no joint extension exists, which
    callers should read as an invalid irreducibility witness at this
    scale.
    """
    if not isinstance(spec, SftSpec):
        raise SubshiftError("gluing needs a finite-type presentation")
    pre = level_preimages(spec, level)
    level_letters = tuple(sorted(pre))
    merged = _merged_clamps(alpha1, alpha2, f)
    for g, v in merged.items():
        if v not in pre:
            raise SubshiftError(f"{v!r} is not a level-{level} letter")
    free = [g for g in f if g not in merged]
    values = dict(merged)

    if sem.mode == "exact":
        _require_exact_ctx(ctx)
        tg = transfer_graph(spec)
        lo, hi = hull_interval(f)
        length = hi - lo + 1
        allowed = {g[0] - lo: pre[v] for g, v in merged.items()}
        if not tg.feasible(length, {}, allowed):
            raise GluingError("the two patterns admit no joint extension")
        for cell in free:
            pos = cell[0] - lo
            for v in level_letters:
                allowed[pos] = pre[v]
                if tg.feasible(length, {}, allowed):
                    values[cell] = v
                    break
            else:
                raise RuntimeError("feasible window lost during gluing")
        return Pattern.of(ctx, values)

    region = set_mul(ctx, ctx.ball(sem.margin), f)
    allowed = {g: pre[v] for g, v in merged.items()}
    if next(fill_completions(ctx, spec, region, {}, allowed), None) is None:
        raise GluingError("the two patterns admit no joint extension")
    for cell in free:
        for v in level_letters:
            allowed[cell] = pre[v]
            if next(fill_completions(ctx, spec, region, {}, allowed), None) is not None:
                values[cell] = v
                break
        else:
            raise RuntimeError("feasible region lost during gluing")
    return Pattern.of(ctx, values)


# ---------------------------------------------------------------------------
# maximal-separated-set subshift
# ---------------------------------------------------------------------------

def irreducibility_envelope(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    d: FiniteSubset,
    scale: int,
    sem: Semantics = EXACT,
) -> dict:
    """Certificate envelope for :func:`check_irreducible` (rebuildable)."""
    report = check_irreducible(ctx, spec, level, d, scale, sem)
    inputs = {
        "group": ctx.describe(),
        "spec": spec.to_json(ctx),
        "level": level,
        "domain": d.to_json(ctx),
        "scale": scale,
        "semantics": sem.describe(),
    }
    return make_envelope(
        claim="irreducible-gluing",
        module="irreducibility",
        inputs=inputs,
        scale=scale,
        verdict=report.holds,
        evidence={"report": report.to_json(ctx)},
    )


@register_rebuilder("irreducible-gluing")
def _rebuild_irreducible(inputs: dict) -> dict:
    ctx = parse_group(inputs["group"])
    spec = SftSpec.from_json(ctx, inputs["spec"])
    return irreducibility_envelope(
        ctx,
        spec,
        int(inputs["level"]),
        FiniteSubset.from_json(ctx, inputs["domain"]),
        int(inputs["scale"]),
        parse_semantics(inputs["semantics"]),
    )


def max_separated_subshift(
    ctx: GroupContext, d: FiniteSubset
) -> tuple[SftSpec, FiniteSubset]:
    """Indicators of maximal D-separated sets, as a finite-type condition.

    ``d`` is symmetrized internally.  A 0/1 point is admissible iff its
    support is D-separated (no two distinct support points have meeting
    D-translates: no pair of ones at a relative position in ``D * D``
    minus the identity) and maximal (every element is D²-covered: no
    all-zero window on ``D * D``).  Returns the presentation together
    with the ball ``D³`` claimed to witness irreducibility at level 1;
    run ``check_irreducible`` to validate the claim at a chosen scale.
    """
    if len(d) == 0:
        raise ValueError("the separation set must be non-empty")
    e = ctx.identity
    ds = symmetric_closure(ctx, d)
    diffs = set_mul(ctx, ds, ds)
    forbidden = [
        Pattern.of(ctx, {e: 1, k: 1}) for k in diffs if k != e
    ]
    forbidden.append(Pattern.of(ctx, {g: 0 for g in diffs}))
    spec = SftSpec(
        group=ctx.describe(),
        alphabet_sizes=(2,),
        forbidden=tuple(forbidden),
        name="max_separated_indicator",
    )
    witness = set_mul(ctx, set_mul(ctx, ds, ds), ds)
    return spec, witness
