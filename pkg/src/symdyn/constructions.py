"""Headline constructions on top of the gluing machinery.

Products and padding lift finite-type presentations to stacked alphabets.
The displaying-marker machinery rewrites an arbitrary point near a sparse
separated marker set: each marker carries a fixed stamp ``u`` that shows
every admissible window pattern, a collar around the stamp is re-glued
with :func:`~symdyn.irreducibility.conf`, and everything far from markers
is left untouched.  Densification, small-set shattering and the
finite-group equivariant variant are all instances of this rewrite with
different marker sets.

Builders construct, verifiers re-check: every certificate emitted here is
recomputed from its raw inputs by a registered rebuilder, so stored
verdicts and evidence are never trusted.
"""

from __future__ import annotations

import bisect
import itertools
import random
from dataclasses import dataclass, field
from math import isqrt
from typing import Callable, Optional

from .certificates import make_envelope, register_rebuilder
from .configurations import (
    Configuration,
    indicator_configuration,
    periodic_lattice_configuration,
)
from .groups import (
    FiniteGroupContext,
    FiniteSubset,
    GroupContext,
    LatticeContext,
    SmallnessReport,
    is_small,
    parse_group,
    set_pow,
)
from .irreducibility import (
    IrreducibilityReport,
    check_irreducible,
    conf,
    level_pattern_list,
    max_separated_subshift,
)
from .subshifts import (
    EXACT,
    ImageSpec,
    Pattern,
    Semantics,
    SftSpec,
    SpecLike,
    SubshiftError,
    _require_exact_ctx,
    essential_freeness_check,
    hull_interval,
    is_admissible,
    letter_coords,
    make_letter,
    parse_semantics,
    project_letter,
    sorted_patterns,
    transfer_graph,
)


class ConstructionError(RuntimeError):
    """A construction's preconditions failed or its search ran out."""


class SmallnessRejected(ConstructionError):
    """Shattering refused: the target set fails the smallness gate."""

    def __init__(self, message: str, report: SmallnessReport) -> None:
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# products, padding, images
# ---------------------------------------------------------------------------

def product_spec(spec_a: SftSpec, spec_b: SftSpec, name: str = "") -> SftSpec:
    """Stacked product: letters concatenate, forbidden patterns lift.

    A pattern forbidden on one side stays forbidden jointly with every
    choice of letters on the other side, so admissible points of the
    product are exactly the pairs of admissible points.
    """
    if not isinstance(spec_a, SftSpec) or not isinstance(spec_b, SftSpec):
        raise SubshiftError("products need finite-type presentations")
    if spec_a.group != spec_b.group:
        raise SubshiftError(
            f"product factors live on different groups: "
            f"{spec_a.group!r} vs {spec_b.group!r}"
        )
    ctx = parse_group(spec_a.group)
    sizes = spec_a.alphabet_sizes + spec_b.alphabet_sizes
    forbidden = []
    for p in spec_a.forbidden:
        cells = p.domain.elements
        for fill in itertools.product(spec_b.letters(), repeat=len(cells)):
            forbidden.append(
                Pattern.of(
                    ctx,
                    {
                        c: make_letter(
                            letter_coords(p.value_at(c), spec_a.stack)
                            + letter_coords(w, spec_b.stack)
                        )
                        for c, w in zip(cells, fill)
                    },
                )
            )
    for p in spec_b.forbidden:
        cells = p.domain.elements
        for fill in itertools.product(spec_a.letters(), repeat=len(cells)):
            forbidden.append(
                Pattern.of(
                    ctx,
                    {
                        c: make_letter(
                            letter_coords(w, spec_a.stack)
                            + letter_coords(p.value_at(c), spec_b.stack)
                        )
                        for c, w in zip(cells, fill)
                    },
                )
            )
    prod_name = name or "x".join(n for n in (spec_a.name, spec_b.name) if n)
    return SftSpec(spec_a.group, sizes, tuple(forbidden), prod_name)


def pad_free(
    spec: SftSpec, levels: int = 1, alphabet: int = 2, name: str = ""
) -> SftSpec:
    """Product with unconstrained extra levels (freeness padding)."""
    if levels < 1 or alphabet < 2:
        raise ValueError("padding needs at least one extra level on two letters")
    free = SftSpec(spec.group, (alphabet,) * levels, (), "free")
    default = f"{spec.name}+free" if spec.name else "padded"
    return product_spec(spec, free, name or default)


def block_map_image(spec: SpecLike, bmap, name: str = "") -> ImageSpec:
    """Image presentation under a sliding block map."""
    return ImageSpec(spec, bmap, name)


def freeness_envelope(
    ctx: GroupContext,
    spec: SftSpec,
    g,
    sem: Semantics = EXACT,
    radius_cap: int = 4,
) -> dict:
    """Certificate that ``g`` separates points inside every letter cylinder.

    Probes are the single-cell cylinders; the underlying check looks for an
    admissible window extending each probe on which translating by ``g``
    changes some value.  Failure pins the probe whose windows all look
    ``g``-periodic up to the radius cap.
    """
    if not isinstance(spec, SftSpec):
        raise SubshiftError("freeness certificates need a finite-type presentation")
    probes = [Pattern.of(ctx, {ctx.identity: a}) for a in spec.letters()]
    report = essential_freeness_check(ctx, spec, g, probes, sem, radius_cap)
    inputs = {
        "group": ctx.describe(),
        "spec": spec.to_json(ctx),
        "g": ctx.element_to_json(g),
        "semantics": sem.describe(),
        "radius_cap": radius_cap,
    }
    evidence = {
        "witnesses": [
            {
                "probe": w.probe.to_json(ctx),
                "window": w.window.to_json(ctx),
                "site": ctx.element_to_json(w.site),
                "radius": w.radius,
            }
            for w in report.witnesses
        ],
        "failed_probe": (
            None
            if report.failed_probe is None
            else report.failed_probe.to_json(ctx)
        ),
    }
    return make_envelope(
        "essential-freeness",
        "constructions",
        inputs,
        radius_cap,
        report.holds,
        evidence,
    )


@register_rebuilder("essential-freeness")
def _rebuild_freeness(inputs: dict) -> dict:
    ctx = parse_group(inputs["group"])
    return freeness_envelope(
        ctx,
        SftSpec.from_json(ctx, inputs["spec"]),
        ctx.element_from_json(inputs["g"]),
        parse_semantics(inputs["semantics"]),
        int(inputs["radius_cap"]),
    )


# ---------------------------------------------------------------------------
# displaying stamps and marker densification
# ---------------------------------------------------------------------------

def _display_witness(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    f: FiniteSubset,
    pats: list,
    witness_scale: int,
    sem: Semantics,
    max_v_radius: int,
) -> tuple:
    """Least ball V with a stamp showing every window pattern in a slot.

    A slot is a position ``k`` with ``F k`` inside V; the stamp is the
    canonically least admissible V-pattern whose slots jointly show every
    admissible F-pattern.  V must additionally pass the gluing check at
    the requested scale, so collars around stamps can always be re-glued.
    """
    for r in range(max_v_radius + 1):
        v = ctx.ball(r)
        if not all(g in v for g in f):
            continue
        slots = [k for k in v if all(ctx.mul(x, k) in v for x in f)]
        stamp = None
        for cand in level_pattern_list(ctx, spec, v, level, sem):
            if all(
                any(
                    all(
                        cand.value_at(ctx.mul(x, k)) == p.value_at(x)
                        for x in f
                    )
                    for k in slots
                )
                for p in pats
            ):
                stamp = cand
                break
        if stamp is None:
            continue
        report = check_irreducible(ctx, spec, level, v, witness_scale, sem)
        if report.holds:
            return r, v, stamp, report
    raise ConstructionError(
        f"no displaying ball up to radius {max_v_radius} shows all "
        f"{len(pats)} window patterns and verifies gluing"
    )


@dataclass(eq=False)
class PhiSystem:
    """Marker-densification data: displaying ball, stamp, marker system."""

    ctx: GroupContext
    base: SftSpec
    level: int
    window: FiniteSubset
    sem: Semantics
    v_radius: int
    v: FiniteSubset
    v3: FiniteSubset
    v5: FiniteSubset
    ring: FiniteSubset  # V^5 minus V^3: the re-glued collar
    u: Pattern  # displaying stamp on V
    witness_report: IrreducibilityReport
    marker_spec: SftSpec  # indicators of maximal V^5-separated sets
    marker_witness: FiniteSubset
    marker_spacing: int  # canonical marker period (0 off the rank-1 lattice)
    syndetic_bound: int  # stretch length that must contain a full stamp
    build_scale: int
    max_v_radius: int
    _conf_memo: dict = field(default_factory=dict, repr=False)


def build_phi(
    ctx: GroupContext,
    spec: SftSpec,
    level: int,
    f: FiniteSubset,
    witness_scale: int = 6,
    sem: Semantics = EXACT,
    max_v_radius: int = 6,
) -> PhiSystem:
    """Search for the least displaying ball and package the marker system.

    The ball must contain the window, carry a stamp showing every
    admissible window pattern, and pass the gluing check, so that points
    rewritten near any V^5-separated marker set keep their window-pattern
    set while acquiring stamps at every marker.
    """
    if not isinstance(spec, SftSpec):
        raise SubshiftError("densification needs a finite-type presentation")
    if len(f) == 0:
        raise ValueError("the window must be non-empty")
    pats = level_pattern_list(ctx, spec, f, level, sem)
    if len(pats) < 2:
        raise ConstructionError(
            "densification needs at least two window patterns to show"
        )
    r, v, stamp, report = _display_witness(
        ctx, spec, level, f, pats, witness_scale, sem, max_v_radius
    )
    v3 = set_pow(ctx, v, 3)
    v5 = set_pow(ctx, v, 5)
    ring = FiniteSubset.of(ctx, [g for g in v5 if g not in v3])
    marker_spec, marker_witness = max_separated_subshift(ctx, v5)
    if isinstance(ctx, LatticeContext) and ctx.rank == 1:
        # Maximal separation forbids all-zero stretches on ball(10r), so
        # markers are at most 20r+1 apart and every stretch of length
        # 22r+1 contains a whole stamp.
        spacing = 10 * r + 1
        bound = 22 * r + 1
    else:
        spacing = 0
        bound = 0
    return PhiSystem(
        ctx=ctx,
        base=spec,
        level=level,
        window=f,
        sem=sem,
        v_radius=r,
        v=v,
        v3=v3,
        v5=v5,
        ring=ring,
        u=stamp,
        witness_report=report,
        marker_spec=marker_spec,
        marker_witness=marker_witness,
        marker_spacing=spacing,
        syndetic_bound=bound,
        build_scale=witness_scale,
        max_v_radius=max_v_radius,
    )


def _phi_letter(sys: PhiSystem, zprime: Configuration, y: Configuration, g):
    """Resolve one cell of the rewritten point.

    Scans for a marker whose V^3-neighbourhood covers ``g``: none means
    the cell keeps the base point's (truncated) value, a marker within V
    means a stamp cell, and a marker within V^3 only means a collar cell
    looked up from the glued V^5 fill.  Two markers that close together
    mean the marker set was not V^5-separated, which is a hard fault.
    """
    ctx = sys.ctx
    hits = []
    for k in sys.v3:
        h = ctx.mul(ctx.inv(k), g)
        if y.value(h) == 1:
            hits.append((k, h))
    if len(hits) > 1:
        raise ConstructionError(
            f"markers collide near {ctx.element_to_text(g)}: "
            "the marker set is not V^5-separated"
        )
    if not hits:
        return project_letter(zprime.value(g), sys.level, sys.base.stack)
    k, h = hits[0]
    if k in sys.v:
        return sys.u.value_at(k)
    collar_vals = tuple(
        project_letter(zprime.value(ctx.mul(c, h)), sys.level, sys.base.stack)
        for c in sys.ring
    )
    q = sys._conf_memo.get(collar_vals)
    if q is None:
        collar = Pattern.of(ctx, dict(zip(sys.ring.elements, collar_vals)))
        q = conf(ctx, sys.base, sys.level, sys.v5, collar, sys.u, sys.sem)
        sys._conf_memo[collar_vals] = q
    return q.value_at(k)


def phi_eval(
    sys: PhiSystem, zprime: Configuration, y: Configuration, m: int, g
) -> int:
    """Level-``m`` coordinate of the rewritten point at ``g``."""
    if m < 0:
        raise ValueError("level index must be non-negative")
    if m >= sys.level:
        return 0
    return letter_coords(_phi_letter(sys, zprime, y, g), sys.level)[m]


def phi_point(
    sys: PhiSystem, zprime: Configuration, y: Configuration
) -> Configuration:
    """The rewritten configuration (letters truncated to the system level)."""
    return Configuration(
        sys.ctx,
        lambda g: _phi_letter(sys, zprime, y, g),
        f"densified[{sys.base.name or 'base'}]",
    )


def canonical_marker_point(sys: PhiSystem) -> Configuration:
    """Marker indicator with ones on the canonical lattice (rank-1 only)."""
    _require_exact_ctx(sys.ctx)
    spacing = sys.marker_spacing
    table = {(i,): (1 if i == 0 else 0) for i in range(spacing)}
    return periodic_lattice_configuration(sys.ctx, (spacing,), table)


def verify_phi(
    sys: PhiSystem, scale: int, samples: int = 12, seed: int = 0
) -> dict:
    """Re-check the densification claims on sampled base points.

    For the canonical marker point and each sampled admissible stretch of
    the base system, the image is evaluated exhaustively on
    ``[-scale, scale]`` and checked three ways: every window-pattern
    translate stays admissible, every stretch of the syndetic bound shows
    every admissible window pattern, and the scanned stretch as a whole
    shows exactly the expected pattern set.
    """
    ctx = sys.ctx
    _require_exact_ctx(ctx)
    if sys.sem.mode != "exact":
        raise SubshiftError("densification verification runs exact semantics")
    bound = sys.syndetic_bound
    if 2 * scale + 1 < bound:
        raise ValueError(
            f"scale too small: the scan must cover the syndetic bound {bound}"
        )
    f = sys.window
    flo, fhi = hull_interval(f)
    expected = set(level_pattern_list(ctx, sys.base, f, sys.level, sys.sem))
    tg = transfer_graph(sys.base)
    y = canonical_marker_point(sys)
    mtg = transfer_graph(sys.marker_spec)
    mspan = 3 * sys.marker_spacing
    marker_window_ok = mtg.contains(
        tuple(y.value((t,)) for t in range(-mspan, mspan + 1))
    )
    margin = scale + max(abs(flo), abs(fhi)) + 8 * sys.v_radius + 1
    length = 2 * margin + 1
    rng = random.Random(seed)
    words = [next(iter(tg.language(length)))]
    words += [tg.sample(length, rng) for _ in range(samples)]
    violations: list = []
    placements = 0
    stretches = 0
    for idx, word in enumerate(words):
        data = {(-margin + i,): word[i] for i in range(length)}
        zp = Configuration(ctx, lambda g, d=data: d[g], f"sample:{idx}")
        img = {
            t: _phi_letter(sys, zp, y, (t,))
            for t in range(-scale + flo, scale + fhi + 1)
        }
        pat_at = {}
        for t in range(-scale, scale + 1):
            p = Pattern.of(ctx, {x: img[x[0] + t] for x in f})
            pat_at[t] = p
            placements += 1
            if p not in expected:
                violations.append(
                    {
                        "kind": "pattern-escape",
                        "sample": idx,
                        "at": t,
                        "pattern": p.to_json(ctx),
                    }
                )
        for a in range(-scale, scale - bound + 2):
            stretches += 1
            seen = {
                pat_at[t]
                for t in range(a - flo, a + bound - fhi)
                if t in pat_at
            }
            missing = expected - seen
            if missing:
                violations.append(
                    {
                        "kind": "stretch-missing",
                        "sample": idx,
                        "at": a,
                        "missing": sorted_patterns(missing)[0].to_json(ctx),
                    }
                )
        whole = set(pat_at.values())
        if whole != expected:
            violations.append(
                {
                    "kind": "scan-pattern-set",
                    "sample": idx,
                    "missing": [
                        p.to_json(ctx) for p in sorted_patterns(expected - whole)
                    ],
                    "extra": [
                        p.to_json(ctx) for p in sorted_patterns(whole - expected)
                    ],
                }
            )
    verdict = marker_window_ok and not violations
    inputs = {
        "group": ctx.describe(),
        "spec": sys.base.to_json(ctx),
        "level": sys.level,
        "window": f.to_json(ctx),
        "semantics": sys.sem.describe(),
        "witness_scale": sys.build_scale,
        "max_v_radius": sys.max_v_radius,
        "scale": scale,
        "samples": samples,
        "seed": seed,
    }
    evidence = {
        "v_radius": sys.v_radius,
        "stamp": sys.u.to_json(ctx),
        "marker_spacing": sys.marker_spacing,
        "syndetic_bound": bound,
        "pattern_count": len(expected),
        "marker_window_ok": marker_window_ok,
        "samples_checked": len(words),
        "placements_checked": placements,
        "stretches_checked": stretches,
        "violations": violations,
    }
    return make_envelope(
        "phi-densification", "constructions", inputs, scale, verdict, evidence
    )


@register_rebuilder("phi-densification")
def _rebuild_phi(inputs: dict) -> dict:
    ctx = parse_group(inputs["group"])
    sys = build_phi(
        ctx,
        SftSpec.from_json(ctx, inputs["spec"]),
        int(inputs["level"]),
        FiniteSubset.from_json(ctx, inputs["window"]),
        witness_scale=int(inputs["witness_scale"]),
        sem=parse_semantics(inputs["semantics"]),
        max_v_radius=int(inputs["max_v_radius"]),
    )
    return verify_phi(
        sys, int(inputs["scale"]), int(inputs["samples"]), int(inputs["seed"])
    )


# ---------------------------------------------------------------------------
# small-set shattering
# ---------------------------------------------------------------------------

def squares_member(g) -> bool:
    """Perfect squares inside the non-negative integers."""
    n = g[0]
    return n >= 0 and isqrt(n) ** 2 == n


def evens_member(g) -> bool:
    """The even integers (syndetic, so never small)."""
    return g[0] % 2 == 0


MEMBER_PREDICATES: dict[str, Callable] = {
    "squares": squares_member,
    "evens": evens_member,
}


def _member_predicate(member) -> tuple[str, Callable]:
    if isinstance(member, str):
        fn = MEMBER_PREDICATES.get(member)
        if fn is None:
            raise ConstructionError(f"unknown member predicate {member!r}")
        return member, fn
    name = getattr(member, "__name__", "custom")
    for key, fn in MEMBER_PREDICATES.items():
        if fn is member:
            name = key
    return name, member


def _signed_offsets(cap: int):
    yield 0
    for k in range(1, cap + 1):
        yield -k
        yield k


@dataclass(eq=False)
class ShatterResult:
    """Outcome of shattering: the built point plus its certificate."""

    sys: PhiSystem
    point: Configuration  # rewritten point matching the choice on B
    markers: Configuration  # displaced marker indicator
    target: Configuration  # raw 0/1 choice the markers protect
    d_radius: int  # displacement ball radius
    x_spacing: int  # period of the underlying marker grid
    smallness: SmallnessReport
    certificate: dict


def shatter_small(
    ctx: GroupContext,
    member,
    c_elems,
    region,
    spec: Optional[SftSpec] = None,
    witness_scale: int = 6,
    avoid_cap: int = 2000,
    smallness_cap: int = 60,
) -> ShatterResult:
    """Realize an arbitrary 0/1 choice on a small set by dodging markers.

    ``member`` picks the small set B, ``c_elems`` lists the members of B
    that must carry 1.  The smallness gate demands whole avoided blocks of
    the radius the stamps need; the marker grid is then displaced into
    avoided blocks so no stamp or collar ever touches B, leaving the raw
    choice values on B untouched while the rest of the point carries the
    usual stamps.
    """
    _require_exact_ctx(ctx)
    member_name, member_fn = _member_predicate(member)
    if spec is None:
        spec = SftSpec(ctx.describe(), (2,), (), "full_shift")
    if spec.forbidden or spec.stack != 1 or spec.alphabet_sizes != (2,):
        raise ConstructionError(
            "shattering rewrites an unconstrained binary base point"
        )
    region = FiniteSubset.of(ctx, region)
    if len(region) == 0:
        raise ValueError("the region must be non-empty")
    c_sub = FiniteSubset.of(ctx, c_elems)
    stray = [g for g in c_sub if not member_fn(g)]
    if stray:
        raise ValueError(
            f"choice elements outside the shattered set: {stray[:3]!r}"
        )
    b_region = [g for g in region if member_fn(g)]
    window = FiniteSubset.of(ctx, [ctx.identity])
    sys = build_phi(ctx, spec, 1, window, witness_scale=witness_scale)
    r5 = 5 * sys.v_radius
    smallness = is_small(ctx, member_fn, r5, region, smallness_cap)
    if smallness.overall != "small-up-to-scale":
        bad = next(
            (v for v in smallness.per_radius if v.verdict != "small"), None
        )
        raise SmallnessRejected(
            "the target set fails the smallness gate at block radius "
            f"{bad.radius if bad else '?'}: "
            f"{bad.verdict if bad else 'unknown'}",
            smallness,
        )
    ints = [g[0] for g in region]
    lo, hi = min(ints), max(ints)
    avoided = [
        h
        for h in range(lo - avoid_cap, hi + avoid_cap + 1)
        if all(not member_fn((h + t,)) for t in range(-r5, r5 + 1))
    ]
    if not avoided:
        raise ConstructionError(
            f"no avoided block of radius {r5} within {avoid_cap} of the region"
        )
    worst = 0
    for n in ints:
        i = bisect.bisect_left(avoided, n)
        near = min(
            abs(avoided[j] - n) for j in (i - 1, i) if 0 <= j < len(avoided)
        )
        worst = max(worst, near)
    d_radius = r5 + worst
    spacing = 6 * d_radius + 1  # maximal ball(3*d_radius)-separated grid
    # Displacements beyond this cap would break V^5-separation of markers.
    sep_cap = (spacing - 10 * sys.v_radius - 1) // 2
    disp_memo: dict[int, int] = {}

    def displacement(gx: int) -> int:
        w = disp_memo.get(gx)
        if w is None:
            for cand in _signed_offsets(sep_cap):
                h = gx + cand
                if all(
                    not member_fn((h + t,)) for t in range(-r5, r5 + 1)
                ):
                    w = cand
                    break
            else:
                raise ConstructionError(
                    f"no avoided block within {sep_cap} of grid point {gx}"
                )
            disp_memo[gx] = w
        return w

    def y_rule(g):
        n = g[0]
        gx = ((n + spacing // 2) // spacing) * spacing
        if abs(n - gx) > sep_cap:
            return 0
        return 1 if gx + displacement(gx) == n else 0

    markers = Configuration(ctx, y_rule, "displaced-markers")
    target = indicator_configuration(ctx, lambda g: g in c_sub, "choice")
    point = phi_point(sys, target, markers)

    mismatches = [
        g
        for g in b_region
        if point.value(g) != (1 if g in c_sub else 0)
    ]
    marker_cells = [
        n
        for n in range(lo - spacing, hi + spacing + 1)
        if markers.value((n,)) == 1
    ]
    sep_ok = all(
        b - a > 10 * sys.v_radius
        for a, b in zip(marker_cells, marker_cells[1:])
    )
    blocks_ok = all(
        not member_fn((n + t,))
        for n in marker_cells
        for t in range(-r5, r5 + 1)
    )
    clearance_ok = all(
        abs(g[0] - n) > 3 * sys.v_radius
        for g in b_region
        for n in marker_cells
    )
    stamp_by_pos = [
        sys.u.value_at((k,))
        for k in range(-sys.v_radius, sys.v_radius + 1)
    ]
    stamps_ok = all(
        [
            point.value((n + k,))
            for k in range(-sys.v_radius, sys.v_radius + 1)
        ]
        == stamp_by_pos
        for n in marker_cells
    )
    verdict = (
        not mismatches and sep_ok and blocks_ok and clearance_ok and stamps_ok
    )
    used = [abs(disp_memo[gx]) for gx in sorted(disp_memo)]
    inputs = {
        "group": ctx.describe(),
        "spec": spec.to_json(ctx),
        "member": member_name,
        "choice": c_sub.to_json(ctx),
        "region": region.to_json(ctx),
        "witness_scale": witness_scale,
        "avoid_cap": avoid_cap,
        "smallness_cap": smallness_cap,
    }
    evidence = {
        "smallness": smallness.to_json(ctx),
        "d_radius": d_radius,
        "x_spacing": spacing,
        "separation_cap": sep_cap,
        "avoided_blocks": len(avoided),
        "marker_count": len(marker_cells),
        "max_displacement": max(used) if used else 0,
        "restriction_mismatches": [ctx.element_to_json(g) for g in mismatches],
        "markers_separated": sep_ok,
        "marker_blocks_avoid_set": blocks_ok,
        "set_clear_of_collars": clearance_ok,
        "stamps_in_place": stamps_ok,
    }
    certificate = make_envelope(
        "small-set-shattering",
        "constructions",
        inputs,
        max(abs(lo), abs(hi)),
        verdict,
        evidence,
    )
    return ShatterResult(
        sys=sys,
        point=point,
        markers=markers,
        target=target,
        d_radius=d_radius,
        x_spacing=spacing,
        smallness=smallness,
        certificate=certificate,
    )


@register_rebuilder("small-set-shattering")
def _rebuild_shatter(inputs: dict) -> dict:
    ctx = parse_group(inputs["group"])
    result = shatter_small(
        ctx,
        inputs["member"],
        FiniteSubset.from_json(ctx, inputs["choice"]),
        FiniteSubset.from_json(ctx, inputs["region"]),
        spec=SftSpec.from_json(ctx, inputs["spec"]),
        witness_scale=int(inputs["witness_scale"]),
        avoid_cap=int(inputs["avoid_cap"]),
        smallness_cap=int(inputs["smallness_cap"]),
    )
    return result.certificate


# ---------------------------------------------------------------------------
# equivariant densification over a finite acting group
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GammaSystem:
    """Equivariant densification data over a finite acting group.

    Markers sit on a fixed grid; the stamp at the ``j``-th marker is the
    base stamp with every letter multiplied by the ``j``-th group element,
    cycling through the whole group.  Collars are re-glued against a least
    periodic background point.
    """

    ctx: GroupContext
    gamma: FiniteGroupContext
    base: SftSpec
    window: FiniteSubset
    eps: float
    v_radius: int
    v: FiniteSubset
    v3: FiniteSubset
    v5: FiniteSubset
    ring: FiniteSubset
    u: Pattern
    witness_report: IrreducibilityReport
    marker_spacing: int
    syndetic_bound: int  # |group| * spacing + 2 * v_radius
    base_point: Configuration
    base_period: int
    _ring_memo: dict = field(default_factory=dict, repr=False)


def _gamma_ring_fill(gsys: GammaSystem, h: int, j: int) -> Pattern:
    key = (h % gsys.base_period, j)
    q = gsys._ring_memo.get(key)
    if q is None:
        ctx = gsys.ctx
        collar = Pattern.of(
            ctx,
            {c: gsys.base_point.value((c[0] + h,)) for c in gsys.ring},
        )
        stamped = Pattern.of(
            ctx,
            {c: gsys.gamma.mul(j, val) for c, val in gsys.u.items()},
        )
        q = conf(ctx, gsys.base, 1, gsys.v5, collar, stamped, EXACT)
        gsys._ring_memo[key] = q
    return q


def _gamma_star_letter(gsys: GammaSystem, g) -> int:
    n = g[0]
    spacing = gsys.marker_spacing
    h = ((n + spacing // 2) // spacing) * spacing
    k = n - h
    r = gsys.v_radius
    if abs(k) > 3 * r:
        return gsys.base_point.value(g)
    j = (h // spacing) % gsys.gamma.order
    if abs(k) <= r:
        return gsys.gamma.mul(j, gsys.u.value_at((k,)))
    return _gamma_ring_fill(gsys, h, j).value_at((k,))


def gamma_point(gsys: GammaSystem, gelt: int = 0) -> Configuration:
    """The built point, letterwise multiplied by a group element."""
    if not 0 <= gelt < gsys.gamma.order:
        raise ValueError("unknown group element")
    if gelt == 0:
        return Configuration(
            gsys.ctx, lambda g: _gamma_star_letter(gsys, g), "gamma-star"
        )
    return Configuration(
        gsys.ctx,
        lambda g: gsys.gamma.mul(gelt, _gamma_star_letter(gsys, g)),
        f"gamma-star*{gelt}",
    )


def least_periodic_point(
    ctx: GroupContext, spec: SftSpec, cap: int = 8
) -> tuple[Configuration, int]:
    """Canonically least periodic admissible point (period up to ``cap``)."""
    tg = transfer_graph(spec)
    for p in range(1, cap + 1):
        reps = tg.m // p + 2
        for w in tg.language(p):
            if tg.contains(w * reps):
                table = {(i,): w[i] for i in range(p)}
                return periodic_lattice_configuration(ctx, (p,), table), p
    raise ConstructionError(f"no admissible periodic point with period <= {cap}")


def gamma_densify(
    ctx: GroupContext,
    gamma: FiniteGroupContext,
    spec_y: SftSpec,
    f: FiniteSubset,
    eps: float,
    scale: int = 40,
    witness_scale: int = 6,
    max_v_radius: int = 6,
    closure_len: int = 6,
) -> tuple[GammaSystem, dict]:
    """Densify against cycling group-translated stamps; certify equivariance.

    The base alphabet must be the acting group's element set and its
    language closed under letterwise multiplication.  The certificate
    collects every window of the built point's letterwise translates and
    checks, window by window: stamps are group translates of the base
    stamp, off-stamp cells extend to admissible base points, every
    collar-length stretch is admissible, the realized window corpus is
    orbit-closed, and every stretch of the syndetic bound shows exactly
    the full admissible window-pattern set (any density level in (0, 1]
    forces that equality on a finite pattern set).
    """
    _require_exact_ctx(ctx)
    if not isinstance(gamma, FiniteGroupContext):
        raise TypeError("the acting group must be finite")
    if not isinstance(spec_y, SftSpec):
        raise SubshiftError("equivariant densification needs a finite-type base")
    if spec_y.group != ctx.describe():
        raise SubshiftError("the base system lives on a different group")
    if spec_y.stack != 1 or spec_y.alphabet_sizes != (gamma.order,):
        raise ConstructionError(
            "the base alphabet must be the acting group's element set"
        )
    if not 0 < eps <= 1:
        raise ValueError("the density level must lie in (0, 1]")
    tg = transfer_graph(spec_y)
    for length in range(1, closure_len + 1):
        for w in tg.language(length):
            for gelt in range(1, gamma.order):
                mapped = tuple(gamma.mul(gelt, a) for a in w)
                if not tg.contains(mapped):
                    raise ConstructionError(
                        f"base language is not invariant: {w!r} maps to "
                        f"inadmissible {mapped!r}"
                    )
    pats = level_pattern_list(ctx, spec_y, f, 1, EXACT)
    if len(pats) < 2:
        raise ConstructionError(
            "densification needs at least two window patterns to show"
        )
    r, v, stamp, report = _display_witness(
        ctx, spec_y, 1, f, pats, witness_scale, EXACT, max_v_radius
    )
    v3 = set_pow(ctx, v, 3)
    v5 = set_pow(ctx, v, 5)
    ring = FiniteSubset.of(ctx, [g for g in v5 if g not in v3])
    spacing = 10 * r + 1
    bound = gamma.order * spacing + 2 * r
    base_point, base_period = least_periodic_point(ctx, spec_y)
    gsys = GammaSystem(
        ctx=ctx,
        gamma=gamma,
        base=spec_y,
        window=f,
        eps=float(eps),
        v_radius=r,
        v=v,
        v3=v3,
        v5=v5,
        ring=ring,
        u=stamp,
        witness_report=report,
        marker_spacing=spacing,
        syndetic_bound=bound,
        base_point=base_point,
        base_period=base_period,
    )
    inputs = {
        "group": ctx.describe(),
        "gamma": gamma.describe(),
        "spec": spec_y.to_json(ctx),
        "window": f.to_json(ctx),
        "eps": float(eps),
        "scale": scale,
        "witness_scale": witness_scale,
        "max_v_radius": max_v_radius,
        "closure_len": closure_len,
    }
    env = _gamma_certificate(gsys, scale, inputs)
    return gsys, env


def _gamma_certificate(gsys: GammaSystem, scale: int, inputs: dict) -> dict:
    ctx = gsys.ctx
    gamma = gsys.gamma
    bound = gsys.syndetic_bound
    if 2 * scale + 1 < bound:
        raise ValueError(
            f"scale too small: the scan must cover the syndetic bound {bound}"
        )
    wlen = bound
    spacing = gsys.marker_spacing
    r = gsys.v_radius
    tg = transfer_graph(gsys.base)
    star = {t: _gamma_star_letter(gsys, (t,)) for t in range(-scale, scale + 1)}
    corpus: dict[tuple, tuple] = {}
    for gelt in range(gamma.order):
        row = [gamma.mul(gelt, star[t]) for t in range(-scale, scale + 1)]
        for i in range(len(row) - wlen + 1):
            corpus.setdefault(tuple(row[i : i + wlen]), (gelt, i - scale))
    violations: list = []
    for w in sorted(corpus):
        for gelt in range(1, gamma.order):
            moved = tuple(gamma.mul(gelt, x) for x in w)
            if moved not in corpus:
                violations.append(
                    {"kind": "orbit-escape", "window": list(w), "by": gelt}
                )
    expected = set(level_pattern_list(ctx, gsys.base, gsys.window, 1, EXACT))
    flo, fhi = hull_interval(gsys.window)
    stamp_by_pos = [gsys.u.value_at((k,)) for k in range(-r, r + 1)]
    stamp_orbit = [
        [gamma.mul(gelt, x) for x in stamp_by_pos]
        for gelt in range(gamma.order)
    ]
    span = 10 * r + 1
    for w, (gelt, a) in sorted(corpus.items()):
        h = -(-(a + r) // spacing) * spacing
        while h + r <= a + wlen - 1:
            vals = [w[t - a] for t in range(h - r, h + r + 1)]
            if vals not in stamp_orbit:
                violations.append(
                    {"kind": "stamp-mismatch", "window": list(w), "at": h}
                )
            h += spacing
        off = {}
        for t in range(a, a + wlen):
            hnear = ((t + spacing // 2) // spacing) * spacing
            if abs(t - hnear) > 3 * r:
                off[(t,)] = w[t - a]
        if off and not is_admissible(ctx, gsys.base, Pattern.of(ctx, off), EXACT):
            violations.append({"kind": "off-stamp-escape", "window": list(w)})
        for b in range(wlen - span + 1):
            if not tg.contains(w[b : b + span]):
                violations.append(
                    {"kind": "collar-escape", "window": list(w), "at": a + b}
                )
                break
        seen = set()
        for t in range(a - flo, a + wlen - fhi):
            seen.add(
                Pattern.of(ctx, {x: w[x[0] + t - a] for x in gsys.window})
            )
        if seen != expected:
            violations.append(
                {"kind": "window-pattern-set", "window": list(w)}
            )
    verdict = not violations
    evidence = {
        "v_radius": r,
        "stamp": gsys.u.to_json(ctx),
        "marker_spacing": spacing,
        "syndetic_bound": bound,
        "base_period": gsys.base_period,
        "corpus_size": len(corpus),
        "pattern_count": len(expected),
        "eps_note": "any density level in (0, 1] forces exact equality "
        "of finite window-pattern sets",
        "violations": violations,
    }
    return make_envelope(
        "gamma-densification", "constructions", inputs, scale, verdict, evidence
    )


@register_rebuilder("gamma-densification")
def _rebuild_gamma(inputs: dict) -> dict:
    ctx = parse_group(inputs["group"])
    gamma = parse_group(inputs["gamma"])
    _, env = gamma_densify(
        ctx,
        gamma,
        SftSpec.from_json(ctx, inputs["spec"]),
        FiniteSubset.from_json(ctx, inputs["window"]),
        float(inputs["eps"]),
        scale=int(inputs["scale"]),
        witness_scale=int(inputs["witness_scale"]),
        max_v_radius=int(inputs["max_v_radius"]),
        closure_len=int(inputs["closure_len"]),
    )
    return env
