"""Finite patterns, subshift presentations and window-scale pattern sets.

Conventions
-----------
Configurations are maps ``z : G -> A`` carrying the right-shift action
``(g . z)(h) = z(h g)``.  A *pattern* is a finite partial configuration;
the cylinder of a pattern ``p`` is ``{z : z agrees with p on dom(p)}``.
A forbidden pattern ``p`` rules out every translate: ``z`` is admissible
iff for no ``g`` the window ``(g . z)|_dom(p)`` equals ``p``.

Letters are plain ints for depth-1 alphabets and int tuples for stacked
alphabets (one coordinate per level).

Two pattern semantics are available:

* ``exact`` — rank-1 lattices only; the window language is computed from
  a transfer graph (recurrent part), so membership means genuine
  extendability to a bi-infinite admissible configuration;
* ``local(m)`` — any context; a pattern is accepted when it extends to
  an assignment with no fully visible forbidden occurrence on the
  ``ball(m)``-thickened domain.

All enumerations run in the deterministic order of the group context
(positions) and ascending letter order (values).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Union

from .groups import (
    FiniteSubset,
    GroupContext,
    LatticeContext,
    set_mul,
)

Letter = Union[int, tuple]


class SubshiftError(ValueError):
    """Raised for malformed presentations or unsupported semantics."""


class GluingError(RuntimeError):
    """Raised when a requested joint extension does not exist."""


# ---------------------------------------------------------------------------
# patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pattern:
    """Finite partial configuration; values aligned with the sorted domain."""

    domain: FiniteSubset
    values: tuple
    _map: dict = field(compare=False, repr=False, hash=False)

    @staticmethod
    def of(ctx: GroupContext, mapping: dict) -> "Pattern":
        dom = FiniteSubset.of(ctx, mapping.keys())
        vals = tuple(mapping[g] for g in dom)
        return Pattern(dom, vals, dict(zip(dom.elements, vals)))

    def __hash__(self) -> int:
        return hash((self.domain, self.values))

    def value_at(self, g) -> Letter:
        return self._map[g]

    def get(self, g, default=None):
        return self._map.get(g, default)

    def items(self):
        return zip(self.domain.elements, self.values)

    def mapping(self) -> dict:
        return dict(self._map)

    def restrict(self, ctx: GroupContext, sub: FiniteSubset) -> "Pattern":
        return Pattern.of(ctx, {g: self._map[g] for g in sub})

    def translate(self, ctx: GroupContext, g) -> "Pattern":
        """Pattern satisfied by ``g . z`` when ``z`` satisfies this one."""
        ginv = ctx.inv(g)
        return Pattern.of(
            ctx, {ctx.mul(h, ginv): v for h, v in self.items()}
        )

    def agrees_with(self, other: "Pattern") -> bool:
        small, big = (
            (self, other) if len(self.domain) <= len(other.domain) else (other, self)
        )
        for g, v in small.items():
            w = big.get(g)
            if w is not None and w != v:
                return False
        return True

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "domain": [ctx.element_to_json(g) for g in self.domain],
            "values": [letter_to_json(v) for v in self.values],
        }

    @staticmethod
    def from_json(ctx: GroupContext, obj: dict) -> "Pattern":
        dom = [ctx.element_from_json(x) for x in obj["domain"]]
        vals = [letter_from_json(v) for v in obj["values"]]
        if len(dom) != len(vals):
            raise SubshiftError("pattern domain/values length mismatch")
        return Pattern.of(ctx, dict(zip(dom, vals)))


def letter_to_json(v: Letter):
    return list(v) if isinstance(v, tuple) else v


def letter_from_json(obj) -> Letter:
    return tuple(obj) if isinstance(obj, list) else int(obj)


def pattern_sort_key(p: Pattern):
    return (len(p.domain), p.domain.elements, p.values)


def sorted_patterns(pats: Iterable[Pattern]) -> list[Pattern]:
    return sorted(pats, key=pattern_sort_key)


# ---------------------------------------------------------------------------
# semantics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Semantics:
    mode: str  # "exact" | "local"
    margin: int = 0

    def describe(self) -> str:
        return "exact" if self.mode == "exact" else f"local:{self.margin}"


EXACT = Semantics("exact")


def local(margin: int) -> Semantics:
    if margin < 0:
        raise ValueError("local margin must be >= 0")
    return Semantics("local", margin)


def parse_semantics(text: str) -> Semantics:
    text = text.strip()
    if text == "exact":
        return EXACT
    if text.startswith("local:"):
        return local(int(text.split(":", 1)[1]))
    raise SubshiftError(f"cannot parse semantics {text!r}")


def _require_exact_ctx(ctx: GroupContext) -> None:
    if not (isinstance(ctx, LatticeContext) and ctx.rank == 1):
        raise SubshiftError("exact semantics requires the rank-1 lattice")


# ---------------------------------------------------------------------------
# presentations
# ---------------------------------------------------------------------------

def _letters_for(sizes: tuple[int, ...]) -> tuple:
    if any(s < 1 for s in sizes):
        raise SubshiftError("alphabet sizes must be >= 1")
    if len(sizes) == 1:
        return tuple(range(sizes[0]))
    return tuple(itertools.product(*(range(s) for s in sizes)))


@dataclass(frozen=True)
class SftSpec:
    """Subshift of finite type: alphabet sizes per level + forbidden patterns."""

    group: str
    alphabet_sizes: tuple
    forbidden: tuple
    name: str = ""

    def __post_init__(self):
        for p in self.forbidden:
            if len(p.domain) == 0:
                raise SubshiftError("forbidden patterns need non-empty domains")

    @property
    def stack(self) -> int:
        return len(self.alphabet_sizes)

    def letters(self) -> tuple:
        return _letters_for(self.alphabet_sizes)

    def to_json(self, ctx: GroupContext) -> dict:
        alpha = (
            self.alphabet_sizes[0]
            if len(set(self.alphabet_sizes)) == 1
            else list(self.alphabet_sizes)
        )
        return {
            "group": self.group,
            "alphabet": alpha,
            "stack": self.stack,
            "forbidden": [p.to_json(ctx) for p in self.forbidden],
            "name": self.name,
        }

    @staticmethod
    def from_json(ctx: GroupContext, obj: dict) -> "SftSpec":
        alpha = obj["alphabet"]
        stack = int(obj.get("stack", 1))
        if isinstance(alpha, list):
            sizes = tuple(int(a) for a in alpha)
        else:
            sizes = (int(alpha),) * stack
        forb = tuple(Pattern.from_json(ctx, p) for p in obj.get("forbidden", []))
        return SftSpec(obj["group"], sizes, forb, obj.get("name", ""))


@dataclass(frozen=True)
class SubstitutionSpec:
    """Substitution system on Z, presented by its expansion rules.

    The window language is the factor set of the one-sided fixed point of
    the substitution (rule for letter 0 must start with 0 and expand), so
    only exact semantics applies and only on the rank-1 lattice.
    """

    group: str
    alphabet_sizes: tuple
    rules: tuple  # rules[letter] = tuple of letters
    name: str = ""

    def __post_init__(self):
        if self.group != "Z":
            raise SubshiftError("substitution systems are presented on Z only")
        if len(self.alphabet_sizes) != 1:
            raise SubshiftError("substitution systems are depth-1")
        k = self.alphabet_sizes[0]
        if len(self.rules) != k or any(not r for r in self.rules):
            raise SubshiftError("need a non-empty rule per letter")
        if self.rules[0][0] != 0 or len(self.rules[0]) < 2:
            raise SubshiftError("rule for 0 must start with 0 and expand")

    @property
    def stack(self) -> int:
        return 1

    def letters(self) -> tuple:
        return _letters_for(self.alphabet_sizes)

    def fixed_point_prefix(self, length: int) -> tuple:
        word: tuple = (0,)
        while len(word) < length:
            word = tuple(x for a in word for x in self.rules[a])
        return word[:length]

    def factors(self, length: int) -> list[tuple]:
        """All length-``length`` factors of the fixed point, sorted."""
        if length == 0:
            return [()]
        # margin chosen generously past the uniform-recurrence bound at
        # desk scale; tests pin the factor counts independently.
        prefix = self.fixed_point_prefix(20 * length + 200)
        found = {
            prefix[i : i + length] for i in range(len(prefix) - length + 1)
        }
        return sorted(found)

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "group": self.group,
            "alphabet": self.alphabet_sizes[0],
            "stack": 1,
            "substitution": {str(i): list(r) for i, r in enumerate(self.rules)},
            "name": self.name,
        }

    @staticmethod
    def from_json(ctx: GroupContext, obj: dict) -> "SubstitutionSpec":
        k = int(obj["alphabet"])
        sub = obj["substitution"]
        rules = tuple(tuple(sub[str(i)]) for i in range(k))
        return SubstitutionSpec(obj["group"], (k,), rules, obj.get("name", ""))


@dataclass(frozen=True)
class BlockMap:
    """Sliding-block code: output letter from the window on ``support``."""

    support: FiniteSubset
    out_sizes: tuple
    name: str
    fn: Callable = field(compare=False, hash=False)

    def apply_window(self, window: tuple) -> Letter:
        return self.fn(window)


@dataclass(frozen=True)
class ImageSpec:
    """Image of a subshift under a block map, represented intensionally.

    Pattern sets are push-forwards of the source pattern sets; nothing is
    inferred about the image beyond what window enumeration shows.
    """

    source: object
    bmap: BlockMap
    name: str = ""

    @property
    def group(self) -> str:
        return self.source.group

    @property
    def alphabet_sizes(self) -> tuple:
        return self.bmap.out_sizes

    @property
    def stack(self) -> int:
        return len(self.bmap.out_sizes)

    def letters(self) -> tuple:
        return _letters_for(self.bmap.out_sizes)


SpecLike = Union[SftSpec, SubstitutionSpec, ImageSpec]


def project_letter(v: Letter, n: int, stack: int) -> Letter:
    """Truncate a stacked letter to its first ``n`` levels."""
    if stack == 1:
        if n != 1:
            raise SubshiftError("depth-1 letters only project to n=1")
        return v
    if not 1 <= n <= stack:
        raise SubshiftError(f"cannot project stack {stack} to {n} levels")
    return v[0] if n == 1 else tuple(v[:n])


def letter_coords(v: Letter, stack: int) -> tuple:
    """Per-level coordinates of a letter (singletons for depth 1)."""
    return (v,) if stack == 1 else tuple(v)


def make_letter(coords: tuple) -> Letter:
    """Inverse of :func:`letter_coords`: rebuild a letter from coordinates."""
    return coords[0] if len(coords) == 1 else tuple(coords)


def project_pattern(ctx: GroupContext, p: Pattern, n: int, stack: int) -> Pattern:
    return Pattern.of(
        ctx, {g: project_letter(v, n, stack) for g, v in p.items()}
    )


def project_pattern_set(
    ctx: GroupContext, pats: Iterable[Pattern], n: int, stack: int
) -> frozenset:
    return frozenset(project_pattern(ctx, p, n, stack) for p in pats)


# ---------------------------------------------------------------------------
# transfer graph (exact semantics on Z)
# ---------------------------------------------------------------------------

def _interval_ints(f: FiniteSubset) -> list[int]:
    return [g[0] for g in f]


def hull_interval(f: FiniteSubset) -> tuple[int, int]:
    ints = _interval_ints(f)
    return (min(ints), max(ints))


def _normalized_forbidden(spec: SftSpec) -> list[tuple[tuple, tuple]]:
    """Each forbidden pattern as (relative offsets from 0, values), sorted."""
    out = []
    for p in spec.forbidden:
        pairs = sorted((g[0], v) for g, v in p.items())
        base = pairs[0][0]
        offs = tuple(o - base for o, _ in pairs)
        vals = tuple(v for _, v in pairs)
        out.append((offs, vals))
    return out


class TransferGraph:
    """Sliding-window automaton for a depth-anything SFT on Z.

    States are admissible words of length ``m`` (the largest forbidden
    diameter); an edge appends one letter.  After trimming to the
    recurrent part, finite paths are exactly the windows of bi-infinite
    admissible configurations, which is what exact semantics promises.
    """

    def __init__(self, spec: SftSpec):
        self.letters = tuple(sorted(spec.letters()))
        self.norm = _normalized_forbidden(spec)
        self.m = max((offs[-1] for offs, _ in self.norm), default=0)
        states = self._enumerate_states()
        edges = {
            s: tuple(
                (a, (s + (a,))[1:] if self.m else s)
                for a in self.letters
                if self._tail_ok(s + (a,))
            )
            for s in states
        }
        self.states, self.edges = self._essentialize(states, edges)
        self.state_set = frozenset(self.states)
        self._prefixes: dict[int, list[tuple]] = {}
        self._counts: dict[tuple, int] = {}

    def _tail_ok(self, word: tuple) -> bool:
        # check forbidden occurrences that end at the last cell of `word`
        last = len(word) - 1
        for offs, vals in self.norm:
            start = last - offs[-1]
            if start < 0:
                continue
            if all(word[start + o] == v for o, v in zip(offs, vals)):
                return False
        return True

    def _enumerate_states(self) -> list[tuple]:
        words = [()]
        for _ in range(self.m):
            words = [
                w + (a,)
                for w in words
                for a in self.letters
                if self._tail_ok(w + (a,))
            ]
        return sorted(words)

    @staticmethod
    def _essentialize(states, edges):
        alive = set(states)
        changed = True
        while changed:
            changed = False
            incoming = {s: 0 for s in alive}
            for s in alive:
                for _, t in edges[s]:
                    if t in alive:
                        incoming[t] += 1
            for s in list(alive):
                outs = [t for _, t in edges[s] if t in alive]
                if not outs or incoming[s] == 0:
                    alive.discard(s)
                    changed = True
        kept = tuple(sorted(alive))
        pruned = {
            s: tuple((a, t) for a, t in edges[s] if t in alive) for s in kept
        }
        return kept, pruned

    @property
    def empty(self) -> bool:
        return not self.states

    def _prefix_words(self, length: int) -> list[tuple]:
        if length not in self._prefixes:
            self._prefixes[length] = sorted({s[:length] for s in self.states})
        return self._prefixes[length]

    def language(self, length: int) -> Iterator[tuple]:
        """All admissible windows of ``length``, lexicographically."""
        if length < 0:
            raise ValueError("window length must be >= 0")
        if not self.states:
            return
        if length <= self.m:
            yield from self._prefix_words(length)
            return
        def rec(state: tuple, word: tuple, todo: int):
            if todo == 0:
                yield word
                return
            for a, t in self.edges[state]:
                yield from rec(t, word + (a,), todo - 1)
        for s in self.states:
            yield from rec(s, s, length - self.m)

    def count(self, length: int) -> int:
        if not self.states:
            return 0
        if length <= self.m:
            return len(self._prefix_words(length))
        key = ("count", length)
        if key not in self._counts:
            vec = {s: 1 for s in self.states}
            for _ in range(length - self.m):
                nxt = {s: 0 for s in self.states}
                for s in self.states:
                    for _, t in self.edges[s]:
                        nxt[s] += vec[t]
                vec = nxt
            # vec[s] = number of right-completions from s, so the sum over
            # start states counts full-length words exactly once
            self._counts[key] = sum(vec[s] for s in self.states)
        return self._counts[key]

    def contains(self, word: tuple) -> bool:
        if not self.states:
            return False
        if len(word) <= self.m:
            return word in set(self._prefix_words(len(word)))
        cur = word[: self.m]
        if cur not in self.state_set:
            return False
        for a in word[self.m :]:
            nxt = dict(self.edges[cur]).get(a)
            if nxt is None:
                return False
            cur = nxt
        return True

    def sample(self, length: int, rng) -> tuple:
        """Uniform sample from the window language (weighted DP walk)."""
        if not self.states:
            raise SubshiftError("empty window language")
        if length <= self.m:
            pts = self._prefix_words(length)
            return pts[rng.randrange(len(pts))]
        steps = length - self.m
        layers = [{s: 1 for s in self.states}]
        for _ in range(steps):
            prev = layers[-1]
            layers.append(
                {
                    s: sum(prev[t] for _, t in self.edges[s])
                    for s in self.states
                }
            )
        weights = layers[-1]
        total = sum(weights[s] for s in self.states)
        pick = rng.randrange(total)
        for s in self.states:
            if pick < weights[s]:
                break
            pick -= weights[s]
        word = list(s)
        cur = s
        for depth in range(steps - 1, -1, -1):
            wvec = layers[depth]
            total = sum(wvec[t] for _, t in self.edges[cur])
            pick = rng.randrange(total)
            for a, t in self.edges[cur]:
                if pick < wvec[t]:
                    word.append(a)
                    cur = t
                    break
                pick -= wvec[t]
        return tuple(word)

    def feasible(
        self,
        length: int,
        clamps: dict[int, Letter],
        allowed: Optional[dict] = None,
    ) -> bool:
        """Is there a window of ``length`` matching the constraints?

        ``clamps`` pins single letters at 0-based positions; ``allowed``
        optionally restricts positions to letter sets (used for
        level-projected constraints).
        """
        if not self.states:
            return False

        def ok(pos: int, a: Letter) -> bool:
            want = clamps.get(pos)
            if want is not None and a != want:
                return False
            if allowed is not None:
                lset = allowed.get(pos)
                if lset is not None and a not in lset:
                    return False
            return True

        if length <= self.m:
            return any(
                all(ok(i, w[i]) for i in range(length))
                for w in self._prefix_words(length)
            )
        alive = {
            s
            for s in self.states
            if all(ok(i, s[i]) for i in range(self.m))
        }
        for pos in range(self.m, length):
            alive = {
                t for s in alive for a, t in self.edges[s] if ok(pos, a)
            }
            if not alive:
                return False
        return bool(alive)

    def mixing_gap(self, max_gap: int) -> Optional[int]:
        """Least ``n <= max_gap`` such that every ordered state pair is
        joined by a path of length exactly ``n``.

        On the recurrent part this is monotone: once it holds for ``n``
        it holds for every larger length, so a successful return value
        certifies gluability across every gap ``>= n``.
        """
        if not self.states:
            return None
        idx = {s: i for i, s in enumerate(self.states)}
        k = len(self.states)
        rows = [0] * k
        for s in self.states:
            for _, t in self.edges[s]:
                rows[idx[s]] |= 1 << idx[t]
        full = (1 << k) - 1
        cur = list(rows)  # reachability in exactly n steps, n = 1
        for n in range(1, max_gap + 1):
            if all(r == full for r in cur):
                return n
            cur = [_bitrow_mul(cur[i], rows, k) for i in range(k)]
        return None


def _bitrow_mul(row: int, rows: list[int], k: int) -> int:
    out = 0
    i = 0
    while row:
        if row & 1:
            out |= rows[i]
        row >>= 1
        i += 1
    return out


_TRANSFER_CACHE: dict = {}


def transfer_graph(spec: SftSpec) -> TransferGraph:
    if spec not in _TRANSFER_CACHE:
        _TRANSFER_CACHE[spec] = TransferGraph(spec)
    return _TRANSFER_CACHE[spec]


# ---------------------------------------------------------------------------
# local fills (any context)
# ---------------------------------------------------------------------------

def _occurrence_conflict(
    ctx: GroupContext, spec: SftSpec, assigned: dict, cell
) -> bool:
    """Did assigning ``cell`` complete a forbidden occurrence?"""
    for p in spec.forbidden:
        for h in p.domain:
            t = ctx.mul(ctx.inv(h), cell)
            ok = True
            for h2, v2 in p.items():
                got = assigned.get(ctx.mul(h2, t))
                if got is None or got != v2:
                    ok = False
                    break
            if ok:
                return True
    return False


def locally_admissible(ctx: GroupContext, spec: SftSpec, pattern: Pattern) -> bool:
    """No forbidden occurrence lies fully inside the pattern's domain."""
    assigned = pattern.mapping()
    return not any(
        _occurrence_conflict(ctx, spec, assigned, cell) for cell in pattern.domain
    )


def fill_completions(
    ctx: GroupContext,
    spec: SftSpec,
    domain: FiniteSubset,
    clamps: dict,
    allowed: Optional[dict] = None,
) -> Iterator[dict]:
    """Backtracking enumeration of admissible assignments on ``domain``.

    Clamped cells are fixed; free cells are filled in deterministic
    position order, least letters first, pruning as soon as a forbidden
    occurrence becomes fully visible.  ``allowed`` optionally restricts
    cells to letter subsets (applied to free cells only).  Yields
    complete assignments.
    """
    letters = tuple(sorted(spec.letters()))
    assigned = dict(clamps)
    for cell in clamps:
        if _occurrence_conflict(ctx, spec, assigned, cell):
            return
    free = [g for g in domain if g not in clamps]

    def rec(i: int) -> Iterator[dict]:
        if i == len(free):
            yield dict(assigned)
            return
        cell = free[i]
        lset = None if allowed is None else allowed.get(cell)
        for a in letters:
            if lset is not None and a not in lset:
                continue
            assigned[cell] = a
            if not _occurrence_conflict(ctx, spec, assigned, cell):
                yield from rec(i + 1)
            del assigned[cell]

    yield from rec(0)


# ---------------------------------------------------------------------------
# pattern sets
# ---------------------------------------------------------------------------

_PATTERN_SET_CACHE: dict = {}


def window_patterns(
    ctx: GroupContext, spec: SpecLike, f: FiniteSubset, sem: Semantics
) -> Iterator[Pattern]:
    """Lazy deterministic enumeration of the admissible patterns on ``f``."""
    if len(f) == 0:
        yield Pattern.of(ctx, {})
        return
    if isinstance(spec, ImageSpec):
        seen = set()
        src_dom = set_mul(ctx, spec.bmap.support, f)
        for beta in window_patterns(ctx, spec.source, src_dom, sem):
            pushed = push_forward(ctx, spec.bmap, beta, f)
            if pushed not in seen:
                seen.add(pushed)
                yield pushed
        return
    if isinstance(spec, SubstitutionSpec):
        if sem.mode != "exact":
            raise SubshiftError("substitution systems support exact semantics only")
        _require_exact_ctx(ctx)
        lo, hi = hull_interval(f)
        idxs = [g[0] - lo for g in f]
        seen = set()
        for w in spec.factors(hi - lo + 1):
            p = Pattern.of(ctx, {g: w[i] for g, i in zip(f.elements, idxs)})
            if p not in seen:
                seen.add(p)
                yield p
        return
    if not isinstance(spec, SftSpec):
        raise SubshiftError(f"unknown spec flavor {type(spec).__name__}")
    if sem.mode == "exact":
        _require_exact_ctx(ctx)
        tg = transfer_graph(spec)
        lo, hi = hull_interval(f)
        idxs = [g[0] - lo for g in f]
        full = len(f) == hi - lo + 1
        seen = set()
        for w in tg.language(hi - lo + 1):
            p = Pattern.of(ctx, {g: w[i] for g, i in zip(f.elements, idxs)})
            if full:
                yield p
            elif p not in seen:
                seen.add(p)
                yield p
        return
    thick = set_mul(ctx, ctx.ball(sem.margin), f)
    seen = set()
    for fill in fill_completions(ctx, spec, thick, {}):
        p = Pattern.of(ctx, {g: fill[g] for g in f})
        if p not in seen:
            seen.add(p)
            yield p


def pattern_set(
    ctx: GroupContext, spec: SpecLike, f: FiniteSubset, sem: Semantics
) -> frozenset:
    """The set of admissible patterns on ``f`` under the given semantics."""
    key = (id(ctx), spec, f, sem)
    if key not in _PATTERN_SET_CACHE:
        _PATTERN_SET_CACHE[key] = frozenset(window_patterns(ctx, spec, f, sem))
    return _PATTERN_SET_CACHE[key]


def push_forward(
    ctx: GroupContext, bmap: BlockMap, beta: Pattern, f: FiniteSubset
) -> Pattern:
    """Apply a block map to a source pattern covering ``support * f``."""
    out = {}
    for g in f:
        window = tuple(beta.value_at(ctx.mul(s, g)) for s in bmap.support)
        out[g] = bmap.apply_window(window)
    return Pattern.of(ctx, out)


def is_admissible(
    ctx: GroupContext, spec: SpecLike, pattern: Pattern, sem: Semantics
) -> bool:
    """Window-scale admissibility of a (possibly scattered) pattern."""
    if len(pattern.domain) == 0:
        return True
    if isinstance(spec, SftSpec) and sem.mode == "exact":
        _require_exact_ctx(ctx)
        tg = transfer_graph(spec)
        lo, hi = hull_interval(pattern.domain)
        clamps = {g[0] - lo: v for g, v in pattern.items()}
        return tg.feasible(hi - lo + 1, clamps)
    if isinstance(spec, SftSpec):
        thick = set_mul(ctx, ctx.ball(sem.margin), pattern.domain)
        for _ in fill_completions(ctx, spec, thick, pattern.mapping()):
            return True
        return False
    return pattern in pattern_set(ctx, spec, pattern.domain, sem)


# ---------------------------------------------------------------------------
# window minimality and essential freeness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinimalityResult:
    holds: bool
    scanned: int
    window: Optional[Pattern]  # failing window, projected
    missing: Optional[Pattern]  # pattern it fails to visit


def is_minimal_at(
    ctx: GroupContext,
    spec: SpecLike,
    n: int,
    f: FiniteSubset,
    v: FiniteSubset,
    sem: Semantics,
) -> MinimalityResult:
    """Does every admissible ``v``-window visit every ``f``-pattern?

    Patterns are compared after truncation to the first ``n`` levels.  A
    counterexample is the first (in canonical order) ``v``-window missing
    some ``f``-pattern, together with the first missing pattern.
    """
    stack = spec.stack
    targets = sorted_patterns(
        project_pattern_set(ctx, pattern_set(ctx, spec, f, sem), n, stack)
    )
    placements = []
    vset = v.as_set()
    for g in v:
        cells = [ctx.mul(x, g) for x in f]
        if all(c in vset for c in cells):
            placements.append((g, cells))
    if not placements:
        raise ValueError("window admits no placement of the probe domain")
    scanned = 0
    for u in window_patterns(ctx, spec, v, sem):
        scanned += 1
        proj = project_pattern(ctx, u, n, stack)
        seen = {
            Pattern.of(
                ctx, {x: proj.value_at(c) for x, c in zip(f.elements, cells)}
            )
            for _, cells in placements
        }
        for t in targets:
            if t not in seen:
                return MinimalityResult(False, scanned, proj, t)
    return MinimalityResult(True, scanned, None, None)


@dataclass(frozen=True)
class FreenessWitness:
    probe: Pattern
    window: Pattern
    site: object  # h with z(h*g) != z(h)
    radius: int


@dataclass(frozen=True)
class FreenessReport:
    holds: bool
    g: object
    witnesses: tuple
    failed_probe: Optional[Pattern]
    radius_cap: int


def essential_freeness_check(
    ctx: GroupContext,
    spec: SpecLike,
    g,
    probes: Iterable[Pattern],
    sem: Semantics,
    radius_cap: int = 4,
) -> FreenessReport:
    """Search, per probe cylinder, for an admissible window separating
    ``g``: some ``h`` with ``z(h g) != z(h)`` inside a window extending
    the probe.  Failure reports the probe whose windows all look
    ``g``-periodic up to the radius cap.
    """
    if g == ctx.identity:
        raise ValueError("essential freeness is about non-identity elements")
    witnesses = []
    for probe in probes:
        found = None
        for r in range(radius_cap + 1):
            ball = ctx.ball(r)
            shifted = [ctx.mul(h, g) for h in ball]
            dom = FiniteSubset.of(
                ctx, list(probe.domain) + list(ball) + shifted
            )
            pairs = [
                (h, hg)
                for h, hg in zip(ball.elements, shifted)
            ]
            for w in window_patterns(ctx, spec, dom, sem):
                if not all(w.value_at(c) == v for c, v in probe.items()):
                    continue
                for h, hg in pairs:
                    if w.value_at(hg) != w.value_at(h):
                        found = FreenessWitness(probe, w, h, r)
                        break
                if found:
                    break
            if found:
                break
        if found is None:
            return FreenessReport(False, g, tuple(witnesses), probe, radius_cap)
        witnesses.append(found)
    return FreenessReport(True, g, tuple(witnesses), None, radius_cap)
