"""Group contexts and finite-subset combinatorics.

Three kinds of finitely generated groups are supported at desk scale:

* integer lattices ``Z^d`` — elements are length-``d`` int tuples;
* free groups ``Fk`` — elements are freely reduced words over
  ``a, b, c, ...`` with capital letters denoting inverses;
* finite groups given by a multiplication table — elements are row
  indices, with index 0 the identity.

Every context fixes a *deterministic order* on elements: sort by word
length with respect to the canonical generators, then lexicographically
on the canonical form.  All greedy searches, witness searches and
serializations in this package iterate in that order, which is what
makes re-runs byte-identical.

Word-length balls are cached per context and guarded by the
``SYMDYN_MAX_BALL`` environment variable (default 200000 elements).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

DEFAULT_BALL_CAP = 200_000

_FREE_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class GroupParseError(ValueError):
    """Raised for unparseable group descriptors or element texts."""


class BallCapExceeded(RuntimeError):
    """Raised when a requested ball would exceed SYMDYN_MAX_BALL."""


def ball_cap() -> int:
    raw = os.environ.get("SYMDYN_MAX_BALL", "")
    try:
        return int(raw) if raw else DEFAULT_BALL_CAP
    except ValueError:
        return DEFAULT_BALL_CAP


class GroupContext:
    """Base class: group operations plus the deterministic element order."""

    kind: str = "abstract"

    def __init__(self) -> None:
        self._ball_cache: dict[int, FiniteSubset] = {}

    # -- group structure -------------------------------------------------
    @property
    def identity(self):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def generators(self) -> tuple:
        """Canonical symmetric generating set."""
        raise NotImplementedError

    def word_length(self, g) -> int:
        raise NotImplementedError

    def sort_key(self, g):
        """Key realizing the deterministic order (word length, canonical form)."""
        return (self.word_length(g), g)

    # -- balls ------------------------------------------------------------
    def _ball_elements(self, r: int) -> Iterator:
        raise NotImplementedError

    def ball(self, r: int) -> FiniteSubset:
        """Closed word-length ball of radius ``r``, in deterministic order."""
        if r < 0:
            raise ValueError("ball radius must be >= 0")
        if r not in self._ball_cache:
            cap = ball_cap()
            elems = []
            for g in self._ball_elements(r):
                elems.append(g)
                if len(elems) > cap:
                    raise BallCapExceeded(
                        f"|ball({r})| exceeds SYMDYN_MAX_BALL={cap} on {self.describe()}"
                    )
            self._ball_cache[r] = FiniteSubset.of(self, elems)
        return self._ball_cache[r]

    # -- serialization ----------------------------------------------------
    def describe(self) -> str:
        raise NotImplementedError

    def element_to_json(self, g):
        raise NotImplementedError

    def element_from_json(self, obj):
        raise NotImplementedError

    def element_to_text(self, g) -> str:
        raise NotImplementedError

    def element_from_text(self, text: str):
        raise NotImplementedError

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"<GroupContext {self.describe()}>"


class LatticeContext(GroupContext):
    """``Z^d`` with generators the signed unit vectors; word length is L1."""

    kind = "lattice"

    def __init__(self, rank: int) -> None:
        if rank < 1:
            raise ValueError("lattice rank must be >= 1")
        super().__init__()
        self.rank = rank

    @property
    def identity(self):
        return (0,) * self.rank

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a):
        return tuple(-x for x in a)

    def generators(self) -> tuple:
        gens = []
        for i in range(self.rank):
            e = [0] * self.rank
            e[i] = 1
            gens.append(tuple(e))
            e[i] = -1
            gens.append(tuple(e))
        return tuple(sorted(gens, key=self.sort_key))

    def word_length(self, g) -> int:
        return sum(abs(x) for x in g)

    def _ball_elements(self, r: int) -> Iterator:
        for v in itertools.product(range(-r, r + 1), repeat=self.rank):
            if sum(abs(x) for x in v) <= r:
                yield v

    def describe(self) -> str:
        return "Z" if self.rank == 1 else f"Z^{self.rank}"

    def element_to_json(self, g):
        return g[0] if self.rank == 1 else list(g)

    def element_from_json(self, obj):
        if self.rank == 1:
            if isinstance(obj, int):
                return (obj,)
            if isinstance(obj, list) and len(obj) == 1:
                return (int(obj[0]),)
            raise GroupParseError(f"bad Z element: {obj!r}")
        if not isinstance(obj, list) or len(obj) != self.rank:
            raise GroupParseError(f"bad Z^{self.rank} element: {obj!r}")
        return tuple(int(x) for x in obj)

    def element_to_text(self, g) -> str:
        return ":".join(str(x) for x in g)

    def element_from_text(self, text: str):
        parts = text.split(":")
        if len(parts) != self.rank:
            raise GroupParseError(f"expected {self.rank} coordinates in {text!r}")
        try:
            return tuple(int(p) for p in parts)
        except ValueError as exc:
            raise GroupParseError(f"bad coordinate in {text!r}") from exc


def _reduce_word(word: str) -> str:
    out: list[str] = []
    for ch in word:
        if out and out[-1] != ch and out[-1].lower() == ch.lower():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


class FreeGroupContext(GroupContext):
    """Free group on ``k`` letters; elements are freely reduced words."""

    kind = "free"

    def __init__(self, k: int) -> None:
        if not 1 <= k <= len(_FREE_LETTERS):
            raise ValueError("free rank out of range")
        super().__init__()
        self.free_rank = k
        self._letters = tuple(_FREE_LETTERS[:k]) + tuple(
            _FREE_LETTERS[:k].upper()
        )

    @property
    def identity(self):
        return ""

    def mul(self, a, b):
        return _reduce_word(a + b)

    def inv(self, a):
        return a[::-1].swapcase()

    def generators(self) -> tuple:
        return tuple(sorted(self._letters, key=self.sort_key))

    def word_length(self, g) -> int:
        return len(g)

    def _ball_elements(self, r: int) -> Iterator:
        frontier = [""]
        yield ""
        for _ in range(r):
            nxt = []
            for w in frontier:
                for ch in self._letters:
                    if w and w[-1] != ch and w[-1].lower() == ch.lower():
                        continue
                    nxt.append(w + ch)
            frontier = nxt
            yield from frontier

    def describe(self) -> str:
        return f"F{self.free_rank}"

    def element_to_json(self, g):
        return g

    def element_from_json(self, obj):
        if not isinstance(obj, str):
            raise GroupParseError(f"bad free-group element: {obj!r}")
        return self.element_from_text(obj)

    def element_to_text(self, g) -> str:
        return g if g else "e"

    def element_from_text(self, text: str):
        if text in ("e", ""):
            return ""
        for ch in text:
            if ch not in self._letters:
                raise GroupParseError(f"letter {ch!r} not in {self.describe()}")
        red = _reduce_word(text)
        if red != text:
            raise GroupParseError(f"word {text!r} is not freely reduced")
        return text


class FiniteGroupContext(GroupContext):
    """Finite group presented by a full multiplication table (index 0 = identity)."""

    kind = "finite"

    def __init__(self, name: str, table: tuple[tuple[int, ...], ...]) -> None:
        super().__init__()
        n = len(table)
        if any(len(row) != n for row in table):
            raise ValueError("multiplication table must be square")
        if any(table[0][i] != i or table[i][0] != i for i in range(n)):
            raise ValueError("index 0 must act as the identity")
        inv = [-1] * n
        for a in range(n):
            for b in range(n):
                if table[a][b] == 0:
                    inv[a] = b
            if inv[a] < 0:
                raise ValueError(f"element {a} has no inverse")
        self.name = name
        self.table = table
        self.order = n
        self._inv = tuple(inv)

    @property
    def identity(self):
        return 0

    def mul(self, a, b):
        return self.table[a][b]

    def inv(self, a):
        return self._inv[a]

    def generators(self) -> tuple:
        return tuple(range(1, self.order))

    def word_length(self, g) -> int:
        return 0 if g == 0 else 1

    def _ball_elements(self, r: int) -> Iterator:
        if r == 0:
            yield 0
        else:
            yield from range(self.order)

    def describe(self) -> str:
        return f"finite:{self.name}"

    def element_to_json(self, g):
        return g

    def element_from_json(self, obj):
        if not isinstance(obj, int) or not 0 <= obj < self.order:
            raise GroupParseError(f"bad finite-group element: {obj!r}")
        return obj

    def element_to_text(self, g) -> str:
        return str(g)

    def element_from_text(self, text: str):
        try:
            g = int(text)
        except ValueError as exc:
            raise GroupParseError(f"bad finite-group element {text!r}") from exc
        return self.element_from_json(g)


def _cyclic_table(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple((a + b) % n for b in range(n)) for a in range(n))


def _klein_table() -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(a ^ b for b in range(4)) for a in range(4))


def _s3_table() -> tuple[tuple[int, ...], ...]:
    perms = [(0, 1, 2), (1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0), (2, 0, 1)]
    index = {p: i for i, p in enumerate(perms)}

    def compose(p, q):  # apply q then p
        return tuple(p[q[i]] for i in range(3))

    return tuple(
        tuple(index[compose(p, q)] for q in perms) for p in perms
    )


FINITE_TABLES: dict[str, tuple[tuple[int, ...], ...]] = {
    "z2": _cyclic_table(2),
    "z3": _cyclic_table(3),
    "z4": _cyclic_table(4),
    "z6": _cyclic_table(6),
    "klein": _klein_table(),
    "s3": _s3_table(),
}

_CONTEXT_CACHE: dict[str, GroupContext] = {}


def parse_group(text: str) -> GroupContext:
    """Parse a group descriptor: ``Z``, ``Z^d``, ``Fk`` or ``finite:<name>``."""
    key = text.strip()
    if key in _CONTEXT_CACHE:
        return _CONTEXT_CACHE[key]
    ctx: GroupContext
    if key == "Z":
        ctx = LatticeContext(1)
    elif key.startswith("Z^"):
        try:
            ctx = LatticeContext(int(key[2:]))
        except ValueError as exc:
            raise GroupParseError(f"bad lattice rank in {key!r}") from exc
    elif key.startswith("F") and key[1:].isdigit():
        ctx = FreeGroupContext(int(key[1:]))
    elif key.startswith("finite:"):
        name = key.split(":", 1)[1]
        if name not in FINITE_TABLES:
            raise GroupParseError(
                f"unknown finite table {name!r}; builtins: {sorted(FINITE_TABLES)}"
            )
        ctx = FiniteGroupContext(name, FINITE_TABLES[name])
    else:
        raise GroupParseError(f"cannot parse group descriptor {text!r}")
    _CONTEXT_CACHE[key] = ctx
    return ctx


@dataclass(frozen=True)
class FiniteSubset:
    """Immutable finite subset, stored in the context's deterministic order."""

    elements: tuple
    _set: frozenset = field(repr=False, compare=False)

    @staticmethod
    def of(ctx: GroupContext, elems: Iterable) -> "FiniteSubset":
        uniq = sorted(set(elems), key=ctx.sort_key)
        return FiniteSubset(tuple(uniq), frozenset(uniq))

    def __contains__(self, g) -> bool:
        return g in self._set

    def __iter__(self) -> Iterator:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __hash__(self) -> int:
        return hash(self.elements)

    def as_set(self) -> frozenset:
        return self._set

    def to_json(self, ctx: GroupContext) -> list:
        return [ctx.element_to_json(g) for g in self.elements]

    @staticmethod
    def from_json(ctx: GroupContext, obj: list) -> "FiniteSubset":
        return FiniteSubset.of(ctx, (ctx.element_from_json(x) for x in obj))


def parse_subset(ctx: GroupContext, text: str) -> FiniteSubset:
    """Parse ``ball:r`` or a comma-separated element list (``-1,0,1``)."""
    text = text.strip()
    if text.startswith("ball:"):
        return ctx.ball(int(text.split(":", 1)[1]))
    if not text:
        return FiniteSubset.of(ctx, [])
    return FiniteSubset.of(
        ctx, (ctx.element_from_text(p.strip()) for p in text.split(","))
    )


# ---------------------------------------------------------------------------
# subset algebra
# ---------------------------------------------------------------------------

def set_mul(ctx: GroupContext, a: FiniteSubset, b: FiniteSubset) -> FiniteSubset:
    """Pointwise product ``{x*y : x in a, y in b}``."""
    return FiniteSubset.of(ctx, (ctx.mul(x, y) for x in a for y in b))


def set_inv(ctx: GroupContext, a: FiniteSubset) -> FiniteSubset:
    return FiniteSubset.of(ctx, (ctx.inv(x) for x in a))


def set_pow(ctx: GroupContext, a: FiniteSubset, k: int) -> FiniteSubset:
    """``k``-fold product ``a * a * ... * a``; ``k = 0`` gives ``{e}``."""
    if k < 0:
        raise ValueError("set power must be >= 0")
    acc = FiniteSubset.of(ctx, [ctx.identity])
    for _ in range(k):
        acc = set_mul(ctx, acc, a)
    return acc


def symmetric_closure(ctx: GroupContext, a: FiniteSubset) -> FiniteSubset:
    return FiniteSubset.of(ctx, itertools.chain(a, (ctx.inv(x) for x in a)))


def translate_set(ctx: GroupContext, a: FiniteSubset, g) -> FiniteSubset:
    return FiniteSubset.of(ctx, (ctx.mul(x, g) for x in a))


def interior(ctx: GroupContext, region: FiniteSubset, d: FiniteSubset) -> FiniteSubset:
    """Elements of ``region`` whose whole ``d``-translate stays inside it."""
    rset = region.as_set()
    return FiniteSubset.of(
        ctx, (g for g in region if all(ctx.mul(x, g) in rset for x in d))
    )


# ---------------------------------------------------------------------------
# separation
# ---------------------------------------------------------------------------

def are_apart(ctx: GroupContext, d: FiniteSubset, e1: FiniteSubset, e2: FiniteSubset) -> bool:
    """True iff the ``d``-translates of ``e1`` and ``e2`` do not meet."""
    d1 = {ctx.mul(x, g) for x in d for g in e1}
    return all(ctx.mul(x, g) not in d1 for x in d for g in e2)


def separation_conflict(
    ctx: GroupContext, d: FiniteSubset, s: Iterable
) -> Optional[tuple]:
    """First pair (in order) of points of ``s`` whose ``d``-translates overlap."""
    owner: dict = {}
    for g in s:
        for x in d:
            cell = ctx.mul(x, g)
            if cell in owner and owner[cell] != g:
                return (owner[cell], g)
            owner[cell] = g
    return None


def is_separated(ctx: GroupContext, d: FiniteSubset, s: Iterable) -> bool:
    """True iff the sets ``d*g`` for ``g`` in ``s`` are pairwise disjoint."""
    return separation_conflict(ctx, d, s) is None


def maximal_separated(
    ctx: GroupContext, d: FiniteSubset, region: FiniteSubset
) -> FiniteSubset:
    """Greedy maximal ``d``-separated subset of ``region``.

    Scans ``region`` in deterministic order and keeps every point whose
    ``d``-translate is disjoint from the translates of all kept points.
    The result is maximal within ``region``: every rejected point
    conflicts with some kept one.
    """
    chosen: list = []
    occupied: set = set()
    for g in region:
        dg = [ctx.mul(x, g) for x in d]
        if all(cell not in occupied for cell in dg):
            chosen.append(g)
            occupied.update(dg)
    return FiniteSubset.of(ctx, chosen)


# ---------------------------------------------------------------------------
# syndeticity and smallness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyndeticityResult:
    found: bool
    radius: Optional[int]
    uncovered: Optional[object]
    checked_radius: int

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "found": self.found,
            "radius": self.radius,
            "uncovered": None
            if self.uncovered is None
            else ctx.element_to_json(self.uncovered),
            "checked_radius": self.checked_radius,
        }


def syndeticity_witness(
    ctx: GroupContext, s: FiniteSubset, region: FiniteSubset, max_radius: int
) -> SyndeticityResult:
    """Smallest ``r <= max_radius`` with ``ball(r) * s`` covering ``region``.

    On failure the result carries the first uncovered element at the cap.
    """
    covered: set = set(s.as_set())
    uncovered = [g for g in region if g not in covered]
    if not uncovered:
        return SyndeticityResult(True, 0, None, 0)
    for r in range(1, max_radius + 1):
        ring = [g for g in ctx.ball(r) if ctx.word_length(g) == r] or list(ctx.ball(r))
        for x in ring:
            covered.update(ctx.mul(x, g) for g in s)
        uncovered = [g for g in uncovered if g not in covered]
        if not uncovered:
            return SyndeticityResult(True, r, None, r)
    return SyndeticityResult(False, None, uncovered[0], max_radius)


@dataclass(frozen=True)
class RadiusVerdict:
    radius: int
    verdict: str  # "small" | "not-small" | "inconclusive"
    gap: Optional[int]
    uncovered: Optional[object]
    avoidance_count: int

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "radius": self.radius,
            "verdict": self.verdict,
            "gap": self.gap,
            "uncovered": None
            if self.uncovered is None
            else ctx.element_to_json(self.uncovered),
            "avoidance_count": self.avoidance_count,
        }


@dataclass(frozen=True)
class SmallnessReport:
    per_radius: tuple
    overall: str  # "small-up-to-scale" | "not-small" | "inconclusive"

    def to_json(self, ctx: GroupContext) -> dict:
        return {
            "overall": self.overall,
            "per_radius": [v.to_json(ctx) for v in self.per_radius],
        }


def is_small(
    ctx: GroupContext,
    member: Callable,
    max_f_radius: int,
    region: FiniteSubset,
    syndetic_cap: int,
) -> SmallnessReport:
    """Finite-scale smallness test for the set ``{g : member(g)}``.

    For each radius ``r <= max_f_radius`` the avoidance set
    ``{g in region : ball(r)*g misses the set}`` is computed and tested
    for syndeticity relative to shrinking interiors of ``region``.  A
    radius verdict is ``small`` (with the covering gap), ``not-small``
    (avoidance fails syndeticity at the cap, witness element attached) or
    ``inconclusive`` (region too small to certify either way).
    """
    verdicts = []
    for r in range(max_f_radius + 1):
        f = ctx.ball(r)
        avoid = [
            g for g in region if not any(member(ctx.mul(x, g)) for x in f)
        ]
        aset = set(avoid)
        verdict: Optional[RadiusVerdict] = None
        covered: set = set(aset)
        for rho in range(syndetic_cap + 1):
            if rho > 0:
                for x in ctx.ball(rho):
                    covered.update(ctx.mul(x, g) for g in avoid)
            target = interior(ctx, region, ctx.ball(rho))
            if len(target) == 0:
                verdict = RadiusVerdict(r, "inconclusive", None, None, len(avoid))
                break
            missing = [g for g in target if g not in covered]
            if not missing:
                verdict = RadiusVerdict(r, "small", rho, None, len(avoid))
                break
        if verdict is None:
            target = interior(ctx, region, ctx.ball(syndetic_cap))
            missing = [g for g in target if g not in covered]
            witness = missing[0] if missing else None
            verdict = RadiusVerdict(r, "not-small", None, witness, len(avoid))
        verdicts.append(verdict)
    if any(v.verdict == "not-small" for v in verdicts):
        overall = "not-small"
    elif any(v.verdict == "inconclusive" for v in verdicts):
        overall = "inconclusive"
    else:
        overall = "small-up-to-scale"
    return SmallnessReport(tuple(verdicts), overall)
