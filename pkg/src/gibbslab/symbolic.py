"""Alphabets, patterns, subshift specifications, and window languages.

A pattern assigns symbols to a finite shape. A subshift specification
describes a configuration space declaratively: full shift, shift of finite
type (finite forbidden patterns), a local oracle predicate, or a group
shift. Window languages are computed by bounded enumeration: a pattern on
A belongs to the margin-m table when it extends to the m-dilation of A
without a local violation. Tables carry an exactness flag; when the flag
is off the table may strictly contain the true language.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _iproduct
from typing import Callable, Hashable, Iterable, Iterator, Mapping

from gibbslab.lattice import Shape, Site, add, as_site, sub

Symbol = Hashable


class MergeConflict(ValueError):
    """Two patterns disagree on a shared site."""

    def __init__(self, site: Site, a: Symbol, b: Symbol):
        super().__init__(f"merge conflict at {site}: {a!r} vs {b!r}")
        self.site = site


class BudgetExceeded(RuntimeError):
    """Enumeration budget exhausted before completing a language table."""


@dataclass(frozen=True)
class GroupTable:
    """Finite abelian group structure on symbol indices.

    op[i][j] is the index of the product, identity the neutral index,
    inverse[i] the index of the inverse. Validated at construction.
    """

    op: tuple[tuple[int, ...], ...]
    identity: int
    inverse: tuple[int, ...]

    def __post_init__(self):
        k = len(self.op)
        idx = range(k)
        for i in idx:
            if self.op[self.identity][i] != i or self.op[i][self.identity] != i:
                raise ValueError("identity axiom fails")
            if self.op[i][self.inverse[i]] != self.identity:
                raise ValueError("inverse axiom fails")
            for j in idx:
                if self.op[i][j] != self.op[j][i]:
                    raise ValueError("group table not abelian")
                for l in idx:
                    if self.op[self.op[i][j]][l] != self.op[i][self.op[j][l]]:
                        raise ValueError("group table not associative")

    @staticmethod
    def cyclic(q: int) -> "GroupTable":
        op = tuple(tuple((i + j) % q for j in range(q)) for i in range(q))
        inv = tuple((-i) % q for i in range(q))
        return GroupTable(op, 0, inv)


@dataclass(frozen=True)
class Alphabet:
    """Finite ordered list of distinct symbols, optionally a group."""

    symbols: tuple[Symbol, ...]
    group: GroupTable | None = None

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")
        if len(self.symbols) > 4096:
            raise ValueError("alphabet too large")
        if self.group is not None and len(self.group.op) != len(self.symbols):
            raise ValueError("group table size mismatch")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self.symbols)

    def __contains__(self, sym: Symbol) -> bool:
        return sym in self._index

    def index(self, sym: Symbol) -> int:
        return self._index[sym]

    @property
    def _index(self) -> dict:
        cached = self.__dict__.get("_cache_index")
        if cached is None:
            cached = {s: i for i, s in enumerate(self.symbols)}
            object.__setattr__(self, "_cache_index", cached)
        return cached

    def multiply(self, a: Symbol, b: Symbol) -> Symbol:
        if self.group is None:
            raise ValueError("alphabet has no group structure")
        return self.symbols[self.group.op[self.index(a)][self.index(b)]]

    def invert(self, a: Symbol) -> Symbol:
        if self.group is None:
            raise ValueError("alphabet has no group structure")
        return self.symbols[self.group.inverse[self.index(a)]]

    @property
    def identity(self) -> Symbol:
        if self.group is None:
            raise ValueError("alphabet has no group structure")
        return self.symbols[self.group.identity]

    @staticmethod
    def of(symbols: Iterable[Symbol]) -> "Alphabet":
        return Alphabet(tuple(symbols))

    @staticmethod
    def cyclic_group(q: int) -> "Alphabet":
        return Alphabet(tuple(range(q)), GroupTable.cyclic(q))


@dataclass(frozen=True)
class Pattern:
    """Total assignment of symbols to a finite shape.

    Sites are kept lexicographically sorted with values aligned, so equal
    patterns compare and hash equal regardless of construction order.
    """

    sites: tuple[Site, ...]
    values: tuple[Symbol, ...]

    @staticmethod
    def of(assignment: Mapping[Site, Symbol] | Iterable[tuple], dim: int | None = None) -> "Pattern":
        if isinstance(assignment, Mapping):
            items = [(as_site(g), v) for g, v in assignment.items()]
        else:
            items = [(as_site(g), v) for g, v in assignment]
        items.sort(key=lambda kv: kv[0])
        sites = tuple(g for g, _ in items)
        if len(set(sites)) != len(sites):
            raise ValueError("duplicate sites in pattern")
        if sites and dim is not None and len(sites[0]) != dim:
            raise ValueError("site dimension mismatch")
        return Pattern(sites, tuple(v for _, v in items))

    @staticmethod
    def word(symbols: Iterable[Symbol], start: int = 0) -> "Pattern":
        """1D convenience: symbols at consecutive integer sites."""
        syms = tuple(symbols)
        return Pattern(tuple((start + i,) for i in range(len(syms))), syms)

    @staticmethod
    def empty(dim: int) -> "Pattern":
        return Pattern((), ())

    @staticmethod
    def constant(support: Shape, sym: Symbol) -> "Pattern":
        return Pattern(support.sites, (sym,) * len(support))

    @property
    def support(self) -> Shape:
        dim = len(self.sites[0]) if self.sites else 0
        return Shape(self.sites, dim)

    def __len__(self) -> int:
        return len(self.sites)

    def __getitem__(self, g: Site) -> Symbol:
        return self._map[g]

    def __contains__(self, g: Site) -> bool:
        return g in self._map

    def get(self, g: Site, default=None):
        return self._map.get(g, default)

    @property
    def _map(self) -> dict:
        cached = self.__dict__.get("_cache_map")
        if cached is None:
            cached = dict(zip(self.sites, self.values))
            object.__setattr__(self, "_cache_map", cached)
        return cached

    def translate(self, g: int | Iterable[int]) -> "Pattern":
        g = as_site(g)
        return Pattern(tuple(add(s, g) for s in self.sites), self.values)

    def restrict(self, A: Shape) -> "Pattern":
        items = [(s, v) for s, v in zip(self.sites, self.values) if s in A]
        return Pattern(tuple(s for s, _ in items), tuple(v for _, v in items))

    def items(self) -> Iterator[tuple[Site, Symbol]]:
        return zip(self.sites, self.values)

    def serializable(self) -> dict:
        return {"sites": [list(s) for s in self.sites], "values": list(self.values)}


def merge(u: Pattern, v: Pattern) -> Pattern:
    """Union of two patterns agreeing on their shared support.

    Raises MergeConflict naming the first offending site otherwise.
    """
    vm = v._map
    um = u._map
    for g, a in u.items():
        b = vm.get(g, a)
        if b != a:
            raise MergeConflict(g, a, b)
    out = dict(vm)
    out.update(um)
    return Pattern.of(out)


def compatible(u: Pattern, v: Pattern) -> bool:
    vm = v._map
    return all(vm.get(g, a) == a for g, a in u.items())


@dataclass(frozen=True)
class LanguageTable:
    """Patterns on a shape extendable to its m-dilation without a local
    violation; exact means the table equals the true window language."""

    shape: Shape
    margin: int
    patterns: frozenset[Pattern]
    exact: bool

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self) -> Iterator[Pattern]:
        return iter(sorted(self.patterns, key=lambda p: p.values))

    def __contains__(self, p: Pattern) -> bool:
        return p in self.patterns


class SubshiftSpec:
    """Base for declarative subshift descriptions.

    Subclasses provide ``locally_admissible`` (no violation visible inside
    the pattern support) and inherit bounded language enumeration. The
    attribute ``safe_symbol`` (optional) names a symbol whose padding
    preserves admissibility; it certifies language tables as exact.
    """

    alphabet: Alphabet
    dim: int
    safe_symbol: Symbol | None = None

    def locally_admissible(self, p: Pattern) -> bool:
        raise NotImplementedError

    def language(
        self,
        A: Shape,
        margin: int = 1,
        theta: Pattern | None = None,
        budget: int = 10_000_000,
    ) -> LanguageTable:
        """Window language of the fiber over theta. Admissibility of the
        base specs never depends on the environment, so theta is ignored
        here; environment-coupled specs override this."""
        return language(self, A, margin, budget=budget)

    def exact_at(self, A: Shape, margin: int) -> bool:
        """Whether the margin-m table is certified equal to the true
        window language. Default: only safe-symbol padding certifies."""
        return self.safe_symbol is not None


@dataclass(frozen=True)
class FullShift(SubshiftSpec):
    """Every configuration allowed."""

    alphabet: Alphabet
    dim: int

    def locally_admissible(self, p: Pattern) -> bool:
        return all(v in self.alphabet for v in p.values)

    def exact_at(self, A: Shape, margin: int) -> bool:
        return True


@dataclass(frozen=True)
class SFT(SubshiftSpec):
    """Shift of finite type: finitely many forbidden patterns, each
    supported inside the declared window."""

    alphabet: Alphabet
    dim: int
    window: Shape
    forbidden: frozenset[Pattern]
    safe_symbol: Symbol | None = None

    def __post_init__(self):
        for f in self.forbidden:
            if not (f.support <= self.window):
                raise ValueError("forbidden pattern escapes the declared window")
        if self.safe_symbol is not None:
            if not _safe_symbol_ok(self):
                raise ValueError("declared safe symbol is not actually safe")

    def locally_admissible(self, p: Pattern) -> bool:
        pm = p._map
        for f in self.forbidden:
            f0 = f.sites[0]
            for g in p.sites:
                anchor = sub(g, f0)
                for fs, fv in f.items():
                    got = pm.get(add(anchor, fs))
                    if got is None or got != fv:
                        break
                else:
                    return False
        return True

    def exact_at(self, A: Shape, margin: int) -> bool:
        return self.safe_symbol is not None


def _safe_symbol_ok(s: "SFT") -> bool:
    # padding by the symbol can complete a forbidden translate only if the
    # translate carries that symbol somewhere, so a symbol absent from all
    # forbidden patterns pads any admissible pattern to a configuration
    return all(s.safe_symbol not in f.values for f in s.forbidden)


@dataclass(frozen=True)
class OracleShift(SubshiftSpec):
    """Subshift given by a local predicate on patterns.

    The predicate must be monotone under restriction: admissible patterns
    stay admissible on sub-supports. ``exact`` marks the predicate as an
    exact membership test for window languages; oracles without that
    certificate yield approximate tables.
    """

    alphabet: Alphabet
    dim: int
    predicate: Callable[[Pattern], bool]
    exact: bool
    name: str

    def locally_admissible(self, p: Pattern) -> bool:
        return all(v in self.alphabet for v in p.values) and self.predicate(p)

    def exact_at(self, A: Shape, margin: int) -> bool:
        return self.exact


@dataclass(frozen=True)
class GroupShift(SFT):
    """SFT over a group alphabet whose language is a subgroup under the
    pointwise operation; checked on small windows at construction."""

    def __post_init__(self):
        super().__post_init__()
        if self.alphabet.group is None:
            raise ValueError("group shift needs a group alphabet")
        W = self.window.dilate(1)
        table = language(self, W, margin=0)
        pats = list(table.patterns)
        alpha = self.alphabet
        for u in pats[:64]:
            inv = Pattern(u.sites, tuple(alpha.invert(v) for v in u.values))
            if not self.locally_admissible(inv):
                raise ValueError("window language not closed under inverse")
            for v in pats[:64]:
                prod = Pattern(
                    u.sites,
                    tuple(alpha.multiply(a, b) for a, b in zip(u.values, v.values)),
                )
                if not self.locally_admissible(prod):
                    raise ValueError("window language not closed under product")


def locally_admissible(p: Pattern, s: SubshiftSpec) -> bool:
    """True iff no forbidden translate or oracle violation is visible
    inside the support of p."""
    return s.locally_admissible(p)


def _enumerate_admissible(
    s: SubshiftSpec,
    support: Shape,
    context: Pattern | None = None,
    budget: int = 10_000_000,
) -> Iterator[Pattern]:
    """Backtracking enumeration of admissible assignments on a support,
    optionally jointly admissible with a fixed context pattern."""
    if context is not None and not s.locally_admissible(context):
        return  # context already violates; nothing extends it
    sites = [g for g in support if context is None or g not in context]
    symbols = s.alphabet.symbols
    assigned: dict = dict(context.items()) if context is not None else {}
    steps = 0

    if isinstance(s, SFT):
        # incremental check: forbidden translates fully assigned at site g
        forb = list(s.forbidden)

        def violates(g: Site) -> bool:
            for f in forb:
                for fs in f.sites:
                    anchor = sub(g, fs)
                    for hs, hv in f.items():
                        got = assigned.get(add(anchor, hs))
                        if got is None or got != hv:
                            break
                    else:
                        return True
            return False

    else:
        def violates(g: Site) -> bool:
            return not s.locally_admissible(Pattern.of(assigned))

    def rec(i: int) -> Iterator[Pattern]:
        nonlocal steps
        if i == len(sites):
            yield Pattern.of({g: assigned[g] for g in support.sites})
            return
        g = sites[i]
        for sym in symbols:
            steps += 1
            if steps > budget:
                raise BudgetExceeded(f"enumeration exceeded {budget} steps")
            assigned[g] = sym
            if not violates(g):
                yield from rec(i + 1)
            del assigned[g]

    if context is not None and sites == []:
        # fully determined by context
        p = Pattern.of({g: assigned[g] for g in support.sites})
        if s.locally_admissible(p):
            yield p
        return
    yield from rec(0)


def language(
    s: SubshiftSpec,
    A: Shape,
    margin: int = 1,
    context: Pattern | None = None,
    budget: int = 10_000_000,
) -> LanguageTable:
    """Window language table: patterns on A extendable to the m-dilation
    of A without local violation, jointly with the fixed context if given.

    The table always contains the true language; the exact flag certifies
    equality (safe-symbol padding, full shifts, certified oracles, and 1D
    SFTs cross-checked against the essential transfer graph).
    """
    support = A.dilate(margin) if margin > 0 else A
    seen: set[Pattern] = set()
    for q in _enumerate_admissible(s, support, context=context, budget=budget):
        seen.add(q.restrict(A))
    exact = s.exact_at(A, margin)
    if not exact and context is None and isinstance(s, SFT) and s.dim == 1:
        exact_set = _exact_language_1d(s, A, budget=budget)
        exact = exact_set is not None and exact_set == seen
    return LanguageTable(A, margin, frozenset(seen), exact)


def _exact_language_1d(s: SFT, A: Shape, budget: int = 10_000_000) -> set[Pattern] | None:
    """Exact window language of a 1D SFT through its essential transfer
    graph: words whose sliding blocks survive iterated removal of states
    without predecessors or successors lie on bi-infinite configurations."""
    if s.dim != 1 or not A.sites:
        return None
    lo, hi = A.bounding_box()
    wlo, whi = s.window.bounding_box()
    w = whi[0] - wlo[0] + 1  # window hull length
    k = max(w - 1, 1)
    syms = s.alphabet.symbols

    blocks = [
        b
        for b in _iproduct(syms, repeat=k)
        if s.locally_admissible(Pattern.word(b))
    ]
    succ: dict = {b: [] for b in blocks}
    pred: dict = {b: [] for b in blocks}
    for b in blocks:
        for sym in syms:
            word = b + (sym,)
            if s.locally_admissible(Pattern.word(word)):
                nb = word[1:] if k > 1 else (sym,)
                if nb in succ:
                    succ[b].append(nb)
                    pred[nb].append(b)
    # strip states off bi-infinite paths
    alive = set(blocks)
    changed = True
    while changed:
        changed = False
        for b in list(alive):
            if not any(x in alive for x in succ[b]) or not any(
                x in alive for x in pred[b]
            ):
                alive.discard(b)
                changed = True
    if not alive:
        return set()

    # enumerate words on the hull [lo, hi] whose every k-block is alive
    length = hi[0] - lo[0] + 1
    out: set[Pattern] = set()
    steps = 0

    def rec(word: tuple):
        nonlocal steps
        steps += 1
        if steps > budget:
            raise BudgetExceeded("exact 1d language enumeration exceeded budget")
        if len(word) >= k and word[-k:] not in alive:
            return
        if len(word) >= min(length, w) - 1 and not s.locally_admissible(
            Pattern.word(word, start=lo[0])
        ):
            return
        if len(word) == length:
            p = Pattern.word(word, start=lo[0])
            if s.locally_admissible(p):
                out.add(p.restrict(A))
            return
        for sym in syms:
            rec(word + (sym,))

    if length < k:
        # short window: project alive blocks
        for b in alive:
            for off in range(0, k - length + 1):
                p = Pattern.word(b[off : off + length], start=lo[0])
                out.add(p.restrict(A))
        return out
    rec(())
    return out


# ---------------------------------------------------------------------------
# catalog of named example shifts


def _even_predicate(p: Pattern) -> bool:
    # complete gaps of 0s (bounded by 1s on both sides inside a contiguous
    # stretch of the support) must have even length; gaps touching the
    # support boundary are unconstrained
    segs: list[list[Symbol]] = []
    prev = None
    for (g,), v in p.items():
        if prev is not None and g == prev + 1:
            segs[-1].append(v)
        else:
            segs.append([v])
        prev = g
    for seg in segs:
        last_one: int | None = None
        for i, v in enumerate(seg):
            if v == 1:
                if last_one is not None and (i - last_one - 1) % 2 == 1:
                    return False
                last_one = i
    return True


def _sunny_predicate(p: Pattern) -> bool:
    return sum(1 for v in p.values if v == 1) <= 1


_NBRS8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _squares_predicate(p: Pattern) -> bool:
    """Closure description of the squares shift on windows: every
    8-connected component of filled cells whose 8-neighborhood stays
    inside the support must be a filled square; components touching the
    support boundary are unconstrained."""
    pm = p._map
    filled = {g for g, v in p.items() if v == 1}
    support = set(p.sites)
    seen: set = set()
    for start in filled:
        if start in seen:
            continue
        comp = {start}
        queue = [start]
        interior = True
        while queue:
            g = queue.pop()
            for dg in _NBRS8:
                h = (g[0] + dg[0], g[1] + dg[1])
                if h not in support:
                    interior = False
                    continue
                if h in filled and h not in comp:
                    comp.add(h)
                    queue.append(h)
        seen |= comp
        if not interior:
            continue
        xs = [g[0] for g in comp]
        ys = [g[1] for g in comp]
        side = max(xs) - min(xs) + 1
        if side != max(ys) - min(ys) + 1 or len(comp) != side * side:
            return False
    return True


def _hard_core_sft(shape: Shape) -> SFT:
    diff = shape.difference_set()
    origin = (0,) * shape.dim
    forbidden = []
    for g in diff:
        if g == origin or g < origin:
            continue  # one orientation suffices
        forbidden.append(Pattern.of({origin: 1, g: 1}))
    window = Shape.of([origin] + [g for g in diff if g > origin], dim=shape.dim)
    return SFT(
        alphabet=Alphabet.of((0, 1)),
        dim=shape.dim,
        window=window,
        forbidden=frozenset(forbidden),
        safe_symbol=0,
    )


def _colorings_sft(q: int, dim: int) -> SFT:
    origin = (0,) * dim
    forbidden = []
    units = [tuple(1 if i == j else 0 for i in range(dim)) for j in range(dim)]
    for e in units:
        for c in range(q):
            forbidden.append(Pattern.of({origin: c, e: c}))
    window = Shape.of([origin] + units, dim=dim)
    return SFT(
        alphabet=Alphabet.of(tuple(range(q))),
        dim=dim,
        window=window,
        forbidden=frozenset(forbidden),
    )


class _ColoringsSFT(SFT):
    # q > 2 * dim admits greedy extension of any locally proper pattern
    def exact_at(self, A: Shape, margin: int) -> bool:
        return len(self.alphabet) > 2 * self.dim or super().exact_at(A, margin)


def _group_xor(taps: tuple[int, ...]) -> GroupShift:
    window = Shape.of(taps)
    forbidden = []
    for combo in _iproduct((0, 1), repeat=len(taps)):
        if sum(combo) % 2 == 1:
            forbidden.append(Pattern.of(dict(zip(window.sites, combo))))
    return GroupShift(
        alphabet=Alphabet.cyclic_group(2),
        dim=1,
        window=window,
        forbidden=frozenset(forbidden),
    )


def catalog(name: str, **params) -> SubshiftSpec:
    """Named example shifts.

    full(q=2, dim=1, group=False), golden_mean, even, hard_core(shape or
    dim), squares, sunny_side_up(dim=1), proper_colorings(q, dim=2),
    group_xor(taps=(0, 1)).
    """
    if name == "full":
        q = params.get("q", 2)
        dim = params.get("dim", 1)
        if params.get("group"):
            return FullShift(Alphabet.cyclic_group(q), dim)
        symbols = params.get("symbols")
        alpha = Alphabet.of(symbols) if symbols else Alphabet.of(tuple(range(q)))
        return FullShift(alpha, dim)
    if name == "golden_mean":
        return SFT(
            alphabet=Alphabet.of((0, 1)),
            dim=1,
            window=Shape.of([0, 1]),
            forbidden=frozenset({Pattern.word((1, 1))}),
            safe_symbol=0,
        )
    if name == "even":
        return OracleShift(
            alphabet=Alphabet.of((0, 1)),
            dim=1,
            predicate=_even_predicate,
            exact=False,
            name="even",
        )
    if name == "hard_core":
        shape = params.get("shape")
        if shape is None:
            dim = params.get("dim", 1)
            units = [
                tuple(1 if i == j else 0 for i in range(dim)) for j in range(dim)
            ]
            shape = Shape.of([(0,) * dim] + units, dim=dim)
        return _hard_core_sft(shape)
    if name == "squares":
        return OracleShift(
            alphabet=Alphabet.of((0, 1)),
            dim=2,
            predicate=_squares_predicate,
            exact=False,
            name="squares",
        )
    if name == "sunny_side_up":
        return OracleShift(
            alphabet=Alphabet.of((0, 1)),
            dim=params.get("dim", 1),
            predicate=_sunny_predicate,
            exact=True,
            name="sunny_side_up",
        )
    if name == "proper_colorings":
        q = params.get("q", 5)
        dim = params.get("dim", 2)
        base = _colorings_sft(q, dim)
        return _ColoringsSFT(base.alphabet, base.dim, base.window, base.forbidden)
    if name == "group_xor":
        taps = tuple(params.get("taps", (0, 1)))
        return _group_xor(taps)
    raise ValueError(f"unknown catalog shift {name!r}")
