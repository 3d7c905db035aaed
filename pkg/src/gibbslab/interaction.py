"""Interactions, norms, Hamiltonians, and conditional energies.

An interaction is a finite family of local terms, one per anchored shape
(the translate whose lexicographically minimal site is the origin), applied
at every translate of that shape. Terms may read a finite environment
window, which makes the interaction relative. Inverse temperature is
absorbed into the term values; energies are plain 64-bit sums. Conditional
energies on finite windows come with a certified truncation error: the sum
of norms of the translates that meet the target but escape the window.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iproduct
from typing import Callable, Iterator

from gibbslab.lattice import Shape, Site, add, as_site, neg, sub
from gibbslab.symbolic import Alphabet, Pattern


def anchor(shape: Shape) -> Shape:
    """Canonical translate of a shape: lexicographically minimal site at
    the origin."""
    if not shape.sites:
        return shape
    return shape.translate(neg(shape.sites[0]))


def _lift(g: Site, dim: int) -> Site:
    """Pad a translation vector with trailing zeros up to dim coordinates.

    Environment shapes may live in a higher-dimensional ambient lattice
    than the interaction (slice systems); translations act on the leading
    coordinates only.
    """
    return g + (0,) * (dim - len(g))


@dataclass(frozen=True)
class LocalTerm:
    """One anchored energy term.

    Args:
        shape: anchored support; the term is applied at every translate.
        evaluator: maps (env values, pattern values) to a real energy,
            values ordered by the sorted sites of env_shape and shape.
        sup_norm: declared bound on |evaluator|; must dominate the true
            supremum over all symbol assignments.
        env_shape: sites of environment dependence, relative to the
            anchor, possibly in a higher-dimensional ambient lattice.
    """

    shape: Shape
    evaluator: Callable[[tuple, tuple], float]
    sup_norm: float
    env_shape: Shape | None = None

    def __post_init__(self):
        if not self.shape.sites:
            raise ValueError("term shape must be nonempty")
        if self.shape.sites[0] != (0,) * self.shape.dim:
            raise ValueError("term shape must be anchored at the origin")
        if self.sup_norm < 0:
            raise ValueError("sup_norm must be nonnegative")

    def diameter(self) -> int:
        lo, hi = self.shape.bounding_box()
        return max(h - l for l, h in zip(lo, hi))


@dataclass(frozen=True)
class Interaction:
    """Finite-range translation-invariant interaction.

    Args:
        dim: lattice dimension of the pattern variables.
        alphabet: symbol alphabet of the pattern variables.
        terms: local terms with pairwise distinct anchored shapes.
        range: declared bound on the sup-norm diameter of term shapes.
        env_alphabet: alphabet of the environment layer, when terms read
            one or when the interaction is paired with a fiber rule.
        tail_bound: certified bound on the total norm of omitted terms
            beyond the declared range; zero for the finite-range catalog.
    """

    dim: int
    alphabet: Alphabet
    terms: tuple[LocalTerm, ...]
    range: int
    env_alphabet: Alphabet | None = None
    tail_bound: float = 0.0

    def __post_init__(self):
        shapes = [t.shape for t in self.terms]
        if len(set(shapes)) != len(shapes):
            raise ValueError("terms must have distinct anchored shapes")
        for t in self.terms:
            if t.shape.dim != self.dim:
                raise ValueError("term shape dimension mismatch")
            if t.diameter() > self.range:
                raise ValueError("term exceeds declared range")
            if t.env_shape is not None and self.env_alphabet is None:
                raise ValueError("environment term without env_alphabet")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be nonnegative")

    def validate_sup_norms(self, cap: int = 1_000_000) -> None:
        """Check each declared sup-norm against exhaustive enumeration of
        symbol assignments. Raises ValueError on a violation; skips terms
        whose assignment count exceeds the cap."""
        for t in self.terms:
            worst = _computed_sup(t, self.alphabet, self.env_alphabet, cap)
            if worst is not None and worst > t.sup_norm + 1e-12:
                raise ValueError(
                    f"term on {t.shape.sites} exceeds declared sup-norm: "
                    f"{worst} > {t.sup_norm}"
                )


def _computed_sup(
    t: LocalTerm,
    alphabet: Alphabet,
    env_alphabet: Alphabet | None,
    cap: int = 1_000_000,
) -> float | None:
    env_sites = t.env_shape.sites if t.env_shape is not None else ()
    n_env = len(env_alphabet) ** len(env_sites) if env_sites else 1
    if n_env * len(alphabet) ** len(t.shape) > cap:
        return None
    env_pool = (
        _iproduct(env_alphabet.symbols, repeat=len(env_sites)) if env_sites else ((),)
    )
    worst = 0.0
    for ev in env_pool:
        for xv in _iproduct(alphabet.symbols, repeat=len(t.shape)):
            worst = max(worst, abs(t.evaluator(ev, xv)))
    return worst


def norm(phi: Interaction) -> float:
    """Total interaction norm: the sum over shapes containing a fixed site
    of their sup-norms, i.e. sum of |shape| * sup_norm over anchored terms,
    plus the certified tail bound."""
    return sum(len(t.shape) * t.sup_norm for t in phi.terms) + phi.tail_bound


def _term_value(t: LocalTerm, g: Site, x: Pattern, theta: Pattern | None) -> float:
    xv = tuple(x[add(g, s)] for s in t.shape.sites)
    if t.env_shape is None or not t.env_shape.sites:
        return t.evaluator((), xv)
    if theta is None:
        raise ValueError("term reads the environment but none was given")
    ge = _lift(g, t.env_shape.dim)
    ev = []
    for s in t.env_shape.sites:
        v = theta.get(add(ge, s))
        if v is None:
            raise ValueError(f"environment window misses site {add(ge, s)}")
        ev.append(v)
    return t.evaluator(tuple(ev), xv)


def anchors_within(phi: Interaction, A: Shape) -> Iterator[tuple[LocalTerm, Site]]:
    """Pairs (term, g) with the translate g + shape contained in A."""
    inside = A._site_set
    for t in phi.terms:
        seen: set[Site] = set()
        for a in A.sites:
            for s in t.shape.sites:
                g = sub(a, s)
                if g in seen:
                    continue
                seen.add(g)
                if all(add(g, s2) in inside for s2 in t.shape.sites):
                    yield t, g


def anchors_meeting(phi: Interaction, A: Shape) -> Iterator[tuple[LocalTerm, Site]]:
    """Pairs (term, g) with the translate g + shape meeting A."""
    for t in phi.terms:
        seen: set[Site] = set()
        for a in A.sites:
            for s in t.shape.sites:
                g = sub(a, s)
                if g not in seen:
                    seen.add(g)
                    yield t, g


def energy(phi: Interaction, x: Pattern, theta: Pattern | None = None) -> float:
    """Energy content E_A of a pattern on A: the sum of all term translates
    contained in A.

    Args:
        x: pattern on the target window.
        theta: environment pattern covering every env-shape translate of
            the contributing terms; only needed for relative interactions.
    """
    total = 0.0
    for t, g in anchors_within(phi, x.support):
        total += _term_value(t, g, x, theta)
    return total


def conditional_energy(
    phi: Interaction,
    x: Pattern,
    A: Shape,
    B: Shape,
    theta: Pattern | None = None,
) -> float:
    """Conditional energy E_{A|B}: the sum of term translates inside A u B
    that meet A minus B. Satisfies E_{A|B} = E_{A u B} - E_B exactly.

    Args:
        x: pattern covering A u B.
    """
    ab = A | B
    inside = ab._site_set
    target = (A - B)._site_set
    total = 0.0
    for t in phi.terms:
        seen: set[Site] = set()
        for a in A.sites:
            for s in t.shape.sites:
                g = sub(a, s)
                if g in seen:
                    continue
                seen.add(g)
                sites = [add(g, s2) for s2 in t.shape.sites]
                if all(q in inside for q in sites) and any(q in target for q in sites):
                    total += _term_value(t, g, x, theta)
    return total


def conditional_energy_inf(
    phi: Interaction,
    x: Pattern,
    A: Shape,
    theta: Pattern | None = None,
) -> tuple[float, float]:
    """Window truncation of E_{A | complement of A}.

    Sums the term translates inside the support W of x that meet A, and
    certifies the truncation: the error term adds the norms of translates
    that meet A but escape W, plus the tail allowance. The error is zero
    once W contains the range-dilation of A.

    Returns:
        (value, err) with |true conditional energy - value| <= err.
    """
    W = x.support
    inside = W._site_set
    target = A._site_set
    value = 0.0
    err = len(A) * phi.tail_bound
    for t in phi.terms:
        seen: set[Site] = set()
        for a in A.sites:
            for s in t.shape.sites:
                g = sub(a, s)
                if g in seen:
                    continue
                seen.add(g)
                sites = [add(g, s2) for s2 in t.shape.sites]
                if not any(q in target for q in sites):
                    continue
                if all(q in inside for q in sites):
                    value += _term_value(t, g, x, theta)
                else:
                    err += t.sup_norm
    return value, err


def energy_observable(
    phi: Interaction,
    x: Pattern,
    theta: Pattern | None = None,
    at: Site | None = None,
) -> float:
    """Single-site energy observable: each term translate through the site
    contributes its value split evenly among its |shape| sites. Summing the
    observable over a window reproduces the window energy up to a boundary
    term bounded by norm(phi) times the inner boundary size.

    Args:
        x: pattern covering every term translate through the site.
        at: the site carrying the contribution; defaults to the origin.
    """
    site = (0,) * phi.dim if at is None else as_site(at)
    total = 0.0
    for t in phi.terms:
        for s in t.shape.sites:
            g = sub(site, s)
            total += _term_value(t, g, x, theta) / len(t.shape)
    return total


def _combined_term(
    shape: Shape,
    parts: list[tuple[tuple[int, ...], tuple[Site, ...], LocalTerm]],
    alphabet: Alphabet,
    env_alphabet: Alphabet | None,
    env_dim: int,
    sup_cap: int = 200_000,
) -> LocalTerm:
    """Assemble one slice term from regrouped 2D contributions.

    Each part carries the column-coordinate positions of the inside sites
    (index into the flattened column tuple at each 1D offset) and the
    absolute environment sites of the outside sites.
    """
    env_sites = sorted({q for _, qs, _ in parts for q in qs})
    env_shape = Shape.of(env_sites, dim=env_dim) if env_sites else None
    env_index = {q: i for i, q in enumerate(env_sites)}
    plan = []
    for flat_idx, qs, t in parts:
        plan.append((flat_idx, tuple(env_index[q] for q in qs), t.evaluator))

    def evaluator(ev: tuple, xv: tuple) -> float:
        # rebuild each base term's full value tuple in its own site order
        total = 0.0
        for flat_idx, env_idx, base in plan:
            vals = []
            k = 0
            for pos in flat_idx:
                if pos is None:
                    vals.append(ev[env_idx[k]])
                    k += 1
                else:
                    col, row = pos
                    vals.append(xv[col][row])
            total += base((), tuple(vals))
        return total

    triangle = sum(t.sup_norm for _, _, t in parts)
    probe = LocalTerm(shape, evaluator, triangle, env_shape)
    exact = _computed_sup(probe, alphabet, env_alphabet, sup_cap)
    sup = exact if exact is not None else triangle
    return LocalTerm(shape, evaluator, sup, env_shape)


def push_to_slice(phi: Interaction, N: int) -> Interaction:
    """Regroup a 2D interaction onto the height-N strip Z x [0, N).

    Returns a 1D relative interaction over the column alphabet (tuples of
    N base symbols, row 0 first). A 2D term translate contributes to the
    anchored column shape spanned by its in-strip sites; its out-of-strip
    sites become environment dependence, recorded as absolute 2D sites
    relative to the anchor column. The pushed norm never exceeds N times
    the original norm.

    Args:
        N: strip height, at least 1.
    """
    if phi.dim != 2:
        raise ValueError("slice push-down requires a 2D interaction")
    if phi.env_alphabet is not None:
        raise ValueError("slice push-down of relative interactions unsupported")
    if N < 1:
        raise ValueError("strip height must be positive")
    column = Alphabet.of(
        tuple(_iproduct(phi.alphabet.symbols, repeat=N))
    )
    # bucket: anchored 1D shape -> list of (flat positions, env sites, term)
    buckets: dict[Shape, list] = {}
    for t in phi.terms:
        lo, hi = t.shape.bounding_box()
        for v in range(-hi[1], N - lo[1]):
            inside = [(sx, v + sy) for sx, sy in t.shape.sites if 0 <= v + sy < N]
            if not inside:
                continue
            cols = sorted({sx for sx, _ in inside})
            base_col = cols[0]
            a_shape = Shape.of([(c - base_col,) for c in cols])
            flat_idx: list = []
            env_sites: list[Site] = []
            for sx, sy in t.shape.sites:
                y = v + sy
                if 0 <= y < N:
                    flat_idx.append((a_shape.sites.index((sx - base_col,)), y))
                else:
                    flat_idx.append(None)
                    env_sites.append((sx - base_col, y))
            buckets.setdefault(a_shape, []).append(
                (tuple(flat_idx), tuple(env_sites), t)
            )
    terms = tuple(
        _combined_term(shape, parts, column, phi.alphabet, env_dim=2)
        for shape, parts in sorted(buckets.items(), key=lambda kv: kv[0].sites)
    )
    pushed = Interaction(
        dim=1,
        alphabet=column,
        terms=terms,
        range=phi.range,
        env_alphabet=phi.alphabet if any(t.env_shape for t in terms) else None,
        tail_bound=phi.tail_bound * N,
    )
    assert norm(pushed) <= N * norm(phi) + 1e-9
    return pushed


def zero_interaction(alphabet: Alphabet, dim: int) -> Interaction:
    return Interaction(dim=dim, alphabet=alphabet, terms=(), range=0)


def _ising_terms(h: float, dim: int) -> tuple[LocalTerm, ...]:
    terms = []
    if h != 0.0:
        terms.append(
            LocalTerm(
                Shape.origin(dim),
                lambda ev, xv, h=h: -h * xv[0],
                abs(h),
            )
        )
    for i in range(dim):
        e = tuple(1 if j == i else 0 for j in range(dim))
        terms.append(
            LocalTerm(
                Shape.of([(0,) * dim, e]),
                lambda ev, xv: -xv[0] * xv[1],
                1.0,
            )
        )
    return tuple(terms)


def catalog_interaction(name: str, **params) -> Interaction:
    """Named interactions.

    Names:
        ising: nearest-neighbor spins in {-1, +1} with field h (dim, h).
        ising_percolation: spins in {-1, 0, +1} on Z^2 with field h, to be
            paired with a site-percolation environment whose open sites
            carry the spins (h).
        colorings: zero interaction over q colors on Z^2 (q).
    """
    if name == "ising":
        h = float(params.get("h", 0.0))
        dim = int(params.get("dim", 1))
        return Interaction(
            dim=dim,
            alphabet=Alphabet.of((-1, 1)),
            terms=_ising_terms(h, dim),
            range=1,
        )
    if name == "ising_percolation":
        h = float(params.get("h", 0.0))
        return Interaction(
            dim=2,
            alphabet=Alphabet.of((-1, 0, 1)),
            terms=_ising_terms(h, 2),
            range=1,
            env_alphabet=Alphabet.of((0, 1)),
        )
    if name == "colorings":
        q = int(params.get("q", 3))
        return Interaction(
            dim=2,
            alphabet=Alphabet.of(tuple(range(q))),
            terms=(),
            range=0,
        )
    raise ValueError(f"unknown interaction {name!r}")
