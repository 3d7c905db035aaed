"""Environment-coupled symbolic systems: fibers, factor graphs, slices.

A relative system couples a base subshift to a frozen environment layer
through local rules; freezing an environment window yields the fiber, an
ordinary subshift on which every kernel, language, and measure tool of the
plain modules applies. Three constructions produce such systems: named
disordered models (spins on percolation, colorings of a random subgraph),
the graph system of a sliding block code (environment = image shift, rule =
the code itself), and the slice presentation of a 2D spec as a 1D shift of
strip columns coupled to the configuration outside the strip. On top of
these sit the relative Gibbs checks, the slice kernel comparison, the
two-pattern ratio identity test, the non-overlap decision procedure, and a
coordinate-ascent search for relative equilibrium window measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import islice, product as _iproduct
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from gibbslab.lattice import Shape, Site, add, sub
from gibbslab.symbolic import (
    SFT,
    Alphabet,
    BudgetExceeded,
    FullShift,
    LanguageTable,
    OracleShift,
    Pattern,
    SubshiftSpec,
    Symbol,
    _enumerate_admissible,
    compatible,
    language,
    merge,
)
from gibbslab.interaction import (
    Interaction,
    _lift,
    conditional_energy_inf,
    push_to_slice,
)
from gibbslab.measure import (
    EmpiricalMeasure,
    EnvMarginal,
    WindowMeasure,
    pressure_window,
)
from gibbslab.gibbs import (
    FiberRule,
    GibbsKernel,
    GibbsReport,
    InadmissibleContext,
    boltzmann,
    gibbs_property_test,
    tv_distance,
)
from gibbslab.mixing import (
    INCONCLUSIVE,
    REFUTED,
    VERIFIED,
    Verdict,
    _certificate_radius,
    _pat_json,
    interchangeable,
    memory_set_check,
)


def _read(values: Mapping, anchor: Site, sites: Iterable[Site]) -> tuple | None:
    """Values of a pattern map at anchor + sites, or None when any site is
    uncovered."""
    out = []
    for s in sites:
        v = values.get(add(anchor, s))
        if v is None:
            return None
        out.append(v)
    return tuple(out)


# ---------------------------------------------------------------------------
# relative systems and their fibers


@dataclass(frozen=True)
class FiberSpec(SubshiftSpec):
    """Base-spec admissibility joined with the coupling rules a frozen
    environment window activates.

    A rule translate participates only when the pattern covers its x sites
    and the environment window covers its env sites; translates reaching
    beyond either are silently inactive. Tables over a partial environment
    can therefore only overcount the fiber language, which keeps the
    enumeration monotone under restriction, and is why ``exact_at`` never
    certifies a fiber with rules.
    """

    alphabet: Alphabet
    dim: int
    base: SubshiftSpec
    theta: Pattern
    rules: tuple[FiberRule, ...]

    def locally_admissible(self, p: Pattern) -> bool:
        if not self.base.locally_admissible(p):
            return False
        pm = p._map
        tm = self.theta._map
        for rule in self.rules:
            seen: set[Site] = set()
            for g in p.sites:
                for s in rule.shape.sites:
                    a = sub(g, s)
                    if a in seen:
                        continue
                    seen.add(a)
                    xv = _read(pm, a, rule.shape.sites)
                    if xv is None:
                        continue
                    ev = _read(tm, _lift(a, rule.env_shape.dim), rule.env_shape.sites)
                    if ev is None:
                        continue
                    if not rule.test(ev, xv):
                        return False
        return True

    def exact_at(self, A: Shape, margin: int) -> bool:
        return not self.rules and self.base.exact_at(A, margin)


@dataclass(frozen=True)
class RelativeSystem:
    """Base subshift coupled to an environment layer by local rules.

    The joint system consists of pairs (environment, base configuration)
    in which the base configuration satisfies its own spec together with
    every coupling rule translate covered by both layers; freezing an
    environment window yields the fiber, an ordinary subshift. The
    environment spec may live in a higher dimension than the base (slice
    systems couple a 1D column shift to the 2D configuration outside the
    strip); rule anchors are then padded with zeros to address it.
    """

    base: SubshiftSpec
    env: SubshiftSpec
    rules: tuple[FiberRule, ...] = ()

    @property
    def coupling_radius(self) -> int:
        """Sup-norm reach of the coupling rules around their anchors."""
        r = 0
        for rule in self.rules:
            for sh in (rule.shape, rule.env_shape):
                if sh.sites:
                    lo, hi = sh.bounding_box()
                    r = max(r, max(abs(c) for c in lo + hi))
        return r

    def fiber(self, theta: Pattern) -> FiberSpec:
        """The base spec constrained by the rules theta activates."""
        return FiberSpec(self.base.alphabet, self.base.dim, self.base, theta, self.rules)

    def joint_admissible(self, theta: Pattern, x: Pattern) -> bool:
        """Local admissibility of the pair: environment spec, base spec,
        and every covered coupling rule."""
        return self.env.locally_admissible(theta) and self.fiber(theta).locally_admissible(x)


def trivial_relative(base: SubshiftSpec) -> RelativeSystem:
    """Couple a spec to a one-symbol environment carrying no information."""
    return RelativeSystem(base, FullShift(Alphabet.of((0,)), base.dim), ())


def catalog_relative(name: str, **params) -> RelativeSystem:
    """Named environment-coupled systems.

    Names:
        ising_percolation: spins {-1, 0, +1} on Z^2 coupled to a 0/1 site
            environment; closed sites carry spin 0 and open sites a
            nonzero spin.
        colorings_subgraph: q colors on Z^2 (q in params, default 5)
            coupled to a bond environment of (right, up) indicator pairs;
            the endpoints of a present bond must receive different colors.
    """
    if name == "ising_percolation":
        base = FullShift(Alphabet.of((-1, 0, 1)), 2)
        env = FullShift(Alphabet.of((0, 1)), 2)
        rule = FiberRule(
            Shape.origin(2),
            Shape.origin(2),
            lambda ev, xv: (xv[0] == 0) == (ev[0] == 0),
        )
        return RelativeSystem(base, env, (rule,))
    if name == "colorings_subgraph":
        q = int(params.get("q", 5))
        base = FullShift(Alphabet.of(tuple(range(q))), 2)
        env = FullShift(Alphabet.of(((0, 0), (0, 1), (1, 0), (1, 1))), 2)
        right = FiberRule(
            Shape.of([(0, 0), (1, 0)]),
            Shape.origin(2),
            lambda ev, xv: ev[0][0] == 0 or xv[0] != xv[1],
        )
        up = FiberRule(
            Shape.of([(0, 0), (0, 1)]),
            Shape.origin(2),
            lambda ev, xv: ev[0][1] == 0 or xv[0] != xv[1],
        )
        return RelativeSystem(base, env, (right, up))
    raise ValueError(f"unknown relative system {name!r}")


def percolation_weights(p: float) -> dict:
    """Single-site weights of a Bernoulli(p) open/closed environment."""
    return {0: 1.0 - p, 1: p}


def bond_weights(p: float) -> dict:
    """Weights of independent Bernoulli(p) (right, up) bond indicators."""
    return {
        (r, u): (p if r else 1.0 - p) * (p if u else 1.0 - p)
        for r in (0, 1)
        for u in (0, 1)
    }


def random_environment(
    alphabet: Alphabet,
    weights: Mapping,
    dims: tuple[int, ...],
    seed: int,
) -> np.ndarray:
    """Seeded product-measure environment as a torus index array."""
    probs = np.array([float(weights.get(s, 0.0)) for s in alphabet.symbols])
    if abs(float(probs.sum()) - 1.0) > 1e-9:
        raise ValueError("environment weights must sum to 1")
    rng = np.random.default_rng(seed)
    flat = rng.choice(len(alphabet), size=int(np.prod(dims)), p=probs)
    return flat.reshape(dims).astype(np.int64)


def environment_pattern(env: np.ndarray, alphabet: Alphabet, A: Shape) -> Pattern:
    """Environment window read off a torus index array; sites wrap."""
    dims = env.shape
    values = tuple(
        alphabet.symbols[int(env[tuple(c % d for c, d in zip(g, dims))])]
        for g in A.sites
    )
    return Pattern(A.sites, values)


def fiber_language(
    rs: RelativeSystem,
    theta: Pattern,
    A: Shape,
    margin: int = 1,
    budget: int = 10_000_000,
) -> LanguageTable:
    """Window language of the fiber over theta: patterns on A that are
    jointly admissible with theta on the margin dilation of A."""
    if not rs.env.locally_admissible(theta):
        raise ValueError("environment window is not admissible")
    return rs.fiber(theta).language(A, margin, budget=budget)


# ---------------------------------------------------------------------------
# factor codes and their graph systems


@dataclass(frozen=True)
class FactorSystem:
    """Sliding block code out of a domain subshift.

    Args:
        domain: the subshift being factored.
        shape: code window; the image at g reads the domain values on
            g + shape in sorted site order.
        block: local map from value tuples to image symbols; must be total
            on the window language of the shape (checked at construction).
        image_alphabet: symbols the block map may produce.

    Equivariance is structural: the image at g is a fixed function of the
    translated window, so the code commutes with translation.
    """

    domain: SubshiftSpec
    shape: Shape
    block: Callable[[tuple], Symbol]
    image_alphabet: Alphabet

    def __post_init__(self):
        if not self.shape.sites:
            raise ValueError("code shape must be nonempty")
        if self.shape.dim != self.domain.dim:
            raise ValueError("code shape dimension mismatch")
        for u in language(self.domain, self.shape, margin=1):
            if self.block(u.values) not in self.image_alphabet:
                raise ValueError(f"block map leaves the image alphabet on {u.values}")

    @staticmethod
    def one_block(domain: SubshiftSpec, mapping: Mapping) -> "FactorSystem":
        """Single-site code given by a symbol table."""
        image = []
        for s in domain.alphabet:
            if mapping[s] not in image:
                image.append(mapping[s])
        return FactorSystem(
            domain,
            Shape.origin(domain.dim),
            lambda xv: mapping[xv[0]],
            Alphabet.of(tuple(image)),
        )

    def determined(self, W: Shape) -> Shape:
        """Anchors whose code window lies inside W."""
        if not W.sites:
            return Shape.empty(self.domain.dim)
        lo_w, hi_w = W.bounding_box()
        lo_f, hi_f = self.shape.bounding_box()
        inside = W._site_set
        hits = [
            g
            for g in Shape.box(
                tuple(a - b for a, b in zip(lo_w, lo_f)),
                tuple(a - b for a, b in zip(hi_w, hi_f)),
            )
            if all(add(g, s) in inside for s in self.shape.sites)
        ]
        if not hits:
            return Shape.empty(self.domain.dim)
        return Shape.of(hits, dim=self.domain.dim)

    def apply(self, x: Pattern) -> Pattern:
        """Image pattern on the anchors determined inside the support."""
        D = self.determined(x.support)
        xm = x._map
        values = tuple(
            self.block(tuple(xm[add(g, s)] for s in self.shape.sites)) for g in D.sites
        )
        return Pattern(D.sites, values)


def factor_relative_system(fs: FactorSystem, budget: int = 10_000_000) -> RelativeSystem:
    """Graph system of a sliding block code: the environment is the image
    shift and the single coupling rule pins the image at every anchor.

    Image membership is decided by a bounded preimage search over the
    Minkowski sum of the window with the code shape, so the environment
    spec never certifies exact tables.
    """
    dim = fs.domain.dim

    def has_preimage(th: Pattern) -> bool:
        if not th.sites:
            return True
        if any(v not in fs.image_alphabet for v in th.values):
            return False
        support = th.support.minkowski(fs.shape)
        tm = th._map
        for x in _enumerate_admissible(fs.domain, support, budget=budget):
            img = fs.apply(x)
            if all(img[g] == tm[g] for g in th.sites):
                return True
        return False

    env = OracleShift(fs.image_alphabet, dim, has_preimage, exact=False, name="factor_image")
    rule = FiberRule(
        fs.shape,
        Shape.origin(dim),
        lambda ev, xv: fs.block(xv) == ev[0],
    )
    return RelativeSystem(fs.domain, env, (rule,))


# ---------------------------------------------------------------------------
# relative Gibbs checks


def _group_contexts(
    mu,
    A: Shape,
    min_count: int,
    key: Callable[[Pattern], object] | None = None,
):
    """Split a measure into conditional groups, mirroring the grouping of
    the plain Gibbs test: per (atom environment, extra key, exterior
    context) a weight and a conditional table on A. Returns (groups,
    excluded) with empirical contexts below min_count excluded."""
    excluded: list[tuple[Pattern, int]] = []
    groups: list[tuple[Pattern | None, object, Pattern, float, dict[Pattern, float]]] = []
    W = mu.window
    ext = W - A
    if isinstance(mu, EmpiricalMeasure):
        counts: dict[tuple[object, Pattern], int] = {}
        tables: dict[tuple[object, Pattern], dict[Pattern, int]] = {}
        for u, n in mu.counts.items():
            k = (key(u) if key is not None else None, u.restrict(ext))
            counts[k] = counts.get(k, 0) + n
            tab = tables.setdefault(k, {})
            ua = u.restrict(A)
            tab[ua] = tab.get(ua, 0) + n
        for (k, c), n in counts.items():
            if n < min_count:
                excluded.append((c, n))
                continue
            cond = {v: m / n for v, m in tables[(k, c)].items()}
            groups.append((None, k, c, n / mu.total, cond))
    else:
        for theta, w, table in mu.atoms:
            masses: dict[tuple[object, Pattern], float] = {}
            conds: dict[tuple[object, Pattern], dict[Pattern, float]] = {}
            for u, p in table.items():
                k = (key(u) if key is not None else None, u.restrict(ext))
                masses[k] = masses.get(k, 0.0) + p
                tab = conds.setdefault(k, {})
                ua = u.restrict(A)
                tab[ua] = tab.get(ua, 0.0) + p
            for (k, c), m in masses.items():
                if m <= 0.0:
                    continue
                groups.append(
                    (theta, k, c, w * m, {v: p / m for v, p in conds[(k, c)].items()})
                )
    return groups, excluded


def fiber_gibbs_check(
    mu,
    fs: FactorSystem,
    phi: Interaction,
    A: Shape,
    tol: float = 1e-9,
    min_count: int = 30,
    budget: int = 10_000_000,
) -> GibbsReport:
    """Gibbs property relative to a factor code: per (image, exterior)
    context the conditional on A is compared against the Boltzmann weights
    over fillings that preserve the image at every anchor determined
    inside the window.

    Injective single-site codes condition on nothing beyond the exterior,
    so the check delegates to the plain Gibbs test and returns its report
    unchanged. Report rows carry the exterior part of each context; two
    images over the same exterior yield separate rows.
    """
    if fs.shape == Shape.origin(fs.domain.dim):
        images = {fs.block((a,)) for a in fs.domain.alphabet}
        if len(images) == len(fs.domain.alphabet):
            return gibbs_property_test(mu, phi, A, fs.domain, tol=tol, min_count=min_count)
    groups, excluded = _group_contexts(mu, A, min_count, key=fs.apply)
    rows = []
    total_w = 0.0
    agg = 0.0
    for theta, img, c, w, cond in groups:
        dist = _image_conditional(fs, phi, A, c, img, theta, budget)
        t = tv_distance(cond, dist.table())
        rows.append((c, w, t))
        total_w += w
        agg += w * t
    aggregate = agg / total_w if total_w > 0 else 0.0
    return GibbsReport(aggregate, aggregate <= tol, tol, tuple(rows), tuple(excluded))


def _image_conditional(
    fs: FactorSystem,
    phi: Interaction,
    A: Shape,
    context: Pattern,
    image: Pattern,
    theta: Pattern | None,
    budget: int,
):
    """Boltzmann distribution over admissible fillings of A under the
    context whose full-window image matches the given one."""
    U: dict[Pattern, float] = {}
    for u in _enumerate_admissible(fs.domain, A, context=context, budget=budget):
        x = merge(u, context)
        if fs.apply(x) != image:
            continue
        e, _ = conditional_energy_inf(phi, x, A, theta)
        U[u] = e
    if not U:
        raise InadmissibleContext("no filling of the target matches the conditioned image")
    return boltzmann(U)


def relative_gibbs_check(
    mu,
    rs: RelativeSystem,
    phi: Interaction,
    A: Shape,
    theta: Pattern | None = None,
    tol: float = 1e-9,
    min_count: int = 30,
) -> GibbsReport:
    """Gibbs test inside the fibers of a relative system: conditionals are
    compared against kernels whose admissibility and energies both see the
    frozen environment.

    Window measures use their own environment atoms; an empirical measure
    needs the explicit environment window theta (it must cover the rule
    translates and interaction terms reaching through the window).
    """
    if isinstance(mu, EmpiricalMeasure) and theta is None and rs.rules:
        raise ValueError("empirical check needs the environment window")
    groups, excluded = _group_contexts(mu, A, min_count)
    W = mu.window
    kernels: dict[Pattern | None, GibbsKernel] = {}
    rows = []
    total_w = 0.0
    agg = 0.0
    for atom_theta, _, c, w, cond in groups:
        th = atom_theta if atom_theta is not None else theta
        K = kernels.get(th)
        if K is None:
            system = rs.fiber(th) if th is not None else rs.base
            K = GibbsKernel.on_window(A, phi, system, W, th)
            kernels[th] = K
        dist = K.conditional(c)
        t = tv_distance(cond, dist.table())
        rows.append((c, w, t))
        total_w += w
        agg += w * t
    aggregate = agg / total_w if total_w > 0 else 0.0
    return GibbsReport(aggregate, aggregate <= tol, tol, tuple(rows), tuple(excluded))


# ---------------------------------------------------------------------------
# slice systems


def _unfold_pattern(p: Pattern, height: int) -> Pattern:
    """2D strip pattern of a 1D column pattern."""
    assignment = {}
    for (g,), col in p.items():
        for r in range(height):
            assignment[(g, r)] = col[r]
    return Pattern.of(assignment) if assignment else Pattern.empty(2)


@dataclass(frozen=True)
class _SliceSpec(SubshiftSpec):
    """1D shift over the column tuples of a 2D spec restricted to a strip.

    A column pattern is admissible when its unfolding into the strip is;
    constraints reaching outside the strip are carried by the coupling
    rules of the enclosing slice system instead. Full-column padding by a
    safe column keeps unfoldings admissible, so a safe symbol of the 2D
    spec certifies exact tables here as well.
    """

    alphabet: Alphabet
    dim: int
    plane: SubshiftSpec
    height: int
    safe_symbol: Symbol | None = None

    def locally_admissible(self, p: Pattern) -> bool:
        if any(v not in self.alphabet for v in p.values):
            return False
        return self.plane.locally_admissible(_unfold_pattern(p, self.height))

    def exact_at(self, A: Shape, margin: int) -> bool:
        return self.safe_symbol is not None or isinstance(self.plane, FullShift)


@dataclass(frozen=True)
class SliceSystem:
    """A 2D spec viewed as a 1D shift of strip columns coupled to the
    configuration outside the strip.

    The strip is Z x [0, height); folding maps a 2D pattern covering whole
    strip columns to a column pattern and back bijectively, and a mixed 2D
    pattern splits into (outside environment, folded strip part).
    """

    base: SubshiftSpec
    height: int
    columns: Alphabet
    relative: RelativeSystem

    def fold(self, strip: Pattern) -> Pattern:
        """Column pattern of a 2D pattern covering whole strip columns."""
        xm = strip._map
        cols = sorted({g[0] for g in strip.sites})
        values = []
        for c in cols:
            col = tuple(xm.get((c, r)) for r in range(self.height))
            if any(v is None for v in col):
                raise ValueError(f"column {c} is not fully covered")
            values.append(col)
        if len(strip) != self.height * len(cols):
            raise ValueError("pattern has sites outside the strip")
        return Pattern(tuple((c,) for c in cols), tuple(values))

    def unfold(self, x: Pattern) -> Pattern:
        """2D strip pattern of a 1D column pattern."""
        return _unfold_pattern(x, self.height)

    def split(self, x: Pattern) -> tuple[Pattern, Pattern]:
        """(environment outside the strip, folded strip part)."""
        inside = {g: v for g, v in x.items() if 0 <= g[1] < self.height}
        outside = {g: v for g, v in x.items() if not 0 <= g[1] < self.height}
        out = Pattern.of(outside) if outside else Pattern.empty(2)
        return out, self.fold(Pattern.of(inside) if inside else Pattern.empty(2))


def slice_system(Y: SubshiftSpec, N: int) -> SliceSystem:
    """Present a 2D spec as columns of the strip Z x [0, N) coupled to the
    configuration outside.

    In-strip constraints fold into the 1D column spec. Every forbidden
    translate straddling a strip boundary becomes a coupling rule: its
    in-strip cells index into the column tuples and its out-of-strip cells
    become environment sites, addressed in the plane relative to the
    anchor column. Requires an SFT or a full shift, so the straddle split
    is finite.
    """
    if Y.dim != 2:
        raise ValueError("slice systems need a 2D base spec")
    if N < 1:
        raise ValueError("strip height must be positive")
    if not isinstance(Y, (SFT, FullShift)):
        raise ValueError("slice systems need finite-range rules (SFT or full shift)")
    columns = Alphabet.of(tuple(_iproduct(Y.alphabet.symbols, repeat=N)))
    rules: list[FiberRule] = []
    if isinstance(Y, SFT):
        for f in Y.forbidden:
            lo, hi = f.support.bounding_box()
            for v in range(-hi[1], N - lo[1]):
                inside = [(s, val) for s, val in f.items() if 0 <= v + s[1] < N]
                outside = [(s, val) for s, val in f.items() if not 0 <= v + s[1] < N]
                if not inside or not outside:
                    continue
                cols = sorted({s[0] for s, _ in inside})
                base_col = cols[0]
                shape = Shape.of([(c - base_col,) for c in cols])
                col_index = {c: i for i, c in enumerate(cols)}
                in_checks = tuple((col_index[s[0]], v + s[1], val) for s, val in inside)
                env_map = {(s[0] - base_col, v + s[1]): val for s, val in outside}
                env_shape = Shape.of(sorted(env_map))
                env_vals = tuple(env_map[q] for q in env_shape.sites)

                def test(ev, xv, in_checks=in_checks, env_vals=env_vals):
                    if ev != env_vals:
                        return True
                    return any(xv[i][r] != val for i, r, val in in_checks)

                rules.append(FiberRule(shape, env_shape, test))
    safe = (Y.safe_symbol,) * N if Y.safe_symbol is not None else None
    spec = _SliceSpec(columns, 1, Y, N, safe)
    return SliceSystem(Y, N, columns, RelativeSystem(spec, Y, tuple(rules)))


def _pinned_contexts(
    Y: SubshiftSpec, near: Shape, far: Shape, budget: int
) -> Iterator[Pattern]:
    """Admissible assignments of the near region, each completed on the
    far region by a fixed admissible background (the safe symbol when one
    exists, else the first admissible extension)."""
    for u in _enumerate_admissible(Y, near, budget=budget):
        if not far.sites:
            yield u
            continue
        if Y.safe_symbol is not None:
            yield merge(u, Pattern.constant(far, Y.safe_symbol))
            continue
        ext = next(_enumerate_admissible(Y, far, context=u, budget=budget), None)
        if ext is not None:
            yield merge(u, ext)


def slice_kernel_equality_check(
    Y: SubshiftSpec,
    phi: Interaction,
    N: int,
    A: Shape,
    contexts: Iterable[Pattern] | None = None,
    window: Shape | None = None,
    budget: int = 10_000_000,
) -> float:
    """Largest probability gap between the 2D Gibbs kernel on the unfolded
    target and the 1D slice kernel on the column target over matched
    contexts; the two agree up to float rounding.

    Contexts are 2D patterns on window minus the unfolded target. When
    omitted, every admissible assignment of the sites within reach of the
    target (interaction range and spec certificate radius) is enumerated
    and the remaining window sites are pinned to a fixed admissible
    background, which leaves the kernels untouched. The window must cover
    one further interaction range of environment so the pushed energies
    can read it; the default window does.
    """
    if Y.dim != 2 or phi.dim != 2:
        raise ValueError("slice comparison needs a 2D spec and interaction")
    if phi.env_alphabet is not None:
        raise ValueError("the 2D interaction must not itself read an environment")
    ss = slice_system(Y, N)
    phi1 = push_to_slice(phi, N)
    A2 = Shape.of([(g[0], r) for g in A.sites for r in range(N)])
    reach = max(1, phi.range, _certificate_radius(Y) or 0)
    core = A2.dilate(reach)
    W2 = window if window is not None else A2.dilate(reach + phi.range)
    if not core <= W2:
        raise ValueError("window must cover the reach around the target")
    K2 = GibbsKernel.on_window(A2, phi, Y, W2)
    if contexts is None:
        near = core - A2
        far = W2 - core
        ctx_iter: Iterable[Pattern] = _pinned_contexts(Y, near, far, budget)
    else:
        ctx_iter = contexts
    worst = 0.0
    for c2 in ctx_iter:
        dist2 = K2.conditional(c2, budget=budget)
        theta, c1, V1 = _split_slice_context(ss, c2, A)
        K1 = GibbsKernel.on_window(A, phi1, ss.relative.fiber(theta), V1, theta)
        dist1 = K1.conditional(c1, budget=budget)
        t1 = dist1.table()
        t2 = {ss.fold(u2): p for u2, p in dist2.table().items()}
        for k in set(t1) | set(t2):
            worst = max(worst, abs(t1.get(k, 0.0) - t2.get(k, 0.0)))
    return worst


def _split_slice_context(
    ss: SliceSystem, c2: Pattern, A: Shape
) -> tuple[Pattern, Pattern, Shape]:
    """Split a 2D context into (environment outside the strip, folded
    column context, 1D kernel window). Strip columns present only in part
    are rejected: they fold into no column symbol."""
    inside: dict[int, dict[int, Symbol]] = {}
    outside: dict[Site, Symbol] = {}
    for g, v in c2.items():
        if 0 <= g[1] < ss.height:
            inside.setdefault(g[0], {})[g[1]] = v
        else:
            outside[g] = v
    partial = [c for c, rows in inside.items() if len(rows) != ss.height]
    if partial:
        raise ValueError(f"strip columns {partial} are only partly covered")
    theta = Pattern.of(outside) if outside else Pattern.empty(2)
    c1 = Pattern.of(
        {(c,): tuple(rows[r] for r in range(ss.height)) for c, rows in inside.items()}
    ) if inside else Pattern.empty(1)
    V1 = Shape.of([(c,) for c in inside] + list(A.sites))
    return theta, c1, V1


def slice_tmp_check(
    Y: SubshiftSpec,
    N: int,
    A: Shape,
    max_radius: int,
    margin: int = 1,
    env_cases: int | None = None,
    base_samples: int = 200,
    seed: int = 0,
    budget: int = 10_000_000,
) -> Verdict:
    """Search for a column memory set for the target A of the height-N
    slice and verify it relative to every admissible environment.

    Radii are tried in increasing order.  At each radius the dilation of
    the unfolded target is screened as a 2D memory set by sampled
    exchanges (exhaustive 2D tables blow up on wide windows), and the
    column span of a surviving candidate is verified in the slice: first
    for the free column spec, then inside the fiber over every admissible
    environment window reaching the checked region (or the first
    env_cases of them).  A candidate refuted in the slice advances the
    radius; exhausting max_radius returns the last refutation as
    inconclusive, since a larger set may still work.  Exactness rests on
    the slice checks alone.
    """
    ss = slice_system(Y, N)
    A2 = Shape.of([(g[0], r) for g in A.sites for r in range(N)])
    last: dict | None = None
    for radius in range(max_radius + 1):
        base = memory_set_check(
            Y,
            A2,
            A2.dilate(radius),
            margin=margin,
            samples=base_samples,
            seed=seed,
            budget=budget,
        )
        if base.outcome == INCONCLUSIVE:
            return Verdict(INCONCLUSIVE, {"base_screen": dict(base.witness)}, False)
        if base.outcome == REFUTED:
            last = {"radius": radius, "base_screen": dict(base.witness)}
            continue
        C = A.dilate(radius)
        free = memory_set_check(ss.relative.base, A, C, margin=margin, budget=budget)
        if free.outcome == INCONCLUSIVE:
            witness = {"free_strip": dict(free.witness), "memory_set": C.serializable()}
            return Verdict(INCONCLUSIVE, witness, False)
        if free.outcome == REFUTED:
            last = {
                "radius": radius,
                "free_strip": dict(free.witness),
                "memory_set": C.serializable(),
            }
            continue
        sweep = _slice_fiber_sweep(ss, Y, A, C, margin, env_cases, budget)
        if sweep.outcome == INCONCLUSIVE:
            return sweep
        if sweep.outcome == REFUTED:
            last = {"radius": radius, **dict(sweep.witness)}
            continue
        witness = {
            "A": A.serializable(),
            "memory_set": C.serializable(),
            "radius": radius,
            "fibers_checked": sweep.witness["fibers_checked"],
            "env_cases_capped": env_cases is not None,
        }
        return Verdict(VERIFIED, witness, free.exact and sweep.exact)
    witness = last if last is not None else {"max_radius": max_radius}
    return Verdict(INCONCLUSIVE, witness, False)


def _slice_fiber_sweep(
    ss: SliceSystem,
    Y: SubshiftSpec,
    A: Shape,
    C: Shape,
    margin: int,
    env_cases: int | None,
    budget: int,
) -> Verdict:
    """Check C as a memory set for A inside the fiber over every
    admissible environment window the straddle rules can read."""
    checked = 0
    exact = True
    if ss.relative.rules:
        W1 = C.dilate(margin)
        env_sites: set[Site] = set()
        for rule in ss.relative.rules:
            for g in W1.sites:
                for s in rule.shape.sites:
                    a = _lift(sub(g, s), 2)
                    for e in rule.env_shape.sites:
                        env_sites.add(add(a, e))
        region = Shape.of(sorted(env_sites))
        try:
            fibers: Iterable[Pattern] = _enumerate_admissible(Y, region, budget=budget)
            if env_cases is not None:
                fibers = islice(fibers, env_cases)
            for th in fibers:
                v = memory_set_check(ss.relative.fiber(th), A, C, margin=margin, budget=budget)
                checked += 1
                exact = exact and v.exact
                if v.outcome == REFUTED:
                    witness = dict(v.witness)
                    witness["environment"] = _pat_json(th)
                    return Verdict(REFUTED, witness, v.exact)
                if v.outcome == INCONCLUSIVE:
                    witness = {"fiber": _pat_json(th), **dict(v.witness)}
                    return Verdict(INCONCLUSIVE, witness, False)
        except BudgetExceeded:
            return Verdict(INCONCLUSIVE, {"budget": budget, "fibers_checked": checked}, False)
    return Verdict(VERIFIED, {"fibers_checked": checked}, exact)


# ---------------------------------------------------------------------------
# ratio identity and non-overlap


@dataclass(frozen=True)
class RatioReport:
    """Outcome of the two-pattern ratio identity test on a window."""

    max_deviation: float
    passed: bool
    tol: float
    contexts: tuple[tuple[Pattern, float], ...]
    excluded: tuple[tuple[Pattern, str], ...]

    def to_json(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "passed": self.passed,
            "tol": self.tol,
            "contexts": [
                {"context": c.serializable(), "deviation": d} for c, d in self.contexts
            ],
            "excluded": [
                {"context": c.serializable(), "reason": r} for c, r in self.excluded
            ],
        }


def meyerovitch_ratio_test(
    mu,
    phi: Interaction,
    u: Pattern,
    v: Pattern,
    rs: RelativeSystem,
    tol: float = 1e-9,
    radius: int = 1,
    min_count: int = 30,
    budget: int = 10_000_000,
) -> RatioReport:
    """Ratio identity on interchangeable pattern pairs: over every context
    charging both completions, the mass ratio must equal the Boltzmann
    factor of the energy difference, so mu(u on c) / mu(v on c) times
    exp(E(u on c) - E(v on c)) deviates from 1 by at most tol.

    The pair must be interchangeable in the fiber over each environment
    atom at the given radius; contexts under non-interchangeable atoms are
    excluded and reported, as are contexts charging only one completion
    and empirical contexts with fewer than min_count samples per
    completion. Raises ValueError when u and v differ in support or no
    context qualifies.
    """
    B = u.support
    if v.support != B:
        raise ValueError("ratio test patterns must share a support")
    if u == v:
        raise ValueError("ratio test patterns must differ")
    W = mu.window
    if not B <= W:
        raise ValueError("patterns must lie inside the measure window")
    ext = W - B
    empirical = isinstance(mu, EmpiricalMeasure)
    atoms = (((None, 1.0, dict(mu.counts)),) if empirical else mu.atoms)
    rows: list[tuple[Pattern, float]] = []
    excluded: list[tuple[Pattern, str]] = []
    for theta, w_atom, table in atoms:
        if not empirical and w_atom <= 0.0:
            continue
        if rs.rules:
            th = theta if theta is not None else Pattern.empty(rs.env.dim)
            spec: SubshiftSpec = rs.fiber(th)
        else:
            spec = rs.base
        verdict = interchangeable(u, v, spec, radius, budget)
        pair: dict[Pattern, dict[str, float]] = {}
        for x, m in table.items():
            xb = x.restrict(B)
            if xb == u:
                slot = "u"
            elif xb == v:
                slot = "v"
            else:
                continue
            c = x.restrict(ext)
            pair.setdefault(c, {"u": 0.0, "v": 0.0})[slot] += m
        for c in sorted(pair, key=lambda p: p.values):
            m_u, m_v = pair[c]["u"], pair[c]["v"]
            if not verdict.verified:
                excluded.append((c, f"pair not interchangeable ({verdict.outcome})"))
                continue
            if empirical and (m_u < min_count or m_v < min_count):
                excluded.append((c, "fewer than min_count samples on a completion"))
                continue
            if m_u <= 0.0 or m_v <= 0.0:
                excluded.append((c, "a completion carries no mass"))
                continue
            e_u, _ = conditional_energy_inf(phi, merge(u, c), B, theta)
            e_v, _ = conditional_energy_inf(phi, merge(v, c), B, theta)
            rows.append((c, abs(m_u / m_v * math.exp(e_u - e_v) - 1.0)))
    if not rows:
        raise ValueError("no context charges both completions")
    worst = max(d for _, d in rows)
    return RatioReport(worst, worst <= tol, tol, tuple(rows), tuple(excluded))


def nonoverlap_check(
    u: Pattern,
    v: Pattern,
    rs: RelativeSystem,
    radius: int = 1,
    budget: int = 10_000_000,
) -> Verdict:
    """Whether two translates at a nonzero offset of the difference set of
    the common support can both carry an occurrence of u or v.

    Every ordered choice of the two patterns is merged at every such
    offset; a compatible merge extendable to its radius dilation, jointly
    with some admissible environment window, refutes. When every candidate
    fails compatibility, admissibility, or extension, the patterns are
    non-overlapping; that verdict is exact, since each failure is
    conclusive on its own. Refuted verdicts inherit exactness from the
    fiber's tables on the extension window.
    """
    B = u.support
    if v.support != B:
        raise ValueError("patterns must share a support")
    offsets = [g for g in B.difference_set().sites if any(c != 0 for c in g)]
    named = (("u", u), ("v", v))
    tried = 0
    try:
        for g in offsets:
            for name1, p in named:
                for name2, q in named:
                    q2 = q.translate(g)
                    if not compatible(p, q2):
                        continue
                    z = merge(p, q2)
                    tried += 1
                    hit = _joint_extendable(rs, z, radius, budget)
                    if hit is None:
                        continue
                    theta, ext = hit
                    witness = {
                        "offset": list(g),
                        "first": name1,
                        "second": name2,
                        "configuration": _pat_json(ext),
                    }
                    if rs.rules:
                        witness["environment"] = _pat_json(theta)
                    exact = rs.fiber(theta).exact_at(ext.support, 0)
                    return Verdict(REFUTED, witness, exact)
    except BudgetExceeded:
        return Verdict(INCONCLUSIVE, {"budget": budget, "merges_tried": tried}, False)
    witness = {
        "support": B.serializable(),
        "offsets": len(offsets),
        "merges_tried": tried,
        "radius": radius,
    }
    return Verdict(VERIFIED, witness, True)


def _joint_extendable(
    rs: RelativeSystem, z: Pattern, radius: int, budget: int
) -> tuple[Pattern, Pattern] | None:
    """First (environment window, completed configuration) extending z on
    the radius dilation of its support, or None."""
    target = z.support.dilate(radius)
    env_sites: set[Site] = set()
    for rule in rs.rules:
        for g in target.sites:
            for s in rule.shape.sites:
                a = _lift(sub(g, s), rs.env.dim)
                for e in rule.env_shape.sites:
                    env_sites.add(add(a, e))
    if not env_sites:
        theta = Pattern.empty(rs.env.dim)
        ext = next(_enumerate_admissible(rs.fiber(theta), target, context=z, budget=budget), None)
        return None if ext is None else (theta, ext)
    region = Shape.of(sorted(env_sites))
    for theta in _enumerate_admissible(rs.env, region, budget=budget):
        ext = next(_enumerate_admissible(rs.fiber(theta), target, context=z, budget=budget), None)
        if ext is not None:
            return theta, ext
    return None


# ---------------------------------------------------------------------------
# finite-cycle presentations and the equilibrium search


def cyclic_window_spec(s: SubshiftSpec, n: int) -> OracleShift:
    """Finite-cycle presentation of a 1D spec: patterns inside [0, n) are
    checked together with their n-translate, so the constraints wrap
    around and the margin-0 language of [0, n) is exactly the admissible
    necklaces.

    Sites outside [0, n) are rejected. A safe symbol of the wrapped spec
    (or a full shift) certifies exact tables; interactions gain no wrap
    terms here, pair them with explicit long-shape terms when cycle
    energies are wanted.
    """
    if s.dim != 1:
        raise ValueError("cyclic windows are one-dimensional")
    if n < 2:
        raise ValueError("cycle length must be at least 2")

    def admissible(p: Pattern) -> bool:
        if any(not 0 <= g[0] < n for g in p.sites):
            return False
        return s.locally_admissible(merge(p, p.translate(n)))

    exact = s.safe_symbol is not None or isinstance(s, FullShift)
    return OracleShift(s.alphabet, 1, admissible, exact, f"cyclic_{n}")


@dataclass(frozen=True)
class EquilibriumResult:
    """Endpoint of the coordinate-ascent equilibrium search."""

    measure: WindowMeasure
    pressure: float
    steps: int
    stopped: str
    history: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "pressure": self.pressure,
            "steps": self.steps,
            "stopped": self.stopped,
            "history": list(self.history),
        }


def relative_equilibrium_search(
    rs: RelativeSystem,
    phi: Interaction,
    A: Shape,
    nu: EnvMarginal | None = None,
    family: Iterable[WindowMeasure] | None = None,
    gain_tol: float = 1e-10,
    budget: int = 1000,
    margin: int | None = None,
    enum_budget: int = 10_000_000,
) -> EquilibriumResult:
    """Maximize window entropy given the environment minus expected energy
    by cyclic single-site Gibbs kernel applications.

    Every site update replaces the conditional at that site, within each
    environment atom, by the Boltzmann conditional of the window-truncated
    energies, which never decreases the window pressure. Starting points
    are the family members (each must project onto nu); by default one
    member, uniform on the fiber language over each atom of nu, or over no
    environment when nu is omitted. Stops when a full pass over the sites
    gains less than gain_tol ("converged") or after budget site updates
    across the whole run ("budget"), and returns the best endpoint.
    """
    if family is not None:
        members = list(family)
        if not members:
            raise ValueError("empty starting family")
    else:
        members = [_uniform_member(rs, A, nu, margin, enum_budget)]
    results: list[EquilibriumResult] = []
    remaining = budget
    for mu in members:
        if mu.window != A:
            raise ValueError("family member lives on the wrong window")
        _check_projection(mu, nu)
        p = pressure_window(mu, phi, A)
        history = [p]
        steps = 0
        stopped = "budget"
        while remaining > 0:
            max_gain = 0.0
            for g in A.sites:
                if remaining <= 0:
                    break
                mu = _env_kernel_apply(rs, phi, Shape.of([g]), mu)
                q = pressure_window(mu, phi, A)
                max_gain = max(max_gain, q - p)
                p = q
                history.append(q)
                steps += 1
                remaining -= 1
            else:
                if max_gain < gain_tol:
                    stopped = "converged"
                    break
                continue
            break
        results.append(EquilibriumResult(mu, p, steps, stopped, tuple(history)))
    return max(results, key=lambda r: r.pressure)


def _uniform_member(
    rs: RelativeSystem,
    A: Shape,
    nu: EnvMarginal | None,
    margin: int | None,
    budget: int,
) -> WindowMeasure:
    """Uniform starting measure on the fiber language over each atom of
    nu (or over no environment)."""
    def uniform_table(spec: SubshiftSpec) -> dict[Pattern, float]:
        m = margin if margin is not None else (0 if spec.exact_at(A, 0) else 1)
        pats = list(spec.language(A, m, budget=budget))
        if not pats:
            raise InadmissibleContext("empty fiber language on the target window")
        return {p: 1.0 / len(pats) for p in pats}

    if nu is None:
        spec = rs.fiber(Pattern.empty(rs.env.dim)) if rs.rules else rs.base
        return WindowMeasure.from_table(A, uniform_table(spec))
    atoms = [
        (theta, w, uniform_table(rs.fiber(theta)))
        for theta, w in zip(nu.patterns, nu.probs)
    ]
    return WindowMeasure.from_env_atoms(A, atoms)


def _check_projection(mu: WindowMeasure, nu: EnvMarginal | None) -> None:
    """Family members must carry exactly the environment marginal."""
    if nu is None:
        return
    seen: dict[Pattern | None, float] = {}
    for theta, w, _ in mu.atoms:
        seen[theta] = seen.get(theta, 0.0) + w
    want = dict(zip(nu.patterns, nu.probs))
    if set(seen) != set(want) or any(abs(seen[k] - want[k]) > 1e-9 for k in want):
        raise ValueError("family member does not project onto the environment marginal")


def _env_kernel_apply(
    rs: RelativeSystem, phi: Interaction, S: Shape, mu: WindowMeasure
) -> WindowMeasure:
    """Resample S from its Boltzmann conditional within each environment
    atom. Unlike the plain kernel application this does not insist on the
    window covering the interaction range around S: the conditional of the
    window-truncated energies is exactly the per-context maximizer of the
    window pressure, so the ascent property survives truncation."""
    W = mu.window
    ext = W - S
    atoms = []
    for theta, w, table in mu.atoms:
        system = rs.fiber(theta) if theta is not None else (
            rs.fiber(Pattern.empty(rs.env.dim)) if rs.rules else rs.base
        )
        K = GibbsKernel.on_window(S, phi, system, W, theta)
        masses: dict[Pattern, float] = {}
        for x, p in table.items():
            c = x.restrict(ext)
            masses[c] = masses.get(c, 0.0) + p
        out: dict[Pattern, float] = {}
        for c, m in masses.items():
            if m <= 0.0:
                continue
            dist = K.conditional(c)
            partial = 0.0
            for i, (filling, q) in enumerate(zip(dist.outcomes, dist.probs)):
                if i + 1 == len(dist.outcomes):
                    val = m - partial
                else:
                    val = m * q
                    partial += val
                out[merge(filling, c)] = val
        atoms.append((theta, w, out))
    return WindowMeasure(W, tuple(atoms), mu.boundary)
