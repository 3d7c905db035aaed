"""Boltzmann distributions, partition functions, Gibbs kernels, sampling.

All partition sums run in the log domain through streaming log-sum-exp.
Kernels realize the conditional Boltzmann distribution on a finite window
with a certified truncation error; applying one to a window measure
replaces the conditional on the target set and preserves the exterior
marginal bit-exactly. The sampler performs heat-bath (exact conditional)
block updates over phase-partitioned sweeps with counter-based random
streams, so a run is reproducible from (seed, schedule) alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as _iproduct
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from gibbslab.lattice import Shape, Site, add, folner_box, sub
from gibbslab.symbolic import (
    Alphabet,
    BudgetExceeded,
    FullShift,
    Pattern,
    SFT,
    SubshiftSpec,
    _enumerate_admissible,
    merge,
)
from gibbslab.interaction import (
    Interaction,
    anchors_meeting,
    conditional_energy_inf,
    energy,
)
from gibbslab.measure import EnvMarginal, WindowMeasure, marginal


class InadmissibleContext(ValueError):
    """No admissible filling extends the given context."""


def _logsumexp(values: Iterable[float]) -> float:
    """Streaming log of the sum of exponentials; -inf on empty input."""
    m = -math.inf
    acc = 0.0
    for v in values:
        if v <= m:
            acc += math.exp(v - m)
        elif m == -math.inf:
            m, acc = v, 1.0
        else:
            acc = acc * math.exp(m - v) + 1.0
            m = v
    return m + math.log(acc) if acc > 0 else -math.inf


@dataclass(frozen=True)
class BoltzmannDist:
    """Normalized distribution p(a) proportional to exp(-U(a))."""

    outcomes: tuple
    probs: tuple[float, ...]
    logZ: float

    def prob(self, outcome) -> float:
        try:
            return self.probs[self.outcomes.index(outcome)]
        except ValueError:
            return 0.0

    def table(self) -> dict:
        return dict(zip(self.outcomes, self.probs))


def boltzmann(U: Mapping) -> BoltzmannDist:
    """Boltzmann distribution of an energy function on a finite set.

    The returned distribution maximizes H(p) - p(U) over the simplex, and
    the maximum value equals logZ.
    """
    if not U:
        raise ValueError("empty support")
    outcomes = tuple(U)
    energies = [float(U[a]) for a in outcomes]
    logZ = _logsumexp(-e for e in energies)
    raw = [math.exp(-e - logZ) for e in energies]
    s = math.fsum(raw)
    probs = tuple(r / s for r in raw)
    return BoltzmannDist(outcomes, probs, logZ)


def tv_distance(p: Mapping, q: Mapping) -> float:
    """Total variation in the l1 convention: the sum of absolute
    probability differences over the joint support."""
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def partition_conditional(
    phi: Interaction,
    context: Pattern,
    A: Shape,
    system: SubshiftSpec,
    theta: Pattern | None = None,
    budget: int = 10_000_000,
) -> tuple[float, float]:
    """Log partition function over admissible fillings of A given a fixed
    context, with energies truncated at the context window.

    Returns:
        (logZ, err): the log-sum-exp of the truncated conditional energies
        and the certified truncation radius; the untruncated logZ lies
        within err of the returned value.

    Raises:
        InadmissibleContext: no admissible filling of A extends context.
    """
    logs = []
    err = 0.0
    for u in _enumerate_admissible(system, A, context=context, budget=budget):
        x = merge(u, context)
        e, err = conditional_energy_inf(phi, x, A, theta)
        logs.append(-e)
    if not logs:
        raise InadmissibleContext(f"no admissible filling of {A.sites}")
    return _logsumexp(logs), err


def _essential_letters(adj: np.ndarray) -> np.ndarray:
    alive = np.ones(adj.shape[0], dtype=bool)
    changed = True
    while changed:
        changed = False
        for i in np.nonzero(alive)[0]:
            if not adj[i, alive].any() or not adj[alive, i].any():
                alive[i] = False
                changed = True
    return alive


def _transfer_free_logz(
    phi: Interaction, A: Shape, system: SubshiftSpec
) -> float | None:
    """Exact free-boundary log partition for 1D contiguous windows under
    nearest-neighbor rules, by log-domain transfer recursion. Returns None
    when the fast path does not apply."""
    if system.dim != 1 or phi.dim != 1 or phi.range > 1:
        return None
    if isinstance(system, SFT):
        # pair adjacency only captures rules of diameter at most one
        for f in system.forbidden:
            lo, hi = f.support.bounding_box()
            if hi[0] - lo[0] > 1:
                return None
    elif not isinstance(system, FullShift):
        return None
    lo, hi = A.bounding_box()
    if A.sites != Shape.interval(lo[0], hi[0]).sites:
        return None
    pair = system.language(Shape.interval(0, 1), margin=2)
    if not pair.exact:
        return None
    symbols = system.alphabet.symbols
    k = len(symbols)
    V = np.zeros(k)
    J = np.full((k, k), np.inf)
    adj = np.zeros((k, k), dtype=bool)
    for u in pair.patterns:
        adj[system.alphabet.index(u.values[0]), system.alphabet.index(u.values[1])] = True
    J[adj] = 0.0
    for t in phi.terms:
        if t.shape.sites == ((0,),):
            for i, a in enumerate(symbols):
                V[i] += t.evaluator((), (a,))
        elif t.shape.sites == ((0,), (1,)):
            for i, a in enumerate(symbols):
                for j, b in enumerate(symbols):
                    if adj[i, j]:
                        J[i, j] += t.evaluator((), (a, b))
        else:
            return None
    alive = _essential_letters(adj)
    if not alive.any():
        return None
    n = len(A)
    lw = np.where(alive, -V, -np.inf)
    for _ in range(n - 1):
        # lw'[b] = LSE_a(lw[a] - J[a,b]) - V[b], restricted to alive letters
        stacked = lw[:, None] - J
        m = stacked.max(axis=0)
        with np.errstate(invalid="ignore"):
            nxt = m + np.log(np.exp(stacked - m).sum(axis=0))
        nxt = np.where(np.isfinite(m), nxt, -np.inf) - V
        lw = np.where(alive, nxt, -np.inf)
    return float(_logsumexp(lw.tolist()))


def partition_free(
    phi: Interaction,
    A: Shape,
    system: SubshiftSpec,
    theta: Pattern | None = None,
    margin: int = 1,
    budget: int = 10_000_000,
) -> float:
    """Free-boundary log partition function: log-sum-exp of -E_A over the
    window language of A (interior terms only).

    1D contiguous windows under nearest-neighbor rules use an exact
    transfer recursion; everything else enumerates the margin-m language
    table, which for inexact tables can only overcount.
    """
    if theta is None:
        fast = _transfer_free_logz(phi, A, system)
        if fast is not None:
            return fast
    table = system.language(A, margin, theta=theta, budget=budget)
    logs = [-energy(phi, u, theta) for u in table]
    if not logs:
        raise InadmissibleContext(f"empty language on {A.sites}")
    return _logsumexp(logs)


@dataclass(frozen=True)
class GibbsKernel:
    """Conditional Boltzmann kernel on a target set, realized on a window.

    Args:
        A: target set being resampled.
        phi: interaction (inverse temperature absorbed).
        system: admissibility rules for fillings.
        window: realization window; contexts live on window minus A.
        theta: fixed environment pattern for relative interactions.
        err: certified truncation error of the conditional energies.
    """

    A: Shape
    phi: Interaction
    system: SubshiftSpec
    window: Shape
    theta: Pattern | None = None
    err: float = field(default=0.0, compare=False)

    @staticmethod
    def on_window(
        A: Shape,
        phi: Interaction,
        system: SubshiftSpec,
        window: Shape,
        theta: Pattern | None = None,
    ) -> "GibbsKernel":
        if not A <= window:
            raise ValueError("target set must lie inside the window")
        err = len(A) * phi.tail_bound
        inside = window._site_set
        for t in phi.terms:
            seen: set[Site] = set()
            for a in A.sites:
                for s in t.shape.sites:
                    g = sub(a, s)
                    if g in seen:
                        continue
                    seen.add(g)
                    sites = [add(g, s2) for s2 in t.shape.sites]
                    if any(q in A._site_set for q in sites) and not all(
                        q in inside for q in sites
                    ):
                        err += t.sup_norm
        return GibbsKernel(A, phi, system, window, theta, err)

    def conditional(self, context: Pattern, budget: int = 10_000_000) -> BoltzmannDist:
        """Boltzmann distribution over admissible fillings of A given the
        context on window minus A."""
        U: dict[Pattern, float] = {}
        for u in _enumerate_admissible(self.system, self.A, context=context, budget=budget):
            x = merge(u, context)
            e, _ = conditional_energy_inf(self.phi, x, self.A, self.theta)
            U[u] = e
        if not U:
            raise InadmissibleContext(f"no admissible filling of {self.A.sites}")
        return boltzmann(U)


def kernel_apply(K: GibbsKernel, mu: WindowMeasure) -> WindowMeasure:
    """Resample the target set from its Boltzmann conditional under every
    exterior context charged by the measure.

    The exterior marginal is preserved bit-exactly: within each context
    the last filling receives the residual mass, so re-marginalizing
    reproduces the context masses to the last bit.
    """
    W = mu.window
    if not K.A <= W or W != K.window:
        raise ValueError("kernel window must equal the measure window")
    if not K.A.dilate(K.phi.range) <= W:
        raise ValueError("window does not cover the interaction range around A")
    ext = W - K.A
    atoms = []
    for theta, w, table in mu.atoms:
        masses: dict[Pattern, float] = {}
        for u, p in table.items():
            c = u.restrict(ext)
            masses[c] = masses.get(c, 0.0) + p
        out: dict[Pattern, float] = {}
        for c, m in masses.items():
            if m <= 0.0:
                continue
            dist = K.conditional(c)
            partial = 0.0
            for i, (v, q) in enumerate(zip(dist.outcomes, dist.probs)):
                if i + 1 == len(dist.outcomes):
                    val = m - partial
                else:
                    val = m * q
                    partial += val
                out[merge(v, c)] = val
        atoms.append((theta, w, out))
    return WindowMeasure(W, tuple(atoms), mu.boundary)


@dataclass(frozen=True)
class GibbsReport:
    """Outcome of a conditional-distribution comparison on a window."""

    aggregate_tv: float
    passed: bool
    tol: float
    contexts: tuple[tuple[Pattern, float, float], ...]
    excluded: tuple[tuple[Pattern, int], ...]

    def to_json(self) -> dict:
        return {
            "aggregate_tv": self.aggregate_tv,
            "passed": self.passed,
            "tol": self.tol,
            "contexts": [
                {"context": c.serializable(), "weight": w, "tv": t}
                for c, w, t in self.contexts
            ],
            "excluded": [
                {"context": c.serializable(), "count": n} for c, n in self.excluded
            ],
        }


def gibbs_property_test(
    mu,
    phi: Interaction,
    A: Shape,
    system: SubshiftSpec,
    tol: float = 1e-9,
    min_count: int = 30,
) -> GibbsReport:
    """Compare the measure's conditionals on A against the Gibbs kernel.

    Accepts a WindowMeasure or an EmpiricalMeasure. Per charged exterior
    context the total-variation distance to the Boltzmann conditional is
    computed; the aggregate is the context-weight average. Empirical
    contexts with fewer than min_count samples are excluded and reported.
    """
    from gibbslab.measure import EmpiricalMeasure

    excluded: list[tuple[Pattern, int]] = []
    groups: list[tuple[Pattern | None, Pattern, float, dict[Pattern, float]]] = []
    if isinstance(mu, EmpiricalMeasure):
        W = mu.window
        ext = W - A
        ctx_counts: dict[Pattern, int] = {}
        ctx_tables: dict[Pattern, dict[Pattern, int]] = {}
        for u, n in mu.counts.items():
            c = u.restrict(ext)
            ctx_counts[c] = ctx_counts.get(c, 0) + n
            ctx_tables.setdefault(c, {})[u.restrict(A)] = (
                ctx_tables.setdefault(c, {}).get(u.restrict(A), 0) + n
            )
        for c, n in ctx_counts.items():
            if n < min_count:
                excluded.append((c, n))
                continue
            cond = {v: k / n for v, k in ctx_tables[c].items()}
            groups.append((None, c, n / mu.total, cond))
    else:
        W = mu.window
        ext = W - A
        for theta, w, table in mu.atoms:
            masses: dict[Pattern, float] = {}
            conds: dict[Pattern, dict[Pattern, float]] = {}
            for u, p in table.items():
                c = u.restrict(ext)
                masses[c] = masses.get(c, 0.0) + p
                conds.setdefault(c, {})[u.restrict(A)] = (
                    conds.setdefault(c, {}).get(u.restrict(A), 0.0) + p
                )
            for c, m in masses.items():
                if m <= 0.0:
                    continue
                groups.append(
                    (theta, c, w * m, {v: p / m for v, p in conds[c].items()})
                )
    K = GibbsKernel.on_window(A, phi, system, W, None)
    rows = []
    total_w = 0.0
    agg = 0.0
    for theta, c, w, cond in groups:
        kernel = K if theta is None else GibbsKernel.on_window(A, phi, system, W, theta)
        dist = kernel.conditional(c)
        t = tv_distance(cond, dist.table())
        rows.append((c, w, t))
        total_w += w
        agg += w * t
    aggregate = agg / total_w if total_w > 0 else 0.0
    return GibbsReport(
        aggregate, aggregate <= tol, tol, tuple(rows), tuple(excluded)
    )


def local_optimality_check(
    mu: WindowMeasure,
    phi: Interaction,
    A: Shape,
    system: SubshiftSpec,
) -> tuple[float, float, float]:
    """Conditional window pressure of A given its window complement, before
    and after one kernel application.

    Returns:
        (lhs, rhs, gap): lhs for mu, rhs for the resampled measure, and
        gap = rhs - lhs, which is nonnegative up to rounding and zero
        exactly when the kernel fixes mu on this window.
    """
    from gibbslab.measure import conditional_pressure

    K = GibbsKernel.on_window(A, phi, system, mu.window)
    lhs = conditional_pressure(mu, phi, A, mu.window - A)
    rhs = conditional_pressure(kernel_apply(K, mu), phi, A, mu.window - A)
    return lhs, rhs, rhs - lhs


def feller_locality_check(
    system: SubshiftSpec,
    phi: Interaction,
    A: Shape,
    p: Pattern,
    B: Shape,
    trials: int = 50,
    window: Shape | None = None,
    seed: int = 0,
    budget: int = 10_000_000,
) -> float:
    """Max deviation of the kernel probability of a target pattern across
    context pairs that agree on the memory window B minus A.

    For finite-range interactions with B containing the range-dilation of
    A, the deviation is bounded by the truncation error (zero when the
    constraint diameter is also covered).
    """
    W = window if window is not None else B.dilate(max(phi.range, 1))
    if not (A <= B and B <= W):
        raise ValueError("need A inside B inside the window")
    ext = W - A
    K = GibbsKernel.on_window(A, phi, system, W)
    by_core: dict[Pattern, list[Pattern]] = {}
    count = 0
    for c in _enumerate_admissible(system, ext, budget=budget):
        by_core.setdefault(c.restrict(B - A), []).append(c)
        count += 1
        if count >= 4 * trials:
            break
    rng = np.random.default_rng(seed)
    worst = 0.0
    for core, ctxs in by_core.items():
        if len(ctxs) < 2:
            continue
        pairs = min(trials, len(ctxs) * (len(ctxs) - 1) // 2)
        for _ in range(pairs):
            i, j = rng.integers(0, len(ctxs), size=2)
            if i == j:
                continue
            try:
                qa = K.conditional(ctxs[i]).prob(p)
                qb = K.conditional(ctxs[j]).prob(p)
            except InadmissibleContext:
                continue
            worst = max(worst, abs(qa - qb))
    return worst


def free_energy_series(
    system: SubshiftSpec,
    phi: Interaction,
    ns: Iterable[int],
    nu: EnvMarginal | None = None,
    dim: int = 1,
    margin: int = 1,
    budget: int = 10_000_000,
) -> list[tuple[int, int, float]]:
    """Env-averaged free-boundary log partition functions on centered
    boxes: rows (n, box size, average of log Z over env atoms)."""
    out = []
    for n in ns:
        f = folner_box(n, dim)
        if nu is None:
            val = partition_free(phi, f, system, None, margin, budget)
        else:
            val = sum(
                p * partition_free(phi, f, system, th, margin, budget)
                for th, p in zip(nu.patterns, nu.probs)
            )
        out.append((n, len(f), val))
    return out


def variational_pressure_estimate(
    system: SubshiftSpec,
    phi: Interaction,
    nu: EnvMarginal | None,
    ns: Iterable[int],
    dim: int = 1,
    margin: int = 1,
    budget: int = 10_000_000,
) -> list[tuple[int, float]]:
    """Per-site free-energy sequence: rows (n, avg log Z_{F_n} / |F_n|)."""
    return [
        (n, val / size)
        for n, size, val in free_energy_series(system, phi, ns, nu, dim, margin, budget)
    ]


def stolz_differences(series: list[tuple[int, int, float]]) -> list[tuple[int, float]]:
    """Consecutive difference quotients (logZ_n - logZ_m)/(size_n - size_m)
    of a free-energy series; converges to the per-site limit whenever the
    plain quotient does, and typically much faster."""
    out = []
    for (m, sm, vm), (n, sn, vn) in zip(series, series[1:]):
        if sn == sm:
            raise ValueError("series must have strictly growing windows")
        out.append((n, (vn - vm) / (sn - sm)))
    return out


def empirical_from_frames(frames: np.ndarray, W: Shape, alphabet: Alphabet):
    """Empirical window measure from torus frames: every cyclic translate
    of W in every frame contributes one observation.

    Args:
        frames: integer index array of shape (k, *dims).
    """
    from gibbslab.measure import empirical_from_samples

    frames = np.asarray(frames)
    dims = frames.shape[1:]
    if len(dims) != W.dim:
        raise ValueError("frame dimensions do not match the window")
    anchors = np.indices(dims).reshape(len(dims), -1).T
    offs = np.array(W.sites, dtype=np.int64)
    pos = (anchors[:, None, :] + offs[None, :, :]) % np.array(dims)
    lin = np.ravel_multi_index(np.moveaxis(pos, -1, 0), dims)
    obs = frames.reshape(frames.shape[0], -1)[:, lin]
    return empirical_from_samples(
        obs.reshape(-1, len(W)).astype(np.int64), W, alphabet
    )


# ---------------------------------------------------------------------------
# Heat-bath sampler


@dataclass(frozen=True)
class FiberRule:
    """Environment-coupled local admissibility rule.

    test receives (env values, x values) in sorted site order and returns
    True when the joint assignment is allowed at that translate.
    """

    shape: Shape
    env_shape: Shape
    test: Callable[[tuple, tuple], bool]


@dataclass(frozen=True)
class SamplerConfig:
    """Heat-bath run description.

    Args:
        dims: torus side lengths, one per lattice dimension.
        sweeps: full update passes over the domain.
        burn: sweeps discarded before the first emitted frame.
        thin: sweeps between emitted frames.
        schedule: "delone" (phase-partitioned independent updates) or
            "site" (sequential raster scan).
        block: resample this shape's translates instead of single sites
            (delone schedule only); every translate is scheduled once per
            sweep, grouped into non-interfering phases.
        seed: random stream key; identical (seed, schedule) runs produce
            identical frames regardless of execution interleaving.
    """

    dims: tuple[int, ...]
    sweeps: int
    seed: int
    burn: int = 0
    thin: int = 1
    schedule: str = "delone"
    block: Shape | None = None


def _forbidden_templates(
    system: SubshiftSpec,
    fiber_rules: tuple[FiberRule, ...],
    alphabet: Alphabet,
    env_alphabet: Alphabet | None,
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray | None]]:
    """Compile local rules to forbidden joint templates:
    (x offsets, x index values, env offsets or None, env index values)."""
    out = []
    if isinstance(system, SFT):
        for f in system.forbidden:
            offs = np.array(f.sites, dtype=np.int64)
            vals = np.array([alphabet.index(v) for v in f.values], dtype=np.int64)
            out.append((offs, vals, None, None))
    elif not isinstance(system, FullShift):
        raise ValueError("sampler needs finite-range rules (SFT or full shift)")
    for rule in fiber_rules:
        if env_alphabet is None:
            raise ValueError("fiber rules need an environment alphabet")
        e_offs = np.array(rule.env_shape.sites, dtype=np.int64)
        x_offs = np.array(rule.shape.sites, dtype=np.int64)
        for ev in _iproduct(range(len(env_alphabet)), repeat=len(rule.env_shape)):
            evs = tuple(env_alphabet.symbols[i] for i in ev)
            for xv in _iproduct(range(len(alphabet)), repeat=len(rule.shape)):
                xs = tuple(alphabet.symbols[i] for i in xv)
                if not rule.test(evs, xs):
                    out.append(
                        (
                            x_offs,
                            np.array(xv, dtype=np.int64),
                            e_offs,
                            np.array(ev, dtype=np.int64),
                        )
                    )
    return out


def _term_tables(
    phi: Interaction, alphabet: Alphabet, env_alphabet: Alphabet | None
) -> list[tuple[np.ndarray, np.ndarray | None, np.ndarray]]:
    """Precompute each term as (x offsets, env offsets or None, dense value
    table indexed by env indices then x indices)."""
    out = []
    for t in phi.terms:
        x_offs = np.array(t.shape.sites, dtype=np.int64)
        if t.env_shape is not None and t.env_shape.sites:
            e_offs = np.array(t.env_shape.sites, dtype=np.int64)
            qe = len(env_alphabet)
            dims = (qe,) * len(t.env_shape) + (len(alphabet),) * len(t.shape)
            tab = np.zeros(dims)
            for ev in _iproduct(range(qe), repeat=len(t.env_shape)):
                evs = tuple(env_alphabet.symbols[i] for i in ev)
                for xv in _iproduct(range(len(alphabet)), repeat=len(t.shape)):
                    xs = tuple(alphabet.symbols[i] for i in xv)
                    tab[ev + xv] = t.evaluator(evs, xs)
        else:
            e_offs = None
            dims = (len(alphabet),) * len(t.shape)
            tab = np.zeros(dims)
            for xv in _iproduct(range(len(alphabet)), repeat=len(t.shape)):
                xs = tuple(alphabet.symbols[i] for i in xv)
                tab[xv] = t.evaluator((), xs)
        out.append((x_offs, e_offs, tab))
    return out


def _rule_radius(system: SubshiftSpec, fiber_rules: tuple[FiberRule, ...]) -> int:
    r = 0
    if isinstance(system, SFT):
        for f in system.forbidden:
            lo, hi = f.support.bounding_box()
            r = max(r, max(h - l for l, h in zip(lo, hi)))
    for rule in fiber_rules:
        if rule.shape.sites:
            lo, hi = rule.shape.bounding_box()
            r = max(r, max(h - l for l, h in zip(lo, hi)))
    return r


def _phase_partition(dims: tuple[int, ...], radius: int) -> list[np.ndarray]:
    """Greedy coloring of torus sites so same-phase sites are farther than
    the interference radius apart (exact near wrap seams)."""
    if radius == 0:
        all_sites = np.indices(dims).reshape(len(dims), -1).T
        return [all_sites]
    spacing = radius + 1
    grids = np.indices(dims)
    coords = grids.reshape(len(dims), -1).T
    base = np.zeros(len(coords), dtype=np.int64)
    mult = 1
    for axis in range(len(dims)):
        base += (coords[:, axis] % spacing) * mult
        mult *= spacing
    phases: dict[int, list[np.ndarray]] = {}
    wrap_risky = any(d % spacing != 0 for d in dims)
    if not wrap_risky:
        for idx in range(len(coords)):
            phases.setdefault(int(base[idx]), []).append(coords[idx])
        return [np.array(v, dtype=np.int64) for _, v in sorted(phases.items())]
    # wrap seams can join two sites of equal residue; color greedily
    colors: dict[tuple, int] = {}
    order = [tuple(c) for c in coords]
    occupied: dict[int, set] = {}
    for site in order:
        c = 0
        while True:
            ok = True
            for other in occupied.get(c, ()):
                if all(
                    min((a - b) % d, (b - a) % d) <= radius
                    for a, b, d in zip(site, other, dims)
                ):
                    ok = False
                    break
            if ok:
                break
            c += 1
        colors[site] = c
        occupied.setdefault(c, set()).add(site)
    out: dict[int, list] = {}
    for site, c in colors.items():
        out.setdefault(c, []).append(site)
    return [np.array(sorted(v), dtype=np.int64) for _, v in sorted(out.items())]


def greedy_fill(
    system: SubshiftSpec,
    dims: tuple[int, ...],
    fiber_rules: tuple[FiberRule, ...] = (),
    env: np.ndarray | None = None,
    env_alphabet: Alphabet | None = None,
    budget: int = 1_000_000,
) -> np.ndarray:
    """Admissible initial configuration on the torus by canonical-order
    backtracking with a step budget.

    Returns:
        Integer array of alphabet indices with the torus dimensions.

    Raises:
        BudgetExceeded: no admissible configuration found in budget steps.
    """
    templates = _forbidden_templates(
        system, fiber_rules, system.alphabet, env_alphabet
    )
    cfg = np.full(dims, -1, dtype=np.int64)
    sites = [tuple(s) for s in np.indices(dims).reshape(len(dims), -1).T]
    q = len(system.alphabet)
    steps = 0

    def violates_at(site: tuple) -> bool:
        # check every template translate that covers the newly set site
        for x_offs, x_vals, e_offs, e_vals in templates:
            for k in range(len(x_offs)):
                anchor = np.array(site) - x_offs[k]
                pos = (anchor + x_offs) % np.array(dims)
                vals = cfg[tuple(pos.T)]
                if np.any(vals < 0):
                    continue
                if not np.array_equal(vals, x_vals):
                    continue
                if e_offs is None:
                    return True
                epos = (anchor + e_offs) % np.array(dims)
                if np.array_equal(env[tuple(epos.T)], e_vals):
                    return True
        return False

    def fill(i: int) -> bool:
        nonlocal steps
        if i == len(sites):
            return True
        site = sites[i]
        for a in range(q):
            steps += 1
            if steps > budget:
                raise BudgetExceeded("initial fill budget exhausted")
            cfg[site] = a
            if not violates_at(site) and fill(i + 1):
                return True
        cfg[site] = -1
        return False

    if not fill(0):
        raise InadmissibleContext("no admissible configuration on this torus")
    return cfg


def _site_conditional_energies(
    cfg: np.ndarray,
    env: np.ndarray | None,
    sites: np.ndarray,
    tables: list,
    q: int,
    dims: np.ndarray,
) -> np.ndarray:
    """Energies E[s, a] of setting each listed site to each symbol: the sum
    of all term translates through the site, other sites read from cfg."""
    n = len(sites)
    E = np.zeros((n, q))
    flat = cfg.reshape(-1)
    for x_offs, e_offs, tab in tables:
        for k in range(len(x_offs)):
            anchor = sites - x_offs[k]
            idx_axes = []
            for j in range(len(x_offs)):
                if j == k:
                    idx_axes.append(None)
                else:
                    pos = (anchor + x_offs[j]) % dims
                    lin = np.ravel_multi_index(pos.T, tuple(dims))
                    idx_axes.append(flat[lin])
            if e_offs is not None:
                epos_idx = []
                for j in range(len(e_offs)):
                    pos = (anchor + e_offs[j]) % dims
                    lin = np.ravel_multi_index(pos.T, tuple(dims))
                    epos_idx.append(env.reshape(-1)[lin])
                head = tuple(epos_idx)
            else:
                head = ()
            for a in range(q):
                sel = tuple(
                    np.full(n, a, dtype=np.int64) if ax is None else ax
                    for ax in idx_axes
                )
                E[:, a] += tab[head + sel]
    return E


def _site_admissible(
    cfg: np.ndarray,
    env: np.ndarray | None,
    sites: np.ndarray,
    templates: list,
    q: int,
    dims: np.ndarray,
) -> np.ndarray:
    """Mask M[s, a]: setting site s to symbol a completes no forbidden
    template (all other template sites read from cfg)."""
    n = len(sites)
    M = np.ones((n, q), dtype=bool)
    flat = cfg.reshape(-1)
    eflat = env.reshape(-1) if env is not None else None
    for x_offs, x_vals, e_offs, e_vals in templates:
        for k in range(len(x_offs)):
            anchor = sites - x_offs[k]
            others = np.ones(n, dtype=bool)
            for j in range(len(x_offs)):
                if j == k:
                    continue
                pos = (anchor + x_offs[j]) % dims
                lin = np.ravel_multi_index(pos.T, tuple(dims))
                others &= flat[lin] == x_vals[j]
            if e_offs is not None:
                for j in range(len(e_offs)):
                    pos = (anchor + e_offs[j]) % dims
                    lin = np.ravel_multi_index(pos.T, tuple(dims))
                    others &= eflat[lin] == e_vals[j]
            M[others, x_vals[k]] = False
    return M


def sample_frames(
    system: SubshiftSpec,
    phi: Interaction,
    config: SamplerConfig,
    fiber_rules: tuple[FiberRule, ...] = (),
    env: np.ndarray | None = None,
    init: np.ndarray | None = None,
) -> Iterator[np.ndarray]:
    """Heat-bath sampling on a torus; yields configuration frames.

    Each sweep resamples every site once from its exact single-site
    Boltzmann conditional. Under the delone schedule the sweep is split
    into phases of pairwise non-interfering sites updated together; the
    random stream of a phase is a counter-based generator keyed by
    (seed, sweep, phase), so results are independent of execution order.
    The site schedule is a sequential raster scan with one stream per
    (seed, sweep) pair.

    Args:
        env: environment index array (torus dims) for relative systems.
        init: starting configuration of alphabet indices; greedy-filled
            when omitted.

    Yields:
        Copies of the configuration after burn, every thin sweeps.
    """
    dims = np.array(config.dims, dtype=np.int64)
    if system.dim != len(config.dims) or phi.dim != len(config.dims):
        raise ValueError("dimension mismatch between system and torus")
    q = len(system.alphabet)
    env_alpha = phi.env_alphabet
    if fiber_rules and env is None:
        raise ValueError("fiber rules require an environment array")
    templates = _forbidden_templates(system, fiber_rules, system.alphabet, env_alpha)
    tables = _term_tables(phi, system.alphabet, env_alpha)
    radius = max(phi.range, _rule_radius(system, fiber_rules))
    min_dim = int(dims.min())
    if radius > 0 and min_dim <= 2 * radius:
        raise ValueError("torus too small for the interaction radius")
    if init is None:
        cfg = greedy_fill(system, config.dims, fiber_rules, env, env_alpha)
    else:
        cfg = np.array(init, dtype=np.int64)
        if cfg.shape != tuple(config.dims):
            raise ValueError("initial configuration has wrong dimensions")
    if config.block is not None:
        if config.schedule != "delone":
            raise ValueError("block updates require the delone schedule")
        yield from _block_sweeps(
            system, cfg, env, config, templates, tables, radius, q, dims
        )
        return
    if config.schedule == "delone":
        phases = _phase_partition(config.dims, radius)
    elif config.schedule == "site":
        all_sites = np.indices(config.dims).reshape(len(config.dims), -1).T
        phases = [row[None, :] for row in all_sites]
    else:
        raise ValueError(f"unknown schedule {config.schedule!r}")

    key = np.array([config.seed % (2**64), 0], dtype=np.uint64)
    for sweep in range(config.sweeps):
        for ph, sites in enumerate(phases):
            # varying indices sit in the high counter words so that the
            # within-stream increments of the low words cannot collide
            ctr = np.array([0, 0, ph, sweep], dtype=np.uint64)
            rng = np.random.Generator(np.random.Philox(key=key, counter=ctr))
            E = _site_conditional_energies(cfg, env, sites, tables, q, dims)
            M = _site_admissible(cfg, env, sites, templates, q, dims)
            logits = np.where(M, -E, -np.inf)
            mx = logits.max(axis=1, keepdims=True)
            if not np.isfinite(mx).all():
                raise InadmissibleContext("site with no admissible symbol")
            w = np.exp(logits - mx)
            cum = np.cumsum(w, axis=1)
            u = rng.random(len(sites)) * cum[:, -1]
            choice = (u[:, None] >= cum).sum(axis=1)
            flat = np.ravel_multi_index(sites.T, tuple(dims))
            cfg.reshape(-1)[flat] = choice
        if sweep + 1 > config.burn and (sweep + 1 - config.burn) % config.thin == 0:
            yield cfg.copy()


def _block_sweeps(
    system: SubshiftSpec,
    cfg: np.ndarray,
    env: np.ndarray | None,
    config: SamplerConfig,
    templates: list,
    tables: list,
    radius: int,
    q: int,
    dims: np.ndarray,
) -> Iterator[np.ndarray]:
    """Heat-bath over every torus translate of the block shape, grouped
    into phases of non-interfering blocks."""
    P = config.block
    conflicts = set()
    for p1 in P.sites:
        for p2 in P.sites:
            for e in Shape.ball(radius, len(config.dims)).sites:
                d = tuple((a - b + c) % m for a, b, c, m in zip(p1, p2, e, config.dims))
                conflicts.add(d)
    anchors = [tuple(s) for s in np.indices(config.dims).reshape(len(config.dims), -1).T]
    occupied: list[set] = []
    phases: list[list[tuple]] = []
    for g in anchors:
        c = 0
        while c < len(phases) and any(
            tuple((a - d) % m for a, d, m in zip(g, off, config.dims)) in occupied[c]
            for off in conflicts
        ):
            c += 1
        if c == len(phases):
            phases.append([])
            occupied.append(set())
        phases[c].append(g)
        occupied[c].add(g)
    candidates = list(_iproduct(range(q), repeat=len(P)))
    key = np.array([config.seed % (2**64), 0], dtype=np.uint64)
    eflat = env.reshape(-1) if env is not None else None
    flat = cfg.reshape(-1)
    dims_t = tuple(config.dims)

    def value_at(site: tuple, block_sites: dict) -> int:
        v = block_sites.get(site)
        return v if v is not None else int(flat[np.ravel_multi_index(site, dims_t)])

    for sweep in range(config.sweeps):
        for ph, blocks in enumerate(phases):
            for b, g in enumerate(blocks):
                sites = [
                    tuple((a + p) % m for a, p, m in zip(g, off, config.dims))
                    for off in P.sites
                ]
                logits = []
                ok_cands = []
                for cand in candidates:
                    assign = dict(zip(sites, cand))
                    viol = False
                    for x_offs, x_vals, e_offs, e_vals in templates:
                        if viol:
                            break
                        anch = {
                            tuple(
                                (s[i] - x_offs[k][i]) % config.dims[i]
                                for i in range(len(config.dims))
                            )
                            for s in sites
                            for k in range(len(x_offs))
                        }
                        for a0 in anch:
                            hit = all(
                                value_at(
                                    tuple(
                                        (a0[i] + x_offs[j][i]) % config.dims[i]
                                        for i in range(len(config.dims))
                                    ),
                                    assign,
                                )
                                == x_vals[j]
                                for j in range(len(x_offs))
                            )
                            if hit and e_offs is not None:
                                hit = all(
                                    eflat[
                                        np.ravel_multi_index(
                                            tuple(
                                                (a0[i] + e_offs[j][i]) % config.dims[i]
                                                for i in range(len(config.dims))
                                            ),
                                            dims_t,
                                        )
                                    ]
                                    == e_vals[j]
                                    for j in range(len(e_offs))
                                )
                            if hit:
                                viol = True
                                break
                    if viol:
                        continue
                    en = 0.0
                    for x_offs, e_offs, tab in tables:
                        anch = {
                            tuple(
                                (s[i] - x_offs[k][i]) % config.dims[i]
                                for i in range(len(config.dims))
                            )
                            for s in sites
                            for k in range(len(x_offs))
                        }
                        for a0 in anch:
                            idx = tuple(
                                value_at(
                                    tuple(
                                        (a0[i] + x_offs[j][i]) % config.dims[i]
                                        for i in range(len(config.dims))
                                    ),
                                    assign,
                                )
                                for j in range(len(x_offs))
                            )
                            if e_offs is not None:
                                eidx = tuple(
                                    int(
                                        eflat[
                                            np.ravel_multi_index(
                                                tuple(
                                                    (a0[i] + e_offs[j][i])
                                                    % config.dims[i]
                                                    for i in range(len(config.dims))
                                                ),
                                                dims_t,
                                            )
                                        ]
                                    )
                                    for j in range(len(e_offs))
                                )
                                en += tab[eidx + idx]
                            else:
                                en += tab[idx]
                    logits.append(-en)
                    ok_cands.append(cand)
                if not ok_cands:
                    raise InadmissibleContext("block with no admissible filling")
                lz = _logsumexp(logits)
                probs = [math.exp(l - lz) for l in logits]
                ctr = np.array([0, b, ph, sweep], dtype=np.uint64)
                rng = np.random.Generator(np.random.Philox(key=key, counter=ctr))
                u = rng.random()
                acc = 0.0
                pick = ok_cands[-1]
                for cand, p in zip(ok_cands, probs):
                    acc += p
                    if u < acc:
                        pick = cand
                        break
                for s, v in zip(sites, pick):
                    flat[np.ravel_multi_index(s, dims_t)] = v
        if sweep + 1 > config.burn and (sweep + 1 - config.burn) % config.thin == 0:
            yield cfg.copy()
