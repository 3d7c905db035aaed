"""Finite-window probability measures, entropies, and pressures.

A window measure is a finite mixture over environment atoms: each atom
pairs an environment pattern (or none) with a conditional probability
table over patterns on the window. Entropies condition on the environment
by averaging per-atom Shannon entropies; pressures subtract expected
energies. The transfer-matrix oracle supplies exact 1D nearest-neighbor
pressures and their Markov equilibrium measures.

Conventions: natural logarithms, 0 log 0 = 0, probabilities below 1e-300
treated as zero, dense tables capped at 2^28 entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iproduct
from typing import Callable, Iterable, Mapping

import numpy as np

from gibbslab.lattice import Shape, folner_box
from gibbslab.symbolic import Alphabet, Pattern, SubshiftSpec
from gibbslab.interaction import Interaction, conditional_energy, energy

_PROB_FLOOR = 1e-300
_DENSE_CAP = 2**28

Atom = tuple[Pattern | None, float, dict[Pattern, float]]


def _entropy_of(table: Mapping[Pattern, float]) -> float:
    total = 0.0
    for p in table.values():
        if p > _PROB_FLOOR:
            total -= p * np.log(p)
    return float(total)


@dataclass(frozen=True)
class WindowMeasure:
    """Probability measure on patterns over a finite window.

    Args:
        window: common support of all table patterns.
        atoms: mixture components (env pattern or None, weight, table);
            weights sum to 1, each table sums to 1.
        boundary: provenance descriptor ("free", ("periodic", dims), a
            fixed boundary Pattern, or "env"); not used in arithmetic.
    """

    window: Shape
    atoms: tuple[Atom, ...]
    boundary: object = "free"

    @staticmethod
    def from_table(
        window: Shape, table: Mapping[Pattern, float], boundary: object = "free"
    ) -> "WindowMeasure":
        return WindowMeasure(window, ((None, 1.0, dict(table)),), boundary)

    @staticmethod
    def from_env_atoms(
        window: Shape,
        atoms: Iterable[tuple[Pattern | None, float, Mapping[Pattern, float]]],
    ) -> "WindowMeasure":
        packed = tuple((th, float(w), dict(t)) for th, w, t in atoms)
        return WindowMeasure(window, packed, "env")

    def simple_table(self) -> dict[Pattern, float]:
        """The table of a single-atom measure."""
        if len(self.atoms) != 1:
            raise ValueError("measure has several environment atoms")
        return self.atoms[0][2]

    def validate(
        self, spec: SubshiftSpec | None = None, tol: float = 1e-12
    ) -> None:
        """Check weights and tables sum to 1 within tol, probabilities are
        nonnegative, supports lie on the window, and (when a spec is
        given) supported patterns are locally admissible."""
        if abs(sum(w for _, w, _ in self.atoms) - 1.0) > tol:
            raise ValueError("atom weights do not sum to 1")
        for theta, w, table in self.atoms:
            if w < -tol:
                raise ValueError("negative atom weight")
            s = 0.0
            for u, p in table.items():
                if p < -tol:
                    raise ValueError(f"negative probability at {u.values}")
                if u.support != self.window:
                    raise ValueError("table pattern off the window")
                s += p
                if spec is not None and p > _PROB_FLOOR:
                    joint = u if theta is None else Pattern.of(
                        dict(list(u.items()) + list(theta.items()))
                    )
                    if not spec.locally_admissible(joint):
                        raise ValueError(f"support leaves the language: {u.values}")
            if abs(s - 1.0) > tol:
                raise ValueError("table probabilities do not sum to 1")


def marginal(mu: WindowMeasure, A: Shape) -> WindowMeasure:
    """Pushforward onto the sub-window A, atom by atom."""
    if not A <= mu.window:
        raise ValueError("marginal window must lie inside the measure window")
    atoms = []
    for theta, w, table in mu.atoms:
        out: dict[Pattern, float] = {}
        for u, p in table.items():
            v = u.restrict(A)
            out[v] = out.get(v, 0.0) + p
        atoms.append((theta, w, out))
    return WindowMeasure(A, tuple(atoms), mu.boundary)


def condition(mu: WindowMeasure, B: Shape, b: Pattern) -> WindowMeasure:
    """Condition on the event x|B = b; errors on zero-probability context."""
    if not B <= mu.window:
        raise ValueError("conditioning window must lie inside the measure window")
    atoms = []
    mass = 0.0
    for theta, w, table in mu.atoms:
        hit = {u: p for u, p in table.items() if u.restrict(B) == b}
        z = sum(hit.values())
        if z > _PROB_FLOOR:
            atoms.append((theta, w * z, {u: p / z for u, p in hit.items()}))
            mass += w * z
    if mass <= _PROB_FLOOR:
        raise ValueError("conditioning event has probability zero")
    return WindowMeasure(
        mu.window, tuple((th, w / mass, t) for th, w, t in atoms), mu.boundary
    )


def expect(mu: WindowMeasure, f: Callable[[Pattern, Pattern | None], float]) -> float:
    total = 0.0
    for theta, w, table in mu.atoms:
        for u, p in table.items():
            if p > _PROB_FLOOR:
                total += w * p * f(u, theta)
    return total


def mix(mu: WindowMeasure, nu: WindowMeasure, t: float = 0.5) -> WindowMeasure:
    """Convex combination t mu + (1-t) nu; atoms are matched by their
    environment patterns, which must agree with equal weights."""
    if mu.window != nu.window:
        raise ValueError("mixture requires a common window")
    by_env = {th: (w, table) for th, w, table in nu.atoms}
    atoms = []
    for theta, w, table in mu.atoms:
        w2, table2 = by_env[theta]
        if abs(w - w2) > 1e-12:
            raise ValueError("mixture requires matching environment marginals")
        out = dict(table)
        for u, p in table2.items():
            out[u] = t * out.get(u, 0.0) + (1 - t) * p
        for u in list(out):
            if u not in table2:
                out[u] = t * out[u]
        atoms.append((theta, w, out))
    return WindowMeasure(mu.window, tuple(atoms), mu.boundary)


def point_mass(u: Pattern) -> WindowMeasure:
    return WindowMeasure.from_table(u.support, {u: 1.0})


def product_measure(weights: Mapping, A: Shape) -> WindowMeasure:
    """Product measure with the given single-site distribution on A."""
    symbols = list(weights)
    if len(symbols) ** len(A) > _DENSE_CAP:
        raise ValueError("window too large for a dense table")
    table: dict[Pattern, float] = {}
    for values in _iproduct(symbols, repeat=len(A)):
        p = 1.0
        for v in values:
            p *= weights[v]
        if p > _PROB_FLOOR:
            table[Pattern(A.sites, tuple(values))] = p
    return WindowMeasure.from_table(A, table)


def uniform_measure(
    spec: SubshiftSpec, A: Shape, margin: int = 1, budget: int = 10_000_000
) -> WindowMeasure:
    """Uniform measure on the margin-m window language of A."""
    if len(spec.alphabet) ** len(A) > _DENSE_CAP:
        raise ValueError("window too large for a dense table")
    pats = list(spec.language(A, margin, budget=budget))
    if not pats:
        raise ValueError("empty language")
    w = 1.0 / len(pats)
    return WindowMeasure.from_table(A, {u: w for u in pats})


def entropy(mu: WindowMeasure, A: Shape | None = None) -> float:
    """Shannon entropy of the A-marginal given the environment: the
    average over atoms of the per-atom marginal entropies."""
    m = mu if A is None or A == mu.window else marginal(mu, A)
    return sum(w * _entropy_of(table) for _, w, table in m.atoms)


def conditional_entropy(mu: WindowMeasure, A: Shape, B: Shape) -> float:
    """H(A-marginal | B-marginal and environment) = H(A u B) - H(B)."""
    m = marginal(mu, A | B) if (A | B) != mu.window else mu
    return entropy(m, A | B) - entropy(m, B)


def expected_energy(mu: WindowMeasure, phi: Interaction, A: Shape) -> float:
    return expect(mu, lambda u, th: energy(phi, u.restrict(A), th))


def pressure_window(mu: WindowMeasure, phi: Interaction, A: Shape) -> float:
    """Window pressure: entropy of the A-marginal given the environment
    minus the expected energy content of A. Depends on the measure only
    through its A-marginal and environment atoms, bit-exactly."""
    m = marginal(mu, A) if A != mu.window else mu
    return entropy(m, A) - expected_energy(m, phi, A)


def conditional_pressure(
    mu: WindowMeasure, phi: Interaction, A: Shape, B: Shape
) -> float:
    """Conditional window pressure: H(A | B, env) - E[E_{A|B}]. Satisfies
    the chain rule and equals pressure_window(A u B) - pressure_window(B).
    Depends on the measure only through its (A u B)-marginal, bit-exactly."""
    m = marginal(mu, A | B) if (A | B) != mu.window else mu
    de = conditional_entropy(m, A, B)
    ee = expect(m, lambda u, th: conditional_energy(phi, u, A, B, th))
    return de - ee


def pressure_per_site_estimate(
    family: Callable[[Shape], WindowMeasure],
    phi: Interaction,
    ns: Iterable[int],
    dim: int = 1,
) -> list[tuple[int, float]]:
    """Window pressures per site along the centered-box sequence.

    Args:
        family: maps a box shape to the window measure on it.

    Returns:
        Pairs (n, pressure of the n-box divided by its site count).
    """
    out = []
    for n in ns:
        f = folner_box(n, dim)
        mu = family(f)
        out.append((n, pressure_window(mu, phi, f) / len(f)))
    return out


@dataclass(frozen=True)
class EnvMarginal:
    """Finite environment marginal: patterns with probabilities."""

    patterns: tuple[Pattern, ...]
    probs: tuple[float, ...]

    def validate(self, spec: SubshiftSpec | None = None, tol: float = 1e-12) -> None:
        if abs(sum(self.probs) - 1.0) > tol:
            raise ValueError("environment probabilities do not sum to 1")
        if any(p < -tol for p in self.probs):
            raise ValueError("negative environment probability")
        if spec is not None:
            for th, p in zip(self.patterns, self.probs):
                if p > _PROB_FLOOR and not spec.locally_admissible(th):
                    raise ValueError("environment pattern not admissible")


@dataclass(frozen=True)
class MarkovMeasure1D:
    """Stationary Markov measure on a 1D alphabet.

    Args:
        P: row-stochastic transition matrix indexed by alphabet order.
        pi: stationary row vector, pi P = pi.
    """

    alphabet: Alphabet
    P: np.ndarray
    pi: np.ndarray

    def validate(self, tol: float = 1e-12) -> None:
        if np.max(np.abs(self.P.sum(axis=1) - 1.0)) > tol:
            raise ValueError("transition matrix is not row-stochastic")
        if np.max(np.abs(self.pi @ self.P - self.pi)) > tol:
            raise ValueError("vector is not stationary")

    def word_prob(self, values: tuple) -> float:
        idx = [self.alphabet.index(v) for v in values]
        p = float(self.pi[idx[0]])
        for a, b in zip(idx, idx[1:]):
            p *= float(self.P[a, b])
        return p

    def window_measure(self, A: Shape) -> WindowMeasure:
        """Measure of the A-marginal for a contiguous 1D window."""
        lo, hi = A.bounding_box()
        if A.sites != Shape.interval(lo[0], hi[0]).sites:
            raise ValueError("window must be a contiguous interval")
        table: dict[Pattern, float] = {}
        symbols = self.alphabet.symbols

        def grow(values: tuple, p: float) -> None:
            if len(values) == len(A):
                if len(table) >= _DENSE_CAP:
                    raise ValueError("window too large for a dense table")
                table[Pattern(A.sites, values)] = p
                return
            a = self.alphabet.index(values[-1])
            for j, s in enumerate(symbols):
                q = p * float(self.P[a, j])
                if q > _PROB_FLOOR:
                    grow(values + (s,), q)

        for i, s in enumerate(symbols):
            if self.pi[i] > _PROB_FLOOR:
                grow((s,), float(self.pi[i]))
        return WindowMeasure.from_table(A, table)

    def entropy_rate(self) -> float:
        """Per-step entropy -sum pi_a P_ab log P_ab."""
        total = 0.0
        for a in range(len(self.alphabet)):
            for b in range(len(self.alphabet)):
                p = float(self.P[a, b])
                if p > _PROB_FLOOR:
                    total -= float(self.pi[a]) * p * np.log(p)
        return total


def transfer_pressure_1d(
    s: SubshiftSpec, phi: Interaction, tol: float = 1e-12, max_iter: int = 100_000
) -> tuple[float, MarkovMeasure1D]:
    """Exact 1D nearest-neighbor pressure via the weighted transfer matrix.

    The matrix entry for (a, b) is exp(-V(a) - J(a, b)) over admissible
    pairs, with V the single-site terms and J the pair terms. Returns the
    log Perron eigenvalue (power iteration to the given tolerance) and the
    associated Markov equilibrium measure.

    The spec must genuinely be a nearest-neighbor SFT presented by its
    pair language; longer-range constraints make the result meaningless.
    """
    if s.dim != 1 or phi.dim != 1:
        raise ValueError("transfer oracle is one-dimensional")
    if phi.range > 1:
        raise ValueError("interaction range exceeds nearest-neighbor")
    pair = Shape.interval(0, 1)
    table = s.language(pair, margin=2)
    if not table.exact:
        raise ValueError("pair language is not certified exact")
    symbols = s.alphabet.symbols
    k = len(symbols)
    V = np.zeros(k)
    J = np.zeros((k, k))
    for t in phi.terms:
        if t.shape.sites == ((0,),):
            for i, a in enumerate(symbols):
                V[i] += t.evaluator((), (a,))
        elif t.shape.sites == ((0,), (1,)):
            for i, a in enumerate(symbols):
                for j, b in enumerate(symbols):
                    J[i, j] += t.evaluator((), (a, b))
        else:
            raise ValueError("interaction term is not nearest-neighbor")
    adj = np.zeros((k, k))
    for u in table.patterns:
        adj[s.alphabet.index(u.values[0]), s.alphabet.index(u.values[1])] = 1.0
    T = adj * np.exp(-V[:, None] - J)

    def perron(M: np.ndarray) -> tuple[float, np.ndarray]:
        v = np.full(k, 1.0 / k)
        lam = 0.0
        for _ in range(max_iter):
            w = M @ v
            nxt = float(w.sum())
            if nxt <= 0:
                raise ValueError("transfer matrix has no positive eigenvector")
            w /= nxt
            if np.max(np.abs(w - v)) < tol and abs(nxt - lam) < tol * max(1.0, nxt):
                return nxt, w
            v, lam = w, nxt
        raise ValueError("power iteration did not converge; reducible support?")

    lam, r = perron(T)
    _, l = perron(T.T)
    if np.any(r <= tol) or np.any(l <= tol):
        raise ValueError("reducible support: Perron vector has zero entries")
    P = T * r[None, :] / (lam * r[:, None])
    pi = l * r
    pi = pi / pi.sum()
    m = MarkovMeasure1D(s.alphabet, P, pi)
    m.validate(tol=1e-9)
    return float(np.log(lam)), m


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Pattern counts on a window accumulated from samples."""

    window: Shape
    counts: dict[Pattern, int]
    total: int

    def to_window_measure(self) -> WindowMeasure:
        if self.total == 0:
            raise ValueError("no samples")
        return WindowMeasure.from_table(
            self.window, {u: c / self.total for u, c in self.counts.items()}
        )

    def frequency(self, u: Pattern) -> float:
        if self.total == 0:
            raise ValueError("no samples")
        return self.counts.get(u, 0) / self.total


def empirical_from_samples(
    samples: Iterable[Pattern] | np.ndarray,
    W: Shape,
    alphabet: Alphabet | None = None,
) -> EmpiricalMeasure:
    """Count restrictions to W.

    Args:
        samples: patterns covering W, or an integer array of shape
            (n, |W|) of alphabet indices in the sorted site order of W
            (requires alphabet).
    """
    counts: dict[Pattern, int] = {}
    total = 0
    if isinstance(samples, np.ndarray):
        if alphabet is None:
            raise ValueError("array samples need an alphabet")
        arr = np.asarray(samples)
        if arr.ndim != 2 or arr.shape[1] != len(W):
            raise ValueError("expected shape (n, |W|)")
        q = len(alphabet)
        powers = q ** np.arange(len(W))
        codes = arr @ powers
        uniq, cnt = np.unique(codes, return_counts=True)
        for code, c in zip(uniq.tolist(), cnt.tolist()):
            values = []
            for _ in range(len(W)):
                values.append(alphabet.symbols[code % q])
                code //= q
            counts[Pattern(W.sites, tuple(values))] = c
        total = int(arr.shape[0])
    else:
        for x in samples:
            u = x.restrict(W) if x.support != W else x
            counts[u] = counts.get(u, 0) + 1
            total += 1
    return EmpiricalMeasure(W, counts, total)
