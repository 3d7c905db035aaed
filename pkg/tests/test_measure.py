"""Tests for window measures, entropies, pressures, and transfer oracles."""

from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from gibbslab.lattice import Shape
from gibbslab.symbolic import Alphabet, Pattern, catalog
from gibbslab.interaction import catalog_interaction, norm, zero_interaction, energy
from gibbslab.measure import (
    EnvMarginal,
    MarkovMeasure1D,
    WindowMeasure,
    condition,
    conditional_entropy,
    conditional_pressure,
    empirical_from_samples,
    entropy,
    marginal,
    mix,
    point_mass,
    pressure_per_site_estimate,
    pressure_window,
    product_measure,
    transfer_pressure_1d,
    uniform_measure,
)

PHI = (1 + 5**0.5) / 2


@pytest.fixture(scope="module")
def parry():
    gm = catalog("golden_mean")
    _, mk = transfer_pressure_1d(gm, zero_interaction(gm.alphabet, 1))
    return mk


@pytest.fixture(scope="module")
def ising_eq():
    phi = catalog_interaction("ising", h=0.0, dim=1)
    spins = catalog("full", q=2, symbols=(-1, 1))
    logp, mk = transfer_pressure_1d(spins, phi)
    return phi, logp, mk


class TestEntropy:
    def test_uniform_single_site(self) -> None:
        mu = product_measure({0: 0.5, 1: 0.5}, Shape.of([0]))
        assert entropy(mu) == pytest.approx(np.log(2), abs=1e-12)

    def test_point_mass(self) -> None:
        assert entropy(point_mass(Pattern.word((0, 1, 0)))) == 0.0

    def test_parry_single_site(self, parry) -> None:
        mu = parry.window_measure(Shape.interval(0, 1))
        p0 = PHI**2 / (1 + PHI**2)
        closed = -(p0 * np.log(p0) + (1 - p0) * np.log(1 - p0))
        assert entropy(mu, Shape.of([0])) == pytest.approx(closed, abs=1e-9)

    def test_env_atoms_average(self) -> None:
        th1 = Pattern.of({(10,): 0})
        th2 = Pattern.of({(10,): 1})
        mu = WindowMeasure.from_env_atoms(
            Shape.of([0]),
            [
                (th1, 0.5, {Pattern.word((0,)): 1.0}),
                (th2, 0.5, {Pattern.word((0,)): 0.5, Pattern.word((1,)): 0.5}),
            ],
        )
        mu.validate()
        assert entropy(mu) == pytest.approx(0.5 * np.log(2), abs=1e-12)

    def test_validate_rejects_bad_sum(self) -> None:
        mu = WindowMeasure.from_table(Shape.of([0]), {Pattern.word((0,)): 0.7})
        with pytest.raises(ValueError):
            mu.validate()

    def test_validate_rejects_off_language_support(self) -> None:
        gm = catalog("golden_mean")
        tbl = {Pattern.word((1, 1)): 1.0}
        mu = WindowMeasure.from_table(Shape.interval(0, 1), tbl)
        with pytest.raises(ValueError):
            mu.validate(spec=gm)


class TestConditionalEntropy:
    def test_product_independence(self) -> None:
        mu = product_measure({0: 0.3, 1: 0.7}, Shape.interval(0, 1))
        a, b = Shape.of([1]), Shape.of([0])
        assert conditional_entropy(mu, a, b) == pytest.approx(
            entropy(mu, a), abs=1e-12
        )

    def test_deterministic_function_of_base(self) -> None:
        tbl = {Pattern.word((0, 0)): 0.5, Pattern.word((1, 1)): 0.5}
        mu = WindowMeasure.from_table(Shape.interval(0, 1), tbl)
        assert conditional_entropy(mu, Shape.of([1]), Shape.of([0])) == 0.0

    def test_parry_step_is_entropy_rate(self, parry) -> None:
        mu = parry.window_measure(Shape.interval(0, 1))
        step = conditional_entropy(mu, Shape.of([1]), Shape.of([0]))
        assert step == pytest.approx(parry.entropy_rate(), abs=1e-9)
        assert step == pytest.approx(np.log(PHI), abs=1e-9)


class TestPressure:
    def test_uniform_zero_interaction(self) -> None:
        a = Shape.interval(0, 2)
        mu = product_measure({0: 0.5, 1: 0.5}, a)
        z = zero_interaction(Alphabet.of((0, 1)), 1)
        assert pressure_window(mu, z, a) == pytest.approx(3 * np.log(2), abs=1e-12)

    def test_point_mass_zero_interaction(self) -> None:
        z = zero_interaction(Alphabet.of((0, 1)), 1)
        mu = point_mass(Pattern.word((0, 1, 0)))
        assert pressure_window(mu, z, mu.window) == 0.0

    def test_ising_window_hand_sum(self, ising_eq) -> None:
        phi, _, mk = ising_eq
        a = Shape.interval(0, 1)
        mu = mk.window_measure(a)
        hand = entropy(mu) - sum(
            p * energy(phi, u) for u, p in mu.simple_table().items()
        )
        assert pressure_window(mu, phi, a) == pytest.approx(hand, abs=1e-12)

    def test_reduces_to_pressure_window(self, ising_eq) -> None:
        phi, _, mk = ising_eq
        a = Shape.interval(0, 2)
        mu = mk.window_measure(a)
        lhs = conditional_pressure(mu, phi, a, Shape.empty(1))
        assert lhs == pytest.approx(pressure_window(mu, phi, a), abs=1e-12)

    def test_chain_rule(self, ising_eq) -> None:
        phi, _, mk = ising_eq
        rng = random.Random(0)
        w = Shape.interval(0, 5)
        mu = mk.window_measure(w)
        for _ in range(15):
            sites = list(range(6))
            a = Shape.of(rng.sample(sites, 2))
            b = Shape.of(rng.sample(sites, 2)) - a
            c = (Shape.of(rng.sample(sites, 2)) - a) - b
            lhs = conditional_pressure(mu, phi, a | b, c)
            rhs = conditional_pressure(mu, phi, b, c) + conditional_pressure(
                mu, phi, a, b | c
            )
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_pressure_bound(self, ising_eq) -> None:
        phi, _, mk = ising_eq
        rng = random.Random(1)
        w = Shape.interval(0, 5)
        mu = mk.window_measure(w)
        cap = np.log(2) + norm(phi)
        for _ in range(15):
            sites = list(range(6))
            a = Shape.of(rng.sample(sites, 3))
            b = Shape.of(rng.sample(sites, 2))
            assert conditional_pressure(mu, phi, a, b) <= cap * len(a - b) + 1e-12

    def test_depends_only_on_joint_marginal(self, ising_eq) -> None:
        phi, _, mk = ising_eq
        rng = random.Random(2)
        w = Shape.interval(0, 4)
        mu = mk.window_measure(w)
        for _ in range(10):
            a = Shape.of(rng.sample(range(5), 2))
            b = Shape.of(rng.sample(range(5), 2)) - a
            sub = marginal(mu, a | b)
            assert conditional_pressure(mu, phi, a, b) == conditional_pressure(
                sub, phi, a, b
            )

    def test_concavity(self, ising_eq) -> None:
        phi, _, mk = ising_eq
        a = Shape.interval(0, 2)
        mu = mk.window_measure(a)
        nu = product_measure({-1: 0.3, 1: 0.7}, a)
        both = pressure_window(mix(mu, nu, 0.5), phi, a)
        avg = 0.5 * (pressure_window(mu, phi, a) + pressure_window(nu, phi, a))
        assert both >= avg - 1e-12


class TestTransfer:
    def test_golden_mean_log_phi(self, parry) -> None:
        gm = catalog("golden_mean")
        logp, _ = transfer_pressure_1d(gm, zero_interaction(gm.alphabet, 1))
        assert logp == pytest.approx(np.log(PHI), abs=1e-9)

    def test_parry_stationary_vector(self, parry) -> None:
        assert parry.pi[0] == pytest.approx(PHI**2 / (1 + PHI**2), abs=1e-9)
        assert parry.P[1, 1] == pytest.approx(0.0, abs=1e-12)
        parry.validate(tol=1e-9)

    def test_full_shift_log_q(self) -> None:
        full3 = catalog("full", q=3)
        logp, _ = transfer_pressure_1d(full3, zero_interaction(full3.alphabet, 1))
        assert logp == pytest.approx(np.log(3), abs=1e-12)

    def test_ising_log_2cosh(self, ising_eq) -> None:
        _, logp, mk = ising_eq
        assert logp == pytest.approx(np.log(2 * np.cosh(1)), abs=1e-9)
        assert mk.pi[0] == pytest.approx(0.5, abs=1e-9)

    def test_rejects_long_range(self) -> None:
        gm = catalog("golden_mean")
        from gibbslab.interaction import Interaction, LocalTerm

        phi = Interaction(
            dim=1,
            alphabet=gm.alphabet,
            terms=(LocalTerm(Shape.of([0, 2]), lambda ev, xv: 0.0, 1.0),),
            range=2,
        )
        with pytest.raises(ValueError):
            transfer_pressure_1d(gm, phi)


class TestPerSite:
    def test_bernoulli_flat(self) -> None:
        z = zero_interaction(Alphabet.of((0, 1)), 1)
        fam = lambda f: product_measure({0: 0.5, 1: 0.5}, f)
        for _, v in pressure_per_site_estimate(fam, z, (1, 2, 4)):
            assert v == pytest.approx(np.log(2), abs=1e-9)

    def test_parry_one_over_n(self, parry) -> None:
        gm = catalog("golden_mean")
        z = zero_interaction(gm.alphabet, 1)
        fam = lambda f: parry.window_measure(f)
        series = pressure_per_site_estimate(fam, z, (2, 4, 8))
        scaled = [abs(v - np.log(PHI)) * (2 * n + 1) for n, v in series]
        assert scaled[0] == pytest.approx(scaled[-1], abs=1e-6)

    def test_ising_approaches_limit(self, ising_eq) -> None:
        phi, logp, mk = ising_eq
        fam = lambda f: mk.window_measure(f)
        series = pressure_per_site_estimate(fam, phi, (2, 4, 8))
        errs = [abs(v - logp) for _, v in series]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 0.03

    def test_stolz_difference_is_exact(self, ising_eq) -> None:
        phi, logp, mk = ising_eq

        def psi(n):
            f = Shape.interval(0, n - 1)
            return pressure_window(mk.window_measure(f), phi, f)

        assert psi(9) - psi(8) == pytest.approx(logp, abs=1e-9)


class TestPlumbing:
    def test_marginal_of_product(self) -> None:
        mu = product_measure({0: 0.3, 1: 0.7}, Shape.interval(0, 2))
        mm = marginal(mu, Shape.of([1]))
        assert mm.simple_table()[Pattern.of({1: 1})] == pytest.approx(0.7)

    def test_condition_preserves_independence(self) -> None:
        mu = product_measure({0: 0.3, 1: 0.7}, Shape.interval(0, 2))
        cc = condition(mu, Shape.of([0]), Pattern.of({0: 1}))
        mcc = marginal(cc, Shape.interval(1, 2))
        assert mcc.simple_table()[Pattern.word((1, 1), start=1)] == pytest.approx(0.49)

    def test_condition_zero_probability_errors(self) -> None:
        mu = point_mass(Pattern.word((0, 0)))
        with pytest.raises(ValueError):
            condition(mu, Shape.of([0]), Pattern.of({0: 1}))

    def test_uniform_measure_counts(self) -> None:
        gm = catalog("golden_mean")
        mu = uniform_measure(gm, Shape.interval(0, 2))
        assert len(mu.simple_table()) == 5
        mu.validate(spec=gm)

    def test_env_marginal_validates(self) -> None:
        m = EnvMarginal((Pattern.word((0,)), Pattern.word((1,))), (0.4, 0.6))
        m.validate()
        bad = EnvMarginal((Pattern.word((0,)),), (0.5,))
        with pytest.raises(ValueError):
            bad.validate()

    def test_empirical_binomial_band(self) -> None:
        rng = np.random.default_rng(0)
        n = 10**6
        arr = rng.integers(0, 2, size=(n, 3))
        w = Shape.interval(0, 2)
        emp = empirical_from_samples(arr, w, Alphabet.of((0, 1)))
        p = 1 / 8
        band = 3 * (p * (1 - p) / n) ** 0.5
        for word in itertools.product((0, 1), repeat=3):
            assert abs(emp.frequency(Pattern.word(word)) - p) <= band
        assert emp.total == n

    def test_empirical_from_patterns(self) -> None:
        w = Shape.of([0])
        pats = [Pattern.word((0,)), Pattern.word((0,)), Pattern.word((1,))]
        emp = empirical_from_samples(pats, w)
        assert emp.frequency(Pattern.word((0,))) == pytest.approx(2 / 3)
        emp.to_window_measure().validate()

    def test_markov_word_prob(self, parry) -> None:
        # stationarity: equal-length words with equal endpoints and no 11
        p010 = parry.word_prob((0, 1, 0))
        p000 = parry.word_prob((0, 0, 0))
        total = sum(
            parry.word_prob(w)
            for w in itertools.product((0, 1), repeat=3)
        )
        assert total == pytest.approx(1.0, abs=1e-9)
        assert p010 > 0 and p000 > 0
