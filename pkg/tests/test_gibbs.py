"""Boltzmann distributions, partition functions, kernels, and sampling."""

import itertools
import math

import numpy as np
import pytest

from gibbslab.gibbs import (
    BoltzmannDist,
    FiberRule,
    GibbsKernel,
    InadmissibleContext,
    SamplerConfig,
    _logsumexp,
    _transfer_free_logz,
    boltzmann,
    empirical_from_frames,
    feller_locality_check,
    free_energy_series,
    gibbs_property_test,
    greedy_fill,
    kernel_apply,
    local_optimality_check,
    partition_conditional,
    partition_free,
    sample_frames,
    stolz_differences,
    tv_distance,
    variational_pressure_estimate,
)
from gibbslab.interaction import (
    Interaction,
    LocalTerm,
    catalog_interaction,
    energy,
    norm,
    zero_interaction,
)
from gibbslab.lattice import Shape
from gibbslab.measure import (
    EmpiricalMeasure,
    EnvMarginal,
    WindowMeasure,
    marginal,
    point_mass,
    product_measure,
    transfer_pressure_1d,
)
from gibbslab.symbolic import Alphabet, Pattern, _enumerate_admissible, catalog

LOG_PHI = math.log((1 + math.sqrt(5)) / 2)


@pytest.fixture(scope="module")
def gm():
    return catalog("golden_mean")


@pytest.fixture(scope="module")
def gm_zero(gm):
    return zero_interaction(gm.alphabet, 1)


@pytest.fixture(scope="module")
def parry(gm, gm_zero):
    _, mk = transfer_pressure_1d(gm, gm_zero)
    return mk


@pytest.fixture(scope="module")
def full_pm():
    return catalog("full", symbols=(-1, 1))


@pytest.fixture(scope="module")
def ising():
    return catalog_interaction("ising", h=0.0)


class TestLogSumExp:
    def test_empty_is_neg_inf(self) -> None:
        assert _logsumexp([]) == -math.inf

    def test_neg_inf_passthrough(self) -> None:
        assert _logsumexp([-math.inf, 0.0]) == 0.0
        assert _logsumexp([-math.inf, -math.inf]) == -math.inf

    def test_large_offsets_stable(self) -> None:
        assert abs(_logsumexp([1000.0, 1000.0]) - (1000.0 + math.log(2))) < 1e-12

    def test_matches_direct_sum(self) -> None:
        rng = np.random.default_rng(0)
        for _ in range(20):
            vals = rng.normal(size=10).tolist()
            direct = math.log(sum(math.exp(v) for v in vals))
            assert abs(_logsumexp(vals) - direct) < 1e-12


class TestBoltzmann:
    def test_two_level(self) -> None:
        d = boltzmann({"a": 0.0, "b": math.log(2)})
        assert abs(d.probs[0] - 2 / 3) < 1e-12
        assert abs(d.probs[1] - 1 / 3) < 1e-12
        assert abs(d.logZ - math.log(1.5)) < 1e-12

    def test_equal_energies_uniform(self) -> None:
        d = boltzmann({k: 2.5 for k in range(5)})
        assert all(abs(p - 0.2) < 1e-15 for p in d.probs)

    def test_empty_support_raises(self) -> None:
        with pytest.raises(ValueError):
            boltzmann({})

    def test_maximizes_entropy_minus_energy(self) -> None:
        # H(p) - p(U) at the Boltzmann point equals logZ and beats
        # random competitors
        rng = np.random.default_rng(1)
        for _ in range(20):
            U = {i: float(u) for i, u in enumerate(rng.normal(size=4))}
            d = boltzmann(U)
            val = -sum(
                p * (math.log(p) + U[o]) for o, p in zip(d.outcomes, d.probs)
            )
            assert abs(val - d.logZ) < 1e-9
            q = rng.random(4)
            q /= q.sum()
            other = -sum(
                qq * (math.log(qq) + U[i]) for i, qq in enumerate(q) if qq > 0
            )
            assert other <= d.logZ + 1e-12

    def test_prob_of_missing_outcome_is_zero(self) -> None:
        d = boltzmann({"a": 0.0})
        assert d.prob("zzz") == 0.0


class TestPartitionConditional:
    def test_golden_mean_window_count(self, gm, gm_zero) -> None:
        ctx = Pattern.of({(-1,): 0, (3,): 0})
        logZ, err = partition_conditional(gm_zero, ctx, Shape.interval(0, 2), gm)
        assert abs(logZ - math.log(5)) < 1e-12
        assert err == 0.0

    def test_golden_mean_blocking_context(self, gm, gm_zero) -> None:
        ctx = Pattern.of({(-1,): 1, (3,): 0})
        logZ, _ = partition_conditional(gm_zero, ctx, Shape.interval(0, 2), gm)
        assert abs(logZ - math.log(3)) < 1e-12

    def test_ising_aligned_context(self, full_pm, ising) -> None:
        ctx = Pattern.of({(-1,): 1, (1,): 1})
        logZ, err = partition_conditional(ising, ctx, Shape.of((0,)), full_pm)
        assert abs(logZ - math.log(math.exp(2) + math.exp(-2))) < 1e-12
        assert err == 0.0

    def test_one_sided_context_truncation(self, full_pm, ising) -> None:
        logZ, err = partition_conditional(
            ising, Pattern.of({(-1,): 1}), Shape.of((0,)), full_pm
        )
        assert abs(logZ - math.log(math.e + 1 / math.e)) < 1e-12
        assert err == 1.0

    def test_inadmissible_context_raises(self, gm, gm_zero) -> None:
        with pytest.raises(InadmissibleContext):
            partition_conditional(
                gm_zero, Pattern.of({(-2,): 1, (-1,): 1}), Shape.of((0,)), gm
            )


class TestPartitionFree:
    def test_golden_mean_word_count(self, gm, gm_zero) -> None:
        assert abs(partition_free(gm_zero, Shape.interval(0, 2), gm) - math.log(5)) < 1e-12

    def test_golden_mean_fibonacci_series(self, gm, gm_zero) -> None:
        fib = [1, 2, 3, 5, 8, 13, 21, 34, 55]
        for n in (1, 2, 5, 8):
            logZ = partition_free(gm_zero, Shape.interval(0, n - 1), gm)
            assert abs(logZ - math.log(fib[n])) < 1e-10

    def test_ising_pair_window(self, full_pm, ising) -> None:
        logZ = partition_free(ising, Shape.interval(0, 1), full_pm)
        assert abs(logZ - math.log(2 * math.e + 2 / math.e)) < 1e-12

    def test_full_shift_site_count(self) -> None:
        full3 = catalog("full", symbols=(0, 1, 2))
        z3 = zero_interaction(full3.alphabet, 1)
        logZ = partition_free(z3, Shape.interval(0, 4), full3)
        assert abs(logZ - 5 * math.log(3)) < 1e-12

    def test_transfer_path_declines_wide_rules(self) -> None:
        # distance-3 exclusion is invisible to pair adjacency, so the
        # recursion must refuse and enumeration must count 13 words
        hc3 = catalog("hard_core", shape=Shape.of([0, 1, 2]))
        zh = zero_interaction(hc3.alphabet, 1)
        assert _transfer_free_logz(zh, Shape.interval(0, 5), hc3) is None
        cnt = sum(
            all(
                not (w[i] and w[j])
                for i in range(6)
                for j in range(i + 1, min(i + 3, 6))
            )
            for w in itertools.product((0, 1), repeat=6)
        )
        assert cnt == 13
        logZ = partition_free(zh, Shape.interval(0, 5), hc3)
        assert abs(logZ - math.log(cnt)) < 1e-12

    def test_transfer_matches_enumeration(self, gm) -> None:
        # same window through both code paths
        phi = Interaction(
            dim=1,
            alphabet=gm.alphabet,
            terms=(
                LocalTerm(Shape.origin(1), lambda ev, xv: 0.3 * xv[0], 0.3),
                LocalTerm(
                    Shape.interval(0, 1),
                    lambda ev, xv: -0.7 * xv[0] * xv[1],
                    0.7,
                ),
            ),
            range=1,
        )
        A = Shape.interval(0, 4)
        fast = _transfer_free_logz(phi, A, gm)
        slow = _logsumexp([-energy(phi, u) for u in gm.language(A)])
        assert fast is not None and abs(fast - slow) < 1e-10


class TestGibbsKernel:
    def test_properness_bit_exact(self, full_pm, ising) -> None:
        rng = np.random.default_rng(7)
        W = Shape.interval(-2, 2)
        A = Shape.of((0,))
        pats = list(full_pm.language(W))
        w = rng.random(len(pats))
        w /= w.sum()
        mu = WindowMeasure.from_table(W, {p: float(x) for p, x in zip(pats, w)})
        K = GibbsKernel.on_window(A, ising, full_pm, W)
        nu = kernel_apply(K, mu)
        ext = W - A
        t0 = marginal(mu, ext).simple_table()
        t1 = marginal(nu, ext).simple_table()
        assert set(t0) == set(t1)
        assert all(t0[p] == t1[p] for p in t0)

    def test_idempotence(self, full_pm, ising) -> None:
        rng = np.random.default_rng(8)
        W = Shape.interval(-2, 2)
        A = Shape.interval(-1, 1)
        pats = list(full_pm.language(W))
        w = rng.random(len(pats))
        w /= w.sum()
        mu = WindowMeasure.from_table(W, {p: float(x) for p, x in zip(pats, w)})
        K = GibbsKernel.on_window(A, ising, full_pm, W)
        nu = kernel_apply(K, mu)
        nu2 = kernel_apply(K, nu)
        ta, tb = nu.simple_table(), nu2.simple_table()
        assert max(abs(ta.get(p, 0.0) - tb.get(p, 0.0)) for p in set(ta) | set(tb)) < 1e-12

    def test_consistency_nested_targets(self, full_pm, ising) -> None:
        rng = np.random.default_rng(9)
        W = Shape.interval(-3, 3)
        A = Shape.of((0,))
        B = Shape.interval(-1, 1)
        pats = list(full_pm.language(W))
        w = rng.random(len(pats))
        w /= w.sum()
        mu = WindowMeasure.from_table(W, {p: float(x) for p, x in zip(pats, w)})
        KB = GibbsKernel.on_window(B, ising, full_pm, W)
        KA = GibbsKernel.on_window(A, ising, full_pm, W)
        lhs = kernel_apply(KA, kernel_apply(KB, mu)).simple_table()
        rhs = kernel_apply(KB, mu).simple_table()
        assert max(abs(lhs.get(p, 0.0) - rhs.get(p, 0.0)) for p in set(lhs) | set(rhs)) < 1e-12

    def test_boltzmann_table_is_fixed_point(self, full_pm, ising) -> None:
        W = Shape.interval(-2, 2)
        A = Shape.of((0,))
        pats = list(full_pm.language(W))
        tab = {p: math.exp(-energy(ising, p)) for p in pats}
        s = sum(tab.values())
        mu = WindowMeasure.from_table(W, {p: v / s for p, v in tab.items()})
        K = GibbsKernel.on_window(A, ising, full_pm, W)
        out = kernel_apply(K, mu).simple_table()
        ref = mu.simple_table()
        assert max(abs(ref[p] - out.get(p, 0.0)) for p in ref) < 1e-12

    def test_point_mass_zero_interaction_uniformizes(self, gm, gm_zero) -> None:
        W = Shape.interval(-1, 1)
        mu = point_mass(Pattern.word((0, 0, 0), start=-1))
        K = GibbsKernel.on_window(Shape.of((0,)), gm_zero, gm, W)
        out = kernel_apply(K, mu).simple_table()
        assert len(out) == 2
        assert all(abs(v - 0.5) < 1e-15 for v in out.values())

    def test_window_must_cover_range(self, full_pm, ising) -> None:
        W = Shape.interval(0, 1)
        mu = product_measure({-1: 0.5, 1: 0.5}, W)
        K = GibbsKernel.on_window(Shape.of((1,)), ising, full_pm, W)
        with pytest.raises(ValueError):
            kernel_apply(K, mu)

    def test_conditional_no_filling_raises(self, gm, gm_zero) -> None:
        K = GibbsKernel.on_window(
            Shape.of((0,)), gm_zero, gm, Shape.interval(-2, 0)
        )
        with pytest.raises(InadmissibleContext):
            K.conditional(Pattern.of({(-2,): 1, (-1,): 1}))

    def test_truncation_error_field(self, full_pm) -> None:
        phi = catalog_interaction("ising", h=0.25)
        A = Shape.of((0,))
        covered = GibbsKernel.on_window(A, phi, full_pm, Shape.interval(-1, 1))
        tight = GibbsKernel.on_window(A, phi, full_pm, Shape.of((0,)))
        assert covered.err == 0.0
        assert tight.err == 2.0  # both nearest-neighbor bonds escape


class TestPropertyTest:
    def test_bernoulli_fails_with_known_tv(self) -> None:
        full2 = catalog("full", symbols=(0, 1))
        z2 = zero_interaction(full2.alphabet, 1)
        mu = product_measure({0: 0.3, 1: 0.7}, Shape.interval(-1, 1))
        rep = gibbs_property_test(mu, z2, Shape.of((0,)), full2, tol=1e-9)
        assert not rep.passed
        assert abs(rep.aggregate_tv - 0.4) < 1e-12

    def test_uniform_product_passes(self) -> None:
        full2 = catalog("full", symbols=(0, 1))
        z2 = zero_interaction(full2.alphabet, 1)
        mu = product_measure({0: 0.5, 1: 0.5}, Shape.interval(-1, 1))
        rep = gibbs_property_test(mu, z2, Shape.of((0,)), full2, tol=1e-9)
        assert rep.passed and rep.aggregate_tv < 1e-15

    def test_parry_is_gibbs_for_zero_interaction(self, gm, gm_zero, parry) -> None:
        mu = parry.window_measure(Shape.interval(-1, 1))
        rep = gibbs_property_test(mu, gm_zero, Shape.of((0,)), gm, tol=1e-12)
        assert rep.passed

    def test_low_count_contexts_excluded(self, gm, gm_zero) -> None:
        W = Shape.interval(-1, 1)
        counts = {
            Pattern.word((0, 0, 0), start=-1): 500,
            Pattern.word((0, 1, 0), start=-1): 400,
            Pattern.word((1, 0, 0), start=-1): 5,
        }
        emp = EmpiricalMeasure(W, counts, 905)
        rep = gibbs_property_test(emp, gm_zero, Shape.of((0,)), gm, tol=1.0)
        assert len(rep.excluded) == 1
        assert rep.excluded[0][1] == 5

    def test_report_serializable(self, gm, gm_zero, parry) -> None:
        mu = parry.window_measure(Shape.interval(-1, 1))
        rep = gibbs_property_test(mu, gm_zero, Shape.of((0,)), gm, tol=1e-12)
        blob = rep.to_json()
        assert set(blob) == {"aggregate_tv", "passed", "tol", "contexts", "excluded"}


class TestLocalOptimality:
    def test_point_mass_gap_is_log_alphabet(self) -> None:
        full2 = catalog("full", symbols=(0, 1))
        z2 = zero_interaction(full2.alphabet, 1)
        mu = point_mass(Pattern.word((0, 0, 0), start=-1))
        lhs, rhs, gap = local_optimality_check(mu, z2, Shape.of((0,)), full2)
        assert abs(gap - math.log(2)) < 1e-12

    def test_bernoulli_gap_closed_form(self) -> None:
        full2 = catalog("full", symbols=(0, 1))
        z2 = zero_interaction(full2.alphabet, 1)
        mu = product_measure({0: 0.3, 1: 0.7}, Shape.interval(-1, 1))
        lhs, rhs, gap = local_optimality_check(mu, z2, Shape.of((0,)), full2)
        H7 = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3))
        assert abs(gap - (math.log(2) - H7)) < 1e-12

    def test_gibbs_measures_have_zero_gap(self, gm, gm_zero, parry) -> None:
        mu = parry.window_measure(Shape.interval(-1, 1))
        _, _, gap = local_optimality_check(mu, gm_zero, Shape.of((0,)), gm)
        assert abs(gap) < 1e-12

    def test_monotone_improvement(self, full_pm, ising, gm, gm_zero) -> None:
        rng = np.random.default_rng(42)
        W = Shape.interval(-2, 2)
        A = Shape.of((0,))
        for sys_, phi_ in ((full_pm, ising), (gm, gm_zero)):
            K = GibbsKernel.on_window(A, phi_, sys_, W)
            for _ in range(15):
                pats = list(sys_.language(W))
                w = rng.random(len(pats)) ** 3
                w /= w.sum()
                mu = WindowMeasure.from_table(
                    W, {p: float(x) for p, x in zip(pats, w)}
                )
                tv = tv_distance(
                    mu.simple_table(), kernel_apply(K, mu).simple_table()
                )
                _, _, gap = local_optimality_check(mu, phi_, A, sys_)
                if tv > 1e-6:
                    assert gap > 0
                else:
                    assert abs(gap) < 1e-10


class TestFellerLocality:
    def test_zero_beyond_range(self, full_pm, ising) -> None:
        dev = feller_locality_check(
            full_pm,
            ising,
            Shape.of((0,)),
            Pattern.of({(0,): 1}),
            Shape.interval(-1, 1),
            trials=40,
            window=Shape.interval(-3, 3),
        )
        assert dev == 0.0

    def test_positive_inside_range(self, full_pm, ising) -> None:
        dev = feller_locality_check(
            full_pm,
            ising,
            Shape.of((0,)),
            Pattern.of({(0,): 1}),
            Shape.of((0,)),
            trials=40,
            window=Shape.interval(-2, 2),
        )
        assert dev > 0.01


class TestVariationalSeries:
    def test_full_shift_flat(self) -> None:
        full2 = catalog("full", symbols=(0, 1))
        z2 = zero_interaction(full2.alphabet, 1)
        for _, v in variational_pressure_estimate(full2, z2, None, [1, 4, 16]):
            assert abs(v - math.log(2)) < 1e-12

    def test_golden_mean_converges(self, gm, gm_zero) -> None:
        series = variational_pressure_estimate(gm, gm_zero, None, [4, 16, 64])
        errs = [abs(v - LOG_PHI) for _, v in series]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 0.02

    def test_ising_per_site_limit(self, full_pm, ising) -> None:
        series = variational_pressure_estimate(full_pm, ising, None, [256])
        target = math.log(2 * math.cosh(1.0))
        assert abs(series[0][1] - target) < 1e-3

    def test_stolz_differences_sharpen(self, full_pm, ising) -> None:
        target = math.log(2 * math.cosh(1.0))
        fes = free_energy_series(full_pm, ising, [255, 256])
        diffs = stolz_differences(fes)
        assert abs(diffs[-1][1] - target) < 1e-12

    def test_env_averaged_series(self) -> None:
        env_a = Alphabet.of((0, 1))
        phi = Interaction(
            dim=1,
            alphabet=Alphabet.of((0, 1)),
            terms=(
                LocalTerm(
                    Shape.origin(1),
                    lambda ev, xv: -float(ev[0]) * xv[0],
                    1.0,
                    env_shape=Shape.origin(1),
                ),
            ),
            range=0,
            env_alphabet=env_a,
        )
        full2 = catalog("full", symbols=(0, 1))
        F1 = Shape.interval(-1, 1)
        nu = EnvMarginal(
            (Pattern.constant(F1, 0), Pattern.constant(F1, 1)), (0.5, 0.5)
        )
        rows = free_energy_series(full2, phi, [1], nu)
        expect = 0.5 * 3 * math.log(2) + 0.5 * 3 * math.log(1 + math.e)
        assert abs(rows[0][2] - expect) < 1e-12


class TestFreeVsConditionalBound:
    def test_bound_across_mixing_annulus(self) -> None:
        # context held beyond a free annulus at least as wide as both the
        # mixing gap and the interaction range: the filling sets agree
        # and the partition gap is within the stated bound
        rng = np.random.default_rng(3)
        cases = [
            (catalog("golden_mean"), zero_interaction(Alphabet.of((0, 1)), 1), 1),
            (catalog("hard_core"), zero_interaction(Alphabet.of((0, 1)), 1), 1),
            (catalog("full", symbols=(-1, 1)), catalog_interaction("ising", h=0.25), 0),
        ]
        for sys_, phi_, gap in cases:
            width = max(gap, phi_.range)
            for n in (2, 4):
                F = Shape.interval(0, n - 1)
                annulus = F.dilate(width) - F
                W = F.dilate(width + phi_.range + 1)
                ctxs = list(_enumerate_admissible(sys_, W - F - annulus))
                lzf = partition_free(phi_, F, sys_)
                nfree = sum(1 for _ in sys_.language(F))
                for _ in range(8):
                    ctx = ctxs[int(rng.integers(0, len(ctxs)))]
                    lzc, err = partition_conditional(phi_, ctx, F, sys_)
                    ncond = len(list(_enumerate_admissible(sys_, F, context=ctx)))
                    assert ncond == nfree
                    assert abs(lzc - lzf) <= norm(phi_) * len(annulus) + err + 1e-12


class TestSampler:
    def test_full_shift_iid_bands(self) -> None:
        full2 = catalog("full", symbols=(0, 1))
        z2 = zero_interaction(full2.alphabet, 1)
        cfg = SamplerConfig(dims=(64,), sweeps=400, seed=11, burn=0, thin=1)
        arr = np.stack(list(sample_frames(full2, z2, cfg)))
        n = arr.size
        freq = arr.mean()
        assert abs(freq - 0.5) <= 3 * 0.5 / math.sqrt(n)

    def test_golden_mean_cycle_matches_parry(self, gm, gm_zero, parry) -> None:
        sweeps = 1_000_000 // 512
        cfg = SamplerConfig(dims=(512,), sweeps=sweeps, seed=3, burn=100, thin=1)
        arr = np.stack(list(sample_frames(gm, gm_zero, cfg)))
        assert np.logical_and(arr == 1, np.roll(arr, -1, axis=1) == 1).sum() == 0
        for L in (1, 2, 3):
            W = Shape.interval(0, L - 1)
            emp = empirical_from_frames(arr, W, gm.alphabet)
            p_emp = {u.values: c / emp.total for u, c in emp.counts.items()}
            p_ref = {u.values: parry.word_prob(u.values) for u in gm.language(W)}
            assert tv_distance(p_emp, p_ref) <= 0.02

    def test_golden_mean_empirical_property_test(self, gm, gm_zero) -> None:
        sweeps = 1_000_000 // 512
        cfg = SamplerConfig(dims=(512,), sweeps=sweeps, seed=3, burn=100, thin=1)
        arr = np.stack(list(sample_frames(gm, gm_zero, cfg)))
        emp = empirical_from_frames(arr, Shape.interval(-1, 1), gm.alphabet)
        rep = gibbs_property_test(emp, gm_zero, Shape.of((0,)), gm, tol=0.03)
        retained = sum(round(w * emp.total) for _, w, _ in rep.contexts)
        assert rep.passed
        assert retained >= 100_000

    def test_stationary_matches_exact_cycle_boltzmann(self, full_pm, ising) -> None:
        L = 8
        exact = {}
        for xs in itertools.product((-1, 1), repeat=L):
            E = -sum(xs[i] * xs[(i + 1) % L] for i in range(L))
            exact[xs] = math.exp(-E)
        Z = sum(exact.values())
        exact = {k: v / Z for k, v in exact.items()}
        cfg = SamplerConfig(dims=(L,), sweeps=20000, seed=33, burn=200, thin=1)
        counts: dict = {}
        n = 0
        for f in sample_frames(full_pm, ising, cfg):
            key = tuple(full_pm.alphabet.symbols[i] for i in f.tolist())
            counts[key] = counts.get(key, 0) + 1
            n += 1
        assert tv_distance({k: v / n for k, v in counts.items()}, exact) < 0.1

    def test_percolation_fiber_rule(self) -> None:
        full3 = catalog("full", symbols=(-1, 0, 1), dim=2)
        phi = catalog_interaction("ising_percolation", h=0.3)
        rule = FiberRule(
            shape=Shape.origin(2),
            env_shape=Shape.origin(2),
            test=lambda ev, xv: (xv[0] == 0) == (ev[0] == 0),
        )
        rng = np.random.default_rng(20260818)
        theta = (rng.random((16, 16)) < 0.6).astype(np.int64)
        cfg = SamplerConfig(dims=(16, 16), sweeps=400, seed=5, burn=50, thin=1)
        arr = np.stack(
            list(sample_frames(full3, phi, cfg, fiber_rules=(rule,), env=theta))
        )
        idx0 = full3.alphabet.index(0)
        closed = theta == 0
        assert set(np.unique(arr[:, closed]).tolist()) == {idx0}
        assert idx0 not in set(np.unique(arr[:, ~closed]).tolist())

    def test_determinism(self, gm, gm_zero) -> None:
        cfg = SamplerConfig(dims=(64,), sweeps=60, seed=17, burn=10, thin=2)
        a = list(sample_frames(gm, gm_zero, cfg))
        b = list(sample_frames(gm, gm_zero, cfg))
        assert len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_block_schedule(self, gm, gm_zero, parry) -> None:
        cfg = SamplerConfig(
            dims=(30,), sweeps=600, seed=21, burn=100, thin=1,
            block=Shape.interval(0, 1),
        )
        arr = np.stack(list(sample_frames(gm, gm_zero, cfg)))
        assert np.logical_and(arr == 1, np.roll(arr, -1, axis=1) == 1).sum() == 0
        emp = empirical_from_frames(arr, Shape.interval(0, 1), gm.alphabet)
        p_emp = {u.values: c / emp.total for u, c in emp.counts.items()}
        p_ref = {
            u.values: parry.word_prob(u.values)
            for u in gm.language(Shape.interval(0, 1))
        }
        assert tv_distance(p_emp, p_ref) < 0.05
        arr2 = np.stack(list(sample_frames(gm, gm_zero, cfg)))
        assert np.array_equal(arr, arr2)

    def test_site_schedule(self, gm, gm_zero) -> None:
        cfg = SamplerConfig(
            dims=(30,), sweeps=500, seed=4, burn=100, thin=1, schedule="site"
        )
        arr = np.stack(list(sample_frames(gm, gm_zero, cfg)))
        assert np.logical_and(arr == 1, np.roll(arr, -1, axis=1) == 1).sum() == 0

    def test_greedy_fill_admissible(self, gm) -> None:
        init = greedy_fill(gm, (16,))
        assert all(
            not (init[i] == 1 and init[(i + 1) % 16] == 1) for i in range(16)
        )

    def test_torus_too_small_raises(self, gm, gm_zero) -> None:
        with pytest.raises(ValueError):
            list(sample_frames(gm, gm_zero, SamplerConfig(dims=(2,), sweeps=1, seed=0)))

    def test_unknown_schedule_raises(self, gm, gm_zero) -> None:
        cfg = SamplerConfig(dims=(16,), sweeps=1, seed=0, schedule="zigzag")
        with pytest.raises(ValueError):
            list(sample_frames(gm, gm_zero, cfg))
