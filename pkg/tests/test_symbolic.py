"""Tests for alphabets, patterns, subshift specs, and language enumeration."""

from __future__ import annotations

import pytest

from gibbslab.lattice import Shape
from gibbslab.symbolic import (
    Alphabet,
    FullShift,
    GroupShift,
    MergeConflict,
    Pattern,
    SFT,
    catalog,
    language,
    locally_admissible,
    merge,
)


def words(table) -> list[str]:
    return sorted("".join(str(v) for v in p.values) for p in table.patterns)


class TestAlphabet:
    def test_of(self) -> None:
        a = Alphabet.of([0, 1])
        assert a.index(1) == 1
        assert len(a) == 2

    def test_cyclic_group(self) -> None:
        a = Alphabet.cyclic_group(3)
        assert a.multiply(1, 2) == 0
        assert a.invert(1) == 2
        assert a.identity == 0

    def test_group_axioms_validated(self) -> None:
        from gibbslab.symbolic import GroupTable

        with pytest.raises(ValueError):
            GroupTable(op=((0, 1), (1, 1)), identity=0, inverse=(0, 1))


class TestPattern:
    def test_of_sorts_sites(self) -> None:
        p = Pattern.of({(1,): "b", (0,): "a"})
        assert p.sites == ((0,), (1,))
        assert p.values == ("a", "b")

    def test_word(self) -> None:
        p = Pattern.word((0, 1, 1), start=-1)
        assert p.support.sites == ((-1,), (0,), (1,))
        assert p[(0,)] == 1

    def test_restrict_translate(self) -> None:
        p = Pattern.word((0, 1, 0))
        q = p.restrict(Shape.interval(1, 2))
        assert q.values == (1, 0)
        r = p.translate((10,))
        assert r[(11,)] == 1

    def test_duplicate_site_rejected(self) -> None:
        with pytest.raises(ValueError):
            Pattern.of([((0,), 0), ((0,), 1)])

    def test_merge_disjoint(self) -> None:
        u = Pattern.of({(0,): 0})
        v = Pattern.of({(1,): 1})
        assert merge(u, v).values == (0, 1)

    def test_merge_idempotent_on_overlap(self) -> None:
        u = Pattern.word((0, 1))
        assert merge(u, u) == u

    def test_merge_overlap_compatible(self) -> None:
        u = Pattern.word((0, 1))
        v = Pattern.word((1, 0), start=1)
        assert merge(u, v).values == (0, 1, 0)

    def test_merge_conflict_site(self) -> None:
        u = Pattern.word((0, 1))
        v = Pattern.word((0, 1), start=1)
        with pytest.raises(MergeConflict) as exc:
            merge(u, v)
        assert exc.value.site == (1,)


class TestCatalog:
    def test_full_shift_language_count(self) -> None:
        full = catalog("full", q=2)
        assert len(language(full, Shape.interval(0, 2), margin=0)) == 8
        assert language(full, Shape.interval(0, 2), margin=0).exact

    def test_golden_mean_words(self) -> None:
        gm = catalog("golden_mean")
        t = language(gm, Shape.interval(0, 2), margin=1)
        assert words(t) == ["000", "001", "010", "100", "101"]
        assert t.exact

    def test_golden_mean_counts_are_fibonacci(self) -> None:
        gm = catalog("golden_mean")
        counts = [len(language(gm, Shape.interval(0, n - 1), margin=1)) for n in (1, 2, 3, 4, 5)]
        assert counts == [2, 3, 5, 8, 13]

    def test_golden_mean_rejects_adjacent_ones(self) -> None:
        gm = catalog("golden_mean")
        assert not locally_admissible(Pattern.word((0, 1, 1, 0)), gm)
        assert locally_admissible(Pattern.word((0, 1, 0, 1)), gm)

    def test_hard_core_gap_shape(self) -> None:
        hc = catalog("hard_core", shape=Shape.of([0, 1, 2]))
        t = language(hc, Shape.interval(0, 3), margin=1)
        assert words(t) == ["0000", "0001", "0010", "0100", "1000", "1001"]
        assert t.exact

    def test_hard_core_2d_default(self) -> None:
        hc = catalog("hard_core", dim=2)
        ok = Pattern.of({(0, 0): 1, (1, 1): 1})
        bad = Pattern.of({(0, 0): 1, (1, 0): 1})
        assert locally_admissible(ok, hc)
        assert not locally_admissible(bad, hc)

    def test_even_shift_gaps(self) -> None:
        ev = catalog("even")
        assert locally_admissible(Pattern.word((0, 1, 1, 0)), ev)
        assert locally_admissible(Pattern.word((1, 0, 0, 1)), ev)
        assert not locally_admissible(Pattern.word((1, 0, 1)), ev)
        assert not locally_admissible(Pattern.word((1, 0, 0, 0, 1)), ev)
        assert locally_admissible(Pattern.word((0, 1, 0)), ev)
        t = language(ev, Shape.interval(0, 2), margin=1)
        assert words(t) == ["000", "001", "010", "011", "100", "110", "111"]
        assert not t.exact

    def test_squares_interior_component_must_be_square(self) -> None:
        sq = catalog("squares")
        grid = {(x, y): 0 for x in range(4) for y in range(4)}
        for x in (1, 2):
            for y in (1, 2):
                grid[(x, y)] = 1
        assert locally_admissible(Pattern.of(grid), sq)
        grid[(1, 1)] = 0
        assert not locally_admissible(Pattern.of(grid), sq)

    def test_squares_boundary_component_unconstrained(self) -> None:
        sq = catalog("squares")
        strip = {(x, y): 1 if x == 0 and y < 3 else 0 for x in range(3) for y in range(3)}
        assert locally_admissible(Pattern.of(strip), sq)

    def test_sunny_side_up_at_most_one(self) -> None:
        ss = catalog("sunny_side_up")
        assert locally_admissible(Pattern.word((0, 1, 0)), ss)
        assert not locally_admissible(Pattern.word((0, 1, 1)), ss)
        assert ss.exact_at(Shape.interval(0, 2), 1)

    def test_proper_colorings_pair_count(self) -> None:
        col = catalog("proper_colorings", q=5, dim=2)
        t = language(col, Shape.of([(0, 0), (1, 0)]), margin=0)
        assert len(t) == 20
        assert t.exact

    def test_proper_colorings_exactness_threshold(self) -> None:
        assert catalog("proper_colorings", q=5, dim=2).exact_at(Shape.origin(2), 1)
        assert not catalog("proper_colorings", q=3, dim=2).exact_at(Shape.origin(2), 1)

    def test_group_xor_pair_language(self) -> None:
        gx = catalog("group_xor", taps=(0, 1))
        t = language(gx, Shape.interval(0, 2), margin=1)
        assert words(t) == ["000", "111"]
        assert t.exact

    def test_group_xor_triple_language(self) -> None:
        gx = catalog("group_xor", taps=(0, 1, 2))
        t = language(gx, Shape.interval(0, 3), margin=1)
        assert words(t) == ["0000", "0110", "1011", "1101"]
        assert t.exact

    def test_full_group_shift(self) -> None:
        fg = catalog("full", q=2, group=True)
        assert fg.alphabet.group is not None
        assert fg.alphabet.multiply(1, 1) == 0


class TestSpecs:
    def test_sft_safe_symbol_validated(self) -> None:
        with pytest.raises(ValueError):
            SFT(
                alphabet=Alphabet.of([0, 1]),
                dim=1,
                window=Shape.of([0, 1]),
                forbidden=frozenset({Pattern.word((1, 0))}),
                safe_symbol=0,
            )

    def test_full_shift_always_exact(self) -> None:
        full = FullShift(alphabet=Alphabet.of([0, 1]), dim=2)
        assert full.exact_at(Shape.ball(1, 2), 0)

    def test_group_shift_closure_validated(self) -> None:
        with pytest.raises(ValueError):
            GroupShift(
                alphabet=Alphabet.cyclic_group(2),
                dim=1,
                window=Shape.of([0, 1]),
                forbidden=frozenset({Pattern.word((1, 1))}),
            )

    def test_language_respects_context(self) -> None:
        gm = catalog("golden_mean")
        ctx = Pattern.of({(-1,): 1})
        t = language(gm, Shape.interval(0, 1), margin=1, context=ctx)
        assert words(t) == ["00", "01"]

    def test_language_inadmissible_context_empty(self) -> None:
        gm = catalog("golden_mean")
        ctx = Pattern.word((1, 1), start=-2)
        t = language(gm, Shape.interval(0, 1), margin=1, context=ctx)
        assert len(t) == 0
