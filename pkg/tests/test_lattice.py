"""Tests for lattice geometry: shapes, boundaries, and Delone sets."""

from __future__ import annotations

import pytest

from gibbslab.lattice import (
    DeloneSet,
    Shape,
    delone_greedy,
    folner_box,
    inner_boundary,
    lower_density,
    translate,
)


class TestShape:
    def test_of_dedups_and_sorts(self) -> None:
        s = Shape.of([(1, 0), (0, 0), (1, 0)])
        assert s.sites == ((0, 0), (1, 0))
        assert s.dim == 2

    def test_interval(self) -> None:
        assert Shape.interval(-1, 1).sites == ((-1,), (0,), (1,))

    def test_box(self) -> None:
        b = Shape.box((0, 0), (1, 1))
        assert len(b) == 4
        assert (1, 0) in b

    def test_ball_linf(self) -> None:
        assert len(Shape.ball(1, 2)) == 9
        assert len(Shape.ball(2, 1)) == 5

    def test_dim_mismatch_rejected(self) -> None:
        with pytest.raises(ValueError):
            Shape.of([(0,), (0, 1)])

    def test_set_ops(self) -> None:
        a = Shape.interval(0, 2)
        b = Shape.interval(1, 3)
        assert (a & b).sites == ((1,), (2,))
        assert (a | b).sites == ((0,), (1,), (2,), (3,))
        assert (a - b).sites == ((0,),)
        assert Shape.interval(1, 2) <= a

    def test_translate(self) -> None:
        a = Shape.interval(0, 1)
        assert a.translate((3,)).sites == ((3,), (4,))
        assert translate(Shape.of([(1, 2)]), (10, 20)).sites == ((11, 22),)

    def test_dilate(self) -> None:
        d = Shape.origin(2).dilate(1)
        assert d.sites == Shape.ball(1, 2).sites
        assert Shape.interval(0, 1).dilate(2).sites == Shape.interval(-2, 3).sites

    def test_difference_set(self) -> None:
        a = Shape.of([0, 1])
        assert a.difference_set().sites == ((-1,), (0,), (1,))

    def test_bounding_box(self) -> None:
        s = Shape.of([(0, 2), (3, -1)])
        assert s.bounding_box() == ((0, -1), (3, 2))


class TestFolnerBox:
    def test_sizes(self) -> None:
        assert len(folner_box(3, 1)) == 7
        assert len(folner_box(2, 2)) == 25

    def test_shape_contains_origin(self) -> None:
        assert (0, 0) in folner_box(1, 2)


class TestInnerBoundary:
    def test_interval_forward_basis(self) -> None:
        f = Shape.interval(-2, 2)
        b = Shape.of([0, 1])
        assert inner_boundary(f, b).sites == ((2,),)

    def test_trivial_basis_empty(self) -> None:
        f = Shape.interval(-2, 2)
        assert len(inner_boundary(f, Shape.of([0]))) == 0

    def test_square_forward_x(self) -> None:
        f = Shape.box((0, 0), (2, 2))
        b = Shape.of([(0, 0), (1, 0)])
        assert inner_boundary(f, b).sites == ((2, 0), (2, 1), (2, 2))

    def test_ratio_decreases_with_n(self) -> None:
        b = Shape.ball(1, 2)
        ratios = []
        for n in (2, 4, 8, 16):
            f = folner_box(n, 2)
            ratios.append(len(inner_boundary(f, b)) / len(f))
        assert all(x > y for x, y in zip(ratios, ratios[1:]))


class TestDelone:
    def test_greedy_1d(self) -> None:
        region = Shape.interval(0, 9)
        d = delone_greedy(Shape.interval(0, 1), Shape.interval(-1, 1), region)
        assert d.points.sites == ((0,), (2,), (4,), (6,), (8,))
        assert d.is_packing()
        assert d.is_covering()

    def test_greedy_2d(self) -> None:
        region = Shape.box((0, 0), (5, 5))
        p = Shape.box((0, 0), (1, 1))
        c = Shape.ball(1, 2)
        d = delone_greedy(p, c, region)
        assert d.points.sites == tuple((x, y) for x in (0, 2, 4) for y in (0, 2, 4))
        assert d.is_packing()
        assert d.is_covering()

    def test_greedy_rejects_incompatible_shapes(self) -> None:
        with pytest.raises(ValueError):
            delone_greedy(Shape.interval(0, 2), Shape.interval(-1, 1), Shape.interval(0, 9))

    def test_packing_violation_detected(self) -> None:
        d = DeloneSet(
            points=Shape.of([0, 1]),
            packing=Shape.interval(0, 1),
            covering=Shape.interval(-2, 2),
            region=Shape.interval(0, 5),
        )
        assert not d.is_packing()

    def test_covering_defects(self) -> None:
        d = DeloneSet(
            points=Shape.of([0]),
            packing=Shape.interval(0, 1),
            covering=Shape.interval(-1, 1),
            region=Shape.interval(0, 5),
        )
        assert d.covering_defects()
        assert not d.is_covering()


class TestLowerDensity:
    def test_evens_in_interval(self) -> None:
        evens = Shape.of(range(0, 20, 2))
        region = Shape.interval(0, 19)
        d = DeloneSet(evens, Shape.of([0]), Shape.interval(-1, 1), region)
        assert lower_density(d, radii=(1,)) == pytest.approx(1 / 3)

    def test_full_lattice(self) -> None:
        pts = Shape.interval(0, 11)
        d = DeloneSet(pts, Shape.of([0]), Shape.of([0]), Shape.interval(0, 11))
        assert lower_density(d, radii=(1, 2)) == pytest.approx(1.0)

    def test_greedy_2d_density(self) -> None:
        region = Shape.box((0, 0), (8, 8))
        d = delone_greedy(Shape.ball(1, 2), Shape.ball(2, 2), region)
        assert d.is_packing() and d.is_covering()
        assert lower_density(d, radii=(1,)) == pytest.approx(1 / 9)

    def test_no_fitting_box_raises(self) -> None:
        d = DeloneSet(Shape.of([0]), Shape.of([0]), Shape.of([0]), Shape.interval(0, 1))
        with pytest.raises(ValueError):
            lower_density(d, radii=(5,))
