import random

import pytest
from hypothesis import given, strategies as st

from amenable_entropy.groups import (
    BudgetExceeded,
    GroupError,
    GroupSpec,
    boundary_ratio,
    canonical_key,
    d_interior,
    decode_key,
    folner_boundary_ratio,
    folner_window,
    interval,
    inverse,
    multiply,
    translate_right,
)
from oracles import heis_product

Z1, Z2 = GroupSpec.lattice(1), GroupSpec.lattice(2)
HEIS, LAMP = GroupSpec.heisenberg(), GroupSpec.lamplighter()
FAMILIES = [Z1, Z2, GroupSpec.lattice(3), HEIS, LAMP]


def random_element(spec, rng, size=6):
    if spec == LAMP:
        lamps = {rng.randint(-size, size) for _ in range(rng.randint(0, 4))}
        return spec.element(lamps, rng.randint(-size, size))
    if spec == HEIS:
        return spec.element(*(rng.randint(-size, size) for _ in range(3)))
    return spec.element(*(rng.randint(-size, size) for _ in range(spec.dim)))


class TestArithmetic:
    def test_lattice_product(self):
        assert multiply(Z2.element(1, 2), Z2.element(3, -1)) == Z2.element(4, 1)

    def test_heisenberg_product_matches_matrices(self):
        x, y = HEIS.element(1, 0, 0), HEIS.element(0, 1, 0)
        assert multiply(x, y) == HEIS.element(*heis_product((1, 0, 0), (0, 1, 0)))
        assert multiply(x, y) == HEIS.element(1, 1, 1)
        assert multiply(y, x) == HEIS.element(1, 1, 0)

    @pytest.mark.parametrize(
        "spec,g,expected",
        [
            (Z2, (4, 1), (-4, -1)),
            (HEIS, (1, 1, 1), (-1, -1, 0)),
        ],
    )
    def test_inverse_examples(self, spec, g, expected):
        assert inverse(spec.element(*g)) == spec.element(*expected)

    def test_lamplighter_inverse(self):
        g = LAMP.element({0}, 2)
        assert inverse(g) == LAMP.element({-2}, -2)
        assert multiply(g, inverse(g)) == LAMP.identity()
        assert multiply(inverse(g), g) == LAMP.identity()

    def test_mixed_families_rejected(self):
        with pytest.raises(GroupError):
            multiply(Z1.element(1), Z2.element(1, 0))

    def test_lattice_dim_must_be_positive(self):
        with pytest.raises(GroupError):
            GroupSpec.lattice(0)

    @pytest.mark.parametrize("spec", FAMILIES, ids=lambda s: f"{s.family}{s.dim}")
    def test_group_axioms_randomized(self, spec):
        rng = random.Random(20240101)
        e = spec.identity()
        for _ in range(10_000):
            a, b, c = (random_element(spec, rng) for _ in range(3))
            assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
            assert multiply(a, inverse(a)) == e
            assert multiply(e, a) == a == multiply(a, e)

    def test_heisenberg_random_products_vs_matrices(self):
        rng = random.Random(7)
        for _ in range(2000):
            g = tuple(rng.randint(-9, 9) for _ in range(3))
            h = tuple(rng.randint(-9, 9) for _ in range(3))
            assert multiply(HEIS.element(*g), HEIS.element(*h)).data == heis_product(g, h)


class TestCanonicalKey:
    def test_identity_encoding_documented(self):
        # tag 0x01, d=1 as <len 1><0x01>, coordinate 0 as <len 1><0x00>
        assert canonical_key(Z1.identity()) == bytes([0x01, 0x01, 0x01, 0x01, 0x00])

    def test_deterministic(self):
        assert canonical_key(Z2.element(1, 2)) == canonical_key(Z2.element(*[1, 2]))

    def test_negative_and_large(self):
        assert canonical_key(Z1.element(-1)) == bytes([0x01, 0x01, 0x01, 0x01, 0xFF])
        assert canonical_key(Z1.element(128))[-3:] == bytes([0x02, 0x00, 0x80])

    @pytest.mark.parametrize("spec", FAMILIES, ids=lambda s: f"{s.family}{s.dim}")
    def test_round_trip_and_injective(self, spec):
        rng = random.Random(99)
        seen = {}
        for _ in range(10_000):
            g = random_element(spec, rng, size=300)
            k = canonical_key(g)
            assert decode_key(k) == g
            assert seen.setdefault(k, g) == g

    def test_distinct_families_distinct_keys(self):
        keys = {canonical_key(s.identity()) for s in FAMILIES}
        assert len(keys) == len(FAMILIES)

    @given(st.lists(st.integers(-(2**70), 2**70), min_size=1, max_size=4))
    def test_round_trip_property(self, xs):
        spec = GroupSpec.lattice(len(xs))
        g = spec.element(*xs)
        assert decode_key(canonical_key(g)) == g


class TestWindows:
    def test_z1_box(self):
        w = folner_window(Z1, 3)
        assert [g.data[0] for g in w] == [0, 1, 2]

    def test_centered(self):
        assert len(folner_window(Z2, 2, centered=True)) == 25

    def test_heisenberg_count(self):
        assert len(folner_window(HEIS, 2)) == 5 * 5 * 9

    def test_lamplighter_count(self):
        assert len(folner_window(LAMP, 1)) == 2**3 * 3

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            folner_window(Z2, 2000)
        with pytest.raises(BudgetExceeded):
            folner_window(HEIS, 3, budget=100)

    def test_n_must_be_positive(self):
        with pytest.raises(GroupError):
            folner_window(Z1, 0)

    def test_enumeration_deterministic(self):
        assert folner_window(LAMP, 2).elements == folner_window(LAMP, 2).elements


class TestBoundary:
    def test_z2_box_ratio(self):
        assert boundary_ratio(folner_window(Z2, 10), Z2.element(1, 0)) == pytest.approx(0.2, abs=1e-12)

    def test_lamp_toggle_preserves_f1(self):
        assert boundary_ratio(folner_window(LAMP, 1), LAMP.element({0}, 0)) == 0

    @pytest.mark.parametrize("spec", [Z2, HEIS, LAMP], ids=lambda s: s.family)
    def test_identity_ratio_zero(self, spec):
        assert boundary_ratio(folner_window(spec, 1), spec.identity()) == 0

    @pytest.mark.parametrize(
        "spec,small,large",
        [(Z2, 4, 12), (HEIS, 4, 12), (LAMP, 4, 12), (GroupSpec.lattice(3), 4, 12)],
        ids=lambda x: getattr(x, "family", x),
    )
    def test_generator_ratios_shrink(self, spec, small, large):
        for s in spec.generators():
            r_small = folner_boundary_ratio(spec, small, s)
            r_large = folner_boundary_ratio(spec, large, s)
            # the lamp toggle fixes every lamplighter box, ratio 0 throughout
            assert r_large < r_small or r_large == r_small == 0.0

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_lamplighter_cursor_count_matches_enumeration(self, n):
        rng = random.Random(n)
        elems = LAMP.generators() + [random_element(LAMP, rng, 3) for _ in range(6)]
        for g in elems:
            assert folner_boundary_ratio(LAMP, n, g) == boundary_ratio(folner_window(LAMP, n), g)

    def test_d_interior_examples(self):
        F = interval(0, 9)
        interior, boundary = d_interior(F, [Z1.element(-1)])
        assert boundary == {Z1.element(0)}
        assert interior == {Z1.element(x) for x in range(1, 10)}
        _, boundary = d_interior(F, [Z1.identity()])
        assert boundary == frozenset()
        _, boundary = d_interior(F, [Z1.element(-2), Z1.element(1)])
        assert boundary == {Z1.element(x) for x in (0, 1, 9)}

    def test_d_interior_partition(self):
        F = folner_window(HEIS, 1)
        D = HEIS.generators()
        interior, boundary = d_interior(F, D)
        assert interior | boundary == F.element_set()
        assert not interior & boundary

    def test_boundary_fraction_shrinks(self):
        D = [Z1.element(x) for x in range(-2, 3)]
        frac = {n: len(d_interior(folner_window(Z1, n), D)[1]) / n for n in (4, 16)}
        assert frac[16] < frac[4]


class TestTranslateRight:
    def test_z1(self):
        w = translate_right(interval(0, 2), Z1.element(-1))
        assert [g.data[0] for g in w] == [-1, 0, 1]

    def test_identity(self):
        w = folner_window(LAMP, 1)
        assert translate_right(w, LAMP.identity()).elements == w.elements

    def test_heisenberg_against_matrices(self):
        F = folner_window(HEIS, 1)
        g = HEIS.element(1, 0, 0)
        moved = translate_right(F, g)
        assert len(moved) == len(F) == 27
        for f, fg in zip(F, moved):
            assert fg.data == heis_product(f.data, (1, 0, 0))
