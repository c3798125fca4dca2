"""Base arithmetic: towers, valuations, Teichmuller, Newton polygons, Hensel."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from padicfg.padic import (
    INF,
    CertificationError,
    PadicError,
    Qp,
    RationalValuation,
    arith,
    coeff_from_text,
    coeff_to_text,
    extend_field,
    hensel_root,
    newton_polygon,
    poly_deflate,
    poly_eval,
    teichmuller_lift,
    valuation,
)


@pytest.fixture(scope="module")
def Z3():
    return Qp(3, 24)


@pytest.fixture(scope="module")
def Z3_pi(Z3):
    # Q_3(zeta_3) via the Eisenstein polynomial X^2 + 3X + 3
    return extend_field(Z3, [3, 3, 1], "eisenstein")


def brute_hull(points):
    """Independent lower-hull oracle: keep points no line pair goes under."""
    pts = sorted(points)
    hull = [pts[0]]
    while hull[-1] != pts[-1]:
        x0, y0 = hull[-1]
        best = None
        for (x1, y1) in pts:
            if x1 <= x0:
                continue
            s = Fraction(y1 - y0, x1 - x0)
            if best is None or s < best[0] or (s == best[0] and x1 > best[1][0]):
                best = (s, (x1, y1))
        hull.append(best[1])
    return hull


class TestStructure:
    def test_base_field(self, Z3):
        assert (Z3.p, Z3.e, Z3.f, Z3.degree) == (3, 1, 1, 1)

    def test_eisenstein_extension(self, Z3):
        S = extend_field(Z3, [3, 0, 1], "eisenstein")  # X^2 + 3
        assert (S.e, S.f) == (2, 1)
        pi = S.generator()
        assert pi.valuation() == Fraction(1, 2)
        # base elements embed losslessly
        x = Z3.from_int(7)
        assert S.embed(x).agrees_with(S.from_int(7))

    def test_unramified_extension(self, Z3):
        # X^2 + X + 2 has no root mod 3 (oracle: enumerate residues)
        assert all((r * r + r + 2) % 3 != 0 for r in range(3))
        S = extend_field(Z3, [2, 1, 1], "unramified")
        assert (S.e, S.f) == (1, 2)

    def test_eisenstein_rejects_bad_constant_term(self, Z3):
        with pytest.raises(CertificationError):
            extend_field(Z3, [9, 0, 1], "eisenstein")  # v(9) = 2

    def test_unramified_rejects_reducible(self, Z3):
        # X^2 - 1 = (X-1)(X+1) mod 3
        with pytest.raises(CertificationError):
            extend_field(Z3, [-1, 0, 1], "unramified")
        # X^2 has a repeated root
        with pytest.raises(CertificationError):
            extend_field(Z3, [0, 0, 1], "unramified")

    def test_two_step_ramified_tower(self, Z3_pi):
        # relative Eisenstein over Q_3(zeta_3): X^3 - pi
        pi = Z3_pi.generator()
        T = extend_field(Z3_pi, [-pi, Z3_pi.zero(), Z3_pi.zero(), Z3_pi.one()],
                         "eisenstein")
        assert (T.e, T.f) == (6, 1)
        assert T.generator().valuation() == Fraction(1, 6)
        assert T.uniformizer().valuation() == Fraction(1, 6)


class TestArithmetic:
    def test_add_zero(self, Z3):
        x = Z3.from_int(17)
        assert arith("add", x, Z3.zero()) == x

    def test_div_one_quarter(self, Z3):
        # oracle: extended Euclid, 4 * 61 == 1 mod 81
        Z3s = Qp(3, 4)
        q = arith("div", Z3s.one(), Z3s.from_int(4))
        assert pow(4, -1, 81) == 61
        assert q.coeffs[0] % 81 == 61

    def test_div_by_zero(self, Z3):
        with pytest.raises(ZeroDivisionError):
            arith("div", Z3.one(), Z3.zero())

    def test_fraction_roundtrip(self, Z3):
        x = Z3.from_fraction(Fraction(22, 7))
        assert (x * Z3.from_int(7)).agrees_with(Z3.from_int(22))

    def test_negative_valuation(self, Z3):
        x = Z3.from_fraction(Fraction(1, 3))
        assert x.valuation() == -1
        assert (x * Z3.from_int(3)).agrees_with(Z3.one())

    def test_division_loss_recorded(self, Z3):
        x = Z3.one() / Z3.from_int(9)
        assert x.known <= Z3.cap - 4  # 2*v(9) = 4 digits

    def test_tower_inverse(self, Z3_pi):
        pi = Z3_pi.generator()
        y = pi + Z3_pi.from_int(2)  # a unit
        assert (y * y.inverse()).agrees_with(Z3_pi.one())
        z = pi * Z3_pi.from_int(5)  # valuation 1/2
        assert (z / z).agrees_with(Z3_pi.one())
        assert (Z3_pi.one() / z).valuation() == Fraction(-1, 2)


class TestValuation:
    def test_v_p(self, Z3):
        assert valuation(Z3.from_int(3)) == 1
        assert valuation(Z3.from_int(1)) == 0
        assert valuation(Z3.zero()).is_infinite

    def test_v_pi(self, Z3):
        S = extend_field(Z3, [3, 0, 1], "eisenstein")
        assert valuation(S.generator()) == Fraction(1, 2)

    def test_v_zeta3_minus_1(self, Z3_pi):
        # root of X^2+3X+3; Newton polygon gives valuation 1/2
        pi = Z3_pi.generator()
        assert valuation(pi) == Fraction(1, 2)
        assert poly_eval([3, 3, 1], pi).is_zero()

    def test_multiplicativity(self, Z3_pi):
        rng = random.Random(7)
        for _ in range(20):
            x = Z3_pi.random_element(rng)
            y = Z3_pi.random_element(rng)
            if x.is_zero() or y.is_zero():
                continue
            assert valuation(x * y) == valuation(x) + valuation(y)


class TestTeichmuller:
    def test_lift_of_one(self, Z3):
        assert teichmuller_lift(Z3, 1).agrees_with(Z3.one())

    def test_lift_of_zero(self, Z3):
        assert teichmuller_lift(Z3, 0).is_zero()

    def test_p5_lift_of_two(self):
        # oracle: iterate x -> x^5 mod 25 to its fixed point
        x = 2
        for _ in range(10):
            x = pow(x, 5, 25)
        assert x == 7
        Z5 = Qp(5, 2)
        w = teichmuller_lift(Z5, 2)
        assert w.coeffs[0] % 25 == 7

    def test_fixed_point_property(self, Z3):
        S = extend_field(Z3, [2, 1, 1], "unramified")
        rng = random.Random(1)
        for _ in range(25):
            res = (rng.randrange(3), rng.randrange(3))
            w = teichmuller_lift(S, res)
            assert (w ** 9).agrees_with(w)
            assert S.residue_vector(w) == res if not w.is_zero() else True


class TestNewtonPolygon:
    def test_eisenstein_quadratic(self, Z3):
        segs = newton_polygon([Z3.from_int(3), Z3.from_int(3), Z3.one()])
        assert segs == [(RationalValuation(Fraction(1, 2)), 2)]

    def test_split_quadratic(self, Z3):
        # X^2 - 4X + 3 has roots 1 and 3
        segs = newton_polygon([Z3.from_int(3), Z3.from_int(-4), Z3.one()])
        assert segs == [(RationalValuation(0), 1), (RationalValuation(1), 1)]

    def test_zero_polynomial(self, Z3):
        with pytest.raises(PadicError):
            newton_polygon([Z3.zero(), Z3.zero()])

    def test_against_brute_hull(self, Z3):
        rng = random.Random(5)
        for _ in range(30):
            coeffs = [Z3.from_int(rng.randrange(1, 200) * 3 ** rng.randrange(4))
                      for _ in range(rng.randrange(2, 7))]
            segs = newton_polygon(coeffs)
            pts = [(i, Fraction(v.numerator, v.denominator))
                   for i, c in enumerate(coeffs)
                   for v in [c.valuation()] if v.finite]
            hull = brute_hull(pts)
            expected = [(RationalValuation(-Fraction(y1 - y0, x1 - x0)), x1 - x0)
                        for (x0, y0), (x1, y1) in zip(hull, hull[1:])]
            expected.reverse()
            assert segs == expected

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(1, 500), min_size=2, max_size=5),
           st.lists(st.integers(1, 500), min_size=2, max_size=5))
    def test_product_slopes_are_multiset_union(self, a, b):
        Z = Qp(3, 30)
        fa = [Z.from_int(c) for c in a]
        fb = [Z.from_int(c) for c in b]
        prod = [Z.zero() for _ in range(len(a) + len(b) - 1)]
        for i, x in enumerate(fa):
            for j, y in enumerate(fb):
                prod[i + j] = prod[i + j] + x * y
        def multiset(segs):
            out = {}
            for v, length in segs:
                out[(v.numerator, v.denominator)] = out.get((v.numerator, v.denominator), 0) + length
            return out
        ma, mb, mp = multiset(newton_polygon(fa)), multiset(newton_polygon(fb)), multiset(newton_polygon(prod))
        combined = dict(ma)
        for k, n in mb.items():
            combined[k] = combined.get(k, 0) + n
        assert mp == combined


class TestHensel:
    def test_sqrt4_seed1(self, Z3):
        # Newton from seed 1 lands on -2 (79 mod 81)
        r = hensel_root([Z3.from_int(-4), Z3.zero(), Z3.one()], Z3.one())
        assert r.agrees_with(Z3.from_int(-2))
        assert r.coeffs[0] % 81 == 79

    def test_linear(self, Z3):
        r = hensel_root([Z3.from_int(-5), Z3.one()], Z3.from_int(5))
        assert r.agrees_with(Z3.from_int(5))

    def test_condition_violated(self, Z3):
        with pytest.raises(CertificationError):
            hensel_root([Z3.from_int(-3), Z3.zero(), Z3.one()], Z3.one())

    def test_residual_vanishes(self, Z3_pi):
        pi = Z3_pi.generator()
        poly = [Z3_pi.from_int(3), Z3_pi.from_int(3), Z3_pi.one()]
        seed = pi + Z3_pi.from_int(9)  # perturbed root; still in the Newton ball
        r = hensel_root(poly, seed)
        assert poly_eval(poly, r).valuation() >= Z3_pi.N

    def test_deflation(self, Z3):
        # (X-1)(X-2) deflated at 1 leaves X-2
        poly = [Z3.from_int(2), Z3.from_int(-3), Z3.one()]
        q = poly_deflate(poly, Z3.one())
        assert q[0].agrees_with(Z3.from_int(-2)) and q[1].agrees_with(Z3.one())


class TestRingAxioms:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 3**10 - 1), st.integers(0, 3**10 - 1), st.integers(0, 3**10 - 1))
    def test_associativity_distributivity(self, a, b, c):
        Z = Qp(3, 12)
        x, y, z = Z.from_int(a), Z.from_int(b), Z.from_int(c)
        assert ((x * y) * z).agrees_with(x * (y * z))
        assert (x * (y + z)).agrees_with(x * y + x * z)

    def test_tower_ring_axioms(self, Z3_pi):
        rng = random.Random(11)
        for _ in range(25):
            x, y, z = (Z3_pi.random_element(rng) for _ in range(3))
            assert ((x * y) * z).agrees_with(x * (y * z))
            assert (x * (y + z)).agrees_with(x * y + x * z)
            assert (x + y).agrees_with(y + x)

    def test_ultrametric(self, Z3_pi):
        rng = random.Random(13)
        for _ in range(40):
            x, y = Z3_pi.random_element(rng), Z3_pi.random_element(rng)
            vx, vy, vs = x.valuation(), y.valuation(), (x + y).valuation()
            assert vs >= min(vx, vy)
            if vx != vy:
                assert vs == min(vx, vy)


class TestSerialization:
    def test_roundtrip_base(self, Z3):
        x = Z3.from_fraction(Fraction(22, 9))
        y = coeff_from_text(Z3, coeff_to_text(x))
        assert x.agrees_with(y, Z3.N - x.shift)

    def test_roundtrip_tower(self, Z3_pi):
        rng = random.Random(3)
        for _ in range(10):
            x = Z3_pi.random_element(rng)
            y = coeff_from_text(Z3_pi, coeff_to_text(x))
            assert coeff_to_text(y) == coeff_to_text(x)
