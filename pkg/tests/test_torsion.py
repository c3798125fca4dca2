"""Division points, towers, Galois action and the descent procedure."""

from fractions import Fraction

import pytest

from padicfg.padic import PadicError, CertificationError, Qp, newton_polygon
from padicfg.series import TruncatedSeries
from padicfg.fgroup import FormalGroupLaw, standard_group
from padicfg.torsion import (
    BoxallDomainError,
    GaloisElement,
    TorsionPoint,
    boxall_descent,
    division_points,
    galois_orbit,
    get_table,
    torsion_table_text,
)

D = 12


@pytest.fixture(scope="module")
def Gm3():
    return standard_group("multiplicative", Qp(3, 24), D)


@pytest.fixture(scope="module")
def Gm5():
    return standard_group("multiplicative", Qp(5, 24), D)


@pytest.fixture(scope="module")
def Gm2():
    return standard_group("multiplicative", Qp(2, 24), D)


@pytest.fixture(scope="module")
def LT3():
    return standard_group("lubin_tate", Qp(3, 24), 16, frobenius=[0, 3, 0, 1])


def int_poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def int_poly_divexact(a, b):
    """Exact division in Z[X]; oracle helper for division polynomials."""
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for k in range(len(q) - 1, -1, -1):
        c = a[k + len(b) - 1] // b[-1]
        assert c * b[-1] == a[k + len(b) - 1]
        q[k] = c
        for j, y in enumerate(b):
            a[k + j] -= c * y
    assert all(x == 0 for x in a)
    return q


def cyclotomic_division_poly(p, r):
    """Phi_{p^r}(1+X) = [p^r](X) / [p^(r-1)](X) for the multiplicative law."""
    from math import comb
    def mult_pk(k):
        n = p ** k
        return [comb(n, j) for j in range(1, n + 1)]  # [p^k](X)/X * X -> coeffs of X^1..X^n shifted
    num = [0] + mult_pk(r)
    den = [0] + mult_pk(r - 1)
    return int_poly_divexact(num[1:], den[1:])  # divide [p^r]/X by [p^(r-1)]/X


class TestDivisionPoints:
    def test_gm3_level1(self, Gm3):
        pts, tower = division_points(Gm3, 1)
        assert len(pts) == 3
        assert (tower.e, tower.f) == (2, 1)
        nonzero = [p for p in pts if not p.is_zero()]
        assert all(p.coordinate().valuation() == Fraction(1, 2) for p in nonzero)
        assert all(p.level == 1 for p in nonzero)

    def test_level_zero(self, Gm3):
        pts, _ = division_points(Gm3, 0)
        assert len(pts) == 1 and pts[0].is_zero()

    def test_gm3_level2_against_newton_oracle(self, Gm3):
        pts, tower = division_points(Gm3, 2)
        assert len(pts) == 9
        exact2 = [p for p in pts if p.level == 2]
        assert len(exact2) == 6
        # oracle: Newton polygon of Phi_9(1+X) over Z_3, computed from
        # integer binomial arithmetic with no tower involved
        Z3 = Qp(3, 24)
        phi = cyclotomic_division_poly(3, 2)
        segs = newton_polygon([Z3.from_int(c) for c in phi])
        assert len(segs) == 1 and segs[0][1] == 6
        expected_v = segs[0][0]
        assert expected_v == Fraction(1, 6)
        assert all(p.coordinate().valuation() == expected_v for p in exact2)

    @pytest.mark.parametrize("p,r", [(3, 1), (3, 2), (5, 1), (5, 2),
                                     (2, 1), (2, 2), (2, 3)])
    def test_valuation_law(self, p, r, request):
        law = {3: "Gm3", 5: "Gm5", 2: "Gm2"}[p]
        G = request.getfixturevalue(law)
        pts, _ = division_points(G, r)
        assert len(pts) == p ** r
        exact = [q for q in pts if q.level == r]
        assert len(exact) == p ** r - p ** (r - 1)
        want = Fraction(1, p ** (r - 1) * (p - 1))
        assert all(q.coordinate().valuation() == want for q in exact)

    def test_kill_levels_exact(self, Gm3):
        pts, _ = division_points(Gm3, 2)
        table = get_table(Gm3)
        for q in pts:
            assert table.exact_level_of(q.coordinate(), 2) == q.level

    def test_lubin_tate_levels(self, LT3):
        pts, tower = division_points(LT3, 2)
        assert len(pts) == 9
        assert tower.e == 6
        for q in pts:
            if q.level == 1:
                assert q.coordinate().valuation() == Fraction(1, 2)
            if q.level == 2:
                assert q.coordinate().valuation() == Fraction(1, 6)

    def test_additive_rejected(self):
        Ga = standard_group("additive", Qp(3, 24), 8)
        with pytest.raises(CertificationError):
            division_points(Ga, 1)

    def test_from_log_height2_rejected(self):
        Z3 = Qp(3, 24)
        log = TruncatedSeries.from_terms(Z3, 1, 12, {(1,): 1, (9,): Fraction(1, 3)})
        H = standard_group("from_log", Z3, 12, log_series=log)
        with pytest.raises(CertificationError):
            division_points(H, 1)

    def test_product_counts(self, Gm3):
        P2 = FormalGroupLaw.product([Gm3, Gm3])
        pts, tower = division_points(P2, 1)
        assert len(pts) == 9
        assert sum(1 for q in pts if q.level == 0) == 1
        assert sum(1 for q in pts if q.level == 1) == 8

    def test_table_export(self, Gm3):
        pts, tower = division_points(Gm3, 1)
        text = torsion_table_text(pts, tower)
        assert "level 1" in text and "tower" in text


class TestGaloisOrbit:
    def test_identity(self, Gm3):
        pts, _ = division_points(Gm3, 1)
        P = next(q for q in pts if q.level == 1)
        assert galois_orbit(P, GaloisElement(1)) is P

    def test_u2_swaps_level1(self, Gm3):
        pts, _ = division_points(Gm3, 1)
        nz = [q for q in pts if q.level == 1]
        P = nz[0]
        Q = galois_orbit(P, GaloisElement(2))
        assert Q in nz and Q is not P
        # oracle: [2](P) = (1+P)^2 - 1 in the unit chart
        tower = P.tower
        direct = (tower.one() + P.coordinate()) ** 2 - tower.one()
        assert (Q.coordinate() - direct).is_zero(tower.N - 2)

    def test_non_unit_rejected(self, Gm3):
        pts, _ = division_points(Gm3, 1)
        with pytest.raises(PadicError):
            galois_orbit(pts[0], GaloisElement(3))

    def test_action_property(self, Gm3):
        pts, _ = division_points(Gm3, 2)
        table = get_table(Gm3)
        zero = next(q for q in pts if q.is_zero())
        for u, w in [(2, 5), (4, 7), (5, 2)]:
            for P in pts[:6]:
                lhs = galois_orbit(galois_orbit(P, GaloisElement(u)), GaloisElement(w))
                rhs = galois_orbit(P, GaloisElement(u * w))
                assert lhs is rhs
        assert galois_orbit(zero, GaloisElement(2)) is zero

    def test_orbit_on_lubin_tate(self, LT3):
        pts, _ = division_points(LT3, 2)
        exact2 = [q for q in pts if q.level == 2]
        P = exact2[0]
        Q = galois_orbit(P, GaloisElement(2))
        assert Q.level == 2 and Q is not P

    def test_orbit_product(self, Gm3):
        P2 = FormalGroupLaw.product([Gm3, Gm3])
        pts, _ = division_points(P2, 1)
        P = next(q for q in pts if q.level == 1)
        Q = galois_orbit(P, GaloisElement(2))
        assert Q.level == 1


class TestBoxall:
    def test_gm3_level2_all_points(self, Gm3):
        pts, _ = division_points(Gm3, 2)
        for P in (q for q in pts if q.level == 2):
            g, witness = boxall_descent(P, 1)
            assert g.u % 9 == 4
            assert witness.level == 1

    def test_oracle_value(self, Gm3):
        # direct cyclotomic oracle: s(zeta) = zeta^4, witness = zeta^3-part
        pts, tower = division_points(Gm3, 2)
        P = next(q for q in pts if q.level == 2)
        g, witness = boxall_descent(P, 1)
        one = tower.one()
        expect = (one + P.coordinate()) ** (g.u - 1) - one
        # (1+P)^(u-1) is a primitive third root of unity shifted by 1... the
        # witness is [u]P - P = (1+P)^u / (1+P) - 1 = (1+P)^(u-1) - 1
        assert (witness.coordinate() - expect).is_zero(tower.N - 2)

    def test_lubin_tate_level2(self, LT3):
        pts, _ = division_points(LT3, 2)
        for P in (q for q in pts if q.level == 2):
            g, witness = boxall_descent(P, 1)
            assert witness.level == 1

    def test_gm3_level3_chain(self, Gm3):
        pts, _ = division_points(Gm3, 3)
        exact3 = [q for q in pts if q.level == 3]
        assert len(exact3) == 18
        g, witness = boxall_descent(exact3[0], 1)
        assert witness.level == 1
        # the chain uses s_2 = s_1^3; its character value is 4^3
        assert g.u % 27 == pow(4, 3, 27)

    def test_p2_r1_rejected(self, Gm2):
        pts, _ = division_points(Gm2, 2)
        P = next(q for q in pts if q.level == 2)
        with pytest.raises(PadicError):
            boxall_descent(P, 1)

    def test_level_not_above_r_rejected(self, Gm3):
        pts, _ = division_points(Gm3, 1)
        P = next(q for q in pts if q.level == 1)
        with pytest.raises(PadicError):
            boxall_descent(P, 1)

    def test_p2_level3_r2_outside_domain(self, Gm2):
        pts, _ = division_points(Gm2, 3)
        P = next(q for q in pts if q.level == 3)
        with pytest.raises(BoxallDomainError):
            boxall_descent(P, 2)

    def test_p2_level4_r2(self, Gm2):
        pts, _ = division_points(Gm2, 4)
        for P in (q for q in pts if q.level == 4):
            g, witness = boxall_descent(P, 2)
            assert witness.level == 2

    def test_gm5_level2(self, Gm5):
        pts, _ = division_points(Gm5, 2)
        exact2 = [q for q in pts if q.level == 2]
        assert len(exact2) == 20
        for P in exact2[:5]:
            g, witness = boxall_descent(P, 1)
            assert witness.level == 1
            assert g.u % 25 == 6
