"""Subscheme distance, translates, stabilizer probe, scans, covering step."""

import random
from fractions import Fraction

import pytest

from padicfg.padic import INF, PadicError, Qp, RationalValuation
from padicfg.series import TruncatedSeries
from padicfg.fgroup import FormalGroupLaw, standard_group
from padicfg.torsion import GaloisElement, division_points, galois_orbit
from padicfg.scheme import (
    FormalSubscheme,
    covering_step,
    diagonal_subscheme,
    distance,
    epsilon_scan,
    graph_subscheme,
    membership_floor,
    on_scheme,
    stabilizer_probe,
    translate,
)

D = 12


@pytest.fixture(scope="module")
def Gm3():
    return standard_group("multiplicative", Qp(3, 24), D)


@pytest.fixture(scope="module")
def Gm3sq(Gm3):
    return FormalGroupLaw.product([Gm3, Gm3])


@pytest.fixture(scope="module")
def diag(Gm3):
    return diagonal_subscheme(Gm3)


@pytest.fixture(scope="module")
def graph_h(Gm3):
    Z3 = Gm3.structure
    h = TruncatedSeries.from_terms(Z3, 1, D, {(1,): 1, (2,): 1})
    return graph_subscheme(h, Gm3, Gm3, label="graph(X+X^2)")


def chart_pairs(Gm3, level):
    """All torsion pairs via the exact unit chart, as raw coordinates."""
    pts, tower = division_points(FormalGroupLaw.product([Gm3, Gm3]), level)
    return pts, tower


class TestDistance:
    def test_diagonal_member(self, diag, Gm3):
        pts, tower = chart_pairs(Gm3, 1)
        for q in pts:
            if (q.coords[0] - q.coords[1]).is_zero():
                assert distance(diag, q).is_infinite

    def test_diagonal_off_point(self, diag, Gm3):
        pts, tower = chart_pairs(Gm3, 1)
        q = next(q for q in pts
                 if q.coords[0].valuation() == Fraction(1, 2) and q.coords[1].is_zero())
        assert distance(diag, q) == Fraction(1, 2)

    def test_empty_generators_rejected(self, Gm3):
        with pytest.raises(PadicError):
            FormalSubscheme(Gm3, [])


class TestTranslate:
    def test_translate_by_zero(self, diag, Gm3):
        z = (Gm3.structure.zero(), Gm3.structure.zero())
        T = translate(diag, z)
        assert len(T.generators) == 1
        d = T.generators[0] - diag.generators[0]
        assert all(c.is_zero() for c in d.coeffs.values())

    def test_spec_example_one_dim(self, Gm3):
        # X = {Y - a} in G_m, Q = b: generator becomes Y(1+b) + (b-a)
        Z3 = Gm3.structure
        a, b = Z3.from_int(3), Z3.from_int(6)
        X = FormalSubscheme(Gm3, [TruncatedSeries.from_terms(Z3, 1, D, {(1,): 1}) - a])
        T = translate(X, (b,))
        g = T.generators[0]
        assert g.coefficient((1,)).agrees_with(Z3.one() + b)
        assert g.coefficient((0,)).agrees_with(b - a)

    def test_membership_transport(self, graph_h, Gm3):
        pts, tower = chart_pairs(Gm3, 2)
        rng = random.Random(4)
        sample = rng.sample(pts, 10)
        for q in sample:
            Q = rng.choice(pts)
            T = translate(graph_h, Q)
            s, err = graph_h.ambient.add_points(q.coords, Q.coords)
            assert err.is_infinite  # exact chart
            assert distance(T, q.coords) == distance(graph_h, s)

    def test_translate_action_on_members(self, graph_h, Gm3):
        pts, _ = chart_pairs(Gm3, 1)
        rng = random.Random(7)
        for _ in range(5):
            Q1, Q2 = rng.choice(pts), rng.choice(pts)
            T12 = translate(translate(graph_h, Q1), Q2)
            s, _ = graph_h.ambient.add_points(Q1.coords, Q2.coords)
            T = translate(graph_h, s)
            for q in pts:
                assert on_scheme(T12, q) == on_scheme(T, q)

    def test_requires_positive_valuation(self, diag, Gm3):
        with pytest.raises(PadicError):
            translate(diag, (Gm3.structure.one(), Gm3.structure.zero()))


class TestStabilizer:
    def test_diagonal_stabilizer(self, diag, Gm3):
        probe = stabilizer_probe(diag, 2)
        assert len(probe) == 9
        for z in probe:
            assert (z.coords[0] - z.coords[1]).is_zero()

    def test_axis_scheme(self, Gm3, Gm3sq):
        Z3 = Gm3.structure
        X = FormalSubscheme(Gm3sq, [TruncatedSeries.from_terms(Z3, 2, D, {(1, 0): 1})])
        probe = stabilizer_probe(X, 1)
        assert len(probe) == 3
        assert all(z.coords[0].is_zero() for z in probe)

    def test_identity_point_scheme(self, Gm3, Gm3sq):
        Z3 = Gm3.structure
        X = FormalSubscheme(Gm3sq, [
            TruncatedSeries.from_terms(Z3, 2, D, {(1, 0): 1}),
            TruncatedSeries.from_terms(Z3, 2, D, {(0, 1): 1}),
        ])
        probe = stabilizer_probe(X, 1)
        assert len(probe) == 1 and probe[0].is_zero()

    def test_probe_subset_of_members_and_group(self, graph_h):
        # through the identity: probe elements lie on X and are closed under +
        probe = stabilizer_probe(graph_h, 1)
        for z in probe:
            assert on_scheme(graph_h, z)
        amb = graph_h.ambient
        for a in probe:
            for b in probe:
                s, err = amb.add_points(a.coords, b.coords)
                assert any((s[0] - c.coords[0]).is_zero(8) and (s[1] - c.coords[1]).is_zero(8)
                           for c in probe)


def brute_force_scan(X, pairs, floor):
    """Independent oracle: evaluate every generator term-by-term per pair."""
    members, gaps = [], []
    for q in pairs:
        vals = []
        for g in X.generators:
            acc = q.coords[0].structure.zero()
            for key, c in g.coeffs.items():
                term = q.coords[0].structure.coerce(c)
                for i, e in enumerate(key):
                    for _ in range(e):
                        term = term * q.coords[i]
                acc = acc + term
            vals.append(acc.valuation())
        d = min(vals, key=lambda v: v._as_ext())
        if d.is_infinite or d >= floor:
            members.append(q)
        else:
            gaps.append(d)
    min_gap = min(gaps, key=lambda v: v._as_ext()) if gaps else INF
    closest = max(gaps, key=lambda v: v._as_ext()) if gaps else INF
    return members, min_gap, closest


class TestEpsilonScan:
    def test_diagonal_levels2(self, diag, Gm3):
        rep = epsilon_scan(diag, 2, RationalValuation(Fraction(1, 2)))
        assert sum(r.member_count for r in rep.rows) == 9
        assert rep.min_gap_through(2) == Fraction(1, 6)
        # member counts grow like p^level
        assert rep.rows[0].member_count == 1
        assert sum(r.member_count for r in rep.rows[:2]) == 3

    def test_diagonal_against_brute_force(self, diag, Gm3):
        pts, tower = chart_pairs(Gm3, 2)
        members, min_gap, closest = brute_force_scan(diag, pts, membership_floor(tower))
        rep = epsilon_scan(diag, 2, RationalValuation(0))
        assert len(members) == sum(r.member_count for r in rep.rows)
        assert min_gap == rep.min_gap_through(2)
        assert closest == rep.closest_through(2)

    def test_graph_closest_approach_stabilizes(self, graph_h):
        # the Tate-Voloch statistic: nonmembers never creep closer than
        # valuation 1 to the graph, at any computed level
        rep2 = epsilon_scan(graph_h, 2, RationalValuation(0))
        rep3 = epsilon_scan(graph_h, 3, RationalValuation(0))
        assert rep2.closest_through(2) == rep3.closest_through(3) == 1
        # the literal valuation minimum shrinks with the level, as it must
        assert rep2.min_gap_through(2) == Fraction(1, 6)
        assert rep3.min_gap_through(3) == Fraction(1, 18)
        # member count stays bounded
        assert sum(r.member_count for r in rep3.rows) == 1

    def test_graph_against_brute_force_level3(self, graph_h, Gm3):
        pts, tower = chart_pairs(Gm3, 3)
        members, min_gap, closest = brute_force_scan(graph_h, pts, membership_floor(tower))
        rep = epsilon_scan(graph_h, 3, RationalValuation(0))
        assert len(members) == sum(r.member_count for r in rep.rows)
        assert min_gap == rep.min_gap_through(3)
        assert closest == rep.closest_through(3)

    def test_infinite_threshold_empties_near(self, diag):
        rep = epsilon_scan(diag, 1, INF)
        assert all(r.near_count == 0 for r in rep.rows)

    def test_json_lines_shape(self, diag):
        rep = epsilon_scan(diag, 1, RationalValuation(0))
        lines = rep.json_lines()
        assert lines[0].startswith('{"floor"') or "schema" in lines[0]
        assert len(lines) == 1 + len(rep.rows)


class TestGaloisInvariance:
    def test_distance_invariant_under_orbit(self, graph_h, Gm3):
        pts, tower = chart_pairs(Gm3, 2)
        rng = random.Random(11)
        count = 0
        while count < 60:
            q = rng.choice(pts)
            u = rng.choice([1, 2, 4, 5, 7, 8])
            g = GaloisElement(u)
            orb = galois_orbit(q, g)
            assert distance(graph_h, orb) == distance(graph_h, q)
            count += 1

    def test_translate_by_galois_difference(self, graph_h, Gm3):
        pts, _ = chart_pairs(Gm3, 2)
        rng = random.Random(13)
        amb = graph_h.ambient
        for _ in range(10):
            q = rng.choice(pts)
            g = GaloisElement(rng.choice([2, 4, 5]))
            orb = galois_orbit(q, g)
            n, _err = amb.neg_point(q.coords)
            diffc, _err2 = amb.add_points(orb.coords, n)
            T = translate(graph_h, diffc) if all(
                c.valuation() > 0 or c.is_zero() for c in diffc) else None
            if T is None:
                continue
            assert not (distance(T, q) < distance(graph_h, q))


class TestCoveringStep:
    def test_graph_covering(self, graph_h):
        rep = covering_step(graph_h, 1, verify_level=2)
        assert len(rep.intersections) == 8
        assert rep.verified

    def test_intersection_member_counts_stable(self, graph_h, Gm3):
        rep2 = covering_step(graph_h, 1, verify_level=2)
        pts3, _ = chart_pairs(Gm3, 3)
        for i, inter in enumerate(rep2.intersections):
            count3 = sum(1 for q in pts3 if on_scheme(inter, q))
            assert count3 <= max(rep2.per_intersection_members[i], 1)
            assert count3 == rep2.per_intersection_members[i]

    def test_diagonal_covering_rejected(self, diag):
        with pytest.raises(PadicError) as err:
            covering_step(diag, 1)
        assert "stabilizer" in str(err.value)

    def test_identity_point_covering(self, Gm3, Gm3sq):
        Z3 = Gm3.structure
        X = FormalSubscheme(Gm3sq, [
            TruncatedSeries.from_terms(Z3, 2, D, {(1, 0): 1}),
            TruncatedSeries.from_terms(Z3, 2, D, {(0, 1): 1}),
        ])
        rep = covering_step(X, 1, verify_level=2)
        assert rep.verified
        assert all(c <= 1 for c in rep.per_intersection_members)
