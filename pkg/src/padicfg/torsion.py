"""Division points F[p^r] in explicit towers, Galois action, Boxall descent.

Torsion points are exact objects: roots of the exact multiplication-by-p
polynomial chain, certified by Eisenstein/Newton-polygon arguments when a
tower step is adjoined and refined by Hensel iteration to full working
precision.  Group operations on torsion evaluate the truncated law and then
snap to the exact table; every snap asserts that the series error bound
exceeds the largest valuation of a nonzero torsion difference, so a wrong
match is impossible at certified precision.

The multiplicative law short-circuits all of this through its exact unit
chart ((1+x)(1+y) - 1, powering, unit division).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .padic import (
    INF,
    BudgetError,
    CertificationError,
    InternalCheckError,
    PAdicNumber,
    PAdicStructure,
    PadicError,
    RationalValuation,
    coeff_to_text,
    extend_field,
    hensel_root,
    newton_polygon,
    poly_deflate,
    poly_derivative,
    poly_eval,
    val_min,
)
from .fgroup import FormalGroupLaw

TORSION_POINT_BUDGET = 2000


@dataclass(frozen=True, eq=False)
class TorsionPoint:
    """A torsion point with exact coordinates in an explicit tower."""
    group: FormalGroupLaw
    coords: tuple[PAdicNumber, ...]
    level: int
    tower: PAdicStructure

    def coordinate(self) -> PAdicNumber:
        if len(self.coords) != 1:
            raise PadicError("coordinate() is for one-dimensional points")
        return self.coords[0]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coords)

    def sort_key(self):
        return (self.level,) + tuple(c.digit_key() for c in self.coords)

    def min_valuation(self) -> RationalValuation:
        return val_min(INF, *(c.valuation() for c in self.coords))

    def __repr__(self):
        vs = ",".join(str(c.valuation()) for c in self.coords)
        return f"<torsion level={self.level} v=({vs})>"


@dataclass(frozen=True)
class GaloisElement:
    """An abelian Galois action: the character value u and a Frobenius power.

    On p-power torsion the action is P -> [u]P (cyclotomic / Lubin-Tate over
    Z_p); the Frobenius power acts on unramified (Teichmuller) coordinates.
    """
    u: int
    frobenius: int = 0

    def compose(self, other: "GaloisElement") -> "GaloisElement":
        return GaloisElement(self.u * other.u, self.frobenius + other.frobenius)


class BoxallDomainError(PadicError):
    """The descent instance lies outside the proof's domain (level < 2r)."""


class TorsionTable:
    """All of F[p^r] for a one-dimensional law, level by level.

    `levels[k]` lists the exact-level-k points; `chain[k]` is the generator
    used to define level k+1's fibers ([p] chain[k+1] = chain[k]).
    """

    def __init__(self, law: FormalGroupLaw, tower0: PAdicStructure | None = None):
        if law.dim != 1:
            raise PadicError("torsion tables are per one-dimensional factor")
        self.law = law
        self.tower = tower0 or law.structure
        if not self.tower.is_extension_of(law.structure):
            raise PadicError("tower must extend the law's base structure")
        self.mp = law.exact_mult_p_poly()
        if self.mp is None:
            raise CertificationError(
                "division-point construction needs an exact multiplication-by-p "
                "polynomial (series truncation cannot certify roots at this height)")
        h = law.height()
        if h.infinite_at_precision:
            raise CertificationError("group is not p-divisible (height infinite at precision)")
        self.height = h.value
        lead = law.structure.coerce(self.mp[-1])
        if len(self.mp) - 1 != law.structure.p ** self.height or not lead.is_unit():
            raise CertificationError(
                "exact [p] polynomial must be monic-unit of degree p^height")
        zero = TorsionPoint(law, (self.tower.zero(),), 0, self.tower)
        self.levels: list[list[TorsionPoint]] = [[zero]]
        self.chain: list[TorsionPoint] = [zero]

    # -- helpers ---------------------------------------------------------------

    def _embed_all(self, new_tower: PAdicStructure):
        self.tower = new_tower
        self.levels = [
            [TorsionPoint(p.group, tuple(new_tower.embed(c) for c in p.coords),
                          p.level, new_tower) for p in lev]
            for lev in self.levels
        ]
        self.chain = [
            TorsionPoint(p.group, tuple(new_tower.embed(c) for c in p.coords),
                         p.level, new_tower) for p in self.chain
        ]

    def points_through(self, r: int) -> list[TorsionPoint]:
        self.extend_to(r)
        out = [p for lev in self.levels[: r + 1] for p in lev]
        out.sort(key=TorsionPoint.sort_key)
        return out

    def max_separation(self, r: int) -> RationalValuation:
        """Largest valuation of a nonzero coordinate through level r.

        Distinct torsion points differ by a nonzero torsion value, so any
        approximation with error bound above this is unambiguous.
        """
        vals = [p.coordinate().valuation()
                for lev in self.levels[: r + 1] for p in lev if not p.is_zero()]
        if not vals:
            return RationalValuation(0)
        return max(vals, key=lambda v: v._as_ext())

    def _exact_mult_p(self, x: PAdicNumber) -> PAdicNumber:
        acc = x.structure.zero()
        for c in reversed(self.mp):
            acc = acc * x + x.structure.coerce(c)
        return acc

    def exact_level_of(self, x: PAdicNumber, max_iter: int) -> int:
        """Number of exact [p] applications needed to reach 0, or raise."""
        cur = x
        for k in range(max_iter + 1):
            if cur.is_zero(min(cur.known, x.structure.N) - 2):
                return k
            cur = self._exact_mult_p(cur)
        raise InternalCheckError("point is not killed by [p^r] within the budget")

    # -- snapping ---------------------------------------------------------------

    def _ambient(self, value: PAdicNumber) -> PAdicStructure:
        st = value.structure
        if st.is_extension_of(self.tower):
            return st
        if self.tower.is_extension_of(st):
            return self.tower
        raise PadicError("value lives outside the torsion tower")

    def resolve(self, value: PAdicNumber, err_bound: RationalValuation,
                max_level: int) -> TorsionPoint:
        """Snap an approximate coordinate to the unique matching table point.

        Certification: err_bound must strictly exceed the largest valuation
        of a nonzero torsion difference through max_level; then the true
        point is the only one within the bound.
        """
        self.extend_to(max_level)
        sep = self.max_separation(max_level)
        if not (err_bound > sep):
            raise InternalCheckError(
                f"cannot certify torsion snap: error bound {err_bound} <= separation {sep}")
        st = self._ambient(value)
        value = st.coerce(value)
        matches = []
        for lev in self.levels[: max_level + 1]:
            for pt in lev:
                d = (value - st.coerce(pt.coordinate())).valuation()
                if d > sep:
                    matches.append((pt, d))
        if len(matches) != 1:
            raise InternalCheckError(
                f"torsion snap matched {len(matches)} points; expected exactly one")
        return matches[0][0]

    # -- exact/snapped group operations -----------------------------------------

    def op_add(self, a: TorsionPoint, b: TorsionPoint) -> TorsionPoint:
        max_level = max(a.level, b.level)
        self.extend_to(max_level)
        law = self.law
        xa, xb = a.coordinate(), b.coordinate()
        st = self._ambient(xa if xa.structure.degree >= xb.structure.degree else xb)
        xa, xb = st.coerce(xa), st.coerce(xb)
        if law.tag == "multiplicative":
            one = st.one()
            val = (one + xa) * (one + xb) - one
            return self._lookup_exact(val, max_level)
        val, err = law.add_points((xa,), (xb,))
        return self.resolve(val[0], err, max_level)

    def op_neg(self, a: TorsionPoint) -> TorsionPoint:
        self.extend_to(a.level)
        law = self.law
        xa = a.coordinate()
        st = self._ambient(xa)
        xa = st.coerce(xa)
        if law.tag == "multiplicative":
            one = st.one()
            val = (one + xa).inverse() - one
            return self._lookup_exact(val, a.level)
        val, err = law.neg_point((xa,))
        return self.resolve(val[0], err, a.level)

    def op_sub(self, a: TorsionPoint, b: TorsionPoint) -> TorsionPoint:
        return self.op_add(a, self.op_neg(b))

    def op_mult(self, m: int, a: TorsionPoint) -> TorsionPoint:
        self.extend_to(a.level)
        law = self.law
        xa = a.coordinate()
        st = self._ambient(xa)
        xa = st.coerce(xa)
        if law.tag == "multiplicative":
            one = st.one()
            val = (one + xa) ** m - one
            return self._lookup_exact(val, a.level)
        m = m % (law.structure.p ** a.level)
        if m == 0:
            return self.levels[0][0]
        val, err = law.mult_point(m, (xa,))
        return self.resolve(val[0], err, a.level)

    def _lookup_exact(self, value: PAdicNumber, max_level: int) -> TorsionPoint:
        """Exact-coordinate lookup (unit-chart results carry no series error)."""
        st = self._ambient(value)
        value = st.coerce(value)
        for lev in self.levels[: max_level + 1]:
            for pt in lev:
                if (value - st.coerce(pt.coordinate())).is_zero(min(value.known, st.N) - 2):
                    return pt
        raise InternalCheckError("exact chart value is not in the torsion table")

    # -- construction -------------------------------------------------------------

    def extend_to(self, r: int):
        p = self.law.structure.p
        while len(self.levels) - 1 < r:
            k = len(self.levels)
            if p ** (self.height * k) > TORSION_POINT_BUDGET:
                raise BudgetError(
                    f"torsion budget exceeded: p^(h*{k}) > {TORSION_POINT_BUDGET}")
            self._build_level(k)

    def _build_level(self, k: int):
        p = self.law.structure.p
        chart = self.law.tag == "multiplicative"
        prev_exact = list(self.levels[k - 1])
        new_points: list[PAdicNumber] = []
        # fiber over the chain generator first; it may extend the tower
        gen_prev = self.chain[k - 1]
        first_roots = self._solve_fiber(gen_prev.coordinate(), k, is_first=True)
        gen_k = first_roots[0]
        new_points.extend(first_roots)
        # refresh embeddings after a possible extension
        prev_exact = [self.levels[k - 1][i] for i in range(len(self.levels[k - 1]))]
        if k == 1:
            fibers_left = []
        else:
            fibers_left = [q for q in prev_exact
                           if not (q.coordinate() - self.chain[k - 1].coordinate()).is_zero(self.tower.N - 2)]
        for q in fibers_left:
            roots = self._solve_fiber(q.coordinate(), k, is_first=False,
                                      fiber_base=q, gen_k=gen_k)
            new_points.extend(roots)
        pts = []
        seen = []
        for x in new_points:
            if any((x - y).is_zero(self.tower.N - 2) for y in seen):
                raise InternalCheckError("duplicate torsion root found")
            seen.append(x)
            lvl = self.exact_level_of(x, k)
            if lvl != k:
                raise InternalCheckError(
                    f"constructed point has exact level {lvl}, expected {k}")
            pts.append(TorsionPoint(self.law, (x,), k, self.tower))
        expected = (p ** self.height - 1) * (p ** (self.height * (k - 1))) if k >= 1 else 1
        if len(pts) != expected:
            raise InternalCheckError(
                f"level {k}: found {len(pts)} points, expected {expected}")
        pts.sort(key=TorsionPoint.sort_key)
        self.levels.append(pts)
        gen_lifted = next(pt for pt in pts
                          if (pt.coordinate() - self.tower.embed(gen_k)).is_zero(self.tower.N - 2))
        self.chain.append(gen_lifted)

    # -- fiber solving --------------------------------------------------------------

    def _fiber_poly(self, q_coord: PAdicNumber) -> list[PAdicNumber]:
        T = self.tower
        poly = [T.embed(self.law.structure.coerce(c)) for c in self.mp]
        poly[0] = poly[0] - T.coerce(q_coord)
        return poly

    def _solve_fiber(self, q_coord: PAdicNumber, k: int, *, is_first: bool,
                     fiber_base: TorsionPoint | None = None,
                     gen_k: PAdicNumber | None = None) -> list[PAdicNumber]:
        """All solutions of [p](X) = q, as exact tower elements."""
        T = self.tower
        poly = self._fiber_poly(q_coord)
        roots: list[PAdicNumber] = []
        work = [c for c in poly]
        if k == 1:
            # X divides [p]; the zero root carries level 0
            if not work[0].is_zero():
                raise InternalCheckError("[p] - 0 must vanish at X = 0")
            work = work[1:]
        target = len(work) - 1
        # exact sibling generation for the unit chart
        def chart_siblings(x0):
            out = []
            one = self.tower.one()
            for t in self.levels[1]:
                val = (one + self.tower.coerce(x0)) * (one + t.coordinate()) - one
                out.append(val)
            return out

        # 1) first root of this fiber
        if is_first:
            x0, work = self._first_root_of_first_fiber(work, k)
        else:
            x0 = self._first_root_known_fiber(work, k, fiber_base, gen_k)
            work = poly_deflate(work, x0)
        roots.append(x0)
        T = self.tower
        # 2) remaining roots by sibling seeds + deflation
        while len(roots) < target:
            seed_pool = []
            if self.law.tag == "multiplicative" and k >= 1 and len(self.levels) > 1:
                seed_pool = [("exact", v) for v in chart_siblings(roots[0])]
            elif len(self.levels) > 1:
                for t in self.levels[1]:
                    val, err = self.law.add_points((T.coerce(roots[0]),),
                                                   (t.coordinate(),))
                    seed_pool.append(("approx", val[0], err))
            elif k == 1:
                for j in range(2, len(work) + 2):
                    val, err = self.law.mult_point(j, (T.coerce(roots[0]),))
                    seed_pool.append(("approx", val[0], err))
            new_root = None
            for entry in seed_pool:
                if entry[0] == "exact":
                    cand = entry[1]
                    if poly_eval(work, cand).is_zero(T.N - 2):
                        if all(not (cand - r).is_zero(T.N - 2) for r in roots):
                            new_root = cand
                            break
                else:
                    cand = self._try_hensel(work, entry[1])
                    if cand is not None and all(not (cand - r).is_zero(T.N - 2) for r in roots):
                        new_root = cand
                        break
            if new_root is None:
                new_root = self._search_root(work, exclude=roots)
            if new_root is None:
                raise CertificationError(
                    "fiber root neither certifiably irreducible nor splittable at precision")
            roots.append(new_root)
            work = poly_deflate(work, new_root)
        return roots

    def _first_root_of_first_fiber(self, work, k):
        """Find one root, extending the tower when the factor is irreducible."""
        T = self.tower
        if len(work) == 2:  # linear
            root = -(work[0] / work[1])
            return root, []
        segs = newton_polygon(work)
        if len(segs) == 1:
            w, length = segs[0]
            den = (w.as_fraction() * T.e).denominator
            if den == length == len(work) - 1:
                # totally ramified: relative Eisenstein after making monic
                lead = work[-1]
                monic = [c / lead for c in work]
                new_tower = extend_field(T, monic, "eisenstein")
                self._embed_all(new_tower)
                root = new_tower.generator()
                deflated = poly_deflate([new_tower.embed(c) for c in monic], root)
                return root, deflated
        # roots may lie in the current tower
        root = self._search_root(work, exclude=[])
        if root is None:
            raise CertificationError(
                "division polynomial factor neither certifiably irreducible "
                "nor splittable at working precision")
        return root, poly_deflate(work, root)

    def _first_root_known_fiber(self, work, k, fiber_base, gen_k):
        """Seed the fiber over q = [u](chain generator) with [u](gen_k)."""
        T = self.tower
        p = self.law.structure.p
        if self.law.tag == "multiplicative":
            # exact: x = (1+gen_k)^u - 1 where (1+q) = (1+chain_{k-1})^u
            one = T.one()
            base = one + self.chain[k - 1].coordinate()
            targ = one + T.coerce(fiber_base.coordinate())
            cur = one
            for u in range(1, p ** max(k - 1, 1) + 1):
                cur = cur * base
                if u % p == 0:
                    continue
                if (cur - targ).is_zero(T.N - 2):
                    cand = (one + T.coerce(gen_k)) ** u - one
                    if poly_eval(work, cand).is_zero(T.N - 2):
                        return cand
            raise InternalCheckError("chart fiber base is not a unit multiple of the generator")
        # generic: approximate [u](gen_k) and refine; u found by snapped matching
        for u in range(1, p ** k):
            if u % p == 0:
                continue
            val, err = self.law.mult_point(u, (self.chain[k - 1].coordinate(),))
            diff = (val[0] - T.coerce(fiber_base.coordinate())).valuation()
            sep = self.max_separation(k - 1)
            if not (err > sep):
                raise InternalCheckError(
                    "cannot certify fiber matching: series error below separation")
            if diff > sep:
                cand_val, cand_err = self.law.mult_point(u, (T.coerce(gen_k),))
                root = self._try_hensel(work, cand_val[0])
                if root is None:
                    raise CertificationError(
                        "fiber seed failed the Newton condition; raise the degree cap")
                return root
        raise InternalCheckError("no unit multiple matches the fiber base")

    def _try_hensel(self, poly, seed) -> Optional[PAdicNumber]:
        try:
            return hensel_root(poly, self.tower.coerce(seed))
        except (CertificationError, ZeroDivisionError):
            return None

    def _search_root(self, poly, exclude) -> Optional[PAdicNumber]:
        """Digit-enumeration seed search for in-tower roots (budget-capped)."""
        T = self.tower
        p = T.p
        try:
            segs = newton_polygon(poly)
        except PadicError:
            return None
        pi = T.uniformizer()
        for w, _length in segs:
            if not w.finite:
                continue
            me = w.as_fraction() * T.e
            if me.denominator != 1:
                continue
            m = int(me)
            base = pi ** m
            # residue digits: integer lifts times powers of the unramified generator
            reps = list(range(p))
            gens = [T.one()]
            if T.f > 1:
                slots = T._residue_slots()
                g = [0] * T.degree
                g[slots[1]] = 1
                from .padic import PAdicNumber as _PN
                gens = [T.one(), _PN(T, tuple(g), 0, T.cap)]
            for depth in (1, 2):
                if (p ** (T.f * depth)) ** 1 > 4096:
                    break
                cands = [T.zero()]
                for d in range(depth):
                    nxt = []
                    for c in cands:
                        for r0 in reps:
                            for gpow in gens:
                                nxt.append(c + gpow * (pi ** d) * r0)
                    cands = nxt
                found = None
                for u in cands:
                    if u.is_zero():
                        continue
                    seed = base * u
                    root = self._try_hensel(poly, seed)
                    if root is not None and all(not (root - r).is_zero(T.N - 2) for r in exclude):
                        found = root
                        break
                if found is not None:
                    return found
        return None


# ---------------------------------------------------------------------------
# public operations


def get_table(F: FormalGroupLaw, tower0: PAdicStructure | None = None) -> TorsionTable:
    key = ("torsion_table",)
    if tower0 is None or tower0 is F.structure:
        def build():
            return TorsionTable(F)
        return F._memoized(key, build)
    return TorsionTable(F, tower0)


def division_points(F: FormalGroupLaw, r: int):
    """All points of F[p^r] with a tower containing them.

    Returns (points, tower); points are sorted by level then coordinates.
    For products, factor torsion is constructed over one shared tower.
    """
    if r < 0:
        raise PadicError("level must be >= 0")
    if F.dim == 1:
        table = get_table(F)
        pts = table.points_through(r)
        return pts, table.tower
    tables = []
    tower = None
    for sub in F.subs:
        reuse = next((t for t in tables if t.law is sub), None)
        if reuse is not None:
            t = reuse
        elif tower is None:
            t = get_table(sub)
        else:
            t = TorsionTable(sub, tower)
        t.extend_to(r)
        if tower is None or t.tower.is_extension_of(tower):
            tower = t.tower
        tables.append(t)
    # one shared tower: re-embed earlier factors into the last tower
    points_per_factor = []
    for t in tables:
        pts = t.points_through(r)
        points_per_factor.append([
            (tuple(tower.embed(c) for c in p.coords), p.level) for p in pts])
    combos = [((), 0)]
    for fac in points_per_factor:
        combos = [(cs + c, max(lv, l2)) for cs, lv in combos for c, l2 in fac]
    out = [TorsionPoint(F, cs, lv, tower) for cs, lv in combos]
    if len(out) > TORSION_POINT_BUDGET:
        raise BudgetError("product torsion budget exceeded")
    out.sort(key=TorsionPoint.sort_key)
    return out, tower


def galois_orbit(P: TorsionPoint, g: GaloisElement) -> TorsionPoint:
    """The character action sigma_u(P) = [u](P) on p-power torsion."""
    p = P.group.structure.p
    if g.u % p == 0:
        raise PadicError("character value must be a unit")
    if P.group.dim == 1:
        table = get_table(P.group)
        table.extend_to(P.level)
        return table.op_mult(g.u, _rebase(P, table))
    pts, tower = division_points(P.group, P.level)
    vals = []
    err = INF
    for i, sub in enumerate(P.group.subs):
        x = tower.coerce(P.coords[i])
        if sub.tag == "multiplicative":
            one = tower.one()
            vals.append((one + x) ** g.u - one)
        else:
            v, e = sub.mult_point(g.u, (x,))
            vals.append(v[0])
            err = val_min(err, e)
    return _match_product_point(pts, tower, vals, err)


def _match_product_point(pts: Sequence[TorsionPoint], tower: PAdicStructure,
                         vals: Sequence[PAdicNumber],
                         err: RationalValuation) -> TorsionPoint:
    seps = []
    n = len(vals)
    for i in range(n):
        coord_vals = [pt.coords[i].valuation() for pt in pts
                      if not pt.coords[i].is_zero()]
        seps.append(max(coord_vals, key=lambda v: v._as_ext())
                    if coord_vals else RationalValuation(0))
    if err.finite and not all(err > s for s in seps):
        raise InternalCheckError("cannot certify product torsion snap")
    matches = []
    for pt in pts:
        if all((vals[i] - tower.coerce(pt.coords[i])).valuation() > seps[i]
               for i in range(n)):
            matches.append(pt)
    if len(matches) != 1:
        raise InternalCheckError(
            f"product torsion snap matched {len(matches)} points")
    return matches[0]


def _rebase(P: TorsionPoint, table: TorsionTable) -> TorsionPoint:
    """Identify P with its table object (tower embedding + exact match)."""
    table.extend_to(P.level)
    val = table.tower.coerce(P.coordinate())
    for lev in table.levels[: P.level + 1]:
        for pt in lev:
            if (val - pt.coordinate()).is_zero(table.tower.N - 2):
                return pt
    raise InternalCheckError("point does not belong to this torsion table")


def boxall_descent(P: TorsionPoint, r: int):
    """The descent of the inertia lemma: g with g(P) -_F P of exact level r.

    Follows the proof's chain P_i = [p^(n-r-i+1)]P with s_i = s_1^(p^(i-1)),
    asserting Q_i in F[p^r] \\ F[p^(r-1)] and the chain identities at every
    step.  Requires level(P) >= 2r (the proof's actual domain; for levels in
    (r, 2r) the conclusion fails, e.g. p=2, level 3, r=2).
    """
    law = P.group
    if law.dim != 1:
        raise PadicError("descent is implemented for one-dimensional laws")
    p = law.structure.p
    ell = P.level
    if r < 1:
        raise PadicError("descent needs r >= 1")
    if p == 2 and r == 1:
        raise PadicError("descent requires r != 1 when p = 2")
    if ell <= r:
        raise PadicError("point is already defined over K(F[p^r])")
    if ell < 2 * r:
        raise BoxallDomainError(
            f"descent needs level >= 2r (level {ell}, r {r}): for levels in "
            "(r, 2r) the witness cannot reach exact level r")
    table = get_table(law)
    table.extend_to(ell)
    P = _rebase(P, table)
    n = ell - r
    u1 = 1 + p ** r

    def orbit(point, u):
        return table.op_mult(u % (p ** max(point.level, 1)), point)

    def mult_p_power(point, k):
        cur = point
        for _ in range(k):
            cur = table.op_mult(p, cur)
        return cur

    # s_1 must move [p^(n-1)]P, a point of exact level r+1
    probe = mult_p_power(P, n - 1)
    if probe.level != r + 1:
        raise InternalCheckError("[p^(n-1)]P does not have exact level r+1")
    if orbit(probe, u1) is probe:
        raise InternalCheckError("s_1 fixes [p^(n-1)]P; the character action is degenerate")
    chain_len = n - r + 1
    us = [pow(u1, p ** i, p ** (ell + 2)) for i in range(chain_len)]
    Qs = []
    for i in range(1, chain_len + 1):
        P_i = mult_p_power(P, n - r - i + 1)
        Q_i = table.op_sub(orbit(P_i, us[i - 1]), P_i)
        if Q_i.level != r:
            raise InternalCheckError(
                f"descent step {i}: witness has exact level {Q_i.level}, expected {r}")
        Qs.append((P_i, Q_i))
    for i in range(1, chain_len):
        P_next, Q_next = Qs[i]
        _P_i, Q_i = Qs[i - 1]
        R_i = table.op_sub(orbit(P_next, us[i - 1]), P_next)
        S_i = table.op_sub(orbit(R_i, us[i - 1]), R_i)
        if table.op_mult(p, R_i) is not Q_i:
            raise InternalCheckError(f"descent step {i}: [p]R_i != Q_i")
        if not table.op_mult(p, S_i).is_zero():
            raise InternalCheckError(f"descent step {i}: [p]S_i != 0")
        if p != 2:
            if Q_next is not Q_i:
                raise InternalCheckError(f"descent step {i}: Q_(i+1) != Q_i")
        else:
            drift = table.op_sub(Q_next, Q_i)
            if drift.level > 1:
                raise InternalCheckError(
                    f"descent step {i}: p=2 drift has level {drift.level} > 1")
    g = GaloisElement(us[-1] % (p ** (ell + 2)))
    witness = Qs[-1][1]
    return g, witness


def torsion_table_text(points: Sequence[TorsionPoint], tower: PAdicStructure) -> str:
    """Exportable table: level, tower description, coordinates, valuation."""
    lines = [f"# tower: {tower.describe()}"]
    for pt in sorted(points, key=TorsionPoint.sort_key):
        coords = " ; ".join(coeff_to_text(tower.coerce(c)) for c in pt.coords)
        vals = ",".join(str(c.valuation()) for c in pt.coords)
        lines.append(f"level {pt.level} | v = ({vals}) | {coords}")
    return "\n".join(lines) + "\n"
