"""Formal subschemes: distance, translates, stabilizer probing, scans.

A subscheme is a finite generator list inside an ambient formal group.  The
distance from a point to the scheme is the minimum generator valuation at
the point (the max-of-absolute-values in valuation form), with evaluation
tail bounds folded in.  "On the scheme" at working precision means every
generator valuation clears the membership floor N - margin.

The epsilon scanner classifies torsion against a threshold valuation and
reports per-level gap minima; the covering step materializes the finite
union X(eps) <= F[p^(r-1)] u U_Q (X n T_Q X)(eps) and verifies it on the
computed torsion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .padic import (
    INF,
    NEG_INF,
    InternalCheckError,
    PAdicNumber,
    PAdicStructure,
    PadicError,
    PrecisionError,
    RationalValuation,
    val_min,
)
from .series import TruncatedSeries, _common_structure
from .fgroup import FormalGroupLaw
from .torsion import TorsionPoint, division_points

MEMBERSHIP_MARGIN = 4


def membership_floor(structure: PAdicStructure) -> RationalValuation:
    """Generator valuations at or above this count as vanishing."""
    return RationalValuation(structure.N - MEMBERSHIP_MARGIN)


class FormalSubscheme:
    """Finite generator list of an ideal in the ambient formal group."""

    def __init__(self, ambient: FormalGroupLaw, generators: Sequence[TruncatedSeries],
                 label: str = "X"):
        if not generators:
            raise PadicError("a formal subscheme needs at least one generator")
        self.ambient = ambient
        self.generators = list(generators)
        self.label = label
        n = ambient.dim
        for g in self.generators:
            if g.nvars != n:
                raise PadicError(
                    f"generator has {g.nvars} variables; ambient dimension is {n}")

    @property
    def through_identity(self) -> bool:
        return all(g.constant_term().is_zero() for g in self.generators)

    def __repr__(self):
        return f"<FormalSubscheme {self.label}: {len(self.generators)} generators, n={self.ambient.dim}>"


def distance(X: FormalSubscheme, point: Sequence[PAdicNumber]) -> RationalValuation:
    """min over generators of v(phi_i(P)), tail bounds folded in.

    +inf means "on X to working precision".  A generator whose evaluation
    cannot be bounded (tail -inf) raises, rather than certifying nothing.
    """
    coords = point.coords if isinstance(point, TorsionPoint) else tuple(point)
    floor = membership_floor(coords[0].structure if coords else X.ambient.structure)
    out = INF
    for g in X.generators:
        value, tail = g.evaluate(coords)
        if tail.is_neg_infinite:
            raise PrecisionError(
                "generator evaluation carries no tail bound; distance uncertifiable")
        v = value.valuation()
        contrib = v if v < tail else val_min(tail, INF)
        if contrib >= floor:
            contrib = INF
        out = val_min(out, contrib)
    return out


def on_scheme(X: FormalSubscheme, point) -> bool:
    """Membership at working precision: every generator clears the floor."""
    coords = point.coords if isinstance(point, TorsionPoint) else tuple(point)
    floor = membership_floor(coords[0].structure if coords else X.ambient.structure)
    for g in X.generators:
        value, tail = g.evaluate(coords)
        v = val_min(value.valuation(), tail) if not tail.is_infinite else value.valuation()
        if not (v >= floor or v.is_infinite):
            return False
    return True


def translate(X: FormalSubscheme, Q) -> FormalSubscheme:
    """T_Q X, with generators phi_i(F(X, Q))."""
    coords = Q.coords if isinstance(Q, TorsionPoint) else tuple(Q)
    n = X.ambient.dim
    if len(coords) != n:
        raise PadicError("translation point dimension mismatch")
    st = X.generators[0].structure
    for c in coords:
        v = c.valuation()
        if not (v > 0):
            raise PadicError("translation point needs positive coordinate valuations")
        st = _common_structure(st, c.structure)
    # per-factor substitution: F_i(X_i, Q_i) as an n-variable series
    shifted = []
    for i, sub in enumerate(X.ambient.subs):
        law2 = sub.law.promote(st) if sub.law.structure is not st else sub.law
        one_var = law2.substitute({1: st.coerce(coords[i])})
        table = {}
        for (a,), c in one_var.coeffs.items():
            key = [0] * n
            key[i] = a
            table[tuple(key)] = c
        shifted.append(TruncatedSeries(st, n, one_var.cap, table,
                                       tail=one_var.tail, coeff_err=one_var.coeff_err))
    gens = []
    for g in X.generators:
        gens.append(_substitute_series(g.promote(st), shifted))
    return FormalSubscheme(X.ambient, gens, label=f"T[{X.label}]")


def _substitute_series(f: TruncatedSeries, args: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """f(args) where args may have nonzero constant terms (finite data only).

    Plain monomial expansion; exactness flags propagate through the series
    products, so polynomial inputs stay exact.
    """
    st = f.structure
    for a in args:
        st = _common_structure(st, a.structure)
    cap = min([f.cap] + [a.cap for a in args])
    args = [a.promote(st).truncated(cap) for a in args]
    f = f.promote(st).truncated(cap)
    out = TruncatedSeries.zero(st, args[0].nvars, cap)
    pow_cache: list[dict[int, TruncatedSeries]] = [dict() for _ in args]

    def apower(i, e):
        cache = pow_cache[i]
        got = cache.get(e)
        if got is None:
            got = args[i] if e == 1 else apower(i, e - 1) * args[i]
            cache[e] = got
        return got

    one = TruncatedSeries.constant(st, 1, args[0].nvars, cap)
    for key, c in sorted(f.coeffs.items(), key=lambda kv: sum(kv[0])):
        term = None
        for i, e in enumerate(key):
            if e:
                piece = apower(i, e)
                term = piece if term is None else term * piece
        term = one if term is None else term
        out = out + term.scale(c)
    if not f.tail.is_infinite:
        # truncated generators re-expanded at Q carry coefficient uncertainty
        minv = val_min(INF, *(a.min_valuation() for a in args))
        extra = f.tail + minv * (cap + 1) if (f.tail.finite and minv.finite) else f.tail
        out = TruncatedSeries(st, out.nvars, out.cap, out.coeffs,
                              tail=out.tail, coeff_err=val_min(out.coeff_err, extra))
    return out


def stabilizer_probe(X: FormalSubscheme, level: int) -> list[TorsionPoint]:
    """Torsion elements zeta with every member xi keeping xi + zeta on X.

    A finite-precision over-approximation of Stab(X) on F[p^level].
    """
    pts, tower = division_points(X.ambient, level)
    members = [q for q in pts if on_scheme(X, q)]
    out = []
    for z in pts:
        ok = True
        for xi in members:
            s, err = X.ambient.add_points(xi.coords, z.coords)
            if not _membership_with_error(X, s, err):
                ok = False
                break
        if ok:
            out.append(z)
    return out


def _membership_with_error(X: FormalSubscheme, coords, err: RationalValuation) -> bool:
    floor = membership_floor(coords[0].structure)
    if err.is_infinite:
        return on_scheme(X, coords)
    # approximate point: membership certified only up to the error bound
    for g in X.generators:
        value, tail = g.evaluate(coords)
        v = val_min(value.valuation(), tail)
        if not (v >= val_min(floor, err)):
            return False
    return True


@dataclass
class ScanRow:
    level: int
    torsion_count: int
    member_count: int
    near_count: int
    min_gap: RationalValuation       # farthest nonmember (literal valuation minimum)
    closest: RationalValuation       # closest approach (valuation maximum)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "torsion": self.torsion_count,
            "members": self.member_count,
            "near": self.near_count,
            "min_gap": str(self.min_gap),
            "closest": str(self.closest),
        }


@dataclass
class ScanReport:
    label: str
    threshold: RationalValuation
    rows: list[ScanRow]
    members: list[TorsionPoint]
    floor: RationalValuation

    def min_gap_through(self, level: int) -> RationalValuation:
        gaps = [r.min_gap for r in self.rows if r.level <= level and r.min_gap.finite]
        return min(gaps, key=lambda v: v._as_ext()) if gaps else INF

    def closest_through(self, level: int) -> RationalValuation:
        """Largest nonmember distance valuation: the Tate-Voloch statistic.

        A nonmember within p^(-closest) of X exists; the dichotomy predicts
        this stays constant as the level grows (torsion does not creep
        arbitrarily close to X unless it lies on X).
        """
        gaps = [r.closest for r in self.rows if r.level <= level and r.closest.finite]
        return max(gaps, key=lambda v: v._as_ext()) if gaps else NEG_INF

    def json_lines(self) -> list[str]:
        out = [json.dumps({"schema": "padicfg.scan/1", "scheme": self.label,
                           "threshold": str(self.threshold), "floor": str(self.floor)},
                          sort_keys=True)]
        for row in self.rows:
            out.append(json.dumps(row.to_json(), sort_keys=True))
        return out

    def text(self) -> str:
        lines = [f"scan of {self.label}  (threshold v_eps = {self.threshold}, floor = {self.floor})",
                 "level  torsion  members  near  min_gap  closest"]
        for r in self.rows:
            lines.append(f"{r.level:>5}  {r.torsion_count:>7}  {r.member_count:>7}  "
                         f"{r.near_count:>4}  {r.min_gap}  {r.closest}")
        return "\n".join(lines) + "\n"


def epsilon_scan(X: FormalSubscheme, max_level: int,
                 v_eps: RationalValuation) -> ScanReport:
    """Classify every torsion point through max_level as member/near/far."""
    pts, tower = division_points(X.ambient, max_level)
    floor = membership_floor(tower)
    rows = []
    members: list[TorsionPoint] = []
    by_level: dict[int, list] = {}
    for q in pts:
        by_level.setdefault(q.level, []).append(q)
    for level in range(0, max_level + 1):
        group = by_level.get(level, [])
        mcount = 0
        ncount = 0
        min_gap = INF
        closest = NEG_INF
        for q in group:
            d = distance(X, q)
            if d.is_infinite or d >= floor:
                mcount += 1
                members.append(q)
                continue
            if d > v_eps:
                ncount += 1
            if d < min_gap:
                min_gap = d
            if d > closest:
                closest = d
        rows.append(ScanRow(level, len(group), mcount, ncount, min_gap, closest))
    return ScanReport(X.label, v_eps, rows, members, floor)


@dataclass
class CoveringReport:
    r: int
    intersections: list[FormalSubscheme]
    verified: bool
    member_assignments: list[tuple]
    per_intersection_members: list[int]


def covering_step(X: FormalSubscheme, r: int, verify_level: int | None = None) -> CoveringReport:
    """The finite union of the main covering argument.

    Requires the stabilizer probe at level r to lie inside F[p^(r-1)] and X
    to pass through the identity.  Returns the intersections X n T_Q X for
    Q of exact level r, verifying that every torsion member of X through
    the scan level lies in F[p^(r-1)] or in one of them.
    """
    if not X.through_identity:
        raise PadicError("covering step expects a scheme through the identity")
    probe = stabilizer_probe(X, r)
    bad = [z for z in probe if z.level > r - 1]
    if bad:
        raise PadicError(
            f"stabilizer probe is not contained in F[p^{r-1}]: violating point "
            f"of level {bad[0].level}: {bad[0]!r}")
    pts, tower = division_points(X.ambient, r)
    qs = [q for q in pts if q.level == r]
    intersections = []
    for i, q in enumerate(qs):
        tq = translate(X, q)
        gens = list(X.generators) + list(tq.generators)
        intersections.append(FormalSubscheme(X.ambient, gens,
                                             label=f"{X.label}&T_Q{i}"))
    verify_level = verify_level if verify_level is not None else r + 1
    scan_pts, _ = division_points(X.ambient, verify_level)
    assignments = []
    verified = True
    for q in scan_pts:
        if not on_scheme(X, q):
            continue
        if q.level <= r - 1:
            assignments.append((q, "low-level"))
            continue
        hit = None
        for i, inter in enumerate(intersections):
            if on_scheme(inter, q):
                hit = i
                break
        if hit is None:
            verified = False
            assignments.append((q, "UNCOVERED"))
        else:
            assignments.append((q, f"intersection {hit}"))
    per_member_counts = []
    for inter in intersections:
        per_member_counts.append(sum(1 for q in scan_pts if on_scheme(inter, q)))
    return CoveringReport(r, intersections, verified, assignments, per_member_counts)


def graph_subscheme(h: TruncatedSeries, F: FormalGroupLaw, G: FormalGroupLaw,
                    label: str | None = None) -> FormalSubscheme:
    """The graph {h(Y_1) - Y_2} inside F x G."""
    if h.nvars != 1:
        raise PadicError("graph subschemes take a one-variable series")
    ambient = FormalGroupLaw.product([F, G])
    st = h.structure
    table = {(a, 0): c for (a,), c in h.coeffs.items()}
    table[(0, 1)] = table.get((0, 1), st.zero()) - st.one()
    gen = TruncatedSeries(st, 2, h.cap, table, tail=h.tail, coeff_err=h.coeff_err)
    return FormalSubscheme(ambient, [gen], label=label or "graph")


def diagonal_subscheme(F: FormalGroupLaw) -> FormalSubscheme:
    """{Y_1 - Y_2} in F x F."""
    ambient = FormalGroupLaw.product([F, F])
    st = F.structure
    gen = TruncatedSeries.from_terms(st, 2, F.cap, {(1, 0): 1, (0, 1): -1})
    return FormalSubscheme(ambient, [gen], label="diagonal")
