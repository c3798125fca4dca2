"""Truncated multivariate power series over a p-adic structure.

A series is a coefficient table keyed by multi-indices of total degree at
most the cap D.  All operations are exact through degree D.  Each series
carries two soundness annotations:

  tail:      a lower bound on the valuation of the (dropped) coefficients
             at total degree D+1; +inf for exact polynomial data, -inf when
             no bound is known.
  coeff_err: a lower bound on the valuation of the uncertainty carried by
             every stored coefficient (finite only for series built from
             inexact data, e.g. translates of truncated schemes).

Evaluation reports a tail valuation bound so callers can decide whether a
computed value is significant.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .padic import (
    INF,
    NEG_INF,
    CertificationError,
    as_valuation,
    PAdicNumber,
    PAdicStructure,
    PadicError,
    PrecisionError,
    RationalValuation,
    coeff_from_text,
    coeff_to_text,
    val_min,
)


def _common_structure(a: PAdicStructure, b: PAdicStructure) -> PAdicStructure:
    if a is b:
        return a
    if a.is_extension_of(b):
        return a
    if b.is_extension_of(a):
        return b
    raise PadicError("series structures are unrelated")


class TruncatedSeries:
    """Multivariate power series truncated at total degree `cap`."""

    __slots__ = ("structure", "nvars", "cap", "coeffs", "tail", "coeff_err",
                 "_vmin", "_integral")

    def __init__(self, structure: PAdicStructure, nvars: int, cap: int,
                 coeffs: Mapping[tuple, PAdicNumber] | None = None,
                 tail: RationalValuation = INF,
                 coeff_err: RationalValuation = INF):
        self.structure = structure
        self.nvars = nvars
        self.cap = cap
        table = {}
        if coeffs:
            for key, c in coeffs.items():
                key = tuple(int(k) for k in key)
                if len(key) != nvars:
                    raise PadicError("multi-index length does not match nvars")
                if sum(key) > cap:
                    raise PadicError("stored key exceeds the degree cap")
                if not c.is_zero():
                    table[key] = c
        self.coeffs = table
        self.tail = as_valuation(tail)
        self.coeff_err = as_valuation(coeff_err)
        self._vmin = None
        self._integral = None

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, structure, nvars, cap):
        return cls(structure, nvars, cap)

    @classmethod
    def constant(cls, structure, value, nvars, cap):
        c = structure.coerce(value)
        return cls(structure, nvars, cap, {(0,) * nvars: c})

    @classmethod
    def variable(cls, structure, index, nvars, cap):
        key = tuple(1 if i == index else 0 for i in range(nvars))
        return cls(structure, nvars, cap, {key: structure.one()})

    @classmethod
    def from_terms(cls, structure, nvars, cap, terms: Mapping[tuple, object],
                   tail: RationalValuation = INF):
        table = {tuple(k): structure.coerce(v) for k, v in terms.items()}
        return cls(structure, nvars, cap, table, tail=tail)

    # -- inspection ------------------------------------------------------------

    def constant_term(self) -> PAdicNumber:
        return self.coeffs.get((0,) * self.nvars, self.structure.zero())

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return max((sum(k) for k in self.coeffs), default=0)

    def min_valuation(self) -> RationalValuation:
        if self._vmin is None:
            self._vmin = val_min(INF, *(c.valuation() for c in self.coeffs.values()))
        return self._vmin

    @property
    def integral(self) -> bool:
        """True when every stored coefficient has valuation >= 0."""
        if self._integral is None:
            self._integral = all(c.valuation() >= 0 for c in self.coeffs.values())
        return self._integral

    def coefficient(self, key: tuple) -> PAdicNumber:
        return self.coeffs.get(tuple(key), self.structure.zero())

    def terms_sorted(self):
        return sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def __repr__(self):
        terms = self.terms_sorted()[:6]
        body = " + ".join(
            "*".join([f"({c.coeffs[0] if c.structure.degree == 1 else '...'})"]
                     + [f"X{i}^{e}" for i, e in enumerate(k) if e])
            or "const" for k, c in terms)
        more = "" if len(self.coeffs) <= 6 else f" (+{len(self.coeffs) - 6} terms)"
        return f"<series n={self.nvars} D={self.cap}: {body}{more}>"

    # -- structure/cap alignment ----------------------------------------------

    def promote(self, structure: PAdicStructure) -> "TruncatedSeries":
        if structure is self.structure:
            return self
        table = {k: structure.embed(c) for k, c in self.coeffs.items()}
        return TruncatedSeries(structure, self.nvars, self.cap, table,
                               tail=self.tail, coeff_err=self.coeff_err)

    def _align(self, other: "TruncatedSeries"):
        if self.nvars != other.nvars:
            raise PadicError("variable counts differ")
        st = _common_structure(self.structure, other.structure)
        cap = min(self.cap, other.cap)
        a, b = self.promote(st), other.promote(st)
        if a.cap != cap:
            a = a.truncated(cap)
        if b.cap != cap:
            b = b.truncated(cap)
        return a, b

    def truncated(self, cap: int) -> "TruncatedSeries":
        if cap >= self.cap:
            return self
        table = {k: c for k, c in self.coeffs.items() if sum(k) <= cap}
        dropped = len(table) != len(self.coeffs)
        tail = self.tail if not dropped else val_min(self.tail, self.min_valuation())
        return TruncatedSeries(self.structure, self.nvars, cap, table,
                               tail=tail, coeff_err=self.coeff_err)

    # -- linear operations -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, PAdicNumber)):
            other = TruncatedSeries.constant(self.structure, other, self.nvars, self.cap)
        a, b = self._align(other)
        table = dict(a.coeffs)
        for k, c in b.coeffs.items():
            cur = table.get(k)
            table[k] = c if cur is None else cur + c
        return TruncatedSeries(a.structure, a.nvars, a.cap, table,
                               tail=val_min(a.tail, b.tail),
                               coeff_err=val_min(a.coeff_err, b.coeff_err))

    __radd__ = __add__

    def __neg__(self):
        table = {k: -c for k, c in self.coeffs.items()}
        return TruncatedSeries(self.structure, self.nvars, self.cap, table,
                               tail=self.tail, coeff_err=self.coeff_err)

    def __sub__(self, other):
        if isinstance(other, (int, PAdicNumber)):
            other = TruncatedSeries.constant(self.structure, other, self.nvars, self.cap)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncatedSeries":
        c = self.structure.coerce(c) if not isinstance(c, PAdicNumber) else c
        st = _common_structure(self.structure, c.structure)
        c = st.coerce(c)
        s = self.promote(st)
        if c.is_zero():
            return TruncatedSeries.zero(st, s.nvars, s.cap)
        table = {k: v * c for k, v in s.coeffs.items()}
        cv = c.valuation()
        return TruncatedSeries(st, s.nvars, s.cap, table,
                               tail=s.tail + cv if s.tail.finite else s.tail,
                               coeff_err=s.coeff_err + cv if s.coeff_err.finite else s.coeff_err)

    # -- multiplication --------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, (int, PAdicNumber)):
            return self.scale(other)
        a, b = self._align(other)
        if a.is_zero() or b.is_zero():
            return TruncatedSeries.zero(a.structure, a.nvars, a.cap)
        if len(b.coeffs) == 1:
            a, b = b, a
        if len(a.coeffs) == 1:
            (key, c), = a.coeffs.items()
            deg = sum(key)
            table = {}
            dropped = False
            for k, v in b.coeffs.items():
                if sum(k) + deg <= a.cap:
                    table[tuple(x + y for x, y in zip(k, key))] = v * c
                else:
                    dropped = True
            return TruncatedSeries(a.structure, a.nvars, a.cap, table,
                                   tail=self._mul_tail(a, b, dropped),
                                   coeff_err=self._mul_err(a, b))
        table = {}
        dropped = False
        cap = a.cap
        bitems = sorted(b.coeffs.items(), key=lambda kv: sum(kv[0]))
        for k1, c1 in sorted(a.coeffs.items(), key=lambda kv: sum(kv[0])):
            d1 = sum(k1)
            for k2, c2 in bitems:
                if d1 + sum(k2) > cap:
                    dropped = True
                    break
                key = tuple(x + y for x, y in zip(k1, k2))
                cur = table.get(key)
                prod = c1 * c2
                table[key] = prod if cur is None else cur + prod
        return TruncatedSeries(a.structure, a.nvars, a.cap, table,
                               tail=self._mul_tail(a, b, dropped),
                               coeff_err=self._mul_err(a, b))

    __rmul__ = __mul__

    @staticmethod
    def _mul_tail(a, b, dropped):
        va, vb = a.min_valuation(), b.min_valuation()
        parts = [a.tail + vb if (a.tail.finite and vb.finite) else val_min(a.tail, INF),
                 b.tail + va if (b.tail.finite and va.finite) else val_min(b.tail, INF)]
        out = val_min(*parts)
        if a.tail.is_infinite and b.tail.is_infinite:
            out = INF
        if dropped:
            if va.finite and vb.finite:
                out = val_min(out, va + vb)
            else:
                out = val_min(out, va, vb)
        return out

    @staticmethod
    def _mul_err(a, b):
        va, vb = a.min_valuation(), b.min_valuation()
        parts = []
        for err, v in ((a.coeff_err, vb), (b.coeff_err, va)):
            if err.is_infinite:
                continue
            parts.append(err + v if v.finite else err)
        return val_min(INF, *parts) if parts else INF

    def __pow__(self, n: int):
        if n < 0:
            raise PadicError("negative series powers are not defined")
        result = TruncatedSeries.constant(self.structure, 1, self.nvars, self.cap)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- calculus / composition ---------------------------------------------------

    def derivative(self, var: int) -> "TruncatedSeries":
        table = {}
        for k, c in self.coeffs.items():
            e = k[var]
            if e:
                key = tuple(x - 1 if i == var else x for i, x in enumerate(k))
                table[key] = c * e
        if self.tail.finite:
            p = self.structure.p
            tail = self.tail + (-math.floor(math.log(self.cap + 1, p)))
        else:
            tail = self.tail
        return TruncatedSeries(self.structure, self.nvars, max(self.cap - 1, 0),
                               {k: v for k, v in table.items() if sum(k) <= self.cap - 1},
                               tail=tail, coeff_err=self.coeff_err)

    def compose(self, inner: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        """f(g_1, ..., g_n); every g must have zero constant term."""
        if len(inner) != self.nvars:
            raise PadicError("composition needs one inner series per variable")
        gs = list(inner)
        if not gs:
            return self
        st = self.structure
        for g in gs:
            st = _common_structure(st, g.structure)
        cap = min([self.cap] + [g.cap for g in gs])
        gs = [g.promote(st).truncated(cap) for g in gs]
        nv = gs[0].nvars
        for g in gs:
            if g.nvars != nv:
                raise PadicError("inner series have mismatched variable counts")
            if not g.constant_term().is_zero():
                raise PadicError("nonzero constant term in composition argument")
        f = self.promote(st).truncated(cap)
        one = TruncatedSeries.constant(st, 1, nv, cap)
        pow_cache: list[dict[int, TruncatedSeries]] = [dict() for _ in gs]

        def g_power(i, e):
            cache = pow_cache[i]
            have = cache.get(e)
            if have is not None:
                return have
            if e == 0:
                out = one
            elif e == 1:
                out = gs[i]
            else:
                out = g_power(i, e - 1) * gs[i]
            cache[e] = out
            return out

        acc = TruncatedSeries.zero(st, nv, cap)
        for key, c in sorted(f.coeffs.items(), key=lambda kv: sum(kv[0])):
            term = None
            for i, e in enumerate(key):
                if e:
                    piece = g_power(i, e)
                    term = piece if term is None else term * piece
            if term is None:
                term = one
            acc = acc + term.scale(c)
        exact = (f.tail.is_infinite and all(g.tail.is_infinite for g in gs)
                 and acc.tail.is_infinite)
        if exact:
            tail = INF
        elif f.integral and all(g.integral for g in gs):
            tail = RationalValuation(0)
        else:
            tail = NEG_INF
        err = acc.coeff_err if (f.coeff_err.is_infinite and all(g.coeff_err.is_infinite for g in gs)) else NEG_INF
        return TruncatedSeries(st, nv, cap, acc.coeffs, tail=tail, coeff_err=err)

    def inverse(self) -> "TruncatedSeries":
        """Multiplicative inverse; requires a unit constant term."""
        c0 = self.constant_term()
        if not c0.is_unit():
            raise PadicError("series inverse needs a unit constant term")
        st = self.structure
        v = TruncatedSeries.constant(st, c0.inverse(), self.nvars, self.cap)
        two = TruncatedSeries.constant(st, 2, self.nvars, self.cap)
        steps = max(1, math.ceil(math.log2(self.cap + 1)) + 1)
        for _ in range(steps):
            v = v * (two - self * v)
        return v

    def reversion(self) -> "TruncatedSeries":
        """Compositional inverse of a one-variable series.

        Requires f(0) = 0 and a unit linear coefficient; f(rev(X)) = X
        through the cap.
        """
        if self.nvars != 1:
            raise PadicError("reversion is defined for one-variable series")
        if not self.constant_term().is_zero():
            raise PadicError("reversion needs zero constant term")
        a1 = self.coefficient((1,))
        if not a1.is_unit():
            raise PadicError("reversion needs a unit linear coefficient")
        st = self.structure
        cap = self.cap
        inv_a1 = a1.inverse()
        table = {(1,): inv_a1}
        g = TruncatedSeries(st, 1, cap, table)
        for m in range(2, cap + 1):
            # coefficient of X^m in f(g_(<m)) must cancel against a1 * b_m
            comp = self.truncated(m).compose([g.truncated(m)])
            cm = comp.coefficient((m,))
            if not cm.is_zero():
                bm = -(cm * inv_a1)
                g = g + TruncatedSeries(st, 1, cap, {(m,): bm})
        tail = RationalValuation(0) if self.integral else NEG_INF
        return TruncatedSeries(st, 1, cap, g.coeffs, tail=tail,
                               coeff_err=self.coeff_err)

    # -- evaluation ---------------------------------------------------------------

    def _check_domain(self, point: Sequence[PAdicNumber]):
        if len(point) != self.nvars:
            raise PadicError("point dimension does not match the series")
        vmins = []
        for c in point:
            v = c.valuation()
            vmins.append(v)
            if self.integral:
                if v.finite and v < 0:
                    raise PadicError("coordinate has negative valuation")
            else:
                if not (v > 0):
                    raise PadicError(
                        "non-integral series require strictly positive coordinate valuations")
        return val_min(INF, *vmins)

    def evaluate(self, point: Sequence[PAdicNumber]) -> tuple[PAdicNumber, RationalValuation]:
        """Sum through degree D at the point, plus a tail valuation bound.

        The bound is tail + (D+1) * min_i v(P_i), folded with the stored
        coefficient uncertainty; +inf certifies an exact polynomial value.
        """
        st = self.structure
        for c in point:
            st = _common_structure(st, c.structure)
        pt = [st.coerce(c) for c in point]
        f = self.promote(st)
        minv = f._check_domain(pt)
        value = f._eval_by_substitution(pt)
        if f.tail.is_infinite:
            bound = INF
        elif f.tail.is_neg_infinite:
            bound = NEG_INF
        else:
            scaled = minv * (f.cap + 1) if minv.finite else INF
            bound = f.tail + scaled if scaled.finite else INF
        if f.coeff_err.finite:
            # coordinates are integral here, so |P^J| <= 1 for every stored key
            bound = val_min(bound, f.coeff_err)
        elif f.coeff_err.is_neg_infinite:
            bound = NEG_INF
        return value, bound

    def _eval_by_substitution(self, pt):
        cur = self
        for var in range(self.nvars - 1, 0, -1):
            cur = cur._substitute_last(pt[var])
        # one variable (or none) left
        if cur.nvars == 0:
            return cur.constant_term()
        x = pt[0]
        acc = cur.structure.zero()
        for e in range(cur.degree(), -1, -1):
            acc = acc * x + cur.coefficient((e,))
        return acc

    def _substitute_last(self, value: PAdicNumber):
        st = _common_structure(self.structure, value.structure)
        f = self.promote(st)
        value = st.coerce(value)
        powers = {0: st.one()}
        def power(e):
            have = powers.get(e)
            if have is None:
                have = power(e - 1) * value
                powers[e] = have
            return have
        table: dict[tuple, PAdicNumber] = {}
        for key, c in f.coeffs.items():
            head, e = key[:-1], key[-1]
            term = c * power(e) if e else c
            cur = table.get(head)
            table[head] = term if cur is None else cur + term
        return TruncatedSeries(st, f.nvars - 1, f.cap, table,
                               tail=f.tail, coeff_err=f.coeff_err)

    def substitute(self, assignments: Mapping[int, PAdicNumber]) -> "TruncatedSeries":
        """Partially evaluate some variables; the result keeps the others."""
        cur = self
        for var in sorted(assignments, reverse=True):
            if var != cur.nvars - 1:
                cur = cur._swap_to_last(var)
            cur = cur._substitute_last(assignments[var])
        return cur

    def _swap_to_last(self, var: int):
        last = self.nvars - 1
        table = {}
        for key, c in self.coeffs.items():
            k = list(key)
            k[var], k[last] = k[last], k[var]
            table[tuple(k)] = c
        return TruncatedSeries(self.structure, self.nvars, self.cap, table,
                               tail=self.tail, coeff_err=self.coeff_err)

    # -- serialization ---------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for key, c in self.terms_sorted():
            lines.append(",".join(str(e) for e in key) + " : " + coeff_to_text(c))
        return "\n".join(lines)

    @classmethod
    def from_text(cls, structure: PAdicStructure, nvars: int, cap: int,
                  text: str) -> "TruncatedSeries":
        table = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise PadicError(f"series line {lineno}: missing ':'")
            left, _, right = line.partition(":")
            try:
                key = tuple(int(tok) for tok in left.strip().split(","))
            except ValueError as exc:
                raise PadicError(f"series line {lineno}: bad multi-index") from exc
            c = coeff_from_text(structure, right.strip())
            table[key] = table.get(key, structure.zero()) + c
        return cls(structure, nvars, cap, table)


# ---------------------------------------------------------------------------
# Weierstrass preparation


def weierstrass_degree(f: TruncatedSeries, var: int) -> int:
    """The order nu of f in `var` after reduction modulo the maximal ideal."""
    nu = None
    for key, c in f.coeffs.items():
        if any(e for i, e in enumerate(key) if i != var):
            continue
        if c.valuation() == 0:
            e = key[var]
            if nu is None or e < nu:
                nu = e
    if nu is None:
        raise CertificationError(
            "series is not distinguished in the chosen variable at working precision")
    return nu


def _split_by_var(f: TruncatedSeries, var: int, nu: int):
    """Return (low, high) with f = low + X_var^nu * high, deg_var(low) < nu."""
    low, high = {}, {}
    for key, c in f.coeffs.items():
        e = key[var]
        if e < nu:
            low[key] = c
        else:
            k = tuple(x - nu if i == var else x for i, x in enumerate(key))
            high[k] = c
    mk = lambda t: TruncatedSeries(f.structure, f.nvars, f.cap, t,
                                   tail=f.tail, coeff_err=f.coeff_err)
    return mk(low), mk(high)


def _strip_below(f: TruncatedSeries, digits: int) -> TruncatedSeries:
    """Drop coefficients that vanish modulo p^digits (sub-precision noise)."""
    table = {k: c for k, c in f.coeffs.items() if c.valuation() < digits}
    if len(table) == len(f.coeffs):
        return f
    return TruncatedSeries(f.structure, f.nvars, f.cap, table,
                           tail=f.tail, coeff_err=f.coeff_err)


def weierstrass_divide(g: TruncatedSeries, f: TruncatedSeries, var: int,
                       nu: int | None = None):
    """Division g = q*f + r with deg_var(r) < nu, by successive approximation.

    The iteration contracts in the maximal ideal of R[[X']]; terms below
    p^(N+8) are dropped, so q and r are exact through degree D modulo the
    precision ideal.
    """
    if nu is None:
        nu = weierstrass_degree(f, var)
    A, E = _split_by_var(f, var, nu)
    Einv = E.inverse()
    st = f.structure
    floor = st.N + 8
    q = TruncatedSeries.zero(st, f.nvars, f.cap)
    r = TruncatedSeries.zero(st, f.nvars, f.cap)
    work = g
    budget = (st.N + 8) * st.e + f.cap + 8
    for _ in range(budget):
        work = _strip_below(work, floor)
        low, high = _split_by_var(work, var, nu)
        r = r + low
        if high.is_zero():
            return q, r
        t = Einv * high
        q = q + t
        work = -(A * t)
    raise PrecisionError("Weierstrass division did not converge within budget")


def weierstrass_prepare(f: TruncatedSeries, var: int):
    """f = unit * dpoly with dpoly monic of degree nu in the variable.

    Returns (unit, dpoly_coefficients) where the coefficients are series in
    the remaining variables, listed from degree 0 to nu (the last one is 1).
    """
    nu = weierstrass_degree(f, var)
    st = f.structure
    xnu = TruncatedSeries(st, f.nvars, f.cap,
                          {tuple(nu if i == var else 0 for i in range(f.nvars)): st.one()})
    q, r = weierstrass_divide(xnu, f, var, nu)
    c0 = q.constant_term()
    if not c0.is_unit():
        raise PrecisionError("preparation quotient is not a unit at working precision")
    unit = q.inverse()
    dpoly_full = xnu - r
    coeffs = []
    for j in range(nu + 1):
        table = {}
        for key, c in dpoly_full.coeffs.items():
            if key[var] == j:
                k = tuple(e for i, e in enumerate(key) if i != var)
                table[k] = c
        coeffs.append(TruncatedSeries(st, f.nvars - 1, f.cap, table,
                                      tail=f.tail, coeff_err=f.coeff_err))
    return unit, coeffs
