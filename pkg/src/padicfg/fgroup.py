"""One-dimensional formal group laws and finite products of them.

Supported constructions: additive, multiplicative (X + Y + XY), Lubin-Tate
laws built degree by degree from a Frobenius polynomial f (pi X mod deg 2,
X^q mod pi), and laws recovered from a logarithm with integral coefficients.
Derived maps ([m], log, exp, the inverse series) are memoized per law.

Point arithmetic distinguishes exact backends (the multiplicative unit
chart, additive) from truncated-series evaluation, which returns an error
bound so that torsion-level consumers can certify their results.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .padic import (
    INF,
    CertificationError,
    InternalCheckError,
    PAdicNumber,
    PAdicStructure,
    PadicError,
    RationalValuation,
    val_min,
)
from .series import TruncatedSeries, _common_structure


@dataclass
class AxiomFailure:
    axiom: str
    key: tuple
    detail: str


@dataclass
class AxiomReport:
    identity: bool
    commutativity: bool
    associativity: bool
    integrality: bool
    first_failure: Optional[AxiomFailure] = None

    @property
    def all_pass(self) -> bool:
        return self.identity and self.commutativity and self.associativity and self.integrality

    def merge(self, other: "AxiomReport") -> "AxiomReport":
        return AxiomReport(
            self.identity and other.identity,
            self.commutativity and other.commutativity,
            self.associativity and other.associativity,
            self.integrality and other.integrality,
            self.first_failure or other.first_failure,
        )


@dataclass
class HeightResult:
    """Height of a one-dimensional law; `infinite_at_precision` means [p]
    reduces to 0 modulo p through the cap (so h > log_p(cap), if finite)."""
    value: Optional[int]
    infinite_at_precision: bool
    certified_through: int

    def __eq__(self, other):
        if isinstance(other, int):
            return not self.infinite_at_precision and self.value == other
        if isinstance(other, HeightResult):
            return (self.value, self.infinite_at_precision) == (other.value, other.infinite_at_precision)
        return NotImplemented

    def __repr__(self):
        if self.infinite_at_precision:
            return f"height(infinite through D={self.certified_through})"
        return f"height({self.value})"


class FormalGroupLaw:
    """A formal group law of dimension n, stored as n one-dimensional factors."""

    def __init__(self, structure: PAdicStructure, cap: int, *,
                 law: TruncatedSeries | None = None, tag: str = "custom",
                 tag_params: tuple = (), exact_p: Sequence | None = None,
                 subs: Sequence["FormalGroupLaw"] | None = None,
                 _skip_check: bool = False):
        self.structure = structure
        self.cap = cap
        self._lock = threading.Lock()
        self._memo: dict = {}
        if subs is not None:
            self.dim = len(subs)
            self.subs = tuple(subs)
            self.law = None
            self.tag = "product"
            self.tag_params = ()
            self.exact_p = None
            if self.dim < 1:
                raise PadicError("a product law needs at least one factor")
            for s in self.subs:
                if s.dim != 1:
                    raise PadicError("products are built from one-dimensional laws")
        else:
            self.dim = 1
            self.subs = (self,)
            self.law = law
            self.tag = tag
            self.tag_params = tag_params
            self.exact_p = list(exact_p) if exact_p is not None else None
            if not _skip_check:
                report = self.check_axioms()
                if not report.all_pass:
                    raise CertificationError(
                        f"group-law axioms fail: {report.first_failure}")

    # -- constructions -------------------------------------------------------

    @classmethod
    def additive(cls, structure: PAdicStructure, cap: int) -> "FormalGroupLaw":
        f = TruncatedSeries.from_terms(structure, 2, cap, {(1, 0): 1, (0, 1): 1})
        return cls(structure, cap, law=f, tag="additive",
                   exact_p=[0, structure.p])

    @classmethod
    def multiplicative(cls, structure: PAdicStructure, cap: int) -> "FormalGroupLaw":
        f = TruncatedSeries.from_terms(structure, 2, cap,
                                       {(1, 0): 1, (0, 1): 1, (1, 1): 1})
        p = structure.p
        exact_p = [math.comb(p, k) for k in range(p + 1)]
        exact_p[0] = 0  # (1+X)^p - 1
        return cls(structure, cap, law=f, tag="multiplicative", exact_p=exact_p)

    @classmethod
    def lubin_tate(cls, structure: PAdicStructure, cap: int,
                   frobenius: Sequence) -> "FormalGroupLaw":
        """The unique law commuting with f; built degree by degree."""
        if structure.degree != 1:
            raise PadicError("Lubin-Tate construction is supported over Z_p")
        p = structure.p
        f = [structure.coerce(c) for c in frobenius]
        if len(f) < 2 or not f[0].is_zero():
            raise CertificationError("Frobenius series must vanish at 0")
        pi = f[1]
        if pi.valuation() != 1:
            raise CertificationError("linear coefficient must be a uniformizer")
        q = p ** structure.f
        if len(f) <= q:
            raise CertificationError("f must reduce to X^q modulo pi")
        for j, c in enumerate(f):
            if j == 1:
                continue
            target = c - 1 if j == q else c
            tv = target.valuation()
            if tv.finite and tv < 1:
                raise CertificationError(f"f fails f = X^q mod pi at degree {j}")
        fser = TruncatedSeries.from_terms(structure, 1, cap,
                                          {(j,): c for j, c in enumerate(f) if j})
        F = TruncatedSeries.from_terms(structure, 2, cap, {(1, 0): 1, (0, 1): 1})
        x2 = TruncatedSeries.variable(structure, 0, 2, cap)
        y2 = TruncatedSeries.variable(structure, 1, 2, cap)
        fx = fser.compose([x2])
        fy = fser.compose([y2])
        for r in range(1, cap):
            Ft = F.truncated(r + 1)
            err = fser.compose([Ft]) - Ft.compose([fx.truncated(r + 1), fy.truncated(r + 1)])
            hom = {k: c for k, c in err.coeffs.items() if sum(k) == r + 1}
            if not hom:
                continue
            denom = pi ** (r + 1) - pi
            delta = {k: c / denom for k, c in hom.items()}
            F = F + TruncatedSeries(structure, 2, cap, delta)
        # the true law continues beyond the cap with integral coefficients
        F = TruncatedSeries(structure, 2, cap, F.coeffs, tail=0)
        law = cls(structure, cap, law=F, tag="lubin_tate",
                  tag_params=tuple(frobenius),
                  exact_p=[c for c in frobenius] if pi.agrees_with(p) else None)
        # certifying residual: f(F) = F(f, f) through the cap
        resid = fser.compose([F]) - F.compose([fx, fy])
        for k, c in resid.coeffs.items():
            if not c.is_zero(structure.N - 2):
                raise InternalCheckError(
                    f"Lubin-Tate residual nonzero at {k}: construction invalid")
        return law

    @classmethod
    def from_log(cls, structure: PAdicStructure, cap: int,
                 log_series: TruncatedSeries) -> "FormalGroupLaw":
        """F = exp(log X + log Y); errors if any coefficient is non-integral."""
        ell = log_series
        if ell.nvars != 1:
            raise PadicError("the logarithm must be one-variable")
        if not ell.constant_term().is_zero():
            raise CertificationError("log must vanish at 0")
        if not ell.coefficient((1,)).agrees_with(1):
            raise CertificationError("log must have derivative 1 at 0")
        exp = ell.reversion()
        x2 = TruncatedSeries.variable(structure, 0, 2, cap)
        y2 = TruncatedSeries.variable(structure, 1, 2, cap)
        s = ell.compose([x2]) + ell.compose([y2])
        F = exp.compose([s])
        for k, c in F.coeffs.items():
            v = c.valuation()
            if v.finite and v < 0:
                raise CertificationError(
                    f"from_log law has a non-integral coefficient at {k}")
        # integrality beyond the cap is the construction's premise (the data
        # must define a law over R); recorded as a tail bound of 0
        F = TruncatedSeries(structure, 2, cap, F.coeffs, tail=0)
        law = cls(structure, cap, law=F, tag="from_log",
                  tag_params=(log_series,))
        law._memo[("log",)] = ell
        law._memo[("exp",)] = exp
        return law

    @classmethod
    def product(cls, laws: Sequence["FormalGroupLaw"]) -> "FormalGroupLaw":
        st = laws[0].structure
        cap = min(l.cap for l in laws)
        factors = []
        for l in laws:
            st = _common_structure(st, l.structure)
            factors.extend(l.subs)
        return cls(st, cap, subs=factors)

    # -- inspection ------------------------------------------------------------

    def __repr__(self):
        if self.dim == 1:
            return f"<FormalGroupLaw {self.tag} over p={self.structure.p}, D={self.cap}>"
        tags = ",".join(s.tag for s in self.subs)
        return f"<FormalGroupLaw product[{tags}] p={self.structure.p}, D={self.cap}>"

    def component_series(self, i: int) -> TruncatedSeries:
        """Factor i's law as a series in 2n variables (X_1..X_n, Y_1..Y_n)."""
        n = self.dim
        f = self.subs[i].law
        table = {}
        for (a, b), c in f.coeffs.items():
            key = [0] * (2 * n)
            key[i] = a
            key[n + i] = b
            table[tuple(key)] = c
        return TruncatedSeries(f.structure, 2 * n, f.cap, table,
                               tail=f.tail, coeff_err=f.coeff_err)

    # -- axioms ---------------------------------------------------------------

    def check_axioms(self) -> AxiomReport:
        if self.dim > 1:
            report = self.subs[0].check_axioms()
            for s in self.subs[1:]:
                report = report.merge(s.check_axioms())
            return report
        F = self.law
        st = self.structure
        failure = None
        identity = True
        for (a, b), c in sorted(F.coeffs.items()):
            if b == 0 and not (a == 1 and c.agrees_with(1) or a != 1 and c.is_zero()):
                identity = False
                failure = failure or AxiomFailure("identity", (a, b), "F(X,0) != X")
            if a == 0 and not (b == 1 and c.agrees_with(1) or b != 1 and c.is_zero()):
                identity = False
                failure = failure or AxiomFailure("identity", (a, b), "F(0,Y) != Y")
        commutativity = True
        for (a, b), c in sorted(F.coeffs.items()):
            if not F.coefficient((b, a)).agrees_with(c):
                commutativity = False
                failure = failure or AxiomFailure("commutativity", (a, b),
                                                  "F(X,Y) != F(Y,X)")
                break
        integrality = True
        for k, c in sorted(F.coeffs.items()):
            v = c.valuation()
            if v.finite and v < 0:
                integrality = False
                failure = failure or AxiomFailure("integrality", k, f"v = {v}")
                break
        associativity = True
        x3 = TruncatedSeries.variable(st, 0, 3, self.cap)
        y3 = TruncatedSeries.variable(st, 1, 3, self.cap)
        z3 = TruncatedSeries.variable(st, 2, 3, self.cap)
        Fxy = F.compose([x3, y3])
        Fyz = F.compose([y3, z3])
        lhs = F.compose([Fxy, z3])
        rhs = F.compose([x3, Fyz])
        diff = lhs - rhs
        for k, c in sorted(diff.coeffs.items()):
            if not c.is_zero(st.N - 2):
                associativity = False
                failure = failure or AxiomFailure("associativity", k, "F(F(X,Y),Z) != F(X,F(Y,Z))")
                break
        return AxiomReport(identity, commutativity, associativity, integrality, failure)

    # -- derived maps -----------------------------------------------------------

    def _memoized(self, key, build):
        with self._lock:
            have = self._memo.get(key)
        if have is not None:
            return have
        value = build()
        with self._lock:
            self._memo.setdefault(key, value)
            return self._memo[key]

    def inverse_series(self) -> TruncatedSeries:
        """iota with F(X, iota(X)) = 0 through the cap (dimension 1)."""
        self._require_dim1()
        def build():
            st = self.structure
            cap = self.cap
            x = TruncatedSeries.variable(st, 0, 1, cap)
            iota = -x
            for m in range(2, cap + 1):
                comp = self.law.compose([x.truncated(m), iota.truncated(m)])
                cm = comp.coefficient((m,))
                if not cm.is_zero():
                    iota = iota - TruncatedSeries(st, 1, cap, {(m,): cm})
            # iota continues integrally beyond the cap unless the law is polynomial
            tail = INF if self.tag == "additive" else RationalValuation(0)
            return TruncatedSeries(st, 1, cap, iota.coeffs, tail=tail)
        return self._memoized(("inv",), build)

    def mult_by(self, m: int):
        """The multiplication-by-m series (a list of per-factor series if n > 1)."""
        if self.dim > 1:
            return [s.mult_by(m) for s in self.subs]
        def build():
            st = self.structure
            cap = self.cap
            if m == 0:
                return TruncatedSeries.zero(st, 1, cap)
            if m < 0:
                return self.inverse_series().compose([self.mult_by(-m)])
            if self.tag == "additive":
                return TruncatedSeries.from_terms(st, 1, cap, {(1,): m})
            if self.tag == "multiplicative":
                terms = {(k,): math.comb(m, k) for k in range(1, min(m, cap) + 1)}
                tail = INF if m <= cap else RationalValuation(0)
                return TruncatedSeries.from_terms(st, 1, cap, terms, tail=tail)
            if self.tag == "lubin_tate" and self.exact_p is not None and m == st.p:
                return TruncatedSeries.from_terms(
                    st, 1, cap, {(j,): c for j, c in enumerate(self.exact_p) if j},
                    tail=INF if len(self.exact_p) - 1 <= cap else RationalValuation(0))
            if self.tag == "from_log":
                log = self.formal_log()
                return self.formal_exp().compose([log.scale(m)])
            prev = self.mult_by(m - 1)
            x = TruncatedSeries.variable(st, 0, 1, cap)
            return self.law.compose([prev, x])
        return self._memoized(("mult", m), build)

    def exact_mult_p_poly(self) -> list[PAdicNumber] | None:
        """[p] as an exact polynomial, when the construction provides one."""
        if self.dim != 1:
            return None
        st = self.structure
        if self.tag == "multiplicative":
            p = st.p
            return [st.from_int(math.comb(p, k)) if k else st.zero()
                    for k in range(p + 1)]
        if self.tag == "additive":
            return [st.zero(), st.from_int(st.p)]
        if self.tag == "lubin_tate" and self.exact_p is not None:
            return [st.coerce(c) for c in self.exact_p]
        return None

    def formal_log(self) -> TruncatedSeries:
        """log with log'(X) = 1/F_Y(X, 0), log(0) = 0, log'(0) = 1."""
        self._require_dim1()
        def build():
            st = self.structure
            cap = self.cap
            dFy = self.law.derivative(1)
            w = dFy.substitute({1: st.zero()})  # series in X alone
            w = TruncatedSeries(st, 1, cap, {(k[0],): c for k, c in w.coeffs.items()})
            winv = w.inverse()
            p = st.p
            table = {}
            for (k,), c in winv.coeffs.items():
                if k + 1 <= cap:
                    table[(k + 1,)] = c / (k + 1)
            tail = -math.floor(math.log(cap + 1, p))
            return TruncatedSeries(st, 1, cap, table, tail=tail)
        return self._memoized(("log",), build)

    def formal_exp(self) -> TruncatedSeries:
        self._require_dim1()
        return self._memoized(("exp",), lambda: self.formal_log().reversion())

    def height(self) -> HeightResult:
        """h with [p] = unit * X^(p^h) modulo the maximal ideal (dimension 1)."""
        self._require_dim1()
        mp = self.mult_by(self.structure.p)
        lowest = None
        for (k,), c in mp.coeffs.items():
            if c.valuation() == 0 and (lowest is None or k < lowest):
                lowest = k
        if lowest is None:
            return HeightResult(None, True, self.cap)
        h = round(math.log(lowest, self.structure.p))
        if self.structure.p ** h != lowest:
            raise InternalCheckError(
                f"[p] mod p has lowest degree {lowest}, not a power of p")
        return HeightResult(h, False, self.cap)

    def _require_dim1(self):
        if self.dim != 1:
            raise PadicError("operation defined for one-dimensional laws; use factors")

    # -- point arithmetic ---------------------------------------------------------

    def add_points(self, P: Sequence[PAdicNumber], Q: Sequence[PAdicNumber]):
        """Pointwise sum, with a valuation bound on the truncation error."""
        coords, err = [], INF
        for i, s in enumerate(self.subs):
            c, e = s._add1(P[i], Q[i])
            coords.append(c)
            err = val_min(err, e)
        return tuple(coords), err

    def neg_point(self, P: Sequence[PAdicNumber]):
        coords, err = [], INF
        for i, s in enumerate(self.subs):
            c, e = s._neg1(P[i])
            coords.append(c)
            err = val_min(err, e)
        return tuple(coords), err

    def mult_point(self, m: int, P: Sequence[PAdicNumber]):
        coords, err = [], INF
        for i, s in enumerate(self.subs):
            c, e = s._mult1(m, P[i])
            coords.append(c)
            err = val_min(err, e)
        return tuple(coords), err

    def zero_point(self, structure: PAdicStructure | None = None):
        st = structure or self.structure
        return tuple(st.zero() for _ in range(self.dim))

    def _add1(self, x: PAdicNumber, y: PAdicNumber):
        st = _common_structure(x.structure, y.structure)
        x, y = st.coerce(x), st.coerce(y)
        if self.tag == "multiplicative":
            one = st.one()
            return (one + x) * (one + y) - one, INF
        if self.tag == "additive":
            return x + y, INF
        return self.law.evaluate([x, y])

    def _neg1(self, x: PAdicNumber):
        st = x.structure
        if self.tag == "multiplicative":
            one = st.one()
            return (one + x).inverse() - one, INF
        if self.tag == "additive":
            return -x, INF
        return self.inverse_series().evaluate([x])

    def _mult1(self, m: int, x: PAdicNumber):
        st = x.structure
        if self.tag == "multiplicative":
            one = st.one()
            return (one + x) ** m - one, INF
        if self.tag == "additive":
            return x * m, INF
        if m == 0:
            return st.zero(), INF
        return self.mult_by(m).evaluate([x])

    def exact_mult_p_eval(self, x: PAdicNumber) -> PAdicNumber:
        """Evaluate [p] exactly; requires an exact [p] polynomial."""
        poly = self.exact_mult_p_poly() if self.dim == 1 else None
        if poly is None:
            raise PadicError("no exact multiplication-by-p polynomial for this law")
        st = x.structure
        acc = st.zero()
        for c in reversed(poly):
            acc = acc * x + st.coerce(c)
        return acc

    # -- import/export ---------------------------------------------------------

    def to_text(self) -> str:
        lines = [
            "padicfg-group v1",
            f"p = {self.structure.p}",
            f"N = {self.structure.N}",
            f"D = {self.cap}",
            f"dim = {self.dim}",
            f"base = {self.structure.describe()}",
        ]
        for i, s in enumerate(self.subs):
            lines.append(f"factor {i} tag = {s.tag}")
            lines.append(f"series {i}:")
            lines.append(s.law.to_text())
            lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FormalGroupLaw":
        from .padic import Qp
        lines = text.splitlines()
        if not lines or lines[0].strip() != "padicfg-group v1":
            raise PadicError("not a padicfg group-law file")
        header = {}
        i = 1
        while i < len(lines) and "=" in lines[i] and not lines[i].startswith("factor"):
            k, _, v = lines[i].partition("=")
            header[k.strip()] = v.strip()
            i += 1
        st = Qp(int(header["p"]), int(header["N"]))
        cap = int(header["D"])
        dim = int(header["dim"])
        factors = []
        tag = "custom"
        while i < len(lines):
            line = lines[i].strip()
            if line.startswith("factor"):
                tag = line.partition("tag =")[2].strip()
                i += 1
            elif line.startswith("series"):
                i += 1
                block = []
                while i < len(lines) and lines[i].strip() != "end":
                    block.append(lines[i])
                    i += 1
                i += 1
                ser = TruncatedSeries.from_text(st, 2, cap, "\n".join(block))
                factors.append(cls(st, cap, law=ser, tag=tag))
            else:
                i += 1
        if len(factors) != dim:
            raise PadicError("factor count does not match dim header")
        if dim == 1:
            return factors[0]
        return cls.product(factors)


def standard_group(kind: str, base: PAdicStructure, cap: int, **params) -> FormalGroupLaw:
    """Spec-named constructor dispatch."""
    if kind == "additive":
        return FormalGroupLaw.additive(base, cap)
    if kind == "multiplicative":
        return FormalGroupLaw.multiplicative(base, cap)
    if kind == "lubin_tate":
        return FormalGroupLaw.lubin_tate(base, cap, params["frobenius"])
    if kind == "from_log":
        return FormalGroupLaw.from_log(base, cap, params["log_series"])
    raise PadicError(f"unknown group kind {kind!r}")


def check_axioms(F: FormalGroupLaw) -> AxiomReport:
    return F.check_axioms()


def mult_by(F: FormalGroupLaw, m: int):
    return F.mult_by(m)


def formal_log(F: FormalGroupLaw) -> TruncatedSeries:
    return F.formal_log()


def formal_exp(F: FormalGroupLaw) -> TruncatedSeries:
    return F.formal_exp()


def height(F: FormalGroupLaw) -> HeightResult:
    return F.height()


@dataclass
class HomomorphismReport:
    is_homomorphism: bool
    first_failure: Optional[AxiomFailure]
    commutes_with_doubling: bool
    commutation_failure: Optional[AxiomFailure]


def is_homomorphism(h: TruncatedSeries, F: FormalGroupLaw,
                    G: FormalGroupLaw) -> HomomorphismReport:
    """h(F(X,Y)) = G(h(X), h(Y)) through the cap, plus the [2]-commutation check."""
    if h.nvars != 1:
        raise PadicError("homomorphism candidates are one-variable series")
    if not h.constant_term().is_zero():
        raise PadicError("h must vanish at 0")
    st = _common_structure(F.structure, G.structure)
    cap = min(F.cap, G.cap, h.cap)
    x2 = TruncatedSeries.variable(st, 0, 2, cap)
    y2 = TruncatedSeries.variable(st, 1, 2, cap)
    lhs = h.compose([F.law])
    rhs = G.law.compose([h.compose([x2]), h.compose([y2])])
    diff = lhs - rhs
    failure = None
    for k, c in sorted(diff.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0])):
        if not c.is_zero(st.N - 2):
            failure = AxiomFailure("homomorphism", k, "h(F) != G(h,h)")
            break
    two_f = F.mult_by(2)
    two_g = G.mult_by(2)
    cdiff = h.compose([two_f]) - two_g.compose([h])
    cfail = None
    for k, c in sorted(cdiff.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0])):
        if not c.is_zero(st.N - 2):
            cfail = AxiomFailure("commutation", k, "h([2]_F) != [2]_G(h)")
            break
    return HomomorphismReport(failure is None, failure, cfail is None, cfail)
