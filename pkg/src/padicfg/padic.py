"""Exact arithmetic in the p-adic rationals and their finite extensions.

Extensions are built as explicit towers over Q_p: at most one unramified
step first, then ramified (relative Eisenstein) steps.  The tower order
Z_p[gen_1, ..., gen_k] is the full ring of integers for such towers, and
its monomial basis has the property that valuations are computed exactly
from coordinates: distinct ramified monomials have distinct fractional
valuations, and on the unramified part the valuation of a combination is
the minimum of the coefficient valuations.

Elements are carried at a fixed working precision: coordinates are tracked
modulo p^(known + shift) where `shift` is the power of p in the denominator
and `known` is the element's absolute precision in base-p digits.  Division
by y records a precision loss of 2*v(y) (in v(p)=1 units) on the result.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence


class PadicError(Exception):
    """Base class for errors raised by this package."""


class StructureMismatchError(PadicError):
    """Operands belong to unrelated p-adic structures."""


class PrecisionError(PadicError):
    """A result or certificate cannot be produced at working precision."""


class CertificationError(PadicError):
    """An exactness certificate (Eisenstein, irreducibility, Newton) failed."""


class BudgetError(PadicError):
    """A configured hard cap (degree, torsion count, iteration) was exceeded."""


class InternalCheckError(PadicError):
    """An internal identity that would falsify a verified instance failed."""


# headroom above the public precision N, absorbing construction-time losses
GUARD_DIGITS = 80


# ---------------------------------------------------------------------------
# rational valuations


class RationalValuation:
    """An element of (1/e)Z extended by +inf (zero to precision) and -inf.

    Values are kept in lowest terms; the order is the rational order.
    """

    __slots__ = ("_num", "_den")

    def __init__(self, value, den=None):
        if den is not None:
            value = Fraction(value, den)
        if value is _POS or value == math.inf:
            self._num, self._den = 1, 0
        elif value is _NEG or value == -math.inf:
            self._num, self._den = -1, 0
        else:
            f = Fraction(value)
            self._num, self._den = f.numerator, f.denominator

    @property
    def numerator(self):
        return self._num

    @property
    def denominator(self):
        return self._den

    @property
    def is_infinite(self):
        return self._den == 0 and self._num > 0

    @property
    def is_neg_infinite(self):
        return self._den == 0 and self._num < 0

    @property
    def finite(self):
        return self._den != 0

    def as_fraction(self) -> Fraction:
        if self._den == 0:
            raise ValueError("infinite valuation has no finite value")
        return Fraction(self._num, self._den)

    def _key(self):
        if self._den == 0:
            return (self._num * math.inf,)
        return (Fraction(self._num, self._den),)

    def __eq__(self, other):
        other = _as_val(other)
        return (self._num, self._den) == (other._num, other._den)

    def __hash__(self):
        return hash((self._num, self._den))

    def __lt__(self, other):
        other = _as_val(other)
        return self._cmp(other) < 0

    def __le__(self, other):
        other = _as_val(other)
        return self._cmp(other) <= 0

    def __gt__(self, other):
        other = _as_val(other)
        return self._cmp(other) > 0

    def __ge__(self, other):
        other = _as_val(other)
        return self._cmp(other) >= 0

    def _cmp(self, other):
        a = self._as_ext()
        b = other._as_ext()
        return (a > b) - (a < b)

    def _as_ext(self):
        if self._den == 0:
            return math.inf if self._num > 0 else -math.inf
        return Fraction(self._num, self._den)

    def __add__(self, other):
        other = _as_val(other)
        if self._den == 0 or other._den == 0:
            s = self._as_ext() + other._as_ext()  # inf + -inf raises
            return INF if s > 0 else NEG_INF
        return RationalValuation(self.as_fraction() + other.as_fraction())

    __radd__ = __add__

    def __mul__(self, k: int):
        if self._den == 0:
            if k == 0:
                raise ValueError("0 * infinite valuation")
            return self if k > 0 else RationalValuation(-self._as_ext())
        return RationalValuation(self.as_fraction() * k)

    __rmul__ = __mul__

    def __neg__(self):
        if self._den == 0:
            return NEG_INF if self._num > 0 else INF
        return RationalValuation(-self.as_fraction())

    def __str__(self):
        if self.is_infinite:
            return "inf"
        if self.is_neg_infinite:
            return "-inf"
        if self._den == 1:
            return str(self._num)
        return f"{self._num}/{self._den}"

    __repr__ = __str__


_POS = object()
_NEG = object()
INF = RationalValuation(_POS)
NEG_INF = RationalValuation(_NEG)


def _as_val(v) -> RationalValuation:
    if isinstance(v, RationalValuation):
        return v
    return RationalValuation(v)


def val_min(*vals) -> RationalValuation:
    return min((_as_val(v) for v in vals), key=RationalValuation._as_ext)


def as_valuation(v) -> RationalValuation:
    """Coerce ints/Fractions/floats(inf) to a RationalValuation."""
    return _as_val(v)


# ---------------------------------------------------------------------------
# polynomial arithmetic over F_p (dense tuples, low degree first)


def _ffp_trim(a):
    i = len(a)
    while i > 0 and a[i - 1] == 0:
        i -= 1
    return tuple(a[:i])


def _ffp_mul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _ffp_trim(out)

def _ffp_divmod(a, b, p):
    a = list(a)
    db, lb = len(b) - 1, b[-1]
    inv = pow(lb, -1, p)
    q = [0] * max(0, len(a) - db)
    while len(_ffp_trim(a)) - 1 >= db and a:
        a = list(_ffp_trim(a))
        if len(a) - 1 < db:
            break
        c = (a[-1] * inv) % p
        k = len(a) - 1 - db
        q[k] = c
        for j, bj in enumerate(b):
            a[k + j] = (a[k + j] - c * bj) % p
    return _ffp_trim(q), _ffp_trim(a)


def _ffp_gcd(a, b, p):
    a, b = _ffp_trim(a), _ffp_trim(b)
    while b:
        a, b = b, _ffp_divmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], -1, p)
        a = tuple((c * inv) % p for c in a)
    return a


def _ffp_powmod(a, n, mod, p):
    result = (1,)
    a = _ffp_divmod(a, mod, p)[1]
    while n:
        if n & 1:
            result = _ffp_divmod(_ffp_mul(result, a, p), mod, p)[1]
        a = _ffp_divmod(_ffp_mul(a, a, p), mod, p)[1]
        n >>= 1
    return result


def _ffp_sub_x(a, p):
    # a(x) - x
    out = list(a) + [0] * max(0, 2 - len(a))
    out[1] = (out[1] - 1) % p
    return _ffp_trim(out)


def ffp_is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Irreducibility over F_p of a monic-after-reduction polynomial."""
    g = _ffp_trim([c % p for c in poly])
    n = len(g) - 1
    if n <= 0:
        return False
    if g[-1] != 1:
        inv = pow(g[-1], -1, p)
        g = tuple((c * inv) % p for c in g)
    x = (0, 1)
    # x^(p^n) == x mod g, and gcd(x^(p^(n/q)) - x, g) == 1 for prime q | n
    if _ffp_sub_x(_ffp_powmod(x, p**n, g, p), p):
        return False
    m, q, primes = n, 2, set()
    while q * q <= m:
        if m % q == 0:
            primes.add(q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        primes.add(m)
    for q in primes:
        diff = _ffp_sub_x(_ffp_powmod(x, p ** (n // q), g, p), p)
        if len(_ffp_gcd(diff, g, p)) > 1:
            return False
    return True


def find_irreducible_poly(p: int, degree: int) -> tuple[int, ...]:
    """Deterministically pick a monic irreducible polynomial over F_p."""
    if degree == 1:
        return (0, 1)
    bound = p ** degree
    for code in range(bound):
        coeffs = []
        c = code
        for _ in range(degree):
            coeffs.append(c % p)
            c //= p
        poly = tuple(coeffs) + (1,)
        if poly[0] != 0 and ffp_is_irreducible(poly, p):
            return poly
    raise PadicError("no irreducible polynomial found")  # unreachable


def _ffp_xgcd_inverse(a, mod, p):
    # inverse of a modulo the monic irreducible mod, over F_p
    r0, r1 = _ffp_trim(mod), _ffp_trim(a)
    s0, s1 = (), (1,)
    while r1:
        q, r = _ffp_divmod(r0, r1, p)
        r0, r1 = r1, r
        qs = _ffp_mul(q, s1, p)
        news = [0] * max(len(s0), len(qs))
        for i, c in enumerate(s0):
            news[i] = c
        for i, c in enumerate(qs):
            news[i] = (news[i] - c) % p
        s0, s1 = s1, _ffp_trim(news)
    if len(r0) != 1:
        raise ZeroDivisionError("element not invertible in residue field")
    inv = pow(r0[0], -1, p)
    return tuple((c * inv) % p for c in s0)


# ---------------------------------------------------------------------------
# structures


class ExtensionStep:
    """One step of a tower: kind, degree and minimal polynomial coordinates.

    The minimal polynomial is monic; non-leading coefficients are stored as
    coordinate vectors over the structure being extended.
    """

    __slots___ = ("kind", "degree", "coeff_vectors")

    def __init__(self, kind: str, degree: int, coeff_vectors):
        self.kind = kind
        self.degree = degree
        self.coeff_vectors = coeff_vectors  # tuple of (vec, shift) pairs, len degree


class PAdicStructure:
    """A fixed tower Q_p -> (unramified step)? -> Eisenstein steps.

    Carries prime p, working precision N (digits, v(p) = 1), ramification
    index e and residue degree f.  Instances are immutable and shared; all
    caches are write-once per key.
    """

    def __init__(self, p: int, N: int, base: "PAdicStructure | None" = None,
                 step: ExtensionStep | None = None):
        if N < 1:
            raise PadicError("working precision N must be >= 1")
        self.p = p
        self.N = N
        self.base = base
        self.step = step
        if base is None:
            self.e, self.f, self.degree = 1, 1, 1
            self._dims = ()
        else:
            self.e = base.e * (step.degree if step.kind == "eisenstein" else 1)
            self.f = base.f * (step.degree if step.kind == "unramified" else 1)
            self.degree = base.degree * step.degree
            self._dims = base._dims + (step.degree,)
        self.cap = N + GUARD_DIGITS
        self._frac = self._basis_fractions()
        self._gen_pow_cache: dict[tuple[int, int], tuple] = {}
        self._pair_table: dict[tuple[int, int], tuple] = {}
        self._misc: dict = {}

    # -- layout ------------------------------------------------------------

    def _steps(self):
        chain = []
        s = self
        while s.base is not None:
            chain.append(s)
            s = s.base
        return list(reversed(chain))

    def _basis_fractions(self):
        if self.base is None:
            return (Fraction(0),)
        sub = self.base._frac
        st = self.step
        gv = Fraction(0) if st.kind == "unramified" else Fraction(1, self.e)
        out = []
        for j in range(st.degree):
            out.extend(fr + j * gv for fr in sub)
        return tuple(out)

    def ancestors(self):
        s = self
        while s is not None:
            yield s
            s = s.base

    def signature(self) -> tuple:
        """Shape key: equal signatures mean interchangeable structures."""
        sig = self._misc.get("signature")
        if sig is None:
            if self.base is None:
                sig = ((self.p, self.N),)
            else:
                sig = self.base.signature() + (
                    (self.step.kind, self.step.degree,
                     tuple((vec, sh) for vec, sh in self.step.coeff_vectors)),)
            self._misc["signature"] = sig
        return sig

    def is_extension_of(self, other: "PAdicStructure") -> bool:
        if any(s is other for s in self.ancestors()):
            return True
        osig = other.signature()
        return self.signature()[: len(osig)] == osig

    def describe(self) -> str:
        parts = [f"Q_{self.p}"]
        for s in self._steps():
            parts.append(f"{s.step.kind}[deg {s.step.degree}]")
        return " -> ".join(parts) + f" (e={self.e}, f={self.f}, N={self.N})"

    def __repr__(self):
        return f"<PAdicStructure {self.describe()}>"

    # -- element construction ----------------------------------------------

    def zero(self) -> "PAdicNumber":
        return PAdicNumber(self, (0,) * self.degree, 0, self.cap)

    def one(self) -> "PAdicNumber":
        return self.from_int(1)

    def from_int(self, n: int) -> "PAdicNumber":
        vec = [0] * self.degree
        vec[0] = n % (self.p ** self.cap)
        return PAdicNumber(self, tuple(vec), 0, self.cap)

    def from_fraction(self, q) -> "PAdicNumber":
        q = Fraction(q)
        return self.from_int(q.numerator) / self.from_int(q.denominator)

    def from_vector(self, coords: Sequence[int], shift: int = 0) -> "PAdicNumber":
        if len(coords) != self.degree:
            raise StructureMismatchError("coordinate vector has wrong length")
        return PAdicNumber(self, tuple(int(c) for c in coords), shift, self.cap)

    def generator(self) -> "PAdicNumber":
        """The generator adjoined by the top tower step."""
        if self.base is None:
            raise PadicError("Q_p has no adjoined generator")
        vec = [0] * self.degree
        vec[self.base.degree] = 1
        return PAdicNumber(self, tuple(vec), 0, self.cap)

    def uniformizer(self) -> "PAdicNumber":
        if self.e == 1:
            return self.from_int(self.p)
        s = self
        while s.step.kind != "eisenstein":
            s = s.base  # pragma: no cover - unramified steps precede ramified
        if s is not self:
            return self.embed(s.generator())
        return self.generator()

    def coerce(self, x) -> "PAdicNumber":
        if isinstance(x, PAdicNumber):
            if x.structure is self:
                return x
            if self.is_extension_of(x.structure):
                return self.embed(x)
            raise StructureMismatchError(
                f"cannot coerce element of {x.structure!r} into {self!r}")
        if isinstance(x, int):
            return self.from_int(x)
        if isinstance(x, Fraction):
            return self.from_fraction(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to PAdicNumber")

    def embed(self, x: "PAdicNumber") -> "PAdicNumber":
        """Lossless embedding of an element of a subtower."""
        if x.structure is self:
            return x
        if not self.is_extension_of(x.structure):
            raise StructureMismatchError("not an extension of the element's structure")
        vec = [0] * self.degree
        vec[: x.structure.degree] = x.coeffs
        return PAdicNumber(self, tuple(vec), x.shift, x.known)

    def random_element(self, rng, integral: bool = True) -> "PAdicNumber":
        vec = tuple(rng.randrange(self.p ** self.N) for _ in range(self.degree))
        shift = 0 if integral else rng.randrange(3)
        return PAdicNumber(self, vec, shift, self.cap)

    # -- multiplication tables ----------------------------------------------

    def _unflatten(self, idx: int):
        exps = []
        for d in self._dims:
            exps.append(idx % d)
            idx //= d
        return exps

    def _flatten(self, exps) -> int:
        idx = 0
        for d, e in zip(reversed(self._dims), reversed(exps)):
            idx = idx * d + e
        return idx

    def _gen_power(self, s: int, t: int):
        """Coordinates of gen_s^t (t >= deg_s), reduced, as exact integers."""
        key = (s, t)
        cached = self._gen_pow_cache.get(key)
        if cached is not None:
            return cached
        steps = self._steps()
        st = steps[s].step
        d = st.degree
        if t == d:
            vec = [0] * self.degree
            subdeg = steps[s].base.degree
            for j, (cvec, _cshift) in enumerate(st.coeff_vectors):
                for tt, c in enumerate(cvec):
                    if c:
                        vec[tt + subdeg * j] -= c
            out = tuple(vec)
        else:
            prev = self._gen_power(s, t - 1)
            acc = {}
            for idx, c in enumerate(prev):
                if c:
                    exps = self._unflatten(idx)
                    exps[s] += 1
                    self._reduce_term(exps, c, acc)
            vec = [0] * self.degree
            for idx, c in acc.items():
                vec[idx] = c
            out = tuple(vec)
        self._gen_pow_cache[key] = out
        return out

    def _reduce_term(self, exps, coeff, acc):
        for s in range(len(self._dims) - 1, -1, -1):
            if exps[s] >= self._dims[s]:
                t = exps[s]
                rest = list(exps)
                rest[s] = 0
                vec = self._gen_power(s, t)
                for idx, c in enumerate(vec):
                    if c:
                        e2 = self._unflatten(idx)
                        self._reduce_term([a + b for a, b in zip(rest, e2)],
                                          coeff * c, acc)
                return
        idx = self._flatten(exps)
        acc[idx] = acc.get(idx, 0) + coeff

    def _basis_product(self, a: int, b: int):
        key = (a, b) if a <= b else (b, a)
        cached = self._pair_table.get(key)
        if cached is not None:
            return cached
        ea = self._unflatten(key[0])
        eb = self._unflatten(key[1])
        acc = {}
        self._reduce_term([x + y for x, y in zip(ea, eb)], 1, acc)
        out = tuple(sorted(acc.items()))
        self._pair_table[key] = out
        return out

    def _vec_mul(self, a: Sequence[int], b: Sequence[int], mod: int):
        if self.degree == 1:
            return ((a[0] * b[0]) % mod,)
        # scalar fast path: pure base-coordinate operand
        if all(c == 0 for c in b[1:]):
            b0 = b[0]
            return tuple((c * b0) % mod for c in a)
        if all(c == 0 for c in a[1:]):
            a0 = a[0]
            return tuple((c * a0) % mod for c in b)
        out = [0] * self.degree
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        for idx, c in self._basis_product(i, j):
                            out[idx] += ai * bj * c
        return tuple(c % mod for c in out)

    # -- residue field -----------------------------------------------------

    def _residue_slots(self):
        slots = self._misc.get("residue_slots")
        if slots is None:
            slots = tuple(i for i, fr in enumerate(self._frac) if fr == 0)[: self.degree]
            # keep only slots whose ramified exponents all vanish
            keep = []
            for i in slots:
                exps = self._unflatten(i)
                ok = True
                for s, st in enumerate(self._steps()):
                    if st.step.kind == "eisenstein" and exps[s] != 0:
                        ok = False
                if ok:
                    keep.append(i)
            slots = tuple(keep)
            assert len(slots) == self.f
            self._misc["residue_slots"] = slots
        return slots

    def _residue_minpoly(self):
        g = self._misc.get("residue_minpoly")
        if g is None:
            g = (0, 1)
            for st in self._steps():
                if st.step.kind == "unramified":
                    coeffs = [vec[0] % self.p for vec, _ in st.step.coeff_vectors]
                    g = tuple(coeffs) + (1,)
            self._misc["residue_minpoly"] = g
        return g

    def residue_vector(self, x: "PAdicNumber") -> tuple[int, ...]:
        """Image in the residue field F_{p^f}, as coordinates over F_p."""
        x = self.coerce(x)
        if x.shift != 0 and x.valuation() < 0:
            raise PadicError("element has negative valuation; no residue")
        x = x._with_shift_zero()
        slots = self._residue_slots()
        return tuple(x.coeffs[i] % self.p for i in slots)

    def _unit_inverse(self, x: "PAdicNumber") -> "PAdicNumber":
        # Newton lifting from the residue-field inverse; x must be a unit
        res = self.residue_vector(x)
        g = self._residue_minpoly()
        inv_res = _ffp_xgcd_inverse(_ffp_trim(res), g, self.p)
        slots = self._residue_slots()
        vec = [0] * self.degree
        for k, i in enumerate(slots):
            vec[i] = inv_res[k] if k < len(inv_res) else 0
        digits = x.known
        z = PAdicNumber(self, tuple(vec), 0, digits)
        two = self.from_int(2)
        # the residue seed is correct to valuation 1/e; each step doubles
        steps = math.ceil(math.log2(max(2, digits * self.e))) + 2
        for _ in range(steps):
            z = z * (two - x * z)
        return z

    def _p_over_uniformizer(self) -> "PAdicNumber":
        # the element p / pi (a unit times pi^(e-1)); used to scale divisions
        cached = self._misc.get("p_over_unif")
        if cached is None:
            pi = self.uniformizer()
            pie = pi ** self.e
            # pi^e = p * u0 with u0 a unit; coordinates divisible by p exactly once
            u0 = pie._exact_div_by_p(1)
            cached = (pi ** (self.e - 1)) * self._unit_inverse(u0)
            self._misc["p_over_unif"] = cached
        return cached


_QP_CACHE: dict[tuple[int, int], PAdicStructure] = {}


def Qp(p: int, N: int) -> PAdicStructure:
    """The base structure: Z_p carried to N digits (interned per (p, N))."""
    if p < 2 or any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
        raise PadicError(f"{p} is not prime")
    key = (p, N)
    if key not in _QP_CACHE:
        _QP_CACHE[key] = PAdicStructure(p, N)
    return _QP_CACHE[key]


# ---------------------------------------------------------------------------
# numbers


class PAdicNumber:
    """One element of a PAdicStructure.

    value = p^(-shift) * sum(coeffs[t] * basis[t]); `known` is the absolute
    precision in digits (the element is determined modulo p^known * O).
    Instances are immutable; all operators return new objects.
    """

    __slots__ = ("structure", "coeffs", "shift", "known", "_val")

    def __init__(self, structure: PAdicStructure, coeffs: tuple, shift: int, known: int):
        known = min(known, structure.cap)
        if known < 1:
            raise PrecisionError("absolute precision exhausted")
        p = structure.p
        if shift < 0:
            scale = p ** (-shift)
            coeffs = tuple(c * scale for c in coeffs)
            shift = 0
        # storage never exceeds p^cap digits per coordinate
        known = min(known, structure.cap - shift)
        if known < 1:
            raise PrecisionError("denominator exponent exceeds working precision")
        mod = p ** (known + shift)
        coeffs = tuple(c % mod for c in coeffs)
        if shift > 0:
            if all(c == 0 for c in coeffs):
                shift = 0
                coeffs = (0,) * structure.degree
            else:
                while shift > 0 and all(c % p == 0 for c in coeffs):
                    coeffs = tuple(c // p for c in coeffs)
                    shift -= 1
        object.__setattr__(self, "structure", structure)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "_val", None)

    def __setattr__(self, *a):
        raise AttributeError("PAdicNumber is immutable")

    # -- basic queries -------------------------------------------------------

    def valuation(self) -> RationalValuation:
        """Exact valuation, v(p) = 1; +inf when zero to working precision."""
        if self._val is None:
            st = self.structure
            p = st.p
            best = None
            workmod = self.known + self.shift
            for i, c in enumerate(self.coeffs):
                if c == 0:
                    continue
                v = 0
                while c % p == 0 and v < workmod:
                    c //= p
                    v += 1
                cand = v + st._frac[i]
                if best is None or cand < best:
                    best = cand
            if best is None or best - self.shift >= self.known:
                out = INF
            else:
                out = RationalValuation(best - self.shift)
            object.__setattr__(self, "_val", out)
        return self._val

    def is_zero(self, digits: int | None = None) -> bool:
        """Zero modulo p^digits * O (defaults to the known precision)."""
        if digits is None:
            return self.valuation().is_infinite
        v = self.valuation()
        return v.is_infinite or v >= min(digits, self.known)

    def is_unit(self) -> bool:
        return self.valuation() == 0

    def _with_shift_zero(self) -> "PAdicNumber":
        if self.shift == 0:
            return self
        ps = self.structure.p ** self.shift
        if any(c % ps for c in self.coeffs):
            raise PrecisionError("element has a genuine p-denominator")
        return PAdicNumber(self.structure, tuple(c // ps for c in self.coeffs),
                           0, self.known)

    def _exact_div_by_p(self, k: int) -> "PAdicNumber":
        """Divide by p^k when all coordinates are exactly divisible."""
        pk = self.structure.p ** k
        if self.shift != 0 or any(c % pk for c in self.coeffs):
            raise PrecisionError("coordinates not divisible by p^k")
        return PAdicNumber(self.structure, tuple(c // pk for c in self.coeffs),
                           0, self.known)

    # -- arithmetic -----------------------------------------------------------

    def _pair(self, other):
        st = self.structure
        if isinstance(other, PAdicNumber):
            if other.structure is st:
                return self, other
            if st.is_extension_of(other.structure):
                return self, st.embed(other)
            if other.structure.is_extension_of(st):
                return other.structure.embed(self), other
            raise StructureMismatchError("operands from unrelated structures")
        return self, st.coerce(other)

    def __add__(self, other):
        x, y = self._pair(other)
        st = x.structure
        p = st.p
        shift = max(x.shift, y.shift)
        known = min(x.known, y.known)
        mod = p ** (known + shift)
        fx = p ** (shift - x.shift)
        fy = p ** (shift - y.shift)
        coeffs = tuple((a * fx + b * fy) % mod for a, b in zip(x.coeffs, y.coeffs))
        return PAdicNumber(st, coeffs, shift, known)

    __radd__ = __add__

    def __neg__(self):
        mod = self.structure.p ** (self.known + self.shift)
        return PAdicNumber(self.structure, tuple((-c) % mod for c in self.coeffs),
                           self.shift, self.known)

    def __sub__(self, other):
        x, y = self._pair(other)
        return x + (-y)

    def __rsub__(self, other):
        x, y = self._pair(other)
        return y + (-x)

    def __mul__(self, other):
        x, y = self._pair(other)
        st = x.structure
        vx, vy = x.valuation(), y.valuation()
        fx = x.known if vx.is_infinite else math.floor(vx.as_fraction())
        fy = y.known if vy.is_infinite else math.floor(vy.as_fraction())
        known = min(x.known + fy, y.known + fx, st.cap)
        shift = x.shift + y.shift
        mod = st.p ** max(known + shift, 1)
        coeffs = st._vec_mul(x.coeffs, y.coeffs, mod)
        return PAdicNumber(st, coeffs, shift, known)

    __rmul__ = __mul__

    def inverse(self) -> "PAdicNumber":
        st = self.structure
        v = self.valuation()
        if v.is_infinite or v >= self.known:
            raise ZeroDivisionError("division by a value indistinguishable from zero")
        # self = p^(-shift) * Y with Y integral; invert Y, then restore the shift
        vY = v.as_fraction() + self.shift
        m = int(vY * st.e)
        assert m == vY * st.e, "valuation not in (1/e)Z"
        Y = PAdicNumber(st, self.coeffs, 0, min(self.known + self.shift, st.cap))
        if m:
            scale = st._p_over_uniformizer() ** m  # integral, = (p/pi)^m
            unit = (Y * scale)._exact_div_by_p(m)
            inv_num = st._unit_inverse(unit) * scale
            out_shift = inv_num.shift + m - self.shift
        else:
            inv_num = st._unit_inverse(Y)
            out_shift = inv_num.shift - self.shift
        loss = max(0, math.ceil(2 * v.as_fraction()))
        known = min(self.known - loss, st.cap)
        return PAdicNumber(st, inv_num.coeffs, out_shift, known)

    def __truediv__(self, other):
        x, y = self._pair(other)
        vy = y.valuation()
        if vy.is_infinite or vy >= y.known:
            raise ZeroDivisionError("division by a value indistinguishable from zero")
        out = x * y.inverse()
        loss = max(0, math.ceil(2 * vy.as_fraction()))
        known = min(x.known, y.known) - loss
        return PAdicNumber(x.structure, out.coeffs, out.shift,
                           min(known, x.structure.cap))

    def __rtruediv__(self, other):
        x, y = self._pair(other)
        return y / x

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.structure.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # -- comparison ------------------------------------------------------------

    def agrees_with(self, other, digits: int | None = None) -> bool:
        """Equality modulo the precision ideal (p^digits * O)."""
        x, y = self._pair(other)
        if digits is None:
            digits = min(x.known, y.known, x.structure.N)
        return (x - y).is_zero(digits)

    def __eq__(self, other):
        if not isinstance(other, (PAdicNumber, int, Fraction)):
            return NotImplemented
        try:
            return self.agrees_with(other)
        except StructureMismatchError:
            return False

    __hash__ = None  # equality is modulo precision; use identity-keyed caches

    # -- presentation ------------------------------------------------------------

    def digit_key(self) -> tuple:
        """Canonical sort/export key: shift and coordinates at N digits."""
        st = self.structure
        mod = st.p ** (min(self.known, st.N) + self.shift)
        return (self.shift,) + tuple(c % mod for c in self.coeffs)

    def __repr__(self):
        st = self.structure
        v = self.valuation()
        if st.degree == 1:
            body = str(self.coeffs[0])
        else:
            body = "[" + ",".join(str(c) for c in self.coeffs) + "]"
        sh = f"/p^{self.shift}" if self.shift else ""
        return f"padic({body}{sh}; p={st.p}, v={v}, known={self.known})"


# ---------------------------------------------------------------------------
# module-level operations (the public spec surface)


def extend_field(base: PAdicStructure, minpoly: Sequence, kind: str) -> PAdicStructure:
    """Adjoin a root of `minpoly` to `base`.

    kind 'eisenstein': relative Eisenstein (constant term is exactly a
    uniformizer of the base, other non-leading coefficients have positive
    valuation, monic or unit leading coefficient).  kind 'unramified':
    irreducible modulo p; must precede any ramified step.
    """
    coeffs = [base.coerce(c) for c in minpoly]
    if len(coeffs) < 3:
        raise PadicError("minimal polynomial must have degree >= 2")
    deg = len(coeffs) - 1
    lead = coeffs[-1]
    if not lead.is_unit():
        raise CertificationError("leading coefficient is not a unit")
    if not lead.agrees_with(1):
        inv = lead.inverse()
        coeffs = [c * inv for c in coeffs]
    if kind == "eisenstein":
        c0v = coeffs[0].valuation()
        if not c0v.finite:
            raise PrecisionError("constant term is zero to precision; Eisenstein check impossible")
        if c0v.as_fraction() != Fraction(1, base.e):
            raise CertificationError(
                f"polynomial fails Eisenstein check: v(const) = {c0v}, expected 1/{base.e}")
        for c in coeffs[1:-1]:
            cv = c.valuation()
            if cv.finite and cv <= 0:
                raise CertificationError("polynomial fails Eisenstein check: middle coefficient is a unit")
            if not cv.finite and c.known < 1:
                raise PrecisionError("cannot certify Eisenstein condition at working precision")
    elif kind == "unramified":
        if base.e != 1:
            raise PadicError("unramified steps must precede ramified steps")
        if base.f != 1:
            raise PadicError("only one unramified step is supported")
        ints = []
        for c in coeffs:
            if c.shift != 0:
                raise CertificationError("unramified minimal polynomial must be integral")
            ints.append(c.coeffs[0] % base.p)
        if not ffp_is_irreducible(tuple(ints), base.p):
            raise CertificationError("polynomial reducible modulo p")
    else:
        raise PadicError(f"unknown extension kind {kind!r}")
    vectors = tuple((c.coeffs, c.shift) for c in coeffs[:-1])
    for vec, sh in vectors:
        if sh != 0:
            raise CertificationError("minimal polynomial coefficients must be integral")
    step = ExtensionStep(kind, deg, vectors)
    return PAdicStructure(base.p, base.N, base, step)


def arith(op: str, x: PAdicNumber, y: PAdicNumber) -> PAdicNumber:
    """Named arithmetic dispatch: add | sub | mul | div."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise PadicError(f"unknown operation {op!r}")


def valuation(x: PAdicNumber) -> RationalValuation:
    return x.valuation()


def teichmuller_lift(structure: PAdicStructure, residue) -> PAdicNumber:
    """The Teichmuller representative over a residue-field element.

    `residue` is an integer (f = 1) or a length-f coordinate sequence over
    F_p in the basis of the unramified generator.  The output satisfies
    omega^q = omega (q = p^f) to working precision.
    """
    p, f = structure.p, structure.f
    if isinstance(residue, int):
        res = (residue,) + (0,) * (f - 1)
    else:
        res = tuple(residue)
        if len(res) != f:
            raise PadicError("residue coordinate length must equal f")
    slots = structure._residue_slots()
    vec = [0] * structure.degree
    for k, i in enumerate(slots):
        vec[i] = res[k] % p
    x = PAdicNumber(structure, tuple(vec), 0, structure.cap)
    if x.is_zero():
        return x
    q = p ** f
    for _ in range(structure.cap + 2):
        nxt = x ** q
        if nxt.agrees_with(x, x.known):
            return nxt
        x = nxt
    raise PrecisionError("Teichmuller iteration did not stabilize")  # pragma: no cover


def newton_polygon(poly: Sequence) -> list[tuple[RationalValuation, int]]:
    """Root valuations with multiplicities from the lower convex hull.

    Returns (valuation, length) pairs with valuations increasing; the
    valuations are the negated hull slopes.  Coefficients that vanish to
    working precision do not contribute vertices.
    """
    pts = []
    for i, c in enumerate(poly):
        if isinstance(c, PAdicNumber):
            v = c.valuation()
            if v.finite:
                pts.append((i, v.as_fraction()))
        else:
            if c != 0:
                pts.append((i, _int_valuation_fraction(c, poly)))
    if not pts:
        raise PadicError("all coefficients are zero to working precision")
    hull = _lower_hull(pts)
    out = []
    for (i0, v0), (i1, v1) in zip(hull, hull[1:]):
        slope = Fraction(v1 - v0, i1 - i0)
        out.append((RationalValuation(-slope), i1 - i0))
    out.reverse()
    return out


def _int_valuation_fraction(c, poly):
    # integer coefficients are only meaningful next to PAdicNumbers
    for x in poly:
        if isinstance(x, PAdicNumber):
            p = x.structure.p
            v = 0
            c = abs(c)
            while c % p == 0:
                c //= p
                v += 1
            return Fraction(v)
    raise PadicError("newton_polygon needs at least one PAdicNumber coefficient")


def _lower_hull(pts):
    pts = sorted(pts)
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def poly_eval(coeffs: Sequence, x: PAdicNumber) -> PAdicNumber:
    """Horner evaluation; integer coefficients are coerced."""
    st = x.structure
    acc = st.zero()
    for c in reversed(list(coeffs)):
        acc = acc * x + st.coerce(c)
    return acc


def poly_derivative(coeffs: Sequence, structure: PAdicStructure) -> list:
    return [structure.coerce(c) * i for i, c in enumerate(coeffs) if i >= 1]


def poly_deflate(coeffs: Sequence, root: PAdicNumber) -> list:
    """Synthetic division by (X - root); the remainder is discarded."""
    st = root.structure
    cs = [st.coerce(c) for c in coeffs]
    out = []
    carry = st.zero()
    for c in reversed(cs):
        carry = c + carry * root
        out.append(carry)
    return list(reversed(out[:-1]))


def coeff_to_text(x: PAdicNumber) -> str:
    """Canonical text form of an element: base-p digits per coordinate.

    Digits are little-endian; coordinates are joined with ';'; a trailing
    '/p^k' records the denominator exponent.  Elements are exported at the
    structure's public precision N (bit-exact round-trip at that precision).
    """
    st = x.structure
    if x.known < st.N:
        raise PrecisionError("cannot export an element below public precision")
    p = st.p
    ndig = st.N + x.shift
    mod = p ** ndig
    parts = []
    for c in x.coeffs:
        c %= mod
        digits = []
        for _ in range(ndig):
            digits.append(c % p)
            c //= p
        while len(digits) > 1 and digits[-1] == 0:
            digits.pop()
        if p <= 10:
            parts.append("".join(str(d) for d in digits))
        else:
            parts.append(".".join(str(d) for d in digits))
    body = ";".join(parts)
    if x.shift:
        body += f"/p^{x.shift}"
    return body


def coeff_from_text(structure: PAdicStructure, text: str) -> PAdicNumber:
    """Parse the format produced by coeff_to_text."""
    text = text.strip()
    shift = 0
    if "/p^" in text:
        text, _, sh = text.rpartition("/p^")
        shift = int(sh)
    parts = text.split(";")
    if len(parts) != structure.degree:
        raise PadicError(
            f"expected {structure.degree} coordinates, got {len(parts)}")
    p = structure.p
    coords = []
    for part in parts:
        part = part.strip()
        if p <= 10:
            digits = [int(ch) for ch in part]
        else:
            digits = [int(tok) for tok in part.split(".")] if part else [0]
        if any(d < 0 or d >= p for d in digits):
            raise PadicError(f"digit out of range for base {p}: {part!r}")
        val = 0
        for d in reversed(digits):
            val = val * p + d
        coords.append(val)
    return PAdicNumber(structure, tuple(coords), shift, structure.N)


def hensel_root(poly: Sequence, seed: PAdicNumber, target_digits: int | None = None) -> PAdicNumber:
    """Newton refinement of a simple root.

    Requires v(f(seed)) > 2*v(f'(seed)).  Iterates until f(x) vanishes to
    the target precision (default: the structure's N).
    """
    st = seed.structure
    cs = [st.coerce(c) for c in poly]
    dcs = poly_derivative(cs, st)
    fv = poly_eval(cs, seed).valuation()
    dv = poly_eval(dcs, seed).valuation()
    if not dv.finite:
        raise CertificationError("derivative vanishes to precision at the seed")
    if fv.finite and not fv > dv + dv:
        raise CertificationError(
            f"Newton condition fails: v(f) = {fv} <= 2 v(f') = {dv + dv}")
    if target_digits is None:
        target_digits = st.N
    x = seed
    for _ in range(2 * (math.ceil(math.log2(max(2, target_digits * st.e))) + 4)):
        fx = poly_eval(cs, x)
        if fx.valuation() >= min(target_digits, x.known - 1):
            return x
        dfx = poly_eval(dcs, x)
        x = x - fx / dfx
    if poly_eval(cs, x).valuation() >= min(target_digits, x.known - 1):
        return x
    raise PrecisionError("Newton iteration exceeded the precision budget")
