"""Exact scalar arithmetic for the symbolic certification engine.

The scalar field is the Laurent-polynomial ring over Gaussian rationals in a
fixed generator list: sigma couplings s1..s9 (with the coupling constants
g_i represented as 2*s_i**2, so square roots of couplings never appear),
a spectral parameter ``a``, spectral shifts ``lam1..lam6``, and four spare
constants ``c1..c4`` used by scaling-covariance tests.

Every value is a dict mapping an integer exponent vector (one slot per
generator) to a nonzero :class:`GaussRat` coefficient.  All arithmetic is
exact; division is only allowed when it is exact in the ring and raises
otherwise.

INPUT  convention: the constructors also accept the names g1..g9 and map
them to 2*s_i**2 on the spot, so callers can phrase couplings naturally.
OUTPUT convention: canonical JSON lists terms sorted by exponent vector.
"""

from __future__ import annotations

import json
import numbers
from fractions import Fraction
from typing import Iterable, Mapping

# ---------------------------------------------------------------------------
# generator bookkeeping

SIGMA_NAMES = tuple(f"s{i}" for i in range(1, 10))
LAMBDA_NAMES = tuple(f"lam{i}" for i in range(1, 7))
CONST_NAMES = ("c1", "c2", "c3", "c4")
GEN_NAMES = SIGMA_NAMES + ("a",) + LAMBDA_NAMES + CONST_NAMES
NGENS = len(GEN_NAMES)
GEN_INDEX = {name: k for k, name in enumerate(GEN_NAMES)}

_ZERO_VEC = (0,) * NGENS


class GaussRat:
    """A Gaussian rational re + im*i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussRat):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        other = _as_gauss(other)
        return GaussRat(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        other = _as_gauss(other)
        return GaussRat(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __mul__(self, other):
        other = _as_gauss(other)
        return GaussRat(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return _as_gauss(other) - self

    def __truediv__(self, other):
        other = _as_gauss(other)
        n2 = other.re * other.re + other.im * other.im
        if n2 == 0:
            raise ZeroDivisionError("division by zero GaussRat")
        return GaussRat(
            (self.re * other.re + self.im * other.im) / n2,
            (self.im * other.re - self.re * other.im) / n2,
        )

    def conj(self):
        return GaussRat(self.re, -self.im)

    def to_complex(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*I"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*I)"


def _as_gauss(v) -> GaussRat:
    if isinstance(v, GaussRat):
        return v
    if isinstance(v, (int, Fraction)):
        return GaussRat(v)
    raise TypeError(f"cannot interpret {v!r} as GaussRat")


GAUSS_ZERO = GaussRat(0)
GAUSS_ONE = GaussRat(1)
GAUSS_I = GaussRat(0, 1)


# ---------------------------------------------------------------------------
# sparse Laurent polynomials


class ScalarExpr:
    """Sparse Laurent polynomial over GaussRat in the fixed generators.

    Instances are treated as immutable; the term dict must not be mutated
    after construction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, GaussRat] | None = None):
        self.terms = dict(terms) if terms else {}

    # -- constructors -------------------------------------------------------

    @staticmethod
    def const(value) -> "ScalarExpr":
        if isinstance(value, complex):
            raise TypeError("use GaussRat for complex constants")
        g = _as_gauss(value)
        return ScalarExpr({_ZERO_VEC: g} if g else {})

    @staticmethod
    def gen(name: str, power: int = 1) -> "ScalarExpr":
        """A single generator.  Accepts g1..g9 and returns 2*s_i**(2*power)."""
        if name.startswith("g") and name[1:].isdigit():
            i = int(name[1:])
            if not 1 <= i <= 9:
                raise KeyError(name)
            vec = [0] * NGENS
            vec[GEN_INDEX[f"s{i}"]] = 2 * power
            coeff = GaussRat(Fraction(2) ** power)
            return ScalarExpr({tuple(vec): coeff})
        if name not in GEN_INDEX:
            raise KeyError(name)
        vec = [0] * NGENS
        vec[GEN_INDEX[name]] = power
        return ScalarExpr({tuple(vec): GAUSS_ONE})

    @staticmethod
    def monomial(coeff, powers: Mapping[str, int]) -> "ScalarExpr":
        out = ScalarExpr.const(coeff)
        for name, p in powers.items():
            out = out * ScalarExpr.gen(name, p)
        return out

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self.terms == {_ZERO_VEC: GAUSS_ONE}

    def is_const(self) -> bool:
        return not self.terms or set(self.terms) == {_ZERO_VEC}

    def const_value(self) -> GaussRat:
        if not self.terms:
            return GAUSS_ZERO
        if set(self.terms) != {_ZERO_VEC}:
            raise ValueError("not a constant")
        return self.terms[_ZERO_VEC]

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, ScalarExpr):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction, GaussRat)):
            return self == ScalarExpr.const(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        other = _as_scalar(other)
        out = dict(self.terms)
        for vec, c in other.terms.items():
            s = out.get(vec, GAUSS_ZERO) + c
            if s:
                out[vec] = s
            else:
                out.pop(vec, None)
        return ScalarExpr(out)

    def __sub__(self, other):
        return self + (-_as_scalar(other))

    def __neg__(self):
        return ScalarExpr({vec: -c for vec, c in self.terms.items()})

    def __mul__(self, other):
        other = _as_scalar(other)
        if not self.terms or not other.terms:
            return ScalarExpr()
        out: dict[tuple, GaussRat] = {}
        for v1, c1 in self.terms.items():
            for v2, c2 in other.terms.items():
                vec = tuple(a + b for a, b in zip(v1, v2))
                s = out.get(vec, GAUSS_ZERO) + c1 * c2
                if s:
                    out[vec] = s
                else:
                    out.pop(vec, None)
        return ScalarExpr(out)

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return _as_scalar(other) - self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("exponent must be int")
        if n < 0:
            return ScalarExpr.const(1) / self ** (-n)
        out = ScalarExpr.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, other):
        """Exact division; raises ValueError if not exact in the ring."""
        other = _as_scalar(other)
        if not other.terms:
            raise ZeroDivisionError("scalar division by zero")
        if not self.terms:
            return ScalarExpr()
        if len(other.terms) == 1:
            (dvec, dc), = other.terms.items()
            return ScalarExpr(
                {
                    tuple(a - b for a, b in zip(vec, dvec)): c / dc
                    for vec, c in self.terms.items()
                }
            )
        return _laurent_divide(self, other)

    __rtruediv__ = None  # only scalar/scalar division is meaningful

    # -- evaluation and substitution ----------------------------------------

    def eval(self, env: Mapping[str, complex]) -> complex:
        """Numeric value with generators bound by name.

        ``env`` may give either s_i or g_i values; a g_i entry binds
        s_i = sqrt(g_i/2) using the principal square root.
        """
        vals = _gen_values(env)
        total = 0j
        for vec, c in self.terms.items():
            term = c.to_complex()
            for k, e in enumerate(vec):
                if e:
                    term *= vals[k] ** e
            total += term
        return total

    def subs_gen(self, name: str, value: "ScalarExpr") -> "ScalarExpr":
        """Exact substitution of one generator by a scalar expression."""
        k = GEN_INDEX[name]
        out = ScalarExpr()
        for vec, c in self.terms.items():
            e = vec[k]
            rest = ScalarExpr({vec[:k] + (0,) + vec[k + 1:]: c})
            if e == 0:
                out = out + rest
            else:
                out = out + rest * value ** e
        return out

    def subs_square(self, name: str, square: "ScalarExpr") -> "ScalarExpr":
        """Exact substitution of gen^2 -> square; the generator must occur
        in even nonnegative powers (this is what keeps coupling rescalings
        like s1^2 -> 2 s1^2 expressible without radicals)."""
        k = GEN_INDEX[name]
        out = ScalarExpr()
        for vec, c in self.terms.items():
            e = vec[k]
            if e < 0 or e % 2:
                raise ValueError(
                    f"{name} occurs to power {e}; square substitution "
                    "needs even nonnegative powers"
                )
            rest = ScalarExpr({vec[:k] + (0,) + vec[k + 1:]: c})
            out = out + rest * square ** (e // 2)
        return out

    # -- ordering and serialization -----------------------------------------

    def sort_key(self):
        return tuple(
            (vec, (c.re, c.im)) for vec, c in sorted(self.terms.items())
        )

    def canonical(self) -> dict:
        """Canonical JSON-ready form: sorted terms, string fractions."""
        out = []
        for vec in sorted(self.terms):
            c = self.terms[vec]
            powers = {GEN_NAMES[k]: e for k, e in enumerate(vec) if e}
            out.append({"coeff": [str(c.re), str(c.im)], "powers": powers})
        return {"terms": out}

    @staticmethod
    def from_canonical(data: dict) -> "ScalarExpr":
        terms = {}
        for item in data["terms"]:
            vec = [0] * NGENS
            for name, e in item["powers"].items():
                vec[GEN_INDEX[name]] = e
            re_s, im_s = item["coeff"]
            terms[tuple(vec)] = GaussRat(Fraction(re_s), Fraction(im_s))
        return ScalarExpr(terms)

    def dumps(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True)

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for vec in sorted(self.terms):
            c = self.terms[vec]
            mono = "*".join(
                f"{GEN_NAMES[k]}" + (f"^{e}" if e != 1 else "")
                for k, e in enumerate(vec)
                if e
            )
            if mono:
                bits.append(f"{c!r}*{mono}" if c != GAUSS_ONE else mono)
            else:
                bits.append(repr(c))
        return " + ".join(bits)


def _as_scalar(v) -> ScalarExpr:
    if isinstance(v, ScalarExpr):
        return v
    if isinstance(v, (int, Fraction, GaussRat)):
        return ScalarExpr.const(v)
    raise TypeError(f"cannot interpret {v!r} as ScalarExpr")


def _gen_values(env: Mapping[str, complex]) -> list[complex]:
    import cmath

    vals = [0j] * NGENS
    seen = [False] * NGENS
    for name, v in env.items():
        if not isinstance(name, str):
            continue
        if name.startswith("g") and name[1:].isdigit():
            i = int(name[1:])
            k = GEN_INDEX[f"s{i}"]
            vals[k] = cmath.sqrt(v / 2)
            seen[k] = True
        elif name in GEN_INDEX:
            k = GEN_INDEX[name]
            vals[k] = complex(v)
            seen[k] = True
    for k in range(NGENS):
        if not seen[k]:
            vals[k] = 0j
    return vals


# ---------------------------------------------------------------------------
# exact Laurent division (non-monomial divisor)


def _laurent_divide(num: ScalarExpr, den: ScalarExpr) -> ScalarExpr:
    """Exact sparse division with remainder-must-vanish, Laurent-aware.

    Both operands are shifted into the polynomial cone by a monomial, then
    lex-ordered long division runs; a nonzero remainder raises ValueError.
    """
    shift_n = _cone_shift(num)
    shift_d = _cone_shift(den)
    nterms = {_vec_add(v, shift_n): c for v, c in num.terms.items()}
    dterms = {_vec_add(v, shift_d): c for v, c in den.terms.items()}

    dlead = max(dterms)
    dlead_c = dterms[dlead]
    quot: dict[tuple, GaussRat] = {}
    rem = dict(nterms)
    # bounded loop: each step strictly reduces the lex-leading term of rem
    while rem:
        lead = max(rem)
        qvec = tuple(a - b for a, b in zip(lead, dlead))
        if min(qvec) < 0:
            raise ValueError("inexact scalar division (leading term)")
        qc = rem[lead] / dlead_c
        quot[qvec] = qc
        for dvec, dc in dterms.items():
            tvec = _vec_add(qvec, dvec)
            s = rem.get(tvec, GAUSS_ZERO) - qc * dc
            if s:
                rem[tvec] = s
            else:
                rem.pop(tvec, None)
    # net shift: quotient exponents must be unshifted by (shift_n - shift_d)
    unshift = tuple(a - b for a, b in zip(shift_n, shift_d))
    return ScalarExpr(
        {tuple(a - b for a, b in zip(v, unshift)): c for v, c in quot.items()}
    )


def _cone_shift(p: ScalarExpr) -> tuple:
    mins = [0] * NGENS
    for vec in p.terms:
        for k, e in enumerate(vec):
            if e < mins[k]:
                mins[k] = e
    return tuple(-m for m in mins)


def _vec_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# convenience values

ZERO = ScalarExpr()
ONE = ScalarExpr.const(1)
HALF = ScalarExpr.const(Fraction(1, 2))
I_UNIT = ScalarExpr.const(GAUSS_I)


def g(i: int) -> ScalarExpr:
    return ScalarExpr.gen(f"g{i}")


def sigma(i: int) -> ScalarExpr:
    return ScalarExpr.gen(f"s{i}")


def beta_of(i_num: int = 1, i_den: int = 2) -> ScalarExpr:
    """The ratio g_{i_num} / (2 sigma_{i_den}); default is g1/(2 s2)."""
    return g(i_num) / (ScalarExpr.const(2) * sigma(i_den))


def lam(i: int) -> ScalarExpr:
    return ScalarExpr.gen(f"lam{i}")


A_PARAM = ScalarExpr.gen("a")
IA = I_UNIT * A_PARAM


def rational_sqrt(c: GaussRat) -> GaussRat | None:
    """Exact square root of a nonnegative rational GaussRat, else None."""
    if c.im != 0 or c.re < 0:
        return None
    fr = c.re
    num, den = fr.numerator, fr.denominator
    rn = _isqrt_exact(num)
    rd = _isqrt_exact(den)
    if rn is None or rd is None:
        return None
    return GaussRat(Fraction(rn, rd))


def _isqrt_exact(n: int) -> int | None:
    import math

    r = math.isqrt(n)
    return r if r * r == n else None
