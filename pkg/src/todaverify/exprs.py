"""Structured expressions: kernels and rational-exponential sums.

The certification engine works with two expression shapes.

* :class:`KernelExpr` — a product of binomial powers, a plane-wave phase and
  an exponential of a sum of scalar-weighted exponential monomials:

      K = prod_i (1 + c_i e^{A_i})^{E_i} * exp( P + sum_j b_j e^{L_j} )

  where A_i, L_j are linear forms in the variables with rational
  coefficients, P is a linear form with arbitrary scalar coefficients, and
  c_i, E_i, b_j are exact scalars.  Every kernel in the catalog fits this
  shape.

* :class:`RatExpr` — a finite sum of terms  N * e^{L} / prod (1+c e^{A})^m
  with nonnegative integer powers m.  Logarithmic derivatives of kernels,
  Hamiltonian potentials and intertwining residuals all live here, and the
  zero test with witness extraction operates on this shape.

All arithmetic is exact over the scalar field; numeric evaluation is a
separate method using principal branches per factor.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .scalars import (
    GAUSS_ONE,
    GaussRat,
    ScalarExpr,
    ZERO,
    ONE,
    _as_scalar,
    rational_sqrt,
)


# ---------------------------------------------------------------------------
# variables


@dataclass(frozen=True, order=True)
class Variable:
    """A chain coordinate: family letter, layer (rank level), index."""

    family: str
    layer: int
    index: int

    def name(self) -> str:
        return f"{self.family}{self.layer}_{self.index}"

    def latex(self) -> str:
        return f"{self.family}_{{{self.layer},{self.index}}}"

    def __repr__(self):
        return self.name()


def var_row(family: str, layer: int, count: int) -> tuple[Variable, ...]:
    return tuple(Variable(family, layer, i) for i in range(1, count + 1))


# ---------------------------------------------------------------------------
# linear forms


class LinearForm:
    """Sum of scalar coefficients times variables, canonical and hashable."""

    __slots__ = ("items", "_hash")

    def __init__(self, entries: Mapping[Variable, ScalarExpr] | Iterable = ()):
        if isinstance(entries, Mapping):
            it = entries.items()
        else:
            it = entries
        acc: dict[Variable, ScalarExpr] = {}
        for v, c in it:
            c = _as_scalar(c)
            if v in acc:
                c = acc[v] + c
            if c.is_zero():
                acc.pop(v, None)
            else:
                acc[v] = c
        self.items = tuple(sorted(acc.items(), key=lambda kv: kv[0]))
        self._hash = None

    @staticmethod
    def of(*pairs) -> "LinearForm":
        """LinearForm.of(v1, 1, v2, -1, ...) — alternating variable, coeff."""
        entries = []
        for k in range(0, len(pairs), 2):
            entries.append((pairs[k], _as_scalar(pairs[k + 1])))
        return LinearForm(entries)

    def is_zero(self) -> bool:
        return not self.items

    def coeff(self, v: Variable) -> ScalarExpr:
        for w, c in self.items:
            if w == v:
                return c
        return ZERO

    def vars(self) -> tuple[Variable, ...]:
        return tuple(v for v, _ in self.items)

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(list(self.items) + list(other.items))

    def __neg__(self) -> "LinearForm":
        return LinearForm([(v, -c) for v, c in self.items])

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + (-other)

    def scale(self, s) -> "LinearForm":
        s = _as_scalar(s)
        return LinearForm([(v, c * s) for v, c in self.items])

    def halve(self) -> "LinearForm | None":
        """Exact division of all coefficients by 2, or None if not exact.

        Coefficients must be rational constants for the halving used by the
        binomial split rule; symbolic coefficients refuse.
        """
        out = []
        for v, c in self.items:
            if not c.is_const():
                return None
            q = c.const_value()
            out.append((v, ScalarExpr.const(GaussRat(q.re / 2, q.im / 2))))
        return LinearForm(out)

    def rational_items(self) -> list[tuple[Variable, Fraction]] | None:
        out = []
        for v, c in self.items:
            if not c.is_const():
                return None
            q = c.const_value()
            if q.im != 0:
                return None
            out.append((v, q.re))
        return out

    def eval(self, env: Mapping) -> complex:
        """env maps Variable -> complex and generator names -> complex."""
        total = 0j
        for v, c in self.items:
            total += c.eval(env) * complex(env[v])
        return total

    def subs_vars(self, vmap: Mapping[Variable, Variable]) -> "LinearForm":
        return LinearForm([(vmap.get(v, v), c) for v, c in self.items])

    def subs_gen(self, name: str, value: ScalarExpr) -> "LinearForm":
        return LinearForm([(v, c.subs_gen(name, value)) for v, c in self.items])

    def drop_vars(self, dropped) -> "LinearForm":
        return LinearForm([(v, c) for v, c in self.items if v not in dropped])

    def __eq__(self, other):
        return isinstance(other, LinearForm) and self.items == other.items

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.items)
        return self._hash

    def sort_key(self):
        return tuple((v, c.sort_key()) for v, c in self.items)

    def canonical(self) -> list:
        return [
            [v.family, v.layer, v.index, c.canonical()] for v, c in self.items
        ]

    def latex(self) -> str:
        if not self.items:
            return "0"
        bits = []
        for v, c in self.items:
            cs = _coeff_latex(c)
            if cs == "1":
                term = v.latex()
            elif cs == "-1":
                term = "-" + v.latex()
            else:
                term = cs + " " + v.latex()
            bits.append(term)
        out = bits[0]
        for b in bits[1:]:
            out += b if b.startswith("-") else "+" + b
        return out

    def __repr__(self):
        return self.latex()


def _coeff_latex(c: ScalarExpr) -> str:
    if c.is_const():
        q = c.const_value()
        if q.im == 0:
            return str(q.re)
        if q.re == 0:
            if q.im == 1:
                return r"\iota"
            if q.im == -1:
                return r"-\iota"
            return rf"{q.im}\iota"
    return "(" + scalar_latex(c) + ")"


def scalar_latex(s: ScalarExpr) -> str:
    from .scalars import GEN_NAMES

    if s.is_zero():
        return "0"
    bits = []
    for vec in sorted(s.terms):
        q = s.terms[vec]
        mono = ""
        for k, e in enumerate(vec):
            if not e:
                continue
            name = GEN_NAMES[k]
            if name.startswith("s"):
                sym = rf"\sigma_{{{name[1:]}}}"
            elif name.startswith("lam"):
                sym = rf"\lambda_{{{name[3:]}}}"
            else:
                sym = name
            mono += sym if e == 1 else sym + rf"^{{{e}}}"
        cs = _gauss_latex(q)
        if mono:
            term = mono if cs == "1" else ("-" + mono if cs == "-1" else cs + mono)
        else:
            term = cs
        bits.append(term)
    out = bits[0]
    for b in bits[1:]:
        out += b if b.startswith("-") else "+" + b
    return out


def _gauss_latex(q: GaussRat) -> str:
    if q.im == 0:
        return str(q.re)
    if q.re == 0:
        if q.im == 1:
            return r"\iota "
        if q.im == -1:
            return r"-\iota "
        return rf"{q.im}\iota "
    return rf"({q.re}{'+' if q.im > 0 else '-'}{abs(q.im)}\iota)"


ZERO_FORM = LinearForm()


# ---------------------------------------------------------------------------
# exponential monomials and binomial factors


@dataclass(frozen=True)
class ExpMonomial:
    """coeff * e^{form}; used inside kernel exponents and potentials."""

    coeff: ScalarExpr
    form: LinearForm

    def eval(self, env) -> complex:
        return self.coeff.eval(env) * cmath.exp(self.form.eval(env))

    def canonical(self):
        return [self.coeff.canonical(), self.form.canonical()]


@dataclass(frozen=True)
class BinBase:
    """The base (1 + c e^{arg}) shared by binomial factors and denominators."""

    c: ScalarExpr
    arg: LinearForm

    def eval(self, env) -> complex:
        return 1.0 + self.c.eval(env) * cmath.exp(self.arg.eval(env))

    def sort_key(self):
        return (self.arg.sort_key(), self.c.sort_key())

    def canonical(self):
        return [self.c.canonical(), self.arg.canonical()]

    def latex(self) -> str:
        cs = _coeff_latex(self.c)
        inner = rf"e^{{{self.arg.latex()}}}"
        if cs == "1":
            return rf"(1+{inner})"
        if cs == "-1":
            return rf"(1-{inner})"
        sign = "+" if not cs.startswith("-") else ""
        return rf"(1{sign}{cs}{inner})"


@dataclass(frozen=True)
class BinomialFactor:
    """(1 + c e^{arg})^{expo} with an exact scalar exponent."""

    base: BinBase
    expo: ScalarExpr

    def eval_log(self, env) -> complex:
        """Principal-branch contribution expo * Log(1 + c e^{arg})."""
        return self.expo.eval(env) * cmath.log(self.base.eval(env))

    def canonical(self):
        return [self.base.canonical(), self.expo.canonical()]


def binom(c, arg: LinearForm, expo) -> BinomialFactor:
    return BinomialFactor(BinBase(_as_scalar(c), arg), _as_scalar(expo))


# ---------------------------------------------------------------------------
# kernels


class KernelExpr:
    """Canonical kernel: scalar prefactor, binomial factors, phase, exponent."""

    __slots__ = ("binomials", "phase", "expterms", "prefactor")

    def __init__(
        self,
        binomials: Sequence[BinomialFactor] = (),
        phase: LinearForm = ZERO_FORM,
        expterms: Sequence[ExpMonomial] = (),
        prefactor: ScalarExpr = ONE,
    ):
        self.binomials = tuple(binomials)
        self.phase = phase
        self.expterms = tuple(expterms)
        self.prefactor = _as_scalar(prefactor)

    # -- construction helpers ----------------------------------------------

    @staticmethod
    def from_exponent(terms: Sequence[tuple], phase: LinearForm = ZERO_FORM,
                      binomials: Sequence[BinomialFactor] = (),
                      prefactor: ScalarExpr = ONE) -> "KernelExpr":
        """terms are (coeff, form) pairs for K = pref * prod * e^{phase + sum c e^L}."""
        ems = [ExpMonomial(_as_scalar(c), f) for c, f in terms]
        return KernelExpr(binomials, phase, ems, prefactor).normalized()

    def normalized(self) -> "KernelExpr":
        """Split-merge normal form.

        Binomials split while the argument halves exactly and -c is a
        perfect-square monomial: (1+c e^{2L})^E -> (1-m e^L)^E (1+m e^L)^E
        with m^2 = -c.  Equal bases then merge by adding exponents; zero
        exponents drop.  Exponential monomials merge by their linear form.
        """
        split: list[BinomialFactor] = []
        stack = list(self.binomials)
        while stack:
            b = stack.pop()
            pieces = _try_split(b)
            if pieces is None:
                split.append(b)
            else:
                stack.extend(pieces)
        merged: dict[tuple, BinomialFactor] = {}
        for b in split:
            key = b.base.sort_key()
            if key in merged:
                old = merged[key]
                merged[key] = BinomialFactor(old.base, old.expo + b.expo)
            else:
                merged[key] = b
        binos = tuple(
            b for _, b in sorted(merged.items()) if not b.expo.is_zero()
        )
        ems: dict[LinearForm, ScalarExpr] = {}
        for t in self.expterms:
            ems[t.form] = ems.get(t.form, ZERO) + t.coeff
        ets = tuple(
            ExpMonomial(c, f)
            for f, c in sorted(ems.items(), key=lambda kv: kv[0].sort_key())
            if not c.is_zero()
        )
        return KernelExpr(binos, self.phase, ets, self.prefactor)

    # -- algebra ------------------------------------------------------------

    def __mul__(self, other: "KernelExpr") -> "KernelExpr":
        return KernelExpr(
            self.binomials + other.binomials,
            self.phase + other.phase,
            self.expterms + other.expterms,
            self.prefactor * other.prefactor,
        ).normalized()

    def subs_vars(self, vmap: Mapping[Variable, Variable]) -> "KernelExpr":
        return KernelExpr(
            tuple(
                BinomialFactor(
                    BinBase(b.base.c, b.base.arg.subs_vars(vmap)), b.expo
                )
                for b in self.binomials
            ),
            self.phase.subs_vars(vmap),
            tuple(
                ExpMonomial(t.coeff, t.form.subs_vars(vmap))
                for t in self.expterms
            ),
            self.prefactor,
        ).normalized()

    def subs_gen(self, name: str, value: ScalarExpr) -> "KernelExpr":
        return KernelExpr(
            tuple(
                BinomialFactor(
                    BinBase(
                        b.base.c.subs_gen(name, value),
                        b.base.arg.subs_gen(name, value),
                    ),
                    b.expo.subs_gen(name, value),
                )
                for b in self.binomials
            ),
            self.phase.subs_gen(name, value),
            tuple(
                ExpMonomial(
                    t.coeff.subs_gen(name, value),
                    t.form.subs_gen(name, value),
                )
                for t in self.expterms
            ),
            self.prefactor.subs_gen(name, value),
        ).normalized()

    def drop_zero_coeff_binomials(self) -> "KernelExpr":
        return KernelExpr(
            tuple(b for b in self.binomials if not b.base.c.is_zero()),
            self.phase,
            self.expterms,
            self.prefactor,
        ).normalized()

    def vars(self) -> tuple[Variable, ...]:
        seen = set()
        for b in self.binomials:
            seen.update(b.base.arg.vars())
        seen.update(self.phase.vars())
        for t in self.expterms:
            seen.update(t.form.vars())
        return tuple(sorted(seen))

    def __eq__(self, other):
        if not isinstance(other, KernelExpr):
            return NotImplemented
        return (
            self.binomials == other.binomials
            and self.phase == other.phase
            and self.expterms == other.expterms
            and self.prefactor == other.prefactor
        )

    def __hash__(self):
        return hash(
            (self.binomials, self.phase, self.expterms, self.prefactor)
        )

    # -- calculus -----------------------------------------------------------

    def dlog(self, v: Variable) -> "RatExpr":
        """d/dv of log K as a rational-exponential sum."""
        terms: list[RatTerm] = []
        pc = self.phase.coeff(v)
        if not pc.is_zero():
            terms.append(RatTerm(pc, ZERO_FORM, ()))
        for t in self.expterms:
            lv = t.form.coeff(v)
            if not lv.is_zero():
                terms.append(RatTerm(t.coeff * lv, t.form, ()))
        for b in self.binomials:
            av = b.base.arg.coeff(v)
            if not av.is_zero():
                terms.append(
                    RatTerm(
                        b.expo * b.base.c * av,
                        b.base.arg,
                        ((b.base, 1),),
                    )
                )
        return RatExpr(terms)

    # -- numerics and output ------------------------------------------------

    def eval_log(self, env) -> complex:
        """log(K / prefactor) with one principal branch per binomial factor."""
        total = self.phase.eval(env)
        for t in self.expterms:
            total += t.eval(env)
        for b in self.binomials:
            total += b.eval_log(env)
        return total

    def eval(self, env) -> complex:
        return self.prefactor.eval(env) * cmath.exp(self.eval_log(env))

    def canonical(self) -> dict:
        return {
            "prefactor": self.prefactor.canonical(),
            "binomials": [b.canonical() for b in self.binomials],
            "phase": self.phase.canonical(),
            "exponent": [t.canonical() for t in self.expterms],
        }

    def latex(self) -> str:
        parts = []
        if self.prefactor != ONE:
            parts.append(_coeff_latex(self.prefactor))
        for b in self.binomials:
            expo = scalar_latex(b.expo)
            parts.append(rf"{b.base.latex()}^{{{expo}}}")
        inner = []
        if not self.phase.is_zero():
            inner.append(self.phase.latex())
        for t in self.expterms:
            cs = _coeff_latex(t.coeff)
            body = rf"e^{{{t.form.latex()}}}"
            if cs == "1":
                inner.append("+" + body)
            elif cs == "-1":
                inner.append("-" + body)
            else:
                inner.append(("+" if not cs.startswith("-") else "") + cs + body)
        if inner:
            joined = "".join(inner).lstrip("+")
            parts.append(rf"\exp\left({joined}\right)")
        return r"\, ".join(parts) if parts else "1"

    def __repr__(self):
        return f"KernelExpr({self.latex()})"


def _try_split(b: BinomialFactor):
    half = b.base.arg.halve()
    if half is None or b.base.arg.is_zero():
        return None
    items = half.rational_items()
    if items is None or any(fr.denominator != 1 for _, fr in items):
        # only split when the halved form stays on the integer lattice;
        # fractional lattices are legal but never needed by the catalog
        return None
    negc = -b.base.c
    if not negc.is_monomial():
        return None
    (vec, q), = negc.terms.items()
    if any(e % 2 for e in vec):
        return None
    r = rational_sqrt(q)
    if r is None or not r:
        return None
    mvec = tuple(e // 2 for e in vec)
    m = ScalarExpr({mvec: r})
    return [
        BinomialFactor(BinBase(-m, half), b.expo),
        BinomialFactor(BinBase(m, half), b.expo),
    ]


# ---------------------------------------------------------------------------
# rational-exponential sums


@dataclass(frozen=True)
class RatTerm:
    """num * e^{form} / prod (1 + c e^{arg})^mult  with integer mult >= 1."""

    num: ScalarExpr
    form: LinearForm
    dens: tuple  # tuple[(BinBase, int)] sorted by base sort_key

    def canonical(self):
        return [
            self.num.canonical(),
            self.form.canonical(),
            [[b.canonical(), m] for b, m in self.dens],
        ]

    def eval(self, env) -> complex:
        val = self.num.eval(env) * cmath.exp(self.form.eval(env))
        for b, m in self.dens:
            val /= b.eval(env) ** m
        return val


def _sorted_dens(dens) -> tuple:
    return tuple(sorted(dens, key=lambda bm: bm[0].sort_key()))


class RatExpr:
    """Finite sum of RatTerms with exact zero test and witness extraction."""

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[RatTerm] = ()):
        self.terms = tuple(terms)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def const(s) -> "RatExpr":
        s = _as_scalar(s)
        if s.is_zero():
            return RatExpr()
        return RatExpr([RatTerm(s, ZERO_FORM, ())])

    @staticmethod
    def monomial(coeff, form: LinearForm) -> "RatExpr":
        c = _as_scalar(coeff)
        if c.is_zero():
            return RatExpr()
        return RatExpr([RatTerm(c, form, ())])

    @staticmethod
    def fraction(coeff, form: LinearForm, dens) -> "RatExpr":
        """dens is a sequence of (c, arg, mult) triples."""
        c = _as_scalar(coeff)
        if c.is_zero():
            return RatExpr()
        dd = _sorted_dens(
            [(BinBase(_as_scalar(cc), arg), m) for cc, arg, m in dens]
        )
        return RatExpr([RatTerm(c, form, dd)])

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "RatExpr") -> "RatExpr":
        return RatExpr(self.terms + other.terms)

    def __sub__(self, other: "RatExpr") -> "RatExpr":
        return self + (-other)

    def __neg__(self) -> "RatExpr":
        return RatExpr([RatTerm(-t.num, t.form, t.dens) for t in self.terms])

    def scale(self, s) -> "RatExpr":
        s = _as_scalar(s)
        if s.is_zero():
            return RatExpr()
        return RatExpr(
            [RatTerm(t.num * s, t.form, t.dens) for t in self.terms]
        )

    def __mul__(self, other: "RatExpr") -> "RatExpr":
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                dens: dict[BinBase, int] = dict(t1.dens)
                for b, m in t2.dens:
                    dens[b] = dens.get(b, 0) + m
                out.append(
                    RatTerm(
                        t1.num * t2.num,
                        t1.form + t2.form,
                        _sorted_dens(dens.items()),
                    )
                )
        return RatExpr(out)

    def d_dv(self, v: Variable) -> "RatExpr":
        out = []
        for t in self.terms:
            lv = t.form.coeff(v)
            if not lv.is_zero():
                out.append(RatTerm(t.num * lv, t.form, t.dens))
            for k, (b, m) in enumerate(t.dens):
                av = b.arg.coeff(v)
                if av.is_zero():
                    continue
                dens = dict(t.dens)
                dens[b] = m + 1
                out.append(
                    RatTerm(
                        -m * t.num * b.c * av,
                        t.form + b.arg,
                        _sorted_dens(dens.items()),
                    )
                )
        return RatExpr(out)

    def subs_vars(self, vmap) -> "RatExpr":
        return RatExpr(
            [
                RatTerm(
                    t.num,
                    t.form.subs_vars(vmap),
                    _sorted_dens(
                        (BinBase(b.c, b.arg.subs_vars(vmap)), m)
                        for b, m in t.dens
                    ),
                )
                for t in self.terms
            ]
        )

    def subs_gen(self, name: str, value: ScalarExpr) -> "RatExpr":
        out = []
        for t in self.terms:
            num = t.num.subs_gen(name, value)
            if num.is_zero():
                continue
            dens = []
            for b, m in t.dens:
                dens.append(
                    (
                        BinBase(
                            b.c.subs_gen(name, value),
                            b.arg.subs_gen(name, value),
                        ),
                        m,
                    )
                )
            out.append(
                RatTerm(num, t.form.subs_gen(name, value), _sorted_dens(dens))
            )
        return RatExpr(out)

    # -- the zero test ------------------------------------------------------

    def expand_monomials(self) -> dict[LinearForm, ScalarExpr]:
        """Clear all denominators and expand into exponential monomials.

        Multiplies every term by the global common denominator (the product
        of each binomial base raised to its maximum multiplicity), expands
        the nonnegative binomial powers exactly, and accumulates scalar
        coefficients by linear form.  The original expression is zero iff
        every accumulated coefficient is zero, because the common
        denominator is a unit in the ring of exponential sums.
        """
        maxmult: dict[BinBase, int] = {}
        for t in self.terms:
            for b, m in t.dens:
                if m > maxmult.get(b, 0):
                    maxmult[b] = m
        if len(maxmult) > 64:
            raise ValueError(
                f"refusing to expand over {len(maxmult)} distinct binomial "
                "bases; the expansion would be astronomically large"
            )
        acc: dict[LinearForm, ScalarExpr] = {}
        for t in self.terms:
            tmult = dict(t.dens)
            local: dict[LinearForm, ScalarExpr] = {t.form: t.num}
            for b, mmax in maxmult.items():
                p = mmax - tmult.get(b, 0)
                if p == 0:
                    continue
                local = _mul_binomial_power(local, b, p)
            for f, c in local.items():
                s = acc.get(f, ZERO) + c
                if s.is_zero():
                    acc.pop(f, None)
                else:
                    acc[f] = s
        return acc

    def is_zero_with_witness(self):
        """Return (True, None) or (False, (linear form, scalar coeff))."""
        acc = self.expand_monomials()
        if not acc:
            return True, None
        wf = min(acc, key=lambda f: f.sort_key())
        return False, (wf, acc[wf])

    def is_zero(self) -> bool:
        return self.is_zero_with_witness()[0]

    # -- numerics and output ------------------------------------------------

    def eval(self, env) -> complex:
        return sum((t.eval(env) for t in self.terms), 0j)

    def eval_term_scale(self, env) -> float:
        """Sum of term magnitudes, the natural scale for relative residuals."""
        return sum(abs(t.eval(env)) for t in self.terms)

    def canonical(self) -> list:
        return sorted(
            (t.canonical() for t in self.terms), key=lambda c: str(c)
        )

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"RatExpr({len(self.terms)} terms)"


def _mul_binomial_power(
    local: dict[LinearForm, ScalarExpr], b: BinBase, p: int
) -> dict[LinearForm, ScalarExpr]:
    """Multiply a monomial dict by (1 + c e^{arg})^p for integer p >= 1."""
    coeffs = []
    cp = ONE
    binc = 1
    for k in range(p + 1):
        coeffs.append(ScalarExpr.const(binc) * cp)
        cp = cp * b.c
        binc = binc * (p - k) // (k + 1)
    out: dict[LinearForm, ScalarExpr] = {}
    shift = ZERO_FORM
    for k in range(p + 1):
        ck = coeffs[k]
        for f, c in local.items():
            key = f + shift if k else f
            s = out.get(key, ZERO) + c * ck
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
        shift = shift + b.arg
    return out
