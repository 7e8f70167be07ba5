"""Expression trees over complex variables and their conjugates.

The grammar covers real-analytic potentials built from polynomials in
``z1..z9`` and ``cj(zk)``, integer powers, ``exp`` and ``log``:

    u = "z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)"

Every expression is normalized on construction: sums are flattened and
like monomials collected, products are expanded over sums with constants
folded, zero/one absorbed, and factors kept in a canonical order.
Conjugation lives only on variable leaves (``cj`` of a compound argument
is pushed down at parse time), which keeps Wirtinger differentiation to a
small case match.  Expressions are immutable and hashable; structural
equality is decidable and used as the simplification fixpoint.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass

import numpy as np


class ExprError(Exception):
    """Base class for expression-level failures."""


class ParseError(ExprError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class EvalDomainError(ExprError):
    """log or negative power hit a zero argument during evaluation."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


# --------------------------------------------------------------------------
# AST node types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    """Immutable expression node; arithmetic operators build normalized results."""

    def __add__(self, other):
        return normalize(Sum((self, _coerce(other))))

    __radd__ = __add__

    def __sub__(self, other):
        return normalize(Sum((self, Neg(_coerce(other)))))

    def __rsub__(self, other):
        return normalize(Sum((_coerce(other), Neg(self))))

    def __mul__(self, other):
        return normalize(Prod((self, _coerce(other))))

    __rmul__ = __mul__

    def __neg__(self):
        return normalize(Neg(self))

    def __pow__(self, exponent):
        return normalize(Power(self, int(exponent)))

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based


@dataclass(frozen=True)
class ConjVar(Expr):
    index: int


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple


@dataclass(frozen=True)
class Prod(Expr):
    factors: tuple


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Neg(Expr):
    child: Expr


@dataclass(frozen=True)
class Exp(Expr):
    child: Expr


@dataclass(frozen=True)
class Log(Expr):
    child: Expr


ZERO = Const(0)
ONE = Const(1)


def _coerce(value):
    if isinstance(value, Expr):
        return value
    return Const(complex(value))


def var(index):
    return Var(index)


def cvar(index):
    return ConjVar(index)


# --------------------------------------------------------------------------
# Canonical ordering
# --------------------------------------------------------------------------

_RANK = {Const: 0, Var: 1, ConjVar: 2, Power: 3, Exp: 4, Log: 5, Prod: 6, Sum: 7, Neg: 8}


def sort_key(e):
    """Total order used to sort factors and terms in the normal form."""
    if isinstance(e, Const):
        return (0, e.value.real, e.value.imag)
    if isinstance(e, Var):
        return (1, e.index)
    if isinstance(e, ConjVar):
        return (2, e.index)
    if isinstance(e, Power):
        return (3, sort_key(e.base), e.exponent)
    if isinstance(e, Exp):
        return (4, sort_key(e.child))
    if isinstance(e, Log):
        return (5, sort_key(e.child))
    if isinstance(e, Prod):
        return (6, len(e.factors), tuple(sort_key(f) for f in e.factors))
    if isinstance(e, Sum):
        return (7, len(e.terms), tuple(sort_key(t) for t in e.terms))
    if isinstance(e, Neg):
        return (8, sort_key(e.child))
    raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# Normal form: term lists
#
# A term list represents sum_i c_i * prod_j base_{ij}^{k_ij} with complex
# coefficients c_i and factor bases drawn from Var, ConjVar, Exp, Log, or a
# normalized Sum carrying a negative exponent (unexpandable reciprocal).
# --------------------------------------------------------------------------

_EXPAND_CAP = 64  # positive powers of sums beyond this are rejected as non-desk-scale


def _merge_factors(fa, fb):
    exps = {}
    order = []
    for base, k in fa + fb:
        if base in exps:
            exps[base] += k
        else:
            exps[base] = k
            order.append(base)
    out = []
    pending_sums = []
    for base in order:
        k = exps[base]
        if k == 0:
            continue
        if isinstance(base, Sum) and k > 0:
            pending_sums.append((base, k))  # re-expand, e.g. (S)^-1 * (S)^2
        else:
            out.append((base, k))
    return tuple(sorted(out, key=lambda f: (sort_key(f[0]), f[1]))), pending_sums


def _tl_mul(ta, tb):
    acc = []
    for ca, fa in ta:
        for cb, fb in tb:
            c = ca * cb
            if c == 0:
                continue
            factors, pending = _merge_factors(fa, fb)
            terms = [(c, factors)]
            for base, k in pending:
                stl = _terms(base)
                for _ in range(k):
                    terms = _tl_mul(terms, stl)
            acc.extend(terms)
    return _collect(acc)


def _collect(terms):
    coeffs = {}
    for c, factors in terms:
        coeffs[factors] = coeffs.get(factors, 0) + c
    out = [(c, f) for f, c in coeffs.items() if c != 0]
    out.sort(key=lambda t: tuple((sort_key(b), k) for b, k in t[1]))
    return out


def _pow_terms(tl, k):
    if k == 0:
        return [(complex(1), ())]  # 0^0 convention: empty product
    if not tl:
        if k > 0:
            return []
        raise ExprError("negative power of the zero expression")
    if len(tl) == 1:
        c, factors = tl[0]
        scaled = [(base, e * k) for base, e in factors]
        merged, pending = _merge_factors(tuple(scaled), ())
        terms = [(c ** k, merged)]
        for base, kk in pending:
            stl = _terms(base)
            for _ in range(kk):
                terms = _tl_mul(terms, stl)
        return _collect(terms)
    if k > 0:
        if k > _EXPAND_CAP:
            raise ExprError(f"sum power {k} exceeds expansion cap {_EXPAND_CAP}")
        acc = [(complex(1), ())]
        for _ in range(k):
            acc = _tl_mul(acc, tl)
        return acc
    base = _rebuild(tl)
    return [(complex(1), ((base, k),))]


def _terms(e):
    if isinstance(e, Const):
        return [] if e.value == 0 else [(e.value, ())]
    if isinstance(e, (Var, ConjVar)):
        return [(complex(1), ((e, 1),))]
    if isinstance(e, Neg):
        return _collect([(-c, f) for c, f in _terms(e.child)])
    if isinstance(e, Sum):
        acc = []
        for t in e.terms:
            acc.extend(_terms(t))
        return _collect(acc)
    if isinstance(e, Prod):
        acc = [(complex(1), ())]
        for f in e.factors:
            acc = _tl_mul(acc, _terms(f))
        return acc
    if isinstance(e, Power):
        if not isinstance(e.exponent, int):
            raise ExprError(f"non-integer exponent {e.exponent!r}")
        return _pow_terms(_terms(e.base), e.exponent)
    if isinstance(e, Exp):
        tl = _terms(e.child)
        if not tl:
            return [(complex(1), ())]
        if len(tl) == 1 and tl[0][1] == ():
            return [(cmath.exp(tl[0][0]), ())]
        return [(complex(1), ((Exp(_rebuild(tl)), 1),))]
    if isinstance(e, Log):
        tl = _terms(e.child)
        if not tl:
            raise ExprError("log of the zero expression")
        if len(tl) == 1 and tl[0][1] == ():
            return [(cmath.log(tl[0][0]), ())]
        return [(complex(1), ((Log(_rebuild(tl)), 1),))]
    raise TypeError(f"not an Expr: {e!r}")


def _rebuild(tl):
    if not tl:
        return ZERO
    term_exprs = []
    for c, factors in tl:
        fs = [base if k == 1 else Power(base, k) for base, k in factors]
        if not fs:
            term_exprs.append(Const(c))
        elif c == 1:
            term_exprs.append(fs[0] if len(fs) == 1 else Prod(tuple(fs)))
        else:
            term_exprs.append(Prod(tuple([Const(c)] + fs)))
    if len(term_exprs) == 1:
        return term_exprs[0]
    return Sum(tuple(term_exprs))


def normalize(e):
    """Return the canonical normal form of ``e`` (idempotent)."""
    return _rebuild(_terms(e))


def chop(e, tol=1e-13):
    """Drop top-level coefficients (or their real/imag parts) below ``tol``.

    Used after quadrature averaging where root-of-unity phase sums leave
    ~1e-16 dust on coefficients that cancel exactly in the measure.
    """
    out = []
    for c, factors in _terms(e):
        re = 0.0 if abs(c.real) < tol else c.real
        im = 0.0 if abs(c.imag) < tol else c.imag
        c2 = complex(re, im)
        if c2 != 0:
            out.append((c2, factors))
    return _rebuild(out)


def max_abs_coeff(e):
    return max((abs(c) for c, _ in _terms(e)), default=0.0)


# --------------------------------------------------------------------------
# Structural queries
# --------------------------------------------------------------------------

def max_var_index(e):
    if isinstance(e, (Var, ConjVar)):
        return e.index
    if isinstance(e, Const):
        return 0
    if isinstance(e, Sum):
        return max((max_var_index(t) for t in e.terms), default=0)
    if isinstance(e, Prod):
        return max((max_var_index(f) for f in e.factors), default=0)
    if isinstance(e, Power):
        return max_var_index(e.base)
    if isinstance(e, (Neg, Exp, Log)):
        return max_var_index(e.child)
    raise TypeError(f"not an Expr: {e!r}")


def conj_expr(e):
    """Complex conjugate with conjugation pushed to the leaves; normalized."""
    return normalize(_conj(e))


def _conj(e):
    if isinstance(e, Const):
        return Const(e.value.conjugate())
    if isinstance(e, Var):
        return ConjVar(e.index)
    if isinstance(e, ConjVar):
        return Var(e.index)
    if isinstance(e, Sum):
        return Sum(tuple(_conj(t) for t in e.terms))
    if isinstance(e, Prod):
        return Prod(tuple(_conj(f) for f in e.factors))
    if isinstance(e, Power):
        return Power(_conj(e.base), e.exponent)
    if isinstance(e, Neg):
        return Neg(_conj(e.child))
    if isinstance(e, Exp):
        return Exp(_conj(e.child))
    if isinstance(e, Log):
        # principal-branch caveat: valid off the negative real axis
        return Log(_conj(e.child))
    raise TypeError(f"not an Expr: {e!r}")


def substitute_linear(e, matrix):
    """Substitute the linear action z -> U z into ``e`` and normalize.

    ``matrix`` is a d x d complex array; ``cj(z_j)`` picks up conjugated
    coefficients so the result is again conjugation-on-leaves.
    """
    U = np.asarray(matrix, dtype=complex)
    d = U.shape[0]

    def sub(node):
        if isinstance(node, Var):
            j = node.index - 1
            if j >= d:
                raise ExprError(f"variable z{node.index} outside the {d}-dimensional action")
            return Sum(tuple(Prod((Const(U[j, k]), Var(k + 1))) for k in range(d)))
        if isinstance(node, ConjVar):
            j = node.index - 1
            if j >= d:
                raise ExprError(f"variable z{node.index} outside the {d}-dimensional action")
            return Sum(tuple(Prod((Const(U[j, k].conjugate()), ConjVar(k + 1))) for k in range(d)))
        if isinstance(node, Const):
            return node
        if isinstance(node, Sum):
            return Sum(tuple(sub(t) for t in node.terms))
        if isinstance(node, Prod):
            return Prod(tuple(sub(f) for f in node.factors))
        if isinstance(node, Power):
            return Power(sub(node.base), node.exponent)
        if isinstance(node, Neg):
            return Neg(sub(node.child))
        if isinstance(node, Exp):
            return Exp(sub(node.child))
        if isinstance(node, Log):
            return Log(sub(node.child))
        raise TypeError(f"not an Expr: {node!r}")

    return normalize(sub(e))


# --------------------------------------------------------------------------
# Wirtinger differentiation
# --------------------------------------------------------------------------

def wirtinger_diff(e, index, conjugate=False):
    """Symbolic d e / d z_index (or d z̄_index when ``conjugate``), normalized.

    z_j and cj(z_j) are treated as independent variables.
    """
    return normalize(_diff(e, index, conjugate))


def _diff(e, j, conj_flag):
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if (e.index == j and not conj_flag) else ZERO
    if isinstance(e, ConjVar):
        return ONE if (e.index == j and conj_flag) else ZERO
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, j, conj_flag) for t in e.terms))
    if isinstance(e, Neg):
        return Neg(_diff(e.child, j, conj_flag))
    if isinstance(e, Prod):
        parts = []
        for i, f in enumerate(e.factors):
            parts.append(Prod(e.factors[:i] + (_diff(f, j, conj_flag),) + e.factors[i + 1:]))
        return Sum(tuple(parts))
    if isinstance(e, Power):
        if e.exponent == 0:
            return ZERO
        return Prod((Const(e.exponent), Power(e.base, e.exponent - 1), _diff(e.base, j, conj_flag)))
    if isinstance(e, Exp):
        return Prod((e, _diff(e.child, j, conj_flag)))
    if isinstance(e, Log):
        return Prod((Power(e.child, -1), _diff(e.child, j, conj_flag)))
    raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

def evaluate(e, point):
    """Exact recursive evaluation at a point in C^d (any complex sequence)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        _check_index(e.index, point)
        return complex(point[e.index - 1])
    if isinstance(e, ConjVar):
        _check_index(e.index, point)
        return complex(point[e.index - 1]).conjugate()
    if isinstance(e, Sum):
        return sum(evaluate(t, point) for t in e.terms)
    if isinstance(e, Prod):
        acc = complex(1)
        for f in e.factors:
            acc *= evaluate(f, point)
        return acc
    if isinstance(e, Power):
        base = evaluate(e.base, point)
        if e.exponent < 0 and base == 0:
            raise EvalDomainError("negative power of zero", point=tuple(point))
        return base ** e.exponent
    if isinstance(e, Neg):
        return -evaluate(e.child, point)
    if isinstance(e, Exp):
        return cmath.exp(evaluate(e.child, point))
    if isinstance(e, Log):
        arg = evaluate(e.child, point)
        if arg == 0:
            raise EvalDomainError("log of zero", point=tuple(point))
        return cmath.log(arg)
    raise TypeError(f"not an Expr: {e!r}")


def _check_index(index, point):
    if index > len(point):
        raise ExprError(f"variable z{index} undefined at a {len(point)}-dimensional point")


def _py_src(e):
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"z[{e.index - 1}]"
    if isinstance(e, ConjVar):
        return f"C(z[{e.index - 1}])"
    if isinstance(e, Sum):
        return "(" + "+".join(_py_src(t) for t in e.terms) + ")"
    if isinstance(e, Prod):
        return "(" + "*".join(_py_src(f) for f in e.factors) + ")"
    if isinstance(e, Power):
        return f"({_py_src(e.base)})**({e.exponent})"
    if isinstance(e, Neg):
        return f"(-{_py_src(e.child)})"
    if isinstance(e, Exp):
        return f"E({_py_src(e.child)})"
    if isinstance(e, Log):
        return f"L({_py_src(e.child)})"
    raise TypeError(f"not an Expr: {e!r}")


def compile_expr(e):
    """Compile to a vectorized callable f(z) with z of shape (d, ...) complex.

    Semantics match :func:`evaluate` on the interior of the domain; the
    compiled path does not raise on singular log/negative-power arguments
    and is meant for hot loops over certified sample sets.
    """
    src = _py_src(e)
    ns = {"C": np.conj, "E": np.exp, "L": np.log}
    exec(f"def _compiled(z):\n    return {src}\n", ns)
    return ns["_compiled"]


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

def _fmt_real(x):
    if x == int(x) and abs(x) < 1e15:
        return repr(float(x))
    return repr(x)


def _const_str(value):
    re_, im_ = value.real, value.imag
    if im_ == 0:
        return _fmt_real(re_)
    if re_ == 0:
        if im_ == 1:
            return "i"
        if im_ == -1:
            return "-i"
        return f"{_fmt_real(im_)}*i"
    sign = "+" if im_ >= 0 else "-"
    imag = "i" if abs(im_) == 1 else f"{_fmt_real(abs(im_))}*i"
    return f"({_fmt_real(re_)} {sign} {imag})"


def _atom_str(e):
    s = to_string(e)
    if isinstance(e, (Sum, Prod, Neg)):
        return f"({s})"
    if isinstance(e, Const) and not s.startswith("("):
        needs = s.startswith("-") or "*" in s
        return f"({s})" if needs else s
    return s


def to_string(e):
    """Render in the input grammar; parse(to_string(e)) == e for normalized e."""
    if isinstance(e, Const):
        return _const_str(e.value)
    if isinstance(e, Var):
        return f"z{e.index}"
    if isinstance(e, ConjVar):
        return f"cj(z{e.index})"
    if isinstance(e, Power):
        return f"{_atom_str(e.base)}^{e.exponent}"
    if isinstance(e, Exp):
        return f"exp({to_string(e.child)})"
    if isinstance(e, Log):
        return f"log({to_string(e.child)})"
    if isinstance(e, Neg):
        return f"-{_atom_str(e.child)}"
    if isinstance(e, Prod):
        factors = list(e.factors)
        prefix = ""
        if factors and isinstance(factors[0], Const):
            c = factors[0].value
            if c == -1:
                prefix = "-"
                factors = factors[1:]
            elif c.imag == 0 and c.real < 0:
                prefix = "-"
                factors[0] = Const(-c)
        return prefix + "*".join(_atom_str(f) for f in factors)
    if isinstance(e, Sum):
        parts = [to_string(e.terms[0])]
        for t in e.terms[1:]:
            s = to_string(t)
            if s.startswith("-"):
                parts.append(f" - {s[1:]}")
            else:
                parts.append(f" + {s}")
        return "".join(parts)
    raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z]+")


class _Lexer:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, message, position=None):
        raise ParseError(message, self.pos if position is None else position)

    def next_token(self):
        t = self.text
        while self.pos < len(t) and t[self.pos].isspace():
            self.pos += 1
        if self.pos >= len(t):
            return ("eof", None, self.pos)
        start = self.pos
        ch = t[start]
        if ch in "+-*^()":
            self.pos += 1
            return (ch, ch, start)
        m = _NUMBER_RE.match(t, start)
        if m:
            self.pos = m.end()
            return ("number", m.group(), start)
        m = _NAME_RE.match(t, start)
        if m:
            name = m.group()
            if name == "i":
                self.pos = m.end()
                return ("imag", None, start)
            if name in ("cj", "exp", "log"):
                self.pos = m.end()
                return (name, None, start)
            if name[0] == "z":
                digits = re.match(r"z(\d+)", t[start:])
                if digits:
                    self.pos = start + digits.end()
                    return ("var", int(digits.group(1)), start)
                self.error(f"expected a variable index after 'z'", start)
            self.error(f"unknown name '{name}'", start)
        self.error(f"unexpected character '{ch}'", start)


class _Parser:
    def __init__(self, text, dimension):
        self.lexer = _Lexer(text)
        self.dimension = dimension
        self.tok = self.lexer.next_token()

    def advance(self):
        self.tok = self.lexer.next_token()

    def expect(self, kind, what):
        if self.tok[0] != kind:
            raise ParseError(f"expected {what}", self.tok[2])
        value = self.tok
        self.advance()
        return value

    def parse(self):
        e = self.sum_()
        if self.tok[0] != "eof":
            raise ParseError(f"unexpected '{self.tok[1] or self.tok[0]}'", self.tok[2])
        return e

    def sum_(self):
        terms = [self.term()]
        while self.tok[0] in ("+", "-"):
            op = self.tok[0]
            self.advance()
            t = self.term()
            terms.append(Neg(t) if op == "-" else t)
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        factors = [self.unary()]
        while self.tok[0] == "*":
            self.advance()
            factors.append(self.unary())
        return factors[0] if len(factors) == 1 else Prod(tuple(factors))

    def unary(self):
        if self.tok[0] in ("+", "-"):
            op = self.tok[0]
            self.advance()
            child = self.unary()
            return Neg(child) if op == "-" else child
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "^":
            self.advance()
            return Power(base, self.exponent())
        return base

    def exponent(self):
        sign = 1
        parens = False
        if self.tok[0] == "(":
            parens = True
            self.advance()
        if self.tok[0] == "-":
            sign = -1
            self.advance()
        kind, text, pos = self.expect("number", "an integer exponent")
        if "." in text or "e" in text or "E" in text:
            raise ParseError("exponent must be an integer", pos)
        if parens:
            self.expect(")", "')'")
        return sign * int(text)

    def atom(self):
        kind, value, pos = self.tok
        if kind == "number":
            self.advance()
            return Const(complex(float(value)))
        if kind == "imag":
            self.advance()
            return Const(1j)
        if kind == "var":
            if not 1 <= value <= 9:
                raise ParseError(f"variable index {value} outside z1..z9", pos)
            if value > self.dimension:
                raise ParseError(
                    f"variable z{value} exceeds dimension {self.dimension}", pos)
            self.advance()
            return Var(value)
        if kind in ("cj", "exp", "log"):
            self.advance()
            self.expect("(", "'('")
            inner = self.sum_()
            self.expect(")", "')'")
            if kind == "cj":
                return _conj(inner)
            return Exp(inner) if kind == "exp" else Log(inner)
        if kind == "(":
            self.advance()
            inner = self.sum_()
            self.expect(")", "')'")
            return inner
        if kind == "eof":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected '{value or kind}'", pos)


def parse_expression(text, dimension):
    """Parse to the normalized AST; raises :class:`ParseError` with position."""
    return normalize(_Parser(text, dimension).parse())


# --------------------------------------------------------------------------
# Potential fields
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RealnessCertificate:
    sample_count: int
    seed: int
    max_abs_imag: float
    tolerance: float
    passed: bool
    witness: tuple | None = None


class RealnessError(ExprError):
    pass


class PotentialField:
    """A real-valued scalar field on C^d backed by an expression tree.

    Immutable after construction; symbolic Wirtinger derivatives and their
    compiled evaluators are cached on first use, so instances are safe to
    share across concurrent workers.
    """

    def __init__(self, dimension, expression, domain_radius=None, realness=None):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        expression = normalize(expression)
        used = max_var_index(expression)
        if used > dimension:
            raise ExprError(f"expression uses z{used} but dimension is {dimension}")
        self.dimension = dimension
        self.expression = expression
        self.domain_radius = domain_radius
        self.realness = realness
        self._dbar = {}
        self._dz = {}
        self._second = {}
        self._compiled = {}

    @classmethod
    def from_text(cls, text, dimension, domain_radius=None, samples=128, seed=0,
                  tolerance=1e-10, check_real=True):
        field = cls(dimension, parse_expression(text, dimension), domain_radius)
        cert = is_real_valued(field, samples, seed, tolerance)
        if check_real and not cert.passed:
            raise RealnessError(
                f"field is not real-valued: |Im u| = {cert.max_abs_imag:.3e} "
                f"at {cert.witness}")
        field.realness = cert
        return field

    # -- symbolic derivative cache ------------------------------------------------
    def dbar(self, j):
        """d u / d z̄_j as a normalized expression."""
        if j not in self._dbar:
            self._dbar[j] = wirtinger_diff(self.expression, j, conjugate=True)
        return self._dbar[j]

    def dz(self, j):
        if j not in self._dz:
            self._dz[j] = wirtinger_diff(self.expression, j, conjugate=False)
        return self._dz[j]

    def second(self, j, k, first_conj, second_conj):
        """d²u applied as (d/dz_j or d/dz̄_j) then (d/dz_k or d/dz̄_k)."""
        key = (j, k, first_conj, second_conj)
        if key not in self._second:
            first = self.dbar(j) if first_conj else self.dz(j)
            self._second[key] = wirtinger_diff(first, k, conjugate=second_conj)
        return self._second[key]

    def levi_entry(self, j, k):
        """d²u / d z_j d z̄_k."""
        return self.second(j, k, False, True)

    def dzz_entry(self, j, k):
        return self.second(j, k, False, False)

    # -- compiled batch evaluators ------------------------------------------------
    def _fn(self, name, exprs):
        if name not in self._compiled:
            fns = [compile_expr(e) for e in exprs]
            self._compiled[name] = fns
        return self._compiled[name]

    def values(self, pts):
        """Field values at pts of shape (N, d); returns real array (N,)."""
        z = np.asarray(pts, dtype=complex).reshape(-1, self.dimension).T
        fn = self._fn("u", [self.expression])[0]
        out = np.broadcast_to(np.asarray(fn(z)), z.shape[1:]).astype(complex)
        return out.real.copy()

    def values_complex(self, pts):
        z = np.asarray(pts, dtype=complex).reshape(-1, self.dimension).T
        fn = self._fn("u", [self.expression])[0]
        return np.broadcast_to(np.asarray(fn(z)), z.shape[1:]).astype(complex).copy()

    def grad_dbar(self, pts):
        """Components d u / d z̄_j at pts (N, d); returns (N, d) complex."""
        d = self.dimension
        z = np.asarray(pts, dtype=complex).reshape(-1, d).T
        fns = self._fn("dbar", [self.dbar(j) for j in range(1, d + 1)])
        cols = [np.broadcast_to(np.asarray(fn(z)), z.shape[1:]).astype(complex)
                for fn in fns]
        return np.stack(cols, axis=-1)

    def levi_matrices(self, pts):
        """Levi matrices H_jk = d²u/dz_j dz̄_k at pts (N, d); returns (N, d, d)."""
        d = self.dimension
        z = np.asarray(pts, dtype=complex).reshape(-1, d).T
        fns = self._fn("levi", [self.levi_entry(j, k)
                                for j in range(1, d + 1) for k in range(1, d + 1)])
        vals = [np.broadcast_to(np.asarray(fn(z)), z.shape[1:]).astype(complex)
                for fn in fns]
        return np.stack(vals, axis=-1).reshape(-1, d, d)

    def dzz_matrices(self, pts):
        d = self.dimension
        z = np.asarray(pts, dtype=complex).reshape(-1, d).T
        fns = self._fn("dzz", [self.dzz_entry(j, k)
                               for j in range(1, d + 1) for k in range(1, d + 1)])
        vals = [np.broadcast_to(np.asarray(fn(z)), z.shape[1:]).astype(complex)
                for fn in fns]
        return np.stack(vals, axis=-1).reshape(-1, d, d)

    # -- single-point reference paths ----------------------------------------------
    def value(self, p):
        return evaluate(self.expression, p).real

    def value_complex(self, p):
        return evaluate(self.expression, p)

    def __repr__(self):
        return f"PotentialField(d={self.dimension}, u={to_string(self.expression)})"


def sample_ball(dimension, radius, count, rng):
    """Uniform samples from the complex ball of the given radius, shape (count, d)."""
    raw = rng.normal(size=(count, 2 * dimension))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = radius * rng.random(count) ** (1.0 / (2 * dimension))
    pts = raw / norms * radii[:, None]
    return pts[:, ::2] + 1j * pts[:, 1::2]


def is_real_valued(field, samples, seed, tolerance=1e-10):
    """Sample the field and certify |Im u| stays below ``tolerance``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    radius = field.domain_radius if field.domain_radius is not None else 2.0
    pts = sample_ball(field.dimension, radius, samples, rng)
    worst = 0.0
    witness = None
    for p in pts:
        try:
            value = evaluate(field.expression, p)
        except EvalDomainError as err:
            raise EvalDomainError(f"realness sampling hit a singular point: {err}",
                                  point=tuple(p)) from err
        if abs(value.imag) > worst:
            worst = abs(value.imag)
            witness = tuple(p)
    return RealnessCertificate(samples, seed, worst, tolerance, worst < tolerance,
                               witness if worst >= tolerance else None)
