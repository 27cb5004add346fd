"""Exact arithmetic in S = Z_p[[u]] restricted to polynomial representatives.

Elements are polynomials in u whose rational coefficients are p-integral
(denominator coprime to p).  The distinguished polynomial E = u - p is
monic, so exact division by powers of E keeps coefficients p-integral;
every algorithm downstream provably stays inside this class and no
p-adic or u-adic truncation is needed anywhere.

S is a local ring with maximal ideal (p, u): a polynomial is a unit of S
iff its constant term has p-adic valuation 0.  Since u = E + p, any f
also has a finite expansion f = sum c_k E^k whose degree-0 term is f(p).
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import NotDivisible, NotPIntegral, ParseError

Scalar = Union[int, Fraction]

__all__ = ["vp", "pscalar", "PolyU", "parse_poly"]


def vp(x: Scalar, p: int) -> int | None:
    """p-adic valuation of a rational; None for x == 0.

    Negative when p divides the denominator.
    """
    x = Fraction(x)
    if x == 0:
        return None
    v = 0
    n = x.numerator
    while n % p == 0:
        n //= p
        v += 1
    d = x.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


def pscalar(value: Scalar, p: int) -> Fraction:
    """Coerce to Fraction, enforcing p-integrality."""
    f = value if isinstance(value, Fraction) else Fraction(value)
    if f.denominator % p == 0:
        raise NotPIntegral(f"{f} is not {p}-integral")
    return f


def _divmod_linear(coeffs: Sequence[Fraction], p: int):
    # Synthetic division by the monic linear polynomial u - p:
    # returns (quotient coefficients, remainder == value at u = p).
    if not coeffs:
        return [], Fraction(0)
    q = [Fraction(0)] * (len(coeffs) - 1)
    carry = Fraction(0)
    for k in range(len(coeffs) - 1, 0, -1):
        carry = coeffs[k] + p * carry
        q[k - 1] = carry
    rem = coeffs[0] + p * carry
    return q, rem


class PolyU:
    """Polynomial in u with p-integral rational coefficients, canonical form.

    coeffs[k] is the coefficient of u**k; trailing zeros are trimmed.
    Instances are treated as immutable values.
    """

    __slots__ = ("p", "coeffs")

    def __init__(self, p: int, coeffs: Iterable[Scalar] = ()):
        cs = [pscalar(c, p) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.p = p
        self.coeffs = tuple(cs)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, p: int) -> "PolyU":
        return cls(p, ())

    @classmethod
    def one(cls, p: int) -> "PolyU":
        return cls(p, (1,))

    @classmethod
    def const(cls, c: Scalar, p: int) -> "PolyU":
        return cls(p, (c,))

    @classmethod
    def u(cls, p: int) -> "PolyU":
        return cls(p, (0, 1))

    @classmethod
    def e_poly(cls, p: int) -> "PolyU":
        """The distinguished polynomial E = u - p."""
        return cls(p, (-p, 1))

    # -- basic structure ----------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyU):
            return NotImplemented
        return self.p == other.p and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.p, self.coeffs))

    def _check_same(self, other: "PolyU"):
        if self.p != other.p:
            raise ValueError(f"mixed primes {self.p} and {other.p}")

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PolyU.const(other, self.p)
        if not isinstance(other, PolyU):
            return NotImplemented
        self._check_same(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] += c
        return PolyU(self.p, out)

    __radd__ = __add__

    def __neg__(self):
        return PolyU(self.p, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PolyU.const(other, self.p)
        if not isinstance(other, PolyU):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = pscalar(other, self.p)
            return PolyU(self.p, tuple(c * a for a in self.coeffs))
        if not isinstance(other, PolyU):
            return NotImplemented
        self._check_same(other)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return PolyU.zero(self.p)
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
        return PolyU(self.p, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative exponent")
        result = PolyU.one(self.p)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- evaluation and E-adic structure --------------------------------

    def evaluate(self, x: Scalar) -> Fraction:
        """Exact value at a rational point, by Horner."""
        x = Fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_at_p(self) -> Fraction:
        """The projection S -> Z_(p), u |-> p."""
        return self.evaluate(self.p)

    def e_expand(self) -> tuple[Fraction, ...]:
        """Finite coefficients (c_0, c_1, ...) with self == sum c_k E^k.

        c_0 equals eval_at_p(); all c_k are p-integral because E is monic.
        """
        out = []
        cur = list(self.coeffs)
        while cur:
            cur, rem = _divmod_linear(cur, self.p)
            out.append(rem)
        return tuple(out)

    def div_by_E_exact(self, k: int) -> "PolyU":
        """Return g with g * E**k == self; raises NotDivisible otherwise."""
        if k < 0:
            raise ValueError("negative power of E")
        cur = list(self.coeffs)
        for _ in range(k):
            cur, rem = _divmod_linear(cur, self.p)
            if rem != 0:
                raise NotDivisible(f"E^{k} does not divide {self.to_string()}")
        return PolyU(self.p, cur)

    def e_valuation(self) -> int | None:
        """Largest k with E^k dividing self; None for the zero polynomial."""
        if self.is_zero():
            return None
        for k, c in enumerate(self.e_expand()):
            if c != 0:
                return k
        raise AssertionError("nonzero polynomial with zero E-expansion")

    def e_split(self) -> tuple[int, "PolyU"]:
        """Write self == cofactor * E**k with E not dividing the cofactor."""
        k = self.e_valuation()
        if k is None:
            raise ValueError("zero polynomial has no E-split")
        return k, self.div_by_E_exact(k)

    def is_unit_in_S(self) -> bool:
        """True iff self is a unit of Z_p[[u]]: constant term of valuation 0."""
        if self.is_zero():
            return False
        return vp(self.coeffs[0], self.p) == 0

    # -- printing -------------------------------------------------------

    @staticmethod
    def _format(coeffs: Sequence[Fraction], var: str) -> str:
        terms = []
        for k in range(len(coeffs) - 1, -1, -1):
            c = coeffs[k]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = -c if c < 0 else c
            if k == 0:
                body = str(mag)
            else:
                head = var if k == 1 else f"{var}^{k}"
                body = head if mag == 1 else f"{mag}*{head}"
            terms.append((sign, body))
        if not terms:
            return "0"
        first_sign, first_body = terms[0]
        out = first_body if first_sign == "+" else f"-{first_body}"
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out

    def to_string(self) -> str:
        """Canonical rendering in powers of u; parse_poly round-trips it."""
        return self._format(self.coeffs, "u")

    def to_E_string(self) -> str:
        """Rendering in powers of E; parse_poly round-trips it."""
        return self._format(self.e_expand(), "E")

    def __repr__(self):
        return f"PolyU(p={self.p}, {self.to_string()})"


# -- parsing ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\d+|u|E|\*\*|[+\-*/^()])")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos:].lstrip()[0]!r} at position {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _Parser:
    # Grammar:
    #   expr   := ['+'|'-'] term (('+'|'-') term)*
    #   term   := factor ('*' factor)*
    #   factor := atom ['^' INT]
    #   atom   := INT ['/' INT] | 'u' | 'E' | '(' expr ')'
    # 'E' expands to u - p at parse time; '**' is accepted for '^'.

    def __init__(self, tokens: list[str], p: int):
        self.tokens = tokens
        self.pos = 0
        self.p = p

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, tok: str):
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    def parse(self) -> PolyU:
        out = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing input starting at {self.peek()!r}")
        return out

    def expr(self) -> PolyU:
        negate = False
        if self.peek() in ("+", "-"):
            negate = self.next() == "-"
        acc = self.term()
        if negate:
            acc = -acc
        while self.peek() in ("+", "-"):
            op = self.next()
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> PolyU:
        acc = self.factor()
        while self.peek() == "*":
            self.next()
            acc = acc * self.factor()
        return acc

    def factor(self) -> PolyU:
        base = self.atom()
        if self.peek() in ("^", "**"):
            self.next()
            tok = self.next()
            if not tok.isdigit():
                raise ParseError(f"exponent must be a nonnegative integer, got {tok!r}")
            base = base ** int(tok)
        return base

    def atom(self) -> PolyU:
        tok = self.next()
        if tok.isdigit():
            if self.peek() == "/":
                self.next()
                den = self.next()
                if not den.isdigit():
                    raise ParseError(f"denominator must be an integer, got {den!r}")
                if int(den) == 0:
                    raise ParseError("zero denominator")
                return PolyU.const(Fraction(int(tok), int(den)), self.p)
            return PolyU.const(int(tok), self.p)
        if tok == "u":
            return PolyU.u(self.p)
        if tok == "E":
            return PolyU.e_poly(self.p)
        if tok == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {tok!r}")


def parse_poly(text: str, p: int) -> PolyU:
    """Parse an entry string into canonical PolyU form.

    Accepts integers, rationals a/b, u, E, + - * ^ and parentheses; E is
    macro-expanded to (u - p).  Raises ParseError on malformed input and
    NotPIntegral on coefficients with denominator divisible by p.
    """
    return _Parser(_tokenize(text), p).parse()
