"""Exact scalar types used by the symbolic layer.

``Fraction`` is the default scalar. Two small extensions cover the places
where rationals are not enough:

* :class:`QuadSurd` -- elements ``a + b*sqrt(r)`` of a real quadratic field,
  needed for the normalised isometry ``(1/sqrt n) * sum t_i``.
* :class:`Cyclotomic` -- elements of ``Q(zeta_M)``, needed to average the
  gauge action over the ``M``-th roots of unity without rounding.

Floating complex values are also accepted everywhere; comparisons involving
them use :data:`FLOAT_TOL`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Union

FLOAT_TOL = 1e-12

Scalar = Union[int, Fraction, float, complex, "QuadSurd", "Cyclotomic"]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


def _squarefree_split(n: int) -> tuple[int, int]:
    """Return (s, r) with n == s*s*r and r squarefree."""
    s, r, d = 1, n, 2
    while d * d <= r:
        while r % (d * d) == 0:
            r //= d * d
            s *= d
        d += 1
    return s, r


class QuadSurd:
    """``a + b*sqrt(r)`` with rational a, b and squarefree r > 1."""

    __slots__ = ("a", "b", "r")

    def __init__(self, a, b, r: int):
        self.a = _frac(a)
        self.b = _frac(b)
        self.r = r

    @staticmethod
    def _make(a, b, r):
        if b == 0:
            return Fraction(a)
        return QuadSurd(a, b, r)

    def _coerce(self, other):
        if isinstance(other, QuadSurd):
            if other.r != self.r:
                raise ValueError(f"mixing sqrt({self.r}) and sqrt({other.r})")
            return other.a, other.b
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        c = self._coerce(other)
        if c is None:
            if isinstance(other, (float, complex)):
                return complex(self) + other
            return NotImplemented
        return self._make(self.a + c[0], self.b + c[1], self.r)

    __radd__ = __add__

    def __neg__(self):
        return QuadSurd(-self.a, -self.b, self.r)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        c = self._coerce(other)
        if c is None:
            if isinstance(other, (float, complex)):
                return complex(self) * other
            return NotImplemented
        a, b = c
        return self._make(self.a * a + self.b * b * self.r, self.a * b + self.b * a, self.r)

    __rmul__ = __mul__

    def inverse(self):
        den = self.a * self.a - self.b * self.b * self.r
        return self._make(self.a / den, -self.b / den, self.r)

    def __truediv__(self, other):
        c = self._coerce(other)
        if c is None:
            if isinstance(other, (float, complex)):
                return complex(self) / other
            return NotImplemented
        if isinstance(other, QuadSurd):
            return self * other.inverse()
        return self._make(self.a / c[0], self.b / c[0], self.r)

    def __rtruediv__(self, other):
        return other * self.inverse()

    def __pow__(self, k: int):
        out = Fraction(1)
        for _ in range(k):
            out = out * self
        return out

    def conjugate(self):
        return self

    def __eq__(self, other):
        c = self._coerce(other)
        if c is None:
            if isinstance(other, (float, complex)):
                return abs(complex(self) - other) <= FLOAT_TOL
            return NotImplemented
        return self.a == c[0] and self.b == c[1]

    def __hash__(self):
        return hash((self.a, self.b, self.r))

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.r)

    def __complex__(self):
        return complex(float(self))

    def __abs__(self):
        return self if float(self) >= 0 else -self

    def __repr__(self):
        return f"{self.a}+{self.b}*sqrt({self.r})"

    __str__ = __repr__


def sqrt_exact(n: int):
    """Exact square root of a positive integer: Fraction or QuadSurd."""
    if n <= 0:
        raise ValueError("sqrt_exact needs a positive integer")
    s, r = _squarefree_split(n)
    if r == 1:
        return Fraction(s)
    return QuadSurd(0, s, r)


# -- cyclotomic arithmetic --------------------------------------------------
# Polynomials are tuples of Fractions, lowest degree first.


def _poly_trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_divmod(num, den):
    num = [Fraction(c) for c in num]
    den = _poly_trim(den)
    q = [Fraction(0)] * max(len(num) - len(den) + 1, 1)
    while len(_poly_trim(num)) >= len(den):
        num = _poly_trim(num)
        shift = len(num) - len(den)
        coef = num[-1] / den[-1]
        q[shift] = coef
        for k, c in enumerate(den):
            num[shift + k] -= coef * c
    return q, _poly_trim(num)


@lru_cache(maxsize=None)
def cyclotomic_poly(m: int) -> tuple:
    """Coefficients of the m-th cyclotomic polynomial."""
    p = [Fraction(-1)] + [Fraction(0)] * (m - 1) + [Fraction(1)]
    for d in range(1, m):
        if m % d == 0:
            p, rem = _poly_divmod(p, cyclotomic_poly(d))
            assert not rem
    return tuple(_poly_trim(p))


class Cyclotomic:
    """An element of Q(zeta_M) in the power basis modulo Phi_M."""

    __slots__ = ("m", "coeffs")

    def __init__(self, m: int, coeffs):
        phi = cyclotomic_poly(m)
        deg = len(phi) - 1
        coeffs = [Fraction(c) for c in coeffs]
        if len(coeffs) > deg:
            _, coeffs = _poly_divmod(coeffs, phi)
        coeffs = list(coeffs) + [Fraction(0)] * (deg - len(coeffs))
        self.m = m
        self.coeffs = tuple(coeffs)

    @classmethod
    def root(cls, m: int, k: int = 1) -> "Cyclotomic":
        k %= m
        return cls(m, [0] * k + [1])

    def rational(self):
        """The value as a Fraction if it lies in Q, else None."""
        if all(c == 0 for c in self.coeffs[1:]):
            return self.coeffs[0]
        return None

    def _coerce(self, other):
        if isinstance(other, Cyclotomic):
            if other.m != self.m:
                raise ValueError(f"mixing Q(zeta_{self.m}) and Q(zeta_{other.m})")
            return other.coeffs
        if isinstance(other, (int, Fraction)):
            return (Fraction(other),)
        return None

    def __add__(self, other):
        c = self._coerce(other)
        if c is None:
            if isinstance(other, (float, complex)):
                return complex(self) + other
            return NotImplemented
        out = list(self.coeffs)
        for k, v in enumerate(c):
            out[k] += v
        return Cyclotomic(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.m, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        c = self._coerce(other)
        if c is None:
            if isinstance(other, (float, complex)):
                return complex(self) * other
            return NotImplemented
        out = [Fraction(0)] * (len(self.coeffs) + len(c))
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(c):
                    out[i + j] += a * b
        return Cyclotomic(self.m, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Cyclotomic(self.m, [c / other for c in self.coeffs])
        if isinstance(other, (float, complex)):
            return complex(self) / other
        return NotImplemented

    def conjugate(self):
        # zeta^k -> zeta^(-k)
        out = [Fraction(0)] * self.m
        for k, c in enumerate(self.coeffs):
            out[(-k) % self.m] += c
        return Cyclotomic(self.m, out)

    def __eq__(self, other):
        c = self._coerce(other)
        if c is None:
            if isinstance(other, (float, complex)):
                return abs(complex(self) - other) <= FLOAT_TOL
            return NotImplemented
        c = list(c) + [Fraction(0)] * (len(self.coeffs) - len(c))
        return tuple(c) == self.coeffs

    def __hash__(self):
        r = self.rational()
        return hash(r) if r is not None else hash((self.m, self.coeffs))

    def __complex__(self):
        z = complex(math.cos(2 * math.pi / self.m), math.sin(2 * math.pi / self.m))
        return sum((float(c) * z**k for k, c in enumerate(self.coeffs)), 0j)

    def __repr__(self):
        return f"Cyclotomic({self.m}, {[str(c) for c in self.coeffs]})"


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadSurd, Cyclotomic))


def simplify(x):
    """Collapse exact values that happen to be rational down to Fraction."""
    if isinstance(x, Cyclotomic):
        r = x.rational()
        return x if r is None else r
    if isinstance(x, int):
        return Fraction(x)
    return x


def is_zero(x, tol: float = FLOAT_TOL) -> bool:
    if is_exact(x):
        return x == 0
    return abs(x) <= tol


def close(a, b, tol: float = FLOAT_TOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(complex(a) - complex(b)) <= tol


def conj(x):
    return x.conjugate()


def to_complex(x) -> complex:
    return complex(x)


def abs_exact(x):
    """|x| exactly for Fractions and real surds, else a float."""
    if isinstance(x, (int, Fraction)):
        return abs(Fraction(x))
    if isinstance(x, QuadSurd):
        return abs(x)
    return abs(complex(x))


def encode(x):
    """JSON-friendly encoding of a scalar."""
    x = simplify(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, QuadSurd):
        return {"a": str(x.a), "b": str(x.b), "sqrt": x.r}
    if isinstance(x, Cyclotomic):
        return {"zeta": x.m, "coeffs": [str(c) for c in x.coeffs]}
    z = complex(x)
    return [z.real, z.imag]


def decode(obj):
    if isinstance(obj, str):
        return Fraction(obj)
    if isinstance(obj, list):
        return complex(obj[0], obj[1])
    if "sqrt" in obj:
        return QuadSurd._make(Fraction(obj["a"]), Fraction(obj["b"]), obj["sqrt"])
    return simplify(Cyclotomic(obj["zeta"], [Fraction(c) for c in obj["coeffs"]]))
