"""Linear terms over integer variables with arbitrary-precision coefficients."""
from __future__ import annotations

from math import gcd
from typing import Iterable, Mapping


class LinearTerm:
    """An immutable linear term ``a_1*v_1 + ... + a_d*v_d + c``.

    Coefficients are kept as a tuple of ``(variable, coefficient)`` pairs sorted
    by variable name, with zero coefficients dropped, so that two terms are equal
    exactly when they denote the same polynomial.
    """

    __slots__ = ("coeffs", "constant", "_hash", "_map")

    def __init__(self, coeffs: Mapping[str, int] | Iterable[tuple[str, int]] = (), constant: int = 0):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[str, int] = {}
        for v, a in items:
            acc[v] = acc.get(v, 0) + a
        self.coeffs = tuple(sorted((v, a) for v, a in acc.items() if a != 0))
        self.constant = int(constant)
        self._hash = None
        self._map = None

    @classmethod
    def _raw(cls, coeffs: tuple, constant: int) -> "LinearTerm":
        t = cls.__new__(cls)
        t.coeffs = coeffs
        t.constant = constant
        t._hash = None
        t._map = None
        return t

    @classmethod
    def var(cls, name: str, coef: int = 1) -> "LinearTerm":
        return cls._raw(((name, coef),) if coef else (), 0)

    @classmethod
    def const(cls, value: int) -> "LinearTerm":
        return cls._raw((), int(value))

    # -- inspection -------------------------------------------------------

    @property
    def coeff_map(self) -> dict[str, int]:
        if self._map is None:
            self._map = dict(self.coeffs)
        return self._map

    def coef(self, v: str) -> int:
        return self.coeff_map.get(v, 0)

    @property
    def vars(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def is_homogeneous(self) -> bool:
        return self.constant == 0

    def is_variable(self) -> bool:
        """True for a bare variable: coefficient 1 and constant 0."""
        return self.constant == 0 and len(self.coeffs) == 1 and self.coeffs[0][1] == 1

    def homogeneous(self) -> "LinearTerm":
        return self if self.constant == 0 else LinearTerm._raw(self.coeffs, 0)

    def norm(self) -> int:
        """Largest absolute value among the coefficients and the constant."""
        return max([abs(self.constant)] + [abs(a) for _, a in self.coeffs])

    def content(self) -> int:
        """gcd of all coefficients and the constant (0 for the zero term)."""
        g = abs(self.constant)
        for _, a in self.coeffs:
            g = gcd(g, a)
        return g

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, int):
            return LinearTerm._raw(self.coeffs, self.constant + other)
        if not other.coeffs:
            return LinearTerm._raw(self.coeffs, self.constant + other.constant)
        if not self.coeffs:
            return LinearTerm._raw(other.coeffs, self.constant + other.constant)
        acc = dict(self.coeffs)
        for v, a in other.coeffs:
            acc[v] = acc.get(v, 0) + a
        return LinearTerm._raw(tuple(sorted((v, a) for v, a in acc.items() if a)), self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self):
        return LinearTerm._raw(tuple((v, -a) for v, a in self.coeffs), -self.constant)

    def __sub__(self, other):
        return self + (-other if isinstance(other, LinearTerm) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k == 0:
            return ZERO
        return LinearTerm._raw(tuple((v, a * k) for v, a in self.coeffs), self.constant * k)

    __rmul__ = __mul__

    def without(self, v: str) -> "LinearTerm":
        """The term with the coefficient of ``v`` set to zero."""
        return LinearTerm._raw(tuple(p for p in self.coeffs if p[0] != v), self.constant)

    def evaluate(self, nu: Mapping[str, int]) -> int:
        total = self.constant
        for v, a in self.coeffs:
            total += a * nu[v]
        return total

    # -- identity ---------------------------------------------------------

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, LinearTerm):
            return NotImplemented
        return self.constant == other.constant and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.coeffs, self.constant))
        return self._hash

    def sort_key(self):
        return (self.coeffs, self.constant)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __repr__(self):
        return f"LinearTerm({self})"

    def __str__(self):
        parts = []
        for v, a in self.coeffs:
            if a == 1:
                parts.append(v)
            elif a == -1:
                parts.append(f"-{v}")
            else:
                parts.append(f"{a}{v}")
        if self.constant or not parts:
            parts.append(str(self.constant))
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out


ZERO = LinearTerm()


def term(*monomials, const: int = 0) -> LinearTerm:
    """Build a term from ``(coef, var)`` pairs, e.g. ``term((2, "y"), (-1, "x"), const=1)``."""
    return LinearTerm(((v, a) for a, v in monomials), const)
