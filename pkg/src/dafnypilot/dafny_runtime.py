"""Minimal target-language runtime for compiled programs.

This file is copied verbatim into every compiled output directory as
`_dafny.py`; it must stay dependency-free and self-contained. The classes
intentionally do not compare equal to native Python values: a runtime
sequence is not a list and a rational is not a float, which is exactly the
interoperability gap the delivery shims bridge.
"""

from __future__ import annotations

from fractions import Fraction


class CodePoint:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = str(value)

    def __eq__(self, other):
        return isinstance(other, CodePoint) and self.value == other.value

    def __hash__(self):
        return hash(("CodePoint", self.value))

    def __repr__(self):
        return f"_dafny.CodePoint({self.value!r})"


class Seq:
    __slots__ = ("elements",)

    def __init__(self, elements=()):
        self.elements = tuple(elements)

    def __eq__(self, other):
        return isinstance(other, Seq) and self.elements == other.elements

    def __hash__(self):
        return hash(("Seq", self.elements))

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Seq(self.elements[index])
        return self.elements[index]

    def __iter__(self):
        return iter(self.elements)

    def __add__(self, other):
        if not isinstance(other, Seq):
            return NotImplemented
        return Seq(self.elements + other.elements)

    def is_string(self):
        return len(self.elements) > 0 and all(isinstance(e, CodePoint) for e in self.elements)

    def __repr__(self):
        return f"_dafny.Seq({list(self.elements)!r})"


def SeqWithoutIsStrInference(elements):
    return Seq(elements)


class BigRational:
    __slots__ = ("value",)

    def __init__(self, numerator=0, denominator=None):
        if isinstance(numerator, BigRational):
            self.value = numerator.value
        elif isinstance(numerator, str):
            # accepts both '3.14' and the mantissa-exponent form '314e-2'
            self.value = Fraction(numerator.replace("e", "E"))
        elif denominator is not None:
            self.value = Fraction(numerator, denominator)
        else:
            self.value = Fraction(numerator)

    def _coerce(self, other):
        if isinstance(other, BigRational):
            return other.value
        if isinstance(other, int):
            return Fraction(other)
        return None

    def __eq__(self, other):
        coerced = self._coerce(other)
        return coerced is not None and self.value == coerced

    def __hash__(self):
        return hash(("BigRational", self.value))

    def __lt__(self, other):
        return self.value < self._coerce(other)

    def __le__(self, other):
        return self.value <= self._coerce(other)

    def __gt__(self, other):
        return self.value > self._coerce(other)

    def __ge__(self, other):
        return self.value >= self._coerce(other)

    def __add__(self, other):
        return BigRational(self.value + self._coerce(other))

    def __sub__(self, other):
        return BigRational(self.value - self._coerce(other))

    def __mul__(self, other):
        return BigRational(self.value * self._coerce(other))

    def __truediv__(self, other):
        return BigRational(self.value / self._coerce(other))

    def __neg__(self):
        return BigRational(-self.value)

    def as_float(self):
        return self.value.numerator / self.value.denominator

    def __repr__(self):
        return f"_dafny.BigRational('{self.value.numerator}e0')" if self.value.denominator == 1 else f"_dafny.BigRational('{self.value}')"


class DatatypeValue:
    """Base for compiled datatype constructor classes."""

    _dt = ""
    _ctor = ""
    _arity = 0

    def __init__(self, *fields):
        if len(fields) != self._arity:
            raise TypeError(f"{self._ctor} expects {self._arity} fields")
        self.fields = tuple(fields)

    def __eq__(self, other):
        return (
            isinstance(other, DatatypeValue)
            and self._dt == other._dt
            and self._ctor == other._ctor
            and self.fields == other.fields
        )

    def __hash__(self):
        return hash((self._dt, self._ctor, self.fields))

    def __repr__(self):
        if not self.fields:
            return f"{self._dt}.{self._ctor}"
        return f"{self._dt}.{self._ctor}({', '.join(map(repr, self.fields))})"


def datatype_ctor(dt, ctor, arity):
    """Constructor class factory matching the compiled naming scheme."""
    return type(f"{dt}_{ctor}", (DatatypeValue,), {"_dt": dt, "_ctor": ctor, "_arity": arity})


def euclidian_division(a, b):
    q = a // b
    if a - q * b < 0:
        q += 1
    return q


def euclidian_modulus(a, b):
    r = a % b
    if r < 0:
        r -= b if b < 0 else -b
    return r


def string_of(text):
    """Native str to runtime string (sequence of code points)."""
    return Seq([CodePoint(c) for c in text])
