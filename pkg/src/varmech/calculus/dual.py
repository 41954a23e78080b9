"""Forward-mode dual numbers.

A :class:`Dual` carries a value and a tangent.  Both slots are generic: the
value may be a float, an ndarray of samples, or another ``Dual`` (nesting
gives second derivatives), and the tangent may be a scalar or an array with
a leading direction axis, so one pass yields a full gradient.

The elementary functions below (``sin``, ``cos``, ...) dispatch on their
argument and fall back to numpy for plain numbers and arrays, so the same
compiled expression runs on floats, arrays and duals alike.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Dual", "sin", "cos", "exp", "sqrt", "log", "power", "value_of", "tangent_of"]


class Dual:
    __slots__ = ("val", "eps")
    # make ndarray (op) Dual defer to the reflected Dual method
    __array_ufunc__ = None

    def __init__(self, val, eps):
        self.val = val
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.val!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        return Dual(self.val + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.eps - other.eps)
        return Dual(self.val - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.eps)

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.val * other.eps + self.eps * other.val)
        return Dual(self.val * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.val / other.val
            return Dual(q, (self.eps - q * other.eps) / other.val)
        return Dual(self.val / other, self.eps / other)

    def __rtruediv__(self, other):
        q = other / self.val
        return Dual(q, -q * self.eps / self.val)

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)


def value_of(x):
    """Strip every level of dual tangent."""
    while isinstance(x, Dual):
        x = x.val
    return x


def tangent_of(x, like):
    """Tangent of ``x``; zero shaped like ``like`` when ``x`` is constant."""
    if isinstance(x, Dual):
        return x.eps
    return np.zeros_like(like)


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.val), cos(x.val) * x.eps)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.val), -sin(x.val) * x.eps)
    return np.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.val)
        return Dual(e, e * x.eps)
    return np.exp(x)


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.val)
        return Dual(r, x.eps / (2.0 * r))
    return np.sqrt(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.val), x.eps / x.val)
    return np.log(x)


def power(base, expo):
    """``base ** expo`` for any mix of numbers, arrays and duals."""
    if isinstance(expo, Dual):
        if isinstance(base, Dual):
            return exp(expo * log(base))
        r = power(base, expo.val)
        return Dual(r, r * log(base) * expo.eps)
    if isinstance(base, Dual):
        # constant exponent: valid for negative bases with integral exponents
        if np.ndim(expo) == 0 and expo == 0:
            return Dual(power(base.val, 0.0), 0.0 * base.eps)
        return Dual(power(base.val, expo), expo * power(base.val, expo - 1.0) * base.eps)
    return np.power(np.asarray(base, dtype=float), expo)
