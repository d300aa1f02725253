"""Truncated Taylor series (jet) arithmetic around t = 0.

A Jet of order N stores the coefficients c_0..c_N of f(t) = sum c_n t^n,
i.e. c_n = f^(n)(0) / n!. BiJet is the bivariate analogue on an
(N+1) x (N+1) grid with c_{l,m} = d_t^l d_u^m f(0,0) / (l! m!).
All operations truncate at the stored order; results are exact rational
functions of the inputs, so they do not depend on association order
beyond float roundoff.

The module also expands the large-system trace functional delta(t),
defined implicitly by

    delta(t) = (M/K) / (1 + (t/K) sum_i a_i / (1 + t delta(t) a_i)),
    a_i = q_bar_i beta_i,

order by order: since every occurrence of delta on the right-hand side is
multiplied by t, one substitution pass fixes one further coefficient, so
order+1 passes produce the exact truncated expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Jet", "BiJet", "DeltaExpansion", "jet_add", "jet_mul", "jet_reciprocal",
    "jet_sqrt", "expand_delta",
]


class Jet:
    """Univariate truncated Taylor series; immutable by convention."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = np.array(coeffs, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("Jet needs a non-empty 1-D coefficient array")

    @classmethod
    def constant(cls, value, order):
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, order):
        """The jet of f(t) = t."""
        c = np.zeros(order + 1)
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self):
        return self.coeffs.size - 1

    def __add__(self, other):
        if isinstance(other, Jet):
            _check_order(self, other)
            return Jet(self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] += other
        return Jet(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            _check_order(self, other)
            n = self.order
            return Jet(np.convolve(self.coeffs, other.coeffs)[: n + 1])
        return Jet(self.coeffs * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Jet(-self.coeffs)

    def reciprocal(self):
        """Jet of 1/f. Requires a nonzero constant term."""
        a = self.coeffs
        if a[0] == 0.0:
            raise ZeroDivisionError("jet reciprocal needs a nonzero constant term")
        n = self.order
        b = np.zeros(n + 1)
        b[0] = 1.0 / a[0]
        for m in range(1, n + 1):
            b[m] = -np.dot(a[1 : m + 1], b[m - 1 :: -1]) / a[0]
        return Jet(b)

    def sqrt(self):
        """Jet of sqrt(f). Requires a positive constant term."""
        a = self.coeffs
        if a[0] <= 0.0:
            raise ValueError("jet sqrt needs a positive constant term")
        n = self.order
        s = np.zeros(n + 1)
        s[0] = np.sqrt(a[0])
        for m in range(1, n + 1):
            conv = np.dot(s[1:m], s[m - 1 : 0 : -1]) if m >= 2 else 0.0
            s[m] = (a[m] - conv) / (2.0 * s[0])
        return Jet(s)

    def shift(self):
        """Jet of t * f(t) at the same truncation order."""
        c = np.zeros_like(self.coeffs)
        c[1:] = self.coeffs[:-1]
        return Jet(c)

    def truncate(self, order):
        """Drop coefficients above `order` (order must not exceed self.order)."""
        if order > self.order:
            raise ValueError("cannot extend a jet by truncation")
        return Jet(self.coeffs[: order + 1])

    def derivative(self, n):
        """n-th derivative at 0, i.e. n! * c_n."""
        if n > self.order:
            raise ValueError(f"jet of order {self.order} has no order-{n} derivative")
        return float(self.coeffs[n]) * math.factorial(n)

    def __call__(self, t):
        """Evaluate the truncated polynomial at t (Horner)."""
        acc = 0.0
        for c in self.coeffs[::-1]:
            acc = acc * t + c
        return acc

    def __repr__(self):
        return f"Jet({self.coeffs!r})"


def _check_order(a, b):
    if a.order != b.order:
        raise ValueError(f"jet order mismatch: {a.order} vs {b.order}")


def jet_add(a: Jet, b: Jet) -> Jet:
    return a + b


def jet_mul(a: Jet, b: Jet) -> Jet:
    return a * b


def jet_reciprocal(a: Jet) -> Jet:
    return a.reciprocal()


def jet_sqrt(a: Jet) -> Jet:
    return a.sqrt()


class BiJet:
    """Bivariate truncated Taylor series on a square coefficient grid."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = np.array(coeffs, dtype=float)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != self.coeffs.shape[1]:
            raise ValueError("BiJet needs a square 2-D coefficient grid")

    @classmethod
    def constant(cls, value, order):
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = value
        return cls(c)

    @classmethod
    def outer(cls, f: Jet, g: Jet):
        """The bivariate jet of f(t) * g(u)."""
        _check_order(f, g)
        return cls(np.outer(f.coeffs, g.coeffs))

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    def __add__(self, other):
        if isinstance(other, BiJet):
            if other.order != self.order:
                raise ValueError("bijet order mismatch")
            return BiJet(self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0, 0] += other
        return BiJet(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, other):
        if isinstance(other, BiJet):
            if other.order != self.order:
                raise ValueError("bijet order mismatch")
            n = self.order
            a, b = self.coeffs, other.coeffs
            out = np.zeros((n + 1, n + 1))
            for l in range(n + 1):
                for m in range(n + 1):
                    out[l:, m:] += a[l, m] * b[: n + 1 - l, : n + 1 - m]
            return BiJet(out)
        return BiJet(self.coeffs * other)

    __rmul__ = __mul__

    def __neg__(self):
        return BiJet(-self.coeffs)

    def reciprocal(self):
        """Bivariate reciprocal by recursion over total degree."""
        a = self.coeffs
        if a[0, 0] == 0.0:
            raise ZeroDivisionError("bijet reciprocal needs a nonzero constant term")
        n = self.order
        b = np.zeros_like(a)
        b[0, 0] = 1.0 / a[0, 0]
        for s in range(1, 2 * n + 1):
            for l in range(max(0, s - n), min(s, n) + 1):
                m = s - l
                acc = 0.0
                for i in range(l + 1):
                    for j in range(m + 1):
                        if i == 0 and j == 0:
                            continue
                        acc += a[i, j] * b[l - i, m - j]
                b[l, m] = -acc / a[0, 0]
        return BiJet(b)

    def mixed_derivative(self, l, m):
        """d_t^l d_u^m at (0,0), i.e. l! m! c_{l,m}."""
        return float(self.coeffs[l, m]) * math.factorial(l) * math.factorial(m)

    def __call__(self, t, u):
        tv = t ** np.arange(self.order + 1)
        uv = u ** np.arange(self.order + 1)
        return float(tv @ self.coeffs @ uv)

    def __repr__(self):
        return f"BiJet({self.coeffs!r})"


@dataclass(frozen=True)
class DeltaExpansion:
    """Truncated expansion of delta(t) for given loading a_i = q_bar_i beta_i."""

    delta: Jet
    a: np.ndarray  # q_bar * beta
    M: int
    K: int

    def g_jets(self, order=None):
        """Per-user jets g_i(t) = 1 / (1 + t delta(t) a_i)."""
        delta = self.delta if order is None else self.delta.truncate(order)
        td = delta.shift()
        return [(1.0 + td * float(ai)).reciprocal() for ai in self.a]

    def residual(self) -> np.ndarray:
        """Coefficients of delta*(1 + (t/K) sum_i a_i g_i) - M/K; ~0 when exact."""
        g = self.g_jets()
        s = Jet.constant(0.0, self.delta.order)
        for ai, gi in zip(self.a, g):
            s = s + float(ai) * gi
        lhs = self.delta * (1.0 + s.shift() * (1.0 / self.K))
        return lhs.coeffs - np.concatenate(([self.M / self.K], np.zeros(self.delta.order)))


def expand_delta(q_bar, beta, M, K, order) -> DeltaExpansion:
    """Expand delta(t) to the given truncation order.

    Substitution pass: delta <- (M/K) / (1 + (t/K) sum_i a_i g_i(delta)).
    Each pass fixes at least one more coefficient because delta enters the
    right-hand side only through t*delta, so order+1 passes suffice.
    """
    a = np.asarray(q_bar, dtype=float) * np.asarray(beta, dtype=float)
    if a.ndim != 1:
        raise ValueError("q_bar and beta must be 1-D")
    delta = Jet.constant(M / K, order)
    for _ in range(order + 1):
        td = delta.shift()
        s = Jet.constant(0.0, order)
        for ai in a:
            s = s + float(ai) * (1.0 + td * float(ai)).reciprocal()
        delta = (M / K) * (1.0 + s.shift() * (1.0 / K)).reciprocal()
    return DeltaExpansion(delta=delta, a=a, M=M, K=K)
