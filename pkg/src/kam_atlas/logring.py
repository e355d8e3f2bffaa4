"""Exact arithmetic in the ring of functions z^h sum_j u_j(z) log^j z.

Elements carry an integer leading exponent h and polynomial coefficients
u_0, ..., u_l with rational entries.  The module also expands the composite
differential operators built from L = z d/dz,

    op(m, k)  =  L^k (d/dz . L^k)^m,
    op(n)     =  L^{3(n-1)} (d/dz . L^{3(n-1)})^{n-1},

into sums a_j(z) d^j/dz^j with exact polynomial coefficients, and extracts
the constant produced when op(m, k) acts on z^m log^k z, namely
(m!)^{k+1} k!.

Canonical text grammar (used for golden-file comparisons):

    polynomial  :=  term (" + " | " - ") term ...      descending powers
    term        :=  [coeff "*"] ("z" ["^" power])      coeff a Fraction
    element     :=  ["z^h * "] "(" poly ")" [" + (" poly ")*log(z)[^j]" ...]
    operator    :=  "(a_j)*D^j" terms joined by " + ", descending j
                    (parentheses dropped when a_j is a single monomial)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = [
    "RingCapError",
    "LogElement",
    "DiffOperator",
    "expand_operator",
    "leading_constant",
    "operator_order",
    "MAX_POLY_DEGREE",
    "MAX_LOG_POWER",
]

MAX_POLY_DEGREE = 64
MAX_LOG_POWER = 32


class RingCapError(OverflowError):
    """Raised when a computation exceeds the configured degree caps."""


# ---------------------------------------------------------------------------
# Dense rational polynomials in z (ascending coefficient tuples)
# ---------------------------------------------------------------------------

Poly = tuple[Fraction, ...]

_ZERO_POLY: Poly = ()


def _p_trim(c: Sequence[Fraction]) -> Poly:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    if len(c) - 1 > MAX_POLY_DEGREE:
        raise RingCapError(f"polynomial degree exceeds {MAX_POLY_DEGREE}")
    return tuple(c)


def _p_add(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, v in enumerate(b):
        out[i] += v
    return _p_trim(out)


def _p_scale(a: Poly, s: Fraction) -> Poly:
    if s == 0:
        return _ZERO_POLY
    return _p_trim([s * v for v in a])


def _p_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return _ZERO_POLY
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, va in enumerate(a):
        if va:
            for j, vb in enumerate(b):
                out[i + j] += va * vb
    return _p_trim(out)


def _p_shift(a: Poly, m: int) -> Poly:
    """Multiply by z^m (m >= 0)."""
    if not a or m == 0:
        return _p_trim(a)
    return _p_trim([Fraction(0)] * m + list(a))


def _p_deriv(a: Poly) -> Poly:
    return _p_trim([i * v for i, v in enumerate(a)][1:])


def _p_eval(a: Poly, z: float) -> float:
    out = 0.0
    for v in reversed(a):
        out = out * z + float(v)
    return out


def _p_str(a: Poly) -> str:
    if not a:
        return "0"
    parts = []
    for i in range(len(a) - 1, -1, -1):
        v = a[i]
        if v == 0:
            continue
        sign = " + " if v > 0 else " - "
        mag = abs(v)
        if i == 0:
            body = str(mag)
        else:
            zpow = "z" if i == 1 else f"z^{i}"
            body = zpow if mag == 1 else f"{mag}*{zpow}"
        parts.append((sign, body))
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == " - " else "") + first_body
    for sign, body in parts[1:]:
        out += sign + body
    return out


# ---------------------------------------------------------------------------
# Ring elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogElement:
    """z^h (u_0(z) + u_1(z) log z + ... + u_l(z) log^l z), exact rationals.

    Canonical: the top log coefficient u_l is nonzero (or l = 0 for the zero
    element), and at least one u_j has a nonzero constant term, so that h is
    the true leading z-exponent.
    """

    h: int = 0
    logs: tuple[Poly, ...] = (_ZERO_POLY,)

    def __post_init__(self):
        h = int(self.h)
        logs = [_p_trim(p) for p in self.logs]
        while len(logs) > 1 and not logs[-1]:
            logs.pop()
        if len(logs) - 1 > MAX_LOG_POWER:
            raise RingCapError(f"log power exceeds {MAX_LOG_POWER}")
        if all(not p for p in logs):
            h, logs = 0, [_ZERO_POLY]
        else:
            while all((not p) or p[0] == 0 for p in logs):
                logs = [p[1:] if p else p for p in logs]
                h += 1
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "logs", tuple(logs))

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls) -> "LogElement":
        return cls(0, (_ZERO_POLY,))

    @classmethod
    def monomial(cls, m: int, k: int = 0, coeff=1) -> "LogElement":
        """coeff * z^m log^k z."""
        if k < 0:
            raise ValueError("log power must be >= 0")
        logs = [_ZERO_POLY] * k + [(Fraction(coeff),)]
        return cls(m, tuple(logs))

    # -- structure -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return all(not p for p in self.logs)

    @property
    def log_order(self) -> int:
        return len(self.logs) - 1

    def order(self) -> tuple[int, int]:
        """(h, l): leading z-exponent and top log power."""
        return self.h, self.log_order

    def constant_term(self) -> Fraction:
        """Coefficient of z^0 log^0 (zero when the element vanishes at 0)."""
        if self.is_zero or self.h > 0:
            return Fraction(0)
        if self.h < 0:
            raise ValueError("element is singular at z = 0")
        u0 = self.logs[0]
        return u0[0] if u0 else Fraction(0)

    # -- ring operations -----------------------------------------------------

    def __add__(self, other: "LogElement") -> "LogElement":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        h = min(self.h, other.h)
        la = [_p_shift(p, self.h - h) for p in self.logs]
        lb = [_p_shift(p, other.h - h) for p in other.logs]
        ell = max(len(la), len(lb))
        la += [_ZERO_POLY] * (ell - len(la))
        lb += [_ZERO_POLY] * (ell - len(lb))
        return LogElement(h, tuple(_p_add(a, b) for a, b in zip(la, lb)))

    def __neg__(self) -> "LogElement":
        return LogElement(self.h, tuple(_p_scale(p, Fraction(-1)) for p in self.logs))

    def __sub__(self, other: "LogElement") -> "LogElement":
        return self + (-other)

    def __mul__(self, other: "LogElement") -> "LogElement":
        if self.is_zero or other.is_zero:
            return LogElement.zero()
        ell = self.log_order + other.log_order
        out = [_ZERO_POLY] * (ell + 1)
        for i, a in enumerate(self.logs):
            if not a:
                continue
            for j, b in enumerate(other.logs):
                if not b:
                    continue
                out[i + j] = _p_add(out[i + j], _p_mul(a, b))
        return LogElement(self.h + other.h, tuple(out))

    def scale(self, s) -> "LogElement":
        return LogElement(self.h, tuple(_p_scale(p, Fraction(s)) for p in self.logs))

    def poly_mul(self, p: Poly) -> "LogElement":
        return LogElement(self.h, tuple(_p_mul(u, p) for u in self.logs))

    def derivative(self) -> "LogElement":
        """d/dz, using d(z^h log^j z) = z^{h-1}(h log^j z + j log^{j-1} z)."""
        if self.is_zero:
            return LogElement.zero()
        ell = self.log_order
        out = [_ZERO_POLY] * (ell + 1)
        for j in range(ell + 1):
            u = self.logs[j]
            term = _p_add(_p_scale(u, Fraction(self.h)), _p_shift(_p_deriv(u), 1))
            if j + 1 <= ell:
                term = _p_add(term, _p_scale(self.logs[j + 1], Fraction(j + 1)))
            out[j] = term
        return LogElement(self.h - 1, tuple(out))

    def zdz(self) -> "LogElement":
        """The Euler operator L = z d/dz applied to the element."""
        d = self.derivative()
        return LogElement(d.h + 1, d.logs)

    # -- evaluation and printing ---------------------------------------------

    def eval(self, z: float) -> float:
        if self.is_zero:
            return 0.0
        if z <= 0:
            raise ValueError("evaluation requires z > 0")
        lg = math.log(z)
        total = 0.0
        for j, p in enumerate(self.logs):
            total += _p_eval(p, z) * lg ** j
        return total * z ** self.h

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for j, p in enumerate(self.logs):
            if not p:
                continue
            body = f"({_p_str(p)})"
            if j == 1:
                body += "*log(z)"
            elif j > 1:
                body += f"*log(z)^{j}"
            parts.append(body)
        core = " + ".join(parts)
        if self.h == 0:
            return core
        return f"z^{self.h} * " + core


# ---------------------------------------------------------------------------
# Differential operators with polynomial coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiffOperator:
    """sum_j a_j(z) d^j/dz^j with exact polynomial coefficients a_j."""

    terms: tuple[tuple[int, Poly], ...]   # sorted by derivative order j

    @classmethod
    def from_dict(cls, d: dict[int, Poly]) -> "DiffOperator":
        items = [(j, _p_trim(p)) for j, p in sorted(d.items()) if _p_trim(p)]
        return cls(tuple(items))

    @classmethod
    def identity(cls) -> "DiffOperator":
        return cls.from_dict({0: (Fraction(1),)})

    @classmethod
    def d_dz(cls) -> "DiffOperator":
        return cls.from_dict({1: (Fraction(1),)})

    @classmethod
    def euler(cls) -> "DiffOperator":
        """L = z d/dz."""
        return cls.from_dict({1: (Fraction(0), Fraction(1))})

    @property
    def order(self) -> int:
        return max((j for j, _ in self.terms), default=0)

    @property
    def lowest_order(self) -> int:
        return min((j for j, _ in self.terms), default=0)

    def coefficient(self, j: int) -> Poly:
        for jj, p in self.terms:
            if jj == j:
                return p
        return _ZERO_POLY

    def compose(self, other: "DiffOperator") -> "DiffOperator":
        """self . other (other acts first).

        Uses d^i (b(z) g) = sum_t C(i, t) b^{(t)}(z) d^{i-t} g to push
        derivatives past the inner coefficients.
        """
        acc: dict[int, Poly] = {}
        for i, a in self.terms:
            for j, b in other.terms:
                bt = b
                for t in range(i + 1):
                    if bt:
                        c = _p_mul(a, _p_scale(bt, Fraction(math.comb(i, t))))
                        key = i - t + j
                        acc[key] = _p_add(acc.get(key, _ZERO_POLY), c)
                    bt = _p_deriv(bt)
        return DiffOperator.from_dict(acc)

    def power(self, m: int) -> "DiffOperator":
        out = DiffOperator.identity()
        for _ in range(m):
            out = out.compose(self)
        return out

    def apply(self, f: LogElement) -> LogElement:
        out = LogElement.zero()
        for j, a in self.terms:
            g = f
            for _ in range(j):
                g = g.derivative()
            out = out + g.poly_mul(a)
        return out

    def apply_numeric(self, derivs, z: float) -> float:
        """Evaluate sum_j a_j(z) f^{(j)}(z) given a callable j -> f^{(j)}(z)."""
        return sum(_p_eval(a, z) * derivs(j) for j, a in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for j, a in sorted(self.terms, key=lambda t: -t[0]):
            coeff = _p_str(a)
            if len([v for v in a if v]) > 1:
                coeff = f"({coeff})"
            dpow = "D" if j == 1 else f"D^{j}" if j > 1 else ""
            parts.append(f"{coeff}*{dpow}" if dpow else coeff)
        return " + ".join(parts)


def _nested_operator(m: int, k: int) -> DiffOperator:
    """L^k (d/dz . L^k)^m, the operator that extracts (m!)^{k+1} k!."""
    if m < 0 or k < 0:
        raise ValueError("orders must be nonnegative")
    Lk = DiffOperator.euler().power(k)
    inner = DiffOperator.d_dz().compose(Lk)
    return Lk.compose(inner.power(m))


def operator_order(n: int) -> int:
    """Order 3 nbar^2 + 4 nbar = 3 n^2 - 2n - 1 of the dimension-n operator."""
    nbar = n - 1
    return 3 * nbar * nbar + 4 * nbar


def expand_operator(n: int) -> DiffOperator:
    """Expand L^{3(n-1)} (d/dz . L^{3(n-1)})^{n-1} for dimension n >= 2.

    The order grows like 3 n^2, so n is expected to stay small; the degree
    caps raise RingCapError otherwise.
    """
    if n < 2:
        raise ValueError("dimension must be >= 2")
    nbar = n - 1
    op = _nested_operator(nbar, 3 * nbar)
    assert op.order == operator_order(n)
    return op


def leading_constant(m: int, k: int) -> tuple[Fraction, LogElement]:
    """Apply L^k (d/dz L^k)^m to z^m log^k z symbolically.

    Returns the z-free, log-free constant (exactly (m!)^{k+1} k!) and the
    residual element, which vanishes as z -> 0+.
    """
    op = _nested_operator(m, k)
    result = op.apply(LogElement.monomial(m, k))
    const = result.constant_term()
    residual = result - LogElement.monomial(0, 0, const)
    if not residual.is_zero and residual.h < 1:
        raise AssertionError("residual does not vanish at z = 0")
    return const, residual
