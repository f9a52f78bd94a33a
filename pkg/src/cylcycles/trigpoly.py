"""Real trigonometric polynomials on the circle of length 2π.

A :class:`TrigPoly` stores ``a0 + sum_k cos_coeffs[k-1] cos(kt) + sin_coeffs[k-1] sin(kt)``.
Zeros in a period are isolated through the substitution ``z = exp(it)``,
which turns a degree-``m`` trigonometric polynomial into an algebraic
polynomial of degree ``2m`` whose unimodular roots are the zeros.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .config import TOL
from .errors import IdenticallyZero

TWO_PI = 2.0 * math.pi


def _trim(cos_coeffs: Sequence[float], sin_coeffs: Sequence[float], a0: float):
    c = [float(v) for v in cos_coeffs]
    s = [float(v) for v in sin_coeffs]
    if len(c) != len(s):
        width = max(len(c), len(s))
        c += [0.0] * (width - len(c))
        s += [0.0] * (width - len(s))
    norm = abs(a0) + sum(map(abs, c)) + sum(map(abs, s))
    cut = TOL.coeff_rel * norm
    m = len(c)
    while m > 0 and abs(c[m - 1]) <= cut and abs(s[m - 1]) <= cut:
        m -= 1
    return tuple(c[:m]), tuple(s[:m])


@dataclass(frozen=True, init=False)
class TrigPoly:
    """Immutable real trigonometric polynomial of period 2π."""

    a0: float
    cos_coeffs: tuple[float, ...]
    sin_coeffs: tuple[float, ...]

    def __init__(self, a0: float = 0.0, cos_coeffs: Sequence[float] = (), sin_coeffs: Sequence[float] = ()):
        c, s = _trim(cos_coeffs, sin_coeffs, float(a0))
        object.__setattr__(self, "a0", float(a0))
        object.__setattr__(self, "cos_coeffs", c)
        object.__setattr__(self, "sin_coeffs", s)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls(value)

    @classmethod
    def cos(cls, k: int, amplitude: float = 1.0) -> "TrigPoly":
        if k == 0:
            return cls(amplitude)
        c = [0.0] * k
        c[k - 1] = amplitude
        return cls(0.0, c, [0.0] * k)

    @classmethod
    def sin(cls, k: int, amplitude: float = 1.0) -> "TrigPoly":
        if k == 0:
            return cls(0.0)
        s = [0.0] * k
        s[k - 1] = amplitude
        return cls(0.0, [0.0] * k, s)

    # -- basic properties ---------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.cos_coeffs)

    m = degree

    @property
    def norm1(self) -> float:
        return abs(self.a0) + sum(map(abs, self.cos_coeffs)) + sum(map(abs, self.sin_coeffs))

    def is_zero(self) -> bool:
        return self.degree == 0 and self.a0 == 0.0

    # -- arithmetic ---------------------------------------------------------
    def _padded(self, m: int):
        pad = m - self.degree
        return (np.array(self.cos_coeffs + (0.0,) * pad), np.array(self.sin_coeffs + (0.0,) * pad))

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            return TrigPoly(self.a0 + float(other), self.cos_coeffs, self.sin_coeffs)
        m = max(self.degree, other.degree)
        c1, s1 = self._padded(m)
        c2, s2 = other._padded(m)
        return TrigPoly(self.a0 + other.a0, c1 + c2, s1 + s2)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(-self.a0, [-v for v in self.cos_coeffs], [-v for v in self.sin_coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if isinstance(scalar, TrigPoly):
            return NotImplemented
        k = float(scalar)
        return TrigPoly(self.a0 * k, [v * k for v in self.cos_coeffs], [v * k for v in self.sin_coeffs])

    __rmul__ = __mul__

    def allclose(self, other: "TrigPoly", atol: float) -> bool:
        m = max(self.degree, other.degree)
        c1, s1 = self._padded(m)
        c2, s2 = other._padded(m)
        return (
            abs(self.a0 - other.a0) <= atol
            and bool(np.all(np.abs(c1 - c2) <= atol))
            and bool(np.all(np.abs(s1 - s2) <= atol))
        )

    # -- evaluation ---------------------------------------------------------
    def __call__(self, t):
        return eval_trig(self, t)

    def derivative(self) -> "TrigPoly":
        k = np.arange(1, self.degree + 1)
        return TrigPoly(0.0, k * np.array(self.sin_coeffs), -k * np.array(self.cos_coeffs))

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {"a0": self.a0, "cos": list(self.cos_coeffs), "sin": list(self.sin_coeffs)}

    @classmethod
    def from_dict(cls, data) -> "TrigPoly":
        if isinstance(data, (int, float)):
            return cls(float(data))
        return cls(float(data.get("a0", 0.0)), data.get("cos", []), data.get("sin", []))


def eval_trig(p: TrigPoly, t):
    """Evaluate ``p`` at a scalar or array of times."""
    if np.ndim(t) == 0:
        t = float(t)
        total = p.a0
        for k, (ck, sk) in enumerate(zip(p.cos_coeffs, p.sin_coeffs), start=1):
            kt = k * t
            total += ck * math.cos(kt) + sk * math.sin(kt)
        return total
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, p.a0)
    for k, (ck, sk) in enumerate(zip(p.cos_coeffs, p.sin_coeffs), start=1):
        kt = k * t
        if ck:
            out += ck * np.cos(kt)
        if sk:
            out += sk * np.sin(kt)
    return out


@dataclass(frozen=True)
class Antiderivative:
    """``value(t) = linear_coeff * t + periodic_part(t)`` with ``value(0) = 0``."""

    linear_coeff: float
    periodic_part: TrigPoly

    def __call__(self, t):
        return self.linear_coeff * t + eval_trig(self.periodic_part, t)

    value = __call__


def antiderivative(p: TrigPoly) -> Antiderivative:
    """Primitive of ``p`` vanishing at ``t = 0``."""
    k = np.arange(1, p.degree + 1, dtype=float)
    cos_c = np.array(p.cos_coeffs)
    sin_c = np.array(p.sin_coeffs)
    # ∫ c cos ks = c sin(kt)/k ; ∫ s sin ks = s (1 - cos kt)/k
    periodic = TrigPoly(float(np.sum(sin_c / k)) if p.degree else 0.0, -sin_c / k, cos_c / k)
    return Antiderivative(p.a0, periodic)


class TrigZero(NamedTuple):
    t: float
    simple: bool


def _laurent_roots(p: TrigPoly) -> np.ndarray:
    """Roots of ``z**m * p`` written as a polynomial in ``z = exp(it)``."""
    m = p.degree
    c = np.array(p.cos_coeffs)
    s = np.array(p.sin_coeffs)
    coeffs = np.zeros(2 * m + 1, dtype=complex)
    coeffs[m] = p.a0
    # cos kt = (z^k + z^-k)/2, sin kt = (z^k - z^-k)/(2i)
    coeffs[m + 1 :] = (c - 1j * s) / 2.0
    coeffs[m - 1 :: -1] = (c + 1j * s) / 2.0
    return np.roots(coeffs[::-1])


def _wrap(t: float) -> float:
    t = math.fmod(t, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if TWO_PI - t < 1e-14:
        t = 0.0
    return t


def _newton(f, df, t: float, steps: int = 8) -> float:
    for _ in range(steps):
        d = df(t)
        if d == 0.0:
            break
        step = f(t) / d
        if not math.isfinite(step) or abs(step) > 1e-2:
            break
        t -= step
        if abs(step) < 1e-16:
            break
    return t


def isolate_zeros(p: TrigPoly) -> list[TrigZero]:
    """Zeros of ``p`` in ``[0, 2π)`` with a simple/multiple annotation.

    Raises
    ------
    IdenticallyZero
        If every coefficient of ``p`` vanishes.
    """
    if p.is_zero():
        raise IdenticallyZero("trigonometric polynomial is identically zero")
    if p.degree == 0:
        return []
    dp = p.derivative()
    ddp = dp.derivative()
    tol = TOL.zero_residual * (1.0 + p.norm1)
    w = TOL.multiple_window

    roots = _laurent_roots(p)
    near = roots[np.abs(np.abs(roots) - 1.0) <= TOL.unit_circle_candidate]
    found: list[list] = []  # [t, simple, hits]
    for z in near:
        t = _wrap(float(np.angle(z)))
        t = _newton(p, dp, t)
        lo, hi = t - w, t + w
        flo, fhi = eval_trig(p, lo), eval_trig(p, hi)
        if flo == 0.0 or fhi == 0.0 or (flo < 0.0) != (fhi < 0.0):
            if flo == 0.0:
                t = lo
            elif fhi == 0.0:
                t = hi
            else:
                t = brentq(p, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
            simple = True
        else:
            # even multiplicity: the zero sits at a critical point
            t = _newton(dp, ddp, t)
            simple = False
        if abs(eval_trig(p, t)) > tol:
            continue
        t = _wrap(t)
        for entry in found:
            gap = abs(entry[0] - t)
            if min(gap, TWO_PI - gap) < 1e-7:
                entry[2] += 1
                entry[1] = entry[1] and simple
                break
        else:
            found.append([t, simple, 1])

    zeros = [TrigZero(t, simple and hits == 1) for t, simple, hits in found]
    zeros.sort(key=lambda z: z.t)
    return zeros


def zeros_in_period(p: TrigPoly) -> list[float]:
    """Sorted zeros of ``p`` in ``[0, 2π)``; see :func:`isolate_zeros`."""
    return [z.t for z in isolate_zeros(p)]
