"""Exact integer evaluation of fewnomial-type solution counts and cycle bounds.

Everything here stays in Python integers; no floating point is involved, so
recomputation is bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ArgumentMismatch

KHOVANSKII = "khovanskii"
GENERAL = "general"
TWO_REGION = "two_region"


def _nat(name: str, value, minimum: int = 0) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ArgumentMismatch(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ArgumentMismatch(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class PfaffianProfile:
    """Order ``r`` of the chain and degree ``(alpha, betas)`` of the functions."""

    order_r: int
    alpha: int
    betas: tuple[int, ...] = (1,)

    def __post_init__(self):
        object.__setattr__(self, "order_r", _nat("order_r", self.order_r, 0))
        object.__setattr__(self, "alpha", _nat("alpha", self.alpha, 1))
        betas = tuple(_nat("beta", b, 1) for b in self.betas)
        if not betas:
            raise ArgumentMismatch("betas must be non-empty")
        object.__setattr__(self, "betas", betas)

    def to_dict(self) -> dict:
        return {"order_r": self.order_r, "alpha": self.alpha, "betas": list(self.betas)}


def khovanskii_count(n_vars: int, r: int, alpha: int, betas: Sequence[int]) -> int:
    """``2^{r(r-1)/2} prod(betas) (min(n, r) alpha + sum(betas) - n + 1)^r``.

    Upper bound on the number of non-degenerate solutions of ``n_vars``
    Pfaffian equations with a common chain of order ``r``.
    """
    n = _nat("n_vars", n_vars, 1)
    r = _nat("r", r, 0)
    alpha = _nat("alpha", alpha, 1)
    betas = [_nat("beta", b, 1) for b in betas]
    if len(betas) != n:
        raise ArgumentMismatch(f"expected {n} betas, got {len(betas)}")
    base = min(n, r) * alpha + sum(betas) - n + 1
    return 2 ** (r * (r - 1) // 2) * math.prod(betas) * base**r


def _factor_small(n: int) -> dict[int, int]:
    """Prime factorisation by trial division (arguments here are small)."""
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _render(parts: dict[int, int], offset: int) -> str:
    if not parts:
        body = "1"
    else:
        body = " * ".join(f"{p}^{e}" if e > 1 else str(p) for p, e in sorted(parts.items()))
    return f"{body} + {offset}" if offset else body


@dataclass(frozen=True)
class BoundReport:
    value: int
    formula: str
    profile: PfaffianProfile
    inputs: dict = field(default_factory=dict)
    factors: tuple[tuple[int, int], ...] = ()
    offset: int = 0

    @property
    def factored(self) -> str:
        return _render(dict(self.factors), self.offset)

    def to_dict(self) -> dict:
        return {
            "value": str(self.value),
            "factored": self.factored,
            "formula": self.formula,
            "profile": self.profile.to_dict(),
            "inputs": dict(self.inputs),
        }


def _merge(*factorizations: dict[int, int]) -> tuple[tuple[int, int], ...]:
    total: dict[int, int] = {}
    for f in factorizations:
        for p, e in f.items():
            total[p] = total.get(p, 0) + e
    return tuple(sorted(total.items()))


def _power(base: int, exp: int) -> dict[int, int]:
    return {p: e * exp for p, e in _factor_small(base).items()} if exp else {}


def pfaffian_profile_single(m: int) -> PfaffianProfile:
    """Profile of one transition identity whose coefficients have degree ``m``."""
    m = _nat("m", m, 0)
    return PfaffianProfile(4, 3 * m + 1, (1,))


def pfaffian_combine(p1: PfaffianProfile, p2: PfaffianProfile, op: str, shared_chain: bool = False) -> PfaffianProfile:
    """Profile of ``f1 + f2`` (``op='sum'``) or ``f1 * f2`` (``op='product'``)."""
    if len(p1.betas) != 1 or len(p2.betas) != 1:
        raise ArgumentMismatch("pfaffian_combine expects single-beta profiles")
    if shared_chain:
        if p1.order_r != p2.order_r:
            raise ArgumentMismatch("a shared chain requires equal orders")
        r = p1.order_r
    else:
        r = p1.order_r + p2.order_r
    alpha = max(p1.alpha, p2.alpha)
    if op == "sum":
        beta = max(p1.betas[0], p2.betas[0])
    elif op == "product":
        beta = p1.betas[0] + p2.betas[0]
    else:
        raise ArgumentMismatch(f"op must be 'sum' or 'product', got {op!r}")
    return PfaffianProfile(r, alpha, (beta,))


def crossing_system_profile(k: int, degree: int, n: int | None = None, M: int | None = None) -> PfaffianProfile:
    """Profile of a ``k``-equation crossing-time system with coefficient degree ``degree``.

    Each unknown time contributes four chain functions, so ``r = 4k``. When
    ``n`` and ``M`` are given the builder checks ``r <= 8Mn``.
    """
    k = _nat("k", k, 1)
    r = 4 * k
    if n is not None and M is not None and r > 8 * M * n:
        raise ArgumentMismatch(f"k={k} crossings exceeds 2Mn={2 * M * n}")
    return PfaffianProfile(r, 3 * _nat("degree", degree, 0) + 1, (1,) * k)


def bound_two_regions(m: int, N: int) -> BoundReport:
    """``2^{4m(8m-1)} (6Nm + 2m + 1)^{8m} + 2`` for two regions.

    ``m`` is the degree of the inhomogeneous terms and ``N`` the overall
    degree. ``N < m`` is accepted (the formula stays well defined).
    """
    m = _nat("m", m, 1)
    N = _nat("N", N, 1)
    base = 6 * N * m + 2 * m + 1
    e2 = 4 * m * (8 * m - 1)
    value = 2**e2 * base ** (8 * m) + 2
    profile = crossing_system_profile(2 * m, N)
    return BoundReport(
        value,
        TWO_REGION,
        profile,
        {"m": m, "N": N, "n_vars": 2 * m, "r": profile.order_r, "alpha": profile.alpha},
        _merge({2: e2}, _power(base, 8 * m)),
        2,
    )


def bound_general(n: int, M: int) -> BoundReport:
    """``2Mn * 2^{4Mn(8Mn-1)} (6M^2 n + 2Mn + 1)^{8Mn} + 2`` for ``n`` lines and degree ``M``."""
    n = _nat("n", n, 1)
    M = _nat("M", M, 1)
    k = 2 * M * n
    base = 6 * M * M * n + 2 * M * n + 1
    e2 = 4 * M * n * (8 * M * n - 1)
    value = k * 2**e2 * base ** (8 * M * n) + 2
    profile = crossing_system_profile(k, M, n, M)
    return BoundReport(
        value,
        GENERAL,
        profile,
        {"n": n, "M": M, "k": k, "multiplicity": k, "n_vars": k, "r": profile.order_r, "alpha": profile.alpha},
        _merge(_factor_small(k), {2: e2}, _power(base, 8 * M * n)),
        2,
    )


def khovanskii_report(n_vars: int, r: int, alpha: int, betas: Sequence[int]) -> BoundReport:
    value = khovanskii_count(n_vars, r, alpha, betas)
    profile = PfaffianProfile(r, alpha, tuple(betas))
    base = min(n_vars, r) * alpha + sum(betas) - n_vars + 1
    factors = _merge({2: r * (r - 1) // 2}, *(_factor_small(b) for b in betas), _power(base, r))
    return BoundReport(value, KHOVANSKII, profile, {"n_vars": n_vars}, factors, 0)
