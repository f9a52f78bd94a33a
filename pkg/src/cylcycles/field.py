"""Piecewise-linear fields ``x' = a_i(t) x + b_i(t)`` separated by thresholds.

Pieces are numbered ``1..n+1`` bottom-up and lines ``1..n``: piece ``i``
governs ``x_{i-1} <= x <= x_i``, so line ``i`` separates piece ``i`` (below)
from piece ``i+1`` (above).
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from .config import TOL
from .errors import ModelParseError, OnSwitchingLine
from .trigpoly import TWO_PI, TrigPoly, eval_trig, zeros_in_period

BELOW = "below"
ABOVE = "above"


class Piece(NamedTuple):
    a: TrigPoly
    b: TrigPoly


class SideValue(NamedTuple):
    line_index: int
    side: str
    value: float


@dataclass(frozen=True, eq=True)
class PiecewiseField:
    thresholds: tuple[float, ...]
    pieces: tuple[Piece, ...]

    def __post_init__(self):
        th = tuple(float(x) for x in self.thresholds)
        pieces = tuple(Piece(*p) for p in self.pieces)
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ValueError(f"thresholds must be strictly increasing, got {th}")
        if len(pieces) != len(th) + 1:
            raise ValueError(f"expected {len(th) + 1} pieces for {len(th)} thresholds, got {len(pieces)}")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "pieces", pieces)

    @property
    def n(self) -> int:
        return len(self.thresholds)

    @property
    def M(self) -> int:
        return max(max(p.a.degree, p.b.degree) for p in self.pieces)

    @property
    def N(self) -> int:
        """Largest degree among the ``a`` coefficients."""
        return max(p.a.degree for p in self.pieces)

    def piece(self, i: int) -> Piece:
        return self.pieces[i - 1]

    def line(self, i: int) -> float:
        return self.thresholds[i - 1]

    def region_index(self, x: float) -> int:
        """Piece index (1-based) of the open region containing ``x``."""
        for xi in self.thresholds:
            if abs(x - xi) <= TOL.threshold:
                raise OnSwitchingLine(f"x={x!r} lies on the switching line x={xi!r}")
        return bisect.bisect_left(self.thresholds, x) + 1

    def lateral_poly(self, i: int, side: str) -> TrigPoly:
        """``a x_i + b`` of the piece on ``side`` of line ``i``."""
        a, b = self.piece(i if side == BELOW else i + 1)
        return a * self.line(i) + b

    @cached_property
    def _switching_cache(self) -> dict:
        return {}

    def switching_zeros(self, i: int, side: str) -> tuple[float, ...] | None:
        """Cached zeros of the lateral polynomial; ``None`` if it is identically zero."""
        key = (i, side)
        cache = self._switching_cache
        if key not in cache:
            p = self.lateral_poly(i, side)
            cache[key] = None if p.is_zero() else tuple(zeros_in_period(p))
        return cache[key]

    # -- (de)serialization --------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "pieces": [{"a": p.a.to_dict(), "b": p.b.to_dict()} for p in self.pieces],
        }


def make_field(thresholds: Sequence[float], pieces: Iterable[tuple[TrigPoly, TrigPoly]]) -> PiecewiseField:
    return PiecewiseField(tuple(thresholds), tuple(Piece(a, b) for a, b in pieces))


def two_region(a_plus: TrigPoly, b_plus: TrigPoly, a_minus: TrigPoly, b_minus: TrigPoly, x1: float = 0.0):
    """The two-region field with ``(a^+, b^+)`` above ``x1`` and ``(a^-, b^-)`` below."""
    return make_field([x1], [(a_minus, b_minus), (a_plus, b_plus)])


def eval_field(F: PiecewiseField, t: float, x: float) -> float:
    a, b = F.piece(F.region_index(x))
    return eval_trig(a, t) * x + eval_trig(b, t)


def side_values(F: PiecewiseField, i: int, t: float) -> tuple[SideValue, SideValue]:
    if not 1 <= i <= F.n:
        raise IndexError(f"line index {i} outside 1..{F.n}")
    xi = F.line(i)
    lo, hi = F.piece(i), F.piece(i + 1)
    below = eval_trig(lo.a, t) * xi + eval_trig(lo.b, t)
    above = eval_trig(hi.a, t) * xi + eval_trig(hi.b, t)
    return SideValue(i, BELOW, below), SideValue(i, ABOVE, above)


def is_crossing(F: PiecewiseField, i: int, t: float) -> bool:
    below, above = side_values(F, i, t)
    return below.value * above.value > 0.0


def is_continuous(F: PiecewiseField, atol: float | None = None) -> bool:
    atol = TOL.continuity if atol is None else atol
    return all(
        F.lateral_poly(i, BELOW).allclose(F.lateral_poly(i, ABOVE), atol) for i in range(1, F.n + 1)
    )


def perturb(F: PiecewiseField, lam: float) -> PiecewiseField:
    """The family member ``x' = S(t, x) + lam``."""
    if lam == 0:
        return F
    return PiecewiseField(F.thresholds, tuple(Piece(p.a, p.b + lam) for p in F.pieces))


def max_crossings(F: PiecewiseField) -> int:
    return 2 * F.M * F.n


def switching_zero_times(F: PiecewiseField, i: int, side: str) -> list[float]:
    """Times in ``[0, 2π)`` where the lateral field on ``side`` of line ``i`` vanishes.

    Raises ``IdenticallyZero`` when that lateral polynomial vanishes
    identically; then no crossing solution can cross line ``i``.
    """
    return zeros_in_period(F.lateral_poly(i, side))


# -- model files --------------------------------------------------------------

def _trig_from_json(data, where: str) -> TrigPoly:
    if isinstance(data, (int, float)) and not isinstance(data, bool):
        return TrigPoly(float(data))
    if not isinstance(data, dict):
        raise ModelParseError(f"{where}: expected a number or an object with a0/cos/sin")
    unknown = set(data) - {"a0", "cos", "sin"}
    if unknown:
        raise ModelParseError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        a0 = float(data.get("a0", 0.0))
        cos = [float(v) for v in data.get("cos", [])]
        sin = [float(v) for v in data.get("sin", [])]
    except (TypeError, ValueError) as exc:
        raise ModelParseError(f"{where}: non-numeric coefficient ({exc})") from None
    if not all(map(math.isfinite, [a0, *cos, *sin])):
        raise ModelParseError(f"{where}: coefficients must be finite")
    return TrigPoly(a0, cos, sin)


def field_from_dict(data: dict) -> PiecewiseField:
    """Build a field from the model-file mapping.

    When ``period`` ``T`` is present the coefficients are read as functions of
    the phase ``s = 2πt/T`` and every right-hand side is multiplied by
    ``T/(2π)``, so the returned field is 2π-periodic in ``s``.
    """
    if not isinstance(data, dict):
        raise ModelParseError("model: top level must be an object")
    unknown = set(data) - {"period", "thresholds", "pieces", "name", "description"}
    if unknown:
        raise ModelParseError(f"model: unknown keys {sorted(unknown)}")
    thresholds = data.get("thresholds", [])
    if not isinstance(thresholds, list):
        raise ModelParseError("thresholds: expected a list")
    try:
        th = [float(x) for x in thresholds]
    except (TypeError, ValueError):
        raise ModelParseError("thresholds: entries must be numbers") from None
    for j, (lo, hi) in enumerate(zip(th, th[1:]), start=1):
        if not hi > lo:
            raise ModelParseError(f"thresholds[{j}]: {hi} is not greater than {lo}")
    pieces = data.get("pieces")
    if not isinstance(pieces, list):
        raise ModelParseError("pieces: expected a list")
    if len(pieces) != len(th) + 1:
        raise ModelParseError(f"pieces: expected {len(th) + 1} entries for {len(th)} thresholds, got {len(pieces)}")
    scale = 1.0
    if data.get("period") is not None:
        try:
            period = float(data["period"])
        except (TypeError, ValueError):
            raise ModelParseError("period: expected a number") from None
        if not period > 0:
            raise ModelParseError("period: must be positive")
        scale = period / TWO_PI
    out = []
    for j, entry in enumerate(pieces):
        if not isinstance(entry, dict) or "a" not in entry or "b" not in entry:
            raise ModelParseError(f"pieces[{j}]: expected an object with keys 'a' and 'b'")
        a = _trig_from_json(entry["a"], f"pieces[{j}].a") * scale
        b = _trig_from_json(entry["b"], f"pieces[{j}].b") * scale
        out.append((a, b))
    return make_field(th, out)


def load_model(path) -> PiecewiseField:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ModelParseError(f"{path}: {exc.strerror}") from None
    return field_from_dict(data)
