"""Propagation of crossing solutions through a piecewise-linear field.

Inside one piece the equation is linear, so with ``A`` the primitive of ``a``
(``A(0) = 0``), ``E = exp(-A)`` and ``G(t) = ∫_0^t b E``, the solution through
``(t0, x0)`` is ``u(t) = (x0 E(t0) + G(t) - G(t0)) / E(t)``. Splitting-line
contacts are located exactly: between two consecutive zeros of the lateral
polynomial ``a x_i + b`` a solution meets ``x = x_i`` at most once, so sign
checks at those zeros (plus a uniform mesh) bracket every crossing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .config import TOL
from .errors import (
    NonTransversal,
    OnSwitchingLine,
    QuadratureFailure,
    SlidingEncountered,
    TangencyEncountered,
)
from .field import ABOVE, BELOW, PiecewiseField, side_values
from .quadrature import gauss_legendre, integrate
from .trigpoly import TWO_PI, TrigPoly, antiderivative, eval_trig

UP = "up"
DOWN = "down"

_CHEB_DEG = 15
_GL_ORDER = 20


def _cheb_matrix(deg: int):
    k = np.arange(deg + 1)
    nodes = np.cos(np.pi * (k + 0.5) / (deg + 1))
    T = np.cos(np.outer(k, np.pi * (k + 0.5) / (deg + 1)))  # T[k, i] = T_k(nodes[i])
    return nodes, T


_CHEB_NODES, _CHEB_T = _cheb_matrix(_CHEB_DEG)


class PiecePropagator:
    """Closed-form flow of ``x' = a(t) x + b(t)`` with a tabulated ``G``.

    ``G`` is stored on ``[0, 2π]`` as piecewise Chebyshev interpolants on
    uniform panels; panel integrals use a 20-point Gauss–Legendre rule and the
    total is checked against adaptive Gauss–Kronrod quadrature. Outside the
    base period ``G(t + 2π) = G(2π) + exp(-2π a0) G(t)``.
    """

    def __init__(self, a: TrigPoly, b: TrigPoly, max_panels: int = 4096):
        self.a = a
        self.b = b
        self.A = antiderivative(a)
        self.a0 = a.a0
        self.rho = math.exp(-TWO_PI * a.a0)
        self._build(max_panels)

    def _f(self, s):
        return eval_trig(self.b, s) * np.exp(-self.A(s))

    def _build(self, max_panels: int):
        if self.b.is_zero():
            self.panels = 1
            self.h = TWO_PI
            self.cum = np.zeros(2)
            self.coeffs = np.zeros((1, _CHEB_DEG + 1))
            self.G2pi = 0.0
            return
        xg, wg = gauss_legendre(_GL_ORDER)
        reference = integrate(self._f, 0.0, TWO_PI, atol=TOL.quad_atol)
        sample = np.linspace(0.0, TWO_PI, 257)
        scale = 1.0 + float(np.max(np.abs(self._f(sample))))
        width = 1 + max(self.a.degree, self.b.degree) * (1.0 + self.a.norm1)
        N = int(min(max_panels, max(8, 2 ** math.ceil(math.log2(4 * width)))))
        while True:
            h = TWO_PI / N
            lo = np.arange(N) * h
            # values of G(lo + τ) - G(lo) at the Chebyshev nodes of each panel
            tau = (_CHEB_NODES + 1.0) * (h / 2.0)  # (D+1,)
            nodes = lo[:, None, None] + tau[None, :, None] * (xg[None, None, :] + 1.0) / 2.0
            partial = (self._f(nodes) * wg).sum(axis=2) * (tau / 2.0)[None, :]
            full_nodes = lo[:, None] + (xg[None, :] + 1.0) * (h / 2.0)
            panel = (self._f(full_nodes) * wg).sum(axis=1) * (h / 2.0)
            cum = np.concatenate([[0.0], np.cumsum(panel)])
            coeffs = partial @ _CHEB_T.T * (2.0 / (_CHEB_DEG + 1))
            coeffs[:, 0] /= 2.0
            # check interpolation midway between nodes and the total against the GK reference
            s_chk = np.array([-0.999, -0.5, 0.123, 0.77, 0.999])
            tau_chk = (s_chk + 1.0) * (h / 2.0)
            chk_nodes = lo[:, None, None] + tau_chk[None, :, None] * (xg[None, None, :] + 1.0) / 2.0
            direct = (self._f(chk_nodes) * wg).sum(axis=2) * (tau_chk / 2.0)[None, :]
            interp = np.polynomial.chebyshev.chebval(s_chk, coeffs.T)
            err = max(float(np.max(np.abs(direct - interp))), abs(cum[-1] - reference))
            if err <= TOL.quad_atol * scale:
                break
            if 2 * N > max_panels:
                raise QuadratureFailure(f"propagator table did not converge (error {err:.2e} with {N} panels)")
            N *= 2
        self.panels = N
        self.h = h
        self.cum = cum
        self.coeffs = coeffs
        self.G2pi = float(cum[-1])

    # -- G and E -------------------------------------------------------------
    def _G_base(self, r):
        """``G`` on ``[0, 2π]`` (scalar or array)."""
        if np.ndim(r) == 0:
            j = min(int(r / self.h), self.panels - 1)
            s = 2.0 * (r - j * self.h) / self.h - 1.0
            c = self.coeffs[j]
            b1 = b2 = 0.0
            for ck in c[:0:-1]:
                b1, b2 = 2.0 * s * b1 - b2 + ck, b1
            return float(self.cum[j] + s * b1 - b2 + c[0])
        j = np.minimum((r / self.h).astype(int), self.panels - 1)
        s = 2.0 * (r - j * self.h) / self.h - 1.0
        c = self.coeffs[j]
        b1 = np.zeros_like(s)
        b2 = np.zeros_like(s)
        for k in range(_CHEB_DEG, 0, -1):
            b1, b2 = 2.0 * s * b1 - b2 + c[:, k], b1
        return self.cum[j] + s * b1 - b2 + c[:, 0]

    def _geom(self, q):
        # sum_{p<q} rho^p, valid for negative q as well
        if self.a0 == 0.0:
            return q
        x = -TWO_PI * self.a0
        return np.expm1(x * q) / math.expm1(x)

    def G(self, t):
        if np.ndim(t) == 0:
            q = math.floor(t / TWO_PI)
            r = t - q * TWO_PI
            if q == 0:
                return self._G_base(r)
            return self.G2pi * float(self._geom(q)) + self.rho**q * self._G_base(r)
        t = np.asarray(t, dtype=float)
        q = np.floor(t / TWO_PI)
        r = t - q * TWO_PI
        return self.G2pi * self._geom(q) + self.rho**q * self._G_base(r)

    def E(self, t):
        return np.exp(-self.A(t)) if np.ndim(t) else math.exp(-self.A(t))

    def u(self, t0: float, x0: float, t):
        """Solution value at ``t`` of the piece equation through ``(t0, x0)``."""
        w0 = x0 * self.E(t0) - self.G(t0)
        return (w0 + self.G(t)) / self.E(t)


@lru_cache(maxsize=512)
def piece_propagator(a: TrigPoly, b: TrigPoly) -> PiecePropagator:
    return PiecePropagator(a, b)


def advance_in_piece(a: TrigPoly, b: TrigPoly, t0: float, x0: float, t1: float) -> float:
    """``u(t1)`` for ``x' = a x + b``, ``u(t0) = x0``, by variation of constants."""
    if not t0 <= t1 <= t0 + TWO_PI + 1e-12:
        raise ValueError("advance_in_piece needs t0 <= t1 <= t0 + 2π")
    A = antiderivative(a)
    At1 = A(t1)
    forced = integrate(lambda s: eval_trig(b, s) * math.exp(At1 - A(s)), t0, t1, atol=TOL.quad_atol * (1 + abs(x0)))
    return x0 * math.exp(At1 - A(t0)) + forced


# -- trajectories -----------------------------------------------------------------

class CrossingEvent(NamedTuple):
    time: float
    line_index: int
    direction: str | None  # None for a tangent contact
    transversal: bool


class Segment(NamedTuple):
    piece: int
    t_start: float
    t_end: float
    x_start: float


@dataclass
class Trajectory:
    start: tuple[float, float]
    end: tuple[float, float]
    events: list[CrossingEvent] = dc_field(default_factory=list)
    tangency_flag: bool = False
    segments: list[Segment] = dc_field(default_factory=list)

    @property
    def transversal_events(self) -> list[CrossingEvent]:
        return [e for e in self.events if e.transversal]

    def value_at(self, F: PiecewiseField, t: float) -> float:
        for seg in self.segments:
            if seg.t_start <= t <= seg.t_end:
                a, b = F.piece(seg.piece)
                return float(piece_propagator(a, b).u(seg.t_start, seg.x_start, t))
        raise ValueError(f"t={t} outside the trajectory")

    def sample(self, F: PiecewiseField, count: int = 200) -> list[tuple[float, float]]:
        """``count`` evenly spaced ``(t, u(t))`` pairs for plotting."""
        t0, t1 = self.start[0], self.end[0]
        ts = np.linspace(t0, t1, count)
        out = []
        for seg in self.segments:
            mask = (ts >= seg.t_start) & (ts <= seg.t_end)
            if mask.any():
                a, b = F.piece(seg.piece)
                vals = piece_propagator(a, b).u(seg.t_start, seg.x_start, ts[mask])
                out.extend(zip(ts[mask].tolist(), np.atleast_1d(vals).tolist()))
        out = sorted(dict(out).items())
        return [(float(t), float(x)) for t, x in out]

    def to_dict(self, F: PiecewiseField | None = None, samples: int = 0) -> dict:
        data = {
            "start": list(self.start),
            "end": list(self.end),
            "tangency_flag": self.tangency_flag,
            "events": [e._asdict() for e in self.events],
        }
        if F is not None and samples:
            data["samples"] = [list(p) for p in self.sample(F, samples)]
        return data


def _breakpoints(zeros, t_lo: float, t_hi: float) -> list[float]:
    out = []
    if not zeros:
        return out
    q = math.floor(t_lo / TWO_PI)
    while q * TWO_PI <= t_hi:
        base = q * TWO_PI
        out.extend(base + z for z in zeros if t_lo < base + z <= t_hi)
        q += 1
    return sorted(out)


class _Contact(NamedTuple):
    time: float
    line: int
    touch: bool


def _next_contact(F, piece, prop, t, x, t_end, just_crossed, mesh_step):
    """Earliest contact of the piece solution through ``(t, x)`` with its boundary lines."""
    E_t = prop.E(t)
    w0 = x * E_t - prop.G(t)
    best: _Contact | None = None
    for line, side, inside in ((piece - 1, ABOVE, 1.0), (piece, BELOW, -1.0)):
        if not 1 <= line <= F.n:
            continue
        zeros = F.switching_zeros(line, side)
        if zeros is None:
            # lateral field vanishes identically: x = x_line is itself a solution
            continue
        xl = F.line(line)
        horizon = t_end if best is None else best.time
        bps = _breakpoints(zeros, t, horizon)
        if line == just_crossed:
            if not bps:
                continue
            start = bps[0]
        else:
            start = t
        if start > horizon:
            continue
        mesh = np.arange(start, horizon, mesh_step)[1:] if horizon - start > mesh_step else np.empty(0)
        pts = np.unique(np.concatenate([[start], mesh, bps, [horizon]]))
        pts = pts[(pts >= start) & (pts <= horizon)]
        vals = (w0 + prop.G(pts)) / prop.E(pts) - xl  # u - x_line
        is_bp = np.isin(pts, bps)
        touch_tol = TOL.touch * (1.0 + abs(xl))

        def gap(tau, xl=xl):
            return (w0 + prop.G(tau)) / prop.E(tau) - xl

        found = None
        for idx in range(len(pts)):
            v = vals[idx] * inside
            if v <= 0.0:
                if idx == 0:
                    # already on or beyond the line at the first check point
                    found = _Contact(float(pts[0]), line, True)
                elif v == 0.0 and is_bp[idx]:
                    found = _Contact(float(pts[idx]), line, True)
                else:
                    lo, hi = float(pts[idx - 1]), float(pts[idx])
                    tc = hi if vals[idx] == 0.0 else brentq(gap, lo, hi, xtol=TOL.event_xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
                    found = _Contact(tc, line, False)
                break
            if is_bp[idx] and v <= touch_tol:
                found = _Contact(float(pts[idx]), line, True)
                break
        if found is not None and (best is None or found.time < best.time):
            best = found
    return best


def _classify(F: PiecewiseField, line: int, t: float):
    below, above = side_values(F, line, t)
    tol = TOL.tangency * (1.0 + abs(F.line(line)))
    if abs(below.value) < tol or abs(above.value) < tol:
        return None
    if below.value * above.value < 0.0:
        raise SlidingEncountered("opposite lateral field values at a contact", t, line)
    return UP if below.value > 0.0 else DOWN


def flow_with_events(
    F: PiecewiseField, t0: float, x0: float, t1: float, start_line: int | None = None
) -> Trajectory:
    """Follow the crossing solution through ``(t0, x0)`` up to ``t1``.

    With ``start_line`` the solution starts on that splitting line (``x0`` is
    ignored) and the starting contact is recorded as the first event.
    Propagation stops at the first non-transversal contact, which sets
    ``tangency_flag``.
    """
    if t1 < t0 or t1 > t0 + TWO_PI + 1e-12:
        raise ValueError("flow_with_events needs t0 <= t1 <= t0 + 2π")
    events: list[CrossingEvent] = []
    just_crossed = None
    if start_line is not None:
        x0 = F.line(start_line)
        direction = _classify(F, start_line, t0)
        if direction is None:
            raise NonTransversal(f"start on line {start_line} at t={t0} is not a transversal crossing")
        events.append(CrossingEvent(t0, start_line, direction, True))
        piece = start_line + 1 if direction == UP else start_line
        just_crossed = start_line
    else:
        piece = F.region_index(x0)
    mesh_step = TWO_PI / max(16, TOL.mesh_per_degree * max(F.M, 1))
    traj = Trajectory(start=(t0, x0), end=(t0, x0), events=events)
    t, x = t0, x0
    budget = 4 * max(F.M, 1) * max(F.n, 1) + 8
    while True:
        a, b = F.piece(piece)
        prop = piece_propagator(a, b)
        contact = _next_contact(F, piece, prop, t, x, t1, just_crossed, mesh_step)
        if contact is None:
            x_end = float(prop.u(t, x, t1))
            traj.segments.append(Segment(piece, t, t1, x))
            traj.end = (t1, x_end)
            return traj
        tc, line = contact.time, contact.line
        traj.segments.append(Segment(piece, t, tc, x))
        xl = F.line(line)
        direction = None if contact.touch else _classify(F, line, tc)
        expected = UP if line == piece else DOWN
        if direction is not None and direction != expected:
            direction = None
        if direction is None:
            traj.events.append(CrossingEvent(tc, line, None, False))
            traj.tangency_flag = True
            traj.end = (tc, xl)
            return traj
        traj.events.append(CrossingEvent(tc, line, direction, True))
        if len(traj.events) > budget:
            raise RuntimeError("crossing budget exceeded; the field violates the 2Mn crossing bound")
        piece = line + 1 if direction == UP else line
        t, x = tc, xl
        just_crossed = line


def displacement(F: PiecewiseField, x0: float, t_section: float = 0.0) -> float:
    """``u(t_section + 2π) - x0`` for the crossing solution with ``u(t_section) = x0``."""
    traj = flow_with_events(F, t_section, x0, t_section + TWO_PI)
    if traj.tangency_flag:
        ev = traj.events[-1]
        raise TangencyEncountered("trajectory is tangent to a splitting line", ev.time, ev.line_index)
    return traj.end[1] - x0


# -- constant-sign periodic solutions ------------------------------------------------

class Monodromy(NamedTuple):
    A: float
    B: float

    def __call__(self, x: float) -> float:
        return self.A * x + self.B


def monodromy(a: TrigPoly, b: TrigPoly) -> Monodromy:
    """Affine period map ``u(2π) = A u(0) + B`` of ``x' = a x + b``."""
    A = antiderivative(a)
    total = TWO_PI * a.a0  # A(2π): the periodic part returns to 0
    grid = np.linspace(0.0, TWO_PI, 257)
    scale = max(1.0, TWO_PI * float(np.max(np.abs(eval_trig(b, grid)) * np.exp(total - A(grid)))))
    B = integrate(lambda s: eval_trig(b, s) * math.exp(total - A(s)), 0.0, TWO_PI, atol=TOL.quad_atol * scale)
    return Monodromy(math.exp(total), B)


@dataclass(frozen=True)
class ConstantSignCycle:
    piece: int
    multiplier: float
    x_star: float | None
    kind: str  # "isolated" | "continuum"

    def to_dict(self) -> dict:
        return {"piece": self.piece, "multiplier": self.multiplier, "x_star": self.x_star, "kind": self.kind}


def constant_sign_cycles(F: PiecewiseField) -> list[ConstantSignCycle]:
    """Periodic solutions that stay inside a single region over a period."""
    out = []
    for i in range(1, F.n + 2):
        a, b = F.piece(i)
        mono = monodromy(a, b)
        lo = F.line(i - 1) if i > 1 else -math.inf
        hi = F.line(i) if i <= F.n else math.inf
        if a.a0 == 0.0:
            if abs(mono.B) <= TOL.quad_atol * (1.0 + b.norm1) * 10:
                out.append(ConstantSignCycle(i, mono.A, None, "continuum"))
            continue
        x_star = mono.B / (1.0 - mono.A)
        if not lo < x_star < hi:
            continue
        try:
            traj = flow_with_events(F, 0.0, x_star, TWO_PI)
        except (OnSwitchingLine, SlidingEncountered):
            continue
        if traj.events:
            continue
        out.append(ConstantSignCycle(i, mono.A, x_star, "isolated"))
    return out
