"""Crossing limit cycles: search, crossing-time systems and certification.

A crossing cycle visiting the lines ``i_1, ..., i_k`` at times ``t_1 < ... < t_k``
satisfies the transition equations

    Q_j(t_j, t_{j+1}) = x_{i_j} E(t_j) + G(t_{j+1}) - G(t_j) - x_{i_{j+1}} E(t_{j+1}) = 0,

with ``t_{k+1} = t_1 + 2π`` and ``E``, ``G`` taken from the piece visited on leg
``j``. Their Jacobian is cyclic bidiagonal and its determinant equals
``(prod c_j) d'(x0)``, which ties non-degeneracy of the system to simplicity of
the cycle.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .config import TOL
from .errors import (
    AmbiguousRegion,
    ContactError,
    DivisionNearZero,
    NoConvergence,
    NonTransversal,
    NotApplicable,
    NotPeriodic,
    OnSwitchingLine,
    SingularJacobian,
)
from .field import PiecewiseField
from .flow import (
    UP,
    ConstantSignCycle,
    Trajectory,
    constant_sign_cycles,
    displacement,
    flow_with_events,
    piece_propagator,
)
from .trigpoly import TWO_PI, eval_trig


@dataclass(frozen=True, eq=False)
class CrossingSequence:
    """Cyclic word of visited line indices (1-based), in time order.

    ``first_leg_above`` only matters when every entry is the same line; it
    tells on which side the first leg runs (default: above).
    """

    lines: tuple[int, ...]
    first_leg_above: bool | None = None

    def __post_init__(self):
        lines = tuple(int(i) for i in self.lines)
        object.__setattr__(self, "lines", lines)
        k = len(lines)
        if k == 0 or k % 2:
            raise AmbiguousRegion(f"crossing sequence must have positive even length, got {k}")
        for j in range(k):
            if abs(lines[j] - lines[(j + 1) % k]) > 1:
                raise AmbiguousRegion(f"sequence {lines} skips a line between positions {j + 1} and {(j + 1) % k + 1}")

    @property
    def k(self) -> int:
        return len(self.lines)

    @property
    def canonical_form(self) -> tuple[int, ...]:
        k = len(self.lines)
        return min(self.lines[r:] + self.lines[:r] for r in range(k))

    def __eq__(self, other):
        if not isinstance(other, CrossingSequence):
            return NotImplemented
        return self.canonical_form == other.canonical_form

    def __hash__(self):
        return hash(self.canonical_form)

    def leg_above(self, j: int) -> bool:
        """Whether leg ``j`` (from crossing ``j`` to ``j+1``) runs above line ``i_j``."""
        lines, k = self.lines, len(self.lines)
        i, nxt = lines[j - 1], lines[j % k]
        if nxt != i:
            return nxt > i
        # same line on both ends: look back for the last strict move, then alternate
        for c in range(1, k):
            prev, cur = lines[(j - 1 - c) % k], lines[(j - c) % k]
            if prev != cur:
                return (prev < cur) == (c % 2 == 1)
        start_above = True if self.first_leg_above is None else self.first_leg_above
        return start_above == ((j - 1) % 2 == 0)

    def leg_piece(self, j: int) -> int:
        i = self.lines[j - 1]
        return i + 1 if self.leg_above(j) else i


class CyclicBidiagonal:
    """Matrix with ``-d`` on the diagonal, ``c_j`` at ``(j, j+1)`` and ``c_k`` at ``(k, 1)``."""

    def __init__(self, d: Sequence[float], c: Sequence[float]):
        self.d = np.asarray(d, dtype=float)
        self.c = np.asarray(c, dtype=float)
        if self.d.shape != self.c.shape or self.d.ndim != 1:
            raise ValueError("d and c must be 1-D of equal length")

    @property
    def k(self) -> int:
        return len(self.d)

    def to_dense(self) -> np.ndarray:
        k = self.k
        J = np.diag(-self.d)
        for j in range(k):
            J[j, (j + 1) % k] += self.c[j]
        return J

    def det(self) -> float:
        k = self.k
        return float(np.prod(-self.d) + (-1) ** (k + 1) * np.prod(self.c))

    def solve(self, rhs: Sequence[float]) -> np.ndarray:
        """O(k) solve: sweep ``s_{j+1} = (r_j + d_j s_j)/c_j`` affinely in ``s_1``, close with row ``k``."""
        r = np.asarray(rhs, dtype=float)
        k = self.k
        if k == 1:
            return np.array([r[0] / (self.c[0] - self.d[0])])
        alpha = np.zeros(k)
        beta = np.zeros(k)
        beta[0] = 1.0
        for j in range(k - 1):
            alpha[j + 1] = (r[j] + self.d[j] * alpha[j]) / self.c[j]
            beta[j + 1] = self.d[j] * beta[j] / self.c[j]
        denom = self.c[-1] - self.d[-1] * beta[-1]
        s1 = (r[-1] + self.d[-1] * alpha[-1]) / denom
        return alpha + beta * s1


@dataclass
class LimitCycle:
    x0: float
    times: tuple[float, ...]
    sequence: CrossingSequence
    simple: bool
    d_prime: float
    residual_norm: float

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "times": list(self.times),
            "sequence": list(self.sequence.lines),
            "simple": self.simple,
            "d_prime": self.d_prime,
            "residual_norm": self.residual_norm,
        }


# -- sequences and residuals --------------------------------------------------------

def extract_sequence(traj: Trajectory) -> tuple[tuple[float, ...], CrossingSequence]:
    """Crossing times and sequence of a periodic, fully transversal trajectory."""
    x_start, x_end = traj.start[1], traj.end[1]
    if traj.tangency_flag or not all(e.transversal for e in traj.events):
        raise NonTransversal("trajectory has a non-transversal contact")
    if abs(x_end - x_start) > TOL.displacement_zero * (1.0 + abs(x_start)):
        raise NotPeriodic(f"trajectory does not close: |u(end) - u(start)| = {abs(x_end - x_start):.3e}")
    if not traj.events:
        raise NotApplicable("constant-sign periodic solution has no crossing sequence")
    times = tuple(e.time for e in traj.events)
    X = CrossingSequence(tuple(e.line_index for e in traj.events), traj.events[0].direction == UP)
    return times, X


def _leg(F: PiecewiseField, X: CrossingSequence, j: int):
    piece = X.leg_piece(j)
    if not 1 <= piece <= F.n + 1 or max(X.lines) > F.n or min(X.lines) < 1:
        raise AmbiguousRegion(f"sequence {X.lines} does not fit a field with {F.n} lines")
    a, b = F.piece(piece)
    x_from = F.line(X.lines[j - 1])
    x_to = F.line(X.lines[j % X.k])
    return a, b, piece_propagator(a, b), x_from, x_to


def transition_residual(F: PiecewiseField, j: int, X: CrossingSequence, s1: float, s2: float) -> float:
    """``Q_j(s1, s2)`` for leg ``j`` of sequence ``X``."""
    _, _, prop, x_from, x_to = _leg(F, X, j)
    return x_from * prop.E(s1) + prop.G(s2) - prop.G(s1) - x_to * prop.E(s2)


def _check_times(times: Sequence[float], k: int) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if len(t) != k:
        raise ValueError(f"expected {k} crossing times, got {len(t)}")
    if np.any(np.diff(t) <= 0.0) or t[-1] >= t[0] + TWO_PI:
        raise ValueError("crossing times must be strictly increasing within one period")
    return t


def assemble_system(F: PiecewiseField, X: CrossingSequence, times: Sequence[float]):
    """Residuals ``(Q_1, ..., Q_k)`` and the cyclic-bidiagonal Jacobian at ``times``."""
    k = X.k
    t = _check_times(times, k)
    res = np.empty(k)
    d = np.empty(k)
    c = np.empty(k)
    for j in range(1, k + 1):
        a, b, prop, x_from, x_to = _leg(F, X, j)
        s1 = t[j - 1]
        s2 = t[j] if j < k else t[0] + TWO_PI
        E1, E2 = prop.E(s1), prop.E(s2)
        res[j - 1] = x_from * E1 + prop.G(s2) - prop.G(s1) - x_to * E2
        d[j - 1] = (eval_trig(a, s1) * x_from + eval_trig(b, s1)) * E1
        c[j - 1] = (eval_trig(a, s2) * x_to + eval_trig(b, s2)) * E2
    return res, CyclicBidiagonal(d, c)


class NewtonResult(NamedTuple):
    times: tuple[float, ...]
    residual_norm: float
    converged: bool
    iterations: int


def _admissible(t: np.ndarray) -> bool:
    return bool(np.all(np.diff(t) > 0.0) and t[-1] < t[0] + TWO_PI)


def newton_refine(F: PiecewiseField, X: CrossingSequence, times0: Sequence[float], tol: float | None = None,
                  maxiter: int | None = None) -> NewtonResult:
    """Damped Newton iteration on the transition system.

    Once the residual drops below ``tol`` one extra polishing step is taken
    when it does not increase the residual.
    """
    tol = TOL.newton_tol if tol is None else tol
    maxiter = TOL.newton_maxiter if maxiter is None else maxiter
    t = _check_times(times0, X.k).copy()
    res, J = assemble_system(F, X, t)
    norm = float(np.max(np.abs(res)))
    it = 0
    polished = False
    while it < maxiter:
        if norm <= tol and polished:
            break
        scale = max(float(np.prod(np.abs(J.d))), float(np.prod(np.abs(J.c))))
        if abs(J.det()) <= TOL.singular_det * scale or not np.all(J.c):
            raise SingularJacobian(f"transition Jacobian is singular (det={J.det():.3e}) at times {t.tolist()}")
        step = J.solve(-res)
        lam = 1.0
        for _ in range(TOL.newton_halvings + 1):
            trial = t + lam * step
            if _admissible(trial):
                res_trial, J_trial = assemble_system(F, X, trial)
                norm_trial = float(np.max(np.abs(res_trial)))
                if norm_trial < norm or (norm <= tol and norm_trial <= norm):
                    break
            lam *= 0.5
        else:
            if norm <= tol:
                break
            raise NoConvergence(f"damped Newton stalled at residual {norm:.3e}")
        if norm <= tol:
            polished = True
        t, res, J, norm = trial, res_trial, J_trial, norm_trial
        it += 1
        if norm <= tol and np.max(np.abs(lam * step)) < 1e-15:
            break
    return NewtonResult(tuple(t.tolist()), norm, norm <= tol, it)


def d_prime_from_times(F: PiecewiseField, X: CrossingSequence, times: Sequence[float]) -> float:
    """Derivative of the displacement map from the crossing data (product formula)."""
    k = X.k
    t = _check_times(times, k)
    prod = 1.0
    for j in range(1, k + 1):
        a, b, prop, x_from, x_to = _leg(F, X, j)
        s1 = t[j - 1]
        s2 = t[j] if j < k else t[0] + TWO_PI
        num = eval_trig(a, s1) * x_from + eval_trig(b, s1)
        den = eval_trig(a, s2) * x_to + eval_trig(b, s2)
        if abs(den) < TOL.division_near_zero:
            raise DivisionNearZero(f"lateral field {den:.3e} at t={s2} on leg {j}")
        prod *= num / den * math.exp(prop.A(s2) - prop.A(s1))
    return prod - 1.0


def d_prime_product(F: PiecewiseField, cycle: LimitCycle) -> float:
    return d_prime_from_times(F, cycle.sequence, cycle.times)


def reflow_check(F: PiecewiseField, cycle: LimitCycle) -> tuple[float, bool]:
    """Re-integrate from the first crossing; returns (closure error, sequence reproduced)."""
    t1 = cycle.times[0]
    line = cycle.sequence.lines[0]
    traj = flow_with_events(F, t1, F.line(line), t1 + TWO_PI, start_line=line)
    closure = abs(traj.end[1] - F.line(line))
    if traj.tangency_flag:
        return closure, False
    end = t1 + TWO_PI
    lines = tuple(e.line_index for e in traj.events if e.time < end - 1e-9)
    try:
        same = CrossingSequence(lines) == cycle.sequence
    except AmbiguousRegion:
        same = False
    return closure, same


# -- search -----------------------------------------------------------------------

def search_radius(F: PiecewiseField) -> float:
    """Coarse a-priori radius around the outer thresholds for the cycle search."""
    x_first = F.thresholds[0] if F.n else 0.0
    x_last = F.thresholds[-1] if F.n else 0.0
    outer = {1, F.n + 1}
    radius = 0.0
    for i in outer:
        a, b = F.piece(i)
        radius = max(radius, b.norm1 * TWO_PI * math.exp(min(TWO_PI * a.norm1, 700.0)))
    return radius + abs(x_first) + abs(x_last) + 1.0


@dataclass
class CycleSearchResult:
    x_lo: float
    x_hi: float
    grid: int
    cycles: list[LimitCycle] = dc_field(default_factory=list)
    uncertified: list[dict] = dc_field(default_factory=list)
    continua: list[tuple[float, float]] = dc_field(default_factory=list)
    constant_sign: list[ConstantSignCycle] = dc_field(default_factory=list)
    constant_sign_roots: list[float] = dc_field(default_factory=list)
    excluded: list[tuple[float, str]] = dc_field(default_factory=list)
    samples: list[tuple[float, float | None]] = dc_field(default_factory=list)


def _nudged(F: PiecewiseField, x: float) -> float:
    for xi in F.thresholds:
        if abs(x - xi) <= 10 * TOL.threshold * (1 + abs(xi)):
            return xi + 1e-9 * (1.0 + abs(xi))
    return x


def _scan_point(F: PiecewiseField, x: float):
    try:
        return displacement(F, _nudged(F, x)), None
    except ContactError as exc:
        return None, f"{type(exc).__name__} at t={exc.time:.6g}, line {exc.line}"


def _scan_chunk(args):
    F, xs = args
    return [_scan_point(F, x) for x in xs]


def _d_or_nan(F, x):
    d, _ = _scan_point(F, x)
    return math.nan if d is None else d


def _certify(F: PiecewiseField, x0: float):
    traj = flow_with_events(F, 0.0, x0, TWO_PI)
    times, X = extract_sequence(traj)
    try:
        newton = newton_refine(F, X, times)
    except SingularJacobian as exc:
        return None, {"x0": x0, "times": list(times), "sequence": list(X.lines), "reason": str(exc)}
    times = newton.times
    # value at the section from the refined last crossing
    a, b = F.piece(X.leg_piece(X.k))
    x_ref = float(piece_propagator(a, b).u(times[-1], F.line(X.lines[-1]), TWO_PI))
    if abs(x_ref - x0) < 1e-6:
        x0 = x_ref
    dp = d_prime_from_times(F, X, times)
    cycle = LimitCycle(x0, times, X, abs(dp) > TOL.simple, dp, newton.residual_norm)
    if not cycle.simple or not newton.converged or newton.residual_norm > TOL.residual_cert:
        reason = "non-simple" if not cycle.simple else "residual above certification threshold"
        return None, {**cycle.to_dict(), "reason": reason}
    return cycle, None


def search_cycles(
    F: PiecewiseField,
    x_lo: float | None = None,
    x_hi: float | None = None,
    grid: int | None = None,
    workers: int = 1,
) -> CycleSearchResult:
    """Scan the displacement map on a uniform grid and certify every zero found."""
    grid = TOL.default_grid if grid is None else int(grid)
    if x_lo is None or x_hi is None:
        R = search_radius(F)
        x_first = F.thresholds[0] if F.n else 0.0
        x_last = F.thresholds[-1] if F.n else 0.0
        x_lo = x_first - R if x_lo is None else x_lo
        x_hi = x_last + R if x_hi is None else x_hi
    if not x_lo < x_hi or grid < 2:
        raise ValueError("need x_lo < x_hi and grid >= 2")
    out = CycleSearchResult(float(x_lo), float(x_hi), grid)
    xs = np.linspace(x_lo, x_hi, grid)
    if workers > 1:
        chunks = np.array_split(xs, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scanned = [r for part in pool.map(_scan_chunk, [(F, c) for c in chunks]) for r in part]
    else:
        scanned = [_scan_point(F, x) for x in xs]
    d = np.array([np.nan if v is None else v for v, _ in scanned])
    out.samples = [(float(x), v) for x, (v, _) in zip(xs, scanned)]
    for x, (_, reason) in zip(xs, scanned):
        if reason is not None:
            out.excluded.append((float(x), reason))
    valid = ~np.isnan(d)
    zero_tol = TOL.displacement_zero * (1.0 + np.abs(xs))
    small = valid & (np.abs(np.where(valid, d, np.inf)) <= zero_tol)

    # runs of vanishing displacement are continua of periodic solutions, not isolated cycles
    in_continuum = np.zeros(grid, dtype=bool)
    j = 0
    while j < grid:
        if small[j]:
            k = j
            while k + 1 < grid and small[k + 1]:
                k += 1
            if k - j + 1 >= 3:
                in_continuum[j : k + 1] = True
                out.continua.append((float(xs[j]), float(xs[k])))
            j = k + 1
        else:
            j += 1

    f = lambda x: _d_or_nan(F, x)  # noqa: E731
    roots: list[float] = []
    for j in range(grid - 1):
        if not (valid[j] and valid[j + 1]) or in_continuum[j] or in_continuum[j + 1]:
            continue
        if d[j] == 0.0:
            roots.append(float(xs[j]))
            continue
        if d[j] * d[j + 1] < 0.0:
            try:
                r = brentq(f, xs[j], xs[j + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            except ValueError:
                out.excluded.append((float(xs[j]), "bracket lost to a tangency"))
                continue
            dr = f(r)
            if math.isnan(dr) or abs(dr) > TOL.displacement_zero * (1 + abs(r)):
                out.excluded.append((float(r), f"displacement jumps across the bracket (|d|={abs(dr):.2e})"))
                continue
            roots.append(r)
    # touching zeros: local minima of |d| without a sign change
    for j in range(1, grid - 1):
        if not (valid[j - 1] and valid[j] and valid[j + 1]) or in_continuum[j - 1 : j + 2].any():
            continue
        dm, d0, dp = d[j - 1], d[j], d[j + 1]
        if not (abs(d0) < abs(dm) and abs(d0) < abs(dp) and dm * d0 > 0 and d0 * dp > 0):
            continue
        res = minimize_scalar(lambda x: abs(f(x)) if not math.isnan(f(x)) else math.inf,
                              bounds=(xs[j - 1], xs[j + 1]), method="bounded", options={"xatol": 1e-13})
        if res.fun <= TOL.displacement_zero * (1 + abs(res.x)):
            roots.append(float(res.x))

    roots.sort()
    unique: list[float] = []
    for r in roots:
        if not unique or abs(r - unique[-1]) >= TOL.dedup:
            unique.append(r)

    for x0 in unique:
        x0 = _nudged(F, x0)
        traj = flow_with_events(F, 0.0, x0, TWO_PI)
        if not traj.events:
            out.constant_sign_roots.append(x0)
            continue
        try:
            cycle, problem = _certify(F, x0)
        except (NoConvergence, NotPeriodic, NonTransversal, DivisionNearZero, OnSwitchingLine) as exc:
            out.uncertified.append({"x0": x0, "reason": f"{type(exc).__name__}: {exc}"})
            continue
        if cycle is not None:
            out.cycles.append(cycle)
        else:
            out.uncertified.append(problem)
    out.constant_sign = constant_sign_cycles(F)
    return out


def find_cycles(F: PiecewiseField, x_lo: float | None = None, x_hi: float | None = None,
                grid: int | None = None, workers: int = 1) -> list[LimitCycle]:
    """Certified simple crossing (sign-changing) limit cycles found by :func:`search_cycles`."""
    return search_cycles(F, x_lo, x_hi, grid, workers).cycles
