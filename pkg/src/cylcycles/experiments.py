"""Model families used by the reproduction checks.

Each ``run_*`` function returns a JSON-ready dict with a boolean ``pass``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from .cycles import reflow_check, search_cycles
from .field import PiecewiseField, make_field, perturb, two_region
from .flow import constant_sign_cycles, flow_with_events
from .trigpoly import TWO_PI, TrigPoly


def harmonic_abs_field(k: int, eps: float) -> PiecewiseField:
    """``x' = sin t + (eps/2π) cos(kt) |x|`` as a two-region field about ``x = 0``."""
    a = TrigPoly.cos(k, eps / TWO_PI)
    b = TrigPoly.sin(1)
    return two_region(a, b, -a, b)


def absolute_value_field(a: TrigPoly, b: TrigPoly) -> PiecewiseField:
    """``x' = a(t)|x| + b(t)``."""
    return two_region(a, b, -a, b)


def max_crossings_field(M: int, n: int) -> PiecewiseField:
    """Lines ``x_i = i`` with every piece equal to ``x' = -M(n+1) sin(Mt)``.

    All solutions are ``(n+1) cos(Mt) + C``.
    """
    b = TrigPoly.sin(M, -M * (n + 1.0))
    return make_field([float(i) for i in range(1, n + 1)], [(TrigPoly(), b)] * (n + 1))


def max_crossings_times(M: int, n: int, C: float | None = None) -> list[tuple[float, int]]:
    """Sorted ``(time, line)`` pairs where ``(n+1) cos(Mt) + C`` meets ``x_i = i`` in ``(0, 2π)``."""
    C = (n + 1) / 2.0 if C is None else C
    out = []
    for i in range(1, n + 1):
        c = (i - C) / (n + 1.0)
        if abs(c) >= 1:
            continue
        base = math.acos(c)
        for j in range(M):
            for theta in (base, TWO_PI - base):
                out.append(((theta + TWO_PI * j) / M, i))
    return sorted(out)


def random_trig(rng: np.random.Generator, degree: int, scale: float = 1.0) -> TrigPoly:
    return TrigPoly(rng.uniform(-scale, scale), rng.uniform(-scale, scale, degree), rng.uniform(-scale, scale, degree))


def _perturbed(F: PiecewiseField, rng: np.random.Generator, size: float) -> PiecewiseField:
    M = F.M
    pieces = [(p.a + random_trig(rng, M, size), p.b + random_trig(rng, M, size)) for p in F.pieces]
    return make_field(F.thresholds, pieces)


def run_harmonic_abs(k: int = 5, eps: float = 0.1, grid: int = 2048, workers: int = 1) -> dict:
    F = harmonic_abs_field(k, eps)
    res = search_cycles(F, grid=grid, workers=workers)
    cycles = []
    ok = True
    for c in res.cycles:
        closure, same = reflow_check(F, c)
        good = c.residual_norm <= 1e-9 and closure <= 1e-9 and same
        ok &= good
        cycles.append({**c.to_dict(), "reflow_closure": closure, "reflow_sequence_ok": same})
    expected = max(k - 2, 0)
    return {
        "experiment": "coll",
        "k": k,
        "eps": eps,
        "grid": grid,
        "expected_at_least": expected,
        "found": len(res.cycles),
        "cycles": cycles,
        "uncertified": res.uncertified,
        "pass": bool(ok and len(res.cycles) >= expected),
    }


def run_max_crossings(M: int = 3, n: int = 2, trials: int = 10, size: float = 1e-3, seed: int = 0) -> dict:
    F = max_crossings_field(M, n)
    C = (n + 1) / 2.0
    x0 = (n + 1) + C
    traj = flow_with_events(F, 0.0, x0, TWO_PI)
    events = traj.transversal_events
    expected = max_crossings_times(M, n, C)
    count_ok = len(events) == 2 * M * n == len(traj.events)
    err = math.inf
    if count_ok:
        err = max(abs(e.time - t) for e, (t, _) in zip(events, expected))
        if any(e.line_index != i for e, (_, i) in zip(events, expected)):
            err = math.inf
    rng = np.random.default_rng(seed)
    counts = []
    for _ in range(trials):
        G = _perturbed(F, rng, size)
        tr = flow_with_events(G, 0.0, x0, TWO_PI)
        counts.append(len(tr.transversal_events) if not tr.tangency_flag else -1)
    return {
        "experiment": "max-crossings",
        "M": M,
        "n": n,
        "x0": x0,
        "events": len(events),
        "expected_events": 2 * M * n,
        "max_time_error": err,
        "perturbed_counts": counts,
        "pass": bool(count_ok and err <= 1e-9 and all(c == 2 * M * n for c in counts)),
    }


def _monodromy_ode(a: TrigPoly, b: TrigPoly) -> tuple[float, float]:
    """Period map coefficients by direct ODE integration (independent of the quadrature route)."""
    def rhs(t, y):
        return [a(t) * y[0] + b(t), a(t) * y[1]]

    sol = solve_ivp(rhs, (0.0, TWO_PI), [0.0, 1.0], method="DOP853", rtol=1e-13, atol=1e-14)
    B, A = sol.y[0, -1], sol.y[1, -1]
    return float(A), float(B)


def run_constant_sign(trials: int = 100, max_degree: int = 3, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0
    for _ in range(trials):
        m = int(rng.integers(0, max_degree + 1))
        F = two_region(*(random_trig(rng, m) for _ in range(4)))
        isolated = [c for c in constant_sign_cycles(F) if c.kind == "isolated"]
        worst = max(worst, len(isolated))
    fixed_err = 0.0
    for _ in range(trials):
        m = int(rng.integers(0, max_degree + 1))
        a, b = random_trig(rng, m), random_trig(rng, m)
        if abs(a.a0) < 1e-3:
            continue
        F = make_field([], [(a, b)])
        A, B = _monodromy_ode(a, b)
        cyc = [c for c in constant_sign_cycles(F) if c.kind == "isolated"]
        target = B / (1.0 - A)
        if len(cyc) != 1:
            fixed_err = math.inf
            break
        fixed_err = max(fixed_err, abs(cyc[0].x_star - target))
    return {
        "experiment": "constant-sign",
        "trials": trials,
        "max_isolated": worst,
        "single_piece_max_error": fixed_err,
        "pass": bool(worst <= 2 and fixed_err <= 1e-9),
    }


def run_positive_forcing(trials: int = 20, max_degree: int = 2, grid: int = 1024, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(trials):
        m = int(rng.integers(1, max_degree + 1))
        a = random_trig(rng, m, 0.3)
        b = TrigPoly(rng.uniform(0.1, 1.0))
        res = search_cycles(absolute_value_field(a, b), grid=grid)
        found.append(len(res.cycles))
    return {"experiment": "gasull", "trials": trials, "sign_changing_found": found, "pass": sum(found) == 0}


def persistence(F: PiecewiseField, x0: float, lam: float, window: float = 1e-2, grid: int = 64):
    """Certified cycle of the ``lam``-perturbed field nearest ``x0`` within ``window``, or ``None``."""
    res = search_cycles(perturb(F, lam), x0 - window, x0 + window, grid)
    if not res.cycles:
        return None
    return min(res.cycles, key=lambda c: abs(c.x0 - x0))
