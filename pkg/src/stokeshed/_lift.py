"""Lifting of action-plane polylines back to the x-plane.

The map u = S(x) is locally invertible away from turning points, so a route
drawn in the u-plane can be followed in x by integrating dx/du = 1/p(x) with
the branch of p continued along the way.  Every step is Newton-projected back
onto the exact level S(x) = u, which keeps the lift on the level set to
quadrature accuracy regardless of step size.  The Stokes tracer, the virtual
curve tracer, and all integration-path constructors are built on this one
primitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .errors import QuadratureNonConvergence, TurningPointCollision
from .potential import (
    Polynomial,
    _action_panel,
    _matched_sqrt,
    _point_segment_distance,
    find_turning_points,
    turning_point_tolerance,
)

_JUMP = 0.75


@dataclass
class LiftResult:
    xs: list = field(default_factory=list)
    ps: list = field(default_factory=list)
    us: list = field(default_factory=list)
    stop: Optional[str] = None
    stop_index: Optional[int] = None


def lift_action_path(
    poly: Polynomial,
    x0: complex,
    p0: complex,
    u0: complex,
    u_targets: Sequence[complex],
    *,
    max_dx: Optional[float] = None,
    max_du: Optional[float] = None,
    tp_guard: Optional[float] = None,
    guard_stop: bool = False,
    stop: Optional[Callable[[complex, complex], Optional[str]]] = None,
    newton_tol: float = 1e-12,
) -> LiftResult:
    """Follow the u-polyline [u0, *u_targets] in the x-plane.

    guard_stop=True turns a turning-point approach into a recorded stop code
    instead of an exception (used by the tracer to flag saddle connections).
    stop(x, u) may return a code to end the lift early.
    """
    tps = find_turning_points(poly) if poly.degree >= 1 else []
    if tp_guard is None:
        tp_guard = turning_point_tolerance(tps) if tps else 0.0
    scale = 1.0 + max([abs(t) for t in tps] + [abs(x0)])
    if max_dx is None:
        max_dx = 0.25 * scale
    if max_du is None:
        max_du = 0.35 * (1.0 + abs(u0))

    out = LiftResult(xs=[x0], ps=[p0], us=[u0])
    x, p, u = x0, p0, u0

    for ub in u_targets:
        ua = u
        seg = ub - ua
        length = abs(seg)
        if length == 0.0:
            continue
        e = seg / length
        ell = 0.0
        h = min(length, max_du, 0.1 * length + 1e-30)
        hmin = max(length * 1e-13, 1e-300)
        while ell < length - 1e-13 * length:
            h = min(h, length - ell)
            ok, x_new, p_new, reason = _rk_step(poly, x, p, e, h, max_dx)
            if ok:
                guard_hit = _chord_guard(tps, x, x_new, tp_guard)
                if guard_hit is not None:
                    if guard_stop:
                        out.stop = "turning_point"
                        out.stop_index = guard_hit
                        return out
                    raise TurningPointCollision(
                        f"lift approached turning point {tps[guard_hit]}"
                    )
                u_target = ua + (ell + h) * e
                ok2, x_new, p_new = _project(
                    poly, x, p, x_new, p_new, u, u_target, newton_tol
                )
                if ok2:
                    x, p, u = x_new, p_new, u_target
                    ell += h
                    out.xs.append(x)
                    out.ps.append(p)
                    out.us.append(u)
                    if stop is not None:
                        code = stop(x, u)
                        if code:
                            out.stop = code
                            return out
                    h = min(h * 1.5, max_du)
                    continue
            h *= 0.5
            if h < hmin:
                raise QuadratureNonConvergence(
                    f"lift step collapsed near x={x} (u={u})"
                )
    return out


def _rk_step(poly, x, p, e, h, max_dx):
    """Classical RK4 on dx/du = e/p with branch chained between stages."""
    try:
        p1 = _matched_sqrt(poly(x), p)
        if _jumped(p1, p):
            return False, x, p, "jump"
        k1 = h * e / p1
        p2 = _matched_sqrt(poly(x + 0.5 * k1), p1)
        if _jumped(p2, p1):
            return False, x, p, "jump"
        k2 = h * e / p2
        p3 = _matched_sqrt(poly(x + 0.5 * k2), p2)
        if _jumped(p3, p2):
            return False, x, p, "jump"
        k3 = h * e / p3
        p4 = _matched_sqrt(poly(x + k3), p3)
        if _jumped(p4, p3):
            return False, x, p, "jump"
        k4 = h * e / p4
    except ZeroDivisionError:
        return False, x, p, "zero"
    x_new = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    if abs(x_new - x) > max_dx:
        return False, x, p, "dx"
    p_new = _matched_sqrt(poly(x_new), p4)
    if _jumped(p_new, p4):
        return False, x, p, "jump"
    return True, x_new, p_new, ""


def _jumped(a, b):
    return abs(b) == 0.0 or abs(a / b - 1.0) >= _JUMP


def _project(poly, x, p, x_new, p_new, u, u_target, newton_tol):
    """Newton-correct x_new so that the action increment lands on u_target."""
    tol = newton_tol * (1.0 + abs(u_target))
    for _ in range(8):
        inc, p_end = _action_panel(poly, x, p, x_new)
        err = (u + inc) - u_target
        if abs(err) <= tol:
            return True, x_new, p_end
        if abs(p_end) == 0.0:
            return False, x_new, p_end
        step = err / p_end
        if abs(step) > 0.5 * abs(x_new - x) + 1e-12 * (1.0 + abs(x_new)):
            return False, x_new, p_end
        x_new = x_new - step
        p_new = _matched_sqrt(poly(x_new), p_end)
    return False, x_new, p_new


def _chord_guard(tps, a, b, radius):
    for k, t in enumerate(tps):
        if _point_segment_distance(t, a, b) < radius:
            return k
    return None


def decimate_polyline(points: Sequence[complex], tol: float) -> list:
    """Douglas-Peucker reduction of a dense polyline; endpoints preserved."""
    pts = list(points)
    if len(pts) <= 2:
        return pts
    keep = [False] * len(pts)
    keep[0] = keep[-1] = True
    stack = [(0, len(pts) - 1)]
    while stack:
        i, k = stack.pop()
        if k - i < 2:
            continue
        a, b = pts[i], pts[k]
        worst, at = -1.0, -1
        for m in range(i + 1, k):
            d = _point_segment_distance(pts[m], a, b)
            if d > worst:
                worst, at = d, m
        if worst > tol:
            keep[at] = True
            stack.append((i, at))
            stack.append((at, k))
    return [p for p, k in zip(pts, keep) if k]
