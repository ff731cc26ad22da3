"""Stokes curves of a polynomial potential, traced and classified.

A Stokes curve from a simple turning point x_t is a connected component of
Im[S(x) - S(x_t)] = 0.  In the action plane these curves are horizontal rays
through S(x_t), so the tracer follows a real ray in relative action and lifts
it back through dx/du = 1/p.  Curves whose relative Re action grows away from
the turning point are classified 'right', the others 'left'.

Curves carry their relative actions and branch values along the trace; those
are the only data later needed to transfer the limit value S(x_t) onto
whatever sheet a path crosses the curve on.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._lift import lift_action_path
from .errors import SaddleConnection, TurningPointCollision
from .potential import (
    CoverPoint,
    Polynomial,
    action_into_turning_point,
    cover_point,
    coefficient_scale,
    find_turning_points,
    turning_point_tolerance,
)

TAKEOFF_FACTOR = 1e-3


@dataclass(frozen=True)
class TurningPoint:
    index: int
    location: complex
    vprime: complex
    action_at: complex  # limit of S along the reference path from x0


@dataclass
class StokesCurve:
    index: int
    origin: int
    direction_index: int
    orientation: str  # 'right' / 'left'
    samples: np.ndarray
    rel_actions: np.ndarray  # real S(sample) - S(x_t) along the trace
    branches: np.ndarray
    virtual: bool = False
    vertex: complex = 0j  # traced-from point (turning point or x_v)

    def to_json(self) -> dict:
        return {
            "id": self.index,
            "origin": self.origin,
            "direction_index": self.direction_index,
            "orientation": self.orientation,
            "virtual": self.virtual,
            "samples": [[z.real, z.imag] for z in self.samples],
        }


def takeoff_radius(x_t: complex) -> float:
    return TAKEOFF_FACTOR * (1.0 + abs(x_t))


def local_directions(vprime: complex) -> list:
    """The three takeoff angles where Im of the local action model vanishes.

    Near a simple zero, S - S(x_t) ~ (2/3) sqrt(V'(x_t)) (x - x_t)^{3/2}; the
    level Im = 0 leaves along angles (2k*pi - arg V'(x_t)) / 3, with the Re
    sign alternating as (-1)^k.
    """
    phi = cmath.phase(vprime)
    return [(2.0 * math.pi * k - phi) / 3.0 for k in range(3)]


def _seed_on_curve(poly: Polynomial, x_t: complex, theta: float, want_sign: int):
    """Take off at distance r0 and Newton the seed onto the exact level set."""
    r0 = takeoff_radius(x_t)
    x_s = x_t + r0 * cmath.exp(1j * theta)
    p_s = cmath.sqrt(poly(x_s))
    rel = -action_into_turning_point(poly, x_s, p_s, x_t)
    if rel.real * want_sign < 0:
        p_s, rel = -p_s, -rel
    # transverse Newton: kill Im(rel) moving along i*exp(i theta)
    v = 1j * cmath.exp(1j * theta)
    for _ in range(6):
        if abs(rel.imag) <= 1e-13 * (1.0 + abs(rel)):
            break
        slope = (p_s * v).imag
        if slope == 0.0:
            break
        x_s = x_s - v * rel.imag / slope
        p_s_new = cmath.sqrt(poly(x_s))
        if abs(p_s_new - p_s) > abs(p_s_new + p_s):
            p_s_new = -p_s_new
        p_s = p_s_new
        rel = -action_into_turning_point(poly, x_s, p_s, x_t)
        if rel.real * want_sign < 0:
            raise TurningPointCollision("seed correction flipped curve direction")
    return x_s, p_s, rel.real


def trace_curve(
    poly: Polynomial,
    tp: TurningPoint,
    direction_index: int,
    r_max: float,
    *,
    max_du: Optional[float] = None,
) -> StokesCurve:
    """Trace one Stokes curve out to |x| = r_max.

    Raises SaddleConnection when the trace enters the guard disk of another
    turning point; that violates the unboundedness assumption the rest of the
    pipeline relies on.
    """
    tps = find_turning_points(poly)
    theta = local_directions(tp.vprime)[direction_index]
    want_sign = 1 if direction_index % 2 == 0 else -1
    x_s, p_s, rel0 = _seed_on_curve(poly, tp.location, theta, want_sign)

    reach = (r_max + abs(tp.location) + 1.0) * math.sqrt(
        coefficient_scale(poly, r_max)
    )
    target = rel0 + want_sign * reach
    if max_du is None:
        max_du = 0.08 * (1.0 + r_max)

    def stop(x, _u):
        return "rmax" if abs(x) > r_max else None

    res = lift_action_path(
        poly,
        x_s,
        p_s,
        complex(rel0),
        [complex(target)],
        stop=stop,
        guard_stop=True,
        max_du=max_du,
        max_dx=0.05 * (1.0 + r_max),
    )
    if res.stop == "turning_point":
        other = tps[res.stop_index]
        raise SaddleConnection(
            f"curve from turning point {tp.location} runs into {other}"
        )
    if res.stop != "rmax":
        raise TurningPointCollision(
            f"trace from {tp.location} ended before reaching |x|={r_max}"
        )
    orientation = "right" if want_sign > 0 else "left"
    return StokesCurve(
        index=-1,
        origin=tp.index,
        direction_index=direction_index,
        orientation=orientation,
        samples=np.array(res.xs, dtype=complex),
        rel_actions=np.array([u.real for u in res.us], dtype=float),
        branches=np.array(res.ps, dtype=complex),
        vertex=tp.location,
    )


@dataclass
class StokesGraph:
    poly: Polynomial
    x0: complex
    base_branch: complex
    turning_points: list
    curves: list
    r_max: float
    _curve_arrays: dict = field(default_factory=dict, repr=False)

    def curve(self, index: int) -> StokesCurve:
        return self.curves[index]

    def base_point(self) -> CoverPoint:
        return cover_point(self.poly, [self.x0], self.base_branch)

    def segment_crossings(self, a: complex, b: complex, curves: Sequence[StokesCurve]):
        """Transversal crossings of segment a->b with the given curves.

        Returns a list of (t_on_segment, curve, sample_index, side) sorted by
        t; side is +1 when the segment crosses toward the left of the curve's
        own direction, -1 toward the right.
        """
        out = []
        d = b - a
        if d == 0:
            return out
        for curve in curves:
            pts = curve.samples
            if len(pts) < 2:
                continue
            P = pts[:-1]
            Q = pts[1:]
            # orientation of curve endpoints relative to the segment's line
            ca = (d.real * (P.imag - a.imag) - d.imag * (P.real - a.real))
            cb = (d.real * (Q.imag - a.imag) - d.imag * (Q.real - a.real))
            straddle = (ca > 0) != (cb > 0)
            if not straddle.any():
                continue
            idx = np.nonzero(straddle)[0]
            for i in idx:
                A = pts[i]
                B = pts[i + 1]
                e = B - A
                denom = d.real * e.imag - d.imag * e.real
                if denom == 0.0:
                    continue
                w = A - a
                t = (w.real * e.imag - w.imag * e.real) / denom
                s = (w.real * d.imag - w.imag * d.real) / denom
                if 0.0 < t <= 1.0 and 0.0 <= s <= 1.0:
                    side = 1 if (e.real * d.imag - e.imag * d.real) > 0 else -1
                    out.append((t, curve, int(i), side))
        out.sort(key=lambda ev: ev[0])
        return out

    def min_curve_distance(self, z: complex, curves: Sequence[StokesCurve]) -> float:
        best = math.inf
        for curve in curves:
            d = polyline_distance(z, curve.samples)
            if d < best:
                best = d
        return best

    def to_json(self) -> dict:
        return {
            "x0": [self.x0.real, self.x0.imag],
            "r_max": self.r_max,
            "turning_points": [
                {
                    "id": t.index,
                    "location": [t.location.real, t.location.imag],
                    "action": [t.action_at.real, t.action_at.imag],
                }
                for t in self.turning_points
            ],
            "curves": [c.to_json() for c in self.curves],
        }


def _reference_path(poly: Polynomial, x0: complex, x_t: complex, others):
    """Polyline from x0 stopping at takeoff distance from x_t."""
    r0 = takeoff_radius(x_t)
    d = x0 - x_t
    if abs(d) <= r0:
        raise TurningPointCollision("base point too close to a turning point")
    x_near = x_t + r0 * d / abs(d)
    guard = 4.0 * turning_point_tolerance(others + [x_t])
    for bend in (0.0, 0.35, -0.35, 0.8, -0.8, 1.5, -1.5):
        mid = 0.5 * (x0 + x_near) + bend * 1j * (x_near - x0)
        verts = [x0, x_near] if bend == 0.0 else [x0, mid, x_near]
        ok = True
        for u, v in zip(verts, verts[1:]):
            for t in others:
                if _seg_dist(t, u, v) < guard:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return verts, x_near
    raise TurningPointCollision(f"no clear reference path from {x0} to {x_t}")


def _seg_dist(p, a, b):
    ab = b - a
    den = abs(ab) ** 2
    if den == 0.0:
        return abs(p - a)
    t = min(1.0, max(0.0, ((p - a) * ab.conjugate()).real / den))
    return abs(p - (a + t * ab))


def polyline_distance(z: complex, samples: np.ndarray) -> float:
    """Exact distance from z to the polyline through the samples."""
    if len(samples) == 0:
        return math.inf
    if len(samples) == 1:
        return float(abs(z - samples[0]))
    P = samples[:-1]
    Q = samples[1:]
    ab = Q - P
    den = np.abs(ab) ** 2
    den = np.where(den == 0.0, 1.0, den)
    t = np.clip(((z - P) * np.conj(ab)).real / den, 0.0, 1.0)
    proj = P + t * ab
    return float(np.abs(z - proj).min())


def build_stokes_graph(poly: Polynomial, x0: complex, r_max: Optional[float] = None) -> StokesGraph:
    """Turning points, reference actions, and all 3n Stokes curves."""
    if abs(poly(x0)) == 0.0:
        raise ValueError("V(x0) must be nonzero")
    roots = find_turning_points(poly)
    if r_max is None:
        r_max = 10.0 * (1.0 + max(abs(r) for r in roots))
    dpoly = poly.derivative()
    base_branch = cmath.sqrt(poly(x0))
    tps = []
    for k, r in enumerate(roots):
        others = [z for z in roots if z != r]
        verts, x_near = _reference_path(poly, x0, r, others)
        pt = cover_point(poly, verts, base_branch)
        a_t = pt.action + action_into_turning_point(poly, x_near, pt.branch_p, r)
        tps.append(TurningPoint(index=k, location=r, vprime=dpoly(r), action_at=a_t))
    curves = []
    for tp in tps:
        for k in range(3):
            c = trace_curve(poly, tp, k, r_max)
            c.index = len(curves)
            curves.append(c)
    return StokesGraph(
        poly=poly,
        x0=complex(x0),
        base_branch=base_branch,
        turning_points=tps,
        curves=curves,
        r_max=float(r_max),
    )


@dataclass
class AssumptionReport:
    unbounded_curves: bool
    searched_bound: int
    tolerance: float
    near_violations: list  # [(vector, |Im sum|)]

    @property
    def ok(self) -> bool:
        return self.unbounded_curves and not self.near_violations

    def to_json(self) -> dict:
        return {
            "unbounded_curves": self.unbounded_curves,
            "integer_bound": self.searched_bound,
            "tolerance": self.tolerance,
            "near_violations": [
                {"vector": list(v), "imag_combination": val}
                for v, val in self.near_violations
            ],
        }


def check_assumptions(graph: StokesGraph, integer_bound: int = 5, tol: float = 1e-9) -> AssumptionReport:
    """Heuristic independence check over small integer combinations.

    Exact rational independence of the Im S(x_t) values is undecidable in
    floating point, so near-violations are reported as warnings rather than
    errors; curve unboundedness was already enforced by the tracer.
    """
    ims = [t.action_at.imag for t in graph.turning_points]
    n = len(ims)
    scale = 1.0 + max(abs(t.action_at) for t in graph.turning_points)
    violations = []
    ranges = [range(-integer_bound, integer_bound + 1)] * n

    def rec(i, vec, acc, total):
        if i == n:
            if total and abs(acc) < tol * scale:
                violations.append((tuple(vec), abs(acc)))
            return
        for m in ranges[i]:
            if total + abs(m) > integer_bound:
                continue
            vec.append(m)
            rec(i + 1, vec, acc + m * ims[i], total + abs(m))
            vec.pop()

    rec(0, [], 0.0, 0)
    violations.sort()
    return AssumptionReport(
        unbounded_curves=True,
        searched_bound=integer_bound,
        tolerance=tol,
        near_violations=violations,
    )
