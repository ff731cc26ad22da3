"""Stokes regions, subregions, and the first-sheet singularity calculus.

Each subregion of the cover carries two sets of singularity functions of the
form sigma(x) = c + eps*S(x).  Crossing an actual Stokes curve reflects one
family through the limit value of sigma at the curve's turning point: a
'left' curve (Re S decaying away from the turning point) adds reflections of
the plus family into the minus family, a 'right' curve the mirror image.
Virtual curves refine regions into subregions without changing the sets.

Subregions are identified by reduced crossing words along a realizing path
from the base point, which makes the bookkeeping exact on the universal
cover: re-crossing a curve pops the previous crossing, and winding around a
turning point shows up as a longer word rather than a merge.

A note on the virtual curve level: the defining level set is read through
the virtual turning point x_v itself (Im[S(x) - S(x_v)] = 0), although one
formulation elsewhere writes the anchor as a turning point; the two readings
differ and the x_v one is the only one that splits where the Im-order of the
colliding pair actually swaps.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ._lift import lift_action_path
from .errors import (
    ConsistencyFailure,
    NewtonNonConvergence,
    OnBoundary,
    TurningPointCollision,
    QuadratureNonConvergence,
)
from .potential import (
    CoverPoint,
    Polynomial,
    action_and_branch,
    cover_path,
    cover_point,
    extend_cover_point,
    find_turning_points,
    homotopy_word,
)
from .stokesgraph import StokesCurve, StokesGraph

SIGMA_MERGE_TOL = 1e-9


class Singularity(NamedTuple):
    """One first-sheet singularity sigma(x) = c + eps*S(x)."""

    eps: int
    c: complex
    provenance: tuple = ()

    def value(self, s_of_x: complex) -> complex:
        return self.c + self.eps * s_of_x


def reflect(sig: Singularity, turning_action: complex, tp_index: int) -> Singularity:
    """2*sigma(x_t) - sigma(x), i.e. (eps, c) -> (-eps, c + 2*eps*S(x_t))."""
    return Singularity(
        -sig.eps,
        sig.c + 2.0 * sig.eps * turning_action,
        sig.provenance + (tp_index,),
    )


def _merge(existing: list, new: Singularity) -> None:
    for k, s in enumerate(existing):
        if s.eps == new.eps and abs(s.c - new.c) <= SIGMA_MERGE_TOL * (1.0 + abs(s.c)):
            return
    existing.append(new)


def cross_sigma(sigma_plus, sigma_minus, orientation: str, turning_action: complex,
                tp_index: int = -1):
    """Reflection step of the singularity calculus across one Stokes curve.

    'left' leaves the plus family unchanged and adds reflections of it to the
    minus family; 'right' is the mirror image.  Duplicates (same eps, c
    within 1e-9) merge.
    """
    plus = list(sigma_plus)
    minus = list(sigma_minus)
    if orientation == "left":
        for s in sigma_plus:
            _merge(minus, reflect(s, turning_action, tp_index))
    elif orientation == "right":
        for s in sigma_minus:
            _merge(plus, reflect(s, turning_action, tp_index))
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return tuple(plus), tuple(minus)


class WordStep(NamedTuple):
    kind: str  # 's' actual, 'v' virtual
    curve: int
    side: int


@dataclass(frozen=True)
class CrossingEvent:
    step: WordStep
    at: complex             # crossing point in the x-plane
    turning_action: complex  # limit of S at the curve vertex on this sheet
    orientation: str         # effective class on this sheet
    trace_sign: int          # +1: path branch equals trace branch at the crossing
    winding_ccw: bool        # base, curve, far-side ordered counterclockwise


BASE_PLUS = (Singularity(1, 0j),)
BASE_MINUS = (Singularity(-1, 0j),)


@dataclass
class Subregion:
    index: int
    word: tuple  # (base_side, WordStep...)
    sigma_plus: tuple
    sigma_minus: tuple
    sample: CoverPoint
    events: tuple  # CrossingEvent per 's' step, aligned with word order
    depth: int
    extra_samples: list = field(default_factory=list)

    @property
    def sigma(self):
        return self.sigma_plus + self.sigma_minus

    def region_key(self) -> tuple:
        return _region_key(self.word)

    def im_order(self, pt: Optional[CoverPoint] = None):
        pt = pt or self.sample
        vals = [(sig.value(pt.action).imag, k) for k, sig in enumerate(self.sigma)]
        vals.sort()
        return tuple(k for _, k in vals)

    def to_json(self) -> dict:
        return {
            "id": self.index,
            "word": [self.word[0]] + [list(w) for w in self.word[1:]],
            "sigma": [
                {
                    "eps": s.eps,
                    "c": [s.c.real, s.c.imag],
                    "provenance": list(s.provenance),
                }
                for s in self.sigma
            ],
            "sample": [self.sample.endpoint.real, self.sample.endpoint.imag],
        }


def _region_key(word: tuple) -> tuple:
    steps = [w for w in word[1:] if w.kind == "s"]
    stack: list = []
    for s in steps:
        if stack and stack[-1].curve == s.curve and stack[-1].side == -s.side:
            stack.pop()
        else:
            stack.append(s)
    return tuple(stack)


class RegionComplex:
    """Lazily extended atlas of subregions over the truncated cover."""

    def __init__(self, graph: StokesGraph):
        self.graph = graph
        self.poly = graph.poly
        self.subregions: dict = {}
        self.by_id: list = []
        self._virtuals: dict = {}
        self._virtual_count = 0
        self._lock = threading.Lock()
        self._base_curve = None
        self._init_base()

    # -- construction ----------------------------------------------------

    def _init_base(self):
        g = self.graph
        x0, p0 = g.x0, g.base_branch
        self._base_curve = self._trace_virtual(
            cover_point(self.poly, [x0], p0), 0j, pair=(BASE_PLUS[0], BASE_MINUS[0])
        )
        step = 0.05 * (1.0 + abs(x0))
        d = 1j * p0.conjugate() / abs(p0)
        for side, direction in ((1, d), (-1, -d)):
            sample = self._safe_probe(cover_point(self.poly, [x0], p0), direction, step)
            sub = Subregion(
                index=len(self.by_id),
                word=(side,),
                sigma_plus=BASE_PLUS,
                sigma_minus=BASE_MINUS,
                sample=sample,
                events=(),
                depth=0,
            )
            self.subregions[sub.word] = sub
            self.by_id.append(sub)

    def _safe_probe(self, pt: CoverPoint, direction: complex, step: float) -> CoverPoint:
        for scale in (1.0, 0.5, 0.25):
            try:
                return extend_cover_point(
                    self.poly, pt, [pt.endpoint + direction * step * scale]
                )
            except (TurningPointCollision, QuadratureNonConvergence):
                continue
        raise TurningPointCollision("cannot place a sample near the base point")

    def base_subregion(self, side: int) -> Subregion:
        return self.subregions[(side,)]

    # -- virtual curves ---------------------------------------------------

    def virtual_curves(self, key: tuple, context: "RegionWalk") -> list:
        """Virtual curves of the Stokes region identified by key."""
        if key in self._virtuals:
            return self._virtuals[key]
        with self._lock:
            if key in self._virtuals:
                return self._virtuals[key]
            curves = self._build_virtuals(key, context)
            self._virtuals[key] = curves
            return curves

    def _build_virtuals(self, key: tuple, context: "RegionWalk") -> list:
        if key == ():
            return [self._base_curve]
        plus, minus = context.sigma_plus, context.sigma_minus
        anchor = context.point()
        clearance = 1e-5 * (1.0 + self.graph.r_max)
        out = []
        seen_targets: list = []
        for sp in plus:
            for sm in minus:
                u_v = (sm.c - sp.c) / 2.0
                if any(abs(u_v - t) <= SIGMA_MERGE_TOL * (1.0 + abs(u_v)) for t in seen_targets):
                    continue
                try:
                    vertex = self._newton_to_action(anchor, u_v)
                except (NewtonNonConvergence, TurningPointCollision, QuadratureNonConvergence):
                    continue
                if vertex is None:
                    continue
                # collisions on the region boundary do not refine the region
                if self.graph.min_curve_distance(vertex.endpoint, self.graph.curves) < clearance:
                    continue
                seen_targets.append(u_v)
                try:
                    out.append(self._trace_virtual(vertex, u_v, pair=(sp, sm)))
                except (TurningPointCollision, QuadratureNonConvergence):
                    continue
        return out

    def _newton_to_action(self, anchor: CoverPoint, u_target: complex):
        """Lift a straight action segment; None when it leaves the region."""
        res = lift_action_path(
            self.poly,
            anchor.endpoint,
            anchor.branch_p,
            anchor.action,
            [u_target],
            max_dx=0.2 * (1.0 + self.graph.r_max),
        )
        xs = res.xs
        # discard if the route left the region (crossed an actual curve)
        for a, b in zip(xs, xs[1:]):
            if self.graph.segment_crossings(a, b, self.graph.curves):
                return None
            if abs(b) > self.graph.r_max:
                return None
        verts = tuple(anchor.vertices) + tuple(xs[1:])
        hw = homotopy_word(find_turning_points(self.poly), verts)
        return CoverPoint(xs[-1], res.ps[-1], res.us[-1], verts, hw)

    def _trace_virtual(self, vertex: CoverPoint, u_v: complex, pair) -> StokesCurve:
        g = self.graph
        reach = (g.r_max + 1.0) * math.sqrt(
            1.0 + max(abs(c) for c in self.poly.coefficients)
        ) * (1.0 + g.r_max)

        def stop(x, _u):
            return "rmax" if abs(x) > g.r_max else None

        legs = []
        for direction in (1.0, -1.0):
            res = lift_action_path(
                self.poly,
                vertex.endpoint,
                vertex.branch_p,
                vertex.action,
                [vertex.action + direction * reach],
                stop=stop,
                guard_stop=True,
                max_du=0.08 * (1.0 + g.r_max),
                max_dx=0.05 * (1.0 + g.r_max),
            )
            xs, ps, us = res.xs, res.ps, res.us
            cut = len(xs)
            for i in range(len(xs) - 1):
                if g.segment_crossings(xs[i], xs[i + 1], g.curves):
                    cut = i + 2
                    break
            legs.append((xs[:cut], ps[:cut], us[:cut]))
        left, right = legs[1], legs[0]
        xs = list(reversed(left[0])) + right[0][1:]
        ps = list(reversed(left[1])) + right[1][1:]
        us = list(reversed(left[2])) + right[2][1:]
        self._virtual_count += 1
        return StokesCurve(
            index=10_000 + self._virtual_count,
            origin=-1,
            direction_index=-1,
            orientation="virtual",
            samples=np.array(xs, dtype=complex),
            rel_actions=np.array([(u - u_v).real for u in us], dtype=float),
            branches=np.array(ps, dtype=complex),
            virtual=True,
            vertex=vertex.endpoint,
        )

    def virtual_curve_by_id(self, index: int) -> StokesCurve:
        if self._base_curve is not None and index == self._base_curve.index:
            return self._base_curve
        for curves in self._virtuals.values():
            for c in curves:
                if c.index == index:
                    return c
        raise KeyError(index)

    def curve_by_step(self, step: WordStep) -> StokesCurve:
        if step.kind == "s":
            return self.graph.curve(step.curve)
        return self.virtual_curve_by_id(step.curve)

    # -- registration / lookup -------------------------------------------

    def register(self, walk: "RegionWalk") -> Subregion:
        word = walk.word()
        sub = self.subregions.get(word)
        if sub is not None:
            self._consistency_check(sub, walk)
            return sub
        with self._lock:
            sub = self.subregions.get(word)
            if sub is not None:
                return sub
            sub = Subregion(
                index=len(self.by_id),
                word=word,
                sigma_plus=walk.sigma_plus,
                sigma_minus=walk.sigma_minus,
                sample=walk.point(),
                events=tuple(walk.events),
                depth=len(word) - 1,
                )
            self.subregions[word] = sub
            self.by_id.append(sub)
            return sub

    def _consistency_check(self, sub: Subregion, walk: "RegionWalk") -> None:
        a = {(s.eps, round(s.c.real, 7), round(s.c.imag, 7)) for s in sub.sigma}
        b = {
            (s.eps, round(s.c.real, 7), round(s.c.imag, 7))
            for s in walk.sigma_plus + walk.sigma_minus
        }
        if a != b:
            raise ConsistencyFailure(
                f"word {sub.word} reached with sigma {sorted(b)} != {sorted(a)}"
            )

    def locate_point(self, pt: CoverPoint, tol: Optional[float] = None) -> Subregion:
        """Subregion containing the cover point, via its defining polyline."""
        walk = RegionWalk(self)
        walk.advance(pt.vertices)
        sub = self.register(walk)
        boundary_tol = tol if tol is not None else 1e-9 * (1.0 + abs(pt.endpoint))
        curves = list(self.graph.curves) + self.virtual_curves(
            _region_key(walk.word()), walk
        )
        d = self.graph.min_curve_distance(pt.endpoint, curves)
        if d < boundary_tol:
            raise OnBoundary(f"point {pt.endpoint} within {d:.2e} of a curve")
        return sub

    # -- enumeration -------------------------------------------------------

    def enumerate_subregions(self, depth: int) -> list:
        """Breadth-first expansion of subregions up to the given word depth."""
        frontier = [self.base_subregion(1), self.base_subregion(-1)]
        seen = {s.word for s in frontier}
        level = 0
        while level < depth and frontier:
            nxt = []
            for sub in frontier:
                for neighbor in self._expand(sub):
                    if neighbor.word not in seen:
                        seen.add(neighbor.word)
                        nxt.append(neighbor)
            frontier = nxt
            level += 1
        return list(self.by_id)

    def _expand(self, sub: Subregion) -> list:
        out = []
        walk0 = RegionWalk(self)
        walk0.advance(sub.sample.vertices)
        curves = list(self.graph.curves) + self.virtual_curves(
            _region_key(sub.word), walk0
        )
        anchor = sub.sample
        for curve in curves:
            target = self._probe_target(anchor, curve, curves)
            if target is None:
                continue
            try:
                walk = RegionWalk(self)
                walk.advance(anchor.vertices)
                walk.advance_to(target)
            except (OnBoundary, TurningPointCollision, QuadratureNonConvergence):
                continue
            if len(walk.word()) != len(sub.word) + 1:
                continue
            out.append(self.register(walk))
        return out

    def _probe_target(self, anchor: CoverPoint, curve: StokesCurve, all_curves):
        """A point just across `curve`, straight-line visible from anchor."""
        pts = curve.samples
        n = len(pts)
        if n < 2:
            return None
        stride = max(1, n // 24)
        h = 2e-3 * (1.0 + self.graph.r_max)
        tp_clear = 0.05 * (1.0 + self.graph.r_max)
        tps = [t.location for t in self.graph.turning_points]
        # sweep candidates middle-out so crossings stay clear of endpoints
        order = sorted(range(1, n - 1, stride), key=lambda i: abs(i - n // 2))
        for i in order:
            q = pts[i]
            if any(abs(q - t) < tp_clear for t in tps):
                continue
            tangent = pts[i + 1] - pts[i - 1]
            if tangent == 0:
                continue
            nrm = 1j * tangent / abs(tangent)
            for sgn in (1.0, -1.0):
                target = q + sgn * h * nrm
                if abs(target) > self.graph.r_max:
                    continue
                events = self.graph.segment_crossings(
                    anchor.endpoint, target, all_curves
                )
                if len(events) != 1 or events[0][1] is not curve:
                    continue
                if events[0][0] > 1.0 - 1e-6:
                    continue
                return target
        return None

    # -- checks -------------------------------------------------------------

    def alternation_gaps(self, sub: Subregion):
        """Same-family adjacent pairs that the reflection calculus forbids.

        For a subregion entered across an actual left curve, any two plus
        members adjacent in the Im-order must be separated by a minus member
        (mirrored for right); returns the offending pairs.  Only subregions
        whose last crossing is an actual curve are constrained.
        """
        if len(sub.word) <= 1 or sub.word[-1].kind != "s" or not sub.events:
            return []
        last = sub.events[-1]
        fam = 1 if last.orientation == "left" else -1
        sigma = sub.sigma
        order = sub.im_order()
        bad = []
        prev = None
        for k in order:
            if sigma[k].eps == fam:
                if prev is not None:
                    bad.append((sigma[prev], sigma[k]))
                prev = k
            elif sigma[k].eps == -fam:
                prev = None
        return bad

    def to_json(self) -> dict:
        return {"subregions": [s.to_json() for s in self.by_id]}


class RegionWalk:
    """Incremental subregion state along a polyline from the base point."""

    def __init__(self, rc: RegionComplex):
        self.rc = rc
        self.poly = rc.poly
        g = rc.graph
        self.x = g.x0
        self.p = g.base_branch
        self.s = 0j
        self.base_side = 0
        self.stack: list = []  # WordStep entries
        self.events: list = []  # CrossingEvent per actual step on the stack
        self.sigma_plus = BASE_PLUS
        self.sigma_minus = BASE_MINUS
        self.vertices: list = [g.x0]

    # -- queries -----------------------------------------------------------

    def word(self) -> tuple:
        side = self.base_side if self.base_side != 0 else 1
        return (side,) + tuple(self.stack)

    def point(self) -> CoverPoint:
        if self.poly.degree >= 1:
            hw = homotopy_word(find_turning_points(self.poly), self.vertices)
        else:
            hw = ()
        return CoverPoint(self.x, self.p, self.s, tuple(self.vertices), hw)

    def _region_curves(self):
        key = _region_key(self.word())
        return list(self.rc.graph.curves) + self.rc.virtual_curves(key, self)

    # -- advancing ----------------------------------------------------------

    def advance(self, vertices: Sequence[complex]) -> None:
        verts = [complex(v) for v in vertices]
        if verts and verts[0] == self.x and len(verts) > 1:
            verts = verts[1:]
        for v in verts:
            self.advance_to(v)

    def advance_to(self, target: complex) -> None:
        guard = 0
        while self.x != target:
            guard += 1
            if guard > 512:
                raise OnBoundary(f"walk stalled near {self.x}")
            if self.base_side == 0:
                d = target - self.x
                lvl = (self.p * d).imag
                if lvl != 0.0:
                    self.base_side = 1 if lvl > 0 else -1
            events = self.rc.graph.segment_crossings(
                self.x, target, self._region_curves()
            )
            if not events:
                self._move(target)
                return
            t, curve, idx, side = events[0]
            # step just past the crossing so it is not re-detected
            t_step = min(1.0, t + 1e-9)
            cross_at = self.x + t_step * (target - self.x)
            self._move(cross_at)
            self._apply_crossing(curve, idx, side, target)
            if t_step >= 1.0:
                return

    def _move(self, target: complex) -> None:
        if target == self.x:
            return
        seg = cover_path(self.poly, [self.x, target], self.p)
        inc, p_new = action_and_branch(self.poly, seg)
        self.s += inc
        self.p = p_new
        self.x = target
        self.vertices.append(target)

    def _apply_crossing(self, curve: StokesCurve, idx: int, side: int,
                        continue_to: complex) -> None:
        if curve.virtual:
            if curve.origin == -1 and _region_key(self.word()) == () and \
                    curve.index == self.rc._base_curve.index:
                # the base split flips the side marker instead of growing the word
                if self.base_side == 0:
                    self.base_side = 1
                self.base_side = -self.base_side
            else:
                self._push(WordStep("v", curve.index, side), None)
            return
        x_star, p_trace, rel = _project_to_curve(self.poly, curve, idx, self.x)
        sgn = 1 if abs(self.p - p_trace) <= abs(self.p + p_trace) else -1
        turning_action = self.s - sgn * rel
        orientation = curve.orientation if sgn > 0 else (
            "left" if curve.orientation == "right" else "right"
        )
        tangent = _curve_tangent(curve, idx)
        d = continue_to - self.x
        winding_ccw = (tangent.real * d.imag - tangent.imag * d.real) * sgn > 0
        event = CrossingEvent(
            step=WordStep("s", curve.index, side),
            at=self.x,
            turning_action=turning_action,
            orientation=orientation,
            trace_sign=sgn,
            winding_ccw=winding_ccw,
        )
        self._push(event.step, event)

    def _push(self, step: WordStep, event: Optional[CrossingEvent]) -> None:
        if self.stack and self.stack[-1].kind == step.kind and \
                self.stack[-1].curve == step.curve and self.stack[-1].side == -step.side:
            self.stack.pop()
            if step.kind == "s":
                self.events.pop()
        else:
            self.stack.append(step)
            if step.kind == "s":
                self.events.append(event)
        self._replay_sigma()

    def _replay_sigma(self) -> None:
        plus, minus = BASE_PLUS, BASE_MINUS
        for ev in self.events:
            tp_index = self.rc.graph.curve(ev.step.curve).origin
            plus, minus = cross_sigma(
                plus, minus, ev.orientation, ev.turning_action, tp_index
            )
        self.sigma_plus, self.sigma_minus = plus, minus


def _curve_tangent(curve: StokesCurve, idx: int) -> complex:
    pts = curve.samples
    i = min(max(idx, 0), len(pts) - 2)
    return pts[i + 1] - pts[i]


def _project_to_curve(poly: Polynomial, curve: StokesCurve, idx: int, x_near: complex):
    """Project x_near onto the exact level set of the curve near sample idx.

    Returns (x_star, trace branch at x_star, exact real relative action).
    """
    i = min(max(idx, 0), len(curve.samples) - 1)
    x = complex(curve.samples[i])
    p = complex(curve.branches[i])
    rel = complex(curve.rel_actions[i])
    # walk from the sample to the vicinity of x_near along the straight chord
    seg = cover_path(poly, [x, x_near], p)
    inc, p_end = action_and_branch(poly, seg)
    rel = rel + inc
    x, p = x_near, p_end
    for _ in range(12):
        if abs(rel.imag) <= 1e-12 * (1.0 + abs(rel)):
            break
        step = -1j * rel.imag * p.conjugate() / (abs(p) ** 2)
        x_new = x + step
        seg = cover_path(poly, [x, x_new], p)
        inc, p = action_and_branch(poly, seg)
        rel = rel + inc
        x = x_new
    return x, p, rel.real


def virtual_turning_points(rc: RegionComplex, sub: Subregion) -> list:
    """Interior points where a plus and a minus singularity collide.

    Solutions land on virtual curves by construction, so points on the
    subregion boundary (the generic case for the base split) are excluded.
    """
    walk = RegionWalk(rc)
    walk.advance(sub.sample.vertices)
    out = []
    tol = 1e-9
    for sp in sub.sigma_plus:
        for sm in sub.sigma_minus:
            u_v = (sm.c - sp.c) / 2.0
            try:
                vertex = rc._newton_to_action(sub.sample, u_v)
            except (NewtonNonConvergence, TurningPointCollision, QuadratureNonConvergence):
                continue
            if vertex is None:
                continue
            if abs(sp.value(vertex.action) - sm.value(vertex.action)) > tol:
                continue
            # interior means: strictly inside the subregion, not on a curve
            curves = list(rc.graph.curves) + rc.virtual_curves(
                _region_key(sub.word), walk
            )
            d = rc.graph.min_curve_distance(vertex.endpoint, curves)
            if d < 1e-6 * (1.0 + abs(vertex.endpoint)):
                continue
            out.append(vertex)
    return out


def enumerate_subregions(graph: StokesGraph, depth: int) -> RegionComplex:
    """Build the region complex and expand it to the given crossing depth."""
    rc = RegionComplex(graph)
    rc.enumerate_subregions(depth)
    return rc
