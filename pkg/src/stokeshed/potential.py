"""Polynomial potentials, branch-tracked square roots, and action integrals.

Everything downstream works on the universal cover of the plane punctured at
the zeros of V.  A point of the cover is represented by a polyline from the
base point together with the square-root branch continued along it; the
action is the integral of that branch.  The cut system used for homotopy
words is the family of vertical rays going straight down from each zero of V.

All types are immutable after construction and all operations are pure, so
they can be used concurrently without coordination.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    MultipleRootError,
    QuadratureNonConvergence,
    TurningPointCollision,
)

# Gauss-Legendre rule reused by every quadrature in the package.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)

_MAX_SPLIT_DEPTH = 48

# Largest tolerated jump of the square-root branch between consecutive
# evaluation points: |candidate/previous - 1| below this keeps the phase
# change under pi/2 for the chosen sign.
_BRANCH_JUMP = 0.75


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with complex coefficients in ascending degree order."""

    coefficients: tuple
    allow_constant: bool = False

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs:
            raise ValueError("empty coefficient list")
        if coeffs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        if len(coeffs) == 1 and not self.allow_constant:
            raise ValueError("degree 0 potentials are test-only; pass allow_constant=True")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x: complex) -> complex:
        acc = 0j
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial((0j,), allow_constant=True)
        coeffs = tuple(k * c for k, c in enumerate(self.coefficients) if k >= 1)
        if all(c == 0 for c in coeffs):
            return Polynomial((0j,), allow_constant=True)
        return Polynomial(coeffs, allow_constant=True)

    def shifted(self, x0: complex) -> tuple:
        """Taylor coefficients of V at x0 (synthetic division)."""
        coeffs = list(self.coefficients)
        out = []
        for _ in range(len(coeffs)):
            acc = 0j
            for c in reversed(coeffs):
                acc = acc * x0 + c
            out.append(acc)
            # divide by (x - x0)
            new = []
            carry = 0j
            for c in reversed(coeffs):
                carry = c + carry * x0
                new.append(carry)
            coeffs = list(reversed(new[:-1]))
            if not coeffs:
                break
        return tuple(out)

    @classmethod
    def from_json(cls, pairs: Sequence[Sequence[float]]) -> "Polynomial":
        """Build from a JSON array of [re, im] pairs, ascending degree."""
        return cls(tuple(complex(p[0], p[1]) for p in pairs))

    def to_json(self) -> list:
        return [[c.real, c.imag] for c in self.coefficients]


def eval_potential(poly: Polynomial, x: complex) -> complex:
    """Evaluate V(x) by Horner recursion."""
    return poly(complex(x))


def coefficient_scale(poly: Polynomial, x: complex) -> float:
    """Natural magnitude of V near x, used to normalize residual checks."""
    r = abs(x)
    return sum(abs(c) * r**k for k, c in enumerate(poly.coefficients)) or 1.0


_ROOT_CACHE: dict = {}


def find_turning_points(poly: Polynomial, tol: float = 1e-10) -> list:
    """All zeros of V, Newton-polished, each simple.

    Raises MultipleRootError when two roots are closer than the turning-point
    tolerance; the singularity calculus downstream assumes simple zeros.
    """
    if poly.degree < 1:
        raise ValueError("constant potential has no turning points")
    key = poly.coefficients
    if key in _ROOT_CACHE:
        return list(_ROOT_CACHE[key])
    high_first = np.array(list(reversed(poly.coefficients)), dtype=complex)
    roots = list(np.roots(high_first))
    dpoly = poly.derivative()
    polished = []
    for r in roots:
        z = complex(r)
        for _ in range(4):
            dv = dpoly(z)
            if abs(dv) == 0:
                break
            z = z - poly(z) / dv
        polished.append(z)
    polished.sort(key=lambda z: (z.real, z.imag))
    for z in polished:
        if abs(poly(z)) >= tol * coefficient_scale(poly, z):
            raise MultipleRootError(f"root {z} failed residual check")
    sep = turning_point_tolerance(polished)
    for i in range(len(polished)):
        for k in range(i + 1, len(polished)):
            if abs(polished[i] - polished[k]) <= sep:
                raise MultipleRootError(
                    f"roots {polished[i]} and {polished[k]} closer than {sep}"
                )
    _ROOT_CACHE[key] = tuple(polished)
    return polished


def turning_point_tolerance(roots: Sequence[complex]) -> float:
    m = max((abs(r) for r in roots), default=0.0)
    return 1e-6 * (1.0 + m)


@dataclass(frozen=True)
class CoverPath:
    """Polyline on the cover: vertices from the base point plus branch seed."""

    vertices: tuple
    branch_seed: complex

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(complex(v) for v in self.vertices))
        object.__setattr__(self, "branch_seed", complex(self.branch_seed))
        if not self.vertices:
            raise ValueError("path needs at least one vertex")


def cover_path(poly: Polynomial, vertices: Sequence[complex], branch_seed=None) -> CoverPath:
    """CoverPath with the seed defaulting to the principal root of V."""
    vertices = tuple(complex(v) for v in vertices)
    if branch_seed is None:
        branch_seed = cmath.sqrt(poly(vertices[0]))
    v0 = poly(vertices[0])
    if abs(branch_seed * branch_seed - v0) > 1e-8 * (1.0 + abs(v0)):
        raise ValueError("branch_seed is not a square root of V at the start")
    return CoverPath(vertices, branch_seed)


def _segment_tp_guard(poly: Polynomial, a: complex, b: complex) -> None:
    if poly.degree < 1:
        return
    tps = find_turning_points(poly)
    guard = turning_point_tolerance(tps)
    for t in tps:
        d = _point_segment_distance(t, a, b)
        if d < guard:
            raise TurningPointCollision(
                f"segment [{a}, {b}] passes within {d:.3e} of turning point {t}"
            )


def _point_segment_distance(p: complex, a: complex, b: complex) -> float:
    ab = b - a
    denom = abs(ab) ** 2
    if denom == 0.0:
        return abs(p - a)
    t = ((p - a) * ab.conjugate()).real / denom
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * ab))


def _matched_sqrt(v: complex, ref: complex) -> complex:
    w = cmath.sqrt(v)
    return w if abs(w - ref) <= abs(w + ref) else -w


def _continue_segment(poly: Polynomial, a: complex, p_a: complex, b: complex,
                      depth: int = 0) -> complex:
    """Branch value at b continued from (a, p_a) along the straight segment."""
    if depth > _MAX_SPLIT_DEPTH:
        raise TurningPointCollision(
            f"branch continuation failed to stabilize on [{a}, {b}]"
        )
    w = _matched_sqrt(poly(b), p_a)
    if abs(p_a) > 0 and abs(w / p_a - 1.0) < _BRANCH_JUMP:
        return w
    mid = 0.5 * (a + b)
    p_mid = _continue_segment(poly, a, p_a, mid, depth + 1)
    return _continue_segment(poly, mid, p_mid, b, depth + 1)


def continue_branch(poly: Polynomial, path: CoverPath) -> complex:
    """Value of p = sqrt(V) at the path end, continued from the seed.

    Steps are refined until consecutive square-root choices move by less than
    a quarter turn, so the sign choice is unambiguous; approaching a turning
    point raises TurningPointCollision instead of silently flipping sheets.
    """
    p = path.branch_seed
    verts = path.vertices
    for a, b in zip(verts, verts[1:]):
        _segment_tp_guard(poly, a, b)
        p = _continue_segment(poly, a, p, b)
    return p


def _action_panel(poly: Polynomial, a: complex, p_a: complex, b: complex):
    """One Gauss panel of p dx over [a, b]; returns (integral, p_b)."""
    h = b - a
    acc = 0j
    ref = p_a
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        x = a + (t + 1.0) * 0.5 * h
        ref = _matched_sqrt(poly(x), ref)
        acc += w * ref
    p_b = _matched_sqrt(poly(b), ref)
    return acc * h * 0.5, p_b


def _action_segment(poly: Polynomial, a: complex, p_a: complex, b: complex,
                    tol: float, depth: int = 0):
    if depth > _MAX_SPLIT_DEPTH:
        raise QuadratureNonConvergence(f"action integral stalled on [{a}, {b}]")
    whole, _ = _action_panel(poly, a, p_a, b)
    mid = 0.5 * (a + b)
    left, p_mid = _action_panel(poly, a, p_a, mid)
    right, p_b = _action_panel(poly, mid, p_mid, b)
    if abs(whole - left - right) <= tol:
        return left + right, p_b
    left, p_mid = _action_segment(poly, a, p_a, mid, 0.5 * tol, depth + 1)
    right, p_b = _action_segment(poly, mid, p_mid, b, 0.5 * tol, depth + 1)
    return left + right, p_b


def action(poly: Polynomial, path: CoverPath, tol: float = 1e-12) -> complex:
    """S = integral of the continued branch along the path.

    Additive under concatenation by construction; the absolute+relative
    target follows the quadrature default of the package.
    """
    total = 0j
    p = path.branch_seed
    verts = path.vertices
    scale = max(1.0, max(abs(v) for v in verts))
    for a, b in zip(verts, verts[1:]):
        if a == b:
            continue
        _segment_tp_guard(poly, a, b)
        inc, p = _action_segment(poly, a, p, b, tol * scale)
        total += inc
    return total


def action_and_branch(poly: Polynomial, path: CoverPath, tol: float = 1e-12):
    """(S, p) at the path end in one pass."""
    total = 0j
    p = path.branch_seed
    verts = path.vertices
    scale = max(1.0, max(abs(v) for v in verts))
    for a, b in zip(verts, verts[1:]):
        if a == b:
            continue
        _segment_tp_guard(poly, a, b)
        inc, p = _action_segment(poly, a, p, b, tol * scale)
        total += inc
    return total, p


def action_into_turning_point(poly: Polynomial, x_near: complex, p_near: complex,
                              x_t: complex) -> complex:
    """Integral of p from x_near into the simple zero x_t.

    Uses the substitution x = x_t + w^2, which removes the square-root
    singularity exactly: with V(x_t + z) = z * g(z), the integrand becomes
    2 w^2 sqrt(g(w^2)), analytic through w = 0.
    """
    taylor = poly.shifted(x_t)

    def g(z: complex) -> complex:
        acc = 0j
        for c in reversed(taylor[1:]):
            acc = acc * z + c
        return acc

    w0 = cmath.sqrt(x_near - x_t)
    h0 = cmath.sqrt(g(w0 * w0))
    # pin the branch of sqrt(g) so that w0 * h0 equals the continued p
    if abs(w0 * h0 - p_near) > abs(w0 * h0 + p_near):
        h0 = -h0

    def integrand(w: complex, ref: complex):
        h = _matched_sqrt(g(w * w), ref)
        return 2.0 * w * w * h, h

    # adaptive panels along the straight w-path from w0 to 0
    def panel(a, ref_a, b):
        h = b - a
        acc = 0j
        ref = ref_a
        for t, wt in zip(_GL_NODES, _GL_WEIGHTS):
            w = a + (t + 1.0) * 0.5 * h
            val, ref = integrand(w, ref)
            acc += wt * val
        _, ref_b = integrand(b, ref)
        return acc * h * 0.5, ref_b

    def seg(a, ref_a, b, tol, depth=0):
        if depth > _MAX_SPLIT_DEPTH:
            raise QuadratureNonConvergence("turning-point tail integral stalled")
        whole, _ = panel(a, ref_a, b)
        mid = 0.5 * (a + b)
        left, ref_m = panel(a, ref_a, mid)
        right, ref_b = panel(mid, ref_m, b)
        if abs(whole - left - right) <= tol:
            return left + right, ref_b
        left, ref_m = seg(a, ref_a, mid, 0.5 * tol, depth + 1)
        right, ref_b = seg(mid, ref_m, b, 0.5 * tol, depth + 1)
        return left + right, ref_b

    val, _ = seg(w0, h0, 0j, 1e-13 * (1.0 + abs(w0)))
    return val


def homotopy_word(turning_points: Sequence[complex], vertices: Sequence[complex]):
    """Signed crossing word of the polyline against the downward cut rays.

    Element +(k+1) is a left-to-right crossing of the ray below turning point
    k, -(k+1) the reverse; adjacent inverse pairs are cancelled so homotopic
    polylines on the cover produce equal words.
    """
    stack: list = []
    for a, b in zip(vertices, vertices[1:]):
        da = b.real - a.real
        if da == 0.0:
            continue
        events = []
        for k, t in enumerate(turning_points):
            tau = (t.real - a.real) / da
            if 0.0 < tau <= 1.0:
                y = a.imag + tau * (b.imag - a.imag)
                if y < t.imag:
                    events.append((tau, (k + 1) if da > 0 else -(k + 1)))
        events.sort(key=lambda e: e[0])
        for _, e in events:
            if stack and stack[-1] == -e:
                stack.pop()
            else:
                stack.append(e)
    return tuple(stack)


@dataclass(frozen=True)
class CoverPoint:
    """Point of the universal cover: endpoint + the data continued to it."""

    endpoint: complex
    branch_p: complex
    action: complex
    vertices: tuple
    homotopy: tuple

    def __post_init__(self):
        if abs(self.branch_p) == 0:
            raise ValueError("branch vanishes at a cover point")


def cover_point(poly: Polynomial, vertices: Sequence[complex], branch_seed=None,
                tol: float = 1e-12) -> CoverPoint:
    """Build a CoverPoint by continuing branch and action along the polyline."""
    path = cover_path(poly, vertices, branch_seed)
    s, p = action_and_branch(poly, path, tol)
    v = poly(path.vertices[-1])
    if abs(p * p - v) > 1e-10 * (1.0 + abs(v)):
        raise TurningPointCollision("branch consistency lost along path")
    if poly.degree >= 1:
        word = homotopy_word(find_turning_points(poly), path.vertices)
    else:
        word = ()
    return CoverPoint(path.vertices[-1], p, s, path.vertices, word)


def extend_cover_point(poly: Polynomial, pt: CoverPoint, extra: Sequence[complex],
                       tol: float = 1e-12) -> CoverPoint:
    """Extend pt by additional vertices without recomputing the prefix."""
    extra = tuple(complex(v) for v in extra)
    if not extra:
        return pt
    total = pt.action
    p = pt.branch_p
    prev = pt.endpoint
    scale = max(1.0, abs(prev), max(abs(v) for v in extra))
    for b in extra:
        if b == prev:
            continue
        _segment_tp_guard(poly, prev, b)
        inc, p = _action_segment(poly, prev, p, b, tol * scale)
        total += inc
        prev = b
    verts = pt.vertices + extra
    if poly.degree >= 1:
        word = homotopy_word(find_turning_points(poly), verts)
    else:
        word = ()
    return CoverPoint(prev, p, total, verts, word)
