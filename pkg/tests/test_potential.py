import cmath
import math

import numpy as np
import pytest

from stokeshed.errors import MultipleRootError, TurningPointCollision
from stokeshed.potential import (
    Polynomial,
    action,
    action_into_turning_point,
    continue_branch,
    cover_path,
    cover_point,
    eval_potential,
    extend_cover_point,
    find_turning_points,
    homotopy_word,
)

AIRY = Polynomial((0, 1))
WELL = Polynomial((-1, 0, 1))  # x^2 - 1


def test_eval_simple_values():
    assert eval_potential(WELL, 2) == 3
    assert eval_potential(WELL, 1j) == -2


def test_eval_matches_naive_monomial_sum():
    rng = np.random.default_rng(7)
    coeffs = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    poly = Polynomial(tuple(coeffs))
    for _ in range(100):
        x = complex(*rng.standard_normal(2)) * 2.0
        naive = sum(c * x**k for k, c in enumerate(coeffs))
        got = eval_potential(poly, x)
        assert abs(got - naive) <= 1e-12 * (1.0 + abs(naive))


def test_turning_points_linear_and_factored():
    assert find_turning_points(AIRY) == [0]
    roots = find_turning_points(WELL)
    assert sorted(r.real for r in roots) == pytest.approx([-1.0, 1.0])


def test_turning_points_against_companion_matrix_oracle():
    poly = Polynomial((1, -3, 0, 1))  # x^3 - 3x + 1
    got = sorted(find_turning_points(poly), key=lambda z: z.real)
    # independent oracle: explicit companion matrix eigenvalues
    c = np.array(poly.coefficients) / poly.coefficients[-1]
    n = poly.degree
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1]
    expect = sorted(np.linalg.eigvals(comp), key=lambda z: z.real)
    for g, e in zip(got, expect):
        assert abs(g - e) < 1e-9
    for r in got:
        assert abs(eval_potential(poly, r)) < 1e-12 * 10


def test_multiple_root_rejected():
    poly = Polynomial((1, 2, 1))  # (x+1)^2
    with pytest.raises(MultipleRootError):
        find_turning_points(poly)


def test_constant_potential_is_test_only():
    with pytest.raises(ValueError):
        Polynomial((2,))
    Polynomial((2,), allow_constant=True)


def test_branch_constant_path_returns_seed():
    path = cover_path(WELL, [2.0, 2.0])
    assert continue_branch(WELL, path) == path.branch_seed


def test_branch_monodromy_around_simple_zero():
    # loop around the only zero of V=x flips the square root sign
    loop = [1, 1j, -1, -1j, 1]
    path = cover_path(AIRY, loop)
    got = continue_branch(AIRY, path)
    assert abs(got + path.branch_seed) < 1e-10


def test_branch_trivial_loop_preserves_seed():
    loop = [2, 2 + 0.3j, 2.3 + 0.3j, 2]
    path = cover_path(WELL, loop)
    got = continue_branch(WELL, path)
    assert abs(got - path.branch_seed) < 1e-10


def test_branch_consistency_property():
    rng = np.random.default_rng(3)
    poly = Polynomial((1, -3, 0, 1))
    for _ in range(25):
        verts = [3.0 + 0j]
        z = verts[0]
        for _ in range(4):
            z = z + complex(*rng.standard_normal(2))
            verts.append(z)
        try:
            p = continue_branch(poly, cover_path(poly, verts))
        except TurningPointCollision:
            continue
        v = eval_potential(poly, verts[-1])
        assert abs(p * p - v) <= 1e-10 * (1.0 + abs(v))


def test_action_constant_potential():
    poly = Polynomial((1,), allow_constant=True)
    path = cover_path(poly, [0, 2])
    assert abs(action(poly, path) - 2.0) < 1e-12


def test_action_airy_antiderivative():
    # straight path 1 -> 4 on the principal branch: S = (2/3)(4^1.5 - 1)
    path = cover_path(AIRY, [1, 4])
    expect = 2.0 / 3.0 * (4**1.5 - 1.0)
    assert abs(action(AIRY, path) - expect) < 1e-11
    assert abs(expect - 14.0 / 3.0) < 1e-12


def test_action_concatenation_additivity():
    a = cover_path(WELL, [2, 2 + 1j])
    p_mid = continue_branch(WELL, a)
    b = cover_path(WELL, [2 + 1j, 3 + 1j], p_mid)
    whole = cover_path(WELL, [2, 2 + 1j, 3 + 1j])
    assert abs(action(WELL, whole) - (action(WELL, a) + action(WELL, b))) < 1e-12


def test_action_homotopy_invariance():
    poly = Polynomial((1, -3, 0, 1))
    a = cover_point(poly, [3, 3 + 2j, -1 + 3j])
    b = cover_point(poly, [3, 0.5 + 2.5j, -1 + 3j])
    assert a.homotopy == b.homotopy
    assert abs(a.action - b.action) < 1e-10
    assert abs(a.branch_p - b.branch_p) < 1e-9


def test_turning_point_collision_detected():
    path = cover_path(WELL, [2, 0, 2j])  # passes through the root at 1
    with pytest.raises(TurningPointCollision):
        action(WELL, path)


def test_homotopy_word_winding():
    tps = [0j]
    # one counterclockwise loop around 0 crosses the downward ray once
    loop = [1, -1 - 0j + 1j, -1 - 1j, 1 - 1j, 1]
    word = homotopy_word(tps, [complex(v) for v in loop])
    assert word == (1,)
    # out-and-back across the ray cancels
    out_back = homotopy_word(tps, [1 + 0j, 1 - 1j, -1 - 1j, 1 - 1j, 1 + 0j])
    assert out_back == ()
    # double loop gives a length-2 word
    double = homotopy_word(tps, [complex(v) for v in loop + loop[1:]])
    assert double == (1, 1)


def test_action_into_turning_point_matches_local_model():
    # V = x: S(0) from x=r along the ray is -(2/3) r^{3/2}
    r = 0.3
    p = math.sqrt(r)
    got = action_into_turning_point(AIRY, r, p, 0.0)
    assert abs(got - (-2.0 / 3.0 * r**1.5)) < 1e-13


def test_extend_cover_point_consistent():
    poly = Polynomial((1, -3, 0, 1))
    base = cover_point(poly, [3, 3 + 1j])
    ext = extend_cover_point(poly, base, [2 + 1j])
    direct = cover_point(poly, [3, 3 + 1j, 2 + 1j])
    assert abs(ext.action - direct.action) < 1e-12
    assert abs(ext.branch_p - direct.branch_p) < 1e-12
    assert ext.homotopy == direct.homotopy
