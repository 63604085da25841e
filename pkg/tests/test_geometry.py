import math

import numpy as np
import pytest

from carnot_heat import (
    GroupPoint,
    angle_to_ratio,
    build_structure,
    cc_distance,
    distance,
    distance_quad_ratio,
    eps_split_bounds,
    inverse,
    multiply,
    ratio_to_angle,
    verify_distance_bounds,
)


def test_quad_ratio_reference_values():
    assert abs(distance_quad_ratio(0.0) - 1.0) <= 1e-12
    assert abs(distance_quad_ratio(math.pi / 4) - math.pi / 4) <= 1e-12
    assert abs(distance_quad_ratio(math.pi) - math.pi) <= 1e-12


def test_quad_ratio_shape_and_bounds():
    # V-shaped: decreasing to the minimum pi/4 at theta = pi/4, then rising
    thetas = np.linspace(0.0, math.pi, 4001)
    vals = np.array([distance_quad_ratio(t) for t in thetas])
    knee = 1000  # thetas[1000] == pi/4 on this grid
    assert np.all(np.diff(vals[:knee + 1]) < 0)
    assert np.all(np.diff(vals[knee:]) > 0)
    assert abs(vals[knee] - math.pi / 4) <= 1e-12
    assert np.all(vals >= math.pi / 4 - 1e-12)
    assert np.all(vals <= math.pi + 1e-12)


def test_angle_ratio_roundtrip():
    # the geodesic parameter map blows up toward theta = pi; stay below 3
    rng = np.random.default_rng(211)
    thetas = rng.uniform(0.05, 3.0, size=200)
    for th in thetas:
        r = angle_to_ratio(th)
        back = ratio_to_angle(r)
        assert abs(back - th) <= 1e-8 * max(1.0, th)
    assert np.all(np.diff([angle_to_ratio(t)
                           for t in np.linspace(0.1, 3.0, 300)]) > 0)


def test_distance_branches():
    s = build_structure(1, 1)
    res = cc_distance(s, GroupPoint(np.array([3.0, 0.0]), np.array([0.0])))
    assert res.branch == "z_zero"
    assert abs(res.d - 3.0) <= 1e-14
    res = cc_distance(s, GroupPoint(np.array([0.0, 0.0]), np.array([1.0])))
    assert res.branch == "x_zero"
    assert abs(res.d - math.sqrt(4.0 * math.pi)) <= 1e-12
    # x = 0 scaling: d = sqrt(4 pi |z|)
    res = cc_distance(s, GroupPoint(np.array([0.0, 0.0]), np.array([2.5])))
    assert abs(res.d - math.sqrt(4.0 * math.pi * 2.5)) <= 1e-12


def test_distance_ratio_sandwich():
    rng = np.random.default_rng(212)
    for n, m in ((1, 1), (2, 3)):
        s = build_structure(n, m)
        for _ in range(100):
            g = GroupPoint(rng.normal(size=2 * n), rng.normal(size=m))
            hom = np.dot(g.x, g.x) + 4.0 * np.linalg.norm(g.z)
            d2 = cc_distance(s, g).d ** 2
            assert d2 >= (math.pi / 4) * hom - 1e-10 * hom
            assert d2 <= math.pi * hom + 1e-10 * hom


def test_eps_split_bounds_sandwich():
    rng = np.random.default_rng(213)
    s = build_structure(1, 1)
    for _ in range(100):
        g = GroupPoint(rng.normal(size=2), rng.normal(size=1))
        eps = float(rng.uniform(0.05, 0.9))
        lo, hi = eps_split_bounds(eps, g)
        d2 = cc_distance(s, g).d ** 2
        assert lo <= d2 + 1e-10 * (1.0 + d2)
        assert d2 <= hi + 1e-10 * (1.0 + hi)


def test_distance_dilation_homogeneity():
    rng = np.random.default_rng(214)
    s = build_structure(2, 3)
    from carnot_heat import dilate
    for _ in range(50):
        g = GroupPoint(rng.normal(size=4), rng.normal(size=3))
        a = float(rng.uniform(0.3, 2.5))
        d1 = cc_distance(s, g).d
        d2 = cc_distance(s, dilate(s, a, g)).d
        assert abs(d2 - a * d1) <= 1e-10 * (1.0 + a * d1)


def test_distance_left_invariance_and_symmetry():
    rng = np.random.default_rng(215)
    s = build_structure(1, 1)
    for _ in range(50):
        g = GroupPoint(rng.normal(size=2), rng.normal(size=1))
        h = GroupPoint(rng.normal(size=2), rng.normal(size=1))
        k = GroupPoint(rng.normal(size=2), rng.normal(size=1))
        d = distance(s, g, h).d
        dk = distance(s, multiply(s, k, g), multiply(s, k, h)).d
        assert abs(d - dk) <= 1e-10 * (1.0 + d)
        assert abs(distance(s, h, g).d - d) <= 1e-10 * (1.0 + d)
        assert abs(cc_distance(s, inverse(s, g)).d
                   - cc_distance(s, g).d) <= 1e-10


def test_verify_distance_bounds_report():
    rep = verify_distance_bounds(500, 41)
    assert rep["min_ratio"] >= math.pi / 4 - 1e-12
    assert rep["max_ratio"] <= math.pi + 1e-12
    assert rep["min_gap"] >= 0.0 and rep["max_gap"] >= 0.0
