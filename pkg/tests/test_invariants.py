import math
from itertools import product

import cvxpy as cp
import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ripsrecon.geometry import (
    FiniteMetricSpace,
    PointCloud,
    euclidean_metric,
    make_point_cloud,
    make_shape,
    perturb,
    sample_shape,
)
from ripsrecon.invariants import (
    Correspondence,
    check_eps_R_closeness,
    check_jung_euclidean,
    critical_function_estimate,
    distance_field,
    distortion,
    gh_diameter_lower_bound,
    gradient_norm,
    hausdorff_correspondence,
    hausdorff_distance,
    jung_bound,
    large_scale_distortion,
    min_norm_point,
    minimal_enclosing_ball,
)


def brute_hausdorff(A, B):
    d = np.linalg.norm(A[:, None] - B[None], axis=-1)
    return max(d.min(1).max(), d.min(0).max())


def brute_distortion(pairs, dA, dB):
    return max(abs(dA[a, a2] - dB[b, b2]) for (a, b), (a2, b2) in product(pairs, pairs))


def socp_ball(pts):
    c, r = cp.Variable(pts.shape[1]), cp.Variable()
    cp.Problem(cp.Minimize(r), [cp.norm(p - c) <= r for p in pts]).solve(solver=cp.CLARABEL)
    return c.value, float(r.value)


# -- Hausdorff and correspondences --------------------------------------------

def test_hausdorff_examples():
    A = make_point_cloud([(0.0, 0.0), (1.0, 1.0)])
    assert hausdorff_distance(A, A) == 0.0
    assert hausdorff_distance(make_point_cloud([(0,)]), make_point_cloud([(1,)])) == 1.0
    assert hausdorff_distance(make_point_cloud([(0, 0), (2, 0)]), make_point_cloud([(1, 0)])) == 1.0
    with pytest.raises(ValueError, match="dimension"):
        hausdorff_distance(A, make_point_cloud([(0, 0, 0)]))


@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_hausdorff_matches_brute_force(m, n, dim, seed):
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(m, dim)), rng.normal(size=(n, dim))
    assert hausdorff_distance(PointCloud(A), PointCloud(B)) == pytest.approx(brute_hausdorff(A, B), abs=1e-12)


def test_hausdorff_correspondence():
    A = make_point_cloud([(0.0,)])
    corr = hausdorff_correspondence(A, make_point_cloud([(0.3,)]), 0.5)
    assert corr.pairs.tolist() == [[0, 0]]
    with pytest.raises(ValueError, match="not a correspondence"):
        hausdorff_correspondence(A, make_point_cloud([(0.5,)]), 0.5)  # strict
    grid, _ = sample_shape(make_shape("circle"), 300)
    corr = hausdorff_correspondence(grid, grid, 1e-9)
    assert {(i, i) for i in range(300)} <= set(map(tuple, corr.pairs.tolist()))
    noisy = perturb(grid, 0.01, seed=3)
    corr = hausdorff_correspondence(grid, noisy, 0.02)
    assert set(corr.pairs[:, 0]) == set(range(300)) and set(corr.pairs[:, 1]) == set(range(300))
    gaps = np.linalg.norm(grid.points[corr.pairs[:, 0]] - noisy.points[corr.pairs[:, 1]], axis=1)
    assert gaps.max() < 0.02


def test_correspondence_validation():
    with pytest.raises(IndexError):
        Correspondence(np.array([[0, 5]]), 1, 2)
    with pytest.raises(ValueError):
        Correspondence(np.array([[0, 0]]), 1, 2)


def test_distortion_examples():
    d = euclidean_metric(make_point_cloud([(0, 0), (1, 2), (3, 1)]))
    assert distortion(Correspondence.diagonal(3), d, d) == 0.0
    a = FiniteMetricSpace(np.array([[0, 1.0], [1, 0]]))
    b = FiniteMetricSpace(np.array([[0, 3.0], [3, 0]]))
    assert distortion(Correspondence.diagonal(2), a, b) == 2.0
    assert gh_diameter_lower_bound(a, b) == 1.0


@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_distortion_matches_brute_force(m, n, seed):
    rng = np.random.default_rng(seed)
    dA = euclidean_metric(PointCloud(rng.normal(size=(m, 2))))
    dB = euclidean_metric(PointCloud(rng.normal(size=(n, 3))))
    pairs = [(i, int(rng.integers(n))) for i in range(m)] + [(int(rng.integers(m)), j) for j in range(n)]
    corr = Correspondence(np.array(pairs), m, n)
    assert distortion(corr, dA, dB) == pytest.approx(brute_distortion(pairs, dA.d, dB.d), abs=1e-12)
    # global distortion certifies closeness at every scale
    eps = 0.5 * distortion(corr, dA, dB)
    for R in (0.1, 1.0, 10.0):
        assert check_eps_R_closeness(corr, dA, dB, eps, R).passed


def test_wedge_gh_lower_bound_and_local_closeness():
    w = make_shape("wedge_w")
    cloud, params = sample_shape(w, 400)
    e, L = euclidean_metric(cloud), w.intrinsic_matrix(params)
    corr = Correspondence.diagonal(400)
    assert distortion(corr, e, L) >= 2 * math.sqrt(2) - 2 - 1e-9
    assert gh_diameter_lower_bound(e, L) == pytest.approx(math.sqrt(2) - 1, abs=1e-9)
    # (eps/2, 2 eps)-close at small scale although the global distortion is large
    for eps in (0.05, 0.1, 0.2):
        rep = check_eps_R_closeness(corr, e, L, 0.5 * eps, 2 * eps)
        assert rep.passed, rep
    assert not check_eps_R_closeness(corr, e, L, 0.05, 3.0).passed


# -- large-scale distortion ----------------------------------------------------

def test_large_scale_distortion_examples():
    seg = make_shape("segment", length=2.0)
    _, p = sample_shape(seg, 101)
    for eps in (0.05, 0.3):
        assert large_scale_distortion(seg, p, eps, 0.1) == pytest.approx(1.0, abs=1e-12)
    circ = make_shape("circle")
    _, p = sample_shape(circ, 2000)
    assert large_scale_distortion(circ, p, 0.1, 0.1) == pytest.approx(1 + 0.1**2 / 24, abs=1e-4)
    star = make_shape("ninja_star")
    _, p = sample_shape(star, 2000)
    value = large_scale_distortion(star, p, 0.1, 0.5)
    assert 1.0 <= value < math.inf
    with pytest.raises(ValueError, match="no reference pair"):
        large_scale_distortion(circ, p, 0.1, 100.0)


# -- circumradius, Jung --------------------------------------------------------

def test_minimal_ball_examples():
    b = minimal_enclosing_ball([[0, 0], [2, 0]])
    np.testing.assert_allclose(b.center, [1, 0])
    assert b.radius == pytest.approx(1.0)
    s = 1.7
    tri = np.array([[0, 0], [s, 0], [s / 2, s * math.sqrt(3) / 2]])
    assert minimal_enclosing_ball(tri).radius == pytest.approx(s / math.sqrt(3))
    assert minimal_enclosing_ball([[3, 4, 5]]).radius == 0.0
    # obtuse triangle: the longest side is a diameter
    assert minimal_enclosing_ball([[0, 0], [4, 0], [2, 0.5]]).radius == pytest.approx(2.0)


def test_minimal_ball_grid_oracle_2d():
    rng = np.random.default_rng(4)
    for _ in range(20):
        pts = rng.uniform(-1, 1, size=(int(rng.integers(2, 9)), 2))
        xs = np.linspace(-1, 1, 801)
        X, Y = np.meshgrid(xs, xs)
        C = np.c_[X.ravel(), Y.ravel()]
        r_grid = np.linalg.norm(C[:, None] - pts[None], axis=-1).max(1).min()
        r = minimal_enclosing_ball(pts).radius
        # the grid optimum is an upper bound within one cell diagonal
        assert r <= r_grid + 1e-12 and r_grid - r < 2 * math.sqrt(2) / 800


@given(st.integers(2, 5), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_minimal_ball_matches_socp(dim, n, seed):
    pts = np.random.default_rng(seed).normal(size=(n, dim))
    ball = minimal_enclosing_ball(pts)
    assert np.all(np.linalg.norm(pts - ball.center, axis=1) <= ball.radius * (1 + 1e-9) + 1e-12)
    _, r = socp_ball(pts)
    assert ball.radius == pytest.approx(r, abs=1e-6)


def test_jung_bound_values():
    assert jung_bound(2, 0.0, 1.0) == pytest.approx(math.sqrt(3))
    assert jung_bound(1, 0.0, 1.0) == 2.0
    mpmath.mp.dps = 30
    oracle = float(2 * mpmath.asin(mpmath.sqrt(mpmath.mpf(3) / 4) * mpmath.sin(mpmath.mpf(1) / 2)))
    assert jung_bound(2, 1.0, 0.5) == pytest.approx(oracle, abs=1e-14)
    assert jung_bound(2, 1.0, 0.5) == pytest.approx(0.8563, abs=1e-4)
    # curvature branches agree in the flat limit
    for k in (1e-8, -1e-8):
        assert jung_bound(2, k, 0.5) == pytest.approx(math.sqrt(3) * 0.5, rel=1e-7)
    assert jung_bound(3, -1.0, 0.5) == pytest.approx(float(2 * mpmath.asinh(mpmath.sqrt(mpmath.mpf(2) / 3) * mpmath.sinh(0.5))))
    with pytest.raises(ValueError):
        jung_bound(2, 1.0, 2.0)
    with pytest.raises(ValueError):
        jung_bound(0, 0.0, 1.0)


def test_jung_equality_cases():
    tri = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    rep = check_jung_euclidean(tri)
    assert rep.passed and rep.value == pytest.approx(rep.details["jung_bound"])
    two = check_jung_euclidean(np.array([[0, 0], [2, 0]]))
    assert two.passed and two.value == pytest.approx(2 * two.details["radius"])


@given(st.integers(2, 5), st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_jung_random_sets(dim, n, seed):
    pts = np.random.default_rng(seed).normal(size=(n, dim))
    rep = check_jung_euclidean(pts)
    assert rep.passed, rep
    assert rep.value >= 4 / 3 * rep.details["radius"] - rep.tolerance


# -- generalized gradient ------------------------------------------------------

def test_distance_field_examples():
    c = make_point_cloud([(0, 0), (2, 0), (5, 5)])
    R, gamma = distance_field(c, [0, 0])
    assert R == 0 and gamma.tolist() == [0]
    R, gamma = distance_field(c, [1, 1])
    assert R == pytest.approx(math.sqrt(2)) and gamma.tolist() == [0, 1]


def test_gradient_norm_examples():
    c = make_point_cloud([(-1, 0), (1, 0)])
    assert gradient_norm(c, [-1.5, 0.3]) == 1.0
    assert gradient_norm(c, [0, 0]) == pytest.approx(0.0, abs=1e-15)
    for h in (0.1, 1.0, 4.0):
        # aperture 2 phi at z with sin phi = 1 / |z|: gradient norm is cos phi
        assert gradient_norm(c, [0, h]) == pytest.approx(h / math.hypot(1, h))
    ang = np.array([0, 2 * math.pi / 3, 4 * math.pi / 3])
    tri = PointCloud(np.c_[np.cos(ang), np.sin(ang)])
    assert gradient_norm(tri, [0, 0]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        gradient_norm(c, [1, 0])


@given(st.integers(1, 14), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_min_norm_point_matches_qp(k, dim, seed):
    V = np.random.default_rng(seed).normal(size=(k, dim))
    x = min_norm_point(V)
    lam = cp.Variable(k, nonneg=True)
    cp.Problem(cp.Minimize(cp.sum_squares(lam @ V)), [cp.sum(lam) == 1]).solve(solver=cp.CLARABEL)
    assert np.linalg.norm(x) == pytest.approx(np.linalg.norm(lam.value @ V), abs=1e-5)


def cusp_bisector_norm(r, d):
    return math.sqrt(2 * r * d + d * d) / (r + d)


def test_ninja_star_cusp_bisector_gradient():
    r = 1.0
    star = make_shape("ninja_star", r=r)
    cloud, _ = sample_shape(star, 400_000)
    for d in (0.1, 0.05, 0.02, 0.01):
        u = math.sqrt((r + d) ** 2 - r * r)
        z = np.array([r - u, 0.0])
        R, gamma = distance_field(cloud, z)
        assert R == pytest.approx(d, abs=1e-6)
        # near-nearest points cluster at the two tangency points of the ball
        tangency = [c + r * (z - c) / np.linalg.norm(z - c) for c in (np.array([r, r]), np.array([r, -r]))]
        near = cloud.points[gamma]
        to_tangency = np.min([np.linalg.norm(near - t, axis=1) for t in tangency], axis=0)
        assert to_tangency.max() < 5e-3
        assert (near[:, 1] > 0).any() and (near[:, 1] < 0).any()
        assert gradient_norm(cloud, z) == pytest.approx(cusp_bisector_norm(r, d), abs=2e-3)
    values = [cusp_bisector_norm(r, d) for d in (0.1, 0.05, 0.02, 0.01, 1e-4)]
    assert all(b < a for a, b in zip(values, values[1:])) and values[-1] < 0.015


def test_circle_critical_function_matches_adjacent_pair_bound():
    n = 2000
    cloud, _ = sample_shape(make_shape("circle"), n)
    half = math.sin(math.pi / n)  # half the chord between neighbours
    est = critical_function_estimate(cloud, [0.1, 0.05, 0.02, 0.01], seed=0)
    for row in est["rows"]:
        assert row["chi_estimate"] == pytest.approx(math.sqrt(1 - (half / row["d"]) ** 2), abs=1e-6)
        assert row["chi_estimate"] >= 0.95


def test_critical_function_empty_level_and_mu():
    cloud = make_point_cloud([(0, 0), (1, 0)])
    est = critical_function_estimate(cloud, [0.25, 0.5], n_probe=200, mu=0.1)
    assert est["rows"][1]["chi_estimate"] == pytest.approx(0.0, abs=1e-12)
    assert est["r_mu_upper"] == 0.5
    assert est["label"] == "estimate"
    with pytest.raises(ValueError):
        critical_function_estimate(cloud, [0.0])


def test_critical_function_is_deterministic():
    cloud, _ = sample_shape(make_shape("ninja_star"), 500, mode="uniform", seed=3)
    a = critical_function_estimate(cloud, [0.05], n_probe=300, seed=9)
    b = critical_function_estimate(cloud, [0.05], n_probe=300, seed=9)
    assert a == b
