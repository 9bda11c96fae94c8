"""Sampling parameters and comparison quantities.

Hausdorff distance, correspondences and their distortion, (eps, R)-closeness,
the large-scale distortion ratio, circumradius/Jung bounds and the
generalized-gradient machinery behind the mu-reach.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree

from .geometry import FiniteMetricSpace, PointCloud, ShapeDescriptor, rng_stream
from .pathmetric import path_metric
from .report import CheckReport

__all__ = [
    "Correspondence",
    "Ball",
    "hausdorff_distance",
    "hausdorff_correspondence",
    "distortion",
    "max_distortion_pair",
    "check_eps_R_closeness",
    "gh_diameter_lower_bound",
    "large_scale_distortion",
    "minimal_enclosing_ball",
    "jung_bound",
    "check_jung_euclidean",
    "distance_field",
    "min_norm_point",
    "gradient_norm",
    "critical_function_estimate",
]


# ---------------------------------------------------------------------------
# Hausdorff distance and correspondences


@dataclass(frozen=True)
class Correspondence:
    """Index relation between spaces of sizes ``m`` and ``n`` covering both sides."""

    pairs: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if len(pairs) and (pairs.min() < 0 or pairs[:, 0].max() >= self.m or pairs[:, 1].max() >= self.n):
            raise IndexError("correspondence index out of range")
        left = np.zeros(self.m, dtype=bool)
        right = np.zeros(self.n, dtype=bool)
        left[pairs[:, 0]] = True
        right[pairs[:, 1]] = True
        if not left.all() or not right.all():
            raise ValueError(
                f"not a correspondence: {int((~left).sum())} left and {int((~right).sum())} right points uncovered"
            )
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def diagonal(cls, n: int) -> "Correspondence":
        idx = np.arange(n)
        return cls(np.stack([idx, idx], axis=1), n, n)

    def __len__(self):
        return len(self.pairs)


def hausdorff_distance(A: PointCloud, B: PointCloud) -> float:
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch: {A.dim} vs {B.dim}")
    ab = cKDTree(B.points).query(A.points)[0].max()
    ba = cKDTree(A.points).query(B.points)[0].max()
    return float(max(ab, ba))


def hausdorff_correspondence(A: PointCloud, B: PointCloud, threshold: float) -> Correspondence:
    """All index pairs closer than ``threshold`` (strict)."""
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch: {A.dim} vs {B.dim}")
    hits = cKDTree(B.points).query_ball_point(A.points, threshold)
    rows = []
    for i, js in enumerate(hits):
        if js:
            js = np.asarray(sorted(js))
            keep = js[np.linalg.norm(B.points[js] - A.points[i], axis=1) < threshold]
            rows.extend((i, int(j)) for j in keep)
    pairs = np.array(rows, dtype=np.int64).reshape(-1, 2)
    return Correspondence(pairs, A.n, B.n)


def _check_ranges(corr: Correspondence, dA: FiniteMetricSpace, dB: FiniteMetricSpace):
    if corr.m > dA.n or corr.n > dB.n:
        raise IndexError("correspondence refers to points outside the metric spaces")


def _pair_gap_max(corr, dA, dB, R=None, block=256):
    """Max ``|dA - dB|`` over pairs of corresponded pairs, optionally only where
    ``min(dA, dB) <= R``.  Returns ``(value, (k1, k2))`` with correspondence rows."""
    _check_ranges(corr, dA, dB)
    I, J = corr.pairs[:, 0], corr.pairs[:, 1]
    best, witness = 0.0, (0, 0)
    for s in range(0, len(I), block):
        a = dA.d[I[s:s + block]][:, I]
        b = dB.d[J[s:s + block]][:, J]
        gap = np.abs(a - b)
        if R is not None:
            gap = np.where(np.minimum(a, b) <= R, gap, -np.inf)
        k = int(np.argmax(gap))
        if gap.flat[k] > best:
            r, c = np.unravel_index(k, gap.shape)
            best, witness = float(gap.flat[k]), (s + int(r), int(c))
    return best, witness


def distortion(corr: Correspondence, dA: FiniteMetricSpace, dB: FiniteMetricSpace) -> float:
    """``max |dA(a1, a2) - dB(b1, b2)|`` over all ``(a1, b1), (a2, b2)`` in ``corr``.

    Half of it bounds the Gromov-Hausdorff distance from above.
    """
    return _pair_gap_max(corr, dA, dB)[0]


def max_distortion_pair(corr, dA, dB):
    return _pair_gap_max(corr, dA, dB)


def check_eps_R_closeness(corr: Correspondence, dA: FiniteMetricSpace, dB: FiniteMetricSpace,
                          eps: float, R: float) -> CheckReport:
    """Distortion at most ``2 eps`` on pairs where either distance is ``<= R``."""
    value, (k1, k2) = _pair_gap_max(corr, dA, dB, R=None if math.isinf(R) else R)
    tau = 1e-9 * max(float(dA.d.max()), float(dB.d.max()))
    p1, p2 = corr.pairs[k1], corr.pairs[k2]
    return CheckReport(
        quantity="eps_R_closeness", value=value, bound=2 * eps,
        witness_pair=((int(p1[0]), int(p1[1])), (int(p2[0]), int(p2[1]))),
        tolerance=tau, passed=value <= 2 * eps + tau, details={"eps": eps, "R": R},
    )


def gh_diameter_lower_bound(dA: FiniteMetricSpace, dB: FiniteMetricSpace) -> float:
    """``|diam A - diam B| / 2``, a lower bound on the Gromov-Hausdorff distance."""
    return 0.5 * abs(float(dA.d.max()) - float(dB.d.max()))


# ---------------------------------------------------------------------------
# large-scale distortion


def large_scale_distortion(shape: ShapeDescriptor, ref_params, epsilon: float, R: float,
                           return_witness: bool = False):
    """``max d^L / d^eps`` over reference pairs at intrinsic distance ``>= R``.

    The denominator is the epsilon-path metric of the reference sample; raises
    :class:`~ripsrecon.pathmetric.DisconnectedGraph` when it is undefined.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    params = np.asarray(ref_params, dtype=float)
    d_eps = path_metric(PointCloud(shape.points(params)), epsilon).d
    d_L = shape.intrinsic_matrix(params).d
    mask = d_L >= R
    np.fill_diagonal(mask, False)
    if not mask.any():
        raise ValueError(f"no reference pair at intrinsic distance >= {R:g}")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, d_L / d_eps, -np.inf)
    k = int(np.argmax(ratio))
    value = float(ratio.flat[k])
    if return_witness:
        return value, tuple(int(x) for x in np.unravel_index(k, ratio.shape))
    return value


# ---------------------------------------------------------------------------
# circumradius and Jung


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def contains(self, p, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.asarray(p) - self.center) <= self.radius + tol)


def _circumball(support: list[np.ndarray]) -> Ball:
    """Smallest ball with every support point on its boundary (centre in their affine hull)."""
    p0 = support[0]
    if len(support) == 1:
        return Ball(p0.copy(), 0.0)
    V = np.array([p - p0 for p in support[1:]])
    G = 2.0 * V @ V.T
    rhs = np.sum(V * V, axis=1)
    lam = np.linalg.lstsq(G, rhs, rcond=None)[0]
    c = p0 + lam @ V
    r = max(float(np.linalg.norm(p - c)) for p in support)
    return Ball(c, r)


def minimal_enclosing_ball(points) -> Ball:
    """Exact smallest enclosing ball (Welzl, move-to-front variant).

    Points are processed in their given order so the result is deterministic.
    """
    pts = np.asarray(points.points if isinstance(points, PointCloud) else points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("need a nonempty (n, dim) point array")
    dim = pts.shape[1]
    order = [pts[i] for i in range(len(pts))]
    scale = max(1.0, float(np.abs(pts).max()))
    tol = 1e-12 * scale

    def outside(ball, p):
        return ball is None or np.linalg.norm(p - ball.center) > ball.radius + tol

    def mtf(end: int, support: list):
        ball = _circumball(support) if support else None
        if len(support) == dim + 1:
            return ball
        for i in range(end):
            p = order[i]
            if outside(ball, p):
                ball = mtf(i, support + [p])
                order.insert(0, order.pop(i))
        return ball

    return mtf(len(order), [])


def jung_bound(n: int, kappa: float, rad: float) -> float:
    """Lower bound on the diameter of ``n + 1`` points with circumradius ``rad``
    in a CAT(kappa) space."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c = math.sqrt((n + 1) / (2 * n))
    if kappa > 0:
        sk = math.sqrt(kappa)
        if rad >= math.pi / (2 * sk):
            raise ValueError(f"circumradius {rad} must be below pi/(2 sqrt(kappa)) = {math.pi / (2 * sk)}")
        return 2 / sk * math.asin(c * math.sin(sk * rad))
    if kappa < 0:
        sk = math.sqrt(-kappa)
        return 2 / sk * math.asinh(c * math.sinh(sk * rad))
    return 2 * c * rad


def check_jung_euclidean(points) -> CheckReport:
    """Brute-force diameter against both the Euclidean Jung bound and ``4/3 rad``."""
    pts = np.asarray(points.points if isinstance(points, PointCloud) else points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    ball = minimal_enclosing_ball(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    diam = float(np.sqrt((diff ** 2).sum(-1)).max())
    n_distinct = len(np.unique(pts, axis=0))
    # points span at most min(n - 1, ambient) dimensions; smaller n gives the sharper bound
    hull_dim = max(min(n_distinct - 1, pts.shape[1]), 1)
    jung = jung_bound(hull_dim, 0.0, ball.radius)
    four_thirds = 4.0 / 3.0 * ball.radius
    tau = 1e-9 * max(diam, 1e-300)
    slack = min(diam - jung, diam - four_thirds)
    return CheckReport(
        quantity="jung_euclidean", value=diam, bound=max(jung, four_thirds),
        tolerance=tau, passed=slack >= -tau,
        details={"radius": ball.radius, "jung_bound": jung, "four_thirds_bound": four_thirds,
                 "n_points": int(len(pts)), "hull_dim": hull_dim},
    )


# ---------------------------------------------------------------------------
# distance function, generalized gradient, critical function


def _tie_tol(R: float) -> float:
    return max(1e-9, 1e-6 * R)


def distance_field(cloud: PointCloud, z):
    """Distance from ``z`` to the cloud and the indices of its (near-)nearest points."""
    z = np.asarray(z, dtype=float)
    dist = np.linalg.norm(cloud.points - z, axis=1)
    R = float(dist.min())
    gamma = np.nonzero(dist <= R + _tie_tol(R))[0]
    return R, gamma


def _simplex_projection(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0)


def min_norm_point(V: np.ndarray, max_exact: int = 8) -> np.ndarray:
    """Point of minimum norm in the convex hull of the rows of ``V``."""
    V = np.asarray(V, dtype=float)
    k, dim = V.shape
    if k == 1:
        return V[0].copy()
    if k <= max_exact:
        best, best_norm = None, np.inf
        for size in range(1, min(k, dim + 1) + 1):
            for S in combinations(range(k), size):
                W = V[list(S)]
                A = np.zeros((size + 1, size + 1))
                A[:size, :size] = W @ W.T
                A[:size, size] = 1
                A[size, :size] = 1
                b = np.zeros(size + 1)
                b[size] = 1
                try:
                    sol = np.linalg.solve(A, b)
                except np.linalg.LinAlgError:
                    continue
                lam = sol[:size]
                if np.any(lam < -1e-12) or not np.all(np.isfinite(lam)):
                    continue
                x = np.clip(lam, 0, None) @ W / max(np.clip(lam, 0, None).sum(), 1e-300)
                nx = float(np.linalg.norm(x))
                if nx < best_norm:
                    best, best_norm = x, nx
        if best is not None:
            return best
    # projected gradient on the simplex of convex weights
    G = V @ V.T
    step = 1.0 / max(np.linalg.eigvalsh(G).max(), 1e-300)
    lam = np.full(k, 1.0 / k)
    for _ in range(100000):
        new = _simplex_projection(lam - step * (G @ lam))
        if np.abs(new - lam).max() < 1e-10:
            lam = new
            break
        lam = new
    return lam @ V


def gradient_norm(cloud: PointCloud, z) -> float:
    """Norm of the generalized gradient of the distance function at ``z``.

    ``Theta`` is the point of the convex hull of the nearest points closest to
    ``z``; the result ``|z - Theta| / R`` lies in ``[0, 1]``.
    """
    z = np.asarray(z, dtype=float)
    R, gamma = distance_field(cloud, z)
    if R == 0:
        raise ValueError("generalized gradient is undefined on the cloud itself")
    if len(gamma) == 1:
        return 1.0
    return min(1.0, float(np.linalg.norm(min_norm_point(cloud.points[gamma] - z))) / R)


def _batch_gradient_norms(cloud: PointCloud, tree: cKDTree, Z: np.ndarray, k: int = 4):
    """Vectorised gradient norms for probe points; falls back to the exact
    routine when three or more points are tied."""
    k = min(k, cloud.n)
    dist, idx = tree.query(Z, k=k)
    dist = dist.reshape(len(Z), k)
    idx = idx.reshape(len(Z), k)
    R = dist[:, 0]
    tol = np.maximum(1e-9, 1e-6 * R)
    ties = (dist <= (R + tol)[:, None]).sum(axis=1)
    out = np.ones(len(Z))
    two = ties == 2
    if two.any():
        v1 = cloud.points[idx[two, 0]] - Z[two]
        v2 = cloud.points[idx[two, 1]] - Z[two]
        e = v2 - v1
        ee = np.maximum((e * e).sum(1), 1e-300)
        t = np.clip(-(v1 * e).sum(1) / ee, 0.0, 1.0)
        out[two] = np.minimum(1.0, np.linalg.norm(v1 + t[:, None] * e, axis=1) / R[two])
    for r in np.nonzero(ties >= 3)[0]:
        out[r] = gradient_norm(cloud, Z[r])
    return R, out


def _walk_to_level(cloud, tree, Z, d, iters=50):
    """Move probes along the gradient until they sit on the ``d``-level set."""
    Z = Z.copy()
    for _ in range(iters):
        R, idx = tree.query(Z)
        if np.all(np.abs(R - d) <= 1e-12 * (1 + d)):
            break
        near = cloud.points[idx]
        dirn = Z - near
        norm = np.linalg.norm(dirn, axis=1, keepdims=True)
        norm[norm == 0] = 1.0
        Z = near + d * dirn / norm
    return Z


def _bisector_probes(cloud, pairs, d, rng, n_dirs):
    p, q = cloud.points[pairs[:, 0]], cloud.points[pairs[:, 1]]
    mid = 0.5 * (p + q)
    e = q - p
    half = 0.5 * np.linalg.norm(e, axis=1)
    h = np.sqrt(np.maximum(d * d - half * half, 0.0))
    e /= np.maximum(2 * half, 1e-300)[:, None]
    dim = cloud.dim
    out = []
    if dim == 2:
        normal = np.stack([-e[:, 1], e[:, 0]], axis=1)
        out += [mid + h[:, None] * normal, mid - h[:, None] * normal]
    else:
        for _ in range(n_dirs):
            w = rng.standard_normal(p.shape)
            w -= (w * e).sum(1, keepdims=True) * e
            w /= np.maximum(np.linalg.norm(w, axis=1, keepdims=True), 1e-300)
            out.append(mid + h[:, None] * w)
    return np.concatenate(out) if out else np.empty((0, dim))


def critical_function_estimate(cloud: PointCloud, d_values, n_probe: int = 2000, seed: int = 0,
                               mu: float | None = None, max_pairs: int = 2_000_000,
                               n_dirs: int = 4) -> dict:
    """Upper estimates of the critical function on the given level values.

    Two probe families land on each ``d``-level set of the cloud's distance
    function: ``n_probe`` random offsets of sample points walked along the
    gradient, and the points at distance exactly ``d`` from both ends of each
    close pair (where the gradient can drop below 1).  Only probes whose
    distance to the cloud is ``d`` are kept; the minimum gradient norm over
    them bounds the true infimum from above.

    With ``mu`` given, ``r_mu_upper`` is the smallest probed ``d`` whose
    estimate is below ``mu``.  Because each estimate is an upper bound on
    the critical function, this is an upper bound on the mu-reach.
    """
    tree = cKDTree(cloud.points)
    rng = rng_stream(seed, "probing")
    n, dim = cloud.points.shape
    rows = []
    for d in d_values:
        d = float(d)
        if not d > 0:
            raise ValueError("level values must be positive")
        u = rng.standard_normal((n_probe, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        Z = _walk_to_level(cloud, tree, cloud.points[rng.integers(n, size=n_probe)] + d * u, d)
        pairs = tree.query_pairs(2 * d, output_type="ndarray")
        if len(pairs) > max_pairs:
            pairs = pairs[np.sort(rng.choice(len(pairs), max_pairs, replace=False))]
        if len(pairs):
            Z = np.concatenate([Z, _bisector_probes(cloud, pairs, d, rng, n_dirs)])
        R, grad = _batch_gradient_norms(cloud, tree, Z)
        on_level = np.abs(R - d) <= 1e-9 * (1 + d)
        if not on_level.any():
            warnings.warn(f"no probe reached the level set at d={d:g}; it may be empty", RuntimeWarning)
            rows.append({"d": d, "chi_estimate": None, "n_valid": 0, "witness": None})
            continue
        g = np.where(on_level, grad, np.inf)
        k = int(np.argmin(g))
        rows.append({"d": d, "chi_estimate": float(g[k]), "n_valid": int(on_level.sum()),
                     "witness": Z[k].tolist()})
    out = {"rows": rows, "mu": mu, "r_mu_upper": None, "label": "estimate"}
    if mu is not None:
        hits = [r["d"] for r in rows if r["chi_estimate"] is not None and r["chi_estimate"] < mu]
        out["r_mu_upper"] = min(hits) if hits else None
    return out
