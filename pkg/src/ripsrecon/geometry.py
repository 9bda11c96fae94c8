"""Point clouds, finite metric spaces and the synthetic shape library.

Every built-in shape is a 1-dimensional curve (a circle, an arc-polygon, a
segment or a wedge of circles) so that its intrinsic length metric has an
exact closed form.  Shapes are parametrised by arclength ``t`` in
``[0, total_length)``.
"""
from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

__all__ = [
    "PointCloud",
    "FiniteMetricSpace",
    "ShapeDescriptor",
    "make_point_cloud",
    "euclidean_metric",
    "delta_parameter",
    "sample_shape",
    "perturb",
    "rng_stream",
    "grid_hausdorff_bound",
    "circle",
    "segment",
    "wedge_w",
    "figure_eight",
    "ninja_star",
    "make_shape",
    "SHAPES",
]


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for the named substream of a 64-bit seed."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())])


# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("point cloud must be a nonempty (n, dim) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud has a non-finite coordinate")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def to_csv(self, path):
        header = ",".join(f"x{k}" for k in range(self.dim))
        np.savetxt(path, self.points, delimiter=",", header=header, comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "PointCloud":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        if not all(h.startswith("x") for h in header):
            raise ValueError(f"{path}: expected header x0,x1,...")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return make_point_cloud(data)

    def to_json(self, path):
        Path(path).write_text(json.dumps({"dim": self.dim, "points": self.points.tolist()}))

    @classmethod
    def from_json(cls, path) -> "PointCloud":
        obj = json.loads(Path(path).read_text())
        pts = obj["points"] if isinstance(obj, dict) else obj
        return make_point_cloud(pts)


def make_point_cloud(coords) -> PointCloud:
    """Validate raw coordinates into a :class:`PointCloud`.

    Ragged input raises ``ValueError`` naming the dimension mismatch.
    """
    rows = [list(np.atleast_1d(np.asarray(c, dtype=float))) for c in coords]
    if not rows:
        raise ValueError("point cloud must be nonempty")
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: points have dimensions {sorted(dims)}")
    return PointCloud(np.array(rows, dtype=float))


_FMS_MAGIC = b"FMS1"


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Symmetric distance matrix on ``n`` indexed points.

    Construction checks the zero diagonal, exact symmetry and nonnegativity.
    The triangle inequality is O(n^3) and is only checked on demand by
    :meth:`triangle_violation`.
    """

    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise ValueError("distance matrix must be square and nonempty")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distances must be finite and nonnegative")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix must have a zero diagonal")
        if not np.array_equal(d, d.T):
            raise ValueError("distance matrix must be exactly symmetric")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def tolerance(self) -> float:
        return 1e-9 * float(self.d.max()) if self.n > 1 else 0.0

    def triangle_violation(self) -> float:
        """Largest ``d[i,k] - d[i,j] - d[j,k]`` over all triples (<= 0 for a metric)."""
        worst = -np.inf
        for j in range(self.n):
            worst = max(worst, float(np.max(self.d - self.d[:, j][:, None] - self.d[j][None, :])))
        return worst

    def is_metric(self) -> bool:
        return self.triangle_violation() <= self.tolerance

    def submetric(self, idx) -> "FiniteMetricSpace":
        idx = np.asarray(idx)
        return FiniteMetricSpace(self.d[np.ix_(idx, idx)])

    def to_csv(self, path):
        np.savetxt(path, self.d, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "FiniteMetricSpace":
        return cls(np.loadtxt(path, delimiter=",", ndmin=2))

    def to_bytes(self) -> bytes:
        return _FMS_MAGIC + struct.pack("<Q", self.n) + self.d.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "FiniteMetricSpace":
        if raw[:4] != _FMS_MAGIC:
            raise ValueError("not an FMS1 distance matrix")
        (n,) = struct.unpack("<Q", raw[4:12])
        body = raw[12:]
        if len(body) != 8 * n * n:
            raise ValueError(f"FMS1 payload has {len(body)} bytes, expected {8 * n * n}")
        return cls(np.frombuffer(body, dtype="<f8").reshape(n, n))

    def save(self, path):
        path = Path(path)
        if path.suffix == ".csv":
            self.to_csv(path)
        else:
            path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "FiniteMetricSpace":
        path = Path(path)
        if path.suffix == ".csv":
            return cls.from_csv(path)
        return cls.from_bytes(path.read_bytes())


def euclidean_metric(cloud: PointCloud) -> FiniteMetricSpace:
    # pdist computes each pair directly, so the result is exactly symmetric
    return FiniteMetricSpace(squareform(pdist(cloud.points)))


def delta_parameter(rho: float, kappa: float) -> float:
    """Sampling cap: ``min(pi / (4 sqrt(kappa)), rho)`` for kappa > 0, else ``rho``."""
    if not rho > 0:
        raise ValueError(f"convexity radius must be positive, got {rho}")
    if kappa > 0:
        return min(math.pi / (4.0 * math.sqrt(kappa)), rho)
    return rho


# ---------------------------------------------------------------------------
# shapes


@dataclass(frozen=True)
class ShapeDescriptor:
    id: str
    dim_ambient: int
    total_length: float
    sample_at: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    intrinsic_distance: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    kappa: float
    rho: float
    closed: bool = True
    expected_betti: tuple = (1, 1)
    params: dict = field(default_factory=dict)

    @property
    def delta_cap(self) -> float:
        return delta_parameter(self.rho, self.kappa)

    def points(self, t) -> np.ndarray:
        return self.sample_at(np.asarray(t, dtype=float))

    def intrinsic_matrix(self, params) -> FiniteMetricSpace:
        t = np.asarray(params, dtype=float)
        d = self.intrinsic_distance(t[:, None], t[None, :])
        d = np.minimum(d, d.T)
        np.fill_diagonal(d, 0.0)
        return FiniteMetricSpace(d)


def _loop_distance(s, t, length):
    g = np.abs(np.asarray(s) - np.asarray(t))
    return np.minimum(g, length - g)


def circle(r: float = 1.0) -> ShapeDescriptor:
    if r <= 0:
        raise ValueError("radius must be positive")
    length = 2 * math.pi * r

    def at(t):
        a = np.asarray(t) / r
        return np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)

    return ShapeDescriptor(
        id="circle", dim_ambient=2, total_length=length, sample_at=at,
        intrinsic_distance=lambda s, t: _loop_distance(s, t, length),
        kappa=(2 * math.pi / length) ** 2, rho=length / 4, params={"r": r},
    )


def segment(length: float = 1.0) -> ShapeDescriptor:
    """Straight segment along the x-axis: intrinsic and Euclidean metrics agree."""

    def at(t):
        t = np.asarray(t, dtype=float)
        return np.stack([t, np.zeros_like(t)], axis=-1)

    return ShapeDescriptor(
        id="segment", dim_ambient=2, total_length=float(length), sample_at=at,
        intrinsic_distance=lambda s, t: np.abs(np.asarray(s) - np.asarray(t)),
        kappa=0.0, rho=math.inf, closed=False, expected_betti=(1, 0),
        params={"length": length},
    )


def wedge_w() -> ShapeDescriptor:
    """The V-shaped set ``{y = |x|, |x| <= 1}``, traversed from (-1, 1) to (1, 1)."""
    half = math.sqrt(2.0)
    length = 2 * half

    def at(t):
        t = np.asarray(t, dtype=float)
        x = t / half - 1.0
        return np.stack([x, np.abs(x)], axis=-1)

    return ShapeDescriptor(
        id="wedge_w", dim_ambient=2, total_length=length, sample_at=at,
        intrinsic_distance=lambda s, t: np.abs(np.asarray(s) - np.asarray(t)),
        kappa=0.0, rho=math.inf, closed=False, expected_betti=(1, 0),
    )


def figure_eight(r: float = 1.0) -> ShapeDescriptor:
    """Two circles of radius ``r`` tangent at the origin.

    ``t`` in ``[0, 2 pi r)`` runs around the left loop, ``[2 pi r, 4 pi r)``
    around the right one; both start at the wedge point.
    """
    loop = 2 * math.pi * r

    def at(t):
        t = np.asarray(t, dtype=float)
        second = t >= loop
        a = np.where(second, t - loop, t) / r
        sign = np.where(second, 1.0, -1.0)
        return np.stack([sign * (r - r * np.cos(a)), r * np.sin(a)], axis=-1)

    def dist(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        ls, lt = s >= loop, t >= loop
        a, b = np.where(ls, s - loop, s), np.where(lt, t - loop, t)
        same = _loop_distance(a, b, loop)
        via_wedge = np.minimum(a, loop - a) + np.minimum(b, loop - b)
        return np.where(ls == lt, same, via_wedge)

    return ShapeDescriptor(
        id="figure_eight", dim_ambient=2, total_length=2 * loop, sample_at=at,
        intrinsic_distance=dist, kappa=(2 * math.pi / loop) ** 2, rho=loop / 4,
        expected_betti=(1, 2), params={"r": r},
    )


def ninja_star(r: float = 1.0) -> ShapeDescriptor:
    """Four quarter-circle arcs of radius ``r`` centred at ``(+-r, +-r)``.

    Consecutive arcs are tangent where they meet, so the curve has four
    zero-angle cusps at ``(+-r, 0)`` and ``(0, +-r)``.  Intrinsically it is a
    circle of length ``2 pi r``.
    """
    quarter = math.pi * r / 2
    length = 4 * quarter

    def at(t):
        t = np.mod(np.asarray(t, dtype=float), length)
        k = np.minimum((t // quarter).astype(int), 3)
        phi = (t - k * quarter) / r
        # arc 0 runs from the cusp (r, 0) to the cusp (0, r) around (r, r)
        alpha = -math.pi / 2 - phi
        x0 = r + r * np.cos(alpha)
        y0 = r + r * np.sin(alpha)
        rot = k * (math.pi / 2)
        c, s = np.cos(rot), np.sin(rot)
        return np.stack([c * x0 - s * y0, s * x0 + c * y0], axis=-1)

    return ShapeDescriptor(
        id="ninja_star", dim_ambient=2, total_length=length, sample_at=at,
        intrinsic_distance=lambda s, t: _loop_distance(s, t, length),
        kappa=(2 * math.pi / length) ** 2, rho=length / 4, params={"r": r},
    )


SHAPES: dict[str, Callable[..., ShapeDescriptor]] = {
    "circle": circle,
    "segment": segment,
    "wedge_w": wedge_w,
    "figure_eight": figure_eight,
    "ninja_star": ninja_star,
}


def make_shape(shape_id: str, **params) -> ShapeDescriptor:
    try:
        factory = SHAPES[shape_id]
    except KeyError:
        raise ValueError(f"unknown shape {shape_id!r}; known: {sorted(SHAPES)}") from None
    return factory(**params)


def grid_params(shape: ShapeDescriptor, n: int) -> np.ndarray:
    # open curves include both endpoints
    if shape.closed or n == 1:
        return np.arange(n) * (shape.total_length / n)
    return np.arange(n) * (shape.total_length / (n - 1))


def grid_hausdorff_bound(shape: ShapeDescriptor, n: int) -> float:
    """Upper bound on d_H(shape, grid sample of size n), in arclength."""
    if shape.closed:
        return shape.total_length / (2 * n)
    if n == 1:
        return shape.total_length
    return shape.total_length / (2 * (n - 1))


def sample_shape(shape: ShapeDescriptor, n: int, mode: str = "grid", seed: int = 0):
    """Return ``(cloud, params)`` for an arclength grid or i.i.d. uniform sample."""
    if n < 1:
        raise ValueError("need at least one sample")
    if mode == "grid":
        params = grid_params(shape, n)
    elif mode == "uniform":
        params = rng_stream(seed, "sampling").uniform(0.0, shape.total_length, size=n)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return PointCloud(shape.points(params)), params


def perturb(cloud: PointCloud, eta: float, seed: int = 0) -> PointCloud:
    """Displace each point uniformly inside the open ``eta``-ball."""
    if eta < 0:
        raise ValueError("noise radius must be nonnegative")
    if eta == 0:
        return cloud
    rng = rng_stream(seed, "noise")
    n, dim = cloud.points.shape
    u = rng.standard_normal((n, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radius = eta * rng.random(n) ** (1.0 / dim)
    return PointCloud(cloud.points + u * radius[:, None])


def load_cloud(path) -> PointCloud:
    path = Path(path)
    return PointCloud.from_json(path) if path.suffix == ".json" else PointCloud.from_csv(path)


def save_cloud(cloud: PointCloud, path):
    path = Path(path)
    (cloud.to_json if path.suffix == ".json" else cloud.to_csv)(path)


def as_cloud(obj: PointCloud | Sequence) -> PointCloud:
    return obj if isinstance(obj, PointCloud) else make_point_cloud(obj)
