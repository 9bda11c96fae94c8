"""Epsilon-neighbourhood graphs and the epsilon-path metric.

An epsilon-path is a chain of sample points whose consecutive gaps are all
*strictly* shorter than epsilon; the path metric is the length of the
shortest such chain.  On a finite cloud that is all-pairs shortest paths on
the graph of strict-epsilon edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy.spatial import cKDTree

from .geometry import FiniteMetricSpace, PointCloud, ShapeDescriptor, euclidean_metric, sample_shape
from .report import CheckReport

__all__ = [
    "EpsilonGraph",
    "DisconnectedGraph",
    "PairingError",
    "build_epsilon_graph",
    "path_metric",
    "check_monotonicity",
    "check_comparison",
    "check_stability",
    "convergence_sweep",
]


class DisconnectedGraph(ValueError):
    """The epsilon-graph has more than one component, so the path metric is undefined."""

    def __init__(self, epsilon, labels, witness):
        self.epsilon = epsilon
        self.labels = labels
        self.witness = witness
        ncomp = int(labels.max()) + 1
        super().__init__(
            f"epsilon-graph at epsilon={epsilon:g} has {ncomp} components; "
            f"vertices {witness[0]} and {witness[1]} are in different components "
            f"({labels[witness[0]]} and {labels[witness[1]]})"
        )


class PairingError(ValueError):
    """A reference/sample pairing is farther apart than the Hausdorff budget allows."""


@dataclass(frozen=True)
class EpsilonGraph:
    n: int
    epsilon: float
    i: np.ndarray
    j: np.ndarray
    w: np.ndarray

    @property
    def edges(self):
        return set(zip(self.i.tolist(), self.j.tolist(), self.w.tolist()))

    @property
    def n_edges(self) -> int:
        return len(self.w)

    def csr(self):
        """Symmetric adjacency in CSR form, neighbours sorted by index."""
        src = np.concatenate([self.i, self.j])
        dst = np.concatenate([self.j, self.i])
        wts = np.concatenate([self.w, self.w])
        order = np.lexsort((dst, src))
        src, dst, wts = src[order], dst[order], wts[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return np.cumsum(indptr), dst.astype(np.int64), wts.astype(np.float64)


def build_epsilon_graph(cloud: PointCloud, epsilon: float) -> EpsilonGraph:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    p = cloud.points
    pairs = cKDTree(p).query_pairs(epsilon, output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        w = np.linalg.norm(p[pairs[:, 0]] - p[pairs[:, 1]], axis=1)
        # coincident points stay joined by a zero-length edge
        keep = w < epsilon
        pairs, w = pairs[keep], w[keep]
    else:
        pairs, w = np.empty((0, 2), dtype=np.int64), np.empty(0)
    return EpsilonGraph(cloud.n, float(epsilon), pairs[:, 0].astype(np.int64),
                        pairs[:, 1].astype(np.int64), w)


@nb.njit(cache=True)
def _heap_less(hd, hv, a, b):
    return hd[a] < hd[b] or (hd[a] == hd[b] and hv[a] < hv[b])


@nb.njit(cache=True)
def _dijkstra_all(indptr, indices, weights, n):
    out = np.full((n, n), np.inf)
    cap = indices.shape[0] + n + 1
    hd = np.empty(cap)
    hv = np.empty(cap, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    for src in range(n):
        dist = out[src]
        done[:] = False
        dist[src] = 0.0
        size = 1
        hd[0] = 0.0
        hv[0] = src
        while size > 0:
            du = hd[0]
            u = hv[0]
            # pop
            size -= 1
            hd[0] = hd[size]
            hv[0] = hv[size]
            k = 0
            while True:
                l = 2 * k + 1
                if l >= size:
                    break
                c = l
                if l + 1 < size and _heap_less(hd, hv, l + 1, l):
                    c = l + 1
                if _heap_less(hd, hv, c, k):
                    hd[k], hd[c] = hd[c], hd[k]
                    hv[k], hv[c] = hv[c], hv[k]
                    k = c
                else:
                    break
            if done[u]:
                continue
            done[u] = True
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                nd = du + weights[e]
                if nd < dist[v]:
                    dist[v] = nd
                    # push
                    k = size
                    hd[k] = nd
                    hv[k] = v
                    size += 1
                    while k > 0:
                        par = (k - 1) // 2
                        if _heap_less(hd, hv, k, par):
                            hd[k], hd[par] = hd[par], hd[k]
                            hv[k], hv[par] = hv[par], hv[k]
                            k = par
                        else:
                            break
    return out


def _components(graph: EpsilonGraph) -> np.ndarray:
    parent = np.arange(graph.n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(graph.i.tolist(), graph.j.tolist()):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(graph.n)])
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def shortest_paths(graph: EpsilonGraph) -> np.ndarray:
    indptr, indices, weights = graph.csr()
    return _dijkstra_all(indptr, indices, weights, graph.n)


def path_metric(cloud: PointCloud, epsilon: float) -> FiniteMetricSpace:
    """All-pairs epsilon-path distances; raises :class:`DisconnectedGraph`."""
    graph = build_epsilon_graph(cloud, epsilon)
    if graph.n > 1:
        labels = _components(graph)
        if labels.max() > 0:
            other = int(np.argmax(labels != labels[0]))
            raise DisconnectedGraph(epsilon, labels, (0, other))
    d = shortest_paths(graph)
    # both directions are computed independently; keep them bit-identical
    d = np.minimum(d, d.T)
    return FiniteMetricSpace(d)


def _tau(*mats) -> float:
    return 1e-9 * max(float(np.max(m)) for m in mats)


def check_monotonicity(cloud: PointCloud, eps1: float, eps2: float) -> CheckReport:
    """Larger epsilon never lengthens a path distance."""
    if not 0 < eps1 <= eps2:
        raise ValueError("need 0 < eps1 <= eps2")
    d1 = path_metric(cloud, eps1).d
    d2 = d1 if eps1 == eps2 else path_metric(cloud, eps2).d
    gap = d2 - d1
    k = int(np.argmax(gap))
    tau = _tau(d1)
    worst = float(gap.flat[k])
    return CheckReport(
        quantity="path_metric_monotonicity", value=worst, bound=0.0,
        witness_pair=tuple(int(x) for x in np.unravel_index(k, gap.shape)), tolerance=tau,
        passed=worst <= tau, details={"eps1": eps1, "eps2": eps2},
    )


def _validate_pairing(ref: np.ndarray, sample: np.ndarray, budget: float):
    if ref.shape != sample.shape:
        raise PairingError("reference and sample must have the same shape")
    gaps = np.linalg.norm(ref - sample, axis=1)
    bad = np.nonzero(gaps >= budget)[0]
    if len(bad):
        raise PairingError(
            f"{len(bad)} pairs are >= {budget:g} apart (worst {gaps.max():g} at index {int(np.argmax(gaps))})"
        )


def check_comparison(shape: ShapeDescriptor, ref_params, sample_cloud: PointCloud,
                     xi: float, epsilon: float) -> CheckReport:
    """Two-sided bound ``|s1-s2| <= d^eps_S <= (d^L_X + xi eps) / (1 - xi)``.

    Reference point ``i`` (on the shape, at ``ref_params[i]``) is paired with
    sample point ``i``.
    """
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    ref_params = np.asarray(ref_params, dtype=float)
    _validate_pairing(shape.points(ref_params), sample_cloud.points, 0.5 * xi * epsilon)
    d_eps = path_metric(sample_cloud, epsilon).d
    d_euc = euclidean_metric(sample_cloud).d
    d_L = shape.intrinsic_matrix(ref_params).d
    upper = (d_L + xi * epsilon) / (1 - xi)
    lower_gap = d_euc - d_eps
    upper_gap = d_eps - upper
    np.fill_diagonal(upper_gap, -np.inf)
    tau = _tau(d_eps, upper)
    kl, ku = int(np.argmax(lower_gap)), int(np.argmax(upper_gap))
    worst = max(float(lower_gap.flat[kl]), float(upper_gap.flat[ku]))
    witness = kl if lower_gap.flat[kl] >= upper_gap.flat[ku] else ku
    off = ~np.eye(len(ref_params), dtype=bool)
    return CheckReport(
        quantity="path_metric_comparison", value=worst, bound=0.0,
        witness_pair=tuple(int(x) for x in np.unravel_index(witness, d_eps.shape)),
        tolerance=tau, passed=worst <= tau,
        details={
            "xi": xi, "epsilon": epsilon,
            "lower_violation": float(lower_gap.flat[kl]),
            "upper_violation": float(upper_gap.flat[ku]),
            "min_upper_slack": float(np.min((upper - d_eps)[off])) if off.any() else 0.0,
        },
    )


def check_stability(shape: ShapeDescriptor, ref_params, sample_cloud: PointCloud,
                    xi: float, epsilon: float, literal: bool = False) -> CheckReport:
    """``d^{(2+xi)eps}_X(p', q') <= (1 + xi) d^eps_S(p, q)`` over paired points.

    The multiplicative bound only holds for pairs with ``d^eps_S(p, q) >= eps``:
    two sample points closer than the pairing slack can have partners a full
    grid step apart.  Shorter pairs are held to the additive bound
    ``d^eps_S + xi eps`` instead.  ``literal=True`` applies the multiplicative
    bound to every pair; either way the literal violation count is reported.
    """
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    ref = shape.points(np.asarray(ref_params, dtype=float))
    _validate_pairing(ref, sample_cloud.points, 0.5 * xi * epsilon)
    d_x = path_metric(PointCloud(ref), (2 + xi) * epsilon).d
    d_s = path_metric(sample_cloud, epsilon).d
    mult = (1 + xi) * d_s
    tau = _tau(d_x, mult)
    literal_gap = d_x - mult
    np.fill_diagonal(literal_gap, -np.inf)
    if literal:
        gap = literal_gap
    else:
        gap = np.where(d_s >= epsilon, literal_gap, d_x - (d_s + xi * epsilon))
        np.fill_diagonal(gap, -np.inf)
    k = int(np.argmax(gap)) if gap.size > 1 else 0
    worst = float(gap.flat[k]) if gap.size > 1 else 0.0
    long_pairs = d_s >= epsilon
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(long_pairs, d_x / np.where(long_pairs, d_s, 1.0), 0.0)
    return CheckReport(
        quantity="path_metric_stability", value=worst, bound=0.0,
        witness_pair=tuple(int(x) for x in np.unravel_index(k, gap.shape)),
        tolerance=tau, passed=worst <= tau,
        details={"xi": xi, "epsilon": epsilon, "literal": literal,
                 "max_ratio_long_pairs": float(ratio.max()), "ratio_bound": 1 + xi,
                 "literal_violations": int(np.sum(literal_gap > tau))},
    )


def convergence_sweep(shape: ShapeDescriptor, n: int, eps_list) -> list[dict]:
    """Sup-error ``max |d^eps - d^L|`` on an ``n``-point grid, one row per epsilon."""
    cloud, params = sample_shape(shape, n, mode="grid")
    d_L = shape.intrinsic_matrix(params).d
    rows = []
    for eps in eps_list:
        try:
            d_eps = path_metric(cloud, eps).d
        except DisconnectedGraph as exc:
            rows.append({"epsilon": float(eps), "sup_error": None, "error": str(exc)})
            continue
        diff = np.abs(d_eps - d_L)
        k = int(np.argmax(diff))
        rows.append({
            "epsilon": float(eps),
            "sup_error": float(diff.flat[k]),
            "witness_pair": [int(x) for x in np.unravel_index(k, diff.shape)],
            "error": None,
        })
    return rows
