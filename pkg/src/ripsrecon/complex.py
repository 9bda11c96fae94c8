"""Vietoris-Rips flag complexes at a fixed scale, and barycentric subdivision."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numba as nb
import numpy as np

from .geometry import FiniteMetricSpace

__all__ = [
    "FlagComplex",
    "rips_complex",
    "flag_complex",
    "barycentric_subdivision",
    "euler_characteristic",
]


@dataclass(frozen=True)
class FlagComplex:
    """Simplices per dimension, each an ``(m_k, k+1)`` array of increasing vertex
    tuples in lexicographic order.  ``simplices[0]`` lists every vertex."""

    n_vertices: int
    max_dim: int
    simplices: tuple

    def __post_init__(self):
        if len(self.simplices) != self.max_dim + 1:
            raise ValueError("need one simplex array per dimension 0..max_dim")

    def count(self, k: int) -> int:
        return len(self.simplices[k]) if 0 <= k <= self.max_dim else 0

    @property
    def counts(self) -> list[int]:
        return [len(s) for s in self.simplices]

    @property
    def top_dim(self) -> int:
        nonempty = [k for k, s in enumerate(self.simplices) if len(s)]
        return max(nonempty) if nonempty else -1

    @property
    def edges(self) -> np.ndarray:
        if self.max_dim < 1:
            return np.empty((0, 2), dtype=np.int64)
        return self.simplices[1]

    def is_complete(self) -> bool:
        """True when no clique of size ``max_dim + 2`` exists, i.e. nothing was cut off."""
        if self.max_dim < 1:
            # edges are not materialised, so completeness is only known for a point
            return self.n_vertices <= 1
        adj = _adjacency(self.n_vertices, self.simplices[1])
        return len(_extend(self.simplices[self.max_dim], *_csr_upper(adj))) == 0

    def simplex_list(self, k: int) -> list[tuple]:
        return [tuple(int(v) for v in row) for row in self.simplices[k]]

    def to_text(self) -> str:
        lines = []
        for k, arr in enumerate(self.simplices):
            lines.append(f"#dim {k}")
            lines.extend(" ".join(str(int(v)) for v in row) for row in arr)
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str, n_vertices: int | None = None) -> "FlagComplex":
        blocks: dict[int, list] = {}
        current = None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#dim"):
                current = int(line.split()[1])
                blocks.setdefault(current, [])
            else:
                if current is None:
                    raise ValueError("simplex listed before any '#dim k' header")
                blocks[current].append([int(v) for v in line.split()])
        max_dim = max(blocks) if blocks else 0
        simplices = tuple(
            np.array(blocks.get(k, []), dtype=np.int64).reshape(-1, k + 1) for k in range(max_dim + 1)
        )
        n = n_vertices if n_vertices is not None else len(simplices[0])
        return cls(n, max_dim, simplices)

    @classmethod
    def load(cls, path) -> "FlagComplex":
        return cls.from_text(Path(path).read_text())


def _adjacency(n: int, edges: np.ndarray) -> np.ndarray:
    adj = np.zeros((n, n), dtype=np.bool_)
    if len(edges):
        adj[edges[:, 0], edges[:, 1]] = True
        adj[edges[:, 1], edges[:, 0]] = True
    return adj


def _csr_upper(adj: np.ndarray):
    """Forward neighbour lists (neighbours with larger index) plus the dense matrix."""
    iu, ju = np.nonzero(np.triu(adj, 1))
    indptr = np.zeros(adj.shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, iu + 1, 1)
    return np.cumsum(indptr), ju.astype(np.int64), adj


@nb.njit(cache=True)
def _extend(simp, indptr, fwd, adj):
    """Extend each simplex by every common neighbour above its last vertex."""
    m, k = simp.shape
    total = 0
    for r in range(m):
        last = simp[r, k - 1]
        for e in range(indptr[last], indptr[last + 1]):
            v = fwd[e]
            ok = True
            for c in range(k - 1):
                if not adj[simp[r, c], v]:
                    ok = False
                    break
            if ok:
                total += 1
    out = np.empty((total, k + 1), dtype=np.int64)
    pos = 0
    for r in range(m):
        last = simp[r, k - 1]
        for e in range(indptr[last], indptr[last + 1]):
            v = fwd[e]
            ok = True
            for c in range(k - 1):
                if not adj[simp[r, c], v]:
                    ok = False
                    break
            if ok:
                for c in range(k):
                    out[pos, c] = simp[r, c]
                out[pos, k] = v
                pos += 1
    return out


def flag_complex(n: int, adjacency: np.ndarray, max_dim: int) -> FlagComplex:
    """Clique complex of a symmetric boolean adjacency matrix, up to ``max_dim``."""
    if max_dim < 0:
        raise ValueError("max_dim must be >= 0")
    adj = np.array(adjacency, dtype=np.bool_)
    np.fill_diagonal(adj, False)
    simplices = [np.arange(n, dtype=np.int64).reshape(-1, 1)]
    if max_dim >= 1:
        indptr, fwd, adj = _csr_upper(adj)
        current = simplices[0]
        for _ in range(1, max_dim + 1):
            current = _extend(current, indptr, fwd, adj)
            simplices.append(current)
    return FlagComplex(n, max_dim, tuple(simplices))


def rips_complex(metric: FiniteMetricSpace, beta: float, max_dim: int = 2) -> FlagComplex:
    """Vietoris-Rips complex: an edge joins ``i, j`` iff ``d[i, j] < beta`` (strict)."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return flag_complex(metric.n, metric.d < beta, max_dim)


def euler_characteristic(complex_: FlagComplex) -> int:
    return int(sum((-1) ** k * c for k, c in enumerate(complex_.counts)))


def barycentric_subdivision(complex_: FlagComplex) -> FlagComplex:
    """Order complex of the face poset.

    New vertex ``i`` is the ``i``-th simplex of the input in dimension-major,
    then lexicographic order; a chain of faces therefore always lists its
    vertices in increasing order.  The result carries one empty dimension
    above its top so that it is complete and every Betti number is computable.
    """
    top = max(complex_.top_dim, 0)
    index: dict[tuple, int] = {}
    for k in range(top + 1):
        for s in complex_.simplex_list(k):
            index[s] = len(index)
    n = len(index)
    # cofaces one dimension up, by new-vertex index
    up: list[list[int]] = [[] for _ in range(n)]
    for k in range(1, top + 1):
        for s in complex_.simplex_list(k):
            sid = index[s]
            for f in combinations(s, k):
                up[index[f]].append(sid)
    # every coface (not only the covering ones) is comparable
    above: list[set[int]] = [set() for _ in range(n)]
    for sid in reversed(range(n)):
        for c in up[sid]:
            above[sid].add(c)
            above[sid] |= above[c]
    chains = [[(v,) for v in range(n)]]
    for _ in range(top):
        nxt = [ch + (c,) for ch in chains[-1] for c in sorted(above[ch[-1]])]
        chains.append(nxt)
    simplices = tuple(
        np.array(sorted(ch), dtype=np.int64).reshape(-1, k + 1) for k, ch in enumerate(chains)
    ) + (np.empty((0, top + 2), dtype=np.int64),)
    return FlagComplex(n, top + 1, simplices)
