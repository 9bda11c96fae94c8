"""Simplicial homology with coefficients in the two-element field."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numba as nb
import numpy as np

from .complex import FlagComplex, euler_characteristic

__all__ = [
    "BoundaryMatrix",
    "BettiProfile",
    "boundary_matrix",
    "reduce_boundary",
    "betti_numbers",
    "connected_components",
]


@dataclass(frozen=True)
class BoundaryMatrix:
    """Sparse GF(2) boundary of dimension ``dim``: column ``c`` holds the sorted
    row indices ``rows[ptr[c]:ptr[c+1]]`` of the faces of the ``c``-th simplex."""

    dim: int
    n_rows: int
    rows: np.ndarray
    ptr: np.ndarray

    @property
    def n_cols(self) -> int:
        return len(self.ptr) - 1

    def column(self, c: int) -> list[int]:
        return self.rows[self.ptr[c]:self.ptr[c + 1]].tolist()

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for c in range(self.n_cols):
            m[self.column(c), c] = 1
        return m


@dataclass(frozen=True)
class BettiProfile:
    betti: list
    euler: int
    certified_up_to: int

    def to_dict(self) -> dict:
        return {"betti": list(self.betti), "euler": self.euler, "certified_up_to": self.certified_up_to}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BettiProfile":
        obj = json.loads(text)
        return cls(list(obj["betti"]), int(obj["euler"]), int(obj["certified_up_to"]))


def _face_rows(faces: np.ndarray, simplices: np.ndarray, n_vertices: int) -> np.ndarray:
    """Row index (position in ``faces``) of every codimension-1 face of each simplex."""
    m, k1 = simplices.shape
    k = k1 - 1
    drop = [np.delete(simplices, j, axis=1) for j in range(k1)]
    if float(n_vertices) ** k < 2.0 ** 62:
        base = np.int64(max(n_vertices, 1))

        def encode(a):
            key = np.zeros(len(a), dtype=np.int64)
            for c in range(a.shape[1]):
                key = key * base + a[:, c]
            return key

        keys = encode(faces)  # already sorted, faces are lexicographic
        rows = np.stack([np.searchsorted(keys, encode(f)) for f in drop], axis=1)
        ok = np.all(keys[np.minimum(rows, len(keys) - 1)] == np.stack([encode(f) for f in drop], 1))
        if not ok:
            raise ValueError("complex is not closed under faces")
    else:
        lookup = {tuple(r): i for i, r in enumerate(faces.tolist())}
        rows = np.array([[lookup[tuple(r)] for r in f.tolist()] for f in drop]).T.reshape(m, k1)
    rows.sort(axis=1)
    return rows


def boundary_matrix(complex_: FlagComplex, k: int) -> BoundaryMatrix:
    """Boundary from k-simplices to (k-1)-simplices, columns in canonical order."""
    if k < 1 or k > complex_.max_dim:
        raise ValueError(f"no boundary of dimension {k} in a complex with max_dim {complex_.max_dim}")
    simp = complex_.simplices[k]
    faces = complex_.simplices[k - 1]
    if len(simp) == 0:
        return BoundaryMatrix(k, len(faces), np.empty(0, dtype=np.int64), np.zeros(1, dtype=np.int64))
    rows = _face_rows(faces, simp, complex_.n_vertices)
    ptr = np.arange(0, rows.size + 1, k + 1, dtype=np.int64)
    return BoundaryMatrix(k, len(faces), rows.ravel().astype(np.int64), ptr)


@nb.njit(cache=True)
def _reduce(rows, ptr, n_rows, skip):
    """Left-to-right column reduction, pivot = largest row index ("low").

    Returns the rank and, for every row, whether it is the pivot of a
    nonzero reduced column.
    """
    n_cols = ptr.shape[0] - 1
    slot_of_row = np.full(n_rows, -1, dtype=np.int64)
    is_low = np.zeros(n_rows, dtype=np.bool_)
    start = np.empty(n_rows + 1, dtype=np.int64)
    length = np.empty(n_rows + 1, dtype=np.int64)
    pool = np.empty(max(1024, rows.shape[0]), dtype=np.int64)
    used = 0
    nslots = 0
    cur = np.empty(64, dtype=np.int64)
    tmp = np.empty(64, dtype=np.int64)
    rank = 0
    for c in range(n_cols):
        if skip[c]:
            continue
        L = ptr[c + 1] - ptr[c]
        if L > cur.shape[0]:
            cur = np.empty(2 * L, dtype=np.int64)
            tmp = np.empty(2 * L, dtype=np.int64)
        for t in range(L):
            cur[t] = rows[ptr[c] + t]
        while L > 0:
            s = slot_of_row[cur[L - 1]]
            if s < 0:
                break
            st = start[s]
            sl = length[s]
            if L + sl > tmp.shape[0]:
                grown = np.empty(2 * (L + sl), dtype=np.int64)
                grown[:L] = cur[:L]
                cur = grown
                tmp = np.empty(2 * (L + sl), dtype=np.int64)
            a = 0
            b = 0
            m = 0
            while a < L and b < sl:
                x = cur[a]
                y = pool[st + b]
                if x < y:
                    tmp[m] = x
                    m += 1
                    a += 1
                elif y < x:
                    tmp[m] = y
                    m += 1
                    b += 1
                else:
                    a += 1
                    b += 1
            while a < L:
                tmp[m] = cur[a]
                m += 1
                a += 1
            while b < sl:
                tmp[m] = pool[st + b]
                m += 1
                b += 1
            cur, tmp = tmp, cur
            L = m
        if L > 0:
            if used + L > pool.shape[0]:
                grown = np.empty(2 * (pool.shape[0] + L), dtype=np.int64)
                grown[:used] = pool[:used]
                pool = grown
            pool[used:used + L] = cur[:L]
            start[nslots] = used
            length[nslots] = L
            slot_of_row[cur[L - 1]] = nslots
            is_low[cur[L - 1]] = True
            nslots += 1
            used += L
            rank += 1
    return rank, is_low


def reduce_boundary(bd: BoundaryMatrix, skip: np.ndarray | None = None):
    """Rank of ``bd`` over GF(2) and the mask of pivot rows.

    ``skip`` marks columns known to reduce to zero (they are pivots of the
    reduced boundary one dimension up) and is only an optimisation.
    """
    if skip is None:
        skip = np.zeros(bd.n_cols, dtype=np.bool_)
    if bd.n_cols == 0:
        return 0, np.zeros(bd.n_rows, dtype=np.bool_)
    return _reduce(bd.rows, bd.ptr, bd.n_rows, skip)


def betti_numbers(complex_: FlagComplex, up_to: int | None = None) -> BettiProfile:
    """Betti numbers over GF(2) in dimensions ``0..up_to``.

    ``up_to`` must be below ``max_dim`` (the next boundary has to be
    materialised), unless the complex is complete, i.e. has no clique beyond
    ``max_dim``.
    """
    if up_to is None:
        up_to = complex_.max_dim - 1 if complex_.max_dim > 0 else 0
    if up_to < 0:
        raise ValueError("up_to must be >= 0")
    if up_to >= complex_.max_dim and not (up_to == complex_.max_dim and complex_.is_complete()):
        raise ValueError(
            f"Betti number {up_to} needs {up_to + 1}-simplices; complex only has max_dim {complex_.max_dim}"
        )
    ranks = [0] * (up_to + 2)  # ranks[k] = rank of boundary k
    skip = None
    for k in range(min(up_to + 1, complex_.max_dim), 0, -1):
        bd = boundary_matrix(complex_, k)
        ranks[k], skip = reduce_boundary(bd, skip)
    betti = [complex_.count(k) - ranks[k] - ranks[k + 1] for k in range(up_to + 1)]
    return BettiProfile(betti, euler_characteristic(complex_), up_to)


def connected_components(complex_: FlagComplex) -> int:
    """Components of the 1-skeleton by union-find (independent of any rank computation)."""
    parent = list(range(complex_.n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = complex_.n_vertices
    for a, b in complex_.edges.tolist():
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
            comps -= 1
    return comps
