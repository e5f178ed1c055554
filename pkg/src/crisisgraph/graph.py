"""Exact k-nearest-neighbor similarity graph over document vectors.

Neighbors are found with a k-d tree (median split on the dimension of
largest spread, leaf buckets of at most 16 points). ``brute_force_knn``
answers the same query by a full scan and serves as the test oracle.
Ties in distance are broken by the smaller node index.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

LEAF_SIZE = 16
DEFAULT_K = 10


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def _sq_dists(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Squared distances, shape ``(len(queries), len(points))``.

    Tree search and the brute-force oracle both go through here so that
    equal inputs give bit-identical distances.
    """
    diff = points[None, :, :] - queries[:, None, :]
    return np.einsum("bij,bij->bi", diff, diff)


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        pts = np.asarray(vectors, dtype=np.float64)
    else:
        vectors = list(vectors)
        if not vectors:
            raise ValueError("cannot index an empty point set")
        pts = np.stack([np.asarray(getattr(v, "values", v), dtype=np.float64) for v in vectors])
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("cannot index an empty point set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    return np.ascontiguousarray(pts)


@dataclass
class _Node:
    lo: int                      # slice of KdTree.order
    hi: int
    box_lo: Optional[np.ndarray] = None
    box_hi: Optional[np.ndarray] = None
    dim: int = -1                # -1 marks a leaf
    split: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None


class KdTree:
    """Static k-d tree over an ``n x d`` point matrix; node ids are row indices."""

    def __init__(self, vectors, leaf_size: int = LEAF_SIZE):
        self.points = _as_matrix(vectors)
        self.leaf_size = leaf_size
        self.order = np.arange(len(self.points))
        self.root = self._build(0, len(self.points))
        self.sorted_points = self.points[self.order]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def _build(self, lo: int, hi: int) -> _Node:
        idx = self.order[lo:hi]
        pts = self.points[idx]
        node = _Node(lo, hi, pts.min(axis=0), pts.max(axis=0))
        if hi - lo <= self.leaf_size:
            return node
        spread = node.box_hi - node.box_lo
        dim = int(np.argmax(spread))
        # stable sort keeps construction deterministic under duplicates
        perm = np.argsort(pts[:, dim], kind="stable")
        self.order[lo:hi] = idx[perm]
        mid = lo + (hi - lo) // 2
        node.dim = dim
        node.split = float(self.points[self.order[mid], dim])
        node.left = self._build(lo, mid)
        node.right = self._build(mid, hi)
        return node

    def leaves(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.dim < 0:
                yield node
            else:
                stack.extend((node.right, node.left))

    def query(self, q, k: int, exclude: int = -1):
        """The ``k`` nearest points to coordinate ``q`` as ``(sq_dist, id)`` pairs."""
        q = np.asarray(q, dtype=np.float64)
        # max-heap of (-sq_dist, -id): the root is the current worst candidate
        heap: list = []
        points, order = self.points, self.order

        def visit(node: _Node, off: np.ndarray, rd: float):
            if len(heap) == k and rd > -heap[0][0] * (1 + 1e-12):
                return
            if node.dim < 0:
                ids = order[node.lo:node.hi]
                d2 = _sq_dists(points[ids], q[None, :])[0]
                for dist, i in zip(d2.tolist(), ids.tolist()):
                    if i == exclude:
                        continue
                    if len(heap) < k:
                        heapq.heappush(heap, (-dist, -i))
                    elif (dist, i) < (-heap[0][0], -heap[0][1]):
                        heapq.heapreplace(heap, (-dist, -i))
                return
            diff = q[node.dim] - node.split
            near, far = (node.left, node.right) if diff < 0 else (node.right, node.left)
            visit(near, off, rd)
            # lower bound for the far side: replace this axis' offset
            old = off[node.dim]
            new_rd = rd - old * old + diff * diff
            off[node.dim] = diff
            visit(far, off, new_rd)
            off[node.dim] = old

        visit(self.root, np.zeros(self.points.shape[1]), 0.0)
        return sorted((-d, -i) for d, i in heap)


    def query_bucket(self, qids: np.ndarray, k: int, scan_size: int = 256):
        """Exact k-NN for several stored points at once, excluding each itself.

        Returns ``(sq_dists, ids)`` arrays of shape ``(len(qids), k)``, rows
        ordered by ``(distance, id)``. Subtrees are pruned by the distance
        to their bounding box; unpruned subtrees of at most ``scan_size``
        points are scanned in one vectorized step.
        """
        order, spts = self.order, self.sorted_points
        Q = self.points[qids]
        B = len(qids)
        best_d = np.full((B, k), np.inf)
        best_i = np.full((B, k), self.n, dtype=np.int64)
        rows = np.arange(B)[:, None]

        def box_dist(node: _Node) -> np.ndarray:
            gap = np.maximum(node.box_lo - Q, 0.0) + np.maximum(Q - node.box_hi, 0.0)
            return np.einsum("ij,ij->i", gap, gap)

        def visit(node: _Node, rd: np.ndarray):
            nonlocal best_d, best_i
            if np.all(rd > best_d[:, -1] * (1 + 1e-12)):
                return
            if node.dim < 0 or node.hi - node.lo <= scan_size:
                ids = order[node.lo:node.hi]
                d2 = _sq_dists(spts[node.lo:node.hi], Q)
                d2[qids[:, None] == ids[None, :]] = np.inf
                cat_d = np.hstack([best_d, d2])
                cat_i = np.hstack([best_i, np.broadcast_to(ids, (B, len(ids)))])
                sel = np.lexsort((cat_i, cat_d), axis=-1)[:, :k]
                best_d, best_i = cat_d[rows, sel], cat_i[rows, sel]
                return
            children = [(box_dist(c), c) for c in (node.left, node.right)]
            children.sort(key=lambda c: float(c[0].sum()))
            for child_rd, child in children:
                visit(child, child_rd)

        visit(self.root, box_dist(self.root))
        return best_d, best_i

    def query_groups(self, size: int = 128):
        """Disjoint subtrees of at most ``size`` points covering every point."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.dim < 0 or node.hi - node.lo <= size:
                yield self.order[node.lo:node.hi]
            else:
                stack.extend((node.right, node.left))


def build_kdtree(vectors, leaf_size: int = LEAF_SIZE) -> KdTree:
    return KdTree(vectors, leaf_size)


def _check_query(n: int, query_id: int, k: int) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 <= query_id < n:
        raise KeyError(f"unknown node id {query_id}")


def knn_query(tree: KdTree, query_id: int, k: int):
    """The ``min(k, n-1)`` nearest other nodes as ``(id, distance)``, ascending."""
    _check_query(tree.n, query_id, k)
    kk = min(k, tree.n - 1)
    if kk == 0:
        return []
    found = tree.query(tree.points[query_id], kk, exclude=query_id)
    return [(i, math.sqrt(d2)) for d2, i in found]


def brute_force_knn(vectors, i: int, k: int):
    """Full-scan reference for :func:`knn_query`."""
    pts = _as_matrix(vectors)
    n = pts.shape[0]
    _check_query(n, i, k)
    d2 = _sq_dists(pts, pts[i][None, :])[0]
    ids = np.arange(n)
    keep = ids != i
    ids, d2 = ids[keep], d2[keep]
    order = np.lexsort((ids, d2))[:min(k, n - 1)]
    return [(int(ids[j]), math.sqrt(float(d2[j]))) for j in order]


@dataclass
class SimilarityGraph:
    """Directed k-NN adjacency; ``adjacency[i]`` is ``[(j, dist), ...]`` ascending."""

    n: int
    k: int
    adjacency: list

    def neighbor_sets(self) -> list[set]:
        """Symmetrized neighbor relation: j ~ i if either directed edge exists."""
        sets = [set() for _ in range(self.n)]
        for i, edges in enumerate(self.adjacency):
            for j, _ in edges:
                sets[i].add(j)
                sets[j].add(i)
        return sets

    def save(self, path, ids: Optional[Sequence[str]] = None) -> None:
        """Write ``n k`` then ``i j dist`` lines; ``ids`` go to ``<path>.ids``."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{self.n} {self.k}\n")
            for i, edges in enumerate(self.adjacency):
                for j, dist in edges:
                    fh.write(f"{i} {j} {dist!r}\n")
        if ids is not None:
            if len(ids) != self.n:
                raise ValueError("id map length differs from node count")
            with open(sidecar_path(path), "w", encoding="utf-8", newline="\n") as fh:
                for i, doc_id in enumerate(ids):
                    fh.write(f"{i}\t{doc_id}\n")

    @classmethod
    def load(cls, path) -> "SimilarityGraph":
        with open(path, encoding="utf-8") as fh:
            n, k = (int(x) for x in fh.readline().split())
            adjacency: list = [[] for _ in range(n)]
            for lineno, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 'i j dist'")
                i, j = int(parts[0]), int(parts[1])
                if not (0 <= i < n and 0 <= j < n):
                    raise ValueError(f"{path}:{lineno}: node index out of range")
                adjacency[i].append((j, float(parts[2])))
        return cls(n, k, adjacency)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".ids")


def load_id_map(path) -> list[str]:
    ids = []
    with open(sidecar_path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            idx, doc_id = line.rstrip("\n").split("\t")
            if int(idx) != lineno:
                raise ValueError(f"{path}: id map out of order at line {lineno + 1}")
            ids.append(doc_id)
    return ids


def build_graph(vectors, k: int = DEFAULT_K) -> SimilarityGraph:
    tree = build_kdtree(vectors)
    if k < 1:
        raise ValueError("k must be >= 1")
    if tree.n < 2:
        raise ValueError("graph needs at least 2 nodes")
    kk = min(k, tree.n - 1)
    adjacency: list = [None] * tree.n
    for qids in tree.query_groups():
        d2, ids = tree.query_bucket(qids, kk)
        for q, row_d, row_i in zip(qids.tolist(), d2.tolist(), ids.tolist()):
            adjacency[q] = [(j, math.sqrt(d)) for j, d in zip(row_i, row_d)]
    return SimilarityGraph(tree.n, k, adjacency)


def brute_force_graph(vectors, k: int = DEFAULT_K) -> SimilarityGraph:
    pts = _as_matrix(vectors)
    return SimilarityGraph(len(pts), k, [brute_force_knn(pts, i, k) for i in range(len(pts))])
