"""Approximate nearest neighbours over document vectors.

A forest of random-projection trees with angular distance. Items are stored
unit-normalised; every internal node holds a unit normal and an offset, every
leaf a contiguous run of item indices in the tree's permutation array.
Search is best-first over all trees with one shared priority queue, followed
by exact angular rescoring of the deduplicated candidate pool.
"""
import heapq
import json
import logging
import struct
from dataclasses import dataclass

import numba
import numpy as np

log = logging.getLogger(__name__)

MAGIC = b"BMANNF"
VERSION = 1
MAX_DEPTH = 64
SPLIT_ATTEMPTS = 3
PARTNER_CANDIDATES = 8
EPS = 1e-12


@dataclass(frozen=True)
class SearchParams:
    k: int = 20
    search_nodes: int = 20000

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def angular_distance(a, b):
    """sqrt(2 - 2 cos(a, b)); both vectors must be non-zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cos = float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * cos)))


@numba.njit(cache=True)
def _build_tree(data, leaf_capacity, max_depth, seed, split_attempts, partner_candidates):
    n, dim = data.shape
    max_nodes = 2 * n + 1
    left = np.full(max_nodes, -1, dtype=np.int32)
    right = np.full(max_nodes, -1, dtype=np.int32)
    start = np.zeros(max_nodes, dtype=np.int32)
    end = np.zeros(max_nodes, dtype=np.int32)
    normals = np.zeros((max_nodes, dim), dtype=np.float32)
    offsets = np.zeros(max_nodes, dtype=np.float64)
    perm = np.arange(n).astype(np.int32)
    side = np.zeros(n, dtype=np.bool_)
    np.random.seed(seed)

    # explicit stack of (node, start, end, depth)
    stack = [(0, 0, n, 0)]
    n_nodes = 1
    while len(stack) > 0:
        node, lo, hi, depth = stack.pop()
        size = hi - lo
        start[node] = lo
        end[node] = hi
        if size <= leaf_capacity or depth >= max_depth:
            continue

        normal = np.zeros(dim)
        offset = 0.0
        n_right = 0
        for _ in range(split_attempts):
            # first point at random, partner = farthest of a few sampled points
            i = lo + np.random.randint(size)
            a = data[perm[i]]
            j = -1
            best = -1.0
            for _c in range(partner_candidates):
                c = lo + np.random.randint(size - 1)
                if c >= i:
                    c += 1
                dc = data[perm[c]] - a
                dd = np.dot(dc, dc)
                if dd > best:
                    best = dd
                    j = c
            b = data[perm[j]]
            diff = a - b
            norm = np.sqrt(np.dot(diff, diff))
            if norm <= 1e-12:
                continue
            normal = diff / norm
            offset = np.dot(normal, 0.5 * (a + b))
            n_right = 0
            for t in range(lo, hi):
                s = np.dot(normal, data[perm[t]]) - offset > 0.0
                side[t - lo] = s
                n_right += s
            if 0 < n_right < size:
                break

        if n_right == 0 or n_right == size:
            # random hyperplane through the subset mean
            normal = np.random.normal(0.0, 1.0, dim)
            normal /= np.sqrt(np.dot(normal, normal))
            mean = np.zeros(dim)
            for t in range(lo, hi):
                mean += data[perm[t]]
            offset = np.dot(normal, mean / size)
            n_right = 0
            for t in range(lo, hi):
                s = np.dot(normal, data[perm[t]]) - offset > 0.0
                side[t - lo] = s
                n_right += s
            if n_right == 0 or n_right == size:
                # coincident points: arbitrary balanced assignment
                n_right = 0
                for t in range(size):
                    s = np.random.random() < 0.5
                    side[t] = s
                    n_right += s
                if n_right == 0 or n_right == size:
                    n_right = size // 2
                    for t in range(size):
                        side[t] = t < n_right

        # stable in-place partition: left side first
        tmp = perm[lo:hi].copy()
        w = lo
        for t in range(size):
            if not side[t]:
                perm[w] = tmp[t]
                w += 1
        mid = w
        for t in range(size):
            if side[t]:
                perm[w] = tmp[t]
                w += 1

        normals[node] = normal.astype(np.float32)
        offsets[node] = offset
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        stack.append((right[node], mid, hi, depth + 1))
        stack.append((left[node], lo, mid, depth + 1))

    return (left[:n_nodes].copy(), right[:n_nodes].copy(), start[:n_nodes].copy(),
            end[:n_nodes].copy(), normals[:n_nodes].copy(), offsets[:n_nodes].copy(), perm)


@numba.njit(cache=True)
def _search(q, items, roots, left, right, start, end, normals, offsets, perms,
            perm_base, search_nodes):
    n_items = items.shape[0]
    seen = np.zeros(n_items, dtype=np.bool_)
    cand = np.empty(n_items, dtype=np.int64)
    n_cand = 0
    heap = [(-np.inf, np.int64(0), np.int64(0))]
    heap.pop()
    for t in range(roots.shape[0]):
        heapq.heappush(heap, (-np.inf, np.int64(roots[t]), np.int64(t)))
    inspected = 0
    while len(heap) > 0 and inspected < search_nodes:
        neg_pri, node, tree = heapq.heappop(heap)
        inspected += 1
        pri = -neg_pri
        if left[node] < 0:
            base = perm_base[tree]
            for p in range(start[node], end[node]):
                item = perms[base + p]
                if not seen[item]:
                    seen[item] = True
                    cand[n_cand] = item
                    n_cand += 1
        else:
            margin = 0.0
            for d in range(q.shape[0]):
                margin += normals[node, d] * q[d]
            margin -= offsets[node]
            heapq.heappush(heap, (-min(pri, margin), np.int64(right[node]), tree))
            heapq.heappush(heap, (-min(pri, -margin), np.int64(left[node]), tree))
    cand = cand[:n_cand]
    dist = np.empty(n_cand)
    for c in range(n_cand):
        cos = np.dot(items[cand[c]], q)
        dist[c] = np.sqrt(max(0.0, 2.0 - 2.0 * cos))
    return cand, dist, inspected


def _unit_rows(vectors):
    norms = np.linalg.norm(vectors, axis=1)
    return vectors / norms[:, None], norms


class AnnIndex:
    """Immutable random-projection forest; build with :meth:`build`."""

    def __init__(self, ids, items, roots, left, right, start, end, normals, offsets,
                 perms, n_trees, leaf_capacity):
        self.ids = list(ids)
        self.items = items
        self.roots = roots
        self.left = left
        self.right = right
        self.start = start
        self.end = end
        self.normals = normals
        self.offsets = offsets
        self.perms = perms
        self.n_trees = n_trees
        self.leaf_capacity = leaf_capacity
        self.perm_base = np.arange(n_trees, dtype=np.int64) * len(self.ids)
        for arr in (items, left, right, start, end, normals, offsets, perms):
            arr.setflags(write=False)

    @property
    def dim(self):
        return self.items.shape[1]

    @property
    def n_nodes(self):
        return len(self.left)

    def __len__(self):
        return len(self.ids)

    @classmethod
    def build(cls, ids, vectors, n_trees=50, leaf_capacity=16, seed=0):
        """Build a forest over ``vectors`` (rows aligned with ``ids``).

        All-zero rows are dropped (logged); tree ``t`` uses a seed derived
        from ``seed`` and ``t`` only, so trees are independent of each other.
        """
        vectors = np.asarray(vectors, dtype=np.float64)
        ids = list(ids)
        if vectors.ndim != 2 or vectors.shape[0] != len(ids):
            raise ValueError("vectors must be a 2-d array with one row per id")
        if n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {n_trees}")
        if leaf_capacity < 1:
            raise ValueError(f"leaf_capacity must be >= 1, got {leaf_capacity}")
        nonzero = np.any(vectors != 0.0, axis=1)
        if not nonzero.all():
            dropped = [i for i, keep in zip(ids, nonzero) if not keep]
            log.info("excluding %d all-zero vectors from index: %s", len(dropped),
                     ", ".join(map(str, dropped[:20])))
            ids = [i for i, keep in zip(ids, nonzero) if keep]
            vectors = vectors[nonzero]
        if not ids:
            raise ValueError("cannot build an index over an empty item set")

        items, _ = _unit_rows(vectors)
        items = np.ascontiguousarray(items)
        parts = []
        offset = 0
        roots = np.empty(n_trees, dtype=np.int64)
        ss = np.random.SeedSequence(seed)
        tree_seeds = [int(s.generate_state(1)[0] % (2**31 - 1)) for s in ss.spawn(n_trees)]
        for t in range(n_trees):
            tree = _build_tree(items, leaf_capacity, MAX_DEPTH, tree_seeds[t], SPLIT_ATTEMPTS,
                               PARTNER_CANDIDATES)
            lt, rt, st, en, nm, off, perm = tree
            lt = np.where(lt >= 0, lt + offset, -1).astype(np.int32)
            rt = np.where(rt >= 0, rt + offset, -1).astype(np.int32)
            parts.append((lt, rt, st, en, nm, off, perm))
            roots[t] = offset
            offset += len(lt)
        cat = [np.concatenate([p[i] for p in parts]) for i in range(7)]
        return cls(ids, items, roots, *cat, n_trees=n_trees, leaf_capacity=leaf_capacity)

    def query(self, q, params=SearchParams()):
        """Return ``[(item_id, angular_distance), ...]`` ascending, at most k long."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"query has shape {q.shape}, index dim is {self.dim}")
        norm = np.linalg.norm(q)
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("query vector must be finite and non-zero")
        budget = max(params.search_nodes, self.n_trees)
        cand, dist, _ = _search(q / norm, self.items, self.roots, self.left, self.right,
                                self.start, self.end, self.normals, self.offsets,
                                self.perms, self.perm_base, budget)
        # stable order on ties: by index position
        order = np.lexsort((cand, dist))[: params.k]
        return [(self.ids[cand[i]], float(dist[i])) for i in order]

    def exhaustive_budget(self):
        """A node budget large enough to visit every node of every tree."""
        return self.n_nodes

    # -- serialisation -------------------------------------------------------

    def to_bytes(self):
        header = MAGIC + struct.pack("<IIIIII", VERSION, self.dim, self.n_trees,
                                     len(self.ids), self.leaf_capacity, self.n_nodes)
        ids_blob = json.dumps(self.ids, ensure_ascii=False).encode("utf-8")
        chunks = [header, struct.pack("<Q", len(ids_blob)), ids_blob]
        for arr, dtype in ((self.items, "<f8"), (self.roots, "<i8"), (self.left, "<i4"),
                           (self.right, "<i4"), (self.start, "<i4"), (self.end, "<i4"),
                           (self.normals, "<f4"), (self.offsets, "<f8"), (self.perms, "<i4")):
            chunks.append(np.ascontiguousarray(arr, dtype=dtype).tobytes())
        return b"".join(chunks)

    @classmethod
    def from_bytes(cls, blob):
        if blob[: len(MAGIC)] != MAGIC:
            raise ValueError("not an index file (bad magic)")
        pos = len(MAGIC)
        version, dim, n_trees, n_items, leaf_capacity, n_nodes = struct.unpack_from("<IIIIII", blob, pos)
        if version != VERSION:
            raise ValueError(f"unsupported index version {version} (expected {VERSION})")
        pos += 24
        (ids_len,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        ids = json.loads(blob[pos: pos + ids_len].decode("utf-8"))
        pos += ids_len
        arrays = []
        for dtype, shape in (("<f8", (n_items, dim)), ("<i8", (n_trees,)), ("<i4", (n_nodes,)),
                             ("<i4", (n_nodes,)), ("<i4", (n_nodes,)), ("<i4", (n_nodes,)),
                             ("<f4", (n_nodes, dim)), ("<f8", (n_nodes,)),
                             ("<i4", (n_trees * n_items,))):
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=pos).reshape(shape)
            pos += arr.nbytes
            arrays.append(arr.astype(arr.dtype.newbyteorder("=")))
        if pos != len(blob):
            raise ValueError("trailing bytes in index file")
        return cls(ids, *arrays, n_trees=n_trees, leaf_capacity=leaf_capacity)

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

