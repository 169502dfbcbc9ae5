"""Bounding-volume hierarchy over mesh triangles.

Binned surface-area-heuristic build with leaf size 4.  Nodes live in flat
arrays; traversal uses an explicit stack.  Only segment queries are needed
here: ``segment_candidates`` returns the indices of all triangles whose boxes
a segment touches, after which the caller runs exact intersection tests.
"""

import numpy as np

LEAF_SIZE = 4
N_BINS = 16


class BVH:
    def __init__(self, triangles):
        """triangles: (m, 3, 3) array of face vertex positions."""
        tri = np.asarray(triangles, dtype=float)
        m = len(tri)
        self.tri_lo = tri.min(axis=1)
        self.tri_hi = tri.max(axis=1)
        self.centroids = tri.mean(axis=1)

        self.lo = []
        self.hi = []
        self.left = []      # child index, -1 for leaf
        self.right = []
        self.start = []     # leaf: offset into self.order
        self.count = []
        self.order = np.arange(m)

        self._build(0, m)
        self.lo = np.asarray(self.lo)
        self.hi = np.asarray(self.hi)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.start = np.asarray(self.start, dtype=np.int64)
        self.count = np.asarray(self.count, dtype=np.int64)

    def _push(self, lo, hi):
        self.lo.append(lo)
        self.hi.append(hi)
        self.left.append(-1)
        self.right.append(-1)
        self.start.append(0)
        self.count.append(0)
        return len(self.lo) - 1

    def _build(self, begin, end):
        idx = self.order[begin:end].copy()
        node = self._push(self.tri_lo[idx].min(axis=0), self.tri_hi[idx].max(axis=0))
        n = end - begin
        if n <= LEAF_SIZE:
            self.start[node] = begin
            self.count[node] = n
            return node

        cents = self.centroids[idx]
        extent = cents.max(axis=0) - cents.min(axis=0)
        axis = int(np.argmax(extent))
        mid = None
        if extent[axis] > 0.0:
            # binned SAH: minimize count-weighted child box areas
            c = cents[:, axis]
            bins = np.minimum(((c - c.min()) / extent[axis] * N_BINS).astype(int),
                              N_BINS - 1)
            best_cost, best_mask = np.inf, None
            for b in range(1, N_BINS):
                mask = bins < b
                nl = int(mask.sum())
                if nl == 0 or nl == n:
                    continue
                cost = (nl * _half_area(self.tri_lo[idx[mask]].min(axis=0),
                                        self.tri_hi[idx[mask]].max(axis=0))
                        + (n - nl) * _half_area(self.tri_lo[idx[~mask]].min(axis=0),
                                                self.tri_hi[idx[~mask]].max(axis=0)))
                if cost < best_cost:
                    best_cost, best_mask = cost, mask
            if best_mask is not None:
                self.order[begin:end] = np.concatenate([idx[best_mask], idx[~best_mask]])
                mid = begin + int(best_mask.sum())
        if mid is None:
            # all centroids coincide along every axis: arbitrary even split
            order = np.argsort(cents[:, axis], kind="stable")
            self.order[begin:end] = idx[order]
            mid = begin + n // 2

        self.left[node] = self._build(begin, mid)
        self.right[node] = self._build(mid, end)
        return node

    def segment_candidates(self, a, b):
        """Indices of triangles whose AABBs the segment [a, b] intersects."""
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        out = []
        stack = [0]
        while stack:
            node = stack.pop()
            if not _segment_box(a, d, self.lo[node], self.hi[node]):
                continue
            if self.left[node] < 0:
                s, c = self.start[node], self.count[node]
                out.extend(self.order[s:s + c].tolist())
            else:
                stack.append(self.left[node])
                stack.append(self.right[node])
        return np.asarray(out, dtype=np.int64)


def _half_area(lo, hi):
    e = hi - lo
    return e[0] * e[1] + e[1] * e[2] + e[0] * e[2]


def _segment_box(a, d, lo, hi):
    """Slab test for a + t d, t in [0, 1], against the box [lo, hi]."""
    t0, t1 = 0.0, 1.0
    for k in range(3):
        if d[k] == 0.0:
            if a[k] < lo[k] or a[k] > hi[k]:
                return False
        else:
            inv = 1.0 / d[k]
            ta = (lo[k] - a[k]) * inv
            tb = (hi[k] - a[k]) * inv
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
            if t0 > t1:
                return False
    return True
