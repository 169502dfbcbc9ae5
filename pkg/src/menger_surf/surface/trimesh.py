"""Triangle meshes: areas, sampling, normals, spatial queries, inside test."""

import warnings

import numpy as np

from .. import geom
from .bvh import BVH

# fixed, axis-avoiding directions for the parity votes (deterministic runs)
_PARITY_DIRS = np.array([
    [0.53772154625261, -0.12349872938470, 0.83400044827373],
    [-0.29834709218370, 0.74290184728349, 0.59930750947102],
    [0.10923847102930, 0.31415926535898, -0.94339483746290],
])
_PARITY_DIRS /= np.linalg.norm(_PARITY_DIRS, axis=1)[:, None]


class TriMesh:
    """Immutable triangle mesh with area tables, BVH and oriented normals.

    Stored normals point into the bounded component when the mesh is
    watertight (established by a ray-parity vote); ``normals_inward`` is None
    for open meshes, which have no interior.
    """

    def __init__(self, vertices, faces):
        vertices = np.asarray(vertices, dtype=float)
        faces = np.asarray(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValueError("vertices must be (n, 3)")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError("faces must be (m, 3) vertex indices")
        if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise ValueError("face index out of range")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("non-finite vertex coordinates")

        tri = vertices[faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        edges = np.stack([
            np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
            np.linalg.norm(tri[:, 2] - tri[:, 0], axis=1),
            np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1)], axis=-1)
        longest = edges.max(axis=-1)
        keep = areas > geom.TRI_DEGENERACY_REL * longest**2
        self.n_dropped = int(len(faces) - keep.sum())
        if self.n_dropped:
            warnings.warn(f"dropped {self.n_dropped} zero-area faces")
            faces, tri, cross, areas = faces[keep], tri[keep], cross[keep], areas[keep]
            edges = edges[keep]
        if len(faces) == 0:
            raise ValueError("empty mesh after removing degenerate faces")

        self.vertices = vertices
        self.faces = faces
        self.face_areas = areas
        self.cum_areas = np.cumsum(areas)
        self.total_area = float(self.cum_areas[-1])
        self.face_normals = cross / np.linalg.norm(cross, axis=1)[:, None]
        self._tri = tri
        self._e1 = tri[:, 1] - tri[:, 0]
        self._e2 = tri[:, 2] - tri[:, 0]
        self._cross_norm = 2.0 * areas
        # precomputed plane + barycentric gradients: ray batches then reduce
        # to matrix products instead of per-pair cross products
        self._fc = cross
        e11 = np.einsum("ij,ij->i", self._e1, self._e1)
        e22 = np.einsum("ij,ij->i", self._e2, self._e2)
        e12 = np.einsum("ij,ij->i", self._e1, self._e2)
        gram_det = np.maximum(e11 * e22 - e12 * e12, 1e-300)
        self._g1 = (e22[:, None] * self._e1 - e12[:, None] * self._e2) / gram_det[:, None]
        self._g2 = (e11[:, None] * self._e2 - e12[:, None] * self._e1) / gram_det[:, None]
        self._v0 = tri[:, 0]
        self._v0c = np.einsum("ij,ij->i", self._v0, self._fc)
        self._v0g1 = np.einsum("ij,ij->i", self._v0, self._g1)
        self._v0g2 = np.einsum("ij,ij->i", self._v0, self._g2)
        self.bvh = BVH(tri)

        lo, hi = vertices.min(axis=0), vertices.max(axis=0)
        self.diameter = float(np.linalg.norm(hi - lo))
        self.mean_edge = float(edges.mean())

        self.watertight = self._check_watertight()
        self.vertex_normals = self._angle_weighted_normals()
        self.normals_inward = None
        if self.watertight:
            self._orient_inward()

    # -- construction helpers -------------------------------------------------

    def _check_watertight(self):
        seen = {}
        for i, j, k in self.faces:
            for a, b in ((i, j), (j, k), (k, i)):
                key = (min(a, b), max(a, b))
                seen.setdefault(key, []).append(a < b)
        for orientations in seen.values():
            if len(orientations) != 2 or orientations[0] == orientations[1]:
                return False
        return True

    def _angle_weighted_normals(self):
        normals = np.zeros_like(self.vertices)
        tri = self._tri
        for corner in range(3):
            a = tri[:, (corner + 1) % 3] - tri[:, corner]
            b = tri[:, (corner + 2) % 3] - tri[:, corner]
            na = np.linalg.norm(a, axis=1)
            nb = np.linalg.norm(b, axis=1)
            cosang = np.einsum("ij,ij->i", a, b) / np.maximum(na * nb, 1e-300)
            ang = np.arccos(np.clip(cosang, -1.0, 1.0))
            np.add.at(normals, self.faces[:, corner], ang[:, None] * self.face_normals)
        nrm = np.linalg.norm(normals, axis=1)
        nz = nrm > 0.0
        normals[nz] /= nrm[nz, None]
        return normals

    def _orient_inward(self):
        m = len(self.faces)
        probe = np.linspace(0, m - 1, num=min(25, m), dtype=int)
        eps = 1e-4 * self.mean_edge
        votes = 0
        for f in probe:
            c = self._tri[f].mean(axis=0)
            if self.inside(c + eps * self.face_normals[f]):
                votes += 1
        if votes <= len(probe) // 2:
            # winding normals point outward; flip so stored normals are inward
            self.face_normals = -self.face_normals
            self.vertex_normals = -self.vertex_normals
        self.normals_inward = True

    # -- sampling ---------------------------------------------------------------

    def sample(self, rng, n):
        """Area-uniform surface samples: (points (n,3), normals (n,3))."""
        u = rng.random(n) * self.total_area
        fi = np.minimum(np.searchsorted(self.cum_areas, u), len(self.faces) - 1)
        r1 = np.sqrt(rng.random(n))
        r2 = rng.random(n)
        tri = self._tri[fi]
        pts = ((1.0 - r1)[:, None] * tri[:, 0]
               + (r1 * (1.0 - r2))[:, None] * tri[:, 1]
               + (r1 * r2)[:, None] * tri[:, 2])
        return pts, self.face_normals[fi].copy()

    def sample_on_faces(self, face_idx, rng):
        """Uniform barycentric samples on the given faces, one point each."""
        face_idx = np.asarray(face_idx, dtype=np.int64)
        m = len(face_idx)
        r1 = np.sqrt(rng.random(m))
        r2 = rng.random(m)
        tri = self._tri[face_idx]
        return ((1.0 - r1)[:, None] * tri[:, 0]
                + (r1 * (1.0 - r2))[:, None] * tri[:, 1]
                + (r1 * r2)[:, None] * tri[:, 2])

    # -- queries ------------------------------------------------------------------

    def segment_hits(self, a, b):
        """All intersection points of segment [a, b], sorted along it."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        cand = self.bvh.segment_candidates(a, b)
        if len(cand) == 0:
            return np.empty((0, 3))
        t, ok = self._ray_tri(a[None], (b - a)[None], cand)
        ok &= (t >= -1e-12) & (t <= 1.0 + 1e-12)
        t = np.sort(t[0][ok[0]])
        if len(t) == 0:
            return np.empty((0, 3))
        keep = np.ones(len(t), dtype=bool)
        keep[1:] = np.diff(t) > 1e-12  # collapse duplicates from shared edges
        t = t[keep]
        return a[None] + t[:, None] * (b - a)[None]

    def band_min_hits(self, origin, dirs, tmin, tmax):
        """Per-ray smallest hit parameter within [tmin, tmax].

        Rays are origin + t * dirs[i] with unit dirs; returns t (inf when the
        band holds no hit).  Hits below tmin do not occlude the band.
        """
        origin = np.asarray(origin, dtype=float)
        dirs = np.asarray(dirs, dtype=float)
        out = np.full(len(dirs), np.inf)
        # drop faces whose boxes cannot reach the [tmin, tmax] shell
        lo, hi = self.bvh.tri_lo, self.bvh.tri_hi
        gap = np.maximum(lo - origin, 0.0) + np.maximum(origin - hi, 0.0)
        dmin = np.linalg.norm(gap, axis=1)
        far = np.maximum(np.abs(lo - origin), np.abs(hi - origin))
        dmax = np.linalg.norm(far, axis=1)
        keep = (dmin <= tmax) & (dmax >= tmin)
        if not keep.any():
            return out
        idx = np.nonzero(keep)[0]
        chunk = max(1, int(4.0e6 / max(len(idx), 1)))
        for s in range(0, len(dirs), chunk):
            d = dirs[s:s + chunk]
            t, ok = self._ray_tri(origin[None], d, idx)
            ok &= (t >= tmin) & (t <= tmax)
            out[s:s + chunk] = np.where(ok, t, np.inf).min(axis=1)
        return out

    def inside(self, p):
        """Ray-parity membership with 3 fixed directions and majority vote."""
        if not self.watertight:
            raise ValueError("no interior")
        p = np.asarray(p, dtype=float)
        votes = 0
        for d in _PARITY_DIRS:
            t, ok = self._ray_tri(p[None], d[None], None)
            votes += int(np.count_nonzero(ok[0] & (t[0] > 0.0))) % 2
        return votes >= 2

    def has_interior(self):
        return self.watertight

    def normal_at(self, p):
        """Oriented normal of the vertex nearest to p."""
        p = np.asarray(p, dtype=float)
        d = self.vertices - p
        return self.vertex_normals[int(np.argmin(np.einsum("ij,ij->i", d, d)))].copy()

    def surface_distance(self, p):
        """Distance from p to the mesh (exact point-triangle distances)."""
        return float(np.sqrt(_point_tri_sqdist(np.asarray(p, dtype=float),
                                               self._tri).min()))

    def _ray_tri(self, origins, dirs, face_idx):
        """Ray/triangle hit parameters against a face subset.

        origins (1,3) or (k,3), dirs (k,3); face_idx selects faces (None for
        all).  Everything reduces to (k,3)x(3,m) matrix products against the
        precomputed plane normals and barycentric gradients.  Returns (t, ok)
        of shape (k, m); the parallel test is scale-free.
        """
        dirs = np.asarray(dirs, dtype=float)
        origins = np.asarray(origins, dtype=float)
        if face_idx is None:
            fc, v0c = self._fc, self._v0c
            g1, g2 = self._g1, self._g2
            v0g1, v0g2 = self._v0g1, self._v0g2
        else:
            fc, v0c = self._fc[face_idx], self._v0c[face_idx]
            g1, g2 = self._g1[face_idx], self._g2[face_idx]
            v0g1, v0g2 = self._v0g1[face_idx], self._v0g2[face_idx]
        den = dirs @ fc.T                              # (k, m)
        num = v0c[None, :] - origins @ fc.T            # broadcasts (1|k, m)
        dn = np.linalg.norm(dirs, axis=1)[:, None] + 1e-300
        cn = np.linalg.norm(fc, axis=1)[None, :]
        ok = np.abs(den) > 1e-13 * dn * cn
        t = np.where(ok, num / np.where(den == 0.0, 1.0, den), np.inf)
        tf = np.where(ok, t, 0.0)  # keep inf out of the barycentric products
        a1 = (origins @ g1.T) - v0g1[None, :]
        a2 = (origins @ g2.T) - v0g2[None, :]
        u = a1 + tf * (dirs @ g1.T)
        v = a2 + tf * (dirs @ g2.T)
        slack = 1e-10
        ok &= (u >= -slack) & (v >= -slack) & (u + v <= 1.0 + slack)
        return t, ok

    def describe(self):
        return {"kind": "mesh", "n_vertices": int(len(self.vertices)),
                "n_faces": int(len(self.faces)),
                "watertight": bool(self.watertight)}


def _point_tri_sqdist(p, tri):
    """Squared distance from one point to each triangle in an (m,3,3) stack."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = p[None] - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p[None] - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p[None] - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    def _safe_div(num, den):
        return num / np.where(den == 0.0, 1.0, den)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4
    denom = np.where(va + vb + vc == 0.0, 1.0, va + vb + vc)

    # interior projection by default, then edge regions, then vertex regions
    v_in = vb / denom
    w_in = vc / denom
    closest = a + v_in[:, None] * ab + w_in[:, None] * ac

    mask_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    w_bc = _safe_div(d4 - d3, (d4 - d3) + (d5 - d6))
    closest[mask_bc] = (b + w_bc[:, None] * (c - b))[mask_bc]

    mask_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    w_ac = _safe_div(d2, d2 - d6)
    closest[mask_ac] = (a + w_ac[:, None] * ac)[mask_ac]

    mask_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    v_ab = _safe_div(d1, d1 - d3)
    closest[mask_ab] = (a + v_ab[:, None] * ab)[mask_ab]

    mask_c = (d6 >= 0) & (d5 <= d6)
    closest[mask_c] = c[mask_c]
    mask_b = (d3 >= 0) & (d4 <= d3)
    closest[mask_b] = b[mask_b]
    mask_a = (d1 <= 0) & (d2 <= 0)
    closest[mask_a] = a[mask_a]

    diff = p[None] - closest
    return np.einsum("ij,ij->i", diff, diff)
