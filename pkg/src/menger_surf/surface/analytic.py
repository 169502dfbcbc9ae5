"""Closed-form surfaces: sphere, torus, saddle patch, capsule.

Each kind provides area-exact sampling, closed-form segment intersection,
normals, an inside test when the surface bounds a volume, and a triangulated
stand-in via ``tessellate`` for the face-based diagnostics.  Normals point
into the bounded component (inward) where one exists.
"""

import numpy as np

from . import shapes


def _solve_quadratic_batch(A, B, C):
    """Stable roots of A t^2 + B t + C = 0, vectorized.

    Returns (t1, t2, valid) with t1 <= t2; linear equations fill both slots
    with the single root; no real root -> valid False.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    lin = np.abs(A) < 1e-300
    disc = B * B - 4.0 * A * C
    valid = (disc >= 0.0) & ~lin
    sq = np.sqrt(np.where(disc >= 0.0, disc, 0.0))
    q = -0.5 * (B + np.where(B >= 0.0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(valid, q / np.where(A == 0.0, 1.0, A), np.inf)
        r2 = np.where(valid & (np.abs(q) > 0.0), C / np.where(q == 0.0, 1.0, q), r1)
        tlin = np.where(np.abs(B) > 0.0, -C / np.where(B == 0.0, 1.0, B), np.inf)
    r1 = np.where(lin, tlin, r1)
    r2 = np.where(lin, tlin, r2)
    valid = valid | (lin & np.isfinite(r1))
    t1 = np.minimum(r1, r2)
    t2 = np.maximum(r1, r2)
    return t1, t2, valid


def _dedupe_sorted(ts, scale):
    if len(ts) == 0:
        return ts
    ts = np.sort(ts)
    keep = np.ones(len(ts), dtype=bool)
    keep[1:] = np.diff(ts) > 1e-12 * max(scale, 1.0)
    return ts[keep]


class Sphere:
    def __init__(self, radius, center=(0.0, 0.0, 0.0)):
        if not radius > 0.0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        self.total_area = 4.0 * np.pi * self.radius**2
        self.diameter = 2.0 * self.radius
        self._tess = {}

    def sample(self, rng, n):
        # Archimedes: z uniform on [-rho, rho] is area-uniform
        z = rng.random(n) * 2.0 - 1.0
        phi = rng.random(n) * 2.0 * np.pi
        s = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        w = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
        return self.center + self.radius * w, -w

    def segment_hits(self, a, b):
        a = np.asarray(a, dtype=float) - self.center
        d = np.asarray(b, dtype=float) - self.center - a
        t1, t2, valid = _solve_quadratic_batch(d @ d, 2.0 * (a @ d),
                                               a @ a - self.radius**2)
        ts = [t for t, v in ((t1, valid), (t2, valid))
              if v and -1e-12 <= t <= 1.0 + 1e-12]
        ts = _dedupe_sorted(np.asarray(ts, dtype=float), 1.0)
        return self.center + a[None] + ts[:, None] * d[None]

    def band_min_hits(self, origin, dirs, tmin, tmax):
        o = np.asarray(origin, dtype=float) - self.center
        dirs = np.asarray(dirs, dtype=float)
        A = np.einsum("ij,ij->i", dirs, dirs)
        B = 2.0 * dirs @ o
        C = o @ o - self.radius**2
        t1, t2, valid = _solve_quadratic_batch(A, B, np.full(len(dirs), C))
        out = np.full(len(dirs), np.inf)
        for t in (t1, t2):
            band = valid & (t >= tmin) & (t <= tmax)
            out = np.where(band & (t < out), t, out)
        return out

    def inside(self, p):
        return bool(np.linalg.norm(np.asarray(p, dtype=float) - self.center)
                    < self.radius)

    def has_interior(self):
        return True

    def normal_at(self, p):
        w = np.asarray(p, dtype=float) - self.center
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise ValueError("center has no normal")
        return -w / nrm

    def surface_distance(self, p):
        return float(abs(np.linalg.norm(np.asarray(p, dtype=float) - self.center)
                         - self.radius))

    def tessellate(self, subdivisions=5):
        key = ("sphere", subdivisions)
        if key not in self._tess:
            mesh = shapes.icosphere(subdivisions, radius=self.radius)
            if np.any(self.center != 0.0):
                mesh = shapes.TriMesh(mesh.vertices + self.center, mesh.faces)
            self._tess[key] = mesh
        return self._tess[key]

    def describe(self):
        return {"kind": "sphere", "radius": self.radius}


class Torus:
    """Torus of revolution about the z axis: major radius R, minor radius r."""

    def __init__(self, major_radius, minor_radius):
        if not (major_radius > minor_radius > 0.0):
            raise ValueError("need major_radius > minor_radius > 0")
        self.R = float(major_radius)
        self.r = float(minor_radius)
        self.total_area = 4.0 * np.pi**2 * self.R * self.r
        self.diameter = 2.0 * (self.R + self.r)
        self._tess = {}

    def sample(self, rng, n):
        # minor angle by rejection with weight (R + r cos v)/(R + r): exact
        # area measure r (R + r cos v) du dv
        v = np.empty(0)
        while len(v) < n:
            prop = rng.random(4096) * 2.0 * np.pi
            acc = rng.random(4096) <= (self.R + self.r * np.cos(prop)) / (self.R + self.r)
            v = np.concatenate([v, prop[acc]])
        v = v[:n]
        u = rng.random(n) * 2.0 * np.pi
        cu, su = np.cos(u), np.sin(u)
        cv, sv = np.cos(v), np.sin(v)
        pts = np.stack([(self.R + self.r * cv) * cu,
                        (self.R + self.r * cv) * su,
                        self.r * sv], axis=-1)
        outward = np.stack([cv * cu, cv * su, sv], axis=-1)
        return pts, -outward

    def _implicit(self, p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        q = x * x + y * y + z * z + self.R**2 - self.r**2
        return q * q - 4.0 * self.R**2 * (x * x + y * y)

    def _segment_roots(self, a, d):
        # (|p|^2 + R^2 - r^2)^2 = 4 R^2 (px^2 + py^2) as a quartic in t
        q = np.array([a @ a + self.R**2 - self.r**2, 2.0 * (a @ d), d @ d])
        w = np.array([a[0]**2 + a[1]**2,
                      2.0 * (a[0] * d[0] + a[1] * d[1]),
                      d[0]**2 + d[1]**2])
        poly = np.convolve(q, q)
        poly[:3] -= 4.0 * self.R**2 * w
        # highest-degree first for np.roots
        coeffs = poly[::-1]
        lead = np.max(np.abs(coeffs)) + 1e-300
        nz = np.nonzero(np.abs(coeffs) > 1e-14 * lead)[0]
        if len(nz) == 0 or len(coeffs) - nz[0] <= 1:
            return np.empty(0)
        roots = np.roots(coeffs[nz[0]:])
        real = roots[np.abs(roots.imag) < 1e-8 * (1.0 + np.abs(roots.real))].real
        # safeguarded polish: a few Newton steps on the implicit form
        for _ in range(3):
            p = a[None] + real[:, None] * d[None]
            f = self._implicit(p)
            x, y, z = p[:, 0], p[:, 1], p[:, 2]
            qv = x * x + y * y + z * z + self.R**2 - self.r**2
            grad = np.stack([4.0 * x * qv - 8.0 * self.R**2 * x,
                             4.0 * y * qv - 8.0 * self.R**2 * y,
                             4.0 * z * qv], axis=-1)
            df = np.einsum("ij,j->i", grad, d)
            step = np.where(np.abs(df) > 1e-300, f / np.where(df == 0, 1.0, df), 0.0)
            real = real - np.clip(step, -0.1, 0.1)
        return real

    def segment_hits(self, a, b):
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        ts = self._segment_roots(a, d)
        ts = ts[(ts >= -1e-12) & (ts <= 1.0 + 1e-12)]
        ts = _dedupe_sorted(ts, 1.0)
        return a[None] + ts[:, None] * d[None]

    def band_min_hits(self, origin, dirs, tmin, tmax):
        origin = np.asarray(origin, dtype=float)
        out = np.full(len(dirs), np.inf)
        for i, d in enumerate(np.asarray(dirs, dtype=float)):
            ts = self._segment_roots(origin, d)
            ts = ts[(ts >= tmin) & (ts <= tmax)]
            if len(ts):
                out[i] = ts.min()
        return out

    def inside(self, p):
        p = np.asarray(p, dtype=float)
        rho = np.hypot(p[0], p[1])
        return bool((rho - self.R)**2 + p[2]**2 < self.r**2)

    def has_interior(self):
        return True

    def normal_at(self, p):
        p = np.asarray(p, dtype=float)
        rho = np.hypot(p[0], p[1])
        if rho == 0.0:
            raise ValueError("axis point has no torus normal")
        ring = np.array([self.R * p[0] / rho, self.R * p[1] / rho, 0.0])
        w = p - ring
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise ValueError("tube center has no normal")
        return -w / nrm

    def surface_distance(self, p):
        p = np.asarray(p, dtype=float)
        rho = np.hypot(p[0], p[1])
        return float(abs(np.hypot(rho - self.R, p[2]) - self.r))

    def tessellate(self, nu=192, nv=96):
        key = ("torus", nu, nv)
        if key not in self._tess:
            self._tess[key] = shapes.torus_mesh(self.R, self.r, nu, nv)
        return self._tess[key]

    def describe(self):
        return {"kind": "torus", "major_radius": self.R, "minor_radius": self.r}


class SaddlePatch:
    """Graph of f(x, y) = x*y over the square [-L, L]^2.  Open: no interior."""

    def __init__(self, extent):
        if not extent > 0.0:
            raise ValueError("extent must be positive")
        self.L = float(extent)
        self.total_area = self._area()
        self._tess = {}
        zspan = 2.0 * self.L**2
        self.diameter = float(np.sqrt(8.0 * self.L**2 + zspan**2))

    def _area(self):
        # Gauss-Legendre quadrature of sqrt(1 + x^2 + y^2); the integrand is
        # analytic, so 64 nodes per axis are far beyond float accuracy
        x, wx = np.polynomial.legendre.leggauss(64)
        x = x * self.L
        wx = wx * self.L
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(wx, wx)
        return float(np.sum(W * np.sqrt(1.0 + X**2 + Y**2)))

    def sample(self, rng, n):
        wmax = np.sqrt(1.0 + 2.0 * self.L**2)
        xy = np.empty((0, 2))
        while len(xy) < n:
            prop = (rng.random((4096, 2)) * 2.0 - 1.0) * self.L
            w = np.sqrt(1.0 + prop[:, 0]**2 + prop[:, 1]**2) / wmax
            acc = rng.random(4096) <= w
            xy = np.concatenate([xy, prop[acc]])
        xy = xy[:n]
        x, y = xy[:, 0], xy[:, 1]
        pts = np.stack([x, y, x * y], axis=-1)
        nrm = np.sqrt(1.0 + x**2 + y**2)
        normals = np.stack([-y / nrm, -x / nrm, 1.0 / nrm], axis=-1)
        return pts, normals

    def segment_hits(self, a, b):
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        # x(t) y(t) - z(t) = 0 is quadratic in the segment parameter
        c2 = d[0] * d[1]
        c1 = a[0] * d[1] + a[1] * d[0] - d[2]
        c0 = a[0] * a[1] - a[2]
        t1, t2, valid = _solve_quadratic_batch(c2, c1, c0)
        ts = [float(t) for t in (t1, t2)
              if valid and np.isfinite(t) and -1e-12 <= t <= 1.0 + 1e-12]
        ts = _dedupe_sorted(np.asarray(ts, dtype=float), 1.0)
        pts = a[None] + ts[:, None] * d[None]
        keep = (np.abs(pts[:, 0]) <= self.L) & (np.abs(pts[:, 1]) <= self.L)
        return pts[keep]

    def band_min_hits(self, origin, dirs, tmin, tmax):
        origin = np.asarray(origin, dtype=float)
        dirs = np.asarray(dirs, dtype=float)
        c2 = dirs[:, 0] * dirs[:, 1]
        c1 = origin[0] * dirs[:, 1] + origin[1] * dirs[:, 0] - dirs[:, 2]
        c0 = origin[0] * origin[1] - origin[2]
        t1, t2, valid = _solve_quadratic_batch(c2, c1, np.full(len(dirs), c0))
        out = np.full(len(dirs), np.inf)
        for t in (t1, t2):
            p = origin[None] + t[:, None] * dirs
            band = (valid & np.isfinite(t) & (t >= tmin) & (t <= tmax)
                    & (np.abs(p[:, 0]) <= self.L) & (np.abs(p[:, 1]) <= self.L))
            out = np.where(band & (t < out), t, out)
        return out

    def inside(self, p):
        raise ValueError("no interior")

    def has_interior(self):
        return False

    def normal_at(self, p):
        x, y = float(p[0]), float(p[1])
        nrm = np.sqrt(1.0 + x * x + y * y)
        return np.array([-y, -x, 1.0]) / nrm

    def surface_distance(self, p):
        # first-order approximation |z - xy| / |grad|; used only as an
        # on-surface sanity check, never in the estimators
        x, y, z = (float(v) for v in p)
        return abs(z - x * y) / np.sqrt(1.0 + x * x + y * y)

    def tessellate(self, n=128):
        if ("saddle", n) not in self._tess:
            self._tess[("saddle", n)] = shapes.graph_mesh(
                lambda x, y: x * y, self.L, n)
        return self._tess[("saddle", n)]

    def describe(self):
        return {"kind": "saddle", "extent": self.L}


class Capsule:
    """Cylinder of given length about the z axis capped by two hemispheres."""

    def __init__(self, length, radius):
        if not (length > 0.0 and radius > 0.0):
            raise ValueError("length and radius must be positive")
        self.length = float(length)
        self.radius = float(radius)
        self.half = self.length / 2.0
        self.cyl_area = 2.0 * np.pi * self.radius * self.length
        self.cap_area = 4.0 * np.pi * self.radius**2
        self.total_area = self.cyl_area + self.cap_area
        self._tess = {}
        self.diameter = self.length + 2.0 * self.radius

    def tip(self, sign=1):
        """The apex of the +z (or -z) end cap, a convenient seed point."""
        return np.array([0.0, 0.0, sign * (self.half + self.radius)])

    def sample(self, rng, n):
        u = rng.random(n) * self.total_area
        phi = rng.random(n) * 2.0 * np.pi
        h = rng.random(n)
        pts = np.empty((n, 3))
        normals = np.empty((n, 3))
        cyl = u < self.cyl_area
        c, s = np.cos(phi), np.sin(phi)
        # cylinder wall
        z = (h[cyl] - 0.5) * self.length
        pts[cyl] = np.stack([self.radius * c[cyl], self.radius * s[cyl], z], axis=-1)
        normals[cyl] = np.stack([-c[cyl], -s[cyl], np.zeros(int(cyl.sum()))], axis=-1)
        # end caps: split the remaining area evenly, hemisphere z-uniform
        cap = ~cyl
        top = u[cap] < self.cyl_area + self.cap_area / 2.0
        zc = h[cap]  # uniform in [0, 1] -> hemisphere by Archimedes
        sc = np.sqrt(np.maximum(1.0 - zc * zc, 0.0))
        w = np.stack([sc * c[cap], sc * s[cap], np.where(top, zc, -zc)], axis=-1)
        centers = np.zeros((int(cap.sum()), 3))
        centers[:, 2] = np.where(top, self.half, -self.half)
        pts[cap] = centers + self.radius * w
        normals[cap] = -w
        return pts, normals

    def _candidate_ts(self, o, dirs):
        """Per-ray candidate hit parameters against wall and caps: (k, 6)."""
        o = np.asarray(o, dtype=float)
        dirs = np.asarray(dirs, dtype=float)
        k = len(dirs)
        cands = np.full((k, 6), np.inf)
        # wall
        A = dirs[:, 0]**2 + dirs[:, 1]**2
        B = 2.0 * (o[0] * dirs[:, 0] + o[1] * dirs[:, 1])
        C = o[0]**2 + o[1]**2 - self.radius**2
        t1, t2, valid = _solve_quadratic_batch(A, B, np.full(k, C))
        for col, t in ((0, t1), (1, t2)):
            tf = np.where(np.isfinite(t), t, 0.0)
            z = o[2] + tf * dirs[:, 2]
            ok = valid & np.isfinite(t) & (np.abs(z) <= self.half)
            cands[:, col] = np.where(ok, t, np.inf)
        # caps
        for col, sign in ((2, 1.0), (4, -1.0)):
            cz = sign * self.half
            oz = o.copy()
            oz[2] -= cz
            A = np.einsum("ij,ij->i", dirs, dirs)
            B = 2.0 * dirs @ oz
            C = oz @ oz - self.radius**2
            t1, t2, valid = _solve_quadratic_batch(A, B, np.full(k, C))
            for dcol, t in ((0, t1), (1, t2)):
                tf = np.where(np.isfinite(t), t, 0.0)
                z = o[2] + tf * dirs[:, 2]
                ok = valid & np.isfinite(t) & (sign * (z - cz) >= -1e-12)
                cands[:, col + dcol] = np.where(ok, t, np.inf)
        return cands

    def segment_hits(self, a, b):
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        cands = self._candidate_ts(a, d[None])[0]
        ts = cands[np.isfinite(cands)]
        ts = ts[(ts >= -1e-12) & (ts <= 1.0 + 1e-12)]
        ts = _dedupe_sorted(ts, 1.0)
        return a[None] + ts[:, None] * d[None]

    def band_min_hits(self, origin, dirs, tmin, tmax):
        cands = self._candidate_ts(origin, dirs)
        cands = np.where((cands >= tmin) & (cands <= tmax), cands, np.inf)
        return cands.min(axis=1)

    def inside(self, p):
        p = np.asarray(p, dtype=float)
        z = np.clip(p[2], -self.half, self.half)
        return bool(np.linalg.norm(p - np.array([0.0, 0.0, z])) < self.radius)

    def has_interior(self):
        return True

    def normal_at(self, p):
        p = np.asarray(p, dtype=float)
        z = np.clip(p[2], -self.half, self.half)
        w = p - np.array([0.0, 0.0, z])
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise ValueError("axis point has no normal")
        return -w / nrm

    def surface_distance(self, p):
        p = np.asarray(p, dtype=float)
        z = np.clip(p[2], -self.half, self.half)
        return float(abs(np.linalg.norm(p - np.array([0.0, 0.0, z])) - self.radius))

    def tessellate(self, n_profile=64, n_around=128):
        key = ("capsule", n_profile, n_around)
        if key not in self._tess:
            self._tess[key] = shapes.capsule_mesh(self.length, self.radius,
                                                  n_profile, n_around)
        return self._tess[key]

    def describe(self):
        return {"kind": "capsule", "length": self.length, "radius": self.radius}
