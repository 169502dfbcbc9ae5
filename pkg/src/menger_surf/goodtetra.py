"""Cone-growing search for voluminous tetrahedra with vertices on a surface.

Starting from a seed point with its surface normal, a double cone grows until
it first meets the surface; the hit pattern is classified (central hit, wide
pair, or antipodal position with rotated-cap subcases), the remaining
vertices are picked on vertical segments through the rim of the stopping
cone, and the stopping radius together with the cone's base plane witnesses
a large projection of the surrounding patch.
"""

from dataclasses import dataclass

import numpy as np

from . import geom
from .rng import substream

_PROJ_TAG = 0x50524F4A


@dataclass
class GoodTetraParams:
    phi0: float = np.pi / 4.0
    hit_tolerance: float = 1e-3
    ray_count: int = 4096
    bisection_tol: float = 1e-6
    max_iterations: int = 64

    def __post_init__(self):
        if not (0.0 < self.phi0 <= np.pi / 4.0):
            raise ValueError("phi0 must lie in (0, pi/4]")
        if min(self.hit_tolerance, self.bisection_tol) <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass
class GoodTetraResult:
    vertices: np.ndarray          # (4, 3), seed first
    stopping_distance: float
    case_label: str
    eta_achieved: float
    iterations: int
    witness_plane_normal: np.ndarray
    first_hit_radius: float
    radii: list                   # stopping radius of every growth step

    def to_dict(self):
        return {"vertices": self.vertices.tolist(),
                "stopping_distance": self.stopping_distance,
                "case_label": self.case_label,
                "eta_achieved": self.eta_achieved,
                "iterations": self.iterations,
                "witness_plane_normal": self.witness_plane_normal.tolist(),
                "first_hit_radius": self.first_hit_radius,
                "radii": [float(r) for r in self.radii]}


# ---------------------------------------------------------------------------
# direction sets
# ---------------------------------------------------------------------------

def _orthobasis(v):
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(v, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(v, e1)


def _cap_fibonacci(v, phi, n):
    """n directions covering the solid cap of angular radius phi around v."""
    e1, e2 = _orthobasis(v)
    i = np.arange(n)
    z = 1.0 - (1.0 - np.cos(phi)) * (i + 0.5) / n
    psi = i * np.pi * (3.0 - np.sqrt(5.0))
    s = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return (z[:, None] * v[None]
            + (s * np.cos(psi))[:, None] * e1[None]
            + (s * np.sin(psi))[:, None] * e2[None])


def _rim_ring(v, phi, n):
    e1, e2 = _orthobasis(v)
    psi = np.arange(n) * (2.0 * np.pi / n)
    return (np.cos(phi) * v[None]
            + np.sin(phi) * (np.cos(psi)[:, None] * e1[None]
                             + np.sin(psi)[:, None] * e2[None]))


def _double_cone_dirs(v, phi, n_cap, n_rim):
    """Axis, interior Fibonacci cover and the exact rim ring, mirrored."""
    up = np.concatenate([v[None], _cap_fibonacci(v, phi, n_cap),
                         _rim_ring(v, phi, n_rim)])
    return np.concatenate([up, -up])


def _rotation(axis, angle):
    """Rodrigues rotation matrix about a unit axis."""
    k = np.asarray(axis, dtype=float)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


# ---------------------------------------------------------------------------
# cone growth
# ---------------------------------------------------------------------------

def _grow_cone(oracle, x0, v, t_lo, params):
    """First radius where the double cone around v meets the surface.

    Casts a Fibonacci cover plus the exact rim ring, then refines the minimum
    with shrinking direction caps until the radius improves by less than the
    relative bisection tolerance.  Returns (rho, hit_points) where the hits
    lie within hit_tolerance of the stopping sphere.
    """
    t_hi = 2.0 * oracle.diameter + t_lo
    n_cap = params.ray_count // 4
    n_rim = params.ray_count // 4
    # coarse pass bounds the stopping radius from above, which lets the full
    # pass restrict its search band (and, for meshes, its face set)
    coarse = _double_cone_dirs(v, params.phi0, 128, 64)
    cts = oracle.band_min_hits(x0, coarse, t_lo, t_hi)
    if np.isfinite(cts).any():
        t_hi = float(np.min(cts)) * (1.0 + 4.0 * params.hit_tolerance)
    dirs = _double_cone_dirs(v, params.phi0, n_cap, n_rim)
    ts = oracle.band_min_hits(x0, dirs, t_lo, t_hi)
    if not np.isfinite(ts).any():
        raise RuntimeError("cone growth found no surface hit")
    all_dirs = [dirs, coarse]
    all_ts = [ts, cts]

    best = int(np.argmin(ts))
    rho = float(ts[best])
    best_dir = dirs[best]
    spacing = np.sqrt(2.0 * np.pi * (1.0 - np.cos(params.phi0)) / max(n_cap, 1))
    radius = 2.0 * spacing
    for _ in range(24):
        local = _cap_fibonacci(best_dir, radius, 256)
        # keep candidates inside the double cone
        local = local[np.abs(local @ v) >= np.cos(params.phi0) - 1e-12]
        if len(local) == 0:
            break
        lts = oracle.band_min_hits(x0, local, t_lo, t_hi)
        all_dirs.append(local)
        all_ts.append(lts)
        lbest = int(np.argmin(lts))
        if np.isfinite(lts[lbest]) and lts[lbest] < rho:
            improvement = (rho - lts[lbest]) / rho
            rho = float(lts[lbest])
            best_dir = local[lbest]
            if improvement < params.bisection_tol:
                break
        else:
            radius *= 0.5
            if radius < params.bisection_tol:
                break

    dirs = np.concatenate(all_dirs)
    ts = np.concatenate(all_ts)
    on_sphere = np.isfinite(ts) & (ts <= rho * (1.0 + params.hit_tolerance))
    hits = x0[None] + ts[on_sphere, None] * dirs[on_sphere]
    return rho, hits


# ---------------------------------------------------------------------------
# classification and vertex selection
# ---------------------------------------------------------------------------

def _classify(hits, x0, v, rho, params):
    """Case label plus the relevant hit(s), in local surface coordinates."""
    y = hits - x0[None]
    ynorm = np.linalg.norm(y, axis=1)
    yhat = y / ynorm[:, None]
    axial = np.abs(yhat @ v)

    slack = params.hit_tolerance
    central = axial >= np.cos(0.75 * params.phi0 + slack)
    if central.any():
        pick = int(np.argmax(np.where(central, axial, -np.inf)))
        return "central", (y[pick],)

    # projected directions through the central projection onto the lid plane:
    # antipodal hits identify, so flip by the sign of the axial component
    sign = np.where(yhat @ v >= 0.0, 1.0, -1.0)
    w = y - np.outer(y @ v, v)
    wnorm = np.linalg.norm(w, axis=1)
    ok = wnorm > 1e-12 * rho
    wdir = np.zeros_like(w)
    wdir[ok] = (sign[ok, None] * w[ok]) / wnorm[ok, None]

    idx = np.nonzero(ok)[0]
    if len(idx) > 512:
        idx = idx[np.linspace(0, len(idx) - 1, 512).astype(int)]
    if len(idx) >= 2:
        sub = wdir[idx]
        gram = np.clip(sub @ sub.T, -1.0, 1.0)
        ang = np.arccos(gram)
        i, j = np.unravel_index(int(np.argmax(ang)), ang.shape)
        if ang[i, j] >= np.pi / 3.0:
            return "wide", (y[idx[i]], y[idx[j]])

    pick = int(np.argmax(axial))
    return "antipodal", (y[pick],)


def _segment_best_hit(oracle, a, b, x0, plane_normal):
    """Surface point on [a, b] farthest from the plane through x0."""
    pts = oracle.segment_hits(a, b)
    if len(pts) == 0:
        return None
    d = np.abs((pts - x0[None]) @ plane_normal)
    return pts[int(np.argmax(d))]


_RIM_FACTORS = (1.0, 0.996, 0.99, 0.97, 0.94)


def _rim_vertex(oracle, x0, v, r, plane_normal, params, n_scan=96):
    """Vertex on a vertical segment through the stopping rim, far from a plane.

    Scans the rim circle (and slightly shrunken copies, which keeps the
    segments transversal when the exact rim grazes the surface) in order of
    decreasing guaranteed distance to the plane and returns the first surface
    point found, maximizing its actual plane distance on that segment.
    """
    e1, e2 = _orthobasis(v)
    psi = np.arange(n_scan) * (2.0 * np.pi / n_scan)
    ring = np.cos(psi)[:, None] * e1[None] + np.sin(psi)[:, None] * e2[None]

    candidates = []
    for fi, f in enumerate(_RIM_FACTORS):
        z = f * r * ring
        half = f * r * (1.0 + 2.0 * params.hit_tolerance)
        lo = (x0[None] + z) - half * v[None]
        hi = (x0[None] + z) + half * v[None]
        dlo = (lo - x0[None]) @ plane_normal
        dhi = (hi - x0[None]) @ plane_normal
        crossing = np.sign(dlo) != np.sign(dhi)
        score = np.where(crossing, 0.0, np.minimum(np.abs(dlo), np.abs(dhi)))
        for k in range(n_scan):
            candidates.append((float(score[k]), fi, k, lo[k], hi[k]))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    for score, fi, k, a, b in candidates:
        pt = _segment_best_hit(oracle, a, b, x0, plane_normal)
        if pt is not None:
            return pt
    raise RuntimeError("no rim segment met the surface "
                       "(cone condition failed at mesh resolution)")


def _plane_normal(x0, p1, p2):
    n = np.cross(p1 - x0, p2 - x0)
    nrm = np.linalg.norm(n)
    if nrm == 0.0:
        raise RuntimeError("selected vertices are collinear with the seed")
    return n / nrm


def _eta_achieved(T, d_s):
    """Largest theta (up to float slack) with T in the (theta, d_s) class."""
    T = np.asarray(T, dtype=float)
    reach = max(np.linalg.norm(T[i] - T[0]) for i in (1, 2, 3))
    if reach > 2.0 * d_s * (1.0 + 1e-9):
        raise RuntimeError("selected vertex escaped the stopping ball")
    pair_min = min(np.linalg.norm(T[i] - T[j])
                   for i in range(4) for j in range(i + 1, 4))
    ang = geom.angle_between(T[1] - T[0], T[2] - T[0])
    height = geom.point_plane_distance(T[3], T[0], T[1], T[2])
    eta = min(pair_min / d_s, ang, np.pi - ang, height / d_s, 1.0 - 1e-12)
    return float(eta)


# ---------------------------------------------------------------------------
# the search
# ---------------------------------------------------------------------------

def find_good_tetra(oracle, seed_point, params=None):
    """Grow cones from a surface point until a voluminous tetrahedron appears.

    ``seed_point`` is a SurfacePoint (position + unit normal).  Returns a
    GoodTetraResult whose tetrahedron passes the voluminosity test at the
    achieved eta and whose witness plane carries the large-projection
    property up to the stopping distance.
    """
    params = params or GoodTetraParams()
    if not oracle.has_interior():
        raise ValueError("no interior")
    x0 = np.asarray(seed_point.position, dtype=float)
    v = np.asarray(seed_point.normal, dtype=float)
    v = v / np.linalg.norm(v)

    t_lo = max(1e-7 * oracle.diameter, 0.0)
    first_hit = None
    radii = []
    for iteration in range(1, params.max_iterations + 1):
        rho, hits = _grow_cone(oracle, x0, v, t_lo, params)
        radii.append(float(rho))
        if first_hit is None:
            first_hit = rho
        if len(hits) == 0:
            raise RuntimeError("stopping sphere carried no hits")
        label, payload = _classify(hits, x0, v, rho, params)

        if label == "central":
            T, case = _case_central(oracle, x0, v, rho, payload[0], params)
        elif label == "wide":
            T, case = _case_wide(oracle, x0, v, rho, payload, params)
        else:
            out = _case_antipodal(oracle, x0, v, rho, payload[0], params)
            if out[0] is None:
                # subcase (c): continue growing around the rotated axis; the
                # emptiness of the forward annulus forces the next stopping
                # radius beyond twice the current one
                v = out[1]
                t_lo = rho * (1.0 + 2.0 * params.hit_tolerance)
                continue
            T, case = out

        d_s = rho
        eta = _eta_achieved(T, d_s)
        return GoodTetraResult(np.asarray(T), float(d_s), case, eta,
                               iteration, v.copy(), float(first_hit), radii)
    raise RuntimeError("max_iterations exceeded "
                       "(insufficient resolution or non-admissible surface)")


def _project_unit(y, v, rho):
    w = y - (y @ v) * v
    nrm = np.linalg.norm(w)
    if nrm < 1e-12 * rho:
        e1, _ = _orthobasis(v)
        return e1
    return w / nrm


def _case_central(oracle, x0, v, rho, y1, params):
    """Central hit: one vertex near the cone axis, two on rim segments."""
    if (y1 @ v) < 0.0:
        v = -v
    r = rho * np.sin(params.phi0)
    x1 = x0 + y1
    w = y1 - (y1 @ v) * v
    axial = np.linalg.norm(w) < params.hit_tolerance * r
    if axial:
        u, e2 = _orthobasis(v)
        case = "central_hit_a"
    else:
        u = w / np.linalg.norm(w)
        e2 = np.cross(v, u)
        case = "central_hit_b"

    x2 = None
    z2 = -r * e2
    for f in _RIM_FACTORS:
        a = x0 + f * z2 - f * r * (1.0 + 2.0 * params.hit_tolerance) * v
        b = x0 + f * z2 + f * r * (1.0 + 2.0 * params.hit_tolerance) * v
        pts = oracle.segment_hits(a, b)
        if len(pts):
            # most central hit keeps the base wide
            x2 = pts[int(np.argmin(np.abs((pts - x0[None]) @ v)))]
            break
    if x2 is None:
        raise RuntimeError("no rim segment met the surface "
                           "(cone condition failed at mesh resolution)")

    n_p = _plane_normal(x0, x1, x2)
    if axial:
        x3 = None
        z3 = r * u
        for f in _RIM_FACTORS:
            a = x0 + f * z3 - f * r * (1.0 + 2.0 * params.hit_tolerance) * v
            b = x0 + f * z3 + f * r * (1.0 + 2.0 * params.hit_tolerance) * v
            x3 = _segment_best_hit(oracle, a, b, x0, n_p)
            if x3 is not None:
                break
        if x3 is None:
            x3 = _rim_vertex(oracle, x0, v, r, n_p, params)
    else:
        x3 = _rim_vertex(oracle, x0, v, r, n_p, params)
    return np.stack([x0, x1, x2, x3]), case


def _case_wide(oracle, x0, v, rho, payload, params):
    """Two stopping-sphere hits with wide projected separation."""
    y1, y2 = payload
    x1 = x0 + y1
    x2 = x0 + y2
    n_p = _plane_normal(x0, x1, x2)
    r = rho * np.sin(params.phi0)
    x3 = _rim_vertex(oracle, x0, v, r, n_p, params)
    return np.stack([x0, x1, x2, x3]), "wide_pair"


def _case_antipodal(oracle, x0, v, rho, y1, params):
    """Antipodal hits: rotate the outer conical cap away from the hit.

    Returns (T, label) when subcase (a) or (b) stops the iteration, or
    (None, rotated_axis) when the search must continue (subcase (c)); the
    axis is rotated away from the hit's side, as seen from the cone half
    that contains the hit.
    """
    if (y1 @ v) < 0.0:
        v = -v
    u = _project_unit(y1, v, rho)
    w = np.cross(u, v)

    n_scan = 64
    band_lo = 0.5 * rho * (1.0 - params.hit_tolerance)
    band_hi = rho * (1.0 + params.hit_tolerance)
    cos_old = np.cos(params.phi0 + 2.0 * params.hit_tolerance)

    def new_point(s):
        axis = _rotation(w, s * params.phi0) @ v
        dirs = _double_cone_dirs(axis, params.phi0, 512, 192)
        ts = oracle.band_min_hits(x0, dirs, band_lo, band_hi)
        okm = np.isfinite(ts)
        if not okm.any():
            return None
        pts = x0[None] + ts[okm, None] * dirs[okm]
        y = pts - x0[None]
        yhat = y / np.linalg.norm(y, axis=1)[:, None]
        fresh = np.abs(yhat @ v) < cos_old
        if not fresh.any():
            return None
        cand = np.nonzero(fresh)[0]
        return pts[cand[0]]

    s_grid = np.linspace(0.0, 0.5, n_scan + 1)[1:]
    hit_pt, s_hit, s_empty = None, None, 0.0
    for s in s_grid:
        pt = new_point(s)
        if pt is not None:
            hit_pt, s_hit = pt, s
            break
        s_empty = s

    if hit_pt is not None:
        # bisect toward the earliest rotation that still sees a new point
        lo, hi, pt_hi = s_empty, s_hit, hit_pt
        while hi - lo > params.bisection_tol:
            mid = 0.5 * (lo + hi)
            pt = new_point(mid)
            if pt is not None:
                hi, pt_hi = mid, pt
            else:
                lo = mid
        x2 = pt_hi
        n_p = _plane_normal(x0, x0 + y1, x2)
        r = rho * np.sin(params.phi0)
        x3 = _rim_vertex(oracle, x0, v, r, n_p, params)
        return np.stack([x0, x0 + y1, x2, x3]), "antipodal_3a"

    # subcase (b): forward annulus of the half-rotated cone
    v_star = _rotation(w, 0.5 * params.phi0) @ v
    v_star /= np.linalg.norm(v_star)
    dirs = _double_cone_dirs(v_star, params.phi0, 1024, 256)
    ts = oracle.band_min_hits(x0, dirs, rho * (1.0 + params.hit_tolerance),
                              2.0 * rho * (1.0 - 1e-6))
    okm = np.isfinite(ts)
    if okm.any():
        pick = int(np.argmin(np.where(okm, ts, np.inf)))
        x2 = x0 + ts[pick] * dirs[pick]
        n_p = _plane_normal(x0, x0 + y1, x2)
        r = rho * np.sin(params.phi0)
        x3 = _rim_vertex(oracle, x0, v, r, n_p, params)
        return np.stack([x0, x0 + y1, x2, x3]), "antipodal_3b"

    return None, v_star  # subcase (c): caller continues with this axis


# ---------------------------------------------------------------------------
# projection witness
# ---------------------------------------------------------------------------

def verify_projection(oracle, x0, r, witness_plane_normal, n_rays=1000,
                      seed=0, tol=1e-3):
    """Fraction of the witness disk whose perpendicular segments meet the surface.

    Samples points w uniformly in the disk of radius r/sqrt(2) around x0
    inside the witness plane and casts the segment of half-length r through w
    perpendicular to the plane; a hit counts when it lies in B(x0, r(1+tol)).
    """
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(witness_plane_normal, dtype=float)
    v = v / np.linalg.norm(v)
    e1, e2 = _orthobasis(v)
    rng = substream(seed, _PROJ_TAG)
    rad = (r / np.sqrt(2.0)) * np.sqrt(rng.random(n_rays))
    psi = rng.random(n_rays) * 2.0 * np.pi
    w = (x0[None] + rad[:, None] * (np.cos(psi)[:, None] * e1[None]
                                    + np.sin(psi)[:, None] * e2[None]))
    limit = r * (1.0 + tol)

    if oracle.is_mesh:
        # one batched ray/triangle pass over all disk segments
        mesh = oracle.backing
        origins = w - r * v[None]
        dirs = np.tile(2.0 * r * v, (n_rays, 1))
        good = 0
        chunk = max(1, int(2.0e6 / max(len(mesh.faces), 1)))
        for s in range(0, n_rays, chunk):
            t, ok = mesh._ray_tri(origins[s:s + chunk], dirs[s:s + chunk], None)
            ok &= (t >= -1e-12) & (t <= 1.0 + 1e-12)
            tf = np.where(ok, t, 0.0)
            pts = (origins[s:s + chunk, None, :]
                   + tf[..., None] * dirs[s:s + chunk, None, :])
            near = np.linalg.norm(pts - x0[None, None, :], axis=-1) <= limit
            good += int((ok & near).any(axis=1).sum())
        return good / float(n_rays)

    good = 0
    for k in range(n_rays):
        pts = oracle.segment_hits(w[k] - r * v, w[k] + r * v)
        if len(pts) and (np.linalg.norm(pts - x0[None], axis=1) <= limit).any():
            good += 1
    return good / float(n_rays)
