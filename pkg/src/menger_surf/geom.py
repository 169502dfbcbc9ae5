"""Floating-point geometry of triangles and tetrahedra.

A point is a numpy array of shape (3,), a triangle any array-like of shape
(3, 3) and a tetrahedron an *ordered* quadruple of shape (4, 3).  Degenerate
quadruples are legal input everywhere: they get zero volume and zero minimal
height instead of raising.  Batched variants act on (n, 4, 3) stacks and back
the Monte-Carlo layers.

Degeneracy is always measured relative to the simplex scale so that every
predicate stays invariant under rescaling:

* a triangle is degenerate when ``area < 1e-14 * longest_edge**2``;
* a quadruple is coplanar when ``min_height < 1e-12 * diameter``.
"""

import itertools
from typing import NamedTuple

import numpy as np

TRI_DEGENERACY_REL = 1e-14
TET_COPLANARITY_REL = 1e-12

_TET_PAIRS = list(itertools.combinations(range(4), 2))
_PERMS4 = np.array(list(itertools.permutations(range(4))))


def as_point(p):
    p = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite coordinates")
    return p


def as_tetra(T):
    T = np.asarray(T, dtype=float).reshape(4, 3)
    if not np.all(np.isfinite(T)):
        raise ValueError("non-finite coordinates")
    return T


class SimplexMeasures(NamedTuple):
    volume: float
    total_area: float
    diameter: float
    min_height: float


class SlantedConstants(NamedTuple):
    c0: float
    c1: float


class LemmaBounds(NamedTuple):
    voluminous_bound: float
    wide_bound: float


# ---------------------------------------------------------------------------
# batched building blocks
# ---------------------------------------------------------------------------

def _edge_vectors(P):
    """(n,4,3) stack -> z_i = x_i - x_0 as three (n,3) arrays."""
    return P[:, 1] - P[:, 0], P[:, 2] - P[:, 0], P[:, 3] - P[:, 0]


def _norm(v):
    return np.sqrt(np.einsum("...i,...i->...", v, v))


def tetra_quantities(P):
    """Volume, total face area, diameter and min height of a (n,4,3) stack.

    Returns (volume, total_area, diameter, min_height, coplanar_mask).
    ``min_height`` is 3V / (largest face area), which equals the smallest
    vertex-to-opposite-plane distance; it is 0 whenever the largest face is
    itself degenerate.
    """
    P = np.asarray(P, dtype=float)
    z1, z2, z3 = _edge_vectors(P)
    c12 = np.cross(z1, z2)
    c23 = np.cross(z2, z3)
    c13 = np.cross(z1, z3)
    c_far = np.cross(z2 - z1, z3 - z2)

    triple = np.einsum("...i,...i->...", z3, c12)
    volume = np.abs(triple) / 6.0

    face_crosses = np.stack([_norm(c12), _norm(c23), _norm(c13), _norm(c_far)], axis=-1)
    total_area = 0.5 * face_crosses.sum(axis=-1)
    max_face = 0.5 * face_crosses.max(axis=-1)

    diam = np.zeros(len(P))
    for i, j in _TET_PAIRS:
        np.maximum(diam, _norm(P[:, i] - P[:, j]), out=diam)

    with np.errstate(divide="ignore", invalid="ignore"):
        min_height = np.where(max_face > 0.0, 3.0 * volume / max_face, 0.0)
    coplanar = min_height <= TET_COPLANARITY_REL * diam
    return volume, total_area, diam, min_height, coplanar


def simplex_measures(T):
    """Volume, total area, diameter and minimal height of one tetrahedron."""
    T = as_tetra(T)
    volume, area, diam, hmin, _ = tetra_quantities(T[None])
    return SimplexMeasures(float(volume[0]), float(area[0]),
                           float(diam[0]), float(hmin[0]))


# ---------------------------------------------------------------------------
# circumradii
# ---------------------------------------------------------------------------

def circumradius_triangle(x, y, z):
    """Circumcircle radius |x-y||x-z||y-z| / (4 Area).

    Raises ValueError("degenerate triangle") for collinear or coincident
    points (area below the relative tolerance).
    """
    x, y, z = as_point(x), as_point(y), as_point(z)
    a = np.linalg.norm(x - y)
    b = np.linalg.norm(x - z)
    c = np.linalg.norm(y - z)
    cross = np.cross(y - x, z - x)
    area = 0.5 * np.linalg.norm(cross)
    longest = max(a, b, c)
    if area < TRI_DEGENERACY_REL * longest**2 or longest == 0.0:
        raise ValueError("degenerate triangle")
    return float(a * b * c / (4.0 * area))


def circumsphere_radius_batch(P):
    """Circumsphere radii of a (n,4,3) stack.

    Returns (radius, coplanar_mask); radius is meaningless where the mask is
    set.  Uses 1/(2R) = |z3.(z1 x z2)| / | |z1|^2 z2xz3 + |z2|^2 z3xz1 +
    |z3|^2 z1xz2 | with z_i = x_i - x_0.
    """
    P = np.asarray(P, dtype=float)
    z1, z2, z3 = _edge_vectors(P)
    num = np.abs(np.einsum("...i,...i->...", z3, np.cross(z1, z2)))
    mix = (np.einsum("...i,...i->...", z1, z1)[..., None] * np.cross(z2, z3)
           + np.einsum("...i,...i->...", z2, z2)[..., None] * np.cross(z3, z1)
           + np.einsum("...i,...i->...", z3, z3)[..., None] * np.cross(z1, z2))
    den = _norm(mix)
    _, _, diam, hmin, coplanar = tetra_quantities(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        radius = np.where(num > 0.0, den / (2.0 * num), np.inf)
    return radius, coplanar


def circumsphere_radius(T):
    """Circumsphere radius of one tetrahedron; ValueError("coplanar") if flat."""
    T = as_tetra(T)
    r, coplanar = circumsphere_radius_batch(T[None])
    if coplanar[0]:
        raise ValueError("coplanar")
    return float(r[0])


def circumsphere_center(T):
    """Circumcenter by the equidistance linear system (independent route).

    Solves 2 (x_i - x_0) . c = |x_i|^2 - |x_0|^2; used to cross-check the
    closed-form radius.
    """
    T = as_tetra(T)
    A = 2.0 * (T[1:] - T[0])
    b = np.einsum("ij,ij->i", T[1:], T[1:]) - T[0] @ T[0]
    det = np.linalg.det(A)
    scale = np.max(np.abs(A)) ** 3 + 1e-300
    if abs(det) < 1e-14 * scale:
        raise ValueError("coplanar")
    return np.linalg.solve(A, b)


def circumsphere_radius_solve(T):
    """Radius from the equidistant-center solve (oracle for the formula)."""
    T = as_tetra(T)
    return float(np.linalg.norm(circumsphere_center(T) - T[0]))


# ---------------------------------------------------------------------------
# planes and distances
# ---------------------------------------------------------------------------

def point_plane_distance(p, a, b, c):
    """Unsigned distance from p to the affine plane through a, b, c."""
    p, a, b, c = as_point(p), as_point(a), as_point(b), as_point(c)
    cross = np.cross(b - a, c - a)
    nrm = np.linalg.norm(cross)
    longest = max(np.linalg.norm(b - a), np.linalg.norm(c - a),
                  np.linalg.norm(c - b))
    if 0.5 * nrm < TRI_DEGENERACY_REL * longest**2 or longest == 0.0:
        raise ValueError("degenerate plane")
    return float(abs((p - a) @ cross) / nrm)


def tetra_distance(T, T2):
    """min over vertex pairings of the max vertex displacement (pseudometric)."""
    T = as_tetra(T)
    T2 = as_tetra(T2)
    best = np.inf
    for perm in _PERMS4:
        d = np.max(np.linalg.norm(T[perm] - T2, axis=1))
        if d < best:
            best = d
    return float(best)


def angle_between(u, v):
    """Angle in [0, pi] between two nonzero vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero vector has no direction")
    c = np.clip((u @ v) / (nu * nv), -1.0, 1.0)
    return float(np.arccos(c))


# ---------------------------------------------------------------------------
# simplex classes
# ---------------------------------------------------------------------------

def classify_voluminous(T, theta, d):
    """True iff the quadruple is (theta, d)-voluminous.

    Conditions: all vertices in B(x0, 2d); pairwise distances >= theta*d;
    base angle at x0 in [theta, pi - theta]; distance of x3 from the base
    plane >= theta*d.
    """
    if not (0.0 < theta < 1.0) or d <= 0.0:
        raise ValueError("need theta in (0,1) and d > 0")
    T = as_tetra(T)
    return bool(classify_voluminous_batch(T[None], theta, d)[0])


def classify_voluminous_batch(P, theta, d):
    P = np.asarray(P, dtype=float)
    x0 = P[:, 0]
    ok = np.ones(len(P), dtype=bool)
    for i in (1, 2, 3):
        ok &= _norm(P[:, i] - x0) <= 2.0 * d
    for i, j in _TET_PAIRS:
        ok &= _norm(P[:, i] - P[:, j]) >= theta * d

    u = P[:, 1] - x0
    v = P[:, 2] - x0
    nu, nv = _norm(u), _norm(v)
    nz = (nu > 0.0) & (nv > 0.0)
    cosang = np.ones(len(P))
    cosang[nz] = np.einsum("ij,ij->i", u[nz], v[nz]) / (nu[nz] * nv[nz])
    ang = np.arccos(np.clip(cosang, -1.0, 1.0))
    ok &= nz & (ang >= theta) & (ang <= np.pi - theta)

    cross = np.cross(u, v)
    ncross = _norm(cross)
    base_ok = ncross > 0.0
    dist = np.zeros(len(P))
    w = P[:, 3] - x0
    dist[base_ok] = np.abs(np.einsum("ij,ij->i", w[base_ok], cross[base_ok])) / ncross[base_ok]
    ok &= base_ok & (dist >= theta * d)
    return ok


def classify_wide(tri, theta, d):
    """True iff the triple is (theta, d)-wide (voluminous conditions (i)-(iii))."""
    if not (0.0 < theta < 1.0) or d <= 0.0:
        raise ValueError("need theta in (0,1) and d > 0")
    tri = np.asarray(tri, dtype=float).reshape(3, 3)
    return bool(classify_wide_batch(tri[None], theta, d)[0])


def classify_wide_batch(P, theta, d):
    P = np.asarray(P, dtype=float)
    x0 = P[:, 0]
    ok = (_norm(P[:, 1] - x0) <= 2.0 * d) & (_norm(P[:, 2] - x0) <= 2.0 * d)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        ok &= _norm(P[:, i] - P[:, j]) >= theta * d
    u = P[:, 1] - x0
    v = P[:, 2] - x0
    nu, nv = _norm(u), _norm(v)
    nz = (nu > 0.0) & (nv > 0.0)
    cosang = np.ones(len(P))
    cosang[nz] = np.einsum("ij,ij->i", u[nz], v[nz]) / (nu[nz] * nv[nz])
    ang = np.arccos(np.clip(cosang, -1.0, 1.0))
    return ok & nz & (ang >= theta) & (ang <= np.pi - theta)


# ---------------------------------------------------------------------------
# constants of the slanted-plane lemmas and the perturbation lemma
# ---------------------------------------------------------------------------

def slanted_constants(phi0, phi1):
    """The two slanted-plane constants.

    c0(phi0, phi1) = (1/2) (1 - cos(phi1/2)) sin(2 phi0) and
    c1(phi0) = (1/16) sin(2 phi0).
    """
    if not (0.0 < phi0 < np.pi / 2):
        raise ValueError("phi0 must lie in (0, pi/2)")
    if not (0.0 < phi1 < np.pi):
        raise ValueError("phi1 must lie in (0, pi)")
    c0 = 0.5 * (1.0 - np.cos(phi1 / 2.0)) * np.sin(2.0 * phi0)
    c1 = np.sin(2.0 * phi0) / 16.0
    return SlantedConstants(float(c0), float(c1))


def perturbation_radius(eta):
    """Perturbation radius eps(eta) = min(eta^5/10, eta^7/36).

    Moving each vertex of a tetrahedron with base angle, edge lengths and
    height controlled by (eta, d) at most eps(eta)*d keeps the height of the
    perturbed quadruple above eta*d/2.  The two terms are the proof's
    constraints 10*eps <= eta^5 and 6*eps*eta^-6 <= eta/6; the value is
    sufficient, not tight.
    """
    if not (0.0 < eta <= 0.5):
        raise ValueError("eta must lie in (0, 1/2]")
    return float(min(eta**5 / 10.0, eta**7 / 36.0))


def perturbation_alpha(eta):
    """Stability radius alpha(eta) = min(eta/20, eps(eta)) / 2.

    Any perturbation of a (eta, d)-voluminous tetrahedron by at most
    alpha(eta)*d stays (eta/2, 3d/2)-voluminous.
    """
    if not (0.0 < eta <= 0.5):
        raise ValueError("eta must lie in (0, 1/2]")
    return float(min(eta / 20.0, perturbation_radius(eta)) / 2.0)
