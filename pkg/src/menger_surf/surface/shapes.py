"""Procedural test meshes: icospheres, parametric grids, capsules."""

import numpy as np

from .trimesh import TriMesh

_PHI = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
], dtype=float)

_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def icosphere(subdivisions, radius=1.0):
    """Geodesic sphere: icosahedron subdivided and projected to the sphere."""
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return TriMesh(radius * np.asarray(verts), np.asarray(faces, dtype=np.int64))


def ellipsoid(a, b, c, subdivisions=3):
    """Icosphere stretched to half-axes (a, b, c)."""
    mesh = icosphere(subdivisions)
    return TriMesh(mesh.vertices * np.array([a, b, c]), mesh.faces)


def graph_mesh(fn, extent, n=64):
    """Triangulated graph of z = fn(x, y) over [-extent, extent]^2."""
    xs = np.linspace(-extent, extent, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    Z = fn(X, Y)
    verts = np.stack([X.ravel(), Y.ravel(), np.asarray(Z).ravel()], axis=-1)
    faces = []
    for i in range(n):
        for j in range(n):
            v00 = i * (n + 1) + j
            v01 = v00 + 1
            v10 = v00 + (n + 1)
            v11 = v10 + 1
            faces += [(v00, v10, v11), (v00, v11, v01)]
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def flat_patch(extent, n=32):
    """Flat square patch in the z = 0 plane (open mesh, no interior)."""
    return graph_mesh(lambda x, y: np.zeros_like(x), extent, n)


def torus_mesh(R, r, nu=192, nv=96):
    u = np.arange(nu) * (2.0 * np.pi / nu)
    v = np.arange(nv) * (2.0 * np.pi / nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    verts = np.stack([(R + r * np.cos(V)) * np.cos(U),
                      (R + r * np.cos(V)) * np.sin(U),
                      r * np.sin(V)], axis=-1).reshape(-1, 3)
    faces = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            a2 = i * nv + (j + 1) % nv
            b2 = ((i + 1) % nu) * nv + (j + 1) % nv
            faces += [(a, b, b2), (a, b2, a2)]
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def capsule_mesh(length, radius, n_profile=64, n_around=128):
    """Capsule about the z axis as a revolved profile (watertight)."""
    half = length / 2.0
    # profile from the -z pole to the +z pole: cap arc, wall, cap arc
    ang = np.linspace(-np.pi / 2, 0.0, n_profile // 2, endpoint=False)
    bottom = [(radius * np.cos(t), -half + radius * np.sin(t)) for t in ang]
    wall = [(radius, z) for z in np.linspace(-half, half, max(2, n_profile // 4))]
    ang = np.linspace(0.0, np.pi / 2, n_profile // 2 + 1)[1:]
    top = [(radius * np.cos(t), half + radius * np.sin(t)) for t in ang]
    profile = bottom + wall + top  # (rho, z); first rho=0 is the -z pole seed

    rho = np.array([p[0] for p in profile])
    zz = np.array([p[1] for p in profile])
    inner = (rho > 1e-12)
    rho, zz = rho[inner], zz[inner]
    m = len(rho)

    phis = np.arange(n_around) * (2.0 * np.pi / n_around)
    ring_verts = np.stack([np.outer(rho, np.cos(phis)).ravel(),
                           np.outer(rho, np.sin(phis)).ravel(),
                           np.repeat(zz, n_around)], axis=-1)
    south = np.array([[0.0, 0.0, -half - radius]])
    north = np.array([[0.0, 0.0, half + radius]])
    verts = np.concatenate([south, ring_verts, north])
    si, ni = 0, len(verts) - 1

    def rv(i, k):
        return 1 + i * n_around + (k % n_around)

    faces = []
    for k in range(n_around):  # south fan
        faces.append((si, rv(0, k + 1), rv(0, k)))
    for i in range(m - 1):
        for k in range(n_around):
            a, b = rv(i, k), rv(i, k + 1)
            c, d = rv(i + 1, k), rv(i + 1, k + 1)
            faces += [(a, b, d), (a, d, c)]
    for k in range(n_around):  # north fan
        faces.append((ni, rv(m - 1, k), rv(m - 1, k + 1)))
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def cube_mesh(edge=1.0):
    """Axis-aligned cube of the given edge, 12 triangles, outward winding."""
    h = edge / 2.0
    v = np.array([[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)])
    quads = [
        (0, 1, 3, 2),  # x = -h
        (4, 6, 7, 5),  # x = +h
        (0, 4, 5, 1),  # y = -h
        (2, 3, 7, 6),  # y = +h
        (0, 2, 6, 4),  # z = -h
        (1, 5, 7, 3),  # z = +h
    ]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return TriMesh(v, np.asarray(faces, dtype=np.int64))
