"""Surface oracles: a uniform interface over analytic shapes and meshes.

An oracle provides total area, area-uniform sampling with oriented normals,
segment intersection, banded first-hit ray queries, an inside test when the
surface bounds a volume, and a triangulated stand-in for face-based
diagnostics.  Oracles are immutable after construction and safe to share;
random streams are caller-owned and never stored.
"""

from typing import NamedTuple

import numpy as np

from .analytic import Capsule, SaddlePatch, Sphere, Torus
from .io import MeshParseError, load_obj, load_off, save_obj, save_off
from .trimesh import TriMesh
from . import shapes


class SurfacePoint(NamedTuple):
    position: np.ndarray
    normal: np.ndarray


def load_mesh(path, format=None):
    """Load an OBJ or OFF file into a TriMesh.

    ``format`` is "obj" or "off"; when omitted it is taken from the file
    extension.
    """
    if format is None:
        format = str(path).rsplit(".", 1)[-1].lower()
    if format == "obj":
        vertices, faces = load_obj(path)
    elif format == "off":
        vertices, faces = load_off(path)
    else:
        raise ValueError(f"unknown mesh format {format!r}")
    return TriMesh(vertices, faces)


class SurfaceOracle:
    """Uniform surface abstraction over an analytic shape or a TriMesh."""

    def __init__(self, backing):
        self.backing = backing
        self.total_area = float(backing.total_area)
        if not self.total_area > 0.0:
            raise ValueError("surface has no area")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def sphere(cls, radius, center=(0.0, 0.0, 0.0)):
        return cls(Sphere(radius, center))

    @classmethod
    def torus(cls, major_radius, minor_radius):
        return cls(Torus(major_radius, minor_radius))

    @classmethod
    def saddle(cls, extent):
        return cls(SaddlePatch(extent))

    @classmethod
    def capsule(cls, length, radius):
        return cls(Capsule(length, radius))

    @classmethod
    def from_mesh(cls, mesh):
        if not isinstance(mesh, TriMesh):
            raise TypeError("from_mesh expects a TriMesh")
        return cls(mesh)

    @classmethod
    def from_file(cls, path, format=None):
        return cls(load_mesh(path, format))

    # -- delegation -----------------------------------------------------------

    @property
    def diameter(self):
        return self.backing.diameter

    def sample(self, rng, n):
        return self.backing.sample(rng, n)

    def sample_points(self, rng, n):
        pts, _ = self.backing.sample(rng, n)
        return pts

    def segment_hits(self, a, b):
        return self.backing.segment_hits(a, b)

    def band_min_hits(self, origin, dirs, tmin, tmax):
        return self.backing.band_min_hits(origin, dirs, tmin, tmax)

    def inside(self, p):
        return self.backing.inside(p)

    def has_interior(self):
        return self.backing.has_interior()

    def normal_at(self, p):
        return self.backing.normal_at(p)

    def surface_distance(self, p):
        return self.backing.surface_distance(p)

    def tessellate(self, **kwargs):
        if isinstance(self.backing, TriMesh):
            return self.backing
        return self.backing.tessellate(**kwargs)

    def describe(self):
        return self.backing.describe()

    @property
    def is_mesh(self):
        return isinstance(self.backing, TriMesh)


def sample_point(oracle, rng):
    """One area-uniform surface point with its oriented unit normal."""
    pts, normals = oracle.sample(rng, 1)
    return SurfacePoint(pts[0], normals[0])
