"""The four-point curvature integrand family and its lemma lower bounds.

Four kinds are supported, all mapping an ordered quadruple T = (x0,x1,x2,x3)
to a nonnegative number and all returning 0 on degenerate input:

* ``menger``       -- V(T) / (A(T) * diam(T)^2), inverse-length scaling;
* ``circumsphere`` -- 1 / R(T), the inverse circumsphere radius;
* ``leger``        -- dist(xi, <x,y,z>) / M(|xi-x|,|xi-y|,|xi-z|)^alpha with
  (x, y, z, xi) = (x0, x1, x2, x3), a mean M and a power alpha > 1; not
  symmetric in the fourth argument;
* ``scaled``       -- h_min(T) / diam(T)^(2+s), inverse-length^(1+s) scaling.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import geom
from .geom import LemmaBounds

KINDS = ("menger", "circumsphere", "leger", "scaled")
MEANS = ("geometric", "arithmetic", "min", "max")


@dataclass(frozen=True)
class IntegrandSpec:
    """Selects one member of the integrand family.

    ``mean`` and ``alpha`` are required for (and only for) kind ``leger``;
    ``s`` is required for (and only for) kind ``scaled``.
    """
    kind: str
    mean: str = None
    alpha: float = None
    s: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown integrand kind {self.kind!r}")
        if self.kind == "leger":
            if self.mean not in MEANS:
                raise ValueError(f"leger kind needs a mean from {MEANS}")
            if self.alpha is None or not self.alpha > 1.0:
                raise ValueError("leger kind needs alpha > 1")
            if self.s is not None:
                raise ValueError("parameter s is only for the scaled kind")
        elif self.kind == "scaled":
            if self.s is None or not self.s > 0.0:
                raise ValueError("scaled kind needs s > 0")
            if self.mean is not None or self.alpha is not None:
                raise ValueError("mean/alpha are only for the leger kind")
        else:
            if self.mean is not None or self.alpha is not None or self.s is not None:
                raise ValueError(f"kind {self.kind!r} takes no parameters")

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "leger":
            out["mean"] = self.mean
            out["alpha"] = self.alpha
        if self.kind == "scaled":
            out["s"] = self.s
        return out

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d.get("kind"), mean=d.get("mean"),
                   alpha=d.get("alpha"), s=d.get("s"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _canonical_points(P):
    """Lexicographically sort the vertices inside each simplex of a stack.

    The symmetric integrands are permutation invariant exactly; fixing a
    canonical vertex order makes the floating-point evaluation invariant too,
    since every ordering then computes the same arithmetic.  Positive scaling
    preserves the canonical order, so exact homogeneity is untouched.
    """
    order = np.lexsort((P[:, :, 2], P[:, :, 1], P[:, :, 0]), axis=-1)
    return np.take_along_axis(P, order[:, :, None], axis=1)


def _mean_batch(name, a, b, c):
    if name == "geometric":
        return np.cbrt(a * b * c)
    if name == "arithmetic":
        return (a + b + c) / 3.0
    if name == "min":
        return np.minimum(a, np.minimum(b, c))
    if name == "max":
        return np.maximum(a, np.maximum(b, c))
    raise ValueError(f"unknown mean {name!r}")


def mean_value(name, a, b, c):
    """One of the supported means on a nonnegative triple."""
    return float(_mean_batch(name, float(a), float(b), float(c)))


def eval_batch(spec, P):
    """Evaluate the integrand on a (n, 4, 3) stack of quadruples."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 3 or P.shape[1:] != (4, 3):
        raise ValueError("expected an (n, 4, 3) array of quadruples")
    n = len(P)
    if spec.kind == "menger":
        P = _canonical_points(P)
        volume, area, diam, hmin, coplanar = geom.tetra_quantities(P)
        out = np.zeros(n)
        ok = ~coplanar
        out[ok] = volume[ok] / (area[ok] * diam[ok] ** 2)
        return out
    if spec.kind == "circumsphere":
        P = _canonical_points(P)
        radius, coplanar = geom.circumsphere_radius_batch(P)
        out = np.zeros(n)
        ok = ~coplanar & np.isfinite(radius) & (radius > 0.0)
        out[ok] = 1.0 / radius[ok]
        return out
    if spec.kind == "scaled":
        P = _canonical_points(P)
        volume, area, diam, hmin, coplanar = geom.tetra_quantities(P)
        out = np.zeros(n)
        ok = ~coplanar
        out[ok] = hmin[ok] / diam[ok] ** (2.0 + spec.s)
        return out
    if spec.kind == "leger":
        base = _canonical_points(P[:, :3])
        x, y, z, xi = base[:, 0], base[:, 1], base[:, 2], P[:, 3]
        cross = np.cross(y - x, z - x)
        ncross = np.sqrt(np.einsum("ij,ij->i", cross, cross))
        edges = np.stack([np.linalg.norm(y - x, axis=1),
                          np.linalg.norm(z - x, axis=1),
                          np.linalg.norm(z - y, axis=1)], axis=-1)
        longest = edges.max(axis=-1)
        base_ok = 0.5 * ncross >= geom.TRI_DEGENERACY_REL * longest**2
        base_ok &= longest > 0.0
        da = np.linalg.norm(xi - x, axis=1)
        db = np.linalg.norm(xi - y, axis=1)
        dc = np.linalg.norm(xi - z, axis=1)
        m = _mean_batch(spec.mean, da, db, dc)
        ok = base_ok & (m > 0.0)
        out = np.zeros(n)
        dist = np.abs(np.einsum("ij,ij->i", xi[ok] - x[ok], cross[ok])) / ncross[ok]
        out[ok] = dist / m[ok] ** spec.alpha
        return out
    raise ValueError(f"unknown integrand kind {spec.kind!r}")


def eval_integrand(spec, T):
    """Evaluate the integrand on one quadruple."""
    T = geom.as_tetra(T)
    return float(eval_batch(spec, T[None])[0])


def menger_cross_form_batch(P):
    """The cross-product form of the menger integrand on a (n,4,3) stack.

    (1/3) |z3.(z1 x z2)| / ((|z1 x z2| + |z2 x z3| + |z1 x z3| +
    |(z2-z1) x (z3-z2)|) diam^2), an algebraically identical route to the
    V/(A diam^2) definition, kept separate as a cross-check.
    """
    P = _canonical_points(np.asarray(P, dtype=float))
    z1 = P[:, 1] - P[:, 0]
    z2 = P[:, 2] - P[:, 0]
    z3 = P[:, 3] - P[:, 0]
    c12 = np.cross(z1, z2)
    num = np.abs(np.einsum("ij,ij->i", z3, c12))
    csum = (np.linalg.norm(c12, axis=1)
            + np.linalg.norm(np.cross(z2, z3), axis=1)
            + np.linalg.norm(np.cross(z1, z3), axis=1)
            + np.linalg.norm(np.cross(z2 - z1, z3 - z2), axis=1))
    _, _, diam, _, coplanar = geom.tetra_quantities(P)
    out = np.zeros(len(P))
    ok = ~coplanar & (csum > 0.0)
    out[ok] = num[ok] / (3.0 * csum[ok] * diam[ok] ** 2)
    return out


def menger_cross_form(T):
    T = geom.as_tetra(T)
    return float(menger_cross_form_batch(T[None])[0])


def lemma_bounds(theta, kappa, d):
    """Lower bounds for the menger integrand on structured tetrahedra.

    A (theta, d)-voluminous tetrahedron has K > theta^4 / (2500 d); one with
    a (theta, d)-wide base, fourth vertex in B(x0, 2d) and at distance at
    least kappa*d from the base plane has K > theta^3 kappa / (2500 d).
    """
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0, 1)")
    if not (0.0 < kappa <= 1.0):
        raise ValueError("kappa must lie in (0, 1]")
    if not d > 0.0:
        raise ValueError("d must be positive")
    return LemmaBounds(theta**4 / (2500.0 * d), theta**3 * kappa / (2500.0 * d))
