"""Realization of convex hyperbolic polygons with prescribed vertex angles.

Closed form for regular right-angled polygons; a damped least-squares
(Newton-type) solve over a star triangulation for general prescribed
angles.  The star-symmetric representative (center at the origin) is the
chosen representative of the isometry class.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import hypgeo as hg
from .errors import Infeasible, NoConvergence

ANGLE_TOL = 1e-10
AREA_TOL = 1e-9


@dataclass(frozen=True)
class PolygonSpec:
    """Target interior angles, one per vertex, in cyclic order."""

    angles: tuple

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        n = len(self.angles)
        if n < 3:
            raise Infeasible("need at least 3 vertices")
        if any(a <= 0 for a in self.angles):
            raise Infeasible("angles must be positive")
        if sum(self.angles) >= (n - 2) * math.pi:
            raise Infeasible(
                "angle sum must be below (n-2)*pi for a hyperbolic polygon"
            )

    @property
    def n(self):
        return len(self.angles)


class RealizedPolygon:
    """Convex polygon realized in the disk, with measured invariants."""

    def __init__(self, vertices, center=0j):
        self.vertices = [complex(v) for v in vertices]
        self.center = complex(center)
        n = len(self.vertices)
        self.sides = [
            hg.segment(self.vertices[i], self.vertices[(i + 1) % n])
            for i in range(n)
        ]
        self.measured_angles = [
            hg.angle_between_rays(
                self.vertices[i],
                self.vertices[(i - 1) % n],
                self.vertices[(i + 1) % n],
            )
            for i in range(n)
        ]
        self.diameter = max(
            hg.distance(p, q)
            for i, p in enumerate(self.vertices)
            for q in self.vertices[i + 1 :]
        )

    @property
    def n(self):
        return len(self.vertices)

    def area_gauss_bonnet(self) -> float:
        return (self.n - 2) * math.pi - sum(self.measured_angles)

    def area_by_triangulation(self) -> float:
        total = 0.0
        c = self.center
        for i in range(self.n):
            p = self.vertices[i]
            q = self.vertices[(i + 1) % self.n]
            a = hg.angle_between_rays(c, p, q)
            b = hg.angle_between_rays(p, q, c)
            g = hg.angle_between_rays(q, c, p)
            total += math.pi - a - b - g
        return total

    def contains(self, z, tol=0.0) -> bool:
        """Point-in-polygon via side tests (sides oriented counterclockwise)."""
        return all(s.carrier.signed_side(z) >= -tol for s in self.sides)

    def transformed(self, m: hg.Isometry) -> "RealizedPolygon":
        return RealizedPolygon(
            [m.apply(v) for v in self.vertices], m.apply(self.center)
        )

    def reflected(self, r: hg.Reflection) -> "RealizedPolygon":
        """Mirror image; vertex order is reversed to stay counterclockwise."""
        imgs = [r.apply(v) for v in self.vertices]
        return RealizedPolygon(list(reversed(imgs)), r.apply(self.center))


def circumradius_right_angled(n: int) -> float:
    return math.acosh(1.0 / math.tan(math.pi / n))


def realize_regular_right_angled(n: int) -> RealizedPolygon:
    """Regular polygon with all interior angles pi/2 (needs n >= 5)."""
    if n <= 4:
        raise Infeasible("no hyperbolic right-angled polygon with n <= 4")
    R = circumradius_right_angled(n)
    rho = math.tanh(R / 2.0)
    verts = [rho * cmath.exp(2j * math.pi * k / n) for k in range(n)]
    return RealizedPolygon(verts)


def _vertices_from_params(x, n):
    rs = x[:n]
    phis = x[n:]
    thetas = np.concatenate([[0.0], np.cumsum(phis[:-1])])
    return [
        math.tanh(max(rs[i], 1e-9) / 2.0) * cmath.exp(1j * thetas[i])
        for i in range(n)
    ]


def realize_star(spec: PolygonSpec) -> RealizedPolygon:
    """Polygon with prescribed interior angles, solved on a star
    triangulation: unknowns are the vertex radii and the central angles."""
    n = spec.n
    mean = sum(spec.angles) / n
    c = 1.0 / (math.tan(math.pi / n) * math.tan(mean / 2.0))
    if c <= 1.0:
        raise Infeasible("mean angle leaves no regular initial polygon")
    R0 = math.acosh(c)
    x0 = np.concatenate([np.full(n, R0), np.full(n, 2.0 * math.pi / n)])

    def residuals(x):
        verts = _vertices_from_params(x, n)
        res = []
        for i in range(n):
            a = hg.angle_between_rays(
                verts[i], verts[(i - 1) % n], verts[(i + 1) % n]
            )
            res.append(a - spec.angles[i])
        res.append(float(np.sum(x[n:]) - 2.0 * math.pi))
        return np.array(res)

    sol = least_squares(
        residuals,
        x0,
        method="trf",
        xtol=3e-16,
        ftol=3e-16,
        gtol=3e-16,
        max_nfev=200 * (2 * n + 1),
    )
    res = residuals(sol.x)
    if np.max(np.abs(res)) > ANGLE_TOL:
        raise NoConvergence(
            f"angle solve stalled with residual {np.max(np.abs(res)):.3e}"
        )
    poly = RealizedPolygon(_vertices_from_params(sol.x, n))
    check_polygon(poly, spec.angles)
    return poly


def check_polygon(poly: RealizedPolygon, target_angles) -> None:
    """Re-measure a realized polygon against its spec."""
    for a, t in zip(poly.measured_angles, target_angles):
        if abs(a - t) > ANGLE_TOL:
            raise NoConvergence(f"angle residual {abs(a - t):.3e}")
    gb = poly.area_gauss_bonnet()
    tri = poly.area_by_triangulation()
    if abs(gb - tri) > AREA_TOL:
        raise NoConvergence(f"area residual {abs(gb - tri):.3e}")


def diameter(poly: RealizedPolygon) -> float:
    """Max pairwise vertex distance; equals the true diameter by convexity."""
    return poly.diameter
