"""Poincare-disk kernel: points, geodesics, isometries, tangent vectors.

Points are complex numbers z with |z| < 1.  Orientation-preserving
isometries are Mobius maps z -> (a z + b)/(conj(b) z + conj(a)) with
|a|^2 - |b|^2 = 1.  Reflections (anti-isometries) exist only as an
internal composition device; every exported group element is
orientation-preserving.

All values are immutable after construction and every operation is a
pure function, so everything here is safe to use concurrently.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .errors import DegenerateInput, InvalidIsometry, NoAxis
from .tolerances import EPS_BOUNDARY, EPS_CLS, EPS_ON, EPS_SEP

TWO_PI = 2.0 * math.pi


def _z(p) -> complex:
    """Coerce an HPoint or a raw complex number to complex."""
    if isinstance(p, HPoint):
        return p.z
    return complex(p)


def norm_angle(theta: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    return theta


@dataclass(frozen=True)
class HPoint:
    """Interior point of the disk model."""

    z: complex

    def __post_init__(self):
        if abs(self.z) >= 1.0 - EPS_BOUNDARY:
            raise DegenerateInput("point is not interior to the disk")


@dataclass(frozen=True)
class IdealPoint:
    """Boundary point of the disk, stored as an angle in [0, 2*pi)."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", norm_angle(self.theta))

    @property
    def z(self) -> complex:
        return cmath.exp(1j * self.theta)


@dataclass(frozen=True)
class TangentVector:
    """Unit tangent vector: base point plus direction angle."""

    base: complex
    direction: float

    def __post_init__(self):
        object.__setattr__(self, "direction", norm_angle(self.direction))


class Isometry:
    """Orientation-preserving disk isometry z -> (a z + b)/(conj(b) z + conj(a))."""

    __slots__ = ("a", "b")

    def __init__(self, a: complex, b: complex, normalize: bool = True):
        if normalize:
            d = abs(a) ** 2 - abs(b) ** 2
            if d <= 0.0:
                raise InvalidIsometry("|a|^2 - |b|^2 must be positive")
            s = math.sqrt(d)
            a, b = a / s, b / s
        self.a = a
        self.b = b

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(1.0, 0.0, normalize=False)

    def apply(self, p) -> complex:
        z = _z(p)
        return (self.a * z + self.b) / (self.b.conjugate() * z + self.a.conjugate())

    def apply_boundary(self, theta: float) -> float:
        """Image angle of the boundary point exp(i theta)."""
        u = cmath.exp(1j * theta)
        w = (self.a * u + self.b) / (self.b.conjugate() * u + self.a.conjugate())
        return norm_angle(cmath.phase(w))

    def deriv_arg(self, p) -> float:
        """Argument of the derivative at p (local rotation angle)."""
        z = _z(p)
        den = self.b.conjugate() * z + self.a.conjugate()
        return cmath.phase(1.0 / (den * den))

    def apply_tangent(self, v: TangentVector) -> TangentVector:
        return TangentVector(self.apply(v.base), v.direction + self.deriv_arg(v.base))

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other (matrix product)."""
        a = self.a * other.a + self.b * other.b.conjugate()
        b = self.a * other.b + self.b * other.a.conjugate()
        return Isometry(a, b, normalize=False)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return self.compose(other)

    def inverse(self) -> "Isometry":
        return Isometry(self.a.conjugate(), -self.b, normalize=False)

    def trace(self) -> float:
        return 2.0 * self.a.real

    def classify(self) -> str:
        t = abs(self.trace())
        if t > 2.0 + EPS_CLS:
            return "hyperbolic"
        if t < 2.0 - EPS_CLS:
            return "elliptic"
        if abs(self.b) < EPS_CLS and abs(self.a.imag) < EPS_CLS:
            return "identity"
        return "parabolic"

    def translation_length(self) -> float:
        if self.classify() != "hyperbolic":
            raise NoAxis("translation length requires a hyperbolic isometry")
        return 2.0 * math.acosh(abs(self.trace()) / 2.0)

    def axis(self) -> "Geodesic":
        """Invariant geodesic, oriented from repelling to attracting fixed point."""
        if self.classify() != "hyperbolic":
            raise NoAxis("only hyperbolic isometries have an axis")
        # fixed points: conj(b) z^2 + (conj(a) - a) z - b = 0
        A = self.b.conjugate()
        B = self.a.conjugate() - self.a
        C = -self.b
        disc = cmath.sqrt(B * B - 4.0 * A * C)
        roots = []
        for s in (+1.0, -1.0):
            num = -B + s * disc
            roots.append(num / (2.0 * A))
        z1, z2 = roots
        # attracting fixed point: |f'| < 1 there
        def dmod(z):
            den = self.b.conjugate() * z + self.a.conjugate()
            return 1.0 / abs(den) ** 2

        if dmod(z1) < dmod(z2):
            att, rep = z1, z2
        else:
            att, rep = z2, z1
        return Geodesic(cmath.phase(rep), cmath.phase(att))

    def almost_equal(self, other: "Isometry", tol: float = 1e-9) -> bool:
        # (a, b) and (-a, -b) represent the same map
        d1 = abs(self.a - other.a) + abs(self.b - other.b)
        d2 = abs(self.a + other.a) + abs(self.b + other.b)
        return min(d1, d2) < tol

    def __repr__(self):
        return f"Isometry(a={self.a!r}, b={self.b!r})"


class Reflection:
    """Anti-isometry z -> m(conj(z)).  Internal composition device only."""

    __slots__ = ("m",)

    def __init__(self, m: Isometry):
        self.m = m

    def apply(self, p) -> complex:
        return self.m.apply(_z(p).conjugate())

    def compose(self, other: "Reflection") -> Isometry:
        """self after other: composition of two reflections is an isometry."""
        mo = other.m
        bar = Isometry(mo.a.conjugate(), mo.b.conjugate(), normalize=False)
        return self.m.compose(bar)

    def conjugate_isometry(self, g: Isometry) -> Isometry:
        """self o g o self^{-1} (an orientation-preserving isometry)."""
        gbar = Isometry(g.a.conjugate(), g.b.conjugate(), normalize=False)
        return self.m.compose(gbar).compose(
            Isometry(self.m.a.conjugate(), self.m.b.conjugate(), normalize=False).inverse()
        )


def reflection_across(g: "Geodesic") -> Reflection:
    """Reflection (anti-isometry) fixing the geodesic g pointwise."""
    if g.is_diameter:
        psi = cmath.phase(g._dirvec)
        return Reflection(Isometry(cmath.exp(1j * psi), 0.0, normalize=False))
    c, r = g.center, g.radius
    # inversion across the carrier circle, written in disk-isometry form
    return Reflection(Isometry(-1j * c / r, 1j / r, normalize=False))


def translation_to(c) -> Isometry:
    """Isometry taking the origin to c (a pure hyperbolic translation)."""
    c = _z(c)
    s = math.sqrt(1.0 - abs(c) ** 2)
    return Isometry(1.0 / s, c / s, normalize=False)


def rotation_about(c, phi: float) -> Isometry:
    """Rotation by angle phi about the interior point c."""
    c = _z(c)
    rot = Isometry(cmath.exp(0.5j * phi), 0.0, normalize=False)
    if c == 0:
        return rot
    t = translation_to(c)
    return t.compose(rot).compose(t.inverse())


def distance(p, q) -> float:
    """Hyperbolic distance between interior points."""
    zp, zq = _z(p), _z(q)
    num = abs(zp - zq)
    den = abs(1.0 - zp.conjugate() * zq)
    return 2.0 * math.atanh(num / den)


class Geodesic:
    """Complete geodesic given by two distinct ideal endpoint angles.

    Oriented from theta1 toward theta2.  Cached Euclidean data: either a
    diameter (through the origin) or the orthogonal circle (center, radius).
    """

    __slots__ = ("theta1", "theta2", "is_diameter", "center", "radius", "_dirvec")

    def __init__(self, theta1: float, theta2: float):
        theta1 = norm_angle(theta1)
        theta2 = norm_angle(theta2)
        sep = abs(cmath.exp(1j * theta1) - cmath.exp(1j * theta2))
        if sep < EPS_SEP:
            raise DegenerateInput("ideal endpoints coincide")
        self.theta1 = theta1
        self.theta2 = theta2
        u1 = cmath.exp(1j * theta1)
        u2 = cmath.exp(1j * theta2)
        denom = 1.0 + (u1 * u2.conjugate()).real
        if abs(denom) < 1e-14:
            self.is_diameter = True
            self.center = 0j
            self.radius = 0.0
            d = u2 - u1
            self._dirvec = d / abs(d)
        else:
            self.is_diameter = False
            self.center = (u1 + u2) / denom
            self.radius = math.sqrt(abs(self.center) ** 2 - 1.0)
            self._dirvec = 0j

    @property
    def endpoints(self):
        return (IdealPoint(self.theta1), IdealPoint(self.theta2))

    def reverse(self) -> "Geodesic":
        return Geodesic(self.theta2, self.theta1)

    def signed_side(self, p) -> float:
        """Signed quantity, positive iff p lies to the left of the oriented
        geodesic; |asinh| of it is the hyperbolic distance to the geodesic."""
        z = _z(p)
        if self.is_diameter:
            perp = (z * self._dirvec.conjugate()).imag
            return 2.0 * perp / (1.0 - abs(z) ** 2)
        q = (abs(z - self.center) ** 2 - self.radius ** 2) / (
            self.radius * (1.0 - abs(z) ** 2)
        )
        # q > 0 outside the circle (origin side); left-ness depends on
        # the orientation of the arc.
        u1 = cmath.exp(1j * self.theta1)
        u2 = cmath.exp(1j * self.theta2)
        chord_cross = ((u2 - u1).conjugate() * (self.center - u1)).imag
        # if the center is to the left of the chord, the origin side is right
        return -q if chord_cross > 0 else q

    def distance_to(self, p) -> float:
        return math.asinh(abs(self.signed_side(p)))

    def contains(self, p, tol: float = EPS_ON) -> bool:
        return self.distance_to(p) <= tol

    def deepest_point(self) -> complex:
        """Point of the geodesic closest to the origin."""
        if self.is_diameter:
            return 0j
        return self.center * (abs(self.center) - self.radius) / abs(self.center)

    def tangent_at(self, p) -> complex:
        """Unit (Euclidean) tangent vector at a point on the geodesic,
        pointing along the orientation theta1 -> theta2."""
        z = _z(p)
        u1 = cmath.exp(1j * self.theta1)
        u2 = cmath.exp(1j * self.theta2)
        if self.is_diameter:
            return self._dirvec
        t = 1j * (z - self.center)
        t = t / abs(t)
        if ((u2 - u1).conjugate() * t).real < 0.0:
            t = -t
        return t

    def foot_of_perpendicular(self, p) -> complex:
        """Orthogonal projection of an interior point onto the geodesic."""
        z = _z(p)
        if self.is_diameter:
            d = self._dirvec
            # map to the real-axis frame, project, map back
            w = z * d.conjugate()
            x = _project_to_real_diameter(w)
            return x * d
        # inversive construction: the perpendicular through z is the
        # geodesic through z and its inversion across the carrier circle
        zi = self.center + (self.radius ** 2) / (z - self.center).conjugate()
        gz = _geodesic_through_points(z, zi)
        return intersect(self, gz)

    def __repr__(self):
        return f"Geodesic({self.theta1:.6f}, {self.theta2:.6f})"


def _project_to_real_diameter(w: complex) -> float:
    """Hyperbolic projection of w onto the real diameter."""
    # nearest point x solves: the geodesic through w perpendicular to the
    # real axis is a circle centered on the real axis through w; its foot:
    # x = (|w|^2 + 1 - sqrt((|w|^2 + 1)^2 - 4 Re(w)^2)) / (2 Re(w)) for Re w != 0
    a = abs(w) ** 2 + 1.0
    re = w.real
    if abs(re) < 1e-15:
        return 0.0
    x = (a - math.sqrt(a * a - 4.0 * re * re)) / (2.0 * re)
    return x


def _geodesic_through_points(p: complex, q: complex) -> Geodesic:
    """Geodesic through two points given as complex numbers; q may lie
    outside the closed disk (used by inversive constructions): the circle
    through p and q orthogonal to the unit circle is computed directly."""
    cross = (p.conjugate() * q).imag
    if abs(cross) < 1e-15:
        # collinear with the origin: a diameter
        d = q - p
        ang = cmath.phase(d / abs(d))
        return Geodesic(ang + math.pi, ang)
    c = (q * (1.0 + abs(p) ** 2) - p * (1.0 + abs(q) ** 2)) / (2.0j * cross)
    # ideal endpoints: angles with Re(conj(c) u) = 1
    phi = math.acos(min(1.0, max(-1.0, 1.0 / abs(c))))
    base = cmath.phase(c)
    th_a, th_b = base - phi, base + phi
    # orient from p to q
    g = Geodesic(th_a, th_b)
    t = g.tangent_at(p)
    if (t.conjugate() * (q - p)).real < 0.0:
        g = g.reverse()
    return g


def geodesic_through(p, q) -> Geodesic:
    """Oriented geodesic through two distinct interior points."""
    zp, zq = _z(p), _z(q)
    if abs(zp - zq) < 1e-14:
        raise DegenerateInput("cannot orient a geodesic through coincident points")
    return _geodesic_through_points(zp, zq)


def direction_from(p, q) -> float:
    """Initial direction angle at p of the geodesic ray toward q."""
    zp, zq = _z(p), _z(q)
    w = (zq - zp) / (1.0 - zp.conjugate() * zq)
    return norm_angle(cmath.phase(w))


def point_at(p, direction: float, dist: float) -> complex:
    """Point reached from p after hyperbolic distance dist along direction."""
    zp = _z(p)
    w = math.tanh(dist / 2.0) * cmath.exp(1j * direction)
    return (w + zp) / (1.0 + zp.conjugate() * w)


def ray_geodesic(p, direction: float) -> Geodesic:
    """Complete geodesic through p oriented along the given direction."""
    zp = _z(p)
    e = cmath.exp(1j * direction)
    # boundary images of +-e under z -> (z + p)/(1 + conj(p) z)
    u2 = (e + zp) / (1.0 + zp.conjugate() * e)
    u1 = (-e + zp) / (1.0 - zp.conjugate() * e)
    return Geodesic(cmath.phase(u1), cmath.phase(u2))


@dataclass(frozen=True)
class GeodesicSegment:
    """Geodesic arc between two interior points, with its carrier."""

    start: complex
    end: complex
    carrier: Geodesic = field(repr=False)

    def __post_init__(self):
        if (
            self.carrier.distance_to(self.start) > EPS_ON
            or self.carrier.distance_to(self.end) > EPS_ON
        ):
            raise DegenerateInput("segment endpoints do not lie on the carrier")

    @property
    def length(self) -> float:
        return distance(self.start, self.end)

    def contains(self, p, tol: float = 1e-9) -> bool:
        z = _z(p)
        if self.carrier.distance_to(z) > max(tol, EPS_ON):
            return False
        gap = distance(self.start, z) + distance(z, self.end) - self.length
        return gap <= tol

    def midpoint(self) -> complex:
        d = direction_from(self.start, self.end)
        return point_at(self.start, d, self.length / 2.0)

    def point_at_fraction(self, t: float) -> complex:
        d = direction_from(self.start, self.end)
        return point_at(self.start, d, t * self.length)


def segment(p, q) -> GeodesicSegment:
    """Geodesic segment from p to q."""
    zp, zq = _z(p), _z(q)
    return GeodesicSegment(zp, zq, geodesic_through(zp, zq))


def angles_interleave(g1: Geodesic, g2: Geodesic) -> bool:
    """Exact combinatorial test: do the ideal endpoints of g1 and g2
    alternate around the circle?"""
    items = sorted(
        [(g1.theta1, 0), (g1.theta2, 0), (g2.theta1, 1), (g2.theta2, 1)]
    )
    labels = [lab for _, lab in items]
    return labels[0] != labels[1] and labels[1] != labels[2] and labels[2] != labels[3]


def intersect(g1: Geodesic, g2: Geodesic):
    """Interior intersection point, or None when the endpoints do not
    interleave.  Identical geodesics are rejected."""
    same = {round(g1.theta1, 9), round(g1.theta2, 9)} == {
        round(g2.theta1, 9),
        round(g2.theta2, 9),
    }
    if same:
        raise DegenerateInput("geodesics coincide")
    if not angles_interleave(g1, g2):
        return None
    if g1.is_diameter and g2.is_diameter:
        return 0j
    if g1.is_diameter:
        g1, g2 = g2, g1
    # now g1 is a circle (center c, radius r)
    c, r = g1.center, g1.radius
    if g2.is_diameter:
        d = g2._dirvec
        # points c + r e: on the line t*d -> solve Im(conj(d) z) = 0
        # param: z = t d; |t d - c|^2 = r^2
        b = (d.conjugate() * c).real
        disc = b * b - (abs(c) ** 2 - r * r)
        if disc < 0:
            return None
        for s in (+1.0, -1.0):
            t = b + s * math.sqrt(disc)
            z = t * d
            if abs(z) < 1.0:
                return z
        return None
    c2, r2 = g2.center, g2.radius
    dd = c2 - c
    d2 = abs(dd) ** 2
    if d2 < 1e-30:
        raise DegenerateInput("concentric carriers")
    # radical line intersection
    t = (r * r - r2 * r2 + d2) / (2.0 * d2)
    h2 = r * r - t * t * d2
    if h2 < 0:
        return None
    h = math.sqrt(h2)
    base = c + t * dd
    off = 1j * dd / abs(dd) * h
    for z in (base + off, base - off):
        if abs(z) < 1.0:
            return _polish_circle_intersection(z, c, r, c2, r2)
    return None


def _polish_circle_intersection(z, c1, r1, c2, r2):
    """Newton refinement of a two-circle intersection (large carriers are
    ill-conditioned under the radical-line formula)."""
    for _ in range(3):
        f1 = abs(z - c1) ** 2 - r1 * r1
        f2 = abs(z - c2) ** 2 - r2 * r2
        a1, b1 = 2.0 * (z - c1).real, 2.0 * (z - c1).imag
        a2, b2 = 2.0 * (z - c2).real, 2.0 * (z - c2).imag
        det = a1 * b2 - a2 * b1
        if abs(det) < 1e-30:
            break
        dx = (f1 * b2 - f2 * b1) / det
        dy = (a1 * f2 - a2 * f1) / det
        z = z - complex(dx, dy)
    return z


def angle_at(g1: Geodesic, g2: Geodesic, x) -> float:
    """Angle in [0, pi] between the oriented tangents of g1 and g2 at a
    common point x."""
    t1 = g1.tangent_at(x)
    t2 = g2.tangent_at(x)
    c = (t1.conjugate() * t2).real
    c = min(1.0, max(-1.0, c))
    return math.acos(c)


def angle_between_rays(v, p, q) -> float:
    """Interior angle at v between the geodesic rays v->p and v->q, in [0, pi]."""
    d1 = direction_from(v, p)
    d2 = direction_from(v, q)
    diff = abs(norm_angle(d1 - d2))
    if diff > math.pi:
        diff = TWO_PI - diff
    return diff


def map_to_real_axis(g: Geodesic) -> Isometry:
    """Isometry sending g to the real diameter (oriented left-to-right)."""
    p0 = g.deepest_point()
    t = translation_to(p0).inverse()
    th2 = t.apply_boundary(g.theta2)
    rot = Isometry(cmath.exp(-0.5j * th2), 0.0, normalize=False)
    return rot.compose(t)


def common_perpendicular(g1: Geodesic, g2: Geodesic) -> GeodesicSegment:
    """Unique geodesic segment meeting two disjoint geodesics at right
    angles, from the foot on g1 to the foot on g2."""
    if angles_interleave(g1, g2):
        raise DegenerateInput("geodesics intersect; no common perpendicular")
    m = map_to_real_axis(g1)
    mi = m.inverse()
    h = Geodesic(m.apply_boundary(g2.theta1), m.apply_boundary(g2.theta2))
    if h.is_diameter:
        raise DegenerateInput("geodesics intersect; no common perpendicular")
    re_c = h.center.real
    if abs(re_c) < 1e-12:
        # symmetric position: the perpendicular is the imaginary diameter
        f1 = 0j
        perp = Geodesic(-0.5 * math.pi, 0.5 * math.pi)
    else:
        x = 1.0 / re_c
        if x * x <= 1.0:
            raise DegenerateInput("geodesics intersect or are asymptotic")
        rad = math.sqrt(x * x - 1.0)
        f1 = complex(x - math.copysign(rad, x), 0.0)  # foot on the real axis
        # the perpendicular has Euclidean center x, so ideal angles +-acos(1/x)
        th = math.acos(1.0 / x)
        perp = Geodesic(th, -th)
    f2 = intersect(perp, h)
    if f2 is None:
        raise DegenerateInput("perpendicular construction failed")
    a = mi.apply(f1)
    b = mi.apply(f2)
    return segment(a, b)


def perpendicular_at(g: Geodesic, p) -> Geodesic:
    """Geodesic through a point p of g meeting g at a right angle."""
    z = _z(p)
    t = g.tangent_at(z)
    d = cmath.phase(t) + 0.5 * math.pi
    return ray_geodesic(z, d)
