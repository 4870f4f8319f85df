"""Billiard tables: boundary components, normals, and the free-flight return map."""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

# Tolerances in table-diameter-normalized coordinates.
CORNER_TOL = 1e-9
GRAZING_TOL = 1e-9

KIND_TWO_PLATES = 0
KIND_POLYGON = 1
KIND_DISC_UNION = 2

SHAPE_SEGMENT = 0
SHAPE_ARC = 1
SHAPE_PLATE = 2


class CornerHitError(Exception):
    """Free flight ended within tolerance of a boundary corner or cusp."""


class GrazingError(Exception):
    """Velocity is tangential to the boundary within tolerance."""


@dataclass(frozen=True)
class Segment:
    p0: tuple
    p1: tuple

    def __post_init__(self):
        if self.p0 == self.p1:
            raise ValueError("degenerate segment: p0 == p1")


@dataclass(frozen=True)
class Arc:
    """Circular arc; the table interior is on the center side."""
    center: tuple
    radius: float
    angle_start: float
    angle_end: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("arc radius must be positive")
        if self.angle_end <= self.angle_start:
            raise ValueError("arc must have angle_end > angle_start")


@dataclass(frozen=True)
class Plate:
    """One of two parallel plates; spatially a flat torus, area normalized to 1."""
    index: int
    separation: float

    def __post_init__(self):
        if self.index not in (1, 2):
            raise ValueError("plate index must be 1 or 2")
        if self.separation <= 0:
            raise ValueError("plate separation must be positive")


Shape = Union[Segment, Arc, Plate]


@dataclass(frozen=True)
class BoundaryComponent:
    id: int
    shape: Shape
    temperature: float
    accommodation: float

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if not (0.0 < self.accommodation <= 1.0):
            raise ValueError("accommodation must be in (0, 1]")

    @property
    def area(self) -> float:
        return component_area(self)


def component_area(component: BoundaryComponent) -> float:
    shape = component.shape
    if isinstance(shape, Segment):
        return math.dist(shape.p0, shape.p1)
    if isinstance(shape, Arc):
        return shape.radius * (shape.angle_end - shape.angle_start)
    return 1.0


@dataclass(frozen=True)
class PhasePoint:
    """Post-collision state: boundary location plus strictly inward velocity."""
    component: int
    position: float
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))


@dataclass(frozen=True)
class PreCollisionPoint:
    """Landing point of a free flight; velocity points at the wall."""
    component: int
    position: float
    velocity: np.ndarray
    flight_length: float


@dataclass(frozen=True)
class Table:
    dimension: int
    components: tuple
    kind: str

    def __post_init__(self):
        ids = [c.id for c in self.components]
        if ids != list(range(len(self.components))):
            raise ValueError("component ids must be 0..N-1 in order")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def diameter(self) -> float:
        if self.kind == "two_plates":
            return self.components[0].shape.separation
        if self.kind == "disc_union":
            a0 = self.components[0].shape
            a1 = self.components[1].shape
            sep = math.dist(a0.center, a1.center)
            return sep + 2.0 * a0.radius
        pts = []
        for c in self.components:
            pts.extend([c.shape.p0, c.shape.p1])
        return max(math.dist(p, q) for p in pts for q in pts)

    def as_arrays(self) -> dict:
        """Flat array form consumed by the simulation kernels."""
        n = self.n_components
        shape_type = np.zeros(n, dtype=np.int64)
        params = np.zeros((n, 6), dtype=float)
        for i, c in enumerate(self.components):
            s = c.shape
            if isinstance(s, Segment):
                shape_type[i] = SHAPE_SEGMENT
                length = math.dist(s.p0, s.p1)
                tx = (s.p1[0] - s.p0[0]) / length
                ty = (s.p1[1] - s.p0[1]) / length
                params[i] = (s.p0[0], s.p0[1], tx, ty, length, 0.0)
            elif isinstance(s, Arc):
                shape_type[i] = SHAPE_ARC
                params[i] = (s.center[0], s.center[1], s.radius,
                             s.angle_start, s.angle_end, 0.0)
            else:
                shape_type[i] = SHAPE_PLATE
                params[i] = (s.separation, 0.0, 0.0, 0.0, 0.0, 0.0)
        kind_code = {"two_plates": KIND_TWO_PLATES,
                     "polygon": KIND_POLYGON,
                     "triangle_engine": KIND_POLYGON,
                     "disc_union": KIND_DISC_UNION}[self.kind]
        return {
            "kind": kind_code,
            "dim": self.dimension,
            "shape_type": shape_type,
            "params": params,
            "temperature": np.array([c.temperature for c in self.components]),
            "accommodation": np.array([c.accommodation for c in self.components]),
            "area": np.array([component_area(c) for c in self.components]),
            "diameter": self.diameter(),
        }


# ---------------------------------------------------------------------------
# Table builders

def two_plates(temperatures, accommodations, separation: float = 1.0) -> Table:
    """Two parallel plates at distance `separation`; velocity space is 3D."""
    comps = tuple(
        BoundaryComponent(i, Plate(i + 1, separation), temperatures[i], accommodations[i])
        for i in range(2)
    )
    return Table(dimension=3, components=comps, kind="two_plates")


def polygon(vertices, temperatures, accommodations, kind: str = "polygon") -> Table:
    """Convex polygon; edge i runs from vertex i to vertex i+1."""
    n = len(vertices)
    if n < 3:
        raise ValueError("polygon needs at least 3 vertices")
    comps = []
    for i in range(n):
        seg = Segment(tuple(vertices[i]), tuple(vertices[(i + 1) % n]))
        comps.append(BoundaryComponent(i, seg, temperatures[i], accommodations[i]))
    return Table(dimension=2, components=tuple(comps), kind=kind)


def equilateral_triangle(temperatures, accommodations, side: float = 1.0,
                         kind: str = "polygon") -> Table:
    h = side * math.sqrt(3.0) / 2.0
    verts = [(0.0, 0.0), (side, 0.0), (side / 2.0, h)]
    return polygon(verts, temperatures, accommodations, kind=kind)


def unit_square(temperatures, accommodations) -> Table:
    verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    return polygon(verts, temperatures, accommodations)


def disc_union(radius: float, ratio: float, temperatures, accommodations) -> Table:
    """Union of two discs of equal radius with centers 2*radius*ratio apart.

    `ratio` is the center separation over diameter, in (0, 1).  The boundary
    is two mirror-symmetric arcs meeting at cusp points on the vertical axis.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError("ratio parameter must be in (0, 1)")
    a = 2.0 * radius * ratio
    phi = math.acos(ratio)  # half-angle subtended by the removed lens cap
    # Left disc centered at (-a/2, 0): its boundary arc opens leftward,
    # spanning angles (phi, 2*pi - phi) about its own center.
    left = Arc((-a / 2.0, 0.0), radius, phi, 2.0 * math.pi - phi)
    right = Arc((a / 2.0, 0.0), radius, -math.pi + phi, math.pi - phi)
    comps = (
        BoundaryComponent(0, left, temperatures[0], accommodations[0]),
        BoundaryComponent(1, right, temperatures[1], accommodations[1]),
    )
    return Table(dimension=2, components=comps, kind="disc_union")


# ---------------------------------------------------------------------------
# Pointwise geometry

def point_on(table: Table, component: int, position: float) -> np.ndarray:
    s = table.components[component].shape
    if isinstance(s, Segment):
        length = math.dist(s.p0, s.p1)
        if not (0.0 <= position <= length):
            raise ValueError("position out of segment range")
        t = position / length
        return np.array([s.p0[0] + t * (s.p1[0] - s.p0[0]),
                         s.p0[1] + t * (s.p1[1] - s.p0[1])])
    if isinstance(s, Arc):
        ang = s.angle_start + position / s.radius
        if not (s.angle_start - 1e-12 <= ang <= s.angle_end + 1e-12):
            raise ValueError("position out of arc range")
        return np.array([s.center[0] + s.radius * math.cos(ang),
                         s.center[1] + s.radius * math.sin(ang)])
    raise ValueError("plates have no embedded point coordinates")


def inward_normal(table: Table, component: int, position: float) -> np.ndarray:
    s = table.components[component].shape
    if isinstance(s, Plate):
        # plate-1 frame convention: plate 1 faces +z, plate 2 faces -z
        sign = 1.0 if s.index == 1 else -1.0
        return np.array([0.0, 0.0, sign])
    if isinstance(s, Segment):
        length = math.dist(s.p0, s.p1)
        if not (0.0 <= position <= length):
            raise ValueError("position out of segment range")
        tx = (s.p1[0] - s.p0[0]) / length
        ty = (s.p1[1] - s.p0[1]) / length
        # interior lies to the left of p0->p1 (counterclockwise boundary)
        return np.array([-ty, tx])
    q = point_on(table, component, position)
    n = np.array([s.center[0], s.center[1]]) - q
    return n / np.linalg.norm(n)


def local_frame(table: Table, component: int, position: float) -> np.ndarray:
    """Rows: tangent vector(s) then the inward normal."""
    n = inward_normal(table, component, position)
    if table.dimension == 2:
        t = np.array([n[1], -n[0]])
        return np.vstack([t, n])
    if table.kind == "two_plates":
        return np.vstack([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], n])
    raise ValueError("3D frames only defined for the two-plate table")


def specular(v: np.ndarray, n: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.asarray(n, dtype=float)
    return v - 2.0 * np.dot(v, n) * n


# ---------------------------------------------------------------------------
# Free flight

def _ray_segment(q, d, p0, tvec, length, tol_t):
    """Intersection parameter of ray q + t*d with a segment, or None.

    Returns (t, s) with s the arc-length coordinate along the segment.
    """
    # solve q + t d = p0 + s tvec
    det = d[0] * (-tvec[1]) - d[1] * (-tvec[0])
    if det == 0.0:
        return None
    rx = p0[0] - q[0]
    ry = p0[1] - q[1]
    t = (rx * (-tvec[1]) - ry * (-tvec[0])) / det
    s = (d[0] * ry - d[1] * rx) / det
    if t <= tol_t or s < 0.0 or s > length:
        return None
    return t, s


def _ray_circle(q, d, center, radius):
    """Positive intersection parameters of ray q + t*d with a circle."""
    ox = q[0] - center[0]
    oy = q[1] - center[1]
    a = d[0] * d[0] + d[1] * d[1]
    b = 2.0 * (d[0] * ox + d[1] * oy)
    c = ox * ox + oy * oy - radius * radius
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    return [t for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a))]


def trace(table: Table, x: PhasePoint) -> PreCollisionPoint:
    """Follow the straight free flight from x to the next boundary hit."""
    v = np.asarray(x.velocity, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        raise GrazingError("zero velocity")
    n0 = inward_normal(table, x.component, x.position)
    if np.dot(v, n0) / speed <= GRAZING_TOL:
        raise GrazingError("velocity is not strictly inward")
    diam = table.diameter()

    if table.kind == "two_plates":
        sep = table.components[0].shape.separation
        other = 1 - x.component
        # normal component in the plate-1 frame; flight time = sep / |v_z|
        flight = speed * sep / abs(v[2])
        return PreCollisionPoint(other, x.position, v, flight)

    q = point_on(table, x.component, x.position)
    d = v[:2]
    tol_t = CORNER_TOL * diam / speed

    if table.kind in ("polygon", "triangle_engine"):
        best = None
        for j, comp in enumerate(table.components):
            if j == x.component:
                continue
            s = comp.shape
            p0 = s.p0
            length = math.dist(s.p0, s.p1)
            tvec = ((s.p1[0] - s.p0[0]) / length, (s.p1[1] - s.p0[1]) / length)
            hit = _ray_segment(q, d, p0, tvec, length, tol_t)
            if hit is not None and (best is None or hit[0] < best[0]):
                best = (hit[0], j, hit[1])
        if best is None:
            raise CornerHitError("flight escaped through a corner")
        t, j, s = best
        length = component_area(table.components[j])
        if s < CORNER_TOL * diam or s > length - CORNER_TOL * diam:
            raise CornerHitError("landing point within corner tolerance")
        n_land = inward_normal(table, j, s)
        if abs(np.dot(v[:2], n_land)) / speed < GRAZING_TOL:
            raise GrazingError("grazing arrival")
        return PreCollisionPoint(j, s, v, t * speed)

    # disc_union
    arcs = [c.shape for c in table.components]
    ctol = CORNER_TOL * diam
    best = None
    for j, arc in enumerate(arcs):
        other = arcs[1 - j]
        for t in _ray_circle(q, d, arc.center, arc.radius):
            if t <= tol_t:
                continue
            p = (q[0] + t * d[0], q[1] + t * d[1])
            dist_other = math.dist(p, other.center)
            if dist_other < arc.radius - ctol:
                continue  # interior of the other disc: not boundary
            if best is None or t < best[0]:
                best = (t, j, p, dist_other)
    if best is None:
        raise CornerHitError("flight found no boundary hit")
    t, j, p, dist_other = best
    if dist_other < arcs[j].radius + ctol:
        raise CornerHitError("landing point within cusp tolerance")
    arc = arcs[j]
    ang = math.atan2(p[1] - arc.center[1], p[0] - arc.center[0])
    # map to the arc's angular window
    while ang < arc.angle_start:
        ang += 2.0 * math.pi
    while ang > arc.angle_end and ang - 2.0 * math.pi >= arc.angle_start:
        ang -= 2.0 * math.pi
    if not (arc.angle_start - 1e-9 <= ang <= arc.angle_end + 1e-9):
        raise CornerHitError("landing angle outside arc window")
    pos = (ang - arc.angle_start) * arc.radius
    pos = min(max(pos, 0.0), component_area(table.components[j]))
    n_land = inward_normal(table, j, pos)
    if abs(np.dot(v[:2], n_land)) / speed < GRAZING_TOL:
        raise GrazingError("grazing arrival")
    return PreCollisionPoint(j, pos, v, t * speed)
