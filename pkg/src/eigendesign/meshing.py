"""Segment and triangle meshes for intervals, rectangles, disks and ellipses.

Disk and ellipse meshes are built from concentric polar rings with triangle
splitting, so boundary vertices sit exactly on the analytic boundary and the
signed boundary curvature is available in closed form.  Meshes are treated
as immutable after construction and are safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import MeshConformityError, MeshFormatError

__all__ = [
    "Interval", "Rectangle", "Disk", "Ellipse", "Shape",
    "Mesh", "BoundaryGeometry",
    "generate", "import_mesh", "export_mesh",
]


@dataclass(frozen=True)
class Interval:
    length: float


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float


@dataclass(frozen=True)
class Disk:
    radius: float


@dataclass(frozen=True)
class Ellipse:
    semi_x: float
    semi_y: float


Shape = Union[Interval, Rectangle, Disk, Ellipse]


@dataclass(eq=False)
class Mesh:
    """Conforming simplicial mesh: segments in 1D, triangles in 2D.

    ``boundary_edges`` holds directed vertex pairs as traversed by their
    (counterclockwise) owning element, so the outward normal is to the right
    of each edge; it is empty in 1D, where the boundary is a vertex set.
    """

    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    element_measure: np.ndarray
    boundary_vertices: np.ndarray
    boundary_edges: np.ndarray
    domain_measure: float

    def centroids(self) -> np.ndarray:
        return self.vertices[self.elements].mean(axis=1)

    def diameter_bound(self) -> float:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))


@dataclass(eq=False)
class BoundaryGeometry:
    """Signed boundary curvature sampled at boundary vertices (2D).

    Convention: positive where the domain is convex.  Corner vertices (e.g.
    rectangle corners) carry no curvature value and are listed separately;
    downstream asymptotics treat cornered domains by their vertices rather
    than by a curvature maximum.
    """

    curvature_at_vertex: dict[int, float]
    corners: frozenset[int] = field(default_factory=frozenset)
    max_curvature: float = 0.0
    max_location: tuple[float, ...] = ()


def _orient_and_measure(dim: int, vertices: np.ndarray, elements: np.ndarray):
    """Normalize element orientation in place and return measures."""
    if dim == 1:
        x = vertices[:, 0]
        flip = x[elements[:, 0]] > x[elements[:, 1]]
        elements[flip] = elements[flip][:, ::-1]
        measure = x[elements[:, 1]] - x[elements[:, 0]]
    else:
        p = vertices[elements]
        u, v = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        flip = cross < 0
        elements[flip] = elements[flip][:, [0, 2, 1]]
        measure = 0.5 * np.abs(cross)
    return measure


def _finalize(dim: int, vertices: np.ndarray, elements: np.ndarray) -> Mesh:
    vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, dim)
    elements = np.ascontiguousarray(elements, dtype=np.int64).reshape(-1, dim + 1)
    if elements.size and (elements.min() < 0 or elements.max() >= len(vertices)):
        raise MeshConformityError("element refers to a vertex index out of range")
    for e, row in enumerate(elements):
        if len(set(row.tolist())) != dim + 1:
            raise MeshConformityError(f"element {e} repeats a vertex")
    measure = _orient_and_measure(dim, vertices, elements)
    if np.any(measure <= 0):
        bad = int(np.argmin(measure))
        raise MeshConformityError(f"element {bad} has zero measure")

    if dim == 1:
        counts = np.bincount(elements.ravel(), minlength=len(vertices))
        if counts.max(initial=0) > 2:
            raise MeshConformityError("a vertex is shared by more than two segments")
        boundary_vertices = np.flatnonzero(counts == 1)
        boundary_edges = np.empty((0, 2), dtype=np.int64)
    else:
        edge_count: dict[tuple[int, int], int] = {}
        directed: dict[tuple[int, int], tuple[int, int]] = {}
        for tri in elements:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edge_count[key] = edge_count.get(key, 0) + 1
                directed[key] = (int(a), int(b))
        if any(c > 2 for c in edge_count.values()):
            raise MeshConformityError("an edge is shared by more than two triangles")
        boundary = [directed[k] for k, c in sorted(edge_count.items()) if c == 1]
        boundary_edges = np.asarray(boundary, dtype=np.int64).reshape(-1, 2)
        boundary_vertices = np.unique(boundary_edges)

    return Mesh(
        dim=dim, vertices=vertices, elements=elements,
        element_measure=measure, boundary_vertices=boundary_vertices,
        boundary_edges=boundary_edges, domain_measure=float(measure.sum()),
    )


def _interval_mesh(length: float, h: float):
    n = max(1, round(length / h))
    x = np.linspace(0.0, length, n + 1)
    verts = x[:, None]
    elems = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    mesh = _finalize(1, verts, elems)
    geo = BoundaryGeometry(curvature_at_vertex={}, max_curvature=0.0, max_location=())
    return mesh, geo


def _rectangle_mesh(width: float, height: float, h: float):
    nx = max(1, math.ceil(width / h))
    ny = max(1, math.ceil(height / h))
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([gx.ravel(), gy.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    mesh = _finalize(2, verts, np.asarray(tris))

    corner_coords = {(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)}
    corners = set()
    curvature = {}
    for v in mesh.boundary_vertices:
        xy = (float(mesh.vertices[v, 0]), float(mesh.vertices[v, 1]))
        if xy in corner_coords:
            corners.add(int(v))
        else:
            curvature[int(v)] = 0.0
    geo = BoundaryGeometry(
        curvature_at_vertex=curvature, corners=frozenset(corners),
        max_curvature=0.0, max_location=(0.0, 0.0),
    )
    return mesh, geo


def _zip_rings(inner: np.ndarray, outer: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the annulus between two concentric vertex rings.

    Both rings start at angle 0 and run counterclockwise; the walk always
    advances the ring whose next vertex comes first in angle, which keeps
    the strip conforming for any pair of ring sizes.
    """
    na, nb = len(inner), len(outer)
    tris = []
    ia = ib = 0
    while ia < na or ib < nb:
        ang_a = 2 * math.pi * (ia + 1) / na
        ang_b = 2 * math.pi * (ib + 1) / nb
        if ia < na and (ib >= nb or ang_a <= ang_b):
            tris.append((inner[ia % na], outer[ib % nb], inner[(ia + 1) % na]))
            ia += 1
        else:
            tris.append((inner[ia % na], outer[ib % nb], outer[(ib + 1) % nb]))
            ib += 1
    return tris


def _unit_disk_mesh(h: float):
    """Polar ring mesh of the unit disk: ring j carries 6j vertices.

    The worst ring-to-ring slant is 1.615x the radial spacing, so the ring
    count carries a 1.08 safety factor to keep element diameters <= 1.5 h.
    """
    m = max(2, math.ceil(1.08 / h))
    verts = [(0.0, 0.0)]
    rings = []
    for j in range(1, m + 1):
        n = 6 * j
        theta = 2 * math.pi * np.arange(n) / n
        start = len(verts)
        r = j / m
        verts.extend(zip(r * np.cos(theta), r * np.sin(theta)))
        rings.append(np.arange(start, start + n))
    tris = [(0, rings[0][j], rings[0][(j + 1) % 6]) for j in range(6)]
    for j in range(m - 1):
        tris.extend(_zip_rings(rings[j], rings[j + 1]))
    return np.asarray(verts, dtype=float), np.asarray(tris), rings[-1]


def _disk_mesh(radius: float, h: float):
    verts, tris, rim = _unit_disk_mesh(h / radius)
    mesh = _finalize(2, verts * radius, tris)
    curvature = {int(v): 1.0 / radius for v in mesh.boundary_vertices}
    geo = BoundaryGeometry(
        curvature_at_vertex=curvature, max_curvature=1.0 / radius,
        max_location=(radius, 0.0),
    )
    return mesh, geo


def _ellipse_mesh(a: float, b: float, h: float):
    verts, tris, rim = _unit_disk_mesh(h / max(a, b))
    scaled = verts * np.array([a, b])
    mesh = _finalize(2, scaled, tris)
    curvature = {}
    for v in mesh.boundary_vertices:
        x, y = mesh.vertices[v]
        theta = math.atan2(y / b, x / a)
        denom = (a * a * math.sin(theta) ** 2 + b * b * math.cos(theta) ** 2) ** 1.5
        curvature[int(v)] = a * b / denom
    vmax = max(curvature, key=curvature.get)
    geo = BoundaryGeometry(
        curvature_at_vertex=curvature, max_curvature=curvature[vmax],
        max_location=tuple(float(c) for c in mesh.vertices[vmax]),
    )
    return mesh, geo


def generate(shape: Shape, h: float) -> tuple[Mesh, BoundaryGeometry]:
    """Mesh the given shape with target element size h.

    Guarantees a conforming mesh with maximum element diameter <= 1.5 h and
    analytic boundary curvature sampled at the boundary vertices.
    """
    dims = {
        Interval: lambda s: (s.length,),
        Rectangle: lambda s: (s.width, s.height),
        Disk: lambda s: (s.radius,),
        Ellipse: lambda s: (s.semi_x, s.semi_y),
    }[type(shape)](shape)
    if min(dims) <= 0:
        raise ValueError(f"degenerate shape parameters: {shape}")
    if not 0 < h <= min(dims) / 4:
        raise ValueError(f"element size h={h} must lie in (0, {min(dims) / 4}]")

    if isinstance(shape, Interval):
        return _interval_mesh(shape.length, h)
    if isinstance(shape, Rectangle):
        return _rectangle_mesh(shape.width, shape.height, h)
    if isinstance(shape, Disk):
        return _disk_mesh(shape.radius, h)
    return _ellipse_mesh(shape.semi_x, shape.semi_y, h)


def export_mesh(mesh: Mesh) -> str:
    """Serialize to the line-oriented text format (17 significant digits)."""
    lines = [f"mesh {mesh.dim} {len(mesh.vertices)} {len(mesh.elements)}"]
    for v in mesh.vertices:
        lines.append("v " + " ".join(f"{c:.17g}" for c in v))
    for e in mesh.elements:
        lines.append("e " + " ".join(str(int(i)) for i in e))
    return "\n".join(lines) + "\n"


def import_mesh(text: str) -> Mesh:
    """Parse the text format; recomputes measures and extracts the boundary.

    Grammar: optional '#' comments and blank lines; a header line
    ``mesh <dim> <nv> <ne>``; nv lines ``v x [y]``; ne lines ``e i j [k]``
    with 0-based vertex indices.  Element orientation is normalized
    (ascending in 1D, counterclockwise in 2D).
    """
    header = None
    vertices: list[list[float]] = []
    elements: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if parts[0] != "mesh" or len(parts) != 4:
                raise MeshFormatError("expected header 'mesh <dim> <nv> <ne>'", lineno)
            try:
                dim, nv, ne = (int(p) for p in parts[1:])
            except ValueError:
                raise MeshFormatError("header fields must be integers", lineno) from None
            if dim not in (1, 2) or nv < dim + 1 or ne < 1:
                raise MeshFormatError(f"unsupported header values {parts[1:]}", lineno)
            header = (dim, nv, ne)
        elif parts[0] == "v":
            if len(parts) != 1 + header[0]:
                raise MeshFormatError(
                    f"vertex line needs {header[0]} coordinate(s)", lineno)
            try:
                vertices.append([float(p) for p in parts[1:]])
            except ValueError:
                raise MeshFormatError("bad vertex coordinate", lineno) from None
        elif parts[0] == "e":
            if len(parts) != 2 + header[0]:
                raise MeshFormatError(
                    f"element line needs {header[0] + 1} indices", lineno)
            try:
                elements.append([int(p) for p in parts[1:]])
            except ValueError:
                raise MeshFormatError("bad element index", lineno) from None
        else:
            raise MeshFormatError(f"unknown record {parts[0]!r}", lineno)
    if header is None:
        raise MeshFormatError("empty mesh text")
    dim, nv, ne = header
    if len(vertices) != nv or len(elements) != ne:
        raise MeshFormatError(
            f"counts do not match header: got {len(vertices)} vertices "
            f"and {len(elements)} elements, expected {nv} and {ne}")
    return _finalize(dim, np.asarray(vertices), np.asarray(elements))
