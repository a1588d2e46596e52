"""Polygonal meshes: validated container, text I/O, generators, and the
single-polygon catalog used by the stability audit.

Meshes are bit-reproducible from their seed: generators draw from the
package's own xorshift stream (see rng), never from numpy's global state,
and the text format round-trips exactly through repr floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    MeshFormatError,
    MeshGenerationError,
    MeshIndexError,
    MeshTopologyError,
)
from .geometry import centroid, diameter, edge_lengths_normals, is_simple, signed_area
from .rng import XorShift

# welding grid for Voronoi vertices; shared corners computed from different
# cells agree only to rounding, so coordinates snap to this resolution
WELD_RESOLUTION = 1e-9


@dataclass(frozen=True)
class PolyMesh:
    """Immutable polygonal tessellation with validated topology."""

    vertices: np.ndarray
    cells: tuple
    boundary_vertices: frozenset

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        cells = tuple(tuple(int(i) for i in cell) for cell in self.cells)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "boundary_vertices",
                           frozenset(int(i) for i in self.boundary_vertices))
        self._validate()

    def _validate(self):
        nv = len(self.vertices)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshFormatError("vertices must be an (n, 2) array")
        edge_count: dict = {}
        for ci, cell in enumerate(self.cells):
            if len(cell) < 3:
                raise MeshTopologyError(f"cell {ci} has fewer than 3 vertices")
            for i in cell:
                if not 0 <= i < nv:
                    raise MeshIndexError(
                        f"cell {ci} references vertex {i}, but mesh has {nv} vertices"
                    )
            if len(set(cell)) != len(cell):
                raise MeshTopologyError(f"cell {ci} repeats a vertex index")
            pts = self.vertices[list(cell)]
            if signed_area(pts) <= 0.0:
                raise MeshTopologyError(
                    f"cell {ci} is clockwise or degenerate (signed area <= 0)"
                )
            if not is_simple(pts):
                raise MeshTopologyError(f"cell {ci} is self-intersecting")
            for k in range(len(cell)):
                a, b = cell[k], cell[(k + 1) % len(cell)]
                key = (a, b) if a < b else (b, a)
                edge_count.setdefault(key, []).append(1 if a < b else -1)
        derived_boundary = set()
        for (a, b), orients in edge_count.items():
            if len(orients) > 2:
                raise MeshTopologyError(
                    f"edge ({a}, {b}) is shared by {len(orients)} cells"
                )
            if len(orients) == 2 and orients[0] == orients[1]:
                raise MeshTopologyError(
                    f"edge ({a}, {b}) is traversed twice in the same direction"
                )
            if len(orients) == 1:
                derived_boundary.update((a, b))
        if derived_boundary != self.boundary_vertices:
            missing = sorted(derived_boundary - self.boundary_vertices)[:5]
            extra = sorted(self.boundary_vertices - derived_boundary)[:5]
            raise MeshTopologyError(
                f"boundary vertex set inconsistent with cell edges "
                f"(missing {missing}, extra {extra})"
            )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_points(self, i: int) -> np.ndarray:
        return self.vertices[list(self.cells[i])]

    def edges(self) -> set:
        out = set()
        for cell in self.cells:
            for k in range(len(cell)):
                a, b = cell[k], cell[(k + 1) % len(cell)]
                out.add((a, b) if a < b else (b, a))
        return out


@dataclass(frozen=True)
class MeshQualityReport:
    """Per-cell diameters and edge-to-diameter ratios."""

    cell_diameters: np.ndarray
    edge_ratios: np.ndarray
    h: float
    kappa: float


@dataclass(frozen=True)
class CatalogPolygon:
    """One named test polygon of the audit catalog."""

    name: str
    vertices: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


# ---------------------------------------------------------------------------
# text format


def read_mesh(path) -> PolyMesh:
    """Read the `vem-mesh 1` text format and validate all invariants.

    Raises MeshFormatError with a line number on malformed input,
    MeshIndexError on out-of-range vertex references, MeshTopologyError
    on orientation or edge-sharing violations.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    def tokens(ln):
        if ln >= len(lines):
            raise MeshFormatError(f"line {ln + 1}: unexpected end of file")
        return lines[ln].split()

    tok = tokens(0)
    if tok != ["vem-mesh", "1"]:
        raise MeshFormatError(f"line 1: expected header 'vem-mesh 1', got {lines[0]!r}")
    ln = 1

    def section(name):
        nonlocal ln
        tok = tokens(ln)
        if len(tok) != 2 or tok[0] != name:
            raise MeshFormatError(f"line {ln + 1}: expected '{name} <count>'")
        try:
            count = int(tok[1])
        except ValueError:
            raise MeshFormatError(f"line {ln + 1}: bad count {tok[1]!r}") from None
        if count < 0:
            raise MeshFormatError(f"line {ln + 1}: negative count")
        ln += 1
        return count

    nv = section("vertices")
    verts = np.empty((nv, 2))
    for i in range(nv):
        tok = tokens(ln)
        if len(tok) != 2:
            raise MeshFormatError(f"line {ln + 1}: expected 'x y'")
        try:
            verts[i] = [float(tok[0]), float(tok[1])]
        except ValueError:
            raise MeshFormatError(f"line {ln + 1}: bad coordinate") from None
        ln += 1

    nc = section("cells")
    cells = []
    for _ in range(nc):
        tok = tokens(ln)
        try:
            nums = [int(t) for t in tok]
        except ValueError:
            raise MeshFormatError(f"line {ln + 1}: bad vertex index") from None
        if not nums or len(nums) != nums[0] + 1:
            raise MeshFormatError(
                f"line {ln + 1}: expected 'k' followed by k vertex indices"
            )
        cells.append(tuple(nums[1:]))
        ln += 1

    nb = section("boundary")
    boundary = set()
    for _ in range(nb):
        tok = tokens(ln)
        if len(tok) != 1:
            raise MeshFormatError(f"line {ln + 1}: expected one vertex index")
        try:
            boundary.add(int(tok[0]))
        except ValueError:
            raise MeshFormatError(f"line {ln + 1}: bad vertex index") from None
        ln += 1

    for i in boundary:
        if not 0 <= i < nv:
            raise MeshIndexError(f"boundary vertex {i} out of range (mesh has {nv})")
    return PolyMesh(verts, tuple(cells), frozenset(boundary))


def write_mesh(mesh: PolyMesh, path) -> None:
    """Write the canonical text form; read_mesh(write_mesh(m)) is identity."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vem-mesh 1\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            # repr of the Python float is the shortest digits that round-trip
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"cells {mesh.n_cells}\n")
        for cell in mesh.cells:
            fh.write(" ".join([str(len(cell))] + [str(i) for i in cell]) + "\n")
        bnd = sorted(mesh.boundary_vertices)
        fh.write(f"boundary {len(bnd)}\n")
        for i in bnd:
            fh.write(f"{i}\n")


# ---------------------------------------------------------------------------
# generators


def generate_distorted_grid(n: int, delta: float = 0.3, seed: int = 42) -> PolyMesh:
    """n x n quadrilateral mesh of the unit square with jittered interior.

    Each interior vertex moves by independent uniform offsets in
    [-delta/n, delta/n] per coordinate (x drawn before y, vertices in row
    major order); boundary vertices stay put. delta must lie in [0, 0.5).
    """
    if n < 1:
        raise MeshGenerationError(f"need n >= 1 cells per side, got {n}")
    if not 0.0 <= delta < 0.5:
        raise MeshGenerationError(f"delta must lie in [0, 0.5), got {delta}")
    rng = XorShift(seed)
    xs = np.linspace(0.0, 1.0, n + 1)
    base = np.array([[x, y] for y in xs for x in xs])
    cells = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            cells.append((a, a + 1, a + n + 2, a + n + 1))
    boundary = set()
    for i in range(n + 1):
        boundary |= {i, n * (n + 1) + i, i * (n + 1), i * (n + 1) + n}

    for attempt in range(20):
        verts = base.copy()
        for j in range(1, n):
            for i in range(1, n):
                k = j * (n + 1) + i
                verts[k, 0] += rng.uniform(-delta / n, delta / n)
                verts[k, 1] += rng.uniform(-delta / n, delta / n)
        if all(signed_area(verts[list(c)]) > 0.0 for c in cells):
            mesh = PolyMesh(verts, tuple(cells), frozenset(boundary))
            _check_unit_area(mesh)
            return mesh
    raise MeshGenerationError(
        f"distorted grid kept inverting cells after 20 attempts (delta={delta})"
    )


def _halfplane_clip(poly, nx, ny, c):
    # keep the region nx*x + ny*y <= c (Sutherland-Hodgman)
    out = []
    m = len(poly)
    for i in range(m):
        P = poly[i - 1]
        Q = poly[i]
        fp = nx * P[0] + ny * P[1] - c
        fq = nx * Q[0] + ny * Q[1] - c
        if fq <= 0.0:
            if fp > 0.0:
                t = fp / (fp - fq)
                out.append(P + t * (Q - P))
            out.append(Q)
        elif fp < 0.0:
            t = fp / (fp - fq)
            out.append(P + t * (Q - P))
    return out


_UNIT_SQUARE = [np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                np.array([1.0, 1.0]), np.array([0.0, 1.0])]


def _voronoi_cells(seeds: np.ndarray):
    cells = []
    for i, s in enumerate(seeds):
        poly = list(_UNIT_SQUARE)
        for j, t in enumerate(seeds):
            if j == i:
                continue
            d = t - s
            m = 0.5 * (s + t)
            poly = _halfplane_clip(poly, d[0], d[1], d[0] * m[0] + d[1] * m[1])
            if len(poly) < 3:
                raise MeshGenerationError(
                    f"seed {i} produced an empty Voronoi cell"
                )
        cells.append(np.array(poly))
    return cells


def _weld(float_cells):
    # integer scale keeps 0 and 1 exactly representable after key / scale,
    # so the boundary test below can compare against 0.0 and 1.0 directly
    scale = round(1.0 / WELD_RESOLUTION)
    index: dict = {}
    verts = []
    cells = []
    for poly in float_cells:
        keys = [(int(round(p[0] * scale)), int(round(p[1] * scale))) for p in poly]
        loop = []
        for key in keys:
            if key not in index:
                index[key] = len(verts)
                verts.append((key[0] / scale, key[1] / scale))
            k = index[key]
            if not loop or loop[-1] != k:
                loop.append(k)
        while len(loop) > 1 and loop[0] == loop[-1]:
            loop.pop()
        if len(loop) < 3:
            raise MeshGenerationError("a Voronoi cell collapsed during welding")
        cells.append(tuple(loop))
    return np.array(verts), cells


def generate_voronoi(n_seeds: int, lloyd_iters: int = 0, seed: int = 0,
                     distortion: float = 0.0, points=None) -> PolyMesh:
    """Bounded Voronoi mesh of the unit square.

    Cells come from clipping the square against the perpendicular bisector
    of every seed pair (quadratic in n_seeds, fine at experiment scale),
    optionally relaxed by Lloyd centroid sweeps, then distorted by moving
    each interior vertex a fraction of its shortest incident edge in a
    random direction. Inverted cells trigger halved displacements; repeated
    failure raises MeshGenerationError.

    Passing `points` (an (n, 2) array inside the open unit square) uses
    those seeds verbatim instead of drawing them, which pins the cell
    layout for reproducible fixtures; n_seeds must match its length.
    """
    if n_seeds < 1:
        raise MeshGenerationError(f"need at least one seed, got {n_seeds}")
    if lloyd_iters < 0:
        raise MeshGenerationError("lloyd_iters must be nonnegative")
    if not 0.0 <= distortion < 1.0:
        raise MeshGenerationError(f"distortion must lie in [0, 1), got {distortion}")
    rng = XorShift(seed)
    if points is not None:
        seeds = np.asarray(points, dtype=float)
        if seeds.shape != (n_seeds, 2):
            raise MeshGenerationError(
                f"points must have shape ({n_seeds}, 2), got {seeds.shape}")
        if not (np.all(seeds > 0.0) and np.all(seeds < 1.0)):
            raise MeshGenerationError("explicit seeds must lie inside the unit square")
        if _closest_pair_too_close(seeds) is not None:
            raise MeshGenerationError("explicit seeds are closer than 1e-6")
    else:
        seeds = np.array([[rng.random(), rng.random()] for _ in range(n_seeds)])
        for _ in range(100):
            close = _closest_pair_too_close(seeds)
            if close is None:
                break
            seeds[close] = [rng.random(), rng.random()]
        else:
            raise MeshGenerationError("could not separate duplicate seeds")

    float_cells = _voronoi_cells(seeds)
    for _ in range(lloyd_iters):
        seeds = np.array([centroid(c) for c in float_cells])
        float_cells = _voronoi_cells(seeds)

    verts, cells = _weld(float_cells)
    boundary = {
        i for i, (x, y) in enumerate(verts)
        if x == 0.0 or x == 1.0 or y == 0.0 or y == 1.0
    }

    if distortion > 0.0:
        min_edge = np.full(len(verts), np.inf)
        for cell in cells:
            pts = verts[list(cell)]
            for k in range(len(cell)):
                L = float(np.hypot(*(pts[(k + 1) % len(cell)] - pts[k])))
                min_edge[cell[k]] = min(min_edge[cell[k]], L)
                min_edge[cell[(k + 1) % len(cell)]] = min(
                    min_edge[cell[(k + 1) % len(cell)]], L)
        moves = np.zeros_like(verts)
        for i in range(len(verts)):
            if i in boundary:
                continue
            phi = 2.0 * math.pi * rng.random()
            moves[i] = distortion * min_edge[i] * np.array([math.cos(phi),
                                                            math.sin(phi)])
        factor = 1.0
        for _ in range(20):
            moved = verts + factor * moves
            ok = all(
                signed_area(moved[list(c)]) > 0.0 and is_simple(moved[list(c)])
                for c in cells
            )
            if ok:
                verts = moved
                break
            factor *= 0.5
        else:
            raise MeshGenerationError(
                "vertex distortion kept inverting cells after 20 halvings"
            )

    mesh = PolyMesh(verts, tuple(cells), frozenset(boundary))
    _check_unit_area(mesh)
    return mesh


def _closest_pair_too_close(seeds):
    n = len(seeds)
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(seeds[i] - seeds[j])) < 1e-6:
                return j
    return None


def _check_unit_area(mesh: PolyMesh) -> None:
    total = sum(signed_area(mesh.cell_points(i)) for i in range(mesh.n_cells))
    if abs(total - 1.0) > 1e-12:
        raise MeshGenerationError(
            f"cell areas sum to {total!r}, expected 1 within 1e-12"
        )


# ---------------------------------------------------------------------------
# audit catalog


def _regular_polygon(n: int) -> np.ndarray:
    th = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(th), np.sin(th)])


def _star_polygon(n: int) -> np.ndarray:
    th = 2.0 * np.pi * np.arange(n) / n
    r = np.where(np.arange(n) % 2 == 0, 1.0, 0.45)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def _concave_polygon(n: int) -> np.ndarray:
    # pull the first vertex to 0.3 of its radius; for the square the chord
    # between its neighbors passes through the center, so pull through to
    # the other side to actually create a reflex angle
    V = _regular_polygon(n)
    V[0] *= 0.3 if n >= 5 else -0.3
    return V


def _irregular_polygon(n: int, seed: int = 1234) -> np.ndarray:
    rng = XorShift(seed + n)
    th = np.empty(n)
    r = np.empty(n)
    for i in range(n):
        th[i] = 2.0 * np.pi * i / n + 0.3 * (2.0 * np.pi / n) * (rng.random() - 0.5)
        r[i] = 1.0 + 0.25 * (2.0 * rng.random() - 1.0)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def _hanging_polygon(n: int) -> np.ndarray:
    # split the first few edges of a smaller irregular polygon at their
    # midpoints, leaving collinear vertex triples (mesh hanging nodes)
    n_split = max(2, math.ceil(n / 4))
    base = _irregular_polygon(n - n_split, seed=77)
    out = []
    for i in range(len(base)):
        out.append(base[i])
        if i < n_split:
            out.append(0.5 * (base[i] + base[(i + 1) % len(base)]))
    return np.array(out)


def _collapsing_polygon(n: int) -> np.ndarray:
    V = _irregular_polygon(n, seed=99)
    d = diameter(V)
    mid = 0.5 * (V[0] + V[1])
    direction = (V[1] - V[0]) / np.hypot(*(V[1] - V[0]))
    V[0] = mid - 0.5e-3 * d * direction
    V[1] = mid + 0.5e-3 * d * direction
    return V


_CATALOG_RECIPES = {
    3: ("irregular", _irregular_polygon),
    4: ("concave", _concave_polygon),
    5: ("regular", _regular_polygon),
    6: ("hanging-nodes", _hanging_polygon),
    7: ("regular", _regular_polygon),
    8: ("star", _star_polygon),
    9: ("hanging-nodes", _hanging_polygon),
    10: ("regular", _regular_polygon),
    11: ("concave", _concave_polygon),
    12: ("star", _star_polygon),
    13: ("hanging-nodes", _hanging_polygon),
    14: ("irregular", _irregular_polygon),
    15: ("regular", _regular_polygon),
    16: ("hanging-nodes", _hanging_polygon),
    17: ("concave", _concave_polygon),
    18: ("collapsing-edge", _collapsing_polygon),
    19: ("regular", _regular_polygon),
    20: ("star", _star_polygon),
}


def catalog_polygons() -> list:
    """The 18 audit polygons, one per vertex count 3..20.

    Shapes cover regular, irregular, star, concave, hanging-node, and
    collapsing-edge geometry; all are simple and counterclockwise and are
    bit-reproducible (jitter comes from fixed xorshift seeds).
    """
    out = []
    for n in range(3, 21):
        name, recipe = _CATALOG_RECIPES[n]
        V = recipe(n)
        out.append(CatalogPolygon(name, V))
    return out


def quality_report(mesh: PolyMesh) -> MeshQualityReport:
    """Cell diameters, min-edge-to-diameter ratios, and their extremes."""
    diams = np.empty(mesh.n_cells)
    ratios = np.empty(mesh.n_cells)
    for i in range(mesh.n_cells):
        pts = mesh.cell_points(i)
        diams[i] = diameter(pts)
        _, lengths, _n = edge_lengths_normals(pts)
        ratios[i] = lengths.min() / diams[i]
    return MeshQualityReport(diams, ratios, float(diams.max()),
                             float(ratios.min()))
