"""Structured conforming triangulations of the unit square.

Meshes are immutable: tagging operations return a new mesh sharing the
geometry arrays. Facets are stored with canonically ordered vertex pairs
(lower index first) and carry a fixed unit normal; which of the one or two
adjacent triangles sees that normal as outward is a per-triangle sign,
recovered with :func:`outward_sign`.
"""

from dataclasses import dataclass, field, replace

import numpy as np

# boundary tag codes for TriangleMesh.boundary_tags
UNTAGGED = 0
GAMMA0 = 1
GAMMA1 = 2

SIDES = ("left", "right", "bottom", "top")


class MeshError(ValueError):
    pass


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TriangleMesh:
    """Conforming triangulation of [0,1]^2 with boundary and region tags.

    vertices      (nv, 2) float  coordinates
    triangles     (nt, 3) int    vertex indices, counterclockwise
    facets        (nf, 2) int    vertex pairs, lower index first, rows sorted
    facet_cells   (nf, 2) int    adjacent triangles, -1 pad for boundary
    cell_facets   (nt, 3) int    facet opposite local vertex i
    facet_normals (nf, 2) float  unit normal, fixed orientation per facet
    boundary_tags (nf,)   int    UNTAGGED / GAMMA0 / GAMMA1
    regions       dict           region id -> (nt,) bool mask
    """

    vertices: np.ndarray
    triangles: np.ndarray
    facets: np.ndarray
    facet_cells: np.ndarray
    cell_facets: np.ndarray
    facet_normals: np.ndarray
    boundary_tags: np.ndarray
    regions: dict = field(default_factory=dict)

    def __post_init__(self):
        v, t = self.vertices, self.triangles
        e1 = v[t[:, 1]] - v[t[:, 0]]
        e2 = v[t[:, 2]] - v[t[:, 0]]
        area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if not np.all(area2 > 0):
            raise MeshError("negatively oriented or degenerate triangle")
        if len(v) - len(self.facets) + len(t) != 1:
            raise MeshError("Euler relation V - E + T = 1 violated")
        counts = np.sum(self.facet_cells >= 0, axis=1)
        on_bdry = self.boundary_tags != UNTAGGED
        if not np.all(counts[on_bdry] == 1) or not np.all(
            (counts == 1) | (counts == 2)
        ):
            raise MeshError("facet adjacency inconsistent with tags")

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_facets(self):
        return len(self.facets)

    @property
    def facet_lengths(self):
        d = self.vertices[self.facets[:, 1]] - self.vertices[self.facets[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def h_facet(self):
        """Local facet weight h_F = facet length."""
        return self.facet_lengths

    @property
    def h_cell(self):
        """Local cell weight h_K = diameter (longest edge)."""
        return np.max(self.facet_lengths[self.cell_facets], axis=1)

    @property
    def h(self):
        """Global mesh size: max triangle diameter."""
        return float(np.max(self.h_cell))

    @property
    def cell_areas(self):
        v, t = self.vertices, self.triangles
        e1 = v[t[:, 1]] - v[t[:, 0]]
        e2 = v[t[:, 2]] - v[t[:, 0]]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def barycenters(self):
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def interior_facets(self):
        return np.nonzero(self.facet_cells[:, 1] >= 0)[0]

    @property
    def boundary_facets(self):
        return np.nonzero(self.facet_cells[:, 1] < 0)[0]

    def facets_tagged(self, tag):
        return np.nonzero(self.boundary_tags == tag)[0]

    def region(self, tag):
        if tag not in self.regions:
            raise MeshError(f"region {tag!r} not tagged on this mesh")
        return self.regions[tag]

    def outward_sign(self, facet_ids, cell_ids):
        """+1 where facet_normals[f] is outward for cell c, else -1."""
        mid = 0.5 * (
            self.vertices[self.facets[facet_ids, 0]]
            + self.vertices[self.facets[facet_ids, 1]]
        )
        toward = mid - self.barycenters[cell_ids]
        dot = np.sum(toward * self.facet_normals[facet_ids], axis=-1)
        return np.where(dot > 0, 1.0, -1.0)


def build_structured_mesh(nx, ny):
    """Triangulate [0,1]^2 with nx*ny cells, each split along the
    lower-left to upper-right diagonal (fixed, for reproducible fields)."""
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be positive")
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = np.empty((2 * nx * ny, 3), dtype=np.int64)
    k = 0
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris[k] = (v00, v10, v11)
            tris[k + 1] = (v00, v11, v01)
            k += 2

    # deduplicate edges; local facet i is opposite local vertex i
    raw = np.concatenate(
        [tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]], axis=0
    )
    raw.sort(axis=1)
    facets, inverse = np.unique(raw, axis=0, return_inverse=True)
    nt = len(tris)
    cell_facets = np.column_stack(
        [inverse[:nt], inverse[nt : 2 * nt], inverse[2 * nt :]]
    )

    facet_cells = np.full((len(facets), 2), -1, dtype=np.int64)
    for c in range(nt):
        for f in cell_facets[c]:
            if facet_cells[f, 0] < 0:
                facet_cells[f, 0] = c
            else:
                facet_cells[f, 1] = c

    tang = vertices[facets[:, 1]] - vertices[facets[:, 0]]
    lengths = np.hypot(tang[:, 0], tang[:, 1])
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]

    return TriangleMesh(
        vertices=_frozen(vertices),
        triangles=_frozen(tris),
        facets=_frozen(facets),
        facet_cells=_frozen(facet_cells),
        cell_facets=_frozen(cell_facets),
        facet_normals=_frozen(normals),
        boundary_tags=_frozen(np.zeros(len(facets), dtype=np.int64)),
    )


def _on_side(mesh, facet_ids, side):
    tol = 1e-12
    p = mesh.vertices[mesh.facets[facet_ids]]  # (n, 2, 2)
    if side == "left":
        return np.all(np.abs(p[:, :, 0]) < tol, axis=1)
    if side == "right":
        return np.all(np.abs(p[:, :, 0] - 1.0) < tol, axis=1)
    if side == "bottom":
        return np.all(np.abs(p[:, :, 1]) < tol, axis=1)
    if side == "top":
        return np.all(np.abs(p[:, :, 1] - 1.0) < tol, axis=1)
    raise MeshError(f"unknown side {side!r}")


def tag_boundary(mesh, gamma0):
    """Tag boundary facets on the listed sides as Gamma0, the rest of the
    boundary as Gamma1. gamma0 may be empty (pure unique continuation)."""
    gamma0 = set(gamma0)
    unknown = gamma0 - set(SIDES)
    if unknown:
        raise MeshError(f"unknown sides: {sorted(unknown)}")
    tags = np.zeros(mesh.num_facets, dtype=np.int64)
    bdry = mesh.boundary_facets
    tags[bdry] = GAMMA1
    for side in gamma0:
        sel = bdry[_on_side(mesh, bdry, side)]
        tags[sel] = GAMMA0
    return replace(mesh, boundary_tags=_frozen(tags))


def tag_region(mesh, box, tag):
    """Tag triangles whose barycenter lies in box = (xmin, xmax, ymin, ymax).

    The barycenter rule is refinement-stable and, for boxes aligned with
    mesh lines, coincides with exact containment.
    """
    xmin, xmax, ymin, ymax = map(float, box)
    if not (0.0 <= xmin <= xmax <= 1.0 and 0.0 <= ymin <= ymax <= 1.0):
        raise MeshError(f"box {box} not inside [0,1]^2")
    b = mesh.barycenters
    mask = (
        (b[:, 0] >= xmin) & (b[:, 0] <= xmax)
        & (b[:, 1] >= ymin) & (b[:, 1] <= ymax)
    )
    regions = dict(mesh.regions)
    regions[tag] = _frozen(mask)
    return replace(mesh, regions=regions)


def dump_mesh(mesh, path):
    """Plain-text dump: vertex, triangle and tagged-facet lines."""
    tagname = {GAMMA0: "gamma0", GAMMA1: "gamma1"}
    with open(path, "w") as out:
        out.write(
            f"# mesh {mesh.num_vertices} vertices "
            f"{mesh.num_triangles} triangles {mesh.num_facets} facets\n"
        )
        for x, y in mesh.vertices:
            out.write(f"v {float(x)!r} {float(y)!r}\n")
        names = sorted(mesh.regions)
        for c, (a, b, d) in enumerate(mesh.triangles):
            marks = [name for name in names if mesh.regions[name][c]]
            out.write(f"t {a} {b} {d}" + "".join(f" {m}" for m in marks) + "\n")
        for f in np.nonzero(mesh.boundary_tags != UNTAGGED)[0]:
            a, b = mesh.facets[f]
            out.write(f"f {a} {b} {tagname[mesh.boundary_tags[f]]}\n")
