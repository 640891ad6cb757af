"""Finite element spaces: conforming Lagrange P_k and Crouzeix-Raviart CR1.

Both families are nodal. Lagrange nodes are equidistant in barycentric
coordinates; the CR1 dof is the value at the edge midpoint (the one-point
Gauss node of the facet), which makes its basis the facet bubbles
B_F = 1 - 2 lambda_{z_F} with unit trace on F and zero mean on the other
facets of the support triangles.

Constraints are applied by eliminating dofs from the global numbering;
``cell_dofs`` carries -1 where a local dof was eliminated and assembly
skips those entries. The numbering convention that makes traces of shared
edge dofs match for k >= 3: per facet, edge dofs run along the canonical
facet direction (lower vertex index to higher), and each cell maps its
local edge nodes into those slots with a flip when it traverses the facet
backwards.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mesh import GAMMA0, GAMMA1, TriangleMesh

MAX_DEGREE = 4


@dataclass(frozen=True)
class Lagrange:
    degree: int


@dataclass(frozen=True)
class CrouzeixRaviart:
    degree: int = 1


class Constraint(Enum):
    NONE = "none"
    ZERO_ON_GAMMA0 = "zero_on_gamma0"
    ZERO_ON_GAMMA1 = "zero_on_gamma1"
    ZERO_ON_BOUNDARY = "zero_on_boundary"
    CR_ZERO_MEAN_OFF_GAMMA0 = "cr_zero_mean_off_gamma0"
    CR_ZERO_MEAN_ALL = "cr_zero_mean_all"


_LAGRANGE_CONSTRAINTS = {
    Constraint.NONE,
    Constraint.ZERO_ON_GAMMA0,
    Constraint.ZERO_ON_GAMMA1,
    Constraint.ZERO_ON_BOUNDARY,
}
_CR_CONSTRAINTS = {
    Constraint.NONE,
    Constraint.CR_ZERO_MEAN_OFF_GAMMA0,
    Constraint.CR_ZERO_MEAN_ALL,
}


class _ReferenceElement:
    """Nodal basis on the reference triangle spanned by monomials x^i y^j,
    i + j <= degree, determined by Lagrange conditions at ``nodes_bary``.

    Covers both families: Lagrange nodes give the standard basis, edge
    midpoints with degree 1 give the CR1 bubbles.
    """

    def __init__(self, nodes_bary, degree):
        self.nodes_bary = np.asarray(nodes_bary, dtype=float)
        self.degree = degree
        self.exponents = [
            (i, j)
            for total in range(degree + 1)
            for i in range(total, -1, -1)
            for j in (total - i,)
        ]
        xy = self.nodes_bary[:, 1:]
        V = self._monomials(xy)
        self.coeffs = np.linalg.inv(V)  # column a = coefficients of basis a

    @property
    def ndofs(self):
        return len(self.nodes_bary)

    def _monomials(self, xy, dx=0, dy=0):
        x, y = xy[:, 0], xy[:, 1]
        cols = []
        for i, j in self.exponents:
            if i < dx or j < dy:
                cols.append(np.zeros_like(x))
                continue
            c = 1.0
            for d in range(dx):
                c *= i - d
            for d in range(dy):
                c *= j - d
            cols.append(c * x ** (i - dx) * y ** (j - dy))
        return np.column_stack(cols)

    def _tabulate(self, bary, dx=0, dy=0):
        bary = np.atleast_2d(np.asarray(bary, dtype=float))
        return self._monomials(bary[:, 1:], dx, dy) @ self.coeffs

    def values(self, bary):
        """(npts, ndofs) basis values at barycentric points."""
        return self._tabulate(bary)

    def grads(self, bary):
        """(npts, ndofs, 2) reference-coordinate gradients."""
        return np.stack(
            [self._tabulate(bary, dx=1), self._tabulate(bary, dy=1)], axis=-1
        )

    def hessians(self, bary):
        """(npts, ndofs, 2, 2) reference-coordinate second derivatives."""
        hxx = self._tabulate(bary, dx=2)
        hxy = self._tabulate(bary, dx=1, dy=1)
        hyy = self._tabulate(bary, dy=2)
        h = np.empty(hxx.shape + (2, 2))
        h[..., 0, 0] = hxx
        h[..., 0, 1] = hxy
        h[..., 1, 0] = hxy
        h[..., 1, 1] = hyy
        return h


def _lagrange_ref_nodes(k):
    nodes = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    for i in range(3):  # edge opposite vertex i, from vertex i+1 to i+2
        p, q = (i + 1) % 3, (i + 2) % 3
        for t in range(1, k):
            lam = [0.0, 0.0, 0.0]
            lam[p] = 1.0 - t / k
            lam[q] = t / k
            nodes.append(tuple(lam))
    for a in range(k - 2, 0, -1):
        for b in range(k - 1 - a, 0, -1):
            c = k - a - b
            nodes.append((a / k, b / k, c / k))
    return np.array(nodes)


_CR_MIDPOINTS = np.array(
    [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]
)


@dataclass(frozen=True)
class FiniteElementSpace:
    """Global dof map plus reference element over a mesh.

    cell_dofs   (nt, nloc) int   global dof per local dof, -1 if eliminated
    dof_coords  (ndofs, 2) float nodal locations of the surviving dofs
    """

    mesh: TriangleMesh
    family: object
    constraint: Constraint
    ndofs: int
    cell_dofs: np.ndarray
    dof_coords: np.ndarray
    ref: _ReferenceElement

    @property
    def degree(self):
        return self.family.degree

    @property
    def is_conforming(self):
        return isinstance(self.family, Lagrange)


@dataclass(frozen=True)
class FeFunction:
    """Coefficient vector over a space, evaluable per element."""

    space: FiniteElementSpace
    coeffs: np.ndarray

    def __post_init__(self):
        if len(self.coeffs) != self.space.ndofs:
            raise ValueError("coefficient length != space dimension")

    def cell_coeffs(self, cells=None):
        """(ncells, nloc) local coefficients; eliminated dofs read as 0."""
        padded = np.append(self.coeffs, 0.0)
        dofs = self.space.cell_dofs if cells is None else self.space.cell_dofs[cells]
        return padded[dofs]

    def eval(self, cells, bary):
        """Values at barycentric points (npts, 3) on each listed cell."""
        vals = self.space.ref.values(bary)  # (npts, nloc)
        return self.cell_coeffs(cells) @ vals.T  # (ncells, npts)


def _facet_dof_ids(mesh, facet_ids, k, nv):
    """Global ids of the vertex and edge dofs living on the given facets."""
    ids = [mesh.facets[facet_ids].ravel()]
    if k >= 2:
        base = nv + facet_ids[:, None] * (k - 1) + np.arange(k - 1)[None, :]
        ids.append(base.ravel())
    return np.unique(np.concatenate(ids))


def _build_lagrange(mesh, k, constraint):
    nv, nf, nt = mesh.num_vertices, mesh.num_facets, mesh.num_triangles
    n_edge, n_int = k - 1, (k - 1) * (k - 2) // 2
    nloc = 3 + 3 * n_edge + n_int
    tris = mesh.triangles

    cell_dofs = np.empty((nt, nloc), dtype=np.int64)
    cell_dofs[:, :3] = tris
    for i in range(3):
        g = mesh.cell_facets[:, i]
        forward = tris[:, (i + 1) % 3] == mesh.facets[g, 0]
        for t in range(n_edge):
            slot = np.where(forward, t, n_edge - 1 - t)
            cell_dofs[:, 3 + i * n_edge + t] = nv + g * n_edge + slot
    if n_int:
        base = nv + nf * n_edge
        cell_dofs[:, 3 + 3 * n_edge :] = (
            base + n_int * np.arange(nt)[:, None] + np.arange(n_int)[None, :]
        )

    n_total = nv + nf * n_edge + nt * n_int
    coords = np.empty((n_total, 2))
    coords[:nv] = mesh.vertices
    if n_edge:
        a = mesh.vertices[mesh.facets[:, 0]]
        b = mesh.vertices[mesh.facets[:, 1]]
        for t in range(n_edge):
            s = (t + 1) / k
            coords[nv + t : nv + nf * n_edge : n_edge] = a + s * (b - a)
    if n_int:
        ref_int = _lagrange_ref_nodes(k)[3 + 3 * n_edge :]
        pts = np.einsum("qi,tid->tqd", ref_int, mesh.vertices[tris])
        coords[nv + nf * n_edge :] = pts.reshape(-1, 2)

    drop = np.zeros(n_total, dtype=bool)
    if constraint is not Constraint.NONE:
        if constraint is Constraint.ZERO_ON_BOUNDARY:
            facet_ids = mesh.boundary_facets
        else:
            tag = (
                GAMMA0
                if constraint is Constraint.ZERO_ON_GAMMA0
                else GAMMA1
            )
            facet_ids = mesh.facets_tagged(tag)
        drop[_facet_dof_ids(mesh, facet_ids, k, nv)] = True

    return cell_dofs, coords, drop, _ReferenceElement(_lagrange_ref_nodes(k), k)


def _build_cr(mesh, constraint):
    cell_dofs = mesh.cell_facets.copy()
    a = mesh.vertices[mesh.facets[:, 0]]
    b = mesh.vertices[mesh.facets[:, 1]]
    coords = 0.5 * (a + b)
    drop = np.zeros(mesh.num_facets, dtype=bool)
    if constraint is Constraint.CR_ZERO_MEAN_ALL:
        drop[mesh.boundary_facets] = True
    elif constraint is Constraint.CR_ZERO_MEAN_OFF_GAMMA0:
        bdry = mesh.boundary_facets
        drop[bdry[mesh.boundary_tags[bdry] != GAMMA0]] = True
    return cell_dofs, coords, drop, _ReferenceElement(_CR_MIDPOINTS, 1)


def build_space(mesh, family, constraint=Constraint.NONE):
    """Build a catalogued space; constrained dofs are eliminated."""
    if isinstance(family, Lagrange):
        k = family.degree
        if not 1 <= k <= MAX_DEGREE:
            raise ValueError(f"Lagrange degree {k} outside 1..{MAX_DEGREE}")
        if constraint not in _LAGRANGE_CONSTRAINTS:
            raise ValueError(f"{constraint} is not a Lagrange constraint")
        cell_dofs, coords, drop, ref = _build_lagrange(mesh, k, constraint)
    elif isinstance(family, CrouzeixRaviart):
        if family.degree != 1:
            raise ValueError("Crouzeix-Raviart implemented for degree 1 only")
        if constraint not in _CR_CONSTRAINTS:
            raise ValueError(f"{constraint} is not a CR constraint")
        cell_dofs, coords, drop, ref = _build_cr(mesh, constraint)
    else:
        raise ValueError(f"unknown family {family!r}")

    keep = ~drop
    renum = np.full(len(drop), -1, dtype=np.int64)
    renum[keep] = np.arange(keep.sum())
    return FiniteElementSpace(
        mesh=mesh,
        family=family,
        constraint=constraint,
        ndofs=int(keep.sum()),
        cell_dofs=renum[cell_dofs],
        dof_coords=coords[keep],
        ref=ref,
    )


def eval_basis(space, triangle, ref_point):
    """Basis (values, gradients) at one barycentric point of one triangle;
    gradients in physical coordinates."""
    bary = np.asarray(ref_point, dtype=float).reshape(1, 3)
    vals = space.ref.values(bary)[0]
    gref = space.ref.grads(bary)[0]  # (nloc, 2)
    v = space.mesh.vertices[space.mesh.triangles[triangle]]
    J = np.column_stack([v[1] - v[0], v[2] - v[0]])
    grads = gref @ np.linalg.inv(J)
    return vals, grads


def interpolate_nodal(space, f):
    """FeFunction matching f at every (surviving) dof location."""
    x, y = space.dof_coords[:, 0], space.dof_coords[:, 1]
    vals = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape)
    return FeFunction(space=space, coeffs=np.array(vals, dtype=float))
