"""Assembly of the bilinear forms and data functionals of the mixed schemes.

Cell forms batch-evaluate reference basis tables at quadrature points and
contract them with the kernel backend; facet forms (gradient-jump penalty,
boundary normal-derivative terms, Gamma0 traces) parametrize each facet by
its canonical direction so that the two adjacent triangles see the same
physical quadrature points.

Weights follow the local convention: h_F = facet length on facet integrals,
h_K = element diameter on element-residual terms. Data functionals evaluate
the raw data at quadrature points; the nodal data interpolants act
identically on the test spaces by their defining relations, so they are
never materialized.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .mesh import GAMMA0, MeshError
from .quadrature import MAX_ORDER, edge_rule, triangle_rule
from .spaces import FeFunction  # noqa: F401  (re-export: part of this module's API)


class AssemblyError(ValueError):
    pass


class FormKind(Enum):
    BROKEN_STIFFNESS = "broken_stiffness"  # (grad_h u, grad_h v)
    L2_MASS = "l2_mass"                    # (u, v)_Omega
    BROKEN_H1 = "broken_h1"                # L2_MASS + BROKEN_STIFFNESS
    BROKEN_H1_H2 = "broken_h1_h2"          # h_K^2-weighted BROKEN_H1
    OMEGA_MASS = "omega_mass"              # (u, v)_omega
    OMEGA_MASS_HM2 = "omega_mass_hm2"      # h_K^-2-weighted (u, v)_omega
    GAMMA0_MASS = "gamma0_mass"            # (u, v)_Gamma0
    JUMP_PENALTY = "jump_penalty"          # sum_F h_F int_F [dn u][dn v]
    NORMAL_DERIV_GAMMA0 = "normal_deriv_gamma0"      # int_Gamma0 h dn u dn v
    NORMAL_DERIV_BOUNDARY = "normal_deriv_boundary"  # int_dOmega h dn u dn v
    LAPLACIAN_H2 = "laplacian_h2"          # (h lap_h u, h lap_h v)
    S_STAR = "s_star"                      # JUMP + boundary deriv + LAPLACIAN_H2


class RhsKind(Enum):
    INTERIOR_DATA = "interior_data"        # (q, v)_omega
    INTERIOR_DATA_HM2 = "interior_data_hm2"
    SOURCE = "source"                      # (f, w)_Omega
    NEUMANN_GAMMA0 = "neumann_gamma0"      # <phi, w>_Gamma0


# noise stream ids per data role, so the three fields perturb independently
_NOISE_ROLES = {"q": 0, "f": 1, "phi": 2}


@dataclass(frozen=True)
class PerturbedField:
    """Data field plus piecewise-constant uniform [-1,1] noise of amplitude
    delta, one value per entity of the data's support, drawn from a fixed
    seed so equal configs assemble identical systems."""

    base: object  # callable or None (zero field)
    delta: float
    seed: int
    role: str

    def __post_init__(self):
        if self.role not in _NOISE_ROLES:
            raise AssemblyError(f"unknown noise role {self.role!r}")

    def noise(self, n_entities):
        ss = np.random.SeedSequence(self.seed, spawn_key=(_NOISE_ROLES[self.role],))
        return np.random.default_rng(ss).uniform(-1.0, 1.0, n_entities)


def _geometry(mesh):
    v = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    J = np.stack([e1, e2], axis=-1)
    detJ = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    invJ = np.empty_like(J)
    invJ[:, 0, 0] = J[:, 1, 1]
    invJ[:, 0, 1] = -J[:, 0, 1]
    invJ[:, 1, 0] = -J[:, 1, 0]
    invJ[:, 1, 1] = J[:, 0, 0]
    invJ /= detJ[:, None, None]
    return J, invJ, detJ


def _phys_grads(space, invJ_cells, bary):
    gref = space.ref.grads(bary)  # (nq, nloc, 2) reference
    return np.ascontiguousarray(
        np.einsum("tji,qaj->tqai", invJ_cells, gref)
    )


def _phys_laplacians(space, invJ_cells, bary):
    href = space.ref.hessians(bary)  # (nq, nloc, 2, 2)
    return np.ascontiguousarray(
        np.einsum("tji,qajm,tmi->tqa", invJ_cells, href, invJ_cells)
    )


def _scatter(mats, rows, cols, shape):
    r = np.broadcast_to(rows[:, :, None], mats.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], mats.shape).ravel()
    v = np.asarray(mats).ravel()
    keep = (r >= 0) & (c >= 0)
    return sp.coo_matrix((v[keep], (r[keep], c[keep])), shape=shape).tocsr()


def _check_pair(trial, test):
    if trial.mesh is not test.mesh:
        raise AssemblyError("trial and test spaces live on different meshes")


def _omega_cells(mesh):
    try:
        mask = mesh.region("omega")
    except MeshError as err:
        raise AssemblyError(str(err)) from err
    cells = np.nonzero(mask)[0]
    if len(cells) == 0:
        raise AssemblyError("omega region is empty")
    return cells


def _gamma0_facets(mesh):
    fids = mesh.facets_tagged(GAMMA0)
    if len(fids) == 0:
        raise AssemblyError("mesh has no Gamma0 facets")
    return fids


def _cell_form(kind, trial, test, quad_order):
    mesh = trial.mesh
    order = quad_order if quad_order is not None else min(
        trial.degree + test.degree, MAX_ORDER
    )
    rule = triangle_rule(order)
    w, bary = rule.weights, rule.points
    _, invJ, detJ = _geometry(mesh)
    shape = (test.ndofs, trial.ndofs)

    if kind in (FormKind.L2_MASS, FormKind.OMEGA_MASS, FormKind.OMEGA_MASS_HM2):
        # value tables are cell-independent: one reference matrix, scaled
        ref = np.einsum(
            "q,qa,qb->ab", w, test.ref.values(bary), trial.ref.values(bary)
        )
        if kind is FormKind.L2_MASS:
            cells, scale = np.arange(mesh.num_triangles), detJ
        else:
            cells = _omega_cells(mesh)
            scale = detJ[cells]
            if kind is FormKind.OMEGA_MASS_HM2:
                scale = scale * mesh.h_cell[cells] ** -2.0
        mats = scale[:, None, None] * ref
    elif kind is FormKind.BROKEN_STIFFNESS:
        cells = np.arange(mesh.num_triangles)
        Gte = _phys_grads(test, invJ, bary)
        Gtr = Gte if trial is test else _phys_grads(trial, invJ, bary)
        mats = _kernels.pairs_grad(w, detJ, Gte, Gtr)
    elif kind is FormKind.LAPLACIAN_H2:
        cells = np.arange(mesh.num_triangles)
        Lte = _phys_laplacians(test, invJ, bary)
        Ltr = Lte if trial is test else _phys_laplacians(trial, invJ, bary)
        mats = _kernels.pairs_scalar(w, detJ * mesh.h_cell**2, Lte, Ltr)
    else:
        raise AssemblyError(f"not a cell form: {kind}")

    return _scatter(mats, test.cell_dofs[cells], trial.cell_dofs[cells], shape)


def _facet_tables(space, fids, cells, s, invJ, with_grads):
    """Trace tables of `space` on the given facets, seen from `cells`,
    at edge parameters s measured along the canonical facet direction."""
    mesh = space.mesh
    tris = mesh.triangles[cells]
    locA = np.argmax(tris == mesh.facets[fids, 0][:, None], axis=1)
    locB = np.argmax(tris == mesh.facets[fids, 1][:, None], axis=1)
    nF, nq = len(fids), len(s)
    bary = np.zeros((nF, nq, 3))
    rows = np.arange(nF)[:, None]
    qcols = np.arange(nq)[None, :]
    bary[rows, qcols, locA[:, None]] = 1.0 - s[None, :]
    bary[rows, qcols, locB[:, None]] = s[None, :]
    flat = bary.reshape(-1, 3)
    vals = space.ref.values(flat).reshape(nF, nq, -1)
    if not with_grads:
        return np.ascontiguousarray(vals), None
    gref = space.ref.grads(flat).reshape(nF, nq, -1, 2)
    grads = np.einsum("fji,fqaj->fqai", invJ[cells], gref)
    return np.ascontiguousarray(vals), np.ascontiguousarray(grads)


def _facet_form(kind, trial, test, quad_order):
    mesh = trial.mesh
    order = quad_order if quad_order is not None else min(
        trial.degree + test.degree, MAX_ORDER
    )
    rule = edge_rule(order)
    w, s = rule.weights, rule.points
    _, invJ, _ = _geometry(mesh)
    lens = mesh.facet_lengths
    shape = (test.ndofs, trial.ndofs)

    if kind is FormKind.JUMP_PENALTY:
        fids = mesh.interior_facets
        c1, c2 = mesh.facet_cells[fids, 0], mesh.facet_cells[fids, 1]
        n1 = mesh.facet_normals[fids] * mesh.outward_sign(fids, c1)[:, None]

        def jump_table(space):
            _, g1 = _facet_tables(space, fids, c1, s, invJ, True)
            _, g2 = _facet_tables(space, fids, c2, s, invJ, True)
            j1 = np.einsum("fqai,fi->fqa", g1, n1)
            j2 = np.einsum("fqai,fi->fqa", g2, -n1)
            return np.ascontiguousarray(np.concatenate([j1, j2], axis=2))

        Jte = jump_table(test)
        Jtr = Jte if trial is test else jump_table(trial)
        mats = _kernels.pairs_scalar(w, mesh.h_facet[fids] * lens[fids], Jte, Jtr)
        rows = np.concatenate(
            [test.cell_dofs[c1], test.cell_dofs[c2]], axis=1
        )
        cols = np.concatenate(
            [trial.cell_dofs[c1], trial.cell_dofs[c2]], axis=1
        )
        return _scatter(mats, rows, cols, shape)

    if kind in (FormKind.NORMAL_DERIV_GAMMA0, FormKind.NORMAL_DERIV_BOUNDARY):
        fids = (
            _gamma0_facets(mesh)
            if kind is FormKind.NORMAL_DERIV_GAMMA0
            else mesh.boundary_facets
        )
        cells = mesh.facet_cells[fids, 0]
        nu = mesh.facet_normals[fids] * mesh.outward_sign(fids, cells)[:, None]

        def deriv_table(space):
            _, g = _facet_tables(space, fids, cells, s, invJ, True)
            return np.ascontiguousarray(np.einsum("fqai,fi->fqa", g, nu))

        Dte = deriv_table(test)
        Dtr = Dte if trial is test else deriv_table(trial)
        mats = _kernels.pairs_scalar(w, mesh.h_facet[fids] * lens[fids], Dte, Dtr)
        return _scatter(
            mats, test.cell_dofs[cells], trial.cell_dofs[cells], shape
        )

    if kind is FormKind.GAMMA0_MASS:
        fids = _gamma0_facets(mesh)
        cells = mesh.facet_cells[fids, 0]
        Tte, _ = _facet_tables(test, fids, cells, s, invJ, False)
        Ttr = Tte if trial is test else _facet_tables(trial, fids, cells, s, invJ, False)[0]
        mats = _kernels.pairs_scalar(w, lens[fids], Tte, Ttr)
        return _scatter(
            mats, test.cell_dofs[cells], trial.cell_dofs[cells], shape
        )

    raise AssemblyError(f"not a facet form: {kind}")


def assemble_form(kind, trial, test, quad_order=None):
    """Sparse matrix of the form; rows index test dofs, columns trial dofs."""
    _check_pair(trial, test)
    if kind is FormKind.BROKEN_H1:
        return assemble_form(
            FormKind.L2_MASS, trial, test, quad_order
        ) + assemble_form(FormKind.BROKEN_STIFFNESS, trial, test, quad_order)
    if kind is FormKind.BROKEN_H1_H2:
        return _weighted_broken_h1(trial, test, quad_order)
    if kind is FormKind.S_STAR:
        return (
            assemble_form(FormKind.JUMP_PENALTY, trial, test, quad_order)
            + assemble_form(FormKind.NORMAL_DERIV_BOUNDARY, trial, test, quad_order)
            + assemble_form(FormKind.LAPLACIAN_H2, trial, test, quad_order)
        )
    if kind in (
        FormKind.BROKEN_STIFFNESS,
        FormKind.L2_MASS,
        FormKind.OMEGA_MASS,
        FormKind.OMEGA_MASS_HM2,
        FormKind.LAPLACIAN_H2,
    ):
        return _cell_form(kind, trial, test, quad_order)
    return _facet_form(kind, trial, test, quad_order)


def _weighted_broken_h1(trial, test, quad_order):
    """sum_K h_K^2 [ (u,v)_K + (grad u, grad v)_K ]."""
    mesh = trial.mesh
    order = quad_order if quad_order is not None else min(
        trial.degree + test.degree, MAX_ORDER
    )
    rule = triangle_rule(order)
    w, bary = rule.weights, rule.points
    _, invJ, detJ = _geometry(mesh)
    scale = detJ * mesh.h_cell**2
    ref_mass = np.einsum(
        "q,qa,qb->ab", w, test.ref.values(bary), trial.ref.values(bary)
    )
    Gte = _phys_grads(test, invJ, bary)
    Gtr = Gte if trial is test else _phys_grads(trial, invJ, bary)
    mats = scale[:, None, None] * ref_mass + _kernels.pairs_grad(
        w, scale, Gte, Gtr
    )
    return _scatter(
        mats, test.cell_dofs, trial.cell_dofs, (test.ndofs, trial.ndofs)
    )


def _eval_data(data, X, Y, n_entities):
    """Evaluate raw or perturbed data at points X, Y of shape (n, nq)."""
    base = data.base if isinstance(data, PerturbedField) else data
    if base is None:
        vals = np.zeros(X.shape)
    elif callable(base):
        vals = np.broadcast_to(
            np.asarray(base(X, Y), dtype=float), X.shape
        ).copy()
    else:
        vals = np.full(X.shape, float(base))
    if isinstance(data, PerturbedField) and data.delta != 0.0:
        vals += data.delta * data.noise(n_entities)[:, None]
    return vals


def assemble_rhs(kind, test, data, quad_order=None):
    """Functional vector of the data against the test basis."""
    mesh = test.mesh
    order = quad_order if quad_order is not None else min(
        2 * test.degree + 2, MAX_ORDER
    )
    b = np.zeros(test.ndofs)

    if kind in (RhsKind.SOURCE, RhsKind.INTERIOR_DATA, RhsKind.INTERIOR_DATA_HM2):
        rule = triangle_rule(order)
        w, bary = rule.weights, rule.points
        _, _, detJ = _geometry(mesh)
        if kind is RhsKind.SOURCE:
            cells = np.arange(mesh.num_triangles)
            scale = detJ
        else:
            cells = _omega_cells(mesh)
            scale = detJ[cells]
            if kind is RhsKind.INTERIOR_DATA_HM2:
                scale = scale * mesh.h_cell[cells] ** -2.0
        pts = np.einsum("qi,tid->tqd", bary, mesh.vertices[mesh.triangles[cells]])
        vals = _eval_data(data, pts[..., 0], pts[..., 1], len(cells))
        local = np.einsum("q,t,tq,qa->ta", w, scale, vals, test.ref.values(bary))
        dofs = test.cell_dofs[cells]
    elif kind is RhsKind.NEUMANN_GAMMA0:
        fids = _gamma0_facets(mesh)
        rule = edge_rule(order)
        w, s = rule.weights, rule.points
        cells = mesh.facet_cells[fids, 0]
        _, invJ, _ = _geometry(mesh)
        T, _ = _facet_tables(test, fids, cells, s, invJ, False)
        A = mesh.vertices[mesh.facets[fids, 0]]
        Bv = mesh.vertices[mesh.facets[fids, 1]]
        pts = A[:, None, :] + s[None, :, None] * (Bv - A)[:, None, :]
        vals = _eval_data(data, pts[..., 0], pts[..., 1], len(fids))
        local = np.einsum(
            "q,f,fq,fqa->fa", w, mesh.facet_lengths[fids], vals, T
        )
        dofs = test.cell_dofs[cells]
    else:
        raise AssemblyError(f"unknown rhs kind: {kind}")

    keep = dofs >= 0
    np.add.at(b, dofs[keep], local[keep])
    return b


@dataclass(frozen=True)
class ElementPolynomial:
    """Element-wise polynomial field, here the broken Laplacian of a
    discrete function; evaluable at barycentric points per triangle."""

    source: FeFunction

    def eval(self, cells, bary):
        """(ncells, npts) values on the listed triangles."""
        cells = np.atleast_1d(np.asarray(cells))
        space = self.source.space
        _, invJ, _ = _geometry(space.mesh)
        href = space.ref.hessians(np.atleast_2d(bary))
        L = np.einsum("tji,qajm,tmi->tqa", invJ[cells], href, invJ[cells])
        return np.einsum("ta,tqa->tq", self.source.cell_coeffs(cells), L)


def broken_laplacian(u):
    """Per-element Laplacian of u (zero for P1 and CR1)."""
    return ElementPolynomial(source=u)


def dump_coo(matrix, path):
    """Coordinate text dump (row col value), row-major order."""
    coo = sp.csr_matrix(matrix).tocoo()
    with open(path, "w") as out:
        out.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            out.write(f"{r} {c} {float(v)!r}\n")
