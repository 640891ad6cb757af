"""Error measures, stability functionals, and convergence-rate fitting.

The residual-type triple norm pairs a primal seminorm (regularization and
data terms plus the gradient-jump and scaled-Laplacian stabilizers) with a
gamma-weighted H1 norm of the dual variable. Negative-order quantities are
computed by discrete Riesz representation on enriched conforming spaces.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu

from .assembly import FormKind, RhsKind, _geometry, _phys_grads, assemble_form, assemble_rhs
from .quadrature import triangle_rule
from .schemes import Problem, Variant
from .spaces import Constraint, Lagrange, build_space

CSV_HEADER = (
    "h,dofs_primal,dofs_dual,epsilon,gamma,n,delta,"
    "l2_omega,h1_omega,l2_g,h1_g,jump,triple,kappa2,sigma_min"
)


def error_norm(u_h, exact, region="Omega", norm="L2", exact_grad=None, quad_order=8):
    """L2 or full H1 distance between an FeFunction and a callable, over all
    of Omega or over a tagged cell region."""
    mesh = u_h.space.mesh
    if region == "Omega":
        cells = np.arange(mesh.num_triangles)
    else:
        cells = mesh.region(region)
    rule = triangle_rule(quad_order)
    bary, w = rule.points, rule.weights

    _, invJ, detJ = _geometry(mesh)
    verts = mesh.vertices[mesh.triangles[cells]]  # (nc, 3, 2)
    pts = np.einsum("qi,cid->cqd", bary, verts)
    X, Y = pts[..., 0], pts[..., 1]

    coeffs = u_h.cell_coeffs(cells)
    vals = coeffs @ u_h.space.ref.values(bary).T  # (nc, nq)
    err = vals - np.broadcast_to(np.asarray(exact(X, Y), float), vals.shape)
    total = np.einsum("q,c,cq->", w, detJ[cells], err**2)

    if norm == "H1":
        if exact_grad is None:
            raise ValueError("H1 error needs exact_grad")
        G = _phys_grads(u_h.space, invJ[cells], bary)  # (nc, nq, nloc, 2)
        guh = np.einsum("ca,cqai->cqi", coeffs, G)
        gx, gy = exact_grad(X, Y)
        guh[..., 0] -= gx
        guh[..., 1] -= gy
        total += np.einsum("q,c,cqi->", w, detJ[cells], guh**2)
    elif norm != "L2":
        raise ValueError(f"unknown norm {norm!r}")
    return float(np.sqrt(total))


def triple_norm_grams(config, primal_space, dual_space):
    """Gram matrices (Gv, Gw) so that the triple norm of a pair (u, lam) is
    sqrt(u' Gv u + lam' Gw lam)."""
    if config.variant is Variant.UNREGULARIZED:
        Gv = assemble_form(FormKind.BROKEN_H1_H2, primal_space, primal_space)
    else:
        Gv = config.epsilon * assemble_form(
            FormKind.BROKEN_H1, primal_space, primal_space
        )
    if config.problem is Problem.UNIQUE_CONTINUATION:
        Gv = Gv + assemble_form(FormKind.OMEGA_MASS, primal_space, primal_space)
    else:
        Gv = Gv + assemble_form(
            FormKind.NORMAL_DERIV_GAMMA0, primal_space, primal_space
        )
    Gv = Gv + assemble_form(FormKind.JUMP_PENALTY, primal_space, primal_space)
    Gv = Gv + assemble_form(FormKind.LAPLACIAN_H2, primal_space, primal_space)
    Gw = config.gamma**2 * assemble_form(FormKind.BROKEN_H1, dual_space, dual_space)
    return Gv.tocsr(), Gw.tocsr()


def triple_norm(config, u_h, lam_h, grams=None):
    if grams is None:
        grams = triple_norm_grams(config, u_h.space, lam_h.space)
    Gv, Gw = grams
    val = u_h.coeffs @ (Gv @ u_h.coeffs) + lam_h.coeffs @ (Gw @ lam_h.coeffs)
    return float(np.sqrt(max(val, 0.0)))


def jump_seminorm(u_h):
    J = assemble_form(FormKind.JUMP_PENALTY, u_h.space, u_h.space)
    return float(np.sqrt(max(u_h.coeffs @ (J @ u_h.coeffs), 0.0)))


def discrete_hminus1(g, mesh, space=None, degree=2):
    """H^-1-type norm of a source: sqrt(F(z)) with z the Riesz representer
    of F in a zero-boundary Lagrange space under the Dirichlet energy.
    `g` is a callable / constant, or an assembled functional on `space`."""
    if space is None:
        space = build_space(mesh, Lagrange(degree), Constraint.ZERO_ON_BOUNDARY)
    elif space.mesh is not mesh:
        raise ValueError("space was built on a different mesh")
    if g is None or callable(g) or np.isscalar(g):
        F = assemble_rhs(RhsKind.SOURCE, space, g)
    else:
        F = np.asarray(g, float)
        if F.shape != (space.ndofs,):
            raise ValueError(
                f"functional has length {F.shape}, space has {space.ndofs} dofs"
            )
    A = assemble_form(FormKind.BROKEN_STIFFNESS, space, space)
    z = splu(A.tocsc()).solve(F)
    return float(np.sqrt(max(F @ z, 0.0)))


def discrete_cp_dual_norm(v, test_degree=None):
    """Residual-dual norm sup_w a_h(v, w)/||w||_H1 over an enriched
    conforming test space vanishing away from the data boundary."""
    space = v.space
    deg = space.degree + 1 if test_degree is None else test_degree
    test = build_space(space.mesh, Lagrange(deg), Constraint.ZERO_ON_GAMMA1)
    F = assemble_form(FormKind.BROKEN_STIFFNESS, space, test) @ v.coeffs
    N = assemble_form(FormKind.BROKEN_H1, test, test)
    z = splu(N.tocsc()).solve(F)
    return float(np.sqrt(max(F @ z, 0.0)))


def fit_rate(h_values, errors):
    """Least-squares slope of log(error) against log(h)."""
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.shape != e.shape or h.ndim != 1:
        raise ValueError("h_values and errors must be 1d of equal length")
    if len(h) < 3:
        raise ValueError("rate fit needs at least 3 points")
    if not (np.all(h > 0) and np.all(e > 0)):
        raise ValueError("rate fit needs strictly positive h and errors")
    if len(np.unique(h)) != len(h):
        raise ValueError("h values must be distinct")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def vertex_values(u_h):
    """Values at mesh vertices (unique for a conforming function)."""
    mesh = u_h.space.mesh
    vals = u_h.eval(np.arange(mesh.num_triangles), np.eye(3))
    out = np.zeros(mesh.num_vertices)
    out[mesh.triangles] = vals
    return out


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


@dataclass(frozen=True)
class ErrorReport:
    """One CSV row of an experiment sweep; None fields serialize empty."""

    h: float
    dofs_primal: int
    dofs_dual: int
    epsilon: float
    gamma: float
    n: int | None = None
    delta: float | None = None
    l2_omega: float | None = None
    h1_omega: float | None = None
    l2_g: float | None = None
    h1_g: float | None = None
    jump: float | None = None
    triple: float | None = None
    kappa2: float | None = None
    sigma_min: float | None = None

    def __post_init__(self):
        for l2, h1, tag in (
            (self.l2_omega, self.h1_omega, "omega"),
            (self.l2_g, self.h1_g, "G"),
        ):
            if l2 is not None and h1 is not None and l2 > h1 * (1.0 + 1e-9):
                raise ValueError(f"L2 error exceeds H1 error on {tag}")

    def csv_row(self):
        return ",".join(
            _fmt(getattr(self, name)) for name in CSV_HEADER.split(",")
        )
