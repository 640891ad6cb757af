"""Scheme configuration and composition of the mixed saddle-point systems.

Four system families over a primal/dual space pair (V, W):

  regularized uc:   [[eps M_H1 + M_omega, B^T], [B, -g^2 BrokenH1]]
  regularized cp:   [[eps M_H1,           B^T], [B, -g^2 BrokenH1]]
  l2-stabilized uc: [[eps M_H1 + Mh_omega,B^T], [B, -g^2 SStar  ]]
  unregularized:    the first two with eps = 0 (P1 primal, CR1 dual)

where B = a_h(trial=primal, test=dual) and Mh_omega carries local h_K^-2
weights. Space constraints are decided by the problem: uc pairs an
unconstrained primal with a zero-boundary dual; the Cauchy problem pairs a
zero-on-Gamma0 primal with a zero-on-Gamma1 dual (facet-mean variants for
the CR1 dual).
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .assembly import FormKind, PerturbedField, RhsKind, assemble_form, assemble_rhs
from .linalg import BlockSystem
from .mesh import GAMMA0
from .spaces import Constraint, CrouzeixRaviart, Lagrange, build_space

OMEGA_REGION = "omega"
G_REGION = "G"


class ConfigError(ValueError):
    pass


class Problem(Enum):
    UNIQUE_CONTINUATION = "uc"
    CAUCHY = "cauchy"


class Variant(Enum):
    REGULARIZED = "regularized"
    L2_STABILIZED = "l2stab"
    UNREGULARIZED = "unregularized"


@dataclass(frozen=True)
class ProblemData:
    """Raw data fields; None means the zero function.

    q    interior measurement on omega (unique continuation)
    f    volume source on Omega
    phi  Neumann flux on Gamma0 (Cauchy)
    """

    q: object = None
    f: object = None
    phi: object = None


@dataclass(frozen=True)
class NoiseSpec:
    amplitude: float
    seed: int

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigError("noise amplitude must be nonnegative")


@dataclass(frozen=True)
class SchemeConfig:
    problem: Problem
    variant: Variant
    primal_degree: int
    dual: object  # Lagrange(m) or CrouzeixRaviart(1)
    epsilon: float | None
    data: ProblemData
    gamma: float = 0.5
    noise: NoiseSpec | None = None

    def __post_init__(self):
        if not 1 <= self.primal_degree <= 4:
            raise ConfigError(f"primal degree {self.primal_degree} outside 1..4")
        if not isinstance(self.dual, (Lagrange, CrouzeixRaviart)):
            raise ConfigError(f"unknown dual family {self.dual!r}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma {self.gamma} outside (0, 1)")
        if self.variant is Variant.UNREGULARIZED:
            if self.epsilon is not None:
                raise ConfigError("unregularized variant takes no epsilon")
            if self.primal_degree != 1 or not isinstance(
                self.dual, CrouzeixRaviart
            ):
                raise ConfigError("unregularized variant requires P1 with CR1 dual")
        else:
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ConfigError(f"epsilon {self.epsilon} outside (0, 1)")
        if (
            self.variant is Variant.L2_STABILIZED
            and self.problem is not Problem.UNIQUE_CONTINUATION
        ):
            raise ConfigError("l2-stabilized variant is unique-continuation only")

    @property
    def eps_value(self):
        return 0.0 if self.epsilon is None else self.epsilon


def space_constraints(config):
    """(primal constraint, dual constraint) per the problem type."""
    if config.problem is Problem.UNIQUE_CONTINUATION:
        primal = Constraint.NONE
        dual = (
            Constraint.CR_ZERO_MEAN_ALL
            if isinstance(config.dual, CrouzeixRaviart)
            else Constraint.ZERO_ON_BOUNDARY
        )
    else:
        primal = Constraint.ZERO_ON_GAMMA0
        dual = (
            Constraint.CR_ZERO_MEAN_OFF_GAMMA0
            if isinstance(config.dual, CrouzeixRaviart)
            else Constraint.ZERO_ON_GAMMA1
        )
    return primal, dual


def build_spaces(config, mesh):
    cp, cd = space_constraints(config)
    return (
        build_space(mesh, Lagrange(config.primal_degree), cp),
        build_space(mesh, config.dual, cd),
    )


def _validate_mesh(config, mesh):
    if config.problem is Problem.UNIQUE_CONTINUATION:
        if OMEGA_REGION not in mesh.regions or not mesh.regions[OMEGA_REGION].any():
            raise ConfigError("unique continuation needs a tagged omega region")
    else:
        if len(mesh.facets_tagged(GAMMA0)) == 0:
            raise ConfigError("Cauchy problem needs Gamma0-tagged facets")


def build_operator(config, mesh):
    """Data-independent part: blocks and spaces, as a BlockSystem with
    zero right-hand side (combine with build_rhs / with_rhs)."""
    _validate_mesh(config, mesh)
    primal, dual = build_spaces(config, mesh)

    h1 = assemble_form(FormKind.BROKEN_H1, primal, primal)
    if config.problem is Problem.UNIQUE_CONTINUATION:
        if config.variant is Variant.L2_STABILIZED:
            data_term = assemble_form(FormKind.OMEGA_MASS_HM2, primal, primal)
        else:
            data_term = assemble_form(FormKind.OMEGA_MASS, primal, primal)
        A11 = config.eps_value * h1 + data_term
    else:
        A11 = config.eps_value * h1
    B = assemble_form(FormKind.BROKEN_STIFFNESS, primal, dual)
    s_kind = (
        FormKind.S_STAR
        if config.variant is Variant.L2_STABILIZED
        else FormKind.BROKEN_H1
    )
    S = assemble_form(s_kind, dual, dual)

    return BlockSystem(
        A11=A11.tocsr(),
        B=B.tocsr(),
        S=S.tocsr(),
        gamma=config.gamma,
        rhs_primal=np.zeros(primal.ndofs),
        rhs_dual=np.zeros(dual.ndofs),
        primal_space=primal,
        dual_space=dual,
        config=config,
    )


def build_rhs(config, primal, dual):
    """(rhs_primal, rhs_dual) for the given spaces."""
    d = config.data
    if config.problem is Problem.UNIQUE_CONTINUATION:
        q_kind = (
            RhsKind.INTERIOR_DATA_HM2
            if config.variant is Variant.L2_STABILIZED
            else RhsKind.INTERIOR_DATA
        )
        rhs_p = assemble_rhs(q_kind, primal, d.q)
        rhs_d = assemble_rhs(RhsKind.SOURCE, dual, d.f)
    else:
        rhs_p = np.zeros(primal.ndofs)
        rhs_d = assemble_rhs(RhsKind.SOURCE, dual, d.f) + assemble_rhs(
            RhsKind.NEUMANN_GAMMA0, dual, d.phi
        )
    return rhs_p, rhs_d


def build_system(config, mesh):
    """Assemble the full saddle-point system for the config on the mesh."""
    op = build_operator(config, mesh)
    rhs_p, rhs_d = build_rhs(config, op.primal_space, op.dual_space)
    return op.with_rhs(rhs_p, rhs_d)


def couple_parameters(s, eps, rule="standard"):
    """Mesh size coupled to the regularization strength for H^s solutions:
    h = eps^{1/(2s-2)} (standard) or h = eps^{1/(2s)} (l2stab).
    Callers snap the value to the nearest admissible structured mesh."""
    if not 0.0 < eps < 1.0:
        raise ConfigError(f"epsilon {eps} outside (0, 1)")
    if rule == "standard":
        if s <= 1.0:
            raise ConfigError("standard coupling needs s > 1")
        return float(eps ** (1.0 / (2.0 * s - 2.0)))
    if rule == "l2stab":
        if s < 1.0:
            raise ConfigError("coupling needs s >= 1")
        return float(eps ** (1.0 / (2.0 * s)))
    raise ConfigError(f"unknown coupling rule {rule!r}")


def perturb_data(config):
    """Wrap the config's data fields with piecewise-constant uniform noise
    of the configured amplitude; delta = 0 returns the config unchanged."""
    if config.noise is None:
        raise ConfigError("config has no noise spec")
    delta, seed = config.noise.amplitude, config.noise.seed
    if delta == 0.0:
        return config
    d = config.data

    def wrap(fn, role):
        return PerturbedField(base=fn, delta=delta, seed=seed, role=role)

    if config.problem is Problem.UNIQUE_CONTINUATION:
        data = replace(d, q=wrap(d.q, "q"), f=wrap(d.f, "f"))
    else:
        data = replace(d, f=wrap(d.f, "f"), phi=wrap(d.phi, "phi"))
    return replace(config, data=data)


@dataclass(frozen=True)
class HadamardProblem:
    """Harmonic family u = n^-2 sin(nx) sinh(ny): zero Dirichlet trace and
    known Neumann flux on Gamma0 = left + bottom, exponentially unstable
    continuation towards the opposite sides as n grows."""

    n: int = 1

    def u(self, x, y):
        n = self.n
        return np.sin(n * x) * np.sinh(n * y) / n**2

    def grad(self, x, y):
        n = self.n
        return (
            np.cos(n * x) * np.sinh(n * y) / n,
            np.sin(n * x) * np.cosh(n * y) / n,
        )

    def phi(self, x, y):
        """Neumann data on the left and bottom sides (closed forms)."""
        n = self.n
        return np.where(
            np.asarray(x) < 1e-12,
            -np.sinh(n * np.asarray(y)) / n,
            -np.sin(n * np.asarray(x)) / n,
        )

    def phi_from_gradient(self, x, y):
        """Same data via grad u . nu; the consistency check's second route."""
        ux, uy = self.grad(np.asarray(x), np.asarray(y))
        return np.where(np.asarray(x) < 1e-12, -ux, -uy)

    def data(self):
        return ProblemData(f=None, phi=self.phi)

    def max_abs(self):
        """sup |u| on the closed square (attained at (pi/(2n) capped, 1))."""
        n = self.n
        xmax = min(math.pi / (2 * n), 1.0)
        return abs(math.sin(n * xmax)) * math.sinh(n) / n**2
