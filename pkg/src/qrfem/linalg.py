"""Saddle-point solves, condition numbers, and inf-sup constants.

The full matrix [[A11, B^T], [B, -gamma^2 S]] is symmetric indefinite;
B is assembled once and transposed, so the off-diagonal blocks are exact
transposes by construction. Dense eigen/SVD paths are capped at 2000 dofs;
beyond that the ARPACK shift-invert path (inverse iteration through the
sparse factorization) takes over.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .spaces import FeFunction

DENSE_CAP = 2000
RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """Numerical failure in a factorization or eigensolve."""


class SingularSystemError(SolverError):
    pass


@dataclass
class BlockSystem:
    """2x2 block system [[A11, B^T], [B, -gamma^2 S]] with split rhs."""

    A11: sp.spmatrix
    B: sp.spmatrix
    S: sp.spmatrix
    gamma: float
    rhs_primal: np.ndarray
    rhs_dual: np.ndarray
    primal_space: object = None
    dual_space: object = None
    config: object = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_primal(self):
        return self.A11.shape[0]

    @property
    def n_dual(self):
        return self.S.shape[0]

    @property
    def size(self):
        return self.n_primal + self.n_dual

    @property
    def A12(self):
        return self.B.T.tocsr()

    @property
    def A21(self):
        return self.B

    @property
    def A22(self):
        return (-self.gamma**2) * self.S

    @property
    def rhs(self):
        return np.concatenate([self.rhs_primal, self.rhs_dual])

    def matrix(self):
        if "K" not in self._cache:
            self._cache["K"] = sp.bmat(
                [[self.A11, self.B.T], [self.B, self.A22]], format="csc"
            )
        return self._cache["K"]

    def factorization(self):
        if "lu" not in self._cache:
            try:
                self._cache["lu"] = spla.splu(self.matrix())
            except RuntimeError as exc:
                raise SingularSystemError(f"factorization failed: {exc}") from exc
        return self._cache["lu"]

    def with_rhs(self, rhs_primal, rhs_dual):
        """Same operator (factorization shared), different data."""
        out = BlockSystem(
            A11=self.A11,
            B=self.B,
            S=self.S,
            gamma=self.gamma,
            rhs_primal=np.asarray(rhs_primal, dtype=float),
            rhs_dual=np.asarray(rhs_dual, dtype=float),
            primal_space=self.primal_space,
            dual_space=self.dual_space,
            config=self.config,
        )
        out._cache = self._cache
        return out


def solve_direct(system):
    """Direct solve with one step of iterative refinement and a residual
    contract of 1e-10 (1 + ||rhs||); returns FeFunctions when the system
    carries its spaces, raw coefficient vectors otherwise."""
    K = system.matrix()
    rhs = system.rhs
    lu = system.factorization()
    x = lu.solve(rhs)
    resid = rhs - K @ x
    tol = RESIDUAL_TOL * (1.0 + np.linalg.norm(rhs))
    if np.linalg.norm(resid) > tol:
        x = x + lu.solve(resid)
        resid = rhs - K @ x
    if not np.all(np.isfinite(x)) or np.linalg.norm(resid) > tol:
        raise SolverError(
            f"solve residual {np.linalg.norm(resid):.3e} exceeds {tol:.3e}"
        )
    up, ud = x[: system.n_primal], x[system.n_primal :]
    if system.primal_space is not None and system.dual_space is not None:
        return (
            FeFunction(space=system.primal_space, coeffs=up),
            FeFunction(space=system.dual_space, coeffs=ud),
        )
    return up, ud


def _as_matrix(system):
    if isinstance(system, BlockSystem):
        return system.matrix()
    return sp.csc_matrix(system)


def condition_number(system, method="dense_exact"):
    """kappa_2 = sigma_max / sigma_min of the full system matrix."""
    K = _as_matrix(system)
    n = K.shape[0]
    if method == "dense_exact":
        if n > DENSE_CAP:
            raise ValueError(f"dense_exact capped at {DENSE_CAP} dofs, got {n}")
        svals = sla.svdvals(K.toarray())
        if svals[-1] <= 1e-300 or not np.isfinite(svals[0]):
            raise SingularSystemError("matrix numerically singular")
        return float(svals[0] / svals[-1])
    if method == "power_iteration":
        # symmetric K: singular values are |eigenvalues|; smallest via
        # inverse iteration through the sparse factorization (shift 0)
        K = _symmetrized(K, "system matrix")
        try:
            top = spla.eigsh(
                K, k=1, which="LM", return_eigenvectors=False, tol=1e-8
            )
            bottom = spla.eigsh(
                K, k=1, sigma=0.0, which="LM", return_eigenvectors=False,
                tol=1e-8,
            )
        except RuntimeError as exc:
            raise SingularSystemError(f"eigensolve failed: {exc}") from exc
        return float(np.abs(top[0]) / np.abs(bottom[0]))
    raise ValueError(f"unknown method {method!r}")


def _symmetrized(M, what="matrix"):
    """Fold floating-point asymmetry; structural asymmetry is an error."""
    M = sp.csr_matrix(M)
    diff = abs(M - M.T)
    scale = abs(M).max() if M.nnz else 1.0
    if diff.nnz and diff.max() > 1e-10 * scale:
        raise ValueError(f"{what} is not symmetric")
    return (M + M.T) * 0.5


def _check_gram_sparse(N):
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.standard_normal(N.shape[0])
        if x @ (N @ x) <= 0:
            raise ValueError("Gram matrix not positive definite")


def infsup_constant(A, N_trial, N_test):
    """Smallest generalized singular value of the system operator between
    the trial and test triple norms: sigma_min of N_test^{-1/2} A N_trial^{-1/2},
    i.e. the root of the smallest eigenvalue of A^T N_test^{-1} A x = s^2 N_trial x.
    """
    K = _as_matrix(A)
    n = K.shape[0]
    N_trial = sp.csc_matrix(N_trial)
    N_test = sp.csc_matrix(N_test)
    if N_trial.shape != (n, n) or N_test.shape != (n, n):
        raise ValueError("Gram matrix dimensions do not match the operator")

    if n <= DENSE_CAP:
        Kd = K.toarray()
        try:
            c_test = sla.cho_factor(N_test.toarray())
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"test Gram not SPD: {exc}") from exc
        try:
            sla.cho_factor(N_trial.toarray())
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"trial Gram not SPD: {exc}") from exc
        P = Kd.T @ sla.cho_solve(c_test, Kd)
        lam = sla.eigh(
            P, N_trial.toarray(), eigvals_only=True, subset_by_index=[0, 0]
        )
        return float(np.sqrt(max(lam[0], 0.0)))

    if (N_trial != N_test).nnz:
        raise ValueError(
            f"beyond {DENSE_CAP} dofs the sparse path needs N_trial == N_test"
        )
    N_trial = _symmetrized(N_trial, "Gram matrix")
    _check_gram_sparse(N_trial)
    K = _symmetrized(K, "system matrix")
    # symmetric A: the generalized singular values are |eigenvalues| of the
    # pencil (A, N); take the few nearest zero by shift-invert
    try:
        lam = spla.eigsh(
            K, k=4, M=N_trial, sigma=0.0, which="LM",
            return_eigenvectors=False, tol=1e-8,
        )
    except RuntimeError as exc:
        raise SolverError(f"shift-invert eigensolve failed: {exc}") from exc
    return float(np.min(np.abs(lam)))
