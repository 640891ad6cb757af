"""Batch experiment driver.

Reads a TOML config, runs one named experiment, writes CSV into an output
directory, and prints a console summary with fitted rates. Exit codes:
0 success, 2 configuration problem, 3 numerical failure.

Config keys (every key optional; defaults below):

  problem        "cauchy" | "uc"
  variant        "regularized" | "l2stab" | "unregularized"
  k              primal polynomial degree, 1..4
  duals          dual space names, from "P1".."P4" and "CR1"
  epsilon        regularization strength for single-epsilon experiments
  gamma          dual H1 weight, in (0, 1)
  ns             oscillation indices of the exact solution family
  meshes         structured mesh ladder (N means an N x N split), N <= 128
  mesh           single mesh for perturbation_sweep
  field_mesh     mesh for error_field
  field_n        oscillation index for error_field
  eigen_meshes   mesh ladder for condition/inf-sup studies, N <= 32
  gamma0         data-boundary sides, subset of left/right/bottom/top
  g_box          [xmin, xmax, ymin, ymax] interior comparison region
  omega_box      data region for unique continuation
  s              regularity exponent for parameter_coupling
  coupling_rule  "standard" | "l2stab" (default follows the variant)
  epsilons       epsilon ladder for condition_sweep
  coupling_epsilons  epsilon ladder for parameter_coupling
  deltas         noise amplitudes for perturbation_sweep
  pairs          primal-dual pairs for infsup_sweep, e.g. ["P1-P2", "P1-CR1"]
  threads        worker threads (--threads overrides)
  [noise]        amplitude, seed (--seed overrides the seed)
  [thresholds]   rate name -> [low, high], checked in the console summary;
                 rate names are printed by the summary itself, e.g.
                 "interior_rate.P2.n5.h1_g"

Sweep CSVs share one schema (analysis.CSV_HEADER) with empty cells for
unmeasured columns; error_field writes x,y,error per vertex. Trailing
lines starting with '#' carry fitted rates. Re-running an experiment with
the same config and seed reproduces every file byte for byte.
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .analysis import (
    CSV_HEADER,
    ErrorReport,
    _fmt,
    error_norm,
    fit_rate,
    jump_seminorm,
    triple_norm,
    triple_norm_grams,
    vertex_values,
)
from .assembly import AssemblyError
from .linalg import (
    DENSE_CAP,
    SolverError,
    condition_number,
    infsup_constant,
    solve_direct,
)
from .mesh import MeshError, build_structured_mesh, tag_boundary, tag_region
from .schemes import (
    ConfigError,
    HadamardProblem,
    NoiseSpec,
    Problem,
    ProblemData,
    SchemeConfig,
    Variant,
    build_operator,
    build_rhs,
    couple_parameters,
    perturb_data,
)
from .spaces import CrouzeixRaviart, FeFunction, Lagrange, interpolate_nodal

EXPERIMENTS = (
    "convergence",
    "error_field",
    "interior_rate",
    "condition_sweep",
    "infsup_sweep",
    "perturbation_sweep",
    "parameter_coupling",
)

MAX_SOLVE_MESH = 128
MAX_EIGEN_MESH = 32

_SPACES = {
    "P1": Lagrange(1),
    "P2": Lagrange(2),
    "P3": Lagrange(3),
    "P4": Lagrange(4),
    "CR1": CrouzeixRaviart(),
}


@dataclass(frozen=True)
class RunConfig:
    problem: str = "cauchy"
    variant: str = "regularized"
    k: int = 1
    duals: tuple = ("P1", "P2")
    epsilon: float = 1e-4
    gamma: float = 0.5
    ns: tuple = (1, 5)
    meshes: tuple = (8, 16, 32, 64, 128)
    mesh: int = 64
    field_mesh: int = 128
    field_n: int = 1
    eigen_meshes: tuple = (8, 16, 32)
    gamma0: tuple = ("left", "bottom")
    g_box: tuple = (0.0, 0.8, 0.0, 0.5)
    omega_box: tuple = (0.25, 0.75, 0.25, 0.75)
    s: float = 2.0
    coupling_rule: str | None = None
    epsilons: tuple = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    coupling_epsilons: tuple = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
    deltas: tuple = (0.0, 1e-4, 1e-3, 1e-2)
    pairs: tuple = ("P1-P2", "P1-CR1")
    threads: int = 1
    noise_amplitude: float = 1e-3
    noise_seed: int = 1
    thresholds: dict = field(default_factory=dict)


def load_config(path=None):
    raw = {}
    if path is not None:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    noise = raw.pop("noise", {})
    if not isinstance(noise, dict):
        raise ConfigError("noise must be a table with amplitude and seed")
    for key in noise:
        if key not in ("amplitude", "seed"):
            raise ConfigError(f"unknown noise key {key!r}")
    if "amplitude" in noise:
        raw["noise_amplitude"] = float(noise["amplitude"])
    if "seed" in noise:
        raw["noise_seed"] = int(noise["seed"])

    known = set(RunConfig.__dataclass_fields__)
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
    for key in ("duals", "ns", "meshes", "eigen_meshes", "gamma0", "g_box",
                "omega_box", "epsilons", "coupling_epsilons", "deltas", "pairs"):
        if key in raw:
            raw[key] = tuple(raw[key])
    cfg = RunConfig(**raw)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg):
    if cfg.problem not in ("cauchy", "uc"):
        raise ConfigError(f"unknown problem {cfg.problem!r}")
    if cfg.variant not in ("regularized", "l2stab", "unregularized"):
        raise ConfigError(f"unknown variant {cfg.variant!r}")
    for name in cfg.duals:
        if name not in _SPACES:
            raise ConfigError(f"unknown dual space {name!r}")
    if not cfg.duals or not cfg.ns or not cfg.meshes:
        raise ConfigError("duals, ns, and meshes must be nonempty")
    for N in (*cfg.meshes, cfg.mesh, cfg.field_mesh):
        if not 1 <= int(N) <= MAX_SOLVE_MESH:
            raise ConfigError(f"mesh {N} outside 1..{MAX_SOLVE_MESH}")
    for N in cfg.eigen_meshes:
        if not 1 <= int(N) <= MAX_EIGEN_MESH:
            raise ConfigError(
                f"eigen study mesh {N} outside 1..{MAX_EIGEN_MESH}"
            )
    if any(n < 1 for n in cfg.ns) or cfg.field_n < 1:
        raise ConfigError("oscillation indices must be positive")
    if any(not 0.0 < e < 1.0 for e in (*cfg.epsilons, *cfg.coupling_epsilons)):
        raise ConfigError("epsilon ladders must lie in (0, 1)")
    if any(d < 0 for d in cfg.deltas):
        raise ConfigError("noise amplitudes must be nonnegative")
    if cfg.coupling_rule not in (None, "standard", "l2stab"):
        raise ConfigError(f"unknown coupling rule {cfg.coupling_rule!r}")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    for key, bounds in cfg.thresholds.items():
        if len(bounds) != 2 or not bounds[0] <= bounds[1]:
            raise ConfigError(f"threshold {key!r} needs [low, high]")


def _make_mesh(cfg, N):
    mesh = build_structured_mesh(int(N), int(N))
    mesh = tag_boundary(mesh, set(cfg.gamma0))
    mesh = tag_region(mesh, tuple(cfg.g_box), "G")
    mesh = tag_region(mesh, tuple(cfg.omega_box), "omega")
    return mesh


def _scheme(cfg, dual_name, n, epsilon=None, variant=None, k=None, noise=None):
    variant = Variant(cfg.variant if variant is None else variant)
    problem = (
        Problem.CAUCHY if cfg.problem == "cauchy" else Problem.UNIQUE_CONTINUATION
    )
    hp = HadamardProblem(n)
    if problem is Problem.CAUCHY:
        data = ProblemData(phi=hp.phi)
    else:
        data = ProblemData(q=hp.u)
    if variant is Variant.UNREGULARIZED:
        eps = None
    else:
        eps = cfg.epsilon if epsilon is None else epsilon
    scheme = SchemeConfig(
        problem=problem,
        variant=variant,
        primal_degree=cfg.k if k is None else k,
        dual=_SPACES[dual_name],
        epsilon=eps,
        gamma=cfg.gamma,
        data=data,
        noise=noise,
    )
    return scheme, hp


def _report(scheme, mesh, u_h, lam_h, hp, grams, delta=None, g_only=False):
    u_i = interpolate_nodal(u_h.space, hp.u)
    e_h = FeFunction(u_h.space, u_h.coeffs - u_i.coeffs)
    kw = dict(
        h=mesh.h,
        dofs_primal=u_h.space.ndofs,
        dofs_dual=lam_h.space.ndofs,
        epsilon=scheme.eps_value,
        gamma=scheme.gamma,
        n=hp.n,
        delta=delta,
        l2_g=error_norm(u_h, hp.u, "G", "L2"),
        h1_g=error_norm(u_h, hp.u, "G", "H1", exact_grad=hp.grad),
    )
    if not g_only:
        kw.update(
            l2_omega=error_norm(u_h, hp.u, "Omega", "L2"),
            h1_omega=error_norm(u_h, hp.u, "Omega", "H1", exact_grad=hp.grad),
            jump=jump_seminorm(u_h),
            triple=triple_norm(scheme, e_h, lam_h, grams),
        )
    return ErrorReport(**kw)


def _solve_ladder(cfg, dual_name, N, g_only=False):
    """Solve one mesh for every n in cfg.ns, reusing the factorization."""
    mesh = _make_mesh(cfg, N)
    scheme0, _ = _scheme(cfg, dual_name, cfg.ns[0])
    op = build_operator(scheme0, mesh)
    grams = triple_norm_grams(scheme0, op.primal_space, op.dual_space)
    out = {}
    for n in cfg.ns:
        scheme, hp = _scheme(cfg, dual_name, n)
        system = op.with_rhs(*build_rhs(scheme, op.primal_space, op.dual_space))
        u_h, lam_h = solve_direct(system)
        out[n] = _report(scheme, mesh, u_h, lam_h, hp, grams, g_only=g_only)
    return out


def _run_jobs(jobs, threads):
    if threads <= 1:
        return {key: fn() for key, fn in jobs}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [(key, pool.submit(fn)) for key, fn in jobs]
        return {key: fut.result() for key, fut in futures}


class _Summary:
    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.files = []
        self.rates = {}

    def write(self, name, lines):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        path.write_text("\n".join(lines) + "\n")
        self.files.append(path)
        print(f"wrote {path} ({len(lines) - 1} rows)")

    def fit(self, name, reports, column):
        vals = [getattr(r, column) for r in reports]
        hs = [r.h for r in reports]
        try:
            rate = fit_rate(hs, vals)
        except (ValueError, TypeError):
            return None
        self.rates[f"{name}.{column}"] = rate
        print(f"rate {name}.{column} = {rate:.4g}")
        return rate

    def check_thresholds(self):
        for key, (lo, hi) in sorted(self.cfg.thresholds.items()):
            if key not in self.rates:
                print(f"threshold {key}: no fitted rate in this experiment")
                continue
            val = self.rates[key]
            verdict = "PASS" if lo <= val <= hi else "FAIL"
            print(f"threshold {key} in [{lo:g}, {hi:g}]: {verdict} ({val:.4g})")


def _exp_convergence(cfg, summary, g_only=False, prefix="convergence"):
    meshes = sorted(set(cfg.meshes))
    jobs = [
        ((dual, N), (lambda d=dual, m=N: _solve_ladder(cfg, d, m, g_only)))
        for dual in cfg.duals
        for N in meshes
    ]
    results = _run_jobs(jobs, cfg.threads)
    for dual in cfg.duals:
        for n in cfg.ns:
            reports = [results[(dual, N)][n] for N in meshes]
            lines = [CSV_HEADER] + [r.csv_row() for r in reports]
            tag = f"{prefix}.{dual}.n{n}"
            columns = ("l2_g", "h1_g") if g_only else (
                "l2_omega", "h1_omega", "l2_g", "h1_g")
            fitted = {}
            for col in columns:
                rate = summary.fit(tag, reports, col)
                if rate is not None:
                    fitted[col] = rate
            if g_only:
                for col, rate in fitted.items():
                    lines.append(f"# fit_{col} = {_fmt(rate)}")
            summary.write(f"{prefix}_{dual}_n{n}.csv", lines)


def _exp_error_field(cfg, summary):
    mesh = _make_mesh(cfg, cfg.field_mesh)
    hp = HadamardProblem(cfg.field_n)
    exact = hp.u(mesh.vertices[:, 0], mesh.vertices[:, 1])

    def one(dual):
        scheme, hp_n = _scheme(cfg, dual, cfg.field_n)
        op = build_operator(scheme, mesh)
        system = op.with_rhs(*build_rhs(scheme, op.primal_space, op.dual_space))
        u_h, _ = solve_direct(system)
        return vertex_values(u_h) - exact

    jobs = [(dual, (lambda d=dual: one(d))) for dual in cfg.duals]
    results = _run_jobs(jobs, cfg.threads)
    for dual in cfg.duals:
        err = results[dual]
        lines = ["x,y,error"] + [
            f"{_fmt(x)},{_fmt(y)},{_fmt(e)}"
            for (x, y), e in zip(mesh.vertices, err)
        ]
        summary.write(f"field_{dual}.csv", lines)


def _exp_condition(cfg, summary):
    def one(N, eps):
        mesh = _make_mesh(cfg, N)
        scheme, _ = _scheme(cfg, cfg.duals[0], cfg.ns[0], epsilon=eps)
        op = build_operator(scheme, mesh)
        method = "dense_exact" if op.size <= DENSE_CAP else "power_iteration"
        kappa = condition_number(op, method=method)
        return ErrorReport(
            h=mesh.h,
            dofs_primal=op.n_primal,
            dofs_dual=op.n_dual,
            epsilon=scheme.eps_value,
            gamma=scheme.gamma,
            kappa2=kappa,
        )

    grid = [
        (N, eps)
        for N in sorted(set(cfg.eigen_meshes))
        for eps in sorted(cfg.epsilons)
    ]
    jobs = [((N, e), (lambda n=N, p=e: one(n, p))) for N, e in grid]
    results = _run_jobs(jobs, cfg.threads)
    lines = [CSV_HEADER] + [results[key].csv_row() for key in grid]
    summary.write("condition_sweep.csv", lines)


def _exp_infsup(cfg, summary):
    def one(pair, N):
        parts = pair.split("-")
        if len(parts) != 2 or parts[0][:1] != "P" or parts[1] not in _SPACES:
            raise ConfigError(f"bad pair {pair!r}, expected like 'P1-P2'")
        try:
            k = int(parts[0][1:])
        except ValueError:
            raise ConfigError(f"bad pair {pair!r}") from None
        variant = (
            "unregularized"
            if isinstance(_SPACES[parts[1]], CrouzeixRaviart)
            else cfg.variant
        )
        mesh = _make_mesh(cfg, N)
        scheme, _ = _scheme(cfg, parts[1], cfg.ns[0], variant=variant, k=k)
        op = build_operator(scheme, mesh)
        Gv, Gw = triple_norm_grams(scheme, op.primal_space, op.dual_space)
        gram = sp.block_diag((Gv, Gw), format="csr")
        sigma = infsup_constant(op.matrix(), gram, gram)
        return ErrorReport(
            h=mesh.h,
            dofs_primal=op.n_primal,
            dofs_dual=op.n_dual,
            epsilon=scheme.eps_value,
            gamma=scheme.gamma,
            sigma_min=sigma,
        )

    meshes = sorted(set(cfg.eigen_meshes))
    jobs = [
        ((pair, N), (lambda p=pair, m=N: one(p, m)))
        for pair in cfg.pairs
        for N in meshes
    ]
    results = _run_jobs(jobs, cfg.threads)
    for pair in cfg.pairs:
        lines = [CSV_HEADER] + [
            results[(pair, N)].csv_row() for N in meshes
        ]
        summary.write(f"infsup_{pair.replace('-', '_')}.csv", lines)


def _exp_perturbation(cfg, summary):
    mesh = _make_mesh(cfg, cfg.mesh)
    base, hp = _scheme(cfg, cfg.duals[0], cfg.ns[0])
    op = build_operator(base, mesh)
    grams = triple_norm_grams(base, op.primal_space, op.dual_space)

    def one(delta):
        noisy = replace(base, noise=NoiseSpec(float(delta), cfg.noise_seed))
        noisy = perturb_data(noisy)
        system = op.with_rhs(*build_rhs(noisy, op.primal_space, op.dual_space))
        u_h, lam_h = solve_direct(system)
        return _report(noisy, mesh, u_h, lam_h, hp, grams, delta=float(delta))

    deltas = sorted(set(cfg.deltas))
    jobs = [(d, (lambda x=d: one(x))) for d in deltas]
    results = _run_jobs(jobs, cfg.threads)
    lines = [CSV_HEADER] + [results[d].csv_row() for d in deltas]
    summary.write("perturbation_sweep.csv", lines)


def _exp_coupling(cfg, summary):
    rule = cfg.coupling_rule
    if rule is None:
        rule = "l2stab" if cfg.variant == "l2stab" else "standard"

    def one(eps):
        h_star = couple_parameters(cfg.s, eps, rule)
        N = int(round(1.0 / h_star))
        if N < 1:
            N = 1
        if N > MAX_SOLVE_MESH:
            raise ConfigError(
                f"coupled mesh {N} for epsilon {eps:g} exceeds {MAX_SOLVE_MESH}"
            )
        mesh = _make_mesh(cfg, N)
        scheme, hp = _scheme(cfg, cfg.duals[0], cfg.ns[0], epsilon=eps)
        op = build_operator(scheme, mesh)
        grams = triple_norm_grams(scheme, op.primal_space, op.dual_space)
        system = op.with_rhs(*build_rhs(scheme, op.primal_space, op.dual_space))
        u_h, lam_h = solve_direct(system)
        return _report(scheme, mesh, u_h, lam_h, hp, grams)

    epsilons = sorted(set(cfg.coupling_epsilons))
    jobs = [(e, (lambda x=e: one(x))) for e in epsilons]
    results = _run_jobs(jobs, cfg.threads)
    reports = [results[e] for e in epsilons]
    lines = [CSV_HEADER] + [r.csv_row() for r in reports]
    if len({r.h for r in reports}) == len(reports):
        for col in ("l2_g", "h1_g"):
            summary.fit("parameter_coupling", reports, col)
    summary.write("parameter_coupling.csv", lines)


_RUNNERS = {
    "convergence": _exp_convergence,
    "error_field": _exp_error_field,
    "interior_rate": lambda cfg, s: _exp_convergence(
        cfg, s, g_only=True, prefix="interior_rate"
    ),
    "condition_sweep": _exp_condition,
    "infsup_sweep": _exp_infsup,
    "perturbation_sweep": _exp_perturbation,
    "parameter_coupling": _exp_coupling,
}


def run_experiment(config, experiment, out_dir=".", threads=None, seed=None):
    """Run one named experiment; config is a TOML path or a RunConfig.
    Returns {"files": [...], "rates": {...}} after printing the summary."""
    cfg = config if isinstance(config, RunConfig) else load_config(config)
    if threads is not None:
        cfg = replace(cfg, threads=int(threads))
    if seed is not None:
        cfg = replace(cfg, noise_seed=int(seed))
    _validate_config(cfg)
    if experiment not in _RUNNERS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    print(f"experiment: {experiment}")
    summary = _Summary(cfg, out_dir)
    _RUNNERS[experiment](cfg, summary)
    summary.check_thresholds()
    return {"files": summary.files, "rates": summary.rates}


_CONFIG_ERRORS = (
    ConfigError,
    MeshError,
    AssemblyError,
    tomllib.TOMLDecodeError,
    OSError,
    KeyError,
    TypeError,
    ValueError,
)
_NUMERICAL_ERRORS = (
    SolverError,
    ArpackError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qrfem", description="finite element continuation experiments"
    )
    parser.add_argument("--config", default=None, help="TOML config path")
    parser.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        run_experiment(
            args.config, args.experiment, args.out, args.threads, args.seed
        )
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
