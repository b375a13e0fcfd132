"""Experiment orchestration: compute functions plus file-writing wrappers.

``compute_*`` functions return plain report objects (used by the HTTP service
and the tests); ``run`` wraps them with CSV/manifest output and exit codes:
0 success, 1 failed check, 2 usage or configuration error.

All randomness is drawn from seed-sequence streams derived from the config
seed, and every CSV value is printed with 17 significant digits, so repeated
runs with the same config are byte-identical.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import assemble_system, build_dof_map, energy_norm
from .config import RunConfig, serialize_config
from .elements import LameParams
from .errors import LamelabError, ValidationError
from .evolution import EvolutionConfig, check_energy_identity, simulate
from .geometry import build_mesh, export_mesh
from .resolvent import (
    HarmonicExtension,
    ResolventQuery,
    ResolventSolver,
    dirichlet_lame_eigs,
    dirichlet_lame_eigs_dense,
    excluded_frequencies,
    hille_yosida_ratio,
    static_dissipation_check,
    thin_identity_check,
    tomilov_sweep,
    traction_discrepancy,
    traction_trace,
    z_decomposition_check,
)

SUBCOMMANDS = ("mesh", "simulate", "resolvent-sweep", "spectrum", "verify")

_FMT = "{:.17g}".format


@dataclass
class CheckRow:
    """One verified property: name, pass flag, measured value, tolerance."""

    name: str
    passed: bool
    value: float
    tol: float

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)
        self.tol = float(self.tol)


def _rng(cfg: RunConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, stream])


def _initial_state(cfg: RunConfig, mats, stream: int = 0) -> np.ndarray:
    X0 = mats.dofs.random_state(_rng(cfg, stream))
    return X0 / energy_norm(mats.M_E, X0)


# ---------------------------------------------------------------------------
# compute layer
# ---------------------------------------------------------------------------


def compute_mesh(cfg: RunConfig):
    mesh = build_mesh(cfg.geometry())
    return mesh, export_mesh(mesh)


def compute_simulate(cfg: RunConfig):
    mesh = build_mesh(cfg.geometry())
    mats = assemble_system(mesh, params=cfg.material())
    return simulate(mats, _initial_state(cfg, mats), cfg.evolution())


def compute_spectrum(cfg: RunConfig):
    mesh = build_mesh(cfg.geometry())
    dofs = build_dof_map(mesh)
    k = min(cfg.spectrum_k, 3 * dofs.n_int)
    return dirichlet_lame_eigs(mesh, cfg.material(), k, dofs=dofs)


def compute_sweep(cfg: RunConfig):
    mesh = build_mesh(cfg.geometry())
    mats = assemble_system(mesh, params=cfg.material())
    spectrum = excluded_frequencies(mats, beta_cap=max(abs(b) for b in cfg.betas))
    for b in cfg.betas:
        if spectrum.distance(b) < cfg.beta_margin:
            raise ValidationError(
                "betas", f"beta={b:g} is within {cfg.beta_margin:g} of the excluded set"
            )
    rng = _rng(cfg, 1)
    data = [mats.dofs.random_state(rng) for _ in range(cfg.n_data)]
    return tomilov_sweep(mats, cfg.betas, cfg.alphas(), data, spectrum=spectrum)


# -- manufactured smooth field for the traction refinement study -----------

_WAVE_A = np.array([[1.0, 0.7, -0.4], [-0.5, 1.1, 0.8], [0.3, -0.6, 0.9]])
_WAVE_B = np.array([0.1, 0.2, 0.3])


def manufactured_field(points: np.ndarray, params: LameParams):
    """Smooth displacement v_i = sin(a_i . x + b_i) and its body force.

    Returns (v, f) with f = -div sigma(v), both (n_points, 3), for use as
    traction-recovery data.
    """
    phase = points @ _WAVE_A.T + _WAVE_B          # (n, 3): a_i . x + b_i
    v = np.sin(phase)
    f = np.empty_like(v)
    mu, lam = params.mu, params.lam
    norms2 = np.sum(_WAVE_A**2, axis=1)
    diag = np.diag(_WAVE_A)                       # a_{k,k}
    for i in range(3):
        f[:, i] = mu * norms2[i] * np.sin(phase[:, i])
        for k in range(3):
            f[:, i] += (mu + lam) * diag[k] * _WAVE_A[k, i] * np.sin(phase[:, k])
    return v, f


def _aligned_base_resolution(cfg: RunConfig) -> int:
    """Smallest n >= 4 whose grid planes carry the configured inner box."""
    for n in range(4, 65):
        try:
            RunConfig(n=n, inner_lo=cfg.inner_lo, inner_hi=cfg.inner_hi).geometry().validate()
            return n
        except LamelabError:
            continue
    raise ValidationError("inner_lo", "no aligned refinement base up to n=64")


def _traction_study(cfg: RunConfig, resolutions=None) -> tuple[np.ndarray, float]:
    """Pointwise-vs-variational traction gap under refinement: (gaps, order)."""
    params = cfg.material()
    if resolutions is None:
        base = _aligned_base_resolution(cfg)
        resolutions = (base, 2 * base, 4 * base)
    gaps = []
    for n in resolutions:
        mesh = build_mesh(RunConfig(n=n, inner_lo=cfg.inner_lo,
                                    inner_hi=cfg.inner_hi).geometry())
        dofs = build_dof_map(mesh)
        from .assembly import assemble_blocks

        blocks = assemble_blocks(mesh, dofs, params)
        pts = mesh.vertices[dofs.solid_vertices]
        v, f = manufactured_field(pts, params)
        num = den = 0.0
        for j in range(1, mesh.K + 1):
            tt = traction_trace(mesh, params, v, j, body_force=f, dofs=dofs, blocks=blocks)
            gap = traction_discrepancy(mesh, tt)
            area = mesh.face_area(j)
            num += area * gap**2
            den += area
        gaps.append(float(np.sqrt(num / den)))
    gaps = np.asarray(gaps)
    orders = np.log2(gaps[:-1] / gaps[1:])
    return gaps, float(orders.min())


def compute_verify(cfg: RunConfig) -> list[CheckRow]:
    """Run every invariant suite at the configured resolution."""
    checks: list[CheckRow] = []
    mesh = build_mesh(cfg.geometry())
    mats = assemble_system(mesh, params=cfg.material())
    dofs = mats.dofs

    # mesh invariants
    mesh_checks = mesh.validate()
    checks.append(CheckRow("mesh_invariants", all(ok for _, ok, _ in mesh_checks),
                           float(sum(not ok for _, ok, _ in mesh_checks)), 0.0))

    # generator structure: exact skew/dissipative split
    S, N = mats.skew_split()
    skew_defect = float(abs(S + S.T).max()) if (S + S.T).nnz else 0.0
    checks.append(CheckRow("generator_split_skew", skew_defect == 0.0, skew_defect, 0.0))

    # 1. dissipativity identity on random states
    rng = _rng(cfg, 2)
    worst = 0.0
    for _ in range(100):
        Z = dofs.random_state(rng, complex_valued=True)
        res = abs(np.vdot(Z, mats.B @ Z).real + mats.grad_energy(Z))
        worst = max(worst, res / energy_norm(mats.M_E, Z) ** 2)
    checks.append(CheckRow("dissipativity_identity", worst <= 1e-10, worst, 1e-10))

    # 2. energy identity for the midpoint scheme
    trace = simulate(mats, _initial_state(cfg, mats),
                     EvolutionConfig(dt=cfg.dt, t_final=cfg.t_final, theta=0.5,
                                     sample_every=cfg.sample_every))
    report = check_energy_identity(trace, tol=1e-8)
    checks.append(CheckRow("energy_identity", report.passed, report.worst_residual, 1e-8))

    # 3. contraction of the implicit scheme at several steps
    for dt in (0.5, 0.05, 0.005):
        tr = simulate(mats, _initial_state(cfg, mats),
                      EvolutionConfig(dt=dt, t_final=cfg.t_final, theta=1.0,
                                      sample_every=1))
        rises = float(np.max(np.diff(tr.energy), initial=-np.inf))
        checks.append(CheckRow(f"contraction_dt_{dt:g}", rises <= 0.0, max(rises, 0.0), 0.0))

    # 4. decay trend on the default run
    half = int(np.searchsorted(trace.times, cfg.t_final / 2.0))
    ratio = float(trace.energy[-1] / trace.energy[half])
    checks.append(CheckRow("decay_trend", ratio < 1.0, ratio, 1.0))

    # 5./6. static dissipation relation + contraction bound on random solves
    solver = ResolventSolver(mats)
    rng = _rng(cfg, 3)
    worst_static, worst_hy = 0.0, 0.0
    for _ in range(50):
        alpha = 10.0 ** rng.uniform(-6, 0)
        beta = rng.uniform(-10, 10)
        q = ResolventQuery(alpha=alpha, beta=beta, X_star=dofs.random_state(rng))
        X = solver.solve(q)
        worst_static = max(worst_static, static_dissipation_check(mats, q, X))
        worst_hy = max(worst_hy, hille_yosida_ratio(mats, q, X))
    checks.append(CheckRow("static_dissipation", worst_static <= 1e-9, worst_static, 1e-9))

    # 7. vanishing-resolvent sweep
    sweep = compute_sweep(cfg)
    worst_hy = max(worst_hy, float(sweep.hy_ratios.max()))
    checks.append(CheckRow("hille_yosida_bound", worst_hy <= 1.0 + 1e-9, worst_hy, 1.0 + 1e-9))
    monotone = bool(sweep.tail_monotone.all())
    checks.append(CheckRow("sweep_tail_monotone", monotone,
                           float(sweep.tail_monotone.mean()), 1.0))
    final_ratio = float((sweep.values[:, :, -1] / sweep.values[:, :, 0]).max())
    checks.append(CheckRow("sweep_final_ratio", final_ratio <= 0.1, final_ratio, 0.1))
    margin = float(min(sweep.dist_to_S.min() - cfg.beta_margin, 0.0))
    checks.append(CheckRow("sweep_beta_margin", margin == 0.0, margin, 0.0))

    # 8. clamped-solid spectrum vs dense oracle, and parameter homogeneity
    k = min(cfg.spectrum_k, 3 * dofs.n_int)
    eig_rep = dirichlet_lame_eigs(mesh, cfg.material(), k, dofs=dofs, blocks=mats.blocks)
    dense = dirichlet_lame_eigs_dense(mesh, cfg.material(), dofs=dofs, blocks=mats.blocks)
    gap = float(np.max(np.abs(eig_rep.eigenvalues - dense[:k]) / dense[:k]))
    checks.append(CheckRow("spectrum_dense_match", gap <= 1e-8, gap, 1e-8))
    checks.append(CheckRow("spectrum_residuals", float(eig_rep.residuals.max()) <= 1e-8,
                           float(eig_rep.residuals.max()), 1e-8))
    doubled = dirichlet_lame_eigs(mesh, cfg.material().scaled(2.0), k, dofs=dofs)
    hom = float(np.max(np.abs(doubled.eigenvalues - 2.0 * eig_rep.eigenvalues)
                       / (2.0 * eig_rep.eigenvalues)))
    checks.append(CheckRow("spectrum_homogeneity", hom <= 1e-12, hom, 1e-12))

    # 9. harmonic extension identity and zero-trace splitting
    ext = HarmonicExtension(mesh, cfg.material(), dofs, mats.blocks)
    g = mesh.vertices[dofs.iface_vertices]
    v = ext.extend(g)
    d_err = float(np.abs(v - mesh.vertices[dofs.solid_vertices]).max())
    checks.append(CheckRow("dirichlet_map_identity", d_err <= 1e-12, d_err, 1e-12))

    rng = _rng(cfg, 4)
    worst_tr = worst_in = worst_thin = 0.0
    for _ in range(20):
        alpha = 10.0 ** rng.uniform(-4, 0)
        beta = rng.uniform(0.5, 10.0) * rng.choice([-1.0, 1.0])
        q = ResolventQuery(alpha=alpha, beta=beta, X_star=dofs.random_state(rng))
        X = solver.solve(q)
        z = z_decomposition_check(mats, q, X, extension=ext)
        worst_tr = max(worst_tr, z.trace_residual)
        worst_in = max(worst_in, z.interior_residual)
        worst_thin = max(worst_thin, thin_identity_check(mats, q, X))
    checks.append(CheckRow("z_split_trace", worst_tr <= 1e-9, worst_tr, 1e-9))
    checks.append(CheckRow("z_split_interior", worst_in <= 1e-9, worst_in, 1e-9))
    checks.append(CheckRow("thin_momentum_balance", worst_thin <= 1e-9, worst_thin, 1e-9))

    # 10. traction: exactness on the linear field, then refinement order
    scale = 2 * cfg.mu + 3 * cfg.lam
    vx = mesh.vertices[dofs.solid_vertices]
    worst_exact = 0.0
    for j in range(1, mesh.K + 1):
        tt = traction_trace(mesh, cfg.material(), vx, j, dofs=dofs, blocks=mats.blocks)
        nu = mesh.face_frames[j - 1, 0]
        worst_exact = max(worst_exact, float(np.abs(tt.pointwise - scale * nu).max()),
                          float(np.abs(tt.variational - scale * nu).max()))
    worst_exact /= scale
    checks.append(CheckRow("traction_linear_exact", worst_exact <= 1e-12, worst_exact, 1e-12))
    _, order = _traction_study(cfg)
    checks.append(CheckRow("traction_convergence_order", order >= 0.9, order, 0.9))

    return checks


# ---------------------------------------------------------------------------
# artifact layer
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(_FMT(x) if isinstance(x, float) else str(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(path: Path, cfg: RunConfig, subcommand: str,
                    timings: dict[str, float]) -> None:
    lines = [
        f"subcommand = {subcommand}",
        f"lamelab = {__version__}",
        f"python = {sys.version.split()[0]}",
        f"numpy = {np.__version__}",
    ]
    import scipy

    lines.append(f"scipy = {scipy.__version__}")
    for name, t in timings.items():
        lines.append(f"timing_{name}_s = {t:.3f}")
    lines.append("# configuration echo")
    lines.append(serialize_config(cfg).rstrip("\n"))
    path.write_text("\n".join(lines) + "\n")


def run(subcommand: str, cfg: RunConfig, outdir: str | None = None) -> int:
    """Execute one subcommand, writing artifacts plus a manifest.

    Exit code 0 on success, 1 on failed checks (partial artifacts kept and a
    FAILED marker written), 2 on usage or configuration errors.
    """
    if subcommand not in SUBCOMMANDS:
        print(f"unknown subcommand {subcommand!r}; expected one of {SUBCOMMANDS}",
              file=sys.stderr)
        return 2
    try:
        cfg.validate()
    except (ValidationError, LamelabError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out = Path(outdir if outdir is not None else cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    failed_checks: list[str] = []

    try:
        if subcommand == "mesh":
            mesh, text = compute_mesh(cfg)
            (out / "mesh.txt").write_text(text)
            bad = [name for name, ok, _ in mesh.validate() if not ok]
            failed_checks.extend(f"mesh:{b}" for b in bad)

        elif subcommand == "simulate":
            trace = compute_simulate(cfg)
            rows = zip(trace.times, trace.energy, trace.dissipated, trace.residual)
            _write_csv(out / "simulate.csv", "t,E,Q,residual",
                       ((float(t), float(e), float(q), float(r)) for t, e, q, r in rows))

        elif subcommand == "resolvent-sweep":
            sweep = compute_sweep(cfg)
            _write_csv(out / "resolvent-sweep.csv",
                       "beta,alpha,sqrt_alpha_norm,static_residual,dist_to_S",
                       sweep.rows())

        elif subcommand == "spectrum":
            eig_rep = compute_spectrum(cfg)
            rows = [(str(i + 1), float(lam), float(res))
                    for i, (lam, res) in enumerate(zip(eig_rep.eigenvalues,
                                                       eig_rep.residuals))]
            _write_csv(out / "spectrum.csv", "k,lambda,residual", rows)

        elif subcommand == "verify":
            checks = compute_verify(cfg)
            rows = [(c.name, str(int(c.passed)), float(c.value), float(c.tol))
                    for c in checks]
            _write_csv(out / "verify.csv", "check,passed,value,tol", rows)
            failed_checks.extend(c.name for c in checks if not c.passed)

    except (ValidationError,) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except LamelabError as exc:
        (out / "FAILED").write_text(f"{subcommand}: {exc}\n")
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    finally:
        timings["total"] = time.perf_counter() - t0
        _write_manifest(out / "manifest.txt", cfg, subcommand, timings)

    if failed_checks:
        (out / "FAILED").write_text("\n".join(failed_checks) + "\n")
        print(f"{len(failed_checks)} check(s) failed: {', '.join(failed_checks)}",
              file=sys.stderr)
        return 1
    return 0
