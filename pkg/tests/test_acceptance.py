"""Acceptance suite: the eleven property-based criteria at desk scale.

Each test prints one PASS/FAIL line.  Default resolution n=8; the refinement
study uses n in {4, 8, 16}.  Run with  ``pytest tests/test_acceptance.py -s``.
"""

import filecmp

import numpy as np
import pytest

from lamelab.assembly import assemble_system, energy_norm
from lamelab.config import RunConfig
from lamelab.evolution import EvolutionConfig, check_energy_identity, simulate
from lamelab.geometry import build_mesh
from lamelab.resolvent import (
    HarmonicExtension,
    ResolventQuery,
    ResolventSolver,
    dirichlet_lame_eigs,
    dirichlet_lame_eigs_dense,
    hille_yosida_ratio,
    static_dissipation_check,
    tomilov_sweep,
    traction_trace,
    z_decomposition_check,
)
from lamelab.runner import _traction_study, run


def _report(num: int, name: str, passed: bool, detail: str) -> None:
    print(f"criterion {num:2d} [{'PASS' if passed else 'FAIL'}] {name}: {detail}")


@pytest.fixture(scope="module")
def cfg():
    return RunConfig()          # n=8, T=20, dt=0.05, seed 1234


@pytest.fixture(scope="module")
def mats(cfg):
    return assemble_system(build_mesh(cfg.geometry()), params=cfg.material())


@pytest.fixture(scope="module")
def default_trace(cfg, mats):
    rng = np.random.default_rng(cfg.seed)
    X0 = mats.dofs.random_state(rng)
    X0 /= energy_norm(mats.M_E, X0)
    return simulate(mats, X0, cfg.evolution())


def test_criterion_01_dissipativity(mats):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        Z = mats.dofs.random_state(rng, complex_valued=True)
        defect = abs(np.vdot(Z, mats.B @ Z).real + mats.grad_energy(Z))
        worst = max(worst, defect / energy_norm(mats.M_E, Z) ** 2)
    passed = worst <= 1e-10
    _report(1, "dissipativity identity", passed, f"worst {worst:.3e} <= 1e-10")
    assert passed


def test_criterion_02_energy_identity(default_trace):
    report = check_energy_identity(default_trace, tol=1e-8)
    _report(2, "midpoint energy identity", report.passed,
            f"worst pairwise residual {report.worst_residual:.3e} <= 1e-8")
    assert report.passed


def test_criterion_03_contraction(cfg, mats):
    rng = np.random.default_rng(103)
    X0 = mats.dofs.random_state(rng)
    X0 /= energy_norm(mats.M_E, X0)
    worst_rise = -np.inf
    for dt in (0.5, 0.05, 0.005):
        trace = simulate(mats, X0, EvolutionConfig(dt=dt, t_final=cfg.t_final, theta=1.0))
        worst_rise = max(worst_rise, float(np.max(np.diff(trace.energy))))
    passed = worst_rise <= 0.0
    _report(3, "implicit-Euler contraction", passed,
            f"largest energy increment {worst_rise:.3e} <= 0 (no tolerance)")
    assert passed


def test_criterion_04_decay_trend(cfg, default_trace):
    half = int(np.searchsorted(default_trace.times, cfg.t_final / 2))
    e0 = default_trace.energy[0]
    ratio_half = default_trace.energy[half] / e0
    ratio_full = default_trace.energy[-1] / e0
    budget = check_energy_identity(default_trace, tol=1e-8).passed
    passed = (ratio_full < ratio_half) and budget
    _report(4, "strong decay trend", passed,
            f"E(T)/E0 = {ratio_full:.4f} < E(T/2)/E0 = {ratio_half:.4f}, budget closed")
    assert passed


@pytest.fixture(scope="module")
def random_solves(mats):
    rng = np.random.default_rng(105)
    solver = ResolventSolver(mats)
    out = []
    for _ in range(50):
        alpha = 10.0 ** rng.uniform(-6, 0)
        beta = rng.uniform(-10.0, 10.0)
        q = ResolventQuery(alpha=alpha, beta=beta, X_star=mats.dofs.random_state(rng))
        out.append((q, solver.solve(q)))
    return out


def test_criterion_05_static_dissipation(mats, random_solves):
    worst = max(static_dissipation_check(mats, q, X) for q, X in random_solves)
    passed = worst <= 1e-9
    _report(5, "static dissipation relation", passed, f"worst {worst:.3e} <= 1e-9")
    assert passed


@pytest.fixture(scope="module")
def sweep(cfg, mats):
    rng = np.random.default_rng(107)
    data = [mats.dofs.random_state(rng) for _ in range(3)]
    return tomilov_sweep(mats, cfg.betas, cfg.alphas(), data)


def test_criterion_06_hille_yosida(mats, random_solves, sweep):
    worst = max(hille_yosida_ratio(mats, q, X) for q, X in random_solves)
    worst = max(worst, float(sweep.hy_ratios.max()))
    passed = worst <= 1.0 + 1e-9
    _report(6, "contraction resolvent bound", passed, f"worst ratio {worst:.6f} <= 1+1e-9")
    assert passed


def test_criterion_07_resolvent_sweep(cfg, sweep):
    margins = sweep.dist_to_S
    tail_ok = bool(sweep.tail_monotone.all())
    final_ratio = float((sweep.values[:, :, -1] / sweep.values[:, :, 0]).max())
    passed = tail_ok and final_ratio <= 0.1 and bool((margins >= cfg.beta_margin).all())
    _report(7, "vanishing-resolvent sweep", passed,
            f"tails monotone over alpha 1e-5..1e-8: {tail_ok}, "
            f"final/initial {final_ratio:.2e} <= 0.1, min dist {margins.min():.2f}")
    assert passed


def test_criterion_08_clamped_spectrum(cfg, mats):
    # Solid block at 4 cells per axis (the default n=8 geometry).
    mesh = mats.mesh
    spec = dirichlet_lame_eigs(mesh, cfg.material(), 10, dofs=mats.dofs,
                               blocks=mats.blocks)
    dense = dirichlet_lame_eigs_dense(mesh, cfg.material(), dofs=mats.dofs,
                                      blocks=mats.blocks)
    gap = float(np.max(np.abs(spec.eigenvalues - dense[:10]) / dense[:10]))
    doubled = dirichlet_lame_eigs(mesh, cfg.material().scaled(2.0), 10, dofs=mats.dofs)
    hom = float(np.max(np.abs(doubled.eigenvalues - 2 * spec.eigenvalues)
                       / (2 * spec.eigenvalues)))
    passed = gap <= 1e-8 and hom <= 1e-12
    _report(8, "clamped-solid spectrum", passed,
            f"dense-oracle gap {gap:.3e} <= 1e-8, homogeneity {hom:.3e} <= 1e-12")
    assert passed


def test_criterion_09_extension_and_splitting(cfg, mats):
    ext = HarmonicExtension(mats.mesh, cfg.material(), mats.dofs, mats.blocks)
    g = mats.mesh.vertices[mats.dofs.iface_vertices]
    v = ext.extend(g)
    d_err = float(np.abs(v - mats.mesh.vertices[mats.dofs.solid_vertices]).max())

    rng = np.random.default_rng(109)
    solver = ResolventSolver(mats)
    worst_tr = worst_in = 0.0
    for _ in range(20):
        alpha = 10.0 ** rng.uniform(-4, 0)
        beta = rng.uniform(0.5, 10.0) * rng.choice([-1.0, 1.0])
        q = ResolventQuery(alpha=alpha, beta=beta, X_star=mats.dofs.random_state(rng))
        rep = z_decomposition_check(mats, q, solver.solve(q), extension=ext)
        worst_tr = max(worst_tr, rep.trace_residual)
        worst_in = max(worst_in, rep.interior_residual)
    passed = d_err <= 1e-12 and worst_tr <= 1e-9 and worst_in <= 1e-9
    _report(9, "harmonic extension + zero-trace split", passed,
            f"D(x)=x gap {d_err:.2e} <= 1e-12, trace {worst_tr:.2e}, "
            f"interior {worst_in:.2e} <= 1e-9")
    assert passed


def test_criterion_10_traction(cfg, mats):
    params = cfg.material()
    scale = 2 * params.mu + 3 * params.lam
    v = mats.mesh.vertices[mats.dofs.solid_vertices]
    worst = 0.0
    for j in range(1, 7):
        tt = traction_trace(mats.mesh, params, v, j, dofs=mats.dofs, blocks=mats.blocks)
        nu = mats.mesh.face_frames[j - 1, 0]
        worst = max(worst, float(np.abs(tt.pointwise - scale * nu).max()) / scale,
                    float(np.abs(tt.variational - scale * nu).max()) / scale)
    gaps, order = _traction_study(cfg, resolutions=(4, 8, 16))
    passed = worst <= 1e-12 and order >= 0.9
    _report(10, "boundary traction", passed,
            f"linear-field gap {worst:.2e} <= 1e-12, observed order {order:.3f} >= 0.9 "
            f"(gaps {gaps[0]:.3e} -> {gaps[1]:.3e} -> {gaps[2]:.3e})")
    assert passed


def test_criterion_11_determinism(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    code_a = run("verify", cfg, outdir=str(a))
    code_b = run("verify", cfg, outdir=str(b))
    identical = filecmp.cmp(a / "verify.csv", b / "verify.csv", shallow=False)
    passed = code_a == 0 and code_b == 0 and identical
    _report(11, "verify determinism", passed,
            f"exit codes ({code_a}, {code_b}), verify.csv byte-identical: {identical}")
    assert passed
