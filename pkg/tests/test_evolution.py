"""Theta-scheme stepping, energy budget, contraction, reversibility."""

import numpy as np
import pytest

from lamelab.assembly import assemble_system, energy_norm
from lamelab.errors import IdentityViolated, ValidationError
from lamelab.evolution import (
    EvolutionConfig,
    ThetaStepper,
    check_energy_identity,
    simulate,
    step_theta,
)
from lamelab.geometry import GeometryConfig, build_mesh


@pytest.fixture(scope="module")
def mats():
    return assemble_system(build_mesh(GeometryConfig(n=4)))


def test_config_validation():
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=0.0).validate()
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=1.0, t_final=0.5).validate()
    with pytest.raises(ValidationError):
        EvolutionConfig(theta=0.3).validate()
    with pytest.raises(ValidationError):
        EvolutionConfig(sample_every=0).validate()
    EvolutionConfig().validate()


def test_zero_state_stays_zero(mats):
    X = np.zeros(mats.n_dofs)
    assert np.abs(step_theta(mats, X, 0.1, 1.0)).max() == 0.0
    trace = simulate(mats, X, EvolutionConfig(dt=0.1, t_final=1.0))
    assert np.abs(trace.energy).max() == 0.0
    assert np.abs(trace.residual).max() == 0.0
    assert check_energy_identity(trace).passed


def test_backward_euler_contracts_every_step(mats):
    rng = np.random.default_rng(0)
    for dt in (0.5, 0.05):
        X = mats.dofs.random_state(rng)
        for _ in range(10):
            Xn = step_theta(mats, X, dt, 1.0)
            assert energy_norm(mats.M_E, Xn) <= energy_norm(mats.M_E, X)
            X = Xn


def test_midpoint_single_step_energy_identity(mats):
    # E_1 - E_0 = -2 dt ||grad u||^2 at the midpoint state, exactly.
    rng = np.random.default_rng(1)
    X0 = mats.dofs.random_state(rng)
    dt = 0.05
    X1 = step_theta(mats, X0, dt, 0.5)
    e0 = energy_norm(mats.M_E, X0) ** 2
    e1 = energy_norm(mats.M_E, X1) ** 2
    mid = 0.5 * (X0 + X1)
    assert abs(e1 - e0 + 2 * dt * mats.grad_energy(mid)) <= 1e-10 * e0


def test_simulate_budget_and_row_count(mats):
    rng = np.random.default_rng(2)
    X0 = mats.dofs.random_state(rng)
    X0 /= energy_norm(mats.M_E, X0)
    cfg = EvolutionConfig(dt=0.05, t_final=2.0, theta=0.5, sample_every=4)
    trace = simulate(mats, X0, cfg)
    assert len(trace) == int(cfg.t_final / (cfg.dt * cfg.sample_every)) + 1
    report = check_energy_identity(trace, tol=1e-8)
    assert report.passed
    assert report.worst_residual <= 1e-8


def test_monotone_energy_for_dissipative_thetas(mats):
    rng = np.random.default_rng(3)
    X0 = mats.dofs.random_state(rng)
    for theta in (0.75, 1.0):
        trace = simulate(mats, X0, EvolutionConfig(dt=0.2, t_final=4.0, theta=theta))
        assert np.all(np.diff(trace.energy) <= 0.0)
        # strict decay while the heat component is active
        assert trace.energy[-1] < trace.energy[0]


def test_energy_identity_catches_corruption(mats):
    rng = np.random.default_rng(4)
    X0 = mats.dofs.random_state(rng)
    X0 /= energy_norm(mats.M_E, X0)
    trace = simulate(mats, X0, EvolutionConfig(dt=0.05, t_final=1.0))
    k = 7
    trace.energy[k] *= 1.01
    trace.residual[:] = trace.energy + trace.dissipated - trace.energy[0]
    report = check_energy_identity(trace, tol=1e-8)
    assert not report.passed
    assert k in report.worst_indices
    with pytest.raises(IdentityViolated):
        check_energy_identity(trace, tol=1e-8, raise_on_fail=True)


def test_reversibility_of_conservative_core(mats):
    # With the skew part only, a midpoint step is exactly reversible and
    # energy-conserving.
    S, _ = mats.skew_split()
    rng = np.random.default_rng(5)
    X0 = mats.dofs.random_state(rng)
    fwd = ThetaStepper(mats.M_E, S, 0.05, 0.5)
    bwd = ThetaStepper(mats.M_E, S, -0.05, 0.5)
    X1 = fwd.step(X0)
    assert abs(energy_norm(mats.M_E, X1) - energy_norm(mats.M_E, X0)) \
        <= 1e-10 * energy_norm(mats.M_E, X0)
    X2 = bwd.step(X1)
    assert np.linalg.norm(X2 - X0) <= 1e-10 * np.linalg.norm(X0)


def test_simulate_with_skew_generator_conserves(mats):
    S, _ = mats.skew_split()
    rng = np.random.default_rng(6)
    X0 = mats.dofs.random_state(rng)
    trace = simulate(mats, X0, EvolutionConfig(dt=0.1, t_final=1.0), generator=S)
    e = trace.energy
    assert np.abs(e - e[0]).max() <= 1e-9 * e[0]
