"""HTTP service surface: every endpoint, validation failures, verify suite."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from lamelab.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_healthz(client):
    r = client.get("/healthz")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_mesh_endpoint_counts(client):
    r = client.post("/mesh", json={"geometry": {"n": 4}})
    assert r.status_code == 200
    body = r.json()
    assert body["vertex_count"] == 125
    assert body["solid_tets"] == 48
    assert body["fluid_tets"] == 336
    assert body["triangles_per_face"] == [8] * 6
    assert body["export"] is None


def test_mesh_endpoint_with_export(client):
    r = client.post("/mesh", json={"geometry": {"n": 4}, "include_export": True})
    assert r.json()["export"].startswith("vertices 125")


def test_mesh_endpoint_rejects_misaligned(client):
    r = client.post("/mesh", json={"geometry": {"n": 3}})
    assert r.status_code == 422


def test_simulate_endpoint(client):
    r = client.post("/simulate", json={"geometry": {"n": 4}, "dt": 0.05,
                                       "t_final": 1.0, "seed": 7})
    assert r.status_code == 200
    body = r.json()
    assert len(body["samples"]) == 21
    energies = [s["energy"] for s in body["samples"]]
    assert energies[0] == pytest.approx(1.0)     # normalized initial state
    assert np.all(np.diff(energies) <= 1e-12)
    assert body["final_energy"] == pytest.approx(energies[-1])
    residuals = [abs(s["residual"]) for s in body["samples"]]
    assert max(residuals) <= 1e-10


def test_simulate_endpoint_determinism(client):
    payload = {"geometry": {"n": 4}, "dt": 0.1, "t_final": 0.5, "seed": 11}
    a = client.post("/simulate", json=payload).json()
    b = client.post("/simulate", json=payload).json()
    assert a == b


def test_spectrum_endpoint(client):
    r = client.post("/spectrum", json={"geometry": {"n": 4}, "k": 3})
    assert r.status_code == 200
    body = r.json()
    vals = [s["eigenvalue"] for s in body["samples"]]
    assert len(vals) == 3
    assert all(v > 0 for v in vals)
    assert vals == sorted(vals)
    assert body["frequencies"] == pytest.approx([v**0.5 for v in vals])


def test_sweep_endpoint(client):
    r = client.post("/resolvent-sweep", json={
        "geometry": {"n": 4}, "alpha_decades": 4, "betas": [0.7, 3.1], "n_data": 2,
    })
    assert r.status_code == 200
    body = r.json()
    assert len(body["samples"]) == 2 * 4
    assert body["tail_monotone"] is True
    assert all(s["static_residual"] <= 1e-9 for s in body["samples"])


def test_sweep_endpoint_rejects_excluded_beta(client):
    r = client.post("/resolvent-sweep", json={"geometry": {"n": 4}, "betas": [0.1]})
    assert r.status_code == 422


def test_service_matches_cli_artifacts(client, tmp_path):
    # The CLI is a thin client over the same compute layer: identical config
    # and seed must give value-identical results across both surfaces.
    from lamelab.config import RunConfig
    from lamelab.runner import run

    cfg = RunConfig(n=4, dt=0.1, t_final=1.0, seed=77)
    assert run("simulate", cfg, outdir=str(tmp_path)) == 0
    csv_rows = (tmp_path / "simulate.csv").read_text().splitlines()[1:]
    cli_energy = [float(r.split(",")[1]) for r in csv_rows]

    r = client.post("/simulate", json={"geometry": {"n": 4}, "dt": 0.1,
                                       "t_final": 1.0, "seed": 77})
    svc_energy = [s["energy"] for s in r.json()["samples"]]
    assert svc_energy == cli_energy


def test_verify_endpoint(client):
    r = client.post("/verify", json={"geometry": {"n": 4}, "seed": 5})
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is True
    names = {c["name"] for c in body["checks"]}
    assert {"dissipativity_identity", "energy_identity", "sweep_final_ratio",
            "spectrum_dense_match", "z_split_interior",
            "traction_convergence_order"} <= names
    assert all(c["passed"] for c in body["checks"])
