import json
import math

import numpy as np
import pytest

import okpc


def test_mesh_and_matrices():
    mesh = okpc.Mesh(1, 2)
    assert mesh.num_vertices == 3
    m = okpc.mass_matrix(mesh)
    np.testing.assert_allclose(m[1], [1 / 12, 1 / 3, 1 / 12], atol=1e-15)
    s = okpc.stiffness_matrix(mesh)
    np.testing.assert_allclose(s @ np.ones(3), 0.0, atol=1e-14)
    ell = okpc.weighted_mass_matrix(mesh, np.ones(3))
    np.testing.assert_allclose(ell, m, atol=1e-14)


def test_bad_mesh_raises():
    with pytest.raises(okpc.Error):
        okpc.Mesh(2, 1)


def test_initial_condition_mean():
    mesh = okpc.Mesh(2, 8)
    u = okpc.initial_condition(mesh, 0.3, 0.2, 5)
    m = okpc.mass_matrix(mesh)
    mean = np.ones_like(u) @ m @ u / (np.ones_like(u) @ m @ np.ones_like(u))
    assert abs(mean - 0.3) < 1e-14


def test_inverse_laplacian_cosine():
    mesh = okpc.Mesh(1, 128)
    x = mesh.coordinates[:, 0]
    v = np.cos(math.pi * x)
    phi = okpc.inverse_laplacian(mesh, v)
    assert np.max(np.abs(phi - v / math.pi**2)) < 1e-4


def test_run_energy_and_mass():
    mesh = okpc.Mesh(1, 64)
    p = okpc.Params()
    p.eps, p.sigma, p.dt, p.T, p.m, p.amplitude = 0.05, 100.0, 0.0025, 0.05, 0.2, 0.5
    cfg = okpc.PrecondConfig()
    cfg.kind = okpc.PrecondKind.MHSS
    r = okpc.run(mesh, p, cfg)
    assert r["completed"]
    e = r["energy"]
    assert np.all(np.diff(e) <= 1e-10 * np.abs(e[:-1]))
    assert np.max(np.abs(r["mass"] - 0.2)) < 1e-8
    assert r["T_pc"] == sum(r["fp_iters"])
    assert r["IT"] > 0


def test_certificates_small_instance():
    mesh = okpc.Mesh(1, 40)
    p = okpc.Params()
    u = okpc.initial_condition(mesh, 0.4, 0.5, 1)
    c = okpc.certificates(mesh, u, p)
    assert c["bt"]["bound"]["violations"] == 0
    assert c["mhss"]["identity_gmres_iterations"] == 1
    ev = okpc.spectrum(mesh, u, p)
    assert ev.shape == (2 * mesh.num_vertices,)


def test_alpha_helpers():
    assert okpc.alpha_optimal(1.0, 3.0) == pytest.approx(1.5)
    assert okpc.sigma_tilde(1.5, np.array([1.0, 3.0])) == pytest.approx(0.5)


def test_condition_numbers_grow():
    p = okpc.Params()
    rows = okpc.condition_numbers([30, 60], p)
    assert rows[1][2] > rows[0][2]


def test_run_command(tmp_path):
    cfg = {
        "mesh": {"dim": 1, "n": 20},
        "params": {"eps": 0.1, "sigma": 100, "dt": 0.01, "m": 0.1, "T": 0.02, "amplitude": 0.3},
        "output": {"dir": str(tmp_path / "out")},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, _ = okpc.run_command("run", str(path))
    assert code == 0
    assert (tmp_path / "out" / "energy.csv").exists()
    with pytest.raises(okpc.ConfigError):
        okpc.run_command("run", str(path), ["params.bogus=1"])
