"""Element kernel tests against independent quadrature oracles.

The oracles below use closed-form reference-tet shape functions with
hand-written gradients and direct tensor algebra (no Voigt bookkeeping), plus
degree-2 quadrature rules, so they share no code path with the kernels.
"""

import numpy as np
import pytest

from lamelab.elements import (
    LameParams,
    tet_grad_stiffness,
    tet_lame_stiffness,
    tet_mass,
    tri_grad_stiffness,
    tri_mass,
    tri_plane_lame_stiffness,
    tri_thin_lame_stiffness,
)
from lamelab.errors import DegenerateTet, DegenerateTriangle, ValidationError

REF_TET = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
# Hand-written gradients of (1 - x - y - z, x, y, z).
REF_GRADS = np.array([[-1.0, -1, -1], [1, 0, 0], [0, 1, 0], [0, 0, 1]])

# Degree-2 quadrature on the reference tet (equal weights vol/4).
_TA, _TB = 0.5854101966249685, 0.1381966011250105
TET_QP = np.array([
    [_TA, _TB, _TB], [_TB, _TA, _TB], [_TB, _TB, _TA], [_TB, _TB, _TB],
])

REF_TRI = np.array([[0.0, 0], [1, 0], [0, 1]])
REF_GRADS_2D = np.array([[-1.0, -1], [1, 0], [0, 1]])
TRI_QP = np.array([[0.5, 0.0], [0.0, 0.5], [0.5, 0.5]])  # edge midpoints, degree 2


def ref_shape_values(p: np.ndarray) -> np.ndarray:
    return np.array([1 - p[0] - p[1] - p[2], p[0], p[1], p[2]])


def oracle_grad_stiffness() -> np.ndarray:
    vol = 1.0 / 6.0
    K = np.zeros((4, 4))
    for q in TET_QP:          # integrand constant; quadrature kept for form
        K += (vol / len(TET_QP)) * (REF_GRADS @ REF_GRADS.T)
    return K


def oracle_lame_stiffness(mu: float, lam: float) -> np.ndarray:
    """Direct tensor-algebra oracle: eps(phi_a e_c) = sym(e_c outer g_a)."""
    vol = 1.0 / 6.0
    K = np.zeros((12, 12))
    eye = np.eye(3)
    for a in range(4):
        for c in range(3):
            ea = 0.5 * (np.outer(eye[c], REF_GRADS[a]) + np.outer(REF_GRADS[a], eye[c]))
            for b in range(4):
                for d in range(3):
                    eb = 0.5 * (np.outer(eye[d], REF_GRADS[b]) + np.outer(REF_GRADS[b], eye[d]))
                    val = 2 * mu * np.sum(ea * eb) + lam * np.trace(ea) * np.trace(eb)
                    K[3 * a + c, 3 * b + d] = vol * val
    return K


def oracle_tet_mass() -> np.ndarray:
    vol = 1.0 / 6.0
    M = np.zeros((4, 4))
    for q in TET_QP:
        phi = ref_shape_values(q)
        M += (vol / len(TET_QP)) * np.outer(phi, phi)
    return M


def test_grad_stiffness_reference_oracle():
    K = tet_grad_stiffness(REF_TET)
    assert np.abs(K - oracle_grad_stiffness()).max() <= 1e-14


def test_grad_stiffness_constant_kernel():
    rng = np.random.default_rng(1)
    verts = REF_TET + 0.3 * rng.standard_normal((4, 3))
    K = tet_grad_stiffness(verts) if np.linalg.det(verts[1:] - verts[0]) > 0 else None
    if K is None:
        verts = REF_TET
        K = tet_grad_stiffness(verts)
    assert np.abs(K @ np.ones(4)).max() <= 1e-13
    assert np.abs(K.sum(axis=0)).max() <= 1e-13


def test_grad_stiffness_linear_field_energy():
    # u = x has unit gradient: u^T K u = volume.
    rng = np.random.default_rng(2)
    for _ in range(5):
        verts = REF_TET + 0.2 * rng.standard_normal((4, 3))
        if np.linalg.det(verts[1:] - verts[0]) <= 0:
            continue
        vol = np.linalg.det(verts[1:] - verts[0]) / 6
        u = verts[:, 0]
        K = tet_grad_stiffness(verts)
        assert abs(u @ K @ u - vol) <= 1e-13 * max(vol, 1)


def test_grad_stiffness_degenerate():
    flat = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    with pytest.raises(DegenerateTet):
        tet_grad_stiffness(flat)


def test_lame_stiffness_reference_oracle():
    mu, lam = 1.7, 0.6
    K = tet_lame_stiffness(REF_TET, mu, lam)
    assert np.abs(K - oracle_lame_stiffness(mu, lam)).max() <= 1e-14


def test_lame_stiffness_rigid_motions():
    rng = np.random.default_rng(3)
    verts = REF_TET + 0.2 * rng.standard_normal((4, 3))
    if np.linalg.det(verts[1:] - verts[0]) <= 0:
        verts = REF_TET
    K = tet_lame_stiffness(verts, 1.3, 0.4)
    scale = np.abs(K).max()
    # translations
    for c in range(3):
        v = np.zeros((4, 3))
        v[:, c] = 1.0
        assert np.abs(K @ v.ravel()).max() <= 1e-13 * scale
    # rotations v = omega x x
    for omega in np.eye(3):
        v = np.cross(np.broadcast_to(omega, (4, 3)), verts)
        assert np.abs(K @ v.ravel()).max() <= 1e-13 * scale


def test_lame_stiffness_kernel_is_exactly_rigid():
    K = tet_lame_stiffness(REF_TET, 1.0, 1.0)
    w = np.linalg.eigvalsh(K)
    assert np.all(w >= -1e-12)
    assert np.sum(np.abs(w) <= 1e-12) == 6   # 3 translations + 3 rotations


def test_lame_identity_field_energy():
    # v(x) = x gives eps = I: energy (6 mu + 9 lam) vol.
    mu, lam = 2.0, 0.5
    rng = np.random.default_rng(4)
    verts = REF_TET + 0.15 * rng.standard_normal((4, 3))
    vol = np.linalg.det(verts[1:] - verts[0]) / 6
    assert vol > 0
    K = tet_lame_stiffness(verts, mu, lam)
    v = verts.ravel()
    assert abs(v @ K @ v - (6 * mu + 9 * lam) * vol) <= 1e-12 * max(1.0, abs(vol))


def test_thin_stiffness_constant_kernel():
    K = tri_thin_lame_stiffness(REF_TRI, 1.1, 0.7)
    for c in range(3):
        v = np.zeros((3, 3))
        v[:, c] = 1.0
        assert np.abs(K @ v.ravel()).max() <= 1e-13


def test_thin_stiffness_inplane_identity_energy():
    # g(xi) = xi has eps = I_2: energy (4 mu + 4 lam) area.
    mu_t, lam_t = 1.4, 0.3
    rng = np.random.default_rng(5)
    verts2 = REF_TRI + 0.2 * rng.standard_normal((3, 2))
    area = abs(np.linalg.det(verts2[1:] - verts2[0])) / 2
    K = tri_thin_lame_stiffness(verts2, mu_t, lam_t)
    g = np.zeros((3, 3))
    g[:, :2] = verts2
    val = g.ravel() @ K @ g.ravel()
    assert abs(val - (4 * mu_t + 4 * lam_t) * area) <= 1e-12


def test_thin_stiffness_tangential_rotation_kernel():
    # g(xi) = (-xi_2, xi_1) has skew gradient: zero elastic energy.
    verts2 = REF_TRI
    K = tri_plane_lame_stiffness(verts2, 1.0, 1.0)
    g = np.column_stack([-verts2[:, 1], verts2[:, 0]]).ravel()
    assert np.abs(K @ g).max() <= 1e-13


def test_thin_normal_block_is_scaled_scalar_stiffness():
    mu_t = 0.9
    K = tri_thin_lame_stiffness(REF_TRI, mu_t, 0.4)
    nor = K[np.ix_([2, 5, 8], [2, 5, 8])]
    assert np.abs(nor - mu_t * tri_grad_stiffness(REF_TRI)).max() <= 1e-14
    # no tangential/normal coupling
    K[np.ix_([2, 5, 8], [2, 5, 8])] = 0.0
    assert np.abs(K[[2, 5, 8], :]).max() == 0.0


def test_thin_stiffness_psd():
    K = tri_thin_lame_stiffness(REF_TRI, 1.0, 0.2)
    assert np.linalg.eigvalsh(K).min() >= -1e-13


def test_kernel_dimensions_by_dense_eigendecomposition():
    # grad stiffness: constants only; thin stiffness: two tangential
    # translations + in-plane rotation + constant normal component.
    w = np.linalg.eigvalsh(tet_grad_stiffness(REF_TET))
    assert np.sum(np.abs(w) <= 1e-12 * w.max()) == 1
    w = np.linalg.eigvalsh(tri_thin_lame_stiffness(REF_TRI, 1.0, 0.5))
    assert np.sum(np.abs(w) <= 1e-12 * w.max()) == 4
    w = np.linalg.eigvalsh(tri_grad_stiffness(REF_TRI))
    assert np.sum(np.abs(w) <= 1e-12 * w.max()) == 1


def test_masses_reference_pattern_and_measure():
    M = tet_mass(REF_TET)
    vol = 1.0 / 6.0
    assert np.abs(M - (vol / 20) * (np.ones((4, 4)) + np.eye(4))).max() <= 1e-15
    assert np.abs(M - oracle_tet_mass()).max() <= 1e-15
    assert abs(np.ones(4) @ M @ np.ones(4) - vol) <= 1e-15

    Mt = tri_mass(REF_TRI)
    area = 0.5
    assert np.abs(Mt - (area / 12) * (np.ones((3, 3)) + np.eye(3))).max() <= 1e-15
    quad = sum((area / 3) * np.outer(
        [1 - q[0] - q[1], q[0], q[1]], [1 - q[0] - q[1], q[0], q[1]]) for q in TRI_QP)
    assert np.abs(Mt - quad).max() <= 1e-15
    assert abs(np.ones(3) @ Mt @ np.ones(3) - area) <= 1e-15
    assert np.abs(Mt - Mt.T).max() == 0.0


def test_degenerate_triangle():
    with pytest.raises(DegenerateTriangle):
        tri_mass(np.array([[0.0, 0], [1, 0], [2, 0]]))


def test_params_validation():
    with pytest.raises(ValidationError):
        LameParams(mu=0.0).validate()
    with pytest.raises(ValidationError):
        LameParams(lam=-1.0).validate()
    with pytest.raises(ValidationError):
        LameParams(mu_thin=-2.0).validate()
    LameParams().validate()
    doubled = LameParams(1.0, 0.5, 2.0, 0.25).scaled(2.0)
    assert doubled == LameParams(2.0, 1.0, 4.0, 0.5)
