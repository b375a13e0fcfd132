"""P1 element kernels.

Three constitutive operators, all integrated exactly (every integrand is
polynomial, so no quadrature error enters):

* scalar gradient stiffness on tets (componentwise heat operator),
* 3D isotropic elastic stiffness ``sigma(v) = 2 mu eps(v) + lam tr(eps) I`` on
  tets, in interleaved (x, y, z) vertex ordering,
* flat-face thin-layer stiffness on triangles in face-local coordinates:
  the two tangential components obey the 2D elastic operator with parameters
  ``(mu_thin, lam_thin)``, the normal component the scalar gradient operator
  scaled by ``mu_thin``.  Local DOF order per vertex: (tau1, tau2, nu).

Consistent (non-lumped) P1 mass matrices complete the set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTet, DegenerateTriangle, ValidationError

_VOL_TOL = 1e-14


@dataclass(frozen=True)
class LameParams:
    """Elastic moduli of the thick (bulk) and thin (interface) layers."""

    mu: float = 1.0
    lam: float = 1.0
    mu_thin: float = 1.0
    lam_thin: float = 1.0

    def validate(self) -> None:
        if self.mu <= 0:
            raise ValidationError("mu", f"shear modulus must be positive, got {self.mu}")
        if self.mu_thin <= 0:
            raise ValidationError("mu_thin", f"shear modulus must be positive, got {self.mu_thin}")
        if self.lam < 0:
            raise ValidationError("lam", f"first parameter must be nonnegative, got {self.lam}")
        if self.lam_thin < 0:
            raise ValidationError(
                "lam_thin", f"first parameter must be nonnegative, got {self.lam_thin}"
            )

    def scaled(self, factor: float) -> "LameParams":
        return LameParams(self.mu * factor, self.lam * factor,
                          self.mu_thin * factor, self.lam_thin * factor)


def tet_geometry(verts: np.ndarray) -> tuple[float, np.ndarray]:
    """Volume and barycentric gradients (4, 3) of a tet; raises on degeneracy."""
    verts = np.asarray(verts, float)
    edge = verts[1:] - verts[0]
    det = float(np.linalg.det(edge))
    vol = det / 6.0
    if vol <= _VOL_TOL:
        raise DegenerateTet(f"tet volume {vol:.3e} is not positive")
    grads = np.empty((4, 3))
    grads[1:] = np.linalg.inv(edge).T
    grads[0] = -grads[1:].sum(axis=0)
    return vol, grads


def tri_geometry(verts2: np.ndarray) -> tuple[float, np.ndarray]:
    """Area and barycentric gradients (3, 2) of a triangle in local 2D coords."""
    verts2 = np.asarray(verts2, float)
    edge = verts2[1:] - verts2[0]
    det = float(np.linalg.det(edge))
    area = abs(det) / 2.0
    if area <= _VOL_TOL:
        raise DegenerateTriangle(f"triangle area {area:.3e} is degenerate")
    grads = np.empty((3, 2))
    grads[1:] = np.linalg.inv(edge).T
    grads[0] = -grads[1:].sum(axis=0)
    return area, grads


def tet_grad_stiffness(verts: np.ndarray) -> np.ndarray:
    """Scalar P1 stiffness  K_ab = integral grad(phi_a) . grad(phi_b)."""
    vol, g = tet_geometry(verts)
    return vol * (g @ g.T)


def tet_lame_stiffness(verts: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """(12, 12) elastic stiffness on a tet, interleaved (x, y, z) per vertex.

    Kernel is exactly the six infinitesimal rigid motions.
    """
    vol, g = tet_geometry(verts)
    # Voigt strain order (xx, yy, zz, yz, xz, xy) with engineering shear.
    B = np.zeros((6, 12))
    for a in range(4):
        c = 3 * a
        B[0, c + 0] = g[a, 0]
        B[1, c + 1] = g[a, 1]
        B[2, c + 2] = g[a, 2]
        B[3, c + 1] = g[a, 2]
        B[3, c + 2] = g[a, 1]
        B[4, c + 0] = g[a, 2]
        B[4, c + 2] = g[a, 0]
        B[5, c + 0] = g[a, 1]
        B[5, c + 1] = g[a, 0]
    D = np.diag([2 * mu, 2 * mu, 2 * mu, mu, mu, mu]).astype(float)
    D[:3, :3] += lam
    return vol * (B.T @ D @ B)


def tri_plane_lame_stiffness(verts2: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """(6, 6) 2D elastic stiffness on a triangle, interleaved (x1, x2)."""
    area, g = tri_geometry(verts2)
    B = np.zeros((3, 6))
    for a in range(3):
        c = 2 * a
        B[0, c + 0] = g[a, 0]
        B[1, c + 1] = g[a, 1]
        B[2, c + 0] = g[a, 1]
        B[2, c + 1] = g[a, 0]
    D = np.array([[2 * mu + lam, lam, 0.0], [lam, 2 * mu + lam, 0.0], [0.0, 0.0, mu]])
    return area * (B.T @ D @ B)


def tri_grad_stiffness(verts2: np.ndarray) -> np.ndarray:
    """Scalar P1 stiffness on a triangle in local 2D coords."""
    area, g = tri_geometry(verts2)
    return area * (g @ g.T)


def tri_thin_lame_stiffness(verts2: np.ndarray, mu_thin: float, lam_thin: float) -> np.ndarray:
    """(9, 9) thin-layer stiffness, per-vertex DOF order (tau1, tau2, nu).

    Tangential pair: 2D elastic stiffness.  Normal component: scalar gradient
    stiffness scaled by ``mu_thin``.
    """
    K = np.zeros((9, 9))
    tan = tri_plane_lame_stiffness(verts2, mu_thin, lam_thin)
    nor = mu_thin * tri_grad_stiffness(verts2)
    tan_ix = np.array([0, 1, 3, 4, 6, 7])
    K[np.ix_(tan_ix, tan_ix)] = tan
    nor_ix = np.array([2, 5, 8])
    K[np.ix_(nor_ix, nor_ix)] = nor
    return K


def tet_mass(verts: np.ndarray) -> np.ndarray:
    """(4, 4) consistent scalar P1 mass: (vol / 20) * (1 + delta_ab)."""
    vol, _ = tet_geometry(verts)
    return (vol / 20.0) * (np.ones((4, 4)) + np.eye(4))


def tri_mass(verts2: np.ndarray) -> np.ndarray:
    """(3, 3) consistent scalar P1 mass: (area / 12) * (1 + delta_ab)."""
    area, _ = tri_geometry(verts2)
    return (area / 12.0) * (np.ones((3, 3)) + np.eye(3))
