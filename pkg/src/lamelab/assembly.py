"""Monolithic assembly of the coupled energy space, Gram matrix, and generator.

Discrete unknown layout (one coefficient vector X over the DofMap):

    [ u | h0 | w0_int | w1_int ]

* ``u``     - heat field, 3 components per fluid-side vertex, outer-boundary
              vertices eliminated (homogeneous Dirichlet).
* ``h0``    - thin-layer displacement, 3 components per interface vertex.
              Vertices shared by several faces carry a single triple, which
              enforces displacement continuity across face edges.
* ``w0_int``- bulk displacement at solid-interior vertices; its trace IS h0.
* ``w1_int``- bulk velocity at solid-interior vertices; its trace IS u.

The trace identifications are realized by shared DOFs, never by multipliers,
so the kinematic coupling conditions hold exactly at the algebraic level.

With the velocity selector Q_V (displacement-shaped view of the velocities)
and the displacement Gram G (thin stiffness + thin mass + bulk stiffness),
the system matrices take the block form

    M_E = blockdiag(M_vel, G),      B = [[-K_heat, -W_core], [W_core^T, 0]]

so the generator splits exactly into a skew part and a symmetric negative
semidefinite part supported on the heat DOFs; the latter carries the entire
energy dissipation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import LameParams
from .errors import NonPositiveEnergy
from .geometry import FLUID, SOLID, Mesh

_DENSE_CHOL_LIMIT = 4500


@dataclass
class DofMap:
    """Global indexing of the four physical fields with trace identification."""

    mesh: Mesh
    u_vertices: np.ndarray          # fluid-side vertices excl. outer boundary
    iface_vertices: np.ndarray
    solid_interior_vertices: np.ndarray
    solid_vertices: np.ndarray      # union: interface + solid interior, sorted
    u_pos: np.ndarray               # vertex -> position in u_vertices, or -1
    h0_pos: np.ndarray
    int_pos: np.ndarray             # vertex -> position among solid-interior
    sf_pos: np.ndarray              # vertex -> position in solid field

    @property
    def n_u(self) -> int:
        return len(self.u_vertices)

    @property
    def n_iface(self) -> int:
        return len(self.iface_vertices)

    @property
    def n_int(self) -> int:
        return len(self.solid_interior_vertices)

    @property
    def n_solid(self) -> int:
        return len(self.solid_vertices)

    @property
    def offset_h0(self) -> int:
        return 3 * self.n_u

    @property
    def offset_w0(self) -> int:
        return 3 * (self.n_u + self.n_iface)

    @property
    def offset_w1(self) -> int:
        return 3 * (self.n_u + self.n_iface + self.n_int)

    @property
    def n_dofs(self) -> int:
        return 3 * (self.n_u + self.n_iface + 2 * self.n_int)

    # -- views ---------------------------------------------------------------

    def u_field(self, X: np.ndarray) -> np.ndarray:
        return X[: 3 * self.n_u].reshape(self.n_u, 3)

    def h0_field(self, X: np.ndarray) -> np.ndarray:
        return X[self.offset_h0 : self.offset_w0].reshape(self.n_iface, 3)

    def w0_interior(self, X: np.ndarray) -> np.ndarray:
        return X[self.offset_w0 : self.offset_w1].reshape(self.n_int, 3)

    def w1_interior(self, X: np.ndarray) -> np.ndarray:
        return X[self.offset_w1 :].reshape(self.n_int, 3)

    def h1_field(self, X: np.ndarray) -> np.ndarray:
        """Thin-layer velocity = trace of u at the interface vertices."""
        return self.u_field(X)[self.u_pos[self.iface_vertices]]

    def w0_field(self, X: np.ndarray) -> np.ndarray:
        """Bulk displacement over all solid vertices (trace = h0)."""
        out = np.empty((self.n_solid, 3), dtype=X.dtype)
        is_iface = self.h0_pos[self.solid_vertices] >= 0
        out[is_iface] = self.h0_field(X)[self.h0_pos[self.solid_vertices[is_iface]]]
        out[~is_iface] = self.w0_interior(X)[self.int_pos[self.solid_vertices[~is_iface]]]
        return out

    def w1_field(self, X: np.ndarray) -> np.ndarray:
        """Bulk velocity over all solid vertices (trace = u)."""
        out = np.empty((self.n_solid, 3), dtype=X.dtype)
        is_iface = self.h0_pos[self.solid_vertices] >= 0
        out[is_iface] = self.u_field(X)[self.u_pos[self.solid_vertices[is_iface]]]
        out[~is_iface] = self.w1_interior(X)[self.int_pos[self.solid_vertices[~is_iface]]]
        return out

    def face_rows(self, j: int) -> np.ndarray:
        """Positions (into the interface-vertex list) of face j's vertices."""
        return self.h0_pos[self.mesh.face_vertex_ids(j)]

    def state_from_fields(self, u=None, h0=None, w0i=None, w1i=None,
                          dtype=float) -> np.ndarray:
        X = np.zeros(self.n_dofs, dtype=dtype)
        if u is not None:
            self.u_field(X)[:] = u
        if h0 is not None:
            self.h0_field(X)[:] = h0
        if w0i is not None and self.n_int:
            self.w0_interior(X)[:] = w0i
        if w1i is not None and self.n_int:
            self.w1_interior(X)[:] = w1i
        return X

    def random_state(self, rng: np.random.Generator, complex_valued: bool = False) -> np.ndarray:
        X = rng.standard_normal(self.n_dofs)
        if complex_valued:
            X = X + 1j * rng.standard_normal(self.n_dofs)
        return X


@dataclass
class StateVector:
    """A point of the discrete energy space: coefficients plus field views."""

    dofs: DofMap
    data: np.ndarray

    @classmethod
    def zeros(cls, dofs: DofMap, dtype=float) -> "StateVector":
        return cls(dofs, np.zeros(dofs.n_dofs, dtype=dtype))

    @property
    def u(self) -> np.ndarray:
        return self.dofs.u_field(self.data)

    @property
    def h0(self) -> np.ndarray:
        return self.dofs.h0_field(self.data)

    @property
    def h1(self) -> np.ndarray:
        return self.dofs.h1_field(self.data)

    @property
    def w0(self) -> np.ndarray:
        return self.dofs.w0_field(self.data)

    @property
    def w1(self) -> np.ndarray:
        return self.dofs.w1_field(self.data)


def build_dof_map(mesh: Mesh) -> DofMap:
    """Classify vertices and allocate the identified DOF blocks."""
    V = len(mesh.vertices)
    on_gamma_f = mesh.on_outer_boundary()
    on_iface = mesh.on_interface()
    in_solid = mesh.in_solid_interior()

    u_vertices = np.flatnonzero(~on_gamma_f & ~in_solid)
    iface_vertices = np.flatnonzero(on_iface)
    interior_vertices = np.flatnonzero(in_solid)
    solid_vertices = np.flatnonzero(on_iface | in_solid)

    def positions(ids: np.ndarray) -> np.ndarray:
        pos = np.full(V, -1, dtype=int)
        pos[ids] = np.arange(len(ids))
        return pos

    return DofMap(
        mesh=mesh,
        u_vertices=u_vertices,
        iface_vertices=iface_vertices,
        solid_interior_vertices=interior_vertices,
        solid_vertices=solid_vertices,
        u_pos=positions(u_vertices),
        h0_pos=positions(iface_vertices),
        int_pos=positions(interior_vertices),
        sf_pos=positions(solid_vertices),
    )


# ---------------------------------------------------------------------------
# raw bilinear-form blocks
# ---------------------------------------------------------------------------


@dataclass
class RawBlocks:
    """Assembled bilinear-form blocks on their natural index sets."""

    K_f: sp.csr_matrix        # heat stiffness, u DOFs (Dirichlet eliminated)
    M_f: sp.csr_matrix        # fluid mass, u DOFs
    K_s: sp.csr_matrix        # bulk elastic stiffness, solid-field DOFs
    M_s: sp.csr_matrix        # bulk mass, solid-field DOFs
    K_thin: sp.csr_matrix     # thin stiffness, h0 DOFs (sum over faces)
    M_thin: sp.csr_matrix     # thin zeroth-order mass, h0 DOFs
    K_thin_faces: list        # per-face thin stiffness, h0 DOFs
    M_thin_faces: list        # per-face thin mass, h0 DOFs
    T_iface: sp.csr_matrix    # thin-velocity mass on u DOFs (h1 Gram)


def _coo_accumulate(size: int, chunks) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for r, c, v in chunks:
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(v.ravel())
    rows = np.concatenate(rows) if rows else np.empty(0, int)
    cols = np.concatenate(cols) if cols else np.empty(0, int)
    vals = np.concatenate(vals) if vals else np.empty(0, float)
    keep = (rows >= 0) & (cols >= 0)
    M = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(size, size)).tocsr()
    M.sum_duplicates()
    M.sort_indices()
    return M


def _batched_tet_geometry(verts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    edge = verts[:, 1:] - verts[:, :1]
    vol = np.linalg.det(edge) / 6.0
    grads = np.empty((len(verts), 4, 3))
    grads[:, 1:] = np.transpose(np.linalg.inv(edge), (0, 2, 1))
    grads[:, 0] = -grads[:, 1:].sum(axis=1)
    return vol, grads


def _scatter_scalar_by_component(dof3: np.ndarray, local: np.ndarray):
    """Scatter (T,4,4) scalar kernels into 3 identical component blocks."""
    for c in range(3):
        d = dof3[:, :, c]
        for a in range(d.shape[1]):
            for b in range(d.shape[1]):
                yield d[:, a], d[:, b], local[:, a, b]


def _scatter_dense(dofs: np.ndarray, local: np.ndarray):
    k = dofs.shape[1]
    for a in range(k):
        for b in range(k):
            yield dofs[:, a], dofs[:, b], local[:, a, b]


def assemble_blocks(mesh: Mesh, dofs: DofMap, params: LameParams) -> RawBlocks:
    params.validate()
    verts = mesh.vertices

    def vertex_dof3(pos: np.ndarray, conn: np.ndarray) -> np.ndarray:
        """(T, nloc, 3) global dof ids, -1 propagated for eliminated vertices."""
        p = pos[conn]
        d = 3 * p[..., None] + np.arange(3)
        d[p < 0] = -1
        return d

    # ---- fluid tets: componentwise heat stiffness + vector mass ----------
    fluid = mesh.tets[mesh.tet_tags == FLUID]
    vol, grads = _batched_tet_geometry(verts[fluid])
    if np.any(vol <= 0):
        raise AssertionError("fluid tet with non-positive volume")
    K_loc = vol[:, None, None] * np.einsum("tad,tbd->tab", grads, grads)
    M_loc = (vol / 20.0)[:, None, None] * (np.ones((4, 4)) + np.eye(4))
    du = vertex_dof3(dofs.u_pos, fluid)
    n_udof = 3 * dofs.n_u
    K_f = _coo_accumulate(n_udof, _scatter_scalar_by_component(du, K_loc))
    M_f = _coo_accumulate(n_udof, _scatter_scalar_by_component(du, M_loc))

    # ---- solid tets: bulk elastic stiffness + vector mass -----------------
    solid = mesh.tets[mesh.tet_tags == SOLID]
    vol_s, grads_s = _batched_tet_geometry(verts[solid])
    Bm = np.zeros((len(solid), 6, 12))
    for a in range(4):
        c = 3 * a
        Bm[:, 0, c + 0] = grads_s[:, a, 0]
        Bm[:, 1, c + 1] = grads_s[:, a, 1]
        Bm[:, 2, c + 2] = grads_s[:, a, 2]
        Bm[:, 3, c + 1] = grads_s[:, a, 2]
        Bm[:, 3, c + 2] = grads_s[:, a, 1]
        Bm[:, 4, c + 0] = grads_s[:, a, 2]
        Bm[:, 4, c + 2] = grads_s[:, a, 0]
        Bm[:, 5, c + 0] = grads_s[:, a, 1]
        Bm[:, 5, c + 1] = grads_s[:, a, 0]
    D = np.diag([2 * params.mu] * 3 + [params.mu] * 3).astype(float)
    D[:3, :3] += params.lam
    K_loc_s = vol_s[:, None, None] * np.einsum("tia,ij,tjb->tab", Bm, D, Bm)
    M_loc_s = (vol_s / 20.0)[:, None, None] * (np.ones((4, 4)) + np.eye(4))
    ds = vertex_dof3(dofs.sf_pos, solid)
    ds12 = ds.reshape(len(solid), 12)
    n_sdof = 3 * dofs.n_solid
    K_s = _coo_accumulate(n_sdof, _scatter_dense(ds12, K_loc_s))
    M_s = _coo_accumulate(n_sdof, _scatter_scalar_by_component(ds, M_loc_s))

    # ---- interface triangles: thin layer, per face -------------------------
    # The monolithic thin blocks are the plain sums of the per-face blocks:
    # the face-edge (conormal) terms are natural and never enter the weak
    # form, so patchwise assembly equals monolithic assembly exactly.
    n_hdof = 3 * dofs.n_iface
    K_thin_faces, M_thin_faces, T_faces = [], [], []
    for j in range(1, mesh.K + 1):
        tris = mesh.interface_tris[mesh.interface_face == j]
        nu, tau1, tau2 = mesh.face_frames[j - 1]
        p3 = verts[tris]
        xi = np.einsum("tvd,dk->tvk", p3 - p3[:, :1], np.stack([tau1, tau2], axis=1))
        edge = xi[:, 1:] - xi[:, :1]
        det = np.linalg.det(edge)
        area = np.abs(det) / 2.0
        g2 = np.empty((len(tris), 3, 2))
        g2[:, 1:] = np.transpose(np.linalg.inv(edge), (0, 2, 1))
        g2[:, 0] = -g2[:, 1:].sum(axis=1)

        B2 = np.zeros((len(tris), 3, 6))
        for a in range(3):
            c = 2 * a
            B2[:, 0, c + 0] = g2[:, a, 0]
            B2[:, 1, c + 1] = g2[:, a, 1]
            B2[:, 2, c + 0] = g2[:, a, 1]
            B2[:, 2, c + 1] = g2[:, a, 0]
        D2 = np.array([
            [2 * params.mu_thin + params.lam_thin, params.lam_thin, 0.0],
            [params.lam_thin, 2 * params.mu_thin + params.lam_thin, 0.0],
            [0.0, 0.0, params.mu_thin],
        ])
        K_tan = area[:, None, None] * np.einsum("tia,ij,tjb->tab", B2, D2, B2)
        K_nor = params.mu_thin * area[:, None, None] * np.einsum("tad,tbd->tab", g2, g2)

        K_frame = np.zeros((len(tris), 9, 9))
        tan_ix = np.array([0, 1, 3, 4, 6, 7])
        nor_ix = np.array([2, 5, 8])
        K_frame[np.ix_(np.arange(len(tris)), tan_ix, tan_ix)] = K_tan
        K_frame[np.ix_(np.arange(len(tris)), nor_ix, nor_ix)] = K_nor
        Q = np.vstack([tau1, tau2, nu])          # xyz -> frame components
        R9 = np.kron(np.eye(3), Q)
        K_xyz = np.einsum("ij,tjk,kl->til", R9.T, K_frame, R9)

        M2 = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
        M_xyz = np.zeros((len(tris), 9, 9))
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    M_xyz[:, 3 * a + c, 3 * b + c] = M2[:, a, b]

        dh = vertex_dof3(dofs.h0_pos, tris).reshape(len(tris), 9)
        duf = vertex_dof3(dofs.u_pos, tris).reshape(len(tris), 9)
        K_thin_faces.append(_coo_accumulate(n_hdof, _scatter_dense(dh, K_xyz)))
        M_thin_faces.append(_coo_accumulate(n_hdof, _scatter_dense(dh, M_xyz)))
        T_faces.append(_coo_accumulate(n_udof, _scatter_dense(duf, M_xyz)))

    K_thin = sum(K_thin_faces).tocsr()
    M_thin = sum(M_thin_faces).tocsr()
    T_iface = sum(T_faces).tocsr()

    return RawBlocks(K_f=K_f, M_f=M_f, K_s=K_s, M_s=M_s, K_thin=K_thin,
                     M_thin=M_thin, K_thin_faces=K_thin_faces,
                     M_thin_faces=M_thin_faces, T_iface=T_iface)


# ---------------------------------------------------------------------------
# selectors and system matrices
# ---------------------------------------------------------------------------


def _selector(rows: np.ndarray, cols: np.ndarray, shape: tuple[int, int]) -> sp.csr_matrix:
    data = np.ones(len(rows))
    return sp.coo_matrix((data, (rows, cols)), shape=shape).tocsr()


@dataclass
class SystemMatrices:
    """Energy Gram, generator, raw blocks, and the selector maps between them."""

    mesh: Mesh
    dofs: DofMap
    params: LameParams
    blocks: RawBlocks
    M_E: sp.csr_matrix
    B: sp.csr_matrix
    G: sp.csr_matrix            # displacement Gram (h0 + w0_int coords)
    P_u: sp.csr_matrix          # X -> u block
    P_D: sp.csr_matrix          # X -> displacement coords [h0; w0_int]
    Q_V: sp.csr_matrix          # X -> displacement-shaped velocity [u|_iface; w1_int]
    R_v: sp.csr_matrix          # X -> solid velocity field
    R_d: sp.csr_matrix          # X -> solid displacement field
    W: sp.csr_matrix            # coupling Q_V^T G P_D (global size)

    @property
    def n_dofs(self) -> int:
        return self.dofs.n_dofs

    def skew_split(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """B = S + N with S exactly skew-symmetric and N = -K_heat embedding."""
        N = -(self.P_u.T @ self.blocks.K_f @ self.P_u).tocsr()
        S = (self.W.T - self.W).tocsr()
        return S, N

    def grad_energy(self, X: np.ndarray) -> float:
        """Heat dissipation quadratic form  ||grad u||^2  of a state."""
        u = X[: 3 * self.dofs.n_u]
        return float(np.real(np.vdot(u, self.blocks.K_f @ u)))


def energy_inner(M_E: sp.spmatrix, X: np.ndarray, Y: np.ndarray) -> complex:
    """Energy inner product <X, Y>_H = Y^H M_E X."""
    return complex(np.vdot(Y, M_E @ X))


def energy_norm(M_E: sp.spmatrix, X: np.ndarray) -> float:
    """Energy norm sqrt(X^H M_E X); clamps the tiny negative roundoff case."""
    val = np.real(np.vdot(X, M_E @ X))
    return float(np.sqrt(max(val, 0.0)))


def _certify_spd(M: sp.csr_matrix) -> None:
    n = M.shape[0]
    try:
        if n <= _DENSE_CHOL_LIMIT:
            np.linalg.cholesky(M.toarray())
        else:
            lam_min = spla.eigsh(M, k=1, sigma=0, which="LM",
                                 return_eigenvectors=False, v0=np.ones(n))[0]
            if lam_min <= 0:
                raise NonPositiveEnergy(f"smallest Gram eigenvalue {lam_min:.3e} <= 0")
    except (np.linalg.LinAlgError, RuntimeError) as exc:
        raise NonPositiveEnergy(f"energy Gram failed definiteness certificate: {exc}") from exc


def assemble_system(mesh: Mesh, dofs: DofMap | None = None,
                    params: LameParams | None = None, check: bool = True) -> SystemMatrices:
    """Assemble the energy Gram M_E and the generator B as a pencil (M_E, B)."""
    if dofs is None:
        dofs = build_dof_map(mesh)
    if params is None:
        params = LameParams()
    blocks = assemble_blocks(mesh, dofs, params)

    N = dofs.n_dofs
    n_u3, n_h3, n_i3 = 3 * dofs.n_u, 3 * dofs.n_iface, 3 * dofs.n_int
    n_D = n_h3 + n_i3
    n_sf3 = 3 * dofs.n_solid

    ar = np.arange
    P_u = _selector(ar(n_u3), ar(n_u3), (n_u3, N))
    P_D = _selector(ar(n_D), dofs.offset_h0 + ar(n_D), (n_D, N))

    # Velocity view in displacement shape: interface slots read the u trace,
    # interior slots read w1.
    iface_u = (3 * dofs.u_pos[dofs.iface_vertices][:, None] + ar(3)).ravel()
    qv_cols = np.concatenate([iface_u, dofs.offset_w1 + ar(n_i3)])
    Q_V = _selector(ar(n_D), qv_cols, (n_D, N))

    # Solid-field selectors (size 3 * n_solid).
    sf_rows = (3 * ar(dofs.n_solid)[:, None] + ar(3)).ravel()
    disp_cols = np.empty((dofs.n_solid, 3), dtype=int)
    vel_cols = np.empty((dofs.n_solid, 3), dtype=int)
    for s, v in enumerate(dofs.solid_vertices):
        if dofs.h0_pos[v] >= 0:
            disp_cols[s] = dofs.offset_h0 + 3 * dofs.h0_pos[v] + ar(3)
            vel_cols[s] = 3 * dofs.u_pos[v] + ar(3)
        else:
            disp_cols[s] = dofs.offset_w0 + 3 * dofs.int_pos[v] + ar(3)
            vel_cols[s] = dofs.offset_w1 + 3 * dofs.int_pos[v] + ar(3)
    R_d = _selector(sf_rows, disp_cols.ravel(), (n_sf3, N))
    R_v = _selector(sf_rows, vel_cols.ravel(), (n_sf3, N))

    # Displacement Gram: thin stiffness + thin zeroth-order mass + bulk
    # stiffness pulled back through the trace identification.
    E_h0 = _selector(ar(n_h3), ar(n_h3), (n_h3, n_D))
    R_d_core = (R_d @ P_D.T).tocsr()          # displacement coords -> solid field
    G = (E_h0.T @ (blocks.K_thin + blocks.M_thin) @ E_h0
         + R_d_core.T @ blocks.K_s @ R_d_core).tocsr()

    M_E = (P_u.T @ (blocks.M_f + blocks.T_iface) @ P_u
           + R_v.T @ blocks.M_s @ R_v
           + P_D.T @ G @ P_D).tocsr()

    W = (Q_V.T @ G @ P_D).tocsr()
    B = (-(P_u.T @ blocks.K_f @ P_u) - W + W.T).tocsr()

    if check:
        _certify_spd(M_E)

    return SystemMatrices(mesh=mesh, dofs=dofs, params=params, blocks=blocks,
                          M_E=M_E, B=B, G=G, P_u=P_u, P_D=P_D, Q_V=Q_V,
                          R_v=R_v, R_d=R_d, W=W)


def assemble_energy(mesh: Mesh, dofs: DofMap, params: LameParams,
                    check: bool = True) -> sp.csr_matrix:
    """Energy Gram M_E alone (positive definite on the identified space)."""
    return assemble_system(mesh, dofs, params, check=check).M_E


def assemble_generator(mesh: Mesh, dofs: DofMap, params: LameParams) -> sp.csr_matrix:
    """Generator B alone; the evolution problem is  M_E dX/dt = B X."""
    return assemble_system(mesh, dofs, params, check=False).B


def export_matrix(M: sp.spmatrix) -> str:
    """Plain-text coordinate export: one `row col value` line per entry."""
    coo = M.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{M.shape[0]} {M.shape[1]} {coo.nnz}"]
    for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        lines.append(f"{r} {c} {v:.17g}")
    return "\n".join(lines) + "\n"
