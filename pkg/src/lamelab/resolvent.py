"""Frequency-domain diagnostics for the coupled generator.

Contents:

* shifted resolvent solves  ((alpha + i beta) M_E - B) X = M_E X*  with a
  residual contract, plus the exact static dissipation balance
  alpha ||X||_H^2 + ||grad u||^2 = Re <X*, X>_H  and the contraction bound
  ||X||_H <= ||X*||_H / alpha,
* the vanishing-resolvent sweep  sqrt(alpha) ||X(alpha, beta)||_H  over an
  alpha ladder for frequencies beta kept away from the clamped-solid spectrum,
* the clamped-solid operator (bulk elastic stiffness on interior DOFs): its
  generalized eigenpairs and the induced excluded frequency set
  S_h = {+-sqrt(lambda_k)},
* the harmonic-extension (Dirichlet) map of interface data into the solid and
  the zero-trace splitting of the bulk displacement it induces,
* boundary traction of a bulk field by the pointwise frame formula and by
  variational flux recovery, and the thin-layer momentum balance of a
  resolvent solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    DofMap,
    SystemMatrices,
    assemble_blocks,
    build_dof_map,
    energy_inner,
    energy_norm,
)
from .elements import LameParams
from .errors import (
    BetaZero,
    ConvergenceFailure,
    SolverBreakdown,
    UnknownFace,
    ValidationError,
)
from .geometry import Mesh

_RESOLVENT_TOL = 1e-10
_DENSE_EIG_LIMIT = 2500


@dataclass(frozen=True)
class ResolventQuery:
    """One shifted solve: shift alpha > 0, frequency beta, data X_star."""

    alpha: float
    beta: float
    X_star: np.ndarray

    def validate(self) -> None:
        if not self.alpha > 0:
            raise ValidationError("alpha", f"shift must be positive, got {self.alpha}")


class ResolventSolver:
    """Factorizes the complex pencil once per (alpha, beta) and reuses it."""

    def __init__(self, mats: SystemMatrices):
        self.mats = mats
        self._lu_key: tuple[float, float] | None = None
        self._lu = None
        self._pencil = None

    def _factorize(self, alpha: float, beta: float) -> None:
        if self._lu_key == (alpha, beta):
            return
        pencil = ((alpha + 1j * beta) * self.mats.M_E - self.mats.B).tocsc()
        try:
            self._lu = spla.splu(pencil)
        except RuntimeError as exc:
            raise SolverBreakdown(
                f"resolvent factorization failed at alpha={alpha:g}, beta={beta:g}: {exc}"
            ) from exc
        self._pencil = pencil.tocsr()
        self._lu_key = (alpha, beta)

    def solve(self, q: ResolventQuery) -> np.ndarray:
        q.validate()
        self._factorize(q.alpha, q.beta)
        b = (self.mats.M_E @ q.X_star).astype(complex)
        X = self._lu.solve(b)
        # One step of iterative refinement guards the residual contract at
        # the bottom of the alpha ladder where the pencil is ill-conditioned.
        r = b - self._pencil @ X
        X = X + self._lu.solve(r)
        scale = float(np.linalg.norm(b))
        if scale == 0.0:
            return np.zeros_like(X)
        res = float(np.linalg.norm(self._pencil @ X - b)) / scale
        if not np.isfinite(res) or res > _RESOLVENT_TOL:
            raise SolverBreakdown("resolvent solve violated its residual contract",
                                  residual=res)
        return X


def solve_resolvent(mats: SystemMatrices, q: ResolventQuery) -> np.ndarray:
    """Solve ((alpha + i beta) M_E - B) X = M_E X*; residual <= 1e-10."""
    return ResolventSolver(mats).solve(q)


def static_dissipation_check(mats: SystemMatrices, q: ResolventQuery,
                             X: np.ndarray) -> float:
    """Relative defect of  alpha ||X||^2_H + ||grad u||^2 = Re<X*, X>_H."""
    a = q.alpha * energy_norm(mats.M_E, X) ** 2
    g = mats.grad_energy(X)
    rhs = float(np.real(energy_inner(mats.M_E, q.X_star, X)))
    scale = max(abs(a), abs(g), abs(rhs), np.finfo(float).tiny)
    return abs(a + g - rhs) / scale


def hille_yosida_ratio(mats: SystemMatrices, q: ResolventQuery, X: np.ndarray) -> float:
    """||X||_H divided by the contraction bound ||X*||_H / alpha (<= 1)."""
    bound = energy_norm(mats.M_E, q.X_star) / q.alpha
    if bound == 0.0:
        return 0.0 if energy_norm(mats.M_E, X) == 0.0 else np.inf
    return energy_norm(mats.M_E, X) / bound


# ---------------------------------------------------------------------------
# clamped-solid spectrum
# ---------------------------------------------------------------------------


@dataclass
class SpectrumReport:
    """Generalized eigenpairs of the clamped bulk-elastic operator."""

    eigenvalues: np.ndarray     # ascending, positive
    residuals: np.ndarray       # ||K v - lambda M v|| / ||K v|| per pair
    frequencies: np.ndarray     # S_h = {+sqrt(lambda_k)} (mirror implied)

    def distance(self, beta: float) -> float:
        """Distance of beta to S_h union {0} (both signs of S_h implied)."""
        d = abs(beta)
        if len(self.frequencies):
            d = min(d, float(np.min(np.abs(abs(beta) - self.frequencies))))
        return d


def _solid_interior_operator(mesh: Mesh, params: LameParams,
                             dofs: DofMap | None = None,
                             blocks=None) -> tuple[sp.csr_matrix, sp.csr_matrix, DofMap]:
    if dofs is None:
        dofs = build_dof_map(mesh)
    if blocks is None:
        blocks = assemble_blocks(mesh, dofs, params)
    rows = (3 * dofs.sf_pos[dofs.solid_interior_vertices][:, None] + np.arange(3)).ravel()
    K = blocks.K_s[np.ix_(rows, rows)].tocsr()
    M = blocks.M_s[np.ix_(rows, rows)].tocsr()
    return K, M, dofs


def dirichlet_lame_eigs(mesh: Mesh, params: LameParams, k: int,
                        tol: float = 0.0, dofs: DofMap | None = None,
                        blocks=None) -> SpectrumReport:
    """k smallest eigenpairs of  K_s v = lambda M_s v  on clamped solid DOFs."""
    K, M, _ = _solid_interior_operator(mesh, params, dofs, blocks)
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValidationError("k", f"need 1 <= k <= {n} interior DOFs, got {k}")
    if k >= n - 1:
        vals, vecs = scipy.linalg.eigh(K.toarray(), M.toarray())
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        try:
            vals, vecs = spla.eigsh(K, k=k, M=M, sigma=0.0, which="LM",
                                    v0=np.ones(n), tol=tol)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(
                f"eigensolver converged {len(exc.eigenvalues)}/{k} pairs"
            ) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    res = np.empty(k)
    for i in range(k):
        kv = K @ vecs[:, i]
        res[i] = np.linalg.norm(kv - vals[i] * (M @ vecs[:, i])) / np.linalg.norm(kv)
    return SpectrumReport(eigenvalues=vals, residuals=res, frequencies=np.sqrt(vals))


def dirichlet_lame_eigs_dense(mesh: Mesh, params: LameParams,
                              dofs: DofMap | None = None, blocks=None) -> np.ndarray:
    """All eigenvalues by dense full decomposition (oracle for the sparse path)."""
    K, M, _ = _solid_interior_operator(mesh, params, dofs, blocks)
    if K.shape[0] > _DENSE_EIG_LIMIT:
        raise ValidationError("mesh", "dense oracle limited to small clamped blocks")
    return scipy.linalg.eigh(K.toarray(), M.toarray(), eigvals_only=True)


def excluded_frequencies(mats: SystemMatrices, beta_cap: float) -> SpectrumReport:
    """All clamped-solid frequencies up to ``beta_cap`` (dense, desk scale)."""
    K, M, _ = _solid_interior_operator(mats.mesh, mats.params, mats.dofs, mats.blocks)
    if K.shape[0] <= _DENSE_EIG_LIMIT:
        vals = scipy.linalg.eigh(K.toarray(), M.toarray(), eigvals_only=True)
    else:
        k = min(K.shape[0] - 2, 64)
        vals, _ = spla.eigsh(K, k=k, M=M, sigma=0.0, which="LM", v0=np.ones(K.shape[0]))
        vals = np.sort(vals)
        if np.sqrt(vals[-1]) < beta_cap:
            raise ConvergenceFailure(
                f"excluded-frequency set covers only |beta| < {np.sqrt(vals[-1]):.3g}"
            )
    vals = vals[np.sqrt(vals) <= beta_cap + 1.0]
    return SpectrumReport(eigenvalues=vals, residuals=np.zeros(len(vals)),
                          frequencies=np.sqrt(vals))


# ---------------------------------------------------------------------------
# vanishing-resolvent sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepReport:
    """sqrt(alpha) ||X||_H over a (beta, data, alpha) grid."""

    betas: np.ndarray
    alphas: np.ndarray
    values: np.ndarray            # (n_beta, n_data, n_alpha) sqrt(alpha)*||X||_H
    static_residuals: np.ndarray  # same shape
    hy_ratios: np.ndarray         # same shape
    dist_to_S: np.ndarray         # (n_beta,)
    tail_monotone: np.ndarray     # (n_beta, n_data) bool over the last 4 decades
    tail_length: int = 4

    def rows(self) -> list[tuple[float, float, float, float, float]]:
        """CSV rows (beta, alpha, sqrt_alpha_norm, static_residual, dist_to_S);
        the norm and residual are the maxima over the data vectors."""
        out = []
        for i, b in enumerate(self.betas):
            for a_idx, a in enumerate(self.alphas):
                out.append((float(b), float(a),
                            float(self.values[i, :, a_idx].max()),
                            float(self.static_residuals[i, :, a_idx].max()),
                            float(self.dist_to_S[i])))
        return out


def tomilov_sweep(mats: SystemMatrices, beta_list, alpha_list, data_list,
                  spectrum: SpectrumReport | None = None) -> SweepReport:
    """Evaluate sqrt(alpha) ||X(alpha, beta)||_H down the alpha ladder.

    ``alpha_list`` must be positive and strictly decreasing.  Non-decreasing
    tails (last four ladder entries) are flagged in the report, never raised.
    """
    alphas = np.asarray(alpha_list, float)
    betas = np.asarray(beta_list, float)
    if np.any(alphas <= 0) or np.any(np.diff(alphas) >= 0):
        raise ValidationError("alpha_list", "alpha ladder must be positive and decreasing")
    if spectrum is None:
        spectrum = excluded_frequencies(mats, beta_cap=float(np.max(np.abs(betas), initial=0.0)))

    solver = ResolventSolver(mats)
    n_b, n_d, n_a = len(betas), len(data_list), len(alphas)
    values = np.zeros((n_b, n_d, n_a))
    statics = np.zeros((n_b, n_d, n_a))
    hys = np.zeros((n_b, n_d, n_a))
    for ai, alpha in enumerate(alphas):          # alpha outermost: reuse per-beta LU
        for bi, beta in enumerate(betas):
            for di, data in enumerate(data_list):
                q = ResolventQuery(alpha=float(alpha), beta=float(beta), X_star=data)
                X = solver.solve(q)
                values[bi, di, ai] = np.sqrt(alpha) * energy_norm(mats.M_E, X)
                statics[bi, di, ai] = static_dissipation_check(mats, q, X)
                hys[bi, di, ai] = hille_yosida_ratio(mats, q, X)

    tail = min(4, n_a)
    tail_monotone = np.all(np.diff(values[:, :, n_a - tail:], axis=2) < 0, axis=2)
    dist = np.array([spectrum.distance(b) for b in betas])
    return SweepReport(betas=betas, alphas=alphas, values=values,
                       static_residuals=statics, hy_ratios=hys,
                       dist_to_S=dist, tail_monotone=tail_monotone, tail_length=tail)


# ---------------------------------------------------------------------------
# harmonic extension and zero-trace splitting
# ---------------------------------------------------------------------------


class HarmonicExtension:
    """Extends interface data to a stress-equilibrated field in the solid.

    Dg = v  with  (sigma(v), eps(psi)) = 0 for all interior tests psi and
    trace(v) = g exactly; realized by one factorization of the interior
    stiffness block.
    """

    def __init__(self, mesh: Mesh, params: LameParams,
                 dofs: DofMap | None = None, blocks=None):
        self.mesh = mesh
        self.params = params
        if dofs is None:
            dofs = build_dof_map(mesh)
        if blocks is None:
            blocks = assemble_blocks(mesh, dofs, params)
        self.dofs = dofs
        self.blocks = blocks
        sf = dofs.sf_pos
        self.int_rows = (3 * sf[dofs.solid_interior_vertices][:, None] + np.arange(3)).ravel()
        self.bnd_rows = (3 * sf[dofs.iface_vertices][:, None] + np.arange(3)).ravel()
        K = blocks.K_s
        self.K_ii = K[np.ix_(self.int_rows, self.int_rows)].tocsc()
        self.K_ib = K[np.ix_(self.int_rows, self.bnd_rows)].tocsr()
        try:
            self.lu = spla.splu(self.K_ii) if len(self.int_rows) else None
        except RuntimeError as exc:
            raise SolverBreakdown(f"interior stiffness factorization failed: {exc}") from exc

    def _solve_interior(self, rhs: np.ndarray) -> np.ndarray:
        if self.lu is None:
            return np.zeros_like(rhs)
        if np.iscomplexobj(rhs):
            return self.lu.solve(rhs.real) + 1j * self.lu.solve(rhs.imag)
        return self.lu.solve(rhs)

    def extend(self, g: np.ndarray) -> np.ndarray:
        """Interface field (n_iface, 3) -> solid field (n_solid, 3)."""
        g = np.asarray(g)
        gb = g.reshape(-1)
        vi = self._solve_interior(-(self.K_ib @ gb))
        out = np.zeros(3 * self.dofs.n_solid, dtype=np.result_type(g.dtype, float))
        out[self.bnd_rows] = gb
        out[self.int_rows] = vi
        return out.reshape(self.dofs.n_solid, 3)

    def interior_residual(self, v: np.ndarray) -> float:
        """Relative weak residual (sigma(v), eps(psi)) over interior tests."""
        r = (self.blocks.K_s @ v.reshape(-1))[self.int_rows]
        scale = max(float(np.linalg.norm(self.blocks.K_s @ v.reshape(-1))),
                    np.finfo(float).tiny)
        return float(np.linalg.norm(r)) / scale


def dirichlet_map(mesh: Mesh, params: LameParams, g: np.ndarray) -> np.ndarray:
    """Harmonic extension of interface data ``g`` (n_iface, 3) into the solid."""
    return HarmonicExtension(mesh, params).extend(g)


@dataclass
class ZSplitReport:
    """Residuals of the zero-trace splitting of the bulk displacement."""

    trace_residual: float
    interior_residual: float
    z: np.ndarray = field(repr=False, default=None)


def z_decomposition_check(mats: SystemMatrices, q: ResolventQuery, X: np.ndarray,
                          extension: HarmonicExtension | None = None) -> ZSplitReport:
    """Split w0 into a zero-trace part plus a harmonic extension and verify it.

    With g = (alpha w0 - u - w0*)|_interface and z = w0 - (i/beta) Dg, the
    displacement rows of the resolvent system force trace(z) = 0, and the
    interior rows force the weak identity

        -beta^2 (z, psi) + (sigma(z), eps(psi))
            = (i beta Dg - (alpha^2 + 2 i alpha beta) w0
               + (alpha + i beta) w0* + w1*, psi)

    for every interior test psi.  Both residuals are reported (relative).
    """
    if abs(q.beta) < np.finfo(float).tiny:
        raise BetaZero("zero-trace splitting needs beta != 0")
    dofs = mats.dofs
    if extension is None:
        extension = HarmonicExtension(mats.mesh, mats.params, dofs, mats.blocks)

    alpha, beta = q.alpha, q.beta
    s = alpha + 1j * beta
    h0 = dofs.h0_field(X)
    u_if = dofs.h1_field(X)
    w0f = dofs.w0_field(X).astype(complex)
    h0_star = dofs.h0_field(q.X_star)
    w0f_star = dofs.w0_field(q.X_star)
    w1f_star = dofs.w1_field(q.X_star)

    g = alpha * h0 - u_if - h0_star
    Dg = extension.extend(g)
    z = w0f - (1j / beta) * Dg

    zb = z.reshape(-1)[extension.bnd_rows]
    scale_tr = max(float(np.linalg.norm(w0f)), float(np.linalg.norm(Dg / abs(beta))),
                   np.finfo(float).tiny)
    trace_res = float(np.linalg.norm(zb)) / scale_tr

    F = (1j * beta * Dg.reshape(-1)
         - (alpha**2 + 2j * alpha * beta) * w0f.reshape(-1)
         + s * w0f_star.reshape(-1).astype(complex)
         + w1f_star.reshape(-1).astype(complex))
    M_s, K_s = mats.blocks.M_s, mats.blocks.K_s
    zr = z.reshape(-1)
    r = (-beta**2 * (M_s @ zr) + K_s @ zr - M_s @ F)[extension.int_rows]
    scale_in = max(float(np.linalg.norm(beta**2 * (M_s @ zr))),
                   float(np.linalg.norm(K_s @ zr)),
                   float(np.linalg.norm(M_s @ F)),
                   np.finfo(float).tiny)
    return ZSplitReport(trace_residual=trace_res,
                        interior_residual=float(np.linalg.norm(r)) / scale_in,
                        z=z)


# ---------------------------------------------------------------------------
# boundary traction, two routes
# ---------------------------------------------------------------------------


@dataclass
class TractionTrace:
    """Traction of a bulk field on one interface face, by two methods.

    ``pointwise`` holds one traction vector per face triangle (the frame
    formula applied to the adjacent solid element's constant gradient);
    ``variational`` holds flux-recovered nodal tractions at the face-interior
    vertices listed in ``interior_vertices`` (vertices on the face boundary
    are excluded because their recovery functional mixes adjacent faces).
    """

    face: int
    tri_ids: np.ndarray
    pointwise: np.ndarray            # (n_tris, 3)
    interior_vertices: np.ndarray    # vertex ids, face interior only
    variational: np.ndarray          # (n_interior, 3)


def traction_trace(mesh: Mesh, params: LameParams, v: np.ndarray, j: int,
                   body_force: np.ndarray | None = None,
                   dofs: DofMap | None = None, blocks=None) -> TractionTrace:
    """Boundary traction of bulk field ``v`` ((n_solid, 3), solid-vertex order).

    Method A evaluates, per face triangle, the frame expansion of the normal
    stress from the adjacent solid element's gradient:

        t = lam (dv/dnu . nu + dv/dtau1 . tau1 + dv/dtau2 . tau2) nu
            + 2 mu dv/dnu
            + mu [(dv/dtau1 . nu) - (dv/dnu . tau1)] tau1
            + mu [(dv/dtau2 . nu) - (dv/dnu . tau2)] tau2.

    Method B recovers nodal tractions variationally from
    <t, psi> = (body_force, psi) - (sigma(v), eps(psi)), localized by the
    lumped face mass; ``body_force`` is nodal data for -div sigma(v) (defaults
    to zero, exact for stress-equilibrated fields).
    """
    if not 1 <= j <= mesh.K:
        raise UnknownFace(f"face index {j} not in 1..{mesh.K}")
    if dofs is None:
        dofs = build_dof_map(mesh)
    if blocks is None:
        blocks = assemble_blocks(mesh, dofs, params)
    v = np.asarray(v, float)

    nu, tau1, tau2 = mesh.face_frames[j - 1]
    sel = np.flatnonzero(mesh.interface_face == j)
    tris = mesh.interface_tris[sel]

    # --- method A: per-element gradient in the face frame -----------------
    pointwise = np.empty((len(sel), 3))
    mu, lam = params.mu, params.lam
    for row, i in enumerate(sel):
        s_tet = mesh.interface_adj[i, 1]
        tet = mesh.tets[s_tet]
        verts = mesh.vertices[tet]
        edge = verts[1:] - verts[0]
        grads = np.empty((4, 3))
        grads[1:] = np.linalg.inv(edge).T
        grads[0] = -grads[1:].sum(axis=0)
        vloc = v[dofs.sf_pos[tet]]
        Gmat = vloc.T @ grads                       # G[k, d] = d v_k / d x_d
        d_nu, d_t1, d_t2 = Gmat @ nu, Gmat @ tau1, Gmat @ tau2
        pointwise[row] = (
            lam * (d_nu @ nu + d_t1 @ tau1 + d_t2 @ tau2) * nu
            + 2.0 * mu * d_nu
            + mu * ((d_t1 @ nu) - (d_nu @ tau1)) * tau1
            + mu * ((d_t2 @ nu) - (d_nu @ tau2)) * tau2
        )

    # --- method B: lumped variational flux recovery ------------------------
    face_verts = mesh.face_vertex_ids(j)
    on_edge = np.zeros(len(mesh.vertices), bool)
    for jj in range(1, mesh.K + 1):
        if jj != j:
            on_edge[np.intersect1d(face_verts, mesh.face_vertex_ids(jj))] = True
    interior = face_verts[~on_edge[face_verts]]

    R = -(blocks.K_s @ v.reshape(-1))
    if body_force is not None:
        R += blocks.M_s @ np.asarray(body_force, float).reshape(-1)

    # Lumped face mass: integral of each vertex's hat function over the face.
    lump = np.zeros(len(mesh.vertices))
    p = mesh.vertices[tris]
    areas = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    for t, tri in enumerate(tris):
        lump[tri] += areas[t] / 3.0

    rows = (3 * dofs.sf_pos[interior][:, None] + np.arange(3)).ravel()
    variational = (R[rows].reshape(-1, 3) / lump[interior][:, None])

    return TractionTrace(face=j, tri_ids=sel, pointwise=pointwise,
                         interior_vertices=interior, variational=variational)


def traction_discrepancy(mesh: Mesh, trace: TractionTrace) -> float:
    """Area-weighted RMS gap between the two traction routes.

    Method A is averaged onto the face-interior vertices (area weights) and
    compared there against the variational recovery.
    """
    tris = mesh.interface_tris[trace.tri_ids]
    p = mesh.vertices[tris]
    areas = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    acc = {int(vtx): (np.zeros(3), 0.0) for vtx in trace.interior_vertices}
    for t, tri in enumerate(tris):
        for vtx in tri:
            if int(vtx) in acc:
                s, w = acc[int(vtx)]
                acc[int(vtx)] = (s + areas[t] * trace.pointwise[t], w + areas[t])

    num, den = 0.0, 0.0
    for row, vtx in enumerate(trace.interior_vertices):
        s, w = acc[int(vtx)]
        nodal_a = s / w
        num += w * float(np.sum(np.abs(trace.variational[row] - nodal_a) ** 2))
        den += w
    return float(np.sqrt(num / den)) if den > 0 else 0.0


# ---------------------------------------------------------------------------
# thin-layer momentum balance
# ---------------------------------------------------------------------------


def thin_identity_check(mats: SystemMatrices, q: ResolventQuery, X: np.ndarray) -> float:
    """Thin-layer momentum balance of a resolvent solution, tested against h0.

    The interface rows of the monolithic system split into a fluid flux
    functional, a bulk flux functional, the thin inertial terms, and the thin
    static terms; their pairing with h0 must cancel exactly (the face-edge
    terms are natural and never appear).  Returns the relative defect.
    """
    dofs, blocks = mats.dofs, mats.blocks
    s = q.alpha + 1j * q.beta
    rows = (3 * dofs.u_pos[dofs.iface_vertices][:, None] + np.arange(3)).ravel()

    u = X[: 3 * dofs.n_u]
    u_star = q.X_star[: 3 * dofs.n_u]
    h0 = dofs.h0_field(X).reshape(-1)
    w0f = dofs.w0_field(X).reshape(-1)
    w1f = dofs.w1_field(X).reshape(-1)
    w1f_star = dofs.w1_field(q.X_star).reshape(-1)

    bnd = (3 * dofs.sf_pos[dofs.iface_vertices][:, None] + np.arange(3)).ravel()

    F_fluid = (s * (blocks.M_f @ u) + blocks.K_f @ u - blocks.M_f @ u_star)[rows]
    F_thin_inertia = (s * (blocks.T_iface @ u) - blocks.T_iface @ u_star)[rows]
    F_solid = (s * (blocks.M_s @ w1f) + blocks.K_s @ w0f - blocks.M_s @ w1f_star)[bnd]
    F_static = (blocks.K_thin + blocks.M_thin) @ h0

    terms = [complex(np.vdot(h0, F)) for F in (F_fluid, F_thin_inertia, F_solid, F_static)]
    total = sum(terms)
    scale = max(max(abs(t) for t in terms), np.finfo(float).tiny)
    return abs(total) / scale
