"""Box-in-box tetrahedral geometry.

An axis-aligned inner box (the solid) sits strictly inside an outer box (the
fluid).  The outer box is partitioned into an ``n x n x n`` grid of cells and
every cell is split into six tetrahedra (Kuhn subdivision), which yields a
conforming mesh whose element counts are known in closed form.  The solid
boundary decomposes into K = 6 flat polygonal faces; each face carries a
constant orthonormal frame ``(nu, tau1, tau2)``.

Orientation convention: on each interface face the unit normal ``nu`` points
from the fluid region into the solid region, and ``(nu, tau1, tau2)`` is
right-handed (``tau1 x tau2 = nu``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBox, GridMisaligned, UnknownFace

FLUID = 0
SOLID = 1

# Cell-to-tet subdivision: one tet per permutation of the three axis steps.
# Odd permutations get their last two vertices swapped so that every tet has
# positive orientation.
_KUHN_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
_PERM_SIGNS = (1, -1, -1, 1, 1, -1)


def _axis_unit(a: int, sign: float = 1.0) -> np.ndarray:
    e = np.zeros(3)
    e[a] = sign
    return e


@dataclass(frozen=True)
class GeometryConfig:
    """Box-in-box geometry description.

    ``outer_lo/outer_hi`` bound the fluid container, ``inner_lo/inner_hi`` the
    immersed solid.  ``n`` is the number of grid cells per axis; the inner-box
    faces must land exactly on grid planes.
    """

    n: int = 8
    outer_lo: tuple[float, float, float] = (0.0, 0.0, 0.0)
    outer_hi: tuple[float, float, float] = (1.0, 1.0, 1.0)
    inner_lo: tuple[float, float, float] = (0.25, 0.25, 0.25)
    inner_hi: tuple[float, float, float] = (0.75, 0.75, 0.75)

    def validate(self) -> None:
        if self.n < 1:
            raise GridMisaligned("n", f"grid resolution must be >= 1, got {self.n}")
        o_lo, o_hi = np.asarray(self.outer_lo, float), np.asarray(self.outer_hi, float)
        i_lo, i_hi = np.asarray(self.inner_lo, float), np.asarray(self.inner_hi, float)
        if not np.all(o_hi > o_lo):
            raise DegenerateBox("outer_box", "outer box has non-positive extent")
        if not np.all(i_hi > i_lo):
            raise DegenerateBox("inner_box", "inner box has non-positive extent")
        if not (np.all(i_lo > o_lo) and np.all(i_hi < o_hi)):
            raise DegenerateBox("inner_box", "inner box must be strictly interior to the outer box")
        lo_idx, hi_idx = self._plane_indices()
        spacing = (o_hi - o_lo) / self.n
        for a in range(3):
            lo_err = abs(o_lo[a] + lo_idx[a] * spacing[a] - i_lo[a])
            hi_err = abs(o_lo[a] + hi_idx[a] * spacing[a] - i_hi[a])
            if lo_err > 1e-9 * spacing[a] or hi_err > 1e-9 * spacing[a]:
                raise GridMisaligned(
                    "n", f"inner box faces on axis {a} are not on grid planes for n={self.n}"
                )
        if np.any(lo_idx < 1) or np.any(hi_idx > self.n - 1) or np.any(hi_idx <= lo_idx):
            raise DegenerateBox("inner_box", "inner box leaves no fluid layer or no solid cells")

    def _plane_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Grid-plane indices of the inner-box faces (rounded)."""
        o_lo = np.asarray(self.outer_lo, float)
        spacing = (np.asarray(self.outer_hi, float) - o_lo) / self.n
        lo_idx = np.rint((np.asarray(self.inner_lo, float) - o_lo) / spacing).astype(int)
        hi_idx = np.rint((np.asarray(self.inner_hi, float) - o_lo) / spacing).astype(int)
        return lo_idx, hi_idx


@dataclass(frozen=True)
class SharedEdge:
    """One inner-box edge shared by interface faces ``j`` and ``l`` (1-based).

    ``edges`` lists the mesh edges (vertex-id pairs) lying on the shared box
    edge; ``n_j``/``n_l`` are the in-face outward conormals of the two faces.
    """

    j: int
    l: int
    edges: np.ndarray
    n_j: np.ndarray
    n_l: np.ndarray


@dataclass
class Mesh:
    """Conforming tetrahedral partition of the box-in-box geometry."""

    config: GeometryConfig
    vertices: np.ndarray          # (V, 3) float
    vertex_grid: np.ndarray       # (V, 3) int grid indices
    tets: np.ndarray              # (T, 4) int, positively oriented
    tet_tags: np.ndarray          # (T,) uint8, FLUID or SOLID
    exterior_tris: np.ndarray     # (E, 3) int, facets on the outer boundary
    interface_tris: np.ndarray    # (I, 3) int, facets between fluid and solid
    interface_face: np.ndarray    # (I,) int in 1..6
    interface_adj: np.ndarray     # (I, 2) int: (fluid tet, solid tet)
    face_frames: np.ndarray       # (6, 3, 3): rows nu, tau1, tau2 per face
    lo_idx: np.ndarray = field(repr=False, default=None)
    hi_idx: np.ndarray = field(repr=False, default=None)

    K = 6

    # -- vertex classification (exact, via integer grid indices) ------------

    def on_outer_boundary(self) -> np.ndarray:
        g, n = self.vertex_grid, self.config.n
        return np.any((g == 0) | (g == n), axis=1)

    def on_interface(self) -> np.ndarray:
        g = self.vertex_grid
        inside = np.all((g >= self.lo_idx) & (g <= self.hi_idx), axis=1)
        on_skin = np.any((g == self.lo_idx) | (g == self.hi_idx), axis=1)
        return inside & on_skin

    def in_solid_interior(self) -> np.ndarray:
        g = self.vertex_grid
        return np.all((g > self.lo_idx) & (g < self.hi_idx), axis=1)

    def interface_vertex_ids(self) -> np.ndarray:
        return np.flatnonzero(self.on_interface())

    def face_vertex_ids(self, j: int) -> np.ndarray:
        """Sorted vertex ids of the closed face patch ``Gamma_j`` (1-based j)."""
        self._check_face(j)
        tris = self.interface_tris[self.interface_face == j]
        return np.unique(tris)

    def face_area(self, j: int) -> float:
        self._check_face(j)
        tris = self.interface_tris[self.interface_face == j]
        p = self.vertices[tris]
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return float(0.5 * np.linalg.norm(cross, axis=1).sum())

    def tet_volumes(self) -> np.ndarray:
        p = self.vertices[self.tets]
        return np.linalg.det(p[:, 1:] - p[:, :1]) / 6.0

    def _check_face(self, j: int) -> None:
        if not 1 <= j <= self.K:
            raise UnknownFace(f"face index {j} not in 1..{self.K}")

    # -- invariant audit ------------------------------------------------------

    def validate(self) -> list[tuple[str, bool, float]]:
        """Run the mesh invariants; returns (name, passed, value) triples."""
        checks: list[tuple[str, bool, float]] = []
        vols = self.tet_volumes()
        checks.append(("tet_volumes_positive", bool(np.all(vols > 0)), float(vols.min())))
        o_lo = np.asarray(self.config.outer_lo)
        o_hi = np.asarray(self.config.outer_hi)
        box_vol = float(np.prod(o_hi - o_lo))
        vol_err = abs(vols.sum() - box_vol) / box_vol
        checks.append(("volume_partition", vol_err <= 1e-12, vol_err))

        facets: dict[tuple[int, int, int], list[int]] = {}
        for t, tet in enumerate(self.tets):
            for f in range(4):
                key = tuple(sorted(np.delete(tet, f)))
                facets.setdefault(key, []).append(t)
        bad = sum(1 for owners in facets.values() if len(owners) > 2)
        checks.append(("watertight", bad == 0, float(bad)))

        boundary = {k for k, owners in facets.items() if len(owners) == 1}
        ext = {tuple(sorted(tri)) for tri in self.exterior_tris}
        checks.append(("exterior_facets_match", boundary == ext, float(len(boundary ^ ext))))

        iface = {
            k
            for k, owners in facets.items()
            if len(owners) == 2 and self.tet_tags[owners[0]] != self.tet_tags[owners[1]]
        }
        got = {tuple(sorted(tri)) for tri in self.interface_tris}
        checks.append(("interface_facets_match", iface == got, float(len(iface ^ got))))

        centroids = self.vertices[self.tets].mean(axis=1)
        worst = np.inf
        for i in range(len(self.interface_tris)):
            nu = self.face_frames[self.interface_face[i] - 1, 0]
            f_tet, s_tet = self.interface_adj[i]
            worst = min(worst, float(nu @ (centroids[s_tet] - centroids[f_tet])))
        checks.append(("interface_orientation", worst > 0, worst))

        frame_err = 0.0
        for j in range(self.K):
            F = self.face_frames[j]
            frame_err = max(frame_err, float(np.abs(F @ F.T - np.eye(3)).max()))
            frame_err = max(frame_err, float(np.abs(np.cross(F[1], F[2]) - F[0]).max()))
        checks.append(("face_frames_orthonormal", frame_err <= 1e-15, frame_err))
        return checks


def build_mesh(cfg: GeometryConfig) -> Mesh:
    """Mesh the box-in-box geometry by Kuhn subdivision of the cell grid.

    Vertex and element ordering is deterministic (lexicographic in grid
    indices, fixed permutation order within each cell), so repeated builds
    are bit-identical.
    """
    cfg.validate()
    n = cfg.n
    o_lo = np.asarray(cfg.outer_lo, float)
    o_hi = np.asarray(cfg.outer_hi, float)
    spacing = (o_hi - o_lo) / n
    lo_idx, hi_idx = cfg._plane_indices()

    axes = [o_lo[a] + spacing[a] * np.arange(n + 1) for a in range(3)]
    ii, jj, kk = np.meshgrid(np.arange(n + 1), np.arange(n + 1), np.arange(n + 1), indexing="ij")
    vertex_grid = np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()]).astype(int)
    vertices = np.column_stack([axes[0][vertex_grid[:, 0]],
                                axes[1][vertex_grid[:, 1]],
                                axes[2][vertex_grid[:, 2]]])

    def vid(i: np.ndarray, j: np.ndarray, k: np.ndarray) -> np.ndarray:
        return (i * (n + 1) + j) * (n + 1) + k

    ci, cj, ck = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    cells = np.column_stack([ci.ravel(), cj.ravel(), ck.ravel()])
    solid_cell = np.all((cells >= lo_idx) & (cells <= hi_idx - 1), axis=1)

    tets = np.empty((len(cells) * 6, 4), dtype=int)
    tags = np.empty(len(cells) * 6, dtype=np.uint8)
    steps = np.eye(3, dtype=int)
    for p, perm in enumerate(_KUHN_PERMS):
        corners = np.zeros((4, 3), dtype=int)
        for m, axis in enumerate(perm):
            corners[m + 1] = corners[m] + steps[axis]
        local = [vid(cells[:, 0] + c[0], cells[:, 1] + c[1], cells[:, 2] + c[2]) for c in corners]
        if _PERM_SIGNS[p] < 0:
            local[2], local[3] = local[3], local[2]
        tets[p::6] = np.column_stack(local)
        tags[p::6] = np.where(solid_cell, SOLID, FLUID)

    # Facet pass: boundary facets (one owner) and fluid/solid facets.
    facets: dict[tuple[int, int, int], list[int]] = {}
    for t in range(len(tets)):
        a, b, c, d = tets[t]
        for key in ((b, c, d), (a, c, d), (a, b, d), (a, b, c)):
            facets.setdefault(tuple(sorted(key)), []).append(t)

    exterior, iface_tris, iface_face, iface_adj = [], [], [], []
    for key, owners in facets.items():
        if len(owners) == 1:
            exterior.append(key)
        elif tags[owners[0]] != tags[owners[1]]:
            j = _classify_face(np.asarray(key), vertex_grid, lo_idx, hi_idx)
            iface_tris.append(key)
            iface_face.append(j)
            fluid_first = owners if tags[owners[0]] == FLUID else owners[::-1]
            iface_adj.append(fluid_first)

    order = np.lexsort(np.asarray(iface_tris, dtype=int).T[::-1])
    iface_tris = np.asarray(iface_tris, dtype=int)[order]
    iface_face = np.asarray(iface_face, dtype=int)[order]
    iface_adj = np.asarray(iface_adj, dtype=int)[order]
    ext = np.asarray(sorted(exterior), dtype=int)

    frames = np.empty((6, 3, 3))
    for j in range(1, 7):
        frames[j - 1] = _frame_for_face(j)

    return Mesh(
        config=cfg,
        vertices=vertices,
        vertex_grid=vertex_grid,
        tets=tets,
        tet_tags=tags,
        exterior_tris=ext,
        interface_tris=iface_tris,
        interface_face=iface_face,
        interface_adj=iface_adj,
        face_frames=frames,
        lo_idx=lo_idx,
        hi_idx=hi_idx,
    )


def _classify_face(tri: np.ndarray, vertex_grid: np.ndarray, lo_idx, hi_idx) -> int:
    """Face index 1..6 of an interface facet: (x lo, x hi, y lo, y hi, z lo, z hi)."""
    g = vertex_grid[tri]
    for a in range(3):
        if np.all(g[:, a] == lo_idx[a]):
            return 2 * a + 1
        if np.all(g[:, a] == hi_idx[a]):
            return 2 * a + 2
    raise AssertionError("interface facet not on an inner-box plane")


def _frame_for_face(j: int) -> np.ndarray:
    """Constant frame of face j: nu fluid->solid, tau1 = e_{(a+1)%3}, right-handed."""
    a, high = divmod(j - 1, 2)
    sign = -1.0 if high else 1.0          # low face: solid sits at larger coordinate
    nu = _axis_unit(a, sign)
    tau1 = _axis_unit((a + 1) % 3)
    tau2 = _axis_unit((a + 2) % 3, sign)  # chosen so tau1 x tau2 = nu
    return np.vstack([nu, tau1, tau2])


def face_frame(mesh: Mesh, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal frame (nu, tau1, tau2) of interface face ``j`` (1-based)."""
    if not 1 <= j <= Mesh.K:
        raise UnknownFace(f"face index {j} not in 1..{Mesh.K}")
    F = mesh.face_frames[j - 1]
    return F[0].copy(), F[1].copy(), F[2].copy()


def shared_edge_table(mesh: Mesh) -> list[SharedEdge]:
    """All inner-box edges shared by two interface faces, with conormals.

    The conormal ``n_j`` lies in the plane of face j, is orthogonal to the
    edge direction, and points out of the face patch.
    """
    lo_idx, hi_idx = mesh.lo_idx, mesh.hi_idx
    n_plus_1 = mesh.config.n + 1

    def vid(i, j, k):
        return (i * n_plus_1 + j) * n_plus_1 + k

    table: list[SharedEdge] = []
    for a_j in range(3):
        for a_l in range(a_j + 1, 3):
            free = 3 - a_j - a_l
            for s_j, idx_j in ((0, lo_idx[a_j]), (1, hi_idx[a_j])):
                for s_l, idx_l in ((0, lo_idx[a_l]), (1, hi_idx[a_l])):
                    j = 2 * a_j + 1 + s_j
                    l = 2 * a_l + 1 + s_l
                    grid = np.zeros((hi_idx[free] - lo_idx[free] + 1, 3), dtype=int)
                    grid[:, a_j] = idx_j
                    grid[:, a_l] = idx_l
                    grid[:, free] = np.arange(lo_idx[free], hi_idx[free] + 1)
                    vids = vid(grid[:, 0], grid[:, 1], grid[:, 2])
                    edges = np.column_stack([vids[:-1], vids[1:]])
                    # Outward conormal of face j points along the *other*
                    # face's axis, away from face j's interior.
                    n_j = _axis_unit(a_l, 1.0 if s_l else -1.0)
                    n_l = _axis_unit(a_j, 1.0 if s_j else -1.0)
                    table.append(SharedEdge(j=j, l=l, edges=edges, n_j=n_j, n_l=n_l))
    return table


def export_mesh(mesh: Mesh) -> str:
    """Plain-text export: vertex table, tet table with tags, interface table."""
    lines = [f"vertices {len(mesh.vertices)}"]
    for i, v in enumerate(mesh.vertices):
        lines.append(f"{i} {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    lines.append(f"tets {len(mesh.tets)}")
    for i, (tet, tag) in enumerate(zip(mesh.tets, mesh.tet_tags)):
        name = "solid" if tag == SOLID else "fluid"
        lines.append(f"{i} {tet[0]} {tet[1]} {tet[2]} {tet[3]} {name}")
    lines.append(f"interface {len(mesh.interface_tris)}")
    for i, (tri, j) in enumerate(zip(mesh.interface_tris, mesh.interface_face)):
        lines.append(f"{i} {tri[0]} {tri[1]} {tri[2]} {j}")
    return "\n".join(lines) + "\n"
