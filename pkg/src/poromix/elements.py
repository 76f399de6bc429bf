"""Element bases and degree-of-freedom maps for the five-field discretization.

Three families are implemented on triangles:

* ``DGScalarSpace``: discontinuous polynomials, one L2-orthonormal basis per
  cell (strain/displacement components and rotation reuse it).
* ``LagrangeSpace``: continuous Lagrange elements of degree 1 or 2 (pressure).
* ``BDMSpace``: H(div)-conforming Brezzi-Douglas-Marini elements of degree 1
  or 2; each row of the stress tensor is one BDM field.

BDM bases are constructed cell by cell as duals of explicit functionals:
moments of the normal component against shifted Legendre polynomials on each
edge (parametrized along the *global* edge direction, normal taken outward),
plus, for degree 2, interior moments against {e_x, e_y, (-y, x)}.  Because the
edge functionals only differ between the two incident cells by the sign of the
outward normal, sharing a global degree of freedom with a +/-1 orientation
factor makes the normal trace continuous across interior edges exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import LOCAL_EDGE_VERTICES
from .quadrature import edge_quadrature, quadrature_for


def monomial_exponents(degree):
    """Exponent pairs of the scalar monomials of total degree <= degree."""
    return np.array([(a, d - a) for d in range(degree + 1) for a in range(d + 1)])


def eval_monomials(exps, xhat):
    """Values of monomials at scaled coordinates, shape (..., nb)."""
    x = xhat[..., 0][..., None]
    y = xhat[..., 1][..., None]
    return x ** exps[:, 0] * y ** exps[:, 1]


def eval_monomial_grads(exps, xhat):
    """d/dxhat of monomials, shape (..., nb, 2)."""
    x = xhat[..., 0][..., None]
    y = xhat[..., 1][..., None]
    a = exps[:, 0]
    b = exps[:, 1]
    with np.errstate(invalid="ignore"):
        gx = np.where(a > 0, a * x ** np.maximum(a - 1, 0) * y ** b, 0.0)
        gy = np.where(b > 0, b * x ** a * y ** np.maximum(b - 1, 0), 0.0)
    return np.stack([gx, gy], axis=-1)


def shifted_legendre(m, s):
    """Legendre polynomial of degree m on [0, 1]."""
    c = np.zeros(m + 1)
    c[m] = 1.0
    return np.polynomial.legendre.legval(2.0 * np.asarray(s) - 1.0, c)


class CellGeometry:
    """Affine maps, centroids and scaling for every cell of a mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        p = mesh.triangle_coords()           # (nt, 3, 2)
        self.origin = p[:, 0]
        self.jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (nt,2,2)
        self.detj = (
            self.jac[:, 0, 0] * self.jac[:, 1, 1] - self.jac[:, 0, 1] * self.jac[:, 1, 0]
        )
        self.jac_inv = np.empty_like(self.jac)
        self.jac_inv[:, 0, 0] = self.jac[:, 1, 1] / self.detj
        self.jac_inv[:, 0, 1] = -self.jac[:, 0, 1] / self.detj
        self.jac_inv[:, 1, 0] = -self.jac[:, 1, 0] / self.detj
        self.jac_inv[:, 1, 1] = self.jac[:, 0, 0] / self.detj
        self.centroid = p.mean(axis=1)
        self.scale = mesh.diameters()
        self.area = 0.5 * self.detj

    def physical_points(self, ref_points):
        """Map reference points to every cell, shape (nt, nq, 2)."""
        return self.origin[:, None, :] + np.einsum(
            "tij,qj->tqi", self.jac, ref_points
        )

    def scaled(self, phys_points):
        """(x - centroid)/h per cell for physical points of shape (nt, nq, 2)."""
        return (phys_points - self.centroid[:, None, :]) / self.scale[:, None, None]


class DGScalarSpace:
    """Discontinuous scalar polynomials with per-cell L2-orthonormal bases."""

    def __init__(self, geom, degree):
        self.geom = geom
        self.degree = degree
        self.exps = monomial_exponents(degree)
        self.nloc = len(self.exps)
        self.ndofs = geom.mesh.num_triangles * self.nloc

        rule = quadrature_for(2 * degree)
        pts = geom.physical_points(rule.points)
        mono = eval_monomials(self.exps, geom.scaled(pts))        # (nt, nq, nb)
        w = 2.0 * geom.area[:, None] * rule.weights[None, :]      # (nt, nq)
        gram = np.einsum("tq,tqi,tqj->tij", w, mono, mono)
        L = np.linalg.cholesky(gram)
        eye = np.broadcast_to(np.eye(self.nloc), L.shape)
        # rows of A are the orthonormal-basis coefficients: A gram A^T = I
        self.coeff = np.linalg.solve(L, eye)

    def cell_dofs(self):
        nt = self.geom.mesh.num_triangles
        return np.arange(nt * self.nloc).reshape(nt, self.nloc)

    def eval(self, phys_points, cells=None):
        """Basis values at physical points, shape (nt, nq, nloc)."""
        geom = self.geom
        if cells is None:
            xhat = geom.scaled(phys_points)
            coeff = self.coeff
        else:
            xhat = (phys_points - geom.centroid[cells, None, :]) / geom.scale[
                cells, None, None
            ]
            coeff = self.coeff[cells]
        mono = eval_monomials(self.exps, xhat)
        return np.einsum("tij,tqj->tqi", coeff, mono)

    def eval_grad(self, phys_points, cells=None):
        geom = self.geom
        if cells is None:
            cells = slice(None)
        xhat = (phys_points - geom.centroid[cells, None, :]) / geom.scale[
            cells, None, None
        ]
        dmono = eval_monomial_grads(self.exps, xhat) / geom.scale[cells, None, None, None]
        return np.einsum("tij,tqjd->tqid", self.coeff[cells], dmono)


class LagrangeSpace:
    """Continuous Lagrange elements of degree 1 or 2 on triangles."""

    def __init__(self, geom, degree):
        if degree not in (1, 2):
            raise ValueError(f"unsupported Lagrange degree {degree}")
        self.geom = geom
        self.degree = degree
        mesh = geom.mesh
        if degree == 1:
            self.nloc = 3
            self.ndofs = mesh.num_vertices
            self._cell_dofs = mesh.triangles.copy()
        else:
            self.nloc = 6
            self.ndofs = mesh.num_vertices + mesh.num_edges
            self._cell_dofs = np.concatenate(
                [mesh.triangles, mesh.num_vertices + mesh.tri_edges], axis=1
            )
        self.node_coords = self._node_coordinates()

    def _node_coordinates(self):
        mesh = self.geom.mesh
        if self.degree == 1:
            return mesh.vertices.copy()
        mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
        return np.concatenate([mesh.vertices, mids], axis=0)

    def cell_dofs(self):
        return self._cell_dofs

    @staticmethod
    def _bary(ref_points):
        x = ref_points[..., 0]
        y = ref_points[..., 1]
        return np.stack([1.0 - x - y, x, y], axis=-1)

    def shape_values(self, ref_points):
        """Values at reference points, shape (nq, nloc); same for all cells."""
        lam = self._bary(ref_points)
        if self.degree == 1:
            return lam
        vals = [lam[..., i] * (2.0 * lam[..., i] - 1.0) for i in range(3)]
        for a, b in LOCAL_EDGE_VERTICES:
            vals.append(4.0 * lam[..., a] * lam[..., b])
        return np.stack(vals, axis=-1)

    def shape_ref_grads(self, ref_points):
        """d/dref of the shape functions, shape (nq, nloc, 2)."""
        lam = self._bary(ref_points)
        dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # (3, 2)
        if self.degree == 1:
            return np.broadcast_to(dlam, lam.shape[:-1] + (3, 2)).copy()
        grads = [
            (4.0 * lam[..., i] - 1.0)[..., None] * dlam[i] for i in range(3)
        ]
        for a, b in LOCAL_EDGE_VERTICES:
            grads.append(4.0 * (lam[..., a][..., None] * dlam[b] + lam[..., b][..., None] * dlam[a]))
        return np.stack(grads, axis=-2)

    def eval(self, ref_points):
        return self.shape_values(ref_points)

    def eval_grad(self, ref_points, cells=None):
        """Physical gradients, shape (nt, nq, nloc, 2)."""
        if cells is None:
            cells = slice(None)
        ref = self.shape_ref_grads(ref_points)                    # (nq, nloc, 2)
        jinv = self.geom.jac_inv[cells]                           # (nt, 2, 2)
        return np.einsum("qld,tde->tqle", ref, jinv)

    def edge_local_nodes(self, local_edge):
        """Local indices of the nodes lying on a local edge."""
        a, b = LOCAL_EDGE_VERTICES[local_edge]
        if self.degree == 1:
            return [a, b]
        return [a, b, 3 + local_edge]


class BDMSpace:
    """H(div)-conforming BDM elements of degree 1 or 2 (vector-valued)."""

    def __init__(self, geom, degree):
        if degree not in (1, 2):
            raise ValueError(f"unsupported BDM degree {degree}")
        self.geom = geom
        self.degree = degree
        mesh = geom.mesh
        self.exps = monomial_exponents(degree)
        nbs = len(self.exps)
        self.nloc = 2 * nbs
        self.moments_per_edge = degree + 1
        self.n_interior = 0 if degree == 1 else 3
        self.ndofs = (
            mesh.num_edges * self.moments_per_edge + mesh.num_triangles * self.n_interior
        )
        self._build_cell_dofs()
        self._build_dual_bases()

    def _build_cell_dofs(self):
        mesh = self.geom.mesh
        nt = mesh.num_triangles
        mpe = self.moments_per_edge
        dofs = np.empty((nt, self.nloc), dtype=int)
        signs = np.ones((nt, self.nloc), dtype=int)
        for le in range(3):
            cols = slice(le * mpe, (le + 1) * mpe)
            dofs[:, cols] = mesh.tri_edges[:, le][:, None] * mpe + np.arange(mpe)
            signs[:, cols] = mesh.tri_edge_signs[:, le][:, None]
        if self.n_interior:
            base = mesh.num_edges * mpe
            dofs[:, 3 * mpe:] = base + np.arange(nt)[:, None] * self.n_interior + np.arange(
                self.n_interior
            )
        self._cell_dofs = dofs
        self._cell_signs = signs

    def cell_dofs(self):
        return self._cell_dofs

    def cell_signs(self):
        return self._cell_signs

    def _edge_geometry(self, le):
        """Outward normal, global-direction parameter values and length per cell."""
        mesh = self.geom.mesh
        p = mesh.triangle_coords()
        a, b = LOCAL_EDGE_VERTICES[le]
        pa, pb = p[:, a], p[:, b]
        d = pb - pa
        length = np.linalg.norm(d, axis=1)
        t = d / length[:, None]
        n_out = np.stack([t[:, 1], -t[:, 0]], axis=1)  # CCW cell: rotate by -90 deg
        return pa, pb, n_out, length

    def _vector_mono(self, xhat):
        """Vector monomials at scaled points: (..., nloc, 2), component-major."""
        mono = eval_monomials(self.exps, xhat)                    # (..., nbs)
        nbs = mono.shape[-1]
        out = np.zeros(mono.shape[:-1] + (2 * nbs, 2))
        out[..., :nbs, 0] = mono
        out[..., nbs:, 1] = mono
        return out

    def _vector_mono_div(self, xhat, cells=None):
        if cells is None:
            cells = slice(None)
        scale = self.geom.scale[cells]
        dm = eval_monomial_grads(self.exps, xhat)                 # (t, q, nbs, 2)
        nbs = dm.shape[-2]
        out = np.empty(dm.shape[:-2] + (2 * nbs,))
        out[..., :nbs] = dm[..., 0] / scale[:, None, None]
        out[..., nbs:] = dm[..., 1] / scale[:, None, None]
        return out

    def _build_dual_bases(self):
        geom = self.geom
        mesh = geom.mesh
        nt = mesh.num_triangles
        mpe = self.moments_per_edge
        V = np.empty((nt, self.nloc, self.nloc))

        s_ref, w_ref = edge_quadrature(2 * self.degree + 1)
        for le in range(3):
            pa, pb, n_out, length = self._edge_geometry(le)
            # parametrize along the global (low -> high) direction
            flip = mesh.tri_edge_signs[:, le] == -1
            s_glob = np.where(flip[:, None], 1.0 - s_ref[None, :], s_ref[None, :])
            pts = pa[:, None, :] + s_ref[None, :, None] * (pb - pa)[:, None, :]
            psi = self._vector_mono(geom.scaled(pts))             # (nt, nq, nloc, 2)
            psi_n = np.einsum("tqlc,tc->tql", psi, n_out)
            for m in range(mpe):
                leg = shifted_legendre(m, s_glob)                 # (nt, nq)
                V[:, le * mpe + m, :] = length[:, None] * np.einsum(
                    "q,tq,tql->tl", w_ref, leg, psi_n
                )

        if self.n_interior:
            rule = quadrature_for(2 * self.degree)
            pts = geom.physical_points(rule.points)
            xhat = geom.scaled(pts)
            psi = self._vector_mono(xhat)
            w = 2.0 * geom.area[:, None] * rule.weights[None, :]
            tests = np.zeros(xhat.shape[:2] + (3, 2))
            tests[..., 0, 0] = 1.0
            tests[..., 1, 1] = 1.0
            tests[..., 2, 0] = -xhat[..., 1]
            tests[..., 2, 1] = xhat[..., 0]
            inertia = np.einsum("tq,tqlc,tqjc->tjl", w, psi, tests)
            V[:, 3 * mpe:, :] = inertia / geom.area[:, None, None]

        # columns of coeff give the dual basis in the vector-monomial basis
        self.coeff = np.linalg.inv(V)

    def eval(self, phys_points, cells=None):
        """Basis values, shape (nt, nq, nloc, 2)."""
        geom = self.geom
        if cells is None:
            cells = slice(None)
        xhat = (phys_points - geom.centroid[cells, None, :]) / geom.scale[
            cells, None, None
        ]
        psi = self._vector_mono(xhat)
        return np.einsum("tbj,tqbc->tqjc", self.coeff[cells], psi)

    def eval_div(self, phys_points, cells=None):
        """Divergence of the basis, shape (nt, nq, nloc)."""
        geom = self.geom
        if cells is None:
            cells = slice(None)
        xhat = (phys_points - geom.centroid[cells, None, :]) / geom.scale[
            cells, None, None
        ]
        dpsi = self._vector_mono_div(xhat, cells)
        return np.einsum("tbj,tqb->tqj", self.coeff[cells], dpsi)


@dataclass
class SpaceSet:
    """The five discrete spaces of the weak-symmetry scheme for degree k."""

    mesh: object
    k: int
    geom: CellGeometry
    strain_scalar: DGScalarSpace      # degree k+1, shared by the 4 components
    pressure: LagrangeSpace           # degree k+1, continuous
    bdm: BDMSpace                     # degree k+1, one instance per stress row
    disp_scalar: DGScalarSpace        # degree k, shared by the 2 components
    rotation: DGScalarSpace           # degree k (skew scalar = (1,2) entry)

    @property
    def n_strain(self):
        return 4 * self.strain_scalar.ndofs

    @property
    def n_pressure(self):
        return self.pressure.ndofs

    @property
    def n_stress(self):
        return 2 * self.bdm.ndofs

    @property
    def n_displacement(self):
        return 2 * self.disp_scalar.ndofs

    @property
    def n_rotation(self):
        return self.rotation.ndofs

    @property
    def total(self):
        return (
            self.n_strain
            + self.n_pressure
            + self.n_stress
            + self.n_displacement
            + self.n_rotation
        )

    # local/global DOF layouts of the composite fields -----------------------
    # strain: component-major per cell, components ordered (xx, xy, yx, yy)
    def strain_cell_dofs(self):
        nt = self.mesh.num_triangles
        nb = self.strain_scalar.nloc
        return np.arange(nt * 4 * nb).reshape(nt, 4 * nb)

    # displacement: component-major per cell, components (x, y)
    def displacement_cell_dofs(self):
        nt = self.mesh.num_triangles
        nb = self.disp_scalar.nloc
        return np.arange(nt * 2 * nb).reshape(nt, 2 * nb)

    # stress: row-major over the two BDM copies
    def stress_cell_dofs(self):
        bdm_dofs = self.bdm.cell_dofs()
        return np.concatenate([bdm_dofs, self.bdm.ndofs + bdm_dofs], axis=1)

    def stress_cell_signs(self):
        s = self.bdm.cell_signs()
        return np.concatenate([s, s], axis=1)

    def assembly_quadrature_degree(self):
        return 2 * (self.k + 2)


STRAIN_COMPONENTS = ((0, 0), (0, 1), (1, 0), (1, 1))


def make_space_set(mesh, k):
    """Build the AFW-family space set of degree k in {0, 1} on a mesh."""
    if k not in (0, 1):
        raise ValueError(f"unsupported polynomial degree k={k}")
    geom = CellGeometry(mesh)
    return SpaceSet(
        mesh=mesh,
        k=k,
        geom=geom,
        strain_scalar=DGScalarSpace(geom, k + 1),
        pressure=LagrangeSpace(geom, k + 1),
        bdm=BDMSpace(geom, k + 1),
        disp_scalar=DGScalarSpace(geom, k),
        rotation=DGScalarSpace(geom, k),
    )
