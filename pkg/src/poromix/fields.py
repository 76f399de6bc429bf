"""Pointwise reconstruction of the five fields from a monolithic vector."""

from __future__ import annotations

import numpy as np

from .assembly import BlockLayout

SKEW = np.array([[0.0, 1.0], [-1.0, 0.0]])


class FieldEvaluator:
    """Tabulates all bases at a fixed set of reference points per cell.

    ``cells`` restricts the evaluation to a subset of cells (default: all).
    Evaluation methods take the monolithic coefficient vector.
    """

    def __init__(self, spaces, ref_points, cells=None):
        self.spaces = spaces
        self.layout = BlockLayout.for_spaces(spaces)
        if cells is None:
            cells = np.arange(spaces.mesh.num_triangles)
        self.cells = cells
        geom = spaces.geom
        self.points = geom.origin[cells, None, :] + np.einsum(
            "tij,qj->tqi", geom.jac[cells], ref_points
        )
        self._strain_vals = spaces.strain_scalar.eval(self.points, cells=cells)
        self._pressure_vals = spaces.pressure.eval(ref_points)
        self._pressure_grads = spaces.pressure.eval_grad(ref_points, cells=cells)
        self._bdm_vals = spaces.bdm.eval(self.points, cells=cells)
        self._bdm_divs = spaces.bdm.eval_div(self.points, cells=cells)
        self._disp_vals = spaces.disp_scalar.eval(self.points, cells=cells)
        self._rot_vals = spaces.rotation.eval(self.points, cells=cells)

        self._strain_dofs = spaces.strain_cell_dofs()[cells]
        self._pressure_dofs = spaces.pressure.cell_dofs()[cells]
        self._stress_dofs = spaces.stress_cell_dofs()[cells]
        self._stress_signs = spaces.stress_cell_signs()[cells].astype(float)
        self._disp_dofs = spaces.displacement_cell_dofs()[cells]
        self._rot_dofs = spaces.rotation.cell_dofs()[cells]

    def _block(self, vector, name):
        return np.asarray(vector)[self.layout.block(name)]

    def strain(self, vector):
        """d at the points, shape (nc, nq, 2, 2)."""
        nb = self.spaces.strain_scalar.nloc
        coef = self._block(vector, "strain")[self._strain_dofs]   # (nc, 4nb)
        comp = np.einsum(
            "tci,tqi->tqc", coef.reshape(-1, 4, nb), self._strain_vals
        )
        return comp.reshape(comp.shape[:2] + (2, 2))

    def pressure(self, vector):
        coef = self._block(vector, "pressure")[self._pressure_dofs]
        return np.einsum("ti,qi->tq", coef, self._pressure_vals)

    def pressure_grad(self, vector):
        coef = self._block(vector, "pressure")[self._pressure_dofs]
        return np.einsum("ti,tqid->tqd", coef, self._pressure_grads)

    def _stress_coef(self, vector):
        return self._stress_signs * self._block(vector, "stress")[self._stress_dofs]

    def stress(self, vector):
        """sigma at the points, shape (nc, nq, 2, 2)."""
        nl = self.spaces.bdm.nloc
        coef = self._stress_coef(vector)
        rows = np.einsum(
            "trl,tqlc->tqrc", coef.reshape(-1, 2, nl), self._bdm_vals
        )
        return rows

    def stress_div(self, vector):
        """Row-wise divergence, shape (nc, nq, 2)."""
        nl = self.spaces.bdm.nloc
        coef = self._stress_coef(vector)
        return np.einsum("trl,tql->tqr", coef.reshape(-1, 2, nl), self._bdm_divs)

    def displacement(self, vector):
        nb = self.spaces.disp_scalar.nloc
        coef = self._block(vector, "displacement")[self._disp_dofs]
        return np.einsum("tci,tqi->tqc", coef.reshape(-1, 2, nb), self._disp_vals)

    def rotation(self, vector):
        """Scalar rotation s; the tensor is s * [[0, 1], [-1, 0]]."""
        coef = self._block(vector, "rotation")[self._rot_dofs]
        return np.einsum("ti,tqi->tq", coef, self._rot_vals)

    def rotation_tensor(self, vector):
        return self.rotation(vector)[..., None, None] * SKEW
