"""Global assembly of the five-field saddle-point system.

Unknown ordering: strain, pressure, stress, displacement, rotation.  The
matrix is built monolithically in COO triplets from the vectorized element
blocks of :mod:`poromix.forms`; orientation signs of shared stress DOFs are
folded in during scatter.  Essential conditions (prescribed normal traction
and prescribed pressure) are collected as DOF/value pairs and imposed by
symmetric elimination, which keeps the reduced operator symmetric apart from
the antisymmetric Biot coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import forms

FIELD_NAMES = ("strain", "pressure", "stress", "displacement", "rotation")


@dataclass(frozen=True)
class BlockLayout:
    """Offsets of the five fields inside the monolithic vector."""

    sizes: tuple

    @classmethod
    def for_spaces(cls, spaces):
        return cls(
            (
                spaces.n_strain,
                spaces.n_pressure,
                spaces.n_stress,
                spaces.n_displacement,
                spaces.n_rotation,
            )
        )

    @property
    def total(self):
        return sum(self.sizes)

    def offset(self, name):
        i = FIELD_NAMES.index(name)
        return sum(self.sizes[:i])

    def block(self, name):
        off = self.offset(name)
        return slice(off, off + self.sizes[FIELD_NAMES.index(name)])

    def split(self, vector):
        """Slice a monolithic vector into the five per-field pieces."""
        return {name: vector[self.block(name)] for name in FIELD_NAMES}


@dataclass
class BlockSystem:
    """Assembled matrix, load vector and essential constraints."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: BlockLayout
    constraint_dofs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    constraint_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def eliminated(self):
        """Apply the constraints by symmetric row/column elimination.

        Returns (A, b) with constrained rows/columns zeroed, a unit diagonal
        on the constrained DOFs, the prescribed values moved to the load
        vector, and b set to the prescribed value on constrained rows.
        """
        A = self.matrix
        b = self.rhs.copy()
        idx = self.constraint_dofs
        if len(idx) == 0:
            return A.tocsc(), b
        vals = self.constraint_values
        lift = np.zeros(A.shape[0])
        lift[idx] = vals
        b -= A @ lift
        keep = np.ones(A.shape[0])
        keep[idx] = 0.0
        D = sp.diags(keep)
        indicator = np.zeros(A.shape[0])
        indicator[idx] = 1.0
        A_red = D @ A @ D + sp.diags(indicator)
        b[idx] = vals
        return A_red.tocsc(), b


class Assembler:
    """Precomputes tabulations and DOF maps, then assembles per context."""

    def __init__(self, spaces, quad_degree=None):
        self.spaces = spaces
        self.cache = forms.AssemblyCache(spaces, quad_degree)
        self.layout = BlockLayout.for_spaces(spaces)
        lay = self.layout
        # composite per-cell global index arrays in monolithic numbering
        self.dp_idx = np.concatenate(
            [
                spaces.strain_cell_dofs() + lay.offset("strain"),
                spaces.pressure.cell_dofs() + lay.offset("pressure"),
            ],
            axis=1,
        )
        self.stress_idx = spaces.stress_cell_dofs() + lay.offset("stress")
        self.stress_signs = spaces.stress_cell_signs().astype(float)
        self.z_idx = np.concatenate(
            [
                spaces.displacement_cell_dofs() + lay.offset("displacement"),
                spaces.rotation.cell_dofs() + lay.offset("rotation"),
            ],
            axis=1,
        )

    # -- matrix -------------------------------------------------------------

    def assemble_matrix(self, ctx, data=None):
        triplets = []

        def scatter(rows, cols, blocks):
            r = np.broadcast_to(rows[:, :, None], blocks.shape)
            c = np.broadcast_to(cols[:, None, :], blocks.shape)
            triplets.append((r.ravel(), c.ravel(), blocks.ravel()))

        a_blocks = forms.local_a(self.cache, ctx)
        scatter(self.dp_idx, self.dp_idx, a_blocks)

        b1 = forms.local_b1(self.cache) * self.stress_signs[:, :, None]
        scatter(self.stress_idx, self.dp_idx, b1)
        scatter(self.dp_idx, self.stress_idx, np.swapaxes(b1, 1, 2))

        b2 = forms.local_b2(self.cache) * self.stress_signs[:, None, :]
        scatter(self.z_idx, self.stress_idx, b2)
        scatter(self.stress_idx, self.z_idx, np.swapaxes(b2, 1, 2))

        if data is not None and data.slide:
            for tag in data.slide:
                edges = self.spaces.mesh.edges_with_tag(tag)
                cells, blocks = forms.boundary_slide(self.spaces, edges)
                if len(cells) == 0:
                    continue
                blocks = blocks * self.stress_signs[cells][:, None, :]
                scatter(self.z_idx[cells], self.stress_idx[cells], blocks)
                scatter(
                    self.stress_idx[cells], self.z_idx[cells], np.swapaxes(blocks, 1, 2)
                )

        rows = np.concatenate([t[0] for t in triplets])
        cols = np.concatenate([t[1] for t in triplets])
        vals = np.concatenate([t[2] for t in triplets])
        n = self.layout.total
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    def assemble_kappa_jacobian(self, ctx):
        """Extra Newton blocks on the pressure rows (permeability derivative)."""
        blocks = forms.local_kappa_jacobian(self.cache, ctx)
        nlp = self.spaces.pressure.nloc
        prow = self.dp_idx[:, -nlp:]
        r = np.broadcast_to(prow[:, :, None], blocks.shape)
        c = np.broadcast_to(self.dp_idx[:, None, :], blocks.shape)
        n = self.layout.total
        return sp.coo_matrix(
            (blocks.ravel(), (r.ravel(), c.ravel())), shape=(n, n)
        ).tocsr()

    # -- load vector --------------------------------------------------------

    def assemble_rhs(self, ctx, data):
        spaces = self.spaces
        b = np.zeros(self.layout.total)
        G, F = forms.local_rhs(self.cache, ctx, data)
        np.add.at(b, self.dp_idx, G)
        np.add.at(b, self.z_idx, F)

        for tag, u_fn in data.dirichlet_displacement.items():
            edges = spaces.mesh.edges_with_tag(tag)
            cells, vals = forms.boundary_H(spaces, edges, u_fn)
            if len(cells):
                np.add.at(b, self.stress_idx[cells], self.stress_signs[cells] * vals)

        poff = self.layout.offset("pressure")
        pdofs = spaces.pressure.cell_dofs()
        for tag, r_fn in data.flux.items():
            edges = spaces.mesh.edges_with_tag(tag)
            cells, local_nodes, vals = forms.boundary_flux(
                spaces, edges, r_fn, scale=ctx.source_scale
            )
            if len(cells):
                gdofs = np.take_along_axis(pdofs[cells], local_nodes, axis=1) + poff
                np.add.at(b, gdofs, vals)
        return b

    # -- essential constraints ----------------------------------------------

    def essential_constraints(self, data):
        spaces = self.spaces
        dofs = []
        values = []
        for tag, traction_fn in data.essential_traction.items():
            edges = spaces.mesh.edges_with_tag(tag)
            d, v = forms.traction_moments(spaces, edges, traction_fn)
            dofs.append(d + self.layout.offset("stress"))
            values.append(v)
        for tag, p_fn in data.essential_pressure.items():
            edges = spaces.mesh.edges_with_tag(tag)
            nodes = self._pressure_nodes_on_edges(edges)
            coords = spaces.pressure.node_coords[nodes]
            dofs.append(nodes + self.layout.offset("pressure"))
            values.append(np.asarray(p_fn(coords[None, :, :]))[0])
        if not dofs:
            return np.empty(0, dtype=int), np.empty(0)
        dofs = np.concatenate(dofs)
        values = np.concatenate(values)
        # deduplicate (corner nodes may be constrained from two tags)
        dofs, first = np.unique(dofs, return_index=True)
        return dofs, values[first]

    def _pressure_nodes_on_edges(self, edges):
        mesh = self.spaces.mesh
        nodes = set()
        for e in edges:
            nodes.update(int(v) for v in mesh.edges[e])
            if self.spaces.pressure.degree == 2:
                nodes.add(mesh.num_vertices + int(e))
        return np.array(sorted(nodes), dtype=int)

    # -- driver -------------------------------------------------------------

    def assemble(self, ctx, data):
        matrix = self.assemble_matrix(ctx, data)
        rhs = self.assemble_rhs(ctx, data)
        cdofs, cvals = self.essential_constraints(data)
        return BlockSystem(matrix, rhs, self.layout, cdofs, cvals)


def export_matrix_market(matrix, path):
    """Write a sparse matrix in MatrixMarket coordinate format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix))
