"""Element-level bilinear forms and load functionals of the weak-symmetry scheme.

All routines are vectorized over cells: a "local block" has shape
(ncells, n_test, n_trial).  Composite-field local DOF orderings:

* strain/pressure pair: 4 tensor components (xx, xy, yx, yy) of the strain
  basis, component-major, followed by the pressure cell DOFs;
* stress: row 0 BDM DOFs then row 1 BDM DOFs;
* displacement/rotation pair: displacement components (x, y) then rotation.

Signs follow the continuous forms: the strain/pressure block carries the
antisymmetric +alpha/-alpha coupling (both assembled independently), b1 is
-int tau:e, and b2 is -int v.div tau - int tau:eta.  The sliding boundary
term +<(tau n).t, u.t> is produced by :func:`boundary_slide` and belongs in
the b2 position (and its transpose), which enforces u.n = 0 weakly while
leaving tangential slip free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import LOCAL_EDGE_VERTICES
from .quadrature import edge_quadrature, quadrature_for

# tensor components in local DOF order and their row/column/trace indices
COMP_ROW = np.array([0, 0, 1, 1])
COMP_COL = np.array([0, 1, 0, 1])
COMP_TRACE = np.array([1.0, 0.0, 0.0, 1.0])


class AssemblyCache:
    """Tabulated bases at the assembly quadrature points of every cell."""

    def __init__(self, spaces, quad_degree=None):
        self.spaces = spaces
        if quad_degree is None:
            quad_degree = spaces.assembly_quadrature_degree()
        self.rule = quadrature_for(quad_degree)
        geom = spaces.geom
        self.points = geom.physical_points(self.rule.points)      # (nt, nq, 2)
        self.weights = 2.0 * geom.area[:, None] * self.rule.weights[None, :]
        self.strain_vals = spaces.strain_scalar.eval(self.points)
        self.pressure_vals = spaces.pressure.eval(self.rule.points)  # (nq, nloc)
        self.pressure_grads = spaces.pressure.eval_grad(self.rule.points)
        self.bdm_vals = spaces.bdm.eval(self.points)
        self.bdm_divs = spaces.bdm.eval_div(self.points)
        self.disp_vals = spaces.disp_scalar.eval(self.points)
        self.rot_vals = spaces.rotation.eval(self.points)


@dataclass
class FormContext:
    """Frozen linearization state and scaling for one assembly pass.

    ``d_frozen``/``p_frozen`` are global coefficient vectors of the strain
    and pressure spaces at which the permeability is evaluated (zero state
    when omitted).  For backward-Euler steps, ``kappa_scale``/``source_scale``
    are set to the time step and ``history`` carries the previous fluid
    content c0 p^(n-1) + alpha tr d^(n-1) as a per-(cell, point) array.
    """

    params: object
    law: object
    d_frozen: np.ndarray = None
    p_frozen: np.ndarray = None
    kappa_scale: float = 1.0
    source_scale: float = 1.0
    history: np.ndarray = None
    _zeta: np.ndarray = field(default=None, repr=False)

    def zeta_at_points(self, cache):
        """Fluid content of the frozen state at the quadrature points."""
        if self._zeta is None:
            spaces = cache.spaces
            nb = spaces.strain_scalar.nloc
            if self.d_frozen is None:
                tr_d = np.zeros(cache.weights.shape)
            else:
                coef = self.d_frozen[spaces.strain_cell_dofs()]
                tr_coef = coef[:, :nb] + coef[:, 3 * nb:]
                tr_d = np.einsum("ti,tqi->tq", tr_coef, cache.strain_vals)
            if self.p_frozen is None:
                p = np.zeros(cache.weights.shape)
            else:
                pc = self.p_frozen[spaces.pressure.cell_dofs()]
                p = np.einsum("ti,qi->tq", pc, cache.pressure_vals)
            self._zeta = self.params.c0 * p + self.params.alpha * tr_d
        return self._zeta

    def kappa_at_points(self, cache):
        return self.law(self.params, self.zeta_at_points(cache))


def hooke_component_matrix(params):
    """C4[c, c'] = (C E_c) : E_c' over the 4 tensor components."""
    return params.lam * np.outer(COMP_TRACE, COMP_TRACE) + 2.0 * params.mu * np.eye(4)


def local_a(cache, ctx, cells=None):
    """Cell matrices of a_w on the strain/pressure pair."""
    sel = slice(None) if cells is None else cells
    sp = cache.spaces
    nb = sp.strain_scalar.nloc
    nlp = sp.pressure.nloc
    w = cache.weights[sel]
    b = cache.strain_vals[sel]
    pv = cache.pressure_vals
    pg = cache.pressure_grads[sel]
    nt = w.shape[0]
    n = 4 * nb + nlp
    out = np.zeros((nt, n, n))

    # strain-strain: Hooke
    mass = np.einsum("tq,tqi,tqj->tij", w, b, b)
    C4 = hooke_component_matrix(ctx.params)
    ss = np.einsum("cd,tij->tcidj", C4, mass).reshape(nt, 4 * nb, 4 * nb)
    out[:, : 4 * nb, : 4 * nb] = ss

    # pressure-pressure: frozen-permeability stiffness + storativity mass
    kap = ctx.kappa_at_points(cache)[sel] * ctx.kappa_scale
    stiff = np.einsum("tq,tq,tqid,tqjd->tij", w, kap, pg, pg)
    pmass = ctx.params.c0 * np.einsum("tq,qi,qj->tij", w, pv, pv)
    out[:, 4 * nb:, 4 * nb:] = stiff + pmass

    # +alpha int q tr(d): pressure test rows, strain trial columns
    alpha = ctx.params.alpha
    qtr = alpha * np.einsum("tq,qj,tqi->tji", w, pv, b)          # (nt, nlp, nb)
    for c in range(4):
        if COMP_TRACE[c]:
            out[:, 4 * nb:, c * nb:(c + 1) * nb] += qtr
    # -alpha int p tr(e): strain test rows, pressure trial columns
    ptr = -alpha * np.einsum("tq,tqi,qj->tij", w, b, pv)         # (nt, nb, nlp)
    for c in range(4):
        if COMP_TRACE[c]:
            out[:, c * nb:(c + 1) * nb, 4 * nb:] += ptr
    return out


def local_b1(cache, cells=None):
    """Cell matrices of b1: stress test rows, strain(+pressure) trial columns."""
    sel = slice(None) if cells is None else cells
    sp = cache.spaces
    nb = sp.strain_scalar.nloc
    nlp = sp.pressure.nloc
    nl = sp.bdm.nloc
    w = cache.weights[sel]
    b = cache.strain_vals[sel]
    tau = cache.bdm_vals[sel]
    nt = w.shape[0]
    out = np.zeros((nt, 2 * nl, 4 * nb + nlp))
    pair = np.einsum("tq,tqlc,tqi->tlci", w, tau, b)             # (nt, nl, 2, nb)
    for c4 in range(4):
        r, c = COMP_ROW[c4], COMP_COL[c4]
        out[:, r * nl:(r + 1) * nl, c4 * nb:(c4 + 1) * nb] = -pair[:, :, c, :]
    return out


def local_b2(cache, cells=None):
    """Cell matrices of b2: displacement/rotation test rows, stress columns."""
    sel = slice(None) if cells is None else cells
    sp = cache.spaces
    nl = sp.bdm.nloc
    nbd = sp.disp_scalar.nloc
    nbr = sp.rotation.nloc
    w = cache.weights[sel]
    div = cache.bdm_divs[sel]
    tau = cache.bdm_vals[sel]
    vd = cache.disp_vals[sel]
    vr = cache.rot_vals[sel]
    nt = w.shape[0]
    out = np.zeros((nt, 2 * nbd + nbr, 2 * nl))

    ddiv = np.einsum("tq,tql,tqi->til", w, div, vd)              # (nt, nbd, nl)
    for r in range(2):
        out[:, r * nbd:(r + 1) * nbd, r * nl:(r + 1) * nl] = -ddiv

    # rotation pairing: -int tau:eta with eta = s [[0,1],[-1,0]]
    rot = np.einsum("tq,tqlc,tqi->tilc", w, tau, vr)             # (nt, nbr, nl, 2)
    out[:, 2 * nbd:, 0 * nl:1 * nl] = -rot[:, :, :, 1]           # row 0: -(tau_12) s
    out[:, 2 * nbd:, 1 * nl:2 * nl] = +rot[:, :, :, 0]           # row 1: +(tau_21) s
    return out


def local_kappa_jacobian(cache, ctx, cells=None):
    """Derivative of the permeability stiffness with respect to the state.

    Linearizing int kappa(c0 p + alpha tr d) grad p . grad q around the frozen
    state adds, on the pressure test rows, the blocks
    int kappa'(zeta_w) (c0 dp + alpha tr dd) (grad p_w . grad q).
    Returns (nt, nlp, 4nb + nlp) blocks in the strain/pressure trial ordering.
    """
    sel = slice(None) if cells is None else cells
    sp = cache.spaces
    nb = sp.strain_scalar.nloc
    nlp = sp.pressure.nloc
    w = cache.weights[sel]
    b = cache.strain_vals[sel]
    pv = cache.pressure_vals
    pg = cache.pressure_grads[sel]
    nt = w.shape[0]

    if ctx.p_frozen is None:
        return np.zeros((nt, nlp, 4 * nb + nlp))
    pc = ctx.p_frozen[sp.pressure.cell_dofs()][sel]
    grad_pw = np.einsum("ti,tqid->tqd", pc, pg)                  # (nt, nq, 2)
    dkap = ctx.law.derivative(ctx.params, ctx.zeta_at_points(cache)[sel])
    dkap = dkap * ctx.kappa_scale
    # (grad p_w . grad q_j) weighted by w kappa'
    core = np.einsum("tq,tq,tqd,tqjd->tqj", w, dkap, grad_pw, pg)  # (nt, nq, nlp)

    out = np.zeros((nt, nlp, 4 * nb + nlp))
    dd = ctx.params.alpha * np.einsum("tqj,tqi->tji", core, b)   # strain columns
    for c in range(4):
        if COMP_TRACE[c]:
            out[:, :, c * nb:(c + 1) * nb] += dd
    out[:, :, 4 * nb:] = ctx.params.c0 * np.einsum("tqj,qi->tji", core, pv)
    return out


def local_rhs(cache, ctx, data, cells=None):
    """Cell load vectors (G on strain/pressure tests, F on displacement tests)."""
    sel = slice(None) if cells is None else cells
    sp = cache.spaces
    nb = sp.strain_scalar.nloc
    nlp = sp.pressure.nloc
    nbd = sp.disp_scalar.nloc
    nbr = sp.rotation.nloc
    w = cache.weights[sel]
    pts = cache.points[sel]
    nt = w.shape[0]

    G = np.zeros((nt, 4 * nb + nlp))
    source = np.zeros(w.shape)
    if data.g is not None:
        source += ctx.source_scale * np.asarray(data.g(pts))
    if ctx.history is not None:
        source += ctx.history[sel]
    if np.any(source):
        G[:, 4 * nb:] = np.einsum("tq,tq,qj->tj", w, source, cache.pressure_vals)

    F = np.zeros((nt, 2 * nbd + nbr))
    if data.f is not None:
        fv = np.asarray(data.f(pts))                              # (nt, nq, 2)
        load = np.einsum("tq,tqc,tqi->tci", w, fv, cache.disp_vals[sel])
        F[:, : 2 * nbd] = load.reshape(nt, 2 * nbd)
    return G, F


# ---------------------------------------------------------------------------
# boundary terms (edge-grouped, quadrature along the edge)


def _edge_groups(mesh, edge_ids):
    """Split an edge list by the owning cell's local edge index."""
    owner, local = mesh.edge_owner()
    groups = []
    edge_ids = np.asarray(edge_ids, dtype=int)
    for le in range(3):
        sub = edge_ids[local[edge_ids] == le]
        if len(sub):
            groups.append((le, sub, owner[sub]))
    return groups


def _edge_points(mesh, cells, le, s_ref):
    p = mesh.triangle_coords()[cells]
    a, b = LOCAL_EDGE_VERTICES[le]
    pa = p[:, a]
    d = p[:, b] - p[:, a]
    length = np.linalg.norm(d, axis=1)
    t = d / length[:, None]
    n_out = np.stack([t[:, 1], -t[:, 0]], axis=1)
    pts = pa[:, None, :] + s_ref[None, :, None] * d[:, None, :]
    return pts, n_out, t, length


def boundary_H(spaces, edge_ids, u_fn, quad_degree=None):
    """-<tau n, u_Gamma> on the listed edges.

    Returns (cells, values) with values shaped (n_edges, 2*nloc) against the
    local stress basis of the owning cell (orientation signs not applied).
    """
    mesh = spaces.mesh
    if quad_degree is None:
        quad_degree = spaces.assembly_quadrature_degree() + 2
    s_ref, w_ref = edge_quadrature(quad_degree)
    nl = spaces.bdm.nloc
    out_cells = []
    out_vals = []
    for le, edges, cells in _edge_groups(mesh, edge_ids):
        pts, n_out, _, length = _edge_points(mesh, cells, le, s_ref)
        tau = spaces.bdm.eval(pts, cells=cells)                   # (ne, nq, nl, 2)
        tau_n = np.einsum("eqlc,ec->eql", tau, n_out)
        u = np.asarray(u_fn(pts))                                 # (ne, nq, 2)
        vals = np.zeros((len(edges), 2 * nl))
        for r in range(2):
            vals[:, r * nl:(r + 1) * nl] = -length[:, None] * np.einsum(
                "q,eql,eq->el", w_ref, tau_n, u[..., r]
            )
        out_cells.append(cells)
        out_vals.append(vals)
    if not out_cells:
        return np.empty(0, dtype=int), np.empty((0, 2 * nl))
    return np.concatenate(out_cells), np.concatenate(out_vals)


def boundary_flux(spaces, edge_ids, r_fn, scale=1.0, quad_degree=None):
    """<r_Gamma, q> on the listed edges against the pressure trace basis.

    Returns (cells, local_dof_indices, values) with shapes (ne,), (ne, nn),
    (ne, nn) where nn is the number of pressure nodes per edge.
    """
    mesh = spaces.mesh
    pressure = spaces.pressure
    if quad_degree is None:
        quad_degree = spaces.assembly_quadrature_degree() + 2
    s_ref, w_ref = edge_quadrature(quad_degree)
    ref_vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    out = []
    for le, edges, cells in _edge_groups(mesh, edge_ids):
        a, b = LOCAL_EDGE_VERTICES[le]
        ref_pts = ref_vertices[a][None, :] + s_ref[:, None] * (
            ref_vertices[b] - ref_vertices[a]
        )[None, :]
        shape = pressure.shape_values(ref_pts)                    # (nq, nloc)
        local_nodes = pressure.edge_local_nodes(le)
        pts, _, _, length = _edge_points(mesh, cells, le, s_ref)
        r = scale * np.asarray(r_fn(pts))                         # (ne, nq)
        vals = length[:, None] * np.einsum("q,eq,qn->en", w_ref, r, shape[:, local_nodes])
        out.append((cells, np.tile(local_nodes, (len(edges), 1)), vals))
    if not out:
        nn = len(pressure.edge_local_nodes(0))
        return np.empty(0, dtype=int), np.empty((0, nn), dtype=int), np.empty((0, nn))
    return tuple(np.concatenate(parts) for parts in zip(*out))


def boundary_slide(spaces, edge_ids, quad_degree=None):
    """+<(tau n).t, u.t> coupling on sliding edges.

    Returns (cells, blocks) with blocks shaped (ne, nZ, 2*nloc) in the b2
    position: displacement/rotation test rows against stress columns
    (rotation rows are zero).  The transpose belongs in the b2^T position.
    """
    mesh = spaces.mesh
    if quad_degree is None:
        quad_degree = spaces.assembly_quadrature_degree() + 2
    s_ref, w_ref = edge_quadrature(quad_degree)
    nl = spaces.bdm.nloc
    nbd = spaces.disp_scalar.nloc
    nbr = spaces.rotation.nloc
    out_cells = []
    out_blocks = []
    for le, edges, cells in _edge_groups(mesh, edge_ids):
        pts, n_out, t, length = _edge_points(mesh, cells, le, s_ref)
        tau = spaces.bdm.eval(pts, cells=cells)
        tau_n = np.einsum("eqlc,ec->eql", tau, n_out)
        vd = spaces.disp_scalar.eval(pts, cells=cells)            # (ne, nq, nbd)
        pair = length[:, None, None] * np.einsum("q,eqi,eql->eil", w_ref, vd, tau_n)
        block = np.zeros((len(edges), 2 * nbd + nbr, 2 * nl))
        for cd in range(2):          # displacement component (test)
            for r in range(2):       # stress row (trial)
                coeff = t[:, cd] * t[:, r]
                block[:, cd * nbd:(cd + 1) * nbd, r * nl:(r + 1) * nl] = (
                    coeff[:, None, None] * pair
                )
        out_cells.append(cells)
        out_blocks.append(block)
    if not out_cells:
        return np.empty(0, dtype=int), np.empty((0, 2 * nbd + nbr, 2 * nl))
    return np.concatenate(out_cells), np.concatenate(out_blocks)


def traction_moments(spaces, edge_ids, traction_fn, quad_degree=None):
    """Moments of a prescribed outward-normal traction for essential stress BCs.

    Returns (dof_ids, values) over the global stress DOFs on the listed
    edges: for row r and Legendre moment m on edge e the constrained value is
    sign * int_e T_r P_m(s) ds, with sign relating outward and global normals.
    """
    from .elements import shifted_legendre

    mesh = spaces.mesh
    if quad_degree is None:
        quad_degree = spaces.assembly_quadrature_degree() + 2
    s_ref, w_ref = edge_quadrature(quad_degree)
    mpe = spaces.bdm.moments_per_edge
    n_bdm = spaces.bdm.ndofs
    dof_ids = []
    values = []
    for le, edges, cells in _edge_groups(mesh, edge_ids):
        pts, _, _, length = _edge_points(mesh, cells, le, s_ref)
        signs = mesh.tri_edge_signs[cells, le]
        flip = signs == -1
        s_glob = np.where(flip[:, None], 1.0 - s_ref[None, :], s_ref[None, :])
        T = np.asarray(traction_fn(pts))                          # (ne, nq, 2)
        for m in range(mpe):
            leg = shifted_legendre(m, s_glob)
            for r in range(2):
                mom = signs * length * np.einsum("q,eq,eq->e", w_ref, leg, T[..., r])
                dof_ids.append(r * n_bdm + edges * mpe + m)
                values.append(mom)
    if not dof_ids:
        return np.empty(0, dtype=int), np.empty(0)
    return np.concatenate(dof_ids), np.concatenate(values)
