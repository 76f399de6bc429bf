"""Manufactured-solution verification: error norms, rates, inf-sup diagnostics.

The closed-form smooth solution on the unit square is

    u = (1/5) (-x cos(x) sin(y) + x^2,  x sin(x) cos(y) + y^2),
    p = sin(pi x) sin(pi y).

All derived fields (strain, rotation, total stress) and data (body force,
mass source, boundary data) are computed from hand-derived closed-form
derivatives; tests validate them against finite differences.  A convenient
simplification: div u = (-cos(x) sin(y) + 2x + 2y) / 5.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import forms
from .assembly import Assembler, BlockLayout
from .elements import make_space_set
from .fields import SKEW, FieldEvaluator
from .mesh import LOCAL_EDGE_VERTICES, build_structured_mesh, mesh_size
from .physics import MaterialParams, PermeabilityLaw, ProblemData
from .quadrature import edge_quadrature, quadrature_for
from .solver import SolverConfig, picard_solve

EYE2 = np.eye(2)


def default_convergence_params():
    return MaterialParams(lam=1.0, mu=1.0, c0=0.25, alpha=0.25, mu_f=1.0)


def default_convergence_law():
    return PermeabilityLaw("kozeny", k0=0.1, k1=0.1)


# outward unit normals of the unit-square sides by boundary tag
SIDE_NORMALS = {
    "left": np.array([-1.0, 0.0]),
    "right": np.array([1.0, 0.0]),
    "bottom": np.array([0.0, -1.0]),
    "top": np.array([0.0, 1.0]),
}


@dataclass
class ManufacturedCase:
    """Closed-form fields and data of the smooth verification problem."""

    params: MaterialParams
    law: PermeabilityLaw

    # -- primal fields -------------------------------------------------------

    def displacement(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        u1 = (-x * np.cos(x) * np.sin(y) + x**2) / 5.0
        u2 = (x * np.sin(x) * np.cos(y) + y**2) / 5.0
        return np.stack([u1, u2], axis=-1)

    def pressure(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    def pressure_grad(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.pi * np.stack(
            [
                np.cos(np.pi * x) * np.sin(np.pi * y),
                np.sin(np.pi * x) * np.cos(np.pi * y),
            ],
            axis=-1,
        )

    def pressure_laplacian(self, pts):
        return -2.0 * np.pi**2 * self.pressure(pts)

    def grad_u(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        g11 = ((x * np.sin(x) - np.cos(x)) * np.sin(y) + 2.0 * x) / 5.0
        g12 = -x * np.cos(x) * np.cos(y) / 5.0
        g21 = (np.sin(x) + x * np.cos(x)) * np.cos(y) / 5.0
        g22 = (-x * np.sin(x) * np.sin(y) + 2.0 * y) / 5.0
        out = np.empty(pts.shape[:-1] + (2, 2))
        out[..., 0, 0], out[..., 0, 1] = g11, g12
        out[..., 1, 0], out[..., 1, 1] = g21, g22
        return out

    def strain(self, pts):
        g = self.grad_u(pts)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def rotation(self, pts):
        """Skew scalar: the (1,2) entry of grad u - strain."""
        g = self.grad_u(pts)
        return 0.5 * (g[..., 0, 1] - g[..., 1, 0])

    def div_u(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        return (-np.cos(x) * np.sin(y) + 2.0 * x + 2.0 * y) / 5.0

    def grad_div_u(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.stack(
            [
                (np.sin(x) * np.sin(y) + 2.0) / 5.0,
                (-np.cos(x) * np.cos(y) + 2.0) / 5.0,
            ],
            axis=-1,
        )

    def laplace_u(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        l1 = ((2.0 * np.sin(x) + 2.0 * x * np.cos(x)) * np.sin(y) + 2.0) / 5.0
        l2 = ((2.0 * np.cos(x) - 2.0 * x * np.sin(x)) * np.cos(y) + 2.0) / 5.0
        return np.stack([l1, l2], axis=-1)

    # -- derived fields and data --------------------------------------------

    def fluid_content(self, pts):
        return self.params.c0 * self.pressure(pts) + self.params.alpha * self.div_u(pts)

    def stress(self, pts):
        """Total poroelastic stress: lam tr(d) I + 2 mu d - alpha p I."""
        p = self.params
        d = self.strain(pts)
        iso = (p.lam * self.div_u(pts) - p.alpha * self.pressure(pts))[..., None, None]
        return iso * EYE2 + 2.0 * p.mu * d

    def stress_div(self, pts):
        """Row-wise div sigma = (lam + mu) grad(div u) + mu lap(u) - alpha grad p."""
        p = self.params
        return (
            (p.lam + p.mu) * self.grad_div_u(pts)
            + p.mu * self.laplace_u(pts)
            - p.alpha * self.pressure_grad(pts)
        )

    def f(self, pts):
        return -self.stress_div(pts)

    def g(self, pts):
        """Mass source: c0 p + alpha tr d - div(kappa(zeta) grad p)."""
        zeta = self.fluid_content(pts)
        grad_zeta = self.params.c0 * self.pressure_grad(pts) + self.params.alpha * self.grad_div_u(pts)
        gp = self.pressure_grad(pts)
        diffusion = self.law.derivative(self.params, zeta) * np.einsum(
            "...d,...d->...", grad_zeta, gp
        ) + self.law(self.params, zeta) * self.pressure_laplacian(pts)
        return self.fluid_content(pts) - diffusion

    def normal_flux(self, pts, normal):
        """r_Gamma = kappa(zeta) grad p . n for a fixed unit normal."""
        kap = self.law(self.params, self.fluid_content(pts))
        return kap * np.einsum("...d,d->...", self.pressure_grad(pts), normal)

    def problem_data(self):
        """Natural boundary data on all four sides of the unit square."""
        flux = {
            tag: (lambda pts, n=n: self.normal_flux(pts, n))
            for tag, n in SIDE_NORMALS.items()
        }
        dirichlet = {tag: self.displacement for tag in SIDE_NORMALS}
        return ProblemData(
            f=self.f, g=self.g, dirichlet_displacement=dirichlet, flux=flux
        )


@dataclass
class ErrorReport:
    h: float
    dofs: int
    e0_d: float
    e1_p: float
    ediv_sigma: float
    e0_u: float
    e0_gamma: float

    def as_tuple(self):
        return (self.e0_d, self.e1_p, self.ediv_sigma, self.e0_u, self.e0_gamma)


def compute_errors(spaces, x, case, quad_degree=None):
    """Natural-norm errors of a discrete state against the closed forms."""
    if quad_degree is None:
        quad_degree = spaces.assembly_quadrature_degree() + 2
    rule = quadrature_for(quad_degree)
    ev = FieldEvaluator(spaces, rule.points)
    w = 2.0 * spaces.geom.area[:, None] * rule.weights[None, :]
    pts = ev.points

    def l2(err2):
        return math.sqrt(float((w * err2).sum()))

    d_err = ev.strain(x) - case.strain(pts)
    e0_d = l2(np.einsum("tqij,tqij->tq", d_err, d_err))

    p_err = ev.pressure(x) - case.pressure(pts)
    gp_err = ev.pressure_grad(x) - case.pressure_grad(pts)
    e1_p = l2(p_err**2 + np.einsum("tqd,tqd->tq", gp_err, gp_err))

    s_err = ev.stress(x) - case.stress(pts)
    div_err = ev.stress_div(x) - case.stress_div(pts)
    ediv = l2(
        np.einsum("tqij,tqij->tq", s_err, s_err)
        + np.einsum("tqd,tqd->tq", div_err, div_err)
    )

    u_err = ev.displacement(x) - case.displacement(pts)
    e0_u = l2(np.einsum("tqd,tqd->tq", u_err, u_err))

    g_err = (ev.rotation(x) - case.rotation(pts))[..., None, None] * SKEW
    e0_g = l2(np.einsum("tqij,tqij->tq", g_err, g_err))

    return ErrorReport(
        h=mesh_size(spaces.mesh),
        dofs=BlockLayout.for_spaces(spaces).total,
        e0_d=e0_d,
        e1_p=e1_p,
        ediv_sigma=ediv,
        e0_u=e0_u,
        e0_gamma=e0_g,
    )


def eoc(pairs):
    """Pairwise experimental orders: log(e/e')/log(h/h') on consecutive levels."""
    rates = []
    for (h0, e0), (h1, e1) in zip(pairs[:-1], pairs[1:]):
        if e0 <= 0 or e1 <= 0:
            raise ValueError("convergence rates require positive errors")
        rates.append(math.log(e0 / e1) / math.log(h0 / h1))
    return rates


@dataclass
class ConvergenceStudy:
    k: int
    reports: list = field(default_factory=list)
    iteration_counts: list = field(default_factory=list)

    def rates(self, name):
        pairs = [(r.h, getattr(r, name)) for r in self.reports]
        return eoc(pairs)


def convergence_study(
    k,
    num_levels=6,
    params=None,
    law=None,
    config=None,
    nx0=2,
    keep_states=False,
):
    """Solve the manufactured problem on a uniformly refined mesh sequence."""
    params = params or default_convergence_params()
    law = law or default_convergence_law()
    config = config or SolverConfig()
    case = ManufacturedCase(params, law)
    study = ConvergenceStudy(k=k)
    states = []
    for level in range(num_levels):
        n = nx0 * 2**level
        mesh = build_structured_mesh(n, n, 1.0, 1.0)
        spaces = make_space_set(mesh, k)
        assembler = Assembler(spaces)
        x, report = picard_solve(assembler, params, law, case.problem_data(), config)
        study.reports.append(compute_errors(spaces, x, case))
        study.iteration_counts.append(report.iterations)
        if keep_states:
            states.append((spaces, x))
    if keep_states:
        return study, states
    return study


CONVERGENCE_COLUMNS = (
    "level",
    "h",
    "dofs",
    "e0_d",
    "rate_d",
    "e1_p",
    "rate_p",
    "ediv_sigma",
    "rate_sigma",
    "e0_u",
    "rate_u",
    "e0_gamma",
    "rate_gamma",
)


def write_convergence_csv(study, path):
    """Emit the error/rate table; rates are blank on the first level."""
    names = ("e0_d", "e1_p", "ediv_sigma", "e0_u", "e0_gamma")
    rate_cols = {n: study.rates(n) for n in names}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONVERGENCE_COLUMNS)
        for i, r in enumerate(study.reports):
            row = [str(i), f"{r.h:.6g}", str(r.dofs)]
            for n in names:
                row.append(f"{getattr(r, n):.6g}")
                row.append("" if i == 0 else f"{rate_cols[n][i - 1]:.6g}")
            writer.writerow(row)


def interpolate_case(spaces, case):
    """Canonical interpolant of the closed-form fields as a monolithic vector.

    Strain, displacement and rotation are L2-projected cell by cell (the DG
    bases are orthonormal, so projection = moment evaluation); pressure is
    interpolated at the Lagrange nodes; stress DOFs are the defining edge and
    interior moments of the exact stress rows.
    """
    from .elements import shifted_legendre

    layout = BlockLayout.for_spaces(spaces)
    x = np.zeros(layout.total)
    rule = quadrature_for(spaces.assembly_quadrature_degree() + 4)
    geom = spaces.geom
    pts = geom.physical_points(rule.points)
    w = 2.0 * geom.area[:, None] * rule.weights[None, :]

    sv = spaces.strain_scalar.eval(pts)
    d_ex = case.strain(pts)
    comps = np.stack(
        [d_ex[..., 0, 0], d_ex[..., 0, 1], d_ex[..., 1, 0], d_ex[..., 1, 1]], axis=2
    )
    coefs = np.einsum("tq,tqci,tqj->tcj", w, comps[..., None], sv)
    x[layout.block("strain")] = coefs.reshape(-1)

    x[layout.block("pressure")] = case.pressure(spaces.pressure.node_coords[None])[0]

    # stress: global edge moments along the global direction and normal
    mpe = spaces.bdm.moments_per_edge
    n_bdm = spaces.bdm.ndofs
    mesh = spaces.mesh
    s, we = edge_quadrature(2 * (spaces.k + 1) + 6)
    epts = (
        mesh.vertices[mesh.edges[:, 0]][:, None, :]
        + s[:, None] * (mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]])[:, None, :]
    )
    sig = case.stress(epts)                                       # (ne, nq, 2, 2)
    sn = np.einsum("eqrj,ej->eqr", sig, mesh.edge_normals())
    lengths = mesh.edge_lengths()
    soff = layout.offset("stress")
    for m in range(mpe):
        leg = shifted_legendre(m, s)
        mom = lengths[:, None] * np.einsum("q,q,eqr->er", we, leg, sn)
        for r in range(2):
            x[soff + r * n_bdm + np.arange(mesh.num_edges) * mpe + m] = mom[:, r]
    if spaces.bdm.n_interior:
        xhat = geom.scaled(pts)
        tests = np.zeros(xhat.shape[:2] + (3, 2))
        tests[..., 0, 0] = 1.0
        tests[..., 1, 1] = 1.0
        tests[..., 2, 0] = -xhat[..., 1]
        tests[..., 2, 1] = xhat[..., 0]
        sig_v = case.stress(pts)
        base = mesh.num_edges * mpe
        for r in range(2):
            mom = np.einsum("tq,tqjc,tqc->tj", w, tests, sig_v[..., r, :])
            mom = mom / geom.area[:, None]
            idx = soff + r * n_bdm + base + np.arange(mesh.num_triangles)[:, None] * 3 + np.arange(3)
            x[idx] = mom

    dv = spaces.disp_scalar.eval(pts)
    u_ex = case.displacement(pts)
    ucoef = np.einsum("tq,tqc,tqj->tcj", w, u_ex, dv)
    x[layout.block("displacement")] = ucoef.reshape(-1)

    rv = spaces.rotation.eval(pts)
    x[layout.block("rotation")] = np.einsum(
        "tq,tq,tqj->tj", w, case.rotation(pts), rv
    ).reshape(-1)
    return x


# ---------------------------------------------------------------------------
# discrete invariants of a solved state


def weak_symmetry_residual(spaces, x):
    """max_i |int sigma_h : eta_i| / ||sigma_h||_0 over rotation tests."""
    rule = quadrature_for(spaces.assembly_quadrature_degree())
    ev = FieldEvaluator(spaces, rule.points)
    w = 2.0 * spaces.geom.area[:, None] * rule.weights[None, :]
    s = ev.stress(x)
    skew = s[..., 0, 1] - s[..., 1, 0]
    rot = spaces.rotation.eval(ev.points)
    moments = np.einsum("tq,tq,tqi->ti", w, skew, rot)
    norm = math.sqrt(float((w * np.einsum("tqij,tqij->tq", s, s)).sum()))
    return float(np.abs(moments).max()) / max(norm, 1e-30)


def momentum_residual(spaces, x, f=None, data=None):
    """max over displacement tests of |int (div sigma + f) . v + slide terms|.

    Uses the assembly quadrature so the f moments match the discrete
    right-hand side exactly (a finer rule would reintroduce the quadrature
    error of f as a spurious residual).
    """
    rule = quadrature_for(spaces.assembly_quadrature_degree())
    ev = FieldEvaluator(spaces, rule.points)
    w = 2.0 * spaces.geom.area[:, None] * rule.weights[None, :]
    div = ev.stress_div(x)
    if f is not None:
        div = div + np.asarray(f(ev.points))
    vd = spaces.disp_scalar.eval(ev.points)
    res = np.einsum("tq,tqc,tqi->tci", w, div, vd)                # (nt, 2, nbd)

    if data is not None and data.slide:
        s_ref, w_ref = edge_quadrature(spaces.assembly_quadrature_degree() + 2)
        ref_vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = spaces.mesh
        edges = np.concatenate([mesh.edges_with_tag(t) for t in data.slide])
        for le, edge_ids, cells in forms._edge_groups(mesh, edges):
            a, b = LOCAL_EDGE_VERTICES[le]
            ref_pts = ref_vertices[a][None] + s_ref[:, None] * (
                ref_vertices[b] - ref_vertices[a]
            )[None]
            eve = FieldEvaluator(spaces, ref_pts, cells=cells)
            p = mesh.triangle_coords()[cells]
            d = p[:, b] - p[:, a]
            length = np.linalg.norm(d, axis=1)
            t = d / length[:, None]
            n_out = np.stack([t[:, 1], -t[:, 0]], axis=1)
            sn = np.einsum("eqij,ej->eqi", eve.stress(x), n_out)
            sn_t = np.einsum("eqi,ei->eq", sn, t)
            vb = spaces.disp_scalar.eval(eve.points, cells=cells)
            pair = length[:, None] * np.einsum("q,eq,eqi->ei", w_ref, sn_t, vb)
            # the sliding coupling enters the discrete momentum rows with +;
            # moving it to the residual side flips the sign
            for cd in range(2):
                np.add.at(res, (cells, cd), -t[:, cd][:, None] * pair)

    return float(np.abs(res).max()) / max(1.0, float(np.abs(x).max()))


def normal_jump_residual(spaces, x, n_samples=5):
    """max interior-edge jump of sigma_h n relative to max |sigma_h|."""
    mesh = spaces.mesh
    # symmetric about 1/2 so that reversing aligns the two sides' samples
    s_ref = np.linspace(0.1, 0.9, n_samples)
    counts = np.zeros(mesh.num_edges, dtype=int)
    np.add.at(counts, mesh.tri_edges.ravel(), 1)
    normals = mesh.edge_normals()

    traces = {}
    scale = 0.0
    ref_vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    for le in range(3):
        a, b = LOCAL_EDGE_VERTICES[le]
        ref_pts = ref_vertices[a][None] + s_ref[:, None] * (
            ref_vertices[b] - ref_vertices[a]
        )[None]
        ev = FieldEvaluator(spaces, ref_pts)
        s = ev.stress(x)
        scale = max(scale, float(np.abs(s).max()))
        for tcell in range(mesh.num_triangles):
            e = int(mesh.tri_edges[tcell, le])
            if counts[e] != 2:
                continue
            sn = s[tcell] @ normals[e]
            if mesh.tri_edge_signs[tcell, le] == -1:
                sn = sn[::-1]
            traces.setdefault(e, []).append(sn)
    jump = 0.0
    for e, (t1, t2) in traces.items():
        jump = max(jump, float(np.abs(t1 - t2).max()))
    return jump / max(scale, 1e-30)


# ---------------------------------------------------------------------------
# inf-sup diagnostics (dense, coarse meshes only)

INFSUP_DENSE_LIMIT = 3000


def _stress_hdiv_gram(spaces):
    """Dense H(div) Gram of the stress space (both rows, signed global DOFs)."""
    cache = forms.AssemblyCache(spaces)
    w = cache.weights
    mass = np.einsum("tq,tqlc,tqmc->tlm", w, cache.bdm_vals, cache.bdm_vals)
    divg = np.einsum("tq,tql,tqm->tlm", w, cache.bdm_divs, cache.bdm_divs)
    local = mass + divg
    signs = spaces.bdm.cell_signs().astype(float)
    local = local * signs[:, :, None] * signs[:, None, :]
    n = spaces.bdm.ndofs
    G1 = np.zeros((n, n))
    dofs = spaces.bdm.cell_dofs()
    np.add.at(G1, (dofs[:, :, None], dofs[:, None, :]), local)
    G = np.zeros((2 * n, 2 * n))
    G[:n, :n] = G1
    G[n:, n:] = G1
    return G


def infsup_diagnostic(spaces):
    """Generalized smallest singular values of the two constraint operators.

    Returns a dict with the inf-sup constant of the stress/displacement-
    rotation coupling (with the H(div) stress metric and the L2 metric on the
    orthonormal displacement/rotation bases) and of the strain pairing
    restricted to the discrete kernel of the former.
    """
    layout = BlockLayout.for_spaces(spaces)
    if layout.total > INFSUP_DENSE_LIMIT:
        raise ValueError(
            f"dense inf-sup diagnostic limited to {INFSUP_DENSE_LIMIT} DOFs, "
            f"got {layout.total}"
        )
    asm = Assembler(spaces)
    ctx = forms.FormContext(
        params=MaterialParams(lam=1.0, mu=1.0), law=PermeabilityLaw("constant")
    )
    M = asm.assemble_matrix(ctx).toarray()
    sl_dp = slice(0, layout.sizes[0] + layout.sizes[1])
    sl_s = layout.block("stress")
    nz0 = layout.offset("displacement")
    sl_z = slice(nz0, layout.total)
    B1 = M[sl_s, sl_dp]                                          # stress x (strain, p)
    B2 = M[sl_z, sl_s]                                           # (u, rot) x stress

    Gy = _stress_hdiv_gram(spaces)
    Ly = np.linalg.cholesky(Gy)
    # displacement/rotation metric is the identity (orthonormal DG bases)
    B2_tilde = scipy.linalg.solve_triangular(Ly, B2.T, lower=True).T
    b2_singvals = scipy.linalg.svdvals(B2_tilde)
    b2_min = float(b2_singvals.min())

    kernel = scipy.linalg.null_space(B2)
    Gk = kernel.T @ Gy @ kernel
    Lk = np.linalg.cholesky(Gk)
    # strain metric is the identity; pressure columns of B1 are zero
    C = kernel.T @ B1[:, : layout.sizes[0]]
    C_tilde = scipy.linalg.solve_triangular(Lk, C, lower=True)
    b1_min = float(scipy.linalg.svdvals(C_tilde).min())
    return {
        "b2_min": b2_min,
        "b1_kernel_min": b1_min,
        "kernel_dim": kernel.shape[1],
        "total_dofs": layout.total,
    }
