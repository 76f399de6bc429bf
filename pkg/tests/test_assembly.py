"""Matrix and load-vector assembly against direct-quadrature oracles.

The main oracle reconstructs the five fields pointwise from random global
coefficient vectors and integrates the continuous bilinear forms directly;
x^T M y must match for every pair of random vectors.  This exercises every
block, the orientation signs of shared stress DOFs, and the frozen
permeability path independently of the element-level assembly code.
"""

import numpy as np
import pytest

from poromix import forms
from poromix.assembly import Assembler, BlockLayout, export_matrix_market
from poromix.elements import make_space_set, shifted_legendre
from poromix.fields import SKEW, FieldEvaluator
from poromix.mesh import LOCAL_EDGE_VERTICES, build_structured_mesh
from poromix.physics import MaterialParams, PermeabilityLaw, ProblemData
from poromix.quadrature import edge_quadrature, quadrature_for

RNG = np.random.default_rng(6021023)

PARAMS = MaterialParams(lam=1.3, mu=0.8, c0=0.25, alpha=0.7, mu_f=1.0)
CONST_LAW = PermeabilityLaw("constant", kappa0=0.4)
EXP_LAW = PermeabilityLaw("exponential", k0=0.1, k1=0.1, k2=1.0)

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@pytest.fixture(scope="module", params=[0, 1])
def setup(request):
    mesh = build_structured_mesh(2, 2, 1.0, 1.0)
    spaces = make_space_set(mesh, request.param)
    return mesh, spaces, Assembler(spaces)


def hooke_tensor(params, d):
    tr = d[..., 0, 0] + d[..., 1, 1]
    return params.lam * tr[..., None, None] * np.eye(2) + 2.0 * params.mu * d


def volume_form_oracle(spaces, ctx, x, y, quad_degree):
    """Direct quadrature of a + b1-pair + b2-pair for two monolithic vectors."""
    rule = quadrature_for(quad_degree)
    ev = FieldEvaluator(spaces, rule.points)
    w = 2.0 * spaces.geom.area[:, None] * rule.weights[None, :]

    dx, dy = ev.strain(x), ev.strain(y)
    px, py = ev.pressure(x), ev.pressure(y)
    gpx, gpy = ev.pressure_grad(x), ev.pressure_grad(y)
    sx, sy = ev.stress(x), ev.stress(y)
    divx, divy = ev.stress_div(x), ev.stress_div(y)
    ux, uy = ev.displacement(x), ev.displacement(y)
    rx, ry = ev.rotation(x), ev.rotation(y)

    p = ctx.params
    if ctx.d_frozen is None and ctx.p_frozen is None:
        zeta = np.zeros(w.shape)
    else:
        dw = ev.strain(np.zeros_like(x)) * 0.0
        # frozen state lives in the strain/pressure blocks only
        frozen = np.zeros_like(x)
        if ctx.d_frozen is not None:
            frozen[ev.layout.block("strain")] = ctx.d_frozen
        if ctx.p_frozen is not None:
            frozen[ev.layout.block("pressure")] = ctx.p_frozen
        dfz = ev.strain(frozen)
        zeta = p.c0 * ev.pressure(frozen) + p.alpha * (
            dfz[..., 0, 0] + dfz[..., 1, 1]
        )
        del dw
    kappa = ctx.law(p, zeta) * ctx.kappa_scale

    tr_x = dx[..., 0, 0] + dx[..., 1, 1]
    tr_y = dy[..., 0, 0] + dy[..., 1, 1]
    total = (w * np.einsum("tqij,tqij->tq", hooke_tensor(p, dy), dx)).sum()
    total += (w * kappa * np.einsum("tqd,tqd->tq", gpy, gpx)).sum()
    total += (w * p.c0 * py * px).sum()
    total += (w * p.alpha * (px * tr_y - py * tr_x)).sum()
    # b1 in both slots
    total -= (w * np.einsum("tqij,tqij->tq", sx, dy)).sum()
    total -= (w * np.einsum("tqij,tqij->tq", sy, dx)).sum()
    # b2 in both slots (eta = rotation scalar times the skew generator)
    total -= (w * np.einsum("tqr,tqr->tq", ux, divy)).sum()
    total -= (w * np.einsum("tqij,tqij->tq", sy, rx[..., None, None] * SKEW)).sum()
    total -= (w * np.einsum("tqr,tqr->tq", uy, divx)).sum()
    total -= (w * np.einsum("tqij,tqij->tq", sx, ry[..., None, None] * SKEW)).sum()
    return total


def slide_form_oracle(spaces, tags, x, y, quad_degree):
    """Direct quadrature of the sliding coupling on the tagged edges."""
    mesh = spaces.mesh
    s_ref, w_ref = edge_quadrature(quad_degree)
    total = 0.0
    edges = np.concatenate([mesh.edges_with_tag(t) for t in tags])
    for le, edge_ids, cells in forms._edge_groups(mesh, edges):
        a, b = LOCAL_EDGE_VERTICES[le]
        ref_pts = REF_VERTICES[a][None] + s_ref[:, None] * (
            REF_VERTICES[b] - REF_VERTICES[a]
        )[None]
        ev = FieldEvaluator(spaces, ref_pts, cells=cells)
        p = mesh.triangle_coords()[cells]
        d = p[:, b] - p[:, a]
        length = np.linalg.norm(d, axis=1)
        t = d / length[:, None]
        n_out = np.stack([t[:, 1], -t[:, 0]], axis=1)
        for left, right in ((x, y), (y, x)):
            sn = np.einsum("eqij,ej->eqi", ev.stress(right), n_out)
            sn_t = np.einsum("eqi,ei->eq", sn, t)
            u_t = np.einsum("eqi,ei->eq", ev.displacement(left), t)
            total += (length[:, None] * w_ref[None, :] * sn_t * u_t).sum()
    return total


def test_matrix_matches_direct_quadrature(setup):
    mesh, spaces, asm = setup
    ctx = forms.FormContext(params=PARAMS, law=CONST_LAW)
    M = asm.assemble_matrix(ctx)
    for _ in range(3):
        x = RNG.standard_normal(asm.layout.total)
        y = RNG.standard_normal(asm.layout.total)
        direct = volume_form_oracle(spaces, ctx, x, y, 2 * (spaces.k + 2) + 4)
        scale = max(1.0, abs(direct))
        assert abs(x @ (M @ y) - direct) < 1e-10 * scale


def test_matrix_with_frozen_state(setup):
    """Exponential permeability frozen at a random state, same quadrature rule."""
    mesh, spaces, asm = setup
    lay = asm.layout
    d_frozen = 0.3 * RNG.standard_normal(spaces.n_strain)
    p_frozen = 0.3 * RNG.standard_normal(spaces.n_pressure)
    ctx = forms.FormContext(
        params=PARAMS, law=EXP_LAW, d_frozen=d_frozen, p_frozen=p_frozen,
        kappa_scale=0.05,
    )
    M = asm.assemble_matrix(ctx)
    x = RNG.standard_normal(lay.total)
    y = RNG.standard_normal(lay.total)
    direct = volume_form_oracle(spaces, ctx, x, y, spaces.assembly_quadrature_degree())
    assert abs(x @ (M @ y) - direct) < 1e-10 * max(1.0, abs(direct))


def test_slide_coupling(setup):
    mesh, spaces, asm = setup
    ctx = forms.FormContext(params=PARAMS, law=CONST_LAW)
    data = ProblemData(slide=("left", "bottom"))
    M_slide = asm.assemble_matrix(ctx, data)
    M_plain = asm.assemble_matrix(ctx)
    S = M_slide - M_plain
    x = RNG.standard_normal(asm.layout.total)
    y = RNG.standard_normal(asm.layout.total)
    direct = slide_form_oracle(
        spaces, ("left", "bottom"), x, y, spaces.assembly_quadrature_degree() + 2
    )
    assert abs(x @ (S @ y) - direct) < 1e-10 * max(1.0, abs(direct))


def test_matrix_symmetry_structure(setup):
    """M is symmetric apart from the antisymmetric Biot coupling: M^T = M(-alpha)."""
    mesh, spaces, asm = setup
    data = ProblemData(slide=("left",))
    ctx = forms.FormContext(params=PARAMS, law=CONST_LAW)
    M = asm.assemble_matrix(ctx, data)
    flipped = MaterialParams(
        lam=PARAMS.lam, mu=PARAMS.mu, c0=PARAMS.c0, alpha=PARAMS.alpha, mu_f=PARAMS.mu_f
    )
    flipped.alpha = -PARAMS.alpha  # bypasses range validation on purpose
    Mf = asm.assemble_matrix(forms.FormContext(params=flipped, law=CONST_LAW), data)
    diff = (M.T - Mf).tocoo()
    scale = np.abs(M.data).max()
    assert (np.abs(diff.data).max() if diff.nnz else 0.0) < 1e-12 * scale


def test_rhs_matches_direct_quadrature(setup):
    mesh, spaces, asm = setup

    def f(pts):
        return np.stack([np.sin(pts[..., 0]), pts[..., 1] ** 2], axis=-1)

    def g(pts):
        return np.cos(pts[..., 0] + pts[..., 1])

    def u_gamma(pts):
        return np.stack([pts[..., 1], 0.2 * pts[..., 0]], axis=-1)

    def r_gamma(pts):
        return 1.0 + pts[..., 0]

    data = ProblemData(
        f=f, g=g,
        dirichlet_displacement={"bottom": u_gamma},
        flux={"top": r_gamma},
    )
    ctx = forms.FormContext(params=PARAMS, law=CONST_LAW, source_scale=0.7)
    b = asm.assemble_rhs(ctx, data)

    x = RNG.standard_normal(asm.layout.total)
    rule = quadrature_for(spaces.assembly_quadrature_degree())
    ev = FieldEvaluator(spaces, rule.points)
    w = 2.0 * spaces.geom.area[:, None] * rule.weights[None, :]
    direct = (w * np.einsum("tqi,tqi->tq", f(ev.points), ev.displacement(x))).sum()
    direct += 0.7 * (w * g(ev.points) * ev.pressure(x)).sum()

    s_ref, w_ref = edge_quadrature(spaces.assembly_quadrature_degree() + 2)
    for tag, sign_u in (("bottom", -1.0), ("top", +1.0)):
        edges = mesh.edges_with_tag(tag)
        for le, edge_ids, cells in forms._edge_groups(mesh, edges):
            a, bb = LOCAL_EDGE_VERTICES[le]
            ref_pts = REF_VERTICES[a][None] + s_ref[:, None] * (
                REF_VERTICES[bb] - REF_VERTICES[a]
            )[None]
            eve = FieldEvaluator(spaces, ref_pts, cells=cells)
            p = mesh.triangle_coords()[cells]
            d = p[:, bb] - p[:, a]
            length = np.linalg.norm(d, axis=1)
            t = d / length[:, None]
            n_out = np.stack([t[:, 1], -t[:, 0]], axis=1)
            if tag == "bottom":
                sn = np.einsum("eqij,ej->eqi", eve.stress(x), n_out)
                pair = np.einsum("eqi,eqi->eq", sn, u_gamma(eve.points))
                direct -= (length[:, None] * w_ref[None, :] * pair).sum()
            else:
                pair = 0.7 * r_gamma(eve.points) * eve.pressure(x)
                direct += (length[:, None] * w_ref[None, :] * pair).sum()

    assert abs(x @ b - direct) < 1e-10 * max(1.0, abs(direct))


def test_traction_moments_against_global_functionals(setup):
    """Moments agree with the defining global-normal edge functionals."""
    mesh, spaces, asm = setup

    def traction(pts):
        # arbitrary smooth traction field, interpreted against the outward normal
        return np.stack([pts[..., 0] + 0.5, pts[..., 1] ** 2 - 1.0], axis=-1)

    edges = mesh.edges_with_tag("right")
    dof_ids, values = forms.traction_moments(spaces, edges, traction)

    # oracle: integrate along the global edge direction with the global normal;
    # the outward normal on these owner cells equals sign * global normal
    s, w = edge_quadrature(spaces.assembly_quadrature_degree() + 2)
    mpe = spaces.bdm.moments_per_edge
    owner, local = mesh.edge_owner()
    expected = {}
    for e in edges:
        v0, v1 = mesh.edges[e]
        pa, pb = mesh.vertices[v0], mesh.vertices[v1]
        pts = pa[None, None, :] + s[None, :, None] * (pb - pa)[None, None, :]
        length = np.linalg.norm(pb - pa)
        sign = mesh.tri_edge_signs[owner[e], local[e]]
        T = traction(pts)[0]
        for m in range(mpe):
            leg = shifted_legendre(m, s)
            for r in range(2):
                val = sign * length * (w * leg * T[:, r]).sum()
                expected[r * spaces.bdm.ndofs + e * mpe + m] = val
    assert set(dof_ids.tolist()) == set(expected)
    for dof, val in zip(dof_ids, values):
        assert val == pytest.approx(expected[int(dof)], abs=1e-12)


def test_traction_constraint_reproduces_normal_trace(setup):
    """Setting the constrained DOFs reproduces sigma.n exactly on the edge."""
    mesh, spaces, asm = setup
    T = np.array([1.5, -0.25])
    edges = mesh.edges_with_tag("top")
    dof_ids, values = forms.traction_moments(spaces, edges, lambda pts: np.broadcast_to(T, pts.shape))

    vec = np.zeros(asm.layout.total)
    vec[asm.layout.offset("stress") + dof_ids] = values

    s_ref = np.linspace(0.1, 0.9, 5)
    for le, edge_ids, cells in forms._edge_groups(mesh, edges):
        a, b = LOCAL_EDGE_VERTICES[le]
        ref_pts = REF_VERTICES[a][None] + s_ref[:, None] * (
            REF_VERTICES[b] - REF_VERTICES[a]
        )[None]
        ev = FieldEvaluator(spaces, ref_pts, cells=cells)
        p = mesh.triangle_coords()[cells]
        d = p[:, b] - p[:, a]
        t = d / np.linalg.norm(d, axis=1)[:, None]
        n_out = np.stack([t[:, 1], -t[:, 0]], axis=1)
        sn = np.einsum("eqij,ej->eqi", ev.stress(vec), n_out)
        assert np.abs(sn - T).max() < 1e-10


def test_pressure_constraints(setup):
    mesh, spaces, asm = setup
    data = ProblemData(essential_pressure={"left": lambda pts: pts[..., 1] + 2.0})
    dofs, vals = asm.essential_constraints(data)
    n_edges = len(mesh.edges_with_tag("left"))
    expected_nodes = n_edges + 1 if spaces.k == 0 else 2 * n_edges + 1
    assert len(dofs) == expected_nodes
    poff = asm.layout.offset("pressure")
    coords = spaces.pressure.node_coords[dofs - poff]
    assert np.abs(coords[:, 0]).max() < 1e-12
    assert np.allclose(vals, coords[:, 1] + 2.0, atol=1e-13)


def test_eliminated_system(setup):
    mesh, spaces, asm = setup
    data = ProblemData(
        g=lambda pts: np.ones(pts.shape[:-1]),
        essential_pressure={"left": lambda pts: np.full(pts.shape[:-1], 3.0)},
    )
    ctx = forms.FormContext(params=PARAMS, law=CONST_LAW)
    system = asm.assemble(ctx, data)
    A, b = system.eliminated()
    idx = system.constraint_dofs
    assert np.allclose(b[idx], 3.0)
    rows = A[idx].toarray()
    expected = np.zeros_like(rows)
    expected[np.arange(len(idx)), idx] = 1.0
    assert np.abs(rows - expected).max() == 0.0
    cols = A[:, idx].toarray()
    assert np.abs(cols - expected.T).max() == 0.0


def test_matrix_market_roundtrip(tmp_path, setup):
    mesh, spaces, asm = setup
    ctx = forms.FormContext(params=PARAMS, law=CONST_LAW)
    M = asm.assemble_matrix(ctx)
    path = tmp_path / "system.mtx"
    export_matrix_market(M, path)
    import scipy.io

    back = scipy.io.mmread(path).tocsr()
    diff = (back - M).tocoo()
    assert (np.abs(diff.data).max() if diff.nnz else 0.0) < 1e-13 * np.abs(M.data).max()


def test_layout_split(setup):
    mesh, spaces, asm = setup
    lay = BlockLayout.for_spaces(spaces)
    vec = np.arange(lay.total, dtype=float)
    parts = lay.split(vec)
    assert sum(len(v) for v in parts.values()) == lay.total
    assert parts["strain"][0] == 0.0
    assert parts["pressure"][0] == spaces.n_strain
