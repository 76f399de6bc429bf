"""Benchmark scenarios: the Mandel quarter-domain consolidation problem.

A poroelastic slab is squeezed between rigid frictionless impervious plates;
the lateral side is free and drained.  By symmetry only the quarter domain
(0,L) x (0,H) is simulated: the outlet x = L carries zero essential pressure
and zero essential traction, the symmetry sides x = 0 and y = 0 slide
(u.n = 0 weakly, tangentially free), and the plate y = H carries the essential
traction (0, -F).  All non-outlet sides are impervious (natural zero flux).
The expected effect: pore pressure at the inner edge rises above its early
value before draining away, while the load transfers to the axial stress.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .assembly import Assembler
from .elements import make_space_set
from .fields import FieldEvaluator
from .mesh import LOCAL_EDGE_VERTICES, build_structured_mesh
from .physics import MaterialParams, PermeabilityLaw, ProblemData
from .quadrature import edge_quadrature
from .solver import SolverConfig, time_step


@dataclass
class MandelSetup:
    L: float = 1.0
    H: float = 1.0
    F: float = 100.0
    params: MaterialParams = None
    law: PermeabilityLaw = None
    dt: float = 0.01
    t_end: float = 1.0
    nx: int = 8
    ny: int = 8
    k: int = 1
    midline_samples: int = 33

    def __post_init__(self):
        if self.L <= 0 or self.H <= 0:
            raise ValueError("geometry lengths must be positive")
        if not 0 < self.dt <= self.t_end:
            raise ValueError("need 0 < dt <= t_end")

    @property
    def num_steps(self):
        return int(round(self.t_end / self.dt))

    def probe_points(self):
        """Inner mid-edge and top plate mid-point."""
        return np.array([[0.0, self.H / 2.0], [self.L / 2.0, self.H]])

    def midline_points(self):
        xs = np.linspace(0.0, self.L, self.midline_samples)
        return np.stack([xs, np.full_like(xs, self.H / 2.0)], axis=1)


def mandel_parameters_default(variant="constant"):
    """The benchmark parameter set (E=1e3, nu=1/3, c0=4e-10, alpha=0.9 ...)."""
    params = MaterialParams.from_young_poisson(
        1e3, 1.0 / 3.0, c0=4e-10, alpha=0.9, mu_f=1e-3
    )
    kappa0 = 5.1e-8
    if variant == "constant":
        law = PermeabilityLaw("constant", kappa0=kappa0)
    elif variant == "scaled-exp":
        law = PermeabilityLaw("scaled-exp", kappa0=kappa0, k0=5.0, k1=30.0)
    else:
        raise ValueError(f"unknown permeability variant {variant!r}")
    return MandelSetup(params=params, law=law)


class PointProbe:
    """Evaluates discrete fields at one physical point (containing-cell basis).

    For points on cell interfaces the lowest-index containing cell is used;
    conforming quantities are single-valued there anyway.
    """

    def __init__(self, spaces, point, tol=1e-10):
        geom = spaces.geom
        rel = np.asarray(point) - geom.origin
        ref = np.einsum("tij,tj->ti", geom.jac_inv, rel)
        inside = (
            (ref[:, 0] >= -tol) & (ref[:, 1] >= -tol) & (ref.sum(axis=1) <= 1.0 + tol)
        )
        cells = np.nonzero(inside)[0]
        if len(cells) == 0:
            raise ValueError(f"point {point} lies outside the mesh")
        cell = int(cells[0])
        self.ev = FieldEvaluator(spaces, ref[cell][None, :], cells=np.array([cell]))

    def pressure(self, x):
        return float(self.ev.pressure(x)[0, 0])

    def displacement(self, x):
        return self.ev.displacement(x)[0, 0]

    def stress(self, x):
        return self.ev.stress(x)[0, 0]

    def strain(self, x):
        return self.ev.strain(x)[0, 0]


@dataclass
class TransientRecord:
    times: list = field(default_factory=list)
    p_probe1: list = field(default_factory=list)
    p_probe2: list = field(default_factory=list)
    sxx_probe1: list = field(default_factory=list)
    sxx_probe2: list = field(default_factory=list)
    syy_probe2: list = field(default_factory=list)
    ux_probe2: list = field(default_factory=list)
    uy_probe2: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    midline: dict = field(default_factory=dict)   # time -> array of rows


@dataclass
class MandelResult:
    setup: MandelSetup
    spaces: object
    state: np.ndarray
    record: TransientRecord


def mandel_problem_data(setup):
    F = setup.F

    def zero_traction(pts):
        return np.zeros(pts.shape)

    def plate_traction(pts):
        out = np.zeros(pts.shape)
        out[..., 1] = -F
        return out

    def zero_pressure(pts):
        return np.zeros(pts.shape[:-1])

    return ProblemData(
        essential_traction={"right": zero_traction, "top": plate_traction},
        essential_pressure={"right": zero_pressure},
        slide=("left", "bottom"),
    )


def run_mandel(setup, midline_times=(), config=None, method="picard"):
    """Backward-Euler time loop from the zero state, recording transients."""
    mesh = build_structured_mesh(setup.nx, setup.ny, setup.L, setup.H)
    spaces = make_space_set(mesh, setup.k)
    assembler = Assembler(spaces)
    data = mandel_problem_data(setup)
    config = config or SolverConfig()

    probes = [PointProbe(spaces, p) for p in setup.probe_points()]
    mid_pts = setup.midline_points()
    mid_probes = [PointProbe(spaces, p) for p in mid_pts]
    wanted = sorted(set(midline_times))

    record = TransientRecord()
    x = np.zeros(assembler.layout.total)
    t = 0.0
    for step in range(setup.num_steps):
        t += setup.dt
        try:
            x, report = time_step(
                assembler, setup.params, setup.law, data, x, setup.dt,
                config=config, method=method,
            )
        except Exception as exc:
            raise RuntimeError(
                f"nonlinear solve failed at step {step + 1} (t = {t:.4g})"
            ) from exc
        record.times.append(t)
        record.iterations.append(report.iterations)
        record.p_probe1.append(probes[0].pressure(x))
        record.p_probe2.append(probes[1].pressure(x))
        s1 = probes[0].stress(x)
        s2 = probes[1].stress(x)
        u2 = probes[1].displacement(x)
        record.sxx_probe1.append(float(s1[0, 0]))
        record.sxx_probe2.append(float(s2[0, 0]))
        record.syy_probe2.append(float(s2[1, 1]))
        record.ux_probe2.append(float(u2[0]))
        record.uy_probe2.append(float(u2[1]))
        if any(abs(t - tw) < 0.5 * setup.dt for tw in wanted):
            rows = []
            for pt, probe in zip(mid_pts, mid_probes):
                p = probe.pressure(x)
                u = probe.displacement(x)
                d = probe.strain(x)
                s = probe.stress(x)
                rows.append(
                    (pt[0], p, u[0], d[0, 0], d[1, 1], s[0, 0], s[1, 1])
                )
            record.midline[round(t, 10)] = np.array(rows)
    return MandelResult(setup=setup, spaces=spaces, state=x, record=record)


def slide_normal_displacement(result):
    """max over slide edges of |int_e u_h . n| relative to ||u_h||_0."""
    spaces = result.spaces
    mesh = spaces.mesh
    x = result.state
    from . import forms

    s_ref, w_ref = edge_quadrature(2 * spaces.k + 4)
    ref_vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    edges = np.concatenate([mesh.edges_with_tag(t) for t in ("left", "bottom")])
    worst = 0.0
    for le, edge_ids, cells in forms._edge_groups(mesh, edges):
        a, b = LOCAL_EDGE_VERTICES[le]
        ref_pts = ref_vertices[a][None] + s_ref[:, None] * (
            ref_vertices[b] - ref_vertices[a]
        )[None]
        ev = FieldEvaluator(spaces, ref_pts, cells=cells)
        p = mesh.triangle_coords()[cells]
        d = p[:, b] - p[:, a]
        length = np.linalg.norm(d, axis=1)
        tang = d / length[:, None]
        n_out = np.stack([tang[:, 1], -tang[:, 0]], axis=1)
        un = np.einsum("eqi,ei->eq", ev.displacement(x), n_out)
        integrals = length * np.einsum("q,eq->e", w_ref, un)
        worst = max(worst, float(np.abs(integrals).max()))

    from .quadrature import quadrature_for

    rule = quadrature_for(2 * (spaces.k + 1))
    ev = FieldEvaluator(spaces, rule.points)
    w = 2.0 * spaces.geom.area[:, None] * rule.weights[None, :]
    u = ev.displacement(x)
    norm = float(np.sqrt((w * np.einsum("tqi,tqi->tq", u, u)).sum()))
    return worst / max(norm, 1e-30)


def write_transients_csv(record, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            (
                "t",
                "p_probe1",
                "sxx_probe2",
                "syy_probe2",
                "ux_probe2",
                "uy_probe2",
                "p_probe2",
                "sxx_probe1",
            )
        )
        for i, t in enumerate(record.times):
            writer.writerow(
                [f"{t:.6g}"]
                + [
                    f"{v:.6g}"
                    for v in (
                        record.p_probe1[i],
                        record.sxx_probe2[i],
                        record.syy_probe2[i],
                        record.ux_probe2[i],
                        record.uy_probe2[i],
                        record.p_probe2[i],
                        record.sxx_probe1[i],
                    )
                ]
            )


MIDLINE_COLUMNS = ("x", "p", "ux", "dxx", "dyy", "sxx", "syy")


def write_midline_csv(record, t, path):
    key = round(t, 10)
    if key not in record.midline:
        raise KeyError(f"no mid-line profile recorded at t = {t}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MIDLINE_COLUMNS)
        for row in record.midline[key]:
            writer.writerow([f"{v:.6g}" for v in row])
