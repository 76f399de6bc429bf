"""Command-line entry point for reproducible runs with file outputs.

Three subcommands:

  convergence   manufactured-solution refinement study, writes convergence.csv
  mandel        quarter-domain consolidation benchmark, writes transient CSVs
  solve         one-shot solve, writes coefficient vectors and a legacy VTK file

Runs are configured by a single declarative INI file (sections: mesh,
material, permeability, solver, run, mandel, output) with a handful of
command-line overrides.  Exit codes: 0 success, 2 configuration error,
3 solver non-convergence, 4 rate outside the configured acceptance band.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from .assembly import FIELD_NAMES, Assembler
from .elements import make_space_set
from .fields import FieldEvaluator
from .mesh import build_structured_mesh
from .physics import MaterialParams, PermeabilityLaw, ProblemData
from .scenarios import (
    mandel_parameters_default,
    run_mandel,
    write_midline_csv,
    write_transients_csv,
)
from .solver import ConvergenceError, SolverConfig, newton_solve, picard_solve
from .verification import (
    ManufacturedCase,
    compute_errors,
    convergence_study,
    default_convergence_law,
    default_convergence_params,
    write_convergence_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BAND = 4

LAW_ALIASES = {
    "constant": "constant",
    "exp": "exponential",
    "exponential": "exponential",
    "kozeny": "kozeny",
    "scaled-exp": "scaled-exp",
}


class ConfigError(Exception):
    """Raised for malformed or inconsistent run configuration."""


def _get(cfg, section, key, cast, default):
    if not cfg.has_option(section, key):
        return default
    raw = cfg.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def load_config(path):
    cfg = configparser.ConfigParser()
    if path is None:
        return cfg
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            cfg.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}")
    return cfg


def material_from_config(cfg):
    kwargs = {}
    for key in ("c0", "alpha", "mu_f"):
        if cfg.has_option("material", key):
            kwargs[key] = _get(cfg, "material", key, float, None)
    if cfg.has_option("material", "e") or cfg.has_option("material", "nu"):
        E = _get(cfg, "material", "e", float, None)
        nu = _get(cfg, "material", "nu", float, None)
        if E is None or nu is None:
            raise ConfigError("[material] e and nu must be given together")
        try:
            return MaterialParams.from_young_poisson(E, nu, **kwargs)
        except ValueError as exc:
            raise ConfigError(f"[material] {exc}") from exc
    kwargs["lam"] = _get(cfg, "material", "lam", float, 1.0)
    kwargs["mu"] = _get(cfg, "material", "mu", float, 1.0)
    try:
        return MaterialParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[material] {exc}") from exc


def law_from_config(cfg, override=None):
    name = override or _get(cfg, "permeability", "law", str, "kozeny")
    if name not in LAW_ALIASES:
        raise ConfigError(
            f"unknown permeability law {name!r} (choose from {sorted(LAW_ALIASES)})"
        )
    try:
        return PermeabilityLaw(
            LAW_ALIASES[name],
            kappa0=_get(cfg, "permeability", "kappa0", float, 1.0),
            k0=_get(cfg, "permeability", "k0", float, 0.1),
            k1=_get(cfg, "permeability", "k1", float, 0.1),
            k2=_get(cfg, "permeability", "k2", float, 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[permeability] {exc}") from exc


def solver_from_config(cfg):
    return SolverConfig(
        abs_tol=_get(cfg, "solver", "abs_tol", float, 1e-7),
        rel_tol=_get(cfg, "solver", "rel_tol", float, 1e-7),
        max_iter=_get(cfg, "solver", "max_iter", int, 50),
    )


def _outdir(args, cfg):
    out = args.out or _get(cfg, "output", "dir", str, "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _degree(args, cfg, default=0):
    k = args.degree if args.degree is not None else _get(cfg, "run", "degree", int, default)
    if k not in (0, 1):
        raise ConfigError(f"degree must be 0 or 1, got {k}")
    return k


# ---------------------------------------------------------------------------
# convergence


def cmd_convergence(args, cfg):
    k = _degree(args, cfg)
    levels = args.levels if args.levels is not None else _get(cfg, "run", "levels", int, 6)
    if levels < 2:
        raise ConfigError("convergence needs at least 2 refinement levels")
    lo = _get(cfg, "run", "rate_band_lo", float, 0.85 * (k + 1))
    hi = _get(cfg, "run", "rate_band_hi", float, 1.15 * (k + 1))
    params = material_from_config(cfg) if cfg.has_section("material") else default_convergence_params()
    law = law_from_config(cfg, args.law) if (cfg.has_section("permeability") or args.law) else default_convergence_law()
    config = solver_from_config(cfg)

    try:
        study = convergence_study(k, num_levels=levels, params=params, law=law, config=config)
    except ConvergenceError as exc:
        print(f"solver failed during refinement study: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    outdir = _outdir(args, cfg)
    write_convergence_csv(study, outdir / "convergence.csv")

    names = ("e0_d", "e1_p", "ediv_sigma", "e0_u", "e0_gamma")
    print(f"degree k={k}, {levels} levels, law={law.variant}")
    print("field        error(finest)  rate(last)")
    ok = True
    for name in names:
        err = getattr(study.reports[-1], name)
        rate = study.rates(name)[-1]
        flag = ""
        if not lo <= rate <= hi:
            ok = False
            flag = f"  OUTSIDE [{lo:.3g}, {hi:.3g}]"
        print(f"{name:<12} {err:12.4e}  {rate:8.3f}{flag}")
    print(f"wrote {outdir / 'convergence.csv'}")
    return EXIT_OK if ok else EXIT_BAND


# ---------------------------------------------------------------------------
# mandel


def _mandel_setup(cfg, variant):
    setup = mandel_parameters_default(variant)
    setup.dt = _get(cfg, "mandel", "dt", float, setup.dt)
    setup.t_end = _get(cfg, "mandel", "t_end", float, setup.t_end)
    setup.F = _get(cfg, "mandel", "f", float, setup.F)
    setup.nx = _get(cfg, "mesh", "nx", int, setup.nx)
    setup.ny = _get(cfg, "mesh", "ny", int, setup.ny)
    if cfg.has_section("material"):
        setup.params = material_from_config(cfg)
    return setup


def cmd_mandel(args, cfg):
    variants_raw = _get(cfg, "mandel", "variants", str, "constant,scaled-exp")
    if args.law:
        variants_raw = args.law
    variants = [v.strip() for v in variants_raw.split(",") if v.strip()]
    for v in variants:
        if LAW_ALIASES.get(v) not in ("constant", "scaled-exp"):
            raise ConfigError(f"mandel supports constant and scaled-exp laws, got {v!r}")
    times_raw = _get(cfg, "mandel", "midline_times", str, "0.25,0.5,1.0")
    try:
        midline_times = tuple(float(t) for t in times_raw.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"[mandel] midline_times: {exc}") from exc

    outdir = _outdir(args, cfg)
    config = solver_from_config(cfg)
    peaks = {}
    for variant in variants:
        setup = _mandel_setup(cfg, LAW_ALIASES[variant])
        try:
            result = run_mandel(setup, midline_times=midline_times, config=config)
        except RuntimeError as exc:
            print(f"{variant}: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        record = result.record
        suffix = "" if len(variants) == 1 else f"_{LAW_ALIASES[variant]}"
        write_transients_csv(record, outdir / f"mandel_transients{suffix}.csv")
        for t in sorted(record.midline):
            write_midline_csv(record, t, outdir / f"mandel_midline{suffix}_{t:g}.csv")
        peaks[variant] = max(record.p_probe1)
        print(
            f"{variant}: {setup.num_steps} steps, "
            f"peak p(0,H/2) = {peaks[variant]:.6g}, final = {record.p_probe1[-1]:.6g}"
        )
    if len(peaks) == 2:
        pc, pn = peaks[variants[0]], peaks[variants[1]]
        rel = "<" if pn < pc else ">="
        print(f"summary: nonlinear peak {pn:.6g} {rel} constant peak {pc:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def write_legacy_vtk(spaces, x, path):
    """Pointwise pressure plus cellwise displacement/stress samples, ASCII VTK."""
    mesh = spaces.mesh
    verts = mesh.vertices
    tris = mesh.triangles

    corner_ev = FieldEvaluator(
        spaces, np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    )
    p_corner = corner_ev.pressure(x)                    # (nt, 3)
    p_vertex = np.zeros(len(verts))
    p_vertex[tris.ravel()] = p_corner.ravel()           # continuous: last write wins

    mid_ev = FieldEvaluator(spaces, np.array([[1.0 / 3.0, 1.0 / 3.0]]))
    u_mid = mid_ev.displacement(x)[:, 0]                # (nt, 2)
    s_mid = mid_ev.stress(x)[:, 0]                      # (nt, 2, 2)
    d_mid = mid_ev.strain(x)[:, 0]

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("five-field poroelasticity solution\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(verts)} double\n")
        for vx, vy in verts:
            fh.write(f"{vx:.6g} {vy:.6g} 0\n")
        fh.write(f"CELLS {len(tris)} {4 * len(tris)}\n")
        for a, b, c in tris:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {len(tris)}\n")
        fh.write("5\n" * len(tris))
        fh.write(f"POINT_DATA {len(verts)}\n")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        for v in p_vertex:
            fh.write(f"{v:.6g}\n")
        fh.write(f"CELL_DATA {len(tris)}\n")
        fh.write("VECTORS displacement double\n")
        for ux, uy in u_mid:
            fh.write(f"{ux:.6g} {uy:.6g} 0\n")
        fh.write("SCALARS trace_strain double 1\nLOOKUP_TABLE default\n")
        for d in d_mid:
            fh.write(f"{d[0, 0] + d[1, 1]:.6g}\n")
        fh.write("SCALARS stress_xx double 1\nLOOKUP_TABLE default\n")
        for s in s_mid:
            fh.write(f"{s[0, 0]:.6g}\n")
        fh.write("SCALARS stress_yy double 1\nLOOKUP_TABLE default\n")
        for s in s_mid:
            fh.write(f"{s[1, 1]:.6g}\n")


def write_coefficients_csv(layout, x, path):
    with open(path, "w") as fh:
        fh.write("field,index,value\n")
        for name in FIELD_NAMES:
            block = x[layout.block(name)]
            for i, v in enumerate(block):
                fh.write(f"{name},{i},{v:.6g}\n")


def cmd_solve(args, cfg):
    problem = _get(cfg, "run", "problem", str, "manufactured")
    if problem not in ("zero", "manufactured"):
        raise ConfigError(f"run problem must be 'zero' or 'manufactured', got {problem!r}")
    k = _degree(args, cfg)
    nx = _get(cfg, "mesh", "nx", int, 8)
    ny = _get(cfg, "mesh", "ny", int, 8)
    lx = _get(cfg, "mesh", "lx", float, 1.0)
    ly = _get(cfg, "mesh", "ly", float, 1.0)
    method = _get(cfg, "solver", "method", str, "picard")
    if method not in ("picard", "newton"):
        raise ConfigError(f"solver method must be 'picard' or 'newton', got {method!r}")

    if problem == "manufactured":
        params = material_from_config(cfg) if cfg.has_section("material") else default_convergence_params()
        law = law_from_config(cfg, args.law) if (cfg.has_section("permeability") or args.law) else default_convergence_law()
        case = ManufacturedCase(params, law)
        data = case.problem_data()
    else:
        params = material_from_config(cfg)
        law = law_from_config(cfg, args.law)
        case = None
        data = ProblemData()

    mesh = build_structured_mesh(nx, ny, lx, ly)
    spaces = make_space_set(mesh, k)
    assembler = Assembler(spaces)
    solve = picard_solve if method == "picard" else newton_solve
    try:
        x, report = solve(assembler, params, law, data, solver_from_config(cfg))
    except ConvergenceError as exc:
        print(f"nonlinear solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    outdir = _outdir(args, cfg)
    write_coefficients_csv(assembler.layout, x, outdir / "coefficients.csv")
    write_legacy_vtk(spaces, x, outdir / "solution.vtk")
    print(
        f"solved {problem} problem on {nx}x{ny} mesh (k={k}, {method}): "
        f"{assembler.layout.total} dofs, {report.iterations} iterations"
    )
    if case is not None:
        errors = compute_errors(spaces, x, case)
        print(
            f"errors: e0_d={errors.e0_d:.4e} e1_p={errors.e1_p:.4e} "
            f"ediv_sigma={errors.ediv_sigma:.4e} e0_u={errors.e0_u:.4e} "
            f"e0_gamma={errors.e0_gamma:.4e}"
        )
    print(f"wrote {outdir / 'coefficients.csv'} and {outdir / 'solution.vtk'}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poromix",
        description="Mixed finite elements for nonlinear poroelasticity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("convergence", cmd_convergence),
        ("mandel", cmd_mandel),
        ("solve", cmd_solve),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI configuration file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--degree", type=int, choices=(0, 1), default=None)
        p.add_argument("--levels", type=int, default=None)
        p.add_argument(
            "--law",
            choices=sorted(LAW_ALIASES),
            default=None,
            help="permeability law override",
        )
        p.set_defaults(fn=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.fn(args, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
