"""Walk through a manufactured-solution refinement study.

Solves the stationary five-field poroelasticity system on a sequence of
uniformly refined meshes against a smooth exact solution, prints the error
table with observed convergence orders, and writes the table as CSV.

Run from the repository root:

    python3 demos/convergence_demo.py [--degree 0] [--levels 4] [--out demo_out]
"""

import argparse
import pathlib

from poromix import convergence_study, write_convergence_csv

FIELDS = (
    ("e0_d", "strain L2"),
    ("e1_p", "pressure H1"),
    ("ediv_sigma", "stress H(div)"),
    ("e0_u", "displacement L2"),
    ("e0_gamma", "rotation L2"),
)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--degree", type=int, default=0, choices=(0, 1))
    parser.add_argument("--levels", type=int, default=4)
    parser.add_argument("--out", default="demo_out")
    args = parser.parse_args()

    print(f"refinement study: degree k={args.degree}, {args.levels} levels")
    print(f"expected order of convergence for every field: k+1 = {args.degree + 1}")
    print()

    study = convergence_study(args.degree, num_levels=args.levels)

    header = f"{'level':>5} {'h':>11} {'dofs':>8}"
    for name, _ in FIELDS:
        header += f" {name:>10} {'rate':>5}"
    print(header)
    rates = {name: study.rates(name) for name, _ in FIELDS}
    for i, report in enumerate(study.reports):
        row = f"{i:>5} {report.h:>11.4e} {report.dofs:>8d}"
        for name, _ in FIELDS:
            rate = "   --" if i == 0 else f"{rates[name][i - 1]:>5.2f}"
            row += f" {getattr(report, name):>10.3e} {rate}"
        print(row)

    print()
    for name, label in FIELDS:
        print(f"final observed order, {label:16s}: {rates[name][-1]:.3f}")

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"convergence_k{args.degree}.csv"
    write_convergence_csv(study, path)
    print(f"\nwrote {path}")
    print(
        "plot it with: cd frontend && npm run build && "
        f"node dist/cli.js convergence ../{path} --degree {args.degree}"
    )


if __name__ == "__main__":
    main()
