#!/usr/bin/env python3
"""Epsilon-ladder study for the two-velocity kinetic model.

The reference is the nonlinear diffusion u_t = ((1 / (2u)) u_x)_x solved by
the lagged-coefficient implicit scheme; writes out/carleman_ladder/.
"""

from pathlib import Path

import relaxbench as rb
from relaxbench import builder, diagnostics
from relaxbench.hypersolver import SolverOptions

EPS = (0.2, 0.1, 0.05, 0.025)


def main():
    grid = rb.SpatialGrid((256,), (1.0,))
    bundle = builder.demo("carleman", grid)
    table = diagnostics.convergence_study(
        bundle.system, bundle.target, bundle.u0(grid), grid, 0.1, EPS,
        opts=SolverOptions(flux="spectral", cfl=0.1),
    )
    out = Path("out/carleman_ladder")
    out.mkdir(parents=True, exist_ok=True)
    (out / "convergence.csv").write_text(table.to_csv())
    for row in table.rows:
        order = "" if row.observed_order is None else f" order {row.observed_order:.3f}"
        print(f"eps={row.eps:<6g} errI={row.errI:.5g} residual={row.errII_weak:.5g}{order}")
    print(f"wrote {out / 'convergence.csv'}")


if __name__ == "__main__":
    main()
