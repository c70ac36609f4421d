#!/usr/bin/env python3
"""Decay of the structure-violating fixture toward the null solution.

The conserved transport block does not vanish for this system, so instead
of a parabolic limit the solution drains to zero as the relaxation
parameter shrinks; prints the final norms down the ladder.
"""

import relaxbench as rb
from relaxbench import builder, hypersolver
from relaxbench.core import l2_norm
from relaxbench.hypersolver import SolverOptions


def main():
    grid = rb.SpatialGrid((256,), (1.0,))
    bundle = builder.demo("null-limit", grid)
    u0 = bundle.u0(grid)
    n0 = l2_norm(u0, grid)
    print(f"initial ||uI|| = {n0:.6g}")
    for eps in (0.2, 0.1, 0.05, 0.025):
        init = hypersolver.well_prepared_state(bundle.system, grid, u0, eps)
        traj = hypersolver.run(bundle.system, init, 0.1, SolverOptions(flux="rusanov"))
        n = l2_norm(traj.final.uI, grid)
        print(f"eps={eps:<6g} ||uI(T)|| = {n:.6g}  ({100 * n / n0:.4f} % of initial)")


if __name__ == "__main__":
    main()
