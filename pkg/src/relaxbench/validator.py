"""Sampled-sphere spectral verification of the structural hypotheses.

Every check sweeps a finite sample set: grid points for x, a uniform angular
sweep of unit wave vectors, and a lattice of states from a declared box.
Degree-one homogeneity of the transport symbols (and degree two of the limit
generators) makes unit-sphere sampling sufficient.  Reports are deterministic
and every failing entry carries a witness at which re-evaluating the scalar
criterion reproduces the failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .builder import ParabolicTarget, QuasilinearDivergence, ReactionDiffusion, box_lattice
from .core import (
    Array,
    CheckResult,
    RelaxationSystem,
    SingularSourceError,
    SpatialGrid,
    Symmetrizer,
    ValidationReport,
    as_point,
    limit_generator,
    principal_symbol,
)

EIG_RTOL = 1e-9          # relative eigenvalue tolerance separating structure from roundoff
DET_FLOOR = 1e-10        # determinant floor for the rank condition at unit wave vectors
ZERO_TOL = 1e-11         # absolute tolerance for symbol entries that must vanish

NULL_LIMIT_NOTE = (
    "conserved transport block does not vanish: the relaxation limit is the null solution"
)

REPORT_HEADER = (
    "structural checks on sampled (x, xi, state); "
    "the constant-coefficient convergence theorem's undefined hypothesis labels "
    "are read as the lower-order-source and dissipativity conditions"
)


@dataclass(frozen=True)
class SampleSet:
    """Finite samples standing in for 'for all (x, xi, state)'."""

    x_points: Array       # (d, Mx)
    directions: Array     # (d, Mxi), unit columns
    u_points: Array       # (k, Mu)
    v_points: Array       # (m, Mv)

    def __post_init__(self):
        norms = np.linalg.norm(self.directions, axis=0)
        if self.directions.shape[1] == 0 or self.x_points.shape[1] == 0:
            raise ValueError("sample set must be nonempty")
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("wave-vector samples must have unit norm")

    @staticmethod
    def build(
        grid: SpatialGrid,
        k: int,
        m: int,
        u_box: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
        v_box: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
        directions_2d: int = 64,
        x_stride: Optional[int] = None,
    ) -> "SampleSet":
        """Default sampling: strided grid points, angular sweep, box lattices."""
        if grid.d == 1:
            dirs = np.array([[1.0, -1.0]])
        else:
            theta = 2.0 * np.pi * np.arange(directions_2d) / directions_2d
            dirs = np.stack([np.cos(theta), np.sin(theta)])
        pts = grid.flat_points()
        stride = x_stride or max(1, pts.shape[1] // 64)
        xs = pts[:, ::stride]
        if u_box is None:
            u_box = ([-1.0] * k, [1.0] * k)
        if v_box is None:
            v_box = ([-1.0] * m, [1.0] * m)
        us = box_lattice(u_box[0], u_box[1], per_axis=3, cap=81)
        vs = box_lattice(v_box[0], v_box[1], per_axis=3, cap=81)
        return SampleSet(x_points=xs, directions=dirs, u_points=us, v_points=vs)


def _spectral_radius(mat: Array) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(mat)))) if mat.size else 0.0


def check_hyperbolicity(sys: RelaxationSystem, samples: SampleSet) -> CheckResult:
    """Spectrum of i * principal symbol must be real at every sample."""
    worst = -np.inf
    witness = {}
    for ix in range(samples.x_points.shape[1]):
        x = samples.x_points[:, ix]
        for jd in range(samples.directions.shape[1]):
            xi = samples.directions[:, jd]
            try:
                eigs = np.linalg.eigvals(1j * principal_symbol(sys, x, xi))
            except np.linalg.LinAlgError:
                return CheckResult(
                    "hyperbolicity", False, -np.inf,
                    {"x": x, "xi": xi, "value": "eigensolver failed"},
                )
            radius = float(np.max(np.abs(eigs)))
            defect = float(np.max(np.abs(eigs.imag))) - EIG_RTOL * radius
            if defect > worst:
                worst = defect
                bad = eigs[int(np.argmax(np.abs(eigs.imag)))]
                witness = {"x": x, "xi": xi, "eigenvalue": complex(bad)}
    return CheckResult("hyperbolicity", worst <= 0.0, -worst, witness)


def check_conserved_block(sys: RelaxationSystem, samples: SampleSet) -> CheckResult:
    """The conserved-block transport symbol must vanish identically."""
    worst = 0.0
    witness = {}
    for ix in range(samples.x_points.shape[1]):
        x = samples.x_points[:, ix]
        for jd in range(samples.directions.shape[1]):
            xi = samples.directions[:, jd]
            block = principal_symbol(sys, x, xi)[: sys.k, : sys.k]
            val = float(np.max(np.abs(block)))
            if val > worst:
                worst = val
                witness = {"x": x, "xi": xi, "value": val}
    passed = worst <= ZERO_TOL
    return CheckResult(
        "conserved_block", passed, ZERO_TOL - worst, witness,
        note="" if passed else NULL_LIMIT_NOTE,
    )


def check_rank_condition(sys: RelaxationSystem, samples: SampleSet) -> CheckResult:
    """Gram determinant of the coupling block must stay above the floor."""
    if sys.k > sys.m:
        return CheckResult(
            "rank_condition", False, -np.inf,
            {"value": f"k={sys.k} exceeds m={sys.m}"},
            note="coupling block is too thin whenever the conserved part dominates",
        )
    best = np.inf
    witness = {}
    for ix in range(samples.x_points.shape[1]):
        x = samples.x_points[:, ix]
        for jd in range(samples.directions.shape[1]):
            xi = samples.directions[:, jd]
            if sys.multiplier is not None:
                m21 = -sys.multiplier.b_at(xi)
            else:
                m21 = sys.contract(sys.m21, as_point(x), xi)[:, :, 0]
            det = float(np.linalg.det(m21.T @ m21))
            if det < best:
                best = det
                witness = {"x": x, "xi": xi, "determinant": det}
    return CheckResult("rank_condition", best > DET_FLOOR, best - DET_FLOOR, witness)


def check_dissipativity(sys: RelaxationSystem, samples: SampleSet) -> CheckResult:
    """Certified negative-definiteness margin of the stiff source derivative.

    lambda0 is minus the largest eigenvalue of the symmetric part of the
    jacobian over all sampled (x, u, z); the check passes when it is positive.
    """
    lam0 = np.inf
    witness = {}
    for ix in range(samples.x_points.shape[1]):
        x = as_point(samples.x_points[:, ix])
        for iu in range(samples.u_points.shape[1]):
            u = samples.u_points[:, iu:iu + 1]
            jac = sys.stiff_source_jacobian(
                np.repeat(x, samples.v_points.shape[1], axis=1),
                np.repeat(u, samples.v_points.shape[1], axis=1),
                samples.v_points,
            )
            if not np.all(np.isfinite(jac)):
                return CheckResult(
                    "dissipativity", False, -np.inf,
                    {"x": x[:, 0], "u": u[:, 0], "value": "non-finite jacobian"},
                )
            sym = 0.5 * (jac + np.swapaxes(jac, 0, 1))
            eigs = np.linalg.eigvalsh(np.moveaxis(sym, -1, 0))
            iv = int(np.argmax(eigs[:, -1]))
            cand = -float(eigs[iv, -1])
            if cand < lam0:
                lam0 = cand
                witness = {
                    "x": x[:, 0], "u": u[:, 0], "v": samples.v_points[:, iv],
                    "eigenvalue": float(eigs[iv, -1]),
                }
    return CheckResult("dissipativity", lam0 > 0.0, lam0, witness)


def check_symmetrizer(sys: RelaxationSystem, r: Symmetrizer, samples: SampleSet) -> CheckResult:
    """Blocks positive definite and R * symbol skew-Hermitian at every sample."""
    worst = -np.inf
    witness = {}
    k = sys.k
    for ix in range(samples.x_points.shape[1]):
        x = samples.x_points[:, ix]
        for jd in range(samples.directions.shape[1]):
            xi = samples.directions[:, jd]
            r11 = r.block_at("r11", x, xi)
            r22 = r.block_at("r22", x, xi)
            for name, blk in (("r11", r11), ("r22", r22)):
                asym = float(np.max(np.abs(blk - blk.T)))
                mineig = float(np.min(np.linalg.eigvalsh(0.5 * (blk + blk.T))))
                defect = max(asym - ZERO_TOL, r.eta - mineig)
                if defect > worst:
                    worst = defect
                    witness = {"x": x, "xi": xi, "block": name, "eigenvalue": mineig}
            rmat = np.zeros((sys.n, sys.n), dtype=complex)
            rmat[:k, :k] = r11
            rmat[k:, k:] = r22
            rm = rmat @ principal_symbol(sys, x, xi)
            scale = float(np.linalg.norm(rm))
            defect = float(np.linalg.norm(rm + rm.conj().T)) - EIG_RTOL * max(scale, 1e-300)
            if defect > worst:
                worst = defect
                witness = {"x": x, "xi": xi, "value": float(np.linalg.norm(rm + rm.conj().T))}
    return CheckResult("symmetrizer", worst <= 0.0, -worst, witness)


def _generator_at(
    obj: Union[RelaxationSystem, ParabolicTarget], x, u, xi
) -> Array:
    if isinstance(obj, RelaxationSystem):
        return limit_generator(obj, x, u, xi)
    if isinstance(obj, ReactionDiffusion):
        return -obj.second_order_symbol(x, xi)
    if isinstance(obj, QuasilinearDivergence):
        return -obj.second_order_symbol(u, xi)
    raise TypeError(f"cannot form a second-order generator from {type(obj)!r}")


def check_petrowski(
    obj: Union[RelaxationSystem, ParabolicTarget],
    samples: SampleSet,
    mode: str = "petrowski",
) -> CheckResult:
    """Parabolicity of the limit generator over the sampled sphere.

    petrowski mode certifies alpha0 = -max Re eig(G) > 0; strong mode
    certifies c0 = min eig of the symmetric part of -G > 0, which is the
    stricter condition.
    """
    if mode not in ("petrowski", "strong"):
        raise ValueError("mode must be 'petrowski' or 'strong'")
    margin = np.inf
    witness = {}
    name = "petrowski_limit" if mode == "petrowski" else "strong_parabolicity"
    for ix in range(samples.x_points.shape[1]):
        x = samples.x_points[:, ix]
        for iu in range(samples.u_points.shape[1]):
            u = samples.u_points[:, iu]
            for jd in range(samples.directions.shape[1]):
                xi = samples.directions[:, jd]
                try:
                    gen = _generator_at(obj, x, u, xi)
                except SingularSourceError as err:
                    return CheckResult(
                        name, False, -np.inf,
                        {"x": x, "u": u, "value": str(err)},
                    )
                if mode == "petrowski":
                    try:
                        eigs = np.linalg.eigvals(gen)
                    except np.linalg.LinAlgError:
                        return CheckResult(
                            name, False, -np.inf,
                            {"x": x, "xi": xi, "value": "eigensolver failed"},
                        )
                    cand = -float(np.max(eigs.real))
                    bad = eigs[int(np.argmax(eigs.real))]
                else:
                    sym = 0.5 * (gen + gen.T)
                    eigs = np.linalg.eigvalsh(-sym)
                    cand = float(eigs[0])
                    bad = -eigs[0]
                if cand < margin:
                    margin = cand
                    witness = {"x": x, "u": u, "xi": xi, "eigenvalue": complex(bad)}
    return CheckResult(name, margin > 0.0, margin, witness)


def check_source_structure(sys: RelaxationSystem, samples: SampleSet) -> CheckResult:
    """Sampled form of the smoothness and lower-order-source hypotheses.

    Verifies that the transport coefficient fields are finite on the sampled
    points, that the stiff source vanishes at zero non-conserved state, that
    the scaled conserved source vanishes there for several epsilon probes,
    and that sampled difference quotients of the order-one sources stay
    bounded over the box.
    """
    if sys.multiplier is None:
        for jd in range(samples.directions.shape[1]):
            xi = samples.directions[:, jd]
            for blocks in (sys.m12, sys.m21, sys.m22, sys.m11):
                if blocks is None:
                    continue
                vals = sys.contract(blocks, samples.x_points, xi)
                if not np.all(np.isfinite(vals)):
                    ix = int(np.argmax(~np.isfinite(vals).all(axis=(0, 1))))
                    return CheckResult(
                        "source_structure", False, -np.inf,
                        {"x": samples.x_points[:, ix], "xi": xi,
                         "value": "non-finite transport coefficient"},
                    )
    worst = 0.0
    witness = {}
    xs = samples.x_points
    us = samples.u_points
    mu = us.shape[1]
    zeros = np.zeros((sys.m, mu))
    for ix in range(xs.shape[1]):
        x = np.repeat(as_point(xs[:, ix]), mu, axis=1)
        qv = sys.stiff_source(x, us, zeros)
        val = float(np.max(np.abs(qv)))
        if val > worst:
            worst = val
            iu = int(np.argmax(np.max(np.abs(qv), axis=0)))
            witness = {"x": xs[:, ix], "u": us[:, iu], "value": val}
        for eps in (0.1, 0.01):
            dv = sys.lower_order_I(x, us, zeros, eps)
            val = float(np.max(np.abs(dv)))
            if val > worst:
                worst = val
                iu = int(np.argmax(np.max(np.abs(dv), axis=0)))
                witness = {"x": xs[:, ix], "u": us[:, iu], "value": val, "eps": eps}
    scale = 1.0
    quotients_ok = True
    step = 1e-5
    u0 = samples.u_points[:, :1]
    z0 = np.zeros((sys.m, 1))
    for comp in range(sys.m):
        dz = np.zeros((sys.m, 1))
        dz[comp] = step
        quot = (sys.lower_order_II(u0, z0 + dz) - sys.lower_order_II(u0, z0 - dz)) / (2 * step)
        if not np.all(np.isfinite(quot)):
            quotients_ok = False
            witness = {"u": u0[:, 0], "value": "non-finite difference quotient"}
    passed = worst <= ZERO_TOL * max(scale, 1.0) and quotients_ok
    return CheckResult("source_structure", passed, ZERO_TOL - worst, witness)


def validate_all(
    sys: RelaxationSystem,
    samples: SampleSet,
    target: Optional[ParabolicTarget] = None,
    symmetrizer: Optional[Symmetrizer] = None,
) -> ValidationReport:
    """Run every applicable check and aggregate into one report."""
    r = symmetrizer or Symmetrizer.identity(sys.k, sys.m)
    entries = [
        check_hyperbolicity(sys, samples),
        check_conserved_block(sys, samples),
        check_rank_condition(sys, samples),
        check_dissipativity(sys, samples),
        check_symmetrizer(sys, r, samples),
        check_petrowski(sys, samples, mode="petrowski"),
        check_source_structure(sys, samples),
    ]
    if target is not None:
        entries.append(check_petrowski(target, samples, mode="strong"))
    return ValidationReport(entries=tuple(entries), header=REPORT_HEADER)


__all__ = [
    "SampleSet",
    "check_hyperbolicity",
    "check_conserved_block",
    "check_rank_condition",
    "check_dissipativity",
    "check_symmetrizer",
    "check_petrowski",
    "check_source_structure",
    "validate_all",
    "NULL_LIMIT_NOTE",
]
