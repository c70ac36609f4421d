"""Stiff time integration of the scaled relaxation system on periodic grids.

One step is a Lie splitting: an explicit transport update whose numerical
dissipation travels at the stiff characteristic speed, followed by a
pointwise implicit solve of the relaxation source, unconditionally stable in
the relaxation parameter.  Transport can be done with a Rusanov flux, a
characteristic upwind flux (constant coefficients), or exactly in Fourier
space (constant coefficients and multiplier systems).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    Array,
    FieldState,
    RelaxationSystem,
    SpatialGrid,
    eval_matrix_field,
    principal_symbol,
)

FLUXES = ("rusanov", "upwind-characteristic", "spectral")
SOURCE_SOLVES = ("linear-exact", "newton")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the stiff integrator; defaults suit the desk-scale demos."""

    cfl: float = 0.45
    flux: str = "rusanov"
    source_solve: str = "linear-exact"
    newton_tol: float = 1e-12
    newton_maxiter: int = 25
    snapshot_stride: int = 0
    positivity_floor: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.flux not in FLUXES:
            raise ValueError(f"flux must be one of {FLUXES}")
        if self.source_solve not in SOURCE_SOLVES:
            raise ValueError(f"source_solve must be one of {SOURCE_SOLVES}")
        if self.newton_tol <= 0:
            raise ValueError("newton tolerance must be positive")


@dataclass(frozen=True)
class StepRecord:
    t: float
    dt: float
    energy: float
    max_speed: float
    uII_norm2: float


@dataclass
class Trajectory:
    """Snapshots plus per-step scalar records of one integration."""

    snapshots: List[FieldState]
    records: List[StepRecord]
    sup_uI: float
    sup_eps_uII: float
    clamp_events: int = 0

    @property
    def final(self) -> FieldState:
        return self.snapshots[-1]

    @property
    def times(self) -> Array:
        return np.array([s.t for s in self.snapshots])

    def steps_csv(self) -> str:
        lines = ["t,dt,energy,max_speed"]
        for r in self.records:
            lines.append(f"{r.t:.17g},{r.dt:.17g},{r.energy:.17g},{r.max_speed:.17g}")
        return "\n".join(lines) + "\n"


def snapshot_csv(state: FieldState) -> str:
    """One snapshot in the export schema x[,y],uI_*,uII_*."""
    grid = state.grid
    cols = ["x", "y"][: grid.d]
    cols += [f"uI_{i + 1}" for i in range(state.k)]
    cols += [f"uII_{i + 1}" for i in range(state.m)]
    pts = grid.flat_points()
    data = np.vstack([pts, state.uI.reshape(state.k, -1), state.uII.reshape(state.m, -1)])
    lines = [",".join(cols)]
    for col in range(data.shape[1]):
        lines.append(",".join(f"{v:.17g}" for v in data[:, col]))
    return "\n".join(lines) + "\n"


def _unit_directions(d: int, count_2d: int = 64) -> Array:
    if d == 1:
        return np.array([[1.0, -1.0]])
    theta = 2.0 * np.pi * np.arange(count_2d) / count_2d
    return np.stack([np.cos(theta), np.sin(theta)])


def max_wave_speed(sys: RelaxationSystem, grid: SpatialGrid) -> float:
    """Largest spectral radius of i * principal symbol over points and directions.

    Characteristic speeds of the scaled system are this value divided by the
    relaxation parameter; multiplier systems are integrated exactly per mode,
    so for them the value only enters step-size selection, not stability.
    """
    dirs = _unit_directions(grid.d)
    pts = grid.flat_points()
    xs = pts[:, :: max(1, pts.shape[1] // 32)]
    speed = 0.0
    for ix in range(xs.shape[1]):
        for jd in range(dirs.shape[1]):
            eigs = np.linalg.eigvals(1j * principal_symbol(sys, xs[:, ix], dirs[:, jd]))
            speed = max(speed, float(np.max(np.abs(eigs))))
    return speed


def _energy(uI: Array, uII: Array, eps: float, vol: float) -> Tuple[float, float]:
    nII2 = float(np.sum(uII ** 2) * vol)
    return float(np.sum(uI ** 2) * vol + eps ** 2 * nII2), nII2


class _Workspace:
    """Tabulated coefficients and cached propagators for one (system, grid, eps)."""

    def __init__(self, sys: RelaxationSystem, grid: SpatialGrid,
                 eps: float, opts: SolverOptions):
        self.sys = sys
        self.grid = grid
        self.eps = eps
        self.opts = opts
        self.n, self.k, self.m = sys.n, sys.k, sys.m
        self.xflat = grid.flat_points()
        self.speed = max_wave_speed(sys, grid)
        self.clamp_events = 0

        if sys.multiplier is not None and opts.flux != "spectral":
            raise SolverError("multiplier transport requires the spectral flux")
        if opts.flux == "spectral" and sys.multiplier is None and not sys.constant_coefficients:
            raise SolverError("spectral transport requires constant coefficients")
        if opts.flux == "upwind-characteristic" and not sys.constant_coefficients:
            raise SolverError("characteristic upwind requires constant coefficients")

        if opts.flux in ("rusanov", "upwind-characteristic"):
            self._build_grid_transport()
        else:
            self._build_spectral_transport()

    # -- step size -----------------------------------------------------------

    def max_dt(self) -> float:
        cfl = self.opts.cfl * (0.5 if self.grid.d == 2 else 1.0)
        s = max(self.speed, 1e-300)
        return cfl * self.eps * min(self.grid.h) / s

    # -- transport tabulation --------------------------------------------------

    def _scaled_block(self, j: int) -> Array:
        """Transport matrix of the scaled system along axis j, (N, N, M)."""
        sys, eps = self.sys, self.eps
        mcells = self.xflat.shape[1]
        out = np.zeros((self.n, self.n, mcells))
        k = self.k
        out[:k, k:] = eval_matrix_field(sys.m12[j], self.xflat)
        out[k:, :k] = eval_matrix_field(sys.m21[j], self.xflat) / eps ** 2
        if sys.m22 is not None:
            out[k:, k:] = eval_matrix_field(sys.m22[j], self.xflat) / eps
        if sys.m11 is not None:
            out[:k, :k] = eval_matrix_field(sys.m11[j], self.xflat) / eps
        return out

    def _build_grid_transport(self):
        grid = self.grid
        self.cmat = []   # (N, N, *ns) per axis
        self.alpha = []  # scalar dissipation speed per axis
        self.absc = []   # |C| per axis for the characteristic flux
        eye = np.eye(self.n)
        for j in range(grid.d):
            cm = self._scaled_block(j).reshape(self.n, self.n, *grid.ns)
            self.cmat.append(cm)
            flat = np.moveaxis(cm.reshape(self.n, self.n, -1), -1, 0)
            radius = float(np.max(np.abs(np.linalg.eigvals(flat))))
            self.alpha.append(radius)
            if self.opts.flux == "upwind-characteristic":
                c0 = flat[0]
                vals, vecs = np.linalg.eig(c0)
                if np.max(np.abs(vals.imag)) > 1e-9 * max(1.0, np.max(np.abs(vals))):
                    raise SolverError("characteristic upwind needs real characteristic speeds")
                try:
                    absc = (vecs * np.abs(vals.real)) @ np.linalg.inv(vecs)
                except np.linalg.LinAlgError as err:
                    raise SolverError("transport matrix is not diagonalizable") from err
                self.absc.append(absc.real)
            else:
                self.absc.append(radius * eye)

    def _transport_grid(self, y: Array, dt: float) -> Array:
        grid = self.grid
        out = y.copy()
        for j in range(grid.d):
            ax = 1 + j
            h = grid.h[j]
            up = np.roll(y, -1, axis=ax)
            dn = np.roll(y, +1, axis=ax)
            adv = np.einsum("ab...,b...->a...", self.cmat[j], (up - dn) / (2.0 * h))
            diss = np.einsum("ab,b...->a...", self.absc[j], (up - 2.0 * y + dn) / (2.0 * h))
            out += dt * (diss - adv)
        return out

    # -- spectral transport ----------------------------------------------------

    def _build_spectral_transport(self):
        grid, sys = self.grid, self.sys
        self._prop_cache: Dict[float, Array] = {}
        if sys.multiplier is not None:
            return
        kappa = grid.wavenumbers()  # (d, *ns)
        hmat = np.zeros(grid.ns + (self.n, self.n))
        k = self.k
        for j in range(grid.d):
            blk = np.zeros((self.n, self.n))
            blk[:k, k:] = np.asarray(sys.m12[j], dtype=float)
            blk[k:, :k] = np.asarray(sys.m21[j], dtype=float)
            if sys.m22 is not None:
                blk[k:, k:] = np.asarray(sys.m22[j], dtype=float)
            if sys.m11 is not None:
                blk[:k, :k] = np.asarray(sys.m11[j], dtype=float)
            hmat += kappa[j][..., None, None] * blk
        sym_defect = np.max(np.abs(hmat - np.swapaxes(hmat, -1, -2)))
        if sym_defect <= 1e-12 * max(1.0, np.max(np.abs(hmat))):
            vals, vecs = np.linalg.eigh(hmat)
            self._eigvals = vals.astype(complex)
            self._eigvecs = vecs.astype(complex)
            self._eigvecs_inv = np.swapaxes(vecs, -1, -2).astype(complex)
        else:
            vals, vecs = np.linalg.eig(hmat)
            self._eigvals = vals
            self._eigvecs = vecs
            self._eigvecs_inv = np.linalg.inv(vecs)

    def _propagator(self, dt: float) -> Array:
        """exp(dt * transport generator) per mode, shape (*ns, N, N) complex."""
        cached = self._prop_cache.get(dt)
        if cached is not None:
            return cached
        sys, eps = self.sys, self.eps
        if sys.multiplier is not None:
            mult = sys.multiplier
            tau = dt / eps
            cosd = np.cos(tau * mult.sqrt_eigs)
            sind = np.sin(tau * mult.sqrt_eigs)
            vt = np.swapaxes(mult.eigvecs, -1, -2)
            cosb = (mult.eigvecs * cosd[..., None, :]) @ vt
            sinb = (mult.eigvecs * sind[..., None, :]) @ vt
            k = self.k
            prop = np.zeros(self.grid.ns + (self.n, self.n), dtype=complex)
            prop[..., :k, k:] = -eps * sinb
            prop[..., k:, :k] = sinb / eps
            prop[..., :k, :k] = cosb
            prop[..., k:, k:] = cosb
        else:
            phase = np.exp(-1j * (dt / eps) * self._eigvals)
            core = (self._eigvecs * phase[..., None, :]) @ self._eigvecs_inv
            scale = np.ones(self.n)
            scale[self.k:] = eps
            prop = core * (scale[None, :] / scale[:, None])
        self._prop_cache[dt] = prop
        return prop

    def _transport_spectral(self, y: Array, dt: float) -> Array:
        spax = tuple(range(1, 1 + self.grid.d))
        yhat = np.fft.fftn(y, axes=spax)
        moved = np.moveaxis(yhat, 0, -1)[..., None]
        out = (self._propagator(dt) @ moved)[..., 0]
        return np.fft.ifftn(np.moveaxis(out, -1, 0), axes=spax).real

    # -- source ---------------------------------------------------------------

    def _source(self, uI: Array, uII: Array, dt: float) -> Tuple[Array, Array]:
        sys, eps = self.sys, self.eps
        uflat = uI.reshape(self.k, -1)
        vflat = uII.reshape(self.m, -1)
        mcells = uflat.shape[1]

        du = sys.lower_order_I(self.xflat, uflat, vflat, eps) + sys.reaction_term(uflat)
        unew = uflat + dt * du

        d2 = sys.lower_order_II(unew, eps * vflat)
        rhs = eps ** 2 * vflat + dt * d2

        if self.opts.source_solve == "linear-exact":
            cmat = sys.stiff_source_jacobian(self.xflat, unew, np.zeros_like(vflat))
            if cmat.ndim == 2:
                cmat = np.broadcast_to(cmat[:, :, None], (self.m, self.m, mcells))
            lhs = eps ** 2 * np.eye(self.m)[:, :, None] - dt * cmat
            vnew = np.linalg.solve(np.moveaxis(lhs, -1, 0), np.moveaxis(rhs, -1, 0)[..., None])
            vnew = np.moveaxis(vnew[..., 0], 0, -1)
        else:
            vnew = self._newton_source(unew, vflat, rhs, dt)

        return unew.reshape(uI.shape), vnew.reshape(uII.shape)

    def _newton_source(self, u: Array, v0: Array, rhs: Array, dt: float) -> Array:
        sys, eps = self.sys, self.eps
        v = v0.copy()
        eye = np.eye(self.m)[:, :, None]
        for _ in range(self.opts.newton_maxiter):
            res = eps ** 2 * v - (dt / eps) * sys.stiff_source(self.xflat, u, eps * v) - rhs
            jac = sys.stiff_source_jacobian(self.xflat, u, eps * v)
            if jac.ndim == 2:
                jac = np.broadcast_to(jac[:, :, None], (self.m, self.m, v.shape[-1]))
            lhs = eps ** 2 * eye - dt * jac
            delta = np.linalg.solve(np.moveaxis(lhs, -1, 0), np.moveaxis(res, -1, 0)[..., None])
            delta = np.moveaxis(delta[..., 0], 0, -1)
            v = v - delta
            if float(np.max(np.abs(delta))) <= self.opts.newton_tol * (1.0 + float(np.max(np.abs(v)))):
                return v
        worst = int(np.argmax(np.max(np.abs(delta), axis=0)))
        raise SolverError(
            f"newton source solve failed to converge at cell {worst} "
            f"(last update {np.max(np.abs(delta)):.3e})"
        )

    # -- one full step ----------------------------------------------------------

    def step(self, uI: Array, uII: Array, dt: float) -> Tuple[Array, Array]:
        if self.opts.flux != "spectral":
            if dt > self.max_dt() * (1.0 + 1e-9):
                raise SolverError(
                    f"time step {dt:.3e} violates the transport stability bound {self.max_dt():.3e}"
                )
            y = np.concatenate([uI, uII], axis=0)
            y = self._transport_grid(y, dt)
        else:
            y = np.concatenate([uI, uII], axis=0)
            y = self._transport_spectral(y, dt)
        uI_star, uII_star = y[: self.k], y[self.k:]
        uI_new, uII_new = self._source(uI_star, uII_star, dt)
        if self.opts.positivity_floor is not None:
            below = uI_new < self.opts.positivity_floor
            if np.any(below):
                self.clamp_events += int(np.sum(below))
                uI_new = np.maximum(uI_new, self.opts.positivity_floor)
        return uI_new, uII_new


def step(sys: RelaxationSystem, state: FieldState, dt: float,
         opts: Optional[SolverOptions] = None) -> FieldState:
    """Advance one state by a single splitting step (standalone convenience)."""
    opts = opts or SolverOptions()
    ws = _Workspace(sys, state.grid, state.eps, opts)
    uI, uII = ws.step(state.uI, state.uII, dt)
    return state.with_fields(uI, uII, t=state.t + dt)


def run(
    sys: RelaxationSystem,
    init: FieldState,
    T: float,
    opts: Optional[SolverOptions] = None,
    snapshot_times: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate to time T with the stability-bound step size.

    Callers are expected to have validated the system (or to be deliberately
    running a structure-violating fixture).  Snapshots are taken at the given
    times, landed on exactly, or every snapshot_stride steps; the initial and
    final states are always included.
    """
    opts = opts or SolverOptions()
    if T < 0:
        raise ValueError("cannot integrate to negative time")
    grid = init.grid
    ws = _Workspace(sys, grid, init.eps, opts)
    vol = grid.cell_volume
    eps = init.eps
    speed_scaled = ws.speed / eps

    wanted = [] if snapshot_times is None else np.asarray(snapshot_times, dtype=float).ravel()
    pending = sorted(float(t) for t in wanted if 0.0 < t <= T * (1 + 1e-12))
    uI, uII = init.uI.copy(), init.uII.copy()
    t = 0.0
    snapshots = [FieldState(grid, uI.copy(), uII.copy(), t, eps)]
    records: List[StepRecord] = []
    e0, nII2 = _energy(uI, uII, eps, vol)
    sup_uI = float(np.sqrt(np.sum(uI ** 2) * vol))
    sup_eps_uII = eps * float(np.sqrt(nII2))

    dt_max = ws.max_dt()
    nsteps = 0
    tiny = 1e-12 * max(T, 1.0)
    while t < T - tiny:
        dt = min(dt_max, T - t)
        if pending and pending[0] - t > tiny:
            dt = min(dt, pending[0] - t)
        energy, nII2 = _energy(uI, uII, eps, vol)
        records.append(StepRecord(t, dt, energy, speed_scaled, nII2))
        uI, uII = ws.step(uI, uII, dt)
        if not (np.all(np.isfinite(uI)) and np.all(np.isfinite(uII))):
            flat = np.abs(np.concatenate([uI.reshape(sys.k, -1), uII.reshape(sys.m, -1)]))
            cell = int(np.argmax(~np.isfinite(flat).all(axis=0)))
            raise SolverError(f"state became non-finite at t={t + dt:.6g}, cell {cell}")
        t += dt
        nsteps += 1
        sup_uI = max(sup_uI, float(np.sqrt(np.sum(uI ** 2) * vol)))
        sup_eps_uII = max(sup_eps_uII, eps * float(np.sqrt(np.sum(uII ** 2) * vol)))
        landed = bool(pending) and abs(t - pending[0]) <= tiny
        if landed:
            pending.pop(0)
        strided = opts.snapshot_stride > 0 and nsteps % opts.snapshot_stride == 0
        if landed or strided:
            snapshots.append(FieldState(grid, uI.copy(), uII.copy(), t, eps))

    if not snapshots or abs(snapshots[-1].t - t) > tiny:
        snapshots.append(FieldState(grid, uI.copy(), uII.copy(), t, eps))
    energy, nII2 = _energy(uI, uII, eps, vol)
    records.append(StepRecord(t, 0.0, energy, speed_scaled, nII2))
    return Trajectory(
        snapshots=snapshots, records=records,
        sup_uI=sup_uI, sup_eps_uII=sup_eps_uII,
        clamp_events=ws.clamp_events,
    )


def well_prepared_state(
    sys: RelaxationSystem, grid: SpatialGrid, uI: Array, eps: float
) -> FieldState:
    """Initial data on the local-equilibrium manifold (no initial layer)."""
    from .core import equilibrium_uII

    uII = equilibrium_uII(sys, grid, uI)
    return FieldState(grid, np.asarray(uI, dtype=float), uII, 0.0, eps)


__all__ = [
    "SolverError",
    "SolverOptions",
    "StepRecord",
    "Trajectory",
    "snapshot_csv",
    "max_wave_speed",
    "step",
    "run",
    "well_prepared_state",
]
