"""Reference solutions of the limit parabolic systems.

These integrators are deliberately a different discretization family from
the stiff hyperbolic solver (exact Fourier propagation for constant
coefficients, implicit central differences otherwise), so that agreement
between the two is evidence of the analytic limit rather than shared bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .builder import ParabolicTarget, QuasilinearDivergence, ReactionDiffusion
from .core import Array, SpatialGrid

PICARD_TOL = 1e-11
PICARD_MAXITER = 50


class ReferenceError(RuntimeError):
    pass


def reference_csv(grid: SpatialGrid, u: Array) -> str:
    """One reference snapshot in the export schema x[,y],u_1..u_k."""
    k = u.shape[0]
    cols = ["x", "y"][: grid.d] + [f"u_{i + 1}" for i in range(k)]
    data = np.vstack([grid.flat_points(), u.reshape(k, -1)])
    lines = [",".join(cols)]
    for col in range(data.shape[1]):
        lines.append(",".join(f"{v:.17g}" for v in data[:, col]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sparse difference operators


def _axis_d1(n: int, h: float) -> sp.csr_matrix:
    rows = np.arange(n)
    data = np.concatenate([np.full(n, 1.0 / (2 * h)), np.full(n, -1.0 / (2 * h))])
    cols = np.concatenate([(rows + 1) % n, (rows - 1) % n])
    return sp.coo_matrix((data, (np.tile(rows, 2), cols)), shape=(n, n)).tocsr()


def _axis_dplus(n: int, h: float) -> sp.csr_matrix:
    rows = np.arange(n)
    data = np.concatenate([np.full(n, 1.0 / h), np.full(n, -1.0 / h)])
    cols = np.concatenate([(rows + 1) % n, rows])
    return sp.coo_matrix((data, (np.tile(rows, 2), cols)), shape=(n, n)).tocsr()


def _expand(grid: SpatialGrid, axis: int, op: sp.spmatrix) -> sp.csr_matrix:
    mats = [sp.identity(n, format="csr") for n in grid.ns]
    mats[axis] = op.tocsr()
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def _grid_d1(grid: SpatialGrid, axis: int) -> sp.csr_matrix:
    return _expand(grid, axis, _axis_d1(grid.ns[axis], grid.h[axis]))


def _grid_dplus(grid: SpatialGrid, axis: int) -> sp.csr_matrix:
    return _expand(grid, axis, _axis_dplus(grid.ns[axis], grid.h[axis]))


def _face_average(vals: Array, grid: SpatialGrid, axis: int) -> Array:
    v = vals.reshape(grid.ns)
    return (0.5 * (v + np.roll(v, -1, axis=axis))).reshape(-1)


# ---------------------------------------------------------------------------
# time-stepping drivers


def _plan_times(T: float, snapshot_times: Optional[Sequence[float]]) -> List[float]:
    times = {float(T)}
    if snapshot_times is not None:
        for t in np.asarray(snapshot_times, dtype=float).ravel():
            if 0.0 < t <= T * (1 + 1e-12):
                times.add(float(min(t, T)))
    return sorted(times)


def run_reference(
    target: ParabolicTarget,
    u0: Array,
    grid: SpatialGrid,
    T: float,
    dt: Optional[float] = None,
    snapshot_times: Optional[Sequence[float]] = None,
) -> Tuple[Array, Array]:
    """Integrate the parabolic target to time T.

    Returns (times, fields) where fields[s] is the solution at times[s]; the
    initial state is always the first entry.  Parabolicity of the target is
    the caller's responsibility to have verified.
    """
    u0 = np.asarray(u0, dtype=float)
    if dt is None:
        dt = T / 1000.0 if T > 0 else 1.0
    if isinstance(target, ReactionDiffusion):
        stepper = (_SpectralRD(target, grid) if not callable(target.diffusion)
                   else _ImplicitRD(target, grid))
    elif isinstance(target, QuasilinearDivergence):
        stepper = _PicardQL(target, grid)
    else:
        raise TypeError(f"unsupported target {type(target)!r}")

    times = [0.0]
    fields = [u0.copy()]
    u = u0.copy()
    t = 0.0
    for t_next in _plan_times(T, snapshot_times):
        span = t_next - t
        if span <= 0:
            continue
        nsub = max(1, int(np.ceil(span / dt - 1e-12)))
        dti = span / nsub
        for _ in range(nsub):
            u = stepper.step(u, dti)
        t = t_next
        times.append(t)
        fields.append(u.copy())
    return np.array(times), np.stack(fields)


class _SpectralRD:
    """Exact Fourier propagation of the diffusion, explicit reaction."""

    def __init__(self, target: ReactionDiffusion, grid: SpatialGrid):
        self.target = target
        self.grid = grid
        kappa = grid.wavenumbers()
        a = np.asarray(target.diffusion, dtype=float)
        self.gen = -np.einsum("j...,l...,jlab->...ab", kappa, kappa, a)  # (*ns, k, k)
        self.k = target.k
        self._cache: Dict[float, Array] = {}

    def _prop(self, dt: float) -> Array:
        cached = self._cache.get(dt)
        if cached is not None:
            return cached
        if self.k == 1:
            prop = np.exp(dt * self.gen[..., 0, 0])[..., None, None].astype(complex)
        else:
            sym_defect = np.max(np.abs(self.gen - np.swapaxes(self.gen, -1, -2)))
            if sym_defect <= 1e-12 * max(1.0, np.max(np.abs(self.gen))):
                vals, vecs = np.linalg.eigh(self.gen)
                prop = ((vecs * np.exp(dt * vals)[..., None, :])
                        @ np.swapaxes(vecs, -1, -2)).astype(complex)
            else:
                vals, vecs = np.linalg.eig(self.gen)
                prop = (vecs * np.exp(dt * vals)[..., None, :]) @ np.linalg.inv(vecs)
        self._cache[dt] = prop
        return prop

    def step(self, u: Array, dt: float) -> Array:
        spax = tuple(range(1, 1 + self.grid.d))
        if self.target.f is not None:
            u = u + dt * self.target.f(u.reshape(self.k, -1)).reshape(u.shape)
        uhat = np.moveaxis(np.fft.fftn(u, axes=spax), 0, -1)[..., None]
        out = (self._prop(dt) @ uhat)[..., 0]
        return np.fft.ifftn(np.moveaxis(out, -1, 0), axes=spax).real


class _ImplicitRD:
    """Backward Euler with second-order central differences, explicit reaction."""

    def __init__(self, target: ReactionDiffusion, grid: SpatialGrid):
        self.target = target
        self.grid = grid
        self.k = target.k
        xs = grid.flat_points()
        blocks = target.diffusion_at(xs)  # (d, d, k, k, M)
        mcells = xs.shape[1]
        ops = {}
        for j in range(grid.d):
            for l in range(grid.d):
                if j == l:
                    dp = _grid_dplus(grid, j)
                    ops[j, l] = (-dp.T @ dp).tocsr()  # 3-point second difference
                else:
                    ops[j, l] = (_grid_d1(grid, j) @ _grid_d1(grid, l)).tocsr()
        rows = []
        for a in range(self.k):
            row = []
            for b in range(self.k):
                block = sp.csr_matrix((mcells, mcells))
                for j in range(grid.d):
                    for l in range(grid.d):
                        coeff = blocks[j, l, a, b]
                        if np.any(coeff):
                            block = block + sp.diags(coeff) @ ops[j, l]
                row.append(block)
            rows.append(row)
        self.lap = sp.bmat(rows, format="csc")
        self._lu_cache: Dict[float, object] = {}

    def _lu(self, dt: float):
        cached = self._lu_cache.get(dt)
        if cached is None:
            n = self.lap.shape[0]
            cached = splu((sp.identity(n, format="csc") - dt * self.lap).tocsc())
            self._lu_cache[dt] = cached
        return cached

    def step(self, u: Array, dt: float) -> Array:
        shape = u.shape
        rhs = u.reshape(-1)
        if self.target.f is not None:
            rhs = rhs + dt * self.target.f(u.reshape(self.k, -1)).reshape(-1)
        try:
            out = self._lu(dt).solve(rhs)
        except RuntimeError as err:
            raise ReferenceError(f"linear solve failed: {err}") from err
        return out.reshape(shape)


class _PicardQL:
    """Divergence-form diffusion with lagged coefficients, explicit advection."""

    def __init__(self, target: QuasilinearDivergence, grid: SpatialGrid):
        self.target = target
        self.grid = grid
        self.k = target.k
        self.d1 = [_grid_d1(grid, j) for j in range(grid.d)]
        self.dplus = [_grid_dplus(grid, j) for j in range(grid.d)]
        self.eye = sp.identity(self.k * grid.cell_count, format="csc")

    def _diffusion_matrix(self, u: Array) -> sp.csc_matrix:
        """Assemble sum_ij d_i(B_ij(u) d_j .) at the lagged state."""
        grid, k = self.grid, self.k
        blocks = np.asarray(self.target.diffusion(u.reshape(k, -1)), dtype=float)
        rows = []
        for a in range(k):
            row = []
            for b in range(k):
                mat = sp.csr_matrix((grid.cell_count, grid.cell_count))
                for i in range(grid.d):
                    for j in range(grid.d):
                        coeff = blocks[i, j, a, b]
                        if not np.any(coeff):
                            continue
                        if i == j:
                            face = _face_average(coeff, grid, i)
                            mat = mat - self.dplus[i].T @ sp.diags(face) @ self.dplus[i]
                        else:
                            mat = mat + self.d1[i] @ sp.diags(coeff) @ self.d1[j]
                row.append(mat)
            rows.append(row)
        return sp.bmat(rows, format="csc")

    def step(self, u: Array, dt: float) -> Array:
        grid, k = self.grid, self.k
        shape = u.shape
        uflat2 = u.reshape(k, -1)
        rhs = u.reshape(-1).copy()
        if self.target.flux is not None:
            fl = np.asarray(self.target.flux(uflat2), dtype=float)  # (d, k, M)
            div = np.zeros(k * grid.cell_count)
            for i in range(grid.d):
                for a in range(k):
                    div[a * grid.cell_count:(a + 1) * grid.cell_count] += self.d1[i] @ fl[i, a]
            rhs -= dt * div
        if self.target.g is not None:
            rhs += dt * np.asarray(self.target.g(uflat2), dtype=float).reshape(-1)

        guess = u.reshape(-1)
        for _ in range(PICARD_MAXITER):
            lmat = self._diffusion_matrix(guess.reshape(shape))
            new = splu((self.eye - dt * lmat).tocsc()).solve(rhs)
            if float(np.max(np.abs(new - guess))) <= PICARD_TOL:
                return new.reshape(shape)
            guess = new
        raise ReferenceError(
            f"lagged-coefficient iteration did not reach {PICARD_TOL:g} "
            f"in {PICARD_MAXITER} sweeps"
        )


# ---------------------------------------------------------------------------
# exact single-mode oracle for constant coefficients


@dataclass(frozen=True)
class ModeOracle:
    """Exact solution data of one Fourier mode of the relaxation pair.

    The pair obeys u' = -i r v, eps^2 v' = -i r u - v with r = sqrt(s) and
    s the contracted diffusion symbol; its characteristic equation is
    eps^2 lambda^2 + lambda + s = 0.  For complex root pairs the 'slow' and
    'fast' labels refer to the same decay rate.
    """

    s: float
    eps: float
    lambda_slow: complex
    lambda_fast: complex

    def evolve(self, u0: complex, v0: complex, t: float) -> Tuple[complex, complex]:
        """Exact mode amplitudes at time t from amplitudes (u0, v0) at 0."""
        r = np.sqrt(self.s)
        lam1, lam2 = self.lambda_slow, self.lambda_fast
        du0 = -1j * r * v0
        if abs(lam1 - lam2) < 1e-13 * max(1.0, abs(lam1)):
            # defective (critically damped) corner case
            c1 = u0
            c2 = du0 - lam1 * u0
            ut = (c1 + c2 * t) * np.exp(lam1 * t)
            dut = (c2 + lam1 * (c1 + c2 * t)) * np.exp(lam1 * t)
        else:
            c1 = (du0 - lam2 * u0) / (lam1 - lam2)
            c2 = u0 - c1
            ut = c1 * np.exp(lam1 * t) + c2 * np.exp(lam2 * t)
            dut = c1 * lam1 * np.exp(lam1 * t) + c2 * lam2 * np.exp(lam2 * t)
        vt = dut / (-1j * r) if r != 0 else v0 * np.exp(-t / self.eps ** 2)
        return complex(ut), complex(vt)


def _contracted_symbol(diffusion, kvec) -> float:
    kvec = np.atleast_1d(np.asarray(kvec, dtype=float))
    a = np.asarray(diffusion, dtype=float)
    if a.ndim == 0:
        if kvec.size != 1:
            raise ValueError("scalar diffusion needs a one-dimensional wave vector")
        return float(a * kvec[0] ** 2)
    if a.ndim == 2 and a.shape == (kvec.size, kvec.size):
        return float(kvec @ a @ kvec)
    if a.ndim == 4 and a.shape[2:] == (1, 1):
        return float(np.einsum("j,l,jl->", kvec, kvec, a[:, :, 0, 0]))
    raise ValueError(f"cannot contract diffusion data of shape {a.shape}")


def exact_mode_oracle(diffusion, kvec, t: float, eps: Optional[float] = None):
    """Ground truth for one Fourier mode of a scalar constant-coefficient system.

    Without eps, returns the parabolic amplitude factor exp(-s t) where s is
    the contracted diffusion symbol.  With eps, returns a ModeOracle holding
    both roots of eps^2 lambda^2 + lambda + s = 0 and the exact evolution of
    the relaxation pair.
    """
    s = _contracted_symbol(diffusion, kvec)
    if eps is None:
        return float(np.exp(-s * t))
    disc = complex(1.0 - 4.0 * eps ** 2 * s)
    root = np.sqrt(disc)
    lam_slow = (-1.0 + root) / (2.0 * eps ** 2)
    lam_fast = (-1.0 - root) / (2.0 * eps ** 2)
    return ModeOracle(s=s, eps=eps, lambda_slow=complex(lam_slow), lambda_fast=complex(lam_fast))


__all__ = [
    "ReferenceError",
    "reference_csv",
    "run_reference",
    "ModeOracle",
    "exact_mode_oracle",
    "PICARD_TOL",
    "PICARD_MAXITER",
]
