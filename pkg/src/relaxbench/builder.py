"""Constructions of relaxation systems from parabolic targets, plus fixtures.

Three routes are provided: reaction-diffusion data with a symmetric positive
definite block matrix, quasilinear divergence-form data with an invertible
diffusion matrix on a state box, and the constant-coefficient square-root
multiplier route.  A separate entry point decouples a raw hyperbolic system
into conserved and non-conserved blocks via a user-supplied transform.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    Array,
    MatrixField,
    RelaxationSystem,
    SpatialGrid,
    SpectralMultiplier,
    Symmetrizer,
    as_point,
    eval_matrix_field,
)


class BuildError(ValueError):
    """Raised when a construction's hypotheses fail on the sampled data."""


# ---------------------------------------------------------------------------
# parabolic targets


@dataclass(frozen=True)
class ReactionDiffusion:
    """Target system du/dt = sum_jk A_jk(x) d_j d_k u + f(u).

    diffusion is a constant array of shape (d, d, k, k) or a vectorized
    callable x (d, M) -> (d, d, k, k, M); f maps u (k, M) -> (k, M).
    """

    k: int
    d: int
    diffusion: Union[Array, Callable[[Array], Array]]
    f: Optional[Callable[[Array], Array]] = None
    name: str = ""

    def diffusion_at(self, x: Array) -> Array:
        """Blocks at points x (d, M); returns (d, d, k, k, M)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if callable(self.diffusion):
            return np.asarray(self.diffusion(x), dtype=float)
        a = np.asarray(self.diffusion, dtype=float)
        return np.broadcast_to(a[..., None], a.shape + (x.shape[-1],))

    def second_order_symbol(self, x, xi) -> Array:
        """sum_jk A_jk(x) xi_j xi_k, a (k, k) matrix at one point."""
        xi = np.asarray(xi, dtype=float).reshape(-1)
        a = self.diffusion_at(as_point(x))[..., 0]
        return np.einsum("j,k,jkab->ab", xi, xi, a)


def isotropic_diffusion(k: int, d: int, coeff: float = 1.0) -> Array:
    """Diffusion blocks for coeff * Laplacian acting on k components."""
    a = np.zeros((d, d, k, k))
    for j in range(d):
        a[j, j] = coeff * np.eye(k)
    return a


def scalar_diffusion_matrix(mat: Sequence[Sequence[float]]) -> Array:
    """Diffusion blocks for a scalar equation from a d x d coefficient matrix."""
    m = np.asarray(mat, dtype=float)
    return m[:, :, None, None] * np.ones((1, 1, 1, 1))


@dataclass(frozen=True)
class QuasilinearDivergence:
    """Target du/dt + sum_i d_i(F_i(u) - sum_j B_ij(u) d_j u) = G(u).

    diffusion maps u (k, M) -> (d, d, k, k, M); flux maps u -> (d, k, M);
    g maps u -> (k, M).  The state box declares where the hypotheses are
    certified.
    """

    k: int
    d: int
    diffusion: Callable[[Array], Array]
    flux: Optional[Callable[[Array], Array]] = None
    g: Optional[Callable[[Array], Array]] = None
    state_box: Tuple[Tuple[float, ...], Tuple[float, ...]] = ((-1.0,), (1.0,))
    name: str = ""

    def big_b(self, u: Array) -> Array:
        """Full (kd, kd, M) diffusion matrix at states u (k, M)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        blocks = np.asarray(self.diffusion(u), dtype=float)
        k, d = self.k, self.d
        out = np.empty((k * d, k * d, u.shape[-1]))
        for i in range(d):
            for j in range(d):
                out[i * k:(i + 1) * k, j * k:(j + 1) * k] = blocks[i, j]
        return out

    def second_order_symbol(self, u, xi) -> Array:
        xi = np.asarray(xi, dtype=float).reshape(-1)
        up = np.asarray(u, dtype=float).reshape(self.k, 1)
        blocks = np.asarray(self.diffusion(up), dtype=float)[..., 0]
        return np.einsum("i,j,ijab->ab", xi, xi, blocks)


ParabolicTarget = Union[ReactionDiffusion, QuasilinearDivergence]


def scalar_quasilinear(
    b: Callable[[Array], Array],
    flux: Optional[Callable[[Array], Array]] = None,
    g: Optional[Callable[[Array], Array]] = None,
    state_box: Tuple[float, float] = (-1.0, 1.0),
    name: str = "",
) -> QuasilinearDivergence:
    """One-component, one-dimensional quasilinear target from scalar callables."""

    def diffusion(u):
        return np.asarray(b(u[0]), dtype=float).reshape(1, 1, 1, 1, -1)

    flux_fn = None
    if flux is not None:
        flux_fn = lambda u: np.asarray(flux(u[0]), dtype=float).reshape(1, 1, -1)
    g_fn = None
    if g is not None:
        g_fn = lambda u: np.asarray(g(u[0]), dtype=float).reshape(1, -1)
    return QuasilinearDivergence(
        k=1, d=1, diffusion=diffusion, flux=flux_fn, g=g_fn,
        state_box=((state_box[0],), (state_box[1],)), name=name,
    )


# ---------------------------------------------------------------------------
# sampling helpers


def box_lattice(lo: Sequence[float], hi: Sequence[float], per_axis: int = 3, cap: int = 243) -> Array:
    """Deterministic lattice of states in a box, shape (dim, count)."""
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    pts = np.array(list(itertools.product(*axes))).T
    if pts.shape[1] > cap:
        idx = np.linspace(0, pts.shape[1] - 1, cap).astype(int)
        pts = pts[:, idx]
    return pts


def _default_x_samples(d: int) -> Array:
    axes = [np.linspace(0.0, 1.0, 5, endpoint=False)] * d
    return np.array(list(itertools.product(*axes))).T


# ---------------------------------------------------------------------------
# reaction-diffusion construction


def _rd_amat(target: ReactionDiffusion, x: Array) -> Array:
    """Assembled (kd, kd, M) block matrix of the diffusion data."""
    blocks = target.diffusion_at(x)
    k, d = target.k, target.d
    out = np.empty((k * d, k * d, x.shape[-1]))
    for j in range(d):
        for l in range(d):
            out[j * k:(j + 1) * k, l * k:(l + 1) * k] = blocks[j, l]
    return out


def from_reaction_diffusion(
    target: ReactionDiffusion,
    x_samples: Optional[Array] = None,
) -> RelaxationSystem:
    """Relaxation system whose limit is the reaction-diffusion target.

    Requires the full (kd, kd) block matrix of diffusion data to be symmetric
    positive definite at the sampled points; that is stronger than ellipticity
    but makes the stiff source certifiably dissipative and the identity a
    symmetrizer.  Unsound data is rejected with a witness.
    """
    k, d = target.k, target.d
    xs = _default_x_samples(d) if x_samples is None else np.atleast_2d(x_samples)
    amat = _rd_amat(target, xs)
    sym_defect = np.max(np.abs(amat - np.swapaxes(amat, 0, 1)))
    if sym_defect > 1e-10 * max(1.0, np.max(np.abs(amat))):
        raise BuildError(f"diffusion block matrix is not symmetric (defect {sym_defect:.3e})")
    eigs = np.linalg.eigvalsh(np.moveaxis(amat, -1, 0))
    worst = int(np.argmin(eigs[:, 0]))
    if eigs[worst, 0] <= 0:
        raise BuildError(
            f"diffusion block matrix is not positive definite: "
            f"smallest eigenvalue {eigs[worst, 0]:.6g} at x={xs[:, worst]}"
        )

    constant = not callable(target.diffusion)

    def row_field(j):
        if constant:
            a = np.asarray(target.diffusion, dtype=float)
            return np.concatenate([a[j, l] for l in range(d)], axis=1)

        def fn(x, j=j):
            blocks = target.diffusion_at(x)
            return np.concatenate([blocks[j, l] for l in range(d)], axis=1)

        return fn

    def col_field(j):
        if constant:
            return row_field(j).T

        def fn(x, j=j):
            blocks = target.diffusion_at(x)
            return np.concatenate([np.swapaxes(blocks[j, l], 0, 1) for l in range(d)], axis=0)

        return fn

    m12 = tuple(row_field(j) for j in range(d))
    m21 = tuple(col_field(j) for j in range(d))
    m22 = tuple(np.zeros((k * d, k * d)) for _ in range(d))

    if constant:
        a_const = _rd_amat(target, np.zeros((d, 1)))[:, :, 0]

        def q(x, u, z):
            return -a_const @ z

        def q_nu(x, u, z):
            return np.broadcast_to(-a_const[:, :, None], (k * d, k * d, z.shape[-1]))
    else:
        def q(x, u, z):
            return -np.einsum("abm,bm->am", _rd_amat(target, x), z)

        def q_nu(x, u, z):
            return -_rd_amat(target, x)

    return RelaxationSystem(
        k=k, m=k * d, d=d, m12=m12, m21=m21, m22=m22,
        q=q, q_nu=q_nu, reaction=target.f,
        constant_coefficients=constant, source_linear_in_v=True,
        name=target.name or "reaction-diffusion",
    )


# ---------------------------------------------------------------------------
# quasilinear construction


def from_quasilinear(target: QuasilinearDivergence) -> RelaxationSystem:
    """Relaxation system whose limit is the quasilinear divergence target.

    The conserved equation transports the divergence of the stacked flux
    variable through constant selector blocks; all state dependence sits in
    the stiff source -B(u)^{-1} z and the lower-order term B(u)^{-1} F(u).
    """
    k, d = target.k, target.d
    lo, hi = target.state_box
    us = box_lattice(lo, hi, per_axis=5)
    bmat = target.big_b(us)
    conds = np.linalg.cond(np.moveaxis(bmat, -1, 0))
    worst = int(np.argmax(conds))
    if not np.all(np.isfinite(conds)) or conds[worst] > 1e12:
        raise BuildError(
            f"diffusion matrix is numerically singular inside the state box at u={us[:, worst]}"
        )

    def selector(j):
        e = np.zeros((k, k * d))
        e[:, j * k:(j + 1) * k] = np.eye(k)
        return e

    m12 = tuple(selector(j) for j in range(d))
    m21 = tuple(selector(j).T for j in range(d))
    m22 = tuple(np.zeros((k * d, k * d)) for _ in range(d))

    def q(x, u, z):
        big = np.moveaxis(target.big_b(u), -1, 0)
        return -np.moveaxis(np.linalg.solve(big, np.moveaxis(z, -1, 0)[..., None])[..., 0], 0, -1)

    def q_nu(x, u, z):
        big = np.moveaxis(target.big_b(u), -1, 0)
        return -np.moveaxis(np.linalg.inv(big), 0, -1)

    d_II = None
    if target.flux is not None:
        def d_II(u, z):
            fl = np.asarray(target.flux(u), dtype=float)  # (d, k, M)
            stacked = fl.reshape(k * d, -1)
            big = np.moveaxis(target.big_b(u), -1, 0)
            return np.moveaxis(
                np.linalg.solve(big, np.moveaxis(stacked, -1, 0)[..., None])[..., 0], 0, -1
            )

    return RelaxationSystem(
        k=k, m=k * d, d=d, m12=m12, m21=m21, m22=m22,
        q=q, q_nu=q_nu, d_II=d_II, reaction=target.g,
        constant_coefficients=True, source_linear_in_v=True,
        name=target.name or "quasilinear",
    )


# ---------------------------------------------------------------------------
# square-root multiplier construction


def from_sqrt_symbol(target: ReactionDiffusion, grid: SpatialGrid) -> RelaxationSystem:
    """Constant-coefficient relaxation through the square root of the symbol.

    Tabulates B(xi) = S(xi)^{1/2} on the grid's Fourier modes, where S is the
    quadratic symbol of the diffusion data; the transport is applied as a
    Fourier multiplier with blocks [[0, B], [-B, 0]] and the stiff source is
    simply -z.
    """
    if callable(target.diffusion):
        raise BuildError("square-root construction requires constant coefficients")
    if target.d != grid.d:
        raise BuildError("target and grid dimensions differ")
    k, d = target.k, target.d
    a = np.asarray(target.diffusion, dtype=float)

    def symbol(xi):
        xi = np.asarray(xi, dtype=float).reshape(-1)
        return np.einsum("j,l,jlab->ab", xi, xi, a)

    kappa = grid.wavenumbers()  # (d, *ns)
    smat = np.einsum("j...,l...,jlab->...ab", kappa, kappa, a)
    smat = 0.5 * (smat + np.swapaxes(smat, -1, -2))
    vals, vecs = np.linalg.eigh(smat)
    knorm = np.sqrt(np.sum(kappa ** 2, axis=0))
    bad = (vals[..., 0] <= 0) & (knorm > 0)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise BuildError(f"quadratic symbol not positive definite at mode index {tuple(idx)}")
    mult = SpectralMultiplier(
        grid=grid, block=k, symbol=symbol,
        eigvecs=vecs, sqrt_eigs=np.sqrt(np.clip(vals, 0.0, None)),
    )

    def q(x, u, z):
        return -z

    def q_nu(x, u, z):
        return np.broadcast_to(-np.eye(k)[:, :, None], (k, k, z.shape[-1]))

    return RelaxationSystem(
        k=k, m=k, d=d, q=q, q_nu=q_nu, reaction=target.f,
        constant_coefficients=True, multiplier=mult, source_linear_in_v=True,
        name=target.name or "sqrt-multiplier",
    )


# ---------------------------------------------------------------------------
# decoupling of raw systems


@dataclass(frozen=True)
class RawSystem:
    """Hyperbolic system in original variables, before decoupling.

    a is one (N, N) matrix field per axis; b(x, W) is the stiff source with
    range of declared dimension source_range_dim; b_jac, when given, is its
    (N, N, M) Jacobian in W.  d_lower(W) is the order-one source, if any.
    """

    n: int
    d: int
    a: Tuple[MatrixField, ...]
    b: Callable[[Array, Array], Array]
    source_range_dim: int
    b_jac: Optional[Callable[[Array, Array], Array]] = None
    d_lower: Optional[Callable[[Array], Array]] = None
    name: str = ""


@dataclass(frozen=True)
class DecouplingTransform:
    """Invertible change of variables isolating the conserved components."""

    p: Array
    k: int

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if p.shape[0] != p.shape[1]:
            raise ValueError("transform matrix must be square")
        if not 0 < self.k < p.shape[0]:
            raise ValueError("row split k must be strictly inside the matrix")
        if abs(np.linalg.det(p)) <= 1e-12:
            raise ValueError("transform matrix is numerically singular")

    @property
    def p_inv(self) -> Array:
        return np.linalg.inv(self.p)

    @property
    def p_I(self) -> Array:
        return self.p[: self.k]

    @property
    def p_II(self) -> Array:
        return self.p[self.k:]


def decouple(
    raw: RawSystem,
    transform: DecouplingTransform,
    x_samples: Optional[Array] = None,
    w_samples: Optional[Array] = None,
) -> RelaxationSystem:
    """Change variables so the conserved block is isolated.

    The transform must annihilate the stiff source on its first k rows; that
    property is verified on a sampled lattice and violations are rejected
    with the worst (x, W) witness.
    """
    n, k = raw.n, transform.k
    if transform.p.shape[0] != n:
        raise BuildError("transform size does not match the system")
    if raw.source_range_dim != n - k:
        raise BuildError(
            f"declared source range dimension {raw.source_range_dim} "
            f"does not match transform split {n - k}"
        )
    xs = _default_x_samples(raw.d) if x_samples is None else np.atleast_2d(x_samples)
    ws = box_lattice([-1.0] * n, [1.0] * n) if w_samples is None else np.atleast_2d(w_samples)
    p, pinv = transform.p, transform.p_inv

    worst_val, worst_x, worst_w = 0.0, None, None
    for i in range(xs.shape[1]):
        bx = np.asarray(raw.b(xs[:, i:i + 1], ws), dtype=float)
        defect = np.abs(transform.p_I @ bx)
        j = int(np.argmax(np.max(defect, axis=0)))
        val = float(np.max(defect[:, j]))
        if val > worst_val:
            worst_val, worst_x, worst_w = val, xs[:, i], ws[:, j]
    scale = max(1.0, float(np.max(np.abs(p))))
    if worst_val > 1e-9 * scale:
        raise BuildError(
            f"transform does not annihilate the source: defect {worst_val:.3e} "
            f"at x={worst_x}, W={worst_w}"
        )

    def block_field(j, rows, cols):
        aj = raw.a[j]
        if not callable(aj):
            mat = p @ np.asarray(aj, dtype=float) @ pinv
            return mat[rows, cols]

        def fn(x, j=j, rows=rows, cols=cols):
            axx = eval_matrix_field(raw.a[j], x)
            mat = np.einsum("ab,bcm,cd->adm", p, axx, pinv)
            return mat[rows, cols]

        return fn

    ri, rii = slice(0, k), slice(k, n)
    m11 = tuple(block_field(j, ri, ri) for j in range(raw.d))
    m12 = tuple(block_field(j, ri, rii) for j in range(raw.d))
    m21 = tuple(block_field(j, rii, ri) for j in range(raw.d))
    m22 = tuple(block_field(j, rii, rii) for j in range(raw.d))

    constant = all(not callable(aj) for aj in raw.a)
    if constant:
        m11_max = max(float(np.max(np.abs(np.asarray(b)))) for b in m11)
        if m11_max <= 1e-13:
            m11 = None

    def to_w(u, z):
        return pinv @ np.concatenate([u, z], axis=0)

    def q(x, u, z):
        return transform.p_II @ np.asarray(raw.b(x, to_w(u, z)), dtype=float)

    if raw.b_jac is not None:
        def q_nu(x, u, z):
            jac = np.asarray(raw.b_jac(x, to_w(u, z)), dtype=float)  # (n, n, M)
            return np.einsum("ab,bcm,cd->adm", transform.p_II, jac, pinv[:, k:])
    else:
        def q_nu(x, u, z, _step=1e-6):
            m = n - k
            out = np.empty((m, m, z.shape[-1]))
            for col in range(m):
                dz = np.zeros_like(z)
                dz[col] = _step
                out[:, col] = (q(x, u, z + dz) - q(x, u, z - dz)) / (2 * _step)
            return out

    dtilde_I = None
    d_II = None
    if raw.d_lower is not None:
        def dtilde_I(x, u, v, eps):
            return (transform.p_I @ np.asarray(raw.d_lower(to_w(u, eps * v)), dtype=float)) / eps

        def d_II(u, z):
            return transform.p_II @ np.asarray(raw.d_lower(to_w(u, z)), dtype=float)

    return RelaxationSystem(
        k=k, m=n - k, d=raw.d, m12=m12, m21=m21, m22=m22, m11=m11,
        q=q, q_nu=q_nu, dtilde_I=dtilde_I, d_II=d_II,
        constant_coefficients=constant,
        name=raw.name or "decoupled",
    )


# ---------------------------------------------------------------------------
# canonical fixtures


def carleman() -> Tuple[RawSystem, DecouplingTransform, RelaxationSystem]:
    """Two-velocity kinetic model and its decoupled form.

    Returns the raw system in the particle densities, the transform to
    density and scaled flux variables, and the decoupled system with stiff
    source -2 u z.  The relaxed equation is the nonlinear diffusion
    u_t = ((1 / (2u)) u_x)_x.
    """

    def b(x, w):
        return np.stack([w[1] ** 2 - w[0] ** 2, w[0] ** 2 - w[1] ** 2])

    def b_jac(x, w):
        m = w.shape[-1]
        out = np.empty((2, 2, m))
        out[0, 0] = -2.0 * w[0]
        out[0, 1] = 2.0 * w[1]
        out[1, 0] = 2.0 * w[0]
        out[1, 1] = -2.0 * w[1]
        return out

    raw = RawSystem(
        n=2, d=1, a=(np.diag([1.0, -1.0]),), b=b, b_jac=b_jac,
        source_range_dim=1, name="carleman-raw",
    )
    transform = DecouplingTransform(p=np.array([[1.0, 1.0], [1.0, -1.0]]), k=1)
    sys = decouple(raw, transform)
    sys = replace(sys, source_linear_in_v=True, name="carleman")
    return raw, transform, sys


def carleman_limit_target() -> QuasilinearDivergence:
    """Quasilinear target matching the relaxed two-velocity model."""
    return scalar_quasilinear(
        b=lambda u: 1.0 / (2.0 * u),
        state_box=(0.5, 1.5),
        name="carleman-limit",
    )


def null_limit_system() -> RelaxationSystem:
    """Heat relaxation with a variable transport block on the conserved row.

    The extra block breaks the vanishing of the conserved transport symbol,
    so the system relaxes to the null solution instead of a heat equation.
    """
    base = from_reaction_diffusion(ReactionDiffusion(k=1, d=1, diffusion=isotropic_diffusion(1, 1)))

    def m11(x):
        return np.sin(2.0 * np.pi * x[0]).reshape(1, 1, -1)

    return replace(
        base, m11=(m11,), constant_coefficients=False, name="null-limit",
    )


# ---------------------------------------------------------------------------
# demo registry


@dataclass(frozen=True)
class DemoBundle:
    """Everything a front end needs to exercise one named fixture."""

    name: str
    system: RelaxationSystem
    target: Optional[ParabolicTarget]
    u0: Callable[[SpatialGrid], Array]
    state_box: Tuple[Tuple[float, ...], Tuple[float, ...]]
    symmetrizer: Symmetrizer
    expect_invalid: bool = False
    positive_states: bool = False


def _sine(grid: SpatialGrid, amplitude: float = 1.0, offset: float = 0.0) -> Array:
    pts = grid.points()
    prof = np.ones(grid.ns)
    for j in range(grid.d):
        prof = prof * np.sin(2.0 * np.pi * pts[j] / grid.lengths[j])
    return (offset + amplitude * prof)[None]


DEMO_NAMES = (
    "carleman",
    "heat1d",
    "heat2d",
    "aniso2d",
    "quasilinear-bu2",
    "sqrt-heat",
    "null-limit",
)


def demo(name: str, grid: SpatialGrid, amplitude: Optional[float] = None,
         offset: Optional[float] = None) -> DemoBundle:
    """Build one of the named demo fixtures on the given grid."""
    if name not in DEMO_NAMES:
        raise BuildError(f"unknown demo {name!r}; choose from {', '.join(DEMO_NAMES)}")

    if name == "carleman":
        _, _, sys = carleman()
        amp = 0.5 if amplitude is None else amplitude
        off = 1.0 if offset is None else offset
        return DemoBundle(
            name=name, system=sys, target=carleman_limit_target(),
            u0=lambda g: _sine(g, amp, off),
            state_box=((0.5,), (1.5,)),
            symmetrizer=Symmetrizer.identity(1, 1),
            positive_states=True,
        )

    amp = 1.0 if amplitude is None else amplitude
    off = 0.0 if offset is None else offset

    if name in ("heat1d", "heat2d"):
        d = 1 if name == "heat1d" else 2
        target = ReactionDiffusion(k=1, d=d, diffusion=isotropic_diffusion(1, d), name=name)
        sys = from_reaction_diffusion(target, x_samples=grid.flat_points()[:, ::7])
        return DemoBundle(
            name=name, system=sys, target=target,
            u0=lambda g: _sine(g, amp, off),
            state_box=((-1.5,), (1.5,)),
            symmetrizer=Symmetrizer.identity(1, d),
        )

    if name == "aniso2d":
        target = ReactionDiffusion(
            k=1, d=2, diffusion=scalar_diffusion_matrix([[2.0, 0.3], [0.3, 1.0]]), name=name,
        )
        sys = from_reaction_diffusion(target, x_samples=grid.flat_points()[:, ::7])
        return DemoBundle(
            name=name, system=sys, target=target,
            u0=lambda g: _sine(g, amp, off),
            state_box=((-1.5,), (1.5,)),
            symmetrizer=Symmetrizer.identity(1, 2),
        )

    if name == "quasilinear-bu2":
        target = scalar_quasilinear(
            b=lambda u: 1.0 + u ** 2,
            flux=lambda u: 0.5 * u ** 2,
            state_box=(-1.0, 1.0),
            name=name,
        )
        sys = from_quasilinear(target)
        amp_q = 0.5 if amplitude is None else amplitude
        return DemoBundle(
            name=name, system=sys, target=target,
            u0=lambda g: _sine(g, amp_q, off),
            state_box=((-1.0,), (1.0,)),
            symmetrizer=Symmetrizer.identity(1, 1),
        )

    if name == "sqrt-heat":
        target = ReactionDiffusion(k=1, d=1, diffusion=isotropic_diffusion(1, 1), name=name)
        sys = from_sqrt_symbol(target, grid)
        return DemoBundle(
            name=name, system=sys, target=target,
            u0=lambda g: _sine(g, amp, off),
            state_box=((-1.5,), (1.5,)),
            symmetrizer=Symmetrizer.identity(1, 1),
        )

    # null-limit
    sys = null_limit_system()
    return DemoBundle(
        name=name, system=sys, target=None,
        u0=lambda g: _sine(g, amp, off),
        state_box=((-1.5,), (1.5,)),
        symmetrizer=Symmetrizer.identity(1, 1),
        expect_invalid=True,
    )


__all__ = [
    "BuildError",
    "ReactionDiffusion",
    "QuasilinearDivergence",
    "ParabolicTarget",
    "isotropic_diffusion",
    "scalar_diffusion_matrix",
    "scalar_quasilinear",
    "box_lattice",
    "from_reaction_diffusion",
    "from_quasilinear",
    "from_sqrt_symbol",
    "RawSystem",
    "DecouplingTransform",
    "decouple",
    "carleman",
    "carleman_limit_target",
    "null_limit_system",
    "DemoBundle",
    "DEMO_NAMES",
    "demo",
]
