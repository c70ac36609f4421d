"""Domain types and symbol-level algebra shared by the whole package.

Grids, systems, and states are immutable value objects; every operation in
this module is a pure function of its inputs, so values can be shared freely
between concurrent workers.

Conventions used throughout:

* points are column-batched: an array of M points has shape (d, M);
* a matrix field is either a constant ndarray of shape (rows, cols) or a
  vectorized callable mapping points (d, M) -> (rows, cols, M);
* state-dependent sources are vectorized callables, e.g. the stiff source
  q(x, u, z) takes x (d, M), u (k, M), z (m, M) and returns (m, M);
* principal symbols of differential transport carry the factor -i, so that
  i * symbol has real spectrum exactly when the system is hyperbolic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple, Union

import numpy as np

Array = np.ndarray
MatrixField = Union[Array, Callable[[Array], Array]]


class SymbolError(ValueError):
    """Raised when symbol-level algebra cannot be carried out."""


class SingularSourceError(SymbolError):
    """Stiff source derivative is singular where invertibility is required."""

    def __init__(self, message: str, smallest_singular_value: float):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform tensor grid on a periodic box, dimensions 1 or 2.

    Indexing wraps around in every axis; there are no boundary cells.
    """

    ns: Tuple[int, ...]
    lengths: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))
        if len(self.ns) != len(self.lengths):
            raise ValueError("ns and lengths must have equal length")
        if not 1 <= len(self.ns) <= 2:
            raise ValueError("only d = 1 or d = 2 grids are supported")
        if any(n < 4 for n in self.ns):
            raise ValueError("need at least 4 cells per axis")
        if any(L <= 0 for L in self.lengths):
            raise ValueError("period lengths must be positive")

    @property
    def d(self) -> int:
        return len(self.ns)

    @property
    def h(self) -> Tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.ns))

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.ns))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axis_centers(self, j: int) -> Array:
        return (np.arange(self.ns[j]) + 0.5) * self.h[j]

    def points(self) -> Array:
        """Cell centers, shape (d, n_1, ..., n_d)."""
        axes = [self.axis_centers(j) for j in range(self.d)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def flat_points(self) -> Array:
        return self.points().reshape(self.d, -1)

    def wavenumbers(self) -> Array:
        """Physical wavenumbers of the discrete Fourier modes, shape (d, *ns)."""
        axes = [2.0 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(self.ns, self.h)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))


def spectral_gradient(grid: SpatialGrid, fields: Array) -> Array:
    """Per-axis spectral derivative of real fields (c, *ns) -> (d, c, *ns).

    The unpaired Nyquist mode is dropped so derivatives of real fields
    stay real and the operation is skew-adjoint on the grid.
    """
    fields = np.asarray(fields, dtype=float)
    kappa = grid.wavenumbers()
    fhat = np.fft.fftn(fields, axes=tuple(range(1, 1 + grid.d)))
    out = np.empty((grid.d,) + fields.shape)
    for j in range(grid.d):
        mask = np.ones(grid.ns[j])
        if grid.ns[j] % 2 == 0:
            mask[grid.ns[j] // 2] = 0.0
        shape = [1] * grid.d
        shape[j] = grid.ns[j]
        factor = (1j * kappa[j]) * mask.reshape(shape)
        out[j] = np.fft.ifftn(fhat * factor, axes=tuple(range(1, 1 + grid.d))).real
    return out


def l2_norm(fields: Array, grid: SpatialGrid) -> float:
    """Discrete L2 norm of a stack of scalar fields (c, *ns)."""
    return float(np.sqrt(np.sum(np.asarray(fields) ** 2) * grid.cell_volume))


# ---------------------------------------------------------------------------
# matrix fields


def eval_matrix_field(f: MatrixField, x: Array) -> Array:
    """Evaluate a matrix field at points x (d, M); returns (rows, cols, M)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m = x.shape[-1]
    if callable(f):
        out = np.asarray(f(x), dtype=float)
        if out.ndim == 2:
            out = out[:, :, None]
        return out
    f = np.asarray(f, dtype=float)
    return np.broadcast_to(f[:, :, None], f.shape + (m,))


def as_point(x) -> Array:
    """Coerce a scalar or sequence to a single-point batch of shape (d, 1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim == 1:
        x = x[:, None]
    return x


def constant_matrix(f: MatrixField) -> Optional[Array]:
    return None if callable(f) else np.asarray(f, dtype=float)


# ---------------------------------------------------------------------------
# spectral multiplier transport (matrix square-root symbols)


@dataclass(frozen=True)
class SpectralMultiplier:
    """Tabulated symmetric positive multiplier B(xi) on a grid's Fourier modes.

    Stores the eigendecomposition of the quadratic symbol S(xi) per mode,
    so B = V diag(sqrt(s)) V^T and any matrix function of B is cheap.
    """

    grid: SpatialGrid
    block: int
    symbol: Callable[[Array], Array]
    eigvecs: Array   # (*ns, block, block)
    sqrt_eigs: Array  # (*ns, block)

    def b_at(self, xi) -> Array:
        """B(xi) for an arbitrary wave vector, shape (block, block)."""
        s = np.asarray(self.symbol(np.asarray(xi, dtype=float)), dtype=float)
        s = np.atleast_2d(s)
        vals, vecs = np.linalg.eigh(0.5 * (s + s.T))
        if np.any(vals < -1e-12 * max(1.0, np.max(np.abs(vals)))):
            raise SymbolError("quadratic symbol is not positive semidefinite")
        return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T

    def table(self) -> Array:
        """B on every grid mode, shape (*ns, block, block)."""
        root = self.sqrt_eigs[..., None, :] * self.eigvecs
        return root @ np.swapaxes(self.eigvecs, -1, -2)


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class RelaxationSystem:
    """Semilinear relaxation system in decoupled block form.

    The transport blocks are matrix fields per axis; m11 is zero unless the
    system deliberately violates the conserved-block structure (those systems
    relax to the null solution, not to a parabolic limit).  The stiff source
    q(x, u, z) takes the unscaled non-conserved state z and must vanish at
    z = 0; q_nu is its derivative in z.
    """

    k: int
    m: int
    d: int
    m12: Optional[Tuple[MatrixField, ...]] = None
    m21: Optional[Tuple[MatrixField, ...]] = None
    m22: Optional[Tuple[MatrixField, ...]] = None
    m11: Optional[Tuple[MatrixField, ...]] = None
    q: Optional[Callable[[Array, Array, Array], Array]] = None
    q_nu: Optional[Callable[[Array, Array, Array], Array]] = None
    dtilde_I: Optional[Callable[[Array, Array, Array, float], Array]] = None
    d_II: Optional[Callable[[Array, Array], Array]] = None
    reaction: Optional[Callable[[Array], Array]] = None
    constant_coefficients: bool = False
    multiplier: Optional[SpectralMultiplier] = None
    source_linear_in_v: bool = False
    name: str = ""

    @property
    def n(self) -> int:
        return self.k + self.m

    def __post_init__(self):
        if self.k <= 0 or self.m <= 0 or not 1 <= self.d <= 2:
            raise ValueError("need k >= 1, m >= 1, d in {1, 2}")
        if self.multiplier is None:
            for blocks, rows, cols, label in (
                (self.m12, self.k, self.m, "m12"),
                (self.m21, self.m, self.k, "m21"),
            ):
                if blocks is None or len(blocks) != self.d:
                    raise ValueError(f"{label} must provide one field per axis")
                for b in blocks:
                    c = constant_matrix(b)
                    if c is not None and c.shape != (rows, cols):
                        raise ValueError(f"{label} block has shape {c.shape}, expected {(rows, cols)}")
        elif self.k != self.m:
            raise ValueError("multiplier transport requires k == m")
        if self.q is None or self.q_nu is None:
            raise ValueError("systems must carry q and q_nu")

    def stiff_source(self, x: Array, u: Array, z: Array) -> Array:
        return np.asarray(self.q(x, u, z), dtype=float)

    def stiff_source_jacobian(self, x: Array, u: Array, z: Array) -> Array:
        return np.asarray(self.q_nu(x, u, z), dtype=float)

    def lower_order_I(self, x: Array, u: Array, v: Array, eps: float) -> Array:
        if self.dtilde_I is None:
            return np.zeros_like(u)
        return np.asarray(self.dtilde_I(x, u, v, eps), dtype=float)

    def lower_order_II(self, u: Array, z: Array) -> Array:
        if self.d_II is None:
            return np.zeros(z.shape, dtype=float)
        return np.asarray(self.d_II(u, z), dtype=float)

    def reaction_term(self, u: Array) -> Array:
        if self.reaction is None:
            return np.zeros_like(u)
        return np.asarray(self.reaction(u), dtype=float)

    def contract(self, blocks, x: Array, xi: Array) -> Array:
        """sum_j xi_j * block_j(x); returns (rows, cols, M)."""
        xi = np.asarray(xi, dtype=float).reshape(-1)
        parts = [xi[j] * eval_matrix_field(blocks[j], x) for j in range(self.d)]
        return np.sum(parts, axis=0)


def principal_symbol(sys: RelaxationSystem, x, xi) -> Array:
    """Principal symbol at one point, an N x N complex matrix.

    Differential systems give the block matrix with entries -i sum_j xi_j M_j;
    multiplier systems give the real block matrix [[0, B(xi)], [-B(xi), 0]].
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != sys.d:
        raise SymbolError(f"wave vector has dimension {xi.size}, system is {sys.d}-d")
    n, k, m = sys.n, sys.k, sys.m
    out = np.zeros((n, n), dtype=complex)
    if sys.multiplier is not None:
        b = sys.multiplier.b_at(xi)
        out[:k, k:] = b
        out[k:, :k] = -b
        return out
    xp = as_point(x)
    out[:k, k:] = -1j * sys.contract(sys.m12, xp, xi)[:, :, 0]
    out[k:, :k] = -1j * sys.contract(sys.m21, xp, xi)[:, :, 0]
    if sys.m22 is not None:
        out[k:, k:] = -1j * sys.contract(sys.m22, xp, xi)[:, :, 0]
    if sys.m11 is not None:
        out[:k, :k] = -1j * sys.contract(sys.m11, xp, xi)[:, :, 0]
    return out


def stiff_jacobian(sys: RelaxationSystem, x, u, v) -> Array:
    """Derivative of the stiff source in its non-conserved argument, (m, m)."""
    xp = as_point(x)
    up = np.asarray(u, dtype=float).reshape(sys.k, 1)
    vp = np.asarray(v, dtype=float).reshape(sys.m, 1)
    jac = sys.stiff_source_jacobian(xp, up, vp)
    jac = jac[:, :, 0] if jac.ndim == 3 else jac
    if not np.all(np.isfinite(jac)):
        raise SymbolError("stiff source jacobian has non-finite entries")
    return jac


def limit_generator(sys: RelaxationSystem, x, u, xi) -> Array:
    """Second-order generator of the relaxed equation in Fourier variables.

    For differential transport this is (sum xi_j M12_j) Qnu^{-1} (sum xi_j M21_j)
    evaluated at z = 0; for multiplier transport it is B(xi) Qnu^{-1} B(xi).
    The relaxed dynamics per mode reads du/dt = G u + lower order.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    xp = as_point(x)
    up = np.asarray(u, dtype=float).reshape(sys.k, 1)
    qnu = stiff_jacobian(sys, x, u, np.zeros(sys.m))
    svals = np.linalg.svd(qnu, compute_uv=False)
    if svals[-1] <= 1e-14 * max(1.0, svals[0]):
        raise SingularSourceError(
            f"stiff jacobian is singular at u={np.ravel(u)}, smallest singular value {svals[-1]:.3e}",
            float(svals[-1]),
        )
    if sys.multiplier is not None:
        b = sys.multiplier.b_at(xi)
        return b @ np.linalg.solve(qnu, b)
    m12 = sys.contract(sys.m12, xp, xi)[:, :, 0]
    m21 = sys.contract(sys.m21, xp, xi)[:, :, 0]
    return m12 @ np.linalg.solve(qnu, m21)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class FieldState:
    """Discrete (U^I, U^II) fields on a grid at one time instant."""

    grid: SpatialGrid
    uI: Array
    uII: Array
    t: float
    eps: float

    def __post_init__(self):
        uI = np.asarray(self.uI, dtype=float)
        uII = np.asarray(self.uII, dtype=float)
        object.__setattr__(self, "uI", uI)
        object.__setattr__(self, "uII", uII)
        if uI.shape[1:] != self.grid.ns or uII.shape[1:] != self.grid.ns:
            raise ValueError("field shapes do not match the grid")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not (np.all(np.isfinite(uI)) and np.all(np.isfinite(uII))):
            raise ValueError("fields must be finite")

    @property
    def k(self) -> int:
        return self.uI.shape[0]

    @property
    def m(self) -> int:
        return self.uII.shape[0]

    def with_fields(self, uI: Array, uII: Array, t: Optional[float] = None) -> "FieldState":
        return FieldState(self.grid, uI, uII, self.t if t is None else t, self.eps)


# ---------------------------------------------------------------------------
# symmetrizers


@dataclass(frozen=True)
class Symmetrizer:
    """Block-diagonal symbol R(x, xi) = diag(R11, R22), degree 0 in xi.

    Blocks are constant matrices or callables (x (d,M), xi (d,)) -> (r, r, M);
    eta is the required positivity floor.
    """

    r11: Union[Array, Callable[[Array, Array], Array]]
    r22: Union[Array, Callable[[Array, Array], Array]]
    eta: float = 1e-8

    @staticmethod
    def identity(k: int, m: int) -> "Symmetrizer":
        return Symmetrizer(np.eye(k), np.eye(m), eta=0.5)

    def block_at(self, which: str, x, xi) -> Array:
        blk = self.r11 if which == "r11" else self.r22
        if callable(blk):
            out = np.asarray(blk(as_point(x), np.asarray(xi, dtype=float)), dtype=float)
            return out[:, :, 0] if out.ndim == 3 else out
        return np.asarray(blk, dtype=float)


# ---------------------------------------------------------------------------
# grid-applied conserved-gradient operator (shared by preparation and residual)


def apply_m21_gradient(sys: RelaxationSystem, grid: SpatialGrid, uI: Array) -> Array:
    """Evaluate sum_j M21_j(x) d_j U^I on the grid with spectral derivatives.

    For multiplier systems this is the action of -B(D) on U^I, applied per
    Fourier mode from the tabulated square-root symbol.
    """
    uI = np.asarray(uI, dtype=float)
    if sys.multiplier is not None:
        spax = tuple(range(1, 1 + grid.d))
        uhat = np.fft.fftn(uI, axes=spax)
        moved = np.moveaxis(uhat, 0, -1)[..., None]
        bu = (sys.multiplier.table() @ moved)[..., 0]
        out = np.fft.ifftn(np.moveaxis(bu, -1, 0), axes=spax).real
        return -out
    grad = spectral_gradient(grid, uI)  # (d, k, *ns)
    xs = grid.flat_points()
    out = np.zeros((sys.m,) + grid.ns)
    for j in range(sys.d):
        mat = eval_matrix_field(sys.m21[j], xs)  # (m, k, M)
        dj = grad[j].reshape(sys.k, -1)
        out += np.einsum("abm,bm->am", mat, dj).reshape((sys.m,) + grid.ns)
    return out


def equilibrium_uII(sys: RelaxationSystem, grid: SpatialGrid, uI: Array) -> Array:
    """Non-conserved field slaved to U^I by the relaxed second relation.

    Solves Qnu(x, u, 0) U^II = M21(x, d) U^I - D^II(u, 0) pointwise; this is
    the well-prepared initial data used to suppress the initial layer.
    """
    uI = np.asarray(uI, dtype=float)
    rhs = apply_m21_gradient(sys, grid, uI)
    xs = grid.flat_points()
    uflat = uI.reshape(sys.k, -1)
    rhsflat = rhs.reshape(sys.m, -1) - sys.lower_order_II(uflat, np.zeros((sys.m, uflat.shape[1])))
    qnu = sys.stiff_source_jacobian(xs, uflat, np.zeros_like(rhsflat))
    if qnu.ndim == 2:
        qnu = np.broadcast_to(qnu[:, :, None], qnu.shape + (uflat.shape[1],))
    sol = np.linalg.solve(np.moveaxis(qnu, -1, 0), np.moveaxis(rhsflat, -1, 0)[..., None])
    return np.moveaxis(sol[..., 0], 0, -1).reshape((sys.m,) + grid.ns)


# ---------------------------------------------------------------------------
# reports and tables


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one structural check with its worst-case witness."""

    name: str
    passed: bool
    margin: float
    witness: dict = field(default_factory=dict)
    note: str = ""

    def witness_str(self) -> str:
        parts = []
        for key, val in self.witness.items():
            if isinstance(val, (np.ndarray, list, tuple)):
                flat = np.ravel(np.asarray(val))
                parts.append(f"{key}=" + " ".join(f"{v:.6g}" for v in flat))
            elif isinstance(val, float):
                parts.append(f"{key}={val:.6g}")
            else:
                parts.append(f"{key}={val}")
        return ";".join(parts)


@dataclass(frozen=True)
class ValidationReport:
    """Per-hypothesis pass/fail results, one entry per declared check."""

    entries: Tuple[CheckResult, ...]
    header: str = ""

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(names) != len(set(names)):
            raise ValueError("duplicate check entries in report")
        for e in self.entries:
            if not e.passed and not e.witness:
                raise ValueError(f"failing check {e.name} lacks a witness")

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name: str) -> CheckResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def failing(self) -> Tuple[str, ...]:
        return tuple(e.name for e in self.entries if not e.passed)


@dataclass(frozen=True)
class LadderRow:
    eps: float
    errI: float
    errII_weak: float
    sup_eps_uII: float
    observed_order: Optional[float] = None


@dataclass(frozen=True)
class ConvergenceTable:
    """Rows of an epsilon-ladder study, epsilon strictly decreasing."""

    rows: Tuple[LadderRow, ...]

    def __post_init__(self):
        eps = [r.eps for r in self.rows]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon must decrease strictly down the rows")
        if any(r.errI < 0 or r.errII_weak < 0 or r.sup_eps_uII < 0 for r in self.rows):
            raise ValueError("errors must be nonnegative")

    @property
    def errI_monotone(self) -> bool:
        errs = [r.errI for r in self.rows]
        return all(b < a for a, b in zip(errs, errs[1:]))

    def to_csv(self) -> str:
        lines = ["epsilon,errI,errII_weak,sup_eps_uII,observed_order"]
        for r in self.rows:
            order = "" if r.observed_order is None else f"{r.observed_order:.17g}"
            lines.append(
                f"{r.eps:.17g},{r.errI:.17g},{r.errII_weak:.17g},{r.sup_eps_uII:.17g},{order}"
            )
        return "\n".join(lines) + "\n"


__all__ = [
    "Array",
    "MatrixField",
    "SymbolError",
    "SingularSourceError",
    "SpatialGrid",
    "spectral_gradient",
    "l2_norm",
    "eval_matrix_field",
    "as_point",
    "constant_matrix",
    "SpectralMultiplier",
    "RelaxationSystem",
    "principal_symbol",
    "stiff_jacobian",
    "limit_generator",
    "FieldState",
    "Symmetrizer",
    "apply_m21_gradient",
    "equilibrium_uII",
    "CheckResult",
    "ValidationReport",
    "LadderRow",
    "ConvergenceTable",
    "replace",
]
