import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import relaxbench as rb
from relaxbench import builder
from relaxbench.core import (
    FieldState,
    SingularSourceError,
    SpatialGrid,
    equilibrium_uII,
    spectral_gradient,
)

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def carleman_sys():
    _, _, sys = builder.carleman()
    return sys


@pytest.fixture(scope="module")
def heat_sys():
    return builder.from_reaction_diffusion(
        builder.ReactionDiffusion(k=1, d=1, diffusion=builder.isotropic_diffusion(1, 1))
    )


class TestGrid:
    def test_spacing(self):
        g = SpatialGrid((8,), (2.0,))
        assert g.h == (0.25,)
        assert g.cell_volume == 0.25

    def test_rejects_tiny_grids(self):
        with pytest.raises(ValueError):
            SpatialGrid((3,), (1.0,))
        with pytest.raises(ValueError):
            SpatialGrid((8,), (-1.0,))

    def test_spectral_gradient_of_sine(self, grid64):
        x = grid64.axis_centers(0)
        f = np.sin(TWO_PI * x)[None]
        df = spectral_gradient(grid64, f)
        assert np.allclose(df[0, 0], TWO_PI * np.cos(TWO_PI * x), atol=1e-10)


class TestPrincipalSymbol:
    def test_carleman_unit_xi(self, carleman_sys):
        # off-diagonals -i, coefficient matrix [[0,1],[1,0]]
        sym = rb.principal_symbol(carleman_sys, [0.3], [1.0])
        assert np.allclose(sym, -1j * np.array([[0, 1], [1, 0]]))
        eigs = np.linalg.eigvals(1j * sym)
        assert np.allclose(sorted(eigs.real), [-1.0, 1.0], atol=1e-12)
        assert np.max(np.abs(eigs.imag)) < 1e-12

    def test_zero_wave_vector_gives_zero(self, carleman_sys, heat_sys):
        for sys in (carleman_sys, heat_sys):
            assert np.allclose(rb.principal_symbol(sys, [0.1], [0.0]), 0.0)

    def test_sqrt_symbol_system(self, grid64):
        target = builder.ReactionDiffusion(k=1, d=1, diffusion=builder.isotropic_diffusion(1, 1))
        sys = builder.from_sqrt_symbol(target, grid64)
        sym = rb.principal_symbol(sys, [0.0], [TWO_PI])
        assert np.allclose(sym, [[0.0, TWO_PI], [-TWO_PI, 0.0]], atol=1e-12)

    @given(a=st.floats(min_value=-8.0, max_value=8.0, allow_nan=False))
    def test_linear_in_xi(self, a):
        _, _, sys = builder.carleman()
        base = rb.principal_symbol(sys, [0.2], [1.3])
        scaled = rb.principal_symbol(sys, [0.2], [1.3 * a])
        assert np.allclose(scaled, a * base, atol=1e-12)

    def test_builder_output_conserved_block_zero(self, heat_sys, grid64):
        for xi in ([1.0], [-1.0], [2.5]):
            sym = rb.principal_symbol(heat_sys, [0.4], xi)
            assert np.max(np.abs(sym[:1, :1])) == 0.0


class TestLimitGenerator:
    def test_heat_generator(self, heat_sys):
        g = rb.limit_generator(heat_sys, [0.0], [0.0], [TWO_PI])
        assert np.allclose(g, -TWO_PI ** 2, rtol=1e-14)

    def test_carleman_generator(self, carleman_sys):
        # Qnu = -2 rho, M12 = M21 = 1 gives -xi^2 / (2 rho)
        for rho in (0.5, 0.75, 1.5):
            g = rb.limit_generator(carleman_sys, [0.1], [rho], [TWO_PI])
            assert np.allclose(g, -TWO_PI ** 2 / (2 * rho), rtol=1e-12)

    def test_zero_xi(self, carleman_sys):
        assert np.allclose(rb.limit_generator(carleman_sys, [0.1], [1.0], [0.0]), 0.0)

    def test_singular_source_reported(self):
        _, _, sys = builder.carleman()
        with pytest.raises(SingularSourceError) as err:
            rb.limit_generator(sys, [0.1], [0.0], [1.0])  # Qnu = 0 at rho = 0
        assert err.value.smallest_singular_value == pytest.approx(0.0, abs=1e-12)


class TestStiffJacobian:
    def test_linear_source_constant(self):
        sys = builder.from_reaction_diffusion(
            builder.ReactionDiffusion(k=1, d=1, diffusion=builder.isotropic_diffusion(1, 1))
        )
        for u, v in ((0.0, 0.0), (2.0, -3.0)):
            assert np.allclose(rb.stiff_jacobian(sys, [0.1], [u], [v]), [[-1.0]])

    def test_carleman_value(self, carleman_sys):
        assert np.allclose(rb.stiff_jacobian(carleman_sys, [0.0], [0.75], [0.3]), [[-1.5]])

    @given(
        rho=st.floats(min_value=0.4, max_value=1.6),
        z=st.floats(min_value=-1.0, max_value=1.0),
    )
    def test_matches_central_difference(self, rho, z):
        _, _, sys = builder.carleman()
        step = 1e-5
        qp = sys.stiff_source(np.array([[0.1]]), np.array([[rho]]), np.array([[z + step]]))
        qm = sys.stiff_source(np.array([[0.1]]), np.array([[rho]]), np.array([[z - step]]))
        fd = (qp - qm) / (2 * step)
        jac = rb.stiff_jacobian(sys, [0.1], [rho], [z])
        assert np.allclose(jac, fd, rtol=1e-6, atol=1e-9)


class TestFieldState:
    def test_shape_validation(self, grid64):
        with pytest.raises(ValueError):
            FieldState(grid64, np.zeros((1, 65)), np.zeros((1, 64)), 0.0, 0.1)

    def test_rejects_non_finite(self, grid64):
        bad = np.zeros((1, 64))
        bad[0, 3] = np.nan
        with pytest.raises(ValueError):
            FieldState(grid64, bad, np.zeros((1, 64)), 0.0, 0.1)

    def test_rejects_nonpositive_eps(self, grid64):
        with pytest.raises(ValueError):
            FieldState(grid64, np.zeros((1, 64)), np.zeros((1, 64)), 0.0, 0.0)


class TestEquilibrium:
    def test_heat_preparation_is_minus_gradient(self, heat_sys, grid128):
        x = grid128.axis_centers(0)
        u = np.sin(TWO_PI * x)[None]
        v = equilibrium_uII(heat_sys, grid128, u)
        assert np.allclose(v[0], -TWO_PI * np.cos(TWO_PI * x), atol=1e-10)

    def test_carleman_preparation(self, carleman_sys, grid128):
        x = grid128.axis_centers(0)
        rho = (1.0 + 0.5 * np.sin(TWO_PI * x))[None]
        m = equilibrium_uII(carleman_sys, grid128, rho)
        expected = -np.pi * np.cos(TWO_PI * x) / (2.0 * (1.0 + 0.5 * np.sin(TWO_PI * x)))
        assert np.allclose(m[0], expected, atol=1e-9)
