import numpy as np
import pytest

from khessian import geometry
from khessian.errors import DomainError
from khessian.geometry import TorusGrid, chern_tensors, metric_preset


@pytest.fixture(scope="module")
def grid16():
    return TorusGrid(2, 16)


@pytest.fixture(scope="module")
def grid8():
    return TorusGrid(2, 8)


# ------------------------------------------------------------- grid basics

def test_grid_validation():
    with pytest.raises(DomainError):
        TorusGrid(1, 16)
    with pytest.raises(DomainError):
        TorusGrid(2, 6)
    with pytest.raises(DomainError):
        TorusGrid(2, 15)


def test_trig_field_matches_manual(grid8):
    terms = [(0.5, [1, 0, 0, 0], 0.0), (0.25, [0, 2, 1, 0], 0.3)]
    field = grid8.trig_field(terms)
    manual = 0.5 * np.cos(2 * np.pi * grid8.x(0)) + 0.25 * np.cos(
        2 * np.pi * (2 * grid8.y(0) + grid8.x(1)) + 0.3
    )
    assert np.abs(field - manual).max() < 1e-14


def test_mean_and_integrate(grid8):
    f = np.cos(2 * np.pi * grid8.x(0)) ** 2 + 0 * grid8.zeros()
    assert grid8.mean(f) == pytest.approx(0.5)
    assert grid8.integrate(grid8.zeros() + 1.0) == pytest.approx(1.0)
    g = geometry.identity_metric(grid8) * 2.0  # det = 4
    assert grid8.integrate(grid8.zeros() + 1.0, g) == pytest.approx(4.0)


# ------------------------------------------------------------- derivatives

def test_dz_dzbar_plane_wave(grid16):
    # f = cos(2 pi x1): d/dz1 f = -pi sin(2 pi x1), d/dzbar1 identical
    f = np.cos(2 * np.pi * grid16.x(0)) + grid16.zeros()
    expect = -np.pi * np.sin(2 * np.pi * grid16.x(0)) + grid16.zeros()
    assert np.abs(grid16.dz(f, 0) - expect).max() < 1e-12
    assert np.abs(grid16.dzbar(f, 0) - expect).max() < 1e-12
    # f = cos(2 pi y1): d/dz1 f = (i pi) sin(2 pi y1), dzbar the conjugate
    f = np.cos(2 * np.pi * grid16.y(0)) + grid16.zeros()
    expect = 1j * np.pi * np.sin(2 * np.pi * grid16.y(0)) + grid16.zeros() * 1j
    assert np.abs(grid16.dz(f, 0) - expect).max() < 1e-12
    assert np.abs(grid16.dzbar(f, 0) - np.conj(expect)).max() < 1e-12


def test_complex_hessian_pinned(grid16):
    u = np.cos(2 * np.pi * grid16.x(0)) + grid16.zeros()
    h = grid16.complex_hessian(u)
    expect = -np.pi**2 * np.cos(2 * np.pi * grid16.x(0)) + grid16.zeros()
    assert np.abs(h[..., 0, 0] - expect).max() < 1e-11
    for i, j in [(0, 1), (1, 0), (1, 1)]:
        assert np.abs(h[..., i, j]).max() < 1e-11


def test_complex_hessian_cross_term(grid16):
    u = np.sin(2 * np.pi * grid16.x(0)) * np.sin(2 * np.pi * grid16.y(1)) + grid16.zeros()
    h = grid16.complex_hessian(u)
    expect = (
        1j * np.pi**2 * np.cos(2 * np.pi * grid16.x(0)) * np.cos(2 * np.pi * grid16.y(1))
        + grid16.zeros() * 1j
    )
    assert np.abs(h[..., 0, 1] - expect).max() < 1e-11
    assert np.abs(h[..., 1, 0] - np.conj(expect)).max() < 1e-11


def test_complex_hessian_is_hermitian(grid8):
    rng = np.random.default_rng(0)
    u = grid8.trig_field(
        [(rng.normal(), rng.integers(-3, 4, size=4), rng.uniform(0, 6)) for _ in range(5)]
    )
    h = grid8.complex_hessian(u)
    assert np.abs(h - np.conj(np.swapaxes(h, -1, -2))).max() == 0.0


def test_complex_hessian_rejects_complex_input(grid8):
    with pytest.raises(DomainError):
        grid8.complex_hessian(grid8.zeros(dtype=complex))


def test_laplacian_consistent_with_hessian_trace(grid8):
    u = grid8.trig_field([(0.3, [1, 0, 0, 0], 0.1), (0.2, [0, 1, 2, 0], 1.0)])
    h = grid8.complex_hessian(u)
    lap = grid8.complex_laplacian(u)
    assert np.abs(np.trace(h, axis1=-2, axis2=-1) - lap).max() < 1e-11


def test_solve_laplacian_roundtrip(grid8):
    u = grid8.trig_field([(0.7, [2, 1, 0, 0], 0.4), (0.1, [0, 0, 1, 1], 2.0)])
    v = grid8.solve_laplacian(grid8.complex_laplacian(u))
    assert np.abs(v.real - (u - u.mean())).max() < 1e-11


def test_gradient_norm_sq_pinned(grid16):
    u = np.cos(2 * np.pi * grid16.x(0)) + grid16.zeros()
    g = geometry.identity_metric(grid16)
    expect = np.pi**2 * np.sin(2 * np.pi * grid16.x(0)) ** 2 + grid16.zeros()
    assert np.abs(geometry.gradient_norm_sq(grid16, u, g) - expect).max() < 1e-11


def test_gradient_norm_sq_scales_with_inverse_metric(grid8):
    u = grid8.trig_field([(0.4, [1, 0, 0, 0], 0.0)])
    g = geometry.identity_metric(grid8)
    a = geometry.gradient_norm_sq(grid8, u, g)
    b = geometry.gradient_norm_sq(grid8, u, 2.0 * g)
    assert np.abs(a - 2.0 * b).max() < 1e-12


# ------------------------------------------------------------- presets

def test_presets_positive_definite_and_hermitian(grid8):
    for name in geometry.PRESET_NAMES:
        g = metric_preset(grid8, name)
        assert np.abs(g - np.conj(np.swapaxes(g, -1, -2))).max() < 1e-12
        assert np.linalg.eigvalsh(g)[..., 0].min() > 0.0


def test_torsion_preset_diagonal_floor(grid8):
    g = metric_preset(grid8, "torsion", epsilon=0.15)
    diag = np.stack([g[..., i, i].real for i in range(2)], axis=-1)
    assert diag.min() >= 1.0 - 1e-12  # nonnegative bumps never shrink g
    assert diag.max() <= 1.0 + 2 * 0.15 + 1e-12


def test_torsion_preset_epsilon_validated(grid8):
    with pytest.raises(DomainError):
        metric_preset(grid8, "torsion", epsilon=0.5)
    with pytest.raises(DomainError):
        metric_preset(grid8, "nope")


# ------------------------------------------------------------- Chern data

def test_flat_metric_has_no_connection(grid8):
    g = geometry.identity_metric(grid8)
    t = chern_tensors(grid8, g)
    assert np.abs(t.gamma).max() < 1e-14
    assert np.abs(t.torsion).max() < 1e-14
    assert np.abs(t.curvature).max() < 1e-14


def test_kahler_preset_is_torsion_free(grid16):
    g = metric_preset(grid16, "kahler", amplitude=0.02)
    t = chern_tensors(grid16, g, with_curvature=False)
    assert np.abs(t.torsion).max() < 1e-8


def test_torsion_preset_connection_closed_form(grid16):
    eps = 0.1
    g = metric_preset(grid16, "torsion", epsilon=eps)
    t = chern_tensors(grid16, g)
    g22 = g[..., 1, 1]
    g11 = g[..., 0, 0]
    # Gamma^2_{12} = d_1 g_22 / g_22 with g_22 = 1 + eps(1 + sin 2 pi y1)
    expect = -1j * np.pi * eps * np.cos(2 * np.pi * grid16.y(0)) / g22 + grid16.zeros()
    assert np.abs(t.gamma[..., 1, 0, 1] - expect).max() < 1e-11
    assert np.abs(t.torsion[..., 1, 0, 1] - expect).max() < 1e-11
    assert np.abs(t.torsion[..., 1, 1, 0] + expect).max() < 1e-11
    # Gamma^1_{21} = d_2 g_11 / g_11 with g_11 = 1 + eps(1 + cos 2 pi x2)
    expect = -np.pi * eps * np.sin(2 * np.pi * grid16.x(1)) / g11 + grid16.zeros()
    assert np.abs(t.gamma[..., 0, 1, 0] - expect).max() < 1e-11
    assert np.abs(t.torsion).max() > 0.1  # preset is genuinely non-Kahler


def test_conformal_metric_curvature_closed_form():
    # g = exp(a cos 2 pi x1) * id: R_{1 1bar k}^k = a pi^2 cos(2 pi x1),
    # all other entries vanish.
    grid = TorusGrid(2, 16)
    a = 0.1
    phi = a * np.cos(2 * np.pi * grid.x(0)) + grid.zeros()
    g = geometry.identity_metric(grid) * np.exp(phi)[..., None, None]
    t = chern_tensors(grid, g)
    expect = a * np.pi**2 * np.cos(2 * np.pi * grid.x(0)) + grid.zeros()
    for k in range(2):
        assert np.abs(t.curvature[..., 0, 0, k, k] - expect).max() < 1e-9
    mask = np.ones((2, 2, 2, 2), dtype=bool)
    for k in range(2):
        mask[0, 0, k, k] = False
    assert np.abs(t.curvature[..., mask]).max() < 1e-9


def test_lowered_curvature_hermitian_pairing(grid16):
    # conj(R_{i jbar k lbar}) = R_{j ibar l kbar}
    g = metric_preset(grid16, "torsion", epsilon=0.15)
    low = chern_tensors(grid16, g).lowered_curvature()
    swapped = np.conj(np.transpose(low, axes=tuple(range(low.ndim - 4)) + (-3, -4, -1, -2)))
    assert np.abs(low - swapped).max() < 1e-7


# ----------------------------------------------- covariant derivatives

def test_holomorphic_second_derivative_antisymmetry(grid16):
    # u_{p i} - u_{i p} = -T^q_{ip} u_q holds exactly at grid nodes
    g = metric_preset(grid16, "torsion", epsilon=0.2)
    tens = chern_tensors(grid16, g)
    u = grid16.trig_field([(0.5, [1, 0, 0, 0], 0.2), (0.3, [0, 1, 1, 0], 1.1)])
    d = geometry.covariant_derivatives(grid16, u, tens, order=3)
    lhs = d.hol2 - np.swapaxes(d.hol2, -1, -2)
    rhs = -np.einsum("...qip,...q->...pi", tens.torsion, d.grad)
    assert np.abs(lhs - rhs).max() < 1e-11


def test_commutation_flat_every_order(grid16):
    g = geometry.identity_metric(grid16)
    u = grid16.trig_field([(0.4, [1, 0, 0, 0], 0.0), (0.2, [0, 1, 2, 0], 0.7)])
    assert geometry.commutation_residual(grid16, u, g, order=3) < 1e-10
    assert geometry.commutation_residual(grid16, u, g, order=4) < 1e-9


def _residual_pair(preset_eps, order):
    vals = {}
    for N in (12, 24):
        grid = TorusGrid(2, N)
        g = metric_preset(grid, "torsion", epsilon=preset_eps)
        u = grid.trig_field(
            [(0.5, [1, 0, 0, 0], 0.0), (0.3, [0, 1, 1, 0], 0.4), (0.2, [0, 0, 2, 1], 1.3)]
        )
        vals[N] = geometry.commutation_residual(grid, u, g, order=order)
    return vals


@pytest.mark.parametrize("order", [3, 4])
def test_commutation_residual_decays_under_refinement(order):
    vals = _residual_pair(0.15, order)
    assert vals[24] < vals[12] / 10.0
    assert vals[12] > 1e-12  # coarse residual is a genuine signal, not noise


def test_commutation_mutation_control():
    grid = TorusGrid(2, 16)
    g = metric_preset(grid, "torsion", epsilon=0.15)
    u = grid.trig_field([(0.5, [1, 0, 0, 0], 0.0), (0.3, [0, 1, 1, 0], 0.4)])
    intact = geometry.commutation_residual(grid, u, g, order=4)
    broken = geometry.commutation_residual(
        grid, u, g, order=4, omit_torsion_product=True
    )
    assert broken > 100.0 * intact


# ------------------------------------------------------------- functionals

def test_hessian_pencil_extremes(grid16):
    u = grid16.trig_field([(0.05, [1, 0, 0, 0], 0.0)])
    g = geometry.identity_metric(grid16)
    lo, hi = geometry.hessian_pencil_extremes(grid16, u, g)
    # ddbar u has eigenvalues {-pi^2 * 0.05 cos(2 pi x1), 0}
    assert lo == pytest.approx(-0.05 * np.pi**2, rel=1e-6)
    assert hi == pytest.approx(0.05 * np.pi**2, rel=1e-6)


def test_cone_band_integrand_requires_band(grid8):
    u = grid8.trig_field([(0.01, [1, 0, 0, 0], 0.0)])
    g = geometry.identity_metric(grid8)
    with pytest.raises(DomainError):
        geometry.cone_band_integrand(grid8, u, g, 1, 2)  # i > k-2


def test_cone_band_integrand_flat_i0(grid8):
    # i = 0: sigma_0 = 1 so the density is |du|^2 in the eigenframe = |du|_g^2
    u = grid8.trig_field([(0.02, [1, 0, 0, 0], 0.0), (0.01, [0, 1, 1, 0], 0.5)])
    g = geometry.identity_metric(grid8)
    band = geometry.cone_band_integrand(grid8, u, g, 0, 2)
    assert np.abs(band - geometry.gradient_norm_sq(grid8, u, g)).max() < 1e-12
