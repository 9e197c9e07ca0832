import numpy as np
import pytest

from geoflow.control import designed_control
from geoflow.elliptic import (LerayProjector, MetricNotPositiveError,
                              ModifiedPoissonSolver, stream_of_velocity,
                              velocity_from_stream)
from geoflow.fluid import equilibrium_a_const, equilibrium_fields
from geoflow.geometry import ChannelGeometry, dx_spectral, dy_centered

GEOM = ChannelGeometry(2.0, 0.9, Nx=64, Ny=32)


def test_rejects_nonpositive_profile():
    phi = np.ones(GEOM.Ny + 1)
    phi[5] = -0.1
    with pytest.raises(MetricNotPositiveError):
        ModifiedPoissonSolver(GEOM, phi)


def test_residual_at_solver_tolerance():
    rng = np.random.default_rng(0)
    control = designed_control(GEOM)
    solver = ModifiedPoissonSolver(GEOM, control.phi)
    w = rng.normal(size=GEOM.field_shape())
    psi = solver.solve(w, 0.3)
    assert solver.residual(psi, w) < 1e-10


def test_zero_vorticity_zero_flux_gives_zero():
    solver = ModifiedPoissonSolver(GEOM)
    psi = solver.solve(np.zeros(GEOM.field_shape()), 0.0)
    assert np.abs(psi).max() < 1e-14


def test_manufactured_solution_convergence():
    """Phi = 1, psi* = sin(2x/X) sin(3y/Y): the discrete solution converges
    to the manufactured field at second order."""
    errs = []
    for ny in (32, 64, 128):
        geom = ChannelGeometry(2.0, 0.9, Nx=64, Ny=ny)
        x2, y2 = geom.grid()
        kx = 2.0 / geom.X
        my = 3.0 / geom.Y
        psi_star = np.sin(kx * x2) * np.sin(my * y2)
        w = -(kx**2 + my**2) * psi_star
        solver = ModifiedPoissonSolver(geom)
        psi = solver.solve(w, 0.0)
        errs.append(np.abs(psi - psi_star).max())
    assert np.log2(errs[0] / errs[1]) > 1.8
    assert np.log2(errs[1] / errs[2]) > 1.8


def test_equilibrium_stream_and_velocity():
    """Solving for the equilibrium vorticity reproduces the analytic
    velocity profile at second order."""
    errs = []
    for ny in (32, 64, 128):
        geom = ChannelGeometry(2.0, 0.9, Nx=32, Ny=ny)
        u_e, omega_e, psi0 = equilibrium_fields(geom)
        solver = ModifiedPoissonSolver(geom)
        w = np.broadcast_to(omega_e[:, None], geom.field_shape()).copy()
        psi = solver.solve(w, equilibrium_a_const(geom))
        u = velocity_from_stream(psi, geom)
        errs.append(np.abs(u[0] - u_e[:, None]).max())
        assert np.abs(u[1]).max() < 1e-12
    assert np.log2(errs[0] / errs[1]) > 1.7
    assert np.log2(errs[1] / errs[2]) > 1.7


def test_discrete_laplacian_of_equilibrium_stream():
    """|| L psi0 - omega_e ||_inf = O(dy^2) under refinement."""
    errs = []
    for ny in (32, 64, 128):
        geom = ChannelGeometry(2.0, 0.9, Nx=32, Ny=ny)
        _, omega_e, psi0 = equilibrium_fields(geom)
        solver = ModifiedPoissonSolver(geom)
        psi2 = np.broadcast_to(psi0[:, None], geom.field_shape()).copy()
        lap = solver.apply(psi2)
        errs.append(np.abs(lap[1:-1] - omega_e[1:-1, None]).max())
    assert np.log2(errs[0] / errs[1]) > 1.9


def test_velocity_from_stream_linear_profile():
    x2, y2 = GEOM.grid()
    u = velocity_from_stream(y2.copy(), GEOM)
    assert np.abs(u[0] + 1.0).max() < 1e-12
    assert np.abs(u[1]).max() < 1e-12


def test_velocity_from_stream_divergence_free_and_tangent():
    rng = np.random.default_rng(3)
    x2, y2 = GEOM.grid()
    psi = np.sin(3 * x2 / GEOM.X) * np.sin(2 * y2 / GEOM.Y) + 0.2 * np.sin(y2)
    psi[0, :] = psi[0, 0]
    psi[-1, :] = psi[-1, 0]
    u = velocity_from_stream(psi, GEOM)
    proj = LerayProjector(GEOM)
    assert np.abs(proj.divergence(u)[1:-1]).max() < 1e-11
    assert np.abs(u[1][0]).max() < 1e-12
    assert np.abs(u[1][-1]).max() < 1e-12


def test_leray_contract():
    proj = LerayProjector(GEOM)
    rng = np.random.default_rng(1)
    x2, y2 = GEOM.grid()
    v = np.empty((2,) + GEOM.field_shape())
    v[0] = np.sin(3 * x2 / GEOM.X) * np.cos(y2) + 0.4
    v[1] = np.cos(2 * x2 / GEOM.X) * np.sin(1.8 * y2 + 0.3)
    pv = proj.project(v)
    assert np.abs(proj.divergence(pv)[1:-1]).max() < 1e-10
    assert np.abs(pv[1][0]).max() < 1e-12
    assert np.abs(pv[1][-1]).max() < 1e-12
    ppv = proj.project(pv)
    assert np.abs(ppv - pv).max() < 1e-12


def test_leray_kills_gradients():
    from geoflow.geometry import dy_matrix

    scal = np.sin(2 * GEOM.grid()[0] / GEOM.X) * np.cos(1.3 * GEOM.grid()[1])
    # gradient in the projector's own stencils is annihilated exactly
    grad = np.array([dx_spectral(scal, GEOM), dy_matrix(GEOM) @ scal])
    out = LerayProjector(GEOM).project(grad)
    assert np.abs(out).max() < 1e-12


def test_leray_fixes_divergence_free():
    x2, y2 = GEOM.grid()
    psi = np.sin(2 * x2 / GEOM.X) * np.sin(y2 / GEOM.Y)
    u = velocity_from_stream(psi, GEOM)
    out = LerayProjector(GEOM).project(u)
    assert np.abs(out - u).max() < 1e-12


def test_leray_output_orthogonal_to_gradients():
    """<P(v), grad s> ~ 0 under the channel quadrature."""
    proj = LerayProjector(GEOM)
    rng = np.random.default_rng(5)
    x2, y2 = GEOM.grid()
    v = np.array([rng.normal(size=GEOM.field_shape()),
                  rng.normal(size=GEOM.field_shape())])
    pv = proj.project(v)
    for _ in range(5):
        a, b = rng.integers(1, 4), rng.integers(1, 4)
        s = np.sin(2 * a * x2 / GEOM.X + rng.normal()) * np.sin(b * y2 / GEOM.Y)
        grad = np.array([dx_spectral(s, GEOM), dy_centered(s, GEOM)])
        ip = GEOM.integrate(pv[0] * grad[0] + pv[1] * grad[1])
        assert abs(ip) < 5e-3 * np.sqrt(GEOM.integrate(pv[0] ** 2 + pv[1] ** 2))


def test_stream_of_velocity_roundtrip_oscillatory():
    x2, y2 = GEOM.grid()
    psi = np.sin(4 * x2 / GEOM.X + 0.3) * np.sin(2 * y2 / GEOM.Y)
    u = velocity_from_stream(psi, GEOM)
    rec = stream_of_velocity(u, GEOM)
    # oscillatory part reconstructed exactly (both go through u2 spectrally)
    assert np.abs(rec - rec.mean(axis=1)[:, None] - psi).max() < 1e-12
