import numpy as np
import pytest
from scipy.integrate import quad

from geoflow.control import designed_control, uncontrolled
from geoflow.fluid import equilibrium_fields
from geoflow.geometry import ChannelGeometry
from geoflow.stability import (definiteness, diameter_bound, drifted_setup,
                               fll_bound, lambda1_drifted, lambda1_separable,
                               reverse_poincare_check, second_variation_matrix,
                               second_variation_value)

GEOM = ChannelGeometry(2.0, 0.9, Nx=64, Ny=32)


def test_definiteness_trivial_cases():
    assert definiteness(np.eye(3)) == (1.0, 1.0)
    assert definiteness(np.diag([-1.0, -2.0])) == (-1.0, -2.0)


def test_definiteness_matches_dense_oracle():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(40, 40))
    sym = 0.5 * (a + a.T)
    hi, lo = definiteness(sym)
    ev = np.linalg.eigvalsh(sym)
    assert abs(hi - ev[-1]) < 1e-8
    assert abs(lo - ev[0]) < 1e-8


def test_definiteness_iterative_path():
    import scipy.sparse as sp

    diag = np.linspace(-3.0, 7.0, 200)
    mat = sp.diags(diag).tocsr()
    hi, lo = definiteness(mat)
    assert abs(hi - 7.0) < 1e-6
    assert abs(lo + 3.0) < 1e-6


def test_second_variation_controlled_negative():
    control = designed_control(GEOM)
    form = second_variation_matrix(control, GEOM)
    hi, lo = form.extremal_eigenvalues()
    assert hi < 0
    assert lo < hi


def test_second_variation_uncontrolled_signs():
    """Frozen oracle results: with walls narrower than the profile half-period
    the uncontrolled form stays negative definite at every channel length;
    a genuinely wide channel shows the sign flip."""
    for X in (0.3, 2.0):
        geom = ChannelGeometry(X, 0.9, Nx=32, Ny=32)
        hi, _ = second_variation_matrix(uncontrolled(geom), geom).extremal_eigenvalues()
        assert hi < 0, f"X={X}"
    wide = ChannelGeometry(4.0, 1.5, Nx=32, Ny=32)
    hi, _ = second_variation_matrix(uncontrolled(wide), wide).extremal_eigenvalues()
    assert hi > 0


def test_second_variation_sign_consistent_with_condition_report():
    """Whenever the condition report passes, the form is negative definite
    (the sufficient direction of the definiteness criterion); scanned over a
    gamma scaling of the designed control."""
    from geoflow.control import condition_report, designed_control

    geom = ChannelGeometry(2.0, 0.9, Nx=32, Ny=32)
    for gamma in (1.0, 0.9, 0.5, 0.1, 0.0):
        control = designed_control(geom, gamma=gamma) if gamma else uncontrolled(geom)
        rep = condition_report(control, geom)
        hi, _ = second_variation_matrix(control, geom).extremal_eigenvalues()
        if rep.passed:
            assert hi < 0, f"gamma={gamma}: report passes but max eig {hi:.3e}"


def test_second_variation_matrix_is_block_spectrum():
    control = designed_control(GEOM)
    form = second_variation_matrix(control, GEOM, resolution=24)
    dense = form.matrix
    assert np.abs(dense - dense.T).max() < 1e-12
    ev = np.linalg.eigvalsh(dense)
    hi, lo = form.extremal_eigenvalues()
    assert abs(ev[-1] - hi) < 1e-10
    assert abs(ev[0] - lo) < 1e-10


def test_second_variation_value_matches_matrix_scale():
    """Matrix-free evaluation agrees with the blocks on single-mode inputs."""
    control = designed_control(GEOM)
    form = second_variation_matrix(control, GEOM)
    x2, y2 = GEOM.grid()
    m, n = 2, 1
    dw = np.cos(2 * m * x2 / GEOM.X) * np.sin(n * y2 / GEOM.Y)
    val = second_variation_value(control, GEOM, dw)
    # project onto the block of wavenumber m: coefficients of sin(n y/Y)
    blk = form.blocks[m]
    f = np.sin(n * GEOM.y[1:-1] / GEOM.Y)
    quadratic = f @ blk @ f
    assert abs(val - quadratic) / abs(quadratic) < 2e-2


def _advect(f, v, geom):
    from geoflow.geometry import dx_spectral, dy_centered

    return v[0] * dx_spectral(f, geom) + v[1] * dy_centered(f, geom)


def test_second_variation_finite_difference_consistency():
    """The quadratic form matches the centered second difference of the
    restricted energy along the coadjoint flow, at order >= 2 in the step."""
    from geoflow.elliptic import ModifiedPoissonSolver, velocity_from_stream
    from geoflow.fluid import equilibrium_a_const

    geom = ChannelGeometry(2.0, 0.9, Nx=64, Ny=64)
    control = designed_control(geom)
    solver = ModifiedPoissonSolver(geom, control.phi)
    a_e = equilibrium_a_const(geom, control)
    _, omega_e, _ = equilibrium_fields(geom)
    w_e = np.broadcast_to(omega_e[:, None], geom.field_shape()).copy()

    def h_c(w):
        return solver.kinetic_energy(solver.solve(w, a_e))

    rng = np.random.default_rng(1)
    x2, y2 = geom.grid()
    for trial in range(10):
        a, b = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        chi = np.sin(2 * a * x2 / geom.X + rng.normal()) * np.sin(b * y2 / geom.Y)
        v = velocity_from_stream(chi, geom)
        lv = _advect(w_e, v, geom)
        lv2 = _advect(lv, v, geom)
        sv = second_variation_value(control, geom, lv)

        def fd(t):
            wp = w_e + t * lv + 0.5 * t**2 * lv2
            wm = w_e - t * lv + 0.5 * t**2 * lv2
            return (h_c(wp) - 2 * h_c(w_e) + h_c(wm)) / t**2

        f1, f2, f4 = fd(1e-3), fd(2e-3), fd(4e-3)
        # order >= 2 in the step: Richardson ratio of successive differences
        if abs(f2 - f1) > 1e-9 * abs(f1):
            ratio = abs(f4 - f2) / abs(f2 - f1)
            assert ratio > 3.0, f"trial {trial}: t-order ratio {ratio:.2f}"
        # the t-limit agrees with the closed form at spatial accuracy
        assert abs(f1 - sv) < 2.5e-2 * abs(sv), f"trial {trial}"


def test_second_variation_fd_gap_is_second_order_in_space():
    from geoflow.elliptic import ModifiedPoissonSolver, velocity_from_stream
    from geoflow.fluid import equilibrium_a_const

    gaps = []
    for ny in (32, 64):
        geom = ChannelGeometry(2.0, 0.9, Nx=64, Ny=ny)
        control = designed_control(geom)
        solver = ModifiedPoissonSolver(geom, control.phi)
        a_e = equilibrium_a_const(geom, control)
        _, omega_e, _ = equilibrium_fields(geom)
        w_e = np.broadcast_to(omega_e[:, None], geom.field_shape()).copy()
        x2, y2 = geom.grid()
        chi = np.sin(2 * x2 / geom.X) * np.sin(y2 / geom.Y)
        v = velocity_from_stream(chi, geom)
        lv = _advect(w_e, v, geom)
        lv2 = _advect(lv, v, geom)
        sv = second_variation_value(control, geom, lv)
        t = 1e-3
        wp = w_e + t * lv + 0.5 * t**2 * lv2
        wm = w_e - t * lv + 0.5 * t**2 * lv2
        fd = (solver.kinetic_energy(solver.solve(wp, a_e))
              - 2 * solver.kinetic_energy(solver.solve(w_e, a_e))
              + solver.kinetic_energy(solver.solve(wm, a_e))) / t**2
        gaps.append(abs(fd - sv))
    assert gaps[1] < 0.35 * gaps[0]


def test_drifted_setup_identity_profile():
    setup = drifted_setup(uncontrolled(GEOM), GEOM)
    assert np.abs(setup.z_nodes - setup.y_nodes).max() < 1e-12
    assert abs(setup.Z_gamma - GEOM.Ly) < 1e-12
    assert np.abs(setup.g_nodes).max() < 1e-14
    assert setup.K == 0.0


def test_drifted_setup_constant_quarter():
    from geoflow.control import explicit_control

    # Phi = 1/4 via gamma a0^2 = 3/4
    control = explicit_control(GEOM, 0.75, 1.0)
    setup = drifted_setup(control, GEOM)
    assert np.abs(setup.z_nodes - 2.0 * setup.y_nodes).max() < 1e-10
    assert abs(setup.Z_gamma - 2.0 * GEOM.Ly) < 1e-10


def test_drifted_setup_roundtrip_and_quadrature_oracle():
    control = designed_control(GEOM)
    setup = drifted_setup(control, GEOM)
    y = np.linspace(0.0, GEOM.Ly, 33)
    z = np.array([quad(lambda s: 1.0 / np.sqrt(setup._phi_fun(s)), 0.0, yv,
                       limit=200, epsabs=1e-13)[0] for yv in y])
    back = setup.y_of_z(z)
    assert np.abs(back - y).max() < 1e-10
    # Z_gamma against a refined quadrature oracle
    zq, _ = quad(lambda s: 1.0 / np.sqrt(setup._phi_fun(s)), 0.0, GEOM.Ly,
                 limit=500, epsabs=1e-12, epsrel=1e-12)
    assert abs(setup.Z_gamma - zq) / zq < 1e-8
    assert setup.K == 0.0
    assert setup.Z_gamma >= GEOM.Ly


def test_lambda1_square_and_rectangle():
    # g = 0, domain [0, pi]^2: lambda1 = 2
    geom = ChannelGeometry(1.0, 1.0 - 1e-12, Nx=32, Ny=32)
    setup = drifted_setup(uncontrolled(geom), geom)
    lam = lambda1_drifted(setup, geom, resolution=48)
    assert abs(lam - 2.0) < 4e-3
    # rectangle [0, 2 pi] x [0, 0.8 pi]: lambda1 = 1/4 + 1/0.64
    geom = ChannelGeometry(2.0, 0.8, Nx=32, Ny=32)
    setup = drifted_setup(uncontrolled(geom), geom)
    lam = lambda1_drifted(setup, geom, resolution=48)
    expect = 0.25 + 1.0 / 0.64
    assert abs(lam - expect) < 8e-3 * expect


def test_lambda1_designed_control_bound():
    control = designed_control(GEOM)
    setup = drifted_setup(control, GEOM)
    lam = lambda1_drifted(setup, GEOM, resolution=64)
    bound = diameter_bound(setup, GEOM)
    assert lam >= bound
    # separable oracle agrees
    sep = lambda1_separable(setup, GEOM, nz=1024)
    assert abs(lam - sep) < 2e-2 * sep


def test_lambda1_bound_sweep():
    for X in (0.5, 2.0):
        for Y in (0.6, 0.9):
            geom = ChannelGeometry(X, Y, Nx=32, Ny=32)
            control = designed_control(geom)
            setup = drifted_setup(control, geom)
            for res in (32, 64):
                lam = lambda1_drifted(setup, geom, resolution=res)
                assert lam >= diameter_bound(setup, geom)


def test_fll_bound_cases():
    assert abs(fll_bound(np.pi, 0.0) - 1.0) < 1e-15
    d2 = np.pi**2 * 4 + 3.0**2
    assert abs(fll_bound(np.sqrt(d2), 0.0) - np.pi**2 / d2) < 1e-15
    d = 2.0
    kstar = 4.0 * np.pi**2 / d**2
    assert abs(fll_bound(d, kstar) - kstar) < 1e-12
    # 1-D maximization oracle over an s-grid
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = float(rng.uniform(0.5, 10.0))
        k = float(rng.uniform(-5.0, 5.0))
        s = np.linspace(1e-6, 1 - 1e-6, 20001)
        grid_max = (4 * s * (1 - s) * np.pi**2 / d**2 + s * k).max()
        assert fll_bound(d, k) >= grid_max - 1e-6
        assert fll_bound(d, k) <= grid_max + max(1e-6, 1e-4 * abs(grid_max)) + 1e-4


def test_reverse_poincare():
    control = designed_control(GEOM)
    setup = drifted_setup(control, GEOM)
    res = 32
    zs = np.linspace(0.0, setup.Z_gamma, res + 1)[1:-1]
    xs = np.linspace(0.0, GEOM.Lx, res + 1)[1:-1]
    x2, z2 = np.meshgrid(xs, zs)
    trials = [np.sin(np.pi * x2 / GEOM.Lx) * np.sin(np.pi * z2 / setup.Z_gamma)]
    rng = np.random.default_rng(4)
    for _ in range(20):
        a, b = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        trials.append(np.sin(a * np.pi * x2 / GEOM.Lx)
                      * np.sin(b * np.pi * z2 / setup.Z_gamma) * rng.normal())
    assert reverse_poincare_check(setup, GEOM, trials, resolution=res)


def test_reverse_poincare_eigenfunction_saturates():
    """On the square with g = 0 the first eigenmode attains equality."""
    import scipy.sparse as sp

    geom = ChannelGeometry(1.0, 1.0 - 1e-12, Nx=32, Ny=32)
    setup = drifted_setup(uncontrolled(geom), geom)
    from geoflow.stability import _weighted_operator

    amat, bmat = _weighted_operator(setup, geom, 32, 32)
    lam = lambda1_drifted(setup, geom, resolution=32)
    import scipy.sparse.linalg as spla

    vals, vecs = spla.eigsh(amat, k=1, M=bmat, sigma=0.0, which="LM")
    v = vecs[:, 0]
    lgv = -(amat @ v) / bmat.diagonal()
    lhs = float(lgv @ (bmat @ lgv))
    rhs = -vals[0] * float(v @ (bmat @ lgv))
    assert abs(lhs - rhs) < 1e-6 * abs(lhs)
