"""Charged channel-flow solvers.

Two mathematically equivalent formulations of the closed loop are provided
and cross-checked:

* vorticity form: the advected scalar is the curl of the fluid momentum
  (which, under the feedback, equals dx(u2) - dy(Phi u1)); the advecting
  velocity comes from the weighted elliptic solve
  d2x psi + dy(Phi dy psi) = omega, u = grad^s psi.

* velocity form: the physical velocity u and charge q evolve under the
  charged Euler equations with Lorentz force q*a0'(y)*(-u2, u1) and the
  feedback q = -gamma a0(y) u1 substituted at every stage; pressure is
  removed by Leray projection.

The uncontrolled equations (gamma = 0, q = 0) are plain 2D incompressible
Euler in either form.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .control import ShearControl, casimir_profile, feedback_charge, uncontrolled
from .elliptic import (LerayProjector, ModifiedPoissonSolver, stream_of_velocity,
                       velocity_from_stream)
from .geometry import ChannelGeometry, dx_spectral, dy_centered
from .rng import XorShift64Star

__all__ = [
    "FluidState",
    "equilibrium_fields",
    "equilibrium_a_const",
    "VorticitySim",
    "ForcedSim",
    "VelocitySim",
    "advect_scalar",
    "modified_vorticity",
    "diagnostics",
    "rayleigh_growth_rate",
    "seeded_perturbation",
    "CFL_LIMIT",
]

CFL_LIMIT = 0.5
DEFAULT_CFL = 0.25


@dataclass
class FluidState:
    """Discretized flow state; omega is the (modified) vorticity field."""

    omega: np.ndarray
    q: np.ndarray | None = None
    u: np.ndarray | None = None
    t: float = 0.0


def equilibrium_fields(geom: ChannelGeometry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shear-flow equilibrium profiles on the y-grid.

    u_e(y) = sin(y + pi/2), psi0(y) = cos(y + pi/2), omega_e(y) = -cos(y + pi/2).
    """
    y = geom.y
    u_e = np.sin(y + 0.5 * np.pi)
    psi0 = np.cos(y + 0.5 * np.pi)
    omega_e = -np.cos(y + 0.5 * np.pi)
    return u_e, omega_e, psi0


def equilibrium_a_const(geom: ChannelGeometry, control: ShearControl | None = None) -> float:
    """Bottom flux constant of the equilibrium under the (possibly modified)
    metric.

    The pinned quantity is Phi * dpsi/dy at the bottom half-point, which for
    the equilibrium momentum equals the flat-metric profile derivative
    psi0'(0) regardless of the control (the modified stream function obeys
    Phi psi_C' = psi0').
    """
    _, _, psi0 = equilibrium_fields(geom)
    return float((psi0[1] - psi0[0]) / geom.dy)


def advect_scalar(f: np.ndarray, psi: np.ndarray, geom: ChannelGeometry) -> np.ndarray:
    """df/dt = -u . grad f for u = grad^s psi, via the conserving Jacobian.

    The discrete integrals of f and f^2 are invariant under the returned
    tendency whenever psi is constant along each wall.
    """
    return -kernels.arakawa_channel(psi, f, geom.dx, geom.dy)


def modified_vorticity(
    u: np.ndarray, q: np.ndarray, control: ShearControl, geom: ChannelGeometry
) -> np.ndarray:
    """Curl of the fluid momentum: dx(u2) - dy(u1 + q a0).

    Under the closed-loop feedback this equals dx(u2) - dy(Phi u1).
    """
    return dx_spectral(u[1], geom) - dy_centered(u[0] + q * control.a0[:, None], geom)


class _TimeStepper:
    """Shared RK4 machinery with CFL checking and substepping."""

    def __init__(self, geom: ChannelGeometry, cfl: float = DEFAULT_CFL):
        self.geom = geom
        self.cfl = cfl

    def stable_dt(self, umax: float) -> float:
        h = min(self.geom.dx, self.geom.dy)
        return self.cfl * h / max(umax, 1e-12)

    def _check_cfl(self, umax: float, dt: float, substep: bool):
        h = min(self.geom.dx, self.geom.dy)
        number = umax * dt / h
        if number > CFL_LIMIT:
            if substep:
                return int(np.ceil(number / self.cfl))
            warnings.warn(
                f"CFL number {number:.3f} exceeds {CFL_LIMIT}; reduce dt or enable substepping",
                RuntimeWarning,
                stacklevel=3,
            )
        return 1


class VorticitySim(_TimeStepper):
    """Closed-loop (or uncontrolled) evolution in vorticity form.

    method='rk4' advances the full advection with classical RK4 under a CFL
    restriction on |u|.  method='lawson' splits off the x-independent base
    shear of the initial state and advects it exactly per Fourier mode
    (integrating-factor RK4); only the residual velocity is stepped
    explicitly.  The controlled metric makes the base shear faster by 1/Phi,
    so the Lawson path is what makes long closed-loop runs affordable; both
    paths agree to time-integration accuracy.
    """

    def __init__(
        self,
        geom: ChannelGeometry,
        control: ShearControl | None = None,
        cfl: float = DEFAULT_CFL,
        hyperviscosity: float = 0.0,
        method: str = "rk4",
    ):
        super().__init__(geom, cfl)
        self.control = control if control is not None else uncontrolled(geom)
        self.solver = ModifiedPoissonSolver(geom, self.control.phi)
        self.a_const = equilibrium_a_const(geom, self.control)
        self.nu4 = hyperviscosity
        if method not in ("rk4", "lawson"):
            raise ValueError("method must be 'rk4' or 'lawson'")
        self.method = method
        self._base_psi = None
        self._base_u = None

    def stream(self, omega: np.ndarray) -> np.ndarray:
        return self.solver.solve(omega, self.a_const)

    def velocity(self, omega: np.ndarray) -> np.ndarray:
        return velocity_from_stream(self.stream(omega), self.geom)

    def rhs(self, omega: np.ndarray) -> np.ndarray:
        psi = self.stream(omega)
        dw = advect_scalar(omega, psi, self.geom)
        if self.nu4 > 0.0:
            dw -= self.nu4 * _biharmonic(omega, self.geom)
        return dw

    def set_base_shear(self, omega: np.ndarray) -> None:
        """Freeze the x-mean shear of a state as the exactly-advected base."""
        wbar = np.broadcast_to(omega.mean(axis=1)[:, None], self.geom.field_shape()).copy()
        self._base_psi = self.stream(wbar)
        self._base_u = -dy_centered(self._base_psi, self.geom)[:, 0]

    def residual_rhs(self, omega: np.ndarray) -> np.ndarray:
        """Advection by the deviation of the stream function from the base."""
        psi_res = self.stream(omega) - self._base_psi
        return advect_scalar(omega, psi_res, self.geom)

    def _lawson_step(self, omega: np.ndarray, h: float) -> np.ndarray:
        geom = self.geom
        nx = geom.Nx
        phase = np.exp(
            -1j * geom.kappa_d1[None, :] * self._base_u[:, None] * 0.5 * h
        )
        phase2 = phase * phase

        def nhat(field):
            return np.fft.rfft(self.residual_rhs(field), axis=1)

        what = np.fft.rfft(omega, axis=1)
        m1 = nhat(omega)
        m2 = nhat(np.fft.irfft(phase * (what + 0.5 * h * m1), n=nx, axis=1))
        m3 = nhat(np.fft.irfft(phase * what + 0.5 * h * m2, n=nx, axis=1))
        m4 = nhat(np.fft.irfft(phase2 * what + h * phase * m3, n=nx, axis=1))
        out = phase2 * what + (h / 6.0) * (phase2 * m1 + 2.0 * phase * (m2 + m3) + m4)
        return np.fft.irfft(out, n=nx, axis=1)

    def step(self, state: FluidState, dt: float, substep: bool = True) -> FluidState:
        if self.method == "lawson":
            if self._base_psi is None:
                self.set_base_shear(state.omega)
            u = self.velocity(state.omega)
            u[0] -= self._base_u[:, None]
            nsub = self._check_cfl(float(np.abs(u).max()), dt, substep)
            h = dt / nsub
            w = state.omega
            for _ in range(nsub):
                w = self._lawson_step(w, h)
            return FluidState(omega=w, t=state.t + dt)
        u = self.velocity(state.omega)
        nsub = self._check_cfl(float(np.abs(u).max()), dt, substep)
        h = dt / nsub
        w = state.omega
        for _ in range(nsub):
            w = _rk4(self.rhs, w, h)
        return FluidState(omega=w, t=state.t + dt)

    #: default accuracy cap on the Lawson step (the phase part is exact at
    #: any dt; this resolves the residual coupling)
    LAWSON_DT_CAP = 0.01

    def run(self, state: FluidState, t_end: float, dt: float | None = None,
            sample_dt: float | None = None, observer=None) -> FluidState:
        """Advance to t_end; call observer(state) at sampling instants."""
        if dt is None:
            u = self.velocity(state.omega)
            if self.method == "lawson":
                if self._base_psi is None:
                    self.set_base_shear(state.omega)
                u[0] = u[0] - self._base_u[:, None]
                dt = min(self.stable_dt(float(np.abs(u).max())), self.LAWSON_DT_CAP)
            else:
                dt = self.stable_dt(float(np.abs(u).max()))
        nsteps = max(1, int(np.ceil((t_end - state.t) / dt)))
        dt = (t_end - state.t) / nsteps
        every = max(1, int(round((sample_dt or dt) / dt)))
        if observer is not None:
            observer(state)
        for i in range(nsteps):
            state = self.step(state, dt)
            if not np.isfinite(state.omega).all():
                raise FloatingPointError(f"non-finite vorticity at step {i + 1}")
            if observer is not None and ((i + 1) % every == 0 or i + 1 == nsteps):
                observer(state)
        return state


class ForcedSim(VorticitySim):
    """Forced-charge bookkeeping of the same closed-loop dynamics.

    The vorticity advances exactly as in VorticitySim; the charge carries the
    applied force

        F = C(dnu/dt) + T (u.grad)(T^-1 C nu) + T (u.grad)(T^-1 q) - (u.grad) q

    so that p = T^-1 (q + C nu) is transported passively.  Runs initialized
    with q0 = -C nu0 keep p = 0 to integration accuracy.
    """

    def charge_feedback(self, omega: np.ndarray) -> np.ndarray:
        """-C nu of the current state (reference charge)."""
        u = self.velocity(omega)
        return feedback_charge(u, self.control)

    def c_of_tangent(self, domega: np.ndarray) -> np.ndarray:
        """C applied to a tangent momentum given by its vorticity."""
        psidot = self.solver.solve(domega, 0.0)
        u1dot = -dy_centered(psidot, self.geom)
        return self.control.gamma * self.control.a0[:, None] * u1dot

    def rhs_pair(self, omega: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        geom = self.geom
        ctl = self.control
        psi = self.stream(omega)
        dw = advect_scalar(omega, psi, geom)
        cnu = ctl.gamma * ctl.a0[:, None] * (-dy_centered(psi, geom))
        cnudot = self.c_of_tangent(dw)
        t_prof = ctl.T_profile[:, None]

        def advected(f):
            return -advect_scalar(f, psi, geom)   # (u . grad) f

        force = (
            cnudot
            + t_prof * advected(cnu / t_prof)
            + t_prof * advected(q / t_prof)
            - advected(q)
        )
        dq = -advected(q) - force
        return dw, dq

    def step_pair(self, state: FluidState, dt: float, substep: bool = True) -> FluidState:
        u = self.velocity(state.omega)
        nsub = self._check_cfl(float(np.abs(u).max()), dt, substep)
        h = dt / nsub
        w, q = state.omega, state.q
        for _ in range(nsub):
            w, q = _rk4_pair(self.rhs_pair, w, q, h)
        return FluidState(omega=w, q=q, t=state.t + dt)

    def momentum_density(self, omega: np.ndarray, q: np.ndarray) -> np.ndarray:
        """p = T^-1 (q + C nu); advected, and zero along p0 = 0 runs."""
        cnu = self.charge_feedback(omega) * -1.0
        return (q + cnu) / self.control.T_profile[:, None]


class VelocitySim(_TimeStepper):
    """Velocity-form charged Euler solver (independent discretization route).

    In closed-loop mode the charge is eliminated by q = -gamma a0 u1 at every
    evaluation; in free mode (q carried as state) the pair (u, q) obeys the
    uncontrolled charged Euler equations.
    """

    def __init__(
        self,
        geom: ChannelGeometry,
        control: ShearControl | None = None,
        closed_loop: bool = True,
        cfl: float = DEFAULT_CFL,
    ):
        super().__init__(geom, cfl)
        self.control = control if control is not None else uncontrolled(geom)
        self.closed_loop = closed_loop
        self.projector = LerayProjector(geom)
        # closed loop: the momentum is mu_C u; free charge: flat metric plus
        # the potential term
        self._solver = ModifiedPoissonSolver(
            geom, self.control.phi if closed_loop else None
        )

    def lorentz(self, u: np.ndarray, q: np.ndarray) -> np.ndarray:
        """q * u x B for B = -a0'(y) z_hat: components q a0' (-u2, u1)."""
        a0d = self.control.a0_deriv[:, None]
        out = np.empty_like(u)
        out[0] = -q * a0d * u[1]
        out[1] = q * a0d * u[0]
        return out

    def rhs(self, u: np.ndarray, q: np.ndarray | None) -> tuple[np.ndarray, np.ndarray | None]:
        geom = self.geom
        if self.closed_loop:
            q = feedback_charge(u, self.control)
        adv = np.empty_like(u)
        for c in (0, 1):
            adv[c] = u[0] * dx_spectral(u[c], geom) + u[1] * dy_centered(u[c], geom)
        du = self.projector.project(self.lorentz(u, q) - adv)
        if self.closed_loop:
            return du, None
        dq = -(u[0] * dx_spectral(q, geom) + u[1] * dy_centered(q, geom))
        return du, dq

    def momentum_vorticity(self, u: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Curl of the fluid momentum dx(Pi_y) - dy(Pi_x), Pi = u-flat + q A0.

        The x-mean sector is a single derivative of the mean momentum profile
        (one differentiation, no wall-error amplification); the oscillatory
        sector goes through the exact spectral stream function and the
        weighted flux-form operator.
        """
        geom = self.geom
        pix_mean = (u[0] + q * self.control.a0[:, None]).mean(axis=1)
        wbar = -dy_centered(pix_mean[:, None], geom)[:, 0]
        # the wall-row mean vorticity is not encoded in the velocity (the
        # stream reconstruction never touches it); extrapolate the profile
        # into the two rows at each wall instead of differentiating there
        for j, src in ((1, (2, 3, 4, 5)), (0, (1, 2, 3, 4))):
            wbar[j] = 4 * wbar[src[0]] - 6 * wbar[src[1]] + 4 * wbar[src[2]] - wbar[src[3]]
        for j, src in ((-2, (-3, -4, -5, -6)), (-1, (-2, -3, -4, -5))):
            wbar[j] = 4 * wbar[src[0]] - 6 * wbar[src[1]] + 4 * wbar[src[2]] - wbar[src[3]]
        psi = stream_of_velocity(u, geom)
        psi_osc = psi - psi.mean(axis=1)[:, None]
        w = self._solver.apply_full(psi_osc)
        if not self.closed_loop:
            extra = q * self.control.a0[:, None]
            if np.any(extra):
                w -= dy_centered(extra - extra.mean(axis=1)[:, None], geom)
        return w - w.mean(axis=1)[:, None] + wbar[:, None]

    def step(self, state: FluidState, dt: float, substep: bool = True) -> FluidState:
        nsub = self._check_cfl(float(np.abs(state.u).max()), dt, substep)
        h = dt / nsub
        u, q = state.u, state.q
        for _ in range(nsub):
            u, q = _rk4_velocity(self.rhs, u, q, h)
        u[1][0, :] = 0.0
        u[1][-1, :] = 0.0
        qq = feedback_charge(u, self.control) if self.closed_loop else q
        return FluidState(omega=self.momentum_vorticity(u, qq),
                          q=qq, u=u, t=state.t + dt)

    def from_vorticity(self, omega: np.ndarray, vort_sim: VorticitySim) -> FluidState:
        """Initial velocity-form state matching a vorticity-form state."""
        u = vort_sim.velocity(omega)
        q = feedback_charge(u, self.control) if self.closed_loop else np.zeros_like(omega)
        return FluidState(omega=omega.copy(), q=q, u=u, t=0.0)


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_pair(f, a, b, h):
    ka1, kb1 = f(a, b)
    ka2, kb2 = f(a + 0.5 * h * ka1, b + 0.5 * h * kb1)
    ka3, kb3 = f(a + 0.5 * h * ka2, b + 0.5 * h * kb2)
    ka4, kb4 = f(a + h * ka3, b + h * kb3)
    return (
        a + (h / 6.0) * (ka1 + 2 * ka2 + 2 * ka3 + ka4),
        b + (h / 6.0) * (kb1 + 2 * kb2 + 2 * kb3 + kb4),
    )


def _rk4_velocity(f, u, q, h):
    ku1, kq1 = f(u, q)
    have_q = kq1 is not None
    ku2, kq2 = f(u + 0.5 * h * ku1, q + 0.5 * h * kq1 if have_q else None)
    ku3, kq3 = f(u + 0.5 * h * ku2, q + 0.5 * h * kq2 if have_q else None)
    ku4, kq4 = f(u + h * ku3, q + h * kq3 if have_q else None)
    unew = u + (h / 6.0) * (ku1 + 2 * ku2 + 2 * ku3 + ku4)
    qnew = q + (h / 6.0) * (kq1 + 2 * kq2 + 2 * kq3 + kq4) if have_q else None
    return unew, qnew


def _biharmonic(w: np.ndarray, geom: ChannelGeometry) -> np.ndarray:
    """Crude biharmonic for the optional hyperviscosity (off by default)."""
    lap = dx_spectral(dx_spectral(w, geom), geom)
    dy2 = np.zeros_like(w)
    dy2[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / geom.dy**2
    lap = lap + dy2
    out = dx_spectral(dx_spectral(lap, geom), geom)
    dy2b = np.zeros_like(w)
    dy2b[1:-1] = (lap[2:] - 2 * lap[1:-1] + lap[:-2]) / geom.dy**2
    return out + dy2b


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    enstrophy: float
    pert_enstrophy: float
    circulation: float
    h2: float
    p_norm: float

    HEADER = "t,energy,enstrophy,pert_enstrophy,circulation,H2,p_norm"

    def row(self) -> str:
        vals = [self.t, self.energy, self.enstrophy, self.pert_enstrophy,
                self.circulation, self.h2, self.p_norm]
        return ",".join(f"{v:.17g}" for v in vals)


class DiagnosticsComputer:
    """Shared diagnostics for all simulation routes (evaluates on vorticity)."""

    def __init__(self, geom: ChannelGeometry, control: ShearControl | None = None):
        self.geom = geom
        self.control = control if control is not None else uncontrolled(geom)
        self.solver = ModifiedPoissonSolver(geom, self.control.phi)
        self.a_const = equilibrium_a_const(geom, self.control)
        _, self.omega_e, _ = equilibrium_fields(geom)
        self.casimir = casimir_profile(self.control) if (
            self.control.design is not None or self.control.gamma == 0
        ) else None
        if self.casimir is not None:
            self._phi_e = self.casimir.phi_c(self.omega_e)
            self._psi_e = self.casimir.psi_c(self.omega_e)

    def compute(self, state: FluidState, p_field: np.ndarray | None = None) -> DiagnosticsRecord:
        geom = self.geom
        w = state.omega
        psi = self.solver.solve(w, self.a_const)
        u = velocity_from_stream(psi, geom)
        phi_col = self.control.phi[:, None]
        energy = 0.5 * geom.integrate(phi_col * u[0] ** 2 + u[1] ** 2)
        enstrophy = geom.integrate(w**2)
        wp = w - self.omega_e[:, None]
        pert_enstrophy = geom.integrate(wp**2)
        circulation = geom.integrate(wp)
        h2 = np.nan
        if self.casimir is not None:
            psi_p = self.solver.solve(wp, 0.0)
            up = velocity_from_stream(psi_p, geom)
            dens = (
                0.5 * (phi_col * up[0] ** 2 + up[1] ** 2)
                + self.casimir.phi_c(w)
                - self._phi_e[:, None]
                - self._psi_e[:, None] * wp
            )
            h2 = geom.integrate(dens)
        p_norm = 0.0
        if p_field is not None:
            p_norm = float(np.sqrt(geom.integrate(p_field**2)))
        return DiagnosticsRecord(state.t, energy, enstrophy, pert_enstrophy,
                                 circulation, float(h2), p_norm)


def diagnostics(state: FluidState, control: ShearControl | None,
                geom: ChannelGeometry) -> DiagnosticsRecord:
    """One-shot diagnostics record (kinetic energy, enstrophies, circulation,
    the conserved quadratic-Casimir functional of the perturbation, p-norm)."""
    return DiagnosticsComputer(geom, control).compute(state)


def rayleigh_growth_rate(
    geom: ChannelGeometry, n_modes: int = 8, ny: int | None = None
) -> tuple[float, dict]:
    """Largest growth rate of the linearized vorticity advection about the
    shear equilibrium, scanned over the channel's x-wavenumbers 2m/X.

    Returns (rate, info) where info carries the maximizing wavenumber index,
    the wavenumber, and the vorticity eigenmode on the interior y-grid.
    """
    ny = ny or geom.Ny
    ell = geom.Ly
    yin = np.linspace(0.0, ell, ny + 1)[1:-1]
    h = ell / ny
    n = len(yin)
    prof_u = np.sin(yin + 0.5 * np.pi)
    prof_we = np.sin(yin + 0.5 * np.pi)   # d(omega_e)/dy equals the velocity profile
    d2 = (
        np.diag(np.full(n - 1, 1.0), -1)
        + np.diag(np.full(n, -2.0))
        + np.diag(np.full(n - 1, 1.0), 1)
    ) / h**2
    best_rate = -np.inf
    best = {}
    n_modes = min(n_modes, geom.Nx // 2)
    for m in range(1, n_modes + 1):
        kap = 2.0 * m / geom.X
        try:
            smat = np.linalg.inv(d2 - kap**2 * np.eye(n))
        except np.linalg.LinAlgError:
            raise RuntimeError("eigensolver setup failed: singular Laplacian")
        mat = -1j * kap * (np.diag(prof_u) + np.diag(prof_we) @ smat)
        vals, vecs = np.linalg.eig(mat)
        idx = int(np.argmax(vals.real))
        if vals[idx].real > best_rate:
            best_rate = float(vals[idx].real)
            best = {"m": m, "kappa": kap, "eigenvalue": vals[idx],
                    "mode": vecs[:, idx], "y": yin}
    return best_rate, best


def seeded_perturbation(
    geom: ChannelGeometry,
    amplitude: float,
    seed: int,
    m_modes: int = 4,
    n_modes: int = 4,
) -> np.ndarray:
    """Smooth zero-circulation vorticity perturbation with reproducible phases.

    Superposition of sin(n y/Y) cos(2m x/X + theta) modes (m >= 1, so the
    x-mean vanishes identically); scaled so that its L2 norm equals
    amplitude * ||omega_e||_L2.
    """
    rng = XorShift64Star(seed)
    x2d, y2d = geom.grid()
    w = np.zeros(geom.field_shape())
    for m in range(1, m_modes + 1):
        for n in range(1, n_modes + 1):
            coef = rng.uniform_signed()
            theta = 2.0 * np.pi * rng.uniform()
            w += coef * np.sin(n * y2d / geom.Y) * np.cos(2.0 * m * x2d / geom.X + theta)
    _, omega_e, _ = equilibrium_fields(geom)
    target = amplitude * np.sqrt(geom.integrate(omega_e[:, None] ** 2 * np.ones_like(w)))
    norm = np.sqrt(geom.integrate(w**2))
    if norm == 0:
        return w
    return w * (target / norm)
