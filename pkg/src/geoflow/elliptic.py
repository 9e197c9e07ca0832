"""Elliptic solvers on the channel.

ModifiedPoissonSolver inverts the divergence-form operator

    L psi = d2x psi + dy(Phi(y) dy psi) = omega

spectrally in x (the y-profile Phi makes each x-mode an independent
tridiagonal system).  Phi = 1 recovers the standard Poisson solve.

Wall conditions: psi = 0 at y = 0; the x-mean sector is pinned by a
prescribed bottom-wall flux constant

    A = Phi_{1/2} (psibar_1 - psibar_0) / dy,

the discrete mean momentum density at the lower wall.  Holding A fixed along
a run conserves the circulation of the mean flow around the bottom wall
(Kelvin), which fixes the top-wall constant c(t) implicitly.  A = 0 is the
perturbation convention (no circulation change at either wall for zero-mean
vorticity).

LerayProjector removes the gradient part of a velocity field: P(v) = v - grad g
with div grad g = div v and Neumann data grad g . n = v . n, making P(v)
tangent to the walls and discretely divergence-free at interior rows.
"""

from __future__ import annotations

import numpy as np


from . import kernels
from .geometry import ChannelGeometry, dx_spectral, dy_centered, dy_matrix


class MetricNotPositiveError(ValueError):
    """The control profile violates Phi > 0 on the grid."""


class ModifiedPoissonSolver:
    """Tridiagonal-per-mode solver for d2x + dy(Phi dy)."""

    def __init__(self, geom: ChannelGeometry, phi_profile: np.ndarray | None = None):
        self.geom = geom
        ny = geom.Ny
        if phi_profile is None:
            phi_profile = np.ones(ny + 1)
        phi_profile = np.asarray(phi_profile, dtype=float)
        if phi_profile.shape != (ny + 1,):
            raise ValueError(f"phi profile must have shape ({ny + 1},)")
        if phi_profile.min() <= 0:
            raise MetricNotPositiveError(
                f"metric not positive definite: min Phi = {phi_profile.min():g}"
            )
        self.phi = phi_profile
        self.phi_half = 0.5 * (phi_profile[:-1] + phi_profile[1:])

        dy = geom.dy
        kap = geom.kappa
        nin = ny - 1                       # interior y rows
        nmod = len(kap) - 1                # nonzero modes
        lower = np.zeros((nmod, nin))
        diag = np.zeros((nmod, nin))
        upper = np.zeros((nmod, nin))
        ph = self.phi_half
        for j in range(1, ny):
            r = j - 1
            lower[:, r] = ph[j - 1] / dy**2
            upper[:, r] = ph[j] / dy**2
            diag[:, r] = -(ph[j] + ph[j - 1]) / dy**2 - kap[1:] ** 2
        # real and imaginary parts share the same matrices
        self._factors = kernels.thomas_factor(
            np.vstack([lower, lower]), np.vstack([diag, diag]), np.vstack([upper, upper])
        )
        self._nmod = nmod
        self._nin = nin

    def solve(self, omega: np.ndarray, a_const: float = 0.0) -> np.ndarray:
        """Solve L psi = omega with psi(y=0) = 0 and bottom flux constant A."""
        geom = self.geom
        ny = geom.Ny
        what = np.fft.rfft(omega, axis=1)

        rhs = np.empty((2 * self._nmod, self._nin))
        rhs[: self._nmod] = what[1:-1, 1:].real.T
        rhs[self._nmod :] = what[1:-1, 1:].imag.T
        sol = kernels.thomas_solve(self._factors, np.ascontiguousarray(rhs))

        psihat = np.zeros_like(what)
        psihat[1:-1, 1:] = (sol[: self._nmod] + 1j * sol[self._nmod :]).T

        # x-mean sector: integrate the flux form from the pinned bottom value
        wbar = what[:, 0].real / geom.Nx
        fhalf = a_const + geom.dy * np.concatenate(([0.0], np.cumsum(wbar[1:ny])))
        psibar = np.concatenate(([0.0], geom.dy * np.cumsum(fhalf / self.phi_half)))
        psihat[:, 0] = psibar * geom.Nx

        return np.fft.irfft(psihat, n=geom.Nx, axis=1)

    def a_const_of(self, psi: np.ndarray) -> float:
        """Bottom flux constant of a stream function (x-mean sector)."""
        psibar = psi.mean(axis=1)
        return float(self.phi_half[0] * (psibar[1] - psibar[0]) / self.geom.dy)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Discrete L psi on interior rows (wall rows returned as zero)."""
        geom = self.geom
        dy = geom.dy
        out = np.zeros_like(psi)
        ph = self.phi_half
        flux = (psi[1:] - psi[:-1]) / dy * ph[:, None]
        out[1:-1] = (flux[1:] - flux[:-1]) / dy
        psih = np.fft.rfft(psi, axis=1)
        psih *= -geom.kappa[None, :] ** 2
        out[1:-1] += np.fft.irfft(psih, n=geom.Nx, axis=1)[1:-1]
        return out

    def apply_full(self, psi: np.ndarray) -> np.ndarray:
        """L psi with one-sided second-order flux differences at the walls."""
        geom = self.geom
        dy = geom.dy
        out = self.apply(psi)
        ph = self.phi_half
        flux = (psi[1:] - psi[:-1]) / dy * ph[:, None]
        out[0] = (-2.0 * flux[0] + 3.0 * flux[1] - flux[2]) / dy
        out[-1] = (2.0 * flux[-1] - 3.0 * flux[-2] + flux[-3]) / dy
        psih = np.fft.rfft(psi[[0, -1]], axis=1)
        psih *= -geom.kappa[None, :] ** 2
        walls = np.fft.irfft(psih, n=geom.Nx, axis=1)
        out[0] += walls[0]
        out[-1] += walls[1]
        return out

    def residual(self, psi: np.ndarray, omega: np.ndarray) -> float:
        """Relative interior residual ||L psi - omega||_2 / ||omega||_2."""
        r = self.apply(psi)[1:-1] - omega[1:-1]
        denom = np.linalg.norm(omega[1:-1])
        return float(np.linalg.norm(r) / denom) if denom > 0 else float(np.linalg.norm(r))

    def velocity(self, psi: np.ndarray) -> np.ndarray:
        """u = (-dy psi, dx psi); shape (2, Ny+1, Nx)."""
        return velocity_from_stream(psi, self.geom)

    def kinetic_energy(self, psi: np.ndarray) -> float:
        """0.5 * int (Phi u1^2 + u2^2) for the stream function's velocity."""
        u1, u2 = self.velocity(psi)
        return 0.5 * self.geom.integrate(self.phi[:, None] * u1**2 + u2**2)


def stream_of_velocity(u: np.ndarray, geom: ChannelGeometry) -> np.ndarray:
    """Stream function of a divergence-free tangent field (psi(y=0) = 0).

    Oscillatory x-modes come spectrally from u2 (psi_m = u2_m / (i kappa));
    the x-mean profile integrates -u1 by the trapezoid rule.  Built from
    integrals rather than derivatives, so wall rows carry no one-sided
    differentiation error.
    """
    u1h = np.fft.rfft(u[0], axis=1)
    u2h = np.fft.rfft(u[1], axis=1)
    psih = np.zeros_like(u2h)
    kap = geom.kappa_d1
    psih[:, 1:-1] = u2h[:, 1:-1] / (1j * kap[None, 1:-1])
    ub = u1h[:, 0].real / geom.Nx
    psibar = np.concatenate(
        ([0.0], -np.cumsum(0.5 * (ub[:-1] + ub[1:]) * geom.dy))
    )
    psih[:, 0] = psibar * geom.Nx
    return np.fft.irfft(psih, n=geom.Nx, axis=1)


def velocity_from_stream(psi: np.ndarray, geom: ChannelGeometry) -> np.ndarray:
    """u = grad^s psi = (-dy psi, dx psi).

    Divergence-free by commutation of the spectral x-derivative with the
    centered y-derivative; tangent to the walls whenever psi is constant
    along each wall.
    """
    u = np.empty((2,) + psi.shape)
    u[0] = -dy_centered(psi, geom)
    u[1] = dx_spectral(psi, geom)
    return u


class LerayProjector:
    """P(v) = v - grad g, with div grad g = div v and Neumann data v . n."""

    def __init__(self, geom: ChannelGeometry):
        self.geom = geom
        n = geom.Ny + 1
        dmat = dy_matrix(geom)
        self._dy = dmat
        kap = geom.kappa
        # modes 1 .. Nx/2-1; the Nyquist sector has no grid-visible x-derivative
        # and is handled like the x-mean sector.  Inverses are stacked so one
        # batched matmul resolves all modes per projection.
        invs = []
        for m in range(1, len(kap) - 1):
            a = dmat @ dmat - kap[m] ** 2 * np.eye(n)
            a[0, :] = dmat[0, :]
            a[-1, :] = dmat[-1, :]
            cond = np.linalg.cond(a)
            if not np.isfinite(cond) or cond > 1e12:
                raise RuntimeError(f"projection solve singular at mode {m}")
            invs.append(np.linalg.inv(a))
        self._inv_stack = np.stack(invs) if invs else np.zeros((0, n, n))

    def project(self, u: np.ndarray) -> np.ndarray:
        """Project (2, Ny+1, Nx) velocity onto tangent divergence-free fields."""
        geom = self.geom
        v1, v2 = u
        v1h = np.fft.rfft(v1, axis=1)
        v2h = np.fft.rfft(v2, axis=1)
        kap = geom.kappa_d1
        divh = 1j * kap[None, :] * v1h + self._dy @ v2h

        ghat = np.zeros_like(v1h)
        nm = len(kap) - 2
        if nm > 0:
            rhs = divh[:, 1:-1].T.copy()            # (nm, n)
            rhs[:, 0] = v2h[0, 1:-1]
            rhs[:, -1] = v2h[-1, 1:-1]
            sol = np.matmul(self._inv_stack, rhs[:, :, None])[:, :, 0]
            ghat[:, 1:-1] = sol.T
        # x-mean and Nyquist sectors: no grid-visible x-derivative, so the
        # tangent divergence-free part is (v1, 0); the vertical part is pure
        # gradient.
        out = np.empty_like(u)
        g1h = 1j * kap[None, :] * ghat
        g2h = self._dy @ ghat
        g2h[:, 0] = v2h[:, 0]
        g2h[:, -1] = v2h[:, -1]
        out[0] = v1 - np.fft.irfft(g1h, n=geom.Nx, axis=1)
        out[1] = v2 - np.fft.irfft(g2h, n=geom.Nx, axis=1)
        return out

    def divergence(self, u: np.ndarray) -> np.ndarray:
        """Discrete divergence (interior rows; wall rows zeroed)."""
        d = dx_spectral(u[0], self.geom) + self._dy @ u[1]
        d[0] = 0.0
        d[-1] = 0.0
        return d
