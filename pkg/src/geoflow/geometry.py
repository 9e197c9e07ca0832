"""Channel geometry and discrete calculus.

The domain is [0, X*pi] x [0, Y*pi], periodic in x with Nx points, walls in y
with Ny+1 points (both walls included).  Field arrays are (Ny+1, Nx), row
index y.  x-derivatives are spectral (FFT), y-derivatives second-order
centered with one-sided stencils at the walls.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ChannelGeometry:
    """Channel [0, X*pi] x [0, Y*pi]; periodic in x, walls in y."""

    X: float
    Y: float
    Nx: int = 128
    Ny: int = 64

    def __post_init__(self):
        if self.X <= 0 or self.Y <= 0:
            raise ValueError("X and Y must be positive")
        if not _is_pow2(self.Nx):
            raise ValueError("Nx must be a power of two")
        if self.Ny < 16:
            raise ValueError("Ny must be at least 16")

    @property
    def Lx(self) -> float:
        return self.X * np.pi

    @property
    def Ly(self) -> float:
        return self.Y * np.pi

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return self.Ly / self.Ny

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.Ly, self.Ny + 1)

    @cached_property
    def kappa(self) -> np.ndarray:
        """Physical x-wavenumbers of the rfft modes: 2*m/X for m = 0..Nx/2."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.Nx, d=self.dx)

    @cached_property
    def kappa_d1(self) -> np.ndarray:
        """First-derivative multipliers: kappa with the Nyquist entry zeroed
        (the sampled derivative of the Nyquist mode vanishes on the grid)."""
        k = self.kappa.copy()
        k[-1] = 0.0
        return k

    @cached_property
    def wy(self) -> np.ndarray:
        """Trapezoidal y-quadrature weights (length Ny+1)."""
        w = np.full(self.Ny + 1, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        return w

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X2D, Y2D) with field-array shape (Ny+1, Nx)."""
        return np.meshgrid(self.x, self.y)

    def integrate(self, field: np.ndarray) -> float:
        """Quadrature of a scalar field over the channel."""
        return float(self.dx * (field * self.wy[:, None]).sum())

    def field_shape(self) -> tuple[int, int]:
        return (self.Ny + 1, self.Nx)


def dx_spectral(f: np.ndarray, geom: ChannelGeometry) -> np.ndarray:
    """Spectral x-derivative (Nyquist mode dropped, as usual)."""
    fh = np.fft.rfft(f, axis=1)
    fh *= 1j * geom.kappa_d1[None, :]
    return np.fft.irfft(fh, n=geom.Nx, axis=1)


def dy_centered(f: np.ndarray, geom: ChannelGeometry) -> np.ndarray:
    """Centered second-order y-derivative inside; fourth-order one-sided at
    the walls (wall values feed stream-function reconstructions, where
    low-order one-sided errors would be re-differentiated)."""
    dy = geom.dy
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2 * dy)
    g[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * dy)
    g[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * dy)
    return g


def dy_matrix(geom: ChannelGeometry) -> np.ndarray:
    """Matrix form of dy_centered acting on a single column."""
    n = geom.Ny + 1
    dy = geom.dy
    mat = np.zeros((n, n))
    for j in range(1, n - 1):
        mat[j, j - 1] = -1.0 / (2 * dy)
        mat[j, j + 1] = 1.0 / (2 * dy)
    mat[0, 0], mat[0, 1], mat[0, 2] = -3 / (2 * dy), 4 / (2 * dy), -1 / (2 * dy)
    mat[-1, -1], mat[-1, -2], mat[-1, -3] = 3 / (2 * dy), -4 / (2 * dy), 1 / (2 * dy)
    return mat
