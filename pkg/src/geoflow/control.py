"""Construction of the stabilizing charge control for the channel shear flow.

The control is parametrized by a scalar gain gamma and a potential profile
a0(y); the modified kinetic-energy metric weights the x-velocity by
Phi(y) = 1 - gamma*a0(y)^2, which must stay positive.  The designed profile
composes a linear map b with the equilibrium vorticity,

    a0(y) = b(omega_e(y)),   b(w) = b_bar - (b_bar - b_under) * w,

with the constants fixed by the channel aspect so the formal-stability
conditions hold with margin r:

    r = (1 - Y^2)/3,  alpha = r/X^2,  beta = (Y^2 + r)/Y^2,
    b_bar = sqrt(1 - alpha/beta),  b_under = sqrt(1 - alpha),

and alpha*X^2 + beta*Y^2 = 1 - r exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .geometry import ChannelGeometry

__all__ = [
    "DesignConstants",
    "ShearControl",
    "design_constants",
    "a0_profile",
    "designed_control",
    "explicit_control",
    "apply_C",
    "feedback_charge",
    "condition_report",
    "ConditionReport",
    "casimir_profile",
    "CasimirProfile",
    "enstrophy_bound",
    "default_epsilon",
    "kappa_margin",
    "equilibrium_vorticity",
]


@dataclass(frozen=True)
class DesignConstants:
    b_bar: float
    b_under: float
    alpha: float
    beta: float
    r: float


def design_constants(X: float, Y: float, allow_narrow: bool = False) -> DesignConstants:
    """Profile constants for the channel [0, X*pi] x [0, Y*pi].

    Requires 1/2 <= Y < 1.  Narrow channels (Y < 1/2) are allowed behind the
    flag; the b-map is then rescaled by the maximum equilibrium vorticity.
    """
    if Y >= 1.0:
        raise ValueError("width out of validity range: Y must be < 1")
    if X <= 0:
        raise ValueError("X must be positive")
    if Y < 0.5 and not allow_narrow:
        raise ValueError("Y < 1/2 requires allow_narrow=True (rescaled b-map)")
    r = (1.0 - Y * Y) / 3.0
    alpha = r / (X * X)
    beta = (Y * Y + r) / (Y * Y)
    if alpha >= 1.0:
        raise ValueError(f"channel too short: alpha = {alpha:g} >= 1")
    return DesignConstants(
        b_bar=math.sqrt(1.0 - alpha / beta),
        b_under=math.sqrt(1.0 - alpha),
        alpha=alpha,
        beta=beta,
        r=r,
    )


def equilibrium_vorticity(y) -> np.ndarray:
    """omega_e(y) = -cos(y + pi/2)."""
    return -np.cos(np.asarray(y, dtype=float) + 0.5 * np.pi)


def b_map(w, design: DesignConstants, w_max: float = 1.0) -> np.ndarray:
    """Linear profile map b(w) = b_bar - (b_bar - b_under) * w / w_max."""
    return design.b_bar - (design.b_bar - design.b_under) * np.asarray(w, dtype=float) / w_max


def a0_profile(design: DesignConstants, y_grid, w_max: float = 1.0) -> np.ndarray:
    """Potential samples a0(y) = b(omega_e(y)); values in [b_under, b_bar]."""
    return b_map(equilibrium_vorticity(y_grid), design, w_max)


def default_epsilon(design: DesignConstants) -> float:
    """Largest extension margin with kappa * Phi_max <= r/2 (closed form)."""
    phimax = design.alpha
    d = design.r * phimax / (2.0 - design.r)
    disc = design.b_under**2 - d
    if disc <= 0:
        raise ValueError("extension margin too large")
    return design.b_under - math.sqrt(disc)


def kappa_margin(design: DesignConstants, eps: float) -> float:
    """Convexity defect of the extended Casimir density.

    kappa = e(2b - e) / (Phi_max * (Phi_max + (2b - e) e)) with b = b_under.
    """
    phimax = design.alpha
    d = (2.0 * design.b_under - eps) * eps
    return d / (phimax * (phimax + d))


def _ramp(s: np.ndarray) -> np.ndarray:
    """Quintic ramp: value/slope/curvature (0,0,0) at s=0 and (1/2,1,0) at s=1."""
    return s**3 - 0.5 * s**4


def smooth_clamp(v, lo: float, hi: float, w: float) -> np.ndarray:
    """C^2 clamp of v into [lo, hi]; identity on [lo+w, hi-w]."""
    if not (w > 0 and lo + w <= hi - w):
        raise ValueError("invalid clamp window")
    v = np.asarray(v, dtype=float)
    out = v.copy()
    out[v <= lo - w] = lo
    out[v >= hi + w] = hi
    band = (v > lo - w) & (v < lo + w)
    s = (v[band] - (lo - w)) / (2.0 * w)
    out[band] = lo + 2.0 * w * _ramp(s)
    band = (v > hi - w) & (v < hi + w)
    s = ((hi + w) - v[band]) / (2.0 * w)
    out[band] = hi - 2.0 * w * _ramp(s)
    return out


def b_extended(w, design: DesignConstants, eps: float, w_max: float = 1.0) -> np.ndarray:
    """b continued to the real line, C^2-clamped into [b_under-eps, b_bar+eps].

    Coincides with the linear b on [0, w_max]; the clamp bands have half-width
    eps/2 so the extended range is exactly [b_under - eps, b_bar + eps].
    """
    raw = b_map(w, design, w_max)
    return smooth_clamp(raw, design.b_under - eps, design.b_bar + eps, 0.5 * eps)


@dataclass(frozen=True)
class ShearControl:
    """Charge-control data on a channel grid.

    gamma      : scalar control gain
    a0         : potential samples on the y-grid
    a0_deriv   : da0/dy samples
    phi        : Phi(y) = 1 - gamma a0^2 samples (must be positive)
    phi_max/min: extremes of Phi over the width (analytic for designed controls)
    design     : designed-profile constants, or None for explicit controls
    eps        : Casimir extension margin (designed controls)
    """

    geom: ChannelGeometry
    gamma: float
    a0: np.ndarray
    a0_deriv: np.ndarray
    phi: np.ndarray
    phi_max: float
    phi_min: float
    design: DesignConstants | None = None
    eps: float = 0.0
    w_max: float = 1.0

    @property
    def T_profile(self) -> np.ndarray:
        """Momentum rescaling T(y) = (1 + gamma) / Phi(y)."""
        return (1.0 + self.gamma) / self.phi

    def phi_of_vorticity(self, w) -> np.ndarray:
        """Extended metric weight 1 - gamma*b_ext(w)^2 as a function of vorticity.

        Only available for designed controls.
        """
        if self.design is None:
            raise ValueError("extended profile requires a designed control")
        return 1.0 - self.gamma * b_extended(w, self.design, self.eps, self.w_max) ** 2


def designed_control(
    geom: ChannelGeometry,
    gamma: float = 1.0,
    eps: float | None = None,
    allow_narrow: bool = False,
) -> ShearControl:
    """Theorem-designed control on the grid (gamma defaults to 1)."""
    w_max = 1.0
    if geom.Y < 0.5:
        w_max = float(np.sin(geom.Ly))
    design = design_constants(geom.X, geom.Y, allow_narrow=allow_narrow)
    if eps is None:
        eps = default_epsilon(design)
    y = geom.y
    a0 = a0_profile(design, y, w_max)
    # a0'(y) = -(b_bar - b_under) * omega_e'(y) / w_max,  omega_e' = sin(y+pi/2)
    a0d = -(design.b_bar - design.b_under) * np.sin(y + 0.5 * np.pi) / w_max
    phi = 1.0 - gamma * a0**2
    if phi.min() <= 0:
        raise ValueError("metric not positive definite for this gamma")
    # analytic extremes: a0 in [b_under, b_bar] for 1/2 <= Y < 1
    if gamma > 0:
        phi_max = 1.0 - gamma * design.b_under**2
        phi_min = 1.0 - gamma * design.b_bar**2
    else:
        phi_max = 1.0 - gamma * design.b_bar**2
        phi_min = 1.0 - gamma * design.b_under**2
    return ShearControl(
        geom, gamma, a0, a0d, phi, phi_max, phi_min, design=design, eps=eps, w_max=w_max
    )


def explicit_control(geom: ChannelGeometry, gamma: float, a0_samples) -> ShearControl:
    """User-supplied potential profile; extremes taken from the samples."""
    a0 = np.asarray(a0_samples, dtype=float)
    if np.ndim(a0) == 0:
        a0 = np.full(geom.Ny + 1, float(a0))
    if a0.shape != (geom.Ny + 1,):
        raise ValueError(f"a0 samples must have shape ({geom.Ny + 1},)")
    phi = 1.0 - gamma * a0**2
    if phi.min() <= 0:
        raise ValueError("metric not positive definite: gamma a0^2 >= 1 on the grid")
    interp = PchipInterpolator(geom.y, a0)
    a0d = interp.derivative()(geom.y)
    return ShearControl(
        geom, gamma, a0, a0d, phi, float(phi.max()), float(phi.min()), design=None
    )


def uncontrolled(geom: ChannelGeometry) -> ShearControl:
    """gamma = 0 placeholder (Phi = 1 everywhere)."""
    z = np.zeros(geom.Ny + 1)
    return ShearControl(geom, 0.0, z, z.copy(), np.ones(geom.Ny + 1), 1.0, 1.0)


def apply_C(u: np.ndarray, control: ShearControl) -> np.ndarray:
    """Feedback charge field for a divergence-free velocity realizing the
    fluid momentum through the flat Euclidean metric:

        q = -gamma a0(y) u1 / (1 - gamma a0(y)^2).

    Pointwise form of the control map; exact whenever the pressure correction
    relating the two velocity representations vanishes (x-independent fields).
    """
    u1 = u[0]
    return -control.gamma * control.a0[:, None] * u1 / control.phi[:, None]


def feedback_charge(u: np.ndarray, control: ShearControl) -> np.ndarray:
    """Closed-loop charge in terms of the physical (closed-loop) velocity:

        q = -gamma a0(y) u1.

    Equivalent to apply_C evaluated on the equivalent flat-metric velocity;
    this is the form the velocity-form integrator feeds back.
    """
    return -control.gamma * control.a0[:, None] * u[0]


@dataclass(frozen=True)
class ConditionItem:
    name: str
    lhs: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ConditionReport:
    items: tuple[ConditionItem, ...]
    passed: bool

    def as_text(self) -> str:
        lines = []
        for it in self.items:
            status = "pass" if it.passed else "FAIL"
            lines.append(f"{it.name}_lhs: {it.lhs:.6f}")
            lines.append(f"{it.name}_threshold: {it.threshold:.6f}")
            lines.append(f"{it.name}: {status}")
        lines.append(f"formal_stability: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def condition_report(control: ShearControl, geom: ChannelGeometry) -> ConditionReport:
    """Evaluate the three formal-stability conditions for a control.

    1. metric positivity:  max gamma a0^2 < 1
    2. drift convexity:    gamma > 0 and a0 a0'' >= 0 on the grid
    3. negative-definiteness margin:
           Phi_max X^2 + (Phi_max/Phi_min) Y^2 < 1
    """
    g = control.gamma
    items = []

    lhs1 = float(np.max(g * control.a0**2))
    items.append(ConditionItem("metric_positivity", lhs1, 1.0, lhs1 < 1.0))

    # discrete a0 a0'' via second differences (interior rows)
    dy = geom.dy
    a0 = control.a0
    second = (a0[2:] - 2 * a0[1:-1] + a0[:-2]) / dy**2
    prod_min = float(np.min(a0[1:-1] * second)) if len(second) else 0.0
    ok2 = (g > 0) and (prod_min >= -1e-10)
    lhs2 = prod_min if g > 0 else g
    items.append(ConditionItem("drift_convexity", lhs2, 0.0, ok2))

    lhs3 = control.phi_max * geom.X**2 + (control.phi_max / control.phi_min) * geom.Y**2
    items.append(ConditionItem("nd_condition", float(lhs3), 1.0, lhs3 < 1.0))

    return ConditionReport(tuple(items), all(it.passed for it in items))


@dataclass(frozen=True)
class CasimirProfile:
    """Quadrature tables for the Casimir density of the controlled flow.

    psi_c(w)   : integral of -1/Phi1 from 0 to w     (stream-of-vorticity map)
    phi_c(tau) : integral of psi_c from 0 to tau     (Casimir density)
    """

    grid: np.ndarray
    psi_c_values: np.ndarray
    phi_c_values: np.ndarray
    _psi_interp: PchipInterpolator
    _phi_interp: PchipInterpolator

    def psi_c(self, w) -> np.ndarray:
        return self._psi_interp(np.asarray(w, dtype=float))

    def phi_c(self, tau) -> np.ndarray:
        return self._phi_interp(np.asarray(tau, dtype=float))


def _cumulative_simpson(f: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral with Simpson pair-steps (f on a uniform grid with
    an even number of intervals); odd nodes filled with local 3-point rules."""
    n = len(f)
    out = np.zeros(n)
    # Simpson over each pair of intervals
    pair = (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2]) * (h / 3.0)
    out[2::2] = np.cumsum(pair)
    # odd nodes: previous even node + local quadratic increment
    out[1::2] = out[0:-1:2] + (5.0 * f[0:-1:2] + 8.0 * f[1::2] - f[2::2]) * (h / 12.0)
    return out


def casimir_profile(control: ShearControl, npoints: int = 10_001, span: float | None = None) -> CasimirProfile:
    """Tabulate the Casimir integrals by composite Simpson quadrature.

    For gamma = 0 the closed forms are psi_c(w) = -w, phi_c(t) = -t^2/2; the
    quadrature reproduces them.  The grid spans [-span, span] symmetric about
    zero (default 1 + 2*eps margin beyond the vorticity range).
    """
    if span is None:
        span = 1.0 + 2.0 * max(control.eps, 0.05)
    if npoints % 2 == 0:
        npoints += 1
    grid = np.linspace(-span, span, npoints)
    h = grid[1] - grid[0]
    if control.design is not None:
        phi1 = control.phi_of_vorticity(grid)
    elif control.gamma == 0:
        phi1 = np.ones_like(grid)
    else:
        raise ValueError("casimir profile requires a designed or zero control")
    integrand = -1.0 / phi1
    # integrate from 0: split at the center node
    i0 = npoints // 2
    right = _cumulative_simpson(integrand[i0:], h)
    left = _cumulative_simpson(integrand[i0::-1], h)
    psi_vals = np.concatenate([-left[::-1], right[1:]])
    right2 = _cumulative_simpson(psi_vals[i0:], h)
    left2 = _cumulative_simpson(psi_vals[i0::-1], h)
    phi_vals = np.concatenate([-left2[::-1], right2[1:]])
    return CasimirProfile(
        grid,
        psi_vals,
        phi_vals,
        PchipInterpolator(grid, psi_vals),
        PchipInterpolator(grid, phi_vals),
    )


def enstrophy_bound(control: ShearControl, h2_initial: float, geom: ChannelGeometry) -> float:
    """A-priori bound on the perturbation enstrophy of the controlled flow:

        int omega_t^2 <= 2 Phi_max |H2(0)| / (r - kappa Phi_max).

    Requires the designed control and an extension margin with
    kappa * Phi_max < r.  For gamma = 1 the definiteness margin equals the
    design constant r; for other gains it is recomputed from the Phi extremes.
    """
    if control.design is None:
        raise ValueError("enstrophy bound requires a designed control")
    phimax = control.phi_max
    margin = 1.0 - (
        control.phi_max * geom.X**2 + (control.phi_max / control.phi_min) * geom.Y**2
    )
    d = control.gamma * (2.0 * control.design.b_under - control.eps) * control.eps
    kap_phimax = d / (phimax + d)
    denom = margin - kap_phimax
    if denom <= 0:
        raise ValueError("extension margin too large")
    return 2.0 * phimax * abs(h2_initial) / denom
