"""Satellite with an internal rotor: dynamics, feedback law, stability tests.

The rotor spins about the third principal axis.  The free system conserves
the rotor momentum q; the feedback law q = p_k + k*Pi_3 turns the middle-axis
rotation into a nonlinearly stable equilibrium once the gain clears the
threshold k > 1 - I3/lambda2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import KKData, kk_metric_inverse, so3_ad_star
from . import kernels

__all__ = [
    "RotorParams",
    "RigidState",
    "ControlGainK",
    "free_rhs",
    "controlled_rhs",
    "stability_condition",
    "gamma_for_gain",
    "base_kk_data",
    "free_energy",
    "controlled_energy",
    "second_variation_so3",
    "integrate",
    "Trajectory",
    "NaNAbort",
]

# Repo-convention demo inertias (not a published value): satellite (3, 2, 1),
# rotor (0.1, 0.1, 0.05).
DEFAULT_BODY = (3.0, 2.0, 1.0)
DEFAULT_ROTOR = (0.1, 0.1, 0.05)


@dataclass(frozen=True)
class RotorParams:
    """Moments of inertia of the carrier body (I) and the rotor (i)."""

    I1: float = DEFAULT_BODY[0]
    I2: float = DEFAULT_BODY[1]
    I3: float = DEFAULT_BODY[2]
    i1: float = DEFAULT_ROTOR[0]
    i2: float = DEFAULT_ROTOR[1]
    i3: float = DEFAULT_ROTOR[2]

    def __post_init__(self):
        if not (self.I1 > self.I2 > self.I3 > 0):
            raise ValueError("need I1 > I2 > I3 > 0")
        if not (self.i1 == self.i2 > self.i3 > 0):
            raise ValueError("need i1 = i2 > i3 > 0")

    @property
    def lam(self) -> np.ndarray:
        """Locked inertias lambda_j = I_j + i_j."""
        return np.array([self.I1 + self.i1, self.I2 + self.i2, self.I3 + self.i3])


@dataclass
class RigidState:
    """Body angular momentum Pi (length 3) and rotor angular momentum q."""

    pi: np.ndarray
    q: float = 0.0

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.pi)) or not np.isfinite(self.q):
            raise ValueError("state entries must be finite")


@dataclass(frozen=True)
class ControlGainK:
    """Feedback gain k and the conserved control constant p_k = q - k*Pi_3."""

    k: float
    p_k: float = 0.0

    def __post_init__(self):
        if self.k == 1.0:
            raise ValueError("k must differ from 1")


def base_kk_data(params: RotorParams) -> KKData:
    """Reduced Kaluza-Klein triple: diag(lam1, lam2, I3), inertia i3, e3 row."""
    lam = params.lam
    return KKData(
        base_metric=np.diag([lam[0], lam[1], params.I3]),
        inertia=np.array([[params.i3]]),
        connection=np.array([[0.0, 0.0, 1.0]]),
    )


def gamma_for_gain(k: float, params: RotorParams) -> float:
    """Gain parameter gamma for which modified_kk_data reproduces gain k.

    With the nonlocal-resolvent form of the control map, the feedback
    C(Pi) = -k Pi_3 corresponds to gamma = -k I3 / (i3 (1 - k)).
    """
    if k == 1.0:
        raise ValueError("k must differ from 1")
    return -k * params.I3 / (params.i3 * (1.0 - k))


def body_angular_velocity(pi: np.ndarray, q: float, params: RotorParams) -> np.ndarray:
    """Omega = pr_1 (mu_P)^-1 (Pi, q)."""
    lam = params.lam
    return np.array(
        [pi[0] / lam[0], pi[1] / lam[1], (pi[2] - q) / params.I3]
    )


def free_rhs(state: RigidState, params: RotorParams) -> tuple[np.ndarray, float]:
    """Uncontrolled equations: dPi/dt = -Omega x Pi, dq/dt = 0."""
    omega = body_angular_velocity(state.pi, state.q, params)
    return so3_ad_star(omega, state.pi), 0.0


def controlled_rhs(pi: np.ndarray, gain: ControlGainK, params: RotorParams) -> np.ndarray:
    """Closed-loop momentum equation under q = p_k + k*Pi_3.

    Component form:
        dPi1 = -Pi2 Pi3 / lam2 + Pi2 ((1-k) Pi3 - p_k) / I3
        dPi2 = +Pi1 Pi3 / lam1 - Pi1 ((1-k) Pi3 - p_k) / I3
        dPi3 = (1/lam2 - 1/lam1) Pi1 Pi2
    """
    lam = params.lam
    k, p_k = gain.k, gain.p_k
    w = ((1.0 - k) * pi[2] - p_k) / params.I3
    return np.array(
        [
            -pi[1] * pi[2] / lam[1] + pi[1] * w,
            pi[0] * pi[2] / lam[0] - pi[0] * w,
            (1.0 / lam[1] - 1.0 / lam[0]) * pi[0] * pi[1],
        ]
    )


def stability_condition(gain: ControlGainK, params: RotorParams) -> bool:
    """True iff 1 > k > 1 - I3/lambda2 (middle-axis rotation stabilized)."""
    lam2 = params.lam[1]
    return 1.0 > gain.k > 1.0 - params.I3 / lam2


def free_energy(state: RigidState, params: RotorParams) -> float:
    """Kinetic energy of the free system."""
    lam = params.lam
    pi, q = state.pi, state.q
    return 0.5 * (
        pi[0] ** 2 / lam[0]
        + pi[1] ** 2 / lam[1]
        + (pi[2] - q) ** 2 / params.I3
        + q**2 / params.i3
    )


def controlled_energy(pi: np.ndarray, gain: ControlGainK, params: RotorParams) -> float:
    """Conserved energy of the closed loop (reduces to the modified kinetic
    energy 0.5 <Pi, mu_C^-1 Pi> when p_k = 0)."""
    lam = params.lam
    k, p_k = gain.k, gain.p_k
    return 0.5 * (
        pi[0] ** 2 / lam[0]
        + pi[1] ** 2 / lam[1]
        + (1.0 - k) * pi[2] ** 2 / params.I3
    ) - p_k * pi[2] / params.I3


def second_variation_so3(nu_e: np.ndarray, v: np.ndarray, metric: np.ndarray) -> float:
    """Second variation of the restricted energy along delta_nu = ad(v)* nu_e.

    Value: <delta_nu, metric^-1 delta_nu + v x (metric^-1 nu_e)>.
    Depends on v only through delta_nu.
    """
    nu_e = np.asarray(nu_e, dtype=float)
    v = np.asarray(v, dtype=float)
    dnu = so3_ad_star(v, nu_e)
    term = np.linalg.solve(metric, dnu) + np.cross(v, np.linalg.solve(metric, nu_e))
    return float(dnu @ term)


class NaNAbort(RuntimeError):
    """Integration produced a non-finite value."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


@dataclass
class Trajectory:
    """Sampled trajectory with conserved-quantity diagnostics."""

    t: np.ndarray
    pi: np.ndarray          # (nsamp, 3)
    q: np.ndarray           # (nsamp,)
    energy: np.ndarray
    casimir: np.ndarray     # |Pi|^2
    p_k: np.ndarray         # conserved control constant (free runs: k = 0)
    gain: ControlGainK | None = None
    params: RotorParams = field(default_factory=RotorParams)


def integrate(
    state: RigidState,
    gain: ControlGainK | None,
    params: RotorParams,
    dt: float,
    t_end: float,
    sample_stride: int = 1,
) -> Trajectory:
    """Classical RK4 integration of the free or closed-loop system.

    Diagnostics recorded at each sample: Pi, q, energy (free H0 or closed-loop
    energy), Casimir |Pi|^2, and p_k = q - k*Pi_3.  Aborts with NaNAbort
    (carrying the step index) if the state leaves the finite range.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    nsteps = max(1, int(round(t_end / dt)))
    lam = params.lam
    if gain is None:
        pis, ts = kernels.rigid_rk4_free(
            state.pi, state.q, lam[0], lam[1], params.I3, dt, nsteps, sample_stride
        )
        k = 0.0
    else:
        pis, ts = kernels.rigid_rk4_controlled(
            state.pi, gain.k, gain.p_k, lam[0], lam[1], params.I3,
            dt, nsteps, sample_stride,
        )
        k = gain.k

    bad = ~np.isfinite(pis).all(axis=1)
    if bad.any():
        raise NaNAbort(int(np.argmax(bad)) * sample_stride)
    if gain is None:
        qs = np.full(len(ts), state.q)
        energy = np.array([free_energy(RigidState(p, state.q), params) for p in pis])
    else:
        qs = gain.p_k + k * pis[:, 2]
        energy = np.array([controlled_energy(p, gain, params) for p in pis])
    casimir = (pis**2).sum(axis=1)
    p_k = qs - k * pis[:, 2]
    return Trajectory(ts, pis, qs, energy, casimir, p_k, gain, params)


def lie_poisson_controlled_rhs(
    pi: np.ndarray, gain: ControlGainK, params: RotorParams
) -> np.ndarray:
    """Closed-loop RHS computed through the modified-triple route.

    Uses the metric factorization with gamma = gamma_for_gain(k) and the
    rescaled momentum p~ = i3 p_k / (i3 - k lam3); serves as the cross-check
    oracle for controlled_rhs.
    """
    from .algebra import modified_kk_data

    data = base_kk_data(params)
    mod, _, _ = modified_kk_data(data, gamma_for_gain(gain.k, params))
    lam3 = params.lam[2]
    denom = params.i3 - gain.k * lam3
    if denom == 0:
        raise ValueError("momentum rescaling singular: i3 = k*lam3")
    p_tilde = params.i3 * gain.p_k / denom
    inv = kk_metric_inverse(mod).blocks
    omega = inv[:3, :3] @ pi + inv[:3, 3] * p_tilde
    return so3_ad_star(omega, pi)
