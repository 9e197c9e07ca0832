"""Finite-dimensional Lie-Poisson primitives and Kaluza-Klein metric assembly.

A Kaluza-Klein triple ``(base_metric, inertia, connection)`` determines a
block metric on base x fiber velocities.  The module assembles that block
metric and its closed-form inverse, and applies the gain-parametrized
modification that turns a feedback law on the fiber momentum into a new
triple whose block inverse factors through the original one.

All linear algebra is dense; the matrices involved are small (n + m <= 16).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KKData",
    "MetricMatrix",
    "kk_metric",
    "kk_metric_inverse",
    "modified_kk_data",
    "so3_ad_star",
    "discrete_diamond",
]

#: relative condition-number threshold for "invertible" checks
COND_LIMIT = 1e12


class ConfigurationError(ValueError):
    """Inconsistent dimensions or invalid data for an operation."""


class NumericalError(ArithmeticError):
    """A matrix required to be invertible is numerically singular."""


def _check_spd(mat: np.ndarray, name: str) -> None:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ConfigurationError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, rtol=0, atol=1e-12 * max(1.0, abs(mat).max())):
        raise ConfigurationError(f"{name} must be symmetric")
    eigvals = np.linalg.eigvalsh(mat)
    if eigvals.min() <= 0:
        raise ConfigurationError(f"{name} must be positive definite (min eig {eigvals.min():g})")


def _solve(mat: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(f"{what} is numerically singular (cond {cond:.3e})")
    return np.linalg.solve(mat, rhs)


@dataclass(frozen=True)
class KKData:
    """Kaluza-Klein triple in matrix form.

    base_metric : (n, n) symmetric positive definite
    inertia     : (m, m) symmetric positive definite
    connection  : (m, n), maps base velocities to fiber-algebra values
    """

    base_metric: np.ndarray
    inertia: np.ndarray
    connection: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base_metric", np.asarray(self.base_metric, dtype=float))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        object.__setattr__(self, "connection", np.atleast_2d(np.asarray(self.connection, dtype=float)))
        if self.connection.shape != (self.m, self.n):
            raise ConfigurationError(
                f"connection shape {self.connection.shape} incompatible with "
                f"base dim {self.n} and fiber dim {self.m}"
            )

    @property
    def n(self) -> int:
        return self.base_metric.shape[0]

    @property
    def m(self) -> int:
        return self.inertia.shape[0]

    def validate(self) -> "KKData":
        _check_spd(self.base_metric, "base_metric")
        _check_spd(self.inertia, "inertia")
        return self


@dataclass(frozen=True)
class MetricMatrix:
    """(n+m) x (n+m) symmetric block matrix with the base/fiber split recorded."""

    blocks: np.ndarray
    n: int
    m: int

    @property
    def base(self) -> np.ndarray:
        return self.blocks[: self.n, : self.n]

    @property
    def fiber(self) -> np.ndarray:
        return self.blocks[self.n :, self.n :]

    @property
    def coupling(self) -> np.ndarray:
        return self.blocks[: self.n, self.n :]


def kk_metric(data: KKData) -> MetricMatrix:
    """Assemble the block Kaluza-Klein metric.

    [[ mu + A* I A,  A* I ],
     [ I A,          I    ]]
    """
    mu, inertia, conn = data.base_metric, data.inertia, data.connection
    ia = inertia @ conn
    blocks = np.block([[mu + conn.T @ ia, ia.T], [ia, inertia]])
    return MetricMatrix(blocks, data.n, data.m)


def kk_metric_inverse(data: KKData) -> MetricMatrix:
    """Closed-form inverse of :func:`kk_metric`.

    [[ mu^-1,        -mu^-1 A*            ],
     [ -A mu^-1,     I^-1 + A mu^-1 A*    ]]
    """
    mu, inertia, conn = data.base_metric, data.inertia, data.connection
    mu_inv = _solve(mu, np.eye(data.n), "base_metric")
    i_inv = _solve(inertia, np.eye(data.m), "inertia")
    ami = conn @ mu_inv
    blocks = np.block([[mu_inv, -ami.T], [-ami, i_inv + ami @ conn.T]])
    return MetricMatrix(blocks, data.n, data.m)


def modified_kk_data(data: KKData, gamma: float) -> tuple[KKData, np.ndarray, np.ndarray]:
    """Gain-modified Kaluza-Klein triple with its feedback and momentum maps.

    Given the triple (mu0, I0, A0) and a scalar gain, builds

        R    = 1 - gamma * I0 A0 mu0^-1 A0*
        C    = gamma * R^-1 I0 A0 mu0^-1            (m x n, acts on base momenta)
        mu_C = (1 + A0* C)^-1 mu0
        A_C  = A0 + I0^-1 C mu_C
        T    = (1 + gamma) (1 + C A0*)              (m x m, momentum rescaling)
        I_C  = (1 + gamma)^-1 I0

    and returns ``(KKData(mu_C, I_C, A_C), C, T)``.  The defining property,
    checked in the test suite, is the factorization

        kk_metric_inverse(modified) = kk_metric_inverse(original) @ [[1, 0], [-C, T]]

    For gains where ``I_C`` or ``mu_C`` lose positivity the returned triple is
    still algebraically valid (the factorization holds); it is not validated
    as a metric.
    """
    mu, inertia, conn = data.base_metric, data.inertia, data.connection
    n, m = data.n, data.m
    mu_inv = _solve(mu, np.eye(n), "base_metric")
    if abs(1.0 + gamma) < 1.0 / COND_LIMIT:
        raise NumericalError("control parameter out of range: 1 + gamma vanishes")

    r_mat = np.eye(m) - gamma * inertia @ conn @ mu_inv @ conn.T
    try:
        c_map = gamma * _solve(r_mat, inertia @ conn @ mu_inv, "R")
    except NumericalError as exc:
        raise NumericalError(f"control parameter out of range: {exc}") from exc

    one_ac = np.eye(n) + conn.T @ c_map
    try:
        mu_c = _solve(one_ac, mu, "1 + A0* C")
    except NumericalError as exc:
        raise NumericalError(f"control parameter out of range: {exc}") from exc

    conn_c = conn + _solve(inertia, c_map @ mu_c, "inertia")
    t_map = (1.0 + gamma) * (np.eye(m) + c_map @ conn.T)
    cond_t = np.linalg.cond(t_map)
    if not np.isfinite(cond_t) or cond_t > COND_LIMIT:
        raise NumericalError(f"control parameter out of range: T singular (cond {cond_t:.3e})")

    inertia_c = inertia / (1.0 + gamma)
    # symmetrize mu_C; the construction guarantees symmetry up to round-off
    mu_c = 0.5 * (mu_c + mu_c.T)
    return KKData(mu_c, inertia_c, conn_c), c_map, t_map


def so3_ad_star(omega: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Coadjoint action on so(3)*: ad(omega)* pi = -omega x pi."""
    return -np.cross(omega, pi)


def discrete_diamond(
    x_field: np.ndarray, q_field: np.ndarray, dx: float, dy: float
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise pairing (X, q) -> q * grad(X), returned as one-form components.

    Fields are sampled on a rectangular grid, shape (ny+1, nx), row index = y.
    Gradients use second-order centered differences with one-sided stencils on
    all four grid edges, so coordinate-like (non-periodic) inputs behave.
    """
    x_field = np.asarray(x_field, dtype=float)
    q_field = np.asarray(q_field, dtype=float)
    if x_field.shape != q_field.shape:
        raise ConfigurationError(
            f"grid mismatch: X {x_field.shape} vs q {q_field.shape}"
        )
    gx = _centered_gradient(x_field, dx, axis=1)
    gy = _centered_gradient(x_field, dy, axis=0)
    return q_field * gx, q_field * gy


def _centered_gradient(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order gradient, centered inside and one-sided at the edges."""
    g = np.empty_like(f)
    fm = np.moveaxis(f, axis, 0)
    gm = np.moveaxis(g, axis, 0)
    gm[1:-1] = (fm[2:] - fm[:-2]) / (2 * h)
    gm[0] = (-3 * fm[0] + 4 * fm[1] - fm[2]) / (2 * h)
    gm[-1] = (3 * fm[-1] - 4 * fm[-2] + fm[-3]) / (2 * h)
    return g
