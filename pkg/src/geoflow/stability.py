"""Quadratic-form and spectral machinery for formal stability.

* second_variation_matrix: the restricted second variation of the controlled
  kinetic energy at the shear equilibrium, as a symmetric matrix over
  discretized zero-circulation vorticity perturbations.  Block-diagonal over
  x-wavenumbers (the profile depends only on y).

* drifted Laplacian tools: the change of variable z(y) = int Phi^{-1/2}
  turns the weighted elliptic operator into Delta - <grad g, grad> with
  g = -log(Phi)/2; its first Dirichlet eigenvalue on [0, X*pi] x [0, Z]
  bounds the kinetic term of the second variation from above and satisfies
  the diameter lower bound lambda_1 >= pi^2 / (pi^2 X^2 + Z^2) when the
  drift potential is convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .control import ShearControl
from .elliptic import ModifiedPoissonSolver, velocity_from_stream
from .geometry import ChannelGeometry

__all__ = [
    "SecondVariationForm",
    "second_variation_matrix",
    "second_variation_value",
    "definiteness",
    "DriftedLaplacianSetup",
    "drifted_setup",
    "lambda1_drifted",
    "lambda1_separable",
    "fll_bound",
    "diameter_bound",
    "reverse_poincare_check",
]

DENSE_EIG_LIMIT = 4096


@dataclass
class SecondVariationForm:
    """Second-variation form assembled per x-wavenumber.

    blocks[i] is the symmetric y-block of the i-th distinct wavenumber;
    multiplicity 2 for 0 < m < Nx/2 (cosine and sine), 1 for m = 0 and the
    Nyquist mode.  The x-mean block is restricted to zero-mean vorticity
    (zero-circulation perturbations).
    """

    blocks: list[np.ndarray]
    multiplicity: list[int]
    kappas: list[float]

    @property
    def matrix(self) -> np.ndarray:
        """Dense symmetric matrix in the orthonormal perturbation basis."""
        reps = [b for b, m in zip(self.blocks, self.multiplicity) for _ in range(m)]
        return scipy.linalg.block_diag(*reps)

    def extremal_eigenvalues(self) -> tuple[float, float]:
        hi = -math.inf
        lo = math.inf
        for b in self.blocks:
            ev = np.linalg.eigvalsh(b)
            hi = max(hi, float(ev[-1]))
            lo = min(lo, float(ev[0]))
        return hi, lo


def second_variation_matrix(
    control: ShearControl, geom: ChannelGeometry, resolution: int | None = None
) -> SecondVariationForm:
    """Assemble the second variation of the restricted controlled energy.

    Form on a vorticity perturbation dw:

        SV(dw) = int (Phi du1^2 + du2^2) - int dw^2 / Phi

    with du = grad^s dpsi, L dpsi = dw (weighted solve, zero-circulation
    x-mean sector).  The first term is assembled through the per-mode
    tridiagonal inverse and symmetrized explicitly; the second is diagonal.
    """
    if resolution is not None and resolution != geom.Ny:
        geom = ChannelGeometry(geom.X, geom.Y, Nx=_pow2_at_least(resolution), Ny=resolution)
        if control.design is not None:
            from .control import designed_control

            control = designed_control(geom, control.gamma, control.eps)
        elif control.gamma == 0.0:
            from .control import uncontrolled

            control = uncontrolled(geom)
        else:
            raise ValueError("cannot resample an explicit control; rebuild it on the target grid")
    ny = geom.Ny
    dy = geom.dy
    phi = control.phi
    if len(phi) != ny + 1:
        raise ValueError("control grid does not match geometry")
    phih = 0.5 * (phi[:-1] + phi[1:])
    phin = phi[1:-1]
    nin = ny - 1
    lx = geom.Lx

    blocks: list[np.ndarray] = []
    mult: list[int] = []
    kappas: list[float] = []

    # x-mean sector on zero-mean dw: energy of the flux-form reconstruction
    cum = np.zeros((ny, nin))
    for j in range(1, ny):
        cum[j:, j - 1] = dy
    b0 = lx * (cum.T @ np.diag(dy / phih) @ cum) - lx * dy * np.diag(1.0 / phin)
    zbasis = _zero_mean_basis(nin)
    blocks.append(zbasis.T @ b0 @ zbasis)
    mult.append(1)
    kappas.append(0.0)

    for m in range(1, geom.Nx // 2 + 1):
        kap = geom.kappa[m]
        amat = _mode_tridiag(phih, kap, dy)
        smat = np.linalg.inv(amat)
        smat = 0.5 * (smat + smat.T)
        cm = lx if m == geom.Nx // 2 else 0.5 * lx
        bm = cm * dy * (-smat - np.diag(1.0 / phin))
        blocks.append(0.5 * (bm + bm.T))
        mult.append(1 if m == geom.Nx // 2 else 2)
        kappas.append(float(kap))
    return SecondVariationForm(blocks, mult, kappas)


def _pow2_at_least(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _zero_mean_basis(n: int) -> np.ndarray:
    """Orthonormal basis of {f in R^n : sum f = 0} (Helmert columns)."""
    basis = np.zeros((n, n - 1))
    for i in range(1, n):
        basis[:i, i - 1] = 1.0
        basis[i, i - 1] = -float(i)
        basis[:, i - 1] /= math.sqrt(i * (i + 1.0))
    return basis


def _mode_tridiag(phih: np.ndarray, kap: float, dy: float) -> np.ndarray:
    ny = len(phih)
    nin = ny - 1
    mat = np.zeros((nin, nin))
    for j in range(1, ny):
        r = j - 1
        mat[r, r] = -(phih[j] + phih[j - 1]) / dy**2 - kap**2
        if r > 0:
            mat[r, r - 1] = phih[j - 1] / dy**2
        if r < nin - 1:
            mat[r, r + 1] = phih[j] / dy**2
    return mat


def second_variation_value(
    control: ShearControl, geom: ChannelGeometry, domega: np.ndarray
) -> float:
    """Matrix-free evaluation of the second variation on a grid perturbation."""
    solver = ModifiedPoissonSolver(geom, control.phi)
    psi = solver.solve(domega, 0.0)
    u = velocity_from_stream(psi, geom)
    phi_col = control.phi[:, None]
    kinetic = geom.integrate(phi_col * u[0] ** 2 + u[1] ** 2)
    return kinetic - geom.integrate(domega**2 / phi_col)


def definiteness(matrix, tol: float = 1e-8, maxiter: int = 5000) -> tuple[float, float]:
    """(max eigenvalue, min eigenvalue) of a symmetric matrix or form.

    SecondVariationForm inputs are resolved blockwise (exact); dense arrays
    below the size limit use a direct symmetric eigensolve; anything larger
    goes through iterative Lanczos with a residual check.
    """
    if isinstance(matrix, SecondVariationForm):
        return matrix.extremal_eigenvalues()
    if sp.issparse(matrix):
        return _definiteness_iterative(matrix, tol, maxiter)
    mat = np.asarray(matrix)
    if mat.shape[0] <= DENSE_EIG_LIMIT:
        ev = np.linalg.eigvalsh(mat)
        return float(ev[-1]), float(ev[0])
    return _definiteness_iterative(sp.csr_matrix(mat), tol, maxiter)


def _definiteness_iterative(mat, tol, maxiter) -> tuple[float, float]:
    out = []
    for which in ("LA", "SA"):
        try:
            val, vec = spla.eigsh(mat, k=1, which=which, tol=tol, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise RuntimeError(f"eigensolver failed to converge ({which})") from exc
        res = np.linalg.norm(mat @ vec[:, 0] - val[0] * vec[:, 0])
        if res > max(tol, 1e-8) * max(1.0, abs(val[0])):
            raise RuntimeError(f"eigen residual {res:.2e} above tolerance")
        out.append(float(val[0]))
    return out[0], out[1]


@dataclass
class DriftedLaplacianSetup:
    """Change of variables for the weighted elliptic operator.

    y_nodes/z_nodes sample the monotone map z(y); Z_gamma = z(Y*pi); g is the
    drift potential on the z-grid; K bounds the Hessian of g from below
    (zero when the convexity condition holds).
    """

    geom: ChannelGeometry
    y_nodes: np.ndarray
    z_nodes: np.ndarray
    Z_gamma: float
    g_nodes: np.ndarray
    K: float
    _phi_fun: object
    _y_of_z: object

    def g_of_z(self, z) -> np.ndarray:
        """Drift potential g(z) = -log(Phi(y(z)))/2."""
        y = self._y_of_z(np.asarray(z, dtype=float))
        return -0.5 * np.log(self._phi_fun(y))

    def y_of_z(self, z) -> np.ndarray:
        return self._y_of_z(np.asarray(z, dtype=float))


def _phi_function(control: ShearControl, geom: ChannelGeometry):
    if control.design is not None:
        from .control import b_map, equilibrium_vorticity

        design, w_max, g = control.design, control.w_max, control.gamma

        def phi_fun(y):
            return 1.0 - g * b_map(equilibrium_vorticity(y), design, w_max) ** 2

        return phi_fun
    interp = PchipInterpolator(geom.y, control.phi)
    return lambda y: np.maximum(interp(y), 1e-14)


def drifted_setup(
    control: ShearControl, geom: ChannelGeometry, n_nodes: int | None = None
) -> DriftedLaplacianSetup:
    """Build the drifted-Laplacian change of variables for a control."""
    phi_fun = _phi_function(control, geom)

    def dz(y):
        return 1.0 / np.sqrt(phi_fun(y))

    def z_of_y(yv: float) -> float:
        val, err = quad(dz, 0.0, yv, limit=200, epsabs=1e-13, epsrel=1e-12)
        return val

    n_nodes = n_nodes or (geom.Ny + 1)
    y_nodes = np.linspace(0.0, geom.Ly, n_nodes)
    z_nodes = np.array([z_of_y(yv) for yv in y_nodes])
    big_z = z_nodes[-1]

    def y_of_z_scalar(zv: float) -> float:
        if zv <= 0.0:
            return 0.0
        if zv >= big_z:
            return geom.Ly
        return brentq(lambda yv: z_of_y(yv) - zv, 0.0, geom.Ly, xtol=1e-14, rtol=8.9e-16)

    y_of_z = np.vectorize(y_of_z_scalar)
    g_nodes = -0.5 * np.log(phi_fun(y_nodes))

    # discrete convexity of g on the z-grid; K = 0 when it holds
    zu = np.linspace(0.0, big_z, max(n_nodes, 65))
    gu = -0.5 * np.log(phi_fun(y_of_z(zu)))
    h = zu[1] - zu[0]
    second = (gu[2:] - 2 * gu[1:-1] + gu[:-2]) / h**2
    min_second = float(second.min()) if len(second) else 0.0
    kconst = 0.0 if min_second >= -1e-10 else min_second

    return DriftedLaplacianSetup(
        geom, y_nodes, z_nodes, float(big_z), g_nodes, kconst, phi_fun, y_of_z
    )


def _weighted_operator(setup: DriftedLaplacianSetup, geom: ChannelGeometry, nx: int, nz: int):
    """Five-point flux-form discretization of -div(e^-g grad .) with Dirichlet
    boundary, plus the lumped weight matrix diag(e^-g)."""
    lx = geom.Lx
    bigz = setup.Z_gamma
    hx = lx / nx
    hz = bigz / nz
    zin = np.linspace(0.0, bigz, nz + 1)[1:-1]
    zhalf = np.linspace(0.0, bigz, nz + 1)[:-1] + 0.5 * hz
    wnode = np.exp(-setup.g_of_z(zin))
    whalf = np.exp(-setup.g_of_z(zhalf))

    nxi = nx - 1
    nzi = nz - 1
    # x-part: tridiagonal Laplacian weighted per-row by wnode
    ex = np.ones(nxi)
    tx = sp.diags([-ex[:-1], 2 * ex, -ex[:-1]], [-1, 0, 1]) / hx**2
    ix = sp.identity(nxi)
    # z-part flux form
    main = (whalf[:-1] + whalf[1:]) / hz**2
    off = -whalf[1:-1] / hz**2
    tz = sp.diags([off, main, off], [-1, 0, 1])
    wz = sp.diags(wnode)
    amat = sp.kron(wz, tx) + sp.kron(tz, ix)
    bmat = sp.kron(wz, ix)
    return amat.tocsc(), bmat.tocsc()


def lambda1_drifted(
    setup: DriftedLaplacianSetup,
    geom: ChannelGeometry,
    resolution: int = 64,
    k: int = 1,
) -> float | np.ndarray:
    """Smallest Dirichlet eigenvalue(s) of the drifted Laplacian on
    [0, X*pi] x [0, Z_gamma], via the symmetric weighted form.

    Shift-invert Lanczos on the sparse pencil; dense fallback for small
    problems.  Returns a scalar for k = 1, else the k lowest eigenvalues.
    """
    amat, bmat = _weighted_operator(setup, geom, resolution, resolution)
    n = amat.shape[0]
    if n <= 1200:
        vals = scipy.linalg.eigh(
            amat.toarray(), bmat.toarray(), eigvals_only=True, subset_by_index=[0, k - 1]
        )
    else:
        try:
            vals = spla.eigsh(
                amat, k=k, M=bmat, sigma=0.0, which="LM", return_eigenvectors=False
            )
        except spla.ArpackNoConvergence as exc:
            raise RuntimeError("eigensolver failed to converge") from exc
        vals = np.sort(vals)
    return float(vals[0]) if k == 1 else np.asarray(vals)


def lambda1_separable(setup: DriftedLaplacianSetup, geom: ChannelGeometry, nz: int = 512) -> float:
    """Separated oracle: lambda_1 = (1/X)^2 + (first 1-D drifted eigenvalue).

    The x-direction contributes the pure Dirichlet mode sin(x/X); the z-part
    is the weighted 1-D problem on [0, Z_gamma].
    """
    bigz = setup.Z_gamma
    hz = bigz / nz
    zhalf = np.linspace(0.0, bigz, nz + 1)[:-1] + 0.5 * hz
    zin = np.linspace(0.0, bigz, nz + 1)[1:-1]
    whalf = np.exp(-setup.g_of_z(zhalf))
    wnode = np.exp(-setup.g_of_z(zin))
    main = (whalf[:-1] + whalf[1:]) / hz**2
    off = -whalf[1:-1] / hz**2
    tz = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    vals = scipy.linalg.eigh(tz, np.diag(wnode), eigvals_only=True, subset_by_index=[0, 0])
    return float(vals[0]) + 1.0 / geom.X**2


def fll_bound(d: float, kconst: float) -> float:
    """Diameter lower bound sup_{s in (0,1)} [4 s (1-s) pi^2/d^2 + s K].

    K = 0 gives pi^2/d^2 (maximum at s = 1/2); K >= 4 pi^2/d^2 returns K
    (supremum approached at s -> 1).
    """
    if d <= 0:
        raise ValueError("diameter must be positive")
    a = math.pi**2 / d**2
    s_opt = 0.5 + kconst / (8.0 * a)
    if s_opt >= 1.0:
        return float(kconst)
    if s_opt <= 0.0:
        return 0.0
    return float(4.0 * s_opt * (1.0 - s_opt) * a + s_opt * kconst)


def diameter_bound(setup: DriftedLaplacianSetup, geom: ChannelGeometry) -> float:
    """The paper-form bound pi^2 / (pi^2 X^2 + Z^2) (fll_bound at K = 0)."""
    d2 = geom.Lx**2 + setup.Z_gamma**2
    return fll_bound(math.sqrt(d2), setup.K if setup.K < 0 else 0.0)


def reverse_poincare_check(
    setup: DriftedLaplacianSetup,
    geom: ChannelGeometry,
    trial_fields: list[np.ndarray],
    resolution: int = 64,
    rtol: float = 1e-9,
) -> bool:
    """Check int (L_g phi)^2 w >= -lambda_1 int phi (L_g phi) w for trials
    vanishing on the boundary (interior-node arrays of shape (nz-1, nx-1))."""
    amat, bmat = _weighted_operator(setup, geom, resolution, resolution)
    lam1 = lambda1_drifted(setup, geom, resolution=resolution)
    binv = sp.diags(1.0 / bmat.diagonal())
    ok = True
    for phi in trial_fields:
        v = np.asarray(phi, dtype=float).ravel()
        if v.shape[0] != amat.shape[0]:
            raise ValueError("trial field has wrong interior shape")
        lgv = -binv @ (amat @ v)           # Delta_g phi in node values
        lhs = float(lgv @ (bmat @ lgv))    # int (Delta_g phi)^2 e^-g
        rhs = -lam1 * float(v @ (bmat @ lgv))
        if lhs < rhs - rtol * max(abs(lhs), abs(rhs), 1e-30):
            ok = False
    return ok
