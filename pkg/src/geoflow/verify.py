"""Named verification suites behind the `verify` subcommand.

Each suite is a bundle of cheap invariant checks drawn from the test
surface; the full tolerances live in the pytest suite, these are the
operational smoke checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class Check:
    name: str
    fn: Callable[[], None]


def build_suite(name: str, quick: bool = False) -> list[Check]:
    builder = {
        "metric": _metric_suite,
        "conservation": _conservation_suite,
        "equivalence": _equivalence_suite,
        "eigenbound": _eigenbound_suite,
        "secondvariation": _secondvariation_suite,
    }[name]
    return builder(quick)


def _metric_suite(quick: bool) -> list[Check]:
    from .algebra import KKData, kk_metric, kk_metric_inverse, modified_kk_data
    from .rigidbody import RotorParams, base_kk_data

    def identities():
        rng = np.random.default_rng(7)
        trials = 100 if quick else 1000
        for _ in range(trials):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(1, 4))
            qn = rng.normal(size=(n, n))
            qm = rng.normal(size=(m, m))
            data = KKData(qn @ qn.T + n * np.eye(n), qm @ qm.T + m * np.eye(m),
                          rng.normal(size=(m, n)))
            prod = kk_metric(data).blocks @ kk_metric_inverse(data).blocks
            assert np.abs(prod - np.eye(n + m)).max() < 1e-10, "metric inverse identity"

    def factorization():
        data = base_kk_data(RotorParams())
        eye = np.eye(4)
        for gamma in np.linspace(-0.5, 0.5, 21):
            mod, c_map, t_map = modified_kk_data(data, gamma)
            lhs = kk_metric_inverse(mod).blocks
            blk = np.block([[np.eye(3), np.zeros((3, 1))], [-c_map, t_map]])
            rhs = kk_metric_inverse(data).blocks @ blk
            assert np.abs(lhs - rhs).max() < 1e-10, f"factorization at gamma={gamma:.2f}"
            if gamma == 0.0:
                assert np.abs(lhs - kk_metric_inverse(data).blocks).max() < 1e-14

    return [Check("metric.identities", identities), Check("metric.factorization", factorization)]


def _conservation_suite(quick: bool) -> list[Check]:
    from .fluid import (DiagnosticsComputer, FluidState, VorticitySim,
                        equilibrium_fields, seeded_perturbation)
    from .geometry import ChannelGeometry

    def conservation():
        geom = ChannelGeometry(2.0, 0.9, Nx=64, Ny=32) if quick else ChannelGeometry(2.0, 0.9, Nx=128, Ny=64)
        t_end = 5.0 if quick else 10.0
        _, omega_e, _ = equilibrium_fields(geom)
        w0 = np.broadcast_to(omega_e[:, None], geom.field_shape()).copy()
        w0 += seeded_perturbation(geom, 1e-2, 11)
        sim = VorticitySim(geom)
        diag = DiagnosticsComputer(geom)
        recs = []
        sim.run(FluidState(omega=w0), t_end, sample_dt=t_end, observer=lambda s: recs.append(diag.compute(s)))
        e0, e1 = recs[0].energy, recs[-1].energy
        z0, z1 = recs[0].enstrophy, recs[-1].enstrophy
        c0, c1 = recs[0].circulation, recs[-1].circulation
        assert abs(e1 - e0) / abs(e0) < 1e-6, f"energy drift {(e1 - e0) / e0:.2e}"
        assert abs(z1 - z0) / abs(z0) < 1e-6, f"enstrophy drift {(z1 - z0) / z0:.2e}"
        assert abs(c1 - c0) < 1e-10, f"circulation drift {c1 - c0:.2e}"

    return [Check("conservation.euler", conservation)]


def _equivalence_suite(quick: bool) -> list[Check]:
    from .control import designed_control
    from .fluid import (FluidState, VelocitySim, VorticitySim, equilibrium_fields,
                        seeded_perturbation)
    from .geometry import ChannelGeometry

    def equivalence():
        if quick:
            geom = ChannelGeometry(2.0, 0.9, Nx=64, Ny=32)
            t_end, tol = 2.0, 5e-3
        else:
            geom = ChannelGeometry(2.0, 0.9, Nx=128, Ny=64)
            t_end, tol = 10.0, 1e-3
        control = designed_control(geom)
        _, omega_e, _ = equilibrium_fields(geom)
        w0 = np.broadcast_to(omega_e[:, None], geom.field_shape()).copy()
        w0 += seeded_perturbation(geom, 1e-4, 5)
        vort = VorticitySim(geom, control)
        vel = VelocitySim(geom, control, closed_loop=True)
        sv = vort.run(FluidState(omega=w0.copy()), t_end)
        st = vel.from_vorticity(w0, vort)
        dt = vel.stable_dt(float(np.abs(st.u).max()))
        nsteps = int(np.ceil(t_end / dt))
        dt = t_end / nsteps
        for _ in range(nsteps):
            st = vel.step(st, dt)
        rel = np.sqrt(geom.integrate((st.omega - sv.omega) ** 2) / geom.integrate(sv.omega**2))
        assert rel < tol, f"relative L2 vorticity difference {rel:.2e} at t={t_end}"

    return [Check("equivalence.dual-formulation", equivalence)]


def _eigenbound_suite(quick: bool) -> list[Check]:
    from .control import designed_control
    from .geometry import ChannelGeometry
    from .stability import diameter_bound, drifted_setup, lambda1_drifted

    combos = [(2.0, 0.9)] if quick else [(0.5, 0.6), (2.0, 0.9), (4.0, 0.75)]

    def eigenbound():
        for X, Y in combos:
            geom = ChannelGeometry(X, Y, Nx=64, Ny=64)
            control = designed_control(geom)
            setup = drifted_setup(control, geom)
            lam = lambda1_drifted(setup, geom, resolution=32 if quick else 64)
            bound = diameter_bound(setup, geom)
            assert lam >= bound, f"({X},{Y}): lambda1 {lam:.4e} below bound {bound:.4e}"

    return [Check("eigenbound.drifted-laplacian", eigenbound)]


def _secondvariation_suite(quick: bool) -> list[Check]:
    from .control import designed_control
    from .geometry import ChannelGeometry
    from .stability import second_variation_matrix

    def controlled_negative():
        res = 32 if quick else 64
        geom = ChannelGeometry(2.0, 0.9, Nx=max(64, res), Ny=res)
        control = designed_control(geom)
        hi, _ = second_variation_matrix(control, geom).extremal_eigenvalues()
        assert hi < 0, f"controlled max eigenvalue {hi:.3e} not negative"

    return [Check("secondvariation.controlled-negative", controlled_negative)]
