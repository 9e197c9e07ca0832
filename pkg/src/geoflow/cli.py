"""Command-line interface: experiment orchestration and file output.

Subcommands: rigidbody, shearflow, design, eigen, stability, verify.
Exit codes: 0 success, 1 configuration error, 2 numerical abort,
3 stability precondition failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import Config, ConfigError, load_config, parse_config
from .io import format_row, write_csv, write_report, write_snapshot
from .rng import XorShift64Star

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_STABILITY = 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="geoflow", description=__doc__)
    parser.add_argument("--version", action="version", version=f"geoflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=1, help="perturbation seed")
    common.add_argument("--require-stable", action="store_true",
                        help="abort (exit 3) unless the stability preconditions pass")
    common.add_argument("--quick", action="store_true", help="reduced-size profile")

    sub.add_parser("rigidbody", parents=[common], help="rigid body with rotor run")
    sub.add_parser("shearflow", parents=[common], help="channel shear flow run")

    p_design = sub.add_parser("design", parents=[common], help="control design report")
    p_design.add_argument("X", type=float)
    p_design.add_argument("Y", type=float)
    p_design.add_argument("gamma", type=float)

    p_eigen = sub.add_parser("eigen", parents=[common], help="drifted-Laplacian eigenvalue report")
    p_eigen.add_argument("--X", type=float, default=2.0)
    p_eigen.add_argument("--Y", type=float, default=0.9)
    p_eigen.add_argument("--gamma", type=float, default=1.0)
    p_eigen.add_argument("--resolution", type=int, default=64)
    p_eigen.add_argument("--csv", help="write the lowest 10 eigenvalues to this CSV")

    p_stab = sub.add_parser("stability", parents=[common], help="second-variation definiteness report")
    p_stab.add_argument("--X", type=float, default=2.0)
    p_stab.add_argument("--Y", type=float, default=0.9)
    p_stab.add_argument("--gamma", type=float, default=1.0)
    p_stab.add_argument("--resolution", type=int, default=64)
    p_stab.add_argument("--csv", help="write the lowest 10 eigenvalues to this CSV")

    p_verify = sub.add_parser("verify", parents=[common], help="run a named invariant suite")
    p_verify.add_argument("suite", help="metric|conservation|equivalence|eigenbound|secondvariation|all")

    args = parser.parse_args(argv)
    try:
        handler = {
            "rigidbody": run_rigidbody,
            "shearflow": run_shearflow,
            "design": run_design,
            "eigen": run_eigen,
            "stability": run_stability,
            "verify": run_verify,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StabilityPreconditionError as exc:
        print(f"stability precondition failed: {exc}", file=sys.stderr)
        return EXIT_STABILITY
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


class StabilityPreconditionError(RuntimeError):
    pass


class NumericalAbort(RuntimeError):
    pass


def _load(args) -> Config:
    if args.config:
        return load_config(args.config)
    return parse_config("", "<defaults>")


def _emit_config(outdir: str, cfg: Config, args) -> None:
    """Copy of the effective configuration, for reproducibility and so the
    plotting scripts can stamp figures with its hash."""
    lines = [f"{k} = {v}" for k, v in sorted(cfg.values.items())]
    lines.append(f"seed = {args.seed}")

    def writer(fh):
        fh.write(("\n".join(lines) + "\n").encode("ascii"))

    from .io import _atomic_write

    _atomic_write(os.path.join(outdir, "config-used.cfg"), writer)


def run_rigidbody(args) -> int:
    from .rigidbody import (ControlGainK, NaNAbort, RigidState, RotorParams, integrate)

    cfg = _load(args)
    try:
        params = RotorParams(
            I1=cfg.get_float("rigid.I1", 3.0), I2=cfg.get_float("rigid.I2", 2.0),
            I3=cfg.get_float("rigid.I3", 1.0), i1=cfg.get_float("rigid.i1", 0.1),
            i2=cfg.get_float("rigid.i2", 0.1), i3=cfg.get_float("rigid.i3", 0.05),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    pi0 = np.array([
        cfg.get_float("state.pi1", 0.0),
        cfg.get_float("state.pi2", 1.0),
        cfg.get_float("state.pi3", 0.0),
    ])
    amp = cfg.get_float("perturbation.amplitude", 0.0)
    if amp:
        rng = XorShift64Star(args.seed)
        pi0 = pi0 + amp * np.array([rng.uniform_signed() for _ in range(3)])
    mode = cfg.get_choice("control.mode", {"off", "gain"}, default="off")
    gain = None
    q0 = cfg.get_float("state.q", 0.0)
    if mode == "gain":
        k = cfg.get_float("control.k", required=True)
        if k == 1.0:
            raise ConfigError("control.k: k must differ from 1")
        gain = ControlGainK(k=k, p_k=cfg.get_float("control.p_k", 0.0))
    dt = cfg.get_float("integration.dt", 1e-3)
    t_end = cfg.get_float("integration.t_end", 100.0)
    stride = cfg.get_int("integration.sample_stride", 100)
    if dt <= 0:
        raise ConfigError("integration.dt: must be positive")

    try:
        traj = integrate(RigidState(pi0, q0), gain, params, dt, t_end, stride)
    except NaNAbort as exc:
        raise NumericalAbort(str(exc)) from exc

    rows = [
        format_row([traj.t[i], *traj.pi[i], traj.q[i], traj.energy[i],
                    traj.casimir[i], traj.p_k[i]])
        for i in range(len(traj.t))
    ]
    path = os.path.join(args.out, "trajectory.csv")
    write_csv(path, "t,Pi1,Pi2,Pi3,q,energy,casimir,p_k", rows)
    _emit_config(args.out, cfg, args)
    print(f"wrote {path} ({len(rows)} samples)")
    return EXIT_OK


def run_shearflow(args) -> int:
    from .control import condition_report, designed_control, explicit_control, uncontrolled
    from .elliptic import MetricNotPositiveError
    from .fluid import (DiagnosticsComputer, FluidState, ForcedSim, VelocitySim,
                        VorticitySim, equilibrium_fields, seeded_perturbation)
    from .geometry import ChannelGeometry

    cfg = _load(args)
    try:
        geom = ChannelGeometry(
            X=cfg.get_float("geometry.X", 2.0),
            Y=cfg.get_float("geometry.Y", 0.9),
            Nx=cfg.get_int("grid.nx", 64 if args.quick else 128),
            Ny=cfg.get_int("grid.ny", 32 if args.quick else 64),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    mode = cfg.get_choice("control.mode", {"off", "designed", "explicit"}, default="off")
    gamma = cfg.get_float("control.gamma", 1.0)
    try:
        if mode == "designed":
            control = designed_control(geom, gamma)
        elif mode == "explicit":
            control = explicit_control(geom, gamma, cfg.get_float("control.a0_const", required=True))
        else:
            control = uncontrolled(geom)
    except ValueError as exc:
        raise StabilityPreconditionError(str(exc)) from exc

    report = condition_report(control, geom)
    if mode != "off" and args.require_stable and not report.passed:
        raise StabilityPreconditionError(
            "; ".join(f"{it.name} lhs={it.lhs:.6f}" for it in report.items if not it.passed)
        )

    formulation = cfg.get_choice("formulation", {"vorticity", "velocity", "forced"},
                                 default="vorticity")
    t_end = cfg.get_float("integration.t_end", 10.0)
    cfl = cfg.get_float("integration.cfl", 0.25)
    nu4 = cfg.get_float("integration.hyperviscosity", 0.0)
    method = cfg.get_choice("integration.method", {"rk4", "lawson"}, default="rk4")
    dt = cfg.get_float("integration.dt", None)
    sample_dt = cfg.get_float("integration.sample_dt", max(t_end / 200.0, 1e-3))
    snap_every = cfg.get_int("output.snapshots", 0)
    amp = cfg.get_float("perturbation.amplitude", 1e-4)

    _, omega_e, _ = equilibrium_fields(geom)
    omega0 = np.broadcast_to(omega_e[:, None], geom.field_shape()).copy()
    if amp:
        omega0 += seeded_perturbation(
            geom, amp, args.seed,
            m_modes=cfg.get_int("perturbation.m_modes", 4),
            n_modes=cfg.get_int("perturbation.n_modes", 4),
        )

    try:
        diag = DiagnosticsComputer(geom, control)
        if mode != "off":
            pairs = [(it.name, f"{it.lhs:.6f} ({'pass' if it.passed else 'FAIL'})")
                     for it in report.items]
            pairs.append(("formal_stability", "pass" if report.passed else "FAIL"))
            if control.design is not None:
                from .control import enstrophy_bound

                rec0 = diag.compute(FluidState(omega=omega0))
                try:
                    pairs.append(("enstrophy_bound",
                                  f"{enstrophy_bound(control, rec0.h2, geom):.17g}"))
                except ValueError:
                    pass
            write_report(os.path.join(args.out, "conditions.txt"), pairs)
        records = []
        snap_count = [0]

        if formulation == "velocity":
            sim = VelocitySim(geom, control, closed_loop=(mode != "off"), cfl=cfl)
            helper = VorticitySim(geom, control, cfl=cfl)
            state = sim.from_vorticity(omega0, helper)
            if dt is None:
                dt = sim.stable_dt(float(np.abs(state.u).max()))
            nsteps = max(1, int(np.ceil(t_end / dt)))
            dt = t_end / nsteps
            every = max(1, int(round(sample_dt / dt)))
            _observe(records, snap_count, diag, state, geom, args.out, snap_every)
            for i in range(nsteps):
                state = sim.step(state, dt)
                if not np.isfinite(state.u).all():
                    raise NumericalAbort(f"non-finite velocity at step {i + 1}")
                if (i + 1) % every == 0 or i + 1 == nsteps:
                    _observe(records, snap_count, diag, state, geom, args.out, snap_every)
        else:
            if formulation == "forced":
                sim = ForcedSim(geom, control, cfl=cfl)
                # q0 = -C nu0 so that the transported momentum starts at zero
                state = FluidState(omega=omega0, q=sim.charge_feedback(omega0))
                if dt is None:
                    dt = sim.stable_dt(float(np.abs(sim.velocity(omega0)).max()))
                nsteps = max(1, int(np.ceil(t_end / dt)))
                dt = t_end / nsteps
                every = max(1, int(round(sample_dt / dt)))
                p0 = sim.momentum_density(state.omega, state.q)
                _observe(records, snap_count, diag, state, geom, args.out, snap_every, p0)
                for i in range(nsteps):
                    state = sim.step_pair(state, dt)
                    if not np.isfinite(state.omega).all():
                        raise NumericalAbort(f"non-finite vorticity at step {i + 1}")
                    if (i + 1) % every == 0 or i + 1 == nsteps:
                        pfield = sim.momentum_density(state.omega, state.q)
                        _observe(records, snap_count, diag, state, geom, args.out,
                                 snap_every, pfield)
            else:
                sim = VorticitySim(geom, control, cfl=cfl, hyperviscosity=nu4,
                                   method=method)
                state = FluidState(omega=omega0)

                def obs(st):
                    _observe(records, snap_count, diag, st, geom, args.out, snap_every)

                try:
                    sim.run(state, t_end, dt=dt, sample_dt=sample_dt, observer=obs)
                except FloatingPointError as exc:
                    raise NumericalAbort(str(exc)) from exc
    except MetricNotPositiveError as exc:
        raise StabilityPreconditionError(str(exc)) from exc

    rows = [r.row() for r in records]
    path = os.path.join(args.out, "timeseries.csv")
    write_csv(path, records[0].HEADER, rows)
    _emit_config(args.out, cfg, args)
    print(f"wrote {path} ({len(rows)} samples)")
    return EXIT_OK


def _observe(records, snap_count, diag, state, geom, outdir, snap_every, pfield=None):
    records.append(diag.compute(state, pfield))
    if snap_every and (len(records) - 1) % snap_every == 0:
        idx = snap_count[0]
        path = os.path.join(outdir, f"omega_{idx:05d}.field")
        write_snapshot(path, f"omega{idx:05d}", state.omega, geom.X, geom.Y, state.t)
        snap_count[0] += 1


def run_design(args) -> int:
    from .control import (condition_report, design_constants, designed_control, uncontrolled)
    from .geometry import ChannelGeometry
    from .stability import (diameter_bound, drifted_setup, lambda1_separable,
                            second_variation_matrix)

    if args.Y >= 1.0:
        print("config error: width out of validity range (Y must be < 1)", file=sys.stderr)
        return EXIT_CONFIG
    geom = ChannelGeometry(args.X, args.Y, Nx=32 if args.quick else 64,
                           Ny=32 if args.quick else 64)
    pairs: list[tuple[str, object]] = [("X", args.X), ("Y", args.Y), ("gamma", args.gamma)]
    if args.gamma != 0.0:
        design = design_constants(args.X, args.Y)
        control = designed_control(geom, args.gamma)
        pairs += [
            ("r", design.r), ("alpha", design.alpha), ("beta", design.beta),
            ("b_bar", design.b_bar), ("b_under", design.b_under),
        ]
        rep = condition_report(control, geom)
        for it in rep.items:
            pairs.append((f"{it.name}_lhs", it.lhs))
            pairs.append((it.name, "pass" if it.passed else "FAIL"))
        pairs.append(("formal_stability", "pass" if rep.passed else "FAIL"))
    else:
        control = uncontrolled(geom)
        pairs.append(("note", "gamma = 0 (uncontrolled); drift condition requires gamma > 0"))
    setup = drifted_setup(control, geom)
    pairs.append(("Z_gamma", setup.Z_gamma))
    pairs.append(("lambda1_lower_bound", diameter_bound(setup, geom)))
    pairs.append(("lambda1_numeric", lambda1_separable(setup, geom)))
    form = second_variation_matrix(control, geom, resolution=32 if args.quick else None)
    hi, lo = form.extremal_eigenvalues()
    pairs.append(("second_variation_max_eig", hi))
    pairs.append(("second_variation_min_eig", lo))
    if hi < 0:
        pairs.append(("stability_note",
                      "second variation negative definite (formally stable)" if args.gamma == 0
                      else "controlled second variation negative definite"))
    for key, val in pairs:
        print(f"{key}: {val:.6f}" if isinstance(val, float) else f"{key}: {val}")
    write_report(os.path.join(args.out, "design.txt"), pairs)
    return EXIT_OK


def run_eigen(args) -> int:
    from .control import designed_control, uncontrolled
    from .geometry import ChannelGeometry
    from .stability import diameter_bound, drifted_setup, lambda1_drifted

    geom = ChannelGeometry(args.X, args.Y, Nx=64, Ny=args.resolution)
    control = designed_control(geom, args.gamma) if args.gamma else uncontrolled(geom)
    setup = drifted_setup(control, geom)
    lam = lambda1_drifted(setup, geom, resolution=args.resolution, k=10 if args.csv else 1)
    lam1 = float(lam[0]) if args.csv else float(lam)
    bound = diameter_bound(setup, geom)
    pairs = [
        ("X", args.X), ("Y", args.Y), ("gamma", args.gamma), ("Z_gamma", setup.Z_gamma),
        ("K", setup.K), ("lambda1_numeric", lam1), ("lambda1_lower_bound", bound),
        ("bound_satisfied", "pass" if lam1 >= bound else "FAIL"),
    ]
    for key, val in pairs:
        print(f"{key}: {val:.6f}" if isinstance(val, float) else f"{key}: {val}")
    if args.csv:
        write_csv(args.csv, "index,eigenvalue",
                  [format_row([i, v]) for i, v in enumerate(np.atleast_1d(lam))])
    return EXIT_OK


def run_stability(args) -> int:
    from .control import designed_control, uncontrolled
    from .geometry import ChannelGeometry
    from .stability import second_variation_matrix

    geom = ChannelGeometry(args.X, args.Y, Nx=max(64, args.resolution), Ny=args.resolution)
    if args.gamma and args.Y < 1.0:
        control = designed_control(geom, args.gamma)
        label = "designed"
    else:
        control = uncontrolled(geom)
        label = "uncontrolled"
    form = second_variation_matrix(control, geom)
    hi, lo = form.extremal_eigenvalues()
    pairs = [
        ("X", args.X), ("Y", args.Y), ("gamma", control.gamma), ("control", label),
        ("resolution", args.resolution),
        ("max_eigenvalue", hi), ("min_eigenvalue", lo),
        ("negative_definite", "pass" if hi < 0 else "FAIL"),
    ]
    for key, val in pairs:
        print(f"{key}: {val:.6f}" if isinstance(val, float) else f"{key}: {val}")
    if args.csv:
        all_eigs = np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in form.blocks]))
        write_csv(args.csv, "index,eigenvalue",
                  [format_row([i, v]) for i, v in enumerate(all_eigs[:10])])
    return EXIT_OK


def run_verify(args) -> int:
    from . import verify as verify_mod

    suites = ("metric", "conservation", "equivalence", "eigenbound", "secondvariation")
    if args.suite == "all":
        selected = suites
    elif args.suite in suites:
        selected = (args.suite,)
    else:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(suites + ('all',))}",
              file=sys.stderr)
        return EXIT_CONFIG

    max_threads = int(os.environ.get("GEOFLOW_THREADS", "1") or "1")
    checks = []
    for name in selected:
        checks.extend(verify_mod.build_suite(name, quick=args.quick))

    results = []
    if max_threads > 1:
        with ThreadPoolExecutor(max_workers=max_threads) as pool:
            futures = [(c.name, pool.submit(_timed, c.fn)) for c in checks]
            for name, fut in futures:
                results.append((name, *fut.result()))
    else:
        for c in checks:
            results.append((c.name, *_timed(c.fn)))

    failed = 0
    for name, ok, elapsed, msg in results:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name} ({elapsed:.2f}s)"
        if msg:
            line += f" - {msg}"
        print(line)
        failed += 0 if ok else 1
    if failed:
        print(f"{failed}/{len(results)} checks failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _timed(fn):
    t0 = time.perf_counter()
    try:
        fn()
        return True, time.perf_counter() - t0, ""
    except AssertionError as exc:
        return False, time.perf_counter() - t0, str(exc)
    except Exception as exc:  # report, do not crash the runner
        return False, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"
