"""Command-line interface.

Subcommands: simulate, fixed-points, stability, slowdown, choi, gate-plan,
sweep, verify.  Trajectories and sweeps are written as delimited text;
reports are printed as JSON.  Everything is deterministic; the only
randomness is the seeded test-state generation inside ``verify``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import io
import json
import sys

import numpy as np

from . import analysis, presets, verify
from .channels import ChannelSpec, classify, load_spec
from .dynamics import CSV_HEADER, IntegratorOpts, integrate
from .errors import BlochampError
from .pauli import PsdState, purity_entropy


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _add_channel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=presets.preset_names(),
                   help="named channel definition")
    p.add_argument("--spec", metavar="FILE",
                   help="JSON channel spec file (alternative to --preset)")
    p.add_argument("--m", type=float, help="jump strength for the m presets")
    p.add_argument("--l0", type=float, help="identity damping coefficient")
    p.add_argument("--l1", type=float, help="sigma_x damping coefficient")
    p.add_argument("--M", type=float, help="gain rate for the two-rate presets")
    p.add_argument("--gamma", type=float,
                   help="dissipation rate for the two-rate presets")


def _build_channel(args) -> ChannelSpec:
    if (args.preset is None) == (args.spec is None):
        raise BlochampError("provide exactly one of --preset or --spec")
    if args.spec is not None:
        return load_spec(args.spec)
    params = {k: getattr(args, k) for k in ("m", "l0", "l1", "M", "gamma")
              if getattr(args, k) is not None}
    return presets.expand_preset(presets.Preset(args.preset, params))


def _add_initial_state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau0", type=float, default=1.0, help="initial trace")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--z0", type=float, default=0.0)


def _add_integrator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("rk45_adaptive", "rk4_fixed"),
                   default="rk45_adaptive")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--h-fixed", type=float, default=1e-3,
                   help="step size for the fixed-step method")
    p.add_argument("--allow-off-cone", action="store_true",
                   help="disable the cone and apex halting checks")
    p.add_argument("--stop-on-surface", action="store_true",
                   help="end the run when the state becomes pure")


def _opts_from_args(args) -> IntegratorOpts:
    return IntegratorOpts(method=args.method, rtol=args.rtol, atol=args.atol,
                          h_fixed=args.h_fixed,
                          allow_off_cone=args.allow_off_cone,
                          stop_on_surface=args.stop_on_surface)


def _initial_from_args(args) -> PsdState:
    return PsdState(args.tau0, [args.x0, args.y0, args.z0],
                    physical=not args.allow_off_cone)


def _write_out(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def _cmd_simulate(args) -> int:
    spec = _build_channel(args)
    opts = _opts_from_args(args)
    sample_times = None
    if args.samples is not None:
        sample_times = np.linspace(0.0, args.t, args.samples)
    traj = integrate(spec, _initial_from_args(args), args.t, opts,
                     sample_times=sample_times)
    buf = io.StringIO()
    traj.write_csv(buf)
    _write_out(buf.getvalue(), args.out)
    return 0


def _cmd_fixed_points(args) -> int:
    spec = _build_channel(args)
    rep = analysis.find_fixed_points(spec)
    _print_json({
        "restricted_to_tau_plane": rep.restricted_to_tau_plane,
        "points": [
            {
                "r": [float(v) for v in p.r],
                "jacobian_eigenvalues": [
                    {"re": float(e.real), "im": float(e.imag)}
                    for e in p.jacobian_eigenvalues
                ],
                "stability": p.stability,
                "residual": float(p.residual),
            }
            for p in rep.points
        ],
        "fixed_lines": [
            {
                "point": [float(v) for v in line.point],
                "direction": [float(v) for v in line.direction],
                "marginal": line.marginal,
            }
            for line in rep.fixed_lines
        ],
    })
    return 0


def _cmd_stability(args) -> int:
    spec = _build_channel(args)
    traj = integrate(spec, _initial_from_args(args), args.t,
                     _opts_from_args(args))
    dev = np.abs(traj.tau - 1.0)
    cls = classify(spec)
    _print_json({
        "classification": {
            "cp": cls.cp,
            "linear": cls.linear,
            "taxonomy_class": cls.taxonomy_class,
            "pseudo_linear": cls.pseudo_linear,
            "unital": cls.unital,
            "trace_preserving": cls.trace_preserving,
        },
        "tau0": args.tau0,
        "initial_trace_deviation": float(dev[0]),
        "final_trace_deviation": float(dev[-1]),
        "deviation_monotone_decaying": bool(np.all(np.diff(dev) <= 1e-12)),
        "tr_x_omega_min": float(traj.tr_x_omega.min()),
        "tr_x_omega_max": float(traj.tr_x_omega.max()),
        "plane_attracting": bool(dev[-1] <= dev[0]),
    })
    return 0


def _cmd_slowdown(args) -> int:
    spec = _build_channel(args)
    if args.fp is not None:
        fp = [float(v) for v in args.fp.split(",")]
    else:
        rep = analysis.find_fixed_points(spec)
        if not rep.points:
            raise BlochampError("no fixed point found; pass one with --fp")
        fp = [float(v) for v in rep.points[0].r]
    direction = [float(v) for v in args.dir.split(",")]
    exponent = analysis.slowdown_exponent(spec, fp, direction)
    _print_json({"fixed_point": fp, "direction": direction,
                 "exponent": exponent})
    return 0


def _cmd_choi(args) -> int:
    spec = _build_channel(args)
    if args.times is not None:
        ts = [float(v) for v in args.times.split(",")]
    elif args.scan is not None:
        ts = list(np.linspace(args.t / args.scan, args.t, args.scan))
    else:
        ts = [args.t]
    spectra = analysis.choi_spectra(spec, ts)
    rows = [
        {
            "t": float(t),
            "eigenvalues": [float(v) for v in spectra[i]],
            "min_eigenvalue": float(spectra[i, 0]),
            "completely_positive": bool(spectra[i, 0] >= -1e-10),
        }
        for i, t in enumerate(ts)
    ]
    _print_json(rows[0] if len(rows) == 1 else rows)
    return 0


def _cmd_gate_plan(args) -> int:
    params = {k: getattr(args, k) for k in ("m", "M", "gamma")
              if getattr(args, k) is not None}
    plan = analysis.plan_amplification(args.gate, params, args.target_purity,
                                       epsilon=args.epsilon, t_max=args.t_max)
    achieved_purity, achieved_entropy = purity_entropy(plan.achieved)
    out = {
        "gate": plan.gate,
        "target_purity": plan.target_purity,
        "epsilon": plan.epsilon,
        "t_gate": plan.t_gate,
        "stages": [],
        "achieved": {
            "tau": plan.achieved.tau,
            "r": [float(v) for v in plan.achieved.r],
            "purity": achieved_purity,
            "entropy": achieved_entropy,
        },
    }
    if plan.pre_amp is not None:
        out["stages"].append({"role": "pre_amplification",
                              "duration": plan.pre_amp.duration})
    out["stages"].append({"role": "main", "duration": plan.main.duration})
    _print_json(out)
    return 0


_SWEEP_OBSERVABLES = ("tau", "x", "y", "z", "r_norm", "purity", "entropy")


def _sweep_one(job):
    name, params, param, value, t, r0, tau0 = job
    params = dict(params)
    params[param] = value
    spec = presets.expand_preset(presets.Preset(name, params))
    traj = integrate(spec, PsdState(tau0, r0), t)
    fin = traj.final_state
    vals = {
        "tau": fin.tau,
        "x": fin.r[0], "y": fin.r[1], "z": fin.r[2],
        "r_norm": fin.r_norm,
        "purity": traj.purity[-1],
        "entropy": traj.entropy[-1],
    }
    return [(param, value, obs, vals[obs]) for obs in _SWEEP_OBSERVABLES]


def _cmd_sweep(args) -> int:
    if args.preset is None:
        raise BlochampError("sweep requires --preset")
    values = [float(v) for v in args.values.split(",")]
    base = {k: getattr(args, k) for k in ("m", "l0", "l1", "M", "gamma")
            if getattr(args, k) is not None}
    base.pop(args.param, None)
    r0 = [args.x0, args.y0, args.z0]
    jobs = [(args.preset, base, args.param, v, args.t, r0, args.tau0)
            for v in values]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    lines = ["param,value,observable,result"]
    for rows in results:
        for param, value, obs, res in rows:
            lines.append(f"{param},{_fmt(value)},{obs},{_fmt(res)}")
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_verify(args) -> int:
    criteria = args.criteria.split(",") if args.criteria else None
    results = verify.run_all(seed=args.seed, criteria=criteria)
    width = max(len(r.cid) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{r.cid:<{width}}  {status}  {r.seconds:7.2f}s  {r.detail}")
        failed += 0 if r.ok else 1
    total = len(results)
    print(f"{total - failed}/{total} criteria passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blochamp",
        description="Simulate and analyze single-qubit Markovian channels "
                    "for Bloch vector amplification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a channel, write a "
                                        f"trajectory ({CSV_HEADER})")
    _add_channel_args(p)
    _add_initial_state_args(p)
    _add_integrator_args(p)
    p.add_argument("--t", type=float, required=True, help="integration time")
    p.add_argument("--samples", type=int,
                   help="resample uniformly to this many points")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fixed-points", help="fixed points, eigenvalues, "
                                            "stability labels")
    _add_channel_args(p)
    p.set_defaults(func=_cmd_fixed_points)

    p = sub.add_parser("stability", help="probe the unit-trace plane with a "
                                         "perturbed initial trace")
    _add_channel_args(p)
    _add_initial_state_args(p)
    _add_integrator_args(p)
    p.add_argument("--t", type=float, default=5.0)
    p.set_defaults(func=_cmd_stability, tau0=1.05)

    p = sub.add_parser("slowdown", help="speed-versus-distance exponent at a "
                                        "fixed point")
    _add_channel_args(p)
    p.add_argument("--fp", help="fixed point as x,y,z (default: first found)")
    p.add_argument("--dir", default="1,0,0", help="approach direction x,y,z")
    p.set_defaults(func=_cmd_slowdown)

    p = sub.add_parser("choi", help="Choi eigenvalues of a linear channel at "
                                    "finite time")
    _add_channel_args(p)
    p.add_argument("--t", type=float, default=0.1, help="time (or scan end)")
    p.add_argument("--times", help="comma-separated list of times")
    p.add_argument("--scan", type=int,
                   help="scan this many times in (0, --t]")
    p.set_defaults(func=_cmd_choi)

    p = sub.add_parser("gate-plan", help="plan an amplification gate to a "
                                         "target purity")
    p.add_argument("--gate", required=True,
                   choices=("linear_cptp", "one_jump", "three_jump",
                            "linear_non_cp"))
    p.add_argument("--m", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--target-purity", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="pre-amplified radius for the two-stage gates")
    p.add_argument("--t-max", type=float, default=1e4,
                   help="refuse plans needing more time than this")
    p.set_defaults(func=_cmd_gate_plan)

    p = sub.add_parser("sweep", help="rerun one preset over a parameter "
                                     "range, one CSV row per observable")
    _add_channel_args(p)
    _add_initial_state_args(p)
    p.add_argument("--param", required=True,
                   help="preset parameter to sweep (m, l0, l1, M, gamma)")
    p.add_argument("--values", required=True,
                   help="comma-separated parameter values")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run the built-in verification suite")
    p.add_argument("--suite", choices=("paper",), default="paper",
                   help="criterion suite to run")
    p.add_argument("--criteria", help="comma-separated subset of criteria")
    p.add_argument("--seed", type=int, default=verify.DEFAULT_SEED,
                   help="seed for the generated test states")
    p.set_defaults(func=_cmd_verify)

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (BlochampError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
