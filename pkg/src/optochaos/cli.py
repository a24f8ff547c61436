"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical divergence.
"""
import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import dynamics, memory, pipeline, spectral
from .dynamics import FIG4_NO_FEEDBACK, FIG4_PARAMS
from .errors import ConfigError, DivergenceError, DomainError, OptochaosError
from .units import angular_to_hz, hz_to_angular

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 2, 3


@contextmanager
def atomic_path(path):
    """Yield a temporary path that replaces ``path`` only on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def write_json(path, payload):
    with atomic_path(path) as tmp, open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(value, field):
    if value is None:
        raise ConfigError("required", field)
    return value


def _physical(cfg):
    return _require(cfg.physical, "physical")


def _dt(cfg, args):
    return args.fixed_step if args.fixed_step is not None else cfg.integration.dt_us


def _integrate(cfg, args):
    ig = cfg.integration
    params = _physical(cfg)
    return dynamics.integrate(params, cfg.initial.conditions(), ig.t_final_us, dt=_dt(cfg, args),
                              sample_stride=ig.sample_stride, transient=ig.transient_us,
                              rel_tol=ig.rel_tol, abs_tol=ig.abs_tol,
                              sample_dt=ig.sample_dt_us)


def _lyapunov(cfg, args):
    ig = cfg.integration
    return dynamics.largest_lyapunov(
        _physical(cfg), cfg.initial.conditions(), ig.lyapunov_horizon_us,
        ig.lyapunov_renorm_us, ig.lyapunov_perturbation, dt=_dt(cfg, args),
        transient=ig.transient_us)


def summary_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".summary.json")


def cmd_simulate(cfg, args):
    traj = _integrate(cfg, args)
    params = _physical(cfg)
    f = dynamics.control_signal_f(traj, params.g1)
    summary = {
        "lambda_max": _lyapunov(cfg, args),
        "mean_f_hz": angular_to_hz(float(np.mean(f))),
        "t_final_us": cfg.integration.t_final_us,
    }
    with atomic_path(args.out) as tmp:
        traj.write_csv(tmp)
    write_json(summary_path(args.out), summary)
    print(json.dumps(summary, sort_keys=True))


def _decouple(cfg, args):
    an = cfg.analysis
    lo = None if an.omega_l_over_2pi_hz is None else hz_to_angular(an.omega_l_over_2pi_hz)
    hi = None if an.omega_u_over_2pi_hz is None else hz_to_angular(an.omega_u_over_2pi_hz)
    if an.tone_amplitude_over_2pi_hz is not None:
        f = pipeline.tone_signal(
            hz_to_angular(an.tone_amplitude_over_2pi_hz),
            hz_to_angular(_require(an.tone_freq_over_2pi_hz, "analysis.tone_freq_over_2pi_hz")),
            _require(an.tone_duration_us, "analysis.tone_duration_us"),
            _require(an.tone_dt_us, "analysis.tone_dt_us"))
        dt = an.tone_dt_us
    else:
        traj = _integrate(cfg, args)
        f = dynamics.control_signal_f(traj, _physical(cfg).g1)
        dt = traj.dt_sample
    return spectral.decouple_signal(f, dt, lo, hi, an.segment_length, an.overlap)


def cmd_decouple(cfg, args):
    res = _decouple(cfg, args)
    with atomic_path(args.out) as tmp, open(tmp, "w") as fh:
        fh.write(res.to_json() + "\n")
    print(res.to_json())


def format_fidelity(value):
    return f"{value:.6f}"


def cmd_fidelity(args):
    if args.n is None:
        if args.temperature_k is None:
            raise ConfigError("give --n or --temperature-k", "n")
        n = memory.thermal_occupancy(args.temperature_k, 2 * np.pi * args.omega1_hz)
    else:
        n = args.n
    gamma1 = hz_to_angular(args.gamma1_hz)
    if args.m is not None:
        gamma1 = memory.effective_damping(args.m, gamma1)
    params = memory.MemoryParams(hz_to_angular(args.nu_hz), gamma1, n)
    value = memory.fidelity_squeezed(params, args.s)
    text = '{"fidelity": %s}' % format_fidelity(value)
    if args.out:
        with atomic_path(args.out) as tmp, open(tmp, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _memory_nu(mem):
    if mem.nu_over_2pi_hz is not None:
        return hz_to_angular(mem.nu_over_2pi_hz)
    g_s = _require(mem.g_s_over_2pi_hz, "memory.nu_over_2pi_hz")
    return memory.nu_from_physical(
        hz_to_angular(g_s), _require(mem.alpha_d, "memory.alpha_d"),
        hz_to_angular(_require(mem.gamma_s_over_2pi_hz, "memory.gamma_s_over_2pi_hz")))


def _memory_n(mem):
    if mem.n is not None:
        return mem.n
    temp = _require(mem.temperature_k, "memory.n")
    return memory.thermal_occupancy(temp, 2 * np.pi * mem.omega1_over_2pi_hz)


def surface(nu_grid, n_grid, s_grid, gamma1, threads=1):
    """Row-major fidelity table, optionally split across threads by nu row."""
    if threads <= 1 or len(nu_grid) < 2:
        return memory.fidelity_surface(nu_grid, n_grid, s_grid, gamma1)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda nu: memory.fidelity_surface([nu], n_grid, s_grid, gamma1),
                              nu_grid))
    return np.concatenate(parts)


def cmd_sweep(cfg, args):
    mem = cfg.memory
    nu_grid = ([hz_to_angular(v) for v in mem.nu_grid_over_2pi_hz]
               if mem.nu_grid_over_2pi_hz is not None else [_memory_nu(mem)])
    n_grid = mem.n_grid if mem.n_grid is not None else [_memory_n(mem)]
    if not (nu_grid and n_grid and mem.s_list):
        raise ConfigError("grids must be non-empty", "memory")
    gamma1 = hz_to_angular(mem.mech_damping_over_2pi_hz)
    if mem.m_factor is not None:
        gamma1 = memory.effective_damping(mem.m_factor, gamma1)
    table = surface(nu_grid, n_grid, mem.s_list, gamma1, args.threads)
    with atomic_path(args.out) as tmp:
        memory.write_surface_csv(tmp, table)
    print(f"wrote {len(table)} rows to {args.out}")


def _repro_fig4(out_dir, args):
    settings = pipeline.Fig4Settings()
    if args.fixed_step is not None:
        settings = pipeline.Fig4Settings(dt=args.fixed_step)
    manifest = {"figure": "fig4", "settings": vars(settings), "cases": {}}
    for tag, params in (("fig4a", FIG4_NO_FEEDBACK), ("fig4b", FIG4_PARAMS)):
        summary, arrays = pipeline.run_fig4_case(params, settings)
        with atomic_path(out_dir / f"{tag}_beta1_spectrum_db.csv") as tmp:
            spectral.write_db_csv(tmp, arrays["mode_omega"], arrays["mode_db"])
        with atomic_path(out_dir / f"{tag}_f_psd.csv") as tmp:
            arrays["psd"].write_csv(tmp)
        with atomic_path(out_dir / f"{tag}_decoupling.json") as tmp, open(tmp, "w") as fh:
            fh.write(arrays["result"].to_json() + "\n")
        manifest["cases"][tag] = {"physical": params.hz_values(), "derived": summary}
    return manifest


def _repro_memory(out_dir, figure):
    if figure == "fig7":
        nu, n, s = pipeline.fig7_grids()
    else:
        nu, n, s = pipeline.fig8_grids()
    cases = {"a": pipeline.FIG7_DAMPING_HZ, "b": pipeline.FIG7_CONTROLLED_DAMPING_HZ}
    manifest = {"figure": figure, "grids": {"nu_rad_per_us": nu, "n": n, "s": s}, "cases": {}}
    for tag, damping_hz in cases.items():
        table = memory.fidelity_surface(nu, n, s, hz_to_angular(damping_hz))
        name = f"{figure}{tag}_surface.csv"
        with atomic_path(out_dir / name) as tmp:
            memory.write_surface_csv(tmp, table)
        manifest["cases"][f"{figure}{tag}"] = {
            "mech_damping_over_2pi_hz": damping_hz, "file": name,
            "m_factor": 1.0 if tag == "a" else pipeline.REFERENCE_M,
            "min_fidelity": float(table[:, 3].min()), "max_fidelity": float(table[:, 3].max())}
    return manifest


def cmd_repro(args):
    out_dir = Path(args.out or f"repro_{args.figure}")
    if args.figure == "fig4":
        manifest = _repro_fig4(out_dir, args)
    else:
        manifest = _repro_memory(out_dir, args.figure)
    write_json(out_dir / "MANIFEST.json", manifest)
    print(f"wrote {args.figure} artifacts to {out_dir}")


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON run configuration")
    parser.add_argument("--out", default=default, help="output path (file or directory)")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="worker threads for sweeps")
    parser.add_argument("--fixed-step", type=float, default=default, metavar="DT_US",
                        help="force fixed-step RK4 with this step (us)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="optochaos", description="Chaotic coherent-feedback noise decoupling toolkit")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("simulate", "integrate the mean-field dynamics"),
                            ("decouple", "compute the decoupling factor M"),
                            ("sweep", "tabulate a fidelity surface")):
        _global_flags(sub.add_parser(name, help=help_text), suppress=True)
    fid = sub.add_parser("fidelity", help="steady-state storage fidelity")
    _global_flags(fid, suppress=True)
    fid.add_argument("--nu-hz", type=float, required=True, help="nu/2pi in Hz")
    fid.add_argument("--gamma1-hz", type=float, required=True, help="Gamma1/2pi in Hz")
    fid.add_argument("--n", type=float, help="thermal occupancy")
    fid.add_argument("--temperature-k", type=float, help="bath temperature, instead of --n")
    fid.add_argument("--omega1-hz", type=float, default=1e6, help="Omega1/2pi for --temperature-k")
    fid.add_argument("--s", type=float, default=0.0, help="squeezing factor")
    fid.add_argument("--m", type=float, help="decoupling factor applied to Gamma1")
    rep = sub.add_parser("repro", help="regenerate figure data")
    _global_flags(rep, suppress=True)
    rep.add_argument("figure", choices=("fig4", "fig7", "fig8"))
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        if args.threads < 1:
            raise ConfigError("must be >= 1", "--threads")
        if args.command == "fidelity":
            cmd_fidelity(args)
        elif args.command == "repro":
            cmd_repro(args)
        else:
            for flag in ("config", "out"):
                if getattr(args, flag) is None:
                    raise ConfigError(f"{args.command} requires --{flag}", f"--{flag}")
            cfg = cfgmod.load(args.config)
            {"simulate": cmd_simulate, "decouple": cmd_decouple,
             "sweep": cmd_sweep}[args.command](cfg, args)
    except DivergenceError as exc:
        print(f"optochaos: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, DomainError, OptochaosError) as exc:
        print(f"optochaos: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
