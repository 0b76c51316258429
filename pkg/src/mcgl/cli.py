"""Batch front end.

Subcommands: maxwell-point, solve, sweep, rank, second-variation,
limit-check, simulate.  Parameters come from an INI-style config file
(--config) with flag overrides; every emitted file starts with a comment
header carrying the config hash and tool version so results are traceable.
Identical config + seed produce byte-identical outputs.

Exit codes: 0 success, 2 invalid potential, 3 out-of-domain parameters,
4 solver failure, 5 simulation stiffness failure.
"""

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import cahn_hilliard as ch
from . import phase_plane as pp
from . import potential as pot
from . import stationary as st
from .potential import DomainError, PotentialError, PotentialSpec

EXIT_OK = 0
EXIT_BAD_POTENTIAL = 2
EXIT_OUT_OF_DOMAIN = 3
EXIT_SOLVER_FAILURE = 4
EXIT_STIFFNESS = 5

_DEFAULTS = {
    "potential": {"coeffs": "2.25, -6.0, 5.5, -2.0, 0.25"},
    "solver": {"tol": "1e-10", "quad_tol": "1e-12", "n_max": "3"},
    "sweep": {"eps_list": "0.2, 0.15, 0.1, 0.08", "r_list": "1.5, 2.0, 2.5"},
    "limit": {"eps_list": "0.2, 0.1, 0.05", "r": "2.0",
              "halfwidth": "0.1", "grid_size": "4001"},
    "simulate": {"n_cells": "200", "t_end": "10.0", "safety": "0.9",
                 "init": "step", "r": "2.0"},
    "output": {"dir": ".", "seed": "0"},
}


def _fmt(x) -> str:
    """17-significant-digit decimal rendering, round-trip safe."""
    if isinstance(x, float) and math.isnan(x):
        return "NaN"
    return format(float(x), ".17g")


def _load_config(path):
    cfg = configparser.ConfigParser()
    cfg.read_dict(_DEFAULTS)
    if path:
        with open(path) as fh:
            cfg.read_file(fh)
    return cfg


def _config_hash(cfg) -> str:
    blob = json.dumps({s: dict(cfg[s]) for s in cfg.sections()},
                      sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header(cfg) -> str:
    return f"# mcgl {__version__} config={_config_hash(cfg)}\n"


def _floats(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def _potential(cfg) -> PotentialSpec:
    sec = cfg["potential"]
    kwargs = {}
    if "domain_floor" in sec:
        kwargs["domain_floor"] = sec.getfloat("domain_floor")
    if "window_max" in sec:
        kwargs["window_max"] = sec.getfloat("window_max")
    return PotentialSpec(coeffs=tuple(_floats(sec["coeffs"])), **kwargs)


def _outpath(cfg, name):
    d = cfg["output"]["dir"]
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, name)


def _write_csv(path, cfg, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(_header(cfg))
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v)
                              for v in row) + "\n")


def _write_json(path, cfg, payload):
    payload = {"tool_version": __version__,
               "config_hash": _config_hash(cfg), **payload}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _n_workers():
    env = os.environ.get("MCGL_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_maxwell_point(cfg, args):
    p = _potential(cfg)
    mp = pot.maxwell_point(p)
    payload = {"sigma0": mp.sigma0, "b0": mp.b0, "alpha0": mp.alpha0,
               "beta0": mp.beta0, "zeta0": mp.zeta0}
    print(json.dumps(payload, indent=2, sort_keys=True))
    _write_json(_outpath(cfg, "maxwell_point.json"), cfg, payload)
    return EXIT_OK


def cmd_solve(cfg, args):
    p = _potential(cfg)
    mp = pot.maxwell_point(p)
    eps, r = args.eps, args.r
    fbar = pp.eps_bound(mp, p).f_bar
    if not 0.0 < eps < fbar:
        raise DomainError(f"eps={eps} outside (0, {fbar})")
    tol = cfg["solver"].getfloat("tol")
    report = st.solve_simple(p, mp, eps, r, tol=tol)
    prof = st.reconstruct_profile(p, report, eps,
                                  grid_size=args.grid_size)
    tag = f"eps{eps:g}_r{r:g}"
    payload = {
        "eps": eps, "r": r,
        "sigma": report.delta.sigma, "b": report.delta.b,
        "ln_h1": report.ln_h[0], "ln_h2": report.ln_h[1],
        "k1": report.k[0], "k2": report.k[1],
        "res0": report.residuals[0], "res1": report.residuals[1],
        "z1": report.tp.z1, "z2": report.tp.z2,
        "energy": report.energy, "iters": report.iterations,
    }
    _write_json(_outpath(cfg, f"solve_{tag}.json"), cfg, payload)
    _write_csv(_outpath(cfg, f"profile_{tag}.csv"), cfg, ["x", "u"],
               zip(prof.xs, prof.us))
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


_SWEEP_COLUMNS = ["eps", "r", "sigma", "b", "ln_h1", "ln_h2", "k1", "k2",
                  "res0", "res1", "z1", "z2", "energy", "iters", "status"]


def _sweep_row(p, mp, tol, eps, r):
    try:
        rep = st.solve_simple(p, mp, eps, r, tol=tol)
        return [eps, r, rep.delta.sigma, rep.delta.b,
                rep.ln_h[0], rep.ln_h[1], rep.k[0], rep.k[1],
                rep.residuals[0], rep.residuals[1],
                rep.tp.z1, rep.tp.z2, rep.energy, float(rep.iterations),
                "ok"]
    except (st.SolverError, DomainError) as exc:
        nan = math.nan
        return [eps, r] + [nan] * 12 + [type(exc).__name__]


def cmd_sweep(cfg, args):
    p = _potential(cfg)
    mp = pot.maxwell_point(p)
    tol = cfg["solver"].getfloat("tol")
    eps_list = _floats(cfg["sweep"]["eps_list"])
    r_list = _floats(cfg["sweep"]["r_list"])
    grid = sorted(((r, eps) for r in r_list for eps in eps_list),
                  key=lambda kv: (kv[0], -kv[1]))
    with ThreadPoolExecutor(max_workers=_n_workers()) as ex:
        rows = list(ex.map(lambda re: _sweep_row(p, mp, tol, re[1], re[0]),
                           grid))
    path = _outpath(cfg, "convergence.csv")
    _write_csv(path, cfg, _SWEEP_COLUMNS, rows)
    print(path)
    return EXIT_OK


def cmd_rank(cfg, args):
    p = _potential(cfg)
    mp = pot.maxwell_point(p)
    n_max = cfg["solver"].getint("n_max")
    entries = st.rank_energies(p, mp, args.eps, args.r, n_max=n_max)
    path = _outpath(cfg, "rank.csv")
    _write_csv(path, cfg, ["label", "energy"], entries)
    for label, energy in entries:
        print(f"{label},{_fmt(energy)}")
    return EXIT_OK


def cmd_second_variation(cfg, args):
    p = _potential(cfg)
    mp = pot.maxwell_point(p)
    tol = cfg["solver"].getfloat("tol")
    rep = st.solve_n_transition(p, mp, args.eps, args.r, args.n, tol=tol)
    prof = st.reconstruct_profile(p, rep, args.eps, grid_size=args.grid_size)
    dz = st.destabilize_nonmonotone(p, args.eps, prof, rep)
    payload = {"eps": args.eps, "r": args.r, "n": args.n,
               "J": dz.J, "gamma": dz.gamma, "phi1": dz.phi1, "j1": dz.j1}
    _write_json(_outpath(cfg, "second_variation.json"), cfg, payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_limit_check(cfg, args):
    p = _potential(cfg)
    mp = pot.maxwell_point(p)
    sec = cfg["limit"]
    r = sec.getfloat("r")
    halfwidth = sec.getfloat("halfwidth")
    grid_size = sec.getint("grid_size")
    lp = st.limit_profile(mp, r)
    rows = []
    for eps in sorted(_floats(sec["eps_list"]), reverse=True):
        rep = st.solve_simple(p, mp, eps, r)
        prof = st.reconstruct_profile(p, rep, eps, grid_size=grid_size)
        sup, x_if, err = st.convergence_metrics(prof, lp, halfwidth)
        rows.append([eps, r, sup, x_if, err])
    path = _outpath(cfg, "limit.csv")
    _write_csv(path, cfg, ["eps", "r", "sup_dev", "interface_x",
                           "interface_err"], rows)
    print(path)
    return EXIT_OK


def cmd_simulate(cfg, args):
    p = _potential(cfg)
    sec = cfg["simulate"]
    r = args.r if args.r is not None else sec.getfloat("r")
    sim = ch.SimConfig(
        n_cells=sec.getint("n_cells"),
        eps=args.eps if args.eps is not None else 0.1,
        potential=p,
        t_end=sec.getfloat("t_end"),
        safety=sec.getfloat("safety"),
    )
    init = args.init or sec["init"]
    if init == "maxwell":
        u0 = ch.init_maxwell(sim, r)
    elif init == "step":
        u0 = ch.init_step(sim, r)
    elif init == "spinodal":
        u0 = ch.init_spinodal(sim, r)
    elif init == "file":
        data = np.loadtxt(args.init_file, delimiter=",", comments="#",
                          skiprows=0)
        u0 = np.interp(ch.cell_centers(sim), data[:, 0], data[:, 1])
    else:
        raise DomainError(f"unknown init '{init}'")
    state = ch.run(sim, u0)
    mass, energy, max_dt = ch.diagnostics(state)
    trace_rows = [[t, state.mass0, e] for t, e in state.energy_trace]
    _write_csv(_outpath(cfg, "trace.csv"), cfg, ["t", "mass", "energy"],
               trace_rows)
    _write_csv(_outpath(cfg, "snapshot.csv"), cfg, ["x", "u"],
               zip(ch.cell_centers(sim), state.u))
    print(json.dumps({"t": state.t, "mass": mass, "energy": energy,
                      "max_dt_used": max_dt}, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser():
    ap = argparse.ArgumentParser(
        prog="mcgl",
        description="Transition-layer solver and Cahn-Hilliard simulator "
                    "for the mean-curvature Ginzburg-Landau energy")
    ap.add_argument("--config", default=None, help="INI config file")
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS so a subcommand without the flag does not clobber the
    # top-level --config value with None
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="INI config file")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("maxwell-point", help="equal-area construction",
                   parents=[common])

    sp = sub.add_parser("solve", help="solve one (eps, r)", parents=[common])
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--grid-size", type=int, default=2001, dest="grid_size")

    sub.add_parser("sweep", parents=[common],
                   help="solve the (eps, r) grid from the config")

    sp = sub.add_parser("rank", parents=[common],
                        help="energy ranking at one (eps, r)")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--r", type=float, required=True)

    sp = sub.add_parser("second-variation", parents=[common],
                        help="instability certificate for n transitions")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--grid-size", type=int, default=4001, dest="grid_size")

    sub.add_parser("limit-check", parents=[common],
                   help="sharp-interface convergence table")

    sp = sub.add_parser("simulate", parents=[common],
                        help="run the gradient flow")
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--r", type=float, default=None)
    sp.add_argument("--init", choices=["maxwell", "step", "spinodal", "file"],
                    default=None)
    sp.add_argument("--init-file", dest="init_file", default=None)
    return ap


_DISPATCH = {
    "maxwell-point": cmd_maxwell_point,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "rank": cmd_rank,
    "second-variation": cmd_second_variation,
    "limit-check": cmd_limit_check,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return _DISPATCH[args.command](cfg, args)
    except PotentialError as exc:
        print(f"invalid potential (double-well hypotheses): {exc}",
              file=sys.stderr)
        return EXIT_BAD_POTENTIAL
    except DomainError as exc:
        print(f"out of domain: {exc}", file=sys.stderr)
        return EXIT_OUT_OF_DOMAIN
    except st.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    except ch.StiffnessError as exc:
        print(f"simulation stiffness failure: {exc}", file=sys.stderr)
        return EXIT_STIFFNESS


if __name__ == "__main__":
    sys.exit(main())
