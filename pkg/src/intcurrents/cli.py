"""Command line interface.

Exit codes: 0 success, 1 a check ran and failed (its report is still
written), 2 the input could not be processed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments as exp
from .currentfile import CurrentFile, read_current_file, write_current_file
from .currents import boundary, mass
from .curves import decompose_1current
from .errors import InputError
from .flatnorm import flat_distance, flat_norm
from .mesh import MetricMode
from .pa_maps import pushforward, refine_target
from .rigidity import _jsonable, euclidean_rigidity_chain, rigidity_check
from .slicing import (
    slice as slice_current,
    slice_boundary_check,
    slice_commutation_check,
    slice_mass_integral,
    slice_report_csv,
    uniform_levels,
)

OK, CHECK_FAILED, BAD_INPUT = 0, 1, 2


def _floats(text, what):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--{what}: expected comma-separated numbers, got {text!r}") from None


def _emit(args, payload):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    if not args.input:
        raise InputError("--input is required")
    return read_current_file(args.input)


# ------------------------------------------------------------------ commands
def cmd_mass(args):
    cf = _load(args)
    rep = mass(cf.chain(args.chain))
    print(f"mass {rep.total!r}")
    if args.out:
        _emit(args, {"chain": args.chain, "mass": rep.total})
    return OK


def cmd_boundary(args):
    cf = _load(args)
    T = cf.chain(args.chain)
    B = boundary(T)
    print(f"boundary of {args.chain}: {len(B)} simplices, mass {mass(B).total!r}")
    if args.out:
        cf.chains[f"{args.chain}_boundary"] = B
        write_current_file(args.out, cf)
    return OK


def cmd_pushforward(args):
    cf = _load(args)
    T, psi = cf.chain(args.chain), cf.map(args.map)
    target = cf.target
    if target is None or args.refine:
        target, _ = refine_target(psi, T, base=cf.target)
    P = pushforward(psi, T, target)
    print(f"pushforward of {args.chain}: {len(P)} simplices, mass {mass(P).total!r}")
    if args.out:
        write_current_file(args.out, CurrentFile(target, {"pushforward": P}))
    return OK


def _direction(args, n):
    v = np.array(_floats(args.direction, "direction") if args.direction else [0.0] * (n - 1) + [1.0])
    if len(v) != n:
        raise InputError(f"--direction needs {n} components")
    return v / np.linalg.norm(v)


def cmd_slice(args):
    cf = _load(args)
    T, psi = cf.chain(args.chain), cf.map(args.map)
    v = _direction(args, psi.target_dim)
    if "," in args.levels or "." in args.levels:
        levels, weight = np.array(_floats(args.levels, "levels")), None
    else:
        levels, weight = uniform_levels(T, psi, v, int(args.levels))
    fam = slice_current(T, psi, v, levels, weight)
    comm = None
    if cf.target is not None:
        comm = slice_commutation_check(fam, T, psi, cf.target)
    text = slice_report_csv(fam, comm)
    bc = slice_boundary_check(fam)
    failed = bc.max_defect > args.tol or (comm is not None and max(comm, default=0.0) > args.tol)
    if weight is not None:
        si = slice_mass_integral(fam, T, psi)
        print(f"integral {si.integral!r} bound {si.mass_bound!r} holds {si.holds}")
        failed = failed or not si.holds
    print(f"levels {len(fam)} max_boundary_defect {bc.max_defect!r} shifted {len(fam.shifts)}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return CHECK_FAILED if failed else OK


def cmd_decompose(args):
    cf = _load(args)
    dec = decompose_1current(cf.chain(args.chain))
    _emit(
        args,
        {
            "curves": dec.curves,
            "loops": dec.loops,
            "curve_lengths": dec.curve_lengths,
            "loop_lengths": dec.loop_lengths,
            "total_length": dec.total_length(),
        },
    )
    return OK


def _flat_payload(res):
    return {
        "value": res.value,
        "solver_status": res.solver_status,
        "filling_mass": res.filling_mass if res.solver_status == "optimal" else None,
        "residual_mass": res.residual_mass if res.solver_status == "optimal" else None,
        "integral": res.is_integral,
    }


def cmd_flatnorm(args):
    cf = _load(args)
    res = flat_norm(cf.chain(args.chain), dump_lp=args.dump_lp)
    _emit(args, _flat_payload(res))
    return OK if res.solver_status == "optimal" else CHECK_FAILED


def cmd_flatdist(args):
    cf = _load(args)
    A = cf.chain(args.chain)
    other = read_current_file(args.input2) if args.input2 else cf
    B = other.chain(args.chain2 or args.chain)
    res = flat_distance(A, B, dump_lp=args.dump_lp)
    _emit(args, _flat_payload(res))
    return OK if res.solver_status == "optimal" else CHECK_FAILED


def _ball(cf):
    if cf.target is None or "ball" not in cf.target_chains:
        raise InputError("target.chains.ball: rigidity checks need the ball current in the target section")
    return cf.target_chains["ball"]


def cmd_rigidity(args):
    cf = _load(args)
    X, psi = cf.chain(args.chain), cf.map(args.map)
    rep = rigidity_check(X, psi, _ball(cf), MetricMode.parse(args.metric), args.samples, args.seed, args.tol)
    payload = rep.to_dict()
    _emit(args, payload)
    if args.out:
        print(f"verdict {rep.verdict} violated {rep.violated} max_distortion {rep.max_distortion!r}")
    return OK if rep.verdict == "consistent_with_isometry" else CHECK_FAILED


def cmd_chain(args):
    cf = _load(args)
    X, psi = cf.chain(args.chain), cf.map(args.map)
    target = cf.target_chains.get("ball") if cf.target is not None else None
    ch = euclidean_rigidity_chain(X, psi, target, args.tol)
    _emit(args, {"chain": list(ch.chain), "gaps": list(ch.gaps), "all_equal": ch.all_equal,
                 "per_simplex_special_orthogonal": ch.per_simplex_special_orthogonal})
    return OK if ch.all_equal else CHECK_FAILED


def _specs(args):
    fam = args.family
    if fam == "annulus":
        return [exp.InstanceSpec("annulus", args.n_segments, eps=e) for e in _floats(args.eps or "", "eps")]
    if fam == "schwarzschild_graph":
        grid = tuple(int(x) for x in _floats(args.grid, "grid"))
        return [
            exp.InstanceSpec("schwarzschild_graph", m=m, r=args.r, r0=args.r0, grid=grid)
            for m in _floats(args.m or "", "m")
        ]
    return [exp.InstanceSpec(fam, args.n_segments)]


def cmd_generate(args):
    specs = _specs(args)
    if len(specs) != 1:
        raise InputError("generate makes one instance: pass a single --eps or --m value")
    inst = exp.generate(specs[0])
    cf = CurrentFile(inst.X.complex, {"T": inst.X}, {"psi": inst.psi}, inst.ball.complex, {"ball": inst.ball})
    if not args.out:
        raise InputError("--out is required for generate")
    write_current_file(args.out, cf)
    print(f"{inst.spec.kind}: {inst.X.complex.n_simplices(inst.X.dim)} simplices, mesh size {inst.mesh_size!r}")
    return OK


def cmd_stability(args):
    specs = _specs(args)
    if not specs:
        raise InputError("stability-run needs --eps (annulus) or --m (schwarzschild_graph) values")
    tab = exp.stability_run(specs, MetricMode.parse(args.metric), args.samples, args.seed)
    text = tab.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    ok = tab.flat_distance_decreasing and all(r["chain_monotone"] for r in tab.rows)
    return OK if ok else CHECK_FAILED


COMMANDS = {
    "mass": cmd_mass,
    "boundary": cmd_boundary,
    "pushforward": cmd_pushforward,
    "slice": cmd_slice,
    "decompose": cmd_decompose,
    "flatnorm": cmd_flatnorm,
    "flatdist": cmd_flatdist,
    "rigidity-check": cmd_rigidity,
    "chain-check": cmd_chain,
    "generate": cmd_generate,
    "stability-run": cmd_stability,
}


def build_parser():
    p = argparse.ArgumentParser(prog="intcurrents", description="Integral currents on simplicial complexes.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--input")
        s.add_argument("--input2")
        s.add_argument("--chain", default="T")
        s.add_argument("--chain2")
        s.add_argument("--map", default="psi")
        s.add_argument("--direction")
        s.add_argument("--levels", default="256")
        s.add_argument("--samples", type=int, default=64)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--tol", type=float, default=1e-6)
        s.add_argument("--metric", default="ambient")
        s.add_argument("--out")
        s.add_argument("--dump-lp")
        s.add_argument("--refine", action="store_true", help="refine the target by the image arrangement")
        s.add_argument("--family", choices=exp.KINDS, default="disk")
        s.add_argument("--n-segments", type=int, default=512)
        s.add_argument("--eps")
        s.add_argument("--m")
        s.add_argument("--r", type=float, default=2.0)
        s.add_argument("--r0", type=float)
        s.add_argument("--grid", default="128,128")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
