"""Command-line entry point: ``rydgate <subcommand> [options]``.

Exit codes: 0 success, 1 domain error (JSON object on stderr), 2 usage error.
Frequencies on the command line are ordinary MHz; any 2*pi is applied inside.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import warnings

import numpy as np

from . import circuits, errormodel, ghzplan
from .dataset import DatasetError, load_dataset, random_toy_dataset
from .dressing import DressingError, design_triple
from .interactions import (
    Geometry, different_drives_max, offdiag_relation, v_exchange, vcc, vct, vct_max, vtt,
)
from .vdw import (
    OracleError, ResonanceError, find_zeros, scan_c6, zeros_to_json,
)

DOMAIN_ERRORS = (DatasetError, DressingError, ResonanceError, OracleError,
                 circuits.CircuitError, ValueError, OSError)


class UsageError(Exception):
    pass


def grid(text: str) -> np.ndarray:
    """start:stop:count with both endpoints included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if count < 1 or (count > 1 and start == stop):
        raise argparse.ArgumentTypeError(f"grid {text!r} is empty or not monotone")
    return np.linspace(start, stop, count)


def _clean(obj):
    """Make an object JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(doc) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def _config(args) -> dict:
    skip = {"func"}
    return {k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict) -> None:
    payload = dict(payload, config=_config(args))
    _emit(args, dumps(payload))


def _csv_text(header_config: dict, write) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_clean(header_config), sort_keys=True) + "\n")
    write(buf)
    return buf.getvalue()


# --- subcommands -------------------------------------------------------------------

def cmd_dress(args) -> None:
    m = args.m if args.m is not None else load_dataset(args.dataset).m_ratio
    triple = design_triple(m, args.alpha, args.scale)
    if args.omega0_mhz is not None:
        triple = triple.with_omega0(args.omega0_mhz)
    out = {"m_ratio": m, "triple": triple.as_dict()}
    if args.dataset:
        ds = load_dataset(args.dataset)
        triple = triple.with_frequencies(ds).with_lifetimes(ds)
        out["triple"] = triple.as_dict()
    _emit_json(args, out)


def cmd_interact(args) -> None:
    g = Geometry(args.r_um, args.theta)
    mu0, mup = args.mu0, args.muplus
    m = abs(mu0 / mup)
    triple = design_triple(m, args.alpha, 1.0)
    c, t = triple.c.coeffs, triple.t.coeffs
    lhs, rhs = offdiag_relation(c, t, g, mu0, mup)
    bound = vct_max(mu0, mup, g)
    diff = different_drives_max(mu0, mup, g)
    _emit_json(args, {
        "v_cc": vcc(c, g, mu0, mup), "v_tt": vtt(t, g, mu0, mup), "v_ct": vct(c, t, g, mu0, mup),
        "v_exchange": abs(v_exchange(c, t, g, mu0, mup)),
        "offdiag_relation": {"lhs": abs(lhs), "rhs": rhs},
        "vct_max": {"value": bound.value, "c0": bound.c0, "degenerate": bound.degenerate},
        "different_drives_max": {"value": diff.value, "c0": diff.c0},
    })


def _scan(args):
    ds = load_dataset(args.dataset)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return scan_c6(ds, args.alpha, args.omega0, theta=args.theta,
                       threshold=args.threshold, workers=args.workers)


def cmd_scan(args) -> None:
    sc = _scan(args)
    if args.format == "json":
        rows = [dict(zip(["alpha", "omega0_MHz", "c6_c_GHzum6", "c6_t_GHzum6", "flag"], r))
                for r in sc.rows()]
        _emit_json(args, {"rows": rows})
        return
    config = _config(args)

    def write(buf):
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "omega0_MHz", "c6_c_GHzum6", "c6_t_GHzum6", "flag"])
        for row in sc.rows():
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])

    _emit(args, _csv_text(config, write))


def cmd_zeros(args) -> None:
    sc = _scan(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zs = find_zeros(sc, args.tolerance, args.exclusion_radius, args.max_iter)
    _emit_json(args, {"zeros": json.loads(zeros_to_json(zs))})


def _lattice(args) -> errormodel.Lattice:
    if args.lattice:
        return errormodel.load_lattice(args.lattice)
    return errormodel.checkerboard_lattice(args.checkerboard)


def cmd_gate_error(args) -> None:
    lat = _lattice(args)
    params = errormodel.ErrorParams(args.vnn_mhz, args.tau_ms, args.tau_c_ms, args.tau_t_ms,
                                    args.vvdw_mhz)
    budget = errormodel.gate_error(lat, params, args.convention, args.rates)
    _emit_json(args, {"budget": budget.as_dict(), "lattice": lat.to_dict(),
                      "params": params.as_dict()})


def cmd_ghz(args) -> None:
    plan = ghzplan.plan_errors(args.steps, args.vnn_mhz, args.tau_ms, args.combination)
    if args.format == "json":
        _emit_json(args, {"plan": plan.as_dict()})
        return

    def write(buf):
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "n_c", "n_t", "mean_ratio", "omega_opt_MHz", "eps", "cumulative"])
        for row in plan.rows():
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])

    _emit(args, _csv_text(_config(args), write))


def cmd_decompose(args) -> None:
    if args.haar:
        u = circuits.haar_unitary(2, np.random.default_rng(args.seed))
    elif args.unitary is None:
        raise UsageError("decompose needs --unitary or --haar")
    else:
        text = args.unitary
        if text.startswith("@"):
            with open(text[1:]) as fh:
                text = fh.read()
        try:
            u = circuits.parse_matrix(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValueError(f"unitary is not valid JSON: {exc}") from None
    dec = circuits.su2_decompose(u)
    abc = float(np.max(np.abs(dec.A @ dec.B @ dec.C - circuits.I2)))
    w = float(np.max(np.abs(np.exp(1j * dec.delta) * dec.W - u)))
    _emit_json(args, dict(dec.as_dict(), checks={"abc_minus_identity": abc,
                                                 "azbzc_phase_minus_u": w}))


def cmd_simulate(args) -> None:
    if args.ghz_steps is not None:
        run = circuits.ghz_simulate(args.ghz_steps)
        _emit_json(args, {"state": run.state.as_dict(), "fidelity_ghz": run.fidelity,
                          "sites": [list(s) for s in run.sites],
                          "support_after_h": run.support_after_h})
        return
    if args.circuit is None:
        raise UsageError("simulate needs --circuit or --ghz-steps")
    with open(args.circuit) as fh:
        spec = json.load(fh)
    st = circuits.run_circuit(spec)
    out = {"state": st.as_dict(), "norm": st.norm()}
    out["fidelity_ghz"] = st.fidelity(circuits.ghz_reference(st.n))
    _emit_json(args, out)


def cmd_validate_dataset(args) -> None:
    if args.random_toy:
        ds = random_toy_dataset(args.seed)
        name = f"random_toy(seed={args.seed})"
    elif args.dataset:
        ds = load_dataset(args.dataset)
        name = args.dataset
    else:
        raise UsageError("validate-dataset needs --dataset or --random-toy")
    _emit_json(args, {
        "dataset": name, "valid": True, "n_states": len(ds.states), "n_dipoles": len(ds.dipoles),
        "triple": list(ds.triple), "m_ratio": ds.m_ratio, "mu0": ds.mu0, "muplus": ds.muplus,
    })


# --- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rydgate",
        description="Dressed-state Rydberg gate toolkit. Frequencies are ordinary MHz "
                    "(pass 2.7 for 2*pi x 2.7 MHz); lifetimes are ms.",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for randomised helpers")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.set_defaults(func=func)
        return sp

    sp = add("dress", cmd_dress, "design |c>, |t> and solve for the drives")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--m", type=float, help="dipole ratio M = mu0 / mu+")
    src.add_argument("--dataset", help="dataset file or bundled name")
    sp.add_argument("--alpha", type=float, required=True, help="c0 / c0_max")
    sp.add_argument("--scale", type=float, default=1.0, help="largest drive parameter, MHz")
    sp.add_argument("--omega0-mhz", type=float, help="rescale so that Omega0 equals this")

    sp = add("interact", cmd_interact, "dressed dipole-dipole matrix elements and bounds")
    sp.add_argument("--mu0", type=float, required=True)
    sp.add_argument("--muplus", type=float, required=True)
    sp.add_argument("--r-um", type=float, default=1.0)
    sp.add_argument("--theta", type=float, default=math.pi / 2)
    sp.add_argument("--alpha", type=float, default=0.5)

    for name, func, help_ in (("scan", cmd_scan, "C6 scan over (alpha, Omega0)"),
                              ("zeros", cmd_zeros, "simultaneous C6 zeros on a scan")):
        sp = add(name, func, help_)
        sp.add_argument("--dataset", required=True)
        sp.add_argument("--alpha", type=grid, required=True, help="start:stop:count")
        sp.add_argument("--omega0", type=grid, required=True, help="start:stop:count, MHz")
        sp.add_argument("--theta", type=float, default=math.pi / 2)
        sp.add_argument("--threshold", type=float, default=1.0, help="resonance threshold, MHz")
        sp.add_argument("--workers", type=int, default=1)
        if name == "scan":
            sp.add_argument("--format", choices=("csv", "json"), default="csv")
        else:
            sp.add_argument("--tolerance", type=float, default=1e-9)
            sp.add_argument("--exclusion-radius", type=int, default=2)
            sp.add_argument("--max-iter", type=int, default=50)

    sp = add("gate-error", cmd_gate_error, "optimised C_kZ^m error budget on a lattice")
    lat = sp.add_mutually_exclusive_group()
    lat.add_argument("--lattice", help="JSON file with positions, roles, spacing")
    lat.add_argument("--checkerboard", type=int, default=4, help="n for an n x n checkerboard")
    sp.add_argument("--vnn-mhz", type=float, required=True,
                    help="nearest-neighbour interaction in ordinary MHz (2.7 means 2*pi x 2.7 MHz)")
    sp.add_argument("--tau-ms", type=float, required=True)
    sp.add_argument("--tau-c-ms", type=float)
    sp.add_argument("--tau-t-ms", type=float)
    sp.add_argument("--vvdw-mhz", type=float, default=0.0)
    sp.add_argument("--convention", choices=errormodel.CONVENTIONS, default="configuration-average")
    sp.add_argument("--rates", choices=errormodel.RATES, default="main-text")

    sp = add("ghz", cmd_ghz, "GHZ growth schedule and error estimates")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--vnn-mhz", type=float, required=True,
                    help="nearest-neighbour interaction in ordinary MHz (2.7 means 2*pi x 2.7 MHz)")
    sp.add_argument("--tau-ms", type=float, required=True)
    sp.add_argument("--combination", choices=ghzplan.COMBINATIONS, default="sum")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = add("decompose", cmd_decompose, "U = exp(i delta) A Z B Z C")
    sp.add_argument("--unitary", help="JSON 2x2 matrix, or @file")
    sp.add_argument("--haar", action="store_true", help="decompose a Haar-random unitary")

    sp = add("simulate", cmd_simulate, "sparse circuit simulation")
    sp.add_argument("--circuit", help="circuit JSON file")
    sp.add_argument("--ghz-steps", type=int)

    sp = add("validate-dataset", cmd_validate_dataset, "parse and validate a level dataset")
    sp.add_argument("--dataset")
    sp.add_argument("--random-toy", action="store_true", help="validate a seeded random toy dataset")
    return p


_NEG = re.compile(r"^-\d|^-\.\d")


def _join_negative(argv: list[str]) -> list[str]:
    """Attach values such as ``-500:500:50`` to their option so argparse keeps them."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEG.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"rydgate: error: {exc}\n")
        return 2
    except DOMAIN_ERRORS as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                     "command": args.command}, sort_keys=True) + "\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
