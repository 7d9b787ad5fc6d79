"""Command-line front end.

Every analysis subcommand writes a JSON report (or a CSV table with
``--format csv``) to ``--out`` or stdout. Exit status: 0 on success, 1 on
input, parse or I/O errors, 2 when a hypothesis or precondition of the
requested analysis fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .core import (Field, dumps_frame, frame_bounds, harmonic_frame, load_frame, magnitudes,
                   mercedes_frame, onb_frame, random_frame)
from .errors import FramelabError, InputError
from .infdim import make_block_system, verify_blocks, verify_chains
from .local import choose_tail_radius, default_radii, local_radius, local_ratio_profile
from .ortho_reduce import reduce_pair
from .stability import CP_MAX_M, StabilityBudget, complement_property, estimate_stability
from .witness import cn_basis_witness, default_alphas, real_coeff_witness, trace_witness, verify_quadratic_bound

SEED_ENV = "FRAMELAB_SEED"
GEN_KINDS = ("onb", "mercedes", "random_real", "random_complex", "harmonic")
CHAIN_COLUMNS = ("k", "dist_sq_lower", "B_measured_dist_sq", "gap_sq_upper", "measured_gap_sq", "ratio")


class UsageError(InputError):
    kind = "usage_error"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for failed hypotheses
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ------------------------------------------------------------------ parsing


def _parse_entry(tok: str) -> complex:
    t = tok.strip().replace(" ", "")
    if not t:
        raise UsageError("empty entry in vector literal")
    if t.endswith("i"):
        # "1+i", "-i" -> "1+1j", "-1j"
        head = t[:-1]
        if head == "" or head[-1] in "+-":
            head += "1"
        t = head + "j"
    try:
        v = complex(t)
    except ValueError:
        raise UsageError(f"cannot parse vector entry {tok.strip()!r}") from None
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise UsageError(f"non-finite vector entry {tok.strip()!r}")
    return v


def parse_vector(text: str) -> np.ndarray:
    """Parse ``"(1, 0+1i)"`` or a path to a JSON list (complex entries as ``[re, im]``)."""
    s = text.strip()
    if not s.startswith("(") and os.path.isfile(s):
        try:
            with open(s, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read vector file {s}: {exc}") from None
        vals = [complex(*v) if isinstance(v, list) else complex(v) for v in doc]
    else:
        if s.startswith("(") and s.endswith(")"):
            s = s[1:-1]
        vals = [_parse_entry(tok) for tok in s.split(",")]
    arr = np.array(vals, dtype=complex)
    if not np.any(arr.imag):
        return arr.real.copy()
    return arr


def _seed(value: int) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            value = int(env, 0)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    if not 0 <= value < 2 ** 64:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {value}")
    return value


# ------------------------------------------------------------------- output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def _vec(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return [[float(c.real), float(c.imag)] for c in v]
    return [float(c) for c in v]


def _emit(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror}") from None


def _format(args):
    if args.format:
        return args.format
    return "csv" if args.out and args.out.endswith(".csv") else "json"


def _report(args, config, payload, t0):
    doc = {
        "tool": "framelab",
        "version": __version__,
        "command": args.command,
        "config": config,
        "payload": payload,
        "wall_time_s": time.perf_counter() - t0,
    }
    return json.dumps(_jsonable(doc), indent=1, allow_nan=False) + "\n"


def _load(args):
    try:
        return load_frame(args.frame)
    except OSError as exc:
        raise InputError(f"cannot read frame file {args.frame}: {exc.strerror}") from None


# --------------------------------------------------------------- subcommands


def cmd_check(args, seed):
    frame = _load(args)
    payload = {"dim": frame.dim, "m": frame.m, "field": frame.field.value,
               "bounds": frame_bounds(frame).to_dict()}
    if not frame.is_complex:
        if frame.m <= CP_MAX_M:
            payload["complement_property"] = complement_property(frame).to_dict()
        else:
            payload["complement_property"] = None
    csv = None
    if args.x is not None:
        meas = magnitudes(frame, parse_vector(args.x))
        payload["magnitudes"] = meas.values.tolist()
        csv = meas.to_csv()
    return payload, csv


def cmd_stability(args, seed):
    frame = _load(args)
    budget = StabilityBudget(args.starts, args.grid, args.iters)
    rep = estimate_stability(frame, budget, seed=seed, workers=args.threads, oracle=args.oracle)
    return rep.to_dict(), None


def cmd_reduce(args, seed):
    frame = _load(args)
    pair = reduce_pair(frame, parse_vector(args.x), parse_vector(args.y))
    return pair.to_dict(), None


def cmd_local(args, seed):
    frame = _load(args)
    x = parse_vector(args.x)
    rep = local_ratio_profile(frame, x, n_dirs=args.dirs, seed=seed,
                              radii=None if args.radii is None else _radii(frame, x, args.radii))
    payload = rep.to_dict()
    payload["x"] = _vec(rep.x)
    if args.epsilon is not None:
        payload["tail_radius"] = choose_tail_radius(frame, x, args.epsilon, args.verify, seed).to_dict()
    return payload, rep.to_csv()


def _radii(frame, x, count):
    return default_radii(local_radius(frame, x).beta, count)


def cmd_witness(args, seed):
    frame = _load(args)
    x = parse_vector(args.x)
    if args.mode == "basis":
        z, d = x, cn_basis_witness(frame, x)
    else:
        if args.y is None:
            raise UsageError("--mode realcoeff needs --y")
        z, d = real_coeff_witness(frame, x, parse_vector(args.y), seed=seed)
    alphas = default_alphas(args.alphas)
    trace = trace_witness(frame, z, d, alphas)
    payload = {"mode": args.mode, "z": _vec(trace.z), "direction": _vec(trace.direction), **trace.to_dict()}
    payload["quadratic_bound"] = verify_quadratic_bound(frame, z, d, alphas[alphas * _rate(frame, z, d) <= 1.0]).to_dict()
    return payload, trace.to_csv()


def _rate(frame, z, d):
    T = frame.analysis_matrix
    cz, cd = np.abs(T @ z), np.abs(T @ d)
    keep = cd > 1e-14 * max(cd.max(), 1e-300)
    return float(np.max(cd[keep] / cz[keep])) if keep.any() else 0.0


def cmd_infdim(args, seed):
    system = make_block_system(args.kind, args.N, args.K, seed)
    check = verify_blocks(system)
    chains = [verify_chains(system, k, check=check) for k in range(2, args.K + 1)]
    payload = {
        "kind": args.kind,
        "N": args.N,
        "K": args.K,
        "weight_scale": system.weight_scale,
        "blocks": [list(b) for b in system.blocks],
        "block_check": check.to_dict(),
        "chains": [c.to_dict() for c in chains],
    }
    lines = [",".join(CHAIN_COLUMNS)]
    for c in chains:
        vals = (c.dist_sq_lower, c.B * c.measured_dist_sq, c.gap_sq_upper, c.measured_gap_sq, c.ratio)
        lines.append(",".join([str(c.k)] + [repr(float(v)) for v in vals]))
    return payload, "\n".join(lines) + "\n"


def generate(kind: str, n: int, m: int, seed: int = 0):
    if n < 1 or m < 1:
        raise UsageError("n and m must be positive")
    if kind == "onb":
        if m != n:
            raise UsageError("onb needs m = n")
        return onb_frame(n)
    if kind == "mercedes":
        if (n, m) != (2, 3):
            raise UsageError("mercedes is the 2 x 3 frame")
        return mercedes_frame()
    if kind == "random_real":
        return random_frame(n, m, seed, Field.REAL)
    if kind == "random_complex":
        return random_frame(n, m, seed, Field.COMPLEX)
    if kind == "harmonic":
        return harmonic_frame(n, m)
    raise UsageError(f"unknown frame kind {kind!r}")


COMMANDS = {
    "check": cmd_check,
    "stability": cmd_stability,
    "reduce": cmd_reduce,
    "local": cmd_local,
    "witness": cmd_witness,
    "infdim": cmd_infdim,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help=f"RNG seed (default 0; {SEED_ENV} overrides)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (default: available CPUs); never changes results")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"),
                        help="output format (default json, or csv when --out ends in .csv)")

    p = _Parser(prog="framelab", description="Phase-retrieval stability analysis for finite frames.")
    p.add_argument("--version", action="version", version=f"framelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("check", parents=[common], help="validate a frame file, frame bounds, complement property")
    s.add_argument("--frame", required=True)
    s.add_argument("--x", help="optional vector; adds its magnitude measurement")

    s = sub.add_parser("stability", parents=[common], help="estimate the optimal stability constant")
    s.add_argument("--frame", required=True)
    s.add_argument("--starts", type=int, default=32, help="multistart count (default 32)")
    s.add_argument("--grid", type=int, default=64, help="screening samples per start (default 64)")
    s.add_argument("--iters", type=int, default=3000, help="pattern-search iterations per start (default 3000)")
    s.add_argument("--oracle", action="store_true", help="dense-grid cross-check (dim 2 only)")

    s = sub.add_parser("reduce", parents=[common], help="reduce a pair to an orthogonal pair")
    s.add_argument("--frame", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)

    s = sub.add_parser("local", parents=[common], help="local radius and local ratio profile near x")
    s.add_argument("--frame", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--dirs", type=int, default=64, help="random directions (default 64)")
    s.add_argument("--radii", type=int, default=None, help="number of halving radii (default 21)")
    s.add_argument("--epsilon", type=float, default=None, help="also choose a tail radius for this epsilon")
    s.add_argument("--verify", type=int, default=0, help="ball samples checked for the tail radius")

    s = sub.add_parser("witness", parents=[common], help="trace an explicit instability witness")
    s.add_argument("--frame", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--y")
    s.add_argument("--mode", choices=("basis", "realcoeff"), default="basis")
    s.add_argument("--alphas", type=int, default=16, help="alpha = 2^-1 .. 2^-K (default 16)")

    s = sub.add_parser("infdim", parents=[common], help="block-system chains in a finite truncation")
    s.add_argument("--kind", choices=("onb", "two_onb", "perturbed"), default="onb")
    s.add_argument("--N", type=int, default=64)
    s.add_argument("--K", type=int, default=8)

    s = sub.add_parser("gen", parents=[common], help="write a frame file")
    s.add_argument("kind", choices=GEN_KINDS)
    s.add_argument("n", type=int)
    s.add_argument("m", type=int)
    return p


def run(argv=None) -> int:
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        seed = _seed(args.seed)
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        if args.command == "gen":
            _emit(dumps_frame(generate(args.kind, args.n, args.m, seed)), args.out)
            return 0
        payload, csv = COMMANDS[args.command](args, seed)
        fmt = _format(args)
        if fmt == "csv":
            if csv is None:
                raise UsageError(f"{args.command} has no CSV output")
            _emit(csv, args.out)
        else:
            config = {k: v for k, v in vars(args).items() if k not in ("out", "format")}
            config["seed"] = seed
            _emit(_report(args, config, payload, t0), args.out)
        return 0
    except FramelabError as exc:
        sys.stderr.write(json.dumps(_jsonable({"error": exc.to_dict()})) + "\n")
        return exc.exit_code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
