"""Command-line front end: ``injnorm {norm,lemma1,witness,embed,suite}``.

Inputs are JSON documents given inline or as file paths; every command
prints one JSON document on stdout.  Exit codes: 0 all checks pass,
1 a check failed, 2 input error, 3 internal optimization failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .construction import check_eqinter2, lemma1_construct, theorem1_witness, theorem2_embedding
from .optimize import CertificationError
from .spaces import LinearMap, Space, decode_array, euclidean_iso_for_lp, space_from_json
from .symtensor import injective_norm, tensor_from_json
from .verify import check_distortion, check_extreme_failure, default_config, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(ValueError):
    pass


def load_json(arg):
    """Parse ``arg`` as inline JSON, or read it as a path."""
    text = arg
    if not arg.lstrip().startswith(("{", "[")):
        try:
            with open(arg) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {arg}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from exc


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def _default_seed():
    try:
        return int(os.environ.get("SYMTENSOR_SEED", "0"))
    except ValueError:
        return 0


def _iso_matrix(args, E):
    """User-supplied ``T`` matrix, the closed-form l_p one, or None."""
    if getattr(args, "iso", None):
        data = load_json(args.iso)
        matrix = data["matrix"] if isinstance(data, dict) else data
        return decode_array(matrix, E.field)
    if getattr(args, "lp_default", False):
        if E.kind != "lp":
            raise InputError("--lp-default needs an l_p space")
        return euclidean_iso_for_lp(E.dim, E.p, E.field)[0].matrix
    return None


def cmd_norm(args):
    E = space_from_json(load_json(args.space))
    t = tensor_from_json(load_json(args.tensor), E)
    res = injective_norm(t, starts=args.starts, seed=args.seed, tol=args.tol,
                         certify=args.certify, resolution=args.grid_delta)
    out = res.to_dict()
    if res.upper is not None:
        out["certified_width"] = res.upper - res.lower
    return out, True


def cmd_lemma1(args):
    E = space_from_json(load_json(args.space))
    M = _iso_matrix(args, E)
    if M is None:
        raise InputError("give --iso or --lp-default")
    T = LinearMap(M, Space.lp(E.dim, 2, E.field), E)
    res = lemma1_construct(E, T, starts=args.starts, seed=args.seed)
    out = res.to_dict()
    checks = [check_eqinter2(res, r, tol=args.tol, starts=args.starts, seed=args.seed) for r in args.r]
    out["eqinter2"] = [c.to_dict() for c in checks]
    ok = res.passed and all(c.passed for c in checks)
    out["pass"] = bool(ok)
    return out, ok


def cmd_witness(args):
    E = space_from_json(load_json(args.space))
    plane = decode_array(load_json(args.plane), E.field) if args.plane else None
    T = _iso_matrix(args, E)
    w = theorem1_witness(E, args.n, plane=plane, T=T, starts=args.starts, seed=args.seed)
    cert = check_extreme_failure(w.u, w.v, w.x1, w.x2, tol=args.tol, starts=args.starts, seed=args.seed,
                                 certify=args.certify, resolution=args.grid_delta)
    out = cert.to_dict()
    out["lemma1"] = w.lemma.to_dict()
    ok = cert.passed and cert.cross_check_passed
    return out, ok


def cmd_embed(args):
    E = space_from_json(load_json(args.space))
    T = _iso_matrix(args, E)
    if T is None and E.kind == "lp" and not E.is_euclidean and args.m == E.dim:
        T = euclidean_iso_for_lp(E.dim, E.p, E.field)[0].matrix
    pre = theorem2_embedding(E, args.m, args.n, T=T, starts=args.starts, seed=args.seed)
    rep = check_distortion(pre, args.n, tol=args.tol, starts=args.starts, seed=args.seed, samples=args.samples)
    return rep.to_dict(), rep.passed


def cmd_suite(args):
    config = load_json(args.config) if args.config else default_config(args.seed)
    if not isinstance(config, dict):
        raise InputError("suite config must be a JSON object")
    overrides = {k: getattr(args, k) for k in ("seed", "tol", "starts") if k in args.given}
    config = {**config, **overrides}
    report = run_suite(config)
    return report, report["summary"]["all_pass"]


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--starts", type=int, default=None, help="optimizer start points (default 64)")
    common.add_argument("--seed", type=int, default=None, help="seed (default: $SYMTENSOR_SEED or 0)")
    common.add_argument("--tol", type=float, default=None, help="check tolerance")
    common.add_argument("--grid-delta", type=float, default=1e-3, help="certified interval width")

    parser = argparse.ArgumentParser(prog="injnorm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="injective norm of a symmetric tensor")
    p.add_argument("--space", required=True)
    p.add_argument("--tensor", required=True)
    p.add_argument("--certify", action="store_true", help="also run the certified search")
    p.set_defaults(func=cmd_norm, default_tol=1e-12)

    p = sub.add_parser("lemma1", parents=[common], help="biorthogonal system of a space")
    p.add_argument("--space", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--iso", help="JSON matrix of T : l_2^m -> F")
    g.add_argument("--lp-default", action="store_true", help="closed-form T for l_p spaces")
    p.add_argument("--r", type=_floats, default=[2.0], help="comma-separated exponents >= 2")
    p.set_defaults(func=cmd_lemma1, default_tol=1e-5)

    p = sub.add_parser("witness", parents=[common], help="certificate that u is not a (complex) extreme point")
    p.add_argument("--space", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--plane", help="JSON list of two vectors spanning F")
    p.add_argument("--iso", help="JSON matrix of T : l_2^2 -> F")
    p.add_argument("--certify", action="store_true")
    p.set_defaults(func=cmd_witness, default_tol=1e-5)

    p = sub.add_parser("embed", parents=[common], help="distortion of the l_inf^m embedding")
    p.add_argument("--space", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--iso", help="JSON matrix of T : l_2^m -> F")
    p.add_argument("--samples", type=int, default=32)
    p.set_defaults(func=cmd_embed, default_tol=1e-5)

    p = sub.add_parser("suite", parents=[common], help="run a verification suite")
    p.add_argument("--config", help="suite configuration JSON (default: built-in l_p^2 grid)")
    p.set_defaults(func=cmd_suite, default_tol=1e-5)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.given = {k for k in ("seed", "tol", "starts") if getattr(args, k) is not None}
    if args.seed is None:
        args.seed = _default_seed()
    if args.tol is None:
        args.tol = args.default_tol
    if args.starts is None:
        args.starts = 64
    try:
        out, ok = args.func(args)
    except (InputError, CertificationError, ValueError, KeyError, TypeError) as exc:
        print(f"injnorm: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"injnorm: optimization failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    sys.stdout.write(dumps(out) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
