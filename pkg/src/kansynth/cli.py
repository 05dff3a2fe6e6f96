"""Command-line interface: ``kansynth {synth,eval,verify,approx,audit}``.

Exit codes: 0 success, 2 validation failure, 3 tolerance exceeded,
4 I/O or parse error.  ``KANSYNTH_TOLERANCE`` overrides the default
tolerance of ``verify``.
"""

import argparse
import json
import os
import re
import sys

import numpy as np

from . import approximation, synthesis
from .edges import A0, Named, Polynomial
from .errors import KanError
from .graph import MlpNetwork, MlpUnit, collect_affine_dictionary, non_affine_edges
from .serialize import (
    decode_edge,
    encode_edge,
    encode_network,
    jsonable,
    load_network,
    parse_json,
    save_network,
    write_atomic,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TOLERANCE = 3
EXIT_IO = 4
DEFAULT_TOLERANCE = 1e-8


class CliError(Exception):
    def __init__(self, message, code=EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def _json_arg(text):
    """Inline JSON, or ``@path`` to read it from a file."""
    if text.startswith("@"):
        try:
            with open(text[1:], "rb") as fh:
                text = fh.read()
        except OSError as exc:
            raise CliError(f"cannot read {text[1:]}: {exc}", EXIT_IO) from exc
    try:
        return parse_json(text)
    except (ValueError, KanError) as exc:
        raise CliError(f"invalid JSON: {exc}", EXIT_IO) from exc


def parse_sigma(value):
    """``tanh``/``silu``/``relu``/table id, comma-separated poly coefficients, or an edge object."""
    if isinstance(value, dict):
        return decode_edge(value, "/sigma")
    if isinstance(value, list):
        return Polynomial(tuple(float(v) for v in value))
    text = str(value).strip()
    if text.startswith("{"):
        return decode_edge(_json_arg(text), "/sigma")
    if "," in text or _is_number(text):
        return Polynomial(tuple(float(v) for v in text.split(",")))
    return Named(text)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_mlp(doc):
    """MLP from ``{"activation": sigma, "units": [{"w": [...], "b": .., "c": ..}, ...]}``."""
    if isinstance(doc, str):
        doc = _json_arg(doc)
    try:
        units = tuple(MlpUnit(tuple(u["w"]), u.get("b", 0.0), u.get("c", 1.0)) for u in doc["units"])
        sigma = parse_sigma(doc.get("activation", "tanh"))
    except (KeyError, TypeError) as exc:
        raise CliError(f"malformed MLP description: {exc}") from exc
    if not units:
        raise CliError("MLP needs at least one unit")
    return MlpNetwork(len(units[0].w), units, sigma)


def mlp_doc(mlp):
    return {
        "activation": encode_edge(mlp.activation),
        "units": [{"w": list(u.w), "b": u.b, "c": u.c} for u in mlp.units],
    }


def parse_monomials(doc):
    """``[[exponents, coeff], ...]``; coefficients may be numbers or dyadic strings like ``"3/2^2"``."""
    if isinstance(doc, str):
        doc = _json_arg(doc)
    try:
        return [(tuple(int(e) for e in exps), c) for exps, c in doc]
    except (TypeError, ValueError) as exc:
        raise CliError(f"malformed polynomial: {exc}") from exc


def _merge_config(args, parser):
    """Fill options left at their defaults from ``--config`` (file or inline JSON)."""
    if not getattr(args, "config", None):
        return args
    cfg = _json_arg(args.config if args.config.lstrip().startswith("{") else "@" + args.config)
    if not isinstance(cfg, dict):
        raise CliError("config must be a JSON object")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("parser", "func", "command", "config") or not hasattr(args, dest):
            raise CliError(f"unknown config key {key!r}")
        if getattr(args, dest) == parser.get_default(dest):
            setattr(args, dest, value)
    return args


def default_tolerance():
    env = os.environ.get("KANSYNTH_TOLERANCE")
    if env:
        try:
            return float(env)
        except ValueError as exc:
            raise CliError(f"KANSYNTH_TOLERANCE is not a number: {env!r}") from exc
    return DEFAULT_TOLERANCE


def _load(path):
    try:
        return load_network(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot parse {path}: {exc}", EXIT_IO) from exc


def _emit(obj, out=None):
    text = json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"
    if out:
        write_atomic(out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

BUILDERS = ("dyadic-affine", "dyadic-mlp", "mlp-shallow", "mlp-two-hidden", "fd-quadratic", "square", "multiply",
            "polynomial")


def cmd_synth(args):
    name = args.builder
    h = None if args.h is None else float(args.h)
    meta = {"builder": name}
    if name == "dyadic-affine":
        rep = synthesis.dyadic_affine_gadget(str(args.q), str(args.b), args.fan_out_bound, args.strategy)
        net = rep.network
        meta.update(rep.metadata, dictionary=rep.dictionary, family="A0")
    elif name in ("dyadic-mlp", "mlp-shallow", "mlp-two-hidden"):
        if not args.mlp:
            raise CliError(f"{name} needs --mlp")
        mlp = parse_mlp(args.mlp)
        meta["mlp"] = mlp_doc(mlp)
        if name == "dyadic-mlp":
            rep = synthesis.dyadic_mlp_gadget(mlp, args.fan_out_bound, args.strategy)
            net = rep.network
            meta.update(dictionary=rep.dictionary, family="A0")
        elif name == "mlp-shallow":
            net = synthesis.mlp_to_kan_shallow(mlp)
        else:
            net = synthesis.mlp_to_kan_two_hidden(mlp)
    else:
        if not args.sigma:
            raise CliError(f"{name} needs --sigma")
        sigma = parse_sigma(args.sigma)
        if name == "fd-quadratic":
            rep = synthesis.fd_quadratic_gadget(sigma, 1.0 if h is None else h)
            net = rep.network
        elif name == "square":
            rep = synthesis.square_gadget(sigma, h)
            net = rep.network
        elif name == "multiply":
            rep = synthesis.square_gadget(sigma, h)
            net = synthesis.multiply_gadget(rep, dyadic=args.dyadic)
            meta["square"] = {k: rep.metadata[k] for k in ("A", "B", "C", "h")}
        else:
            if args.poly is None:
                raise CliError("polynomial needs --poly")
            rep = synthesis.polynomial_gadget(parse_monomials(args.poly), sigma, h, dyadic=args.dyadic)
            net = rep.network
        if name != "multiply":
            meta.update(rep.metadata)
        meta["dictionary"] = collect_affine_dictionary(net)
    if args.out:
        save_network(args.out, net, meta)
    else:
        sys.stdout.write(encode_network(net, meta).decode("utf-8"))
    print(f"{name}: depth {net.depth}, max width {net.max_width}, {net.num_edges} stored edges", file=sys.stderr)
    return EXIT_OK


def _points(args, n):
    if args.points is None:
        raise CliError("eval needs --points (JSON list or @file)")
    pts = np.asarray(_json_arg(args.points), dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if n == 1 else pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != n:
        raise CliError(f"points must have {n} coordinates each")
    return pts


def cmd_eval(args):
    net, _ = _load(args.network)
    pts = _points(args, net.input_width)
    _emit(net(pts).tolist(), args.out)
    return EXIT_OK


def build_oracle(spec, n):
    """Callable on (points, n) arrays for ``square``, ``product``, ``polynomial:<json>``, ``mlp:<json>``."""
    name, _, payload = spec.partition(":")
    if name == "square":
        if n != 1:
            raise CliError("square oracle needs a scalar-input network")
        return lambda X: X[:, 0] ** 2
    if name == "product":
        return lambda X: np.prod(X, axis=1)
    if name == "polynomial":
        monomials = parse_monomials(payload)
        return lambda X: synthesis.evaluate_polynomial(monomials, X)
    if name == "mlp":
        mlp = parse_mlp(payload)
        if mlp.n != n:
            raise CliError(f"mlp oracle has {mlp.n} inputs, network has {n}")
        return mlp
    raise CliError(f"unknown oracle {name!r}")


def verification_grid(n, lo, hi, density):
    axes = [np.linspace(lo, hi, density)] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def cmd_verify(args):
    net, _ = _load(args.network)
    if net.output_width != 1:
        raise CliError("verify supports scalar-output networks")
    oracle = build_oracle(args.oracle, net.input_width)
    tol = default_tolerance() if args.tolerance is None else float(args.tolerance)
    density = args.grid or approximation.default_grid_density(net.input_width)
    X = verification_grid(net.input_width, args.lo, args.hi, density)
    dev = np.abs(net(X)[:, 0] - np.asarray(oracle(X), dtype=float))
    i = int(np.argmax(dev))
    ok = bool(dev[i] <= tol)
    _emit({"max_deviation": float(dev[i]), "argmax": X[i].tolist(), "tolerance": tol, "points": len(X), "pass": ok},
          args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_approx(args):
    if args.target is None:
        raise CliError("approx needs --target")
    target = approximation.TargetSpec(args.dim, args.lower, args.upper, args.target, args.grid)
    sigma = parse_sigma(args.sigma)
    rep = approximation.approximate_pipeline(
        target, sigma, args.units, r=args.r, mode=args.mode, seed=args.seed, ridge=args.ridge,
        spline_degree=args.spline_degree, spline_interior=args.spline_interior,
    )
    summary = rep.summary()
    summary.update(target=args.target, dimension=args.dim, lower=list(target.lower), upper=list(target.upper),
                   grid=target.grid_density, seed=args.seed, mlp=mlp_doc(rep.mlp))
    if rep.dyadic_mlp is not None:
        summary["dyadic_mlp"] = mlp_doc(rep.dyadic_mlp)
    if args.out:
        _emit(summary, args.out + ".report.json")
        save_network(args.out + ".network.json", rep.kan, {"builder": f"approx/{args.mode}", "target": args.target})
    else:
        summary.pop("mlp")
        summary.pop("dyadic_mlp", None)
        _emit(summary)
    return EXIT_OK


FAMILIES = {"A0": A0}


def cmd_audit(args):
    net, meta = _load(args.network)
    dictionary = collect_affine_dictionary(net)
    others = sorted(encode_edge(f)["kind"] + ":" + json.dumps(encode_edge(f), sort_keys=True) for f in non_affine_edges(net))
    report = {"affine_dictionary": sorted([a, b] for a, b in dictionary), "non_affine": others}
    code = EXIT_OK
    if args.family:
        family = set()
        for name in args.family.split("+"):
            if name == "A0":
                family |= A0
            elif name == "declared":
                declared = meta.get("dictionary")
                if declared is None:
                    raise CliError("document metadata declares no dictionary")
                family |= {tuple(p) for p in declared}
            else:
                raise CliError(f"unknown family {name!r}; use A0, declared or A0+declared")
        outside = sorted(list(p) for p in dictionary - family)
        report.update(family=args.family, contained=not outside, violations=outside)
        if outside:
            code = EXIT_VALIDATION
    _emit(report, args.out)
    return code


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="kansynth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output file (written atomically); stdout if omitted")
        p.add_argument("--config", help="JSON object (inline or file path) supplying option values")
        p.set_defaults(parser=p)
        return p

    p = common(sub.add_parser("synth", help="build a network with a named builder"))
    p.add_argument("builder", choices=BUILDERS)
    p.add_argument("--q", default="1", help="dyadic slope, e.g. 3/2 or -5/2^3")
    p.add_argument("--b", default="0", help="dyadic intercept")
    p.add_argument("--mlp", help="MLP JSON (inline or @file)")
    p.add_argument("--sigma", help="activation: silu|tanh|relu|<table id>|poly coefficients a0,a1,...")
    p.add_argument("--h", help="finite-difference step")
    p.add_argument("--poly", help="monomials JSON [[exponents, coeff], ...] (inline or @file)")
    p.add_argument("--dyadic", action="store_true", help="restrict coefficient handling to A0 gadgets")
    p.add_argument("--fan-out-bound", type=int, default=synthesis.DEFAULT_FAN_OUT_BOUND)
    p.add_argument("--strategy", choices=("fanout", "binary", "auto"), default="fanout")
    p.set_defaults(func=cmd_synth)

    p = common(sub.add_parser("eval", help="evaluate a network file at points"))
    p.add_argument("network")
    p.add_argument("--points", help="JSON list of points (inline or @file)")
    p.set_defaults(func=cmd_eval)

    p = common(sub.add_parser("verify", help="max deviation from a builtin oracle on a grid"))
    p.add_argument("network")
    p.add_argument("--oracle", required=True, help="square | product | polynomial:<json> | mlp:<json>")
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--grid", type=int, default=None, help="points per axis")
    p.add_argument("--lo", type=float, default=-1.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("approx", help="fit, round, compile and certify on a target"))
    p.add_argument("--target", help=f"one of {sorted(approximation.TARGETS)}")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--lower", type=float, default=0.0)
    p.add_argument("--upper", type=float, default=1.0)
    p.add_argument("--sigma", default="tanh")
    p.add_argument("--units", type=int, default=50)
    p.add_argument("--mode", choices=approximation.MODES, default="two_hidden")
    p.add_argument("--r", type=int, default=None, help="dyadic scale (parameters rounded to multiples of 2^-r)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=None, help="points per axis")
    p.add_argument("--ridge", type=float, default=approximation.DEFAULT_RIDGE)
    p.add_argument("--spline-degree", type=int, default=3)
    p.add_argument("--spline-interior", type=int, default=8)
    p.set_defaults(func=cmd_approx)

    p = common(sub.add_parser("audit", help="list the affine dictionary and check containment"))
    p.add_argument("network")
    p.add_argument("--family", help="A0, declared, or A0+declared")
    p.set_defaults(func=cmd_audit)
    return parser


def _attach_negative_values(argv):
    # argparse reads "-7/2^3" as an option; glue such values to the flag before them
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and re.match(r"-[\d.]", tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_attach_negative_values(argv))
    try:
        args = _merge_config(args, args.parser)
        return args.func(args)
    except CliError as exc:
        print(f"kansynth: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"kansynth: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KanError, ValueError) as exc:
        print(f"kansynth: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
