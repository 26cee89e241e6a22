"""Command-line entry point.

Exit codes: 0 ok, 2 invalid instance, 3 solver failure, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from .certificate import DEFAULT_GAMMA
from .core import parse_dyadic
from .errors import HyperPoissonError, InvalidInstance, InvariantViolation, VerificationError
from .lifted import build_lifted_graph, to_dot
from .recovery import DEFAULT_GRID_BITS
from .serialization import (
    format_rational,
    poisson_certificate,
    read_instance,
    regularized_certificate,
    verify_certificate,
)
from .solver import DEFAULT_EPSILON

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

log = logging.getLogger("hyperpoisson")


def _dyadic_arg(text):
    try:
        return parse_dyadic(text).to_fraction()
    except HyperPoissonError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_solver_flags(p):
    p.add_argument("instance", help="instance file (JSON)")
    p.add_argument("--eps", type=float, default=DEFAULT_EPSILON, help="stage-1 gap target (default 1e-9)")
    p.add_argument("--grid-bits", type=int, default=DEFAULT_GRID_BITS, help="rounding grid rho = 2^-M (default 20)")
    p.add_argument("--gamma", type=_dyadic_arg, default=DEFAULT_GAMMA, help="certificate repair budget (default 2^-30)")
    p.add_argument("--enforce-bounds", action="store_true", help="reject instances outside the polynomial bounds")
    p.add_argument("--trace", action="store_true", help="log stage-1 iterations and store them in the JSON output")
    p.add_argument("--json-out", metavar="PATH", help="write the certificate or result as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperpoisson", description="Certified hypergraph Poisson solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the Poisson problem and emit a certificate")
    _add_solver_flags(p)

    p = sub.add_parser("solve-reg", help="solve the regularized problem")
    _add_solver_flags(p)
    p.add_argument("--lambda", dest="lam", type=_dyadic_arg, required=True)

    p = sub.add_parser("resolvent", help="evaluate the resolvent at y")
    _add_solver_flags(p)
    p.add_argument("--lambda", dest="lam", type=_dyadic_arg, required=True)
    p.add_argument("--y-file", required=True, help="JSON list of dyadic values")

    p = sub.add_parser("response", help="pairwise response x_u - x_v")
    _add_solver_flags(p)
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--v", type=int, required=True)

    p = sub.add_parser("verify", help="re-check a certificate in exact arithmetic")
    p.add_argument("certificate")
    p.add_argument("--oracle", action="store_true", help="also compare against the subgradient reference")
    p.add_argument("--json-out", metavar="PATH")

    p = sub.add_parser("export-lifted", help="dump the lifted graph")
    p.add_argument("instance")
    p.add_argument("--format", choices=("dot", "dimacs"), default="dot")
    p.add_argument("--grid-bits", type=int, default=DEFAULT_GRID_BITS,
                   help="for dimacs: scale the demand by 2^M")
    p.add_argument("-o", "--output", metavar="PATH")
    return parser


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _kwargs(args):
    return {"epsilon": args.eps, "grid_bits": args.grid_bits, "gamma": args.gamma,
            "enforce_bounds": args.enforce_bounds}


def _cmd_solve(args):
    from .solver import solve_poisson

    inst = read_instance(args.instance)
    res = solve_poisson(inst.hypergraph, inst.demand, **_kwargs(args))
    cert = poisson_certificate(inst.hypergraph, inst.demand, res, trace=args.trace)
    if args.json_out:
        _write_json(args.json_out, cert)
    print(f"primal {float(res.primal):.12g}")
    print(f"dual   {float(res.dual):.12g}")
    print(f"gap    {float(res.gap):.3e}  ({format_rational(res.gap)})")
    print("x      " + " ".join(f"{float(v):.10g}" for v in res.x))
    return EXIT_OK


def _cmd_solve_reg(args, y=None):
    from .regularized import resolvent, solve_regularized

    inst = read_instance(args.instance)
    h = inst.hypergraph
    if y is None:
        res = solve_regularized(h, args.lam, inst.demand, **_kwargs(args))
        s = inst.demand
    else:
        res = resolvent(h, args.lam, y, **_kwargs(args))
        s = res.instance.demand
    params = {"epsilon": args.eps, "grid_bits": args.grid_bits, "gamma": Fraction(args.gamma)}
    cert = regularized_certificate(h, args.lam, s, res, params, trace=args.trace)
    if args.json_out:
        _write_json(args.json_out, cert)
    print(f"primal {float(res.report.primal):.12g}")
    print(f"dual   {float(res.report.dual):.12g}")
    print(f"gap    {float(res.gap):.3e}  ({format_rational(res.gap)})")
    print("x      " + " ".join(f"{float(v):.10g}" for v in res.x))
    return EXIT_OK


def _cmd_resolvent(args):
    with open(args.y_file, encoding="utf-8") as fh:
        try:
            y = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInstance(f"{args.y_file}: not valid JSON ({exc})") from None
    if not isinstance(y, list):
        raise InvalidInstance("y file must hold a JSON list")
    y = [parse_dyadic(v).to_fraction() if isinstance(v, str) else v for v in y]
    return _cmd_solve_reg(args, y)


def _cmd_response(args):
    from .regularized import pairwise_response

    inst = read_instance(args.instance)
    r = pairwise_response(inst.hypergraph, args.u, args.v, **_kwargs(args))
    if args.json_out:
        _write_json(args.json_out, {
            "status": "ok",
            "u": args.u,
            "v": args.v,
            "response": format_rational(r.value),
            "gap": format_rational(r.gap),
            "certificate": poisson_certificate(inst.hypergraph, _unit(inst.hypergraph.n, args.u, args.v), r.result,
                                               trace=args.trace),
        })
    print(f"{float(r.value):.10g}  (certified objective gap {float(r.gap):.3e}; no bound on the response error is claimed)")
    return EXIT_OK


def _unit(n, u, v):
    s = [0] * n
    s[u] = 1
    s[v] = -1
    return s


def _cmd_verify(args):
    with open(args.certificate, encoding="utf-8") as fh:
        try:
            cert = json.load(fh)
        except json.JSONDecodeError as exc:
            raise VerificationError(f"{args.certificate}: not valid JSON ({exc})") from None
    out = verify_certificate(cert, oracle=args.oracle)
    if args.json_out:
        payload = {"status": "ok", "problem": out.problem, "primal": format_rational(out.primal),
                   "dual": format_rational(out.dual), "gap": format_rational(out.gap)}
        if out.oracle_value is not None:
            payload["oracle_value"] = repr(out.oracle_value)
        _write_json(args.json_out, payload)
    msg = f"ok: {out.problem} certificate, gap {float(out.gap):.3e} ({format_rational(out.gap)})"
    if out.oracle_value is not None:
        msg += f", oracle value {out.oracle_value:.9g}"
    print(msg)
    return EXIT_OK


def _cmd_export(args):
    inst = read_instance(args.instance)
    h = inst.hypergraph
    g = build_lifted_graph(h)
    if args.format == "dot":
        text = to_dot(g)
    else:
        from .lifted import lifted_demand, positive_circulation
        from .mcf import MCFInstance, write_dimacs

        scale = 1 << args.grid_bits
        b = []
        for v in lifted_demand(h, inst.demand):
            q = v * scale
            if q.denominator != 1:
                raise InvalidInstance(f"demand {v} is not on the grid 2^-{args.grid_bits}")
            b.append(int(q))
        cap = sum(abs(v) for v in b) + max(positive_circulation(g), default=0)
        cost = [0] * g.num_arcs
        for e in range(h.num_edges):
            cost[g.quad_arc(e)] = 1
        mcf = MCFInstance(g.num_nodes, tuple(map(int, g.tails)), tuple(map(int, g.heads)), tuple(b),
                          (cap,) * g.num_arcs, tuple(cost))
        text = write_dimacs(mcf, comment=f"lifted graph, demand scaled by 2^{args.grid_bits}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "solve-reg": _cmd_solve_reg,
    "resolvent": _cmd_resolvent,
    "response": _cmd_response,
    "verify": _cmd_verify,
    "export-lifted": _cmd_export,
}


def _exit_code(exc) -> int:
    if isinstance(exc, (VerificationError, InvariantViolation)):
        return EXIT_VERIFY
    if isinstance(exc, InvalidInstance):
        return EXIT_INVALID
    return EXIT_SOLVER


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(logging.DEBUG if getattr(args, "trace", False) else logging.WARNING)
    try:
        return _COMMANDS[args.command](args)
    except (HyperPoissonError, OSError) as exc:
        code = EXIT_INVALID if isinstance(exc, OSError) else _exit_code(exc)
        record = {"status": "error", "error": type(exc).__name__, "message": str(exc), "exit_code": code}
        json_out = getattr(args, "json_out", None)
        if json_out:
            try:
                _write_json(json_out, record)
            except OSError:
                pass
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
