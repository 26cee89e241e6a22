"""Instance files, certificate JSON and standalone certificate verification.

Instance file (JSON)::

    {"n": 3,
     "edges": [{"verts": [0, 1, 2], "w": "1"}],
     "demand": ["1", "0", "-1"]}

Weights and demands are integers or strings ``"a*2^-q"``, ``"a/2^q"``,
``"a/b"`` with ``b`` a power of two, or decimals with a finite binary
expansion.  Anything else is rejected.  Certificates store every rational
as ``"a"``, ``"a/2^q"`` or ``"a/b"``; floats never appear in exact fields.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Hypergraph, as_demand, format_dyadic, is_normalized
from .dual import DualVector
from .errors import InvalidInstance, VerificationError

CERT_FORMAT = "hyperpoisson-certificate"
CERT_VERSION = 1

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(?:2\s*\^\s*(\d+)|(\d+)))?\s*$")


def format_rational(value) -> str:
    q = Fraction(value)
    if q.denominator == 1:
        return str(q.numerator)
    den = q.denominator
    if den & (den - 1) == 0:
        return f"{q.numerator}/2^{den.bit_length() - 1}"
    return f"{q.numerator}/{den}"


def parse_rational(text) -> Fraction:
    if isinstance(text, bool):
        raise InvalidInstance(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InvalidInstance(f"rationals must be strings, got {text!r}")
    m = _RATIONAL_RE.match(text)
    if not m:
        raise InvalidInstance(f"cannot parse rational {text!r}")
    num = int(m.group(1))
    if m.group(2) is not None:
        return Fraction(num, 1 << int(m.group(2)))
    if m.group(3) is not None:
        if int(m.group(3)) == 0:
            raise InvalidInstance(f"zero denominator in {text!r}")
        return Fraction(num, int(m.group(3)))
    return Fraction(num)


@dataclass(frozen=True)
class Instance:
    hypergraph: Hypergraph
    demand: tuple


def instance_to_dict(h: Hypergraph, s: Sequence | None = None) -> dict:
    out = {
        "n": h.n,
        "edges": [{"verts": list(e), "w": format_dyadic(w)} for e, w in zip(h.edges, h.weights)],
    }
    if s is not None:
        out["demand"] = [format_dyadic(v) for v in as_demand(s, h.n)]
    return out


def instance_from_dict(data: dict) -> Instance:
    try:
        n = data["n"]
        edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise InvalidInstance(f"instance is missing field {exc}") from None
    if not isinstance(n, int) or isinstance(n, bool):
        raise InvalidInstance("field n must be an integer")
    verts, weights = [], []
    for i, e in enumerate(edges):
        if not isinstance(e, dict) or "verts" not in e:
            raise InvalidInstance(f"edge {i} needs a verts list")
        verts.append(e["verts"])
        weights.append(e.get("w", 1))
    h = Hypergraph(n, verts, weights)
    demand = data.get("demand")
    s = as_demand(demand if demand is not None else [0] * n, n)
    return Instance(h, s)


def read_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInstance(f"{path}: not valid JSON ({exc})") from None
    return instance_from_dict(data)


def write_instance(path, h: Hypergraph, s: Sequence | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(h, s), fh, indent=2)
        fh.write("\n")


def instance_hash(h: Hypergraph, s: Sequence | None = None) -> str:
    canon = json.dumps(instance_to_dict(h, s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _eta_to_json(h: Hypergraph, eta: DualVector) -> list:
    out = []
    for i, (e, ve) in enumerate(zip(h.edges, eta.values)):
        entries = [[v, format_rational(a)] for v, a in zip(e, ve) if a != 0]
        if entries:
            out.append({"edge": i, "entries": entries})
    return out


def _eta_from_json(h: Hypergraph, blocks) -> DualVector:
    vals = [dict.fromkeys(e, Fraction(0)) for e in h.edges]
    for block in blocks:
        i = block.get("edge")
        if not isinstance(i, int) or not 0 <= i < h.num_edges:
            raise VerificationError(f"certificate names unknown edge {i!r}")
        for v, a in block.get("entries", []):
            if v not in vals[i]:
                raise VerificationError(f"certificate puts mass on vertex {v} outside edge {i}")
            vals[i][v] = parse_rational(a)
    return DualVector(tuple(tuple(b[v] for v in e) for b, e in zip(vals, h.edges)), True)


def _params_to_json(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, Fraction):
            out[k] = format_rational(v)
        elif isinstance(v, float):
            out[k] = repr(v)
        else:
            out[k] = v
    return out


def _report_to_json(report) -> dict:
    return {
        "primal": format_rational(report.primal),
        "dual": format_rational(report.dual),
        "gap": format_rational(report.gap),
        "gap_approx": f"{float(report.gap):.6e}",
    }


def _trace_to_json(trace) -> list:
    return [{k: (v if isinstance(v, int) else repr(float(v))) for k, v in row.items()} for row in trace]


def poisson_certificate(h: Hypergraph, s: Sequence, result, trace: bool = False) -> dict:
    """Self-contained certificate for a :class:`PoissonResult`."""
    fs = result.first_stage
    cert = {
        "format": CERT_FORMAT,
        "version": CERT_VERSION,
        "problem": "poisson",
        "instance": instance_to_dict(h, s),
        "instance_sha256": instance_hash(h, s),
        "params": _params_to_json(result.params),
        "x": [format_rational(v) for v in result.x],
        "eta": _eta_to_json(h, result.certificate.eta),
        "report": _report_to_json(result.report),
        "first_stage": {
            "objective": repr(fs.objective),
            "lower_bound": repr(fs.lower_bound),
            "gap": repr(fs.gap),
            "residual": repr(fs.residual),
            "iterations": fs.iterations,
            "newton_steps": fs.newton_steps,
        },
    }
    if trace:
        cert["first_stage"]["trace"] = _trace_to_json(fs.trace)
    return cert


def regularized_certificate(h: Hypergraph, lam, s: Sequence, result, params: dict | None = None,
                            trace: bool = False) -> dict:
    """Certificate for a regularized solve; only base-edge dual blocks are stored."""
    cert = {
        "format": CERT_FORMAT,
        "version": CERT_VERSION,
        "problem": "regularized",
        "lambda": format_rational(Fraction(lam)),
        "instance": instance_to_dict(h, s),
        "instance_sha256": instance_hash(h, s),
        "params": _params_to_json(params or (result.poisson.params if result.poisson else {})),
        "x": [format_rational(v) for v in result.x],
        "eta": _eta_to_json(h, result.eta),
        "report": _report_to_json(result.report),
    }
    if trace and result.poisson is not None:
        cert["first_stage"] = {"trace": _trace_to_json(result.poisson.first_stage.trace)}
    return cert


@dataclass(frozen=True)
class Verification:
    problem: str
    primal: Fraction
    dual: Fraction
    gap: Fraction
    oracle_value: float | None = None


def verify_certificate(cert: dict, oracle: bool = False, oracle_tol: float = 2e-4) -> Verification:
    """Re-check a certificate from its own contents in exact arithmetic.

    Raises :class:`VerificationError` on any mismatch.  With ``oracle`` the
    subgradient reference value must also lie in ``[-dual, primal]`` up to
    ``oracle_tol``.
    """
    from .certificate import certify_pair
    from .regularized import certify_regularized

    if not isinstance(cert, dict) or cert.get("format") != CERT_FORMAT:
        raise VerificationError("not a certificate file")
    if cert.get("version") != CERT_VERSION:
        raise VerificationError(f"unsupported certificate version {cert.get('version')!r}")
    inst = instance_from_dict(cert["instance"])
    h, s = inst.hypergraph, inst.demand
    if instance_hash(h, s) != cert.get("instance_sha256"):
        raise VerificationError("instance hash does not match the embedded instance")
    try:
        x = tuple(parse_rational(v) for v in cert["x"])
        eta = _eta_from_json(h, cert["eta"])
        claimed = {k: parse_rational(cert["report"][k]) for k in ("primal", "dual", "gap")}
    except (KeyError, TypeError, InvalidInstance) as exc:
        raise VerificationError(f"malformed certificate: {exc}") from None
    if len(x) != h.n:
        raise VerificationError(f"x has {len(x)} entries, expected {h.n}")
    problem = cert.get("problem")
    if problem == "poisson":
        if not is_normalized(h, x):
            raise VerificationError("x is not normalized: <Dx, 1> != 0")
        report = certify_pair(h, s, x, eta)
    elif problem == "regularized":
        lam = parse_rational(cert["lambda"])
        report = certify_regularized(h, lam, s, x, eta)
    else:
        raise VerificationError(f"unknown problem kind {problem!r}")
    for k in ("primal", "dual", "gap"):
        if getattr(report, k) != claimed[k]:
            raise VerificationError(f"recomputed {k} {format_rational(getattr(report, k))} != claimed {cert['report'][k]}")
    ov = None
    if oracle:
        from .oracle import oracle_primal_poisson, oracle_regularized

        if problem == "poisson":
            _, ov = oracle_primal_poisson(h, s)
        else:
            _, ov = oracle_regularized(h, lam, s)
        if not (-float(report.dual) - oracle_tol <= ov <= float(report.primal) + oracle_tol):
            raise VerificationError(f"oracle value {ov:.9g} outside [{-float(report.dual):.9g}, {float(report.primal):.9g}]")
    return Verification(problem, report.primal, report.dual, report.gap, ov)
