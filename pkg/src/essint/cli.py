"""Command-line front end: ``essint <command> <problem.json> [flags]``.

Exit status 0 means the property was verified or a certificate found, 1
that it was refuted or no certificate exists, 2 an input or precondition
error.  The report goes to standard output as canonical JSON.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import __version__, _tol
from .errors import EssintError, PreconditionFailed
from .extremal import (check_local_extremality, check_nonoverlap, check_witness, conic_ep,
                       sequential_ep)
from .geom import (limiting_normal_cone, regular_normal_generators, tangent_cone)
from .mspace import essential_intersection
from .optimality import (CERT_TOL, certificate_residual, check_normal_qualification,
                         check_violator, inequality_certificate, sip_certificate,
                         stochastic_certificate, strict_min_alternative)
from .problem import Problem, ProblemError, digest, dumps, poly
from .setcalc import ConeField, aumann_integral
from .vcalc import check_chip

COMMANDS = ("normal-cone", "tangent-cone", "aumann", "extremal-check", "ep-solve",
            "conic-ep", "chip-check", "nqc-check", "certify-stochastic",
            "certify-inequality", "certify-sip", "strict-min")
WITNESS_TOL = 1e-6


def _cone(c):
    return [p.generators for p in c.parts]


def _vecmap(d):
    return {str(k): np.asarray(v, float) for k, v in d.items()}


def _point(prob):
    prob.require("point")
    return prob.point


def _cmd_normal_cone(prob, args):
    x = _point(prob)
    out, ok = {}, True
    for sid, S in sorted(prob.sets.items()):
        reg = regular_normal_generators(S, x)
        lim = limiting_normal_cone(S, x)
        inc = all(lim.contains(g) for g in reg.generators)
        ok &= inc
        out[sid] = {"regular": reg.generators, "limiting": _cone(lim)}
    return ok, out, {}, {"regular_in_limiting": ok}


def _cmd_tangent_cone(prob, args):
    x = _point(prob)
    out, ok = {}, True
    for sid, S in sorted(prob.sets.items()):
        T = tangent_cone(S, x)
        good = all(S.contains(x + 1e-6 * g / np.linalg.norm(g)) for g in T.all_generators())
        ok &= good
        out[sid] = _cone(T)
    return ok, out, {}, {"short_steps_feasible": ok}


def _cmd_aumann(prob, args):
    MF = prob.multifunction()
    x = _point(prob)
    F = ConeField(MF.space, {a: limiting_normal_cone(MF[a], x) for a in MF.atoms})
    I = aumann_integral(F)
    sup = all(I.contains(w * g) for a, w in MF.space.items()
              for g in F.cones[a].all_generators())
    payload = {"integral": _cone(I.cone), "closure_needed": I.closure_needed,
               "selections": [list(s) for s in I.selections],
               "normals": {str(a): _cone(F.cones[a]) for a in MF.atoms}}
    return sup, payload, {}, {"superadditive": sup}


def _cmd_extremal_check(prob, args):
    MF = prob.multifunction()
    x = _point(prob)
    sched = prob.schedule()
    ext = check_local_extremality(MF, x, prob.radius, sched)
    non = check_nonoverlap(MF, x, prob.radius)
    payload = {"ks": list(sched.ks), "extremal": ext, "nonoverlap": non,
               "norms": sched.norms}
    return all(ext) and non, payload, {}, {}


def _witness_payload(w):
    return {"k": w.k, "xk": _vecmap(w.xk), "xstar": _vecmap(w.xstar), "q_norm": w.q_norm,
            "balance": w.balance, "eps_k": w.eps_k, "phi_value": w.phi_value,
            "xhat": w.xhat, "ball_active": w.ball_active}


def _witness_ok(res):
    return (res["balance"] <= WITNESS_TOL and res["q_norm_error"] <= WITNESS_TOL
            and res["membership"] <= WITNESS_TOL and res["estimate_slack"] >= 0)


def _cmd_ep_solve(prob, args):
    MF = prob.multifunction()
    x = _point(prob)
    sched = prob.schedule()
    wits = sequential_ep(MF, x, prob.radius, sched, p=prob.p)
    checks = [check_witness(MF, x, term, w) for (_, term), w in zip(sched, wits)]
    ok = all(_witness_ok(c) for c in checks)
    worst = {key: max(c[key] for c in checks) for key in ("balance", "q_norm_error", "membership")}
    worst["estimate_slack"] = min(c["estimate_slack"] for c in checks)
    return ok, {"witnesses": [_witness_payload(w) for w in wits]}, worst, \
        {"per_k": checks, "ok": ok}


def _cmd_conic_ep(prob, args):
    MF = prob.multifunction()
    a = prob.base_shift()
    w = conic_ep(MF, a, p=prob.p)
    term = {k: w.extras["alpha"] * v for k, v in a.items()}
    chk = check_witness(MF, np.zeros(MF.dim), term, w)
    ok = _witness_ok(chk) and w.extras["certified"]
    payload = _witness_payload(w)
    payload.update(alpha=w.extras["alpha"], halvings=w.extras["halvings"],
                   limiting_membership={str(k): v for k, v in
                                        w.extras["limiting_membership"].items()})
    return ok, payload, {"stabilization_gap": w.extras["gap"]}, chk


def _cmd_chip_check(prob, args):
    MF = prob.multifunction()
    rep = check_chip(MF, _point(prob), seed=prob.seed)
    payload = {"lhs": _cone(rep.lhs), "rhs": _cone(rep.rhs), "holds": rep.holds,
               "witnesses": rep.witnesses, "stability_detected": rep.stability_detected,
               "stability_radius": rep.stability_radius}
    return rep.holds, payload, {}, {"lhs_in_rhs": rep.lhs_in_rhs}


def _cmd_nqc_check(prob, args):
    MF = prob.multifunction()
    x = _point(prob)
    kind = prob.params.get("nqc_kind", "limiting")
    rep = check_normal_qualification(MF, x, kind=kind, eps=prob.params.get("nqc_radius"))
    payload = {"holds": rep.holds, "kind": rep.kind, "path": rep.path,
               "violator": None if rep.violator is None else _vecmap(rep.violator),
               "slack_point": rep.slack_point}
    checker = {}
    if rep.violator is not None and kind == "limiting":
        checker = check_violator(MF, x, rep.violator)
    return rep.holds, payload, {}, checker


def _cert_payload(cert):
    out = {"certified": cert.certified, "g_star": cert.g_star, "route": cert.route,
           "multipliers": {str(a): {"lambda": lam, "generators": G}
                           for a, (lam, G) in cert.multipliers.items()},
           "weights": {str(a): w for a, w in cert.weights.items()},
           "qualification": _plain(cert.qualification),
           "stationarity_residual": cert.stationarity_residual}
    if cert.density is not None:
        out["density"] = cert.density
        out["nodes"] = cert.nodes
    return out


def _plain(d):
    if isinstance(d, dict):
        return {str(k): _plain(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_plain(v) for v in d]
    return d


def _cert_result(cert):
    res, lam_min = certificate_residual(cert)
    checker = {"residual": res, "min_multiplier": lam_min,
               "ok": res <= CERT_TOL and lam_min >= -1e-12}
    flags = {"closure_gap": cert.closure_gap, **cert.flags}
    return cert.certified, _cert_payload(cert), \
        {"stationarity": cert.stationarity_residual}, checker, flags


def _cmd_certify_stochastic(prob, args):
    prob.require("objective")
    cert = stochastic_certificate(prob.objective, prob.multifunction(), _point(prob),
                                  route=prob.params.get("route", "auto"))
    return _cert_result(cert)


def _cmd_certify_inequality(prob, args):
    prob.require("objective", "constraints", "space")
    missing = [a for a in prob.space.atoms if a not in prob.constraints]
    if missing:
        raise ProblemError("constraints", f"no constraint for atoms {missing}")
    cert = inequality_certificate(prob.constraints, prob.objective, prob.space, _point(prob))
    return _cert_result(cert)


def _cmd_certify_sip(prob, args):
    prob.require("objective", "sip", "interval")
    a = [poly(c) for c in prob.sip["a"]]
    b = poly(prob.sip["b"])
    iv = prob.interval
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cert = sip_certificate(lambda t: [f(t) for f in a], b, prob.objective,
                               (iv["a"], iv["b"]), iv["nodes"], iv["rule"],
                               prob.point if prob.point is not None else None)
    return _cert_result(cert)


def _cmd_strict_min(prob, args):
    prob.require("objective")
    ks = prob.params.get("ks", [1, 2, 3, 4, 5])
    res = strict_min_alternative(prob.objective, prob.multifunction(), _point(prob),
                                 prob.radius, ks, seed=prob.seed)
    payload = {"branch": res.branch, "alpha_star": res.alpha_star, "y": res.y,
               "subgradient": res.subgradient, "normals": _vecmap(res.normals),
               "witness": _witness_payload(res.witness)}
    ok = res.stationarity_residual <= WITNESS_TOL
    return ok, payload, {"stationarity": res.stationarity_residual}, {"ok": ok}


HANDLERS = {
    "normal-cone": _cmd_normal_cone, "tangent-cone": _cmd_tangent_cone,
    "aumann": _cmd_aumann, "extremal-check": _cmd_extremal_check,
    "ep-solve": _cmd_ep_solve, "conic-ep": _cmd_conic_ep, "chip-check": _cmd_chip_check,
    "nqc-check": _cmd_nqc_check, "certify-stochastic": _cmd_certify_stochastic,
    "certify-inequality": _cmd_certify_inequality, "certify-sip": _cmd_certify_sip,
    "strict-min": _cmd_strict_min,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="essint", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("problem", help="problem file (JSON)")
    ap.add_argument("--tol", type=float, help="feasibility / membership tolerance")
    ap.add_argument("--active-tol", type=float, help="activity tolerance")
    ap.add_argument("--radius", type=float, help="neighborhood radius")
    ap.add_argument("--seed", type=int, help="sampling seed")
    ap.add_argument("--p", type=float, help="integrability exponent (only 2 is implemented)")
    ap.add_argument("--nodes", type=int, help="quadrature nodes for interval spaces")
    ap.add_argument("--rule", choices=("uniform", "trapezoid"), help="quadrature rule")
    return ap


def run(command: str, path: str, args=None) -> tuple[int, dict]:
    """Execute one command; returns (exit code, report)."""
    args = args if args is not None else argparse.Namespace(
        tol=None, active_tol=None, radius=None, seed=None, p=None, nodes=None, rule=None)
    report = {"command": command, "version": __version__,
              "flags": {"serial": os.environ.get("ESSINT_NO_PARALLEL") == "1"}}
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        report.update(status="error", error=f"problem: {e.strerror}")
        return 2, report
    report["input_digest"] = digest(raw)
    try:
        prob = Problem.loads(raw.decode("utf-8"), nodes=args.nodes, rule=args.rule)
        if args.radius is not None:
            prob.params["radius"] = args.radius
        if args.seed is not None:
            prob.params["seed"] = args.seed
        if args.p is not None:
            prob.params["p"] = args.p
        tol = prob.tolerances
        unknown = set(tol) - {"feas", "active", "slack"}
        if unknown:
            raise ProblemError("params.tolerances", f"unknown keys {sorted(unknown)}")
        if args.tol is not None:
            tol["feas"] = args.tol
        if args.active_tol is not None:
            tol["active"] = args.active_tol
        with _tol.tolerances(**tol):
            out = HANDLERS[command](prob, args)
        ok, payload, residuals, checker = out[:4]
        flags = out[4] if len(out) > 4 else {}
    except (EssintError, NotImplementedError, ValueError) as e:
        kind = type(e).__name__
        report.update(status="error", error=f"{kind}: {e}")
        if isinstance(e, ProblemError):
            report["field"] = e.field
        return 2, report
    report["flags"].update(flags)
    report["flags"]["seed"] = prob.seed
    report.update(status="verified" if ok else "refuted", payload=payload,
                  residuals=residuals, checker=checker)
    return (0 if ok else 1), report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, report = run(args.command, args.problem, args)
    sys.stdout.write(dumps(report) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
