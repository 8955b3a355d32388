"""Command-line front end: JSON files in, one JSON report on stdout.

Exit status: 0 success or pass, 1 a verification failed (witness in the
report), 2 bad input or an unmet precondition.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from . import config
from .acceptance import run_suite
from .costs import CostError, check_integrable_bound, cost_from_json
from .coupling import Coupling, CouplingError, check_martingale, solve_mot
from .lp import LpError
from .measures import DiscreteMeasure, MeasureError, check_convex_order, check_extended_convex_order, potential
from .shadow import left_curtain, shadow_atom, shadow_measure
from .verify import (EnumerationOverflow, SupportSet, check_finite_optimality, check_left_monotone,
                     irreducible_components, verify_dual_splitting, verify_uniqueness)

log = logging.getLogger("martcurtain")

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (MeasureError, CostError, CouplingError, EnumerationOverflow, LpError, ValueError, KeyError,
                OSError, json.JSONDecodeError)


class Failed(Exception):
    """A verification did not pass; carries the result payload and witnesses."""

    def __init__(self, result, witnesses):
        super().__init__("verification failed")
        self.result = result
        self.witnesses = witnesses


# documents read during the current command, echoed in the report
_loaded: dict = {}


def _load(path: str):
    if path == "-":
        doc = json.load(sys.stdin)
    else:
        with open(path) as fh:
            doc = json.load(fh)
    _loaded[path] = doc
    return doc


def _measure(path: str, normalize: bool = False) -> DiscreteMeasure:
    m = DiscreteMeasure.from_json(_load(path))
    return m.normalized() if normalize else m


def _support(args) -> SupportSet:
    if args.support:
        return SupportSet.from_json(_load(args.support))
    if args.coupling:
        return SupportSet.from_coupling(Coupling.from_json(_load(args.coupling)))
    raise ValueError("give --coupling or --support")


def cmd_potential(args):
    m = _measure(args.measure)
    u = potential(m)
    out = {"breakpoints": u.breakpoints.tolist(), "values": u.values.tolist(),
           "left_slope": u.left_slope, "right_slope": u.right_slope}
    if args.at:
        out["evaluations"] = [[x, float(u(x))] for x in args.at]
    return out


def cmd_check_order(args):
    mu, nu = _measure(args.mu), _measure(args.nu)
    check = check_convex_order if args.order == "cx" else check_extended_convex_order
    res = check(mu, nu)
    if not res:
        raise Failed(res.to_json(), [res.to_json()])
    return res.to_json()


def cmd_decompose(args):
    mu, nu = _measure(args.mu, True), _measure(args.nu, True)
    return irreducible_components(mu, nu).to_json()


def cmd_shadow(args):
    nu = _measure(args.nu)
    if args.kind == "atom":
        if args.x is None or args.m is None:
            raise ValueError("shadow atom needs --x and --m")
        return {"shadow": shadow_atom(nu, args.x, args.m).to_json()}
    if not args.mu:
        raise ValueError("shadow measure needs --mu")
    return {"shadow": shadow_measure(nu, _measure(args.mu), args.order).to_json()}


def cmd_left_curtain(args):
    pi = left_curtain(_measure(args.mu, True), _measure(args.nu, True))
    return {"coupling": pi.to_json()}


def cmd_solve(args):
    mu, nu = _measure(args.mu, True), _measure(args.nu, True)
    c = cost_from_json(_load(args.cost))
    bound = check_integrable_bound(c, mu, nu)
    sol = solve_mot(mu, nu, c)
    return {"coupling": sol.coupling.to_json(), "value": sol.value,
            "integrable_bound": {"c1": bound.c1.tolist(), "c2": bound.c2.tolist()}}


def cmd_solve_dual(args):
    mu, nu = _measure(args.mu, True), _measure(args.nu, True)
    c = cost_from_json(_load(args.cost))
    sol = solve_mot(mu, nu, c)
    split = verify_dual_splitting(sol.coupling, c, sol.duals)
    return {"duals": sol.duals.to_json(), "value": sol.dual_value, "primal_value": sol.value,
            "splitting": split.to_json()}


def cmd_verify_martingale(args):
    pi = Coupling.from_json(_load(args.coupling))
    res = check_martingale(pi)
    if not res:
        raise Failed(res.to_json(), res.to_json()["violations"])
    return res.to_json()


def cmd_verify_monotone(args):
    res = check_left_monotone(_support(args))
    if not res:
        raise Failed(res.to_json(), [res.to_json()["witness"]])
    return res.to_json()


def cmd_verify_finite_optimality(args):
    c = cost_from_json(_load(args.cost))
    res = check_finite_optimality(_support(args), c, k=args.k)
    if not res:
        raise Failed(res.to_json(), [res.witness.to_json()])
    return res.to_json()


def cmd_verify_uniqueness(args):
    mu, nu = _measure(args.mu, True), _measure(args.nu, True)
    rep = verify_uniqueness(mu, nu, args.grid)
    out = rep.to_json()
    witnesses = [] if rep.passed else [{"distance": rep.distance, "left_monotone": rep.left_monotone.to_json()}]
    if args.coupling:
        pi = Coupling.from_json(_load(args.coupling))
        mono = check_left_monotone(SupportSet.from_coupling(pi))
        same = pi.distance(rep.left_curtain) <= 1e-7
        out["candidate"] = {"left_monotone": mono.to_json(), "equals_left_curtain": same,
                            "martingale": bool(check_martingale(pi))}
        # a left-monotone martingale plan must coincide with the left-curtain plan
        if mono and check_martingale(pi) and not same:
            witnesses.append({"candidate_distance": pi.distance(rep.left_curtain)})
    if witnesses:
        raise Failed(out, witnesses)
    return out


def cmd_verify_suite(args):
    results = run_suite(args.seed, args.only)
    for r in results:
        print(r.line(), file=sys.stderr)
    out = {"criteria": [r.to_json() for r in results], "passed": all(r.passed for r in results)}
    if not out["passed"]:
        raise Failed(out, [r.to_json() for r in results if not r.passed])
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="martcurtain", description=__doc__.splitlines()[0])
    p.add_argument("--tol", type=float, help="comparison tolerance (default 1e-9 or $MARTCURTAIN_TOL)")
    p.add_argument("--feas-tol", type=float, help="LP feasibility tolerance (default 1e-8)")
    p.add_argument("--gap-tol", type=float, help="LP duality-gap tolerance (default 1e-8)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def pair(sp):
        sp.add_argument("--mu", required=True)
        sp.add_argument("--nu", required=True)

    def support(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--coupling")
        g.add_argument("--support")

    sp = sub.add_parser("potential", help="potential function of a measure")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--at", type=float, nargs="*")
    sp.set_defaults(func=cmd_potential)

    sp = sub.add_parser("check-order", help="convex or extended convex order")
    sp.add_argument("order", choices=["cx", "extended"])
    pair(sp)
    sp.set_defaults(func=cmd_check_order)

    sp = sub.add_parser("decompose", help="irreducible components")
    pair(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("shadow", help="shadow of an atom or a measure")
    sp.add_argument("kind", choices=["atom", "measure"])
    sp.add_argument("--nu", required=True)
    sp.add_argument("--mu")
    sp.add_argument("--x", type=float)
    sp.add_argument("--m", type=float)
    sp.add_argument("--order", choices=["ascending", "descending"], default="ascending")
    sp.set_defaults(func=cmd_shadow)

    sp = sub.add_parser("left-curtain", help="left-curtain coupling")
    pair(sp)
    sp.set_defaults(func=cmd_left_curtain)

    for name, func in (("solve", cmd_solve), ("solve-dual", cmd_solve_dual)):
        sp = sub.add_parser(name, help="martingale transport LP" + (" dual" if "dual" in name else ""))
        pair(sp)
        sp.add_argument("--cost", required=True)
        sp.set_defaults(func=func)

    sp = sub.add_parser("verify-martingale", help="barycentre check of a coupling")
    sp.add_argument("--coupling", required=True)
    sp.set_defaults(func=cmd_verify_martingale)

    sp = sub.add_parser("verify-monotone", help="left-monotonicity of a support")
    support(sp)
    sp.set_defaults(func=cmd_verify_monotone)

    sp = sub.add_parser("verify-finite-optimality", help="competitor search on a support")
    support(sp)
    sp.add_argument("--cost", required=True)
    sp.add_argument("--k", type=int, default=3)
    sp.set_defaults(func=cmd_verify_finite_optimality)

    sp = sub.add_parser("verify-uniqueness", help="left-curtain versus the summed probe optimum")
    pair(sp)
    sp.add_argument("--grid", choices=["atoms", "midpoints"], default="atoms")
    sp.add_argument("--coupling", help="optional candidate plan to test against the left-curtain")
    sp.set_defaults(func=cmd_verify_uniqueness)

    sp = sub.add_parser("verify-suite", help="run every acceptance criterion")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--only", type=int, nargs="*")
    sp.set_defaults(func=cmd_verify_suite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    tols = config.configure(tol=args.tol, feas_tol=args.feas_tol, gap_tol=args.gap_tol)
    _loaded.clear()
    inputs = {"arguments": {k: v for k, v in vars(args).items() if k not in ("func", "verbose")},
              "files": _loaded}
    report = {"command": args.command, "inputs": inputs, "tolerances": tols.as_dict()}
    t0 = time.perf_counter()
    try:
        report["result"] = args.func(args)
        report["status"] = "ok"
        code = EXIT_OK
    except Failed as exc:
        report.update(result=exc.result, witnesses=exc.witnesses, status="failed")
        code = EXIT_FAILED
    except INPUT_ERRORS as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        report.update(status="error", error={"name": type(exc).__name__, "message": str(exc)})
        code = EXIT_INPUT
    report["timing"] = {"seconds": time.perf_counter() - t0}
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
