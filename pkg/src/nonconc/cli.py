"""Command-line entry point ``nonconc``.

Every command writes one JSON report (sorted keys) carrying
``schema_version``, the command and the seed.  Exit codes: 0 success,
2 invalid input, 3 a verification whose inequality failed.

Phi and gamma arguments accept a JSON file path or ``gallery:NAME``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 2, 3


class InputError(Exception):
    """Invalid user input; reported with exit code 2."""


# ---------------------------------------------------------------------------
# input helpers


def load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc


def load_phi(arg: str):
    from .gallery import REGISTRY
    from .geometry import GammaSpec, PhiSpec, build_phi_jacobian

    if arg.startswith("gallery:"):
        name = arg.split(":", 1)[1]
        if name not in REGISTRY:
            raise InputError(f"unknown gallery entry {name!r}")
        obj = REGISTRY[name].build()
        return build_phi_jacobian(obj) if isinstance(obj, GammaSpec) else obj
    data = load_json(arg)
    if "N1" in data:
        return build_phi_jacobian(GammaSpec.from_json(data))
    return PhiSpec.from_json(data)


def load_gamma(arg: str):
    from .gallery import REGISTRY
    from .geometry import GammaSpec

    if arg.startswith("gallery:"):
        name = arg.split(":", 1)[1]
        obj = REGISTRY[name].build() if name in REGISTRY else None
        if not isinstance(obj, GammaSpec):
            raise InputError(f"{name!r} is not a gallery family")
        return obj
    return GammaSpec.from_json(load_json(arg))


def load_set(arg: str):
    from .functionals import SetSpec

    return SetSpec.from_json(load_json(arg))


def load_measure(arg: str | None):
    from .functionals import Lebesgue, MeasureSpec

    return Lebesgue() if arg is None else MeasureSpec.from_json(load_json(arg))


def parse_numbers(text: str | None, count: int | None = None) -> list[Fraction]:
    if text is None:
        if count is None:
            raise InputError("missing numeric list")
        return [Fraction(0)] * count
    try:
        vals = [Fraction(v.strip()) for v in text.split(",") if v.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad number list {text!r}") from exc
    if count is not None and len(vals) != count:
        raise InputError(f"expected {count} numbers, got {len(vals)}")
    return vals


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("NONCONC_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"NONCONC_SEED must be an integer, got {env!r}") from exc
    return 0


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else obj.numerator
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def emit(report: dict, args) -> None:
    report = dict(report)
    report["schema_version"] = SCHEMA_VERSION
    report["command"] = " ".join(filter(None, [args.command, getattr(args, "sub", None)]))
    report["seed"] = args.seed
    text = json.dumps(_clean(report), sort_keys=True, indent=2)
    if getattr(args, "output", None):
        Path(args.output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _q_for(phi, args_q, params=()):
    from .diagonal import order_of_vanishing

    if args_q is not None:
        return args_q
    q = order_of_vanishing(phi, at_params=list(params) if phi.params else None).q
    if q == math.inf or q == 0:
        raise InputError("Phi does not vanish to a finite positive order on the diagonal")
    return int(q)


# ---------------------------------------------------------------------------
# commands


def cmd_phi(args) -> int:
    from .geometry import build_phi_jacobian, build_phi_wedge

    g = load_gamma(args.gamma)
    routes = {"wedge": build_phi_wedge, "jacobian": build_phi_jacobian}
    phi = routes[args.route](g)
    report = {"phi": phi.to_json(), "route": args.route}
    code = EXIT_OK
    if args.check:
        other = routes["jacobian" if args.route == "wedge" else "wedge"](g)
        agree = phi.body == other.body
        report["routes_agree"] = agree
        code = EXIT_OK if agree else EXIT_CHECK
    emit(report, args)
    return code


def cmd_ord(args) -> int:
    from .diagonal import order_of_vanishing

    phi = load_phi(args.phi)
    params = parse_numbers(args.params, phi.params) if args.params or phi.params else None
    exp = order_of_vanishing(phi, at_params=params, cross_check=args.cross_check)
    out = exp.to_json()
    if not args.leading:
        out.pop("leading_terms")
    emit(out, args)
    return EXIT_OK


def cmd_density(args) -> int:
    from .density import (
        CoordinateChange,
        density_infimum,
        multisystem_density,
        positivity_criterion,
    )
    from .poly import Polynomial, PolyVector

    phi = load_phi(args.phi)
    point = parse_numbers(args.point, phi.n)
    params = parse_numbers(args.params, phi.params) if phi.params else []
    if args.sub == "eval":
        q = _q_for(phi, args.q, params)
        rep = density_infimum(phi, q, point, params=params, starts=args.budget, maxiter=args.maxiter,
                              seed=args.seed, workers=args.threads, with_positivity=args.positivity,
                              O_samples=args.samples)
        emit(rep.to_json(), args)
        return EXIT_OK
    if args.sub == "positivity":
        q = _q_for(phi, args.q, params)
        res = positivity_criterion(phi, q, point, params=params, O_samples=args.samples, seed=args.seed)
        out = res.to_json()
        out["positivity"] = out.pop("verdict")
        emit(out, args)
        return EXIT_OK
    family = None
    if args.family:
        data = load_json(args.family)
        family = []
        for entry in data:
            comps = PolyVector(Polynomial.from_json(c, nvars=phi.n, names=entry.get("vars")) for c in entry["components"])
            family.append(CoordinateChange(comps, entry.get("name", "")))
    value = multisystem_density(phi, Fraction(args.s), args.N, family, point, params=params,
                                starts=args.budget, maxiter=args.maxiter, seed=args.seed)
    emit({"value": value, "s": args.s, "N": args.N, "family_size": len(family) if family else 1,
          "family_restricted": True}, args)
    return EXIT_OK


def cmd_func(args) -> int:
    from .functionals import Discrete, chebyshev_set, constant_sweep, int_functional, sup_functional

    if args.sub == "cheb":
        mu = load_measure(args.measure)
        if not isinstance(mu, Discrete):
            raise InputError("cheb needs a discrete measure")
        res = chebyshev_set(mu.points, mu.weights, args.degree, args.tau, seed=args.seed)
        emit(res.to_json(), args)
        return EXIT_OK if res.verification["passed"] else EXIT_CHECK
    phi = load_phi(args.phi)
    if args.sub == "sup":
        est = sup_functional(phi, load_set(args.set), args.budget, args.seed)
        out = est.to_json()
        out["kind"] = "lower bound"
        emit(out, args)
        return EXIT_OK
    if args.sub == "int":
        est = int_functional(phi, load_measure(args.measure), load_set(args.set), args.budget, args.seed,
                             stratified=args.stratified)
        emit(est.to_json(), args)
        return EXIT_OK
    from .functionals import SetSpec

    fam_data = load_json(args.family)
    family = [SetSpec.from_json(d) for d in fam_data]
    table = constant_sweep(phi, load_measure(args.measure), family, float(Fraction(args.s)),
                           sup_budget=args.budget, int_budget=args.int_budget, seed=args.seed)
    emit(table.to_json(), args)
    return EXIT_OK if table.chain_holds and table.dominated_rows else EXIT_CHECK


def cmd_haus(args) -> int:
    from .hausdorff import cover_upper, density_comparability_check

    phi = load_phi(args.phi)
    E = load_set(args.set)
    level = [int(v) for v in args.level.split(",")]
    level = level[0] if len(level) == 1 else level
    if args.sub == "cover":
        est = cover_upper(phi, float(Fraction(args.sigma)), E, level, seed=args.seed)
        emit(est.to_json(), args)
        return EXIT_OK
    q = _q_for(phi, args.q)
    window = tuple(args.window) if args.window else None
    rep = density_comparability_check(phi, q, E, level, seed=args.seed, window=window)
    emit(rep.to_json(), args)
    return EXIT_CHECK if rep.within_window is False else EXIT_OK


def cmd_radon(args) -> int:
    from .radon import RadonCase, hypothesis_spot_check, lp_ratio_check, random_rectangle_union

    case = RadonCase.from_json(load_json(args.case))
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    family = [random_rectangle_union(rng) for _ in range(args.sets)]
    report = lp_ratio_check(case, family, x_n=args.x_n, quad_n=args.quad_n)
    x = (case.x_window.lo + case.x_window.hi) / 2
    spot = hypothesis_spot_check(case, x.tolist(), n_sets=args.spot_sets, seed=args.seed)
    out = report.to_json()
    out["hypothesis_spot_check"] = spot.to_json()
    emit(out, args)
    return EXIT_OK if report.passed and spot.passed else EXIT_CHECK


def cmd_gallery(args) -> int:
    from .gallery import REGISTRY

    if args.sub == "list":
        entries = [
            {"name": e.name, "description": e.description, "facts": [f.to_json() for f in e.facts]}
            for e in REGISTRY.values()
        ]
        emit({"entries": entries}, args)
        return EXIT_OK
    if args.name not in REGISTRY:
        raise InputError(f"unknown gallery entry {args.name!r}; known: {', '.join(sorted(REGISTRY))}")
    entry = REGISTRY[args.name]
    obj = entry.build()
    emit({"name": entry.name, "kind": type(obj).__name__, "spec": obj.to_json(),
          "facts": [f.to_json() for f in entry.facts]}, args)
    return EXIT_OK


def selftest_checks(quick: bool = True) -> list[dict]:
    """Immediate checks with known answers; each row records its expected value and basis."""
    from .density import density_infimum
    from .diagonal import order_of_vanishing
    from .functionals import Box, sup_functional
    from .gallery import clifford_matrices, phi_difference
    from .hausdorff import cover_upper
    from .poly import Polynomial, det_rational

    rows = []

    def check(name, value, expected, ok):
        rows.append({"name": name, "value": value, "expected": expected, "basis": "trivial", "passed": bool(ok)})

    x, y = Polynomial.var(2, 0), Polynomial.var(2, 1)
    check("square of a sum", ((x + y) ** 2).to_str(["x", "y"]), "x^2 + 2*x*y + y^2",
          (x + y) ** 2 == x * x + x * y * 2 + y * y)
    diff = phi_difference(1)
    q = order_of_vanishing(diff).q
    check("order of x - y", q, 1, q == 1)
    s = sup_functional(diff, Box([0], [1]), budget=1000).value
    check("diameter of [0, 1]", s, 1.0, s == 1.0)
    s0 = sup_functional(diff, Box([0.5], [0.5]), budget=100).value
    check("sup on a point", s0, 0.0, s0 == 0.0)
    for level in (0, 3) if quick else (0, 3, 6, 9):
        v = cover_upper(diff, 1.0, Box([0], [1]), level).value
        check(f"cover of [0, 1] at sigma 1, level {level}", v, 1.0, v == 1.0)
    d = density_infimum(diff, 1, [0.25], starts=1).upper
    check("density of x - y", d, 1.0, abs(d - 1.0) < 1e-12)
    M = clifford_matrices(1)[0]
    det = det_rational(M)
    check("det of e_1 on the 2-dim algebra", int(det), -1, det == -1)
    return rows


def cmd_selftest(args) -> int:
    rows = selftest_checks(quick=args.quick)
    ok = all(r["passed"] for r in rows)
    emit({"checks": rows, "passed": ok}, args)
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit seed (falls back to NONCONC_SEED, then 0)")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=1, help="cap on worker threads")

    p = argparse.ArgumentParser(prog="nonconc", description="Nonconcentration inequalities for polynomial functionals.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phi", parents=[common], help="build Phi_x from a family gamma")
    s.add_argument("--gamma", required=True)
    s.add_argument("--route", choices=["wedge", "jacobian"], default="jacobian")
    s.add_argument("--check", action="store_true", help="compare with the other route (exit 3 on mismatch)")
    s.set_defaults(func=cmd_phi)

    s = sub.add_parser("ord", parents=[common], help="order of vanishing on the diagonal")
    s.add_argument("--phi", required=True)
    s.add_argument("--params", help="comma-separated parameter values")
    s.add_argument("--cross-check", action="store_true")
    s.add_argument("--leading", action="store_true", help="include the leading coefficients")
    s.set_defaults(func=cmd_ord)

    s = sub.add_parser("density", help="density of the Phi-Hausdorff measure")
    dsub = s.add_subparsers(dest="sub", required=True)
    for name in ("eval", "positivity", "multisys"):
        d = dsub.add_parser(name, parents=[common])
        d.add_argument("--phi", required=True)
        d.add_argument("--point", help="comma-separated base point (default: origin)")
        d.add_argument("--params", help="comma-separated parameter values")
        d.add_argument("--q", type=int)
        d.add_argument("--budget", type=int, default=64 if name != "multisys" else 16, help="optimizer starts")
        d.add_argument("--maxiter", type=int, default=500 if name != "multisys" else 400)
        d.add_argument("--samples", type=int, default=200, help="sampled orthogonal frames")
        d.add_argument("--positivity", action="store_true")
        if name == "multisys":
            d.add_argument("--s", required=True)
            d.add_argument("--N", type=int, required=True)
            d.add_argument("--family", help="JSON list of coordinate changes")
        d.set_defaults(func=cmd_density)

    s = sub.add_parser("func", help="nonconcentration functionals")
    fsub = s.add_subparsers(dest="sub", required=True)
    f = fsub.add_parser("sup", parents=[common])
    f.add_argument("--phi", required=True)
    f.add_argument("--set", required=True)
    f.add_argument("--budget", type=int, default=200_000)
    f = fsub.add_parser("int", parents=[common])
    f.add_argument("--phi", required=True)
    f.add_argument("--set", required=True)
    f.add_argument("--measure")
    f.add_argument("--budget", type=int, default=1_000_000)
    f.add_argument("--stratified", action="store_true")
    f = fsub.add_parser("sweep", parents=[common])
    f.add_argument("--phi", required=True)
    f.add_argument("--family", required=True, help="JSON list of sets")
    f.add_argument("--measure")
    f.add_argument("--s", required=True)
    f.add_argument("--budget", type=int, default=200_000)
    f.add_argument("--int-budget", type=int, default=1_000_000)
    f = fsub.add_parser("cheb", parents=[common])
    f.add_argument("--measure", required=True, help="discrete measure JSON")
    f.add_argument("--degree", type=int, required=True)
    f.add_argument("--tau", type=float, required=True)
    for name in ("sup", "int", "sweep", "cheb"):
        fsub.choices[name].set_defaults(func=cmd_func)

    s = sub.add_parser("haus", help="covering estimates")
    hsub = s.add_subparsers(dest="sub", required=True)
    for name in ("cover", "compare"):
        h = hsub.add_parser(name, parents=[common])
        h.add_argument("--phi", required=True)
        h.add_argument("--set", required=True, help="box JSON")
        h.add_argument("--level", required=True, help="grid level, or comma-separated per-axis levels")
        if name == "cover":
            h.add_argument("--sigma", required=True)
        else:
            h.add_argument("--q", type=int)
            h.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
        h.set_defaults(func=cmd_haus)

    s = sub.add_parser("radon", help="L^p checks for averaging operators")
    rsub = s.add_subparsers(dest="sub", required=True)
    r = rsub.add_parser("check", parents=[common])
    r.add_argument("--case", required=True)
    r.add_argument("--sets", type=int, default=30)
    r.add_argument("--spot-sets", type=int, default=50)
    r.add_argument("--x-n", type=int, default=160)
    r.add_argument("--quad-n", type=int, default=160)
    r.set_defaults(func=cmd_radon)

    s = sub.add_parser("gallery", help="built-in examples")
    gsub = s.add_subparsers(dest="sub", required=True)
    gsub.add_parser("list", parents=[common]).set_defaults(func=cmd_gallery)
    g = gsub.add_parser("build", parents=[common])
    g.add_argument("name")
    g.set_defaults(func=cmd_gallery)

    s = sub.add_parser("selftest", parents=[common], help="run the immediate checks")
    s.add_argument("--quick", action="store_true")
    s.set_defaults(func=cmd_selftest)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        args.seed = resolve_seed(args.seed)
        return args.func(args)
    except InputError as exc:
        print(f"nonconc: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError, TypeError) as exc:
        print(f"nonconc: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
