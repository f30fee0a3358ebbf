"""Command-line surface: compose classes, solve splitting problems, run the
verifier, emit figures.

Exit codes: 0 success, 1 usage/parse error, 2 certified-hypothesis rejection,
3 numeric failure.  Every output embeds the fully resolved configuration
(seed included) so a run can be replayed byte-identically.  The environment
variable ``OPSPLIT_SEED`` overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import figures, splitting, verifier
from .calculus import (
    ClassLabel,
    INParams,
    ScaledConic,
    classify,
    compose_chain,
    compose_general,
    compose_kappa_theta,
    from_label,
    naive_lipschitz,
)
from .errors import DomainError, GuardError, NumericError, StepSizeError
from .operators import (
    Affine,
    MonotoneSpec,
    QuadraticGradient,
    ScaledIdentity,
    SubspaceNormalPlusScale,
)
from .sampling import DEFAULT_SEED

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def parse_class_spec(text: str) -> ClassLabel:
    """Parse specs like ``averaged:0.5``, ``conic:1.7``, ``cocoercive:1.4``
    (the value is the Lipschitz diameter), ``lipschitz:0.8``,
    ``scaled-conic:2:0.75``, ``neg-conic:2``, ``contraction:0.9``,
    ``nonexpansive``."""
    parts = text.split(":")
    kind = parts[0].strip().lower()
    vals = [float(p) for p in parts[1:]]
    if kind == "nonexpansive":
        return ClassLabel.nonexpansive()
    if len(vals) == 1:
        one = {
            "averaged": ClassLabel.averaged,
            "conic": ClassLabel.conic,
            "lipschitz": ClassLabel.lipschitz,
            "contraction": ClassLabel.contraction,
            "neg-conic": ClassLabel.neg_conic,
            "cocoercive": lambda b: ClassLabel.cocoercive(1.0 / b),
        }
        if kind in one:
            return one[kind](vals[0])
    if kind == "scaled-conic" and len(vals) == 2:
        return ClassLabel.scaled_conic(vals[0], vals[1])
    raise DomainError(f"cannot parse class spec {text!r}")


def _label_json(label: ClassLabel) -> dict:
    out = {"kind": label.kind.value}
    if label.value is not None:
        out["value"] = label.value
    if label.scale is not None:
        out["scale"] = label.scale
    return out


def _descriptor_json(d) -> dict:
    if isinstance(d, INParams):
        return {"type": "in", "alpha": d.alpha, "beta": d.beta}
    return {"type": "scaled-conic", "delta": d.delta, "alpha": d.alpha}


def _resolved_seed(args) -> int:
    env = os.environ.get("OPSPLIT_SEED")
    if env is not None:
        return int(env)
    return args.seed if getattr(args, "seed", None) is not None else DEFAULT_SEED


# ---------------------------------------------------------------------------
# compose / classify


def cmd_compose(args) -> int:
    if args.chain:
        with open(args.chain) as fh:
            raw = json.load(fh)
        items = [ScaledConic(d["delta"], d["alpha"]) for d in raw]
        config = {"chain": raw, "r": args.r}
        try:
            result = compose_chain(items, args.r)
        except GuardError as exc:
            fallback = float(np.prod([abs(c.delta) for c in items]))
            print(_dump({"config": config, "error": str(exc),
                         "fallback_lipschitz": fallback}))
            return EXIT_GUARD
        print(_dump({"config": config, "result": _descriptor_json(result),
                     "theorem": "chain"}))
        return EXIT_OK

    if not (args.class1 and args.class2):
        raise DomainError("compose needs --class1 and --class2 (or --chain)")
    p1 = from_label(parse_class_spec(args.class1))
    p2 = from_label(parse_class_spec(args.class2))
    config = {"class1": args.class1, "class2": args.class2}
    try:
        result = compose_general(p1, p2)
        out = {"config": config, "result": _descriptor_json(result),
               "alpha": result.alpha, "beta": result.beta,
               "theorem": "two-factor-bound"}
        print(_dump(out))
        return EXIT_OK
    except (GuardError, DomainError):
        pass
    try:
        result = compose_kappa_theta(p1, p2)
        out = {"config": config, "result": _descriptor_json(result),
               "alpha": result.to_in().alpha, "beta": result.to_in().beta,
               "theorem": "scale-normalized-bound"}
        print(_dump(out))
        return EXIT_OK
    except (GuardError, DomainError) as exc:
        print(_dump({"config": config, "error": str(exc),
                     "fallback_lipschitz": naive_lipschitz(p1, p2)}))
        return EXIT_GUARD


def cmd_classify(args) -> int:
    labels = classify(INParams(args.alpha, args.beta))
    ordered = sorted(
        (_label_json(l) for l in labels),
        key=lambda d: (d["kind"], d.get("value", 0.0), d.get("scale", 0.0)),
    )
    print(_dump({"config": {"alpha": args.alpha, "beta": args.beta},
                 "labels": ordered}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def spec_from_json(d: dict) -> MonotoneSpec:
    kind = d.get("kind")
    if kind == "affine":
        return Affine(np.asarray(d["matrix"], float), d.get("offset"))
    if kind == "scaled_identity":
        return ScaledIdentity(float(d["c"]), dim=int(d.get("dim", 2)))
    if kind == "subspace_normal":
        return SubspaceNormalPlusScale(np.asarray(d["basis"], float),
                                       mu=float(d.get("mu", 0.0)))
    if kind == "quadratic":
        return QuadraticGradient(np.asarray(d["matrix"], float), d.get("offset"))
    raise DomainError(f"unknown operator kind {kind!r}")


def _parse_x0(text: str, dim: int) -> np.ndarray:
    x = np.asarray([float(t) for t in text.split(",")], dtype=float)
    if x.shape != (dim,):
        raise DomainError(f"--x0 must have {dim} components, got {x.shape[0]}")
    return x


def _run_solve(args, method: str) -> int:
    with open(args.instance) as fh:
        inst = json.load(fh)
    a_spec = spec_from_json(inst["A"])
    b_spec = spec_from_json(inst["B"])
    gamma = args.gamma if args.gamma is not None else inst.get("gamma")
    if gamma is None:
        raise DomainError("gamma required (flag or instance file)")
    seed = _resolved_seed(args)
    config = {
        "instance": inst,
        "method": method,
        "gamma": gamma,
        "x0": args.x0,
        "max_iter": args.max_iter,
        "tol": args.tol,
        "seed": seed,
        "force": args.force,
    }

    plan = None
    try:
        if method == "DR":
            lam = args.lambda_relax if args.lambda_relax is not None else inst.get("lambda", 0.5)
            config["lambda"] = lam
            order = inst.get("order", "A_strong")
            config["order"] = order
            plan = splitting.plan_dr(inst["mu"], inst["omega"], gamma, lam, order)
            t = splitting.build_dr(plan, a_spec, b_spec)
        else:
            case = args.case or inst.get("case", "I")
            config["case"] = case
            plan = splitting.plan_fb(
                case,
                mu=inst["mu"],
                omega=inst.get("omega", 0.0),
                beta=inst.get("beta"),
                beta_bar=inst.get("beta_bar"),
                gamma=gamma,
            )
            t = splitting.build_fb(plan, a_spec, b_spec)
    except (StepSizeError, DomainError) as exc:
        if not args.force:
            interval = getattr(exc, "interval", None)
            msg = {"config": config, "error": str(exc)}
            if interval is not None:
                msg["valid_interval"] = str(interval)
            print(_dump(msg))
            return EXIT_GUARD
        plan = None
        if method == "DR":
            lam = args.lambda_relax if args.lambda_relax is not None else inst.get("lambda", 0.5)
            t = splitting.dr_operator(a_spec, b_spec, gamma, lam)
        else:
            t = splitting.fb_operator(a_spec, b_spec, gamma)

    x0 = _parse_x0(args.x0, t.dim)
    x_star = np.asarray(inst["x_star"], float) if "x_star" in inst else None
    log = splitting.iterate(
        t,
        x0,
        max_iter=args.max_iter,
        tol_fix=args.tol,
        x_star=x_star,
        track_shadow=(method == "DR"),
        A=a_spec if method == "DR" else None,
        B=b_spec if method == "DR" else None,
        gamma=gamma if method == "DR" else None,
    )
    rate = None
    if plan is not None and len(log.step_norms) >= 10 and (log.converged or log.diverged
                                                           or x_star is not None):
        r = splitting.rate_report(log, plan)
        rate = {
            "empirical_rate": r.empirical_rate,
            "certified_rate": r.certified_rate,
            "satisfied": r.satisfied,
            "reason": r.reason,
        }
    summary = {
        "config": config,
        "plan": plan.to_json() if plan is not None else None,
        "result": {
            "iterations": log.n_iter,
            "converged": log.converged,
            "diverged": log.diverged,
            "reason": log.reason,
            "final": [float(v) for v in log.final],
        },
        "rate": rate,
    }
    if args.log:
        splitting.write_csv(log, args.log)
    text = _dump(summary)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify / figure


def cmd_verify(args) -> int:
    seed = _resolved_seed(args)
    if args.suite == "named":
        reports = verifier.run_named_suite()
        payload = {
            "config": {"suite": "named", "seed": seed},
            "cases": [r.to_json() for r in reports],
        }
        ok = all(r.agree for r in reports)
        for r in reports:
            print(f"{'PASS' if r.agree else 'FAIL'} {r.name}")
    else:
        results = verifier.run_random_suite(count=args.count, seed=seed)
        payload = {
            "config": {"suite": "random", "seed": seed, "count": args.count},
            "results": results,
        }
        ok = all(r["passed"] for r in results)
        for r in results:
            print(f"{'PASS' if r['passed'] else 'FAIL'} {r['kind']} "
                  f"worst={r['worst_violation']:.3e}")
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(_dump(payload) + "\n")
    return EXIT_OK if ok else EXIT_GUARD


def cmd_figure(args) -> int:
    regions, markers = figures.preset_figure(args.preset, args.resolution)
    figures.emit_svg(regions, markers, args.out)
    print(_dump({"config": {"preset": args.preset, "resolution": args.resolution,
                            "out": args.out}}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="opsplit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compose", help="compose two class descriptors or a chain")
    c.add_argument("--class1")
    c.add_argument("--class2")
    c.add_argument("--chain", help="JSON file with a list of {delta, alpha} factors")
    c.add_argument("--r", type=int, default=0, help="index of the unrestricted factor")
    c.set_defaults(fn=cmd_compose)

    cl = sub.add_parser("classify", help="list every class a descriptor matches")
    cl.add_argument("--alpha", type=float, required=True)
    cl.add_argument("--beta", type=float, required=True)
    cl.set_defaults(fn=cmd_classify)

    for name, method in (("solve-dr", "DR"), ("solve-fb", "FB")):
        s = sub.add_parser(name, help=f"run the {method} iteration on an instance file")
        s.add_argument("--instance", required=True)
        s.add_argument("--gamma", type=float)
        s.add_argument("--lambda", dest="lambda_relax", type=float)
        s.add_argument("--case", choices=splitting.FB_CASES)
        s.add_argument("--x0", default="1,0")
        s.add_argument("--max-iter", type=int, default=10_000)
        s.add_argument("--tol", type=float, default=1e-10)
        s.add_argument("--log", help="CSV output path")
        s.add_argument("--summary", help="JSON summary output path")
        s.add_argument("--seed", type=int)
        s.add_argument("--force", action="store_true",
                       help="run even when the plan is rejected")
        s.set_defaults(fn=lambda a, m=method: _run_solve(a, m))

    v = sub.add_parser("verify", help="run the named or random verification suite")
    v.add_argument("--suite", choices=("named", "random"), default="named")
    v.add_argument("--seed", type=int)
    v.add_argument("--count", type=int, default=30)
    v.add_argument("--json", help="write the machine-readable report here")
    v.set_defaults(fn=cmd_verify)

    f = sub.add_parser("figure", help="render a named region figure to SVG")
    f.add_argument("--preset", required=True, choices=figures.PRESET_NAMES)
    f.add_argument("--out", required=True)
    f.add_argument("--resolution", type=int, default=512)
    f.set_defaults(fn=cmd_figure)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.fn(args)
    except (GuardError, StepSizeError) as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        code = EXIT_GUARD
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC
    except (DomainError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
