"""Command-line interface: volumes, oracle verification, advice, thresholds,
and the budget-sweep experiments.

Every run is fully determined by its arguments (plus the optional RELAX_SEED
environment variable, which overrides --seed); floats are printed with 17
significant digits so the output round-trips exactly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .advisor import RankingStrategy, profile, rank
from .errors import CapabilityError, DomainError, InputError, NumericalError
from .experiments import (
    KnapsackInstance,
    generate_knapsack,
    generate_meanvar,
    run_budget_sweep,
    sweep_to_csv,
)
from .functions import (
    BoundPair,
    ConvexFunction,
    ExponentialFunction,
    PowerFunction,
    build_envelope,
    function_to_json,
)
from .geometry import mc_volume
from .volumes import Cap, RelaxationKind, RelaxationSpec, volume_of

__all__ = ["main", "entrypoint"]

_USAGE_ERROR = 2
_NUMERIC_ERROR = 3


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if not math.isfinite(value):
            return '"%s"' % value
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        inner = ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot format {type(value)!r}")


def _parse_function(text: str, bounds: BoundPair | None = None) -> ConvexFunction:
    """Grammar: power:P | exp:B[:A] | envelope(power:P).

    The exponential shift defaults to -1 so that f(0) = 0; B accepts the
    literal 'e'.  Envelope specs are built relative to --l/--u.
    """
    text = text.strip()
    if text.startswith("envelope(") and text.endswith(")"):
        inner = _parse_function(text[len("envelope("):-1], bounds)
        if bounds is None:
            raise InputError("envelope functions need bounds")
        return build_envelope(inner, bounds)
    head, _, tail = text.partition(":")
    if head == "power":
        if not tail:
            raise InputError("power spec needs an exponent, e.g. power:2")
        return PowerFunction(p=float(tail))
    if head == "exp":
        if not tail:
            raise InputError("exp spec needs a base, e.g. exp:2 or exp:e:-1")
        parts = tail.split(":")
        base = math.e if parts[0] == "e" else float(parts[0])
        shift = float(parts[1]) if len(parts) > 1 else -1.0
        return ExponentialFunction(b=base, a=shift)
    raise InputError(f"unknown function spec {text!r}")


def _parse_relax(text: str, cap_name: str) -> RelaxationSpec:
    cap = Cap.SECANT if cap_name == "secant" else Cap.SIMPLE_BOUND
    text = text.strip()
    if text.startswith("q:"):
        return RelaxationSpec(RelaxationKind.POWER_INTERPOLATED, cap, float(text[2:]))
    for kind in (RelaxationKind.PERSPECTIVE, RelaxationKind.NAIVE,
                 RelaxationKind.NAIVE_PIECEWISE):
        if kind.value == text:
            return RelaxationSpec(kind, cap)
    raise InputError(f"unknown relaxation spec {text!r}")


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _seed_from(args) -> int:
    env = os.environ.get("RELAX_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"RELAX_SEED must be an integer, got {env!r}") from exc
    return args.seed


def _cmd_volume(args) -> int:
    bounds = BoundPair(args.l, args.u)
    f = _parse_function(args.f, bounds)
    relax = _parse_relax(args.relax, args.cap)
    report = volume_of(relax, f, bounds)
    payload = {
        "value": report.value,
        "method": report.method.value,
        "abs_error": report.abs_error,
    }
    _emit(_fmt(payload) + "\n", args.out)
    return 0


def _cmd_verify(args) -> int:
    bounds = BoundPair(args.l, args.u)
    f = _parse_function(args.f, bounds)
    relax = _parse_relax(args.relax, args.cap)
    seed = _seed_from(args)
    closed = volume_of(relax, f, bounds)
    estimate = mc_volume(relax, f, bounds, args.samples, seed)
    gap = abs(closed.value - estimate.volume)
    payload = {
        "spec": {
            "f": function_to_json(f),
            "l": bounds.lo,
            "u": bounds.hi,
            "relax": relax.label(),
            "samples": args.samples,
            "seed": seed,
        },
        "closed_form": closed.value,
        "mc_estimate": estimate.volume,
        "std_error": estimate.std_error,
        "pass": bool(gap <= 3.0 * estimate.std_error + closed.abs_error),
    }
    _emit(_fmt(payload) + "\n", args.out)
    return 0


def _cmd_threshold(args) -> int:
    from .volumes import threshold_k

    k = threshold_k(args.p, args.phi)
    _emit(_fmt({"p": args.p, "phi": args.phi, "k": k}) + "\n", args.out)
    return 0


def _cmd_advise(args) -> int:
    with open(args.instance) as handle:
        inst = KnapsackInstance.from_json(json.load(handle))
    profiles = [profile(bp, args.p, index=i)
                for i, bp in enumerate(inst.bound_pairs())]
    strategy = RankingStrategy.parse(args.strategy, default_seed=_seed_from(args))
    chosen = rank(profiles, strategy, args.budget)
    gaps = {pr.index: pr.vol_gap for pr in profiles}
    lines = ["index,vol_gap"]
    lines += [f"{i},{format(gaps[i], '.17g')}" for i in chosen]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_experiment(args) -> int:
    seed = _seed_from(args)
    if args.model == "knapsack":
        inst = generate_knapsack(args.n, seed)
    else:
        inst = generate_meanvar(args.n, seed)
    strategies = [RankingStrategy.parse(token, default_seed=seed)
                  for token in args.strategies.split(",") if token]
    if not strategies:
        raise InputError("need at least one ranking strategy")
    rows = run_budget_sweep(inst, strategies, steps=args.steps, tol=args.tol)
    if args.out:
        with open(args.out, "w", newline="") as handle:
            sweep_to_csv(rows, handle)
    else:
        sweep_to_csv(rows, sys.stdout)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaxvol",
        description="Volumes and experiments for on/off relaxation bodies.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_body_flags(p):
        p.add_argument("--f", required=True,
                       help="cost function: power:P | exp:B[:A] | envelope(power:P)")
        p.add_argument("--l", type=float, required=True, help="lower bound")
        p.add_argument("--u", type=float, required=True, help="upper bound")
        p.add_argument("--relax", required=True,
                       help="perspective | naive | piecewise | q:Q")
        p.add_argument("--cap", choices=["secant", "simple"], default="secant")
        p.add_argument("--out", default=None, help="write output here instead of stdout")

    p_vol = sub.add_parser("volume", help="closed-form volume of one body")
    add_body_flags(p_vol)
    p_vol.set_defaults(func=_cmd_volume)

    p_ver = sub.add_parser("verify", help="closed form vs Monte Carlo oracle")
    add_body_flags(p_ver)
    p_ver.add_argument("--samples", type=int, default=1_000_000)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.set_defaults(func=_cmd_verify)

    p_thr = sub.add_parser("threshold", help="bound ratio achieving a gap fraction")
    p_thr.add_argument("--p", type=float, required=True)
    p_thr.add_argument("--phi", type=float, required=True)
    p_thr.add_argument("--out", default=None)
    p_thr.set_defaults(func=_cmd_threshold)

    p_adv = sub.add_parser("advise", help="rank variables by tightening benefit")
    p_adv.add_argument("--instance", required=True, help="knapsack instance JSON")
    p_adv.add_argument("--p", type=float, default=2.0)
    p_adv.add_argument("--strategy", default="descending")
    p_adv.add_argument("--budget", type=float, default=1.0)
    p_adv.add_argument("--seed", type=int, default=0)
    p_adv.add_argument("--out", default=None)
    p_adv.set_defaults(func=_cmd_advise)

    p_exp = sub.add_parser("experiment", help="budget sweep on a seeded instance")
    p_exp.add_argument("--model", choices=["knapsack", "meanvar"], required=True)
    p_exp.add_argument("--n", type=int, required=True)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--steps", type=int, default=15)
    p_exp.add_argument("--strategies", default="descending,ascending,random")
    p_exp.add_argument("--tol", type=float, default=1e-6)
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (DomainError, CapabilityError, InputError, ValueError, OSError) as exc:
        print(f"relaxvol: error: {exc}", file=sys.stderr)
        return _USAGE_ERROR
    except NumericalError as exc:
        print(f"relaxvol: numerical failure: {exc}", file=sys.stderr)
        return _NUMERIC_ERROR


def entrypoint() -> None:
    sys.exit(main())
