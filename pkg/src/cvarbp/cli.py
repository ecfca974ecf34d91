"""Command-line interface.

Commands: solve-exact, solve-approx, audit, gen-clique, exp-comparison,
exp-entropy, exp-tradeoff. JSON in, JSON/CSV out; exit codes 0 (ok),
1 (solver failure), 2 (input error). Entropy columns are in nats.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import experiments
from .approx import (
    DiscretizationInfeasible,
    EmptyAlphabetError,
    GridSizeError,
    SoundnessError,
    solve_discretized,
    solve_discretized_local,
)
from .core import (
    instance_to_json,
    load_instance,
    scheme_from_json,
    scheme_to_json,
    validate_instance,
)
from .cvar import CliqueCapError
from .exact import IcVerificationError, SolverFailure, solve_exact
from .hardness import gen_clique_instance
from .oracle import OracleError, audit_scheme

SOLVER_ERRORS = (SolverFailure, IcVerificationError, DiscretizationInfeasible,
                 SoundnessError, EmptyAlphabetError, GridSizeError,
                 CliqueCapError, OracleError)


class InputError(Exception):
    pass


def _load_instance_checked(path):
    try:
        inst = load_instance(path)
    except FileNotFoundError as e:
        raise InputError(f"{path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{path}: malformed instance: {e}") from e
    problems = validate_instance(inst)
    if problems:
        raise InputError(f"{path}: invalid instance: " + "; ".join(problems))
    return inst


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, out_path) -> None:
    _emit(json.dumps(obj, indent=2) + "\n", out_path)


def _emit_rows(rows, fieldnames, args) -> None:
    if getattr(args, "json", False):
        _emit_json(rows, args.out)
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt_cell(row.get(k, "")) for k in fieldnames})
    _emit(buf.getvalue(), args.out)


def _fmt_cell(x):
    if isinstance(x, float):
        return f"{x:.12g}"
    return x


def cmd_solve_exact(args) -> int:
    inst = _load_instance_checked(args.instance)
    res = solve_exact(inst)
    _emit_json(scheme_to_json(res.scheme, value=res.value), args.out)
    return 0


def cmd_solve_approx(args) -> int:
    inst = _load_instance_checked(args.instance)
    if args.local_probes:
        try:
            with open(args.local_probes, "r", encoding="utf-8") as fh:
                probes = [np.array(p, dtype=float) for p in json.load(fh)]
        except (OSError, json.JSONDecodeError, ValueError) as e:
            raise InputError(f"{args.local_probes}: {e}") from e
        res = solve_discretized_local(inst, probes, eta=args.eta, eps=args.eps,
                                      delta=args.delta, k_override=args.k)
    else:
        res = solve_discretized(inst, eps=args.eps, k_override=args.k,
                                gamma=args.gamma)
    payload = scheme_to_json(res.scheme, value=res.value)
    payload.update({
        "max_regret": res.max_regret,
        "min_margin": res.min_margin,
        "grid_size": res.grid_size,
        "alphabet_size": res.alphabet_size,
        "k": res.k,
        "eps_r": res.eps_r,
    })
    if args.local_probes:
        payload["n_loc"] = res.n_loc
        payload["fallback"] = res.fallback
    _emit_json(payload, args.out)
    return 0


def cmd_audit(args) -> int:
    inst = _load_instance_checked(args.instance)
    try:
        with open(args.scheme, "r", encoding="utf-8") as fh:
            scheme = scheme_from_json(json.load(fh))
    except FileNotFoundError as e:
        raise InputError(f"{args.scheme}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{args.scheme}:{e.lineno}:{e.colno}: {e.msg}") from e
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{args.scheme}: malformed scheme: {e}") from e
    report = audit_scheme(inst, scheme)
    scheme_problems = scheme.validate(inst)
    _emit_json({
        "bayes_residual": report.bayes_residual,
        "value": report.value,
        "regrets": list(report.regrets),
        "margins": None if report.margins is None else list(report.margins),
        "max_regret": report.max_regret,
        "violations": scheme_problems,
    }, args.out)
    return 0


def cmd_gen_clique(args) -> int:
    try:
        with open(args.edges, "r", encoding="utf-8") as fh:
            edges = []
            for lineno, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                parts = body.replace(",", " ").split()
                if len(parts) != 2:
                    raise InputError(f"{args.edges}:{lineno}: expected 'i j', got {line.strip()!r}")
                edges.append((int(parts[0]), int(parts[1])))
    except FileNotFoundError as e:
        raise InputError(f"{args.edges}: {e.strerror}") from e
    except ValueError as e:
        raise InputError(f"{args.edges}: {e}") from e
    try:
        inst = gen_clique_instance(edges, args.k, n_vertices=args.n_vertices)
    except ValueError as e:
        raise InputError(str(e)) from e
    _emit_json(instance_to_json(inst), args.out)
    return 0


def _parse_grid(text: str, name: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as e:
        raise InputError(f"bad {name} grid {text!r}: {e}") from e


def cmd_exp_comparison(args) -> int:
    r_grid = _parse_grid(args.r_grid, "r") if args.r_grid else experiments.DEFAULT_R_GRID
    scenarios = ("1", "2") if args.scenario == "both" else (args.scenario,)
    rows = experiments.comparison_sweep(r_grid, scenarios=scenarios)
    _emit_rows(rows, ["scenario", "r", "cvar_value", "standard_value_under_cvar"], args)
    return 0


def cmd_exp_entropy(args) -> int:
    r_grid = _parse_grid(args.r_grid, "r") if args.r_grid else experiments.DEFAULT_R_GRID
    rows = experiments.entropy_sweep(r_grid)
    _emit_rows(rows, ["kind", "r", "sender_value", "entropy_nats", "chosen_actions"], args)
    return 0


def cmd_exp_tradeoff(args) -> int:
    eps_grid = (_parse_grid(args.eps_grid, "eps") if args.eps_grid
                else experiments.DEFAULT_EPS_GRID)
    sizes = experiments.TRADEOFF_SIZES
    if args.sizes:
        try:
            sizes = tuple(tuple(int(t) for t in pair.split("x")) for pair in args.sizes.split(","))
        except ValueError as e:
            raise InputError(f"bad --sizes {args.sizes!r}: {e}") from e
    rows = experiments.tradeoff_sweep(eps_grid, seed=args.seed, sizes=sizes)
    _emit_rows(rows, ["m", "n", "eps", "k", "exact_value", "approx_value",
                      "rel_error", "excess", "max_regret", "wall_ms"], args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cvarbp",
                                 description="Persuasion solvers for tail-risk receivers")
    ap.add_argument("--seed", type=int, default=0, help="PRNG seed for generated instances")
    ap.add_argument("--out", default=None, help="write output to this path instead of stdout")
    fmt = ap.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit JSON (sweeps default to CSV)")
    fmt.add_argument("--csv", action="store_true", help="emit CSV where applicable")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-exact", help="active-facet LP optimum")
    p.add_argument("instance")
    p.set_defaults(func=cmd_solve_exact)

    p = sub.add_parser("solve-approx", help="finite-precision discretized solve")
    p.add_argument("instance")
    p.add_argument("--eps", type=float, default=0.4)
    p.add_argument("--k", type=int, default=None, help="grid resolution override")
    p.add_argument("--gamma", type=float, default=None, help="strict-IC margin filter")
    p.add_argument("--local-probes", default=None,
                   help="JSON file with probe posteriors; switches to the local pipeline")
    p.add_argument("--eta", type=float, default=0.1, help="L1 radius around the probes")
    p.add_argument("--delta", type=float, default=0.1, help="confidence for the local bound")
    p.set_defaults(func=cmd_solve_approx)

    p = sub.add_parser("audit", help="recompute value/regret/margins of a scheme")
    p.add_argument("instance")
    p.add_argument("scheme")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("gen-clique", help="emit a clique-risk instance JSON")
    p.add_argument("--edges", required=True, help="text file, one 'i j' edge per line")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-vertices", type=int, default=None)
    p.set_defaults(func=cmd_gen_clique)

    p = sub.add_parser("exp-comparison", help="CVaR-aware vs risk-neutral sweep")
    p.add_argument("--r-grid", default=None, help="comma-separated r values")
    p.add_argument("--scenario", choices=["1", "2", "both"], default="both")
    p.set_defaults(func=cmd_exp_comparison)

    p = sub.add_parser("exp-entropy", help="disclosure entropy sweep")
    p.add_argument("--r-grid", default=None)
    p.set_defaults(func=cmd_exp_entropy)

    p = sub.add_parser("exp-tradeoff", help="discretization accuracy/time sweep")
    p.add_argument("--eps-grid", default=None)
    p.add_argument("--sizes", default=None, help="e.g. 4x3,6x4 (states x actions)")
    p.set_defaults(func=cmd_exp_tradeoff)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
