"""Command-line interface.

Single binary, batch-oriented subcommands. Exit codes: 0 on success, 2 on
validation failure (with a machine-readable error object on stderr), 1 when
a verification run detects a violated bound (a self-contained counterexample
dump is written for reproduction). All floats are printed with 12
significant digits, so identical configs and seeds give byte-identical
reports.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import verify as vf
from .channel import ThermalOperation, apply, reversal
from .config import DEFAULT_TOLS, NumericsError, Tolerances, ValidationError
from .divergence import fidelity, relative_entropy, renyi_divergence
from .jsonio import (
    density_from_json,
    dump_report,
    hamiltonian_from_json,
    load_json,
    matrix_from_json,
    matrix_to_json,
    round_sig,
)
from .linalg import trace_norm
from .oscillator import (
    OscillatorInstance,
    invest_bound,
    population_residual,
    reversal_populations,
)
from .thermo import gibbs_state
from .workbounds import work_report


def _parse_tol_overrides(pairs: list[str]) -> Tolerances:
    overrides: dict[str, float] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValidationError(f"--tol-override expects key=value, got {pair!r}")
        key, val = pair.split("=", 1)
        try:
            overrides[key.strip()] = float(val)
        except ValueError as exc:
            raise ValidationError(f"tolerance value {val!r} is not a number") from exc
    return DEFAULT_TOLS.replace(**overrides)


def _require_seed(args) -> int:
    if args.seed is None:
        raise ValidationError("--seed is mandatory for randomized commands")
    return int(args.seed)


def _csv_text(header: list[str], rows: list[list]) -> str:
    out = []
    writer = csv.writer(_ListWriter(out), lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v + 0.0:.12g}" if isinstance(v, float) else v for v in row])
    return "".join(out)


class _ListWriter:
    def __init__(self, sink: list[str]):
        self.sink = sink

    def write(self, chunk: str) -> None:
        self.sink.append(chunk)


def _emit(report: dict, args, csv_payload: tuple[list[str], list[list]] | None = None) -> None:
    if args.format == "csv":
        if csv_payload is None:
            raise ValidationError("csv format is only available for sweep/trace outputs")
        text = _csv_text(*csv_payload)
    else:
        text = dump_report(report, None)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    Path(path).write_text(_csv_text(header, rows), encoding="utf-8")


def cmd_divergence(args, tols: Tolerances) -> int:
    a = density_from_json(load_json(args.a), tols=tols)
    b = density_from_json(load_json(args.b), tols=tols)
    if args.alpha is None:
        result = relative_entropy(a, b)
    else:
        if args.alpha.lower() in ("inf", "infinity"):
            alpha = math.inf
        else:
            try:
                alpha = float(args.alpha)
            except ValueError as exc:
                raise ValidationError(f"--alpha must be a number or 'inf', got {args.alpha!r}") from exc
        result = renyi_divergence(a, b, alpha)
    report = {
        "value": result.value if result.finite else None,
        "finite": result.finite,
        "support_ok": result.support_ok,
    }
    if args.alpha is not None:
        report["alpha"] = "inf" if math.isinf(alpha) else alpha
    _emit(report, args)
    return 0


def cmd_workbound(args, tols: Tolerances) -> int:
    rho = density_from_json(load_json(args.rho), tols=tols)
    sigma = density_from_json(load_json(args.sigma), tols=tols)
    hs = hamiltonian_from_json(load_json(args.hs), tols=tols)
    tau = gibbs_state(hs, args.beta).state
    t = None
    if args.unitary is not None:
        if args.hb is None:
            raise ValidationError("--unitary requires --hb")
        hb = hamiltonian_from_json(load_json(args.hb), tols=tols)
        t = ThermalOperation(
            matrix_from_json(load_json(args.unitary)),
            hs,
            gibbs_state(hb, args.beta),
            tols=tols,
        )
    report_obj = work_report(rho, sigma, tau, mode=args.mode, t=t)
    report = {
        "mode": args.mode,
        "beta": args.beta,
        "delta": report_obj.delta,
        "w_gain_std": report_obj.w_gain_std,
        "w_inv_std": report_obj.w_inv_std,
    }
    for label, bound in (
        ("nano_gain_upper", report_obj.nano_gain_upper),
        ("nano_inv_lower", report_obj.nano_inv_lower),
    ):
        if bound is not None:
            report[label] = {
                "value": bound.value if bound.finite else None,
                "finite": bound.finite,
                "alpha": None if math.isinf(bound.alpha) else bound.alpha,
                "alpha_is_infinite": math.isinf(bound.alpha),
            }
    if report_obj.recovery_fidelity_bound is not None:
        report["recovery_fidelity_bound"] = report_obj.recovery_fidelity_bound
    trace_rows = [
        ["inf" if math.isinf(a) else a, d if not math.isnan(d) else "nan"]
        for a, d in report_obj.alpha_trace
    ]
    if args.csv is not None:
        _write_csv(args.csv, ["alpha", "difference"], trace_rows)
        report["alpha_trace_csv"] = args.csv
    _emit(
        report,
        args,
        csv_payload=(["alpha", "difference"], trace_rows) if trace_rows else None,
    )
    return 0


def cmd_recover(args, tols: Tolerances) -> int:
    hs = hamiltonian_from_json(load_json(args.hs), tols=tols)
    hb = hamiltonian_from_json(load_json(args.hb), tols=tols)
    sigma = density_from_json(load_json(args.sigma), tols=tols)
    t = ThermalOperation(
        matrix_from_json(load_json(args.unitary)),
        hs,
        gibbs_state(hb, args.beta),
        tols=tols,
    )
    recovered = apply(reversal(t), sigma)
    report: dict = {
        "beta": args.beta,
        "recovered_state": matrix_to_json(recovered.matrix),
    }
    if args.rho is not None:
        rho = density_from_json(load_json(args.rho), tols=tols)
        tau = t.tau_system
        dlt = relative_entropy(rho, tau).value - relative_entropy(sigma, tau).value
        d_rec = relative_entropy(rho, recovered)
        nlf = -math.log(fidelity(rho, recovered).squared)
        forward_gap = trace_norm(apply(t, rho).matrix - sigma.matrix)
        report.update(
            {
                "delta": dlt,
                "d_recovery": d_rec.value if d_rec.finite else None,
                "neg_log_fidelity": nlf,
                "transition_residual": forward_gap,
                "bounds_satisfied": {
                    "delta_ge_d_recovery": bool(
                        d_rec.finite and dlt >= d_rec.value - 1e-10
                    ),
                    "d_recovery_ge_neg_log_fidelity": bool(
                        d_rec.finite and d_rec.value >= nlf - 1e-10
                    ),
                },
            }
        )
    _emit(report, args)
    return 0


def _parse_sweep(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 4 or parts[0] != "p0":
        raise ValidationError("--sweep expects p0:start:stop:steps")
    try:
        start, stop, steps = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise ValidationError(f"--sweep has non-numeric fields: {spec!r}") from exc
    if steps < 2:
        raise ValidationError("--sweep needs at least 2 steps")
    return np.linspace(start, stop, steps)


def cmd_oscillator(args, tols: Tolerances) -> int:
    def one_point(p0: float) -> dict:
        inst = OscillatorInstance.create(args.beta_e, p0, args.nmax, tols=tols)
        p0r, _ = reversal_populations(inst)
        return {
            "p0": inst.p0,
            "b": inst.b,
            "n_max": inst.n_max,
            "recovery_ground_population": p0r,
            "bound": invest_bound(inst),
            "closed_form_residual": population_residual(inst),
        }

    if args.sweep is not None:
        points = [one_point(p) for p in _parse_sweep(args.sweep)]
        report = {"beta_e": args.beta_e, "points": points}
        header = [
            "p0", "b", "recovery_ground_population", "bound", "closed_form_residual",
        ]
        rows = [[pt[h] for h in header] for pt in points]
        if args.csv is not None:
            _write_csv(args.csv, header, rows)
            report["csv"] = args.csv
        _emit(report, args, csv_payload=(header, rows))
        return 0
    if args.p0 is None:
        raise ValidationError("--p0 is required unless --sweep is given")
    report = {"beta_e": args.beta_e, **one_point(args.p0)}
    _emit(report, args)
    return 0


def _suite_report(results: list[vf.SuiteResult]) -> dict:
    return {
        "suites": [
            {
                "name": r.name,
                "trials": r.trials,
                "passes": r.passes,
                "failures": r.failures,
                "skipped_premise": r.skipped,
                "max_residual": r.max_residual,
                "checks": r.by_check,
            }
            for r in results
        ],
        "ok": all(r.ok for r in results),
    }


def _handle_failures(results: list[vf.SuiteResult], args) -> int:
    for r in results:
        if r.counterexample is not None:
            vf.dump_counterexample(r.counterexample, args.counterexample)
            sys.stderr.write(
                json.dumps(
                    {
                        "error": "verification failure",
                        "suite": r.name,
                        "check": r.counterexample["check"],
                        "residual": round_sig(r.counterexample["residual"]),
                        "counterexample": str(args.counterexample),
                    }
                )
                + "\n"
            )
            return 1
    return 0 if all(r.ok for r in results) else 1


def _parse_dims(spec: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    try:
        sys_part, bath_part = spec.split("x")
        system = tuple(int(d) for d in sys_part.split(",") if d)
        bath = tuple(int(d) for d in bath_part.split(",") if d)
    except ValueError as exc:
        raise ValidationError("--dims expects e.g. 2,3x2,3,4") from exc
    if not system or not bath:
        raise ValidationError("--dims needs system and bath dimension lists")
    return system, bath


def cmd_verify(args, tols: Tolerances) -> int:
    if args.replay is not None:
        dump = load_json(args.replay)
        outcome = vf.replay_counterexample(dump)
        _emit(outcome, args)
        return 1 if outcome.get("status") == "fail" else 0
    seed = _require_seed(args)
    system_dims, bath_dims = _parse_dims(args.dims)
    fixture = None
    if args.fixture is not None:
        raw = load_json(args.fixture)
        try:
            fixture = {
                "v": raw["unitary"],
                "hs": raw["system"]["diagonal"],
                "hb": raw["bath"]["diagonal"],
                "beta": raw["beta"],
            }
        except (KeyError, TypeError) as exc:
            raise ValidationError(
                f"fixture file must carry unitary/system/bath/beta: {exc}"
            ) from exc
    results = vf.run_all(
        seed,
        trials=args.trials,
        system_dims=system_dims,
        bath_dims=bath_dims,
        fixture=fixture,
        workers=args.workers,
    )
    report = _suite_report(results)
    report["seed"] = seed
    report["trials"] = args.trials
    _emit(report, args)
    return _handle_failures(results, args)


def _parse_catalysis_dims(spec: str) -> tuple[int, tuple[int, ...]]:
    try:
        sys_part, cat_part = spec.split(";")
        system = int(sys_part)
        cats = tuple(int(d) for d in cat_part.split(",") if d)
    except ValueError as exc:
        raise ValidationError("--dims expects e.g. 2;2,3 (system;catalysts)") from exc
    if not cats:
        raise ValidationError("at least one catalyst dimension required")
    return system, cats


def cmd_catalysis(args, tols: Tolerances) -> int:
    if args.mode != "verify":
        raise ValidationError(f"unknown catalysis mode {args.mode!r}")
    seed = _require_seed(args)
    system, cats = _parse_catalysis_dims(args.dims)
    result = vf.catalysis_suite(
        seed,
        args.trials,
        system_dims=(system,),
        bath_dims=(args.bath_dim,),
        catalyst_dims=(cats,),
        workers=args.workers,
    )
    report = _suite_report([result])
    report["seed"] = seed
    report["trials"] = args.trials
    premise = result.by_check.get("catalysis_product_return", {})
    report["premise_passing"] = premise.get("pass", 0) + premise.get("fail", 0)
    _emit(report, args)
    return _handle_failures([result], args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermo-recover",
        description="Thermal operations, recovery maps, and work bounds.",
    )
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (mandatory for randomized commands)")
    parser.add_argument("--out", default=None, help="write the report to this path instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    parser.add_argument(
        "--tol-override", action="append", default=[], metavar="KEY=VALUE",
        help="override a named tolerance (repeatable)",
    )
    parser.add_argument("--workers", type=int, default=1, help="worker threads for trial sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", help="relative or Renyi divergence between two states")
    p.add_argument("--a", required=True, help="first state (matrix JSON)")
    p.add_argument("--b", required=True, help="second state (matrix JSON)")
    p.add_argument("--alpha", default=None, help="Renyi order (number or 'inf'); default: relative entropy")
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("workbound", help="work bounds for a transition rho -> sigma")
    p.add_argument("--rho", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--hs", required=True, help="system Hamiltonian JSON")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--mode", choices=("std", "nano-gain", "nano-invest"), default="std")
    p.add_argument("--unitary", default=None, help="energy-conserving unitary realizing the transition")
    p.add_argument("--hb", default=None, help="bath Hamiltonian JSON (with --unitary)")
    p.add_argument("--csv", default=None, help="write the alpha sweep to this CSV file")
    p.set_defaults(func=cmd_workbound)

    p = sub.add_parser("recover", help="apply the reversal channel and report the bound chain")
    p.add_argument("--unitary", required=True)
    p.add_argument("--hs", required=True)
    p.add_argument("--hb", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--sigma", required=True, help="state to recover from")
    p.add_argument("--rho", default=None, help="original state (enables the bound chain)")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("oscillator", help="two-level system with an oscillator bath")
    p.add_argument("--beta-e", dest="beta_e", type=float, required=True)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--sweep", default=None, metavar="p0:start:stop:steps")
    p.add_argument("--csv", default=None, help="write sweep rows to this CSV file")
    p.set_defaults(func=cmd_oscillator)

    p = sub.add_parser("catalysis", help="catalytic-operation verification sweeps")
    p.add_argument("mode", choices=("verify",))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--dims", default="2;2", help="system;catalyst dims, e.g. 2;2,3")
    p.add_argument("--bath-dim", dest="bath_dim", type=int, default=3)
    p.add_argument("--counterexample", default="counterexample.json")
    p.set_defaults(func=cmd_catalysis)

    p = sub.add_parser("verify", help="run all property suites")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--dims", default="2,3x2,3,4", help="system dims x bath dims")
    p.add_argument("--fixture", default=None, help="inject a (possibly invalid) unitary fixture")
    p.add_argument("--replay", default=None, help="re-run a dumped counterexample")
    p.add_argument("--counterexample", default="counterexample.json")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tols = _parse_tol_overrides(args.tol_override)
        return args.func(args, tols)
    except (ValidationError, NumericsError) as exc:
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
