"""Batch command-line front end.

Subcommands: classify, witness, steer, di, oracle.  Every run emits a
JSON document containing a replayable run record (command, input digest,
seed, tolerances, wall time) next to the results; sweep-style reports
additionally write CSV rows, and --plot renders a figure beside them.

Exit codes: 0 success, 2 parse/validation failure, 3 undetermined
classification.  ENTWIT_THREADS caps worker threads (applied to the BLAS
pools before numpy loads).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_UNDETERMINED = 3


def _apply_thread_cap() -> None:
    cap = os.environ.get("ENTWIT_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def _run_record(args: argparse.Namespace, argv: list[str], digest: str,
                started: float, extra_tols: dict | None = None) -> dict:
    tols = {"tol": args.tol}
    if extra_tols:
        tols.update(extra_tols)
    return {
        "command": argv,
        "input_digest": digest,
        "seed": args.seed,
        "tolerances": tols,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }


def _emit(args: argparse.Namespace, payload: dict, csv_rows: list[dict] | None = None,
          csv_name: str | None = None) -> None:
    if args.out:
        base = Path(args.out)
        from .serialize import dump_json

        dump_json(base.with_suffix(".json"), payload)
        print(f"wrote {base.with_suffix('.json')}")
        if csv_rows:
            csv_path = base.with_suffix(".csv")
            with open(csv_path, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(csv_rows[0].keys()))
                writer.writeheader()
                writer.writerows(csv_rows)
            print(f"wrote {csv_path}")
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()


def _maybe_plot(args: argparse.Namespace) -> Path | None:
    if not getattr(args, "plot", False):
        return None
    if not args.out:
        raise SystemExit("--plot needs --out to know where to put the figure")
    return Path(args.out).with_suffix(".png")


def _load_basis_arg(arg: str | None, dims):
    from .objects import tomographic_basis
    from .serialize import load_basis, load_json

    if arg is None or arg == "standard":
        return tuple(tomographic_basis(d) for d in dims)
    path = Path(arg)
    if path.exists():
        b = load_basis(load_json(path))
    else:
        b = load_basis(arg)
    return tuple(b for _ in dims)


# ---------------------------------------------------------------------------
# classify


def cmd_classify(args: argparse.Namespace, argv: list[str]) -> int:
    started = time.perf_counter()
    from .separability import UNDETERMINED, classify_measurement
    from .serialize import resolve_measurement_arg

    m, payload = resolve_measurement_arg(args.measurement, tol=args.tol)
    result = classify_measurement(m, seed=args.seed)
    per_element = []
    for k, v in enumerate(result.elements):
        entry: dict = {"index": k, "status": v.status, "tol": v.tol}
        ev = v.evidence
        if ev is not None:
            entry["evidence"] = _evidence_record(ev)
        per_element.append(entry)
        print(f"element {k}: {v.status}")
    n_ent = sum(1 for v in result.elements if v.status == "entangled")
    print(f"verdict: {result.verdict} ({n_ent}/{len(result.elements)} elements entangled)")
    doc = {
        "run": _run_record(args, argv, _digest(payload), started),
        "result": {
            "measurement": m.name,
            "verdict": result.verdict,
            "elements": per_element,
        },
    }
    _emit(args, doc)
    return EXIT_UNDETERMINED if result.verdict == UNDETERMINED else EXIT_OK


def _evidence_record(ev) -> dict:
    from .separability import NptEvidence, PptSeparable, ProductDecomposition
    from .serialize import vector_record

    if isinstance(ev, NptEvidence):
        return {"kind": "npt", "cut": list(ev.cut), "min_eigenvalue": ev.min_eigenvalue}
    if isinstance(ev, PptSeparable):
        return {"kind": "ppt-sufficient", "min_eigenvalue": ev.min_eigenvalue}
    if isinstance(ev, ProductDecomposition):
        return {
            "kind": "product-decomposition",
            "terms": len(ev.coefficients),
            "residual": ev.residual,
            "coefficients": list(ev.coefficients),
            "states": [[vector_record(s) for s in local] for local in ev.states],
        }
    return {"kind": "unknown"}


# ---------------------------------------------------------------------------
# witness


def cmd_witness(args: argparse.Namespace, argv: list[str]) -> int:
    started = time.perf_counter()
    import numpy as np

    from .serialize import resolve_measurement_arg, witness_record
    from .witness import attach_beta, beta_coefficients, builtin_wbm, builtin_wbm_prime, witness_from_element

    if args.builtin:
        named = {"wbm": builtin_wbm, "wbm-prime": builtin_wbm_prime}[args.builtin]
        w = named()
        bases = _load_basis_arg(args.basis, w.dims)
        digest = _digest(args.builtin.encode())
        flagged = None
    else:
        if not args.measurement:
            raise SystemExit("witness: need a measurement file or --builtin")
        m, payload = resolve_measurement_arg(args.measurement, tol=args.tol)
        digest = _digest(payload)
        bases = _load_basis_arg(args.basis, m.dims)
        cut = None
        if args.cut is not None:
            cut = tuple(int(c) for c in args.cut.split(","))
        if args.element is not None:
            w = witness_from_element(m.effects[args.element], cut=cut)
            flagged = args.element
        else:
            from .steering import steering_witness_for

            w, flagged = steering_witness_for(m, cut=cut, basis=bases)
    if w.beta is None:
        w = attach_beta(w, bases)
    beta, residual = beta_coefficients(w, w.bases)
    record = witness_record(w)
    record["beta_residual"] = residual
    if flagged is not None:
        record["target_element"] = flagged
    rows = []
    for idx in np.ndindex(beta.shape):
        row = {f"i{k + 1}": int(v) for k, v in enumerate(idx)}
        row["beta"] = float(beta[idx])
        rows.append(row)
    print(f"witness '{w.name}' on dims {list(w.dims)}; beta residual {residual:.2e}")
    # the witness file IS the record (so it can be fed back to other
    # commands); the run metadata rides along under "run"
    record["run"] = _run_record(args, argv, digest, started, {"beta_residual": residual})
    _emit(args, record, csv_rows=rows)
    fig = _maybe_plot(args)
    if fig is not None and beta.ndim == 2:
        from .plotting import render_beta_heatmap

        render_beta_heatmap(beta, fig, title=f"witness coefficients ({w.name})")
        print(f"wrote {fig}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# steer


def _resolve_bob(record, tol: float):
    from .serialize import FormatError, load_measurement, resolve_measurement_arg

    if isinstance(record, str):
        return resolve_measurement_arg(record, tol=tol)
    if isinstance(record, dict) and "file" in record:
        return resolve_measurement_arg(record["file"], tol=tol)
    if isinstance(record, dict):
        m = load_measurement(record, tol=tol)
        return m, json.dumps(record, sort_keys=True).encode()
    raise FormatError("scenario: 'bob' must be a name, a file reference or a measurement record")


def _resolve_witness(record, bob, bases, tol: float):
    from .serialize import FormatError, load_json, load_witness
    from .steering import steering_witness_for
    from .witness import attach_beta, builtin_wbm, builtin_wbm_prime

    if record in (None, "auto"):
        w, idx = steering_witness_for(bob, basis=bases)
        return w, idx
    if isinstance(record, dict) and "builtin" in record:
        named = {"wbm": builtin_wbm, "wbm-prime": builtin_wbm_prime}[record["builtin"]]
        return attach_beta(named(), bases), None
    if isinstance(record, dict) and "from_element" in record:
        w, idx = steering_witness_for(bob, element_index=int(record["from_element"]), basis=bases)
        return w, idx
    if isinstance(record, dict) and "file" in record:
        w = load_witness(load_json(record["file"]))
        if w.beta is None:
            w = attach_beta(w, bases)
        return w, None
    raise FormatError("scenario: unrecognized 'witness' entry")


def cmd_steer(args: argparse.Namespace, argv: list[str]) -> int:
    started = time.perf_counter()
    import numpy as np

    from .serialize import load_json, load_vector, resolve_input_path
    from .sampling import Seed
    from .steering import (
        functional_S,
        quantum_correlations,
        random_sohs_model,
        sohs_correlations,
        steering_sweep,
        steering_threshold,
        white_noise_source,
    )

    scenario = load_json(args.scenario)
    digest = _digest(resolve_input_path(args.scenario).read_bytes())
    bob, _ = _resolve_bob(scenario.get("bob", "builtin:bell-basis"), args.tol)
    bases = _load_basis_arg(args.basis or scenario.get("basis", "standard"), bob.dims)
    w, target = _resolve_witness(scenario.get("witness", "auto"), bob, bases, args.tol)

    noise = scenario.get("noise", {})
    visibility = float(scenario.get("visibility", noise.get("visibility", 1.0))
                       if not isinstance(noise, (int, float)) else 1.0 - float(noise))
    src_rec = scenario.get("sources", "maximally_entangled")
    sources = None
    if isinstance(src_rec, list):
        sources = [load_vector(rec) for rec in src_rec]
    elif src_rec not in ("maximally_entangled", "maximally-entangled", None):
        raise SystemExit(f"steer: unrecognized sources entry {src_rec!r}")
    elif visibility < 1.0:
        sources = [white_noise_source(d, visibility) for d in bob.dims]
    table = quantum_correlations(bob, sources, bases)
    value, arg_b = functional_S(table, w.beta)
    print(f"S = {value:.9f} at b = {arg_b} (visibility {visibility})")

    sanity_rows = []
    worst_sohs = -np.inf
    for k in range(args.sohs_checks):
        model = random_sohs_model(Seed(args.seed).child(k), len(bob.dims), bob.dims[0])
        s_val, s_b = functional_S(sohs_correlations(model, bases), w.beta)
        worst_sohs = max(worst_sohs, s_val)
        sanity_rows.append({"model": k, "S_value": s_val, "argmax_b": s_b})
    if args.sohs_checks:
        print(f"SOHS sanity: max S over {args.sohs_checks} random models = {worst_sohs:.3e}")

    from .serialize import table_record

    result: dict = {
        "bob": bob.name,
        "witness": w.name,
        "target_element": target,
        "basis_id": w.basis_id,
        "beta_id": f"{w.name}@{w.basis_id}",
        "visibility": visibility,
        "S_value": value,
        "argmax_b": arg_b,
        "outcome_marginal": [float(v) for v in table.outcome_marginal()],
        "table": table_record(table),
        "sohs_sanity": {"models": args.sohs_checks, "max_S": worst_sohs if args.sohs_checks else None},
    }
    csv_rows = None
    if "sweep" in scenario:
        sw = scenario["sweep"]
        vis = np.linspace(float(sw.get("start", 0.0)), float(sw.get("stop", 1.0)),
                          int(sw.get("steps", 21)))
        rows = steering_sweep(bob, w, [float(v) for v in vis], bases)
        threshold = steering_threshold(bob, w, basis=bases)
        for r in rows:
            r["visibility_threshold"] = threshold
        result["sweep"] = rows
        result["visibility_threshold"] = threshold
        csv_rows = rows
        print(f"sweep: {len(rows)} points, crossing at visibility {threshold:.6f}")
    doc = {"run": _run_record(args, argv, digest, started), "result": result}
    _emit(args, doc, csv_rows=csv_rows)
    fig = _maybe_plot(args)
    if fig is not None:
        from .plotting import render_outcome_bars, render_sweep_figure

        if csv_rows:
            render_sweep_figure(csv_rows, fig, "S_value",
                                threshold=result.get("visibility_threshold"),
                                title=f"swap steering: {bob.name}")
        else:
            per_b = np.tensordot(table.probs[0], w.beta,
                                 axes=(tuple(range(1, w.beta.ndim + 1)),
                                       tuple(range(w.beta.ndim))))
            render_outcome_bars([float(v) for v in per_b], fig, "S contribution",
                                title=f"swap steering: {bob.name}")
        print(f"wrote {fig}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# di


def cmd_di(args: argparse.Namespace, argv: list[str]) -> int:
    started = time.perf_counter()
    import numpy as np

    from .serialize import FormatError, builtin_functional, load_json, resolve_input_path
    from .sampling import Seed
    from .star import (
        BellFunctional,
        OptimizerBudget,
        di_detect,
        functional_E,
        local_model_correlations,
        random_local_model,
    )

    scenario = load_json(args.scenario)
    digest = _digest(resolve_input_path(args.scenario).read_bytes())
    bob, _ = _resolve_bob(scenario.get("bob", "builtin:bell-basis"), args.tol)
    f_rec = scenario.get("functional", "chsh")
    if isinstance(f_rec, str):
        f = builtin_functional(f_rec)
    elif isinstance(f_rec, dict):
        coeffs = np.asarray(f_rec["coefficients"], dtype=float)
        outs = tuple(int(v) for v in f_rec["n_outputs"])
        ins = tuple(int(v) for v in f_rec["n_inputs"])
        f = BellFunctional(coeffs.reshape(outs + ins), outs, ins,
                           name=f_rec.get("name", "custom"))
    else:
        raise FormatError("scenario: unrecognized 'functional' entry")

    budget_rec = scenario.get("budget", {})
    budget = OptimizerBudget(
        restarts=int(args.restarts if args.restarts is not None else budget_rec.get("restarts", 6)),
        max_sweeps=int(budget_rec.get("max_sweeps", 300)),
        grid_points=int(budget_rec.get("grid_points", 33)),
        use_grid=bool(budget_rec.get("use_grid", True)),
    )
    sources = None
    src_rec = scenario.get("sources", "maximally_entangled")
    if isinstance(src_rec, list):
        from .serialize import load_vector

        sources = [load_vector(rec) for rec in src_rec]
    visibility = float(scenario.get("visibility", 1.0))
    if sources is None and visibility < 1.0:
        from .steering import white_noise_source

        sources = [white_noise_source(d, visibility) for d in bob.dims]
    report = di_detect(
        bob,
        f,
        seed=args.seed,
        budget=budget,
        per_b_settings=(args.per_b_settings == "on"),
        allow_mixed_elements=bool(scenario.get("allow_mixed_elements", False)),
        sources=sources,
    )
    print(f"E = {report.e_value:.9f} at b = {report.argmax_outcome} "
          f"(lhv {report.lhv}); verdict: {report.verdict}")

    worst_local = -np.inf
    for k in range(args.local_checks):
        model = random_local_model(Seed(args.seed).child(k), f.n_parties,
                                   n_inputs=f.n_inputs[0], n_outputs=f.n_outputs[0])
        v, _b = functional_E(local_model_correlations(model), f)
        worst_local = max(worst_local, v)
    if args.local_checks:
        print(f"local sanity: max E over {args.local_checks} random models = {worst_local:.3e}")

    per_b_rows = [
        {
            "b": r.outcome,
            "p_b": r.weight,
            "bell_value": r.bell_value,
            "E_value": r.e_value,
        }
        for r in report.per_outcome
    ]
    from .serialize import settings_record

    per_b_full = [
        dict(row, settings=settings_record(r.settings))
        for row, r in zip(per_b_rows, report.per_outcome)
    ]
    result = {
        "bob": bob.name,
        "functional": report.functional,
        "lhv_bound": report.lhv,
        "mode": report.mode,
        "E_value": report.e_value,
        "argmax_b": report.argmax_outcome,
        "table_cross_check": report.table_cross_check,
        "verdict": report.verdict,
        "per_outcome": per_b_full,
        "local_sanity": {"models": args.local_checks,
                         "max_E": worst_local if args.local_checks else None},
        "budget": {"restarts": budget.restarts, "grid_points": budget.grid_points,
                   "max_sweeps": budget.max_sweeps, "use_grid": budget.use_grid},
    }
    doc = {"run": _run_record(args, argv, digest, started), "result": result}
    _emit(args, doc, csv_rows=per_b_rows)
    fig = _maybe_plot(args)
    if fig is not None:
        from .plotting import render_outcome_bars

        render_outcome_bars([r["E_value"] for r in per_b_rows], fig, "E contribution",
                            title=f"star network: {bob.name} vs {f.name}")
        print(f"wrote {fig}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args: argparse.Namespace, argv: list[str]) -> int:
    started = time.perf_counter()
    if args.oracle_command == "lhv":
        import numpy as np

        from .serialize import builtin_functional, load_json
        from .star import BellFunctional, lhv_bound

        if args.functional_file:
            rec = load_json(args.functional_file)
            outs = tuple(int(v) for v in rec["n_outputs"])
            ins = tuple(int(v) for v in rec["n_inputs"])
            f = BellFunctional(np.asarray(rec["coefficients"], dtype=float).reshape(outs + ins),
                               outs, ins, name=rec.get("name", "custom"))
            digest = _digest(Path(args.functional_file).read_bytes())
        else:
            f = builtin_functional(args.functional)
            digest = _digest(args.functional.encode())
        bound = lhv_bound(f)
        print(f"lhv_bound({f.name}) = {bound}")
        doc = {"run": _run_record(args, argv, digest, started),
               "result": {"functional": f.name, "lhv_bound": bound}}
        _emit(args, doc)
        return EXIT_OK
    if args.oracle_command == "product-min":
        from .serialize import load_json, load_witness, resolve_input_path, vector_record
        from .sampling import minimize_over_products

        record = load_json(args.witness)
        if "operator" not in record and "result" in record:
            record = record["result"]
        w = load_witness(record)
        digest = _digest(resolve_input_path(args.witness).read_bytes())
        value, states = minimize_over_products(w.operator, args.restarts, args.seed)
        print(f"min over {args.restarts} restarts: {value:.9e}")
        doc = {
            "run": _run_record(args, argv, digest, started),
            "result": {
                "witness": w.name,
                "restarts": args.restarts,
                "min_product_trace": value,
                "argmin_states": [vector_record(s) for s in states],
            },
        }
        _emit(args, doc)
        return EXIT_OK
    if args.oracle_command == "wbm-search":
        from .witness import wbm_prime_search

        report = wbm_prime_search(seed=args.seed, candidates_per_count=args.candidates)
        for k, entry in report["per_term_count"].items():
            print(f"{k}-term candidates: {entry['candidates']} tested, "
                  f"{entry['detecting_valid_witnesses']} valid detections")
        ref = report["reference_four_term"]
        print(f"reference {ref['name']}: {ref['correlation_terms']} terms, "
              f"detection {ref['detection']:.3f}")
        doc = {"run": _run_record(args, argv, _digest(b"wbm-search"), started),
               "result": report}
        _emit(args, doc)
        return EXIT_OK
    raise SystemExit(f"unknown oracle command {args.oracle_command!r}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed for all sampling")
    common.add_argument("--tol", type=float, default=1e-9, help="validation tolerance")
    common.add_argument("--out", type=str, default=None,
                        help="output base path (writes <out>.json and, for sweeps, <out>.csv)")

    parser = argparse.ArgumentParser(
        prog="entwit",
        description="Classify composite measurements, build witnesses, and run the "
                    "swap-steering / star-network certification pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common],
                       help="separable / entangled / undetermined verdict for a measurement")
    p.add_argument("measurement", help="measurement file, builtin:<name> or bundled:<file>")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("witness", parents=[common],
                       help="construct and decompose a witness for a measurement")
    p.add_argument("measurement", nargs="?", help="measurement file (omit with --builtin)")
    p.add_argument("--builtin", choices=["wbm", "wbm-prime"],
                   help="emit a builtin Bell-measurement witness instead")
    p.add_argument("--element", type=int, default=None, help="target element index")
    p.add_argument("--cut", type=str, default=None, help="bipartition side, e.g. '0' or '0,2'")
    p.add_argument("--basis", type=str, default=None, help="'standard' or a basis file")
    p.add_argument("--plot", action="store_true", help="render a coefficient heatmap")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("steer", parents=[common], help="swap-steering report for a scenario file")
    p.add_argument("scenario", help="steering scenario JSON")
    p.add_argument("--basis", type=str, default=None, help="override the scenario basis")
    p.add_argument("--sohs-checks", type=int, default=25,
                   help="random SOHS models for the sanity column")
    p.add_argument("--plot", action="store_true", help="render the sweep / per-outcome figure")
    p.set_defaults(func=cmd_steer)

    p = sub.add_parser("di", parents=[common], help="star-network DI report for a scenario file")
    p.add_argument("scenario", help="DI scenario JSON")
    p.add_argument("--restarts", type=int, default=None, help="setting-optimizer restarts")
    p.add_argument("--per-b-settings", choices=["on", "off"], default="on",
                   help="optimize settings per central outcome (default) or once")
    p.add_argument("--local-checks", type=int, default=25,
                   help="random local models for the sanity column")
    p.add_argument("--plot", action="store_true", help="render the per-outcome figure")
    p.set_defaults(func=cmd_di)

    p = sub.add_parser("oracle", parents=[common],
                       help="expose the brute-force bounds and searches directly")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    q = osub.add_parser("lhv", parents=[common], help="exact LHV bound of a Bell functional")
    q.add_argument("--functional", choices=["chsh", "mermin"], default="chsh")
    q.add_argument("--functional-file", type=str, default=None)
    q.set_defaults(func=cmd_oracle)
    q = osub.add_parser("product-min", parents=[common],
                        help="multi-start product-state minimization of a witness")
    q.add_argument("--witness", required=True, help="witness JSON file")
    q.add_argument("--restarts", type=int, default=1000)
    q.set_defaults(func=cmd_oracle)
    q = osub.add_parser("wbm-search", parents=[common],
                        help="randomized search for short Bell-measurement witnesses")
    q.add_argument("--candidates", type=int, default=300)
    q.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    _apply_thread_cap()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        from .serialize import FormatError

        if isinstance(exc, (FormatError, ValueError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        raise


if __name__ == "__main__":
    raise SystemExit(main())
